//! Datasets and client partitions.
//!
//! IDX files are the big-endian container used by MNIST: a 4-byte magic
//! (`0x00000803` for `u8` image tensors, `0x00000801` for `u8` label vectors),
//! one big-endian `u32` per dimension, then the raw bytes. Gzipped files are
//! detected by their header and decompressed transparently.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IdxError, Result};
use crate::objectives::{Client, FlProblem, LogisticClient};
use crate::rng;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    m: usize,
    d: usize,
    /// Row-major `m × d`.
    features: Vec<f64>,
    labels: Vec<u32>,
    class_count: u32,
}

impl Dataset {
    pub fn new(d: usize, features: Vec<f64>, labels: Vec<u32>, class_count: u32) -> Result<Self> {
        let m = labels.len();
        if m == 0 || d == 0 {
            return Err(Error::invalid("dataset needs m >= 1 and d >= 1"));
        }
        if class_count < 2 {
            return Err(Error::invalid("dataset needs at least two classes"));
        }
        if features.len() != m * d {
            return Err(Error::mismatch(m * d, features.len()));
        }
        if let Some(bad) = labels.iter().find(|l| **l >= class_count) {
            return Err(Error::invalid(format!("label {bad} outside [0, {class_count})")));
        }
        Ok(Self {
            m,
            d,
            features,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn class_count(&self) -> u32 {
        self.class_count
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.m {
                return Err(Error::invalid(format!("index {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(self.d, features, labels, self.class_count)
    }

    /// Appends a constant-one feature column (intercept).
    pub fn with_bias(&self) -> Dataset {
        let mut features = Vec::with_capacity(self.m * (self.d + 1));
        for i in 0..self.m {
            features.extend_from_slice(self.row(i));
            features.push(1.0);
        }
        Dataset {
            m: self.m,
            d: self.d + 1,
            features,
            labels: self.labels.clone(),
            class_count: self.class_count,
        }
    }

    /// 0/1 targets: labels as-is for two classes, one-vs-rest otherwise.
    pub fn binary_targets(&self, positive_class: Option<u32>) -> Result<Vec<f64>> {
        match positive_class {
            Some(c) if c < self.class_count => {
                Ok(self.labels.iter().map(|l| f64::from(u8::from(*l == c))).collect())
            }
            Some(c) => Err(Error::invalid(format!("positive class {c} out of range"))),
            None if self.class_count == 2 => Ok(self.labels.iter().map(|l| f64::from(*l)).collect()),
            None => Err(Error::invalid("multiclass data needs a positive class for one-vs-rest")),
        }
    }

    /// Fraction of samples whose binary target is predicted by `sign(xᵀw)`.
    pub fn binary_accuracy(&self, w: &[f64], positive_class: Option<u32>) -> Result<f64> {
        if w.len() != self.d {
            return Err(Error::mismatch(self.d, w.len()));
        }
        let targets = self.binary_targets(positive_class)?;
        Ok(crate::objectives::logistic_accuracy(w, self.d, &self.features, &targets))
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let chunk = bytes.get(at..at + 4).ok_or(IdxError::Truncated {
        expected: at + 4,
        found: bytes.len(),
    })?;
    Ok(u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(IdxError::BadMagic { expected, found }.into());
    }
    Ok(())
}

/// Parses an IDX `u8` image tensor into `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    check_magic(bytes, IDX_IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            expected,
            found: bytes.len(),
        }
        .into());
    }
    Ok((count, rows, cols, &bytes[16..expected]))
}

/// Parses an IDX `u8` label vector.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    check_magic(bytes, IDX_LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            expected,
            found: bytes.len(),
        }
        .into());
    }
    Ok(&bytes[8..expected])
}

/// Loads an image/label IDX pair, scaling pixels to `[0, 1]`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let image_bytes = read_maybe_gz(images_path.as_ref())?;
    let label_bytes = read_maybe_gz(labels_path.as_ref())?;
    let (count, rows, cols, pixels) = parse_idx_images(&image_bytes)?;
    let labels = parse_idx_labels(&label_bytes)?;
    if labels.len() != count {
        return Err(IdxError::CountMismatch {
            images: count,
            labels: labels.len(),
        }
        .into());
    }
    let features = pixels.iter().map(|p| f64::from(*p) / 255.0).collect();
    let labels: Vec<u32> = labels.iter().map(|l| u32::from(*l)).collect();
    let class_count = labels.iter().copied().max().map_or(2, |m| (m + 1).max(2));
    Dataset::new(rows * cols, features, labels, class_count)
}

/// Encodes an IDX `u8` image tensor.
pub fn encode_idx_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len() % (rows * cols), 0, "pixel buffer is not a whole number of images");
    let count = pixels.len() / (rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IDX_IMAGES_MAGIC, count as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

/// Encodes an IDX `u8` label vector.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Class-conditional unit Gaussians whose means are pairwise `separation`
/// apart and centred at the origin.
///
/// Two classes sit at `±(separation/2)·e_1`; more classes use scaled, centred
/// basis vectors and need `classes ≤ d`. Sample `j` belongs to class
/// `j mod classes`.
pub fn synth_gaussian_classes(
    m: usize,
    d: usize,
    classes: u32,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 || m < classes as usize {
        return Err(Error::invalid(format!("need m >= classes >= 2, got m={m}, classes={classes}")));
    }
    if d == 0 {
        return Err(Error::invalid("need d >= 1"));
    }
    if classes > 2 && classes as usize > d {
        return Err(Error::invalid("more than two classes need classes <= d"));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::invalid("separation must be finite and >= 0"));
    }
    let k = classes as usize;
    let means: Vec<Vec<f64>> = if k == 2 {
        [-0.5, 0.5]
            .iter()
            .map(|s| {
                let mut v = vec![0.0; d];
                v[0] = s * separation;
                v
            })
            .collect()
    } else {
        let scale = separation / std::f64::consts::SQRT_2;
        (0..k)
            .map(|c| {
                (0..d)
                    .map(|j| {
                        let e = if j == c { 1.0 } else { 0.0 };
                        let centre = if j < k { 1.0 / k as f64 } else { 0.0 };
                        scale * (e - centre)
                    })
                    .collect()
            })
            .collect()
    };
    let mut rng = rng::stream(seed, rng::DATA);
    let mut features = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for j in 0..m {
        let c = j % k;
        for mean in &means[c] {
            features.push(mean + rng.sample::<f64, _>(StandardNormal));
        }
        labels.push(c as u32);
    }
    Dataset::new(d, features, labels, classes)
}

/// Disjoint client index lists into a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignments: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(assignments: Vec<Vec<usize>>) -> Result<Self> {
        if assignments.is_empty() || assignments.iter().any(Vec::is_empty) {
            return Err(Error::invalid("every client needs at least one sample"));
        }
        let mut seen = std::collections::HashSet::new();
        for &i in assignments.iter().flatten() {
            if !seen.insert(i) {
                return Err(Error::invalid(format!("sample {i} assigned twice")));
            }
        }
        Ok(Self { assignments })
    }

    pub fn clients(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    pub fn client(&self, i: usize) -> &[usize] {
        &self.assignments[i]
    }
}

/// Shuffles and splits as evenly as possible; the first `m mod n` clients get
/// one extra sample.
pub fn partition_iid(ds: &Dataset, n: usize, seed: u64) -> Result<Partition> {
    if n == 0 || n > ds.len() {
        return Err(Error::invalid(format!("cannot split {} samples across {n} clients", ds.len())));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut rng::stream(seed, rng::PARTITION));
    let base = ds.len() / n;
    let extra = ds.len() % n;
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let size = base + usize::from(i < extra);
        out.push(idx[start..start + size].to_vec());
        start += size;
    }
    Partition::new(out)
}

/// Sort-by-label shard partition: sort samples by label, cut them into
/// `n · shards_per_client` equal shards and deal `shards_per_client` random
/// shards to each client.
pub fn partition_noniid(
    ds: &Dataset,
    n: usize,
    shards_per_client: usize,
    seed: u64,
) -> Result<Partition> {
    let shards = n * shards_per_client;
    if shards == 0 || !ds.len().is_multiple_of(shards) {
        return Err(Error::Indivisible {
            samples: ds.len(),
            shards,
        });
    }
    let shard_size = ds.len() / shards;
    let mut by_label: Vec<usize> = (0..ds.len()).collect();
    by_label.sort_by_key(|&i| ds.labels[i]);
    let mut order: Vec<usize> = (0..shards).collect();
    order.shuffle(&mut rng::stream(seed, rng::PARTITION));
    let assignments = order
        .chunks_exact(shards_per_client)
        .map(|mine| {
            mine.iter()
                .flat_map(|&s| by_label[s * shard_size..(s + 1) * shard_size].iter().copied())
                .collect()
        })
        .collect();
    Partition::new(assignments)
}

/// One binary logistic client per partition cell.
pub fn logistic_problem(
    ds: &Dataset,
    partition: &Partition,
    l2: f64,
    lambda: f64,
    positive_class: Option<u32>,
) -> Result<FlProblem> {
    let targets = ds.binary_targets(positive_class)?;
    let clients = partition
        .assignments()
        .iter()
        .map(|idx| {
            let mut features = Vec::with_capacity(idx.len() * ds.d);
            let mut labels = Vec::with_capacity(idx.len());
            for &i in idx {
                features.extend_from_slice(ds.row(i));
                labels.push(targets[i]);
            }
            LogisticClient::new(ds.d, features, labels, l2).map(Client::from)
        })
        .collect::<Result<Vec<_>>>()?;
    FlProblem::new(clients, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(m: usize, classes: u32) -> Dataset {
        let labels: Vec<u32> = (0..m as u32).map(|j| j % classes).collect();
        Dataset::new(1, vec![0.0; m], labels, classes).unwrap()
    }

    #[test]
    fn idx_round_trip_and_scaling() {
        let pixels: Vec<u8> = (0..2 * 2 * 3).map(|v| (v * 20) as u8).collect();
        let images = encode_idx_images(2, 2, &pixels);
        let labels = encode_idx_labels(&[3, 7, 9]);
        let (count, rows, cols, px) = parse_idx_images(&images).unwrap();
        assert_eq!((count, rows, cols), (3, 2, 2));
        assert_eq!(px, pixels.as_slice());
        assert_eq!(parse_idx_labels(&labels).unwrap(), &[3, 7, 9]);
        assert_eq!(&images[..4], &[0, 0, 8, 3]);
    }

    #[test]
    fn idx_errors_are_distinct() {
        let mut images = encode_idx_images(2, 2, &[0; 8]);
        images[3] = 0x01;
        assert!(matches!(
            parse_idx_images(&images),
            Err(Error::Idx(IdxError::BadMagic { expected: IDX_IMAGES_MAGIC, found: 0x0801 }))
        ));
        let images = encode_idx_images(2, 2, &[0; 8]);
        assert!(matches!(
            parse_idx_images(&images[..images.len() - 1]),
            Err(Error::Idx(IdxError::Truncated { .. }))
        ));
        assert!(matches!(parse_idx_labels(&[0, 0]), Err(Error::Idx(IdxError::Truncated { .. }))));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = synth_gaussian_classes(50, 3, 2, 4.0, 1).unwrap();
        let b = synth_gaussian_classes(50, 3, 2, 4.0, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_gaussian_classes(50, 3, 2, 4.0, 2).unwrap());
        assert!(synth_gaussian_classes(1, 3, 2, 4.0, 1).is_err());
        assert!(synth_gaussian_classes(10, 2, 3, 4.0, 1).is_err());
    }

    #[test]
    fn multiclass_means_are_equidistant() {
        let ds = synth_gaussian_classes(30_000, 4, 3, 6.0, 5).unwrap();
        let mut means = vec![vec![0.0; 4]; 3];
        let mut counts = [0usize; 3];
        for i in 0..ds.len() {
            let c = ds.labels()[i] as usize;
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(ds.row(i)) {
                *m += v;
            }
        }
        for (m, c) in means.iter_mut().zip(counts) {
            m.iter_mut().for_each(|v| *v /= c as f64);
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let dist: f64 = means[a].iter().zip(&means[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!((dist - 6.0).abs() < 0.1, "pair ({a},{b}) at {dist}");
        }
    }

    #[test]
    fn iid_single_client_owns_everything() {
        let ds = labelled(17, 2);
        let p = partition_iid(&ds, 1, 0).unwrap();
        let mut all = p.client(0).to_vec();
        all.sort_unstable();
        assert_eq!(all, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn iid_is_an_exact_partition() {
        let ds = labelled(103, 3);
        let p = partition_iid(&ds, 10, 4).unwrap();
        let mut all: Vec<usize> = p.assignments().iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        assert!(p.assignments().iter().all(|a| a.len() == 10 || a.len() == 11));
    }

    #[test]
    fn noniid_mnist_shape() {
        let ds = labelled(60_000, 10);
        let p = partition_noniid(&ds, 100, 2, 0).unwrap();
        assert_eq!(p.clients(), 100);
        assert!(p.assignments().iter().all(|a| a.len() == 600));
        let narrow = p
            .assignments()
            .iter()
            .filter(|a| {
                let mut seen: Vec<u32> = a.iter().map(|&i| ds.labels()[i]).collect();
                seen.sort_unstable();
                seen.dedup();
                seen.len() <= 2
            })
            .count();
        assert!(narrow >= 95);
        let mut all: Vec<usize> = p.assignments().iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..60_000).collect::<Vec<_>>());
    }

    #[test]
    fn noniid_rejects_indivisible() {
        let ds = labelled(101, 2);
        assert!(matches!(partition_noniid(&ds, 10, 2, 0), Err(Error::Indivisible { .. })));
    }

    #[test]
    fn binary_targets() {
        let ds = labelled(6, 3);
        assert!(ds.binary_targets(None).is_err());
        assert_eq!(ds.binary_targets(Some(1)).unwrap(), vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        let two = labelled(4, 2);
        assert_eq!(two.binary_targets(None).unwrap(), vec![0.0, 1.0, 0.0, 1.0]);
    }
}
