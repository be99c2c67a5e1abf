//! Writes a small gzipped IDX pair, loads it back and compares the IID and
//! non-IID partitions.
//!
//! cargo run --release --example idx_partition

use std::collections::BTreeSet;
use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use l2gdv::dataio::{encode_idx_images, encode_idx_labels, load_idx, partition_iid, partition_noniid, Dataset};

fn labels_per_client(ds: &Dataset, cells: &[Vec<usize>]) -> Vec<usize> {
    cells
        .iter()
        .map(|c| c.iter().map(|&i| ds.labels()[i]).collect::<BTreeSet<_>>().len())
        .collect()
}

fn main() -> l2gdv::Result<()> {
    // 10 classes, 4x4 "images" whose brightness encodes the label
    let m = 2000;
    let labels: Vec<u8> = (0..m).map(|j| (j % 10) as u8).collect();
    let pixels: Vec<u8> = labels.iter().flat_map(|&l| std::iter::repeat_n(l * 25, 16)).collect();

    let dir = tempfile::tempdir().expect("tempdir");
    let images = dir.path().join("images-idx3-ubyte.gz");
    let mut gz = GzEncoder::new(std::fs::File::create(&images).unwrap(), Compression::default());
    gz.write_all(&encode_idx_images(4, 4, &pixels)).unwrap();
    gz.finish().unwrap();
    let label_path = dir.path().join("labels-idx1-ubyte");
    std::fs::write(&label_path, encode_idx_labels(&labels)).unwrap();

    let ds = load_idx(&images, &label_path)?;
    println!("{} samples, d = {}, {} classes, class-9 pixel {}", ds.len(), ds.dim(), ds.class_count(), ds.row(9)[0]);

    let iid = partition_iid(&ds, 20, 0)?;
    let non = partition_noniid(&ds, 20, 2, 0)?;
    println!("iid     labels per client: {:?}", labels_per_client(&ds, iid.assignments()));
    println!("non-iid labels per client: {:?}", labels_per_client(&ds, non.assignments()));

    // 2000 does not split into 3·20 equal shards
    println!("{}", partition_noniid(&ds, 20, 3, 0).unwrap_err());
    Ok(())
}
