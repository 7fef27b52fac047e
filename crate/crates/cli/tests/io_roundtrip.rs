use proptest::prelude::*;
use szlab::io::{load_cifar10_bin, load_mnist_idx, write_cifar10_bin, write_mnist_idx};
use szlab_core::Dataset;

fn dataset(shape: [usize; 3], pixels: &[u8], labels: Vec<u8>) -> Dataset {
    let images = pixels.iter().map(|&p| f32::from(p) / 255.0).collect();
    Dataset::new(shape, images, labels, 10).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn idx_files_round_trip(
        rows in 1usize..6,
        cols in 1usize..6,
        labels in prop::collection::vec(0u8..10, 0..8),
        seed in any::<u64>(),
    ) {
        let n = labels.len() * rows * cols;
        let pixels: Vec<u8> = (0..n).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 24) as u8).collect();
        let data = dataset([rows, cols, 1], &pixels, labels);
        let dir = tempfile::tempdir().unwrap();
        let (images_path, labels_path) = (dir.path().join("img"), dir.path().join("lbl"));
        write_mnist_idx(&data, &images_path, &labels_path).unwrap();
        prop_assert_eq!(load_mnist_idx(&images_path, &labels_path).unwrap(), data);
    }

    #[test]
    fn cifar_records_round_trip(labels in prop::collection::vec(0u8..10, 1..4), seed in any::<u64>()) {
        let n = labels.len() * 32 * 32 * 3;
        let pixels: Vec<u8> = (0..n).map(|i| (seed.rotate_left(i as u32 % 64) ^ i as u64) as u8).collect();
        let data = dataset([32, 32, 3], &pixels, labels);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("batch.bin");
        write_cifar10_bin(&data, &path).unwrap();
        prop_assert_eq!(load_cifar10_bin(&[&path]).unwrap(), data);
    }
}

#[test]
fn label_count_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset([2, 2, 1], &[0; 8], vec![1, 2]);
    let (images_path, labels_path) = (dir.path().join("img"), dir.path().join("lbl"));
    write_mnist_idx(&data, &images_path, &labels_path).unwrap();
    let other = dataset([2, 2, 1], &[0; 4], vec![1]);
    write_mnist_idx(&other, &dir.path().join("unused"), &labels_path).unwrap();
    assert!(load_mnist_idx(&images_path, &labels_path).is_err());
}
