use blockveil::dataset::{
    encode_cifar, export_grid, parse_cifar, parse_ppm, read_cifar10, read_cifar100, read_ppm,
    tile_grid, transform_cifar_bytes, write_cifar, write_ppm, CifarFormat, LabeledDataset,
};
use blockveil::scheme::{KeySpec, Scheme};
use blockveil::{Error, ImageU8};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn random_dataset(n: usize, classes: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (0..n)
        .map(|_| ImageU8::new(32, 32, (0..3072).map(|_| rng.random()).collect()).unwrap())
        .collect();
    let labels = (0..n).map(|_| rng.random_range(0..classes) as u8).collect();
    LabeledDataset::new(images, labels, classes).unwrap()
}

#[test]
fn cifar10_file_round_trip() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("batch.bin");
    let ds = random_dataset(25, 10, 1);
    write_cifar(&ds, &path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 25 * 3073);
    assert_eq!(read_cifar10(&path).unwrap(), ds);
}

#[test]
fn cifar100_file_round_trip() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("train.bin");
    let ds = random_dataset(25, 100, 2);
    write_cifar(&ds, &path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 25 * 3074);
    assert_eq!(read_cifar100(&path).unwrap(), ds);
}

#[test]
fn cifar_layout_is_planar() {
    let mut rec = vec![7u8];
    rec.extend(std::iter::repeat_n(10, 1024));
    rec.extend(std::iter::repeat_n(20, 1024));
    rec.extend(std::iter::repeat_n(30, 1024));
    rec[1 + 5 * 32 + 3] = 99; // red at (3, 5)
    let ds = parse_cifar(&rec, CifarFormat::Cifar10).unwrap();
    assert_eq!(ds.labels, vec![7]);
    assert_eq!(ds.images[0].pixel(3, 5), [99, 20, 30]);
    assert_eq!(ds.images[0].pixel(0, 0), [10, 20, 30]);
    assert_eq!(encode_cifar(&ds).unwrap(), rec);
}

#[test]
fn cifar100_keeps_fine_label() {
    let mut rec = vec![3u8, 87];
    rec.extend(vec![0; 3072]);
    let ds = parse_cifar(&rec, CifarFormat::Cifar100).unwrap();
    assert_eq!(ds.labels, vec![87]);
    assert_eq!(ds.num_classes, 100);
    let back = encode_cifar(&ds).unwrap();
    assert_eq!(&back[..2], &[0, 87]);
}

#[test]
fn malformed_batches_rejected() {
    assert!(parse_cifar(&[], CifarFormat::Cifar10).unwrap().is_empty());
    assert!(matches!(
        parse_cifar(&[0; 3072], CifarFormat::Cifar10),
        Err(Error::BadLength { .. })
    ));
    assert!(matches!(
        parse_cifar(&[0; 3073], CifarFormat::Cifar100),
        Err(Error::BadLength { .. })
    ));
    let mut rec = vec![10u8];
    rec.extend(vec![0; 3072]);
    assert!(matches!(
        parse_cifar(&rec, CifarFormat::Cifar10),
        Err(Error::BadLabel {
            index: 0,
            label: 10,
            ..
        })
    ));
    let dir = TempDir::new().unwrap();
    assert!(matches!(
        read_cifar10(dir.path().join("nope.bin")),
        Err(Error::Io(_))
    ));
}

#[test]
fn full_batch_encrypt_decrypt_is_identity() {
    let bytes = encode_cifar(&random_dataset(10_000, 10, 3)).unwrap();
    assert_eq!(bytes.len(), 30_730_000);
    for scheme in [Scheme::Proposed, Scheme::Naive, Scheme::Catmap] {
        let key = KeySpec::new(scheme, 11, 4).resolve(32).unwrap();
        let enc = transform_cifar_bytes(&bytes, CifarFormat::Cifar10, |i| key.encrypt(i)).unwrap();
        assert_ne!(enc, bytes);
        let dec = transform_cifar_bytes(&enc, CifarFormat::Cifar10, |i| key.decrypt(i)).unwrap();
        assert!(dec == bytes, "{scheme} batch round trip differs");
    }
}

#[test]
fn ppm_header_and_round_trip() {
    let img = ImageU8::new(32, 32, (0..3072).map(|i| (i % 256) as u8).collect()).unwrap();
    let mut buf = Vec::new();
    write_ppm(&img, &mut buf).unwrap();
    assert!(buf.starts_with(b"P6\n32 32\n255\n"));
    assert_eq!(buf.len(), 13 + 3072);
    assert_eq!(parse_ppm(&buf).unwrap(), img);

    let mut commented = b"P6\n# made by hand\n32 32\n255\n".to_vec();
    commented.extend_from_slice(img.data());
    assert_eq!(parse_ppm(&commented).unwrap(), img);

    assert!(parse_ppm(b"P3\n1 1\n255\n0 0 0").is_err());
    assert!(parse_ppm(b"P6\n2 2\n255\n\x00\x00").is_err());
}

#[test]
fn grid_sheet_layout() {
    let tiles: Vec<ImageU8> = (0..5u8)
        .map(|n| ImageU8::new(2, 2, vec![n * 10; 12]).unwrap())
        .collect();
    let sheet = tile_grid(&tiles, 3).unwrap();
    assert_eq!((sheet.width(), sheet.height()), (6, 4));
    assert_eq!(sheet.pixel(4, 1), [20; 3]);
    assert_eq!(sheet.pixel(2, 3), [40; 3]);
    assert_eq!(sheet.pixel(5, 3), [0; 3]);

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("grid.ppm");
    export_grid(&tiles, 3, &path).unwrap();
    assert_eq!(read_ppm(&path).unwrap(), sheet);
    assert!(tile_grid(&[], 3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn encode_parse_identity(n in 0usize..6, seed in any::<u64>(), hundred in any::<bool>()) {
        let ds = random_dataset(n, if hundred { 100 } else { 10 }, seed);
        let format = if hundred { CifarFormat::Cifar100 } else { CifarFormat::Cifar10 };
        let bytes = encode_cifar(&ds).unwrap();
        prop_assert_eq!(parse_cifar(&bytes, format).unwrap(), ds);
    }
}
