use blockveil::cipher::{decrypt_image, encrypt_image, EncryptionKey};
use blockveil::keystream;
use blockveil::ImageU8;
use proptest::prelude::*;
use rand::RngCore;

const GOLDEN_BLOCK: &[u8] = include_bytes!("data/golden_block_seed42_m4.bin");

fn image_strategy() -> impl Strategy<Value = ImageU8> {
    (
        1usize..5,
        1usize..5,
        prop_oneof![Just(1usize), Just(2), Just(4)],
    )
        .prop_flat_map(|(bw, bh, m)| {
            proptest::collection::vec(any::<u8>(), bw * m * bh * m * 3)
                .prop_map(move |data| ImageU8::new(bw * m, bh * m, data).unwrap())
        })
}

#[test]
fn splitmix_reference_outputs() {
    let mut s = keystream::stream(0);
    assert_eq!(s.next_u64(), 0xE220_A839_7B1D_CDAF);
    assert_eq!(s.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    assert_eq!(s.next_u64(), 0x06C4_5D18_8009_454F);
}

#[test]
fn golden_block_matches_oracle() {
    let plain = ImageU8::new(4, 4, (0..48).collect()).unwrap();
    let key = EncryptionKey::derive(42, 4).unwrap();
    let enc = encrypt_image(&plain, &key).unwrap();
    assert_eq!(enc.data(), GOLDEN_BLOCK);
    assert_eq!(decrypt_image(&enc, &key).unwrap(), plain);
}

#[test]
fn every_block_uses_the_same_key() {
    // tile the golden block into a 3x2 grid of blocks
    let mut img = ImageU8::zeros(12, 8);
    let tile = ImageU8::new(4, 4, (0..48).collect()).unwrap();
    for by in 0..2 {
        for bx in 0..3 {
            for y in 0..4 {
                for x in 0..4 {
                    img.set_pixel(bx * 4 + x, by * 4 + y, tile.pixel(x, y));
                }
            }
        }
    }
    let enc = encrypt_image(&img, &EncryptionKey::derive(42, 4).unwrap()).unwrap();
    let golden = ImageU8::new(4, 4, GOLDEN_BLOCK.to_vec()).unwrap();
    for y in 0..8 {
        for x in 0..12 {
            assert_eq!(enc.pixel(x, y), golden.pixel(x % 4, y % 4));
        }
    }
}

#[test]
fn identity_key_is_a_no_op() {
    let img = ImageU8::new(8, 4, (0..96).map(|i| (i * 37) as u8).collect()).unwrap();
    let key = EncryptionKey::identity(4).unwrap();
    assert_eq!(encrypt_image(&img, &key).unwrap(), img);
}

#[test]
fn key_derivation_is_deterministic() {
    for seed in [0, 1, 42, u64::MAX] {
        for m in [1, 2, 4, 8] {
            let a = EncryptionKey::derive(seed, m).unwrap();
            let b = EncryptionKey::derive(seed, m).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.slots(), 6 * m * m);
        }
    }
    assert_ne!(
        EncryptionKey::derive(1, 4).unwrap(),
        EncryptionKey::derive(2, 4).unwrap()
    );
}

#[test]
fn single_block_cipher_is_a_bijection() {
    // M = 1 has 2^24 plaintexts; sample every value of the first channel
    // against fixed others and check no two collide.
    let key = EncryptionKey::derive(3, 1).unwrap();
    let mut seen = std::collections::HashSet::new();
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            let img = ImageU8::new(1, 1, vec![a, b, 77]).unwrap();
            assert!(seen.insert(encrypt_image(&img, &key).unwrap().into_data()));
        }
    }
}

#[test]
fn rejects_non_divisible_images() {
    let key = EncryptionKey::derive(0, 4).unwrap();
    assert!(encrypt_image(&ImageU8::zeros(6, 8), &key).is_err());
    assert!(decrypt_image(&ImageU8::zeros(8, 10), &key).is_err());
}

proptest! {
    #[test]
    fn round_trip(img in image_strategy(), seed in any::<u64>()) {
        let key = EncryptionKey::derive(seed, 4.min(img.width()).min(img.height())).unwrap();
        prop_assume!(img.check_divisible(key.block()).is_ok());
        let enc = encrypt_image(&img, &key).unwrap();
        prop_assert_eq!(decrypt_image(&enc, &key).unwrap(), img);
    }

    #[test]
    fn nibble_multiset_preserved_without_reversal(img in image_strategy(), seed in any::<u64>()) {
        let m = if img.width() % 4 == 0 && img.height() % 4 == 0 { 4 } else { 1 };
        let derived = EncryptionKey::derive(seed, m).unwrap();
        let key = EncryptionKey::from_parts(seed, m, vec![false; 6 * m * m], derived.perm().to_vec()).unwrap();
        let enc = encrypt_image(&img, &key).unwrap();
        let count = |im: &ImageU8| {
            let mut c = [0usize; 16];
            for &b in im.data() {
                c[(b >> 4) as usize] += 1;
                c[(b & 15) as usize] += 1;
            }
            c
        };
        prop_assert_eq!(count(&enc), count(&img));
    }

    #[test]
    fn flipping_a_byte_stays_in_its_block(seed in any::<u64>(), pos in 0usize..(16 * 16 * 3), bit in 0u8..8) {
        let key = EncryptionKey::derive(seed, 4).unwrap();
        let data: Vec<u8> = (0..16 * 16 * 3).map(|i| (i as u64).wrapping_mul(seed | 1) as u8).collect();
        let img = ImageU8::new(16, 16, data.clone()).unwrap();
        let mut flipped = data;
        flipped[pos] ^= 1 << bit;
        let a = encrypt_image(&img, &key).unwrap();
        let b = encrypt_image(&ImageU8::new(16, 16, flipped).unwrap(), &key).unwrap();
        let block_of = |i: usize| ((i / 3) / 16 / 4, (i / 3) % 16 / 4);
        let mut changed = 0;
        for (i, (x, y)) in a.data().iter().zip(b.data()).enumerate() {
            if x != y {
                prop_assert_eq!(block_of(i), block_of(pos));
                changed += 1;
            }
        }
        prop_assert!(changed > 0);
    }
}
