use echofuse::io::{decode_fmap, decode_pgm, encode_fmap, encode_pgm};
use echofuse_core::metrics::quantize;
use echofuse_core::Grid;
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..40, 1usize..40)
}

proptest! {
    #[test]
    fn fmap_round_trips_bit_for_bit((w, h) in dims(), seed in any::<u64>()) {
        let mut rng = echofuse_core::rng::SplitMix64::new(seed);
        let g = Grid::from_fn(w, h, |_, _| (rng.uniform(-1e6, 1e6)) as f32);
        let back = decode_fmap(&encode_fmap(&g)).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn pgm_round_trips_bytes(bytes in prop::collection::vec(any::<u8>(), 1..600), w in 1usize..30) {
        let h = bytes.len() / w;
        prop_assume!(h > 0);
        let px = &bytes[..w * h];
        let encoded = encode_pgm(w, h, px);
        let (dw, dh, back) = decode_pgm(&encoded).unwrap();
        prop_assert_eq!((dw, dh, back), (w, h, px));
    }

    #[test]
    fn quantizing_a_decoded_byte_is_identity(b in any::<u8>()) {
        prop_assert_eq!(quantize(b as f32 / 255.0), b);
    }

    #[test]
    fn truncated_files_are_rejected((w, h) in dims(), cut in 1usize..8) {
        let g = Grid::zeros(w, h);
        let f = encode_fmap(&g);
        prop_assert!(decode_fmap(&f[..f.len() - cut.min(f.len() - 1)]).is_err());
        let p = encode_pgm(w, h, &vec![7; w * h]);
        prop_assert!(decode_pgm(&p[..p.len() - cut.min(w * h)]).is_err());
    }
}
