use echofuse_core::boundary::{detect_boundaries, vertical_gradient, BoundaryParams};
use echofuse_core::compound::{blend_layer, compound_average, phi, select_view_layer, weighted_average_layer};
use echofuse_core::confidence::{attenuation_intensity_confidence, AttenuationParams};
use echofuse_core::metrics::{dice, otsu_threshold};
use echofuse_core::pyramid::{collapse_unclamped, laplacian_pyramid, Kernel};
use echofuse_core::warp::{warp_to_common, warp_view, RigidTransform2D, ViewInput};
use echofuse_core::{Grid, Image, Mask};
use proptest::prelude::*;

fn grid(w: usize, h: usize) -> impl Strategy<Value = Grid> {
    prop::collection::vec(0.0f32..=1.0, w * h).prop_map(move |d| Grid::new(w, h, d).unwrap())
}

fn sized_grid(min: usize, max: usize) -> impl Strategy<Value = Grid> {
    (min..=max, min..=max).prop_flat_map(|(w, h)| grid(w, h))
}

fn mask(w: usize, h: usize) -> impl Strategy<Value = Mask> {
    prop::collection::vec(any::<bool>(), w * h).prop_map(move |d| Mask::new(w, h, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pyramid_round_trip(g in sized_grid(16, 48), levels in 2usize..=4) {
        let pyr = laplacian_pyramid(&g, levels, Kernel::Binomial5).unwrap();
        prop_assert!(collapse_unclamped(&pyr).unwrap().max_abs_diff(&g) < 1e-5);
    }

    #[test]
    fn pyramid_round_trip_three_tap(g in sized_grid(8, 40)) {
        let pyr = laplacian_pyramid(&g, 3, Kernel::Binomial3).unwrap();
        prop_assert!(collapse_unclamped(&pyr).unwrap().max_abs_diff(&g) < 1e-5);
    }

    #[test]
    fn gradient_grows_with_alpha(g in sized_grid(2, 20), a in 1usize..10) {
        let img = Image::from_grid(g).unwrap();
        let small = vertical_gradient(&img, a);
        let large = vertical_gradient(&img, a + 1);
        for (s, l) in small.0.data().iter().zip(large.0.data()) {
            prop_assert!(*s >= 0.0 && s <= l);
        }
    }

    #[test]
    fn attenuation_is_monotone(g in sized_grid(1, 24), decay in 0.0f64..0.1, absorption in 0.0f64..1.0, gain in 1.0f32..3.0) {
        let params = AttenuationParams { decay, absorption };
        let img = Image::from_grid(g.clone()).unwrap();
        let c = attenuation_intensity_confidence(&img, params).unwrap();
        let (w, h) = c.dims();
        for x in 0..w {
            prop_assert_eq!(c.get(x, 0), 1.0);
            for y in 1..h {
                prop_assert!(c.get(x, y) <= c.get(x, y - 1));
            }
        }
        let brighter = Image::from_grid_clamped(&g.map(|v| v * gain));
        let cb = attenuation_intensity_confidence(&brighter, params).unwrap();
        for (b, o) in cb.grid().data().iter().zip(c.grid().data()) {
            prop_assert!(b <= o);
        }
    }

    #[test]
    fn boundaries_are_bright(g in sized_grid(4, 40)) {
        let img = Image::from_grid(g).unwrap();
        let p = BoundaryParams { min_size: 3, ..BoundaryParams::default() };
        let m = detect_boundaries(&img, &p).unwrap();
        for (i, &on) in m.data().iter().enumerate() {
            if on {
                prop_assert!(img.data()[i] as f64 * 255.0 > p.t1);
            }
        }
    }

    #[test]
    fn identity_warp_is_identity(g in sized_grid(1, 20)) {
        let (w, h) = g.dims();
        let view = ViewInput::new(Image::from_grid(g).unwrap(), RigidTransform2D::IDENTITY);
        let (out, valid) = warp_to_common(&view, w, h).unwrap();
        prop_assert_eq!(&out, &view.image);
        prop_assert_eq!(valid.count(), w * h);
    }

    #[test]
    fn integer_translation_shifts(g in sized_grid(3, 16), dx in -2i32..=2, dy in -2i32..=2) {
        let (w, h) = g.dims();
        let view = ViewInput::new(Image::from_grid(g.clone()).unwrap(), RigidTransform2D::translation(dx as f64, dy as f64));
        let (out, valid) = warp_to_common(&view, w, h).unwrap();
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                let (sx, sy) = (x - dx, y - dy);
                let inside = sx >= 0 && sy >= 0 && sx < w as i32 && sy < h as i32;
                prop_assert_eq!(valid.get(x as usize, y as usize), inside);
                if inside {
                    prop_assert_eq!(out.get(x as usize, y as usize), g.get(sx as usize, sy as usize));
                }
            }
        }
    }

    #[test]
    fn validity_grows_with_the_source(w in 3usize..12, h in 3usize..12, theta in -1.0f64..1.0, extra in 1usize..4) {
        let t = RigidTransform2D::new(theta, 2.0, 1.0);
        let small = ViewInput::new(Image::filled(w, h, 0.5), t);
        let large = ViewInput::new(Image::filled(w + extra, h + extra, 0.5), t);
        let (_, vs) = warp_to_common(&small, 16, 16).unwrap();
        let (_, vl) = warp_to_common(&large, 16, 16).unwrap();
        for (a, b) in vs.data().iter().zip(vl.data()) {
            prop_assert!(!a || *b);
        }
    }

    #[test]
    fn phi_is_symmetric_and_bounded(levels in 2usize..12) {
        for k in 1..=levels {
            let v = phi(k, levels).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0);
            prop_assert_eq!(v, phi(levels + 1 - k, levels).unwrap());
        }
    }

    #[test]
    fn blend_stays_between_inputs(s in grid(4, 3), a in grid(4, 3), w in 0.0f64..=1.0) {
        let b = blend_layer(&s, &a, w).unwrap();
        for i in 0..12 {
            let (lo, hi) = (s.data()[i].min(a.data()[i]), s.data()[i].max(a.data()[i]));
            prop_assert!(b.data()[i] >= lo - 1e-6 && b.data()[i] <= hi + 1e-6);
        }
    }

    #[test]
    fn weighted_average_stays_in_range(l1 in grid(5, 4), l2 in grid(5, 4), c1 in grid(5, 4), c2 in grid(5, 4), v1 in mask(5, 4), v2 in mask(5, 4)) {
        let out = weighted_average_layer(&[&l1, &l2], &[&c1, &c2], &[&v1, &v2]).unwrap();
        for i in 0..20 {
            let vals: Vec<f32> = [(&l1, &v1), (&l2, &v2)].iter().filter(|(_, v)| v.data()[i]).map(|(l, _)| l.data()[i]).collect();
            if vals.is_empty() {
                prop_assert_eq!(out.data()[i], 0.0);
            } else {
                let lo = vals.iter().cloned().fold(f32::INFINITY, f32::min);
                let hi = vals.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
                prop_assert!(out.data()[i] >= lo - 1e-6 && out.data()[i] <= hi + 1e-6);
            }
        }
    }

    #[test]
    fn selection_only_picks_valid_views(g1 in grid(6, 5), g2 in grid(6, 5), s1 in grid(6, 5), s2 in grid(6, 5), v1 in mask(6, 5), v2 in mask(6, 5)) {
        let sel = select_view_layer(&[&g1, &g2], &[&s1, &s2], &[&v1, &v2], 0.05).unwrap();
        for y in 0..5 {
            for x in 0..6 {
                match sel.get(x, y) {
                    None => prop_assert!(!v1.get(x, y) && !v2.get(x, y)),
                    Some(0) => prop_assert!(v1.get(x, y)),
                    Some(1) => prop_assert!(v2.get(x, y)),
                    Some(_) => prop_assert!(false),
                }
            }
        }
    }

    #[test]
    fn average_of_copies_is_the_copy(g in sized_grid(2, 12), n in 2usize..4) {
        let (w, h) = g.dims();
        let view = ViewInput::new(Image::from_grid(g).unwrap(), RigidTransform2D::IDENTITY);
        let warped = warp_view(&view, w, h).unwrap();
        let out = compound_average(&vec![warped; n]).unwrap();
        prop_assert!(out.grid().max_abs_diff(view.image.grid()) < 1e-6);
    }

    #[test]
    fn dice_is_symmetric(a in mask(7, 6), b in mask(7, 6)) {
        let d = dice(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, dice(&b, &a).unwrap());
        prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn otsu_ignores_pixel_order(mut values in prop::collection::vec(0.0f32..=1.0, 2..200)) {
        let before = otsu_threshold(&values).ok();
        values.reverse();
        prop_assert_eq!(before, otsu_threshold(&values).ok());
    }
}
