//! Randomised invariants.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphere_wavelets::denoise::threshold_with;
use sphere_wavelets::io::{decode_flm, decode_map, encode_flm, encode_map};
use sphere_wavelets::mollweide::{decode_ppm, encode_ppm, project, unproject, Image};
use sphere_wavelets::tiling::{j_max, BumpCutoff};
use sphere_wavelets::{
    BandLimit, HarmonicCoeffs, KernelFamily, SamplingScheme, ShtPlan, SphereMap, TilingParams,
    TransformConfig, WaveletKernels, WaveletTransform,
};

fn bl(l: usize) -> BandLimit {
    BandLimit::new(l).unwrap()
}

fn scheme() -> impl Strategy<Value = SamplingScheme> {
    prop_oneof![Just(SamplingScheme::GL), Just(SamplingScheme::MW)]
}

fn family() -> impl Strategy<Value = KernelFamily> {
    prop_oneof![
        Just(KernelFamily::ScaleDiscretised),
        Just(KernelFamily::Needlet),
        Just(KernelFamily::BSpline),
    ]
}

fn lambda() -> impl Strategy<Value = f64> {
    prop_oneof![Just(2.0), Just(3.0), 1.2f64..4.0]
}

/// Random configuration with `J0 < J`.
fn config() -> impl Strategy<Value = TransformConfig> {
    (4usize..40, lambda(), family(), scheme(), any::<bool>())
        .prop_flat_map(|(l, lam, fam, sch, multi)| {
            let jmax = j_max(l, lam).unwrap();
            (Just((l, lam, fam, sch, multi)), 0..jmax.max(1))
        })
        .prop_filter("J0 < J", |((l, lam, ..), j0)| {
            *j0 < j_max(*l, *lam).unwrap()
        })
        .prop_map(|((l, lam, fam, sch, multi), j0)| {
            TransformConfig::new(l, lam, j0)
                .with_family(fam)
                .with_scheme(sch)
                .with_multires(multi)
        })
}

fn random_map(plan: &ShtPlan, real: bool, seed: u64) -> (HarmonicCoeffs, SphereMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flm = HarmonicCoeffs::gaussian(plan.grid().band_limit(), 1.0, real, &mut rng);
    let map = plan.synthesize(&flm, real).unwrap();
    (flm, map)
}

fn max_diff(a: &SphereMap, b: &SphereMap) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sht_round_trip(l in 1usize..48, sch in scheme(), real in any::<bool>(), seed in any::<u64>()) {
        let plan = ShtPlan::for_scheme(sch, bl(l));
        let (flm, map) = random_map(&plan, real, seed);
        let back = plan.analyze(&map).unwrap();
        prop_assert!(flm.max_abs_diff(&back) < 1e-10, "{}", flm.max_abs_diff(&back));
        if real {
            prop_assert!(back.is_conjugate_symmetric(1e-10));
        }
    }

    #[test]
    fn wavelet_round_trip(cfg in config(), real in any::<bool>(), seed in any::<u64>()) {
        let t = WaveletTransform::new(cfg).unwrap();
        let (flm, map) = random_map(t.plan(), real, seed);
        let decomp = t.analysis(&map).unwrap();
        prop_assert_eq!(decomp.is_real(), real);
        let rec = t.synthesis(&decomp).unwrap();
        prop_assert_eq!(rec.is_real(), real);
        let err = flm.max_abs_diff(&t.plan().analyze(&rec).unwrap());
        prop_assert!(err < 1e-10, "{:?}: {}", cfg, err);
        prop_assert!(max_diff(&rec, &map) < 1e-10);
    }

    #[test]
    fn harmonic_round_trip(cfg in config(), seed in any::<u64>()) {
        let t = WaveletTransform::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flm = HarmonicCoeffs::gaussian(bl(cfg.band_limit), 1.0, false, &mut rng);
        let rec = t.synthesis_harmonic(&t.analysis_harmonic(&flm).unwrap()).unwrap();
        prop_assert!(flm.max_abs_diff(&rec) < 1e-12);
    }

    #[test]
    fn analysis_is_linear(cfg in config(), a in -3.0f64..3.0, seed in any::<u64>()) {
        let t = WaveletTransform::new(cfg).unwrap();
        let (_, f) = random_map(t.plan(), false, seed);
        let (_, g) = random_map(t.plan(), false, seed ^ 0x5555);
        let combo: Vec<Complex64> = f.values().iter().zip(g.values()).map(|(x, y)| x * a + y).collect();
        let h = SphereMap::from_complex(f.grid().clone(), combo).unwrap();
        let (df, dg, dh) = (t.analysis(&f).unwrap(), t.analysis(&g).unwrap(), t.analysis(&h).unwrap());
        let pairs = std::iter::once((&df.scaling, &dg.scaling, &dh.scaling))
            .chain(df.wavelets.iter().zip(&dg.wavelets).zip(&dh.wavelets).map(|((x, y), z)| (x, y, z)));
        for (x, y, z) in pairs {
            for ((u, v), w) in x.values().iter().zip(y.values()).zip(z.values()) {
                prop_assert!((u * a + v - w).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn multires_budget(cfg in config()) {
        let t = WaveletTransform::new(cfg.with_multires(true)).unwrap();
        let grid = t.plan().grid();
        let (_, map) = random_map(t.plan(), true, 3);
        let decomp = t.analysis(&map).unwrap();
        let n_scales = t.kernels().j_max() - t.kernels().j_min() + 1;
        prop_assert!(decomp.total_samples() <= (n_scales + 1) * grid.len());
        prop_assert!(decomp.total_samples() < (n_scales + 2) * cfg.band_limit * (2 * cfg.band_limit - 1));
    }

    #[test]
    fn threshold_is_idempotent(cfg in config(), thr in 0.0f64..2.0, seed in any::<u64>()) {
        let t = WaveletTransform::new(cfg).unwrap();
        let (_, map) = random_map(t.plan(), true, seed);
        let decomp = t.analysis(&map).unwrap();
        let thresholds = vec![thr; decomp.wavelets.len()];
        let once = threshold_with(&decomp, &thresholds).unwrap();
        let twice = threshold_with(&once, &thresholds).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(&once.scaling, &decomp.scaling);
        for (w, orig) in once.wavelets.iter().zip(&decomp.wavelets) {
            for (v, o) in w.values().iter().zip(orig.values()) {
                prop_assert!(*v == *o || (*v == Complex64::new(0.0, 0.0) && o.norm() < thr));
            }
        }
    }

    #[test]
    fn kernels_are_bounded_and_admissible(l in 2usize..200, lam in lambda(), fam in family(), j0 in 0usize..4) {
        let jmax = j_max(l, lam).unwrap();
        prop_assume!(j0 < jmax);
        let k = WaveletKernels::new(TilingParams::new(lam, j0, l).unwrap(), fam).unwrap();
        prop_assert!(k.admissibility_residual() < 1e-12);
        for v in k.phi().iter().chain(k.psis().iter().flatten()) {
            prop_assert!(v.is_finite() && *v >= 0.0);
        }
    }

    #[test]
    fn j_max_is_smallest_covering_power(l in 3usize..100_000, lam in 1.1f64..8.0) {
        let j = j_max(l, lam).unwrap() as i32;
        let target = (l - 1) as f64;
        prop_assert!(lam.powi(j) >= target * (1.0 - 1e-12));
        prop_assert!(j == 0 || lam.powi(j - 1) < target);
    }

    #[test]
    fn cutoff_is_monotone(lam in 1.1f64..5.0, a in 0.0f64..1.5, b in 0.0f64..1.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for c in [BumpCutoff::scale_discretised(lam).unwrap(), BumpCutoff::needlet(lam).unwrap()] {
            let (klo, khi) = (c.k(lo), c.k(hi));
            prop_assert!((0.0..=1.0).contains(&klo) && (0.0..=1.0).contains(&khi));
            prop_assert!(klo >= khi);
        }
    }

    #[test]
    fn map_file_round_trip(l in 1usize..24, sch in scheme(), real in any::<bool>(), seed in any::<u64>()) {
        let plan = ShtPlan::for_scheme(sch, bl(l));
        let (flm, map) = random_map(&plan, real, seed);
        let bytes = encode_map(&map).unwrap();
        let back = decode_map(&bytes).unwrap();
        prop_assert_eq!(&back, &map);
        prop_assert_eq!(encode_map(&back).unwrap(), bytes);
        let fb = encode_flm(&flm).unwrap();
        prop_assert_eq!(decode_flm(&fb).unwrap(), flm);
    }

    #[test]
    fn ppm_round_trip(w in 1usize..40, h in 1usize..40, seed in any::<u8>()) {
        let mut img = Image::new(w, h, [seed, 0, 255 - seed]).unwrap();
        let bytes = encode_ppm(&img);
        prop_assert_eq!(decode_ppm(&bytes).unwrap(), img.clone());
        img = decode_ppm(&bytes).unwrap();
        prop_assert_eq!(encode_ppm(&img), bytes);
    }

    #[test]
    fn mollweide_inverse(lat in -(FRAC_PI_2 - 1e-3)..(FRAC_PI_2 - 1e-3), lon in -PI..PI) {
        let (x, y) = project(lat, lon);
        let (lat2, lon2) = unproject(x, y).unwrap();
        prop_assert!((lat - lat2).abs() < 1e-8, "{} {}", lat, lat2);
        prop_assert!((lon - lon2).abs() < 1e-6, "{} {}", lon, lon2);
    }
}
