use bornflea::arbfun::*;
use bornflea::quad::gauss_legendre_on;
use bornflea::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

// Length of the preimage of [θ₁, θ₂) under ω ↦ ωt mod P inside [lo, hi], summed over branches.
fn preimage_length(lo: f64, hi: f64, t: f64, period: f64, th1: f64, th2: f64) -> f64 {
    let k_lo = (lo * t / period).floor() as i64 - 1;
    let k_hi = (hi * t / period).ceil() as i64 + 1;
    (k_lo..=k_hi)
        .map(|k| {
            let a = (th1 + k as f64 * period) / t;
            let b = (th2 + k as f64 * period) / t;
            (b.min(hi) - a.max(lo)).max(0.0)
        })
        .sum()
}

// Integral of `f` over the preimage of every bin, by Gauss–Legendre on each branch piece
// split at the kink `x = kink`.
fn brute_force_bins<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, kink: f64, t: f64, period: f64, bins: usize) -> Vec<f64> {
    let w = period / bins as f64;
    (0..bins)
        .map(|j| {
            let (th1, th2) = (j as f64 * w, (j + 1) as f64 * w);
            let k_lo = (lo * t / period).floor() as i64 - 1;
            let k_hi = (hi * t / period).ceil() as i64 + 1;
            (k_lo..=k_hi)
                .map(|k| {
                    let a = ((th1 + k as f64 * period) / t).max(lo);
                    let b = ((th2 + k as f64 * period) / t).min(hi);
                    if b <= a {
                        return 0.0;
                    }
                    let pieces = if a < kink && kink < b { vec![(a, kink), (kink, b)] } else { vec![(a, b)] };
                    pieces
                        .iter()
                        .flat_map(|&(p, q)| gauss_legendre_on(8, p, q))
                        .map(|(x, wx)| wx * f(x))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / w
        })
        .collect()
}

#[test]
fn uniform_pushforward_matches_closed_form_preimages() {
    let u = DensityRV::uniform(1.0, 2.0).unwrap();
    for t in [0.7, 10.0, 123.4] {
        let law = pushforward_mod_with(&u, t, TWO_PI, 512).unwrap();
        let w = law.bin_width();
        for (j, d) in law.density().iter().enumerate() {
            let exact = preimage_length(1.0, 2.0, t, TWO_PI, j as f64 * w, (j + 1) as f64 * w) / w;
            assert!((d - exact).abs() < 1e-9, "t = {t}, bin {j}: {d} vs {exact}");
        }
    }
}

#[test]
fn smooth_pushforward_matches_branch_quadrature() {
    let tri = |x: f64| 1.0 - (x - 2.0).abs();
    let d = DensityRV::from_fn(1.0, 3.0, DEFAULT_RESOLUTION, tri).unwrap();
    for t in [3.0, 10.0, 57.0] {
        let law = pushforward_mod_with(&d, t, TWO_PI, 256).unwrap();
        let oracle = brute_force_bins(tri, 1.0, 3.0, 2.0, t, TWO_PI, 256);
        let err = law.density().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "t = {t}: {err:e}");
    }
}

#[test]
fn equidistribution_examples() {
    let u = DensityRV::uniform(1.0, 2.0).unwrap();
    let tv = |t: f64| tv_distance(&pushforward_mod(&u, t, TWO_PI).unwrap());
    assert!(tv(1e4) < 0.01);
    assert!(tv(1e3) < 0.01);
    let seq: Vec<f64> = [10.0, 1e2, 1e3].iter().map(|&t| tv(t)).collect();
    assert!(seq.windows(2).all(|w| w[1] < w[0]), "{seq:?}");
}

#[test]
fn char_fn_examples() {
    let u = DensityRV::uniform(1.0, 2.0).unwrap();
    assert!((char_fn_magnitude(&u, 0.0) - 1.0).abs() < 1e-12);
    assert!(char_fn_magnitude(&u, 1e3) <= 2e-3);
    for (a, b) in [(0.5, 1.5), (-3.0, 0.25), (2.0, 7.0)] {
        let d = DensityRV::uniform(a, b).unwrap();
        for t in [0.1, 2.0, 31.0, 400.0] {
            let exact = (2.0 * (t * (b - a) / 2.0).sin() / (t * (b - a))).abs();
            assert!((char_fn_magnitude(&d, t) - exact).abs() < 1e-10);
        }
    }
}

#[test]
fn time_average_phase_examples() {
    assert_eq!(time_average_phase(0.0, 3.0), Complex64::new(1.0, 0.0));
    assert!(time_average_phase(TWO_PI, 1.0).norm() < 1e-15);
    let z = time_average_phase(1.0, 1e4);
    assert!(z.norm() <= 2e-4);
    // composite Gauss–Legendre over 4000 panels of the integrand e^{is}
    let panel = 1e4 / 4000.0;
    let quad: Complex64 = (0..4000)
        .flat_map(|i| gauss_legendre_on(16, i as f64 * panel, (i + 1) as f64 * panel))
        .map(|(s, w)| Complex64::cis(s) * w)
        .sum::<Complex64>()
        / 1e4;
    assert!((quad - z).norm() < 1e-13);
}

#[test]
fn invalid_inputs_are_rejected() {
    let u = DensityRV::uniform(1.0, 2.0).unwrap();
    assert!(matches!(pushforward_mod(&u, -1.0, TWO_PI), Err(Error::InvalidArgument(_))));
    assert!(matches!(pushforward_mod(&u, 1.0, 0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(DensityRV::from_samples(0.0, 1.0, vec![0.0, 0.0]), Err(Error::InvalidInput(_))));
    assert!(matches!(CircularLaw::new(1.0, vec![0.5, 0.5]), Err(Error::InvalidInput(_))));
}

#[test]
fn family_obeys_the_empirical_rate_and_char_fn_decay() {
    for (name, d) in bounded_variation_family().unwrap() {
        let tv: Vec<f64> = [10.0, 1e2, 1e3, 1e4].iter().map(|&t| tv_distance(&pushforward_mod(&d, t, TWO_PI).unwrap())).collect();
        let c = 10.0 * tv[0];
        for (k, &t) in [10.0, 1e2, 1e3, 1e4].iter().enumerate() {
            assert!(tv[k] <= 2.0 * c / t, "{name}: TV({t}) = {} above 2c/t = {}", tv[k], 2.0 * c / t);
        }
        assert!(tv[3] < 0.01 && tv.windows(2).all(|w| w[1] < w[0]), "{name}: {tv:?}");
        let cf: Vec<f64> = (1..=5).map(|k| char_fn_magnitude(&d, 10f64.powi(k))).collect();
        assert!(cf.iter().all(|v| *v <= 1.0 + 1e-9));
        assert!(cf.windows(2).all(|w| w[1] < w[0]) && cf[4] < 1e-4, "{name}: {cf:?}");
    }
}

fn arbitrary_density() -> impl Strategy<Value = DensityRV> {
    (-5.0..5.0f64, 0.01..4.0f64, prop::collection::vec(0.0..1.0f64, 2..40)).prop_filter_map(
        "needs positive mass",
        |(lo, len, mut samples)| {
            samples[0] += 0.01;
            DensityRV::from_samples(lo, lo + len, samples).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pushforward_conserves_mass(d in arbitrary_density(), t in 0.01..500.0f64, period in 0.1..10.0f64) {
        let law = pushforward_mod_with(&d, t, period, 256).unwrap();
        prop_assert!((law.total_mass() - 1.0).abs() < 1e-9);
        let tv = tv_distance(&law);
        prop_assert!((0.0..=1.0).contains(&tv));
    }

    #[test]
    fn char_fn_is_bounded_by_one(d in arbitrary_density(), t in -1e4..1e4f64) {
        prop_assert!(char_fn_magnitude(&d, t) <= 1.0 + 1e-9);
    }

    #[test]
    fn time_average_obeys_its_modulus_bound(nu in -1e3..1e3f64, t in 1e-3..1e5f64) {
        prop_assert!(time_average_phase(nu, t).norm() <= phase_average_bound(nu, t) * (1.0 + 1e-12));
    }
}
