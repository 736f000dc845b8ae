//! Library output checked against slow, independent reference computations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use touchdown_core::filter::update_with_likelihoods;
use touchdown_core::{
    fit_kde, measurement_only, median_frequency, power_spectrum, update, AccelWindow, Belief,
    ContactFilter, ContactState, EstimatorConfig, KdeConfig, MeasurementModel, PowerSpectrum,
    Taper, TorqueSample, TransitionMatrix,
};

fn window(samples: &[f64]) -> AccelWindow {
    let mut w = AccelWindow::new(samples.len(), 200.0).unwrap();
    for &s in samples {
        w.push(s).unwrap();
    }
    w
}

fn naive_dft_power(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                re += v * phase.cos();
                im += v * phase.sin();
            }
            (re * re + im * im) / n as f64
        })
        .collect()
}

#[test]
fn spectrum_matches_naive_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &n in &[8usize, 16, 32, 64] {
        for _ in 0..25 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let got = power_spectrum(&window(&x), Taper::Rectangular).unwrap();
            let want = naive_dft_power(&x);
            let scale = want.iter().cloned().fold(0.0, f64::max);
            for (g, w) in got.bins.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * scale, "n={n}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn hann_taper_matches_weighted_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 32;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let tapered: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| v * (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect();
    let got = power_spectrum(&window(&x), Taper::Hann).unwrap();
    for (g, w) in got.bins.iter().zip(naive_dft_power(&tapered)) {
        assert!((g - w).abs() <= 1e-9 * w.max(1.0));
    }
}

/// Cumulative mass below `w` when bin `k` covers `[k - 0.5, k + 0.5]` uniformly.
fn mass_below(bins: &[f64], w: f64) -> f64 {
    bins.iter()
        .enumerate()
        .map(|(k, &p)| p * (w - (k as f64 - 0.5)).clamp(0.0, 1.0))
        .sum()
}

fn bisect_median(bins: &[f64]) -> f64 {
    let half = 0.5 * bins.iter().sum::<f64>();
    let (mut lo, mut hi) = (-0.5, bins.len() as f64 - 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_below(bins, mid) < half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn median_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let bins: Vec<f64> = (0..33).map(|_| rng.gen_range(0.0..1.0)).collect();
        let got = median_frequency(&PowerSpectrum::from_bins(bins.clone(), 1.0)).unwrap();
        assert!((got - bisect_median(&bins)).abs() < 1e-9);
    }
}

#[test]
fn median_of_flat_spectrum_is_center() {
    for n in 1..20 {
        let got = median_frequency(&PowerSpectrum::from_bins(vec![2.5; n], 1.0)).unwrap();
        assert!((got - (n as f64 - 1.0) / 2.0).abs() < 1e-12);
    }
}

fn exact_kde(points: &[TorqueSample], h: [f64; 2], q: &TorqueSample) -> f64 {
    let norm = 2.0 * std::f64::consts::PI * h[0] * h[1];
    points
        .iter()
        .map(|p| {
            let a = (q.knee - p.knee) / h[0];
            let b = (q.wheel - p.wheel) / h[1];
            (-0.5 * (a * a + b * b)).exp() / norm
        })
        .sum::<f64>()
        / points.len() as f64
}

fn blob(rng: &mut ChaCha8Rng, n: usize, center: [f64; 2], sd: [f64; 2]) -> Vec<TorqueSample> {
    (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            TorqueSample::from_signed(center[0] + sd[0] * a, center[1] + sd[1] * b).unwrap()
        })
        .collect()
}

#[test]
fn grid_lookup_tracks_exact_kernel_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pts = blob(&mut rng, 500, [10.0, 3.0], [2.0, 1.0]);
    let model = fit_kde(&pts, ContactState::Contact, &KdeConfig::default()).unwrap();
    let b = model.bounds();
    let mut worst = 0.0f64;
    let mut total = 0.0;
    for _ in 0..1000 {
        let q = TorqueSample {
            knee: rng.gen_range(b.knee[0]..b.knee[1]),
            wheel: rng.gen_range(b.wheel[0]..b.wheel[1]),
        };
        let exact = exact_kde(&pts, model.bandwidths(), &q).max(model.density_floor());
        let rel = (model.likelihood(&q) - exact).abs() / exact;
        worst = worst.max(rel);
        total += rel;
    }
    assert!(worst <= 1e-2, "max relative error {worst}");
    assert!(total / 1000.0 <= 1e-3, "mean relative error {}", total / 1000.0);
}

#[test]
fn grid_mass_is_close_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [50, 400, 2000] {
        let pts = blob(&mut rng, n, [4.0, 2.0], [1.0, 0.7]);
        let model = fit_kde(&pts, ContactState::NoContact, &KdeConfig::default()).unwrap();
        let mass = model.grid_mass();
        assert!((0.9..=1.01).contains(&mass), "n={n}: mass {mass}");
    }
}

/// Plain normalized forward recursion with the matrix built from its two
/// parameters. `clamp > 0` keeps the previous posterior inside
/// `[clamp, 1 - clamp]` before each prediction, as the filter does.
fn forward(steps: &[(f64, f64, f64, f64)], prior: f64, clamp: f64) -> Vec<f64> {
    let mut alpha = [prior, 1.0 - prior];
    steps
        .iter()
        .map(|&(p_switch, p_land, lc, ln)| {
            if clamp > 0.0 {
                let c = alpha[0].clamp(clamp, 1.0 - clamp);
                alpha = [c, 1.0 - c];
            }
            // rows: to, columns: from; index 0 = contact
            let a = [
                [1.0 - p_switch * (1.0 - p_land), p_switch * p_land],
                [p_switch * (1.0 - p_land), 1.0 - p_switch * p_land],
            ];
            let pc = a[0][0] * alpha[0] + a[0][1] * alpha[1];
            let pn = a[1][0] * alpha[0] + a[1][1] * alpha[1];
            let (c, n) = (lc * pc, ln * pn);
            alpha = [c / (c + n), n / (c + n)];
            alpha[0]
        })
        .collect()
}

#[test]
fn advance_matches_forward_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let config = EstimatorConfig::default();
    for _ in 0..20 {
        let steps: Vec<(f64, f64, f64, f64)> = (0..500)
            .map(|_| {
                (
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    10f64.powf(rng.gen_range(-3.0..1.0)),
                    10f64.powf(rng.gen_range(-3.0..1.0)),
                )
            })
            .collect();
        let mut filter = ContactFilter::new(&config).unwrap();
        let want = forward(&steps, 0.5, 0.0);
        for (k, &(ps, pl, lc, ln)) in steps.iter().enumerate() {
            let got = filter.advance(&TransitionMatrix::new(ps, pl), lc, ln);
            assert!((got.p_contact - want[k]).abs() < 1e-9, "step {k}");
            assert!((got.p_contact + got.p_no_contact - 1.0).abs() < 1e-12);
        }
    }
}

fn toy_models() -> MeasurementModel {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = KdeConfig {
        grid_resolution: 80,
        ..KdeConfig::default()
    };
    MeasurementModel {
        contact: fit_kde(&blob(&mut rng, 300, [10.0, 3.0], [1.4, 0.7]), ContactState::Contact, &cfg).unwrap(),
        no_contact: fit_kde(&blob(&mut rng, 300, [0.0, 0.0], [0.3, 0.1]), ContactState::NoContact, &cfg).unwrap(),
    }
}

/// Per-step `(p_switch, p_land, lik_contact, lik_no_contact)`.
type Recorded = Vec<(f64, f64, f64, f64)>;

fn recorded_run(config: &EstimatorConfig) -> (Recorded, Vec<f64>) {
    let models = toy_models();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut filter = ContactFilter::new(config).unwrap();
    let mut recorded = Vec::new();
    let mut got = Vec::new();
    for _ in 0..500 {
        let acc = 9.81 + 3.0 * rng.sample::<f64, _>(StandardNormal);
        let m = TorqueSample::new(rng.gen_range(0.0..12.0), rng.gen_range(0.0..4.0)).unwrap();
        let out = filter.step(acc, &m, &models).unwrap();
        let t = out.transition.matrix;
        recorded.push((t.p_switch, t.p_land_given_switch, out.lik_contact, out.lik_no_contact));
        got.push(out.belief.p_contact);
    }
    (recorded, got)
}

#[test]
fn unclamped_step_is_the_forward_recursion() {
    let config = EstimatorConfig {
        belief_clamp: 0.0,
        ..EstimatorConfig::default()
    };
    let (recorded, got) = recorded_run(&config);
    for (k, (g, w)) in got.iter().zip(forward(&recorded, 0.5, 0.0)).enumerate() {
        assert!((g - w).abs() < 1e-9, "step {k}: {g} vs {w}");
    }
}

#[test]
fn clamped_step_is_the_clamped_forward_recursion() {
    let config = EstimatorConfig::default();
    let (recorded, got) = recorded_run(&config);
    for (k, (g, w)) in got
        .iter()
        .zip(forward(&recorded, 0.5, config.belief_clamp))
        .enumerate()
    {
        assert!((g - w).abs() < 1e-9, "step {k}: {g} vs {w}");
    }
}

#[test]
fn measurement_only_is_update_from_flat_prior() {
    let models = toy_models();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let m = TorqueSample::new(rng.gen_range(0.0..15.0), rng.gen_range(0.0..5.0)).unwrap();
        let a = measurement_only(&m, &models);
        let b = update(&Belief::flat(), &m, &models).p_contact;
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn update_matches_two_term_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let p: f64 = rng.gen_range(0.0..1.0);
        let (lc, ln) = (rng.gen_range(1e-6..5.0), rng.gen_range(1e-6..5.0));
        let got = update_with_likelihoods(&Belief::from_contact(p), lc, ln);
        let want = lc * p / (lc * p + ln * (1.0 - p));
        assert!((got.p_contact - want).abs() < 1e-12);
    }
}
