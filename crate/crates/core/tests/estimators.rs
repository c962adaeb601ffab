use minorant_core::epsss::MeanderSession;
use minorant_core::estimators::{
    exact_indicator, first_passage_functional, replicate, unbiased_fv_functional, DeltaDensity, EstimatorOptions,
};
use minorant_core::stats::{bootstrap_ci, mean, variance};
use minorant_core::{RngStream, StableParams};

fn brownian() -> StableParams {
    StableParams::new(2.0, 0.5).unwrap()
}

#[test]
fn indicator_frequency_is_rayleigh_tail() {
    let n = 10_000;
    let hits = replicate(n, 0, |i| {
        let mut m = MeanderSession::new(&brownian(), 0.25, RngStream::new(31, i))?;
        exact_indicator(
            |e| {
                m.refine(e)?;
                m.endpoint()
            },
            1.0,
            0.25,
        )
    })
    .unwrap();
    for h in &hits {
        let (lo, hi) = h.bracket;
        assert!(if h.above { lo > 1.0 } else { hi < 1.0 });
        assert!(hi - lo <= h.eps);
    }
    let p = hits.iter().filter(|h| h.above).count() as f64 / n as f64;
    let want = (-0.25f64).exp();
    assert!((p - want).abs() < 4.0 * (want * (1.0 - want) / n as f64).sqrt(), "{p} vs {want}");
}

/// Draws of the randomised-level estimator of `E Z^me_1` together with the
/// endpoint midpoints.
fn fv_draws(n: usize, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let g = DeltaDensity::new(delta).unwrap();
    let out = replicate(n, 0, |i| {
        let mut m = MeanderSession::new(&brownian(), 0.5, RngStream::new(41, i))?;
        let mut rng = RngStream::new(42, i);
        let d = unbiased_fv_functional(
            |e| {
                m.refine(e)?;
                m.endpoint()
            },
            &g,
            0.5,
            &mut rng,
        )?;
        m.refine(1e-9)?;
        let (lo, hi) = m.endpoint()?;
        Ok((d.value, 0.5 * (lo + hi)))
    })
    .unwrap();
    out.into_iter().unzip()
}

#[test]
fn randomised_level_estimator_is_unbiased() {
    let n = 100_000;
    let (vals, ends) = fv_draws(n, 2.0);
    let est = mean(&vals);
    let se = (variance(&vals) / n as f64).sqrt();
    let truth = std::f64::consts::PI.sqrt();
    assert!((est - truth).abs() < 4.0 * se, "{est} +- {se} vs {truth}");
    // Second moment of 1{L > s}/g(s) is E G(L) with G the integral of 1/g.
    let g = DeltaDensity::new(2.0).unwrap();
    let second = ends.iter().map(|l| g.inverse_integral(*l)).sum::<f64>() / n as f64;
    let v = second - truth * truth;
    assert!((variance(&vals) / v - 1.0).abs() < 0.1, "variance {} vs {v}", variance(&vals));
}

fn laplace_exponent_inverse(alpha: f64, mu: f64, q: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi.powf(alpha) + mu * hi < q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.powf(alpha) + mu * mid < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn first_passage_laplace_transform() {
    let (alpha, mu, x) = (1.5, 1.0, 1.0);
    let p = StableParams::with_drift(alpha, 1.0 / alpha, mu, 1.0).unwrap();
    let opts = EstimatorOptions::default();
    let f_inv = |v: f64| if v < 1.0 { Some(-(-v).ln_1p()) } else { None };
    let rep = first_passage_functional(&p, x, 2.0, f_inv, 8000, 77, &opts).unwrap();
    let truth = 1.0 - (-x * laplace_exponent_inverse(alpha, mu, 1.0)).exp();
    assert!(rep.ci_lo <= rep.estimate && rep.estimate <= rep.ci_hi);
    assert!((rep.estimate - truth).abs() < 4.0 * rep.half_width() / 1.96, "{rep:?} vs {truth}");
}

#[test]
fn bootstrap_coverage_on_exponential_means() {
    let mut covered = 0;
    let reps = 400;
    for r in 0..reps {
        let mut rng = RngStream::new(500, r);
        let xs: Vec<f64> = (0..200).map(|_| rng.exponential()).collect();
        let mut b = RngStream::new(501, r);
        let (lo, hi) = bootstrap_ci(&xs, 0.9, 1000, &mut b).unwrap();
        if lo <= 1.0 && 1.0 <= hi {
            covered += 1;
        }
    }
    let c = covered as f64 / reps as f64;
    assert!((0.84..=0.95).contains(&c), "coverage {c}");
}

#[test]
fn first_passage_report_is_reproducible_and_ordered() {
    let p = StableParams::with_drift(2.0, 0.5, 1.0, 1.0).unwrap();
    let opts = EstimatorOptions { jobs: 2, ..EstimatorOptions::default() };
    let a = first_passage_functional(&p, 1.0, 2.0, Some, 500, 3, &opts).unwrap();
    let b = first_passage_functional(&p, 1.0, 2.0, Some, 500, 3, &EstimatorOptions { jobs: 1, ..opts }).unwrap();
    assert_eq!((a.estimate, a.ci_lo, a.ci_hi), (b.estimate, b.ci_lo, b.ci_hi));
    assert!(a.ci_lo <= a.estimate && a.estimate <= a.ci_hi);
}
