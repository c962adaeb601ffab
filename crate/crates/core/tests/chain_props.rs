use minorant_core::chain::{beta_one_rho_log_complement, perpetuity_step, ChainState, Pair};
use minorant_core::RngStream;
use proptest::prelude::*;

proptest! {
    #[test]
    fn partial_sums_are_additive(
        pairs in prop::collection::vec((0.01f64..0.99, 0.01f64..10.0), 3..30),
        alpha in 0.2f64..2.0,
        cut in 0.0f64..1.0,
    ) {
        let mut c = ChainState::new(alpha);
        for (u, s) in &pairs {
            c.push(Pair::from_u(*u, *s));
        }
        let n = pairs.len();
        let m = 1 + ((n - 1) as f64 * cut) as usize;
        let whole = c.partial_tail_sum(1, n);
        let split = c.partial_tail_sum(1, m) + c.partial_tail_sum(m + 1, n);
        prop_assert!((whole - split).abs() <= 1e-9 * whole.abs().max(1.0));
        prop_assert_eq!(c.partial_tail_sum(m + 1, m), 0.0);
        prop_assert!((1..=n).all(|k| c.height(k) >= 0.0));
        let lengths: f64 = (1..=n).map(|k| c.length(k)).sum::<f64>() + c.tail_length(n);
        prop_assert!((lengths - 1.0).abs() < 1e-9);
    }

    #[test]
    fn perpetuity_step_formula(m in 0.0f64..5.0, u in 0.01f64..0.99, s in 0.0f64..5.0, alpha in 0.3f64..2.0) {
        let want = (1.0 - u).powf(1.0 / alpha) * m + u.powf(1.0 / alpha) * s;
        prop_assert!((perpetuity_step(m, u, s, alpha) - want).abs() < 1e-12 * (1.0 + want));
    }
}

#[test]
fn stick_breaking_law_has_beta_mean() {
    let mut rng = RngStream::new(4, 0);
    for rho in [0.2, 0.5, 0.9] {
        let n = 50_000;
        let us: Vec<f64> = (0..n).map(|_| -beta_one_rho_log_complement(rho, rng.uniform()).exp_m1()).collect();
        let m = us.iter().sum::<f64>() / n as f64;
        let want = 1.0 / (1.0 + rho);
        assert!((m - want).abs() < 5.0 * (0.1 / n as f64).sqrt(), "{rho}: {m} vs {want}");
    }
}
