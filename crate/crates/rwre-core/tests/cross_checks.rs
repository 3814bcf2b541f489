//! Cross-module checks: the survival-exponent slope on the line, and
//! property tests for the structural invariants.

use proptest::prelude::*;

use rwre_core::law::{self, ALaw, TransformTable};
use rwre_core::line_walk::{self, LineEnvironment};
use rwre_core::seeding::rng_from_key;

/// The annealed survival probability decays at the sublevel-set exponent:
/// the slope of `ln(q1^n p(n, a))` in `ln a`, with the depth tuned to the
/// variational optimum, is within the coarse tolerance of the negated
/// exponent (convergence in `a` is logarithmic).
#[test]
fn survival_probability_slope_tracks_exponent() {
    let a_law = ALaw::symmetric_two_point(2.0).unwrap();
    let q1: f64 = 0.9;
    let exponent = law::lambda_exponent(&a_law, q1).to_f64();
    let table = TransformTable::new(&a_law);
    // By symmetry the right root of phi(t) = ln(1/q1) is exponent/2; the
    // optimal depth-per-log-time scale is half the slope there.
    let x_star = table.phi_prime(exponent / 2.0);
    let z = x_star / 2.0;
    let mut logs = Vec::new();
    for &a in &[1_000u64, 10_000] {
        let n = ((a as f64).ln() / z).floor() as usize;
        let est = line_walk::p_estimate(&a_law, n, a, 200_000, 0xfeed, 2);
        assert!(est.point > 0.0, "no surviving replicates at a = {a}");
        logs.push(((a as f64).ln(), (n as f64) * q1.ln() + est.point.ln()));
    }
    let slope = (logs[1].1 - logs[0].1) / (logs[1].0 - logs[0].0);
    assert!(
        (slope + exponent).abs() < 0.3,
        "slope {slope:.4} vs -exponent {:.4}",
        -exponent
    );
}

/// Moment identities survive on a law with continuous support too. This
/// drifted law has chord value 0 (exit times grow polynomially, not
/// exponentially), so the slope window sits at larger n where the
/// logarithmic prefactor has decayed below the tolerance.
#[test]
fn moment_growth_for_a_density_law() {
    let a_law = ALaw::uniform(0.5, 2.0).unwrap();
    let table = TransformTable::new(&a_law);
    let (l1, _) = table.big_l(1.0);
    assert_eq!(l1, 0.0, "drifted uniform law has chord value 0");
    let m200 = line_walk::m_estimate(&a_law, 200, 1.0, 10_000, 21, 2);
    let m300 = line_walk::m_estimate(&a_law, 300, 1.0, 10_000, 21, 2);
    let slope = (m300.point.ln() - m200.point.ln()) / 100.0;
    assert!((slope - l1).abs() < 0.02, "slope {slope:.4} vs {l1:.4}");
}

proptest! {
    /// The potential increments reproduce the marks exactly.
    #[test]
    fn potential_increments_match_marks(marks in prop::collection::vec(0.5f64..2.0, 1..40)) {
        let env = LineEnvironment::new(marks.clone());
        for (i, &a) in marks.iter().enumerate() {
            let diff = env.potential(i + 1) - env.potential(i);
            prop_assert!((diff + a.ln()).abs() < 1e-12);
        }
        // Running maxima are monotone and dominate the potential.
        for i in 0..=marks.len() {
            prop_assert!(env.running_max(i) >= env.potential(i));
            if i > 0 {
                prop_assert!(env.running_max(i) >= env.running_max(i - 1));
            }
            prop_assert!(env.h1(i) >= 0.0);
            prop_assert!(env.h2(i, marks.len()) >= 0.0);
        }
    }

    /// Closed-form hitting probabilities stay inside their two-sided
    /// potential bracket for arbitrary environments.
    #[test]
    fn hit_probability_bracket(marks in prop::collection::vec(0.25f64..4.0, 1..60)) {
        let n = marks.len();
        let env = LineEnvironment::new(marks);
        for i in 0..=n {
            let log_p = env.log_hit_prob_before_minus1(i);
            let m = env.running_max(i);
            prop_assert!(log_p <= -m + 1e-12);
            prop_assert!(log_p >= -m - ((n + 1) as f64).ln() - 1e-12);
        }
    }

    /// Legendre duality at interior points of random two-point laws.
    #[test]
    fn legendre_duality(v1 in 0.2f64..0.9, v2 in 1.1f64..4.0, p in 0.05f64..0.95, t in -4.0f64..4.0) {
        let law = ALaw::finite(&[(v1, p), (v2, 1.0 - p)], v2.max(1.0 / v1)).unwrap();
        let table = TransformTable::new(&law);
        let x = table.phi_prime(t);
        let dual = t * x - table.phi(t);
        let i_x = table.legendre(x).finite().expect("interior point");
        prop_assert!((i_x - dual).abs() < 1e-7, "I({}) = {} vs {}", x, i_x, dual);
    }

    /// The convexity of the log-moment transform (second differences).
    #[test]
    fn log_moment_convexity(v1 in 0.2f64..0.9, v2 in 1.1f64..4.0, p in 0.05f64..0.95,
                            t0 in -4.0f64..4.0, h in 0.01f64..1.0) {
        let law = ALaw::finite(&[(v1, p), (v2, 1.0 - p)], v2.max(1.0 / v1)).unwrap();
        let second = law.log_moment(t0) - 2.0 * law.log_moment(t0 + h)
            + law.log_moment(t0 + 2.0 * h);
        prop_assert!(second >= -1e-9);
    }

    /// Circuit formulas agree with the direct solver on random environments.
    #[test]
    fn circuit_matches_oracle(seed in 0u64..10_000, n in 1usize..40) {
        let law = ALaw::uniform(0.5, 2.0).unwrap();
        let mut rng = rng_from_key(seed);
        let env = LineEnvironment::sample(&law, n, &mut rng);
        let sol = line_walk::oracle_solve(&env);
        prop_assert!((env.expected_exit_time() - sol.exit[1]).abs() < 1e-10);
        prop_assert!((env.hit_prob_before_minus1(n) - sol.hit[1]).abs() < 1e-10);
    }
}
