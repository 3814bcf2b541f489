//! Analytic layer: the environment-mark law `A`, the offspring law, the
//! log-moment transform `phi(t) = ln E[A^t]` with its Legendre transform, and
//! the escape exponents derived from them.
//!
//! All root finds use absolute tolerance 1e-10 on the argument and quadrature
//! targets 1e-10 relative error; the downstream cross-checks assert at 1e-9 or
//! coarser.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::numerics::{CompensatedSum, bisect, golden_max, golden_min, integrate};

const ROOT_TOL: f64 = 1e-10;
const QUAD_REL_TOL: f64 = 1e-10;
const BORDERLINE: f64 = 1e-9;

/// Density descriptor for the bounded-continuous kind.
#[derive(Clone)]
pub struct DensityLaw {
    pub name: String,
    pub pdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub lo: f64,
    pub hi: f64,
    /// Upper bound on the density, used by rejection sampling.
    pub pdf_max: f64,
}

#[derive(Clone)]
enum LawKind {
    Finite {
        values: Vec<f64>,
        probs: Vec<f64>,
        ln_values: Vec<f64>,
        ln_probs: Vec<f64>,
        cum: Vec<f64>,
    },
    Density(DensityLaw),
}

/// Distribution of the environment mark `A`, with declared bound `alpha`
/// (`ess sup A <= alpha` and `ess sup 1/A <= alpha`). Bounded support keeps
/// `E[A^t]` finite for every real `t`.
#[derive(Clone)]
pub struct ALaw {
    kind: LawKind,
    alpha: f64,
}

impl fmt::Debug for ALaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LawKind::Finite { values, probs, .. } => f
                .debug_struct("ALaw")
                .field("values", values)
                .field("probs", probs)
                .field("alpha", &self.alpha)
                .finish(),
            LawKind::Density(d) => f
                .debug_struct("ALaw")
                .field("density", &d.name)
                .field("support", &(d.lo, d.hi))
                .field("alpha", &self.alpha)
                .finish(),
        }
    }
}

impl ALaw {
    /// Finite-support law from `(value, probability)` atoms.
    pub fn finite(atoms: &[(f64, f64)], alpha: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidLaw("no atoms".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidLaw(format!("alpha must be positive, got {alpha}")));
        }
        let mut total = CompensatedSum::default();
        for &(v, p) in atoms {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidLaw(format!("support value {v} is not positive")));
            }
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidLaw(format!("probability {p} is not positive")));
            }
            // Allow a one-ulp slack on the declared bound.
            if v > alpha * (1.0 + 1e-12) || v < 1.0 / alpha * (1.0 - 1e-12) {
                return Err(Error::InvalidLaw(format!(
                    "support value {v} outside [1/alpha, alpha] = [{}, {alpha}]",
                    1.0 / alpha
                )));
            }
            total.add(p);
        }
        if (total.value() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {}, expected 1 within 1e-12",
                total.value()
            )));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.to_vec();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let values: Vec<f64> = pairs.iter().map(|&(v, _)| v).collect();
        let probs: Vec<f64> = pairs.iter().map(|&(_, p)| p).collect();
        let ln_values = values.iter().map(|v| v.ln()).collect();
        let ln_probs = probs.iter().map(|p| p.ln()).collect();
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cum.push(acc);
        }
        *cum.last_mut().expect("nonempty") = 1.0;
        Ok(ALaw {
            kind: LawKind::Finite { values, probs, ln_values, ln_probs, cum },
            alpha,
        })
    }

    /// Deterministic mark `A = v` almost surely.
    pub fn constant(v: f64) -> Result<Self> {
        Self::finite(&[(v, 1.0)], v.max(1.0 / v))
    }

    /// The two-point law `P(A = v) = P(A = 1/v) = 1/2`.
    pub fn symmetric_two_point(v: f64) -> Result<Self> {
        Self::finite(&[(1.0 / v, 0.5), (v, 0.5)], v.max(1.0 / v))
    }

    /// Bounded-density law from a descriptor.
    pub fn density(d: DensityLaw, alpha: f64) -> Result<Self> {
        if !(d.lo.is_finite() && d.hi.is_finite() && 0.0 < d.lo && d.lo < d.hi) {
            return Err(Error::InvalidLaw(format!(
                "density support [{}, {}] is not a positive interval",
                d.lo, d.hi
            )));
        }
        if d.hi > alpha * (1.0 + 1e-12) || d.lo < 1.0 / alpha * (1.0 - 1e-12) {
            return Err(Error::InvalidLaw(format!(
                "density support [{}, {}] outside [1/alpha, alpha]",
                d.lo, d.hi
            )));
        }
        if !(d.pdf_max.is_finite() && d.pdf_max > 0.0) {
            return Err(Error::InvalidLaw("pdf_max must be positive".into()));
        }
        Ok(ALaw { kind: LawKind::Density(d), alpha })
    }

    /// Uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let h = 1.0 / (hi - lo);
        Self::density(
            DensityLaw {
                name: format!("uniform[{lo},{hi}]"),
                pdf: Arc::new(move |_| h),
                lo,
                hi,
                pdf_max: h,
            },
            hi.max(1.0 / lo),
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Essential infimum of the support.
    pub fn ess_inf(&self) -> f64 {
        match &self.kind {
            LawKind::Finite { values, .. } => values[0],
            LawKind::Density(d) => d.lo,
        }
    }

    /// Essential supremum of the support.
    pub fn ess_sup(&self) -> f64 {
        match &self.kind {
            LawKind::Finite { values, .. } => *values.last().expect("nonempty"),
            LawKind::Density(d) => d.hi,
        }
    }

    /// Atoms of a finite-support law, if that is the kind.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            LawKind::Finite { values, probs, .. } => {
                Some(values.iter().cloned().zip(probs.iter().cloned()).collect())
            }
            LawKind::Density(_) => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            LawKind::Finite { values, cum, .. } => {
                let u: f64 = rng.random();
                for (i, &c) in cum.iter().enumerate() {
                    if u < c {
                        return values[i];
                    }
                }
                *values.last().expect("nonempty")
            }
            LawKind::Density(d) => loop {
                let x = d.lo + (d.hi - d.lo) * rng.random::<f64>();
                let accept: f64 = rng.random();
                if accept * d.pdf_max <= (d.pdf)(x) {
                    return x;
                }
            },
        }
    }

    /// `ln E[A^t]`, stable for arbitrarily large `|t|`.
    pub fn log_moment(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match &self.kind {
            LawKind::Finite { ln_values, ln_probs, .. } => {
                let hi = ln_values
                    .iter()
                    .zip(ln_probs)
                    .map(|(&lv, &lp)| t * lv + lp)
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut acc = CompensatedSum::default();
                for (&lv, &lp) in ln_values.iter().zip(ln_probs) {
                    acc.add((t * lv + lp - hi).exp());
                }
                hi + acc.value().ln()
            }
            LawKind::Density(d) => {
                let shift = (t * d.lo.ln()).max(t * d.hi.ln());
                let pdf = d.pdf.clone();
                let integral = integrate(
                    &move |x: f64| (t * x.ln() - shift).exp() * pdf(x),
                    d.lo,
                    d.hi,
                    QUAD_REL_TOL,
                );
                shift + integral.ln()
            }
        }
    }

    /// `d/dt ln E[A^t] = E[A^t ln A] / E[A^t]`.
    pub fn log_moment_prime(&self, t: f64) -> f64 {
        match &self.kind {
            LawKind::Finite { ln_values, ln_probs, .. } => {
                let hi = ln_values
                    .iter()
                    .zip(ln_probs)
                    .map(|(&lv, &lp)| t * lv + lp)
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut num = CompensatedSum::default();
                let mut den = CompensatedSum::default();
                for (&lv, &lp) in ln_values.iter().zip(ln_probs) {
                    let w = (t * lv + lp - hi).exp();
                    num.add(w * lv);
                    den.add(w);
                }
                num.value() / den.value()
            }
            LawKind::Density(d) => {
                let shift = (t * d.lo.ln()).max(t * d.hi.ln());
                let pdf_n = d.pdf.clone();
                let pdf_d = d.pdf.clone();
                let num = integrate(
                    &move |x: f64| (t * x.ln() - shift).exp() * x.ln() * pdf_n(x),
                    d.lo,
                    d.hi,
                    QUAD_REL_TOL,
                );
                let den = integrate(
                    &move |x: f64| (t * x.ln() - shift).exp() * pdf_d(x),
                    d.lo,
                    d.hi,
                    QUAD_REL_TOL,
                );
                num / den
            }
        }
    }

    /// `E[ln A]`.
    pub fn mean_ln(&self) -> f64 {
        self.log_moment_prime(0.0)
    }
}

/// `E[A^t]`; exact finite sums for atoms, adaptive quadrature for densities.
pub fn moment_transform(law: &ALaw, t: f64) -> f64 {
    law.log_moment(t).exp()
}

/// Offspring distribution `q_k`, `k >= 1` (no extinction: `q_0 = 0`).
///
/// `probs[k-1] = q_k`. The degenerate line tree `q_1 = 1` is allowed so the
/// one-dimensional walk is a special case of the tree walk.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    probs: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidLaw("offspring law needs at least q_1".into()));
        }
        let mut total = CompensatedSum::default();
        for &p in probs {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidLaw(format!("offspring probability {p} invalid")));
            }
            total.add(p);
        }
        if (total.value() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!(
                "offspring probabilities sum to {}, expected 1 within 1e-12",
                total.value()
            )));
        }
        Ok(OffspringLaw { probs: probs.to_vec() })
    }

    /// Deterministic branching: every vertex has exactly `b` children.
    pub fn regular(b: usize) -> Self {
        let mut probs = vec![0.0; b];
        probs[b - 1] = 1.0;
        OffspringLaw { probs }
    }

    /// The degenerate single-path tree.
    pub fn line() -> Self {
        OffspringLaw { probs: vec![1.0] }
    }

    pub fn q1(&self) -> f64 {
        self.probs[0]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (i + 1) as f64 * p)
            .sum()
    }

    pub fn max_offspring(&self) -> usize {
        self.probs.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        self.probs.len()
    }
}

/// Transience criterion.
///
/// On a supercritical tree (`m > 1`) the walk is transient iff
/// `inf_{t in [0,1]} E[A^t] > 1/m`; the infimum is found by golden-section
/// search on the convex map. On the degenerate line tree (`m = 1`) that
/// criterion collapses (the infimum is at most `E[A^0] = 1 = 1/m`), so the
/// one-dimensional criterion `E[ln A] > 0` is used instead.
pub fn is_transient(a_law: &ALaw, off: &OffspringLaw) -> Result<bool> {
    let m = off.mean();
    if m <= 1.0 {
        let drift = a_law.mean_ln();
        if drift.abs() < BORDERLINE {
            return Err(Error::BorderlineCriterion { value: drift, threshold: 0.0 });
        }
        return Ok(drift > 0.0);
    }
    let (_, log_inf) = golden_min(|t| a_law.log_moment(t), 0.0, 1.0, 1e-12);
    let inf = log_inf.exp();
    let threshold = 1.0 / m;
    if (inf - threshold).abs() < BORDERLINE {
        return Err(Error::BorderlineCriterion { value: inf, threshold });
    }
    Ok(inf > threshold)
}

/// Argmin of `phi` over the reals, assuming two-sided support (`a < 0 < b`).
fn phi_argmin(law: &ALaw) -> f64 {
    let mut half = 1.0;
    while law.log_moment_prime(-half) >= 0.0 || law.log_moment_prime(half) <= 0.0 {
        half *= 2.0;
        if half > 1e9 {
            return 0.0;
        }
    }
    bisect(|t| law.log_moment_prime(t), -half, half, ROOT_TOL)
}

/// Expand from `from` in direction `dir` until `phi` exceeds `target`, then
/// bisect for the crossing.
fn phi_level_crossing(law: &ALaw, target: f64, from: f64, dir: f64) -> f64 {
    let mut step = 1.0;
    let mut outer = from + dir * step;
    while law.log_moment(outer) <= target {
        step *= 2.0;
        outer = from + dir * step;
        assert!(step < 1e12, "level crossing bracket expansion diverged");
    }
    let (lo, hi) = if dir > 0.0 { (from, outer) } else { (outer, from) };
    bisect(|t| law.log_moment(t) - target, lo, hi, ROOT_TOL)
}

/// Lebesgue measure of the sublevel set `{t : E[A^t] <= 1/q1}`.
///
/// Infinite when `q1 = 0` or when `ln A` does not straddle 0 (the sublevel
/// set is then a half-line); zero when even the minimum of `phi` exceeds
/// `ln(1/q1)`. Otherwise the width between the two roots of
/// `phi(t) = ln(1/q1)`, each bracketed by doubling and bisected to 1e-10.
pub fn lambda_exponent(a_law: &ALaw, q1: f64) -> ExtReal {
    assert!((0.0..=1.0).contains(&q1), "q1 must lie in [0, 1], got {q1}");
    if q1 == 0.0 {
        return ExtReal::PosInf;
    }
    let (a, b) = support_ln(a_law);
    if a >= 0.0 || b <= 0.0 {
        // phi eventually decreases without bound on one side (or has a
        // horizontal asymptote at ln P(A=1) <= ln(1/q1)); either way the
        // sublevel set contains a half-line.
        return ExtReal::PosInf;
    }
    let target = -q1.ln();
    let t_min = phi_argmin(a_law);
    if a_law.log_moment(t_min) > target {
        return ExtReal::Finite(0.0);
    }
    let t_left = phi_level_crossing(a_law, target, t_min, -1.0);
    let t_right = phi_level_crossing(a_law, target, t_min, 1.0);
    ExtReal::Finite(t_right - t_left)
}

/// Root of `E[A^-k] = 1` on `(0, 1]`, when it exists.
///
/// Writing `g(k) = phi(-k)`, `g` is convex with `g(0) = 0`; a root in
/// `(0, 1]` exists iff `E[ln A] > 0` and `g(1) >= 0`.
pub fn solomon_kappa(a_law: &ALaw) -> Option<f64> {
    if a_law.mean_ln() <= 0.0 {
        return None;
    }
    let g = |k: f64| a_law.log_moment(-k);
    let g1 = g(1.0);
    if g1.abs() <= 1e-12 {
        return Some(1.0);
    }
    if g1 < 0.0 {
        return None;
    }
    Some(bisect(g, 1e-9, 1.0, ROOT_TOL))
}

fn support_ln(law: &ALaw) -> (f64, f64) {
    (law.ess_inf().ln(), law.ess_sup().ln())
}

/// Log-moment transform together with its Legendre transform and the chord
/// root used by the variational exponents.
#[derive(Debug, Clone)]
pub struct TransformTable {
    law: ALaw,
    a: f64,
    b: f64,
}

impl TransformTable {
    pub fn new(law: &ALaw) -> Self {
        let (a, b) = support_ln(law);
        TransformTable { law: law.clone(), a, b }
    }

    /// Support `[a, b]` of `ln A`.
    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn law(&self) -> &ALaw {
        &self.law
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.law.log_moment(t)
    }

    pub fn phi_prime(&self, t: f64) -> f64 {
        self.law.log_moment_prime(t)
    }

    /// Legendre transform `I(x) = sup_t { tx - phi(t) }`.
    ///
    /// Infinite outside `[a, b]`; at a finite-law boundary atom the supremum
    /// is `-ln P(ln A = boundary)`, reached in the limit. Interior points are
    /// maximized by golden section after the bracket `phi'(-L) < x < phi'(L)`
    /// is found by doubling.
    pub fn legendre(&self, x: f64) -> ExtReal {
        let (a, b) = (self.a, self.b);
        if self.law.ess_inf() == self.law.ess_sup() {
            // Deterministic mark: point mass at a = b.
            return if (x - a).abs() <= 1e-12 * a.abs().max(1.0) {
                ExtReal::Finite(0.0)
            } else {
                ExtReal::PosInf
            };
        }
        if x < a || x > b {
            return ExtReal::PosInf;
        }
        let scale = a.abs().max(b.abs()).max(1.0);
        if (x - a).abs() <= 1e-14 * scale || (x - b).abs() <= 1e-14 * scale {
            return self.boundary_value(x, a, b);
        }
        let mut half = 1.0;
        while self.phi_prime(-half) >= x || self.phi_prime(half) <= x {
            half *= 2.0;
            if half > 65536.0 {
                break;
            }
        }
        let (_, value) = golden_max(|t| t * x - self.phi(t), -half, half, ROOT_TOL);
        ExtReal::Finite(value.max(0.0))
    }

    fn boundary_value(&self, x: f64, a: f64, b: f64) -> ExtReal {
        match &self.law.kind {
            LawKind::Finite { probs, .. } => {
                let p = if (x - a).abs() <= (x - b).abs() {
                    probs[0]
                } else {
                    *probs.last().expect("nonempty")
                };
                ExtReal::Finite(-p.ln())
            }
            // No boundary atom: tx - phi(t) grows without bound.
            LawKind::Density(_) => ExtReal::PosInf,
        }
    }

    /// Root of the chord equation `phi(t) = phi(t + lambda)`, or 0 when
    /// `phi` has no interior minimum (one-sided or deterministic law).
    pub fn chord_root(&self, lambda: f64) -> f64 {
        if self.a >= 0.0 || self.b <= 0.0 {
            return 0.0;
        }
        let g = |t: f64| self.phi(t + lambda) - self.phi(t);
        let mut lo = -1.0;
        while g(lo) >= 0.0 {
            lo *= 2.0;
            assert!(lo > -1e12, "chord bracket expansion diverged");
        }
        let mut hi = 0.0;
        while g(hi) <= 0.0 {
            hi = if hi == 0.0 { 1.0 } else { hi * 2.0 };
            assert!(hi < 1e12, "chord bracket expansion diverged");
        }
        bisect(g, lo, hi, ROOT_TOL)
    }

    /// The variational exponent `L(lambda) = max(0, phi(t))` at the chord
    /// root; returns `(value, chord root)`.
    pub fn big_l(&self, lambda: f64) -> (f64, f64) {
        assert!(
            lambda > 0.0 && lambda <= 1.0,
            "lambda must lie in (0, 1], got {lambda}"
        );
        let t_bar = self.chord_root(lambda);
        (self.phi(t_bar).max(0.0), t_bar)
    }
}

/// The companion exponent `L'`: `-inf` when `q1 = 0` or the sublevel exponent
/// is infinite, otherwise the negative of [`lambda_exponent`].
pub fn big_l_prime(a_law: &ALaw, q1: f64) -> ExtReal {
    if q1 == 0.0 {
        return ExtReal::NegInf;
    }
    -lambda_exponent(a_law, q1)
}

/// Independent evaluation of `L'` by direct two-dimensional maximization of
///
/// `F(x1, x2) = (1/x1 + 1/x2) ln q1 - I(-x1)/x1 - I(x2)/x2`
///
/// over `(0, -a] x (0, b]`, on a log-spaced grid refined by coordinate
/// descent. Used as a cross-check against `-lambda_exponent`; the two agree
/// within 1e-5 on finite-support laws.
pub fn big_l_prime_direct(table: &TransformTable, q1: f64) -> ExtReal {
    if q1 == 0.0 {
        return ExtReal::NegInf;
    }
    let (a, b) = table.support();
    if a >= 0.0 || b <= 0.0 {
        return ExtReal::NegInf;
    }
    let ln_q1 = q1.ln();
    let objective = |x1: f64, x2: f64| -> f64 {
        let i1 = match table.legendre(-x1) {
            ExtReal::Finite(v) => v,
            _ => return f64::NEG_INFINITY,
        };
        let i2 = match table.legendre(x2) {
            ExtReal::Finite(v) => v,
            _ => return f64::NEG_INFINITY,
        };
        (1.0 / x1 + 1.0 / x2) * ln_q1 - i1 / x1 - i2 / x2
    };

    let x1_max = -a;
    let x2_max = b;
    let grid = |max: f64| -> Vec<f64> {
        let n = 48;
        (0..n)
            .map(|i| max * (1e-3f64).powf(1.0 - i as f64 / (n - 1) as f64))
            .collect()
    };
    let mut best = (f64::NEG_INFINITY, x1_max / 2.0, x2_max / 2.0);
    for &x1 in &grid(x1_max) {
        for &x2 in &grid(x2_max) {
            let v = objective(x1, x2);
            if v > best.0 {
                best = (v, x1, x2);
            }
        }
    }
    let (_, mut x1, mut x2) = best;
    for _ in 0..8 {
        let (nx1, _) = golden_max(|x| objective(x, x2), 1e-9 * x1_max, x1_max, 1e-13);
        x1 = nx1;
        let (nx2, _) = golden_max(|x| objective(x1, x), 1e-9 * x2_max, x2_max, 1e-13);
        x2 = nx2;
    }
    ExtReal::Finite(objective(x1, x2))
}
