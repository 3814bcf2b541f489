//! Scalar numerical kernels: root bracketing and bisection, golden-section
//! extrema, adaptive quadrature, and stable log-domain accumulation.

/// Neumaier compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// log(e^a + e^b) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log of a sum of exponentials of a slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = CompensatedSum::default();
    for &v in values {
        acc.add((v - hi).exp());
    }
    hi + acc.value().ln()
}

/// Bisection for a root of `f` on `[lo, hi]`; requires a sign change.
/// Stops when the bracket is shorter than `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    debug_assert!(
        flo == 0.0 || fhi == 0.0 || (flo < 0.0) != (fhi < 0.0),
        "bisect requires a sign change: f({lo})={flo}, f({hi})={fhi}"
    );
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimum of a unimodal `f` on `[lo, hi]` with tolerance
/// `tol` on the argument. Returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() < tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Golden-section maximum; see [`golden_min`].
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, neg) = golden_min(|t| -f(t), lo, hi, tol);
    (x, -neg)
}

/// Adaptive Simpson quadrature of `f` over `[lo, hi]` with relative error
/// target `rel_tol` (falls back to an absolute floor for integrals near zero).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    // Coarse scale estimate so the recursion has an absolute budget.
    let coarse: f64 = (0..=16)
        .map(|k| f(lo + (hi - lo) * k as f64 / 16.0))
        .sum::<f64>()
        / 17.0
        * (hi - lo);
    let budget = (coarse.abs() * rel_tol).max(1e-300);
    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = simpson(lo, hi, flo, fmid, fhi);
    adaptive_step(f, lo, hi, flo, fmid, fhi, whole, budget, 48)
}

fn simpson(lo: f64, hi: f64, flo: f64, fmid: f64, fhi: f64) -> f64 {
    (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    budget: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let lmid = 0.5 * (lo + mid);
    let rmid = 0.5 * (mid + hi);
    let flmid = f(lmid);
    let frmid = f(rmid);
    let left = simpson(lo, mid, flo, flmid, fmid);
    let right = simpson(mid, hi, fmid, frmid, fhi);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * budget {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, lo, mid, flo, flmid, fmid, left, budget / 2.0, depth - 1)
        + adaptive_step(f, mid, hi, fmid, frmid, fhi, right, budget / 2.0, depth - 1)
}
