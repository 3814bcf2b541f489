//! Direct linear solvers used as brute-force oracles: the Thomas algorithm
//! for the tridiagonal systems of the one-dimensional chain, and a dense
//! partial-pivot elimination for absorbing chains on truncated trees.

/// Solve a tridiagonal system in place.
///
/// Row `i` reads `sub[i-1] * x[i-1] + diag[i] * x[i] + sup[i] * x[i+1] = rhs[i]`
/// (`sub` and `sup` have length `n-1`). Returns the solution.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 1 && sub.len() == n - 1 && sup.len() == n - 1 && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / denom;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Dense Gaussian elimination with partial pivoting; `a` is row-major
/// `n x n`, `rhs` holds one or more right-hand sides (columns). Returns the
/// solutions in the same layout.
pub fn solve_dense(a: &[f64], n: usize, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut xs: Vec<Vec<f64>> = rhs.to_vec();
    for col in 0..n {
        // Pivot.
        let mut pivot = col;
        let mut best = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        assert!(best > 0.0, "singular matrix in absorbing-chain solve");
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            for x in xs.iter_mut() {
                x.swap(col, pivot);
            }
        }
        let inv = 1.0 / m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            m[row * n + col] = 0.0;
            for k in col + 1..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            for x in xs.iter_mut() {
                let t = factor * x[col];
                x[row] -= t;
            }
        }
    }
    for x in xs.iter_mut() {
        for row in (0..n).rev() {
            let mut acc = x[row];
            for k in row + 1..n {
                acc -= m[row * n + k] * x[k];
            }
            x[row] = acc / m[row * n + row];
        }
    }
    xs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_small_system() {
        // [2 1 0; 1 2 1; 0 1 2] x = [4; 8; 8] -> x = [1; 2; 3].
        let x = thomas(&[1.0, 1.0], &[2.0, 2.0, 2.0], &[1.0, 1.0], &[4.0, 8.0, 8.0]);
        for (got, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_matches_thomas_on_tridiagonal() {
        let n = 20;
        let sub = vec![-0.3; n - 1];
        let sup = vec![-0.6; n - 1];
        let diag = vec![1.0; n];
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.5).collect();
        let x1 = thomas(&sub, &diag, &sup, &rhs);
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            dense[i * n + i] = diag[i];
            if i + 1 < n {
                dense[i * n + i + 1] = sup[i];
                dense[(i + 1) * n + i] = sub[i];
            }
        }
        let x2 = &solve_dense(&dense, n, &[rhs])[0];
        for (a, b) in x1.iter().zip(x2) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}
