//! One-dimensional RWRE layer.
//!
//! A walk on sites `{-1, 0, ..., n}` driven by marks `A(0..n-1)`: from site
//! `i` it steps right with probability `A(i)/(1+A(i))` and left otherwise.
//! Hitting probabilities and expected exit times have closed forms in the
//! potential `V(i) = -sum_{k<i} ln A(k)` (edge `(i-1, i)` has resistance
//! `e^{V(i)}`); everything is accumulated in log space so environments of
//! thousands of sites do not overflow.
//!
//! The same chain arises by projecting a tree walk onto an ancestral path,
//! which is where the domination check against the exact tree chain lives.

use crate::error::{Error, Result};
use crate::exec::parallel_map_indexed;
use crate::gw_tree::{MarkedTree, VertexId};
use crate::law::ALaw;
use crate::numerics::{CompensatedSum, log_add_exp, log_sum_exp};
use crate::seeding::{domain, mix, replicate_key, rng_from_key};
use crate::solve::{solve_dense, thomas};
use crate::stats::EstimateWithCI;

use rand::Rng;

/// A fixed one-dimensional environment with its potential arrays.
#[derive(Debug, Clone)]
pub struct LineEnvironment {
    marks: Vec<f64>,
    /// Potential `V(0..n)`, `V(0) = 0`.
    v: Vec<f64>,
    /// Running maximum `M(i) = max_{k<=i} V(k)`.
    running_max: Vec<f64>,
    /// `ln sum_{k<=i} e^{V(k)}`.
    prefix_lse: Vec<f64>,
    /// `ln sum_{i<=k<=n} e^{V(k)}`.
    suffix_lse: Vec<f64>,
}

impl LineEnvironment {
    pub fn new(marks: Vec<f64>) -> Self {
        let n = marks.len();
        let mut v = Vec::with_capacity(n + 1);
        let mut acc = CompensatedSum::default();
        v.push(0.0);
        for &a in &marks {
            debug_assert!(a > 0.0);
            acc.add(-a.ln());
            v.push(acc.value());
        }
        let mut running_max = Vec::with_capacity(n + 1);
        let mut m = f64::NEG_INFINITY;
        for &x in &v {
            m = m.max(x);
            running_max.push(m);
        }
        let mut prefix_lse = Vec::with_capacity(n + 1);
        let mut p = f64::NEG_INFINITY;
        for &x in &v {
            p = log_add_exp(p, x);
            prefix_lse.push(p);
        }
        let mut suffix_lse = vec![0.0; n + 1];
        let mut s = f64::NEG_INFINITY;
        for i in (0..=n).rev() {
            s = log_add_exp(s, v[i]);
            suffix_lse[i] = s;
        }
        LineEnvironment { marks, v, running_max, prefix_lse, suffix_lse }
    }

    /// Sample an i.i.d. environment of length `n`.
    pub fn sample<R: Rng + ?Sized>(law: &ALaw, n: usize, rng: &mut R) -> Self {
        Self::new((0..n).map(|_| law.sample(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn potential(&self, i: usize) -> f64 {
        self.v[i]
    }

    pub fn running_max(&self, i: usize) -> f64 {
        self.running_max[i]
    }

    /// `H1(i) = max_{k<=i} V(k) - V(i)`.
    pub fn h1(&self, i: usize) -> f64 {
        self.running_max[i] - self.v[i]
    }

    /// `H2(i, p) = max_{i<=k<=p} V(k) - V(i)`.
    pub fn h2(&self, i: usize, p: usize) -> f64 {
        let m = self.v[i..=p].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m - self.v[i]
    }

    /// `ln P^0(T_i < T_{-1}) = -ln(e^{V(0)} + ... + e^{V(i)})`.
    pub fn log_hit_prob_before_minus1(&self, i: usize) -> f64 {
        -self.prefix_lse[i]
    }

    /// `P^0(T_i < T_{-1})`, the chance to reach site `i` before falling off
    /// the left end.
    pub fn hit_prob_before_minus1(&self, i: usize) -> f64 {
        self.log_hit_prob_before_minus1(i).exp()
    }

    /// `P^j(T_n < T_{-1})` for a start anywhere in `0..=n`.
    pub fn prob_reach_end_from(&self, j: usize) -> f64 {
        let n = self.len();
        (self.prefix_lse[j] - self.prefix_lse[n]).exp()
    }

    /// `ln E^0[T_{-1} and T_n]` (exit time of `{0..n-1}`), via the exact
    /// identity summing, over sites, the reach probability times the
    /// expected number of returns before exit.
    pub fn log_expected_exit_time(&self) -> f64 {
        let n = self.len();
        assert!(n >= 1, "exit time needs at least one interior site");
        let mut terms = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.marks[i];
            let ln_reach = -self.prefix_lse[i];
            let ln_back = self.v[i] - self.prefix_lse[i];
            let ln_fwd = self.v[i + 1] - self.suffix_lse[i + 1];
            let ln_w_back = -a.ln_1p();
            let ln_w_fwd = a.ln() - a.ln_1p();
            let ln_green = -log_add_exp(ln_w_back + ln_back, ln_w_fwd + ln_fwd);
            terms.push(ln_reach + ln_green);
        }
        log_sum_exp(&terms)
    }

    pub fn expected_exit_time(&self) -> f64 {
        self.log_expected_exit_time().exp()
    }
}

/// Exact boundary-value solves for the chain on `{-1, ..., n}`.
///
/// `hit[i+1] = P^i(T_n < T_{-1})` and `exit[i+1] = E^i[T_{-1} and T_n]`,
/// with the boundary entries included (`hit[0] = 0`, `hit[n+1] = 1`).
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub hit: Vec<f64>,
    pub exit: Vec<f64>,
}

/// Brute-force oracle: solve the two tridiagonal boundary-value systems by
/// direct elimination. Intended for `n <= 10^4`.
pub fn oracle_solve(env: &LineEnvironment) -> OracleSolution {
    let n = env.len();
    assert!(n >= 1, "oracle needs at least one interior site");
    assert!(n <= 10_000, "oracle is meant for n <= 10^4");
    let w_fwd: Vec<f64> = env.marks.iter().map(|a| a / (1.0 + a)).collect();
    let w_back: Vec<f64> = env.marks.iter().map(|a| 1.0 / (1.0 + a)).collect();
    let diag = vec![1.0; n];
    let sub: Vec<f64> = (1..n).map(|i| -w_back[i]).collect();
    let sup: Vec<f64> = (0..n - 1).map(|i| -w_fwd[i]).collect();

    let mut rhs_hit = vec![0.0; n];
    rhs_hit[n - 1] = w_fwd[n - 1];
    let hit_interior = thomas(&sub, &diag, &sup, &rhs_hit);
    let rhs_exit = vec![1.0; n];
    let exit_interior = thomas(&sub, &diag, &sup, &rhs_exit);

    let mut hit = Vec::with_capacity(n + 2);
    hit.push(0.0);
    hit.extend(hit_interior);
    hit.push(1.0);
    let mut exit = Vec::with_capacity(n + 2);
    exit.push(0.0);
    exit.extend(exit_interior);
    exit.push(0.0);
    OracleSolution { hit, exit }
}

/// Annealed mean of the quenched expected exit time raised to `lambda`:
/// fresh environment per replicate, exact per-environment evaluation.
pub fn m_estimate(
    a_law: &ALaw,
    n: usize,
    lambda: f64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> EstimateWithCI {
    assert!((0.0..=1.0).contains(&lambda), "lambda must lie in [0, 1]");
    assert!(n >= 1);
    let samples: Vec<f64> = parallel_map_indexed(replicates, workers, |k| {
        let mut rng = rng_from_key(mix(mix(seed, domain::ENV), k));
        let env = LineEnvironment::sample(a_law, n, &mut rng);
        (lambda * env.log_expected_exit_time()).exp()
    });
    EstimateWithCI::from_samples(&samples, seed)
}

/// Annealed probability that the walk has exited neither end of
/// `{-1, ..., n}` after `a` steps: fresh environment and walk per replicate.
pub fn p_estimate(
    a_law: &ALaw,
    n: usize,
    a: u64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> EstimateWithCI {
    assert!(n >= 1);
    let survived: Vec<f64> = parallel_map_indexed(replicates, workers, |k| {
        let key = replicate_key(seed, k);
        let mut rng = rng_from_key(mix(key, domain::ENV));
        let fwd: Vec<f64> = (0..n)
            .map(|_| {
                let mark = a_law.sample(&mut rng);
                mark / (1.0 + mark)
            })
            .collect();
        let mut walk_rng = rng_from_key(mix(key, domain::WALK));
        let mut pos: i64 = 0;
        for _ in 0..a {
            let u: f64 = walk_rng.random();
            if u < fwd[pos as usize] {
                pos += 1;
            } else {
                pos -= 1;
            }
            if pos == -1 || pos == n as i64 {
                return 0.0;
            }
        }
        1.0
    });
    EstimateWithCI::from_samples(&survived, seed)
}

/// A tree walk restricted to the ancestral path from `x` up to `y`,
/// with each on-path row renormalized over its forward/backward pair. The
/// ratio of forward to backward probability at the `i`-th path vertex is the
/// mark of the next path vertex, so the projection is a [`LineEnvironment`]
/// whose site `i` carries `A(x_{i+1})`; the endpoints (`parent(x)` and `y`)
/// reflect back onto the path.
#[derive(Debug, Clone)]
pub struct ProjectedEnvironment {
    /// `x = path[0], ..., y = path[p]`.
    pub path: Vec<VertexId>,
    pub line: LineEnvironment,
}

impl ProjectedEnvironment {
    /// Renormalized transition pair `(forward, backward)` at path index `i`
    /// (an interior vertex).
    pub fn omega_pair(&self, i: usize) -> (f64, f64) {
        let a = self.line.marks()[i];
        (a / (1.0 + a), 1.0 / (1.0 + a))
    }
}

/// Project the walk at the pair `x <= y` onto the path between them.
pub fn project_to_path(
    tree: &mut MarkedTree,
    x: VertexId,
    y: VertexId,
) -> Result<ProjectedEnvironment> {
    if x.is_parent_of_root() || y.is_parent_of_root() {
        return Err(Error::InvalidVertex(
            "the artificial parent cannot anchor a projection".into(),
        ));
    }
    let mut path = vec![y];
    let mut cur = y;
    while cur != x {
        match tree.parent(cur) {
            Some(p) if !p.is_parent_of_root() => {
                path.push(p);
                cur = p;
            }
            _ => {
                return Err(Error::NotAncestor {
                    ancestor: format!("{:?}", tree.address(x)),
                    descendant: format!("{:?}", tree.address(y)),
                });
            }
        }
    }
    path.reverse();
    let marks: Vec<f64> = path[1..].iter().map(|&v| tree.mark(v)).collect();
    Ok(ProjectedEnvironment { path, line: LineEnvironment::new(marks) })
}

/// Exact hitting probabilities for the tree walk on the truncated state
/// space around the path from `x` to `y`: off-path subtrees are cut at
/// `off_path_depth` levels below their on-path anchor, with the cut leaves
/// absorbing (never returning). `to_y[i]` / `to_parent[i]` are the
/// probabilities, starting from the `i`-th path vertex, of reaching `y` /
/// the parent of `x` first.
#[derive(Debug, Clone)]
pub struct TreeHitSolution {
    pub path: Vec<VertexId>,
    pub to_y: Vec<f64>,
    pub to_parent: Vec<f64>,
}

pub fn tree_exit_probabilities(
    tree: &mut MarkedTree,
    x: VertexId,
    y: VertexId,
    off_path_depth: usize,
) -> Result<TreeHitSolution> {
    let projected = project_to_path(tree, x, y)?;
    let path = projected.path;
    let parent_of_x = tree
        .parent(x)
        .ok_or_else(|| Error::InvalidVertex("projection anchor has no parent".into()))?;

    // Enumerate transient states: path vertices except y, plus truncated
    // off-path subtrees hanging off them.
    let mut transient: Vec<VertexId> = Vec::new();
    let mut on_path: std::collections::HashSet<VertexId> = path.iter().copied().collect();
    on_path.insert(parent_of_x);
    let mut leak: std::collections::HashSet<VertexId> = std::collections::HashSet::new();
    for (i, &v) in path.iter().enumerate() {
        if i + 1 == path.len() {
            break; // y is absorbing
        }
        transient.push(v);
        // Off-path children and their truncated subtrees.
        let mut frontier: Vec<VertexId> = tree
            .children(v)?
            .into_iter()
            .filter(|c| !on_path.contains(c))
            .collect();
        let mut depth = 1usize;
        while !frontier.is_empty() {
            if depth > off_path_depth {
                break;
            }
            if depth == off_path_depth {
                leak.extend(frontier.iter().copied());
                break;
            }
            transient.extend(frontier.iter().copied());
            let mut next = Vec::new();
            for &c in &frontier {
                next.extend(tree.children(c)?);
            }
            frontier = next;
            depth += 1;
        }
    }
    let index: std::collections::HashMap<VertexId, usize> =
        transient.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = transient.len();
    let mut matrix = vec![0.0; n * n];
    let mut rhs_y = vec![0.0; n];
    let mut rhs_parent = vec![0.0; n];
    for (row, &v) in transient.iter().enumerate() {
        matrix[row * n + row] = 1.0;
        let record = tree.record(v)?;
        let mut neighbors: Vec<(VertexId, f64)> = Vec::with_capacity(record.offspring + 1);
        if let Some(p) = tree.parent(v) {
            neighbors.push((p, record.p_parent));
        }
        for (c, &prob) in tree.children(v)?.into_iter().zip(&record.p_children) {
            neighbors.push((c, prob));
        }
        for (u, prob) in neighbors {
            if u == y {
                rhs_y[row] += prob;
            } else if u == parent_of_x {
                rhs_parent[row] += prob;
            } else if let Some(&col) = index.get(&u) {
                matrix[row * n + col] -= prob;
            } else {
                debug_assert!(
                    leak.contains(&u),
                    "neighbor neither absorbing nor transient nor leaked"
                );
            }
        }
    }
    let solutions = solve_dense(&matrix, n, &[rhs_y, rhs_parent]);
    let to_y = path[..path.len() - 1]
        .iter()
        .map(|v| solutions[0][index[v]])
        .collect();
    let to_parent = path[..path.len() - 1]
        .iter()
        .map(|v| solutions[1][index[v]])
        .collect();
    Ok(TreeHitSolution { path, to_y, to_parent })
}
