//! Linearly edge reinforced random walk (LERRW) on the regular b-ary tree.
//!
//! Two interchangeable engines:
//!
//! * the urn process itself: every edge starts at weight 1, the walk picks
//!   an incident edge proportionally to weight and adds `delta` to the edge
//!   it crosses;
//! * its random-environment representation for `delta = 1`: independent
//!   per-vertex transition vectors whose parent coordinate has density
//!   `f0(x) = (b/2)(1-x)^{b/2-1}` and whose child coordinates have density
//!   `f1(x) = c x^{-1/2} (1-x)^{(b-1)/2}`.
//!
//! On a tree, consecutive departures from a vertex return through the same
//! edge, so each vertex runs a standalone urn whose draws gain `2 delta`;
//! with initial weights `(1+delta, 1, ..., 1)` at a non-root vertex this is
//! the Dirichlet `(1, 1/2, ..., 1/2)` mixture at `delta = 1` (parent slot
//! first), whose marginals are exactly `f0` and `f1`; the root, entered with
//! all weights 1, gets Dirichlet `(1/2, ..., 1/2)`. The equivalence test
//! below checks the two engines against each other behaviorally.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::Result;
use crate::exec::parallel_map_indexed;
use crate::seeding::{domain, mix, replicate_key, rng_from_key};
use crate::stats::{self, ChiSquareOutcome, EstimateWithCI};

const NO_NODE: u32 = u32::MAX;

struct UrnNode {
    parent: u32,
    depth: u32,
    /// Weight of the edge to the parent (1 + delta * crossings).
    parent_edge_weight: f64,
    /// Child node ids; `NO_NODE` marks an untouched edge of weight 1.
    children: Option<Box<[u32]>>,
}

/// The urn process state: lazily materialized weights on an infinite b-ary
/// tree, plus the walker position.
pub struct UrnState {
    b: usize,
    delta: f64,
    nodes: Vec<UrnNode>,
    current: u32,
    steps: u64,
}

/// One move of the urn walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UrnMove {
    ToParent,
    ToChild(usize),
}

impl UrnMove {
    pub fn label(self) -> char {
        match self {
            UrnMove::ToParent => 'p',
            UrnMove::ToChild(slot) => {
                char::from_digit(slot as u32 + 1, 10).expect("branching stays below 10")
            }
        }
    }
}

impl UrnState {
    pub fn new(b: usize, delta: f64) -> Self {
        assert!(b >= 2, "reinforced walk needs branching at least 2");
        assert!(delta >= 0.0);
        UrnState {
            b,
            delta,
            nodes: vec![UrnNode {
                parent: NO_NODE,
                depth: 0,
                parent_edge_weight: f64::NAN,
                children: None,
            }],
            current: 0,
            steps: 0,
        }
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Generation of the walker.
    pub fn current_depth(&self) -> u32 {
        self.nodes[self.current as usize].depth
    }

    /// Incident edge weights at the walker: `(parent edge, child slots)`.
    pub fn incident_weights(&self) -> (Option<f64>, Vec<f64>) {
        let node = &self.nodes[self.current as usize];
        let parent = (node.parent != NO_NODE).then_some(node.parent_edge_weight);
        let children = match &node.children {
            None => vec![1.0; self.b],
            Some(slots) => slots
                .iter()
                .map(|&c| {
                    if c == NO_NODE {
                        1.0
                    } else {
                        self.nodes[c as usize].parent_edge_weight
                    }
                })
                .collect(),
        };
        (parent, children)
    }

    /// Total reinforcement handed out so far: `sum_edges (w - 1)`, which the
    /// bookkeeping keeps equal to `steps * delta`.
    pub fn total_added_weight(&self) -> f64 {
        self.nodes[1..]
            .iter()
            .map(|n| n.parent_edge_weight - 1.0)
            .sum()
    }

    /// Sample an incident edge proportionally to weight, cross it, and
    /// reinforce it by `delta`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> UrnMove {
        let cur = self.current as usize;
        let (parent_w, child_ws) = self.incident_weights();
        let total: f64 = parent_w.unwrap_or(0.0) + child_ws.iter().sum::<f64>();
        let mut u: f64 = rng.random::<f64>() * total;
        self.steps += 1;
        if let Some(w) = parent_w {
            if u < w {
                self.nodes[cur].parent_edge_weight += self.delta;
                self.current = self.nodes[cur].parent;
                return UrnMove::ToParent;
            }
            u -= w;
        }
        let mut slot = self.b - 1;
        for (i, &w) in child_ws.iter().enumerate() {
            if u < w {
                slot = i;
                break;
            }
            u -= w;
        }
        let child = self.materialize_child(cur, slot);
        self.nodes[child as usize].parent_edge_weight += self.delta;
        self.current = child;
        UrnMove::ToChild(slot)
    }

    fn materialize_child(&mut self, parent: usize, slot: usize) -> u32 {
        let b = self.b;
        let slots = self.nodes[parent]
            .children
            .get_or_insert_with(|| vec![NO_NODE; b].into_boxed_slice());
        if slots[slot] != NO_NODE {
            return slots[slot];
        }
        let id = self.nodes.len() as u32;
        let depth = self.nodes[parent].depth + 1;
        self.nodes[parent].children.as_mut().expect("just set")[slot] = id;
        self.nodes.push(UrnNode {
            parent: parent as u32,
            depth,
            parent_edge_weight: 1.0,
            children: None,
        });
        id
    }
}

/// A sampled environment vector at a non-root vertex: parent coordinate
/// plus `b` child coordinates, summing to 1.
#[derive(Debug, Clone)]
pub struct BetaEnvNode {
    pub omega_parent: f64,
    pub omega_children: Vec<f64>,
}

fn dirichlet<R: Rng + ?Sized>(alphas: &[f64], rng: &mut R) -> Vec<f64> {
    let mut draws: Vec<f64> = alphas
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    for d in &mut draws {
        *d /= total;
    }
    draws
}

/// Environment vector at a non-root vertex for the `delta = 1` walk:
/// Dirichlet with parameter 1 on the parent slot and 1/2 on each child slot.
pub fn sample_beta_env<R: Rng + ?Sized>(b: usize, rng: &mut R) -> BetaEnvNode {
    sample_beta_env_with(b, 1.0, 0.5, rng)
}

/// Same with explicit Dirichlet parameters (the corrupted child parameter 1
/// serves as the negative control in the equivalence test).
pub fn sample_beta_env_with<R: Rng + ?Sized>(
    b: usize,
    parent_alpha: f64,
    child_alpha: f64,
    rng: &mut R,
) -> BetaEnvNode {
    let mut alphas = vec![child_alpha; b + 1];
    alphas[0] = parent_alpha;
    let mut probs = dirichlet(&alphas, rng);
    let omega_parent = probs.remove(0);
    BetaEnvNode { omega_parent, omega_children: probs }
}

/// Environment vector at the root (no parent edge): Dirichlet(1/2, ..., 1/2)
/// over the `b` children.
pub fn sample_root_children<R: Rng + ?Sized>(
    b: usize,
    child_alpha: f64,
    rng: &mut R,
) -> Vec<f64> {
    dirichlet(&vec![child_alpha; b], rng)
}

/// CDF of the parent-coordinate density `f0`: `1 - (1-x)^{b/2}`.
pub fn f0_cdf(b: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - x).powf(b as f64 / 2.0)
    }
}

/// CDF of the child-coordinate density `f1`, tabulated by numeric
/// integration. The substitution `x = u^2` removes the inverse-square-root
/// singularity at 0: the integrand becomes `2c (1-u^2)^{(b-1)/2}`.
pub struct ChildMarginalCdf {
    grid: Vec<f64>,
}

impl ChildMarginalCdf {
    const PANELS: usize = 16_384;

    pub fn build(b: usize) -> Self {
        let bf = b as f64;
        let ln_c = ln_gamma(bf / 2.0 + 1.0)
            - ln_gamma(0.5)
            - ln_gamma((bf + 1.0) / 2.0);
        let c = ln_c.exp();
        let f = |u: f64| 2.0 * c * (1.0 - u * u).powf((bf - 1.0) / 2.0);
        let h = 1.0 / Self::PANELS as f64;
        let mut grid = Vec::with_capacity(Self::PANELS + 1);
        grid.push(0.0);
        let mut acc = 0.0;
        for i in 0..Self::PANELS {
            let lo = i as f64 * h;
            let hi = lo + h;
            acc += h / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
            grid.push(acc);
        }
        // The integrand has a square-root derivative singularity at u = 1,
        // so composite Simpson converges at reduced order there; a few 1e-8
        // of residual is expected and harmless at KS resolution.
        let total = *grid.last().expect("nonempty");
        debug_assert!(
            (total - 1.0).abs() < 1e-6,
            "f1 normalization off: integral = {total}"
        );
        ChildMarginalCdf { grid }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let u = x.sqrt() * Self::PANELS as f64;
        let i = (u as usize).min(Self::PANELS - 1);
        let frac = u - i as f64;
        (self.grid[i] + frac * (self.grid[i + 1] - self.grid[i])).clamp(0.0, 1.0)
    }
}

/// Lazily sampled quenched environment on the b-ary tree (the representation
/// of the `delta = 1` urn walk).
struct EnvTree {
    b: usize,
    parent_alpha: f64,
    child_alpha: f64,
    nodes: Vec<EnvNode>,
}

struct EnvNode {
    parent: u32,
    depth: u32,
    /// Transition probabilities: parent first for non-root vertices.
    omega_parent: f64,
    omega_children: Vec<f64>,
    children: Vec<u32>,
}

impl EnvTree {
    fn new<R: Rng + ?Sized>(b: usize, parent_alpha: f64, child_alpha: f64, rng: &mut R) -> Self {
        let children_probs = sample_root_children(b, child_alpha, rng);
        EnvTree {
            b,
            parent_alpha,
            child_alpha,
            nodes: vec![EnvNode {
                parent: NO_NODE,
                depth: 0,
                omega_parent: 0.0,
                omega_children: children_probs,
                children: vec![NO_NODE; b],
            }],
        }
    }

    fn child<R: Rng + ?Sized>(&mut self, node: usize, slot: usize, rng: &mut R) -> u32 {
        if self.nodes[node].children[slot] != NO_NODE {
            return self.nodes[node].children[slot];
        }
        let env = sample_beta_env_with(self.b, self.parent_alpha, self.child_alpha, rng);
        let id = self.nodes.len() as u32;
        let depth = self.nodes[node].depth + 1;
        self.nodes[node].children[slot] = id;
        self.nodes.push(EnvNode {
            parent: node as u32,
            depth,
            omega_parent: env.omega_parent,
            omega_children: env.omega_children,
            children: vec![NO_NODE; self.b],
        });
        id
    }

    /// One quenched step; returns the move label.
    fn step<R: Rng + ?Sized>(&mut self, current: &mut u32, rng: &mut R) -> UrnMove {
        let cur = *current as usize;
        let u: f64 = rng.random();
        let node = &self.nodes[cur];
        let mut acc = 0.0;
        if node.parent != NO_NODE {
            acc += node.omega_parent;
            if u < acc {
                *current = node.parent;
                return UrnMove::ToParent;
            }
        }
        let mut slot = self.b - 1;
        for (i, &p) in node.omega_children.iter().enumerate() {
            acc += p;
            if u < acc {
                slot = i;
                break;
            }
        }
        *current = self.child(cur, slot, rng);
        UrnMove::ToChild(slot)
    }
}

/// Outcome of the urn-vs-environment distributional comparison.
#[derive(Debug, Clone)]
pub struct EquivalenceOutcome {
    pub chi_square: ChiSquareOutcome,
    pub urn_prefixes: u64,
    pub env_prefixes: u64,
}

impl EquivalenceOutcome {
    pub fn p_value(&self) -> f64 {
        self.chi_square.p_value
    }
}

/// Chi-square comparison of `prefix_steps`-step trajectory prefixes under
/// (i) the urn simulation at `delta = 1` and (ii) the sampled Beta
/// environments. `corrupt_env` switches the environment sampler to child
/// parameter 1 (the negative control, which the test must reject).
pub fn equivalence_test(
    b: usize,
    prefix_steps: usize,
    replicates: u64,
    seed: u64,
    corrupt_env: bool,
) -> Result<EquivalenceOutcome> {
    assert!(
        (1..=10).contains(&prefix_steps),
        "prefix length must stay enumerable (1..=10)"
    );
    assert!(b < 10, "prefix labels use single digits");
    let child_alpha = if corrupt_env { 1.0 } else { 0.5 };
    let mut urn_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut env_counts: BTreeMap<String, u64> = BTreeMap::new();
    for k in 0..replicates {
        let mut rng = rng_from_key(mix(replicate_key(seed, k), domain::URN));
        let mut urn = UrnState::new(b, 1.0);
        let mut prefix = String::with_capacity(prefix_steps);
        for _ in 0..prefix_steps {
            prefix.push(urn.step(&mut rng).label());
        }
        *urn_counts.entry(prefix).or_insert(0) += 1;

        let mut rng = rng_from_key(mix(replicate_key(seed, k), domain::ENV));
        let mut env = EnvTree::new(b, 1.0, child_alpha, &mut rng);
        let mut cur = 0u32;
        let mut prefix = String::with_capacity(prefix_steps);
        for _ in 0..prefix_steps {
            prefix.push(env.step(&mut cur, &mut rng).label());
        }
        *env_counts.entry(prefix).or_insert(0) += 1;
    }
    let chi_square = stats::chi_square_homogeneity(&urn_counts, &env_counts)?;
    Ok(EquivalenceOutcome {
        chi_square,
        urn_prefixes: replicates,
        env_prefixes: replicates,
    })
}

/// Mean of `|X_steps| / steps` over urn-simulated replicates.
pub fn lerrw_speed(
    b: usize,
    delta: f64,
    steps: u64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> EstimateWithCI {
    let samples: Vec<f64> = parallel_map_indexed(replicates, workers, |k| {
        let mut rng = rng_from_key(mix(replicate_key(seed, k), domain::URN));
        let mut urn = UrnState::new(b, delta);
        for _ in 0..steps {
            urn.step(&mut rng);
        }
        urn.current_depth() as f64 / steps as f64
    });
    EstimateWithCI::from_samples(&samples, seed)
}

/// Signed late-window drift: `(|X_n| - |X_{n/2}|) / (n - n/2)` per
/// replicate. Unlike `|X_n|/n`, which is nonnegative by construction, this
/// is centered at 0 for a recurrent walk, so "drift indistinguishable from
/// zero" is a meaningful test.
pub fn lerrw_late_drift(
    b: usize,
    delta: f64,
    steps: u64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> EstimateWithCI {
    assert!(steps >= 2);
    let half = steps / 2;
    let samples: Vec<f64> = parallel_map_indexed(replicates, workers, |k| {
        let mut rng = rng_from_key(mix(replicate_key(seed, k), domain::URN));
        let mut urn = UrnState::new(b, delta);
        for _ in 0..half {
            urn.step(&mut rng);
        }
        let mid = urn.current_depth() as f64;
        for _ in half..steps {
            urn.step(&mut rng);
        }
        (urn.current_depth() as f64 - mid) / (steps - half) as f64
    });
    EstimateWithCI::from_samples(&samples, seed)
}

/// Numeric check of the positive-speed hypothesis for the Beta environment:
/// `E[(sum_i A_i)^{-1}] < infinity`, where `A_i = omega_i / omega_parent`.
///
/// `(sum A_i)^{-1} = omega_parent / (1 - omega_parent)` has tail index `b/2`
/// under `f0`, so the mean is finite iff `b > 2`. The check estimates the
/// tail index (Hill) and raises the divergence alarm when it is not safely
/// above 1; `b = 2` sits exactly at the boundary and is flagged borderline.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisCheck {
    pub holds: bool,
    pub borderline: bool,
    pub tail_index: f64,
    pub mc_mean: f64,
}

pub fn check_theorem_errw_hypothesis(b: usize, samples: u64, seed: u64) -> HypothesisCheck {
    let mut rng = rng_from_key(mix(seed, domain::ENV));
    let ys: Vec<f64> = (0..samples)
        .map(|_| {
            let env = sample_beta_env(b, &mut rng);
            env.omega_parent / (1.0 - env.omega_parent)
        })
        .collect();
    let k = (samples as usize / 50).max(100).min(ys.len() - 1);
    let tail_index = stats::hill_tail_index(&ys, k);
    let mc_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let borderline = (tail_index - 1.0).abs() < 0.1;
    HypothesisCheck {
        holds: tail_index >= 1.1,
        borderline,
        tail_index,
        mc_mean,
    }
}
