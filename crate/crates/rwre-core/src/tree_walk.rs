//! Quenched walk simulation on a [`MarkedTree`]: trajectory recording,
//! regeneration detection, and the Monte Carlo estimators for speed, escape
//! exponent, never-return probability, and per-generation visit counts.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::exec::parallel_map_indexed;
use crate::gw_tree::{MarkedTree, VertexId};
use crate::law::{ALaw, OffspringLaw, is_transient};
use crate::seeding::{domain, mix, replicate_key, rng_from_key};
use crate::stats::{self, EstimateWithCI};

/// What a walk records besides its generation sequence.
#[derive(Debug, Clone)]
pub struct RecordOptions {
    /// Keep the full vertex sequence (required for regeneration detection).
    pub positions: bool,
    /// Stop adding new vertices to the occupation map beyond this many
    /// distinct vertices; existing counters keep updating.
    pub occupation_cap: usize,
    /// Restrict per-level occupation counts to this inclusive window.
    pub level_window: Option<(i32, i32)>,
}

impl Default for RecordOptions {
    fn default() -> Self {
        RecordOptions {
            positions: true,
            occupation_cap: 1 << 22,
            level_window: None,
        }
    }
}

/// A recorded trajectory. `generations[k] = |X_k|`; `tau[m]` is the first
/// hitting step of level `m` (present for every level the walk reached, in
/// order, when the walk starts at the root).
#[derive(Debug, Clone)]
pub struct WalkTrajectory {
    pub stream: u64,
    pub steps: usize,
    pub positions: Option<Vec<VertexId>>,
    pub generations: Vec<i32>,
    pub tau: Vec<usize>,
    pub occupation: HashMap<VertexId, u64>,
    pub occupation_truncated: bool,
    /// Visit counts per level >= 0 (index = level), within the window.
    pub level_occupation: Vec<u64>,
    /// Visits to the artificial parent (level -1).
    pub visits_parent_of_root: u64,
}

impl WalkTrajectory {
    pub fn final_generation(&self) -> i32 {
        *self.generations.last().expect("nonempty")
    }

    pub fn max_generation(&self) -> i32 {
        self.tau.len() as i32 - 1
    }
}

/// A regeneration: first entry to a fresh level at a branching vertex that
/// the walk never left toward its parent within the verification window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegenerationRecord {
    pub time: usize,
    pub level: i32,
    pub vertex: VertexId,
    /// The no-return window was cut short by the trajectory end.
    pub censored: bool,
}

/// Run the quenched chain from the root for `steps` steps.
pub fn run_walk(
    tree: &mut MarkedTree,
    steps: usize,
    opts: &RecordOptions,
) -> Result<WalkTrajectory> {
    run_walk_stream(tree, tree.root(), steps, opts, 0)
}

/// As [`run_walk`] but from an arbitrary start vertex and with an explicit
/// stream tag, so several independent walks can share one tree.
pub fn run_walk_stream(
    tree: &mut MarkedTree,
    start: VertexId,
    steps: usize,
    opts: &RecordOptions,
    stream: u64,
) -> Result<WalkTrajectory> {
    assert!(steps >= 1, "a walk needs at least one step");
    let mut rng = rng_from_key(mix(mix(tree.seed(), domain::WALK), stream));
    let mut positions = opts.positions.then(|| Vec::with_capacity(steps + 1));
    let mut generations = Vec::with_capacity(steps + 1);
    let mut tau = Vec::new();
    let mut occupation: HashMap<VertexId, u64> = HashMap::new();
    let mut occupation_truncated = false;
    let mut level_occupation: Vec<u64> = Vec::new();
    let mut visits_parent_of_root = 0u64;

    let mut cur = start;
    let mut step_index = 0usize;
    loop {
        let gen = tree.generation(cur);
        generations.push(gen);
        if let Some(p) = positions.as_mut() {
            p.push(cur);
        }
        if gen >= 0 && gen as usize == tau.len() {
            tau.push(step_index);
        }
        if cur.is_parent_of_root() {
            visits_parent_of_root += 1;
        } else {
            let in_window = opts
                .level_window
                .map(|(lo, hi)| gen >= lo && gen <= hi)
                .unwrap_or(true);
            if in_window {
                let idx = gen as usize;
                if level_occupation.len() <= idx {
                    level_occupation.resize(idx + 1, 0);
                }
                level_occupation[idx] += 1;
            }
        }
        if occupation.len() < opts.occupation_cap || occupation.contains_key(&cur) {
            *occupation.entry(cur).or_insert(0) += 1;
        } else {
            occupation_truncated = true;
        }
        if step_index == steps {
            break;
        }
        cur = tree.step(cur, &mut rng)?;
        step_index += 1;
    }

    Ok(WalkTrajectory {
        stream,
        steps,
        positions,
        generations,
        tau,
        occupation,
        occupation_truncated,
        level_occupation,
        visits_parent_of_root,
    })
}

/// Minimal walk: only the final generation (for speed estimates).
pub fn walk_final_generation(tree: &mut MarkedTree, steps: usize, stream: u64) -> Result<i32> {
    let mut rng = rng_from_key(mix(mix(tree.seed(), domain::WALK), stream));
    let mut cur = tree.root();
    for _ in 0..steps {
        cur = tree.step(cur, &mut rng)?;
    }
    Ok(tree.generation(cur))
}

/// Minimal walk recording the generation at each checkpoint step
/// (checkpoints must be increasing).
pub fn walk_generations_at(
    tree: &mut MarkedTree,
    checkpoints: &[usize],
    stream: u64,
) -> Result<Vec<i32>> {
    let mut rng = rng_from_key(mix(mix(tree.seed(), domain::WALK), stream));
    let mut cur = tree.root();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut step = 0usize;
    for &cp in checkpoints {
        assert!(cp >= step, "checkpoints must be increasing");
        while step < cp {
            cur = tree.step(cur, &mut rng)?;
            step += 1;
        }
        out.push(tree.generation(cur));
    }
    Ok(out)
}

/// Detect regenerations on a recorded trajectory.
///
/// The defining conditions at step `k`: the vertex has at least 2 children,
/// `k` is the first hitting time of its level, and the walk never steps to
/// the vertex's parent within the next `horizon` steps. Records whose
/// window is cut short by the trajectory end are flagged censored.
pub fn detect_regenerations(
    traj: &WalkTrajectory,
    tree: &mut MarkedTree,
    horizon: usize,
) -> Result<Vec<RegenerationRecord>> {
    let positions = traj
        .positions
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("trajectory was recorded without positions".into()))?;
    let n = traj.steps;
    // First down-step time per vertex. A fresh-level vertex is first occupied
    // at its hitting time, so its first down-step is the one that matters.
    let mut first_down: HashMap<VertexId, usize> = HashMap::new();
    for j in 1..=n {
        if traj.generations[j] < traj.generations[j - 1] {
            first_down.entry(positions[j - 1]).or_insert(j);
        }
    }
    let mut records = Vec::new();
    for level in 1..traj.tau.len() {
        let k = traj.tau[level];
        let v = positions[k];
        if tree.offspring_count(v)? < 2 {
            continue;
        }
        let censored = k + horizon > n;
        let window_end = (k + horizon).min(n);
        if let Some(&j) = first_down.get(&v) {
            if j <= window_end {
                continue;
            }
        }
        records.push(RegenerationRecord {
            time: k,
            level: level as i32,
            vertex: v,
            censored,
        });
    }
    Ok(records)
}

/// Gap statistics over uncensored regeneration records.
#[derive(Debug, Clone, Copy)]
pub struct RegenStats {
    /// Mean of consecutive level gaps over uncensored pairs (stationary
    /// increments; the gap from the origin to the first record is excluded).
    pub mean_level_gap: f64,
    pub mean_time_gap: f64,
    /// Power sum of time increments over uncensored records, with time
    /// origin 0 included as the zeroth record.
    pub power_sum: f64,
    pub terms: usize,
    pub censored_count: usize,
}

pub fn regeneration_statistics(records: &[RegenerationRecord], lambda: f64) -> Result<RegenStats> {
    let uncensored: Vec<&RegenerationRecord> = records.iter().filter(|r| !r.censored).collect();
    if uncensored.len() < 2 {
        return Err(Error::InsufficientRegenerations { found: uncensored.len() });
    }
    let pairs = uncensored.len() - 1;
    let mut level_gap = 0.0;
    let mut time_gap = 0.0;
    for w in uncensored.windows(2) {
        level_gap += (w[1].level - w[0].level) as f64;
        time_gap += (w[1].time - w[0].time) as f64;
    }
    let mut power_sum = 0.0;
    let mut prev = 0usize;
    for r in &uncensored {
        power_sum += ((r.time - prev) as f64).powf(lambda);
        prev = r.time;
    }
    Ok(RegenStats {
        mean_level_gap: level_gap / pairs as f64,
        mean_time_gap: time_gap / pairs as f64,
        power_sum,
        terms: uncensored.len(),
        censored_count: records.len() - uncensored.len(),
    })
}

fn require_transient(a_law: &ALaw, off: &OffspringLaw) -> Result<()> {
    if is_transient(a_law, off)? {
        Ok(())
    } else {
        Err(Error::NotTransient)
    }
}

/// Mean of `|X_steps| / steps` over independent replicates (tree and walk
/// both fresh per replicate).
pub fn estimate_speed(
    a_law: &ALaw,
    off: &OffspringLaw,
    steps: usize,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<EstimateWithCI> {
    require_transient(a_law, off)?;
    let samples: Result<Vec<f64>> = parallel_map_indexed(replicates, workers, |k| {
        let mut tree = MarkedTree::new(a_law.clone(), off.clone(), replicate_key(seed, k));
        let gen = walk_final_generation(&mut tree, steps, 0)?;
        Ok(gen as f64 / steps as f64)
    })
    .into_iter()
    .collect();
    Ok(EstimateWithCI::from_samples(&samples?, seed))
}

/// One row of the escape-exponent table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentRow {
    pub n: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

impl ExponentRow {
    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

/// Median and quartiles of `ln |X_n| / ln n` over replicates, for each `n`
/// in the schedule (entries below 2 are dropped: the ratio is undefined at
/// `n = 1`).
pub fn estimate_exponent(
    a_law: &ALaw,
    off: &OffspringLaw,
    schedule: &[usize],
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<ExponentRow>> {
    require_transient(a_law, off)?;
    let mut checkpoints: Vec<usize> = schedule.iter().copied().filter(|&n| n >= 2).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints.is_empty() {
        return Err(Error::InvalidInput("exponent schedule has no entries >= 2".into()));
    }
    let per_replicate: Result<Vec<Vec<i32>>> = parallel_map_indexed(replicates, workers, |k| {
        let mut tree = MarkedTree::new(a_law.clone(), off.clone(), replicate_key(seed, k));
        walk_generations_at(&mut tree, &checkpoints, 0)
    })
    .into_iter()
    .collect();
    let per_replicate = per_replicate?;
    let rows = checkpoints
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let values: Vec<f64> = per_replicate
                .iter()
                .map(|gens| (gens[i].max(1) as f64).ln() / (n as f64).ln())
                .collect();
            let (q25, median, q75) = stats::quartiles(&values);
            ExponentRow { n, median, q25, q75 }
        })
        .collect();
    Ok(rows)
}

/// Monte Carlo estimate of the never-return probability from `vertex`:
/// the fraction of walks that do not hit its parent within `horizon` steps.
/// Upward-biased for finite horizons.
pub fn estimate_beta_mc(
    tree: &mut MarkedTree,
    vertex: VertexId,
    horizon: usize,
    replicates: u64,
    seed: u64,
) -> Result<EstimateWithCI> {
    let parent = tree
        .parent(vertex)
        .ok_or_else(|| Error::InvalidVertex("the artificial parent has no parent".into()))?;
    let parent_gen = tree.generation(parent);
    let mut hits = 0u64;
    for k in 0..replicates {
        let mut rng = rng_from_key(mix(mix(tree.seed(), domain::WALK), replicate_key(seed, k)));
        let mut cur = vertex;
        let mut escaped = true;
        for s in 1..=horizon {
            cur = tree.step(cur, &mut rng)?;
            if cur == parent {
                escaped = false;
                break;
            }
            // Reaching the parent takes at least its generation distance;
            // once that exceeds the remaining window the outcome is decided.
            if (tree.generation(cur) - parent_gen) as usize > horizon - s {
                break;
            }
        }
        if escaped {
            hits += 1;
        }
    }
    Ok(EstimateWithCI::from_hits(hits, replicates, seed))
}

/// Population-level never-return probability: one walk from the root of a
/// fresh tree per replicate (the subtree at the root is itself a fresh tree,
/// so this samples the generic never-return distribution).
pub fn estimate_beta_population(
    a_law: &ALaw,
    off: &OffspringLaw,
    horizon: usize,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<EstimateWithCI> {
    let escapes: Result<Vec<f64>> = parallel_map_indexed(replicates, workers, |k| {
        let mut tree = MarkedTree::new(a_law.clone(), off.clone(), replicate_key(seed, k));
        let mut rng = rng_from_key(mix(mix(tree.seed(), domain::WALK), 0));
        let mut cur = tree.root();
        for s in 1..=horizon {
            cur = tree.step(cur, &mut rng)?;
            if cur.is_parent_of_root() {
                return Ok(0.0);
            }
            if (tree.generation(cur) + 1) as usize > horizon - s {
                break;
            }
        }
        Ok(1.0)
    })
    .into_iter()
    .collect();
    Ok(EstimateWithCI::from_samples(&escapes?, seed))
}

/// Certified bracket for the never-return probability from `vertex`.
///
/// Runs the fixed-point map `1/beta(x) = 1 + 1/(sum_i A(x_i) beta(x_i))`
/// bottom-up from depth `d` twice: boundary 1 gives the upper end, the
/// worst-case single-path never-return value gives the lower end. The map is
/// monotone in the boundary, so the true value lies inside the bracket.
pub fn estimate_beta_recursion(
    tree: &mut MarkedTree,
    vertex: VertexId,
    depth: usize,
) -> Result<(f64, f64)> {
    // Never-return probability of the constant-mark line walk at the law's
    // worst mark; zero when that walk is recurrent.
    let worst = tree.a_law().ess_inf();
    let beta_min = if worst > 1.0 { 1.0 - 1.0 / worst } else { 0.0 };
    if depth == 0 {
        return Ok((beta_min, 1.0));
    }
    let mut levels: Vec<Vec<VertexId>> = vec![vec![vertex]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &v in levels.last().expect("nonempty") {
            next.extend(tree.children(v)?);
        }
        levels.push(next);
    }
    let mut values: HashMap<VertexId, (f64, f64)> = levels
        .last()
        .expect("nonempty")
        .iter()
        .map(|&v| (v, (beta_min, 1.0)))
        .collect();
    for level in (0..depth).rev() {
        for &v in &levels[level] {
            let children = tree.children(v)?;
            let mut s_lo = 0.0;
            let mut s_hi = 0.0;
            for c in children {
                let (lo, hi) = values[&c];
                let a = tree.mark(c);
                s_lo += a * lo;
                s_hi += a * hi;
            }
            let fold = |s: f64| if s > 0.0 { s / (s + 1.0) } else { 0.0 };
            values.insert(v, (fold(s_lo), fold(s_hi)));
        }
    }
    Ok(values[&vertex])
}

/// Monte Carlo estimate of the expected number of level-`n` vertices the
/// walk ever visits, with a finite-step surrogate: each replicate runs until
/// the walk first reaches level `n + lookahead` (or a step cap); visits to
/// level `n` after that escape are negligible under transience.
#[allow(clippy::too_many_arguments)]
pub fn visited_per_generation(
    a_law: &ALaw,
    off: &OffspringLaw,
    n: usize,
    lookahead: usize,
    step_cap: usize,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<EstimateWithCI> {
    require_transient(a_law, off)?;
    let target = (n + lookahead) as i32;
    let counts: Result<Vec<f64>> = parallel_map_indexed(replicates, workers, |k| {
        let mut tree = MarkedTree::new(a_law.clone(), off.clone(), replicate_key(seed, k));
        let mut rng = rng_from_key(mix(mix(tree.seed(), domain::WALK), 0));
        let mut cur = tree.root();
        let mut visited: HashSet<VertexId> = HashSet::new();
        if n == 0 {
            visited.insert(cur);
        }
        for _ in 0..step_cap {
            cur = tree.step(cur, &mut rng)?;
            let gen = tree.generation(cur);
            if gen == n as i32 {
                visited.insert(cur);
            }
            if gen >= target {
                break;
            }
        }
        Ok(visited.len() as f64)
    })
    .into_iter()
    .collect();
    Ok(EstimateWithCI::from_samples(&counts?, seed))
}
