//! The experiment commands behind the CLI subcommands. Each consumes a
//! parsed [`Config`], runs its estimators, and produces a [`RunReport`]
//! plus an optional artifact (CSV tables or a JSONL stream) for `--out`.

use serde::Serialize;

use rwre_core::exec::parallel_map_indexed;
use rwre_core::gw_tree::MarkedTree;
use rwre_core::law::{self, TransformTable};
use rwre_core::lerrw;
use rwre_core::line_walk::{self, LineEnvironment};
use rwre_core::seeding::{self, replicate_key};
use rwre_core::stats::{self, EstimateWithCI};
use rwre_core::tree_walk::{self, RecordOptions};
use rwre_core::Error as CoreError;

use crate::config::{Config, LAW_KEYS};
use crate::error::{HarnessError, Result};
use crate::report::{AnalyticReport, JsonExt, RunReport, Table, fmt17};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy)]
pub struct CommonOpts {
    pub seed: Option<u64>,
    pub workers: usize,
    pub format: OutputFormat,
}

impl Default for CommonOpts {
    fn default() -> Self {
        CommonOpts { seed: None, workers: 1, format: OutputFormat::Csv }
    }
}

#[derive(Debug)]
pub struct CommandOutput {
    pub report: RunReport,
    /// Content for `--out`, already rendered.
    pub artifact: Option<String>,
}

fn tables_as_jsonl(report: &RunReport) -> String {
    let mut out = String::new();
    for table in &report.tables {
        for row in &table.rows {
            let mut obj = serde_json::Map::new();
            obj.insert("table".into(), table.name.clone().into());
            for (col, cell) in table.columns.iter().zip(row) {
                obj.insert(col.clone(), cell.clone().into());
            }
            out.push_str(&serde_json::Value::Object(obj).to_string());
            out.push('\n');
        }
    }
    out
}

fn artifact_from_tables(report: &RunReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => report.tables_to_csv(),
        OutputFormat::Jsonl => tables_as_jsonl(report),
    }
}

/// Analytic exponents: the sublevel-set exponent, the one-dimensional
/// exponent, the transience verdict, and the variational table.
pub fn cmd_lambda(cfg: &Config, opts: &CommonOpts) -> Result<CommandOutput> {
    let mut allowed = LAW_KEYS.to_vec();
    allowed.push("analysis.lambda.grid");
    cfg.validate_keys(&allowed)?;
    let a_law = cfg.a_law()?;
    let off = cfg.offspring_law()?;
    let seed = cfg.seed(opts.seed)?;

    let lambda = law::lambda_exponent(&a_law, off.q1());
    let kappa = law::solomon_kappa(&a_law);
    let l_prime = law::big_l_prime(&a_law, off.q1());
    let transience = match law::is_transient(&a_law, &off) {
        Ok(true) => "transient",
        Ok(false) => "recurrent",
        Err(CoreError::BorderlineCriterion { .. }) => "borderline",
        Err(e) => return Err(e.into()),
    }
    .to_string();

    let grid = match cfg.contains("analysis.lambda.grid") {
        true => cfg.get_f64_list("analysis.lambda.grid")?,
        false => (1..=10).map(|i| i as f64 / 10.0).collect(),
    };
    let table = TransformTable::new(&a_law);
    let mut l_table = Table::new("l_table", &["lambda", "value", "t_bar"]);
    for &lam in &grid {
        if !(lam > 0.0 && lam <= 1.0) {
            return Err(HarnessError::config_field(
                "analysis.lambda.grid",
                format!("lambda {lam} outside (0, 1]"),
            ));
        }
        let (value, t_bar) = table.big_l(lam);
        l_table.push_row(vec![fmt17(lam), fmt17(value), fmt17(t_bar)]);
    }

    let mut report = RunReport::new("lambda", seed, opts.workers, cfg.entries());
    report.analytic = Some(AnalyticReport {
        lambda: JsonExt(lambda),
        kappa,
        transience,
        l_prime: JsonExt(l_prime),
    });
    report.tables.push(l_table);
    let artifact = artifact_from_tables(&report, opts.format);
    Ok(CommandOutput { report, artifact: Some(artifact) })
}

#[derive(Serialize)]
struct StreamRow {
    replicate: u64,
    n: usize,
    gen: i32,
    tau: Option<usize>,
    regen_count: usize,
    censored_rate: f64,
}

/// Tree-walk estimators: speed, escape exponent, regeneration statistics.
/// Streams one JSON object per replicate.
pub fn cmd_simulate(cfg: &Config, opts: &CommonOpts) -> Result<CommandOutput> {
    let mut allowed = LAW_KEYS.to_vec();
    allowed.extend([
        "walk.steps",
        "walk.replicates",
        "walk.horizon",
        "walk.exponent.schedule",
        "walk.regenerations",
        "walk.budget",
    ]);
    cfg.validate_keys(&allowed)?;
    let a_law = cfg.a_law()?;
    let off = cfg.offspring_law()?;
    let seed = cfg.seed(opts.seed)?;
    let steps = cfg.get_u64("walk.steps")? as usize;
    if steps == 0 {
        return Err(HarnessError::config_field("walk.steps", "must be at least 1"));
    }
    let replicates = cfg.get_u64_or("walk.replicates", 100)?;
    if replicates == 0 {
        return Err(HarnessError::config_field("walk.replicates", "must be at least 1"));
    }
    let horizon = cfg.get_usize_or("walk.horizon", 1_000)?;
    let detect = cfg.get_bool_or("walk.regenerations", true)?;
    let budget = cfg.get_usize_or("walk.budget", rwre_core::gw_tree::DEFAULT_NODE_BUDGET)?;
    let mut schedule = cfg.get_usize_list_or(
        "walk.exponent.schedule",
        &[steps / 100, steps / 10, steps],
    )?;
    schedule.retain(|&n| n >= 2 && n <= steps);
    schedule.push(steps);
    schedule.sort_unstable();
    schedule.dedup();

    if !law::is_transient(&a_law, &off)? {
        return Err(CoreError::NotTransient.into());
    }

    struct Replicate {
        gens_at: Vec<i32>,
        row: StreamRow,
    }
    let per: std::result::Result<Vec<Replicate>, CoreError> =
        parallel_map_indexed(replicates, opts.workers, |k| {
            let mut tree = MarkedTree::with_budget(
                a_law.clone(),
                off.clone(),
                replicate_key(seed, k),
                budget,
            );
            let record = RecordOptions {
                positions: detect,
                occupation_cap: 0,
                level_window: Some((0, -1)), // disable level tallies
            };
            let traj = tree_walk::run_walk(&mut tree, steps, &record)?;
            let gens_at: Vec<i32> = schedule.iter().map(|&cp| traj.generations[cp]).collect();
            let (regen_count, censored) = if detect {
                let records = tree_walk::detect_regenerations(&traj, &mut tree, horizon)?;
                let censored = records.iter().filter(|r| r.censored).count();
                (records.len(), censored)
            } else {
                (0, 0)
            };
            Ok(Replicate {
                gens_at,
                row: StreamRow {
                    replicate: k,
                    n: steps,
                    gen: traj.final_generation(),
                    tau: traj.tau.last().copied(),
                    regen_count,
                    censored_rate: if regen_count > 0 {
                        censored as f64 / regen_count as f64
                    } else {
                        0.0
                    },
                },
            })
        })
        .into_iter()
        .collect();
    let per = per?;

    let speeds: Vec<f64> = per
        .iter()
        .map(|r| r.row.gen as f64 / steps as f64)
        .collect();
    let speed = EstimateWithCI::from_samples(&speeds, seed);

    let mut exponent_table = Table::new("exponent_table", &["n", "median", "q25", "q75", "iqr"]);
    for (i, &n) in schedule.iter().enumerate() {
        if n < 2 {
            continue;
        }
        let values: Vec<f64> = per
            .iter()
            .map(|r| (r.gens_at[i].max(1) as f64).ln() / (n as f64).ln())
            .collect();
        let (q25, median, q75) = stats::quartiles(&values);
        exponent_table.push_row(vec![
            n.to_string(),
            fmt17(median),
            fmt17(q25),
            fmt17(q75),
            fmt17(q75 - q25),
        ]);
    }

    let total_regens: usize = per.iter().map(|r| r.row.regen_count).sum();
    let total_censored: f64 = per
        .iter()
        .map(|r| r.row.censored_rate * r.row.regen_count as f64)
        .sum();
    let censoring_rate = if total_regens > 0 {
        Some(total_censored / total_regens as f64)
    } else {
        None
    };

    let mut report = RunReport::new("simulate", seed, opts.workers, cfg.entries());
    report.push_estimate("speed", &speed);
    report.tables.push(exponent_table);
    report.censoring_rate = censoring_rate;

    let artifact = match opts.format {
        OutputFormat::Jsonl => {
            let mut out = String::new();
            for r in &per {
                out.push_str(&serde_json::to_string(&r.row)?);
                out.push('\n');
            }
            out
        }
        OutputFormat::Csv => report.tables_to_csv(),
    };
    Ok(CommandOutput { report, artifact: Some(artifact) })
}

/// One-dimensional estimators: the annealed moment and survival tables plus
/// the circuit-vs-oracle equivalence report.
pub fn cmd_line(cfg: &Config, opts: &CommonOpts) -> Result<CommandOutput> {
    cfg.validate_keys(&[
        "law.a.",
        "seed",
        "line.m.n.grid",
        "line.m.lambda.grid",
        "line.m.replicates",
        "line.p.n",
        "line.p.a.grid",
        "line.p.replicates",
        "line.oracle.envs",
        "line.oracle.max.n",
    ])?;
    let a_law = cfg.a_law()?;
    let seed = cfg.seed(opts.seed)?;

    let mut report = RunReport::new("line", seed, opts.workers, cfg.entries());

    // Moment table.
    let n_grid = cfg.get_usize_list_or("line.m.n.grid", &[10, 20, 30, 40, 50, 60])?;
    let lambda_grid = match cfg.contains("line.m.lambda.grid") {
        true => cfg.get_f64_list("line.m.lambda.grid")?,
        false => vec![0.5, 1.0],
    };
    let m_replicates = cfg.get_u64_or("line.m.replicates", 10_000)?;
    let mut m_table = Table::new("m_table", &["n", "lambda", "m_hat", "stderr"]);
    for &n in &n_grid {
        for &lam in &lambda_grid {
            if !(0.0..=1.0).contains(&lam) {
                return Err(HarnessError::config_field(
                    "line.m.lambda.grid",
                    format!("lambda {lam} outside [0, 1]"),
                ));
            }
            let est = line_walk::m_estimate(&a_law, n, lam, m_replicates, seed, opts.workers);
            m_table.push_row(vec![
                n.to_string(),
                fmt17(lam),
                fmt17(est.point),
                fmt17(est.stderr),
            ]);
        }
    }
    report.tables.push(m_table);

    // Survival table, optional.
    if cfg.contains("line.p.a.grid") {
        let p_n = cfg.get_usize_or("line.p.n", 20)?;
        let p_replicates = cfg.get_u64_or("line.p.replicates", 10_000)?;
        let a_grid = cfg.get_usize_list_or("line.p.a.grid", &[])?;
        let mut p_table = Table::new("p_table", &["n", "a", "p_hat", "stderr"]);
        for &a in &a_grid {
            let est =
                line_walk::p_estimate(&a_law, p_n, a as u64, p_replicates, seed, opts.workers);
            p_table.push_row(vec![
                p_n.to_string(),
                a.to_string(),
                fmt17(est.point),
                fmt17(est.stderr),
            ]);
        }
        report.tables.push(p_table);
    }

    // Circuit formulas vs the direct solver.
    let oracle_envs = cfg.get_u64_or("line.oracle.envs", 200)?;
    let oracle_max_n = cfg.get_usize_or("line.oracle.max.n", 50)?;
    let mut max_hit_diff = 0.0f64;
    let mut max_exit_diff = 0.0f64;
    for k in 0..oracle_envs {
        let mut rng = seeding::rng_from_key(seeding::mix(replicate_key(seed, k), 0x0c0c));
        let n = 1 + (k as usize) % oracle_max_n;
        let env = LineEnvironment::sample(&a_law, n, &mut rng);
        let sol = line_walk::oracle_solve(&env);
        for j in 0..=n {
            max_hit_diff =
                max_hit_diff.max((env.prob_reach_end_from(j) - sol.hit[j + 1]).abs());
        }
        max_exit_diff = max_exit_diff.max((env.expected_exit_time() - sol.exit[1]).abs());
    }
    let mut oracle_table = Table::new("oracle_diff", &["envs", "max_hit_diff", "max_exit_diff"]);
    oracle_table.push_row(vec![
        oracle_envs.to_string(),
        fmt17(max_hit_diff),
        fmt17(max_exit_diff),
    ]);
    report.tables.push(oracle_table);

    let artifact = artifact_from_tables(&report, opts.format);
    Ok(CommandOutput { report, artifact: Some(artifact) })
}

/// Reinforced-walk estimators: urn speed and late drift, the
/// urn-vs-environment equivalence test, marginal goodness of fit, and the
/// positive-speed hypothesis check.
pub fn cmd_lerrw(cfg: &Config, opts: &CommonOpts) -> Result<CommandOutput> {
    cfg.validate_keys(&[
        "seed",
        "lerrw.b",
        "lerrw.delta",
        "lerrw.steps",
        "lerrw.replicates",
        "lerrw.equivalence.prefix",
        "lerrw.equivalence.replicates",
        "lerrw.negative.control",
        "lerrw.gof.samples",
        "lerrw.hypothesis.samples",
    ])?;
    let seed = cfg.seed(opts.seed)?;
    let b = cfg.get_usize_or("lerrw.b", 2)?;
    if !(2..10).contains(&b) {
        return Err(HarnessError::config_field("lerrw.b", "branching must lie in 2..=9"));
    }
    let delta = cfg.get_f64_or("lerrw.delta", 1.0)?;
    if delta < 0.0 {
        return Err(HarnessError::config_field("lerrw.delta", "must be nonnegative"));
    }
    let steps = cfg.get_u64_or("lerrw.steps", 100_000)?;
    let replicates = cfg.get_u64_or("lerrw.replicates", 100)?;

    let mut report = RunReport::new("lerrw", seed, opts.workers, cfg.entries());

    let speed = lerrw::lerrw_speed(b, delta, steps, replicates, seed, opts.workers);
    report.push_estimate("speed", &speed);
    let drift = lerrw::lerrw_late_drift(b, delta, steps, replicates, seed, opts.workers);
    report.push_estimate("late_drift", &drift);
    let mut speed_table =
        Table::new("speed_table", &["b", "delta", "steps", "v_hat", "stderr"]);
    speed_table.push_row(vec![
        b.to_string(),
        fmt17(delta),
        steps.to_string(),
        fmt17(speed.point),
        fmt17(speed.stderr),
    ]);
    report.tables.push(speed_table);

    let equi_replicates = cfg.get_u64_or("lerrw.equivalence.replicates", 0)?;
    if equi_replicates > 0 {
        let prefix = cfg.get_usize_or("lerrw.equivalence.prefix", 6)?;
        let corrupt = cfg.get_bool_or("lerrw.negative.control", false)?;
        let outcome = lerrw::equivalence_test(b, prefix, equi_replicates, seed, corrupt)?;
        let mut eq_table = Table::new(
            "equivalence",
            &["prefix_steps", "replicates", "cells", "statistic", "dof", "p_value"],
        );
        eq_table.push_row(vec![
            prefix.to_string(),
            equi_replicates.to_string(),
            outcome.chi_square.cells.to_string(),
            fmt17(outcome.chi_square.statistic),
            outcome.chi_square.dof.to_string(),
            fmt17(outcome.p_value()),
        ]);
        report.tables.push(eq_table);
        let mut cells = Table::new("equivalence_cells", &["prefix", "urn", "env"]);
        for (label, urn, env) in &outcome.chi_square.table {
            cells.push_row(vec![label.clone(), urn.to_string(), env.to_string()]);
        }
        report.tables.push(cells);
    }

    let gof_samples = cfg.get_u64_or("lerrw.gof.samples", 0)?;
    if gof_samples > 0 {
        let mut rng = seeding::rng_from_key(seeding::mix(seed, 0x60f));
        let mut parent = Vec::with_capacity(gof_samples as usize);
        let mut child = Vec::with_capacity(gof_samples as usize);
        for _ in 0..gof_samples {
            let env = lerrw::sample_beta_env(b, &mut rng);
            parent.push(env.omega_parent);
            child.push(env.omega_children[0]);
        }
        let child_cdf = lerrw::ChildMarginalCdf::build(b);
        let d0 = stats::ks_statistic(&parent, |x| lerrw::f0_cdf(b, x));
        let d1 = stats::ks_statistic(&child, |x| child_cdf.eval(x));
        let crit = stats::ks_critical_1pct(gof_samples as usize);
        let mut gof = Table::new("marginal_gof", &["marginal", "ks", "critical_1pct", "accept"]);
        gof.push_row(vec!["parent_f0".into(), fmt17(d0), fmt17(crit), (d0 < crit).to_string()]);
        gof.push_row(vec!["child_f1".into(), fmt17(d1), fmt17(crit), (d1 < crit).to_string()]);
        report.tables.push(gof);
    }

    let hyp_samples = cfg.get_u64_or("lerrw.hypothesis.samples", 0)?;
    if hyp_samples > 0 {
        let check = lerrw::check_theorem_errw_hypothesis(b, hyp_samples, seed);
        let mut hyp = Table::new(
            "hypothesis",
            &["b", "holds", "borderline", "tail_index", "mc_mean"],
        );
        hyp.push_row(vec![
            b.to_string(),
            check.holds.to_string(),
            check.borderline.to_string(),
            fmt17(check.tail_index),
            fmt17(check.mc_mean),
        ]);
        report.tables.push(hyp);
    }

    let artifact = artifact_from_tables(&report, opts.format);
    Ok(CommandOutput { report, artifact: Some(artifact) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use rwre_core::ExtReal;

    fn symmetric_binary_cfg() -> Config {
        parse_config(
            "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
             law.offspring.counts = 2\nlaw.offspring.probs = 1\nseed = 5\n",
        )
        .unwrap()
    }

    #[test]
    fn lambda_command_reports_exponents() {
        let out = cmd_lambda(&symmetric_binary_cfg(), &CommonOpts::default()).unwrap();
        let analytic = out.report.analytic.as_ref().unwrap();
        // Regular binary tree: q1 = 0, so the exponent is infinite.
        assert_eq!(analytic.lambda, JsonExt(ExtReal::PosInf));
        assert_eq!(analytic.transience, "transient");
        assert_eq!(analytic.l_prime, JsonExt(ExtReal::NegInf));
        assert_eq!(out.report.tables[0].rows.len(), 10);
        // Round-trips.
        let json = out.report.to_json().unwrap();
        assert_eq!(RunReport::from_json(&json).unwrap(), out.report);
    }

    #[test]
    fn lambda_command_zero_speed_law() {
        let cfg = parse_config(
            "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
             law.offspring.counts = 1 2\nlaw.offspring.probs = 0.5 0.5\n",
        )
        .unwrap();
        let out = cmd_lambda(&cfg, &CommonOpts::default()).unwrap();
        let analytic = out.report.analytic.as_ref().unwrap();
        let lam = match analytic.lambda.0 {
            ExtReal::Finite(x) => x,
            other => panic!("expected finite exponent, got {other}"),
        };
        let expected = 2.0 * (2.0 + 3.0f64.sqrt()).ln() / 2.0f64.ln();
        assert!((lam - expected).abs() < 1e-9);
        assert_eq!(analytic.transience, "transient");
    }

    #[test]
    fn simulate_zero_steps_is_a_config_error() {
        let cfg = parse_config(
            "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
             law.offspring.counts = 2\nlaw.offspring.probs = 1\nwalk.steps = 0\n",
        )
        .unwrap();
        let err = cmd_simulate(&cfg, &CommonOpts::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn simulate_requires_transience() {
        let cfg = parse_config(
            "law.a.kind = finite\nlaw.a.values = 0.5\nlaw.a.probs = 1\n\
             law.offspring.counts = 1\nlaw.offspring.probs = 1\nwalk.steps = 100\n",
        )
        .unwrap();
        let err = cmd_simulate(&cfg, &CommonOpts::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn simulate_streams_and_estimates() {
        let cfg = parse_config(
            "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
             law.offspring.counts = 2\nlaw.offspring.probs = 1\n\
             walk.steps = 2000\nwalk.replicates = 8\nwalk.horizon = 200\nseed = 3\n",
        )
        .unwrap();
        let opts = CommonOpts { seed: None, workers: 2, format: OutputFormat::Jsonl };
        let out = cmd_simulate(&cfg, &opts).unwrap();
        let stream = out.artifact.unwrap();
        assert_eq!(stream.lines().count(), 8);
        for line in stream.lines() {
            let row: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(row["n"], 2000);
            assert!(row["regen_count"].as_u64().unwrap() > 0);
        }
        assert!(out.report.censoring_rate.unwrap() < 0.5);
        let speed = &out.report.estimates[0];
        assert!(speed.point > 0.0);
    }

    #[test]
    fn line_command_tables() {
        let cfg = parse_config(
            "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
             line.m.n.grid = 5 10\nline.m.lambda.grid = 0 1\nline.m.replicates = 200\n\
             line.p.n = 5\nline.p.a.grid = 0 50\nline.p.replicates = 400\n\
             line.oracle.envs = 50\nseed = 11\n",
        )
        .unwrap();
        let out = cmd_line(&cfg, &CommonOpts::default()).unwrap();
        let m_table = &out.report.tables[0];
        assert_eq!(m_table.rows.len(), 4);
        // lambda = 0 rows are exactly 1.
        for row in m_table.rows.iter().filter(|r| r[1] == fmt17(0.0)) {
            assert_eq!(row[2], fmt17(1.0));
        }
        let p_table = &out.report.tables[1];
        // a = 0: survival is certain.
        assert_eq!(p_table.rows[0][2], fmt17(1.0));
        let oracle = &out.report.tables[2];
        let max_hit: f64 = oracle.rows[0][1].parse().unwrap();
        assert!(max_hit < 1e-10);
    }

    #[test]
    fn lerrw_command_reports() {
        let cfg = parse_config(
            "lerrw.b = 2\nlerrw.delta = 1\nlerrw.steps = 2000\nlerrw.replicates = 20\n\
             lerrw.equivalence.prefix = 4\nlerrw.equivalence.replicates = 4000\n\
             lerrw.gof.samples = 5000\nlerrw.hypothesis.samples = 20000\nseed = 2\n",
        )
        .unwrap();
        let out = cmd_lerrw(&cfg, &CommonOpts::default()).unwrap();
        assert!(out.report.estimates[0].point > 0.0);
        let eq = out
            .report
            .tables
            .iter()
            .find(|t| t.name == "equivalence")
            .unwrap();
        let p: f64 = eq.rows[0][5].parse().unwrap();
        assert!(p > 1e-4, "equivalence p = {p}");
        let gof = out
            .report
            .tables
            .iter()
            .find(|t| t.name == "marginal_gof")
            .unwrap();
        assert_eq!(gof.rows[0][3], "true");
        assert_eq!(gof.rows[1][3], "true");
    }

    #[test]
    fn byte_determinism_and_worker_independence() {
        let cfg = parse_config(
            "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
             law.offspring.counts = 2\nlaw.offspring.probs = 1\n\
             walk.steps = 500\nwalk.replicates = 6\nseed = 9\n",
        )
        .unwrap();
        let run = |workers| {
            let opts = CommonOpts { seed: None, workers, format: OutputFormat::Jsonl };
            let out = cmd_simulate(&cfg, &opts).unwrap();
            (out.report.to_json().unwrap(), out.artifact.unwrap())
        };
        let (r1, a1) = run(1);
        let (r2, a2) = run(1);
        assert_eq!(r1, r2);
        assert_eq!(a1, a2);
        let (r3, a3) = run(3);
        // Worker count is echoed in the report but must not affect results.
        assert_eq!(a1, a3);
        let parsed1 = RunReport::from_json(&r1).unwrap();
        let parsed3 = RunReport::from_json(&r3).unwrap();
        assert_eq!(parsed1.estimates, parsed3.estimates);
        assert_eq!(parsed1.tables, parsed3.tables);
    }
}
