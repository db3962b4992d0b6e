use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use lexcvar::domains::{mdp_to_json, save_mdp_file, MdpDocument};
use lexcvar::exec::{evaluate, EvaluationSummary, Plan, SummaryRow};
use lexcvar::mdp::{validate_mdp, ValidationReport};
use lexcvar::solver::{
    build_ygrid, cvar_value_iteration, estimate_var, query_value, solve_constrained_ev,
    solve_expected_value, solve_worst_case, CvarSolution, LexSolution, ValueTable,
    WorstCaseSolution,
};
use lexcvar::Mdp;
use serde::{Deserialize, Serialize};

use crate::config::{model_hash, RunConfig};
use crate::docs::{
    lex_file_name, load_solution, save_solution, write_json, LexEntry, Manifest, Outputs,
    StageEntry, SummaryDoc, DOC_VERSION, MANIFEST_FILE, SUMMARY_CSV, SUMMARY_JSON,
};
use crate::error::CliError;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Expected-cost policy.
    Ev,
    /// CVaR game policy without switching.
    Wc,
    /// CVaR game policy with the switch to the VaR-constrained expected-cost policy.
    Lex,
}

impl Strategy {
    pub fn key(self) -> &'static str {
        match self {
            Strategy::Ev => "ev",
            Strategy::Wc => "wc",
            Strategy::Lex => "lex",
        }
    }
}

pub const ALL_STRATEGIES: [Strategy; 3] = [Strategy::Ev, Strategy::Wc, Strategy::Lex];

/// Runs the four solvers and writes their documents plus the manifest into
/// the output directory. On failure every file written so far is removed.
pub fn cmd_solve(cfg: &RunConfig) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let mdp = cfg.build_model()?;
    let mut out = Outputs::default();
    let result = solve_into(cfg, &mdp, &mut out);
    if result.is_err() {
        out.discard();
    }
    result
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn solve_into(cfg: &RunConfig, mdp: &Mdp, out: &mut Outputs) -> Result<Manifest, CliError> {
    let model_json = mdp_to_json(mdp);
    let hash = cfg.config_hash(&model_json);
    let dir = &cfg.output;
    out.prepare_dir(dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        std::fs::remove_file(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    }
    let set = cfg.sweep_settings();
    let s0 = mdp.initial();

    let (ev, ev_secs) = timed(|| solve_expected_value(mdp, &set));
    let ev = ev.map_err(CliError::solve("solver-ev"))?;
    save_solution(&out.track(dir.join("ev.json")), "ev", &hash, &ev)?;

    let (worst, worst_secs) = timed(|| solve_worst_case(mdp, &set));
    let worst = worst.map_err(CliError::solve("solver-worst"))?;
    save_solution(&out.track(dir.join("worst.json")), "worst", &hash, &worst)?;

    let grid = build_ygrid(cfg.solver.y_points, cfg.solver.y_min)
        .map_err(CliError::solve("solver-cvar"))?;
    let (cvar, cvar_secs) = timed(|| cvar_value_iteration(mdp, &grid, &worst, &set));
    let cvar = cvar.map_err(CliError::solve("solver-cvar"))?;
    save_solution(&out.track(dir.join("cvar.json")), "cvar", &hash, &cvar)?;

    let mut lex_entries = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        let optimal_cvar = query_value(&cvar, s0, alpha).map_err(CliError::solve("solver-cvar"))?;
        let (lex, secs) = timed(|| -> Result<LexSolution, CliError> {
            let var = estimate_var(
                mdp,
                &cvar,
                alpha,
                &cfg.var_settings(),
                &cfg.exec_settings(),
                cfg.execution(),
            )
            .map_err(CliError::solve("solver-lex"))?;
            solve_constrained_ev(mdp, &worst, &var, cfg.cost_axis(), &set)
                .map_err(CliError::solve("solver-lex"))
        });
        let lex = lex?;
        let file = lex_file_name(alpha);
        save_solution(&out.track(dir.join(&file)), "lex", &hash, &lex)?;
        let root_feasible = lex.require_feasible_root(mdp).is_ok();
        lex_entries.push(LexEntry {
            alpha,
            file,
            seconds: secs,
            optimal_cvar,
            var: lex.var_value(),
            root_feasible,
            lex_value: root_feasible.then(|| lex.value(s0, 0.0)),
        });
    }

    let manifest = Manifest {
        version: DOC_VERSION,
        config_hash: hash,
        model_hash: model_hash(&model_json),
        domain: cfg.domain_label(),
        states: mdp.num_states(),
        actions: mdp.num_actions(),
        alphas: cfg.alphas.clone(),
        report_offset: cfg.report_offset(),
        ev_value: ev.value(s0),
        worst_value: worst.v_worst[s0.0],
        ev: StageEntry {
            file: "ev.json".into(),
            seconds: ev_secs,
            sweeps: ev.sweeps,
        },
        worst: StageEntry {
            file: "worst.json".into(),
            seconds: worst_secs,
            sweeps: worst.sweeps,
        },
        cvar: StageEntry {
            file: "cvar.json".into(),
            seconds: cvar_secs,
            sweeps: cvar.sweeps,
        },
        lex: lex_entries,
    };
    write_json(&out.track(manifest_path), &manifest)?;
    Ok(manifest)
}

/// Summary rows and where the evaluation wrote them.
#[derive(Debug)]
pub struct Evaluation {
    pub rows: Vec<SummaryRow>,
    pub summaries: Vec<EvaluationSummary>,
}

/// Executes each strategy from the persisted solutions and writes
/// `summary.csv`, `summary.json` and one histogram CSV per strategy run.
pub fn cmd_evaluate(cfg: &RunConfig, strategies: &[Strategy]) -> Result<Evaluation, CliError> {
    cfg.validate()?;
    if strategies.is_empty() {
        return Err(CliError::Usage("no strategies selected".into()));
    }
    let mdp = cfg.build_model()?;
    let model_json = mdp_to_json(&mdp);
    let hash = cfg.config_hash(&model_json);
    let dir = &cfg.output;
    let manifest = Manifest::load(dir)?;
    if manifest.config_hash != hash {
        return Err(CliError::Stale {
            dir: dir.clone(),
            found: manifest.config_hash,
            expected: hash,
        });
    }
    let mut out = Outputs::default();
    let result = evaluate_into(cfg, &mdp, &manifest, strategies, &mut out);
    if result.is_err() {
        out.discard();
    }
    result
}

fn evaluate_into(
    cfg: &RunConfig,
    mdp: &Mdp,
    manifest: &Manifest,
    strategies: &[Strategy],
    out: &mut Outputs,
) -> Result<Evaluation, CliError> {
    let dir = &cfg.output;
    let hash = &manifest.config_hash;
    let mut chosen = Vec::new();
    for s in strategies {
        if !chosen.contains(s) {
            chosen.push(*s);
        }
    }
    let needs = |s| chosen.contains(&s);
    let ev: Option<ValueTable> = needs(Strategy::Ev)
        .then(|| load_solution(&dir.join(&manifest.ev.file), "ev", hash))
        .transpose()?;
    let cvar: Option<CvarSolution> = (needs(Strategy::Wc) || needs(Strategy::Lex))
        .then(|| load_solution(&dir.join(&manifest.cvar.file), "cvar", hash))
        .transpose()?;
    let _: WorstCaseSolution = load_solution(&dir.join(&manifest.worst.file), "worst", hash)?;

    let write_hist = |out: &mut Outputs, name: String, s: &EvaluationSummary| {
        let path = out.track(dir.join(name));
        write_csv(&path, &s.histogram_rows())
    };

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let ev_summary = match &ev {
        Some(table) => {
            let (s, _) = evaluate(
                mdp,
                &Plan::Ev(table),
                &cfg.eval_settings(cfg.alphas.clone()),
            )?;
            write_hist(out, "hist_ev.csv".into(), &s)?;
            Some(s)
        }
        None => None,
    };
    for &alpha in &cfg.alphas {
        let lex: Option<LexSolution> = if needs(Strategy::Lex) {
            let entry = manifest.lex_for(alpha).ok_or_else(|| CliError::Document {
                path: dir.join(MANIFEST_FILE),
                message: format!("no lexicographic solution for alpha {alpha}"),
            })?;
            Some(load_solution(&dir.join(&entry.file), "lex", hash)?)
        } else {
            None
        };
        for &strategy in &chosen {
            let summary = match strategy {
                Strategy::Ev => {
                    let s = ev_summary.as_ref().expect("loaded above");
                    rows.extend(s.rows().into_iter().filter(|r| r.alpha == alpha));
                    continue;
                }
                Strategy::Wc => {
                    let plan = Plan::CvarWc {
                        cvar: cvar.as_ref().expect("loaded above"),
                        alpha,
                    };
                    evaluate(mdp, &plan, &cfg.eval_settings(vec![alpha]))?.0
                }
                Strategy::Lex => {
                    let plan = Plan::CvarEv {
                        cvar: cvar.as_ref().expect("loaded above"),
                        lex: lex.as_ref().expect("loaded above"),
                        alpha,
                    };
                    evaluate(mdp, &plan, &cfg.eval_settings(vec![alpha]))?.0
                }
            };
            write_hist(
                out,
                format!("hist_{}_a{alpha}.csv", strategy.key()),
                &summary,
            )?;
            rows.extend(summary.rows());
            summaries.push(summary);
        }
    }
    if let Some(s) = ev_summary {
        summaries.insert(0, s);
    }

    write_csv(&out.track(dir.join(SUMMARY_CSV)), &rows)?;
    let doc = SummaryDoc {
        version: DOC_VERSION,
        domain: manifest.domain.clone(),
        model_hash: manifest.model_hash.clone(),
        config_hash: hash.clone(),
        rows: rows.clone(),
    };
    write_json(&out.track(dir.join(SUMMARY_JSON)), &doc)?;
    Ok(Evaluation { rows, summaries })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub alpha: f64,
    pub name: String,
    pub mean: f64,
    pub mean_se: f64,
    pub cvar: f64,
    pub cvar_se: f64,
    pub best: bool,
}

/// CVaR values within this many combined standard errors of the minimum
/// count as tied.
pub const COMPARE_SES: f64 = 3.0;

/// Builds the comparison table from one or more evaluation summaries.
///
/// Within each α, strategies whose CVaR is within [`COMPARE_SES`] combined
/// standard errors of the smallest CVaR are candidates; the candidate with
/// the lowest mean is marked best, equal means going to the name that sorts
/// first.
pub fn cmd_compare(docs: &[SummaryDoc]) -> Result<Vec<CompareRow>, CliError> {
    let Some(first) = docs.first() else {
        return Err(CliError::Compare("need two strategies".into()));
    };
    if let Some(d) = docs.iter().find(|d| d.model_hash != first.model_hash) {
        return Err(CliError::Compare(format!(
            "mismatched domains: `{}` and `{}` were evaluated on different models",
            first.domain, d.domain
        )));
    }
    let all: Vec<&SummaryRow> = docs.iter().flat_map(|d| &d.rows).collect();
    let alphas: Vec<f64> = {
        let mut v: Vec<f64> = all.iter().map(|r| r.alpha).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let mut table = Vec::new();
    for alpha in alphas {
        let mut group: Vec<&SummaryRow> =
            all.iter().copied().filter(|r| r.alpha == alpha).collect();
        group.sort_by(|a, b| a.name.cmp(&b.name));
        let names: BTreeSet<&str> = group.iter().map(|r| r.name.as_str()).collect();
        if names.len() != group.len() {
            return Err(CliError::Compare(format!(
                "duplicate strategy rows at alpha {alpha}"
            )));
        }
        if group.len() < 2 {
            return Err(CliError::Compare(format!(
                "need two strategies at alpha {alpha}, found {}",
                group.len()
            )));
        }
        let min = group
            .iter()
            .min_by(|a, b| a.cvar.total_cmp(&b.cvar))
            .expect("non-empty");
        let mut best: Option<&SummaryRow> = None;
        for r in &group {
            let band = COMPARE_SES * (r.cvar_se.powi(2) + min.cvar_se.powi(2)).sqrt();
            if r.cvar - min.cvar > band + 1e-12 {
                continue;
            }
            // strict < keeps the first name on ties
            if best.is_none_or(|b| r.mean < b.mean) {
                best = Some(r);
            }
        }
        let best = best.expect("minimum is always a candidate");
        table.extend(group.iter().map(|r| CompareRow {
            alpha,
            name: r.name.clone(),
            mean: r.mean,
            mean_se: r.mean_se,
            cvar: r.cvar,
            cvar_se: r.cvar_se,
            best: std::ptr::eq(*r, best),
        }));
    }
    Ok(table)
}

/// Fixed-width rendering of a comparison table; `*` marks the best row.
pub fn format_compare(rows: &[CompareRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(8);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>6}  {:<width$}  {:>10}  {:>8}  {:>10}  {:>8}  best",
        "alpha", "name", "mean", "mean_se", "cvar", "cvar_se"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>6}  {:<width$}  {:>10.2}  {:>8.2}  {:>10.2}  {:>8.2}  {}",
            r.alpha,
            r.name,
            r.mean,
            r.mean_se,
            r.cvar,
            r.cvar_se,
            if r.best { "*" } else { "" }
        );
        s.truncate(s.trim_end().len());
        s.push('\n');
    }
    s
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Line<'a> {
        alpha: f64,
        name: &'a str,
        mean: f64,
        mean_se: f64,
        cvar: f64,
        cvar_se: f64,
        best: &'a str,
    }
    let lines: Vec<Line> = rows
        .iter()
        .map(|r| Line {
            alpha: r.alpha,
            name: &r.name,
            mean: r.mean,
            mean_se: r.mean_se,
            cvar: r.cvar,
            cvar_se: r.cvar_se,
            best: if r.best { "*" } else { "" },
        })
        .collect();
    write_csv(path, &lines)
}

/// Writes the configured domain as an MDP document.
pub fn cmd_gen_domain(cfg: &RunConfig, path: &Path) -> Result<Mdp, CliError> {
    let mdp = cfg.build_model()?;
    save_mdp_file(&mdp, path)?;
    Ok(mdp)
}

/// Parses an MDP document and checks the SSP invariants without failing on
/// the first violation.
pub fn cmd_validate(path: &Path) -> Result<(Mdp, ValidationReport), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: MdpDocument = serde_json::from_str(&text).map_err(|e| CliError::Document {
        path: path.into(),
        message: e.to_string(),
    })?;
    let mdp = doc.to_mdp()?;
    let report = validate_mdp(&mdp);
    Ok((mdp, report))
}
