use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lexcvar::mdp::VarConvention;

use crate::commands::Strategy;
use crate::config::{AxisKind, Builtin, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "lexcvar",
    version,
    about = "Lexicographic CVaR / expected-cost planning for SSP MDPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a domain and write solution documents plus a manifest.
    Solve(RunArgs),
    /// Execute strategies from persisted solutions and write summary CSVs.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Strategies to run, comma separated.
        #[arg(long, value_delimiter = ',', default_values = ["ev", "wc", "lex"])]
        strategies: Vec<Strategy>,
    },
    /// Merge evaluation summaries into a table with a best-strategy marker.
    Compare {
        /// `summary.json` files written by `evaluate`.
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a builtin domain as an MDP document.
    GenDomain {
        /// TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Builtin domain (replaces the one in the config).
        #[arg(long)]
        domain: Option<Builtin>,
        /// Destination file.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Check an MDP document against the SSP invariants.
    Validate { file: PathBuf },
}

/// Config file plus per-field overrides.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin domain (replaces any MDP file from the config).
    #[arg(long, conflicts_with = "mdp")]
    pub domain: Option<Builtin>,
    /// MDP document to solve (replaces any builtin domain from the config).
    #[arg(long)]
    pub mdp: Option<PathBuf>,
    /// Confidence level; repeat for several (replaces the configured list).
    #[arg(long = "alpha")]
    pub alphas: Vec<f64>,
    /// Output directory for solutions and CSVs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Points on the log-spaced confidence grid.
    #[arg(long)]
    pub y_points: Option<usize>,
    /// Smallest positive confidence level on the grid.
    #[arg(long)]
    pub y_min: Option<f64>,
    /// Points on the accumulated-cost axis of the constrained stage.
    #[arg(long)]
    pub cost_points: Option<usize>,
    /// Cost axis: uniform grid or every integer up to VaR.
    #[arg(long)]
    pub cost_axis: Option<AxisKind>,
    /// Sup-norm convergence tolerance for value iteration.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Sweep cap for every value iteration.
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Perturbation weight treated as zero by the switch rule.
    #[arg(long)]
    pub xi_tol: Option<f64>,
    /// Empirical VaR order statistic: lower or upper.
    #[arg(long, value_parser = parse_convention)]
    pub var_convention: Option<VarConvention>,
    /// Episodes used to estimate VaR.
    #[arg(long)]
    pub var_episodes: Option<usize>,
    /// Seed for the VaR episodes.
    #[arg(long)]
    pub var_seed: Option<u64>,
    /// Evaluation episodes per strategy.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Seed for the evaluation episodes.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram bin count.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Fixed histogram bin width (overrides the bin count).
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Bootstrap resamples for the CVaR standard error.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Run every loop on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

fn parse_convention(s: &str) -> Result<VarConvention, String> {
    match s {
        "lower" => Ok(VarConvention::Lower),
        "upper" => Ok(VarConvention::Upper),
        _ => Err(format!("expected `lower` or `upper`, got `{s}`")),
    }
}

impl RunArgs {
    /// Loads the config file (if any) and applies the flag overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = self.domain {
            cfg.domain.builtin = Some(d);
            cfg.domain.mdp = None;
        }
        if let Some(p) = &self.mdp {
            cfg.domain.mdp = Some(p.clone());
            cfg.domain.builtin = None;
        }
        if !self.alphas.is_empty() {
            cfg.alphas = self.alphas.clone();
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        let s = &mut cfg.solver;
        set(&mut s.y_points, self.y_points);
        set(&mut s.y_min, self.y_min);
        set(&mut s.cost_points, self.cost_points);
        set(&mut s.cost_axis, self.cost_axis);
        set(&mut s.epsilon, self.epsilon);
        set(&mut s.max_sweeps, self.max_sweeps);
        set(&mut s.xi_tol, self.xi_tol);
        set(&mut s.var_convention, self.var_convention);
        set(&mut s.var_episodes, self.var_episodes);
        set(&mut s.var_seed, self.var_seed);
        s.sequential |= self.sequential;
        let e = &mut cfg.evaluation;
        set(&mut e.episodes, self.episodes);
        set(&mut e.seed, self.seed);
        set(&mut e.bins, self.bins);
        set(&mut e.bootstrap, self.bootstrap);
        if self.bin_width.is_some() {
            e.bin_width = self.bin_width;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "alphas = [0.3]\noutput = \"res\"\n[domain]\nbuiltin = \"betting\"\n[solver]\ny_points = 12\n",
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "lexcvar",
            "solve",
            "--config",
            path.to_str().unwrap(),
            "--alpha",
            "0.1",
            "--alpha",
            "0.2",
            "--y-points",
            "40",
        ])
        .unwrap();
        let Command::Solve(run) = cli.command else {
            panic!("expected solve")
        };
        let cfg = run.resolve().unwrap();
        assert_eq!(cfg.alphas, vec![0.1, 0.2]);
        assert_eq!(cfg.solver.y_points, 40);
        assert_eq!(cfg.domain.builtin, Some(Builtin::Betting));
        assert_eq!(cfg.output, dir.path().join("res"));
    }

    #[test]
    fn mdp_flag_replaces_builtin() {
        let run = RunArgs {
            domain: None,
            mdp: Some("m.json".into()),
            alphas: vec![0.1],
            ..Default::default()
        };
        let cfg = run.resolve().unwrap();
        assert_eq!(cfg.domain.builtin, None);
        assert_eq!(cfg.domain_label(), "m");
    }

    #[test]
    fn bad_alpha_is_usage_error() {
        let run = RunArgs {
            domain: Some(Builtin::Desk),
            alphas: vec![1.5],
            ..Default::default()
        };
        assert_eq!(run.resolve().unwrap_err().exit_code(), 1);
    }
}
