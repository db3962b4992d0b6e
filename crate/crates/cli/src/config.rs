use std::path::{Path, PathBuf};

use lexcvar::domains::{
    build_betting_game, build_deep_sea_treasure, build_desk_instance, build_inventory_control,
    load_mdp_file, BettingParams, DstConfig, DstLayout, InventoryParams,
};
use lexcvar::exec::{EvalSettings, ExecSettings};
use lexcvar::mdp::VarConvention;
use lexcvar::solver::{CostAxis, SweepSettings, VarSettings};
use lexcvar::{Execution, Mdp};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Desk,
    Betting,
    Inventory,
    Dst,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Desk => "desk",
            Builtin::Betting => "betting",
            Builtin::Inventory => "inventory",
            Builtin::Dst => "dst",
        }
    }
}

/// Deep-sea-treasure settings; `layout` names a layout file, the shipped
/// layout is used when absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DstSpec {
    pub layout: Option<PathBuf>,
    pub horizon: u32,
    pub step_cost: f64,
    pub terminal_base: f64,
    pub p_success: f64,
    pub p_slip: f64,
}

impl Default for DstSpec {
    fn default() -> Self {
        let d = DstConfig::default();
        DstSpec {
            layout: None,
            horizon: d.horizon,
            step_cost: d.step_cost,
            terminal_base: d.terminal_base,
            p_success: d.p_success,
            p_slip: d.p_slip,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSpec {
    pub builtin: Option<Builtin>,
    /// MDP document to load instead of a builtin domain.
    pub mdp: Option<PathBuf>,
    pub betting: BettingParams,
    pub inventory: InventoryParams,
    pub dst: DstSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    #[default]
    Uniform,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub y_points: usize,
    pub y_min: f64,
    pub cost_points: usize,
    pub cost_axis: AxisKind,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub xi_tol: f64,
    pub var_convention: VarConvention,
    pub var_episodes: usize,
    pub var_seed: u64,
    pub var_margin: bool,
    pub sequential: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            y_points: 30,
            y_min: 1e-3,
            cost_points: 100,
            cost_axis: AxisKind::Uniform,
            epsilon: 1e-6,
            max_sweeps: 10_000,
            xi_tol: 1e-6,
            var_convention: VarConvention::Lower,
            var_episodes: 20_000,
            var_seed: 1,
            var_margin: false,
            sequential: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub episodes: usize,
    pub seed: u64,
    pub bins: usize,
    pub bin_width: Option<f64>,
    pub bootstrap: usize,
    /// Added to every episode cost; defaults to the domain's reporting
    /// offset (Inventory Control: −200).
    pub report_offset: Option<f64>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            episodes: 20_000,
            seed: 0,
            bins: 100,
            bin_width: None,
            bootstrap: 1000,
            report_offset: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub alphas: Vec<f64>,
    pub solver: SolverConfig,
    pub evaluation: EvaluationConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainSpec::default(),
            alphas: vec![0.02, 0.2],
            solver: SolverConfig::default(),
            evaluation: EvaluationConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

/// Everything the solution documents depend on, hashed into the manifest.
#[derive(Serialize)]
struct HashInput<'a> {
    model: &'a str,
    alphas: &'a [f64],
    solver: &'a SolverConfig,
}

impl RunConfig {
    /// Reads a TOML config. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.domain.mdp.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.domain.dst.layout.as_mut() {
            rebase(p);
        }
        rebase(&mut cfg.output);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        match (&self.domain.builtin, &self.domain.mdp) {
            (None, None) => return usage("no domain: set a builtin domain or an MDP file".into()),
            (Some(_), Some(_)) => {
                return usage("set either a builtin domain or an MDP file, not both".into())
            }
            _ => {}
        }
        if self.alphas.is_empty() {
            return usage("at least one alpha is required".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return usage(format!("alpha {a} outside (0, 1]"));
        }
        let s = &self.solver;
        if s.y_points < 3 {
            return usage(format!("y_points must be >= 3, got {}", s.y_points));
        }
        if !(s.y_min > 0.0 && s.y_min < 1.0) {
            return usage(format!("y_min must lie in (0, 1), got {}", s.y_min));
        }
        if s.cost_axis == AxisKind::Uniform && s.cost_points < 3 {
            return usage(format!("cost_points must be >= 3, got {}", s.cost_points));
        }
        if !(s.epsilon > 0.0) || s.max_sweeps == 0 {
            return usage("epsilon must be positive and max_sweeps >= 1".into());
        }
        if !(s.xi_tol >= 0.0) {
            return usage(format!("xi_tol must be >= 0, got {}", s.xi_tol));
        }
        if s.var_episodes == 0 {
            return usage("var_episodes must be >= 1".into());
        }
        let e = &self.evaluation;
        if e.episodes == 0 {
            return usage("episodes must be >= 1".into());
        }
        if e.bins == 0 {
            return usage("bins must be >= 1".into());
        }
        if let Some(w) = e.bin_width {
            if !(w > 0.0) {
                return usage(format!("bin_width must be positive, got {w}"));
            }
        }
        Ok(())
    }

    pub fn domain_label(&self) -> String {
        match (&self.domain.builtin, &self.domain.mdp) {
            (Some(b), _) => b.name().to_string(),
            (None, Some(p)) => p
                .file_stem()
                .map_or_else(|| "mdp".into(), |s| s.to_string_lossy().into_owned()),
            (None, None) => "none".into(),
        }
    }

    pub fn build_model(&self) -> Result<Mdp, CliError> {
        let d = &self.domain;
        let mdp = match (d.builtin, &d.mdp) {
            (Some(Builtin::Desk), _) => build_desk_instance(),
            (Some(Builtin::Betting), _) => build_betting_game(&d.betting)?,
            (Some(Builtin::Inventory), _) => build_inventory_control(&d.inventory)?,
            (Some(Builtin::Dst), _) => build_deep_sea_treasure(&self.dst_config()?)?,
            (None, Some(path)) => load_mdp_file(path)?,
            (None, None) => return Err(CliError::Usage("no domain configured".into())),
        };
        Ok(mdp)
    }

    fn dst_config(&self) -> Result<DstConfig, CliError> {
        let s = &self.domain.dst;
        let layout = match &s.layout {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                DstLayout::parse(&text)?
            }
            None => DstConfig::default().layout,
        };
        Ok(DstConfig {
            layout,
            horizon: s.horizon,
            step_cost: s.step_cost,
            terminal_base: s.terminal_base,
            p_success: s.p_success,
            p_slip: s.p_slip,
        })
    }

    pub fn report_offset(&self) -> f64 {
        match (self.evaluation.report_offset, self.domain.builtin) {
            (Some(o), _) => o,
            (None, Some(Builtin::Inventory)) => self.domain.inventory.report_offset(),
            _ => 0.0,
        }
    }

    pub fn execution(&self) -> Execution {
        if self.solver.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            epsilon: self.solver.epsilon,
            max_sweeps: self.solver.max_sweeps,
            exec: self.execution(),
        }
    }

    pub fn exec_settings(&self) -> ExecSettings {
        ExecSettings {
            xi_tol: self.solver.xi_tol,
            ..ExecSettings::default()
        }
    }

    pub fn var_settings(&self) -> VarSettings {
        VarSettings {
            episodes: self.solver.var_episodes,
            seed: self.solver.var_seed,
            convention: self.solver.var_convention,
            margin: self.solver.var_margin,
        }
    }

    pub fn cost_axis(&self) -> CostAxis {
        match self.solver.cost_axis {
            AxisKind::Uniform => CostAxis::Uniform {
                points: self.solver.cost_points,
            },
            AxisKind::Integer => CostAxis::Integer,
        }
    }

    pub fn eval_settings(&self, alphas: Vec<f64>) -> EvalSettings {
        let e = &self.evaluation;
        EvalSettings {
            episodes: e.episodes,
            alphas,
            seed: e.seed,
            bootstrap: e.bootstrap,
            bins: e.bins,
            bin_width: e.bin_width,
            convention: self.solver.var_convention,
            report_offset: self.report_offset(),
            exec: self.exec_settings(),
            execution: self.execution(),
        }
    }

    /// Hex SHA-256 over the model, the alphas and the solver settings.
    pub fn config_hash(&self, model_json: &str) -> String {
        let input = HashInput {
            model: &model_hash(model_json),
            alphas: &self.alphas,
            solver: &SolverConfig {
                sequential: false,
                ..self.solver.clone()
            },
        };
        let bytes = serde_json::to_vec(&input).expect("plain data serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

pub fn model_hash(model_json: &str) -> String {
    hex::encode(Sha256::digest(model_json.as_bytes()))
}
