use serde::{Deserialize, Serialize};

use super::episode::{run_episodes, EpisodeRecord, ExecSettings, Plan};
use super::stats::{bootstrap_cvar_se, empirical_cvar, mean_and_se, Histogram, StatsError};
use super::ExecError;
use crate::mdp::{Mdp, RandomSource, VarConvention};
use crate::par::Execution;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    pub episodes: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub bootstrap: usize,
    pub bins: usize,
    /// Bin width; overrides `bins` when set.
    pub bin_width: Option<f64>,
    pub convention: VarConvention,
    /// Added to every episode cost before statistics are taken.
    pub report_offset: f64,
    pub exec: ExecSettings,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            episodes: 20_000,
            alphas: vec![0.02, 0.2],
            seed: 0,
            bootstrap: 1000,
            bins: 100,
            bin_width: None,
            convention: VarConvention::Lower,
            report_offset: 0.0,
            exec: ExecSettings::default(),
            execution: Execution::Parallel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub alpha: f64,
    pub var: f64,
    pub cvar: f64,
    pub cvar_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub tails: Vec<TailStats>,
    pub histogram: Histogram,
    pub switched: usize,
    pub report_offset: f64,
}

impl EvaluationSummary {
    pub fn tail(&self, alpha: f64) -> Option<&TailStats> {
        self.tails.iter().find(|t| (t.alpha - alpha).abs() < 1e-12)
    }

    pub fn rows(&self) -> Vec<SummaryRow> {
        self.tails
            .iter()
            .map(|t| SummaryRow {
                name: self.name.clone(),
                alpha: t.alpha,
                n: self.n,
                mean: self.mean,
                mean_se: self.mean_se,
                var: t.var,
                cvar: t.cvar,
                cvar_se: t.cvar_se,
            })
            .collect()
    }

    pub fn histogram_rows(&self) -> Vec<HistogramRow> {
        let h = &self.histogram;
        h.counts
            .iter()
            .enumerate()
            .map(|(i, &count)| HistogramRow {
                bin_left: h.edges[i],
                bin_right: h.edges[i + 1],
                count,
            })
            .collect()
    }
}

/// One line of the summary CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub alpha: f64,
    pub n: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub var: f64,
    pub cvar: f64,
    pub cvar_se: f64,
}

/// One line of the histogram CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
}

/// Runs `settings.episodes` episodes of `plan` and summarises their costs.
pub fn evaluate(
    mdp: &Mdp,
    plan: &Plan,
    settings: &EvalSettings,
) -> Result<(EvaluationSummary, Vec<EpisodeRecord>), ExecError> {
    if settings.episodes == 0 {
        return Err(StatsError::Empty.into());
    }
    if let Some(a) = settings.alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(ExecError::BadAlpha(*a));
    }
    let master = RandomSource::new(settings.seed);
    let records = run_episodes(
        mdp,
        plan,
        settings.episodes,
        master,
        &settings.exec,
        settings.execution,
    )?;
    let costs: Vec<f64> = records
        .iter()
        .map(|r| r.total_cost + settings.report_offset)
        .collect();
    let (mean, mean_se) = mean_and_se(&costs)?;
    let mut tails = Vec::with_capacity(settings.alphas.len());
    for (i, &alpha) in settings.alphas.iter().enumerate() {
        let (var, cvar) = empirical_cvar(&costs, alpha, settings.convention)?;
        let cvar_se = bootstrap_cvar_se(
            &costs,
            alpha,
            settings.bootstrap,
            master.derive(1 + i as u64),
            settings.execution,
        )?;
        tails.push(TailStats {
            alpha,
            var,
            cvar,
            cvar_se,
        });
    }
    let histogram = match settings.bin_width {
        Some(w) => Histogram::with_width(&costs, w)?,
        None => Histogram::with_bins(&costs, settings.bins)?,
    };
    let summary = EvaluationSummary {
        name: plan.name().to_string(),
        n: settings.episodes,
        mean,
        mean_se,
        tails,
        histogram,
        switched: records.iter().filter(|r| r.switched).count(),
        report_offset: settings.report_offset,
    };
    Ok((summary, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::build_desk_instance;
    use crate::solver::{solve_expected_value, SweepSettings};

    #[test]
    fn desk_ev_summary() {
        let mdp = build_desk_instance();
        let ev = solve_expected_value(&mdp, &SweepSettings::default()).unwrap();
        let set = EvalSettings {
            episodes: 20_000,
            alphas: vec![0.1, 1.0],
            bootstrap: 200,
            ..Default::default()
        };
        let (s, recs) = evaluate(&mdp, &Plan::Ev(&ev), &set).unwrap();
        assert_eq!(recs.len(), 20_000);
        assert_eq!(s.name, "EV");
        assert!((s.mean - 3.2).abs() < 4.0 * s.mean_se);
        let t = s.tail(0.1).unwrap();
        assert!(t.cvar >= s.mean);
        assert!((t.cvar - 18.5).abs() < 4.0 * t.cvar_se.max(0.05));
        assert!((s.tail(1.0).unwrap().cvar - s.mean).abs() < 1e-9);
        assert_eq!(s.histogram.total(), 20_000);
        assert_eq!(s.rows().len(), 2);

        let again = evaluate(&mdp, &Plan::Ev(&ev), &set).unwrap().0;
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn zero_episodes_rejected() {
        let mdp = build_desk_instance();
        let ev = solve_expected_value(&mdp, &SweepSettings::default()).unwrap();
        let set = EvalSettings {
            episodes: 0,
            ..Default::default()
        };
        assert!(evaluate(&mdp, &Plan::Ev(&ev), &set).is_err());
    }

    #[test]
    fn offset_shifts_everything() {
        let mdp = build_desk_instance();
        let ev = solve_expected_value(&mdp, &SweepSettings::default()).unwrap();
        let base = EvalSettings {
            episodes: 500,
            bootstrap: 50,
            ..Default::default()
        };
        let shifted = EvalSettings {
            report_offset: -200.0,
            ..base.clone()
        };
        let a = evaluate(&mdp, &Plan::Ev(&ev), &base).unwrap().0;
        let b = evaluate(&mdp, &Plan::Ev(&ev), &shifted).unwrap().0;
        assert!((a.mean - 200.0 - b.mean).abs() < 1e-9);
        assert!((a.tails[0].cvar - 200.0 - b.tails[0].cvar).abs() < 1e-9);
    }
}
