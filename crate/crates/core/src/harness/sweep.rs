use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::Summary;
use super::run::{pretrain, run_on_hypergraph, PhaseTimings};
use crate::error::{Error, Result};
use crate::hypergraph::{split_dataset, Hypergraph};
use crate::training::{ModelState, Strategy, TrainLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Clusters,
    AdaptSteps,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clusters" => Ok(SweepParam::Clusters),
            "adapt-steps" | "adapt_steps" => Ok(SweepParam::AdaptSteps),
            other => Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub per_repeat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Largest minus smallest mean accuracy over the rows.
    pub fn span(&self) -> f64 {
        let max = self.rows.iter().map(|r| r.mean).fold(f64::NEG_INFINITY, f64::max);
        let min = self.rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
        if self.rows.is_empty() {
            0.0
        } else {
            max - min
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,mean,std\n");
        for r in &self.rows {
            let std = r.std.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{}\n", r.value, r.mean, std));
        }
        s
    }
}

/// One experiment per value of `param`, all with the same seeds.
pub fn sweep(hg: &Hypergraph, config: &ExperimentConfig, param: SweepParam, values: &[usize]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config("a sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = config.clone();
        match param {
            SweepParam::Clusters => {
                if v == 0 || v > hg.num_hyperedges() {
                    return Err(Error::Config(format!(
                        "cluster count {v} must lie in [1, {}]",
                        hg.num_hyperedges()
                    )));
                }
                c.train.clusters = Some(v);
            }
            SweepParam::AdaptSteps => c.train.adaptation_steps = v,
        }
        let out = run_on_hypergraph(hg, &c, None)?;
        let per_repeat: Vec<f64> = out.report.repeats.iter().map(|r| r.accuracy).collect();
        let s = Summary::of(&per_repeat).expect("at least one repeat");
        rows.push(SweepRow {
            value: v,
            mean: s.mean,
            std: s.std,
            per_repeat,
        });
    }
    Ok(SweepTable { param, rows })
}

pub fn sweep_clusters(hg: &Hypergraph, config: &ExperimentConfig, qs: &[usize]) -> Result<SweepTable> {
    sweep(hg, config, SweepParam::Clusters, qs)
}

pub fn sweep_adaptation_steps(hg: &Hypergraph, config: &ExperimentConfig, steps: &[usize]) -> Result<SweepTable> {
    sweep(hg, config, SweepParam::AdaptSteps, steps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub traditional_ms: f64,
    pub adaptation_ms: f64,
    /// `100 * (traditional - adaptation) / traditional`.
    pub reduction_pct: f64,
    pub traditional: PhaseTimings,
    pub adaptation: PhaseTimings,
}

/// Pre-training wall time of the traditional two-stage strategy against
/// adaptation-aware pre-training. Both use the configured seed, split,
/// module mode and node-phase budget; fine-tuning is not run.
pub fn time_pretraining(hg: &Hypergraph, config: &ExperimentConfig) -> Result<TimingReport> {
    config.train.validate()?;
    let [a, b, c] = config.split.ratios;
    let split = split_dataset(hg, (a, b, c), config.train.seed).map_err(|e| e.in_phase("split"))?;
    let features = hg.sparse_features();
    let mode = config.train.resolved_module_mode();
    let run = |strategy: Strategy| -> Result<PhaseTimings> {
        let mut t = config.train.clone();
        t.strategy = strategy;
        t.module_mode = Some(mode);
        let mut state = ModelState::new(&t, hg.feature_dim())?;
        let mut timings = PhaseTimings::default();
        let mut log = TrainLog::default();
        let start = Instant::now();
        pretrain(&mut state, hg, &features, &split, &t, &mut log, &mut timings, None)?;
        log::info!("{} pre-training took {:.0} ms", strategy.name(), start.elapsed().as_secs_f64() * 1e3);
        Ok(timings)
    };
    let traditional = run(Strategy::Traditional)?;
    let adaptation = run(Strategy::AdaptationAware)?;
    let t = traditional.pretraining_ms();
    let s = adaptation.pretraining_ms();
    Ok(TimingReport {
        traditional_ms: t,
        adaptation_ms: s,
        reduction_pct: if t > 0.0 { 100.0 * (t - s) / t } else { 0.0 },
        traditional,
        adaptation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_of_rows() {
        let row = |value, mean| SweepRow {
            value,
            mean,
            std: None,
            per_repeat: vec![mean],
        };
        let t = SweepTable {
            param: SweepParam::Clusters,
            rows: vec![row(5, 0.8), row(10, 0.83), row(15, 0.79)],
        };
        assert!((t.span() - 0.04).abs() < 1e-12);
        assert_eq!(t.to_csv().lines().count(), 4);
    }

    #[test]
    fn sweep_param_names() {
        assert_eq!("clusters".parse::<SweepParam>().unwrap(), SweepParam::Clusters);
        assert_eq!("adapt-steps".parse::<SweepParam>().unwrap(), SweepParam::AdaptSteps);
        assert!("lr".parse::<SweepParam>().unwrap_err().is_config());
    }
}
