use rayon::prelude::*;

use crate::error::{check_probability, Error, Result};
use crate::model::{
    playout_metrics, run_model, Convergence, DiffusionProfile, ModelOptions, PlayoutMetrics, SchemeSpec,
    SystemParams,
};
use crate::sim::{run_simulation, EmpiricalProfile, SimConfig, DEFAULT_MEASURED_SLOTS, DEFAULT_WARMUP};

/// Seeds per simulated point.
pub const DEFAULT_REPLICATES: usize = 5;

/// Presence level used for the playout-delay metric unless overridden.
pub const DEFAULT_TARGET: f64 = 0.9;

/// Per-position agreement between a model and an empirical profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    pub mae: f64,
    pub max_abs_error: f64,
    /// `model - empirical` per position.
    pub residuals: Vec<f64>,
}

pub fn compare_values(model: &[f64], empirical: &[f64]) -> Result<ErrorSummary> {
    if model.len() != empirical.len() {
        return Err(Error::LengthMismatch {
            left: model.len(),
            right: empirical.len(),
        });
    }
    let residuals: Vec<f64> = model.iter().zip(empirical).map(|(a, b)| a - b).collect();
    let mae = if residuals.is_empty() {
        0.0
    } else {
        residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64
    };
    let max_abs_error = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    Ok(ErrorSummary {
        mae,
        max_abs_error,
        residuals,
    })
}

pub fn compare(model: &DiffusionProfile, empirical: &EmpiricalProfile) -> Result<ErrorSummary> {
    compare_values(model.values(), &empirical.values)
}

/// `count` seeds derived from `base`. The first is `base` itself.
pub fn replicate_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|r| base.wrapping_add(r << 32)).collect()
}

/// Runs `config` once per seed, in parallel, and averages the profiles.
///
/// With more than one seed, `stddev` is the sample standard deviation of the
/// per-seed means; with one it is that run's own per-slot spread.
pub fn replicate(config: &SimConfig, seeds: &[u64]) -> Result<EmpiricalProfile> {
    if seeds.is_empty() {
        return Err(Error::params("at least one simulation seed is required"));
    }
    let runs = seeds
        .par_iter()
        .map(|&seed| run_simulation(&config.with_seed(seed)).map(|o| o.profile))
        .collect::<Result<Vec<_>>>()?;
    if runs.len() == 1 {
        return Ok(runs.into_iter().next().unwrap());
    }
    let n = runs[0].values.len();
    let k = runs.len() as f64;
    let mut values = vec![0.0; n];
    let mut stddev = vec![0.0; n];
    for i in 0..n {
        let mean = runs.iter().map(|r| r.values[i]).sum::<f64>() / k;
        let var = runs.iter().map(|r| (r.values[i] - mean).powi(2)).sum::<f64>() / (k - 1.0);
        values[i] = mean;
        stddev[i] = var.sqrt();
    }
    Ok(EmpiricalProfile {
        values,
        stddev,
        sample_count: runs.iter().map(|r| r.sample_count).sum(),
    })
}

/// Simulation settings behind an empirical profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimSettings {
    pub slots: usize,
    pub warmup: usize,
    pub seeds: Vec<u64>,
}

impl SimSettings {
    /// Default slot counts with [`DEFAULT_REPLICATES`] seeds from `base_seed`.
    pub fn replicated(base_seed: u64) -> Self {
        Self {
            slots: DEFAULT_WARMUP + DEFAULT_MEASURED_SLOTS,
            warmup: DEFAULT_WARMUP,
            seeds: replicate_seeds(base_seed, DEFAULT_REPLICATES),
        }
    }

    fn config(&self, params: SystemParams, spec: SchemeSpec) -> SimConfig {
        SimConfig {
            params,
            spec,
            slots: self.slots,
            warmup: self.warmup,
            seed: self.seeds.first().copied().unwrap_or(0),
        }
    }
}

/// One configuration to evaluate with the model, the simulator or both.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub label: String,
    pub params: SystemParams,
    pub spec: SchemeSpec,
    pub options: ModelOptions,
    pub model: bool,
    pub sim: Option<SimSettings>,
    pub target: f64,
}

impl Run {
    /// Model-only run.
    pub fn new(label: impl Into<String>, params: SystemParams, spec: SchemeSpec) -> Self {
        Self {
            label: label.into(),
            params,
            spec,
            options: ModelOptions::default(),
            model: true,
            sim: None,
            target: DEFAULT_TARGET,
        }
    }

    pub fn with_sim(self, sim: SimSettings) -> Self {
        Self { sim: Some(sim), ..self }
    }

    pub fn without_model(self) -> Self {
        Self { model: false, ..self }
    }

    pub fn with_target(self, target: f64) -> Self {
        Self { target, ..self }
    }

    pub fn with_options(self, options: ModelOptions) -> Self {
        Self { options, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("playout target", self.target)?;
        if !self.model && self.sim.is_none() {
            return Err(Error::params(format!("run `{}` has nothing to do", self.label)));
        }
        self.params.validate()?;
        self.spec.validate()?;
        if let Some(sim) = &self.sim {
            if sim.seeds.is_empty() {
                return Err(Error::params("at least one simulation seed is required"));
            }
            sim.config(self.params, self.spec).validate()?;
        }
        Ok(())
    }

    pub fn execute(&self) -> Result<RunReport> {
        self.validate()?;
        let (model, convergence) = if self.model {
            let run = run_model(&self.params, &self.spec, &self.options)?;
            (Some(run.profile), Some(run.convergence))
        } else {
            (None, None)
        };
        let empirical = match &self.sim {
            Some(sim) => Some(replicate(&sim.config(self.params, self.spec), &sim.seeds)?),
            None => None,
        };
        let errors = match (&model, &empirical) {
            (Some(m), Some(e)) => Some(compare(m, e)?),
            _ => None,
        };
        let mut report = RunReport {
            run: self.clone(),
            model,
            convergence,
            empirical,
            model_metrics: None,
            empirical_metrics: None,
            errors,
        };
        report.refresh_metrics();
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// The configuration that produced this report.
    pub run: Run,
    pub model: Option<DiffusionProfile>,
    pub convergence: Option<Convergence>,
    pub empirical: Option<EmpiricalProfile>,
    pub model_metrics: Option<PlayoutMetrics>,
    pub empirical_metrics: Option<PlayoutMetrics>,
    /// Present only when both profiles are.
    pub errors: Option<ErrorSummary>,
}

impl RunReport {
    pub fn label(&self) -> &str {
        &self.run.label
    }

    /// Same profiles, metrics recomputed for another playout target.
    pub fn retarget(&self, label: impl Into<String>, target: f64) -> Result<Self> {
        check_probability("playout target", target)?;
        let mut report = self.clone();
        report.run.label = label.into();
        report.run.target = target;
        report.refresh_metrics();
        Ok(report)
    }

    fn refresh_metrics(&mut self) {
        let target = self.run.target;
        self.model_metrics = self.model.as_ref().map(|m| playout_metrics(m.values(), target));
        self.empirical_metrics = self.empirical.as_ref().map(|e| playout_metrics(&e.values, target));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PeerSelection, ReplyMode, Strategy};

    #[test]
    fn compare_examples() {
        let s = compare_values(&[0.1, 0.5, 0.9], &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!((s.mae, s.max_abs_error), (0.0, 0.0));
        let s = compare_values(&[0.2, 0.6], &[0.1, 0.5]).unwrap();
        assert!((s.mae - 0.1).abs() < 1e-15);
        assert_eq!(s.residuals.len(), 2);
        assert!(matches!(
            compare_values(&[0.1], &[0.1, 0.2]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn seeds_start_at_base() {
        let s = replicate_seeds(3, 5);
        assert_eq!(s[0], 3);
        assert_eq!(s.len(), 5);
        let mut u = s.clone();
        u.dedup();
        assert_eq!(u.len(), 5);
    }

    fn small_params() -> SystemParams {
        SystemParams {
            overlay_size: 30,
            buffer_size: 12,
            neighbor_count: 4,
            reply_number: 1,
            split_point: 6,
        }
    }

    #[test]
    fn replicate_averages_runs() {
        let spec = SchemeSpec::peer_first(Strategy::LatestFirst, PeerSelection::RandomPeer, ReplyMode::SingleReply);
        let config = SimConfig {
            slots: 300,
            warmup: 100,
            ..SimConfig::new(small_params(), spec)
        };
        let seeds = [1, 2, 3];
        let avg = replicate(&config, &seeds).unwrap();
        let each: Vec<_> = seeds
            .iter()
            .map(|&s| run_simulation(&config.with_seed(s)).unwrap().profile)
            .collect();
        for i in 0..12 {
            let mean = each.iter().map(|p| p.values[i]).sum::<f64>() / 3.0;
            assert!((avg.values[i] - mean).abs() < 1e-12);
        }
        assert_eq!(avg.sample_count, each.iter().map(|p| p.sample_count).sum::<u64>());
        assert!(replicate(&config, &[]).is_err());
    }

    #[test]
    fn report_shapes() {
        let spec = SchemeSpec::chunk_first(Strategy::Greedy, PeerSelection::RandomUsefulPeer, ReplyMode::SingleReply);
        let model_only = Run::new("m", small_params(), spec).execute().unwrap();
        assert!(model_only.errors.is_none() && model_only.empirical.is_none());
        assert!(model_only.model_metrics.is_some());

        let sim = SimSettings {
            slots: 200,
            warmup: 50,
            seeds: vec![7],
        };
        let both = Run::new("b", small_params(), spec).with_sim(sim.clone()).execute().unwrap();
        assert_eq!(both.errors.as_ref().unwrap().residuals.len(), 12);

        let sim_only = Run::new("s", small_params(), spec).with_sim(sim).without_model().execute().unwrap();
        assert!(sim_only.model.is_none() && sim_only.errors.is_none());

        let none = Run::new("x", small_params(), spec).without_model();
        assert!(none.execute().is_err());
        assert!(Run::new("t", small_params(), spec).with_target(1.5).execute().is_err());
    }

    #[test]
    fn retarget_moves_delay_only() {
        let spec = SchemeSpec::peer_first(Strategy::LatestFirst, PeerSelection::RandomPeer, ReplyMode::SingleReply);
        let r = Run::new("r", SystemParams::reference(), spec).execute().unwrap();
        let low = r.retarget("low", 0.1).unwrap();
        assert_eq!(low.model, r.model);
        assert!(low.model_metrics.unwrap().delay <= r.model_metrics.unwrap().delay.or(Some(usize::MAX)));
        assert_eq!(low.run.target, 0.1);
    }
}
