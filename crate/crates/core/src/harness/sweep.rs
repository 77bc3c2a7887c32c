use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::report::{replicate_seeds, Run, RunReport, SimSettings, DEFAULT_TARGET};
use crate::error::{check_probability, Error, Result};
use crate::model::{ModelOptions, ReplyMode, Scheme};
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    NeighborCount,
    /// Sweeps `U` with multi-reply serving; `U = 1` then matches single reply.
    ReplyNumber,
    /// Push-pull only.
    SplitPoint,
    /// Re-reads one run at several presence targets.
    PlayoutDelayTarget,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::NeighborCount => "neighbor_count",
            SweepParameter::ReplyNumber => "reply_number",
            SweepParameter::SplitPoint => "split_point",
            SweepParameter::PlayoutDelayTarget => "target",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v" | "neighbor_count" | "neighbor-count" => Ok(SweepParameter::NeighborCount),
            "U" | "reply_number" | "reply-number" => Ok(SweepParameter::ReplyNumber),
            "d" | "split_point" | "split-point" => Ok(SweepParameter::SplitPoint),
            "target" | "playout_delay_target" | "playout-delay-target" => Ok(SweepParameter::PlayoutDelayTarget),
            _ => Err(Error::params(format!(
                "unknown sweep parameter `{s}` (expected v, U, d or target)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Configuration every point starts from. Its seed is the base of the
    /// replicate seeds.
    pub base: SimConfig,
    pub options: ModelOptions,
    pub model: bool,
    /// Simulation seeds per point; zero skips the simulator.
    pub replicates: usize,
    pub target: f64,
}

impl SweepSpec {
    /// Model-only sweep.
    pub fn new(parameter: SweepParameter, values: Vec<f64>, base: SimConfig) -> Self {
        Self {
            parameter,
            values,
            base,
            options: ModelOptions::default(),
            model: true,
            replicates: 0,
            target: DEFAULT_TARGET,
        }
    }

    /// The run behind every point, in sweep order.
    pub fn runs(&self) -> Result<Vec<Run>> {
        if self.values.is_empty() {
            return Err(Error::params("sweep needs at least one value"));
        }
        self.values.iter().map(|&x| self.point(x)).collect()
    }

    fn base_run(&self) -> Run {
        let mut run = Run::new("base", self.base.params, self.base.spec)
            .with_options(self.options)
            .with_target(self.target);
        run.model = self.model;
        if self.replicates > 0 {
            run = run.with_sim(SimSettings {
                slots: self.base.slots,
                warmup: self.base.warmup,
                seeds: replicate_seeds(self.base.seed, self.replicates),
            });
        }
        run
    }

    fn point(&self, x: f64) -> Result<Run> {
        let mut run = self.base_run();
        run.label = format!("{}={}", self.parameter, x);
        match self.parameter {
            SweepParameter::PlayoutDelayTarget => {
                run.target = check_probability("playout target", x)?;
            }
            SweepParameter::NeighborCount => run.params.neighbor_count = count(self.parameter, x)?,
            SweepParameter::ReplyNumber => {
                if run.spec.scheme == Scheme::Epidemic {
                    return Err(Error::params("reply_number sweeps do not apply to the epidemic scheme"));
                }
                run.params.reply_number = count(self.parameter, x)?;
                run.spec.reply_mode = ReplyMode::MultiReply;
            }
            SweepParameter::SplitPoint => {
                if run.spec.scheme != Scheme::PushPull {
                    return Err(Error::params("split_point sweeps need the push-pull scheme"));
                }
                run.params.split_point = count(self.parameter, x)?;
            }
        }
        run.validate()?;
        Ok(run)
    }
}

fn count(parameter: SweepParameter, x: f64) -> Result<usize> {
    if x >= 1.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(Error::params(format!("{parameter} values must be positive integers (got {x})")))
    }
}

/// One report per swept value, in the order given. Points run in parallel.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<RunReport>> {
    let runs = spec.runs()?;
    if spec.parameter == SweepParameter::PlayoutDelayTarget {
        let base = spec.base_run().execute()?;
        return runs.iter().map(|r| base.retarget(r.label.clone(), r.target)).collect();
    }
    runs.par_iter().map(Run::execute).collect()
}
