use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::report::{Run, RunReport, SimSettings};
use crate::error::{Error, Result};
use crate::model::{PeerSelection, ReplyMode, Scheme, SchemeSpec, Strategy, SystemParams};

/// Neighbor counts swept by [`Preset::Fig4b`].
pub const FIG4B_NEIGHBORS: [usize; 14] = [4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Profiles of the three pull schemes, `U = 1`, model and simulation.
    Fig3,
    /// Playout probability against delay, chunk-first and peer-first.
    Fig4a,
    /// Playout probability against the neighbor count.
    Fig4b,
    /// Chunk-first and peer-first profiles at `U = 4`, model and simulation.
    Fig5,
    /// Playout probability against `U = 1..6`.
    Fig6,
    /// Push-pull playout probability against `d = 1..n`.
    Fig7a,
    /// Pure push against push-pull at `d = 20`, model and simulation.
    Fig7b,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig3,
        Preset::Fig4a,
        Preset::Fig4b,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7a,
        Preset::Fig7b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7a => "fig7a",
            Preset::Fig7b => "fig7b",
        }
    }

    /// 1-based position in [`Preset::ALL`]; also the base simulation seed.
    pub fn index(self) -> u64 {
        Preset::ALL.iter().position(|&p| p == self).unwrap() as u64 + 1
    }

    /// The runs behind the preset, in report order.
    pub fn runs(self) -> Vec<Run> {
        let base = SystemParams::reference();
        let sim = || SimSettings::replicated(self.index());
        let tag = |spec: &SchemeSpec| format!("{}-{}", spec.scheme, spec.strategy);
        match self {
            Preset::Fig3 => [Scheme::ChunkFirst, Scheme::PeerFirst, Scheme::Epidemic]
                .into_iter()
                .flat_map(|scheme| Strategy::ALL.map(|s| pull(scheme, s, ReplyMode::SingleReply)))
                .map(|spec| Run::new(format!("fig3/{}", tag(&spec)), base, spec).with_sim(sim()))
                .collect(),
            Preset::Fig4a => cf_pf(ReplyMode::SingleReply)
                .map(|spec| Run::new(format!("fig4a/{}", tag(&spec)), base, spec))
                .collect(),
            Preset::Fig4b => cf_pf(ReplyMode::SingleReply)
                .flat_map(|spec| {
                    FIG4B_NEIGHBORS.map(|v| {
                        let params = SystemParams {
                            neighbor_count: v,
                            ..base
                        };
                        Run::new(format!("fig4b/{}/v={v}", tag(&spec)), params, spec)
                    })
                })
                .collect(),
            Preset::Fig5 => {
                let params = SystemParams {
                    reply_number: 4,
                    ..base
                };
                cf_pf(ReplyMode::MultiReply)
                    .map(|spec| Run::new(format!("fig5/{}", tag(&spec)), params, spec).with_sim(sim()))
                    .collect()
            }
            Preset::Fig6 => cf_pf(ReplyMode::MultiReply)
                .flat_map(|spec| {
                    (1..=6).map(move |u| {
                        let params = SystemParams {
                            reply_number: u,
                            ..base
                        };
                        Run::new(format!("fig6/{}/U={u}", tag(&spec)), params, spec)
                    })
                })
                .collect(),
            Preset::Fig7a => (1..=base.buffer_size)
                .map(|d| {
                    let params = SystemParams { split_point: d, ..base };
                    Run::new(format!("fig7a/d={d}"), params, SchemeSpec::push_pull())
                })
                .collect(),
            Preset::Fig7b => [("push", base.buffer_size), ("pushpull", 20)]
                .into_iter()
                .map(|(name, d)| {
                    let params = SystemParams { split_point: d, ..base };
                    Run::new(format!("fig7b/{name}"), params, SchemeSpec::push_pull()).with_sim(sim())
                })
                .collect(),
        }
    }

    /// Runs every point, in parallel, keeping report order.
    pub fn execute(self) -> Result<Vec<RunReport>> {
        self.runs().par_iter().map(Run::execute).collect()
    }
}

/// Chunk-first and peer-first use random-useful peer selection, epidemic
/// random peer selection.
fn pull(scheme: Scheme, strategy: Strategy, reply_mode: ReplyMode) -> SchemeSpec {
    match scheme {
        Scheme::Epidemic => SchemeSpec::epidemic(strategy),
        _ => SchemeSpec::new(scheme, strategy, PeerSelection::RandomUsefulPeer, reply_mode),
    }
}

fn cf_pf(reply_mode: ReplyMode) -> impl Iterator<Item = SchemeSpec> {
    [Scheme::ChunkFirst, Scheme::PeerFirst]
        .into_iter()
        .flat_map(move |scheme| Strategy::ALL.map(|s| pull(scheme, s, reply_mode)))
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

pub fn figure_preset(name: &str) -> Result<Vec<RunReport>> {
    name.parse::<Preset>()?.execute()
}
