//! Per-position success probabilities `Z_i` for the pull schemes.

use super::binomial::{inverse_share, pmf};
use super::chunk::{avail, weight};
use super::{
    ModelOptions, PeerSelection, ReplyMode, Scheme, SchemeSpec, SelectionMode, Strategy, SystemParams,
};
use crate::error::{check_probability, Error, Result};

/// Intermediate quantities behind one `Z_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PullRates {
    /// `c_i` under the scheme's selection mode.
    pub chunk_weight: f64,
    /// `p_i`, the chance a given neighbor picks this peer.
    pub peer_prob: f64,
    /// `r_i`, chunk-first only.
    pub request_prob: Option<f64>,
    /// `w_i`, peer-first only.
    pub choose_prob: Option<f64>,
    /// `u_i`, peer-first with random useful selection only.
    pub useful_prob: Option<f64>,
    /// `Z_i`. An expected count in multi-reply mode, so it may exceed 1.
    pub success: f64,
}

/// Peer-selection probability for chunk-first.
pub fn peer_prob_cf(kind: PeerSelection, p: f64, v: usize) -> Result<f64> {
    check_probability("presence probability", p)?;
    check_neighbors(v)?;
    Ok(cf_peer(kind, p, v))
}

fn cf_peer(kind: PeerSelection, p: f64, v: usize) -> f64 {
    match kind {
        PeerSelection::RandomPeer => 1.0 / v as f64,
        PeerSelection::RandomUsefulPeer => inverse_share(v - 1, p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerChoice {
    /// `u`, the chance a neighbor has something useful (random useful only).
    pub useful: Option<f64>,
    /// `p`, the chance a given neighbor picks this peer.
    pub peer: f64,
}

/// Peer-selection probability for peer-first.
pub fn peer_prob_pf(kind: PeerSelection, profile: &[f64], v: usize) -> Result<PeerChoice> {
    for &p in profile {
        check_probability("profile entry", p)?;
    }
    check_neighbors(v)?;
    Ok(pf_peer(kind, profile, v))
}

fn pf_peer(kind: PeerSelection, profile: &[f64], v: usize) -> PeerChoice {
    let useful = match kind {
        PeerSelection::RandomPeer => 0.0,
        PeerSelection::RandomUsefulPeer => useful_share(profile),
    };
    pf_peer_for(kind, useful, v)
}

fn check_neighbors(v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::params("neighbor_count v must be >= 1 (got 0)"))
    } else {
        Ok(())
    }
}

fn check_position(profile: &[f64], position: usize) -> Result<()> {
    let n = profile.len();
    if position < 1 || position + 1 > n {
        return Err(Error::PositionOutOfRange {
            position,
            max: n.saturating_sub(1),
        });
    }
    for &p in profile {
        check_probability("profile entry", p)?;
    }
    Ok(())
}

fn expect_scheme(spec: &SchemeSpec, scheme: Scheme) -> Result<()> {
    if spec.scheme == scheme {
        Ok(())
    } else {
        Err(Error::params(format!(
            "expected a {scheme} scheme, got {}",
            spec.scheme
        )))
    }
}

/// `1 - (1 - x)^v`, or `1 - exp(-v x)` under the exponential shortcut.
fn at_least_once(x: f64, v: usize, opts: &ModelOptions) -> f64 {
    if opts.exponential_approx {
        1.0 - (-(v as f64) * x).exp()
    } else {
        1.0 - (1.0 - x).powi(v as i32)
    }
}

fn served(k: usize, cap: usize, opts: &ModelOptions) -> usize {
    if opts.unlimited_reply {
        k
    } else {
        k.min(cap)
    }
}

pub fn z_chunk_first(
    profile: &[f64],
    position: usize,
    params: &SystemParams,
    spec: &SchemeSpec,
    opts: &ModelOptions,
) -> Result<PullRates> {
    check_position(profile, position)?;
    check_neighbors(params.neighbor_count)?;
    expect_scheme(spec, Scheme::ChunkFirst)?;
    Ok(chunk_first(profile, position, params, spec, opts))
}

pub(crate) fn chunk_first(
    profile: &[f64],
    position: usize,
    params: &SystemParams,
    spec: &SchemeSpec,
    opts: &ModelOptions,
) -> PullRates {
    let c = weight(SelectionMode::VNeighbor, spec.strategy, profile, position, params.neighbor_count);
    cf_rates(profile[position - 1], c, params, spec, opts)
}

/// Chunk-first rates from the local presence probability and chunk weight.
pub(crate) fn cf_rates(
    p_i: f64,
    c: f64,
    params: &SystemParams,
    spec: &SchemeSpec,
    opts: &ModelOptions,
) -> PullRates {
    let v = params.neighbor_count;
    let p = cf_peer(spec.peer_selection, p_i, v);
    let r = p * c * (1.0 - p_i);
    let success = match spec.reply_mode {
        ReplyMode::SingleReply => at_least_once(r, v, opts),
        ReplyMode::MultiReply => pmf(v, r)
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, w)| served(k, params.reply_number, opts) as f64 * w)
            .sum(),
    };
    PullRates {
        chunk_weight: c,
        peer_prob: p,
        request_prob: Some(r),
        choose_prob: None,
        useful_prob: None,
        success,
    }
}

pub fn z_peer_first(
    profile: &[f64],
    position: usize,
    params: &SystemParams,
    spec: &SchemeSpec,
    opts: &ModelOptions,
) -> Result<PullRates> {
    check_position(profile, position)?;
    check_neighbors(params.neighbor_count)?;
    expect_scheme(spec, Scheme::PeerFirst)?;
    Ok(peer_first(profile, position, params, spec, opts))
}

pub(crate) fn peer_first(
    profile: &[f64],
    position: usize,
    params: &SystemParams,
    spec: &SchemeSpec,
    opts: &ModelOptions,
) -> PullRates {
    let v = params.neighbor_count;
    let c = weight(SelectionMode::OneNeighbor, spec.strategy, profile, position, v);
    let choice = pf_peer(spec.peer_selection, profile, v);
    pf_rates(profile[position - 1], c, choice, params, spec, opts)
}

/// Peer choice for a given chance `u` that a neighbor is useful.
pub(crate) fn pf_peer_for(kind: PeerSelection, useful: f64, v: usize) -> PeerChoice {
    match kind {
        PeerSelection::RandomPeer => PeerChoice {
            useful: None,
            peer: 1.0 / v as f64,
        },
        PeerSelection::RandomUsefulPeer => PeerChoice {
            useful: Some(useful),
            peer: inverse_share(v - 1, useful),
        },
    }
}

/// Chance that a neighbor holds at least one chunk the local peer lacks.
pub(crate) fn useful_share(profile: &[f64]) -> f64 {
    1.0 - profile.iter().map(|&p| 1.0 - avail(p, 1)).product::<f64>()
}

/// Peer-first rates from the local presence probability, chunk weight and
/// peer choice.
pub(crate) fn pf_rates(
    p_i: f64,
    c: f64,
    choice: PeerChoice,
    params: &SystemParams,
    spec: &SchemeSpec,
    opts: &ModelOptions,
) -> PullRates {
    let v = params.neighbor_count;
    let w = c * (1.0 - p_i);
    let p = choice.peer;
    let success = match spec.reply_mode {
        ReplyMode::SingleReply => w * at_least_once(p, v, opts),
        ReplyMode::MultiReply => pmf(v, p)
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, weight_k)| {
                let s = served(k, params.reply_number, opts);
                let q: f64 = pmf(s, w)
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(t, m)| t as f64 * m)
                    .sum();
                q * weight_k
            })
            .sum(),
    };
    PullRates {
        chunk_weight: c,
        peer_prob: p,
        request_prob: None,
        choose_prob: Some(w),
        useful_prob: choice.useful,
        success,
    }
}

pub fn z_epidemic(
    profile: &[f64],
    position: usize,
    params: &SystemParams,
    strategy: Strategy,
    opts: &ModelOptions,
) -> Result<PullRates> {
    check_position(profile, position)?;
    check_neighbors(params.neighbor_count)?;
    Ok(epidemic(profile, position, params, opts, strategy))
}

pub(crate) fn epidemic(
    profile: &[f64],
    position: usize,
    params: &SystemParams,
    opts: &ModelOptions,
    strategy: Strategy,
) -> PullRates {
    let v = params.neighbor_count;
    let c = weight(SelectionMode::ZeroNeighbor, strategy, profile, position, v);
    ep_rates(profile[position - 1], c, v, opts)
}

/// Epidemic rates from the local presence probability and chunk weight.
pub(crate) fn ep_rates(p_i: f64, c: f64, v: usize, opts: &ModelOptions) -> PullRates {
    let p = 1.0 / v as f64;
    let reach = if opts.exponential_approx {
        1.0 - (-1.0f64).exp()
    } else {
        1.0 - (1.0 - p).powi(v as i32)
    };
    PullRates {
        chunk_weight: c,
        peer_prob: p,
        request_prob: None,
        choose_prob: None,
        useful_prob: None,
        success: c * (1.0 - p_i) * reach,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(v: usize, u: usize) -> SystemParams {
        SystemParams {
            overlay_size: 100,
            buffer_size: 5,
            neighbor_count: v,
            reply_number: u,
            split_point: 1,
        }
    }

    #[test]
    fn cf_peer_examples() {
        assert!((peer_prob_cf(PeerSelection::RandomPeer, 0.3, 10).unwrap() - 0.1).abs() < 1e-15);
        for v in 1..12 {
            assert_eq!(peer_prob_cf(PeerSelection::RandomUsefulPeer, 0.0, v).unwrap(), 1.0);
        }
        assert!((peer_prob_cf(PeerSelection::RandomUsefulPeer, 1.0, 4).unwrap() - 0.25).abs() < 1e-15);
        assert!(peer_prob_cf(PeerSelection::RandomPeer, 0.3, 0).is_err());
    }

    #[test]
    fn pf_peer_examples() {
        let any = [0.2, 0.3, 0.9];
        let rp = peer_prob_pf(PeerSelection::RandomPeer, &any, 10).unwrap();
        assert!((rp.peer - 0.1).abs() < 1e-15);
        assert_eq!(rp.useful, None);

        let zero = [0.0; 6];
        let ru = peer_prob_pf(PeerSelection::RandomUsefulPeer, &zero, 7).unwrap();
        assert_eq!(ru.useful, Some(0.0));
        assert_eq!(ru.peer, 1.0);
    }

    #[test]
    fn pf_peer_certainly_useful() {
        // Q_1 = P (1 - P) never reaches 1 on a real profile, so drive the
        // peer term directly: only the k = v - 1 term survives at u = 1.
        assert!((inverse_share(1, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_request_means_no_success() {
        // c_v never reaches exactly 0 on a real profile (Q_v < 1), so force
        // r_i = 0 through P_i = 1 instead.
        let opts = ModelOptions::default();
        let full = [0.2, 1.0, 1.0, 1.0, 1.0];
        for mode in [ReplyMode::SingleReply, ReplyMode::MultiReply] {
            let spec = SchemeSpec::chunk_first(Strategy::Greedy, PeerSelection::RandomPeer, mode);
            let r = z_chunk_first(&full, 2, &params(4, 3), &spec, &opts).unwrap();
            assert_eq!(r.request_prob, Some(0.0));
            assert_eq!(r.success, 0.0);
            let spec = SchemeSpec::peer_first(Strategy::Greedy, PeerSelection::RandomUsefulPeer, mode);
            let r = z_peer_first(&full, 2, &params(4, 3), &spec, &opts).unwrap();
            assert_eq!(r.choose_prob, Some(0.0));
            assert_eq!(r.success, 0.0);
        }
    }

    #[test]
    fn empty_products_give_unit_weight() {
        let profile = [0.2, 0.3, 0.5, 0.5, 0.4];
        let opts = ModelOptions::default();
        let latest = SchemeSpec::chunk_first(Strategy::LatestFirst, PeerSelection::RandomPeer, ReplyMode::SingleReply);
        let r = z_chunk_first(&profile, 1, &params(4, 1), &latest, &opts).unwrap();
        assert_eq!(r.chunk_weight, 1.0);
        let greedy = SchemeSpec { strategy: Strategy::Greedy, ..latest };
        let r = z_chunk_first(&profile, 4, &params(4, 1), &greedy, &opts).unwrap();
        assert_eq!(r.chunk_weight, 1.0);
    }

    #[test]
    fn epidemic_examples() {
        let opts = ModelOptions::default();
        let full = [0.4, 1.0, 1.0];
        let z = z_epidemic(&full, 2, &params(5, 1), Strategy::LatestFirst, &opts).unwrap();
        assert_eq!(z.success, 0.0);

        let fresh = [0.0, 0.0, 0.0];
        let z = z_epidemic(&fresh, 1, &params(1, 1), Strategy::LatestFirst, &opts).unwrap();
        assert_eq!(z.success, 1.0);

        let z = z_epidemic(&fresh, 1, &params(10_000, 1), Strategy::LatestFirst, &opts).unwrap();
        assert!((z.success - (1.0 - (-1.0f64).exp())).abs() < 1e-4);
        let approx = ModelOptions { exponential_approx: true, ..opts };
        let z = z_epidemic(&fresh, 1, &params(10, 1), Strategy::LatestFirst, &approx).unwrap();
        assert!((z.success - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    #[test]
    fn scheme_mismatch_is_rejected() {
        let profile = [0.1, 0.2, 0.3];
        let spec = SchemeSpec::epidemic(Strategy::Random);
        assert!(z_chunk_first(&profile, 1, &params(2, 1), &spec, &ModelOptions::default()).is_err());
        assert!(z_peer_first(&profile, 1, &params(2, 1), &spec, &ModelOptions::default()).is_err());
    }

    #[test]
    fn multi_reply_saturated_is_mean() {
        let profile = [0.05, 0.2, 0.4, 0.6, 0.7];
        let v = 6;
        let spec = SchemeSpec::chunk_first(Strategy::Random, PeerSelection::RandomPeer, ReplyMode::MultiReply);
        let r = z_chunk_first(&profile, 2, &params(v, v), &spec, &ModelOptions::default()).unwrap();
        let mean = v as f64 * r.request_prob.unwrap();
        assert!((r.success - mean).abs() < 1e-14);
    }
}
