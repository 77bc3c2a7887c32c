//! Push-pull: greedy blind pull on positions `d+1..n`, latest-first blind
//! push on `1..d` by peers that had no pull request to serve.

use super::fixed_point::{Anderson, Convergence};
use super::{DiffusionProfile, SystemParams};
use crate::error::Result;

/// Residual bound for the push-pull fixed point.
pub const PUSH_PULL_TOLERANCE: f64 = 1e-10;

/// Pure latest-blind push with random peer selection (no pull region).
pub fn push_profile(params: &SystemParams) -> Result<DiffusionProfile> {
    params.validate()?;
    let mut values = Vec::with_capacity(params.buffer_size);
    let mut p = 1.0 / params.overlay_size as f64;
    let mut newer_missing = 1.0;
    values.push(p);
    for _ in 1..params.buffer_size {
        let next = p + (1.0 - p) * (1.0 - (-p * newer_missing).exp());
        newer_missing *= 1.0 - p;
        p = next;
        values.push(p);
    }
    Ok(DiffusionProfile::from_raw(values))
}

/// Solves the segmented push-pull recursion for split point `d`.
///
/// The push term at `i <= d` is throttled by `1 - P_{d+1}`, a value the same
/// sweep produces later, and the greedy pull weight reads positions past `i`;
/// the whole profile is therefore found as a fixed point, starting from the
/// pure-push profile.
pub fn push_pull_profile(params: &SystemParams) -> Result<(DiffusionProfile, Convergence)> {
    params.validate()?;
    let init = push_profile(params)?.into_values();
    if params.split_point == params.buffer_size {
        let values = sweep(&init, params);
        return Ok((DiffusionProfile::from_raw(values), Convergence::exact()));
    }
    let (values, convergence) =
        Anderson::with_tolerance(PUSH_PULL_TOLERANCE).solve(init, |prev| sweep(prev, params))?;
    Ok((DiffusionProfile::from_raw(values), convergence))
}

pub(crate) fn sweep(prev: &[f64], params: &SystemParams) -> Vec<f64> {
    let n = params.buffer_size;
    let d = params.split_point;
    let pull_gain = 1.0 - (-1.0f64).exp();
    let mut cur = prev.to_vec();
    cur[0] = 1.0 / params.overlay_size as f64;
    let mut newer_missing = 1.0;
    for i in 1..n {
        let p = cur[i - 1];
        let next = if i <= d {
            // cur[d] is P_{d+1}; not yet overwritten while i <= d.
            let idle = if d < n { 1.0 - cur[d] } else { 1.0 };
            let c = idle * newer_missing;
            p + (1.0 - p) * (1.0 - (-p * c).exp())
        } else {
            let c: f64 = cur[i..n - 1].iter().product();
            p + p * c * (1.0 - p) * pull_gain
        };
        newer_missing *= 1.0 - p;
        cur[i] = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize) -> SystemParams {
        SystemParams {
            split_point: d,
            ..SystemParams::reference()
        }
    }

    #[test]
    fn split_at_n_is_pure_push() {
        let (pp, conv) = push_pull_profile(&params(40)).unwrap();
        let push = push_profile(&params(40)).unwrap();
        for (a, b) in pp.values().iter().zip(push.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(conv.residual, 0.0);
    }

    #[test]
    fn split_at_one_is_greedy_blind_pull_after_the_first_step() {
        let (pp, _) = push_pull_profile(&params(1)).unwrap();
        let v = pp.values();
        let gain = 1.0 - (-1.0f64).exp();
        for i in 2..40 {
            let c: f64 = v[i..39].iter().product();
            let expect = v[i - 1] + v[i - 1] * c * (1.0 - v[i - 1]) * gain;
            assert!((v[i] - expect).abs() < 1e-9, "position {}", i + 1);
        }
    }

    #[test]
    fn converged_profile_reproduces_itself() {
        for d in [1, 5, 20, 39] {
            let (pp, conv) = push_pull_profile(&params(d)).unwrap();
            assert!(conv.residual < PUSH_PULL_TOLERANCE);
            let again = sweep(pp.values(), &params(d));
            for (a, b) in again.iter().zip(pp.values()) {
                assert!((a - b).abs() < PUSH_PULL_TOLERANCE);
            }
            assert!(pp.is_monotone());
        }
    }
}
