//! Chunk availability and chunk-selection weights.

use super::{SelectionMode, Strategy};
use crate::error::{check_probability, Error, Result};

/// Probability that the chunk at a position is downloadable: the local peer
/// lacks it and at least one of `v` neighbors holds it.
pub fn availability(p: f64, v: usize) -> Result<f64> {
    check_probability("presence probability", p)?;
    Ok(avail(p, v))
}

#[inline]
pub(crate) fn avail(p: f64, v: usize) -> f64 {
    (1.0 - p) * (1.0 - (1.0 - p).powi(v as i32))
}

/// Distribution of the number of successes among independent Bernoulli trials
/// (Poisson-binomial), over counts `0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingCountDistribution {
    pmf: Vec<f64>,
}

impl MissingCountDistribution {
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        for &p in probs {
            check_probability("candidate probability", p)?;
        }
        Ok(Self::build(probs.iter().copied()))
    }

    pub(crate) fn build(probs: impl IntoIterator<Item = f64>) -> Self {
        let mut pmf = vec![1.0];
        for p in probs {
            pmf.push(0.0);
            for j in (1..pmf.len()).rev() {
                pmf[j] = pmf[j] * (1.0 - p) + pmf[j - 1] * p;
            }
            pmf[0] *= 1.0 - p;
        }
        Self { pmf }
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `E[1 / (X + 1)]`.
    pub fn expected_inverse(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(j, w)| w / (j + 1) as f64)
            .sum()
    }
}

/// `E[1 / (X + 1)]` for `X` the number of successes among `probs`.
///
/// This is the chance that a particular eligible chunk wins a uniform draw
/// among itself and the other eligible chunks.
pub fn expected_inverse_count(probs: &[f64]) -> Result<f64> {
    Ok(MissingCountDistribution::from_probs(probs)?.expected_inverse())
}

/// Weight `c_i` of the chunk at `position` under the given knowledge mode and
/// strategy: the probability that, were it eligible, it is the one chosen.
///
/// `profile[k - 1]` is `P_k`; only positions `1..n-1` are requestable.
pub fn chunk_weight(
    mode: SelectionMode,
    strategy: Strategy,
    profile: &[f64],
    position: usize,
    v: usize,
) -> Result<f64> {
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
    Ok(weight(mode, strategy, profile, position, v))
}

/// Probability that a chunk held with probability `p` is *not* eligible.
#[inline]
pub(crate) fn blocked(mode: SelectionMode, p: f64, v: usize) -> f64 {
    match mode {
        SelectionMode::ZeroNeighbor => p,
        SelectionMode::OneNeighbor => 1.0 - avail(p, 1),
        SelectionMode::VNeighbor => 1.0 - avail(p, v),
    }
}

/// Unchecked variant for the iteration loops.
pub(crate) fn weight(
    mode: SelectionMode,
    strategy: Strategy,
    profile: &[f64],
    position: usize,
    v: usize,
) -> f64 {
    let n = profile.len();
    let blocked = |k: usize| blocked(mode, profile[k - 1], v);
    match strategy {
        Strategy::LatestFirst => (1..position).map(blocked).product(),
        Strategy::Greedy => (position + 1..n).map(blocked).product(),
        Strategy::Random => MissingCountDistribution::build(
            (1..n).filter(|&k| k != position).map(|k| 1.0 - blocked(k)),
        )
        .expected_inverse(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(probs: &[f64]) -> f64 {
        let m = probs.len();
        (0u32..1 << m)
            .map(|mask| {
                let mut w = 1.0;
                for (k, &p) in probs.iter().enumerate() {
                    w *= if mask >> k & 1 == 1 { p } else { 1.0 - p };
                }
                w / (mask.count_ones() + 1) as f64
            })
            .sum()
    }

    #[test]
    fn availability_examples() {
        assert_eq!(availability(0.0, 10).unwrap(), 0.0);
        assert_eq!(availability(1.0, 10).unwrap(), 0.0);
        assert_eq!(availability(0.5, 1).unwrap(), 0.25);
        assert!(availability(1.5, 1).is_err());
        assert!(availability(-0.1, 1).is_err());
    }

    #[test]
    fn expected_inverse_examples() {
        assert_eq!(expected_inverse_count(&[]).unwrap(), 1.0);
        assert_eq!(expected_inverse_count(&[1.0]).unwrap(), 0.5);
        let got = expected_inverse_count(&[0.5, 0.5]).unwrap();
        assert!((got - (0.25 + 0.5 / 2.0 + 0.25 / 3.0)).abs() < 1e-15);
        assert!(expected_inverse_count(&[0.2, 2.0]).is_err());
    }

    #[test]
    fn pmf_sums_to_one() {
        let d = MissingCountDistribution::from_probs(&[0.1, 0.7, 0.33, 1.0, 0.0]).unwrap();
        assert!((d.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(d.pmf().len(), 6);
    }

    #[test]
    fn dp_matches_brute_force_small() {
        let probs = [0.12, 0.9, 0.45, 0.3, 0.77, 0.05];
        let got = expected_inverse_count(&probs).unwrap();
        assert!((got - brute(&probs)).abs() < 1e-14);
    }

    #[test]
    fn weight_boundaries() {
        let profile = [0.2, 0.4, 0.6, 0.8];
        let w = |m, s, i| chunk_weight(m, s, &profile, i, 3).unwrap();
        assert_eq!(w(SelectionMode::ZeroNeighbor, Strategy::LatestFirst, 1), 1.0);
        assert_eq!(w(SelectionMode::ZeroNeighbor, Strategy::Greedy, 3), 1.0);
        assert!((w(SelectionMode::ZeroNeighbor, Strategy::LatestFirst, 3) - 0.2 * 0.4).abs() < 1e-15);
        assert!((w(SelectionMode::ZeroNeighbor, Strategy::Greedy, 1) - 0.4 * 0.6).abs() < 1e-15);
        let q = avail(0.2, 3);
        assert!((w(SelectionMode::VNeighbor, Strategy::LatestFirst, 2) - (1.0 - q)).abs() < 1e-15);
    }

    #[test]
    fn random_weight_uses_other_requestable_positions() {
        // n = 3: candidates for i = 1 are just position 2.
        let profile = [0.3, 0.5, 0.9];
        let got = chunk_weight(SelectionMode::ZeroNeighbor, Strategy::Random, &profile, 1, 4).unwrap();
        assert!((got - 0.75).abs() < 1e-15);
    }

    #[test]
    fn weight_rejects_bad_positions() {
        let profile = [0.1, 0.2, 0.3];
        for i in [0, 3, 7] {
            assert!(matches!(
                chunk_weight(SelectionMode::OneNeighbor, Strategy::Greedy, &profile, i, 2),
                Err(Error::PositionOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn latest_first_selection_mass_is_at_most_one() {
        let profile: Vec<f64> = (1..=40).map(|i| 1.0 - 0.9f64.powi(i)).collect();
        let total: f64 = (1..40)
            .map(|i| {
                weight(SelectionMode::ZeroNeighbor, Strategy::LatestFirst, &profile, i, 10)
                    * (1.0 - profile[i - 1])
            })
            .sum();
        assert!(total <= 1.0 + 1e-15, "{total}");
    }
}
