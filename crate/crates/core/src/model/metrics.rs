#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayoutMetrics {
    /// Presence probability at the playout position.
    pub probability: f64,
    /// First 1-based position whose value reaches the target.
    pub delay: Option<usize>,
}

pub fn playout_metrics(profile: &[f64], target: f64) -> PlayoutMetrics {
    PlayoutMetrics {
        probability: profile.last().copied().unwrap_or(0.0),
        delay: profile.iter().position(|&p| p >= target).map(|i| i + 1),
    }
}
