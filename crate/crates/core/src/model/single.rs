//! Spread of one chunk over time, with and without the continuous
//! approximations.

use super::{DiffusionProfile, PeerSelection};
use crate::error::{Error, Result};

/// Discrete single-chunk diffusion over `slots` slots, `P_1 = 1/N`.
pub fn single_chunk_profile(
    kind: PeerSelection,
    overlay_size: usize,
    v: usize,
    slots: usize,
) -> Result<DiffusionProfile> {
    if overlay_size == 0 || v == 0 || slots == 0 {
        return Err(Error::params(format!(
            "single chunk needs N, v, T >= 1 (got N={overlay_size}, v={v}, T={slots})"
        )));
    }
    let reach = 1.0 - (1.0 - 1.0 / v as f64).powi(v as i32);
    let mut p = 1.0 / overlay_size as f64;
    let mut values = Vec::with_capacity(slots);
    values.push(p);
    for _ in 1..slots {
        let z = match kind {
            PeerSelection::RandomUsefulPeer => 1.0 - p.powi(v as i32),
            PeerSelection::RandomPeer => (1.0 - p) * reach,
        };
        p += (p * z).min(1.0 - p);
        values.push(p);
    }
    Ok(DiffusionProfile::from_raw(values))
}

/// Which combination of logarithms the random-peer closed form uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogForm {
    /// `ln y - ln(1 - y)`: the logistic solution. Matches the recursion.
    Difference,
    /// `ln y + ln(1 - y)`: the commonly printed variant. Not monotone in `y`.
    Sum,
}

/// Continuous single-chunk solutions.
///
/// * `RandomUsefulPeer`: `arg` is the slot `x >= 1`; returns
///   `y = 1 - (e^{v x + C} + 1)^{-1}` with `C = ln[(1 - P_1)^{-1} - 1] - v`.
/// * `RandomPeer`: `arg` is the level `y` in (0, 1); returns the slot `x` at
///   which the logistic curve reaches it (see [`closed_form_slot`]).
pub fn single_chunk_closed_form(kind: PeerSelection, arg: f64, p1: f64, v: usize) -> Result<f64> {
    check_open_unit("P_1", p1)?;
    match kind {
        PeerSelection::RandomUsefulPeer => {
            if arg.is_nan() || arg < 1.0 {
                return Err(Error::Domain(format!("slot x must be >= 1 (got {arg})")));
            }
            let v = v as f64;
            let c = ((1.0 - p1).recip() - 1.0).ln() - v;
            Ok(1.0 - ((v * arg + c).exp() + 1.0).recip())
        }
        PeerSelection::RandomPeer => closed_form_slot(arg, p1, LogForm::Difference),
    }
}

/// Slot `x` at which the random-peer curve reaches level `y`:
/// `x = a^{-1} L(y) + C`, `C = 1 - a^{-1} L(P_1)`, `a = 1 - e^{-1}`, where `L`
/// is the chosen log combination.
pub fn closed_form_slot(y: f64, p1: f64, form: LogForm) -> Result<f64> {
    check_open_unit("y", y)?;
    check_open_unit("P_1", p1)?;
    let a = 1.0 - (-1.0f64).exp();
    let logs = |z: f64| match form {
        LogForm::Difference => z.ln() - (1.0 - z).ln(),
        LogForm::Sum => z.ln() + (1.0 - z).ln(),
    };
    let c = 1.0 - logs(p1) / a;
    Ok(logs(y) / a + c)
}

/// Exact solution of `y' = y (1 - y^v)` through `(1, P_1)`:
/// `y = [1 + (P_1^{-v} - 1) e^{-v (x - 1)}]^{-1/v}`.
pub fn single_chunk_ode(x: f64, p1: f64, v: usize) -> Result<f64> {
    check_open_unit("P_1", p1)?;
    let v = v as f64;
    let k = p1.powf(-v) - 1.0;
    Ok((1.0 + k * (-v * (x - 1.0)).exp()).powf(-1.0 / v))
}

fn check_open_unit(what: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must lie in (0, 1) (got {value})")))
    }
}
