//! Discrete-time stop and play operators.
//!
//! The stop operator folds input increments into a state clipped to
//! `[-1, 1]`; the play operator reports `x - s`, which stays put while the
//! stop state is interior.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Saturation function: `-1` below `-1`, identity on `[-1, 1]`, `1` above `1`.
pub fn clip(tau: f64) -> Result<f64> {
    ensure_finite("tau", tau)?;
    Ok(clip_unchecked(tau))
}

#[inline]
pub(crate) fn clip_unchecked(tau: f64) -> f64 {
    if tau < -1.0 {
        -1.0
    } else if tau > 1.0 {
        1.0
    } else {
        tau
    }
}

/// State of the stop operator, always inside `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StopState(f64);

impl StopState {
    pub const ZERO: StopState = StopState(0.0);

    pub fn new(s: f64) -> Result<Self> {
        ensure_finite("stop state", s)?;
        if s.abs() > 1.0 {
            return Err(Error::Domain(format!("stop state must lie in [-1, 1], got {s}")));
        }
        Ok(StopState(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for StopState {
    type Error = Error;

    fn try_from(s: f64) -> Result<Self> {
        StopState::new(s)
    }
}

impl From<StopState> for f64 {
    fn from(s: StopState) -> f64 {
        s.0
    }
}

impl std::ops::Neg for StopState {
    type Output = StopState;

    fn neg(self) -> StopState {
        StopState(-self.0)
    }
}

/// Nonempty sequence of finite inputs `x_0, ..., x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSequence(Vec<f64>);

impl InputSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("input sequence must be nonempty".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            ensure_finite(&format!("input[{i}]"), v)?;
        }
        Ok(InputSequence(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for InputSequence {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        InputSequence::new(values)
    }
}

/// One stop update: `Φ(s + x_next - x_prev)`.
pub fn stop_step(s: StopState, x_prev: f64, x_next: f64) -> Result<StopState> {
    ensure_finite("x_prev", x_prev)?;
    ensure_finite("x_next", x_next)?;
    Ok(StopState(clip_unchecked(s.0 + (x_next - x_prev))))
}

/// Outputs `s_1, ..., s_N` of the stop operator; `s_0` is not repeated.
pub fn stop_transduce(s0: StopState, xs: &InputSequence) -> Vec<StopState> {
    xs.values()
        .windows(2)
        .scan(s0, |s, w| {
            *s = StopState(clip_unchecked(s.0 + (w[1] - w[0])));
            Some(*s)
        })
        .collect()
}

/// Outputs `p_n = x_n - s_n` for `n = 1..=N`.
pub fn play_transduce(s0: StopState, xs: &InputSequence) -> Vec<f64> {
    stop_transduce(s0, xs)
        .into_iter()
        .zip(&xs.values()[1..])
        .map(|(s, &x)| x - s.0)
        .collect()
}

/// Play step with threshold `rho`, as used for expectations in the macro
/// model: `s' = Φ(s + (u_next - u_prev)/rho)`, `σ = u_next - rho s'`.
pub fn scaled_play_step(
    s: StopState,
    u_prev: f64,
    u_next: f64,
    rho: f64,
) -> Result<(StopState, f64)> {
    ensure_finite("rho", rho)?;
    if rho <= 0.0 {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    ensure_finite("u_prev", u_prev)?;
    ensure_finite("u_next", u_next)?;
    let next = clip_unchecked(s.0 + (u_next - u_prev) / rho);
    Ok((StopState(next), u_next - rho * next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(s: f64) -> StopState {
        StopState::new(s).unwrap()
    }

    fn seq(v: &[f64]) -> InputSequence {
        InputSequence::new(v.to_vec()).unwrap()
    }

    fn vals(v: Vec<StopState>) -> Vec<f64> {
        v.into_iter().map(StopState::value).collect()
    }

    #[test]
    fn clip_branches() {
        assert_eq!(clip(0.5).unwrap(), 0.5);
        assert_eq!(clip(2.0).unwrap(), 1.0);
        assert_eq!(clip(-3.0).unwrap(), -1.0);
        assert_eq!(clip(1.0).unwrap(), 1.0);
        assert_eq!(clip(-1.0).unwrap(), -1.0);
        assert!(matches!(clip(f64::NAN), Err(Error::Domain(_))));
        assert!(clip(f64::INFINITY).is_err());
    }

    #[test]
    fn stop_step_examples() {
        assert_eq!(stop_step(st(0.0), 0.0, 2.0).unwrap().value(), 1.0);
        assert_eq!(stop_step(st(0.3), 5.0, 5.0).unwrap().value(), 0.3);
        assert_eq!(stop_step(st(1.0), 0.0, -0.5).unwrap().value(), 0.5);
        assert!(stop_step(st(0.0), f64::NAN, 1.0).is_err());
    }

    #[test]
    fn stop_state_rejects_out_of_range() {
        assert!(StopState::new(1.0000001).is_err());
        assert!(StopState::new(f64::NAN).is_err());
        assert!(InputSequence::new(vec![]).is_err());
        assert!(InputSequence::new(vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn transduce_examples() {
        let out = vals(stop_transduce(st(0.0), &seq(&[0.0, 2.0, 1.0])));
        assert_eq!(out, vec![1.0, 0.0]);
        // fold oracle: two explicit steps
        let s1 = stop_step(st(0.0), 0.0, 2.0).unwrap();
        let s2 = stop_step(s1, 2.0, 1.0).unwrap();
        assert_eq!(out, vec![s1.value(), s2.value()]);

        assert!(stop_transduce(st(0.0), &seq(&[0.0])).is_empty());
    }

    #[test]
    fn staircase_hits_both_bounds() {
        // up by 0.6 twice (saturates), down by 1.2 then 1.4 (saturates low)
        let xs = seq(&[0.0, 0.6, 1.2, 0.0, -1.4, -1.0]);
        let out = vals(stop_transduce(st(0.0), &xs));
        assert_eq!(out[1], 1.0);
        assert_eq!(out[3], -1.0);
        assert!(out[0].abs() < 1.0 && out[2].abs() < 1.0 && out[4].abs() < 1.0);
    }

    #[test]
    fn play_examples() {
        assert_eq!(play_transduce(st(0.0), &seq(&[0.0, 0.5, 0.2])), vec![0.0, 0.0]);
        assert_eq!(play_transduce(st(0.0), &seq(&[0.0, 2.0])), vec![1.0]);
        assert_eq!(play_transduce(st(0.0), &seq(&[0.0, 2.0, -2.0])), vec![1.0, -1.0]);
    }

    #[test]
    fn scaled_play_examples() {
        let (s, sigma) = scaled_play_step(st(0.0), 0.0, 0.0, 1.0).unwrap();
        assert_eq!((s.value(), sigma), (0.0, 0.0));
        let (s, sigma) = scaled_play_step(st(0.0), 0.0, 3.0, 1.0).unwrap();
        assert_eq!((s.value(), sigma), (1.0, 2.0));
        let (s, sigma) = scaled_play_step(st(0.2), 1.0, 1.3, 2.0).unwrap();
        assert!((s.value() - 0.35).abs() < 1e-15);
        assert!((sigma - 0.6).abs() < 1e-15);
        assert!(scaled_play_step(st(0.0), 0.0, 1.0, 0.0).is_err());
        assert!(scaled_play_step(st(0.0), 0.0, 1.0, -1.0).is_err());
    }

    fn inputs() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..60)
    }

    proptest! {
        #[test]
        fn outputs_stay_in_range(s0 in -1.0f64..=1.0, xs in inputs()) {
            for s in stop_transduce(st(s0), &seq(&xs)) {
                prop_assert!(s.value().abs() <= 1.0);
            }
        }

        #[test]
        fn clip_idempotent(t in -1e6f64..1e6) {
            let c = clip(t).unwrap();
            prop_assert_eq!(clip(c).unwrap(), c);
        }

        #[test]
        fn stop_is_odd(s0 in -1.0f64..=1.0, xs in inputs()) {
            let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
            let a = vals(stop_transduce(st(s0), &seq(&xs)));
            let b = vals(stop_transduce(st(-s0), &seq(&neg)));
            for (u, v) in a.iter().zip(&b) {
                prop_assert_eq!(*u, -*v);
            }
        }

        #[test]
        fn play_plus_stop_is_input(s0 in -1.0f64..=1.0, xs in inputs()) {
            let xs = seq(&xs);
            let stops = stop_transduce(st(s0), &xs);
            let plays = play_transduce(st(s0), &xs);
            for ((s, p), x) in stops.iter().zip(&plays).zip(&xs.values()[1..]) {
                prop_assert!((x - p - s.value()).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn play_sticks_while_interior(s0 in -0.5f64..0.5, steps in prop::collection::vec(-0.01f64..0.01, 1..40)) {
            // cumulative increments stay below 0.4, so the state never saturates
            let mut xs = vec![0.0];
            for d in steps {
                xs.push(xs.last().unwrap() + d);
            }
            let plays = play_transduce(st(s0), &seq(&xs));
            for p in &plays {
                prop_assert!((p + s0).abs() <= 1e-12);
            }
        }
    }
}
