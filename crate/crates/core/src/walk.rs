//! Directed walks: step sets, weights, the directedness certificate and
//! lattice reachability.

use std::f64::consts::PI;
use std::fmt;

use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};
use thiserror::Error;

use crate::lattice::{forward_sweep, BoolRing, Keep, Unconstrained};

/// Number of angles sampled when searching for the separating direction.
const ANGLE_SCAN: usize = 4096;

/// An elementary step `(u, v)` of a walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub u: i64,
    pub v: i64,
}

impl Step {
    pub const fn new(u: i64, v: i64) -> Self {
        Step { u, v }
    }

    fn dot(&self, d: [f64; 2]) -> f64 {
        self.u as f64 * d[0] + self.v as f64 * d[1]
    }
}

impl From<(i64, i64)> for Step {
    fn from((u, v): (i64, i64)) -> Self {
        Step { u, v }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.u, self.v)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("step list is empty")]
    Empty,
    #[error("{steps} steps but {weights} weights")]
    LengthMismatch { steps: usize, weights: usize },
    #[error("a walk needs at least two steps, got {0}")]
    TooFewSteps(usize),
    #[error("weight {weight} of step #{index} is not strictly positive")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("step #{index} {step} has a negative horizontal component")]
    NegativeHorizontalStep { index: usize, step: Step },
    #[error("step {step} appears twice (#{first} and #{second})")]
    DuplicateStep {
        step: Step,
        first: usize,
        second: usize,
    },
    #[error("the origin lies in the convex hull of the steps; the walk is not directed")]
    OriginInHull,
    #[error("all steps are collinear")]
    CollinearSteps,
}

/// Witness that a step set is directed, together with its slope support.
///
/// `direction` is a unit vector with `s·direction >= margin > 0` for every
/// step; `t_min`/`t_max` are the extreme step slopes (infinite when a
/// vertical step of the matching sign exists).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectednessCertificate {
    pub direction: [f64; 2],
    pub margin: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl DirectednessCertificate {
    /// Whether `t` lies strictly inside the slope support.
    pub fn is_interior(&self, t: f64) -> bool {
        t.is_finite() && t > self.t_min && t < self.t_max
    }
}

/// Checks every walk invariant and returns the directedness certificate.
pub fn validate(steps: &[Step], weights: &[f64]) -> Result<DirectednessCertificate, WalkError> {
    if steps.is_empty() {
        return Err(WalkError::Empty);
    }
    if steps.len() != weights.len() {
        return Err(WalkError::LengthMismatch {
            steps: steps.len(),
            weights: weights.len(),
        });
    }
    if steps.len() < 2 {
        return Err(WalkError::TooFewSteps(steps.len()));
    }
    for (index, &weight) in weights.iter().enumerate() {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(WalkError::NonPositiveWeight { index, weight });
        }
    }
    for (index, &step) in steps.iter().enumerate() {
        if step.u < 0 {
            return Err(WalkError::NegativeHorizontalStep { index, step });
        }
    }
    for i in 0..steps.len() {
        for j in i + 1..steps.len() {
            if steps[i] == steps[j] {
                return Err(WalkError::DuplicateStep {
                    step: steps[i],
                    first: i,
                    second: j,
                });
            }
        }
    }

    let (direction, margin) = separating_direction(steps);
    let scale = steps
        .iter()
        .map(|s| ((s.u * s.u + s.v * s.v) as f64).sqrt())
        .fold(0.0, f64::max);
    if !(margin > 1e-12 * scale.max(1.0)) {
        return Err(WalkError::OriginInHull);
    }

    let s0 = steps[0];
    if steps.iter().all(|s| s0.u * s.v - s0.v * s.u == 0) {
        return Err(WalkError::CollinearSteps);
    }

    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    for s in steps {
        if s.u > 0 {
            let slope = s.v as f64 / s.u as f64;
            t_min = t_min.min(slope);
            t_max = t_max.max(slope);
        } else if s.v > 0 {
            t_max = f64::INFINITY;
        } else {
            t_min = f64::NEG_INFINITY;
        }
    }

    Ok(DirectednessCertificate {
        direction,
        margin,
        t_min,
        t_max,
    })
}

/// Maximizes `min_i s_i·d` over unit vectors `d`: coarse angle scan, then
/// golden-section refinement inside the best cell.
fn separating_direction(steps: &[Step]) -> ([f64; 2], f64) {
    let objective = |theta: f64| {
        let d = [theta.cos(), theta.sin()];
        steps.iter().map(|s| s.dot(d)).fold(f64::INFINITY, f64::min)
    };

    let cell = 2.0 * PI / ANGLE_SCAN as f64;
    let (mut best_theta, mut best) = (0.0, f64::NEG_INFINITY);
    for i in 0..ANGLE_SCAN {
        let theta = -PI + i as f64 * cell;
        let value = objective(theta);
        if value > best {
            best = value;
            best_theta = theta;
        }
    }

    // min of cosines is unimodal on a cell around the maximum
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_theta - cell, best_theta + cell);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    let refined = 0.5 * (a + b);
    let value = objective(refined);
    if value >= best {
        best = value;
        best_theta = refined;
    }
    ([best_theta.cos(), best_theta.sin()], best)
}

/// A validated directed walk. Immutable once built.
#[derive(Debug, Clone)]
pub struct WalkModel {
    steps: Vec<Step>,
    weights: Vec<f64>,
    exact_weights: Vec<BigRational>,
    certificate: DirectednessCertificate,
}

impl PartialEq for WalkModel {
    fn eq(&self, other: &Self) -> bool {
        self.steps == other.steps && self.exact_weights == other.exact_weights
    }
}

impl WalkModel {
    /// Builds a model from floating weights; the exact weights are the
    /// binary values of the floats.
    pub fn new<S: Into<Step>>(
        steps: impl IntoIterator<Item = S>,
        weights: Vec<f64>,
    ) -> Result<Self, WalkError> {
        let steps: Vec<Step> = steps.into_iter().map(Into::into).collect();
        let certificate = validate(&steps, &weights)?;
        let exact_weights = weights
            .iter()
            .map(|&w| BigRational::from_f64(w).expect("validated weights are finite"))
            .collect();
        Ok(WalkModel {
            steps,
            weights,
            exact_weights,
            certificate,
        })
    }

    /// Builds a model from exact rational weights.
    pub fn with_exact_weights<S: Into<Step>>(
        steps: impl IntoIterator<Item = S>,
        exact_weights: Vec<BigRational>,
    ) -> Result<Self, WalkError> {
        let steps: Vec<Step> = steps.into_iter().map(Into::into).collect();
        let weights: Vec<f64> = exact_weights
            .iter()
            .map(|w| w.to_f64().unwrap_or(f64::NAN))
            .collect();
        let certificate = validate(&steps, &weights)?;
        Ok(WalkModel {
            steps,
            weights,
            exact_weights,
            certificate,
        })
    }

    /// Steps `(1,0)` and `(0,1)` with unit weights.
    pub fn unit_steps() -> Self {
        WalkModel::new([(1, 0), (0, 1)], vec![1.0, 1.0]).expect("valid walk")
    }

    /// Schröder steps `(1,1)`, `(1,-1)`, `(2,0)`; the horizontal step has weight `w`.
    pub fn schroder(w: f64) -> Result<Self, WalkError> {
        WalkModel::new([(1, 1), (1, -1), (2, 0)], vec![1.0, 1.0, w])
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact_weights(&self) -> &[BigRational] {
        &self.exact_weights
    }

    pub fn certificate(&self) -> &DirectednessCertificate {
        &self.certificate
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.certificate.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.certificate.t_max
    }

    pub fn max_u(&self) -> i64 {
        self.steps.iter().map(|s| s.u).max().unwrap_or(0)
    }

    /// Step with the smallest slope among steps with `u > 0`, if `t_min` is finite.
    pub(crate) fn min_slope_step(&self) -> Option<Step> {
        if !self.certificate.t_min.is_finite() {
            return None;
        }
        self.steps
            .iter()
            .filter(|s| s.u > 0)
            .copied()
            .min_by(|a, b| (a.v * b.u).cmp(&(b.v * a.u)))
    }

    pub(crate) fn max_slope_step(&self) -> Option<Step> {
        if !self.certificate.t_max.is_finite() {
            return None;
        }
        self.steps
            .iter()
            .filter(|s| s.u > 0)
            .copied()
            .max_by(|a, b| (a.v * b.u).cmp(&(b.v * a.u)))
    }

    /// Sign of the vertical steps (`u = 0`): `1` upward, `-1` downward, `0` none.
    pub(crate) fn vertical_sign(&self) -> i64 {
        self.steps
            .iter()
            .find(|s| s.u == 0)
            .map(|s| s.v.signum())
            .unwrap_or(0)
    }

    /// Whether `(r, s)` is a nonnegative-integer combination of the steps.
    pub fn reachable(&self, target: (i64, i64)) -> bool {
        self.reachable_from((0, 0), target)
    }

    pub fn reachable_from(&self, start: (i64, i64), target: (i64, i64)) -> bool {
        if target.0 < start.0 {
            return false;
        }
        let result = forward_sweep(
            self,
            start,
            target,
            &Unconstrained,
            &BoolRing,
            |_, _| true,
            Keep::Window,
        );
        result.target_value
    }
}

impl fmt::Display for WalkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .steps
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| format!("[{},{},{}]", s.u, s.v, w))
            .collect();
        write!(f, "steps=[{}]", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steps(list: &[(i64, i64)]) -> Vec<Step> {
        list.iter().map(|&s| s.into()).collect()
    }

    #[test]
    fn unit_steps_certificate() {
        let cert = validate(&steps(&[(1, 0), (0, 1)]), &[1.0, 1.0]).unwrap();
        let diag = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cert.direction[0] - diag).abs() < 1e-9);
        assert!((cert.direction[1] - diag).abs() < 1e-9);
        assert!((cert.margin - diag).abs() < 1e-12);
        assert_eq!(cert.t_min, 0.0);
        assert_eq!(cert.t_max, f64::INFINITY);
    }

    #[test]
    fn opposite_vertical_steps_are_not_directed() {
        let err = validate(&steps(&[(0, 1), (0, -1)]), &[1.0, 1.0]).unwrap_err();
        assert_eq!(err, WalkError::OriginInHull);
    }

    #[test]
    fn schroder_support() {
        let cert = validate(&steps(&[(1, 1), (1, -1), (2, 0)]), &[1.0, 1.0, 0.5]).unwrap();
        assert_eq!(cert.t_min, -1.0);
        assert_eq!(cert.t_max, 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(validate(&[], &[]).unwrap_err(), WalkError::Empty);
        assert!(matches!(
            validate(&steps(&[(1, 0), (0, 1)]), &[1.0]),
            Err(WalkError::LengthMismatch { .. })
        ));
        assert!(matches!(
            validate(&steps(&[(1, 0)]), &[1.0]),
            Err(WalkError::TooFewSteps(1))
        ));
        assert!(matches!(
            validate(&steps(&[(1, 0), (0, 1)]), &[1.0, 0.0]),
            Err(WalkError::NonPositiveWeight { index: 1, .. })
        ));
        assert!(matches!(
            validate(&steps(&[(1, 0), (-1, 1)]), &[1.0, 1.0]),
            Err(WalkError::NegativeHorizontalStep { index: 1, .. })
        ));
        assert!(matches!(
            validate(&steps(&[(1, 0), (1, 0)]), &[1.0, 2.0]),
            Err(WalkError::DuplicateStep { .. })
        ));
        assert_eq!(
            validate(&steps(&[(1, 1), (2, 2)]), &[1.0, 1.0]).unwrap_err(),
            WalkError::CollinearSteps
        );
        assert_eq!(
            validate(&steps(&[(0, 0), (1, 1)]), &[1.0, 1.0]).unwrap_err(),
            WalkError::OriginInHull
        );
    }

    #[test]
    fn downward_vertical_step_gives_infinite_t_min() {
        let cert = validate(&steps(&[(1, 0), (0, -1)]), &[1.0, 1.0]).unwrap();
        assert_eq!(cert.t_min, f64::NEG_INFINITY);
        assert_eq!(cert.t_max, 0.0);
    }

    #[test]
    fn reachability_examples() {
        let schroder = WalkModel::schroder(1.0).unwrap();
        assert!(!schroder.reachable((3, 0)));
        assert!(schroder.reachable((4, 0)));
        let unit = WalkModel::unit_steps();
        assert!(unit.reachable((0, 0)));
        assert!(unit.reachable((2, 3)));
        assert!(!unit.reachable((2, -1)));
        assert!(!unit.reachable((-1, 0)));
    }
}
