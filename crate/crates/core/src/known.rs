//! Closed-form saddle data for the two reference walks.

use crate::walk::{Step, WalkModel};

/// Walks whose rate function is known in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnownWalk {
    /// Steps `(1,0)`, `(0,1)`, unit weights.
    UnitSteps,
    /// Steps `(1,1)`, `(1,-1)` with unit weight and `(2,0)` with weight `w`.
    Schroder { w: f64 },
}

impl KnownWalk {
    pub fn identify(model: &WalkModel) -> Option<Self> {
        let mut pairs: Vec<(Step, f64)> = model
            .steps()
            .iter()
            .copied()
            .zip(model.weights().iter().copied())
            .collect();
        pairs.sort_by_key(|p| p.0);
        let steps: Vec<(i64, i64)> = pairs.iter().map(|(s, _)| (s.u, s.v)).collect();
        let w: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        match steps.as_slice() {
            [(0, 1), (1, 0)] if w == [1.0, 1.0] => Some(KnownWalk::UnitSteps),
            [(1, -1), (1, 1), (2, 0)] if w[0] == 1.0 && w[1] == 1.0 => {
                Some(KnownWalk::Schroder { w: w[2] })
            }
            _ => None,
        }
    }

    /// `(x(t), y(t))`.
    pub fn saddle(&self, t: f64) -> (f64, f64) {
        match *self {
            KnownWalk::UnitSteps => (1.0 / (1.0 + t), t / (1.0 + t)),
            KnownWalk::Schroder { w } => {
                let (r, s, c) = schroder_roots(w, t);
                ((r - s) / (w * c), (t * r + s) / c)
            }
        }
    }

    pub fn lagrangean(&self, t: f64) -> f64 {
        match *self {
            KnownWalk::UnitSteps => {
                let tail = if t == 0.0 { 0.0 } else { t * t.ln() };
                (1.0 + t) * (1.0 + t).ln() - tail
            }
            KnownWalk::Schroder { w } => {
                let (r, s, c) = schroder_roots(w, t);
                ((s + r) / c).ln() + t * ((s - r * t) / c).ln()
            }
        }
    }

    /// Prefactor `N(t)` of the asymptotic path count.
    pub fn prefactor(&self, t: f64) -> f64 {
        match *self {
            KnownWalk::UnitSteps => (1.0 + t) / t,
            KnownWalk::Schroder { w } => {
                let (r, s, _) = schroder_roots(w, t);
                (r + s).powi(2) / (r * s * (1.0 - t * t))
            }
        }
    }
}

/// `(√(1+w), √(1+w t²), √(1−t²))`.
fn schroder_roots(w: f64, t: f64) -> (f64, f64, f64) {
    ((1.0 + w).sqrt(), (1.0 + w * t * t).sqrt(), (1.0 - t * t).sqrt())
}
