//! Free trajectories of the q-weighted action.
//!
//! Along a maximizer `−L'(h')` is the log-height `η` of the saddle point, so
//! the Euler–Lagrange equation makes `η` linear in `x`:
//! `η(x) = η₀ − λ(x − x₀)`. Since `dξ/dη = −t` on the kernel curve,
//! `h(x) = y₀ + (ξ(η(x)) − ξ(η₀))/λ`.

use std::sync::Arc;

use crate::lagrangean::Kernel;
use crate::walk::WalkModel;

use super::VariationalError;

/// Below this `|λ|` trajectories are treated as straight lines.
pub(crate) const FLAT: f64 = 1e-12;

/// Evaluates and shoots free trajectories for one walk and one `λ`.
#[derive(Debug, Clone)]
pub struct Geodesics {
    kernel: Arc<Kernel>,
    lambda: f64,
}

/// A free trajectory through `start`.
#[derive(Debug, Clone)]
pub struct Geodesic {
    kernel: Arc<Kernel>,
    pub lambda: f64,
    pub start: (f64, f64),
    /// Slope at `start`.
    pub slope0: f64,
    /// Saddle log-height at `start`; unused for straight lines.
    pub eta0: f64,
    xi0: f64,
}

impl Geodesics {
    pub fn new(model: &WalkModel, lambda: f64) -> Self {
        Geodesics {
            kernel: Arc::new(Kernel::new(model)),
            lambda,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_flat(&self) -> bool {
        self.lambda.abs() < FLAT
    }

    pub fn support(&self) -> (f64, f64) {
        self.kernel.support()
    }

    fn line(&self, start: (f64, f64), slope: f64) -> Geodesic {
        Geodesic {
            kernel: self.kernel.clone(),
            lambda: 0.0,
            start,
            slope0: slope,
            eta0: f64::NAN,
            xi0: f64::NAN,
        }
    }

    fn curved(&self, start: (f64, f64), eta0: f64) -> Option<Geodesic> {
        let xi0 = self.kernel.xi_of_eta(eta0)?;
        let slope0 = self.kernel.moments(xi0, eta0).slope();
        Some(Geodesic {
            kernel: self.kernel.clone(),
            lambda: self.lambda,
            start,
            slope0,
            eta0,
            xi0,
        })
    }

    /// The free trajectory leaving `start` with the given slope.
    pub fn with_slope(&self, start: (f64, f64), slope: f64) -> Result<Geodesic, VariationalError> {
        let (t_min, t_max) = self.support();
        if self.is_flat() {
            let tol = 1e-12 * (1.0 + slope.abs());
            if slope < t_min - tol || slope > t_max + tol {
                return Err(VariationalError::SlopeOutOfSupport {
                    x: start.0,
                    slope,
                    t_min,
                    t_max,
                });
            }
            return Ok(self.line(start, slope));
        }
        let (_, eta0) = self.kernel.solve(slope)?;
        self.curved(start, eta0)
            .ok_or(VariationalError::SlopeOutOfSupport {
                x: start.0,
                slope,
                t_min,
                t_max,
            })
    }

    /// The free trajectory joining `start` to `end`.
    pub fn shoot(&self, start: (f64, f64), end: (f64, f64)) -> Result<Geodesic, VariationalError> {
        let no_geodesic = || VariationalError::NoAdmissibleGeodesic { start, end };
        let dx = end.0 - start.0;
        if !(dx > 0.0) {
            return Err(VariationalError::BadInput(format!(
                "end abscissa {} must exceed start abscissa {}",
                end.0, start.0
            )));
        }
        let rise = end.1 - start.1;
        if self.is_flat() {
            return self
                .with_slope(start, rise / dx)
                .map_err(|_| no_geodesic());
        }
        let lambda = self.lambda;
        let (eta_lo, eta_hi) = self.kernel.eta_domain();
        let lo_limit = eta_lo.max(eta_lo + lambda * dx);
        let hi_limit = eta_hi.min(eta_hi + lambda * dx);
        if !(lo_limit < hi_limit) {
            return Err(no_geodesic());
        }
        let kernel = &self.kernel;
        // rise as a function of η₀ is increasing
        let gap = |eta0: f64| -> Option<f64> {
            let a = kernel.xi_of_eta(eta0)?;
            let b = kernel.xi_of_eta(eta0 - lambda * dx)?;
            Some((b - a) / lambda - rise)
        };
        let (mut a, mut b) = match (lo_limit.is_finite(), hi_limit.is_finite()) {
            (true, true) => (lo_limit, hi_limit),
            (lo_fin, hi_fin) => {
                let anchor = if lo_fin {
                    lo_limit + 1.0
                } else if hi_fin {
                    hi_limit - 1.0
                } else {
                    0.0
                };
                let mut a = if lo_fin { lo_limit } else { anchor };
                let mut b = if hi_fin { hi_limit } else { anchor };
                let mut width = 1.0;
                while !lo_fin && gap(a).map_or(true, |g| g > 0.0) {
                    a -= width;
                    width *= 2.0;
                    if width > 1e7 {
                        return Err(no_geodesic());
                    }
                }
                width = 1.0;
                while !hi_fin && gap(b).map_or(true, |g| g < 0.0) {
                    b += width;
                    width *= 2.0;
                    if width > 1e7 {
                        return Err(no_geodesic());
                    }
                }
                (a, b)
            }
        };
        let mut best: Option<(f64, f64)> = None;
        for _ in 0..400 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let Some(g) = gap(m) else {
                // only the open ends can fail; move away from the failing side
                if (m - lo_limit).abs() < (m - hi_limit).abs() {
                    a = m;
                } else {
                    b = m;
                }
                continue;
            };
            if best.map_or(true, |(_, bg)| g.abs() < bg.abs()) {
                best = Some((m, g));
            }
            if g == 0.0 {
                break;
            }
            if g < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        match best {
            Some((eta0, g)) if g.abs() <= 1e-10 * (1.0 + rise.abs() + dx) => {
                self.curved(start, eta0).ok_or_else(no_geodesic)
            }
            _ => Err(no_geodesic()),
        }
    }
}

impl Geodesic {
    /// Saddle log-height at `x`.
    pub fn eta_at(&self, x: f64) -> f64 {
        self.eta0 - self.lambda * (x - self.start.0)
    }

    pub fn is_flat(&self) -> bool {
        self.lambda.abs() < FLAT
    }

    pub fn height(&self, x: f64) -> Option<f64> {
        if self.is_flat() {
            return Some(self.start.1 + self.slope0 * (x - self.start.0));
        }
        let xi = self.kernel.xi_of_eta(self.eta_at(x))?;
        Some(self.start.1 + (xi - self.xi0) / self.lambda)
    }

    pub fn slope(&self, x: f64) -> Option<f64> {
        if self.is_flat() {
            return Some(self.slope0);
        }
        let eta = self.eta_at(x);
        let xi = self.kernel.xi_of_eta(eta)?;
        Some(self.kernel.moments(xi, eta).slope())
    }

    /// Which edge of the admissible log-height range the trajectory has run
    /// into at `x`: `1` for the steep edge, `-1` for the shallow one.
    pub(crate) fn escape_direction(&self, x: f64) -> i32 {
        let (lo, hi) = self.kernel.eta_domain();
        let eta = self.eta_at(x);
        if eta >= hi {
            1
        } else if eta <= lo {
            -1
        } else {
            0
        }
    }
}
