//! Saddle-point system, the rate function `L(t)` and its derivatives.
//!
//! Everything is solved in logarithmic coordinates `ξ = log x`, `η = log y`.
//! For fixed `η` the kernel equation `P = 1` has a unique root `ξ(η)`, and
//! along that curve the slope `E[v]/E[u]` under the step law
//! `p_i ∝ w_i x^{u_i} y^{v_i}` is strictly increasing in `η`.

use rayon::prelude::*;
use thiserror::Error;

use crate::enumerate::{count_between, Mode, QWeight};
use crate::lattice::{log_sum_exp, Unconstrained};
use crate::walk::WalkModel;

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LagrangeanError {
    #[error("slope {t} is outside the open support ({t_min}, {t_max})")]
    SlopeOutOfSupport { t: f64, t_min: f64, t_max: f64 },
    #[error(
        "saddle solver did not converge at t={t}: last iterate x={x}, y={y}, residuals {residual_p:e}, {residual_b:e}"
    )]
    NoConvergence {
        t: f64,
        x: f64,
        y: f64,
        residual_p: f64,
        residual_b: f64,
    },
    #[error("concavity certificate failed at t={t}: {reason}")]
    CertificateFailed { t: f64, reason: String },
    #[error("target ({0}, {1}) is not reachable")]
    UnreachableTarget(i64, i64),
    #[error("slope grid must be nonempty and strictly increasing")]
    BadGrid,
}

/// Log-coordinate view of the step polynomial `P(x,y) = Σ w_i x^{u_i} y^{v_i}`.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    u: Vec<f64>,
    v: Vec<f64>,
    log_w: Vec<f64>,
    eta_lo: f64,
    eta_hi: f64,
    t_min: f64,
    t_max: f64,
}

/// Step-law moments at a point of the kernel curve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments {
    pub eu: f64,
    pub ev: f64,
    pub euu: f64,
    pub evv: f64,
    pub euv: f64,
}

impl Moments {
    pub fn slope(&self) -> f64 {
        self.ev / self.eu
    }

    /// `E[(v − t u)²]`.
    pub fn spread(&self, t: f64) -> f64 {
        (self.evv - 2.0 * t * self.euv + t * t * self.euu).max(0.0)
    }
}

impl Kernel {
    pub fn new(model: &WalkModel) -> Self {
        let u: Vec<f64> = model.steps().iter().map(|s| s.u as f64).collect();
        let v: Vec<f64> = model.steps().iter().map(|s| s.v as f64).collect();
        let log_w: Vec<f64> = model.weights().iter().map(|w| w.ln()).collect();
        let mut kernel = Kernel {
            u,
            v,
            log_w,
            eta_lo: f64::NEG_INFINITY,
            eta_hi: f64::INFINITY,
            t_min: model.t_min(),
            t_max: model.t_max(),
        };
        match model.vertical_sign() {
            1 => kernel.eta_hi = kernel.vertical_root(),
            -1 => kernel.eta_lo = kernel.vertical_root(),
            _ => {}
        }
        kernel
    }

    pub fn eta_domain(&self) -> (f64, f64) {
        (self.eta_lo, self.eta_hi)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    fn vertical_log_p(&self, eta: f64) -> (f64, f64) {
        let terms: Vec<f64> = (0..self.u.len())
            .filter(|&i| self.u[i] == 0.0)
            .map(|i| self.log_w[i] + self.v[i] * eta)
            .collect();
        let lp = log_sum_exp(&terms);
        let slope = (0..self.u.len())
            .filter(|&i| self.u[i] == 0.0)
            .map(|i| self.v[i] * (self.log_w[i] + self.v[i] * eta - lp).exp())
            .sum();
        (lp, slope)
    }

    /// Root of `Σ_{u=0} w e^{vη} = 1`: the edge of the admissible `η` range.
    fn vertical_root(&self) -> f64 {
        // a single vertical term equals one at -log w / v, so the sum is >= 1
        // there and Newton on the convex log-sum moves monotonically to the root
        let upward = (0..self.u.len()).any(|i| self.u[i] == 0.0 && self.v[i] > 0.0);
        let mut eta = (0..self.u.len())
            .filter(|&i| self.u[i] == 0.0)
            .map(|i| -self.log_w[i] / self.v[i])
            .fold(if upward { f64::INFINITY } else { f64::NEG_INFINITY }, |acc, e| {
                if upward {
                    acc.min(e)
                } else {
                    acc.max(e)
                }
            });
        for _ in 0..MAX_ITERATIONS {
            let (lp, slope) = self.vertical_log_p(eta);
            if lp == 0.0 {
                break;
            }
            let next = eta - lp / slope;
            if (next - eta).abs() <= 1e-16 * (1.0 + eta.abs()) {
                return next;
            }
            eta = next;
        }
        eta
    }

    fn exponents(&self, xi: f64, eta: f64, out: &mut [f64]) {
        for i in 0..self.u.len() {
            out[i] = self.log_w[i] + self.u[i] * xi + self.v[i] * eta;
        }
    }

    /// Unique `ξ` with `P(e^ξ, e^η) = 1`, if `η` is admissible.
    pub fn xi_of_eta(&self, eta: f64) -> Option<f64> {
        if !(eta > self.eta_lo && eta < self.eta_hi) || !eta.is_finite() {
            return None;
        }
        let k = self.u.len();
        let mut a = vec![0.0; k];
        // start right of the root: some single term already equals one
        let mut xi = (0..k)
            .filter(|&i| self.u[i] > 0.0)
            .map(|i| (-self.log_w[i] - self.v[i] * eta) / self.u[i])
            .fold(f64::INFINITY, f64::min);
        for _ in 0..MAX_ITERATIONS {
            self.exponents(xi, eta, &mut a);
            let lp = log_sum_exp(&a);
            if lp.abs() <= 1e-15 {
                return Some(xi);
            }
            let eu: f64 = (0..k).map(|i| self.u[i] * (a[i] - lp).exp()).sum();
            if !(eu > 0.0) {
                return None;
            }
            let next = xi - lp / eu;
            if (next - xi).abs() <= 1e-16 * (1.0 + xi.abs()) {
                return Some(next);
            }
            xi = next;
        }
        Some(xi)
    }

    pub fn moments(&self, xi: f64, eta: f64) -> Moments {
        let k = self.u.len();
        let mut a = vec![0.0; k];
        self.exponents(xi, eta, &mut a);
        let lp = log_sum_exp(&a);
        let mut m = Moments {
            eu: 0.0,
            ev: 0.0,
            euu: 0.0,
            evv: 0.0,
            euv: 0.0,
        };
        for i in 0..k {
            let p = (a[i] - lp).exp();
            let (u, v) = (self.u[i], self.v[i]);
            m.eu += p * u;
            m.ev += p * v;
            m.euu += p * u * u;
            m.evv += p * v * v;
            m.euv += p * u * v;
        }
        m
    }

    /// Solves for `(ξ, η)` with slope `t`.
    pub fn solve(&self, t: f64) -> Result<(f64, f64), LagrangeanError> {
        if !(t > self.t_min && t < self.t_max) || !t.is_finite() {
            return Err(LagrangeanError::SlopeOutOfSupport {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            });
        }
        let fail = |eta: f64, xi: f64| {
            let (residual_p, residual_b) = self.residuals(t, xi, eta);
            LagrangeanError::NoConvergence {
                t,
                x: xi.exp(),
                y: eta.exp(),
                residual_p,
                residual_b,
            }
        };
        let eval = |eta: f64| -> Option<(f64, f64, Moments)> {
            let xi = self.xi_of_eta(eta)?;
            let m = self.moments(xi, eta);
            Some((xi, m.slope() - t, m))
        };

        let start = match (self.eta_lo.is_finite(), self.eta_hi.is_finite()) {
            (false, false) => 0.0,
            (_, true) => self.eta_hi - 1.0,
            (true, false) => self.eta_lo + 1.0,
        };
        let Some((_, g0, _)) = eval(start) else {
            return Err(fail(start, f64::NAN));
        };
        // bracket [lo, hi] with g(lo) < 0 < g(hi)
        let (mut lo, mut hi) = (start, start);
        let mut width = 1.0;
        let mut bracketed = g0 == 0.0;
        for _ in 0..200 {
            if bracketed {
                break;
            }
            let probe = if g0 < 0.0 {
                if self.eta_hi.is_finite() {
                    0.5 * (lo + self.eta_hi)
                } else {
                    lo + width
                }
            } else if self.eta_lo.is_finite() {
                0.5 * (hi + self.eta_lo)
            } else {
                hi - width
            };
            width *= 2.0;
            let Some((_, g, _)) = eval(probe) else {
                return Err(fail(probe, f64::NAN));
            };
            match (g0 < 0.0, g < 0.0) {
                (true, true) => lo = probe,
                (true, false) => {
                    hi = probe;
                    bracketed = true;
                }
                (false, false) => hi = probe,
                (false, true) => {
                    lo = probe;
                    bracketed = true;
                }
            }
        }
        if !bracketed {
            return Err(fail(lo, self.xi_of_eta(lo).unwrap_or(f64::NAN)));
        }

        // safeguarded Newton inside [lo, hi]
        let mut eta = 0.5 * (lo + hi);
        let tol = 1e-15 * (1.0 + t.abs());
        let mut last = (f64::NAN, eta);
        for _ in 0..MAX_ITERATIONS {
            let Some((xi, g, m)) = eval(eta) else {
                return Err(fail(eta, f64::NAN));
            };
            last = (xi, eta);
            if g.abs() <= tol {
                return Ok((xi, eta));
            }
            if g < 0.0 {
                lo = eta;
            } else {
                hi = eta;
            }
            if hi - lo <= 4.0 * f64::EPSILON * (1.0 + eta.abs()) {
                return Ok((xi, eta));
            }
            let dg = m.spread(m.slope()) / m.eu;
            let newton = eta - g / dg;
            eta = if dg > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let (xi, eta) = last;
        let (rp, rb) = self.residuals(t, xi, eta);
        if rp <= 1e-12 && rb <= 1e-12 {
            return Ok(last);
        }
        Err(fail(eta, xi))
    }

    /// `(|P − 1|, |t·x·P_x − y·P_y|)` relative to the size of the terms.
    pub fn residuals(&self, t: f64, xi: f64, eta: f64) -> (f64, f64) {
        let k = self.u.len();
        let mut a = vec![0.0; k];
        self.exponents(xi, eta, &mut a);
        let (mut p, mut b, mut scale) = (0.0, 0.0, 0.0);
        for i in 0..k {
            let term = a[i].exp();
            p += term;
            b += term * (t * self.u[i] - self.v[i]);
            scale += term * (t * self.u[i]).abs().max(self.v[i].abs());
        }
        ((p - 1.0).abs(), b.abs() / scale.max(f64::MIN_POSITIVE))
    }

    /// `−log x` along the extreme-slope steps when `t` sits on a finite
    /// support endpoint.
    fn endpoint_rate(&self, t: f64) -> Option<f64> {
        let on_edge: Vec<usize> = (0..self.u.len())
            .filter(|&i| self.u[i] > 0.0 && self.v[i] == t * self.u[i])
            .collect();
        if on_edge.is_empty() {
            return None;
        }
        let mut xi = on_edge
            .iter()
            .map(|&i| -self.log_w[i] / self.u[i])
            .fold(f64::INFINITY, f64::min);
        for _ in 0..MAX_ITERATIONS {
            let a: Vec<f64> = on_edge
                .iter()
                .map(|&i| self.log_w[i] + self.u[i] * xi)
                .collect();
            let lp = log_sum_exp(&a);
            let eu: f64 = on_edge
                .iter()
                .zip(&a)
                .map(|(&i, ai)| self.u[i] * (ai - lp).exp())
                .sum();
            let next = xi - lp / eu;
            if (next - xi).abs() <= 1e-16 * (1.0 + xi.abs()) {
                xi = next;
                break;
            }
            xi = next;
        }
        Some(-xi)
    }
}

/// Positive solution of the saddle system at slope `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub log_x: f64,
    pub log_y: f64,
    pub residual_p: f64,
    pub residual_b: f64,
}

pub fn solve_saddle(model: &WalkModel, t: f64) -> Result<SaddlePoint, LagrangeanError> {
    solve_with(&Kernel::new(model), t)
}

fn solve_with(kernel: &Kernel, t: f64) -> Result<SaddlePoint, LagrangeanError> {
    let (xi, eta) = kernel.solve(t)?;
    let (residual_p, residual_b) = kernel.residuals(t, xi, eta);
    Ok(SaddlePoint {
        t,
        x: xi.exp(),
        y: eta.exp(),
        log_x: xi,
        log_y: eta,
        residual_p,
        residual_b,
    })
}

/// `L(t) = −log x(t) − t·log y(t)`.
pub fn lagrangean(model: &WalkModel, t: f64) -> Result<f64, LagrangeanError> {
    let s = solve_saddle(model, t)?;
    Ok(-s.log_x - t * s.log_y)
}

/// Two-argument form `L(a, b) = a·L(b/a)`.
pub fn lagrangean_ab(model: &WalkModel, a: f64, b: f64) -> Result<f64, LagrangeanError> {
    Ok(a * lagrangean(model, b / a)?)
}

/// `L(t)` on the closed support: finite endpoints are evaluated as limits.
pub fn lagrangean_closed(model: &WalkModel, t: f64) -> Result<f64, LagrangeanError> {
    let kernel = Kernel::new(model);
    closed_rate(&kernel, t)
}

pub(crate) fn closed_rate(kernel: &Kernel, t: f64) -> Result<f64, LagrangeanError> {
    let (t_min, t_max) = kernel.support();
    let edge = |bound: f64| bound.is_finite() && (t - bound).abs() <= 1e-12 * (1.0 + bound.abs());
    if edge(t_min) {
        return kernel
            .endpoint_rate(t_min)
            .ok_or(LagrangeanError::SlopeOutOfSupport { t, t_min, t_max });
    }
    if edge(t_max) {
        return kernel
            .endpoint_rate(t_max)
            .ok_or(LagrangeanError::SlopeOutOfSupport { t, t_min, t_max });
    }
    let (xi, eta) = kernel.solve(t)?;
    Ok(-xi - t * eta)
}

/// `P` and its partial derivatives at a point.
#[derive(Debug, Clone, Copy)]
struct Partials {
    p_x: f64,
    p_y: f64,
    p_xx: f64,
    p_yy: f64,
    p_xy: f64,
}

fn partials(model: &WalkModel, x: f64, y: f64) -> Partials {
    let mut d = Partials {
        p_x: 0.0,
        p_y: 0.0,
        p_xx: 0.0,
        p_yy: 0.0,
        p_xy: 0.0,
    };
    for (s, &w) in model.steps().iter().zip(model.weights()) {
        let (u, v) = (s.u as f64, s.v as f64);
        let term = w * x.powf(u) * y.powf(v);
        d.p_x += u * term / x;
        d.p_y += v * term / y;
        d.p_xx += u * (u - 1.0) * term / (x * x);
        d.p_yy += v * (v - 1.0) * term / (y * y);
        d.p_xy += u * v * term / (x * y);
    }
    d
}

/// Denominator of `y'(t)` assembled from the second partials of `P`.
fn denominator(d: &Partials, t: f64, x: f64, y: f64) -> f64 {
    d.p_y + y * d.p_yy + (t * t * x / y) * (d.p_x + x * d.p_xx) - 2.0 * t * x * d.p_xy
}

/// `(L'(t), L''(t))`.
pub fn derivatives(model: &WalkModel, t: f64) -> Result<(f64, f64), LagrangeanError> {
    let s = solve_saddle(model, t)?;
    let d = partials(model, s.x, s.y);
    let y_prime = s.x * d.p_x / denominator(&d, t, s.x, s.y);
    Ok((-s.log_y, -y_prime / s.y))
}

/// Both sides of the identity expressing the `y'` denominator as a negative sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenominatorIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
}

pub fn denominator_identity_check(
    model: &WalkModel,
    t: f64,
) -> Result<DenominatorIdentity, LagrangeanError> {
    let s = solve_saddle(model, t)?;
    let d = partials(model, s.x, s.y);
    let lhs = -denominator(&d, t, s.x, s.y);
    let rhs = -model
        .steps()
        .iter()
        .zip(model.weights())
        .map(|(st, &w)| {
            let (u, v) = (st.u as f64, st.v as f64);
            w * (v - t * u).powi(2) * s.x.powf(u) * s.y.powf(v - 1.0)
        })
        .sum::<f64>();
    Ok(DenominatorIdentity {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).abs(),
    })
}

/// One row of a [`LagrangeanTable`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub l: f64,
    pub lp: f64,
    pub lpp: f64,
    pub nhat: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LagrangeanTable {
    pub rows: Vec<TableRow>,
}

impl LagrangeanTable {
    pub fn build(model: &WalkModel, grid: &[f64]) -> Result<Self, LagrangeanError> {
        check_grid(grid)?;
        let rows = grid
            .par_iter()
            .map(|&t| {
                let s = solve_saddle(model, t)?;
                let (lp, lpp) = derivatives(model, t)?;
                Ok(TableRow {
                    t,
                    x: s.x,
                    y: s.y,
                    l: -s.log_x - t * s.log_y,
                    lp,
                    lpp,
                    nhat: None,
                })
            })
            .collect::<Result<Vec<_>, LagrangeanError>>()?;
        Ok(LagrangeanTable { rows })
    }

    /// Fills `nhat` where `(n, n·t)` is a lattice target for the largest `n` in `n_list`.
    pub fn with_prefactors(mut self, model: &WalkModel, n_list: &[i64]) -> Self {
        let estimates: Vec<Option<f64>> = self
            .rows
            .par_iter()
            .map(|row| {
                prefactor_estimate(model, row.t, n_list)
                    .ok()
                    .map(|p| p.extrapolated)
            })
            .collect();
        for (row, est) in self.rows.iter_mut().zip(estimates) {
            row.nhat = est;
        }
        self
    }
}

fn check_grid(grid: &[f64]) -> Result<(), LagrangeanError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LagrangeanError::BadGrid);
    }
    Ok(())
}

/// Outcome of a concavity check over a slope grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityReport {
    pub nodes: usize,
    pub max_lpp: f64,
    pub min_y_increment: f64,
}

pub fn concavity_certificate(
    model: &WalkModel,
    grid: &[f64],
) -> Result<ConcavityReport, LagrangeanError> {
    let table = LagrangeanTable::build(model, grid)?;
    let mut report = ConcavityReport {
        nodes: table.rows.len(),
        max_lpp: f64::NEG_INFINITY,
        min_y_increment: f64::INFINITY,
    };
    for (i, row) in table.rows.iter().enumerate() {
        if !(row.lpp < 0.0) {
            return Err(LagrangeanError::CertificateFailed {
                t: row.t,
                reason: format!("L'' = {} is not negative", row.lpp),
            });
        }
        report.max_lpp = report.max_lpp.max(row.lpp);
        if i > 0 {
            let inc = row.y - table.rows[i - 1].y;
            if !(inc > 0.0) {
                return Err(LagrangeanError::CertificateFailed {
                    t: row.t,
                    reason: format!("y does not increase (increment {inc})"),
                });
            }
            report.min_y_increment = report.min_y_increment.min(inc);
        }
    }
    Ok(report)
}

/// Raw and extrapolated estimates of the prefactor `N(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorEstimate {
    pub raw: Vec<(i64, f64)>,
    pub extrapolated: f64,
}

/// `N̂_n = 2πn·(Z_{n,nt} e^{−nL(t)})²` from exact log-space counts, with a
/// first-order Richardson step in `1/n` over the two largest `n`.
pub fn prefactor_estimate(
    model: &WalkModel,
    t: f64,
    n_list: &[i64],
) -> Result<PrefactorEstimate, LagrangeanError> {
    let l = lagrangean(model, t)?;
    let mut raw = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let log_z = log_count_along(model, t, n)?;
        let n_f = n as f64;
        raw.push((n, 2.0 * std::f64::consts::PI * n_f * (2.0 * (log_z - n_f * l)).exp()));
    }
    raw.sort_by_key(|r| r.0);
    let extrapolated = match raw.as_slice() {
        [] => return Err(LagrangeanError::BadGrid),
        [only] => only.1,
        [.., (n1, v1), (n2, v2)] => {
            let (n1, n2) = (*n1 as f64, *n2 as f64);
            (n2 * v2 - n1 * v1) / (n2 - n1)
        }
    };
    Ok(PrefactorEstimate { raw, extrapolated })
}

/// `log Z_{n, n·t}`, requiring `n·t` to be an integer and the target reachable.
pub(crate) fn log_count_along(model: &WalkModel, t: f64, n: i64) -> Result<f64, LagrangeanError> {
    let s_real = n as f64 * t;
    let s = s_real.round();
    if (s_real - s).abs() > 1e-9 * (1.0 + s.abs()) {
        return Err(LagrangeanError::UnreachableTarget(n, s as i64));
    }
    let target = (n, s as i64);
    let value = count_between(
        model,
        (0, 0),
        target,
        &Unconstrained,
        &QWeight::one(),
        Mode::Log,
    )
    .map_err(|_| LagrangeanError::UnreachableTarget(target.0, target.1))?;
    if value.log_value == f64::NEG_INFINITY {
        return Err(LagrangeanError::UnreachableTarget(target.0, target.1));
    }
    Ok(value.log_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::known::KnownWalk;

    #[test]
    fn unit_steps_at_slope_one() {
        let model = WalkModel::unit_steps();
        let s = solve_saddle(&model, 1.0).unwrap();
        assert!((s.x - 0.5).abs() < 1e-14 && (s.y - 0.5).abs() < 1e-14);
        assert!(s.residual_p < 1e-12 && s.residual_b < 1e-12);
        assert!((lagrangean(&model, 1.0).unwrap() - 4f64.ln()).abs() < 1e-14);
        let (lp, lpp) = derivatives(&model, 1.0).unwrap();
        assert!((lp - 2f64.ln()).abs() < 1e-14);
        assert!((lpp + 0.5).abs() < 1e-12);
    }

    #[test]
    fn schroder_at_zero_slope() {
        let model = WalkModel::schroder(1.0).unwrap();
        let s = solve_saddle(&model, 0.0).unwrap();
        assert!((s.x - (2f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!((s.y - 1.0).abs() < 1e-14);
        let l = lagrangean(&model, 0.0).unwrap();
        assert!((l - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-14);
    }

    #[test]
    fn support_endpoints_are_rejected() {
        let model = WalkModel::unit_steps();
        assert!(matches!(
            solve_saddle(&model, 0.0),
            Err(LagrangeanError::SlopeOutOfSupport { .. })
        ));
        let schroder = WalkModel::schroder(1.0).unwrap();
        assert!(solve_saddle(&schroder, 1.0).is_err());
        assert!(solve_saddle(&schroder, f64::NAN).is_err());
    }

    #[test]
    fn closed_endpoints() {
        let model = WalkModel::unit_steps();
        assert_eq!(lagrangean_closed(&model, 0.0).unwrap(), 0.0);
        let schroder = WalkModel::schroder(1.0).unwrap();
        assert!(lagrangean_closed(&schroder, 1.0).unwrap().abs() < 1e-15);
        let weighted = WalkModel::new([(1, 1), (1, -1), (2, 0)], vec![2.0, 1.0, 1.0]).unwrap();
        let edge = lagrangean_closed(&weighted, 1.0).unwrap();
        assert!((edge - 2f64.ln()).abs() < 1e-14);
        let near = lagrangean(&weighted, 1.0 - 1e-9).unwrap();
        assert!((near - edge).abs() < 1e-6);
    }

    #[test]
    fn denominator_identity_unit_steps() {
        let check = denominator_identity_check(&WalkModel::unit_steps(), 1.0).unwrap();
        assert!((check.rhs + 2.0).abs() < 1e-12);
        assert!(check.abs_diff < 1e-12);
    }

    #[test]
    fn lpp_matches_step_law_variance() {
        let model = WalkModel::new([(1, 0), (0, 1), (1, 2)], vec![0.5, 1.5, 0.25]).unwrap();
        let kernel = Kernel::new(&model);
        for &t in &[0.1, 1.0, 3.0, 30.0] {
            let (xi, eta) = kernel.solve(t).unwrap();
            let m = kernel.moments(xi, eta);
            let (_, lpp) = derivatives(&model, t).unwrap();
            let expected = -m.eu / m.spread(t);
            assert!((lpp - expected).abs() < 1e-9 * expected.abs());
        }
    }

    #[test]
    fn vertical_edge_of_eta_range() {
        let model = WalkModel::new([(1, 0), (0, 1), (0, 2)], vec![1.0, 0.5, 0.25]).unwrap();
        let kernel = Kernel::new(&model);
        let (_, hi) = kernel.eta_domain();
        let p0 = 0.5 * hi.exp() + 0.25 * (2.0 * hi).exp();
        assert!((p0 - 1.0).abs() < 1e-14);
        let down = WalkModel::new([(1, 0), (0, -1)], vec![1.0, 0.5]).unwrap();
        let (lo, _) = Kernel::new(&down).eta_domain();
        assert!((lo - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn matches_unit_step_closed_form() {
        let model = WalkModel::unit_steps();
        let known = KnownWalk::UnitSteps;
        for i in 0..50 {
            let t = 0.05 + i as f64 * 0.4;
            let l = lagrangean(&model, t).unwrap();
            assert!((l - known.lagrangean(t)).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn table_rejects_unsorted_grid() {
        let model = WalkModel::unit_steps();
        assert_eq!(
            LagrangeanTable::build(&model, &[1.0, 0.5]).unwrap_err(),
            LagrangeanError::BadGrid
        );
    }
}
