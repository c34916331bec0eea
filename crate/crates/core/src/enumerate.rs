//! Exact and log-space partition functions, optionally constrained by a site
//! mask and weighted by `q` to the power of the area under the path.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::exact::{half_power, rational_to_f64, QuadraticSurd};
use crate::known::KnownWalk;
use crate::lagrangean::{lagrangean, log_count_along, prefactor_estimate, LagrangeanError};
use crate::lattice::{
    forward_sweep, Column, Keep, LogRing, RationalRing, SiteMask, SurdRing, Sweep, Unconstrained,
};
use crate::walk::{Step, WalkModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnumError {
    #[error("site ({0}, {1}) lies outside the domain mask")]
    DomainMaskMismatch(i64, i64),
    #[error("exact mode needs a rational q")]
    ExactModeUnavailable,
    #[error("q must be a positive finite number, got {0}")]
    InvalidQ(f64),
    #[error("target ({0}, {1}) is not reachable")]
    UnreachableTarget(i64, i64),
    #[error(transparent)]
    Lagrangean(#[from] LagrangeanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Log,
}

/// Area weight `q`, optionally with an exact rational value.
#[derive(Debug, Clone, PartialEq)]
pub struct QWeight {
    value: f64,
    exact: Option<BigRational>,
}

impl QWeight {
    pub fn one() -> Self {
        QWeight {
            value: 1.0,
            exact: Some(BigRational::one()),
        }
    }

    pub fn rational(q: BigRational) -> Self {
        QWeight {
            value: rational_to_f64(&q),
            exact: Some(q),
        }
    }

    /// A floating `q`; exact enumeration is unavailable for it.
    pub fn float(q: f64) -> Self {
        QWeight { value: q, exact: None }
    }

    /// `q = base^(1/n)`, the scaling used for macroscopic area weights.
    pub fn scaled(base: f64, n: i64) -> Self {
        QWeight::float(base.powf(1.0 / n as f64))
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn is_one(&self) -> bool {
        self.value == 1.0
    }

    fn check(&self) -> Result<(), EnumError> {
        if self.value > 0.0 && self.value.is_finite() {
            Ok(())
        } else {
            Err(EnumError::InvalidQ(self.value))
        }
    }
}

/// A weighted path sum, exact when available, always with its natural log.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionValue {
    pub mode: Mode,
    pub exact: Option<QuadraticSurd>,
    pub log_value: f64,
}

impl PartitionValue {
    /// The exact value when it is rational.
    pub fn rational(&self) -> Option<&BigRational> {
        self.exact
            .as_ref()
            .filter(|e| e.is_rational())
            .map(|e| &e.rational)
    }

    pub fn is_zero(&self) -> bool {
        self.log_value == f64::NEG_INFINITY
    }
}

impl fmt::Display for PartitionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(e) => write!(f, "{e}"),
            None => write!(f, "exp({})", self.log_value),
        }
    }
}

/// A lattice path: a start site and a sequence of step indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticePath {
    pub start: (i64, i64),
    pub steps: Vec<u16>,
}

impl LatticePath {
    /// All visited sites including start and end.
    pub fn sites(&self, steps: &[Step]) -> Vec<(i64, i64)> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut p = self.start;
        out.push(p);
        for &i in &self.steps {
            let s = steps[i as usize];
            p = (p.0 + s.u, p.1 + s.v);
            out.push(p);
        }
        out
    }

    pub fn end(&self, steps: &[Step]) -> (i64, i64) {
        self.steps.iter().fold(self.start, |p, &i| {
            let s = steps[i as usize];
            (p.0 + s.u, p.1 + s.v)
        })
    }

    /// Twice the signed area between the path and the horizontal axis.
    pub fn double_area(&self, steps: &[Step]) -> i64 {
        let mut y = self.start.1;
        let mut twice = 0;
        for &i in &self.steps {
            let s = steps[i as usize];
            twice += s.u * (2 * y + s.v);
            y += s.v;
        }
        twice
    }

    /// Natural log of the path weight `Π w_i · q^{area}`.
    pub fn log_weight(&self, model: &WalkModel, q: f64) -> f64 {
        let lw: f64 = self
            .steps
            .iter()
            .map(|&i| model.weights()[i as usize].ln())
            .sum();
        lw + 0.5 * self.double_area(model.steps()) as f64 * q.ln()
    }
}

/// `Z` from the origin to `target`.
pub fn count(
    model: &WalkModel,
    target: (i64, i64),
    mask: Option<&dyn SiteMask>,
    mode: Mode,
) -> Result<PartitionValue, EnumError> {
    count_between(
        model,
        (0, 0),
        target,
        mask.unwrap_or(&Unconstrained),
        &QWeight::one(),
        mode,
    )
}

/// `Z^q` from the origin to `target`.
pub fn count_q(
    model: &WalkModel,
    target: (i64, i64),
    q: &QWeight,
    mask: Option<&dyn SiteMask>,
    mode: Mode,
) -> Result<PartitionValue, EnumError> {
    count_between(model, (0, 0), target, mask.unwrap_or(&Unconstrained), q, mode)
}

/// Weighted path sum between two sites; each step `i` leaving height `y`
/// carries `w_i · q^{u_i (y + v_i/2)}`.
pub fn count_between(
    model: &WalkModel,
    start: (i64, i64),
    target: (i64, i64),
    mask: &dyn SiteMask,
    q: &QWeight,
    mode: Mode,
) -> Result<PartitionValue, EnumError> {
    q.check()?;
    for site in [start, target] {
        if !mask.admits(site.0, site.1) {
            return Err(EnumError::DomainMaskMismatch(site.0, site.1));
        }
    }
    match mode {
        Mode::Log => {
            let log_w: Vec<f64> = model.weights().iter().map(|w| w.ln()).collect();
            let log_q = q.value().ln();
            let steps = model.steps();
            let sweep = forward_sweep(
                model,
                start,
                target,
                mask,
                &LogRing,
                |i, y| log_w[i] + log_q * (steps[i].u as f64) * (y as f64 + 0.5 * steps[i].v as f64),
                Keep::Window,
            );
            Ok(PartitionValue {
                mode,
                exact: None,
                log_value: sweep.target_value,
            })
        }
        Mode::Exact => {
            let q_exact = q.exact().ok_or(EnumError::ExactModeUnavailable)?.clone();
            let exact = exact_sum(model, start, target, mask, &q_exact);
            Ok(PartitionValue {
                mode,
                log_value: exact.ln(),
                exact: Some(exact),
            })
        }
    }
}

fn exact_sum(
    model: &WalkModel,
    start: (i64, i64),
    target: (i64, i64),
    mask: &dyn SiteMask,
    q: &BigRational,
) -> QuadraticSurd {
    exact_sweep(model, start, target, mask, q, Keep::Window).target_value
}

fn exact_sweep(
    model: &WalkModel,
    start: (i64, i64),
    target: (i64, i64),
    mask: &dyn SiteMask,
    q: &BigRational,
    keep: Keep,
) -> Sweep<QuadraticSurd> {
    let steps = model.steps();
    let weights = model.exact_weights();
    let trivial_q = q.is_one();
    let half_integers = !trivial_q && steps.iter().any(|s| (s.u * s.v) % 2 != 0);
    let mut cache: HashMap<i64, QuadraticSurd> = HashMap::new();
    let mut q_power = |halves: i64| -> QuadraticSurd {
        cache
            .entry(halves)
            .or_insert_with(|| half_power(q, halves))
            .clone()
    };

    if half_integers {
        let ring = SurdRing {
            radicand: q.clone(),
        };
        forward_sweep(
            model,
            start,
            target,
            mask,
            &ring,
            |i, y| {
                let p = q_power(steps[i].u * (2 * y + steps[i].v));
                QuadraticSurd {
                    rational: &p.rational * &weights[i],
                    coefficient: &p.coefficient * &weights[i],
                    radicand: q.clone(),
                }
            },
            keep,
        )
    } else {
        let sweep = forward_sweep(
            model,
            start,
            target,
            mask,
            &RationalRing,
            |i, y| {
                if trivial_q {
                    weights[i].clone()
                } else {
                    &q_power(steps[i].u * (2 * y + steps[i].v)).rational * &weights[i]
                }
            },
            keep,
        );
        let lift = |v: BigRational| QuadraticSurd::from_rational(v, q.clone());
        Sweep {
            start: sweep.start,
            target: sweep.target,
            target_value: lift(sweep.target_value),
            columns: sweep
                .columns
                .into_iter()
                .map(|c| Column {
                    x: c.x,
                    lo: c.lo,
                    values: c.values.into_iter().map(lift).collect(),
                })
                .collect(),
        }
    }
}

/// Weighted path sums from `start` to every admissible site that lies on
/// some path to `target`, from a single sweep.
pub fn count_all(
    model: &WalkModel,
    start: (i64, i64),
    target: (i64, i64),
    mask: &dyn SiteMask,
    q: &QWeight,
    mode: Mode,
) -> Result<BTreeMap<(i64, i64), PartitionValue>, EnumError> {
    q.check()?;
    for site in [start, target] {
        if !mask.admits(site.0, site.1) {
            return Err(EnumError::DomainMaskMismatch(site.0, site.1));
        }
    }
    let mut out = BTreeMap::new();
    match mode {
        Mode::Log => {
            let log_w: Vec<f64> = model.weights().iter().map(|w| w.ln()).collect();
            let log_q = q.value().ln();
            let steps = model.steps();
            let sweep = forward_sweep(
                model,
                start,
                target,
                mask,
                &LogRing,
                |i, y| log_w[i] + log_q * (steps[i].u as f64) * (y as f64 + 0.5 * steps[i].v as f64),
                Keep::All,
            );
            for column in &sweep.columns {
                for (y, v) in column.heights().zip(&column.values) {
                    if mask.admits(column.x, y) && v.is_finite() {
                        out.insert((column.x, y), PartitionValue { mode, exact: None, log_value: *v });
                    }
                }
            }
        }
        Mode::Exact => {
            let q_exact = q.exact().ok_or(EnumError::ExactModeUnavailable)?.clone();
            let sweep = exact_sweep(model, start, target, mask, &q_exact, Keep::All);
            for column in sweep.columns {
                let x = column.x;
                for (y, v) in (column.lo..).zip(column.values) {
                    if mask.admits(x, y) && !(v.rational.is_zero() && v.coefficient.is_zero()) {
                        out.insert((x, y), PartitionValue { mode, log_value: v.ln(), exact: Some(v) });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `Z_{n,nt}` divided by its leading asymptotic form `√(N/(2πn))·e^{nL(t)}`.
pub fn asymptotic_ratio(model: &WalkModel, t: f64, n: i64) -> Result<f64, EnumError> {
    let log_z = log_count_along(model, t, n).map_err(|e| match e {
        LagrangeanError::UnreachableTarget(a, b) => EnumError::UnreachableTarget(a, b),
        other => other.into(),
    })?;
    let l = lagrangean(model, t)?;
    let prefactor = match KnownWalk::identify(model) {
        Some(known) => known.prefactor(t),
        None => {
            let half = (n / 2).max(1);
            prefactor_estimate(model, t, &[half, n])?.extrapolated
        }
    };
    let n_f = n as f64;
    let log_leading = 0.5 * (prefactor / (2.0 * std::f64::consts::PI * n_f)).ln() + n_f * l;
    Ok((log_z - log_leading).exp())
}

/// Exact value as `f64`, if rational.
pub fn rational_value(value: &PartitionValue) -> Option<f64> {
    value.rational().and_then(|r| r.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::AboveDiagonal;
    use num_bigint::BigInt;

    fn int(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn small_counts() {
        let unit = WalkModel::unit_steps();
        let z = count(&unit, (3, 2), None, Mode::Exact).unwrap();
        assert_eq!(z.rational(), Some(&int(10)));
        assert!((z.log_value - 10f64.ln()).abs() < 1e-12);
        let ballot = count(&unit, (2, 2), Some(&AboveDiagonal), Mode::Exact).unwrap();
        assert_eq!(ballot.rational(), Some(&int(2)));
        let schroder = WalkModel::schroder(1.0).unwrap();
        let zero = count(&schroder, (3, 0), None, Mode::Exact).unwrap();
        assert_eq!(zero.rational(), Some(&int(0)));
        assert!(zero.is_zero());
    }

    #[test]
    fn q_counts() {
        let unit = WalkModel::unit_steps();
        let z = count_q(&unit, (2, 2), &QWeight::rational(int(2)), None, Mode::Exact).unwrap();
        assert_eq!(z.rational(), Some(&int(35)));
        let z1 = count_q(&unit, (2, 2), &QWeight::one(), None, Mode::Exact).unwrap();
        assert_eq!(z1.rational(), Some(&int(6)));
        let log = count_q(&unit, (2, 2), &QWeight::float(2.0), None, Mode::Log).unwrap();
        assert!((log.log_value - 35f64.ln()).abs() < 1e-12);
        assert_eq!(
            count_q(&unit, (2, 2), &QWeight::float(2.0), None, Mode::Exact).unwrap_err(),
            EnumError::ExactModeUnavailable
        );
    }

    #[test]
    fn half_integer_area_exponents() {
        // single diagonal step (1,1) from the axis encloses area 1/2
        let model = WalkModel::new([(1, 1), (1, -1)], vec![1.0, 1.0]).unwrap();
        let q = int(2);
        let z = count_q(&model, (1, 1), &QWeight::rational(q), None, Mode::Exact).unwrap();
        let e = z.exact.unwrap();
        assert_eq!(e.rational, int(0));
        assert_eq!(e.coefficient, int(1));
        assert!((z.log_value - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mask_must_admit_endpoints() {
        let unit = WalkModel::unit_steps();
        assert_eq!(
            count(&unit, (2, 1), Some(&AboveDiagonal), Mode::Exact).unwrap_err(),
            EnumError::DomainMaskMismatch(2, 1)
        );
    }

    #[test]
    fn path_area_and_sites() {
        let unit = WalkModel::unit_steps();
        // UURR: two up steps then two right steps at height 2
        let path = LatticePath {
            start: (0, 0),
            steps: vec![1, 1, 0, 0],
        };
        assert_eq!(path.double_area(unit.steps()), 8);
        assert_eq!(path.end(unit.steps()), (2, 2));
        assert_eq!(path.sites(unit.steps()).len(), 5);
        assert!((path.log_weight(&unit, 2.0) - 4.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn ratio_small_n() {
        let r = asymptotic_ratio(&WalkModel::unit_steps(), 1.0, 10).unwrap();
        assert!((r - 1.0).abs() < 0.03);
        assert!(matches!(
            asymptotic_ratio(&WalkModel::schroder(1.0).unwrap(), 0.0, 3),
            Err(EnumError::UnreachableTarget(3, 0))
        ));
    }
}
