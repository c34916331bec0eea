//! Constraint domains bounded below and above by graphs over `x`, and their
//! rasterization to lattice site masks.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lattice::SiteMask;

const EDGE_EPS: f64 = 1e-12;
/// Slack when rasterizing so that sites exactly on a boundary stay admissible.
const RASTER_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("unknown domain preset `{0}`")]
    UnknownPreset(String),
    #[error("bad domain parameters: {0}")]
    BadParams(String),
    #[error("site ({0}, {1}) is excluded by the domain")]
    EndpointExcluded(i64, i64),
    #[error("lower boundary exceeds upper boundary at x={0}")]
    CrossedBoundaries(f64),
}

/// Which side of a boundary point a one-sided quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Lower or upper boundary of a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wall {
    Lower,
    Upper,
}

impl Wall {
    pub fn name(self) -> &'static str {
        match self {
            Wall::Lower => "lower",
            Wall::Upper => "upper",
        }
    }
}

/// A (partial) function of `x` used as a boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    /// `y = slope·x + intercept`.
    Line { slope: f64, intercept: f64 },
    /// `y = vertex_y + curvature·(x − vertex_x)²`.
    Parabola {
        vertex_x: f64,
        vertex_y: f64,
        curvature: f64,
    },
    /// Upper or lower half of a circle, defined on `[cx − r, cx + r]`.
    CircleArc {
        cx: f64,
        cy: f64,
        r: f64,
        upper: bool,
    },
    /// `y = height·√(1 − stretch·(x − center)²)` where the root is real.
    Arch {
        center: f64,
        height: f64,
        stretch: f64,
    },
    /// Piecewise-linear interpolation of points sorted by `x`.
    Polyline(Vec<(f64, f64)>),
    /// `curve` restricted to `[from, to]`.
    On {
        from: f64,
        to: f64,
        curve: Box<Curve>,
    },
    /// Pointwise maximum of the members defined at `x`.
    Max(Vec<Curve>),
    /// Pointwise minimum of the members defined at `x`.
    Min(Vec<Curve>),
}

impl Curve {
    pub fn line(slope: f64, intercept: f64) -> Self {
        Curve::Line { slope, intercept }
    }

    pub fn restrict(self, from: f64, to: f64) -> Self {
        Curve::On {
            from,
            to,
            curve: Box::new(self),
        }
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        match self {
            Curve::Line { slope, intercept } => Some(slope * x + intercept),
            Curve::Parabola {
                vertex_x,
                vertex_y,
                curvature,
            } => Some(vertex_y + curvature * (x - vertex_x).powi(2)),
            Curve::CircleArc { cx, cy, r, upper } => {
                let d = r * r - (x - cx).powi(2);
                if d < -EDGE_EPS * r * r {
                    return None;
                }
                let root = d.max(0.0).sqrt();
                Some(if *upper { cy + root } else { cy - root })
            }
            Curve::Arch {
                center,
                height,
                stretch,
            } => {
                let d = 1.0 - stretch * (x - center).powi(2);
                (d >= -EDGE_EPS).then(|| height * d.max(0.0).sqrt())
            }
            Curve::Polyline(points) => {
                let first = points.first()?;
                let last = points.last()?;
                if x < first.0 - EDGE_EPS || x > last.0 + EDGE_EPS {
                    return None;
                }
                let i = segment_index(points, x, Side::Right);
                let (a, b) = (points[i], points[i + 1]);
                let s = (x - a.0) / (b.0 - a.0);
                Some(a.1 + s * (b.1 - a.1))
            }
            Curve::On { from, to, curve } => {
                if x < from - EDGE_EPS || x > to + EDGE_EPS {
                    None
                } else {
                    curve.eval(x.clamp(*from, *to))
                }
            }
            Curve::Max(members) => members
                .iter()
                .filter_map(|c| c.eval(x))
                .reduce(f64::max),
            Curve::Min(members) => members
                .iter()
                .filter_map(|c| c.eval(x))
                .reduce(f64::min),
        }
    }

    /// One-sided slope at `x`.
    pub fn slope(&self, x: f64, side: Side) -> Option<f64> {
        match self {
            Curve::Line { slope, .. } => Some(*slope),
            Curve::Parabola {
                vertex_x,
                curvature,
                ..
            } => Some(2.0 * curvature * (x - vertex_x)),
            Curve::CircleArc { cx, r, upper, .. } => {
                let d = r * r - (x - cx).powi(2);
                if d < -EDGE_EPS * r * r {
                    return None;
                }
                let s = -(x - cx) / d.max(0.0).sqrt();
                Some(if *upper { s } else { -s })
            }
            Curve::Arch {
                center,
                height,
                stretch,
            } => {
                let d = 1.0 - stretch * (x - center).powi(2);
                if d < -EDGE_EPS {
                    return None;
                }
                Some(-height * stretch * (x - center) / d.max(0.0).sqrt())
            }
            Curve::Polyline(points) => {
                if points.len() < 2 {
                    return None;
                }
                self.eval(x)?;
                let i = segment_index(points, x, side);
                let (a, b) = (points[i], points[i + 1]);
                Some((b.1 - a.1) / (b.0 - a.0))
            }
            Curve::On { from, to, curve } => {
                if x < from - EDGE_EPS || x > to + EDGE_EPS {
                    return None;
                }
                curve.slope(x.clamp(*from, *to), side)
            }
            Curve::Max(members) | Curve::Min(members) => {
                let is_max = matches!(self, Curve::Max(_));
                let value = self.eval(x)?;
                let probe = match side {
                    Side::Left => x - 1e-9,
                    Side::Right => x + 1e-9,
                };
                let tol = 1e-10 * (1.0 + value.abs());
                let slopes = members.iter().filter_map(|c| {
                    let v = c.eval(x)?;
                    c.eval(probe)?;
                    ((v - value).abs() <= tol).then(|| c.slope(x, side)).flatten()
                });
                // the active member going rightwards of a max is the steepest
                let pick_max = is_max == (side == Side::Right);
                if pick_max {
                    slopes.reduce(f64::max)
                } else {
                    slopes.reduce(f64::min)
                }
            }
        }
    }
}

/// Index `i` of the segment `[p_i, p_{i+1}]` containing `x`; at a vertex the
/// segment on `side` is chosen.
fn segment_index(points: &[(f64, f64)], x: f64, side: Side) -> usize {
    let last = points.len() - 2;
    let mut i = match side {
        Side::Right => points.partition_point(|p| p.0 <= x).saturating_sub(1),
        Side::Left => points.partition_point(|p| p.0 < x).saturating_sub(1),
    };
    i = i.min(last);
    i
}

/// A region `{(x, y) : x in x_range, lower(x) <= y <= upper(x)}`. Missing
/// boundaries, or boundaries undefined at `x`, do not constrain.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub x_range: (f64, f64),
    pub lower: Option<Curve>,
    pub upper: Option<Curve>,
}

impl Domain {
    pub fn new(
        x_range: (f64, f64),
        lower: Option<Curve>,
        upper: Option<Curve>,
    ) -> Result<Self, DomainError> {
        if !(x_range.0 < x_range.1) {
            return Err(DomainError::BadParams(format!(
                "empty x range [{}, {}]",
                x_range.0, x_range.1
            )));
        }
        let domain = Domain {
            x_range,
            lower,
            upper,
        };
        if x_range.0.is_finite() && x_range.1.is_finite() {
            for i in 0..=1000 {
                let x = x_range.0 + (x_range.1 - x_range.0) * i as f64 / 1000.0;
                if domain.lower_at(x) > domain.upper_at(x) + RASTER_EPS {
                    return Err(DomainError::CrossedBoundaries(x));
                }
            }
        }
        Ok(domain)
    }

    /// The whole plane.
    pub fn free() -> Self {
        Domain {
            x_range: (f64::NEG_INFINITY, f64::INFINITY),
            lower: None,
            upper: None,
        }
    }

    /// `y >= x` on `[0, a_c]`, then `y >= a_c`.
    pub fn diagonal_ramp(a_c: f64) -> Result<Self, DomainError> {
        if !(a_c > 0.0) || !a_c.is_finite() {
            return Err(DomainError::BadParams(format!("a_c must be positive, got {a_c}")));
        }
        let lower = Curve::Polyline(vec![(0.0, 0.0), (a_c, a_c), (f64::MAX, a_c)]);
        Domain::new((0.0, f64::INFINITY), Some(lower), None)
    }

    /// Slope `±1` parallelogram from `(0,0)` to `(1,0)` with a concave cap on
    /// the lower side and a convex cup on the upper side.
    pub fn double_parabola() -> Self {
        let cap = Curve::Parabola {
            vertex_x: 0.25,
            vertex_y: 0.1,
            curvature: -10.0,
        }
        .restrict(0.1, 0.5);
        let cup = Curve::Parabola {
            vertex_x: 0.75,
            vertex_y: -0.1,
            curvature: 10.0,
        }
        .restrict(0.5, 0.9);
        let lower = Curve::Max(vec![Curve::line(-1.0, 0.0), Curve::line(1.0, -1.0), cap]);
        let upper = Curve::Min(vec![Curve::line(1.0, 0.0), Curve::line(-1.0, 1.0), cup]);
        Domain {
            x_range: (0.0, 1.0),
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    /// Region above (`below = false`) or below a half circle.
    pub fn circle(
        r: f64,
        center: (f64, f64),
        upper_half: bool,
        below: bool,
        x_range: Option<(f64, f64)>,
    ) -> Result<Self, DomainError> {
        if !(r > 0.0) || !r.is_finite() || !center.0.is_finite() || !center.1.is_finite() {
            return Err(DomainError::BadParams(format!(
                "circle needs a positive radius and a finite center, got r={r}"
            )));
        }
        let arc = Curve::CircleArc {
            cx: center.0,
            cy: center.1,
            r,
            upper: upper_half,
        };
        let range = x_range.unwrap_or((center.0 - r, center.0 + r));
        if below {
            Domain::new(range, None, Some(arc))
        } else {
            Domain::new(range, Some(arc), None)
        }
    }

    /// Region above the arch `height·√(1 − stretch·(x − center)²)` on `[from, to]`, for `x` in `[0, 1]`.
    pub fn arch(center: f64, height: f64, stretch: f64, from: f64, to: f64) -> Result<Self, DomainError> {
        if !(stretch > 0.0 && height > 0.0 && from < to) {
            return Err(DomainError::BadParams(
                "arch needs positive height and stretch and from < to".into(),
            ));
        }
        let lower = Curve::Arch {
            center,
            height,
            stretch,
        }
        .restrict(from, to);
        Domain::new((0.0, 1.0), Some(lower), None)
    }

    /// Builds a named preset from numeric parameters.
    pub fn preset(name: &str, params: &BTreeMap<String, f64>) -> Result<Self, DomainError> {
        let allowed: &[&str] = match name {
            "free" => &[],
            "diagonal_ramp" => &["a_c"],
            "double_parabola" => &[],
            "circle" => &["r", "cx", "cy", "x0", "x1", "upper_half", "below"],
            "arch" => &["center", "height", "stretch", "from", "to"],
            other => return Err(DomainError::UnknownPreset(other.to_string())),
        };
        if let Some(key) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(DomainError::BadParams(format!(
                "unknown parameter `{key}` for preset `{name}`"
            )));
        }
        let required = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| DomainError::BadParams(format!("preset `{name}` needs `{key}`")))
        };
        let optional = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        match name {
            "free" => Ok(Domain::free()),
            "diagonal_ramp" => Domain::diagonal_ramp(required("a_c")?),
            "double_parabola" => Ok(Domain::double_parabola()),
            "circle" => {
                let r = required("r")?;
                let center = (required("cx")?, required("cy")?);
                let range = match (params.get("x0"), params.get("x1")) {
                    (None, None) => None,
                    (a, b) => Some((
                        a.copied().unwrap_or(center.0 - r),
                        b.copied().unwrap_or(center.0 + r),
                    )),
                };
                Domain::circle(
                    r,
                    center,
                    optional("upper_half", 1.0) != 0.0,
                    optional("below", 0.0) != 0.0,
                    range,
                )
            }
            _ => Domain::arch(
                optional("center", 0.45),
                optional("height", 0.95),
                optional("stretch", 8.0),
                optional("from", 0.1),
                optional("to", 0.8),
            ),
        }
    }

    pub fn lower_at(&self, x: f64) -> f64 {
        self.lower
            .as_ref()
            .and_then(|c| c.eval(x))
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn upper_at(&self, x: f64) -> f64 {
        self.upper
            .as_ref()
            .and_then(|c| c.eval(x))
            .unwrap_or(f64::INFINITY)
    }

    pub fn wall_at(&self, wall: Wall, x: f64) -> f64 {
        match wall {
            Wall::Lower => self.lower_at(x),
            Wall::Upper => self.upper_at(x),
        }
    }

    pub fn curve(&self, wall: Wall) -> Option<&Curve> {
        match wall {
            Wall::Lower => self.lower.as_ref(),
            Wall::Upper => self.upper.as_ref(),
        }
    }

    /// One-sided slope of a wall, if the wall constrains at `x`.
    pub fn wall_slope(&self, wall: Wall, x: f64, side: Side) -> Option<f64> {
        self.curve(wall)?.slope(x, side)
    }

    /// Whether the wall has a slope discontinuity at (or within a hair of) `x`.
    pub fn is_corner(&self, wall: Wall, x: f64) -> bool {
        let Some(curve) = self.curve(wall) else {
            return false;
        };
        let h = 1e-7 * (1.0 + x.abs());
        let at = |p: f64, side| curve.slope(p, side);
        let (Some(left), Some(right)) = (at(x - h, Side::Left), at(x + h, Side::Right)) else {
            return curve.eval(x).is_some();
        };
        let drift_left = at(x - 2.0 * h, Side::Left).map_or(0.0, |s| (s - left).abs());
        let drift_right = at(x + 2.0 * h, Side::Right).map_or(0.0, |s| (s - right).abs());
        let exact_jump = match (at(x, Side::Left), at(x, Side::Right)) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        };
        let jump = (left - right).abs().max(exact_jump);
        jump > 1e-3 + 10.0 * (drift_left + drift_right)
    }

    /// First slope discontinuity of a wall in `[from, to]`, located by scanning
    /// cells of width `step` and shrinking any cell whose slope jump stands
    /// out from its neighbours.
    pub fn next_corner(&self, wall: Wall, from: f64, to: f64, step: f64) -> Option<f64> {
        let curve = self.curve(wall)?;
        if !(to > from) || !(step > 0.0) {
            return None;
        }
        let cells = ((to - from) / step).ceil().max(1.0) as usize;
        let node = |i: usize| (from + i as f64 * step).min(to);
        let jump = |a: f64, b: f64| match (curve.slope(a, Side::Right), curve.slope(b, Side::Left)) {
            (Some(sa), Some(sb)) => (sb - sa).abs(),
            _ => 0.0,
        };
        let jumps: Vec<f64> = (0..cells).map(|i| jump(node(i), node(i + 1))).collect();
        for i in 0..cells {
            let (a, b) = (node(i), node(i + 1));
            if let (Some(l), Some(r)) = (curve.slope(a, Side::Left), curve.slope(a, Side::Right)) {
                if i > 0 && (l - r).abs() > 1e-7 * (1.0 + l.abs().max(r.abs())) {
                    return Some(a);
                }
            }
            let neighbours = jumps[i.saturating_sub(1)].max(jumps[(i + 1).min(cells - 1)]);
            let candidate = i == 0 || i + 1 == cells || jumps[i] > 1.5 * neighbours + 1e-9;
            if candidate {
                if let Some(x) = shrink_to_corner(curve, a, b) {
                    return Some(x);
                }
            }
        }
        None
    }

    /// Largest `x` in `[from, to]` up to which the wall stays defined, if it
    /// is defined at `from`.
    pub fn wall_extent(&self, wall: Wall, from: f64, to: f64, step: f64) -> Option<f64> {
        let curve = self.curve(wall)?;
        curve.eval(from)?;
        let mut x = from;
        while x < to {
            let next = (x + step).min(to);
            if curve.eval(next).is_none() {
                let (mut a, mut b) = (x, next);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if curve.eval(m).is_some() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                return Some(a);
            }
            x = next;
        }
        Some(to)
    }

    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        x >= self.x_range.0 - tol
            && x <= self.x_range.1 + tol
            && y >= self.lower_at(x) - tol
            && y <= self.upper_at(x) + tol
    }

    /// Admissible lattice sites at scale `n`; every endpoint must be admitted.
    pub fn lattice_mask(&self, n: i64, endpoints: &[(i64, i64)]) -> Result<LatticeMask, DomainError> {
        if n < 1 {
            return Err(DomainError::BadParams(format!("scale n must be positive, got {n}")));
        }
        let mask = LatticeMask::new(self.clone(), n);
        for &(x, y) in endpoints {
            if !mask.admits(x, y) {
                return Err(DomainError::EndpointExcluded(x, y));
            }
        }
        Ok(mask)
    }
}

/// Halves `[a, b]` towards the larger one-sided slope jump; a corner keeps a
/// finite jump as the cell collapses, a smooth curve does not.
fn shrink_to_corner(curve: &Curve, mut a: f64, mut b: f64) -> Option<f64> {
    let right = |x: f64| curve.slope(x, Side::Right);
    let left = |x: f64| curve.slope(x, Side::Left);
    for _ in 0..200 {
        if b - a <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        let m = 0.5 * (a + b);
        let (ml, mr) = (left(m)?, right(m)?);
        if (ml - mr).abs() > 1e-7 * (1.0 + ml.abs().max(mr.abs())) {
            return Some(m);
        }
        let jl = (ml - right(a)?).abs();
        let jr = (left(b)? - mr).abs();
        if jl >= jr {
            b = m;
        } else {
            a = m;
        }
    }
    let (sa, sb) = (right(a)?, left(b)?);
    ((sb - sa).abs() > 1e-6 * (1.0 + sa.abs().max(sb.abs()))).then_some(0.5 * (a + b))
}

/// Rasterized domain: site `(r, s)` is admissible iff
/// `n·lower(r/n) <= s <= n·upper(r/n)`.
#[derive(Debug, Clone)]
pub struct LatticeMask {
    domain: Domain,
    n: i64,
    first: i64,
    cached: Vec<Option<(i64, i64)>>,
}

impl LatticeMask {
    fn new(domain: Domain, n: i64) -> Self {
        let nf = n as f64;
        let first_real = (domain.x_range.0 * nf - RASTER_EPS).ceil();
        let last_real = (domain.x_range.1 * nf + RASTER_EPS).floor();
        let mut mask = LatticeMask {
            domain,
            n,
            first: 0,
            cached: Vec::new(),
        };
        if first_real.is_finite() && last_real.is_finite() && last_real - first_real < 1e8 {
            mask.first = first_real as i64;
            mask.cached = (mask.first..=last_real as i64)
                .map(|x| mask.compute(x))
                .collect();
        }
        mask
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn compute(&self, x: i64) -> Option<(i64, i64)> {
        let nf = self.n as f64;
        let xr = x as f64 / nf;
        if xr < self.domain.x_range.0 - RASTER_EPS || xr > self.domain.x_range.1 + RASTER_EPS {
            return None;
        }
        let lo = self.domain.lower_at(xr);
        let hi = self.domain.upper_at(xr);
        let lo = if lo == f64::NEG_INFINITY {
            i64::MIN / 4
        } else {
            (lo * nf - RASTER_EPS * nf.max(1.0)).ceil() as i64
        };
        let hi = if hi == f64::INFINITY {
            i64::MAX / 4
        } else {
            (hi * nf + RASTER_EPS * nf.max(1.0)).floor() as i64
        };
        (lo <= hi).then_some((lo, hi))
    }
}

impl SiteMask for LatticeMask {
    fn column_bounds(&self, x: i64) -> Option<(i64, i64)> {
        if self.cached.is_empty() {
            return self.compute(x);
        }
        if x < self.first {
            return None;
        }
        self.cached.get((x - self.first) as usize).copied().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_values_and_mask() {
        let ramp = Domain::diagonal_ramp(0.25).unwrap();
        assert!((ramp.lower_at(0.1) - 0.1).abs() < 1e-15);
        assert!((ramp.lower_at(0.5) - 0.25).abs() < 1e-15);
        let mask = ramp.lattice_mask(4, &[(0, 0)]).unwrap();
        assert!(!mask.admits(1, 0));
        assert!(mask.admits(1, 1));
        assert!(!mask.admits(-1, 0));
        assert!(ramp.is_corner(Wall::Lower, 0.25));
        assert!(!ramp.is_corner(Wall::Lower, 0.2));
        assert_eq!(ramp.wall_slope(Wall::Lower, 0.25, Side::Left), Some(1.0));
        assert_eq!(ramp.wall_slope(Wall::Lower, 0.25, Side::Right), Some(0.0));
    }

    #[test]
    fn double_parabola_shape() {
        let d = Domain::double_parabola();
        assert!((d.lower_at(0.25) - 0.1).abs() < 1e-15);
        assert!((d.upper_at(0.75) + 0.1).abs() < 1e-15);
        assert!((d.lower_at(0.05) + 0.05).abs() < 1e-15);
        assert!((d.upper_at(0.5) - 0.5).abs() < 1e-15);
        let slope = d.wall_slope(Wall::Lower, 0.2, Side::Right).unwrap();
        assert!((slope - 1.0).abs() < 1e-12);
        assert!(!d.is_corner(Wall::Lower, 0.229));
        let kink = (6.0 - 15f64.sqrt()) / 20.0;
        assert!(d.is_corner(Wall::Lower, kink));
        let mask = d.lattice_mask(960, &[(0, 0), (960, 0)]).unwrap();
        assert_eq!(mask.column_bounds(240), Some((96, 240)));
        assert_eq!(mask.column_bounds(961), None);
    }

    #[test]
    fn corners_and_extent() {
        let step = 1.0 / 2048.0;
        let ramp = Domain::diagonal_ramp(0.25).unwrap();
        let c = ramp.next_corner(Wall::Lower, 0.01, 1.0, step).unwrap();
        assert!((c - 0.25).abs() < 1e-12);
        assert_eq!(ramp.next_corner(Wall::Lower, 0.3, 1.0, step), None);

        let d = Domain::double_parabola();
        let kink = (6.0 - 15f64.sqrt()) / 20.0;
        let c = d.next_corner(Wall::Lower, 0.0, 0.2, step).unwrap();
        assert!((c - kink).abs() < 1e-10, "{c}");
        let cup_kink = (14.0 - 15f64.sqrt()) / 20.0;
        let c = d.next_corner(Wall::Upper, 0.501, 0.6, step).unwrap();
        assert!((c - cup_kink).abs() < 1e-10, "{c}");
        assert_eq!(d.next_corner(Wall::Lower, 0.12, 0.45, step), None);

        let arch = Domain::arch(0.45, 0.95, 8.0, 0.1, 0.8).unwrap();
        assert_eq!(arch.next_corner(Wall::Lower, 0.12, 0.78, step), None);
        let end = arch.wall_extent(Wall::Lower, 0.5, 1.0, step).unwrap();
        assert!((end - 0.8).abs() < 1e-9, "{end}");
        assert_eq!(arch.wall_extent(Wall::Lower, 0.05, 1.0, step), None);
    }

    #[test]
    fn presets_validate_params() {
        let empty = BTreeMap::new();
        assert!(matches!(
            Domain::preset("circle", &empty),
            Err(DomainError::BadParams(_))
        ));
        assert!(matches!(
            Domain::preset("torus", &empty),
            Err(DomainError::UnknownPreset(_))
        ));
        let mut p = BTreeMap::new();
        p.insert("a_c".to_string(), 0.25);
        assert!(Domain::preset("diagonal_ramp", &p).is_ok());
        p.insert("bogus".to_string(), 1.0);
        assert!(Domain::preset("diagonal_ramp", &p).is_err());
    }

    #[test]
    fn circle_arc_slopes() {
        let d = Domain::circle(1.0, (0.0, 0.0), true, false, None).unwrap();
        let x = 0.6;
        assert!((d.lower_at(x) - 0.8).abs() < 1e-15);
        let s = d.wall_slope(Wall::Lower, x, Side::Right).unwrap();
        assert!((s + 0.75).abs() < 1e-12);
    }

    #[test]
    fn endpoint_exclusion() {
        let ramp = Domain::diagonal_ramp(0.25).unwrap();
        assert_eq!(
            ramp.lattice_mask(4, &[(1, 0)]).unwrap_err(),
            DomainError::EndpointExcluded(1, 0)
        );
    }

    #[test]
    fn polyline_slopes_at_vertices() {
        let c = Curve::Polyline(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]);
        assert_eq!(c.slope(1.0, Side::Left), Some(1.0));
        assert_eq!(c.slope(1.0, Side::Right), Some(0.0));
        assert_eq!(c.eval(1.5), Some(1.0));
        assert_eq!(c.eval(2.5), None);
    }
}
