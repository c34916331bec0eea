//! Taut string through the rasterized corridor, then contact refinement on
//! the exact walls.

use crate::domain::{Domain, Side, Wall};

use super::geodesic::Geodesics;
use super::{bisect_root, grid, Piece, VariationalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Bound {
    Lower,
    Upper,
    Endpoint,
}

/// Vertices `(node, height, bound)` of the shortest path from
/// `(xs[0], lo[0])` to `(xs[n], lo[n])` that stays between the piecewise
/// linear envelopes `lo` and `hi`. Both envelopes must agree at the ends.
pub(crate) fn funnel(xs: &[f64], lo: &[f64], hi: &[f64]) -> Vec<(usize, f64, Bound)> {
    let last = xs.len() - 1;
    let mut vertices = vec![(0, lo[0], Bound::Endpoint)];
    let (mut apex, mut apex_y) = (0usize, lo[0]);
    'outer: while apex < last {
        let (mut s_lo, mut s_hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut k_lo, mut k_hi) = (apex, apex);
        for j in apex + 1..=last {
            let dx = xs[j] - xs[apex];
            let lower = (lo[j] - apex_y) / dx;
            let upper = (hi[j] - apex_y) / dx;
            if lower > s_hi {
                // the string bends down around the tightest upper node
                apex = k_hi;
                apex_y = hi[k_hi];
                vertices.push((apex, apex_y, Bound::Upper));
                continue 'outer;
            }
            if upper < s_lo {
                apex = k_lo;
                apex_y = lo[k_lo];
                vertices.push((apex, apex_y, Bound::Lower));
                continue 'outer;
            }
            if lower >= s_lo {
                s_lo = lower;
                k_lo = j;
            }
            if upper <= s_hi {
                s_hi = upper;
                k_hi = j;
            }
        }
        vertices.push((last, lo[last], Bound::Endpoint));
        break;
    }
    vertices
}

#[derive(Debug, Clone, Copy)]
enum Anchor {
    Point(f64, f64),
    Arc { wall: Wall, from: f64, to: f64 },
}

impl Anchor {
    fn left_point(&self, domain: &Domain) -> (f64, f64) {
        match *self {
            Anchor::Point(x, y) => (x, y),
            Anchor::Arc { wall, from, .. } => (from, domain.wall_at(wall, from)),
        }
    }

    fn right_point(&self, domain: &Domain) -> (f64, f64) {
        match *self {
            Anchor::Point(x, y) => (x, y),
            Anchor::Arc { wall, to, .. } => (to, domain.wall_at(wall, to)),
        }
    }
}

/// Abscissa near `guess` where the tangent to `wall` passes through `pivot`.
fn tangent_from(domain: &Domain, wall: Wall, pivot: (f64, f64), guess: f64, reach: f64) -> Option<f64> {
    let curve = domain.curve(wall)?;
    if (pivot.0 - guess).abs() <= reach {
        if let Some(y) = curve.eval(pivot.0) {
            if (y - pivot.1).abs() <= 1e-12 * (1.0 + y.abs()) {
                return Some(pivot.0);
            }
        }
    }
    let f = |x: f64| -> Option<f64> {
        let y = curve.eval(x)?;
        let s = curve.slope(x, Side::Right)?;
        Some(y + s * (pivot.0 - x) - pivot.1)
    };
    let samples = 24;
    let mut best: Option<(f64, f64)> = None;
    let mut previous: Option<(f64, f64)> = None;
    for i in 0..=samples {
        let x = guess - reach + 2.0 * reach * i as f64 / samples as f64;
        if (x - pivot.0).abs() < 1e-12 {
            previous = None;
            continue;
        }
        let Some(v) = f(x) else {
            previous = None;
            continue;
        };
        if let Some((xp, vp)) = previous {
            if vp == 0.0 || vp.signum() != v.signum() {
                let root = bisect_root(&f, xp, x, vp)?;
                if best.map_or(true, |(b, _)| (root - guess).abs() < (b - guess).abs()) {
                    best = Some((root, 0.0));
                }
            }
        }
        previous = Some((x, v));
    }
    best.map(|(x, _)| x)
}

pub(crate) fn taut_pieces(
    flow: &Geodesics,
    domain: &Domain,
    start: (f64, f64),
    end: (f64, f64),
    resolution: usize,
) -> Result<Vec<Piece>, VariationalError> {
    let xs = grid(start.0, end.0, resolution);
    let step = xs[1] - xs[0];
    let (t_min, t_max) = flow.support();
    let cone = |x: f64, slope: f64, from_start: bool| {
        if !slope.is_finite() {
            return if (slope > 0.0) == from_start {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        if from_start {
            start.1 + slope * (x - start.0)
        } else {
            end.1 - slope * (end.0 - x)
        }
    };
    let last = xs.len() - 1;
    let mut lo = Vec::with_capacity(xs.len());
    let mut hi = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        if i == 0 || i == last {
            let y = if i == 0 { start.1 } else { end.1 };
            lo.push(y);
            hi.push(y);
            continue;
        }
        let l = domain.lower_at(x).max(cone(x, t_min, true)).max(cone(x, t_max, false));
        let h = domain.upper_at(x).min(cone(x, t_max, true)).min(cone(x, t_min, false));
        if l > h + 1e-12 * (1.0 + l.abs()) {
            return Err(VariationalError::NoAdmissiblePath(format!(
                "the corridor closes at x={x}"
            )));
        }
        lo.push(l.min(h));
        hi.push(h);
    }

    let vertices = funnel(&xs, &lo, &hi);
    let on_wall = |i: usize, y: f64, bound: Bound| -> Option<Wall> {
        let tol = 1e-12 * (1.0 + y.abs());
        match bound {
            Bound::Lower if (y - domain.lower_at(xs[i])).abs() <= tol => Some(Wall::Lower),
            Bound::Upper if (y - domain.upper_at(xs[i])).abs() <= tol => Some(Wall::Upper),
            _ => None,
        }
    };

    // runs of vertices on consecutive nodes of one wall become arcs
    let mut anchors = vec![Anchor::Point(start.0, start.1)];
    let interior = &vertices[1..vertices.len() - 1];
    let mut k = 0;
    while k < interior.len() {
        let (i, y, bound) = interior[k];
        let Some(wall) = on_wall(i, y, bound) else {
            anchors.push(Anchor::Point(xs[i], y));
            k += 1;
            continue;
        };
        let mut j = k;
        while j + 1 < interior.len() {
            let (next, ny, nb) = interior[j + 1];
            if next == interior[j].0 + 1 && on_wall(next, ny, nb) == Some(wall) {
                j += 1;
            } else {
                break;
            }
        }
        anchors.push(Anchor::Arc {
            wall,
            from: xs[i],
            to: xs[interior[j].0],
        });
        k = j + 1;
    }
    anchors.push(Anchor::Point(end.0, end.1));

    // arc ends sitting on a wall corner stay put; smooth ones slide to tangency
    let corner_near = |wall: Wall, x: f64| domain.next_corner(wall, x - 1.5 * step, x + 1.5 * step, step / 4.0);
    let mut pinned = vec![(false, false); anchors.len()];
    for (a, anchor) in anchors.iter_mut().enumerate() {
        if let Anchor::Arc { wall, from, to } = anchor {
            if let Some(c) = corner_near(*wall, *from) {
                *from = c;
                pinned[a].0 = true;
            }
            if let Some(c) = corner_near(*wall, *to) {
                *to = c;
                pinned[a].1 = true;
            }
            if *to < *from {
                *to = *from;
            }
        }
    }
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for a in 1..anchors.len() - 1 {
            let Anchor::Arc { wall, from, to } = anchors[a] else {
                continue;
            };
            let left = anchors[a - 1].right_point(domain);
            let right = anchors[a + 1].left_point(domain);
            let mut new_from = from;
            let mut new_to = to;
            if !pinned[a].0 {
                if let Some(x) = tangent_from(domain, wall, left, from, 2.0 * step) {
                    new_from = x;
                }
            }
            if !pinned[a].1 {
                if let Some(x) = tangent_from(domain, wall, right, to, 2.0 * step) {
                    new_to = x;
                }
            }
            if new_to < new_from {
                let mid = 0.5 * (new_from + new_to);
                new_from = mid;
                new_to = mid;
            }
            moved = moved.max((new_from - from).abs()).max((new_to - to).abs());
            anchors[a] = Anchor::Arc {
                wall,
                from: new_from,
                to: new_to,
            };
        }
        if moved <= 1e-15 {
            break;
        }
    }

    let mut pieces = Vec::new();
    for a in 0..anchors.len() {
        if let Anchor::Arc { wall, from, to } = anchors[a] {
            if to > from {
                pieces.push(Piece::Wall { from, to, wall });
            }
        }
        if a + 1 < anchors.len() {
            let p = anchors[a].right_point(domain);
            let q = anchors[a + 1].left_point(domain);
            if q.0 > p.0 {
                let path = flow.shoot(p, q).map_err(|_| {
                    VariationalError::NoAdmissiblePath(format!(
                        "segment from ({}, {}) to ({}, {}) leaves the slope support",
                        p.0, p.1, q.0, q.1
                    ))
                })?;
                pieces.push(Piece::Free {
                    from: p.0,
                    to: q.0,
                    path,
                });
            }
        }
    }
    Ok(pieces)
}
