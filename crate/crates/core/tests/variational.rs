use proptest::prelude::*;
use tangency_core::domain::{Curve, Domain, Side, Wall};
use tangency_core::variational::{
    action, constrained_optimum, constructive_optimum, euler_lagrange_residual, free_geodesic, tangency_tolerance,
    verify_tangency, ContactKind, Geodesics, Piece, TangencyStatus, Trajectory, DEFAULT_RESOLUTION,
};
use tangency_core::WalkModel;

fn schroder() -> WalkModel {
    WalkModel::schroder(1.0).unwrap()
}

#[test]
fn double_parabola_taut() {
    let t = constrained_optimum(&schroder(), 0.0, &Domain::double_parabola(), (0.0, 0.0), (1.0, 0.0), DEFAULT_RESOLUTION)
        .unwrap();
    let first = t.first_contact().unwrap();
    assert_eq!(first.kind, ContactKind::Touchdown);
    assert_eq!(first.wall, Wall::Lower);
    assert!((first.x - 21f64.sqrt() / 20.0).abs() < 1e-6, "{}", first.x);
    let slope = t.slope(0.1, Side::Right).unwrap();
    assert!((slope - (5.0 - 21f64.sqrt())).abs() < 1e-6, "{slope}");
    let report = verify_tangency(&t, &t.domain, tangency_tolerance(DEFAULT_RESOLUTION));
    assert!(report.passed(), "{report:?}");
    assert!(report.checks.iter().any(|c| c.status == TangencyStatus::Pass));
    assert!(t.max_violation() < 1e-9);
}

#[test]
fn double_parabola_area_weighted() {
    let lambda = 0.05f64.ln();
    let t = constrained_optimum(&schroder(), lambda, &Domain::double_parabola(), (0.0, 0.0), (1.0, 0.0), DEFAULT_RESOLUTION)
        .unwrap();
    let xs: Vec<f64> = t.contacts.iter().map(|c| c.x).collect();
    assert!(xs.len() >= 3, "{xs:?}");
    assert!((xs[0] - 0.219_553_6).abs() < 1e-5, "{xs:?}");
    assert!((xs[1] - 0.288_598_3).abs() < 1e-5, "{xs:?}");
    assert!((xs[2] - 0.752_869_2).abs() < 1e-5, "{xs:?}");
    let report = verify_tangency(&t, &t.domain, tangency_tolerance(DEFAULT_RESOLUTION));
    assert!(report.passed(), "{report:?}");
    assert!(euler_lagrange_residual(&schroder(), &t).unwrap() < 1e-4);
}

#[test]
fn arch_taut() {
    let arch = Domain::arch(0.45, 0.95, 8.0, 0.1, 0.8).unwrap();
    let t = constrained_optimum(&WalkModel::unit_steps(), 0.0, &arch, (0.0, 0.0), (1.0, 1.0), DEFAULT_RESOLUTION).unwrap();
    let xs: Vec<f64> = t.contacts.iter().map(|c| c.x).collect();
    assert_eq!(xs.len(), 2);
    assert!((xs[0] - 0.172_222).abs() < 1e-5);
    assert!((xs[1] - 0.438_172).abs() < 1e-5);
}

#[test]
fn construction_agrees_with_taut_string() {
    let cases = [
        (schroder(), Domain::double_parabola(), (0.0, 0.0), (1.0, 0.0)),
        (WalkModel::unit_steps(), Domain::arch(0.45, 0.95, 8.0, 0.1, 0.8).unwrap(), (0.0, 0.0), (1.0, 1.0)),
        (WalkModel::unit_steps(), Domain::diagonal_ramp(0.25).unwrap(), (0.0, 0.0), (1.0, 0.5)),
    ];
    for (model, domain, start, end) in cases {
        let a = constrained_optimum(&model, 0.0, &domain, start, end, 1024).unwrap();
        let b = constructive_optimum(&model, 0.0, &domain, start, end, 1024).unwrap();
        let gap = a.hs.iter().zip(&b.hs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-6, "{gap}");
    }
}

#[test]
fn eq49_closed_form() {
    // constants fitted independently to the closed form for (0,0) -> (1, 0.3)
    let (fit_a, fit_b) = (0.208_826_231_253_152_47, 1.945_868_989_855_587);
    let lambda = 2f64.ln();
    let closed = |x: f64| {
        let e = fit_a * (2.0 * lambda * x).exp();
        let c = 3.0;
        let s = (1.0 + 2.0 * c * e + e * e).sqrt();
        x + fit_b - ((e + c + s).ln() + (c * e + 1.0 + s).ln()) / (2.0 * lambda)
    };
    let t = free_geodesic(&schroder(), lambda, (0.0, 0.0), (1.0, 0.3), 400).unwrap();
    let worst = t.xs.iter().zip(&t.hs).map(|(&x, &h)| (h - closed(x)).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
    assert!(euler_lagrange_residual(&schroder(), &t).unwrap() < 1e-4);
}

#[test]
fn curvature_follows_area_weight_sign() {
    for (lambda, sign) in [(-1.5, 1.0), (1.5, -1.0)] {
        let t = free_geodesic(&schroder(), lambda, (0.0, 0.0), (1.0, 0.2), 200).unwrap();
        for w in t.hs.windows(3) {
            assert!(sign * (w[0] - 2.0 * w[1] + w[2]) > 0.0);
        }
    }
    let t = constrained_optimum(&schroder(), 0.05f64.ln(), &Domain::double_parabola(), (0.0, 0.0), (1.0, 0.0), 512)
        .unwrap();
    for piece in &t.pieces {
        if let Piece::Free { from, to, path } = piece {
            let a = path.slope(*from).unwrap();
            let b = path.slope(*to).unwrap();
            assert!(b > a, "free arc on [{from}, {to}] is not convex");
        }
    }
}

#[test]
fn perturbed_entry_slope_is_flagged() {
    let model = schroder();
    let domain = Domain::double_parabola();
    let t = constrained_optimum(&model, 0.0, &domain, (0.0, 0.0), (1.0, 0.0), DEFAULT_RESOLUTION).unwrap();
    let p1 = t.first_contact().unwrap().clone();
    let slope = t.slope(0.1, Side::Right).unwrap() + 0.1;
    let start = (0.0, p1.y - slope * p1.x);
    let entry = Geodesics::new(&model, 0.0).with_slope(start, slope).unwrap();
    let mut pieces = vec![Piece::Free { from: 0.0, to: p1.x, path: entry }];
    pieces.extend(t.pieces[1..].iter().cloned());
    let bent = Trajectory::from_pieces(0.0, domain.clone(), start, t.end, pieces, DEFAULT_RESOLUTION).unwrap();
    let report = verify_tangency(&bent, &domain, tangency_tolerance(DEFAULT_RESOLUTION));
    assert!(!report.passed());
    let worst = report.checks.iter().find(|c| c.status == TangencyStatus::Fail).unwrap();
    assert!((worst.contact.x - p1.x).abs() < 1e-12);
    assert!((worst.residual - 0.1).abs() < 1e-9);
}

#[test]
fn universality_on_shared_domain() {
    // both models admit every slope in [-1, 1] on this domain
    let broad = WalkModel::new([(1, 2), (1, -2), (1, 0)], vec![1.0, 2.0, 0.5]).unwrap();
    let domain = Domain::double_parabola();
    let a = constrained_optimum(&schroder(), 0.0, &domain, (0.0, 0.0), (1.0, 0.0), 1024).unwrap();
    let b = constrained_optimum(&broad, 0.0, &domain, (0.0, 0.0), (1.0, 0.0), 1024).unwrap();
    let gap = a.hs.iter().zip(&b.hs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-12, "{gap}");
}

fn perturb(t: &Trajectory, coefficients: &[f64]) -> Vec<f64> {
    let (x0, x1) = (t.start.0, t.end.0);
    t.xs
        .iter()
        .zip(&t.hs)
        .map(|(&x, &h)| {
            let u = (x - x0) / (x1 - x0);
            let bump: f64 = coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * u).sin())
                .sum();
            (h + bump).clamp(t.domain.lower_at(x), t.domain.upper_at(x))
        })
        .collect()
}

fn optimum_cases() -> Vec<(WalkModel, Domain, f64, (f64, f64), (f64, f64))> {
    vec![
        (schroder(), Domain::double_parabola(), 0.0, (0.0, 0.0), (1.0, 0.0)),
        (schroder(), Domain::double_parabola(), 0.05f64.ln(), (0.0, 0.0), (1.0, 0.0)),
        (WalkModel::unit_steps(), Domain::diagonal_ramp(0.25).unwrap(), 0.0, (0.0, 0.0), (1.0, 0.5)),
        (WalkModel::unit_steps(), Domain::arch(0.45, 0.95, 8.0, 0.1, 0.8).unwrap(), 1.0, (0.0, 0.0), (1.0, 1.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimum_beats_perturbations(case in 0usize..4, coefficients in prop::collection::vec(-0.02f64..0.02, 1..5)) {
        let (model, domain, lambda, start, end) = optimum_cases().swap_remove(case);
        let t = constrained_optimum(&model, lambda, &domain, start, end, 256).unwrap();
        let best = action(&model, &t.xs, &t.hs, lambda).unwrap();
        let hs = perturb(&t, &coefficients);
        let moved = hs.iter().zip(&t.hs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assume!(moved > 1e-4);
        if let Ok(other) = action(&model, &t.xs, &hs, lambda) {
            prop_assert!(other < best, "{other} >= {best}");
        }
    }

    #[test]
    fn action_is_strictly_concave(
        first in prop::collection::vec(-0.05f64..0.05, 1..4),
        second in prop::collection::vec(-0.05f64..0.05, 1..4),
        alpha in 0.1f64..0.9,
        lambda in -2.0f64..2.0,
    ) {
        let model = schroder();
        let t = free_geodesic(&model, 0.0, (0.0, 0.0), (1.0, 0.1), 128).unwrap();
        let h1 = perturb(&t, &first);
        let h2 = perturb(&t, &second);
        prop_assume!(h1.iter().zip(&h2).any(|(p, q)| (p - q).abs() > 1e-6));
        let mixed: Vec<f64> = h1.iter().zip(&h2).map(|(p, q)| alpha * p + (1.0 - alpha) * q).collect();
        let s1 = action(&model, &t.xs, &h1, lambda).unwrap();
        let s2 = action(&model, &t.xs, &h2, lambda).unwrap();
        let sm = action(&model, &t.xs, &mixed, lambda).unwrap();
        prop_assert!(sm > alpha * s1 + (1.0 - alpha) * s2);
    }

    #[test]
    fn taut_string_is_shortest_visible_path(
        base in prop::collection::vec(-0.06f64..0.06, 7),
        widths in prop::collection::vec(0.01f64..0.08, 7),
    ) {
        // knots on multiples of 1/8 so they fall on grid nodes
        let mut lower = vec![(0.0, -1.0)];
        let mut upper = vec![(0.0, 1.0)];
        let mut level = 0.0;
        for k in 0..7 {
            level += base[k];
            let x = (k + 1) as f64 / 8.0;
            lower.push((x, level - widths[k]));
            upper.push((x, level + widths[k]));
        }
        lower.push((1.0, -1.0));
        upper.push((1.0, 1.0));
        let domain = Domain::new(
            (0.0, 1.0),
            Some(Curve::Polyline(lower.clone())),
            Some(Curve::Polyline(upper.clone())),
        ).unwrap();
        let end = (1.0, level);
        let model = WalkModel::new([(1, 3), (1, -3), (1, 0)], vec![1.0, 1.0, 1.0]).unwrap();
        let oracle = visibility_path(&lower, &upper, (0.0, 0.0), end);
        prop_assume!(oracle.windows(2).all(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs() < 2.9));
        let t = constrained_optimum(&model, 0.0, &domain, (0.0, 0.0), end, 64).unwrap();
        for (&x, &h) in t.xs.iter().zip(&t.hs) {
            let seg = oracle.windows(2).find(|w| x <= w[1].0 + 1e-12).unwrap();
            let y = seg[0].1 + (seg[1].1 - seg[0].1) * (x - seg[0].0) / (seg[1].0 - seg[0].0);
            prop_assert!((h - y).abs() < 1e-9, "x={} taut={} oracle={}", x, h, y);
        }
    }
}

/// Euclidean shortest path between two polyline walls by Dijkstra over the
/// visibility graph of the knots.
fn visibility_path(lower: &[(f64, f64)], upper: &[(f64, f64)], start: (f64, f64), end: (f64, f64)) -> Vec<(f64, f64)> {
    let wall = |curve: &[(f64, f64)], x: f64| {
        let seg = curve.windows(2).find(|w| x <= w[1].0 + 1e-15).unwrap();
        seg[0].1 + (seg[1].1 - seg[0].1) * (x - seg[0].0) / (seg[1].0 - seg[0].0)
    };
    let mut nodes = vec![start];
    nodes.extend(lower[1..lower.len() - 1].iter().copied());
    nodes.extend(upper[1..upper.len() - 1].iter().copied());
    nodes.push(end);
    let knots: Vec<f64> = lower.iter().map(|p| p.0).collect();
    let visible = |p: (f64, f64), q: (f64, f64)| {
        if q.0 <= p.0 {
            return false;
        }
        knots.iter().filter(|&&x| x >= p.0 && x <= q.0).all(|&x| {
            let y = p.1 + (q.1 - p.1) * (x - p.0) / (q.0 - p.0);
            y >= wall(lower, x) - 1e-12 && y <= wall(upper, x) + 1e-12
        })
    };
    let n = nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&i| !done[i]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
            break;
        };
        done[u] = true;
        for v in 0..n {
            if !done[v] && visible(nodes[u], nodes[v]) {
                let d = dist[u] + (nodes[v].0 - nodes[u].0).hypot(nodes[v].1 - nodes[u].1);
                if d < dist[v] {
                    dist[v] = d;
                    prev[v] = u;
                }
            }
        }
    }
    let mut path = vec![end];
    let mut at = n - 1;
    while prev[at] != usize::MAX {
        at = prev[at];
        path.push(nodes[at]);
    }
    path.reverse();
    path
}
