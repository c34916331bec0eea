use proptest::prelude::*;
use tangency_core::lagrangean::{concavity_certificate, denominator_identity_check, prefactor_estimate};
use tangency_core::{derivatives, lagrangean, solve_saddle, LagrangeanTable, WalkModel};

fn unit_closed(t: f64) -> f64 {
    (1.0 + t) * (1.0 + t).ln() - t * t.ln()
}

fn schroder_closed(w: f64, t: f64) -> f64 {
    let (r, c, s) = ((1.0 + w * t * t).sqrt(), (1.0 - t * t).sqrt(), (w + 1.0).sqrt());
    ((r + s) / c).ln() + t * ((r - s * t) / c).ln()
}

fn grid(from: f64, to: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| from + (to - from) * k as f64 / (count - 1) as f64).collect()
}

#[test]
fn reference_walks_match_closed_forms() {
    let unit = WalkModel::unit_steps();
    for t in grid(0.05, 20.0, 400) {
        assert!((lagrangean(&unit, t).unwrap() - unit_closed(t)).abs() < 1e-10, "t={t}");
    }
    for w in [0.5, 1.0, 2.0] {
        let model = WalkModel::schroder(w).unwrap();
        for t in grid(-0.95, 0.95, 400) {
            let got = lagrangean(&model, t).unwrap();
            assert!((got - schroder_closed(w, t)).abs() < 1e-10, "w={w} t={t}");
        }
    }
}

#[test]
fn table_rows_are_consistent() {
    let model = WalkModel::schroder(0.5).unwrap();
    let table = LagrangeanTable::build(&model, &grid(-0.9, 0.9, 37)).unwrap();
    for row in &table.rows {
        assert!((row.lp + row.y.ln()).abs() < 1e-10);
        assert!((row.l + row.x.ln() + row.t * row.y.ln()).abs() < 1e-10);
        assert!(row.lpp < 0.0);
    }
    // y(t) increases, so L' decreases
    for pair in table.rows.windows(2) {
        assert!(pair[1].y > pair[0].y);
    }
}

#[test]
fn prefactors_of_reference_walks() {
    let unit = prefactor_estimate(&WalkModel::unit_steps(), 1.0, &[100, 200]).unwrap();
    assert!((unit.extrapolated - 2.0).abs() < 0.02);
    let target = (1.0 + 2f64.sqrt()).powi(2) / 2f64.sqrt();
    let schroder = prefactor_estimate(&WalkModel::schroder(1.0).unwrap(), 0.0, &[200, 400]).unwrap();
    assert!((schroder.extrapolated - target).abs() < 0.01 * target);
}

fn random_model() -> impl Strategy<Value = WalkModel> {
    prop::collection::btree_map((0i64..=3, -3i64..=3), 0.2f64..3.0, 2..=5).prop_filter_map(
        "walk must be directed",
        |steps| {
            let (list, weights): (Vec<(i64, i64)>, Vec<f64>) = steps.into_iter().unzip();
            WalkModel::new(list, weights).ok()
        },
    )
}

/// Interior slope at fraction `f` of the (truncated) support.
fn interior(model: &WalkModel, f: f64) -> f64 {
    let (lo, hi) = match (model.t_min().is_finite(), model.t_max().is_finite()) {
        (true, true) => (model.t_min(), model.t_max()),
        (true, false) => (model.t_min(), model.t_min() + 10.0),
        _ => (model.t_max() - 10.0, model.t_max()),
    };
    lo + (hi - lo) * f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn saddle_solves_the_kernel_system(model in random_model(), f in 0.05f64..0.95) {
        let t = interior(&model, f);
        let s = solve_saddle(&model, t).unwrap();
        let (mut p, mut px, mut py) = (0.0, 0.0, 0.0);
        for (st, &w) in model.steps().iter().zip(model.weights()) {
            let term = w * s.x.powi(st.u as i32) * s.y.powi(st.v as i32);
            p += term;
            px += st.u as f64 * term;
            py += st.v as f64 * term;
        }
        prop_assert!((p - 1.0).abs() < 1e-10);
        prop_assert!((t * px - py).abs() < 1e-9 * (1.0 + px.abs()));
    }

    #[test]
    fn strictly_concave_with_identity(model in random_model(), f in 0.05f64..0.95) {
        let t = interior(&model, f);
        let (lp, lpp) = derivatives(&model, t).unwrap();
        prop_assert!(lpp < 0.0);
        let id = denominator_identity_check(&model, t).unwrap();
        prop_assert!(id.abs_diff <= 1e-9 * id.lhs.abs().max(id.rhs.abs()));
        let h = 1e-5 * (1.0 + t.abs());
        let fd = (lagrangean(&model, t + h).unwrap() - lagrangean(&model, t - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - lp).abs() < 1e-6 * (1.0 + lp.abs()), "fd={} lp={}", fd, lp);
    }

    #[test]
    fn chords_lie_below(model in random_model(), a in 0.05f64..0.95, b in 0.05f64..0.95, alpha in 0.1f64..0.9) {
        prop_assume!((a - b).abs() > 0.05);
        let (ta, tb) = (interior(&model, a), interior(&model, b));
        let mid = lagrangean(&model, alpha * ta + (1.0 - alpha) * tb).unwrap();
        let chord = alpha * lagrangean(&model, ta).unwrap() + (1.0 - alpha) * lagrangean(&model, tb).unwrap();
        prop_assert!(mid > chord);
    }
}

#[test]
fn certificate_on_random_grid() {
    let model = WalkModel::new([(1, 2), (2, -1), (1, 0), (3, 3)], vec![0.5, 1.5, 1.0, 0.25]).unwrap();
    let report = concavity_certificate(&model, &grid(interior(&model, 0.02), interior(&model, 0.98), 200)).unwrap();
    assert_eq!(report.nodes, 200);
    assert!(report.max_lpp < 0.0 && report.min_y_increment > 0.0);
}
