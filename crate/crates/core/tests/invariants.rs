use griffith_core::catalog::{kink_grid, smooth_bending, stretch_kink};
use griffith_core::energy::{hessian_q, nonlinear_energy, relaxed_energy, Density, Energy, EnergyModel};
use griffith_core::fields::{sample_analytic, FacetId, FacetSet, Grid, JetField};
use griffith_core::linalg::{Mat, Vector};
use griffith_core::rigidity::{coarea_partition, fit_rotations, piecewise_rotate};
use griffith_core::stats::{loglog_slope, Slope};
use proptest::prelude::*;

fn model(density: Density, eps: f64) -> EnergyModel {
    EnergyModel::new(density, eps, 0.9, 0.8, 1.0).unwrap()
}

fn bent(a: f64, b: f64, c: f64, eps: f64) -> JetField {
    sample_analytic(&kink_grid(0.125).unwrap(), &smooth_bending(a, b, c, 0.1), eps).unwrap()
}

fn density() -> impl Strategy<Value = Density> {
    prop_oneof![
        (0.5..2.0f64).prop_map(|scale| Density::DistSq { scale }),
        (0.5..2.0f64, 0.5..2.0f64).prop_map(|(mu, lambda)| Density::QuadQuartic { mu, lambda }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rigid_motions_cost_nothing(angle in -3.1..3.1f64, b0 in -5.0..5.0f64, b1 in -5.0..5.0f64, d in density()) {
        let y = JetField::identity(&kink_grid(0.25).unwrap())
            .rigid_transform(&Mat::rotation(2, angle), &Vector::from_slice(&[b0, b1]));
        let e = nonlinear_energy(&model(d, 0.1), &y).unwrap().total.finite().unwrap();
        prop_assert!(e <= 1e-12, "{e}");
    }

    #[test]
    fn energy_is_frame_indifferent(
        angle in -3.1..3.1f64,
        shift in -2.0..2.0f64,
        a in -1.0..1.0f64,
        c in -1.0..1.0f64,
        d in density(),
    ) {
        let m = model(d, 0.2);
        let y = bent(a, 0.3, c, 0.2);
        let e = nonlinear_energy(&m, &y).unwrap().total.finite().unwrap();
        let moved = y.rigid_transform(&Mat::rotation(2, angle), &Vector::from_slice(&[shift, -shift]));
        let f = nonlinear_energy(&m, &moved).unwrap().total.finite().unwrap();
        prop_assert!((e - f).abs() <= 1e-10 * (1.0 + e), "{e} vs {f}");
    }

    #[test]
    fn relaxation_never_exceeds_the_nonlinear_energy(delta in 0.0..0.5f64, eps in 0.01..0.5f64) {
        let y = sample_analytic(&kink_grid(0.25).unwrap(), &stretch_kink(delta), 0.0).unwrap();
        let m = model(Density::default(), eps);
        let relaxed = relaxed_energy(&m, &y).unwrap().total.finite().unwrap();
        match nonlinear_energy(&m, &y).unwrap().total {
            Energy::Finite(e) => prop_assert!(relaxed <= e + 1e-12 * e),
            Energy::Infinite => prop_assert!(delta == 0.0),
        }
    }

    #[test]
    fn quadratic_form_ignores_skew_parts(d in density(), s in prop::array::uniform4(-1.0..1.0f64), w in -1.0..1.0f64) {
        let q = hessian_q(&model(d, 0.1), 2).unwrap();
        let sym = Mat::from_flat(2, &[s[0], s[1], s[1], s[3]]);
        let skew = Mat::from_flat(2, &[0.0, w, -w, 0.0]);
        let scale = 1.0 + q.eval(&sym).abs();
        prop_assert!((q.eval(&(sym + skew)) - q.eval(&sym)).abs() <= 1e-5 * scale);
    }

    #[test]
    fn facet_set_algebra(a in prop::collection::vec(0usize..40, 0..20), b in prop::collection::vec(0usize..40, 0..20)) {
        let set = |v: &[usize]| v.iter().map(|&c| FacetId { axis: c % 2, cell: c }).collect::<FacetSet>();
        let (a, b) = (set(&a), set(&b));
        let u = a.union(&b);
        prop_assert!(a.is_subset(&u) && b.is_subset(&u));
        prop_assert_eq!(u.len(), a.len() + b.len() - a.intersection(&b).len());
        prop_assert!(a.difference(&b).is_disjoint(&b));
    }

    #[test]
    fn power_laws_fit_their_exponent(p in -3.0..3.0f64, c in 0.1..10.0f64) {
        let x = [0.5, 0.25, 0.125, 0.0625];
        let y: Vec<f64> = x.iter().map(|x: &f64| c * x.powf(p)).collect();
        match loglog_slope(&x, &y) {
            Slope::Fitted(q) => prop_assert!((q - p).abs() < 1e-9),
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn rotating_a_rigid_field_back_recovers_the_identity() {
    let grid = Grid::new(&[(0.0, 2.0), (0.0, 1.0)], &[(0.5, 2.0), (0.0, 1.0)], 0.125).unwrap();
    let y = JetField::identity(&grid).rigid_transform(&Mat::rotation(2, 0.02), &Vector::zeros(2));
    let m = model(Density::default(), 0.1);
    let p = fit_rotations(&coarea_partition(&y, &m));
    assert_eq!(p.n_labels(), 1);
    let back = piecewise_rotate(&y, &p).unwrap();
    // the only label touches the frame, so it keeps the identity rotation
    assert_eq!(back, y);
}

#[test]
fn jet_fields_round_trip_through_json() {
    let y = bent(0.2, 0.1, -0.3, 0.1);
    let s = serde_json::to_string(&y).unwrap();
    let back: JetField = serde_json::from_str(&s).unwrap();
    assert_eq!(back, y);
    let e = nonlinear_energy(&model(Density::default(), 0.1), &y).unwrap();
    let again: griffith_core::energy::EnergyReport = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
    assert_eq!(again, e);
}
