use super::*;
use crate::energy::{hessian_q, Density, EnergyModel, QuadraticForm};
use crate::fields::{sample_analytic, Base, DisplacementJet, FacetSet, FieldSpec, Grid, Piece, Segment, SmoothMap};
use crate::linalg::Mat;

fn boxed_grid(n: usize, frame: usize) -> Grid {
    let h = 1.0 / n as f64;
    let a = frame as f64 * h;
    Grid::new(&[(0.0, 1.0), (0.0, 1.0)], &[(a, 1.0 - a), (a, 1.0 - a)], h).unwrap()
}

/// Frames on the left and right only.
fn strip_grid(n: usize, frame: usize) -> Grid {
    let h = 1.0 / n as f64;
    let a = frame as f64 * h;
    Grid::new(&[(0.0, 1.0), (0.0, 1.0)], &[(a, 1.0 - a), (0.0, 1.0)], h).unwrap()
}

fn affine(g: [[f64; 2]; 2]) -> FieldSpec {
    FieldSpec {
        base: Base::Zero,
        pieces: vec![Piece {
            region: None,
            map: SmoothMap { linear: g.iter().map(|r| r.to_vec()).collect(), ..Default::default() },
        }],
        cracks: vec![],
    }
}

fn datum(grid: &Grid, spec: &FieldSpec) -> DisplacementJet {
    DisplacementJet::without_divergence(sample_analytic(grid, spec, 0.0).unwrap())
}

fn model(eps: f64, kappa: f64) -> EnergyModel {
    EnergyModel::new(Density::default(), eps, 0.75, 0.7, kappa).unwrap()
}

fn q() -> QuadraticForm {
    hessian_q(&model(0.1, 1.0), 2).unwrap()
}

fn full_cut(grid: &Grid, at: f64) -> FacetSet {
    Segment { axis: 0, at, span: vec![[0.0, 1.0]] }.facets(grid).unwrap()
}

/// Penalized linearized objective written out cell by cell and facet by facet.
fn reference_objective(grid: &Grid, q: &QuadraticForm, crack: &FacetSet, u: &DisplacementJet) -> f64 {
    let h = grid.h();
    let mut e = 0.0;
    for c in 0..grid.n_cells() {
        e += 0.5 * q.eval(&u.strain(c)) * h * h;
    }
    for f in grid.interior_facets().filter(|f| !crack.contains(f)) {
        let (a, b) = grid.facet_cells(f);
        let m = grid.facet_midpoint(f);
        let jump = u.field().eval(a, &m) - u.field().eval(b, &m);
        e += TRACE_PENALTY * jump.norm().powi(2);
    }
    e
}

#[test]
fn assembled_objective_matches_reference() {
    use rand::{Rng, SeedableRng};
    let grid = boxed_grid(8, 2);
    let h = datum(&grid, &affine([[0.3, 0.2], [-0.1, 0.05]]));
    let crack = Segment { axis: 0, at: 0.5, span: vec![[0.25, 0.5]] }.facets(&grid).unwrap();
    let q = q();
    let sys = LinearSystem::new(&q, &h, &crack).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let x: Vec<f64> = (0..sys.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = sys.displacement(&x).unwrap();
        let want = reference_objective(&grid, &q, &crack, &u);
        assert!((sys.objective(&x) - want).abs() <= 1e-10 * want, "{} vs {want}", sys.objective(&x));
    }
}

#[test]
fn pcg_matches_dense_solve() {
    let grid = boxed_grid(8, 2);
    let h = datum(&grid, &affine([[0.3, 0.4], [0.0, -0.2]]));
    let crack = Segment { axis: 1, at: 0.5, span: vec![[0.25, 0.625]] }.facets(&grid).unwrap();
    let sys = LinearSystem::new(&q(), &h, &crack).unwrap();
    let it = sys.solve_pcg(1e-10);
    assert!(it.converged);
    let dense = sys.solve_dense().unwrap();
    let (a, b) = (sys.objective(&it.x), sys.objective(&dense));
    assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
}

#[test]
fn affine_datum_is_the_uncracked_linear_minimizer() {
    let grid = boxed_grid(8, 2);
    let g = [[0.3, 0.4], [0.0, -0.2]];
    let h = datum(&grid, &affine(g));
    let m = model(0.1, 1.0);
    let r = solve_fixed_crack_linear(&m, &q(), &h, &FacetSet::new(), &SolverOptions::default()).unwrap();
    let s = Mat::from_rows(&[g[0].to_vec(), g[1].to_vec()]).unwrap().sym();
    // the affine competitor is admissible; the penalized coupling lets the minimizer undercut
    // it by O(1/penalty)
    let want = s.norm_sq();
    assert!(r.energy <= want + 1e-12 && r.energy >= (1.0 - 1e-2) * want, "{} vs {want}", r.energy);
}

#[test]
fn full_cut_frees_the_interior() {
    let grid = strip_grid(8, 2);
    let t = 0.4;
    let h = datum(&grid, &affine([[t, 0.0], [0.0, 0.0]]));
    let kappa = 0.3;
    let m = model(0.1, kappa);
    let crack = full_cut(&grid, 0.5);
    let r = solve_fixed_crack_linear(&m, &q(), &h, &crack, &SolverOptions::default()).unwrap();
    // elastic energy survives only on the frame, whose area is 1/2
    let want = kappa + t * t * 0.5;
    assert!((r.energy - want).abs() < 1e-8, "{} vs {want}", r.energy);
}

#[test]
fn uniaxial_stretch_nonlinear_minimum() {
    let grid = boxed_grid(8, 2);
    let t = 0.5;
    let h = datum(&grid, &affine([[t, 0.0], [0.0, 0.0]]));
    for eps in [0.2, 0.05] {
        let m = model(eps, 1.0);
        let r = solve_fixed_crack_nonlinear(&m, &q(), &h, &FacetSet::new(), &SolverOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.energy <= t * t + 1e-12 && r.energy >= (1.0 - 1e-2) * t * t, "eps {eps}: {}", r.energy);
    }
}

#[test]
fn reported_energy_reevaluates_the_field() {
    let grid = boxed_grid(8, 2);
    let h = datum(&grid, &affine([[0.2, 0.3], [0.0, 0.1]]));
    let crack = Segment { axis: 0, at: 0.5, span: vec![[0.25, 0.75]] }.facets(&grid).unwrap();
    let m = model(0.1, 0.5);
    let r = solve_fixed_crack_nonlinear(&m, &q(), &h, &crack, &SolverOptions::default()).unwrap();
    let again = crate::energy::relaxed_energy(&m.with_tolerances(crate::fields::Tolerances::solver()), &r.field)
        .unwrap()
        .total
        .finite()
        .unwrap();
    assert!((again - r.energy).abs() <= 1e-10 * again.abs());
    assert!(r.objective >= r.energy - 1e-12);
}

#[test]
fn nonlinear_approaches_linear_minimum() {
    let grid = boxed_grid(8, 2);
    let h = datum(&grid, &affine([[0.4, 0.5], [0.0, 0.0]]));
    let lin = solve_fixed_crack_linear(&model(0.1, 1.0), &q(), &h, &FacetSet::new(), &SolverOptions::default())
        .unwrap()
        .energy;
    let gaps: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&eps| {
            let r = solve_fixed_crack_nonlinear(&model(eps, 1.0), &q(), &h, &FacetSet::new(), &SolverOptions::default())
                .unwrap();
            (r.energy - lin).abs()
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 0.05 * lin);
}

#[test]
fn cracks_outside_omega_are_rejected() {
    let grid = boxed_grid(8, 2);
    let h = datum(&grid, &affine([[0.0; 2]; 2]));
    let crack = full_cut(&grid, 0.5);
    assert!(matches!(
        solve_fixed_crack_linear(&model(0.1, 1.0), &q(), &h, &crack, &SolverOptions::default()),
        Err(crate::Error::CrackOutsideDomain(_))
    ));
    assert!(CrackFamily::new(&grid, vec![("cut".into(), crack)]).is_err());
}

#[test]
fn family_requires_the_empty_crack() {
    let grid = boxed_grid(8, 2);
    let cut = Segment { axis: 0, at: 0.5, span: vec![[0.25, 0.5]] }.facets(&grid).unwrap();
    assert!(CrackFamily::new(&grid, vec![("cut".into(), cut)]).is_err());
}

#[test]
fn search_prefers_cut_when_cheap_and_breaks_ties_by_size() {
    let grid = strip_grid(8, 2);
    let h = datum(&grid, &affine([[0.4, 0.0], [0.0, 0.0]]));
    let family = CrackFamily::new(
        &grid,
        vec![
            ("empty".into(), FacetSet::new()),
            ("a".into(), full_cut(&grid, 0.375)),
            ("b".into(), full_cut(&grid, 0.5)),
            ("ab".into(), full_cut(&grid, 0.375).union(&full_cut(&grid, 0.5))),
        ],
    )
    .unwrap();
    let opts = SolverOptions::default();
    let cheap = minimize_over_cracks(ProblemKind::Linear, &model(0.1, 0.01), &q(), &h, &family, &opts).unwrap();
    assert_eq!(cheap.argmin, 1, "{:?}", cheap.results.iter().map(|r| r.energy).collect::<Vec<_>>());
    let dear = minimize_over_cracks(ProblemKind::Linear, &model(0.1, 10.0), &q(), &h, &family, &opts).unwrap();
    assert_eq!(dear.argmin, 0);
}

#[test]
fn column_cuts_enumerates_planes_and_fractions() {
    let grid = boxed_grid(16, 2);
    let fam = CrackFamily::column_cuts(&grid, &[0.25, 0.5], &[1.0, 0.5]).unwrap();
    assert_eq!(fam.len(), 5);
    assert!(fam.cracks[0].is_empty());
    assert_eq!(fam.cracks[1].len(), 12);
    assert_eq!(fam.cracks[3].len(), 6);
}

