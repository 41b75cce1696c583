//! Constructors: boundary data, kink counts and end-to-end solves.

use crestfield_core::boundary::BoundaryDatum;
use crestfield_core::construct::{
    mcshane_solution, sawtooth_1d, solve, McShaneMode, Method, SolveRequest,
};
use crestfield_core::eigen::{EigenProblem, Lambda};
use crestfield_core::expr::parse_expr;
use crestfield_core::supremand::SupremandSpec;
use crestfield_core::verify::{classify_theorem1, Tolerances};
use crestfield_core::{finite_difference_jet, Error, Field, Grid};
use proptest::prelude::*;

fn centred_slopes(f: &Field) -> Vec<f64> {
    let jf = finite_difference_jet(f, 1).unwrap();
    let n = f.grid().len();
    (1..n - 1).map(|i| jf.jets()[i].du[0][0]).collect()
}

proptest! {
    #[test]
    fn sawtooth_keeps_boundary_values_and_few_kinks(
        a in -0.4..0.4f64,
        b in -0.4..0.4f64,
        m in 1usize..6,
        nodes in 64usize..300,
        lambda in 1.0..3.0f64,
    ) {
        let grid = Grid::new_1d(0.0, 1.0, nodes).unwrap();
        let f = sawtooth_1d(a, b, lambda, m, &grid).unwrap();
        let v = f.values();
        prop_assert_eq!(v[0].to_bits(), a.to_bits());
        prop_assert_eq!(v[nodes - 1].to_bits(), b.to_bits());
        let h = grid.spacing(0);
        for w in v.windows(2) {
            prop_assert!(((w[1] - w[0]) / h).abs() <= lambda * (1.0 + 1e-9));
        }
        let off = centred_slopes(&f).iter().filter(|s| (s.abs() - lambda).abs() > 1e-9 * lambda).count();
        prop_assert!(off <= 2 * (2 * m - 1), "{off} off-level nodes for m = {m}");
    }

    #[test]
    fn mcshane_envelopes_match_boundary_data(g0 in -1.0..1.0f64, g1 in -1.0..1.0f64, c in -1.0..1.0f64) {
        let grid = Grid::unit(2, 17).unwrap();
        let phi = BoundaryDatum::affine([c, 0.0], [[g0, g1], [0.0, 0.0]]);
        let p = EigenProblem::new(SupremandSpec::eikonal(), phi.clone(), 1, grid, Lambda::Value(2.0)).unwrap();
        for mode in [McShaneMode::Min, McShaneMode::Max] {
            let f = mcshane_solution(&p, 2.0, mode).unwrap();
            for i in (0..grid.len()).filter(|&i| grid.is_boundary(i)) {
                let want = phi.value(0, grid.point(i), 2);
                prop_assert_eq!(f.value(i, 0).to_bits(), want.to_bits());
            }
        }
    }

    #[test]
    fn classification_is_scale_invariant(s in 0.1..10.0f64) {
        let grid = Grid::unit(1, 201).unwrap();
        let spec = SupremandSpec::eikonal();
        let f = Field::from_scalar_fn(grid, |x| x[0].min(1.0 - x[0])).unwrap();
        let tol = Tolerances::default();
        let r0 = classify_theorem1(&f, &spec, &tol).unwrap();
        let r1 = classify_theorem1(&f.scaled(s).unwrap(), &spec, &tol).unwrap();
        prop_assert!((r0.crest - r1.crest).abs() <= 1e-12);
        prop_assert!((r1.lambda_hat - s * r0.lambda_hat).abs() <= 1e-12 * s);
        prop_assert_eq!(r0.is_minimiser, r1.is_minimiser);
        prop_assert_eq!(r0.is_solution, r1.is_solution);
    }
}

fn problem(
    spec: SupremandSpec,
    phi: BoundaryDatum,
    ncomp: usize,
    grid: Grid,
    lambda: f64,
) -> EigenProblem {
    EigenProblem::new(spec, phi, ncomp, grid, Lambda::Value(lambda)).unwrap()
}

#[test]
fn refine_keeps_boundary_nodes_and_reaches_the_level() {
    let grid = Grid::unit(2, 33).unwrap();
    let phi = BoundaryDatum::affine([0.0; 2], [[0.2, -0.1], [0.0; 2]]);
    let mut req = SolveRequest::new(
        problem(SupremandSpec::eikonal(), phi.clone(), 1, grid, 1.0),
        Method::Refine,
    );
    req.params.target_deviation_fraction = 0.15;
    let rep = solve(&req).unwrap();
    for i in (0..grid.len()).filter(|&i| grid.is_boundary(i)) {
        assert_eq!(
            rep.field.value(i, 0).to_bits(),
            phi.value(0, grid.point(i), 2).to_bits()
        );
    }
    assert!(*rep.iterations.last().unwrap() <= 0.15);
}

#[test]
fn refine_below_the_critical_level_is_infeasible() {
    let grid = Grid::unit(1, 65).unwrap();
    let phi = BoundaryDatum::affine([0.0; 2], [[2.0, 0.0], [0.0; 2]]);
    let req = SolveRequest::new(
        problem(SupremandSpec::eikonal(), phi, 1, grid, 1.0),
        Method::Refine,
    );
    assert!(
        matches!(solve(&req), Err(Error::Infeasible(_))),
        "{:?}",
        solve(&req).map(|r| r.lambda)
    );
}

#[test]
fn conformal_1d_trace_solution_has_root_level_slope() {
    // h = t, level 4: |u'|^2 = 4
    let spec = SupremandSpec::trace_plus(parse_expr("0").unwrap()).unwrap();
    let grid = Grid::unit(1, 129).unwrap();
    let req = SolveRequest::new(
        problem(spec, BoundaryDatum::zero(), 1, grid, 4.0),
        Method::Conformal { m: 3 },
    );
    let rep = solve(&req).unwrap();
    let (lo, hi) = rep.alpha_range.unwrap();
    assert!(
        (lo - 4.0).abs() < 1e-9 && (hi - 4.0).abs() < 1e-9,
        "alpha range {lo}..{hi}"
    );
    let on_level = centred_slopes(&rep.field)
        .iter()
        .filter(|s| (s.abs() - 2.0).abs() < 1e-9)
        .count();
    assert!(on_level >= 127 - 2 * 5, "{on_level} nodes at |u'| = 2");
}

#[test]
fn sawtooth_rejects_data_steeper_than_the_level() {
    let grid = Grid::unit(1, 65).unwrap();
    assert!(matches!(
        sawtooth_1d(0.0, 2.0, 1.0, 1, &grid),
        Err(Error::Infeasible(_))
    ));
}
