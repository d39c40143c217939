//! Generalized ambiguity sets: component supports with fixed probabilities
//! and cone-valued moment constraints (orthant and second-order cones).
//!
//! Run with `cargo run --example conic_moments`.

use worstcase::cone::{c_perspective_eval, scalarize, CConvexFunction, ProperCone};
use worstcase::dro::{
    build_adb_cvx_g, build_apw_cvx_g, extract_distribution_g, GeneralizedAmbiguitySet,
    GeneralizedComponent, GeneralizedMoment,
};
use worstcase::expr::{FunctionExpr, Norm};
use worstcase::ext::Tolerances;
use worstcase::linalg::Mat;
use worstcase::solver;

fn main() {
    let tol = Tolerances::default();

    // two disjoint intervals, each carrying half the mass, with E[z^2] <= 3
    let neg_g = FunctionExpr::affine(vec![-1.0], 0.0);
    let h = FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap();
    let comp = |lo: f64, hi: f64| GeneralizedComponent {
        support: vec![CConvexFunction::componentwise(vec![
            FunctionExpr::affine(vec![1.0], -hi),
            FunctionExpr::affine(vec![-1.0], lo),
        ])
        .unwrap()],
        prob: 0.5,
        neg_pieces: vec![neg_g.clone()],
    };
    let a = GeneralizedAmbiguitySet::new(
        1,
        vec![comp(0.0, 1.0), comp(2.0, 3.0)],
        vec![GeneralizedMoment {
            cone: ProperCone::NonnegOrthant(1),
            per_component: vec![
                CConvexFunction::componentwise(vec![h.clone()]).unwrap(),
                CConvexFunction::componentwise(vec![h.clone()]).unwrap(),
            ],
            bound: vec![3.0],
        }],
    )
    .unwrap();

    let apw = build_apw_cvx_g(&a, &tol).unwrap();
    let adb = build_adb_cvx_g(&a, &tol).unwrap();
    let (ps, ds) = solver::solve_pair(&apw, &adb, &tol).unwrap();
    println!("two-component instance (mass 1/2 on [0,1] and on [2,3], E[z^2] <= 3):");
    println!("  minimization: {}", ps.objective);
    println!("  maximization: {}", ds.objective);
    let dist = extract_distribution_g(&a, &adb, &ds, &tol).unwrap();
    println!("  worst-case distribution:");
    for (z, p) in &dist.atoms {
        println!("    z = {:>8.5}  prob {:.5}", z[0], p);
    }

    // a second-order-cone moment: E[(z, phi(z))] in the cone order bounds
    // the Euclidean norm of the mean pair by the bound's tail component
    println!("\nsecond-order-cone machinery on the structured class:");
    let soc_fn = CConvexFunction::soc_structured(
        Mat::from_rows(vec![vec![1.0]]),
        vec![0.0],
        FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap(),
    )
    .unwrap();
    let lam = vec![0.6, 1.0]; // inside the dual cone: |0.6| <= 1
    let scalar = scalarize(&soc_fn, &lam, 1e-9).unwrap();
    println!(
        "  scalarization at lambda = {lam:?}: value at z = 1.5 is {}",
        scalar.eval(&[1.5]).unwrap()
    );
    let v = c_perspective_eval(&soc_fn, &[1.0], 0.5).unwrap();
    println!("  cone perspective at (z, t) = (1, 0.5): {v:?}");
    let v0 = c_perspective_eval(&soc_fn, &[1.0], 0.0).unwrap();
    println!("  cone perspective at t = 0 (recession solve): {v0:?}");
}
