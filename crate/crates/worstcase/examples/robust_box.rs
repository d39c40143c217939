//! A robust problem over a box uncertainty set: both finite reformulations,
//! the duality report, and the worst-case scenario.
//!
//! Run with `cargo run --example robust_box`.

use worstcase::expr::SaddleFunction;
use worstcase::ext::Tolerances;
use worstcase::linalg::Mat;
use worstcase::robust::{
    build_dual_best_cvx, build_primal_worst_cvx, duality_report, RobustProblem, SetAssignment,
    UncertaintySet,
};
use worstcase::solver;

fn main() {
    let tol = Tolerances::default();
    // minimize the worst case of (x1 - x2) + x'Qz subject to a bi-affine
    // constraint, z in the box [-1, 1]^2
    let objective = SaddleFunction::bi_affine(
        vec![1.0, -1.0],
        0.0,
        Mat::from_rows(vec![vec![1.0, 0.2], vec![-0.3, 0.5]]),
        vec![0.1, 0.0],
        0.0,
    )
    .unwrap();
    let constraint = SaddleFunction::bi_affine(
        vec![1.0, 1.0],
        -2.0,
        Mat::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]),
        vec![0.0, 0.0],
        0.0,
    )
    .unwrap();
    // z-independent faces keep the decision region bounded
    let mut constraints = vec![constraint];
    for j in 0..2 {
        for sgn in [1.0f64, -1.0] {
            let mut a = vec![0.0, 0.0];
            a[j] = sgn;
            constraints.push(
                SaddleFunction::bi_affine(a, -3.0, Mat::zeros(2, 2), vec![0.0, 0.0], 0.0)
                    .unwrap(),
            );
        }
    }
    let z_box = UncertaintySet::box_set(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let p = RobustProblem::new(objective, constraints, SetAssignment::Shared(z_box)).unwrap();

    let pw = build_primal_worst_cvx(&p).unwrap();
    let db = build_dual_best_cvx(&p).unwrap();
    println!(
        "reformulated primal worst: {} variables, {} constraints, {} equalities",
        pw.num_vars(),
        pw.constraints.len(),
        pw.equalities.len()
    );
    println!(
        "reformulated dual best:    {} variables, {} constraints, {} equalities",
        db.num_vars(),
        db.constraints.len(),
        db.equalities.len()
    );

    let (ps, ds) = solver::solve_pair(&pw, &db, &tol).unwrap();
    println!("\nprimal worst value: {} ({:?})", ps.objective, ps.status);
    println!("dual best value:    {} ({:?})", ds.objective, ds.status);
    let x = pw.block_values("x", &ps.x).unwrap();
    println!("robust decision x* = {x:?}");
    let z0 = db.block_values("z0", &ds.x).unwrap();
    println!("worst-case objective scenario z0* = {z0:?}");

    let rep = duality_report(&p, &tol).unwrap();
    println!("\nduality report:");
    println!("  gap = {:.3e}", rep.gap);
    println!("  uncertainty set bounded: {}", rep.z_bounded);
    println!(
        "  primal Slater: {:?}, dual Slater: {:?}",
        rep.slater_primal, rep.slater_dual
    );
    println!("  verdict: {:?}", rep.verdict);
}
