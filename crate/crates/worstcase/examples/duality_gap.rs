//! A convex primal/dual pair with a strictly positive duality gap: the gap
//! depends on the representation, not on convexity alone.
//!
//! Run with `cargo run --example duality_gap`.

use worstcase::expr::FunctionExpr;
use worstcase::ext::Tolerances;
use worstcase::robust::classical;
use worstcase::solver;

fn main() {
    let tol = Tolerances::default();
    // minimize e^{-x1} subject to the closed perspective x1^2/x2 <= 0
    let f0 = FunctionExpr::on_coords(FunctionExpr::exponential(-1.0).unwrap(), &[0], 2).unwrap();
    let f1 = FunctionExpr::quad_over_lin();
    let fs = vec![f0, f1];

    let p = classical::build_primal(&fs).unwrap();
    let d = classical::build_dual(&fs).unwrap();
    println!("primal: {} variables, {} constraints", p.num_vars(), p.constraints.len());
    println!("dual:   {} variables, {} equalities", d.num_vars(), d.equalities.len());

    let ps = solver::solve(&p, &tol).unwrap();
    let ds = solver::solve(&d, &tol).unwrap();
    println!("\nevery feasible point has x1 = 0, so the primal value is exactly 1:");
    println!("  primal value: {} ({:?})", ps.objective, ps.status);
    println!("every dual-feasible point pins all multipliers to zero:");
    println!("  dual value:   {} ({:?})", ds.objective, ds.status);

    let rep = classical::report(&fs, &tol).unwrap();
    println!("\nduality report:");
    println!("  gap      = {}", rep.gap);
    println!("  primal Slater: {:?}, dual Slater: {:?}", rep.slater_primal, rep.slater_dual);
    println!("  verdict  = {:?}", rep.verdict);
    println!("\nno Slater point exists on either side, and the gap is exactly 1;");
    println!("eliminating the redundant variable x1 by hand would produce an");
    println!("equivalent linear program with a strong dual.");
}
