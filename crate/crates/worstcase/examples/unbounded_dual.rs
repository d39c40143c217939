//! A primal with a Slater point whose dual feasible region is unbounded:
//! boundedness of the primal region is sufficient, not necessary, for dual
//! Slater points.
//!
//! Run with `cargo run --example unbounded_dual`.

use worstcase::expr::FunctionExpr;
use worstcase::ext::Tolerances;
use worstcase::robust::classical;
use worstcase::solver::{self, Boundedness};

fn main() {
    let tol = Tolerances::default();
    // minimize x subject to x <= 1, x >= 1, x >= 0
    let fs = vec![
        FunctionExpr::affine(vec![1.0], 0.0),
        FunctionExpr::affine(vec![1.0], -1.0),
        FunctionExpr::affine(vec![-1.0], 1.0),
        FunctionExpr::affine(vec![-1.0], 0.0),
    ];
    let p = classical::build_primal(&fs).unwrap();
    let d = classical::build_dual(&fs).unwrap();
    let ps = solver::solve(&p, &tol).unwrap();
    let ds = solver::solve(&d, &tol).unwrap();
    println!("primal value (x pinned to 1): {}", ps.objective);
    println!("dual value:                   {}", ds.objective);

    match solver::unboundedness_probe(&d, 1e6, &tol).unwrap() {
        Boundedness::Unbounded { ray } => {
            let pretty: Vec<f64> = ray.iter().map(|v| (v * 1e6).round() / 1e6).collect();
            println!("\nthe dual feasible region is unbounded along the certified ray");
            println!("  (blocks w0..w3, lambda): {pretty:?}");
            println!("the ray passes the recession test on every dual constraint.");
        }
        other => println!("probe outcome: {other:?}"),
    }
}
