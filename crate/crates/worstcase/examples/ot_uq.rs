//! Worst-case expectations over optimal-transport balls: a radius sweep,
//! both reformulations, and the worst-case distribution.
//!
//! Run with `cargo run --example ot_uq`.

use worstcase::dro::{DiscreteDistribution, Disutility};
use worstcase::expr::{FunctionExpr, Norm};
use worstcase::ext::Tolerances;
use worstcase::ot::{
    build_ot_dual_cvx_explicit, build_ot_primal_cvx, optimal_distribution, oracle_ot_worst_case,
    wasserstein_cost, OTAmbiguity,
};
use worstcase::robust::UncertaintySet;
use worstcase::solver;

fn main() {
    let tol = Tolerances::default();
    let g = Disutility::new(vec![
        FunctionExpr::affine(vec![-1.0], 0.0),
        FunctionExpr::affine(vec![1.0], 0.0),
    ])
    .unwrap();
    let make = |eps: f64| {
        OTAmbiguity::wasserstein(
            DiscreteDistribution::new(vec![(vec![0.0], 1.0)]).unwrap(),
            wasserstein_cost(1.0, Norm::L2).unwrap(),
            eps,
            UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap(),
        )
        .unwrap()
    };

    println!("worst-case E[|z|] over transport balls around the point mass at 0");
    println!("(support [-1, 1], cost |z - z'|):\n");
    println!("  radius   minimization   maximization");
    for i in 0..=10 {
        let eps = i as f64 * 0.1;
        let o = make(eps);
        let p = build_ot_primal_cvx(&o, &g, &tol).unwrap();
        let d = build_ot_dual_cvx_explicit(&o, &g, &tol).unwrap();
        let (ps, ds) = solver::solve_pair(&p, &d, &tol).unwrap();
        println!(
            "  {eps:<8.1} {:<14.6} {:<14.6}",
            ps.objective.as_f64(),
            ds.objective.as_f64()
        );
    }
    println!("  (the value is min(radius, 1): mass moves to |z| = 1 at unit cost)");

    let o = make(0.5);
    let d = build_ot_dual_cvx_explicit(&o, &g, &tol).unwrap();
    let ds = solver::solve(&d, &tol).unwrap();
    let dist = optimal_distribution(&o, &g, &d, &ds, &tol).unwrap();
    println!("\nworst-case distribution at radius 0.5:");
    for (z, p) in &dist.atoms {
        println!("  z = {:>8.5}  with probability {:.5}", z[0], p);
    }
    let (ov, _) = oracle_ot_worst_case(&o, &g, &[-1.0], &[1.0], 1e-3, &tol).unwrap();
    println!("grid LP oracle at radius 0.5: {ov:.6}");
}
