//! Unattained worst cases over unbounded supports: escape atoms, the index
//! partition, and the asymptotically optimal family of distributions.
//!
//! Run with `cargo run --example escape_directions`.

use worstcase::dro::{DiscreteDistribution, Disutility};
use worstcase::expr::{FunctionExpr, Norm};
use worstcase::ext::Tolerances;
use worstcase::ot::{
    asymptotic_distribution, build_ot_dual_cvx_explicit, classify_indices, optimal_distribution,
    wasserstein_cost, OTAmbiguity, OtError,
};
use worstcase::robust::UncertaintySet;
use worstcase::solver;

fn main() {
    let tol = Tolerances::default();
    // disutility max(0, z - 0.1) on the half-line with unit transport budget:
    // the supremum 1 is approached by sending vanishing mass to infinity
    let o = OTAmbiguity::wasserstein(
        DiscreteDistribution::new(vec![(vec![0.0], 1.0)]).unwrap(),
        wasserstein_cost(1.0, Norm::L2).unwrap(),
        1.0,
        UncertaintySet::box_set(vec![0.0], vec![f64::INFINITY]).unwrap(),
    )
    .unwrap();
    let g = Disutility::new(vec![
        FunctionExpr::constant(1, 0.0),
        FunctionExpr::affine(vec![-1.0], 0.1),
    ])
    .unwrap();

    let d = build_ot_dual_cvx_explicit(&o, &g, &tol).unwrap();
    let s = solver::solve(&d, &tol).unwrap();
    println!("program value: {} ({:?})", s.objective, s.status);

    let part = classify_indices(&o, &g, &d, &s, &tol).unwrap();
    println!("\nindex partition for the single nominal atom:");
    println!("  positive mass: {:?}", part.i_plus[0]);
    println!("  vanished:      {:?}", part.i_zero[0]);
    println!("  escapes:       {:?} (recession-checked)", part.i_inf[0]);

    match optimal_distribution(&o, &g, &d, &s, &tol) {
        Err(OtError::HasEscapeDirections) => {
            println!("\nno optimal distribution exists; the asymptotic family approaches the value:");
        }
        other => println!("unexpected: {other:?}"),
    }
    println!("  n     E[g]        transport cost   atoms");
    for n in [1usize, 2, 4, 8, 16, 64] {
        let pn = asymptotic_distribution(&o, &g, &d, &s, n, &tol).unwrap();
        let eg = pn.expected_disutility(&g).unwrap().as_f64();
        let assign = vec![0usize; pn.atoms.len()];
        let cost = o.transport_cost(&pn, &assign).unwrap().as_f64();
        let atoms: Vec<String> = pn
            .atoms
            .iter()
            .map(|(z, p)| format!("({:.2}, {:.4})", z[0], p))
            .collect();
        println!("  {n:<5} {eg:<11.6} {cost:<16.6} {}", atoms.join(" "));
    }
    println!("\neach family member stays inside the transport ball while the");
    println!("expected disutility increases toward the unattained supremum.");
}
