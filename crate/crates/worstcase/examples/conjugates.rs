//! Closed-form conjugates, biconjugates, and the norm-power table, all
//! cross-checked against the brute-force grid Legendre transform.
//!
//! Run with `cargo run --example conjugates`.

use worstcase::expr::{norm_power_conjugate, FunctionExpr, Norm};
use worstcase::oracle;

fn main() {
    let atoms: Vec<(&str, FunctionExpr)> = vec![
        ("x^2/2", FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap()),
        ("|x|", FunctionExpr::norm_power(1.0, 1.0, Norm::L2, 1).unwrap()),
        ("e^{-x}", FunctionExpr::exponential(-1.0).unwrap()),
        ("-ln x", FunctionExpr::neg_log()),
        (
            "support of [-1,1]",
            FunctionExpr::support_of_box(vec![-1.0], vec![1.0]).unwrap(),
        ),
    ];

    println!("conjugate values vs the grid Legendre oracle (window [-8, 8]):");
    for (name, f) in &atoms {
        let conj = f.conjugate().unwrap();
        print!("  {name:<18}");
        for w in [-1.0, 0.0, 0.5, 1.0] {
            let closed = conj.eval(&[w]).unwrap();
            let grid =
                oracle::grid_legendre_refined(f, &[-8.0], &[8.0], 0.05, &[w], 4).unwrap();
            print!("  f*({w:>4}) = {closed} (grid {grid:.6})");
        }
        println!();
    }

    println!("\nbiconjugates reproduce the original on a probe grid:");
    for (name, f) in &atoms {
        let bi = f.biconjugate().unwrap();
        let mut worst: f64 = 0.0;
        for i in -20..=20 {
            let x = i as f64 * 0.1;
            let a = f.eval(&[x]).unwrap();
            let b = bi.eval(&[x]).unwrap();
            if let (worstcase::ext::Finite(u), worstcase::ext::Finite(v)) = (a, b) {
                worst = worst.max((u - v).abs());
            }
        }
        println!("  {name:<18} max |f - f**| on finite points: {worst:.2e}");
    }

    println!("\nnorm-power conjugate exponents and coefficients:");
    for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
        let c = norm_power_conjugate(p).unwrap();
        match c.phi {
            Some(phi) => println!("  p = {p:<4}: q = {:>4}, phi(q) = {phi:.6}", c.q),
            None => println!("  p = {p:<4}: q = inf, conjugate term is the dual-unit-ball indicator"),
        }
    }
}
