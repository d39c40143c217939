//! The dual-best formulation is non-convex; the perspectivication
//! substitution `v = lambda z` restores concavity without changing values.
//!
//! Run with `cargo run --example nonconvex_dual_best`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use worstcase::expr::{FunctionExpr, Norm, SaddleFunction};
use worstcase::linalg::Mat;
use worstcase::robust::{
    build_dual_best_cvx, dual_best_objective, RobustProblem, SetAssignment, UncertaintySet,
};

fn main() {
    // f_0(x, z0) = x z0, f_1(x, z1) = x^2/2 + z1, uncertainty set = the line
    let f0 = SaddleFunction::bi_affine(
        vec![0.0],
        0.0,
        Mat::from_rows(vec![vec![1.0]]),
        vec![0.0],
        0.0,
    )
    .unwrap();
    let f1 = SaddleFunction::new(
        FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap(),
        Mat::zeros(1, 1),
        FunctionExpr::affine(vec![-1.0], 0.0),
    )
    .unwrap();
    let p = RobustProblem::new(
        f0,
        vec![f1],
        SetAssignment::Shared(UncertaintySet::new(1, vec![]).unwrap()),
    )
    .unwrap();

    println!("raw dual-best objective at three feasible points (w0, w1, z0, z1, l):");
    let pts = [
        (1.0, -1.0, 1.0, 2.0, 0.5),
        (0.0, 0.0, 0.0, 0.0, 0.0),
        (0.5, -0.5, 0.5, 1.0, 0.25),
    ];
    for (w0, w1, z0, z1, l) in pts {
        let v = dual_best_objective(&p, &[vec![w0], vec![w1]], &[vec![z0], vec![z1]], &[l])
            .unwrap();
        println!("  ({w0:>4}, {w1:>4}, {z0:>4}, {z1:>4}, {l:>4})  ->  {v}");
    }
    println!("the midpoint of two zero-value points scores -1/4: the raw problem is non-convex.");

    let db = build_dual_best_cvx(&p).unwrap();
    println!(
        "\nthe emitted reformulation substitutes v = lambda z; checking 100 random chords:"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut mk = || {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let l: f64 = rng.gen_range(0.1..2.0);
            let v: f64 = rng.gen_range(-2.0..2.0);
            vec![a, -a, a, l, v]
        };
        let x1 = mk();
        let x2 = mk();
        let theta: f64 = rng.gen_range(0.0..1.0);
        worst = worst.max(db.chord_convexity_gap(&x1, &x2, theta).unwrap());
    }
    println!("  maximum convexity violation of the stored min form: {worst:.2e}");
    println!("  (zero: the reformulated maximization is concave)");
}
