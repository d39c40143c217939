//! Closed perspectives at the boundary `t = 0`: why the recession function
//! is the right value and how naive limits go wrong.
//!
//! Run with `cargo run --example perspectives`.

use worstcase::expr::{FunctionExpr, Norm};
use worstcase::oracle;

fn main() {
    // f = indicator of {1}: the perspective is the indicator of {t}
    let f = FunctionExpr::indicator_singleton(vec![1.0]);
    println!("f = indicator of {{1}}; perspective t*f(x/t) = indicator of {{t}}:");
    for (x, t) in [(0.5, 0.5), (0.25, 0.25), (0.5, 0.25)] {
        println!(
            "  perspective({x}, {t}) = {}",
            f.perspective_eval(&[x], t).unwrap()
        );
    }
    println!(
        "  at t = 0 the closed value is the indicator of {{0}}: persp(0, 0) = {}, persp(0.3, 0) = {}",
        f.perspective_eval(&[0.0], 0.0).unwrap(),
        f.perspective_eval(&[0.3], 0.0).unwrap()
    );

    // the naive fixed-x limit disagrees at x = 0
    let fixed: Vec<(Vec<f64>, f64)> = (1..500).map(|k| (vec![0.0], 1.0 / k as f64)).collect();
    let naive = oracle::liminf_perspective_probe(&f, &fixed).unwrap();
    println!("  naive fixed-x limit at x = 0: {naive} (the closed value is 0)");
    let moving: Vec<(Vec<f64>, f64)> = (1..500)
        .map(|k| {
            let t = 1.0 / k as f64;
            (vec![t], t)
        })
        .collect();
    let liminf = oracle::liminf_perspective_probe(&f, &moving).unwrap();
    println!("  joint (x', t') -> (0, 0) lim inf: {liminf} (matches the closed value)");

    // f = |x|: the perspective is |x| for every t >= 0, including t = 0
    let g = FunctionExpr::norm_power(1.0, 1.0, Norm::L2, 1).unwrap();
    println!("\nf = |x|; the perspective collapses to |x| for all t >= 0:");
    for (x, t) in [(0.7, 0.3), (-2.0, 1.5), (0.9, 0.0)] {
        println!(
            "  perspective({x}, {t}) = {}",
            g.perspective_eval(&[x], t).unwrap()
        );
    }
    println!(
        "  recession value at 0.9: {} (a {{0}}-indicator convention would not be closed here)",
        g.recession_value(&[0.9]).unwrap()
    );

    // recession functions of a few atoms
    println!("\nrecession functions (the t = 0 branch of every perspective):");
    let cases: Vec<(&str, FunctionExpr, Vec<f64>)> = vec![
        (
            "e^x at  1",
            FunctionExpr::exponential(1.0).unwrap(),
            vec![1.0],
        ),
        (
            "e^x at -1",
            FunctionExpr::exponential(1.0).unwrap(),
            vec![-1.0],
        ),
        (
            "indicator of [0,1] at 1",
            FunctionExpr::indicator_box(vec![0.0], vec![1.0]).unwrap(),
            vec![1.0],
        ),
        (
            "indicator of [0,inf) at 1",
            FunctionExpr::indicator_box(vec![0.0], vec![f64::INFINITY]).unwrap(),
            vec![1.0],
        ),
    ];
    for (name, f, x) in cases {
        println!("  {name:<26} -> {}", f.recession_value(&x).unwrap());
    }
}
