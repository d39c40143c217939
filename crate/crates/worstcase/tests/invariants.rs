//! Oracle-backed property tests: every closed form is checked against a
//! brute-force reference, and the duality chains are exercised end to end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use worstcase::cone::{c_perspective_eval, scalarize, CConvexFunction, ProperCone};
use worstcase::dro::{
    build_adb_cvx, build_adb_cvx_g, build_apw_cvx, build_apw_cvx_g, epsilon_optimal_distribution,
    extract_distribution, jensen_merge, oracle_worst_case_expectation,
    slater_distribution_check, AmbiguitySet, DiscreteDistribution, Disutility,
    GeneralizedAmbiguitySet, GeneralizedComponent, GeneralizedMoment,
    SlaterDistributionCandidate,
};
use worstcase::expr::{FunctionExpr, Norm, SaddleFunction};
use worstcase::ext::{ExtReal, Finite, Tolerances};
use worstcase::linalg::{dot, Mat};
use worstcase::oracle;
use worstcase::ot::{
    build_ot_dual_cvx_explicit, build_ot_primal_cvx, oracle_ot_worst_case, wasserstein_cost,
    OTAmbiguity,
};
use worstcase::robust::{
    build_dual_best_cvx, build_primal_worst_cvx, slater_search, RobustProblem, SetAssignment,
    UncertaintySet,
};
use worstcase::solver::{self, SolveStatus};

fn tols() -> Tolerances {
    Tolerances::default()
}

// ---- function algebra ----

#[test]
fn conjugate_dominates_grid_and_tightens_under_refinement() {
    let atoms = [
        FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap(),
        FunctionExpr::norm_power(1.5, 1.0, Norm::L2, 1).unwrap(),
        FunctionExpr::exponential(1.0).unwrap(),
        FunctionExpr::neg_log(),
    ];
    for f in &atoms {
        let conj = f.conjugate().unwrap();
        for iw in -3..=3 {
            let w = iw as f64 * 0.3;
            let coarse = oracle::grid_legendre(f, &[-6.0], &[6.0], 1e-2, &[w]).unwrap();
            let fine = oracle::grid_legendre(f, &[-6.0], &[6.0], 1e-3, &[w]).unwrap();
            // refinement is monotone for maximization oracles
            assert!(fine >= coarse - 1e-12);
            match conj.eval(&[w]).unwrap() {
                Finite(v) => assert!(v >= fine - 1e-9, "domination failed at w={w}"),
                ExtReal::PosInf => {}
                ExtReal::NegInf => panic!("conjugate cannot be -inf for proper f"),
            }
        }
    }
}

#[test]
fn perspective_lower_semicontinuity_along_sampled_sequences() {
    let funcs = [
        FunctionExpr::indicator_singleton(vec![1.0]),
        FunctionExpr::norm_power(1.0, 1.0, Norm::L2, 1).unwrap(),
        FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap(),
        FunctionExpr::exponential(1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in &funcs {
        for _ in 0..20 {
            let x = rng.gen_range(-2.0..2.0);
            // perturbations shrink faster than t so the sequence approaches
            // (x, 0) and early terms cannot pollute the running infimum
            let seq: Vec<(Vec<f64>, f64)> = (50..600)
                .map(|k| {
                    let t = 1.0 / k as f64;
                    (vec![x + (k as f64).sin() * t * t], t)
                })
                .collect();
            let liminf = oracle::liminf_perspective_probe(f, &seq).unwrap();
            let closed = f.perspective_eval(&[x], 0.0).unwrap();
            // lim inf of values >= the closed value at the limit
            // a finite truncation of the sequence sits within the residual
            // perturbation scale of the true lim inf
            match closed {
                Finite(v) => assert!(liminf >= v - 1e-3, "lsc violated at x={x}: {liminf} < {v}"),
                ExtReal::PosInf => {}
                ExtReal::NegInf => unreachable!(),
            }
        }
    }
}

#[test]
fn sum_rule_matches_infimal_convolution_on_grid() {
    // g1 = x^2/2 and g2 = e^x share full domains, so the conjugate of the sum
    // equals the infimal convolution of the conjugates
    let g1 = FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap();
    let g2 = FunctionExpr::exponential(1.0).unwrap();
    let c1 = g1.conjugate().unwrap();
    let c2 = g2.conjugate().unwrap();
    for iw in -2..=2 {
        let w = iw as f64 * 0.5;
        // conjugate of the sum by grid Legendre on the sum
        let sum_eval = |x: f64| {
            let a = g1.eval(&[x]).unwrap().as_f64();
            let b = g2.eval(&[x]).unwrap().as_f64();
            a + b
        };
        let mut lhs = f64::NEG_INFINITY;
        let mut x = -8.0;
        while x <= 8.0 {
            lhs = lhs.max(w * x - sum_eval(x));
            x += 1e-3;
        }
        // infimal convolution of the closed forms on a w1-grid
        let mut rhs = f64::INFINITY;
        let mut w1 = -8.0;
        while w1 <= 8.0 {
            let a = c1.eval(&[w1]).unwrap().as_f64();
            let b = c2.eval(&[w - w1]).unwrap().as_f64();
            rhs = rhs.min(a + b);
            w1 += 1e-3;
        }
        assert!(
            (lhs - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()) + 1e-6,
            "sum rule gap at w={w}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn partial_conjugate_duality_on_grids() {
    // (f^{*1})* = (-f)^{*2} checked pointwise through grid suprema
    let saddles = [
        SaddleFunction::bi_affine(
            vec![0.5],
            0.0,
            Mat::from_rows(vec![vec![1.0]]),
            vec![-0.3],
            0.2,
        )
        .unwrap(),
        SaddleFunction::new(
            FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap(),
            Mat::from_rows(vec![vec![0.7]]),
            FunctionExpr::affine(vec![-1.0], 0.0),
        )
        .unwrap(),
    ];
    for f in &saddles {
        for ix in -2..=2 {
            for iy in -2..=2 {
                let (x, y) = (ix as f64 * 0.5, iy as f64 * 0.5);
                // grid conjugate of f^{*1} at (x, y)
                let mut sup = f64::NEG_INFINITY;
                let mut w = -6.0;
                while w <= 6.0 {
                    let mut z = -6.0;
                    while z <= 6.0 {
                        if let Finite(v) = f.partial_conjugate_1(&[w], &[z]).unwrap() {
                            sup = sup.max(x * w + y * z - v);
                        }
                        z += 0.02;
                    }
                    w += 0.02;
                }
                let direct = f.partial_conjugate_2(&[x], &[y]).unwrap();
                match direct {
                    Finite(v) => assert!(
                        (sup - v).abs() <= 1e-2 * (1.0 + v.abs()),
                        "duality mismatch at ({x},{y}): grid {sup} vs {v}"
                    ),
                    // a finite window cannot certify +inf suprema; skip
                    ExtReal::PosInf => {}
                    ExtReal::NegInf => unreachable!(),
                }
            }
        }
    }
}

#[test]
fn growth_constant_exists_for_cost_atoms() {
    // d(z) >= delta ||z|| - 1 on a sphere sweep, found by line search
    for p in [1.0f64, 1.5, 2.0] {
        let d = FunctionExpr::norm_power(p, 1.0, Norm::L2, 2).unwrap();
        let mut delta = 1.0f64;
        let found = loop {
            let mut ok = true;
            for i in 0..64 {
                let a = i as f64 * std::f64::consts::TAU / 64.0;
                for r in [0.5f64, 1.0, 2.0, 5.0, 20.0, 100.0] {
                    let z = [r * a.cos(), r * a.sin()];
                    let dv = d.eval(&z).unwrap().as_f64();
                    if dv < delta * r - 1.0 {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                break true;
            }
            delta *= 0.5;
            if delta < 1e-6 {
                break false;
            }
        };
        assert!(found, "no growth constant for p={p}");
    }
}

// ---- cone algebra ----

/// Dot product with extended values: zero coefficients drop their entries.
fn ext_dot(lam: &[f64], vals: &[ExtReal]) -> f64 {
    let mut acc = 0.0f64;
    for (l, v) in lam.iter().zip(vals) {
        if *l == 0.0 {
            continue;
        }
        match v {
            Finite(x) => acc += l * x,
            ExtReal::PosInf => return f64::INFINITY,
            ExtReal::NegInf => return f64::NEG_INFINITY,
        }
    }
    acc
}


#[test]
fn scalarization_consistency_under_perspectives() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let orthant_f = CConvexFunction::componentwise(vec![
        FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap(),
        FunctionExpr::affine(vec![2.0], 1.0),
    ])
    .unwrap();
    let soc_f = CConvexFunction::soc_structured(
        Mat::from_rows(vec![vec![1.0], vec![-0.5]]),
        vec![0.2, 0.0],
        FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap(),
    )
    .unwrap();
    for f in [&orthant_f, &soc_f] {
        let basis = f.cone().dual_basis();
        for r in 0..basis.rows {
            let lam = basis.row(r).to_vec();
            let scalar = scalarize(f, &lam, 1e-9).unwrap();
            for _ in 0..100 {
                let x = vec![rng.gen_range(-2.0..2.0)];
                let t: f64 = rng.gen_range(0.05..2.0);
                let vec_val = c_perspective_eval(f, &x, t).unwrap();
                let lhs = ext_dot(&lam, &vec_val);
                let rhs = scalar.perspective_eval(&x, t).unwrap().as_f64();
                assert!(
                    (lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()),
                    "scalarization mismatch at ({x:?}, {t})"
                );
            }
            // property (iii): at t = 0 the scalarized perspective equals the
            // scalar recession value
            for _ in 0..20 {
                let x = vec![rng.gen_range(-2.0..2.0)];
                let vec_val = c_perspective_eval(f, &x, 0.0).unwrap();
                let lhs = ext_dot(&lam, &vec_val);
                let rhs = scalar.recession_value(&x).unwrap();
                match rhs {
                    Finite(v) => assert!((lhs - v).abs() <= 1e-9 * (1.0 + v.abs())),
                    ExtReal::PosInf => assert!(lhs.is_infinite()),
                    ExtReal::NegInf => unreachable!(),
                }
            }
        }
    }
}

#[test]
fn soc_scalarization_stays_convex_on_chords() {
    let f = CConvexFunction::soc_structured(
        Mat::from_rows(vec![vec![1.0, 0.0], vec![0.3, -0.7]]),
        vec![0.0, 0.1],
        FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 2).unwrap(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        // random dual-cone vector: tail dominates the head
        let h = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let tail = f64::sqrt(h[0] * h[0] + h[1] * h[1]) + rng.gen_range(0.0..1.0);
        let lam = vec![h[0], h[1], tail];
        let scalar = scalarize(&f, &lam, 1e-9).unwrap();
        for _ in 0..20 {
            let a = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let b = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let th: f64 = rng.gen_range(0.0..1.0);
            let mix: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(u, v)| th * u + (1.0 - th) * v)
                .collect();
            let fa = scalar.eval(&a).unwrap().as_f64();
            let fb = scalar.eval(&b).unwrap().as_f64();
            let fm = scalar.eval(&mix).unwrap().as_f64();
            assert!(fm <= th * fa + (1.0 - th) * fb + 1e-9);
        }
    }
}

// ---- robust ----

fn abs_objective_on_box() -> RobustProblem {
    // f_0(x, z) = x z on Z = [-1, 1]
    RobustProblem::new(
        SaddleFunction::bi_affine(
            vec![0.0],
            0.0,
            Mat::from_rows(vec![vec![1.0]]),
            vec![0.0],
            0.0,
        )
        .unwrap(),
        vec![],
        SetAssignment::Shared(UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap()),
    )
    .unwrap()
}

#[test]
fn perspectivication_preserves_objectives_for_positive_multipliers() {
    // mapping (w, z, lambda > 0) to (w, v = lambda z, lambda) keeps the
    // dual-best objective, evaluated through the emitted program
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
        SetAssignment::Shared(UncertaintySet::box_set(vec![-2.0], vec![2.0]).unwrap()),
    )
    .unwrap();
    let db = build_dual_best_cvx(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let z0: f64 = rng.gen_range(-2.0..2.0);
        let z1: f64 = rng.gen_range(-2.0..2.0);
        let lam: f64 = rng.gen_range(0.1..2.0);
        let w1: f64 = rng.gen_range(-2.0..2.0);
        let w0 = -w1;
        let raw = worstcase::robust::dual_best_objective(
            &p,
            &[vec![w0], vec![w1]],
            &[vec![z0], vec![z1]],
            &[lam],
        )
        .unwrap();
        // program point: blocks w0, w1, z0, lambda, v1 = lambda z1
        let x = vec![w0, w1, z0, lam, lam * z1];
        let prog_val = db.objective_value(&x).unwrap();
        match (raw, prog_val) {
            (Finite(a), Finite(b)) => {
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}")
            }
            (a, b) => assert_eq!(a, b),
        }
    }
}

#[test]
fn heterogeneous_sets_match_shared_sets_when_equal() {
    let f0 = SaddleFunction::bi_affine(
        vec![1.0],
        0.0,
        Mat::from_rows(vec![vec![1.0]]),
        vec![0.5],
        0.0,
    )
    .unwrap();
    let f1 = SaddleFunction::bi_affine(
        vec![-1.0],
        -0.5,
        Mat::from_rows(vec![vec![0.3]]),
        vec![0.2],
        0.0,
    )
    .unwrap();
    let boxy = || UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap();
    let shared = RobustProblem::new(
        f0.clone(),
        vec![f1.clone()],
        SetAssignment::Shared(boxy()),
    )
    .unwrap();
    let per = RobustProblem::new(
        f0,
        vec![f1],
        SetAssignment::PerIndex(vec![boxy(), boxy()]),
    )
    .unwrap();
    type Builder =
        fn(&RobustProblem) -> Result<worstcase::program::FiniteConvexProgram, worstcase::robust::RobustError>;
    for (build, name) in [
        (build_primal_worst_cvx as Builder, "P-W'"),
        (build_dual_best_cvx as Builder, "D-B'"),
    ] {
        let a = solver::solve(&build(&shared).unwrap(), &tols()).unwrap();
        let b = solver::solve(&build(&per).unwrap(), &tols()).unwrap();
        assert!(
            (a.objective.as_f64() - b.objective.as_f64()).abs() <= 1e-6,
            "{name}: shared {:?} vs per-index {:?}",
            a.objective,
            b.objective
        );
    }
}

#[test]
fn embedded_sup_feasible_at_solved_point() {
    // at the solved x*, the grid-oracle worst case of every constraint stays
    // within the feasibility tolerance
    let f0 = SaddleFunction::bi_affine(
        vec![1.0],
        0.0,
        Mat::from_rows(vec![vec![0.5]]),
        vec![0.0],
        0.0,
    )
    .unwrap();
    let f1 = SaddleFunction::bi_affine(
        vec![-1.0],
        -1.0,
        Mat::from_rows(vec![vec![1.0]]),
        vec![0.5],
        0.0,
    )
    .unwrap();
    let zset = UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap();
    let p = RobustProblem::new(f0, vec![f1], SetAssignment::Shared(zset.clone())).unwrap();
    let pw = build_primal_worst_cvx(&p).unwrap();
    let sol = solver::solve(&pw, &tols()).unwrap();
    assert!(matches!(
        sol.status,
        SolveStatus::Optimal | SolveStatus::EpsOptimal
    ));
    let xstar = pw.block_values("x", &sol.x).unwrap();
    let grid = oracle::grid_points(&[-1.0], &[1.0], 1e-3).unwrap();
    let sup =
        oracle::grid_sup(&p.constraints[0], xstar, &zset.constraints, &grid, 1e-9).unwrap();
    assert!(sup <= tols().feas.max(1e-6), "embedded sup {sup}");
}

#[test]
fn weak_duality_between_reformulations() {
    let p = abs_objective_on_box();
    let pw = build_primal_worst_cvx(&p).unwrap();
    let db = build_dual_best_cvx(&p).unwrap();
    let (ps, ds) = solver::solve_pair(&pw, &db, &tols()).unwrap();
    assert!(ps.objective.as_f64() >= ds.objective.as_f64() - tols().opt * 100.0);
}

// ---- dro ----

fn abs_moment_instance() -> (AmbiguitySet, Disutility) {
    (
        AmbiguitySet::new(
            UncertaintySet::box_set(vec![-10.0], vec![10.0]).unwrap(),
            vec![(
                FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap(),
                1.0,
            )],
        )
        .unwrap(),
        Disutility::new(vec![
            FunctionExpr::affine(vec![-1.0], 0.0),
            FunctionExpr::affine(vec![1.0], 0.0),
        ])
        .unwrap(),
    )
}

#[test]
fn sandwich_chain_on_moment_instance() {
    let (a, g) = abs_moment_instance();
    let apw = build_apw_cvx(&a, &g, &tols()).unwrap();
    let adb = build_adb_cvx(&a, &g, &tols()).unwrap();
    let (ps, ds) = solver::solve_pair(&apw, &adb, &tols()).unwrap();
    let (oracle_value, masses) =
        oracle_worst_case_expectation(&a, &g, &[-10.0], &[10.0], 1e-2, &tols()).unwrap();
    // finite reduction value with at most I = 2 atoms (the LP basic solution)
    assert!(masses.len() <= 2 + 1, "basic solution atom count");
    let apw_v = ps.objective.as_f64();
    let adb_v = ds.objective.as_f64();
    let slack = 2e-3;
    assert!(apw_v >= oracle_value - slack, "{apw_v} vs oracle {oracle_value}");
    assert!(oracle_value >= adb_v - slack, "oracle {oracle_value} vs {adb_v}");
    assert!(apw_v >= adb_v - tols().opt * 100.0);
}

#[test]
fn strong_duality_closure_under_slater_distribution() {
    let (a, g) = abs_moment_instance();
    // uniform surrogate on [-1, 1]
    let cand = SlaterDistributionCandidate {
        weights: vec![0.5, 0.5],
        means: vec![vec![0.5], vec![-0.5]],
        moment_expectations: vec![1.0 / 3.0],
        support_expectations: vec![-9.5, -10.5, -9.5, -10.5],
        declared_absolutely_continuous: true,
    };
    let rep = slater_distribution_check(&a, &g, &cand, &tols()).unwrap();
    assert!(rep.ok, "{:?}", rep.reasons);
    let apw = build_apw_cvx(&a, &g, &tols()).unwrap();
    let adb = build_adb_cvx(&a, &g, &tols()).unwrap();
    let (ps, ds) = solver::solve_pair(&apw, &adb, &tols()).unwrap();
    assert!(
        (ps.objective.as_f64() - ds.objective.as_f64()).abs() <= tols().opt * 100.0,
        "closure gap {}",
        ps.objective.as_f64() - ds.objective.as_f64()
    );
}

#[test]
fn extraction_feasibility_and_epsilon_blend() {
    let (a, g) = abs_moment_instance();
    let adb = build_adb_cvx(&a, &g, &tols()).unwrap();
    let sol = solver::solve(&adb, &tols()).unwrap();
    let dist = extract_distribution(&adb, &sol, &tols()).unwrap();
    let total: f64 = dist.atoms.iter().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() <= 1e-9);
    for (z, _) in &dist.atoms {
        assert!(a.support.contains(z, tols().feas).unwrap());
    }
    for (h, mu) in &a.moments {
        assert!(dist.expected_moment(h).unwrap().as_f64() <= mu + tols().feas.max(1e-6));
    }

    // interior solution from the Slater surrogate construction: mass split
    // between +-1/2 (strict moment slack), Jensen-feasible
    let interior_x = {
        let mut x = vec![0.0; adb.num_vars()];
        let tau = adb.block_coords("tau").unwrap();
        let lam = adb.block_coords("lambda").unwrap();
        let om0 = adb.block_coords("omega[0]").unwrap();
        let om1 = adb.block_coords("omega[1]").unwrap();
        let v0 = adb.block_coords("v[0]").unwrap();
        let v1 = adb.block_coords("v[1]").unwrap();
        x[lam[0]] = 0.5;
        x[lam[1]] = 0.5;
        x[v0[0]] = -0.25; // piece g_1 = z ... neg piece -z: atom at -1/2
        x[v1[0]] = 0.25;
        x[om0[0]] = 0.3;
        x[om1[0]] = 0.3;
        x[tau[0]] = -0.5; // lambda g_i(v/lambda), safely below
        x[tau[1]] = -0.5;
        x
    };
    let interior = worstcase::solver::Solution {
        objective: adb.objective_value(&interior_x).unwrap(),
        x: interior_x,
        status: SolveStatus::Optimal,
        kkt_residual: 0.0,
        iterations: 0,
    };
    let eps = 0.01;
    let blended = epsilon_optimal_distribution(&adb, &sol, &interior, eps, &tols()).unwrap();
    let value = blended.expected_disutility(&g).unwrap().as_f64();
    assert!(
        value >= sol.objective.as_f64() - 2.0 * eps,
        "2eps-optimality failed: {value}"
    );
}

#[test]
fn jensen_merge_never_decreases_objective() {
    let (a, g) = abs_moment_instance();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..50 {
        let n = rng.gen_range(2..6);
        let mut atoms: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| (vec![rng.gen_range(-2.0..2.0)], rng.gen_range(0.1..1.0)))
            .collect();
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        for (_, p) in atoms.iter_mut() {
            *p /= total;
        }
        let dist = DiscreteDistribution::new(atoms).unwrap();
        let merged = jensen_merge(&dist, &g).unwrap();
        let before = dist.expected_disutility(&g).unwrap().as_f64();
        let after = merged.expected_disutility(&g).unwrap().as_f64();
        assert!(after >= before - 1e-12, "merge decreased: {before} -> {after}");
        // moments never increase either
        for (h, _) in &a.moments {
            let hb = dist.expected_moment(h).unwrap().as_f64();
            let ha = merged.expected_moment(h).unwrap().as_f64();
            assert!(ha <= hb + 1e-12);
        }
    }
}

#[test]
fn generalized_two_component_instance_matches_oracle() {
    // K = 2 disjoint intervals with p = (1/2, 1/2), g = z, h = z^2, mu = 1
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
    let apw = build_apw_cvx_g(&a, &tols()).unwrap();
    let adb = build_adb_cvx_g(&a, &tols()).unwrap();
    let (ps, ds) = solver::solve_pair(&apw, &adb, &tols()).unwrap();

    // grid LP with per-component mass constraints
    let grid = oracle::grid_points(&[0.0], &[3.0], 1e-3).unwrap();
    let mut obj = Vec::new();
    let mut group = Vec::new();
    let mut row = Vec::new();
    let mut used = Vec::new();
    for z in &grid {
        let k = if z[0] <= 1.0 + 1e-12 {
            0
        } else if z[0] >= 2.0 - 1e-12 {
            1
        } else {
            continue;
        };
        obj.push(z[0]);
        group.push(k);
        row.push(z[0] * z[0]);
        used.push(z.clone());
    }
    let lp = oracle::MassLp {
        obj,
        group,
        group_mass: vec![0.5, 0.5],
        rows: vec![(row, 3.0)],
    };
    let oracle_sol = oracle::solve_mass_lp(&lp).unwrap();
    let tol_abs = (1e-3f64).max(0.01 * oracle_sol.value.abs());
    assert!(
        (ps.objective.as_f64() - oracle_sol.value).abs() <= tol_abs,
        "apw_g {} vs oracle {}",
        ps.objective.as_f64(),
        oracle_sol.value
    );
    assert!(
        (ds.objective.as_f64() - oracle_sol.value).abs() <= tol_abs,
        "adb_g {} vs oracle {}",
        ds.objective.as_f64(),
        oracle_sol.value
    );
}

// ---- ot ----

#[test]
fn ot_primal_dual_closure_with_positive_multiplier_slater() {
    let nominal = DiscreteDistribution::new(vec![(vec![0.0], 1.0)]).unwrap();
    let o = OTAmbiguity::wasserstein(
        nominal,
        wasserstein_cost(1.0, Norm::L2).unwrap(),
        0.5,
        UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap(),
    )
    .unwrap();
    let g = Disutility::new(vec![
        FunctionExpr::affine(vec![-1.0], 0.0),
        FunctionExpr::affine(vec![1.0], 0.0),
    ])
    .unwrap();
    let primal = build_ot_primal_cvx(&o, &g, &tols()).unwrap();
    let dual = build_ot_dual_cvx_explicit(&o, &g, &tols()).unwrap();
    // all-positive-multiplier Slater point on the explicit program
    let lambda_coords = dual.block_coords("lambda[0]").unwrap();
    let slater =
        solver::slater_search_program(&dual, &tols(), true, &lambda_coords).unwrap();
    let has_positive = matches!(
        slater,
        solver::Feasibility::Point { slack, .. } if slack > tols().feas
    );
    assert!(has_positive, "{slater:?}");
    let (ps, ds) = solver::solve_pair(&primal, &dual, &tols()).unwrap();
    assert!(
        (ps.objective.as_f64() - ds.objective.as_f64()).abs() <= tols().opt * 100.0,
        "closure gap: {} vs {}",
        ps.objective.as_f64(),
        ds.objective.as_f64()
    );
}

#[test]
fn cost_conjugates_match_grid_legendre_in_2d() {
    // d*1(y, z') = y'z' + phi(q) ||y||_*^q on a 2-d window
    for (p, nrm) in [(1.0, Norm::L2), (2.0, Norm::L2), (1.5, Norm::L1)] {
        let cost = wasserstein_cost(p, nrm).unwrap();
        let zk = vec![0.3, -0.2];
        let d = cost.cost_expr(&zk).unwrap();
        let conj = d.conjugate().unwrap();
        for iy in -2..=2 {
            for jy in -2..=2 {
                let y = [iy as f64 * 0.4, jy as f64 * 0.4];
                let grid_v = oracle::grid_legendre_refined(
                    &d,
                    &[-9.0, -9.0],
                    &[9.0, 9.0],
                    0.25,
                    &y,
                    4,
                )
                .unwrap();
                match conj.eval(&y).unwrap() {
                    Finite(v) => {
                        // compare only at clearly attained suprema
                        if v - grid_v < 0.5 {
                            assert!(
                                (v - grid_v).abs() <= 1e-5 * (1.0 + v.abs()),
                                "p={p}: closed {v} vs grid {grid_v} at {y:?}"
                            );
                        }
                        // closed form from the table: y'z' + phi(q)||y||_*^q
                        if let Some(phi) = cost.phi {
                            let want =
                                dot(&y, &zk) + phi * nrm.dual().eval(&y).powf(cost.q);
                            assert!(
                                (v - want).abs() <= 1e-5 * (1.0 + want.abs()),
                                "table mismatch: {v} vs {want}"
                            );
                        }
                    }
                    ExtReal::PosInf => assert!(grid_v > 3.0 || p == 1.0),
                    ExtReal::NegInf => unreachable!(),
                }
            }
        }
    }
}

#[test]
fn two_atom_nominal_decouples_when_budget_is_loose() {
    // with a huge radius the per-atom worst cases decouple
    let nominal =
        DiscreteDistribution::new(vec![(vec![-0.5], 0.5), (vec![0.5], 0.5)]).unwrap();
    let o = OTAmbiguity::wasserstein(
        nominal,
        wasserstein_cost(1.0, Norm::L2).unwrap(),
        100.0,
        UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap(),
    )
    .unwrap();
    let g = Disutility::new(vec![
        FunctionExpr::affine(vec![-1.0], 0.0),
        FunctionExpr::affine(vec![1.0], 0.0),
    ])
    .unwrap();
    let primal = build_ot_primal_cvx(&o, &g, &tols()).unwrap();
    let sol = solver::solve(&primal, &tols()).unwrap();
    // per-atom worst of |z| on [-1,1] is 1 regardless of the atom
    assert!((sol.objective.as_f64() - 1.0).abs() <= 1e-4, "{:?}", sol.objective);
    let (ov, _) = oracle_ot_worst_case(&o, &g, &[-1.0], &[1.0], 1e-3, &tols()).unwrap();
    assert!((ov - 1.0).abs() <= 2e-3);
}


#[test]
fn boundary_only_set_is_inconclusive_and_empty_sets_flag_first() {
    // {z : z^2 <= 0} is feasible only on its boundary: the phase-1 search
    // must stay inconclusive rather than certify an interior point
    let quad = UncertaintySet::new(
        1,
        vec![FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap()],
    )
    .unwrap();
    let out = solver::feasibility(&quad.membership_program(), &tols()).unwrap();
    assert!(matches!(out, solver::Feasibility::Inconclusive), "{out:?}");

    // z <= 0 and z >= 1: the duality report flags the empty set first
    let empty = UncertaintySet::new(
        1,
        vec![
            FunctionExpr::affine(vec![1.0], 0.0),
            FunctionExpr::affine(vec![-1.0], 1.0),
        ],
    )
    .unwrap();
    let p = RobustProblem::new(
        SaddleFunction::bi_affine(
            vec![0.0],
            0.0,
            Mat::from_rows(vec![vec![1.0]]),
            vec![0.0],
            0.0,
        )
        .unwrap(),
        vec![],
        SetAssignment::Shared(empty),
    )
    .unwrap();
    match worstcase::robust::duality_report(&p, &tols()) {
        Err(worstcase::robust::RobustError::EmptyUncertaintySet { index }) => {
            assert_eq!(index, 0)
        }
        other => panic!("expected the empty-set flag, got {other:?}"),
    }
}


#[test]
fn single_piece_linear_cost_attains_on_halfline() {
    // g = z, S = [0, inf), p = 1, radius 1: the mass-balance row pins the
    // single piece's weight, so the worst case is attained at z = 1
    let o = OTAmbiguity::wasserstein(
        DiscreteDistribution::new(vec![(vec![0.0], 1.0)]).unwrap(),
        wasserstein_cost(1.0, Norm::L2).unwrap(),
        1.0,
        UncertaintySet::box_set(vec![0.0], vec![f64::INFINITY]).unwrap(),
    )
    .unwrap();
    let g = Disutility::new(vec![FunctionExpr::affine(vec![-1.0], 0.0)]).unwrap();
    let d = build_ot_dual_cvx_explicit(&o, &g, &tols()).unwrap();
    let s = solver::solve(&d, &tols()).unwrap();
    assert!((s.objective.as_f64() - 1.0).abs() <= 2e-3, "{:?}", s.objective);
    let part = worstcase::ot::classify_indices(&o, &g, &d, &s, &tols()).unwrap();
    assert_eq!(part.escapes(), 0);
    let dist = worstcase::ot::optimal_distribution(&o, &g, &d, &s, &tols()).unwrap();
    assert_eq!(dist.atoms.len(), 1);
    assert!((dist.atoms[0].0[0] - 1.0).abs() <= 5e-3, "{:?}", dist.atoms);
}

#[test]
fn ot_decision_hook_minimizes_over_appended_block() {
    // pieces g(x, z) = x + z over the ball of radius 1/2 around the point
    // mass at 0 on [-1, 1]; decision set x in [0, 2]: the optimum picks
    // x = 0 and pays the worst-case transport 1/2
    let o = OTAmbiguity::wasserstein(
        DiscreteDistribution::new(vec![(vec![0.0], 1.0)]).unwrap(),
        wasserstein_cost(1.0, Norm::L2).unwrap(),
        0.5,
        UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap(),
    )
    .unwrap();
    let piece = SaddleFunction::bi_affine(
        vec![1.0],
        0.0,
        Mat::zeros(1, 1),
        vec![1.0],
        0.0,
    )
    .unwrap();
    let x_set = vec![
        FunctionExpr::affine(vec![-1.0], 0.0), // x >= 0
        FunctionExpr::affine(vec![1.0], -2.0), // x <= 2
    ];
    let prog =
        worstcase::ot::build_ot_primal_with_decision(&o, &[piece], &x_set, &tols()).unwrap();
    let sol = solver::solve(&prog, &tols()).unwrap();
    assert!(
        (sol.objective.as_f64() - 0.5).abs() <= 1e-4,
        "value {:?} ({:?})",
        sol.objective,
        sol.status
    );
    let x = prog.block_values("x", &sol.x).unwrap();
    assert!(x[0].abs() <= 1e-4, "x = {x:?}");
}


#[test]
fn lifted_conjugate_values_match_the_grid() {
    // g(x) = (x1 + x2)^2 / 2 composes through a wide matrix, so its
    // conjugate is epigraph-lifted: finite only on the diagonal with value
    // w^2/2
    let g = FunctionExpr::affine_precompose(
        FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap(),
        Mat::from_rows(vec![vec![1.0, 1.0]]),
        vec![0.0],
    )
    .unwrap();
    let conj = g.conjugate().unwrap();
    assert!(!conj.is_closed_form());
    let v = oracle::eval_lifted_conjugate(&conj, &[0.5, 0.5], &tols()).unwrap();
    assert!((v - 0.125).abs() <= 1e-5, "lifted value {v}");
    let grid = oracle::grid_legendre_refined(
        &g,
        &[-6.0, -6.0],
        &[6.0, 6.0],
        0.2,
        &[0.5, 0.5],
        4,
    )
    .unwrap();
    assert!((v - grid).abs() <= 1e-5, "lifted {v} vs grid {grid}");
}

#[test]
fn lifted_conjugates_splice_into_programs_under_perspectives() {
    // min ||x||^2/2 subject to (x1 + x2 - 2)^2/2 - 1/2 <= 0, i.e.
    // x1 + x2 in [1, 3]: optimum (1/2, 1/2) with value 1/4. The dual side
    // carries the constraint's conjugate as a lifted block under a
    // perspective.
    let f0 = FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 2).unwrap();
    let f1 = FunctionExpr::plus_const(
        FunctionExpr::affine_precompose(
            FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap(),
            Mat::from_rows(vec![vec![1.0, 1.0]]),
            vec![-2.0],
        )
        .unwrap(),
        -0.5,
    );
    let fs = vec![f0, f1];
    let p = worstcase::robust::classical::build_primal(&fs).unwrap();
    let d = worstcase::robust::classical::build_dual(&fs).unwrap();
    assert!(
        d.notes.iter().any(|n| n.contains("lifted")),
        "the dual should record the lifted conjugate: {:?}",
        d.notes
    );
    let (ps, ds) = solver::solve_pair(&p, &d, &tols()).unwrap();
    assert!(
        (ps.objective.as_f64() - 0.25).abs() <= 1e-3,
        "primal {:?} ({:?})",
        ps.objective,
        ps.status
    );
    assert!(
        (ds.objective.as_f64() - 0.25).abs() <= 1e-3,
        "dual {:?} ({:?})",
        ds.objective,
        ds.status
    );
}

// ---- solver determinism ----

#[test]
fn repeated_solves_are_bit_identical_at_print_precision() {
    let (a, g) = abs_moment_instance();
    let apw = build_apw_cvx(&a, &g, &tols()).unwrap();
    let s1 = solver::solve(&apw, &tols()).unwrap();
    let s2 = solver::solve(&apw, &tols()).unwrap();
    assert_eq!(
        format!("{:.12e}", s1.objective.as_f64()),
        format!("{:.12e}", s2.objective.as_f64())
    );
    for (a, b) in s1.x.iter().zip(&s2.x) {
        assert_eq!(format!("{a:.12e}"), format!("{b:.12e}"));
    }
}

#[test]
fn slater_search_confirms_unbounded_dual_region_ray() {
    // the dual region of the four-constraint line instance admits a Slater
    // point and an unbounded ray
    let fs = vec![
        FunctionExpr::affine(vec![1.0], 0.0),
        FunctionExpr::affine(vec![1.0], -1.0),
        FunctionExpr::affine(vec![-1.0], 1.0),
        FunctionExpr::affine(vec![-1.0], 0.0),
    ];
    let d = worstcase::robust::classical::build_dual(&fs).unwrap();
    let slater = solver::slater_search_program(&d, &tols(), false, &[]).unwrap();
    assert!(matches!(slater, solver::Feasibility::Point { .. }));
    let probe = solver::unboundedness_probe(&d, 1e6, &tols()).unwrap();
    assert!(matches!(probe, solver::Boundedness::Unbounded { .. }));
    // the box set has a Slater point with margin 1 at the origin
    let set = UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap();
    let rep = slater_search(&set, &tols()).unwrap();
    assert!((rep.margin_all - 1.0).abs() <= 1e-6);
}
