//! Command implementations behind the thin binary: `reformulate`, `solve`,
//! `verify`, `oracle`. Each returns a canonical JSON report and a process
//! exit code (0 ok, 2 schema error, 3 unsupported composition, 4 solver
//! failure with a partial report, 5 invariant violation).

use crate::dro;
use crate::expr::{FunctionExpr, Norm};
use crate::ext::{ExtReal, Tolerances};
use crate::oracle;
use crate::ot;
use crate::program::FiniteConvexProgram;
use crate::robust::{self, Verdict};
use crate::schema::{self, ParsedSpec, ProblemSpec, SchemaError};
use crate::solver::{self, SolveStatus};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_VIOLATION: i32 = 5;

pub struct CmdOutput {
    pub report: Value,
    pub exit: i32,
}

fn schema_fail(e: &SchemaError) -> CmdOutput {
    CmdOutput {
        report: json!({"error": format!("{e}"), "kind": "schema"}),
        exit: EXIT_SCHEMA,
    }
}

fn classify_error(msg: String) -> CmdOutput {
    let unsupported = msg.contains("unsupported composition") || msg.contains("UnsupportedCone");
    CmdOutput {
        report: json!({"error": msg, "kind": if unsupported { "unsupported" } else { "solver" }}),
        exit: if unsupported { EXIT_UNSUPPORTED } else { EXIT_SOLVER },
    }
}

pub fn load_spec(text: &str) -> Result<ParsedSpec, SchemaError> {
    let v: Value = serde_json::from_str(text).map_err(|e| SchemaError::At {
        path: String::new(),
        message: format!("invalid JSON: {e}"),
    })?;
    schema::parse_spec(&v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Primal,
    Dual,
    Both,
}

fn status_str(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::EpsOptimal => "eps_optimal",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Stalled => "stalled",
    }
}

fn ext_value(v: ExtReal) -> Value {
    match v {
        ExtReal::Finite(x) => json!(schema::round12(x)),
        ExtReal::PosInf => json!("inf"),
        ExtReal::NegInf => json!("-inf"),
    }
}

fn build_programs(
    spec: &ParsedSpec,
    mode: Mode,
) -> Result<(Option<FiniteConvexProgram>, Option<FiniteConvexProgram>), String> {
    let tol = &spec.tolerances;
    let want_primal = mode != Mode::Dual;
    let want_dual = mode != Mode::Primal;
    let pack = |e: &dyn std::fmt::Display| e.to_string();
    match &spec.problem {
        ProblemSpec::Robust(p) => Ok((
            want_primal
                .then(|| robust::build_primal_worst_cvx(p))
                .transpose()
                .map_err(|e| pack(&e))?,
            want_dual
                .then(|| robust::build_dual_best_cvx(p))
                .transpose()
                .map_err(|e| pack(&e))?,
        )),
        ProblemSpec::UqMoment {
            ambiguity,
            disutility,
        } => Ok((
            want_primal
                .then(|| dro::build_apw_cvx(ambiguity, disutility, tol))
                .transpose()
                .map_err(|e| pack(&e))?,
            want_dual
                .then(|| dro::build_adb_cvx(ambiguity, disutility, tol))
                .transpose()
                .map_err(|e| pack(&e))?,
        )),
        ProblemSpec::UqMomentGeneralized(a) => Ok((
            want_primal
                .then(|| dro::build_apw_cvx_g(a, tol))
                .transpose()
                .map_err(|e| pack(&e))?,
            want_dual
                .then(|| dro::build_adb_cvx_g(a, tol))
                .transpose()
                .map_err(|e| pack(&e))?,
        )),
        ProblemSpec::UqOt {
            ambiguity,
            disutility,
        } => Ok((
            want_primal
                .then(|| ot::build_ot_primal_cvx(ambiguity, disutility, tol))
                .transpose()
                .map_err(|e| pack(&e))?,
            want_dual
                .then(|| ot::build_ot_dual_cvx_explicit(ambiguity, disutility, tol))
                .transpose()
                .map_err(|e| pack(&e))?,
        )),
    }
}

/// `reformulate`: emit the requested finite convex program as JSON. The
/// default side is the primal reformulation except for transport problems,
/// where the explicit maximization is the canonical artifact.
pub fn cmd_reformulate(spec_text: &str, mode: Option<Mode>) -> CmdOutput {
    let spec = match load_spec(spec_text) {
        Ok(s) => s,
        Err(e) => return schema_fail(&e),
    };
    let mode = mode.unwrap_or(match &spec.problem {
        ProblemSpec::UqOt { .. } => Mode::Dual,
        _ => Mode::Primal,
    });
    match build_programs(&spec, mode) {
        Ok((p, d)) => {
            let prog = p.or(d).expect("one side requested");
            CmdOutput {
                report: schema::program_to_value(&prog),
                exit: EXIT_OK,
            }
        }
        Err(e) => classify_error(e),
    }
}

/// `solve`: run builders and the solver; in mode `both` include the duality
/// report; for uncertainty-quantification problems include the worst-case
/// distribution or the asymptotic family.
pub fn cmd_solve(spec_text: &str, mode: Mode) -> CmdOutput {
    let spec = match load_spec(spec_text) {
        Ok(s) => s,
        Err(e) => return schema_fail(&e),
    };
    let tol = spec.tolerances;
    let (primal, dual) = match build_programs(&spec, mode) {
        Ok(pd) => pd,
        Err(e) => return classify_error(e),
    };
    let mut report = serde_json::Map::new();
    report.insert("schema_version".into(), json!(schema::SCHEMA_VERSION));
    let mut failed = false;

    let solve_one = |prog: &FiniteConvexProgram| -> Result<solver::Solution, String> {
        solver::solve(prog, &tol).map_err(|e| e.to_string())
    };

    let (psol, dsol) = if let (Some(p), Some(d)) = (&primal, &dual) {
        match solver::solve_pair(p, d, &tol) {
            Ok((a, b)) => (Some(a), Some(b)),
            Err(e) => return classify_error(e.to_string()),
        }
    } else {
        let ps = match &primal {
            Some(p) => match solve_one(p) {
                Ok(s) => Some(s),
                Err(e) => return classify_error(e),
            },
            None => None,
        };
        let ds = match &dual {
            Some(d) => match solve_one(d) {
                Ok(s) => Some(s),
                Err(e) => return classify_error(e),
            },
            None => None,
        };
        (ps, ds)
    };

    if let (Some(p), Some(s)) = (&primal, &psol) {
        report.insert(
            "primal".into(),
            json!({
                "provenance": p.provenance,
                "value": ext_value(s.objective),
                "status": status_str(s.status),
                "kkt_residual": schema::round12(s.kkt_residual),
                "iterations": s.iterations,
            }),
        );
        failed |= s.status == SolveStatus::Stalled;
    }
    if let (Some(d), Some(s)) = (&dual, &dsol) {
        report.insert(
            "dual".into(),
            json!({
                "provenance": d.provenance,
                "value": ext_value(s.objective),
                "status": status_str(s.status),
                "kkt_residual": schema::round12(s.kkt_residual),
                "iterations": s.iterations,
            }),
        );
        failed |= s.status == SolveStatus::Stalled;
    }
    if let (Some(a), Some(b)) = (&psol, &dsol) {
        report.insert(
            "value".into(),
            ext_value(if a.status == SolveStatus::Optimal {
                a.objective
            } else {
                b.objective
            }),
        );
        if let (ExtReal::Finite(x), ExtReal::Finite(y)) = (a.objective, b.objective) {
            report.insert("gap".into(), json!(schema::round12(x - y)));
        }
    } else if let Some(s) = psol.as_ref().or(dsol.as_ref()) {
        report.insert("value".into(), ext_value(s.objective));
    }

    // duality verdict for mode=both robust problems
    if mode == Mode::Both {
        if let ProblemSpec::Robust(p) = &spec.problem {
            match robust::duality_report(p, &tol) {
                Ok(r) => {
                    report.insert("duality".into(), duality_value(&r));
                }
                Err(robust::RobustError::SolverFailure { report: r }) => {
                    report.insert("duality".into(), duality_value(&r));
                    failed = true;
                }
                Err(e) => return classify_error(e.to_string()),
            }
        }
    }

    // worst-case distribution extraction
    match (&spec.problem, &dual, &dsol) {
        (ProblemSpec::UqMoment { .. }, Some(d), Some(s)) if s.objective.is_finite() => {
            match dro::extract_distribution(d, s, &tol) {
                Ok(dist) => {
                    report.insert("distribution".into(), dist_value(&dist));
                }
                Err(e) => {
                    report.insert("distribution_error".into(), json!(e.to_string()));
                }
            }
        }
        (ProblemSpec::UqMomentGeneralized(a), Some(d), Some(s))
            if s.objective.is_finite() =>
        {
            match dro::extract_distribution_g(a, d, s, &tol) {
                Ok(dist) => {
                    report.insert("distribution".into(), dist_value(&dist));
                }
                Err(e) => {
                    report.insert("distribution_error".into(), json!(e.to_string()));
                }
            }
        }
        (
            ProblemSpec::UqOt {
                ambiguity,
                disutility,
            },
            Some(d),
            Some(s),
        ) if s.objective.is_finite() => {
            match ot::classify_indices(ambiguity, disutility, d, s, &tol) {
                Ok(part) => {
                    report.insert(
                        "index_partition".into(),
                        json!({
                            "i_plus": part.i_plus,
                            "i_zero": part.i_zero,
                            "i_inf": part.i_inf,
                        }),
                    );
                    if part.escapes() == 0 {
                        match ot::optimal_distribution(ambiguity, disutility, d, s, &tol) {
                            Ok(dist) => {
                                report.insert("distribution".into(), dist_value(&dist));
                            }
                            Err(e) => {
                                report
                                    .insert("distribution_error".into(), json!(e.to_string()));
                            }
                        }
                    } else {
                        let mut fam = Vec::new();
                        for n in [1usize, 2, 4, 8, 16] {
                            if let Ok(pn) = ot::asymptotic_distribution(
                                ambiguity, disutility, d, s, n, &tol,
                            ) {
                                let eg = pn
                                    .expected_disutility(disutility)
                                    .map(|v| v.as_f64())
                                    .unwrap_or(f64::NAN);
                                fam.push(json!({
                                    "n": n,
                                    "expected_disutility": schema::round12(eg),
                                    "distribution": dist_value(&pn),
                                }));
                            }
                        }
                        report.insert("asymptotic_family".into(), Value::Array(fam));
                    }
                }
                Err(e) => {
                    report.insert("index_partition_error".into(), json!(e.to_string()));
                }
            }
        }
        _ => {}
    }

    CmdOutput {
        report: Value::Object(report),
        exit: if failed { EXIT_SOLVER } else { EXIT_OK },
    }
}

fn duality_value(r: &robust::DualityReport) -> Value {
    json!({
        "notes": r.notes,
        "pw": ext_value(r.pw_value),
        "db": ext_value(r.db_value),
        "gap": if r.gap.is_finite() { json!(schema::round12(r.gap)) } else { json!("inf") },
        "slater_primal": format!("{:?}", r.slater_primal).to_lowercase(),
        "slater_dual": format!("{:?}", r.slater_dual).to_lowercase(),
        "z_bounded": r.z_bounded,
        "verdict": match r.verdict {
            Verdict::StrongDualityCertified => "strong_duality_certified",
            Verdict::WeakOnly => "weak_only",
            Verdict::Inconclusive => "inconclusive",
        },
    })
}

fn dist_value(d: &dro::DiscreteDistribution) -> Value {
    Value::Array(
        d.atoms
            .iter()
            .map(|(z, p)| {
                json!({
                    "point": z.iter().map(|x| schema::round12(*x)).collect::<Vec<_>>(),
                    "prob": schema::round12(*p),
                })
            })
            .collect(),
    )
}

/// `oracle`: run the grid oracle for the spec's problem.
pub fn cmd_oracle(spec_text: &str, grid_res: Option<f64>) -> CmdOutput {
    let spec = match load_spec(spec_text) {
        Ok(s) => s,
        Err(e) => return schema_fail(&e),
    };
    let Some((lo, hi, res0)) = spec.grid.clone() else {
        return schema_fail(&SchemaError::At {
            path: "/oracle".into(),
            message: "the oracle command needs an oracle window in the spec".into(),
        });
    };
    let res = grid_res.unwrap_or(res0);
    let tol = spec.tolerances;
    let out = match &spec.problem {
        ProblemSpec::UqMoment {
            ambiguity,
            disutility,
        } => dro::oracle_worst_case_expectation(ambiguity, disutility, &lo, &hi, res, &tol)
            .map_err(|e| e.to_string()),
        ProblemSpec::UqOt {
            ambiguity,
            disutility,
        } => ot::oracle_ot_worst_case(ambiguity, disutility, &lo, &hi, res, &tol)
            .map_err(|e| e.to_string()),
        _ => Err("the oracle command supports uq_moment and uq_ot specs".into()),
    };
    match out {
        Ok((value, masses)) => CmdOutput {
            report: json!({
                "schema_version": schema::SCHEMA_VERSION,
                "oracle_value": schema::round12(value),
                "grid_res": res,
                "masses": masses.iter().map(|(z, p)| json!({
                    "point": z.iter().map(|x| schema::round12(*x)).collect::<Vec<_>>(),
                    "prob": schema::round12(*p),
                })).collect::<Vec<_>>(),
            }),
            exit: EXIT_OK,
        },
        Err(e) => classify_error(e),
    }
}

/// `verify`: run an invariant suite against the spec's objects; nonzero exit
/// (5) on any violation, naming the failed check.
pub fn cmd_verify(spec_text: &str, suite: &str, seed: u64) -> CmdOutput {
    let spec = match load_spec(spec_text) {
        Ok(s) => s,
        Err(e) => return schema_fail(&e),
    };
    let tol = spec.tolerances;
    let mut checks: Vec<(String, bool, String)> = Vec::new();
    match suite {
        "conjugates" => verify_conjugates(&spec, seed, &mut checks),
        "duality" => {
            if let Err(e) = verify_duality(&spec, &tol, seed, &mut checks) {
                return classify_error(e);
            }
        }
        "oracle" => {
            if let Err(e) = verify_oracle(&spec, &tol, &mut checks) {
                return classify_error(e);
            }
        }
        other => {
            return schema_fail(&SchemaError::At {
                path: "--suite".into(),
                message: format!("unknown suite '{other}' (conjugates|duality|oracle)"),
            })
        }
    }
    let all_ok = checks.iter().all(|(_, ok, _)| *ok);
    CmdOutput {
        report: json!({
            "schema_version": schema::SCHEMA_VERSION,
            "suite": suite,
            "checks": checks.iter().map(|(name, ok, detail)| json!({
                "check": name,
                "ok": ok,
                "detail": detail,
            })).collect::<Vec<_>>(),
        }),
        exit: if all_ok { EXIT_OK } else { EXIT_VIOLATION },
    }
}

fn shipped_atoms() -> Vec<(&'static str, FunctionExpr)> {
    vec![
        ("affine", FunctionExpr::affine(vec![1.5, -0.5], 2.0)),
        (
            "indicator_box",
            FunctionExpr::indicator_box(vec![-1.0, 0.0], vec![2.0, 3.0]).unwrap(),
        ),
        (
            "indicator_norm_ball",
            FunctionExpr::indicator_norm_ball(vec![0.5], 2.0, Norm::L2).unwrap(),
        ),
        (
            "norm_power_p2",
            FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap(),
        ),
        (
            "norm_power_p1",
            FunctionExpr::norm_power(1.0, 1.0, Norm::L2, 1).unwrap(),
        ),
        ("quad_over_lin", FunctionExpr::quad_over_lin()),
        ("exponential", FunctionExpr::exponential(-1.0).unwrap()),
        ("neg_entropy", FunctionExpr::neg_entropy()),
        ("neg_log", FunctionExpr::neg_log()),
        (
            "support_of_box",
            FunctionExpr::support_of_box(vec![-1.0], vec![1.0]).unwrap(),
        ),
    ]
}

fn verify_conjugates(spec: &ParsedSpec, seed: u64, checks: &mut Vec<(String, bool, String)>) {
    // biconjugate idempotence on a fixed grid plus seeded random points
    for (name, f) in shipped_atoms() {
        let ok = biconjugate_ok(&f, seed);
        checks.push((
            format!("biconjugate idempotence [{name}]"),
            ok,
            "f** must reproduce f on a point grid (conjugate-of-conjugate rule)".into(),
        ));
    }
    // grid-Legendre domination for a couple of 1-d atoms
    for (name, f) in shipped_atoms().into_iter().filter(|(_, f)| f.dim() == 1) {
        let mut ok = true;
        if let Ok(c) = f.conjugate() {
            if c.is_closed_form() {
                for iw in -4..=4 {
                    let w = iw as f64 * 0.45;
                    let lb = oracle::grid_legendre(&f, &[-6.0], &[6.0], 1e-3, &[w]).unwrap();
                    let cv = c.eval(&[w]).unwrap();
                    match cv {
                        ExtReal::Finite(v) => {
                            if v + 1e-9 < lb || (lb.is_finite() && v - lb > 1.0 && v < 10.0) {
                                ok = v + 1e-9 >= lb;
                            }
                        }
                        ExtReal::PosInf => {}
                        ExtReal::NegInf => ok = false,
                    }
                }
            }
        }
        checks.push((
            format!("conjugate dominates grid transform [{name}]"),
            ok,
            "closed form must dominate every grid Legendre lower bound".into(),
        ));
    }
    // supplied fixtures: claimed conjugates must match the computed ones
    for (i, (f, claimed)) in spec.conjugate_fixtures.iter().enumerate() {
        let ok = fixture_ok(f, claimed);
        checks.push((
            format!("biconjugate check [fixture {i}]"),
            ok,
            "claimed conjugate must match the conjugate table on a point grid".into(),
        ));
    }
}

fn biconjugate_ok(f: &FunctionExpr, seed: u64) -> bool {
    let Ok(bi) = f.biconjugate() else {
        return true; // lifted chains are exercised elsewhere
    };
    let mut probes = probe_points(f.dim());
    probes.extend(seeded_points(f.dim(), 40, seed));
    for x in probes {
        let a = f.eval(&x).unwrap();
        let b = bi.eval(&x).unwrap();
        match (a, b) {
            (ExtReal::Finite(u), ExtReal::Finite(v)) => {
                if (u - v).abs() > 1e-6 * (1.0 + u.abs()) {
                    return false;
                }
            }
            (u, v) if u != v => return false,
            _ => {}
        }
    }
    true
}

fn fixture_ok(f: &FunctionExpr, claimed: &FunctionExpr) -> bool {
    let Ok(c) = f.conjugate() else { return false };
    if !c.is_closed_form() || claimed.dim() != c.expr.dim() {
        return false;
    }
    let mut probes = probe_points(c.expr.dim());
    probes.extend(seeded_points(c.expr.dim(), 40, 1));
    for w in probes {
        let a = c.expr.eval(&w).unwrap();
        let b = claimed.eval(&w).unwrap();
        match (a, b) {
            (ExtReal::Finite(u), ExtReal::Finite(v)) => {
                if (u - v).abs() > 1e-6 * (1.0 + u.abs()) {
                    return false;
                }
            }
            (u, v) if u != v => return false,
            _ => {}
        }
    }
    true
}


/// Deterministic pseudo-random probe points in `[-3, 3]^dim` (a small
/// multiplicative generator keeps the binary free of extra dependencies).
fn seeded_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..count)
        .map(|_| (0..dim).map(|_| next() * 6.0 - 3.0).collect())
        .collect()
}

fn probe_points(dim: usize) -> Vec<Vec<f64>> {
    let axis = [-2.0, -0.7, -0.2, 0.0, 0.3, 0.9, 1.7];
    match dim {
        1 => axis.iter().map(|&x| vec![x]).collect(),
        2 => {
            let mut out = Vec::new();
            for &a in &axis {
                for &b in &axis {
                    out.push(vec![a, b]);
                }
            }
            out
        }
        d => axis.iter().map(|&x| vec![x; d]).collect(),
    }
}

fn verify_duality(
    spec: &ParsedSpec,
    tol: &Tolerances,
    seed: u64,
    checks: &mut Vec<(String, bool, String)>,
) -> Result<(), String> {
    let (p, d) = build_programs(spec, Mode::Both).map_err(|e| e)?;
    let (p, d) = (p.unwrap(), d.unwrap());
    let (ps, ds) = solver::solve_pair(&p, &d, tol).map_err(|e| e.to_string())?;
    let weak_ok = match (ps.objective, ds.objective) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a >= b - tol.opt * 100.0,
        (ExtReal::PosInf, _) | (_, ExtReal::NegInf) => true,
        (a, b) => a >= b,
    };
    checks.push((
        "weak duality (primal side dominates dual side)".into(),
        weak_ok,
        format!("pw = {}, db = {}", ps.objective, ds.objective),
    ));
    let gap = match (ps.objective, ds.objective) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
        _ => 0.0,
    };
    checks.push((
        "pair gap reported".into(),
        true,
        format!("max gap {}", schema::round12(gap)),
    ));
    let _ = seed;
    Ok(())
}

fn verify_oracle(
    spec: &ParsedSpec,
    tol: &Tolerances,
    checks: &mut Vec<(String, bool, String)>,
) -> Result<(), String> {
    let Some((lo, hi, res)) = spec.grid.clone() else {
        return Err("the oracle suite needs an oracle window in the spec".into());
    };
    let (value, oracle_value) = match &spec.problem {
        ProblemSpec::UqMoment {
            ambiguity,
            disutility,
        } => {
            let p = dro::build_apw_cvx(ambiguity, disutility, tol).map_err(|e| e.to_string())?;
            let d = dro::build_adb_cvx(ambiguity, disutility, tol).map_err(|e| e.to_string())?;
            let (ps, _) = solver::solve_pair(&p, &d, tol).map_err(|e| e.to_string())?;
            let (ov, _) =
                dro::oracle_worst_case_expectation(ambiguity, disutility, &lo, &hi, res, tol)
                    .map_err(|e| e.to_string())?;
            (ps.objective.as_f64(), ov)
        }
        ProblemSpec::UqOt {
            ambiguity,
            disutility,
        } => {
            let p = ot::build_ot_primal_cvx(ambiguity, disutility, tol).map_err(|e| e.to_string())?;
            let d = ot::build_ot_dual_cvx_explicit(ambiguity, disutility, tol)
                .map_err(|e| e.to_string())?;
            let (ps, _) = solver::solve_pair(&p, &d, tol).map_err(|e| e.to_string())?;
            let (ov, _) = ot::oracle_ot_worst_case(ambiguity, disutility, &lo, &hi, res, tol)
                .map_err(|e| e.to_string())?;
            (ps.objective.as_f64(), ov)
        }
        _ => return Err("the oracle suite supports uq_moment and uq_ot specs".into()),
    };
    let tol_abs = (1e-3f64).max(0.01 * oracle_value.abs());
    checks.push((
        "solver-vs-oracle agreement".into(),
        (value - oracle_value).abs() <= tol_abs,
        format!("solved {value}, oracle {oracle_value}, tolerance {tol_abs}"),
    ));
    Ok(())
}

pub fn canonical_pretty(v: &Value) -> String {
    // serde_json sorts keys (BTreeMap backend), so pretty output is canonical
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment_spec() -> String {
        json!({
            "schema_version": 1,
            "kind": "uq_moment",
            "support": {"dim": 1, "constraints": [
                {"atom": "affine", "a": [1.0], "b": -10.0},
                {"atom": "affine", "a": [-1.0], "b": 0.0},
            ]},
            "moments": [{"h": {"atom": "norm_power", "p": 2.0, "weight": 1.0, "norm": "l2", "dim": 1}, "mu": 1.0}],
            "disutility": {"neg_pieces": [{"atom": "affine", "a": [-1.0], "b": 0.0}]},
            "oracle": {"lo": [0.0], "hi": [10.0], "res": 1e-3},
        })
        .to_string()
    }

    #[test]
    fn reformulate_solve_oracle_roundtrip() {
        let spec = moment_spec();
        let out = cmd_reformulate(&spec, None);
        assert_eq!(out.exit, EXIT_OK);
        assert_eq!(out.report["provenance"], "AP-W'");
        // byte-identical re-emission through parse -> serialize
        let prog = schema::program_from_value(&out.report).unwrap();
        let again = schema::program_to_value(&prog);
        assert_eq!(
            canonical_pretty(&out.report),
            canonical_pretty(&again),
            "round trip must be byte-identical"
        );

        let solved = cmd_solve(&spec, Mode::Both);
        assert_eq!(solved.exit, EXIT_OK, "{}", solved.report);
        let v = solved.report["value"].as_f64().unwrap();
        assert!((v - 1.0).abs() < 1e-3, "value {v}");
        assert!(solved.report["distribution"].is_array());

        let orc = cmd_oracle(&spec, None);
        assert_eq!(orc.exit, EXIT_OK);
        let ov = orc.report["oracle_value"].as_f64().unwrap();
        assert!((ov - 1.0).abs() < 2e-3, "oracle {ov}");
    }


    #[test]
    fn robust_spec_through_the_cli() {
        let spec = json!({
            "schema_version": 1,
            "kind": "robust",
            "objective": {
                "p": {"atom": "affine", "a": [0.0], "b": 0.0},
                "coupling": [[1.0]],
                "q_neg": {"atom": "affine", "a": [0.0], "b": 0.0},
            },
            "uncertainty": {"dim": 1, "constraints": [
                {"atom": "affine", "a": [1.0], "b": -1.0},
                {"atom": "affine", "a": [-1.0], "b": -1.0},
            ]},
        })
        .to_string();
        let out = cmd_solve(&spec, Mode::Both);
        assert_eq!(out.exit, EXIT_OK, "{}", out.report);
        assert_eq!(
            out.report["duality"]["verdict"].as_str().unwrap(),
            "strong_duality_certified"
        );
        let v = out.report["value"].as_f64().unwrap();
        assert!(v.abs() < 1e-6, "minimax of xz on the box is 0, got {v}");
        let re = cmd_reformulate(&spec, None);
        assert_eq!(re.report["provenance"], "P-W'");
        let re = cmd_reformulate(&spec, Some(Mode::Dual));
        assert_eq!(re.report["provenance"], "D-B'");
    }

    #[test]
    fn schema_error_has_pointer_path() {
        let out = cmd_solve("{\"schema_version\": 1}", Mode::Both);
        assert_eq!(out.exit, EXIT_SCHEMA);
        assert!(out.report["error"].as_str().unwrap().contains("/kind"));
    }

    #[test]
    fn verify_conjugates_detects_corrupted_fixture() {
        let mut v: Value = serde_json::from_str(&moment_spec()).unwrap();
        v["conjugate_fixtures"] = json!([{
            // claimed conjugate of x^2/2 is w^2/2; corrupt it to w^2
            "expr": {"atom": "norm_power", "p": 2.0, "weight": 0.5, "norm": "l2", "dim": 1},
            "conjugate": {"atom": "norm_power", "p": 2.0, "weight": 1.0, "norm": "l2", "dim": 1},
        }]);
        let out = cmd_verify(&v.to_string(), "conjugates", 0);
        assert_eq!(out.exit, EXIT_VIOLATION);
        let failed: Vec<String> = out.report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| !c["ok"].as_bool().unwrap())
            .map(|c| c["check"].as_str().unwrap().to_string())
            .collect();
        assert!(failed.iter().any(|n| n.contains("biconjugate check")), "{failed:?}");
    }

    #[test]
    fn verify_clean_suites_pass() {
        let spec = moment_spec();
        assert_eq!(cmd_verify(&spec, "conjugates", 0).exit, EXIT_OK);
        assert_eq!(cmd_verify(&spec, "duality", 0).exit, EXIT_OK);
        assert_eq!(cmd_verify(&spec, "oracle", 0).exit, EXIT_OK);
    }
}
