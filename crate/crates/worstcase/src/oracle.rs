//! Brute-force reference implementations used for verification: grid
//! Legendre transforms, grid worst-case expectations (an LP over grid
//! masses), embedded-sup evaluation, and lim-inf perspective probes.
//!
//! Grids are 1-d or 2-d by design; higher-dimensional validation samples
//! random low-dimensional slices. The mass LP runs on the embedded solver's
//! LP path so the oracle never touches the perspective machinery it checks.

use crate::expr::{ExprError, FunctionExpr, SaddleFunction};
use crate::ext::Finite;
use crate::linalg::dot;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid oracles support 1-d and 2-d windows, got {0}")]
    BadDimension(usize),
    #[error("no grid point is feasible")]
    EmptyGridFeasible,
    #[error("the grid LP is infeasible (grid misses the feasible region)")]
    LpInfeasible,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// All points of the axis-aligned grid over `[lo, hi]` with step `res`.
pub fn grid_points(lo: &[f64], hi: &[f64], res: f64) -> Result<Vec<Vec<f64>>, OracleError> {
    match lo.len() {
        1 => {
            let n = ((hi[0] - lo[0]) / res).round() as usize;
            Ok((0..=n).map(|i| vec![lo[0] + res * i as f64]).collect())
        }
        2 => {
            let n0 = ((hi[0] - lo[0]) / res).round() as usize;
            let n1 = ((hi[1] - lo[1]) / res).round() as usize;
            let mut pts = Vec::with_capacity((n0 + 1) * (n1 + 1));
            for i in 0..=n0 {
                for j in 0..=n1 {
                    pts.push(vec![lo[0] + res * i as f64, lo[1] + res * j as f64]);
                }
            }
            Ok(pts)
        }
        d => Err(OracleError::BadDimension(d)),
    }
}

/// `max over the grid of w'x - f(x)`: a lower bound on `f*(w)` that converges
/// under refinement wherever the supremum is attained inside the window.
pub fn grid_legendre(
    f: &FunctionExpr,
    lo: &[f64],
    hi: &[f64],
    res: f64,
    w: &[f64],
) -> Result<f64, OracleError> {
    let mut best = f64::NEG_INFINITY;
    for x in grid_points(lo, hi, res)? {
        if let Finite(v) = f.eval(&x)? {
            best = best.max(dot(w, &x) - v);
        }
    }
    Ok(best)
}


/// Zooming variant of [`grid_legendre`]: locate the grid argmax, then refine
/// around it. Converges quadratically at interior attained suprema.
pub fn grid_legendre_refined(
    f: &FunctionExpr,
    lo: &[f64],
    hi: &[f64],
    res: f64,
    w: &[f64],
    levels: usize,
) -> Result<f64, OracleError> {
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    let mut res = res;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..levels {
        let mut arg: Option<Vec<f64>> = None;
        for x in grid_points(&lo, &hi, res)? {
            if let Finite(v) = f.eval(&x)? {
                let val = dot(w, &x) - v;
                if val > best {
                    best = val;
                    arg = Some(x);
                }
            }
        }
        let Some(center) = arg else { break };
        for k in 0..lo.len() {
            lo[k] = center[k] - 2.0 * res;
            hi[k] = center[k] + 2.0 * res;
        }
        res /= 10.0;
    }
    Ok(best)
}

/// `max over feasible grid z of f(x, z)` subject to `c_l(z) <= slack_tol`.
pub fn grid_sup(
    f: &SaddleFunction,
    x: &[f64],
    constraints: &[FunctionExpr],
    grid: &[Vec<f64>],
    slack_tol: f64,
) -> Result<f64, OracleError> {
    let mut best = f64::NEG_INFINITY;
    let mut any = false;
    for z in grid {
        let ok = constraints
            .iter()
            .map(|c| c.eval(z).map(|v| v <= Finite(slack_tol)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .all(|b| b);
        if !ok {
            continue;
        }
        any = true;
        if let Finite(v) = f.eval(x, z)? {
            best = best.max(v);
        }
    }
    if !any {
        return Err(OracleError::EmptyGridFeasible);
    }
    Ok(best)
}

/// The running infimum of `t' f(x'/t')` along a shrinking sequence
/// `(x', t') -> (x, 0)`; compares against the closed recession value in the
/// property tests.
pub fn liminf_perspective_probe(
    f: &FunctionExpr,
    seq: &[(Vec<f64>, f64)],
) -> Result<f64, OracleError> {
    let mut inf = f64::INFINITY;
    for (x, t) in seq {
        debug_assert!(*t > 0.0);
        let scaled: Vec<f64> = x.iter().map(|v| v / t).collect();
        let v = match f.eval(&scaled)? {
            Finite(v) => t * v,
            crate::ext::ExtReal::PosInf => f64::INFINITY,
            crate::ext::ExtReal::NegInf => f64::NEG_INFINITY,
        };
        inf = inf.min(v);
    }
    Ok(inf)
}

/// A worst-case-expectation LP over grid masses:
/// maximize `sum_i m_i obj_i` subject to per-group mass totals, inequality
/// moment rows and `m >= 0`.
#[derive(Debug, Clone)]
pub struct MassLp {
    /// objective coefficient per column (grid point)
    pub obj: Vec<f64>,
    /// group id per column; group `k` must total `group_mass[k]`
    pub group: Vec<usize>,
    pub group_mass: Vec<f64>,
    /// inequality rows: `sum_i coefs[i] m_i <= rhs`
    pub rows: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone)]
pub struct MassSolution {
    pub value: f64,
    /// sparse masses: (column index, probability)
    pub masses: Vec<(usize, f64)>,
}

pub fn solve_mass_lp(lp: &MassLp) -> Result<MassSolution, OracleError> {
    use crate::solver::simplex::{solve_std, LpOutcome, StdLp};
    let ncols = lp.obj.len();
    let k = lp.group_mass.len();
    let j = lp.rows.len();
    let m = k + j;
    let n = ncols + j; // slack per inequality row
    let mut cols = vec![vec![0.0; m]; n];
    for (i, &g) in lp.group.iter().enumerate() {
        cols[i][g] = 1.0;
    }
    for (r, (coefs, _)) in lp.rows.iter().enumerate() {
        for (i, c) in coefs.iter().enumerate() {
            cols[i][k + r] = *c;
        }
        cols[ncols + r][k + r] = 1.0;
    }
    let mut b = vec![0.0; m];
    b[..k].copy_from_slice(&lp.group_mass);
    for (r, (_, rhs)) in lp.rows.iter().enumerate() {
        b[k + r] = *rhs;
    }
    // maximize => minimize the negation
    let c: Vec<f64> = lp
        .obj
        .iter()
        .map(|v| -v)
        .chain(std::iter::repeat(0.0).take(j))
        .collect();
    let std = StdLp { m, n, cols, b, c };
    match solve_std(&std, 200_000) {
        LpOutcome::Optimal { y, value } => Ok(MassSolution {
            value: -value,
            masses: y
                .iter()
                .take(ncols)
                .enumerate()
                .filter(|(_, v)| **v > 1e-12)
                .map(|(i, v)| (i, *v))
                .collect(),
        }),
        LpOutcome::Unbounded { .. } => Ok(MassSolution {
            value: f64::INFINITY,
            masses: vec![],
        }),
        LpOutcome::Infeasible => Err(OracleError::LpInfeasible),
    }
}

/// Numeric minimization helper for epigraph-lifted conjugates in tests:
/// `inf over aux of expr(w ++ aux) s.t. coupling`, evaluated by the embedded
/// first-order path.
pub fn eval_lifted_conjugate(
    conj: &crate::expr::ConjugateResult,
    w: &[f64],
    tol: &crate::ext::Tolerances,
) -> Result<f64, OracleError> {
    use crate::program::{FiniteConvexProgram, Sense, Term, VarCone};
    let mut p = FiniteConvexProgram::new("lifted-conjugate-eval", Sense::Min);
    let aux = p.add_block("aux", conj.aux_dim.max(1), VarCone::Free);
    // full argument = (w fixed constants, aux): rebuild per-coordinate rows
    let total = conj.arg_dim + conj.aux_dim;
    let mut coords = Vec::with_capacity(total);
    let fixed = p.add_block("wfix", conj.arg_dim, VarCone::Free);
    for (k, &c) in fixed.iter().enumerate() {
        p.add_equality(vec![(c, 1.0)], w[k]);
        coords.push(c);
    }
    coords.extend(aux.iter().take(conj.aux_dim).copied());
    p.objective
        .push(Term::new(conj.expr.clone(), coords.clone()));
    for (row, rhs) in &conj.coupling {
        let sparse: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(i, a)| (coords[i], *a))
            .collect();
        p.add_equality(sparse, *rhs);
    }
    if conj.aux_dim == 0 {
        // aux block unused; pin it
        p.add_equality(vec![(aux[0], 1.0)], 0.0);
    }
    let sol = crate::solver::solve(&p, tol).map_err(|_| OracleError::EmptyGridFeasible)?;
    Ok(sol.objective.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Norm;

    #[test]
    fn legendre_of_half_square() {
        // f = x^2/2: f*(1) = 1/2
        let f = FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap();
        let v = grid_legendre(&f, &[-5.0], &[5.0], 1e-3, &[1.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-5, "got {v}");
    }

    #[test]
    fn legendre_detects_dual_ball() {
        let f = FunctionExpr::norm_power(1.0, 1.0, Norm::L2, 1).unwrap();
        let inside = grid_legendre(&f, &[-5.0], &[5.0], 1e-3, &[0.5]).unwrap();
        assert!(inside.abs() < 1e-9);
        let small = grid_legendre(&f, &[-5.0], &[5.0], 1e-2, &[2.0]).unwrap();
        let big = grid_legendre(&f, &[-50.0], &[50.0], 1e-2, &[2.0]).unwrap();
        assert!(big > small + 40.0, "window growth detects +inf");
    }

    #[test]
    fn mass_lp_one_point_worst_case() {
        // max E[z] s.t. E[z^2] <= 1 on a grid over [0, 10]: one point at 1
        let grid = grid_points(&[0.0], &[10.0], 1e-3).unwrap();
        let lp = MassLp {
            obj: grid.iter().map(|z| z[0]).collect(),
            group: vec![0; grid.len()],
            group_mass: vec![1.0],
            rows: vec![(grid.iter().map(|z| z[0] * z[0]).collect(), 1.0)],
        };
        let sol = solve_mass_lp(&lp).unwrap();
        assert!((sol.value - 1.0).abs() < 2e-3, "value {}", sol.value);
    }

    #[test]
    fn liminf_probe_reproduces_closedness_caveat() {
        // f = delta_{1}: naive limit at x != 0 is +inf although the closed
        // perspective at t = 0 is delta_0
        let f = FunctionExpr::indicator_singleton(vec![1.0]);
        let seq: Vec<(Vec<f64>, f64)> = (1..60).map(|k| (vec![0.3], 1.0 / k as f64)).collect();
        let probe = liminf_perspective_probe(&f, &seq).unwrap();
        assert!(probe.is_infinite() && probe > 0.0);

        // f = |x|: probe matches the recession value |x|
        let g = FunctionExpr::norm_power(1.0, 1.0, Norm::L2, 1).unwrap();
        let seq: Vec<(Vec<f64>, f64)> = (1..60)
            .map(|k| (vec![0.7 + 0.1 / k as f64], 1.0 / k as f64))
            .collect();
        let probe = liminf_perspective_probe(&g, &seq).unwrap();
        assert!((probe - 0.7).abs() < 0.02, "got {probe}");
    }
}
