//! Proper convex cones, generalized inequalities, and C-convex functions.
//!
//! A vector function is C-convex exactly when every scalarization with a
//! dual-cone vector is convex, so everything here reduces to the scalar
//! function algebra through a stored dual-cone basis. The C-convex
//! perspective at `t = 0` is recovered by evaluating scalar recession values
//! along that basis and solving the linear system.

use crate::expr::{ExprError, FunctionExpr};
use crate::ext::{ExtReal, Finite, PosInf};
use crate::linalg::{dot, Lu, Mat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector is not in the dual cone (or is zero)")]
    NotInDualCone,
    #[error("dual-cone basis is singular; cannot invert")]
    SingularBasis,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Closed, solid, pointed convex cones with self-dual structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProperCone {
    /// `{ y : y >= 0 }`
    NonnegOrthant(usize),
    /// `{ y : ||y[..n-1]||_2 <= y[n-1] }` (tail component last)
    SecondOrderCone(usize),
}

impl ProperCone {
    pub fn dim(self) -> usize {
        match self {
            ProperCone::NonnegOrthant(n) | ProperCone::SecondOrderCone(n) => n,
        }
    }

    /// Both shipped cones are self-dual.
    pub fn dual_cone(self) -> ProperCone {
        self
    }

    /// Membership within `tol`.
    pub fn contains(self, y: &[f64], tol: f64) -> Result<bool, ConeError> {
        if y.len() != self.dim() {
            return Err(ConeError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(match self {
            ProperCone::NonnegOrthant(_) => y.iter().all(|v| *v >= -tol),
            ProperCone::SecondOrderCone(n) => {
                let head = &y[..n - 1];
                let tail = y[n - 1];
                let norm: f64 = head.iter().map(|v| v * v).sum::<f64>().sqrt();
                norm <= tail + tol
            }
        })
    }

    /// A basis of the dual cone used for scalarized perspectives: the
    /// standard basis for the orthant; `{e_n} U {e_n + e_i}` for the
    /// second-order cone (all rays in the cone, jointly invertible).
    pub fn dual_basis(self) -> Mat {
        match self {
            ProperCone::NonnegOrthant(n) => Mat::identity(n),
            ProperCone::SecondOrderCone(n) => {
                let mut rows = Vec::with_capacity(n);
                let mut en = vec![0.0; n];
                en[n - 1] = 1.0;
                rows.push(en.clone());
                for i in 0..n - 1 {
                    let mut v = en.clone();
                    v[i] = 1.0;
                    rows.push(v);
                }
                Mat::from_rows(rows)
            }
        }
    }
}

/// A C-convex vector function given by structure that keeps every
/// scalarization inside the scalar algebra.
#[derive(Debug, Clone)]
pub enum CConvexFunction {
    /// Orthant cone: one scalar convex component per coordinate.
    Componentwise {
        components: Vec<FunctionExpr>,
    },
    /// Second-order cone: affine head `H z + e`, convex scalar tail.
    SocStructured {
        head_mat: Mat,
        head_off: Vec<f64>,
        tail: FunctionExpr,
    },
}

impl CConvexFunction {
    pub fn componentwise(components: Vec<FunctionExpr>) -> Result<Self, ConeError> {
        let dim = components
            .first()
            .map(|f| f.dim())
            .ok_or(ConeError::DimensionMismatch {
                expected: 1,
                got: 0,
            })?;
        for f in &components {
            if f.dim() != dim {
                return Err(ConeError::DimensionMismatch {
                    expected: dim,
                    got: f.dim(),
                });
            }
            if !f.is_convex() {
                return Err(ConeError::Expr(ExprError::NotConvex(
                    "every orthant component must be convex".into(),
                )));
            }
        }
        Ok(CConvexFunction::Componentwise { components })
    }

    pub fn soc_structured(
        head_mat: Mat,
        head_off: Vec<f64>,
        tail: FunctionExpr,
    ) -> Result<Self, ConeError> {
        if head_mat.cols != tail.dim() || head_mat.rows != head_off.len() {
            return Err(ConeError::DimensionMismatch {
                expected: tail.dim(),
                got: head_mat.cols,
            });
        }
        if !tail.is_convex() {
            return Err(ConeError::Expr(ExprError::NotConvex(
                "the SOC tail component must be convex".into(),
            )));
        }
        Ok(CConvexFunction::SocStructured {
            head_mat,
            head_off,
            tail,
        })
    }

    pub fn arg_dim(&self) -> usize {
        match self {
            CConvexFunction::Componentwise { components } => components[0].dim(),
            CConvexFunction::SocStructured { tail, .. } => tail.dim(),
        }
    }

    pub fn cone(&self) -> ProperCone {
        match self {
            CConvexFunction::Componentwise { components } => {
                ProperCone::NonnegOrthant(components.len())
            }
            CConvexFunction::SocStructured { head_mat, .. } => {
                ProperCone::SecondOrderCone(head_mat.rows + 1)
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<ExtReal>, ConeError> {
        Ok(match self {
            CConvexFunction::Componentwise { components } => components
                .iter()
                .map(|f| f.eval(x))
                .collect::<Result<_, _>>()?,
            CConvexFunction::SocStructured {
                head_mat,
                head_off,
                tail,
            } => {
                let mut out: Vec<ExtReal> = head_mat
                    .mul_vec(x)
                    .into_iter()
                    .zip(head_off)
                    .map(|(v, o)| Finite(v + o))
                    .collect();
                out.push(tail.eval(x)?);
                out
            }
        })
    }
}

/// `lambda' f` as a certified convex scalar expression. `lambda` must be a
/// nonzero element of the dual cone (within `tol`).
pub fn scalarize(
    f: &CConvexFunction,
    lambda: &[f64],
    tol: f64,
) -> Result<FunctionExpr, ConeError> {
    let cone = f.cone();
    if lambda.len() != cone.dim() {
        return Err(ConeError::DimensionMismatch {
            expected: cone.dim(),
            got: lambda.len(),
        });
    }
    let norm: f64 = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= tol || !cone.dual_cone().contains(lambda, tol)? {
        return Err(ConeError::NotInDualCone);
    }
    Ok(match f {
        CConvexFunction::Componentwise { components } => {
            let n = components[0].dim();
            let mut acc: Option<FunctionExpr> = None;
            let mut lin = vec![0.0; n];
            let mut cst = 0.0;
            for (coef, comp) in lambda.iter().zip(components) {
                let c = coef.max(0.0); // clip tol-level negatives
                if c == 0.0 {
                    continue;
                }
                if comp.is_affine() {
                    // folded into the linear part to keep the tree shallow
                    let (a, b) = affine_parts(comp, n)?;
                    for (li, ai) in lin.iter_mut().zip(&a) {
                        *li += c * ai;
                    }
                    cst += c * b;
                    continue;
                }
                let scaled = FunctionExpr::scale(c, comp.clone())?;
                acc = Some(match acc {
                    None => scaled,
                    Some(prev) => sum_same_arg(prev, scaled)?,
                });
            }
            let base = acc.unwrap_or_else(|| FunctionExpr::constant(n, 0.0));
            FunctionExpr::plus_affine(base, lin, cst)?
        }
        CConvexFunction::SocStructured {
            head_mat,
            head_off,
            tail,
        } => {
            let m = head_mat.rows;
            let (head_l, tail_l) = lambda.split_at(m);
            let t = tail_l[0].max(0.0);
            let lin = head_mat.tr_mul_vec(head_l);
            let cst = dot(head_l, head_off);
            if t == 0.0 {
                // boundary lambda with zero tail also has zero head in the SOC dual
                FunctionExpr::affine(lin, cst)
            } else {
                FunctionExpr::plus_affine(FunctionExpr::scale(t, tail.clone())?, lin, cst)?
            }
        }
    })
}

// Sum of two convex expressions in the same argument. Only used for
// scalarization, where all but at most one summand is affine or where both
// have full domains, so properness of the sum is not at risk.
fn sum_same_arg(a: FunctionExpr, b: FunctionExpr) -> Result<FunctionExpr, ExprError> {
    let n = a.dim();
    // stack (x) -> (x, x) and apply a disjoint-block sum on the doubled space
    let mut stack = Mat::zeros(2 * n, n);
    for i in 0..n {
        stack[(i, i)] = 1.0;
        stack[(n + i, i)] = 1.0;
    }
    let doubled = FunctionExpr::sum_blocks(
        2 * n,
        vec![(a, (0..n).collect()), (b, (n..2 * n).collect())],
    )?;
    FunctionExpr::affine_precompose(doubled, stack, vec![0.0; 2 * n])
}

fn affine_parts(f: &FunctionExpr, dim: usize) -> Result<(Vec<f64>, f64), ExprError> {
    // evaluate an affine expression's coefficients by probing
    let zero = vec![0.0; dim];
    let b = match f.eval(&zero)? {
        Finite(v) => v,
        _ => {
            return Err(ExprError::BadParameter(
                "affine expression evaluated to infinity".into(),
            ))
        }
    };
    let mut a = vec![0.0; dim];
    for i in 0..dim {
        let mut e = zero.clone();
        e[i] = 1.0;
        match f.eval(&e)? {
            Finite(v) => a[i] = v - b,
            _ => {
                return Err(ExprError::BadParameter(
                    "affine expression evaluated to infinity".into(),
                ))
            }
        }
    }
    Ok((a, b))
}

/// The C-convex perspective `t f(x/t)`, with the `t = 0` value obtained by
/// solving `Lambda v = b(x)` where `b` collects scalar recession values
/// along the stored dual basis. Returns one extended real per cone row.
pub fn c_perspective_eval(
    f: &CConvexFunction,
    x: &[f64],
    t: f64,
) -> Result<Vec<ExtReal>, ConeError> {
    if x.len() != f.arg_dim() {
        return Err(ConeError::DimensionMismatch {
            expected: f.arg_dim(),
            got: x.len(),
        });
    }
    let cone = f.cone();
    if t < 0.0 {
        return Ok(vec![PosInf; cone.dim()]);
    }
    if t > 0.0 {
        let scaled: Vec<f64> = x.iter().map(|v| v / t).collect();
        let vals = f.eval(&scaled)?;
        return vals
            .into_iter()
            .map(|v| match v {
                Finite(w) => Ok(Finite(t * w)),
                inf => Ok(inf),
            })
            .collect();
    }
    // t = 0: scalar recessions along the basis rows, then solve. The orthant
    // basis is diagonal, so the solve is componentwise and infinities stay in
    // their own row; for the SOC any infinite row means the limit escapes the
    // space, i.e. the +inf sentinel of the partial order.
    if let CConvexFunction::Componentwise { components } = f {
        return Ok(components
            .iter()
            .map(|c| c.recession_value(x))
            .collect::<Result<_, _>>()?);
    }
    let basis = cone.dual_basis();
    let tol = 1e-9;
    let mut b = Vec::with_capacity(cone.dim());
    for r in 0..basis.rows {
        let lam = basis.row(r).to_vec();
        let scalar = scalarize(f, &lam, tol)?;
        match scalar.recession_value(x)? {
            Finite(v) => b.push(v),
            PosInf => return Ok(vec![PosInf; cone.dim()]),
            ExtReal::NegInf => return Ok(vec![ExtReal::NegInf; cone.dim()]),
        }
    }
    let lu = Lu::factor(basis).ok_or(ConeError::SingularBasis)?;
    Ok(lu.solve(&b).into_iter().map(Finite).collect())
}

/// Scalar recession value of `lambda' f`, used by the property tests.
pub fn scalarized_recession(
    f: &CConvexFunction,
    lambda: &[f64],
    x: &[f64],
    tol: f64,
) -> Result<ExtReal, ConeError> {
    let s = scalarize(f, lambda, tol)?;
    Ok(s.recession_value(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Norm;

    #[test]
    fn self_duality_and_membership() {
        assert_eq!(
            ProperCone::NonnegOrthant(3).dual_cone(),
            ProperCone::NonnegOrthant(3)
        );
        assert_eq!(
            ProperCone::SecondOrderCone(3).dual_cone(),
            ProperCone::SecondOrderCone(3)
        );
        let soc = ProperCone::SecondOrderCone(3);
        assert!(soc.contains(&[1.0, 0.0, 2.0], 1e-9).unwrap());
        assert!(!soc.contains(&[2.0, 0.0, 1.0], 1e-9).unwrap());
        let orth = ProperCone::NonnegOrthant(2);
        assert!(orth.contains(&[0.0, 1.0], 1e-9).unwrap());
    }

    #[test]
    fn dual_membership_matches_sampling() {
        // y in C* iff lambda' y >= 0 for sampled lambda in C
        let soc = ProperCone::SecondOrderCone(3);
        let mut inside = vec![];
        for i in 0..32 {
            let a = (i as f64) * 0.19634954084936207; // pi/16
            inside.push(vec![0.9 * a.cos(), 0.9 * a.sin(), 1.0]);
        }
        for y in [
            vec![0.5, 0.5, 1.0],
            vec![0.0, 0.0, 0.1],
            vec![1.0, 1.0, 1.0],
            vec![3.0, 0.0, 1.0],
        ] {
            let member = soc.contains(&y, 1e-9).unwrap();
            let sampled_ok = inside.iter().all(|l| dot(l, &y) >= -1e-9);
            // sampling on a strict inner sweep can only over-approve boundary
            // cases; members always pass
            if member {
                assert!(sampled_ok);
            }
            if !sampled_ok {
                assert!(!member);
            }
        }
    }

    #[test]
    fn orthant_scalarization_picks_and_combines() {
        let f = CConvexFunction::componentwise(vec![
            FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap(),
            FunctionExpr::norm_power(1.0, 1.0, Norm::L2, 1).unwrap(),
        ])
        .unwrap();
        let pick = scalarize(&f, &[1.0, 0.0], 1e-9).unwrap();
        assert_eq!(pick.eval(&[3.0]).unwrap(), Finite(9.0));
        let combo = scalarize(&f, &[1.0, 1.0], 1e-9).unwrap();
        assert_eq!(combo.eval(&[-2.0]).unwrap(), Finite(6.0));
        assert!(scalarize(&f, &[1.0, -1.0], 1e-9).is_err());
        assert!(scalarize(&f, &[0.0, 0.0], 1e-9).is_err());
    }

    #[test]
    fn componentwise_perspective_at_zero() {
        // f = (|x|, delta_{1}): at t = 0 gives (|x|, delta_0(x))
        let f = CConvexFunction::componentwise(vec![
            FunctionExpr::norm_power(1.0, 1.0, Norm::L2, 1).unwrap(),
            FunctionExpr::indicator_singleton(vec![1.0]),
        ])
        .unwrap();
        let v = c_perspective_eval(&f, &[0.3], 0.0).unwrap();
        assert_eq!(v[0], Finite(0.3));
        assert!(v[1].is_pos_inf());
        let v0 = c_perspective_eval(&f, &[0.0], 0.0).unwrap();
        assert_eq!(v0, vec![Finite(0.0), Finite(0.0)]);
    }

    #[test]
    fn identity_slice_at_t_one() {
        let f = CConvexFunction::componentwise(vec![
            FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap(),
            FunctionExpr::affine(vec![2.0], 1.0),
        ])
        .unwrap();
        let direct: Vec<ExtReal> = f.eval(&[1.5]).unwrap();
        let persp = c_perspective_eval(&f, &[1.5], 1.0).unwrap();
        assert_eq!(direct, persp);
    }
}
