//! Structured saddle functions `f(x, z) = p(x) + x'Qz + q(z)`.
//!
//! `p` is proper, closed, convex in `x`; `-q` is proper, closed, convex in
//! `z`; both are real-valued (full domain), so the pair is a saddle function
//! in the regularity class the reformulations need. The class is closed
//! under the partial conjugates that the robust builders consume:
//!
//!   f^{*1}(w, z)    = p*(w - Qz) - q(z)
//!   (-f)^{*2}(x, y) = p(x) + (-q)*(y + Q'x)
//!
//! and `(f^{*1})* = (-f)^{*2}` holds on grids (checked in the oracle tests).

use super::{ConjugateResult, ExprError, FunctionExpr};
use crate::ext::{ext_add, ext_scale, ExtReal, Finite, PosInf};
use crate::linalg::{dot, Mat};

#[derive(Debug, Clone)]
pub struct SaddleFunction {
    p: FunctionExpr,
    coupling: Mat,
    q_neg: FunctionExpr,
    p_conj: FunctionExpr,
    q_neg_conj: FunctionExpr,
}

impl SaddleFunction {
    /// Build from `p`, the bilinear coupling `Q` (`dim_x` by `dim_z`) and the
    /// negated concave part `q_neg = -q`.
    pub fn new(p: FunctionExpr, coupling: Mat, q_neg: FunctionExpr) -> Result<Self, ExprError> {
        if coupling.rows != p.dim() || coupling.cols != q_neg.dim() {
            return Err(ExprError::DimensionMismatch {
                expected: p.dim(),
                got: coupling.rows,
            });
        }
        if !p.is_convex() || !q_neg.is_convex() {
            return Err(ExprError::NotConvex(
                "saddle parts must carry convexity certificates".into(),
            ));
        }
        if !p.has_full_domain() || !q_neg.has_full_domain() {
            return Err(ExprError::BadParameter(
                "saddle functions must be real-valued: p and -q need full domains".into(),
            ));
        }
        let p_conj = closed_conj(&p)?;
        let q_neg_conj = closed_conj(&q_neg)?;
        Ok(SaddleFunction {
            p,
            coupling,
            q_neg,
            p_conj,
            q_neg_conj,
        })
    }

    /// Bi-affine saddle `(a'x + c) + x'Qz + (b'z + d)`.
    pub fn bi_affine(
        a: Vec<f64>,
        c: f64,
        coupling: Mat,
        b: Vec<f64>,
        d: f64,
    ) -> Result<Self, ExprError> {
        let p = FunctionExpr::affine(a, c);
        let q_neg = FunctionExpr::affine(b.iter().map(|v| -v).collect(), -d);
        SaddleFunction::new(p, coupling, q_neg)
    }

    pub fn dim_x(&self) -> usize {
        self.p.dim()
    }

    pub fn dim_z(&self) -> usize {
        self.q_neg.dim()
    }

    pub fn p(&self) -> &FunctionExpr {
        &self.p
    }

    pub fn q_neg(&self) -> &FunctionExpr {
        &self.q_neg
    }

    pub fn coupling(&self) -> &Mat {
        &self.coupling
    }

    pub fn p_conj(&self) -> &FunctionExpr {
        &self.p_conj
    }

    pub fn q_neg_conj(&self) -> &FunctionExpr {
        &self.q_neg_conj
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<ExtReal, ExprError> {
        let bil = dot(x, &self.coupling.mul_vec(z));
        let p = self.p.eval(x)?;
        let qn = self.q_neg.eval(z)?;
        Ok(ext_add(ext_add(p, Finite(bil))?, qn.neg())?)
    }

    /// `f^{*1}(w, z) = p*(w - Qz) - q(z)`.
    pub fn partial_conjugate_1(&self, w: &[f64], z: &[f64]) -> Result<ExtReal, ExprError> {
        let qz = self.coupling.mul_vec(z);
        let shifted: Vec<f64> = w.iter().zip(&qz).map(|(wi, qi)| wi - qi).collect();
        let a = self.p_conj.eval(&shifted)?;
        let b = self.q_neg.eval(z)?;
        Ok(ext_add(a, b)?)
    }

    /// `(-f)^{*2}(x, y) = p(x) + (-q)*(y + Q'x)`.
    pub fn partial_conjugate_2(&self, x: &[f64], y: &[f64]) -> Result<ExtReal, ExprError> {
        let qtx = self.coupling.tr_mul_vec(x);
        let shifted: Vec<f64> = y.iter().zip(&qtx).map(|(yi, qi)| yi + qi).collect();
        let a = self.q_neg_conj.eval(&shifted)?;
        let b = self.p.eval(x)?;
        Ok(ext_add(a, b)?)
    }

    /// The perspective `lambda * f^{*1}(w/lambda, v/lambda)` with the closed
    /// convention at `lambda = 0` (recession of `f^{*1}` jointly in `(w, v)`).
    pub fn persp_partial_conjugate_1(
        &self,
        w: &[f64],
        v: &[f64],
        lambda: f64,
    ) -> Result<ExtReal, ExprError> {
        if lambda < 0.0 {
            return Ok(PosInf);
        }
        if lambda == 0.0 {
            let qv = self.coupling.mul_vec(v);
            let shifted: Vec<f64> = w.iter().zip(&qv).map(|(wi, qi)| wi - qi).collect();
            let a = self.p_conj.recession_value(&shifted)?;
            let b = self.q_neg.recession_value(v)?;
            return Ok(ext_add(a, b)?);
        }
        let ws: Vec<f64> = w.iter().map(|x| x / lambda).collect();
        let vs: Vec<f64> = v.iter().map(|x| x / lambda).collect();
        Ok(ext_scale(lambda, self.partial_conjugate_1(&ws, &vs)?)?)
    }
}

fn closed_conj(f: &FunctionExpr) -> Result<FunctionExpr, ExprError> {
    let c: ConjugateResult = f.conjugate()?;
    if !c.is_closed_form() {
        return Err(ExprError::UnsupportedComposition(
            "saddle parts need closed-form conjugates; restructure the expression".into(),
        ));
    }
    Ok(c.expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Norm;

    fn bilinear_xz() -> SaddleFunction {
        // f(x, z) = x z
        SaddleFunction::bi_affine(
            vec![0.0],
            0.0,
            Mat::from_rows(vec![vec![1.0]]),
            vec![0.0],
            0.0,
        )
        .unwrap()
    }

    fn quad_plus_z() -> SaddleFunction {
        // f(x, z) = x^2/2 + z
        SaddleFunction::new(
            FunctionExpr::norm_power(2.0, 0.5, Norm::L2, 1).unwrap(),
            Mat::zeros(1, 1),
            FunctionExpr::affine(vec![-1.0], 0.0),
        )
        .unwrap()
    }

    #[test]
    fn partial_conjugate_1_closed_forms() {
        let f = bilinear_xz();
        // f^{*1}(w, z) = 0 if w = z else +inf
        assert_eq!(f.partial_conjugate_1(&[1.5], &[1.5]).unwrap(), Finite(0.0));
        assert!(f.partial_conjugate_1(&[1.0], &[0.5]).unwrap().is_pos_inf());

        let g = quad_plus_z();
        // g^{*1}(w, z) = w^2/2 - z
        assert_eq!(g.partial_conjugate_1(&[2.0], &[1.0]).unwrap(), Finite(1.0));
    }

    #[test]
    fn partial_conjugate_2_closed_forms() {
        // grid-oracle-validated orientation: for f = xz,
        // (-f)^{*2}(x, y) = sup_z { yz + xz } = 0 iff y = -x
        let f = bilinear_xz();
        assert_eq!(f.partial_conjugate_2(&[1.0], &[-1.0]).unwrap(), Finite(0.0));
        assert!(f.partial_conjugate_2(&[1.0], &[1.0]).unwrap().is_pos_inf());

        // for f = x^2/2 + z: (-f)^{*2}(x, y) = x^2/2 at y = -1, +inf otherwise
        let g = quad_plus_z();
        assert_eq!(g.partial_conjugate_2(&[2.0], &[-1.0]).unwrap(), Finite(2.0));
        assert!(g.partial_conjugate_2(&[2.0], &[0.0]).unwrap().is_pos_inf());
    }

    #[test]
    fn perspective_at_zero_forces_w_to_zero() {
        // 0 f^{*1}(w/0, 0/0) = delta_{0}(w) for real-valued saddles
        let g = quad_plus_z();
        assert_eq!(
            g.persp_partial_conjugate_1(&[0.0], &[0.0], 0.0).unwrap(),
            Finite(0.0)
        );
        assert!(g
            .persp_partial_conjugate_1(&[1.0], &[0.0], 0.0)
            .unwrap()
            .is_pos_inf());
    }

    #[test]
    fn real_valuedness_is_enforced() {
        // p = -log has a restricted domain, not allowed under (RF)
        let bad = SaddleFunction::new(
            FunctionExpr::neg_log(),
            Mat::zeros(1, 1),
            FunctionExpr::affine(vec![0.0], 0.0),
        );
        assert!(bad.is_err());
    }
}
