//! The Legendre-Fenchel transform over the atom/combinator table.
//!
//! Every atom has a closed-form conjugate. Combinator rules:
//!   (f + a'x + b)*   = f*(w - a) - b
//!   (t f)*           = t f*(w/t)            for t > 0
//!   (t f(./t))*      = t f*(w)              for t > 0
//!   (f o A)*         = f* o A^{-T} - (A^{-1}b)'w   for invertible A
//!   (sum on disjoint blocks)* = sum of conjugates on the same blocks
//!   perspective(f)*  = indicator of { (w, s) : f*(w) + s <= 0 }
//!   that indicator*  = perspective(f)
//!
//! Compositions outside the table come back as epigraph-lifted programs: the
//! conjugate value is an infimum over auxiliary variables tied to the
//! argument by linear equations, which the program builders splice in as
//! extra variable blocks. Lifted values are exact when the infimum is
//! attained; builders record the one-sided caveat otherwise.

use super::{Atom, ExprError, FunctionExpr, Node, Norm};
use crate::ext::ExtReal;
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    ClosedForm,
    EpigraphLifted,
}

/// A conjugate `f*`. For closed forms this is just `expr` over the conjugate
/// argument `w`. For lifted forms, `f*(w) = inf over aux of expr(w ++ aux)`
/// subject to `coupling` rows `r . (w ++ aux) = rhs`.
#[derive(Debug, Clone)]
pub struct ConjugateResult {
    pub expr: FunctionExpr,
    pub arg_dim: usize,
    pub aux_dim: usize,
    pub coupling: Vec<(Vec<f64>, f64)>,
    pub exactness: Exactness,
}

impl ConjugateResult {
    fn closed(expr: FunctionExpr) -> Self {
        let arg_dim = expr.dim();
        ConjugateResult {
            expr,
            arg_dim,
            aux_dim: 0,
            coupling: Vec::new(),
            exactness: Exactness::ClosedForm,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        self.exactness == Exactness::ClosedForm
    }

    /// Pointwise value; closed forms only.
    pub fn eval(&self, w: &[f64]) -> Result<ExtReal, ExprError> {
        if self.is_closed_form() {
            self.expr.eval(w)
        } else {
            Err(ExprError::UnsupportedComposition(
                "epigraph-lifted conjugate has no pointwise evaluator; splice it into a program"
                    .into(),
            ))
        }
    }

    /// `g*(w) = f*(w - shift) + add_const` (from `g = f + shift'x - add_const`).
    fn shift_arg(self, shift: &[f64], add_const: f64) -> Result<Self, ExprError> {
        let n = self.arg_dim;
        let total = n + self.aux_dim;
        let mut a = Mat::identity(total);
        let _ = &mut a;
        let mut b = vec![0.0; total];
        for i in 0..n {
            b[i] = -shift[i];
        }
        let expr = FunctionExpr::plus_const(
            FunctionExpr::affine_precompose(self.expr, Mat::identity(total), b)?,
            add_const,
        );
        let coupling = self
            .coupling
            .into_iter()
            .map(|(r, rhs)| {
                let extra: f64 = r[..n].iter().zip(shift).map(|(ri, si)| ri * si).sum();
                (r, rhs + extra)
            })
            .collect();
        Ok(ConjugateResult {
            expr,
            arg_dim: n,
            aux_dim: total - n,
            coupling,
            exactness: self.exactness,
        })
    }

    /// `t f*(w/t)` for `t > 0` (the conjugate of `t f`).
    fn value_scale(self, t: f64) -> Result<Self, ExprError> {
        let total = self.arg_dim + self.aux_dim;
        let mut scale_mat = Mat::zeros(total, total);
        for i in 0..total {
            scale_mat[(i, i)] = 1.0 / t;
        }
        let expr = FunctionExpr::scale(
            t,
            FunctionExpr::affine_precompose(self.expr, scale_mat, vec![0.0; total])?,
        )?;
        let coupling = self
            .coupling
            .into_iter()
            .map(|(r, rhs)| (r, rhs * t))
            .collect();
        Ok(ConjugateResult {
            expr,
            arg_dim: self.arg_dim,
            aux_dim: total - self.arg_dim,
            coupling,
            exactness: self.exactness,
        })
    }
}

impl FunctionExpr {
    /// The conjugate `f*(w) = sup_x { w'x - f(x) }`.
    pub fn conjugate(&self) -> Result<ConjugateResult, ExprError> {
        if !self.is_convex() {
            return Err(ExprError::NotConvex(
                "conjugation requires the convexity certificate".into(),
            ));
        }
        match self.node() {
            Node::Atom(atom) => Ok(ConjugateResult::closed(conj_atom(atom)?)),
            Node::PlusAffine { a, b, inner } => inner.conjugate()?.shift_arg(a, -b),
            Node::Scale { t, inner } => inner.conjugate()?.value_scale(*t),
            Node::AffinePre { a, b, inner } => conj_affine_pre(a, b, inner),
            Node::SumBlocks { terms } => conj_sum_blocks(self.dim(), terms),
            Node::Perspective { inner } => conj_perspective(inner),
            Node::SublevelShift { inner } => conj_sublevel(inner),
            Node::MaxOfConcave { .. } => Err(ExprError::NotConvex(
                "a max of concave pieces is not convex; conjugate it piecewise".into(),
            )),
        }
    }

    /// Closed-form biconjugate where the whole chain stays closed.
    pub fn biconjugate(&self) -> Result<FunctionExpr, ExprError> {
        let c = self.conjugate()?;
        if !c.is_closed_form() {
            return Err(ExprError::UnsupportedComposition(
                "biconjugate of a lifted conjugate".into(),
            ));
        }
        let cc = c.expr.conjugate()?;
        if !cc.is_closed_form() {
            return Err(ExprError::UnsupportedComposition(
                "second conjugate came back lifted".into(),
            ));
        }
        Ok(cc.expr)
    }
}

fn conj_atom(atom: &Atom) -> Result<FunctionExpr, ExprError> {
    Ok(match atom {
        Atom::Affine { a, b } => {
            FunctionExpr::plus_const(FunctionExpr::indicator_singleton(a.clone()), -b)
        }
        Atom::IndicatorSingleton { point } => FunctionExpr::affine(point.clone(), 0.0),
        Atom::IndicatorBox { lo, hi } => FunctionExpr::support_of_box(lo.clone(), hi.clone())?,
        Atom::SupportOfBox { lo, hi } => FunctionExpr::indicator_box(lo.clone(), hi.clone())?,
        Atom::IndicatorNormBall {
            center,
            radius,
            norm,
        } => FunctionExpr::plus_affine(
            FunctionExpr::norm_power(1.0, *radius, norm.dual(), center.len())?,
            center.clone(),
            0.0,
        )?,
        Atom::NormPower {
            p,
            weight,
            norm,
            dim,
        } => conj_norm_power(*p, *weight, *norm, *dim)?,
        Atom::QuadOverLin => {
            FunctionExpr::sublevel_shift(FunctionExpr::norm_power(2.0, 0.25, Norm::L2, 1)?)?
        }
        Atom::Exponential { sign } => FunctionExpr::affine_precompose(
            FunctionExpr::neg_entropy(),
            Mat::from_rows(vec![vec![1.0 / sign]]),
            vec![0.0],
        )?,
        Atom::NegEntropy => FunctionExpr::exponential(1.0)?,
        Atom::NegLog => FunctionExpr::neg_log_conj(),
        Atom::NegLogConj => FunctionExpr::neg_log(),
    })
}

fn conj_norm_power(p: f64, weight: f64, norm: Norm, dim: usize) -> Result<FunctionExpr, ExprError> {
    if weight == 0.0 {
        // the zero function
        return Ok(FunctionExpr::indicator_singleton(vec![0.0; dim]));
    }
    if p.is_infinite() {
        // unit-ball indicator: conjugate is the dual norm
        return FunctionExpr::norm_power(1.0, 1.0, norm.dual(), dim);
    }
    if p == 1.0 {
        return FunctionExpr::indicator_norm_ball(vec![0.0; dim], weight, norm.dual());
    }
    let q = p / (p - 1.0);
    // (c ||x||^p)* = (1/q) (c p)^{1-q} ||y||_*^q
    let k = (weight * p).powf(1.0 - q) / q;
    FunctionExpr::norm_power(q, k, norm.dual(), dim)
}

fn conj_affine_pre(
    a: &Mat,
    b: &[f64],
    inner: &FunctionExpr,
) -> Result<ConjugateResult, ExprError> {
    let c = inner.conjugate()?;
    let m = inner.dim();
    let n = a.cols;

    // invertible square map: f*(A^{-T} w) - (A^{-1} b)' w
    if a.rows == a.cols {
        if let Some(a_inv) = a.inverse() {
            let a_inv_t = a_inv.transpose();
            let total = n + c.aux_dim;
            let mut big = Mat::zeros(total, total);
            for i in 0..n {
                for j in 0..n {
                    big[(i, j)] = a_inv_t[(i, j)];
                }
            }
            for k in 0..c.aux_dim {
                big[(n + k, n + k)] = 1.0;
            }
            let composed =
                FunctionExpr::affine_precompose(c.expr, big, vec![0.0; total])?;
            let a_inv_b = a_inv.mul_vec(b);
            let mut lin = vec![0.0; total];
            for i in 0..n {
                lin[i] = -a_inv_b[i];
            }
            let expr = FunctionExpr::plus_affine(composed, lin, 0.0)?;
            let coupling = c
                .coupling
                .into_iter()
                .map(|(r, rhs)| {
                    let mut nr = a_inv.tr_mul_vec(&r[..n].to_vec());
                    nr.extend_from_slice(&r[n..]);
                    (nr, rhs)
                })
                .collect::<Vec<_>>();
            return Ok(ConjugateResult {
                expr,
                arg_dim: n,
                aux_dim: c.aux_dim,
                coupling,
                exactness: c.exactness,
            });
        }
    }

    // coordinate selection: conjugate splits into f* on the picked block and
    // a zero indicator on the rest
    if let Some(picks) = a.is_selection() {
        let total = n + c.aux_dim;
        // f(x_S + b)* on the picked coords: f*(u) - b'u
        let mut lin = vec![0.0; m + c.aux_dim];
        for i in 0..m {
            lin[i] = -b[i];
        }
        let shifted = FunctionExpr::plus_affine(c.expr, lin, 0.0)?;
        let mut block: Vec<usize> = picks.clone();
        block.extend((0..c.aux_dim).map(|k| n + k));
        let mut terms = vec![(shifted, block)];
        let rest: Vec<usize> = (0..n).filter(|j| !picks.contains(j)).collect();
        if !rest.is_empty() {
            terms.push((
                FunctionExpr::indicator_singleton(vec![0.0; rest.len()]),
                rest,
            ));
        }
        let expr = FunctionExpr::sum_blocks(total, terms)?;
        let coupling = c
            .coupling
            .into_iter()
            .map(|(r, rhs)| {
                let mut nr = vec![0.0; total];
                for (i, &pi) in picks.iter().enumerate() {
                    nr[pi] = r[i];
                }
                for k in 0..c.aux_dim {
                    nr[n + k] = r[m + k];
                }
                (nr, rhs)
            })
            .collect::<Vec<_>>();
        return Ok(ConjugateResult {
            expr,
            arg_dim: n,
            aux_dim: c.aux_dim,
            coupling,
            exactness: c.exactness,
        });
    }

    // general map: lifted inf-projection
    //   g*(w) = inf_u { f*(u) - b'u : A'u = w }
    let aux_dim = m + c.aux_dim;
    let total = n + aux_dim;
    let mut lin = vec![0.0; m + c.aux_dim];
    for i in 0..m {
        lin[i] = -b[i];
    }
    let shifted = FunctionExpr::plus_affine(c.expr, lin, 0.0)?;
    let block: Vec<usize> = (n..total).collect();
    let expr = FunctionExpr::sum_blocks(total, vec![(shifted, block)])?;
    let mut coupling: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..n {
        let mut row = vec![0.0; total];
        row[j] = -1.0;
        for i in 0..m {
            row[n + i] = a[(i, j)];
        }
        coupling.push((row, 0.0));
    }
    for (r, rhs) in c.coupling {
        let mut row = vec![0.0; total];
        row[n..n + r.len()].copy_from_slice(&r);
        coupling.push((row, rhs));
    }
    Ok(ConjugateResult {
        expr,
        arg_dim: n,
        aux_dim,
        coupling,
        exactness: Exactness::EpigraphLifted,
    })
}

fn conj_sum_blocks(
    dim: usize,
    terms: &[(FunctionExpr, Vec<usize>)],
) -> Result<ConjugateResult, ExprError> {
    let mut parts = Vec::new();
    let mut aux_total = 0usize;
    let mut exactness = Exactness::ClosedForm;
    let mut raw = Vec::new();
    for (f, block) in terms {
        let c = f.conjugate()?;
        if !c.is_closed_form() {
            exactness = Exactness::EpigraphLifted;
        }
        raw.push((c, block.clone()));
    }
    for (c, _) in &raw {
        aux_total += c.aux_dim;
    }
    let total = dim + aux_total;
    let mut aux_cursor = dim;
    let mut coupling = Vec::new();
    let mut covered = vec![false; dim];
    for (c, block) in raw {
        for &i in &block {
            covered[i] = true;
        }
        let mut idx = block.clone();
        idx.extend(aux_cursor..aux_cursor + c.aux_dim);
        for (r, rhs) in &c.coupling {
            let mut row = vec![0.0; total];
            for (local, &global) in idx.iter().enumerate() {
                row[global] = r[local];
            }
            coupling.push((row, *rhs));
        }
        parts.push((c.expr, idx));
        aux_cursor += c.aux_dim;
    }
    // coordinates no term touches are pinned to zero in the conjugate
    let rest: Vec<usize> = (0..dim).filter(|&i| !covered[i]).collect();
    if !rest.is_empty() {
        parts.push((
            FunctionExpr::indicator_singleton(vec![0.0; rest.len()]),
            rest,
        ));
    }
    Ok(ConjugateResult {
        expr: FunctionExpr::sum_blocks(total, parts)?,
        arg_dim: dim,
        aux_dim: aux_total,
        coupling,
        exactness,
    })
}

fn permute_expr(expr: FunctionExpr, from_of_to: Vec<usize>) -> Result<FunctionExpr, ExprError> {
    // builds x -> expr(P x) where (P x)_k = x[from_of_to[k]]
    let n = from_of_to.len();
    let mut p = Mat::zeros(n, n);
    for (k, &src) in from_of_to.iter().enumerate() {
        p[(k, src)] = 1.0;
    }
    FunctionExpr::affine_precompose(expr, p, vec![0.0; n])
}

fn conj_perspective(inner: &FunctionExpr) -> Result<ConjugateResult, ExprError> {
    let c = inner.conjugate()?;
    let n = inner.dim();
    if c.is_closed_form() {
        return Ok(ConjugateResult::closed(FunctionExpr::sublevel_shift(
            c.expr,
        )?));
    }
    // lifted: indicator over (w, s) with auxiliaries u. SublevelShift expects
    // its shift coordinate last, so build over (w, u, s) then map from
    // (w, s, u).
    let aux = c.aux_dim;
    let ind = FunctionExpr::sublevel_shift(c.expr)?; // over (w, u, s)
    let mut from_of_to = Vec::with_capacity(n + aux + 1);
    for i in 0..n {
        from_of_to.push(i); // w
    }
    for k in 0..aux {
        from_of_to.push(n + 1 + k); // u sits after s in the outer layout
    }
    from_of_to.push(n); // s
    let expr = permute_expr(ind, from_of_to)?;
    let coupling = c
        .coupling
        .into_iter()
        .map(|(r, rhs)| {
            let mut row = vec![0.0; n + 1 + aux];
            row[..n].copy_from_slice(&r[..n]);
            for k in 0..aux {
                row[n + 1 + k] = r[n + k];
            }
            (row, rhs)
        })
        .collect();
    Ok(ConjugateResult {
        expr,
        arg_dim: n + 1,
        aux_dim: aux,
        coupling,
        exactness: Exactness::EpigraphLifted,
    })
}

fn conj_sublevel(inner: &FunctionExpr) -> Result<ConjugateResult, ExprError> {
    let c = inner.conjugate()?;
    let n = inner.dim();
    if c.is_closed_form() {
        return Ok(ConjugateResult::closed(FunctionExpr::perspective(c.expr)?));
    }
    // lifted: value at (x, t) is inf_u perspective of the lifted expression,
    // with coupling scaled by t: r.(x, u) = rhs * t.
    let aux = c.aux_dim;
    let pers = FunctionExpr::perspective(c.expr)?; // over (x, u, t)
    let mut from_of_to = Vec::with_capacity(n + aux + 1);
    for i in 0..n {
        from_of_to.push(i); // x
    }
    for k in 0..aux {
        from_of_to.push(n + 1 + k); // u
    }
    from_of_to.push(n); // t
    let expr = permute_expr(pers, from_of_to)?;
    let coupling = c
        .coupling
        .into_iter()
        .map(|(r, rhs)| {
            let mut row = vec![0.0; n + 1 + aux];
            row[..n].copy_from_slice(&r[..n]);
            row[n] = -rhs;
            for k in 0..aux {
                row[n + 1 + k] = r[n + k];
            }
            (row, 0.0)
        })
        .collect();
    Ok(ConjugateResult {
        expr,
        arg_dim: n + 1,
        aux_dim: aux,
        coupling,
        exactness: Exactness::EpigraphLifted,
    })
}

/// Which of the two scaling rules of the conjugate calculus to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleRule {
    /// `(t f)*(w) = t f*(w/t)`
    ValueScale,
    /// `(t f(./t))*(w) = t f*(w)`
    ArgScale,
}

/// Conjugates of scaled functions, `t > 0`.
pub fn scale_conjugate(
    t: f64,
    f: &FunctionExpr,
    rule: ScaleRule,
) -> Result<ConjugateResult, ExprError> {
    if !(t > 0.0) {
        return Err(ExprError::NonpositiveScale(t));
    }
    let c = f.conjugate()?;
    match rule {
        ScaleRule::ValueScale => c.value_scale(t),
        ScaleRule::ArgScale => {
            let expr = FunctionExpr::scale(t, c.expr)?;
            Ok(ConjugateResult {
                expr,
                arg_dim: c.arg_dim,
                aux_dim: c.aux_dim,
                coupling: c
                    .coupling
                    .into_iter()
                    .map(|(r, rhs)| (r, rhs))
                    .collect(),
                exactness: c.exactness,
            })
        }
    }
}

/// Closed-form data for conjugates of `(1/p)||.||^p` and of norm-power
/// transport costs: the dual exponent and the coefficient
/// `phi(q) = (q-1)^(q-1)/q^q`. `phi` is `None` when `q` is infinite, in which
/// case the conjugate term is the dual-unit-ball indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPowerConjugate {
    pub q: f64,
    pub phi: Option<f64>,
}

pub fn norm_power_conjugate(p: f64) -> Result<NormPowerConjugate, ExprError> {
    if !(p >= 1.0) {
        return Err(ExprError::BadParameter(format!(
            "norm power needs p >= 1, got {p}"
        )));
    }
    if p == 1.0 {
        return Ok(NormPowerConjugate {
            q: f64::INFINITY,
            phi: None,
        });
    }
    let q = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    let phi = if q == 1.0 {
        1.0
    } else {
        (q - 1.0).powf(q - 1.0) / q.powf(q)
    };
    Ok(NormPowerConjugate { q, phi: Some(phi) })
}
