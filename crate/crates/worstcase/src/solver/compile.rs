//! Lowering of [`FiniteConvexProgram`]s into solver form.
//!
//! Indicator structure is compiled away: singleton indicators become linear
//! equalities, boxes become bounds or linear rows, perspective terms of
//! indicators become homogeneous linear rows, l1/linf norms are lifted into
//! linear rows with auxiliary epigraph variables. What remains is a finite
//! objective and finitely many constraint sums made of linear parts plus
//! "general" convex terms with analytic subgradients. Perspective terms keep
//! their scale row and are evaluated with the scale clamped to
//! `[T_FLOOR, inf)`; a scale row pinned to exactly zero by presolve is
//! replaced by the recession branch instead.

use crate::expr::{Atom, ExprError, FunctionExpr, Node, Norm};
use crate::program::{FiniteConvexProgram, Term, VarCone};

pub const T_FLOOR: f64 = 1e-12;

/// Affine function of the compiled variables: `sum a_i x_i + c`.
#[derive(Debug, Clone, Default)]
pub struct ArgRow {
    pub lin: Vec<(usize, f64)>,
    pub c: f64,
}

impl ArgRow {
    pub fn var(i: usize) -> Self {
        ArgRow {
            lin: vec![(i, 1.0)],
            c: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        ArgRow { lin: vec![], c }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.lin.iter().map(|&(i, a)| a * x[i]).sum::<f64>() + self.c
    }

    pub fn scaled(&self, s: f64) -> Self {
        ArgRow {
            lin: self.lin.iter().map(|&(i, a)| (i, a * s)).collect(),
            c: self.c * s,
        }
    }

    pub fn add_scaled(&mut self, s: f64, other: &ArgRow) {
        for &(i, a) in &other.lin {
            self.push(i, s * a);
        }
        self.c += s * other.c;
    }

    pub fn push(&mut self, i: usize, a: f64) {
        if a == 0.0 {
            return;
        }
        if let Some(e) = self.lin.iter_mut().find(|(j, _)| *j == i) {
            e.1 += a;
        } else {
            self.lin.push((i, a));
        }
    }

    /// Substitute fixed variables into the constant part.
    fn substitute(&mut self, fixed: &[Option<f64>]) {
        let mut kept = Vec::with_capacity(self.lin.len());
        for &(i, a) in &self.lin {
            match fixed[i] {
                Some(v) => self.c += a * v,
                None => kept.push((i, a)),
            }
        }
        self.lin = kept;
    }

}

/// A finite convex summand with an analytic subgradient.
#[derive(Debug, Clone)]
pub struct GenTerm {
    pub weight: f64,
    pub inner: FunctionExpr,
    pub args: Vec<ArgRow>,
    /// Perspective scale row; `None` for plain terms.
    pub scale: Option<ArgRow>,
    /// Value certified nonnegative (norm powers, quad-over-lin).
    pub nonneg: bool,
}

#[derive(Debug, Clone, Default)]
pub struct CompiledSum {
    pub lin: ArgRow,
    pub gens: Vec<GenTerm>,
}

#[derive(Debug, Clone)]
pub struct CompiledCon {
    pub sum: CompiledSum,
    pub from_nonlinear: bool,
    /// True for rows carrying a program constraint; false for structural
    /// domain rows (perspective scales, atom domains, norm lifts), which
    /// never receive feasibility slack.
    pub is_main: bool,
    pub label: String,
}

#[derive(Debug)]
pub struct Compiled {
    /// Total variables: original program variables first, then auxiliaries.
    pub n: usize,
    pub orig_n: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub eq: Vec<(ArgRow, f64)>,
    pub ineq: Vec<CompiledCon>,
    pub obj: CompiledSum,
    /// Euclidean second-order-cone blocks (head coords, tail coord).
    pub soc: Vec<(Vec<usize>, usize)>,
    pub fixed: Vec<Option<f64>>,
    pub infeasible_by_presolve: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("cannot compile term: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl Compiled {
    fn new_aux(&mut self, lo: f64, hi: f64) -> usize {
        let i = self.n;
        self.n += 1;
        self.lo.push(lo);
        self.hi.push(hi);
        self.fixed.push(None);
        i
    }

    fn add_eq(&mut self, row: ArgRow, rhs: f64) {
        self.eq.push((row, rhs));
    }

    fn add_lin_con(&mut self, row: ArgRow, nonlinear: bool, label: &str) {
        // row <= 0
        if row.lin.is_empty() {
            if row.c > 1e-9 {
                self.infeasible_by_presolve = true;
            }
            return;
        }
        if row.lin.len() == 1 {
            // fold single-variable rows into bounds
            let (i, a) = row.lin[0];
            let bound = -row.c / a;
            if a > 0.0 {
                if bound < self.hi[i] {
                    self.hi[i] = bound;
                }
            } else if bound > self.lo[i] {
                self.lo[i] = bound;
            }
            return;
        }
        self.ineq.push(CompiledCon {
            sum: CompiledSum {
                lin: row,
                gens: vec![],
            },
            from_nonlinear: nonlinear,
            is_main: false,
            label: label.to_string(),
        });
    }
}

pub fn compile(p: &FiniteConvexProgram) -> Result<Compiled, CompileError> {
    compile_with(p, true)
}

/// Compile preserving every main constraint row (no zero-set elimination);
/// feasibility and Slater probes need the rows to attach slack to.
pub fn compile_probe(p: &FiniteConvexProgram) -> Result<Compiled, CompileError> {
    compile_with(p, false)
}

fn compile_with(p: &FiniteConvexProgram, zero_rule: bool) -> Result<Compiled, CompileError> {
    let orig_n = p.num_vars();
    let mut out = Compiled {
        n: orig_n,
        orig_n,
        lo: vec![f64::NEG_INFINITY; orig_n],
        hi: vec![f64::INFINITY; orig_n],
        eq: Vec::new(),
        ineq: Vec::new(),
        obj: CompiledSum::default(),
        soc: Vec::new(),
        fixed: vec![None; orig_n],
        infeasible_by_presolve: false,
    };
    for b in &p.blocks {
        match b.cone {
            VarCone::Free => {}
            VarCone::Nonneg => {
                for i in b.offset..b.offset + b.dim {
                    out.lo[i] = 0.0;
                }
            }
            VarCone::Soc => {
                let head: Vec<usize> = (b.offset..b.offset + b.dim - 1).collect();
                out.soc.push((head, b.offset + b.dim - 1));
            }
        }
    }
    for (row, rhs) in &p.equalities {
        let mut r = ArgRow::default();
        for &(i, a) in row {
            r.push(i, a);
        }
        out.add_eq(r, *rhs);
    }
    let mut obj = CompiledSum::default();
    obj.lin.c = p.obj_constant;
    for t in &p.objective {
        lower_term(t, 1.0, &mut obj, &mut out, false, "objective")?;
    }
    out.obj = obj;
    for (k, c) in p.constraints.iter().enumerate() {
        let mut sum = CompiledSum::default();
        sum.lin.c = c.constant;
        let label = if c.label.is_empty() {
            format!("con[{k}]")
        } else {
            c.label.clone()
        };
        for t in &c.terms {
            lower_term(t, 1.0, &mut sum, &mut out, c.nonlinear, &label)?;
        }
        push_constraint(&mut out, sum, c.nonlinear, &label);
    }
    presolve(&mut out, zero_rule);
    Ok(out)
}

fn push_constraint(out: &mut Compiled, sum: CompiledSum, nonlinear: bool, label: &str) {
    let nl = nonlinear || !sum.gens.is_empty();
    out.ineq.push(CompiledCon {
        sum,
        from_nonlinear: nl,
        is_main: true,
        label: label.to_string(),
    });
}

fn lower_term(
    term: &Term,
    weight: f64,
    sink: &mut CompiledSum,
    out: &mut Compiled,
    nonlinear_src: bool,
    label: &str,
) -> Result<(), CompileError> {
    let args: Vec<ArgRow> = term.vars.iter().map(|&i| ArgRow::var(i)).collect();
    lower(&term.expr, args, weight, sink, out, nonlinear_src, label)
}

fn lower(
    expr: &FunctionExpr,
    args: Vec<ArgRow>,
    weight: f64,
    sink: &mut CompiledSum,
    out: &mut Compiled,
    nl: bool,
    label: &str,
) -> Result<(), CompileError> {
    match expr.node() {
        Node::Atom(atom) => lower_atom(atom, args, weight, sink, out, nl, label),
        Node::PlusAffine { a, b, inner } => {
            for (coef, row) in a.iter().zip(&args) {
                sink.lin.add_scaled(weight * coef, row);
            }
            sink.lin.c += weight * b;
            lower(inner, args, weight, sink, out, nl, label)
        }
        Node::Scale { t, inner } => lower(inner, args, weight * t, sink, out, nl, label),
        Node::AffinePre { a, b, inner } => {
            let mut new_args = Vec::with_capacity(a.rows);
            for r in 0..a.rows {
                let mut row = ArgRow::constant(b[r]);
                for (k, arg) in args.iter().enumerate() {
                    row.add_scaled(a[(r, k)], arg);
                }
                new_args.push(row);
            }
            lower(inner, new_args, weight, sink, out, nl, label)
        }
        Node::SumBlocks { terms } => {
            for (f, block) in terms {
                let sub: Vec<ArgRow> = block.iter().map(|&i| args[i].clone()).collect();
                lower(f, sub, weight, sink, out, nl, label)?;
            }
            Ok(())
        }
        Node::Perspective { inner } => {
            let t_row = args.last().unwrap().clone();
            let u = args[..args.len() - 1].to_vec();
            // t >= 0
            out.add_lin_con(t_row.scaled(-1.0), false, label);
            lower_persp(inner, u, t_row, weight, sink, out, nl, label)
        }
        Node::SublevelShift { inner } => {
            // indicator of { inner(w) + s <= 0 }: spawn a constraint
            let s_row = args.last().unwrap().clone();
            let w = args[..args.len() - 1].to_vec();
            let mut sum = CompiledSum::default();
            sum.lin.add_scaled(1.0, &s_row);
            let inner_nl = !inner.is_affine();
            lower(inner, w, 1.0, &mut sum, out, nl || inner_nl, label)?;
            push_constraint(out, sum, nl || inner_nl, label);
            Ok(())
        }
        Node::MaxOfConcave { .. } => Err(CompileError::Unsupported(
            "max-of-concave nodes must be split by the builders".into(),
        )),
    }
}

fn is_positively_homogeneous(expr: &FunctionExpr) -> bool {
    match expr.node() {
        Node::Atom(a) => match a {
            Atom::QuadOverLin | Atom::SupportOfBox { .. } => true,
            Atom::NormPower { p, .. } => *p == 1.0,
            Atom::Affine { b, .. } => *b == 0.0,
            _ => false,
        },
        Node::Scale { inner, .. } => is_positively_homogeneous(inner),
        Node::Perspective { .. } => true,
        Node::SumBlocks { terms } => terms.iter().all(|(f, _)| is_positively_homogeneous(f)),
        _ => false,
    }
}

fn lower_persp(
    inner: &FunctionExpr,
    args: Vec<ArgRow>,
    t_row: ArgRow,
    weight: f64,
    sink: &mut CompiledSum,
    out: &mut Compiled,
    nl: bool,
    label: &str,
) -> Result<(), CompileError> {
    if is_positively_homogeneous(inner) {
        return lower(inner, args, weight, sink, out, nl, label);
    }
    match inner.node() {
        Node::Atom(atom) => lower_persp_atom(atom, args, t_row, weight, sink, out, nl, label),
        Node::PlusAffine { a, b, inner } => {
            // t (f(u/t) + a'(u/t) + b) = t f(u/t) + a'u + b t
            for (coef, row) in a.iter().zip(&args) {
                sink.lin.add_scaled(weight * coef, row);
            }
            sink.lin.add_scaled(weight * b, &t_row);
            lower_persp(inner, args, t_row, weight, sink, out, nl, label)
        }
        Node::Scale { t, inner } => {
            lower_persp(inner, args, t_row, weight * t, sink, out, nl, label)
        }
        Node::AffinePre { a, b, inner } => {
            // t f((A u + b t)/t): offsets ride the scale row
            let mut new_args = Vec::with_capacity(a.rows);
            for r in 0..a.rows {
                let mut row = t_row.scaled(b[r]);
                for (k, arg) in args.iter().enumerate() {
                    row.add_scaled(a[(r, k)], arg);
                }
                new_args.push(row);
            }
            lower_persp(inner, new_args, t_row, weight, sink, out, nl, label)
        }
        Node::SumBlocks { terms } => {
            for (f, block) in terms {
                let sub: Vec<ArgRow> = block.iter().map(|&i| args[i].clone()).collect();
                lower_persp(f, sub, t_row.clone(), weight, sink, out, nl, label)?;
            }
            Ok(())
        }
        Node::SublevelShift { inner } => {
            // t * delta(h(w/t) + s/t <= 0) = delta(perspective of h at (w, t) + s <= 0)
            let s_row = args.last().unwrap().clone();
            let w = args[..args.len() - 1].to_vec();
            let mut sum = CompiledSum::default();
            sum.lin.add_scaled(1.0, &s_row);
            let inner_nl = !inner.is_affine();
            lower_persp(inner, w, t_row, 1.0, &mut sum, out, nl || inner_nl, label)?;
            push_constraint(out, sum, nl || inner_nl, label);
            Ok(())
        }
        Node::MaxOfConcave { .. } => Err(CompileError::Unsupported(
            "max-of-concave under a perspective".into(),
        )),
        Node::Perspective { .. } => unreachable!("perspectives are positively homogeneous"),
    }
}

fn lower_atom(
    atom: &Atom,
    args: Vec<ArgRow>,
    weight: f64,
    sink: &mut CompiledSum,
    out: &mut Compiled,
    nl: bool,
    label: &str,
) -> Result<(), CompileError> {
    match atom {
        Atom::Affine { a, b } => {
            for (coef, row) in a.iter().zip(&args) {
                sink.lin.add_scaled(weight * coef, row);
            }
            sink.lin.c += weight * b;
            Ok(())
        }
        Atom::IndicatorSingleton { point } => {
            for (row, p) in args.into_iter().zip(point) {
                out.add_eq(row, *p);
            }
            Ok(())
        }
        Atom::IndicatorBox { lo, hi } => {
            for (row, (l, h)) in args.into_iter().zip(lo.iter().zip(hi)) {
                if h.is_finite() {
                    let mut r = row.clone();
                    r.c -= h;
                    out.add_lin_con(r, nl, label);
                }
                if l.is_finite() {
                    let mut r = row.scaled(-1.0);
                    r.c += l;
                    out.add_lin_con(r, nl, label);
                }
            }
            Ok(())
        }
        Atom::IndicatorNormBall {
            center,
            radius,
            norm,
        } => {
            let shifted: Vec<ArgRow> = args
                .iter()
                .zip(center)
                .map(|(r, c)| {
                    let mut s = r.clone();
                    s.c -= c;
                    s
                })
                .collect();
            emit_norm_le(out, shifted, *norm, ArgRow::constant(*radius), label);
            Ok(())
        }
        Atom::NormPower {
            p, weight: w, norm, ..
        } => {
            if p.is_infinite() {
                emit_norm_le(out, args, *norm, ArgRow::constant(1.0), label);
                return Ok(());
            }
            if *w == 0.0 {
                return Ok(());
            }
            if *p == 1.0 && liftable(*norm, args.len()) {
                // epigraph-lift: s >= ||u||, add weight*w*s to the sum
                let s = out.new_aux(0.0, f64::INFINITY);
                sink.lin.push(s, weight * w);
                emit_norm_le(out, args, *norm, ArgRow::var(s), label);
                return Ok(());
            }
            sink.gens.push(GenTerm {
                weight,
                inner: FunctionExpr::norm_power(*p, *w, *norm, args.len())?,
                args,
                scale: None,
                nonneg: true,
            });
            Ok(())
        }
        Atom::QuadOverLin => {
            out.add_lin_con(args[1].scaled(-1.0), nl, label);
            sink.gens.push(GenTerm {
                weight,
                inner: FunctionExpr::quad_over_lin(),
                args,
                scale: None,
                nonneg: true,
            });
            Ok(())
        }
        Atom::Exponential { .. } | Atom::NegLogConj | Atom::NegEntropy | Atom::NegLog => {
            match atom {
                Atom::NegEntropy | Atom::NegLog => {
                    out.add_lin_con(args[0].scaled(-1.0), nl, label)
                }
                Atom::NegLogConj => out.add_lin_con(args[0].clone(), nl, label),
                _ => {}
            }
            sink.gens.push(GenTerm {
                weight,
                inner: atom_expr(atom),
                args,
                scale: None,
                nonneg: false,
            });
            Ok(())
        }
        Atom::SupportOfBox { lo, hi } => {
            let mut clipped_lo = Vec::with_capacity(lo.len());
            let mut clipped_hi = Vec::with_capacity(hi.len());
            for (k, (l, h)) in lo.iter().zip(hi).enumerate() {
                if !h.is_finite() {
                    out.add_lin_con(args[k].clone(), nl, label); // w_k <= 0
                }
                if !l.is_finite() {
                    out.add_lin_con(args[k].scaled(-1.0), nl, label); // w_k >= 0
                }
                clipped_lo.push(if l.is_finite() { *l } else { 0.0 });
                clipped_hi.push(if h.is_finite() { *h } else { 0.0 });
            }
            sink.gens.push(GenTerm {
                weight,
                inner: FunctionExpr::support_of_box(clipped_lo, clipped_hi)?,
                args,
                scale: None,
                nonneg: false,
            });
            Ok(())
        }
    }
}

fn atom_expr(atom: &Atom) -> FunctionExpr {
    match atom {
        Atom::Exponential { sign } => FunctionExpr::exponential(*sign).unwrap(),
        Atom::NegEntropy => FunctionExpr::neg_entropy(),
        Atom::NegLog => FunctionExpr::neg_log(),
        Atom::NegLogConj => FunctionExpr::neg_log_conj(),
        _ => unreachable!(),
    }
}

fn lower_persp_atom(
    atom: &Atom,
    args: Vec<ArgRow>,
    t_row: ArgRow,
    weight: f64,
    sink: &mut CompiledSum,
    out: &mut Compiled,
    nl: bool,
    label: &str,
) -> Result<(), CompileError> {
    match atom {
        Atom::Affine { a, b } => {
            for (coef, row) in a.iter().zip(&args) {
                sink.lin.add_scaled(weight * coef, row);
            }
            sink.lin.add_scaled(weight * b, &t_row);
            Ok(())
        }
        Atom::IndicatorSingleton { point } => {
            // u = t * point
            for (row, p) in args.into_iter().zip(point) {
                let mut r = row;
                r.add_scaled(-p, &t_row);
                out.add_eq(r, 0.0);
            }
            Ok(())
        }
        Atom::IndicatorBox { lo, hi } => {
            for (row, (l, h)) in args.into_iter().zip(lo.iter().zip(hi)) {
                if h.is_finite() {
                    let mut r = row.clone();
                    r.add_scaled(-h, &t_row);
                    out.add_lin_con(r, nl, label);
                }
                if l.is_finite() {
                    let mut r = row.scaled(-1.0);
                    r.add_scaled(*l, &t_row);
                    out.add_lin_con(r, nl, label);
                }
            }
            Ok(())
        }
        Atom::IndicatorNormBall {
            center,
            radius,
            norm,
        } => {
            let shifted: Vec<ArgRow> = args
                .iter()
                .zip(center)
                .map(|(r, c)| {
                    let mut s = r.clone();
                    s.add_scaled(-c, &t_row);
                    s
                })
                .collect();
            emit_norm_le(out, shifted, *norm, t_row.scaled(*radius), label);
            Ok(())
        }
        Atom::NormPower {
            p, weight: w, norm, ..
        } => {
            if p.is_infinite() {
                emit_norm_le(out, args, *norm, t_row, label);
                return Ok(());
            }
            if *w == 0.0 {
                return Ok(());
            }
            debug_assert!(*p > 1.0, "p = 1 is positively homogeneous");
            sink.gens.push(GenTerm {
                weight,
                inner: FunctionExpr::norm_power(*p, *w, *norm, args.len())?,
                args,
                scale: Some(t_row),
                nonneg: true,
            });
            Ok(())
        }
        Atom::Exponential { .. } | Atom::NegEntropy | Atom::NegLog | Atom::NegLogConj => {
            match atom {
                Atom::NegEntropy | Atom::NegLog => {
                    out.add_lin_con(args[0].scaled(-1.0), nl, label)
                }
                Atom::NegLogConj => out.add_lin_con(args[0].clone(), nl, label),
                _ => {}
            }
            sink.gens.push(GenTerm {
                weight,
                inner: atom_expr(atom),
                args,
                scale: Some(t_row),
                nonneg: false,
            });
            Ok(())
        }
        Atom::QuadOverLin | Atom::SupportOfBox { .. } => {
            unreachable!("positively homogeneous atoms are handled before dispatch")
        }
    }
}

fn liftable(norm: Norm, dim: usize) -> bool {
    dim == 1 || matches!(norm, Norm::L1 | Norm::LInf)
}

/// Emit `||rows|| <= bound` as linear rows (l1/linf and scalars) or as a
/// general Euclidean term.
fn emit_norm_le(out: &mut Compiled, rows: Vec<ArgRow>, norm: Norm, bound: ArgRow, label: &str) {
    if rows.len() == 1 {
        let r = &rows[0];
        let mut up = r.clone();
        up.add_scaled(-1.0, &bound);
        out.add_lin_con(up, true, label);
        let mut dn = r.scaled(-1.0);
        dn.add_scaled(-1.0, &bound);
        out.add_lin_con(dn, true, label);
        return;
    }
    match norm {
        Norm::LInf => {
            for r in rows {
                let mut up = r.clone();
                up.add_scaled(-1.0, &bound);
                out.add_lin_con(up, true, label);
                let mut dn = r.scaled(-1.0);
                dn.add_scaled(-1.0, &bound);
                out.add_lin_con(dn, true, label);
            }
        }
        Norm::L1 => {
            let mut total = ArgRow::default();
            for r in rows {
                let s = out.new_aux(0.0, f64::INFINITY);
                let mut up = r.clone();
                up.push(s, -1.0);
                out.add_lin_con(up, true, label);
                let mut dn = r.scaled(-1.0);
                dn.push(s, -1.0);
                out.add_lin_con(dn, true, label);
                total.push(s, 1.0);
            }
            total.add_scaled(-1.0, &bound);
            out.add_lin_con(total, true, label);
        }
        Norm::L2 => {
            let mut sum = CompiledSum::default();
            sum.lin.add_scaled(-1.0, &bound);
            sum.gens.push(GenTerm {
                weight: 1.0,
                inner: FunctionExpr::norm_power(1.0, 1.0, Norm::L2, rows.len()).unwrap(),
                args: rows,
                scale: None,
                nonneg: true,
            });
            out.ineq.push(CompiledCon {
                sum,
                from_nonlinear: true,
                is_main: false,
                label: label.to_string(),
            });
        }
    }
}

// ---- presolve ----

fn presolve(out: &mut Compiled, zero_rule: bool) {
    // fixings from collapsed bounds
    for i in 0..out.n {
        if out.lo[i] == out.hi[i] {
            out.fixed[i] = Some(out.lo[i]);
        }
        if out.lo[i] > out.hi[i] + 1e-12 {
            out.infeasible_by_presolve = true;
        }
    }
    for _round in 0..64 {
        let mut changed = false;

        // substitute fixings everywhere
        let fixed = out.fixed.clone();
        for (row, _) in out.eq.iter_mut() {
            row.substitute(&fixed);
        }
        out.obj.substitute(&fixed);
        for con in out.ineq.iter_mut() {
            con.sum.substitute(&fixed);
        }

        // singleton equality rows pin variables
        let mut new_fix: Vec<(usize, f64)> = Vec::new();
        out.eq.retain(|(row, rhs)| {
            if row.lin.is_empty() {
                if (row.c - rhs).abs() > 1e-9 {
                    // inconsistent; keep a marker row
                    return true;
                }
                return false;
            }
            if row.lin.len() == 1 {
                let (i, a) = row.lin[0];
                new_fix.push((i, (rhs - row.c) / a));
                return false;
            }
            true
        });
        for (i, v) in new_fix {
            match out.fixed[i] {
                Some(old) if (old - v).abs() > 1e-9 => out.infeasible_by_presolve = true,
                Some(_) => {}
                None => {
                    if v < out.lo[i] - 1e-9 || v > out.hi[i] + 1e-9 {
                        out.infeasible_by_presolve = true;
                    }
                    out.fixed[i] = Some(v);
                    changed = true;
                }
            }
        }

        // inconsistent empty equality rows
        for (row, rhs) in &out.eq {
            if row.lin.is_empty() && (row.c - rhs).abs() > 1e-9 {
                out.infeasible_by_presolve = true;
            }
        }

        // zero-set rule: a sum of certified-nonnegative terms with no linear
        // part and zero constant forces every term to vanish
        let mut forced_rows: Vec<ArgRow> = Vec::new();
        out.ineq.retain(|con| {
            if !zero_rule {
                return true;
            }
            let s = &con.sum;
            if s.lin.lin.is_empty()
                && !s.gens.is_empty()
                && s.gens.iter().all(|g| g.nonneg && g.weight > 0.0)
            {
                if s.lin.c > 1e-9 {
                    // nonnegative terms can never offset a positive constant
                    return true; // kept; flagged infeasible below
                }
                if s.lin.c.abs() <= 1e-12 {
                    for g in &s.gens {
                        let zero_rows: &[ArgRow] = match g.inner.node() {
                            Node::Atom(Atom::QuadOverLin) => &g.args[..1],
                            _ => &g.args[..],
                        };
                        for r in zero_rows {
                            forced_rows.push(r.clone());
                        }
                    }
                    return false;
                }
            }
            true
        });
        for con in &out.ineq {
            let s = &con.sum;
            if s.lin.lin.is_empty()
                && s.lin.c > 1e-9
                && s.gens.iter().all(|g| g.nonneg && g.weight > 0.0)
            {
                out.infeasible_by_presolve = true;
            }
        }
        if !forced_rows.is_empty() {
            changed = true;
            for r in forced_rows {
                out.add_eq(r, 0.0);
            }
        }

        // drop satisfied constant inequality rows
        out.ineq.retain(|con| {
            if con.sum.lin.lin.is_empty() && con.sum.gens.is_empty() {
                if con.sum.lin.c > 1e-9 {
                    return true;
                }
                return false;
            }
            true
        });
        for con in &out.ineq {
            if con.sum.lin.lin.is_empty() && con.sum.gens.is_empty() && con.sum.lin.c > 1e-9 {
                out.infeasible_by_presolve = true;
            }
        }

        // perspective terms whose scale row collapsed to zero switch to the
        // recession branch
        let mut recession_rows: Vec<(ArgRow, bool)> = Vec::new();
        for con in out.ineq.iter_mut() {
            replace_pinned_perspectives(&mut con.sum, &mut recession_rows);
        }
        let mut obj = std::mem::take(&mut out.obj);
        replace_pinned_perspectives(&mut obj, &mut recession_rows);
        out.obj = obj;
        if !recession_rows.is_empty() {
            changed = true;
            for (row, is_eq) in recession_rows {
                if is_eq {
                    out.add_eq(row, 0.0);
                } else {
                    out.add_lin_con(row, true, "recession");
                }
            }
        }

        if !changed {
            break;
        }
    }
}

impl CompiledSum {
    fn substitute(&mut self, fixed: &[Option<f64>]) {
        self.lin.substitute(fixed);
        for g in &mut self.gens {
            for a in &mut g.args {
                a.substitute(fixed);
            }
            if let Some(t) = &mut g.scale {
                t.substitute(fixed);
            }
        }
    }
}

/// Swap perspective terms with structurally-zero scale for their recession
/// branch: for `p > 1` norm powers and the entropy the recession pins the
/// argument rows to zero; for exponentials it is a sign constraint.
fn replace_pinned_perspectives(sum: &mut CompiledSum, rows: &mut Vec<(ArgRow, bool)>) {
    sum.gens.retain(|g| {
        let Some(t) = &g.scale else { return true };
        if !(t.lin.is_empty() && t.c == 0.0) {
            return true;
        }
        match g.inner.node() {
            Node::Atom(Atom::NormPower { .. }) | Node::Atom(Atom::NegEntropy) => {
                for a in &g.args {
                    rows.push((a.clone(), true));
                }
            }
            Node::Atom(Atom::Exponential { sign }) => {
                rows.push((g.args[0].scaled(*sign), false));
            }
            Node::Atom(Atom::NegLog) => {
                rows.push((g.args[0].scaled(-1.0), false));
            }
            Node::Atom(Atom::NegLogConj) => {
                rows.push((g.args[0].clone(), false));
            }
            _ => return true,
        }
        false
    });
}

impl Compiled {
    pub fn is_lp(&self) -> bool {
        self.soc.is_empty()
            && self.obj.gens.is_empty()
            && self.ineq.iter().all(|c| c.sum.gens.is_empty())
    }

    pub fn all_fixed(&self) -> bool {
        self.fixed.iter().all(|f| f.is_some())
    }

    pub fn fixed_point(&self) -> Vec<f64> {
        self.fixed.iter().map(|f| f.unwrap_or(0.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{ConstraintSum, Sense};

    #[test]
    fn quad_over_lin_constraint_pins_numerator() {
        // min e^{-x1} s.t. x1^2/x2 <= 0: presolve fixes x1 = 0
        let mut p = FiniteConvexProgram::new("gap", Sense::Min);
        let x = p.add_block("x", 2, VarCone::Free);
        p.objective.push(Term::new(
            FunctionExpr::on_coords(FunctionExpr::exponential(-1.0).unwrap(), &[0], 2).unwrap(),
            x.clone(),
        ));
        p.constraints.push(ConstraintSum {
            label: "qol".into(),
            terms: vec![Term::new(FunctionExpr::quad_over_lin(), x)],
            constant: 0.0,
            nonlinear: true,
        });
        let c = compile(&p).unwrap();
        assert!(!c.infeasible_by_presolve);
        assert_eq!(c.fixed[0], Some(0.0));
        assert_eq!(c.fixed[1], None);
        assert_eq!(c.lo[1], 0.0);
    }

    #[test]
    fn perspective_of_box_is_polyhedral() {
        // nu * delta_{[0,2]}(y/nu) compiles to 0 <= y <= 2 nu and nu >= 0
        let mut p = FiniteConvexProgram::new("persp", Sense::Min);
        let y = p.add_block("y", 1, VarCone::Free);
        let nu = p.add_block("nu", 1, VarCone::Nonneg);
        let box_ind = FunctionExpr::indicator_box(vec![0.0], vec![2.0]).unwrap();
        let persp = FunctionExpr::perspective(box_ind).unwrap();
        p.objective
            .push(Term::new(FunctionExpr::affine(vec![1.0], 0.0), y.clone()));
        p.constraints.push(ConstraintSum {
            label: "persp-box".into(),
            terms: vec![Term::new(persp, vec![y[0], nu[0]])],
            constant: 0.0,
            nonlinear: false,
        });
        let c = compile(&p).unwrap();
        assert!(c.is_lp());
    }

    #[test]
    fn l1_norms_lift_to_linear_rows() {
        let mut p = FiniteConvexProgram::new("l1", Sense::Min);
        let v = p.add_block("v", 2, VarCone::Free);
        p.objective.push(Term::new(
            FunctionExpr::norm_power(1.0, 1.0, Norm::L1, 2).unwrap(),
            v,
        ));
        let c = compile(&p).unwrap();
        assert!(c.is_lp());
        assert!(c.n > 2);
    }
}
