//! Finite clamped values and analytic subgradients for compiled sums.

use super::compile::{ArgRow, Compiled, CompiledSum, GenTerm, T_FLOOR};
use crate::expr::{Atom, Node};

/// Value and subgradient of an atom at a point, with domain clamps so that
/// every value is finite. Domain membership itself is enforced by rows the
/// compiler emitted, not here.
fn atom_val_grad(atom: &Atom, u: &[f64]) -> (f64, Vec<f64>) {
    match atom {
        Atom::NormPower {
            p, weight, norm, ..
        } => {
            let n = norm.eval(u);
            let base = norm.subgrad(u);
            if *p == 1.0 {
                (weight * n, base.iter().map(|g| weight * g).collect())
            } else {
                let v = weight * n.powf(*p);
                let s = weight * p * n.powf(p - 1.0);
                (v, base.iter().map(|g| s * g).collect())
            }
        }
        Atom::QuadOverLin => {
            let t = u[1].max(T_FLOOR);
            let r = u[0] / t;
            (u[0] * r, vec![2.0 * r, -r * r])
        }
        Atom::Exponential { sign } => {
            let e = (sign * u[0]).min(60.0).exp();
            (e, vec![sign * e])
        }
        Atom::NegEntropy => {
            if u[0] <= 0.0 {
                // boundary value is exactly 0; a steep pull stands in for the
                // unbounded subgradient
                (0.0, vec![(1e-12f64).ln()])
            } else {
                let c = u[0];
                (c * c.ln() - c, vec![c.ln()])
            }
        }
        Atom::NegLog => {
            let c = u[0].max(1e-9);
            (-c.ln(), vec![-1.0 / c])
        }
        Atom::NegLogConj => {
            let c = u[0].min(-1e-9);
            (-1.0 - (-c).ln(), vec![-1.0 / c])
        }
        Atom::SupportOfBox { lo, hi } => {
            let mut v = 0.0;
            let mut g = Vec::with_capacity(u.len());
            for (ui, (l, h)) in u.iter().zip(lo.iter().zip(hi)) {
                if *ui > 0.0 {
                    v += ui * h;
                    g.push(*h);
                } else if *ui < 0.0 {
                    v += ui * l;
                    g.push(*l);
                } else {
                    g.push(0.0f64.clamp(*l, *h));
                }
            }
            (v, g)
        }
        _ => unreachable!("indicator atoms are compiled away"),
    }
}

impl GenTerm {
    pub fn value(&self, x: &[f64]) -> f64 {
        let u: Vec<f64> = self.args.iter().map(|r| r.value(x)).collect();
        let atom = match self.inner.node() {
            Node::Atom(a) => a,
            _ => unreachable!("general terms hold atoms"),
        };
        match &self.scale {
            None => self.weight * atom_val_grad(atom, &u).0,
            Some(t_row) => {
                let t = t_row.value(x).max(T_FLOOR);
                let s: Vec<f64> = u.iter().map(|v| v / t).collect();
                self.weight * t * atom_val_grad(atom, &s).0
            }
        }
    }

    /// Accumulate the subgradient into `grad` and return the value.
    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let u: Vec<f64> = self.args.iter().map(|r| r.value(x)).collect();
        let atom = match self.inner.node() {
            Node::Atom(a) => a,
            _ => unreachable!("general terms hold atoms"),
        };
        match &self.scale {
            None => {
                let (v, g) = atom_val_grad(atom, &u);
                for (gi, row) in g.iter().zip(&self.args) {
                    scatter(grad, row, self.weight * gi);
                }
                self.weight * v
            }
            Some(t_row) => {
                let t = t_row.value(x).max(T_FLOOR);
                let s: Vec<f64> = u.iter().map(|v| v / t).collect();
                let (v, g) = atom_val_grad(atom, &s);
                for (gi, row) in g.iter().zip(&self.args) {
                    scatter(grad, row, self.weight * gi);
                }
                let dt: f64 = v - g.iter().zip(&s).map(|(gi, si)| gi * si).sum::<f64>();
                scatter(grad, t_row, self.weight * dt);
                self.weight * t * v
            }
        }
    }
}

fn scatter(grad: &mut [f64], row: &ArgRow, w: f64) {
    for &(i, a) in &row.lin {
        grad[i] += w * a;
    }
}

impl CompiledSum {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.lin.value(x) + self.gens.iter().map(|g| g.value(x)).sum::<f64>()
    }

    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut v = self.lin.value(x);
        scatter(grad, &self.lin, 1.0);
        for g in &self.gens {
            v += g.value_grad(x, grad);
        }
        v
    }
}

impl Compiled {
    /// Clamped feasibility gap: largest inequality value, equality residual,
    /// and second-order-cone violation at `x` (bounds excluded; iterates are
    /// kept inside bounds by projection).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for con in &self.ineq {
            worst = worst.max(con.sum.value(x));
        }
        for (row, rhs) in &self.eq {
            worst = worst.max((row.value(x) - rhs).abs());
        }
        for (head, tail) in &self.soc {
            let n: f64 = head.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
            worst = worst.max(n - x[*tail]);
        }
        worst
    }

    pub fn project(&self, x: &mut [f64]) {
        for i in 0..self.n {
            if let Some(v) = self.fixed[i] {
                x[i] = v;
            } else {
                x[i] = x[i].clamp(self.lo[i], self.hi[i]);
            }
        }
    }

    /// True when `d` is a recession direction of the compiled feasible set.
    pub fn is_recession_direction(&self, d: &[f64], zero_tol: f64) -> bool {
        for i in 0..self.n {
            if self.fixed.get(i).map(|f| f.is_some()).unwrap_or(false) && d[i].abs() > zero_tol {
                return false;
            }
            if self.lo[i].is_finite() && d[i] < -zero_tol {
                return false;
            }
            if self.hi[i].is_finite() && d[i] > zero_tol {
                return false;
            }
        }
        for (row, _) in &self.eq {
            let v: f64 = row.lin.iter().map(|&(i, a)| a * d[i]).sum();
            if v.abs() > zero_tol {
                return false;
            }
        }
        for con in &self.ineq {
            let mut v: f64 = con.sum.lin.lin.iter().map(|&(i, a)| a * d[i]).sum();
            for g in &con.sum.gens {
                // recession of the general term along d
                let u: Vec<f64> = g
                    .args
                    .iter()
                    .map(|r| r.lin.iter().map(|&(i, a)| a * d[i]).sum())
                    .collect();
                let rec = match &g.scale {
                    None => g.inner.recession_value(&u),
                    Some(t_row) => {
                        let t: f64 = t_row.lin.iter().map(|&(i, a)| a * d[i]).sum();
                        g.inner.perspective_eval(&u, t.max(0.0))
                    }
                };
                match rec {
                    Ok(crate::ext::ExtReal::Finite(r)) => v += g.weight * r,
                    Ok(crate::ext::ExtReal::NegInf) => {}
                    _ => return false,
                }
            }
            if v > zero_tol {
                return false;
            }
        }
        for (head, tail) in &self.soc {
            let n: f64 = head.iter().map(|&i| d[i] * d[i]).sum::<f64>().sqrt();
            if n - d[*tail] > zero_tol {
                return false;
            }
        }
        true
    }
}
