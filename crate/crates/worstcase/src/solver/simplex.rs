//! Dense two-phase revised simplex for the structurally-detected LP path and
//! the grid oracles. Row counts stay small at desk scale while column counts
//! can reach the tens of thousands (grid masses), so the basis inverse is
//! kept explicitly and columns are priced on demand.

#[derive(Debug, Clone)]
pub struct StdLp {
    pub m: usize,
    pub n: usize,
    /// column-major: `cols[j]` is dense of length `m`
    pub cols: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { y: Vec<f64>, value: f64 },
    Unbounded { y: Vec<f64>, ray: Vec<f64> },
    Infeasible,
}

const EPS: f64 = 1e-9;

struct Tableau {
    m: usize,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>, // m x m
}

impl Tableau {
    fn refactor(&mut self, lp: &StdLp, art: &[Vec<f64>]) -> bool {
        // rebuild binv from scratch by Gauss-Jordan on the basis matrix
        let m = self.m;
        let mut a = vec![vec![0.0; 2 * m]; m];
        for (k, &j) in self.basis.iter().enumerate() {
            let col = basis_col(lp, art, j);
            for i in 0..m {
                a[i][k] = col[i];
            }
        }
        for i in 0..m {
            a[i][m + i] = 1.0;
        }
        for k in 0..m {
            let mut p = k;
            for i in k + 1..m {
                if a[i][k].abs() > a[p][k].abs() {
                    p = i;
                }
            }
            if a[p][k].abs() < 1e-11 {
                return false;
            }
            a.swap(k, p);
            let piv = a[k][k];
            for v in a[k].iter_mut() {
                *v /= piv;
            }
            for i in 0..m {
                if i != k && a[i][k].abs() > 0.0 {
                    let f = a[i][k];
                    for j in 0..2 * m {
                        a[i][j] -= f * a[k][j];
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                self.binv[i][j] = a[i][m + j];
            }
        }
        true
    }

    fn xb(&self, lp_b: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                self.binv[i]
                    .iter()
                    .zip(lp_b)
                    .map(|(v, b)| v * b)
                    .sum::<f64>()
            })
            .collect()
    }

    fn price(&self, cb: &[f64]) -> Vec<f64> {
        // pi' = cb' binv
        let m = self.m;
        let mut pi = vec![0.0; m];
        for i in 0..m {
            if cb[i] != 0.0 {
                for j in 0..m {
                    pi[j] += cb[i] * self.binv[i][j];
                }
            }
        }
        pi
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                self.binv[i]
                    .iter()
                    .zip(col)
                    .map(|(v, a)| v * a)
                    .sum::<f64>()
            })
            .collect()
    }

    fn pivot(&mut self, row: usize, dir: &[f64]) {
        let piv = dir[row];
        let m = self.m;
        for j in 0..m {
            self.binv[row][j] /= piv;
        }
        for i in 0..m {
            if i != row && dir[i].abs() > 0.0 {
                let f = dir[i];
                for j in 0..m {
                    self.binv[i][j] -= f * self.binv[row][j];
                }
            }
        }
    }
}

fn basis_col<'a>(lp: &'a StdLp, art: &'a [Vec<f64>], j: usize) -> &'a [f64] {
    if j < lp.n {
        &lp.cols[j]
    } else {
        &art[j - lp.n]
    }
}

/// Solve `min c'y s.t. A y = b, y >= 0`.
pub fn solve_std(lp: &StdLp, max_iter: usize) -> LpOutcome {
    let m = lp.m;
    // orient rows so b >= 0 by flipping signs into the artificial columns
    let mut lp = lp.clone();
    for i in 0..m {
        if lp.b[i] < 0.0 {
            lp.b[i] = -lp.b[i];
            for col in lp.cols.iter_mut() {
                col[i] = -col[i];
            }
        }
    }
    let art: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut tab = Tableau {
        m,
        basis: (lp.n..lp.n + m).collect(),
        binv: art.clone(),
    };

    // phase 1: minimize the artificial sum
    let phase1_cost = |j: usize| if j < lp.n { 0.0 } else { 1.0 };
    match run_phase(&lp, &art, &mut tab, &phase1_cost, max_iter, true) {
        PhaseEnd::Unbounded(_) => return LpOutcome::Infeasible, // cannot happen; safe default
        PhaseEnd::IterLimit => return LpOutcome::Infeasible,
        PhaseEnd::Optimal => {}
    }
    let xb = tab.xb(&lp.b);
    let art_mass: f64 = tab
        .basis
        .iter()
        .zip(&xb)
        .filter(|(&j, _)| j >= lp.n)
        .map(|(_, v)| v.abs())
        .sum();
    if art_mass > 1e-7 {
        return LpOutcome::Infeasible;
    }

    // drive residual artificials (basic at level zero) out of the basis;
    // rows where no real column can pivot are redundant and stay parked
    for r in 0..m {
        if tab.basis[r] < lp.n {
            continue;
        }
        for j in 0..lp.n {
            if tab.basis.contains(&j) {
                continue;
            }
            let dir = tab.ftran(&lp.cols[j]);
            if dir[r].abs() > 1e-7 {
                tab.basis[r] = j;
                tab.pivot(r, &dir);
                break;
            }
        }
    }

    // phase 2: parked artificials cost nothing and can never re-enter
    let phase2_cost = |j: usize| if j < lp.n { lp.c[j] } else { 0.0 };
    match run_phase(&lp, &art, &mut tab, &phase2_cost, max_iter, false) {
        PhaseEnd::Optimal | PhaseEnd::IterLimit => {
            let xb = tab.xb(&lp.b);
            let mut y = vec![0.0; lp.n];
            for (k, &j) in tab.basis.iter().enumerate() {
                if j < lp.n {
                    y[j] = xb[k].max(0.0);
                }
            }
            let value: f64 = y.iter().zip(&lp.c).map(|(yi, ci)| yi * ci).sum();
            LpOutcome::Optimal { y, value }
        }
        PhaseEnd::Unbounded(e) => {
            let xb = tab.xb(&lp.b);
            let mut y = vec![0.0; lp.n];
            for (k, &j) in tab.basis.iter().enumerate() {
                if j < lp.n {
                    y[j] = xb[k].max(0.0);
                }
            }
            let dir = tab.ftran(&lp.cols[e]);
            let mut ray = vec![0.0; lp.n];
            ray[e] = 1.0;
            for (k, &j) in tab.basis.iter().enumerate() {
                if j < lp.n {
                    ray[j] = -dir[k];
                }
            }
            LpOutcome::Unbounded { y, ray }
        }
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
    IterLimit,
}

fn run_phase(
    lp: &StdLp,
    art: &[Vec<f64>],
    tab: &mut Tableau,
    cost: &dyn Fn(usize) -> f64,
    max_iter: usize,
    allow_art: bool,
) -> PhaseEnd {
    let m = lp.m;
    let mut stall = 0usize;
    let mut last_obj = f64::INFINITY;
    for it in 0..max_iter {
        if it % 64 == 0 {
            tab.refactor(lp, art);
        }
        let cb: Vec<f64> = tab.basis.iter().map(|&j| cost(j)).collect();
        let pi = tab.price(&cb);
        // pricing: most negative reduced cost (Bland under stall)
        let mut enter = None;
        let mut best = -EPS;
        let ncols = if allow_art { lp.n + m } else { lp.n };
        for j in 0..ncols {
            if tab.basis.contains(&j) {
                continue;
            }
            let col = basis_col(lp, art, j);
            let red = cost(j) - pi.iter().zip(col).map(|(p, a)| p * a).sum::<f64>();
            if stall > 200 {
                if red < -EPS {
                    enter = Some(j);
                    break;
                }
            } else if red < best {
                best = red;
                enter = Some(j);
            }
        }
        let Some(e) = enter else {
            return PhaseEnd::Optimal;
        };
        let col = basis_col(lp, art, e).to_vec();
        let dir = tab.ftran(&col);
        let xb = tab.xb(&lp.b);
        // ratio test
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if dir[i] > EPS {
                let ratio = xb[i].max(0.0) / dir[i];
                if ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.map(|l: usize| tab.basis[i] < tab.basis[l]).unwrap_or(false))
                {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return PhaseEnd::Unbounded(e);
        };
        tab.basis[r] = e;
        tab.pivot(r, &dir);
        let obj: f64 = tab
            .basis
            .iter()
            .zip(tab.xb(&lp.b))
            .map(|(&j, v)| cost(j) * v)
            .sum();
        if obj > last_obj - 1e-12 {
            stall += 1;
        } else {
            stall = 0;
        }
        last_obj = obj;
    }
    PhaseEnd::IterLimit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_lp() {
        // min -x1 - 2 x2 s.t. x1 + x2 + s = 4, x1 <= 3 (x1 + s2 = 3), x >= 0
        let lp = StdLp {
            m: 2,
            n: 4,
            cols: vec![
                vec![1.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ],
            b: vec![4.0, 3.0],
            c: vec![-1.0, -2.0, 0.0, 0.0],
        };
        match solve_std(&lp, 1000) {
            LpOutcome::Optimal { value, y } => {
                assert!((value + 8.0).abs() < 1e-9, "value {value}, y {y:?}");
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn unbounded_lp() {
        // min -x1 s.t. x1 - x2 = 0, x >= 0
        let lp = StdLp {
            m: 1,
            n: 2,
            cols: vec![vec![1.0], vec![-1.0]],
            b: vec![0.0],
            c: vec![-1.0, 0.0],
        };
        match solve_std(&lp, 1000) {
            LpOutcome::Unbounded { ray, .. } => {
                assert!(ray[0] > 0.5 && ray[1] > 0.5);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn infeasible_lp() {
        // x1 = 1 and x1 = 2
        let lp = StdLp {
            m: 2,
            n: 1,
            cols: vec![vec![1.0, 1.0]],
            b: vec![1.0, 2.0],
            c: vec![0.0],
        };
        assert!(matches!(solve_std(&lp, 1000), LpOutcome::Infeasible));
    }
}
