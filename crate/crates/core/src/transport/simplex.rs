//! Dense dictionary simplex for `max cᵀu  s.t.  A u ≤ r,  u ≥ 0` with
//! `r ≥ 0`, so the origin is a feasible starting vertex.

use crate::error::{Error, Result};

const MAX_DEGENERATE_RUN: usize = 50;

#[derive(Clone, Debug)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct LpSolution {
    pub u: Vec<f64>,
    /// Dual multipliers of the rows, all nonnegative.
    pub duals: Vec<f64>,
    pub value: f64,
}

/// `a` is row-major with `r.len()` rows and `c.len()` columns.
pub(crate) fn maximize(a: &[f64], r: &[f64], c: &[f64]) -> Result<LpSolution> {
    let m = r.len();
    let k = c.len();
    if a.len() != m * k {
        return Err(Error::Solver(format!("constraint matrix has {} entries, want {}", a.len(), m * k)));
    }
    if r.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::Solver("right-hand side must be finite and nonnegative".into()));
    }
    let scale = c.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let eps = 1e-12 * scale;

    // dictionary: x_basic[i] = beta[i] - Σ_j tab[i][j] x_nonbasic[j];  z = z0 + Σ_j cbar[j] x_nonbasic[j]
    let mut tab = a.to_vec();
    let mut beta = r.to_vec();
    let mut cbar = c.to_vec();
    let mut z0 = 0.0;
    // variables 0..k are structural, k..k+m are slacks
    let mut basic: Vec<usize> = (k..k + m).collect();
    let mut nonbasic: Vec<usize> = (0..k).collect();

    let max_iter = 50 * (m + k) + 1000;
    let mut degenerate_run = 0;
    for _ in 0..max_iter {
        let bland = degenerate_run >= MAX_DEGENERATE_RUN;
        let entering = if bland {
            (0..k).filter(|&j| cbar[j] > eps).min_by_key(|&j| nonbasic[j])
        } else {
            (0..k)
                .filter(|&j| cbar[j] > eps)
                .fold(None, |best: Option<usize>, j| match best {
                    Some(b) if cbar[b] >= cbar[j] => Some(b),
                    _ => Some(j),
                })
        };
        let Some(q) = entering else {
            let mut u = vec![0.0; k];
            let mut duals = vec![0.0; m];
            for (i, &v) in basic.iter().enumerate() {
                if v < k {
                    u[v] = beta[i];
                }
            }
            for (j, &v) in nonbasic.iter().enumerate() {
                if v >= k {
                    duals[v - k] = (-cbar[j]).max(0.0);
                }
            }
            return Ok(LpSolution { u, duals, value: z0 });
        };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = tab[i * k + q];
            if coef > 1e-12 {
                let ratio = beta[i].max(0.0) / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((p, best)) => {
                        if ratio < best || (ratio == best && basic[i] < basic[p]) {
                            Some((i, ratio))
                        } else {
                            Some((p, best))
                        }
                    }
                };
            }
        }
        let Some((p, step)) = leave else {
            return Err(Error::Solver("linear program is unbounded".into()));
        };
        degenerate_run = if step * cbar[q] > eps { 0 } else { degenerate_run + 1 };

        // pivot: x_nonbasic[q] enters, x_basic[p] leaves
        let piv = tab[p * k + q];
        let inv = 1.0 / piv;
        beta[p] *= inv;
        for j in 0..k {
            tab[p * k + j] *= inv;
        }
        tab[p * k + q] = inv;
        for i in 0..m {
            if i == p {
                continue;
            }
            let f = tab[i * k + q];
            if f == 0.0 {
                continue;
            }
            beta[i] -= f * beta[p];
            for j in 0..k {
                if j != q {
                    tab[i * k + j] -= f * tab[p * k + j];
                }
            }
            tab[i * k + q] = -f * inv;
        }
        let f = cbar[q];
        z0 += f * beta[p];
        for j in 0..k {
            if j != q {
                cbar[j] -= f * tab[p * k + j];
            }
        }
        cbar[q] = -f * inv;
        std::mem::swap(&mut basic[p], &mut nonbasic[q]);
    }
    Err(Error::Solver("simplex iteration limit reached".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y  s.t.  x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  →  (2, 6), 36
        let a = [1.0, 0.0, 0.0, 2.0, 3.0, 2.0];
        let s = maximize(&a, &[4.0, 12.0, 18.0], &[3.0, 5.0]).unwrap();
        assert!((s.value - 36.0).abs() < 1e-12);
        assert!((s.u[0] - 2.0).abs() < 1e-12 && (s.u[1] - 6.0).abs() < 1e-12);
        // dual: min 4y1 + 12y2 + 18y3 → (0, 1.5, 1)
        let dual: f64 = s.duals.iter().zip([4.0, 12.0, 18.0]).map(|(y, r)| y * r).sum();
        assert!((dual - 36.0).abs() < 1e-12);
        assert!((s.duals[1] - 1.5).abs() < 1e-12 && (s.duals[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn origin_optimal_and_unbounded() {
        let s = maximize(&[1.0], &[0.0], &[-1.0]).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(maximize(&[-1.0], &[1.0], &[1.0]).is_err());
    }
}
