//! Exact Wasserstein-1 and bounded-Lipschitz dual distances between finite
//! measures, solved as a linear program over Kantorovich potentials and
//! cross-checked against a primal transportation simplex.

mod simplex;
mod transportation;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{AtomicMeasure, Density, MetricMeasureSpace};

/// Relative tolerance for the equal-mass precondition of `w1`.
const MASS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportCertificate {
    /// Dual (potential) value `∫ f d(μ₀ - μ₁)`.
    pub value: f64,
    /// Optimal potential `f`, normalized by `f(0) = 0` for W1.
    pub potential: DVector<f64>,
    /// Optimal coupling with marginals `μ₀` and `μ₁` (W1 only).
    pub plan: Option<DMatrix<f64>>,
    /// Cost of the primal transport solution.
    pub primal_value: f64,
    pub duality_gap: f64,
}

/// `W₁(μ₀, μ₁) = sup { ∫ f d(μ₀ - μ₁) : Lip(f) ≤ 1 }` for nonnegative measures of equal mass.
pub fn w1(space: &MetricMeasureSpace, mu0: &AtomicMeasure, mu1: &AtomicMeasure) -> Result<TransportCertificate> {
    let n = space.len();
    let (w0, w1) = (mu0.weights(n)?, mu1.weights(n)?);
    for w in [&w0, &w1] {
        if let Some(x) = w.iter().position(|&c| c < 0.0) {
            return Err(Error::NegativeAtom { point: x, value: w[x] });
        }
    }
    let (mass0, mass1) = (w0.sum(), w1.sum());
    if (mass0 - mass1).abs() > MASS_TOL * (1.0 + mass0.max(mass1)) {
        return Err(Error::UnequalMass { mass0, mass1 });
    }
    let cost = metric_closure(space.dist());
    let b = &w0 - &w1;
    let (value, potential) = potential_lp(&cost, &b, 0)?;
    let (primal_value, net) = primal_transport(&cost, &b)?;
    let plan = net + DMatrix::from_diagonal(&w0.zip_map(&w1, f64::min));
    Ok(TransportCertificate { value, potential, plan: Some(plan), primal_value, duality_gap: (primal_value - value).abs() })
}

/// `BL⋆(μ₀, μ₁) = sup { ∫ f d(μ₀ - μ₁) : Lip(f) ≤ 1, ‖f‖_∞ ≤ 1 }` for signed measures.
///
/// Solved on the space augmented with a ground point at distance 1 from
/// every point, where the potential is pinned to 0.
pub fn bl_star(space: &MetricMeasureSpace, mu0: &AtomicMeasure, mu1: &AtomicMeasure) -> Result<TransportCertificate> {
    let n = space.len();
    let b = mu0.weights(n)? - mu1.weights(n)?;
    let mut cost = DMatrix::from_element(n + 1, n + 1, 1.0);
    for x in 0..n {
        for y in 0..n {
            cost[(x, y)] = space.d(x, y).min(2.0);
        }
    }
    cost[(n, n)] = 0.0;
    let cost = metric_closure(&cost);
    let mut bg = DVector::zeros(n + 1);
    bg.rows_mut(0, n).copy_from(&b);
    bg[n] = -b.sum();
    let (value, potential) = potential_lp(&cost, &bg, n)?;
    let (primal_value, _) = primal_transport(&cost, &bg)?;
    Ok(TransportCertificate {
        value,
        potential: potential.rows(0, n).into_owned(),
        plan: None,
        primal_value,
        duality_gap: (primal_value - value).abs(),
    })
}

/// `W₁(f₀𝔪, f₁𝔪)`.
pub fn w1_densities(space: &MetricMeasureSpace, f0: &Density, f1: &Density) -> Result<TransportCertificate> {
    space.check_len(f0)?;
    space.check_len(f1)?;
    w1(space, &AtomicMeasure::from_density(space, f0), &AtomicMeasure::from_density(space, f1))
}

/// `BL⋆(f₀𝔪, f₁𝔪)`.
pub fn bl_star_densities(space: &MetricMeasureSpace, f0: &Density, f1: &Density) -> Result<TransportCertificate> {
    space.check_len(f0)?;
    space.check_len(f1)?;
    bl_star(space, &AtomicMeasure::from_density(space, f0), &AtomicMeasure::from_density(space, f1))
}

/// Shortest-path closure of a symmetric cost matrix.
fn metric_closure(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let mut c = d.clone();
    for z in 0..n {
        for x in 0..n {
            for y in 0..n {
                let via = c[(x, z)] + c[(z, y)];
                if via < c[(x, y)] {
                    c[(x, y)] = via;
                }
            }
        }
    }
    c
}

/// Maximizes `Σ b(x) f(x)` subject to `f(x) - f(y) ≤ c(x, y)` and `f(root) = 0`.
///
/// Substituting `u(x) = f(x) + c(root, x)` makes every right-hand side
/// nonnegative. Pairs implied by a two-step path through a third point are
/// dropped.
fn potential_lp(cost: &DMatrix<f64>, b: &DVector<f64>, root: usize) -> Result<(f64, DVector<f64>)> {
    let n = cost.nrows();
    let vars: Vec<usize> = (0..n).filter(|&x| x != root).collect();
    let col = |x: usize| if x < root { Some(x) } else if x == root { None } else { Some(x - 1) };
    let k = vars.len();
    let mut a = Vec::new();
    let mut r = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x == y || (0..n).any(|z| z != x && z != y && cost[(x, z)] + cost[(z, y)] <= cost[(x, y)]) {
                continue;
            }
            let mut row = vec![0.0; k];
            if let Some(i) = col(x) {
                row[i] += 1.0;
            }
            if let Some(j) = col(y) {
                row[j] -= 1.0;
            }
            if row.iter().all(|&v| v == 0.0) {
                continue;
            }
            a.extend(row);
            r.push((cost[(x, y)] + cost[(root, x)] - cost[(root, y)]).max(0.0));
        }
    }
    let c: Vec<f64> = vars.iter().map(|&x| b[x]).collect();
    let sol = simplex::maximize(&a, &r, &c)?;
    let mut f = DVector::zeros(n);
    for (i, &x) in vars.iter().enumerate() {
        f[x] = sol.u[i] - cost[(root, x)];
    }
    Ok((b.dot(&f), f))
}

/// Optimal cost of moving the positive part of `b` onto its negative part.
fn primal_transport(cost: &DMatrix<f64>, b: &DVector<f64>) -> Result<(f64, DMatrix<f64>)> {
    let n = b.len();
    let sources: Vec<usize> = (0..n).filter(|&x| b[x] > 0.0).collect();
    let sinks: Vec<usize> = (0..n).filter(|&x| b[x] < 0.0).collect();
    let sub = DMatrix::from_fn(sources.len(), sinks.len(), |i, j| cost[(sources[i], sinks[j])]);
    let supply: Vec<f64> = sources.iter().map(|&x| b[x]).collect();
    let demand: Vec<f64> = sinks.iter().map(|&x| -b[x]).collect();
    if supply.is_empty() || demand.is_empty() {
        return Ok((0.0, DMatrix::zeros(n, n)));
    }
    let (value, flow) = transportation::solve(&sub, &supply, &demand)?;
    let mut plan = DMatrix::zeros(n, n);
    for (i, &x) in sources.iter().enumerate() {
        for (j, &y) in sinks.iter().enumerate() {
            plan[(x, y)] = flow[(i, j)];
        }
    }
    Ok((value, plan))
}
