//! The heat semigroup `H_t = exp(tΔ)` through an 𝔪-orthonormal
//! eigendecomposition of `-Δ`, its kernel densities, the dual action on
//! measures, the optimal smoothing constant `c⋆(t)` and the
//! ultracontractivity profile `θ(t)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::Dirichlet;
use crate::error::{require_nonnegative_time, require_positive_time, Error, Result};
use crate::quadrature;
use crate::space::{AtomicMeasure, Density, MetricMeasureSpace};

const RESIDUAL_TOL: f64 = 1e-9;
const PRIMITIVE_ABS_TOL: f64 = 1e-15;
const PRIMITIVE_REL_TOL: f64 = 1e-13;
const PRIMITIVE_MAX_LEVELS: usize = 4 * 40;
const KINK_MIN_FRACTION: f64 = 1e-6;
const KINK_SIGN_TOL: f64 = 1e-13;
const KINK_WIDTH_TOL: f64 = 1e-9;
const KINK_TIE_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct HeatOperator {
    space: MetricMeasureSpace,
    dirichlet: Dirichlet,
    eigenvalues: DVector<f64>,
    /// Column `i` is `φ_i`, with `Σ_x φ_i(x) φ_j(x) m(x) = δ_ij`.
    eigenvectors: DMatrix<f64>,
}

impl HeatOperator {
    pub fn new(space: MetricMeasureSpace, dirichlet: Dirichlet) -> Result<Self> {
        let n = space.len();
        if dirichlet.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: dirichlet.len() });
        }
        if let Some(x) = space.mass().iter().position(|&m| !(m > 0.0)) {
            return Err(Error::InvalidArgument(format!("point {x} has non-positive mass")));
        }
        let inv_sqrt_m = space.mass().map(|m| 1.0 / m.sqrt());
        let l = dirichlet.graph_laplacian();
        let sym = DMatrix::from_fn(n, n, |i, j| inv_sqrt_m[i] * l[(i, j)] * inv_sqrt_m[j]);
        let sym = (&sym + sym.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let mut eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut eigenvectors = DMatrix::from_fn(n, n, |x, k| eig.eigenvectors[(x, order[k])] * inv_sqrt_m[x]);

        // connected with finite mass: the bottom of the spectrum is exactly the constants
        eigenvalues[0] = 0.0;
        let c = 1.0 / space.total_mass().sqrt();
        eigenvectors.column_mut(0).fill(c);
        for k in 1..n {
            let mut col = eigenvectors.column_mut(k);
            let scale = col.amax();
            if let Some(x) = col.iter().position(|v| v.abs() > 1e-6 * scale) {
                if col[x] < 0.0 {
                    col.neg_mut();
                }
            }
            eigenvalues[k] = eigenvalues[k].max(0.0);
        }

        let op = Self { space, dirichlet, eigenvalues, eigenvectors };
        for k in 0..n {
            let phi = op.eigenvectors.column(k).into_owned();
            let lap = op.dirichlet.laplacian(&op.space, &phi);
            let residual = (-lap - &phi * op.eigenvalues[k]).amax();
            if !(residual <= RESIDUAL_TOL * (1.0 + op.eigenvalues[k])) {
                return Err(Error::Eigen { index: k, residual });
            }
        }
        Ok(op)
    }

    pub fn space(&self) -> &MetricMeasureSpace {
        &self.space
    }

    pub fn dirichlet(&self) -> &Dirichlet {
        &self.dirichlet
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> Density {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `⟨f, φ_i⟩_𝔪` for every `i`.
    pub fn coefficients(&self, f: &Density) -> DVector<f64> {
        self.eigenvectors.tr_mul(&f.component_mul(self.space.mass()))
    }

    fn synthesize(&self, coeffs: &DVector<f64>) -> Density {
        &self.eigenvectors * coeffs
    }

    fn decay(&self, t: f64) -> DVector<f64> {
        self.eigenvalues.map(|l| (-l * t).exp())
    }

    pub fn apply(&self, t: f64, f: &Density) -> Result<Density> {
        require_nonnegative_time(t)?;
        self.space.check_len(f)?;
        if t == 0.0 {
            return Ok(f.clone());
        }
        Ok(self.synthesize(&self.coefficients(f).component_mul(&self.decay(t))))
    }

    /// Kernel matrix with rows `h_t[x]`: `H_t f(x) = Σ_y h_t[x](y) f(y) m(y)`.
    pub fn kernel(&self, t: f64) -> Result<DMatrix<f64>> {
        require_positive_time(t)?;
        let half = self.eigenvalues.map(|l| (-0.5 * l * t).exp());
        let mut b = self.eigenvectors.clone();
        for (k, mut col) in b.column_iter_mut().enumerate() {
            col *= half[k];
        }
        let k = &b * b.transpose();
        Ok((&k + k.transpose()) * 0.5)
    }

    pub fn kernel_density(&self, t: f64, x: usize) -> Result<Density> {
        if x >= self.len() {
            return Err(Error::InvalidArgument(format!("point {x} out of range")));
        }
        Ok(self.kernel(t)?.row(x).transpose())
    }

    /// `H_t⋆μ = Σ_k c_k h_t[x_k] 𝔪`, returned with one atom per point.
    pub fn dual_measure(&self, t: f64, mu: &AtomicMeasure) -> Result<AtomicMeasure> {
        let k = self.kernel(t)?;
        let w = mu.weights(self.len())?;
        let density = k.tr_mul(&w);
        Ok(AtomicMeasure::from_density(&self.space, &density))
    }

    pub fn c_star(&self, t: f64) -> Result<f64> {
        Ok(self.c_star_with_witness(t)?.0)
    }

    /// `c⋆(t) = max_{x≠y} ‖h_t[x] - h_t[y]‖_{L¹} / d(x, y)` with the maximizing pair.
    pub fn c_star_with_witness(&self, t: f64) -> Result<(f64, usize, usize)> {
        let k = self.kernel(t)?;
        Ok(c_star_from_kernel(&k, &self.space))
    }

    /// `sup_t c⋆(t) ≤ 2 / min_{x≠y} d(x, y)`, since every `h_t[x]` has unit mass.
    pub fn c_star_sup_bound(&self) -> f64 {
        2.0 / self.space.min_separation()
    }

    /// `θ(t) = max_{x,y} h_t[x](y)`, the L¹ → L∞ norm of `H_t`.
    pub fn theta(&self, t: f64) -> Result<f64> {
        Ok(self.kernel(t)?.max())
    }

    /// `C⋆(t) = ∫_0^t c⋆(s) ds` by adaptive quadrature.
    pub fn c_star_primitive(&self, t: f64) -> Result<f64> {
        require_nonnegative_time(t)?;
        Ok(self.integrate_c_star(0.0, t))
    }

    /// Integrates over dyadic pieces `[b/2^(k+1), b/2^k]` split into quarters, further split at
    /// every located kink of `c⋆`, so each quadrature call sees a smooth integrand.
    fn integrate_c_star(&self, a: f64, b: f64) -> f64 {
        let mut cuts = vec![b];
        let mut hi = b;
        while hi * 0.5 > a && cuts.len() < PRIMITIVE_MAX_LEVELS {
            let lo = hi * 0.5;
            for q in 1..4 {
                cuts.push(hi - 0.125 * hi * q as f64);
            }
            cuts.push(lo);
            hi = lo;
        }
        if hi > a {
            let width = (hi - a) * 0.25;
            for q in 1..4 {
                cuts.push(hi - width * q as f64);
            }
        }
        cuts.push(a);
        cuts.reverse();
        // close to zero the integrand's contribution is negligible and kinks are not tracked
        let signatures: Vec<_> = cuts
            .iter()
            .map(|&t| (t > 0.0 && t >= b * KINK_MIN_FRACTION).then(|| self.kink_signature(t)))
            .collect();
        let mut points = vec![a];
        for (i, w) in cuts.windows(2).enumerate() {
            if let (Some(sl), Some(sh)) = (&signatures[i], &signatures[i + 1]) {
                self.locate_kinks(w[0], w[1], sl, sh, &mut points);
            }
            points.push(w[1]);
        }
        points
            .windows(2)
            .map(|w| {
                quadrature::integrate(
                    |s| self.c_star(s).expect("quadrature nodes are interior, hence positive"),
                    w[0],
                    w[1],
                    PRIMITIVE_ABS_TOL,
                    PRIMITIVE_REL_TOL,
                )
            })
            .sum()
    }

    /// Witness pair of `c⋆(t)` and the sign pattern of `h_t[x] - h_t[y]` along it; `c⋆` is
    /// smooth on any interval where this stays constant.
    fn kink_signature(&self, t: f64) -> (usize, usize, Vec<i8>) {
        let k = self.kernel(t).expect("kink search times are positive");
        let n = self.len();
        let m = self.space.mass();
        let ratios: Vec<(f64, usize, usize)> = (0..n)
            .flat_map(|x| ((x + 1)..n).map(move |y| (x, y)))
            .map(|(x, y)| ((0..n).map(|z| (k[(x, z)] - k[(y, z)]).abs() * m[z]).sum::<f64>() / self.space.d(x, y), x, y))
            .collect();
        let best = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
        // first pair within rounding of the maximum, so exact ties do not flicker
        let &(_, x, y) = ratios.iter().find(|r| r.0 >= best * (1.0 - KINK_TIE_TOL)).expect("at least two points");
        let scale = k.amax();
        let signs = (0..self.len())
            .map(|z| {
                let v = k[(x, z)] - k[(y, z)];
                if v.abs() <= KINK_SIGN_TOL * scale {
                    0
                } else if v > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        (x, y, signs)
    }

    /// Appends to `out`, in increasing order, the kinks strictly inside `(lo, hi)` where the
    /// signature changes, located by bisection.
    fn locate_kinks(
        &self,
        lo: f64,
        hi: f64,
        sig_lo: &(usize, usize, Vec<i8>),
        sig_hi: &(usize, usize, Vec<i8>),
        out: &mut Vec<f64>,
    ) {
        if sig_lo == sig_hi {
            return;
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= KINK_WIDTH_TOL * hi || mid <= lo || mid >= hi {
            out.push(mid);
            return;
        }
        let sig_mid = self.kink_signature(mid);
        self.locate_kinks(lo, mid, sig_lo, &sig_mid, out);
        if sig_mid != *sig_lo && sig_mid != *sig_hi {
            out.push(mid);
        }
        self.locate_kinks(mid, hi, &sig_mid, sig_hi, out);
    }

    /// Samples `c⋆`, `C⋆` and `θ` on an increasing grid of positive times.
    pub fn profile(&self, grid: &[f64]) -> Result<SmoothingProfile> {
        for (i, &t) in grid.iter().enumerate() {
            require_positive_time(t)?;
            if i > 0 && t <= grid[i - 1] {
                return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
            }
        }
        let pieces: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| self.integrate_c_star(if i == 0 { 0.0 } else { grid[i - 1] }, grid[i]))
            .collect();
        let samples: Vec<(f64, f64)> = grid
            .par_iter()
            .map(|&t| {
                let k = self.kernel(t).expect("grid times are positive");
                (c_star_from_kernel(&k, &self.space).0, k.max())
            })
            .collect();
        let mut primitive = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        for p in pieces {
            acc += p;
            primitive.push(acc);
        }
        Ok(SmoothingProfile {
            times: grid.to_vec(),
            c_star: samples.iter().map(|s| s.0).collect(),
            primitive,
            theta: samples.iter().map(|s| s.1).collect(),
            sup_bound: self.c_star_sup_bound(),
        })
    }

    /// `|∫ g (f - H_t f) d𝔪 - ∫_0^t ∫ Df·D(H_s g) d𝔪 ds|`, the right side by
    /// composite Gauss–Legendre quadrature in `s`.
    pub fn heat_ibp_residual(&self, t: f64, f: &Density, g: &Density) -> Result<f64> {
        require_positive_time(t)?;
        self.space.check_len(f)?;
        self.space.check_len(g)?;
        let lhs = self.space.inner(g, &(f - self.apply(t, f)?));
        let g_coeffs = self.coefficients(g);
        let rhs = quadrature::integrate_doubling(
            |s| {
                let hg = self.synthesize(&g_coeffs.component_mul(&self.decay(s)));
                self.dirichlet.bilinear(f, &hg)
            },
            0.0,
            t,
            1e-10,
        );
        Ok((lhs - rhs).abs())
    }
}

pub(crate) fn c_star_from_kernel(k: &DMatrix<f64>, space: &MetricMeasureSpace) -> (f64, usize, usize) {
    let n = space.len();
    let m = space.mass();
    let mut best = (0.0, 0, 1);
    for x in 0..n {
        for y in (x + 1)..n {
            let l1: f64 = (0..n).map(|z| (k[(x, z)] - k[(y, z)]).abs() * m[z]).sum();
            let q = l1 / space.d(x, y);
            if q > best.0 {
                best = (q, x, y);
            }
        }
    }
    best
}

/// `c⋆`, `C⋆ = ∫c⋆` and `θ` sampled on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingProfile {
    pub times: Vec<f64>,
    pub c_star: Vec<f64>,
    pub primitive: Vec<f64>,
    pub theta: Vec<f64>,
    /// `2 / min d`, an upper bound for `c⋆` at every time.
    pub sup_bound: f64,
}

impl SmoothingProfile {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }

    /// `(t, c⋆(t))` pairs.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.times.iter().copied().zip(self.c_star.iter().copied()).collect()
    }

    /// Samples `(t_{i+1}, c⋆(t_i))` plus `(t_0, sup c⋆)`. Because `c⋆` is
    /// non-increasing, any `M/t^b` dominating these points dominates `c⋆`
    /// on all of `(0, t_last]`.
    pub fn step_envelope_samples(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        if let Some(&t0) = self.times.first() {
            out.push((t0, self.sup_bound));
        }
        for i in 1..self.len() {
            out.push((self.times[i], self.c_star[i - 1]));
        }
        out
    }
}

/// Log-spaced grid of `count` points from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && min.is_finite() && max.is_finite()) || count < 2 {
        return Err(Error::InvalidArgument(format!("bad log grid {min},{max},{count}")));
    }
    let (lo, hi) = (min.ln(), max.ln());
    let mut grid: Vec<f64> = (0..count).map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp()).collect();
    grid[0] = min;
    grid[count - 1] = max;
    Ok(grid)
}
