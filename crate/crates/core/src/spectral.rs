//! Spectral gap, eigenfunctions and the Cheeger constants `h₀`, `h₁`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::Dirichlet;
use crate::error::{Error, Result};
use crate::heat::HeatOperator;
use crate::space::{Density, MetricMeasureSpace, Subset};

/// Largest point count for exhaustive subset enumeration.
pub const ENUMERATION_LIMIT: usize = 22;

/// Gray-code steps between exact re-initializations of the running sums.
const CHUNK_BITS: u32 = 14;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda0: f64,
    pub lambda1: f64,
    pub eigenvalues: Vec<f64>,
    /// Multiplicity of every eigenvalue, aligned with `eigenvalues`.
    pub multiplicities: Vec<usize>,
}

impl SpectralSummary {
    pub fn lambda1_multiplicity(&self) -> usize {
        self.multiplicities.get(1).copied().unwrap_or(0)
    }
}

pub fn spectrum(heat: &HeatOperator) -> SpectralSummary {
    let ev: Vec<f64> = heat.eigenvalues().iter().copied().collect();
    let multiplicities = ev
        .iter()
        .map(|&l| ev.iter().filter(|&&m| (m - l).abs() <= 1e-9 * (1.0 + l.abs())).count())
        .collect();
    SpectralSummary { lambda0: ev[0], lambda1: ev[1], eigenvalues: ev, multiplicities }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerResult {
    pub value: f64,
    pub witness: Subset,
    pub exact: bool,
}

/// `h₁ = min { Per(A)/m(A) : 0 < m(A) ≤ m(X)/2 }` by enumerating every subset.
/// Ties within a relative `1e-12` go to the smallest bitmask.
pub fn h1_exact(space: &MetricMeasureSpace, dirichlet: &Dirichlet) -> Result<CheegerResult> {
    let n = space.len();
    if dirichlet.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: dirichlet.len() });
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit { n, limit: ENUMERATION_LIMIT });
    }
    let total: u64 = 1 << n;
    let chunk: u64 = 1 << CHUNK_BITS.min(n as u32);
    let starts: Vec<u64> = (0..total / chunk).map(|c| c * chunk).collect();
    let half = 0.5 * space.total_mass();
    let mass_tol = TIE_TOL * space.total_mass();
    let m: Vec<f64> = space.mass().iter().copied().collect();
    let w = dirichlet.conductances();
    let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| dirichlet.edges().iter().filter_map(|&(a, b, c)| {
            if a == x { Some((b, c)) } else if b == x { Some((a, c)) } else { None }
        }).collect())
        .collect();

    let best_per_chunk: Vec<Option<(f64, u64)>> = starts
        .par_iter()
        .map(|&start| {
            let mut mask = gray(start);
            let mut cut = vec![0.0; n];
            let mut mass = 0.0;
            for x in 0..n {
                if mask >> x & 1 == 1 {
                    mass += m[x];
                }
                for y in 0..n {
                    if (mask >> x & 1) != (mask >> y & 1) {
                        cut[x] += w[(x, y)];
                    }
                }
            }
            let mut best: Option<(f64, u64)> = None;
            for i in start..start + chunk {
                if i != start {
                    let v = (i.trailing_zeros()) as usize;
                    let inside = mask >> v & 1 == 0;
                    mask ^= 1 << v;
                    mass += if inside { m[v] } else { -m[v] };
                    cut[v] = 0.0;
                    for &(y, c) in &neighbors[v] {
                        let y_in = mask >> y & 1 == 1;
                        if y_in == inside {
                            cut[y] -= c;
                        } else {
                            cut[y] += c;
                            cut[v] += c;
                        }
                    }
                }
                if mask == 0 || mass > half + mass_tol {
                    continue;
                }
                let per: f64 = (0..n).map(|x| (0.5 * m[x] * cut[x].max(0.0)).sqrt()).sum();
                best = better(best, (per / mass, mask));
            }
            best
        })
        .collect();

    let (_, mask) = best_per_chunk
        .into_iter()
        .flatten()
        .fold(None, better)
        .ok_or_else(|| Error::InvalidArgument("no admissible subset".into()))?;
    let witness = Subset::from_bits(n, mask);
    let value = dirichlet.perimeter(space, &witness) / space.subset_mass(&witness);
    Ok(CheegerResult { value, witness, exact: true })
}

fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

fn better(best: Option<(f64, u64)>, cand: (f64, u64)) -> Option<(f64, u64)> {
    match best {
        None => Some(cand),
        Some(b) => {
            let tol = TIE_TOL * b.0.abs().max(cand.0.abs());
            if cand.0 < b.0 - tol || ((cand.0 - b.0).abs() <= tol && cand.1 < b.1) {
                Some(cand)
            } else {
                Some(b)
            }
        }
    }
}

/// Best threshold cut of the first nonconstant eigenfunction; a feasible
/// quotient, hence an upper bound for `h₁`.
pub fn h1_sweep(space: &MetricMeasureSpace, dirichlet: &Dirichlet, heat: &HeatOperator) -> CheegerResult {
    let n = space.len();
    let phi = heat.eigenvector(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phi[a].total_cmp(&phi[b]).then(a.cmp(&b)));
    let half = 0.5 * space.total_mass();
    let mut best: Option<(f64, Subset)> = None;
    let mut mask = vec![false; n];
    for &x in order.iter().take(n - 1) {
        mask[x] = true;
        let lower = Subset::from_mask(mask.clone());
        let side = if space.subset_mass(&lower) <= half { lower } else { lower.complement() };
        let q = dirichlet.perimeter(space, &side) / space.subset_mass(&side);
        if best.as_ref().map_or(true, |b| q < b.0) {
            best = Some((q, side));
        }
    }
    let (value, witness) = best.expect("n >= 2 gives at least one cut");
    CheegerResult { value, witness, exact: false }
}

/// `h₀`, which is 0 on every finite-mass space since `A = X` is admissible
/// and has zero perimeter.
pub fn h0(space: &MetricMeasureSpace) -> CheegerResult {
    CheegerResult { value: 0.0, witness: Subset::full(space.len()), exact: true }
}

/// `min Per(A)/m(A)` over nonempty proper subsets, without the mass
/// constraint of `h₁`.
pub fn h0_proper_subsets(space: &MetricMeasureSpace, dirichlet: &Dirichlet) -> Result<CheegerResult> {
    let n = space.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit { n, limit: ENUMERATION_LIMIT });
    }
    let mut best: Option<(f64, u64)> = None;
    for mask in 1..(1u64 << n) - 1 {
        let a = Subset::from_bits(n, mask);
        best = better(best, (dirichlet.perimeter(space, &a) / space.subset_mass(&a), mask));
    }
    let (value, mask) = best.expect("n >= 2");
    Ok(CheegerResult { value, witness: Subset::from_bits(n, mask), exact: true })
}

/// `2 Per({f > 0}) ‖f‖_∞ / ‖f‖_{L¹}` for a nonzero mean-zero `f`, an upper bound for `h₁`.
pub fn norm_cheeg_upper(space: &MetricMeasureSpace, dirichlet: &Dirichlet, f: &Density) -> Result<f64> {
    space.check_len(f)?;
    let l1 = space.l1_norm(f);
    if l1 == 0.0 {
        return Err(Error::InvalidArgument("f must be nonzero".into()));
    }
    let mean = space.integral(f);
    if mean.abs() > 1e-10 * l1.max(1.0) {
        return Err(Error::NotMeanZero(mean));
    }
    let per = dirichlet.perimeter(space, &Subset::positive_set(f));
    Ok(2.0 * per * space.linf_norm(f) / l1)
}
