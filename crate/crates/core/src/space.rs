//! Finite metric-measure spaces and the objects living on them: densities,
//! subsets and atomic measures.
//!
//! Every function on a finite space is bounded, Lipschitz and integrable, so
//! a [`Density`] is just a vector of values; its norms are taken against the
//! point masses of the space.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real function on the points of a space.
pub type Density = DVector<f64>;

const TRIANGLE_RTOL: f64 = 1e-12;

/// One failed axiom, with the indices that witness it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum Violation {
    TooFewPoints { n: usize },
    Shape { rows: usize, cols: usize, masses: usize },
    NonFinite { x: usize, y: usize },
    NonzeroDiagonal { x: usize },
    Asymmetric { x: usize, y: usize },
    NonPositiveDistance { x: usize, y: usize },
    Triangle { x: usize, y: usize, z: usize },
    ZeroMass { x: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::TooFewPoints { n } => write!(f, "need at least 2 points, got {n}"),
            Violation::Shape { rows, cols, masses } => {
                write!(f, "distance matrix is {rows}x{cols} but there are {masses} masses")
            }
            Violation::NonFinite { x, y } => write!(f, "non-finite entry at ({x},{y})"),
            Violation::NonzeroDiagonal { x } => write!(f, "d({x},{x}) != 0"),
            Violation::Asymmetric { x, y } => write!(f, "d({x},{y}) != d({y},{x})"),
            Violation::NonPositiveDistance { x, y } => write!(f, "d({x},{y}) <= 0"),
            Violation::Triangle { x, y, z } => {
                write!(f, "triangle violation at ({x},{y},{z}): d({x},{z}) > d({x},{y}) + d({y},{z})")
            }
            Violation::ZeroMass { x } => write!(f, "zero-mass point {x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricMeasureSpace {
    dist: DMatrix<f64>,
    mass: DVector<f64>,
}

impl MetricMeasureSpace {
    /// Builds a space, rejecting it if any axiom fails.
    pub fn new(dist: DMatrix<f64>, mass: DVector<f64>) -> Result<Self> {
        let space = Self::from_parts_unchecked(dist, mass);
        let violations = space.validate();
        if violations.is_empty() {
            Ok(space)
        } else {
            Err(Error::InvalidSpace(violations))
        }
    }

    /// Wraps raw data without checking it; use [`validate`](Self::validate)
    /// to inspect what is wrong.
    pub fn from_parts_unchecked(dist: DMatrix<f64>, mass: DVector<f64>) -> Self {
        Self { dist, mass }
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_space(&self.dist, &self.mass)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn dist(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[(x, y)]
    }

    pub fn mass(&self) -> &DVector<f64> {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.sum()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.max()
    }

    /// Smallest distance between two distinct points.
    pub fn min_separation(&self) -> f64 {
        let n = self.len();
        let mut best = f64::INFINITY;
        for x in 0..n {
            for y in (x + 1)..n {
                best = best.min(self.dist[(x, y)]);
            }
        }
        best
    }

    pub(crate) fn with_dist(&self, dist: DMatrix<f64>) -> Self {
        Self { dist, mass: self.mass.clone() }
    }

    pub(crate) fn check_len(&self, f: &Density) -> Result<()> {
        if f.len() == self.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.len(), got: f.len() })
        }
    }

    pub fn integral(&self, f: &Density) -> f64 {
        f.dot(&self.mass)
    }

    pub fn inner(&self, f: &Density, g: &Density) -> f64 {
        f.iter().zip(g.iter()).zip(self.mass.iter()).map(|((a, b), m)| a * b * m).sum()
    }

    pub fn l1_norm(&self, f: &Density) -> f64 {
        f.iter().zip(self.mass.iter()).map(|(a, m)| a.abs() * m).sum()
    }

    pub fn l2_norm(&self, f: &Density) -> f64 {
        self.inner(f, f).sqrt()
    }

    pub fn linf_norm(&self, f: &Density) -> f64 {
        f.amax()
    }

    /// Global Lipschitz constant `max_{x != y} |f(x) - f(y)| / d(x, y)`.
    pub fn lipschitz(&self, f: &Density) -> f64 {
        let n = self.len();
        let mut lip = 0.0_f64;
        for x in 0..n {
            for y in (x + 1)..n {
                lip = lip.max((f[x] - f[y]).abs() / self.dist[(x, y)]);
            }
        }
        lip
    }

    /// Pointwise slope `|Df|(x) = max_{y != x} |f(y) - f(x)| / d(x, y)`.
    pub fn metric_slope(&self, f: &Density) -> Result<Density> {
        self.check_len(f)?;
        let n = self.len();
        Ok(Density::from_fn(n, |x, _| {
            (0..n)
                .filter(|&y| y != x)
                .map(|y| (f[y] - f[x]).abs() / self.dist[(x, y)])
                .fold(0.0, f64::max)
        }))
    }

    pub fn subset_mass(&self, a: &Subset) -> f64 {
        a.iter().map(|x| self.mass[x]).sum()
    }
}

fn validate_space(dist: &DMatrix<f64>, mass: &DVector<f64>) -> Vec<Violation> {
    let n = mass.len();
    let mut out = Vec::new();
    if dist.nrows() != n || dist.ncols() != n {
        out.push(Violation::Shape { rows: dist.nrows(), cols: dist.ncols(), masses: n });
        return out;
    }
    if n < 2 {
        out.push(Violation::TooFewPoints { n });
    }
    for x in 0..n {
        if !(mass[x].is_finite() && mass[x] > 0.0) {
            out.push(Violation::ZeroMass { x });
        }
    }
    let mut finite = true;
    for x in 0..n {
        for y in 0..n {
            if !dist[(x, y)].is_finite() {
                out.push(Violation::NonFinite { x, y });
                finite = false;
            }
        }
    }
    if !finite {
        return out;
    }
    for x in 0..n {
        if dist[(x, x)] != 0.0 {
            out.push(Violation::NonzeroDiagonal { x });
        }
        for y in (x + 1)..n {
            if dist[(x, y)] != dist[(y, x)] {
                out.push(Violation::Asymmetric { x, y });
            }
            if dist[(x, y)] <= 0.0 || dist[(y, x)] <= 0.0 {
                out.push(Violation::NonPositiveDistance { x, y });
            }
        }
    }
    for x in 0..n {
        for z in (x + 1)..n {
            let direct = dist[(x, z)];
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let via = dist[(x, y)] + dist[(y, z)];
                if direct > via * (1.0 + TRIANGLE_RTOL) {
                    out.push(Violation::Triangle { x, y, z });
                }
            }
        }
    }
    out
}

/// Componentwise positive part `max(f, 0)`.
pub fn positive_part(f: &Density) -> Density {
    f.map(|v| v.max(0.0))
}

/// Componentwise negative part `max(-f, 0)`, so that `f = f⁺ - f⁻`.
pub fn negative_part(f: &Density) -> Density {
    f.map(|v| (-v).max(0.0))
}

/// A subset of the points of a space, stored as a mask.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subset {
    mask: Vec<bool>,
}

impl Subset {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut mask = vec![false; n];
        for &i in indices {
            mask[i] = true;
        }
        Self { mask }
    }

    /// Bit `i` of `bits` selects point `i`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self { mask: (0..n).map(|i| bits >> i & 1 == 1).collect() }
    }

    /// `{x : f(x) > 0}`.
    pub fn positive_set(f: &Density) -> Self {
        Self { mask: f.iter().map(|&v| v > 0.0).collect() }
    }

    pub fn full(n: usize) -> Self {
        Self { mask: vec![true; n] }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask[x]
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn complement(&self) -> Self {
        Self { mask: self.mask.iter().map(|b| !b).collect() }
    }

    pub fn indicator(&self) -> Density {
        Density::from_iterator(self.mask.len(), self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }))
    }

    pub fn to_bits(&self) -> u64 {
        self.mask.iter().enumerate().filter(|(_, &b)| b).fold(0, |acc, (i, _)| acc | 1 << i)
    }
}

/// A finite signed measure `Σ c_k δ_{x_k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<(usize, f64)>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(usize, f64)>) -> Self {
        Self { atoms }
    }

    pub fn dirac(x: usize) -> Self {
        Self { atoms: vec![(x, 1.0)] }
    }

    /// The measure `f𝔪`, with atom `f(x) m(x)` at every point.
    pub fn from_density(space: &MetricMeasureSpace, f: &Density) -> Self {
        Self {
            atoms: f.iter().zip(space.mass().iter()).enumerate().map(|(x, (v, m))| (x, v * m)).collect(),
        }
    }

    /// Dense weights over all `n` points (duplicate atoms are summed).
    pub fn from_weights(weights: &DVector<f64>) -> Self {
        Self { atoms: weights.iter().copied().enumerate().collect() }
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    pub fn weights(&self, n: usize) -> Result<DVector<f64>> {
        let mut w = DVector::zeros(n);
        for &(x, c) in &self.atoms {
            if x >= n {
                return Err(Error::InvalidArgument(format!("atom at point {x} but space has {n} points")));
            }
            w[x] += c;
        }
        Ok(w)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|a| a.1 >= 0.0)
    }

    /// `|μ|(X)` after merging atoms at the same point.
    pub fn total_variation(&self, n: usize) -> Result<f64> {
        Ok(self.weights(n)?.iter().map(|c| c.abs()).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn p2() -> MetricMeasureSpace {
        let s = 2f64.sqrt();
        MetricMeasureSpace::new(dmatrix![0.0, s; s, 0.0], DVector::from_vec(vec![1.0, 1.0])).unwrap()
    }

    #[test]
    fn two_point_is_valid() {
        assert!(p2().validate().is_empty());
    }

    #[test]
    fn triangle_violation_is_named() {
        let d = dmatrix![0.0, 1.0, 3.0; 1.0, 0.0, 1.0; 3.0, 1.0, 0.0];
        let s = MetricMeasureSpace::from_parts_unchecked(d, DVector::from_element(3, 1.0));
        assert_eq!(s.validate(), vec![Violation::Triangle { x: 0, y: 1, z: 2 }]);
        assert!(matches!(
            MetricMeasureSpace::new(s.dist().clone(), s.mass().clone()),
            Err(Error::InvalidSpace(_))
        ));
    }

    #[test]
    fn zero_mass_is_named() {
        let d = dmatrix![0.0, 1.0; 1.0, 0.0];
        let s = MetricMeasureSpace::from_parts_unchecked(d, DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(s.validate(), vec![Violation::ZeroMass { x: 1 }]);
    }

    #[test]
    fn single_point_rejected() {
        let s = MetricMeasureSpace::from_parts_unchecked(DMatrix::zeros(1, 1), DVector::from_element(1, 1.0));
        assert_eq!(s.validate(), vec![Violation::TooFewPoints { n: 1 }]);
    }

    #[test]
    fn asymmetric_and_diagonal() {
        let d = dmatrix![0.5, 1.0; 2.0, 0.0];
        let s = MetricMeasureSpace::from_parts_unchecked(d, DVector::from_element(2, 1.0));
        let v = s.validate();
        assert!(v.contains(&Violation::NonzeroDiagonal { x: 0 }));
        assert!(v.contains(&Violation::Asymmetric { x: 0, y: 1 }));
    }

    #[test]
    fn norms_use_masses() {
        let s = MetricMeasureSpace::new(dmatrix![0.0, 1.0; 1.0, 0.0], DVector::from_vec(vec![2.0, 0.5])).unwrap();
        let f = DVector::from_vec(vec![-1.0, 4.0]);
        assert_eq!(s.l1_norm(&f), 2.0 + 2.0);
        assert_eq!(s.l2_norm(&f), (2.0f64 + 8.0).sqrt());
        assert_eq!(s.linf_norm(&f), 4.0);
        assert_eq!(s.integral(&f), 0.0);
        let (p, m) = (positive_part(&f), negative_part(&f));
        assert_eq!(&p - &m, f);
        assert!(p.iter().zip(m.iter()).all(|(a, b)| a * b == 0.0));
    }

    #[test]
    fn slope_on_two_point() {
        let s = p2();
        let slope = s.metric_slope(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((slope[0] - r).abs() < 1e-15 && (slope[1] - r).abs() < 1e-15);
        let slope = s.metric_slope(&DVector::from_vec(vec![3.0, 3.0])).unwrap();
        assert_eq!(slope.amax(), 0.0);
    }

    #[test]
    fn atomic_measures() {
        let s = p2();
        let mu = AtomicMeasure::from_density(&s, &DVector::from_vec(vec![1.0, -2.0]));
        assert!(!mu.is_nonnegative());
        assert_eq!(mu.total_variation(2).unwrap(), 3.0);
        let nu = AtomicMeasure::new(vec![(0, 1.0), (0, -1.0), (1, 2.0)]);
        assert_eq!(nu.total_variation(2).unwrap(), 2.0);
        assert!(AtomicMeasure::dirac(3).weights(2).is_err());
    }

    #[test]
    fn subset_bits_round_trip() {
        let a = Subset::from_bits(5, 0b10110);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![1, 2, 4]);
        assert_eq!(a.to_bits(), 0b10110);
        assert_eq!(a.complement().to_bits(), 0b01001);
    }
}
