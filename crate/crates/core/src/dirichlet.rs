//! Quadratic Dirichlet structure on a weighted graph.
//!
//! With symmetric conductances `w` and point masses `m`:
//!
//! ```text
//! Γ(f)(x) = 1/(2 m(x)) Σ_y w_xy (f(y) - f(x))²      carré du champ
//! Δf(x)   = 1/m(x)     Σ_y w_xy (f(y) - f(x))       Laplacian (≤ 0)
//! Ch(f)   = ½ Σ_x m(x) Γ(f)(x)                      Cheeger energy
//! TV(f)   = Σ_x m(x) √Γ(f)(x)                       total variation
//! ```
//!
//! `|Df|_w = √Γ(f)` plays the role of the minimal weak gradient, so that
//! `∫ |Df|_w² d𝔪 = 2 Ch(f) = -∫ f Δf d𝔪` holds exactly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::space::{Density, MetricMeasureSpace, Subset};

#[derive(Clone, Debug, PartialEq)]
pub struct Dirichlet {
    w: DMatrix<f64>,
    /// Edge list `(x, y, w_xy)` with `x < y`, `w_xy > 0`.
    edges: Vec<(usize, usize, f64)>,
}

impl Dirichlet {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        if w.ncols() != n {
            return Err(Error::InvalidDirichlet(format!("matrix is {}x{}", n, w.ncols())));
        }
        if n < 2 {
            return Err(Error::InvalidDirichlet(format!("need at least 2 points, got {n}")));
        }
        let mut edges = Vec::new();
        for x in 0..n {
            if w[(x, x)] != 0.0 {
                return Err(Error::InvalidDirichlet(format!("w({x},{x}) != 0")));
            }
            for y in (x + 1)..n {
                let (a, b) = (w[(x, y)], w[(y, x)]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidDirichlet(format!("w({x},{y}) = {a} is not a finite non-negative number")));
                }
                if a != b {
                    return Err(Error::InvalidDirichlet(format!("w({x},{y}) != w({y},{x})")));
                }
                if a > 0.0 {
                    edges.push((x, y, a));
                }
            }
        }
        let d = Self { w, edges };
        if !d.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.nrows() == 0
    }

    pub fn conductances(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn degree(&self, x: usize) -> f64 {
        self.w.row(x).sum()
    }

    fn is_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for y in 0..n {
                if !seen[y] && self.w[(x, y)] > 0.0 {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn assert_shapes(&self, space: &MetricMeasureSpace, f: &Density) {
        assert_eq!(space.len(), self.len(), "space and conductances disagree on point count");
        assert_eq!(f.len(), self.len(), "function length does not match point count");
    }

    /// The graph Laplacian `L = D - W` (so that `-Δ = M⁻¹ L`).
    pub fn graph_laplacian(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut l = -self.w.clone();
        for x in 0..n {
            l[(x, x)] = self.degree(x);
        }
        l
    }

    pub fn carre_du_champ(&self, space: &MetricMeasureSpace, f: &Density) -> Density {
        self.assert_shapes(space, f);
        let mut g = Density::zeros(self.len());
        for &(x, y, w) in &self.edges {
            let sq = w * (f[y] - f[x]).powi(2);
            g[x] += sq;
            g[y] += sq;
        }
        for (gx, m) in g.iter_mut().zip(space.mass().iter()) {
            *gx /= 2.0 * m;
        }
        g
    }

    /// `|Df|_w = √Γ(f)`.
    pub fn weak_gradient(&self, space: &MetricMeasureSpace, f: &Density) -> Density {
        self.carre_du_champ(space, f).map(f64::sqrt)
    }

    pub fn laplacian(&self, space: &MetricMeasureSpace, f: &Density) -> Density {
        self.assert_shapes(space, f);
        let mut out = Density::zeros(self.len());
        for &(x, y, w) in &self.edges {
            let flux = w * (f[y] - f[x]);
            out[x] += flux;
            out[y] -= flux;
        }
        out.component_div_assign(space.mass());
        out
    }

    /// `∫ Df·Dg d𝔪 = Σ_{x<y} w_xy (f(x) - f(y)) (g(x) - g(y))`.
    pub fn bilinear(&self, f: &Density, g: &Density) -> f64 {
        self.edges.iter().map(|&(x, y, w)| w * (f[x] - f[y]) * (g[x] - g[y])).sum()
    }

    pub fn cheeger_energy(&self, space: &MetricMeasureSpace, f: &Density) -> f64 {
        self.assert_shapes(space, f);
        0.5 * self.bilinear(f, f)
    }

    pub fn total_variation(&self, space: &MetricMeasureSpace, f: &Density) -> f64 {
        space.mass().dot(&self.weak_gradient(space, f))
    }

    /// `Per(A) = TV(χ_A)`.
    pub fn perimeter(&self, space: &MetricMeasureSpace, a: &Subset) -> f64 {
        self.total_variation(space, &a.indicator())
    }

    /// `R(f) = 2 Ch(f) / ‖f‖²_{L²}`.
    pub fn rayleigh_quotient(&self, space: &MetricMeasureSpace, f: &Density) -> Result<f64> {
        let norm2 = space.inner(f, f);
        if norm2 == 0.0 {
            return Err(Error::InvalidArgument("Rayleigh quotient of the zero function".into()));
        }
        Ok(2.0 * self.cheeger_energy(space, f) / norm2)
    }

    /// `Q(x) = 1/(2 m(x)) Σ_y w_xy d(x, y)²`; `√Γ(f) ≤ √Q · Lip(f)` pointwise.
    pub fn metric_compatibility(&self, space: &MetricMeasureSpace) -> Density {
        let mut q = Density::zeros(self.len());
        for &(x, y, w) in &self.edges {
            let c = w * space.d(x, y).powi(2);
            q[x] += c;
            q[y] += c;
        }
        for (qx, m) in q.iter_mut().zip(space.mass().iter()) {
            *qx /= 2.0 * m;
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_space, SpaceFamily};
    use nalgebra::{dmatrix, DVector};
    use proptest::prelude::*;

    fn p2() -> (MetricMeasureSpace, Dirichlet) {
        generate_space(&SpaceFamily::TwoPoint).unwrap()
    }

    fn v(x: &[f64]) -> Density {
        DVector::from_column_slice(x)
    }

    #[test]
    fn rejects_bad_conductances() {
        assert!(matches!(Dirichlet::new(dmatrix![0.0, 1.0; 2.0, 0.0]), Err(Error::InvalidDirichlet(_))));
        assert!(matches!(Dirichlet::new(dmatrix![0.0, -1.0; -1.0, 0.0]), Err(Error::InvalidDirichlet(_))));
        assert!(matches!(Dirichlet::new(dmatrix![1.0, 1.0; 1.0, 0.0]), Err(Error::InvalidDirichlet(_))));
        let split = dmatrix![0.0, 1.0, 0.0, 0.0; 1.0, 0.0, 0.0, 0.0; 0.0, 0.0, 0.0, 1.0; 0.0, 0.0, 1.0, 0.0];
        assert!(matches!(Dirichlet::new(split), Err(Error::Disconnected)));
    }

    #[test]
    fn two_point_closed_forms() {
        let (s, d) = p2();
        let e = v(&[1.0, 0.0]);
        let a = v(&[1.0, -1.0]);
        assert_eq!(d.carre_du_champ(&s, &e), v(&[0.5, 0.5]));
        assert_eq!(d.carre_du_champ(&s, &a), v(&[2.0, 2.0]));
        assert_eq!(d.laplacian(&s, &e), v(&[-1.0, 1.0]));
        assert_eq!(d.laplacian(&s, &a), v(&[-2.0, 2.0]));
        assert_eq!(d.cheeger_energy(&s, &e), 0.5);
        assert_eq!(d.cheeger_energy(&s, &a), 2.0);
        assert!((d.perimeter(&s, &Subset::from_indices(2, &[0])) - 2f64.sqrt()).abs() < 1e-15);
        assert!((d.total_variation(&s, &a) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.rayleigh_quotient(&s, &a).unwrap(), 2.0);
        assert_eq!(d.rayleigh_quotient(&s, &e).unwrap(), 1.0);
        assert!(d.rayleigh_quotient(&s, &v(&[0.0, 0.0])).is_err());
        let slope = s.metric_slope(&a).unwrap();
        let grad = d.weak_gradient(&s, &a);
        for x in 0..2 {
            assert!((slope[x] - 2f64.sqrt()).abs() < 1e-15);
            assert!((grad[x] - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_are_flat() {
        let (s, d) = generate_space(&SpaceFamily::Cycle { n: 5 }).unwrap();
        let c = Density::from_element(5, 3.5);
        assert_eq!(d.carre_du_champ(&s, &c).amax(), 0.0);
        assert_eq!(d.laplacian(&s, &c).amax(), 0.0);
        assert_eq!(d.cheeger_energy(&s, &c), 0.0);
        assert_eq!(d.total_variation(&s, &c), 0.0);
        assert_eq!(d.rayleigh_quotient(&s, &c).unwrap(), 0.0);
    }

    fn space_and_fn() -> impl Strategy<Value = (u64, usize, Vec<f64>, Vec<f64>)> {
        (0u64..1000, 3usize..12).prop_flat_map(|(seed, n)| {
            (
                Just(seed),
                Just(n),
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn integration_by_parts_and_divergence((seed, n, f, g) in space_and_fn()) {
            let (s, d) = generate_space(&SpaceFamily::RandomWeighted { n, p: 0.4, seed }).unwrap();
            let (f, g) = (v(&f), v(&g));
            let gamma = s.integral(&d.carre_du_champ(&s, &f));
            let lap = s.inner(&f, &d.laplacian(&s, &f));
            prop_assert!((gamma + lap).abs() <= 1e-10 * (1.0 + gamma.abs()));
            prop_assert!(s.integral(&d.laplacian(&s, &f)).abs() <= 1e-10 * (1.0 + f.amax()));
            let lhs = s.inner(&g, &d.laplacian(&s, &f));
            let rhs = s.inner(&f, &d.laplacian(&s, &g));
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            prop_assert!((d.bilinear(&f, &g) + lhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }

        #[test]
        fn parallelogram_and_homogeneity((seed, n, f, g) in space_and_fn(), lambda in -4.0f64..4.0) {
            let (s, d) = generate_space(&SpaceFamily::RandomGeometric { n, radius: 0.6, seed }).unwrap();
            let (f, g) = (v(&f), v(&g));
            let ch = |h: &Density| d.cheeger_energy(&s, h);
            let lhs = 2.0 * ch(&f) + 2.0 * ch(&g);
            let rhs = ch(&(&f + &g)) + ch(&(&f - &g));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300) + 1e-14);
            let scaled = &f * lambda;
            prop_assert!((ch(&scaled) - lambda * lambda * ch(&f)).abs() <= 1e-12 * (1.0 + ch(&scaled)));
            let tv = d.total_variation(&s, &f);
            prop_assert!((d.total_variation(&s, &scaled) - lambda.abs() * tv).abs() <= 1e-12 * (1.0 + tv));
            prop_assert!(tv > 0.0 || f.iter().all(|&x| x == f[0]));
            if f.iter().any(|&x| x != 0.0) && lambda != 0.0 {
                let r = d.rayleigh_quotient(&s, &f).unwrap();
                prop_assert!((d.rayleigh_quotient(&s, &scaled).unwrap() - r).abs() <= 1e-12 * (1.0 + r));
            }
        }

        #[test]
        fn perimeter_complement_symmetry((seed, n, f, _g) in space_and_fn()) {
            let (s, d) = generate_space(&SpaceFamily::RandomWeighted { n, p: 0.5, seed }).unwrap();
            let pos = Subset::positive_set(&v(&f));
            let a = d.perimeter(&s, &pos);
            let b = d.perimeter(&s, &pos.complement());
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }
}
