#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use semlab::{Dirichlet, MetricMeasureSpace, SpaceSpec};

pub fn space(spec: &str) -> (MetricMeasureSpace, Dirichlet) {
    spec.parse::<SpaceSpec>().unwrap().generate().unwrap()
}

/// Generator matrix `A` with `(A f)(x) = (1/m(x)) Σ_y w_xy (f(y) - f(x))`.
pub fn generator(space: &MetricMeasureSpace, dirichlet: &Dirichlet) -> DMatrix<f64> {
    let n = space.len();
    let w = dirichlet.conductances();
    let m = space.mass();
    let mut a = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            if x != y {
                a[(x, y)] = w[(x, y)] / m[x];
                a[(x, x)] -= w[(x, y)] / m[x];
            }
        }
    }
    a
}

/// `exp(tA)` by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = (0..n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max) * t;
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let b = a * (t / 2f64.powi(s));
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Heat flow by the matrix exponential of the generator.
pub fn heat_oracle(space: &MetricMeasureSpace, dirichlet: &Dirichlet, t: f64, f: &DVector<f64>) -> DVector<f64> {
    expm(&generator(space, dirichlet), t) * f
}

pub fn random_function(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_nonnegative(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut f = DVector::from_fn(n, |_, _| if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0.0..1.0) });
    if f.iter().all(|&v| v == 0.0) {
        f[0] = 1.0;
    }
    f
}

pub fn random_mean_zero(space: &MetricMeasureSpace, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let g = random_function(space.len(), rng);
    let mean = space.integral(&g) / space.total_mass();
    g.add_scalar(-mean)
}

/// `Lip(f)` by direct enumeration of pairs.
pub fn lipschitz(space: &MetricMeasureSpace, f: &DVector<f64>) -> f64 {
    let n = space.len();
    let mut best: f64 = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            best = best.max((f[x] - f[y]).abs() / space.d(x, y));
        }
    }
    best
}

/// Spaces with at most twelve points.
pub fn small_specs() -> Vec<String> {
    let mut specs: Vec<String> = [
        "two_point",
        "path:n=5",
        "cycle:n=8",
        "star:n=7",
        "complete:n=6",
        "grid:n1=3,n2=4",
        "grid:n1=3,n2=3,torus=true",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for seed in 0..3 {
        specs.push(format!("random_geometric:n=10,radius=0.6,seed={seed}"));
        specs.push(format!("random_weighted:n=12,p=0.4,seed={seed}"));
    }
    specs
}

/// A connected random space with `n ∈ [3, 22]` for each seed, alternating families.
pub fn sweep_spec(seed: u64) -> String {
    let n = 3 + (seed * 7 % 20);
    if seed % 2 == 0 {
        format!("random_geometric:n={n},radius=0.6,seed={seed}")
    } else {
        format!("random_weighted:n={n},p=0.4,seed={seed}")
    }
}
