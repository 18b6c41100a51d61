//! Test-space factory, metric calibration and the space file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dirichlet::Dirichlet;
use crate::error::{Error, Result};
use crate::space::MetricMeasureSpace;

const MAX_RESAMPLES: u64 = 100;

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceFamily {
    TwoPoint,
    Path { n: usize },
    Cycle { n: usize },
    Grid { n1: usize, n2: usize, torus: bool },
    Star { n: usize },
    Complete { n: usize },
    /// Uniform points in the unit square joined when closer than `radius`;
    /// edge lengths are Euclidean.
    RandomGeometric { n: usize, radius: f64, seed: u64 },
    /// Erdős–Rényi edges with probability `p`, conductances and masses
    /// uniform in [0.5, 2] and edge lengths uniform in [0.5, 1.5].
    RandomWeighted { n: usize, p: f64, seed: u64 },
}

/// A family plus the optional uniform conductance and mass overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceSpec {
    pub family: SpaceFamily,
    pub weight: Option<f64>,
    pub mass: Option<f64>,
}

impl From<SpaceFamily> for SpaceSpec {
    fn from(family: SpaceFamily) -> Self {
        Self { family, weight: None, mass: None }
    }
}

impl SpaceFamily {
    pub fn len(&self) -> usize {
        match *self {
            SpaceFamily::TwoPoint => 2,
            SpaceFamily::Path { n }
            | SpaceFamily::Cycle { n }
            | SpaceFamily::Star { n }
            | SpaceFamily::Complete { n }
            | SpaceFamily::RandomGeometric { n, .. }
            | SpaceFamily::RandomWeighted { n, .. } => n,
            SpaceFamily::Grid { n1, n2, .. } => n1 * n2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Raw weighted graph before the metric is closed and calibrated.
struct Graph {
    n: usize,
    /// `(x, y, conductance, length)`.
    edges: Vec<(usize, usize, f64, f64)>,
    mass: Vec<f64>,
}

impl Graph {
    fn unit(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self { n, edges: pairs.into_iter().map(|(x, y)| (x, y, 1.0, 1.0)).collect(), mass: vec![1.0; n] }
    }

    fn conductances(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for &(x, y, c, _) in &self.edges {
            w[(x, y)] = c;
            w[(y, x)] = c;
        }
        w
    }

    fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut components = self.n;
        for &(x, y, _, _) in &self.edges {
            let (a, b) = (find(&mut parent, x), find(&mut parent, y));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    /// All-pairs shortest paths over the edge lengths.
    fn shortest_path_metric(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut d = DMatrix::from_element(n, n, f64::INFINITY);
        for x in 0..n {
            d[(x, x)] = 0.0;
        }
        for &(x, y, _, len) in &self.edges {
            if len < d[(x, y)] {
                d[(x, y)] = len;
                d[(y, x)] = len;
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = d[(i, k)];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let via = dik + d[(k, j)];
                    if via < d[(i, j)] {
                        d[(i, j)] = via;
                    }
                }
            }
        }
        d
    }
}

fn family_graph(family: &SpaceFamily) -> Result<Graph> {
    let n = family.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("space needs at least 2 points, got {n}")));
    }
    let graph = match *family {
        SpaceFamily::TwoPoint => Graph::unit(2, [(0, 1)]),
        SpaceFamily::Path { n } => Graph::unit(n, (0..n - 1).map(|i| (i, i + 1))),
        SpaceFamily::Cycle { n } => {
            if n < 3 {
                return Err(Error::InvalidArgument("cycle needs at least 3 points".into()));
            }
            Graph::unit(n, (0..n).map(|i| (i, (i + 1) % n)))
        }
        SpaceFamily::Star { n } => Graph::unit(n, (1..n).map(|i| (0, i))),
        SpaceFamily::Complete { n } => Graph::unit(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))),
        SpaceFamily::Grid { n1, n2, torus } => {
            let id = |i: usize, j: usize| i * n2 + j;
            let mut pairs = std::collections::BTreeSet::new();
            for i in 0..n1 {
                for j in 0..n2 {
                    if i + 1 < n1 || (torus && n1 > 2) {
                        let a = id(i, j);
                        let b = id((i + 1) % n1, j);
                        pairs.insert((a.min(b), a.max(b)));
                    }
                    if j + 1 < n2 || (torus && n2 > 2) {
                        let a = id(i, j);
                        let b = id(i, (j + 1) % n2);
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            }
            pairs.retain(|(a, b)| a != b);
            Graph::unit(n1 * n2, pairs)
        }
        SpaceFamily::RandomGeometric { n, radius, seed } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
            }
            resample(seed, |rng| {
                let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
                let mut edges = Vec::new();
                for x in 0..n {
                    for y in (x + 1)..n {
                        let len = ((pts[x].0 - pts[y].0).powi(2) + (pts[x].1 - pts[y].1).powi(2)).sqrt();
                        if len <= radius && len > 0.0 {
                            edges.push((x, y, 1.0, len));
                        }
                    }
                }
                Graph { n, edges, mass: vec![1.0; n] }
            })?
        }
        SpaceFamily::RandomWeighted { n, p, seed } => {
            if !(0.0..=1.0).contains(&p) || p == 0.0 {
                return Err(Error::InvalidArgument(format!("edge probability must be in (0, 1], got {p}")));
            }
            resample(seed, |rng| {
                let mut edges = Vec::new();
                for x in 0..n {
                    for y in (x + 1)..n {
                        if rng.gen::<f64>() < p {
                            edges.push((x, y, rng.gen_range(0.5..2.0), rng.gen_range(0.5..1.5)));
                        }
                    }
                }
                let mass = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
                Graph { n, edges, mass }
            })?
        }
    };
    Ok(graph)
}

fn resample(seed: u64, mut draw: impl FnMut(&mut ChaCha8Rng) -> Graph) -> Result<Graph> {
    for attempt in 0..MAX_RESAMPLES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let g = draw(&mut rng);
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::InvalidArgument(format!(
        "no connected draw after {MAX_RESAMPLES} attempts starting from seed {seed}"
    )))
}

impl SpaceSpec {
    /// Builds the calibrated space and its conductances.
    pub fn generate(&self) -> Result<(MetricMeasureSpace, Dirichlet)> {
        let mut g = family_graph(&self.family)?;
        if let Some(w) = self.weight {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("weight override must be positive, got {w}")));
            }
            for e in &mut g.edges {
                e.2 = w;
            }
        }
        if let Some(m) = self.mass {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidArgument(format!("mass override must be positive, got {m}")));
            }
            g.mass = vec![m; g.n];
        }
        let dirichlet = Dirichlet::new(g.conductances())?;
        let space = MetricMeasureSpace::new(g.shortest_path_metric(), DVector::from_vec(g.mass))?;
        let space = calibrate_metric(&space, &dirichlet)?;
        Ok((space, dirichlet))
    }
}

pub fn generate_space(family: &SpaceFamily) -> Result<(MetricMeasureSpace, Dirichlet)> {
    SpaceSpec::from(family.clone()).generate()
}

/// Rescales `d` by `1/√Q_max` so that `Q(x) ≤ 1` everywhere with equality
/// somewhere, where `Q(x) = 1/(2 m(x)) Σ_y w_xy d(x, y)²`.
///
/// After calibration `√Γ(f)(x) ≤ Lip(f)` for every `f` and `x`.
pub fn calibrate_metric(space: &MetricMeasureSpace, dirichlet: &Dirichlet) -> Result<MetricMeasureSpace> {
    if space.len() != dirichlet.len() {
        return Err(Error::DimensionMismatch { expected: space.len(), got: dirichlet.len() });
    }
    if let Some(&(x, y, _)) = dirichlet.edges().iter().find(|&&(x, y, _)| space.d(x, y) == 0.0) {
        return Err(Error::InvalidArgument(format!("edge ({x},{y}) has zero length")));
    }
    let q_max = dirichlet.metric_compatibility(space).max();
    if (q_max - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(space.clone());
    }
    Ok(space.with_dist(space.dist() / q_max.sqrt()))
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut params: Vec<String> = match self.family {
            SpaceFamily::TwoPoint => vec![],
            SpaceFamily::Path { n } | SpaceFamily::Cycle { n } | SpaceFamily::Star { n } | SpaceFamily::Complete { n } => {
                vec![format!("n={n}")]
            }
            SpaceFamily::Grid { n1, n2, torus } => vec![format!("n1={n1}"), format!("n2={n2}"), format!("torus={torus}")],
            SpaceFamily::RandomGeometric { n, radius, seed } => {
                vec![format!("n={n}"), format!("radius={radius}"), format!("seed={seed}")]
            }
            SpaceFamily::RandomWeighted { n, p, seed } => vec![format!("n={n}"), format!("p={p}"), format!("seed={seed}")],
        };
        if let Some(w) = self.weight {
            params.push(format!("w={w}"));
        }
        if let Some(m) = self.mass {
            params.push(format!("m={m}"));
        }
        let name = match self.family {
            SpaceFamily::TwoPoint => "two_point",
            SpaceFamily::Path { .. } => "path",
            SpaceFamily::Cycle { .. } => "cycle",
            SpaceFamily::Grid { .. } => "grid",
            SpaceFamily::Star { .. } => "star",
            SpaceFamily::Complete { .. } => "complete",
            SpaceFamily::RandomGeometric { .. } => "random_geometric",
            SpaceFamily::RandomWeighted { .. } => "random_weighted",
        };
        if params.is_empty() {
            write!(f, "{name}")
        } else {
            write!(f, "{name}:{}", params.join(","))
        }
    }
}

impl FromStr for SpaceSpec {
    type Err = Error;

    /// `family[:key=value,...]`, e.g. `cycle:n=12` or
    /// `random_geometric:n=20,radius=0.4,seed=3,m=2`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        let mut offset = name.len() + 1;
        for item in rest.split(',').filter(|i| !i.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| Error::Parse {
                position: offset,
                message: format!("expected key=value, got `{item}`"),
            })?;
            params.insert(k.trim().to_string(), (v.trim().to_string(), offset));
            offset += item.len() + 1;
        }
        let mut take = |key: &str| params.remove(key);
        fn parse<T: FromStr>(key: &str, val: Option<(String, usize)>, default: Option<T>) -> Result<T> {
            match val {
                Some((v, pos)) => v.parse().map_err(|_| Error::Parse {
                    position: pos,
                    message: format!("bad value `{v}` for `{key}`"),
                }),
                None => default.ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{key}`"))),
            }
        }
        let family = match name.trim() {
            "two_point" => SpaceFamily::TwoPoint,
            "path" => SpaceFamily::Path { n: parse("n", take("n"), None)? },
            "cycle" => SpaceFamily::Cycle { n: parse("n", take("n"), None)? },
            "star" => SpaceFamily::Star { n: parse("n", take("n"), None)? },
            "complete" => SpaceFamily::Complete { n: parse("n", take("n"), None)? },
            "grid" => SpaceFamily::Grid {
                n1: parse("n1", take("n1"), None)?,
                n2: parse("n2", take("n2"), None)?,
                torus: parse("torus", take("torus"), Some(false))?,
            },
            "random_geometric" => SpaceFamily::RandomGeometric {
                n: parse("n", take("n"), None)?,
                radius: parse("radius", take("radius"), Some(0.5))?,
                seed: parse("seed", take("seed"), Some(0))?,
            },
            "random_weighted" => SpaceFamily::RandomWeighted {
                n: parse("n", take("n"), None)?,
                p: parse("p", take("p"), Some(0.5))?,
                seed: parse("seed", take("seed"), Some(0))?,
            },
            other => return Err(Error::InvalidArgument(format!("unknown space family `{other}`"))),
        };
        let weight = take("w").map(|v| parse("w", Some(v), None)).transpose()?;
        let mass = take("m").map(|v| parse("m", Some(v), None)).transpose()?;
        if let Some((k, _)) = params.into_iter().next() {
            return Err(Error::UnknownKey(k));
        }
        Ok(Self { family, weight, mass })
    }
}

/// JSON space file: `n`, row-major `d` and `w`, and masses `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub n: usize,
    pub d: Vec<f64>,
    pub m: Vec<f64>,
    pub w: Vec<f64>,
}

impl SpaceFile {
    pub fn from_space(space: &MetricMeasureSpace, dirichlet: &Dirichlet) -> Self {
        let n = space.len();
        let row_major = |a: &DMatrix<f64>| (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|ij| a[ij]).collect();
        Self {
            n,
            d: row_major(space.dist()),
            m: space.mass().iter().copied().collect(),
            w: row_major(dirichlet.conductances()),
        }
    }

    pub fn into_space(self) -> Result<(MetricMeasureSpace, Dirichlet)> {
        let n = self.n;
        if self.d.len() != n * n || self.w.len() != n * n || self.m.len() != n {
            return Err(Error::InvalidArgument(format!(
                "space file with n={n} needs {} distances, {} conductances and {n} masses",
                n * n,
                n * n
            )));
        }
        let space = MetricMeasureSpace::new(DMatrix::from_row_slice(n, n, &self.d), DVector::from_vec(self.m))?;
        let dirichlet = Dirichlet::new(DMatrix::from_row_slice(n, n, &self.w))?;
        Ok((space, dirichlet))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::file(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("space file serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn two_point_calibrates_to_sqrt2() {
        let (s, d) = generate_space(&SpaceFamily::TwoPoint).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(d.conductances()[(0, 1)], 1.0);
        assert_eq!(s.mass().as_slice(), &[1.0, 1.0]);
        assert!((s.d(0, 1) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn calibration_examples() {
        let d = Dirichlet::new(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let s = MetricMeasureSpace::new(dmatrix![0.0, 1.0; 1.0, 0.0], DVector::from_element(2, 1.0)).unwrap();
        let c = calibrate_metric(&s, &d).unwrap();
        assert!((c.d(0, 1) - 2f64.sqrt()).abs() < 1e-15);
        // fixed point
        let again = calibrate_metric(&c, &d).unwrap();
        assert!((again.d(0, 1) - c.d(0, 1)).abs() < 1e-15);
        // masses x4 => Q/4 => metric doubles
        let heavy = MetricMeasureSpace::new(dmatrix![0.0, 1.0; 1.0, 0.0], DVector::from_element(2, 4.0)).unwrap();
        let c4 = calibrate_metric(&heavy, &d).unwrap();
        assert!((c4.d(0, 1) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        let q = d.metric_compatibility(&c4);
        assert!((q.max() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn calibration_rejects_zero_length_edge() {
        let d = Dirichlet::new(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let s = MetricMeasureSpace::from_parts_unchecked(DMatrix::zeros(2, 2), DVector::from_element(2, 1.0));
        assert!(calibrate_metric(&s, &d).is_err());
    }

    #[test]
    fn cycle_degrees_and_path_metric() {
        let (_, d) = generate_space(&SpaceFamily::Cycle { n: 4 }).unwrap();
        assert!((0..4).all(|x| d.conductances().row(x).iter().filter(|&&w| w > 0.0).count() == 2));
        let (s, _) = generate_space(&SpaceFamily::Path { n: 3 }).unwrap();
        assert!((s.d(0, 2) - (s.d(0, 1) + s.d(1, 2))).abs() < 1e-15);
    }

    #[test]
    fn rejects_tiny_spaces() {
        assert!(generate_space(&SpaceFamily::Path { n: 1 }).is_err());
        assert!(generate_space(&SpaceFamily::Complete { n: 0 }).is_err());
    }

    #[test]
    fn generated_spaces_are_valid_and_tight() {
        let families = [
            SpaceFamily::Grid { n1: 3, n2: 4, torus: false },
            SpaceFamily::Grid { n1: 3, n2: 3, torus: true },
            SpaceFamily::Star { n: 6 },
            SpaceFamily::Complete { n: 5 },
            SpaceFamily::RandomGeometric { n: 15, radius: 0.3, seed: 4 },
            SpaceFamily::RandomWeighted { n: 12, p: 0.3, seed: 9 },
        ];
        for fam in &families {
            let (s, d) = generate_space(fam).unwrap();
            assert!(s.validate().is_empty(), "{fam:?}");
            let q = d.metric_compatibility(&s);
            assert!(q.max() <= 1.0 + 1e-12 && q.max() >= 1.0 - 1e-12, "{fam:?}");
        }
    }

    #[test]
    fn random_generation_is_deterministic() {
        let fam = SpaceFamily::RandomGeometric { n: 20, radius: 0.35, seed: 11 };
        let a = SpaceFile::from_space(&generate_space(&fam).unwrap().0, &generate_space(&fam).unwrap().1);
        let b = SpaceFile::from_space(&generate_space(&fam).unwrap().0, &generate_space(&fam).unwrap().1);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn sqrt_gamma_below_lipschitz_after_calibration() {
        use rand::Rng;
        for fam in [
            SpaceFamily::RandomGeometric { n: 12, radius: 0.5, seed: 1 },
            SpaceFamily::RandomWeighted { n: 10, p: 0.4, seed: 2 },
            SpaceFamily::Grid { n1: 3, n2: 3, torus: false },
        ] {
            let (s, d) = generate_space(&fam).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..200 {
                let f = DVector::from_fn(s.len(), |_, _| rng.gen_range(-1.0..1.0));
                let lip = s.lipschitz(&f);
                let slope = s.metric_slope(&f).unwrap();
                let grad = d.weak_gradient(&s, &f);
                for x in 0..s.len() {
                    assert!(grad[x] <= lip * (1.0 + 1e-12));
                    assert!(grad[x] <= slope[x] * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        for text in ["two_point", "cycle:n=12", "grid:n1=3,n2=4,torus=true", "random_geometric:n=20,radius=0.4,seed=3,m=2"] {
            let spec: SpaceSpec = text.parse().unwrap();
            assert_eq!(spec.to_string().parse::<SpaceSpec>().unwrap(), spec);
        }
        assert_eq!("cycle:n=12".parse::<SpaceSpec>().unwrap().to_string(), "cycle:n=12");
        assert!(matches!("cycle:n=4,q=2".parse::<SpaceSpec>(), Err(Error::UnknownKey(k)) if k == "q"));
        assert!(matches!("cycle:n=x".parse::<SpaceSpec>(), Err(Error::Parse { .. })));
        assert!("blob:n=3".parse::<SpaceSpec>().is_err());
    }

    #[test]
    fn overrides_apply() {
        let spec: SpaceSpec = "two_point:m=4".parse().unwrap();
        let (s, _) = spec.generate().unwrap();
        assert!((s.d(0, 1) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn space_file_round_trip() {
        let (s, d) = generate_space(&SpaceFamily::Star { n: 4 }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("star.json");
        SpaceFile::from_space(&s, &d).save(&path).unwrap();
        let (s2, d2) = SpaceFile::load(&path).unwrap().into_space().unwrap();
        assert_eq!(s, s2);
        assert_eq!(d, d2);
    }
}
