//! Randomized verification suite: every check family is evaluated on a
//! canonical input (sample 0, across the whole time grid) and on seeded
//! random inputs, and the results are aggregated per inequality.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controls::{certified_power_control, envelope_constant, ControlModel, Horizon};
use crate::error::{Error, Result};
use crate::inequalities::{Context, InequalityReport, Smoothing};
use crate::space::{Density, Subset};

/// Failures kept per inequality in a summary.
const MAX_FAILURES: usize = 5;
/// Distinct skip reasons kept per inequality in a summary.
const MAX_SKIP_REASONS: usize = 5;
/// A worst normalized slack below this in magnitude marks the inequality as attained.
const EQUALITY_TOL: f64 = 1e-12;
/// Points per decade when the time grid is extended past its end.
const EXTENSION_DENSITY: f64 = 20.0;

/// Groups of checks selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckFamily {
    W1Smoothing,
    BlSmoothing,
    QuantContraction,
    Interpolation,
    CaloricPoincare,
    Perimeter,
    Indeterminacy,
    Eigen,
    Buser,
    TransportSobolev,
}

impl CheckFamily {
    pub const ALL: [CheckFamily; 10] = [
        CheckFamily::W1Smoothing,
        CheckFamily::BlSmoothing,
        CheckFamily::QuantContraction,
        CheckFamily::Interpolation,
        CheckFamily::CaloricPoincare,
        CheckFamily::Perimeter,
        CheckFamily::Indeterminacy,
        CheckFamily::Eigen,
        CheckFamily::Buser,
        CheckFamily::TransportSobolev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckFamily::W1Smoothing => "w1_smoothing",
            CheckFamily::BlSmoothing => "bl_smoothing",
            CheckFamily::QuantContraction => "quant_contraction",
            CheckFamily::Interpolation => "interpolation",
            CheckFamily::CaloricPoincare => "caloric_poincare",
            CheckFamily::Perimeter => "perimeter",
            CheckFamily::Indeterminacy => "indeterminacy",
            CheckFamily::Eigen => "eigen",
            CheckFamily::Buser => "buser",
            CheckFamily::TransportSobolev => "transport_sobolev",
        }
    }

    fn stream(self) -> u64 {
        Self::ALL.iter().position(|&f| f == self).expect("listed") as u64
    }

    /// Parses `all` or a comma-separated list of family names.
    pub fn parse_list(s: &str) -> Result<Vec<CheckFamily>> {
        if s.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        let mut out: Vec<CheckFamily> = s.split(',').map(|p| p.trim().parse()).collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidArgument("empty check list".into()));
        }
        Ok(out)
    }

    /// `all` when every family is selected, else the comma-separated names.
    pub fn format_list(list: &[CheckFamily]) -> String {
        let mut sorted = list.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted == Self::ALL {
            "all".to_string()
        } else {
            sorted.iter().map(|f| f.name()).collect::<Vec<_>>().join(",")
        }
    }
}

impl fmt::Display for CheckFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown check '{s}'")))
    }
}

/// Source of the power control used by the explicit bounds.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlChoice {
    /// Certified power fit to the measured `c⋆`, optionally with a fixed exponent.
    Fit { b: Option<f64> },
    Model(ControlModel),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub checks: Vec<CheckFamily>,
    /// Random samples per family in addition to the canonical one.
    pub samples: usize,
    pub seed: u64,
    /// Space description used in reproduction descriptors.
    pub label: String,
    pub control: ControlChoice,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            checks: CheckFamily::ALL.to_vec(),
            samples: 100,
            seed: 0,
            label: String::new(),
            control: ControlChoice::Fit { b: None },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureCase {
    pub repro: String,
    pub report: InequalityReport,
}

/// Aggregate over every evaluation of one inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluated: usize,
    pub passed: usize,
    pub failed: usize,
    pub trivial: usize,
    pub skipped: usize,
    /// The worst normalized slack is zero to round-off.
    pub equality: bool,
    /// Non-trivial report with the smallest normalized slack.
    pub worst: Option<InequalityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skip_reasons: Vec<String>,
}

impl CheckSummary {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            evaluated: 0,
            passed: 0,
            failed: 0,
            trivial: 0,
            skipped: 0,
            equality: false,
            worst: None,
            failures: Vec::new(),
            skip_reasons: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub label: String,
    pub seed: u64,
    pub samples: usize,
    pub control: ControlModel,
    /// Sorted by name.
    pub checks: Vec<CheckSummary>,
}

impl SuiteReport {
    pub fn total_failed(&self) -> usize {
        self.checks.iter().map(|c| c.failed).sum()
    }

    pub fn total_evaluated(&self) -> usize {
        self.checks.iter().map(|c| c.evaluated).sum()
    }

    pub fn total_skipped(&self) -> usize {
        self.checks.iter().map(|c| c.skipped).sum()
    }

    pub fn all_pass(&self) -> bool {
        self.total_failed() == 0
    }

    pub fn get(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Outcome of one check on one input.
pub type Outcome = (String, std::result::Result<InequalityReport, String>);

/// Controls shared by every sample of a run.
struct Controls {
    explicit: ControlModel,
    fitted_b: Option<f64>,
    supplied: bool,
}

/// Caps rayon's global pool at `SEMLAB_THREADS` when that variable is set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SEMLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("SEMLAB_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::InvalidArgument("SEMLAB_THREADS must be positive".into()));
        }
        // A pool that is already built keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// The power control the explicit bounds use under `choice`.
pub fn explicit_control(ctx: &Context, choice: &ControlChoice) -> Result<ControlModel> {
    match choice {
        ControlChoice::Fit { b } => certified_power_control(&ctx.profile, *b),
        ControlChoice::Model(m) => {
            m.validate()?;
            Ok(m.clone())
        }
    }
}

fn controls(ctx: &Context, opts: &SuiteOptions) -> Result<Controls> {
    Ok(Controls {
        explicit: explicit_control(ctx, &opts.control)?,
        fitted_b: match opts.control {
            ControlChoice::Fit { b } => Some(b.unwrap_or(0.5)),
            ControlChoice::Model(_) => None,
        },
        supplied: matches!(opts.control, ControlChoice::Model(_)),
    })
}

/// Re-evaluates a single `(family, sample)` pair exactly as `run_suite` does.
pub fn evaluate_sample(ctx: &Context, opts: &SuiteOptions, family: CheckFamily, sample: usize) -> Result<Vec<Outcome>> {
    Ok(evaluate(ctx, family, opts.seed, sample, &controls(ctx, opts)?))
}

pub fn run_suite(ctx: &Context, opts: &SuiteOptions) -> Result<SuiteReport> {
    let controls = controls(ctx, opts)?;
    let mut jobs: Vec<(CheckFamily, usize)> = Vec::new();
    let mut families = opts.checks.clone();
    families.sort();
    families.dedup();
    for &family in &families {
        let count = if family == CheckFamily::Buser { 1 } else { opts.samples + 1 };
        jobs.extend((0..count).map(|s| (family, s)));
    }
    let results: Vec<Vec<Outcome>> =
        jobs.par_iter().map(|&(family, sample)| evaluate(ctx, family, opts.seed, sample, &controls)).collect();

    let mut summaries: BTreeMap<String, CheckSummary> = BTreeMap::new();
    for (&(family, sample), outcomes) in jobs.iter().zip(results) {
        for (name, outcome) in outcomes {
            let s = summaries.entry(name.clone()).or_insert_with(|| CheckSummary::new(&name));
            match outcome {
                Err(reason) => {
                    s.skipped += 1;
                    if s.skip_reasons.len() < MAX_SKIP_REASONS && !s.skip_reasons.contains(&reason) {
                        s.skip_reasons.push(reason);
                    }
                }
                Ok(report) => {
                    s.evaluated += 1;
                    if report.trivial {
                        s.trivial += 1;
                        continue;
                    }
                    if report.pass {
                        s.passed += 1;
                    } else {
                        s.failed += 1;
                        if s.failures.len() < MAX_FAILURES {
                            let t = report.t_used.map_or("none".to_string(), |t| format!("{t:e}"));
                            let repro = format!(
                                "space={} seed={} check={} sample={} t={}",
                                opts.label, opts.seed, family, sample, t
                            );
                            s.failures.push(FailureCase { repro, report: report.clone() });
                        }
                    }
                    let worse = s.worst.as_ref().map_or(true, |w| {
                        // NaN slack counts as the worst possible
                        !(report.normalized_slack() >= w.normalized_slack())
                    });
                    if worse {
                        s.worst = Some(report);
                    }
                }
            }
        }
    }
    let checks = summaries
        .into_values()
        .map(|mut s| {
            s.equality = s.worst.as_ref().is_some_and(|w| w.normalized_slack().abs() <= EQUALITY_TOL);
            s
        })
        .collect();
    Ok(SuiteReport { label: opts.label.clone(), seed: opts.seed, samples: opts.samples, control: controls.explicit, checks })
}

/// Seeded generator for one `(family, sample)` pair.
fn sample_rng(seed: u64, family: CheckFamily, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((family.stream() << 32) | sample as u64);
    rng
}

/// Times at which a sample is evaluated: the whole grid for the canonical
/// sample, one grid node otherwise.
fn sample_times(ctx: &Context, sample: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let grid = ctx.grid();
    if sample == 0 {
        grid.to_vec()
    } else {
        vec![grid[rng.gen_range(0..grid.len())]]
    }
}

fn named(name: &str, r: Result<InequalityReport>) -> Outcome {
    (name.to_string(), r.map_err(|e| e.to_string()))
}

fn named_all(names: &[&str], r: Result<Vec<InequalityReport>>) -> Vec<Outcome> {
    match r {
        Ok(reps) => reps.into_iter().map(|r| (r.name.clone(), Ok(r))).collect(),
        Err(e) => names.iter().map(|n| (n.to_string(), Err(e.to_string()))).collect(),
    }
}

fn renamed(name: &str, r: Result<InequalityReport>) -> Outcome {
    let r = r.map(|mut r| {
        r.name = name.to_string();
        r
    });
    named(name, r)
}

/// Evaluates one sample of one family. Inputs depend only on `(seed, family, sample)`.
fn evaluate(ctx: &Context, family: CheckFamily, seed: u64, sample: usize, controls: &Controls) -> Vec<Outcome> {
    let mut rng = sample_rng(seed, family, sample);
    let n = ctx.space.len();
    let times = sample_times(ctx, sample, &mut rng);
    let control = &controls.explicit;
    let fitted = Smoothing::Control(control);
    let in_horizon = |t: f64| control.horizon().contains(t);
    let mut out = Vec::new();
    match family {
        CheckFamily::W1Smoothing => {
            let pair = (sample > 0).then(|| equal_mass_pair(ctx, &mut rng));
            for &t in &times {
                let (f0, f1) = match &pair {
                    Some(p) => p.clone(),
                    None => witness_pair(ctx, t),
                };
                out.push(named("w1_smoothing", ctx.check_w1_smoothing(t, &f0, &f1, Smoothing::Measured)));
                if in_horizon(t) {
                    out.push(renamed("w1_smoothing_control", ctx.check_w1_smoothing(t, &f0, &f1, fitted)));
                }
            }
        }
        CheckFamily::BlSmoothing => {
            let (f0, f1) = if sample == 0 {
                (point_density(ctx, 0), point_density(ctx, n - 1))
            } else {
                (random_nonnegative(ctx, &mut rng), random_nonnegative(ctx, &mut rng))
            };
            for &t in &times {
                out.push(named("bl_smoothing", ctx.check_bl_smoothing(t, &f0, &f1)));
            }
        }
        CheckFamily::QuantContraction => {
            let f = if sample == 0 { point_indicator(n, 0) } else { random_function(ctx, &mut rng) };
            for &t in &times {
                out.push(named("quant_contraction", ctx.check_quant_contraction(t, &f, Smoothing::Measured)));
                if in_horizon(t) {
                    out.push(renamed("quant_contraction_control", ctx.check_quant_contraction(t, &f, fitted)));
                }
            }
        }
        CheckFamily::Interpolation => {
            let f = if sample == 0 { point_indicator(n, 0) } else { random_function(ctx, &mut rng) };
            out.push(named("interpolation", ctx.check_interpolation(&f, Smoothing::Measured)));
        }
        CheckFamily::CaloricPoincare => {
            let f = if sample == 0 { point_indicator(n, 0) } else { random_function(ctx, &mut rng) };
            for &t in &times {
                out.push(named("caloric_poincare", ctx.check_caloric_poincare(t, &f, Smoothing::Measured)));
                if in_horizon(t) {
                    out.push(renamed("caloric_poincare_control", ctx.check_caloric_poincare(t, &f, fitted)));
                }
            }
        }
        CheckFamily::Perimeter => {
            let (a, f) = if sample == 0 {
                (Subset::from_indices(n, &[0]), ctx.heat.eigenvector(1))
            } else {
                (random_proper_subset(n, &mut rng), random_function(ctx, &mut rng))
            };
            for &t in &times {
                out.push(named("perimeter_set", ctx.check_perimeter_set(t, &a, Smoothing::Measured)));
                out.push(named("perimeter_linfty", ctx.check_perimeter_linfty(t, &f, Smoothing::Measured)));
            }
        }
        CheckFamily::Indeterminacy => {
            let f = if sample == 0 { ctx.heat.eigenvector(1) } else { random_mean_zero(ctx, &mut rng) };
            for &t in &times {
                out.push(named("indeterminacy_implicit", ctx.check_indeterminacy_implicit(t, &f, Smoothing::Measured)));
                if in_horizon(t) {
                    out.push(renamed("indeterminacy_implicit_control", ctx.check_indeterminacy_implicit(t, &f, fitted)));
                }
            }
            out.push(named("indeterminacy_explicit", ctx.check_indeterminacy_explicit(&f, control)));
        }
        CheckFamily::Eigen => {
            let k = if sample == 0 || n == 2 { 1 } else { rng.gen_range(1..n) };
            let implicit = ["eigen_nodal_implicit", "eigen_w1_implicit"];
            let explicit = ["eigen_nodal_explicit", "eigen_w1_explicit"];
            for &t in &times {
                out.extend(named_all(&implicit, ctx.check_eigen_implicit(k, t, Smoothing::Measured)));
            }
            out.push(named("eigen_nodal_ultracontractive", ctx.check_eigen_ultracontractive(k)));
            let lambda1 = ctx.spectrum.lambda1;
            out.extend(named_all(&explicit, ctx.check_eigen_explicit(k, control, lambda1)));
            if sample == 0 {
                // the admissible choice lambda_tilde = lambda, t = 1
                let lambda = ctx.spectrum.eigenvalues[k];
                out.extend(named_all(&explicit, ctx.check_eigen_explicit(k, control, lambda)));
            }
        }
        CheckFamily::Buser => {
            out.push(named("buser_implicit", ctx.check_buser_implicit(Smoothing::Measured)));
            out.push(named("buser_explicit", ctx.check_buser_explicit(control)));
            out.push(named("buser_explicit_branch", ctx.check_buser_branch(control)));
            out.push(named("buser_h0", Ok(ctx.check_buser_h0())));
        }
        CheckFamily::TransportSobolev => {
            let f = if sample == 0 { ctx.heat.eigenvector(1) } else { random_mean_zero(ctx, &mut rng) };
            for &t in &times {
                out.push(named(
                    "transport_sobolev_implicit",
                    ctx.check_transport_sobolev_implicit(t, &f, Smoothing::Measured),
                ));
            }
            let explicit = transport_sobolev_control(ctx, &f, controls)
                .and_then(|c| ctx.check_transport_sobolev_explicit(&f, &c));
            out.push(named("transport_sobolev_explicit", explicit));
        }
    }
    out
}

/// A power control valid up to the explicit transport–Sobolev time of `f`:
/// the supplied model, or a fit to step-envelope samples on the time grid
/// extended past `max(1, t)`.
fn transport_sobolev_control(ctx: &Context, f: &Density, controls: &Controls) -> Result<ControlModel> {
    if controls.supplied {
        return Ok(controls.explicit.clone());
    }
    let b = controls.fitted_b.unwrap_or(0.5);
    let t_choice = ctx.transport_sobolev_time(f)?.unwrap_or(1.0);
    extended_power_control(ctx, b, t_choice.max(1.0))
}

/// `M / t^b` dominating `c⋆` on `(0, end]`, from the profile's step envelope
/// plus log-spaced nodes between the last grid time and `end`.
pub fn extended_power_control(ctx: &Context, b: f64, end: f64) -> Result<ControlModel> {
    let mut samples = ctx.profile.step_envelope_samples();
    let last = *ctx.grid().last().expect("grid is nonempty");
    if end > last {
        let steps = ((end / last).log10() * EXTENSION_DENSITY).ceil().max(1.0) as usize;
        let mut prev = last;
        let mut prev_c = *ctx.profile.c_star.last().expect("grid is nonempty");
        for i in 1..=steps {
            let t = if i == steps { end } else { last * (end / last).powf(i as f64 / steps as f64) };
            samples.push((t, prev_c));
            prev_c = ctx.heat.c_star(t)?;
            prev = t;
        }
        debug_assert_eq!(prev, end);
    }
    let m = envelope_constant(&samples, b);
    let horizon = if end == 1.0 { Horizon::UnitInterval } else { Horizon::UpTo(end.max(last)) };
    ControlModel::power(m, b)?.with_horizon(horizon)
}

fn point_indicator(n: usize, x: usize) -> Density {
    Subset::from_indices(n, &[x]).indicator()
}

/// `χ_x / 𝔪(x)`, the density of the Dirac mass at `x`.
fn point_density(ctx: &Context, x: usize) -> Density {
    point_indicator(ctx.space.len(), x) / ctx.space.mass()[x]
}

/// Dirac densities at the pair realizing `c⋆(t)`.
fn witness_pair(ctx: &Context, t: f64) -> (Density, Density) {
    let (x, y) = match ctx.heat.c_star_with_witness(t) {
        Ok((_, x, y)) => (x, y),
        Err(_) => (0, ctx.space.len() - 1),
    };
    (point_density(ctx, x), point_density(ctx, y))
}

fn random_nonnegative(ctx: &Context, rng: &mut ChaCha8Rng) -> Density {
    let n = ctx.space.len();
    let sparse = rng.gen_bool(0.5);
    let mut f = Density::from_fn(n, |_, _| if sparse && rng.gen_bool(0.6) { 0.0 } else { rng.gen_range(0.0..1.0) });
    if f.iter().all(|&v| v == 0.0) {
        f[rng.gen_range(0..n)] = 1.0;
    }
    f
}

fn equal_mass_pair(ctx: &Context, rng: &mut ChaCha8Rng) -> (Density, Density) {
    let f0 = random_nonnegative(ctx, rng);
    let f1 = random_nonnegative(ctx, rng);
    let ratio = ctx.space.integral(&f0) / ctx.space.integral(&f1);
    (f0, f1 * ratio)
}

fn random_proper_subset(n: usize, rng: &mut ChaCha8Rng) -> Subset {
    loop {
        let a = Subset::from_mask((0..n).map(|_| rng.gen_bool(0.5)).collect());
        if a.count() > 0 && !a.is_full() {
            return a;
        }
    }
}

/// Uniform values, a subset indicator, or a sign pattern.
fn random_function(ctx: &Context, rng: &mut ChaCha8Rng) -> Density {
    let n = ctx.space.len();
    let scale = rng.gen_range(0.1..10.0);
    match rng.gen_range(0..3) {
        0 => Density::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)) * scale,
        1 => random_proper_subset(n, rng).indicator() * scale,
        _ => Density::from_fn(n, |_, _| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }) * scale,
    }
}

/// Mean-zero densities: centred random values, a difference of normalized
/// indicators, or a random combination of eigenfunctions.
fn random_mean_zero(ctx: &Context, rng: &mut ChaCha8Rng) -> Density {
    let n = ctx.space.len();
    let total = ctx.space.total_mass();
    match rng.gen_range(0..3) {
        0 => {
            let g = Density::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let mean = ctx.space.integral(&g) / total;
            g.add_scalar(-mean)
        }
        1 => {
            let a = random_proper_subset(n, rng);
            let b = a.complement();
            let fa = a.indicator() / ctx.space.subset_mass(&a);
            let fb = b.indicator() / ctx.space.subset_mass(&b);
            fa - fb
        }
        _ => {
            let mut f = Density::zeros(n);
            for k in 1..n {
                if rng.gen_bool(0.5) || k == 1 {
                    f += ctx.heat.eigenvector(k) * rng.gen_range(-1.0..1.0);
                }
            }
            f
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_space, SpaceFamily};
    use crate::heat::log_grid;

    fn context(family: SpaceFamily) -> Context {
        let (s, d) = generate_space(&family).unwrap();
        Context::new(s, d, &log_grid(1e-3, 1.0, 40).unwrap()).unwrap()
    }

    #[test]
    fn two_point_suite_flags_equalities() {
        let ctx = context(SpaceFamily::TwoPoint);
        let opts = SuiteOptions { seed: 7, samples: 20, label: "two_point".into(), ..Default::default() };
        let report = run_suite(&ctx, &opts).unwrap();
        assert!(report.all_pass(), "{report:#?}");
        for name in ["w1_smoothing", "caloric_poincare", "buser_implicit", "eigen_w1_implicit"] {
            let s = report.get(name).unwrap();
            assert!(s.equality, "{name}: {:?}", s.worst);
        }
        let names: Vec<_> = report.checks.iter().map(|c| c.name.clone()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn cycle_suite_passes_and_is_deterministic() {
        let ctx = context(SpaceFamily::Cycle { n: 10 });
        let opts = SuiteOptions { seed: 1, samples: 10, label: "cycle:n=10".into(), ..Default::default() };
        let a = run_suite(&ctx, &opts).unwrap();
        assert!(a.all_pass(), "{a:#?}");
        assert_eq!(a.total_skipped(), 0, "{a:#?}");
        let b = run_suite(&ctx, &opts).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn check_lists() {
        assert_eq!(CheckFamily::parse_list("all").unwrap(), CheckFamily::ALL.to_vec());
        let l = CheckFamily::parse_list("buser,eigen,buser").unwrap();
        assert_eq!(l, vec![CheckFamily::Eigen, CheckFamily::Buser]);
        assert_eq!(CheckFamily::format_list(&l), "eigen,buser");
        assert_eq!(CheckFamily::format_list(&CheckFamily::ALL), "all");
        assert!(CheckFamily::parse_list("nope").is_err());
    }

    #[test]
    fn failures_carry_reproduction_descriptors() {
        let ctx = context(SpaceFamily::Cycle { n: 6 });
        // a control far below c⋆ breaks the controlled checks
        let weak = ControlModel::power(1e-6, 0.5).unwrap();
        let opts = SuiteOptions {
            checks: vec![CheckFamily::CaloricPoincare],
            samples: 3,
            seed: 4,
            label: "cycle:n=6".into(),
            control: ControlChoice::Model(weak),
        };
        let report = run_suite(&ctx, &opts).unwrap();
        assert!(!report.all_pass());
        let s = report.get("caloric_poincare_control").unwrap();
        assert!(s.failed > 0);
        assert!(s.failures[0].repro.starts_with("space=cycle:n=6 seed=4 check=caloric_poincare sample="));
        assert_eq!(report.get("caloric_poincare").unwrap().failed, 0);
        let sample: usize = s.failures[0].repro.split("sample=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
        let again = evaluate_sample(&ctx, &opts, CheckFamily::CaloricPoincare, sample).unwrap();
        assert!(again.iter().any(|(_, r)| r.as_ref().is_ok_and(|r| !r.pass)));
    }

    #[test]
    fn extended_control_dominates_past_the_grid() {
        let ctx = context(SpaceFamily::Path { n: 5 });
        let c = extended_power_control(&ctx, 0.5, 30.0).unwrap();
        for t in [1e-3, 0.5, 1.0, 2.0, 7.5, 30.0] {
            assert!(c.eval(t).unwrap() >= ctx.heat.c_star(t).unwrap());
        }
        assert!(c.horizon().contains(30.0));
    }
}
