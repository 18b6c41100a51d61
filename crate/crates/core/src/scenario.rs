//! Scenario configuration and the runner that turns one configuration into
//! a report, a summary table, a smoothing sweep and a fitted control.
//!
//! A configuration is whitespace-separated `key=value` text; `#` starts a
//! comment that runs to the end of the line. Keys:
//!
//! | key       | value                                                    | default          |
//! |-----------|----------------------------------------------------------|------------------|
//! | `space`   | generator spec (`cycle:n=12`) or `file:<path>`           | required         |
//! | `t_grid`  | `log:<min>,<max>,<count>`                                | `log:0.001,1,40` |
//! | `seed`    | unsigned integer                                         | `0`              |
//! | `suite`   | `all` or comma-separated check families                  | `all`            |
//! | `samples` | random samples per check family                          | `100`            |
//! | `control` | `fit`, `fit:b=<b>`, `power:m=<M>,b=<b>`, `rcd:k=<K>,m=<M>` or `file:<path>` | `fit` |
//! | `out`     | output directory                                         | `semlab-out`     |
//!
//! Output files, all written once at the end of a run:
//!
//! * `report.json`: the full report.
//! * `summary.csv`: `name,lhs,rhs,slack,t_used,pass`, one row per inequality
//!   (its worst instance), sorted by name.
//! * `sweep.csv`: `t,c_star,C_star,theta` on the time grid.
//! * `control.json`: the control used by the explicit bounds.
//! * `summary.txt`: a human-readable digest.
//!
//! Numbers in CSV files carry 17 significant digits.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controls::ControlModel;
use crate::error::{Error, Result};
use crate::generate::{calibrate_metric, SpaceFile, SpaceSpec};
use crate::heat::{log_grid, SmoothingProfile};
use crate::inequalities::Context;
use crate::suite::{run_suite, CheckFamily, ControlChoice, SuiteOptions, SuiteReport};
use crate::{Dirichlet, MetricMeasureSpace};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const CONTROL_FILE: &str = "control.json";
pub const SUMMARY_TXT: &str = "summary.txt";

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceSource {
    Spec(SpaceSpec),
    File(PathBuf),
}

impl SpaceSource {
    /// The calibrated space and its conductances.
    pub fn load(&self) -> Result<(MetricMeasureSpace, Dirichlet)> {
        match self {
            SpaceSource::Spec(spec) => spec.generate(),
            SpaceSource::File(path) => {
                let (space, dirichlet) = SpaceFile::load(path)?.into_space().map_err(|e| Error::file(path, e))?;
                let space = calibrate_metric(&space, &dirichlet).map_err(|e| Error::file(path, e))?;
                Ok((space, dirichlet))
            }
        }
    }
}

impl fmt::Display for SpaceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSource::Spec(s) => write!(f, "{s}"),
            SpaceSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for SpaceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(SpaceSource::File(PathBuf::from(path)));
        }
        match s.parse::<SpaceSpec>() {
            Ok(spec) => Ok(SpaceSource::Spec(spec)),
            Err(_) if s.contains('/') || s.ends_with(".json") => Ok(SpaceSource::File(PathBuf::from(s))),
            Err(e) => Err(e),
        }
    }
}

/// `log:<min>,<max>,<count>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { min: 1e-3, max: 1.0, count: 40 }
    }
}

impl TimeGrid {
    pub fn times(&self) -> Result<Vec<f64>> {
        log_grid(self.min, self.max, self.count)
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "log:{},{},{}", self.min, self.max, self.count)
    }
}

impl FromStr for TimeGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("time grid must look like log:<min>,<max>,<count>, got '{s}'"));
        let body = s.strip_prefix("log:").ok_or_else(bad)?;
        let parts: Vec<&str> = body.split(',').collect();
        let [min, max, count] = parts[..] else { return Err(bad()) };
        let grid = TimeGrid {
            min: min.parse().map_err(|_| bad())?,
            max: max.parse().map_err(|_| bad())?,
            count: count.parse().map_err(|_| bad())?,
        };
        grid.times()?;
        Ok(grid)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControlSpec {
    Fit { b: Option<f64> },
    Power { m: f64, b: f64 },
    ReferenceRcd { k: f64, m: f64 },
    File(PathBuf),
}

impl ControlSpec {
    pub fn choice(&self) -> Result<ControlChoice> {
        Ok(match self {
            ControlSpec::Fit { b } => ControlChoice::Fit { b: *b },
            ControlSpec::Power { m, b } => ControlChoice::Model(ControlModel::power(*m, *b)?),
            ControlSpec::ReferenceRcd { k, m } => ControlChoice::Model(ControlModel::reference_rcd(*k, *m)?),
            ControlSpec::File(path) => ControlChoice::Model(ControlModel::load(path)?),
        })
    }
}

impl fmt::Display for ControlSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlSpec::Fit { b: None } => write!(f, "fit"),
            ControlSpec::Fit { b: Some(b) } => write!(f, "fit:b={b}"),
            ControlSpec::Power { m, b } => write!(f, "power:m={m},b={b}"),
            ControlSpec::ReferenceRcd { k, m } => write!(f, "rcd:k={k},m={m}"),
            ControlSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for ControlSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(ControlSpec::File(PathBuf::from(path)));
        }
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut b = None;
        let mut m = None;
        let mut k = None;
        for pair in rest.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("control parameter '{pair}' is not key=value")))?;
            let v: f64 = value
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("control parameter {key} is not a number: '{value}'")))?;
            let slot = match key {
                "b" => &mut b,
                "m" => &mut m,
                "k" => &mut k,
                _ => return Err(Error::UnknownKey(key.to_string())),
            };
            *slot = Some(v);
        }
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::InvalidArgument(format!("control '{kind}' needs parameter {key}")))
        };
        let reject = |v: Option<f64>, key: &str| match v {
            Some(_) => Err(Error::UnknownKey(key.to_string())),
            None => Ok(()),
        };
        let spec = match kind {
            "fit" => {
                reject(m, "m")?;
                reject(k, "k")?;
                ControlSpec::Fit { b }
            }
            "power" => {
                reject(k, "k")?;
                ControlSpec::Power { m: need(m, "m")?, b: need(b, "b")? }
            }
            "rcd" => {
                reject(b, "b")?;
                ControlSpec::ReferenceRcd { k: need(k, "k")?, m: need(m, "m")? }
            }
            _ => return Err(Error::InvalidArgument(format!("unknown control '{kind}'"))),
        };
        if let ControlSpec::Fit { b: Some(b) } | ControlSpec::Power { b, .. } = spec {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidArgument(format!("control exponent must lie in (0,1), got {b}")));
            }
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub space: SpaceSource,
    pub t_grid: TimeGrid,
    pub seed: u64,
    pub suite: Vec<CheckFamily>,
    pub samples: usize,
    pub control: ControlSpec,
    pub out: PathBuf,
}

impl ScenarioConfig {
    pub fn new(space: SpaceSource) -> Self {
        Self {
            space,
            t_grid: TimeGrid::default(),
            seed: 0,
            suite: CheckFamily::ALL.to_vec(),
            samples: 100,
            control: ControlSpec::Fit { b: None },
            out: PathBuf::from("semlab-out"),
        }
    }

    /// Parses configuration text; errors carry the byte offset of the offending token.
    pub fn parse(text: &str) -> Result<Self> {
        let mut space = None;
        let mut t_grid = None;
        let mut seed = None;
        let mut suite = None;
        let mut samples = None;
        let mut control = None;
        let mut out = None;
        for (pos, token) in tokens(text) {
            let at = |e: Error| match e {
                Error::UnknownKey(_) => e,
                other => Error::Parse { position: pos, message: other.to_string() },
            };
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse { position: pos, message: format!("expected key=value, got '{token}'") })?;
            if value.is_empty() {
                return Err(Error::Parse { position: pos, message: format!("empty value for '{key}'") });
            }
            let fresh = match key {
                "space" => space.replace(value.parse::<SpaceSource>().map_err(at)?).is_none(),
                "t_grid" => t_grid.replace(value.parse::<TimeGrid>().map_err(at)?).is_none(),
                "seed" => seed
                    .replace(value.parse::<u64>().map_err(|_| Error::Parse {
                        position: pos,
                        message: format!("seed must be an unsigned integer, got '{value}'"),
                    })?)
                    .is_none(),
                "suite" => suite.replace(CheckFamily::parse_list(value).map_err(at)?).is_none(),
                "samples" => samples
                    .replace(value.parse::<usize>().map_err(|_| Error::Parse {
                        position: pos,
                        message: format!("samples must be an unsigned integer, got '{value}'"),
                    })?)
                    .is_none(),
                "control" => control.replace(value.parse::<ControlSpec>().map_err(at)?).is_none(),
                "out" => out.replace(PathBuf::from(value)).is_none(),
                _ => return Err(Error::UnknownKey(key.to_string())),
            };
            if !fresh {
                return Err(Error::Parse { position: pos, message: format!("duplicate key '{key}'") });
            }
        }
        let space = space.ok_or_else(|| Error::Parse { position: text.len(), message: "missing key 'space'".into() })?;
        let mut config = Self::new(space);
        if let Some(v) = t_grid {
            config.t_grid = v;
        }
        if let Some(v) = seed {
            config.seed = v;
        }
        if let Some(v) = suite {
            config.suite = v;
        }
        if let Some(v) = samples {
            config.samples = v;
        }
        if let Some(v) = control {
            config.control = v;
        }
        if let Some(v) = out {
            config.out = v;
        }
        Ok(config)
    }

    /// Canonical text with every key present.
    pub fn to_canonical(&self) -> String {
        format!(
            "space={} t_grid={} seed={} suite={} samples={} control={} out={}",
            self.space,
            self.t_grid,
            self.seed,
            CheckFamily::format_list(&self.suite),
            self.samples,
            self.control,
            self.out.display()
        )
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Whitespace-separated tokens with their byte offsets, skipping `#` comments.
fn tokens(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let body = line.split('#').next().unwrap_or("");
        let mut i = 0;
        for piece in body.split(char::is_whitespace) {
            if !piece.is_empty() {
                out.push((line_start + i, piece));
            }
            i += piece.len() + 1;
        }
        line_start += line.len();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub n: usize,
    pub total_mass: f64,
    pub diameter: f64,
    pub lambda1: f64,
    pub lambda1_multiplicity: usize,
    pub h1: f64,
    pub h1_exact: bool,
    pub c_star_sup_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub config: String,
    pub space: SpaceSummary,
    pub pass: bool,
    pub suite: SuiteReport,
}

/// Everything a run produces, before it is written.
#[derive(Clone, Debug)]
pub struct ScenarioArtifacts {
    pub report: ScenarioReport,
    pub profile: SmoothingProfile,
}

impl ScenarioArtifacts {
    pub fn pass(&self) -> bool {
        self.report.pass
    }

    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("reports serialize") + "\n"
    }

    pub fn summary_csv(&self) -> String {
        summary_csv(&self.report.suite)
    }

    pub fn sweep_csv(&self) -> String {
        sweep_csv(&self.profile)
    }

    pub fn control_json(&self) -> String {
        self.report.suite.control.to_json() + "\n"
    }

    pub fn summary_text(&self) -> String {
        summary_text(&self.report)
    }

    /// Writes all output files into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            (REPORT_FILE, self.report_json()),
            (SUMMARY_CSV, self.summary_csv()),
            (SWEEP_CSV, self.sweep_csv()),
            (CONTROL_FILE, self.control_json()),
            (SUMMARY_TXT, self.summary_text()),
        ];
        for (name, contents) in files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Builds the space, runs the suite and assembles the artifacts without writing them.
pub fn evaluate_scenario(config: &ScenarioConfig) -> Result<ScenarioArtifacts> {
    let (space, dirichlet) = config.space.load()?;
    let ctx = Context::new(space, dirichlet, &config.t_grid.times()?)?;
    let options = SuiteOptions {
        checks: config.suite.clone(),
        samples: config.samples,
        seed: config.seed,
        label: config.space.to_string(),
        control: config.control.choice()?,
    };
    let suite = run_suite(&ctx, &options)?;
    let space = SpaceSummary {
        n: ctx.space.len(),
        total_mass: ctx.space.total_mass(),
        diameter: ctx.space.diameter(),
        lambda1: ctx.spectrum.lambda1,
        lambda1_multiplicity: ctx.spectrum.lambda1_multiplicity(),
        h1: ctx.h1.value,
        h1_exact: ctx.h1.exact,
        c_star_sup_bound: ctx.profile.sup_bound,
    };
    let report = ScenarioReport { config: config.to_canonical(), space, pass: suite.all_pass(), suite };
    Ok(ScenarioArtifacts { report, profile: ctx.profile })
}

/// Runs a scenario and writes its artifacts to `config.out`. Failing checks
/// still produce artifacts; the result reports whether every check passed.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioArtifacts> {
    let artifacts = evaluate_scenario(config)?;
    artifacts.write(&config.out)?;
    Ok(artifacts)
}

/// A number with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn summary_csv(suite: &SuiteReport) -> String {
    let mut out = String::from("name,lhs,rhs,slack,t_used,pass\n");
    for c in &suite.checks {
        let Some(w) = &c.worst else { continue };
        let t = w.t_used.map(fmt_num).unwrap_or_default();
        let pass = c.failed == 0;
        out.push_str(&format!("{},{},{},{},{},{}\n", c.name, fmt_num(w.lhs), fmt_num(w.rhs), fmt_num(w.slack), t, pass));
    }
    out
}

pub fn sweep_csv(profile: &SmoothingProfile) -> String {
    let mut out = String::from("t,c_star,C_star,theta\n");
    for i in 0..profile.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(profile.times[i]),
            fmt_num(profile.c_star[i]),
            fmt_num(profile.primitive[i]),
            fmt_num(profile.theta[i])
        ));
    }
    out
}

pub fn summary_text(report: &ScenarioReport) -> String {
    let s = &report.space;
    let suite = &report.suite;
    let mut out = format!("scenario: {}\n", report.config);
    out.push_str(&format!(
        "space: n={} mass={} diameter={:.6} lambda1={:.6} (multiplicity {}) h1={:.6}{}\n",
        s.n,
        s.total_mass,
        s.diameter,
        s.lambda1,
        s.lambda1_multiplicity,
        s.h1,
        if s.h1_exact { "" } else { " (sweep upper bound)" }
    ));
    out.push_str(&format!("control: {}\n", serde_json::to_string(&suite.control).expect("controls serialize")));
    out.push_str(&format!(
        "checks: {} evaluated, {} failed, {} skipped\n",
        suite.total_evaluated(),
        suite.total_failed(),
        suite.total_skipped()
    ));
    for c in &suite.checks {
        let status = if c.failed > 0 {
            "FAIL"
        } else if c.evaluated == c.trivial && c.skipped == 0 {
            "trivial"
        } else if c.evaluated == 0 {
            "skipped"
        } else {
            "pass"
        };
        let worst = c.worst.as_ref().map_or("-".to_string(), |w| format!("{:.3e}", w.normalized_slack()));
        let eq = if c.equality { " equality" } else { "" };
        out.push_str(&format!(
            "  {:<32} {:<7} n={:<5} failed={:<4} skipped={:<4} worst={}{}\n",
            c.name, status, c.evaluated, c.failed, c.skipped, worst, eq
        ));
        for f in &c.failures {
            out.push_str(&format!("    repro: {}\n", f.repro));
        }
        for r in &c.skip_reasons {
            out.push_str(&format!("    skipped: {r}\n"));
        }
    }
    out.push_str(if report.pass { "result: PASS\n" } else { "result: FAIL\n" });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ScenarioConfig::parse("space=two_point").unwrap();
        assert_eq!(c.t_grid, TimeGrid { min: 1e-3, max: 1.0, count: 40 });
        assert_eq!(c.seed, 0);
        assert_eq!(c.samples, 100);
        assert_eq!(c.suite, CheckFamily::ALL.to_vec());
        assert_eq!(c.control, ControlSpec::Fit { b: None });
    }

    #[test]
    fn full_config_and_canonical_round_trip() {
        let c = ScenarioConfig::parse("space=cycle:n=12 seed=7 suite=all").unwrap();
        assert_eq!(c.seed, 7);
        let canon = c.to_canonical();
        assert_eq!(
            canon,
            "space=cycle:n=12 t_grid=log:0.001,1,40 seed=7 suite=all samples=100 control=fit out=semlab-out"
        );
        assert_eq!(ScenarioConfig::parse(&canon).unwrap(), c);
        let text = "# comment\nspace=path:n=4   control=power:m=2,b=0.5\n suite=eigen,buser out=x/y # trailing";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(ScenarioConfig::parse(&c.to_canonical()).unwrap(), c);
        assert_eq!(c.control, ControlSpec::Power { m: 2.0, b: 0.5 });
    }

    #[test]
    fn errors() {
        assert!(matches!(ScenarioConfig::parse("spce=typo"), Err(Error::UnknownKey(k)) if k == "spce"));
        match ScenarioConfig::parse("space=two_point seed=abc") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 16),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ScenarioConfig::parse("space=two_point novalue"), Err(Error::Parse { position: 16, .. })));
        assert!(matches!(ScenarioConfig::parse("seed=1"), Err(Error::Parse { .. })));
        assert!(matches!(ScenarioConfig::parse("space=two_point seed=1 seed=2"), Err(Error::Parse { position: 23, .. })));
        assert!(ScenarioConfig::parse("space=two_point t_grid=lin:1,2,3").is_err());
        assert!(ScenarioConfig::parse("space=two_point control=power:m=1").is_err());
        assert!(ScenarioConfig::parse("space=two_point suite=nope").is_err());
    }

    #[test]
    fn space_sources() {
        assert_eq!("file:a b".parse::<SpaceSource>().unwrap(), SpaceSource::File("a b".into()));
        assert_eq!("dir/space.json".parse::<SpaceSource>().unwrap(), SpaceSource::File("dir/space.json".into()));
        assert!("nonsense".parse::<SpaceSource>().is_err());
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_num(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
