//! Upper bounds `c(t)` for the smoothing constant, their primitives
//! `C(t) = ∫₀ᵗ c`, power-law fitting from samples, and the threshold below
//! which a power-log bound reduces to a pure power bound.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{require_nonnegative_time, require_positive_time, Error, Result};
use crate::heat::SmoothingProfile;
use crate::quadrature;

const QUAD_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ControlKind {
    /// `M / t^b`.
    Power { m: f64, b: f64 },
    /// `M (1 + |ln t|)^a / t^b`.
    PowerLog { m: f64, a: f64, b: f64 },
    /// Step function: `values[i]` on `[times[i], times[i+1])`, `values[0]` left of `times[0]`.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
    /// `M √(j_K(t))` with `j_K(t) = K / (e^{2Kt} - 1)` and `j_0(t) = 1/(2t)`.
    ReferenceRcd { k: f64, m: f64 },
}

/// Times at which a control is asserted to bound `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// `(0, 1]`.
    UnitInterval,
    /// `(0, T]`.
    UpTo(f64),
    /// `(0, ∞)`.
    All,
}

impl Horizon {
    pub fn end(&self) -> f64 {
        match *self {
            Horizon::UnitInterval => 1.0,
            Horizon::UpTo(t) => t,
            Horizon::All => f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > 0.0 && t <= self.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlModel {
    #[serde(flatten)]
    pub kind: ControlKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<Horizon>,
}

impl ControlModel {
    pub fn power(m: f64, b: f64) -> Result<Self> {
        Self::with_kind(ControlKind::Power { m, b })
    }

    pub fn power_log(m: f64, a: f64, b: f64) -> Result<Self> {
        Self::with_kind(ControlKind::PowerLog { m, a, b })
    }

    /// Step envelope of samples; values are replaced by their smallest
    /// non-increasing majorant.
    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut env = values;
        for i in (0..env.len().saturating_sub(1)).rev() {
            env[i] = env[i].max(env[i + 1]);
        }
        Self::with_kind(ControlKind::Tabulated { times, values: env })
    }

    pub fn reference_rcd(k: f64, m: f64) -> Result<Self> {
        Self::with_kind(ControlKind::ReferenceRcd { k, m })
    }

    fn with_kind(kind: ControlKind) -> Result<Self> {
        let model = Self { kind, horizon: None };
        model.validate()?;
        Ok(model)
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Result<Self> {
        self.horizon = Some(horizon);
        self.validate()?;
        Ok(self)
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon.unwrap_or(match self.kind {
            ControlKind::Power { .. } | ControlKind::PowerLog { .. } => Horizon::UnitInterval,
            ControlKind::Tabulated { .. } | ControlKind::ReferenceRcd { .. } => Horizon::All,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let exponent_ok = |b: f64| b > 0.0 && b < 1.0;
        match &self.kind {
            ControlKind::Power { m, b } => {
                if !(m.is_finite() && *m >= 0.0) || !exponent_ok(*b) {
                    return bad(format!("power control needs M >= 0 and b in (0,1), got M={m}, b={b}"));
                }
            }
            ControlKind::PowerLog { m, a, b } => {
                if !(m.is_finite() && *m >= 0.0) || !(a.is_finite() && *a >= 0.0) || !exponent_ok(*b) {
                    return bad(format!("power-log control needs M, a >= 0 and b in (0,1), got M={m}, a={a}, b={b}"));
                }
            }
            ControlKind::Tabulated { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return bad("tabulated control needs equally many (nonzero) times and values".into());
                }
                if times.iter().chain(values).any(|v| !(v.is_finite() && *v > 0.0)) {
                    return bad("tabulated times and values must be positive".into());
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated times must be strictly increasing".into());
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return bad("tabulated values must be non-increasing".into());
                }
            }
            ControlKind::ReferenceRcd { k, m } => {
                if !k.is_finite() || !(m.is_finite() && *m >= 1.0) {
                    return bad(format!("reference control needs finite K and M >= 1, got K={k}, M={m}"));
                }
            }
        }
        if let Some(Horizon::UpTo(t)) = self.horizon {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("horizon must be positive, got {t}"));
            }
        }
        Ok(())
    }

    /// `c(t)` for `t` in the horizon.
    pub fn eval(&self, t: f64) -> Result<f64> {
        require_positive_time(t)?;
        if !self.horizon().contains(t) {
            return Err(Error::Time { t, requirement: "inside the control horizon" });
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            ControlKind::Power { m, b } => m / t.powf(*b),
            ControlKind::PowerLog { m, a, b } => m * (1.0 + t.ln().abs()).powf(*a) / t.powf(*b),
            ControlKind::Tabulated { times, values } => {
                let i = times.partition_point(|&s| s <= t);
                values[i.saturating_sub(1)]
            }
            ControlKind::ReferenceRcd { k, m } => m * j_k(*k, t).sqrt(),
        }
    }

    /// `C(t) = ∫₀ᵗ c(s) ds`; closed form for power and tabulated controls.
    pub fn primitive(&self, t: f64) -> Result<f64> {
        require_nonnegative_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            ControlKind::Power { m, b } => m / (1.0 - b) * t.powf(1.0 - b),
            ControlKind::PowerLog { m, a, b } => {
                // s = u^{1/(1-b)} removes the power singularity
                let e = 1.0 / (1.0 - b);
                let g = |u: f64| (1.0 + (e * u.ln()).abs()).powf(*a);
                m * e * quadrature::integrate(g, 0.0, t.powf(1.0 - b), 0.0, QUAD_REL_TOL)
            }
            ControlKind::Tabulated { times, values } => {
                let mut acc = values[0] * t.min(times[0]);
                for i in 0..times.len() {
                    if times[i] >= t {
                        break;
                    }
                    let end = times.get(i + 1).map_or(t, |&next| next.min(t));
                    acc += values[i] * (end - times[i]);
                }
                acc
            }
            ControlKind::ReferenceRcd { k, m } => {
                // s = u² removes the 1/√s singularity
                let g = |u: f64| 2.0 * u * j_k(*k, u * u).sqrt();
                m * quadrature::integrate(g, 0.0, t.sqrt(), 0.0, QUAD_REL_TOL)
            }
        })
    }

    /// `(M, b)` of a power control valid on `(0, 1]`. A power bound valid
    /// only on `(0, T]` with `T < 1` is extended to `(0, 1]` as
    /// `M T^{-b} / t^b`, using that `c⋆` is non-increasing.
    pub fn unit_interval_power(&self) -> Result<(f64, f64)> {
        match self.kind {
            ControlKind::Power { m, b } => {
                let end = self.horizon().end();
                Ok(if end >= 1.0 { (m, b) } else { (m * end.powf(-b), b) })
            }
            _ => Err(Error::InvalidArgument("explicit bounds need a power control".into())),
        }
    }

    /// The power bound `M / t^{b+ε}` on `(0, T(a, ε)]` implied by a power-log control.
    pub fn power_log_to_power(&self, eps: f64) -> Result<Self> {
        match self.kind {
            ControlKind::PowerLog { m, a, b } => {
                if !(eps > 0.0 && b + eps < 1.0) {
                    return Err(Error::InvalidArgument(format!("need 0 < eps < 1 - b, got eps={eps}")));
                }
                let t = log_threshold_t(a, eps)?;
                let horizon = Horizon::UpTo(t.min(self.horizon().end()));
                Self::power(m, b + eps)?.with_horizon(horizon)
            }
            _ => Err(Error::InvalidArgument("not a power-log control".into())),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text).map_err(|e| Error::file(path, e))?;
        model.validate().map_err(|e| Error::file(path, e))?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("controls serialize")
    }
}

/// `j_K(t) = K / (e^{2Kt} - 1)`, continuous in `K` with `j_0(t) = 1/(2t)`.
pub fn j_k(k: f64, t: f64) -> f64 {
    if k == 0.0 {
        1.0 / (2.0 * t)
    } else {
        k / (2.0 * k * t).exp_m1()
    }
}

/// Exponents `0.05, 0.10, …, 0.95` tried by the fit.
pub fn fit_exponents() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

/// `max_i c_i t_i^b`, the least `M` with `c_i ≤ M / t_i^b` for every sample,
/// rounded up until that holds in floating point.
pub fn envelope_constant(samples: &[(f64, f64)], b: f64) -> f64 {
    let mut m = samples.iter().map(|&(t, c)| c * t.powf(b)).fold(0.0, f64::max);
    while samples.iter().any(|&(t, c)| m / t.powf(b) < c) {
        m = m.next_up();
    }
    m
}

fn check_samples(samples: &[(f64, f64)]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to fit".into()));
    }
    if samples.iter().any(|&(t, c)| !(t > 0.0 && t.is_finite() && c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidArgument("samples must have positive finite times and values".into()));
    }
    Ok(())
}

fn best_exponent(samples: &[(f64, f64)], fixed_b: Option<f64>) -> Result<(f64, f64)> {
    if let Some(b) = fixed_b {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidArgument(format!("fixed exponent must lie in (0,1), got {b}")));
        }
        return Ok((envelope_constant(samples, b), b));
    }
    let mut best: Option<(f64, f64)> = None;
    for b in fit_exponents() {
        let m = envelope_constant(samples, b);
        if best.map_or(true, |(bm, _)| m < bm * (1.0 - 1e-12)) {
            best = Some((m, b));
        }
    }
    Ok(best.expect("exponent grid is nonempty"))
}

/// Power control `M / t^b` dominating samples `(t_i, c_i)` with `t_i ∈ (0, 1]`:
/// `b` minimizes `M(b) = max_i c_i t_i^b` over the exponent grid (ties to
/// the smallest `b`) unless fixed.
pub fn fit_power_control(samples: &[(f64, f64)], fixed_b: Option<f64>) -> Result<ControlModel> {
    check_samples(samples)?;
    if samples.iter().any(|&(t, _)| t > 1.0) {
        return Err(Error::InvalidArgument("sample times must lie in (0, 1]".into()));
    }
    let (m, b) = best_exponent(samples, fixed_b)?;
    ControlModel::power(m, b)
}

/// Power control dominating `c⋆` on all of `(0, t_last]`, fitted to the
/// step-envelope samples of a profile.
pub fn certified_power_control(profile: &SmoothingProfile, fixed_b: Option<f64>) -> Result<ControlModel> {
    let samples = profile.step_envelope_samples();
    check_samples(&samples)?;
    let (m, b) = best_exponent(&samples, fixed_b)?;
    let end = *profile.times.last().expect("samples are nonempty");
    let horizon = if end == 1.0 { Horizon::UnitInterval } else { Horizon::UpTo(end) };
    ControlModel::power(m, b)?.with_horizon(horizon)
}

/// Smallest `T ∈ (0, 1]` with `(1 - ln T)^a = T^{-ε}`; for `t ∈ (0, T]`,
/// `(1 + |ln t|)^a ≤ t^{-ε}`.
///
/// Solved in `u = -ln T` for the root of `εu - a ln(1 + u)`, which is
/// convex with its minimum at `u = a/ε - 1`.
pub fn log_threshold_t(a: f64, eps: f64) -> Result<f64> {
    if !(a >= 0.0 && a.is_finite()) || !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("need a >= 0 and eps > 0, got a={a}, eps={eps}")));
    }
    if a <= eps {
        return Ok(1.0);
    }
    let g = |u: f64| eps * u - a * u.ln_1p();
    let mut lo = a / eps - 1.0;
    let mut hi = 2.0 * lo + 1.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (-hi).exp();
    if t < f64::MIN_POSITIVE {
        return Err(Error::InvalidArgument(format!("threshold for a={a}, eps={eps} is below the smallest normal double")));
    }
    Ok(t)
}

/// `|a ln(1 - ln T) + ε ln T|`, the threshold equation in logarithmic form.
pub fn log_threshold_residual(a: f64, eps: f64, t: f64) -> f64 {
    (a * (-t.ln()).ln_1p() + eps * t.ln()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluations() {
        assert!((ControlModel::reference_rcd(0.0, 1.0).unwrap().eval(1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(ControlModel::power(2.0, 0.5).unwrap().eval(0.25).unwrap(), 4.0);
        for k in [1e-8, -1e-8] {
            assert!((j_k(k, 1.0) - 0.5).abs() < 1e-6);
        }
        // series j_K(t) = 1/(2t) - K/2 + K² t/6 + …
        let (k, t) = (1e-3, 0.7);
        assert!((j_k(k, t) - (1.0 / (2.0 * t) - k / 2.0 + k * k * t / 6.0)).abs() < 1e-9);
        assert!(j_k(-2.0, 1.0) > j_k(0.0, 1.0) && j_k(0.0, 1.0) > j_k(2.0, 1.0));
        let p = ControlModel::power(1.0, 0.5).unwrap();
        assert!(p.eval(2.0).is_err() && p.eval(0.0).is_err());
        let pl = ControlModel::power_log(1.0, 2.0, 0.5).unwrap();
        assert!((pl.eval(f64::exp(-1.0)).unwrap() - 4.0 * 0.5f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(ControlModel::power(1.0, 1.0).is_err());
        assert!(ControlModel::power(-1.0, 0.5).is_err());
        assert!(ControlModel::power_log(1.0, -1.0, 0.5).is_err());
        assert!(ControlModel::reference_rcd(0.0, 0.5).is_err());
        assert!(ControlModel::tabulated(vec![0.1, 0.1], vec![1.0, 1.0]).is_err());
        assert!(ControlModel::tabulated(vec![], vec![]).is_err());
        let tab = ControlModel::tabulated(vec![0.1, 0.2, 0.3], vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(tab.kind, ControlKind::Tabulated { times: vec![0.1, 0.2, 0.3], values: vec![3.0, 2.0, 2.0] });
    }

    #[test]
    fn primitives() {
        assert_eq!(ControlModel::power(1.0, 0.5).unwrap().primitive(1.0).unwrap(), 2.0);
        assert_eq!(ControlModel::power(1.0, 0.5).unwrap().primitive(0.0).unwrap(), 0.0);
        // ∫₀ᵗ 1/√(2s) ds = √(2t)
        let r = ControlModel::reference_rcd(0.0, 1.0).unwrap();
        assert!((r.primitive(0.8).unwrap() - 1.6f64.sqrt()).abs() < 1e-12);
        // a = 0 reduces to the power closed form
        let pl = ControlModel::power_log(1.5, 0.0, 0.3).unwrap();
        assert!((pl.primitive(0.6).unwrap() - 1.5 / 0.7 * 0.6f64.powf(0.7)).abs() < 1e-12);
        // a = 1, b = 1/2: ∫₀ᵗ (1 - ln s)/√s ds = 2√t (3 - ln t) on (0,1]
        let pl = ControlModel::power_log(1.0, 1.0, 0.5).unwrap();
        let t = 0.3f64;
        assert!((pl.primitive(t).unwrap() - 2.0 * t.sqrt() * (3.0 - t.ln())).abs() < 1e-10);
        let tab = ControlModel::tabulated(vec![0.5, 1.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(tab.primitive(0.25).unwrap(), 0.5);
        assert_eq!(tab.primitive(0.75).unwrap(), 1.5);
        assert_eq!(tab.primitive(3.0).unwrap(), 4.0);
        assert_eq!(tab.eval(0.5).unwrap(), 2.0);
        assert_eq!(tab.eval(0.999).unwrap(), 2.0);
        assert_eq!(tab.eval(1.0).unwrap(), 1.0);
    }

    #[test]
    fn tabulated_two_point_primitive_converges() {
        let c = |s: f64| 2f64.sqrt() * (-2.0 * s).exp();
        let exact = |t: f64| 2f64.sqrt() / 2.0 * (1.0 - (-2.0 * t).exp());
        let mut prev_err = f64::INFINITY;
        for k in [10, 14, 18, 21] {
            let n = 1usize << k;
            let times: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
            let values = times.iter().map(|&t| c(t)).collect();
            let tab = ControlModel::tabulated(times, values).unwrap();
            let err = [0.1, 0.5, 1.0].iter().map(|&t| (tab.primitive(t).unwrap() - exact(t)).abs()).fold(0.0, f64::max);
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-6);
    }

    #[test]
    fn fitting() {
        let grid = crate::heat::log_grid(1e-3, 1.0, 40).unwrap();
        let p2: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 2f64.sqrt() * (-2.0 * t).exp())).collect();
        let env = envelope_constant(&p2, 0.05);
        assert!(p2.iter().all(|&(t, c)| c <= env / t.powf(0.05)));
        let fit = fit_power_control(&p2, None).unwrap();
        for &(t, c) in &p2 {
            assert!(c <= fit.eval(t).unwrap());
        }

        let ones: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 1.0)).collect();
        assert_eq!(fit_power_control(&ones, None).unwrap().kind, ControlKind::Power { m: 1.0, b: 0.05 });

        let own: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 3.0 / t.sqrt())).collect();
        let ControlKind::Power { m, b } = fit_power_control(&own, None).unwrap().kind else { panic!() };
        assert!((m - 3.0).abs() < 1e-12 && b == 0.5);
        let ControlKind::Power { m, b } = fit_power_control(&own, Some(0.5)).unwrap().kind else { panic!() };
        assert!((m - 3.0).abs() < 1e-12 && b == 0.5);

        assert!(fit_power_control(&[], None).is_err());
        assert!(fit_power_control(&[(2.0, 1.0)], None).is_err());
        assert!(fit_power_control(&[(0.5, 1.0)], Some(1.0)).is_err());
    }

    #[test]
    fn threshold_solver() {
        assert_eq!(log_threshold_t(0.0, 0.3).unwrap(), 1.0);
        assert_eq!(log_threshold_t(1.0, 1.0).unwrap(), 1.0);
        assert!(log_threshold_t(-1.0, 1.0).is_err());
        assert!(log_threshold_t(1.0, 0.0).is_err());
        let t = log_threshold_t(2.0, 1.0).unwrap();
        assert!(t < 1.0 && log_threshold_residual(2.0, 1.0, t) <= 1e-10);
        // independent oracle: plain bisection on the original equation in T
        let h = |x: f64| (1.0 - x.ln()).powi(2) - 1.0 / x;
        let (mut lo, mut hi) = (1e-6, 0.5);
        assert!(h(lo) < 0.0 && h(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < 0.0 { lo = mid } else { hi = mid }
        }
        assert!((t - lo).abs() < 1e-10);
    }

    #[test]
    fn power_log_reduction() {
        let pl = ControlModel::power_log(2.0, 1.0, 0.4).unwrap();
        let p = pl.power_log_to_power(0.3).unwrap();
        let t_end = p.horizon().end();
        assert!(t_end < 1.0);
        for i in 1..=100 {
            let t = t_end * i as f64 / 100.0;
            assert!(pl.eval(t).unwrap() <= p.eval(t).unwrap() * (1.0 + 1e-12));
        }
        let (m, b) = p.unit_interval_power().unwrap();
        assert!((b - 0.7).abs() < 1e-15 && m > 2.0);
        assert!(pl.power_log_to_power(0.7).is_err());
    }

    #[test]
    fn json_round_trip() {
        for c in [
            ControlModel::power(2.0, 0.5).unwrap(),
            ControlModel::power_log(1.0, 2.0, 0.3).unwrap().with_horizon(Horizon::UpTo(0.5)).unwrap(),
            ControlModel::tabulated(vec![0.1, 1.0], vec![2.0, 1.0]).unwrap(),
            ControlModel::reference_rcd(-1.0, 1.0).unwrap(),
        ] {
            let back: ControlModel = serde_json::from_str(&c.to_json()).unwrap();
            assert_eq!(back, c);
        }
    }
}
