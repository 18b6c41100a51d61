//! One verification per inequality: both sides are evaluated exactly on a
//! finite space, with the smoothing constant either measured (`c⋆`, `C⋆`,
//! `θ`) or taken from a control, and explicit constants assembled from the
//! power-law parameters.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::controls::ControlModel;
use crate::dirichlet::Dirichlet;
use crate::error::{Error, Result};
use crate::heat::{HeatOperator, SmoothingProfile};
use crate::space::{negative_part, positive_part, Density, MetricMeasureSpace, Subset};
use crate::spectral::{self, CheegerResult, SpectralSummary, ENUMERATION_LIMIT};
use crate::transport;

/// Relative slack tolerance: a report passes iff `rhs - lhs ≥ -SLACK_TOL (1 + |lhs| + |rhs|)`.
pub const SLACK_TOL: f64 = 1e-9;

/// `lhs ≤ rhs` for one instance of an inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub t_used: Option<f64>,
    pub params: BTreeMap<String, f64>,
    pub pass: bool,
    /// Both sides vanish for structural reasons.
    pub trivial: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        let pass = slack >= -SLACK_TOL * (1.0 + lhs.abs() + rhs.abs());
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack,
            t_used: None,
            params: BTreeMap::new(),
            pass,
            trivial: false,
            notes: Vec::new(),
        }
    }

    pub fn trivial(name: &str, reason: &str) -> Self {
        let mut r = Self::new(name, 0.0, 0.0);
        r.trivial = true;
        r.notes.push(reason.to_string());
        r
    }

    pub fn scale(&self) -> f64 {
        1.0 + self.lhs.abs() + self.rhs.abs()
    }

    /// `slack / scale`, the quantity compared against `-SLACK_TOL`.
    pub fn normalized_slack(&self) -> f64 {
        self.slack / self.scale()
    }

    fn at(mut self, t: f64) -> Self {
        self.t_used = Some(t);
        self
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Where `c(t)` and `C(t)` come from.
#[derive(Clone, Copy, Debug)]
pub enum Smoothing<'a> {
    /// The optimal constant `c⋆` of the space and its primitive.
    Measured,
    Control(&'a ControlModel),
}

/// A space with everything the checks need precomputed.
#[derive(Clone, Debug)]
pub struct Context {
    pub space: MetricMeasureSpace,
    pub dirichlet: Dirichlet,
    pub heat: HeatOperator,
    pub profile: SmoothingProfile,
    pub spectrum: SpectralSummary,
    /// Exact for up to `ENUMERATION_LIMIT` points, otherwise a sweep upper bound.
    pub h1: CheegerResult,
    half_theta: Vec<f64>,
}

impl Context {
    pub fn new(space: MetricMeasureSpace, dirichlet: Dirichlet, grid: &[f64]) -> Result<Self> {
        let heat = HeatOperator::new(space.clone(), dirichlet.clone())?;
        let profile = heat.profile(grid)?;
        let spectrum = spectral::spectrum(&heat);
        let h1 = if space.len() <= ENUMERATION_LIMIT {
            spectral::h1_exact(&space, &dirichlet)?
        } else {
            spectral::h1_sweep(&space, &dirichlet, &heat)
        };
        let half_theta = grid.iter().map(|&t| heat.theta(0.5 * t)).collect::<Result<_>>()?;
        Ok(Self { space, dirichlet, heat, profile, spectrum, h1, half_theta })
    }

    pub fn grid(&self) -> &[f64] {
        &self.profile.times
    }

    pub fn c(&self, t: f64, s: Smoothing) -> Result<f64> {
        match s {
            Smoothing::Measured => match self.profile.index_of(t) {
                Some(i) => Ok(self.profile.c_star[i]),
                None => self.heat.c_star(t),
            },
            Smoothing::Control(c) => c.eval(t),
        }
    }

    pub fn cap_c(&self, t: f64, s: Smoothing) -> Result<f64> {
        match s {
            Smoothing::Measured => match self.profile.index_of(t) {
                Some(i) => Ok(self.profile.primitive[i]),
                None => self.heat.c_star_primitive(t),
            },
            Smoothing::Control(c) => c.primitive(t),
        }
    }

    fn theta_half(&self, i: usize) -> f64 {
        self.half_theta[i]
    }

    fn tv(&self, f: &Density) -> f64 {
        self.dirichlet.total_variation(&self.space, f)
    }

    fn per(&self, a: &Subset) -> f64 {
        self.dirichlet.perimeter(&self.space, a)
    }

    fn h1_note(&self, r: InequalityReport) -> InequalityReport {
        if self.h1.exact {
            r
        } else {
            r.note("consistency: h1 is a sweep upper bound")
        }
    }

    fn require_mean_zero(&self, f: &Density) -> Result<()> {
        self.space.check_len(f)?;
        let mean = self.space.integral(f);
        if mean.abs() > 1e-10 * (1.0 + 0.5 * self.space.l1_norm(f)) {
            return Err(Error::NotMeanZero(mean));
        }
        Ok(())
    }

    fn w1_parts(&self, f: &Density) -> Result<f64> {
        Ok(transport::w1_densities(&self.space, &positive_part(f), &negative_part(f))?.value)
    }

    fn control_note(&self, r: InequalityReport, t: f64, s: Smoothing) -> Result<InequalityReport> {
        Ok(match s {
            Smoothing::Measured => r,
            Smoothing::Control(_) => {
                let c = self.c(t, s)?;
                let star = self.heat.c_star(t)?;
                let r = r.param("c_star", star).param("c", c);
                if c + 1e-12 * c.abs() < star {
                    r.note("control does not dominate c_star at t_used")
                } else {
                    r
                }
            }
        })
    }

    /// `‖H_t(f₀ - f₁)‖_{L¹} ≤ c(t) W₁(f₀𝔪, f₁𝔪)`.
    pub fn check_w1_smoothing(&self, t: f64, f0: &Density, f1: &Density, s: Smoothing) -> Result<InequalityReport> {
        let w = transport::w1_densities(&self.space, f0, f1)?;
        let lhs = self.space.l1_norm(&self.heat.apply(t, &(f0 - f1))?);
        let c = self.c(t, s)?;
        let r = InequalityReport::new("w1_smoothing", lhs, c * w.value).at(t).param("w1", w.value).param("c", c);
        self.control_note(r, t, s)
    }

    /// `‖H_t(f₀ - f₁)‖_{L¹} ≤ max{c⋆(t), 1} BL⋆(f₀𝔪, f₁𝔪)` for nonnegative densities.
    pub fn check_bl_smoothing(&self, t: f64, f0: &Density, f1: &Density) -> Result<InequalityReport> {
        if f0.iter().chain(f1.iter()).any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("densities must be nonnegative".into()));
        }
        let bl = transport::bl_star_densities(&self.space, f0, f1)?;
        let lhs = self.space.l1_norm(&self.heat.apply(t, &(f0 - f1))?);
        let c = self.c(t, Smoothing::Measured)?.max(1.0);
        Ok(InequalityReport::new("bl_smoothing", lhs, c * bl.value).at(t).param("bl_star", bl.value).param("c_tilde", c))
    }

    /// `‖f‖²_{L²} - ‖H_{t/2} f‖²_{L²} ≤ C(t) ‖f‖_∞ TV(f)`.
    pub fn check_quant_contraction(&self, t: f64, f: &Density, s: Smoothing) -> Result<InequalityReport> {
        let h = self.heat.apply(0.5 * t, f)?;
        let lhs = self.space.inner(f, f) - self.space.inner(&h, &h);
        let cap = self.cap_c(t, s)?;
        let rhs = cap * self.space.linf_norm(f) * self.tv(f);
        Ok(InequalityReport::new("quant_contraction", lhs, rhs).at(t).param("C", cap))
    }

    /// `‖f‖²_{L²} ≤ min_t θ(t/2) ‖f‖²_{L¹} + C(t) ‖f‖_∞ TV(f)` over the grid.
    pub fn check_interpolation(&self, f: &Density, s: Smoothing) -> Result<InequalityReport> {
        self.space.check_len(f)?;
        let (l1, linf, tv) = (self.space.l1_norm(f), self.space.linf_norm(f), self.tv(f));
        let mut best = (f64::INFINITY, 0);
        for (i, &t) in self.grid().iter().enumerate() {
            let v = self.theta_half(i) * l1 * l1 + self.cap_c(t, s)? * linf * tv;
            if v < best.0 {
                best = (v, i);
            }
        }
        let lhs = self.space.inner(f, f);
        let t = self.grid()[best.1];
        let mut r = InequalityReport::new("interpolation", lhs, best.0).at(t).param("theta_half", self.theta_half(best.1));
        if best.1 == 0 || best.1 + 1 == self.grid().len() {
            r = r.note("grid optimum at a boundary node");
        }
        Ok(r)
    }

    /// `‖f - H_t f‖_{L¹} ≤ C(t) TV(f)`.
    pub fn check_caloric_poincare(&self, t: f64, f: &Density, s: Smoothing) -> Result<InequalityReport> {
        let lhs = self.space.l1_norm(&(f - self.heat.apply(t, f)?));
        let cap = self.cap_c(t, s)?;
        Ok(InequalityReport::new("caloric_poincare", lhs, cap * self.tv(f)).at(t).param("C", cap))
    }

    /// `∫_{Aᶜ} H_t χ_A d𝔪 ≤ ½ C(t) Per(A)`.
    pub fn check_perimeter_set(&self, t: f64, a: &Subset, s: Smoothing) -> Result<InequalityReport> {
        if a.len() != self.space.len() {
            return Err(Error::DimensionMismatch { expected: self.space.len(), got: a.len() });
        }
        if a.count() == 0 || a.is_full() {
            return Ok(InequalityReport::trivial("perimeter_set", "empty or full set").at(t));
        }
        let h = self.heat.apply(t, &a.indicator())?;
        let lhs = self.space.integral(&h.component_mul(&a.complement().indicator()));
        let cap = self.cap_c(t, s)?;
        let per = self.per(a);
        Ok(InequalityReport::new("perimeter_set", lhs, 0.5 * cap * per).at(t).param("C", cap).param("per", per))
    }

    /// `∫ √(H_t f⁺ · H_t f⁻) d𝔪 ≤ √(C(t) ‖f‖_∞ ‖f‖_{L¹} Per({f > 0}))`.
    pub fn check_perimeter_linfty(&self, t: f64, f: &Density, s: Smoothing) -> Result<InequalityReport> {
        let hp = self.heat.apply(t, &positive_part(f))?;
        let hn = self.heat.apply(t, &negative_part(f))?;
        let prod = hp.zip_map(&hn, |a, b| (a.max(0.0) * b.max(0.0)).sqrt());
        let lhs = self.space.integral(&prod);
        let cap = self.cap_c(t, s)?;
        let per = self.per(&Subset::positive_set(f));
        let rhs = (cap * self.space.linf_norm(f) * self.space.l1_norm(f) * per).sqrt();
        Ok(InequalityReport::new("perimeter_linfty", lhs, rhs).at(t).param("C", cap).param("per", per))
    }

    /// `‖f‖_{L¹} ≤ c(t) W₁(f⁺𝔪, f⁻𝔪) + 2 √(C(t) ‖f‖_∞ ‖f‖_{L¹} Per({f > 0}))` for mean-zero `f`.
    pub fn check_indeterminacy_implicit(&self, t: f64, f: &Density, s: Smoothing) -> Result<InequalityReport> {
        self.require_mean_zero(f)?;
        let l1 = self.space.l1_norm(f);
        if l1 == 0.0 {
            return Ok(InequalityReport::trivial("indeterminacy_implicit", "f = 0").at(t));
        }
        let w1 = self.w1_parts(f)?;
        let (c, cap) = (self.c(t, s)?, self.cap_c(t, s)?);
        let per = self.per(&Subset::positive_set(f));
        let rhs = c * w1 + 2.0 * (cap * self.space.linf_norm(f) * l1 * per).sqrt();
        let r = InequalityReport::new("indeterminacy_implicit", l1, rhs).at(t).param("w1", w1).param("per", per);
        self.control_note(r, t, s)
    }

    /// `W₁(f⁺𝔪, f⁻𝔪) ≥ C (‖f‖_{L¹} / (‖f‖_∞ Per({f > 0})))^{b/(1-b)} ‖f‖_{L¹}`
    /// with `C = (1 - θ^{(1-b)/2} √(2M̃h₁)) θ^b (h₁/2)^{b/(1-b)} / M`,
    /// `θ = min{1, (2√(2M̃h₁))^{-2/(1-b)}}` and `t = θ R^{1/(b-1)}`, `R = 2‖f‖_∞ Per / (h₁ ‖f‖_{L¹})`.
    pub fn check_indeterminacy_explicit(&self, f: &Density, control: &ControlModel) -> Result<InequalityReport> {
        self.require_mean_zero(f)?;
        let l1 = self.space.l1_norm(f);
        if l1 == 0.0 {
            return Ok(InequalityReport::trivial("indeterminacy_explicit", "f = 0"));
        }
        let (m, b) = control.unit_interval_power()?;
        let mt = m / (1.0 - b);
        let h1 = self.h1.value;
        let linf = self.space.linf_norm(f);
        let per = self.per(&Subset::positive_set(f));
        let k = (2.0 * mt * h1).sqrt();
        let theta = (2.0 * k).powf(-2.0 / (1.0 - b)).min(1.0);
        let residual = 1.0 - theta.powf(0.5 * (1.0 - b)) * k;
        let constant = residual * theta.powf(b) * (0.5 * h1).powf(b / (1.0 - b)) / m;
        let ratio = 2.0 * linf * per / (h1 * l1);
        let t = theta * ratio.powf(1.0 / (b - 1.0));
        let lhs = constant * (l1 / (linf * per)).powf(b / (1.0 - b)) * l1;
        let w1 = self.w1_parts(f)?;
        let r = InequalityReport::new("indeterminacy_explicit", lhs, w1)
            .at(t)
            .param("M", m)
            .param("b", b)
            .param("M_tilde", mt)
            .param("h1", h1)
            .param("theta", theta)
            .param("residual_factor", residual)
            .param("constant", constant)
            .param("ratio", ratio);
        Ok(self.h1_note(r))
    }

    fn eigenpair(&self, k: usize) -> Result<(f64, Density)> {
        if k == 0 || k >= self.space.len() {
            return Err(Error::InvalidArgument(format!("eigen index {k} must lie in 1..{}", self.space.len())));
        }
        let lambda = self.spectrum.eigenvalues[k];
        if lambda <= 0.0 {
            return Err(Error::InvalidArgument("eigenvalue must be positive".into()));
        }
        Ok((lambda, self.heat.eigenvector(k)))
    }

    fn eigen_note(&self, r: InequalityReport, k: usize) -> InequalityReport {
        let mult = self.spectrum.multiplicities[k];
        let r = r.param("lambda", self.spectrum.eigenvalues[k]).param("index", k as f64);
        if mult > 1 {
            r.param("multiplicity", mult as f64)
        } else {
            r
        }
    }

    /// `‖H_t f_λ‖_{L¹} = e^{-λt} ‖f_λ‖_{L¹}` up to round-off.
    fn heated_eigen_residual(&self, t: f64, lambda: f64, f: &Density) -> Result<f64> {
        let l1 = self.space.l1_norm(f);
        let res = (self.space.l1_norm(&self.heat.apply(t, f)?) - (-lambda * t).exp() * l1).abs();
        if res > 1e-10 * (1.0 + l1) {
            return Err(Error::InvalidArgument(format!("heated eigenfunction identity off by {res:e}")));
        }
        Ok(res)
    }

    /// `Per({f_λ > 0}) ‖f_λ‖_∞ ≥ (1 - e^{-λt})² / (4C(t)) ‖f_λ‖_{L¹}` and
    /// `W₁(f_λ⁺𝔪, f_λ⁻𝔪) ≥ e^{-λt} / c(t) ‖f_λ‖_{L¹}` for the `k`-th eigenfunction.
    pub fn check_eigen_implicit(&self, k: usize, t: f64, s: Smoothing) -> Result<Vec<InequalityReport>> {
        let (lambda, f) = self.eigenpair(k)?;
        self.heated_eigen_residual(t, lambda, &f)?;
        let l1 = self.space.l1_norm(&f);
        let (c, cap) = (self.c(t, s)?, self.cap_c(t, s)?);
        let e = (-lambda * t).exp();
        let per = self.per(&Subset::positive_set(&f));
        let nodal = InequalityReport::new("eigen_nodal_implicit", (1.0 - e).powi(2) / (4.0 * cap) * l1, per * self.space.linf_norm(&f))
            .at(t)
            .param("C", cap);
        let w1 = self.w1_parts(&f)?;
        let transport = InequalityReport::new("eigen_w1_implicit", e / c * l1, w1).at(t).param("c", c);
        Ok(vec![self.eigen_note(nodal, k), self.eigen_note(self.control_note(transport, t, s)?, k)])
    }

    /// `Per({f_λ > 0}) ≥ sup_t e^{-λt} (1 - e^{-λt})² / (4 θ(t) C(t))` over the grid.
    pub fn check_eigen_ultracontractive(&self, k: usize) -> Result<InequalityReport> {
        let (lambda, f) = self.eigenpair(k)?;
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &t) in self.grid().iter().enumerate() {
            let e = (-lambda * t).exp();
            let v = e * (1.0 - e).powi(2) / (4.0 * self.profile.theta[i] * self.profile.primitive[i]);
            if v > best.0 {
                best = (v, i);
            }
        }
        let per = self.per(&Subset::positive_set(&f));
        let r = InequalityReport::new("eigen_nodal_ultracontractive", best.0, per).at(self.grid()[best.1]);
        Ok(self.eigen_note(r, k))
    }

    /// Nodal bound `Per({f_λ > 0}) ≥ (1 - e^{-λ̃})² / (4M̃λ̃^{1-b}) λ^{1-b} ‖f_λ‖_{L¹}/‖f_λ‖_∞`
    /// and transport bound `W₁ ≥ e^{-λ̃}λ̃^b/M λ^{-b} ‖f_λ‖_{L¹}`, both at `t = λ̃/λ`.
    pub fn check_eigen_explicit(&self, k: usize, control: &ControlModel, lambda_tilde: f64) -> Result<Vec<InequalityReport>> {
        let (lambda, f) = self.eigenpair(k)?;
        if !(lambda_tilde > 0.0 && lambda_tilde <= lambda * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!("need 0 < lambda_tilde <= lambda, got {lambda_tilde} > {lambda}")));
        }
        let (m, b) = control.unit_interval_power()?;
        let mt = m / (1.0 - b);
        let t = (lambda_tilde / lambda).min(1.0);
        let l1 = self.space.l1_norm(&f);
        let linf = self.space.linf_norm(&f);
        let per = self.per(&Subset::positive_set(&f));
        let c_nodal = (1.0 - (-lambda_tilde).exp()).powi(2) / (4.0 * mt * lambda_tilde.powf(1.0 - b));
        let nodal = InequalityReport::new("eigen_nodal_explicit", c_nodal * lambda.powf(1.0 - b) * l1 / linf, per)
            .at(t)
            .param("M", m)
            .param("b", b)
            .param("lambda_tilde", lambda_tilde)
            .param("constant", c_nodal);
        let c_stein = (-lambda_tilde).exp() * lambda_tilde.powf(b) / m;
        let w1 = self.w1_parts(&f)?;
        let stein = InequalityReport::new("eigen_w1_explicit", c_stein * lambda.powf(-b) * l1, w1)
            .at(t)
            .param("M", m)
            .param("b", b)
            .param("lambda_tilde", lambda_tilde)
            .param("constant", c_stein);
        Ok(vec![self.eigen_note(nodal, k), self.eigen_note(stein, k)])
    }

    /// `sup_t (1 - e^{-λ₁t}) / C(t) ≤ h₁` over the grid.
    pub fn check_buser_implicit(&self, s: Smoothing) -> Result<InequalityReport> {
        let l1 = self.spectrum.lambda1;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &t in self.grid() {
            let v = -(-l1 * t).exp_m1() / self.cap_c(t, s)?;
            if v > best.0 {
                best = (v, t);
            }
        }
        let r = InequalityReport::new("buser_implicit", best.0, self.h1.value).at(best.1).param("lambda1", l1);
        Ok(self.h1_note(r))
    }

    /// `λ₁ ≤ max{C₁ h₁, C₂ h₁^{1/(1-b)}}` with `C₁ = M̃/(1 - e^{-1})`, `C₂ = C₁^{1/(1-b)}`.
    pub fn check_buser_explicit(&self, control: &ControlModel) -> Result<InequalityReport> {
        let (m, b) = control.unit_interval_power()?;
        let mt = m / (1.0 - b);
        let h1 = self.h1.value;
        let c1 = mt / (1.0 - 1.0 / E);
        let c2 = c1.powf(1.0 / (1.0 - b));
        let lambda1 = self.spectrum.lambda1;
        let rhs = (c1 * h1).max(c2 * h1.powf(1.0 / (1.0 - b)));
        let r = InequalityReport::new("buser_explicit", lambda1, rhs)
            .param("M", m)
            .param("b", b)
            .param("C1", c1)
            .param("C2", c2)
            .param("h1", h1);
        Ok(self.h1_note(r))
    }

    /// The proof branch: `h₁ ≥ (1 - e^{-1})/M̃ λ₁^{1-b}` at `t = 1/λ₁` when
    /// `λ₁ ≥ 1`, otherwise `h₁ ≥ (1 - e^{-λ₁})/M̃` at `t = 1`.
    pub fn check_buser_branch(&self, control: &ControlModel) -> Result<InequalityReport> {
        let (m, b) = control.unit_interval_power()?;
        let mt = m / (1.0 - b);
        let lambda1 = self.spectrum.lambda1;
        let (lhs, t) = if lambda1 >= 1.0 {
            ((1.0 - 1.0 / E) / mt * lambda1.powf(1.0 - b), 1.0 / lambda1)
        } else {
            (-(-lambda1).exp_m1() / mt, 1.0)
        };
        let r = InequalityReport::new("buser_explicit_branch", lhs, self.h1.value)
            .at(t)
            .param("M_tilde", mt)
            .param("b", b)
            .param("lambda1", lambda1)
            .param("large_gap_branch", if lambda1 >= 1.0 { 1.0 } else { 0.0 });
        Ok(self.h1_note(r))
    }

    /// The infinite-mass statements for `h₀` and `λ₀` reduce to `0 ≤ 0` on a finite space.
    pub fn check_buser_h0(&self) -> InequalityReport {
        let mut r = InequalityReport::trivial("buser_h0", "finite total mass: h0 = lambda0 = 0");
        r.params.insert("h0".into(), spectral::h0(&self.space).value);
        r.params.insert("lambda0".into(), self.spectrum.lambda0);
        r
    }

    /// `‖f‖_{L¹} ≤ c(t) W₁(f⁺𝔪, f⁻𝔪) + C(t) TV(f)` for mean-zero `f`.
    pub fn check_transport_sobolev_implicit(&self, t: f64, f: &Density, s: Smoothing) -> Result<InequalityReport> {
        self.require_mean_zero(f)?;
        let l1 = self.space.l1_norm(f);
        if l1 == 0.0 {
            return Ok(InequalityReport::trivial("transport_sobolev_implicit", "f = 0").at(t));
        }
        let w1 = self.w1_parts(f)?;
        let (c, cap, tv) = (self.c(t, s)?, self.cap_c(t, s)?, self.tv(f));
        let r = InequalityReport::new("transport_sobolev_implicit", l1, c * w1 + cap * tv).at(t).param("w1", w1).param("tv", tv);
        self.control_note(r, t, s)
    }

    /// Optimal time `W₁(f⁺𝔪, f⁻𝔪) / TV(f)` of the explicit transport–Sobolev bound.
    pub fn transport_sobolev_time(&self, f: &Density) -> Result<Option<f64>> {
        self.require_mean_zero(f)?;
        let tv = self.tv(f);
        if self.space.l1_norm(f) == 0.0 || tv == 0.0 {
            return Ok(None);
        }
        Ok(Some(self.w1_parts(f)? / tv))
    }

    /// `‖f‖_{L¹} ≤ (M + M̃) W₁^{1-b} TV(f)^b`; the control must hold up to `t = W₁/TV`.
    pub fn check_transport_sobolev_explicit(&self, f: &Density, control: &ControlModel) -> Result<InequalityReport> {
        let Some(t) = self.transport_sobolev_time(f)? else {
            return Ok(InequalityReport::trivial("transport_sobolev_explicit", "f = 0"));
        };
        let crate::controls::ControlKind::Power { m, b } = control.kind else {
            return Err(Error::InvalidArgument("explicit bounds need a power control".into()));
        };
        if !control.horizon().contains(t) {
            return Err(Error::Time { t, requirement: "inside the control horizon" });
        }
        let mt = m / (1.0 - b);
        let w1 = self.w1_parts(f)?;
        let tv = self.tv(f);
        let rhs = (m + mt) * w1.powf(1.0 - b) * tv.powf(b);
        let r = InequalityReport::new("transport_sobolev_explicit", self.space.l1_norm(f), rhs)
            .at(t)
            .param("M", m)
            .param("b", b)
            .param("w1", w1)
            .param("tv", tv);
        self.control_note(r, t, Smoothing::Control(control))
    }
}
