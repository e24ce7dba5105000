use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gibbs::{covariance_divergence, gibbs_drift_with};
use super::{
    covariance, fd_diffusion_jacobian, fd_drift_jacobian, norm_sq, Diffusion, JacobianSupport, Lyapunov,
    ModelMetadata, Potential, PowerLyapunov, SigmaField,
};
use crate::error::{Error, Result};

/// Centered Ornstein–Uhlenbeck process `dX = −αX dt + σ dW` in `R^d`.
#[derive(Clone, Debug)]
pub struct Ou {
    pub alpha: f64,
    pub sigma: f64,
    pub d: usize,
}

impl Ou {
    pub fn new(alpha: f64, sigma: f64, d: usize) -> Result<Self> {
        if !(alpha > 0.0 && sigma > 0.0 && d >= 1) {
            return Err(Error::invalid(format!("ou: need alpha > 0, sigma > 0, d >= 1 (got {alpha}, {sigma}, {d})")));
        }
        Ok(Ou { alpha, sigma, d })
    }

    /// Variance of the invariant law `N(0, σ²/(2α) I)`.
    pub fn invariant_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.alpha)
    }
}

impl Diffusion for Ou {
    fn dim(&self) -> usize {
        self.d
    }
    fn noise_dim(&self) -> usize {
        self.d
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = -self.alpha * xi;
        }
    }
    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        identity_scaled(self.d, self.sigma, out);
    }
    fn jacobians(&self) -> JacobianSupport {
        JacobianSupport::Analytic
    }
    fn drift_jacobian(&self, _x: &[f64], out: &mut [f64]) {
        identity_scaled(self.d, -self.alpha, out);
    }
    fn diffusion_jacobian(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn lyapunov(&self) -> Option<&dyn Lyapunov> {
        Some(&PowerLyapunov::QUADRATIC)
    }
    fn metadata(&self) -> ModelMetadata {
        let two_alpha = 2.0 * self.alpha;
        ModelMetadata {
            name: format!("ou(alpha={}, sigma={}, d={})", self.alpha, self.sigma, self.d),
            contraction: Some(self.alpha),
            rho: Some(self.alpha),
            sigma0_sq: Some(self.sigma * self.sigma),
            // (∇V|b) = −2α|x|² = 2α − 2αV
            mean_reversion: Some((two_alpha, two_alpha)),
            additive: true,
        }
    }
}

/// `dX = −(d+κ−1) X dt + √(1+|X|²) dW`, whose invariant law is
/// `ν_κ ∝ (1+|x|²)^{−(d+κ)}`.
#[derive(Clone, Debug)]
pub struct HeavyTail {
    pub d: usize,
    pub kappa: f64,
}

impl HeavyTail {
    pub fn new(d: usize, kappa: f64) -> Result<Self> {
        if !(d >= 1 && kappa > 0.0) {
            return Err(Error::invalid(format!("heavytail: need d >= 1, kappa > 0 (got {d}, {kappa})")));
        }
        Ok(HeavyTail { d, kappa })
    }

    pub fn reversion(&self) -> f64 {
        self.d as f64 + self.kappa - 1.0
    }

    /// Upper bound of the dissipativity ratio, `−(d+κ−1) + d/2`.
    pub fn dissipativity_bound(&self) -> f64 {
        -self.reversion() + self.d as f64 / 2.0
    }
}

impl Diffusion for HeavyTail {
    fn dim(&self) -> usize {
        self.d
    }
    fn noise_dim(&self) -> usize {
        self.d
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        let c = self.reversion();
        for (o, xi) in out.iter_mut().zip(x) {
            *o = -c * xi;
        }
    }
    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        identity_scaled(self.d, (1.0 + norm_sq(x)).sqrt(), out);
    }
    fn jacobians(&self) -> JacobianSupport {
        JacobianSupport::Analytic
    }
    fn drift_jacobian(&self, _x: &[f64], out: &mut [f64]) {
        identity_scaled(self.d, -self.reversion(), out);
    }
    fn diffusion_jacobian(&self, x: &[f64], out: &mut [f64]) {
        RadialSqrtField { d: self.d }.sigma_jacobian(x, out);
    }
    fn lyapunov(&self) -> Option<&dyn Lyapunov> {
        Some(&PowerLyapunov::QUADRATIC)
    }
    fn metadata(&self) -> ModelMetadata {
        let bound = self.dissipativity_bound();
        let rate = (bound < 0.0).then_some(-bound);
        let c = 2.0 * self.reversion();
        ModelMetadata {
            name: format!("heavytail(d={}, kappa={})", self.d, self.kappa),
            contraction: rate,
            rho: rate,
            sigma0_sq: Some(1.0),
            mean_reversion: Some((c, c)),
            additive: false,
        }
    }
}

/// `V(x) = (d+κ) log(1+|x|²) + 1`.
#[derive(Clone, Debug)]
pub struct HeavyTailPotential {
    pub d: usize,
    pub kappa: f64,
}

impl Potential for HeavyTailPotential {
    fn dim(&self) -> usize {
        self.d
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let c = 2.0 * (self.d as f64 + self.kappa) / (1.0 + norm_sq(x));
        for (o, xi) in out.iter_mut().zip(x) {
            *o = c * xi;
        }
    }
    fn value(&self, x: &[f64]) -> Option<f64> {
        Some((self.d as f64 + self.kappa) * (1.0 + norm_sq(x)).ln() + 1.0)
    }
}

/// `σ(x) = √(1+|x|²) I_d`.
#[derive(Clone, Debug)]
pub struct RadialSqrtField {
    pub d: usize,
}

impl SigmaField for RadialSqrtField {
    fn dim(&self) -> usize {
        self.d
    }
    fn noise_dim(&self) -> usize {
        self.d
    }
    fn sigma(&self, x: &[f64], out: &mut [f64]) {
        identity_scaled(self.d, (1.0 + norm_sq(x)).sqrt(), out);
    }
    fn covariance_jacobian(&self, x: &[f64], out: &mut [f64]) -> bool {
        // (σσ*)_ij = δ_ij (1+|x|²)
        let d = self.d;
        out.fill(0.0);
        for i in 0..d {
            for k in 0..d {
                out[(i * d + i) * d + k] = 2.0 * x[k];
            }
        }
        true
    }
    fn sigma_jacobian(&self, x: &[f64], out: &mut [f64]) -> bool {
        let d = self.d;
        let s = (1.0 + norm_sq(x)).sqrt();
        out.fill(0.0);
        for i in 0..d {
            for k in 0..d {
                out[(i * d + i) * d + k] = x[k] / s;
            }
        }
        true
    }
}

/// Additive Langevin dynamics `dX = −σ²∇V(X) dt + √2 σ dW` for `ν ∝ e^{−V}`.
#[derive(Clone)]
pub struct GradientLangevin {
    pub potential: Arc<dyn Potential>,
    pub sigma: f64,
}

impl Diffusion for GradientLangevin {
    fn dim(&self) -> usize {
        self.potential.dim()
    }
    fn noise_dim(&self) -> usize {
        self.potential.dim()
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        self.potential.gradient(x, out);
        let s2 = self.sigma * self.sigma;
        for o in out.iter_mut() {
            *o *= -s2;
        }
    }
    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        identity_scaled(self.dim(), std::f64::consts::SQRT_2 * self.sigma, out);
    }
    fn diffusion_jacobian(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn metadata(&self) -> ModelMetadata {
        ModelMetadata {
            name: "langevin".into(),
            sigma0_sq: Some(2.0 * self.sigma * self.sigma),
            additive: true,
            ..Default::default()
        }
    }
}

/// Multiplicative-noise sampler for `ν ∝ e^{−V}` with the drift given by
/// [`gibbs_drift`](super::gibbs_drift).
#[derive(Clone)]
pub struct GibbsMultiplicative {
    pub potential: Arc<dyn Potential>,
    pub field: Arc<dyn SigmaField>,
    /// Use finite differences for `∂(σσ*)` even when the field is analytic.
    pub force_fd: bool,
}

impl GibbsMultiplicative {
    pub fn new(potential: Arc<dyn Potential>, field: Arc<dyn SigmaField>) -> Result<Self> {
        if potential.dim() != field.dim() {
            return Err(Error::DimensionMismatch {
                expected: field.dim(),
                got: potential.dim(),
                context: "potential vs sigma field",
            });
        }
        Ok(GibbsMultiplicative { potential, field, force_fd: false })
    }

    /// `[Σ_j ∂_j (σσ*)_ij]_i` at `x`.
    pub fn covariance_divergence(&self, x: &[f64], out: &mut [f64]) {
        covariance_divergence(self.field.as_ref(), x, self.force_fd, out)
    }
}

impl Diffusion for GibbsMultiplicative {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn noise_dim(&self) -> usize {
        self.field.noise_dim()
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        // dimensions are checked at construction
        gibbs_drift_with(self.potential.as_ref(), self.field.as_ref(), x, self.force_fd, out)
            .expect("dimensions validated in GibbsMultiplicative::new");
    }
    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        self.field.sigma(x, out);
    }
    fn diffusion_jacobian(&self, x: &[f64], out: &mut [f64]) {
        if !self.field.sigma_jacobian(x, out) {
            fd_diffusion_jacobian(self, x, out);
        }
    }
    fn metadata(&self) -> ModelMetadata {
        ModelMetadata { name: "gibbs-multiplicative".into(), ..Default::default() }
    }
}

type VecFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A model assembled from closures.
#[derive(Clone)]
pub struct FnModel {
    d: usize,
    q: usize,
    drift: Arc<VecFn>,
    diffusion: Arc<VecFn>,
    drift_jac: Option<Arc<VecFn>>,
    diffusion_jac: Option<Arc<VecFn>>,
    support: JacobianSupport,
    lyapunov: Option<Arc<dyn Lyapunov>>,
    metadata: ModelMetadata,
}

impl FnModel {
    pub fn new(
        d: usize,
        q: usize,
        drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        diffusion: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        FnModel {
            d,
            q,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            drift_jac: None,
            diffusion_jac: None,
            support: JacobianSupport::FiniteDifference,
            lyapunov: None,
            metadata: ModelMetadata::default(),
        }
    }

    /// One-dimensional model from scalar drift and diffusion functions.
    pub fn scalar(
        drift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        diffusion: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(1, 1, move |x, o| o[0] = drift(x[0]), move |x, o| o[0] = diffusion(x[0]))
    }

    pub fn with_jacobians(
        mut self,
        drift_jac: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        diffusion_jac: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.drift_jac = Some(Arc::new(drift_jac));
        self.diffusion_jac = Some(Arc::new(diffusion_jac));
        self.support = JacobianSupport::Analytic;
        self
    }

    /// Declares that no derivative information is available.
    pub fn without_jacobians(mut self) -> Self {
        self.drift_jac = None;
        self.diffusion_jac = None;
        self.support = JacobianSupport::None;
        self
    }

    pub fn with_lyapunov(mut self, v: impl Lyapunov + 'static) -> Self {
        self.lyapunov = Some(Arc::new(v));
        self
    }

    pub fn with_metadata(mut self, metadata: ModelMetadata) -> Self {
        self.metadata = metadata;
        self
    }
}

impl Diffusion for FnModel {
    fn dim(&self) -> usize {
        self.d
    }
    fn noise_dim(&self) -> usize {
        self.q
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        (self.drift)(x, out)
    }
    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(x, out)
    }
    fn jacobians(&self) -> JacobianSupport {
        self.support
    }
    fn drift_jacobian(&self, x: &[f64], out: &mut [f64]) {
        match &self.drift_jac {
            Some(f) => f(x, out),
            None => fd_drift_jacobian(self, x, out),
        }
    }
    fn diffusion_jacobian(&self, x: &[f64], out: &mut [f64]) {
        match &self.diffusion_jac {
            Some(f) => f(x, out),
            None => fd_diffusion_jacobian(self, x, out),
        }
    }
    fn lyapunov(&self) -> Option<&dyn Lyapunov> {
        self.lyapunov.as_deref()
    }
    fn metadata(&self) -> ModelMetadata {
        self.metadata.clone()
    }
}

fn identity_scaled(d: usize, s: f64, out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..d {
        out[i * d + i] = s;
    }
}

/// A built-in model named by tag plus numeric parameters, e.g.
/// `{"builtin": "heavytail", "params": {"d": 2, "kappa": 1}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub builtin: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub const TAGS: [&'static str; 5] = ["ou", "heavytail", "multiplicative", "gibbs-heavytail", "langevin-heavytail"];

    /// Parses `tag` or `tag:key=value,key=value`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let (tag, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for kv in rest.split(',').filter(|kv| !kv.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("model parameter '{kv}': expected key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("model parameter '{k}': '{v}' is not a number")))?;
            params.insert(k.trim().to_string(), v);
        }
        Ok(ModelSpec { builtin: tag.trim().to_string(), params })
    }

    fn allowed_params(tag: &str) -> &'static [&'static str] {
        match tag {
            "ou" => &["alpha", "sigma", "d"],
            "heavytail" | "gibbs-heavytail" => &["d", "kappa"],
            "langevin-heavytail" => &["d", "kappa", "sigma"],
            "multiplicative" => &[],
            _ => &[],
        }
    }

    /// Every problem with this spec (empty when valid).
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !Self::TAGS.contains(&self.builtin.as_str()) {
            errs.push(format!("model.builtin: unknown model '{}' (expected one of {:?})", self.builtin, Self::TAGS));
            return errs;
        }
        let allowed = Self::allowed_params(&self.builtin);
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                errs.push(format!("model.params.{k}: unknown parameter for '{}' (allowed: {allowed:?})", self.builtin));
            }
        }
        let positive = |key: &str, errs: &mut Vec<String>| {
            if let Some(v) = self.params.get(key) {
                if !(v.is_finite() && *v > 0.0) {
                    errs.push(format!("model.params.{key}: must be > 0 (got {v})"));
                }
            }
        };
        for key in ["alpha", "sigma", "kappa"] {
            positive(key, &mut errs);
        }
        if let Some(d) = self.params.get("d") {
            if !(*d >= 1.0 && d.fract() == 0.0) {
                errs.push(format!("model.params.d: must be a positive integer (got {d})"));
            }
        }
        errs
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

/// Instantiates a built-in model.
pub fn build_model(spec: &ModelSpec) -> Result<Arc<dyn Diffusion>> {
    let errs = spec.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let d = spec.get("d", 1.0) as usize;
    Ok(match spec.builtin.as_str() {
        "ou" => Arc::new(Ou::new(spec.get("alpha", 1.0), spec.get("sigma", std::f64::consts::SQRT_2), d)?),
        "heavytail" => Arc::new(HeavyTail::new(d, spec.get("kappa", 1.0))?),
        "multiplicative" => Arc::new(HeavyTail::new(1, 1.0)?),
        "gibbs-heavytail" => {
            let kappa = spec.get("kappa", 1.0);
            Arc::new(GibbsMultiplicative::new(
                Arc::new(HeavyTailPotential { d, kappa }),
                Arc::new(RadialSqrtField { d }),
            )?)
        }
        "langevin-heavytail" => {
            let kappa = spec.get("kappa", 1.0);
            Arc::new(GradientLangevin { potential: Arc::new(HeavyTailPotential { d, kappa }), sigma: spec.get("sigma", 1.0) })
        }
        other => return Err(Error::invalid(format!("unknown model '{other}'"))),
    })
}

/// `σσ*(x)` of a model.
pub(crate) fn model_covariance(model: &dyn Diffusion, x: &[f64], sigma: &mut [f64], out: &mut [f64]) {
    model.diffusion(x, sigma);
    covariance(sigma, model.dim(), model.noise_dim(), out);
}
