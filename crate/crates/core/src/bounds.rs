//! Lower bounds of the outage threshold.
//!
//! For `beta` non-central chi-squared and a target outage `epsilon`, the
//! Chernoff bound `P(beta <= t) <= inf_{nu>0} s(nu, t)` with
//!
//! ```text
//! s(nu, t) = exp(nu t - nu M^2/(1+2 sigma^2 nu)) / (1+2 sigma^2 nu)^(K/2)
//! ```
//!
//! yields a lower bound `beta_cher` of the true threshold by solving
//! `inf_nu s(nu, beta_cher) = epsilon`. The infimum is attained at the
//! unique stationary point `nu_star`, and the solution lies in
//! `(0, M^2 + K sigma^2)`, so a sign-driven bisection finds it. All
//! comparisons run in log domain: for epsilon down to 1e-9 and large
//! `M^2/sigma^2` the linear-domain `s` underflows.
//!
//! The polynomial bound keeps the first term of the CDF's series expansion.
//! It is a true bound in the central case but can exceed the exact
//! threshold once `M^2 > 0`.

use crate::error::{Error, Result};
use crate::ncx2::{check_epsilon, NCX2Params};
use crate::special::ln_gamma;

/// How a threshold estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cher,
    Poly,
    Exact,
    AtyFirst,
    AtyCloser,
    SankaranZ1,
    SankaranZ2,
    Hybrid,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Cher => "cher",
            Method::Poly => "poly",
            Method::Exact => "exact",
            Method::AtyFirst => "aty_first",
            Method::AtyCloser => "aty_closer",
            Method::SankaranZ1 => "sankaran_z1",
            Method::SankaranZ2 => "sankaran_z2",
            Method::Hybrid => "hybrid",
        }
    }

    pub const ALL: [Method; 8] = [
        Method::Cher,
        Method::Poly,
        Method::Exact,
        Method::AtyFirst,
        Method::AtyCloser,
        Method::SankaranZ1,
        Method::SankaranZ2,
        Method::Hybrid,
    ];
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cher" => Ok(Method::Cher),
            "poly" => Ok(Method::Poly),
            "exact" => Ok(Method::Exact),
            "aty_first" => Ok(Method::AtyFirst),
            "aty_closer" => Ok(Method::AtyCloser),
            "sankaran_z1" => Ok(Method::SankaranZ1),
            "sankaran_z2" => Ok(Method::SankaranZ2),
            "hybrid" => Ok(Method::Hybrid),
            other => Err(Error::Domain(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Qualifier attached to a threshold estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdFlag {
    /// The search interval was below the bisection resolution; value is 0.
    DegenerateInterval,
    /// A Gaussianizing approximation produced a negative raw threshold;
    /// value was clamped to 0.
    ClampedNegative,
    /// The channel had no innovation (sigma_omega^2 = 0); the gain is
    /// deterministic and the value is the gain itself.
    DeterministicGain,
}

impl ThresholdFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThresholdFlag::DegenerateInterval => "degenerate_interval",
            ThresholdFlag::ClampedNegative => "clamped_negative",
            ThresholdFlag::DeterministicGain => "deterministic_gain",
        }
    }
}

/// A computed threshold estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub value: f64,
    pub method: Method,
    /// `F(value)`, filled on demand via [`ThresholdResult::with_achieved_cdf`].
    pub achieved_cdf: Option<f64>,
    pub iterations: u32,
    pub flag: Option<ThresholdFlag>,
}

impl ThresholdResult {
    pub fn with_achieved_cdf(mut self, params: &NCX2Params) -> Result<Self> {
        self.achieved_cdf = Some(params.cdf(self.value)?);
        Ok(self)
    }
}

/// Bisection tolerance, absolute or relative to the search interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaBeta {
    Absolute(f64),
    Relative(f64),
}

impl Default for DeltaBeta {
    fn default() -> Self {
        DeltaBeta::Relative(1e-10)
    }
}

impl DeltaBeta {
    /// Concrete tolerance for a search interval of the given width.
    pub fn resolve(&self, interval: f64) -> Result<f64> {
        let v = match self {
            DeltaBeta::Absolute(d) => *d,
            DeltaBeta::Relative(r) => r * interval,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("delta_beta must be positive, got {v}")));
        }
        Ok(v)
    }
}

impl std::str::FromStr for DeltaBeta {
    type Err = Error;

    /// Accepts `abs:<v>`, `rel:<v>`, or a bare number (absolute).
    fn from_str(s: &str) -> Result<Self> {
        let (kind, num) = match s.split_once(':') {
            Some((k, n)) => (k, n),
            None => ("abs", s),
        };
        let v: f64 = num
            .parse()
            .map_err(|_| Error::Domain(format!("invalid delta_beta value '{s}'")))?;
        match kind {
            "abs" => Ok(DeltaBeta::Absolute(v)),
            "rel" => Ok(DeltaBeta::Relative(v)),
            other => Err(Error::Domain(format!(
                "delta_beta mode must be 'abs' or 'rel', got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for DeltaBeta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeltaBeta::Absolute(v) => write!(f, "abs:{v}"),
            DeltaBeta::Relative(v) => write!(f, "rel:{v}"),
        }
    }
}

/// ln s(nu, beta) for nu > 0, beta > 0.
pub fn chernoff_s_log(params: &NCX2Params, nu: f64, beta: f64) -> f64 {
    debug_assert!(nu > 0.0 && beta > 0.0);
    let t = 2.0 * params.sigma2() * nu;
    nu * beta - nu * params.m2() / (1.0 + t) - 0.5 * params.k() as f64 * t.ln_1p()
}

/// The unique stationary point of `nu -> s(nu, beta)` for
/// `beta` in `(0, M^2 + K sigma^2)`.
pub fn nu_star(params: &NCX2Params, beta: f64) -> Result<f64> {
    let mean = params.mean();
    if !(beta > 0.0 && beta < mean) {
        return Err(Error::Domain(format!(
            "nu_star requires beta in (0, {mean}), got {beta}"
        )));
    }
    let ks = params.k() as f64 * params.sigma2();
    let disc = (ks * ks + 4.0 * beta * params.m2()).sqrt();
    Ok((ks + disc) / (4.0 * params.sigma2() * beta) - 1.0 / (2.0 * params.sigma2()))
}

/// ln inf_{nu>0} s(nu, beta), extended by its limits: -inf at beta <= 0 and
/// 0 (s -> 1) at beta >= mean.
pub fn chernoff_inf_log(params: &NCX2Params, beta: f64) -> f64 {
    if beta <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if beta >= params.mean() {
        return 0.0;
    }
    match nu_star(params, beta) {
        // rounding can push nu_star to the nu <= 0 boundary next to the mean
        Ok(nu) if nu > 0.0 => chernoff_s_log(params, nu, beta),
        _ => 0.0,
    }
}

/// Exact bisection count for a search interval and tolerance.
pub fn bisection_iterations(interval: f64, delta: f64) -> u32 {
    if interval <= delta {
        return 0;
    }
    (interval / delta).log2().ceil() as u32
}

fn line_search(ln_eps: f64, upper: f64, n: u32, inf_log: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut lo = 0.0_f64;
    let mut up = upper;
    for _ in 0..n {
        let mid = 0.5 * (lo + up);
        // ties count as "not exceeding": shrink the upper bracket so the
        // returned lower end stays a valid bound
        if inf_log(mid) < ln_eps {
            lo = mid;
        } else {
            up = mid;
        }
    }
    (lo, up)
}

/// Chernoff lower bound of the outage threshold by sign-driven bisection
/// over `(0, M^2 + K sigma^2)`.
pub fn cher_lb(params: &NCX2Params, epsilon: f64, delta_beta: DeltaBeta) -> Result<ThresholdResult> {
    let (lo, _, iterations, flag) = cher_lb_bracket(params, epsilon, delta_beta)?;
    Ok(ThresholdResult {
        value: lo,
        method: Method::Cher,
        achieved_cdf: None,
        iterations,
        flag,
    })
}

/// As [`cher_lb`], exposing the exit bracket `(beta_low, beta_up)` for
/// invariant checks: on exit `s(nu_star, beta_low) <= eps <= s(nu_star, beta_up)`.
pub fn cher_lb_bracket(
    params: &NCX2Params,
    epsilon: f64,
    delta_beta: DeltaBeta,
) -> Result<(f64, f64, u32, Option<ThresholdFlag>)> {
    check_epsilon(epsilon)?;
    let mean = params.mean();
    let delta = delta_beta.resolve(mean)?;
    if mean <= delta {
        // interval below resolution
        return Ok((0.0, mean, 0, Some(ThresholdFlag::DegenerateInterval)));
    }
    let n = bisection_iterations(mean, delta);
    let (lo, up) = line_search(epsilon.ln(), mean, n, |b| chernoff_inf_log(params, b));
    Ok((lo, up, n, None))
}

/// Central-case (`M^2 = 0`) Chernoff bound, using the reduced forms
/// `s(nu, b) = e^(nu b)/(1+2 sigma^2 nu)^(K/2)`, `nu_star = K/(2b) - 1/(2 sigma^2)`.
pub fn cher_lb_central(
    k: u32,
    sigma2: f64,
    epsilon: f64,
    delta_beta: DeltaBeta,
) -> Result<ThresholdResult> {
    NCX2Params::new(k, sigma2, 0.0)?; // validates k, sigma2
    check_epsilon(epsilon)?;
    let kf = k as f64;
    let mean = kf * sigma2;
    let delta = delta_beta.resolve(mean)?;
    if mean <= delta {
        return Ok(ThresholdResult {
            value: 0.0,
            method: Method::Cher,
            achieved_cdf: None,
            iterations: 0,
            flag: Some(ThresholdFlag::DegenerateInterval),
        });
    }
    let n = bisection_iterations(mean, delta);
    let inf_log = move |beta: f64| -> f64 {
        if beta <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let nu = kf / (2.0 * beta) - 1.0 / (2.0 * sigma2);
        if nu <= 0.0 {
            return 0.0;
        }
        nu * beta - 0.5 * kf * (2.0 * sigma2 * nu).ln_1p()
    };
    let (lo, _) = line_search(epsilon.ln(), mean, n, inf_log);
    Ok(ThresholdResult {
        value: lo,
        method: Method::Cher,
        achieved_cdf: None,
        iterations: n,
        flag: None,
    })
}

/// Polynomial lower bound: first term of the CDF's series expansion,
/// `2 sigma^2 (eps Gamma(K/2+1))^(2/K) exp(M^2/(K sigma^2))`. A valid bound
/// for the central case; may exceed the true threshold when `M^2 > 0`.
pub fn poly_lb(params: &NCX2Params, epsilon: f64) -> Result<ThresholdResult> {
    check_epsilon(epsilon)?;
    let kf = params.k() as f64;
    let ln_val = (2.0 / kf) * (epsilon.ln() + ln_gamma(0.5 * kf + 1.0))
        + params.m2() / (kf * params.sigma2());
    Ok(ThresholdResult {
        value: 2.0 * params.sigma2() * ln_val.exp(),
        method: Method::Poly,
        achieved_cdf: None,
        iterations: 0,
        flag: None,
    })
}
