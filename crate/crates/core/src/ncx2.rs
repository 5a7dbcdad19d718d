//! The non-central chi-squared distribution of
//!
//! ```text
//! beta = sum_{k=0}^{K-1} alpha_k^2,   alpha_k ~ N(mu_k, sigma^2),
//! ```
//!
//! parameterized by `(K, sigma^2, M^2)` with `M^2 = sum mu_k^2`. The CDF is
//! `F(x) = 1 - Q_{K/2}(M/sigma, sqrt(x)/sigma)` with `Q` the generalized
//! Marcum Q-function.
//!
//! CDF, PDF and Marcum Q are all evaluated as Poisson-weighted mixtures of
//! central chi-squared quantities, truncated once a rigorous bound on the
//! remaining tail drops below 1e-16 of the accumulated sum (and, for the
//! Q-mixture, below 1e-18 absolute). Terms are accumulated in log domain,
//! which preserves relative accuracy of lower-tail probabilities far beyond
//! linear underflow; that is the regime the threshold oracle lives in.

use crate::error::{Error, Result};
use crate::special::{ln_gamma, ln_reg_gamma_lower, ln_reg_gamma_upper};
use rand::Rng;
use rand_distr::StandardNormal;

const MAX_MIXTURE_TERMS: u32 = 200_000;
const MAX_BISECT_ITER: u32 = 20_000;
/// ln(1e-16): relative truncation level for mixture tails.
const LN_TRUNC: f64 = -36.841_361_487_904_73;
/// ln(1e-18): absolute truncation level for the Marcum Q mixture.
const LN_TRUNC_ABS: f64 = -41.446_531_673_892_82;

/// Distribution parameters `(K, sigma^2, M^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NCX2Params {
    k: u32,
    sigma2: f64,
    m2: f64,
}

impl NCX2Params {
    /// Validates `K >= 1`, `sigma2 > 0`, `m2 >= 0`.
    pub fn new(k: u32, sigma2: f64, m2: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("dof K must be at least 1".into()));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "sigma2 must be positive and finite, got {sigma2}"
            )));
        }
        if !(m2 >= 0.0) || !m2.is_finite() {
            return Err(Error::Domain(format!(
                "m2 must be non-negative and finite, got {m2}"
            )));
        }
        Ok(Self { k, sigma2, m2 })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// E(beta) = M^2 + K sigma^2.
    pub fn mean(&self) -> f64 {
        self.m2 + self.k as f64 * self.sigma2
    }

    /// Var(beta) = 2 K sigma^4 + 4 sigma^2 M^2.
    pub fn variance(&self) -> f64 {
        2.0 * self.k as f64 * self.sigma2 * self.sigma2 + 4.0 * self.sigma2 * self.m2
    }

    /// Textbook `(k, lambda)` form: `beta = sigma^2 * X`, `X ~ chi'^2_k(lambda)`,
    /// `lambda = M^2 / sigma^2`.
    pub fn standardized(&self) -> StandardizedParams {
        StandardizedParams {
            k: self.k,
            lambda: self.m2 / self.sigma2,
            scale: self.sigma2,
        }
    }

    /// ln F(x). Relative accuracy is preserved arbitrarily deep in the
    /// lower tail.
    pub fn ln_cdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Domain(format!("cdf requires x >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let nu = self.k as f64 / 2.0;
        let h = self.m2 / (2.0 * self.sigma2);
        let z = x / (2.0 * self.sigma2);

        let mut acc = LogSum::new();
        if h == 0.0 {
            return Ok(ln_reg_gamma_lower(nu, z)?.min(0.0));
        }
        let ln_h = h.ln();
        let mut lw = -h; // ln of Poisson weight e^-h h^j / j!
        for j in 0..MAX_MIXTURE_TERMS {
            let s = nu + j as f64;
            let lp = ln_reg_gamma_lower(s, z)?;
            acc.add(lw + lp);
            // Remaining tail: the weight ratio is h/(j+1) and the lower
            // incomplete gamma ratio P(s+1,z)/P(s,z) is at most min(1, z/(s+1)),
            // both decreasing in j, so the tail is geometrically dominated.
            let r = h / (j + 1) as f64 * (z / (s + 1.0)).min(1.0);
            if r < 1.0 {
                let ln_tail = lw + lp + (r / (1.0 - r)).ln();
                if ln_tail <= acc.ln_total() + LN_TRUNC {
                    return Ok(acc.ln_total().min(0.0));
                }
            }
            lw += ln_h - ((j + 1) as f64).ln();
        }
        Err(Error::Numerical(format!(
            "cdf mixture did not converge within {MAX_MIXTURE_TERMS} terms (params {self:?}, x={x})"
        )))
    }

    /// F(x) = P(beta <= x).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(self.ln_cdf(x)?.exp())
    }

    /// Density for x > 0, as the Poisson mixture of central chi-squared
    /// densities (term-for-term identical to the Bessel-I form).
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("pdf requires x > 0, got {x}")));
        }
        let h = self.m2 / (2.0 * self.sigma2);
        let y = x / self.sigma2;
        let kf = self.k as f64;

        let ln_f = |m: f64| -> f64 {
            (0.5 * m - 1.0) * y.ln() - 0.5 * y - 0.5 * m * std::f64::consts::LN_2 - ln_gamma(0.5 * m)
        };

        let mut acc = LogSum::new();
        if h == 0.0 {
            return Ok((ln_f(kf) - self.sigma2.ln()).exp());
        }
        let ln_h = h.ln();
        let mut lw = -h;
        for j in 0..MAX_MIXTURE_TERMS {
            let m = kf + 2.0 * j as f64;
            let lt = lw + ln_f(m);
            acc.add(lt);
            // f_{m+2}(y)/f_m(y) = y/m, so past the crossover the terms are
            // geometrically dominated just like the CDF mixture.
            let r = h / (j + 1) as f64 * (y / m);
            if r < 1.0 {
                let ln_tail = lt + (r / (1.0 - r)).ln();
                if ln_tail <= acc.ln_total() + LN_TRUNC {
                    return Ok((acc.ln_total() - self.sigma2.ln()).exp());
                }
            }
            lw += ln_h - ((j + 1) as f64).ln();
        }
        Err(Error::Numerical(format!(
            "pdf mixture did not converge within {MAX_MIXTURE_TERMS} terms (params {self:?}, x={x})"
        )))
    }

    /// One draw of beta. Means are allocated as `mu_0 = M`, `mu_{k>0} = 0`,
    /// which is distribution-preserving by rotational invariance.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sigma = self.sigma2.sqrt();
        let m = self.m2.sqrt();
        let g0: f64 = rng.sample(StandardNormal);
        let first = sigma * g0 + m;
        let mut acc = first * first;
        for _ in 1..self.k {
            let g: f64 = rng.sample(StandardNormal);
            let a = sigma * g;
            acc += a * a;
        }
        acc
    }

    /// The exact threshold beta_T with `F(beta_T) = epsilon`, by bisection
    /// of the CDF. This is the oracle the bounds are judged against; plain
    /// bisection is deliberate (the density vanishes at the lower tail, so
    /// Newton stalls there).
    pub fn exact_threshold(&self, epsilon: f64, tol: f64) -> Result<f64> {
        Ok(self.exact_threshold_detailed(epsilon, tol)?.0)
    }

    /// As [`exact_threshold`](Self::exact_threshold), also reporting the
    /// bisection iteration count.
    pub fn exact_threshold_detailed(&self, epsilon: f64, tol: f64) -> Result<(f64, u32)> {
        check_epsilon(epsilon)?;
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {tol}")));
        }
        // Bracket: grow the upper end geometrically until it captures the
        // epsilon-quantile.
        let mut upper = self.mean() + 10.0 * self.variance().sqrt();
        let mut grow = 0;
        while self.cdf(upper)? <= epsilon {
            upper *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::Numerical(
                    "exact_threshold bracket failed to capture the quantile".into(),
                ));
            }
        }
        let mut lo = 0.0_f64;
        let mut up = upper;
        let mut iterations = 0u32;
        while up - lo >= tol {
            let mid = 0.5 * (lo + up);
            if mid <= lo || mid >= up {
                break; // bracket at floating-point resolution
            }
            if self.cdf(mid)? < epsilon {
                lo = mid;
            } else {
                up = mid;
            }
            iterations += 1;
            if iterations > MAX_BISECT_ITER {
                return Err(Error::Numerical(
                    "exact_threshold bisection exceeded the iteration cap".into(),
                ));
            }
        }
        Ok((0.5 * (lo + up), iterations))
    }

    /// Default oracle tolerance: 1e-12 of the mean, i.e. two orders tighter
    /// than the bound search's own resolution so oracle error never pollutes
    /// bound verification.
    pub fn default_oracle_tol(&self) -> f64 {
        1e-12 * self.mean()
    }
}

/// `(k, lambda, scale)` view used by the Gaussianizing approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizedParams {
    pub k: u32,
    pub lambda: f64,
    pub scale: f64,
}

impl StandardizedParams {
    pub fn to_ncx2(&self) -> Result<NCX2Params> {
        NCX2Params::new(self.k, self.scale, self.lambda * self.scale)
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain("epsilon must lie in (0,1)".into()));
    }
    Ok(())
}

/// Generalized Marcum Q-function `Q_order(a, b)`, evaluated as the Poisson
/// mixture of upper regularized gamma terms. Absolute accuracy ~1e-16; the
/// deep lower tail should be read off [`NCX2Params::ln_cdf`] instead.
pub fn marcum_q(order: f64, a: f64, b: f64) -> Result<f64> {
    if !(order > 0.0) || !order.is_finite() {
        return Err(Error::Domain(format!("order must be positive, got {order}")));
    }
    if a < 0.0 || b < 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "marcum_q requires a >= 0 and b >= 0, got a={a}, b={b}"
        )));
    }
    if b == 0.0 {
        return Ok(1.0);
    }
    let h = 0.5 * a * a;
    let z = 0.5 * b * b;
    if h == 0.0 {
        return Ok(ln_reg_gamma_upper(order, z)?.exp());
    }
    let ln_h = h.ln();
    let mut lw = -h;
    let mut acc = LogSum::new();
    for j in 0..MAX_MIXTURE_TERMS {
        let lq = ln_reg_gamma_upper(order + j as f64, z)?;
        acc.add(lw + lq);
        // Q terms are bounded by 1, so the Poisson tail mass bounds the rest.
        let rp = h / (j + 1) as f64;
        if rp < 1.0 {
            let ln_tail = lw + (rp / (1.0 - rp)).ln();
            if ln_tail <= (acc.ln_total() + LN_TRUNC).max(LN_TRUNC_ABS) {
                return Ok(acc.ln_total().exp().min(1.0));
            }
        }
        lw += ln_h - ((j + 1) as f64).ln();
    }
    Err(Error::Numerical(format!(
        "marcum_q mixture did not converge within {MAX_MIXTURE_TERMS} terms (order={order}, a={a}, b={b})"
    )))
}

/// Streaming log-sum-exp accumulator.
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, ln_t: f64) {
        if ln_t == f64::NEG_INFINITY {
            return;
        }
        if ln_t > self.max {
            self.scaled = self.scaled * (self.max - ln_t).exp() + 1.0;
            self.max = ln_t;
        } else {
            self.scaled += (ln_t - self.max).exp();
        }
    }

    fn ln_total(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}
