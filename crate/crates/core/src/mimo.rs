//! Beamforming-gain prediction for a single-stream MIMO link under a
//! first-order Markov time-varying channel, and the Monte-Carlo outage
//! harness around it.
//!
//! The channel ages as `H_{t+tau} = rho H_t + Omega`, `rho = J0(2 pi f_d tau)`,
//! with i.i.d. complex Gaussian innovation entries of variance
//! `sigma_omega^2 = 1 - rho^2`. The transmitter forms a matched-filter
//! beam from the stale `H_t`, normalized so the predicted receive gain is
//! one (`||H_t w|| = 1`); the realized gain at transmission time is
//! `beta = ||H_{t+tau} w||^2`. Conditioned on `H_t`, `beta` is non-central
//! chi-squared with
//!
//! ```text
//! K = 2 N,   sigma^2 = sigma_omega^2 ||w||^2 / 2,   M^2 = rho^2 sum_n |h_n^T w|^2,
//! ```
//!
//! which is what lets the transmitter run the Chernoff bound as a
//! reliability-guaranteeing gain prediction and scale symbol energy by
//! `1/beta_lb`.

use crate::approx::{approx_threshold, hybrid_threshold, ApproxKind};
use crate::bounds::{cher_lb, poly_lb, DeltaBeta, Method, ThresholdFlag, ThresholdResult};
use crate::error::{Error, Result};
use crate::ncx2::NCX2Params;
use crate::special::bessel_j0;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

/// Complex channel matrix, rows = receive antennas, columns = transmit
/// antennas. Row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n_rx: usize,
    n_tx: usize,
    entries: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn new(n_rx: usize, n_tx: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n_rx == 0 || n_tx == 0 {
            return Err(Error::Domain(format!(
                "channel dimensions must be at least 1x1, got {n_rx}x{n_tx}"
            )));
        }
        if entries.len() != n_rx * n_tx {
            return Err(Error::Domain(format!(
                "expected {} entries for a {n_rx}x{n_tx} matrix, got {}",
                n_rx * n_tx,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("channel entries must be finite".into()));
        }
        Ok(Self { n_rx, n_tx, entries })
    }

    /// i.i.d. Rayleigh fading: unit-variance CN(0,1) entries
    /// (1/2 per real dimension).
    pub fn rayleigh<R: Rng + ?Sized>(n_rx: usize, n_tx: usize, rng: &mut R) -> Self {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let entries = (0..n_rx * n_tx)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        Self { n_rx, n_tx, entries }
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn get(&self, rx: usize, tx: usize) -> Complex64 {
        self.entries[rx * self.n_tx + tx]
    }

    pub fn row(&self, rx: usize) -> &[Complex64] {
        &self.entries[rx * self.n_tx..(rx + 1) * self.n_tx]
    }
}

/// First-order Markov channel model derived from carrier, velocity and lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovChannelConfig {
    carrier_hz: f64,
    velocity_mps: f64,
    lag_s: f64,
    rho: f64,
    sigma_omega2: f64,
}

impl MarkovChannelConfig {
    pub fn new(carrier_hz: f64, velocity_mps: f64, lag_s: f64) -> Result<Self> {
        if !(carrier_hz > 0.0) || !carrier_hz.is_finite() {
            return Err(Error::Domain(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        if !(velocity_mps >= 0.0) || !velocity_mps.is_finite() {
            return Err(Error::Domain(format!(
                "velocity must be non-negative, got {velocity_mps}"
            )));
        }
        if !(lag_s >= 0.0) || !lag_s.is_finite() {
            return Err(Error::Domain(format!("lag must be non-negative, got {lag_s}")));
        }
        let rho = doppler_rho(carrier_hz, velocity_mps, lag_s);
        Ok(Self {
            carrier_hz,
            velocity_mps,
            lag_s,
            rho,
            sigma_omega2: 1.0 - rho * rho,
        })
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn velocity_mps(&self) -> f64 {
        self.velocity_mps
    }

    pub fn lag_s(&self) -> f64 {
        self.lag_s
    }

    /// Correlation J0(2 pi f_d tau) between the stale and actual channel.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Innovation variance 1 - rho^2.
    pub fn sigma_omega2(&self) -> f64 {
        self.sigma_omega2
    }
}

/// Channel time-correlation coefficient `J0(2 pi f_d tau)` with
/// `f_d = v f_c / c`.
pub fn doppler_rho(carrier_hz: f64, velocity_mps: f64, lag_s: f64) -> f64 {
    let doppler_hz = velocity_mps * carrier_hz / SPEED_OF_LIGHT_MPS;
    bessel_j0(2.0 * std::f64::consts::PI * doppler_hz * lag_s)
}

/// One step of the Markov recursion: `rho H + Omega`, innovation entries
/// CN(0, sigma_omega^2) split evenly over real and imaginary parts.
pub fn evolve_channel<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    cfg: &MarkovChannelConfig,
    rng: &mut R,
) -> ChannelMatrix {
    let comp_sd = (cfg.sigma_omega2 / 2.0).sqrt();
    let entries = h
        .entries
        .iter()
        .map(|&z| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            cfg.rho * z + Complex64::new(re * comp_sd, im * comp_sd)
        })
        .collect();
    ChannelMatrix {
        n_rx: h.n_rx,
        n_tx: h.n_tx,
        entries,
    }
}

fn row_dot(row: &[Complex64], w: &[Complex64]) -> Complex64 {
    row.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// `||H w||^2`: the receive gain of beam `w` through channel `h`.
pub fn realized_gain(h: &ChannelMatrix, w: &[Complex64]) -> f64 {
    (0..h.n_rx).map(|n| row_dot(h.row(n), w).norm_sqr()).sum()
}

/// Matched-filter transmit beam `w ∝ H^H 1_N`, scaled so the predicted
/// receive gain is one: `||H w|| = 1`.
pub fn mf_beamformer(h: &ChannelMatrix) -> Result<Vec<Complex64>> {
    let mut x = vec![Complex64::new(0.0, 0.0); h.n_tx];
    for n in 0..h.n_rx {
        for (xm, &hm) in x.iter_mut().zip(h.row(n)) {
            *xm += hm.conj();
        }
    }
    let gain = realized_gain(h, &x);
    if !(gain > 0.0) || !gain.is_finite() {
        return Err(Error::DegenerateInput(
            "matched filter undefined for an all-zero channel".into(),
        ));
    }
    let inv = 1.0 / gain.sqrt();
    Ok(x.into_iter().map(|z| z * inv).collect())
}

/// Distribution of the realized gain `||H_{t+tau} w||^2` conditioned on the
/// stale channel. `params` is `None` when the channel has no innovation
/// (`sigma_omega^2 = 0`), in which case the gain is deterministic and equals
/// `m2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainModel {
    pub params: Option<NCX2Params>,
    /// `rho^2 sum_n |h_n^T w|^2`; the deterministic gain when `params` is None.
    pub m2: f64,
    pub beam: Vec<Complex64>,
    pub rho: f64,
}

impl GainModel {
    pub fn is_deterministic(&self) -> bool {
        self.params.is_none()
    }
}

/// The conditional gain distribution of beam `w` under channel aging:
/// `K = 2 N`, `sigma^2 = sigma_omega^2 ||w||^2 / 2`,
/// `M^2 = rho^2 sum |h_n^T w|^2`.
pub fn gain_model(h: &ChannelMatrix, w: &[Complex64], cfg: &MarkovChannelConfig) -> Result<GainModel> {
    if w.len() != h.n_tx {
        return Err(Error::Domain(format!(
            "beam length {} does not match {} transmit antennas",
            w.len(),
            h.n_tx
        )));
    }
    let w_norm2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    if !(w_norm2 > 0.0) || !w_norm2.is_finite() {
        return Err(Error::DegenerateInput("beamformer must be non-zero".into()));
    }
    let m2 = cfg.rho * cfg.rho * realized_gain(h, w);
    let params = if cfg.sigma_omega2 > 0.0 {
        Some(NCX2Params::new(
            2 * h.n_rx as u32,
            cfg.sigma_omega2 * w_norm2 / 2.0,
            m2,
        )?)
    } else {
        None
    };
    Ok(GainModel {
        params,
        m2,
        beam: w.to_vec(),
        rho: cfg.rho,
    })
}

/// Reliability-guaranteeing gain prediction: the Chernoff lower bound of the
/// conditional gain distribution, or the gain itself when it is
/// deterministic.
pub fn predict_gain_lb(model: &GainModel, epsilon: f64, delta_beta: DeltaBeta) -> Result<ThresholdResult> {
    match &model.params {
        Some(p) => cher_lb(p, epsilon, delta_beta),
        None => Ok(ThresholdResult {
            value: model.m2,
            method: Method::Cher,
            achieved_cdf: None,
            iterations: 0,
            flag: Some(ThresholdFlag::DeterministicGain),
        }),
    }
}

/// Symbol energy meeting an SNR target through a predicted gain:
/// `E_s = snr_target * noise_var / gain_lb`.
pub fn adapt_energy(snr_target: f64, gain_lb: f64, noise_var: f64) -> Result<f64> {
    if !(snr_target > 0.0) || !(noise_var > 0.0) {
        return Err(Error::Domain(format!(
            "snr_target and noise_var must be positive, got {snr_target}, {noise_var}"
        )));
    }
    if !(gain_lb > 0.0) {
        return Err(Error::InfeasiblePower(format!(
            "predicted gain {gain_lb} cannot meet any SNR target"
        )));
    }
    Ok(snr_target * noise_var / gain_lb)
}

/// Receiver-only maximal-ratio combining baseline under unit-variance
/// Rayleigh fading: central chi-squared with `K = 2 N`, `sigma^2 = 1/2`.
pub fn mrc_baseline_params(n_rx: u32) -> NCX2Params {
    NCX2Params::new(2 * n_rx, 0.5, 0.0).expect("valid by construction")
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let ph = failures as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (ph + z2 / (2.0 * n)) / denom;
    let half = Z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if failures == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if failures == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Dvoretzky-Kiefer-Wolfowitz envelope: with probability at least
/// `1 - alpha`, `sup_x |F_emp(x) - F(x)| <= dkw_band(n, alpha)`.
pub fn dkw_band(n: u64, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Threshold selector used per Monte-Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimMethod {
    Cher,
    Poly,
    Hybrid,
    Approx(ApproxKind),
    /// CDF-inversion oracle for the conditional gain distribution.
    Exact,
    /// Perfect knowledge of the realized gain (threshold = beta).
    Oracle,
}

impl SimMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimMethod::Cher => "cher",
            SimMethod::Poly => "poly",
            SimMethod::Hybrid => "hybrid",
            SimMethod::Approx(k) => k.as_str(),
            SimMethod::Exact => "exact",
            SimMethod::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for SimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cher" => Ok(SimMethod::Cher),
            "poly" => Ok(SimMethod::Poly),
            "hybrid" => Ok(SimMethod::Hybrid),
            "exact" => Ok(SimMethod::Exact),
            "oracle" => Ok(SimMethod::Oracle),
            other => Ok(SimMethod::Approx(other.parse::<ApproxKind>().map_err(
                |_| Error::Domain(format!("unknown simulation method '{other}'")),
            )?)),
        }
    }
}

impl std::fmt::Display for SimMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full description of one outage experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub channel: MarkovChannelConfig,
    pub epsilon: f64,
    pub method: SimMethod,
    pub trials: u64,
    pub seed: u64,
    pub delta_beta: DeltaBeta,
    pub ratio_switch: f64,
}

/// Monte-Carlo outage count with a binomial confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub failures: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci95: (f64, f64),
}

impl OutageEstimate {
    pub fn new(failures: u64, trials: u64) -> Self {
        Self {
            failures,
            trials,
            rate: failures as f64 / trials as f64,
            ci95: wilson_interval(failures, trials),
        }
    }
}

/// Aggregated output of [`run_outage_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub outage: OutageEstimate,
    /// Trials whose threshold was zero (clamped or degenerate); excluded
    /// from the inverse-threshold mean.
    pub infeasible: u64,
    /// Normalized average power consumption E(1/threshold) over feasible trials.
    pub mean_inv_threshold: f64,
    /// E(1/beta) over all trials (the perfect-knowledge power reference).
    pub mean_inv_gain: f64,
    /// Per-trial predicted thresholds, in trial order.
    pub thresholds: Vec<f64>,
    /// Per-trial realized gains, in trial order.
    pub gains: Vec<f64>,
}

/// Per-trial random stream: an independent ChaCha stream keyed by
/// (master seed, trial index), so results do not depend on worker count or
/// scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// One Monte-Carlo outage/power experiment: draw a Rayleigh channel, form
/// the matched-filter beam, predict the threshold with the configured
/// method, age the channel, and count an outage when the realized gain
/// falls below the prediction. Trials run in parallel; aggregation is
/// sequential in trial order, so results are reproducible bit-for-bit from
/// (config, seed) regardless of thread count.
pub fn run_outage_experiment(cfg: &SimConfig) -> Result<ExperimentResult> {
    if cfg.trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let per_trial: Vec<(f64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut rng = trial_rng(cfg.seed, i);
            let h = ChannelMatrix::rayleigh(cfg.n_rx, cfg.n_tx, &mut rng);
            let w = mf_beamformer(&h)?;
            let model = gain_model(&h, &w, &cfg.channel)?;
            let aged = evolve_channel(&h, &cfg.channel, &mut rng);
            let gain = realized_gain(&aged, &w);
            let threshold = match (cfg.method, &model.params) {
                (SimMethod::Oracle, _) => gain,
                (_, None) => model.m2,
                (SimMethod::Cher, Some(p)) => cher_lb(p, cfg.epsilon, cfg.delta_beta)?.value,
                (SimMethod::Poly, Some(p)) => poly_lb(p, cfg.epsilon)?.value,
                (SimMethod::Hybrid, Some(p)) => {
                    hybrid_threshold(p, cfg.epsilon, cfg.ratio_switch, cfg.delta_beta)?.value
                }
                (SimMethod::Approx(kind), Some(p)) => {
                    approx_threshold(p, cfg.epsilon, kind)?.value
                }
                (SimMethod::Exact, Some(p)) => {
                    p.exact_threshold(cfg.epsilon, p.default_oracle_tol())?
                }
            };
            Ok((threshold, gain))
        })
        .collect::<Result<_>>()?;

    let mut failures = 0u64;
    let mut infeasible = 0u64;
    let mut inv_thr_sum = 0.0;
    let mut inv_gain_sum = 0.0;
    for &(threshold, gain) in &per_trial {
        if threshold > 0.0 {
            inv_thr_sum += 1.0 / threshold;
            if gain < threshold {
                failures += 1;
            }
        } else {
            infeasible += 1;
        }
        inv_gain_sum += 1.0 / gain;
    }
    let feasible = cfg.trials - infeasible;
    let (thresholds, gains) = per_trial.into_iter().unzip();
    Ok(ExperimentResult {
        outage: OutageEstimate::new(failures, cfg.trials),
        infeasible,
        mean_inv_threshold: if feasible > 0 {
            inv_thr_sum / feasible as f64
        } else {
            f64::NAN
        },
        mean_inv_gain: inv_gain_sum / cfg.trials as f64,
        thresholds,
        gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_channel() -> MarkovChannelConfig {
        // 3.5 GHz carrier, 20 m/s, 0.5 ms lag
        MarkovChannelConfig::new(3.5e9, 20.0, 5e-4).unwrap()
    }

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let err = (actual - expected).abs() / expected.abs().max(1e-300);
        assert!(
            err < tol,
            "got {actual:e}, expected {expected:e} (rel err {err:e})"
        );
    }

    // ---- doppler_rho ---------------------------------------------------------

    #[test]
    fn rho_is_one_at_zero_lag() {
        assert_eq!(doppler_rho(3.5e9, 20.0, 0.0), 1.0);
        assert_eq!(doppler_rho(3.5e9, 0.0, 1.0), 1.0);
    }

    #[test]
    fn rho_reference_value() {
        // f_c=3.5 GHz, v=20 m/s, tau=0.5 ms: argument 0.73354575768...,
        // J0 of it = 0.869934665259... (independent 30-digit evaluation)
        let rho = doppler_rho(3.5e9, 20.0, 5e-4);
        assert_rel(rho, 0.86993466525901431, 1e-10);
        assert_rel(rho * rho, 0.75678632181931328, 1e-10);
        // the same numbers at c = 3e8 round to 0.8680 / 0.7534
        assert!((rho - 0.8680).abs() < 2e-3);
        assert!((rho * rho - 0.7534).abs() < 4e-3);
    }

    #[test]
    fn rho_crosses_zero_at_first_bessel_zero() {
        // carrier = c makes f_d numerically equal to v
        const J0_FIRST_ZERO: f64 = 2.404825557695773;
        let lag_below = (J0_FIRST_ZERO - 0.01) / (2.0 * std::f64::consts::PI);
        let lag_above = (J0_FIRST_ZERO + 0.01) / (2.0 * std::f64::consts::PI);
        assert!(doppler_rho(SPEED_OF_LIGHT_MPS, 1.0, lag_below) > 0.0);
        assert!(doppler_rho(SPEED_OF_LIGHT_MPS, 1.0, lag_above) < 0.0);
    }

    // ---- channel config --------------------------------------------------------

    #[test]
    fn config_identity_holds_exactly_as_stored() {
        let cfg = default_channel();
        assert_eq!(cfg.rho() * cfg.rho() + cfg.sigma_omega2(), 1.0);
        assert!(cfg.sigma_omega2() > 0.0 && cfg.sigma_omega2() < 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(MarkovChannelConfig::new(0.0, 20.0, 5e-4).is_err());
        assert!(MarkovChannelConfig::new(3.5e9, -1.0, 5e-4).is_err());
        assert!(MarkovChannelConfig::new(3.5e9, 20.0, -5e-4).is_err());
    }

    // ---- evolve_channel ----------------------------------------------------------

    #[test]
    fn zero_lag_evolution_is_identity() {
        let cfg = MarkovChannelConfig::new(3.5e9, 20.0, 0.0).unwrap();
        let mut rng = trial_rng(3, 0);
        let h = ChannelMatrix::rayleigh(2, 4, &mut rng);
        let h2 = evolve_channel(&h, &cfg, &mut rng);
        assert_eq!(h, h2);
    }

    #[test]
    fn evolution_is_reproducible() {
        let cfg = default_channel();
        let h = ChannelMatrix::rayleigh(2, 3, &mut trial_rng(1, 0));
        let a = evolve_channel(&h, &cfg, &mut trial_rng(1, 1));
        let b = evolve_channel(&h, &cfg, &mut trial_rng(1, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn innovation_variance_matches_model() {
        let cfg = default_channel();
        let mut rng = trial_rng(17, 0);
        let h = ChannelMatrix::rayleigh(4, 4, &mut rng);
        let reps = 62_500; // 1e6 innovation entries
        let mut sum = 0.0;
        for _ in 0..reps {
            let h2 = evolve_channel(&h, &cfg, &mut rng);
            for n in 0..4 {
                for m in 0..4 {
                    sum += (h2.get(n, m) - cfg.rho() * h.get(n, m)).norm_sqr();
                }
            }
        }
        let var = sum / (reps as f64 * 16.0);
        assert_rel(var, cfg.sigma_omega2(), 5e-3);
    }

    // ---- beamformer and gain model ---------------------------------------------

    #[test]
    fn mf_beam_single_unit_row() {
        // N=1, unit row: w = h^H and both normalizations coincide
        let h = ChannelMatrix::new(
            1,
            2,
            vec![
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.8),
            ],
        )
        .unwrap();
        let w = mf_beamformer(&h).unwrap();
        assert_rel(w[0].re, 0.6, 1e-12);
        assert_rel(w[1].im, -0.8, 1e-12);
        let norm2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        assert_rel(norm2, 1.0, 1e-12);
    }

    #[test]
    fn mf_beam_normalizes_predicted_gain() {
        for (n, m, seed) in [(1, 4, 7u64), (2, 16, 8), (4, 16, 9), (4, 64, 10)] {
            let h = ChannelMatrix::rayleigh(n, m, &mut trial_rng(seed, 0));
            let w = mf_beamformer(&h).unwrap();
            assert!(
                (realized_gain(&h, &w) - 1.0).abs() < 1e-12,
                "||H w||^2 != 1 for {n}x{m}"
            );
        }
    }

    #[test]
    fn mf_beam_rejects_zero_channel() {
        let h = ChannelMatrix::new(2, 2, vec![Complex64::new(0.0, 0.0); 4]).unwrap();
        assert!(matches!(mf_beamformer(&h), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn gain_model_fields_follow_the_mapping() {
        let cfg = default_channel();
        let h = ChannelMatrix::rayleigh(4, 16, &mut trial_rng(21, 0));
        let w = mf_beamformer(&h).unwrap();
        let model = gain_model(&h, &w, &cfg).unwrap();
        let p = model.params.unwrap();
        assert_eq!(p.k(), 8); // 2N
        let w_norm2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        assert_rel(p.sigma2(), cfg.sigma_omega2() * w_norm2 / 2.0, 1e-12);
        // predicted gain is normalized, so M^2 = rho^2 exactly
        assert_rel(p.m2(), cfg.rho() * cfg.rho(), 1e-12);
        assert_eq!(model.m2, p.m2());
    }

    #[test]
    fn gain_model_deterministic_at_zero_lag() {
        let cfg = MarkovChannelConfig::new(3.5e9, 20.0, 0.0).unwrap();
        let h = ChannelMatrix::rayleigh(2, 8, &mut trial_rng(4, 0));
        let w = mf_beamformer(&h).unwrap();
        let model = gain_model(&h, &w, &cfg).unwrap();
        assert!(model.is_deterministic());
        // rho = 1: the deterministic gain is the (normalized) predicted gain
        assert_rel(model.m2, realized_gain(&h, &w), 1e-12);
        let r = predict_gain_lb(&model, 1e-6, DeltaBeta::default()).unwrap();
        assert_eq!(r.flag, Some(ThresholdFlag::DeterministicGain));
        assert_eq!(r.value, model.m2);
    }

    #[test]
    fn gain_model_near_bessel_zero_is_almost_central() {
        const J0_FIRST_ZERO: f64 = 2.404825557695773;
        let lag = J0_FIRST_ZERO / (2.0 * std::f64::consts::PI);
        let cfg = MarkovChannelConfig::new(SPEED_OF_LIGHT_MPS, 1.0, lag).unwrap();
        assert!(cfg.rho().abs() < 1e-12);
        let h = ChannelMatrix::rayleigh(2, 8, &mut trial_rng(5, 0));
        let w = mf_beamformer(&h).unwrap();
        let p = gain_model(&h, &w, &cfg).unwrap().params.unwrap();
        assert!(p.m2() < 1e-20);
        let w_norm2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        assert_rel(p.sigma2(), w_norm2 / 2.0, 1e-10); // sigma_omega2 ~ 1
    }

    #[test]
    fn beam_phase_rotation_changes_nothing() {
        let cfg = default_channel();
        let h = ChannelMatrix::rayleigh(3, 8, &mut trial_rng(6, 0));
        let w = mf_beamformer(&h).unwrap();
        let phase = Complex64::from_polar(1.0, 0.7);
        let w_rot: Vec<Complex64> = w.iter().map(|&z| z * phase).collect();
        let a = gain_model(&h, &w, &cfg).unwrap();
        let b = gain_model(&h, &w_rot, &cfg).unwrap();
        let (pa, pb) = (a.params.unwrap(), b.params.unwrap());
        assert_rel(pb.sigma2(), pa.sigma2(), 1e-12);
        assert_rel(pb.m2(), pa.m2(), 1e-12);
        let aged = evolve_channel(&h, &cfg, &mut trial_rng(6, 1));
        assert_rel(realized_gain(&aged, &w_rot), realized_gain(&aged, &w), 1e-12);
    }

    #[test]
    fn conditional_bound_validity_through_the_mapping() {
        let cfg = default_channel();
        for seed in 0..8 {
            let h = ChannelMatrix::rayleigh(4, 16, &mut trial_rng(100, seed));
            let w = mf_beamformer(&h).unwrap();
            let model = gain_model(&h, &w, &cfg).unwrap();
            let r = predict_gain_lb(&model, 1e-6, DeltaBeta::Absolute(1e-10)).unwrap();
            let achieved = model.params.unwrap().cdf(r.value).unwrap();
            assert!(achieved <= 1e-6 + 1e-12, "cdf {achieved:e} above epsilon");
        }
    }

    #[test]
    fn realized_gain_distribution_matches_model() {
        // module-scale Theorem-3 check: empirical CDF of realized gains vs
        // the analytic conditional CDF, 2e5 samples
        let cfg = default_channel();
        let h = ChannelMatrix::rayleigh(2, 16, &mut trial_rng(55, 0));
        let w = mf_beamformer(&h).unwrap();
        let p = gain_model(&h, &w, &cfg).unwrap().params.unwrap();
        let n = 200_000;
        let mut rng = trial_rng(55, 1);
        let mut gains: Vec<f64> = (0..n)
            .map(|_| realized_gain(&evolve_channel(&h, &cfg, &mut rng), &w))
            .collect();
        gains.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let band = dkw_band(n as u64, 0.01);
        for i in 1..100 {
            let x = p.mean() * i as f64 / 50.0;
            let emp = gains.partition_point(|&g| g <= x) as f64 / n as f64;
            let ana = p.cdf(x).unwrap();
            assert!(
                (emp - ana).abs() < band,
                "DKW violated at x={x}: emp {emp} vs analytic {ana}"
            );
        }
    }

    #[test]
    fn interference_free_concentration_with_antenna_count() {
        // mean of M^2/(M^2 + K sigma^2) approaches 1 as the transmit array grows
        let cfg = default_channel();
        let mut prev = 0.0;
        for (m, expect_above) in [(8, 0.0), (64, 0.0), (512, 0.99)] {
            let mut acc = 0.0;
            let draws = 50;
            for s in 0..draws {
                let h = ChannelMatrix::rayleigh(2, m, &mut trial_rng(777, s));
                let w = mf_beamformer(&h).unwrap();
                let p = gain_model(&h, &w, &cfg).unwrap().params.unwrap();
                acc += p.m2() / (p.m2() + p.k() as f64 * p.sigma2());
            }
            let mean = acc / draws as f64;
            assert!(mean > prev, "concentration not improving at M={m}");
            assert!(mean > expect_above);
            prev = mean;
        }
    }

    // ---- power adaptation ---------------------------------------------------------

    #[test]
    fn adapt_energy_formula() {
        assert_rel(adapt_energy(1.0, 0.5, 1.0).unwrap(), 2.0, 1e-15);
        // doubling the gain halves the energy
        let a = adapt_energy(2.5, 0.2, 0.7).unwrap();
        let b = adapt_energy(2.5, 0.4, 0.7).unwrap();
        assert_rel(a, 2.0 * b, 1e-15);
        assert!(matches!(adapt_energy(1.0, 0.0, 1.0), Err(Error::InfeasiblePower(_))));
        assert!(matches!(adapt_energy(0.0, 0.5, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn mrc_baseline() {
        let p4 = mrc_baseline_params(4);
        assert_eq!((p4.k(), p4.sigma2(), p4.m2()), (8, 0.5, 0.0));
        // N=1: exponential gain, threshold(eps) = -ln(1-eps) ~ eps
        let p1 = mrc_baseline_params(1);
        let t = p1.exact_threshold(1e-6, 1e-16).unwrap();
        assert_rel(t, 1.0000005000003334e-6, 1e-7);
        // N=2: mean gain K sigma^2 = 2
        assert_eq!(mrc_baseline_params(2).mean(), 2.0);
    }

    // ---- experiment harness ---------------------------------------------------------

    fn small_config(method: SimMethod) -> SimConfig {
        SimConfig {
            n_tx: 8,
            n_rx: 2,
            channel: default_channel(),
            epsilon: 1e-3,
            method,
            trials: 300,
            seed: 42,
            delta_beta: DeltaBeta::Absolute(1e-10),
            ratio_switch: 120.0,
        }
    }

    #[test]
    fn experiment_is_deterministic_across_worker_counts() {
        let cfg = small_config(SimMethod::Cher);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_outage_experiment(&cfg))
            .unwrap();
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_outage_experiment(&cfg))
            .unwrap();
        assert_eq!(single, multi);
        let again = run_outage_experiment(&cfg).unwrap();
        assert_eq!(single, again);
    }

    #[test]
    fn oracle_method_never_fails_and_tracks_gain() {
        let r = run_outage_experiment(&small_config(SimMethod::Oracle)).unwrap();
        assert_eq!(r.outage.failures, 0);
        assert_eq!(r.infeasible, 0);
        assert_rel(r.mean_inv_threshold, r.mean_inv_gain, 1e-12);
    }

    #[test]
    fn cher_method_respects_desk_scale_epsilon() {
        let mut cfg = small_config(SimMethod::Cher);
        cfg.trials = 2000;
        let r = run_outage_experiment(&cfg).unwrap();
        assert_eq!(r.infeasible, 0);
        // outage rate must sit at or below epsilon (up to binomial noise)
        assert!(
            r.outage.ci95.0 <= cfg.epsilon,
            "lower CI {} above epsilon",
            r.outage.ci95.0
        );
        assert!(r.mean_inv_threshold > r.mean_inv_gain);
    }

    #[test]
    fn outage_estimate_invariants() {
        let e = OutageEstimate::new(13, 1000);
        assert_rel(e.rate, 0.013, 1e-15);
        assert!(e.ci95.0 <= e.rate && e.rate <= e.ci95.1);
        let z = OutageEstimate::new(0, 50);
        assert_eq!(z.rate, 0.0);
        assert!(z.ci95.0 == 0.0 && z.ci95.1 > 0.0);
    }

    #[test]
    fn dkw_band_values() {
        // standard envelope at alpha = 0.01
        assert_rel(dkw_band(1_000_000, 0.01), 1.6275e-3, 1e-3);
        assert!(dkw_band(100, 0.01) > dkw_band(10_000, 0.01));
    }

    #[test]
    fn sim_method_parsing() {
        for s in ["cher", "poly", "hybrid", "aty_first", "aty_closer", "sankaran_z1", "sankaran_z2", "exact", "oracle"] {
            assert_eq!(s.parse::<SimMethod>().unwrap().as_str(), s);
        }
        assert!("nope".parse::<SimMethod>().is_err());
    }
}
