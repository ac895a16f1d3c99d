//! Finite-size channel model and Monte-Carlo ergodic capacities.
//!
//! A channel to a user with `n_rx` receive antennas is an `n_rx x n_tx`
//! matrix `H = sqrt(gain) * G`, where `G` has i.i.d. circularly-symmetric
//! complex Gaussian entries of variance `1 / n_tx`. With that normalization
//! the eigenvalues of `G G^H` follow the Marchenko-Pastur law of
//! [`crate::asymptotic`] as the dimensions grow.
//!
//! Ergodic capacities are sample means of log-det expressions, computed from
//! the Gram spectrum with `log2|I + a H H^H| = sum_i log2(1 + a * lambda_i)`.
//!
//! Trial `t` always draws from a ChaCha stream keyed by `(seed, t)`, and
//! per-trial values are reduced in trial order, so an estimate is a pure
//! function of its seed whatever the thread count.

use log::warn;
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Eigenvalues this far below zero are treated as round-off and clamped.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Number of channel realizations averaged when nothing else is requested.
pub const DEFAULT_TRIALS: usize = 10;

/// Antenna counts and channel gains of the two-user downlink.
///
/// User 1 is the weak user (treats the other signal as noise), user 2 the
/// strong user (performs SIC). Gains are linear per-entry channel variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub n_s: usize,
    pub n_1: usize,
    pub n_2: usize,
    pub gain_1: f64,
    pub gain_2: f64,
}

impl SystemConfig {
    pub fn new(n_s: usize, n_1: usize, n_2: usize, gain_1: f64, gain_2: f64) -> Result<Self> {
        let cfg = SystemConfig {
            n_s,
            n_1,
            n_2,
            gain_1,
            gain_2,
        };
        cfg.validate()?;
        if cfg.gain_order_inverted() {
            warn!(
                "weak-user gain {gain_1} exceeds strong-user gain {gain_2}; \
                 SIC at the strong user is not guaranteed"
            );
        }
        Ok(cfg)
    }

    /// `n_s = n_1 = n_2 = n`, the square setting used by the default sweeps.
    pub fn square(n: usize, gain_1: f64, gain_2: f64) -> Result<Self> {
        Self::new(n, n, n, gain_1, gain_2)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_s", self.n_s), ("n_1", self.n_1), ("n_2", self.n_2)] {
            if n == 0 {
                return Err(Error::invalid(name, "antenna count must be at least 1"));
            }
        }
        for (name, g) in [("gain_1", self.gain_1), ("gain_2", self.gain_2)] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("gain must be positive, got {g}"),
                ));
            }
        }
        Ok(())
    }

    /// True when the weak user has the larger channel gain.
    pub fn gain_order_inverted(&self) -> bool {
        self.gain_1 > self.gain_2
    }

    /// Receive/transmit aspect ratio of the weak user's channel.
    pub fn beta_1(&self) -> f64 {
        self.n_1 as f64 / self.n_s as f64
    }

    /// Receive/transmit aspect ratio of the strong user's channel.
    pub fn beta_2(&self) -> f64 {
        self.n_2 as f64 / self.n_s as f64
    }
}

/// Converts a gain in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-antenna transmit powers (watts) of the weak and strong user's signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub p_1: f64,
    pub p_2: f64,
}

impl PowerSplit {
    pub fn new(p_1: f64, p_2: f64) -> Result<Self> {
        if !(p_1 >= 0.0 && p_1.is_finite()) {
            return Err(Error::invalid(
                "p_1",
                format!("power must be nonnegative, got {p_1}"),
            ));
        }
        if !(p_2 >= 0.0 && p_2.is_finite()) {
            return Err(Error::invalid(
                "p_2",
                format!("power must be nonnegative, got {p_2}"),
            ));
        }
        Ok(PowerSplit { p_1, p_2 })
    }

    pub fn total(&self) -> f64 {
        self.p_1 + self.p_2
    }
}

/// One realization of a user's channel matrix.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    /// `n_rx x n_tx`, already scaled by `sqrt(gain)`.
    pub entries: DMatrix<Complex<f64>>,
    pub gain: f64,
}

impl ChannelSample {
    pub fn n_rx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.entries.ncols()
    }
}

/// A Monte-Carlo mean together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    /// bps/Hz
    pub value: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl CapacityEstimate {
    /// Mean and standard error of the mean of per-trial values.
    ///
    /// Summation runs in slice order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n > 0, "capacity estimate needs at least one trial");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n == 1 {
            0.0
        } else {
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        CapacityEstimate {
            value: mean,
            std_error,
            trials: n,
        }
    }
}

/// Seeded source of independent per-trial random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The generator for trial `t`: the master key with stream id `t`.
    pub fn trial(&self, t: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t);
        rng
    }

    /// An unrelated family of streams, keyed by `tag`.
    pub fn derive(&self, tag: u64) -> SeedStream {
        SeedStream {
            seed: splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x6a09_e667_f3bc_c909))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Monte-Carlo settings shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub trials: usize,
    pub streams: SeedStream,
    pub execution: Execution,
}

impl MonteCarlo {
    pub fn new(trials: usize, seed: u64) -> Self {
        MonteCarlo {
            trials,
            streams: SeedStream::new(seed),
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "at least one trial is required"));
        }
        Ok(())
    }
}

/// Draws `H = sqrt(gain) * G` with `G` entries `CN(0, 1/n_tx)`.
pub fn sample_channel<R: Rng + ?Sized>(
    n_rx: usize,
    n_tx: usize,
    gain: f64,
    rng: &mut R,
) -> ChannelSample {
    // Real and imaginary parts each carry half the entry variance.
    let scale = (gain / (2.0 * n_tx as f64)).sqrt();
    let entries = DMatrix::from_fn(n_rx, n_tx, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(scale * re, scale * im)
    });
    ChannelSample { entries, gain }
}

/// All `n_rx` eigenvalues of `H H^H`, largest first.
///
/// When `n_rx > n_tx` the smaller Gram `H^H H` is decomposed instead and the
/// remaining `n_rx - n_tx` eigenvalues are exactly zero.
pub fn gram_spectrum(h: &ChannelSample) -> Result<Vec<f64>> {
    let (n_rx, n_tx) = h.entries.shape();
    let gram = if n_rx <= n_tx {
        &h.entries * h.entries.adjoint()
    } else {
        h.entries.adjoint() * &h.entries
    };
    let dim = gram.nrows();
    let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    if eig.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSpectrum { dim });
    }
    for v in eig.iter_mut() {
        if *v < 0.0 {
            if *v < -EIGEN_CLAMP {
                return Err(Error::NegativeEigenvalue { value: *v });
            }
            *v = 0.0;
        }
    }
    eig.resize(n_rx, 0.0);
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

/// `log2|I + alpha X|` from the eigenvalues of `X`.
pub fn shannon_logdet(spectrum: &[f64], alpha: f64) -> f64 {
    spectrum.iter().map(|&l| (alpha * l).ln_1p()).sum::<f64>() * std::f64::consts::LOG2_E
}

/// Gram spectra of a fixed set of channel realizations.
///
/// Reusing one bank across many power splits gives common random numbers:
/// every capacity evaluated from it is a deterministic function of the
/// powers, and per-realization monotonicity carries over to the means.
#[derive(Debug, Clone)]
pub struct SpectrumBank {
    spectra: Vec<Vec<f64>>,
}

impl SpectrumBank {
    /// Samples `mc.trials` channels of shape `n_rx x n_tx` and decomposes them.
    pub fn sample(n_rx: usize, n_tx: usize, gain: f64, mc: &MonteCarlo) -> Result<Self> {
        mc.check()?;
        let streams = mc.streams;
        let spectra = mc
            .execution
            .map_indexed(mc.trials, |t| {
                let mut rng = streams.trial(t as u64);
                gram_spectrum(&sample_channel(n_rx, n_tx, gain, &mut rng))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumBank { spectra })
    }

    pub fn trials(&self) -> usize {
        self.spectra.len()
    }

    pub fn spectra(&self) -> &[Vec<f64>] {
        &self.spectra
    }

    /// Per-trial `log2|I + alpha X|`.
    pub fn logdet_samples(&self, alpha: f64) -> Vec<f64> {
        self.spectra
            .iter()
            .map(|s| shannon_logdet(s, alpha))
            .collect()
    }

    /// Per-trial `log2|I + hi X| - log2|I + lo X|`.
    pub fn difference_samples(&self, hi: f64, lo: f64) -> Vec<f64> {
        self.spectra
            .iter()
            .map(|s| shannon_logdet(s, hi) - shannon_logdet(s, lo))
            .collect()
    }

    pub fn logdet(&self, alpha: f64) -> CapacityEstimate {
        CapacityEstimate::from_samples(&self.logdet_samples(alpha))
    }

    pub fn difference(&self, hi: f64, lo: f64) -> CapacityEstimate {
        CapacityEstimate::from_samples(&self.difference_samples(hi, lo))
    }
}

/// Ergodic SE of the weak user, who decodes its signal with the strong
/// user's signal as interference.
pub fn mc_weak_capacity(
    cfg: &SystemConfig,
    split: PowerSplit,
    mc: &MonteCarlo,
) -> Result<CapacityEstimate> {
    let bank = SpectrumBank::sample(cfg.n_1, cfg.n_s, cfg.gain_1, mc)?;
    Ok(bank.difference(split.p_1 + split.p_2, split.p_2))
}

/// Ergodic SE of the strong user after cancelling the weak user's signal.
pub fn mc_strong_capacity(
    cfg: &SystemConfig,
    p_2: f64,
    mc: &MonteCarlo,
) -> Result<CapacityEstimate> {
    let bank = SpectrumBank::sample(cfg.n_2, cfg.n_s, cfg.gain_2, mc)?;
    Ok(bank.logdet(p_2))
}

/// Rate at which the strong user can decode the weak user's signal. SIC
/// succeeds when the weak user's SE does not exceed this.
pub fn mc_sic_bound(
    cfg: &SystemConfig,
    split: PowerSplit,
    mc: &MonteCarlo,
) -> Result<CapacityEstimate> {
    let bank = SpectrumBank::sample(cfg.n_2, cfg.n_s, cfg.gain_2, mc)?;
    Ok(bank.difference(split.p_1 + split.p_2, split.p_2))
}
