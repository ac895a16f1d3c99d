//! Large-array capacities from the Marchenko-Pastur law.
//!
//! For `X = G G^H` with `G` an `n_rx x n_tx` matrix of `CN(0, 1/n_tx)`
//! entries and `beta = n_rx / n_tx`, the eigenvalue distribution of `X`
//! converges to the Marchenko-Pastur law: a continuous part on
//! `[(1 - sqrt(beta))^2, (1 + sqrt(beta))^2]` plus an atom of mass
//! `(1 - 1/beta)^+` at zero (the rank deficit when `n_rx > n_tx`).
//!
//! The asymptotic capacity `n_rx * integral log2(1 + c x) f(x) dx` is
//! evaluated two ways:
//!
//! * [`asym_capacity_quadrature`]: adaptive quadrature of the density after
//!   the substitution `x = a + (b - a) sin^2(theta)`, which turns the
//!   square-root edges into smooth trigonometric factors;
//! * [`closed_form_per_antenna`]: the closed form
//!   `beta log2(1 + c - Q) + log2(1 + c beta - Q) - (Q / c) log2 e` with
//!   `Q = q_factor(c, beta)`.
//!
//! # Pairing of `c` and `beta` in the closed form
//!
//! Evaluated literally with `beta = n_rx / n_tx`, the closed form above
//! ([`closed_form_literal`]) equals `beta` times the per-receive-antenna
//! quadrature, i.e. it is the capacity per *transmit* antenna. The
//! per-receive-antenna value is obtained by swapping the roles of the two
//! dimensions: `closed_form_literal(c * beta, 1 / beta)`. Both agree at
//! `beta = 1`. Capacities here are totals, `n_rx` times the per-receive-antenna
//! value (equivalently `n_tx` times the literal form).

use crate::channel::{PowerSplit, SystemConfig};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use std::f64::consts::{FRAC_PI_2, LOG2_E, PI};

/// Below this effective SNR every capacity is returned as exactly zero.
pub const SMALL_SNR: f64 = 1e-12;

/// Marchenko-Pastur law for aspect ratio `beta = n_rx / n_tx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpLaw {
    pub beta: f64,
    /// Lower edge of the continuous support.
    pub a: f64,
    /// Upper edge of the continuous support.
    pub b: f64,
    /// Probability of an exactly-zero eigenvalue.
    pub zero_mass: f64,
}

pub fn mp_law(beta: f64) -> Result<MpLaw> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(
            "beta",
            format!("aspect ratio must be positive, got {beta}"),
        ));
    }
    let r = beta.sqrt();
    Ok(MpLaw {
        beta,
        a: (1.0 - r).powi(2),
        b: (1.0 + r).powi(2),
        zero_mass: (1.0 - 1.0 / beta).max(0.0),
    })
}

/// Density of the continuous part (the atom at zero is not included).
pub fn mp_density(x: f64, law: &MpLaw) -> f64 {
    if x <= law.a || x >= law.b || x <= 0.0 {
        return 0.0;
    }
    ((x - law.a) * (law.b - x)).sqrt() / (2.0 * PI * law.beta * x)
}

fn quad_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-13,
        max_intervals: 4000,
    }
}

/// `integral g(x) f(x) dx` over `[lo, hi]` intersected with the continuous
/// support.
pub fn mp_integral<G: Fn(f64) -> f64>(law: &MpLaw, lo: f64, hi: f64, g: G) -> Result<f64> {
    let lo = lo.max(law.a);
    let hi = hi.min(law.b);
    if hi <= lo {
        return Ok(0.0);
    }
    let width = law.b - law.a;
    let angle = |x: f64| ((x - law.a) / width).clamp(0.0, 1.0).sqrt().asin();
    let (t0, t1) = if lo == law.a && hi == law.b {
        (0.0, FRAC_PI_2)
    } else {
        (angle(lo), angle(hi))
    };
    // f(x) dx = width^2 sin^2 cos^2 / (pi beta x) dtheta
    let k = width * width / (PI * law.beta);
    let integrand = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let s2 = s * s;
        let x = law.a + width * s2;
        g(x) * k * s2 * c * c / x
    };
    integrate(integrand, t0, t1, quad_tolerance()).map(|(v, _)| v)
}

/// Probability that an eigenvalue lies in `[lo, hi]`, atom included when
/// the interval contains zero.
pub fn mp_mass(law: &MpLaw, lo: f64, hi: f64) -> Result<f64> {
    let atom = if lo <= 0.0 && hi >= 0.0 {
        law.zero_mass
    } else {
        0.0
    };
    Ok(atom + mp_integral(law, lo, hi, |_| 1.0)?)
}

/// `Q(c, beta) = (sqrt(c (1 + sqrt beta)^2 + 1) - sqrt(c (1 - sqrt beta)^2 + 1))^2 / 4`.
///
/// The difference of square roots is rewritten as a quotient so small `c`
/// does not cancel.
pub fn q_factor(c: f64, beta: f64) -> f64 {
    let r = beta.sqrt();
    let hi = (c * (1.0 + r).powi(2) + 1.0).sqrt();
    let lo = (c * (1.0 - r).powi(2) + 1.0).sqrt();
    let diff = 4.0 * c * r / (hi + lo);
    0.25 * diff * diff
}

/// The closed form evaluated with `(c, beta)` exactly as given. With
/// `beta = n_rx / n_tx` this is the capacity per transmit antenna.
pub fn closed_form_literal(c: f64, beta: f64) -> f64 {
    if c < SMALL_SNR {
        return 0.0;
    }
    let q = q_factor(c, beta);
    beta * (c - q).ln_1p() * LOG2_E + (c * beta - q).ln_1p() * LOG2_E - q / c * LOG2_E
}

/// Asymptotic capacity per receive antenna, `integral log2(1 + c x) f(x) dx`
/// for `beta = n_rx / n_tx`.
pub fn closed_form_per_antenna(c: f64, beta: f64) -> f64 {
    closed_form_literal(c * beta, 1.0 / beta)
}

/// Total asymptotic capacity `n_rx * integral log2(1 + alpha x) f(x) dx` by
/// quadrature. The atom at zero contributes nothing.
pub fn asym_capacity_quadrature(alpha: f64, beta: f64, n_rx: usize) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::invalid(
            "alpha",
            format!("must be nonnegative, got {alpha}"),
        ));
    }
    let law = mp_law(beta)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let per_antenna = mp_integral(&law, law.a, law.b, |x| (alpha * x).ln_1p() * LOG2_E)?;
    Ok(n_rx as f64 * per_antenna)
}

/// Effective SNRs `c_1 = (p_1 + p_2) gain_1`, `c_2 = p_2 gain_1`, `c_3 = p_2 gain_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSnrs {
    pub c_1: f64,
    pub c_2: f64,
    pub c_3: f64,
}

impl EffectiveSnrs {
    pub fn new(split: PowerSplit, cfg: &SystemConfig) -> Self {
        EffectiveSnrs {
            c_1: split.total() * cfg.gain_1,
            c_2: split.p_2 * cfg.gain_1,
            c_3: split.p_2 * cfg.gain_2,
        }
    }
}

fn interference_limited(c_total: f64, c_interf: f64, beta: f64, n_rx: usize) -> f64 {
    if c_total == c_interf {
        return 0.0;
    }
    let per = closed_form_per_antenna(c_total, beta) - closed_form_per_antenna(c_interf, beta);
    (n_rx as f64 * per).max(0.0)
}

/// Asymptotic SE of the strong user.
pub fn asym_strong_capacity(p_2: f64, cfg: &SystemConfig) -> f64 {
    cfg.n_2 as f64 * closed_form_per_antenna(p_2 * cfg.gain_2, cfg.beta_2())
}

/// Asymptotic SE of the weak user (strong user's signal treated as noise).
pub fn asym_weak_capacity(split: PowerSplit, cfg: &SystemConfig) -> f64 {
    let snr = EffectiveSnrs::new(split, cfg);
    interference_limited(snr.c_1, snr.c_2, cfg.beta_1(), cfg.n_1)
}

/// Asymptotic rate at which the strong user decodes the weak user's signal.
pub fn asym_sic_bound(split: PowerSplit, cfg: &SystemConfig) -> f64 {
    let g = cfg.gain_2;
    interference_limited(split.total() * g, split.p_2 * g, cfg.beta_2(), cfg.n_2)
}
