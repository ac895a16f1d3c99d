//! Self-checks of the asymptotic machinery, run by `noma validate`.

use crate::asymptotic::{
    asym_capacity_quadrature, closed_form_per_antenna, mp_integral, mp_law, mp_mass,
};
use crate::channel::{gram_spectrum, sample_channel, SeedStream};
use crate::error::Result;
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Continuous mass plus zero atom equals one.
pub fn check_normalization() -> Result<Check> {
    let mut worst = 0.0f64;
    for beta in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let law = mp_law(beta)?;
        let total = mp_integral(&law, law.a, law.b, |_| 1.0)? + law.zero_mass;
        worst = worst.max((total - 1.0).abs());
    }
    Ok(Check {
        name: "mp-normalization",
        pass: worst < 1e-9,
        detail: format!("max |mass - 1| = {worst:.3e}"),
    })
}

/// Closed-form per-antenna capacity against quadrature of the density.
pub fn check_closed_form() -> Result<Check> {
    let mut worst = 0.0f64;
    for beta in [0.5, 1.0, 2.0] {
        for c in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let quad = asym_capacity_quadrature(c, beta, 1)?;
            worst = worst.max((closed_form_per_antenna(c, beta) - quad).abs());
        }
    }
    Ok(Check {
        name: "closed-form-vs-quadrature",
        pass: worst < 1e-6,
        detail: format!("max deviation {worst:.3e} bps/Hz per antenna"),
    })
}

/// Histogram of `matrices` pooled `n x n` Gram spectra against MP bin masses.
pub fn check_spectrum(n: usize, matrices: usize, bins: usize, seed: u64) -> Result<Check> {
    let law = mp_law(1.0)?;
    let width = law.b / bins as f64;
    let streams = SeedStream::new(seed);
    let spectra = Execution::Parallel
        .map_indexed(matrices, |m| {
            gram_spectrum(&sample_channel(n, n, 1.0, &mut streams.trial(m as u64)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    for x in spectra.iter().flatten() {
        match (x / width).floor() as usize {
            k if k < bins => counts[k] += 1,
            _ => outside += 1,
        }
    }
    let total = (n * matrices) as f64;
    let mut l1 = outside as f64 / total;
    for (k, &c) in counts.iter().enumerate() {
        let expected = mp_mass(&law, k as f64 * width, (k + 1) as f64 * width)?;
        l1 += (c as f64 / total - expected).abs();
    }
    Ok(Check {
        name: "spectrum-histogram",
        pass: l1 < 0.05,
        detail: format!("L1 {l1:.4} ({matrices} matrices of {n}x{n}, {bins} bins)"),
    })
}

pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        check_normalization()?,
        check_closed_form()?,
        check_spectrum(256, 8, 50, seed)?,
    ])
}
