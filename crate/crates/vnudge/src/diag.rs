//! Physics sanity instruments: energy balance along trajectories, shell
//! spectra, and the absorbing-ball monitor.

use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::grid::{LAMBDA_1, TWO_PI};
use crate::model::{GrashofReport, PhysicsParams};
use crate::ops;
use crate::twin::TwinRunRecord;

/// One interior sample of the energy budget. For the Voigt system the
/// tracked energy is ½(‖v‖² + α²‖∇v‖²); its exact balance is
/// d/dt(energy) = injection − dissipation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceSample {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub injection: f64,
    pub dissipation: f64,
    /// Central-difference d(energy)/dt minus (injection − dissipation).
    pub residual: f64,
}

/// Energy balance of a uniformly sampled trajectory. Needs at least three
/// samples; the endpoints carry no residual and are dropped.
pub fn energy_balance(
    times: &[f64],
    fields: &[VelocityField],
    p: &PhysicsParams,
    voigt: bool,
) -> Result<Vec<BalanceSample>> {
    if times.len() != fields.len() {
        return Err(Error::invalid("samples", "times and fields differ in length".to_string()));
    }
    if times.len() < 3 {
        return Err(Error::invalid(
            "samples",
            format!("energy balance needs at least 3 samples, got {}", times.len()),
        ));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-30) {
            return Err(Error::invalid("samples", "sampling must be uniform".to_string()));
        }
    }
    let a2 = if voigt { p.alpha * p.alpha } else { 0.0 };
    let energies: Vec<f64> = fields
        .iter()
        .map(|u| {
            let nm = ops::norms(u);
            0.5 * (nm.l2 * nm.l2 + a2 * nm.h1_semi * nm.h1_semi)
        })
        .collect();
    let mut out = Vec::with_capacity(times.len() - 2);
    for i in 1..times.len() - 1 {
        let nm = ops::norms(&fields[i]);
        let enstrophy = 0.5 * nm.h1_semi * nm.h1_semi;
        let injection = ops::inner_l2(&p.forcing, &fields[i]);
        let dissipation = p.nu * nm.h1_semi * nm.h1_semi;
        let dedt = (energies[i + 1] - energies[i - 1]) / (2.0 * dt);
        out.push(BalanceSample {
            t: times[i],
            energy: energies[i],
            enstrophy,
            injection,
            dissipation,
            residual: dedt - injection + dissipation,
        });
    }
    Ok(out)
}

pub fn balance_csv(samples: &[BalanceSample]) -> String {
    let mut out = String::from("t,energy,enstrophy,injection,dissipation,residual\n");
    for s in samples {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.t, s.energy, s.enstrophy, s.injection, s.dissipation, s.residual
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumBin {
    /// Shell center κ = 2πm.
    pub kappa: f64,
    /// ½ Σ|û|² over κ − π <= |k| < κ + π.
    pub energy: f64,
}

/// Shell-binned kinetic energy spectrum; the bins partition all retained
/// modes, so Σ E(κ) = ½‖u‖² exactly.
pub fn energy_spectrum(u: &VelocityField) -> Vec<SpectrumBin> {
    let grid = u.grid();
    let (rows, cols) = grid.spectral_shape();
    let n_bins = (2.0f64.sqrt() * (grid.n() as f64 / 2.0)).ceil() as usize + 1;
    let mut bins = vec![0.0f64; n_bins + 1];
    for comp in 0..2 {
        let coeffs = u.component(comp).coeffs();
        for row in 0..rows {
            for col in 0..cols {
                let e = grid.parseval_weight(col) * coeffs[[row, col]].norm_sqr();
                if e == 0.0 {
                    continue;
                }
                let m = (grid.k2(row, col)).sqrt() / TWO_PI;
                let shell = m.round() as usize;
                bins[shell.min(n_bins)] += 0.5 * e;
            }
        }
    }
    bins.iter()
        .enumerate()
        .skip(1)
        .map(|(m, &energy)| SpectrumBin {
            kappa: TWO_PI * m as f64,
            energy,
        })
        .collect()
}

pub fn spectrum_csv(bins: &[SpectrumBin]) -> String {
    let mut out = String::from("kappa,energy\n");
    for b in bins {
        out.push_str(&format!("{:.16e},{:.16e}\n", b.kappa, b.energy));
    }
    out
}

/// Advisory check of the reference run against the absorbing-ball bounds
/// ‖u‖² <= 2ν²G² and ‖∇u‖² <= 2ν²λ₁G².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallReport {
    pub l2_bound: f64,
    pub h1_bound: f64,
    pub violation_frac_l2: f64,
    pub violation_frac_h1: f64,
    /// Whether the energy decreased over the record (the meaningful signal
    /// when G = 0 and the bounds degenerate to zero).
    pub decaying: bool,
}

pub fn ball_monitor(rec: &TwinRunRecord, g: &GrashofReport, nu: f64) -> BallReport {
    let l2_bound = 2.0 * nu * nu * g.g * g.g;
    let h1_bound = l2_bound * LAMBDA_1;
    let n = rec.energy_u.len().max(1);
    let viol_l2 = rec
        .energy_u
        .iter()
        .filter(|&&e| 2.0 * e > l2_bound)
        .count() as f64
        / n as f64;
    let viol_h1 = rec
        .enstrophy_u
        .iter()
        .filter(|&&e| 2.0 * e > h1_bound)
        .count() as f64
        / n as f64;
    let decaying = match (rec.energy_u.first(), rec.energy_u.last()) {
        (Some(first), Some(last)) => last < first,
        _ => false,
    };
    BallReport {
        l2_bound,
        h1_bound,
        violation_frac_l2: viol_l2,
        violation_frac_h1: viol_h1,
        decaying,
    }
}
