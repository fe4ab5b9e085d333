//! Observation operators I_h and empirical certification of the constant c₁
//! in the approximation bound ‖φ − I_h(φ)‖ ≤ c₁ h ‖∇φ‖.

use crate::error::{Error, Result};
use crate::fft::Workspace;
use crate::field::{random_smooth_velocity, VelocityField};
use crate::grid::GridSpec;
use crate::ops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterpolantKind {
    /// Zero every mode with |k|∞ > 2π/h.
    FourierTruncation,
    /// Sample on a coarse m×m lattice (m = ⌊1/h⌋), bilinear-interpolate back.
    NodalBilinear,
    /// Average over ~h×h cells, extend piecewise-constant.
    VolumeAverage,
}

impl InterpolantKind {
    pub fn name(&self) -> &'static str {
        match self {
            InterpolantKind::FourierTruncation => "fourier_truncation",
            InterpolantKind::NodalBilinear => "nodal_bilinear",
            InterpolantKind::VolumeAverage => "volume_average",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fourier_truncation" => Some(InterpolantKind::FourierTruncation),
            "nodal_bilinear" => Some(InterpolantKind::NodalBilinear),
            "volume_average" => Some(InterpolantKind::VolumeAverage),
            _ => None,
        }
    }
}

/// An observation operator with its scale h and, once certified, the best
/// empirical constant for the interpolation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolantOp {
    pub kind: InterpolantKind,
    pub h: f64,
    pub c1_certified: Option<f64>,
}

impl InterpolantOp {
    pub fn new(kind: InterpolantKind, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::invalid(
                "interpolant.h",
                format!("must lie in (0, 1), got {h}"),
            ));
        }
        Ok(InterpolantOp {
            kind,
            h,
            c1_certified: None,
        })
    }

    /// Largest retained mode index for the Fourier kind: keep |m|∞ <= 1/h.
    pub fn fourier_cutoff(&self) -> i64 {
        (1.0 / self.h + 1e-9).floor() as i64
    }

    /// Coarse lattice size for the nodal kinds.
    pub fn coarse_points(&self) -> usize {
        (1.0 / self.h + 1e-9).floor() as usize
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.h < 1.0 / grid.n() as f64 {
            return Err(Error::invalid(
                "interpolant.h",
                format!("h = {} is finer than the grid spacing 1/{}", self.h, grid.n()),
            ));
        }
        if self.coarse_points() < 2 {
            return Err(Error::invalid(
                "interpolant.h",
                format!("h = {} leaves fewer than 2 observation points per axis", self.h),
            ));
        }
        Ok(())
    }
}

/// Apply the observation operator to a velocity field. The nodal kinds are
/// re-projected onto the divergence-free subspace so the nudging term stays
/// in the solution space.
pub fn apply(ws: &mut Workspace, op: &InterpolantOp, phi: &VelocityField) -> Result<VelocityField> {
    let grid = phi.grid();
    op.check_grid(&grid)?;
    match op.kind {
        InterpolantKind::FourierTruncation => {
            let cutoff = op.fourier_cutoff();
            let mut out = phi.clone();
            let (rows, cols) = grid.spectral_shape();
            for comp in 0..2 {
                let coeffs = out.component_mut(comp).coeffs_mut();
                for row in 0..rows {
                    for col in 0..cols {
                        if grid.mode_x(col).abs() > cutoff || grid.mode_y(row).abs() > cutoff {
                            coeffs[[row, col]] = num_complex::Complex64::new(0.0, 0.0);
                        }
                    }
                }
            }
            Ok(out)
        }
        InterpolantKind::NodalBilinear => {
            let m = op.coarse_points();
            let (px, py) = ws.velocity_physical(phi);
            let rx = bilinear_resample(&sample_coarse(&px, m), grid.n());
            let ry = bilinear_resample(&sample_coarse(&py, m), grid.n());
            finish_physical(ws, rx, ry)
        }
        InterpolantKind::VolumeAverage => {
            let m = op.coarse_points();
            let (px, py) = ws.velocity_physical(phi);
            let rx = constant_extend(&cell_average(&px, m), grid.n());
            let ry = constant_extend(&cell_average(&py, m), grid.n());
            finish_physical(ws, rx, ry)
        }
    }
}

fn finish_physical(
    ws: &mut Workspace,
    px: ndarray::Array2<f64>,
    py: ndarray::Array2<f64>,
) -> Result<VelocityField> {
    let fx = ws.to_spectral(&px);
    let fy = ws.to_spectral(&py);
    ops::leray_project(&fx, &fy)
}

/// Bilinear point samples of a fine periodic grid at the m×m lattice (i/m, j/m).
fn sample_coarse(fine: &ndarray::Array2<f64>, m: usize) -> ndarray::Array2<f64> {
    let n = fine.dim().0;
    ndarray::Array2::from_shape_fn((m, m), |(cj, ci)| {
        let fx = ci as f64 * n as f64 / m as f64;
        let fy = cj as f64 * n as f64 / m as f64;
        bilinear_periodic(fine, fx, fy)
    })
}

/// Bilinear interpolation of the m×m coarse lattice back onto the fine grid.
fn bilinear_resample(coarse: &ndarray::Array2<f64>, n: usize) -> ndarray::Array2<f64> {
    let m = coarse.dim().0;
    ndarray::Array2::from_shape_fn((n, n), |(j, i)| {
        let gx = i as f64 * m as f64 / n as f64;
        let gy = j as f64 * m as f64 / n as f64;
        bilinear_periodic(coarse, gx, gy)
    })
}

fn bilinear_periodic(grid: &ndarray::Array2<f64>, x: f64, y: f64) -> f64 {
    let m = grid.dim().0;
    let x0 = x.floor();
    let y0 = y.floor();
    let tx = x - x0;
    let ty = y - y0;
    let i0 = (x0 as usize) % m;
    let j0 = (y0 as usize) % m;
    let i1 = (i0 + 1) % m;
    let j1 = (j0 + 1) % m;
    grid[[j0, i0]] * (1.0 - tx) * (1.0 - ty)
        + grid[[j0, i1]] * tx * (1.0 - ty)
        + grid[[j1, i0]] * (1.0 - tx) * ty
        + grid[[j1, i1]] * tx * ty
}

/// Mean over each of the m×m cells; fine point i belongs to cell ⌊i·m/n⌋.
fn cell_average(fine: &ndarray::Array2<f64>, m: usize) -> ndarray::Array2<f64> {
    let n = fine.dim().0;
    let mut sums = ndarray::Array2::<f64>::zeros((m, m));
    let mut counts = ndarray::Array2::<f64>::zeros((m, m));
    for j in 0..n {
        let cj = (j * m) / n;
        for i in 0..n {
            let ci = (i * m) / n;
            sums[[cj, ci]] += fine[[j, i]];
            counts[[cj, ci]] += 1.0;
        }
    }
    sums / &counts
}

fn constant_extend(coarse: &ndarray::Array2<f64>, n: usize) -> ndarray::Array2<f64> {
    let m = coarse.dim().0;
    ndarray::Array2::from_shape_fn((n, n), |(j, i)| coarse[[(j * m) / n, (i * m) / n]])
}

/// Empirical certification of c₁ over a seeded corpus of random smooth
/// divergence-free fields: returns max ‖φ − I_hφ‖ / (h‖∇φ‖).
/// Deterministic for a given grid, corpus size and seed.
pub fn certify_c1(
    ws: &mut Workspace,
    op: &InterpolantOp,
    grid: GridSpec,
    corpus_size: usize,
    seed: u64,
) -> Result<f64> {
    if corpus_size < 100 {
        return Err(Error::invalid(
            "corpus_size",
            format!("certification needs at least 100 fields, got {corpus_size}"),
        ));
    }
    let mut worst: f64 = 0.0;
    for i in 0..corpus_size {
        let phi = random_smooth_velocity(grid, seed.wrapping_add(i as u64).wrapping_mul(0x9e37_79b9));
        let ihphi = apply(ws, op, &phi)?;
        let err = ops::norms(&phi.difference(&ihphi)).l2;
        let grad = ops::norms(&phi).h1_semi;
        if grad == 0.0 {
            continue;
        }
        worst = worst.max(err / (op.h * grad));
    }
    Ok(worst)
}

/// Certify and store the constant on the operator.
pub fn ensure_certified(
    ws: &mut Workspace,
    op: &mut InterpolantOp,
    grid: GridSpec,
    corpus_size: usize,
    seed: u64,
) -> Result<f64> {
    if let Some(c1) = op.c1_certified {
        return Ok(c1);
    }
    let c1 = certify_c1(ws, op, grid, corpus_size, seed)?;
    op.c1_certified = Some(c1);
    Ok(c1)
}
