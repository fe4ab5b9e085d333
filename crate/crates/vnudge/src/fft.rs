//! Two-dimensional real-to-complex FFT on the unit torus.
//!
//! The forward transform is normalized by 1/n² so spectral coefficients are
//! plain Fourier-series coefficients: f(x) = Σ c_k exp(2πi m·x). Plans and
//! scratch buffers are reused across calls; one `Fft2` serves one grid size
//! and is meant to be owned per thread.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::field::{SpectralField, VelocityField};
use crate::grid::GridSpec;

pub struct Fft2 {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    row_real: Vec<f64>,
    row_cplx: Vec<Complex64>,
    col_buf: Vec<Complex64>,
    r2c_scratch: Vec<Complex64>,
    c2r_scratch: Vec<Complex64>,
    y_scratch: Vec<Complex64>,
    spec_tmp: Array2<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut real_planner = RealFftPlanner::<f64>::new();
        let r2c = real_planner.plan_fft_forward(n);
        let c2r = real_planner.plan_fft_inverse(n);
        let mut planner = FftPlanner::<f64>::new();
        let fwd_y = planner.plan_fft_forward(n);
        let inv_y = planner.plan_fft_inverse(n);
        let r2c_scratch = r2c.make_scratch_vec();
        let c2r_scratch = c2r.make_scratch_vec();
        let y_len = fwd_y
            .get_inplace_scratch_len()
            .max(inv_y.get_inplace_scratch_len());
        Fft2 {
            n,
            r2c,
            c2r,
            fwd_y,
            inv_y,
            row_real: vec![0.0; n],
            row_cplx: vec![Complex64::default(); n / 2 + 1],
            col_buf: vec![Complex64::default(); n],
            r2c_scratch,
            c2r_scratch,
            y_scratch: vec![Complex64::default(); y_len],
            spec_tmp: Array2::zeros((n, n / 2 + 1)),
        }
    }

    pub fn for_grid(grid: &GridSpec) -> Self {
        Self::new(grid.n())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Physical (n×n) to half spectrum (n×(n/2+1)), scaled by 1/n².
    pub fn forward(&mut self, phys: &Array2<f64>, out: &mut Array2<Complex64>) {
        let n = self.n;
        debug_assert_eq!(phys.dim(), (n, n));
        debug_assert_eq!(out.dim(), (n, n / 2 + 1));
        for row in 0..n {
            for i in 0..n {
                self.row_real[i] = phys[[row, i]];
            }
            self.r2c
                .process_with_scratch(&mut self.row_real, &mut self.row_cplx, &mut self.r2c_scratch)
                .expect("r2c lengths match plan");
            for col in 0..=n / 2 {
                self.spec_tmp[[row, col]] = self.row_cplx[col];
            }
        }
        let scale = 1.0 / (n as f64 * n as f64);
        for col in 0..=n / 2 {
            for row in 0..n {
                self.col_buf[row] = self.spec_tmp[[row, col]];
            }
            self.fwd_y
                .process_with_scratch(&mut self.col_buf, &mut self.y_scratch);
            for row in 0..n {
                out[[row, col]] = self.col_buf[row] * scale;
            }
        }
    }

    /// Half spectrum to physical. Inverse of `forward` without extra scaling.
    pub fn inverse(&mut self, spec: &Array2<Complex64>, out: &mut Array2<f64>) {
        let n = self.n;
        debug_assert_eq!(spec.dim(), (n, n / 2 + 1));
        debug_assert_eq!(out.dim(), (n, n));
        for col in 0..=n / 2 {
            for row in 0..n {
                self.col_buf[row] = spec[[row, col]];
            }
            self.inv_y
                .process_with_scratch(&mut self.col_buf, &mut self.y_scratch);
            for row in 0..n {
                self.spec_tmp[[row, col]] = self.col_buf[row];
            }
        }
        for row in 0..n {
            for col in 0..=n / 2 {
                self.row_cplx[col] = self.spec_tmp[[row, col]];
            }
            // the m_x = 0 and m_x = n/2 entries are real up to round-off once
            // the y pass is done; realfft rejects any imaginary residue
            self.row_cplx[0].im = 0.0;
            self.row_cplx[n / 2].im = 0.0;
            self.c2r
                .process_with_scratch(&mut self.row_cplx, &mut self.row_real, &mut self.c2r_scratch)
                .expect("c2r input sanitized");
            for i in 0..n {
                out[[row, i]] = self.row_real[i];
            }
        }
    }
}

impl Clone for Fft2 {
    fn clone(&self) -> Self {
        let n = self.n;
        Fft2 {
            n,
            r2c: Arc::clone(&self.r2c),
            c2r: Arc::clone(&self.c2r),
            fwd_y: Arc::clone(&self.fwd_y),
            inv_y: Arc::clone(&self.inv_y),
            row_real: vec![0.0; n],
            row_cplx: vec![Complex64::default(); n / 2 + 1],
            col_buf: vec![Complex64::default(); n],
            r2c_scratch: self.r2c.make_scratch_vec(),
            c2r_scratch: self.c2r.make_scratch_vec(),
            y_scratch: vec![Complex64::default(); self.y_scratch.len()],
            spec_tmp: Array2::zeros((n, n / 2 + 1)),
        }
    }
}

/// FFT plans plus the physical-space buffers used by the nonlinear term and
/// the interpolants. One per trajectory/thread.
pub struct Workspace {
    pub grid: GridSpec,
    pub fft: Fft2,
    pub(crate) phys: [Array2<f64>; 6],
    pub(crate) spec_a: Array2<Complex64>,
}

impl Workspace {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.n();
        let shape = grid.spectral_shape();
        Workspace {
            grid,
            fft: Fft2::new(n),
            phys: std::array::from_fn(|_| Array2::zeros((n, n))),
            spec_a: Array2::zeros(shape),
        }
    }

    /// Transform a physical scalar into a masked, mean-free spectral field.
    pub fn to_spectral(&mut self, phys: &Array2<f64>) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid);
        self.fft.forward(phys, out.coeffs_mut());
        out.apply_mask();
        out.zero_mean();
        out
    }

    /// Evaluate a spectral scalar on the physical grid.
    pub fn to_physical(&mut self, field: &SpectralField) -> Array2<f64> {
        let n = self.grid.n();
        let mut out = Array2::zeros((n, n));
        self.fft.inverse(field.coeffs(), &mut out);
        out
    }

    /// Evaluate both velocity components on the physical grid.
    pub fn velocity_physical(&mut self, v: &VelocityField) -> (Array2<f64>, Array2<f64>) {
        (self.to_physical(v.x()), self.to_physical(v.y()))
    }

    /// Max pointwise speed, for CFL reporting.
    pub fn max_speed(&mut self, v: &VelocityField) -> f64 {
        let (ux, uy) = self.velocity_physical(v);
        ux.iter()
            .zip(uy.iter())
            .fold(0.0f64, |m, (&a, &b)| m.max((a * a + b * b).sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_physical_spectral_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &n in &[8usize, 32, 48] {
            let mut fft = Fft2::new(n);
            let phys = Array2::from_shape_fn((n, n), |_| rng.random::<f64>() - 0.5);
            let mut spec = Array2::zeros((n, n / 2 + 1));
            let mut back = Array2::zeros((n, n));
            fft.forward(&phys, &mut spec);
            fft.inverse(&spec, &mut back);
            let scale = phys.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            let err = phys
                .iter()
                .zip(back.iter())
                .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
            assert!(err <= 1e-12 * scale, "n = {n}: roundtrip error {err}");
        }
    }

    #[test]
    fn forward_recovers_single_mode_coefficient() {
        // f(x, y) = cos(2π(2x + 3y)) has coefficients 1/2 at ±(2, 3)
        let n = 16;
        let mut fft = Fft2::new(n);
        let phys = Array2::from_shape_fn((n, n), |(j, i)| {
            let x = i as f64 / n as f64;
            let y = j as f64 / n as f64;
            (TWO_PI * (2.0 * x + 3.0 * y)).cos()
        });
        let mut spec = Array2::zeros((n, n / 2 + 1));
        fft.forward(&phys, &mut spec);
        let c = spec[[3, 2]];
        assert!((c - Complex64::new(0.5, 0.0)).norm() < 1e-13);
        let c_mirror = spec[[n - 3, 2]];
        assert!((c_mirror - Complex64::new(0.0, 0.0)).norm() < 1e-13,
            "(2, -3) should be empty, got {c_mirror}");
    }

    use crate::grid::TWO_PI;

    #[test]
    fn spectral_to_physical_matches_mode_definition() {
        let grid = GridSpec::new(16).unwrap();
        let mut ws = Workspace::new(grid);
        let mut f = SpectralField::zeros(grid);
        f.set_mode(1, -2, Complex64::new(0.25, 0.5));
        let phys = ws.to_physical(&f);
        let n = grid.n();
        for &(i, j) in &[(0usize, 0usize), (3, 7), (11, 2)] {
            let x = i as f64 / n as f64;
            let y = j as f64 / n as f64;
            let arg = TWO_PI * (x - 2.0 * y);
            let expect = 2.0 * (0.25 * arg.cos() - 0.5 * arg.sin());
            assert!((phys[[j, i]] - expect).abs() < 1e-12);
        }
    }
}
