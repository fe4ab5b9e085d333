//! Spectral representations of periodic scalar and velocity fields.
//!
//! A `SpectralField` stores the truncated Fourier coefficients of one real,
//! mean-free scalar on the unit torus in half-spectrum layout. A
//! `VelocityField` is a pair of such fields constrained to be divergence-free.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, TWO_PI};

/// One real scalar field as Fourier coefficients c(m_x, m_y) with
/// m_x ∈ [0, n/2] stored and negative m_x implied by conjugate symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Array2<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField {
            grid,
            coeffs: Array2::zeros(grid.spectral_shape()),
        }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Array2<Complex64>) -> Result<Self> {
        if coeffs.dim() != grid.spectral_shape() {
            return Err(Error::GridMismatch(format!(
                "coefficient array {:?} does not match grid n = {}",
                coeffs.dim(),
                grid.n()
            )));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    /// Mutable coefficient access. Callers are responsible for keeping the
    /// Hermitian-symmetry, mean-free and dealias-mask invariants.
    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    /// Set the coefficient of mode (m_x, m_y) together with its conjugate
    /// mirror so the physical field stays real. For self-conjugate modes
    /// (both indices 0 or n/2) only the real part is kept.
    pub fn set_mode(&mut self, mx: i64, my: i64, value: Complex64) {
        let n = self.grid.n() as i64;
        let half = n / 2;
        assert!(mx > -half && mx <= half && my > -half && my <= half,
            "mode ({mx}, {my}) outside retained index range of n = {n}");
        if mx < 0 {
            self.set_mode(-mx, -my, value.conj());
            return;
        }
        let row = self.grid.row_of_mode_y(my);
        let col = mx as usize;
        if mx == 0 || mx == half {
            // mirror lives in the same stored column
            let mrow = self.grid.row_of_mode_y(-my);
            if mrow == row {
                self.coeffs[[row, col]] = Complex64::new(value.re, 0.0);
            } else {
                self.coeffs[[row, col]] = value;
                self.coeffs[[mrow, col]] = value.conj();
            }
        } else {
            self.coeffs[[row, col]] = value;
        }
    }

    /// Coefficient of mode (m_x, m_y), resolving negative m_x through the
    /// conjugate mirror.
    pub fn mode(&self, mx: i64, my: i64) -> Complex64 {
        if mx < 0 {
            return self.mode(-mx, -my).conj();
        }
        let row = self.grid.row_of_mode_y(my);
        self.coeffs[[row, mx as usize]]
    }

    /// Zero the mean mode.
    pub fn zero_mean(&mut self) {
        self.coeffs[[0, 0]] = Complex64::new(0.0, 0.0);
    }

    /// Zero every mode outside the dealias cutoff.
    pub fn apply_mask(&mut self) {
        let grid = self.grid;
        let (rows, cols) = grid.spectral_shape();
        for row in 0..rows {
            for col in 0..cols {
                if !grid.retained(row, col) {
                    self.coeffs[[row, col]] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Restore exact conjugate symmetry on the self-mirrored columns
    /// (m_x = 0 and m_x = n/2) by averaging each pair.
    pub fn hermitian_fix(&mut self) {
        let n = self.grid.n();
        for &col in &[0usize, n / 2] {
            self.coeffs[[0, col]] = Complex64::new(self.coeffs[[0, col]].re, 0.0);
            self.coeffs[[n / 2, col]] = Complex64::new(self.coeffs[[n / 2, col]].re, 0.0);
            for row in 1..n / 2 {
                let a = self.coeffs[[row, col]];
                let b = self.coeffs[[n - row, col]];
                let avg = 0.5 * (a + b.conj());
                self.coeffs[[row, col]] = avg;
                self.coeffs[[n - row, col]] = avg.conj();
            }
        }
    }

    /// Largest deviation from conjugate symmetry on the stored columns.
    pub fn hermitian_error(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for &col in &[0usize, n / 2] {
            worst = worst.max(self.coeffs[[0, col]].im.abs());
            worst = worst.max(self.coeffs[[n / 2, col]].im.abs());
            for row in 1..n / 2 {
                let d = self.coeffs[[row, col]] - self.coeffs[[n - row, col]].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Spectral derivative along the given axis (0 = x, 1 = y).
    pub fn derivative(&self, axis: usize) -> SpectralField {
        let grid = self.grid;
        let mut out = self.clone();
        let (rows, cols) = grid.spectral_shape();
        for row in 0..rows {
            for col in 0..cols {
                let k = if axis == 0 { grid.kx(col) } else { grid.ky(row) };
                out.coeffs[[row, col]] = self.coeffs[[row, col]] * Complex64::new(0.0, k);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Two-component divergence-free, mean-free velocity field in spectral form.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    components: [SpectralField; 2],
}

impl VelocityField {
    pub fn zeros(grid: GridSpec) -> Self {
        VelocityField {
            components: [SpectralField::zeros(grid), SpectralField::zeros(grid)],
        }
    }

    pub fn from_components(x: SpectralField, y: SpectralField) -> Result<Self> {
        if x.grid() != y.grid() {
            return Err(Error::GridMismatch(
                "velocity components live on different grids".into(),
            ));
        }
        Ok(VelocityField { components: [x, y] })
    }

    pub fn grid(&self) -> GridSpec {
        self.components[0].grid()
    }

    pub fn x(&self) -> &SpectralField {
        &self.components[0]
    }

    pub fn y(&self) -> &SpectralField {
        &self.components[1]
    }

    pub fn x_mut(&mut self) -> &mut SpectralField {
        &mut self.components[0]
    }

    pub fn y_mut(&mut self) -> &mut SpectralField {
        &mut self.components[1]
    }

    pub fn component(&self, i: usize) -> &SpectralField {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut SpectralField {
        &mut self.components[i]
    }

    pub fn apply_mask(&mut self) {
        self.components[0].apply_mask();
        self.components[1].apply_mask();
    }

    pub fn zero_mean(&mut self) {
        self.components[0].zero_mean();
        self.components[1].zero_mean();
    }

    pub fn max_abs(&self) -> f64 {
        self.components[0].max_abs().max(self.components[1].max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.components[0].is_finite() && self.components[1].is_finite()
    }

    /// self *= a
    pub fn scale(&mut self, a: f64) {
        for comp in &mut self.components {
            comp.coeffs.mapv_inplace(|c| c * a);
        }
    }

    /// self += a * other
    pub fn add_scaled(&mut self, a: f64, other: &VelocityField) {
        for (comp, oc) in self.components.iter_mut().zip(other.components.iter()) {
            ndarray::Zip::from(&mut comp.coeffs)
                .and(&oc.coeffs)
                .for_each(|c, &o| *c += o * a);
        }
    }

    /// self[mode] *= factors[mode], with a real per-mode factor array.
    pub fn mul_per_mode(&mut self, factors: &Array2<f64>) {
        for comp in &mut self.components {
            ndarray::Zip::from(&mut comp.coeffs)
                .and(factors)
                .for_each(|c, &f| *c *= f);
        }
    }

    /// Returns self - other.
    pub fn difference(&self, other: &VelocityField) -> VelocityField {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    /// Largest |k·û| over retained modes, the spectral divergence residual.
    pub fn max_divergence(&self) -> f64 {
        let grid = self.grid();
        let (rows, cols) = grid.spectral_shape();
        let mut worst: f64 = 0.0;
        for row in 0..rows {
            for col in 0..cols {
                let d = grid.kx(col) * self.components[0].coeffs[[row, col]]
                    + grid.ky(row) * self.components[1].coeffs[[row, col]];
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

/// The Taylor-Green vortex u = A(sin 2πx cos 2πy, −cos 2πx sin 2πy),
/// an exact Navier-Stokes solution whose advective term is a pure gradient.
pub fn taylor_green(grid: GridSpec, amplitude: f64) -> VelocityField {
    let mut ux = SpectralField::zeros(grid);
    let mut uy = SpectralField::zeros(grid);
    let quarter = 0.25 * amplitude;
    // sin a cos b has coefficients ∓i/4 at m_x = ±1; −cos a sin b mixes signs
    ux.set_mode(1, 1, Complex64::new(0.0, -quarter));
    ux.set_mode(1, -1, Complex64::new(0.0, -quarter));
    uy.set_mode(1, 1, Complex64::new(0.0, quarter));
    uy.set_mode(1, -1, Complex64::new(0.0, -quarter));
    VelocityField::from_components(ux, uy).expect("same grid")
}

/// Divergence-free random field built from a streamfunction with mode
/// amplitudes |ψ̂| ∝ |m|^(-4), giving a velocity spectrum |û| ∝ |m|^(-3).
/// Deterministic for a given grid and seed.
pub fn random_smooth_velocity(grid: GridSpec, seed: u64) -> VelocityField {
    random_streamfunction_velocity(grid, seed, |m| m.powi(-4))
}

/// Divergence-free random field supported on the radial band
/// lo <= |k|/2π <= hi with unit streamfunction amplitudes.
pub fn random_band_velocity(grid: GridSpec, lo: f64, hi: f64, seed: u64) -> VelocityField {
    random_streamfunction_velocity(
        grid,
        seed,
        move |m| if m >= lo && m <= hi { 1.0 } else { 0.0 },
    )
}

fn random_streamfunction_velocity(
    grid: GridSpec,
    seed: u64,
    amplitude: impl Fn(f64) -> f64,
) -> VelocityField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = grid.spectral_shape();
    let n = grid.n();
    let mut psi = SpectralField::zeros(grid);
    for row in 0..rows {
        for col in 0..cols {
            // draw the phase unconditionally so the stream is independent of
            // the dealias cutoff
            let phase: f64 = rng.random::<f64>() * TWO_PI;
            if !grid.retained(row, col) {
                continue;
            }
            // the self-mirrored columns get their lower half by conjugation,
            // keeping every mode modulus exactly at the target amplitude
            if (col == 0 || col == n / 2) && row > n / 2 {
                continue;
            }
            let mx = grid.mode_x(col) as f64;
            let my = grid.mode_y(row) as f64;
            let m = (mx * mx + my * my).sqrt();
            if m < 0.5 {
                continue;
            }
            let a = amplitude(m);
            if a == 0.0 {
                continue;
            }
            psi.coeffs[[row, col]] = Complex64::from_polar(a, phase);
            if (col == 0 || col == n / 2) && row >= 1 {
                psi.coeffs[[n - row, col]] = Complex64::from_polar(a, -phase);
            }
        }
    }
    // corner modes of the self-mirrored columns must be real
    for &col in &[0usize, n / 2] {
        for &row in &[0usize, n / 2] {
            let c = psi.coeffs[[row, col]];
            psi.coeffs[[row, col]] = Complex64::new(c.re, 0.0);
        }
    }
    psi.zero_mean();
    // u = curl ψ = (∂ψ/∂y, -∂ψ/∂x), divergence-free by construction
    let ux = psi.derivative(1);
    let mut uy = psi.derivative(0);
    uy.coeffs.mapv_inplace(|c| -c);
    let mut v = VelocityField::from_components(ux, uy).expect("same grid");
    v.apply_mask();
    v.zero_mean();
    v
}
