//! Grid geometry and wavenumber bookkeeping for the unit torus T² = [0,1)².
//!
//! All wavenumbers are 2π times an integer mode index. The half-spectrum
//! layout follows the usual real-to-complex convention: an n×n physical grid
//! maps to n rows (the y mode index, wrapped) by n/2+1 columns (the
//! non-negative x mode index).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// First eigenvalue of the Stokes operator on the unit torus.
pub const LAMBDA_1: f64 = 4.0 * PI * PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Resolution and dealiasing cutoff for one periodic grid.
///
/// The dealias fraction is kept as an exact rational so the cutoff index is
/// computed without floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    n: usize,
    dealias_num: u32,
    dealias_den: u32,
}

impl GridSpec {
    /// Grid with the standard 2/3 dealiasing rule.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_dealias(n, 2, 3)
    }

    pub fn with_dealias(n: usize, num: u32, den: u32) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::invalid("grid.n", format!("must be even and >= 8, got {n}")));
        }
        if num == 0 || den == 0 || num > den {
            return Err(Error::invalid(
                "grid.dealias",
                format!("fraction must lie in (0, 1], got {num}/{den}"),
            ));
        }
        Ok(GridSpec {
            n,
            dealias_num: num,
            dealias_den: den,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dealias_fraction(&self) -> (u32, u32) {
        (self.dealias_num, self.dealias_den)
    }

    /// Shape of the stored half spectrum: (n rows, n/2 + 1 columns).
    pub fn spectral_shape(&self) -> (usize, usize) {
        (self.n, self.n / 2 + 1)
    }

    /// Largest retained mode index: |m| <= floor(fraction * n/2), exact in
    /// integer arithmetic.
    pub fn cutoff(&self) -> usize {
        (self.dealias_num as usize * (self.n / 2)) / self.dealias_den as usize
    }

    /// Signed x mode index for a stored column (always non-negative).
    #[inline]
    pub fn mode_x(&self, col: usize) -> i64 {
        col as i64
    }

    /// Signed y mode index for a stored row, wrapped to (-n/2, n/2].
    #[inline]
    pub fn mode_y(&self, row: usize) -> i64 {
        if row <= self.n / 2 {
            row as i64
        } else {
            row as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn kx(&self, col: usize) -> f64 {
        TWO_PI * self.mode_x(col) as f64
    }

    #[inline]
    pub fn ky(&self, row: usize) -> f64 {
        TWO_PI * self.mode_y(row) as f64
    }

    /// Squared wavenumber magnitude |k|² at a stored position.
    #[inline]
    pub fn k2(&self, row: usize, col: usize) -> f64 {
        let kx = self.kx(col);
        let ky = self.ky(row);
        kx * kx + ky * ky
    }

    /// Whether the mode survives the dealias mask.
    #[inline]
    pub fn retained(&self, row: usize, col: usize) -> bool {
        let c = self.cutoff() as i64;
        self.mode_x(col).abs() <= c && self.mode_y(row).abs() <= c
    }

    /// Parseval multiplicity of a stored column: the x=0 and x=n/2 columns
    /// represent themselves, every other column also stands for its unstored
    /// conjugate mirror.
    #[inline]
    pub fn parseval_weight(&self, col: usize) -> f64 {
        if col == 0 || col == self.n / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// Wrap a signed y mode index into a storage row.
    #[inline]
    pub fn row_of_mode_y(&self, my: i64) -> usize {
        let n = self.n as i64;
        (((my % n) + n) % n) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_grids() {
        assert!(GridSpec::new(31).is_err());
        assert!(GridSpec::new(6).is_err());
        assert!(GridSpec::new(8).is_ok());
    }

    #[test]
    fn cutoff_is_exact_for_awkward_sizes() {
        // 2/3 * 64 = 42.67 -> 42; float arithmetic would be fragile at n = 96
        assert_eq!(GridSpec::new(128).unwrap().cutoff(), 42);
        assert_eq!(GridSpec::new(96).unwrap().cutoff(), 32);
        assert_eq!(GridSpec::new(32).unwrap().cutoff(), 10);
        assert_eq!(GridSpec::with_dealias(32, 1, 1).unwrap().cutoff(), 16);
    }

    #[test]
    fn mode_wrapping() {
        let g = GridSpec::new(8).unwrap();
        assert_eq!(g.mode_y(0), 0);
        assert_eq!(g.mode_y(4), 4);
        assert_eq!(g.mode_y(5), -3);
        assert_eq!(g.mode_y(7), -1);
        assert_eq!(g.row_of_mode_y(-1), 7);
        assert_eq!(g.row_of_mode_y(4), 4);
    }

    #[test]
    fn smallest_nonzero_k2_is_lambda1() {
        let g = GridSpec::new(16).unwrap();
        let mut min_k2 = f64::INFINITY;
        for row in 0..16 {
            for col in 0..=8 {
                let k2 = g.k2(row, col);
                if k2 > 0.0 {
                    min_k2 = min_k2.min(k2);
                }
            }
        }
        assert!((min_k2 - LAMBDA_1).abs() < 1e-12);
    }
}
