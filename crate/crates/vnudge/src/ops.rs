//! The linear operators of the periodic Stokes setting and the dealiased
//! advective nonlinearity.
//!
//! Everything here acts mode-wise except `nonlinear_term`, which evaluates
//! (u·∇)v pseudo-spectrally: transform to the physical grid, multiply,
//! transform back, apply the dealias mask, project.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Workspace;
use crate::field::{SpectralField, VelocityField};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub h2_semi: f64,
}

/// Parseval norms of a velocity field: l2² = Σ|û|², h1² = Σ|k|²|û|²,
/// h2² = Σ|k|⁴|û|², counting the unstored conjugate modes.
pub fn norms(v: &VelocityField) -> Norms {
    let grid = v.grid();
    let (rows, cols) = grid.spectral_shape();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for comp in 0..2 {
        let coeffs = v.component(comp).coeffs();
        for row in 0..rows {
            for col in 0..cols {
                let w = grid.parseval_weight(col);
                let k2 = grid.k2(row, col);
                let e = w * coeffs[[row, col]].norm_sqr();
                s0 += e;
                s1 += k2 * e;
                s2 += k2 * k2 * e;
            }
        }
    }
    Norms {
        l2: s0.sqrt(),
        h1_semi: s1.sqrt(),
        h2_semi: s2.sqrt(),
    }
}

/// Same norms for a single scalar field.
pub fn scalar_norms(f: &SpectralField) -> Norms {
    let grid = f.grid();
    let (rows, cols) = grid.spectral_shape();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let coeffs = f.coeffs();
    for row in 0..rows {
        for col in 0..cols {
            let w = grid.parseval_weight(col);
            let k2 = grid.k2(row, col);
            let e = w * coeffs[[row, col]].norm_sqr();
            s0 += e;
            s1 += k2 * e;
            s2 += k2 * k2 * e;
        }
    }
    Norms {
        l2: s0.sqrt(),
        h1_semi: s1.sqrt(),
        h2_semi: s2.sqrt(),
    }
}

/// Real L² inner product ⟨a, b⟩ over the torus, by Parseval.
pub fn inner_l2(a: &VelocityField, b: &VelocityField) -> f64 {
    let grid = a.grid();
    let (rows, cols) = grid.spectral_shape();
    let mut s = 0.0;
    for comp in 0..2 {
        let ca = a.component(comp).coeffs();
        let cb = b.component(comp).coeffs();
        for row in 0..rows {
            for col in 0..cols {
                let w = grid.parseval_weight(col);
                s += w * (ca[[row, col]] * cb[[row, col]].conj()).re;
            }
        }
    }
    s
}

pub(crate) fn project_pair_in_place(
    grid: GridSpec,
    cx: &mut Array2<Complex64>,
    cy: &mut Array2<Complex64>,
) {
    let (rows, cols) = grid.spectral_shape();
    for row in 0..rows {
        for col in 0..cols {
            let kx = grid.kx(col);
            let ky = grid.ky(row);
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                cx[[row, col]] = Complex64::new(0.0, 0.0);
                cy[[row, col]] = Complex64::new(0.0, 0.0);
                continue;
            }
            let div = (cx[[row, col]] * kx + cy[[row, col]] * ky) / k2;
            cx[[row, col]] -= div * kx;
            cy[[row, col]] -= div * ky;
        }
    }
}

/// Leray–Helmholtz projection of an arbitrary two-component spectral pair
/// onto the divergence-free, mean-free subspace: û ↦ (I − kkᵀ/|k|²)û.
pub fn leray_project(fx: &SpectralField, fy: &SpectralField) -> Result<VelocityField> {
    if fx.grid() != fy.grid() {
        return Err(Error::GridMismatch(
            "leray_project components on different grids".into(),
        ));
    }
    let grid = fx.grid();
    let mut cx = fx.coeffs().clone();
    let mut cy = fy.coeffs().clone();
    project_pair_in_place(grid, &mut cx, &mut cy);
    VelocityField::from_components(
        SpectralField::from_coeffs(grid, cx)?,
        SpectralField::from_coeffs(grid, cy)?,
    )
}

/// Projection applied to an existing velocity field (a no-op up to round-off
/// when the field is already divergence-free).
pub fn leray_project_velocity(v: &VelocityField) -> VelocityField {
    leray_project(v.x(), v.y()).expect("components share a grid")
}

/// Stokes operator A = −P_σΔ: mode-wise multiplication by |k|².
pub fn stokes_apply(v: &VelocityField) -> VelocityField {
    let grid = v.grid();
    let mut out = v.clone();
    let (rows, cols) = grid.spectral_shape();
    for comp in 0..2 {
        let coeffs = out.component_mut(comp).coeffs_mut();
        for row in 0..rows {
            for col in 0..cols {
                coeffs[[row, col]] *= grid.k2(row, col);
            }
        }
    }
    out
}

/// Exact inverse of the Helmholtz operator (I − α²Δ) on mean-free fields:
/// mode-wise division by (1 + α²|k|²). α = 0 is the identity.
pub fn helmholtz_invert(v: &VelocityField, alpha: f64) -> Result<VelocityField> {
    if alpha < 0.0 {
        return Err(Error::invalid("alpha", format!("must be >= 0, got {alpha}")));
    }
    let grid = v.grid();
    let mut out = v.clone();
    let (rows, cols) = grid.spectral_shape();
    let a2 = alpha * alpha;
    for comp in 0..2 {
        let coeffs = out.component_mut(comp).coeffs_mut();
        for row in 0..rows {
            for col in 0..cols {
                coeffs[[row, col]] /= 1.0 + a2 * grid.k2(row, col);
            }
        }
    }
    Ok(out)
}

fn fill_derivative(
    grid: GridSpec,
    src: &Array2<Complex64>,
    axis: usize,
    dst: &mut Array2<Complex64>,
) {
    let (rows, cols) = grid.spectral_shape();
    for row in 0..rows {
        for col in 0..cols {
            let k = if axis == 0 { grid.kx(col) } else { grid.ky(row) };
            dst[[row, col]] = src[[row, col]] * Complex64::new(0.0, k);
        }
    }
}

/// B(u, v) = P_σ((u·∇)v), dealiased with the grid's truncation mask.
pub fn nonlinear_term(
    ws: &mut Workspace,
    u: &VelocityField,
    v: &VelocityField,
) -> Result<VelocityField> {
    let grid = ws.grid;
    if u.grid() != grid || v.grid() != grid {
        return Err(Error::GridMismatch(
            "nonlinear_term inputs do not match the workspace grid".into(),
        ));
    }
    let Workspace {
        fft, phys, spec_a, ..
    } = ws;
    let [ux, uy, ta, tb, tc, td] = phys;

    fft.inverse(u.x().coeffs(), ux);
    fft.inverse(u.y().coeffs(), uy);
    fill_derivative(grid, v.x().coeffs(), 0, spec_a);
    fft.inverse(spec_a, ta); // ∂v_x/∂x
    fill_derivative(grid, v.x().coeffs(), 1, spec_a);
    fft.inverse(spec_a, tb); // ∂v_x/∂y
    fill_derivative(grid, v.y().coeffs(), 0, spec_a);
    fft.inverse(spec_a, tc); // ∂v_y/∂x
    fill_derivative(grid, v.y().coeffs(), 1, spec_a);
    fft.inverse(spec_a, td); // ∂v_y/∂y

    // (u·∇)v, pointwise
    ndarray::Zip::from(&mut *ta)
        .and(&*ux)
        .and(&*uy)
        .and(&*tb)
        .for_each(|a, &x, &y, &b| *a = x * *a + y * b);
    ndarray::Zip::from(&mut *tc)
        .and(&*ux)
        .and(&*uy)
        .and(&*td)
        .for_each(|c, &x, &y, &d| *c = x * *c + y * d);

    let mut out_x: Array2<Complex64> = Array2::zeros(grid.spectral_shape());
    let mut out_y: Array2<Complex64> = Array2::zeros(grid.spectral_shape());
    fft.forward(ta, &mut out_x);
    fft.forward(tc, &mut out_y);
    mask_in_place(grid, &mut out_x);
    mask_in_place(grid, &mut out_y);
    project_pair_in_place(grid, &mut out_x, &mut out_y);
    VelocityField::from_components(
        SpectralField::from_coeffs(grid, out_x)?,
        SpectralField::from_coeffs(grid, out_y)?,
    )
}

pub(crate) fn mask_in_place(grid: GridSpec, coeffs: &mut Array2<Complex64>) {
    let (rows, cols) = grid.spectral_shape();
    for row in 0..rows {
        for col in 0..cols {
            if !grid.retained(row, col) {
                coeffs[[row, col]] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{random_smooth_velocity, SpectralField};
    use crate::grid::LAMBDA_1;

    fn grid32() -> GridSpec {
        GridSpec::new(32).unwrap()
    }

    #[test]
    fn projector_annihilates_gradients() {
        // û(k) = i k g(k) for a scalar g is a pure gradient
        let grid = grid32();
        let mut gx = SpectralField::zeros(grid);
        let mut gy = SpectralField::zeros(grid);
        for (mx, my, amp) in [(1i64, 2i64, 0.7), (3, -1, -0.4), (0, 5, 1.1)] {
            let g = Complex64::new(amp, 0.3 * amp);
            let kx = crate::grid::TWO_PI * mx as f64;
            let ky = crate::grid::TWO_PI * my as f64;
            gx.set_mode(mx, my, Complex64::new(0.0, kx) * g);
            gy.set_mode(mx, my, Complex64::new(0.0, ky) * g);
        }
        let p = leray_project(&gx, &gy).unwrap();
        assert!(p.max_abs() < 1e-14);
    }

    #[test]
    fn projector_is_idempotent_and_fixes_divergence_free_fields() {
        let grid = grid32();
        let v = random_smooth_velocity(grid, 3);
        let pv = leray_project_velocity(&v);
        let diff = pv.difference(&v);
        assert!(diff.max_abs() <= 1e-12 * v.max_abs());
        let ppv = leray_project_velocity(&pv);
        assert!(ppv.difference(&pv).max_abs() <= 1e-13 * pv.max_abs());
        // and it never increases the l2 norm
        let mut gx = SpectralField::zeros(grid);
        let gy = SpectralField::zeros(grid);
        gx.set_mode(2, 2, Complex64::new(1.0, 0.0));
        let q = leray_project(&gx, &gy).unwrap();
        assert!(norms(&q).l2 <= scalar_norms(&gx).l2 + 1e-15);
    }

    #[test]
    fn projector_single_mode_by_hand() {
        // û = (1, 0) at k = 2π(1, 1): (I − kkᵀ/|k|²)û = (1/2, −1/2)
        let grid = grid32();
        let mut fx = SpectralField::zeros(grid);
        let fy = SpectralField::zeros(grid);
        fx.set_mode(1, 1, Complex64::new(1.0, 0.0));
        let p = leray_project(&fx, &fy).unwrap();
        assert!((p.x().mode(1, 1) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((p.y().mode(1, 1) - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn stokes_scales_lowest_mode_by_lambda1() {
        let grid = grid32();
        let mut fx = SpectralField::zeros(grid);
        let fy = SpectralField::zeros(grid);
        fx.set_mode(0, 1, Complex64::new(1.0, -2.0));
        let v = VelocityField::from_components(fx, fy).unwrap();
        let av = stokes_apply(&v);
        let expect = v.x().mode(0, 1) * LAMBDA_1;
        assert!((av.x().mode(0, 1) - expect).norm() < 1e-12);
        let zero = stokes_apply(&VelocityField::zeros(grid));
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn helmholtz_inverts_forward_operator() {
        let grid = grid32();
        let v = random_smooth_velocity(grid, 11);
        // identity at alpha = 0
        let same = helmholtz_invert(&v, 0.0).unwrap();
        assert_eq!(same, v);
        assert!(helmholtz_invert(&v, -0.1).is_err());

        let alpha = 0.7;
        let inv = helmholtz_invert(&v, alpha).unwrap();
        // single lowest mode: divided by 1 + α²·4π²
        let mut fx = SpectralField::zeros(grid);
        let fy = SpectralField::zeros(grid);
        fx.set_mode(0, 1, Complex64::new(1.0, 0.0));
        let single = VelocityField::from_components(fx, fy).unwrap();
        let si = helmholtz_invert(&single, 1.0).unwrap();
        let expect = 1.0 / (1.0 + LAMBDA_1);
        assert!((si.x().mode(0, 1).re - expect).abs() < 1e-15);

        // composing with (1 + α²|k|²)· returns the input to round-off
        let mut fwd = inv.clone();
        let (rows, cols) = grid.spectral_shape();
        for comp in 0..2 {
            let coeffs = fwd.component_mut(comp).coeffs_mut();
            for row in 0..rows {
                for col in 0..cols {
                    coeffs[[row, col]] *= 1.0 + alpha * alpha * grid.k2(row, col);
                }
            }
        }
        assert!(fwd.difference(&v).max_abs() <= 1e-13 * v.max_abs());
    }

    #[test]
    fn norms_of_unit_shear_mode() {
        // u = (sin(2πy), 0): l2 = 1/√2, h1 = 2π·l2
        let grid = grid32();
        let mut fx = SpectralField::zeros(grid);
        let fy = SpectralField::zeros(grid);
        // sin(2πy) = (e^{2πiy} − e^{−2πiy}) / 2i → c(0, 1) = −i/2
        fx.set_mode(0, 1, Complex64::new(0.0, -0.5));
        let v = VelocityField::from_components(fx, fy).unwrap();
        assert!(v.max_divergence() < 1e-14);
        let nm = norms(&v);
        assert!((nm.l2 - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((nm.h1_semi - crate::grid::TWO_PI * nm.l2).abs() < 1e-12);
        let zero = norms(&VelocityField::zeros(grid));
        assert_eq!((zero.l2, zero.h1_semi, zero.h2_semi), (0.0, 0.0, 0.0));
    }

    #[test]
    fn poincare_chain_on_random_fields() {
        for seed in 0..5 {
            let v = random_smooth_velocity(grid32(), seed);
            let nm = norms(&v);
            assert!(LAMBDA_1 * nm.l2 * nm.l2 <= nm.h1_semi * nm.h1_semi * (1.0 + 1e-12));
            assert!(LAMBDA_1 * nm.h1_semi * nm.h1_semi <= nm.h2_semi * nm.h2_semi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn nonlinear_term_of_zero_is_zero() {
        let grid = grid32();
        let mut ws = Workspace::new(grid);
        let z = VelocityField::zeros(grid);
        let v = random_smooth_velocity(grid, 5);
        let b = nonlinear_term(&mut ws, &z, &v).unwrap();
        assert!(b.max_abs() < 1e-15);
    }

    #[test]
    fn bilinear_identities_hold_to_roundoff() {
        let grid = GridSpec::new(64).unwrap();
        let mut ws = Workspace::new(grid);
        for seed in 0..4 {
            let u = random_smooth_velocity(grid, 100 + seed);
            let v = random_smooth_velocity(grid, 200 + seed);
            let w = random_smooth_velocity(grid, 300 + seed);
            let buv = nonlinear_term(&mut ws, &u, &v).unwrap();
            let buw = nonlinear_term(&mut ws, &u, &w).unwrap();
            let bvv = nonlinear_term(&mut ws, &v, &v).unwrap();

            // ⟨B(u,v),w⟩ = −⟨B(u,w),v⟩
            let lhs = inner_l2(&buv, &w);
            let rhs = inner_l2(&buw, &v);
            let scale = norms(&buv).l2 * norms(&w).l2 + norms(&buw).l2 * norms(&v).l2;
            assert!((lhs + rhs).abs() <= 1e-10 * scale, "antisymmetry: {lhs} vs {rhs}");

            // ⟨B(v,v),v⟩ = 0
            let e = inner_l2(&bvv, &v);
            let scale = norms(&bvv).l2 * norms(&v).l2;
            assert!(e.abs() <= 1e-10 * scale, "energy identity: {e}");
        }
    }

    #[test]
    fn enstrophy_orthogonality_and_jacobi_identity() {
        let grid = GridSpec::new(64).unwrap();
        let mut ws = Workspace::new(grid);
        for seed in 0..3 {
            let u = random_smooth_velocity(grid, 400 + seed);
            let w = random_smooth_velocity(grid, 500 + seed);

            // 2D periodic orthogonality ⟨B(w,w), Aw⟩ = 0
            let bww = nonlinear_term(&mut ws, &w, &w).unwrap();
            let aw = stokes_apply(&w);
            let e = inner_l2(&bww, &aw);
            let scale = norms(&bww).l2 * norms(&aw).l2;
            assert!(e.abs() <= 1e-10 * scale, "enstrophy orthogonality: {e}");

            // Jacobi: ⟨B(u,w),Aw⟩ + ⟨B(w,u),Aw⟩ + ⟨B(w,w),Au⟩ = 0
            let buw = nonlinear_term(&mut ws, &u, &w).unwrap();
            let bwu = nonlinear_term(&mut ws, &w, &u).unwrap();
            let au = stokes_apply(&u);
            let t1 = inner_l2(&buw, &aw);
            let t2 = inner_l2(&bwu, &aw);
            let t3 = inner_l2(&bww, &au);
            let scale = t1.abs() + t2.abs() + t3.abs();
            assert!((t1 + t2 + t3).abs() <= 1e-10 * scale, "jacobi: {t1} {t2} {t3}");
        }
    }
}
