//! Built-in property suite behind the `verify` subcommand: the operator
//! identities, the interpolation bound, and the analytic Taylor-Green decay,
//! each reported with its measured residual.

use crate::fft::Workspace;
use crate::field::{random_smooth_velocity, taylor_green, VelocityField};
use crate::grid::{GridSpec, LAMBDA_1};
use crate::interp::{self, InterpolantKind, InterpolantOp};
use crate::model::PhysicsParams;
use crate::ops;
use crate::stepper::{RhsKind, Scheme, Stepper, StepperConfig};

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Run every property. `mutate_bilinear` is a development hook that swaps in
/// a sign-broken advective term so the suite's sensitivity can be checked;
/// the identities must then fail.
pub fn run_property_suite(mutate_bilinear: bool) -> Vec<PropertyResult> {
    let mut results = Vec::new();
    let grid = GridSpec::new(64).unwrap();
    let mut ws = Workspace::new(grid);

    // FFT round trip
    {
        let v = random_smooth_velocity(grid, 2024);
        let phys = ws.to_physical(v.x());
        let back = ws.to_spectral(&phys);
        let err = crate::ops::scalar_norms(&field_diff(v.x(), &back)).l2
            / crate::ops::scalar_norms(v.x()).l2;
        results.push(PropertyResult {
            name: "fft_roundtrip",
            pass: err <= 1e-12,
            detail: format!("relative error {err:.3e}"),
        });
    }

    // Leray projector: idempotent, annihilates gradients
    {
        let v = random_smooth_velocity(grid, 7);
        let pv = ops::leray_project_velocity(&v);
        let idem = pv.difference(&ops::leray_project_velocity(&pv)).max_abs();
        let fixed = pv.difference(&v).max_abs();
        let scale = v.max_abs();
        let pass = idem <= 1e-12 * scale && fixed <= 1e-12 * scale;
        results.push(PropertyResult {
            name: "leray_projector",
            pass,
            detail: format!("idempotence {idem:.3e}, fixes div-free {fixed:.3e}"),
        });
    }

    // Poincaré chain with λ₁ = 4π²
    {
        let mut pass = true;
        let mut worst = 0.0f64;
        for seed in 0..8 {
            let v = random_smooth_velocity(grid, 900 + seed);
            let nm = ops::norms(&v);
            let r1 = LAMBDA_1 * nm.l2 * nm.l2 / (nm.h1_semi * nm.h1_semi);
            let r2 = LAMBDA_1 * nm.h1_semi * nm.h1_semi / (nm.h2_semi * nm.h2_semi);
            worst = worst.max(r1).max(r2);
            pass &= r1 <= 1.0 + 1e-12 && r2 <= 1.0 + 1e-12;
        }
        results.push(PropertyResult {
            name: "poincare_chain",
            pass,
            detail: format!("worst ratio {worst:.6}"),
        });
    }

    // Bilinear identities, optionally with the mutated advective term
    {
        let b = |ws: &mut Workspace, a: &VelocityField, c: &VelocityField| {
            if mutate_bilinear {
                broken_nonlinear_term(ws, a, c)
            } else {
                ops::nonlinear_term(ws, a, c).unwrap()
            }
        };
        let u = random_smooth_velocity(grid, 31);
        let v = random_smooth_velocity(grid, 32);
        let w = random_smooth_velocity(grid, 33);
        let buv = b(&mut ws, &u, &v);
        let buw = b(&mut ws, &u, &w);
        let bvv = b(&mut ws, &v, &v);
        let bww = b(&mut ws, &w, &w);
        let anti = (ops::inner_l2(&buv, &w) + ops::inner_l2(&buw, &v)).abs()
            / (ops::norms(&buv).l2 * ops::norms(&w).l2 + 1e-300);
        let energy = ops::inner_l2(&bvv, &v).abs() / (ops::norms(&bvv).l2 * ops::norms(&v).l2 + 1e-300);
        let aw = ops::stokes_apply(&w);
        let au = ops::stokes_apply(&u);
        let enstrophy = ops::inner_l2(&bww, &aw).abs()
            / (ops::norms(&bww).l2 * ops::norms(&aw).l2 + 1e-300);
        let bwu = b(&mut ws, &w, &u);
        let t1 = ops::inner_l2(&buw, &aw);
        let t2 = ops::inner_l2(&bwu, &aw);
        let t3 = ops::inner_l2(&bww, &au);
        let jacobi = (t1 + t2 + t3).abs() / (t1.abs() + t2.abs() + t3.abs() + 1e-300);
        let pass = anti <= 1e-10 && energy <= 1e-10 && enstrophy <= 1e-10 && jacobi <= 1e-10;
        results.push(PropertyResult {
            name: "bilinear_identities",
            pass,
            detail: format!(
                "antisymmetry {anti:.3e}, energy {energy:.3e}, enstrophy {enstrophy:.3e}, jacobi {jacobi:.3e}"
            ),
        });
    }

    // Interpolation bound for the Fourier kind: certified c1 <= 1/(2π)
    {
        let op = InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap();
        match interp::certify_c1(&mut ws, &op, grid, 100, 4242) {
            Ok(c1) => {
                let bound = 1.0 / (2.0 * std::f64::consts::PI);
                results.push(PropertyResult {
                    name: "interpolant_bound",
                    pass: c1 <= bound + 1e-10,
                    detail: format!("certified c1 = {c1:.6} (Parseval bound {bound:.6})"),
                });
            }
            Err(e) => results.push(PropertyResult {
                name: "interpolant_bound",
                pass: false,
                detail: format!("certification failed: {e}"),
            }),
        }
    }

    // Taylor-Green analytic decay
    {
        let tg_grid = GridSpec::new(32).unwrap();
        let nu = 0.01;
        let p = PhysicsParams::new(
            nu,
            0.0,
            0.0,
            InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap(),
            VelocityField::zeros(tg_grid),
        )
        .unwrap();
        let cfg = StepperConfig {
            dt: 1e-3,
            scheme: Scheme::IfRk4,
            t_end: 0.1,
            cfl_limit: 0.5,
        };
        let mut stepper = Stepper::new(RhsKind::Nse, &cfg, tg_grid, &p).unwrap();
        let mut u = taylor_green(tg_grid, 1.0);
        let mut ok = true;
        for _ in 0..100 {
            match stepper.step(&u, &p, None) {
                Ok(next) => u = next,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        let mut expect = taylor_green(tg_grid, 1.0);
        expect.scale((-8.0 * std::f64::consts::PI.powi(2) * nu * 0.1).exp());
        let err = ops::norms(&u.difference(&expect)).l2 / ops::norms(&expect).l2;
        results.push(PropertyResult {
            name: "taylor_green_decay",
            pass: ok && err <= 1e-8,
            detail: format!("relative l2 error {err:.3e}"),
        });
    }

    results
}

fn field_diff(a: &crate::field::SpectralField, b: &crate::field::SpectralField) -> crate::field::SpectralField {
    let mut out = a.clone();
    ndarray::Zip::from(out.coeffs_mut())
        .and(b.coeffs())
        .for_each(|o, &bc| *o -= bc);
    out
}

/// Deliberately wrong advective term (the y-advection enters with a flipped
/// sign) used to demonstrate that the identity checks catch sign errors.
fn broken_nonlinear_term(ws: &mut Workspace, u: &VelocityField, v: &VelocityField) -> VelocityField {
    let (ux, uy) = ws.velocity_physical(u);
    let dvx_dx = ws.to_physical(&v.x().derivative(0));
    let dvx_dy = ws.to_physical(&v.x().derivative(1));
    let dvy_dx = ws.to_physical(&v.y().derivative(0));
    let dvy_dy = ws.to_physical(&v.y().derivative(1));
    let wx = &ux * &dvx_dx - &uy * &dvx_dy;
    let wy = &ux * &dvy_dx - &uy * &dvy_dy;
    let fx = ws.to_spectral(&wx);
    let fy = ws.to_spectral(&wy);
    ops::leray_project(&fx, &fy).expect("same grid")
}
