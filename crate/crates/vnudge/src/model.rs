//! Right-hand sides of the two evolution systems: the reference 2D
//! Navier-Stokes equations and the nudged Navier-Stokes-Voigt equations.
//!
//! Pressure never appears: every term is projected onto the divergence-free
//! subspace, and the Voigt operator (I − α²Δ)⁻¹ is applied inside the RHS so
//! integrators see an explicit ODE system in spectral space.

use crate::error::{Error, Result};
use crate::fft::Workspace;
use crate::field::{random_band_velocity, VelocityField};
use crate::grid::{GridSpec, LAMBDA_1};
use crate::interp::{self, InterpolantOp};
use crate::ops;

/// Every symbol of the two momentum equations: viscosity ν, Voigt length α,
/// nudging rate μ, the observation operator, and the (time-independent,
/// divergence-free, mean-free) body force.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsParams {
    pub nu: f64,
    pub alpha: f64,
    pub mu: f64,
    pub interpolant: InterpolantOp,
    pub forcing: VelocityField,
    /// Test hook: when false the advective term is skipped, leaving the
    /// linear parts of the equations.
    pub nonlinear: bool,
}

impl PhysicsParams {
    pub fn new(
        nu: f64,
        alpha: f64,
        mu: f64,
        interpolant: InterpolantOp,
        forcing: VelocityField,
    ) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::invalid("physics.nu", format!("must be > 0, got {nu}")));
        }
        if alpha < 0.0 {
            return Err(Error::invalid("physics.alpha", format!("must be >= 0, got {alpha}")));
        }
        if mu < 0.0 {
            return Err(Error::invalid("physics.mu", format!("must be >= 0, got {mu}")));
        }
        let div = forcing.max_divergence();
        if div > 1e-12 * forcing.max_abs().max(1e-300) {
            return Err(Error::invalid(
                "forcing",
                format!("must be divergence-free, residual {div:.3e}"),
            ));
        }
        let mut forcing = forcing;
        forcing.zero_mean();
        Ok(PhysicsParams {
            nu,
            alpha,
            mu,
            interpolant,
            forcing,
            nonlinear: true,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.forcing.grid()
    }
}

/// Dimensionless Grashof number G = ‖f‖ / (ν²λ₁) with λ₁ = 4π².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrashofReport {
    pub g: f64,
    pub f_l2: f64,
    pub lambda1: f64,
}

pub fn grashof(p: &PhysicsParams) -> GrashofReport {
    let f_l2 = ops::norms(&p.forcing).l2;
    GrashofReport {
        g: f_l2 / (p.nu * p.nu * LAMBDA_1),
        f_l2,
        lambda1: LAMBDA_1,
    }
}

/// Band-limited random divergence-free forcing supported on
/// lo <= |k|/2π <= hi, normalized so the Grashof number equals `grashof`.
pub fn band_limited_forcing(
    grid: GridSpec,
    lo: f64,
    hi: f64,
    grashof: f64,
    nu: f64,
    seed: u64,
) -> Result<VelocityField> {
    if grashof < 0.0 {
        return Err(Error::invalid("forcing.grashof", "must be >= 0".to_string()));
    }
    if !(lo >= 1.0 && hi >= lo) {
        return Err(Error::invalid(
            "forcing.band",
            format!("need 1 <= lo <= hi, got [{lo}, {hi}]"),
        ));
    }
    let mut f = random_band_velocity(grid, lo, hi, seed);
    if grashof == 0.0 {
        return Ok(VelocityField::zeros(grid));
    }
    let target_l2 = grashof * nu * nu * LAMBDA_1;
    let current = ops::norms(&f).l2;
    if current == 0.0 {
        return Err(Error::invalid(
            "forcing.band",
            format!("band [{lo}, {hi}] contains no retained modes on n = {}", grid.n()),
        ));
    }
    f.scale(target_l2 / current);
    Ok(f)
}

/// RHS of the reference system: P_σ(−(u·∇)u + νΔu + f).
pub fn nse_rhs(ws: &mut Workspace, u: &VelocityField, p: &PhysicsParams) -> Result<VelocityField> {
    if u.grid() != p.forcing.grid() {
        return Err(Error::GridMismatch(
            "state and forcing grids differ".into(),
        ));
    }
    let mut rhs = if p.nonlinear {
        let mut b = ops::nonlinear_term(ws, u, u)?;
        b.scale(-1.0);
        b
    } else {
        VelocityField::zeros(u.grid())
    };
    add_diffusion(&mut rhs, u, p.nu);
    rhs.add_scaled(1.0, &p.forcing);
    Ok(rhs)
}

/// RHS of the nudged Voigt system:
/// (I − α²Δ)⁻¹ P_σ(−(v·∇)v + νΔv + f + μ(obs − I_h(v))),
/// where `obs` is the already-interpolated observation I_h(u).
pub fn voigt_nudged_rhs(
    ws: &mut Workspace,
    v: &VelocityField,
    obs: &VelocityField,
    p: &PhysicsParams,
) -> Result<VelocityField> {
    let nudge = nudging_term(ws, v, obs, p)?;
    voigt_rhs_with_frozen_nudge(ws, v, nudge.as_ref(), p)
}

/// μ(obs − I_h(v)) as a spectral field; `None` when μ = 0.
pub(crate) fn nudging_term(
    ws: &mut Workspace,
    v: &VelocityField,
    obs: &VelocityField,
    p: &PhysicsParams,
) -> Result<Option<VelocityField>> {
    if p.mu == 0.0 {
        return Ok(None);
    }
    if obs.grid() != v.grid() {
        return Err(Error::GridMismatch("observation grid differs from state".into()));
    }
    let ihv = interp::apply(ws, &p.interpolant, v)?;
    let mut nudge = obs.difference(&ihv);
    nudge.scale(p.mu);
    Ok(Some(nudge))
}

/// Voigt RHS with the nudging contribution supplied by the caller. Steppers
/// evaluate the nudging once per step from the pre-step state and hold it
/// fixed across stages.
pub(crate) fn voigt_rhs_with_frozen_nudge(
    ws: &mut Workspace,
    v: &VelocityField,
    nudge: Option<&VelocityField>,
    p: &PhysicsParams,
) -> Result<VelocityField> {
    if v.grid() != p.forcing.grid() {
        return Err(Error::GridMismatch(
            "state and forcing grids differ".into(),
        ));
    }
    let mut rhs = if p.nonlinear {
        let mut b = ops::nonlinear_term(ws, v, v)?;
        b.scale(-1.0);
        b
    } else {
        VelocityField::zeros(v.grid())
    };
    add_diffusion(&mut rhs, v, p.nu);
    rhs.add_scaled(1.0, &p.forcing);
    if let Some(nudge) = nudge {
        rhs.add_scaled(1.0, nudge);
    }
    // (I − α²Δ)⁻¹, diagonal in spectral space; exact identity at α = 0
    let grid = v.grid();
    let a2 = p.alpha * p.alpha;
    let (rows, cols) = grid.spectral_shape();
    for comp in 0..2 {
        let coeffs = rhs.component_mut(comp).coeffs_mut();
        for row in 0..rows {
            for col in 0..cols {
                coeffs[[row, col]] /= 1.0 + a2 * grid.k2(row, col);
            }
        }
    }
    Ok(rhs)
}

fn add_diffusion(rhs: &mut VelocityField, state: &VelocityField, nu: f64) {
    let grid = state.grid();
    let (rows, cols) = grid.spectral_shape();
    for comp in 0..2 {
        let r = rhs.component_mut(comp);
        let s = state.component(comp).coeffs();
        for row in 0..rows {
            for col in 0..cols {
                r.coeffs_mut()[[row, col]] -= s[[row, col]] * (nu * grid.k2(row, col));
            }
        }
    }
}
