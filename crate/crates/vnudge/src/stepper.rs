//! Deterministic time stepping shared by both systems.
//!
//! Two schemes: an integrating-factor RK4 that treats the diffusive part
//! exactly through per-mode exponential factors, and a Crank-Nicolson /
//! Adams-Bashforth-2 pair. The same step logic drives the reference and the
//! assimilation run so the twin error is not polluted by scheme mismatch.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fft::Workspace;
use crate::field::VelocityField;
use crate::grid::GridSpec;
use crate::interp;
use crate::model::{self, PhysicsParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    IfRk4,
    ImexCnab2,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::IfRk4 => "if_rk4",
            Scheme::ImexCnab2 => "imex_cnab2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "if_rk4" => Some(Scheme::IfRk4),
            "imex_cnab2" => Some(Scheme::ImexCnab2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Advisory Courant number; exceeding it is reported, not fatal.
    pub cfl_limit: f64,
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::invalid("stepper.dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.t_end < 0.0 {
            return Err(Error::invalid(
                "stepper.t_end",
                format!("must be >= 0, got {}", self.t_end),
            ));
        }
        if !(self.cfl_limit > 0.0) {
            return Err(Error::invalid(
                "stepper.cfl_limit",
                format!("must be > 0, got {}", self.cfl_limit),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsKind {
    Nse,
    VoigtNudged,
}

/// One trajectory's integrator: per-mode linear factors precomputed for a
/// fixed (scheme, system, parameters, dt) combination, plus the multistep
/// history for CNAB2.
pub struct Stepper {
    kind: RhsKind,
    scheme: Scheme,
    dt: f64,
    t: f64,
    e_half: Array2<f64>,
    e_full: Array2<f64>,
    cn_mul: Array2<f64>,
    cn_div: Array2<f64>,
    prev_explicit: Option<VelocityField>,
    pub ws: Workspace,
}

impl Stepper {
    pub fn new(kind: RhsKind, cfg: &StepperConfig, grid: GridSpec, p: &PhysicsParams) -> Result<Self> {
        cfg.validate()?;
        if kind == RhsKind::VoigtNudged && p.mu * cfg.dt > 0.5 {
            return Err(Error::invalid(
                "stepper.dt",
                format!(
                    "explicit nudging needs mu*dt <= 0.5, got {:.3}",
                    p.mu * cfg.dt
                ),
            ));
        }
        let (rows, cols) = grid.spectral_shape();
        let mut e_half = Array2::zeros((rows, cols));
        let mut e_full = Array2::zeros((rows, cols));
        let mut cn_mul = Array2::zeros((rows, cols));
        let mut cn_div = Array2::zeros((rows, cols));
        let a2 = p.alpha * p.alpha;
        for row in 0..rows {
            for col in 0..cols {
                let k2 = grid.k2(row, col);
                // diffusive eigenvalue of the system seen by the integrator
                let l = match kind {
                    RhsKind::Nse => -p.nu * k2,
                    RhsKind::VoigtNudged => -p.nu * k2 / (1.0 + a2 * k2),
                };
                e_half[[row, col]] = (0.5 * cfg.dt * l).exp();
                e_full[[row, col]] = (cfg.dt * l).exp();
                cn_mul[[row, col]] = 1.0 + 0.5 * cfg.dt * l;
                cn_div[[row, col]] = 1.0 / (1.0 - 0.5 * cfg.dt * l);
            }
        }
        Ok(Stepper {
            kind,
            scheme: cfg.scheme,
            dt: cfg.dt,
            t: 0.0,
            e_half,
            e_full,
            cn_mul,
            cn_div,
            prev_explicit: None,
            ws: Workspace::new(grid),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn set_time(&mut self, t: f64) {
        self.t = t;
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Drop multistep history (after a discontinuous restart).
    pub fn reset_history(&mut self) {
        self.prev_explicit = None;
    }

    /// Everything outside the integrating factor: advection, forcing and,
    /// for the Voigt system, the frozen nudging term, all behind the
    /// Helmholtz inverse where applicable.
    fn explicit_rhs(
        &mut self,
        state: &VelocityField,
        p: &PhysicsParams,
        nudge: Option<&VelocityField>,
    ) -> Result<VelocityField> {
        match self.kind {
            RhsKind::Nse => {
                let mut rhs = if p.nonlinear {
                    let mut b = crate::ops::nonlinear_term(&mut self.ws, state, state)?;
                    b.scale(-1.0);
                    b
                } else {
                    VelocityField::zeros(state.grid())
                };
                rhs.add_scaled(1.0, &p.forcing);
                Ok(rhs)
            }
            RhsKind::VoigtNudged => {
                // model::voigt_rhs_with_frozen_nudge includes diffusion, which
                // the integrating factor owns here; assemble without it.
                let grid = state.grid();
                let mut rhs = if p.nonlinear {
                    let mut b = crate::ops::nonlinear_term(&mut self.ws, state, state)?;
                    b.scale(-1.0);
                    b
                } else {
                    VelocityField::zeros(grid)
                };
                rhs.add_scaled(1.0, &p.forcing);
                if let Some(nudge) = nudge {
                    rhs.add_scaled(1.0, nudge);
                }
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
        }
    }

    /// Advance one dt. `obs` is the interpolated observation I_h(u) taken at
    /// the beginning of the step; it is required exactly when the system is
    /// the nudged one with μ > 0.
    pub fn step(
        &mut self,
        state: &VelocityField,
        p: &PhysicsParams,
        obs: Option<&VelocityField>,
    ) -> Result<VelocityField> {
        let nudge = match self.kind {
            RhsKind::Nse => None,
            RhsKind::VoigtNudged => {
                if p.mu > 0.0 {
                    let obs = obs.ok_or_else(|| {
                        Error::invalid("obs", "nudged step with mu > 0 needs an observation".to_string())
                    })?;
                    model::nudging_term(&mut self.ws, state, obs, p)?
                } else {
                    None
                }
            }
        };
        let out = match self.scheme {
            Scheme::IfRk4 => self.step_ifrk4(state, p, nudge.as_ref())?,
            Scheme::ImexCnab2 => self.step_cnab2(state, p, nudge.as_ref())?,
        };
        self.t += self.dt;
        if !out.is_finite() {
            return Err(Error::BlowUp {
                time: self.t,
                partial: None,
            });
        }
        Ok(out)
    }

    fn step_ifrk4(
        &mut self,
        u: &VelocityField,
        p: &PhysicsParams,
        nudge: Option<&VelocityField>,
    ) -> Result<VelocityField> {
        let dt = self.dt;
        let n1 = self.explicit_rhs(u, p, nudge)?;

        // u2 = E(u + dt/2 n1)
        let mut u2 = u.clone();
        u2.add_scaled(0.5 * dt, &n1);
        u2.mul_per_mode(&self.e_half);
        let n2 = self.explicit_rhs(&u2, p, nudge)?;

        // u3 = E u + dt/2 n2
        let mut u3 = u.clone();
        u3.mul_per_mode(&self.e_half);
        u3.add_scaled(0.5 * dt, &n2);
        let n3 = self.explicit_rhs(&u3, p, nudge)?;

        // u4 = E² u + dt E n3
        let mut u4 = u.clone();
        u4.mul_per_mode(&self.e_full);
        let mut en3 = n3.clone();
        en3.mul_per_mode(&self.e_half);
        u4.add_scaled(dt, &en3);
        let n4 = self.explicit_rhs(&u4, p, nudge)?;

        // out = E² u + dt/6 (E² n1 + 2E n2 + 2E n3 + n4)
        let mut out = u.clone();
        out.mul_per_mode(&self.e_full);
        let mut acc = n1;
        acc.mul_per_mode(&self.e_full);
        let mut mid = n2;
        mid.add_scaled(1.0, &n3);
        mid.mul_per_mode(&self.e_half);
        acc.add_scaled(2.0, &mid);
        acc.add_scaled(1.0, &n4);
        out.add_scaled(dt / 6.0, &acc);
        Ok(out)
    }

    fn step_cnab2(
        &mut self,
        u: &VelocityField,
        p: &PhysicsParams,
        nudge: Option<&VelocityField>,
    ) -> Result<VelocityField> {
        let dt = self.dt;
        let n_curr = self.explicit_rhs(u, p, nudge)?;
        // first step bootstraps with forward Euler on the explicit part
        let mut effective = n_curr.clone();
        if let Some(prev) = &self.prev_explicit {
            effective.scale(1.5);
            effective.add_scaled(-0.5, prev);
        }
        let mut out = u.clone();
        out.mul_per_mode(&self.cn_mul);
        out.add_scaled(dt, &effective);
        out.mul_per_mode(&self.cn_div);
        self.prev_explicit = Some(n_curr);
        Ok(out)
    }
}

/// The paired twin step: the assimilating trajectory sees the reference one
/// only through the interpolated observation computed here.
pub struct TwinStepper {
    pub nse: Stepper,
    pub voigt: Stepper,
}

impl TwinStepper {
    pub fn new(cfg: &StepperConfig, grid: GridSpec, p: &PhysicsParams) -> Result<Self> {
        Ok(TwinStepper {
            nse: Stepper::new(RhsKind::Nse, cfg, grid, p)?,
            voigt: Stepper::new(RhsKind::VoigtNudged, cfg, grid, p)?,
        })
    }

    /// Step u by the reference system and v by the nudged one, with the
    /// observation interpolated from the pre-step u. The two steps are
    /// independent once the observation is taken and run concurrently.
    pub fn advance(
        &mut self,
        u: &VelocityField,
        v: &VelocityField,
        p: &PhysicsParams,
    ) -> Result<(VelocityField, VelocityField)> {
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch("twin states on different grids".into()));
        }
        let obs = if p.mu > 0.0 {
            Some(interp::apply(&mut self.voigt.ws, &p.interpolant, u)?)
        } else {
            None
        };
        let TwinStepper { nse, voigt } = self;
        let (ru, rv) = rayon::join(
            || nse.step(u, p, None),
            || voigt.step(v, p, obs.as_ref()),
        );
        Ok((ru?, rv?))
    }

    pub fn time(&self) -> f64 {
        self.nse.time()
    }

    pub fn set_time(&mut self, t: f64) {
        self.nse.set_time(t);
        self.voigt.set_time(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{random_smooth_velocity, taylor_green, SpectralField, VelocityField};
    use crate::interp::{InterpolantKind, InterpolantOp};
    use crate::model::band_limited_forcing;
    use crate::ops;
    use num_complex::Complex64;

    fn cfg(dt: f64, scheme: Scheme) -> StepperConfig {
        StepperConfig {
            dt,
            scheme,
            t_end: 1.0,
            cfl_limit: 0.5,
        }
    }

    fn plain_params(grid: GridSpec, nu: f64) -> PhysicsParams {
        PhysicsParams::new(
            nu,
            0.0,
            0.0,
            InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap(),
            VelocityField::zeros(grid),
        )
        .unwrap()
    }

    fn single_mode(grid: GridSpec, mx: i64, my: i64) -> VelocityField {
        let mut psi = SpectralField::zeros(grid);
        psi.set_mode(mx, my, Complex64::new(0.3, -0.7));
        let ux = psi.derivative(1);
        let mut uy = psi.derivative(0);
        uy.coeffs_mut().mapv_inplace(|c| -c);
        VelocityField::from_components(ux, uy).unwrap()
    }

    #[test]
    fn pure_diffusion_step_is_exact_for_ifrk4() {
        let grid = GridSpec::new(32).unwrap();
        let nu = 0.04;
        let dt = 0.01;
        let mut p = plain_params(grid, nu);
        p.nonlinear = false;
        let mut stepper = Stepper::new(RhsKind::Nse, &cfg(dt, Scheme::IfRk4), grid, &p).unwrap();
        let v = single_mode(grid, 2, 3);
        let out = stepper.step(&v, &p, None).unwrap();
        let k2 = grid.k2(3, 2);
        let mut expect = v.clone();
        expect.scale((-nu * k2 * dt).exp());
        let err = out.difference(&expect).max_abs();
        assert!(err <= 1e-14 * expect.max_abs(), "err = {err}");
    }

    #[test]
    fn taylor_green_decays_analytically() {
        // u(t) = e^{−8π²νt} u₀ since the advective term is a pure gradient
        let grid = GridSpec::new(32).unwrap();
        let nu = 0.01;
        let dt = 1e-3;
        let p = plain_params(grid, nu);
        let mut stepper = Stepper::new(RhsKind::Nse, &cfg(dt, Scheme::IfRk4), grid, &p).unwrap();
        let mut u = taylor_green(grid, 1.0);
        for _ in 0..100 {
            u = stepper.step(&u, &p, None).unwrap();
        }
        let decay = (-8.0 * std::f64::consts::PI.powi(2) * nu * 0.1).exp();
        let mut expect = taylor_green(grid, 1.0);
        expect.scale(decay);
        let err = ops::norms(&u.difference(&expect)).l2 / ops::norms(&expect).l2;
        assert!(err <= 1e-8, "relative error {err}");
    }

    #[test]
    fn ifrk4_converges_at_fourth_order() {
        let grid = GridSpec::new(32).unwrap();
        let f = band_limited_forcing(grid, 2.0, 4.0, 40.0, 0.05, 5).unwrap();
        let p = PhysicsParams::new(
            0.05,
            0.0,
            0.0,
            InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap(),
            f,
        )
        .unwrap();
        let mut u0 = random_smooth_velocity(grid, 6);
        u0.scale(1.0 / ops::norms(&u0).l2);
        let t_final = 0.2;
        let run = |dt: f64| {
            let mut stepper = Stepper::new(RhsKind::Nse, &cfg(dt, Scheme::IfRk4), grid, &p).unwrap();
            let steps = (t_final / dt).round() as usize;
            let mut u = u0.clone();
            for _ in 0..steps {
                u = stepper.step(&u, &p, None).unwrap();
            }
            u
        };
        let reference = run(1.25e-3);
        let coarse = ops::norms(&run(1e-2).difference(&reference)).l2;
        let fine = ops::norms(&run(5e-3).difference(&reference)).l2;
        let ratio = coarse / fine;
        // fourth order: halving dt cuts the error by ~16
        assert!(ratio > 11.0 && ratio < 22.0, "order ratio {ratio}");
    }

    #[test]
    fn cnab2_converges_at_second_order() {
        let grid = GridSpec::new(32).unwrap();
        let f = band_limited_forcing(grid, 2.0, 4.0, 40.0, 0.05, 5).unwrap();
        let p = PhysicsParams::new(
            0.05,
            0.0,
            0.0,
            InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap(),
            f,
        )
        .unwrap();
        let mut u0 = random_smooth_velocity(grid, 6);
        u0.scale(1.0 / ops::norms(&u0).l2);
        let t_final = 0.2;
        let run = |dt: f64| {
            let mut stepper =
                Stepper::new(RhsKind::Nse, &cfg(dt, Scheme::ImexCnab2), grid, &p).unwrap();
            let steps = (t_final / dt).round() as usize;
            let mut u = u0.clone();
            for _ in 0..steps {
                u = stepper.step(&u, &p, None).unwrap();
            }
            u
        };
        let reference = run(2.5e-4);
        let coarse = ops::norms(&run(4e-3).difference(&reference)).l2;
        let fine = ops::norms(&run(2e-3).difference(&reference)).l2;
        let ratio = coarse / fine;
        assert!(ratio > 3.0 && ratio < 5.5, "order ratio {ratio}");
    }

    #[test]
    fn twin_with_identical_states_and_alpha_zero_stays_identical() {
        let grid = GridSpec::new(32).unwrap();
        let f = band_limited_forcing(grid, 2.0, 4.0, 30.0, 0.05, 11).unwrap();
        let p = PhysicsParams::new(
            0.05,
            0.0,
            25.0,
            InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap(),
            f,
        )
        .unwrap();
        let mut twin = TwinStepper::new(&cfg(1e-3, Scheme::IfRk4), grid, &p).unwrap();
        let mut u = random_smooth_velocity(grid, 40);
        u.scale(1.0 / ops::norms(&u).l2);
        let mut v = u.clone();
        for _ in 0..50 {
            let (nu_, nv_) = twin.advance(&u, &v, &p).unwrap();
            u = nu_;
            v = nv_;
        }
        let err = ops::norms(&u.difference(&v)).l2;
        assert!(err <= 1e-10, "w stayed at {err}");
    }

    #[test]
    fn twin_with_mu_zero_alpha_zero_matches_independent_run_bitwise() {
        let grid = GridSpec::new(32).unwrap();
        let f = band_limited_forcing(grid, 2.0, 4.0, 30.0, 0.05, 11).unwrap();
        let p = PhysicsParams::new(
            0.05,
            0.0,
            0.0,
            InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap(),
            f,
        )
        .unwrap();
        let mut twin = TwinStepper::new(&cfg(1e-3, Scheme::IfRk4), grid, &p).unwrap();
        let mut u = random_smooth_velocity(grid, 41);
        let mut v = random_smooth_velocity(grid, 42);
        let v0 = v.clone();
        for _ in 0..20 {
            let (nu_, nv_) = twin.advance(&u, &v, &p).unwrap();
            u = nu_;
            v = nv_;
        }
        // v must equal an independent reference run of v0, bit for bit
        let mut solo = Stepper::new(RhsKind::Nse, &cfg(1e-3, Scheme::IfRk4), grid, &p).unwrap();
        let mut w = v0;
        for _ in 0..20 {
            w = solo.step(&w, &p, None).unwrap();
        }
        assert_eq!(v, w);
    }

    #[test]
    fn voigt_model_mismatch_scales_as_alpha_squared() {
        // μ = 0, v₀ = u₀: the drift between Voigt and NSE at fixed t is O(α²)
        let grid = GridSpec::new(32).unwrap();
        let f = band_limited_forcing(grid, 2.0, 4.0, 30.0, 0.05, 19).unwrap();
        let interp_op = InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap();
        let w_at = |alpha: f64| {
            let p = PhysicsParams::new(0.05, alpha, 0.0, interp_op, f.clone()).unwrap();
            let mut twin = TwinStepper::new(&cfg(1e-3, Scheme::IfRk4), grid, &p).unwrap();
            let mut u = random_smooth_velocity(grid, 50);
            u.scale(1.0 / ops::norms(&u).l2);
            let mut v = u.clone();
            for _ in 0..500 {
                let (nu_, nv_) = twin.advance(&u, &v, &p).unwrap();
                u = nu_;
                v = nv_;
            }
            ops::norms(&u.difference(&v)).l2
        };
        let w1 = w_at(0.02);
        let w2 = w_at(0.01);
        let ratio = w1 / w2;
        assert!(ratio > 3.0 && ratio < 5.5, "alpha-halving ratio {ratio}");
    }

    #[test]
    fn blow_up_is_reported_with_time() {
        let grid = GridSpec::new(32).unwrap();
        // unstably large dt on a stiff field forces a NaN/Inf
        let p = plain_params(grid, 10.0);
        let mut stepper = Stepper::new(RhsKind::Nse, &cfg(1.0, Scheme::ImexCnab2), grid, &p).unwrap();
        let mut u = random_smooth_velocity(grid, 1);
        u.scale(1e8);
        let mut failed = None;
        for _ in 0..400 {
            match stepper.step(&u, &p, None) {
                Ok(next) => u = next,
                Err(Error::BlowUp { time, .. }) => {
                    failed = Some(time);
                    break;
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        let t = failed.expect("the run should have blown up");
        assert!(t > 0.0);
    }

    #[test]
    fn mu_dt_validity_check() {
        let grid = GridSpec::new(32).unwrap();
        let f = band_limited_forcing(grid, 2.0, 4.0, 10.0, 0.05, 2).unwrap();
        let p = PhysicsParams::new(
            0.05,
            0.01,
            100.0,
            InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap(),
            f,
        )
        .unwrap();
        assert!(Stepper::new(RhsKind::VoigtNudged, &cfg(0.01, Scheme::IfRk4), grid, &p).is_err());
        assert!(Stepper::new(RhsKind::VoigtNudged, &cfg(0.004, Scheme::IfRk4), grid, &p).is_ok());
    }
}
