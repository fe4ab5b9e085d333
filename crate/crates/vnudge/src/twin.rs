//! Twin-experiment orchestration: spin up a reference flow, assimilate it
//! through interpolated observations, track the Voigt-weighted error
//! functional X(t) = ‖w‖² + α²‖∇w‖², fit its decay rate and plateau, and
//! sweep the regularization length α.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Workspace;
use crate::field::{random_smooth_velocity, taylor_green, VelocityField};
use crate::grid::{GridSpec, LAMBDA_1};
use crate::interp::{self, InterpolantKind, InterpolantOp};
use crate::model::{self, GrashofReport, PhysicsParams};
use crate::ops;
use crate::stepper::{RhsKind, Scheme, Stepper, StepperConfig, TwinStepper};

/// How the assimilating trajectory is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VInit {
    Zero,
    /// v₀ = u(t₀) + ε·‖u(t₀)‖·(unit random field); ε = 0 reproduces u exactly.
    Perturbed(f64),
    /// A fresh random field scaled to the energy of u(t₀).
    Independent,
}

/// Initial condition of the reference flow before spin-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    /// Stokes response ν⁻¹A⁻¹f plus a 10% random perturbation.
    LaminarPerturbed,
    TaylorGreen,
    /// Unit-energy random smooth field.
    Random,
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::LaminarPerturbed => "laminar_perturbed",
            InitialCondition::TaylorGreen => "taylor_green",
            InitialCondition::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "laminar_perturbed" => Some(InitialCondition::LaminarPerturbed),
            "taylor_green" => Some(InitialCondition::TaylorGreen),
            "random" => Some(InitialCondition::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConfig {
    pub nu: f64,
    pub alpha: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingConfig {
    pub grashof: f64,
    pub band_lo: f64,
    pub band_hi: f64,
}

/// Window fractions for the decay/plateau fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fraction of the pre-knee record used for the rate fit.
    pub decay_window: f64,
    /// Trailing fraction of the record treated as the plateau.
    pub plateau_window: f64,
    /// Plateau-reached test: the medians of the two halves of the trailing
    /// window must agree within a factor of (1 + tol). 0.1 suits clean decays;
    /// the default 1.0 (a factor of two) accommodates turbulent plateaus,
    /// whose samples fluctuate by 2-3x around a flat median.
    pub plateau_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            decay_window: 0.6,
            plateau_window: 0.2,
            plateau_tol: 1.0,
        }
    }
}

/// Full description of one twin experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinConfig {
    pub grid: GridSpec,
    pub physics: PhysicsConfig,
    pub forcing: ForcingConfig,
    pub interpolant: InterpolantOp,
    pub stepper: StepperConfig,
    pub spinup_time: f64,
    pub v_init: VInit,
    pub sample_interval: f64,
    pub seed: u64,
    pub initial: InitialCondition,
    /// The unnamed constant C of the admissibility conditions; reported, not
    /// asserted.
    pub c_assumed: f64,
    pub fit: FitOptions,
}

impl Default for TwinConfig {
    fn default() -> Self {
        TwinConfig {
            grid: GridSpec::new(128).expect("valid default grid"),
            physics: PhysicsConfig {
                nu: 0.01,
                alpha: 0.01,
                mu: 50.0,
            },
            forcing: ForcingConfig {
                grashof: 2500.0,
                band_lo: 2.0,
                band_hi: 4.0,
            },
            interpolant: InterpolantOp {
                kind: InterpolantKind::FourierTruncation,
                h: 0.125,
                c1_certified: None,
            },
            stepper: StepperConfig {
                dt: 1e-3,
                scheme: Scheme::IfRk4,
                t_end: 50.0,
                cfl_limit: 0.5,
            },
            spinup_time: 10.0,
            v_init: VInit::Zero,
            sample_interval: 0.01,
            seed: 7,
            initial: InitialCondition::LaminarPerturbed,
            c_assumed: 1.0,
            fit: FitOptions::default(),
        }
    }
}

impl TwinConfig {
    pub fn validate(&self) -> Result<()> {
        self.stepper.validate()?;
        if self.spinup_time < 0.0 {
            return Err(Error::invalid("run.spinup_time", "must be >= 0".to_string()));
        }
        if self.sample_interval < self.stepper.dt {
            return Err(Error::invalid(
                "run.sample_interval",
                format!(
                    "must be >= stepper.dt = {}, got {}",
                    self.stepper.dt, self.sample_interval
                ),
            ));
        }
        if !(self.c_assumed > 0.0) {
            return Err(Error::invalid("conditions.c", "must be > 0".to_string()));
        }
        if let VInit::Perturbed(eps) = self.v_init {
            if eps < 0.0 {
                return Err(Error::invalid("run.perturbation", "must be >= 0".to_string()));
            }
        }
        for (name, w) in [
            ("fit.decay_window", self.fit.decay_window),
            ("fit.plateau_window", self.fit.plateau_window),
        ] {
            if !(w > 0.0 && w < 1.0) {
                return Err(Error::invalid(name, format!("must lie in (0, 1), got {w}")));
            }
        }
        if !(self.fit.plateau_tol > 0.0) {
            return Err(Error::invalid("fit.plateau_tol", "must be > 0".to_string()));
        }
        InterpolantOp::new(self.interpolant.kind, self.interpolant.h)?;
        Ok(())
    }

    /// Seeds derived from the run seed, one purpose each.
    fn forcing_seed(&self) -> u64 {
        self.seed
    }
    fn initial_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }
    fn v_init_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }
    fn certify_seed(&self) -> u64 {
        self.seed.wrapping_add(3)
    }
}

/// Admissibility conditions of the convergence theorems, evaluated literally
/// with a caller-supplied constant C. Margins are reported alongside the
/// booleans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub g: f64,
    pub c_assumed: f64,
    pub c1: f64,
    pub h: f64,
    pub mu: f64,
    pub nu: f64,
    pub alpha: f64,
    /// h must stay below λ₁^{-1/2} / (2 c₁ √(2C) G).
    pub h_max: f64,
    /// M₁ = μ/2 − Cνλ₁G²
    pub m1: f64,
    /// M₂ = μ/2 − Cνλ₁G^{8/3}
    pub m2: f64,
    /// √(ν/M₁): admissible Voigt lengths for the L² theorem (NaN if M₁ ≤ 0).
    pub alpha_max_t2: f64,
    /// √(ν/M₂) for the H¹/H² theorem.
    pub alpha_max_t3: f64,
    pub satisfied_t2: bool,
    pub satisfied_t3: bool,
}

pub fn check_conditions(p: &PhysicsParams, g: &GrashofReport, c_assumed: f64) -> ConditionReport {
    let c1 = p.interpolant.c1_certified.unwrap_or(match p.interpolant.kind {
        InterpolantKind::FourierTruncation => 1.0 / (2.0 * std::f64::consts::PI),
        _ => f64::NAN,
    });
    let h = p.interpolant.h;
    let h_max = LAMBDA_1.powf(-0.5) / (2.0 * c1 * (2.0 * c_assumed).sqrt()) / g.g;
    let m1 = 0.5 * p.mu - c_assumed * p.nu * LAMBDA_1 * g.g.powi(2);
    let m2 = 0.5 * p.mu - c_assumed * p.nu * LAMBDA_1 * g.g.powf(8.0 / 3.0);
    let alpha_max_t2 = if m1 > 0.0 { (p.nu / m1).sqrt() } else { f64::NAN };
    let alpha_max_t3 = if m2 > 0.0 { (p.nu / m2).sqrt() } else { f64::NAN };
    let satisfied_t2 = m1 > 0.0 && h < h_max && p.alpha * p.alpha < p.nu / m1;
    let satisfied_t3 = m2 > 0.0 && h < h_max && p.alpha * p.alpha < p.nu / m2;
    ConditionReport {
        g: g.g,
        c_assumed,
        c1,
        h,
        mu: p.mu,
        nu: p.nu,
        alpha: p.alpha,
        h_max,
        m1,
        m2,
        alpha_max_t2,
        alpha_max_t3,
        satisfied_t2,
        satisfied_t3,
    }
}

/// Time series of error norms and energy diagnostics for one twin run.
/// Times are measured from the start of assimilation (after spin-up).
#[derive(Debug, Clone, PartialEq)]
pub struct TwinRunRecord {
    pub times: Vec<f64>,
    pub l2_err: Vec<f64>,
    pub h1_err: Vec<f64>,
    pub h2_err: Vec<f64>,
    /// X(t) = l2_err² + α²·h1_err², computed from the recorded values.
    pub x_t: Vec<f64>,
    /// X̃(t) = h1_err² + α²·h2_err².
    pub x_tilde_t: Vec<f64>,
    pub energy_u: Vec<f64>,
    pub energy_v: Vec<f64>,
    pub enstrophy_u: Vec<f64>,
    pub enstrophy_v: Vec<f64>,
    pub config: TwinConfig,
    /// α actually used for this run (sweeps override the config value).
    pub alpha: f64,
    pub conditions: ConditionReport,
    pub cfl_max: f64,
}

impl TwinRunRecord {
    fn with_capacity(config: TwinConfig, alpha: f64, conditions: ConditionReport, cap: usize) -> Self {
        TwinRunRecord {
            times: Vec::with_capacity(cap),
            l2_err: Vec::with_capacity(cap),
            h1_err: Vec::with_capacity(cap),
            h2_err: Vec::with_capacity(cap),
            x_t: Vec::with_capacity(cap),
            x_tilde_t: Vec::with_capacity(cap),
            energy_u: Vec::with_capacity(cap),
            energy_v: Vec::with_capacity(cap),
            enstrophy_u: Vec::with_capacity(cap),
            enstrophy_v: Vec::with_capacity(cap),
            config,
            alpha,
            conditions,
            cfl_max: 0.0,
        }
    }

    fn push_sample(&mut self, t: f64, u: &VelocityField, v: &VelocityField, alpha: f64) {
        let w = u.difference(v);
        let wn = ops::norms(&w);
        let un = ops::norms(u);
        let vn = ops::norms(v);
        self.times.push(t);
        self.l2_err.push(wn.l2);
        self.h1_err.push(wn.h1_semi);
        self.h2_err.push(wn.h2_semi);
        let i = self.l2_err.len() - 1;
        // read back the stored values so the identity X = l2² + α²h1² is
        // exact on the record
        self.x_t
            .push(self.l2_err[i] * self.l2_err[i] + alpha * alpha * self.h1_err[i] * self.h1_err[i]);
        self.x_tilde_t
            .push(self.h1_err[i] * self.h1_err[i] + alpha * alpha * self.h2_err[i] * self.h2_err[i]);
        self.energy_u.push(0.5 * un.l2 * un.l2);
        self.energy_v.push(0.5 * vn.l2 * vn.l2);
        self.enstrophy_u.push(0.5 * un.h1_semi * un.h1_semi);
        self.enstrophy_v.push(0.5 * vn.h1_semi * vn.h1_semi);
    }

    /// CSV with the documented column set, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,l2_err,h1_err,h2_err,X,Xtilde,energy_u,energy_v\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.times[i],
                self.l2_err[i],
                self.h1_err[i],
                self.h2_err[i],
                self.x_t[i],
                self.x_tilde_t[i],
                self.energy_u[i],
                self.energy_v[i],
            ));
        }
        out
    }
}

/// Forcing, certified interpolant and spun-up reference state, reusable
/// across the runs of a sweep.
pub struct PreparedTwin {
    pub config: TwinConfig,
    pub params: PhysicsParams,
    pub grashof: GrashofReport,
    pub u_start: VelocityField,
    pub spinup_cfl_max: f64,
}

/// Build the forcing, certify the interpolant, and evolve the reference flow
/// through the spin-up window (the theorems' t₀).
pub fn prepare(cfg: &TwinConfig) -> Result<PreparedTwin> {
    cfg.validate()?;
    let grid = cfg.grid;
    let forcing = model::band_limited_forcing(
        grid,
        cfg.forcing.band_lo,
        cfg.forcing.band_hi,
        cfg.forcing.grashof,
        cfg.physics.nu,
        cfg.forcing_seed(),
    )?;
    let mut interpolant = InterpolantOp::new(cfg.interpolant.kind, cfg.interpolant.h)?;
    let mut ws = Workspace::new(grid);
    interp::ensure_certified(&mut ws, &mut interpolant, grid, 128, cfg.certify_seed())?;
    let mut params = PhysicsParams::new(
        cfg.physics.nu,
        cfg.physics.alpha,
        cfg.physics.mu,
        interpolant,
        forcing,
    )?;
    params.nonlinear = true;

    let mut u = initial_state(cfg, &params);
    let mut stepper = Stepper::new(RhsKind::Nse, &cfg.stepper, grid, &params)?;
    let spinup_steps = (cfg.spinup_time / cfg.stepper.dt).round() as usize;
    let mut cfl_max: f64 = 0.0;
    let cfl_every = ((cfg.sample_interval / cfg.stepper.dt).round() as usize).max(1) * 10;
    for step in 0..spinup_steps {
        u = stepper.step(&u, &params, None)?;
        if step % cfl_every == 0 {
            let speed = stepper.ws.max_speed(&u);
            cfl_max = cfl_max.max(speed * cfg.stepper.dt * grid.n() as f64);
        }
    }
    let grashof = model::grashof(&params);
    Ok(PreparedTwin {
        config: cfg.clone(),
        params,
        grashof,
        u_start: u,
        spinup_cfl_max: cfl_max,
    })
}

fn initial_state(cfg: &TwinConfig, params: &PhysicsParams) -> VelocityField {
    let grid = cfg.grid;
    match cfg.initial {
        InitialCondition::TaylorGreen => taylor_green(grid, 1.0),
        InitialCondition::Random => {
            let mut u = random_smooth_velocity(grid, cfg.initial_seed());
            let l2 = ops::norms(&u).l2;
            if l2 > 0.0 {
                u.scale(1.0 / l2);
            }
            u
        }
        InitialCondition::LaminarPerturbed => {
            // Stokes response û = f̂ / (ν|k|²), the fixed point without advection
            let mut u = params.forcing.clone();
            let (rows, cols) = grid.spectral_shape();
            for comp in 0..2 {
                let coeffs = u.component_mut(comp).coeffs_mut();
                for row in 0..rows {
                    for col in 0..cols {
                        let k2 = grid.k2(row, col);
                        if k2 > 0.0 {
                            coeffs[[row, col]] /= params.nu * k2;
                        }
                    }
                }
            }
            let base = ops::norms(&u).l2;
            let mut noise = random_smooth_velocity(grid, cfg.initial_seed());
            let nl2 = ops::norms(&noise).l2;
            if nl2 > 0.0 {
                noise.scale(0.1 * base.max(1.0) / nl2);
            }
            u.add_scaled(1.0, &noise);
            u
        }
    }
}

fn v_initial(cfg: &TwinConfig, u_start: &VelocityField) -> VelocityField {
    match cfg.v_init {
        VInit::Zero => VelocityField::zeros(cfg.grid),
        VInit::Perturbed(eps) => {
            let mut v = u_start.clone();
            if eps > 0.0 {
                let mut noise = random_smooth_velocity(cfg.grid, cfg.v_init_seed());
                let nl2 = ops::norms(&noise).l2;
                if nl2 > 0.0 {
                    noise.scale(eps * ops::norms(u_start).l2 / nl2);
                }
                v.add_scaled(1.0, &noise);
            }
            v
        }
        VInit::Independent => {
            let mut v = random_smooth_velocity(cfg.grid, cfg.v_init_seed());
            let l2 = ops::norms(&v).l2;
            if l2 > 0.0 {
                v.scale(ops::norms(u_start).l2 / l2);
            }
            v
        }
    }
}

/// Run the assimilation phase from a prepared state, with an α that may
/// override the configured one (the sweep path).
pub fn run_prepared(prep: &PreparedTwin, alpha: f64) -> Result<TwinRunRecord> {
    let cfg = &prep.config;
    let grid = cfg.grid;
    let mut params = prep.params.clone();
    params.alpha = alpha;
    let conditions = check_conditions(&params, &prep.grashof, cfg.c_assumed);

    let mut u = prep.u_start.clone();
    let mut v = v_initial(cfg, &u);
    let mut twin = TwinStepper::new(&cfg.stepper, grid, &params)?;

    let dt = cfg.stepper.dt;
    let n_steps = (cfg.stepper.t_end / dt).round() as usize;
    let sample_every = ((cfg.sample_interval / dt).round() as usize).max(1);
    let cap = n_steps / sample_every + 2;
    let mut record = TwinRunRecord::with_capacity(cfg.clone(), alpha, conditions, cap);
    record.cfl_max = prep.spinup_cfl_max;
    record.push_sample(0.0, &u, &v, alpha);

    for step in 1..=n_steps {
        match twin.advance(&u, &v, &params) {
            Ok((nu_, nv_)) => {
                u = nu_;
                v = nv_;
            }
            Err(Error::BlowUp { time, .. }) => {
                return Err(Error::BlowUp {
                    time,
                    partial: Some(Box::new(record)),
                });
            }
            Err(e) => return Err(e),
        }
        if step % sample_every == 0 || step == n_steps {
            let t = step as f64 * dt;
            record.push_sample(t, &u, &v, alpha);
            let speed = twin.nse.ws.max_speed(&u);
            record.cfl_max = record.cfl_max.max(speed * dt * grid.n() as f64);
        }
    }
    Ok(record)
}

/// The complete twin experiment: spin-up, assimilation, recording.
pub fn run_twin(cfg: &TwinConfig) -> Result<TwinRunRecord> {
    let prep = prepare(cfg)?;
    run_prepared(&prep, cfg.physics.alpha)
}

/// One sample of a reference (non-assimilating) run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub t: f64,
    pub l2: f64,
    pub h1_semi: f64,
    pub h2_semi: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub injection: f64,
    pub dissipation: f64,
}

#[derive(Debug, Clone)]
pub struct ReferenceRunRecord {
    pub samples: Vec<ReferenceSample>,
    pub cfl_max: f64,
    pub final_state: VelocityField,
    pub grashof: GrashofReport,
}

impl ReferenceRunRecord {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("t,l2,h1_semi,h2_semi,energy,enstrophy,injection,dissipation\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s.t, s.l2, s.h1_semi, s.h2_semi, s.energy, s.enstrophy, s.injection, s.dissipation
            ));
        }
        out
    }
}

/// Evolve the reference system alone from the configured initial condition,
/// recording norms and the energy budget. The spin-up window does not apply
/// here; the record starts at t = 0.
pub fn run_reference(cfg: &TwinConfig) -> Result<ReferenceRunRecord> {
    cfg.validate()?;
    let grid = cfg.grid;
    let forcing = model::band_limited_forcing(
        grid,
        cfg.forcing.band_lo,
        cfg.forcing.band_hi,
        cfg.forcing.grashof,
        cfg.physics.nu,
        cfg.forcing_seed(),
    )?;
    let interpolant = InterpolantOp::new(cfg.interpolant.kind, cfg.interpolant.h)?;
    let params = PhysicsParams::new(
        cfg.physics.nu,
        cfg.physics.alpha,
        cfg.physics.mu,
        interpolant,
        forcing,
    )?;
    let grashof = model::grashof(&params);
    let mut u = initial_state(cfg, &params);
    let mut stepper = Stepper::new(RhsKind::Nse, &cfg.stepper, grid, &params)?;
    let dt = cfg.stepper.dt;
    let n_steps = (cfg.stepper.t_end / dt).round() as usize;
    let sample_every = ((cfg.sample_interval / dt).round() as usize).max(1);
    let mut samples = Vec::with_capacity(n_steps / sample_every + 2);
    let mut cfl_max: f64 = 0.0;
    let mut push = |t: f64, u: &VelocityField, params: &PhysicsParams| {
        let nm = ops::norms(u);
        samples.push(ReferenceSample {
            t,
            l2: nm.l2,
            h1_semi: nm.h1_semi,
            h2_semi: nm.h2_semi,
            energy: 0.5 * nm.l2 * nm.l2,
            enstrophy: 0.5 * nm.h1_semi * nm.h1_semi,
            injection: ops::inner_l2(&params.forcing, u),
            dissipation: params.nu * nm.h1_semi * nm.h1_semi,
        });
    };
    push(0.0, &u, &params);
    for step in 1..=n_steps {
        u = stepper.step(&u, &params, None)?;
        if step % sample_every == 0 || step == n_steps {
            push(step as f64 * dt, &u, &params);
            let speed = stepper.ws.max_speed(&u);
            cfl_max = cfl_max.max(speed * dt * grid.n() as f64);
        }
    }
    Ok(ReferenceRunRecord {
        samples,
        cfl_max,
        final_state: u,
        grashof,
    })
}

/// Decay rate and plateau levels fitted from one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Least-squares slope of −log X(t) over the pre-knee decay window.
    pub rate: f64,
    pub plateau_l2: f64,
    pub plateau_h1: f64,
    pub plateau_h2: f64,
    pub plateau_x: f64,
    /// First time X(t) dips below twice its plateau.
    pub t_knee: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in series"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Fit the exponential-decay-then-plateau shape of X(t).
///
/// The plateau must actually be reached: the medians of the two halves of
/// the trailing window may differ by at most the configured tolerance,
/// otherwise a no-plateau error is returned.
pub fn fit_decay_and_plateau(rec: &TwinRunRecord) -> Result<DecayFit> {
    let opts = rec.config.fit;
    let n = rec.times.len();
    if n < 10 {
        return Err(Error::NoPlateau(format!("record has only {n} samples")));
    }
    let w = ((opts.plateau_window * n as f64).ceil() as usize).clamp(4, n);
    let tail = &rec.x_t[n - w..];
    let half = w / 2;
    let m1 = median(&tail[..half]);
    let m2 = median(&tail[half..]);
    // plateau reached iff the two half-window medians agree within the
    // configured factor; a still-decaying tail drifts far beyond it
    let flat = if m1 == 0.0 || m2 == 0.0 {
        m1 == m2
    } else {
        let ratio = m2 / m1;
        let band = 1.0 + opts.plateau_tol;
        ratio <= band && ratio >= 1.0 / band
    };
    if !flat {
        return Err(Error::NoPlateau(format!(
            "trailing-window medians still drift: {m1:.3e} -> {m2:.3e}"
        )));
    }
    let plateau_x = median(tail);
    let tail_range = n - w..n;
    let plateau_l2 = median(&rec.l2_err[tail_range.clone()]);
    let plateau_h1 = median(&rec.h1_err[tail_range.clone()]);
    let plateau_h2 = median(&rec.h2_err[tail_range]);

    // knee: first sample within 2x of the plateau
    let knee_idx = rec
        .x_t
        .iter()
        .position(|&x| x <= 2.0 * plateau_x)
        .unwrap_or(0);
    let t_knee = rec.times[knee_idx.min(n - 1)];

    // rate: least squares on log X over the early part of the decay
    let fit_end = ((knee_idx as f64 * opts.decay_window).ceil() as usize).min(knee_idx);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..fit_end {
        if rec.x_t[i] > 0.0 {
            pts.push((rec.times[i], rec.x_t[i].ln()));
        }
    }
    let rate = if pts.len() < 2 { 0.0 } else { -lsq_slope(&pts) };
    Ok(DecayFit {
        rate,
        plateau_l2,
        plateau_h1,
        plateau_h2,
        plateau_x,
        t_knee,
    })
}

fn lsq_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// One α row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub alpha: f64,
    pub plateau_l2: f64,
    pub plateau_h1: f64,
    pub plateau_h2: f64,
    pub rate: f64,
    /// Plateau indistinguishable from the α = 0 scheme/observation floor.
    pub floor_limited: bool,
    pub failure: Option<String>,
}

/// Sweep results: per-α rows, the α = 0 floor run, and log-log slopes of the
/// plateau columns against α (floor-limited and failed rows excluded).
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub floor: Option<DecayFit>,
    pub slope_l2: f64,
    pub slope_h1: f64,
    pub slope_h2: f64,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,plateau_l2,plateau_h1,plateau_h2,fitted_rate,status\n");
        for row in &self.rows {
            let status = match (&row.failure, row.floor_limited) {
                (Some(msg), _) => format!("error:{}", msg.replace(',', ";")),
                (None, true) => "floor-limited".to_string(),
                (None, false) => "ok".to_string(),
            };
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                row.alpha, row.plateau_l2, row.plateau_h1, row.plateau_h2, row.rate, status
            ));
        }
        out
    }
}

fn validate_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.len() < 3 {
        return Err(Error::SweepPrecondition(format!(
            "need at least 3 alphas, got {}",
            alphas.len()
        )));
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite alphas"));
    if sorted.first().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::SweepPrecondition("alphas must be positive".to_string()));
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::SweepPrecondition("alphas must be distinct".to_string()));
    }
    let span = sorted.last().unwrap() / sorted.first().unwrap();
    if span < 4.0 {
        return Err(Error::SweepPrecondition(format!(
            "alphas must span at least a 4x range, got {span:.2}x"
        )));
    }
    Ok(())
}

/// Run one twin experiment per α over a shared spun-up reference state, plus
/// an α = 0 control that estimates the scheme/observation error floor.
pub fn alpha_sweep(base: &TwinConfig, alphas: &[f64]) -> Result<SweepTable> {
    validate_alphas(alphas)?;
    let prep = prepare(base)?;
    alpha_sweep_prepared(&prep, alphas)
}

/// The sweep body over an already-prepared reference state.
pub fn alpha_sweep_prepared(prep: &PreparedTwin, alphas: &[f64]) -> Result<SweepTable> {
    validate_alphas(alphas)?;
    let mut targets: Vec<f64> = alphas.to_vec();
    targets.push(0.0); // floor control
    let results: Vec<(f64, Result<(TwinRunRecord, DecayFit)>)> = targets
        .par_iter()
        .map(|&alpha| {
            let out = run_prepared(prep, alpha)
                .and_then(|rec| fit_decay_and_plateau(&rec).map(|fit| (rec, fit)));
            (alpha, out)
        })
        .collect();

    let floor = results
        .last()
        .and_then(|(_, r)| r.as_ref().ok())
        .map(|(_, fit)| *fit);
    let floor_l2 = floor.map(|f| f.plateau_l2).unwrap_or(0.0);

    let mut rows = Vec::new();
    for (alpha, res) in results.iter().take(alphas.len()) {
        match res {
            Ok((_, fit)) => rows.push(SweepRow {
                alpha: *alpha,
                plateau_l2: fit.plateau_l2,
                plateau_h1: fit.plateau_h1,
                plateau_h2: fit.plateau_h2,
                rate: fit.rate,
                floor_limited: fit.plateau_l2 <= 10.0 * floor_l2,
                failure: None,
            }),
            Err(e) => rows.push(SweepRow {
                alpha: *alpha,
                plateau_l2: f64::NAN,
                plateau_h1: f64::NAN,
                plateau_h2: f64::NAN,
                rate: f64::NAN,
                floor_limited: false,
                failure: Some(e.to_string()),
            }),
        }
    }

    let slope_of = |pick: fn(&SweepRow) -> f64| -> f64 {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.failure.is_none() && !r.floor_limited && pick(r) > 0.0)
            .map(|r| (r.alpha.ln(), pick(r).ln()))
            .collect();
        if pts.len() < 2 {
            f64::NAN
        } else {
            lsq_slope(&pts)
        }
    };
    let slope_l2 = slope_of(|r| r.plateau_l2);
    let slope_h1 = slope_of(|r| r.plateau_h1);
    let slope_h2 = slope_of(|r| r.plateau_h2);

    Ok(SweepTable {
        rows,
        floor,
        slope_l2,
        slope_h1,
        slope_h2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_record(x: Vec<f64>, dt: f64) -> TwinRunRecord {
        let n = x.len();
        let cfg = TwinConfig {
            grid: GridSpec::new(32).unwrap(),
            ..TwinConfig::default()
        };
        let conditions = ConditionReport {
            g: 0.0,
            c_assumed: 1.0,
            c1: 1.0,
            h: 0.125,
            mu: 0.0,
            nu: 0.01,
            alpha: 0.0,
            h_max: f64::INFINITY,
            m1: 0.0,
            m2: 0.0,
            alpha_max_t2: f64::NAN,
            alpha_max_t3: f64::NAN,
            satisfied_t2: false,
            satisfied_t3: false,
        };
        TwinRunRecord {
            times: (0..n).map(|i| i as f64 * dt).collect(),
            l2_err: x.iter().map(|v| v.sqrt()).collect(),
            h1_err: vec![0.0; n],
            h2_err: vec![0.0; n],
            x_t: x.clone(),
            x_tilde_t: vec![0.0; n],
            energy_u: vec![1.0; n],
            energy_v: vec![1.0; n],
            enstrophy_u: vec![1.0; n],
            enstrophy_v: vec![1.0; n],
            config: cfg,
            alpha: 0.0,
            conditions,
            cfl_max: 0.0,
        }
    }

    #[test]
    fn fit_recovers_synthetic_rate_and_plateau() {
        // X(t) = 1e-8 + e^{-3t}
        let dt = 0.01;
        let x: Vec<f64> = (0..1001).map(|i| 1e-8 + (-3.0 * i as f64 * dt).exp()).collect();
        let rec = toy_record(x, dt);
        let fit = fit_decay_and_plateau(&rec).unwrap();
        assert!((fit.rate - 3.0).abs() <= 0.06, "rate = {}", fit.rate);
        assert!((fit.plateau_x - 1e-8).abs() <= 1e-10, "plateau = {}", fit.plateau_x);
        assert!((fit.t_knee - (1e8f64).ln() / 3.0).abs() < 0.2, "knee = {}", fit.t_knee);
    }

    #[test]
    fn fit_of_constant_series_has_zero_rate_and_instant_knee() {
        let rec = toy_record(vec![0.5; 200], 0.05);
        let fit = fit_decay_and_plateau(&rec).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.t_knee, 0.0);
        assert!((fit.plateau_x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fit_rejects_undecayed_series() {
        // pure exponential with no floor: the tail still drifts
        let dt = 0.01;
        let x: Vec<f64> = (0..1001).map(|i| (-3.0 * i as f64 * dt).exp()).collect();
        let rec = toy_record(x, dt);
        match fit_decay_and_plateau(&rec) {
            Err(Error::NoPlateau(_)) => {}
            other => panic!("expected NoPlateau, got {other:?}"),
        }
    }

    #[test]
    fn condition_report_arithmetic() {
        // μ = 100, ν = 1, G = 1, C = 1: M₁ = 50 − 4π² ≈ 10.52, α_max ≈ 0.3083
        let grid = GridSpec::new(32).unwrap();
        let mut f = crate::field::random_band_velocity(grid, 2.0, 4.0, 1);
        let l2 = ops::norms(&f).l2;
        f.scale(LAMBDA_1 / l2); // ‖f‖ = ν²λ₁G with ν = 1, G = 1
        let op = InterpolantOp {
            kind: InterpolantKind::FourierTruncation,
            h: 0.001,
            c1_certified: Some(1.0 / (2.0 * std::f64::consts::PI)),
        };
        let p = PhysicsParams::new(1.0, 0.1, 100.0, op, f).unwrap();
        let g = model::grashof(&p);
        assert!((g.g - 1.0).abs() < 1e-12);
        let rep = check_conditions(&p, &g, 1.0);
        assert!((rep.m1 - 10.521582395642568).abs() < 1e-9, "m1 = {}", rep.m1);
        assert!((rep.alpha_max_t2 - 0.3082900227017885).abs() < 1e-9);
        assert!(rep.satisfied_t2);

        // μ = 0: M₁ < 0 and nothing is satisfied
        let p0 = PhysicsParams::new(1.0, 0.1, 0.0, op, p.forcing.clone()).unwrap();
        let rep0 = check_conditions(&p0, &g, 1.0);
        assert!(rep0.m1 < 0.0);
        assert!(!rep0.satisfied_t2);
        assert!(rep0.alpha_max_t2.is_nan());

        // G = 0: harmless limit, h unconstrained
        let pz = PhysicsParams::new(1.0, 0.1, 100.0, op, VelocityField::zeros(grid)).unwrap();
        let gz = model::grashof(&pz);
        let repz = check_conditions(&pz, &gz, 1.0);
        assert!(repz.h_max.is_infinite());
        assert!((repz.m1 - 50.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_preconditions() {
        let cfg = TwinConfig::default();
        assert!(matches!(
            alpha_sweep(&cfg, &[0.1, 0.1, 0.1]),
            Err(Error::SweepPrecondition(_))
        ));
        assert!(matches!(
            alpha_sweep(&cfg, &[0.1, 0.05]),
            Err(Error::SweepPrecondition(_))
        ));
        assert!(matches!(
            alpha_sweep(&cfg, &[0.1, 0.08, 0.05]),
            Err(Error::SweepPrecondition(_))
        ));
    }

    #[test]
    fn identical_twin_stays_at_roundoff() {
        // v_init = perturbed(0), α = 0: both systems run identically
        let cfg = TwinConfig {
            grid: GridSpec::new(32).unwrap(),
            physics: PhysicsConfig {
                nu: 0.05,
                alpha: 0.0,
                mu: 30.0,
            },
            forcing: ForcingConfig {
                grashof: 30.0,
                band_lo: 2.0,
                band_hi: 4.0,
            },
            stepper: StepperConfig {
                dt: 1e-3,
                scheme: Scheme::IfRk4,
                t_end: 0.5,
                cfl_limit: 0.5,
            },
            spinup_time: 0.2,
            v_init: VInit::Perturbed(0.0),
            sample_interval: 0.01,
            seed: 3,
            ..TwinConfig::default()
        };
        let rec = run_twin(&cfg).unwrap();
        let worst = rec.l2_err.iter().cloned().fold(0.0f64, f64::max);
        assert!(worst <= 1e-10, "l2 error grew to {worst}");
        // X reconstructs exactly from its components
        for i in 0..rec.times.len() {
            let expect = rec.l2_err[i] * rec.l2_err[i] + rec.alpha * rec.alpha * rec.h1_err[i] * rec.h1_err[i];
            assert_eq!(rec.x_t[i], expect);
        }
    }
}
