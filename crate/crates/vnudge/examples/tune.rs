// Temporary tuning harness: step timing and regime exploration.
use std::time::Instant;

use vnudge::fft::Workspace;
use vnudge::grid::GridSpec;
use vnudge::model::{self, PhysicsParams};
use vnudge::ops;
use vnudge::interp::{InterpolantKind, InterpolantOp};
use vnudge::stepper::{RhsKind, Scheme, Stepper, StepperConfig, TwinStepper};
use vnudge::field::random_smooth_velocity;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("bench");
    match mode {
        "bench" => bench(),
        "regime" => regime(
            args[2].parse().unwrap(),
            args[3].parse().unwrap(),
            args.get(4).map(|s| s.parse().unwrap()).unwrap_or(128),
            args.get(5).map(|s| s.parse().unwrap()).unwrap_or(30.0),
            args.get(6).map(|s| s.parse().unwrap()).unwrap_or(1e-3),
        ),
        "twin" => twin_probe(
            args[2].parse().unwrap(), // nu
            args[3].parse().unwrap(), // grashof
            args[4].parse().unwrap(), // mu
            args[5].parse().unwrap(), // h
            args[6].parse().unwrap(), // alpha
            args.get(7).map(|s| s.parse().unwrap()).unwrap_or(50.0), // t_end
            args.get(8).map(|s| s.parse().unwrap()).unwrap_or(10.0), // spinup
            args.get(9).map(|s| s.parse().unwrap()).unwrap_or(0.02), // sample_interval
            args.get(10).map(|s| s.parse().unwrap()).unwrap_or(50.0), // mu for control comparison
        ),
        "sweep" => sweep_probe(),
        "control" => control_probe(args.get(2).map(|s| s.parse().unwrap()).unwrap_or(20.0)),
        other => eprintln!("unknown mode {other}"),
    }
}

fn bench() {
    for n in [64usize, 128] {
        let grid = GridSpec::new(n).unwrap();
        let mut ws = Workspace::new(grid);
        let u = random_smooth_velocity(grid, 1);
        // raw transform cost
        let mut spec = ndarray::Array2::zeros(grid.spectral_shape());
        let mut phys = ndarray::Array2::zeros((n, n));
        ws.fft.inverse(u.x().coeffs(), &mut phys);
        let t0 = Instant::now();
        let reps = 2000;
        for _ in 0..reps {
            ws.fft.forward(&phys, &mut spec);
        }
        let fwd = t0.elapsed().as_secs_f64() / reps as f64;
        let t0 = Instant::now();
        for _ in 0..reps {
            ws.fft.inverse(&spec, &mut phys);
        }
        let inv = t0.elapsed().as_secs_f64() / reps as f64;

        // nonlinear term cost
        let t0 = Instant::now();
        let reps = 300;
        for _ in 0..reps {
            let _ = ops::nonlinear_term(&mut ws, &u, &u).unwrap();
        }
        let nl = t0.elapsed().as_secs_f64() / reps as f64;

        // full twin step cost
        let f = model::band_limited_forcing(grid, 2.0, 4.0, 100.0, 0.01, 3).unwrap();
        let op = InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap();
        let p = PhysicsParams::new(0.01, 0.02, 50.0, op, f).unwrap();
        let cfg = StepperConfig { dt: 1e-3, scheme: Scheme::IfRk4, t_end: 1.0, cfl_limit: 0.5 };
        let mut twin = TwinStepper::new(&cfg, grid, &p).unwrap();
        let mut uu = random_smooth_velocity(grid, 2);
        uu.scale(1.0 / ops::norms(&uu).l2);
        let mut vv = uu.clone();
        let t0 = Instant::now();
        let reps = 200;
        for _ in 0..reps {
            let (a, b) = twin.advance(&uu, &vv, &p).unwrap();
            uu = a;
            vv = b;
        }
        let step = t0.elapsed().as_secs_f64() / reps as f64;
        println!(
            "n={n}: fwd {:.1} us, inv {:.1} us, nonlinear {:.1} us, twin step {:.1} us -> 50k steps = {:.1} s",
            fwd * 1e6, inv * 1e6, nl * 1e6, step * 1e6, step * 50_000.0
        );
    }
}

fn default_cfg() -> vnudge::twin::TwinConfig {
    use vnudge::twin::{TwinConfig, PhysicsConfig, ForcingConfig, FitOptions};
    TwinConfig {
        physics: PhysicsConfig { nu: 0.01, alpha: 0.01, mu: 50.0 },
        forcing: ForcingConfig { grashof: 2500.0, band_lo: 2.0, band_hi: 4.0 },
        interpolant: InterpolantOp { kind: InterpolantKind::FourierTruncation, h: 0.125, c1_certified: None },
        spinup_time: 10.0,
        sample_interval: 0.01,
        stepper: StepperConfig { dt: 1e-3, scheme: Scheme::IfRk4, t_end: 50.0, cfl_limit: 0.5 },
        fit: FitOptions { decay_window: 0.6, plateau_window: 0.2, plateau_tol: 1.0 },
        ..TwinConfig::default()
    }
}

fn sweep_probe() {
    let cfg = default_cfg();
    let t0 = Instant::now();
    let table = vnudge::twin::alpha_sweep(&cfg, &[0.08, 0.04, 0.02]).unwrap();
    println!("sweep wall: {:.1} s", t0.elapsed().as_secs_f64());
    print!("{}", table.to_csv());
    println!(
        "slopes: l2 {:.3}, h1 {:.3}, h2 {:.3}",
        table.slope_l2, table.slope_h1, table.slope_h2
    );
    if let Some(floor) = table.floor {
        println!("floor: plateau_l2 = {:.3e}, plateau_h1 = {:.3e}", floor.plateau_l2, floor.plateau_h1);
    }
}

fn control_probe(t_end: f64) {
    let mut cfg = default_cfg();
    cfg.stepper.t_end = t_end;
    let t0 = Instant::now();
    let nudged = vnudge::twin::run_twin(&cfg).unwrap();
    let mut cfg0 = cfg.clone();
    cfg0.physics.mu = 0.0;
    let unnudged = vnudge::twin::run_twin(&cfg0).unwrap();
    println!("wall: {:.1} s", t0.elapsed().as_secs_f64());
    let n = nudged.l2_err.last().unwrap();
    let z = unnudged.l2_err.last().unwrap();
    println!("terminal l2_err: nudged {n:.3e}, mu=0 {z:.3e}, ratio {:.1}", z / n);
}

#[allow(clippy::too_many_arguments)]
fn twin_probe(
    nu: f64,
    grashof: f64,
    mu: f64,
    h: f64,
    alpha: f64,
    t_end: f64,
    spinup: f64,
    sample_interval: f64,
    _mu2: f64,
) {
    use vnudge::twin::{self, TwinConfig, PhysicsConfig, ForcingConfig, FitOptions};
    let cfg = TwinConfig {
        physics: PhysicsConfig { nu, alpha, mu },
        forcing: ForcingConfig { grashof, band_lo: 2.0, band_hi: 4.0 },
        interpolant: InterpolantOp { kind: InterpolantKind::FourierTruncation, h, c1_certified: None },
        spinup_time: spinup,
        sample_interval,
        stepper: StepperConfig { dt: 1e-3, scheme: Scheme::IfRk4, t_end, cfl_limit: 0.5 },
        fit: FitOptions { decay_window: 0.6, plateau_window: 0.2, plateau_tol: 1.0 },
        ..TwinConfig::default()
    };
    let t0 = Instant::now();
    let rec = twin::run_twin(&cfg).unwrap();
    println!("run wall: {:.1} s, cfl_max {:.3}", t0.elapsed().as_secs_f64(), rec.cfl_max);
    let n = rec.times.len();
    for i in (0..n).step_by((n / 40).max(1)) {
        println!(
            "t = {:6.2}  l2_err = {:10.3e}  h1_err = {:10.3e}  X = {:10.3e}  energy_u = {:8.4}",
            rec.times[i], rec.l2_err[i], rec.h1_err[i], rec.x_t[i], rec.energy_u[i]
        );
    }
    println!("X(0) = {:.3e}, X(end) = {:.3e}, drop = {:.1} orders",
        rec.x_t[0], rec.x_t[n - 1], (rec.x_t[0] / rec.x_t[n - 1].max(1e-300)).log10());
    match twin::fit_decay_and_plateau(&rec) {
        Ok(fit) => println!(
            "fit: rate = {:.3}, plateau_l2 = {:.3e}, plateau_h1 = {:.3e}, plateau_x = {:.3e}, knee = {:.2}",
            fit.rate, fit.plateau_l2, fit.plateau_h1, fit.plateau_x, fit.t_knee
        ),
        Err(e) => println!("fit failed: {e}"),
    }
}

fn regime(nu: f64, grashof: f64, n: usize, t_end: f64, dt: f64) {
    let grid = GridSpec::new(n).unwrap();
    let f = model::band_limited_forcing(grid, 2.0, 4.0, grashof, nu, 7).unwrap();
    let op = InterpolantOp::new(InterpolantKind::FourierTruncation, 0.125).unwrap();
    let p = PhysicsParams::new(nu, 0.0, 0.0, op, f).unwrap();
    let cfg = StepperConfig { dt, scheme: Scheme::IfRk4, t_end, cfl_limit: 0.5 };
    let mut stepper = Stepper::new(RhsKind::Nse, &cfg, grid, &p).unwrap();
    // laminar + perturbation start
    let mut u = p.forcing.clone();
    let (rows, cols) = grid.spectral_shape();
    for comp in 0..2 {
        let c = u.component_mut(comp).coeffs_mut();
        for row in 0..rows {
            for col in 0..cols {
                let k2 = grid.k2(row, col);
                if k2 > 0.0 {
                    c[[row, col]] /= nu * k2;
                }
            }
        }
    }
    let base = ops::norms(&u).l2;
    let mut noise = random_smooth_velocity(grid, 8);
    let nl2 = ops::norms(&noise).l2;
    noise.scale(0.1 * base.max(1.0) / nl2);
    u.add_scaled(1.0, &noise);

    let steps = (t_end / dt).round() as usize;
    let sample = (0.5 / dt).round() as usize;
    let mut prev_l2 = 0.0;
    let t0 = Instant::now();
    for s in 0..=steps {
        if s % sample == 0 {
            let nm = ops::norms(&u);
            // u_t proxy: finite change of l2 norm per unit time + speed
            let umax = stepper.ws.max_speed(&u);
            println!(
                "t = {:6.2}  l2 = {:9.4}  h1 = {:9.3}  dl2/dt = {:+9.5}  umax = {:7.3}  cfl = {:.3}",
                s as f64 * dt,
                nm.l2,
                nm.h1_semi,
                (nm.l2 - prev_l2) / (sample as f64 * dt),
                umax,
                umax * dt * n as f64
            );
            prev_l2 = nm.l2;
        }
        u = stepper.step(&u, &p, None).unwrap();
    }
    println!("wall: {:.1} s for {steps} steps", t0.elapsed().as_secs_f64());
}
