//! Command-line front end: reference runs, twin assimilation experiments,
//! α sweeps, and the built-in property suite.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
//! 4 property failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use vnudge::checkpoint;
use vnudge::config::{emit_config, parse_config, RunManifest};
use vnudge::diag;
use vnudge::error::Error;
use vnudge::twin::{self, TwinConfig};
use vnudge::verify::run_property_suite;

#[derive(Parser)]
#[command(name = "vnudge", version, about = "2D data assimilation with a nudged Navier-Stokes-Voigt model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the reference Navier-Stokes system and record its diagnostics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides run.seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Caps the worker thread count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the full twin experiment and fit decay rate and plateau.
    Assimilate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Repeat the twin experiment over a list of Voigt lengths α.
    SweepAlpha {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated α values, e.g. 0.08,0.04,0.02
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the built-in property suite and print one pass/fail line each.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dev hook: run the suite against a sign-broken advective term to
        /// confirm the identities catch it (the suite must then fail).
        #[arg(long, hide = true)]
        mutate_bilinear: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } => 2,
        Error::BlowUp { .. } => 3,
        Error::Io(_) | Error::Format(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Simulate { config, out, seed, workers } => {
            init_workers(workers);
            let cfg = load_config(&config, seed)?;
            simulate(&cfg, &out)
        }
        Cmd::Assimilate { config, out, seed, workers } => {
            init_workers(workers);
            let cfg = load_config(&config, seed)?;
            assimilate(&cfg, &out)
        }
        Cmd::SweepAlpha { config, out, alphas, seed, workers } => {
            init_workers(workers);
            let cfg = load_config(&config, seed)?;
            let alphas = parse_alphas(&alphas)?;
            sweep_alpha(&cfg, &alphas, &out)
        }
        Cmd::Verify { out, mutate_bilinear } => verify(out.as_deref(), mutate_bilinear),
    }
}

fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        // ignore failure: the global pool may already exist
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<TwinConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::config(path.display().to_string(), None, format!("cannot read config: {e}"))
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn parse_alphas(arg: &str) -> Result<Vec<f64>, Error> {
    arg.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid("alphas", format!("`{s}` is not a number")))
        })
        .collect()
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

struct OutDir {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        std::fs::write(self.dir.join(name), contents)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn path_of(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn finish(self, cfg: &TwinConfig, started: u64) -> Result<(), Error> {
        let manifest = RunManifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            started_unix: started,
            finished_unix: now_unix(),
            artifacts: self.artifacts,
        };
        std::fs::write(self.dir.join("manifest.txt"), manifest.to_text())?;
        Ok(())
    }
}

fn simulate(cfg: &TwinConfig, out: &Path) -> Result<ExitCode, Error> {
    let started = now_unix();
    let mut dir = OutDir::create(out)?;
    dir.write("config_echo.conf", &emit_config(cfg))?;
    let rec = twin::run_reference(cfg)?;
    dir.write("reference.csv", &rec.to_csv())?;
    dir.write(
        "spectrum_final.csv",
        &diag::spectrum_csv(&diag::energy_spectrum(&rec.final_state)),
    )?;
    checkpoint::write_velocity_checkpoint(&dir.path_of("state_final.vndg"), &rec.final_state)?;

    let last = rec.samples.last().expect("at least the initial sample");
    println!(
        "reference run: G = {:.4}, final l2 = {:.6e}, cfl_max = {:.3}",
        rec.grashof.g, last.l2, rec.cfl_max
    );
    if rec.cfl_max > cfg.stepper.cfl_limit {
        println!(
            "warning: advisory CFL limit exceeded ({:.3} > {:.3})",
            rec.cfl_max, cfg.stepper.cfl_limit
        );
    }
    let ball_l2 = 2.0 * cfg.physics.nu * cfg.physics.nu * rec.grashof.g * rec.grashof.g;
    if ball_l2 > 0.0 {
        let frac = rec.samples.iter().filter(|s| s.l2 * s.l2 > ball_l2).count() as f64
            / rec.samples.len() as f64;
        println!("absorbing-ball check: fraction of samples above 2nu^2G^2: {frac:.3}");
    }
    dir.finish(cfg, started)?;
    Ok(ExitCode::SUCCESS)
}

fn assimilate(cfg: &TwinConfig, out: &Path) -> Result<ExitCode, Error> {
    let started = now_unix();
    let mut dir = OutDir::create(out)?;
    dir.write("config_echo.conf", &emit_config(cfg))?;
    let rec = match twin::run_twin(cfg) {
        Ok(rec) => rec,
        Err(Error::BlowUp { time, partial }) => {
            // keep whatever was recorded before the failure
            if let Some(partial) = partial {
                dir.write("twin_partial.csv", &partial.to_csv())?;
                dir.finish(cfg, started)?;
            }
            return Err(Error::BlowUp { time, partial: None });
        }
        Err(e) => return Err(e),
    };
    dir.write("twin.csv", &rec.to_csv())?;

    let c = &rec.conditions;
    println!(
        "conditions: G = {:.4}, c1 = {:.4}, h = {} (h_max = {:.3e})",
        c.g, c.c1, c.h, c.h_max
    );
    println!(
        "  M1 = {:.4e} (alpha_max {:.4e}), M2 = {:.4e} (alpha_max {:.4e}), C = {}",
        c.m1, c.alpha_max_t2, c.m2, c.alpha_max_t3, c.c_assumed
    );
    println!(
        "  satisfied: theorem2 = {}, theorem3 = {}",
        c.satisfied_t2, c.satisfied_t3
    );
    if rec.cfl_max > cfg.stepper.cfl_limit {
        println!(
            "warning: advisory CFL limit exceeded ({:.3} > {:.3})",
            rec.cfl_max, cfg.stepper.cfl_limit
        );
    }

    let x0 = rec.x_t.first().copied().unwrap_or(0.0);
    let mut summary = String::new();
    summary.push_str(&format!("x_initial = {x0:.16e}\n"));
    summary.push_str(&format!("cfl_max = {:.16e}\n", rec.cfl_max));
    summary.push_str(&format!("conditions_satisfied_t2 = {}\n", c.satisfied_t2));
    summary.push_str(&format!("conditions_satisfied_t3 = {}\n", c.satisfied_t3));
    match twin::fit_decay_and_plateau(&rec) {
        Ok(fit) => {
            let orders = if fit.plateau_x > 0.0 {
                (x0 / fit.plateau_x).log10()
            } else {
                f64::INFINITY
            };
            let decayed = fit.rate > 0.0 && orders >= 1.0;
            println!(
                "fit: rate = {:.4}, plateau_l2 = {:.4e}, plateau_h1 = {:.4e}, t_knee = {:.3}, decay = {:.2} orders",
                fit.rate, fit.plateau_l2, fit.plateau_h1, fit.t_knee, orders
            );
            summary.push_str("fit_status = ok\n");
            summary.push_str(&format!("rate = {:.16e}\n", fit.rate));
            summary.push_str(&format!("plateau_l2 = {:.16e}\n", fit.plateau_l2));
            summary.push_str(&format!("plateau_h1 = {:.16e}\n", fit.plateau_h1));
            summary.push_str(&format!("plateau_h2 = {:.16e}\n", fit.plateau_h2));
            summary.push_str(&format!("plateau_x = {:.16e}\n", fit.plateau_x));
            summary.push_str(&format!("t_knee = {:.16e}\n", fit.t_knee));
            summary.push_str(&format!("decay_orders = {orders:.4}\n"));
            summary.push_str(&format!("decay_detected = {decayed}\n"));
        }
        Err(e) => {
            println!("fit: {e}");
            summary.push_str("fit_status = no_plateau\n");
            summary.push_str("decay_detected = false\n");
            summary.push_str(&format!("fit_error = {e}\n"));
        }
    }
    dir.write("summary.txt", &summary)?;
    dir.finish(cfg, started)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep_alpha(cfg: &TwinConfig, alphas: &[f64], out: &Path) -> Result<ExitCode, Error> {
    let started = now_unix();
    let mut dir = OutDir::create(out)?;
    dir.write("config_echo.conf", &emit_config(cfg))?;
    let table = twin::alpha_sweep(cfg, alphas)?;
    dir.write("sweep.csv", &table.to_csv())?;
    let mut summary = String::new();
    summary.push_str(&format!("slope_plateau_l2 = {:.16e}\n", table.slope_l2));
    summary.push_str(&format!("slope_plateau_h1 = {:.16e}\n", table.slope_h1));
    summary.push_str(&format!("slope_plateau_h2 = {:.16e}\n", table.slope_h2));
    if let Some(floor) = table.floor {
        summary.push_str(&format!("floor_plateau_l2 = {:.16e}\n", floor.plateau_l2));
        summary.push_str(&format!("floor_plateau_h1 = {:.16e}\n", floor.plateau_h1));
    }
    dir.write("summary.txt", &summary)?;
    print!("{}", table.to_csv());
    println!(
        "slopes: plateau_l2 {:.3}, plateau_h1 {:.3}, plateau_h2 {:.3}",
        table.slope_l2, table.slope_h1, table.slope_h2
    );
    dir.finish(cfg, started)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(out: Option<&Path>, mutate_bilinear: bool) -> Result<ExitCode, Error> {
    let results = run_property_suite(mutate_bilinear);
    let mut all_pass = true;
    let mut report = String::new();
    for r in &results {
        let line = format!(
            "{:<22} {}  ({})",
            r.name,
            if r.pass { "pass" } else { "FAIL" },
            r.detail
        );
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
        all_pass &= r.pass;
    }
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("verify.txt"), report)?;
    }
    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(4))
    }
}
