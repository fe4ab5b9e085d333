//! Flat `key = value` configuration files with `#` comments.
//!
//! Dotted keys namespace sections (`physics.nu`, `grid.n`, ...). Unknown
//! keys are hard errors carrying the offending key and line; omitted keys
//! take documented defaults. `emit` writes a canonical file that parses back
//! to an identical configuration (floats at 17 significant digits).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::interp::{InterpolantKind, InterpolantOp};
use crate::stepper::{Scheme, StepperConfig};
use crate::twin::{FitOptions, ForcingConfig, InitialCondition, PhysicsConfig, TwinConfig, VInit};

pub const KNOWN_KEYS: &[&str] = &[
    "grid.n",
    "grid.dealias",
    "physics.nu",
    "physics.alpha",
    "physics.mu",
    "forcing.grashof",
    "forcing.band_lo",
    "forcing.band_hi",
    "interpolant.kind",
    "interpolant.h",
    "stepper.dt",
    "stepper.scheme",
    "stepper.t_end",
    "stepper.cfl_limit",
    "run.spinup_time",
    "run.v_init",
    "run.perturbation",
    "run.sample_interval",
    "run.seed",
    "run.initial",
    "conditions.c",
    "fit.decay_window",
    "fit.plateau_window",
    "fit.plateau_tol",
];

struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    line.to_string(),
                    Some(line_no),
                    "expected `key = value`",
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if value.is_empty() {
                return Err(Error::config(key, Some(line_no), "empty value"));
            }
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::config(key, Some(line_no), "unknown key"));
            }
            if entries.insert(key.clone(), (value, line_no)).is_some() {
                return Err(Error::config(key, Some(line_no), "duplicate key"));
            }
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse::<f64>()
                .map_err(|_| Error::config(key, Some(line), format!("expected a number, got `{v}`"))),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<u64>().map_err(|_| {
                Error::config(key, Some(line), format!("expected a non-negative integer, got `{v}`"))
            }),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<(usize, Option<usize>)> {
        match self.take(key) {
            None => Ok((default, None)),
            Some((v, line)) => v
                .parse::<usize>()
                .map(|x| (x, Some(line)))
                .map_err(|_| {
                    Error::config(key, Some(line), format!("expected a positive integer, got `{v}`"))
                }),
        }
    }
}

/// Parse a configuration file body into a fully resolved `TwinConfig`.
pub fn parse_config(text: &str) -> Result<TwinConfig> {
    let defaults = TwinConfig::default();
    let mut raw = RawConfig::parse(text)?;

    let (n, n_line) = raw.usize("grid.n", defaults.grid.n())?;
    let dealias = match raw.take("grid.dealias") {
        None => defaults.grid.dealias_fraction(),
        Some((v, line)) => parse_fraction(&v)
            .ok_or_else(|| Error::config("grid.dealias", Some(line), format!("expected a fraction like 2/3, got `{v}`")))?,
    };
    let grid = GridSpec::with_dealias(n, dealias.0, dealias.1).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => Error::config("grid.n", n_line, reason),
        other => other,
    })?;

    let physics = PhysicsConfig {
        nu: raw.f64("physics.nu", defaults.physics.nu)?,
        alpha: raw.f64("physics.alpha", defaults.physics.alpha)?,
        mu: raw.f64("physics.mu", defaults.physics.mu)?,
    };
    let forcing = ForcingConfig {
        grashof: raw.f64("forcing.grashof", defaults.forcing.grashof)?,
        band_lo: raw.f64("forcing.band_lo", defaults.forcing.band_lo)?,
        band_hi: raw.f64("forcing.band_hi", defaults.forcing.band_hi)?,
    };

    let kind = match raw.take("interpolant.kind") {
        None => defaults.interpolant.kind,
        Some((v, line)) => InterpolantKind::parse(&v).ok_or_else(|| {
            Error::config(
                "interpolant.kind",
                Some(line),
                format!("expected fourier_truncation | nodal_bilinear | volume_average, got `{v}`"),
            )
        })?,
    };
    let h = raw.f64("interpolant.h", defaults.interpolant.h)?;
    let interpolant = InterpolantOp { kind, h, c1_certified: None };

    let scheme = match raw.take("stepper.scheme") {
        None => defaults.stepper.scheme,
        Some((v, line)) => Scheme::parse(&v).ok_or_else(|| {
            Error::config(
                "stepper.scheme",
                Some(line),
                format!("expected if_rk4 | imex_cnab2, got `{v}`"),
            )
        })?,
    };
    let stepper = StepperConfig {
        dt: raw.f64("stepper.dt", defaults.stepper.dt)?,
        scheme,
        t_end: raw.f64("stepper.t_end", defaults.stepper.t_end)?,
        cfl_limit: raw.f64("stepper.cfl_limit", defaults.stepper.cfl_limit)?,
    };

    let v_init = match raw.take("run.v_init") {
        None => defaults.v_init,
        Some((v, line)) => match v.as_str() {
            "zero" => VInit::Zero,
            "perturbed" => VInit::Perturbed(0.0), // amplitude filled below
            "independent" => VInit::Independent,
            other => {
                return Err(Error::config(
                    "run.v_init",
                    Some(line),
                    format!("expected zero | perturbed | independent, got `{other}`"),
                ))
            }
        },
    };
    let perturbation = raw.f64("run.perturbation", 0.0)?;
    let v_init = match v_init {
        VInit::Perturbed(_) => VInit::Perturbed(perturbation),
        other => other,
    };

    let initial = match raw.take("run.initial") {
        None => defaults.initial,
        Some((v, line)) => InitialCondition::parse(&v).ok_or_else(|| {
            Error::config(
                "run.initial",
                Some(line),
                format!("expected laminar_perturbed | taylor_green | random, got `{v}`"),
            )
        })?,
    };

    let cfg = TwinConfig {
        grid,
        physics,
        forcing,
        interpolant,
        stepper,
        spinup_time: raw.f64("run.spinup_time", defaults.spinup_time)?,
        v_init,
        sample_interval: raw.f64("run.sample_interval", defaults.sample_interval)?,
        seed: raw.u64("run.seed", defaults.seed)?,
        initial,
        c_assumed: raw.f64("conditions.c", defaults.c_assumed)?,
        fit: FitOptions {
            decay_window: raw.f64("fit.decay_window", defaults.fit.decay_window)?,
            plateau_window: raw.f64("fit.plateau_window", defaults.fit.plateau_window)?,
            plateau_tol: raw.f64("fit.plateau_tol", defaults.fit.plateau_tol)?,
        },
    };
    debug_assert!(raw.entries.is_empty(), "all known keys consumed");
    cfg.validate()?;
    Ok(cfg)
}

fn parse_fraction(s: &str) -> Option<(u32, u32)> {
    match s.split_once('/') {
        Some((a, b)) => Some((a.trim().parse().ok()?, b.trim().parse().ok()?)),
        None => Some((s.trim().parse().ok()?, 1)),
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Canonical text form of a configuration; `parse_config(emit(c)) == c`.
pub fn emit_config(cfg: &TwinConfig) -> String {
    let (num, den) = cfg.grid.dealias_fraction();
    let (v_init, perturbation) = match cfg.v_init {
        VInit::Zero => ("zero", 0.0),
        VInit::Perturbed(eps) => ("perturbed", eps),
        VInit::Independent => ("independent", 0.0),
    };
    let mut out = String::new();
    out.push_str(&format!("grid.n = {}\n", cfg.grid.n()));
    out.push_str(&format!("grid.dealias = {num}/{den}\n"));
    out.push_str(&format!("physics.nu = {}\n", fmt_f64(cfg.physics.nu)));
    out.push_str(&format!("physics.alpha = {}\n", fmt_f64(cfg.physics.alpha)));
    out.push_str(&format!("physics.mu = {}\n", fmt_f64(cfg.physics.mu)));
    out.push_str(&format!("forcing.grashof = {}\n", fmt_f64(cfg.forcing.grashof)));
    out.push_str(&format!("forcing.band_lo = {}\n", fmt_f64(cfg.forcing.band_lo)));
    out.push_str(&format!("forcing.band_hi = {}\n", fmt_f64(cfg.forcing.band_hi)));
    out.push_str(&format!("interpolant.kind = {}\n", cfg.interpolant.kind.name()));
    out.push_str(&format!("interpolant.h = {}\n", fmt_f64(cfg.interpolant.h)));
    out.push_str(&format!("stepper.dt = {}\n", fmt_f64(cfg.stepper.dt)));
    out.push_str(&format!("stepper.scheme = {}\n", cfg.stepper.scheme.name()));
    out.push_str(&format!("stepper.t_end = {}\n", fmt_f64(cfg.stepper.t_end)));
    out.push_str(&format!("stepper.cfl_limit = {}\n", fmt_f64(cfg.stepper.cfl_limit)));
    out.push_str(&format!("run.spinup_time = {}\n", fmt_f64(cfg.spinup_time)));
    out.push_str(&format!("run.v_init = {v_init}\n"));
    out.push_str(&format!("run.perturbation = {}\n", fmt_f64(perturbation)));
    out.push_str(&format!("run.sample_interval = {}\n", fmt_f64(cfg.sample_interval)));
    out.push_str(&format!("run.seed = {}\n", cfg.seed));
    out.push_str(&format!("run.initial = {}\n", cfg.initial.name()));
    out.push_str(&format!("conditions.c = {}\n", fmt_f64(cfg.c_assumed)));
    out.push_str(&format!("fit.decay_window = {}\n", fmt_f64(cfg.fit.decay_window)));
    out.push_str(&format!("fit.plateau_window = {}\n", fmt_f64(cfg.fit.plateau_window)));
    out.push_str(&format!("fit.plateau_tol = {}\n", fmt_f64(cfg.fit.plateau_tol)));
    out
}

/// Reproducibility metadata written next to every run's artifacts. The
/// config echo lives in its own sidecar file (exact `emit_config` output); the
/// manifest lists every file the run emitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub code_version: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("code_version = {}\n", self.code_version));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("started_unix = {}\n", self.started_unix));
        out.push_str(&format!("finished_unix = {}\n", self.finished_unix));
        for (i, a) in self.artifacts.iter().enumerate() {
            out.push_str(&format!("artifact.{i} = {a}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_key_overrides_one_default() {
        let cfg = parse_config("physics.nu = 0.05\n").unwrap();
        let d = TwinConfig::default();
        assert_eq!(cfg.physics.nu, 0.05);
        assert_eq!(cfg.physics.mu, d.physics.mu);
        assert_eq!(cfg.grid, d.grid);
        assert_eq!(cfg.seed, d.seed);
    }

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("# nothing but comments\n\n").unwrap();
        assert_eq!(cfg, TwinConfig::default());
    }

    #[test]
    fn odd_grid_is_rejected_naming_the_key() {
        let err = parse_config("grid.n = 31\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("grid.n"), "{msg}");
        assert!(msg.contains("even"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn unknown_key_and_type_mismatch_are_hard_errors() {
        let err = parse_config("physics.viscosity = 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
        assert!(err.to_string().contains("physics.viscosity"), "{err}");

        let err = parse_config("stepper.dt = fast\n").unwrap_err();
        assert!(err.to_string().contains("stepper.dt"), "{err}");

        let err = parse_config("run.seed = -3\n").unwrap_err();
        assert!(err.to_string().contains("run.seed"), "{err}");
    }

    #[test]
    fn negative_dt_is_rejected() {
        let err = parse_config("stepper.dt = -1\n").unwrap_err();
        assert!(err.to_string().contains("stepper.dt"), "{err}");
    }

    #[test]
    fn comments_and_inline_comments_are_ignored() {
        let text = "
# full-line comment
grid.n = 64   # inline comment
physics.mu = 12.5
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.grid.n(), 64);
        assert_eq!(cfg.physics.mu, 12.5);
    }

    #[test]
    fn parse_emit_parse_is_identity() {
        let text = "
grid.n = 64
grid.dealias = 2/3
physics.nu = 0.037
physics.alpha = 0.004
physics.mu = 13.75
forcing.grashof = 123.456
interpolant.kind = nodal_bilinear
interpolant.h = 0.0625
stepper.scheme = imex_cnab2
stepper.dt = 0.0005
run.v_init = perturbed
run.perturbation = 0.01
run.seed = 99
";
        let a = parse_config(text).unwrap();
        let b = parse_config(&emit_config(&a)).unwrap();
        assert_eq!(a, b);
        let c = parse_config(&emit_config(&TwinConfig::default())).unwrap();
        assert_eq!(c, TwinConfig::default());
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_config("grid.n = 32\ngrid.n = 64\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }
}
