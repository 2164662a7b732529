//! CSV-producing experiment commands.

use std::fmt::Write as _;

use crate::analytics::{self, mean_received_power, mpc_count_cap, mpc_pmf};
use crate::error::{Error, Result};
use crate::simulator::{run_experiment, AngleHistogram, RunOptions, ANGLE_BINS};

use super::config::RunConfig;

/// Version string written into every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run-level settings that may be overridden on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<u64>,
    pub workers: usize,
}

impl Overrides {
    pub fn none() -> Self {
        Self {
            seed: None,
            realizations: None,
            workers: 0,
        }
    }
}

pub(crate) struct Resolved {
    pub seed: u64,
    pub realizations: u64,
    pub power_realizations: u64,
    pub workers: usize,
}

pub(crate) fn resolve(cfg: &RunConfig, o: &Overrides) -> Resolved {
    Resolved {
        seed: o.seed.unwrap_or(cfg.seed),
        realizations: o.realizations.unwrap_or(cfg.n_realizations),
        power_realizations: o.realizations.unwrap_or(cfg.power_realizations),
        workers: o.workers,
    }
}

fn header(command: &str, cfg: &RunConfig, seed: u64, realizations: u64) -> String {
    format!(
        "# dualvr {VERSION}\n# command: {command}\n# config_sha256: {}\n# seed: {seed}\n# realizations: {realizations}\n",
        cfg.config_hash
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

/// Analytic vs empirical MPC-count PMF.
pub fn cmd_pmf(cfg: &RunConfig, o: &Overrides) -> Result<String> {
    let r = resolve(cfg, o);
    let s = cfg.scenario;
    let summary = run_experiment(
        &s,
        &cfg.interactions[0],
        &RunOptions::new(r.realizations, r.seed).with_workers(r.workers),
    );
    let empirical = summary.empirical_pmf();
    let last = (mpc_count_cap(&s) as usize).max(empirical.len().saturating_sub(1));
    let n_real = summary.n_realizations as f64;

    let mut out = header("pmf", cfg, r.seed, r.realizations);
    out.push_str("n,analytic_pmf,empirical_pmf,stderr\n");
    for n in 0..=last {
        let p_hat = empirical.get(n).copied().unwrap_or(0.0);
        let se = (p_hat * (1.0 - p_hat) / n_real).sqrt();
        writeln!(out, "{n},{},{p_hat},{se}", mpc_pmf(n as u64, &s)).unwrap();
    }
    Ok(out)
}

/// One point of the mean-ToA sweep, microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToaPoint {
    pub d_prime: f64,
    pub gamma: f64,
    /// `None` when no MPC can exist.
    pub analytic_us: Option<f64>,
    pub empirical_us: Option<f64>,
    pub stderr_us: Option<f64>,
}

/// Analytic and stratified empirical mean ToA on the (d', γ) grid.
pub fn toa_sweep(cfg: &RunConfig, o: &Overrides) -> Result<Vec<ToaPoint>> {
    let r = resolve(cfg, o);
    let mut points = Vec::new();
    for &d in &cfg.sweep_d_prime {
        for &g in &cfg.sweep_gamma {
            let s = cfg.scenario.with_d_prime(d)?.with_gamma(g)?;
            let analytic = match analytics::mean_toa(&s) {
                Ok(t) => Some(t * 1e6),
                Err(Error::NoPath) => None,
                Err(e) => return Err(e),
            };
            let summary = run_experiment(
                &s,
                &cfg.interactions[0],
                &RunOptions::new(r.realizations, r.seed).with_workers(r.workers),
            );
            let emp = summary.toa.stratified(g);
            let c = analytics::SPEED_OF_LIGHT;
            points.push(ToaPoint {
                d_prime: d,
                gamma: g,
                analytic_us: analytic,
                empirical_us: emp.map(|(m, _)| m / c * 1e6),
                stderr_us: emp.map(|(_, se)| se / c * 1e6),
            });
        }
    }
    Ok(points)
}

pub fn cmd_toa_sweep(cfg: &RunConfig, o: &Overrides) -> Result<String> {
    let r = resolve(cfg, o);
    let points = toa_sweep(cfg, o)?;
    let mut out = header("toa-sweep", cfg, r.seed, r.realizations);
    out.push_str("d_prime_m,gamma,analytic_mean_toa_us,empirical_mean_toa_us,stderr_us,status\n");
    for p in points {
        let status = match (p.analytic_us, p.empirical_us) {
            (Some(_), Some(_)) => "ok",
            (None, None) => "no_path",
            _ => "mismatch",
        };
        writeln!(
            out,
            "{},{},{},{},{},{status}",
            p.d_prime,
            p.gamma,
            fmt_opt(p.analytic_us),
            fmt_opt(p.empirical_us),
            fmt_opt(p.stderr_us)
        )
        .unwrap();
    }
    Ok(out)
}

/// One row of the power sweep, watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    pub d_prime: f64,
    pub mode: analytics::InteractionMode,
    pub theorem_mean: f64,
    pub theorem_stderr: f64,
    pub simulated_mean: f64,
    pub simulated_stderr: f64,
}

impl PowerPoint {
    /// |difference| in units of the combined standard error (0 when both
    /// estimates are exactly equal).
    pub fn z_score(&self) -> f64 {
        let diff = (self.theorem_mean - self.simulated_mean).abs();
        if diff == 0.0 {
            return 0.0;
        }
        diff / self.theorem_stderr.hypot(self.simulated_stderr)
    }
}

pub fn power_sweep(cfg: &RunConfig, o: &Overrides) -> Result<Vec<PowerPoint>> {
    let r = resolve(cfg, o);
    let mut rows = Vec::new();
    for &d in &cfg.power_d_prime {
        let s = cfg.scenario.with_d_prime(d)?;
        for m in &cfg.interactions {
            let theorem = mean_received_power(&s, m, cfg.n_mc, r.seed)?;
            let sim = run_experiment(
                &s,
                m,
                &RunOptions::new(r.power_realizations, r.seed).with_workers(r.workers),
            );
            rows.push(PowerPoint {
                d_prime: d,
                mode: m.mode(),
                theorem_mean: theorem.mean,
                theorem_stderr: theorem.stderr,
                simulated_mean: sim.power.mean(),
                simulated_stderr: sim.power.stderr(),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_power(cfg: &RunConfig, o: &Overrides) -> Result<String> {
    let r = resolve(cfg, o);
    let rows = power_sweep(cfg, o)?;
    let mut out = header("power", cfg, r.seed, r.power_realizations);
    writeln!(out, "# n_mc: {}", cfg.n_mc).unwrap();
    out.push_str("d_prime_m,mode,theorem1_mean_W,theorem1_stderr,eq7_mc_mean_W,eq7_mc_stderr\n");
    for p in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.d_prime,
            p.mode.as_str(),
            p.theorem_mean,
            p.theorem_stderr,
            p.simulated_mean,
            p.simulated_stderr
        )
        .unwrap();
    }
    Ok(out)
}

/// Binned AoD/AoA densities over (−π, π].
pub fn cmd_angles(cfg: &RunConfig, o: &Overrides) -> Result<String> {
    let r = resolve(cfg, o);
    let summary = run_experiment(
        &cfg.scenario,
        &cfg.interactions[0],
        &RunOptions::new(r.realizations, r.seed).with_workers(r.workers),
    );
    let aod = summary.aod.densities();
    let aoa = summary.aoa.densities();
    let mut out = header("angles", cfg, r.seed, r.realizations);
    writeln!(out, "# mpc_samples: {}", summary.aod.total()).unwrap();
    out.push_str("bin_lo_rad,bin_hi_rad,aod_density,aoa_density\n");
    for i in 0..ANGLE_BINS {
        let (lo, hi) = AngleHistogram::bin_edges(i);
        writeln!(out, "{lo},{hi},{},{}", aod[i], aoa[i]).unwrap();
    }
    Ok(out)
}
