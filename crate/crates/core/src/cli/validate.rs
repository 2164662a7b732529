//! Self-check suite behind the `validate` command.

use std::f64::consts::PI;
use std::fmt;

use crate::analytics::{
    self, distance_cdf_bs, distance_cdf_ms, joint_pdf_mass, mean_received_power, mpc_count_cap,
    mpc_pmf,
};
use crate::error::{Error, Result};
use crate::geometry::lens_area;
use crate::pointprocess::ClassKind;
use crate::simulator::{collect_records, run_experiment, RunOptions};
use crate::stats::{chi_square_test, ks_critical_value, ks_statistic};

use super::commands::{resolve, Overrides};
use super::config::RunConfig;

pub const ALPHA: f64 = 0.01;
pub const CONTINUITY_RTOL: f64 = 1e-6;
pub const TOA_RTOL: f64 = 0.01;
pub const POWER_SIGMAS: f64 = 3.0;
pub const JOINT_MASS_TOL: f64 = 1e-3;
const KS_MAX_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn add(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}: {}", c.name, c.detail)?;
        }
        let failed = self.failures().count();
        writeln!(
            f,
            "{} checks, {} failed: {}",
            self.checks.len(),
            failed,
            if failed == 0 { "OK" } else { "FAILED" }
        )
    }
}

fn check_continuity(report: &mut ValidationReport, name: &str, a: f64, b: f64) -> Result<()> {
    let full = PI * a.min(b).powi(2);
    let eps = 1e-9 * (a + b);
    let inner = lens_area((a - b).abs() + eps, a, b)?;
    let outer = lens_area(a + b - eps, a, b)?;
    let inner_err = (inner - full).abs() / full;
    let outer_err = outer / full;
    report.add(
        format!("geometry.continuity.{name}"),
        inner_err < CONTINUITY_RTOL && outer_err < CONTINUITY_RTOL,
        format!("internal tangency rel err {inner_err:.2e}, external {outer_err:.2e}"),
    );
    Ok(())
}

/// Runs every check for the configured scenario.
pub fn validate(cfg: &RunConfig, o: &Overrides) -> Result<ValidationReport> {
    let r = resolve(cfg, o);
    let s = cfg.scenario;
    let mut report = ValidationReport::default();

    for kind in ClassKind::ALL {
        let c = s.class(kind);
        check_continuity(&mut report, kind.as_str(), c.v1(), c.v2())?;
    }

    let cap = mpc_count_cap(&s);
    let mass: f64 = (0..=cap).map(|n| mpc_pmf(n, &s)).sum();
    report.add(
        "pmf.normalization",
        mass > 1.0 - 1e-10 && mass < 1.0 + 1e-10,
        format!("sum over 0..={cap} = {mass:.12}"),
    );

    let opts = RunOptions::new(r.realizations, r.seed).with_workers(r.workers);
    let interaction = cfg.interactions[0];
    let summary = run_experiment(&s, &interaction, &opts);

    let observed: Vec<u64> = (0..=cap as usize)
        .map(|n| summary.mpc_count_histogram.get(&n).copied().unwrap_or(0))
        .collect();
    let beyond: u64 = summary
        .mpc_count_histogram
        .range(cap as usize + 1..)
        .map(|(_, c)| *c)
        .sum();
    let mut probs: Vec<f64> = (0..=cap).map(|n| mpc_pmf(n, &s)).collect();
    let mut obs = observed;
    obs.push(beyond);
    probs.push((1.0 - mass).max(0.0));
    let chi = chi_square_test(&obs, &probs, ALPHA);
    report.add(
        "pmf.chi_square",
        chi.passes(),
        format!(
            "X2 = {:.2} on {} dof, critical {:.2}",
            chi.statistic, chi.dof, chi.critical
        ),
    );

    let records = collect_records(&s, &interaction, &opts);
    for kind in ClassKind::ALL {
        if !s.is_active(kind) {
            report.add(
                format!("distances.{}", kind.as_str()),
                true,
                "class inactive (zero-area lens or zero density), skipped",
            );
            continue;
        }
        if kind == ClassKind::Tall && s.gamma() == 0.0 {
            report.add(
                "distances.tall",
                true,
                "gamma = 0, tall class never visible, skipped",
            );
            continue;
        }
        let xs: Vec<f64> = records
            .iter()
            .filter(|m| m.class_kind == kind)
            .take(KS_MAX_SAMPLES)
            .map(|m| m.x)
            .collect();
        let ys: Vec<f64> = records
            .iter()
            .filter(|m| m.class_kind == kind)
            .take(KS_MAX_SAMPLES)
            .map(|m| m.y)
            .collect();
        if xs.len() < 100 {
            report.add(
                format!("distances.{}", kind.as_str()),
                true,
                format!("only {} samples, KS skipped", xs.len()),
            );
            continue;
        }
        let crit = ks_critical_value(xs.len(), ALPHA);
        let dx = ks_statistic(&xs, |x| distance_cdf_bs(x, &s, kind).unwrap_or(f64::NAN));
        let dy = ks_statistic(&ys, |y| distance_cdf_ms(y, &s, kind).unwrap_or(f64::NAN));
        report.add(
            format!("distances.{}.ks_x", kind.as_str()),
            dx <= crit,
            format!("D = {dx:.5}, critical {crit:.5}, n = {}", xs.len()),
        );
        report.add(
            format!("distances.{}.ks_y", kind.as_str()),
            dy <= crit,
            format!("D = {dy:.5}, critical {crit:.5}, n = {}", ys.len()),
        );
        if s.d_prime() > 0.0 {
            let m = joint_pdf_mass(&s, kind)?;
            report.add(
                format!("joint_pdf.{}.mass", kind.as_str()),
                (m - 1.0).abs() < JOINT_MASS_TOL,
                format!("integral = {m:.6}"),
            );
        }
    }

    match analytics::mean_path_length(&s) {
        Ok(tau) => match summary.toa.stratified(s.gamma()) {
            Some((emp, se)) => {
                let rel = (emp - tau).abs() / tau;
                report.add(
                    "toa.mean",
                    rel < TOA_RTOL,
                    format!(
                        "analytic {:.6} us, empirical {:.6} us (se {:.2e}), rel err {rel:.2e}",
                        tau / analytics::SPEED_OF_LIGHT * 1e6,
                        emp / analytics::SPEED_OF_LIGHT * 1e6,
                        se / analytics::SPEED_OF_LIGHT * 1e6
                    ),
                );
            }
            None => report.add(
                "toa.mean",
                false,
                "analytic mean exists but no MPC was simulated",
            ),
        },
        Err(Error::NoPath) => {
            let consistent = summary.total_mpcs() == 0;
            report.add(
                "toa.no_path",
                consistent,
                format!(
                    "no-path condition: no class can be active; simulated MPCs = {}",
                    summary.total_mpcs()
                ),
            );
        }
        Err(e) => return Err(e),
    }

    let power_opts = RunOptions::new(r.power_realizations, r.seed).with_workers(r.workers);
    for m in &cfg.interactions {
        let theorem = mean_received_power(&s, m, cfg.n_mc, r.seed)?;
        let sim = run_experiment(&s, m, &power_opts).power;
        let diff = (theorem.mean - sim.mean()).abs();
        let sigma = theorem.stderr.hypot(sim.stderr());
        let ok = diff == 0.0 || diff <= POWER_SIGMAS * sigma;
        report.add(
            format!("power.{}", m.mode().as_str()),
            ok,
            format!(
                "theorem {:.4e} ± {:.2e} W, simulated {:.4e} ± {:.2e} W, |diff| = {:.2} sigma",
                theorem.mean,
                theorem.stderr,
                sim.mean(),
                sim.stderr(),
                if sigma > 0.0 { diff / sigma } else { 0.0 }
            ),
        );
    }

    Ok(report)
}
