//! Closed-form channel statistics.
//!
//! MPC count law, distance distributions of an active scatterer, the mean
//! time of arrival and the joint distance density. Mean received power
//! lives in [`power`].

pub mod power;

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::geometry::{density_kernel, LensSpec};
use crate::pointprocess::{ClassKind, Scenario};
use crate::quad::integrate_piecewise;

pub use power::{
    assemble_mean_power, mean_received_power, moment_terms, moment_terms_quadrature,
    InteractionMode, InteractionModel, MomentStderr, MomentTerms, PowerEstimate,
};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative tolerance of the 1-D mean-distance quadrature.
pub const MEAN_DISTANCE_RTOL: f64 = 1e-6;

/// Poisson probability mass `P(n; mean)`; a zero mean puts all mass on 0.
pub fn poisson_pmf(n: u64, mean: f64) -> f64 {
    if mean <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n_f = n as f64;
    (n_f * mean.ln() - mean - ln_gamma(n_f + 1.0)).exp()
}

/// Probability of exactly `n` multipath components: a γ-weighted mixture
/// of Poisson(μ_s + μ_t) and Poisson(μ_s).
pub fn mpc_pmf(n: u64, scenario: &Scenario) -> f64 {
    let mu_s = scenario.mean_active_count(ClassKind::Short);
    let mu_t = scenario.mean_active_count(ClassKind::Tall);
    let g = scenario.gamma();
    g * poisson_pmf(n, mu_s + mu_t) + (1.0 - g) * poisson_pmf(n, mu_s)
}

/// Mean number of multipath components, μ_s + γ μ_t.
pub fn mpc_mean(scenario: &Scenario) -> f64 {
    scenario.mean_active_count(ClassKind::Short)
        + scenario.gamma() * scenario.mean_active_count(ClassKind::Tall)
}

/// Count beyond which the MPC PMF carries negligible mass.
pub fn mpc_count_cap(scenario: &Scenario) -> u64 {
    let m =
        scenario.mean_active_count(ClassKind::Short) + scenario.mean_active_count(ClassKind::Tall);
    (m + 10.0 * m.sqrt() + 10.0).ceil() as u64
}

fn active_lens(scenario: &Scenario, kind: ClassKind) -> Result<LensSpec> {
    let lens = scenario.lens(kind);
    if lens.area() > 0.0 {
        Ok(lens)
    } else {
        Err(Error::DegenerateClass(kind))
    }
}

/// CDF of the BS–scatterer distance of an active scatterer of `kind`.
pub fn distance_cdf_bs(x: f64, scenario: &Scenario, kind: ClassKind) -> Result<f64> {
    let lens = active_lens(scenario, kind)?;
    let b = lens.support_bounds()?;
    if x <= b.a_min {
        return Ok(0.0);
    }
    if x >= b.a_max {
        return Ok(1.0);
    }
    let partial = LensSpec::new(lens.d0(), x, lens.b())?.area();
    Ok((partial / lens.area()).clamp(0.0, 1.0))
}

/// CDF of the MS–scatterer distance of an active scatterer of `kind`.
pub fn distance_cdf_ms(y: f64, scenario: &Scenario, kind: ClassKind) -> Result<f64> {
    let lens = active_lens(scenario, kind)?;
    let b = lens.support_bounds()?;
    if y <= b.b_min {
        return Ok(0.0);
    }
    if y >= b.b_max {
        return Ok(1.0);
    }
    let partial = LensSpec::new(lens.d0(), lens.a(), y)?.area();
    Ok((partial / lens.area()).clamp(0.0, 1.0))
}

/// Mean BS–scatterer distance, integrating the survival function.
pub fn mean_distance_bs(scenario: &Scenario, kind: ClassKind) -> Result<f64> {
    let lens = active_lens(scenario, kind)?;
    let upper = lens.support_bounds()?.a_max;
    let (d, other) = (lens.d0(), lens.b());
    let kinks = [(d - other).abs(), d + other];
    survival_integral(|x| distance_cdf_bs(x, scenario, kind), upper, &kinks)
}

/// Mean MS–scatterer distance.
pub fn mean_distance_ms(scenario: &Scenario, kind: ClassKind) -> Result<f64> {
    let lens = active_lens(scenario, kind)?;
    let upper = lens.support_bounds()?.b_max;
    let (d, other) = (lens.d0(), lens.a());
    let kinks = [(d - other).abs(), d + other];
    survival_integral(|y| distance_cdf_ms(y, scenario, kind), upper, &kinks)
}

fn survival_integral<F>(cdf: F, upper: f64, kinks: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    // cdf cannot fail inside the support once the lens check passed
    let survival = |t: f64| 1.0 - cdf(t).unwrap_or(1.0);
    let tol = MEAN_DISTANCE_RTOL * 1e-3 * upper;
    Ok(integrate_piecewise(survival, 0.0, upper, kinks, tol))
}

/// Mean path length `E[X_k] + E[Y_k]` of one class.
pub fn class_mean_path_length(scenario: &Scenario, kind: ClassKind) -> Result<f64> {
    Ok(mean_distance_bs(scenario, kind)? + mean_distance_ms(scenario, kind)?)
}

/// Expected path length of one MPC, in meters.
///
/// Law of total expectation over U: given U = 1 the MPC is tall with
/// probability μ_t/(μ_s + μ_t); given U = 0 it is short. A branch that
/// cannot produce any MPC (zero mean count) is dropped and the remaining
/// branch weight renormalized; with both branches empty there is no path.
pub fn mean_path_length(scenario: &Scenario) -> Result<f64> {
    let mu_s = scenario.mean_active_count(ClassKind::Short);
    let mu_t = scenario.mean_active_count(ClassKind::Tall);
    let gamma = scenario.gamma();
    let tau_s = if mu_s > 0.0 {
        Some(class_mean_path_length(scenario, ClassKind::Short)?)
    } else {
        None
    };
    let tau_t = if mu_t > 0.0 {
        Some(class_mean_path_length(scenario, ClassKind::Tall)?)
    } else {
        None
    };

    let mut weight = 0.0;
    let mut acc = 0.0;
    if gamma > 0.0 && mu_s + mu_t > 0.0 {
        let both = (mu_s * tau_s.unwrap_or(0.0) + mu_t * tau_t.unwrap_or(0.0)) / (mu_s + mu_t);
        weight += gamma;
        acc += gamma * both;
    }
    if gamma < 1.0 {
        if let Some(tau) = tau_s {
            weight += 1.0 - gamma;
            acc += (1.0 - gamma) * tau;
        }
    }
    if weight == 0.0 {
        return Err(Error::NoPath);
    }
    Ok(acc / weight)
}

/// Mean time of arrival of one MPC, in seconds.
pub fn mean_toa(scenario: &Scenario) -> Result<f64> {
    Ok(mean_path_length(scenario)? / SPEED_OF_LIGHT)
}

/// Mean path length over all MPCs pooled across realizations,
/// `E[Σ τ] / E[N]`. This is what a ratio estimator over pooled MPCs
/// converges to; it weights the tall class by γμ_t/(μ_s + γμ_t) and so
/// differs from [`mean_path_length`] unless both classes share a mean.
pub fn pooled_mean_path_length(scenario: &Scenario) -> Result<f64> {
    let mu_s = scenario.mean_active_count(ClassKind::Short);
    let mu_t = scenario.gamma() * scenario.mean_active_count(ClassKind::Tall);
    if mu_s + mu_t <= 0.0 {
        return Err(Error::NoPath);
    }
    let mut acc = 0.0;
    if mu_s > 0.0 {
        acc += mu_s * class_mean_path_length(scenario, ClassKind::Short)?;
    }
    if mu_t > 0.0 {
        acc += mu_t * class_mean_path_length(scenario, ClassKind::Tall)?;
    }
    Ok(acc / (mu_s + mu_t))
}

/// Upper bound of the MS distance given BS distance `x`, by visibility case.
pub fn joint_y_max(v1: f64, v2: f64, d_prime: f64, x: f64) -> f64 {
    if v1 - v2 >= d_prime {
        v2
    } else if v2 - v1 >= d_prime {
        (d_prime + x).min(d_prime + v1)
    } else if v1 < d_prime && v2 < d_prime {
        v2
    } else {
        (d_prime + x).min(v2)
    }
}

/// Joint density of the (BS, MS) distances of an active scatterer, 1/m².
/// Zero outside the support and wherever the kernel is undefined.
pub fn joint_pdf(x: f64, y: f64, scenario: &Scenario, kind: ClassKind) -> Result<f64> {
    let lens = active_lens(scenario, kind)?;
    let d = scenario.d_prime();
    if d <= 0.0 {
        return Err(invalid("d_prime", "joint distance density needs d' > 0"));
    }
    let c = scenario.class(kind);
    let x_min = (d - c.v2()).max(0.0);
    let x_max = (d + c.v2()).min(c.v1());
    if !(x > x_min && x < x_max) {
        return Ok(0.0);
    }
    let y_min = (d - x).max(0.0);
    let y_max = joint_y_max(c.v1(), c.v2(), d, x);
    if !(y > y_min && y < y_max) {
        return Ok(0.0);
    }
    Ok(density_kernel(d, x, y).map_or(0.0, |b| b / lens.area()))
}

/// Interval of MS distances where the joint density can be nonzero for a
/// fixed BS distance `x` (the kernel needs |x - d'| < y < x + d').
fn joint_y_range(scenario: &Scenario, kind: ClassKind, x: f64) -> (f64, f64) {
    let d = scenario.d_prime();
    let c = scenario.class(kind);
    let lo = (d - x).max(0.0).max((x - d).abs());
    let hi = joint_y_max(c.v1(), c.v2(), d, x).min(x + d);
    (lo, hi)
}

const JOINT_ABS_TOL: f64 = 1e-10;

/// `∫ φ(x, y) f(x, y) dy` at fixed `x`.
pub fn integrate_joint_over_y<F>(
    x: f64,
    scenario: &Scenario,
    kind: ClassKind,
    phi: &F,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    active_lens(scenario, kind)?;
    let (lo, hi) = joint_y_range(scenario, kind, x);
    if hi <= lo {
        return Ok(0.0);
    }
    let f = |y: f64| joint_pdf(x, y, scenario, kind).unwrap_or(0.0) * phi(x, y);
    Ok(integrate_piecewise(f, lo, hi, &[], JOINT_ABS_TOL))
}

/// Marginal density of the BS distance recovered from the joint density.
pub fn joint_marginal_bs(x: f64, scenario: &Scenario, kind: ClassKind) -> Result<f64> {
    integrate_joint_over_y(x, scenario, kind, &|_, _| 1.0)
}

/// `E[φ(X, Y)]` under the joint distance density, by nested tanh-sinh
/// quadrature. Only meaningful for integrands that do not oscillate on the
/// scale of the lens.
pub fn expect_joint<F>(scenario: &Scenario, kind: ClassKind, phi: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    active_lens(scenario, kind)?;
    let d = scenario.d_prime();
    let c = scenario.class(kind);
    let x_min = (d - c.v2()).max(0.0);
    let x_max = (d + c.v2()).min(c.v1());
    let kinks = [d, c.v2() - d, d - c.v2(), c.v1() - d];
    let outer = |x: f64| integrate_joint_over_y(x, scenario, kind, &phi).unwrap_or(0.0);
    Ok(integrate_piecewise(
        outer,
        x_min,
        x_max,
        &kinks,
        JOINT_ABS_TOL,
    ))
}

/// Total probability mass of the joint density (should be 1).
pub fn joint_pdf_mass(scenario: &Scenario, kind: ClassKind) -> Result<f64> {
    expect_joint(scenario, kind, |_, _| 1.0)
}
