//! Mean NLoS received power.
//!
//! Per class, the in-phase and quadrature terms of one MPC are
//! `Z = R cos θ / g2` and `W = R sin θ / g2` with `θ = 2π g1 / λ`. With
//! Poisson counts the sums over MPCs are compound Poisson, so the mean power
//! only needs the first two moments of `Z` and `W` per class:
//!
//! ```text
//! E[P | U=1] = k0 ( Σ_k (g_k + h_k² + g'_k + h'_k²) μ_k + (Σ_k h_k μ_k)² + (Σ_k h'_k μ_k)² )
//! E[P | U=0] = the same with the short class only
//! ```
//!
//! The moments are estimated by Monte Carlo over uniform lens points. The
//! phase wraps thousands of times across a lens at carrier wavelengths, so
//! deterministic quadrature ([`moment_terms_quadrature`]) is only offered
//! for long-wavelength cross-checks.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{expect_joint, SPEED_OF_LIGHT};
use crate::error::{invalid, non_negative, positive, Error, Result};
use crate::pointprocess::{ClassKind, Scenario};
use crate::rng::{substream, StreamTag};

/// Minimum Monte Carlo sample count for the moment terms.
pub const MIN_MOMENT_SAMPLES: usize = 10_000;

const BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionMode {
    Reflection,
    Scattering,
}

impl InteractionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InteractionMode::Reflection => "reflection",
            InteractionMode::Scattering => "scattering",
        }
    }
}

/// Electromagnetic profile shared by every bounce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionModel {
    mode: InteractionMode,
    transmit_power: f64,
    wavelength: f64,
    coeff_mean: f64,
    coeff_var: f64,
}

impl InteractionModel {
    pub fn new(
        mode: InteractionMode,
        transmit_power: f64,
        wavelength: f64,
        coeff_mean: f64,
        coeff_var: f64,
    ) -> Result<Self> {
        if !coeff_mean.is_finite() {
            return Err(invalid("coeff_mean", "must be finite"));
        }
        Ok(Self {
            mode,
            transmit_power: positive("transmit_power", transmit_power)?,
            wavelength: positive("wavelength", wavelength)?,
            coeff_mean,
            coeff_var: non_negative("coeff_var", coeff_var)?,
        })
    }

    /// 10 W at 2 GHz, R ~ N(-1.17, 0.4).
    pub fn reflection_gtu() -> Self {
        Self::new(
            InteractionMode::Reflection,
            10.0,
            SPEED_OF_LIGHT / 2e9,
            -1.17,
            0.4,
        )
        .expect("valid preset")
    }

    /// 10 W at 2 GHz, R ~ N(4, 2).
    pub fn scattering_gtu() -> Self {
        Self::new(
            InteractionMode::Scattering,
            10.0,
            SPEED_OF_LIGHT / 2e9,
            4.0,
            2.0,
        )
        .expect("valid preset")
    }

    pub fn with_wavelength(self, wavelength: f64) -> Result<Self> {
        Self::new(
            self.mode,
            self.transmit_power,
            wavelength,
            self.coeff_mean,
            self.coeff_var,
        )
    }

    pub fn with_coefficients(self, mean: f64, var: f64) -> Result<Self> {
        Self::new(self.mode, self.transmit_power, self.wavelength, mean, var)
    }

    pub fn mode(&self) -> InteractionMode {
        self.mode
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn coeff_mean(&self) -> f64 {
        self.coeff_mean
    }

    pub fn coeff_var(&self) -> f64 {
        self.coeff_var
    }

    /// Transmission constant: `P_t λ²/(4π)³` for scattering,
    /// `P_t (λ/4π)²` for reflection.
    pub fn k0(&self) -> f64 {
        let l = self.wavelength;
        match self.mode {
            InteractionMode::Scattering => self.transmit_power * l * l / (4.0 * PI).powi(3),
            InteractionMode::Reflection => self.transmit_power * (l / (4.0 * PI)).powi(2),
        }
    }

    pub fn g1(&self, x: f64, y: f64) -> f64 {
        x + y
    }

    pub fn g2(&self, x: f64, y: f64) -> f64 {
        match self.mode {
            InteractionMode::Scattering => x * y,
            InteractionMode::Reflection => x + y,
        }
    }

    /// Propagation phase `2π g1 / λ`.
    pub fn phase(&self, x: f64, y: f64) -> f64 {
        2.0 * PI * self.g1(x, y) / self.wavelength
    }

    pub(crate) fn coefficient_dist(&self) -> Normal<f64> {
        Normal::new(self.coeff_mean, self.coeff_var.sqrt()).expect("validated coefficient law")
    }

    pub fn sample_coefficient<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.coefficient_dist().sample(rng)
    }
}

/// Standard errors of the four moment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentStderr {
    pub h: f64,
    pub g: f64,
    pub h_prime: f64,
    pub g_prime: f64,
}

/// Mean and variance of the in-phase (`h`, `g`) and quadrature
/// (`h_prime`, `g_prime`) per-MPC terms of one class. Units are 1/m for
/// reflection and 1/m² for scattering; never mix modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTerms {
    pub kind: ClassKind,
    pub mode: InteractionMode,
    pub h: f64,
    pub g: f64,
    pub h_prime: f64,
    pub g_prime: f64,
    pub stderr: MomentStderr,
    /// Covariance of the sample means of `(Z, W, Z² + W²)`; drives the
    /// delta-method error of the mean power.
    pub mean_cov: [[f64; 3]; 3],
    pub n_samples: usize,
}

impl MomentTerms {
    /// `E[Z²] + E[W²]`.
    pub fn second_moment(&self) -> f64 {
        self.g + self.h * self.h + self.g_prime + self.h_prime * self.h_prime
    }

    fn from_samples(kind: ClassKind, mode: InteractionMode, samples: &[(f64, f64)]) -> Self {
        let n = samples.len() as f64;
        let mut mean = [0.0; 3];
        for &(z, w) in samples {
            mean[0] += z;
            mean[1] += w;
            mean[2] += z * z + w * w;
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut cov = [[0.0; 3]; 3];
        let (mut m4_z, mut m4_w) = (0.0, 0.0);
        for &(z, w) in samples {
            let dev = [z - mean[0], w - mean[1], z * z + w * w - mean[2]];
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += dev[i] * dev[j];
                }
            }
            m4_z += dev[0].powi(4);
            m4_w += dev[1].powi(4);
        }
        let g = cov[0][0] / (n - 1.0);
        let g_prime = cov[1][1] / (n - 1.0);
        let mean_cov = cov.map(|row| row.map(|c| c / (n - 1.0) / n));
        let var_of_var = |m4: f64, v: f64| ((m4 / n - v * v).max(0.0) / n).sqrt();
        MomentTerms {
            kind,
            mode,
            h: mean[0],
            g,
            h_prime: mean[1],
            g_prime,
            stderr: MomentStderr {
                h: (g / n).sqrt(),
                g: var_of_var(m4_z, g),
                h_prime: (g_prime / n).sqrt(),
                g_prime: var_of_var(m4_w, g_prime),
            },
            mean_cov,
            n_samples: samples.len(),
        }
    }
}

/// Monte Carlo estimate of the per-MPC moment terms of one class.
///
/// Sample `i` uses block `i / 4096` of a substream keyed by `seed` and the
/// class, so the estimate does not depend on the rayon thread count.
pub fn moment_terms(
    scenario: &Scenario,
    kind: ClassKind,
    interaction: &InteractionModel,
    n_mc: usize,
    seed: u64,
) -> Result<MomentTerms> {
    if n_mc < MIN_MOMENT_SAMPLES {
        return Err(invalid(
            "n_mc",
            format!("need at least {MIN_MOMENT_SAMPLES} samples, got {n_mc}"),
        ));
    }
    let lens = scenario.lens(kind);
    if lens.area() <= 0.0 {
        return Err(Error::DegenerateClass(kind));
    }
    let ms = scenario.ms_position();
    let coeff = interaction.coefficient_dist();
    let class_offset = match kind {
        ClassKind::Short => 0u64,
        ClassKind::Tall => 1u64 << 40,
    };
    let n_blocks = n_mc.div_ceil(BLOCK);
    let blocks: Vec<Vec<(f64, f64)>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, StreamTag::MomentTerms, class_offset + b as u64);
            let len = BLOCK.min(n_mc - b * BLOCK);
            (0..len)
                .map(|_| {
                    let p = lens.sample_uniform(&mut rng).expect("non-empty lens");
                    let (x, y) = (p.norm(), p.distance_to(&ms));
                    let r = coeff.sample(&mut rng);
                    let amp = r / interaction.g2(x, y);
                    let theta = interaction.phase(x, y);
                    (amp * theta.cos(), amp * theta.sin())
                })
                .collect()
        })
        .collect();
    let samples: Vec<(f64, f64)> = blocks.into_iter().flatten().collect();
    Ok(MomentTerms::from_samples(
        kind,
        interaction.mode(),
        &samples,
    ))
}

/// Deterministic moment terms by nested quadrature over the joint distance
/// density. Accurate only when the phase varies slowly over the lens and
/// `1/g2²` is integrable (reflection mode, or a lens away from both nodes).
pub fn moment_terms_quadrature(
    scenario: &Scenario,
    kind: ClassKind,
    interaction: &InteractionModel,
) -> Result<MomentTerms> {
    let ec = expect_joint(scenario, kind, |x, y| {
        interaction.phase(x, y).cos() / interaction.g2(x, y)
    })?;
    let es = expect_joint(scenario, kind, |x, y| {
        interaction.phase(x, y).sin() / interaction.g2(x, y)
    })?;
    let ec2 = expect_joint(scenario, kind, |x, y| {
        (interaction.phase(x, y).cos() / interaction.g2(x, y)).powi(2)
    })?;
    let es2 = expect_joint(scenario, kind, |x, y| {
        (interaction.phase(x, y).sin() / interaction.g2(x, y)).powi(2)
    })?;
    let mu = interaction.coeff_mean();
    let r2 = interaction.coeff_var() + mu * mu;
    let (h, h_prime) = (mu * ec, mu * es);
    Ok(MomentTerms {
        kind,
        mode: interaction.mode(),
        h,
        g: r2 * ec2 - h * h,
        h_prime,
        g_prime: r2 * es2 - h_prime * h_prime,
        stderr: MomentStderr::default(),
        mean_cov: [[0.0; 3]; 3],
        n_samples: 0,
    })
}

/// Mean power with its standard error, watts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Combines per-class moment terms and mean counts into the mean received
/// power. `short` and `tall` carry `(μ_k, terms)`; pass `None` for a class
/// with no active scatterers.
pub fn assemble_mean_power(
    k0: f64,
    gamma: f64,
    short: Option<(f64, &MomentTerms)>,
    tall: Option<(f64, &MomentTerms)>,
) -> PowerEstimate {
    let classes: Vec<(bool, f64, &MomentTerms)> = short
        .map(|(mu, t)| (true, mu, t))
        .into_iter()
        .chain(tall.map(|(mu, t)| (false, mu, t)))
        .collect();

    let sum_h: f64 = classes.iter().map(|(_, mu, t)| t.h * mu).sum();
    let sum_hp: f64 = classes.iter().map(|(_, mu, t)| t.h_prime * mu).sum();
    let both = classes
        .iter()
        .map(|(_, mu, t)| t.second_moment() * mu)
        .sum::<f64>()
        + sum_h * sum_h
        + sum_hp * sum_hp;
    let short_only = short.map_or(0.0, |(mu, t)| {
        t.second_moment() * mu + (t.h * mu).powi(2) + (t.h_prime * mu).powi(2)
    });
    let mean = k0 * (gamma * both + (1.0 - gamma) * short_only);

    // delta method on (h, h', E[Z²+W²]) per class; classes are independent
    let variance: f64 = classes
        .iter()
        .map(|&(is_short, mu, t)| {
            let mut grad = [
                gamma * 2.0 * mu * sum_h,
                gamma * 2.0 * mu * sum_hp,
                gamma * mu,
            ];
            if is_short {
                grad[0] += (1.0 - gamma) * 2.0 * mu * mu * t.h;
                grad[1] += (1.0 - gamma) * 2.0 * mu * mu * t.h_prime;
                grad[2] += (1.0 - gamma) * mu;
            }
            let mut v = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    v += grad[i] * t.mean_cov[i][j] * grad[j];
                }
            }
            v.max(0.0)
        })
        .sum();
    PowerEstimate {
        mean,
        stderr: k0 * variance.sqrt(),
    }
}

/// Mean NLoS received power from Monte Carlo moment terms. Classes with no
/// active scatterers contribute nothing; the tall class is skipped when
/// γ = 0.
pub fn mean_received_power(
    scenario: &Scenario,
    interaction: &InteractionModel,
    n_mc: usize,
    seed: u64,
) -> Result<PowerEstimate> {
    if n_mc < MIN_MOMENT_SAMPLES {
        return Err(invalid(
            "n_mc",
            format!("need at least {MIN_MOMENT_SAMPLES} samples"),
        ));
    }
    let mu_s = scenario.mean_active_count(ClassKind::Short);
    let mu_t = scenario.mean_active_count(ClassKind::Tall);
    let short = if mu_s > 0.0 {
        Some(moment_terms(
            scenario,
            ClassKind::Short,
            interaction,
            n_mc,
            seed,
        )?)
    } else {
        None
    };
    let tall = if mu_t > 0.0 && scenario.gamma() > 0.0 {
        Some(moment_terms(
            scenario,
            ClassKind::Tall,
            interaction,
            n_mc,
            seed,
        )?)
    } else {
        None
    };
    Ok(assemble_mean_power(
        interaction.k0(),
        scenario.gamma(),
        short.as_ref().map(|t| (mu_s, t)),
        tall.as_ref().map(|t| (mu_t, t)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(h: f64, g: f64, hp: f64, gp: f64) -> MomentTerms {
        MomentTerms {
            kind: ClassKind::Short,
            mode: InteractionMode::Reflection,
            h,
            g,
            h_prime: hp,
            g_prime: gp,
            stderr: MomentStderr::default(),
            mean_cov: [[0.0; 3]; 3],
            n_samples: 0,
        }
    }

    #[test]
    fn k0_and_g_functions() {
        let r = InteractionModel::reflection_gtu();
        let l = SPEED_OF_LIGHT / 2e9;
        assert!((r.k0() - 10.0 * (l / (4.0 * PI)).powi(2)).abs() < 1e-18);
        assert_eq!(r.g2(3.0, 4.0), 7.0);
        let s = InteractionModel::scattering_gtu();
        assert!((s.k0() - 10.0 * l * l / (4.0 * PI).powi(3)).abs() < 1e-18);
        assert_eq!(s.g2(3.0, 4.0), 12.0);
        assert_eq!(s.g1(3.0, 4.0), 7.0);
        assert!(InteractionModel::new(InteractionMode::Reflection, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(InteractionModel::new(InteractionMode::Reflection, 1.0, 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn zero_coefficients_give_zero_terms() {
        let s = Scenario::gtu();
        let m = InteractionModel::reflection_gtu()
            .with_coefficients(0.0, 0.0)
            .unwrap();
        let t = moment_terms(&s, ClassKind::Short, &m, 10_000, 1).unwrap();
        assert_eq!((t.h, t.g, t.h_prime, t.g_prime), (0.0, 0.0, 0.0, 0.0));
        let p = mean_received_power(&s.with_gamma(0.0).unwrap(), &m, 10_000, 1).unwrap();
        assert_eq!(p.mean, 0.0);
    }

    #[test]
    fn long_wavelength_limit() {
        // θ -> 0: h -> μ_R E[1/g2], h' -> 0
        let s = Scenario::gtu();
        let m = InteractionModel::reflection_gtu()
            .with_wavelength(1e12)
            .unwrap();
        let t = moment_terms(&s, ClassKind::Short, &m, 20_000, 2).unwrap();
        let inv_g2 = expect_joint(&s, ClassKind::Short, |x, y| 1.0 / (x + y)).unwrap();
        assert!((t.h - (-1.17) * inv_g2).abs() < 4.0 * t.stderr.h);
        assert!(t.h_prime.abs() < 1e-6 * t.h.abs());
    }

    #[test]
    fn rejects_small_sample_and_degenerate() {
        let s = Scenario::gtu();
        let m = InteractionModel::reflection_gtu();
        assert!(moment_terms(&s, ClassKind::Short, &m, 100, 1).is_err());
        let far = s.with_d_prime(900.0).unwrap();
        assert_eq!(
            moment_terms(&far, ClassKind::Short, &m, 10_000, 1),
            Err(Error::DegenerateClass(ClassKind::Short))
        );
    }

    #[test]
    fn assembly_single_class_gamma_one() {
        let t = terms(0.5, 2.0, -0.25, 1.0);
        let mu = 3.0;
        let p = assemble_mean_power(2.0, 1.0, None, Some((mu, &t)));
        let expect =
            2.0 * ((2.0 + 0.25 + 1.0 + 0.0625) * mu + (0.5 * mu).powi(2) + (0.25 * mu).powi(2));
        assert!((p.mean - expect).abs() < 1e-12);
    }

    #[test]
    fn assembly_mixture() {
        let ts = terms(0.1, 1.0, 0.2, 0.5);
        let tt = terms(0.3, 0.4, 0.0, 0.2);
        let (mu_s, mu_t, g, k0) = (4.0, 2.0, 0.3, 1.5);
        let p = assemble_mean_power(k0, g, Some((mu_s, &ts)), Some((mu_t, &tt)));
        let q = |t: &MomentTerms| t.g + t.h * t.h + t.g_prime + t.h_prime * t.h_prime;
        let both = q(&ts) * mu_s
            + q(&tt) * mu_t
            + (0.1 * 4.0 + 0.3 * 2.0f64).powi(2)
            + (0.2 * 4.0f64).powi(2);
        let short = q(&ts) * mu_s + (0.4f64).powi(2) + (0.8f64).powi(2);
        assert!((p.mean - k0 * (g * both + (1.0 - g) * short)).abs() < 1e-12);
    }

    #[test]
    fn seeds_reproduce() {
        let s = Scenario::gtu();
        let m = InteractionModel::reflection_gtu();
        let a = moment_terms(&s, ClassKind::Tall, &m, 10_000, 9).unwrap();
        let b = moment_terms(&s, ClassKind::Tall, &m, 10_000, 9).unwrap();
        assert_eq!(a, b);
    }
}
