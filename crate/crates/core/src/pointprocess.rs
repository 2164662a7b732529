//! Scatterer point process.
//!
//! Short scatterers form a homogeneous PPP restricted to their visibility
//! lens. Tall scatterers form a PPP in their own lens whose intensity is
//! switched on by a single Bernoulli(γ) draw per realization, which makes
//! the superposition a Cox process.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, non_negative, positive, Result};
use crate::geometry::{LensSpec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Short,
    Tall,
}

impl ClassKind {
    pub const ALL: [ClassKind; 2] = [ClassKind::Short, ClassKind::Tall];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassKind::Short => "short",
            ClassKind::Tall => "tall",
        }
    }
}

/// Visibility radii and intensity of one scatterer class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScattererClass {
    kind: ClassKind,
    /// VR radius toward the BS, meters.
    v1: f64,
    /// VR radius toward the MS, meters.
    v2: f64,
    /// Intensity, scatterers per m².
    density: f64,
}

impl ScattererClass {
    pub fn new(kind: ClassKind, v1: f64, v2: f64, density: f64) -> Result<Self> {
        Ok(Self {
            kind,
            v1: positive("v1", v1)?,
            v2: positive("v2", v2)?,
            density: non_negative("density", density)?,
        })
    }

    pub fn kind(&self) -> ClassKind {
        self.kind
    }

    pub fn v1(&self) -> f64 {
        self.v1
    }

    pub fn v2(&self) -> f64 {
        self.v2
    }

    pub fn density(&self) -> f64 {
        self.density
    }
}

/// BS–MS geometry plus both scatterer classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    d_prime: f64,
    short: ScattererClass,
    tall: ScattererClass,
    gamma: f64,
    seed: u64,
}

impl Scenario {
    pub fn new(
        d_prime: f64,
        short: ScattererClass,
        tall: ScattererClass,
        gamma: f64,
        seed: u64,
    ) -> Result<Self> {
        non_negative("d_prime", d_prime)?;
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("must lie in [0, 1], got {gamma}")));
        }
        if short.kind != ClassKind::Short {
            return Err(invalid("short", "class kind must be short"));
        }
        if tall.kind != ClassKind::Tall {
            return Err(invalid("tall", "class kind must be tall"));
        }
        Ok(Self {
            d_prime,
            short,
            tall,
            gamma,
            seed,
        })
    }

    /// Generalized typical urban preset, SI units: d' = 200 m,
    /// tall VRs 4100/4000 m at 4.2e-7 m⁻², short VRs 500/300 m at
    /// 7.07e-5 m⁻², γ = 0.22.
    pub fn gtu() -> Self {
        Self {
            d_prime: 200.0,
            short: ScattererClass {
                kind: ClassKind::Short,
                v1: 500.0,
                v2: 300.0,
                density: 7.07e-5,
            },
            tall: ScattererClass {
                kind: ClassKind::Tall,
                v1: 4100.0,
                v2: 4000.0,
                density: 4.2e-7,
            },
            gamma: 0.22,
            seed: 0,
        }
    }

    pub fn with_d_prime(self, d_prime: f64) -> Result<Self> {
        Self::new(d_prime, self.short, self.tall, self.gamma, self.seed)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.d_prime, self.short, self.tall, gamma, self.seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_class(self, class: ScattererClass) -> Result<Self> {
        match class.kind {
            ClassKind::Short => Self::new(self.d_prime, class, self.tall, self.gamma, self.seed),
            ClassKind::Tall => Self::new(self.d_prime, self.short, class, self.gamma, self.seed),
        }
    }

    pub fn d_prime(&self) -> f64 {
        self.d_prime
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn class(&self, kind: ClassKind) -> &ScattererClass {
        match kind {
            ClassKind::Short => &self.short,
            ClassKind::Tall => &self.tall,
        }
    }

    pub fn ms_position(&self) -> Point {
        Point::new(self.d_prime, 0.0)
    }

    /// Intersection of the class VRs transferred onto the BS and the MS.
    pub fn lens(&self, kind: ClassKind) -> LensSpec {
        let c = self.class(kind);
        LensSpec::new(self.d_prime, c.v1, c.v2).expect("scenario invariants guarantee a valid lens")
    }

    /// Mean number of active scatterers of a class. For the tall class this
    /// is the mean given that tall scatterers are visible (U = 1).
    pub fn mean_active_count(&self, kind: ClassKind) -> f64 {
        self.class(kind).density * self.lens(kind).area()
    }

    /// Whether the class can contribute any scatterer at all.
    pub fn is_active(&self, kind: ClassKind) -> bool {
        self.mean_active_count(kind) > 0.0
    }

    /// Draws one realization: short count and positions, then U, then the
    /// tall count and positions when U = 1.
    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let short_points = self.sample_class(ClassKind::Short, rng);
        let u = rng.random::<f64>() < self.gamma;
        let tall_points = if u {
            self.sample_class(ClassKind::Tall, rng)
        } else {
            Vec::new()
        };
        Realization {
            u,
            short_points,
            tall_points,
        }
    }

    fn sample_class<R: Rng + ?Sized>(&self, kind: ClassKind, rng: &mut R) -> Vec<Point> {
        let lens = self.lens(kind);
        let mean = self.class(kind).density * lens.area();
        let n = sample_poisson(mean, rng);
        (0..n)
            .map(|_| {
                lens.sample_uniform(rng)
                    .expect("positive mean implies positive area")
            })
            .collect()
    }
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as usize
}

/// One draw of the scatterer process.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Realization {
    /// Tall-scatterer visibility switch.
    pub u: bool,
    pub short_points: Vec<Point>,
    /// Always empty when `u` is false.
    pub tall_points: Vec<Point>,
}

impl Realization {
    pub fn len(&self) -> usize {
        self.short_points.len() + self.tall_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = (ClassKind, &Point)> {
        self.short_points
            .iter()
            .map(|p| (ClassKind::Short, p))
            .chain(self.tall_points.iter().map(|p| (ClassKind::Tall, p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamTag};
    use std::f64::consts::PI;

    #[test]
    fn gtu_mean_counts() {
        let s = Scenario::gtu();
        let mu_s = s.mean_active_count(ClassKind::Short);
        assert!((mu_s - 7.07e-5 * PI * 300.0 * 300.0).abs() < 1e-9);
        assert!((mu_s - 19.99).abs() < 0.01);
        // 4.2e-7 times the frozen Monte Carlo lens area 4.9712e7
        let mu_t = s.mean_active_count(ClassKind::Tall);
        assert!((mu_t - 20.88).abs() < 0.03, "{mu_t}");
    }

    #[test]
    fn disjoint_class_has_zero_mean() {
        let s = Scenario::gtu().with_d_prime(10_000.0).unwrap();
        assert_eq!(s.mean_active_count(ClassKind::Short), 0.0);
        assert_eq!(s.mean_active_count(ClassKind::Tall), 0.0);
        let mut rng = substream(1, StreamTag::Realization, 0);
        assert!(s.sample_realization(&mut rng).is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = Scenario::gtu();
        assert!(s.with_gamma(1.5).is_err());
        assert!(s.with_gamma(-0.1).is_err());
        assert!(s.with_d_prime(-1.0).is_err());
        assert!(ScattererClass::new(ClassKind::Short, 0.0, 1.0, 1.0).is_err());
        assert!(ScattererClass::new(ClassKind::Short, 1.0, 1.0, -1.0).is_err());
        let tall = *s.class(ClassKind::Tall);
        assert!(Scenario::new(200.0, tall, tall, 0.2, 0).is_err());
    }

    #[test]
    fn gamma_zero_never_has_tall_points() {
        let s = Scenario::gtu().with_gamma(0.0).unwrap();
        for i in 0..2000 {
            let mut rng = substream(4, StreamTag::Realization, i);
            let r = s.sample_realization(&mut rng);
            assert!(!r.u && r.tall_points.is_empty());
        }
    }

    #[test]
    fn points_inside_both_vrs() {
        let s = Scenario::gtu().with_d_prime(600.0).unwrap();
        let ms = s.ms_position();
        for i in 0..2000 {
            let mut rng = substream(5, StreamTag::Realization, i);
            let r = s.sample_realization(&mut rng);
            for (kind, p) in r.points() {
                let c = s.class(kind);
                assert!(p.norm() <= c.v1() && p.distance_to(&ms) <= c.v2());
            }
        }
    }

    #[test]
    fn deterministic_given_seed_and_index() {
        let s = Scenario::gtu();
        let a = s.sample_realization(&mut substream(77, StreamTag::Realization, 12));
        let b = s.sample_realization(&mut substream(77, StreamTag::Realization, 12));
        assert_eq!(a, b);
    }
}
