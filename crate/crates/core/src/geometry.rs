//! Circle–circle lens geometry.
//!
//! The BS sits at the origin and the MS at `(d0, 0)`. A lens is the
//! intersection of the disk of radius `a` around the BS with the disk of
//! radius `b` around the MS. Everything here is in meters.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, non_negative, positive, Error, Result};

/// Point in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Which closed-form branch the intersection area falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LensRegime {
    /// `a + b <= d0`: the circles do not overlap (tangency included).
    Disjoint,
    /// `|a - b| >= d0`: the smaller circle lies inside the larger one.
    Contained,
    /// Proper lens.
    Lens,
}

/// Two circles: radius `a` around the BS, radius `b` around the MS,
/// centers `d0` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensSpec {
    d0: f64,
    a: f64,
    b: f64,
}

impl LensSpec {
    pub fn new(d0: f64, a: f64, b: f64) -> Result<Self> {
        Ok(Self {
            d0: non_negative("d0", d0)?,
            a: positive("a", a)?,
            b: positive("b", b)?,
        })
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Boundary ties go to the disjoint/contained branches, which coincide
    /// with the limit of the lens formula there.
    pub fn regime(&self) -> LensRegime {
        classify(self.d0, self.a, self.b)
    }

    pub fn area(&self) -> f64 {
        match self.regime() {
            LensRegime::Disjoint => 0.0,
            LensRegime::Contained => PI * self.a.min(self.b).powi(2),
            LensRegime::Lens => partial_area_unchecked(self.d0, self.a, self.b),
        }
    }

    /// True when `p` lies in both closed disks.
    pub fn contains(&self, p: &Point) -> bool {
        let mx = p.x - self.d0;
        p.x * p.x + p.y * p.y <= self.a * self.a && mx * mx + p.y * p.y <= self.b * self.b
    }

    /// Axis-aligned box `(x_lo, x_hi, y_half)` enclosing the lens; the box
    /// spans `[x_lo, x_hi] x [-y_half, y_half]`.
    pub fn bounding_box(&self) -> Result<(f64, f64, f64)> {
        let (d0, a, b) = (self.d0, self.a, self.b);
        match self.regime() {
            LensRegime::Disjoint => Err(self.empty()),
            LensRegime::Contained => {
                // smaller circle is the whole lens
                if a <= b {
                    Ok((-a, a, a))
                } else {
                    Ok((d0 - b, d0 + b, b))
                }
            }
            LensRegime::Lens => {
                let x_lo = (-a).max(d0 - b);
                let x_hi = a.min(d0 + b);
                // highest point: top of a circle if it is inside the other,
                // otherwise the upper intersection point
                let y_half = if d0 * d0 + a * a <= b * b {
                    a
                } else if d0 * d0 + b * b <= a * a {
                    b
                } else {
                    let xi = (d0 * d0 + a * a - b * b) / (2.0 * d0);
                    (a * a - xi * xi).max(0.0).sqrt()
                };
                Ok((x_lo, x_hi, y_half))
            }
        }
    }

    /// Distance ranges `(a_min, a_max, b_min, b_max)` of a lens point from
    /// the BS and from the MS.
    pub fn support_bounds(&self) -> Result<SupportBounds> {
        if self.area() <= 0.0 {
            return Err(self.empty());
        }
        let (d0, a, b) = (self.d0, self.a, self.b);
        Ok(SupportBounds {
            a_min: (d0 - b).max(0.0),
            a_max: (d0 + b).min(a),
            b_min: (d0 - a).max(0.0),
            b_max: (d0 + a).min(b),
        })
    }

    /// Draws a point uniformly over the lens by rejection from its bounding box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        if self.area() <= 0.0 {
            return Err(self.empty());
        }
        let (x_lo, x_hi, y_half) = self.bounding_box()?;
        loop {
            let p = Point::new(
                x_lo + (x_hi - x_lo) * rng.random::<f64>(),
                y_half * (2.0 * rng.random::<f64>() - 1.0),
            );
            if self.contains(&p) {
                return Ok(p);
            }
        }
    }

    fn empty(&self) -> Error {
        Error::EmptyRegion {
            d0: self.d0,
            a: self.a,
            b: self.b,
        }
    }
}

/// Distance support of a uniform lens point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

fn classify(d0: f64, a: f64, b: f64) -> LensRegime {
    if a + b <= d0 {
        LensRegime::Disjoint
    } else if (a - b).abs() >= d0 {
        LensRegime::Contained
    } else {
        LensRegime::Lens
    }
}

/// Intersection area of two circles of radii `a`, `b` with centers `d0` apart.
pub fn lens_area(d0: f64, a: f64, b: f64) -> Result<f64> {
    Ok(LensSpec::new(d0, a, b)?.area())
}

/// The proper-lens branch of the intersection area. Valid on the closed
/// range `|a - b| <= d0 <= a + b` with `d0 > 0`.
pub fn lens_area_partial(d0: f64, a: f64, b: f64) -> Result<f64> {
    positive("d0", d0)?;
    positive("a", a)?;
    positive("b", b)?;
    if d0 > a + b || d0 < (a - b).abs() {
        return Err(invalid(
            "d0",
            format!("outside lens regime |a-b| <= d0 <= a+b (d0={d0}, a={a}, b={b})"),
        ));
    }
    Ok(partial_area_unchecked(d0, a, b))
}

fn partial_area_unchecked(d0: f64, a: f64, b: f64) -> f64 {
    // fixed argument order so that swapping the radii is bit-exact
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let cos_b = ((d0 * d0 + b * b - a * a) / (2.0 * d0 * b)).clamp(-1.0, 1.0);
    let cos_a = ((d0 * d0 + a * a - b * b) / (2.0 * d0 * a)).clamp(-1.0, 1.0);
    let q = d0 * d0 - b * b + a * a;
    let radicand = 4.0 * d0 * d0 * a * a - q * q;
    b * b * cos_b.acos() + a * a * cos_a.acos() - 0.5 * radicand.max(0.0).sqrt()
}

/// Mixed partial derivative of the lens area with respect to both radii,
/// evaluated at radii `x` (BS side) and `y` (MS side).
///
/// Fails with [`Error::KernelDomain`] where any radicand is non-positive,
/// i.e. outside the open triangle `|x - y| < d' < x + y`.
pub fn density_kernel(d_prime: f64, x: f64, y: f64) -> Result<f64> {
    let domain = || Error::KernelDomain { d_prime, x, y };
    if !(d_prime > 0.0 && x > 0.0 && y > 0.0)
        || !(d_prime.is_finite() && x.is_finite() && y.is_finite())
    {
        return Err(domain());
    }
    // The three-term expansion collapses to this; its r^-3/2 parts cancel.
    let t = d_prime * d_prime + x * x - y * y;
    let r = 4.0 * d_prime * d_prime * x * x - t * t;
    if r <= 0.0 {
        return Err(domain());
    }
    Ok(4.0 * x * y / r.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent hit-or-miss oracle over the enclosing square of the larger circle.
    fn mc_area(d0: f64, a: f64, b: f64, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = a.max(b);
        let (lo, hi) = ((-a).min(d0 - b), a.max(d0 + b));
        let mut hits = 0usize;
        for _ in 0..n {
            let x = rng.random_range(lo..hi);
            let y = rng.random_range(-r..r);
            if x * x + y * y <= a * a && (x - d0).powi(2) + y * y <= b * b {
                hits += 1;
            }
        }
        hits as f64 / n as f64 * (hi - lo) * 2.0 * r
    }

    #[test]
    fn frozen_monte_carlo_areas() {
        // values computed once with mc_area at 10^7 samples
        let unit = LensSpec::new(1.0, 1.0, 1.0).unwrap().area();
        assert!((unit - 1.22837).abs() < 1e-3 * 1.22837);
        assert!((unit - (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0)).abs() < 1e-12);
        let tall = LensSpec::new(200.0, 4100.0, 4000.0).unwrap().area();
        assert!((tall - 4.9712e7).abs() / 4.9712e7 < 1e-3, "{tall}");
    }

    #[test]
    fn monte_carlo_oracle_agrees() {
        let est = mc_area(1.0, 1.0, 1.0, 400_000, 7);
        let exact = lens_area(1.0, 1.0, 1.0).unwrap();
        assert!((est - exact).abs() / exact < 0.01);
        let est = mc_area(200.0, 4100.0, 4000.0, 400_000, 8);
        let exact = lens_area(200.0, 4100.0, 4000.0).unwrap();
        assert!((est - exact).abs() / exact < 0.01);
    }

    #[test]
    fn branch_values() {
        assert_eq!(lens_area(700.0, 300.0, 300.0).unwrap(), 0.0);
        let c = lens_area(100.0, 500.0, 300.0).unwrap();
        assert!((c - PI * 300.0 * 300.0).abs() < 1e-6);
        assert!((c - 282_743.3).abs() < 0.1);
    }

    #[test]
    fn invalid_inputs() {
        assert!(lens_area(-1.0, 1.0, 1.0).is_err());
        assert!(lens_area(1.0, f64::NAN, 1.0).is_err());
        assert!(lens_area(1.0, 1.0, f64::INFINITY).is_err());
        assert!(lens_area(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn partial_area_boundaries() {
        let r = 3.5;
        assert!(lens_area_partial(2.0 * r, r, r).unwrap().abs() < 1e-9);
        let inner = lens_area_partial(200.0, 500.0, 300.0).unwrap();
        assert!((inner - PI * 300.0 * 300.0).abs() / inner < 1e-12);
        assert!((lens_area_partial(1.0, 1.0, 1.0).unwrap() - 1.22837).abs() < 1e-4);
        assert!(lens_area_partial(1000.0, 500.0, 300.0).is_err());
        assert!(lens_area_partial(100.0, 500.0, 300.0).is_err());
        assert!(lens_area_partial(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ties_resolve_to_outer_branches() {
        assert_eq!(
            LensSpec::new(200.0, 500.0, 300.0).unwrap().regime(),
            LensRegime::Contained
        );
        assert_eq!(
            LensSpec::new(800.0, 500.0, 300.0).unwrap().regime(),
            LensRegime::Disjoint
        );
        assert_eq!(
            LensSpec::new(0.0, 5.0, 5.0).unwrap().regime(),
            LensRegime::Contained
        );
    }

    fn mixed_fd(d: f64, x: f64, y: f64, h: f64) -> f64 {
        let f = |a, b| lens_area_partial(d, a, b).unwrap();
        (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h)
    }

    /// Term-by-term expansion of the mixed partial, kept as an independent check.
    fn kernel_expanded(d: f64, x: f64, y: f64) -> f64 {
        let (d2, x2, y2) = (d * d, x * x, y * y);
        let s = d2 - x2 + y2;
        let r1 = 1.0 - s * s / (4.0 * d2 * y2);
        let t = d2 + x2 - y2;
        let r2 = 4.0 * d2 * x2 - t * t;
        x / (d * r1.sqrt()) + 4.0 * x * y2 * y * t / r2.powf(1.5)
            - x * (d2 * d2 - 2.0 * d2 * x2 + x2 * x2 - y2 * y2) / (4.0 * d2 * d * y2 * r1.powf(1.5))
    }

    #[test]
    fn kernel_matches_expansion() {
        for &(x, y) in &[
            (150.0, 120.0),
            (300.0, 250.0),
            (250.0, 400.0),
            (101.0, 200.0),
        ] {
            let a = density_kernel(200.0, x, y).unwrap();
            let b = kernel_expanded(200.0, x, y);
            assert!((a - b).abs() <= 1e-9 * a, "{x},{y}: {a} vs {b}");
        }
    }

    #[test]
    fn kernel_matches_finite_differences() {
        for (x, y) in [(300.0, 250.0), (450.0, 280.0)] {
            let v = density_kernel(200.0, x, y).unwrap();
            let fd = mixed_fd(200.0, x, y, 1e-2);
            assert!(v > 0.0 && v.is_finite());
            assert!((v - fd).abs() / v < 1e-4, "{v} vs {fd}");
        }
        assert!(matches!(
            density_kernel(200.0, 100.0, 50.0),
            Err(Error::KernelDomain { .. })
        ));
    }

    #[test]
    fn support_bounds_examples() {
        let s = LensSpec::new(200.0, 500.0, 300.0)
            .unwrap()
            .support_bounds()
            .unwrap();
        assert_eq!(
            (s.a_min, s.a_max, s.b_min, s.b_max),
            (0.0, 500.0, 0.0, 300.0)
        );
        let s = LensSpec::new(200.0, 4100.0, 4000.0)
            .unwrap()
            .support_bounds()
            .unwrap();
        assert_eq!(
            (s.a_min, s.a_max, s.b_min, s.b_max),
            (0.0, 4100.0, 0.0, 4000.0)
        );
        assert!(matches!(
            LensSpec::new(1000.0, 500.0, 300.0)
                .unwrap()
                .support_bounds(),
            Err(Error::EmptyRegion { .. })
        ));
    }

    #[test]
    fn bounding_box_encloses_lens() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let spec = LensSpec::new(
                rng.random_range(0.0..10.0),
                rng.random_range(0.1..10.0),
                rng.random_range(0.1..10.0),
            )
            .unwrap();
            let Ok((x_lo, x_hi, y_half)) = spec.bounding_box() else {
                continue;
            };
            // dense boundary scan of the lens must stay inside the box
            for k in 0..720 {
                let t = k as f64 / 720.0 * 2.0 * PI;
                for p in [
                    Point::new(spec.a * t.cos(), spec.a * t.sin()),
                    Point::new(spec.d0 + spec.b * t.cos(), spec.b * t.sin()),
                ] {
                    let tol = 1e-9 * (1.0 + spec.a + spec.b);
                    let on_lens = p.norm() <= spec.a + tol
                        && p.distance_to(&Point::new(spec.d0, 0.0)) <= spec.b + tol;
                    if on_lens {
                        assert!(
                            p.x >= x_lo - tol && p.x <= x_hi + tol && p.y.abs() <= y_half + tol
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn samples_in_contained_disk() {
        let spec = LensSpec::new(100.0, 500.0, 300.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ms = Point::new(100.0, 0.0);
        for _ in 0..20_000 {
            let p = spec.sample_uniform(&mut rng).unwrap();
            assert!(p.distance_to(&ms) <= 300.0);
        }
        let empty = LensSpec::new(1000.0, 500.0, 300.0).unwrap();
        assert!(empty.sample_uniform(&mut rng).is_err());
    }

    #[test]
    fn symmetric_lens_mean_x() {
        let spec = LensSpec::new(1.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let p = spec.sample_uniform(&mut rng).unwrap();
            s += p.x;
            s2 += p.x * p.x;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "{mean} ± {se}");
    }
}
