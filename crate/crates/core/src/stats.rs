//! Running moments and goodness-of-fit helpers shared by the simulator,
//! the validation command and the tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Streaming mean/variance (Welford) with an exact pairwise merge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SampleStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl SampleStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.n += 1;
        let delta = value - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// Chan et al. combination; merge order must be fixed by the caller for
    /// bit-identical results.
    pub fn merge(&mut self, other: &SampleStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for SampleStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = SampleStats::new();
        for v in iter {
            s.push(v);
        }
        s
    }
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Rejection threshold for the KS statistic at significance `alpha`
/// (asymptotic Kolmogorov quantile with Stephens' finite-n correction).
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let rn = (n as f64).sqrt();
    c / (rn + 0.12 + 0.11 / rn)
}

/// Pearson chi-square test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
}

impl ChiSquareOutcome {
    pub fn passes(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Goodness of fit of observed counts against expected probabilities.
/// Adjacent cells are pooled left to right until each expects at least 5.
pub fn chi_square_test(observed: &[u64], probs: &[f64], alpha: f64) -> ChiSquareOutcome {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * total;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let statistic = cells.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let critical = ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha);
    ChiSquareOutcome {
        statistic,
        dof,
        critical,
    }
}

/// Total variation distance between two probability vectors (missing
/// entries count as 0).
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
