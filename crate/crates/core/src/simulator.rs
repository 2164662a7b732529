//! Monte Carlo experiment engine.
//!
//! Realization `i` always draws from substream `i` of the run seed, and
//! partial summaries are built over fixed-size blocks and merged in block
//! order. A run is therefore bit-identical for any worker count.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::analytics::InteractionModel;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::pointprocess::{ClassKind, Realization, Scenario};
use crate::rng::{substream, StreamTag};
use crate::stats::SampleStats;

/// Number of uniform angle bins over (−π, π].
pub const ANGLE_BINS: usize = 64;

const BLOCK: usize = 1024;

/// One single-bounce path BS → scatterer → MS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcRecord {
    pub class_kind: ClassKind,
    /// BS–scatterer distance, m.
    pub x: f64,
    /// MS–scatterer distance, m.
    pub y: f64,
    /// Path length x + y, m.
    pub tau: f64,
    /// Angle of departure at the BS, radians in (−π, π].
    pub aod: f64,
    /// Angle of arrival at the MS, radians in (−π, π].
    pub aoa: f64,
    pub r_coeff: f64,
}

fn wrap_angle(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// AoD at the BS and AoA at the MS, both from the global +x axis (the
/// BS→MS direction).
pub fn compute_angles(point: &Point, d_prime: f64) -> Result<(f64, f64)> {
    let to_ms = (point.x - d_prime, point.y);
    if (point.x == 0.0 && point.y == 0.0) || (to_ms.0 == 0.0 && to_ms.1 == 0.0) {
        return Err(Error::DegenerateAngle);
    }
    Ok((
        wrap_angle(point.y.atan2(point.x)),
        wrap_angle(to_ms.1.atan2(to_ms.0)),
    ))
}

/// Records of one realization plus its coherent received power.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<MpcRecord>,
    /// Watts.
    pub power: f64,
}

/// Builds one record per active scatterer and sums the paths coherently:
/// `P = k0 |Σ R exp(−jθ) / g2|²`. A scatterer sitting exactly on a node
/// gets angles 0.
pub fn trace_realization<R: Rng + ?Sized>(
    realization: &Realization,
    scenario: &Scenario,
    interaction: &InteractionModel,
    rng: &mut R,
) -> Trace {
    let ms = scenario.ms_position();
    let coeff = interaction.coefficient_dist();
    let (mut re, mut im) = (0.0, 0.0);
    let records: Vec<MpcRecord> = realization
        .points()
        .map(|(kind, p)| {
            let (x, y) = (p.norm(), p.distance_to(&ms));
            let (aod, aoa) = compute_angles(p, scenario.d_prime()).unwrap_or((0.0, 0.0));
            let r = coeff.sample(rng);
            let amp = r / interaction.g2(x, y);
            let theta = interaction.phase(x, y);
            re += amp * theta.cos();
            im -= amp * theta.sin();
            MpcRecord {
                class_kind: kind,
                x,
                y,
                tau: x + y,
                aod,
                aoa,
                r_coeff: r,
            }
        })
        .collect();
    Trace {
        records,
        power: interaction.k0() * (re * re + im * im),
    }
}

/// Power of an explicit set of `(x, y, R)` paths; used to check the coherent sum.
pub fn coherent_power(interaction: &InteractionModel, paths: &[(f64, f64, f64)]) -> f64 {
    let (re, im) = paths.iter().fold((0.0, 0.0), |(re, im), &(x, y, r)| {
        let amp = r / interaction.g2(x, y);
        let theta = interaction.phase(x, y);
        (re + amp * theta.cos(), im - amp * theta.sin())
    });
    interaction.k0() * (re * re + im * im)
}

/// Counts over [`ANGLE_BINS`] uniform bins; bin `i` is
/// `(−π + i·w, −π + (i+1)·w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleHistogram {
    counts: [u64; ANGLE_BINS],
}

impl Default for AngleHistogram {
    fn default() -> Self {
        Self {
            counts: [0; ANGLE_BINS],
        }
    }
}

impl AngleHistogram {
    pub fn bin_width() -> f64 {
        2.0 * PI / ANGLE_BINS as f64
    }

    pub fn bin_index(angle: f64) -> usize {
        let i = ((angle + PI) / Self::bin_width()).ceil() as i64 - 1;
        i.clamp(0, ANGLE_BINS as i64 - 1) as usize
    }

    /// `(lower, upper)` edges of bin `i`.
    pub fn bin_edges(i: usize) -> (f64, f64) {
        let w = Self::bin_width();
        (-PI + i as f64 * w, -PI + (i + 1) as f64 * w)
    }

    pub fn push(&mut self, angle: f64) {
        self.counts[Self::bin_index(angle)] += 1;
    }

    pub fn counts(&self) -> &[u64; ANGLE_BINS] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Empirical density per bin (integrates to 1 over (−π, π]).
    pub fn densities(&self) -> Vec<f64> {
        let norm = self.total() as f64 * Self::bin_width();
        self.counts
            .iter()
            .map(|&c| if norm > 0.0 { c as f64 / norm } else { 0.0 })
            .collect()
    }

    /// Bin with the largest count (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    fn merge(&mut self, other: &AngleHistogram) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }
}

/// Path-length statistics, meters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ToaSummary {
    /// One uniformly chosen MPC per non-empty realization.
    pub uniform: SampleStats,
    /// Within-realization mean path length over non-empty realizations,
    /// split by the tall-visibility draw U (index 0 and 1).
    pub per_mpc_by_u: [SampleStats; 2],
    /// Every MPC of every realization.
    pub pooled: SampleStats,
}

impl ToaSummary {
    /// Per-MPC mean path length combined over U with the known weights
    /// γ and 1 − γ. Strata without any MPC are dropped and the weights
    /// renormalized. Returns `(mean, stderr)`, or `None` if no MPC was seen.
    pub fn stratified(&self, gamma: f64) -> Option<(f64, f64)> {
        let weights = [1.0 - gamma, gamma];
        let mut w_total = 0.0;
        let (mut mean, mut var) = (0.0, 0.0);
        for (w, s) in weights.iter().zip(&self.per_mpc_by_u) {
            if *w > 0.0 && s.count() > 0 {
                w_total += w;
                mean += w * s.mean();
                var += w * w * s.stderr().powi(2);
            }
        }
        (w_total > 0.0).then(|| (mean / w_total, var.sqrt() / w_total))
    }

    fn merge(&mut self, other: &ToaSummary) {
        self.uniform.merge(&other.uniform);
        self.per_mpc_by_u[0].merge(&other.per_mpc_by_u[0]);
        self.per_mpc_by_u[1].merge(&other.per_mpc_by_u[1]);
        self.pooled.merge(&other.pooled);
    }
}

/// Aggregated statistics of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub n_realizations: u64,
    /// Realizations with U = 1.
    pub u_ones: u64,
    /// MPC count → number of realizations.
    pub mpc_count_histogram: BTreeMap<usize, u64>,
    pub toa: ToaSummary,
    /// Per-realization received power, watts.
    pub power: SampleStats,
    pub aod: AngleHistogram,
    pub aoa: AngleHistogram,
}

impl RunSummary {
    pub fn merge(&mut self, other: &RunSummary) {
        self.n_realizations += other.n_realizations;
        self.u_ones += other.u_ones;
        for (&n, &c) in &other.mpc_count_histogram {
            *self.mpc_count_histogram.entry(n).or_insert(0) += c;
        }
        self.toa.merge(&other.toa);
        self.power.merge(&other.power);
        self.aod.merge(&other.aod);
        self.aoa.merge(&other.aoa);
    }

    /// Empirical MPC-count PMF, indexed by count.
    pub fn empirical_pmf(&self) -> Vec<f64> {
        let len = self
            .mpc_count_histogram
            .keys()
            .next_back()
            .map_or(0, |&n| n + 1);
        let mut pmf = vec![0.0; len];
        for (&n, &c) in &self.mpc_count_histogram {
            pmf[n] = c as f64 / self.n_realizations as f64;
        }
        pmf
    }

    pub fn total_mpcs(&self) -> u64 {
        self.mpc_count_histogram
            .iter()
            .map(|(&n, &c)| n as u64 * c)
            .sum()
    }

    fn record(&mut self, realization: &Realization, trace: &Trace, pick: Option<usize>) {
        self.n_realizations += 1;
        self.u_ones += realization.u as u64;
        *self
            .mpc_count_histogram
            .entry(trace.records.len())
            .or_insert(0) += 1;
        self.power.push(trace.power);
        if let Some(i) = pick {
            self.toa.uniform.push(trace.records[i].tau);
            let mean_tau =
                trace.records.iter().map(|r| r.tau).sum::<f64>() / trace.records.len() as f64;
            self.toa.per_mpc_by_u[realization.u as usize].push(mean_tau);
        }
        for r in &trace.records {
            self.toa.pooled.push(r.tau);
            self.aod.push(r.aod);
            self.aoa.push(r.aoa);
        }
    }
}

/// Size, seed and thread count of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub n_realizations: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl RunOptions {
    pub fn new(n_realizations: u64, seed: u64) -> Self {
        Self {
            n_realizations,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

fn simulate_one(
    scenario: &Scenario,
    interaction: &InteractionModel,
    seed: u64,
    index: u64,
) -> (Realization, Trace, Option<usize>) {
    let mut rng = substream(seed, StreamTag::Realization, index);
    let realization = scenario.sample_realization(&mut rng);
    let trace = trace_realization(&realization, scenario, interaction, &mut rng);
    let pick = (!trace.records.is_empty()).then(|| rng.random_range(0..trace.records.len()));
    (realization, trace, pick)
}

fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return job();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(job)
}

fn block_ranges(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(BLOCK as u64))
        .map(|b| (b * BLOCK as u64, ((b + 1) * BLOCK as u64).min(n)))
        .collect()
}

/// Runs `n_realizations` independent channel draws and aggregates counts,
/// path lengths, powers and angles.
pub fn run_experiment(
    scenario: &Scenario,
    interaction: &InteractionModel,
    options: &RunOptions,
) -> RunSummary {
    let blocks = block_ranges(options.n_realizations);
    let partials: Vec<RunSummary> = in_pool(options.workers, || {
        blocks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut s = RunSummary::default();
                for i in lo..hi {
                    let (real, trace, pick) = simulate_one(scenario, interaction, options.seed, i);
                    s.record(&real, &trace, pick);
                }
                s
            })
            .collect()
    });
    let mut total = RunSummary::default();
    for p in &partials {
        total.merge(p);
    }
    total
}

/// Every MPC record of a run, in realization order. Uses the same streams
/// as [`run_experiment`].
pub fn collect_records(
    scenario: &Scenario,
    interaction: &InteractionModel,
    options: &RunOptions,
) -> Vec<MpcRecord> {
    let blocks = block_ranges(options.n_realizations);
    let parts: Vec<Vec<MpcRecord>> = in_pool(options.workers, || {
        blocks
            .par_iter()
            .map(|&(lo, hi)| {
                (lo..hi)
                    .flat_map(|i| {
                        simulate_one(scenario, interaction, options.seed, i)
                            .1
                            .records
                    })
                    .collect()
            })
            .collect()
    });
    parts.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::InteractionMode;

    #[test]
    fn angle_examples() {
        let (aod, aoa) = compute_angles(&Point::new(100.0, 0.0), 200.0).unwrap();
        assert_eq!(aod, 0.0);
        assert_eq!(aoa, PI);
        let (aod, _) = compute_angles(&Point::new(0.0, 5.0), 200.0).unwrap();
        assert!((aod - PI / 2.0).abs() < 1e-15);
        // −π wraps to π
        let (aod, _) = compute_angles(&Point::new(-1.0, -0.0), 200.0).unwrap();
        assert_eq!(aod, PI);
        assert_eq!(
            compute_angles(&Point::new(0.0, 0.0), 200.0),
            Err(Error::DegenerateAngle)
        );
        assert_eq!(
            compute_angles(&Point::new(200.0, 0.0), 200.0),
            Err(Error::DegenerateAngle)
        );
    }

    #[test]
    fn single_path_power() {
        let refl = InteractionModel::reflection_gtu();
        let p = coherent_power(&refl, &[(300.0, 250.0, -1.3)]);
        assert!((p - refl.k0() * 1.69 / 550.0f64.powi(2)).abs() / p < 1e-12);
        let scat = InteractionModel::scattering_gtu();
        let p = coherent_power(&scat, &[(300.0, 250.0, 4.2)]);
        assert!((p - scat.k0() * 4.2f64.powi(2) / (300.0f64 * 250.0).powi(2)).abs() / p < 1e-12);
    }

    #[test]
    fn opposite_phases_cancel() {
        let m = InteractionModel::new(InteractionMode::Reflection, 1.0, 4.0, 1.0, 0.0).unwrap();
        // path lengths 10 and 12 differ by half a wavelength
        let p = coherent_power(&m, &[(4.0, 6.0, 1.0), (5.0, 7.0, 1.2)]);
        assert!(p < 1e-20, "{p}");
    }

    #[test]
    fn trace_matches_coherent_power() {
        let s = Scenario::gtu();
        let m = InteractionModel::reflection_gtu();
        let mut rng = substream(3, StreamTag::Realization, 0);
        let real = s.sample_realization(&mut rng);
        let trace = trace_realization(&real, &s, &m, &mut rng);
        assert_eq!(trace.records.len(), real.len());
        let paths: Vec<_> = trace
            .records
            .iter()
            .map(|r| (r.x, r.y, r.r_coeff))
            .collect();
        assert!((coherent_power(&m, &paths) - trace.power).abs() <= 1e-12 * trace.power);
        let empty = trace_realization(&Realization::default(), &s, &m, &mut rng);
        assert_eq!(empty.power, 0.0);
        assert!(empty.records.is_empty());
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(AngleHistogram::bin_index(PI), ANGLE_BINS - 1);
        assert_eq!(AngleHistogram::bin_index(-PI + 1e-12), 0);
        assert_eq!(AngleHistogram::bin_index(0.0), ANGLE_BINS / 2 - 1);
        assert_eq!(AngleHistogram::bin_index(1e-9), ANGLE_BINS / 2);
        let mut h = AngleHistogram::default();
        for i in 0..1000 {
            h.push(-PI + (i as f64 + 0.5) * 2.0 * PI / 1000.0);
        }
        let integral: f64 = h.densities().iter().sum::<f64>() * AngleHistogram::bin_width();
        assert!((integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn summary_counts_consistent() {
        let s = Scenario::gtu();
        let m = InteractionModel::reflection_gtu();
        let sum = run_experiment(&s, &m, &RunOptions::new(3000, 5));
        assert_eq!(sum.n_realizations, 3000);
        assert_eq!(sum.mpc_count_histogram.values().sum::<u64>(), 3000);
        assert_eq!(sum.toa.pooled.count(), sum.total_mpcs());
        assert_eq!(sum.aod.total(), sum.total_mpcs());
        let records = collect_records(&s, &m, &RunOptions::new(3000, 5));
        assert_eq!(records.len() as u64, sum.total_mpcs());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = Scenario::gtu();
        let m = InteractionModel::reflection_gtu();
        let one = run_experiment(&s, &m, &RunOptions::new(2500, 8).with_workers(1));
        let four = run_experiment(&s, &m, &RunOptions::new(2500, 8).with_workers(4));
        assert_eq!(one, four);
    }
}
