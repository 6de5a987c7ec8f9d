//! Snapshot-parallel Monte Carlo driver.
//!
//! Every snapshot draws from its own ChaCha stream, selected by the
//! snapshot index under a master seed, so results are a pure function of
//! `(params, policies, master_seed, snapshots)` whatever the worker count.
//! All policies of an [`Experiment`] are evaluated on the same topology,
//! fading and Bernoulli uniforms (common random numbers).

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::cid::{CidContext, CidModel, Moments};
use crate::error::{Error, Result};
use crate::model::{FadingModel, NetworkSnapshot, Point};
use crate::params::RadioParams;
use crate::policy::{expected_p_star_with, weight_or_clear, PStarForm, PolicyKind};
use crate::stats::{ks_statistic, mean_and_se, quantile, sorted};

/// Batches used for batched-means standard errors.
pub const MAX_BATCHES: usize = 50;

/// Per-snapshot random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPolicy {
    pub master_seed: u64,
}

impl SeedPolicy {
    pub fn new(master_seed: u64) -> Self {
        SeedPolicy { master_seed }
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }

    /// An independent family of streams for a different purpose.
    fn salted(&self, salt: u64) -> SeedPolicy {
        SeedPolicy {
            master_seed: self.master_seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        }
    }
}

/// Counts for one policy in one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolicyOutcome {
    pub n_st: u32,
    pub active: u32,
    pub secondary_successes: u32,
    pub primary_links: u32,
    pub primary_failures: u32,
    pub sum_prob: f64,
    pub clipped: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub index: u64,
    pub n_pt: u32,
    /// One entry per policy of the experiment, in order.
    pub outcomes: Vec<PolicyOutcome>,
}

impl SnapshotRecord {
    /// The outcomes of policy `k` across a record stream.
    pub fn column(records: &[SnapshotRecord], k: usize) -> Vec<PolicyOutcome> {
        records.iter().map(|r| r.outcomes[k]).collect()
    }
}

/// Parameters plus the policies compared on common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub params: RadioParams,
    pub policies: Vec<PolicyKind>,
    pub p_star_form: PStarForm,
    /// Fading on communication links. Sensors never see fading.
    pub fading: FadingModel,
}

impl Experiment {
    pub fn new(params: RadioParams, policies: Vec<PolicyKind>) -> Self {
        Experiment {
            params,
            policies,
            p_star_form: PStarForm::Derived,
            fading: FadingModel::Rayleigh,
        }
    }

    /// Outage-tight mean probability; zero when there are no STs to share it.
    pub fn p_star(&self) -> Result<f64> {
        if self.params.lambda_s == 0.0 {
            self.params.validate()?;
            return Ok(0.0);
        }
        expected_p_star_with(&self.params, self.p_star_form)
    }

    /// One slot: sample the network, measure at the sensors, assign
    /// probabilities, draw decisions and count successful links.
    pub fn run_snapshot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SnapshotRecord> {
        let p_star = self.p_star()?;
        self.run_snapshot_with(p_star, rng)
    }

    fn run_snapshot_with<R: Rng + ?Sized>(
        &self,
        p_star: f64,
        rng: &mut R,
    ) -> Result<SnapshotRecord> {
        let params = &self.params;
        let snap = NetworkSnapshot::sample(params, self.fading, rng);
        let measurements = snap.sensor_measurements(params)?;
        let uniforms: Vec<f64> = (0..snap.sts.len()).map(|_| rng.random()).collect();
        let gain = snap.received_power(params)?;

        let n = snap.n_tx();
        let n_pt = snap.pts.len();
        let noise = params.noise.unwrap_or(0.0);
        let sinr_ok = |j: usize, active: &[usize]| -> bool {
            let signal = gain[j * n + j];
            let mut denom = noise;
            for &k in active {
                if k != j {
                    denom += gain[k * n + j];
                }
            }
            let sinr = if denom == 0.0 {
                f64::INFINITY
            } else {
                signal / denom
            };
            sinr > params.beta
        };

        let mut outcomes = Vec::with_capacity(self.policies.len());
        for policy in &self.policies {
            let mut assignment = policy.assign(&measurements, params, p_star)?;
            assignment.decide(&uniforms);
            let active: Vec<usize> = (0..n_pt)
                .chain(
                    assignment
                        .decisions
                        .iter()
                        .enumerate()
                        .filter(|(_, &on)| on)
                        .map(|(i, _)| n_pt + i),
                )
                .collect();
            let primary_failures = (0..n_pt).filter(|&j| !sinr_ok(j, &active)).count();
            let secondary_successes = active[n_pt..]
                .iter()
                .filter(|&&j| sinr_ok(j, &active))
                .count();
            outcomes.push(PolicyOutcome {
                n_st: snap.sts.len() as u32,
                active: (active.len() - n_pt) as u32,
                secondary_successes: secondary_successes as u32,
                primary_links: n_pt as u32,
                primary_failures: primary_failures as u32,
                sum_prob: assignment.probs.iter().sum(),
                clipped: assignment.clipped as u32,
            });
        }
        Ok(SnapshotRecord {
            index: 0,
            n_pt: n_pt as u32,
            outcomes,
        })
    }
}

/// Single-policy convenience wrapper around [`Experiment::run_snapshot`].
pub fn run_snapshot<R: Rng + ?Sized>(
    params: &RadioParams,
    policy: PolicyKind,
    rng: &mut R,
) -> Result<PolicyOutcome> {
    let exp = Experiment::new(params.clone(), vec![policy]);
    Ok(exp.run_snapshot(rng)?.outcomes[0])
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Runs `snapshots` independent slots, returned in index order.
pub fn run_experiment(
    exp: &Experiment,
    snapshots: u64,
    seed: SeedPolicy,
    threads: Option<usize>,
) -> Result<Vec<SnapshotRecord>> {
    exp.params.validate()?;
    let p_star = exp.p_star()?;
    with_pool(threads, || {
        (0..snapshots)
            .into_par_iter()
            .map(|i| {
                let mut rng = seed.rng(i);
                let mut rec = exp.run_snapshot_with(p_star, &mut rng)?;
                rec.index = i;
                Ok(rec)
            })
            .collect()
    })
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsEstimate {
    /// Successful secondary bits/s/Hz per m².
    pub ase: Estimate,
    pub primary_outage: Estimate,
    pub secondary_success: f64,
    pub mean_assigned_p: f64,
    pub active_fraction: f64,
    pub clip_fraction: f64,
    pub snapshots: usize,
}

fn batches(n: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    let b = n.min(MAX_BATCHES);
    (0..b).map(move |k| (k * n / b)..((k + 1) * n / b))
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Empirical ASE, outage and success rates from one policy's outcomes.
/// Standard errors are batched means over contiguous index blocks.
pub fn estimate_metrics(
    outcomes: &[PolicyOutcome],
    params: &RadioParams,
) -> Result<MetricsEstimate> {
    if outcomes.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let n = outcomes.len();
    let per_snapshot_ase =
        |o: &PolicyOutcome| o.secondary_successes as f64 * params.link_rate() / params.area();
    let sum = |f: &dyn Fn(&PolicyOutcome) -> f64, r: std::ops::Range<usize>| -> f64 {
        outcomes[r].iter().map(f).sum()
    };

    let ase_total = sum(&per_snapshot_ase, 0..n) / n as f64;
    let ase_batches: Vec<f64> = batches(n)
        .map(|r| {
            let len = r.len() as f64;
            sum(&per_snapshot_ase, r) / len
        })
        .collect();

    let fails = |o: &PolicyOutcome| o.primary_failures as f64;
    let links = |o: &PolicyOutcome| o.primary_links as f64;
    let outage_total = ratio(sum(&fails, 0..n), sum(&links, 0..n));
    let outage_batches: Vec<f64> = batches(n)
        .filter_map(|r| {
            let l = sum(&links, r.clone());
            (l > 0.0).then(|| sum(&fails, r) / l)
        })
        .collect();

    let n_st = sum(&|o| o.n_st as f64, 0..n);
    let active = sum(&|o| o.active as f64, 0..n);
    Ok(MetricsEstimate {
        ase: Estimate {
            value: ase_total,
            se: mean_and_se(&ase_batches).1,
        },
        primary_outage: Estimate {
            value: outage_total,
            se: if outage_batches.is_empty() {
                0.0
            } else {
                mean_and_se(&outage_batches).1
            },
        },
        secondary_success: ratio(sum(&|o| o.secondary_successes as f64, 0..n), active),
        mean_assigned_p: ratio(sum(&|o| o.sum_prob, 0..n), n_st),
        active_fraction: ratio(active, n_st),
        clip_fraction: ratio(sum(&|o| o.clipped as f64, 0..n), n_st),
        snapshots: n,
    })
}

/// ASE of `a` minus ASE of `b` on paired outcomes, with the batched-means
/// standard error of the paired difference.
pub fn paired_ase_difference(
    a: &[PolicyOutcome],
    b: &[PolicyOutcome],
    params: &RadioParams,
) -> Result<Estimate> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::EmptyRecords);
    }
    let scale = params.link_rate() / params.area();
    let diff: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x.secondary_successes as f64 - y.secondary_successes as f64) * scale)
        .collect();
    let n = diff.len();
    let batch_means: Vec<f64> = batches(n)
        .map(|r| {
            let len = r.len() as f64;
            diff[r].iter().sum::<f64>() / len
        })
        .collect();
    Ok(Estimate {
        value: diff.iter().sum::<f64>() / n as f64,
        se: mean_and_se(&batch_means).1,
    })
}

/// `E[w]` over the marginal distribution of sensor measurements, for the
/// fixed-normalisation variant of the cognitive policy.
pub fn estimate_mean_weight(
    params: &RadioParams,
    min_devices: usize,
    seed: SeedPolicy,
) -> Result<f64> {
    params.validate()?;
    if params.lambda_s == 0.0 {
        return Err(Error::Domain("ST density must be positive".into()));
    }
    let ctx = CidContext {
        power_p: params.power_p,
        lambda_p: params.lambda_p,
        alpha: params.alpha,
        d: params.d,
    };
    let seed = seed.salted(2);
    let (mut sum, mut count, mut index) = (0.0, 0usize, 0u64);
    while count < min_devices {
        let mut rng = seed.rng(index);
        index += 1;
        let snap = NetworkSnapshot::sample(params, FadingModel::None, &mut rng);
        for m in snap.sensor_measurements(params)? {
            sum += weight_or_clear(m, params.i_th, ctx)?;
            count += 1;
        }
        if index > 1_000_000 && count == 0 {
            return Err(Error::Domain("no STs sampled".into()));
        }
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub center: f64,
    pub empirical_density: f64,
    /// Bin-averaged analytic density, `(F(b) − F(a)) / (b − a)`.
    pub analytic_density: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct CidValidation {
    pub model: CidModel,
    /// Accepted ST interference values, ascending.
    pub samples: Vec<f64>,
    pub ks: f64,
    pub acceptance_rate: f64,
    pub tries: u64,
    /// Radius of the PT disk around the sensor.
    pub field_radius: f64,
    pub histogram: Vec<HistogramBin>,
    /// Centre of the fullest histogram bin.
    pub mode: f64,
    pub empirical: Moments,
}

pub const MIN_ACCEPTANCE_RATE: f64 = 1e-5;
const FIELDS_PER_CHUNK: usize = 2048;
const CHUNKS_PER_WAVE: u64 = 32;
const RATE_CHECK_AFTER: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSpec {
    pub m: f64,
    /// Relative half-width of the acceptance band around `m`.
    pub band: f64,
    pub ctx: CidContext,
    pub n_target: usize,
    pub bins: usize,
}

/// Radius beyond which the neglected PT tail is below 0.1% of the mean
/// residual, and at least ten nearest-PT distances. A lone PT only has to
/// be able to reach the outer edge of the acceptance annulus.
fn conditioning_radius(r1_hat: f64, alpha: f64, lambda_p: f64, band: f64) -> f64 {
    if lambda_p == 0.0 && band < 0.5 {
        return 1.25 * r1_hat * (1.0 - band).powf(-1.0 / alpha);
    }
    r1_hat * 10f64.max(1000f64.powf(1.0 / (alpha - 2.0)))
}

/// Rejection-conditioned check of the CID against full PT fields.
///
/// PT fields are sampled in a disk around the sensor; fields whose
/// fading-free, unbounded-pathloss measurement lies within
/// `m·(1 ± band)` are kept, and the interference at an ST `d` away in a
/// uniform direction is recorded. With `lambda_p = 0` each field holds
/// exactly one PT, which reproduces the CID construction exactly.
pub fn validate_cid_empirical(
    spec: &ValidationSpec,
    seed: SeedPolicy,
    threads: Option<usize>,
) -> Result<CidValidation> {
    if !(spec.band > 0.0 && spec.band.is_finite()) {
        return Err(Error::invalid(
            "band",
            format!("must be > 0, got {}", spec.band),
        ));
    }
    if spec.n_target == 0 {
        return Err(Error::invalid("n_target", "no accepted samples requested"));
    }
    if spec.bins == 0 {
        return Err(Error::invalid("bins", "need at least one bin"));
    }
    let model = CidModel::new(spec.m, spec.ctx)?;
    let CidContext {
        power_p,
        lambda_p,
        alpha,
        d,
    } = spec.ctx;
    let radius = conditioning_radius(model.r1_hat(), alpha, lambda_p, spec.band);
    let (lo_m, hi_m) = (spec.m * (1.0 - spec.band), spec.m * (1.0 + spec.band));
    let poisson = (lambda_p > 0.0)
        .then(|| Poisson::new(lambda_p * PI * radius * radius).expect("poisson mean"));
    let seed = seed.salted(1);

    let chunk = |c: u64| -> Vec<f64> {
        let mut rng = seed.rng(c);
        let mut field: Vec<Point> = Vec::new();
        let mut accepted = Vec::new();
        for _ in 0..FIELDS_PER_CHUNK {
            let count = match &poisson {
                Some(p) => p.sample(&mut rng) as usize,
                None => 1,
            };
            field.clear();
            field.extend((0..count).map(|_| {
                let r = radius * rng.random::<f64>().sqrt();
                let phi = rng.random::<f64>() * TAU;
                Point::new(r * phi.cos(), r * phi.sin())
            }));
            let mut measured = 0.0;
            for z in &field {
                measured += power_p * (z.x * z.x + z.y * z.y).powf(-0.5 * alpha);
                if measured > hi_m {
                    break;
                }
            }
            if measured < lo_m || measured > hi_m {
                continue;
            }
            let psi = rng.random::<f64>() * TAU;
            let st = Point::new(d * psi.cos(), d * psi.sin());
            let at_st: f64 = field
                .iter()
                .map(|z| power_p * ((z.x - st.x).powi(2) + (z.y - st.y).powi(2)).powf(-0.5 * alpha))
                .sum();
            accepted.push(at_st);
        }
        accepted
    };

    let mut samples: Vec<f64> = Vec::with_capacity(spec.n_target);
    let mut tries = 0u64;
    let mut next_chunk = 0u64;
    with_pool(threads, || -> Result<()> {
        while samples.len() < spec.n_target {
            let wave: Vec<Vec<f64>> = (next_chunk..next_chunk + CHUNKS_PER_WAVE)
                .into_par_iter()
                .map(chunk)
                .collect();
            next_chunk += CHUNKS_PER_WAVE;
            for part in wave {
                if samples.len() >= spec.n_target {
                    break;
                }
                tries += FIELDS_PER_CHUNK as u64;
                samples.extend(part);
            }
            let rate = samples.len() as f64 / tries as f64;
            if tries >= RATE_CHECK_AFTER && rate < MIN_ACCEPTANCE_RATE {
                return Err(Error::LowAcceptance {
                    rate,
                    accepted: samples.len(),
                    tries,
                    min: MIN_ACCEPTANCE_RATE,
                });
            }
        }
        Ok(())
    })?;
    samples.truncate(spec.n_target);
    let acceptance_rate = samples.len() as f64 / tries as f64;
    let samples = sorted(samples);

    let ks = ks_statistic(&samples, |x| model.cdf(x));
    let (x_min, x_max) = model.support_bounds();
    let lo = x_min.min(quantile(&samples, 0.001));
    let q99 = quantile(&samples, 0.99);
    let hi = if x_max.is_finite() {
        x_max.max(q99)
    } else {
        q99
    };
    let histogram = histogram(&samples, &model, lo, hi, spec.bins);
    let mode = histogram
        .iter()
        .fold((0usize, f64::NAN), |best, b| {
            if b.count > best.0 {
                (b.count, b.center)
            } else {
                best
            }
        })
        .1;

    Ok(CidValidation {
        empirical: sample_moments(&samples),
        model,
        samples,
        ks,
        acceptance_rate,
        tries,
        field_radius: radius,
        histogram,
        mode,
    })
}

fn histogram(
    samples: &[f64],
    model: &CidModel,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Vec<HistogramBin> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        if x >= lo && x <= hi {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    let n = samples.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &count)| {
            let a = lo + k as f64 * width;
            let b = a + width;
            HistogramBin {
                center: a + 0.5 * width,
                empirical_density: count as f64 / (n * width),
                analytic_density: (model.cdf(b) - model.cdf(a)) / width,
                count,
            }
        })
        .collect()
}

fn sample_moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let third = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    Moments {
        mean,
        variance,
        skewness: if variance > 0.0 {
            third / variance.powf(1.5)
        } else {
            0.0
        },
        converged: true,
    }
}
