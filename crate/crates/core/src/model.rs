//! Geometry, Poisson deployment, pathloss, fading and SIR for one snapshot.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{Error, Result};
use crate::params::RadioParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Square deployment region `[0, side)²`, optionally wrapped into a torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    pub side: f64,
    pub torus: bool,
}

impl Arena {
    fn delta(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        if self.torus {
            d - self.side * (d / self.side).round()
        } else {
            d
        }
    }

    pub fn distance_sq(&self, a: &Point, b: &Point) -> f64 {
        let dx = self.delta(a.x, b.x);
        let dy = self.delta(a.y, b.y);
        dx * dx + dy * dy
    }

    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    /// Maps a point back into the arena in torus mode; identity otherwise.
    pub fn wrap(&self, p: Point) -> Point {
        if self.torus {
            Point::new(p.x.rem_euclid(self.side), p.y.rem_euclid(self.side))
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FadingModel {
    /// Unit-mean exponential power gain.
    #[default]
    Rayleigh,
    /// `h = 1`; used for sensor measurements, which average fading out.
    None,
}

impl FadingModel {
    /// Draws one power gain. `None` consumes no randomness.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingModel::Rayleigh => Exp1.sample(rng),
            FadingModel::None => 1.0,
        }
    }
}

/// Homogeneous PPP of the given density over `[0, side)²`.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, area_side: f64, rng: &mut R) -> Vec<Point> {
    let mean = density * area_side * area_side;
    if mean <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(mean)
        .expect("finite positive Poisson mean")
        .sample(rng) as usize;
    (0..n)
        .map(|_| {
            Point::new(
                rng.random::<f64>() * area_side,
                rng.random::<f64>() * area_side,
            )
        })
        .collect()
}

/// Point at exactly `distance` from `anchor` in a uniformly random direction.
pub fn place_offset<R: Rng + ?Sized>(anchor: Point, distance: f64, rng: &mut R) -> Point {
    let phi = rng.random::<f64>() * TAU;
    Point::new(
        anchor.x + distance * phi.cos(),
        anchor.y + distance * phi.sin(),
    )
}

/// Pathloss gain at distance `r`.
pub fn pathloss_at(r: f64, alpha: f64, bounded: bool) -> Result<f64> {
    if bounded {
        if r <= 1.0 {
            Ok(1.0)
        } else {
            Ok(r.powf(-alpha))
        }
    } else if r == 0.0 {
        Err(Error::Domain(
            "unbounded pathloss between coincident points".into(),
        ))
    } else {
        Ok(r.powf(-alpha))
    }
}

/// `min{1, ‖tx − rx‖^-α}` when bounded, `‖tx − rx‖^-α` otherwise.
pub fn pathloss(tx: &Point, rx: &Point, alpha: f64, bounded: bool) -> Result<f64> {
    pathloss_at(tx.distance(rx), alpha, bounded)
}

/// Pathloss from a squared distance; avoids the square root on the hot path.
pub(crate) fn pathloss_sq(r2: f64, alpha: f64, bounded: bool) -> Result<f64> {
    if bounded && r2 <= 1.0 {
        return Ok(1.0);
    }
    if r2 == 0.0 {
        return Err(Error::Domain(
            "unbounded pathloss between coincident points".into(),
        ));
    }
    if alpha == 4.0 {
        Ok(1.0 / (r2 * r2))
    } else {
        Ok(r2.powf(-0.5 * alpha))
    }
}

/// Sum of `power · h · l` over `interferers` at `rx`, using the arena metric
/// and pathloss mode of `params`.
pub fn aggregate_interference<R: Rng + ?Sized>(
    rx: &Point,
    interferers: &[Point],
    power: f64,
    params: &RadioParams,
    fading: FadingModel,
    rng: &mut R,
) -> Result<f64> {
    let arena = params.arena();
    let mut total = 0.0;
    for z in interferers {
        let g = pathloss_sq(
            arena.distance_sq(z, rx),
            params.alpha,
            params.pathloss_bounded,
        )?;
        total += power * fading.draw(rng) * g;
    }
    Ok(total)
}

/// SIR at `rx` (SINR when `params.noise` is set).
///
/// Fading for the desired link is drawn first, then for each interferer
/// set in order. Returns `f64::INFINITY` when the denominator is zero
/// (no interferers, no noise).
pub fn sir_at<R: Rng + ?Sized>(
    rx: &Point,
    desired_tx: &Point,
    desired_power: f64,
    interferer_sets: &[(&[Point], f64)],
    params: &RadioParams,
    fading: FadingModel,
    rng: &mut R,
) -> Result<f64> {
    let arena = params.arena();
    let g = pathloss_sq(
        arena.distance_sq(desired_tx, rx),
        params.alpha,
        params.pathloss_bounded,
    )?;
    let signal = desired_power * fading.draw(rng) * g;
    let mut denom = params.noise.unwrap_or(0.0);
    for (points, power) in interferer_sets {
        denom += aggregate_interference(rx, points, *power, params, fading, rng)?;
    }
    if denom == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(signal / denom)
    }
}

/// One realization of the two-tier network.
///
/// Transmitters are indexed PTs first, then STs; receivers are indexed
/// primary receivers first, then secondary receivers. `fading` holds one
/// power gain per (transmitter, receiver) pair, row-major by transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSnapshot {
    pub pts: Vec<Point>,
    pub sts: Vec<Point>,
    pub sensors: Vec<Point>,
    pub p_receivers: Vec<Point>,
    pub s_receivers: Vec<Point>,
    pub fading: Vec<f64>,
}

impl NetworkSnapshot {
    /// Samples geometry, then fading, in a fixed draw order:
    /// PTs, STs, sensor offsets, primary receiver offsets, secondary
    /// receiver offsets, fading matrix.
    pub fn sample<R: Rng + ?Sized>(params: &RadioParams, fading: FadingModel, rng: &mut R) -> Self {
        let arena = params.arena();
        let pts = sample_ppp(params.lambda_p, params.area_side, rng);
        let sts = sample_ppp(params.lambda_s, params.area_side, rng);
        let offsets = |anchors: &[Point], dist: f64, rng: &mut R| -> Vec<Point> {
            anchors
                .iter()
                .map(|a| arena.wrap(place_offset(*a, dist, rng)))
                .collect()
        };
        let sensors = offsets(&sts, params.d, rng);
        let p_receivers = offsets(&pts, params.r_p, rng);
        let s_receivers = offsets(&sts, params.r_s, rng);
        let n = pts.len() + sts.len();
        let fading = (0..n * n).map(|_| fading.draw(rng)).collect();
        NetworkSnapshot {
            pts,
            sts,
            sensors,
            p_receivers,
            s_receivers,
            fading,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.pts.len() + self.sts.len()
    }

    pub fn transmitter(&self, i: usize) -> &Point {
        if i < self.pts.len() {
            &self.pts[i]
        } else {
            &self.sts[i - self.pts.len()]
        }
    }

    pub fn receiver(&self, j: usize) -> &Point {
        if j < self.p_receivers.len() {
            &self.p_receivers[j]
        } else {
            &self.s_receivers[j - self.p_receivers.len()]
        }
    }

    pub fn fading(&self, tx: usize, rx: usize) -> f64 {
        self.fading[tx * self.n_tx() + rx]
    }

    /// Fading-free aggregate PT interference at each sensor.
    pub fn sensor_measurements(&self, params: &RadioParams) -> Result<Vec<f64>> {
        let arena = params.arena();
        self.sensors
            .iter()
            .map(|s| {
                self.pts.iter().try_fold(0.0, |acc, z| {
                    let g = pathloss_sq(
                        arena.distance_sq(z, s),
                        params.alpha,
                        params.pathloss_bounded,
                    )?;
                    Ok(acc + params.power_p * g)
                })
            })
            .collect()
    }

    /// Received power `P_tx · h · l` for every (transmitter, receiver) pair,
    /// row-major by transmitter.
    pub fn received_power(&self, params: &RadioParams) -> Result<Vec<f64>> {
        let arena = params.arena();
        let n = self.n_tx();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let tx = self.transmitter(i);
            let power = if i < self.pts.len() {
                params.power_p
            } else {
                params.power_s
            };
            for j in 0..n {
                let g = pathloss_sq(
                    arena.distance_sq(tx, self.receiver(j)),
                    params.alpha,
                    params.pathloss_bounded,
                )?;
                out.push(power * self.fading[i * n + j] * g);
            }
        }
        Ok(out)
    }
}
