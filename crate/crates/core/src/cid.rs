//! Conditional interference distribution (CID) at a secondary transmitter
//! given the fading-free measurement `m` of its sensor, `d` metres away.
//!
//! The nearest PT is treated as the dominant interferer common to both
//! points; every other PT is replaced by its mean contribution
//! `T(r) = 2·P·π·λ·r^(2−α)/(α−2)`. The nearest-PT distance `r̂₁` is the
//! unique root of `P·r^(−α) + T(r) = m`. With the angle `θ` between the
//! sensor→PT and sensor→ST directions uniform on `[0, π)`, the ST sees
//!
//! ```text
//!     x(θ) = T + P·(r̂₁² + d² − 2·r̂₁·d·cos θ)^(−α/2)
//! ```
//!
//! so `F(x) = 1 − θ_x/π` with `θ_x = arccos((r̂₁² + d² − (P/(x−T))^(2/α)) / (2·r̂₁·d))`.
//! All expressions use unbounded pathloss.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::error::{Error, Result};
use crate::stats::trapezoid_doubling;

const ROOT_REL_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;
/// Arccos arguments this far outside [-1, 1] are float noise and clamped silently.
const CLAMP_SLOP: f64 = 1e-9;

/// The quantities the CID depends on besides the measurement itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CidContext {
    pub power_p: f64,
    pub lambda_p: f64,
    pub alpha: f64,
    pub d: f64,
}

/// Mean interference of a PPP of density `lambda_p` outside radius `r1_hat`.
pub fn compute_t(r1_hat: f64, power_p: f64, lambda_p: f64, alpha: f64) -> f64 {
    2.0 * power_p * PI * lambda_p * r1_hat.powf(2.0 - alpha) / (alpha - 2.0)
}

/// Estimated distance from the sensor to its nearest PT.
///
/// Bisection on `g(r) = P·r^(−α) + T(r) − m`, which decreases strictly
/// from `+∞` to `−m`. The λ = 0 root `(P/m)^(1/α)` is a lower bracket
/// since `g` there equals `T ≥ 0`; the upper bracket is found by doubling.
pub fn solve_r1(m: f64, power_p: f64, lambda_p: f64, alpha: f64) -> Result<f64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!(
            "measurement must be positive, got {m}"
        )));
    }
    if !(power_p > 0.0 && power_p.is_finite()) {
        return Err(Error::Domain(format!(
            "PT power must be positive, got {power_p}"
        )));
    }
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must exceed 2, got {alpha}")));
    }
    if !(lambda_p >= 0.0 && lambda_p.is_finite()) {
        return Err(Error::Domain(format!(
            "PT density must be >= 0, got {lambda_p}"
        )));
    }

    let mut lo = (power_p / m).powf(1.0 / alpha);
    if lambda_p == 0.0 {
        return Ok(lo);
    }
    let g = |r: f64| power_p * r.powf(-alpha) + compute_t(r, power_p, lambda_p, alpha) - m;

    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > ROOT_MAX_ITER {
            return Err(Error::NoConvergence(format!(
                "no upper bracket for m={m}, lambda_p={lambda_p}"
            )));
        }
    }

    // bisect down to float resolution; the tolerance only decides failure
    for _ in 0..ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= ROOT_REL_TOL * lo {
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::NoConvergence(format!(
        "bisection stalled at [{lo}, {hi}] for m={m}"
    )))
}

/// Closed-form nearest-PT distance for α = 4:
/// `√((Pπλ + √((Pπλ)² + 4mP)) / 2m)`.
pub fn r1_closed_form_alpha4(m: f64, power_p: f64, lambda_p: f64) -> f64 {
    let k = power_p * PI * lambda_p;
    ((k + (k * k + 4.0 * m * power_p).sqrt()) / (2.0 * m)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// False when the support is unbounded or the quadrature did not settle.
    pub converged: bool,
}

/// The CID fitted to one sensor measurement. Immutable after construction;
/// the only interior state is a counter of clamped arccos excursions.
#[derive(Debug)]
pub struct CidModel {
    m: f64,
    ctx: CidContext,
    r1_hat: f64,
    t_resid: f64,
    x_min: f64,
    x_max: f64,
    excursions: AtomicU64,
}

impl Clone for CidModel {
    fn clone(&self) -> Self {
        CidModel {
            excursions: AtomicU64::new(self.excursions.load(Ordering::Relaxed)),
            ..*self
        }
    }
}

impl CidModel {
    pub fn new(m: f64, ctx: CidContext) -> Result<Self> {
        if !(ctx.d >= 0.0 && ctx.d.is_finite()) {
            return Err(Error::Domain(format!(
                "sensor offset must be >= 0, got {}",
                ctx.d
            )));
        }
        let r1_hat = solve_r1(m, ctx.power_p, ctx.lambda_p, ctx.alpha)?;
        let t_resid = compute_t(r1_hat, ctx.power_p, ctx.lambda_p, ctx.alpha);
        let (x_min, x_max) = if ctx.d == 0.0 {
            (m, m)
        } else {
            let near = (r1_hat - ctx.d).abs();
            let x_max = if near == 0.0 {
                f64::INFINITY
            } else {
                ctx.power_p * near.powf(-ctx.alpha) + t_resid
            };
            (
                ctx.power_p * (r1_hat + ctx.d).powf(-ctx.alpha) + t_resid,
                x_max,
            )
        };
        Ok(CidModel {
            m,
            ctx,
            r1_hat,
            t_resid,
            x_min,
            x_max,
            excursions: AtomicU64::new(0),
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn context(&self) -> &CidContext {
        &self.ctx
    }

    pub fn r1_hat(&self) -> f64 {
        self.r1_hat
    }

    pub fn t_resid(&self) -> f64 {
        self.t_resid
    }

    /// `(x_min, x_max)`, reached at θ = π and θ = 0. `x_max` is `+∞` when
    /// `r̂₁ = d`.
    pub fn support_bounds(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    /// The estimated nearest PT sits closer to the sensor than the ST does.
    pub fn nearest_within_offset(&self) -> bool {
        self.r1_hat < self.ctx.d
    }

    /// Number of arccos arguments clamped by more than float slop.
    pub fn clamp_excursions(&self) -> u64 {
        self.excursions.load(Ordering::Relaxed)
    }

    fn is_point_mass(&self) -> bool {
        self.ctx.d == 0.0
    }

    /// `(P / (x − T))^(2/α)`, the squared ST–PT distance implied by `x`.
    fn implied_sq_distance(&self, x: f64) -> f64 {
        (self.ctx.power_p / (x - self.t_resid)).powf(2.0 / self.ctx.alpha)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return if x >= self.m { 1.0 } else { 0.0 };
        }
        if x <= self.x_min {
            return 0.0;
        }
        if x >= self.x_max {
            return 1.0;
        }
        let (r, d) = (self.r1_hat, self.ctx.d);
        let mut arg = (r * r + d * d - self.implied_sq_distance(x)) / (2.0 * r * d);
        if arg.abs() > 1.0 {
            if arg.abs() - 1.0 > CLAMP_SLOP {
                self.excursions.fetch_add(1, Ordering::Relaxed);
            }
            arg = arg.clamp(-1.0, 1.0);
        }
        1.0 - arg.acos() / PI
    }

    /// Density on the open support.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if self.is_point_mass() || !(x > self.x_min && x < self.x_max) {
            return Err(Error::Domain(format!(
                "pdf evaluated at {x}, outside the open support ({}, {})",
                self.x_min, self.x_max
            )));
        }
        let CidContext {
            power_p, alpha, d, ..
        } = self.ctx;
        let r = self.r1_hat;
        let excess = x - self.t_resid;
        let ratio = power_p / excess;
        let num = power_p / (PI * d * r * alpha * excess * excess) * ratio.powf(2.0 / alpha - 1.0);
        let c = r * r + d * d - ratio.powf(2.0 / alpha);
        let den = (1.0 - c * c / (4.0 * d * d * r * r)).sqrt();
        Ok(num / den)
    }

    /// Interference at the ST for a given sensor→PT / sensor→ST angle.
    pub fn at_angle(&self, theta: f64) -> f64 {
        let CidContext {
            power_p, alpha, d, ..
        } = self.ctx;
        let r = self.r1_hat;
        let sq = r * r + d * d - 2.0 * r * d * theta.cos();
        self.t_resid + power_p * sq.powf(-0.5 * alpha)
    }

    /// Exact inverse-transform draw: θ ~ U[0, π).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_point_mass() {
            return self.m;
        }
        self.at_angle(rng.random::<f64>() * PI)
    }

    /// Mean, variance and skewness by quadrature over θ, where the
    /// integrand is smooth and the endpoint singularities of the density
    /// do not appear.
    pub fn moments(&self) -> Moments {
        if self.is_point_mass() {
            return Moments {
                mean: self.m,
                variance: 0.0,
                skewness: 0.0,
                converged: true,
            };
        }
        let failed = Moments {
            mean: f64::NAN,
            variance: f64::NAN,
            skewness: f64::NAN,
            converged: false,
        };
        if !self.x_max.is_finite() {
            return failed;
        }
        // central moments of a nearly constant x(θ) sit at the rounding
        // floor of x − mean, so they get an absolute tolerance in units of x_max
        let scale = self.x_max;
        let integrate = |f: &dyn Fn(f64) -> f64, abs_tol: f64| {
            trapezoid_doubling(f, 0.0, PI, 1e-12, abs_tol, 24).map(|v| v / PI)
        };
        let Some(mean) = integrate(&|t| self.at_angle(t), 0.0) else {
            return failed;
        };
        let Some(variance) = integrate(
            &|t| (self.at_angle(t) - mean).powi(2),
            1e-15 * scale * scale,
        ) else {
            return failed;
        };
        let Some(third) = integrate(
            &|t| (self.at_angle(t) - mean).powi(3),
            1e-15 * scale.powi(3),
        ) else {
            return failed;
        };
        let skewness = if variance > 0.0 {
            third / variance.powf(1.5)
        } else {
            0.0
        };
        Moments {
            mean,
            variance,
            skewness,
            converged: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_statistic, sorted};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FIG: CidContext = CidContext {
        power_p: 1.0,
        lambda_p: 0.003,
        alpha: 4.0,
        d: 1.0,
    };

    // Reference values computed with scipy brentq / quad and mpmath
    // quadrature, independent of this module.
    const R1_REF: f64 = 3.237_643_594_600_158_3;
    const T_REF: f64 = 8.991_104_577_949_134e-4;
    const XMIN_REF: f64 = 4.000_114_190_808_509e-3;
    const XMAX_REF: f64 = 4.078_656_680_161_571_5e-2;

    fn model(m: f64) -> CidModel {
        CidModel::new(m, FIG).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn root_examples() {
        let r = solve_r1(0.01, 1.0, 0.0, 4.0).unwrap();
        assert!(rel(r, 100f64.powf(0.25)) < 1e-15);
        let r = solve_r1(0.01, 1.0, 0.003, 4.0).unwrap();
        assert!(rel(r, R1_REF) < 1e-11, "{r}");
        assert!(rel(r, r1_closed_form_alpha4(0.01, 1.0, 0.003)) < 1e-9);
        let g = r.powi(-4) + compute_t(r, 1.0, 0.003, 4.0) - 0.01;
        assert!(g.abs() < 1e-10 * 0.01);
    }

    #[test]
    fn root_rejects_non_positive_measurement() {
        assert!(matches!(
            solve_r1(0.0, 1.0, 0.003, 4.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            solve_r1(-1.0, 1.0, 0.003, 4.0),
            Err(Error::Domain(_))
        ));
        assert!(solve_r1(0.01, 1.0, 0.003, 2.0).is_err());
    }

    #[test]
    fn root_for_other_exponents() {
        for &alpha in &[2.5, 3.0, 3.5, 5.0] {
            for &m in &[1e-6, 1e-3, 0.1, 10.0] {
                let r = solve_r1(m, 0.2, 0.002, alpha).unwrap();
                let g = 0.2 * r.powf(-alpha) + compute_t(r, 0.2, 0.002, alpha) - m;
                assert!(g.abs() < 1e-10 * m, "alpha={alpha} m={m} g={g}");
            }
        }
    }

    #[test]
    fn root_decreasing_in_measurement() {
        let ms: Vec<f64> = (0..100).map(|i| 1e-4 * 1.08f64.powi(i)).collect();
        let rs: Vec<f64> = ms
            .iter()
            .map(|&m| solve_r1(m, 1.0, 0.003, 4.0).unwrap())
            .collect();
        assert!(rs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn residual_term() {
        assert_eq!(compute_t(3.0, 1.0, 0.0, 4.0), 0.0);
        assert!(rel(compute_t(R1_REF, 1.0, 0.003, 4.0), T_REF) < 1e-13);
        // annulus integral λ ∫_r̂^∞ ∫_0^2π P s^-α s dφ ds by midpoint rule in u = 1/s
        let n = 200_000;
        let mut acc = 0.0;
        for k in 0..n {
            let u = (k as f64 + 0.5) / n as f64 / R1_REF;
            // s = 1/u, ds = du/u², integrand 2πλ P s^(1-α) = 2πλ P u^(α-1)
            acc += 2.0 * PI * 0.003 * u.powi(3) / (u * u);
        }
        acc *= 1.0 / R1_REF / n as f64;
        assert!(rel(acc, T_REF) < 1e-8, "{acc}");
        let m = model(0.01);
        assert!((m.r1_hat().powi(-4) + m.t_resid() - 0.01).abs() < 1e-10);
    }

    #[test]
    fn support_examples() {
        let m = model(0.01);
        let (lo, hi) = m.support_bounds();
        assert!(rel(lo, XMIN_REF) < 1e-11);
        assert!(rel(hi, XMAX_REF) < 1e-11);
        assert!(lo < 0.01 && 0.01 < hi);

        let point = CidModel::new(0.01, CidContext { d: 0.0, ..FIG }).unwrap();
        assert_eq!(point.support_bounds(), (0.01, 0.01));
        assert_eq!(point.cdf(0.0099), 0.0);
        assert_eq!(point.cdf(0.01), 1.0);
    }

    #[test]
    fn unbounded_support_when_nearest_pt_at_offset() {
        // P r^-4 = m with λ = 0 and r = d = 1 → m = 1
        let m = CidModel::new(
            1.0,
            CidContext {
                lambda_p: 0.0,
                ..FIG
            },
        )
        .unwrap();
        assert!((m.r1_hat() - 1.0).abs() < 1e-15);
        assert_eq!(m.support_bounds().1, f64::INFINITY);
        assert!(!m.moments().converged);
        let far = m.cdf(1e9);
        assert!(far > 0.99 && far < 1.0);
    }

    #[test]
    fn nearest_within_offset_flag() {
        let m = CidModel::new(10.0, FIG).unwrap();
        assert!(m.r1_hat() < 1.0);
        assert!(m.nearest_within_offset());
        let (lo, hi) = m.support_bounds();
        assert!(lo < 10.0 && 10.0 < hi);
        assert!(!model(0.01).nearest_within_offset());
    }

    #[test]
    fn cdf_examples() {
        let m = model(0.01);
        let (lo, hi) = m.support_bounds();
        assert_eq!(m.cdf(lo), 0.0);
        assert_eq!(m.cdf(hi), 1.0);
        assert!((m.cdf(0.01) - 0.549_355_173_760_657).abs() < 1e-12);
        // Monte Carlo over θ through the law-of-cosines map (10⁶ draws)
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let (r, d) = (m.r1_hat(), 1.0);
        let hits = (0..n)
            .filter(|_| {
                let th = rng.random::<f64>() * PI;
                m.t_resid() + (r * r + d * d - 2.0 * r * d * th.cos()).powi(-2) <= 0.01
            })
            .count();
        assert!((hits as f64 / n as f64 - m.cdf(0.01)).abs() < 0.002);
        assert_eq!(m.clamp_excursions(), 0);
    }

    #[test]
    fn pdf_examples() {
        let m = model(0.01);
        let f = m.pdf(0.01).unwrap();
        assert!(rel(f, 28.653_453_513_303_724) < 1e-10, "{f}");
        let fd = (m.cdf(0.01 + 5e-5) - m.cdf(0.01 - 5e-5)) / 1e-4;
        assert!(rel(fd, 28.654_014_845_901_354) < 1e-8);
        let (lo, hi) = m.support_bounds();
        assert!(m.pdf(lo).is_err());
        assert!(m.pdf(hi).is_err());
        assert!(m.pdf(1.0).is_err());
        let near_lo = m.pdf(lo + 1e-12 * (hi - lo)).unwrap();
        let near_hi = m.pdf(hi - 1e-12 * (hi - lo)).unwrap();
        assert!(near_lo > 1e4 * f && near_hi > 1e2);
        assert_eq!(m.cdf(hi) - m.cdf(lo), 1.0);
    }

    #[test]
    fn pdf_matches_finite_differences_on_interior_grid() {
        for mm in [0.004, 0.01] {
            let m = model(mm);
            let (lo, hi) = m.support_bounds();
            let h = 1e-6 * (hi - lo);
            for k in 1..=50 {
                let x = lo + (hi - lo) * k as f64 / 51.0;
                let fd = (m.cdf(x + h) - m.cdf(x - h)) / (2.0 * h);
                let f = m.pdf(x).unwrap();
                assert!(rel(fd, f) < 1e-4, "m={mm} x={x} fd={fd} f={f}");
            }
        }
    }

    #[test]
    fn sampler_examples() {
        let m = model(0.01);
        assert!(rel(m.at_angle(PI / 2.0), 8.483_829_432_725_89e-3) < 1e-12);
        assert!(rel(m.at_angle(PI), m.support_bounds().0) < 1e-14);
        assert!(rel(m.at_angle(0.0), m.support_bounds().1) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs = sorted((0..100_000).map(|_| m.sample(&mut rng)).collect());
        let ks = ks_statistic(&xs, |x| m.cdf(x));
        assert!(ks < 0.01, "ks {ks}");
    }

    #[test]
    fn moments_match_reference_quadrature() {
        let cases = [
            (
                0.004,
                4.928_592_099_713_911_5e-3,
                9.154_389_794_182_643e-6,
                0.785_415_607_908_049_9,
            ),
            (
                0.008,
                1.099_149_853_492_647_5e-2,
                7.253_005_201_915_809e-5,
                0.952_957_687_410_949_5,
            ),
            (
                0.01,
                1.436_652_492_880_972_6e-2,
                1.430_234_028_399_903_6e-4,
                1.014_348_030_973_188_3,
            ),
        ];
        for (mm, mean, var, skew) in cases {
            let mo = model(mm).moments();
            assert!(mo.converged);
            assert!(rel(mo.mean, mean) < 1e-9, "m={mm} mean {}", mo.mean);
            assert!(rel(mo.variance, var) < 1e-8, "m={mm} var {}", mo.variance);
            assert!(rel(mo.skewness, skew) < 1e-7, "m={mm} skew {}", mo.skewness);
            assert!(mo.skewness > 0.0);
        }
        let small = CidModel::new(0.01, CidContext { d: 1e-4, ..FIG })
            .unwrap()
            .moments();
        assert!(small.variance < 1e-12, "{small:?}");
        let point = CidModel::new(0.01, CidContext { d: 0.0, ..FIG })
            .unwrap()
            .moments();
        assert_eq!(point.variance, 0.0);
    }

    #[test]
    fn measurement_is_above_median_on_reference_grid() {
        for lambda_p in [0.001, 0.003] {
            for k in 0..20 {
                let mm = 0.002 * 1.15f64.powi(k);
                let m = CidModel::new(mm, CidContext { lambda_p, ..FIG }).unwrap();
                assert!(m.cdf(mm) > 0.5, "lambda_p={lambda_p} m={mm}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cdf_monotone_with_unit_range(
                mm in 1e-4f64..1.0,
                lambda_p in 0.0f64..0.01,
                alpha in 2.2f64..6.0,
                d in 0.1f64..3.0,
                a in 0.0f64..1.0,
                b in 0.0f64..1.0,
            ) {
                let m = CidModel::new(mm, CidContext { power_p: 1.0, lambda_p, alpha, d }).unwrap();
                let (lo, hi) = m.support_bounds();
                prop_assume!(hi.is_finite());
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                let xa = lo + a * (hi - lo);
                let xb = lo + b * (hi - lo);
                let (fa, fb) = (m.cdf(xa), m.cdf(xb));
                prop_assert!(fa <= fb + 1e-15);
                prop_assert!((0.0..=1.0).contains(&fa) && (0.0..=1.0).contains(&fb));
                prop_assert_eq!(m.cdf(lo), 0.0);
                prop_assert_eq!(m.cdf(hi), 1.0);
                prop_assert_eq!(m.clamp_excursions(), 0);
            }

            #[test]
            fn sampler_inverts_cdf(
                mm in 1e-4f64..1.0,
                lambda_p in 0.0f64..0.01,
                u in 0.001f64..0.999,
            ) {
                let m = CidModel::new(mm, CidContext { lambda_p, ..FIG }).unwrap();
                prop_assume!(m.support_bounds().1.is_finite());
                // F(x(θ)) = 1 − θ/π
                let theta = u * PI;
                let f = m.cdf(m.at_angle(theta));
                prop_assert!((f - (1.0 - u)).abs() < 1e-6, "f={} u={}", f, u);
            }
        }
    }
}
