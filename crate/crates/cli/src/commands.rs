//! One function per experiment, each returning the complete data file.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use cra_core::analytics::{ase_closed_form, primary_outage, ClosedFormInputs};
use cra_core::cid::{CidContext, CidModel};
use cra_core::engine::{
    estimate_mean_weight, estimate_metrics, paired_ase_difference, run_experiment,
    validate_cid_empirical, Experiment, SeedPolicy, SnapshotRecord, ValidationSpec,
};
use cra_core::model::NetworkSnapshot;
use cra_core::RadioParams;

use crate::config::{ExperimentConfig, ExperimentKind, MeanWeightName, PolicyName};

/// Formats a float so that it parses back to the same value.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn header(cfg: &ExperimentConfig, derived: &[(&str, f64)]) -> String {
    let mut out = String::from("# # cognitive random access experiment\n");
    for line in cfg.to_toml().lines() {
        let _ = writeln!(out, "# {line}");
    }
    if !derived.is_empty() {
        out.push_str("# ---\n");
        for (k, v) in derived {
            let _ = writeln!(out, "# {k} = {}", num(*v));
        }
    }
    out
}

fn cid_context(params: &RadioParams) -> CidContext {
    CidContext {
        power_p: params.power_p,
        lambda_p: params.lambda_p,
        alpha: params.alpha,
        d: params.d,
    }
}

pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<String> {
    match cfg.experiment {
        ExperimentKind::CidDump => cid_dump(cfg),
        ExperimentKind::ValidateCid => validate_cid(cfg, threads),
        ExperimentKind::AseSweepLambdaS | ExperimentKind::AseSweepLambdaP => {
            ase_sweep(cfg, threads)
        }
        ExperimentKind::SnapshotDump => snapshot_dump(cfg),
    }
}

/// `x_watts,pdf,cdf` over the interior of the support, from 0.1% to 99.9%
/// of the way between its endpoints.
pub fn cid_dump(cfg: &ExperimentConfig) -> Result<String> {
    let params = cfg.radio_params();
    let model = CidModel::new(cfg.m, cid_context(&params))?;
    let (x_min, x_max) = model.support_bounds();
    if !x_max.is_finite() {
        bail!("support is unbounded (nearest PT at the ST itself); choose a different d or m");
    }
    let moments = model.moments();
    let mut out = header(
        cfg,
        &[
            ("r1_hat", model.r1_hat()),
            ("t", model.t_resid()),
            ("x_min", x_min),
            ("x_max", x_max),
            ("mean", moments.mean),
            ("variance", moments.variance),
            ("skewness", moments.skewness),
        ],
    );
    out.push_str("x_watts,pdf,cdf\n");
    let n = cfg.grid_points;
    for k in 0..n {
        let frac = 0.001 + 0.998 * k as f64 / (n - 1) as f64;
        let x = x_min + frac * (x_max - x_min);
        let pdf = model.pdf(x)?;
        let _ = writeln!(out, "{},{},{}", num(x), num(pdf), num(model.cdf(x)));
    }
    Ok(out)
}

/// Histogram of rejection-conditioned interference against the CID.
pub fn validate_cid(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<String> {
    let params = cfg.radio_params();
    let spec = ValidationSpec {
        m: cfg.m,
        band: cfg.band,
        ctx: cid_context(&params),
        n_target: cfg.n_target,
        bins: cfg.bins,
    };
    let v = validate_cid_empirical(&spec, SeedPolicy::new(cfg.master_seed), threads)?;
    let analytic = v.model.moments();
    let mut out = header(
        cfg,
        &[
            ("r1_hat", v.model.r1_hat()),
            ("t", v.model.t_resid()),
            ("field_radius", v.field_radius),
        ],
    );
    out.push_str("bin_center,empirical_density,analytic_density\n");
    for b in &v.histogram {
        let _ = writeln!(
            out,
            "{},{},{}",
            num(b.center),
            num(b.empirical_density),
            num(b.analytic_density)
        );
    }
    for (k, val) in [
        ("ks", v.ks),
        ("acceptance_rate", v.acceptance_rate),
        ("accepted", v.samples.len() as f64),
        ("tries", v.tries as f64),
        ("mode", v.mode),
        ("empirical_mean", v.empirical.mean),
        ("analytic_mean", analytic.mean),
        ("empirical_variance", v.empirical.variance),
        ("analytic_variance", analytic.variance),
        ("empirical_skewness", v.empirical.skewness),
        ("analytic_skewness", analytic.skewness),
    ] {
        let _ = writeln!(out, "# {k} = {}", num(val));
    }
    Ok(out)
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "sweep_value",
    "ase_cid",
    "ase_aloha",
    "ase_threshold",
    "ase_closed_form",
    "outage_cid",
    "outage_target",
    "se_ase_cid",
    "se_ase_aloha",
    "se_ase_threshold",
    "se_outage_cid",
    "tau",
    "diff_cid_aloha",
    "se_diff_cid_aloha",
    "diff_cid_threshold",
    "se_diff_cid_threshold",
    "outage_aloha",
    "outage_threshold",
    "outage_closed_form",
    "p_star",
    "mean_p_cid",
    "clip_fraction_cid",
    "success_cid",
];

const POLICIES: [PolicyName; 3] = [PolicyName::Cid, PolicyName::Aloha, PolicyName::Threshold];

/// Runs all three policies on common random numbers at every
/// `(tau, sweep_value)` pair.
pub fn ase_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<String> {
    let mut cfg = cfg.clone();
    cfg.resolve();
    if cfg.grid.is_empty() || cfg.taus.is_empty() {
        bail!("sweep grid is empty");
    }
    let seed = SeedPolicy::new(cfg.master_seed);
    let mut out = header(&cfg, &[]);
    out.push_str(&SWEEP_COLUMNS.join(","));
    out.push('\n');

    for &tau in &cfg.taus {
        for &value in &cfg.grid {
            let mut params = cfg.radio_params();
            params.tau = tau;
            match cfg.experiment {
                ExperimentKind::AseSweepLambdaS => params.lambda_s = value,
                _ => params.lambda_p = value,
            }
            params.validate()?;
            let fixed_weight = match cfg.cid_mean_weight {
                MeanWeightName::Fixed if params.lambda_s > 0.0 => Some(estimate_mean_weight(
                    &params,
                    cfg.mean_weight_samples,
                    seed,
                )?),
                _ => None,
            };
            let exp = Experiment {
                params: params.clone(),
                policies: POLICIES
                    .iter()
                    .map(|&p| cfg.policy_kind(p, fixed_weight))
                    .collect(),
                p_star_form: cfg.p_star_form(),
                fading: cfg.fading_model(),
            };
            let p_star = exp.p_star()?;
            log::info!(
                "tau={tau} value={value}: p*={p_star}, {} snapshots",
                cfg.snapshots
            );
            let records = run_experiment(&exp, cfg.snapshots, seed, threads)
                .with_context(|| format!("simulating sweep point {value} at tau {tau}"))?;
            let cols: Vec<_> = (0..POLICIES.len())
                .map(|k| SnapshotRecord::column(&records, k))
                .collect();
            let est: Vec<_> = cols
                .iter()
                .map(|c| estimate_metrics(c, &params))
                .collect::<cra_core::Result<_>>()?;
            let d_aloha = paired_ase_difference(&cols[0], &cols[1], &params)?;
            let d_threshold = paired_ase_difference(&cols[0], &cols[2], &params)?;
            let inputs = ClosedFormInputs::new(&params, p_star)?;
            let row = [
                value,
                est[0].ase.value,
                est[1].ase.value,
                est[2].ase.value,
                ase_closed_form(&inputs)?,
                est[0].primary_outage.value,
                tau,
                est[0].ase.se,
                est[1].ase.se,
                est[2].ase.se,
                est[0].primary_outage.se,
                tau,
                d_aloha.value,
                d_aloha.se,
                d_threshold.value,
                d_threshold.se,
                est[1].primary_outage.value,
                est[2].primary_outage.value,
                primary_outage(&inputs)?,
                p_star,
                est[0].mean_assigned_p,
                est[0].clip_fraction,
                est[0].secondary_success,
            ];
            let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
    }
    Ok(out)
}

/// Positions of one realisation with the selected policy's probabilities.
pub fn snapshot_dump(cfg: &ExperimentConfig) -> Result<String> {
    let params = cfg.radio_params();
    let seed = SeedPolicy::new(cfg.master_seed);
    let mut rng = seed.rng(0);
    let snap = NetworkSnapshot::sample(&params, cfg.fading_model(), &mut rng);
    let measurements = snap.sensor_measurements(&params)?;
    let fixed_weight = match (cfg.policy, cfg.cid_mean_weight) {
        (PolicyName::Cid, MeanWeightName::Fixed) if params.lambda_s > 0.0 => Some(
            estimate_mean_weight(&params, cfg.mean_weight_samples, seed)?,
        ),
        _ => None,
    };
    let exp = Experiment {
        params: params.clone(),
        policies: vec![cfg.policy_kind(cfg.policy, fixed_weight)],
        p_star_form: cfg.p_star_form(),
        fading: cfg.fading_model(),
    };
    let p_star = exp.p_star()?;
    let assignment = exp.policies[0].assign(&measurements, &params, p_star)?;

    let mut out = header(
        cfg,
        &[
            ("p_star", p_star),
            ("mean_assigned_p", assignment.mean_prob()),
        ],
    );
    out.push_str("kind,x,y,prob\n");
    for p in &snap.pts {
        let _ = writeln!(out, "pt,{},{},", num(p.x), num(p.y));
    }
    for (s, prob) in snap.sts.iter().zip(&assignment.probs) {
        let _ = writeln!(out, "st,{},{},{}", num(s.x), num(s.y), num(*prob));
    }
    for s in &snap.sensors {
        let _ = writeln!(out, "sensor,{},{},", num(s.x), num(s.y));
    }
    Ok(out)
}
