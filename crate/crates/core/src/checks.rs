//! Named end-to-end verification experiments.
//!
//! Each check builds its ensembles from a master seed (deterministic under
//! any thread count), runs one statistical decision and returns
//! [`VerificationReport`]s. The CLI `verify`/`lil`/`limit` subcommands and
//! the acceptance suite both drive these functions.

use crate::error::{Error, Result};
use crate::functional::{
    functional, rate_regression, residual_series, ResidualSeries, TestFunction,
};
use crate::localtime::{
    additivity_check, default_bandwidth, default_level_grid, holder_running_sup, local_time_curve,
    local_time_field, sup_diff_stats, EstimatorKind,
};
use crate::process::{rl_scheme_variance, PreparedSampler, ProcessKind, ProcessSpec, SamplerKind};
use crate::rng::{par_map_replicates, substream_seed};
use crate::stats::{linear_fit, variance};
use crate::verify::{
    first_order_limit_test, ks_equality_report, lil_statistic, scaling_test, Decision,
    FirstOrderParams, VerificationReport,
};

/// Default Holder exponent: half of the open upper bound (1 - tau)/(2 tau).
pub fn default_nu(tau: f64) -> f64 {
    (1.0 - tau) / (4.0 * tau)
}

/// Experiment-level knobs shared by the named checks.
#[derive(Debug, Clone)]
pub struct RunParams {
    pub spec: ProcessSpec,
    pub function: TestFunction,
    pub replicates: usize,
    pub master_seed: u64,
    pub lambda_ladder: Vec<f64>,
    pub ks_level: f64,
}

/// Names accepted by [`run_named_check`].
pub const CHECK_NAMES: &[&str] = &[
    "covariance_fidelity",
    "sampler_equivalence",
    "self_similarity",
    "stationary_increments",
    "brownian_cross_process",
    "occupation_density",
    "additivity",
    "scaling_local_time",
    "scaling_local_time_power_check",
    "scaling_sup_diff",
    "scaling_holder_sup",
    "translation",
    "translation_negative_control",
    "first_order_limit",
    "strong_approx_rate",
    "lil",
    "holder_time_moment",
    "holder_bivariate_moment",
];

/// Run one named check with parameters derived from the experiment config.
pub fn run_named_check(name: &str, p: &RunParams) -> Result<Vec<VerificationReport>> {
    let seed = p.master_seed;
    let level = p.ks_level;
    let lambdas: Vec<f64> = p
        .lambda_ladder
        .iter()
        .cloned()
        .filter(|&l| l > 1.0)
        .collect();
    let lambdas = if lambdas.is_empty() {
        vec![4.0, 16.0]
    } else {
        lambdas
    };
    match name {
        "covariance_fidelity" => Ok(vec![covariance_fidelity(&p.spec, p.replicates, seed)?]),
        "sampler_equivalence" => sampler_equivalence(&p.spec, p.replicates, seed, level),
        "self_similarity" => [2.0, 4.0]
            .iter()
            .map(|&a| self_similarity(&p.spec, a, p.replicates, seed, level))
            .collect(),
        "stationary_increments" => Ok(vec![stationary_increments(
            &p.spec,
            p.replicates,
            seed,
            level,
        )?]),
        "brownian_cross_process" => Ok(vec![brownian_cross_process(
            p.spec.horizon,
            p.spec.n_steps,
            p.replicates,
            seed,
            level,
        )?]),
        "occupation_density" => Ok(vec![occupation_density(
            &p.spec,
            &p.function,
            p.replicates.clamp(20, 200),
            seed,
        )?]),
        "additivity" => Ok(vec![additivity(&p.spec, p.replicates.clamp(8, 64), seed)?]),
        "scaling_local_time" => lambdas
            .iter()
            .map(|&l| scaling_local_time(&p.spec, l, p.replicates, seed, level, 0.0))
            .collect(),
        "scaling_local_time_power_check" => lambdas
            .iter()
            .map(|&l| scaling_power_check(&p.spec, l, p.replicates, seed, level))
            .collect(),
        "scaling_sup_diff" => lambdas
            .iter()
            .map(|&l| scaling_sup_diff(&p.spec, l, p.replicates, seed, level, 0.0))
            .collect(),
        "scaling_holder_sup" => lambdas
            .iter()
            .map(|&l| {
                scaling_holder_sup(
                    &p.spec,
                    l,
                    default_nu(p.spec.tau),
                    p.replicates,
                    seed,
                    level,
                    0.0,
                )
            })
            .collect(),
        "translation" => Ok(vec![translation(&p.spec, 5.0, p.replicates, seed, level)?]),
        "translation_negative_control" => Ok(vec![translation_negative_control(
            &p.spec,
            5.0,
            p.replicates,
            seed,
            level,
        )?]),
        "first_order_limit" => {
            let params = FirstOrderParams {
                kind: p.spec.kind,
                tau: p.spec.tau,
                n_steps_base: 512,
                replicates: p.replicates,
                master_seed: seed,
                distance_threshold: 0.05,
            };
            let ladder = if p.lambda_ladder.len() >= 2 {
                p.lambda_ladder.clone()
            } else {
                vec![1.0, 4.0, 16.0, 64.0]
            };
            Ok(vec![first_order_limit_test(&params, &p.function, &ladder)?])
        }
        "strong_approx_rate" => Ok(vec![strong_approx_rate(
            p.spec.kind,
            p.spec.tau,
            &p.function,
            p.replicates.clamp(50, 400),
            seed,
        )?]),
        "lil" => lil_checks(
            p.spec.kind,
            p.spec.tau,
            &p.function,
            p.replicates.clamp(50, 400),
            seed,
        ),
        "holder_time_moment" => Ok(vec![holder_time_moment(
            &p.spec,
            p.replicates.clamp(100, 1000),
            seed,
        )?]),
        "holder_bivariate_moment" => Ok(vec![holder_bivariate_moment(
            &p.spec,
            default_nu(p.spec.tau),
            p.replicates.clamp(100, 1000),
            seed,
        )?]),
        other => Err(Error::invalid(format!(
            "unknown check '{other}'; registered checks: {}",
            CHECK_NAMES.join(", ")
        ))),
    }
}

fn report(
    name: impl Into<String>,
    statistic: f64,
    threshold: f64,
    pass: bool,
    n: usize,
) -> VerificationReport {
    VerificationReport {
        name: name.into(),
        statistic,
        threshold,
        decision: if pass { Decision::Pass } else { Decision::Fail },
        p_value: None,
        n_replicates: n,
        metadata: Vec::new(),
    }
}

/// Endpoint marginals of an ensemble, one value per replicate.
fn endpoint_ensemble(spec: &ProcessSpec, replicates: usize, master_seed: u64) -> Result<Vec<f64>> {
    let sampler = PreparedSampler::new(spec)?;
    Ok(par_map_replicates(replicates, master_seed, |seed| {
        let path = sampler.sample(seed);
        *path.values.last().unwrap()
    }))
}

/// Sample variance of the endpoint marginal against the analytic value.
///
/// Tolerance is three Monte Carlo standard errors of a Gaussian variance
/// estimate plus, for the kernel scheme, the exact difference between the
/// scheme variance and the analytic one.
pub fn covariance_fidelity(
    spec: &ProcessSpec,
    replicates: usize,
    master_seed: u64,
) -> Result<VerificationReport> {
    let values = endpoint_ensemble(spec, replicates, substream_seed(master_seed, 0xC0F1D))?;
    let sample_var = variance(&values);
    let t = spec.horizon;
    let analytic = match spec.kind {
        ProcessKind::Fbm => t.powf(2.0 * spec.tau),
        ProcessKind::Rl => t.powf(2.0 * spec.tau) / (2.0 * spec.tau),
    };
    let se = analytic * (2.0 / (replicates as f64 - 1.0)).sqrt();
    let discretization = match spec.sampler {
        SamplerKind::KernelConv => (rl_scheme_variance(spec, spec.n_steps) - analytic).abs(),
        _ => 0.0,
    };
    let threshold = 3.0 * se + discretization;
    let statistic = (sample_var - analytic).abs();
    Ok(report(
        format!("covariance_fidelity_{}_{}", spec.kind.as_str(), spec.tau),
        statistic,
        threshold,
        statistic <= threshold,
        replicates,
    )
    .with_meta("sample_variance", sample_var)
    .with_meta("analytic_variance", analytic)
    .with_meta("discretization_bound", discretization))
}

/// KS equality of the Cholesky and circulant fBm marginals at T/4, T/2, T.
///
/// The comparison grid is capped at 1024 steps: the marginals are exact in
/// distribution at any resolution and the Cholesky factorization is cubic.
pub fn sampler_equivalence(
    spec: &ProcessSpec,
    replicates: usize,
    master_seed: u64,
    level: f64,
) -> Result<Vec<VerificationReport>> {
    if spec.kind != ProcessKind::Fbm {
        return Err(Error::invalid(
            "sampler equivalence compares the fBm samplers",
        ));
    }
    let mut spec = *spec;
    if spec.n_steps > 1024 {
        spec.n_steps = 1024;
    }
    let spec = &spec;
    if !spec.n_steps.is_multiple_of(4) {
        return Err(Error::invalid(
            "sampler equivalence needs n_steps divisible by 4",
        ));
    }
    let chol = PreparedSampler::cholesky(spec)?;
    let circ = PreparedSampler::circulant(spec)?;
    let n = spec.n_steps;
    let marks = [n / 4, n / 2, n];

    let chol_paths: Vec<[f64; 3]> =
        par_map_replicates(replicates, substream_seed(master_seed, 0xC401), |seed| {
            let p = chol.sample(seed);
            [p.values[marks[0]], p.values[marks[1]], p.values[marks[2]]]
        });
    let circ_paths: Vec<[f64; 3]> =
        par_map_replicates(replicates, substream_seed(master_seed, 0xC402), |seed| {
            let p = circ.sample(seed);
            [p.values[marks[0]], p.values[marks[1]], p.values[marks[2]]]
        });

    let mut out = Vec::with_capacity(3);
    for (j, &mark) in marks.iter().enumerate() {
        let a: Vec<f64> = chol_paths.iter().map(|v| v[j]).collect();
        let b: Vec<f64> = circ_paths.iter().map(|v| v[j]).collect();
        let t = spec.horizon * mark as f64 / n as f64;
        out.push(
            ks_equality_report(&format!("sampler_equivalence_t{t}"), &a, &b, level)?
                .with_meta("t", t),
        );
    }
    Ok(out)
}

/// Self-similarity: X(aT) against a^tau X(T) by KS on endpoint marginals.
pub fn self_similarity(
    spec: &ProcessSpec,
    a: f64,
    replicates: usize,
    master_seed: u64,
    level: f64,
) -> Result<VerificationReport> {
    let unit = endpoint_ensemble(spec, replicates, substream_seed(master_seed, 0x5E1F))?;
    let mut stretched = *spec;
    stretched.horizon = spec.horizon * a;
    let long = endpoint_ensemble(&stretched, replicates, substream_seed(master_seed, 0x5E2F))?;
    let scaled: Vec<f64> = unit.iter().map(|v| v * a.powf(spec.tau)).collect();
    Ok(
        ks_equality_report(&format!("self_similarity_a{a}"), &scaled, &long, level)?
            .with_meta("a", a),
    )
}

/// Stationary increments of fBm: X(T) - X(T/2) against a fresh X(T/2).
pub fn stationary_increments(
    spec: &ProcessSpec,
    replicates: usize,
    master_seed: u64,
    level: f64,
) -> Result<VerificationReport> {
    if spec.kind != ProcessKind::Fbm {
        return Err(Error::invalid("stationary increments hold for fBm only"));
    }
    if !spec.n_steps.is_multiple_of(2) {
        return Err(Error::invalid(
            "stationary increments check needs even n_steps",
        ));
    }
    let sampler = PreparedSampler::new(spec)?;
    let n = spec.n_steps;
    let increments: Vec<f64> =
        par_map_replicates(replicates, substream_seed(master_seed, 0x57A1), |seed| {
            let p = sampler.sample(seed);
            p.values[n] - p.values[n / 2]
        });
    let mut half_spec = *spec;
    half_spec.horizon = spec.horizon / 2.0;
    let fresh = endpoint_ensemble(&half_spec, replicates, substream_seed(master_seed, 0x57A2))?;
    ks_equality_report("stationary_increments", &increments, &fresh, level)
}

/// H = 1/2 fBm and beta = 1/2 RL are the same process (Brownian motion).
pub fn brownian_cross_process(
    horizon: f64,
    n_steps: usize,
    replicates: usize,
    master_seed: u64,
    level: f64,
) -> Result<VerificationReport> {
    let fbm = ProcessSpec::new(
        ProcessKind::Fbm,
        0.5,
        horizon,
        n_steps,
        SamplerKind::Circulant,
    )?;
    let rl = ProcessSpec::new(
        ProcessKind::Rl,
        0.5,
        horizon,
        n_steps,
        SamplerKind::KernelConv,
    )?;
    let a = endpoint_ensemble(&fbm, replicates, substream_seed(master_seed, 0xB401))?;
    let b = endpoint_ensemble(&rl, replicates, substream_seed(master_seed, 0xB402))?;
    ks_equality_report("brownian_cross_process", &a, &b, level)
}

/// Occupation-density closure: | int f(X) ds - sum_x f(x) L(x,1) dx |
/// relative to int |f(X)| ds, averaged over paths. PASS at 2%.
pub fn occupation_density(
    spec: &ProcessSpec,
    f: &TestFunction,
    n_paths: usize,
    master_seed: u64,
) -> Result<VerificationReport> {
    let sampler = PreparedSampler::new(spec)?;
    let t = spec.horizon;
    let f = f.clone();
    let errors: Vec<f64> =
        par_map_replicates(n_paths, substream_seed(master_seed, 0x0CC), |seed| {
            let path = sampler.sample(seed);
            let eps = default_bandwidth(&path);
            let x_grid = default_level_grid(&path, eps);
            let field = local_time_field(&path, &x_grid, &[t], EstimatorKind::EpsOccupation, eps)
                .expect("field");
            let dx = x_grid[1] - x_grid[0];
            let via_field: f64 = x_grid
                .iter()
                .enumerate()
                .map(|(j, &x)| f.eval(x) * field.value(j, 0) * dx)
                .sum();
            let direct = functional(&path, &f, t).expect("functional");
            let abs_norm =
                crate::localtime::weighted_window_sum(&path, 0.0, t, &mut |v| f.eval(v).abs())
                    .expect("norm");
            (direct - via_field).abs() / abs_norm.max(1e-12)
        });
    let statistic = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok(report(
        "occupation_density",
        statistic,
        0.02,
        statistic <= 0.02,
        n_paths,
    ))
}

/// Additivity of local time over a split at a grid time: the two sides of
/// the identity differ by at most one boundary cell, dt / (2 eps), with no
/// further tolerance.
pub fn additivity(
    spec: &ProcessSpec,
    n_paths: usize,
    master_seed: u64,
) -> Result<VerificationReport> {
    if !spec.n_steps.is_multiple_of(4) {
        return Err(Error::invalid(
            "additivity check needs n_steps divisible by 4",
        ));
    }
    let sampler = PreparedSampler::new(spec)?;
    let t = spec.horizon;
    let splits = [0.0, t / 4.0, t / 2.0, t];
    let worst: Vec<f64> = par_map_replicates(n_paths, substream_seed(master_seed, 0xADD), |seed| {
        let path = sampler.sample(seed);
        let eps = default_bandwidth(&path);
        let bound = path.dt() / (2.0 * eps);
        let mut worst: f64 = 0.0;
        for &s in &splits {
            let (lhs, rhs) = additivity_check(&path, 0.0, s, t, eps).expect("additivity");
            worst = worst.max((lhs - rhs).abs() / bound);
        }
        worst
    });
    let statistic = worst.iter().cloned().fold(0.0, f64::max);
    Ok(
        report("additivity", statistic, 1.0, statistic <= 1.0, n_paths)
            .with_meta("splits", format!("{splits:?}")),
    )
}

/// Ensemble of L(0, T) over fresh paths.
fn local_time_ensemble(
    spec: &ProcessSpec,
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    let sampler = PreparedSampler::new(spec)?;
    let t = spec.horizon;
    Ok(par_map_replicates(replicates, master_seed, |seed| {
        let path = sampler.sample(seed);
        let eps = default_bandwidth(&path);
        local_time_curve(&path, 0.0, &[t], eps).expect("local time")[0]
    }))
}

/// Scaling law for local time at the origin:
/// L(0, T) against lambda^(tau - 1) L(0, lambda T).
///
/// Both ensembles use the same step count, so the discrete estimators map
/// onto each other exactly under the scaling and the comparison is sharp.
/// `exponent_shift` perturbs the exponent for power checks.
pub fn scaling_local_time(
    spec: &ProcessSpec,
    lambda: f64,
    replicates: usize,
    master_seed: u64,
    level: f64,
    exponent_shift: f64,
) -> Result<VerificationReport> {
    let unit = local_time_ensemble(spec, replicates, substream_seed(master_seed, 0xE101))?;
    let mut long = *spec;
    long.horizon = spec.horizon * lambda;
    let at_lambda = local_time_ensemble(&long, replicates, substream_seed(master_seed, 0xE102))?;
    let exponent = spec.tau - 1.0 + exponent_shift;
    let name = if exponent_shift == 0.0 {
        format!("scaling_local_time_lambda{lambda}")
    } else {
        format!("scaling_local_time_perturbed_lambda{lambda}")
    };
    scaling_test(&name, &unit, &at_lambda, lambda, exponent, level)
}

/// Power check: the deliberately wrong exponent (tau - 1 replaced by tau)
/// must be rejected. PASS means the KS test rejected the perturbed law.
pub fn scaling_power_check(
    spec: &ProcessSpec,
    lambda: f64,
    replicates: usize,
    master_seed: u64,
    level: f64,
) -> Result<VerificationReport> {
    let wrong = scaling_local_time(spec, lambda, replicates, master_seed, level, 1.0)?;
    let rejected = wrong.decision == Decision::Fail;
    let mut rep = report(
        format!("scaling_local_time_power_check_lambda{lambda}"),
        wrong.statistic,
        level,
        rejected,
        replicates,
    );
    rep.p_value = wrong.p_value;
    Ok(rep.with_meta("note", "PASS means the wrong exponent was rejected"))
}

/// Ensemble of K(T) = sup-pair |L(x,T) - L(y,T)| over fresh paths.
fn sup_diff_ensemble(
    spec: &ProcessSpec,
    nu: f64,
    replicates: usize,
    master_seed: u64,
    shift_z: f64,
) -> Result<Vec<(f64, f64)>> {
    let sampler = PreparedSampler::new(spec)?;
    let t = spec.horizon;
    Ok(par_map_replicates(replicates, master_seed, |seed| {
        let mut path = sampler.sample(seed);
        if shift_z != 0.0 {
            path = path.translate(shift_z);
        }
        let eps = default_bandwidth(&path);
        let x_grid = default_level_grid(&path, eps);
        let field = local_time_field(&path, &x_grid, &[t], EstimatorKind::EpsOccupation, eps)
            .expect("field");
        sup_diff_stats(&field, t, nu).expect("sup stats")
    }))
}

/// Scaling law for the sup difference (Prop with K):
/// K(T) against lambda^(tau - 1) K(lambda T).
pub fn scaling_sup_diff(
    spec: &ProcessSpec,
    lambda: f64,
    replicates: usize,
    master_seed: u64,
    level: f64,
    exponent_shift: f64,
) -> Result<VerificationReport> {
    let nu = default_nu(spec.tau);
    let unit: Vec<f64> = sup_diff_ensemble(
        spec,
        nu,
        replicates,
        substream_seed(master_seed, 0xE501),
        0.0,
    )?
    .iter()
    .map(|&(_, k)| k)
    .collect();
    let mut long = *spec;
    long.horizon = spec.horizon * lambda;
    let at_lambda: Vec<f64> = sup_diff_ensemble(
        &long,
        nu,
        replicates,
        substream_seed(master_seed, 0xE502),
        0.0,
    )?
    .iter()
    .map(|&(_, k)| k)
    .collect();
    let exponent = spec.tau - 1.0 + exponent_shift;
    let name = if exponent_shift == 0.0 {
        format!("scaling_sup_diff_lambda{lambda}")
    } else {
        format!("scaling_sup_diff_perturbed_lambda{lambda}")
    };
    scaling_test(&name, &unit, &at_lambda, lambda, exponent, level)
}

/// Ensemble of the running-sup Holder statistic Y(T).
fn holder_sup_ensemble(
    spec: &ProcessSpec,
    gamma: f64,
    snapshots: usize,
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if !spec.n_steps.is_multiple_of(snapshots) {
        return Err(Error::invalid("snapshot count must divide n_steps"));
    }
    let sampler = PreparedSampler::new(spec)?;
    let t = spec.horizon;
    let t_grid: Vec<f64> = (1..=snapshots)
        .map(|j| j as f64 * spec.horizon / snapshots as f64)
        .collect();
    Ok(par_map_replicates(replicates, master_seed, |seed| {
        let path = sampler.sample(seed);
        let eps = default_bandwidth(&path);
        let x_grid = default_level_grid(&path, eps);
        let field = local_time_field(&path, &x_grid, &t_grid, EstimatorKind::EpsOccupation, eps)
            .expect("field");
        holder_running_sup(&field, gamma, t).expect("running sup")
    }))
}

/// Scaling law for the running-sup Holder quotient:
/// Y(T) against lambda^(-1 + tau (1 + gamma)) Y(lambda T).
pub fn scaling_holder_sup(
    spec: &ProcessSpec,
    lambda: f64,
    gamma: f64,
    replicates: usize,
    master_seed: u64,
    level: f64,
    exponent_shift: f64,
) -> Result<VerificationReport> {
    const SNAPSHOTS: usize = 32;
    let unit = holder_sup_ensemble(
        spec,
        gamma,
        SNAPSHOTS,
        replicates,
        substream_seed(master_seed, 0xE601),
    )?;
    let mut long = *spec;
    long.horizon = spec.horizon * lambda;
    let at_lambda = holder_sup_ensemble(
        &long,
        gamma,
        SNAPSHOTS,
        replicates,
        substream_seed(master_seed, 0xE602),
    )?;
    let exponent = spec.tau * (1.0 + gamma) - 1.0 + exponent_shift;
    let name = if exponent_shift == 0.0 {
        format!("scaling_holder_sup_lambda{lambda}")
    } else {
        format!("scaling_holder_sup_perturbed_lambda{lambda}")
    };
    Ok(scaling_test(&name, &unit, &at_lambda, lambda, exponent, level)?.with_meta("gamma", gamma))
}

/// Translation invariance of Z(T): paths started at 0 against paths
/// shifted by z. The law of the sup-difference quotient does not depend
/// on the starting level.
pub fn translation(
    spec: &ProcessSpec,
    z: f64,
    replicates: usize,
    master_seed: u64,
    level: f64,
) -> Result<VerificationReport> {
    let nu = default_nu(spec.tau);
    let at_0: Vec<f64> = sup_diff_ensemble(
        spec,
        nu,
        replicates,
        substream_seed(master_seed, 0x7201),
        0.0,
    )?
    .iter()
    .map(|&(zst, _)| zst)
    .collect();
    let at_z: Vec<f64> =
        sup_diff_ensemble(spec, nu, replicates, substream_seed(master_seed, 0x7202), z)?
            .iter()
            .map(|&(zst, _)| zst)
            .collect();
    Ok(
        crate::verify::translation_test(&format!("translation_z{z}"), &at_0, &at_z, z, level)?
            .with_meta("nu", nu),
    )
}

/// Negative control: L(0, T) is NOT translation invariant, so the same
/// comparison on the local time at the origin must be rejected. PASS
/// means the test rejected equality.
pub fn translation_negative_control(
    spec: &ProcessSpec,
    z: f64,
    replicates: usize,
    master_seed: u64,
    level: f64,
) -> Result<VerificationReport> {
    let sampler = PreparedSampler::new(spec)?;
    let t = spec.horizon;
    let ens = |tag: u64, shift: f64| -> Vec<f64> {
        par_map_replicates(replicates, substream_seed(master_seed, tag), |seed| {
            let path = sampler.sample(seed).translate(shift);
            let eps = default_bandwidth(&path);
            local_time_curve(&path, 0.0, &[t], eps).expect("local time")[0]
        })
    };
    let at_0 = ens(0x7203, 0.0);
    let at_z = ens(0x7204, z);
    let inner = ks_equality_report("translation_negative_inner", &at_0, &at_z, level)?;
    let rejected = inner.decision == Decision::Fail;
    let mut rep = report(
        format!("translation_negative_control_z{z}"),
        inner.statistic,
        level,
        rejected,
        replicates,
    );
    rep.p_value = inner.p_value;
    Ok(rep.with_meta(
        "note",
        "PASS means L(0,T) translation invariance was rejected",
    ))
}

/// Grid times approximately log-spaced in [lo, hi], snapped to the path
/// grid and deduplicated.
pub fn log_spaced_grid_times(spec: &ProcessSpec, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let dt = spec.dt();
    let n = spec.n_steps;
    let mut out: Vec<f64> = Vec::with_capacity(count);
    let mut last_idx = 0usize;
    for j in 0..count {
        let t = lo * (hi / lo).powf(j as f64 / (count - 1) as f64);
        let idx = ((t / dt).round() as usize).clamp(1, n);
        if idx > last_idx {
            out.push(idx as f64 * spec.horizon / n as f64);
            last_idx = idx;
        }
    }
    out
}

/// Strong-approximation rate: the 0.9-quantile envelope of |J(t)| must
/// grow strictly slower than t^(1 - tau), asserted through the bootstrap
/// 95% upper bound of the log-log slope. Also returns the residual
/// ensemble for serialization.
pub fn strong_approx_rate_with_series(
    kind: ProcessKind,
    tau: f64,
    f: &TestFunction,
    replicates: usize,
    master_seed: u64,
) -> Result<(VerificationReport, Vec<ResidualSeries>)> {
    let horizon = 1000.0;
    let n_steps = 1 << 15;
    let sampler_kind = match kind {
        ProcessKind::Fbm => SamplerKind::Circulant,
        ProcessKind::Rl => SamplerKind::KernelConv,
    };
    let spec = ProcessSpec::new(kind, tau, horizon, n_steps, sampler_kind)?;
    let window = (10.0, 1000.0);
    let t_grid = log_spaced_grid_times(&spec, 1.0, horizon, 30);
    let sampler = PreparedSampler::new(&spec)?;
    let f_owned = f.clone();
    let t_grid_ref = &t_grid;
    let series: Vec<ResidualSeries> =
        par_map_replicates(replicates, substream_seed(master_seed, 0x5A7E), |seed| {
            let path = sampler.sample(seed);
            let eps = default_bandwidth(&path);
            residual_series(&path, &f_owned, t_grid_ref, eps).expect("residual")
        });
    let fit = rate_regression(&series, window, substream_seed(master_seed, 0xB007))?;
    let threshold = 1.0 - tau;
    let pass = fit.ci_hi < threshold;
    let rep = report(
        format!("strong_approx_rate_{}_{tau}", kind.as_str()),
        fit.slope,
        threshold,
        pass,
        replicates,
    )
    .with_meta("ci_lo", fit.ci_lo)
    .with_meta("ci_hi", fit.ci_hi)
    .with_meta("fit_window", format!("[{}, {}]", window.0, window.1))
    .with_meta("n_points", fit.n_points);
    Ok((rep, series))
}

pub fn strong_approx_rate(
    kind: ProcessKind,
    tau: f64,
    f: &TestFunction,
    replicates: usize,
    master_seed: u64,
) -> Result<VerificationReport> {
    strong_approx_rate_with_series(kind, tau, f, replicates, master_seed).map(|(rep, _)| rep)
}

/// LIL checks on a long horizon: band membership of the local-time
/// statistic, the same statistic from the normalized functional, and their
/// paired agreement (the strong approximation transfers the LIL).
pub fn lil_checks(
    kind: ProcessKind,
    tau: f64,
    f: &TestFunction,
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<VerificationReport>> {
    let horizon = 1e4;
    let n_steps = 1 << 17;
    let sampler_kind = match kind {
        ProcessKind::Fbm => SamplerKind::Circulant,
        ProcessKind::Rl => SamplerKind::KernelConv,
    };
    let spec = ProcessSpec::new(kind, tau, horizon, n_steps, sampler_kind)?;
    let t_grid = log_spaced_grid_times(&spec, 100.0, horizon, 25);
    let f_bar = f.f_bar();
    if f_bar == 0.0 {
        return Err(Error::invalid("LIL checks need f_bar != 0"));
    }
    let sampler = PreparedSampler::new(&spec)?;
    let f_owned = f.clone();
    let t_grid_ref = &t_grid;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> =
        par_map_replicates(replicates, substream_seed(master_seed, 0x111), |seed| {
            let path = sampler.sample(seed);
            let eps = default_bandwidth(&path);
            let lt = local_time_curve(&path, 0.0, t_grid_ref, eps).expect("local time");
            let func = crate::functional::functional_curve(&path, &f_owned, t_grid_ref)
                .expect("functional");
            let func_norm: Vec<f64> = func.iter().map(|v| v / f_bar).collect();
            (lt, func_norm)
        });
    let lt_series: Vec<Vec<f64>> = pairs.iter().map(|(a, _)| a.clone()).collect();
    let fn_series: Vec<Vec<f64>> = pairs.iter().map(|(_, b)| b.clone()).collect();

    let band = lil_statistic(
        &format!("lil_band_{}_{tau}", kind.as_str()),
        &lt_series,
        &t_grid,
        tau,
        kind,
    )?;
    let band_fn = lil_statistic(
        &format!("lil_functional_{}_{tau}", kind.as_str()),
        &fn_series,
        &t_grid,
        tau,
        kind,
    )?;
    let rel = (band_fn.statistic - band.statistic).abs() / band.statistic.abs().max(1e-12);
    let paired = report(
        format!("lil_paired_{}_{tau}", kind.as_str()),
        rel,
        0.10,
        rel <= 0.10,
        replicates,
    )
    .with_meta("lt_statistic", band.statistic)
    .with_meta("functional_statistic", band_fn.statistic);
    Ok(vec![band, band_fn, paired])
}

/// Holder moment bound in time: the L2 moment of L(0, t) regressed on
/// log t has slope at least 0.85 (1 - tau).
pub fn holder_time_moment(
    spec: &ProcessSpec,
    replicates: usize,
    master_seed: u64,
) -> Result<VerificationReport> {
    if !spec.n_steps.is_multiple_of(64) {
        return Err(Error::invalid(
            "holder_time_moment needs n_steps divisible by 64",
        ));
    }
    let sampler = PreparedSampler::new(spec)?;
    let t_grid: Vec<f64> = (0..=6)
        .rev()
        .map(|k| spec.horizon / (1 << k) as f64)
        .collect();
    let t_grid_ref = &t_grid;
    let curves: Vec<Vec<f64>> =
        par_map_replicates(replicates, substream_seed(master_seed, 0x4E61), |seed| {
            let path = sampler.sample(seed);
            let eps = default_bandwidth(&path);
            local_time_curve(&path, 0.0, t_grid_ref, eps).expect("local time")
        });
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &t) in t_grid.iter().enumerate() {
        let m2 = curves.iter().map(|c| c[k] * c[k]).sum::<f64>() / replicates as f64;
        if m2 > 0.0 {
            xs.push(t.ln());
            ys.push(0.5 * m2.ln());
        }
    }
    let fit = linear_fit(&xs, &ys)?;
    let threshold = (1.0 - spec.tau) * 0.85;
    Ok(report(
        "holder_time_moment",
        fit.slope,
        threshold,
        fit.slope >= threshold,
        replicates,
    )
    .with_meta("expected_exponent", 1.0 - spec.tau)
    .with_meta("r_squared", fit.r_squared))
}

/// Bi-variable Holder bound: two-way log-log regression of the L2 moment
/// of the rectangular increment on the space gap and the time gap.
///
/// PASS if both slopes sit within 15% of (nu, 1 - tau (1 + nu));
/// INCONCLUSIVE if the decay is steeper than the bound in both variables
/// (consistent, since the bound is one-sided); FAIL if either slope falls
/// below its 15% lower margin.
pub fn holder_bivariate_moment(
    spec: &ProcessSpec,
    nu: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<VerificationReport> {
    if !spec.n_steps.is_multiple_of(64) {
        return Err(Error::invalid(
            "holder_bivariate_moment needs n_steps divisible by 64",
        ));
    }
    let sampler = PreparedSampler::new(spec)?;
    let t0 = spec.horizon / 2.0;
    let dts: Vec<f64> = [64.0, 32.0, 16.0]
        .iter()
        .map(|d| spec.horizon / d)
        .collect();
    let eps_hint = spec.dt().powf(spec.tau);
    let gaps: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|g| g * eps_hint).collect();

    // Moments of the rectangular increment over the (gap, dt) lattice.
    let t_grid: Vec<f64> = std::iter::once(t0)
        .chain(dts.iter().map(|&d| t0 + d))
        .collect();
    let gaps_ref = &gaps;
    let t_grid_ref = &t_grid;
    let rects: Vec<Vec<f64>> =
        par_map_replicates(replicates, substream_seed(master_seed, 0x4E62), |seed| {
            let path = sampler.sample(seed);
            let eps = default_bandwidth(&path);
            let at_zero = local_time_curve(&path, 0.0, t_grid_ref, eps).expect("lt");
            let mut out = Vec::with_capacity(gaps_ref.len() * (t_grid_ref.len() - 1));
            for &g in gaps_ref {
                let at_gap = local_time_curve(&path, g, t_grid_ref, eps).expect("lt");
                for j in 1..t_grid_ref.len() {
                    out.push((at_gap[j] - at_gap[0]) - (at_zero[j] - at_zero[0]));
                }
            }
            out
        });

    let mut us = Vec::new();
    let mut vs = Vec::new();
    let mut ws = Vec::new();
    for (gi, &g) in gaps.iter().enumerate() {
        for (di, &d) in dts.iter().enumerate() {
            let idx = gi * dts.len() + di;
            let m2 = rects.iter().map(|r| r[idx] * r[idx]).sum::<f64>() / replicates as f64;
            if m2 > 0.0 {
                us.push(g.ln());
                vs.push(d.ln());
                ws.push(0.5 * m2.ln());
            }
        }
    }
    let (slope_x, slope_t) = two_way_fit(&us, &vs, &ws)?;

    let target_x = nu;
    let target_t = 1.0 - spec.tau * (1.0 + nu);
    let margin = 0.15;
    let within = |s: f64, target: f64| (s - target).abs() <= margin * target.abs();
    let at_least = |s: f64, target: f64| s >= target * (1.0 - margin);
    let decision = if within(slope_x, target_x) && within(slope_t, target_t) {
        Decision::Pass
    } else if at_least(slope_x, target_x) && at_least(slope_t, target_t) {
        // Steeper decay than the one-sided bound requires: flagged, not
        // failed.
        Decision::Inconclusive
    } else {
        Decision::Fail
    };
    Ok(VerificationReport {
        name: "holder_bivariate_moment".to_string(),
        statistic: slope_t,
        threshold: target_t,
        decision,
        p_value: None,
        n_replicates: replicates,
        metadata: vec![
            ("slope_space".to_string(), slope_x.to_string()),
            ("slope_time".to_string(), slope_t.to_string()),
            ("target_space".to_string(), target_x.to_string()),
            ("target_time".to_string(), target_t.to_string()),
            ("nu".to_string(), nu.to_string()),
        ],
    })
}

/// OLS with two predictors and an intercept; returns the two slopes.
fn two_way_fit(u: &[f64], v: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let n = u.len() as f64;
    if u.len() < 4 {
        return Err(Error::invalid("two-way fit needs at least 4 points"));
    }
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let mw = w.iter().sum::<f64>() / n;
    let mut suu = 0.0;
    let mut svv = 0.0;
    let mut suv = 0.0;
    let mut suw = 0.0;
    let mut svw = 0.0;
    for i in 0..u.len() {
        let du = u[i] - mu;
        let dv = v[i] - mv;
        let dw = w[i] - mw;
        suu += du * du;
        svv += dv * dv;
        suv += du * dv;
        suw += du * dw;
        svw += dv * dw;
    }
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-12 * (suu * svv).max(1e-300) {
        return Err(Error::numerical("two-way fit design is singular"));
    }
    Ok(((svv * suw - suv * svw) / det, (suu * svw - suv * suw) / det))
}
