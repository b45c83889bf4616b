//! Limit-law behavior beyond the acceptance scales: the first-order limit
//! for the RL process and for an already-localized integrand, translation
//! invariance of the K and Y statistics, and the constant identity linking
//! the moving-average normalization to the LIL bracket.

use fraclt::checks;
use fraclt::functional::TestFunction;
use fraclt::localtime::{
    default_bandwidth, default_level_grid, holder_running_sup, local_time_field, sup_diff_stats,
    EstimatorKind,
};
use fraclt::process::{c_h_constant, PreparedSampler, ProcessKind, ProcessSpec, SamplerKind};
use fraclt::rng::{par_map_replicates, substream_seed};
use fraclt::stats::ks_two_sample;
use fraclt::verify::{first_order_limit_test, lil_constants, Decision, FirstOrderParams};

#[test]
fn delta_tau_is_the_moving_average_constant() {
    // The LIL constant delta_tau and the fBm moving-average constant c_H
    // are one and the same formula.
    for i in 1..10 {
        let tau = i as f64 / 10.0;
        let c = lil_constants(tau, ProcessKind::Rl).unwrap();
        let ch = c_h_constant(tau).unwrap();
        assert!(
            (c.delta_tau - ch).abs() <= 1e-12 * ch,
            "tau={tau}: delta {} vs c_H {}",
            c.delta_tau,
            ch
        );
    }
}

#[test]
fn first_order_limit_holds_for_the_rl_process() {
    let params = FirstOrderParams {
        kind: ProcessKind::Rl,
        tau: 0.7,
        n_steps_base: 512,
        replicates: 600,
        master_seed: 91_001,
        distance_threshold: 0.08,
    };
    let f = TestFunction::compact_bump(1.0, 0.0, 1.0).unwrap();
    let rep = first_order_limit_test(&params, &f, &[1.0, 4.0, 16.0, 64.0]).unwrap();
    assert!(
        rep.passed(),
        "RL ladder: final {} meta {:?}",
        rep.statistic,
        rep.metadata
    );
}

#[test]
fn first_order_limit_with_localized_integrand_is_small_at_every_lambda() {
    // A narrow bump at the origin is already close to f_bar delta_0, so
    // the ladder starts near its limit instead of descending to it.
    let params = FirstOrderParams {
        kind: ProcessKind::Fbm,
        tau: 0.5,
        n_steps_base: 512,
        replicates: 600,
        master_seed: 91_002,
        distance_threshold: 1.0,
    };
    let f = TestFunction::compact_bump(1.0, 0.0, 0.05).unwrap();
    let rep = first_order_limit_test(&params, &f, &[1.0, 4.0, 16.0]).unwrap();
    for (key, value) in &rep.metadata {
        if key.starts_with("ks_distance_lambda_") {
            let d: f64 = value.parse().unwrap();
            assert!(d < 0.12, "{key} = {d}, not small");
        }
    }
}

#[test]
fn rl_lil_statistic_sits_in_the_widened_band() {
    // The RL-side bracket carries the extra delta_tau^(+/-1) slack for the
    // representation normalization; the statistic must land inside it and
    // the functional route must track the local-time route.
    let f = TestFunction::gaussian_bump(1.0, 0.0, 0.5).unwrap();
    let reports = checks::lil_checks(ProcessKind::Rl, 0.6, &f, 100, 93_001).unwrap();
    let band = &reports[0];
    assert_ne!(
        band.decision,
        Decision::Fail,
        "band statistic {}",
        band.statistic
    );
    let paired = &reports[2];
    assert!(
        paired.statistic <= 0.12,
        "functional vs local-time LIL statistics disagree by {}",
        paired.statistic
    );
}

#[test]
fn translation_invariance_extends_to_k_and_y() {
    // The proof technique for Z transfers to the plain sup difference K
    // and the running sup Y; all three are level-shift invariant. Z is
    // checked at the default Holder exponent and at half of it, since the
    // admissible range is open and the choice is a convention.
    let spec =
        ProcessSpec::new(ProcessKind::Fbm, 0.5, 1.0, 1 << 11, SamplerKind::Circulant).unwrap();
    let sampler = PreparedSampler::new(&spec).unwrap();
    let nu = 0.25;
    let snapshots: Vec<f64> = (1..=16).map(|j| j as f64 / 16.0).collect();

    let make = |tag: u64, z: f64| -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let stats: Vec<[f64; 4]> = par_map_replicates(400, substream_seed(92_003, tag), |seed| {
            let path = sampler.sample(seed).translate(z);
            let eps = default_bandwidth(&path);
            let x_grid = default_level_grid(&path, eps);
            let field = local_time_field(
                &path,
                &x_grid,
                &snapshots,
                EstimatorKind::EpsOccupation,
                eps,
            )
            .unwrap();
            let (z_stat, k) = sup_diff_stats(&field, 1.0, nu).unwrap();
            let (z_half, _) = sup_diff_stats(&field, 1.0, nu / 2.0).unwrap();
            let y = holder_running_sup(&field, nu, 1.0).unwrap();
            [z_stat, z_half, k, y]
        });
        (
            stats.iter().map(|s| s[0]).collect(),
            stats.iter().map(|s| s[1]).collect(),
            stats.iter().map(|s| s[2]).collect(),
            stats.iter().map(|s| s[3]).collect(),
        )
    };

    let (z0, zh0, k0, y0) = make(1, 0.0);
    let (zz, zhz, kz, yz) = make(2, 5.0);
    for (name, a, b) in [
        ("Z(nu)", &z0, &zz),
        ("Z(nu/2)", &zh0, &zhz),
        ("K", &k0, &kz),
        ("Y", &y0, &yz),
    ] {
        let ks = ks_two_sample(a, b).unwrap();
        assert!(
            ks.p_value > 0.01,
            "{name} invariance rejected: p = {}",
            ks.p_value
        );
    }
}
