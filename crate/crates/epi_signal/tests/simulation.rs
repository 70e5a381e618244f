use epi_signal::config::{parse_config, PolicyKind, ScenarioConfig, SimEquilibrium};
use epi_signal::equilibria::{equilibrium_report, RcMode, Verdict};
use epi_signal::output::{to_json, weekly_csv, weekly_header};
use epi_signal::signaling::type_distribution;
use epi_signal::simulation::{monte_carlo, stress_row, weekly_loop, StressFactor, SummaryStats};

fn low(policy: &str, eq: &str) -> ScenarioConfig {
    parse_config(&format!(
        "[behavior]\npsi_init = 0.005\neta_init = 0.01\n[policy]\nkind = \"{policy}\"\n[simulation]\nequilibrium = \"{eq}\"\n"
    ))
    .unwrap()
}

fn run(cfg: &ScenarioConfig) -> SummaryStats {
    monte_carlo(cfg, &cfg.seeds()).unwrap()
}

#[test]
fn deception_is_ordered_by_equilibrium_every_week() {
    let s: Vec<SummaryStats> = ["separating", "partial_pooling", "pooling"]
        .iter()
        .map(|eq| run(&low("adaptive", eq)))
        .collect();
    for w in 0..26 {
        let d: Vec<f64> = s.iter().map(|x| x.mean[w].deception_overall).collect();
        assert!(d[2] > d[1] && d[1] > d[0], "week {}: {d:?}", w + 1);
    }
}

#[test]
fn adaptive_covers_at_least_as_much_as_no_interaction() {
    for eq in ["separating", "partial_pooling", "pooling"] {
        let a = run(&low("adaptive", eq));
        let n = run(&low("no_interaction", eq));
        assert!(a.mean[9].mask_coverage >= n.mean[9].mask_coverage, "{eq}");
        assert!(
            a.mean[9].vaccination_coverage >= n.mean[9].vaccination_coverage * (1.0 - 1e-9),
            "{eq}"
        );
    }
}

#[test]
fn metrics_are_shares_and_weeks_are_numbered() {
    let cfg = parse_config("[simulation]\nequilibrium = \"pooling\"\nn_runs = 5\n").unwrap();
    for r in run(&cfg).runs {
        assert!(r.valid);
        assert_eq!(r.metrics.len(), 26);
        for (i, m) in r.metrics.iter().enumerate() {
            assert_eq!(m.week, i + 1);
            for x in [
                m.s,
                m.v,
                m.e,
                m.a,
                m.i,
                m.r,
                m.hospitalization,
                m.vaccination_coverage,
                m.mask_coverage,
                m.deception_overall,
            ] {
                assert!((0.0..=1.0).contains(&x), "{x}");
            }
        }
        if let Some(score) = r.disease_control_score {
            assert!((0.0..=1.0).contains(&score));
        }
    }
}

#[test]
fn weekly_csv_has_one_row_per_run_week_plus_mean_and_sd() {
    let cfg = parse_config("[simulation]\nn_runs = 3\n").unwrap();
    let bytes = weekly_csv(&run(&cfg)).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), weekly_header().join(","));
    assert_eq!(lines.count(), 3 * 26 + 2 * 26);
}

#[test]
fn random_policy_is_reproducible_and_distinct_from_adaptive() {
    let cfg = low("random", "partial_pooling");
    assert_eq!(weekly_loop(&cfg, 3).unwrap(), weekly_loop(&cfg, 3).unwrap());
    let adaptive = weekly_loop(&low("adaptive", "partial_pooling"), 3).unwrap();
    assert_ne!(weekly_loop(&cfg, 3).unwrap().metrics, adaptive.metrics);
}

#[test]
fn self_comparison_stress_is_neutral() {
    let mut cfg = parse_config("[simulation]\nn_runs = 4\n").unwrap();
    cfg.stress.incentive_factor = 1.0;
    let row = stress_row(&cfg, StressFactor::Incentives, SimEquilibrium::Pooling).unwrap();
    assert_eq!(row.delta_score, 0.0);
    assert_eq!(row.peak_ratio, 1.0);
}

#[test]
fn equilibrium_report_omits_alpha_outside_window() {
    let cfg = parse_config("").unwrap();
    let pi = type_distribution(cfg.behavior.psi_init, cfg.behavior.eta_init);
    let report = equilibrium_report(
        &cfg.epi_params(),
        &cfg.game_params(),
        &pi,
        RcMode::default(),
    );
    assert_eq!(report.window.verdict, Verdict::Separating);
    assert!(report.alpha_star.is_none());
    assert!(!to_json(&report).unwrap().contains("alpha_star"));
}

#[test]
fn equilibrium_report_solves_inside_window() {
    let mut cfg = parse_config("[epi]\nbeta0 = 3.5\n[game]\na = 10.0\n").unwrap();
    let pi = type_distribution(0.1, 0.5);
    let w = equilibrium_report(
        &cfg.epi_params(),
        &cfg.game_params(),
        &pi,
        RcMode::default(),
    )
    .window;
    cfg.game.lambda1 = 0.9 * w.upper_bound + 0.1 * w.lower_bound;
    let report = equilibrium_report(
        &cfg.epi_params(),
        &cfg.game_params(),
        &pi,
        RcMode::default(),
    );
    assert_eq!(report.window.verdict, Verdict::PartialPooling);
    let alpha = report.alpha_star.expect("interior root");
    assert!(alpha > 0.0 && alpha < 1.0);
    assert!(report.residual.unwrap() < 1e-8);
}

#[test]
fn no_interaction_reports_full_silence() {
    let cfg =
        parse_config("[policy]\nkind = \"no_interaction\"\n[simulation]\nn_runs = 2\n").unwrap();
    let s = run(&cfg);
    assert!(s
        .mean
        .iter()
        .all(|m| m.deception_overall == 1.0 && m.information_bits == 0.0));
    assert_eq!(cfg.policy.kind, PolicyKind::NoInteraction);
}
