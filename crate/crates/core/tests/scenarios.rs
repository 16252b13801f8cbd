use std::path::{Path, PathBuf};

use ecoheat_core::config::{Config, ConfigError};
use ecoheat_core::harness::{
    calibrate_beta, compare, run_scenario, sweep_ambient, HarnessError, LongStop, Scenario, Setup,
};
use ecoheat_core::hvac::BetaSchedule;
use ecoheat_core::{Driving, Heating};

fn default_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

#[test]
fn shipped_config_matches_built_in_defaults() {
    let cfg = Config::load(&default_config_path()).unwrap();
    assert_eq!(cfg.setup, Setup::default());
    assert!(cfg.scenario("eco-eco").is_ok());
    assert_eq!(cfg.calibration_scenarios().len(), 3);
    assert!(cfg.sweep_base().long_stop);
}

#[test]
fn config_errors_point_at_the_line() {
    let text = "[vehicle]\nmass = 1500.0\ndriveline_eff = 1.4\n";
    let err = Config::from_str_at(text, Path::new("study.toml")).unwrap_err();
    match err {
        ConfigError::Invalid { line, key, .. } => {
            assert_eq!(line, Some(3));
            assert_eq!(key, "vehicle.driveline_eff");
        }
        other => panic!("unexpected {other}"),
    }
    let unknown = Config::from_str_at("[vehicle]\nmas = 1.0\n", Path::new("study.toml")).unwrap_err();
    assert!(unknown.to_string().contains("mas"), "{unknown}");
}

#[test]
fn zero_green_is_accepted_at_load() {
    let text = r#"
[corridor]
length_m = 800.0
speed_limit_mps = 17.9

[[corridor.intersections]]
id = 1
position_m = 400.0
cycle_s = 90.0
green_offset_s = 0.0
green_duration_s = 0.0
discharge_rate = 0.5
"#;
    let cfg = Config::from_str_at(text, Path::new("zero.toml")).unwrap();
    let s = Scenario::new("z", Driving::Eco, Heating::Constant, 0.0);
    let err = run_scenario(&s, &cfg.setup).unwrap_err();
    assert!(err.is_infeasibility(), "{err}");
}

#[test]
fn unknown_scenario_lists_names() {
    let cfg = Config::load(&default_config_path()).unwrap();
    let err = cfg.scenario("nope").unwrap_err().to_string();
    assert!(err.contains("eco-eco") && err.contains("normal-constant"), "{err}");
}

#[test]
fn runs_are_reproducible() {
    let setup = Setup::default();
    let s = Scenario::new("r", Driving::Eco, Heating::Eco, -4.0).with_seed(7);
    let a = run_scenario(&s, &setup).unwrap();
    let b = run_scenario(&s, &setup).unwrap();
    assert_eq!(a, b);
    let n = a.series.len();
    for len in [a.series.v.len(), a.series.t_cl.len(), a.series.command.len(), a.series.p_dahp.len()] {
        assert_eq!(len, n);
    }
}

#[test]
fn mild_weather_never_idles() {
    let setup = Setup::default();
    for heating in [Heating::Constant, Heating::Eco] {
        let mut s = Scenario::new("mild", Driving::Eco, heating, 6.0);
        s.long_stop = true;
        let r = run_scenario(&s, &setup).unwrap();
        assert_eq!(r.report.engine_idle_seconds, 0.0, "{heating:?}");
    }
}

#[test]
fn eco_driving_saves_for_every_seed() {
    let setup = Setup::default();
    for seed in 0..5 {
        let s = Scenario::new("n", Driving::Normal, Heating::Constant, -5.0).with_seed(seed);
        let normal = run_scenario(&s, &setup).unwrap();
        let eco = run_scenario(&s.with_driving(Driving::Eco), &setup).unwrap();
        assert!(normal.report.e_eq > eco.report.e_eq, "seed {seed}");
    }
}

#[test]
fn comparing_a_run_with_itself_saves_nothing() {
    let setup = Setup::default();
    let r = run_scenario(&Scenario::new("a", Driving::Eco, Heating::Eco, 0.0), &setup).unwrap();
    let row = compare(&r, &r).unwrap();
    assert_eq!(row.saving_pct, 0.0);
    assert_eq!(row.dahe_change_pct(), 0.0);
    let colder = run_scenario(&Scenario::new("b", Driving::Eco, Heating::Eco, -1.0), &setup).unwrap();
    assert!(matches!(compare(&r, &colder), Err(HarnessError::IncomparableScenarios(_))));
}

#[test]
fn sweep_shapes() {
    let setup = Setup::default();
    let base = Scenario::new("s", Driving::Eco, Heating::Eco, 0.0);
    let one = sweep_ambient(&base, &[-2.0], 1, &setup, 1).unwrap();
    assert_eq!(one.rows.len(), 1);
    assert_eq!(one.groups.len(), 1);
    assert!(matches!(sweep_ambient(&base, &[], 1, &setup, 1), Err(HarnessError::EmptyInput(_))));
}

#[test]
fn long_stop_extends_the_third_stop() {
    let setup = Setup::default();
    for driving in [Driving::Eco, Driving::Normal] {
        let plain = run_scenario(&Scenario::new("p", driving, Heating::Constant, -3.0), &setup).unwrap();
        let mut s = Scenario::new("l", driving, Heating::Constant, -3.0);
        s.long_stop = true;
        let long = run_scenario(&s, &setup).unwrap();
        let ext = long.extended_stop().unwrap();
        let third = plain.stops[2];
        assert_eq!(ext.start, third.start);
        assert!((ext.end - ext.start) - (third.end - third.start) - 100.0 == 0.0);
        assert_eq!(long.series.len(), plain.series.len() + 100);
    }
    let far = Setup {
        long_stop: LongStop { stop_index: 9, ..LongStop::default() },
        ..Setup::default()
    };
    let mut s = Scenario::new("l", Driving::Eco, Heating::Constant, -3.0);
    s.long_stop = true;
    assert!(matches!(run_scenario(&s, &far), Err(HarnessError::NoStopToExtend { .. })));
}

#[test]
fn unit_beta_is_a_calibration_fixed_point() {
    let setup = Setup::default();
    let flat = BetaSchedule {
        speed_mps: vec![0.0, 30.0],
        beta: vec![1.0, 1.0],
        scale: 1.0,
    };
    let mut trial = setup.clone();
    trial.controller.beta = flat.clone();
    let s = vec![Scenario::new("c", Driving::Eco, Heating::Eco, -5.0)];
    let cal = calibrate_beta(&flat, &s, &trial, 1).unwrap();
    assert_eq!(cal.scale, 1.0);
    assert_eq!(cal.evaluations, 1);
    assert!(cal.gap.abs() <= 1e-4);
}
