use std::f64::consts::PI;

use meanflow_cli::config::{FieldConfig, ForcingConfig, OutputFormat};
use meanflow_cli::parse_config;
use serde_json::{json, Value};

fn minimal() -> Value {
    json!({
        "domain": {"dimension": 2, "resolution": 16},
        "physics": {"viscosity": 0.1},
        "time": {"dt": 0.01, "t_end": 1.0},
        "forcing": {"kind": "steady", "field": {"kind": "shear", "wavenumber": 1, "amplitude": 0.5}}
    })
}

fn paths_of(value: &Value) -> Vec<String> {
    match parse_config(&value.to_string()) {
        Ok(_) => Vec::new(),
        Err(e) => e.0.into_iter().map(|v| v.path).collect(),
    }
}

#[test]
fn minimal_config_gets_defaults() {
    let c = parse_config(&minimal().to_string()).unwrap();
    assert_eq!(c.domain.period, 2.0 * PI);
    assert_eq!(c.domain.dealias_fraction, 2.0 / 3.0);
    assert_eq!(c.time.sample_stride, 10);
    assert_eq!(c.averaging.horizons, vec![1.0]);
    assert_eq!(c.initial, FieldConfig::Zero);
    assert!(!c.ensemble.enabled);
    assert_eq!(c.ensemble.n, 8);
    assert_eq!(c.output.directory, "output");
    assert_eq!(c.output.formats, vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Checkpoint]);
    assert_eq!(c.seed, 0);
    assert!(matches!(c.forcing, ForcingConfig::Steady { .. }));
}

#[test]
fn zero_dt_is_reported_at_its_path() {
    let mut v = minimal();
    v["time"]["dt"] = json!(0.0);
    assert_eq!(paths_of(&v), vec!["time.dt"]);
}

#[test]
fn all_violations_are_collected() {
    let mut v = minimal();
    v["time"]["dt"] = json!(-1.0);
    v["physics"]["viscosity"] = json!(0.0);
    v["physics"]["colour"] = json!("blue");
    v["domain"]["resolution"] = json!(24);
    v["forcing"]["field"]["amplitude"] = json!("big");
    v["output"] = json!({"formats": ["csv", "pdf"]});
    v["extra"] = json!(1);
    let mut paths = paths_of(&v);
    paths.sort();
    assert_eq!(
        paths,
        vec![
            "domain.resolution",
            "extra",
            "forcing.field.amplitude",
            "output.formats[1]",
            "physics.colour",
            "physics.viscosity",
            "time.dt",
        ]
    );
}

#[test]
fn missing_sections_and_bad_kinds() {
    let v = json!({
        "domain": {"dimension": 4, "resolution": 16},
        "time": {"dt": 0.01, "t_end": 1.0},
        "forcing": {"kind": "sideways"}
    });
    let mut paths = paths_of(&v);
    paths.sort();
    assert_eq!(paths, vec!["domain.dimension", "forcing.kind", "physics"]);
}

#[test]
fn invalid_json_is_one_violation() {
    let e = parse_config("{ not json").unwrap_err();
    assert_eq!(e.0.len(), 1);
    assert!(e.0[0].message.contains("invalid JSON"));
}

#[test]
fn cross_field_constraints() {
    let mut v = minimal();
    v["averaging"] = json!({"horizons": [0.5, 0.25, 0.333, 2.0]});
    let paths = paths_of(&v);
    assert!(paths.contains(&"averaging.horizons[1]".to_string()));
    assert!(paths.contains(&"averaging.horizons[2]".to_string()));
    assert!(paths.contains(&"averaging.horizons[3]".to_string()));
    assert!(!paths.contains(&"averaging.horizons[0]".to_string()));

    let mut v = minimal();
    v["time"]["t_end"] = json!(1.005);
    v["time"]["dt"] = json!(0.01);
    assert!(paths_of(&v).contains(&"time.t_end".to_string()));
}

#[test]
fn cfl_violation_points_at_dt() {
    let mut v = minimal();
    v["initial"] = json!({"kind": "random", "max_shell": 4.0, "energy": 100.0});
    v["time"]["dt"] = json!(0.5);
    v["time"]["t_end"] = json!(1.0);
    assert_eq!(paths_of(&v), vec!["time.dt"]);
}

#[test]
fn unretained_forcing_mode_points_at_field() {
    let mut v = minimal();
    v["forcing"]["field"] = json!({"kind": "shear", "wavenumber": 9, "amplitude": 1.0});
    assert_eq!(paths_of(&v), vec!["forcing.field"]);
}

#[test]
fn ensemble_needs_a_steady_force() {
    let mut v = minimal();
    v["forcing"] = json!({
        "kind": "bursts",
        "pulse": {"kind": "shear", "wavenumber": 1, "amplitude": 1.0},
        "pulse_width": 0.5,
        "period": 2.0
    });
    v["ensemble"] = json!({"enabled": true, "n": 2});
    assert_eq!(paths_of(&v), vec!["forcing.kind"]);
}

#[test]
fn mode_shapes_are_checked() {
    let mut v = minimal();
    v["initial"] = json!({"kind": "modes", "modes": [{"k": [1, 2, 3], "amplitude": [[1.0, 0.0], [0.0]]}]});
    let mut paths = paths_of(&v);
    paths.sort();
    assert_eq!(paths, vec!["initial.modes[0].amplitude[1]", "initial.modes[0].k"]);
}

#[test]
fn taylor_green_is_two_dimensional() {
    let mut v = minimal();
    v["domain"]["dimension"] = json!(3);
    v["forcing"]["field"] = json!({"kind": "zero"});
    v["initial"] = json!({"kind": "taylor_green", "amplitude": 1.0});
    assert_eq!(paths_of(&v), vec!["initial"]);
}

#[test]
fn golden_config_round_trips() {
    let golden = include_str!("data/full_config.json");
    let parsed = parse_config(golden).unwrap();
    let text = parsed.to_json_pretty() + "\n";
    assert_eq!(text, golden);
    assert_eq!(parse_config(&text).unwrap(), parsed);
}

#[test]
fn defaults_survive_round_trip() {
    let parsed = parse_config(&minimal().to_string()).unwrap();
    let again = parse_config(&parsed.to_json_pretty()).unwrap();
    assert_eq!(again, parsed);
}
