use std::path::PathBuf;

use expfb::problem::{load_config, two_phase_value, PhaseTerm};
use expfb::{Config, Error, Order, SampledProblem};
use proptest::prelude::*;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped() -> Vec<(String, Config)> {
    let mut out: Vec<_> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), load_config(&p).unwrap()))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn every_shipped_config_loads_and_round_trips() {
    let all = shipped();
    assert!(all.len() >= 5);
    for (name, cfg) in all {
        let again = Config::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg, "{name}");
        let spec = cfg.problem();
        let mesh = spec.mesh().unwrap();
        SampledProblem::new(&spec, &mesh).unwrap();
        assert_eq!(cfg.solver.k_schedule.last(), Some(&cfg.law.k), "{name}");
        assert!(cfg.output_dir.is_some(), "{name}");
    }
}

#[test]
fn infinite_order_is_spelled_inf() {
    let text = std::fs::read_to_string(configs_dir().join("twophase_2d.json")).unwrap();
    assert_eq!(Config::from_json(&text).unwrap().law.k, Order::Infinite);
}

#[test]
fn loader_errors() {
    let text = std::fs::read_to_string(configs_dir().join("twophase_2d.json")).unwrap();
    assert!(matches!(Config::from_json("{"), Err(Error::Parse(_))));
    let unknown = text.replacen("\"c_gamma\"", "\"surprise\": 1, \"c_gamma\"", 1);
    assert!(matches!(Config::from_json(&unknown), Err(Error::Parse(_))));
    let strict = text.replace("\"c_gamma\": 0.5", "\"c_gamma\": 2.0");
    assert!(matches!(Config::from_json(&strict), Err(Error::Validation(_))));
    let empty = text.replace("\"k_schedule\": [\"inf\"]", "\"k_schedule\": []");
    assert!(matches!(Config::from_json(&empty), Err(Error::Validation(_))));
    assert!(matches!(load_config(configs_dir().join("missing.json")), Err(Error::Io(_))));
}

proptest! {
    /// `u·f(x,u)` tends to 0 from both sides, and is continuous at 0 when `f₊ = f₋`.
    #[test]
    fn source_term_is_continuous_at_zero(fp in -5.0f64..5.0, fm in -5.0f64..5.0, eps in 1e-12f64..1e-6) {
        let (_, cfg) = shipped().into_iter().find(|(n, _)| n == "affine_1d.json").unwrap();
        let spec = cfg.problem();
        let mesh = spec.mesh().unwrap();
        let n = mesh.node_count();
        let mk = |a: f64, b: f64| {
            SampledProblem::from_nodal(&mesh, spec.law, 0.0, [vec![a; n], vec![b; n], vec![1.0; n], vec![1.0; n]], vec![0.0; n]).unwrap()
        };
        let sp = mk(fp, fm);
        let bound = 5.0 * eps;
        prop_assert!(two_phase_value(&sp, 3, eps, PhaseTerm::F).abs() <= bound);
        prop_assert!(two_phase_value(&sp, 3, -eps, PhaseTerm::F).abs() <= bound);
        prop_assert_eq!(two_phase_value(&sp, 3, 0.0, PhaseTerm::F), 0.0);
        let same = mk(fp, fp);
        let jump = two_phase_value(&same, 3, eps, PhaseTerm::F) - two_phase_value(&same, 3, -eps, PhaseTerm::F);
        prop_assert!((jump - 2.0 * fp * eps).abs() <= 1e-15);
    }
}
