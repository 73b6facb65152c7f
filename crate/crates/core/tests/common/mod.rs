#![allow(dead_code)]

use std::path::PathBuf;

use linesol::exact::{LineSolutionSpec, SolveOptions, SolvedSolution};

pub const ACCEPTANCE: [&str; 6] = [
    "euler_gauss_g2",
    "euler_isothermal",
    "ep_attractive",
    "ep_repulsive",
    "forced",
    "gauged",
];

pub fn scenario_path(name: &str) -> PathBuf {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let direct = root.join(format!("{name}.json"));
    if direct.exists() {
        direct
    } else {
        root.join("extra").join(format!("{name}.json"))
    }
}

/// The `solution` block of a scenario file.
pub fn scenario_spec(name: &str) -> LineSolutionSpec {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario file");
    let value: serde_json::Value = serde_json::from_str(&text).expect("scenario json");
    serde_json::from_value(value["solution"].clone()).expect("solution block")
}

pub fn solve(spec: LineSolutionSpec) -> SolvedSolution {
    SolvedSolution::solve(spec, &SolveOptions::default()).expect("solvable")
}

pub fn solve_scenario(name: &str) -> SolvedSolution {
    solve(scenario_spec(name))
}
