//! End-to-end command-line behavior: exit codes, stage naming, and the
//! bit-for-bit agreement between single-metric commands and report files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_laborscape");
const TOY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy");

fn toy_config() -> String {
    format!("{TOY}/config.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn laborscape")
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn report_into(dir: &Path) -> PathBuf {
    let out = dir.join("report");
    let output = run(&[
        "--config",
        &toy_config(),
        "report",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    out
}

#[test]
fn report_writes_expected_files_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    for name in [
        "manifest.json",
        "city_metrics.csv",
        "rca.csv",
        "proximity.csv",
        "network.edgelist",
        "network.nodes.csv",
        "network.json",
        "positions.csv",
        "pca_loadings.csv",
        "pca_scores.csv",
        "pca_explained.csv",
        "grouping_premium.csv",
        "grouping_elite.csv",
        "distances.csv",
        "scaling_exponents.csv",
        "scaling_skipped.csv",
        "regressions.csv",
        "regressions_skipped.csv",
        "simpson_premium.json",
        "simpson_elite.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
}

#[test]
fn manifest_echoes_seed_and_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["kmeans_seed"], 42);
    assert_eq!(manifest["parameters"]["proximity_threshold"], 0.66);
    assert_eq!(manifest["parameters"]["advantage_cutoff"], 1.0);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 21);
    for entry in outputs {
        assert_eq!(entry["sha256"].as_str().unwrap().len(), 64);
        assert!(entry["bytes"].as_u64().unwrap() > 0);
    }
    // every hashed output actually exists with matching content
    for entry in outputs {
        let name = entry["name"].as_str().unwrap();
        let content = std::fs::read(out.join(name)).unwrap();
        use sha2::Digest as _;
        assert_eq!(
            hex::encode(sha2::Sha256::digest(&content)),
            entry["sha256"].as_str().unwrap(),
            "hash mismatch for {name}"
        );
    }
}

#[test]
fn missing_risk_input_exits_two_naming_validate_join() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        format!(
            "[inputs]\nemployment = \"{TOY}/employment.csv\"\nindustry = \"{TOY}/industry.csv\"\nattributes = \"{TOY}/attributes.csv\"\n"
        ),
    )
    .unwrap();
    let output = run(&["--config", config.to_str().unwrap(), "report"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("validate_join"), "stderr: {stderr}");
}

#[test]
fn risk_gap_blocks_validate_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // risk file missing one occupation
    let risk = dir.path().join("risk.csv");
    let full = std::fs::read_to_string(format!("{TOY}/risk.csv")).unwrap();
    let truncated: Vec<&str> = full.lines().filter(|l| !l.starts_with("mine_extraction")).collect();
    std::fs::write(&risk, truncated.join("\n") + "\n").unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        format!(
            "[inputs]\nemployment = \"{TOY}/employment.csv\"\nrisk = \"{}\"\nattributes = \"{TOY}/attributes.csv\"\n",
            risk.display()
        ),
    )
    .unwrap();
    let output = run(&["--config", config.to_str().unwrap(), "validate"]);
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("mine_extraction"), "stdout: {stdout}");
}

#[test]
fn validate_aligned_toy_exits_zero() {
    let output = run(&["--config", &toy_config(), "validate"]);
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("missing risk: none"));
}

#[test]
fn metric_impact_matches_report_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let metrics = std::fs::read_to_string(out.join("city_metrics.csv")).unwrap();
    let single = stdout_of(&run(&["--config", &toy_config(), "metric", "impact"]));

    let mut expected = String::from("city,impact_rate\n");
    for line in metrics.lines().skip(1) {
        let mut fields = line.split(',');
        let city = fields.next().unwrap();
        let impact = fields.next().unwrap();
        expected.push_str(&format!("{city},{impact}\n"));
    }
    assert_eq!(single, expected);
}

#[test]
fn metric_rca_and_proximity_match_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let rca = std::fs::read_to_string(out.join("rca.csv")).unwrap();
    let single = stdout_of(&run(&["--config", &toy_config(), "metric", "rca"]));
    assert_eq!(single, rca);

    let prox = std::fs::read_to_string(out.join("proximity.csv")).unwrap();
    let single = stdout_of(&run(&["--config", &toy_config(), "metric", "proximity"]));
    assert_eq!(single, prox);
}

#[test]
fn metric_diversity_matches_report_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let metrics = std::fs::read_to_string(out.join("city_metrics.csv")).unwrap();
    let single = stdout_of(&run(&["--config", &toy_config(), "metric", "diversity"]));
    let mut expected = String::from("city,job_diversity,industry_diversity\n");
    for line in metrics.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        expected.push_str(&format!("{},{},{}\n", fields[0], fields[2], fields[3]));
    }
    assert_eq!(single, expected);
}

#[test]
fn metric_simpson_json_matches_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let from_report = std::fs::read_to_string(out.join("simpson_premium.json")).unwrap();
    let single = stdout_of(&run(&[
        "--config",
        &toy_config(),
        "--json",
        "metric",
        "simpson",
        "--group",
        "premium",
    ]));
    assert_eq!(single, from_report);
}

#[test]
fn metric_scaling_rows_match_report_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let table = std::fs::read_to_string(out.join("scaling_exponents.csv")).unwrap();
    let single = stdout_of(&run(&[
        "--config",
        &toy_config(),
        "metric",
        "scaling",
        "--occupation",
        "farm_crop",
        "--group",
        "premium",
    ]));
    for line in single.lines().skip(1) {
        assert!(
            table.lines().any(|l| l == line),
            "single row not found in report table: {line}"
        );
    }
    assert!(single.lines().count() > 1);
}

#[test]
fn metric_scaling_pooled_single_row() {
    let single = stdout_of(&run(&[
        "--config",
        &toy_config(),
        "metric",
        "scaling",
        "--occupation",
        "mfg_assembly",
    ]));
    let lines: Vec<&str> = single.lines().collect();
    assert_eq!(lines.len(), 2, "header plus one pooled row: {single}");
    assert!(lines[1].starts_with("mfg_assembly,pooled,"));
}

#[test]
fn unknown_occupation_exits_two() {
    let output = run(&[
        "--config",
        &toy_config(),
        "metric",
        "scaling",
        "--occupation",
        "nope",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn cluster_matches_report_groupings() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let premium = std::fs::read_to_string(out.join("grouping_premium.csv")).unwrap();
    let single = stdout_of(&run(&[
        "--config",
        &toy_config(),
        "cluster",
        "--scheme",
        "premium",
    ]));
    assert_eq!(single, premium);
}

#[test]
fn occspace_export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let graphml = dir.path().join("net.graphml");
    let output = run(&[
        "--config",
        &toy_config(),
        "occspace",
        "export",
        "--format",
        "graph-xml",
        "--file",
        graphml.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&graphml).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("<graphml"));

    let json_path = dir.path().join("net.json");
    let output = run(&[
        "--config",
        &toy_config(),
        "occspace",
        "export",
        "--format",
        "json",
        "--file",
        json_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(doc["nodes"].as_array().unwrap().len(), 12);
}

#[test]
fn occspace_build_matches_report_network() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let built = dir.path().join("built");
    let output = run(&[
        "--config",
        &toy_config(),
        "occspace",
        "build",
        "--out",
        built.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    for name in ["network.edgelist", "network.nodes.csv", "network.json"] {
        assert_eq!(
            std::fs::read(out.join(name)).unwrap(),
            std::fs::read(built.join(name)).unwrap(),
            "{name} differs between report and occspace build"
        );
    }
}

#[test]
fn crosswalk_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cw");
    let output = run(&[
        "--config",
        &toy_config(),
        "crosswalk",
        "--resolutions",
        &format!("{TOY}/resolutions.csv"),
        "--source-risk",
        &format!("{TOY}/source_risk.csv"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let queue = std::fs::read_to_string(out.join("adjudication_queue.txt")).unwrap();
    assert!(queue.trim().is_empty(), "queue not drained: {queue}");

    let risk = laborscape::dataset::RiskTable::load(out.join("target_risk.csv")).unwrap();
    assert!((risk.get("t_farmhand").unwrap() - 0.9).abs() < 1e-12);
    assert!((risk.get("t_clerk").unwrap() - 0.65).abs() < 1e-12);
    assert!((risk.get("t_engineer").unwrap() - 0.4).abs() < 1e-12);
    assert!((risk.get("t_weaver").unwrap() - 0.85).abs() < 1e-12);
    assert_eq!(risk.get("t_gov_leader"), Some(0.0));

    let tags = std::fs::read_to_string(out.join("crosswalk_tags.csv")).unwrap();
    assert!(tags.contains("t_weaver,adjudicated"));
    assert!(tags.contains("t_gov_leader,override"));
    assert!(tags.contains("t_farmhand,consensus"));
}

#[test]
fn crosswalk_without_resolutions_leaves_queue() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cw");
    let output = run(&[
        "--config",
        &toy_config(),
        "crosswalk",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let queue = std::fs::read_to_string(out.join("adjudication_queue.txt")).unwrap();
    // t_gov_leader is zero-overridden via the config list; t_weaver stays
    assert_eq!(queue.trim(), "t_weaver");
}

#[test]
fn crosswalk_unresolved_transfer_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cw");
    let output = run(&[
        "--config",
        &toy_config(),
        "crosswalk",
        "--source-risk",
        &format!("{TOY}/source_risk.csv"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("t_weaver"), "stderr: {stderr}");
}

#[test]
fn regress_grouped_fit_prints_three_rows() {
    let single = stdout_of(&run(&[
        "--config",
        &toy_config(),
        "regress",
        "--response",
        "impact_rate",
        "--predictor",
        "size",
        "--log-x",
        "--scheme",
        "elite",
    ]));
    let lines: Vec<&str> = single.lines().collect();
    assert_eq!(lines[0], "group,beta,intercept,p_value,r_squared,n");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("pooled,"));
    assert!(lines[2].starts_with("elite,"));
    assert!(lines[3].starts_with("non-elite,"));
}

#[test]
fn regress_log_of_negative_metric_exits_one() {
    let output = run(&[
        "--config",
        &toy_config(),
        "regress",
        "--response",
        "net_population_gain",
        "--predictor",
        "size",
        "--log-y",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("not positive under log"), "stderr: {stderr}");
}

#[test]
fn regress_unknown_metric_lists_available() {
    let output = run(&[
        "--config",
        &toy_config(),
        "regress",
        "--response",
        "bogus",
        "--predictor",
        "size",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("available"), "stderr: {stderr}");
}

#[test]
fn metric_rca_json_mode_parses() {
    let single = stdout_of(&run(&["--config", &toy_config(), "--json", "metric", "rca"]));
    let rows: serde_json::Value = serde_json::from_str(&single).unwrap();
    assert!(rows.as_array().unwrap().len() > 50);
    assert!(rows[0]["rca"].is_number());
}

#[test]
fn core_specialized_cities_sit_higher_in_occupation_space() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let positions = std::fs::read_to_string(out.join("positions.csv")).unwrap();
    let position_of = |city: &str| -> f64 {
        positions
            .lines()
            .find(|l| l.starts_with(&format!("{city},")))
            .and_then(|l| l.split(',').nth(1))
            .unwrap()
            .parse()
            .unwrap()
    };
    // service-diversified cities are advantaged near the network core,
    // the farming-specialized city at its periphery
    assert!(position_of("Metropol") > position_of("Farmdale"));
    assert!(position_of("Harborview") > position_of("Farmdale"));
}

#[test]
fn metric_distance_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = report_into(dir.path());
    let from_report = std::fs::read_to_string(out.join("distances.csv")).unwrap();
    let single = stdout_of(&run(&["--config", &toy_config(), "metric", "distance"]));
    assert_eq!(single, from_report);
}
