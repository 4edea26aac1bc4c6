use std::path::Path;
use std::process::{Command, Output};

use hdc_cli::dataset::{parse_csv, Normalization, Schema};
use hdc_cli::params::{CliError, Ctx, Params};
use hdc_cli::runners::run_experiment;

fn hdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdc")).args(args).output().expect("spawn hdc")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[test]
fn csv_three_by_two() {
    let ds = parse_csv("1,2\n3,4\n5,6\n", &Schema::default()).unwrap();
    assert_eq!(ds.rows(), 3);
    assert_eq!(ds.dim(), 2);
    assert_eq!(ds.features[2], vec![5.0, 6.0]);
    assert!(ds.labels.is_none());
}

#[test]
fn csv_header_detected_and_minmax() {
    let sch = Schema { normalization: Normalization::MinMax, ..Default::default() };
    let ds = parse_csv("a,b,c\n1,7,0\n3,7,5\n2,7,10\n", &sch).unwrap();
    assert_eq!(ds.feature_names, vec!["a", "b", "c"]);
    let col = |c: usize| ds.features.iter().map(|r| r[c]).collect::<Vec<_>>();
    assert_eq!(col(0), vec![0.0, 1.0, 0.5]);
    assert_eq!(col(1), vec![0.0, 0.0, 0.0]);
    assert_eq!(col(2), vec![0.0, 0.5, 1.0]);
}

#[test]
fn csv_labels_coded_by_first_appearance() {
    let sch = Schema { label: Some("y".into()), ..Default::default() };
    let ds = parse_csv("x,y\n0.1,cat\n0.2,dog\n0.3,cat\n0.4,emu\n", &sch).unwrap();
    assert_eq!(ds.labels, Some(vec![0, 1, 0, 2]));
    assert_eq!(ds.label_names, vec!["cat", "dog", "emu"]);
    assert_eq!(ds.dim(), 1);

    let by_index = Schema { label: Some("0".into()), header: Some(false), ..Default::default() };
    let ds = parse_csv("b,1\na,2\nb,3\n", &by_index).unwrap();
    assert_eq!(ds.labels, Some(vec![0, 1, 0]));
    assert_eq!(ds.features, vec![vec![1.0], vec![2.0], vec![3.0]]);
}

#[test]
fn csv_errors() {
    let s = Schema::default();
    assert!(matches!(parse_csv("", &s), Err(CliError::Schema(_))));
    assert!(matches!(parse_csv("1,2\n3\n", &s), Err(CliError::Schema(_))));
    assert!(matches!(parse_csv("1,2\n3,x\n", &s), Err(CliError::Schema(_))));
    assert!(matches!(parse_csv("a,b\n", &s), Err(CliError::Schema(_))));
}

#[test]
fn unknown_experiment_and_missing_seed_are_schema_errors() {
    let ctx = Ctx::new(Params { seed: Some(1), ..Default::default() });
    assert!(matches!(run_experiment("no-such", &ctx), Err(CliError::Schema(_))));
    let unseeded = Ctx::new(Params::default());
    assert!(matches!(run_experiment("srp-distortion", &unseeded), Err(CliError::Schema(_))));
}

#[test]
fn caps_refuse_large_runs() {
    let ctx = Ctx::new(Params { seed: Some(1), d: Some(1 << 20), ..Default::default() });
    assert!(matches!(run_experiment("srp-distortion", &ctx), Err(CliError::Cap(_))));
    let ctx = Ctx::new(Params { seed: Some(1), trials: Some(1_000_000), ..Default::default() });
    assert!(matches!(run_experiment("set-decode", &ctx), Err(CliError::Cap(_))));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&hdc(&["run", "srp-distortion", "--pairs", "10"])), 2);
    assert_eq!(code(&hdc(&["run", "srp-distortion", "--bogus", "1"])), 2);
    assert_eq!(code(&hdc(&["run", "srp-distortion", "--seed", "1", "--d", "999999999"])), 3);
    assert_eq!(code(&hdc(&["run", "srp-distortion", "--seed", "1", "--pairs", "20", "--no-banner"])), 0);
    // Too few dimensions for the default s: the threshold check fails.
    assert_eq!(code(&hdc(&["run", "bloom-fpr", "--seed", "1", "--s", "50", "--d", "100", "--probes", "2000", "--no-banner"])), 1);
}

#[test]
fn run_is_reproducible_without_banner() {
    let args = ["run", "set-decode", "--m", "50", "--s", "3", "--trials", "8", "--sets", "5", "--seed", "11", "--no-banner"];
    let (a, b) = (hdc(&args), hdc(&args));
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("experiment,metric,measured,relation,bound,pass"));
    assert!(text.contains("set-decode-uniform,draw_failure_rate,"));

    let banner = hdc(&args[..args.len() - 1]);
    assert!(String::from_utf8(banner.stdout).unwrap().starts_with("# hdc "));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("out.jsonl");
    std::fs::write(&cfg, format!("experiment = \"srp-distortion\"\nformat = \"jsonl\"\nout = {:?}\nn = 8\nd = 512\npairs = 40\nseed = 5\n", out)).unwrap();
    let o = hdc(&["run", "--config", cfg.to_str().unwrap(), "--pairs", "30", "--no-banner"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.iter().filter(|v| v["type"] == "trial").count(), 30);
    assert!(lines.iter().any(|v| v["type"] == "summary" && v["metric"] == "within_fraction"));

    std::fs::write(&cfg, "experiment = \"srp-distortion\"\ncolour = 1\n").unwrap();
    assert_eq!(code(&hdc(&["run", "--config", cfg.to_str().unwrap()])), 2);
}

fn stats(path: &Path) -> String {
    let o = hdc(&["codebook", "stats", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn codebook_gen_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cb.hdc");
    let o = hdc(&["codebook", "gen", "--kind", "bipolar", "--m", "100", "--d", "1024", "--seed", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stats(&path);
    assert!(text.contains("kind bipolar\nm 100\nd 1024\nseed 1\n"));
    assert!(text.contains("L 32\n"));
    assert!(text.contains("kappa 1\n"));
    let mu: f64 = text.lines().find_map(|l| l.strip_prefix("mu_emp ")).unwrap().parse().unwrap();
    assert!(mu > 0.0 && mu < 0.25);

    let again = dir.path().join("cb2.hdc");
    hdc(&["codebook", "gen", "--kind", "bipolar", "--m", "100", "--d", "1024", "--seed", "1", "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());

    let sparse = dir.path().join("sp.hdc");
    let o = hdc(&["codebook", "gen", "--kind", "sparse", "--m", "20", "--d", "500", "--seed", "2", "--out", sparse.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "sparse needs --p");
    hdc(&["codebook", "gen", "--kind", "sparse", "--p", "0.1", "--m", "20", "--d", "500", "--seed", "2", "--out", sparse.to_str().unwrap()]);
    assert!(stats(&sparse).contains("kind sparse\n"));
}

#[test]
fn classify_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let mut text = String::from("f0,f1,label\n");
    for i in 0..60 {
        let t = i as f64 / 60.0;
        let (a, b, y) = if i % 3 == 0 { (0.1 + 0.1 * t, 0.8, "lo") } else { (0.9 - 0.1 * t, 0.2, "hi") };
        text += &format!("{a},{b},{y}\n");
    }
    std::fs::write(&path, text).unwrap();
    let o = hdc(&["run", "classify-prototypes", "--data", path.to_str().unwrap(), "--label-col", "label", "--d", "2048", "--seed", "4", "--no-banner"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("classify-prototypes,prototype_accuracy,1.0,info"));
}

#[test]
fn bloom_fixed_weight_at_optimal_size() {
    let ctx = Ctx::new(Params { seed: Some(3), s: Some(100), d: Some(959), hashes: Some(7), probes: Some(100_000), ..Default::default() });
    let rep = run_experiment("bloom-fpr", &ctx).unwrap();
    assert_eq!(rep.measured("false_negatives"), Some(0.0));
    assert!(rep.passed(), "{:?}", rep.failures());
}
