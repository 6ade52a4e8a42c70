use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
problem = "branin3"
max_evaluations = 12
seed = 1
delta_start = 8

[acquisition]
candidates = 200

[model]
restarts = 2
probe_points_per_dim = 50

[sweep]
delta_start = [8]
epsilon = [0.1]
"#;

fn maobo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maobo")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn run_writes_all_artifacts_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("run");
    let o = maobo(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.json", "front.csv", "reductions.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let (header, rows) = read_csv(&out.join("reductions.csv"));
    assert_eq!(header, ["iteration", "removed", "kept", "distance"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "8");

    let o = maobo(&["plotdata", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plots = out.join("plotdata");
    let (header, rows) = read_csv(&plots.join("posterior_t8_obj0.csv"));
    assert_eq!(header, ["x0", "x1", "mu", "variance"]);
    assert_eq!(rows.len(), 100);
    assert!(plots.join("posterior_t12_obj2.csv").is_file());
    assert!(!plots.join("posterior_t12_obj0.csv").exists());
    let (_, hv) = read_csv(&plots.join("hypervolume.csv"));
    assert_eq!(hv.len(), 12 - 5 + 1);
    let series: Vec<f64> = hv.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(series.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn one_dimensional_plotdata_has_x_and_mu() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
max_evaluations = 8
seed = 0

[problem]
bounds = [[-2.0, 2.0]]
objectives = [{ function = "parabola" }, { function = "michalewicz{m=50}" }]

[model]
restarts = 2
probe_points_per_dim = 40
"#,
    );
    let out = dir.path().join("run");
    assert!(maobo(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let o = maobo(&["plotdata", out.to_str().unwrap(), "--out", dir.path().join("p").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("p/posterior_t8_obj1.csv"));
    assert_eq!(&header[..2], ["x", "mu"]);
    assert_eq!(rows.len(), 40);
    let xs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn plotdata_names_the_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = maobo(&["plotdata", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("trace.json"));
}

#[test]
fn baseline_only_sweep_is_repeatable_and_has_empty_reduction_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut tables = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = maobo(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--no-reduction", "--seed", "4"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(fs::read(out.join("table.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let (header, rows) = read_csv(&dir.path().join("a/table.csv"));
    assert_eq!(header.len(), 10);
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!((row[0].as_str(), row[3].as_str()), ("baseline", "4"));
    assert!(row[5].is_empty() && row[6].is_empty() && row[7].is_empty());
    assert_eq!(row[9], "ok");
    assert!(dir.path().join("a/cells/seed4/baseline/trace.json").is_file());
}

#[test]
fn sweep_reports_gap_against_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("s");
    let o = maobo(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&out.join("table.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "reduction");
    assert_eq!(rows[1][5], "8");
    let gap: f64 = rows[1][7].parse().unwrap();
    assert!(gap >= 0.0);
    assert_eq!(rows[1][8].split(';').count(), 3);
}

#[test]
fn invalid_config_fails_with_the_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("delta_start = 8\n", "delta_start = 8\nepsilon = 1.5\n"));
    let o = maobo(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("epsilon") && err.contains("[0, 1]"), "{err}");

    let cfg = write_config(dir.path(), "problem = \"branin3\"\nmax_evaluations = 9\nseed = 0\nsede = 1\n");
    let o = maobo(&["run", "--config", &cfg]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(!o.status.success() && err.contains("line 4"), "{err}");
}

#[test]
fn similarity_study_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    fs::write(&cfg, "samples = 20\nprobe_points_per_dim = 30\nrestarts = 1\n").unwrap();
    let out = dir.path().join("sim");
    let o = maobo(&["similarity", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("similarity.csv"));
    assert_eq!(&header[..3], ["pair", "seed", "total"]);
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r[1] == "3"));
    let (_, means) = read_csv(&out.join("similarity_mean.csv"));
    assert_eq!(means.len(), 7);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["branin3.toml", "bowl4.toml", "michalewicz4.toml", "custom.toml"] {
        maobo_cli::config::ExperimentConfig::load(&dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    maobo_cli::study::load_study_config(&dir.join("similarity.toml")).unwrap();
}
