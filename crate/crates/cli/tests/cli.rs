use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn solver(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solver")).args(args).output().expect("spawn solver")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fp.json",
        r#"{"problem": "fokker_planck", "grid": {"n": 50}, "t_end": 0.5, "snapshots": [0, 0.5]}"#,
    );
    let mut texts = Vec::new();
    for out in ["a", "b"] {
        let o = dir.path().join(out);
        let res = solver(&["run", "-c", &cfg, "-o", o.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let mut names: Vec<_> = fs::read_dir(&o).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        texts.push(
            names
                .iter()
                .map(|n| fs::read(o.join(n)).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(texts[0].len(), 4);
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn snapshots_have_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_config(dir.path(), "one.json", r#"{"problem": "accuracy1d", "t_end": 0.1, "snapshots": [0.1]}"#);
    let res = solver(&["run", "-c", &one, "-o", dir.path().to_str().unwrap(), "--n", "30"]);
    assert!(res.status.success());
    let rows = data_rows(&dir.path().join("accuracy1d_snapshot_000.csv"));
    assert_eq!(rows.len(), 30);
    assert_eq!(rows[0].split(',').count(), 2);

    let two = write_config(
        dir.path(),
        "two.json",
        r#"{"problem": "accuracy2d", "prefix": "sq", "t_end": 0.05, "snapshots": [0, 0.05]}"#,
    );
    let res = solver(&["run", "-c", &two, "-o", dir.path().to_str().unwrap(), "--n", "6"]);
    assert!(res.status.success());
    let rows = data_rows(&dir.path().join("sq_snapshot_001.csv"));
    assert_eq!(rows.len(), 36);
    assert_eq!(rows[0].split(',').count(), 3);
    let energy = data_rows(&dir.path().join("sq_energy.csv"));
    assert!(energy.len() >= 2);
}

#[test]
fn convergence_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"problem": "accuracy1d", "t_end": 0.1}"#);
    let res = solver(&["converge", "-c", &cfg, "-o", dir.path().to_str().unwrap(), "--levels", "10,20"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(dir.path().join("accuracy1d_convergence.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# problem=accuracy1d"));
    assert_eq!(lines[1], "# N,tau,l1,l1_order,linf,linf_order");
    assert!(lines[2].starts_with("10,"));
    assert!(lines[3].starts_with("20,"));
    let order: f64 = lines[3].split(',').nth(3).unwrap().parse().unwrap();
    assert!((order - 2.0).abs() < 0.3, "order {order}");
    assert!(dir.path().join("accuracy1d_convergence.txt").exists());
}

#[test]
fn list_problems_names_every_builtin() {
    let res = solver(&["list-problems"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    for id in ["accuracy1d", "fokker_planck", "doi_onsager", "accuracy2d", "keller_segel", "touching_zero"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "missing {id}");
    }
}

#[test]
fn bad_configs_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"problem": "no_such_problem"}"#,
        r#"{"problem": "accuracy1d", "tau": {"rule": "fixed", "value": -1}}"#,
        r#"{"problem": "accuracy1d", "unknown_key": 1}"#,
        "not json",
    ];
    for (k, json) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{k}.json"), json);
        let res = solver(&["run", "-c", &cfg, "-o", dir.path().to_str().unwrap()]);
        assert!(!res.status.success(), "accepted {json}");
        assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
    }
    let res = solver(&["run", "-c", "/nonexistent/config.json"]);
    assert!(!res.status.success());
}

#[test]
fn no_limiter_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.json", r#"{"problem": "accuracy1d", "t_end": 0.05, "snapshots": []}"#);
    let res = solver(&["run", "-c", &cfg, "-o", dir.path().to_str().unwrap(), "--no-limiter", "--scheme", "second"]);
    assert!(res.status.success());
    let text = fs::read_to_string(dir.path().join("accuracy1d_energy.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("limiter=off") && header.contains("scheme=second"), "{header}");
}
