use std::path::Path;
use std::process::{Command, Output};

use noma_core::bench::read_table;
use noma_core::channel::db_to_linear;
use noma_core::optimizer::bisect_allocate;
use noma_core::{AllocationProblem, Method, SystemConfig};

fn noma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noma"))
        .args(args)
        .output()
        .expect("run noma")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

#[test]
fn allocate_matches_library() {
    let o = noma(&[
        "allocate",
        "--n",
        "16",
        "--gain-weak-db",
        "5",
        "--gain-strong-db",
        "20",
        "--pmax",
        "4",
        "--r0",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);

    let cfg = SystemConfig::square(16, db_to_linear(5.0), db_to_linear(20.0)).unwrap();
    let r = bisect_allocate(&AllocationProblem::new(cfg, 4.0, 2.0)).unwrap();
    assert_eq!(field(&text, "p_2"), format!("{:.9e}", r.p_2));
    assert_eq!(field(&text, "sum"), format!("{:.9}", r.sum));
    assert_eq!(field(&text, "iterations"), r.iterations.to_string());
    assert_eq!(field(&text, "sic_ok"), "true");
    for key in ["p_1", "c_1", "c_2"] {
        field(&text, key);
    }
}

#[test]
fn monte_carlo_output_is_byte_identical() {
    let args = [
        "allocate", "--n", "8", "--method", "both", "--trials", "12", "--seed", "42",
    ];
    let a = noma(&args);
    let b = noma(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("method=monte-carlo-bisection"));
    assert!(stdout(&a).contains("method=asymptotic-bisection"));
}

#[test]
fn usage_errors_exit_2_and_name_the_problem() {
    let o = noma(&["allocate", "--frobnicate", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--frobnicate"));

    let o = noma(&["allocate", "--method", "magic"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("method"));

    let o = noma(&["sweep", "--axis", "height"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("axis"));

    let o = noma(&["allocate", "--epsilon", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("epsilon"));
}

#[test]
fn infeasible_rate_exits_1_with_bound() {
    let o = noma(&["allocate", "--r0", "500"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("infeasible") && err.contains("only reaches"),
        "{err}"
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# square setting\nn=8\npmax=2\nr0=1.5\n").unwrap();
    let path = cfg.to_str().unwrap();

    let from_file = stdout(&noma(&["allocate", "--config", path]));
    let explicit = stdout(&noma(&[
        "allocate", "--n", "8", "--pmax", "2", "--r0", "1.5",
    ]));
    assert_eq!(from_file, explicit);

    let overridden = stdout(&noma(&["allocate", "--config", path, "--pmax", "4"]));
    let expected = stdout(&noma(&[
        "allocate", "--n", "8", "--pmax", "4", "--r0", "1.5",
    ]));
    assert_eq!(overridden, expected);

    std::fs::write(&cfg, "pmx=2\n").unwrap();
    let o = noma(&["allocate", "--config", path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pmx"));
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = noma(&[
        "sweep",
        "--axis",
        "r0",
        "--values",
        "0,1,2,50",
        "--method",
        "both",
        "--trials",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_table(Path::new(&out)).unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0].method, Method::MonteCarlo.label());
    assert!(!rows[3].feasible && !rows[7].feasible);
    assert!(rows[4..7].windows(2).all(|w| w[1].sum <= w[0].sum));
}

#[test]
fn sweep_to_stdout_has_header() {
    let o = noma(&["sweep", "--axis", "weak-gain-db", "--values", "-5,0,5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with(
        "method,axis_value,p_1,p_2,c_1,c_2,sum,iterations,wall_time,feasible,sic_ok,std_error\n"
    ));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn bench_writes_timings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("timing.csv");
    let o = noma(&[
        "bench",
        "--sizes",
        "4,8",
        "--reps",
        "3",
        "--method",
        "both",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_table(&out).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.wall_time > 0.0 && r.iterations == 13));

    let o = noma(&["bench", "--reps", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reps"));
}

#[test]
fn validate_reports_each_check() {
    let o = noma(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for name in [
        "mp-normalization",
        "closed-form-vs-quadrature",
        "spectrum-histogram",
    ] {
        assert!(text.contains(&format!("PASS {name}")), "{text}");
    }
}
