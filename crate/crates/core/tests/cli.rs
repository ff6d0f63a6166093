//! Drives the `fixforge` binary end to end: exit codes, JSON round trips, CSV output.

use std::path::Path;
use std::process::{Command, Output};

fn fixforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fixforge"))
        .args(args)
        .env_remove("FIXFORGE_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn gen_then_fix_every_class() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 6] = [
        ("general", &["--d", "3", "--eps", "1e-3"]),
        ("classical", &["--d", "5", "--eps", "1e-3"]),
        ("unitary", &["--d", "3", "--eps", "1e-6"]),
        ("mixed_unitary", &["--d", "3", "--eps", "1e-10"]),
        ("unital", &["--d", "3", "--eps", "1e-12"]),
        ("local_pure", &["--dims", "2,3", "--eps", "1e-6"]),
    ];
    for (class, extra) in cases {
        let inst = dir.path().join(format!("{class}.json"));
        let mut args = vec!["gen", class, "--seed", "7", "--out", inst.to_str().unwrap()];
        args.extend_from_slice(extra);
        let g = fixforge(&args);
        assert_eq!(code(&g), 0, "gen {class}: {}", String::from_utf8_lossy(&g.stderr));

        let out = dir.path().join(format!("{class}.fixed.json"));
        let f = fixforge(&["fix", class, "--instance", inst.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&f), 0, "fix {class}: {}", String::from_utf8_lossy(&f.stderr));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let residual = v["fixed_point_residual"].as_f64().unwrap();
        assert!(residual <= 1e-9, "{class}: residual {residual}");
    }
}

#[test]
fn fix_general_from_hand_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "rho.json", "[[[0.6, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.4, 0.0]]]");
    // Amplitude damping with γ = 0.01 moves diag(0.6, 0.4) by 0.004.
    let g: f64 = 0.01;
    let k0 = format!("[[[1,0],[0,0]],[[0,0],[{},0]]]", (1.0 - g).sqrt());
    let k1 = format!("[[[0,0],[{},0]],[[0,0],[0,0]]]", g.sqrt());
    let channel = write(
        dir.path(),
        "channel.json",
        &format!(r#"{{"kind": "kraus", "dim_in": 2, "dim_out": 2, "data": [{k0}, {k1}]}}"#),
    );
    let o = fixforge(&["fix", "general", "--state", &state, "--channel", &channel]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["epsilon_used"].as_f64().unwrap() - 0.004).abs() < 1e-12);
    assert!(v["state_distance_measured"].as_f64().unwrap() <= 0.004f64.sqrt() + 1e-9);

    // A promise below the measured deviation is an input error.
    let o = fixforge(&["fix", "general", "--state", &state, "--channel", &channel, "--eps", "1e-4"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn fix_classical_from_hand_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", "[1.0, 0.0]");
    // Columns: state 0 leaks 0.02 to state 1; state 1 is absorbing.
    let t = write(dir.path(), "t.json", "[[0.98, 0.02], [0.0, 1.0]]");
    let o = fixforge(&["fix", "classical", "--state", &p, "--channel", &t]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let eps = v["epsilon_used"].as_f64().unwrap();
    assert!((eps - 0.02).abs() < 1e-12);
    assert!(v["state_distance"].as_f64().unwrap() <= eps.sqrt() + 1e-10);
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(code(&fixforge(&["verify", "no_such_suite"])), 2);
    assert_eq!(code(&fixforge(&["gen", "no_such_class"])), 2);
    assert_eq!(code(&fixforge(&["counterexample", "tridiagonal", "--d", "2"])), 2);
    assert_eq!(code(&fixforge(&["fix", "general"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "[[[2.0, 0.0]]]");
    let ch = write(dir.path(), "id.json", r#"{"kind": "kraus", "dim_in": 1, "dim_out": 1, "data": [[[[1,0]]]]}"#);
    assert_eq!(code(&fixforge(&["fix", "general", "--state", &bad, "--channel", &ch])), 2);
}

#[test]
fn counterexamples_pass_and_print_facts() {
    for name in ["change_both", "optimality", "tridiagonal", "quantum", "bipartite", "linear"] {
        let o = fixforge(&["counterexample", name, "--d", "4", "--eps", "0.01"]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(!v["claimed_facts"].as_array().unwrap().is_empty(), "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("ok"));
    }
}

#[test]
fn verify_small_grid_writes_schema_and_honours_seed_env() {
    let header = "suite,class,d,d_env,epsilon,f_claim,f_meas,g_claim,g_cert_upper,g_cert_lower,residual,seed,pass";
    let run = |seed_env: Option<&str>, seed_flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fixforge"));
        cmd.args(["verify", "general", "--dims", "2,3", "--eps", "1e-3", "--n", "2"]).env_remove("FIXFORGE_SEED");
        if let Some(s) = seed_env {
            cmd.env("FIXFORGE_SEED", s);
        }
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        cmd.output().unwrap()
    };
    let a = run(Some("5"), None);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert_eq!(text.lines().next(), Some(header));
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(String::from_utf8_lossy(&a.stderr).contains("PASS"));

    let b = run(None, Some("5"));
    assert_eq!(a.stdout, b.stdout);
    let c = run(None, None);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn verify_every_suite_on_a_tiny_grid() {
    for (suite, dims, eps) in [
        ("classical", "2,4", "1e-3"),
        ("unitary", "2,3", "1e-6"),
        ("mixed_unitary", "2,3", "1e-10"),
        ("unital", "2,3", "1e-12"),
        ("local_pure", "2,3", "1e-6"),
        ("rotations", "3", "1e-2"),
        ("lemmas", "3", "1e-4"),
        ("counterexamples", "3,4", "1e-2"),
        ("scaling", "2,3", "1e-1,1e-2,1e-3"),
    ] {
        let o = fixforge(&["verify", suite, "--dims", dims, "--eps", eps, "--n", "2"]);
        assert_eq!(code(&o), 0, "{suite}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
