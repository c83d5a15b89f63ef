use std::process::{Command, Output};

fn ruin_asym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruin-asym"))
        .args(args)
        .env_remove("RUIN_ASYM_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn presets_are_listed_and_printable() {
    let list = ruin_asym(&["presets"]);
    assert!(list.status.success());
    assert_eq!(stdout(&list), "pareto-s4\nweibull-s4\n");
    let doc = ruin_asym(&["presets", "weibull-s4"]);
    assert!(stdout(&doc).contains("law = \"weibull(1, 0.3)\""));
    assert_eq!(ruin_asym(&["presets", "gamma"]).status.code(), Some(2));
}

#[test]
fn headers() {
    let sim = ruin_asym(&["simulate", "--samples", "1000", "--x-grid", "10,20"]);
    assert!(sim.status.success());
    let text = stdout(&sim);
    assert_eq!(text.lines().next(), Some("x,p_hat,ci_low,ci_high,n,seed"));
    assert_eq!(text.lines().count(), 3);

    let asym = ruin_asym(&["asymptotics", "--preset", "weibull-s4", "--x-grid", "100"]);
    assert_eq!(
        stdout(&asym).lines().next(),
        Some("x,first_order,corr_F,corr_G_tilde,corr_G,corr_F_tilde,remainder_scale,total_second_order,regime_flag")
    );
}

#[test]
fn scenario_files_and_output_paths() {
    let dir = std::env::temp_dir().join(format!("ruin-asym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("plain.toml");
    std::fs::write(
        &cfg,
        "[model]\nbyclaims = false\nr = 0.05\nt = 5\n\n[main_claim]\nlaw = \"pareto(1, 2.5)\"\n\n[interarrival]\nlaw = \"exp(1)\"\n",
    )
    .unwrap();
    let out = dir.join("cmp.csv");
    let run = ruin_asym(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "5000",
        "--x-grid",
        "20,40",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(!csv.lines().nth(1).unwrap().contains(",,"), "closed form applies: {csv}");

    std::fs::write(&cfg, "[model]\nbyclaims = true\nr = 0.1\nt = 10\n").unwrap();
    assert_eq!(ruin_asym(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(ruin_asym(&["simulate", "--t", "20"]).status.code(), Some(2));
    assert_eq!(ruin_asym(&["simulate", "--workers", "0"]).status.code(), Some(2));
    assert_eq!(ruin_asym(&["validate", "s2"]).status.code(), Some(0));
    assert_eq!(ruin_asym(&["validate", "s2", "--x-grid", "100,1000,10000"]).status.code(), Some(1));
    assert_eq!(ruin_asym(&["validate", "lemma62", "--mc-n", "10"]).status.code(), Some(4));
}

#[test]
fn thread_variable_overrides_workers() {
    let args = ["simulate", "--samples", "2000", "--x-grid", "15", "--workers", "3"];
    let env = Command::new(env!("CARGO_BIN_EXE_ruin-asym"))
        .args(["simulate", "--samples", "2000", "--x-grid", "15", "--workers", "7"])
        .env("RUIN_ASYM_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), stdout(&ruin_asym(&args)));
}
