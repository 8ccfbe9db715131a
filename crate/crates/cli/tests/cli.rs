use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sysvar_cli::formats::{read_network, read_scenarios, NetworkFile};
use sysvar_core::ApproxSet;

fn sysvar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sysvar"))
        .current_dir(dir)
        .env_remove("SYSVAR_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

const GEN: &str = "gen-network --nodes 20 --core-size 4 --theta 0.2 --eta 0.6 --zeta 0.2 --delta-in 0.5 \
                   --delta-out 0.5 --m 400,200,300,150 --seed 7 --edges-out edges.csv --out net.json";

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&sysvar(dir.path(), &words(GEN))), 0);
    let shocks = "sample-shocks --network net.json --nu 3 --beta 100,50 --rho 0.3 --n 30 --seed 3 --out scen.csv";
    assert_eq!(code(&sysvar(dir.path(), &words(shocks))), 0);
    dir
}

#[test]
fn generated_network_round_trips() {
    let dir = setup();
    let (net, grouping) = read_network(&dir.path().join("net.json")).unwrap();
    assert_eq!(net.dim(), 20);
    assert_eq!(grouping.sizes(), vec![4, 16]);
    let raw: Value = serde_json::from_slice(&std::fs::read(dir.path().join("net.json")).unwrap()).unwrap();
    for key in ["d", "pbar", "pi", "grouping"] {
        assert!(raw.get(key).is_some(), "missing {key}");
    }
    assert_eq!(raw["grouping"]["g"], 2);
    let file: NetworkFile = serde_json::from_value(raw).unwrap();
    assert_eq!(file, NetworkFile::new(&net, &grouping));

    let sc = read_scenarios(&dir.path().join("scen.csv"), 20).unwrap();
    assert_eq!(sc.len(), 30);
    let edges = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
    assert_eq!(edges.lines().next(), Some("source,target"));
}

#[test]
fn manifest_records_config_and_hashes() {
    let dir = setup();
    let m: Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["command"]["subcommand"], "sample-shocks");
    assert_eq!(m["config"]["command"]["n"], 30);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["versions"]["sysvar_core"], sysvar_core::VERSION);
    let art = &m["artifacts"][0];
    let bytes = std::fs::read(dir.path().join("scen.csv")).unwrap();
    assert_eq!(art["sha256"].as_str().unwrap(), sysvar_cli::output::sha256_hex(&bytes));
    // only the artifacts and the manifest, no leftover temporary files
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["edges.csv", "manifest.json", "net.json", "scen.csv"]);
}

#[test]
fn alpha_frac_scales_total_obligations() {
    let dir = setup();
    let (net, _) = read_network(&dir.path().join("net.json")).unwrap();
    let total = net.total_obligations();
    let frac = "scalarize --network net.json --scenarios scen.csv --alpha-frac 0.8 --lambda 0.2 --weights 1,1 --out a.json";
    assert_eq!(code(&sysvar(dir.path(), &words(frac))), 0);
    let alpha = format!("{}", 0.8 * total);
    let abs = format!("scalarize --network net.json --scenarios scen.csv --alpha {alpha} --lambda 0.2 --weights 1,1 --out b.json");
    assert_eq!(code(&sysvar(dir.path(), &words(&abs))), 0);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["feasible"], true);
}

#[test]
fn exit_codes() {
    let dir = setup();
    let missing = sysvar(dir.path(), &words("saa --network net.json --lambda 0.2 --epsilon 1 --algo 1 --out s.json"));
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("Usage"));

    let bad_theta = GEN.replace("--theta 0.2", "--theta 0.3");
    assert_eq!(code(&sysvar(dir.path(), &words(&bad_theta))), 2);
    assert_eq!(code(&sysvar(dir.path(), &words("clear --network net.json --x 1,2 --out c.json"))), 2);
    let negative = format!("clear --network net.json --x=-1{} --out c.json", ",0".repeat(19));
    assert_eq!(code(&sysvar(dir.path(), &words(&negative))), 2);

    let empty = "saa --network net.json --scenarios scen.csv --alpha-frac 1.01 --lambda 0.2 --epsilon 5 --algo 1 --out e.json";
    assert_eq!(code(&sysvar(dir.path(), &words(empty))), 3);
    let set: ApproxSet = serde_json::from_slice(&std::fs::read(dir.path().join("e.json")).unwrap()).unwrap();
    assert!(set.is_empty());

    // 2^20 default patterns exceed the enumeration limit
    let x = vec!["0"; 20].join(",");
    assert_eq!(code(&sysvar(dir.path(), &["enumerate", "--network", "net.json", "--x", &x, "--out", "q.json"])), 4);
    assert_eq!(code(&sysvar(dir.path(), &words("stats --network nowhere.json --out s.json"))), 1);
    assert_eq!(code(&sysvar(dir.path(), &["--help"])), 0);
}

#[test]
fn env_threads_override_flag() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_sysvar"))
        .current_dir(dir.path())
        .env("SYSVAR_THREADS", "0")
        .args(words("--threads 2 stats --network net.json --out s.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_sysvar"))
        .current_dir(dir.path())
        .env("SYSVAR_THREADS", "1")
        .args(words("--threads 2 --log-level info stats --network net.json --out s.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let log = String::from_utf8_lossy(&out.stderr);
    let start: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(start["fields"]["event"], "start");
    assert_eq!(start["fields"]["threads"], 1);
}

#[test]
fn set_and_staircase_round_trip() {
    let dir = setup();
    let saa = "saa --network net.json --scenarios scen.csv --alpha-frac 0.8 --lambda 0.2 --epsilon 40 --algo 1 \
               --ideal bisection --out set.json";
    assert_eq!(code(&sysvar(dir.path(), &words(saa))), 0);
    let raw: Value = serde_json::from_slice(&std::fs::read(dir.path().join("set.json")).unwrap()).unwrap();
    for key in ["epsilon", "box", "generators", "ideal"] {
        assert!(raw.get(key).is_some(), "missing {key}");
    }
    let set: ApproxSet = serde_json::from_value(raw).unwrap();
    assert!(!set.is_empty());

    assert_eq!(code(&sysvar(dir.path(), &words("plotdata --in set.json --out stair.csv"))), 0);
    let text = std::fs::read_to_string(dir.path().join("stair.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z1,z2"));
    let pts: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(pts.len(), 2 * set.generators.len() + 1);
    for w in pts.windows(2) {
        assert!(w[1][0] >= w[0][0] && w[1][1] <= w[0][1], "staircase must run right and down");
    }
}

#[test]
fn clearing_outputs_agree() {
    let dir = setup();
    assert_eq!(code(&sysvar(dir.path(), &words("clear --network net.json --x scen.csv --out fp.json"))), 0);
    assert_eq!(code(&sysvar(dir.path(), &words("clear --network net.json --x scen.csv --method lp --out lp.json"))), 0);
    let fp: Vec<Value> = serde_json::from_slice(&std::fs::read(dir.path().join("fp.json")).unwrap()).unwrap();
    let lp: Vec<Value> = serde_json::from_slice(&std::fs::read(dir.path().join("lp.json")).unwrap()).unwrap();
    assert_eq!(fp.len(), 30);
    for (a, b) in fp.iter().zip(&lp) {
        let a: Vec<f64> = serde_json::from_value(a["p"].clone()).unwrap();
        let b: Vec<f64> = serde_json::from_value(b["p"].clone()).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() <= 1e-7));
    }
}

#[test]
fn converge_csv_layout() {
    let dir = setup();
    let cmd = "converge --network net.json --nu 3 --beta 1000,500 --rho 0.3 --alpha-frac 0.9 --lambda 0.1 \
               --epsilon 40 --n-list 10,20 --n-ref 40 --seeds 2 --seed-base 5 --out conv.csv";
    assert_eq!(code(&sysvar(dir.path(), &words(cmd))), 0);
    let text = std::fs::read_to_string(dir.path().join("conv.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["seed", "N", "hausdorff_to_ref", "probe_1", "probe_2", "probe_3"]);
    assert_eq!(rows.len(), 1 + 2 * 2 + 2);
    assert_eq!(rows[1][0], "5");
    assert!(rows.iter().skip(1).all(|r| r[2].parse::<f64>().is_ok()));
    assert_eq!(rows.last().unwrap()[0], "median");
}
