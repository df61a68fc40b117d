use std::fs;
use std::path::Path;
use std::process::Command;

use steinhaus_lab::artifact::{self, ConcentrationArtifact, EnergyArtifact, HarperArtifact, SimulateArtifact};
use steinhaus_lab::cli::run;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn lab(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("rmf-lab").chain(args.iter().copied()), &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate_to(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--n", "1000", "--set", "interval", "--mode", "raw", "--reps", "10", "--seed", "1"];
    // Flags in `extra` replace the defaults above.
    for pair in extra.chunks(2) {
        match args.iter().position(|a| *a == pair[0]) {
            Some(i) => args[i + 1] = pair[1],
            None => args.extend_from_slice(pair),
        }
    }
    args.extend_from_slice(&["--out", p(path)]);
    lab(&args)
}

#[test]
fn smoke_simulate_writes_artifact_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let r = simulate_to(&out, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let a: SimulateArtifact = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(a.header.schema_version, artifact::SCHEMA_VERSION);
    assert_eq!(a.header.command, "simulate");
    assert_eq!(a.plan.n, 1000);
    assert_eq!(a.plan.set, "interval");
    assert_eq!(a.plan.set_size, 1000);
    assert_eq!(a.plan.mode, "raw");
    assert_eq!(a.plan.reps, 10);
    assert_eq!(a.plan.seed, 1);
    assert_eq!(a.histogram.counts.len(), a.histogram.bins);
    assert_eq!(a.histogram.counts.iter().sum::<u64>() + a.histogram.overflow, 10);
    assert!(a.runtime_seconds.is_none());
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_rmf-lab");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let ok = Command::new(exe)
        .args(["simulate", "--n", "1000", "--set", "interval", "--mode", "raw", "--reps", "10", "--seed", "1", "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(out.exists());

    let zero = dir.path().join("zero.json");
    let bad = Command::new(exe)
        .args(["simulate", "--n", "0", "--set", "interval", "--mode", "raw", "--reps", "10", "--seed", "1", "--out", p(&zero)])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(!zero.exists());
    assert!(!bad.stderr.is_empty());

    let count = Command::new(exe).args(["energy", "--n", "4", "--mode", "cross", "--count-only"]).output().unwrap();
    assert_eq!(count.status.code(), Some(0));
    assert_eq!(String::from_utf8(count.stdout).unwrap().trim(), "2");
}

#[test]
fn usage_errors_exit_one_with_full_usage() {
    let r = lab(&["simulate", "--n", "0", "--set", "interval", "--reps", "10", "--seed", "1"]);
    assert_eq!(r.code, 1);
    let r = lab(&["simulate", "--n", "100", "--set", "interval", "--reps", "10", "--seed", "1", "--bogus"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("--bogus"));
    for sub in ["simulate", "harper", "energy", "concentrate", "sieve-debug", "phases", "report"] {
        assert!(r.stderr.contains(sub), "usage text lacks `{sub}`");
    }
    // Seeds are mandatory.
    assert_eq!(lab(&["simulate", "--n", "100", "--set", "interval", "--reps", "10"]).code, 1);
    assert_eq!(lab(&["simulate", "--n", "100", "--set", "nope", "--reps", "10", "--seed", "1"]).code, 1);
    assert_eq!(lab(&["simulate", "--n", "100", "--set", "interval", "--reps", "10", "--seed", "1", "--threads", "0"]).code, 1);
    assert_eq!(lab(&["simulate", "--n", "100", "--set", "interval", "--mode", "dc", "--reps", "10", "--seed", "1"]).code, 1);
    assert_eq!(lab(&["energy", "--n", "4", "--mode", "cross"]).code, 1);
    assert_eq!(lab(&["energy", "--n", "4", "--mode", "cross", "--count-only", "--weights", "bernoulli:0.5:1"]).code, 1);
    assert_eq!(lab(&["frobnicate"]).code, 1);
}

#[test]
fn resource_guards_exit_two() {
    let r = lab(&["simulate", "--n", "1000", "--set", "interval", "--reps", "10", "--seed", "1", "--work-limit", "9999"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert_eq!(lab(&["simulate", "--n", "200000000", "--set", "interval", "--reps", "1", "--seed", "1"]).code, 2);
    assert_eq!(lab(&["energy", "--n", "6000", "--mode", "cross", "--count-only"]).code, 2);
    assert_eq!(lab(&["energy", "--n", "60", "--mode", "cross", "--count-only", "--cap", "50"]).code, 2);
    assert_eq!(lab(&["phases", "--n", "10001", "--seed", "1"]).code, 2);
    assert_eq!(lab(&["harper", "--x-grid", "100,1000", "--reps", "100000000", "--seed", "1"]).code, 2);
}

#[test]
fn help_and_version_exit_zero() {
    let h = lab(&["--help"]);
    assert_eq!(h.code, 0);
    assert!(h.stdout.contains("simulate"));
    let v = lab(&["--version"]);
    assert_eq!(v.code, 0);
    assert!(v.stdout.contains("rmf-lab"));
    assert!(v.stdout.contains(env!("CARGO_PKG_VERSION")));
    assert!(v.stdout.contains("schema 1"));
}

#[test]
fn energy_counts_and_weighted_artifact() {
    for mode in ["cross", "lind"] {
        let r = lab(&["energy", "--n", "4", "--mode", mode, "--count-only"]);
        assert_eq!(r.code, 0);
        assert_eq!(r.stdout, "2\n");
        let r = lab(&["energy", "--n", "4", "--mode", mode, "--count-only", "--exclude-swaps"]);
        assert_eq!(r.stdout, "0\n");
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.json");
    let r = lab(&["energy", "--n", "200", "--mode", "cross", "--weights", "bernoulli:0.5:3", "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let a: EnergyArtifact = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(a.header.command, "energy");
    assert!(a.exact_count > 0);
    assert_eq!(a.plan.weights.as_deref(), Some("bernoulli:0.5:3"));
    let (sum, norm, ratio) = (a.weighted_sum.unwrap(), a.normalizer.unwrap(), a.ratio.unwrap());
    assert!(norm > 0.0);
    assert!((ratio - sum / norm).abs() <= 1e-12 * ratio.abs().max(1.0));
}

#[test]
fn every_artifact_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("s.json");
    assert_eq!(simulate_to(&sim, &["--set", "bernoulli:0.3:4", "--mode", "centered"]).code, 0);
    let text = fs::read_to_string(&sim).unwrap();
    let parsed: SimulateArtifact = serde_json::from_str(&text).unwrap();
    assert_eq!(artifact::to_json(&parsed).unwrap(), text);

    let har = dir.path().join("h.json");
    assert_eq!(lab(&["harper", "--x-grid", "10,100,1000", "--reps", "20", "--seed", "2", "--out", p(&har)]).code, 0);
    let text = fs::read_to_string(&har).unwrap();
    let parsed: HarperArtifact = serde_json::from_str(&text).unwrap();
    assert_eq!(artifact::to_json(&parsed).unwrap(), text);

    let en = dir.path().join("e.json");
    assert_eq!(lab(&["energy", "--n", "50", "--mode", "lind", "--weights", "bernoulli:0.5:1", "--out", p(&en)]).code, 0);
    let text = fs::read_to_string(&en).unwrap();
    let parsed: EnergyArtifact = serde_json::from_str(&text).unwrap();
    assert_eq!(artifact::to_json(&parsed).unwrap(), text);

    let con = dir.path().join("c.json");
    let r = lab(&["concentrate", "--n-grid", "20,40,80", "--rho", "0.5", "--reps", "5", "--seed", "3", "--format", "json", "--out", p(&con)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(&con).unwrap();
    let parsed: ConcentrationArtifact = serde_json::from_str(&text).unwrap();
    assert_eq!(artifact::to_json(&parsed).unwrap(), text);
    assert!(parsed.exponent.is_some());
}

#[test]
fn same_config_reproduces_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = ["--n", "5000", "--set", "primes", "--rho", "0.2", "--reps", "40", "--seed", "99"];
    assert_eq!(simulate_to(&a, &args).code, 0);
    assert_eq!(simulate_to(&b, &args).code, 0);
    let (ta, tb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    // The out path is part of the recorded config; everything else matches.
    assert_eq!(ta.replace("a.json", "b.json"), tb);
    let other = dir.path().join("c.json");
    assert_eq!(simulate_to(&other, &["--seed", "100"]).code, 0);
    let c: SimulateArtifact = serde_json::from_str(&fs::read_to_string(&other).unwrap()).unwrap();
    let d: SimulateArtifact = serde_json::from_str(&tb).unwrap();
    assert_ne!(c.m2, d.m2);
}

#[test]
fn thread_counts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (one, eight) = (dir.path().join("t1.json"), dir.path().join("t8.json"));
    let args = ["--n", "20000", "--set", "bernoulli:0.5:7", "--mode", "centered", "--reps", "64", "--seed", "5"];
    assert_eq!(simulate_to(&one, &[&args[..], &["--threads", "1"]].concat()).code, 0);
    assert_eq!(simulate_to(&eight, &[&args[..], &["--threads", "8"]].concat()).code, 0);
    let a: SimulateArtifact = serde_json::from_str(&fs::read_to_string(&one).unwrap()).unwrap();
    let mut b: SimulateArtifact = serde_json::from_str(&fs::read_to_string(&eight).unwrap()).unwrap();
    b.plan.threads = a.plan.threads;
    b.plan.out = a.plan.out.clone();
    assert_eq!(a, b);
}

#[test]
fn csv_projections() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("s.csv");
    assert_eq!(simulate_to(&sim, &["--format", "csv"]).code, 0);
    let text = fs::read_to_string(&sim).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("statistic,value"));
    let names: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    for want in ["m1", "m2", "pseudo_m2_re", "pseudo_m2_im", "m4", "se_m2", "ks_re", "ks_im"] {
        assert!(names.contains(&want), "missing {want}");
    }

    let r = lab(&["harper", "--x-grid", "10,100", "--reps", "5", "--seed", "1", "--format", "csv"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout.lines().next(), Some("x,ratio,se"));
    assert_eq!(r.stdout.lines().count(), 3);

    let con = dir.path().join("c.csv");
    let r = lab(&["concentrate", "--n-grid", "20,40,80", "--rho", "0.5", "--reps", "4", "--seed", "1", "--out", p(&con)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stderr.contains("growth exponent"));
    let text = fs::read_to_string(&con).unwrap();
    assert_eq!(text.lines().next(), Some("N,mean_sq,se,target,ratio"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn file_sets_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set.txt");
    fs::write(&set, "1\n2\n3\n5\n8\n13\n").unwrap();
    let out = dir.path().join("o.json");
    let spec = format!("file:{}", p(&set));
    let r = lab(&["simulate", "--n", "20", "--set", &spec, "--reps", "3", "--seed", "1", "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let a: SimulateArtifact = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(a.plan.set_size, 6);
    assert!((a.plan.rho - 0.3).abs() < 1e-15);

    fs::write(&set, "1\nx\n").unwrap();
    let r = lab(&["simulate", "--n", "20", "--set", &spec, "--reps", "3", "--seed", "1"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("set.txt"));
}

#[test]
fn debug_subcommands() {
    let r = lab(&["sieve-debug", "--n", "100", "12", "97", "1"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("12: spf = 2, P = 3, 12 = 2^2 * 3"));
    assert!(r.stdout.contains("97: spf = 97, P = 97"));
    assert!(r.stdout.contains("1: spf = 1, P = 1, 1 = 1"));
    assert!(lab(&["sieve-debug", "--n", "100"]).stdout.contains("primes = 25"));
    assert_eq!(lab(&["sieve-debug", "--n", "10", "11"]).code, 1);

    let r = lab(&["phases", "--n", "12", "--seed", "4"]);
    assert_eq!(r.code, 0);
    let rows: Vec<Vec<String>> =
        r.stdout.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 12);
    let bits = |n: usize| rows[n - 1][2].parse::<u64>().unwrap();
    assert_eq!(bits(1), 0);
    assert_eq!(bits(12), bits(4).wrapping_add(bits(3)));
    assert_eq!(bits(4), bits(2).wrapping_add(bits(2)));
}

#[test]
fn report_merges_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(simulate_to(&a, &["--reps", "30"]).code, 0);
    assert_eq!(simulate_to(&b, &["--reps", "30", "--seed", "2"]).code, 0);

    let single = lab(&["report", p(&a)]);
    assert_eq!(single.code, 0, "{}", single.stderr);
    let lines: Vec<&str> = single.stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], artifact::REPORT_COLUMNS.join(","));
    assert!(lines[2].starts_with("target,\"CN(0,1)\","));

    let out = dir.path().join("r.csv");
    assert_eq!(lab(&["report", p(&a), p(&b), "--out", p(&out)]).code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    // Plan columns agree apart from the seed; statistics differ.
    assert_eq!(rows[0][1..6], rows[1][1..6]);
    assert_ne!(rows[0][7], rows[1][7]);
    assert_ne!(rows[0][8], rows[1][8]);

    let stale = dir.path().join("stale.json");
    fs::write(&stale, fs::read_to_string(&a).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7")).unwrap();
    let r = lab(&["report", p(&a), p(&stale)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("stale.json"));

    let energy = dir.path().join("energy.json");
    assert_eq!(lab(&["energy", "--n", "10", "--mode", "cross", "--count-only", "--out", p(&energy)]).code, 0);
    let r = lab(&["report", p(&energy)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("energy.json"));

    let junk = dir.path().join("junk.json");
    fs::write(&junk, "not json").unwrap();
    let r = lab(&["report", p(&junk)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("junk.json"));
}
