use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shield::config::parse_str;
use shield::io::{sha256_hex, Manifest};

const BIN: &str = env!("CARGO_BIN_EXE_shield");

fn shield(args: &[&str], workers: Option<&str>) -> Output {
    let mut c = Command::new(BIN);
    c.args(args);
    match workers {
        Some(w) => c.env("SHIELD_WORKERS", w),
        None => c.env_remove("SHIELD_WORKERS"),
    };
    c.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_ok(args: &[&str], workers: Option<&str>) {
    let o = shield(args, workers);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir`, relative path and bytes, sorted.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

const SMALL: &str = "[victim]\nkey_bits = 128\n[experiment]\nseed = 42\ntraces = 3\n";

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("[monitor]\nm = 24\n[experiment]\nseed = 1\n", "monitor.m"),
        ("[defense]\nmode = \"shield\"\n[experiment]\nseed = 1\n", "defense.theta0"),
        ("[defense]\nmode = \"shield\"\ntheta0 = 590.0\n[experiment]\nseed = 1\n", "defense.delta"),
        ("[victim]\nlocation = [64, 0]\n[experiment]\nseed = 1\n", "victim.location"),
        ("[defense]\nlocation = [3, 99]\n[experiment]\nseed = 1\n", "defense.location"),
        ("[monitor]\nro_locations = [[1, 1], [80, 2]]\n[experiment]\nseed = 1\n", "monitor.ro_locations[1]"),
        ("[monitor]\nm = \"many\"\n[experiment]\nseed = 1\n", "monitor.m"),
        ("[pdn]\nr_eff = 0.1\nbogus = 2\n[experiment]\nseed = 1\n", "pdn.bogus"),
        ("[nonsense]\nx = 1\n[experiment]\nseed = 1\n", "nonsense"),
        ("[defense]\nmode = \"loud\"\n[experiment]\nseed = 1\n", "defense.mode"),
        ("[monitor]\nplacement = \"nearby\"\n[experiment]\nseed = 1\n", "monitor.placement"),
        ("[monitor]\nm = 32\n", "experiment"),
        ("[experiment]\ntrials = 3\n", "experiment.seed"),
        ("[experiment]\nseed = 1\ntrials = 0\n", "experiment.trials"),
        ("[defense]\np_set = 0.2\n[experiment]\nseed = 1\n", "defense.p_set"),
        ("[victim]\nkey = \"zz\"\n[experiment]\nseed = 1\n", "victim.key"),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.toml"), text);
        let out = dir.path().join(format!("o{i}"));
        let o = shield(&["simulate", s(&cfg), "--out", s(&out), "--traces", "1"], Some("1"));
        assert_eq!(o.status.code(), Some(2), "case {i}: {text}");
        let err = String::from_utf8_lossy(&o.stderr);
        let line = err.lines().last().unwrap();
        assert!(line.starts_with("shield-error kind=config exit=2"), "{line}");
        assert!(line.contains(&format!("key={key:?}")), "case {i}: expected key {key}, got {line}");
    }
}

#[test]
fn shield_mode_resolves_with_auto_calibration() {
    let text = "[defense]\nmode = \"shield\"\nauto_calibrate = true\n[victim]\nkey_bits = 64\n[experiment]\nseed = 1\n";
    let res = parse_str(text).unwrap().resolve().unwrap();
    let d = &res.config.defense;
    assert!(d.theta0.is_some() && d.delta.is_some());
    assert_eq!(d.p_set, Some(res.config.victim.p_mult / d.sets as f64));
}

#[test]
fn minimal_config_is_fully_defaulted_and_hash_is_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.toml", "[experiment]\nseed = 42\n");
    let out = dir.path().join("out");
    run_ok(&["simulate", s(&cfg), "--out", s(&out), "--traces", "1"], Some("1"));
    let m = Manifest::read(&out.join("manifest.toml")).unwrap();
    let c = &m.config;
    assert_eq!((c.floorplan.width, c.floorplan.height), (64, 64));
    assert_eq!(c.monitor.placement, "close2");
    assert_eq!((c.monitor.m, c.monitor.f_ref), (32, 10e6));
    assert_eq!(c.victim.key_bits, 1024);
    assert_eq!(c.victim.key.as_deref(), Some(m.key.as_str()));
    assert_eq!(m.seed, 42);
    assert_eq!(sha256_hex(toml::to_string(c).unwrap().as_bytes()), m.config_hash);
    for f in &m.outputs {
        assert_eq!(sha256_hex(&fs::read(out.join(&f.path)).unwrap()), f.sha256);
    }
    let trace = fs::read_to_string(out.join("traces/trace_0000.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("# scenario_id: none"));
    assert!(lines.next().unwrap().starts_with("# seed: "));
    assert_eq!(lines.next().map(str::to_string), Some(format!("# config_hash: {}", m.config_hash)));
    assert_eq!(lines.next(), Some("tick_index,sample"));
}

#[test]
fn simulate_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[defense]\nmode = \"shield\"\nauto_calibrate = true\n[victim]\nkey_bits = 128\n[experiment]\nseed = 42\ntraces = 6\n",
    );
    let mut snaps = Vec::new();
    for (i, w) in ["1", "1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        run_ok(&["simulate", s(&cfg), "--out", s(&out)], Some(w));
        snaps.push(snapshot(&out));
    }
    assert_eq!(snaps[0].len(), 6 * 2 + 1);
    assert_eq!(snaps[0], snaps[1]);
    assert_eq!(snaps[0], snaps[2]);
    let events = String::from_utf8(snaps[0].iter().find(|(p, _)| p.ends_with("events_0000.csv")).unwrap().1.clone())
        .unwrap();
    assert!(events.starts_with("sample_index,event,active_k,threshold\n"));
    assert!(events.contains(",DETECT,1,"));
}

#[test]
fn offline_attack_matches_in_process_attack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[attacker]\ntraces = 3\n[victim]\nkey_bits = 256\n[experiment]\nseed = 5\ntraces = 3\n",
    );
    let sim = dir.path().join("sim");
    let online = dir.path().join("online");
    let offline = dir.path().join("offline");
    run_ok(&["simulate", s(&cfg), "--out", s(&sim)], Some("2"));
    run_ok(&["attack", s(&cfg), "--out", s(&online)], Some("1"));
    run_ok(
        &["attack", s(&cfg), "--out", s(&offline), "--traces", s(&sim.join("traces"))],
        Some("1"),
    );
    let strip = |p: &Path| {
        fs::read_to_string(p)
            .unwrap()
            .replace("simulated,", "")
            .replace("offline,", "")
    };
    assert_eq!(strip(&online.join("attack.csv")), strip(&offline.join("attack.csv")));
    assert_eq!(
        fs::read(online.join("attack_bits.csv")).unwrap(),
        fs::read(offline.join("attack_bits.csv")).unwrap()
    );
}

#[test]
fn offline_attack_rejects_foreign_traces() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.toml", "[victim]\nkey_bits = 64\n[experiment]\nseed = 5\ntraces = 1\n");
    let b = write_config(dir.path(), "b.toml", "[victim]\nkey_bits = 96\n[experiment]\nseed = 5\n");
    let sim = dir.path().join("sim");
    run_ok(&["simulate", s(&a), "--out", s(&sim)], Some("1"));
    let o = shield(
        &["attack", s(&b), "--out", s(&dir.path().join("x")), "--traces", s(&sim.join("traces"))],
        Some("1"),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind=runtime"));
}

#[test]
fn tvla_crosses_earlier_without_defense() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[defense]\nauto_calibrate = true\n[victim]\nkey_bits = 256\n[experiment]\nseed = 11\ntvla_runs = 3\ntvla_max_pairs = 400\n",
    );
    let out = dir.path().join("out");
    run_ok(
        &["evaluate", s(&cfg), "--out", s(&out), "--metric", "tvla", "--variants", "none,shield"],
        None,
    );
    let summary = fs::read_to_string(out.join("tvla_summary.csv")).unwrap();
    let median = |variant: &str| -> usize {
        let row = summary.lines().find(|l| l.starts_with(&format!("{variant},"))).unwrap();
        row.split(',').nth(2).unwrap().parse().unwrap()
    };
    assert!(median("none") < median("shield"), "{summary}");
    let plot = fs::read_to_string(out.join("tvla_plot.csv")).unwrap();
    assert!(plot.starts_with("variant,run,pairs,t_max\n"));
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let first = dir.path().join("first");
    run_ok(&["evaluate", s(&cfg), "--out", s(&first), "--metric", "overhead"], Some("1"));
    // the manifest alone suffices: move it away from everything else
    let lone = dir.path().join("lone.toml");
    fs::copy(first.join("manifest.toml"), &lone).unwrap();
    let again = dir.path().join("again");
    run_ok(&["replay", s(&lone), "--out", s(&again)], Some("3"));
    assert_eq!(snapshot(&first), snapshot(&again));

    let text = fs::read_to_string(&lone).unwrap();
    let pos = text.find("sha256 = \"").unwrap() + 10;
    let mut tampered = text.clone();
    let flip = if &text[pos..pos + 1] == "0" { "1" } else { "0" };
    tampered.replace_range(pos..pos + 1, flip);
    fs::write(&lone, tampered).unwrap();
    let o = shield(&["replay", s(&lone), "--out", s(&dir.path().join("bad"))], Some("1"));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("differs"));
}

#[test]
fn calibration_is_midpoint_and_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[defense]\nmode = \"shield\"\n[victim]\nkey_bits = 256\n[experiment]\nseed = 3\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["calibrate", s(&cfg), "--out", s(&a)], Some("1"));
    run_ok(&["calibrate", s(&a.join("calibrated.toml")), "--out", s(&b)], Some("1"));
    assert_eq!(
        fs::read(a.join("calibrated.toml")).unwrap(),
        fs::read(b.join("calibrated.toml")).unwrap()
    );
    let csv = fs::read_to_string(a.join("calibration.csv")).unwrap();
    let v: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(v[0], (v[2] + v[3]) / 2.0);
    assert!(v[1] > 0.0 && v[2] > v[3]);
    // the calibrated file runs in shield mode without auto-calibration
    run_ok(
        &["simulate", s(&a.join("calibrated.toml")), "--out", s(&dir.path().join("sim")), "--traces", "1"],
        Some("1"),
    );
}

#[test]
fn calibration_without_contrast_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[victim]\np_square = 0.3\np_mult = 0.3\nkey_bits = 64\n[experiment]\nseed = 3\n",
    );
    let o = shield(&["calibrate", s(&cfg), "--out", s(&dir.path().join("a"))], Some("1"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("calibration impossible"));
}

#[test]
fn every_metric_writes_csv_plot_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[defense]\nauto_calibrate = true\n[victim]\nkey_bits = 64\n\
         [experiment]\nseed = 8\ntrials = 2\nn_max = 300\ntvla_runs = 1\ntvla_max_pairs = 30\ncorr_traces = 4\nreaction_runs = 1\n",
    );
    for (metric, plot, header) in [
        ("effort", "effort_plot.csv", "variant,mean_traces"),
        ("tvla", "tvla_plot.csv", "variant,run,pairs,t_max"),
        ("corr", "corr_plot.csv", "variant,pair_index,coefficient"),
        ("overhead", "overhead_plot.csv", "variant,ff,power_w"),
        ("success", "success_plot.csv", "variant,success_rate"),
        ("reaction", "reaction_plot.csv", "f_ref_mhz,mean_reaction"),
    ] {
        let out = dir.path().join(metric);
        run_ok(&["evaluate", s(&cfg), "--out", s(&out), "--metric", metric], Some("2"));
        let text = fs::read_to_string(out.join(plot)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{metric}");
        let m = Manifest::read(&out.join("manifest.toml")).unwrap();
        assert!(m.outputs.iter().any(|f| f.path == plot));
    }
}

#[test]
fn bad_worker_override_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let o = shield(&["simulate", s(&cfg), "--out", s(&dir.path().join("o"))], Some("zero"));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("SHIELD_WORKERS"));
}
