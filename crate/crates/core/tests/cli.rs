use std::fs;
use std::path::{Path, PathBuf};

use tempfile::TempDir;
use zkaudit::cli::run_from;
use zkaudit::nn::VectorFile;

const CONFIG: &str = r#"
[model]
users = 12
items = 12
dim = 4
hidden = 8

[train]
learning_rate = 0.01
batch_size = 4
epochs = 2
init_seed = 1

[data]
synthetic = { ratings = 48, seed = 3 }

[proof]
salt_seed = "00112233445566778899aabbccddeeff"

[output]
dir = "out"
"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.toml"), config).unwrap();
        Run { dir }
    }

    fn path(&self, p: &str) -> PathBuf {
        self.dir.path().join(p)
    }

    fn zk(&self, args: &[&str]) -> u8 {
        let cfg = self.path("run.toml");
        let mut full = vec!["zkaudit".to_string(), "--config".into(), cfg.display().to_string()];
        full.extend(args.iter().map(|s| s.to_string()));
        run_from(full)
    }

    fn out(&self, f: &str) -> String {
        self.path("out").join(f).display().to_string()
    }

    fn trained(config: &str) -> Self {
        let r = Run::new(config);
        assert_eq!(r.zk(&["commit"]), 0);
        assert_eq!(r.zk(&["train-prove"]), 0);
        r
    }
}

fn edit(path: &Path, f: impl FnOnce(String) -> String) {
    let s = fs::read_to_string(path).unwrap();
    fs::write(path, f(s)).unwrap();
}

#[test]
fn commit_train_verify_accepts() {
    let r = Run::trained(CONFIG);
    for f in ["commitments.json", "transcript.zka.json", "weights.json"] {
        assert!(r.path("out").join(f).is_file(), "{f}");
    }
    assert_eq!(r.zk(&["verify"]), 0);
    assert_eq!(r.zk(&["verify", &r.out("transcript.zka.json")]), 0);
    // no stray temporaries from the atomic writes
    assert_eq!(fs::read_dir(r.path("out")).unwrap().count(), 3);
}

#[test]
fn tampered_transcript_is_rejected() {
    let r = Run::trained(CONFIG);
    let t = r.path("out/transcript.zka.json");
    edit(&t, |s| s.replacen("\"epoch\": 0", "\"epoch\": 1", 1));
    assert_eq!(r.zk(&["verify"]), 1);
}

#[test]
fn truncated_transcript_is_malformed() {
    let r = Run::trained(CONFIG);
    let t = r.path("out/transcript.zka.json");
    let s = fs::read_to_string(&t).unwrap();
    fs::write(&t, &s[..s.len() / 2]).unwrap();
    assert_eq!(r.zk(&["verify"]), 2);
    assert_eq!(r.zk(&["verify", "/nonexistent/t.zka.json"]), 2);
}

#[test]
fn config_errors_map_to_exit_codes() {
    let r = Run::new(CONFIG);
    assert_eq!(run_from(["zkaudit", "--config", "/nonexistent.toml", "commit"]), 2);
    assert_eq!(run_from(["zkaudit", "commit"]), 3);
    assert_eq!(run_from(["zkaudit", "no-such-command"]), 2);

    let bad = Run::new(&CONFIG.replace("hidden = 8", "hidden = 8\ncolor = \"red\""));
    assert_eq!(bad.zk(&["commit"]), 3);
    let bad = Run::new(&CONFIG.replace("learning_rate = 0.01", "learning_rate = 0.00001"));
    assert_eq!(bad.zk(&["commit"]), 3);
    // train-prove before commit has nothing to check the dataset against
    assert_ne!(r.zk(&["train-prove"]), 0);
}

#[test]
fn changed_dataset_is_a_commitment_mismatch() {
    let r = Run::new(CONFIG);
    assert_eq!(r.zk(&["commit"]), 0);
    edit(&r.path("run.toml"), |s| s.replace("seed = 3", "seed = 4"));
    assert_eq!(r.zk(&["train-prove"]), 5);
}

#[test]
fn out_of_range_value_aborts_with_capacity_code() {
    // 2^2 range bits cannot hold a rating of 5 at scale 2
    let cfg = CONFIG
        .replace("[train]", "[fixed_point]\nsf_log2 = 1\nrange_bits = 2\n\n[train]")
        .replace("learning_rate = 0.01", "learning_rate = 0.5");
    assert_eq!(Run::new(&cfg).zk(&["commit"]), 4);
}

#[test]
fn censorship_audit_and_report_verification() {
    let r = Run::trained(CONFIG);
    assert_eq!(r.zk(&["audit", "censor", "--user", "1", "--item", "2"]), 0);
    let report = r.out("audit-censor.json");
    assert_eq!(r.zk(&["verify", "--report", &report]), 0);
    assert_eq!(r.zk(&["audit", "censor", "--user", "1", "--item", "2", "--exhaustive", "--population", "0,2,4,6"]), 0);

    edit(Path::new(&report), |s| s.replacen("\"samples\": 4", "\"samples\": 5", 1));
    assert_eq!(r.zk(&["verify", "--report", &report]), 1);
    // unknown item
    assert_eq!(r.zk(&["audit", "censor", "--user", "1", "--item", "99"]), 3);
}

#[test]
fn modified_weights_do_not_open_the_commitment() {
    let r = Run::trained(CONFIG);
    let w = r.path("out/weights.json");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&w).unwrap()).unwrap();
    let mut v2 = v.clone();
    let x = v2["raw"][0][0][0].as_i64().unwrap();
    v2["raw"][0][0][0] = (x + 1).into();
    fs::write(&w, serde_json::to_string(&v2).unwrap()).unwrap();
    assert_eq!(r.zk(&["audit", "censor", "--user", "0", "--item", "0"]), 5);
    fs::write(&w, "{\"format\": \"something-else\"}").unwrap();
    assert_eq!(r.zk(&["audit", "censor", "--user", "0", "--item", "0"]), 2);
}

#[test]
fn copyright_and_demographic_audits() {
    let r = Run::trained(CONFIG);
    let feats = VectorFile {
        shape: vec![12, 3],
        scale_factor: 8192,
        data: (0..36).map(|i| ((i * 37) % 17 - 8) * 1024).collect(),
    };
    let claimant = VectorFile { shape: vec![3], scale_factor: 8192, data: feats.rows()[5].to_vec() };
    feats.write(&r.path("features.bin")).unwrap();
    claimant.write(&r.path("claimant.bin")).unwrap();
    let csv = r.path("verdicts.csv").display().to_string();
    let (fp, cp) = (r.path("features.bin").display().to_string(), r.path("claimant.bin").display().to_string());
    assert_eq!(r.zk(&["audit", "copyright", "--features", &fp, "--claimant", &cp, "--tau", "0.95", "--csv", &csv]), 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.lines().nth(6).unwrap().ends_with("flag"));
    assert_eq!(r.zk(&["verify", "--report", &r.out("audit-copyright.json")]), 0);
    assert_eq!(r.zk(&["audit", "copyright", "--features", &fp, "--claimant", &cp, "--tau", "1.5"]), 3);

    let labels: String = std::iter::once("item_id,category".to_string())
        .chain((0..12).map(|i| format!("{i},{}", i % 4)))
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(r.path("labels.csv"), labels).unwrap();
    let lp = r.path("labels.csv").display().to_string();
    assert_eq!(r.zk(&["audit", "demographic", "--labels", &lp, "--categories", "4"]), 0);
    assert_eq!(r.zk(&["verify", "--report", &r.out("audit-demographic.json")]), 0);
    assert_eq!(r.zk(&["audit", "demographic", "--labels", &lp, "--categories", "3"]), 3);
}

#[test]
fn counterfactual_by_dropping_an_item() {
    let r = Run::trained(CONFIG);
    assert_eq!(r.zk(&["audit", "counterfactual", "--item", "0", "--drop-item", "0", "--drop-fraction", "1.0"]), 0);
    let report = r.out("counterfactual.json");
    let b = r.out("counterfactual-b.zka.json");
    let a = r.out("counterfactual-a.zka.json");
    assert_eq!(r.zk(&["verify", &a, "--report", &report, "--transcript-b", &b]), 0);
    assert_eq!(r.zk(&["verify", &b, "--report", &report, "--transcript-b", &a]), 1);
}

#[test]
fn security_bits_runs() {
    assert_eq!(run_from(["zkaudit", "security-bits", "--dataset", "16", "--steps", "4"]), 0);
    let r = Run::new(CONFIG);
    assert_eq!(r.zk(&["security-bits"]), 0);
}
