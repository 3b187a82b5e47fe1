//! Drives the command line in-process: commit, train-prove, verify, audit.
//! Equivalent to running the `zkaudit` binary with the same arguments.
//!
//!     cargo run --release --example cli_workflow [config.toml]

use std::path::PathBuf;

use zkaudit::cli::run_from;

fn main() -> anyhow::Result<()> {
    let config = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/desk.toml")
    });
    let out = tempfile::tempdir()?;
    let base = ["zkaudit", "--config", config.to_str().unwrap(), "--out-dir", out.path().to_str().unwrap()];

    let steps: [&[&str]; 6] = [
        &["commit"],
        &["train-prove"],
        &["verify"],
        &["audit", "censor", "--user", "0", "--item", "42"],
        &["verify", "--report", &out.path().join("audit-censor.json").display().to_string()],
        &["security-bits"],
    ];
    for args in steps {
        println!("$ zkaudit {}", args.join(" "));
        let code = run_from(base.iter().copied().chain(args.iter().copied()));
        println!("exit {code}\n");
        if code != 0 {
            anyhow::bail!("step failed with exit code {code}");
        }
    }
    for entry in std::fs::read_dir(out.path())? {
        let e = entry?;
        println!("{:>10}  {}", e.metadata()?.len(), e.file_name().to_string_lossy());
    }
    Ok(())
}
