//! Golden-file runner for the `xtl` binary.
//!
//! Each directory under `tests/golden/cases` holds `args` (one argument per
//! line, `{out}` replaced by a scratch file), `stdout` (compared byte for
//! byte), `code` (the exit status) and optionally `out` (the expected content
//! of the scratch file). Commands run inside `tests/golden/inputs`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub struct GoldenCase {
    pub name: String,
    dir: PathBuf,
}

pub fn golden_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn cases() -> Vec<GoldenCase> {
    let mut cases: Vec<GoldenCase> = fs::read_dir(golden_root().join("cases"))
        .expect("golden cases directory")
        .map(|entry| {
            let dir = entry.unwrap().path();
            GoldenCase {
                name: dir.file_name().unwrap().to_string_lossy().into_owned(),
                dir,
            }
        })
        .collect();
    cases.sort_by(|a, b| a.name.cmp(&b.name));
    cases
}

pub struct Observed {
    pub code: i32,
    pub subcommand: String,
}

impl GoldenCase {
    pub fn run(&self, binary: &Path, scratch: &Path) -> Result<Observed, String> {
        let read = |file: &str| fs::read(self.dir.join(file));
        let args = String::from_utf8(read("args").map_err(|e| format!("args: {e}"))?).unwrap();
        let out_file = scratch.join(format!("{}.out", self.name));
        let _ = fs::remove_file(&out_file);
        let args: Vec<String> = args
            .lines()
            .map(|a| a.replace("{out}", &out_file.to_string_lossy()))
            .collect();
        let output = Command::new(binary)
            .args(&args)
            .current_dir(golden_root().join("inputs"))
            .output()
            .map_err(|e| format!("spawn: {e}"))?;
        let code = output.status.code().ok_or("terminated by signal")?;
        let expected_code: i32 = String::from_utf8(read("code").map_err(|e| format!("code: {e}"))?)
            .unwrap()
            .trim()
            .parse()
            .map_err(|e| format!("code: {e}"))?;
        if code != expected_code {
            return Err(format!(
                "exit code {code}, expected {expected_code}; stderr: {}",
                String::from_utf8_lossy(&output.stderr)
            ));
        }
        let expected_stdout = read("stdout").map_err(|e| format!("stdout: {e}"))?;
        if output.stdout != expected_stdout {
            return Err(format!(
                "stdout differs\n--- expected\n{}--- actual\n{}",
                String::from_utf8_lossy(&expected_stdout),
                String::from_utf8_lossy(&output.stdout)
            ));
        }
        if let Ok(expected_out) = read("out") {
            let actual = fs::read(&out_file).map_err(|e| format!("output file: {e}"))?;
            if actual != expected_out {
                return Err(format!(
                    "output file differs\n--- expected\n{}--- actual\n{}",
                    String::from_utf8_lossy(&expected_out),
                    String::from_utf8_lossy(&actual)
                ));
            }
        }
        Ok(Observed {
            code,
            subcommand: args.first().cloned().unwrap_or_default(),
        })
    }
}
