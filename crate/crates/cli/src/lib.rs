//! Verification suites and data exports behind the `halphen` binary.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or output
//! cannot be written, 2 on a usage error.

pub mod config;
pub mod report;
pub mod suites;

use std::io::Write;
use std::time::Instant;

use config::{Format, RunConfig};
use report::RunReport;

pub struct RunOutput {
    pub report: RunReport,
    /// CSV data table, when the command produces one.
    pub table: Option<String>,
}

pub fn run(cfg: &RunConfig) -> RunOutput {
    let start = Instant::now();
    let mut params = suites::Params { map: Default::default() };
    let out = suites::dispatch(cfg, &mut params);
    let report = RunReport::new(&cfg.command, params.map, out.checks, start.elapsed().as_secs_f64());
    RunOutput { report, table: out.table }
}

fn render(cfg: &RunConfig, out: &RunOutput) -> String {
    match cfg.flags.format {
        Format::Json => out.report.to_json(),
        Format::Csv => out.table.clone().unwrap_or_else(|| out.report.checks_csv()),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match config::parse(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.is_informational() { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let out = run(&cfg);
    let text = render(&cfg, &out);
    let written = match &cfg.flags.out {
        Some(path) => std::fs::write(path, &text),
        None => stdout.write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return 1;
    }
    for c in out.report.checks.iter().filter(|c| !c.pass) {
        let _ = writeln!(stderr, "FAIL {}: {}", c.name, c.diagnostic.as_deref().unwrap_or("tolerance exceeded"));
    }
    out.report.exit_code()
}
