//! Deterministic CSV assembly: fixed float formatting, a `# params:`
//! comment echoing every effective parameter, no timestamps.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// 15 significant digits, lowercase `e` exponent.
pub fn fmt_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x }; // normalize -0.0
    format!("{:.14e}", x)
}

/// Shortest round-trip form for the params echo line.
pub fn fmt_param(x: f64) -> String {
    format!("{}", x)
}

pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    /// Start a CSV with the `# params:` echo (pairs are printed sorted by
    /// key) and the header row.
    pub fn new(params: &[(&str, String)], header: &str) -> Csv {
        let mut pairs: Vec<String> =
            params.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
        pairs.sort();
        Csv { lines: vec![format!("# params: {}", pairs.join(" ")), header.to_string()] }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.lines.push(fields.join(","));
    }

    /// Render; rejects non-finite numbers anywhere in the body.
    pub fn render(&self) -> Result<String, CliError> {
        for line in &self.lines[2..] {
            if line.contains("NaN") || line.contains("inf") {
                return Err(CliError::Numeric(format!("non-finite value in output: {}", line)));
            }
        }
        Ok(format!("{}\n", self.lines.join("\n")))
    }
}

/// Write to `out` when given, otherwise to stdout.
pub fn deliver(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {}", path.display(), e))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Numeric(format!("stdout: {}", e)))
        }
    }
}

/// Human-readable status line: stdout, unless quiet or stdout already
/// carries CSV data.
pub fn info(quiet: bool, csv_on_stdout: bool, line: &str) {
    if !quiet && !csv_on_stdout {
        println!("{}", line);
    }
}
