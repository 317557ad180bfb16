//! Output files. Numbers are written with 17 significant digits
//! (`{:.16e}`), the first CSV column of a trace is `time_s`, and every file
//! ends with a newline. Files are written to a temporary name in the target
//! directory and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use philsim_core::bench::{AccuracyReport, Trace};

/// A named output file held in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `# diverged=<bool>`, the header row, then one row per sample.
pub fn trace_csv(trace: &Trace) -> String {
    let names = trace.names();
    let cols: Vec<&[f64]> = names
        .iter()
        .map(|n| trace.channel(n).expect("listed channel"))
        .collect();
    let mut s = String::with_capacity(trace.len() * (names.len() + 1) * 25 + 64);
    writeln!(s, "# diverged={}", trace.diverged()).unwrap();
    s.push_str("time_s");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for k in 0..trace.len() {
        s.push_str(&num(trace.time_s(k)));
        for c in &cols {
            s.push(',');
            s.push_str(&num(c[k]));
        }
        s.push('\n');
    }
    s
}

pub const ACCURACY_HEADER: &str =
    "channel,order,frequency_hz,magnitude_ratio,magnitude_error,phase_error_deg,rms_error";

/// Appends one row per harmonic of `report`.
pub fn accuracy_rows(out: &mut String, channel: &str, report: &AccuracyReport) {
    for h in &report.harmonics {
        writeln!(
            out,
            "{channel},{},{},{},{},{},{}",
            h.order,
            num(h.frequency_hz),
            num(h.magnitude_ratio),
            num(h.magnitude_error),
            num(h.phase_error_deg),
            num(report.rms_error)
        )
        .unwrap();
    }
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> io::Result<PathBuf> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(contents)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| write_atomic(dir, &a.name, a.contents.as_bytes()))
        .collect()
}
