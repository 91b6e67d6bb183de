//! Metrics CSV, trace files and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::num::Scalar;
use crate::sim::metrics::MetricsFrame;
use crate::sim::trace::SimEvent;

pub const METRICS_HEADER: &str = "tick,alive_fraction,residual_fraction,pdr,drop_ratio,throughput,partitioned";

fn fixed<S: Scalar>(v: S) -> String {
    format!("{:.6}", v.as_f64())
}

fn fixed_or_na<S: Scalar>(v: Option<S>) -> String {
    v.map_or_else(|| "NA".to_string(), fixed)
}

pub fn format_metrics_csv<S: Scalar>(frames: &[MetricsFrame<S>]) -> String {
    let mut out = String::with_capacity(64 * (frames.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for f in frames {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f.tick,
            fixed(f.alive_fraction),
            fixed(f.residual_fraction),
            fixed_or_na(f.pdr),
            fixed_or_na(f.drop_ratio),
            fixed(f.throughput),
            u8::from(f.partitioned),
        )
        .expect("string write");
    }
    out
}

pub fn emit_metrics_csv<S: Scalar>(frames: &[MetricsFrame<S>], path: &Path) -> std::io::Result<()> {
    fs::write(path, format_metrics_csv(frames))
}

pub fn write_trace<S: Scalar>(events: &[SimEvent<S>], path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for e in events {
        writeln!(w, "{}", e.to_line())?;
    }
    w.flush()
}

/// Everything needed to regenerate a set of outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub scenario_hash: String,
    /// Scenario file the runs were made from, as written alongside.
    pub scenario_file: String,
    pub strategies: Vec<String>,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = toml::to_string(self).map_err(std::io::Error::other)?;
        fs::write(path, text)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(std::io::Error::other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_is_header_only() {
        assert_eq!(format_metrics_csv::<f64>(&[]), format!("{METRICS_HEADER}\n"));
    }

    #[test]
    fn na_and_fixed_formatting() {
        let frames = vec![
            MetricsFrame {
                tick: 0,
                alive_fraction: 1.0,
                residual_fraction: 1.0,
                pdr: None,
                drop_ratio: None,
                throughput: 0.0,
                partitioned: false,
            },
            MetricsFrame {
                tick: 100,
                alive_fraction: 0.98,
                residual_fraction: 0.5,
                pdr: Some(0.82),
                drop_ratio: Some(0.18),
                throughput: 4.3,
                partitioned: true,
            },
        ];
        let csv = format_metrics_csv(&frames);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "0,1.000000,1.000000,NA,NA,0.000000,0");
        assert_eq!(lines[2], "100,0.980000,0.500000,0.820000,0.180000,4.300000,1");
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest {
            tool_version: "0.1.0".into(),
            scenario_hash: "ab".into(),
            scenario_file: "scenario.toml".into(),
            strategies: vec!["edocr".into()],
            seeds: vec![1, 2],
            artifacts: vec!["metrics_edocr_seed1.csv".into()],
        };
        let p = dir.path().join("manifest.toml");
        m.write(&p).unwrap();
        assert_eq!(RunManifest::read(&p).unwrap(), m);
    }
}
