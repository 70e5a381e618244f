//! CSV and JSON serialization of results.
//!
//! Every float is written with 17 significant digits so values round-trip
//! exactly. Files are written to a temporary sibling and renamed into place.

use crate::error::{Error, Result};
use crate::simulation::{StressReport, SummaryStats, WeeklyMetrics};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// `x` with 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    tmp.set_file_name(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Pretty JSON whose floats carry 17 significant digits.
struct PreciseFormatter(PrettyFormatter<'static>);

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// JSON text with fields in declaration order; non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn metric_row(kind: &str, seed: String, m: &WeeklyMetrics) -> Vec<String> {
    let mut row = vec![kind.to_string(), seed, m.week.to_string()];
    row.extend(m.values().iter().map(|&x| fmt_f64(x)));
    row
}

/// Column set of the weekly CSV.
pub fn weekly_header() -> Vec<&'static str> {
    let mut h = vec!["row", "seed", "week"];
    h.extend(WeeklyMetrics::FIELDS);
    h
}

/// One row per week per valid run, then the mean and σ rows.
pub fn weekly_csv(summary: &SummaryStats) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for run in summary.runs.iter().filter(|r| r.valid) {
        for m in &run.metrics {
            rows.push(metric_row("run", run.seed.to_string(), m));
        }
    }
    for m in &summary.mean {
        rows.push(metric_row("mean", String::new(), m));
    }
    for m in &summary.sd {
        rows.push(metric_row("sd", String::new(), m));
    }
    csv_bytes(&weekly_header(), rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub n_runs: usize,
    pub invalid_runs: usize,
    pub week_control_of_mean: Option<usize>,
    pub disease_control_score_of_mean: Option<f64>,
    pub mean_week_control: Option<f64>,
    pub controlled_runs: usize,
    pub mean_disease_control_score: Option<f64>,
    pub mean_peak_hospitalization: f64,
    pub mean_final_deception: f64,
    pub random_noise_scale: f64,
    pub week_control: Vec<Option<usize>>,
}

impl RunSummary {
    pub fn new(scenario: &str, s: &SummaryStats, horizon: usize) -> Self {
        RunSummary {
            scenario: scenario.to_string(),
            n_runs: s.runs.len(),
            invalid_runs: s.invalid_runs,
            week_control_of_mean: s.week_control_of_mean,
            disease_control_score_of_mean: s
                .week_control_of_mean
                .map(|w| 1.0 - w as f64 / horizon as f64),
            mean_week_control: s.mean_week_control,
            controlled_runs: s.controlled_runs,
            mean_disease_control_score: s.mean_disease_control_score,
            mean_peak_hospitalization: s.mean_peak_hospitalization,
            mean_final_deception: s.mean_final_deception,
            random_noise_scale: s.noise_scale,
            week_control: s.week_control.clone(),
        }
    }
}

/// Writes `weekly.csv` and `summary.json` into `dir`.
pub fn write_run(dir: &Path, scenario: &str, s: &SummaryStats, horizon: usize) -> Result<()> {
    write_atomic(&dir.join("weekly.csv"), &weekly_csv(s)?)?;
    write_json(
        &dir.join("summary.json"),
        &RunSummary::new(scenario, s, horizon),
    )
}

pub fn stress_csv(report: &StressReport) -> Result<Vec<u8>> {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let rows = report.rows.iter().map(|r| {
        vec![
            r.factor.name().to_string(),
            r.equilibrium.name().to_string(),
            opt(r.base_score),
            opt(r.perturbed_score),
            fmt_f64(r.delta_score),
            fmt_f64(r.base_peak),
            fmt_f64(r.perturbed_peak),
            fmt_f64(r.peak_ratio),
        ]
    });
    csv_bytes(
        &[
            "factor",
            "equilibrium",
            "base_score",
            "perturbed_score",
            "delta_score",
            "base_peak",
            "perturbed_peak",
            "peak_ratio",
        ],
        rows,
    )
}

pub fn write_stress(dir: &Path, report: &StressReport) -> Result<()> {
    write_atomic(&dir.join("stress.csv"), &stress_csv(report)?)?;
    write_json(&dir.join("stress.json"), report)
}

/// Long-format `(scenario, metric, week, stat, value)` rows from every
/// `weekly.csv` below `root`, keeping the mean and σ rows.
pub fn plot_data(root: &Path) -> Result<Vec<u8>> {
    let mut files = Vec::new();
    collect_weekly(root, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("no weekly.csv below {}", root.display()),
        )));
    }
    let mut rows = Vec::new();
    for file in files {
        let scenario = file
            .parent()
            .and_then(|p| p.strip_prefix(root).ok())
            .map(|p| p.to_string_lossy().replace('\\', "/"))
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| ".".to_string());
        let mut r = csv::Reader::from_path(&file)?;
        let header = r.headers()?.clone();
        for rec in r.records() {
            let rec = rec?;
            let stat = &rec[0];
            if stat == "run" {
                continue;
            }
            for (k, name) in header.iter().enumerate().skip(3) {
                rows.push(vec![
                    scenario.clone(),
                    name.to_string(),
                    rec[2].to_string(),
                    stat.to_string(),
                    rec[k].to_string(),
                ]);
            }
        }
    }
    csv_bytes(&["scenario", "metric", "week", "stat", "value"], rows)
}

fn collect_weekly(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_weekly(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "weekly.csv") {
            out.push(path);
        }
    }
    Ok(())
}
