//! Scans, fits and reports.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem::{label_from_path, run_method, variable_counts, Method, Problem, ProblemOptions, SamplerConfig};
use super::CliError;

/// Energies of each method at one geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub label: f64,
    pub fcidump_path: String,
    pub energies: BTreeMap<String, f64>,
    pub timings: BTreeMap<String, f64>,
    pub qubit_counts: BTreeMap<String, (usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFailure {
    pub fcidump_path: String,
    pub method: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScanReport {
    /// Sorted by label.
    pub points: Vec<ScanPoint>,
    pub failures: Vec<ScanFailure>,
    pub skipped: Vec<String>,
}

impl ScanReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run `methods` (plus the exact oracle) on every fixture matching `pattern`.
pub fn scan(
    pattern: &str,
    methods: &[Method],
    problem_opts: &ProblemOptions,
    sampler: &SamplerConfig,
    jobs: usize,
) -> Result<ScanReport, CliError> {
    let mut all = vec![Method::Exact];
    for m in methods {
        if all.iter().any(|x| x.name() == m.name()) {
            if *m != Method::Exact {
                return Err(CliError::Usage(format!("method {} requested twice", m.name())));
            }
            continue;
        }
        all.push(m.clone());
    }
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| CliError::Usage(format!("bad fixture pattern: {e}")))?
        .filter_map(Result::ok)
        .collect();
    paths.sort();
    let mut report = ScanReport::default();
    let mut labelled = Vec::new();
    for p in paths {
        match label_from_path(&p) {
            Some(l) => labelled.push((l, p)),
            None => {
                log::warn!("skipping {}: no geometry label in the file name", p.display());
                report.skipped.push(p.display().to_string());
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let results: Vec<(ScanPoint, Vec<ScanFailure>)> = pool.install(|| {
        labelled.par_iter().map(|(label, path)| scan_point(*label, path, &all, problem_opts, sampler)).collect()
    });
    for (p, f) in results {
        report.points.push(p);
        report.failures.extend(f);
    }
    report.points.sort_by(|a, b| a.label.total_cmp(&b.label).then_with(|| a.fcidump_path.cmp(&b.fcidump_path)));
    Ok(report)
}

fn scan_point(
    label: f64,
    path: &Path,
    methods: &[Method],
    opts: &ProblemOptions,
    sampler: &SamplerConfig,
) -> (ScanPoint, Vec<ScanFailure>) {
    let mut point = ScanPoint {
        label,
        fcidump_path: path.display().to_string(),
        energies: BTreeMap::new(),
        timings: BTreeMap::new(),
        qubit_counts: BTreeMap::new(),
    };
    let mut failures = Vec::new();
    let fail = |method: &str, e: CliError| ScanFailure {
        fcidump_path: path.display().to_string(),
        method: method.to_string(),
        message: e.to_string(),
    };
    let problem = match Problem::load(path, opts) {
        Ok(p) => p,
        Err(e) => {
            failures.extend(methods.iter().map(|m| fail(m.name(), CliError::Io(e.to_string()))));
            return (point, failures);
        }
    };
    for m in methods {
        match run_method(&problem, m, sampler) {
            Ok(out) => {
                log::info!("{} {}: {:.10} ({:.2}s)", point.fcidump_path, m.name(), out.energy, out.seconds);
                point.energies.insert(m.name().into(), out.energy);
                point.timings.insert(m.name().into(), out.seconds);
                if let Some(c) = out.qubit_counts {
                    point.qubit_counts.insert(m.name().into(), c);
                }
            }
            Err(e) => {
                log::error!("{} {}: {e}", point.fcidump_path, m.name());
                failures.push(fail(m.name(), e));
            }
        }
    }
    (point, failures)
}

fn method_names(points: &[ScanPoint]) -> Vec<String> {
    let mut names: BTreeSet<String> = BTreeSet::new();
    for p in points {
        names.extend(p.energies.keys().cloned());
        names.extend(p.timings.keys().cloned());
        names.extend(p.qubit_counts.keys().cloned());
    }
    // exact first, then the rest alphabetically
    let mut out: Vec<String> = names.iter().filter(|n| *n == "exact").cloned().collect();
    out.extend(names.into_iter().filter(|n| n != "exact"));
    out
}

/// CSV with `label`, one energy column per method, `<m>_minus_exact`
/// differences, then path, seconds and variable counts. Missing values are empty.
pub fn points_to_csv(points: &[ScanPoint]) -> Result<String, CliError> {
    let names = method_names(points);
    let others: Vec<&String> = names.iter().filter(|n| *n != "exact").collect();
    let mut header = vec!["label".to_string()];
    header.extend(names.iter().cloned());
    header.extend(others.iter().map(|n| format!("{n}_minus_exact")));
    header.push("fcidump_path".into());
    for n in &names {
        header.push(format!("{n}_seconds"));
        header.push(format!("{n}_pre"));
        header.push(format!("{n}_post"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for p in points {
        let mut row = vec![p.label.to_string()];
        row.extend(names.iter().map(|n| opt(p.energies.get(n).map(f64::to_string))));
        row.extend(others.iter().map(|n| {
            opt(p.energies.get(*n).zip(p.energies.get("exact")).map(|(a, b)| (a - b).to_string()))
        }));
        row.push(p.fcidump_path.clone());
        for n in &names {
            row.push(opt(p.timings.get(n).map(f64::to_string)));
            let c = p.qubit_counts.get(n);
            row.push(opt(c.map(|c| c.0.to_string())));
            row.push(opt(c.map(|c| c.1.to_string())));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Format(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Format(e.to_string())
}

/// Inverse of [`points_to_csv`]; difference columns are ignored.
pub fn points_from_csv(text: &str) -> Result<Vec<ScanPoint>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let parse_f = |s: &str| s.parse::<f64>().map_err(|e| CliError::Format(format!("`{s}`: {e}")));
    let parse_u = |s: &str| s.parse::<usize>().map_err(|e| CliError::Format(format!("`{s}`: {e}")));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let mut p = ScanPoint {
            label: f64::NAN,
            fcidump_path: String::new(),
            energies: BTreeMap::new(),
            timings: BTreeMap::new(),
            qubit_counts: BTreeMap::new(),
        };
        let mut pre: BTreeMap<String, usize> = BTreeMap::new();
        let mut post: BTreeMap<String, usize> = BTreeMap::new();
        for (col, val) in header.iter().zip(rec.iter()) {
            if col == "label" {
                p.label = parse_f(val)?;
                continue;
            }
            if col == "fcidump_path" {
                p.fcidump_path = val.to_string();
                continue;
            }
            if val.is_empty() || col.ends_with("_minus_exact") {
                continue;
            }
            if let Some(m) = col.strip_suffix("_seconds") {
                p.timings.insert(m.into(), parse_f(val)?);
            } else if let Some(m) = col.strip_suffix("_pre") {
                pre.insert(m.into(), parse_u(val)?);
            } else if let Some(m) = col.strip_suffix("_post") {
                post.insert(m.into(), parse_u(val)?);
            } else {
                p.energies.insert(col.clone(), parse_f(val)?);
            }
        }
        for (m, a) in pre {
            let b = *post.get(&m).ok_or_else(|| CliError::Format(format!("{m}_pre without {m}_post")))?;
            p.qubit_counts.insert(m, (a, b));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn points_to_json(points: &[ScanPoint]) -> Result<String, CliError> {
    serde_json::to_string_pretty(points).map_err(|e| CliError::Format(e.to_string()))
}

pub fn points_from_json(text: &str) -> Result<Vec<ScanPoint>, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Format(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub minimum_location: f64,
    pub minimum_energy: f64,
    pub binding_energy: f64,
    pub asymptote_energy: f64,
}

fn series(points: &[ScanPoint], method: &str) -> Vec<(f64, f64)> {
    let mut s: Vec<(f64, f64)> = points.iter().filter_map(|p| p.energies.get(method).map(|&e| (p.label, e))).collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    s
}

/// Vertex of the parabola through the lowest point and its two neighbours.
pub fn fit_minimum(points: &[ScanPoint], method: &str, exclude: Option<f64>) -> Result<(f64, f64), CliError> {
    let s: Vec<(f64, f64)> = series(points, method).into_iter().filter(|p| Some(p.0) != exclude).collect();
    if s.len() < 3 {
        return Err(CliError::Fit(format!("need at least 3 {method} points, have {}", s.len())));
    }
    let i = (0..s.len()).min_by(|&a, &b| s[a].1.total_cmp(&s[b].1)).expect("non-empty");
    if i == 0 || i == s.len() - 1 {
        return Err(CliError::Fit(format!("lowest {method} energy at the scan edge ({}); no interior minimum", s[i].0)));
    }
    let ((x0, y0), (x1, y1), (x2, y2)) = (s[i - 1], s[i], s[i + 1]);
    // Newton divided differences: y = y0 + d01 (x−x0) + a (x−x0)(x−x1)
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a <= 0.0 {
        return Err(CliError::Fit("three-point parabola opens downward".into()));
    }
    let b = d01 - a * (x0 + x1);
    let x = -b / (2.0 * a);
    let y = y0 + d01 * (x - x0) + a * (x - x0) * (x - x1);
    Ok((x, y))
}

/// Minimum by parabola fit and binding energy against the asymptote point,
/// which defaults to the largest label.
pub fn fit(points: &[ScanPoint], method: &str, asymptote_label: Option<f64>) -> Result<FitResult, CliError> {
    let s = series(points, method);
    let asym = match asymptote_label {
        Some(l) => s.iter().find(|p| p.0 == l).copied(),
        None => s.last().copied(),
    }
    .ok_or_else(|| CliError::Fit(format!("asymptote point missing for {method}")))?;
    let (loc, e) = fit_minimum(points, method, Some(asym.0))?;
    Ok(FitResult { minimum_location: loc, minimum_energy: e, binding_energy: asym.1 - e, asymptote_energy: asym.1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitRow {
    pub parameter: usize,
    pub pre: usize,
    pub post: usize,
}

/// Variable counts as the XBK copy count `r` or the QCC entangler count
/// sweeps over `values`.
pub fn qubit_report(problem: &Problem, method: &Method, values: &[usize]) -> Result<Vec<QubitRow>, CliError> {
    values
        .iter()
        .map(|&v| {
            let m = with_parameter(method, v)?;
            let (pre, post) = variable_counts(problem, &m)?.expect("non-exact method");
            Ok(QubitRow { parameter: v, pre, post })
        })
        .collect()
}

fn with_parameter(method: &Method, v: usize) -> Result<Method, CliError> {
    Ok(match method.clone() {
        Method::Exact => return Err(CliError::Usage("reports need the xbk or qcc method".into())),
        Method::Xbk { tol, .. } => Method::Xbk { r: v, tol },
        Method::Qcc { folds, tol, max_outer, starts, .. } => Method::Qcc { n_ent: v, folds, tol, max_outer, starts },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub parameter: usize,
    pub mean_seconds: f64,
    pub transform: f64,
    pub quadratize: f64,
    pub sample: f64,
    pub optimize: f64,
}

/// Mean wall-clock time and phase split over `repeats` runs per parameter value.
pub fn timing_report(
    problem: &Problem,
    method: &Method,
    values: &[usize],
    repeats: usize,
    sampler: &SamplerConfig,
) -> Result<Vec<TimingRow>, CliError> {
    if repeats == 0 {
        return Err(CliError::Usage("repeats must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &v in values {
        let m = with_parameter(method, v)?;
        let mut row = TimingRow { parameter: v, mean_seconds: 0.0, transform: 0.0, quadratize: 0.0, sample: 0.0, optimize: 0.0 };
        for _ in 0..repeats {
            let out = run_method(problem, &m, sampler)?;
            row.mean_seconds += out.seconds;
            row.transform += out.phases.transform;
            row.quadratize += out.phases.quadratize;
            row.sample += out.phases.sample;
            row.optimize += out.phases.optimize;
        }
        let n = repeats as f64;
        row.mean_seconds /= n;
        row.transform /= n;
        row.quadratize /= n;
        row.sample /= n;
        row.optimize /= n;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_rows_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Format(e.to_string()))
}
