use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::gp::JITTER_LADDER;
use crate::posterior::PosteriorKind;

use super::config::ExperimentConfig;
use super::study::{CellFailure, EmulateRow, StudyReport, StudyRow};

pub const RESULTS_COLUMNS: [&str; 10] = [
    "kind",
    "K",
    "nu",
    "J",
    "N",
    "n_per_dim",
    "fill_distance",
    "d2_mean",
    "d2_stderr",
    "elapsed_s",
];

pub fn version() -> String {
    format!("gplab v{}", env!("CARGO_PKG_VERSION"))
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// `#`-prefixed lines with the version, the resolved config and the
/// numerical choices that the config does not expose.
pub fn header(cfg: &ExperimentConfig) -> Result<String> {
    let mut h = String::new();
    writeln!(h, "# {}", version()).unwrap();
    for line in cfg.to_toml()?.lines() {
        writeln!(h, "# {line}").unwrap();
    }
    writeln!(h, "# jitter_ladder = {JITTER_LADDER:?} (times sigma_k2)").unwrap();
    writeln!(h, "# stiffness_quadrature = element-midpoint").unwrap();
    writeln!(h, "# observation_rule = piecewise-linear").unwrap();
    writeln!(h, "# lattice = {}", match cfg.generating_vector {
        Some(ref p) => p.display().to_string(),
        None => "embedded CBC, product weights 1/j^2".into(),
    })
    .unwrap();
    Ok(h)
}

fn csv_body<F>(columns: &[&str], rows: usize, mut record: F) -> Result<String>
where
    F: FnMut(usize) -> Vec<String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for i in 0..rows {
        w.write_record(record(i))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn result_record(r: &StudyRow, record_timing: bool) -> Vec<String> {
    vec![
        r.kind.name().to_string(),
        r.dim.to_string(),
        r.nu.to_string(),
        r.n_obs.to_string(),
        r.n_design.to_string(),
        r.n_per_dim.to_string(),
        r.fill_distance.to_string(),
        r.d2_mean.to_string(),
        r.d2_stderr.to_string(),
        if record_timing { r.elapsed_s.to_string() } else { "0".into() },
    ]
}

pub fn format_results(report: &StudyReport) -> Result<String> {
    let body = csv_body(&RESULTS_COLUMNS, report.rows.len(), |i| {
        result_record(&report.rows[i], report.config.record_timing)
    })?;
    Ok(header(&report.config)? + &body)
}

pub fn format_rates(report: &StudyReport) -> Result<String> {
    let columns = [
        "kind", "K", "nu", "J", "points", "C1", "C2", "residual", "predicted_l2_sq",
        "predicted_sup_sq", "reference_C2", "status",
    ];
    let body = csv_body(&columns, report.rates.len(), |i| {
        let r = &report.rates[i];
        vec![
            r.kind.name().to_string(),
            r.dim.to_string(),
            r.nu.to_string(),
            r.n_obs.to_string(),
            r.points.to_string(),
            opt(r.model.map(|m| m.c1)),
            opt(r.model.map(|m| m.c2)),
            opt(r.model.map(|m| m.residual)),
            r.predicted_l2_sq.to_string(),
            r.predicted_sup_sq.to_string(),
            opt(r.reference),
            r.status.clone(),
        ]
    })?;
    Ok(header(&report.config)? + &body)
}

fn curve_name(kind: PosteriorKind, dim: usize, nu: f64) -> String {
    format!("{}_K{dim}_nu{nu}.csv", kind.name())
}

fn format_failures(failures: &[CellFailure]) -> String {
    let mut s = String::new();
    for f in failures {
        let n = f.n_per_dim.map_or_else(|| "all".to_string(), |n| n.to_string());
        writeln!(s, "FAILED K={} nu={} n_per_dim={}: {}", f.dim, f.nu, n, f.message).unwrap();
    }
    s
}

/// Mean-Φ errors below mean-G errors at every shared `N`.
pub fn mean_phi_below_mean_g(report: &StudyReport, dim: usize, nu: f64) -> Option<bool> {
    let g = report.curve(PosteriorKind::MeanG, dim, nu);
    let p = report.curve(PosteriorKind::MeanPhi, dim, nu);
    let pairs: Vec<(f64, f64)> = g
        .iter()
        .filter_map(|a| {
            p.iter()
                .find(|b| b.n_design == a.n_design)
                .map(|b| (a.d2_mean, b.d2_mean))
        })
        .collect();
    if pairs.is_empty() {
        None
    } else {
        Some(pairs.iter().all(|(g, p)| p < g))
    }
}

pub fn format_summary(report: &StudyReport) -> String {
    let mut s = String::new();
    writeln!(s, "{}", version()).unwrap();
    writeln!(s, "rates of 2 d_Hell^2 ~ C1 N^-C2").unwrap();
    writeln!(
        s,
        "{:<13} {:>3} {:>5} {:>7} {:>9} {:>9} {:>9}  status",
        "kind", "K", "nu", "C2", "reference", "pred_L2", "pred_sup"
    )
    .unwrap();
    for r in &report.rates {
        let c2 = r.model.map_or_else(|| "-".to_string(), |m| format!("{:.2}", m.c2));
        let reference = r.reference.map_or_else(|| "-".to_string(), |v| format!("{v}"));
        writeln!(
            s,
            "{:<13} {:>3} {:>5} {:>7} {:>9} {:>9.2} {:>9.2}  {}",
            r.kind.name(),
            r.dim,
            r.nu,
            c2,
            reference,
            r.predicted_l2_sq,
            r.predicted_sup_sq,
            r.status
        )
        .unwrap();
    }
    for &dim in &report.config.dims {
        for &nu in &report.config.nu {
            if let Some(ok) = mean_phi_below_mean_g(report, dim, nu) {
                writeln!(
                    s,
                    "soft check K={dim} nu={nu}: mean_phi error below mean_g error at every N: {}",
                    if ok { "yes" } else { "no" }
                )
                .unwrap();
            }
        }
    }
    s.push_str(&format_failures(&report.failures));
    s
}

/// Log-log data for every `(K, ν)` curve of each kind, with fitted-line
/// samples: one file per kind, blocks separated by blank lines.
pub fn emit_plot_data(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        warn!("empty report: no plot data written");
        return Ok(Vec::new());
    }
    let mut written = Vec::new();
    let kinds = report.config.kinds()?;
    for kind in kinds {
        let mut text = String::new();
        writeln!(text, "# kind = {}", kind.name()).unwrap();
        for &dim in &report.config.dims {
            for &nu in &report.config.nu {
                let curve = report.curve(kind, dim, nu);
                if curve.is_empty() {
                    continue;
                }
                writeln!(text, "# K = {dim}, nu = {nu}").unwrap();
                writeln!(text, "# N two_d2 two_d2_stderr").unwrap();
                for r in &curve {
                    writeln!(text, "{} {} {}", r.n_design, 2.0 * r.d2_mean, 2.0 * r.d2_stderr).unwrap();
                }
                text.push_str("\n\n");
                if let Some(m) = report.rate(kind, dim, nu).and_then(|r| r.model) {
                    let lo = (curve[0].n_design as f64).ln();
                    let hi = (curve[curve.len() - 1].n_design as f64).ln();
                    writeln!(text, "# fit K = {dim}, nu = {nu}: C1 = {}, C2 = {}", m.c1, m.c2).unwrap();
                    for i in 0..=20 {
                        let n = (lo + (hi - lo) * i as f64 / 20.0).exp();
                        writeln!(text, "{} {}", n, m.predict(n)).unwrap();
                    }
                    text.push_str("\n\n");
                }
            }
        }
        let path = dir.join(format!("{}.dat", kind.name()));
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn write_problems(report: &StudyReport, out: &Path) -> Result<()> {
    for ip in &report.problems {
        write_atomic(&out.join(format!("problem_K{}.toml", ip.dim)), ip.to_toml()?.as_bytes())?;
    }
    Ok(())
}

fn write_timing(report: &StudyReport, out: &Path) -> Result<()> {
    let mut s = String::from("# wall-clock seconds per row; not reproducible\nkind K nu N elapsed_s\n");
    for r in &report.rows {
        writeln!(s, "{} {} {} {} {}", r.kind.name(), r.dim, r.nu, r.n_design, r.elapsed_s).unwrap();
    }
    write_atomic(&out.join("timing.log"), s.as_bytes())
}

/// `results.csv`, the problem files and a timing log.
pub fn write_hellinger_outputs(report: &StudyReport, out: &Path) -> Result<Vec<PathBuf>> {
    let results = out.join("results.csv");
    write_atomic(&results, format_results(report)?.as_bytes())?;
    write_problems(report, out)?;
    write_timing(report, out)?;
    let failures = format_failures(&report.failures);
    if !failures.is_empty() {
        write_atomic(&out.join("failures.txt"), failures.as_bytes())?;
    }
    Ok(vec![results])
}

/// Everything from [`write_hellinger_outputs`] plus per-curve CSVs, the rate
/// table, plot data and a text summary.
pub fn write_study_outputs(report: &StudyReport, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = write_hellinger_outputs(report, out)?;
    let head = header(&report.config)?;
    for &dim in &report.config.dims {
        for &nu in &report.config.nu {
            for kind in report.config.kinds()? {
                let curve = report.curve(kind, dim, nu);
                if curve.is_empty() {
                    continue;
                }
                let body = csv_body(&["N", "two_d2", "two_d2_stderr"], curve.len(), |i| {
                    vec![
                        curve[i].n_design.to_string(),
                        (2.0 * curve[i].d2_mean).to_string(),
                        (2.0 * curve[i].d2_stderr).to_string(),
                    ]
                })?;
                let path = out.join("curves").join(curve_name(kind, dim, nu));
                write_atomic(&path, (head.clone() + &body).as_bytes())?;
                written.push(path);
            }
        }
    }
    let rates = out.join("rates.csv");
    write_atomic(&rates, format_rates(report)?.as_bytes())?;
    written.push(rates);
    written.extend(emit_plot_data(report, &out.join("plots"))?);
    let summary = out.join("summary.txt");
    write_atomic(&summary, format_summary(report).as_bytes())?;
    written.push(summary);
    Ok(written)
}

pub fn format_emulate(cfg: &ExperimentConfig, rows: &[EmulateRow]) -> Result<String> {
    let columns = [
        "target", "K", "nu", "J", "N", "n_per_dim", "fill_distance", "sup_error", "l2_error",
        "max_std",
    ];
    let body = csv_body(&columns, rows.len(), |i| {
        let r = &rows[i];
        vec![
            r.target.name().to_string(),
            r.dim.to_string(),
            r.nu.to_string(),
            r.n_obs.to_string(),
            r.n_design.to_string(),
            r.n_per_dim.to_string(),
            r.fill_distance.to_string(),
            r.diagnostics.sup_error.to_string(),
            r.diagnostics.l2_error.to_string(),
            r.diagnostics.max_std.to_string(),
        ]
    })?;
    Ok(header(cfg)? + &body)
}

pub fn write_emulate_outputs(
    cfg: &ExperimentConfig,
    rows: &[EmulateRow],
    failures: &[CellFailure],
    out: &Path,
) -> Result<PathBuf> {
    let path = out.join("emulate.csv");
    write_atomic(&path, format_emulate(cfg, rows)?.as_bytes())?;
    let f = format_failures(failures);
    if !f.is_empty() {
        write_atomic(&out.join("failures.txt"), f.as_bytes())?;
    }
    Ok(path)
}
