use std::path::{Path, PathBuf};

use super::report::MetricsReport;
use super::{Measure, Outcome};

fn cell(m: &Measure) -> String {
    match m {
        Outcome::Value(v) => format!("{v}"),
        Outcome::Undefined { .. } => "NA".to_string(),
    }
}

/// Columns: t, mean_price, intrinsic, max_pv, mean_declared.
pub fn figure1_csv(report: &MetricsReport) -> String {
    let mut out = String::from("t,mean_price,intrinsic,max_pv,mean_declared\n");
    for r in &report.series {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.period,
            cell(&r.mean_price),
            r.intrinsic_value,
            r.max_present_value,
            cell(&r.mean_declared)
        ));
    }
    out
}

/// Columns: t, common_component, common_share.
pub fn figure2_csv(report: &MetricsReport) -> String {
    let mut out = String::from("t,common_component,common_share\n");
    for d in &report.decomposition {
        out.push_str(&format!(
            "{},{},{}\n",
            d.period,
            cell(&d.common),
            cell(&d.common_share)
        ));
    }
    out
}

/// Writes `figure1.csv` and `figure2.csv` into `dir`.
pub fn export_figure_data(report: &MetricsReport, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let f1 = dir.join("figure1.csv");
    let f2 = dir.join("figure2.csv");
    std::fs::write(&f1, figure1_csv(report))?;
    std::fs::write(&f2, figure2_csv(report))?;
    Ok((f1, f2))
}
