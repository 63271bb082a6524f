use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{MethodKind, MetricsReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub period: usize,
    pub x1: f64,
    pub x2: f64,
}

/// Mean and sample standard deviation of FE and PE across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: MethodKind,
    pub runs: usize,
    pub fe_mean: f64,
    pub fe_std: f64,
    pub pe_mean: f64,
    pub pe_std: f64,
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `metrics.json`: method, seed, FE, PE.
pub fn write_metrics_json(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let doc = json!({
        "method": report.method.kind,
        "seed": report.seed,
        "FE": report.fe,
        "PE": report.pe,
    });
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, &doc)?;
    writeln!(f).map_err(io_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `periods.csv`: one row per period; `gamma` and `bandwidth` are empty when
/// the method has no memory update or no density fit.
pub fn write_periods_csv(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(["period", "historical_mse", "future_mse", "gamma", "bandwidth", "train_loss_final"])?;
    for r in &report.records {
        w.write_record([
            r.period.to_string(),
            r.historical_mse.to_string(),
            r.future_mse.to_string(),
            opt(r.gamma),
            opt(r.bandwidth),
            r.train_loss_final.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path.as_ref()))
}

pub fn write_projection_csv(rows: &[ProjectionRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(["period", "x1", "x2"])?;
    for r in rows {
        w.write_record([r.period.to_string(), r.x1.to_string(), r.x2.to_string()])?;
    }
    w.flush().map_err(io_err(path.as_ref()))
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups reports by method, in order of first appearance.
pub fn summarize(reports: &[MetricsReport]) -> Vec<MethodSummary> {
    let mut methods: Vec<MethodKind> = Vec::new();
    for r in reports {
        if !methods.contains(&r.method.kind) {
            methods.push(r.method.kind);
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let group: Vec<&MetricsReport> = reports.iter().filter(|r| r.method.kind == method).collect();
            let fe: Vec<f64> = group.iter().map(|r| r.fe).collect();
            let pe: Vec<f64> = group.iter().map(|r| r.pe).collect();
            let (fe_mean, fe_std) = mean_std(&fe);
            let (pe_mean, pe_std) = mean_std(&pe);
            MethodSummary {
                method,
                runs: group.len(),
                fe_mean,
                fe_std,
                pe_mean,
                pe_std,
            }
        })
        .collect()
}

pub fn write_summary_csv(summary: &[MethodSummary], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(["method", "runs", "fe_mean", "fe_std", "pe_mean", "pe_std"])?;
    for s in summary {
        w.write_record([
            s.method.to_string(),
            s.runs.to_string(),
            s.fe_mean.to_string(),
            s.fe_std.to_string(),
            s.pe_mean.to_string(),
            s.pe_std.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path.as_ref()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{MethodSpec, PeriodRecord};

    fn report(kind: MethodKind, seed: u64, fe: f64) -> MetricsReport {
        let rec = PeriodRecord {
            period: 1,
            historical_mse: fe,
            future_mse: 2.0 * fe,
            gamma: Some(0.5),
            bandwidth: None,
            train_loss_final: 0.1,
            memory_size: 3,
        };
        MetricsReport::from_records(MethodSpec::new(kind), seed, vec![rec]).unwrap()
    }

    #[test]
    fn summary_groups_by_method() {
        let reports = vec![
            report(MethodKind::Dmshm, 1, 1.0),
            report(MethodKind::Finetune, 1, 5.0),
            report(MethodKind::Dmshm, 2, 3.0),
        ];
        let s = summarize(&reports);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].method, MethodKind::Dmshm);
        assert_eq!(s[0].runs, 2);
        assert_eq!(s[0].fe_mean, 2.0);
        assert!((s[0].fe_std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s[1].fe_std, 0.0);
    }

    #[test]
    fn writers_produce_expected_columns() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(MethodKind::Dmshm, 7, 1.5);
        write_metrics_json(&r, dir.path().join("metrics.json")).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
        assert_eq!(v["method"], "dmshm");
        assert_eq!(v["seed"], 7);
        assert_eq!(v["FE"], 1.5);
        assert_eq!(v["PE"], 3.0);

        write_periods_csv(&r, dir.path().join("periods.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("periods.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "period,historical_mse,future_mse,gamma,bandwidth,train_loss_final"
        );
        assert_eq!(lines.next().unwrap(), "1,1.5,3,0.5,,0.1");
    }
}
