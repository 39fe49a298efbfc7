//! Scoring normal fields against simulator ground truth.

use std::fmt;

use crate::normals::{NormalField, PointNormal};
use crate::sim::GroundTruth;
use crate::{Error, Result, Vec3};

const UNIT_TOLERANCE: f64 = 1e-6;

/// Angle in degrees between two unit vectors, ignoring their sign.
pub fn angular_error(estimated: &Vec3, truth: &Vec3) -> Result<f64> {
    for v in [estimated, truth] {
        if (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::contract(format!(
                "expected a unit vector, norm is {}",
                v.norm()
            )));
        }
    }
    Ok(estimated.dot(truth).abs().min(1.0).acos().to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub count: usize,
}

impl ErrorStats {
    /// `None` for an empty sample.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        // Nearest-rank percentile.
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Some(Self {
            mean,
            median,
            p95: sorted[rank - 1],
            count: n,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    /// Over every cell that has both an estimate and ground truth.
    pub overall: Option<ErrorStats>,
    /// Same, restricted to crease cells.
    pub edge: Option<ErrorStats>,
    /// Fraction of ground-truth cells that received a normal.
    pub coverage: f64,
    pub normal_count: usize,
    pub high_curvature_count: usize,
    pub invalid_count: usize,
    pub gt_valid_count: usize,
}

impl EvalReport {
    pub fn edge_mean(&self) -> Option<f64> {
        self.edge.map(|s| s.mean)
    }

    pub const CSV_HEADER: &'static str =
        "method,mean_deg,median_deg,p95_deg,edge_mean_deg,coverage,high_curvature,invalid";

    /// One CSV row; absent statistics are left empty.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            opt(self.overall.map(|s| s.mean)),
            opt(self.overall.map(|s| s.median)),
            opt(self.overall.map(|s| s.p95)),
            opt(self.edge_mean()),
            self.coverage,
            self.high_curvature_count,
            self.invalid_count
        )
    }
}

impl fmt::Display for EvalReport {
    /// `key=value` lines prefixed by the method name.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.method;
        let opt = |v: Option<f64>| {
            v.map(|x| format!("{x:.6}"))
                .unwrap_or_else(|| "absent".into())
        };
        writeln!(f, "{m}.mean_deg={}", opt(self.overall.map(|s| s.mean)))?;
        writeln!(f, "{m}.median_deg={}", opt(self.overall.map(|s| s.median)))?;
        writeln!(f, "{m}.p95_deg={}", opt(self.overall.map(|s| s.p95)))?;
        writeln!(f, "{m}.edge_mean_deg={}", opt(self.edge_mean()))?;
        writeln!(f, "{m}.coverage={:.6}", self.coverage)?;
        writeln!(f, "{m}.normal={}", self.normal_count)?;
        writeln!(f, "{m}.high_curvature={}", self.high_curvature_count)?;
        writeln!(f, "{m}.invalid={}", self.invalid_count)
    }
}

/// Scores every cell.
pub fn evaluate(method: &str, normals: &NormalField, gt: &GroundTruth) -> Result<EvalReport> {
    evaluate_where(method, normals, gt, |_, _| true)
}

/// Scores only the cells for which `keep(row, col)` holds.
pub fn evaluate_where(
    method: &str,
    normals: &NormalField,
    gt: &GroundTruth,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<EvalReport> {
    if normals.rows() != gt.rows() || normals.cols() != gt.cols() {
        return Err(Error::contract(format!(
            "normal field is {}x{}, ground truth is {}x{}",
            normals.rows(),
            normals.cols(),
            gt.rows(),
            gt.cols()
        )));
    }
    let mut all = Vec::new();
    let mut edge = Vec::new();
    let (mut normal_count, mut hc, mut invalid, mut gt_valid) = (0, 0, 0, 0);
    for row in 0..gt.rows() {
        for col in 0..gt.cols() {
            let Some(truth) = gt.get(row, col) else {
                continue;
            };
            if !keep(row, col) {
                continue;
            }
            gt_valid += 1;
            match normals.get(row, col) {
                PointNormal::Normal(n) => {
                    normal_count += 1;
                    let err = angular_error(n, &truth.normal)?;
                    all.push(err);
                    if truth.crease {
                        edge.push(err);
                    }
                }
                PointNormal::HighCurvature => hc += 1,
                PointNormal::Invalid => invalid += 1,
            }
        }
    }
    Ok(EvalReport {
        method: method.to_string(),
        overall: ErrorStats::from_samples(&all),
        edge: ErrorStats::from_samples(&edge),
        coverage: if gt_valid == 0 {
            0.0
        } else {
            normal_count as f64 / gt_valid as f64
        },
        normal_count,
        high_curvature_count: hc,
        invalid_count: invalid,
        gt_valid_count: gt_valid,
    })
}
