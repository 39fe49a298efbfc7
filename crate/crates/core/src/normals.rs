//! Cross-product normals on organized scans.
//!
//! For a valid point `p` the normal is `(right - left) x (top - bottom)`.
//! Horizontal neighbors wrap around the revolution, vertical ones do not.
//! A missing neighbor is replaced by `p` itself; when both neighbors of one
//! direction are missing the point gets no normal. Normals are unit length
//! and oriented toward the sensor (`n . p <= 0`).
//!
//! The label-restricted variant clusters every column first and treats a
//! vertical neighbor with a foreign label as missing. If both vertical
//! neighbors exist and both are foreign the point is flagged
//! [`NormalStatus::HighCurvature`]. Horizontal neighbors are never filtered.

use crate::clustering::{label_points, ClusteringParams, SliceLabeler};
use crate::scan::{OrganizedScan, Slice};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalMethod {
    Baseline,
    LabelRestricted(ClusteringParams),
}

impl NormalMethod {
    pub fn name(&self) -> &'static str {
        match self {
            NormalMethod::Baseline => "baseline",
            NormalMethod::LabelRestricted(_) => "labeled",
        }
    }

    pub fn estimate(&self, scan: &OrganizedScan) -> NormalField {
        match self {
            NormalMethod::Baseline => normals_baseline(scan),
            NormalMethod::LabelRestricted(params) => normals_labeled(scan, params),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormalStatus {
    Normal,
    HighCurvature,
    Invalid,
}

impl NormalStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormalStatus::Normal => "normal",
            NormalStatus::HighCurvature => "high_curvature",
            NormalStatus::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointNormal {
    /// Unit normal facing the sensor.
    Normal(Vec3),
    /// Both vertical neighbors belong to other components.
    HighCurvature,
    Invalid,
}

impl PointNormal {
    pub fn status(&self) -> NormalStatus {
        match self {
            PointNormal::Normal(_) => NormalStatus::Normal,
            PointNormal::HighCurvature => NormalStatus::HighCurvature,
            PointNormal::Invalid => NormalStatus::Invalid,
        }
    }

    pub fn normal(&self) -> Option<&Vec3> {
        match self {
            PointNormal::Normal(n) => Some(n),
            _ => None,
        }
    }
}

/// Row-major per-cell normals, same shape as the scan they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    rows: usize,
    cols: usize,
    cells: Vec<PointNormal>,
}

impl NormalField {
    /// # Panics
    /// If `cells.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, cells: Vec<PointNormal>) -> Self {
        assert_eq!(cells.len(), rows * cols, "normal field shape mismatch");
        Self { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &PointNormal {
        &self.cells[row * self.cols + col]
    }

    pub fn cells(&self) -> &[PointNormal] {
        &self.cells
    }

    pub fn count(&self, status: NormalStatus) -> usize {
        self.cells.iter().filter(|c| c.status() == status).count()
    }

    pub fn normal_count(&self) -> usize {
        self.count(NormalStatus::Normal)
    }
}

/// Unnormalized `(right - left) x (top - bottom)` after substituting `p` for
/// missing neighbors, or `None` when a whole direction is missing.
#[inline]
pub fn raw_cross(
    p: &Vec3,
    left: Option<&Vec3>,
    right: Option<&Vec3>,
    top: Option<&Vec3>,
    bottom: Option<&Vec3>,
) -> Option<Vec3> {
    if (left.is_none() && right.is_none()) || (top.is_none() && bottom.is_none()) {
        return None;
    }
    let h = right.unwrap_or(p) - left.unwrap_or(p);
    let v = top.unwrap_or(p) - bottom.unwrap_or(p);
    Some(h.cross(&v))
}

#[inline]
fn oriented_unit(raw: Vec3, p: &Vec3) -> PointNormal {
    let len = raw.norm();
    if !(len > 0.0) || !len.is_finite() {
        return PointNormal::Invalid;
    }
    let n = raw / len;
    PointNormal::Normal(if n.dot(p) > 0.0 { -n } else { n })
}

#[inline]
fn cell_normal(
    p: &Vec3,
    left: Option<&Vec3>,
    right: Option<&Vec3>,
    top: Option<&Vec3>,
    bottom: Option<&Vec3>,
) -> PointNormal {
    match raw_cross(p, left, right, top, bottom) {
        Some(raw) => oriented_unit(raw, p),
        None => PointNormal::Invalid,
    }
}

#[inline]
fn horizontal(scan: &OrganizedScan, row: usize, col: usize) -> (Option<&Vec3>, Option<&Vec3>) {
    let cols = scan.cols();
    let left = scan.point(row, (col + cols - 1) % cols);
    let right = scan.point(row, (col + 1) % cols);
    (left, right)
}

pub fn normals_baseline(scan: &OrganizedScan) -> NormalField {
    let (rows, cols) = (scan.rows(), scan.cols());
    let mut cells = Vec::with_capacity(scan.len());
    for row in 0..rows {
        for col in 0..cols {
            let Some(p) = scan.point(row, col) else {
                cells.push(PointNormal::Invalid);
                continue;
            };
            let (left, right) = horizontal(scan, row, col);
            let top = if row + 1 < rows {
                scan.point(row + 1, col)
            } else {
                None
            };
            let bottom = if row > 0 {
                scan.point(row - 1, col)
            } else {
                None
            };
            cells.push(cell_normal(p, left, right, top, bottom));
        }
    }
    NormalField { rows, cols, cells }
}

const NO_LABEL: u32 = u32::MAX;

pub fn normals_labeled(scan: &OrganizedScan, params: &ClusteringParams) -> NormalField {
    let (rows, cols) = (scan.rows(), scan.cols());
    let mut cells = vec![PointNormal::Invalid; scan.len()];

    let mut labeler = SliceLabeler::new(*params);
    let mut slice_points: Vec<Vec3> = Vec::with_capacity(rows);
    let mut slice_rows: Vec<usize> = Vec::with_capacity(rows);
    let mut slice_labels: Vec<u32> = Vec::with_capacity(rows);
    let mut column_labels = vec![NO_LABEL; rows];

    for col in 0..cols {
        slice_points.clear();
        slice_rows.clear();
        for row in 0..rows {
            if let Some(p) = scan.point(row, col) {
                slice_points.push(*p);
                slice_rows.push(row);
            }
        }
        labeler.label(&slice_points, &mut slice_labels);
        column_labels.fill(NO_LABEL);
        for (&row, &l) in slice_rows.iter().zip(&slice_labels) {
            column_labels[row] = l;
        }

        for (&row, p) in slice_rows.iter().zip(&slice_points) {
            let own = column_labels[row];
            let mut top = if row + 1 < rows {
                scan.point(row + 1, col)
            } else {
                None
            };
            let mut bottom = if row > 0 {
                scan.point(row - 1, col)
            } else {
                None
            };
            let top_foreign = top.is_some() && column_labels[row + 1] != own;
            let bottom_foreign = bottom.is_some() && column_labels[row - 1] != own;
            let cell = if top_foreign && bottom_foreign {
                PointNormal::HighCurvature
            } else {
                if top_foreign {
                    top = None;
                }
                if bottom_foreign {
                    bottom = None;
                }
                let (left, right) = horizontal(scan, row, col);
                cell_normal(p, left, right, top, bottom)
            };
            cells[scan.index(row, col)] = cell;
        }
    }
    NormalField { rows, cols, cells }
}

/// Normals of a single slice, computed in the slice's own vertical plane.
///
/// The tangent is `next - prev` over grid-adjacent, same-label neighbors
/// (substituting the point itself for an unusable one); the normal is the
/// part of the point's range direction orthogonal to that tangent, flipped
/// toward the sensor. Points with no usable neighbor get `None`.
pub fn slice_normals_2d(slice: &Slice, params: &ClusteringParams) -> Vec<(usize, Option<Vec3>)> {
    let labels = label_points(slice, params).labels;
    let entries = slice.entries();
    (0..entries.len())
        .map(|i| {
            let e = &entries[i];
            let usable = |j: usize, row: usize| {
                let o = &entries[j];
                (o.row == row && labels[j] == labels[i]).then_some(&o.point)
            };
            let prev = if i > 0 && e.row > 0 {
                usable(i - 1, e.row - 1)
            } else {
                None
            };
            let next = if i + 1 < entries.len() {
                usable(i + 1, e.row + 1)
            } else {
                None
            };
            if prev.is_none() && next.is_none() {
                return (e.row, None);
            }
            let p = &e.point;
            let t = next.unwrap_or(p) - prev.unwrap_or(p);
            let tt = t.norm_squared();
            if !(tt > 0.0) {
                return (e.row, None);
            }
            let radial = p - t * (p.dot(&t) / tt);
            let len = radial.norm();
            if !(len > 0.0) {
                return (e.row, None);
            }
            (e.row, Some(-radial / len))
        })
        .collect()
}
