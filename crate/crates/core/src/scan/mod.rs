//! Organized scan data model.
//!
//! Grid layout: row `r` is the `r`-th beam counted from the lowest elevation
//! upwards, column `c` is the `c`-th azimuth firing of the revolution. Cells
//! are stored row-major. The "top" neighbor of a cell is `r + 1`, the
//! "bottom" neighbor `r - 1`; "right" is `c + 1`, "left" is `c - 1`.

mod osf;
mod ply;

use nalgebra::Rotation3;

use crate::{Error, Result, Vec3};

pub use osf::{read_scan, write_scan};
pub use ply::{export_ply, normal_to_rgb};

#[derive(Debug, Clone, PartialEq)]
pub struct OrganizedScan {
    rows: usize,
    cols: usize,
    points: Vec<Vec3>,
    valid: Vec<bool>,
}

impl OrganizedScan {
    /// Builds a scan from row-major grids. Points of invalid cells are
    /// discarded and stored as the origin.
    pub fn new(rows: usize, cols: usize, mut points: Vec<Vec3>, valid: Vec<bool>) -> Result<Self> {
        if rows < 2 || cols < 1 {
            return Err(Error::contract(format!(
                "scan needs rows >= 2 and cols >= 1, got {rows}x{cols}"
            )));
        }
        let n = rows * cols;
        if points.len() != n || valid.len() != n {
            return Err(Error::contract(format!(
                "expected {n} cells, got {} points and {} mask entries",
                points.len(),
                valid.len()
            )));
        }
        for (i, (p, &v)) in points.iter_mut().zip(&valid).enumerate() {
            if !v {
                *p = Vec3::zeros();
                continue;
            }
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::contract(format!("cell {i}: non-finite valid point")));
            }
            if p.norm_squared() == 0.0 {
                return Err(Error::contract(format!(
                    "cell {i}: valid point at zero range"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            points,
            valid,
        })
    }

    /// Builds a scan from row-major optional points (`None` = no return).
    pub fn from_cells(rows: usize, cols: usize, cells: Vec<Option<Vec3>>) -> Result<Self> {
        let valid = cells.iter().map(Option::is_some).collect();
        let points = cells
            .into_iter()
            .map(|c| c.unwrap_or_else(Vec3::zeros))
            .collect();
        Self::new(rows, cols, points, valid)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of cells (`rows * cols`).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// The point at `(row, col)`, or `None` when the laser did not return.
    #[inline]
    pub fn point(&self, row: usize, col: usize) -> Option<&Vec3> {
        let i = self.index(row, col);
        if self.valid[i] {
            Some(&self.points[i])
        } else {
            None
        }
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[self.index(row, col)]
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// All valid points of one firing column, bottom beam first.
    pub fn extract_slice(&self, column_index: usize) -> Result<Slice> {
        if column_index >= self.cols {
            return Err(Error::OutOfRange {
                index: column_index,
                len: self.cols,
            });
        }
        let entries = (0..self.rows)
            .filter_map(|row| {
                self.point(row, column_index)
                    .map(|&point| SliceEntry { row, point })
            })
            .collect();
        Ok(Slice {
            column_index,
            entries,
        })
    }

    /// Applies one rotation about the sensor to every valid point.
    pub fn rotated(&self, rotation: &Rotation3<f64>) -> Self {
        let points = self
            .points
            .iter()
            .zip(&self.valid)
            .map(|(p, &v)| if v { rotation * p } else { *p })
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            points,
            valid: self.valid.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceEntry {
    pub row: usize,
    pub point: Vec3,
}

/// The valid points produced by one firing of the vertical laser stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub column_index: usize,
    entries: Vec<SliceEntry>,
}

impl Slice {
    pub fn new(column_index: usize, entries: Vec<SliceEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].row >= w[1].row) {
            return Err(Error::contract("slice rows must be strictly increasing"));
        }
        Ok(Self {
            column_index,
            entries,
        })
    }

    /// Slice whose points occupy consecutive rows starting at 0.
    pub fn from_points(column_index: usize, points: impl IntoIterator<Item = Vec3>) -> Self {
        let entries = points
            .into_iter()
            .enumerate()
            .map(|(row, point)| SliceEntry { row, point })
            .collect();
        Self {
            column_index,
            entries,
        }
    }

    pub fn entries(&self) -> &[SliceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn point(&self, i: usize) -> &Vec3 {
        &self.entries[i].point
    }

    pub fn points(&self) -> impl Iterator<Item = &Vec3> + '_ {
        self.entries.iter().map(|e| &e.point)
    }
}
