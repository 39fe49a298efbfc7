use std::io::Write;

use super::OrganizedScan;
use crate::normals::{NormalField, PointNormal};
use crate::{Error, Result, Vec3};

/// Maps each component from [-1, 1] to a byte: `floor((n * 0.5 + 0.5) * 255)`.
pub fn normal_to_rgb(n: &Vec3) -> [u8; 3] {
    let channel = |v: f64| ((v * 0.5 + 0.5) * 255.0).floor().clamp(0.0, 255.0) as u8;
    [channel(n.x), channel(n.y), channel(n.z)]
}

/// Writes every cell that has a normal as an ASCII PLY vertex colored by its
/// normal direction.
pub fn export_ply<W: Write>(
    scan: &OrganizedScan,
    normals: &NormalField,
    mut sink: W,
) -> Result<()> {
    if normals.rows() != scan.rows() || normals.cols() != scan.cols() {
        return Err(Error::contract(format!(
            "normal field is {}x{}, scan is {}x{}",
            normals.rows(),
            normals.cols(),
            scan.rows(),
            scan.cols()
        )));
    }
    let count = normals.normal_count();
    let mut buf = String::new();
    buf.push_str("ply\nformat ascii 1.0\n");
    buf.push_str(&format!("element vertex {count}\n"));
    for name in ["x", "y", "z", "nx", "ny", "nz"] {
        buf.push_str(&format!("property double {name}\n"));
    }
    for name in ["red", "green", "blue"] {
        buf.push_str(&format!("property uchar {name}\n"));
    }
    buf.push_str("end_header\n");

    for (p, cell) in scan.points().iter().zip(normals.cells()) {
        if let PointNormal::Normal(n) = cell {
            let [r, g, b] = normal_to_rgb(n);
            buf.push_str(&format!(
                "{} {} {} {} {} {} {r} {g} {b}\n",
                p.x, p.y, p.z, n.x, n.y, n.z
            ));
        }
    }
    sink.write_all(buf.as_bytes())?;
    sink.flush()?;
    Ok(())
}
