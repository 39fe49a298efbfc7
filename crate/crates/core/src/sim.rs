//! Ray-cast simulation of a spinning multi-beam LiDAR over analytic scenes.
//!
//! Scan points and ground-truth normals are expressed in the sensor frame.
//! Row `r` fires at `beam_elevations[r]`; column `c` at azimuth
//! `2 pi c / azimuth_steps`, measured from the sensor's +x axis toward +y.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::{Isometry3, Unit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scan::OrganizedScan;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct SensorRig {
    /// Radians, strictly increasing (row 0 is the lowest beam).
    pub beam_elevations: Vec<f64>,
    pub azimuth_steps: usize,
    /// Sensor pose in the world.
    pub pose: Isometry3<f64>,
    pub max_range: f64,
    /// Standard deviation of the additive range noise, meters.
    pub range_noise_sigma: f64,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 16 beams over [-15, 15] deg, 900 azimuth steps.
    Vlp16,
    /// 32 beams over [-45, 45] deg, 1024 azimuth steps.
    Os0_32,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vlp16" => Ok(Preset::Vlp16),
            "os0-32" => Ok(Preset::Os0_32),
            other => Err(Error::contract(format!("unknown preset `{other}`"))),
        }
    }
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Vlp16 => "vlp16",
            Preset::Os0_32 => "os0-32",
        }
    }

    pub fn rig(&self) -> SensorRig {
        match self {
            Preset::Vlp16 => SensorRig::uniform(16, -15.0, 15.0, 900),
            Preset::Os0_32 => SensorRig::uniform(32, -45.0, 45.0, 1024),
        }
    }
}

impl SensorRig {
    pub const DEFAULT_MAX_RANGE: f64 = 100.0;

    /// `beams` elevations evenly spaced over `[min_deg, max_deg]`, noiseless,
    /// at the world origin.
    pub fn uniform(beams: usize, min_deg: f64, max_deg: f64, azimuth_steps: usize) -> Self {
        let beam_elevations = (0..beams)
            .map(|i| {
                let t = if beams > 1 {
                    i as f64 / (beams - 1) as f64
                } else {
                    0.0
                };
                (min_deg + t * (max_deg - min_deg)).to_radians()
            })
            .collect();
        Self {
            beam_elevations,
            azimuth_steps,
            pose: Isometry3::identity(),
            max_range: Self::DEFAULT_MAX_RANGE,
            range_noise_sigma: 0.0,
            noise_seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.range_noise_sigma = sigma;
        self.noise_seed = seed;
        self
    }

    pub fn with_pose(mut self, pose: Isometry3<f64>) -> Self {
        self.pose = pose;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_elevations.len() < 2 {
            return Err(Error::contract("rig needs at least 2 beams"));
        }
        if self.beam_elevations.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::contract(
                "beam elevations must be strictly increasing",
            ));
        }
        if self.azimuth_steps < 1 {
            return Err(Error::contract("azimuth_steps must be >= 1"));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::contract("max_range must be positive"));
        }
        if !(self.range_noise_sigma >= 0.0) {
            return Err(Error::contract("noise sigma must be >= 0"));
        }
        Ok(())
    }

    /// Unit ray direction of cell `(row, col)` in the sensor frame.
    pub fn ray_direction(&self, row: usize, col: usize) -> Vec3 {
        let elev = self.beam_elevations[row];
        let az = std::f64::consts::TAU * col as f64 / self.azimuth_steps as f64;
        Vec3::new(elev.cos() * az.cos(), elev.cos() * az.sin(), elev.sin())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Solid half-space `{x : normal . x <= offset}`; the surface faces
    /// along `normal`.
    HalfSpace { normal: Unit<Vec3>, offset: f64 },
    /// Solid axis-aligned box.
    Box { min: Vec3, max: Vec3 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub id: u32,
    pub shape: Shape,
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    range: f64,
    normal: Vec3,
    id: u32,
    /// Face within the primitive (boxes have six).
    face: u8,
}

impl Primitive {
    fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let denom = normal.dot(dir);
                if !(denom < 0.0) {
                    return None;
                }
                let t = (offset - normal.dot(origin)) / denom;
                (t > 0.0).then_some(Hit {
                    range: t,
                    normal: normal.into_inner(),
                    id: self.id,
                    face: 0,
                })
            }
            Shape::Box { min, max } => {
                let mut t_enter = f64::NEG_INFINITY;
                let mut t_exit = f64::INFINITY;
                let mut enter_axis = 0;
                for axis in 0..3 {
                    let (o, d) = (origin[axis], dir[axis]);
                    if d == 0.0 {
                        if o < min[axis] || o > max[axis] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (min[axis] - o) / d;
                    let t2 = (max[axis] - o) / d;
                    let (near, far) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
                    if near > t_enter {
                        t_enter = near;
                        enter_axis = axis;
                    }
                    t_exit = t_exit.min(far);
                }
                if !(t_enter > 0.0 && t_enter <= t_exit) {
                    return None;
                }
                let mut normal = Vec3::zeros();
                let outward = -dir[enter_axis].signum();
                normal[enter_axis] = outward;
                let face = 2 * enter_axis as u8 + u8::from(outward > 0.0);
                Some(Hit {
                    range: t_enter,
                    normal,
                    id: self.id,
                    face,
                })
            }
        }
    }

    fn contains_surface_point(&self, p: &Vec3, tol: f64) -> bool {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => (normal.dot(p) - offset).abs() <= tol,
            Shape::Box { min, max } => {
                let inside = (0..3).all(|a| p[a] >= min[a] - tol && p[a] <= max[a] + tol);
                let on_face =
                    (0..3).any(|a| (p[a] - min[a]).abs() <= tol || (p[a] - max[a]).abs() <= tol);
                inside && on_face
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        for p in &self.primitives {
            match &p.shape {
                Shape::HalfSpace { normal, offset } => {
                    if (normal.norm() - 1.0).abs() > 1e-9 || !offset.is_finite() {
                        return Err(Error::contract(format!("primitive {}: bad plane", p.id)));
                    }
                }
                Shape::Box { min, max } => {
                    if (0..3).any(|a| !(max[a] > min[a])) {
                        return Err(Error::contract(format!("primitive {}: empty box", p.id)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Adds the half-space below `normal . x = offset`.
    pub fn with_plane(mut self, id: u32, normal: Vec3, offset: f64) -> Self {
        self.primitives.push(Primitive {
            id,
            shape: Shape::HalfSpace {
                normal: Unit::new_normalize(normal),
                offset,
            },
        });
        self
    }

    pub fn with_box(mut self, id: u32, min: Vec3, max: Vec3) -> Self {
        self.primitives.push(Primitive {
            id,
            shape: Shape::Box { min, max },
        });
        self
    }

    pub fn primitive(&self, id: u32) -> Option<&Primitive> {
        self.primitives.iter().find(|p| p.id == id)
    }

    /// Same scene with every primitive moved by `iso`. Boxes stay axis
    /// aligned, so only translations are allowed for scenes containing them.
    pub fn transformed(&self, iso: &Isometry3<f64>) -> Result<Self> {
        let primitives = self
            .primitives
            .iter()
            .map(|p| {
                let shape = match &p.shape {
                    Shape::HalfSpace { normal, offset } => {
                        let n = iso.rotation * normal.into_inner();
                        Shape::HalfSpace {
                            normal: Unit::new_normalize(n),
                            offset: offset + n.dot(&iso.translation.vector),
                        }
                    }
                    Shape::Box { min, max } => {
                        if iso.rotation.angle() != 0.0 {
                            return Err(Error::contract("cannot rotate an axis-aligned box"));
                        }
                        let t = iso.translation.vector;
                        Shape::Box {
                            min: min + t,
                            max: max + t,
                        }
                    }
                };
                Ok(Primitive { id: p.id, shape })
            })
            .collect::<Result<_>>()?;
        Ok(Self { primitives })
    }
}

pub const FLOOR_ID: u32 = 0;
pub const WALL_ID: u32 = 1;
pub const BOX_ID: u32 = 2;

/// Floor `z = -1` (normal +z).
pub fn make_floor_scene() -> Scene {
    Scene::default().with_plane(FLOOR_ID, Vec3::z(), -1.0)
}

/// Floor `z = -1` meeting a wall `x = wall_distance` (normal -x).
pub fn make_corner_scene(wall_distance: f64) -> Result<Scene> {
    if !(wall_distance > 0.0) {
        return Err(Error::contract("wall distance must be positive"));
    }
    Ok(make_floor_scene().with_plane(WALL_ID, -Vec3::x(), -wall_distance))
}

/// Floor plus a 2 x 2 x 1.5 m box resting on it, centered 4 m ahead.
pub fn make_box_scene() -> Scene {
    make_floor_scene().with_box(BOX_ID, Vec3::new(3.0, -1.0, -1.0), Vec3::new(5.0, 1.0, 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtCell {
    pub hit_id: u32,
    /// Outward unit surface normal, sensor frame.
    pub normal: Vec3,
    /// The cell's 4-neighborhood touches more than one surface face.
    pub crease: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    rows: usize,
    cols: usize,
    cells: Vec<Option<GtCell>>,
}

impl GroundTruth {
    pub fn new(rows: usize, cols: usize, cells: Vec<Option<GtCell>>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::contract("ground truth shape mismatch"));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&GtCell> {
        self.cells[row * self.cols + col].as_ref()
    }

    pub fn cells(&self) -> &[Option<GtCell>] {
        &self.cells
    }

    fn neighbors(&self, row: usize, col: usize) -> [Option<&GtCell>; 4] {
        let cols = self.cols;
        [
            self.get(row, (col + cols - 1) % cols),
            self.get(row, (col + 1) % cols),
            if row + 1 < self.rows {
                self.get(row + 1, col)
            } else {
                None
            },
            if row > 0 {
                self.get(row - 1, col)
            } else {
                None
            },
        ]
    }

    /// Valid, non-crease cell with all four neighbors valid.
    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        match self.get(row, col) {
            Some(c) if !c.crease => self.neighbors(row, col).iter().all(Option::is_some),
            _ => false,
        }
    }

    /// Writes `row,col,hit_id,nx,ny,nz,crease`, one line per valid cell.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        let mut buf = String::from("row,col,hit_id,nx,ny,nz,crease\n");
        for (i, cell) in self.cells.iter().enumerate() {
            if let Some(c) = cell {
                let _ = writeln!(
                    buf,
                    "{},{},{},{},{},{},{}",
                    i / self.cols,
                    i % self.cols,
                    c.hit_id,
                    c.normal.x,
                    c.normal.y,
                    c.normal.z,
                    u8::from(c.crease)
                );
            }
        }
        sink.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(source: R, rows: usize, cols: usize) -> Result<Self> {
        let mut cells = vec![None; rows * cols];
        let mut offset = 0;
        for (lineno, line) in source.lines().enumerate() {
            let line = line?;
            let here = offset;
            offset += line.len() + 1;
            if lineno == 0 {
                if line.trim() != "row,col,hit_id,nx,ny,nz,crease" {
                    return Err(Error::parse(here, "unexpected ground truth header"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| Error::parse(here, format!("line {}: bad {what}", lineno + 1));
            if f.len() != 7 {
                return Err(bad("field count"));
            }
            let row: usize = f[0].parse().map_err(|_| bad("row"))?;
            let col: usize = f[1].parse().map_err(|_| bad("col"))?;
            if row >= rows || col >= cols {
                return Err(bad("cell index"));
            }
            let hit_id = f[2].parse().map_err(|_| bad("hit_id"))?;
            let mut n = [0.0; 3];
            for (dst, s) in n.iter_mut().zip(&f[3..6]) {
                *dst = s.parse().map_err(|_| bad("normal"))?;
            }
            let crease = match f[6] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("crease flag")),
            };
            cells[row * cols + col] = Some(GtCell {
                hit_id,
                normal: Vec3::new(n[0], n[1], n[2]),
                crease,
            });
        }
        Self::new(rows, cols, cells)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Standard normal draw keyed by `(seed, row, col)`, independent of the
/// order in which cells are simulated.
fn cell_noise(seed: u64, row: usize, col: usize) -> f64 {
    let key = splitmix64(seed ^ splitmix64(((row as u64) << 32) ^ col as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    StandardNormal.sample(&mut rng)
}

pub fn simulate(rig: &SensorRig, scene: &Scene) -> Result<(OrganizedScan, GroundTruth)> {
    rig.validate()?;
    scene.validate()?;
    let rows = rig.beam_elevations.len();
    let cols = rig.azimuth_steps;
    let origin = rig.pose.translation.vector;
    let to_sensor = rig.pose.rotation.inverse();

    let mut points = vec![Vec3::zeros(); rows * cols];
    let mut valid = vec![false; rows * cols];
    let mut hits: Vec<Option<Hit>> = vec![None; rows * cols];

    for row in 0..rows {
        for col in 0..cols {
            let dir_sensor = rig.ray_direction(row, col);
            let dir = rig.pose.rotation * dir_sensor;
            let nearest = scene
                .primitives
                .iter()
                .filter_map(|p| p.intersect(&origin, &dir))
                .filter(|h| h.range <= rig.max_range)
                .min_by(|a, b| a.range.total_cmp(&b.range));
            let Some(hit) = nearest else { continue };
            let mut range = hit.range;
            if rig.range_noise_sigma > 0.0 {
                range += rig.range_noise_sigma * cell_noise(rig.noise_seed, row, col);
            }
            if !(range > 0.0) {
                continue;
            }
            let i = row * cols + col;
            points[i] = dir_sensor * range;
            valid[i] = true;
            hits[i] = Some(hit);
        }
    }

    let face_at = |row: usize, col: usize| hits[row * cols + col].map(|h| (h.id, h.face));
    let mut cells = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let Some(hit) = hits[row * cols + col] else {
                cells.push(None);
                continue;
            };
            let own = (hit.id, hit.face);
            let crease = [
                Some(face_at(row, (col + cols - 1) % cols)),
                Some(face_at(row, (col + 1) % cols)),
                (row + 1 < rows).then(|| face_at(row + 1, col)),
                (row > 0).then(|| face_at(row - 1, col)),
            ]
            .into_iter()
            .flatten()
            .flatten()
            .any(|f| f != own);
            cells.push(Some(GtCell {
                hit_id: hit.id,
                normal: to_sensor * hit.normal,
                crease,
            }));
        }
    }

    let scan = OrganizedScan::new(rows, cols, points, valid)?;
    let gt = GroundTruth::new(rows, cols, cells)?;
    Ok((scan, gt))
}

/// Largest distance between a noiseless simulated point (moved back to the
/// world) and the surface of the primitive it was attributed to.
pub fn max_surface_deviation(
    rig: &SensorRig,
    scene: &Scene,
    scan: &OrganizedScan,
    gt: &GroundTruth,
) -> f64 {
    let mut worst: f64 = 0.0;
    for row in 0..scan.rows() {
        for col in 0..scan.cols() {
            let (Some(p), Some(cell)) = (scan.point(row, col), gt.get(row, col)) else {
                continue;
            };
            let world = rig.pose * nalgebra::Point3::from(*p);
            let prim = scene
                .primitive(cell.hit_id)
                .expect("hit id belongs to scene");
            let d = match &prim.shape {
                Shape::HalfSpace { normal, offset } => (normal.dot(&world.coords) - offset).abs(),
                Shape::Box { .. } => {
                    if prim.contains_surface_point(&world.coords, 1e-9) {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
            };
            worst = worst.max(d);
        }
    }
    worst
}
