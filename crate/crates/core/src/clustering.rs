//! Angle-threshold clustering of slice chords.
//!
//! A slice of `n` points has `n - 1` chords ("lines"). Consecutive lines stay
//! in the same component while the angle between them is at most the
//! threshold; the component sizes ("strengths") are stored run-length
//! encoded. Line labels are then pushed onto points: a point adjacent to a
//! strong component (strength > 1) takes its label, a point between two
//! strong components goes to the one whose neighbor is closer, and a point
//! between two weak components keeps whatever label it already has.

use petgraph::graph::UnGraph;
use petgraph::visit::Dfs;

use crate::scan::Slice;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringParams {
    alpha_threshold: f64,
}

impl ClusteringParams {
    pub const DEFAULT_THRESHOLD_DEG: f64 = 30.0;

    /// `alpha_threshold` in radians, strictly inside `(0, pi)`.
    pub fn new(alpha_threshold: f64) -> Result<Self> {
        if !(alpha_threshold > 0.0 && alpha_threshold < std::f64::consts::PI) {
            return Err(Error::contract(format!(
                "alpha threshold must lie in (0, pi), got {alpha_threshold}"
            )));
        }
        Ok(Self { alpha_threshold })
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn alpha_threshold(&self) -> f64 {
        self.alpha_threshold
    }
}

impl Default for ClusteringParams {
    fn default() -> Self {
        Self {
            alpha_threshold: Self::DEFAULT_THRESHOLD_DEG.to_radians(),
        }
    }
}

/// Run-length encoded line labels: `strengths[l]` consecutive lines carry
/// label `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleComponents {
    strengths: Vec<u32>,
}

impl RleComponents {
    pub fn new(strengths: Vec<u32>) -> Result<Self> {
        if strengths.contains(&0) {
            return Err(Error::contract("component strengths must be >= 1"));
        }
        Ok(Self { strengths })
    }

    /// Run-length encodes an explicit line-label string.
    pub fn from_line_labels(labels: &[u32]) -> Self {
        let mut strengths: Vec<u32> = Vec::new();
        let mut prev = None;
        for &l in labels {
            if prev == Some(l) {
                *strengths.last_mut().unwrap() += 1;
            } else {
                strengths.push(1);
                prev = Some(l);
            }
        }
        Self { strengths }
    }

    pub fn strengths(&self) -> &[u32] {
        &self.strengths
    }

    pub fn component_count(&self) -> usize {
        self.strengths.len()
    }

    /// Total number of lines covered.
    pub fn line_count(&self) -> usize {
        self.strengths.iter().map(|&s| s as usize).sum()
    }

    /// Expands back to one label per line.
    pub fn line_labels(&self) -> Vec<u32> {
        self.strengths
            .iter()
            .enumerate()
            .flat_map(|(l, &s)| std::iter::repeat_n(l as u32, s as usize))
            .collect()
    }
}

/// One component label per slice point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointLabels {
    pub labels: Vec<u32>,
}

impl PointLabels {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn distinct_count(&self) -> usize {
        let mut n = 0;
        let mut prev = None;
        for &l in &self.labels {
            if prev != Some(l) {
                n += 1;
                prev = Some(l);
            }
        }
        n
    }
}

#[inline]
fn cosine(v1: &Vec3, v2: &Vec3) -> f64 {
    (v1.dot(v2) / (v1.norm() * v2.norm())).clamp(-1.0, 1.0)
}

/// Angle in `[0, pi]` between two non-zero vectors.
pub fn angle_between(v1: &Vec3, v2: &Vec3) -> Result<f64> {
    if v1.norm() == 0.0 || v2.norm() == 0.0 {
        return Err(Error::contract(
            "angle between zero-length vectors is undefined",
        ));
    }
    Ok(cosine(v1, v2).acos())
}

/// `angle_between(prev, next) > threshold` without calling `acos` when the
/// cosine is clearly on one side of `cos(threshold)`.
struct BreakTest {
    threshold: f64,
    cos_threshold: f64,
}

impl BreakTest {
    // Far larger than the rounding error of cos(threshold) and of the cosine
    // itself; anything inside the band falls back to the exact comparison.
    const BAND: f64 = 1e-9;

    fn new(params: &ClusteringParams) -> Self {
        Self {
            threshold: params.alpha_threshold,
            cos_threshold: params.alpha_threshold.cos(),
        }
    }

    #[inline]
    fn is_break(&self, prev: &Vec3, next: &Vec3) -> Result<bool> {
        let (n1, n2) = (prev.norm(), next.norm());
        if n1 == 0.0 || n2 == 0.0 {
            return Err(Error::contract("coincident consecutive points in slice"));
        }
        let c = (prev.dot(next) / (n1 * n2)).clamp(-1.0, 1.0);
        if c < self.cos_threshold - Self::BAND {
            Ok(true)
        } else if c > self.cos_threshold + Self::BAND {
            Ok(false)
        } else {
            Ok(c.acos() > self.threshold)
        }
    }
}

fn encode_into(points: &[Vec3], params: &ClusteringParams, strengths: &mut Vec<u32>) -> Result<()> {
    strengths.clear();
    if points.len() < 2 {
        return Err(Error::contract(format!(
            "line encoding needs at least 2 points, got {}",
            points.len()
        )));
    }
    let test = BreakTest::new(params);
    let mut v_prev = points[1] - points[0];
    if v_prev.norm() == 0.0 {
        return Err(Error::contract("coincident consecutive points in slice"));
    }
    let mut c = 1u32;
    for w in points[1..].windows(2) {
        let v_next = w[1] - w[0];
        if test.is_break(&v_prev, &v_next)? {
            strengths.push(c);
            c = 0;
        }
        c += 1;
        v_prev = v_next;
    }
    strengths.push(c);
    Ok(())
}

fn expand_into(points: &[Vec3], strengths: &[u32], labels: &mut Vec<u32>) -> Result<()> {
    labels.clear();
    let lines: usize = strengths.iter().map(|&s| s as usize).sum();
    if points.len() < 2 || lines + 1 != points.len() || strengths.contains(&0) {
        return Err(Error::contract(format!(
            "components cover {lines} lines but the slice has {} points",
            points.len()
        )));
    }
    labels.push(0);
    let mut s_prev = 1;
    for (l, &s) in strengths.iter().enumerate() {
        let l = l as u32;
        let disputed = labels.len() - 1;
        if s > 1 && s_prev == 1 {
            labels[disputed] = l;
        } else if s > 1 && s_prev > 1 {
            let p = &points[disputed];
            if (p - points[disputed + 1]).norm() < (p - points[disputed - 1]).norm() {
                labels[disputed] = l;
            }
        }
        labels.extend(std::iter::repeat_n(l, s as usize));
        s_prev = s;
    }
    Ok(())
}

/// Run-length encoded line components of a slice with at least two points.
pub fn encode_lines(slice: &Slice, params: &ClusteringParams) -> Result<RleComponents> {
    let points: Vec<Vec3> = slice.points().copied().collect();
    let mut strengths = Vec::new();
    encode_into(&points, params, &mut strengths)?;
    Ok(RleComponents { strengths })
}

/// Pushes line components onto the slice points.
pub fn expand_labels(slice: &Slice, rle: &RleComponents) -> Result<PointLabels> {
    let points: Vec<Vec3> = slice.points().copied().collect();
    let mut labels = Vec::new();
    expand_into(&points, &rle.strengths, &mut labels)?;
    Ok(PointLabels { labels })
}

/// Labels every point of a slice. Never fails: empty and single-point slices
/// get all-zero labels, and runs of coincident points share one label.
pub fn label_points(slice: &Slice, params: &ClusteringParams) -> PointLabels {
    let points: Vec<Vec3> = slice.points().copied().collect();
    let mut labels = Vec::new();
    SliceLabeler::new(*params).label(&points, &mut labels);
    PointLabels { labels }
}

/// Reusable scratch space for labeling many slices.
#[derive(Debug)]
pub(crate) struct SliceLabeler {
    params: ClusteringParams,
    strengths: Vec<u32>,
    unique: Vec<Vec3>,
    unique_labels: Vec<u32>,
}

impl SliceLabeler {
    pub(crate) fn new(params: ClusteringParams) -> Self {
        Self {
            params,
            strengths: Vec::new(),
            unique: Vec::new(),
            unique_labels: Vec::new(),
        }
    }

    pub(crate) fn label(&mut self, points: &[Vec3], labels: &mut Vec<u32>) {
        labels.clear();
        let has_duplicates = points.windows(2).any(|w| (w[1] - w[0]).norm() == 0.0);
        if !has_duplicates {
            if points.len() < 2 {
                labels.resize(points.len(), 0);
                return;
            }
            encode_into(points, &self.params, &mut self.strengths)
                .expect("slice without coincident points");
            expand_into(points, &self.strengths, labels).expect("strengths cover the slice");
            return;
        }

        // Merge runs of coincident points, cluster the rest, then copy each
        // survivor's label back onto its twins.
        self.unique.clear();
        for p in points {
            match self.unique.last() {
                Some(last) if (p - last).norm() == 0.0 => {}
                _ => self.unique.push(*p),
            }
        }
        if self.unique.len() < 2 {
            labels.resize(points.len(), 0);
            return;
        }
        encode_into(&self.unique, &self.params, &mut self.strengths).expect("deduplicated slice");
        expand_into(&self.unique, &self.strengths, &mut self.unique_labels)
            .expect("strengths cover the slice");
        let mut k = 0;
        labels.push(self.unique_labels[0]);
        for w in points.windows(2) {
            if (w[1] - w[0]).norm() != 0.0 {
                k += 1;
            }
            labels.push(self.unique_labels[k]);
        }
    }
}

/// Reference clustering: builds the chain graph over lines explicitly and
/// runs a generic depth-first search for connected components. Slow; meant
/// for checking [`encode_lines`].
pub fn dfs_reference_clustering(slice: &Slice, params: &ClusteringParams) -> Result<RleComponents> {
    let points: Vec<Vec3> = slice.points().copied().collect();
    if points.len() < 2 {
        return Err(Error::contract(format!(
            "line encoding needs at least 2 points, got {}",
            points.len()
        )));
    }
    let lines: Vec<Vec3> = points.windows(2).map(|w| w[1] - w[0]).collect();
    if lines.iter().any(|l| l.norm() == 0.0) {
        return Err(Error::contract("coincident consecutive points in slice"));
    }

    let mut graph = UnGraph::<(), f64>::default();
    let nodes: Vec<_> = lines.iter().map(|_| graph.add_node(())).collect();
    for i in 1..lines.len() {
        let alpha = angle_between(&lines[i - 1], &lines[i])?;
        if alpha <= params.alpha_threshold {
            graph.add_edge(nodes[i - 1], nodes[i], alpha);
        }
    }
    let mut component = vec![usize::MAX; lines.len()];
    let mut sizes: Vec<u32> = Vec::new();
    for start in &nodes {
        if component[start.index()] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        sizes.push(0);
        let mut dfs = Dfs::new(&graph, *start);
        while let Some(n) = dfs.next(&graph) {
            component[n.index()] = id;
            sizes[id] += 1;
        }
    }
    // Chain components are contiguous, so visiting order is line order.
    debug_assert!(component
        .windows(2)
        .all(|w| w[1] == w[0] || w[1] == w[0] + 1));
    Ok(RleComponents { strengths: sizes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn slice(points: &[[f64; 3]]) -> Slice {
        Slice::from_points(0, points.iter().map(|p| v(p[0], p[1], p[2])))
    }

    fn params(rad: f64) -> ClusteringParams {
        ClusteringParams::new(rad).unwrap()
    }

    #[test]
    fn angles() {
        assert_eq!(angle_between(&v(1., 0., 0.), &v(1., 0., 0.)).unwrap(), 0.0);
        assert!((angle_between(&v(1., 0., 0.), &v(0., 1., 0.)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((angle_between(&v(1., 0., 0.), &v(-1., 0., 0.)).unwrap() - PI).abs() < 1e-15);
        assert_eq!(angle_between(&v(2., 0., 0.), &v(3., 0., 0.)).unwrap(), 0.0);
        assert!(angle_between(&v(0., 0., 0.), &v(3., 0., 0.)).is_err());
    }

    #[test]
    fn nearly_parallel_cosine_overshoot_is_clamped() {
        let a = v(0.1, 0.2, 0.3);
        let alpha = angle_between(&a, &(a * 3.0)).unwrap();
        assert!(alpha.is_finite() && alpha < 1e-7);
    }

    #[test]
    fn params_validation() {
        assert!(ClusteringParams::new(0.0).is_err());
        assert!(ClusteringParams::new(PI).is_err());
        assert!(ClusteringParams::new(f64::NAN).is_err());
        assert!((ClusteringParams::default().alpha_threshold() - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_slice_is_one_component() {
        let s = Slice::from_points(0, (0..5).map(|i| v(0., 0., i as f64)));
        assert_eq!(encode_lines(&s, &params(0.52)).unwrap().strengths(), &[4]);
        assert_eq!(
            dfs_reference_clustering(&s, &params(0.52))
                .unwrap()
                .strengths(),
            &[4]
        );
    }

    #[test]
    fn l_shape_breaks_once() {
        let s = slice(&[
            [0., 0., 0.],
            [0., 0., 1.],
            [0., 0., 2.],
            [0., 1., 2.],
            [0., 2., 2.],
        ]);
        assert_eq!(
            encode_lines(&s, &params(0.52)).unwrap().strengths(),
            &[2, 2]
        );
        assert_eq!(
            dfs_reference_clustering(&s, &params(0.52))
                .unwrap()
                .strengths(),
            &[2, 2]
        );
        // Equal distances on both sides keep the disputed point where it is.
        assert_eq!(label_points(&s, &params(0.52)).labels, [0, 0, 0, 1, 1]);
    }

    #[test]
    fn threshold_is_strict() {
        // Exactly 90 degrees does not exceed a 90 degree threshold.
        let s = slice(&[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.]]);
        assert_eq!(
            encode_lines(&s, &params(FRAC_PI_2)).unwrap().strengths(),
            &[2]
        );
        assert_eq!(
            encode_lines(&s, &params(FRAC_PI_2 - 1e-12))
                .unwrap()
                .strengths(),
            &[1, 1]
        );
    }

    #[test]
    fn too_few_points() {
        let s = slice(&[[1., 0., 0.]]);
        assert!(encode_lines(&s, &params(0.5)).is_err());
        assert!(dfs_reference_clustering(&s, &params(0.5)).is_err());
    }

    #[test]
    fn coincident_points_are_rejected_by_encoder() {
        let s = slice(&[[1., 0., 0.], [1., 0., 0.], [2., 0., 0.]]);
        assert!(encode_lines(&s, &params(0.5)).is_err());
        assert!(dfs_reference_clustering(&s, &params(0.5)).is_err());
    }

    // Hand traces of the expansion pseudocode. Notation: L = point labels,
    // d = index of the disputed point (last labeled point).

    #[test]
    fn expand_single_component() {
        // L=[0]; l=0,s=2,prev=1 -> L[0]=0, append 0,0 -> [0,0,0]
        let s = Slice::from_points(0, (0..3).map(|i| v(i as f64, 0., 0.)));
        let rle = RleComponents::new(vec![2]).unwrap();
        assert_eq!(expand_labels(&s, &rle).unwrap().labels, [0, 0, 0]);
    }

    #[test]
    fn expand_weak_middle_component() {
        // L=[0]
        // l=0,s=2,prev=1 -> L[0]=0, append 0,0      -> [0,0,0]
        // l=1,s=1        -> no relabel, append 1    -> [0,0,0,1]
        // l=2,s=2,prev=1 -> L[3]=2, append 2,2      -> [0,0,0,2,2,2]
        let s = Slice::from_points(0, (0..6).map(|i| v(i as f64, (i % 2) as f64, 0.)));
        let rle = RleComponents::new(vec![2, 1, 2]).unwrap();
        assert_eq!(expand_labels(&s, &rle).unwrap().labels, [0, 0, 0, 2, 2, 2]);
    }

    #[test]
    fn expand_strong_strong_tie_break() {
        // L=[0]; l=0,s=3 -> [0,0,0,0]; l=1,s=2,prev=3 -> d=3, compare
        // |P3-P4| against |P3-P2|; relabel only when strictly closer to P4.
        let rle = RleComponents::new(vec![3, 2]).unwrap();
        let closer_next = slice(&[
            [0., 0., 0.],
            [0., 0., 1.],
            [0., 0., 2.],
            [0., 0., 3.],
            [0., 0.5, 3.],
            [0., 1., 3.],
        ]);
        assert_eq!(
            expand_labels(&closer_next, &rle).unwrap().labels,
            [0, 0, 0, 1, 1, 1]
        );

        let equal = slice(&[
            [0., 0., 0.],
            [0., 0., 1.],
            [0., 0., 2.],
            [0., 0., 3.],
            [0., 1., 3.],
            [0., 2., 3.],
        ]);
        assert_eq!(
            expand_labels(&equal, &rle).unwrap().labels,
            [0, 0, 0, 0, 1, 1]
        );

        let farther = slice(&[
            [0., 0., 0.],
            [0., 0., 1.],
            [0., 0., 2.],
            [0., 0., 3.],
            [0., 2., 3.],
            [0., 4., 3.],
        ]);
        assert_eq!(
            expand_labels(&farther, &rle).unwrap().labels,
            [0, 0, 0, 0, 1, 1]
        );
    }

    #[test]
    fn expand_rejects_inconsistent_rle() {
        let s = Slice::from_points(0, (0..4).map(|i| v(i as f64, 0., 0.)));
        let rle = RleComponents::new(vec![2]).unwrap();
        assert!(expand_labels(&s, &rle).is_err());
        assert!(RleComponents::new(vec![2, 0]).is_err());
    }

    #[test]
    fn degenerate_slices() {
        assert!(label_points(&slice(&[]), &params(0.5)).is_empty());
        assert_eq!(
            label_points(&slice(&[[1., 2., 3.]]), &params(0.5)).labels,
            [0]
        );
        let same = slice(&[[1., 2., 3.], [1., 2., 3.], [1., 2., 3.]]);
        assert_eq!(label_points(&same, &params(0.5)).labels, [0, 0, 0]);
    }

    #[test]
    fn duplicates_inherit_twin_label() {
        // L-shape with the corner point and the last point doubled.
        let s = slice(&[
            [0., 0., 0.],
            [0., 0., 1.],
            [0., 0., 2.],
            [0., 0., 2.],
            [0., 0.5, 2.],
            [0., 1., 2.],
            [0., 1., 2.],
        ]);
        // Deduplicated: strengths [2, 2]; |P2-P3| = 0.5 < |P2-P1| = 1 -> corner goes to 1.
        assert_eq!(
            label_points(&s, &params(0.52)).labels,
            [0, 0, 1, 1, 1, 1, 1]
        );
    }

    #[test]
    fn rle_of_line_labels() {
        let rle = RleComponents::from_line_labels(&[0, 0, 0, 0, 1, 2, 2, 2, 3, 4, 5, 5, 5]);
        assert_eq!(rle.strengths(), &[4, 1, 3, 1, 1, 3]);
        assert_eq!(rle.line_count(), 13);
        assert_eq!(rle.line_labels(), [0, 0, 0, 0, 1, 2, 2, 2, 3, 4, 5, 5, 5]);
    }
}
