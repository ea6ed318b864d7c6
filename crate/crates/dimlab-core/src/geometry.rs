//! Point clouds at a declared resolution, canonical set generators,
//! dyadic decomposition and separated-subset extraction.
//!
//! Every scale-dependent estimator in this crate treats a cloud as a
//! delta-net of an ideal set: each ideal point lies within `resolution`
//! of some stored point, and no estimator may look below that floor.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{DimlabError, Result};

/// Hard cap on generated cloud sizes; generators error out instead of
/// allocating unbounded point sets.
pub const MAX_GENERATED_POINTS: usize = 4_000_000;

/// Finite set of points in R^d with a declared resolution delta.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    resolution: f64,
    label: String,
    bbox_min: Vec<f64>,
    bbox_max: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from raw points. Points are sorted lexicographically and
    /// exact duplicates are merged, so identical inputs yield identical clouds.
    pub fn new(points: Vec<Vec<f64>>, resolution: f64, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(DimlabError::invalid("point cloud must be non-empty"));
        }
        if !(resolution > 0.0) {
            return Err(DimlabError::invalid("resolution must be positive"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(DimlabError::invalid("ambient dimension must be >= 1"));
        }
        let mut points = points;
        for p in &points {
            if p.len() != dim {
                return Err(DimlabError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(DimlabError::invalid("point coordinates must be finite"));
            }
        }
        points.sort_by(|a, b| lex_cmp(a, b));
        points.dedup();
        let mut bbox_min = vec![f64::INFINITY; dim];
        let mut bbox_max = vec![f64::NEG_INFINITY; dim];
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            for (c, x) in p.iter().enumerate() {
                bbox_min[c] = bbox_min[c].min(*x);
                bbox_max[c] = bbox_max[c].max(*x);
            }
            coords.extend_from_slice(p);
        }
        Ok(PointCloud {
            coords,
            dim,
            resolution,
            label: label.into(),
            bbox_min,
            bbox_max,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty clouds
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn bbox(&self) -> (&[f64], &[f64]) {
        (&self.bbox_min, &self.bbox_max)
    }

    /// Largest bounding-box side; a coarse diameter proxy.
    pub fn extent(&self) -> f64 {
        self.bbox_min
            .iter()
            .zip(&self.bbox_max)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }

    /// Number of dyadic levels between the unit scale and the resolution floor,
    /// i.e. the largest j with 2^-j >= resolution.
    pub fn max_level(&self) -> u32 {
        let mut j = 0u32;
        while pow2(-(j as i32 + 1)) >= self.resolution {
            j += 1;
            if j > 60 {
                break;
            }
        }
        j
    }

    /// Index vector of the level-j dyadic cube containing point `i`.
    ///
    /// Assignment is half-open, `[a, a + 2^-j)`, except on the upper face of
    /// the cloud's bounding box: a coordinate equal to the box maximum that
    /// falls exactly on a cube boundary is assigned to the cube below. This
    /// keeps the occupied count of a full grid on `[0,1]^d` at exactly `2^(jd)`
    /// and mirrors the usual covering convention.
    pub fn cube_index(&self, i: usize, level: u32) -> Vec<i64> {
        let scale = pow2(level as i32);
        let p = self.point(i);
        let mut idx = Vec::with_capacity(self.dim);
        for (c, &x) in p.iter().enumerate() {
            let scaled = x * scale;
            let mut k = scaled.floor() as i64;
            if x == self.bbox_max[c] && scaled == scaled.floor() && x > self.bbox_min[c] {
                k -= 1;
            }
            idx.push(k);
        }
        idx
    }

    /// Packed cube keys for all points at the given level (order matches point order).
    pub(crate) fn cube_keys(&self, level: u32) -> Vec<CubeKey> {
        (0..self.len())
            .map(|i| CubeKey::pack(&self.cube_index(i, level)))
            .collect()
    }

    /// Exports points as CSV with header `x0,...,x{d-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.dim).map(|c| format!("x{c}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for p in self.points() {
            let row: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) => continue,
            Some(ord) => return ord,
            None => return std::cmp::Ordering::Equal,
        }
    }
    std::cmp::Ordering::Equal
}

pub(crate) fn pow2(e: i32) -> f64 {
    (2f64).powi(e)
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Packed dyadic index usable as a hash/sort key.
///
/// Up to 5 dimensions are bit-packed into a u128 (25 bits per coordinate,
/// offset-encoded); higher dimensions fall back to a hashed representation
/// of the index vector, which is slower but correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct CubeKey(u128);

const KEY_BITS: u32 = 25;
const KEY_OFFSET: i64 = 1 << 24;

impl CubeKey {
    pub fn pack(idx: &[i64]) -> CubeKey {
        if idx.len() <= 5 {
            let mut key: u128 = idx.len() as u128; // disambiguates dimension
            for &k in idx {
                let shifted = k + KEY_OFFSET;
                debug_assert!(
                    (0..(1 << KEY_BITS)).contains(&shifted),
                    "cube index {k} out of packable range"
                );
                key = (key << KEY_BITS) | (shifted as u128 & ((1 << KEY_BITS) - 1));
            }
            CubeKey(key)
        } else {
            use std::hash::{Hash, Hasher};
            let mut h = std::collections::hash_map::DefaultHasher::new();
            idx.hash(&mut h);
            CubeKey((h.finish() as u128) | (1u128 << 127))
        }
    }
}

/// Count of distinct keys; shared by the covering counters.
pub(crate) fn distinct_count(mut keys: Vec<CubeKey>) -> usize {
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Dyadic cube of side 2^-level with corner on the 2^-level lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicCube {
    pub level: u32,
    pub index: Vec<i64>,
}

impl DyadicCube {
    pub fn side(&self) -> f64 {
        pow2(-(self.level as i32))
    }

    pub fn corner(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&k| k as f64 * s).collect()
    }
}

/// Canonical set generators at a target resolution.
///
/// Serializes to a flat JSON object tagged by `kind`, e.g.
/// `{"kind": "sequence_set", "p": 1.0, "delta": 0.001}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `{ n^-p : n >= 1 }` with the accumulation tail filled by a delta-grid.
    SequenceSet { p: f64, delta: f64 },
    /// Uniform delta-grid on `[0,1]`.
    Segment { delta: f64 },
    /// Uniform delta-grid on `[0,1]^2`.
    GridSquare { delta: f64 },
    /// Self-similar set: `copies` maps of ratio `contraction`, equally spaced in `[0,1]`,
    /// iterated until pieces have diameter <= delta.
    Cantor {
        contraction: f64,
        copies: u32,
        delta: f64,
    },
    /// Cartesian product of two factor sets.
    Product {
        a: Box<GeneratorSpec>,
        b: Box<GeneratorSpec>,
        delta: f64,
    },
    /// Explicit point list.
    ExplicitPoints { points: Vec<Vec<f64>>, delta: f64 },
}

impl GeneratorSpec {
    pub fn delta(&self) -> f64 {
        match self {
            GeneratorSpec::SequenceSet { delta, .. }
            | GeneratorSpec::Segment { delta }
            | GeneratorSpec::GridSquare { delta }
            | GeneratorSpec::Cantor { delta, .. }
            | GeneratorSpec::Product { delta, .. }
            | GeneratorSpec::ExplicitPoints { delta, .. } => *delta,
        }
    }

    fn with_delta(&self, delta: f64) -> GeneratorSpec {
        let mut s = self.clone();
        match &mut s {
            GeneratorSpec::SequenceSet { delta: d, .. }
            | GeneratorSpec::Segment { delta: d }
            | GeneratorSpec::GridSquare { delta: d }
            | GeneratorSpec::Cantor { delta: d, .. }
            | GeneratorSpec::Product { delta: d, .. }
            | GeneratorSpec::ExplicitPoints { delta: d, .. } => *d = delta,
        }
        s
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta() > 0.0) {
            return Err(DimlabError::invalid("generator delta must be positive"));
        }
        match self {
            GeneratorSpec::SequenceSet { p, .. } => {
                if !(*p > 0.0) {
                    return Err(DimlabError::invalid("sequence_set requires p > 0"));
                }
            }
            GeneratorSpec::Cantor {
                contraction,
                copies,
                ..
            } => {
                if *copies < 2 {
                    return Err(DimlabError::invalid("cantor requires copies >= 2"));
                }
                if !(*contraction > 0.0) || *copies as f64 * contraction > 1.0 {
                    return Err(DimlabError::invalid(
                        "cantor requires 0 < contraction and copies * contraction <= 1",
                    ));
                }
            }
            GeneratorSpec::Product { a, b, .. } => {
                a.validate()?;
                b.validate()?;
            }
            GeneratorSpec::ExplicitPoints { points, .. } => {
                if points.is_empty() {
                    return Err(DimlabError::invalid("explicit_points requires points"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn label(&self) -> String {
        match self {
            GeneratorSpec::SequenceSet { p, .. } => {
                if (*p - 1.0).abs() < 1e-12 {
                    "{1/n}".to_string()
                } else {
                    format!("{{1/n^{p}}}")
                }
            }
            GeneratorSpec::Segment { .. } => "[0,1]".to_string(),
            GeneratorSpec::GridSquare { .. } => "[0,1]^2".to_string(),
            GeneratorSpec::Cantor {
                contraction,
                copies,
                ..
            } => format!("cantor(c={contraction},m={copies})"),
            GeneratorSpec::Product { a, b, .. } => format!("{}x{}", a.label(), b.label()),
            GeneratorSpec::ExplicitPoints { .. } => "explicit".to_string(),
        }
    }
}

/// Generates the delta-net point cloud described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<PointCloud> {
    spec.validate()?;
    let delta = spec.delta();
    let label = spec.label();
    let points = generate_points(spec)?;
    if points.len() > MAX_GENERATED_POINTS {
        return Err(DimlabError::invalid(format!(
            "generator would produce {} points (cap {MAX_GENERATED_POINTS}); coarsen delta",
            points.len()
        )));
    }
    PointCloud::new(points, delta, label)
}

fn generate_points(spec: &GeneratorSpec) -> Result<Vec<Vec<f64>>> {
    match spec {
        GeneratorSpec::Segment { delta } => Ok(grid_1d(0.0, 1.0, *delta)),
        GeneratorSpec::GridSquare { delta } => {
            let axis = grid_1d(0.0, 1.0, *delta);
            check_budget(axis.len().saturating_mul(axis.len()))?;
            let mut pts = Vec::with_capacity(axis.len() * axis.len());
            for a in &axis {
                for b in &axis {
                    pts.push(vec![a[0], b[0]]);
                }
            }
            Ok(pts)
        }
        GeneratorSpec::SequenceSet { p, delta } => Ok(sequence_set(*p, *delta)),
        GeneratorSpec::Cantor {
            contraction,
            copies,
            delta,
        } => cantor(*contraction, *copies, *delta),
        GeneratorSpec::Product { a, b, delta } => {
            // Factor nets at delta/sqrt(2) make the product a delta-net.
            let factor_delta = delta / std::f64::consts::SQRT_2;
            let pa = generate_points(&a.with_delta(factor_delta))?;
            let pb = generate_points(&b.with_delta(factor_delta))?;
            check_budget(pa.len().saturating_mul(pb.len()))?;
            let mut pts = Vec::with_capacity(pa.len() * pb.len());
            for x in &pa {
                for y in &pb {
                    let mut q = Vec::with_capacity(x.len() + y.len());
                    q.extend_from_slice(x);
                    q.extend_from_slice(y);
                    pts.push(q);
                }
            }
            Ok(pts)
        }
        GeneratorSpec::ExplicitPoints { points, .. } => Ok(points.clone()),
    }
}

fn check_budget(n: usize) -> Result<()> {
    if n > MAX_GENERATED_POINTS {
        return Err(DimlabError::invalid(format!(
            "generator would produce {n} points (cap {MAX_GENERATED_POINTS}); coarsen delta"
        )));
    }
    Ok(())
}

/// Uniform grid on `[lo, hi]` with spacing <= delta, endpoints included.
fn grid_1d(lo: f64, hi: f64, delta: f64) -> Vec<Vec<f64>> {
    let span = hi - lo;
    if span <= 0.0 {
        return vec![vec![lo]];
    }
    let n = (span / delta).ceil().max(1.0) as usize;
    (0..=n)
        .map(|k| vec![lo + span * (k as f64) / (n as f64)])
        .collect()
}

/// `{ n^-p }` down to the index where consecutive gaps fall under delta,
/// then a delta-grid on the accumulation tail `[0, (n0+1)^-p]`.
fn sequence_set(p: f64, delta: f64) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let mut n: u64 = 1;
    loop {
        let here = (n as f64).powf(-p);
        let next = ((n + 1) as f64).powf(-p);
        if here - next < delta || pts.len() > MAX_GENERATED_POINTS {
            // tail is denser than delta from here on; fill [0, next] with a grid
            pts.extend(grid_1d(0.0, next, delta));
            break;
        }
        pts.push(vec![here]);
        n += 1;
    }
    pts
}

fn cantor(c: f64, m: u32, delta: f64) -> Result<Vec<Vec<f64>>> {
    let gap = if m > 1 { (1.0 - c) / (m as f64 - 1.0) } else { 0.0 };
    let offsets: Vec<f64> = (0..m).map(|i| i as f64 * gap).collect();
    let mut depth = 0u32;
    let mut piece = 1.0f64;
    while piece > delta {
        piece *= c;
        depth += 1;
        check_budget((m as usize).checked_pow(depth).unwrap_or(usize::MAX))?;
    }
    // left endpoints of the depth-level pieces; these lie in the attractor
    let mut pts = vec![0.0f64];
    let mut scale = 1.0f64;
    for _ in 0..depth {
        scale *= c;
        let mut next = Vec::with_capacity(pts.len() * offsets.len());
        for &x in &pts {
            for &o in &offsets {
                next.push(x + o * (scale / c));
            }
        }
        pts = next;
    }
    Ok(pts.into_iter().map(|x| vec![x]).collect())
}

/// Greedy maximal r-separated subset in the cloud's lexicographic point order.
///
/// Returned points are pairwise more than `r` apart and every cloud point lies
/// within `r` of some returned point. Greedy insertion over the canonical
/// order makes the result deterministic.
pub fn maximal_separated_subset(cloud: &PointCloud, r: f64) -> Result<PointCloud> {
    let kept = separated_indices(cloud, r)?;
    let pts: Vec<Vec<f64>> = kept.iter().map(|&i| cloud.point(i).to_vec()).collect();
    PointCloud::new(
        pts,
        cloud.resolution(),
        format!("{}|sep", cloud.label()),
    )
}

/// Index form of [`maximal_separated_subset`]; used by the two-scale counters.
pub(crate) fn separated_indices(cloud: &PointCloud, r: f64) -> Result<Vec<usize>> {
    if r < cloud.resolution() {
        return Err(DimlabError::ResolutionExceeded {
            requested: r,
            resolution: cloud.resolution(),
        });
    }
    let d = cloud.dim_ambient();
    // grid hash with cell side r: any point within distance r lies in a 3^d neighborhood
    let mut cells: HashMap<CubeKey, Vec<usize>> = HashMap::new();
    let cell_of = |p: &[f64]| -> Vec<i64> { p.iter().map(|&x| (x / r).floor() as i64).collect() };
    let mut kept: Vec<usize> = Vec::new();
    let mut neighbor = vec![0i64; d];
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        let cell = cell_of(p);
        let mut ok = true;
        // enumerate the 3^d neighborhood
        let mut counter = vec![-1i64; d];
        'outer: loop {
            for (c, off) in counter.iter().enumerate() {
                neighbor[c] = cell[c] + off;
            }
            if let Some(bucket) = cells.get(&CubeKey::pack(&neighbor)) {
                for &j in bucket {
                    if dist(p, cloud.point(j)) <= r {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            // advance odometer
            let mut c = 0;
            loop {
                if c == d {
                    break 'outer;
                }
                counter[c] += 1;
                if counter[c] <= 1 {
                    break;
                }
                counter[c] = -1;
                c += 1;
            }
        }
        if ok {
            cells.entry(CubeKey::pack(&cell)).or_default().push(i);
            kept.push(i);
        }
    }
    Ok(kept)
}

/// Assigns each point to its level-j dyadic cube; only non-empty cubes are
/// returned, sorted by corner.
pub fn dyadic_decompose(cloud: &PointCloud, level: u32) -> Vec<(DyadicCube, Vec<usize>)> {
    let mut by_cube: Vec<(Vec<i64>, usize)> = (0..cloud.len())
        .map(|i| (cloud.cube_index(i, level), i))
        .collect();
    by_cube.sort();
    let mut out: Vec<(DyadicCube, Vec<usize>)> = Vec::new();
    for (idx, i) in by_cube {
        match out.last_mut() {
            Some((cube, members)) if cube.index == idx => members.push(i),
            _ => out.push((DyadicCube { level, index: idx }, vec![i])),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(delta: f64) -> PointCloud {
        generate(&GeneratorSpec::Segment { delta }).unwrap()
    }

    #[test]
    fn segment_grid_has_17_points_at_2pow_minus_4() {
        let cloud = seg(pow2(-4));
        assert_eq!(cloud.len(), 17);
        for (k, p) in cloud.points().enumerate() {
            assert_eq!(p[0], k as f64 / 16.0);
        }
    }

    #[test]
    fn sequence_set_keeps_coarse_gaps_and_fills_tail() {
        let cloud = generate(&GeneratorSpec::SequenceSet {
            p: 1.0,
            delta: pow2(-10),
        })
        .unwrap();
        let xs: Vec<f64> = cloud.points().map(|p| p[0]).collect();
        assert_eq!(*xs.last().unwrap(), 1.0);
        assert_eq!(xs[xs.len() - 2], 0.5); // coarsest gap 1/1 - 1/2
        assert_eq!(xs[0], 0.0); // tail grid reaches the accumulation point
        // tail spacing no coarser than delta
        let n0 = xs.iter().filter(|&&x| x > 0.0).count();
        assert!(n0 > 10);
        for w in xs.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn product_of_sequence_and_segment_is_2d() {
        let spec = GeneratorSpec::Product {
            a: Box::new(GeneratorSpec::SequenceSet { p: 1.0, delta: 1.0 }),
            b: Box::new(GeneratorSpec::Segment { delta: 1.0 }),
            delta: pow2(-6),
        };
        let cloud = generate(&spec).unwrap();
        assert_eq!(cloud.dim_ambient(), 2);
        assert_eq!(cloud.label(), "{1/n}x[0,1]");
        assert_eq!(cloud.resolution(), pow2(-6));
    }

    #[test]
    fn generators_reject_bad_parameters() {
        assert!(generate(&GeneratorSpec::Segment { delta: 0.0 }).is_err());
        assert!(generate(&GeneratorSpec::SequenceSet { p: -1.0, delta: 0.1 }).is_err());
        assert!(generate(&GeneratorSpec::Cantor {
            contraction: 0.6,
            copies: 2,
            delta: 0.1
        })
        .is_err());
    }

    #[test]
    fn generator_spec_json_round_trip() {
        let spec = GeneratorSpec::SequenceSet {
            p: 0.5,
            delta: 0.001,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"sequence_set\""));
        let back: GeneratorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn separated_subset_greedy_matches_example() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![0.4], vec![0.9]],
            0.01,
            "ex",
        )
        .unwrap();
        let sub = maximal_separated_subset(&cloud, 0.5).unwrap();
        let xs: Vec<f64> = sub.points().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.9]);
    }

    #[test]
    fn separated_subset_single_point() {
        let cloud = PointCloud::new(vec![vec![0.3, 0.7]], 0.01, "pt").unwrap();
        let sub = maximal_separated_subset(&cloud, 0.25).unwrap();
        assert_eq!(sub.len(), 1);
    }

    #[test]
    fn separated_subset_rejects_subresolution_scale() {
        let cloud = seg(pow2(-4));
        assert!(matches!(
            maximal_separated_subset(&cloud, pow2(-6)),
            Err(DimlabError::ResolutionExceeded { .. })
        ));
    }

    #[test]
    fn separated_subset_on_unit_grid_brute_force_checked() {
        let cloud = seg(pow2(-8));
        let r = 0.125;
        let sub = maximal_separated_subset(&cloud, r).unwrap();
        assert!(sub.len() == 8 || sub.len() == 9, "got {}", sub.len());
        // brute-force pairwise separation and covering checks
        for i in 0..sub.len() {
            for j in (i + 1)..sub.len() {
                assert!(dist(sub.point(i), sub.point(j)) > r);
            }
        }
        for p in cloud.points() {
            assert!(sub.points().any(|q| dist(p, q) <= r));
        }
    }

    #[test]
    fn dyadic_decompose_level_one_examples() {
        let cloud = PointCloud::new(vec![vec![0.1], vec![0.6]], 0.01, "a").unwrap();
        let cubes = dyadic_decompose(&cloud, 1);
        assert_eq!(cubes.len(), 2);
        assert_eq!(cubes[0].0.corner(), vec![0.0]);
        assert_eq!(cubes[1].0.corner(), vec![0.5]);

        let cloud = PointCloud::new(vec![vec![0.1], vec![0.2]], 0.01, "b").unwrap();
        let cubes = dyadic_decompose(&cloud, 1);
        assert_eq!(cubes.len(), 1);
        assert_eq!(cubes[0].1.len(), 2);
    }

    #[test]
    fn square_grid_occupies_exactly_4_pow_j_cubes() {
        let cloud = generate(&GeneratorSpec::GridSquare { delta: pow2(-5) }).unwrap();
        for j in 1..=4u32 {
            let cubes = dyadic_decompose(&cloud, j);
            assert_eq!(cubes.len(), 4usize.pow(j), "level {j}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = GeneratorSpec::SequenceSet {
            p: 0.5,
            delta: pow2(-9),
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cantor_middle_thirds_sizes() {
        let cloud = generate(&GeneratorSpec::Cantor {
            contraction: 1.0 / 3.0,
            copies: 2,
            delta: pow2(-8),
        })
        .unwrap();
        // depth 6 is the first with 3^-k <= 2^-8: 2^6 = 64 points
        assert_eq!(cloud.len(), 64);
        let (lo, hi) = cloud.bbox();
        assert_eq!(lo[0], 0.0);
        assert!(hi[0] <= 1.0);
    }

    proptest! {
        #[test]
        fn nesting_counts_are_monotone(npts in 2usize..60, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..npts)
                .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
                .collect();
            let cloud = PointCloud::new(pts, pow2(-10), "prop").unwrap();
            let mut prev = dyadic_decompose(&cloud, 0).len();
            for j in 1..=6u32 {
                let here = dyadic_decompose(&cloud, j).len();
                prop_assert!(here >= prev);
                prop_assert!(here <= prev * 4); // 2^d with d = 2
                prev = here;
            }
        }

        #[test]
        fn separated_count_comparable_to_cube_count(npts in 2usize..80, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..npts)
                .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
                .collect();
            let cloud = PointCloud::new(pts, pow2(-12), "prop").unwrap();
            for j in 2..=5u32 {
                let r = pow2(-(j as i32));
                let cubes = dyadic_decompose(&cloud, j).len() as f64;
                let sep = maximal_separated_subset(&cloud, r).unwrap().len() as f64;
                let factor = 9.0; // 3^d with d = 2
                prop_assert!(sep <= cubes * factor);
                prop_assert!(cubes <= sep * factor);
            }
        }
    }
}
