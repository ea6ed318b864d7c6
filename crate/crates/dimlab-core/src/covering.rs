//! Covering-number primitives and log-log slope estimation.
//!
//! Counts are dyadic grid counts, not minimal diameter-r covers: minimal
//! covering is NP-hard in general and mesh counts are equivalent for
//! slope-based dimension estimates (constant factors cancel).

use serde::Serialize;

use crate::error::{DimlabError, Result};
use crate::geometry::{dist, distinct_count, pow2, PointCloud};

/// Sampled covering counts over a decreasing list of scales.
#[derive(Debug, Clone)]
pub struct CountCurve {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub kind: CountKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CountKind {
    Global,
    Local { center: Vec<f64>, radius: f64 },
}

impl CountCurve {
    pub fn new(scales: Vec<f64>, counts: Vec<u64>, kind: CountKind) -> Result<Self> {
        if scales.len() != counts.len() {
            return Err(DimlabError::invalid("scales/counts length mismatch"));
        }
        for w in scales.windows(2) {
            if !(w[1] < w[0]) {
                return Err(DimlabError::invalid("scales must be strictly decreasing"));
            }
        }
        for w in counts.windows(2) {
            if w[1] < w[0] {
                return Err(DimlabError::invalid(
                    "counts must be non-decreasing as scales decrease",
                ));
            }
        }
        Ok(CountCurve {
            scales,
            counts,
            kind,
        })
    }

    /// CSV export: `r,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,count\n");
        for (r, n) in self.scales.iter().zip(&self.counts) {
            out.push_str(&format!("{r},{n}\n"));
        }
        out
    }
}

/// Least-squares fit of log count against log(1/r).
#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub scale_range: (f64, f64),
}

/// Covering level for a scale r: the dyadic level whose cubes have side <= r,
/// with a guard so exact powers of two do not round up.
pub(crate) fn level_for_scale(r: f64) -> u32 {
    let l = (1.0 / r).log2();
    let rounded = l.round();
    let level = if (l - rounded).abs() < 1e-9 { rounded } else { l.ceil() };
    level.max(0.0) as u32
}

/// Number of occupied dyadic cubes at level ceil(log2(1/r)).
pub fn box_count(cloud: &PointCloud, r: f64) -> Result<u64> {
    if r < cloud.resolution() {
        return Err(DimlabError::ResolutionExceeded {
            requested: r,
            resolution: cloud.resolution(),
        });
    }
    let level = level_for_scale(r);
    Ok(distinct_count(cloud.cube_keys(level)) as u64)
}

/// Grid count of the part of the cloud within Euclidean distance `radius` of
/// `center`, at covering scale `r`.
pub fn local_box_count(cloud: &PointCloud, center: &[f64], radius: f64, r: f64) -> Result<u64> {
    if r < cloud.resolution() {
        return Err(DimlabError::ResolutionExceeded {
            requested: r,
            resolution: cloud.resolution(),
        });
    }
    if !(r < radius) {
        return Err(DimlabError::invalid("local count needs r < R"));
    }
    if center.len() != cloud.dim_ambient() {
        return Err(DimlabError::DimensionMismatch {
            expected: cloud.dim_ambient(),
            got: center.len(),
        });
    }
    let level = level_for_scale(r);
    let mut keys = Vec::new();
    for i in 0..cloud.len() {
        if dist(cloud.point(i), center) <= radius {
            keys.push(crate::geometry::CubeKey::pack(&cloud.cube_index(i, level)));
        }
    }
    Ok(distinct_count(keys) as u64)
}

/// Least-squares fit of log N against -log r. A degenerate curve (all counts
/// equal) fits slope 0 with r_squared 1.
pub fn fit_loglog(curve: &CountCurve) -> Result<SlopeFit> {
    if curve.scales.len() < 3 {
        return Err(DimlabError::InsufficientScales {
            needed: 3,
            available: curve.scales.len(),
        });
    }
    let xs: Vec<f64> = curve.scales.iter().map(|r| (1.0 / r).ln()).collect();
    let ys: Vec<f64> = curve.counts.iter().map(|&n| (n as f64).ln()).collect();
    Ok(fit_line(&xs, &ys, (0.0, 0.0)).with_range(curve))
}

impl SlopeFit {
    fn with_range(mut self, curve: &CountCurve) -> SlopeFit {
        let r_min = *curve.scales.last().unwrap();
        let r_max = curve.scales[0];
        self.scale_range = (r_min, r_max);
        self
    }
}

/// Ordinary least squares on prepared (x, y) pairs.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64], scale_range: (f64, f64)) -> SlopeFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if ys.iter().all(|y| *y == ys[0]) {
        // all responses equal: flat line, perfect fit
        return SlopeFit {
            slope: 0.0,
            intercept: my,
            r_squared: 1.0,
            scale_range,
        };
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    SlopeFit {
        slope,
        intercept,
        r_squared,
        scale_range,
    }
}

/// Extreme chord slopes of log count over a sliding window of `window` levels.
pub fn chord_slope_extremes(curve: &CountCurve, window: usize) -> Result<(f64, f64)> {
    let m = curve.scales.len();
    if m < 2 {
        return Err(DimlabError::InsufficientScales {
            needed: 2,
            available: m,
        });
    }
    let w = window.min(m - 1).max(1);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..(m - w) {
        let dx = (curve.scales[i] / curve.scales[i + w]).ln();
        let dy = (curve.counts[i + w] as f64 / curve.counts[i] as f64).ln();
        let chord = dy / dx;
        lo = lo.min(chord);
        hi = hi.max(chord);
    }
    Ok((lo, hi))
}

/// Box-dimension estimate from dyadic counts.
#[derive(Debug, Clone)]
pub struct BoxDimEstimate {
    pub lower: f64,
    pub upper: f64,
    pub fit: SlopeFit,
    pub curve: CountCurve,
}

/// Runs box counts over dyadic scales r = 2^-j for j from 2 to
/// floor(log2(1/delta)) - 1 and fits the slope; lower/upper come from extreme
/// chord slopes over a sliding 4-level window, both clipped to [0, d].
///
/// Scales whose counts are still O(1) carry a large quantization offset that
/// bends the log-log line, so the coarse end of the window is trimmed to the
/// first scale whose count clears a small floor (relaxed if that would leave
/// fewer than four scales).
pub fn estimate_box_dimension(cloud: &PointCloud) -> Result<BoxDimEstimate> {
    let j_max = cloud.max_level().saturating_sub(1);
    if j_max < 5 {
        return Err(DimlabError::InsufficientScales {
            needed: 4,
            available: j_max.saturating_sub(1) as usize,
        });
    }
    let d = cloud.dim_ambient() as f64;
    let mut scales = Vec::new();
    let mut counts = Vec::new();
    for j in 2..=j_max {
        let r = pow2(-(j as i32));
        scales.push(r);
        counts.push(box_count(cloud, r)?);
    }
    for floor in [16u64, 8, 4, 2, 1] {
        if let Some(start) = counts.iter().position(|&n| n >= floor) {
            if counts.len() - start >= 3 || floor == 1 {
                scales.drain(..start);
                counts.drain(..start);
                break;
            }
        }
    }
    let curve = CountCurve::new(scales, counts, CountKind::Global)?;
    let fit = fit_loglog(&curve)?;
    let (lo, hi) = chord_slope_extremes(&curve, 4)?;
    Ok(BoxDimEstimate {
        lower: lo.clamp(0.0, d),
        upper: hi.clamp(0.0, d),
        fit,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate, GeneratorSpec};
    use approx::assert_relative_eq;

    #[test]
    fn segment_box_count_is_32_at_2pow_minus_5() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-8) }).unwrap();
        assert_eq!(box_count(&cloud, pow2(-5)).unwrap(), 32);
    }

    #[test]
    fn single_point_counts_one() {
        let cloud = PointCloud::new(vec![vec![0.37, 0.11]], 1e-6, "pt").unwrap();
        assert_eq!(box_count(&cloud, 0.25).unwrap(), 1);
        assert_eq!(box_count(&cloud, 1e-3).unwrap(), 1);
    }

    #[test]
    fn box_count_monotone_and_bounded() {
        let cloud = generate(&GeneratorSpec::GridSquare { delta: pow2(-6) }).unwrap();
        let mut prev = 0;
        for j in 1..=5 {
            let r = pow2(-j);
            let n = box_count(&cloud, r).unwrap();
            assert!(n >= prev);
            let cap = (1.0 / r + 1.0).powi(2);
            assert!((n as f64) <= cap);
            prev = n;
        }
    }

    #[test]
    fn local_count_around_grid_center() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-8) }).unwrap();
        let n = local_box_count(&cloud, &[0.5], 0.25, 1.0 / 16.0).unwrap();
        assert!((7..=9).contains(&n), "got {n}");
    }

    #[test]
    fn local_count_ball_with_only_center() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![0.5], vec![1.0]],
            1e-4,
            "sparse",
        )
        .unwrap();
        assert_eq!(local_box_count(&cloud, &[0.5], 0.1, 0.01).unwrap(), 1);
    }

    #[test]
    fn local_count_matches_brute_force_on_product_cloud() {
        let spec = GeneratorSpec::Product {
            a: Box::new(GeneratorSpec::SequenceSet { p: 1.0, delta: 1.0 }),
            b: Box::new(GeneratorSpec::Segment { delta: 1.0 }),
            delta: pow2(-8),
        };
        let cloud = generate(&spec).unwrap();
        let center = vec![1.0, 0.0];
        let radius = pow2(-3);
        let r = pow2(-6);
        let fast = local_box_count(&cloud, &center, radius, r).unwrap();
        // exhaustive enumeration over points in the ball
        let level = level_for_scale(r);
        let mut cubes: Vec<Vec<i64>> = (0..cloud.len())
            .filter(|&i| dist(cloud.point(i), &center) <= radius)
            .map(|i| cloud.cube_index(i, level))
            .collect();
        cubes.sort();
        cubes.dedup();
        assert_eq!(fast, cubes.len() as u64);
    }

    #[test]
    fn exact_power_law_fits_slope_one() {
        let scales: Vec<f64> = (1..=10).map(|j| pow2(-j)).collect();
        let counts: Vec<u64> = (1..=10).map(|j| 1u64 << j).collect();
        let curve = CountCurve::new(scales, counts, CountKind::Global).unwrap();
        let fit = fit_loglog(&curve).unwrap();
        assert_relative_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_curve_fits_flat() {
        let scales: Vec<f64> = (1..=5).map(|j| pow2(-j)).collect();
        let counts = vec![7u64; 5];
        let curve = CountCurve::new(scales, counts, CountKind::Global).unwrap();
        let fit = fit_loglog(&curve).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn square_estimates_dimension_two() {
        let cloud = generate(&GeneratorSpec::GridSquare { delta: pow2(-8) }).unwrap();
        let est = estimate_box_dimension(&cloud).unwrap();
        assert!((est.fit.slope - 2.0).abs() < 0.02, "slope {}", est.fit.slope);
        assert!(est.lower <= est.upper);
        assert!(est.upper <= 2.0);
    }

    #[test]
    fn segment_estimates_dimension_one() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-12) }).unwrap();
        let est = estimate_box_dimension(&cloud).unwrap();
        assert!((est.fit.slope - 1.0).abs() < 0.01, "slope {}", est.fit.slope);
    }

    #[test]
    fn insufficient_scales_detected() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-4) }).unwrap();
        assert!(matches!(
            estimate_box_dimension(&cloud),
            Err(DimlabError::InsufficientScales { .. })
        ));
    }

    #[test]
    fn count_curve_csv_export() {
        let curve = CountCurve::new(
            vec![0.5, 0.25],
            vec![2, 4],
            CountKind::Global,
        )
        .unwrap();
        assert_eq!(curve.to_csv(), "r,count\n0.5,2\n0.25,4\n");
    }
}
