//! Assouad dimension, Assouad spectrum, regularised spectrum and
//! quasi-Assouad estimation from two-scale local counts.
//!
//! The spectrum at theta ties the localisation scale R to the covering scale
//! r = R^(1/theta). Estimates come from the slope of the max-count envelope
//! over anchor scales rather than single-pair exponents, which are noisy at
//! finite resolution.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::covering::{estimate_box_dimension, fit_line};
use crate::curve::{SpectrumCurve, ThetaDiagnostics};
use crate::error::{DimlabError, Result};
use crate::geometry::{dist, pow2, separated_indices, CubeKey, PointCloud};

/// Maximum number of representative centers per anchor scale.
const MAX_CENTERS: usize = 4096;

/// One local covering observation at a tied pair of scales.
#[derive(Debug, Clone)]
pub struct TwoScaleSample {
    pub center: Vec<f64>,
    pub big_scale: f64,
    pub small_scale: f64,
    pub count: u64,
    pub normalized_exponent: f64,
}

/// Two-scale counting engine: buckets the cloud at each anchor level and
/// maximises local grid counts over a coarse net of centers.
struct TwoScaleCounter<'a> {
    cloud: &'a PointCloud,
    buckets: HashMap<u32, HashMap<CubeKey, Vec<u32>>>,
    centers: HashMap<u64, Vec<usize>>,
}

impl<'a> TwoScaleCounter<'a> {
    fn new(cloud: &'a PointCloud) -> Self {
        TwoScaleCounter {
            cloud,
            buckets: HashMap::new(),
            centers: HashMap::new(),
        }
    }

    fn buckets_at(&mut self, bucket_level: u32) -> &HashMap<CubeKey, Vec<u32>> {
        let cloud = self.cloud;
        self.buckets.entry(bucket_level).or_insert_with(|| {
            let mut map: HashMap<CubeKey, Vec<u32>> = HashMap::new();
            for i in 0..cloud.len() {
                let key = CubeKey::pack(&cloud.cube_index(i, bucket_level));
                map.entry(key).or_default().push(i as u32);
            }
            map
        })
    }

    /// Representative centers for an anchor radius: a maximal separated net
    /// at scale R/4, coarsened until it holds at most `MAX_CENTERS` points.
    fn centers_at(&mut self, radius: f64) -> Result<&[usize]> {
        let key = radius.to_bits();
        if !self.centers.contains_key(&key) {
            let mut rho = (radius / 4.0).max(self.cloud.resolution());
            let mut net = separated_indices(self.cloud, rho)?;
            while net.len() > MAX_CENTERS {
                rho *= 2.0;
                net = separated_indices(self.cloud, rho)?;
            }
            self.centers.insert(key, net);
        }
        Ok(self.centers.get(&key).unwrap())
    }

    /// max over centers of the grid count (at `count_level`) of the cloud
    /// within distance `radius` of the center.
    fn max_local_count(&mut self, radius: f64, count_level: u32) -> Result<u64> {
        let cloud = self.cloud;
        // bucket cells must be at least as wide as the ball radius
        let bucket_level = (1.0 / radius).log2().floor().max(0.0) as u32;
        let centers = self.centers_at(radius)?.to_vec();
        let buckets = self.buckets_at(bucket_level);
        let d = cloud.dim_ambient();
        let max = centers
            .par_iter()
            .map(|&ci| {
                let center = cloud.point(ci);
                let cell = cloud.cube_index(ci, bucket_level);
                let mut keys: Vec<CubeKey> = Vec::new();
                let mut counter = vec![-1i64; d];
                let mut neighbor = vec![0i64; d];
                'outer: loop {
                    for (c, off) in counter.iter().enumerate() {
                        neighbor[c] = cell[c] + off;
                    }
                    if let Some(bucket) = buckets.get(&CubeKey::pack(&neighbor)) {
                        for &j in bucket {
                            let p = cloud.point(j as usize);
                            if dist(p, center) <= radius {
                                keys.push(CubeKey::pack(&cloud.cube_index(j as usize, count_level)));
                            }
                        }
                    }
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
                keys.sort_unstable();
                keys.dedup();
                keys.len() as u64
            })
            .max()
            .unwrap_or(0);
        Ok(max)
    }
}

/// Assouad spectrum over a theta grid.
///
/// For each theta the anchors are localisation scales R = 2^-i on a
/// half-level ladder with r = R^(1/theta) above the resolution floor and
/// log2(R/r) at least half an octave; the estimate is the free-intercept
/// slope of the max-count envelope against log2(R/r). The free intercept
/// absorbs the R-independent ball-occupancy constant that would otherwise
/// bias shallow-window fits. Values are clipped to `[box estimate, d]`;
/// thetas with fewer than two anchors are skipped and absent from the
/// output curve.
pub fn assouad_spectrum(cloud: &PointCloud, thetas: &[f64]) -> Result<SpectrumCurve> {
    for &t in thetas {
        if !(t > 0.0 && t < 1.0) {
            return Err(DimlabError::invalid("assouad spectrum needs theta in (0,1)"));
        }
    }
    let box_est = estimate_box_dimension(cloud)?;
    let d = cloud.dim_ambient() as f64;
    let floor = box_est.fit.slope.clamp(0.0, d);
    let j_max = cloud.max_level();
    let mut counter = TwoScaleCounter::new(cloud);

    let mut out_thetas = Vec::new();
    let mut out_values = Vec::new();
    let mut out_diag = Vec::new();
    for &theta in thetas {
        let all_anchors = spectrum_anchors(theta, j_max);
        if all_anchors.len() < 2 {
            continue;
        }
        let x_of = |level: u32| level as f64 * (1.0 - theta);
        let x_max = x_of(*all_anchors.last().unwrap());
        let (raw, r2, n_used) = if x_max >= 4.0 {
            // enough octaves of tied-scale ratio for a regression; restrict to
            // the fine half of the ladder where the sup-type exponent lives
            // (coarse anchors see whole-set covering behaviour) and let the
            // free intercept absorb the ball-occupancy constant
            let mut anchors = all_anchors;
            let keep = ((anchors.len() + 1) / 2).max(3).min(anchors.len());
            anchors.drain(..anchors.len() - keep);
            let mut xs = Vec::with_capacity(anchors.len());
            let mut ys = Vec::with_capacity(anchors.len());
            for &level in &anchors {
                let radius = (2f64).powf(-theta * level as f64);
                let m = counter.max_local_count(radius, level)?;
                xs.push(x_of(level));
                ys.push((m.max(1) as f64).log2());
            }
            let fit = fit_line(&xs, &ys, (0.0, 0.0));
            (fit.slope, fit.r_squared, anchors.len())
        } else {
            // shallow tied-scale window: a slope cannot separate the local
            // exponent from cell-boundary effects, so report the largest
            // normalized exponent and rely on the [box, d] clip
            let mut best = 0.0f64;
            for &level in &all_anchors {
                let radius = (2f64).powf(-theta * level as f64);
                let m = counter.max_local_count(radius, level)?;
                best = best.max((m.max(1) as f64).log2() / x_of(level));
            }
            (best, f64::NAN, all_anchors.len())
        };
        let value = raw.clamp(floor, d);
        out_thetas.push(theta);
        out_values.push(value);
        out_diag.push(ThetaDiagnostics {
            fit_r2: r2,
            n_anchors: n_used as u32,
            adjustment: (value - raw).abs(),
        });
    }
    if out_thetas.is_empty() {
        return Err(DimlabError::NoValidScalePairs {
            theta: thetas.first().copied().unwrap_or(0.0),
            resolution: cloud.resolution(),
        });
    }
    SpectrumCurve::new(out_thetas, out_values, out_diag)
}

/// Anchor ladder indexed by the covering level l: the localisation scale is
/// R = 2^(-theta l), so r = R^(1/theta) = 2^-l holds exactly. Levels keep the
/// ball below half the unit scale and the scale ratio above half an octave.
fn spectrum_anchors(theta: f64, j_max: u32) -> Vec<u32> {
    let lo_ratio = (0.5 / (1.0 - theta)).ceil() as u32;
    let lo_ball = (0.5 / theta).ceil() as u32;
    let lo = lo_ratio.max(lo_ball).max(1);
    (lo..=j_max).collect()
}

/// Regularised (upper) spectrum: running supremum over theta' <= theta.
pub fn upper_assouad_spectrum(curve: &SpectrumCurve) -> SpectrumCurve {
    let mut values = Vec::with_capacity(curve.len());
    let mut diag = Vec::with_capacity(curve.len());
    let mut running = f64::NEG_INFINITY;
    for i in 0..curve.len() {
        running = running.max(curve.values[i]);
        values.push(running);
        diag.push(ThetaDiagnostics {
            fit_r2: curve.diagnostics[i].fit_r2,
            n_anchors: curve.diagnostics[i].n_anchors,
            adjustment: (running - curve.values[i]).abs(),
        });
    }
    SpectrumCurve::new(curve.thetas.clone(), values, diag).expect("same grid as input")
}

/// Quasi-Assouad dimension: the theta -> 1 limit of the upper spectrum,
/// extrapolated by fitting the tail against (1 - theta) and clipped to
/// `[max curve value, d_hint]`.
pub fn quasi_assouad(curve: &SpectrumCurve, d_hint: f64) -> Result<f64> {
    let upper = upper_assouad_spectrum(curve);
    let tail: Vec<(f64, f64)> = upper
        .thetas
        .iter()
        .zip(&upper.values)
        .filter(|(t, _)| **t >= 0.7)
        .map(|(t, v)| (1.0 - *t, *v))
        .collect();
    if tail.len() < 3 {
        return Err(DimlabError::InsufficientTail {
            needed: 3,
            cutoff: 0.7,
        });
    }
    let xs: Vec<f64> = tail.iter().map(|(x, _)| *x).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, y)| *y).collect();
    let fit = fit_line(&xs, &ys, (0.0, 0.0));
    let limit = fit.intercept; // value at 1 - theta = 0
    Ok(limit.clamp(upper.max_value(), d_hint))
}

/// Assouad dimension estimate: max normalized two-scale exponent over dyadic
/// pairs with ratio >= 16, clipped to `[upper box estimate, d]`.
pub fn assouad_dimension(cloud: &PointCloud) -> Result<f64> {
    let samples = two_scale_samples(cloud, 4)?;
    let box_est = estimate_box_dimension(cloud)?;
    let d = cloud.dim_ambient() as f64;
    let raw = samples
        .iter()
        .map(|s| s.normalized_exponent)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(raw.clamp(box_est.upper.min(d), d))
}

/// Probe hook exposing the max local count for calibration runs.
#[doc(hidden)]
pub fn max_local_count_probe(cloud: &PointCloud, radius: f64, level: u32) -> Result<u64> {
    TwoScaleCounter::new(cloud).max_local_count(radius, level)
}

/// Envelope samples over all dyadic pairs (R, r) = (2^-i, 2^-l) with
/// l - i >= min_gap and r above the resolution floor. The recorded center is
/// the one maximising the count for that pair.
pub fn two_scale_samples(cloud: &PointCloud, min_gap: u32) -> Result<Vec<TwoScaleSample>> {
    let j_max = cloud.max_level();
    if j_max < 5 {
        return Err(DimlabError::InsufficientScales {
            needed: 5,
            available: j_max as usize,
        });
    }
    let mut counter = TwoScaleCounter::new(cloud);
    let mut samples = Vec::new();
    for i in 1..=j_max.saturating_sub(min_gap) {
        for l in (i + min_gap)..=j_max {
            let big = pow2(-(i as i32));
            let small = pow2(-(l as i32));
            let m = counter.max_local_count(big, l)?;
            samples.push(TwoScaleSample {
                center: Vec::new(),
                big_scale: big,
                small_scale: small,
                count: m,
                normalized_exponent: (m.max(1) as f64).log2() / ((l - i) as f64),
            });
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ThetaDiagnostics;
    use crate::geometry::{generate, GeneratorSpec};

    fn curve_of(thetas: Vec<f64>, values: Vec<f64>) -> SpectrumCurve {
        let diag = values
            .iter()
            .map(|_| ThetaDiagnostics {
                fit_r2: 1.0,
                n_anchors: 1,
                adjustment: 0.0,
            })
            .collect();
        SpectrumCurve::new(thetas, values, diag).unwrap()
    }

    #[test]
    fn upper_spectrum_is_running_max() {
        let c = curve_of(vec![0.25, 0.5, 0.75], vec![1.2, 1.0, 1.5]);
        let u = upper_assouad_spectrum(&c);
        assert_eq!(u.values, vec![1.2, 1.2, 1.5]);
    }

    #[test]
    fn upper_spectrum_identity_on_monotone_and_idempotent() {
        let c = curve_of(vec![0.2, 0.4, 0.6], vec![1.0, 1.1, 1.3]);
        let u = upper_assouad_spectrum(&c);
        assert_eq!(u.values, c.values);
        let uu = upper_assouad_spectrum(&u);
        assert_eq!(uu.values, u.values);
    }

    #[test]
    fn quasi_assouad_of_constant_curve_is_the_constant() {
        let c = curve_of(vec![0.7, 0.8, 0.9], vec![1.3, 1.3, 1.3]);
        assert!((quasi_assouad(&c, 2.0).unwrap() - 1.3).abs() < 1e-9);
    }

    #[test]
    fn quasi_assouad_needs_tail_points() {
        let c = curve_of(vec![0.2, 0.4], vec![1.0, 1.0]);
        assert!(matches!(
            quasi_assouad(&c, 2.0),
            Err(DimlabError::InsufficientTail { .. })
        ));
    }

    #[test]
    fn segment_spectrum_is_flat_one() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-12) }).unwrap();
        let curve = assouad_spectrum(&cloud, &[0.2, 0.4, 0.6, 0.8]).unwrap();
        for (t, v) in curve.thetas.iter().zip(&curve.values) {
            assert!((v - 1.0).abs() < 0.05, "theta {t}: {v}");
        }
    }

    #[test]
    fn square_assouad_dimension_is_two() {
        let cloud = generate(&GeneratorSpec::GridSquare { delta: pow2(-7) }).unwrap();
        let a = assouad_dimension(&cloud).unwrap();
        assert!((a - 2.0).abs() < 0.05, "got {a}");
    }

    #[test]
    fn sequence_set_assouad_dimension_is_one() {
        let cloud = generate(&GeneratorSpec::SequenceSet {
            p: 1.0,
            delta: pow2(-12),
        })
        .unwrap();
        let a = assouad_dimension(&cloud).unwrap();
        assert!((a - 1.0).abs() < 0.15, "got {a}");
    }

    #[test]
    fn spectrum_rejects_bad_theta() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-8) }).unwrap();
        assert!(assouad_spectrum(&cloud, &[1.0]).is_err());
        assert!(assouad_spectrum(&cloud, &[0.0]).is_err());
    }

    #[test]
    fn spectrum_values_bounded_by_ambient_dimension() {
        let cloud = generate(&GeneratorSpec::GridSquare { delta: pow2(-6) }).unwrap();
        let curve = assouad_spectrum(&cloud, &[0.3, 0.5, 0.7]).unwrap();
        for v in &curve.values {
            assert!(*v <= 2.0 && *v >= 0.0);
        }
    }
}
