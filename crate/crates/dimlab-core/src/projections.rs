//! Grassmannian sampling, orthogonal projection of clouds and measures, and
//! direction sweeps that apply a dimension estimator to every projection.
//!
//! In G(2,1) sweeps default to a uniform angle grid plus the two coordinate
//! axes, making the structured exceptional directions explicitly inspectable;
//! elsewhere directions are drawn from the rotation-invariant law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::DiscreteMeasure;
use crate::covering::estimate_box_dimension;
use crate::error::{DimlabError, Result};
use crate::geometry::PointCloud;

/// Element of G(d, k): an orthonormal k-frame spanning the subspace.
#[derive(Debug, Clone)]
pub struct Subspace {
    d: usize,
    k: usize,
    /// row-major k x d frame
    frame: Vec<f64>,
}

const ORTHONORMAL_TOL: f64 = 1e-12;

impl Subspace {
    pub fn new(d: usize, k: usize, frame: Vec<f64>) -> Result<Self> {
        if k < 1 || k >= d {
            return Err(DimlabError::invalid("subspace needs 1 <= k < d"));
        }
        if frame.len() != k * d {
            return Err(DimlabError::invalid("frame must be k x d"));
        }
        let sub = Subspace { d, k, frame };
        let res = sub.orthonormality_residual();
        if res > ORTHONORMAL_TOL {
            return Err(DimlabError::invalid(format!(
                "frame rows not orthonormal (residual {res:.3e})"
            )));
        }
        Ok(sub)
    }

    /// Line in the plane at the given angle from the first axis.
    pub fn from_angle(angle: f64) -> Subspace {
        Subspace {
            d: 2,
            k: 1,
            frame: vec![angle.cos(), angle.sin()],
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.frame[i * self.d..(i + 1) * self.d]
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let mut res = 0.0f64;
        for i in 0..self.k {
            for j in i..self.k {
                let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                res = res.max((dot - target).abs());
            }
        }
        res
    }

    /// Coordinates of x in the frame basis (the projection, identified with R^k).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Embeds frame coordinates y back into R^d: y_V = sum y_i row_i.
    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (i, &c) in y.iter().enumerate() {
            for (o, &f) in out.iter_mut().zip(self.row(i)) {
                *o += c * f;
            }
        }
        out
    }

    /// Short deterministic tag for CSV rows.
    pub fn frame_hash(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for v in &self.frame {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// Draws a frame from the rotation-invariant law on G(d, k): k independent
/// standard-normal vectors, orthonormalized. Deterministic per seed; a
/// degenerate draw retries with an incremented sub-seed.
pub fn sample_grassmannian(d: usize, k: usize, seed: u64) -> Result<Subspace> {
    if k < 1 || k >= d {
        return Err(DimlabError::invalid("sample_grassmannian needs 1 <= k < d"));
    }
    let mut sub_seed = seed;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
        let mut rows: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        let a: f64 = rng.gen::<f64>().max(1e-300);
                        let b: f64 = rng.gen();
                        (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
                    })
                    .collect()
            })
            .collect();
        // modified Gram-Schmidt with re-orthogonalization
        let mut ok = true;
        for i in 0..k {
            for _pass in 0..2 {
                for j in 0..i {
                    let proj: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                    let prev = rows[j].clone();
                    for (a, b) in rows[i].iter_mut().zip(&prev) {
                        *a -= proj * b;
                    }
                }
            }
            let norm: f64 = rows[i].iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm < 1e-12 {
                ok = false;
                break;
            }
            rows[i].iter_mut().for_each(|c| *c /= norm);
        }
        if ok {
            let frame: Vec<f64> = rows.into_iter().flatten().collect();
            return Subspace::new(d, k, frame);
        }
        sub_seed = sub_seed.wrapping_add(1);
    }
}

/// Projects the cloud onto the subspace. Resolution is inherited (projections
/// are 1-Lipschitz); images are snapped to a delta/4 grid before merging so
/// floating-point near-duplicates do not inflate counts.
pub fn project_cloud(cloud: &PointCloud, v: &Subspace) -> Result<PointCloud> {
    if cloud.dim_ambient() != v.d() {
        return Err(DimlabError::DimensionMismatch {
            expected: v.d(),
            got: cloud.dim_ambient(),
        });
    }
    let snap = cloud.resolution() / 4.0;
    let pts: Vec<Vec<f64>> = cloud
        .points()
        .map(|p| {
            v.project(p)
                .into_iter()
                .map(|c| (c / snap).round() * snap)
                .collect()
        })
        .collect();
    PointCloud::new(
        pts,
        cloud.resolution(),
        format!("{}|proj", cloud.label()),
    )
}

/// Pushforward of the measure under the projection. Images are kept exact and
/// only exactly coincident images are merged (weights summed), so the
/// transform identity mu_hat_V(y) = mu_hat(y_V) holds to rounding error.
pub fn pushforward_measure(mu: &DiscreteMeasure, v: &Subspace) -> Result<DiscreteMeasure> {
    let cloud = mu.support();
    if cloud.dim_ambient() != v.d() {
        return Err(DimlabError::DimensionMismatch {
            expected: v.d(),
            got: cloud.dim_ambient(),
        });
    }
    let weighted: Vec<(Vec<f64>, f64)> = cloud
        .points()
        .zip(mu.weights())
        .map(|(p, &w)| (v.project(p), w))
        .collect();
    DiscreteMeasure::from_weighted_points(
        weighted,
        cloud.resolution(),
        format!("{}|proj", cloud.label()),
    )
}

/// Estimator applied per direction in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SweepEstimator {
    Box,
    AssouadSpectrum { theta: f64 },
    Intermediate { theta: f64 },
    Fourier { theta: f64 },
}

impl SweepEstimator {
    pub fn id(&self) -> String {
        match self {
            SweepEstimator::Box => "box".into(),
            SweepEstimator::AssouadSpectrum { theta } => format!("assouad_theta_{theta}"),
            SweepEstimator::Intermediate { theta } => format!("intermediate_theta_{theta}"),
            SweepEstimator::Fourier { theta } => format!("fourier_theta_{theta}"),
        }
    }

    fn apply(&self, projected: &PointCloud) -> Result<f64> {
        let k = projected.dim_ambient() as f64;
        let value = match self {
            SweepEstimator::Box => estimate_box_dimension(projected)?.fit.slope,
            SweepEstimator::AssouadSpectrum { theta } => {
                let curve = crate::assouad::assouad_spectrum(projected, &[*theta])?;
                curve.values[0]
            }
            SweepEstimator::Intermediate { theta } => {
                crate::intermediate::intermediate_dimension(projected, *theta)?.0
            }
            SweepEstimator::Fourier { theta } => {
                let mu = DiscreteMeasure::uniform(projected.clone());
                if *theta == 0.0 {
                    crate::fourier::fourier_dimension_point(&mu)?
                } else {
                    crate::fourier::fourier_spectrum_point(&mu, *theta)?
                }
            }
        };
        Ok(value.clamp(0.0, k))
    }
}

/// One direction's outcome in a sweep.
#[derive(Debug, Clone)]
pub struct DirectionResult {
    pub subspace: Subspace,
    /// angle in [0, pi) for G(2,1) sweeps
    pub angle: Option<f64>,
    pub estimate: Option<f64>,
    pub error: Option<String>,
    pub is_axis: bool,
}

/// Sweep over directions with summary statistics.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub estimator_id: String,
    pub k: usize,
    pub directions: Vec<DirectionResult>,
    pub median: f64,
    pub quartiles: (f64, f64),
    /// estimates at the coordinate-axis directions, when present
    pub axis_estimates: Vec<f64>,
}

impl SweepResult {
    pub fn estimates(&self) -> impl Iterator<Item = f64> + '_ {
        self.directions.iter().filter_map(|d| d.estimate)
    }

    /// CSV export: `dir_index,angle_or_frame_hash,estimate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dir_index,angle_or_frame_hash,estimate\n");
        for (i, dir) in self.directions.iter().enumerate() {
            let tag = match dir.angle {
                Some(a) => format!("{a}"),
                None => format!("{:016x}", dir.subspace.frame_hash()),
            };
            let est = dir
                .estimate
                .map(|e| format!("{e}"))
                .unwrap_or_else(|| "nan".into());
            out.push_str(&format!("{i},{tag},{est}\n"));
        }
        out
    }

    /// Summary JSON with median, quartiles and axis values.
    pub fn summary_json(&self) -> String {
        let axis: Vec<String> = self.axis_estimates.iter().map(|v| format!("{v}")).collect();
        format!(
            "{{\"estimator\":\"{}\",\"k\":{},\"n_directions\":{},\"median\":{},\"q1\":{},\"q3\":{},\"axis_estimates\":[{}]}}",
            self.estimator_id,
            self.k,
            self.directions.len(),
            self.median,
            self.quartiles.0,
            self.quartiles.1,
            axis.join(",")
        )
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Applies the estimator to the projection of the cloud onto each of
/// `n_dirs` directions.
///
/// In G(2,1) the directions are a uniform angle grid with the two coordinate
/// axes appended; in higher dimensions they are invariant-law samples.
/// Per-direction estimator failures are recorded, not fatal. The median over
/// directions is the "almost sure value" proxy.
pub fn direction_sweep(
    cloud: &PointCloud,
    k: usize,
    estimator: SweepEstimator,
    n_dirs: usize,
    seed: u64,
) -> Result<SweepResult> {
    let d = cloud.dim_ambient();
    if k < 1 || k >= d {
        return Err(DimlabError::invalid("sweep needs 1 <= k < d"));
    }
    if n_dirs == 0 {
        return Err(DimlabError::invalid("sweep needs at least one direction"));
    }
    let mut dirs: Vec<(Subspace, Option<f64>, bool)> = Vec::new();
    if d == 2 && k == 1 {
        for t in 0..n_dirs {
            let angle = std::f64::consts::PI * t as f64 / n_dirs as f64;
            dirs.push((Subspace::from_angle(angle), Some(angle), false));
        }
        // ensure both coordinate axes are present
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !dirs.iter().any(|(_, a, _)| a.unwrap() == 0.0) {
            dirs.push((Subspace::from_angle(0.0), Some(0.0), true));
        } else {
            dirs[0].2 = true;
        }
        if !dirs
            .iter()
            .any(|(_, a, _)| (a.unwrap() - half_pi).abs() < 1e-15)
        {
            dirs.push((Subspace::from_angle(half_pi), Some(half_pi), true));
        } else {
            for d in dirs.iter_mut() {
                if (d.1.unwrap() - half_pi).abs() < 1e-15 {
                    d.2 = true;
                }
            }
        }
    } else {
        for t in 0..n_dirs {
            let v = sample_grassmannian(d, k, seed.wrapping_add(t as u64))?;
            dirs.push((v, None, false));
        }
    }

    let results: Vec<DirectionResult> = dirs
        .into_par_iter()
        .map(|(v, angle, is_axis)| {
            let outcome = project_cloud(cloud, &v).and_then(|pc| estimator.apply(&pc));
            match outcome {
                Ok(est) => DirectionResult {
                    subspace: v,
                    angle,
                    estimate: Some(est),
                    error: None,
                    is_axis,
                },
                Err(e) => DirectionResult {
                    subspace: v,
                    angle,
                    estimate: None,
                    error: Some(e.to_string()),
                    is_axis,
                },
            }
        })
        .collect();

    let mut ok: Vec<f64> = results.iter().filter_map(|r| r.estimate).collect();
    ok.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = quantile(&ok, 0.5);
    let quartiles = (quantile(&ok, 0.25), quantile(&ok, 0.75));
    let axis_estimates: Vec<f64> = results
        .iter()
        .filter(|r| r.is_axis)
        .filter_map(|r| r.estimate)
        .collect();
    Ok(SweepResult {
        estimator_id: estimator.id(),
        k,
        directions: results,
        median,
        quartiles,
        axis_estimates,
    })
}

/// Fraction of directions whose estimate falls below the threshold u;
/// the empirical analogue of the exceptional-set size. Estimates are clipped
/// to [0, k], so any u above k trivially reports 1.
pub fn exceptional_fraction(sweep: &SweepResult, u: f64) -> Result<f64> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(DimlabError::invalid("threshold u must be finite and >= 0"));
    }
    let total = sweep.estimates().count();
    if total == 0 {
        return Err(DimlabError::invalid("sweep has no successful directions"));
    }
    let below = sweep.estimates().filter(|e| *e < u).count();
    Ok(below as f64 / total as f64)
}
