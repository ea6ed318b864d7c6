//! Kernel energies, equilibrium measures, capacities and capacity-based
//! dimension profiles.
//!
//! The capacity of a cloud with respect to a kernel is the reciprocal of the
//! minimal energy over probability measures on it. The minimiser is computed
//! by Frank-Wolfe with away steps: iterates stay on the simplex, supports
//! sparsify naturally, and the duality gap gives a certified stopping rule.

use rayon::prelude::*;
use serde::Serialize;

use crate::covering::{fit_line, SlopeFit};
use crate::error::{DimlabError, Result};
use crate::geometry::{dist, pow2, PointCloud};

/// Kernel family selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KernelFamily {
    /// min{ 1, (r/|x|)^s } -- the box-dimension-profile kernel.
    BoxProfile { s: f64 },
    /// Three-branch kernel: 1 below r, (r/|x|)^s up to r^theta, then
    /// r^(theta(k-s)+s) / |x|^k. Continuous across both branch boundaries.
    IntermediateProfile { s: f64, k: usize, theta: f64 },
}

/// A kernel with its plateau scale r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub r: f64,
}

impl KernelSpec {
    pub fn box_profile(s: f64, r: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::BoxProfile { s },
            r,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn intermediate_profile(s: f64, k: usize, theta: f64, r: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::IntermediateProfile { s, k, theta },
            r,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(DimlabError::invalid("kernel scale r must lie in (0,1)"));
        }
        match self.family {
            KernelFamily::BoxProfile { s } => {
                if !(s >= 0.0) {
                    return Err(DimlabError::invalid("box kernel needs s >= 0"));
                }
            }
            KernelFamily::IntermediateProfile { s, k, theta } => {
                if k < 1 {
                    return Err(DimlabError::invalid("intermediate kernel needs k >= 1"));
                }
                if !(s >= 0.0 && s <= k as f64) {
                    return Err(DimlabError::invalid("intermediate kernel needs 0 <= s <= k"));
                }
                if !(theta > 0.0 && theta <= 1.0) {
                    return Err(DimlabError::invalid("intermediate kernel needs theta in (0,1]"));
                }
            }
        }
        Ok(())
    }

    /// Kernel value at separation `distance` >= 0.
    pub fn value_at(&self, distance: f64) -> f64 {
        let r = self.r;
        match self.family {
            KernelFamily::BoxProfile { s } => {
                if distance <= r {
                    1.0
                } else {
                    (r / distance).powf(s)
                }
            }
            KernelFamily::IntermediateProfile { s, k, theta } => {
                if distance < r {
                    1.0
                } else {
                    let r_theta = r.powf(theta);
                    if distance < r_theta {
                        (r / distance).powf(s)
                    } else {
                        r.powf(theta * (k as f64 - s) + s) / distance.powf(k as f64)
                    }
                }
            }
        }
    }
}

/// Evaluates the kernel at a displacement vector.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64]) -> f64 {
    let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    spec.value_at(norm)
}

/// Weighted point cloud with nonnegative weights summing to 1.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    support: PointCloud,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Weights must align with the cloud's canonical point order.
    pub fn new(support: PointCloud, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != support.len() {
            return Err(DimlabError::invalid("weight count must match point count"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(DimlabError::invalid("weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DimlabError::invalid(format!(
                "weights must sum to 1 (got {total})"
            )));
        }
        Ok(DiscreteMeasure { support, weights })
    }

    pub fn uniform(support: PointCloud) -> Self {
        let n = support.len();
        DiscreteMeasure {
            weights: vec![1.0 / n as f64; n],
            support,
        }
    }

    /// Builds a measure from weighted points, merging exact duplicates by
    /// summing their weights, then normalising to total mass 1.
    pub fn from_weighted_points(
        points: Vec<(Vec<f64>, f64)>,
        resolution: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut pairs = points;
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut merged: Vec<(Vec<f64>, f64)> = Vec::with_capacity(pairs.len());
        for (p, w) in pairs {
            match merged.last_mut() {
                Some((q, wq)) if *q == p => *wq += w,
                _ => merged.push((p, w)),
            }
        }
        let total: f64 = merged.iter().map(|(_, w)| *w).sum();
        if !(total > 0.0) {
            return Err(DimlabError::invalid("total mass must be positive"));
        }
        let pts: Vec<Vec<f64>> = merged.iter().map(|(p, _)| p.clone()).collect();
        let cloud = PointCloud::new(pts, resolution, label)?;
        // cloud construction preserves the sorted order used above
        let weights: Vec<f64> = merged.iter().map(|(_, w)| w / total).collect();
        DiscreteMeasure::new(cloud, weights)
    }

    pub fn support(&self) -> &PointCloud {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// CSV export: `x0,...,x{d-1},weight`.
    pub fn to_csv(&self) -> String {
        let d = self.support.dim_ambient();
        let mut out = String::new();
        let mut header: Vec<String> = (0..d).map(|c| format!("x{c}")).collect();
        header.push("weight".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for (p, w) in self.support.points().zip(&self.weights) {
            let mut row: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
            row.push(format!("{w}"));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Energy of a measure: the double sum of kernel values against both
/// arguments; diagonal terms contribute w_i^2 since the kernel is 1 at 0.
pub fn energy(mu: &DiscreteMeasure, spec: &KernelSpec) -> f64 {
    let n = mu.len();
    let cloud = mu.support();
    let w = mu.weights();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = cloud.point(i);
            let mut acc = 0.0;
            for j in 0..n {
                acc += w[j] * spec.value_at(dist(xi, cloud.point(j)));
            }
            acc * w[i]
        })
        .collect();
    rows.iter().sum()
}

/// Potentials of a measure at each of its own support points.
pub fn potentials(mu: &DiscreteMeasure, spec: &KernelSpec) -> Vec<f64> {
    let n = mu.len();
    let cloud = mu.support();
    let w = mu.weights();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = cloud.point(i);
            (0..n)
                .map(|j| w[j] * spec.value_at(dist(xi, cloud.point(j))))
                .sum()
        })
        .collect()
}

/// Equilibrium-measure solve report.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub measure: DiscreteMeasure,
    pub energy: f64,
    /// Frank-Wolfe duality gap at exit; energy - gap lower-bounds the true minimum.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

const EQUILIBRIUM_MAX_ITERS: usize = 100_000;
const MAX_DENSE_POINTS: usize = 8192;

/// Minimises the quadratic energy over the probability simplex starting from
/// the uniform measure. Stops when the Frank-Wolfe duality gap drops below
/// `tol` relative to the current energy (default 1e-8 when NaN is passed);
/// if the iteration cap is hit the best iterate is returned with
/// `converged = false` and the residual gap.
pub fn equilibrium_measure(
    cloud: &PointCloud,
    spec: &KernelSpec,
    tol: f64,
) -> Result<EquilibriumResult> {
    spec.validate()?;
    let n = cloud.len();
    if n > MAX_DENSE_POINTS {
        return Err(DimlabError::invalid(format!(
            "equilibrium solve is dense; {n} points exceeds the {MAX_DENSE_POINTS} cap; subsample first"
        )));
    }
    let tol = if tol.is_nan() || tol <= 0.0 { 1e-8 } else { tol };
    let matrix = build_kernel_matrix(cloud, spec);
    let fw = frank_wolfe_simplex(
        n,
        |j, out| {
            let col = &matrix[j * n..(j + 1) * n];
            for (o, &v) in out.iter_mut().zip(col) {
                *o = v;
            }
        },
        tol,
        EQUILIBRIUM_MAX_ITERS,
        None,
    );
    Ok(EquilibriumResult {
        measure: DiscreteMeasure::new(cloud.clone(), fw.weights.clone())?,
        energy: fw.energy,
        gap: fw.gap,
        iterations: fw.iterations,
        converged: fw.converged,
    })
}

fn build_kernel_matrix(cloud: &PointCloud, spec: &KernelSpec) -> Vec<f64> {
    let n = cloud.len();
    let mut m = vec![0.0f64; n * n];
    m.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = cloud.point(i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = spec.value_at(dist(xi, cloud.point(j)));
        }
    });
    m
}

struct FwSolution {
    weights: Vec<f64>,
    energy: f64,
    gap: f64,
    iterations: usize,
    converged: bool,
}

/// Frank-Wolfe with away steps and exact line search for min w'Phi w on the
/// simplex. `col` writes column j of the kernel matrix into the scratch slice.
fn frank_wolfe_simplex(
    n: usize,
    col: impl Fn(usize, &mut [f64]),
    tol_rel: f64,
    max_iters: usize,
    warm: Option<&[f64]>,
) -> FwSolution {
    let mut w: Vec<f64> = match warm {
        Some(start) if start.len() == n => {
            let total: f64 = start.iter().sum();
            start.iter().map(|x| (x / total).max(0.0)).collect()
        }
        _ => vec![1.0 / n as f64; n],
    };
    let mut scratch = vec![0.0f64; n];
    // g = Phi w accumulated over the support
    let mut g = vec![0.0f64; n];
    for j in 0..n {
        if w[j] > 0.0 {
            col(j, &mut scratch);
            let wj = w[j];
            for (gi, &c) in g.iter_mut().zip(&scratch) {
                *gi += wj * c;
            }
        }
    }
    let mut energy: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;
        let mut s_idx = 0;
        let mut s_val = f64::INFINITY;
        let mut a_idx = 0;
        let mut a_val = f64::NEG_INFINITY;
        for i in 0..n {
            if g[i] < s_val {
                s_val = g[i];
                s_idx = i;
            }
            if w[i] > 0.0 && g[i] > a_val {
                a_val = g[i];
                a_idx = i;
            }
        }
        gap = 2.0 * (energy - s_val);
        if gap <= tol_rel * energy.abs() {
            converged = true;
            break;
        }
        let away_gain = 2.0 * (a_val - energy);
        if gap >= away_gain || w[a_idx] >= 1.0 - 1e-15 {
            // toward step
            col(s_idx, &mut scratch);
            let denom = 1.0 - 2.0 * s_val + energy;
            let mut gamma = if denom > 0.0 {
                ((energy - s_val) / denom).clamp(0.0, 1.0)
            } else {
                1.0
            };
            if gamma == 0.0 {
                gamma = 1e-12; // nudge off a flat spot
            }
            if gamma >= 1.0 {
                w.iter_mut().for_each(|x| *x = 0.0);
                w[s_idx] = 1.0;
                g.copy_from_slice(&scratch);
            } else {
                for i in 0..n {
                    w[i] *= 1.0 - gamma;
                    g[i] = (1.0 - gamma) * g[i] + gamma * scratch[i];
                }
                w[s_idx] += gamma;
            }
        } else {
            // away step
            col(a_idx, &mut scratch);
            let denom = energy - 2.0 * a_val + 1.0;
            let gamma_max = w[a_idx] / (1.0 - w[a_idx]);
            let gamma = if denom > 0.0 {
                ((a_val - energy) / denom).clamp(0.0, gamma_max)
            } else {
                gamma_max
            };
            let drop = gamma >= gamma_max * (1.0 - 1e-12);
            for i in 0..n {
                w[i] *= 1.0 + gamma;
                g[i] = (1.0 + gamma) * g[i] - gamma * scratch[i];
            }
            w[a_idx] = if drop { 0.0 } else { (w[a_idx] - gamma).max(0.0) };
            if drop {
                // restore exact mass balance after zeroing
                let total: f64 = w.iter().sum();
                for i in 0..n {
                    w[i] /= total;
                    g[i] /= total;
                }
            } else {
                w[a_idx] = 0.0f64.max(w[a_idx]);
            }
        }
        if iterations % 512 == 0 {
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                for i in 0..n {
                    w[i] /= total;
                    g[i] /= total;
                }
            }
        }
        energy = w.iter().zip(&g).map(|(a, b)| a * b).sum();
    }
    FwSolution {
        weights: w,
        energy,
        gap,
        iterations,
        converged,
    }
}

/// Options for capacity and profile computations on large clouds.
#[derive(Debug, Clone)]
pub struct CapacityOptions {
    /// Cap on equilibrium-solve sizes; larger clouds are subsampled by a
    /// maximal separated net at scale r/4 (coarsened until under the cap).
    pub max_points: usize,
    /// Relative Frank-Wolfe gap tolerance.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        CapacityOptions {
            max_points: 4096,
            tol: 1e-4,
            max_iterations: 50_000,
        }
    }
}

/// Capacity value with solve diagnostics.
#[derive(Debug, Clone)]
pub struct CapacityEstimate {
    pub value: f64,
    /// True when the subsample net had to be coarser than r/4, so the value
    /// may be capped by the net size rather than the set's structure.
    pub saturated: bool,
    pub net_points: usize,
    pub gap: f64,
    pub converged: bool,
}

/// Reciprocal of the minimal kernel energy over measures on the cloud.
pub fn capacity(cloud: &PointCloud, spec: &KernelSpec) -> Result<CapacityEstimate> {
    capacity_with(cloud, spec, &CapacityOptions::default())
}

/// Cap on the separated net used for the uniform-measure energy bound.
const UNIFORM_NET_CAP: usize = 16384;

pub fn capacity_with(
    cloud: &PointCloud,
    spec: &KernelSpec,
    opts: &CapacityOptions,
) -> Result<CapacityEstimate> {
    spec.validate()?;
    // route 1: equilibrium measure on a net at r/4, capped for the dense solve
    let (sub, eq_saturated) = subsample_for_scale(cloud, spec.r, opts.max_points)?;
    let matrix = build_kernel_matrix(&sub, spec);
    let n = sub.len();
    let fw = frank_wolfe_simplex(
        n,
        |j, out| {
            let colv = &matrix[j * n..(j + 1) * n];
            out.copy_from_slice(colv);
        },
        opts.tol,
        opts.max_iterations,
        None,
    );
    let mut value = 1.0 / fw.energy;
    let mut saturated = eq_saturated;

    // route 2: uniform measure on a maximal r-separated subset. Both routes
    // certify lower bounds on the capacity (each evaluates an admissible
    // measure), so the larger one wins; this route reaches scales where the
    // dense equilibrium solve would need too many points.
    if eq_saturated {
        let scale = spec.r.max(cloud.resolution());
        let mut rho = scale;
        let mut net = crate::geometry::maximal_separated_subset(cloud, rho)?;
        while net.len() > UNIFORM_NET_CAP {
            rho *= 2.0;
            net = crate::geometry::maximal_separated_subset(cloud, rho)?;
        }
        let uniform_bound = 1.0 / energy(&DiscreteMeasure::uniform(net), spec);
        if uniform_bound > value {
            value = uniform_bound;
            saturated = rho > scale * 1.0001;
        }
    }
    Ok(CapacityEstimate {
        value,
        saturated,
        net_points: n,
        gap: fw.gap,
        converged: fw.converged,
    })
}

/// Net subsample at scale r/4 (never below resolution), coarsened by factors
/// of two until at most `max_points` survive. The kernel plateau below r
/// makes structure finer than r energy-irrelevant, so the estimate is only
/// flagged as saturated when the net ends up coarser than r itself.
fn subsample_for_scale(
    cloud: &PointCloud,
    r: f64,
    max_points: usize,
) -> Result<(PointCloud, bool)> {
    if cloud.len() <= max_points {
        return Ok((cloud.clone(), false));
    }
    let base = (r / 4.0).max(cloud.resolution());
    let mut rho = base;
    loop {
        let net = crate::geometry::maximal_separated_subset(cloud, rho)?;
        if net.len() <= max_points {
            return Ok((net, rho > r * 1.0001));
        }
        rho *= 2.0;
    }
}

/// Capacity curve over dyadic scales with its log-log fit.
#[derive(Debug, Clone)]
pub struct CapacityCurve {
    pub scales: Vec<f64>,
    pub capacities: Vec<f64>,
    pub saturated: Vec<bool>,
    pub fit: SlopeFit,
}

impl CapacityCurve {
    /// CSV export: `r,capacity`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,capacity\n");
        for (r, c) in self.scales.iter().zip(&self.capacities) {
            out.push_str(&format!("{r},{c}\n"));
        }
        out
    }
}

fn capacity_curve_for(
    cloud: &PointCloud,
    make_spec: impl Fn(f64) -> KernelSpec + Sync,
    opts: &CapacityOptions,
) -> Result<CapacityCurve> {
    let j_max = cloud.max_level().saturating_sub(1);
    if j_max < 4 {
        return Err(DimlabError::InsufficientScales {
            needed: 3,
            available: j_max as usize,
        });
    }
    let js: Vec<u32> = (2..=j_max).collect();
    let results: Vec<(f64, CapacityEstimate)> = js
        .par_iter()
        .map(|&j| {
            let r = pow2(-(j as i32));
            let est = capacity_with(cloud, &make_spec(r), opts)?;
            Ok((r, est))
        })
        .collect::<Result<Vec<_>>>()?;
    let usable: Vec<&(f64, CapacityEstimate)> =
        results.iter().filter(|(_, e)| !e.saturated).collect();
    let mut chosen: Vec<&(f64, CapacityEstimate)> = if usable.len() >= 3 {
        usable
    } else {
        results.iter().collect()
    };
    // coarse scales where the capacity is still O(1) bend the power-law fit;
    // trim them as long as enough scales survive
    for floor in [64.0f64, 32.0, 16.0, 8.0, 4.0, 2.0] {
        if let Some(start) = chosen.iter().position(|(_, e)| e.value >= floor) {
            if chosen.len() - start >= 3 {
                chosen.drain(..start);
                break;
            }
        }
    }
    if chosen.len() < 3 {
        return Err(DimlabError::InsufficientScales {
            needed: 3,
            available: chosen.len(),
        });
    }
    let xs: Vec<f64> = chosen.iter().map(|(r, _)| (1.0 / r).ln()).collect();
    let ys: Vec<f64> = chosen.iter().map(|(_, e)| e.value.ln()).collect();
    let fit = fit_line(
        &xs,
        &ys,
        (chosen.last().unwrap().0, chosen[0].0),
    );
    Ok(CapacityCurve {
        scales: results.iter().map(|(r, _)| *r).collect(),
        capacities: results.iter().map(|(_, e)| e.value).collect(),
        saturated: results.iter().map(|(_, e)| e.saturated).collect(),
        fit,
    })
}

/// Box dimension profile dim_B^s: the scaling exponent of the capacity
/// C_r^s as r -> 0, clipped to [0, min(s, d)].
pub fn box_dimension_profile(cloud: &PointCloud, s: f64) -> Result<(f64, SlopeFit)> {
    box_dimension_profile_with(cloud, s, &CapacityOptions::default())
}

pub fn box_dimension_profile_with(
    cloud: &PointCloud,
    s: f64,
    opts: &CapacityOptions,
) -> Result<(f64, SlopeFit)> {
    if !(s > 0.0) {
        return Err(DimlabError::invalid("box profile needs s > 0"));
    }
    let d = cloud.dim_ambient() as f64;
    let curve = capacity_curve_for(
        cloud,
        |r| KernelSpec {
            family: KernelFamily::BoxProfile { s },
            r,
        },
        opts,
    )?;
    Ok((curve.fit.slope.clamp(0.0, s.min(d)), curve.fit))
}

/// Intermediate dimension profile dim_theta^k: the unique s in [0, k] where
/// the capacity scaling exponent of the three-branch kernel equals s, found
/// by bisection on the finite-scale surrogate.
pub fn intermediate_dimension_profile(cloud: &PointCloud, theta: f64, k: usize) -> Result<f64> {
    intermediate_dimension_profile_with(cloud, theta, k, &CapacityOptions::default())
}

pub fn intermediate_dimension_profile_with(
    cloud: &PointCloud,
    theta: f64,
    k: usize,
    opts: &CapacityOptions,
) -> Result<f64> {
    let d = cloud.dim_ambient();
    if k < 1 || k > d {
        return Err(DimlabError::invalid(format!("k must lie in [1, {d}]")));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DimlabError::invalid("theta must lie in (0, 1]"));
    }
    let kf = k as f64;
    let h = |s: f64| -> Result<f64> {
        let curve = capacity_curve_for(
            cloud,
            |r| KernelSpec {
                family: KernelFamily::IntermediateProfile { s, k, theta },
                r,
            },
            opts,
        )?;
        Ok(curve.fit.slope - s)
    };
    let h_lo = h(1e-9)?;
    if h_lo <= 0.0 {
        return Ok(0.0);
    }
    let h_hi = h(kf)?;
    if h_hi >= 0.0 {
        return Ok(kf);
    }
    let mut lo = 1e-9;
    let mut hi = kf;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if h(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
