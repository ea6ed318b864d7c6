//! Intermediate dimension estimation via optimal constrained dyadic covers
//! computed by dynamic programming over the occupancy cube tree.
//!
//! A cover admissible at coarse scale r = 2^-j_top and parameter theta uses
//! dyadic cubes with levels in [j_top, j_bot], j_bot ~ j_top/theta. The DP
//! computes the exact minimum of sum(side^s) over such covers; the dimension
//! estimate is the exponent s at which the cost stops growing as r shrinks.
//! Cube side stands in for the diameter: the sqrt(d) factor is constant and
//! cancels in slopes.

use crate::covering::{fit_line, SlopeFit};
use crate::curve::{isotonic_non_decreasing, SpectrumCurve, ThetaDiagnostics};
use crate::error::{DimlabError, Result};
use crate::geometry::{pow2, PointCloud};

/// Result of one constrained-cover optimisation.
#[derive(Debug, Clone)]
pub struct CoverCost {
    pub r: f64,
    pub theta: f64,
    pub s: f64,
    pub cost: f64,
    /// (level, number of cubes the optimal cover takes at that level)
    pub witness_levels: Vec<(u32, u64)>,
}

impl CoverCost {
    /// JSON export of the witness histogram for diagnostics.
    pub fn witness_json(&self) -> String {
        let entries: Vec<String> = self
            .witness_levels
            .iter()
            .map(|(j, n)| format!("{{\"level\":{j},\"cubes\":{n}}}"))
            .collect();
        format!("[{}]", entries.join(","))
    }
}

/// Occupancy tree of the cloud's dyadic cubes, shared by all DP runs.
pub struct CubeTree {
    /// per level: flat index array (d coordinates per node), lexicographically sorted
    levels: Vec<LevelNodes>,
    dim: usize,
}

struct LevelNodes {
    idx: Vec<i64>,
    /// position of each node's parent in the previous level (empty at level 0)
    parent: Vec<u32>,
}

impl CubeTree {
    pub fn build(cloud: &PointCloud, max_level: u32) -> CubeTree {
        let d = cloud.dim_ambient();
        let mut levels = Vec::with_capacity(max_level as usize + 1);
        let mut prev_sorted: Vec<Vec<i64>> = Vec::new();
        for j in 0..=max_level {
            let mut nodes: Vec<Vec<i64>> = (0..cloud.len()).map(|i| cloud.cube_index(i, j)).collect();
            nodes.sort();
            nodes.dedup();
            let parent = if j == 0 {
                Vec::new()
            } else {
                nodes
                    .iter()
                    .map(|node| {
                        let p: Vec<i64> = node.iter().map(|&k| k >> 1).collect();
                        prev_sorted.binary_search(&p).expect("parent cube occupied") as u32
                    })
                    .collect()
            };
            let mut idx = Vec::with_capacity(nodes.len() * d);
            for node in &nodes {
                idx.extend_from_slice(node);
            }
            levels.push(LevelNodes { idx, parent });
            prev_sorted = nodes;
        }
        CubeTree { levels, dim: d }
    }

    pub fn max_level(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn node_count(&self, level: u32) -> usize {
        self.levels[level as usize].idx.len() / self.dim
    }

    /// Optimal cover costs for every coarse level at once: entry jt of the
    /// result is the cost over covers with levels in [jt, j_bot]. One
    /// bottom-up pass serves all coarse cuts.
    pub fn cover_costs_all_tops(&self, j_bot: u32, s: f64) -> Vec<f64> {
        assert!(j_bot <= self.max_level());
        let mut totals = vec![0.0f64; j_bot as usize + 1];
        let mut costs: Vec<f64> = {
            let n = self.node_count(j_bot);
            let own = pow2(-(j_bot as i32)).powf(s);
            totals[j_bot as usize] = own * n as f64;
            vec![own; n]
        };
        for j in (0..j_bot).rev() {
            let n = self.node_count(j);
            let own = pow2(-(j as i32)).powf(s);
            let child_level = &self.levels[j as usize + 1];
            let mut sums = vec![0.0f64; n];
            for (t, &p) in child_level.parent.iter().enumerate() {
                sums[p as usize] += costs[t];
            }
            let mut total = 0.0;
            for slot in sums.iter_mut() {
                if own <= *slot {
                    *slot = own;
                }
                total += *slot;
            }
            totals[j as usize] = total;
            costs = sums;
        }
        totals
    }

    /// Exact optimal cover cost over dyadic cubes with levels in [j_top, j_bot].
    pub fn cover_cost(&self, j_top: u32, j_bot: u32, s: f64) -> CoverCost {
        assert!(j_top <= j_bot && j_bot <= self.max_level());
        // choice[j][m]: true if node m at level j takes its own cube
        let mut costs: Vec<Vec<f64>> = Vec::new();
        let mut choices: Vec<Vec<bool>> = Vec::new();
        for j in (j_top..=j_bot).rev() {
            let n = self.node_count(j);
            let own = pow2(-(j as i32 * 1)).powf(s);
            if j == j_bot {
                costs.push(vec![own; n]);
                choices.push(vec![true; n]);
                continue;
            }
            let child_level = &self.levels[j as usize + 1];
            let child_costs = costs.last().unwrap();
            let mut sums = vec![0.0f64; n];
            for (t, &p) in child_level.parent.iter().enumerate() {
                sums[p as usize] += child_costs[t];
            }
            let mut cost_j = Vec::with_capacity(n);
            let mut choice_j = Vec::with_capacity(n);
            for m in 0..n {
                if own <= sums[m] {
                    cost_j.push(own);
                    choice_j.push(true);
                } else {
                    cost_j.push(sums[m]);
                    choice_j.push(false);
                }
            }
            costs.push(cost_j);
            choices.push(choice_j);
        }
        costs.reverse();
        choices.reverse();
        let total: f64 = costs[0].iter().sum();

        // walk the chosen antichain to histogram the witness levels
        let mut histogram = vec![0u64; (j_bot - j_top + 1) as usize];
        let mut marked = vec![true; self.node_count(j_top)];
        for j in j_top..=j_bot {
            let rel = (j - j_top) as usize;
            let mut next_marked = if j < j_bot {
                vec![false; self.node_count(j + 1)]
            } else {
                Vec::new()
            };
            for m in 0..self.node_count(j) {
                if !marked[m] {
                    continue;
                }
                if choices[rel][m] {
                    histogram[rel] += 1;
                } else {
                    let child_level = &self.levels[j as usize + 1];
                    for (t, &p) in child_level.parent.iter().enumerate() {
                        if p as usize == m {
                            next_marked[t] = true;
                        }
                    }
                }
            }
            marked = next_marked;
        }
        let witness_levels: Vec<(u32, u64)> = (j_top..=j_bot)
            .map(|j| (j, histogram[(j - j_top) as usize]))
            .filter(|(_, n)| *n > 0)
            .collect();
        CoverCost {
            r: pow2(-(j_top as i32)),
            theta: j_top as f64 / j_bot.max(1) as f64,
            s,
            cost: total,
            witness_levels,
        }
    }
}

/// Exact minimum of sum(|U|^s) over covers by dyadic cubes with levels in
/// [log2(1/r), ceil(log2(1/r)/theta)].
pub fn optimal_cover_cost(cloud: &PointCloud, r: f64, theta: f64, s: f64) -> Result<CoverCost> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DimlabError::invalid("theta must lie in (0, 1]"));
    }
    let d = cloud.dim_ambient() as f64;
    if !(0.0..=d).contains(&s) {
        return Err(DimlabError::invalid(format!("s must lie in [0, {d}]")));
    }
    let l = (1.0 / r).log2();
    if (l - l.round()).abs() > 1e-9 || l < -1e-9 {
        return Err(DimlabError::invalid("r must be dyadic, r = 2^-j"));
    }
    let j_top = l.round() as u32;
    let j_bot = ((j_top as f64) / theta - 1e-9).ceil().max(j_top as f64) as u32;
    if pow2(-(j_bot as i32)) < cloud.resolution() {
        return Err(DimlabError::ResolutionExceeded {
            requested: r.powf(1.0 / theta),
            resolution: cloud.resolution(),
        });
    }
    let tree = CubeTree::build(cloud, j_bot);
    let mut out = tree.cover_cost(j_top, j_bot, s);
    out.theta = theta;
    Ok(out)
}

/// Coarse/fine level-pair field around the theta ray j_bot = j_top/theta:
/// all pairs whose level ratio lies within a factor two of 1/theta. The cover
/// cost is regressed on (j_top, j_bot) jointly with a free intercept, so the
/// lattice constant cancels even when the exact ray supports only one pair.
fn level_pair_field(theta: f64, j_fine_max: u32) -> Vec<(u32, u32)> {
    let ratio = 1.0 / theta;
    let mut widen = 2.0f64;
    loop {
        let mut pairs = Vec::new();
        for jt in 1..=j_fine_max {
            let lo = ((jt as f64) * ratio / widen).ceil().max(jt as f64) as u32;
            let hi = (((jt as f64) * ratio * widen).floor() as u32).min(j_fine_max);
            for jb in lo..=hi {
                pairs.push((jt, jb));
            }
        }
        let mut tops: Vec<u32> = pairs.iter().map(|&(jt, _)| jt).collect();
        tops.sort_unstable();
        tops.dedup();
        let mut bots: Vec<u32> = pairs.iter().map(|&(_, jb)| jb).collect();
        bots.sort_unstable();
        bots.dedup();
        // the plane fit needs spread in both coordinates
        if (pairs.len() >= 4 && tops.len() >= 2 && bots.len() >= 2) || widen > 4.0 {
            return pairs;
        }
        widen *= 1.3;
    }
}

/// Two-variable least squares ln cost ~ c - (a j_top + b j_bot); returns
/// (a, b, r_squared) in log2 units. Points are weighted by depth, since
/// deeper pairs sit closer to the asymptotic scaling regime. Requires spread
/// in both coordinates.
fn fit_plane(pairs: &[(u32, u32)], costs: &[f64]) -> Option<(f64, f64, f64)> {
    if pairs.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = pairs.iter().map(|&(jt, _)| jt as f64).collect();
    let zs: Vec<f64> = pairs.iter().map(|&(_, jb)| jb as f64).collect();
    let ys: Vec<f64> = costs.iter().map(|c| c.max(f64::MIN_POSITIVE).log2()).collect();
    let ws: Vec<f64> = pairs.iter().map(|&(jt, jb)| ((jt + jb) as f64).powi(2)).collect();
    let wsum: f64 = ws.iter().sum();
    let mx = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / wsum;
    let mz = zs.iter().zip(&ws).map(|(z, w)| z * w).sum::<f64>() / wsum;
    let my = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let mut sxx = 0.0;
    let mut szz = 0.0;
    let mut sxz = 0.0;
    let mut sxy = 0.0;
    let mut szy = 0.0;
    let mut syy = 0.0;
    for i in 0..pairs.len() {
        let dx = xs[i] - mx;
        let dz = zs[i] - mz;
        let dy = ys[i] - my;
        let w = ws[i];
        sxx += w * dx * dx;
        szz += w * dz * dz;
        sxz += w * dx * dz;
        sxy += w * dx * dy;
        szy += w * dz * dy;
        syy += w * dy * dy;
    }
    let det = sxx * szz - sxz * sxz;
    if det.abs() < 1e-9 {
        return None;
    }
    let ca = (sxy * szz - szy * sxz) / det;
    let cb = (szy * sxx - sxy * sxz) / det;
    let ss_exp = ca * sxy + cb * szy;
    let r2 = if syy > 0.0 { (ss_exp / syy).clamp(0.0, 1.0) } else { 1.0 };
    Some((-ca, -cb, r2))
}

/// Intermediate dimension at theta.
///
/// The cover cost is computed on a field of level pairs around the theta ray
/// and modelled as log-bilinear, cost ~ C 2^-(a j_top + b j_bot); along the
/// ray j_bot = j_top/theta the cost then scales like r^(a + b/theta), and the
/// estimate is the root in s of that exponent, found by bisection on [0, d].
/// The free intercept absorbs the lattice constant that biases single-pair
/// threshold estimates.
///
/// At theta = 1 the field collapses toward single-scale covers and the
/// estimate reproduces the box dimension.
pub fn intermediate_dimension(cloud: &PointCloud, theta: f64) -> Result<(f64, SlopeFit)> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DimlabError::invalid("theta must lie in (0, 1]"));
    }
    let j_fine_max = cloud.max_level().saturating_sub(1);
    let pairs = level_pair_field(theta, j_fine_max);
    if pairs.len() < 3 {
        return Err(DimlabError::InsufficientScales {
            needed: 3,
            available: pairs.len(),
        });
    }
    let deepest = pairs.iter().map(|&(_, m)| m).max().unwrap();
    let tree = CubeTree::build(cloud, deepest);
    let d = cloud.dim_ambient() as f64;
    intermediate_dimension_with_tree(&tree, d, theta, &pairs)
}

fn intermediate_dimension_with_tree(
    tree: &CubeTree,
    d: f64,
    theta: f64,
    pairs: &[(u32, u32)],
) -> Result<(f64, SlopeFit)> {
    let deepest = pairs.iter().map(|&(_, m)| m).max().unwrap();
    let range = (pow2(-(deepest as i32)), pow2(-(pairs[0].0 as i32)));
    let mut by_bot: Vec<u32> = pairs.iter().map(|&(_, jb)| jb).collect();
    by_bot.sort_unstable();
    by_bot.dedup();

    // exponent of the cost along the theta ray, per -log2 r, at parameter s
    let ray_exponent = |s: f64| -> Result<(f64, f64)> {
        let mut costs = Vec::with_capacity(pairs.len());
        for &jb in &by_bot {
            let totals = tree.cover_costs_all_tops(jb, s);
            for &(jt, jb2) in pairs.iter().filter(|&&(_, b)| b == jb) {
                debug_assert_eq!(jb2, jb);
                costs.push((jt, jb, totals[jt as usize]));
            }
        }
        let ordered: Vec<(u32, u32)> = costs.iter().map(|&(jt, jb, _)| (jt, jb)).collect();
        let values: Vec<f64> = costs.iter().map(|&(_, _, c)| c).collect();
        let (a, b, r2) = fit_plane(&ordered, &values).ok_or(DimlabError::InsufficientScales {
            needed: 3,
            available: pairs.len(),
        })?;
        Ok((a + b / theta, r2))
    };

    let make_fit = |r2: f64| SlopeFit {
        slope: 0.0,
        intercept: 0.0,
        r_squared: r2,
        scale_range: range,
    };

    // cost grows with depth below the dimension (exponent < 0) and decays
    // above it; bisect on the sign change
    let (e_lo, r2_lo) = ray_exponent(0.0)?;
    if e_lo > 0.0 {
        return Ok((0.0, make_fit(r2_lo)));
    }
    let (e_hi, r2_hi) = ray_exponent(d)?;
    if e_hi < 0.0 {
        return Ok((d, make_fit(r2_hi)));
    }
    let mut lo = 0.0;
    let mut hi = d;
    let mut r2 = r2_hi;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        let (e, r) = ray_exponent(mid)?;
        r2 = r;
        if e < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), make_fit(r2)))
}

/// Intermediate-dimension curve over a theta grid with a monotone
/// (non-decreasing) isotonic projection; per-theta adjustments are recorded
/// in the diagnostics. Thetas whose scale window is empty are skipped.
pub fn intermediate_curve(cloud: &PointCloud, thetas: &[f64]) -> Result<SpectrumCurve> {
    let j_fine_max = cloud.max_level().saturating_sub(1);
    let tree = CubeTree::build(cloud, j_fine_max);
    let d = cloud.dim_ambient() as f64;
    let mut ts = Vec::new();
    let mut raw = Vec::new();
    let mut diags = Vec::new();
    for &theta in thetas {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(DimlabError::invalid("theta must lie in (0, 1]"));
        }
        let pairs = level_pair_field(theta, j_fine_max);
        if pairs.len() < 3 {
            continue;
        }
        match intermediate_dimension_with_tree(&tree, d, theta, &pairs) {
            Ok((v, fit)) => {
                ts.push(theta);
                raw.push(v);
                diags.push((fit.r_squared, pairs.len()));
            }
            Err(DimlabError::InsufficientScales { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if ts.is_empty() {
        return Err(DimlabError::InsufficientScales {
            needed: 1,
            available: 0,
        });
    }
    let (proj, _) = isotonic_non_decreasing(&raw);
    let diag = diags
        .iter()
        .zip(raw.iter().zip(&proj))
        .map(|(&(r2, n), (orig, adj))| ThetaDiagnostics {
            fit_r2: r2,
            n_anchors: n as u32,
            adjustment: (orig - adj).abs(),
        })
        .collect();
    SpectrumCurve::new(ts, proj, diag)
}

/// Hausdorff proxy: linear extrapolation of the curve to theta = 0 from its
/// three smallest grid points, clipped to [0, smallest curve value].
///
/// This is an upper-bound surrogate, not a Hausdorff-dimension estimator: the
/// true curve may be discontinuous at theta = 0.
pub fn extrapolate_theta_zero(curve: &SpectrumCurve) -> f64 {
    let k = curve.len().min(3);
    if k == 0 {
        return 0.0;
    }
    if k < 3 {
        return curve.values[0];
    }
    let xs = &curve.thetas[..k];
    let ys = &curve.values[..k];
    let fit = fit_line(xs, ys, (0.0, 0.0));
    let floor0 = curve.values.iter().cloned().fold(f64::INFINITY, f64::min);
    fit.intercept.clamp(0.0, floor0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::box_count;
    use crate::geometry::{generate, GeneratorSpec};

    #[test]
    fn cost_at_s_zero_counts_coarsest_cubes() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-10) }).unwrap();
        let c = optimal_cover_cost(&cloud, pow2(-3), 0.5, 0.0).unwrap();
        let n = box_count(&cloud, pow2(-3)).unwrap();
        assert_eq!(c.cost, n as f64);
        assert_eq!(c.witness_levels, vec![(3, n)]);
    }

    #[test]
    fn cost_at_full_dimension_is_scale_free_on_square() {
        let cloud = generate(&GeneratorSpec::GridSquare { delta: pow2(-7) }).unwrap();
        let c3 = optimal_cover_cost(&cloud, pow2(-3), 1.0, 2.0).unwrap();
        let c5 = optimal_cover_cost(&cloud, pow2(-5), 1.0, 2.0).unwrap();
        assert!((c3.cost - 1.0).abs() < 1e-9, "cost {}", c3.cost);
        assert!((c3.cost - c5.cost).abs() < 1e-9);
    }

    #[test]
    fn cost_is_non_increasing_in_s() {
        let cloud = generate(&GeneratorSpec::SequenceSet {
            p: 1.0,
            delta: pow2(-10),
        })
        .unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=6 {
            let s = k as f64 / 6.0;
            let c = optimal_cover_cost(&cloud, pow2(-3), 0.5, s).unwrap();
            assert!(c.cost <= prev + 1e-12);
            assert!(c.cost > 0.0);
            prev = c.cost;
        }
    }

    #[test]
    fn rejects_non_dyadic_scale_and_exceeded_resolution() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-8) }).unwrap();
        assert!(optimal_cover_cost(&cloud, 0.3, 0.5, 0.5).is_err());
        assert!(matches!(
            optimal_cover_cost(&cloud, pow2(-6), 0.5, 0.5),
            Err(DimlabError::ResolutionExceeded { .. })
        ));
    }

    #[test]
    fn segment_curve_is_constant_one() {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(-12) }).unwrap();
        let curve = intermediate_curve(&cloud, &[0.25, 0.5, 0.75, 1.0]).unwrap();
        for (t, v) in curve.thetas.iter().zip(&curve.values) {
            assert!((v - 1.0).abs() < 0.05, "theta {t}: {v}");
        }
    }

    #[test]
    fn square_dimension_is_two_for_any_theta() {
        let cloud = generate(&GeneratorSpec::GridSquare { delta: pow2(-7) }).unwrap();
        for theta in [0.3, 0.6, 1.0] {
            let (v, _) = intermediate_dimension(&cloud, theta).unwrap();
            assert!((v - 2.0).abs() < 0.05, "theta {theta}: {v}");
        }
    }

    #[test]
    fn theta_one_reproduces_box_estimate() {
        let cloud = generate(&GeneratorSpec::SequenceSet {
            p: 1.0,
            delta: pow2(-14),
        })
        .unwrap();
        let (v, _) = intermediate_dimension(&cloud, 1.0).unwrap();
        let box_est = crate::covering::estimate_box_dimension(&cloud).unwrap();
        assert!(
            (v - box_est.fit.slope).abs() < 0.05,
            "theta=1 {v} vs box {}",
            box_est.fit.slope
        );
    }

    #[test]
    fn curve_is_monotone_after_projection() {
        let cloud = generate(&GeneratorSpec::SequenceSet {
            p: 1.0,
            delta: pow2(-12),
        })
        .unwrap();
        let curve = intermediate_curve(&cloud, &[0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        for w in curve.values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn f1_curve_increases_toward_one_half() {
        let cloud = generate(&GeneratorSpec::SequenceSet {
            p: 1.0,
            delta: pow2(-14),
        })
        .unwrap();
        let curve = intermediate_curve(&cloud, &[0.2, 0.5, 0.8, 1.0]).unwrap();
        let first = curve.values[0];
        let last = *curve.values.last().unwrap();
        assert!(first < last);
        assert!((last - 0.5).abs() < 0.05, "theta=1 value {last}");
    }
}
