//! Fourier transforms of discrete measures, shell-averaged decay energies,
//! and Fourier/Sobolev dimension and Fourier-spectrum estimation.
//!
//! At a finite frequency cutoff every decay integral is finite, so divergence
//! cannot be tested literally. Instead the mean of |mu_hat|^(2/theta) over
//! dyadic shells is fitted to a power law R^-beta and the spectrum value is
//! theta * beta, the exponent at which the tail integral would stop
//! converging. The cutoff is tied to 1/(4 delta): beyond it the transform of
//! the discrete measure is sampling artifact, not signal.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::DiscreteMeasure;
use crate::covering::fit_line;
use crate::error::{DimlabError, Result};

/// Fourier transform of the measure at frequency z.
pub fn ft_measure(mu: &DiscreteMeasure, z: &[f64]) -> Complex64 {
    let cloud = mu.support();
    let w = mu.weights();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, p) in cloud.points().enumerate() {
        let phase: f64 = -2.0 * std::f64::consts::PI * p.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        let (s, c) = phase.sin_cos();
        acc += w[i] * Complex64::new(c, s);
    }
    acc
}

/// Shell-averaged transform decay.
#[derive(Debug, Clone)]
pub struct ShellEnergyCurve {
    /// Lower shell radii R_m = 2^m.
    pub radii: Vec<f64>,
    /// Mean of |mu_hat|^(2/theta) over the shell, times the shell volume factor R^d.
    pub values: Vec<f64>,
    pub theta: f64,
    pub cutoff: f64,
    pub n_samples: usize,
}

impl ShellEnergyCurve {
    /// CSV export: `R,value,n_samples`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,value,n_samples\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            out.push_str(&format!("{r},{v},{}\n", self.n_samples));
        }
        out
    }
}

/// Sampling configuration for shell estimates.
#[derive(Debug, Clone)]
pub struct FourierOptions {
    /// Frequency cutoff; defaults to 1/(4 delta) when NaN.
    pub z_max: f64,
    pub samples_per_shell: usize,
    pub seed: u64,
}

impl Default for FourierOptions {
    fn default() -> Self {
        FourierOptions {
            z_max: f64::NAN,
            samples_per_shell: 512,
            seed: 7,
        }
    }
}

/// Sampled transform moduli on one dyadic shell.
struct Shell {
    radius: f64,
    moduli: Vec<f64>,
    /// max over samples plus deterministic axis probes; witnesses
    /// non-decaying directions that random sampling almost surely misses
    probe_max: f64,
}

fn resolve_cutoff(mu: &DiscreteMeasure, requested: f64) -> Result<f64> {
    let max_valid = 1.0 / (4.0 * mu.support().resolution());
    if requested.is_nan() {
        return Ok(max_valid);
    }
    if requested > max_valid {
        return Err(DimlabError::CutoffExceedsResolution {
            cutoff: requested,
            max_valid,
        });
    }
    Ok(requested)
}

/// Samples |mu_hat| on dyadic shells [2^m, 2^(m+1)) up to the cutoff.
///
/// In d = 1 the samples are deterministic stratified points; in d >= 2 each
/// shell draws volume-stratified radii with antithetic pairs and fresh
/// uniform directions from a per-shell seeded generator, so a fixed seed
/// reproduces the curve bit for bit.
fn sample_shells(mu: &DiscreteMeasure, z_max: f64, k: usize, seed: u64) -> Vec<Shell> {
    use rand::{Rng, SeedableRng};
    let d = mu.support().dim_ambient();
    let m_max = z_max.log2().floor() as i64 - 1;
    let mut shells = Vec::new();
    for m in 0..=m_max.max(0) {
        let radius = (2f64).powi(m as i32);
        if radius * 2.0 > z_max * (1.0 + 1e-12) {
            break;
        }
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(k + d);
        if d == 1 {
            for q in 0..k {
                zs.push(vec![radius * (1.0 + (q as f64 + 0.5) / k as f64)]);
            }
        } else {
            let mut rng =
                rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let strata = (k / 2).max(1);
            let vol_span = (2f64).powi(d as i32) - 1.0;
            for q in 0..strata {
                let u: f64 = rng.gen();
                for v in [(q as f64 + u) / strata as f64, (q as f64 + 1.0 - u) / strata as f64] {
                    let rho = radius * (1.0 + v * vol_span).powf(1.0 / d as f64);
                    let mut dir: Vec<f64> = (0..d)
                        .map(|_| {
                            // Box-Muller standard normal
                            let a: f64 = rng.gen::<f64>().max(1e-300);
                            let b: f64 = rng.gen();
                            (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
                        })
                        .collect();
                    let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
                    dir.iter_mut().for_each(|c| *c *= rho / norm);
                    zs.push(dir);
                }
            }
        }
        // axis probes at the shell radius
        let probe_start = zs.len();
        for axis in 0..d {
            let mut z = vec![0.0; d];
            z[axis] = radius;
            zs.push(z);
        }
        let moduli: Vec<f64> = zs
            .par_iter()
            .map(|z| ft_measure(mu, z).norm().min(1.0))
            .collect();
        let probe_max = moduli
            .iter()
            .copied()
            .fold(0.0f64, f64::max);
        shells.push(Shell {
            radius,
            moduli: moduli[..probe_start].to_vec(),
            probe_max,
        });
    }
    shells
}

/// Shell-energy curve for the integrand of the (s, theta)-energy.
pub fn shell_energies(
    mu: &DiscreteMeasure,
    theta: f64,
    z_max: f64,
    samples_per_shell: usize,
    seed: u64,
) -> Result<ShellEnergyCurve> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DimlabError::invalid("shell energies need theta in (0, 1]"));
    }
    let cutoff = resolve_cutoff(mu, z_max)?;
    let d = mu.support().dim_ambient() as f64;
    let shells = sample_shells(mu, cutoff, samples_per_shell, seed);
    let exponent = 2.0 / theta;
    let radii: Vec<f64> = shells.iter().map(|s| s.radius).collect();
    let values: Vec<f64> = shells
        .iter()
        .map(|s| {
            let mean: f64 =
                s.moduli.iter().map(|m| m.powf(exponent)).sum::<f64>() / s.moduli.len() as f64;
            mean * s.radius.powf(d)
        })
        .collect();
    Ok(ShellEnergyCurve {
        radii,
        values,
        theta,
        cutoff,
        n_samples: samples_per_shell,
    })
}

/// Upper-half fit window over the shells; decay fits use the fine shells where
/// the asymptotic regime lives.
fn fit_window(count: usize) -> Result<std::ops::Range<usize>> {
    if count < 3 {
        return Err(DimlabError::InsufficientShells {
            needed: 3,
            available: count,
        });
    }
    let start = (count / 2).min(count - 3);
    Ok(start..count)
}

fn decay_exponent(radii: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    let window = fit_window(radii.len())?;
    let xs: Vec<f64> = radii[window.clone()].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values[window]
        .iter()
        .map(|v| v.max(f64::MIN_POSITIVE).ln())
        .collect();
    let fit = fit_line(&xs, &ys, (0.0, 0.0));
    Ok((-fit.slope, fit.r_squared))
}

/// Fourier-spectrum estimate at theta in (0, 1]: theta times the decay
/// exponent of the shell means of |mu_hat|^(2/theta). Values are not clipped
/// to the ambient dimension; measure-level spectra may exceed it.
pub fn fourier_spectrum_point(mu: &DiscreteMeasure, theta: f64) -> Result<f64> {
    fourier_spectrum_point_with(mu, theta, &FourierOptions::default())
}

pub fn fourier_spectrum_point_with(
    mu: &DiscreteMeasure,
    theta: f64,
    opts: &FourierOptions,
) -> Result<f64> {
    let curve = shell_energies(mu, theta, opts.z_max, opts.samples_per_shell, opts.seed)?;
    let d = mu.support().dim_ambient() as f64;
    let means: Vec<f64> = curve
        .radii
        .iter()
        .zip(&curve.values)
        .map(|(r, v)| v / r.powf(d))
        .collect();
    let (beta, _) = decay_exponent(&curve.radii, &means)?;
    Ok((theta * beta).max(0.0))
}

/// Fourier dimension of the measure (theta = 0): decay exponent of the
/// shell-max envelope of |mu_hat|^2, axis probes included.
pub fn fourier_dimension_point(mu: &DiscreteMeasure) -> Result<f64> {
    fourier_dimension_point_with(mu, &FourierOptions::default())
}

pub fn fourier_dimension_point_with(mu: &DiscreteMeasure, opts: &FourierOptions) -> Result<f64> {
    let cutoff = resolve_cutoff(mu, opts.z_max)?;
    let shells = sample_shells(mu, cutoff, opts.samples_per_shell, opts.seed);
    let radii: Vec<f64> = shells.iter().map(|s| s.radius).collect();
    let sup_sq: Vec<f64> = shells.iter().map(|s| s.probe_max * s.probe_max).collect();
    let (kappa, _) = decay_exponent(&radii, &sup_sq)?;
    Ok(kappa.max(0.0))
}

/// Per-theta decay diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FourierDiagnostics {
    /// Fitted decay exponent of the shell statistic.
    pub rho: f64,
    pub fit_r2: f64,
}

/// Fourier spectrum sampled over a theta grid, with the theta = 0 (sup decay)
/// and theta = 1 (Sobolev) endpoints appended.
#[derive(Debug, Clone)]
pub struct FourierCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub diagnostics: Vec<FourierDiagnostics>,
}

impl FourierCurve {
    pub fn value_at(&self, theta: f64) -> Option<f64> {
        self.thetas
            .iter()
            .position(|t| (t - theta).abs() < 1e-12)
            .map(|i| self.values[i])
    }

    /// CSV export: `theta,estimate,rho,fit_r2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,estimate,rho,fit_r2\n");
        for i in 0..self.thetas.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.thetas[i], self.values[i], self.diagnostics[i].rho, self.diagnostics[i].fit_r2
            ));
        }
        out
    }
}

/// Maps the point estimators over the grid; one shared sample pass feeds all
/// thetas, so the curve cost is one transform evaluation per shell sample.
pub fn fourier_curve(mu: &DiscreteMeasure, thetas: &[f64]) -> Result<FourierCurve> {
    fourier_curve_with(mu, thetas, &FourierOptions::default())
}

pub fn fourier_curve_with(
    mu: &DiscreteMeasure,
    thetas: &[f64],
    opts: &FourierOptions,
) -> Result<FourierCurve> {
    for &t in thetas {
        if !(t > 0.0 && t <= 1.0) {
            return Err(DimlabError::invalid("fourier curve thetas must lie in (0, 1]"));
        }
    }
    let cutoff = resolve_cutoff(mu, opts.z_max)?;
    let shells = sample_shells(mu, cutoff, opts.samples_per_shell, opts.seed);
    let radii: Vec<f64> = shells.iter().map(|s| s.radius).collect();

    let mut grid: Vec<f64> = thetas.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    if grid.last().map(|t| (t - 1.0).abs() > 1e-12).unwrap_or(true) {
        grid.push(1.0);
    }

    let mut out_thetas = vec![0.0];
    let sup_sq: Vec<f64> = shells.iter().map(|s| s.probe_max * s.probe_max).collect();
    let (kappa, r2_sup) = decay_exponent(&radii, &sup_sq)?;
    let mut out_values = vec![kappa.max(0.0)];
    let mut out_diag = vec![FourierDiagnostics {
        rho: kappa,
        fit_r2: r2_sup,
    }];
    for &theta in &grid {
        let exponent = 2.0 / theta;
        let means: Vec<f64> = shells
            .iter()
            .map(|s| s.moduli.iter().map(|m| m.powf(exponent)).sum::<f64>() / s.moduli.len() as f64)
            .collect();
        let (beta, r2) = decay_exponent(&radii, &means)?;
        out_thetas.push(theta);
        out_values.push((theta * beta).max(0.0));
        out_diag.push(FourierDiagnostics {
            rho: beta,
            fit_r2: r2,
        });
    }
    Ok(FourierCurve {
        thetas: out_thetas,
        values: out_values,
        diagnostics: out_diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate, pow2, GeneratorSpec, PointCloud};
    use approx::assert_relative_eq;

    fn lebesgue_proxy(level: i32) -> DiscreteMeasure {
        let cloud = generate(&GeneratorSpec::Segment { delta: pow2(level) }).unwrap();
        DiscreteMeasure::uniform(cloud)
    }

    fn point_mass() -> DiscreteMeasure {
        DiscreteMeasure::uniform(PointCloud::new(vec![vec![0.25, 0.5]], pow2(-10), "pm").unwrap())
    }

    #[test]
    fn transform_at_zero_is_one_and_bounded() {
        let mu = lebesgue_proxy(-8);
        assert_relative_eq!(ft_measure(&mu, &[0.0]).norm(), 1.0, epsilon = 1e-12);
        for z in [0.7, 3.0, 55.5] {
            assert!(ft_measure(&mu, &[z]).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn point_mass_transform_is_unimodular() {
        let mu = point_mass();
        for z in [[1.0, 0.0], [3.5, 2.0], [10.0, -4.0]] {
            assert_relative_eq!(ft_measure(&mu, &z).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_point_cancellation() {
        let cloud = PointCloud::new(vec![vec![0.0], vec![0.5]], 1e-6, "two").unwrap();
        let mu = DiscreteMeasure::uniform(cloud);
        // (1 + e^{-pi i})/2 = 0
        assert!(ft_measure(&mu, &[1.0]).norm() < 1e-12);
    }

    #[test]
    fn fine_grid_transform_approaches_sinc() {
        let mu = lebesgue_proxy(-12);
        for z in [4.0f64, 16.0, 64.0] {
            let got = ft_measure(&mu, &[z]).norm();
            // |sinc| at integer z is 0; spot-check near-integers instead
            let zz = z + 0.5;
            let expect = ((std::f64::consts::PI * zz).sin() / (std::f64::consts::PI * zz)).abs();
            let got_half = ft_measure(&mu, &[zz]).norm();
            assert!((got_half - expect).abs() < 1e-3, "z={zz}: {got_half} vs {expect}");
            assert!(got < 1e-2);
        }
    }

    #[test]
    fn delta_measure_shell_values_equal_volume_factor() {
        let mu = point_mass();
        let curve = shell_energies(&mu, 1.0, 16.0, 64, 1).unwrap();
        for (r, v) in curve.radii.iter().zip(&curve.values) {
            assert_relative_eq!(*v, r * r, max_relative = 1e-9);
        }
    }

    #[test]
    fn shell_energies_reproducible_per_seed() {
        let cloud = generate(&GeneratorSpec::GridSquare { delta: pow2(-6) }).unwrap();
        let mu = DiscreteMeasure::uniform(cloud);
        let a = shell_energies(&mu, 0.5, 8.0, 32, 99).unwrap();
        let b = shell_energies(&mu, 0.5, 8.0, 32, 99).unwrap();
        assert_eq!(a.values, b.values);
        let c = shell_energies(&mu, 0.5, 8.0, 32, 100).unwrap();
        assert!(a.values != c.values);
    }

    #[test]
    fn cutoff_past_resolution_rejected() {
        let mu = lebesgue_proxy(-6);
        assert!(matches!(
            shell_energies(&mu, 1.0, 1000.0, 16, 0),
            Err(DimlabError::CutoffExceedsResolution { .. })
        ));
    }

    #[test]
    fn lebesgue_sobolev_estimate_is_two() {
        let mu = lebesgue_proxy(-12);
        let v = fourier_spectrum_point(&mu, 1.0).unwrap();
        assert!((v - 2.0).abs() < 0.15, "sobolev estimate {v}");
    }

    #[test]
    fn lebesgue_decay_matches_sinc_on_shells() {
        let mu = lebesgue_proxy(-12);
        let curve = shell_energies(&mu, 1.0, 1024.0, 512, 3).unwrap();
        // mean of sinc^2 over [R, 2R] ~ 1/(4 pi^2 R^2); with the volume factor,
        // S ~ R^-1
        for (r, v) in curve.radii.iter().zip(&curve.values).skip(4) {
            let expect = 1.0 / (4.0 * std::f64::consts::PI.powi(2) * r);
            assert!(
                (v / expect).ln().abs() < 0.7,
                "R={r}: shell value {v} vs sinc model {expect}"
            );
        }
    }

    #[test]
    fn point_mass_spectrum_is_zero_everywhere() {
        let mu = point_mass();
        assert_eq!(fourier_dimension_point(&mu).unwrap(), 0.0);
        for theta in [0.2, 0.6, 1.0] {
            let v = fourier_spectrum_point(&mu, theta).unwrap();
            assert!(v.abs() < 0.05, "theta {theta}: {v}");
        }
    }

    #[test]
    fn vertical_segment_fourier_dimension_is_zero() {
        let seg = generate(&GeneratorSpec::Segment { delta: pow2(-9) }).unwrap();
        let pts: Vec<Vec<f64>> = seg.points().map(|p| vec![0.0, p[0]]).collect();
        let cloud = PointCloud::new(pts, pow2(-9), "vseg").unwrap();
        let mu = DiscreteMeasure::uniform(cloud);
        let v = fourier_dimension_point(&mu).unwrap();
        assert!(v < 0.1, "no decay along the orthogonal axis, got {v}");
    }

    #[test]
    fn curve_includes_endpoints_and_point_mass_is_flat() {
        let mu = point_mass();
        let curve = fourier_curve(&mu, &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(curve.thetas[0], 0.0);
        assert_eq!(*curve.thetas.last().unwrap(), 1.0);
        for v in &curve.values {
            assert!(v.abs() < 0.05);
        }
    }

    #[test]
    fn curve_is_monotone_within_slack() {
        let mu = lebesgue_proxy(-10);
        let curve = fourier_curve(&mu, &[0.25, 0.5, 0.75]).unwrap();
        for w in curve.values.windows(2) {
            assert!(w[1] >= w[0] - 0.1, "curve {:?}", curve.values);
        }
    }
}
