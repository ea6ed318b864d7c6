//! Closed-form reference curves for the canonical examples, the chain of
//! dimension inequalities as executable checks, and the exceptional-set
//! bound formulas.
//!
//! Bounds are pure formula evaluators kept separate from the estimators, so
//! each side of every inequality has exactly one implementation.

use serde::Serialize;

use crate::curve::SpectrumCurve;
use crate::error::{DimlabError, Result};
use crate::fourier::FourierCurve;

/// Canonical example identifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceExample {
    /// {1/n : n >= 1} x [0,1] in the plane.
    SeqTimesSegment,
    /// Sequence set {n^-p}.
    FP { p: f64 },
    /// Product F_p x F_p.
    FPProduct { p: f64 },
    Segment,
    Square,
}

impl ReferenceExample {
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        if id == "seq_times_segment" {
            return Ok(ReferenceExample::SeqTimesSegment);
        }
        if id == "segment" {
            return Ok(ReferenceExample::Segment);
        }
        if id == "square" {
            return Ok(ReferenceExample::Square);
        }
        for (prefix, product) in [("f_p_product", true), ("f_p", false)] {
            if let Some(rest) = id.strip_prefix(prefix) {
                let p: f64 = rest
                    .trim_matches(|c| c == ':' || c == '(' || c == ')' || c == '=')
                    .parse()
                    .map_err(|_| DimlabError::UnknownExample(id.to_string()))?;
                if !(p > 0.0) {
                    return Err(DimlabError::UnknownExample(id.to_string()));
                }
                return Ok(if product {
                    ReferenceExample::FPProduct { p }
                } else {
                    ReferenceExample::FP { p }
                });
            }
        }
        Err(DimlabError::UnknownExample(id.to_string()))
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ReferenceExample::SeqTimesSegment
            | ReferenceExample::FPProduct { .. }
            | ReferenceExample::Square => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Assouad,
    Intermediate,
    FourierSet,
}

/// Exact reference box dimensions of the canonical examples.
pub fn reference_box_dimension(example: ReferenceExample) -> f64 {
    match example {
        ReferenceExample::SeqTimesSegment => 1.5,
        ReferenceExample::FP { p } => 1.0 / (1.0 + p),
        ReferenceExample::FPProduct { p } => 2.0 / (1.0 + p),
        ReferenceExample::Segment => 1.0,
        ReferenceExample::Square => 2.0,
    }
}

/// Closed-form spectrum value of a canonical example at theta in (0, 1].
///
/// Supported combinations:
/// - seq_times_segment: Assouad min{(3/2 - theta)/(1 - theta), 2},
///   intermediate (1 + 2 theta)/(1 + theta), Fourier (set level) theta;
/// - segment and square: the constants 1 and 2 for every kind;
/// - f_p: intermediate theta/(theta + p), whose theta = 1 endpoint is the box
///   dimension 1/(1 + p).
pub fn reference_spectrum(
    example: ReferenceExample,
    kind: SpectrumKind,
    theta: f64,
) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DimlabError::invalid("reference spectra need theta in (0, 1]"));
    }
    match (example, kind) {
        (ReferenceExample::Segment, _) => Ok(1.0),
        (ReferenceExample::Square, _) => Ok(2.0),
        (ReferenceExample::SeqTimesSegment, SpectrumKind::Assouad) => {
            if theta >= 1.0 {
                Ok(2.0)
            } else {
                Ok(((1.5 - theta) / (1.0 - theta)).min(2.0))
            }
        }
        (ReferenceExample::SeqTimesSegment, SpectrumKind::Intermediate) => {
            Ok((1.0 + 2.0 * theta) / (1.0 + theta))
        }
        (ReferenceExample::SeqTimesSegment, SpectrumKind::FourierSet) => Ok(theta),
        (ReferenceExample::FP { p }, SpectrumKind::Intermediate) => Ok(theta / (theta + p)),
        (ex, k) => Err(DimlabError::UnsupportedReference(format!(
            "{ex:?} with {k:?}"
        ))),
    }
}

/// One inequality verdict.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub bound_id: String,
    pub inputs: serde_json::Value,
    pub bound: f64,
    pub measured: Option<f64>,
    pub slack: f64,
    pub pass: bool,
}

impl BoundReport {
    /// JSON-lines export.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("bound report serializes")
    }
}

/// Estimates for one cloud, feeding the chain check.
#[derive(Debug, Clone, Serialize)]
pub struct ChainEstimates {
    pub ambient_dim: f64,
    pub hausdorff_proxy: f64,
    pub box_lower: f64,
    pub box_upper: f64,
    pub assouad: f64,
    pub fourier: f64,
}

/// Verifies the dimension ordering chain
/// 0 <= fourier <= hausdorff <= lower box <= upper box <= assouad <= d
/// with the given slack on every link.
pub fn chain_check(est: &ChainEstimates, slack: f64) -> BoundReport {
    let links: Vec<(&str, f64, f64)> = vec![
        ("0 <= fourier", 0.0, est.fourier),
        ("fourier <= hausdorff", est.fourier, est.hausdorff_proxy),
        ("hausdorff <= box_lower", est.hausdorff_proxy, est.box_lower),
        ("box_lower <= box_upper", est.box_lower, est.box_upper),
        ("box_upper <= assouad", est.box_upper, est.assouad),
        ("assouad <= d", est.assouad, est.ambient_dim),
    ];
    let mut failed: Vec<&str> = Vec::new();
    for (name, lo, hi) in &links {
        if *lo > *hi + slack {
            failed.push(name);
        }
    }
    BoundReport {
        bound_id: "chain".into(),
        inputs: serde_json::json!({
            "estimates": est,
            "violations": failed,
        }),
        bound: est.ambient_dim,
        measured: Some(est.assouad),
        slack,
        pass: failed.is_empty(),
    }
}

/// Exceptional-set dimension bounds for projections below threshold u.
///
/// Always evaluates the general bound k(d-k) + u - dim_H; in the plane with
/// k = 1 and dim_H/2 <= u <= min(dim_H, 1) it adds the sharp planar bound
/// 2u - dim_H; when a Fourier-spectrum curve is supplied it adds
/// k(d-k) + inf over the curve grid of (u - value(theta))/theta. All bounds
/// are clamped below at 0.
pub fn exceptional_bounds(
    u: f64,
    dim_h: f64,
    d: usize,
    k: usize,
    fourier_curve: Option<&FourierCurve>,
) -> Result<Vec<BoundReport>> {
    if k < 1 || k >= d {
        return Err(DimlabError::invalid("exceptional bounds need 1 <= k < d"));
    }
    if !(0.0 <= u && u <= k as f64) {
        return Err(DimlabError::invalid("threshold u must lie in [0, k]"));
    }
    let kd = (k * (d - k)) as f64;
    let mut out = Vec::new();

    let general = (kd + u - dim_h).max(0.0);
    out.push(BoundReport {
        bound_id: "projection_general".into(),
        inputs: serde_json::json!({"u": u, "dim_h": dim_h, "d": d, "k": k}),
        bound: general,
        measured: None,
        slack: 0.0,
        pass: true,
    });

    if d == 2 && k == 1 && dim_h / 2.0 <= u && u <= dim_h.min(1.0) {
        let planar = (2.0 * u - dim_h).max(0.0);
        out.push(BoundReport {
            bound_id: "projection_planar_sharp".into(),
            inputs: serde_json::json!({"u": u, "dim_h": dim_h}),
            bound: planar,
            measured: None,
            slack: 0.0,
            pass: true,
        });
    }

    if let Some(curve) = fourier_curve {
        let mut inf = f64::INFINITY;
        let mut witness = f64::NAN;
        for (t, v) in curve.thetas.iter().zip(&curve.values) {
            if *t > 0.0 {
                let val = (u - v) / t;
                if val < inf {
                    inf = val;
                    witness = *t;
                }
            }
        }
        if inf.is_finite() {
            let fourier_bound = (kd + inf).max(0.0);
            out.push(BoundReport {
                bound_id: "projection_fourier_spectrum".into(),
                inputs: serde_json::json!({
                    "u": u, "d": d, "k": k, "witness_theta": witness,
                }),
                bound: fourier_bound,
                measured: None,
                slack: 0.0,
                pass: true,
            });
        }
    }
    Ok(out)
}

/// Smallest applicable exceptional bound.
pub fn min_applicable_bound(reports: &[BoundReport]) -> f64 {
    reports
        .iter()
        .map(|r| r.bound)
        .fold(f64::INFINITY, f64::min)
}

/// Continuity criterion for the exceptional-set dimension at the Fourier
/// dimension: estimates the right derivative of the Fourier spectrum at 0
/// from the smallest positive grid theta and compares with k(d-k).
pub fn continuity_criterion(curve: &FourierCurve, d: usize, k: usize) -> Result<BoundReport> {
    if k < 1 || k >= d {
        return Err(DimlabError::invalid("continuity criterion needs 1 <= k < d"));
    }
    let v0 = curve
        .value_at(0.0)
        .ok_or_else(|| DimlabError::invalid("curve must include theta = 0"))?;
    let (t_min, v_min) = curve
        .thetas
        .iter()
        .zip(&curve.values)
        .find(|(t, _)| **t > 0.0)
        .map(|(t, v)| (*t, *v))
        .ok_or_else(|| DimlabError::invalid("curve must include a positive theta"))?;
    if t_min > 0.1 + 1e-12 {
        return Err(DimlabError::InsufficientScales {
            needed: 1,
            available: 0,
        });
    }
    let derivative = (v_min - v0) / t_min;
    let threshold = (k * (d - k)) as f64;
    Ok(BoundReport {
        bound_id: "continuity_at_fourier_dimension".into(),
        inputs: serde_json::json!({"theta_min": t_min, "d": d, "k": k}),
        bound: threshold,
        measured: Some(derivative),
        slack: 0.0,
        pass: derivative >= threshold,
    })
}

/// Lower bound on the box dimension profile from the regularised Assouad
/// spectrum and Assouad dimension, optimised over the curve's theta grid.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileLowerBound {
    pub best_bound: f64,
    pub witness_theta: f64,
    /// quasi-Assouad corollary bound: box - max{0, qA - s}
    pub corollary_bound: f64,
}

pub fn boxapp_lower_bound(
    box_upper: f64,
    spectrum: &SpectrumCurve,
    assouad_dim: f64,
    s: f64,
    d_hint: f64,
) -> Result<ProfileLowerBound> {
    let upper = crate::assouad::upper_assouad_spectrum(spectrum);
    let mut best = f64::NEG_INFINITY;
    let mut witness = f64::NAN;
    for (t, v) in upper.thetas.iter().zip(&upper.values) {
        let penalty = (v - s).max((assouad_dim - s) * (1.0 - t)).max(0.0);
        let bound = box_upper - penalty;
        if bound > best {
            best = bound;
            witness = *t;
        }
    }
    if !best.is_finite() {
        return Err(DimlabError::invalid("empty spectrum curve"));
    }
    let quasi = crate::assouad::quasi_assouad(spectrum, d_hint).unwrap_or(upper.max_value());
    let corollary = box_upper - (quasi - s).max(0.0);
    Ok(ProfileLowerBound {
        best_bound: best.max(corollary),
        witness_theta: witness,
        corollary_bound: corollary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ThetaDiagnostics;
    use approx::assert_relative_eq;

    #[test]
    fn seq_times_segment_reference_values() {
        let ex = ReferenceExample::SeqTimesSegment;
        assert_relative_eq!(
            reference_spectrum(ex, SpectrumKind::Intermediate, 0.5).unwrap(),
            4.0 / 3.0
        );
        assert_relative_eq!(reference_spectrum(ex, SpectrumKind::Assouad, 0.5).unwrap(), 2.0);
        assert_relative_eq!(
            reference_spectrum(ex, SpectrumKind::Assouad, 0.25).unwrap(),
            5.0 / 3.0
        );
        assert_relative_eq!(
            reference_spectrum(ex, SpectrumKind::FourierSet, 0.3).unwrap(),
            0.3
        );
    }

    #[test]
    fn endpoints_match_the_known_dimensions() {
        let ex = ReferenceExample::SeqTimesSegment;
        // intermediate at theta -> 1 tends to the box dimension 3/2
        assert_relative_eq!(
            reference_spectrum(ex, SpectrumKind::Intermediate, 1.0).unwrap(),
            1.5
        );
        // assouad at theta -> 0 tends to the box dimension 3/2
        let small = reference_spectrum(ex, SpectrumKind::Assouad, 1e-9).unwrap();
        assert!((small - 1.5).abs() < 1e-6);
        // fourier at theta -> 1 tends to the Hausdorff dimension 1
        assert_relative_eq!(
            reference_spectrum(ex, SpectrumKind::FourierSet, 1.0).unwrap(),
            1.0
        );
        // f_p intermediate endpoint equals the box dimension
        assert_relative_eq!(
            reference_spectrum(ReferenceExample::FP { p: 1.0 }, SpectrumKind::Intermediate, 1.0)
                .unwrap(),
            0.5
        );
    }

    #[test]
    fn segment_is_constant_for_every_kind() {
        for kind in [SpectrumKind::Assouad, SpectrumKind::Intermediate, SpectrumKind::FourierSet] {
            assert_eq!(
                reference_spectrum(ReferenceExample::Segment, kind, 0.4).unwrap(),
                1.0
            );
        }
    }

    #[test]
    fn unsupported_combination_is_an_error() {
        assert!(matches!(
            reference_spectrum(
                ReferenceExample::FPProduct { p: 0.5 },
                SpectrumKind::FourierSet,
                0.5
            ),
            Err(DimlabError::UnsupportedReference(_))
        ));
    }

    #[test]
    fn example_parse_round_trip() {
        assert_eq!(
            ReferenceExample::parse("seq_times_segment").unwrap(),
            ReferenceExample::SeqTimesSegment
        );
        assert_eq!(
            ReferenceExample::parse("f_p:0.5").unwrap(),
            ReferenceExample::FP { p: 0.5 }
        );
        assert_eq!(
            ReferenceExample::parse("f_p_product:1").unwrap(),
            ReferenceExample::FPProduct { p: 1.0 }
        );
        assert!(ReferenceExample::parse("carpet").is_err());
    }

    #[test]
    fn chain_check_passes_on_reference_values() {
        // the product example's known chain: 0 <= 1 <= 1.5 <= 1.5 <= 2 <= 2
        let est = ChainEstimates {
            ambient_dim: 2.0,
            hausdorff_proxy: 1.0,
            box_lower: 1.5,
            box_upper: 1.5,
            assouad: 2.0,
            fourier: 0.0,
        };
        assert!(chain_check(&est, 0.1).pass);

        let square = ChainEstimates {
            ambient_dim: 2.0,
            hausdorff_proxy: 2.0,
            box_lower: 2.0,
            box_upper: 2.0,
            assouad: 2.0,
            fourier: 0.0,
        };
        assert!(chain_check(&square, 0.1).pass);
    }

    #[test]
    fn chain_check_reports_violations() {
        let bad = ChainEstimates {
            ambient_dim: 2.0,
            hausdorff_proxy: 0.2,
            box_lower: 1.0,
            box_upper: 0.9,
            assouad: 0.5,
            fourier: 0.9,
        };
        let report = chain_check(&bad, 0.05);
        assert!(!report.pass);
    }

    #[test]
    fn exceptional_bound_hand_values() {
        let reports = exceptional_bounds(0.7, 1.2, 2, 1, None).unwrap();
        assert_relative_eq!(reports[0].bound, 0.5, epsilon = 1e-12); // 1 + 0.7 - 1.2
        assert_relative_eq!(reports[1].bound, 0.2, epsilon = 1e-12); // 2*0.7 - 1.2
    }

    #[test]
    fn fourier_exceptional_bound_on_linear_curve() {
        use crate::fourier::FourierDiagnostics;
        let thetas: Vec<f64> = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let values: Vec<f64> = thetas.clone();
        let diag = thetas
            .iter()
            .map(|_| FourierDiagnostics { rho: 0.0, fit_r2: 1.0 })
            .collect();
        let curve = FourierCurve {
            thetas,
            values,
            diagnostics: diag,
        };
        let reports = exceptional_bounds(0.5, 1.0, 2, 1, Some(&curve)).unwrap();
        let fb = reports
            .iter()
            .find(|r| r.bound_id == "projection_fourier_spectrum")
            .unwrap();
        // inf over grid of (0.5 - theta)/theta is attained at theta = 1
        assert_relative_eq!(fb.bound, 1.0 + (0.5 - 1.0), epsilon = 1e-12);
    }

    #[test]
    fn continuity_criterion_linear_vs_constant() {
        use crate::fourier::FourierDiagnostics;
        let make = |values: Vec<f64>| {
            let thetas = vec![0.0, 0.05, 0.5, 1.0];
            let diag = thetas
                .iter()
                .map(|_| FourierDiagnostics { rho: 0.0, fit_r2: 1.0 })
                .collect();
            FourierCurve {
                thetas,
                values,
                diagnostics: diag,
            }
        };
        let linear = make(vec![0.0, 0.05, 0.5, 1.0]);
        let report = continuity_criterion(&linear, 2, 1).unwrap();
        assert!(report.pass, "slope 1 >= k(d-k) = 1");
        let constant = make(vec![0.3, 0.3, 0.3, 0.3]);
        let report = continuity_criterion(&constant, 2, 1).unwrap();
        assert!(!report.pass, "derivative 0 fails");
    }

    #[test]
    fn boxapp_bound_for_the_product_example() {
        // evaluate the closed-form spectrum on a fine grid and optimize
        let thetas: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
        let values: Vec<f64> = thetas
            .iter()
            .map(|t| {
                reference_spectrum(ReferenceExample::SeqTimesSegment, SpectrumKind::Assouad, *t)
                    .unwrap()
            })
            .collect();
        let diag = thetas
            .iter()
            .map(|_| ThetaDiagnostics {
                fit_r2: 1.0,
                n_anchors: 1,
                adjustment: 0.0,
            })
            .collect();
        let curve = SpectrumCurve::new(thetas, values, diag).unwrap();
        let out = boxapp_lower_bound(1.5, &curve, 2.0, 1.0, 2.0).unwrap();
        let expect = 1.5 - 1.0 / (2.0f64).sqrt();
        assert!(
            (out.best_bound - expect).abs() < 0.01,
            "bound {} vs {expect}",
            out.best_bound
        );
        assert!((1.0 - out.witness_theta - 1.0 / (2.0f64).sqrt()).abs() < 0.02);
    }

    #[test]
    fn segment_boxapp_bound_is_one() {
        let thetas: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
        let values: Vec<f64> = vec![1.0; thetas.len()];
        let diag = thetas
            .iter()
            .map(|_| ThetaDiagnostics {
                fit_r2: 1.0,
                n_anchors: 1,
                adjustment: 0.0,
            })
            .collect();
        let curve = SpectrumCurve::new(thetas, values, diag).unwrap();
        let out = boxapp_lower_bound(1.0, &curve, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(out.best_bound, 1.0, epsilon = 1e-12);
    }
}
