//! Analytic error bounds and batch statistics.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HhlError, Result};
use crate::pipeline::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub kappa: f64,
    pub t0: f64,
    pub k: usize,
    pub l: usize,
}

impl BoundInputs {
    pub fn new(kappa: f64, t0: f64, k: usize, l: usize) -> Result<Self> {
        if !(kappa >= 1.0) || !(t0 > 0.0) || l < k {
            return Err(HhlError::InvalidArgument(format!(
                "bound inputs need kappa >= 1, t0 > 0, l >= k (got {kappa}, {t0}, {k}, {l})"
            )));
        }
        Ok(Self { kappa, t0, k, l })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CanonicalBound {
    Original,
    Revised,
}

/// `√(1/(π² 2^{l-k}) + 16/45)`.
pub fn enhanced_prefactor(l_minus_k: usize) -> f64 {
    (1.0 / (PI * PI * 2f64.powi(l_minus_k as i32)) + 16.0 / 45.0).sqrt()
}

/// `√(1/(π² 2^{l-k}) + 16/45) · 2π² κ/t0`.
pub fn enhanced_bound(inputs: &BoundInputs) -> f64 {
    enhanced_prefactor(inputs.l - inputs.k) * 2.0 * PI * PI * inputs.kappa / inputs.t0
}

/// Original `2π² κ/t0`, or the revised `√(20/3)·(π/2)·π κ/t0` at the worst-case constant.
pub fn canonical_bound(inputs: &BoundInputs, variant: CanonicalBound) -> f64 {
    let prefactor = match variant {
        CanonicalBound::Original => 2.0 * PI * PI,
        CanonicalBound::Revised => (20.0f64 / 3.0).sqrt() * (PI / 2.0) * PI,
    };
    prefactor * inputs.kappa / inputs.t0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    pub count: usize,
    pub mean_error: f64,
    pub mean_fidelity: f64,
    pub mean_gate_count: f64,
    pub mean_rotations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub mean_error: f64,
    pub per_variant: BTreeMap<Variant, VariantStats>,
    /// `"a<b"` is true when variant `a` has the strictly smaller mean error.
    pub orderings: BTreeMap<String, bool>,
}

/// The fields of a run that enter the batch statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub variant: Variant,
    pub error: f64,
    pub fidelity: f64,
    pub gate_count: usize,
    pub rotations: usize,
}

impl From<&crate::pipeline::RunResult> for Sample {
    fn from(r: &crate::pipeline::RunResult) -> Self {
        Self {
            variant: r.variant,
            error: r.error,
            fidelity: r.fidelity,
            gate_count: r.gate_report.gate_count,
            rotations: r.plan_used.len(),
        }
    }
}

/// Means overall and per variant, plus pairwise mean-error orderings.
pub fn aggregate(samples: &[Sample]) -> Result<Aggregate> {
    if samples.is_empty() {
        return Err(HhlError::InvalidArgument("nothing to aggregate".into()));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let mut per_variant = BTreeMap::new();
    for v in Variant::ALL {
        let group: Vec<&Sample> = samples.iter().filter(|s| s.variant == v).collect();
        if group.is_empty() {
            continue;
        }
        let pick = |f: fn(&Sample) -> f64| mean(&group.iter().map(|s| f(s)).collect::<Vec<_>>());
        per_variant.insert(
            v,
            VariantStats {
                count: group.len(),
                mean_error: pick(|s| s.error),
                mean_fidelity: pick(|s| s.fidelity),
                mean_gate_count: pick(|s| s.gate_count as f64),
                mean_rotations: pick(|s| s.rotations as f64),
            },
        );
    }
    let mut orderings = BTreeMap::new();
    for (a, sa) in &per_variant {
        for (b, sb) in &per_variant {
            if a != b {
                orderings.insert(format!("{a}<{b}"), sa.mean_error < sb.mean_error);
            }
        }
    }
    Ok(Aggregate {
        count: samples.len(),
        mean_error: mean(&samples.iter().map(|s| s.error).collect::<Vec<_>>()),
        per_variant,
        orderings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefactors() {
        assert!((enhanced_prefactor(2) - 0.6172).abs() < 1e-4);
        assert!((enhanced_prefactor(0) - 0.6759).abs() < 1e-4);
    }

    #[test]
    fn original_bound_plug_in() {
        let i = BoundInputs::new(3.0, 3.0, 3, 3).unwrap();
        assert!((canonical_bound(&i, CanonicalBound::Original) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn bound_ordering() {
        let tight = BoundInputs::new(4.0, 10.0, 3, 5).unwrap();
        let loose = BoundInputs::new(4.0, 10.0, 3, 3).unwrap();
        let revised = canonical_bound(&tight, CanonicalBound::Revised);
        assert!(enhanced_bound(&tight) < revised && revised < enhanced_bound(&loose));
    }

    #[test]
    fn invalid_inputs() {
        assert!(BoundInputs::new(0.5, 1.0, 3, 5).is_err());
        assert!(BoundInputs::new(2.0, 1.0, 5, 3).is_err());
    }

    #[test]
    fn single_sample_mean() {
        let s = Sample {
            variant: Variant::Hybrid,
            error: 0.4,
            fidelity: 0.92,
            gate_count: 10,
            rotations: 2,
        };
        let agg = aggregate(&[s]).unwrap();
        assert_eq!(agg.mean_error, 0.4);
        assert_eq!(agg.per_variant[&Variant::Hybrid].mean_gate_count, 10.0);
        assert!(agg.orderings.is_empty());
        assert!(aggregate(&[]).is_err());
    }
}
