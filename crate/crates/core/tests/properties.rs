//! Property tests over randomly generated inputs.

mod common;

use std::f64::consts::PI;

use hhl_core::analysis::{aggregate, enhanced_bound, BoundInputs, Sample};
use hhl_core::inversion::{
    alpha_overlap, enhanced_contributions, inversion_amplitude, plan_canonical, plan_enhanced, plan_hybrid,
    AlphaModel, AnglePolicy, EnhancedOptions,
};
use hhl_core::pipeline::{error_from_fidelity, run, RunConfig, Variant};
use hhl_core::preprocess::{decode_grid, encode_grid, extract_estimates, EigenEstimate, EigenEstimateSet};
use hhl_core::qlsp::generate_n2;
use hhl_core::sim::{bitstring, Histogram};
use proptest::prelude::*;

fn histogram(counts: &[u64], bits: usize) -> Histogram {
    let mut h = Histogram::default();
    for (g, &c) in counts.iter().enumerate() {
        if c > 0 {
            h.counts.insert(bitstring(g, bits), c);
            h.shots += c;
        }
    }
    h
}

fn estimate_set(bits: usize, t0: f64, signed: bool, raw: &[(u64, f64)]) -> EigenEstimateSet {
    let mut entries: Vec<EigenEstimate> = raw
        .iter()
        .map(|&(g, w)| EigenEstimate {
            grid_int: g,
            lambda_tilde: 2.0 * PI * decode_grid(g, bits, signed) as f64 / t0,
            weight: w,
        })
        .collect();
    entries.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    EigenEstimateSet {
        bit_width: bits,
        time_scale: t0,
        signed_mode: signed,
        entries,
    }
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Canonical), Just(Variant::Hybrid), Just(Variant::Enhanced)]
}

proptest! {
    #[test]
    fn grid_encoding_round_trips(bits in 2usize..8, raw in 0u64..256, signed in any::<bool>()) {
        let g = raw % (1 << bits);
        let v = decode_grid(g, bits, signed);
        prop_assert_eq!(encode_grid(v, bits, signed), Some(g));
    }

    #[test]
    fn extraction_is_deterministic_and_bounded(
        counts in prop::collection::vec(0u64..500, 8),
        threshold in 0.05f64..0.9,
        signed in any::<bool>(),
    ) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let h = histogram(&counts, 3);
        let a = extract_estimates(&h, 3, 6.0 * PI, threshold, signed);
        let b = extract_estimates(&h, 3, 6.0 * PI, threshold, signed);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        if let Ok(set) = a {
            prop_assert!(!set.entries.is_empty());
            for w in set.entries.windows(2) {
                prop_assert!(w[0].weight >= w[1].weight);
            }
            let total: f64 = set.entries.iter().map(|e| e.weight * e.weight).sum();
            prop_assert!(total <= 1.0 + 1e-12);
            prop_assert!(set.entries.iter().all(|e| e.weight >= threshold && e.weight <= 1.0));
        }
    }

    #[test]
    fn amplitude_stays_in_unit_interval(lambda in -2.0f64..2.0, c in 0.01f64..1.0) {
        let h = inversion_amplitude(lambda, c);
        prop_assert!((-1.0..=1.0).contains(&h));
    }

    #[test]
    fn alpha_in_unit_interval(delta in 0.0f64..(4.0 * PI), k in 1u32..6) {
        for model in [AlphaModel::Linear, AlphaModel::Exact] {
            let a = alpha_overlap(delta, model, 1 << k);
            prop_assert!((0.0..=1.0).contains(&a), "{model:?} alpha({delta}) = {a}");
        }
    }

    #[test]
    fn linear_alpha_decreasing(d1 in 0.0f64..(2.0 * PI), d2 in 0.0f64..(2.0 * PI)) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(alpha_overlap(lo, AlphaModel::Linear, 8) >= alpha_overlap(hi, AlphaModel::Linear, 8));
    }

    #[test]
    fn canonical_angles_shrink_with_magnitude(k in 2usize..6, t0 in 1.0f64..60.0, signed in any::<bool>()) {
        let plan = plan_canonical(k, None, t0, signed).unwrap();
        plan.validate().unwrap();
        let mut by_mag: Vec<(i64, f64)> = plan
            .rotations
            .iter()
            .map(|&(p, th)| (decode_grid(p, k, signed).abs(), th.abs()))
            .collect();
        by_mag.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
        for w in by_mag.windows(2) {
            if w[0].0 < w[1].0 {
                prop_assert!(w[0].1 >= w[1].1 - 1e-12);
            }
        }
    }

    #[test]
    fn enhanced_plans_are_valid_and_local(
        raw in prop::collection::btree_map(1u64..32, 0.05f64..1.0, 1..6),
        signed in any::<bool>(),
        policy in prop_oneof![Just(AnglePolicy::WeightedAverage), Just(AnglePolicy::LeastSquares)],
        model in prop_oneof![Just(AlphaModel::Linear), Just(AlphaModel::Exact)],
    ) {
        let (k, l, t0_k) = (3usize, 5usize, 6.0 * PI);
        let raw: Vec<(u64, f64)> = raw.into_iter().collect();
        let set = estimate_set(l, t0_k * 4.0, signed, &raw);
        let opts = EnhancedOptions { filter_threshold: Some(0.0), angle_policy: policy, alpha_model: model };
        let contributions = enhanced_contributions(&set, k, t0_k, &opts).unwrap();
        prop_assert!(contributions.len() <= 2 * set.entries.len());
        if let Ok(plan) = plan_enhanced(&set, k, t0_k, &opts) {
            plan.validate().unwrap();
            prop_assert!(plan.len() <= 2 * set.entries.len());
            prop_assert!(plan.rotations.iter().all(|&(p, th)| p != 0 && th.abs() <= PI));
        }
    }

    #[test]
    fn enhanced_equals_hybrid_on_the_grid(
        raw in prop::collection::btree_map(1u64..8, 0.1f64..1.0, 1..4),
    ) {
        // l-bit estimates that sit on multiples of 4 lie exactly on the k-bit grid
        let (k, l, t0_k) = (3usize, 5usize, 6.0 * PI);
        let signed = true;
        let on_grid: Vec<(u64, f64)> = raw
            .iter()
            .filter_map(|(&g, &w)| {
                let v = decode_grid(g, k, signed);
                (v != -4).then(|| (encode_grid(4 * v, l, signed).unwrap(), w))
            })
            .collect();
        prop_assume!(!on_grid.is_empty());
        let fine = estimate_set(l, t0_k * 4.0, signed, &on_grid);
        let coarse = estimate_set(k, t0_k, signed, &raw.iter().map(|(&g, &w)| (g, w)).filter(|&(g, _)| g != 4).collect::<Vec<_>>());
        let opts = EnhancedOptions { filter_threshold: Some(0.0), ..EnhancedOptions::default() };
        let enhanced = plan_enhanced(&fine, k, t0_k, &opts).unwrap();
        let hybrid = plan_hybrid(&coarse).unwrap();
        let sorted = |mut v: Vec<u64>| { v.sort_unstable(); v };
        prop_assert_eq!(sorted(enhanced.patterns()), sorted(hybrid.patterns()));
        for p in hybrid.patterns() {
            prop_assert!((enhanced.angle(p).unwrap() - hybrid.angle(p).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn enhanced_bound_tightens_with_l(kappa in 1.0f64..100.0, t0 in 1.0f64..100.0, k in 1usize..6, extra in 0usize..6) {
        let lo = enhanced_bound(&BoundInputs::new(kappa, t0, k, k + extra).unwrap());
        let hi = enhanced_bound(&BoundInputs::new(kappa, t0, k, k + extra + 1).unwrap());
        prop_assert!(hi < lo);
    }

    #[test]
    fn aggregate_ignores_order(
        mut samples in prop::collection::vec((variant(), 0.0f64..1.4, 0usize..200, 0usize..8), 1..20),
        seed in any::<u64>(),
    ) {
        let to_samples = |xs: &[(Variant, f64, usize, usize)]| -> Vec<Sample> {
            xs.iter()
                .map(|&(variant, error, gate_count, rotations)| Sample {
                    variant,
                    error,
                    fidelity: 1.0 - error * error / 2.0,
                    gate_count,
                    rotations,
                })
                .collect()
        };
        let a = aggregate(&to_samples(&samples)).unwrap();
        let n = samples.len();
        samples.rotate_left((seed as usize) % n);
        samples.reverse();
        let b = aggregate(&to_samples(&samples)).unwrap();
        prop_assert_eq!(a.count, b.count);
        prop_assert_eq!(a.orderings, b.orderings);
        prop_assert!((a.mean_error - b.mean_error).abs() < 1e-12);
        for (v, s) in &a.per_variant {
            prop_assert!((s.mean_error - b.per_variant[v].mean_error).abs() < 1e-12);
            prop_assert_eq!(s.count, b.per_variant[v].count);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn run_results_are_consistent(lambda in 0.02f64..0.48, v in variant()) {
        let r = run(&generate_n2(lambda).unwrap(), &RunConfig::new(v)).unwrap();
        prop_assert!((r.error - error_from_fidelity(r.fidelity)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.success_probability));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r.fidelity));
        r.plan_used.validate().unwrap();
    }
}
