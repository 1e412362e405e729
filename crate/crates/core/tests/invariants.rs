//! Property tests for the algebraic invariants the pipeline depends on:
//! convolution linearity, normalization post-conditions, dropout eval
//! identity, ROC monotonicity, fold-split partitioning, and seed hygiene.

use proptest::prelude::*;

use szbench_core::data::{
    normalize, split_kfold, synthetic_frames, Frame, Normalization, SynthSpec,
};
use szbench_core::eval::roc_auc;
use szbench_core::graph::{Graph, Mode};
use szbench_core::nn::conv1d;
use szbench_core::rng::{derive_seed, derived_rng};
use szbench_core::tensor::Tensor;
use szbench_core::data::Label;

fn finite(range: std::ops::Range<f64>) -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL.prop_map(move |v| {
        let span = range.end - range.start;
        range.start + (v.abs() % 1.0) * span
    })
}

fn tensor2(t: usize, c: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(finite(-50.0..50.0), t * c)
        .prop_map(move |data| Tensor::from_shape_vec(&[t, c], data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conv1d_is_linear_in_its_input(
        t in 4usize..16,
        c in 1usize..4,
        f in 1usize..4,
        k in 1usize..4,
        stride in 1usize..3,
        a in finite(-3.0..3.0),
        b in finite(-3.0..3.0),
        seed in 0u64..1000,
    ) {
        prop_assume!(k <= t);
        let mut rng = derived_rng(seed, "prop-conv", 0);
        let mut rand_vec = |n: usize| -> Vec<f64> {
            use rand::Rng as _;
            (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
        };
        let x = Tensor::from_shape_vec(&[t, c], rand_vec(t * c)).unwrap();
        let y = Tensor::from_shape_vec(&[t, c], rand_vec(t * c)).unwrap();
        let kernels = Tensor::from_shape_vec(&[f, k, c], rand_vec(f * k * c)).unwrap();
        let zero_bias = Tensor::zeros(&[f]);

        let mut combo = x.clone().map(|v| a * v);
        combo.add_scaled(b, &y).unwrap();
        let lhs = conv1d(&combo, &kernels, &zero_bias, stride).unwrap();

        let cx = conv1d(&x, &kernels, &zero_bias, stride).unwrap();
        let cy = conv1d(&y, &kernels, &zero_bias, stride).unwrap();
        let mut rhs = cx.map(|v| a * v);
        rhs.add_scaled(b, &cy).unwrap();

        for (l, r) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs().max(r.abs())));
        }
    }

    #[test]
    fn zscore_leaves_zero_mean_unit_population_std(
        t in 4usize..40,
        c in 1usize..5,
        seed in 0u64..1000,
    ) {
        let mut rng = derived_rng(seed, "prop-norm", 0);
        use rand::Rng as _;
        // A linear ramp guarantees every channel has nonzero variance.
        let data: Vec<f64> = (0..t * c)
            .map(|i| rng.gen_range(-40.0..40.0) + (i / c) as f64)
            .collect();
        let frame = Frame {
            subject_id: "p".to_string(),
            label: Label::Sz,
            frame_index: 0,
            normalization: Normalization::Raw,
            data: Tensor::from_shape_vec(&[t, c], data).unwrap(),
        };

        let z = normalize(&frame, Normalization::Zscore).unwrap();
        prop_assert!(z.zero_variance_channels.is_empty());
        prop_assert_eq!(z.frame.normalization, Normalization::Zscore);
        let zd = z.frame.data.data();
        for ch in 0..c {
            let col: Vec<f64> = (0..t).map(|r| zd[r * c + ch]).collect();
            let mean = col.iter().sum::<f64>() / t as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64;
            prop_assert!(mean.abs() < 1e-9, "channel {} mean {}", ch, mean);
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-9, "channel {} std {}", ch, var.sqrt());
        }

        // The composed scheme ends with unit L2 norm per channel.
        let zl = normalize(&frame, Normalization::ZscoreL2).unwrap();
        let zld = zl.frame.data.data();
        for ch in 0..c {
            let norm = (0..t).map(|r| zld[r * c + ch].powi(2)).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9, "channel {} l2 {}", ch, norm);
        }

        // Normalized frames refuse a second pass.
        prop_assert!(normalize(&z.frame, Normalization::Zscore).is_err());
    }

    #[test]
    fn dropout_is_identity_in_eval_mode_and_at_rate_zero(
        rate in 0.0f64..0.95,
        seed in 0u64..1000,
        data in tensor2(6, 3),
    ) {
        let mut rng = derived_rng(seed, "prop-dropout", 0);
        let mut g = Graph::new(Mode::Eval);
        let x = g.input(data.clone());
        let out = g.dropout(x, rate, &mut rng).unwrap();
        prop_assert_eq!(g.value(out).data(), data.data());

        let mut rng = derived_rng(seed, "prop-dropout", 1);
        let mut g = Graph::new(Mode::Train);
        let x = g.input(data.clone());
        let out = g.dropout(x, 0.0, &mut rng).unwrap();
        prop_assert_eq!(g.value(out).data(), data.data());
    }

    #[test]
    fn roc_curves_are_monotone_with_bounded_auc(
        n in 2usize..60,
        seed in 0u64..1000,
    ) {
        let mut rng = derived_rng(seed, "prop-roc", 0);
        use rand::Rng as _;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let truth: Vec<Label> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { Label::Sz } else { Label::Hc })
            .collect();
        prop_assume!(truth.iter().any(|l| *l == Label::Sz));
        prop_assume!(truth.iter().any(|l| *l == Label::Hc));

        let (curve, auc) = roc_auc(&scores, &truth).unwrap();
        prop_assert!((0.0..=1.0).contains(&auc), "auc {}", auc);
        let pts = &curve.points;
        prop_assert_eq!((pts[0].fpr, pts[0].tpr), (0.0, 0.0));
        let last = pts.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in pts.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            prop_assert!(w[1].threshold < w[0].threshold, "thresholds strictly descend");
        }
    }

    #[test]
    fn kfold_split_partitions_and_stratifies(
        frames_per_class in 4usize..30,
        k in 2usize..6,
        seed in 0u64..1000,
    ) {
        prop_assume!(k <= frames_per_class);
        let set = synthetic_frames(&SynthSpec {
            frames_per_class,
            frame_samples: 8,
            channels: 2,
            frames_per_subject: 3,
            seed: 5,
            ..SynthSpec::default()
        })
        .unwrap();

        let split = split_kfold(&set, k, seed).unwrap();
        prop_assert_eq!(split.assignments.len(), set.len());
        prop_assert!(split.assignments.iter().all(|&f| f < k));

        // Stratified: within each class, fold sizes differ by at most one.
        for class in [Label::Sz, Label::Hc] {
            let mut per_fold = vec![0usize; k];
            for (frame, &fold) in set.frames.iter().zip(&split.assignments) {
                if frame.label == class {
                    per_fold[fold] += 1;
                }
            }
            let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {:?} fold sizes {:?}", class, per_fold);
        }

        // Same seed, same split.
        let again = split_kfold(&set, k, seed).unwrap();
        prop_assert_eq!(split.assignments, again.assignments);
    }

    #[test]
    fn derived_seeds_are_stable_and_separated(
        master in any::<u64>(),
        index in 0u64..10_000,
    ) {
        prop_assert_eq!(derive_seed(master, "fold", index), derive_seed(master, "fold", index));
        prop_assert_ne!(derive_seed(master, "fold", index), derive_seed(master, "init", index));
        prop_assert_ne!(
            derive_seed(master, "fold", index),
            derive_seed(master, "fold", index + 1)
        );
        prop_assert_ne!(
            derive_seed(master, "fold", index),
            derive_seed(master.wrapping_add(1), "fold", index)
        );
    }
}
