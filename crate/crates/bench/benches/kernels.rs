//! Microbenchmarks for the numeric kernels that dominate training and
//! evaluation time: convolution, LSTM, dense layers, normalization,
//! nearest-neighbour scoring, and ROC construction.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::Rng as _;

use szbench_core::baselines::{BaselineHyperparams, BaselineKind, BaselineModel};
use szbench_core::data::{normalize, Frame, Label, Normalization};
use szbench_core::eval::roc_auc;
use szbench_core::nn::{conv1d, conv1d_backward, dense, lstm_forward, LstmParams};
use szbench_core::rng::derived_rng;
use szbench_core::tensor::Tensor;

fn rand_vec(n: usize, tag: &str) -> Vec<f64> {
    let mut rng = derived_rng(17, tag, n as u64);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn rand_tensor(shape: &[usize], tag: &str) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_shape_vec(shape, rand_vec(n, tag)).unwrap()
}

fn bench_conv(c: &mut Criterion) {
    // A quarter-length frame through the widest first conv row.
    let input = rand_tensor(&[1250, 19], "conv-x");
    let kernels = rand_tensor(&[32, 10, 19], "conv-k");
    let bias = rand_tensor(&[32], "conv-b");

    c.bench_function("conv1d_forward_1250x19_k10f32", |b| {
        b.iter(|| conv1d(black_box(&input), &kernels, &bias, 1).unwrap())
    });

    let y = conv1d(&input, &kernels, &bias, 1).unwrap();
    c.bench_function("conv1d_backward_1250x19_k10f32", |b| {
        b.iter(|| {
            conv1d_backward(black_box(&input), &kernels, &bias, 1, &y, true).unwrap()
        })
    });
}

fn bench_lstm(c: &mut Criterion) {
    let params = LstmParams::zeros(30, 19);
    let w_input = rand_tensor(params.w_input.shape(), "lstm-wx");
    let w_recurrent = rand_tensor(params.w_recurrent.shape(), "lstm-wh");
    let bias = rand_tensor(params.bias.shape(), "lstm-b");
    let input = rand_tensor(&[500, 19], "lstm-x");

    c.bench_function("lstm_forward_500x19_u30", |b| {
        b.iter(|| lstm_forward(black_box(&input), &w_input, &w_recurrent, &bias, false).unwrap())
    });
}

fn bench_dense(c: &mut Criterion) {
    let input = rand_tensor(&[16, 1580], "dense-x");
    let weights = rand_tensor(&[128, 1580], "dense-w");
    let bias = rand_tensor(&[128], "dense-b");

    c.bench_function("dense_16x1580_to_128", |b| {
        b.iter(|| dense(black_box(&input), &weights, &bias).unwrap())
    });
}

fn bench_normalize(c: &mut Criterion) {
    let frame = Frame {
        subject_id: "bench".to_string(),
        label: Label::Sz,
        frame_index: 0,
        normalization: Normalization::Raw,
        data: rand_tensor(&[6250, 19], "norm-x"),
    };

    c.bench_function("normalize_zscore_l2_6250x19", |b| {
        b.iter(|| normalize(black_box(&frame), Normalization::ZscoreL2).unwrap())
    });
}

fn bench_knn(c: &mut Criterion) {
    let dim = 1000;
    let rows: Vec<Vec<f64>> = (0..100).map(|i| rand_vec(dim, &format!("knn-{i}"))).collect();
    let features: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let labels: Vec<Label> = (0..100)
        .map(|i| if i % 2 == 0 { Label::Sz } else { Label::Hc })
        .collect();
    let model = BaselineModel::fit(
        BaselineKind::Knn,
        &features,
        &labels,
        &BaselineHyperparams::default(),
        7,
    )
    .unwrap();
    let query = rand_vec(dim, "knn-query");

    c.bench_function("knn_score_100x1000", |b| {
        b.iter(|| model.score(black_box(&query)).unwrap())
    });
}

fn bench_roc(c: &mut Criterion) {
    let n = 5000;
    let scores = rand_vec(n, "roc-scores");
    let mut rng = derived_rng(17, "roc-labels", 0);
    let truth: Vec<Label> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { Label::Sz } else { Label::Hc })
        .collect();

    c.bench_function("roc_auc_5000", |b| {
        b.iter(|| roc_auc(black_box(&scores), &truth).unwrap())
    });
}

criterion_group!(
    benches,
    bench_conv,
    bench_lstm,
    bench_dense,
    bench_normalize,
    bench_knn,
    bench_roc
);
criterion_main!(benches);
