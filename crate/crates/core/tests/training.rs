use evifuse_core::datagen::{generate, GenConfig, PairedSample, Split};
use evifuse_core::loss::{reciprocal_loss, LabelOneHot};
use evifuse_core::model::*;
use evifuse_core::rng::Stream;
use proptest::prelude::*;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn perturbed(net: &Mlp, idx: usize, delta: f64) -> Mlp {
    let mut n = net.clone();
    let sizes = [n.w1.len(), n.b1.len(), n.w2.len(), n.b2.len()];
    let mut i = idx;
    for (part, size) in [&mut n.w1, &mut n.b1, &mut n.w2, &mut n.b2].into_iter().zip(sizes) {
        if i < size {
            part[i] += delta;
            break;
        }
        i -= size;
    }
    n
}

fn sample(stream: &mut Stream) -> PairedSample {
    PairedSample {
        x_a: (0..4).map(|_| stream.normal()).collect(),
        x_b: (0..4).map(|_| stream.normal()).collect(),
        label: 1,
        degraded_b: false,
    }
}

#[test]
fn end_to_end_gradient_matches_finite_differences() {
    let mut rng = Stream::new(2024);
    let head_a = EvidenceHead::new(Mlp::init(4, 8, 3, &mut rng), OutputActivation::Softplus).unwrap();
    let head_b = EvidenceHead::new(Mlp::init(4, 8, 3, &mut rng), OutputActivation::Softplus).unwrap();
    let s = sample(&mut rng);
    let total = |a: &EvidenceHead, b: &EvidenceHead| {
        let r = global_step(a, b, &s).unwrap();
        r.loss_a + r.loss_b + r.loss_fused
    };
    let step = global_step(&head_a, &head_b, &s).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (which, grads) in [(0, step.grad_a.flatten()), (1, step.grad_b.flatten())] {
        for (i, g) in grads.iter().enumerate() {
            let shift = |d: f64| {
                if which == 0 {
                    let a = EvidenceHead { net: perturbed(&head_a.net, i, d), ..head_a.clone() };
                    total(&a, &head_b)
                } else {
                    let b = EvidenceHead { net: perturbed(&head_b.net, i, d), ..head_b.clone() };
                    total(&head_a, &b)
                }
            };
            let fd = (shift(h) - shift(-h)) / (2.0 * h);
            worst = worst.max(rel_err(*g, fd));
        }
    }
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

#[test]
fn single_head_backward_matches_finite_differences() {
    let mut rng = Stream::new(77);
    let head = EvidenceHead::new(Mlp::init(4, 8, 3, &mut rng), OutputActivation::Softplus).unwrap();
    let x: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
    let y = LabelOneHot::new(2, 3).unwrap();
    let loss = |h: &EvidenceHead| reciprocal_loss(&h.forward(&x).unwrap().to_dirichlet(), &y).unwrap().total;
    let upstream = evifuse_core::reciprocal_loss_grad(&head.forward(&x).unwrap().to_dirichlet(), &y).unwrap();
    let grads = head.backward(&x, &upstream).unwrap().flatten();
    for (i, g) in grads.iter().enumerate() {
        let plus = EvidenceHead { net: perturbed(&head.net, i, 1e-6), ..head.clone() };
        let minus = EvidenceHead { net: perturbed(&head.net, i, -1e-6), ..head.clone() };
        let fd = (loss(&plus) - loss(&minus)) / 2e-6;
        assert!(rel_err(*g, fd) <= 1e-4, "param {i}: {g} vs {fd}");
    }
}

fn three_class() -> evifuse_core::datagen::Dataset {
    generate(&GenConfig { num_classes: 3, dim: 8, num_samples: 600, seed: 7, ..GenConfig::default() }).unwrap()
}

#[test]
fn training_reduces_global_loss_and_is_deterministic() {
    let data = three_class();
    let cfg = TrainConfig { step_size: 0.3, epochs: 50, batch_size: 16, seed: 7, ..TrainConfig::default() };
    let a = train_pair(&data, &cfg).unwrap();
    assert_eq!(a.history.len(), 50);
    let first = a.history.first().unwrap().global_loss;
    let last = a.history.last().unwrap().global_loss;
    assert!(last < first, "{first} -> {last}");
    let b = train_pair(&data, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn softmax_baseline_separates_blobs() {
    let data = generate(&GenConfig {
        num_classes: 2,
        dim: 2,
        num_samples: 400,
        overlap_a: 0.0,
        junk_rate_b: 0.0,
        noise_sigma: 0.1,
        seed: 3,
        ..GenConfig::default()
    })
    .unwrap();
    let cfg = TrainConfig { step_size: 0.3, epochs: 100, batch_size: 16, seed: 1, ..TrainConfig::default() };
    let model = train_softmax_baseline(&data, &cfg, View::A).unwrap();
    let train = data.subset(Split::Train);
    let correct = train.iter().filter(|s| model.predict(&s.x_a).unwrap() == s.label).count();
    assert!(correct as f64 / train.len() as f64 >= 0.95);
    for s in &train {
        let p = model.predict_proba(&s.x_a).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
    assert_eq!(train_softmax_baseline(&data, &cfg, View::A).unwrap(), model);
}

proptest! {
    #[test]
    fn evidence_is_non_negative(seed in any::<u64>(), x in prop::collection::vec(-1e3f64..1e3, 6), relu in any::<bool>()) {
        let act = if relu { OutputActivation::Relu } else { OutputActivation::Softplus };
        let head = EvidenceHead::new(Mlp::init(6, 5, 4, &mut Stream::new(seed)), act).unwrap();
        let e = head.forward(&x).unwrap();
        prop_assert!(e.values().iter().all(|v| *v >= 0.0 && v.is_finite()));
    }
}
