use mechrxn::featurize::SparseVec;
use mechrxn::nn::{read_model, train_classifier, train_siamese, write_model, Activation, Mlp, MlpConfig, MODEL_MAGIC};
use proptest::prelude::*;

fn config(input_dim: usize, hidden: Vec<usize>, tanh: bool, seed: u64) -> MlpConfig {
    let mut c = if tanh { MlpConfig::siamese_ranker(input_dim) } else { MlpConfig::site_classifier(input_dim) };
    c.layer_dims = hidden;
    c.layer_dims.push(1);
    c.activation = if tanh { Activation::Tanh } else { Activation::Relu };
    c.seed = seed;
    c
}

fn input(dim: usize, pairs: &[(usize, f32)]) -> SparseVec {
    SparseVec::from_pairs(dim, pairs.iter().map(|&(i, v)| ((i % dim) as u32, v)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_read_is_identity(
        dim in 1usize..40,
        hidden in prop::collection::vec(1usize..12, 0..3),
        tanh: bool,
        seed: u64,
        x in prop::collection::vec((0usize..40, -3.0f32..3.0), 0..10),
    ) {
        let mut m = Mlp::new(config(dim, hidden, tanh, seed)).unwrap();
        m.round_to_f32();
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        prop_assert_eq!(&buf[..8], &MODEL_MAGIC[..]);
        let back = read_model(&buf[..]).unwrap();
        prop_assert_eq!(back.param_count(), m.param_count());
        let x = input(dim, &x);
        prop_assert_eq!(back.forward(&x).unwrap(), m.forward(&x).unwrap());
        for i in 0..m.param_count() {
            prop_assert_eq!(back.param(i), m.param(i));
        }
    }

    #[test]
    fn probabilities_stay_in_unit_interval(seed: u64, x in prop::collection::vec((0usize..30, -50.0f32..50.0), 0..12)) {
        let m = Mlp::new(config(30, vec![8, 4], false, seed)).unwrap();
        let p = m.probability(&input(30, &x)).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn wrong_input_width_is_an_error() {
    let m = Mlp::new(config(5, vec![3], false, 1)).unwrap();
    assert!(m.forward(&SparseVec::zeros(6)).is_err());
}

#[test]
fn truncated_model_file_is_an_error() {
    let m = Mlp::new(config(5, vec![3], false, 1)).unwrap();
    let mut buf = Vec::new();
    write_model(&mut buf, &m).unwrap();
    assert!(read_model(&buf[..buf.len() - 1]).is_err());
    buf[0] = b'X';
    assert!(read_model(&buf[..]).is_err());
}

#[test]
fn training_is_seed_reproducible_and_learns_a_separable_task() {
    let data: Vec<(SparseVec, bool)> = (0..200)
        .map(|i| {
            let on = i % 2 == 0;
            (SparseVec::from_pairs(4, [(if on { 0 } else { 1 }, 1.0), (2, (i % 7) as f32 / 7.0)]), on)
        })
        .collect();
    let mut c = config(4, vec![8], false, 5);
    c.epochs = 30;
    c.dropout = 0.0;
    let a = train_classifier(&data, &c).unwrap();
    let b = train_classifier(&data, &c).unwrap();
    for (x, y) in &data {
        assert_eq!(a.forward(x).unwrap(), b.forward(x).unwrap());
        assert_eq!(a.probability(x).unwrap() > 0.5, *y);
    }
}

#[test]
fn ranker_prefers_the_true_side() {
    let pairs: Vec<(SparseVec, SparseVec)> = (0..100)
        .map(|i| {
            let noise = (i % 5) as f32 / 10.0;
            (SparseVec::from_pairs(3, [(0, 1.0), (2, noise)]), SparseVec::from_pairs(3, [(1, 1.0), (2, noise)]))
        })
        .collect();
    let mut c = config(3, vec![6], true, 2);
    c.epochs = 40;
    c.dropout = 0.0;
    let m = train_siamese(&pairs, &c).unwrap();
    for (good, bad) in &pairs {
        assert!(m.forward(good).unwrap() > m.forward(bad).unwrap());
    }
}
