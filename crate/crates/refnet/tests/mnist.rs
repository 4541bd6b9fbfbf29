//! Checks against the real MNIST files. Skipped with a notice when the data
//! directory (`FACTORLENS_MNIST_DIR` or `<workspace>/data/mnist`) is absent.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use factorlens_refnet::{load_mnist, train_one_epoch, Mnist, TrainRegime};

fn data_dir() -> PathBuf {
    std::env::var_os("FACTORLENS_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn mnist() -> Option<&'static Mnist> {
    static DATA: OnceLock<Option<Mnist>> = OnceLock::new();
    DATA.get_or_init(|| {
        let dir = data_dir();
        if !dir.join("t10k-labels-idx1-ubyte").exists() {
            eprintln!("skipping: no MNIST files in {}", dir.display());
            return None;
        }
        Some(load_mnist(&dir).expect("MNIST files present but unreadable"))
    })
    .as_ref()
}

#[test]
fn official_test_split_shape_and_first_label() {
    let Some(m) = mnist() else { return };
    assert_eq!((m.test.len(), m.test.rows, m.test.cols), (10_000, 28, 28));
    assert_eq!(m.train.len(), 60_000);
    assert!(m.test.labels.iter().all(|&l| l < 10));
    assert!(m.test.images.iter().all(|&p| (0.0..=1.0).contains(&p)));

    let raw = std::fs::read(data_dir().join("t10k-labels-idx1-ubyte")).unwrap();
    let (dims, labels) = factorlens_testkit::read_idx(&raw).unwrap();
    assert_eq!(dims, vec![10_000]);
    assert_eq!(m.test.labels[0], labels[0]);
    assert_eq!(m.test.labels[0], 7);

    let raw = std::fs::read(data_dir().join("t10k-images-idx3-ubyte")).unwrap();
    let (dims, pixels) = factorlens_testkit::read_idx(&raw).unwrap();
    assert_eq!(dims, vec![10_000, 28, 28]);
    assert!(m.test.image(0).iter().zip(&pixels[..784]).all(|(&a, &b)| a == f64::from(b) / 255.0));
}

#[test]
fn training_is_deterministic() {
    let Some(m) = mnist() else { return };
    let r = TrainRegime { fraction: 0.03, seed: 5, ..Default::default() };
    let a = train_one_epoch(&r, &m.train, &m.test).unwrap();
    let b = train_one_epoch(&r, &m.train, &m.test).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.batch_losses, b.batch_losses);
    assert_eq!(a.test, b.test);
    let c = train_one_epoch(&TrainRegime { seed: 6, ..r }, &m.train, &m.test).unwrap();
    assert_ne!(a.params, c.params);
}

#[test]
fn loss_trends_down_over_the_epoch() {
    let Some(m) = mnist() else { return };
    let out = train_one_epoch(&TrainRegime::default(), &m.train, &m.test).unwrap();
    let n = out.batch_losses.len();
    let tenth = n / 10;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (first, last) = (mean(&out.batch_losses[..tenth]), mean(&out.batch_losses[n - tenth..]));
    assert!(last < first, "first {first}, last {last}");
    assert!(out.params.all_finite());
}

#[test]
fn single_class_training_predicts_that_class() {
    let Some(m) = mnist() else { return };
    let r = TrainRegime { class_subset: vec![0], ..Default::default() };
    let out = train_one_epoch(&r, &m.train, &m.test).unwrap();
    assert_eq!(out.train_samples, 5923);
    assert!((0.09..=0.12).contains(&out.test_accuracy()), "{}", out.test_accuracy());
    assert!(out.test.per_class_recall[0] > 0.9);
}
