use klsda::dataset::{
    self, generate_synthetic, load_dir, split_kfold, EpochDataset, SyntheticConfig,
};
use klsda::eval::{cross_validate, fold_anisotropy, Method};
use klsda::klsda::{fit_dataset, ConfigId, KlsdaConfig};
use ndarray::Array2;

fn small_synthetic(seed: u64) -> EpochDataset {
    generate_synthetic(&SyntheticConfig {
        n_target: 30,
        n_nontarget: 90,
        n_channels: 4,
        n_times: 32,
        fs_hz: 128.0,
        bump_center_s: 0.125,
        bump_width_s: 0.03,
        active_channels: vec![1, 2],
        seed,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

#[test]
fn full_size_oddball_layout_loads() {
    let (n, p, targets) = (3780, 2560, 630);
    let x = Array2::from_shape_fn((n, p), |(i, j)| ((i * 31 + j * 17) % 101) as f64 * 0.01);
    let labels: Vec<usize> = (0..n).map(|i| if i % 6 == 0 { 1 } else { 2 }).collect();
    let ds = EpochDataset::new(x, labels, 2, 10, 256, 240.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ds.save(dir.path()).unwrap();
    let loaded = load_dir(dir.path()).unwrap();
    assert_eq!((loaded.n(), loaded.p()), (n, p));
    assert_eq!(loaded.class_counts(), &[targets, n - targets]);
    let ind = dataset::indicator(&loaded);
    assert!((ind.pi[0] - 630.0 / 3780.0).abs() < 1e-15);
    assert!((ind.pi[1] - 3150.0 / 3780.0).abs() < 1e-15);
    assert_eq!(loaded, ds);
}

#[test]
fn missing_meta_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_dir(dir.path()).unwrap_err().to_string();
    assert!(err.contains("meta.json"), "{err}");
}

#[test]
fn truncated_epoch_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_synthetic(1);
    ds.save(dir.path()).unwrap();
    let path = dir.path().join(dataset::DATA_FILE);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(load_dir(dir.path()).is_err());
}

#[test]
fn fold_anisotropy_ignores_test_rows() {
    let ds = small_synthetic(3);
    let cfg = KlsdaConfig::new(ConfigId::Klsda1, 5.0);
    let folds = split_kfold(ds.n(), 3, 11, Some(ds.labels())).unwrap();
    for fold in &folds {
        let before = fold_anisotropy(&ds, fold, &cfg).unwrap();
        let mut x = ds.x().to_owned();
        for &i in &fold.test {
            x.row_mut(i).mapv_inplace(|v| v * -7.0 + 100.0);
        }
        let perturbed = ds.with_x(x).unwrap();
        let after = fold_anisotropy(&perturbed, fold, &cfg).unwrap();
        assert_eq!(before, after);
    }
}

#[test]
fn fitting_is_deterministic() {
    let ds = small_synthetic(5);
    for id in ConfigId::ALL {
        let cfg = KlsdaConfig::new(id, 5.0);
        let a = fit_dataset(&ds, &cfg).unwrap();
        let b = fit_dataset(&ds, &cfg).unwrap();
        assert_eq!(a.b, b.b);
        assert_eq!(a.theta, b.theta);
    }
}

#[test]
fn cross_validation_finds_the_bump() {
    let ds = small_synthetic(9);
    let cfg = KlsdaConfig::new(ConfigId::Klsda1, 10.0);
    let r = cross_validate(&ds, Method::Klsda(ConfigId::Klsda1), &cfg, 3, 7, true).unwrap();
    assert_eq!(r.fold_auc.len(), 3);
    assert!(!r.has_failures());
    let mean = r.mean_auc.unwrap();
    assert!(mean > 0.75, "mean AUC {mean}");
    let again = cross_validate(&ds, Method::Klsda(ConfigId::Klsda1), &cfg, 3, 7, true).unwrap();
    assert_eq!(r.fold_auc, again.fold_auc);
    assert_eq!(r.fold_hashes, again.fold_hashes);
}
