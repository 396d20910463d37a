use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specreg::operators::*;
use specreg::{Error, FilterFamily, SourceFn};

fn model(eigs: &[f64]) -> SpectralModel {
    SpectralModel::new(eigs.to_vec(), Provenance::Explicit).unwrap()
}

fn filter(id: &str) -> FilterFamily {
    FilterFamily::catalog(id).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0))
}

#[test]
fn svd_of_diagonal_and_permutation() {
    let d = Matrix::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    assert!(close(&svd_decompose(&d, 1e-12).unwrap().sigma, &[3.0, 2.0, 1.0], 1e-14));
    let p = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let r = svd_decompose(&p, 1e-12).unwrap();
    assert!(close(&r.sigma, &[1.0, 1.0], 1e-14));
    assert!(close(&r.model.eigenvalues, &[1.0, 1.0], 1e-14));
}

#[test]
fn svd_reconstructs_seeded_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (m, n) in [(8, 8), (12, 5), (5, 12)] {
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let a = Matrix::from_rows(&rows).unwrap();
        let r = svd_decompose(&a, 1e-12).unwrap();
        assert!(r.reconstruction_residual(&a) < 1e-10, "{m}x{n}");
        assert!(r.sigma.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn svd_rejects_bad_inputs() {
    let a = Matrix::zeros(513, 2);
    assert!(matches!(svd_decompose(&a, 1e-12), Err(Error::DimensionCap { .. })));
    let b = Matrix::from_rows(&[vec![1.0]]).unwrap();
    assert!(svd_decompose(&b, 1e-3).is_err());
}

#[test]
fn source_elements_by_hand() {
    let m3 = SpectralModel::synthetic(SpectrumRule::InvSquare, 3).unwrap();
    let s = SourceFn::parse("lambda").unwrap();
    let x = make_source_element(&m3, &s, &CoefVector(vec![1.0, 1.0, 1.0])).unwrap();
    assert!(close(&x.x_dagger.0, &[1.0, 0.25, 1.0 / 9.0], 1e-15));

    let s = SourceFn::parse("lambda^0.5").unwrap();
    let x = make_source_element(&m3, &s, &CoefVector::unit(3, 0)).unwrap();
    assert_eq!(x.x_dagger.0, vec![1.0, 0.0, 0.0]);

    let s = SourceFn::parse("lambda/(1+lambda)").unwrap();
    let x = make_source_element(&model(&[1.0, 1.0]), &s, &CoefVector(vec![2.0, 2.0])).unwrap();
    assert!(close(&x.x_dagger.0, &[1.0, 1.0], 1e-15));

    assert!(make_source_element(&m3, &s, &CoefVector(vec![1.0])).is_err());
}

#[test]
fn regularize_by_hand() {
    let x = regularize(&model(&[1.0, 0.25]), &filter("tsvd"), 0.5, &CoefVector(vec![1.0, 1.0])).unwrap();
    assert_eq!(x.0, vec![1.0, 0.0]);
    let x = regularize(&model(&[1.0]), &filter("tikhonov"), 1e-9, &CoefVector(vec![3.0])).unwrap();
    assert!((x.0[0] - 3.0).abs() < 1e-8);
    let x = regularize(&model(&[1.0]), &filter("tikhonov"), 1.0 - 1e-12, &CoefVector(vec![2.0])).unwrap();
    assert!((x.0[0] - 1.0).abs() < 1e-11);
}

#[test]
fn regularize_rejects_lambda_beyond_landweber_range() {
    let mut p = std::collections::BTreeMap::new();
    p.insert("mu".to_string(), 0.5);
    let f = FilterFamily::with_params("landweber", &p).unwrap();
    assert!(regularize(&model(&[2.5]), &f, 0.1, &CoefVector(vec![1.0])).is_err());
    assert!(regularize(&model(&[1.5]), &f, 0.1, &CoefVector(vec![1.0])).is_ok());
}

#[test]
fn regularization_error_by_hand() {
    let m = SpectralModel::synthetic(SpectrumRule::InvSquare, 20).unwrap();
    let x = CoefVector::default_generator(20);
    assert_eq!(regularization_error(&m, &filter("tsvd"), m.lambda_min() / 2.0, &x).unwrap(), 0.0);
    let one = CoefVector(vec![1.0]);
    let e = regularization_error(&model(&[1.0]), &filter("tikhonov"), 1.0 - 1e-15, &one).unwrap();
    assert!((e - 0.5).abs() < 1e-14);
    let e = regularization_error(&model(&[1.0]), &filter("showalter"), 0.1, &one).unwrap();
    assert!((e - (-10f64).exp()).abs() < 1e-15 * 4.6e-5);
    let le = log_regularization_error(&model(&[1.0]), &filter("showalter"), 1e-5, &one).unwrap();
    assert!((le + 1e5).abs() < 1e-9);
}

#[test]
fn membership_examples() {
    let m = SpectralModel::synthetic(SpectrumRule::InvSquare, 200).unwrap();
    let s = SourceFn::parse("lambda").unwrap();
    let x = make_source_element(&m, &s, &CoefVector::default_generator(200)).unwrap();
    match membership_probe(&m, &x.x_dagger, &s).unwrap() {
        Membership::Inside { bound } => assert!((bound - x.generator_w.norm()).abs() < 1e-12 * bound),
        o => panic!("{o:?}"),
    }
    let bad = make_source_element(&m, &s, &CoefVector::power(200, 1.0)).unwrap();
    assert!(matches!(membership_probe(&m, &bad.x_dagger, &s).unwrap(), Membership::Outside { .. }));
    assert_eq!(
        membership_probe(&m, &CoefVector(vec![0.0; 200]), &s).unwrap(),
        Membership::Inside { bound: 0.0 }
    );
}

#[test]
fn membership_flags_underflowing_source() {
    let m = SpectralModel::synthetic(SpectrumRule::Exponential, 512).unwrap();
    let s = SourceFn::parse("lambda^2").unwrap();
    let x = CoefVector(vec![1e-300; m.dim]);
    match membership_probe(&m, &x, &s).unwrap() {
        Membership::Outside { index, .. } => assert!(index >= 1 && index <= m.dim),
        o => panic!("{o:?}"),
    }
}

#[test]
fn csv_matrix_with_header() {
    let text = "c1,c2\n3,0\n0,4\n";
    let a = Matrix::from_csv_reader(text.as_bytes()).unwrap();
    assert_eq!((a.rows, a.cols), (2, 2));
    let r = svd_decompose(&a, 1e-12).unwrap();
    assert!(close(&r.model.eigenvalues, &[16.0, 9.0], 1e-14));
    assert!(Matrix::from_csv_reader("1,2\n3\n".as_bytes()).is_err());
}
