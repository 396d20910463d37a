use specreg::experiments::*;
use specreg::operators::{
    make_source_element, regularization_error, CoefVector, Provenance, SpectralModel, SpectrumRule,
};
use specreg::{Error, FilterFamily, OrderFn, SourceFn};

fn filter(id: &str) -> FilterFamily {
    FilterFamily::catalog(id).unwrap()
}

fn order(s: &str) -> OrderFn {
    OrderFn::parse(s).unwrap()
}

fn source(s: &str) -> SourceFn {
    SourceFn::parse(s).unwrap()
}

fn j2(dim: usize) -> SpectralModel {
    SpectralModel::synthetic(SpectrumRule::InvSquare, dim).unwrap()
}

fn tikhonov_study(s: &str) -> ConvergenceStudy {
    let m = j2(200);
    let f = filter("tikhonov");
    let x = make_source_element(&m, &source(s), &CoefVector::default_generator(200)).unwrap();
    run_convergence(&m, &f, &x, &order("alpha"), &default_study_grid(&f)).unwrap()
}

#[test]
fn tikhonov_study_matches_direct_sum() {
    let study = tikhonov_study("lambda");
    let m = &study.context.model;
    let x = &study.context.x_dagger;
    assert!(study.records.windows(2).all(|w| w[0].alpha > w[1].alpha));
    for r in &study.records {
        let oracle: f64 = m
            .eigenvalues
            .iter()
            .zip(&x.0)
            .map(|(&l, &xj)| (r.alpha / (r.alpha + l) * xj).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((r.err - oracle).abs() <= 1e-12 * oracle, "alpha {}", r.alpha);
        assert!((r.ratio - r.err / r.alpha).abs() <= 1e-12 * r.ratio);
        let bound: f64 = x.0.iter().zip(&m.eigenvalues).map(|(&xj, &l)| (xj / l).powi(2)).sum::<f64>().sqrt();
        assert!(r.ratio <= 1.05 * bound);
    }
}

#[test]
fn tsvd_study_reaches_zero() {
    let m = j2(200);
    let f = filter("tsvd");
    let x = make_source_element(&m, &source("lambda"), &CoefVector::default_generator(200)).unwrap();
    let study = run_convergence(&m, &f, &x, &order("alpha"), &default_study_grid(&f)).unwrap();
    for r in &study.records {
        if r.alpha < m.lambda_min() {
            assert_eq!(r.err, 0.0);
        } else {
            assert!(r.err > 0.0);
        }
    }
}

#[test]
fn showalter_ratio_closed_form() {
    let m = SpectralModel::new(vec![1.0], Provenance::Explicit).unwrap();
    let f = filter("showalter");
    let x = make_source_element(&m, &source("lambda"), &CoefVector(vec![1.0])).unwrap();
    let study = run_convergence(&m, &f, &x, &order("exp(-1/sqrt(alpha))"), &default_study_grid(&f)).unwrap();
    for r in &study.records {
        let want = (-1.0 / r.alpha + 1.0 / r.alpha.sqrt()).exp();
        if want > 1e-290 {
            assert!((r.ratio - want).abs() <= 1e-10 * want, "alpha {}: {} vs {want}", r.alpha, r.ratio);
        } else {
            assert!(r.ratio < 1e-280);
        }
    }
    assert_eq!(study.records.last().unwrap().ratio, 0.0);
}

#[test]
fn constant_error_has_zero_slope() {
    let mut study = tikhonov_study("lambda");
    for r in &mut study.records {
        r.err = 0.3;
    }
    let fit = fit_order(&study, None).unwrap();
    assert!(fit.slope.abs() < 1e-6);
    assert!((0.0..=1.0).contains(&fit.r_squared));
}

#[test]
fn fit_window_and_errors() {
    let study = tikhonov_study("lambda");
    let fit = fit_order(&study, None).unwrap();
    let (lo, hi) = study.alpha_range();
    assert!(fit.window.0 >= lo && fit.window.1 <= hi);
    assert!(fit.window.0 >= 10.0 * study.context.model.lambda_min() * (1.0 - 1e-12));
    assert!(fit.points >= MIN_FIT_POINTS);
    assert!(matches!(fit_order(&study, Some((0.1, 0.11))), Err(Error::InsufficientData(_))));
    let mut zero = study.clone();
    zero.records.iter_mut().for_each(|r| r.err = 0.0);
    assert!(fit_order(&zero, None).is_err());
}

#[test]
fn study_csv_layout() {
    let study = tikhonov_study("lambda");
    let csv = study.to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "alpha,err,rho,ratio");
    assert_eq!(lines.count(), study.records.len());
    assert!(!csv.contains('\r'));
}

#[test]
fn converse_scripted_scenarios_agree() {
    let scenarios = converse_scenarios();
    assert_eq!(scenarios.len(), 6);
    assert_eq!(scenarios.iter().filter(|s| s.expect_inside).count(), 3);
    for s in &scenarios {
        let r = s.run().unwrap();
        assert!(!r.declined, "{}", s.name);
        assert_eq!(r.verification.is_inside(), s.expect_inside, "{}", s.name);
        assert_eq!(r.agree, Some(true), "{}: {:?}", s.name, r.tail);
    }
}

#[test]
fn converse_declines_without_order_source_pair() {
    let m = j2(200);
    let f = filter("ex8_osc");
    let s = source("lambda^0.5");
    let x = make_source_element(&m, &s, &CoefVector::default_generator(200)).unwrap();
    let rho = order("alpha");
    let study = run_convergence(&m, &f, &x, &rho, &default_study_grid(&f)).unwrap();
    let r = converse_probe(&study, &f, &rho, &s, None).unwrap();
    assert!(!r.pair_certificate.holds);
    assert!(r.declined && !r.prediction);
    assert_eq!(r.agree, None);
}

#[test]
fn maximal_demo_on_tikhonov() {
    let m = j2(200);
    let cands: Vec<SourceFn> = ["lambda", "lambda/(1+lambda)", "lambda^2"].iter().map(|s| source(s)).collect();
    let r = maximal_source_demo(&m, &filter("tikhonov"), &order("alpha"), &cands).unwrap();
    assert_eq!(r.candidates.len(), 3);
    for c in &r.candidates {
        assert!(c.strong_pair.holds, "{}", c.source);
        assert!(c.k.is_some_and(|k| k.is_finite() && k > 0.0), "{}", c.source);
        assert!(c.included, "{}", c.source);
        assert!(c.elements.iter().all(|e| e.membership.is_inside()));
    }
}

#[test]
fn maximal_demo_on_oscillatory_family() {
    let m = j2(200);
    let r = maximal_source_demo(&m, &filter("ex8_osc"), &order("alpha"), &[source("lambda^0.5")]).unwrap();
    let c = &r.candidates[0];
    assert!(c.included);
    assert!((c.k.unwrap() - 1.0).abs() < 0.05, "k = {:?}", c.k);
}

#[test]
fn maximal_demo_excludes_candidates_without_strong_pair() {
    let m = j2(200);
    let r = maximal_source_demo(&m, &filter("tikhonov"), &order("alpha"), &[source("1e-13*lambda")]).unwrap();
    let c = &r.candidates[0];
    assert!(!c.strong_pair.holds);
    assert!(!c.included && c.k.is_none());
}

#[test]
fn maximal_demo_requires_strong_level() {
    let m = j2(50);
    let e = maximal_source_demo(&m, &filter("tsvd"), &order("alpha"), &[source("lambda")]).unwrap_err();
    assert!(matches!(e, Error::Precondition(_)));
}

#[test]
fn regularization_error_is_bounded_by_norm_for_contractive_residuals() {
    let m = j2(100);
    let x = CoefVector::default_generator(100);
    for id in ["tikhonov", "tsvd", "showalter", "ex3_exp"] {
        let e = regularization_error(&m, &filter(id), 0.01, &x).unwrap();
        assert!(e <= x.norm() * (1.0 + 1e-12), "{id}");
    }
}
