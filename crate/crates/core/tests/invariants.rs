//! Structural invariants of the qualification calculus on the catalog.

use specreg::experiments::{default_study_grid, fit_order, run_convergence};
use specreg::filters::CATALOG;
use specreg::funcdsl::{
    default_order_grid, equivalent_at_origin, equivalent_sources, precedes, SourceLike, TabulatedSource,
};
use specreg::numerics::LambdaGrid;
use specreg::operators::{make_source_element, regularization_error, CoefVector, SpectralModel, SpectrumRule};
use specreg::qualification::*;
use specreg::{FilterFamily, OrderFn, SourceFn};

const ORDERS: [&str; 5] = ["alpha", "alpha^0.5", "alpha^2", "exp(-1/alpha)", "-1/ln(alpha)"];
const SOURCES: [&str; 4] = ["lambda", "lambda^0.5", "lambda/(1+lambda)", "lambda^2"];

fn filter(id: &str) -> FilterFamily {
    FilterFamily::catalog(id).unwrap()
}

fn order(s: &str) -> OrderFn {
    OrderFn::parse(s).unwrap()
}

fn source(s: &str) -> SourceFn {
    SourceFn::parse(s).unwrap()
}

fn pair_grid(f: &FilterFamily) -> LambdaGrid {
    LambdaGrid::standard().clipped_below(f.lambda_limit())
}

fn srho_table(f: &FilterFamily, rho: &OrderFn, lambdas: &[f64]) -> Vec<SrhoEntry> {
    let grid = default_alpha_grid(f);
    lambdas
        .iter()
        .map(|&l| {
            let estimate = estimate_srho(f, rho, l, &grid).unwrap();
            SrhoEntry {
                lambda: l,
                stabilized: estimate.stabilized,
                estimate,
            }
        })
        .collect()
}

#[test]
fn precedence_is_reflexive_and_transitive() {
    let grid = default_order_grid();
    let os: Vec<OrderFn> = ORDERS.iter().map(|s| order(s)).collect();
    let p: Vec<Vec<bool>> = os
        .iter()
        .map(|a| os.iter().map(|b| precedes(a, b, &grid).holds()).collect())
        .collect();
    for i in 0..os.len() {
        assert!(p[i][i], "{} not reflexive", ORDERS[i]);
        for j in 0..os.len() {
            for k in 0..os.len() {
                if p[i][j] && p[j][k] {
                    assert!(p[i][k], "{} <= {} <= {} but not {} <= {}", ORDERS[i], ORDERS[j], ORDERS[k], ORDERS[i], ORDERS[k]);
                }
            }
        }
    }
    assert!(p[2][0] && !p[0][2]);
    assert!(p[3][0] && p[0][4] && !p[4][0]);
}

#[test]
fn equivalence_is_an_equivalence_relation() {
    let grid = default_order_grid();
    let os: Vec<OrderFn> = ORDERS.iter().map(|s| order(s)).collect();
    let eq: Vec<Vec<bool>> = os
        .iter()
        .map(|a| os.iter().map(|b| equivalent_at_origin(a, b, &grid).holds).collect())
        .collect();
    for i in 0..os.len() {
        assert!(eq[i][i]);
        for j in 0..os.len() {
            assert_eq!(eq[i][j], eq[j][i], "{} vs {}", ORDERS[i], ORDERS[j]);
            for k in 0..os.len() {
                if eq[i][j] && eq[j][k] {
                    assert!(eq[i][k]);
                }
            }
        }
    }
    let scaled = order("3*alpha");
    assert!(equivalent_at_origin(&os[0], &scaled, &grid).holds);
}

#[test]
fn reported_level_carries_the_lower_levels_evidence() {
    for id in CATALOG {
        let f = filter(id);
        for rho in ["alpha", "alpha^0.5"] {
            let r = classify(&f, &order(rho)).unwrap();
            let e = &r.evidence;
            let holds = |v: &Option<PairVerdict>| v.as_ref().is_some_and(|v| v.holds);
            if r.level >= Level::Optimal {
                assert!(holds(&e.optimal), "{id} {rho}: optimal without certificate");
            }
            if r.level >= Level::Strong {
                assert!(holds(&e.strong), "{id} {rho}: strong without pair");
            }
            if r.level >= Level::Weak {
                assert!(holds(&e.weak) || holds(&e.strong), "{id} {rho}: weak without pair");
            }
        }
    }
}

#[test]
fn weak_pairs_survive_slower_orders() {
    let grid = default_order_grid();
    for id in ["tikhonov", "ex3_exp", "ex4_log", "showalter"] {
        let f = filter(id);
        let lambdas = pair_grid(&f);
        let agrid = default_alpha_grid(&f);
        for s in SOURCES {
            let s = source(s);
            for r1 in ORDERS {
                let rho = order(r1);
                if !check_weak_pair(&f, &s, &rho, &lambdas, &agrid).unwrap().holds {
                    continue;
                }
                for r2 in ORDERS {
                    let slower = order(r2);
                    if precedes(&rho, &slower, &grid).holds() {
                        let v = check_weak_pair(&f, &s, &slower, &lambdas, &agrid).unwrap();
                        assert!(v.holds, "{id}: ({}, {r1}) weak but ({}, {r2}) not", s.expr, s.expr);
                    }
                }
            }
        }
    }
}

#[test]
fn strong_sources_are_dominated_by_srho() {
    for (id, rho) in [("tikhonov", "alpha"), ("ex3_exp", "exp(-1/alpha)"), ("ex4_log", "-1/ln(alpha)"), ("showalter", "alpha")] {
        let f = filter(id);
        let rho = order(rho);
        let lambdas = pair_grid(&f);
        let table = srho_table(&f, &rho, &lambdas.positive());
        let shat = srho_source(&table, None).unwrap();
        for s in SOURCES {
            let s = source(s);
            let v = check_strong_pair(&f, &s, &rho, &lambdas, &default_alpha_grid(&f)).unwrap();
            if v.holds {
                let k = table
                    .iter()
                    .map(|e| (s.ln_s(e.lambda) - shat.ln_s(e.lambda)).exp())
                    .fold(0.0, f64::max);
                assert!(k.is_finite() && k < 1e12, "{id} {}: k = {k}", s.expr);
            }
        }
    }
}

#[test]
fn optimal_source_is_unique_up_to_equivalence() {
    let lambdas = LambdaGrid::geometric(1e-4, 10.0, 4).unwrap();
    for (id, rho, s) in [
        ("tikhonov", "alpha", "lambda"),
        ("ex3_exp", "exp(-1/alpha)", "lambda/(1+lambda)"),
        ("ex4_log", "-1/ln(alpha)", "lambda/(1+lambda)"),
    ] {
        let f = filter(id);
        let table = srho_table(&f, &order(rho), &lambdas.values);
        let shat = srho_source(&table, None).unwrap();
        let eq = equivalent_sources(&shat, &source(s), &lambdas);
        assert!(eq.holds, "{id}: s_rho not equivalent to {s}: {eq:?}");
    }
}

#[test]
fn oscillatory_families_are_strong_but_not_optimal_at_one() {
    for (id, rho) in [("ex8_osc", "alpha"), ("ex9_osc", "exp(-1/sqrt(alpha))"), ("ex10_osc", "-1/ln(alpha)")] {
        let f = filter(id);
        let rho = order(rho);
        let grid = default_alpha_grid(&f);
        let shat = estimate_srho(&f, &rho, 1.0, &grid).unwrap();
        let s = TabulatedSource::new("s_rho", vec![1.0], &[shat.value]).unwrap();
        let e = &pair_limsups(&f, &s, &rho, &[1.0], &grid).unwrap()[0].estimate;
        assert!((0.9..=1.1).contains(&e.value), "{id}: limsup {}", e.value);
        assert!(e.tail_min < 0.1, "{id}: liminf {}", e.tail_min);
    }
}

#[test]
fn piecewise_family_is_not_strong_for_alpha() {
    let f = filter("ex7_piecewise");
    let r = classify(&f, &order("alpha")).unwrap();
    assert!(r.level < Level::Strong, "{:?}", r.level);
    let mu = estimate_classical_order(&f, &default_mu_grid(), &LambdaGrid::standard(), &default_alpha_grid(&f)).unwrap();
    assert!(mu.low.is_some_and(|l| l <= 1.0) && mu.high.is_some_and(|h| h > 1.0), "{mu:?}");
}

#[test]
fn direct_rate_holds_for_weak_pairs() {
    let model = SpectralModel::synthetic(SpectrumRule::InvSquare, 200).unwrap();
    let w = CoefVector::default_generator(200);
    for (id, rho, s) in [
        ("tikhonov", "alpha", "lambda"),
        ("tikhonov", "alpha^0.5", "lambda^0.5"),
        ("ex3_exp", "exp(-1/alpha)", "lambda/(1+lambda)"),
        ("ex4_log", "-1/ln(alpha)", "lambda/(1+lambda)"),
        ("showalter", "alpha", "lambda"),
        ("tsvd", "alpha", "lambda"),
    ] {
        let f = filter(id);
        let (rho, s) = (order(rho), source(s));
        assert!(check_weak_pair(&f, &s, &rho, &pair_grid(&f), &default_alpha_grid(&f)).unwrap().holds);
        let x = make_source_element(&model, &s, &w).unwrap();
        let study = run_convergence(&model, &f, &x, &rho, &default_study_grid(&f)).unwrap();
        let worst = study.records.iter().map(|r| r.ratio).fold(0.0, f64::max);
        assert!(worst < 1e6, "{id} {}: ratio {worst}", s.expr);
    }
}

#[test]
fn tsvd_is_exact_below_the_spectrum() {
    let model = SpectralModel::synthetic(SpectrumRule::InvSquare, 50).unwrap();
    let f = filter("tsvd");
    let x = CoefVector::default_generator(50);
    for alpha in [model.lambda_min() * 0.99, model.lambda_min() * 0.5, 1e-6] {
        assert_eq!(regularization_error(&model, &f, alpha, &x).unwrap(), 0.0);
    }
    assert!(regularization_error(&model, &f, model.lambda_min() * 1.01, &x).unwrap() > 0.0);
}

#[test]
fn tikhonov_slopes_follow_source_exponent() {
    let model = SpectralModel::synthetic(SpectrumRule::InvSquare, 200).unwrap();
    let f = filter("tikhonov");
    let w = CoefVector::default_generator(200);
    let mut bad = Vec::new();
    for mu in [0.25, 0.5, 1.0] {
        let x = make_source_element(&model, &source(&format!("lambda^{mu}")), &w).unwrap();
        let study = run_convergence(&model, &f, &x, &order("alpha"), &default_study_grid(&f)).unwrap();
        let fit = fit_order(&study, None).unwrap();
        if (fit.slope - mu).abs() > 0.05 {
            bad.push(format!("mu {mu}: slope {:.4}", fit.slope));
        }
    }
    assert!(bad.is_empty(), "{}", bad.join(", "));
}
