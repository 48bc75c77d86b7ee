use magmar::copula::CopulaSpec;
use magmar::estimation::{fit, select, Criterion, FitOptions};
use magmar::model::{neg_log_likelihood, simulate, uniform_innovations, DEFAULT_INIT};
use magmar::model_string::parse_model_string;
use magmar::verification::{empirical_pair_copula, mag1_pair_cdf, simulate_mag1, sup_norm, COPULA_GRID};

#[test]
fn ar1_normal_recovery() {
    let skeleton = parse_model_string("MAGMAR(1,0)-n").unwrap();
    let truth = skeleton.with_params(&[0.6]).unwrap();
    for seed in 1..=10 {
        let sim = simulate(&truth, 2000, seed, 500).unwrap();
        let r = fit(&skeleton, sim.series.values(), &FitOptions::default()).unwrap();
        let est = r.spec.params()[0];
        assert!((est - 0.6).abs() <= 0.05, "seed {seed}: {est}");
        assert!(r.converged);
        let at_truth = neg_log_likelihood(&truth, sim.series.values(), DEFAULT_INIT).unwrap();
        assert!(r.nll <= at_truth + 1e-9);
    }
}

#[test]
fn gumbel_t_recovery() {
    let skeleton = parse_model_string("MAGMAR(1,1)-g-t").unwrap();
    let truth = skeleton.with_params(&[2.0, 0.4, 6.0]).unwrap();
    let sim = simulate(&truth, 3000, 3, 500).unwrap();
    let r = fit(&skeleton, sim.series.values(), &FitOptions::default()).unwrap();
    let p = r.spec.params();
    assert!((p[0] - 2.0).abs() < 0.2, "{p:?}");
    assert!((p[1] - 0.4).abs() < 0.1, "{p:?}");
    assert!(p[2] > 2.0, "{p:?}");
}

#[test]
fn select_prefers_independence_on_iid_data() {
    let u = uniform_innovations(600, 42);
    let models: Vec<String> =
        ["MAGMAR(1,1)-n-n", "MAGMAR(0,0)-", "MAGMAR(1,0)-g", "MAGMAR(2,0)-nn"].iter().map(|s| s.to_string()).collect();
    let ranked = select(&models, &u, Criterion::Bic, &FitOptions::default(), 2).unwrap();
    assert_eq!(ranked[0].model, "MAGMAR(0,0)-");
    let best = ranked[0].result.as_ref().unwrap();
    assert_eq!((best.nll, best.n_params), (0.0, 0));
    let bics: Vec<f64> = ranked.iter().map(|c| c.result.as_ref().unwrap().bic).collect();
    assert!(bics.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn select_keeps_failures_last() {
    let u = uniform_innovations(13, 1);
    let models: Vec<String> = ["MAGMAR(4,1)-nnnn-n", "MAGMAR(1,0)-n"].iter().map(|s| s.to_string()).collect();
    let ranked = select(&models, &u, Criterion::Aic, &FitOptions::default(), 1).unwrap();
    assert_eq!(ranked[0].model, "MAGMAR(1,0)-n");
    assert!(ranked[1].result.is_err());
}

#[test]
fn mag1_empirical_copula_matches_integral() {
    for (theta, seed) in [(CopulaSpec::normal(0.8).unwrap(), 21), (CopulaSpec::gumbel(3.0).unwrap(), 22)] {
        let v = simulate_mag1(&theta, 1_000_000, seed).unwrap();
        let emp = empirical_pair_copula(&v[1..], &v[..v.len() - 1], &COPULA_GRID);
        let exact: Vec<f64> = COPULA_GRID
            .iter()
            .flat_map(|&a| COPULA_GRID.iter().map(move |&b| (a, b)))
            .map(|(a, b)| mag1_pair_cdf(&theta, a, b).unwrap())
            .collect();
        let gap = sup_norm(&emp, &exact);
        assert!(gap <= 0.003, "{theta}: {gap}");
    }
}
