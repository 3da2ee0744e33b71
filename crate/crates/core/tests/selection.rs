use ipwband::selection::{fit_selection, hosmer_lemeshow, Family, SelectionModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn draw(alpha: [f64; 2], n: usize, seed: u64) -> (Vec<f64>, Vec<bool>) {
    // one (y, δ) pair per step, so a smaller n is a prefix of a larger one
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let y: f64 = rng.random_range(-3.0..3.0);
            (y, rng.random::<f64>() < logistic(alpha[0] + alpha[1] * y))
        })
        .unzip()
}

/// Logistic log-likelihood written out directly.
fn loglik(a: [f64; 2], y: &[f64], d: &[bool]) -> f64 {
    y.iter()
        .zip(d)
        .map(|(&v, &o)| {
            let p = logistic(a[0] + a[1] * v);
            if o {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Coarse-to-fine grid search for the likelihood maximum.
fn grid_search(y: &[f64], d: &[bool]) -> [f64; 2] {
    let mut centre = [0.0, 0.0];
    let mut span = 2.0;
    while span > 1e-7 {
        let mut best = (f64::NEG_INFINITY, centre);
        for i in -10..=10 {
            for j in -10..=10 {
                let a = [centre[0] + span * i as f64 / 10.0, centre[1] + span * j as f64 / 10.0];
                let l = loglik(a, y, d);
                if l > best.0 {
                    best = (l, a);
                }
            }
        }
        centre = best.1;
        span /= 4.0;
    }
    centre
}

/// Observed information by central differences of the log-likelihood.
fn information(a: [f64; 2], y: &[f64], d: &[bool]) -> [[f64; 2]; 2] {
    let e = 1e-4;
    let f = |u: f64, v: f64| loglik([a[0] + u, a[1] + v], y, d);
    let h00 = (f(e, 0.0) - 2.0 * f(0.0, 0.0) + f(-e, 0.0)) / (e * e);
    let h11 = (f(0.0, e) - 2.0 * f(0.0, 0.0) + f(0.0, -e)) / (e * e);
    let h01 = (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e);
    [[-h00, -h01], [-h01, -h11]]
}

#[test]
fn logit_recovery_agrees_with_grid_search_and_truth() {
    let truth = [0.2, 0.6];
    let (y, d) = draw(truth, 5000, 2024);
    let fit = fit_selection(Family::Logit, &y, &d).unwrap();
    assert!(fit.converged);
    let oracle = grid_search(&y, &d);
    assert!((fit.alpha[0] - oracle[0]).abs() < 1e-5 && (fit.alpha[1] - oracle[1]).abs() < 1e-5);
    assert!((fit.loglik - loglik(oracle, &y, &d)).abs() < 1e-6);

    let info = information(oracle, &y, &d);
    let diff = [fit.alpha[0] - truth[0], fit.alpha[1] - truth[1]];
    let mahalanobis = (diff[0] * (info[0][0] * diff[0] + info[0][1] * diff[1])
        + diff[1] * (info[1][0] * diff[0] + info[1][1] * diff[1]))
        .sqrt();
    assert!(mahalanobis <= 3.0, "{mahalanobis}");
}

#[test]
fn estimation_error_decays_at_root_n() {
    let truth = [0.2, 0.6];
    let errors: Vec<f64> = [1000usize, 4000, 16000]
        .iter()
        .map(|&n| {
            let mut e: Vec<f64> = (0..20)
                .map(|seed| {
                    let (y, d) = draw(truth, n, 100 + seed);
                    let a = fit_selection(Family::Logit, &y, &d).unwrap().alpha;
                    ((a[0] - truth[0]).powi(2) + (a[1] - truth[1]).powi(2)).sqrt()
                })
                .collect();
            e.sort_by(f64::total_cmp);
            0.5 * (e[9] + e[10])
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.3..=0.8).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn hosmer_lemeshow_accepts_the_generating_model() {
    let (y, d) = draw([0.2, 0.6], 5000, 77);
    let fit = fit_selection(Family::Logit, &y, &d).unwrap();
    let hl = hosmer_lemeshow(&fit, &y, &d, 10).unwrap();
    assert_eq!(hl.dof, 8);
    assert!(hl.pvalue > 0.01, "{hl:?}");
}

#[test]
fn hosmer_lemeshow_null_rejection_rate() {
    let rejections = (0..200)
        .filter(|&seed| {
            let (y, d) = draw([0.2, 0.6], 1000, 5000 + seed);
            let fit = fit_selection(Family::Logit, &y, &d).unwrap();
            hosmer_lemeshow(&fit, &y, &d, 10).unwrap().pvalue < 0.01
        })
        .count();
    assert!(rejections as f64 / 200.0 <= 0.03, "{rejections} of 200");
}

#[test]
fn hosmer_lemeshow_flags_the_wrong_link_under_strong_curvature() {
    // Selection that is not monotone in y cannot be fitted by either link.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y: Vec<f64> = (0..4000).map(|_| rng.random_range(-3.0..3.0)).collect();
    let d: Vec<bool> = y.iter().map(|&v| rng.random::<f64>() < logistic(2.0 - v * v)).collect();
    let fit = fit_selection(Family::Logit, &y, &d).unwrap();
    assert!(hosmer_lemeshow(&fit, &y, &d, 10).unwrap().pvalue < 1e-6);
}

#[test]
fn probit_fit_matches_its_own_likelihood_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y: Vec<f64> = (0..3000).map(|_| rng.random_range(-3.0..3.0)).collect();
    let known = SelectionModel::known(Family::Probit, [1.0, 0.5]);
    let d: Vec<bool> = y.iter().map(|&v| rng.random::<f64>() < known.raw_probability(v)).collect();
    let fit = fit_selection(Family::Probit, &y, &d).unwrap();
    assert!(fit.converged);
    for step in [[1e-3, 0.0], [0.0, 1e-3], [-1e-3, 1e-3]] {
        let nearby = ipwband::selection::log_likelihood(Family::Probit, [fit.alpha[0] + step[0], fit.alpha[1] + step[1]], &y, &d);
        assert!(nearby <= fit.loglik);
    }
    assert!((fit.alpha[0] - 1.0).abs() < 0.15 && (fit.alpha[1] - 0.5).abs() < 0.1, "{:?}", fit.alpha);
}
