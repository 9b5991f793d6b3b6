//! Bootstrap and SURE penalties against Monte Carlo oracles.

use covtune::boot_frobenius::{wishart_variances, VarianceEstimator};
use covtune::boot_operator::boot_operator_select;
use covtune::estimators::linear_weights;
use covtune::selection::{oracle_select, Norm};
use covtune::{
    boot_frobenius_select, boot_penalty, frobenius_constant, product_moment_estimate, sample_cov, sample_mvn,
    sure_penalty, sure_select, BootKind, BootModel, Dataset, EstimatorSpec, Family, ModelSpec, RngStream, SymMatrix,
};
use proptest::prelude::*;

/// Running mean and standard error.
#[derive(Debug, Clone, Default)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }
    fn mean(&self) -> f64 {
        self.sum / self.n
    }
    fn se(&self) -> f64 {
        let m = self.mean();
        ((self.sum_sq / self.n - m * m) / (self.n - 1.0)).sqrt()
    }
}

fn weighted_sum(w: &SymMatrix, v: &SymMatrix) -> f64 {
    w.iter_lower()
        .map(|(i, j, x)| {
            let t = x * v.get(i, j);
            if i == j {
                t
            } else {
                2.0 * t
            }
        })
        .sum()
}

fn model2(p: usize, rho: f64) -> SymMatrix {
    ModelSpec::new(2, rho, 0.0, p).unwrap().build_sigma().unwrap()
}

fn band_spec(p: usize) -> EstimatorSpec {
    EstimatorSpec::new(Family::Band, (0..p).map(|k| k as f64).collect()).unwrap()
}

#[test]
fn penalty_matches_independent_simulation() {
    let (p, n, reps) = (3, 20, 100_000);
    let sigma = SymMatrix::identity(p);
    let spec = EstimatorSpec::new(Family::Band, vec![1.0]).unwrap();
    let model = BootModel {
        mean: vec![0.0; p],
        cov: sigma.clone(),
        kind: BootKind::Ultimate,
        clipped_mass: 0.0,
    };
    let boot = boot_penalty(&spec, n, &model, reps, &RngStream::new(1, 0)).unwrap()[0];

    // 2 sum_ij w_ij (s_ij - sigma_ij)^2 has mean 2 sum_ij w_ij Var(s_ij)
    let w = linear_weights(Family::Band, p, 1).unwrap();
    let root = RngStream::new(2, 0);
    let mut q = Moments::default();
    for r in 0..reps {
        let s = sample_cov(&sample_mvn(&[0.0; 3], &sigma, n, &root.child(r as u64)).unwrap()).unwrap();
        let dev = s.sub(&sigma).unwrap();
        q.push(2.0 * weighted_sum(&w, &dev.map(|_, _, d| d * d)));
    }
    // both estimators carry about the same Monte Carlo error
    let tol = 3.0 * std::f64::consts::SQRT_2 * q.se();
    assert!(
        (boot - q.mean()).abs() < tol,
        "boot {boot} vs simulation {} (tol {tol})",
        q.mean()
    );
    // closed form: 2 (3 * 2 + 4 * 1) / 19
    assert!((q.mean() - 20.0 / 19.0).abs() < 3.0 * q.se());
}

#[test]
fn doubling_resamples_changes_penalty_within_error() {
    let data = sample_mvn(&[0.0; 3], &model2(3, 0.5), 20, &RngStream::new(3, 0)).unwrap();
    let model = BootModel::ultimate(&data).unwrap();
    let spec = band_spec(3);
    let runs: Vec<Vec<f64>> = (0..10)
        .map(|k| boot_penalty(&spec, 20, &model, 10_000, &RngStream::new(100 + k, 0)).unwrap())
        .collect();
    let doubled = boot_penalty(&spec, 20, &model, 20_000, &RngStream::new(100, 0)).unwrap();
    for g in 0..3 {
        let mut m = Moments::default();
        runs.iter().for_each(|r| m.push(r[g]));
        // spread of single runs is the standard error of one B = 1e4 estimate
        let se = m.se() * 10f64.sqrt();
        assert!(
            (doubled[g] - runs[0][g]).abs() < 2.0 * se,
            "grid {g}: {} vs {} (se {se})",
            doubled[g],
            runs[0][g]
        );
    }
}

#[test]
fn ultimate_bootstrap_matches_plug_in_penalty() {
    let (p, n) = (4, 30);
    let data = sample_mvn(&[0.0; 4], &model2(p, 0.6), n, &RngStream::new(4, 0)).unwrap();
    let model = BootModel::ultimate(&data).unwrap();
    // Var*(s*_ij) under N(xbar, S) is exactly the plug-in variance
    let v = wishart_variances(&sample_cov(&data).unwrap(), n, VarianceEstimator::PlugIn).unwrap();
    for family in [Family::Band, Family::Taper] {
        let spec = EstimatorSpec::new(family, (0..p).map(|k| k as f64).collect()).unwrap();
        let batches: Vec<Vec<f64>> = (0..20)
            .map(|k| boot_penalty(&spec, n, &model, 2_500, &RngStream::new(7, k)).unwrap())
            .collect();
        for (g, lambda) in (0..p).enumerate() {
            let mut m = Moments::default();
            batches.iter().for_each(|b| m.push(b[g]));
            let want = 2.0 * weighted_sum(&linear_weights(family, p, lambda).unwrap(), &v);
            assert!(
                (m.mean() - want).abs() < 4.0 * m.se(),
                "{family} lambda {lambda}: {} vs {want} (se {})",
                m.mean(),
                m.se()
            );
        }
    }
}

#[test]
fn unbiased_variance_estimate_and_plug_in_bias() {
    let (p, reps) = (3, 10_000);
    let sigma = SymMatrix::identity(p);
    for n in [20usize, 40] {
        let nu = (n - 1) as f64;
        let root = RngStream::new(5, n as u64);
        let mut unbiased = [Moments::default(), Moments::default()];
        let mut plug = [Moments::default(), Moments::default()];
        for r in 0..reps {
            let s = sample_cov(&sample_mvn(&[0.0; 3], &sigma, n, &root.child(r)).unwrap()).unwrap();
            let u = wishart_variances(&s, n, VarianceEstimator::Unbiased).unwrap();
            let q = wishart_variances(&s, n, VarianceEstimator::PlugIn).unwrap();
            unbiased[0].push(u.get(1, 1));
            unbiased[1].push(u.get(2, 0));
            plug[0].push(q.get(1, 1) - u.get(1, 1));
            plug[1].push(q.get(2, 0) - u.get(2, 0));
        }
        // truth: 2 / nu on the diagonal, 1 / nu off it
        assert!((unbiased[0].mean() - 2.0 / nu).abs() < 3.0 * unbiased[0].se());
        assert!((unbiased[1].mean() - 1.0 / nu).abs() < 3.0 * unbiased[1].se());
        // plug-in bias under identity truth: 4 / nu^2 and 1 / nu^2, so the
        // relative bias decays like 1 / n
        assert!((plug[0].mean() - 4.0 / (nu * nu)).abs() < 3.0 * plug[0].se());
        assert!((plug[1].mean() - 1.0 / (nu * nu)).abs() < 3.0 * plug[1].se());
    }
}

#[test]
fn frobenius_constant_under_identity() {
    let (p, n, reps) = (10, 100, 4_000);
    let sigma = SymMatrix::identity(p);
    let root = RngStream::new(6, 0);
    let mut m = Moments::default();
    for r in 0..reps {
        m.push(frobenius_constant(&sample_mvn(&[0.0; 10], &sigma, n, &root.child(r)).unwrap()).unwrap());
    }
    let want = 110.0 / 99.0;
    assert!(
        (m.mean() - want).abs() < 3.0 * m.se(),
        "{} vs {want} (se {})",
        m.mean(),
        m.se()
    );
}

#[test]
fn product_estimator_is_unbiased_for_squared_variance() {
    for n in [10usize, 20] {
        let root = RngStream::new(8, n as u64);
        let mut m = Moments::default();
        for r in 0..100_000 {
            let data = sample_mvn(&[0.0], &SymMatrix::identity(1), n, &root.child(r)).unwrap();
            m.push(product_moment_estimate(&data, 0, 0, 0, 0).unwrap());
        }
        assert!(
            (m.mean() - 1.0).abs() < 3.0 * m.se(),
            "n {n}: {} (se {})",
            m.mean(),
            m.se()
        );
    }
}

#[test]
fn bootstrap_and_sure_choices_agree() {
    let (n, p, reps) = (50, 20, 100);
    let sigma = model2(p, 0.5);
    let spec = band_spec(p);
    let root = RngStream::new(9, 0);
    let mut close = 0;
    for r in 0..reps {
        let data = sample_mvn(&vec![0.0; p], &sigma, n, &root.derive(&[r, 0])).unwrap();
        let boot = boot_frobenius_select(&spec, &data, 500, &root.derive(&[r, 1]))
            .unwrap()
            .lambda;
        let sure = sure_select(&spec, &data).unwrap().lambda;
        if (boot - sure).abs() <= 1.0 {
            close += 1;
        }
    }
    assert!(close >= 90, "only {close} of {reps} within one bandwidth");
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let k = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (k * (k * k - 1.0))
}

#[test]
fn operator_risk_ranks_follow_truth() {
    let (p, n) = (5, 50);
    let sigma = model2(p, 0.5);
    let spec = band_spec(p);
    let root = RngStream::new(10, 0);
    let mut truth = vec![Moments::default(); p];
    for r in 0..10_000 {
        let s = sample_cov(&sample_mvn(&[0.0; 5], &sigma, n, &root.child(r)).unwrap()).unwrap();
        for (g, &l) in spec.grid().iter().enumerate() {
            let d = covtune::apply(&spec, &s, l).unwrap().sub(&sigma).unwrap();
            truth[g].push(covtune::operator_norm(&d).unwrap().powi(2));
        }
    }
    let truth: Vec<f64> = truth.iter().map(Moments::mean).collect();
    let data = sample_mvn(&[0.0; 5], &sigma, n, &RngStream::new(11, 0)).unwrap();
    let estimate = boot_operator_select(&spec, &data, 2_000, &RngStream::new(12, 0))
        .unwrap()
        .scores();
    let rho = spearman(&estimate, &truth);
    assert!(
        rho >= 0.8,
        "rank correlation {rho}: estimate {estimate:?} truth {truth:?}"
    );
}

// Fails as written: l_1 of the estimated Gamma* is strongly inflated at small
// bandwidths when p = 50 and n = 100 (2.53 against a true 0.40 at lambda 4),
// so the bootstrap picks lambda 14 while the oracle quartiles are [4, 5].
#[test]
#[ignore = "known failure: leading eigenvalue of the estimated Gamma* is biased upward at p = 50, n = 100"]
fn operator_bootstrap_lands_in_oracle_range() {
    let model = ModelSpec::new(3, 0.6, 0.5, 50).unwrap();
    let sigma = model.build_sigma().unwrap();
    let spec = EstimatorSpec::new(Family::Taper, (0..50).map(|k| k as f64).collect()).unwrap();
    let root = RngStream::new(13, 0);
    let mut chosen: Vec<f64> = (0..100)
        .map(|r| {
            let s = sample_cov(&sample_mvn(&[0.0; 50], &sigma, 100, &root.child(r)).unwrap()).unwrap();
            oracle_select(&spec, &s, &sigma, Norm::Operator).unwrap().lambda
        })
        .collect();
    chosen.sort_by(f64::total_cmp);
    let (q1, q3) = (chosen[24], chosen[74]);
    let data = sample_mvn(&[0.0; 50], &sigma, 100, &RngStream::new(14, 0)).unwrap();
    let lambda = boot_operator_select(&spec, &data, 200, &RngStream::new(15, 0))
        .unwrap()
        .lambda;
    assert!(
        q1 <= lambda && lambda <= q3,
        "selected {lambda}, oracle quartiles [{q1}, {q3}]"
    );
}

fn small_data(seed: u64, n: usize, p: usize) -> Dataset {
    sample_mvn(&vec![0.0; p], &model2(p, 0.4), n, &RngStream::new(seed, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sure_penalty_is_monotone(seed in 0u64..10_000, n in 3usize..30, p in 1usize..12) {
        let data = small_data(seed, n, p);
        for family in [Family::Band, Family::Taper] {
            let spec = EstimatorSpec::new(family, (0..p).map(|k| k as f64).collect()).unwrap();
            let pen = sure_penalty(&spec, &data).unwrap();
            prop_assert!(pen.iter().all(|&x| x >= 0.0));
            prop_assert!(pen.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
