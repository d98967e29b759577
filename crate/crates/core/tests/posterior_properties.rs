use exonet::model::{standardize, Dag, Dataset, EffectPrior, Hyper};
use exonet::numerics::{Matrix, Vector};
use exonet::posterior::{assemble_sigma, posterior_bayes, posterior_residual, NetworkPosterior};
use exonet::scores::MetricKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

// x_i = X_P γ + Q b + ε with fixed γ = (0.8, −0.5), ψ = 1 and a two-group design.
fn regression(n: usize, seed: u64) -> (Vector, Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = Matrix::from_fn(n, 2, |r, c| if (r < n / 2) == (c == 0) { 1.0 } else { 0.0 });
    let b = [1.5, -0.7];
    let xp = Matrix::from_fn(n, 2, |_, _| normal(&mut rng));
    let xi = Vector::from_fn(n, |r, _| {
        let group = if r < n / 2 { b[0] } else { b[1] };
        0.8 * xp[(r, 0)] - 0.5 * xp[(r, 1)] + group + normal(&mut rng)
    });
    (xi, xp, q)
}

#[test]
fn posterior_means_concentrate_on_the_truth() {
    let truth = Vector::from_vec(vec![0.8, -0.5]);
    let h = Hyper::default();
    let prior = EffectPrior::Precision(1.0);
    let sizes = [50, 100, 200, 400, 800, 1600, 3200];
    let mut bayes_medians = Vec::new();
    let mut resid_medians = Vec::new();
    for &n in &sizes {
        let mut eb = Vec::new();
        let mut er = Vec::new();
        for rep in 0..50u64 {
            let (xi, xp, q) = regression(n, 1_000 * n as u64 + rep);
            eb.push((posterior_bayes(&xi, &xp, &q, &prior, &h).unwrap().mu - &truth).norm());
            er.push((posterior_residual(&xi, &xp, &q, &h).unwrap().mu - &truth).norm());
        }
        for (errs, out) in [(&mut eb, &mut bayes_medians), (&mut er, &mut resid_medians)] {
            errs.sort_by(f64::total_cmp);
            out.push((errs[24] + errs[25]) / 2.0);
        }
    }
    for medians in [&bayes_medians, &resid_medians] {
        for w in medians.windows(2) {
            assert!(w[1] <= w[0], "{medians:?}");
        }
    }
}

#[test]
fn plug_in_sigma_matches_regenerated_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let g = Dag::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
    let n = 200;
    let mut x = Matrix::zeros(n, 4);
    for r in 0..n {
        let a = normal(&mut rng);
        let b = 0.7 * a + normal(&mut rng) * 0.8;
        let c = -0.4 * a + normal(&mut rng);
        let d = 0.5 * b + 0.6 * c + normal(&mut rng) * 0.5;
        for (k, v) in [a, b, c, d].into_iter().enumerate() {
            x[(r, k)] = v;
        }
    }
    let ds = standardize(&Dataset::without_exogenous(x).unwrap()).unwrap();
    let net = NetworkPosterior::new(MetricKind::Bge, &g, &ds, &Hyper::default()).unwrap();
    let sigma = assemble_sigma(&net, &g).unwrap();

    // Regenerate from the plug-in parameters in topological order.
    let draws = 100_000;
    let order = g.topological_order();
    let mut acc = Matrix::zeros(4, 4);
    let mut sample = [0.0; 4];
    for _ in 0..draws {
        for &i in &order {
            let np = &net.nodes[i];
            let psi = np.psi_mean().unwrap();
            let mut v = normal(&mut rng) * psi.sqrt();
            for (slot, &j) in g.parents(i).iter().enumerate() {
                v += np.mu[slot] * sample[j];
            }
            sample[i] = v;
        }
        let s = Vector::from_row_slice(&sample);
        acc += &s * s.transpose();
    }
    let empirical = acc / draws as f64;
    let rel = (&empirical - sigma.matrix()).norm() / sigma.matrix().norm();
    assert!(rel < 0.05, "relative error {rel}\n{empirical}\n{}", sigma.matrix());
}
