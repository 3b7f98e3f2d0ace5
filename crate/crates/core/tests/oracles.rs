//! Recursion and closed forms checked against independent computations:
//! brute-force enumeration, Golub-Welsch quadrature and Monte Carlo.

use contagio::analytics::{joint_default_probability_homogeneous, kl_divergence};
use contagio::factor::{cond_contagion_distribution, ofg_loss_distribution};
use contagio::loss::{contagion_loss_distribution, infection_probability, marginal_default_probability};
use contagio::oracle::{enumerate_losses, simulate_losses, SimulationConfig};
use contagio::{gauss_hermite_rule, map_parameters, ContagionParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(rng: &mut ChaCha8Rng, n: usize) -> ContagionParams {
    let mut draw = |n| (0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    let p = draw(n);
    let u = draw(n);
    let v = draw(n);
    ContagionParams::new(p, u, v).unwrap()
}

#[test]
fn recursion_matches_enumeration_with_uneven_units() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=5 {
        for _ in 0..10 {
            let params = random_params(&mut rng, n);
            let units: Vec<u32> = (0..n).map(|_| rng.random_range(1..4)).collect();
            let rec = contagion_loss_distribution(&params, &units, 0.01).unwrap();
            let exact = enumerate_losses(&params, &units, 0.01).unwrap();
            assert!((exact.total_probability - 1.0).abs() < 1e-13);
            for (a, b) in rec.pmf.iter().zip(&exact.distribution.pmf) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn marginals_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..=6 {
        let params = random_params(&mut rng, n);
        let exact = enumerate_losses(&params, &vec![1; n], 0.1).unwrap();
        for i in 0..n {
            let m = marginal_default_probability(&params, i).unwrap();
            assert!((m - exact.marginals[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn four_name_homogeneous_joint_default() {
    for (p, u, v) in [(0.1, 0.3, 0.6), (0.4, 0.9, 0.2), (0.05, 0.0, 1.0)] {
        let params = ContagionParams::homogeneous(4, p, u, v).unwrap();
        let exact = enumerate_losses(&params, &[1; 4], 0.25).unwrap();
        let closed = joint_default_probability_homogeneous(p, u, v, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((exact.joint_default[i][j] - closed).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn infection_probability_matches_enumeration_for_four_names() {
    // P(some name other than 0 defaults idiosyncratically and infects) by
    // summing over X and V patterns of names 1..3.
    let params = ContagionParams::new(
        vec![0.2, 0.5, 0.1, 0.7],
        vec![0.3; 4],
        vec![0.9, 0.4, 0.8, 0.25],
    )
    .unwrap();
    let mut none = 1.0;
    for j in 1..4 {
        none *= 1.0 - params.p[j] * params.v[j];
    }
    let mut brute = 0.0;
    for mask in 0u32..64 {
        let mut prob = 1.0;
        let mut any = false;
        for j in 1..4 {
            let x = mask >> (2 * (j - 1)) & 1 == 1;
            let v = mask >> (2 * (j - 1) + 1) & 1 == 1;
            prob *= if x { params.p[j] } else { 1.0 - params.p[j] };
            prob *= if v { params.v[j] } else { 1.0 - params.v[j] };
            any |= x && v;
        }
        if any {
            brute += prob;
        }
    }
    let got = infection_probability(&params, Some(0)).unwrap();
    assert!((got - brute).abs() < 1e-15);
    assert!((got - (1.0 - none)).abs() < 1e-15);
}

#[test]
fn gauss_hermite_matches_golub_welsch() {
    for m in [2usize, 5, 10, 20, 40, 64] {
        let mut jacobi = DMatrix::<f64>::zeros(m, m);
        for k in 1..m {
            let b = (k as f64).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..m)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let rule = gauss_hermite_rule(m).unwrap();
        for (i, &(x, w)) in pairs.iter().enumerate() {
            assert!((rule.nodes[i] - x).abs() < 1e-9 * x.abs().max(1.0), "m={m} node {i}");
            assert!((rule.weights[i] - w).abs() < 1e-10, "m={m} weight {i}");
        }
    }
}

#[test]
fn ofg_small_rho_is_binomial() {
    let n = 40;
    let p: f64 = 0.07;
    let dist = ofg_loss_distribution(&vec![p; n], 1e-12, 10, &vec![1; n], 1.0 / n as f64).unwrap();
    let mut c = 1.0f64;
    for h in 0..=n {
        if h > 0 {
            c *= (n - h + 1) as f64 / h as f64;
        }
        let b = c * p.powi(h as i32) * (1.0 - p).powi((n - h) as i32);
        assert!((dist.pmf[h] - b).abs() < 1e-6);
    }
}

#[test]
fn cond_limits() {
    let n = 30;
    let p = vec![0.05; n];
    let mu = vec![0.1; n];
    let units = vec![1; n];
    let unit = 1.0 / n as f64;
    let no_contagion = cond_contagion_distribution(&p, 0.0, &mu, 0.25, 10, &units, unit).unwrap();
    let ofg = ofg_loss_distribution(&p, 0.25, 10, &units, unit).unwrap();
    for (a, b) in no_contagion.pmf.iter().zip(&ofg.pmf) {
        assert!((a - b).abs() < 1e-12);
    }
    let flat_factor = cond_contagion_distribution(&p, 0.4, &mu, 1e-12, 10, &units, unit).unwrap();
    let con = contagion_loss_distribution(&map_parameters(&p, 0.4, &mu).unwrap(), &units, unit).unwrap();
    for (a, b) in flat_factor.pmf.iter().zip(&con.pmf) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn monte_carlo_converges_to_recursion() {
    let n = 50;
    let params = map_parameters(&vec![0.05; n], 0.5, &vec![0.1; n]).unwrap();
    let exact = contagion_loss_distribution(&params, &vec![1; n], 1.0 / n as f64).unwrap();
    let kl = |sims| {
        let cfg = SimulationConfig {
            n_sims: sims,
            seed: 2024,
            params: params.clone(),
            loss_units: vec![1; n],
            unit_loss_fraction: 1.0 / n as f64,
        };
        kl_divergence(&exact.pmf, &simulate_losses(&cfg).unwrap().pmf).unwrap()
    };
    let coarse = kl(2_000);
    let fine = kl(100_000);
    assert!(fine < coarse, "{fine} !< {coarse}");
    assert!(fine < 2e-3);
}
