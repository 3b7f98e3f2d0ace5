//! Box-constrained Nelder-Mead. Trial points are projected onto the box.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Initial simplex edge as a fraction of the box width.
    pub initial_step: f64,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter below this.
    pub x_tol: f64,
    /// Iteration budget shared by all restarts.
    pub max_iterations: usize,
    /// Restart from the best vertex while that still improves by more
    /// than `f_tol`.
    pub restarts: usize,
}

impl NelderMeadOptions {
    pub fn bounded(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            lower,
            upper,
            initial_step: 0.1,
            f_tol: 1e-12,
            x_tol: 1e-10,
            max_iterations: 500,
            restarts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counter<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((xi, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *xi = xi.clamp(lo, hi);
    }
}

/// `a + t (b - a)`, projected.
fn along(a: &[f64], b: &[f64], t: f64, opts: &NelderMeadOptions) -> Vec<f64> {
    let mut x: Vec<f64> = a.iter().zip(b).map(|(&ai, &bi)| ai + t * (bi - ai)).collect();
    project(&mut x, &opts.lower, &opts.upper);
    x
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// One Nelder-Mead run from `x0`. Returns the best vertex, its value,
/// iterations used and whether the tolerances were met.
fn run<F: FnMut(&[f64]) -> f64>(
    f: &mut Counter<F>,
    x0: &[f64],
    budget: usize,
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    let mut simplex = vec![x0.to_vec()];
    for i in 0..n {
        let width = opts.upper[i] - opts.lower[i];
        let step = opts.initial_step * width;
        let mut v = x0.to_vec();
        // Step away from the nearer bound so the vertex stays distinct.
        v[i] = if x0[i] + step <= opts.upper[i] {
            x0[i] + step
        } else {
            x0[i] - step
        };
        project(&mut v, &opts.lower, &opts.upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f.eval(v)).collect();

    let mut iterations = 0;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        if spread <= opts.f_tol && diameter(&simplex) <= opts.x_tol {
            return (simplex[0].clone(), values[0], iterations, true);
        }
        if iterations >= budget {
            return (simplex[0].clone(), values[0], iterations, false);
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();

        let reflected = along(&centroid, &worst, -1.0, opts);
        let fr = f.eval(&reflected);
        if fr < values[0] {
            let expanded = along(&centroid, &worst, -2.0, opts);
            let fe = f.eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(&centroid, &worst, -0.5, opts);
            let fc = f.eval(&c);
            (c, fc)
        } else {
            let c = along(&centroid, &worst, 0.5, opts);
            let fc = f.eval(&c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = along(&best, &simplex[i], 0.5, opts);
            values[i] = f.eval(&simplex[i]);
        }
    }
}

/// Minimises `f` over the box from `x0`, restarting from the best point
/// with a fresh simplex while restarts keep improving the value.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    assert_eq!(x0.len(), opts.lower.len());
    assert_eq!(x0.len(), opts.upper.len());
    let mut counter = Counter { f, evaluations: 0 };
    let mut start = x0.to_vec();
    project(&mut start, &opts.lower, &opts.upper);

    let (mut x, mut value, mut iterations, mut converged) =
        run(&mut counter, &start, opts.max_iterations, opts);
    let mut step_opts = opts.clone();
    for _ in 0..opts.restarts {
        if iterations >= opts.max_iterations {
            break;
        }
        step_opts.initial_step = (step_opts.initial_step * 0.5).max(1e-6);
        let (x2, v2, it2, c2) = run(&mut counter, &x, opts.max_iterations - iterations, &step_opts);
        iterations += it2;
        let improved = value - v2 > opts.f_tol;
        if v2 <= value {
            x = x2;
            value = v2;
            converged = c2;
        }
        if !improved {
            break;
        }
    }
    Minimum {
        x,
        value,
        iterations,
        evaluations: counter.evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_interior_minimum() {
        let opts = NelderMeadOptions::bounded(vec![0.0; 2], vec![1.0; 2]);
        let m = minimize(|x| (x[0] - 0.3).powi(2) + 2.0 * (x[1] - 0.7).powi(2), &[0.5, 0.5], &opts);
        assert!((m.x[0] - 0.3).abs() < 1e-5 && (m.x[1] - 0.7).abs() < 1e-5, "{m:?}");
        assert!(m.value < 1e-10);
    }

    #[test]
    fn absolute_value_kink() {
        let opts = NelderMeadOptions::bounded(vec![0.05], vec![0.95]);
        let m = minimize(|x| (x[0] - 0.123_456).abs(), &[0.5], &opts);
        assert!((m.x[0] - 0.123_456).abs() < 1e-9, "{m:?}");
    }

    #[test]
    fn minimum_on_the_bound() {
        let opts = NelderMeadOptions::bounded(vec![0.05; 3], vec![0.95; 3]);
        let m = minimize(|x| x[0] + (x[1] - 0.5).powi(2) - x[2], &[0.5; 3], &opts);
        assert!((m.x[0] - 0.05).abs() < 1e-9, "{m:?}");
        assert!((m.x[2] - 0.95).abs() < 1e-9, "{m:?}");
        assert!((m.x[1] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn rosenbrock_in_box() {
        let mut opts = NelderMeadOptions::bounded(vec![-2.0; 2], vec![2.0; 2]);
        opts.max_iterations = 2000;
        let m = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &opts,
        );
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{m:?}");
    }

    #[test]
    fn penalty_regions_are_avoided() {
        let opts = NelderMeadOptions::bounded(vec![0.0], vec![1.0]);
        let m = minimize(|x| if x[0] > 0.8 { 1e6 } else { (x[0] - 0.6).powi(2) }, &[0.5], &opts);
        assert!((m.x[0] - 0.6).abs() < 1e-5);
    }
}
