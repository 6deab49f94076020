//! Adaptive Nelder–Mead simplex search (Gao & Han coefficients), with an
//! evaluation cap.

/// Iterations per dimension with the value spread below `f_tol` after which
/// the search stops even if the simplex is still wide.
const SETTLED_ITERATIONS: usize = 20;

#[derive(Clone, Debug)]
pub struct Settings {
    /// Edge length of the initial axis-aligned simplex.
    pub step: f64,
    /// Stop once `max f − min f` over the simplex drops below this...
    pub f_tol: f64,
    /// ...and every vertex lies within this distance (max-norm) of the best,
    /// or the spread has stayed below `f_tol` for a while.
    pub x_tol: f64,
    pub max_evals: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            step: 0.1,
            f_tol: 1e-14,
            x_tol: 1e-9,
            max_evals: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    /// Terminated by the tolerances rather than by `max_evals`.
    pub converged: bool,
}

pub fn minimize<F>(mut f: F, x0: &[f64], settings: &Settings) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    if settings.max_evals == 0 {
        return Minimum {
            x: x0.to_vec(),
            f: f64::INFINITY,
            evals: 0,
            converged: false,
        };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        if evals >= settings.max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += settings.step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }
    if simplex.len() < n + 1 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, f) = simplex.swap_remove(0);
        return Minimum {
            x,
            f,
            evals,
            converged: false,
        };
    }

    let mut converged = false;
    let mut settled = 0usize;
    let mut centroid = vec![0.0; n];
    let along = |c: &[f64], w: &[f64], k: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + k * (wi - ci)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = simplex
            .iter()
            .skip(1)
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= settings.f_tol {
            settled += 1;
        } else {
            settled = 0;
        }
        // Directions the objective ignores never shrink below `x_tol`, so a
        // long enough run of settled values also counts.
        if settled > 0 && (spread <= settings.x_tol || settled >= SETTLED_ITERATIONS * n) {
            converged = true;
            break;
        }
        if evals >= settings.max_evals {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            centroid.iter_mut().zip(x).for_each(|(c, xi)| *c += xi / nf);
        }
        let worst_x = simplex[n].0.clone();
        let second_worst = simplex[n - 1].1;

        let xr = along(&centroid, &worst_x, -alpha);
        let fr = eval(&xr, &mut evals);
        if fr < best {
            let xe = along(&centroid, &worst_x, -alpha * beta);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (xr, fr);
            continue;
        }
        // Contraction: outside if the reflection improved on the worst point.
        let (xc, fc) = if fr < worst {
            let xc = along(&centroid, &worst_x, -alpha * gamma);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(&centroid, &worst_x, gamma);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if evals >= settings.max_evals {
                break;
            }
            let xs = along(&x_best, &vertex.0, delta);
            let fs = eval(&xs, &mut evals);
            *vertex = (xs, fs);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        evals,
        converged,
    }
}
