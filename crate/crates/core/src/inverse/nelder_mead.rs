//! Derivative-free simplex minimisation on the unit box.

/// Outcome of one simplex run.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Minimum<const N: usize> {
    pub x: [f64; N],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub initial_step: f64,
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
}

fn clamp_unit<const N: usize>(mut x: [f64; N]) -> [f64; N] {
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    x
}

/// Nelder–Mead with the standard coefficients (1, 2, ½, ½). Vertices are
/// projected onto `[0, 1]^N` so every evaluated point is admissible.
pub(crate) fn minimize<const N: usize>(f: impl Fn(&[f64; N]) -> f64, start: [f64; N], s: Settings) -> Minimum<N> {
    let eval = |x: [f64; N]| {
        let x = clamp_unit(x);
        let v = f(&x);
        (x, if v.is_nan() { f64::INFINITY } else { v })
    };

    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push(eval(start));
    for i in 0..N {
        let mut x = start;
        // Step away from the nearer wall so the vertex stays distinct after projection.
        x[i] += if x[i] + s.initial_step <= 1.0 { s.initial_step } else { -s.initial_step };
        simplex.push(eval(x));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < s.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[N].1);
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= s.f_tol && size <= s.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / N as f64;
            }
        }
        let along = |t: f64| -> [f64; N] { std::array::from_fn(|i| centroid[i] + t * (simplex[N].0[i] - centroid[i])) };

        let reflected = eval(along(-1.0));
        if reflected.1 < simplex[0].1 {
            let expanded = eval(along(-2.0));
            simplex[N] = if expanded.1 < reflected.1 { expanded } else { reflected };
        } else if reflected.1 < simplex[N - 1].1 {
            simplex[N] = reflected;
        } else {
            let contracted = if reflected.1 < simplex[N].1 { eval(along(-0.5)) } else { eval(along(0.5)) };
            if contracted.1 < simplex[N].1.min(reflected.1) {
                simplex[N] = contracted;
            } else {
                let x0 = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    *v = eval(std::array::from_fn(|i| x0[i] + 0.5 * (v.0[i] - x0[i])));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum { x: simplex[0].0, f: simplex[0].1, iterations, converged }
}
