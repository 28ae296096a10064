//! Bounded Nelder–Mead simplex minimization.
//!
//! Trial points are projected onto the box before evaluation, which keeps the
//! method derivative-free and lets it settle on a bound when the optimum lies
//! there.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop once every vertex is within this distance of the best one
    /// (per coordinate) and the value spread is below `f_tol`.
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-6,
            f_tol: 1e-14,
            max_evaluations: 5_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn project<const N: usize>(mut x: [f64; N], bounds: &[(f64, f64); N]) -> [f64; N] {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
    x
}

fn affine<const N: usize>(a: &[f64; N], b: &[f64; N], t: f64) -> [f64; N] {
    // a + t·(b − a)
    let mut out = *a;
    for k in 0..N {
        out[k] = a[k] + t * (b[k] - a[k]);
    }
    out
}

/// Minimizes `f` inside `bounds` starting from `start` with an axis-aligned
/// initial simplex of edge `step` (shrunk toward the interior at a bound).
///
/// A simplex flattened against a bound can collapse away from the optimum,
/// so the search restarts from the best point until a restart stops
/// improving it.
pub fn nelder_mead<const N: usize>(
    mut f: impl FnMut(&[f64; N]) -> f64,
    start: [f64; N],
    step: [f64; N],
    bounds: &[(f64, f64); N],
    options: NelderMeadOptions,
) -> Minimum<N> {
    let mut best = descend(&mut f, start, step, bounds, options);
    while best.converged && best.evaluations < options.max_evaluations {
        let budget = NelderMeadOptions {
            max_evaluations: options.max_evaluations - best.evaluations,
            ..options
        };
        let next = descend(&mut f, best.x, step, bounds, budget);
        let moved = best
            .x
            .iter()
            .zip(&next.x)
            .any(|(a, b)| (a - b).abs() > options.x_tol);
        let improved = next.value < best.value - options.f_tol;
        let evaluations = best.evaluations + next.evaluations;
        if next.value <= best.value {
            best = Minimum {
                evaluations,
                ..next
            };
        } else {
            best.evaluations = evaluations;
        }
        if !(moved && improved) {
            break;
        }
    }
    best
}

fn descend<const N: usize>(
    f: &mut impl FnMut(&[f64; N]) -> f64,
    start: [f64; N],
    step: [f64; N],
    bounds: &[(f64, f64); N],
    options: NelderMeadOptions,
) -> Minimum<N> {
    let start = project(start, bounds);
    let mut simplex = [[0.0; N]; 8];
    assert!(N < simplex.len(), "nelder_mead supports up to 7 dimensions");
    let mut values = [0.0; 8];
    let m = N + 1;
    simplex[0] = start;
    for k in 0..N {
        let mut v = start;
        let (lo, hi) = bounds[k];
        v[k] = if start[k] + step[k] <= hi {
            start[k] + step[k]
        } else {
            (start[k] - step[k]).max(lo)
        };
        simplex[k + 1] = v;
    }
    let mut evaluations = 0;
    for k in 0..m {
        values[k] = f(&simplex[k]);
        evaluations += 1;
    }

    let mut converged = false;
    while evaluations < options.max_evaluations {
        // order vertices by value, best first (insertion sort, stable)
        for i in 1..m {
            let mut j = i;
            while j > 0 && values[j].total_cmp(&values[j - 1]).is_lt() {
                values.swap(j, j - 1);
                simplex.swap(j, j - 1);
                j -= 1;
            }
        }
        let spread = values[m - 1] - values[0];
        let size = (1..m)
            .flat_map(|k| (0..N).map(move |d| (k, d)))
            .map(|(k, d)| (simplex[k][d] - simplex[0][d]).abs())
            .fold(0.0, f64::max);
        if size <= options.x_tol && spread.abs() <= options.f_tol {
            converged = true;
            break;
        }

        let mut centroid = [0.0; N];
        for v in &simplex[..N] {
            for d in 0..N {
                centroid[d] += v[d] / N as f64;
            }
        }
        let worst = simplex[N];
        let reflected = project(affine(&centroid, &worst, -1.0), bounds);
        let f_r = f(&reflected);
        evaluations += 1;
        if f_r < values[0] {
            let expanded = project(affine(&centroid, &worst, -2.0), bounds);
            let f_e = f(&expanded);
            evaluations += 1;
            if f_e < f_r {
                simplex[N] = expanded;
                values[N] = f_e;
            } else {
                simplex[N] = reflected;
                values[N] = f_r;
            }
            continue;
        }
        if f_r < values[N - 1] {
            simplex[N] = reflected;
            values[N] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < values[N] {
            let c = project(affine(&centroid, &reflected, 0.5), bounds);
            (c, f(&c))
        } else {
            let c = project(affine(&centroid, &worst, 0.5), bounds);
            (c, f(&c))
        };
        evaluations += 1;
        if f_c < values[N].min(f_r) {
            simplex[N] = contracted;
            values[N] = f_c;
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0];
        for k in 1..m {
            simplex[k] = affine(&best, &simplex[k], 0.5);
            values[k] = f(&simplex[k]);
            evaluations += 1;
        }
    }

    let best = (0..m)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    Minimum {
        x: simplex[best],
        value: values[best],
        evaluations,
        converged,
    }
}
