//! Unconstrained minimization for the three-parameter likelihood.
//!
//! A BFGS quasi-Newton iteration with backtracking line search drives the
//! estimation; a Nelder-Mead simplex restart takes over when the line
//! search stalls. Both operate on plain length-3 arrays.

use nalgebra::{Matrix3, Vector3};

/// Termination tolerances and iteration budget.
#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    /// Converged when the gradient norm falls below this ...
    pub gradient_tolerance: f64,
    /// ... and the last step norm falls below this.
    pub step_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-10,
            max_iterations: 500,
        }
    }
}

/// Outcome of a minimization.
#[derive(Debug, Clone, Copy)]
pub struct OptimResult {
    pub x: [f64; 3],
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// The line search failed to make progress before the tolerances were
    /// met; callers may restart with a derivative-free method.
    pub line_search_failed: bool,
}

/// BFGS with an Armijo backtracking line search.
pub fn bfgs<F, G>(f: F, grad: G, x0: [f64; 3], opts: &OptimOptions) -> OptimResult
where
    F: Fn(&[f64; 3]) -> f64,
    G: Fn(&[f64; 3]) -> [f64; 3],
{
    let mut x = Vector3::from_column_slice(&x0);
    let mut fx = f(&[x[0], x[1], x[2]]);
    let mut g = Vector3::from_column_slice(&grad(&[x[0], x[1], x[2]]));
    let mut h_inv = Matrix3::identity();

    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    let mut line_search_failed = false;

    while iterations < opts.max_iterations {
        if g.norm() < opts.gradient_tolerance && last_step < opts.step_tolerance {
            return OptimResult {
                x: [x[0], x[1], x[2]],
                value: fx,
                converged: true,
                iterations,
                line_search_failed: false,
            };
        }
        iterations += 1;

        let mut direction = -(h_inv * g);
        if direction.dot(&g) >= 0.0 {
            // not a descent direction; reset the approximation
            h_inv = Matrix3::identity();
            direction = -g;
        }

        // Armijo backtracking
        const C1: f64 = 1e-4;
        let mut alpha = 1.0;
        let slope = g.dot(&direction);
        let mut accepted = None;
        for _ in 0..60 {
            let xt = x + direction * alpha;
            let ft = f(&[xt[0], xt[1], xt[2]]);
            if ft.is_finite() && ft <= fx + C1 * alpha * slope {
                accepted = Some((xt, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            line_search_failed = true;
            break;
        };

        let g_new = Vector3::from_column_slice(&grad(&[x_new[0], x_new[1], x_new[2]]));
        let s = x_new - x;
        let y = g_new - g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            // standard BFGS inverse update
            let rho = 1.0 / sy;
            let i = Matrix3::identity();
            let left = i - (s * y.transpose()) * rho;
            let right = i - (y * s.transpose()) * rho;
            h_inv = left * h_inv * right + (s * s.transpose()) * rho;
        }

        last_step = s.norm();
        x = x_new;
        fx = f_new;
        g = g_new;

        if g.norm() < opts.gradient_tolerance && last_step < opts.step_tolerance {
            return OptimResult {
                x: [x[0], x[1], x[2]],
                value: fx,
                converged: true,
                iterations,
                line_search_failed: false,
            };
        }
    }

    OptimResult {
        x: [x[0], x[1], x[2]],
        value: fx,
        converged: g.norm() < opts.gradient_tolerance && last_step < opts.step_tolerance,
        iterations,
        line_search_failed,
    }
}

/// Nelder-Mead simplex search; derivative-free fallback.
pub fn nelder_mead<F>(f: F, x0: [f64; 3], scale: f64, opts: &OptimOptions) -> OptimResult
where
    F: Fn(&[f64; 3]) -> f64,
{
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mut simplex: Vec<[f64; 3]> = vec![x0; 4];
    for i in 0..3 {
        simplex[i + 1][i] += scale.max(1e-6);
    }
    let mut values: Vec<f64> = simplex.iter().map(&f).collect();

    let mut iterations = 0;
    while iterations < opts.max_iterations * 4 {
        iterations += 1;
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let best = order[0];
        let worst = order[3];
        let second_worst = order[2];

        // termination: simplex collapsed in both x and f
        let spread_x = (0..3)
            .map(|d| {
                let lo = simplex.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
                let hi = simplex
                    .iter()
                    .map(|p| p[d])
                    .fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0_f64, f64::max);
        let spread_f = values[worst] - values[best];
        if spread_x < opts.step_tolerance && spread_f.abs() < 1e-12 * (1.0 + values[best].abs()) {
            return OptimResult {
                x: simplex[best],
                value: values[best],
                converged: true,
                iterations,
                line_search_failed: false,
            };
        }

        // centroid of all but the worst
        let mut centroid = [0.0; 3];
        for (i, p) in simplex.iter().enumerate() {
            if i != worst {
                for d in 0..3 {
                    centroid[d] += p[d] / 3.0;
                }
            }
        }
        let point_along = |t: f64| {
            let mut p = [0.0; 3];
            for d in 0..3 {
                p[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
            }
            p
        };

        let reflected = point_along(-ALPHA);
        let f_reflected = f(&reflected);
        if f_reflected < values[best] {
            let expanded = point_along(-GAMMA);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = if f_reflected < values[worst] {
                point_along(-RHO)
            } else {
                point_along(RHO)
            };
            let f_contracted = f(&contracted);
            if f_contracted < values[worst].min(f_reflected) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // shrink toward the best vertex
                for i in 0..4 {
                    if i != best {
                        for d in 0..3 {
                            simplex[i][d] =
                                simplex[best][d] + SIGMA * (simplex[i][d] - simplex[best][d]);
                        }
                        values[i] = f(&simplex[i]);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    OptimResult {
        x: simplex[order[0]],
        value: values[order[0]],
        converged: false,
        iterations,
        line_search_failed: false,
    }
}
