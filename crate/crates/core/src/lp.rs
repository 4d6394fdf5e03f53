//! Phase-one simplex for small dense linear feasibility problems.
//!
//! Finds `x >= 0` with `A_eq x = b_eq` and `A_le x <= b_le`, or reports that
//! none exists. Pivoting follows Bland's rule, so the method terminates on
//! degenerate problems; the problems solved here have at most a few dozen
//! rows and columns.

const PIVOT_EPS: f64 = 1e-12;

/// A linear constraint `coeffs · x (= or <=) rhs`.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Row { coeffs, rhs }
    }
}

/// Returns a feasible point, or `None` when the phase-one optimum exceeds
/// `tol` (the total constraint violation that can not be removed).
pub fn find_feasible(num_vars: usize, equalities: &[Row], inequalities: &[Row], tol: f64) -> Option<Vec<f64>> {
    let m = equalities.len() + inequalities.len();
    if m == 0 {
        return Some(vec![0.0; num_vars]);
    }
    let num_slack = inequalities.len();
    let art0 = num_vars + num_slack;
    let cols = art0 + m;
    let width = cols + 1;
    let mut tab = vec![0.0; m * width];
    let mut basis = vec![0usize; m];

    for (r, row) in equalities.iter().chain(inequalities).enumerate() {
        debug_assert_eq!(row.coeffs.len(), num_vars);
        let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        let line = &mut tab[r * width..(r + 1) * width];
        for (j, c) in row.coeffs.iter().enumerate() {
            line[j] = sign * c;
        }
        if r >= equalities.len() {
            line[num_vars + (r - equalities.len())] = sign;
        }
        line[art0 + r] = 1.0;
        line[cols] = sign * row.rhs;
        basis[r] = art0 + r;
    }

    // Reduced costs of the phase-one objective (minimize the artificial sum).
    let mut cost = vec![0.0; width];
    for r in 0..m {
        for j in 0..width {
            if j < art0 || j == cols {
                cost[j] -= tab[r * width + j];
            }
        }
    }

    // Bland's rule guarantees termination; the cap only guards against
    // floating-point cycling.
    let max_iters = 50 * (cols + m) + 100;
    for _ in 0..max_iters {
        let Some(enter) = (0..cols).find(|&j| cost[j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = tab[r * width + enter];
            if a > PIVOT_EPS {
                let ratio = tab[r * width + cols] / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - PIVOT_EPS || (ratio <= lratio + PIVOT_EPS && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        // Phase one is bounded below by zero, so an entering column always
        // has a positive entry.
        let Some((pr, _)) = leave else { break };
        pivot(&mut tab, &mut cost, width, m, pr, enter);
        basis[pr] = enter;
    }

    let infeasibility = -cost[cols];
    if infeasibility > tol {
        return None;
    }
    let mut x = vec![0.0; num_vars];
    for (r, &b) in basis.iter().enumerate() {
        if b < num_vars {
            x[b] = tab[r * width + cols].max(0.0);
        }
    }
    Some(x)
}

fn pivot(tab: &mut [f64], cost: &mut [f64], width: usize, m: usize, pr: usize, pc: usize) {
    let p = tab[pr * width + pc];
    for j in 0..width {
        tab[pr * width + j] /= p;
    }
    tab[pr * width + pc] = 1.0;
    for r in 0..m {
        if r == pr {
            continue;
        }
        let f = tab[r * width + pc];
        if f != 0.0 {
            for j in 0..width {
                tab[r * width + j] -= f * tab[pr * width + j];
            }
            tab[r * width + pc] = 0.0;
        }
    }
    let f = cost[pc];
    if f != 0.0 {
        for j in 0..width {
            cost[j] -= f * tab[pr * width + j];
        }
        cost[pc] = 0.0;
    }
}
