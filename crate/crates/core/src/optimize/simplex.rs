//! Dense primal simplex for small linear programs in the form
//! `maximize c·x  s.t.  A x <= b,  x >= 0` with `b >= 0`.
//!
//! Every right-hand side is non-negative, so the slack basis is feasible and
//! no phase-one is needed. Pivots follow Bland's rule, which cannot cycle;
//! the duration-share program is heavily degenerate at the start (all but one
//! right-hand side is zero), so this matters.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimplexError {
    #[error("no progress after {0} pivots (degenerate cycling guard)")]
    Stalled(usize),
    #[error("objective is unbounded")]
    Unbounded,
    #[error("negative right-hand side {0}")]
    NegativeRhs(usize),
}

pub struct Program<'a> {
    /// Objective coefficients, length `n`.
    pub objective: &'a [f64],
    /// Constraint rows, each `(coefficients, bound)` with `coefficients`
    /// of length `n` and `bound >= 0`.
    pub rows: &'a [(Vec<f64>, f64)],
    /// Relative tolerance for pivot selection and optimality.
    pub tolerance: f64,
    /// Hard pivot limit.
    pub pivot_cap: usize,
}

/// Solves the program, returning the optimal structural variables and the
/// objective value.
pub fn maximize(program: &Program<'_>) -> Result<(Vec<f64>, f64), SimplexError> {
    let n = program.objective.len();
    let m = program.rows.len();
    let width = n + m + 1;

    let scale = program
        .rows
        .iter()
        .flat_map(|(coeffs, _)| coeffs.iter())
        .fold(1.0f64, |acc, &v| acc.max(v.abs()));
    let tol = program.tolerance * scale;

    // Row 0 is the objective (negated, maximization); rows 1..=m carry the
    // constraints with their slack columns.
    let mut tableau = vec![vec![0.0; width]; m + 1];
    for (j, &c) in program.objective.iter().enumerate() {
        tableau[0][j] = -c;
    }
    for (i, (coeffs, bound)) in program.rows.iter().enumerate() {
        assert_eq!(coeffs.len(), n, "constraint {i} has wrong arity");
        if *bound < 0.0 {
            return Err(SimplexError::NegativeRhs(i));
        }
        tableau[i + 1][..n].copy_from_slice(coeffs);
        tableau[i + 1][n + i] = 1.0;
        tableau[i + 1][width - 1] = *bound;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    for _ in 0..program.pivot_cap {
        // Bland: entering variable is the lowest-index improving column.
        let Some(entering) = (0..n + m).find(|&j| tableau[0][j] < -tol) else {
            let mut x = vec![0.0; n];
            for (i, &var) in basis.iter().enumerate() {
                if var < n {
                    x[var] = tableau[i + 1][width - 1];
                }
            }
            let objective = program
                .objective
                .iter()
                .zip(&x)
                .map(|(c, v)| c * v)
                .sum();
            return Ok((x, objective));
        };

        // Ratio test; ties again resolved toward the lowest basic index.
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let coeff = tableau[i + 1][entering];
            if coeff > tol {
                let ratio = tableau[i + 1][width - 1] / coeff;
                let better = match leaving {
                    None => true,
                    Some((row, best)) => {
                        ratio < best - tol || (ratio < best + tol && basis[i] < basis[row])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leaving else {
            return Err(SimplexError::Unbounded);
        };

        pivot(&mut tableau, row + 1, entering);
        basis[row] = entering;
    }

    Err(SimplexError::Stalled(program.pivot_cap))
}

fn pivot(tableau: &mut [Vec<f64>], pivot_row: usize, pivot_col: usize) {
    let divisor = tableau[pivot_row][pivot_col];
    for value in tableau[pivot_row].iter_mut() {
        *value /= divisor;
    }
    for i in 0..tableau.len() {
        if i == pivot_row {
            continue;
        }
        let factor = tableau[i][pivot_col];
        if factor == 0.0 {
            continue;
        }
        // Split borrows: the pivot row is read-only here.
        let (pivot_slice, row) = if i < pivot_row {
            let (head, tail) = tableau.split_at_mut(pivot_row);
            (&tail[0], &mut head[i])
        } else {
            let (head, tail) = tableau.split_at_mut(i);
            (&head[pivot_row], &mut tail[0])
        };
        for (value, &p) in row.iter_mut().zip(pivot_slice.iter()) {
            *value -= factor * p;
        }
    }
}
