//! Small dense linear algebra used by the update rules.
//!
//! Every system solved here is tiny (a few rows for the data-reuse window,
//! `N+1` for the RLS correlation matrices), so plain Gaussian elimination
//! with partial pivoting is used throughout. No silent pseudo-inverse:
//! callers regularize explicitly with a diagonal loading term.

pub type Mat = Vec<Vec<f64>>;

/// `n`-by-`n` identity matrix.
pub fn identity(n: usize) -> Mat {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// `a * b` for a matrix and a vector.
pub fn mat_vec(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, b)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot is exactly zero, which with the callers'
/// diagonal loading only happens for structurally singular systems.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    debug_assert_eq!(b.len(), n);
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            aug[i][col]
                .abs()
                .partial_cmp(&aug[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if aug[pivot][col] == 0.0 {
            return None;
        }
        aug.swap(col, pivot);
        for row in col + 1..n {
            let factor = aug[row][col] / aug[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..=n {
                aug[row][k] -= factor * aug[col][k];
            }
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = aug[row][n];
        for col in row + 1..n {
            acc -= aug[row][col] * x[col];
        }
        x[row] = acc / aug[row][row];
    }
    Some(x)
}

/// Solves `a x = b`, falling back to `a + δI` when the plain system hits
/// a zero pivot. Returns the solution and whether the fallback ran.
pub fn solve_regularized(a: &[Vec<f64>], b: &[f64], delta: f64) -> Option<(Vec<f64>, bool)> {
    if let Some(x) = solve(a, b) {
        return Some((x, false));
    }
    let mut reg = a.to_vec();
    add_diagonal(&mut reg, delta);
    solve(&reg, b).map(|x| (x, true))
}

/// Inverse via column-by-column solves. Intended for the small
/// `(L+1)x(L+1)` windows; returns `None` on a zero pivot.
pub fn invert(a: &[Vec<f64>]) -> Option<Mat> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(a, &e)?);
    }
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Gram matrix `X^T X` for a matrix stored as rows.
pub fn gram_of_columns(x: &[Vec<f64>]) -> Mat {
    let cols = if x.is_empty() { 0 } else { x[0].len() };
    let mut g = vec![vec![0.0; cols]; cols];
    for i in 0..cols {
        for j in i..cols {
            let mut acc = 0.0;
            for row in x {
                acc += row[i] * row[j];
            }
            g[i][j] = acc;
            g[j][i] = acc;
        }
    }
    g
}

/// 1-norm condition number estimate `‖A‖₁ · ‖A⁻¹‖₁`.
pub fn cond_1(a: &[Vec<f64>]) -> Option<f64> {
    let inv = invert(a)?;
    Some(norm_1(a) * norm_1(&inv))
}

fn norm_1(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    (0..n)
        .map(|j| a.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Adds `delta` to the diagonal in place.
pub fn add_diagonal(a: &mut Mat, delta: f64) {
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += delta;
    }
}

/// Determinant of a 3x3 matrix.
pub fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}
