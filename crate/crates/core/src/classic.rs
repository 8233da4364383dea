//! Point-estimation baselines: LMS, NLMS, affine projection and RLS.

use crate::linalg::{self, Mat};
use crate::signals::RegressorWindow;

/// Weight vector plus the algorithm-specific auxiliary state kept by RLS.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub w: Vec<f64>,
    /// Inverse deterministic correlation matrix `S_D`, RLS only.
    pub s_d: Option<Mat>,
    /// Deterministic cross-correlation vector `p_D`, RLS only.
    pub p_d: Option<Vec<f64>>,
}

impl FilterState {
    /// Zero-initialized state for a filter with `order + 1` taps.
    pub fn new(order: usize) -> Self {
        FilterState {
            w: vec![0.0; order + 1],
            s_d: None,
            p_d: None,
        }
    }

    pub fn with_weights(w: Vec<f64>) -> Self {
        FilterState {
            w,
            s_d: None,
            p_d: None,
        }
    }

    /// Prepares the RLS recursion with `S_D(−1) = δ⁻¹·I` expressed as
    /// `s_d = inv_power·I`; pass `inv_power = 1/σ_x²` for the usual choice.
    pub fn init_rls(&mut self, inv_power: f64) {
        let n = self.w.len();
        let mut s = linalg::identity(n);
        for (i, row) in s.iter_mut().enumerate() {
            row[i] = inv_power;
        }
        self.s_d = Some(s);
        self.p_d = Some(vec![0.0; n]);
    }

    pub fn output(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.w, x)
    }
}

/// `w' = w + 2μ·e·x` with `e = d − wᵀx`.
pub fn lms_step(state: &mut FilterState, x: &[f64], d: f64, mu: f64) -> f64 {
    let e = d - state.output(x);
    for (w, &xi) in state.w.iter_mut().zip(x) {
        *w += 2.0 * mu * e * xi;
    }
    e
}

/// `w' = w + μₙ·e·x / (xᵀx + δ)`.
pub fn nlms_step(state: &mut FilterState, x: &[f64], d: f64, mu_n: f64, delta: f64) -> f64 {
    let e = d - state.output(x);
    let denom = linalg::norm_sq(x) + delta;
    if denom > 0.0 {
        let step = mu_n * e / denom;
        for (w, &xi) in state.w.iter_mut().zip(x) {
            *w += step * xi;
        }
    }
    e
}

/// Affine projection update `w' = w + μ·X(XᵀX + δI)⁻¹e`.
///
/// Returns the a priori error vector. `δI` keeps the Gram solve defined
/// when the window is rank deficient (e.g. during the zero-padded
/// start-up); the returned flag reports whether the unregularized system
/// was singular.
pub fn ap_step(state: &mut FilterState, win: &RegressorWindow, mu: f64, delta: f64) -> (Vec<f64>, bool) {
    let e = win.error_vec(&state.w);
    let gram = linalg::gram_of_columns(&win.x_mat);
    let (coeff, singular) = match linalg::solve_regularized(&gram, &e, delta) {
        Some(r) => r,
        None => return (e, true),
    };
    for (i, w) in state.w.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &cj) in coeff.iter().enumerate() {
            acc += win.x_mat[i][j] * cj;
        }
        *w += mu * acc;
    }
    (e, singular)
}

/// One RLS step: rank-one update of `S_D` through the matrix inversion
/// lemma, then `w' = S_D'·p_D'`.
pub fn rls_step(state: &mut FilterState, x: &[f64], d: f64, lambda: f64) -> f64 {
    let e = d - state.output(x);
    let s = state.s_d.as_mut().expect("rls state not initialized");
    let p = state.p_d.as_mut().expect("rls state not initialized");

    let sx = linalg::mat_vec(s, x);
    let denom = lambda + linalg::dot(x, &sx);
    let n = x.len();
    for i in 0..n {
        for j in 0..n {
            s[i][j] = (s[i][j] - sx[i] * sx[j] / denom) / lambda;
        }
    }
    for (pi, &xi) in p.iter_mut().zip(x) {
        *pi = lambda * *pi + xi * d;
    }
    state.w = linalg::mat_vec(s, p);
    e
}
