//! Trinion- and quaternion-valued adaptive filters: SMTAP/SMTNLMS,
//! SMQAP/SMQNLMS and their γ̄ = 0 reductions (TAP/TNLMS, QAP/QNLMS),
//! per-update complexity accounting, and the crossed-dipole beamforming
//! geometry.
//!
//! Linear systems over 𝕋 and ℍ are solved in the real embedding (3x or
//! 4x blow-up) through the left-multiplication matrices of the scalars,
//! with the same δI loading as the real filters.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hypercomplex::{
    cayley_dickson_join, trinion_inverse, Quaternion, Trinion, DEFAULT_DELTA,
};
use crate::linalg;
use crate::smcore::{sm_gate, ConstraintVectorPolicy, Gate, OpCounts, UpdateDecision};

/// Scalar interface shared by [`Trinion`] and [`Quaternion`].
pub trait HyperScalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
{
    const DIM: usize;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(r: f64) -> Self;
    fn conj(self) -> Self;
    fn abs(self) -> f64;
    fn abs_sq(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn component(self, i: usize) -> f64;
    fn from_components(c: &[f64]) -> Self;
    /// Real matrix of left multiplication by `self`.
    fn left_mul_block(self) -> Vec<Vec<f64>>;
    /// Multiplicative inverse with the ring-specific singular fallback.
    fn inverse_reg(self, delta: f64) -> Self;
}

impl HyperScalar for Trinion {
    const DIM: usize = 3;
    fn zero() -> Self {
        Trinion::ZERO
    }
    fn one() -> Self {
        Trinion::ONE
    }
    fn from_real(r: f64) -> Self {
        Trinion::from_real(r)
    }
    fn conj(self) -> Self {
        Trinion::conj(self)
    }
    fn abs(self) -> f64 {
        Trinion::abs(self)
    }
    fn abs_sq(self) -> f64 {
        Trinion::abs_sq(self)
    }
    fn scale(self, s: f64) -> Self {
        Trinion::scale(self, s)
    }
    fn component(self, i: usize) -> f64 {
        [self.a, self.b, self.c][i]
    }
    fn from_components(c: &[f64]) -> Self {
        Trinion::new(c[0], c[1], c[2])
    }
    fn left_mul_block(self) -> Vec<Vec<f64>> {
        self.mul_matrix().iter().map(|r| r.to_vec()).collect()
    }
    fn inverse_reg(self, delta: f64) -> Self {
        trinion_inverse(self, delta)
    }
}

impl HyperScalar for Quaternion {
    const DIM: usize = 4;
    fn zero() -> Self {
        Quaternion::ZERO
    }
    fn one() -> Self {
        Quaternion::ONE
    }
    fn from_real(r: f64) -> Self {
        Quaternion::from_real(r)
    }
    fn conj(self) -> Self {
        Quaternion::conj(self)
    }
    fn abs(self) -> f64 {
        Quaternion::abs(self)
    }
    fn abs_sq(self) -> f64 {
        Quaternion::abs_sq(self)
    }
    fn scale(self, s: f64) -> Self {
        Quaternion::scale(self, s)
    }
    fn component(self, i: usize) -> f64 {
        [self.a, self.b, self.c, self.d][i]
    }
    fn from_components(c: &[f64]) -> Self {
        Quaternion::new(c[0], c[1], c[2], c[3])
    }
    fn left_mul_block(self) -> Vec<Vec<f64>> {
        self.left_mul_matrix().iter().map(|r| r.to_vec()).collect()
    }
    fn inverse_reg(self, delta: f64) -> Self {
        match self.inverse() {
            Some(inv) => inv,
            None => Quaternion::ONE.scale(1.0 / delta),
        }
    }
}

/// Weight vector over 𝕋 or ℍ; output `y(k) = wᴴx(k)`.
#[derive(Debug, Clone)]
pub struct HcFilterState<T: HyperScalar> {
    pub w: Vec<T>,
}

impl<T: HyperScalar> HcFilterState<T> {
    pub fn new(order: usize) -> Self {
        HcFilterState {
            w: vec![T::zero(); order + 1],
        }
    }

    pub fn output(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (w, &xi) in self.w.iter().zip(x) {
            acc = acc + w.conj() * xi;
        }
        acc
    }
}

/// Input matrix and desired vector over a hypercomplex ring, zero-padded
/// like the real [`crate::signals::RegressorWindow`].
#[derive(Debug, Clone)]
pub struct HcWindow<T: HyperScalar> {
    pub x_mat: Vec<Vec<T>>,
    pub d: Vec<T>,
    pub order: usize,
    pub reuse: usize,
}

impl<T: HyperScalar> HcWindow<T> {
    pub fn column(&self, j: usize) -> Vec<T> {
        self.x_mat.iter().map(|row| row[j]).collect()
    }

    pub fn current(&self) -> Vec<T> {
        self.column(0)
    }

    /// `e_j = d(k−j) − wᴴ(k)x(k−j)`.
    pub fn error_vec(&self, w: &[T]) -> Vec<T> {
        (0..=self.reuse)
            .map(|j| {
                let mut acc = self.d[j];
                for i in 0..=self.order {
                    acc = acc - w[i].conj() * self.x_mat[i][j];
                }
                acc
            })
            .collect()
    }
}

pub fn hc_window_at<T: HyperScalar>(x: &[T], d: &[T], k: usize, n: usize, l: usize) -> HcWindow<T> {
    let at = |idx: isize, seq: &[T]| {
        if idx < 0 {
            T::zero()
        } else {
            seq[idx as usize]
        }
    };
    let mut x_mat = vec![vec![T::zero(); l + 1]; n + 1];
    for (i, row) in x_mat.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = at(k as isize - j as isize - i as isize, x);
        }
    }
    let d_vec = (0..=l).map(|j| at(k as isize - j as isize, d)).collect();
    HcWindow {
        x_mat,
        d: d_vec,
        order: n,
        reuse: l,
    }
}

/// Solves `G·λ = rhs` over 𝕋/ℍ through the real embedding, δ-loading the
/// diagonal when the plain system is singular.
fn solve_hc<T: HyperScalar>(g: &[Vec<T>], rhs: &[T], delta: f64) -> Option<(Vec<T>, bool)> {
    let n = g.len();
    let dim = T::DIM;
    let mut real = vec![vec![0.0; n * dim]; n * dim];
    for (i, row) in g.iter().enumerate() {
        for (j, &entry) in row.iter().enumerate() {
            let block = entry.left_mul_block();
            for a in 0..dim {
                for b in 0..dim {
                    real[i * dim + a][j * dim + b] = block[a][b];
                }
            }
        }
    }
    let mut rhs_real = vec![0.0; n * dim];
    for (i, &r) in rhs.iter().enumerate() {
        for a in 0..dim {
            rhs_real[i * dim + a] = r.component(a);
        }
    }
    let (sol, regularized) = linalg::solve_regularized(&real, &rhs_real, delta)?;
    let lambda = (0..n)
        .map(|i| T::from_components(&sol[i * dim..(i + 1) * dim]))
        .collect();
    Some((lambda, regularized))
}

/// `G = XᴴX` with entries `Σ_m x*_{mi}·x_{mj}` (order matters over ℍ).
fn gram_hc<T: HyperScalar>(x_mat: &[Vec<T>]) -> Vec<Vec<T>> {
    let cols = if x_mat.is_empty() { 0 } else { x_mat[0].len() };
    let mut g = vec![vec![T::zero(); cols]; cols];
    for i in 0..cols {
        for j in 0..cols {
            let mut acc = T::zero();
            for row in x_mat {
                acc = acc + row[i].conj() * row[j];
            }
            g[i][j] = acc;
        }
    }
    g
}

fn hc_cv<T: HyperScalar>(
    policy: ConstraintVectorPolicy,
    e_vec: &[T],
    gammabar: f64,
) -> Result<Vec<T>> {
    match policy {
        ConstraintVectorPolicy::SimpleChoice => {
            let mut cv = e_vec.to_vec();
            let mag = e_vec[0].abs();
            cv[0] = if mag > 0.0 {
                e_vec[0].scale(gammabar / mag)
            } else {
                T::zero()
            };
            Ok(cv)
        }
        ConstraintVectorPolicy::General => Ok(vec![T::from_real(gammabar); e_vec.len()]),
        ConstraintVectorPolicy::Zero => Ok(vec![T::zero(); e_vec.len()]),
        ConstraintVectorPolicy::Noise(_) => Err(Error::Config(
            "noise constraint vector is not available for hypercomplex filters".into(),
        )),
    }
}

fn hc_ap_update<T: HyperScalar>(
    state: &mut HcFilterState<T>,
    win: &HcWindow<T>,
    rhs_conj: &[T],
    mu: f64,
    delta: f64,
) -> bool {
    let gram = gram_hc(&win.x_mat);
    let Some((lambda, regularized)) = solve_hc(&gram, rhs_conj, delta) else {
        return true;
    };
    for (i, w) in state.w.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (j, &lj) in lambda.iter().enumerate() {
            acc = acc + win.x_mat[i][j] * lj;
        }
        *w = *w + acc.scale(mu);
    }
    regularized
}

/// Gated affine-projection update `w' = w + X(XᴴX)⁻¹(e − γ)*` over 𝕋/ℍ.
pub fn sm_hc_ap_step<T: HyperScalar>(
    state: &mut HcFilterState<T>,
    win: &HcWindow<T>,
    gate: &mut Gate,
    cv_policy: ConstraintVectorPolicy,
    delta: f64,
) -> Result<UpdateDecision> {
    let e_vec = win.error_vec(&state.w);
    let gammabar = gate.current_gammabar();
    let err = e_vec[0].abs();
    let mut dec = UpdateDecision {
        err,
        ..Default::default()
    };
    if sm_gate(err, gammabar) {
        let cv = hc_cv(cv_policy, &e_vec, gammabar)?;
        let rhs: Vec<T> = e_vec
            .iter()
            .zip(&cv)
            .map(|(&e, &g)| (e - g).conj())
            .collect();
        dec.regularized = hc_ap_update(state, win, &rhs, 1.0, delta);
        dec.updated = true;
        dec.mu_eff = 1.0;
    }
    gate.record(dec.updated);
    Ok(dec)
}

/// Ungated affine projection `w' = w + μ·X(XᴴX)⁻¹e*` over 𝕋/ℍ.
pub fn hc_ap_step<T: HyperScalar>(
    state: &mut HcFilterState<T>,
    win: &HcWindow<T>,
    mu: f64,
    delta: f64,
) -> Vec<T> {
    let e_vec = win.error_vec(&state.w);
    let rhs: Vec<T> = e_vec.iter().map(|&e| e.conj()).collect();
    hc_ap_update(state, win, &rhs, mu, delta);
    e_vec
}

/// Gated normalized update `w' = w + μ(k)·x(xᴴx)⁻¹e*` with
/// `μ(k) = 1 − γ̄/|e(k)|`.
pub fn sm_hc_nlms_step<T: HyperScalar>(
    state: &mut HcFilterState<T>,
    x: &[T],
    d: T,
    gate: &mut Gate,
    delta: f64,
) -> UpdateDecision {
    let e = d - state.output(x);
    let gammabar = gate.current_gammabar();
    let err = e.abs();
    let mut dec = UpdateDecision {
        err,
        ..Default::default()
    };
    if sm_gate(err, gammabar) {
        let mu = 1.0 - gammabar / err;
        hc_nlms_update(state, x, e, mu, delta);
        dec.updated = true;
        dec.mu_eff = mu;
    }
    gate.record(dec.updated);
    dec
}

/// Ungated normalized update with a fixed convergence factor.
pub fn hc_nlms_step<T: HyperScalar>(
    state: &mut HcFilterState<T>,
    x: &[T],
    d: T,
    mu: f64,
    delta: f64,
) -> T {
    let e = d - state.output(x);
    hc_nlms_update(state, x, e, mu, delta);
    e
}

fn hc_nlms_update<T: HyperScalar>(
    state: &mut HcFilterState<T>,
    x: &[T],
    e: T,
    mu: f64,
    delta: f64,
) {
    // xᴴx is real over ℍ but a general trinion over 𝕋; its inverse goes
    // through the ring's own fallback.
    let mut s = T::zero();
    for &xi in x {
        s = s + xi.conj() * xi;
    }
    let fallback = if delta > 0.0 { delta } else { DEFAULT_DELTA };
    let sinv = s.inverse_reg(fallback);
    let factor = (sinv * e.conj()).scale(mu);
    for (w, &xi) in state.w.iter_mut().zip(x) {
        *w = *w + xi * factor;
    }
}

/// SMTAP: trinion set-membership affine projection.
pub fn smtap_step(
    state: &mut HcFilterState<Trinion>,
    win: &HcWindow<Trinion>,
    gate: &mut Gate,
    cv_policy: ConstraintVectorPolicy,
    delta: f64,
) -> Result<UpdateDecision> {
    sm_hc_ap_step(state, win, gate, cv_policy, delta)
}

/// SMQAP: quaternion set-membership affine projection.
pub fn smqap_step(
    state: &mut HcFilterState<Quaternion>,
    win: &HcWindow<Quaternion>,
    gate: &mut Gate,
    cv_policy: ConstraintVectorPolicy,
    delta: f64,
) -> Result<UpdateDecision> {
    sm_hc_ap_step(state, win, gate, cv_policy, delta)
}

/// SMTNLMS: trinion set-membership normalized LMS.
pub fn smtnlms_step(
    state: &mut HcFilterState<Trinion>,
    x: &[Trinion],
    d: Trinion,
    gate: &mut Gate,
    delta: f64,
) -> UpdateDecision {
    sm_hc_nlms_step(state, x, d, gate, delta)
}

/// SMQNLMS: quaternion set-membership normalized LMS.
pub fn smqnlms_step(
    state: &mut HcFilterState<Quaternion>,
    x: &[Quaternion],
    d: Quaternion,
    gate: &mut Gate,
    delta: f64,
) -> UpdateDecision {
    sm_hc_nlms_step(state, x, d, gate, delta)
}

/// Algorithms covered by the published per-update complexity table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcAlgo {
    Qnlms,
    Qap,
    Tnlms,
    Tap,
}

/// Real multiplications, additions and divisions per weight-vector update
/// as closed-form polynomials in the filter order `n` and reuse depth `l`
/// (the published table carries no division column, so that count is 0).
pub fn complexity_count(algo: HcAlgo, n: i64, l: i64) -> (i64, i64, i64) {
    match algo {
        HcAlgo::Qnlms => (20 * n + 4, 20 * n - 1, 0),
        HcAlgo::Qap => (
            32 * l * l * l + 16 * n * l * l + 16 * l * l + 19 * n * l + 26 * l,
            32 * l * l * l + 16 * n * l * l + 4 * l * l + 16 * n * l + 8 * l,
            0,
        ),
        HcAlgo::Tnlms => (12 * n + 3, 12 * n - 1, 0),
        HcAlgo::Tap => (
            18 * l * l * l + 9 * n * l * l + 9 * l * l + 11 * n * l + 50 * l,
            18 * l * l * l + 9 * n * l * l + 9 * n * l + 39 * l,
            0,
        ),
    }
}

/// Runtime op tallies for a hypercomplex update via the published
/// polynomial of the matching algorithm.
pub fn hc_step_ops(algo: HcAlgo, n: usize, l: usize) -> OpCounts {
    let (m, a, d) = complexity_count(algo, n as i64, l as i64);
    OpCounts {
        mults: m.max(0) as u64,
        adds: a.max(0) as u64,
        divs: d.max(0) as u64,
    }
}

/// Crossed-dipole uniform linear array geometry.
#[derive(Debug, Clone, Copy)]
pub struct SteeringConfig {
    /// Number of crossed-dipole pairs.
    pub sensors: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    /// Elevation angle θ ∈ [0, π/2].
    pub theta: f64,
    /// Azimuth φ ∈ {π/2, −π/2}.
    pub phi: f64,
    /// Auxiliary polarization angle γ.
    pub gamma_pol: f64,
    /// Polarization phase difference η.
    pub eta_pol: f64,
}

/// Quaternion-valued steering vector `s_q = s_x + ı·s_y` built from the
/// spatial phases and the crossed-dipole polarization branches.
pub fn steering_vector(cfg: &SteeringConfig) -> Vec<Quaternion> {
    let positive_phi = cfg.phi >= 0.0;
    let sign = if positive_phi { 1.0 } else { -1.0 };
    let pol_x = -sign * cfg.gamma_pol.cos();
    let pol_y =
        sign * cfg.theta.cos() * cfg.gamma_pol.sin() * Complex64::new(0.0, cfg.eta_pol).exp();
    let phase = -2.0 * std::f64::consts::PI * cfg.spacing * cfg.theta.sin() * cfg.phi.sin();
    (0..cfg.sensors)
        .map(|m| {
            let sc = Complex64::new(0.0, phase * m as f64).exp();
            let sx = sc * pol_x;
            let sy = sc * pol_y;
            cayley_dickson_join(sx, sy)
        })
        .collect()
}

/// `|B(θ)| = |wᴴs(θ)|` over a signed-θ grid: positive angles use
/// φ = π/2, negative angles the same |θ| with φ = −π/2.
pub fn beam_pattern(w: &[Quaternion], thetas: &[f64], spacing: f64) -> Vec<f64> {
    thetas
        .iter()
        .map(|&theta| {
            let cfg = SteeringConfig {
                sensors: w.len(),
                spacing,
                theta: theta.abs(),
                phi: if theta >= 0.0 {
                    std::f64::consts::FRAC_PI_2
                } else {
                    -std::f64::consts::FRAC_PI_2
                },
                gamma_pol: 0.0,
                eta_pol: 0.0,
            };
            let s = steering_vector(&cfg);
            let mut acc = Quaternion::ZERO;
            for (wi, si) in w.iter().zip(&s) {
                acc = acc + wi.conj() * *si;
            }
            acc.abs()
        })
        .collect()
}
