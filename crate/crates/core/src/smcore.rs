//! Set-membership machinery: the update gate, constraint-vector policies,
//! SM-NLMS and SM-AP recursions, and selection of the error bound γ̄
//! (fixed, estimated from a target update rate, or time-varying).

use std::collections::VecDeque;

use crate::classic::FilterState;
use crate::error::{Error, Result};
use crate::linalg;
use crate::signals::RegressorWindow;

/// Multiply/add/divide tallies accumulated by the update rules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub mults: u64,
    pub adds: u64,
    pub divs: u64,
}

impl OpCounts {
    pub fn merge(&mut self, other: OpCounts) {
        self.mults += other.mults;
        self.adds += other.adds;
        self.divs += other.divs;
    }
}

/// Per-iteration record of what the gate and update rule did.
#[derive(Debug, Clone, Default)]
pub struct UpdateDecision {
    pub updated: bool,
    /// A priori error `e(k)`; magnitude for the hypercomplex filters.
    pub err: f64,
    /// Effective scalar step (`μ(k)` for SM-NLMS-style rules, 1 for gated
    /// projection updates, 0 when gated off).
    pub mu_eff: f64,
    /// Constraint vector used by the update, when one applies.
    pub cv: Option<Vec<f64>>,
    /// Some CV entry exceeded γ̄ in magnitude.
    pub cv_out_of_bound: bool,
    /// The unregularized system matrix was singular and the δ path ran.
    pub regularized: bool,
    /// Degenerate update skipped (e.g. zero direction with the gate on).
    pub degenerate: bool,
    pub ops: OpCounts,
}

/// How γ̄ evolves over a run.
#[derive(Debug, Clone, PartialEq)]
pub enum GatePolicy {
    Fixed,
    /// γ̄ chosen so that `P[|e| > γ̄] = p` under the Gaussian error model.
    TargetUpdateRate { p: f64 },
    /// Low bound while updates are frequent (transient), high bound in
    /// steady state, judged over a window of recent update flags.
    TimeVarying {
        window: usize,
        threshold: usize,
        sigma_n2: f64,
        tau_low: f64,
        tau_high: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateConfig {
    pub gammabar: f64,
    pub policy: GatePolicy,
}

impl GateConfig {
    pub fn fixed(gammabar: f64) -> Self {
        GateConfig {
            gammabar,
            policy: GatePolicy::Fixed,
        }
    }
}

/// Runtime gate: owns the update-flag history used by the time-varying
/// policy. One gate belongs to one filter instance.
#[derive(Debug, Clone)]
pub struct Gate {
    pub config: GateConfig,
    history: VecDeque<bool>,
}

impl Gate {
    pub fn new(config: GateConfig) -> Self {
        Gate {
            config,
            history: VecDeque::new(),
        }
    }

    pub fn fixed(gammabar: f64) -> Self {
        Gate::new(GateConfig::fixed(gammabar))
    }

    /// γ̄ in effect for the next decision.
    pub fn current_gammabar(&self) -> f64 {
        match &self.config.policy {
            GatePolicy::Fixed | GatePolicy::TargetUpdateRate { .. } => self.config.gammabar,
            GatePolicy::TimeVarying {
                window,
                threshold,
                sigma_n2,
                tau_low,
                tau_high,
            } => {
                let flags: Vec<bool> = self.history.iter().copied().collect();
                timevarying_gammabar(&flags, *window, *threshold, *sigma_n2, *tau_low, *tau_high)
            }
        }
    }

    pub fn record(&mut self, updated: bool) {
        if let GatePolicy::TimeVarying { window, .. } = self.config.policy {
            self.history.push_back(updated);
            while self.history.len() > window {
                self.history.pop_front();
            }
        }
    }
}

/// The indicator `f(e, γ̄)`: 1 iff `|e| > γ̄` (boundary excluded).
pub fn sm_gate(e: f64, gammabar: f64) -> bool {
    debug_assert!(gammabar >= 0.0);
    e.abs() > gammabar
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// SM-NLMS: gated update with variable step `μ(k) = 1 − γ̄/|e(k)|`.
pub fn smnlms_step(
    state: &mut FilterState,
    x: &[f64],
    d: f64,
    gate: &mut Gate,
    delta: f64,
) -> UpdateDecision {
    let n1 = x.len() as u64;
    let e = d - state.output(x);
    let gammabar = gate.current_gammabar();
    let mut dec = UpdateDecision {
        err: e,
        ops: OpCounts {
            mults: n1,
            adds: n1,
            divs: 0,
        },
        ..Default::default()
    };
    if sm_gate(e, gammabar) {
        let mu = 1.0 - gammabar / e.abs();
        let denom = linalg::norm_sq(x) + delta;
        if denom > 0.0 {
            let step = mu * e / denom;
            for (w, &xi) in state.w.iter_mut().zip(x) {
                *w += step * xi;
            }
        }
        dec.updated = true;
        dec.mu_eff = mu;
        dec.ops.mults += 2 * n1 + 2;
        dec.ops.adds += n1 + 1;
        dec.ops.divs += 2;
    }
    gate.record(dec.updated);
    dec
}

/// Constraint-vector policies for SM-AP-style updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintVectorPolicy {
    /// `γ₀ = γ̄·sgn(e(k))`, `γ_l = ε(k−l)` for `l ≥ 1`.
    SimpleChoice,
    /// Every entry set to γ̄ (a deliberately poor choice).
    General,
    /// `γ(k) = c·n(k)`; needs the noise realization.
    Noise(f64),
    Zero,
}

impl ConstraintVectorPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "simple-choice" | "sc" => Ok(ConstraintVectorPolicy::SimpleChoice),
            "general" => Ok(ConstraintVectorPolicy::General),
            "noise" => Ok(ConstraintVectorPolicy::Noise(1.0)),
            "zero" => Ok(ConstraintVectorPolicy::Zero),
            other => Err(Error::Config(format!("unknown constraint vector `{other}`"))),
        }
    }
}

/// Builds the constraint vector for the current window.
///
/// Returns the vector together with a flag marking entries that exceed γ̄
/// in magnitude (possible for the simple-choice a posteriori entries and
/// for scaled noise).
pub fn make_cv(
    policy: ConstraintVectorPolicy,
    e_vec: &[f64],
    n_vec: Option<&[f64]>,
    gammabar: f64,
) -> Result<(Vec<f64>, bool)> {
    let cv: Vec<f64> = match policy {
        ConstraintVectorPolicy::SimpleChoice => {
            let mut cv = e_vec.to_vec();
            cv[0] = gammabar * sgn(e_vec[0]);
            cv
        }
        ConstraintVectorPolicy::General => vec![gammabar; e_vec.len()],
        ConstraintVectorPolicy::Noise(c) => {
            let n = n_vec.ok_or_else(|| {
                Error::Config("noise constraint vector requires the noise realization".into())
            })?;
            n.iter().take(e_vec.len()).map(|&v| c * v).collect()
        }
        ConstraintVectorPolicy::Zero => vec![0.0; e_vec.len()],
    };
    let out_of_bound = cv.iter().any(|&g| g.abs() > gammabar);
    Ok((cv, out_of_bound))
}

/// SM-AP: gated update `w' = w + X·A·(e − γ)` with `A = (XᵀX)⁻¹`
/// (δ-regularized when rank deficient).
pub fn smap_step(
    state: &mut FilterState,
    win: &RegressorWindow,
    gate: &mut Gate,
    cv_policy: ConstraintVectorPolicy,
    n_vec: Option<&[f64]>,
    delta: f64,
) -> Result<UpdateDecision> {
    let n1 = (win.order + 1) as u64;
    let l1 = (win.reuse + 1) as u64;
    let e_vec = win.error_vec(&state.w);
    let e = e_vec[0];
    let gammabar = gate.current_gammabar();
    let mut dec = UpdateDecision {
        err: e,
        ops: OpCounts {
            mults: n1 * l1,
            adds: n1 * l1,
            divs: 0,
        },
        ..Default::default()
    };
    if sm_gate(e, gammabar) {
        let (cv, oob) = make_cv(cv_policy, &e_vec, n_vec, gammabar)?;
        let rhs: Vec<f64> = e_vec.iter().zip(&cv).map(|(e, g)| e - g).collect();
        let gram = linalg::gram_of_columns(&win.x_mat);
        let (coeff, singular) =
            linalg::solve_regularized(&gram, &rhs, delta).unwrap_or((vec![0.0; rhs.len()], true));
        for (i, w) in state.w.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &cj) in coeff.iter().enumerate() {
                acc += win.x_mat[i][j] * cj;
            }
            *w += acc;
        }
        dec.updated = true;
        dec.mu_eff = 1.0;
        dec.cv = Some(cv);
        dec.cv_out_of_bound = oob;
        dec.regularized = singular;
        dec.ops.mults += n1 * l1 * l1 + n1 * l1 + l1 * l1 * l1 / 3 + 1;
        dec.ops.adds += n1 * l1 * l1 + n1 * l1 + l1;
        dec.ops.divs += l1;
    }
    gate.record(dec.updated);
    Ok(dec)
}

/// Inverse upper tail of the standard normal via bisection on the
/// complementary error function: returns `t` with `erfc(t/√2)·…` solved as
/// `erfc(t) = p`, so the two-sided Gaussian bound is `γ̄ = σ·√2·t`.
fn erfc_inv(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p) && p > 0.0);
    if p >= 1.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 30.0_f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// γ̄ estimation mode: plain Gaussian tail, or a second pass that inflates
/// the error variance by the steady-state excess MSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammabarMode {
    FirstPass,
    EmseRefined,
}

/// Steady-state excess mean-square error for an update rate `p`,
/// threshold `gammabar` and reuse depth `l`.
pub fn steady_state_emse(p: f64, sigma_n2: f64, gammabar: f64, l: usize) -> f64 {
    let l1 = (l + 1) as f64;
    let rho0 = (2.0 / (std::f64::consts::PI * (2.0 * sigma_n2 + gammabar * gammabar / l1))).sqrt();
    let a = (1.0 - p + 2.0 * p * gammabar * rho0) * (1.0 - p);
    let reuse_factor = if l == 0 {
        1.0
    } else {
        (1.0 - a) / (1.0 - a.powi(l as i32 + 1))
    };
    let num = l1 * (sigma_n2 + gammabar * gammabar - 2.0 * gammabar * sigma_n2 * rho0) * p;
    let den = (2.0 - p) - 2.0 * (1.0 - p) * gammabar * rho0;
    num / den * reuse_factor
}

/// Solves `P[|e(k)| > γ̄] = p` for γ̄.
///
/// The first pass models `e` as Gaussian with the noise variance alone;
/// the refined mode evaluates the steady-state excess MSE at the
/// first-pass γ̄ and re-solves the tail with `σ_e² = E[ẽ²] + σ_n²`.
pub fn estimate_gammabar(p: f64, sigma_n2: f64, l: usize, mode: GammabarMode) -> Result<f64> {
    if p <= 0.0 {
        return Err(Error::Config(
            "target update rate p = 0 would require an unbounded threshold".into(),
        ));
    }
    if p > 1.0 {
        return Err(Error::Config(format!("target update rate {p} > 1")));
    }
    let first = (2.0 * sigma_n2).sqrt() * erfc_inv(p);
    match mode {
        GammabarMode::FirstPass => Ok(first),
        GammabarMode::EmseRefined => {
            let emse = steady_state_emse(p, sigma_n2, first, l);
            let sigma_e2 = emse + sigma_n2;
            Ok((2.0 * sigma_e2).sqrt() * erfc_inv(p))
        }
    }
}

/// Time-varying bound: √(τ_low·σ_n²) while the recent window shows at
/// least `threshold` updates (transient), √(τ_high·σ_n²) otherwise.
///
/// Missing history before iteration 0 counts as updates so a fresh run
/// starts in the transient regime.
pub fn timevarying_gammabar(
    history: &[bool],
    window: usize,
    threshold: usize,
    sigma_n2: f64,
    tau_low: f64,
    tau_high: f64,
) -> f64 {
    debug_assert!(window >= 1);
    let recent = &history[history.len().saturating_sub(window)..];
    let count = recent.iter().filter(|&&u| u).count() + (window - recent.len());
    let tau = if count >= threshold { tau_low } else { tau_high };
    (tau * sigma_n2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{ap_step, nlms_step};
    use crate::signals::{gen_input, synth_desired, window_at, InputKind};
    use approx::assert_relative_eq;

    #[test]
    fn gate_boundary_excluded() {
        assert!(!sm_gate(0.2236, 0.2236));
        assert!(sm_gate(0.3, 0.2236));
        assert!(sm_gate(-0.3, 0.2236));
        assert!(sm_gate(1e-300, 0.0));
        assert!(!sm_gate(0.0, 0.0));
    }

    #[test]
    fn smnlms_gated_off_keeps_weights() {
        let mut st = FilterState::new(2);
        let mut gate = Gate::fixed(10.0);
        let dec = smnlms_step(&mut st, &[1.0, 0.5, -0.5], 1.0, &mut gate, 1e-12);
        assert!(!dec.updated);
        assert_eq!(dec.mu_eff, 0.0);
        assert!(st.w.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn smnlms_scalar_hand_case() {
        // N = 0: w = 0, x = 1, d = 1, γ̄ = 0.5, δ = 0
        // → μ = 0.5, w' = 0.5, a posteriori error = γ̄.
        let mut st = FilterState::new(0);
        let mut gate = Gate::fixed(0.5);
        let dec = smnlms_step(&mut st, &[1.0], 1.0, &mut gate, 0.0);
        assert!(dec.updated);
        assert_relative_eq!(dec.mu_eff, 0.5);
        assert_relative_eq!(st.w[0], 0.5);
        assert_relative_eq!(1.0 - st.output(&[1.0]), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn smnlms_gamma_zero_is_unit_nlms() {
        let x = gen_input(&InputKind::WhiteGaussian, 200, 3).unwrap();
        let sys = crate::signals::random_gaussian_system(4, 3);
        let (d, _) = synth_desired(&sys, &x, 0.01, 3);
        let mut sm = FilterState::new(4);
        let mut nl = FilterState::new(4);
        let mut gate = Gate::fixed(0.0);
        for k in 0..x.len() {
            let win = window_at(&x, &d, k, 4, 0);
            let xk = win.current();
            smnlms_step(&mut sm, &xk, d[k], &mut gate, 1e-12);
            nlms_step(&mut nl, &xk, d[k], 1.0, 1e-12);
            for (a, b) in sm.w.iter().zip(&nl.w) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cv_simple_choice_sign_rule() {
        let (cv, oob) = make_cv(ConstraintVectorPolicy::SimpleChoice, &[-0.4], None, 0.2236).unwrap();
        assert_eq!(cv, vec![-0.2236]);
        assert!(!oob);
    }

    #[test]
    fn cv_general_fills_gammabar() {
        let (cv, _) = make_cv(ConstraintVectorPolicy::General, &[0.1, 0.2, 0.3], None, 0.2236).unwrap();
        assert_eq!(cv, vec![0.2236; 3]);
    }

    #[test]
    fn cv_noise_passthrough_and_bounds() {
        let n = vec![0.01, -0.02, 0.005];
        let (cv, oob) = make_cv(ConstraintVectorPolicy::Noise(1.0), &[1.0, 1.0, 1.0], Some(&n), 0.2236).unwrap();
        assert_eq!(cv, n);
        assert!(!oob);
        let (_, oob) = make_cv(ConstraintVectorPolicy::Noise(100.0), &[1.0, 1.0, 1.0], Some(&n), 0.2236).unwrap();
        assert!(oob);
        assert!(make_cv(ConstraintVectorPolicy::Noise(1.0), &[1.0], None, 0.2).is_err());
    }

    #[test]
    fn smap_gamma_zero_zero_cv_is_unit_ap() {
        let x = gen_input(&InputKind::Ar1(0.8), 300, 5).unwrap();
        let sys = crate::signals::random_gaussian_system(5, 5);
        let (d, _) = synth_desired(&sys, &x, 0.01, 5);
        let mut sm = FilterState::new(5);
        let mut ap = FilterState::new(5);
        let mut gate = Gate::fixed(0.0);
        for k in 0..x.len() {
            let win = window_at(&x, &d, k, 5, 2);
            smap_step(&mut sm, &win, &mut gate, ConstraintVectorPolicy::Zero, None, 1e-12).unwrap();
            ap_step(&mut ap, &win, 1.0, 1e-12);
            for (a, b) in sm.w.iter().zip(&ap.w) {
                assert!((a - b).abs() <= 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn smap_scalar_window_is_smnlms() {
        // L = 0 with the simple-choice CV collapses to SM-NLMS at δ = 0.
        let x = gen_input(&InputKind::WhiteGaussian, 200, 7).unwrap();
        let sys = crate::signals::random_gaussian_system(3, 7);
        let (d, _) = synth_desired(&sys, &x, 0.01, 7);
        let mut ap = FilterState::new(3);
        let mut nl = FilterState::new(3);
        let mut g1 = Gate::fixed(0.1);
        let mut g2 = Gate::fixed(0.1);
        for k in 4..x.len() {
            let win = window_at(&x, &d, k, 3, 0);
            smap_step(&mut ap, &win, &mut g1, ConstraintVectorPolicy::SimpleChoice, None, 0.0).unwrap();
            smnlms_step(&mut nl, &win.current(), d[k], &mut g2, 0.0);
            for (a, b) in ap.w.iter().zip(&nl.w) {
                assert!((a - b).abs() <= 1e-11, "k={k} {a} {b}");
            }
        }
    }

    #[test]
    fn smap_gated_update_hits_constraint_vector() {
        // d − Xᵀw' = γ for δ = 0 and a full-rank window.
        let x = gen_input(&InputKind::Ar1(0.5), 100, 11).unwrap();
        let d = gen_input(&InputKind::WhiteGaussian, 100, 12).unwrap();
        let mut st = FilterState::new(6);
        let mut gate = Gate::fixed(1e-6);
        let win = window_at(&x, &d, 50, 6, 2);
        let dec = smap_step(&mut st, &win, &mut gate, ConstraintVectorPolicy::SimpleChoice, None, 0.0).unwrap();
        assert!(dec.updated);
        let cv = dec.cv.unwrap();
        let post = win.error_vec(&st.w);
        for (p, g) in post.iter().zip(&cv) {
            assert!((p - g).abs() <= 1e-10, "{p} vs {g}");
        }
    }

    #[test]
    fn gammabar_first_pass_matches_tables() {
        // p = 0.05, σ_n² = 1 → 1.960 (two-sided Gaussian).
        let g = estimate_gammabar(0.05, 1.0, 0, GammabarMode::FirstPass).unwrap();
        assert!((g - 1.959964).abs() < 1e-4, "{g}");
        // p = 1 → always update.
        let g = estimate_gammabar(1.0, 1.0, 0, GammabarMode::FirstPass).unwrap();
        assert_eq!(g, 0.0);
        assert!(estimate_gammabar(0.0, 1.0, 0, GammabarMode::FirstPass).is_err());
    }

    #[test]
    fn gammabar_refined_exceeds_first_pass() {
        let first = estimate_gammabar(0.05, 0.01, 0, GammabarMode::FirstPass).unwrap();
        let refined = estimate_gammabar(0.05, 0.01, 0, GammabarMode::EmseRefined).unwrap();
        assert!(refined > first, "{refined} vs {first}");
    }

    #[test]
    fn gammabar_monotone_in_p() {
        let mut last = f64::INFINITY;
        for p in [0.01, 0.05, 0.1, 0.3, 0.7, 1.0] {
            let g = estimate_gammabar(p, 0.5, 0, GammabarMode::FirstPass).unwrap();
            assert!(g < last);
            last = g;
        }
    }

    #[test]
    fn timevarying_bound_values() {
        let all_updates = vec![true; 20];
        let g = timevarying_gammabar(&all_updates, 20, 4, 0.01, 5.0, 9.0);
        assert_relative_eq!(g, (5.0_f64 * 0.01).sqrt());
        assert_relative_eq!(g, 0.2236, epsilon = 1e-4);

        let mut sparse = vec![false; 20];
        sparse[3] = true;
        sparse[9] = true;
        sparse[15] = true;
        let g = timevarying_gammabar(&sparse, 20, 4, 0.01, 5.0, 9.0);
        assert_relative_eq!(g, 0.3);
    }

    #[test]
    fn gate_history_drives_timevarying_policy() {
        let config = GateConfig {
            gammabar: 0.0,
            policy: GatePolicy::TimeVarying {
                window: 4,
                threshold: 2,
                sigma_n2: 0.01,
                tau_low: 5.0,
                tau_high: 9.0,
            },
        };
        let mut gate = Gate::new(config);
        // Empty history counts as transient.
        assert_relative_eq!(gate.current_gammabar(), (0.05_f64).sqrt());
        for _ in 0..4 {
            gate.record(false);
        }
        assert_relative_eq!(gate.current_gammabar(), 0.3);
    }

    proptest::proptest! {
        #[test]
        fn gate_consistency(e in -2.0..2.0f64, gammabar in 0.0..1.0f64) {
            let mut st = FilterState::new(0);
            let mut gate = Gate::fixed(gammabar);
            let dec = smnlms_step(&mut st, &[1.0], e, &mut gate, 1e-12);
            proptest::prop_assert_eq!(dec.updated, e.abs() > gammabar);
        }
    }
}
