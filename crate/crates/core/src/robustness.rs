//! Runtime verification of the l2-stability properties of the
//! set-membership updates: per-iteration energy pairs `g1/g2`, global
//! energy ratios, monotonicity counters, the known-noise-bound guard and
//! a divergence monitor.
//!
//! Traces are recorded against the ground-truth system, and the window
//! Gram inverse `A(k)` is recomputed here rather than taken from the
//! filter, so the checkers stay independent of the implementation under
//! test.

use crate::classic::FilterState;
use crate::linalg::{self, Mat};
use crate::signals::window_at;
use crate::smcore::{smap_step, smnlms_step, ConstraintVectorPolicy, Gate, UpdateDecision};

/// Absolute tolerance for the equality branch of the local checks; strict
/// branches accept any margin above `-EQ_TOL`.
pub const EQ_TOL: f64 = 1e-12;

/// Tolerance for the numeric re-check of the SM-AP energy identity.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Deviation-energy ceiling treated as an overflow by the divergence
/// monitor.
pub const OVERFLOW_SENTINEL: f64 = 1e12;

/// Per-iteration record; `wtilde_sq` is `‖w_o − w(k)‖²` entering the
/// iteration, recomputed from ground truth.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub wtilde_sq: f64,
    /// Noiseless error `ẽ(k) = w̃ᵀ(k)x(k)`.
    pub etilde: f64,
    pub noise: f64,
    /// `μ̄(k) = 1 − γ̄/|e(k)|`; zero when gated off.
    pub mubar: f64,
    /// `α(k) = ‖x(k)‖² + δ`.
    pub alpha: f64,
    pub updated: bool,
    /// SM-AP only: noiseless error vector `Xᵀw̃`.
    pub etilde_vec: Option<Vec<f64>>,
    /// SM-AP only: windowed noise vector.
    pub noise_vec: Option<Vec<f64>>,
    /// SM-AP only: `(XᵀX)⁻¹`, δ-loaded when the plain Gram is singular.
    pub a_mat: Option<Mat>,
    /// The plain Gram was singular (zero-padded start-up); the local
    /// energy trichotomy presumes a full-rank window and is reported but
    /// not judged on such steps.
    pub rank_deficient: bool,
    /// SM-AP only: constraint vector used by the update.
    pub cv: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RobustnessTrace {
    pub steps: Vec<TraceStep>,
    /// `‖w̃(K)‖²` after the final iteration.
    pub final_wtilde_sq: f64,
}

impl RobustnessTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `‖w̃(k)‖²`, valid for `k = 0..=len()`.
    pub fn wtilde_sq(&self, k: usize) -> f64 {
        if k < self.steps.len() {
            self.steps[k].wtilde_sq
        } else {
            self.final_wtilde_sq
        }
    }
}

fn wtilde_sq_of(w_o: &[f64], w: &[f64]) -> f64 {
    w_o.iter().zip(w).map(|(o, w)| (o - w) * (o - w)).sum()
}

/// Runs SM-NLMS over the full sequence, recording the robustness trace.
pub fn record_smnlms_run(
    w_o: &[f64],
    x: &[f64],
    d: &[f64],
    noise: &[f64],
    gate: &mut Gate,
    delta: f64,
    state: &mut FilterState,
) -> (RobustnessTrace, Vec<UpdateDecision>) {
    let order = w_o.len() - 1;
    let mut steps = Vec::with_capacity(x.len());
    let mut decisions = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let xk = window_at(x, d, k, order, 0).current();
        let wtilde: Vec<f64> = w_o.iter().zip(&state.w).map(|(o, w)| o - w).collect();
        let wtilde_sq = linalg::norm_sq(&wtilde);
        let etilde = linalg::dot(&wtilde, &xk);
        let alpha = linalg::norm_sq(&xk) + delta;
        let dec = smnlms_step(state, &xk, d[k], gate, delta);
        steps.push(TraceStep {
            wtilde_sq,
            etilde,
            noise: noise[k],
            mubar: dec.mu_eff,
            alpha,
            updated: dec.updated,
            etilde_vec: None,
            noise_vec: None,
            a_mat: None,
            rank_deficient: false,
            cv: None,
        });
        decisions.push(dec);
    }
    let trace = RobustnessTrace {
        steps,
        final_wtilde_sq: wtilde_sq_of(w_o, &state.w),
    };
    (trace, decisions)
}

/// Runs SM-AP over the full sequence, recording the trace with the
/// recomputed `A(k)`, the windowed noise and the constraint vector used.
pub fn record_smap_run(
    w_o: &[f64],
    x: &[f64],
    d: &[f64],
    noise: &[f64],
    reuse: usize,
    gate: &mut Gate,
    cv_policy: ConstraintVectorPolicy,
    delta: f64,
    state: &mut FilterState,
) -> (RobustnessTrace, Vec<UpdateDecision>) {
    let order = w_o.len() - 1;
    let mut steps = Vec::with_capacity(x.len());
    let mut decisions = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let win = window_at(x, d, k, order, reuse);
        let wtilde: Vec<f64> = w_o.iter().zip(&state.w).map(|(o, w)| o - w).collect();
        let wtilde_sq = linalg::norm_sq(&wtilde);
        let etilde_vec: Vec<f64> = (0..=reuse)
            .map(|j| linalg::dot(&win.column(j), &wtilde))
            .collect();
        let noise_vec: Vec<f64> = (0..=reuse)
            .map(|j| {
                let idx = k as isize - j as isize;
                if idx < 0 {
                    0.0
                } else {
                    noise[idx as usize]
                }
            })
            .collect();
        let gram = linalg::gram_of_columns(&win.x_mat);
        let plain = linalg::invert(&gram);
        let rank_deficient = plain.is_none();
        let a_mat = plain.or_else(|| {
            let mut reg = gram.clone();
            linalg::add_diagonal(&mut reg, delta);
            linalg::invert(&reg)
        });
        let alpha = linalg::norm_sq(&win.current()) + delta;
        let dec = smap_step(state, &win, gate, cv_policy, Some(&noise_vec), delta)
            .expect("noise realization is always supplied here");
        steps.push(TraceStep {
            wtilde_sq,
            etilde: etilde_vec[0],
            noise: noise[k],
            mubar: dec.mu_eff,
            alpha,
            updated: dec.updated,
            etilde_vec: Some(etilde_vec),
            noise_vec: Some(noise_vec),
            a_mat,
            rank_deficient,
            cv: dec.cv.clone(),
        });
        decisions.push(dec);
    }
    let trace = RobustnessTrace {
        steps,
        final_wtilde_sq: wtilde_sq_of(w_o, &state.w),
    };
    (trace, decisions)
}

/// Outcome of a local energy check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Non-update iteration: energies must match exactly.
    Equality,
    /// Gated update with the required strict decrease.
    Decrease,
    /// Equality branch of the SM-AP trichotomy (condition exactly met).
    Balanced,
    /// Gated update where the energies grew (allowed only for SM-AP with
    /// a poorly chosen constraint vector).
    Increase,
    /// Rank-deficient window: the trichotomy does not apply.
    Skipped,
    /// The relation demanded by the theory failed.
    Violation,
}

impl Verdict {
    pub fn holds(self) -> bool {
        !matches!(self, Verdict::Violation)
    }
}

/// Local SM-NLMS check at iteration `k`:
/// without an update `g1 = ‖w̃(k+1)‖²` must equal `g2 = ‖w̃(k)‖²`;
/// with an update `g1 = ‖w̃(k+1)‖² + (μ̄/α)ẽ²` must fall strictly below
/// `g2 = ‖w̃(k)‖² + (μ̄/α)n²`.
pub fn smnlms_local_check(trace: &RobustnessTrace, k: usize) -> (f64, f64, Verdict) {
    let s = &trace.steps[k];
    let next = trace.wtilde_sq(k + 1);
    if !s.updated {
        let verdict = if (next - s.wtilde_sq).abs() <= EQ_TOL {
            Verdict::Equality
        } else {
            Verdict::Violation
        };
        return (next, s.wtilde_sq, verdict);
    }
    let scale = s.mubar / s.alpha;
    let g1 = next + scale * s.etilde * s.etilde;
    let g2 = s.wtilde_sq + scale * s.noise * s.noise;
    let verdict = if g1 - g2 < EQ_TOL {
        Verdict::Decrease
    } else {
        Verdict::Violation
    };
    (g1, g2, verdict)
}

/// Global SM-NLMS energy ratio over `[0, K)`.
#[derive(Debug, Clone, Copy)]
pub struct GlobalRatio {
    pub numerator: f64,
    pub denominator: f64,
    pub updates: usize,
}

impl GlobalRatio {
    pub fn ratio(&self) -> f64 {
        self.numerator / self.denominator
    }

    /// No update happened, so only `‖w̃(K)‖² = ‖w̃(0)‖²` is claimed.
    pub fn is_degenerate(&self) -> bool {
        self.updates == 0
    }
}

/// `(‖w̃(K)‖² + Σ(μ̄/α)ẽ²) / (‖w̃(0)‖² + Σ(μ̄/α)n²)` over the update set.
pub fn smnlms_global_ratio(trace: &RobustnessTrace, upto: usize) -> GlobalRatio {
    let mut num = trace.wtilde_sq(upto);
    let mut den = trace.wtilde_sq(0);
    let mut updates = 0;
    for s in &trace.steps[..upto] {
        if s.updated {
            let scale = s.mubar / s.alpha;
            num += scale * s.etilde * s.etilde;
            den += scale * s.noise * s.noise;
            updates += 1;
        }
    }
    GlobalRatio {
        numerator: num,
        denominator: den,
        updates,
    }
}

/// Counts iterations where the deviation energy grew, together with the
/// theoretical bound `erfc(√(τ/2))` on the probability of that event for
/// `γ̄ = √(τσ_n²)`.
pub fn monotonicity_counter(trace: &RobustnessTrace, tau: f64) -> (usize, f64) {
    let count = (0..trace.len())
        .filter(|&k| trace.wtilde_sq(k + 1) > trace.wtilde_sq(k))
        .count();
    (count, libm::erfc((tau / 2.0).sqrt()))
}

#[derive(Debug, Clone, Copy)]
pub struct GuardReport {
    /// The recorded noise actually stayed within `[−B, B]`.
    pub noise_within_bound: bool,
    /// Iterations where `‖w̃(k+1)‖² > ‖w̃(k)‖² + EQ_TOL`.
    pub increases: usize,
    /// Gated updates observed.
    pub updates: usize,
}

impl GuardReport {
    pub fn holds(&self) -> bool {
        self.noise_within_bound && self.increases == 0
    }
}

/// Known-noise-bound guard: with `|n(k)| ≤ B` and `γ̄ ≥ 2B` the sequence
/// `‖w̃(k)‖²` never increases. Noise exceeding `B` invalidates the check
/// (reported, not asserted).
pub fn known_bound_guard(trace: &RobustnessTrace, bound: f64) -> GuardReport {
    let noise_within_bound = trace.steps.iter().all(|s| s.noise.abs() <= bound);
    let increases = (0..trace.len())
        .filter(|&k| trace.wtilde_sq(k + 1) > trace.wtilde_sq(k) + EQ_TOL)
        .count();
    let updates = trace.steps.iter().filter(|s| s.updated).count();
    GuardReport {
        noise_within_bound,
        increases,
        updates,
    }
}

#[derive(Debug, Clone)]
pub struct SmapLocalCheck {
    pub g1: f64,
    pub g2: f64,
    /// `γᵀAγ − 2γᵀAn`; its sign selects the expected branch.
    pub condition: f64,
    /// Sign of `condition` with a `±EQ_TOL` dead zone.
    pub condition_sign: i8,
    /// Residual of `‖w̃(k+1)‖² + ẽᵀAẽ = ‖w̃‖² + nᵀAn − 2γᵀAn + γᵀAγ`.
    pub identity_residual: f64,
    pub verdict: Verdict,
}

fn quad_form(a: &[Vec<f64>], u: &[f64], v: &[f64]) -> f64 {
    linalg::dot(u, &linalg::mat_vec(a, v))
}

/// Local SM-AP check at iteration `k`: evaluates `g1 = ‖w̃(k+1)‖² + ẽᵀAẽ`
/// and `g2 = ‖w̃(k)‖² + nᵀAn` and matches their order against the sign of
/// `γᵀAγ − 2γᵀAn`.
pub fn smap_local_check(trace: &RobustnessTrace, k: usize) -> SmapLocalCheck {
    let s = &trace.steps[k];
    let next = trace.wtilde_sq(k + 1);
    if !s.updated {
        let diff = (next - s.wtilde_sq).abs();
        return SmapLocalCheck {
            g1: next,
            g2: s.wtilde_sq,
            condition: 0.0,
            condition_sign: 0,
            identity_residual: diff,
            verdict: if diff <= EQ_TOL {
                Verdict::Equality
            } else {
                Verdict::Violation
            },
        };
    }
    let a = s.a_mat.as_ref().expect("SM-AP trace step carries A(k)");
    let etv = s.etilde_vec.as_ref().expect("SM-AP trace step");
    let nv = s.noise_vec.as_ref().expect("SM-AP trace step");
    let cv = s.cv.as_ref().expect("updated step carries its CV");

    let g1 = next + quad_form(a, etv, etv);
    let g2 = s.wtilde_sq + quad_form(a, nv, nv);
    let condition = quad_form(a, cv, cv) - 2.0 * quad_form(a, cv, nv);
    let condition_sign = if condition > EQ_TOL {
        1
    } else if condition < -EQ_TOL {
        -1
    } else {
        0
    };
    let identity_residual = (g1 - (g2 + condition)).abs();
    if s.rank_deficient {
        return SmapLocalCheck {
            g1,
            g2,
            condition,
            condition_sign,
            identity_residual,
            verdict: Verdict::Skipped,
        };
    }
    let diff = g1 - g2;
    let branch_ok = match condition_sign {
        -1 => diff < IDENTITY_TOL,
        0 => diff.abs() <= IDENTITY_TOL,
        _ => diff > -IDENTITY_TOL,
    };
    let verdict = if !branch_ok || identity_residual > IDENTITY_TOL * (1.0 + g2.abs()) {
        Verdict::Violation
    } else {
        match condition_sign {
            -1 => Verdict::Decrease,
            0 => Verdict::Balanced,
            _ => Verdict::Increase,
        }
    };
    SmapLocalCheck {
        g1,
        g2,
        condition,
        condition_sign,
        identity_residual,
        verdict,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DivergenceReport {
    pub max_wtilde_sq: f64,
    pub finite: bool,
}

/// Non-divergence monitor: with bounded noise and finite γ̄ the deviation
/// energy must stay finite; reports the maximum observed value against
/// the overflow sentinel.
pub fn divergence_monitor(trace: &RobustnessTrace) -> DivergenceReport {
    let mut max = trace.final_wtilde_sq;
    for k in 0..trace.len() {
        max = max.max(trace.wtilde_sq(k));
    }
    DivergenceReport {
        max_wtilde_sq: max,
        finite: max.is_finite() && max < OVERFLOW_SENTINEL,
    }
}
