//! Set-membership partial-update affine projection (SM-PUAP) and the
//! improved variant that bounds the coefficient disturbance by the
//! hypersphere with the minimum-disturbance SM-AP radius (I-SM-PUAP).

use rand::seq::index::sample;

use crate::classic::FilterState;
use crate::linalg;
use crate::signals::{rng_for, RegressorWindow};
use crate::smcore::{make_cv, sm_gate, ConstraintVectorPolicy, Gate, UpdateDecision};

/// Norm below which the partial-update direction is treated as degenerate
/// and the step skipped.
pub const DEGENERATE_DIRECTION: f64 = 1e-14;

/// How the `M` coefficients to update are picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    /// Coefficients with the largest magnitudes; ties break toward the
    /// lower index.
    LargestMagnitude,
    /// Seeded uniform choice of `M` distinct indices.
    Random,
    /// The first `M` indices.
    Fixed,
}

/// The index set `I_M(k)` of coefficients allowed to move this iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    pub indices: Vec<usize>,
    pub rule: SelectionRule,
}

impl IndexSet {
    pub fn mask(&self, len: usize) -> Vec<bool> {
        let mut m = vec![false; len];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }
}

/// Picks `M` of the `N+1` coefficient indices according to the rule.
/// Deterministic for `LargestMagnitude` and `Fixed`; seeded for `Random`
/// (pass a per-iteration seed to re-draw each step).
pub fn select_index_set(w: &[f64], m: usize, rule: SelectionRule, seed: u64) -> IndexSet {
    debug_assert!(m >= 1 && m <= w.len());
    let mut indices: Vec<usize> = match rule {
        SelectionRule::LargestMagnitude => {
            let mut order: Vec<usize> = (0..w.len()).collect();
            order.sort_by(|&i, &j| {
                w[j].abs()
                    .partial_cmp(&w[i].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(i.cmp(&j))
            });
            order.truncate(m);
            order
        }
        SelectionRule::Random => {
            let mut rng = rng_for(seed, 3);
            sample(&mut rng, w.len(), m).into_vec()
        }
        SelectionRule::Fixed => (0..m).collect(),
    };
    indices.sort_unstable();
    IndexSet {
        indices,
        rule,
    }
}

/// Rows of `X` restricted to the selected coefficients (this is `C·X`
/// without materializing the selector matrix).
fn masked_coeff(
    win: &RegressorWindow,
    idx: &IndexSet,
    rhs: &[f64],
    delta: f64,
) -> Option<(Vec<f64>, bool)> {
    // Gram of the masked columns: Xᵀ·C·X.
    let cols = win.reuse + 1;
    let mut gram = vec![vec![0.0; cols]; cols];
    for &i in &idx.indices {
        let row = &win.x_mat[i];
        for a in 0..cols {
            for b in a..cols {
                gram[a][b] += row[a] * row[b];
            }
        }
    }
    for a in 0..cols {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }
    // The paper loads the diagonal unconditionally here, so the masked
    // Gram is always solvable.
    linalg::add_diagonal(&mut gram, delta);
    let coeff = linalg::solve(&gram, rhs)?;
    Some((coeff, false))
}

fn apply_masked_update(state: &mut FilterState, win: &RegressorWindow, idx: &IndexSet, coeff: &[f64], scale: f64) {
    // Only selected coordinates are written, keeping the complement
    // bit-identical across the step.
    for &i in &idx.indices {
        let mut acc = 0.0;
        for (j, &cj) in coeff.iter().enumerate() {
            acc += win.x_mat[i][j] * cj;
        }
        state.w[i] += scale * acc;
    }
}

/// SM-PUAP: gated update `w' = w + C·X·P·(e − γ)` with
/// `P = (XᵀCX + δI)⁻¹`; coefficients outside the index set stay put.
pub fn smpuap_step(
    state: &mut FilterState,
    win: &RegressorWindow,
    gate: &mut Gate,
    cv_policy: ConstraintVectorPolicy,
    idx: &IndexSet,
    delta: f64,
) -> crate::Result<UpdateDecision> {
    let e_vec = win.error_vec(&state.w);
    let e = e_vec[0];
    let gammabar = gate.current_gammabar();
    let mut dec = UpdateDecision {
        err: e,
        ..Default::default()
    };
    if sm_gate(e, gammabar) {
        let (cv, oob) = make_cv(cv_policy, &e_vec, None, gammabar)?;
        let rhs: Vec<f64> = e_vec.iter().zip(&cv).map(|(e, g)| e - g).collect();
        if let Some((coeff, _)) = masked_coeff(win, idx, &rhs, delta) {
            apply_masked_update(state, win, idx, &coeff, 1.0);
            dec.updated = true;
            dec.mu_eff = 1.0;
            dec.cv = Some(cv);
            dec.cv_out_of_bound = oob;
        } else {
            dec.degenerate = true;
        }
    }
    gate.record(dec.updated);
    Ok(dec)
}

/// I-SM-PUAP: gated update along the zero-CV partial direction
/// `a(k) = C·X·P·e`, with step length equal to the hypersphere radius
/// `μ(k) = min±|wᵀx − d ± γ̄| / ‖x‖₂`, so that `‖w' − w‖ = μ(k)`.
pub fn ismpuap_step(
    state: &mut FilterState,
    win: &RegressorWindow,
    gate: &mut Gate,
    idx: &IndexSet,
    delta: f64,
) -> UpdateDecision {
    let e_vec = win.error_vec(&state.w);
    let e = e_vec[0];
    let gammabar = gate.current_gammabar();
    let mut dec = UpdateDecision {
        err: e,
        ..Default::default()
    };
    if sm_gate(e, gammabar) {
        let x_norm = linalg::norm(&win.current());
        let mu = ((-e + gammabar).abs()).min((-e - gammabar).abs()) / x_norm;
        if let Some((coeff, _)) = masked_coeff(win, idx, &e_vec, delta) {
            let mut direction = vec![0.0; state.w.len()];
            for &i in &idx.indices {
                let mut acc = 0.0;
                for (j, &cj) in coeff.iter().enumerate() {
                    acc += win.x_mat[i][j] * cj;
                }
                direction[i] = acc;
            }
            let a_norm = linalg::norm(&direction);
            if a_norm > DEGENERATE_DIRECTION {
                for &i in &idx.indices {
                    state.w[i] += mu / a_norm * direction[i];
                }
                dec.updated = true;
                dec.mu_eff = mu;
            } else {
                dec.degenerate = true;
            }
        } else {
            dec.degenerate = true;
        }
    }
    gate.record(dec.updated);
    dec
}
