//! Input-signal generation, unknown-system presets, desired-signal
//! synthesis and regressor-window assembly shared by every filter.
//!
//! All generation is pure given a seed; per-trial streams are derived from
//! the base seed and trial index so Monte-Carlo workers never share state.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Deterministic generator for a given `(seed, stream)` pair.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputKind {
    WhiteGaussian,
    Bpsk,
    /// First-order autoregressive process `x(k) = ρ·x(k−1) + u(k−1)` with
    /// unit-variance white Gaussian innovations.
    Ar1(f64),
    /// `x(k) = Σ c_j·x(k−1−j) + u(k)`.
    ArCustom(Vec<f64>),
}

impl InputKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "white" | "white_gaussian" => Ok(InputKind::WhiteGaussian),
            "bpsk" => Ok(InputKind::Bpsk),
            other => {
                if let Some(arg) = other.strip_prefix("ar1(").and_then(|r| r.strip_suffix(')')) {
                    let rho: f64 = arg
                        .parse()
                        .map_err(|_| Error::Config(format!("bad AR coefficient `{arg}`")))?;
                    Ok(InputKind::Ar1(rho))
                } else {
                    Err(Error::Config(format!("unknown input kind `{other}`")))
                }
            }
        }
    }
}

/// Generates `len` samples of the requested process, deterministically
/// from `seed`.
pub fn gen_input(kind: &InputKind, len: usize, seed: u64) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::Config("input length must be positive".into()));
    }
    let mut rng = rng_for(seed, 0);
    match kind {
        InputKind::WhiteGaussian => Ok((0..len).map(|_| rng.sample(StandardNormal)).collect()),
        InputKind::Bpsk => Ok((0..len)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect()),
        InputKind::Ar1(rho) => {
            if rho.abs() >= 1.0 {
                return Err(Error::Config(format!("unstable AR(1) coefficient {rho}")));
            }
            let mut x = Vec::with_capacity(len);
            let mut prev = 0.0;
            let mut prev_noise = 0.0;
            for _ in 0..len {
                let sample = rho * prev + prev_noise;
                x.push(sample);
                prev = sample;
                prev_noise = rng.sample::<f64, _>(StandardNormal);
            }
            Ok(x)
        }
        InputKind::ArCustom(coeffs) => {
            let gain: f64 = coeffs.iter().map(|c| c.abs()).sum();
            if gain >= 1.0 {
                return Err(Error::Config(format!(
                    "unstable AR coefficients (sum of magnitudes {gain:.3} >= 1)"
                )));
            }
            let mut x: Vec<f64> = Vec::with_capacity(len);
            for k in 0..len {
                let mut sample: f64 = rng.sample(StandardNormal);
                for (j, c) in coeffs.iter().enumerate() {
                    let idx = k as isize - 1 - j as isize;
                    if idx >= 0 {
                        sample += c * x[idx as usize];
                    }
                }
                x.push(sample);
            }
            Ok(x)
        }
    }
}

/// An unknown system to identify: coefficients plus a preset label.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub coeffs: Vec<f64>,
    pub label: String,
}

impl SystemModel {
    pub fn new(coeffs: Vec<f64>, label: impl Into<String>) -> Self {
        SystemModel {
            coeffs,
            label: label.into(),
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Sparse system used throughout the sparse-modeling experiments.
pub const CH6_WO: [f64; 15] = [
    24e-2, 2e-8, -23e-2, -3e-7, 5e-1, -1e-9, 2e-1, 1e-7, -5e-8, 12e-6, 1e-8, -5e-6, 4e-6, -1e-7,
    -2e-1,
];

/// Block-sparse companion of [`CH6_WO`].
pub const CH6_WO_PRIME: [f64; 15] = [
    2e-7, -21e-10, 17e-8, 21e-8, -3e-7, 24e-2, 7e-1, 2e-1, 33e-2, -6e-1, -5e-7, 18e-9, -5e-7,
    21e-8, -11e-8,
];

/// Symmetric-block sparse companion of [`CH6_WO`].
pub const CH6_WO_DPRIME: [f64; 15] = [
    2e-8, -1e-9, 1e-7, -3e-7, -64e-3, 2e-1, 5e-1, 2e-1, -64e-3, -5e-5, 12e-6, 1e-8, -5e-6, 4e-6,
    -1e-5,
];

/// Channel impulse response for the equalization scenario.
pub const CH5_CHANNEL: [f64; 8] = [1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0];

fn ch7_block_low() -> Vec<f64> {
    (0..40)
        .map(|i| match i {
            10..=14 => 0.05 * (i as f64 - 9.0),
            15..=24 => 0.3,
            25..=29 => 0.3 - 0.05 * (i as f64 - 24.0),
            _ => 0.0,
        })
        .collect()
}

fn ch7_block_low_lcf() -> Vec<f64> {
    (0..40)
        .map(|i| match i {
            10..=17 => 0.04 + 0.01 * (i as f64 - 9.0),
            18..=21 => 0.5,
            22..=29 => 0.13 - 0.01 * (i as f64 - 21.0),
            _ => 0.0,
        })
        .collect()
}

/// Loads one of the named coefficient presets.
///
/// `random_gaussian(N,seed)` draws `N+1` standard-normal coefficients.
pub fn load_system_preset(name: &str) -> Result<SystemModel> {
    let coeffs = match name {
        "ch6_wo" => CH6_WO.to_vec(),
        "ch6_wo_prime" => CH6_WO_PRIME.to_vec(),
        "ch6_wo_dprime" => CH6_WO_DPRIME.to_vec(),
        "ch5_channel" => CH5_CHANNEL.to_vec(),
        "ch7_lowpass_0.4" => vec![0.4; 40],
        "ch7_highpass_alt" => (0..40)
            .map(|i| if i % 2 == 0 { 0.4 } else { -0.4 })
            .collect(),
        "ch7_interp_low" => (0..40).map(|i| if i % 2 == 0 { 0.4 } else { 0.0 }).collect(),
        "ch7_interp_high" => (0..40)
            .map(|i| match i % 4 {
                0 => 0.4,
                2 => -0.4,
                _ => 0.0,
            })
            .collect(),
        "ch7_block_low" => ch7_block_low(),
        "ch7_block_high" => ch7_block_low()
            .iter()
            .enumerate()
            .map(|(i, w)| if i % 2 == 0 { -w } else { *w })
            .collect(),
        "ch7_block_low_lcf" => ch7_block_low_lcf(),
        other => {
            if let Some(args) = other
                .strip_prefix("random_gaussian(")
                .and_then(|r| r.strip_suffix(')'))
            {
                let mut parts = args.split(',');
                let n: usize = parts
                    .next()
                    .and_then(|p| p.trim().parse().ok())
                    .ok_or_else(|| Error::UnknownPreset(other.into()))?;
                let seed: u64 = parts
                    .next()
                    .and_then(|p| p.trim().parse().ok())
                    .ok_or_else(|| Error::UnknownPreset(other.into()))?;
                return Ok(random_gaussian_system(n, seed));
            }
            return Err(Error::UnknownPreset(other.into()));
        }
    };
    Ok(SystemModel::new(coeffs, name))
}

/// `N+1` standard-normal coefficients, deterministic in `seed`.
pub fn random_gaussian_system(order: usize, seed: u64) -> SystemModel {
    let mut rng = rng_for(seed, 1);
    let coeffs = (0..=order).map(|_| rng.sample(StandardNormal)).collect();
    SystemModel::new(coeffs, format!("random_gaussian({order},{seed})"))
}

/// Loads coefficients from a plain-text file: one real per line, `#`
/// starts a comment.
pub fn load_system_file(path: &std::path::Path) -> Result<SystemModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut coeffs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 = body.parse().map_err(|_| {
            Error::Config(format!(
                "{}:{}: not a number: `{}`",
                path.display(),
                lineno + 1,
                body
            ))
        })?;
        coeffs.push(v);
    }
    if coeffs.is_empty() {
        return Err(Error::Config(format!(
            "{}: no coefficients found",
            path.display()
        )));
    }
    Ok(SystemModel::new(coeffs, path.display().to_string()))
}

/// Synthesizes `d(k) = w_oᵀx(k) + n(k)` and returns both the desired
/// sequence and the noise realization (the latter feeds the noise-vector
/// constraint policy and the robustness checkers).
pub fn synth_desired(sys: &SystemModel, x: &[f64], sigma_n2: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(sigma_n2 >= 0.0);
    let mut rng = rng_for(seed, 2);
    let sigma = sigma_n2.sqrt();
    let n: Vec<f64> = (0..x.len())
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let d = synth_desired_with_noise(sys, x, &n);
    (d, n)
}

/// As [`synth_desired`] but with a caller-provided noise sequence.
pub fn synth_desired_with_noise(sys: &SystemModel, x: &[f64], n: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut acc = 0.0;
            for (i, w) in sys.coeffs.iter().enumerate() {
                if k >= i {
                    acc += w * x[k - i];
                }
            }
            acc + n[k]
        })
        .collect()
}

/// Uniform noise on `[−B, B]`, for the known-noise-bound experiments.
pub fn uniform_noise(len: usize, bound: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, 2);
    (0..len).map(|_| rng.random_range(-bound..=bound)).collect()
}

/// The `(N+1)x(L+1)` input matrix `X(k) = [x(k) … x(k−L)]` together with
/// the matching desired vector. Pre-history is zero-padded.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorWindow {
    /// Row-major: `x_mat[i][j] = x(k − j − i)`.
    pub x_mat: Vec<Vec<f64>>,
    /// `d[j] = d(k − j)`.
    pub d: Vec<f64>,
    pub order: usize,
    pub reuse: usize,
}

impl RegressorWindow {
    /// Column `j`, i.e. the tapped delay line at time `k − j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x_mat.iter().map(|row| row[j]).collect()
    }

    /// The current input vector `x(k)`.
    pub fn current(&self) -> Vec<f64> {
        self.column(0)
    }

    /// A priori error vector `d − Xᵀw` for the current weights.
    pub fn error_vec(&self, w: &[f64]) -> Vec<f64> {
        (0..=self.reuse)
            .map(|j| {
                let mut acc = self.d[j];
                for i in 0..=self.order {
                    acc -= self.x_mat[i][j] * w[i];
                }
                acc
            })
            .collect()
    }
}

fn sample_at(x: &[f64], idx: isize) -> f64 {
    if idx < 0 {
        0.0
    } else {
        x[idx as usize]
    }
}

/// Assembles the regressor window at time `k` for filter order `n` and
/// data-reuse depth `l`.
pub fn window_at(x: &[f64], d: &[f64], k: usize, n: usize, l: usize) -> RegressorWindow {
    let mut x_mat = vec![vec![0.0; l + 1]; n + 1];
    for (i, row) in x_mat.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = sample_at(x, k as isize - j as isize - i as isize);
        }
    }
    let d_vec = (0..=l).map(|j| sample_at(d, k as isize - j as isize)).collect();
    RegressorWindow {
        x_mat,
        d: d_vec,
        order: n,
        reuse: l,
    }
}
