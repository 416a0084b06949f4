//! The special gates used by the loaders: the `S^r` splitting gate, the
//! two-parameter amplitude-loading unitary `U3(x, γ)`, Y-rotations, and the
//! classically controlled bit-flip layers.
//!
//! `U3(x, γ)` generalizes `S^r`: with a real amplitude `x = 1/√r` and `γ = 1`
//! the two matrices coincide, which is what lets a splitting memory load
//! arbitrary complex amplitudes instead of uniform ones.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::Gate;
use crate::state::Matrix2;

/// Residuals of `γ − |x|²` closer to zero than this are clamped to exactly
/// zero so the final record of a normalized dataset produces a clean 0
/// diagonal instead of the square root of float dust.
pub const GAMMA_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GateError {
    #[error("splitting gate order r must be at least 1")]
    ZeroSplitOrder,
    #[error("gamma must lie in (0, 1], got {0}")]
    GammaOutOfRange(f64),
    #[error(
        "|x|² = {mass:.12} exceeds the residual weight gamma = {gamma:.12}; \
         the amplitudes carry more weight than remains to be loaded"
    )]
    AmplitudeExceedsGamma { mass: f64, gamma: f64 },
    #[error(
        "residual weight underflowed (gamma = {gamma:.3e}) with records remaining at index \
         {record}: the squared amplitudes sum to more than 1"
    )]
    GammaUnderflow { gamma: f64, record: usize },
    #[error("pattern contains non-binary character `{0}`")]
    NonBinaryPattern(char),
    #[error("pattern must be nonempty")]
    EmptyPattern,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity_matrix() -> Matrix2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

pub fn x_matrix() -> Matrix2 {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn h_matrix() -> Matrix2 {
    let s = 1.0 / 2.0f64.sqrt();
    [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
}

/// `Ry(θ) = [[cos(θ/2), −sin(θ/2)], [sin(θ/2), cos(θ/2)]]`.
pub fn ry_matrix(theta: f64) -> Matrix2 {
    let half = theta / 2.0;
    let (sin, cos) = half.sin_cos();
    [[c(cos, 0.0), c(-sin, 0.0)], [c(sin, 0.0), c(cos, 0.0)]]
}

/// The splitting gate `S^r = [[√((r−1)/r), 1/√r], [−1/√r, √((r−1)/r)]]`.
///
/// Applied to the still-processing branch, it carves off one stored pattern
/// with amplitude `1/√r` out of the `r` remaining.
pub fn s_r_matrix(r: u64) -> Result<Matrix2, GateError> {
    if r == 0 {
        return Err(GateError::ZeroSplitOrder);
    }
    let r = r as f64;
    let diag = ((r - 1.0) / r).sqrt();
    let off = 1.0 / r.sqrt();
    Ok([[c(diag, 0.0), c(off, 0.0)], [c(-off, 0.0), c(diag, 0.0)]])
}

/// Angles (θ, λ, φ) for the general single-qubit form
/// `[[cos(θ/2), −e^{iλ} sin(θ/2)], [e^{iφ} sin(θ/2), e^{i(λ+φ)} cos(θ/2)]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct U3Params {
    pub theta: f64,
    pub lambda: f64,
    pub phi: f64,
}

impl U3Params {
    pub fn matrix(&self) -> Matrix2 {
        let (sin, cos) = (self.theta / 2.0).sin_cos();
        [
            [c(cos, 0.0), -Complex64::from_polar(sin, self.lambda)],
            [
                Complex64::from_polar(sin, self.phi),
                Complex64::from_polar(cos, self.lambda + self.phi),
            ],
        ]
    }
}

/// Validated input for the amplitude-loading gate: a complex amplitude `x`
/// and the residual weight `γ` still held by the processing branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadGateSpec {
    amplitude: Complex64,
    gamma: f64,
}

impl LoadGateSpec {
    pub fn new(amplitude: Complex64, gamma: f64) -> Result<Self, GateError> {
        if !(gamma > 0.0 && gamma <= 1.0 + 1e-9) {
            return Err(GateError::GammaOutOfRange(gamma));
        }
        let mass = amplitude.norm_sqr();
        if mass > gamma + GAMMA_CLAMP {
            return Err(GateError::AmplitudeExceedsGamma { mass, gamma });
        }
        Ok(LoadGateSpec { amplitude, gamma })
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn residual(&self) -> f64 {
        let residual = self.gamma - self.amplitude.norm_sqr();
        if residual.abs() < GAMMA_CLAMP {
            0.0
        } else {
            residual
        }
    }
}

/// Extracts (θ, λ, φ) so that [`U3Params::matrix`] reproduces
/// `[[√((γ−|x|²)/γ), x/√γ], [−x*/√γ, √((γ−|x|²)/γ)]]`.
///
/// λ is the phase of `−x`: since `−e^{iλ} sin(θ/2) = x/√γ` with
/// `sin(θ/2) ≥ 0`, this single formula is valid in every quadrant of the
/// complex plane, and φ = −λ keeps the diagonal real. For `x = 0` the matrix
/// is the identity and λ is fixed at 0.
pub fn u3_params(x: Complex64, gamma: f64) -> Result<U3Params, GateError> {
    let spec = LoadGateSpec::new(x, gamma)?;
    let cos_half = (spec.residual() / gamma).sqrt().min(1.0);
    let theta = 2.0 * cos_half.acos();
    let lambda = if x.norm_sqr() == 0.0 {
        0.0
    } else {
        (-x.im).atan2(-x.re)
    };
    Ok(U3Params {
        theta,
        lambda,
        phi: -lambda,
    })
}

/// The amplitude-loading gate `[[√((γ−|x|²)/γ), x/√γ], [−x*/√γ, √((γ−|x|²)/γ)]]`.
pub fn u3_matrix(spec: &LoadGateSpec) -> Matrix2 {
    let root_gamma = spec.gamma.sqrt();
    let diag = (spec.residual() / spec.gamma).sqrt();
    let x = spec.amplitude;
    [
        [c(diag, 0.0), x / root_gamma],
        [-x.conj() / root_gamma, c(diag, 0.0)],
    ]
}

/// Which bit value triggers a classically controlled flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipPolarity {
    /// Flip where the pattern bit is 0 (the flip/flop layers of the
    /// address-rotation loaders).
    FlipOnZero,
    /// Flip where the pattern bit is 1.
    FlipOnOne,
}

/// One X gate per pattern position whose bit matches the polarity, targeting
/// `base + j` for position `j`. Applying the layer twice is the identity.
pub fn classical_flip_layer(
    pattern: &str,
    polarity: FlipPolarity,
    base: usize,
) -> Result<Vec<Gate>, GateError> {
    if pattern.is_empty() {
        return Err(GateError::EmptyPattern);
    }
    let mut gates = Vec::new();
    for (j, ch) in pattern.chars().enumerate() {
        let flip = match ch {
            '0' => polarity == FlipPolarity::FlipOnZero,
            '1' => polarity == FlipPolarity::FlipOnOne,
            other => return Err(GateError::NonBinaryPattern(other)),
        };
        if flip {
            gates.push(Gate::x(base + j));
        }
    }
    Ok(gates)
}

/// The classical-quantum gate keyed by one pattern bit: for `p = 0` an
/// unconditional X on the memory qubit, for `p = 1` an X on the memory qubit
/// controlled by `u₂ = 1`.
pub fn classical_quantum_gate(pattern_bit: bool, u2: usize, memory: usize) -> Gate {
    if pattern_bit {
        Gate::x(memory).controlled_by_one(u2)
    } else {
        Gate::x(memory)
    }
}
