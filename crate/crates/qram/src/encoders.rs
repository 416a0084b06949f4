//! The four data-loading algorithms.
//!
//! * [`ff_qram_encode`] — flip–rotate–flop amplitude loading over an address
//!   register plus one post-selection qubit.
//! * [`pqm_store`] — deterministic storage of binary patterns into a uniform
//!   superposition via splitting gates.
//! * [`ffp_qram_encode`] — the combination: the stored-pattern superposition
//!   becomes the address register, raising the post-selection probability
//!   from `1/2^n` to `1/M`.
//! * [`a_pqm_encode`] — the adapted memory that loads complex amplitudes
//!   deterministically on `n + 2` qubits, no post-selection at all.
//!
//! Every encoder returns both the directly computed final state and the
//! circuit that produces it, so the two can be checked against each other.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate};
use crate::dataset::{DataRecord, Dataset, DatasetError};
use crate::gates::{
    classical_flip_layer, classical_quantum_gate, s_r_matrix, u3_matrix, FlipPolarity, GateError,
    LoadGateSpec, GAMMA_CLAMP,
};
use crate::state::{Control, RegisterLayout, StateError, StateVector};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("record {index}: {source}")]
    GateAtRecord { index: usize, source: GateError },
    #[error("amplitude {value} is outside [-1, 1]; preprocess the data first")]
    AmplitudeOutOfRange { value: f64 },
    #[error("record {index}: amplitude {value} is outside [-1, 1]; preprocess the data first")]
    RecordAmplitudeOutOfRange { index: usize, value: f64 },
    #[error(
        "record {index}: amplitude {re}{im:+}i is complex; this loader takes real \
         amplitudes — use the a-pqm loader for complex data"
    )]
    ComplexAmplitude { index: usize, re: f64, im: f64 },
    #[error("register `{register}` must read |0⟩ in every populated branch of the initial state")]
    RegisterNotCleared { register: String },
    #[error("initial state needs register `{register}` of width {width}")]
    MissingRegister { register: String, width: usize },
    #[error("dataset is not normalized (Σ|x|² = {sum:.12}); normalize it or use a loader that post-selects")]
    NotNormalized { sum: f64 },
    #[error("no patterns to store")]
    NoPatterns,
    #[error("pattern {index} (`{pattern}`) has width {got}, expected {expected}")]
    PatternWidth {
        index: usize,
        pattern: String,
        got: usize,
        expected: usize,
    },
    #[error("pattern {index} (`{pattern}`) contains a non-binary character")]
    NonBinaryPattern { index: usize, pattern: String },
    #[error("pattern {index} (`{pattern}`) duplicates an earlier one; stored amplitudes would collide")]
    DuplicatePattern { index: usize, pattern: String },
    #[error("{m} patterns exceed the 2^{n} distinct patterns of width {n}")]
    TooManyPatterns { m: usize, n: usize },
    #[error("all amplitudes are zero; nothing to scale")]
    AllZeroAmplitudes,
}

/// Success probability of an encoding: the exact post-selection probability
/// for the flip-flop family, or a marker for loaders that never fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadProbability {
    PostSelect(f64),
    Deterministic,
}

impl LoadProbability {
    pub fn value(&self) -> Option<f64> {
        match self {
            LoadProbability::PostSelect(p) => Some(*p),
            LoadProbability::Deterministic => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, LoadProbability::Deterministic)
    }
}

/// Output of an encoder: the final state, the circuit that produces it, and
/// bookkeeping for the cost analysis.
///
/// For the combined loader ([`ffp_qram_encode`]) the two views are staged:
/// `final_state` covers the `(B, R)` rotation stage (with `B` carrying the
/// pattern superposition), while `circuit` spans the whole
/// `(p, u, m, R)` pipeline from `|0…0;01;0…0;0⟩`.
#[derive(Debug, Clone)]
pub struct EncodingResult {
    pub final_state: StateVector,
    pub circuit: Circuit,
    pub postselect_probability: LoadProbability,
    /// `R` for post-selecting loaders, `m` for the deterministic ones.
    pub register_of_interest: String,
    pub gate_count: usize,
}

/// Rotation angle that writes a real amplitude: `θ = 2 arcsin(x)`.
pub fn theta_for_amplitude(x: f64) -> Result<f64, EncodeError> {
    if x.abs() > 1.0 {
        return Err(EncodeError::AmplitudeOutOfRange { value: x });
    }
    Ok(2.0 * x.asin())
}

/// Layout of the flip-flop loader: address register `B` plus register qubit `R`.
pub fn ff_layout(n: usize) -> Result<RegisterLayout, StateError> {
    RegisterLayout::new(vec![("B", n), ("R", 1)])
}

/// Layout of the pattern store: pattern `p`, auxiliaries `u = u₁u₂`, memory `m`.
pub fn pqm_layout(n: usize) -> Result<RegisterLayout, StateError> {
    RegisterLayout::new(vec![("p", n), ("u", 2), ("m", n)])
}

/// Layout of the adapted store: auxiliaries `u` and memory `m` only.
pub fn apqm_layout(n: usize) -> Result<RegisterLayout, StateError> {
    RegisterLayout::new(vec![("u", 2), ("m", n)])
}

/// `|+⟩^⊗n |0⟩` over [`ff_layout`] — the uniform-address initial state.
pub fn plus_zero_initial(n: usize) -> Result<StateVector, EncodeError> {
    Ok(StateVector::basis(ff_layout(n)?, 0)?.apply_plus_layer("B")?)
}

fn pattern_index(pattern: &str) -> usize {
    pattern
        .bytes()
        .fold(0usize, |acc, b| acc << 1 | usize::from(b == b'1'))
}

/// Applies the gate to the state and appends it to the circuit.
fn emit(state: &mut StateVector, circuit: &mut Circuit, gate: Gate) -> Result<(), EncodeError> {
    state.apply_unitary_mut(&gate.matrix(), gate.target, &gate.controls)?;
    circuit.push(gate)?;
    Ok(())
}

fn require_register(
    layout: &RegisterLayout,
    name: &str,
    width: usize,
) -> Result<(), EncodeError> {
    match layout.register_width(name) {
        Ok(w) if w == width => Ok(()),
        _ => Err(EncodeError::MissingRegister {
            register: name.to_string(),
            width,
        }),
    }
}

fn check_real_in_range(data: &Dataset) -> Result<(), EncodeError> {
    for (index, record) in data.records().iter().enumerate() {
        if record.amplitude.im != 0.0 {
            return Err(EncodeError::ComplexAmplitude {
                index,
                re: record.amplitude.re,
                im: record.amplitude.im,
            });
        }
        if record.amplitude.re.abs() > 1.0 {
            return Err(EncodeError::RecordAmplitudeOutOfRange {
                index,
                value: record.amplitude.re,
            });
        }
    }
    Ok(())
}

/// Flip–rotate–flop loading of real amplitudes.
///
/// Per record the address register is flipped so the pattern lands on
/// |1…1⟩, an `n`-controlled `Ry(2 arcsin x_k)` writes the amplitude onto the
/// register qubit, and the flop restores the address. Amplitudes of basis
/// states outside the pattern set are untouched and keep `R = 0`.
pub fn ff_qram_encode(
    data: &Dataset,
    initial: &StateVector,
) -> Result<EncodingResult, EncodeError> {
    let n = data.n();
    let layout = initial.layout().clone();
    require_register(&layout, "B", n)?;
    require_register(&layout, "R", 1)?;
    check_real_in_range(data)?;

    let r = layout.qubit("R", 0)?;
    for (i, amp) in initial.amplitudes().iter().enumerate() {
        if amp.norm_sqr() > 0.0 && layout.bit(i, r) {
            return Err(EncodeError::RegisterNotCleared {
                register: "R".into(),
            });
        }
    }

    let b0 = layout.register_offset("B")?;
    let address_controls: Vec<Control> = (b0..b0 + n).map(Control::one).collect();
    let mut circuit = Circuit::new(layout);
    let mut state = initial.clone();
    for (k, record) in data.records().iter().enumerate() {
        let theta = theta_for_amplitude(record.amplitude.re)?;
        let flips = classical_flip_layer(&record.pattern, FlipPolarity::FlipOnZero, b0)?;
        for gate in flips.iter().cloned() {
            emit(&mut state, &mut circuit, gate.with_tag(format!("flip p{k}")))?;
        }
        emit(
            &mut state,
            &mut circuit,
            Gate::ry(theta, r)
                .controlled(address_controls.clone())
                .with_tag(format!("load x{k}")),
        )?;
        for gate in flips {
            emit(&mut state, &mut circuit, gate.with_tag(format!("flop p{k}")))?;
        }
    }

    let probability = state.bit_probability(r, true)?;
    let gate_count = circuit.gate_count();
    Ok(EncodingResult {
        final_state: state,
        circuit,
        postselect_probability: LoadProbability::PostSelect(probability),
        register_of_interest: "R".into(),
        gate_count,
    })
}

fn validate_patterns(patterns: &[&str]) -> Result<usize, EncodeError> {
    if patterns.is_empty() {
        return Err(EncodeError::NoPatterns);
    }
    let n = patterns[0].len();
    if n == 0 {
        return Err(EncodeError::NoPatterns);
    }
    if patterns.len() > 1usize << n.min(usize::BITS as usize - 1) {
        return Err(EncodeError::TooManyPatterns {
            m: patterns.len(),
            n,
        });
    }
    for (index, pattern) in patterns.iter().enumerate() {
        if pattern.len() != n {
            return Err(EncodeError::PatternWidth {
                index,
                pattern: pattern.to_string(),
                got: pattern.len(),
                expected: n,
            });
        }
        if !pattern.chars().all(|c| c == '0' || c == '1') {
            return Err(EncodeError::NonBinaryPattern {
                index,
                pattern: pattern.to_string(),
            });
        }
        if patterns[..index].contains(pattern) {
            return Err(EncodeError::DuplicatePattern {
                index,
                pattern: pattern.to_string(),
            });
        }
    }
    Ok(n)
}

/// Driver for the pattern store, one iteration per call. Kept separate so
/// tests can inspect the state at iteration boundaries.
pub(crate) struct PqmBuilder {
    pub(crate) state: StateVector,
    pub(crate) circuit: Circuit,
    p_content: Vec<bool>,
    n: usize,
    m_total: usize,
    next: usize,
}

impl PqmBuilder {
    pub(crate) fn new(n: usize, m_total: usize) -> Result<Self, EncodeError> {
        let layout = pqm_layout(n)?;
        let initial = layout.basis_index(&format!("{};01;{}", "0".repeat(n), "0".repeat(n)))?;
        Ok(PqmBuilder {
            state: StateVector::basis(layout.clone(), initial)?,
            circuit: Circuit::new(layout),
            p_content: vec![false; n],
            n,
            m_total,
            next: 0,
        })
    }

    /// One storage iteration: load the pattern, mark it in memory, split off
    /// a stored branch with `S^{M−k}`, and unmark.
    pub(crate) fn store_next(&mut self, pattern: &str) -> Result<(), EncodeError> {
        let (n, k) = (self.n, self.next);
        let layout = self.circuit.layout().clone();
        let u1 = layout.qubit("u", 0)?;
        let u2 = layout.qubit("u", 1)?;
        let m0 = layout.register_offset("m")?;
        let bits: Vec<bool> = pattern.bytes().map(|b| b == b'1').collect();

        // Load: the previous pattern is still in `p`, so XOR in the difference.
        for j in 0..n {
            if self.p_content[j] != bits[j] {
                emit(
                    &mut self.state,
                    &mut self.circuit,
                    Gate::x(layout.qubit("p", j)?).with_tag(format!("load p{k}[{j}]")),
                )?;
                self.p_content[j] = bits[j];
            }
        }

        // Copy the pattern into memory on the processing branch (u₂ = 1).
        let copy_layer: Vec<Gate> = (0..n)
            .map(|j| {
                Ok(Gate::x(m0 + j).controlled(vec![
                    Control::one(layout.qubit("p", j)?),
                    Control::one(u2),
                ]))
            })
            .collect::<Result<_, StateError>>()?;
        for gate in copy_layer.iter().cloned() {
            emit(&mut self.state, &mut self.circuit, gate)?;
        }

        // m[j] ← XNOR(p[j], m[j]): all-ones memory marks agreement with p.
        for j in 0..n {
            let p_j = layout.qubit("p", j)?;
            emit(
                &mut self.state,
                &mut self.circuit,
                Gate::x(m0 + j).controlled_by_one(p_j),
            )?;
            emit(&mut self.state, &mut self.circuit, Gate::x(m0 + j))?;
        }

        let memory_controls: Vec<Control> = (m0..m0 + n).map(Control::one).collect();
        emit(
            &mut self.state,
            &mut self.circuit,
            Gate::x(u1).controlled(memory_controls.clone()),
        )?;

        let r = (self.m_total - k) as u64;
        emit(
            &mut self.state,
            &mut self.circuit,
            Gate::unitary(s_r_matrix(r)?, u2)
                .controlled_by_one(u1)
                .with_tag(format!("split S^{r}")),
        )?;

        emit(
            &mut self.state,
            &mut self.circuit,
            Gate::x(u1).controlled(memory_controls),
        )?;

        // Invert the XNOR marking.
        for j in 0..n {
            let p_j = layout.qubit("p", j)?;
            emit(&mut self.state, &mut self.circuit, Gate::x(m0 + j))?;
            emit(
                &mut self.state,
                &mut self.circuit,
                Gate::x(m0 + j).controlled_by_one(p_j),
            )?;
        }

        // Reset the processing branch's memory back to |0…0⟩.
        for gate in copy_layer {
            emit(&mut self.state, &mut self.circuit, gate)?;
        }

        self.next += 1;
        Ok(())
    }
}

/// Stores distinct binary patterns as the uniform superposition
/// `(1/√M) Σ|p_k⟩` on the memory register, deterministically.
///
/// The pattern register ends holding the last pattern loaded and the
/// auxiliaries end at `|00⟩`, both disentangled from the memory.
pub fn pqm_store(patterns: &[&str]) -> Result<EncodingResult, EncodeError> {
    let n = validate_patterns(patterns)?;
    let mut builder = PqmBuilder::new(n, patterns.len())?;
    for pattern in patterns {
        builder.store_next(pattern)?;
    }
    let gate_count = builder.circuit.gate_count();
    Ok(EncodingResult {
        final_state: builder.state,
        circuit: builder.circuit,
        postselect_probability: LoadProbability::Deterministic,
        register_of_interest: "m".into(),
        gate_count,
    })
}

/// Combined loader: a pattern store prepares `(1/√M) Σ|p_k⟩`, which then
/// serves as the flip-flop loader's address register, so post-selection
/// succeeds with probability `Σ|x_k|²/M` instead of `Σ|x_k|²/2ⁿ`.
pub fn ffp_qram_encode(data: &Dataset) -> Result<EncodingResult, EncodeError> {
    check_real_in_range(data)?;
    let n = data.n();
    let patterns = data.patterns();
    let pqm = pqm_store(&patterns)?;

    // The store leaves p at the last pattern and u at |00⟩, disentangled, so
    // the memory state is read off that block of amplitudes.
    let p_value = pattern_index(patterns[patterns.len() - 1]);
    let block = p_value << (n + 2);
    let ff = ff_layout(n)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); ff.dimension()];
    let mut mass = 0.0;
    for m_value in 0..1usize << n {
        let amp = pqm.final_state.amplitudes()[block | m_value];
        mass += amp.norm_sqr();
        amps[m_value << 1] = amp;
    }
    assert!(
        (mass - 1.0).abs() < 1e-9,
        "pattern store left p/u entangled with memory (mass {mass})"
    );
    let initial = StateVector::from_amplitudes(ff, amps)?;
    let rotation = ff_qram_encode(data, &initial)?;

    // Full pipeline circuit: store over (p, u, m), then rotate with the
    // memory register addressed and a fresh register qubit appended.
    let combined_layout =
        RegisterLayout::new(vec![("p", n), ("u", 2), ("m", n), ("R", 1)])?;
    let mut combined = Circuit::new(combined_layout);
    for gate in pqm.circuit.gates() {
        combined.push(gate.clone())?;
    }
    let remap = |q: usize| if q < n { n + 2 + q } else { 2 * n + 2 };
    for gate in rotation.circuit.gates() {
        let mut gate = gate.clone();
        gate.target = remap(gate.target);
        for control in &mut gate.controls {
            control.qubit = remap(control.qubit);
        }
        combined.push(gate)?;
    }

    let gate_count = combined.gate_count();
    Ok(EncodingResult {
        final_state: rotation.final_state,
        circuit: combined,
        postselect_probability: rotation.postselect_probability,
        register_of_interest: "R".into(),
        gate_count,
    })
}

/// Divides every amplitude by `c = max|x_k|`, returning the scaled dataset
/// and `c`. With the combined loader the post-selection probability rises
/// from `1/M` to `1/(c²M)`.
pub fn preprocess_max_scale(data: &Dataset) -> Result<(Dataset, f64), EncodeError> {
    let c = data.max_abs_amplitude();
    if c == 0.0 {
        return Err(EncodeError::AllZeroAmplitudes);
    }
    let records = data
        .records()
        .iter()
        .map(|record| DataRecord {
            amplitude: record.amplitude / c,
            pattern: record.pattern.clone(),
        })
        .collect();
    Ok((Dataset::new(records, data.n())?, c))
}

/// Driver for the adapted store; see [`PqmBuilder`] for why it is separate.
pub(crate) struct ApqmBuilder {
    pub(crate) state: StateVector,
    pub(crate) circuit: Circuit,
    pub(crate) gamma: f64,
    next: usize,
}

impl ApqmBuilder {
    pub(crate) fn new(n: usize) -> Result<Self, EncodeError> {
        let layout = apqm_layout(n)?;
        let initial = layout.basis_index(&format!("01;{}", "0".repeat(n)))?;
        Ok(ApqmBuilder {
            state: StateVector::basis(layout.clone(), initial)?,
            circuit: Circuit::new(layout),
            gamma: 1.0,
            next: 0,
        })
    }

    pub(crate) fn load_next(&mut self, record: &DataRecord) -> Result<(), EncodeError> {
        let k = self.next;
        let layout = self.circuit.layout().clone();
        let u1 = layout.qubit("u", 0)?;
        let u2 = layout.qubit("u", 1)?;
        let m0 = layout.register_offset("m")?;
        let n = layout.register_width("m")?;

        // Pattern-keyed layer: X on memory where the bit is 0, CX from u₂
        // where it is 1. Only the processing branch ends at |1…1⟩.
        let keyed_layer: Vec<Gate> = record
            .pattern
            .bytes()
            .enumerate()
            .map(|(j, b)| {
                classical_quantum_gate(b == b'1', u2, m0 + j).with_tag(format!("mark p{k}[{j}]"))
            })
            .collect();
        for gate in keyed_layer.iter().cloned() {
            emit(&mut self.state, &mut self.circuit, gate)?;
        }

        let memory_controls: Vec<Control> = (m0..m0 + n).map(Control::one).collect();
        emit(
            &mut self.state,
            &mut self.circuit,
            Gate::x(u1).controlled(memory_controls.clone()),
        )?;

        let x = record.amplitude;
        let matrix = if self.gamma < GAMMA_CLAMP {
            if x.norm_sqr() < GAMMA_CLAMP {
                // Residual weight and amplitude both zero: the processing
                // branch is empty and the load is a no-op.
                crate::gates::identity_matrix()
            } else {
                return Err(EncodeError::GateAtRecord {
                    index: k,
                    source: GateError::GammaUnderflow {
                        gamma: self.gamma,
                        record: k,
                    },
                });
            }
        } else {
            let spec = LoadGateSpec::new(x, self.gamma)
                .map_err(|source| EncodeError::GateAtRecord { index: k, source })?;
            u3_matrix(&spec)
        };
        emit(
            &mut self.state,
            &mut self.circuit,
            Gate::unitary(matrix, u2)
                .controlled_by_one(u1)
                .with_tag(format!("load x{k}")),
        )?;

        emit(
            &mut self.state,
            &mut self.circuit,
            Gate::x(u1).controlled(memory_controls),
        )?;

        for gate in keyed_layer {
            emit(&mut self.state, &mut self.circuit, gate)?;
        }

        self.gamma = (self.gamma - x.norm_sqr()).max(0.0);
        self.next += 1;
        Ok(())
    }
}

/// Loads complex amplitudes deterministically on `n + 2` qubits.
///
/// Per record the memory is marked, the amplitude is carved off the
/// processing branch by `CU3(x_k, γ_k)` with `γ₀ = 1`,
/// `γ_k = γ_{k−1} − |x_{k−1}|²`, and the marking is undone. After the last
/// record every branch has `u = |00⟩` and the memory holds `Σ x_k |p_k⟩`.
pub fn a_pqm_encode(data: &Dataset) -> Result<EncodingResult, EncodeError> {
    if !data.normalized() {
        return Err(EncodeError::NotNormalized {
            sum: data.norm_sqr_sum(),
        });
    }
    let mut builder = ApqmBuilder::new(data.n())?;
    for record in data.records() {
        builder.load_next(record)?;
    }
    let gate_count = builder.circuit.gate_count();
    Ok(EncodingResult {
        final_state: builder.state,
        circuit: builder.circuit,
        postselect_probability: LoadProbability::Deterministic,
        register_of_interest: "m".into(),
        gate_count,
    })
}

/// The target state `Σ x_k |p_k⟩` over a bare memory register, built by
/// writing each amplitude at its pattern's index.
pub fn target_state(data: &Dataset) -> Result<StateVector, EncodeError> {
    if !data.normalized() {
        return Err(EncodeError::NotNormalized {
            sum: data.norm_sqr_sum(),
        });
    }
    let layout = RegisterLayout::new(vec![("m", data.n())])?;
    let mut amps = vec![Complex64::new(0.0, 0.0); layout.dimension()];
    for record in data.records() {
        amps[pattern_index(&record.pattern)] = record.amplitude;
    }
    Ok(StateVector::from_amplitudes(layout, amps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_pattern_dataset() -> Dataset {
        Dataset::new(
            vec![
                DataRecord::real(0.3f64.sqrt(), "000"),
                DataRecord::real(0.7f64.sqrt(), "001"),
            ],
            3,
        )
        .unwrap()
    }

    fn four_complex_dataset() -> Dataset {
        Dataset::new(
            vec![
                DataRecord::new(0.1f64.sqrt(), -(0.2f64.sqrt()), "00"),
                DataRecord::new(0.1f64.sqrt(), -(0.1f64.sqrt()), "01"),
                DataRecord::real(0.1f64.sqrt(), "10"),
                DataRecord::real(0.4f64.sqrt(), "11"),
            ],
            2,
        )
        .unwrap()
    }

    #[test]
    fn rotation_angle_examples() {
        assert!((theta_for_amplitude(0.3f64.sqrt()).unwrap() - 1.1593).abs() < 5e-5);
        assert_eq!(theta_for_amplitude(0.0).unwrap(), 0.0);
        // 2 arcsin √0.7 = 1.9823 to four decimals.
        assert!((theta_for_amplitude(0.7f64.sqrt()).unwrap() - 1.9823).abs() < 5e-5);
        assert!(matches!(
            theta_for_amplitude(1.5),
            Err(EncodeError::AmplitudeOutOfRange { .. })
        ));
    }

    #[test]
    fn ff_qram_two_pattern_worked_example() {
        let data = two_pattern_dataset();
        let initial = plus_zero_initial(3).unwrap();
        let result = ff_qram_encode(&data, &initial).unwrap();

        let p = result.postselect_probability.value().unwrap();
        assert!((p - 0.125).abs() < 1e-12);

        // Post-selecting R = 1 leaves √0.3|000⟩ + √0.7|001⟩.
        let r = result.final_state.layout().qubit("R", 0).unwrap();
        let (post, _) = result.final_state.project_postselect(r, true).unwrap();
        let target = target_state(&data)
            .unwrap()
            .renamed_register("m", "B")
            .unwrap()
            .tensor(
                &StateVector::basis(RegisterLayout::new(vec![("R", 1)]).unwrap(), 1).unwrap(),
            )
            .unwrap();
        assert!((post.fidelity(&target).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ff_qram_matches_closed_form_final_state() {
        // Independent oracle: the loaded state has each pattern branch
        // rotated by its angle and every other branch untouched.
        let data = two_pattern_dataset();
        let initial = plus_zero_initial(3).unwrap();
        let result = ff_qram_encode(&data, &initial).unwrap();
        let layout = result.final_state.layout();
        let coeff = 1.0 / (2.0 * 2.0f64.sqrt());
        for t in 0..8usize {
            let a0 = result.final_state.amplitudes()[t << 1];
            let a1 = result.final_state.amplitudes()[t << 1 | 1];
            match t {
                0 => {
                    assert!((a0.re - coeff * 0.7f64.sqrt()).abs() < 1e-12);
                    assert!((a1.re - coeff * 0.3f64.sqrt()).abs() < 1e-12);
                }
                1 => {
                    assert!((a0.re - coeff * 0.3f64.sqrt()).abs() < 1e-12);
                    assert!((a1.re - coeff * 0.7f64.sqrt()).abs() < 1e-12);
                }
                _ => {
                    // untouched branches are bit-identical to the initial state
                    assert_eq!(a0, initial.amplitudes()[t << 1]);
                    assert_eq!(a1, c(0.0, 0.0));
                }
            }
        }
        assert_eq!(layout.total_qubits(), 4);
    }

    #[test]
    fn ff_qram_single_full_amplitude() {
        // {(1.0, "1")} from |+⟩|0⟩: the π rotation entangles fully, P = 1/2.
        let data = Dataset::new(vec![DataRecord::real(1.0, "1")], 1).unwrap();
        let result = ff_qram_encode(&data, &plus_zero_initial(1).unwrap()).unwrap();
        assert!((result.postselect_probability.value().unwrap() - 0.5).abs() < 1e-12);
        let h = 1.0 / 2.0f64.sqrt();
        assert!((result.final_state.amplitude("0;0").unwrap().re - h).abs() < 1e-12);
        assert!((result.final_state.amplitude("1;1").unwrap().re - h).abs() < 1e-12);
    }

    #[test]
    fn ff_qram_rejects_bad_input() {
        let complex = Dataset::new(vec![DataRecord::new(0.5, 0.5, "0")], 1).unwrap();
        assert!(matches!(
            ff_qram_encode(&complex, &plus_zero_initial(1).unwrap()),
            Err(EncodeError::ComplexAmplitude { index: 0, .. })
        ));

        let oversized = Dataset::new(vec![DataRecord::real(1.2, "0")], 1).unwrap();
        assert!(matches!(
            ff_qram_encode(&oversized, &plus_zero_initial(1).unwrap()),
            Err(EncodeError::RecordAmplitudeOutOfRange { index: 0, .. })
        ));

        let data = Dataset::new(vec![DataRecord::real(1.0, "0")], 1).unwrap();
        let dirty = StateVector::basis(ff_layout(1).unwrap(), 1).unwrap();
        assert!(matches!(
            ff_qram_encode(&data, &dirty),
            Err(EncodeError::RegisterNotCleared { .. })
        ));
    }

    #[test]
    fn ff_qram_gate_count_formula() {
        // Σ_k 2·zeros(p_k) flips plus one rotation per record.
        let data = two_pattern_dataset();
        let result = ff_qram_encode(&data, &plus_zero_initial(3).unwrap()).unwrap();
        let zeros: usize = data
            .records()
            .iter()
            .map(|r| r.pattern.chars().filter(|&c| c == '0').count())
            .sum();
        assert_eq!(result.gate_count, 2 * zeros + data.len());
    }

    #[test]
    fn pqm_stores_the_two_pattern_example() {
        let result = pqm_store(&["00", "01"]).unwrap();
        let state = &result.final_state;
        let h = 1.0 / 2.0f64.sqrt();
        // (1/√2)|01;00;00⟩ + (1/√2)|01;00;01⟩, everything else zero.
        for (i, amp) in state.amplitudes().iter().enumerate() {
            let label = state.layout().basis_label(i);
            let expect = if label == "01;00;00" || label == "01;00;01" {
                h
            } else {
                0.0
            };
            assert!(
                (amp.re - expect).abs() < 1e-12 && amp.im.abs() < 1e-12,
                "|{label}⟩ = {amp}"
            );
        }
        assert!(result.postselect_probability.is_deterministic());
        assert_eq!(result.register_of_interest, "m");
    }

    #[test]
    fn pqm_single_pattern() {
        let result = pqm_store(&["1"]).unwrap();
        let amp = result.final_state.amplitude("1;00;1").unwrap();
        assert!((amp.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pqm_all_patterns_is_uniform() {
        let patterns: Vec<String> = (0..8).map(|i| format!("{i:03b}")).collect();
        let refs: Vec<&str> = patterns.iter().map(|s| s.as_str()).collect();
        let result = pqm_store(&refs).unwrap();
        let state = &result.final_state;
        let layout = state.layout();
        let expect = 1.0 / 8.0f64.sqrt();
        let p_last = layout.basis_index("111;00;000").unwrap();
        for m in 0..8usize {
            let amp = state.amplitudes()[p_last | m];
            assert!((amp.re - expect).abs() < 1e-12, "m = {m}: {amp}");
        }
        assert!((state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pqm_amplitudes_stay_uniform_at_every_iteration() {
        let patterns = ["101", "010", "111", "001"];
        let mut builder = PqmBuilder::new(3, patterns.len()).unwrap();
        let layout = builder.circuit.layout().clone();
        let u2 = layout.qubit("u", 1).unwrap();
        for (k, pattern) in patterns.iter().enumerate() {
            builder.store_next(pattern).unwrap();
            // Stored branches (u₂ = 0) each hold exactly 1/√M.
            let stored: Vec<f64> = builder
                .state
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(i, a)| !layout.bit(*i, u2) && a.norm_sqr() > 1e-20)
                .map(|(_, a)| a.norm())
                .collect();
            assert_eq!(stored.len(), k + 1);
            for magnitude in stored {
                assert!((magnitude - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pqm_rejects_duplicates_and_mixed_widths() {
        assert!(matches!(
            pqm_store(&["01", "01"]),
            Err(EncodeError::DuplicatePattern { index: 1, .. })
        ));
        assert!(matches!(
            pqm_store(&["01", "0"]),
            Err(EncodeError::PatternWidth { index: 1, .. })
        ));
        assert!(matches!(pqm_store(&[]), Err(EncodeError::NoPatterns)));
    }

    #[test]
    fn ffp_probability_is_one_over_m() {
        for m in [2usize, 4, 8] {
            let n = 4;
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            let mut values: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.1).collect();
            let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut values {
                *v /= norm;
            }
            let records: Vec<DataRecord> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| DataRecord::real(v, format!("{i:0n$b}", n = n)))
                .collect();
            let data = Dataset::new(records, n).unwrap();
            let result = ffp_qram_encode(&data).unwrap();
            let p = result.postselect_probability.value().unwrap();
            assert!((p - 1.0 / m as f64).abs() < 1e-12, "M = {m}: P = {p}");
        }
    }

    #[test]
    fn ffp_single_record_is_certain() {
        let data = Dataset::new(vec![DataRecord::real(1.0, "0110")], 4).unwrap();
        let result = ffp_qram_encode(&data).unwrap();
        assert!((result.postselect_probability.value().unwrap() - 1.0).abs() < 1e-12);
        let r = result.final_state.layout().qubit("R", 0).unwrap();
        let (post, _) = result.final_state.project_postselect(r, true).unwrap();
        assert!((post.amplitude("0110;1").unwrap().re.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ffp_beats_plain_ff_by_sparsity_factor() {
        // Same two-record dataset over n = 8: 1/2 vs 2⁻⁸, a 128x gap.
        let data = Dataset::new(
            vec![
                DataRecord::real(0.3f64.sqrt(), "00000000"),
                DataRecord::real(0.7f64.sqrt(), "00000001"),
            ],
            8,
        )
        .unwrap();
        let ff = ff_qram_encode(&data, &plus_zero_initial(8).unwrap()).unwrap();
        let ffp = ffp_qram_encode(&data).unwrap();
        let p_ff = ff.postselect_probability.value().unwrap();
        let p_ffp = ffp.postselect_probability.value().unwrap();
        assert!((p_ff - 1.0 / 256.0).abs() < 1e-12);
        assert!((p_ffp - 0.5).abs() < 1e-12);
        assert!((p_ffp / p_ff - 128.0).abs() < 1e-9);
    }

    #[test]
    fn preprocessing_rescales_and_reports_c() {
        let data = two_pattern_dataset();
        let (scaled, c) = preprocess_max_scale(&data).unwrap();
        assert!((c - 0.7f64.sqrt()).abs() < 1e-15);
        assert!((scaled.records()[0].amplitude.re - (3.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!((scaled.records()[1].amplitude.re - 1.0).abs() < 1e-15);
        assert!(!scaled.normalized());

        // The scaled pipeline hits 1/(c²M) = 5/7.
        let result = ffp_qram_encode(&scaled).unwrap();
        let p = result.postselect_probability.value().unwrap();
        assert!((p - 5.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn preprocessing_uniform_data_is_deterministic() {
        let m = 8usize;
        let records: Vec<DataRecord> = (0..m)
            .map(|i| DataRecord::real(1.0 / (m as f64).sqrt(), format!("{i:03b}")))
            .collect();
        let data = Dataset::new(records, 3).unwrap();
        let (scaled, c) = preprocess_max_scale(&data).unwrap();
        assert!((c * c - 1.0 / m as f64).abs() < 1e-15);
        let result = ffp_qram_encode(&scaled).unwrap();
        assert!((result.postselect_probability.value().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preprocessing_rejects_zero_data() {
        let data = Dataset::new(vec![DataRecord::real(0.0, "0")], 1).unwrap();
        assert!(matches!(
            preprocess_max_scale(&data),
            Err(EncodeError::AllZeroAmplitudes)
        ));
    }

    #[test]
    fn adversarial_peak_formula_value() {
        // P = 1/(c²M) at c = 0.99, M = 2¹¹ collapses to ~5e-4.
        let p = 1.0 / (0.99f64 * 0.99 * 2048.0);
        assert!((p - 4.981953372104887e-4).abs() < 1e-15);
    }

    #[test]
    fn a_pqm_four_complex_records() {
        let data = four_complex_dataset();
        let result = a_pqm_encode(&data).unwrap();
        let state = &result.final_state;
        for (record, m) in data.records().iter().zip(0..4usize) {
            let amp = state.amplitudes()[m]; // u = 00 block is the first 4
            assert!(
                (amp - record.amplitude).norm() < 1e-12,
                "pattern {}: {amp} vs {}",
                record.pattern,
                record.amplitude
            );
        }
        // u register exactly |00⟩: no weight anywhere else.
        let outside: f64 = state.amplitudes()[4..].iter().map(|a| a.norm_sqr()).sum();
        assert_eq!(outside, 0.0);
        assert!(result.postselect_probability.is_deterministic());
        assert_eq!(result.circuit.layout().total_qubits(), data.n() + 2);
    }

    #[test]
    fn a_pqm_single_record() {
        let data = Dataset::new(vec![DataRecord::real(1.0, "101")], 3).unwrap();
        let result = a_pqm_encode(&data).unwrap();
        let amp = result.final_state.amplitude("00;101").unwrap();
        assert!((amp.re - 1.0).abs() < 1e-12 && amp.im == 0.0);
    }

    #[test]
    fn a_pqm_matches_directly_built_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut amps: Vec<Complex64> = (0..8)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        let records: Vec<DataRecord> = amps
            .iter()
            .enumerate()
            .map(|(i, a)| DataRecord::new(a.re, a.im, format!("{i:03b}")))
            .collect();
        let data = Dataset::new(records, 3).unwrap();
        let result = a_pqm_encode(&data).unwrap();
        let target = StateVector::basis(RegisterLayout::new(vec![("u", 2)]).unwrap(), 0)
            .unwrap()
            .tensor(&target_state(&data).unwrap())
            .unwrap();
        assert!((result.final_state.fidelity(&target).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn a_pqm_requires_normalization() {
        let data = Dataset::new(vec![DataRecord::real(0.5, "0")], 1).unwrap();
        assert!(matches!(
            a_pqm_encode(&data),
            Err(EncodeError::NotNormalized { .. })
        ));
    }

    #[test]
    fn a_pqm_is_order_independent() {
        let data = four_complex_dataset();
        let forward = a_pqm_encode(&data).unwrap();
        let mut records = data.records().to_vec();
        records.reverse();
        let reversed = a_pqm_encode(&Dataset::new(records, 2).unwrap()).unwrap();
        let fidelity = forward
            .final_state
            .fidelity(&reversed.final_state)
            .unwrap();
        assert!((fidelity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn a_pqm_processing_branch_mass_follows_gamma() {
        let data = four_complex_dataset();
        let mut builder = ApqmBuilder::new(2).unwrap();
        let layout = builder.circuit.layout().clone();
        let u2 = layout.qubit("u", 1).unwrap();
        let mut remaining = 1.0;
        for (k, record) in data.records().iter().enumerate() {
            builder.load_next(record).unwrap();
            remaining -= record.amplitude.norm_sqr();
            let processing: f64 = builder
                .state
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(i, _)| layout.bit(*i, u2))
                .map(|(_, a)| a.norm_sqr())
                .sum();
            assert!(
                (processing - remaining.max(0.0)).abs() < 1e-12,
                "after record {k}: mass {processing} vs gamma {remaining}"
            );
            // Stored branches carry the exact input amplitudes.
            for stored in data.records().iter().take(k + 1) {
                let index = layout
                    .basis_index(&format!("00;{}", stored.pattern))
                    .unwrap();
                assert!(
                    (builder.state.amplitudes()[index] - stored.amplitude).norm() < 1e-12
                );
            }
        }
    }

    #[test]
    fn a_pqm_zero_amplitude_records_pass_through() {
        let data = Dataset::new(
            vec![
                DataRecord::real(1.0, "00"),
                DataRecord::real(0.0, "01"),
                DataRecord::real(0.0, "11"),
            ],
            2,
        )
        .unwrap();
        let result = a_pqm_encode(&data).unwrap();
        let amp = result.final_state.amplitude("00;00").unwrap();
        assert!((amp.re - 1.0).abs() < 1e-12);
        let zero = result.final_state.amplitude("00;01").unwrap();
        assert_eq!(zero.norm_sqr(), 0.0);
    }

    #[test]
    fn target_state_examples() {
        let single = Dataset::new(vec![DataRecord::real(1.0, "0")], 1).unwrap();
        let state = target_state(&single).unwrap();
        assert_eq!(state.amplitude("0").unwrap(), c(1.0, 0.0));

        let vc = target_state(&four_complex_dataset()).unwrap();
        assert!((vc.amplitude("00").unwrap() - c(0.1f64.sqrt(), -(0.2f64.sqrt()))).norm() < 1e-15);

        let two = target_state(&two_pattern_dataset()).unwrap();
        assert!((two.norm() - 1.0).abs() < 1e-12);

        let unnormalized = Dataset::new(vec![DataRecord::real(0.5, "0")], 1).unwrap();
        assert!(matches!(
            target_state(&unnormalized),
            Err(EncodeError::NotNormalized { .. })
        ));
    }

    #[test]
    fn flip_then_flop_without_rotation_is_identity() {
        let initial = plus_zero_initial(3).unwrap();
        let mut state = initial.clone();
        let mut circuit = Circuit::new(initial.layout().clone());
        let flips = classical_flip_layer("010", FlipPolarity::FlipOnZero, 0).unwrap();
        for gate in flips.iter().cloned().chain(flips.iter().cloned()) {
            emit(&mut state, &mut circuit, gate).unwrap();
        }
        assert_eq!(state.amplitudes(), initial.amplitudes());
    }
}
