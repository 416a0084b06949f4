//! Dense complex statevector simulation over named qubit registers.
//!
//! Basis-state indexing follows register order with the most significant bit
//! first within each register, so a ket written `|01;00⟩` over registers
//! `(u:2, m:2)` sits at index `0b0100 = 4`. Qubit indices count from the left
//! of that concatenated bitstring: qubit 0 is the most significant bit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Hard cap on simulated qubits (2^24 amplitudes). Layouts may describe more
/// qubits than this — a circuit over a wide layout is still a useful artifact
/// — but dense states cannot be constructed past it.
pub const MAX_QUBITS: usize = 24;

/// Unitarity tolerance applied to every 2x2 matrix at application time.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Outcome probabilities below this are treated as exactly zero when
/// projecting, so renormalizing numerical noise is refused.
pub const PROJECTION_THRESHOLD: f64 = 1e-15;

/// A 2x2 complex matrix in row-major order.
pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Debug, Error)]
pub enum StateError {
    #[error("invalid register layout: {0}")]
    InvalidLayout(String),
    #[error("basis index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("qubit index {qubit} out of range for {qubits} qubits")]
    QubitOutOfRange { qubit: usize, qubits: usize },
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("matrix is not unitary (max deviation {deviation:.3e} from U†U = I)")]
    NonUnitary { deviation: f64 },
    #[error("qubit {0} appears as both target and control (or twice as control)")]
    OverlappingControl(usize),
    #[error("state layouts differ")]
    LayoutMismatch,
    #[error(
        "projecting qubit {qubit} onto |{outcome}⟩ has probability {probability:.3e}, \
         below the zero threshold {threshold:.0e}"
    )]
    ZeroProbabilityOutcome {
        qubit: usize,
        outcome: u8,
        probability: f64,
        threshold: f64,
    },
    #[error("no qubits listed for measurement")]
    EmptyQubitList,
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("amplitude at index {0} is not finite")]
    NonFiniteAmplitude(usize),
    #[error("expected {expected} amplitudes, got {got}")]
    AmplitudeCount { expected: usize, got: usize },
    #[error("basis label has {got} bits but the layout has {expected} qubits")]
    LabelWidth { got: usize, expected: usize },
    #[error("non-binary character `{0}` in basis label")]
    NonBinaryLabel(char),
    #[error("{qubits} qubits exceed the {MAX_QUBITS}-qubit dense-state cap")]
    TooManyQubits { qubits: usize },
}

/// Which value a control qubit must hold for a controlled gate to fire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    One,
    Zero,
}

/// A control condition on a single qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub polarity: Polarity,
}

impl Control {
    pub fn one(qubit: usize) -> Self {
        Control {
            qubit,
            polarity: Polarity::One,
        }
    }

    pub fn zero(qubit: usize) -> Self {
        Control {
            qubit,
            polarity: Polarity::Zero,
        }
    }
}

/// An ordered set of named qubit registers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<(String, usize)>,
    total: usize,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(registers: Vec<(S, usize)>) -> Result<Self, StateError> {
        let registers: Vec<(String, usize)> =
            registers.into_iter().map(|(n, w)| (n.into(), w)).collect();
        if registers.is_empty() {
            return Err(StateError::InvalidLayout("no registers".into()));
        }
        let mut total = 0usize;
        for (i, (name, width)) in registers.iter().enumerate() {
            if *width == 0 {
                return Err(StateError::InvalidLayout(format!(
                    "register `{name}` has width 0"
                )));
            }
            if name.is_empty() {
                return Err(StateError::InvalidLayout("empty register name".into()));
            }
            if registers[..i].iter().any(|(other, _)| other == name) {
                return Err(StateError::InvalidLayout(format!(
                    "duplicate register name `{name}`"
                )));
            }
            total += width;
        }
        if total > 60 {
            return Err(StateError::InvalidLayout(format!(
                "{total} qubits is beyond any representable layout"
            )));
        }
        Ok(RegisterLayout { registers, total })
    }

    pub fn total_qubits(&self) -> usize {
        self.total
    }

    /// Number of basis states, `2^total_qubits`.
    pub fn dimension(&self) -> usize {
        1usize << self.total
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.registers
    }

    pub fn register_width(&self, name: &str) -> Result<usize, StateError> {
        self.registers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| *w)
            .ok_or_else(|| StateError::UnknownRegister(name.into()))
    }

    /// Global index of the first (most significant) qubit of a register.
    pub fn register_offset(&self, name: &str) -> Result<usize, StateError> {
        let mut offset = 0;
        for (n, w) in &self.registers {
            if n == name {
                return Ok(offset);
            }
            offset += w;
        }
        Err(StateError::UnknownRegister(name.into()))
    }

    /// Global index of qubit `j` within a register, counting from the left.
    pub fn qubit(&self, name: &str, j: usize) -> Result<usize, StateError> {
        let width = self.register_width(name)?;
        if j >= width {
            return Err(StateError::QubitOutOfRange {
                qubit: j,
                qubits: width,
            });
        }
        Ok(self.register_offset(name)? + j)
    }

    /// Global indices of every qubit in a register.
    pub fn register_qubits(&self, name: &str) -> Result<std::ops::Range<usize>, StateError> {
        let offset = self.register_offset(name)?;
        let width = self.register_width(name)?;
        Ok(offset..offset + width)
    }

    /// Value of `qubit` in the binary expansion of a basis index.
    pub fn bit(&self, index: usize, qubit: usize) -> bool {
        index >> (self.total - 1 - qubit) & 1 == 1
    }

    /// Parses a ket label such as `"01;00"` into a basis index. Semicolons
    /// and spaces are ignored, so register boundaries may be marked freely.
    pub fn basis_index(&self, label: &str) -> Result<usize, StateError> {
        let mut index = 0usize;
        let mut bits = 0usize;
        for ch in label.chars() {
            match ch {
                '0' => {
                    index <<= 1;
                    bits += 1;
                }
                '1' => {
                    index = index << 1 | 1;
                    bits += 1;
                }
                ';' | ' ' => {}
                other => return Err(StateError::NonBinaryLabel(other)),
            }
        }
        if bits != self.total {
            return Err(StateError::LabelWidth {
                got: bits,
                expected: self.total,
            });
        }
        Ok(index)
    }

    /// Renders a basis index as a ket label with `;` between registers.
    pub fn basis_label(&self, index: usize) -> String {
        let mut out = String::with_capacity(self.total + self.registers.len());
        let mut qubit = 0;
        for (i, (_, width)) in self.registers.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            for _ in 0..*width {
                out.push(if self.bit(index, qubit) { '1' } else { '0' });
                qubit += 1;
            }
        }
        out
    }

    /// Appends the registers of `other` after those of `self`.
    pub fn concat(&self, other: &RegisterLayout) -> Result<RegisterLayout, StateError> {
        let mut registers = self.registers.clone();
        registers.extend(other.registers.iter().cloned());
        RegisterLayout::new(registers)
    }

    pub fn renamed(&self, old: &str, new: &str) -> Result<RegisterLayout, StateError> {
        self.register_width(old)?;
        let registers = self
            .registers
            .iter()
            .map(|(n, w)| (if n == old { new.to_string() } else { n.clone() }, *w))
            .collect();
        RegisterLayout::new(registers)
    }
}

/// Counts for one observed bitstring, as returned by
/// [`StateVector::measure_shots`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementOutcome {
    pub bitstring: String,
    pub count: u64,
}

/// A normalized pure state over a register layout.
///
/// Operations return new states; callers never observe mutation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state at `index`.
    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self, StateError> {
        if layout.total_qubits() > MAX_QUBITS {
            return Err(StateError::TooManyQubits {
                qubits: layout.total_qubits(),
            });
        }
        let dim = layout.dimension();
        if index >= dim {
            return Err(StateError::IndexOutOfRange {
                index,
                qubits: layout.total_qubits(),
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { layout, amps })
    }

    /// Builds a state from raw amplitudes. Length and finiteness are checked;
    /// the caller is responsible for normalization.
    pub fn from_amplitudes(
        layout: RegisterLayout,
        amps: Vec<Complex64>,
    ) -> Result<Self, StateError> {
        if layout.total_qubits() > MAX_QUBITS {
            return Err(StateError::TooManyQubits {
                qubits: layout.total_qubits(),
            });
        }
        if amps.len() != layout.dimension() {
            return Err(StateError::AmplitudeCount {
                expected: layout.dimension(),
                got: amps.len(),
            });
        }
        for (i, a) in amps.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(StateError::NonFiniteAmplitude(i));
            }
        }
        Ok(StateVector { layout, amps })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Amplitude of the basis state written as a ket label.
    pub fn amplitude(&self, label: &str) -> Result<Complex64, StateError> {
        Ok(self.amps[self.layout.basis_index(label)?])
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies a 2x2 unitary to `target`, restricted to the subspace where
    /// every control matches its polarity.
    pub fn apply_unitary(
        &self,
        matrix: &Matrix2,
        target: usize,
        controls: &[Control],
    ) -> Result<Self, StateError> {
        let mut next = self.clone();
        next.apply_unitary_mut(matrix, target, controls)?;
        Ok(next)
    }

    pub(crate) fn apply_unitary_mut(
        &mut self,
        matrix: &Matrix2,
        target: usize,
        controls: &[Control],
    ) -> Result<(), StateError> {
        let n = self.layout.total;
        if target >= n {
            return Err(StateError::QubitOutOfRange {
                qubit: target,
                qubits: n,
            });
        }
        check_unitary(matrix)?;
        let tmask = 1usize << (n - 1 - target);
        let mut cmask = 0usize;
        let mut cval = 0usize;
        for (i, c) in controls.iter().enumerate() {
            if c.qubit >= n {
                return Err(StateError::QubitOutOfRange {
                    qubit: c.qubit,
                    qubits: n,
                });
            }
            if c.qubit == target || controls[..i].iter().any(|o| o.qubit == c.qubit) {
                return Err(StateError::OverlappingControl(c.qubit));
            }
            let bit = 1usize << (n - 1 - c.qubit);
            cmask |= bit;
            if c.polarity == Polarity::One {
                cval |= bit;
            }
        }
        for i in 0..self.amps.len() {
            if i & tmask != 0 || i & cmask != cval {
                continue;
            }
            let j = i | tmask;
            let a = self.amps[i];
            let b = self.amps[j];
            self.amps[i] = matrix[0][0] * a + matrix[0][1] * b;
            self.amps[j] = matrix[1][0] * a + matrix[1][1] * b;
        }
        Ok(())
    }

    /// Hadamard on every qubit of the named register.
    pub fn apply_plus_layer(&self, register: &str) -> Result<Self, StateError> {
        let qubits = self.layout.register_qubits(register)?;
        let h = crate::gates::h_matrix();
        let mut next = self.clone();
        for q in qubits {
            next.apply_unitary_mut(&h, q, &[])?;
        }
        Ok(next)
    }

    /// Probability that `qubit` reads `outcome`.
    pub fn bit_probability(&self, qubit: usize, outcome: bool) -> Result<f64, StateError> {
        let n = self.layout.total;
        if qubit >= n {
            return Err(StateError::QubitOutOfRange { qubit, qubits: n });
        }
        let mask = 1usize << (n - 1 - qubit);
        let want = if outcome { mask } else { 0 };
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Samples `shots` measurements of the listed qubits from their marginal
    /// distribution. Deterministic for a fixed seed; outcomes are sorted by
    /// bitstring and zero-count outcomes are omitted.
    pub fn measure_shots(
        &self,
        qubits: &[usize],
        shots: u64,
        seed: u64,
    ) -> Result<Vec<MeasurementOutcome>, StateError> {
        if qubits.is_empty() {
            return Err(StateError::EmptyQubitList);
        }
        if shots == 0 {
            return Err(StateError::ZeroShots);
        }
        let n = self.layout.total;
        for (i, &q) in qubits.iter().enumerate() {
            if q >= n {
                return Err(StateError::QubitOutOfRange { qubit: q, qubits: n });
            }
            if qubits[..i].contains(&q) {
                return Err(StateError::OverlappingControl(q));
            }
        }
        let k = qubits.len();
        let mut probs = vec![0.0f64; 1 << k];
        for (i, a) in self.amps.iter().enumerate() {
            let mut outcome = 0usize;
            for (pos, &q) in qubits.iter().enumerate() {
                if self.layout.bit(i, q) {
                    outcome |= 1 << (k - 1 - pos);
                }
            }
            probs[outcome] += a.norm_sqr();
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let total = acc;
        let mut counts = vec![0u64; probs.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..shots {
            let r: f64 = rng.gen::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c <= r).min(counts.len() - 1);
            counts[idx] += 1;
        }
        Ok(counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &count)| MeasurementOutcome {
                bitstring: format!("{i:0width$b}", width = k),
                count,
            })
            .collect())
    }

    /// Projects `qubit` onto `outcome`, returning the renormalized state and
    /// the exact pre-projection probability.
    pub fn project_postselect(
        &self,
        qubit: usize,
        outcome: bool,
    ) -> Result<(Self, f64), StateError> {
        let probability = self.bit_probability(qubit, outcome)?;
        if probability < PROJECTION_THRESHOLD {
            return Err(StateError::ZeroProbabilityOutcome {
                qubit,
                outcome: outcome as u8,
                probability,
                threshold: PROJECTION_THRESHOLD,
            });
        }
        let n = self.layout.total;
        let mask = 1usize << (n - 1 - qubit);
        let want = if outcome { mask } else { 0 };
        let scale = 1.0 / probability.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == want {
                    a * scale
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok((
            StateVector {
                layout: self.layout.clone(),
                amps,
            },
            probability,
        ))
    }

    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64, StateError> {
        if self.layout != other.layout {
            return Err(StateError::LayoutMismatch);
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, StateError> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// Tensor product; `other`'s registers are appended after `self`'s.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, StateError> {
        let layout = self.layout.concat(&other.layout)?;
        let other_dim = other.amps.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.dimension()];
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * other_dim + j] = a * b;
            }
        }
        Ok(StateVector { layout, amps })
    }

    pub fn renamed_register(&self, old: &str, new: &str) -> Result<StateVector, StateError> {
        Ok(StateVector {
            layout: self.layout.renamed(old, new)?,
            amps: self.amps.clone(),
        })
    }
}

fn check_unitary(m: &Matrix2) -> Result<(), StateError> {
    // U†U entries vs identity.
    let mut deviation = 0.0f64;
    for row in 0..2 {
        for col in 0..2 {
            let mut entry = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                entry += m[k][row].conj() * m[k][col];
            }
            let expect = if row == col { 1.0 } else { 0.0 };
            deviation = deviation.max((entry - expect).norm());
        }
    }
    if deviation > UNITARITY_TOLERANCE {
        return Err(StateError::NonUnitary { deviation });
    }
    Ok(())
}
