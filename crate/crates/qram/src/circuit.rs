//! Gate-sequence intermediate representation, and lowering of multi-controlled
//! gates into Toffoli chains over a shared ancilla register.

use thiserror::Error;

use crate::gates::{h_matrix, ry_matrix, x_matrix};
use crate::state::{Control, Matrix2, RegisterLayout, StateError, StateVector};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("gate touches qubit {qubit} but the circuit spans {qubits} qubits")]
    GateOutOfRange { qubit: usize, qubits: usize },
    #[error("gate has {0} controls; decomposition needs at least 2")]
    TooFewControls(usize),
    #[error("cannot express {0} in the OpenQASM 2.0 subset; decompose the circuit first")]
    UnexpressibleGate(String),
    #[error("register names `{0}` and `{1}` collide after lowercasing for QASM")]
    QasmNameClash(String, String),
    #[error("register name `{0}` is not a valid QASM identifier")]
    QasmBadName(String),
}

/// What a gate does to its target qubit.
#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    X,
    H,
    Ry(f64),
    /// Arbitrary 2x2 unitary payload (splitting and amplitude-loading gates).
    Unitary(Matrix2),
}

/// One controlled single-qubit operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<Control>,
    /// Provenance note for circuit listings, e.g. `"flip p3[2]"`.
    pub tag: Option<String>,
}

impl Gate {
    pub fn x(target: usize) -> Gate {
        Gate {
            kind: GateKind::X,
            target,
            controls: Vec::new(),
            tag: None,
        }
    }

    pub fn h(target: usize) -> Gate {
        Gate {
            kind: GateKind::H,
            target,
            controls: Vec::new(),
            tag: None,
        }
    }

    pub fn ry(theta: f64, target: usize) -> Gate {
        Gate {
            kind: GateKind::Ry(theta),
            target,
            controls: Vec::new(),
            tag: None,
        }
    }

    pub fn unitary(matrix: Matrix2, target: usize) -> Gate {
        Gate {
            kind: GateKind::Unitary(matrix),
            target,
            controls: Vec::new(),
            tag: None,
        }
    }

    pub fn controlled(mut self, controls: Vec<Control>) -> Gate {
        self.controls = controls;
        self
    }

    pub fn controlled_by_one(mut self, qubit: usize) -> Gate {
        self.controls.push(Control::one(qubit));
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Gate {
        self.tag = Some(tag.into());
        self
    }

    pub fn matrix(&self) -> Matrix2 {
        match &self.kind {
            GateKind::X => x_matrix(),
            GateKind::H => h_matrix(),
            GateKind::Ry(theta) => ry_matrix(*theta),
            GateKind::Unitary(m) => *m,
        }
    }

    fn max_qubit(&self) -> usize {
        self.controls
            .iter()
            .map(|control| control.qubit)
            .fold(self.target, usize::max)
    }

    fn is_primitive_toffoli(&self) -> bool {
        matches!(self.kind, GateKind::X) && self.controls.len() == 2
    }

    pub(crate) fn describe(&self) -> String {
        let kind = match &self.kind {
            GateKind::X => "X".to_string(),
            GateKind::H => "H".to_string(),
            GateKind::Ry(theta) => format!("Ry({theta})"),
            GateKind::Unitary(_) => "a 2x2 unitary".to_string(),
        };
        format!("{kind} with {} controls", self.controls.len())
    }
}

/// Lowers a gate with `k ≥ 2` controls into `k−1` Toffolis that fold the
/// control conjunction into ancillae, one singly-controlled payload, and the
/// mirrored `k−1` Toffolis that restore every ancilla to |0⟩.
///
/// Ancillae occupy `ancilla_base ..`. A plain Toffoli (X, 2 controls) is
/// already primitive and is returned unchanged.
pub fn decompose_mcx(gate: &Gate, ancilla_base: usize) -> Result<Vec<Gate>, CircuitError> {
    let k = gate.controls.len();
    if k < 2 {
        return Err(CircuitError::TooFewControls(k));
    }
    if gate.is_primitive_toffoli() {
        return Ok(vec![gate.clone()]);
    }
    let mut up = Vec::with_capacity(k - 1);
    up.push(
        Gate::x(ancilla_base).controlled(vec![gate.controls[0], gate.controls[1]]),
    );
    for i in 2..k {
        up.push(
            Gate::x(ancilla_base + i - 1)
                .controlled(vec![gate.controls[i], Control::one(ancilla_base + i - 2)]),
        );
    }
    let payload = Gate {
        kind: gate.kind.clone(),
        target: gate.target,
        controls: vec![Control::one(ancilla_base + k - 2)],
        tag: gate.tag.clone(),
    };
    let mut out = up.clone();
    out.push(payload);
    out.extend(up.into_iter().rev());
    Ok(out)
}

/// An ordered gate sequence over a register layout, plus any ancilla qubits
/// introduced by decomposition (indexed after the layout's qubits).
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    layout: RegisterLayout,
    gates: Vec<Gate>,
    ancilla_count: usize,
}

impl Circuit {
    pub fn new(layout: RegisterLayout) -> Circuit {
        Circuit {
            layout,
            gates: Vec::new(),
            ancilla_count: 0,
        }
    }

    fn with_ancillas(layout: RegisterLayout, ancilla_count: usize) -> Circuit {
        Circuit {
            layout,
            gates: Vec::new(),
            ancilla_count,
        }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn ancilla_count(&self) -> usize {
        self.ancilla_count
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        let span = self.layout.total_qubits() + self.ancilla_count;
        let max = gate.max_qubit();
        if max >= span {
            return Err(CircuitError::GateOutOfRange {
                qubit: max,
                qubits: span,
            });
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<(), CircuitError> {
        for gate in gates {
            self.push(gate)?;
        }
        Ok(())
    }

    fn needs_decomposition(gate: &Gate) -> bool {
        gate.controls.len() >= 2 && !gate.is_primitive_toffoli()
    }

    /// Rewrites every multi-controlled gate through [`decompose_mcx`]. All
    /// decompositions share one ancilla pool since each restores its
    /// ancillae to |0⟩ before the next begins.
    pub fn decomposed(&self) -> Result<Circuit, CircuitError> {
        let ancillas = self
            .gates
            .iter()
            .filter(|gate| Self::needs_decomposition(gate))
            .map(|gate| gate.controls.len() - 1)
            .max()
            .unwrap_or(0);
        let base = self.layout.total_qubits();
        let mut lowered = Circuit::with_ancillas(self.layout.clone(), ancillas);
        for gate in &self.gates {
            if Self::needs_decomposition(gate) {
                lowered.extend(decompose_mcx(gate, base)?)?;
            } else {
                lowered.push(gate.clone())?;
            }
        }
        Ok(lowered)
    }

    /// The layout a simulation of this circuit runs over: the declared
    /// registers plus an `anc` register when ancillae are present.
    pub fn simulation_layout(&self) -> Result<RegisterLayout, StateError> {
        if self.ancilla_count == 0 {
            return Ok(self.layout.clone());
        }
        self.layout
            .concat(&RegisterLayout::new(vec![("anc", self.ancilla_count)])?)
    }

    /// Replays the gate sequence on `initial`. When the circuit carries
    /// ancillae, the initial state is extended with |0…0⟩ on the `anc`
    /// register and the returned state spans [`Self::simulation_layout`].
    pub fn simulate(&self, initial: &StateVector) -> Result<StateVector, CircuitError> {
        if initial.layout() != &self.layout {
            return Err(CircuitError::State(StateError::LayoutMismatch));
        }
        let mut state = if self.ancilla_count == 0 {
            initial.clone()
        } else {
            let anc = RegisterLayout::new(vec![("anc", self.ancilla_count)])?;
            initial.tensor(&StateVector::basis(anc, 0)?)?
        };
        for gate in &self.gates {
            state.apply_unitary_mut(&gate.matrix(), gate.target, &gate.controls)?;
        }
        Ok(state)
    }
}
