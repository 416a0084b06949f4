//! OpenQASM 2.0 text emission.
//!
//! The emitted subset is `x`, `h`, `ry`, `cx`, `ccx`, `u3` and `cu3`, with
//! control-on-zero polarities lowered by sandwiching the control qubit in
//! `x` gates. Output is deterministic: identical circuits emit byte-identical
//! text, with angles printed to 17 significant digits so doubles round-trip.

use std::fmt::Write as _;

use crate::circuit::{Circuit, CircuitError, Gate, GateKind};
use crate::state::{Matrix2, Polarity};

/// Renders a circuit as OpenQASM 2.0. With `decompose` set, multi-controlled
/// gates are first lowered onto an `anc` register; without it, any gate
/// outside the expressible subset is an error.
pub fn emit_qasm(circuit: &Circuit, decompose: bool) -> Result<String, CircuitError> {
    let lowered;
    let circuit = if decompose {
        lowered = circuit.decomposed()?;
        &lowered
    } else {
        circuit
    };

    let names = qasm_register_names(circuit)?;
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    for (name, width) in &names {
        let _ = writeln!(out, "qreg {name}[{width}];");
    }

    let resolver = QubitResolver::new(&names);
    for gate in circuit.gates() {
        emit_gate(&mut out, gate, &resolver)?;
    }
    Ok(out)
}

/// Lowercased register names (QASM identifiers must start with a lowercase
/// letter), plus the ancilla register when present.
fn qasm_register_names(circuit: &Circuit) -> Result<Vec<(String, usize)>, CircuitError> {
    let mut names: Vec<(String, usize)> = Vec::new();
    let mut push = |name: String, width: usize| -> Result<(), CircuitError> {
        if !name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_lowercase())
            || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(CircuitError::QasmBadName(name));
        }
        if let Some((clash, _)) = names.iter().find(|(n, _)| *n == name) {
            return Err(CircuitError::QasmNameClash(clash.clone(), name));
        }
        names.push((name, width));
        Ok(())
    };
    for (name, width) in circuit.layout().registers() {
        push(name.to_ascii_lowercase(), *width)?;
    }
    if circuit.ancilla_count() > 0 {
        push("anc".to_string(), circuit.ancilla_count())?;
    }
    Ok(names)
}

struct QubitResolver {
    // (register position in the emitted name list, offset) per global qubit
    slots: Vec<(usize, usize)>,
    names: Vec<String>,
}

impl QubitResolver {
    fn new(names: &[(String, usize)]) -> QubitResolver {
        let mut slots = Vec::new();
        for (reg, (_, width)) in names.iter().enumerate() {
            for offset in 0..*width {
                slots.push((reg, offset));
            }
        }
        QubitResolver {
            slots,
            names: names.iter().map(|(n, _)| n.clone()).collect(),
        }
    }

    fn qubit(&self, index: usize) -> String {
        let (reg, offset) = self.slots[index];
        format!("{}[{offset}]", self.names[reg])
    }
}

fn angle(value: f64) -> String {
    format!("{value:.16e}")
}

fn emit_gate(out: &mut String, gate: &Gate, resolver: &QubitResolver) -> Result<(), CircuitError> {
    // Lower control-on-zero polarities with x sandwiches.
    let negatives: Vec<usize> = gate
        .controls
        .iter()
        .filter(|c| c.polarity == Polarity::Zero)
        .map(|c| c.qubit)
        .collect();
    for &q in &negatives {
        let _ = writeln!(out, "x {};", resolver.qubit(q));
    }

    let controls: Vec<String> = gate
        .controls
        .iter()
        .map(|c| resolver.qubit(c.qubit))
        .collect();
    let target = resolver.qubit(gate.target);
    let unsupported = || CircuitError::UnexpressibleGate(gate.describe());

    match (&gate.kind, controls.len()) {
        (GateKind::X, 0) => {
            let _ = writeln!(out, "x {target};");
        }
        (GateKind::X, 1) => {
            let _ = writeln!(out, "cx {}, {target};", controls[0]);
        }
        (GateKind::X, 2) => {
            let _ = writeln!(out, "ccx {}, {}, {target};", controls[0], controls[1]);
        }
        (GateKind::H, 0) => {
            let _ = writeln!(out, "h {target};");
        }
        (GateKind::Ry(theta), 0) => {
            let _ = writeln!(out, "ry({}) {target};", angle(*theta));
        }
        (GateKind::Ry(theta), 1) => {
            let _ = writeln!(
                out,
                "cu3({}, {}, {}) {}, {target};",
                angle(*theta),
                angle(0.0),
                angle(0.0),
                controls[0]
            );
        }
        (GateKind::Unitary(matrix), 0) => {
            let (theta, phi, lambda) = u3_angles(matrix)?;
            let _ = writeln!(
                out,
                "u3({}, {}, {}) {target};",
                angle(theta),
                angle(phi),
                angle(lambda)
            );
        }
        (GateKind::Unitary(matrix), 1) => {
            let (theta, phi, lambda) = u3_angles(matrix)?;
            let _ = writeln!(
                out,
                "cu3({}, {}, {}) {}, {target};",
                angle(theta),
                angle(phi),
                angle(lambda),
                controls[0]
            );
        }
        _ => return Err(unsupported()),
    }

    for &q in negatives.iter().rev() {
        let _ = writeln!(out, "x {};", resolver.qubit(q));
    }
    Ok(())
}

/// Recovers (θ, φ, λ) such that the standard `u3` matrix equals `m` exactly
/// (no global-phase slack, since a phase on a controlled payload would become
/// a relative phase). Errors if `m` is not of that form.
pub(crate) fn u3_angles(m: &Matrix2) -> Result<(f64, f64, f64), CircuitError> {
    let sin_half = m[1][0].norm();
    let theta = 2.0 * sin_half.atan2(m[0][0].re);
    let (phi, lambda) = if sin_half > 1e-12 {
        (m[1][0].arg(), (-m[0][1]).arg())
    } else {
        (0.0, (m[1][1] * m[0][0].conj()).arg())
    };
    let rebuilt = crate::gates::U3Params { theta, lambda, phi }.matrix();
    let mut defect = 0.0f64;
    for row in 0..2 {
        for col in 0..2 {
            defect = defect.max((rebuilt[row][col] - m[row][col]).norm());
        }
    }
    if defect > 1e-10 {
        return Err(CircuitError::UnexpressibleGate(format!(
            "payload is not a u3-form unitary (defect {defect:.3e})"
        )));
    }
    Ok((theta, phi, lambda))
}
