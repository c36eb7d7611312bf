//! Measurement patterns for the universal gate set and their fidelity
//! witnesses.
//!
//! Patterns are data: they are read from a small line-oriented registry
//! file (see [`Registry::parse`]); a default registry ships with the crate.
//! A pattern keeps its input and output qubits unmeasured, so the
//! post-measurement state on them is the Choi state of the implemented gate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex;

use crate::cluster::{stabilizer, Graph};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::qstate::{gates, ComplexMatrix, DensityMatrix};
use crate::scalar::Real;

/// Registry text bundled with the crate.
pub const BUNDLED_REGISTRY: &str = include_str!("../data/patterns.reg");

/// One of the four universal gates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    Identity,
    Hadamard,
    /// Rotation about Z by the given angle in radians.
    ZRotation(f64),
    ControlledZ,
}

impl GateKind {
    /// Registry section name.
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Identity => "identity",
            GateKind::Hadamard => "hadamard",
            GateKind::ZRotation(_) => "zrot",
            GateKind::ControlledZ => "cz",
        }
    }

    pub fn theta(&self) -> f64 {
        match self {
            GateKind::ZRotation(t) => *t,
            _ => 0.0,
        }
    }

    /// Parses a gate name; `theta` is required for `zrot` and ignored
    /// otherwise.
    pub fn from_name(name: &str, theta: Option<f64>) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(GateKind::Identity),
            "hadamard" | "h" => Ok(GateKind::Hadamard),
            "cz" | "controlled-z" => Ok(GateKind::ControlledZ),
            "zrot" | "zrotation" | "rz" => {
                let t = theta.ok_or_else(|| Error::arg("the zrot gate needs an angle"))?;
                if !t.is_finite() {
                    return Err(Error::arg("rotation angle must be finite"));
                }
                Ok(GateKind::ZRotation(t))
            }
            other => Err(Error::arg(format!(
                "unknown gate {other:?} (expected identity, hadamard, zrot or cz)"
            ))),
        }
    }

    /// The four gates, with `theta` for the rotation.
    pub fn all(theta: f64) -> [GateKind; 4] {
        [
            GateKind::Identity,
            GateKind::Hadamard,
            GateKind::ZRotation(theta),
            GateKind::ControlledZ,
        ]
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::ZRotation(t) => write!(f, "zrot({t})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Measurement basis of one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    X,
    Y,
    Z,
    /// `cos φ X + sin φ Y` with `φ = sign · θ · (−1)^{s_control}`.
    Adaptive {
        sign: i8,
        control: usize,
    },
}

impl Basis {
    /// The measured observable; outcome bit `s` selects eigenvalue `(−1)^s`.
    pub fn observable<T: Real>(&self, theta: f64, outcomes: &[u8]) -> ComplexMatrix<T> {
        match *self {
            Basis::X => gates::pauli_x(),
            Basis::Y => gates::pauli_y(),
            Basis::Z => gates::pauli_z(),
            Basis::Adaptive { sign, control } => {
                let flip = if outcomes[control] == 0 { 1.0 } else { -1.0 };
                let phi = T::lit(f64::from(sign) * theta * flip);
                let x = gates::pauli_x::<T>().scale_real(phi.cos());
                let y = gates::pauli_y::<T>().scale_real(phi.sin());
                &x + &y
            }
        }
    }

    /// Single-qubit Pauli errors that leave this measurement's outcome
    /// statistics untouched up to relabeling.
    pub fn is_pauli(&self, p: Pauli) -> bool {
        matches!(
            (self, p),
            (Basis::X, Pauli::X) | (Basis::Y, Pauli::Y) | (Basis::Z, Pauli::Z)
        )
    }

    fn parse(token: &str, labels: &BTreeMap<String, usize>, line: usize) -> Result<Self> {
        match token {
            "X" => return Ok(Basis::X),
            "Y" => return Ok(Basis::Y),
            "Z" => return Ok(Basis::Z),
            _ => {}
        }
        let inner = token
            .strip_prefix("adaptive(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::parse(line, format!("unknown basis {token:?}")))?;
        let (angle, ctrl) = inner
            .split_once(',')
            .ok_or_else(|| Error::parse(line, "adaptive basis needs `(theta,<qubit>)`"))?;
        let sign = match angle.trim() {
            "theta" | "+theta" => 1,
            "-theta" => -1,
            other => return Err(Error::parse(line, format!("bad adaptive angle {other:?}"))),
        };
        let control = resolve(labels, ctrl.trim(), line)?;
        Ok(Basis::Adaptive { sign, control })
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::X => f.write_str("X"),
            Basis::Y => f.write_str("Y"),
            Basis::Z => f.write_str("Z"),
            Basis::Adaptive { sign, control } => {
                let s = if *sign < 0 { "-" } else { "" };
                write!(f, "adaptive({s}theta,{control})")
            }
        }
    }
}

/// Apply `pauli` to `target` when the outcome parity over `parity` is odd.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ByproductRule {
    pub parity: Vec<usize>,
    pub pauli: Pauli,
    pub target: usize,
}

impl ByproductRule {
    pub fn fires(&self, outcomes: &[u8]) -> bool {
        self.parity.iter().map(|&q| outcomes[q]).sum::<u8>() % 2 == 1
    }
}

/// Graph, qubit roles, measurement bases and byproduct corrections of one
/// gate.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPattern {
    name: String,
    graph: Graph,
    labels: BTreeMap<String, usize>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    order: Vec<usize>,
    bases: BTreeMap<usize, Basis>,
    byproducts: Vec<ByproductRule>,
}

impl MeasurementPattern {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn num_qubits(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Measured qubits in measurement order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn basis(&self, qubit: usize) -> Option<Basis> {
        self.bases.get(&qubit).copied()
    }

    pub fn byproducts(&self) -> &[ByproductRule] {
        &self.byproducts
    }

    /// Unmeasured qubits (inputs and outputs), ascending.
    pub fn kept_qubits(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.inputs.iter().chain(&self.outputs).copied().collect();
        set.into_iter().collect()
    }

    /// Vertex index of a label. Plain numbers always resolve to themselves.
    pub fn qubit(&self, label: &str) -> Result<usize> {
        resolve(&self.labels, label, 0).map_err(|_| {
            Error::arg(format!(
                "pattern {} has no qubit labelled {label:?}",
                self.name
            ))
        })
    }

    /// Label for display: the explicit alias if any, else the index.
    pub fn label_of(&self, qubit: usize) -> String {
        self.labels
            .iter()
            .find(|(name, &q)| q == qubit && name.parse::<usize>().is_err())
            .map(|(name, _)| name.clone())
            .unwrap_or_else(|| qubit.to_string())
    }

    /// Pauli corrections fired by an outcome vector, in rule order.
    pub fn corrections(&self, outcomes: &[u8]) -> Vec<(usize, Pauli)> {
        self.byproducts
            .iter()
            .filter(|r| r.fires(outcomes))
            .map(|r| (r.target, r.pauli))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_qubits();
        let err = |msg: String| Err(Error::arg(format!("pattern {}: {msg}", self.name)));
        if n == 0 {
            return err("empty graph".into());
        }
        let mut seen = BTreeSet::new();
        for &q in &self.order {
            if !seen.insert(q) {
                return err(format!("qubit {q} measured twice"));
            }
            if !self.bases.contains_key(&q) {
                return err(format!("measured qubit {q} has no basis"));
            }
        }
        for &q in self.bases.keys() {
            if !seen.contains(&q) {
                return err(format!(
                    "qubit {q} has a basis but is not in the measurement order"
                ));
            }
        }
        for &q in self.outputs.iter().chain(&self.inputs) {
            if q >= n {
                return err(format!("qubit {q} out of range"));
            }
            if seen.contains(&q) {
                return err(format!("input/output qubit {q} is also measured"));
            }
        }
        let covered: BTreeSet<usize> = seen
            .iter()
            .chain(&self.inputs)
            .chain(&self.outputs)
            .copied()
            .collect();
        if covered.len() != n {
            let missing: Vec<usize> = (0..n).filter(|q| !covered.contains(q)).collect();
            return err(format!(
                "qubits {missing:?} are neither measured nor inputs/outputs"
            ));
        }
        if self.outputs.is_empty() {
            return err("no output qubits".into());
        }
        for (pos, &q) in self.order.iter().enumerate() {
            if let Some(Basis::Adaptive { control, .. }) = self.bases.get(&q) {
                if !self.order[..pos].contains(control) {
                    return err(format!(
                        "adaptive qubit {q} is measured before its control {control}"
                    ));
                }
            }
        }
        for rule in &self.byproducts {
            if !self.outputs.contains(&rule.target) {
                return err(format!("byproduct target {} is not an output", rule.target));
            }
            if let Some(q) = rule.parity.iter().find(|q| !seen.contains(q)) {
                return err(format!("byproduct parity uses unmeasured qubit {q}"));
            }
        }
        Ok(())
    }
}

fn resolve(labels: &BTreeMap<String, usize>, token: &str, line: usize) -> Result<usize> {
    if let Some(&q) = labels.get(token) {
        return Ok(q);
    }
    token
        .parse::<usize>()
        .map_err(|_| Error::parse(line, format!("unknown qubit label {token:?}")))
}

/// Patterns keyed by gate name.
#[derive(Clone, Debug, PartialEq)]
pub struct Registry {
    patterns: BTreeMap<String, MeasurementPattern>,
}

impl Registry {
    /// The registry shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_REGISTRY).expect("bundled registry is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Result<Self>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text))
    }

    /// Parses registry text.
    ///
    /// ```text
    /// [identity]
    /// graph 7 0-1 1-2 2-3 3-4 4-5 5-6
    /// label 0 left            # optional alias
    /// inputs 1
    /// outputs 5
    /// order 0 6 2 3 4
    /// basis 0 Z
    /// basis 3 adaptive(theta,2)
    /// byproduct 2+4 X 5
    /// ```
    ///
    /// Qubits may be referred to by index or by alias once the alias is
    /// declared. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut patterns = BTreeMap::new();
        let mut current: Option<Builder> = None;
        let finish = |b: Option<Builder>,
                      patterns: &mut BTreeMap<String, MeasurementPattern>|
         -> Result<()> {
            if let Some(b) = b {
                let p = b.build()?;
                if patterns.contains_key(&p.name) {
                    return Err(Error::arg(format!("gate {} defined twice", p.name)));
                }
                patterns.insert(p.name.clone(), p);
            }
            Ok(())
        };

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                finish(current.take(), &mut patterns)?;
                current = Some(Builder::new(name.trim(), line));
                continue;
            }
            let b = current
                .as_mut()
                .ok_or_else(|| Error::parse(line, "directive outside a [gate] section"))?;
            b.directive(content, line)?;
        }
        finish(current.take(), &mut patterns)?;
        if patterns.is_empty() {
            return Err(Error::parse(0, "registry defines no patterns"));
        }
        Ok(Self { patterns })
    }

    pub fn get(&self, name: &str) -> Option<&MeasurementPattern> {
        self.patterns.get(name)
    }

    /// Pattern for `gate`.
    pub fn pattern_for(&self, gate: &GateKind) -> Result<&MeasurementPattern> {
        self.get(gate.name())
            .ok_or_else(|| Error::arg(format!("registry has no pattern for gate {}", gate.name())))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.patterns.keys().map(String::as_str)
    }
}

struct Builder {
    name: String,
    line: usize,
    graph: Option<Graph>,
    labels: BTreeMap<String, usize>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    order: Vec<usize>,
    bases: BTreeMap<usize, Basis>,
    byproducts: Vec<ByproductRule>,
}

impl Builder {
    fn new(name: &str, line: usize) -> Self {
        Self {
            name: name.to_string(),
            line,
            graph: None,
            labels: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            order: Vec::new(),
            bases: BTreeMap::new(),
            byproducts: Vec::new(),
        }
    }

    fn qubits(&self, tokens: &[&str], line: usize) -> Result<Vec<usize>> {
        tokens
            .iter()
            .map(|t| resolve(&self.labels, t, line))
            .collect()
    }

    fn directive(&mut self, content: &str, line: usize) -> Result<()> {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let (head, rest) = fields.split_first().expect("non-empty line");
        if *head != "graph" && self.graph.is_none() {
            return Err(Error::parse(line, "`graph` must come first in a section"));
        }
        match *head {
            "graph" => {
                if self.graph.is_some() {
                    return Err(Error::parse(line, "graph given twice"));
                }
                let (n, edges) = rest
                    .split_first()
                    .ok_or_else(|| Error::parse(line, "graph needs a vertex count"))?;
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad vertex count {n:?}")))?;
                let edges = edges
                    .iter()
                    .map(|e| {
                        let (a, b) = e
                            .split_once('-')
                            .ok_or_else(|| Error::parse(line, format!("bad edge {e:?}")))?;
                        let p = |s: &str| {
                            s.parse::<usize>()
                                .map_err(|_| Error::parse(line, format!("bad edge {e:?}")))
                        };
                        Ok((p(a)?, p(b)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.graph =
                    Some(Graph::new(n, edges).map_err(|e| Error::parse(line, e.to_string()))?);
            }
            "label" => {
                let [q, name] = rest else {
                    return Err(Error::parse(line, "usage: label <qubit> <name>"));
                };
                let q = resolve(&self.labels, q, line)?;
                if name.parse::<usize>().is_ok() {
                    return Err(Error::parse(line, "labels must not be plain numbers"));
                }
                self.labels.insert(name.to_string(), q);
            }
            "inputs" => self.inputs = self.qubits(rest, line)?,
            "outputs" => self.outputs = self.qubits(rest, line)?,
            "order" => self.order = self.qubits(rest, line)?,
            "basis" => {
                let [q, b] = rest else {
                    return Err(Error::parse(
                        line,
                        "usage: basis <qubit> <X|Y|Z|adaptive(theta,q)>",
                    ));
                };
                let q = resolve(&self.labels, q, line)?;
                let basis = Basis::parse(b, &self.labels, line)?;
                if self.bases.insert(q, basis).is_some() {
                    return Err(Error::parse(
                        line,
                        format!("basis for qubit {q} given twice"),
                    ));
                }
            }
            "byproduct" => {
                let [expr, pauli, target] = rest else {
                    return Err(Error::parse(
                        line,
                        "usage: byproduct <q+q+...> <X|Y|Z> <output>",
                    ));
                };
                let parity = expr
                    .split('+')
                    .map(|t| resolve(&self.labels, t.trim(), line))
                    .collect::<Result<Vec<_>>>()?;
                let pauli =
                    Pauli::from_str(pauli).map_err(|e| Error::parse(line, e.to_string()))?;
                let target = resolve(&self.labels, target, line)?;
                self.byproducts.push(ByproductRule {
                    parity,
                    pauli,
                    target,
                });
            }
            other => return Err(Error::parse(line, format!("unknown directive {other:?}"))),
        }
        Ok(())
    }

    fn build(self) -> Result<MeasurementPattern> {
        let graph = self.graph.ok_or_else(|| {
            Error::parse(self.line, format!("section [{}] has no graph", self.name))
        })?;
        let p = MeasurementPattern {
            name: self.name,
            graph,
            labels: self.labels,
            inputs: self.inputs,
            outputs: self.outputs,
            order: self.order,
            bases: self.bases,
            byproducts: self.byproducts,
        };
        if let Some((_, &q)) = p.labels.iter().find(|(_, &q)| q >= p.num_qubits()) {
            return Err(Error::arg(format!(
                "pattern {}: label points at missing qubit {q}",
                p.name
            )));
        }
        p.validate()?;
        Ok(p)
    }
}

/// One multiplicative factor of a witness.
#[derive(Clone, Debug)]
pub struct WitnessFactor<T> {
    /// Human-readable form, e.g. `(I + K1 K3 K5)/2`.
    pub description: String,
    pub operator: PauliSum<T>,
    /// `Some(S)` when the factor is the projector `(I + S)/2`.
    pub stabilizer: Option<PauliString>,
}

/// Operator whose expectation on the noisy, not yet measured cluster state
/// is the outcome-averaged gate fidelity.
#[derive(Debug)]
pub struct FidelityWitness<T> {
    gate: GateKind,
    num_qubits: usize,
    factors: Vec<WitnessFactor<T>>,
    combined: PauliSum<T>,
    dense: OnceLock<ComplexMatrix<T>>,
}

impl<T: Real> FidelityWitness<T> {
    pub fn gate(&self) -> GateKind {
        self.gate
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn factors(&self) -> &[WitnessFactor<T>] {
        &self.factors
    }

    /// Product of the factors as a Pauli expansion.
    pub fn operator(&self) -> &PauliSum<T> {
        &self.combined
    }

    /// Dense form, built on first use.
    pub fn matrix(&self) -> Result<&ComplexMatrix<T>> {
        if let Some(m) = self.dense.get() {
            return Ok(m);
        }
        let m = self.combined.matrix()?;
        Ok(self.dense.get_or_init(|| m))
    }

    /// `Tr(ρ W)`.
    pub fn expectation(&self, rho: &DensityMatrix<T>) -> Result<Complex<T>> {
        self.combined.expectation(rho)
    }

    /// Qubits grouped by the set of factors whose support touches them.
    /// Qubits touched by several factors form their own blocks; untouched
    /// qubits are omitted.
    pub fn support_partition(&self) -> Vec<BTreeSet<usize>> {
        self.partition_by(|factor, q| factor.operator.support().contains(&q))
    }

    /// Qubits grouped by the set of factors that a single-qubit `error`
    /// fails to commute with. Qubits where `error` commutes with every
    /// factor are omitted.
    pub fn sensitivity_partition(&self, error: Pauli) -> Vec<BTreeSet<usize>> {
        self.partition_by(|factor, q| {
            factor
                .operator
                .terms()
                .any(|(_, s)| s.letter(q).anticommutes(error))
        })
    }

    fn partition_by(
        &self,
        touches: impl Fn(&WitnessFactor<T>, usize) -> bool,
    ) -> Vec<BTreeSet<usize>> {
        let mut groups: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
        for q in 0..self.num_qubits {
            let signature: Vec<usize> = self
                .factors
                .iter()
                .enumerate()
                .filter(|(_, f)| touches(f, q))
                .map(|(k, _)| k)
                .collect();
            if !signature.is_empty() {
                groups.entry(signature).or_default().insert(q);
            }
        }
        groups.into_values().collect()
    }
}

/// Builds the witness of `gate` over the qubits of `pattern`.
pub fn witness_for<T: Real>(
    gate: &GateKind,
    pattern: &MeasurementPattern,
) -> Result<FidelityWitness<T>> {
    let n = pattern.num_qubits();
    let k =
        |label: &str| -> Result<PauliString> { stabilizer(pattern.graph(), pattern.qubit(label)?) };
    let product = |labels: &[&str]| -> Result<PauliString> {
        labels
            .iter()
            .try_fold(PauliString::identity(n), |acc, l| Ok(&acc * &k(l)?))
    };
    let projector = |labels: &[&str], desc_labels: &[&str]| -> Result<WitnessFactor<T>> {
        let s = product(labels)?;
        let ks: Vec<String> = desc_labels.iter().map(|l| format!("K{l}")).collect();
        Ok(WitnessFactor {
            description: format!("(I + {})/2", ks.join(" ")),
            operator: PauliSum::half_plus(&s),
            stabilizer: Some(s),
        })
    };
    let proj = |labels: &[&str]| projector(labels, labels);

    let factors = match gate {
        GateKind::Identity => vec![proj(&["1", "3", "5"])?, proj(&["2", "4"])?],
        GateKind::Hadamard => vec![proj(&["1", "3", "5"])?, proj(&["2", "4", "6"])?],
        GateKind::ZRotation(theta) => {
            let th = T::lit(*theta);
            let (c, s) = (th.cos(), th.sin());
            let id = PauliSum::<T>::identity(n);
            let from = |p: PauliString| PauliSum::<T>::from_string(&p);
            let k4 = from(k("4")?);
            let k135 = from(product(&["1", "3", "5"])?);
            let zyz = PauliString::from_sparse(
                n,
                &[
                    (pattern.qubit("0")?, Pauli::Z),
                    (pattern.qubit("1")?, Pauli::Y),
                    (pattern.qubit("2")?, Pauli::Z),
                ],
            )?;
            let cross = from(zyz)
                .mul(&from(product(&["2", "3"])?))
                .mul(&id.sub(&k4))
                .mul(&from(k("5")?));
            let mixed = k135.mul(&id.scale_real(c * c).add(&k4.scale_real(s * s)));
            let second = id
                .add(&mixed)
                .add(&cross.scale_real(c * s))
                .scale_real(T::lit(0.5));
            vec![
                proj(&["2", "4"])?,
                WitnessFactor {
                    description:
                        "(I + K1 K3 K5 (cos²θ + sin²θ K4) + cosθ sinθ Z0 Y1 Z2 K2 K3 (I - K4) K5)/2"
                            .into(),
                    operator: second,
                    stabilizer: None,
                },
            ]
        }
        GateKind::ControlledZ => vec![
            projector(&["a_in", "3", "a_out"], &["a_in", "3", "a_out"])?,
            projector(&["b_in", "4", "b_out"], &["b_in", "4", "b_out"])?,
            proj(&["1", "4"])?,
            proj(&["2", "3"])?,
        ],
    };

    let combined = factors
        .iter()
        .fold(PauliSum::identity(n), |acc, f| acc.mul(&f.operator));
    if !combined.is_hermitian(T::state_tol()) {
        return Err(Error::arg(format!("witness for {gate} is not Hermitian")));
    }
    Ok(FidelityWitness {
        gate: *gate,
        num_qubits: n,
        factors,
        combined,
        dense: OnceLock::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::build_cluster_state;

    fn registry() -> Registry {
        Registry::bundled()
    }

    #[test]
    fn bundled_registry_has_all_gates() {
        let r = registry();
        for g in GateKind::all(0.3) {
            r.pattern_for(&g).unwrap();
        }
    }

    #[test]
    fn identity_pattern_labels() {
        let r = registry();
        let p = r.pattern_for(&GateKind::Identity).unwrap();
        assert!(p.qubit("0").is_ok() && p.qubit("6").is_ok());
        assert_eq!(p.num_qubits(), 7);
    }

    #[test]
    fn zrot_pattern_is_adaptive_on_qubit_two() {
        let r = registry();
        let p = r.pattern_for(&GateKind::ZRotation(0.5)).unwrap();
        let adaptive: Vec<_> = p
            .order()
            .iter()
            .filter_map(|&q| match p.basis(q) {
                Some(Basis::Adaptive { control, .. }) => Some((q, control)),
                _ => None,
            })
            .collect();
        assert_eq!(adaptive, vec![(3, 2)]);
    }

    #[test]
    fn cz_pattern_labels() {
        let r = registry();
        let p = r.pattern_for(&GateKind::ControlledZ).unwrap();
        for l in ["a_in", "a_out", "b_in", "b_out", "1", "2", "3", "4"] {
            p.qubit(l).unwrap();
        }
        assert_eq!(p.label_of(p.qubit("b_out").unwrap()), "b_out");
    }

    #[test]
    fn witnesses_are_one_on_the_cluster_state() {
        let r = registry();
        for g in GateKind::all(0.9) {
            let p = r.pattern_for(&g).unwrap();
            let w = witness_for::<f64>(&g, p).unwrap();
            let rho = build_cluster_state::<f64>(p.graph()).unwrap();
            let f = w.expectation(&rho).unwrap();
            assert!((f.re - 1.0).abs() < 1e-10 && f.im.abs() < 1e-10, "{g}: {f}");
            let dense = rho.expectation(w.matrix().unwrap()).unwrap();
            assert!((dense - f).norm() < 1e-12);
        }
    }

    #[test]
    fn projector_factors_are_projectors() {
        let r = registry();
        for g in GateKind::all(0.4) {
            let w = witness_for::<f64>(&g, r.pattern_for(&g).unwrap()).unwrap();
            for f in w.factors().iter().filter(|f| f.stabilizer.is_some()) {
                let m = f.operator.matrix().unwrap();
                assert!(m.is_projector(1e-10), "{g}: {}", f.description);
            }
            assert!(w.matrix().unwrap().is_hermitian(1e-12));
        }
    }

    #[test]
    fn zrot_at_zero_matches_identity_structure() {
        let r = registry();
        let p = r.pattern_for(&GateKind::ZRotation(0.0)).unwrap();
        let w = witness_for::<f64>(&GateKind::ZRotation(0.0), p).unwrap();
        let second = &w.factors()[1].operator;
        let k135 = {
            let k = |i| stabilizer(p.graph(), i).unwrap();
            &(&k(1) * &k(3)) * &k(5)
        };
        assert_eq!(*second, PauliSum::half_plus(&k135));
    }

    #[test]
    fn cz_factors_commute() {
        let r = registry();
        let g = GateKind::ControlledZ;
        let w = witness_for::<f64>(&g, r.pattern_for(&g).unwrap()).unwrap();
        let ms: Vec<_> = w
            .factors()
            .iter()
            .map(|f| f.operator.matrix().unwrap())
            .collect();
        for a in &ms {
            for b in &ms {
                assert!(a.commutator(b).max_abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn hadamard_support_partition() {
        let r = registry();
        let g = GateKind::Hadamard;
        let w = witness_for::<f64>(&g, r.pattern_for(&g).unwrap()).unwrap();
        let groups = w.support_partition();
        assert!(groups.contains(&BTreeSet::from([0, 3, 5])));
        assert!(groups.contains(&BTreeSet::from([2, 4, 7])));
        assert!(groups.contains(&BTreeSet::from([1, 6])));
        let dephasing = w.sensitivity_partition(Pauli::Z);
        assert_eq!(
            dephasing,
            vec![BTreeSet::from([1, 3, 5]), BTreeSet::from([2, 4, 6])]
        );
    }

    #[test]
    fn identity_support_partition() {
        let r = registry();
        let g = GateKind::Identity;
        let w = witness_for::<f64>(&g, r.pattern_for(&g).unwrap()).unwrap();
        let groups = w.support_partition();
        assert_eq!(
            groups,
            vec![
                BTreeSet::from([0, 3, 6]),
                BTreeSet::from([1, 5]),
                BTreeSet::from([2, 4])
            ]
        );
    }

    #[test]
    fn registry_parse_errors() {
        assert!(Registry::parse("").is_err());
        assert!(Registry::parse("inputs 1").is_err());
        assert!(Registry::parse("[g]\ninputs 0").is_err());
        let base = "[g]\ngraph 3 0-1 1-2\ninputs 0\noutputs 2\norder 1\nbasis 1 X\n";
        assert!(Registry::parse(base).is_ok());
        assert!(Registry::parse(&format!("{base}basis 1 Y\n")).is_err());
        assert!(Registry::parse(&format!("{base}byproduct 1 X 0\n")).is_err());
        assert!(Registry::parse(&format!("{base}byproduct 0 X 2\n")).is_err());
        assert!(Registry::parse(&format!("{base}frobnicate\n")).is_err());
        assert!(Registry::parse(&format!("{base}[g]\ngraph 1\noutputs 0\n")).is_err());
        // qubit 2 uncovered
        assert!(Registry::parse("[g]\ngraph 3 0-1 1-2\ninputs 0\noutputs 1\n").is_err());
        // adaptive before its control
        let bad =
            "[g]\ngraph 3 0-1 1-2\noutputs 2\norder 0 1\nbasis 0 adaptive(theta,1)\nbasis 1 X\n";
        assert!(Registry::parse(bad).is_err());
    }

    #[test]
    fn gate_names() {
        assert_eq!(
            GateKind::from_name("zrot", Some(0.5)).unwrap(),
            GateKind::ZRotation(0.5)
        );
        assert!(GateKind::from_name("zrot", None).is_err());
        assert!(GateKind::from_name("toffoli", None).is_err());
        assert_eq!(
            GateKind::from_name("CZ", None).unwrap(),
            GateKind::ControlledZ
        );
    }
}
