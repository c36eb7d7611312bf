//! Gate fidelity of a noisy cluster state: the closed-form witness
//! expectation and the brute-force measurement oracle it must agree with.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::cluster::build_cluster_state;
use crate::error::{Error, Result};
use crate::noise::NoiseAssignment;
use crate::patterns::{witness_for, FidelityWitness, GateKind, MeasurementPattern, Registry};
use crate::qstate::{gates, ComplexMatrix, DensityMatrix};
use crate::scalar::Real;

/// Agreement required between the two fidelity methods in double precision.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Formula,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Formula => "formula",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Clone, Debug)]
pub struct FidelityResult<T> {
    pub gate: GateKind,
    /// Short description of the noise assignment.
    pub noise: String,
    pub value: T,
    pub method: Method,
}

impl<T: Real> FidelityResult<T> {
    /// The value clipped to `[0, 1]` for reporting.
    pub fn clipped(&self) -> T {
        self.value.max(T::zero()).min(T::one())
    }
}

/// Oracle result together with bookkeeping about the branch tree.
#[derive(Clone, Debug)]
pub struct OracleReport<T> {
    pub result: FidelityResult<T>,
    /// Total probability of all visited leaves; should be 1.
    pub probability_mass: T,
    /// Leaves reached (complete outcome records).
    pub leaves: usize,
    /// Branches cut because the noisy state gives them no weight.
    pub empty_branches: usize,
    /// Branches the noisy state reaches but the noiseless state never does.
    /// They score zero.
    pub unreachable_branches: usize,
}

/// One row of a cross-validation run.
#[derive(Clone, Debug)]
pub struct CrossEntry<T> {
    pub noise: String,
    pub formula: T,
    pub oracle: T,
    pub probability_mass: T,
}

impl<T: Real> CrossEntry<T> {
    pub fn discrepancy(&self) -> T {
        (self.formula - self.oracle).abs()
    }
}

#[derive(Clone, Debug)]
pub struct CrossValidation<T> {
    pub gate: GateKind,
    pub tolerance: T,
    pub entries: Vec<CrossEntry<T>>,
}

impl<T: Real> CrossValidation<T> {
    pub fn max_discrepancy(&self) -> T {
        self.entries
            .iter()
            .map(CrossEntry::discrepancy)
            .fold(T::zero(), T::max)
    }

    /// Entries whose discrepancy exceeds the tolerance.
    pub fn flagged(&self) -> impl Iterator<Item = &CrossEntry<T>> {
        self.entries
            .iter()
            .filter(|e| e.discrepancy() > self.tolerance)
    }

    pub fn passed(&self) -> bool {
        self.flagged().next().is_none()
    }
}

/// Result of checking that byproduct corrections make every noiseless
/// branch end in the same kept-qubit state.
#[derive(Clone, Debug)]
pub struct ByproductCheck<T> {
    pub branches: usize,
    /// Largest entrywise deviation of a corrected branch from the first one.
    pub max_deviation: T,
}

/// Gate name and the bit pattern of its angle.
type WitnessKey = (String, u64);

/// Computes fidelities against a pattern registry, caching cluster states
/// and witnesses.
pub struct FidelityEngine<T> {
    registry: Registry,
    clusters: Mutex<HashMap<String, Arc<DensityMatrix<T>>>>,
    witnesses: Mutex<HashMap<WitnessKey, Arc<FidelityWitness<T>>>>,
}

impl<T: Real> Default for FidelityEngine<T> {
    fn default() -> Self {
        Self::new(Registry::bundled())
    }
}

impl<T: Real> FidelityEngine<T> {
    pub fn new(registry: Registry) -> Self {
        Self {
            registry,
            clusters: Mutex::new(HashMap::new()),
            witnesses: Mutex::new(HashMap::new()),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn pattern(&self, gate: &GateKind) -> Result<&MeasurementPattern> {
        self.registry.pattern_for(gate)
    }

    /// Noiseless cluster state of the gate's pattern.
    pub fn cluster_state(&self, gate: &GateKind) -> Result<Arc<DensityMatrix<T>>> {
        let pattern = self.pattern(gate)?;
        if let Some(rho) = self
            .clusters
            .lock()
            .expect("cache lock")
            .get(pattern.name())
        {
            return Ok(Arc::clone(rho));
        }
        let rho = Arc::new(build_cluster_state(pattern.graph())?);
        let mut cache = self.clusters.lock().expect("cache lock");
        Ok(Arc::clone(
            cache.entry(pattern.name().to_string()).or_insert(rho),
        ))
    }

    pub fn witness(&self, gate: &GateKind) -> Result<Arc<FidelityWitness<T>>> {
        let key = (gate.name().to_string(), gate.theta().to_bits());
        if let Some(w) = self.witnesses.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(w));
        }
        let w = Arc::new(witness_for(gate, self.pattern(gate)?)?);
        let mut cache = self.witnesses.lock().expect("cache lock");
        Ok(Arc::clone(cache.entry(key).or_insert(w)))
    }

    /// Cluster state of the gate's pattern after the noise is applied.
    pub fn noisy_state(
        &self,
        gate: &GateKind,
        noise: &NoiseAssignment<T>,
    ) -> Result<DensityMatrix<T>> {
        let pattern = self.pattern(gate)?;
        if let Some(q) = noise.max_qubit() {
            if q >= pattern.num_qubits() {
                return Err(Error::arg(format!(
                    "noise on qubit {q}, but the {} pattern has {} qubits",
                    pattern.name(),
                    pattern.num_qubits()
                )));
            }
        }
        let rho = self.cluster_state(gate)?;
        noise.apply(&rho)
    }

    /// Fidelity as the witness expectation on the noisy cluster state.
    pub fn formula(
        &self,
        gate: &GateKind,
        noise: &NoiseAssignment<T>,
    ) -> Result<FidelityResult<T>> {
        let rho = self.noisy_state(gate, noise)?;
        let value = self.witness(gate)?.expectation(&rho)?;
        if value.im.abs() > T::eq_tol() {
            return Err(Error::arg(format!(
                "witness expectation has imaginary part {}",
                value.im
            )));
        }
        Ok(FidelityResult {
            gate: *gate,
            noise: noise.summary(),
            value: value.re,
            method: Method::Formula,
        })
    }

    pub fn oracle(&self, gate: &GateKind, noise: &NoiseAssignment<T>) -> Result<FidelityResult<T>> {
        Ok(self.oracle_report(gate, noise)?.result)
    }

    /// Fidelity by explicit simulation: every measurement outcome record is
    /// enumerated, the byproducts are undone on the kept qubits, and the
    /// branch fidelities against the noiseless branch states are averaged
    /// with the noisy outcome probabilities.
    pub fn oracle_report(
        &self,
        gate: &GateKind,
        noise: &NoiseAssignment<T>,
    ) -> Result<OracleReport<T>> {
        let pattern = self.pattern(gate)?;
        let noisy = self.noisy_state(gate, noise)?;
        let ideal = (*self.cluster_state(gate)?).clone();
        let walk = Walk {
            pattern,
            theta: gate.theta(),
            keep: pattern.kept_qubits(),
        };
        let outcomes = vec![0u8; pattern.num_qubits()];
        let acc = walk.descend(
            0,
            Branch::full(noisy),
            Branch::full(ideal),
            T::one(),
            outcomes,
        )?;
        Ok(OracleReport {
            result: FidelityResult {
                gate: *gate,
                noise: noise.summary(),
                value: acc.value,
                method: Method::Oracle,
            },
            probability_mass: acc.mass,
            leaves: acc.leaves,
            empty_branches: acc.empty,
            unreachable_branches: acc.unreachable,
        })
    }

    /// Runs both methods on every assignment.
    pub fn cross_validate(
        &self,
        gate: &GateKind,
        assignments: &[NoiseAssignment<T>],
        tolerance: T,
    ) -> Result<CrossValidation<T>> {
        let entries = assignments
            .iter()
            .map(|noise| {
                let formula = self.formula(gate, noise)?.value;
                let report = self.oracle_report(gate, noise)?;
                Ok(CrossEntry {
                    noise: noise.summary(),
                    formula,
                    oracle: report.result.value,
                    probability_mass: report.probability_mass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CrossValidation {
            gate: *gate,
            tolerance,
            entries,
        })
    }

    /// Walks the noiseless branch tree and compares every corrected
    /// kept-qubit state with the first one. A correct pattern gives zero
    /// deviation.
    pub fn check_byproducts(&self, gate: &GateKind) -> Result<ByproductCheck<T>> {
        let pattern = self.pattern(gate)?;
        let walk = Walk {
            pattern,
            theta: gate.theta(),
            keep: pattern.kept_qubits(),
        };
        let mut leaves = Vec::new();
        walk.collect_ideal(
            0,
            Branch::full((*self.cluster_state(gate)?).clone()),
            &mut vec![0; pattern.num_qubits()],
            &mut leaves,
        )?;
        let first = leaves
            .first()
            .ok_or_else(|| Error::arg("pattern has no reachable branch"))?;
        let max_deviation = leaves
            .iter()
            .map(|s| s.matrix().max_abs_diff(first.matrix()))
            .fold(T::zero(), T::max);
        Ok(ByproductCheck {
            branches: leaves.len(),
            max_deviation,
        })
    }
}

#[derive(Default)]
struct Acc<T> {
    value: T,
    mass: T,
    leaves: usize,
    empty: usize,
    unreachable: usize,
}

impl<T: Real> Acc<T> {
    fn merge(mut self, other: Self) -> Self {
        self.value += other.value;
        self.mass += other.mass;
        self.leaves += other.leaves;
        self.empty += other.empty;
        self.unreachable += other.unreachable;
        self
    }
}

struct Walk<'a> {
    pattern: &'a MeasurementPattern,
    theta: f64,
    keep: Vec<usize>,
}

/// A branch state together with the original labels of the qubits it still
/// holds. Measured qubits are traced out as soon as they are projected: the
/// projection leaves them in a product state, so nothing is lost.
#[derive(Clone)]
struct Branch<T> {
    state: DensityMatrix<T>,
    alive: Vec<usize>,
}

impl<T: Real> Branch<T> {
    fn full(state: DensityMatrix<T>) -> Self {
        let alive = (0..state.num_qubits()).collect();
        Self { state, alive }
    }

    fn local(&self, q: usize) -> usize {
        self.alive
            .iter()
            .position(|&a| a == q)
            .expect("qubit still present")
    }

    /// Projects qubit `q` and removes it. `None` for an empty branch.
    fn measure(&self, q: usize, proj: &ComplexMatrix<T>) -> Result<(T, Option<Self>)> {
        let local = self.local(q);
        let p = self.state.project_qubit(local, proj)?;
        let Some(projected) = p.state else {
            return Ok((p.probability, None));
        };
        let rest: Vec<usize> = (0..self.alive.len()).filter(|&k| k != local).collect();
        let state = projected.partial_trace(&rest)?;
        let alive = self.alive.iter().copied().filter(|&a| a != q).collect();
        Ok((p.probability, Some(Self { state, alive })))
    }
}

impl Walk<'_> {
    fn correct<T: Real>(&self, branch: Branch<T>, outcomes: &[u8]) -> Result<DensityMatrix<T>> {
        debug_assert_eq!(branch.alive, self.keep);
        let mut rho = branch.state;
        for (q, p) in self.pattern.corrections(outcomes) {
            rho = rho.apply_local_unitary(
                branch.alive.iter().position(|&a| a == q).expect("kept"),
                &p.matrix(),
            )?;
        }
        Ok(rho)
    }

    fn projector<T: Real>(
        &self,
        depth: usize,
        bit: u8,
        outcomes: &[u8],
    ) -> (usize, ComplexMatrix<T>) {
        let q = self.pattern.order()[depth];
        let basis = self.pattern.basis(q).expect("validated pattern");
        let obs = basis.observable::<T>(self.theta, outcomes);
        let sign = if bit == 0 { T::one() } else { -T::one() };
        (q, gates::eigenprojector(&obs, sign))
    }

    fn descend<T: Real>(
        &self,
        depth: usize,
        noisy: Branch<T>,
        ideal: Branch<T>,
        weight: T,
        outcomes: Vec<u8>,
    ) -> Result<Acc<T>> {
        if depth == self.pattern.order().len() {
            let sigma = self.correct(noisy, &outcomes)?;
            let target = self.correct(ideal, &outcomes)?;
            return Ok(Acc {
                value: weight * sigma.overlap(&target)?,
                mass: weight,
                leaves: 1,
                ..Acc::default()
            });
        }
        let branch = |bit: u8| -> Result<Acc<T>> {
            let mut outcomes = outcomes.clone();
            let (q, proj) = self.projector::<T>(depth, bit, &outcomes);
            outcomes[q] = bit;
            let (prob, Some(n_next)) = noisy.measure(q, &proj)? else {
                return Ok(Acc {
                    empty: 1,
                    ..Acc::default()
                });
            };
            let w = weight * prob;
            match ideal.measure(q, &proj)?.1 {
                Some(i_next) => self.descend(depth + 1, n_next, i_next, w, outcomes),
                None => Ok(Acc {
                    mass: w,
                    unreachable: 1,
                    ..Acc::default()
                }),
            }
        };
        let (a, b) = if depth == 0 {
            rayon::join(|| branch(0), || branch(1))
        } else {
            (branch(0), branch(1))
        };
        Ok(a?.merge(b?))
    }

    fn collect_ideal<T: Real>(
        &self,
        depth: usize,
        ideal: Branch<T>,
        outcomes: &mut Vec<u8>,
        out: &mut Vec<DensityMatrix<T>>,
    ) -> Result<()> {
        if depth == self.pattern.order().len() {
            out.push(self.correct(ideal, outcomes)?);
            return Ok(());
        }
        for bit in 0..2u8 {
            let (q, proj) = self.projector::<T>(depth, bit, outcomes);
            outcomes[q] = bit;
            if let (_, Some(next)) = ideal.measure(q, &proj)? {
                self.collect_ideal(depth + 1, next, outcomes, out)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{ChannelKind, KrausChannel};

    fn engine() -> FidelityEngine<f64> {
        FidelityEngine::default()
    }

    #[test]
    fn noiseless_fidelity_is_one() {
        let e = engine();
        for g in GateKind::all(0.7) {
            let none = NoiseAssignment::new();
            assert!(
                (e.formula(&g, &none).unwrap().value - 1.0).abs() < 1e-10,
                "{g}"
            );
            let r = e.oracle_report(&g, &none).unwrap();
            assert!((r.result.value - 1.0).abs() < 1e-10, "{g}");
            assert!((r.probability_mass - 1.0).abs() < 1e-10);
            assert_eq!(r.unreachable_branches, 0);
        }
    }

    #[test]
    fn byproducts_are_consistent() {
        let e = engine();
        for g in GateKind::all(1.1) {
            let c = e.check_byproducts(&g).unwrap();
            assert!(c.max_deviation < 1e-10, "{g}: {}", c.max_deviation);
            assert_eq!(c.branches, 1 << e.pattern(&g).unwrap().order().len());
        }
    }

    #[test]
    fn formula_matches_oracle_single_qubit() {
        let e = engine();
        for g in GateKind::all(0.4) {
            let n = e.pattern(&g).unwrap().num_qubits();
            for kind in ChannelKind::ALL {
                for q in 0..n {
                    let noise = NoiseAssignment::new().with(q, kind.at(0.3).unwrap());
                    let f = e.formula(&g, &noise).unwrap().value;
                    let o = e.oracle(&g, &noise).unwrap().value;
                    assert!((f - o).abs() < 1e-9, "{g} {kind}@{q}: {f} vs {o}");
                }
            }
        }
    }

    #[test]
    fn known_values_at_half() {
        let e = engine();
        let f = |g: GateKind, kind: ChannelKind, q: usize| {
            let noise = NoiseAssignment::new().with(q, kind.at(0.5).unwrap());
            e.formula(&g, &noise).unwrap().value
        };
        assert!((f(GateKind::Identity, ChannelKind::BitFlip, 3) - 1.0).abs() < 1e-12);
        assert!((f(GateKind::Identity, ChannelKind::BitFlip, 1) - 0.5).abs() < 1e-12);
        assert!((f(GateKind::Identity, ChannelKind::Dephasing, 0) - 1.0).abs() < 1e-12);
        let pd = (1.0 + (0.5f64).sqrt()) / 2.0;
        assert!((f(GateKind::Hadamard, ChannelKind::PhaseDamping, 4) - pd).abs() < 1e-12);
    }

    #[test]
    fn branch_mass_is_one_under_noise() {
        let e = engine();
        let noise = NoiseAssignment::new()
            .with(0, KrausChannel::bit_flip(1.0).unwrap())
            .with(3, KrausChannel::amplitude_damping(0.6).unwrap())
            .with(5, KrausChannel::dephasing(0.2).unwrap());
        let r = e.oracle_report(&GateKind::ControlledZ, &noise).unwrap();
        assert!((r.probability_mass - 1.0).abs() < 1e-10);
        assert_eq!(r.leaves + r.unreachable_branches + r.empty_branches, 16);
    }

    #[test]
    fn out_of_range_noise_is_rejected() {
        let e = engine();
        let noise = NoiseAssignment::new().with(9, KrausChannel::bit_flip(0.1).unwrap());
        assert!(e.formula(&GateKind::Identity, &noise).is_err());
        assert!(e.oracle(&GateKind::Identity, &noise).is_err());
    }

    #[test]
    fn single_precision_agrees() {
        let e = FidelityEngine::<f32>::default();
        let noise = NoiseAssignment::new().with(2, KrausChannel::dephasing(0.2f32).unwrap());
        let f = e.formula(&GateKind::Hadamard, &noise).unwrap().value;
        let o = e.oracle(&GateKind::Hadamard, &noise).unwrap().value;
        assert!((f - o).abs() < 1e-4);
    }
}
