//! Single-qubit Kraus channels and per-qubit noise assignments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::qstate::{gates, ComplexMatrix, DensityMatrix};
use crate::scalar::Real;

/// The four built-in noise families, each parametrized by an error rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelKind {
    BitFlip,
    Dephasing,
    PhaseDamping,
    AmplitudeDamping,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 4] = [
        ChannelKind::BitFlip,
        ChannelKind::Dephasing,
        ChannelKind::PhaseDamping,
        ChannelKind::AmplitudeDamping,
    ];

    /// Name used in channel specs and reports.
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::BitFlip => "bitflip",
            ChannelKind::Dephasing => "dephasing",
            ChannelKind::PhaseDamping => "phasedamp",
            ChannelKind::AmplitudeDamping => "ampdamp",
        }
    }

    /// The channel at error rate `p`.
    pub fn at<T: Real>(self, p: T) -> Result<KrausChannel<T>> {
        match self {
            ChannelKind::BitFlip => KrausChannel::bit_flip(p),
            ChannelKind::Dephasing => KrausChannel::dephasing(p),
            ChannelKind::PhaseDamping => KrausChannel::phase_damping(p),
            ChannelKind::AmplitudeDamping => KrausChannel::amplitude_damping(p),
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bitflip" | "x" => Ok(ChannelKind::BitFlip),
            "dephasing" | "z" => Ok(ChannelKind::Dephasing),
            "phasedamp" => Ok(ChannelKind::PhaseDamping),
            "ampdamp" => Ok(ChannelKind::AmplitudeDamping),
            other => Err(Error::arg(format!(
                "unknown channel {other:?} (expected bitflip, dephasing, phasedamp or ampdamp)"
            ))),
        }
    }
}

/// A channel spec as written on the command line: `name` or `name(p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub rate: Option<f64>,
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some(open) = s.find('(') else {
            return Ok(Self {
                kind: s.parse()?,
                rate: None,
            });
        };
        let inner = s[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| Error::arg(format!("unbalanced parentheses in channel spec {s:?}")))?;
        let rate: f64 = inner
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("bad error rate {inner:?} in channel spec")))?;
        check_rate(rate)?;
        Ok(Self {
            kind: s[..open].parse()?,
            rate: Some(rate),
        })
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rate {
            Some(p) => write!(f, "{}({p})", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

fn check_rate<T: Real>(p: T) -> Result<()> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::arg(format!("error rate {p} outside [0, 1]")));
    }
    Ok(())
}

/// Completely positive trace-preserving map on one qubit, stored as its
/// Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel<T> {
    name: String,
    error_rate: T,
    operators: Vec<ComplexMatrix<T>>,
}

impl<T: Real> KrausChannel<T> {
    /// `E₁ = √(1−p) I`, `E₂ = √p X`.
    pub fn bit_flip(p: T) -> Result<Self> {
        check_rate(p)?;
        Ok(Self {
            name: ChannelKind::BitFlip.name().into(),
            error_rate: p,
            operators: vec![
                gates::identity::<T>().scale_real((T::one() - p).sqrt()),
                gates::pauli_x::<T>().scale_real(p.sqrt()),
            ],
        })
    }

    /// `E₁ = √(1−p) I`, `E₂ = √p Z`.
    pub fn dephasing(p: T) -> Result<Self> {
        check_rate(p)?;
        Ok(Self {
            name: ChannelKind::Dephasing.name().into(),
            error_rate: p,
            operators: vec![
                gates::identity::<T>().scale_real((T::one() - p).sqrt()),
                gates::pauli_z::<T>().scale_real(p.sqrt()),
            ],
        })
    }

    /// `E₁ = diag(1, √(1−p))`, `E₂ = diag(0, √p)`.
    pub fn phase_damping(p: T) -> Result<Self> {
        check_rate(p)?;
        Ok(Self {
            name: ChannelKind::PhaseDamping.name().into(),
            error_rate: p,
            operators: vec![
                diag(T::one(), (T::one() - p).sqrt()),
                diag(T::zero(), p.sqrt()),
            ],
        })
    }

    /// `E₁ = diag(1, √(1−p))`, `E₂ = √p |0⟩⟨1|`.
    pub fn amplitude_damping(p: T) -> Result<Self> {
        check_rate(p)?;
        let mut decay = ComplexMatrix::zeros(2);
        decay[(0, 1)] = Complex::new(p.sqrt(), T::zero());
        Ok(Self {
            name: ChannelKind::AmplitudeDamping.name().into(),
            error_rate: p,
            operators: vec![diag(T::one(), (T::one() - p).sqrt()), decay],
        })
    }

    /// User-supplied 2×2 Kraus operators, accepted only if they satisfy the
    /// completeness relation.
    pub fn custom(
        name: impl Into<String>,
        error_rate: T,
        operators: Vec<ComplexMatrix<T>>,
    ) -> Result<Self> {
        check_rate(error_rate)?;
        if operators.is_empty() {
            return Err(Error::arg("a channel needs at least one Kraus operator"));
        }
        if operators.iter().any(|e| e.dim() != 2) {
            return Err(Error::arg("Kraus operators must be 2x2"));
        }
        let ch = Self {
            name: name.into(),
            error_rate,
            operators,
        };
        let defect = ch.completeness_defect();
        if defect > T::state_tol() {
            return Err(Error::arg(format!(
                "Kraus operators of {} are not trace preserving (defect {defect})",
                ch.name
            )));
        }
        Ok(ch)
    }

    /// The noise-free channel.
    pub fn identity() -> Self {
        Self {
            name: "identity".into(),
            error_rate: T::zero(),
            operators: vec![gates::identity()],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn error_rate(&self) -> T {
        self.error_rate
    }

    pub fn operators(&self) -> &[ComplexMatrix<T>] {
        &self.operators
    }

    /// `max |Σ E†E − I|` entrywise.
    pub fn completeness_defect(&self) -> T {
        let mut sum = ComplexMatrix::zeros(2);
        for e in &self.operators {
            sum = &sum + &(&e.adjoint() * e);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(2))
    }

    /// Applies the channel to a single-qubit state.
    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        self.apply_to(rho, 0)
    }

    /// Applies the channel to `qubit` of a register.
    pub fn apply_to(&self, rho: &DensityMatrix<T>, qubit: usize) -> Result<DensityMatrix<T>> {
        if qubit >= rho.num_qubits() {
            return Err(Error::arg(format!(
                "qubit {qubit} out of range for {} qubits",
                rho.num_qubits()
            )));
        }
        Ok(rho.apply_kraus_local(qubit, &self.operators))
    }
}

fn diag<T: Real>(a: T, b: T) -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(2);
    m[(0, 0)] = Complex::new(a, T::zero());
    m[(1, 1)] = Complex::new(b, T::zero());
    m
}

/// Independent noise on individual qubits; unlisted qubits are noise-free.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NoiseAssignment<T> {
    channels: BTreeMap<usize, KrausChannel<T>>,
}

impl<T: Real> NoiseAssignment<T> {
    pub fn new() -> Self {
        Self {
            channels: BTreeMap::new(),
        }
    }

    /// The same channel on every listed qubit.
    pub fn uniform(qubits: impl IntoIterator<Item = usize>, channel: &KrausChannel<T>) -> Self {
        Self {
            channels: qubits.into_iter().map(|q| (q, channel.clone())).collect(),
        }
    }

    /// Replaces any channel already on `qubit`.
    pub fn with(mut self, qubit: usize, channel: KrausChannel<T>) -> Self {
        self.channels.insert(qubit, channel);
        self
    }

    pub fn insert(&mut self, qubit: usize, channel: KrausChannel<T>) {
        self.channels.insert(qubit, channel);
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.channels.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &KrausChannel<T>)> {
        self.channels.iter().map(|(&q, c)| (q, c))
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.channels.keys().next_back().copied()
    }

    /// Applies every assigned channel. Channels on distinct qubits commute,
    /// so the order is immaterial.
    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        if let Some(q) = self.max_qubit() {
            if q >= rho.num_qubits() {
                return Err(Error::arg(format!(
                    "noise assigned to qubit {q} but the state has {} qubits",
                    rho.num_qubits()
                )));
            }
        }
        let mut out = rho.clone();
        for (&q, ch) in &self.channels {
            out = ch.apply_to(&out, q)?;
        }
        Ok(out)
    }

    /// Short description such as `dephasing(0.1)@1,3`.
    pub fn summary(&self) -> String {
        if self.channels.is_empty() {
            return "noiseless".into();
        }
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (&q, ch) in &self.channels {
            groups
                .entry(format!("{}({})", ch.name(), ch.error_rate()))
                .or_default()
                .push(q);
        }
        groups
            .into_iter()
            .map(|(k, qs)| {
                let qs: Vec<String> = qs.iter().map(|q| q.to_string()).collect();
                format!("{k}@{}", qs.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}
