//! Pauli strings with exact phase tracking, and real-linear combinations of
//! them used to express fidelity witnesses.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::qstate::{check_register, ComplexMatrix, DensityMatrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Product of two single-qubit Paulis as `(i^k, letter)`.
    fn product(self, rhs: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, rhs) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }

    pub fn anticommutes(self, other: Pauli) -> bool {
        self != Pauli::I && other != Pauli::I && self != other
    }

    pub fn matrix<T: Real>(self) -> ComplexMatrix<T> {
        use crate::qstate::gates;
        match self {
            Pauli::I => gates::identity(),
            Pauli::X => gates::pauli_x(),
            Pauli::Y => gates::pauli_y(),
            Pauli::Z => gates::pauli_z(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(Pauli::I),
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(Error::arg(format!("unknown Pauli letter {other:?}"))),
        }
    }
}

/// Global phase `i^k` of a Pauli string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Phase {
    #[default]
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    fn from_power(k: u8) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    fn power(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn to_complex<T: Real>(self) -> Complex<T> {
        let (o, z) = (T::one(), T::zero());
        match self {
            Phase::PlusOne => Complex::new(o, z),
            Phase::PlusI => Complex::new(z, o),
            Phase::MinusOne => Complex::new(-o, z),
            Phase::MinusI => Complex::new(z, -o),
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_power(self.power() + rhs.power())
    }
}

/// Tensor product of single-qubit Paulis times a phase in `{±1, ±i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    phase: Phase,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        Self {
            letters: vec![Pauli::I; num_qubits],
            phase: Phase::PlusOne,
        }
    }

    pub fn new(letters: Vec<Pauli>, phase: Phase) -> Self {
        Self { letters, phase }
    }

    /// `p` on `qubit`, identity elsewhere.
    pub fn single(num_qubits: usize, qubit: usize, p: Pauli) -> Result<Self> {
        if qubit >= num_qubits {
            return Err(Error::arg(format!(
                "qubit {qubit} out of range for {num_qubits} qubits"
            )));
        }
        let mut s = Self::identity(num_qubits);
        s.letters[qubit] = p;
        Ok(s)
    }

    /// Builds a string from `(qubit, letter)` pairs.
    pub fn from_sparse(num_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(num_qubits);
        for &(q, p) in ops {
            s = &s * &Self::single(num_qubits, q, p)?;
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        self.letters[qubit]
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.support().len()
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        assert_eq!(self.num_qubits(), other.num_qubits(), "register mismatch");
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(a, b)| a.anticommutes(**b))
            .count();
        anti % 2 == 0
    }

    /// Hermitian iff the phase is real.
    pub fn is_hermitian(&self) -> bool {
        matches!(self.phase, Phase::PlusOne | Phase::MinusOne)
    }

    /// Dense matrix realization, qubit 0 most significant.
    pub fn matrix<T: Real>(&self) -> Result<ComplexMatrix<T>> {
        check_register(self.num_qubits(), "Pauli matrix")?;
        let n = self.num_qubits();
        let dim = 1usize << n;
        let (xmask, zmask, ny) = self.masks();
        let base = self.phase.to_complex::<T>() * Phase::from_power(ny).to_complex::<T>();
        let mut m = ComplexMatrix::zeros(dim);
        // P|c⟩ = base * (-1)^{popcount(c & zmask)} |c ^ xmask⟩, where Y
        // contributes to both masks and the extra i from Y = iXZ sits in base.
        for c in 0..dim {
            let sign = if (c & zmask).count_ones() % 2 == 0 {
                base
            } else {
                -base
            };
            m[(c ^ xmask, c)] = sign;
        }
        Ok(m)
    }

    /// `M P` in `O(4^n)`, using that `P` is a signed permutation.
    pub fn right_mul<T: Real>(&self, m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if m.num_qubits() != Some(self.num_qubits()) {
            return Err(Error::arg(
                "matrix and Pauli string act on different registers",
            ));
        }
        let (xmask, zmask, ny) = self.masks();
        let base = self.phase.to_complex::<T>() * Phase::from_power(ny).to_complex::<T>();
        let dim = m.dim();
        let mut out = ComplexMatrix::zeros(dim);
        for c in 0..dim {
            let sign = if (c & zmask).count_ones() % 2 == 0 {
                base
            } else {
                -base
            };
            for r in 0..dim {
                out[(r, c)] = m[(r, c ^ xmask)] * sign;
            }
        }
        Ok(out)
    }

    /// Bit masks of X-type and Z-type components and the number of Y letters.
    fn masks(&self) -> (usize, usize, u8) {
        let n = self.num_qubits();
        let mut xmask = 0usize;
        let mut zmask = 0usize;
        let mut ny = 0u8;
        for (q, &p) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => xmask |= bit,
                Pauli::Z => zmask |= bit,
                Pauli::Y => {
                    xmask |= bit;
                    zmask |= bit;
                    ny = (ny + 1) % 4;
                }
            }
        }
        (xmask, zmask, ny)
    }

    /// `Tr(ρ P)` in `O(2^n)` without building the matrix.
    pub fn expectation<T: Real>(&self, rho: &DensityMatrix<T>) -> Result<Complex<T>> {
        if rho.num_qubits() != self.num_qubits() {
            return Err(Error::arg(
                "Pauli string and state act on different registers",
            ));
        }
        let (xmask, zmask, ny) = self.masks();
        let base = self.phase.to_complex::<T>() * Phase::from_power(ny).to_complex::<T>();
        let m = rho.matrix();
        let dim = rho.dim();
        let data = m.data();
        let mut acc = Complex::new(T::zero(), T::zero());
        // Tr(ρP) = Σ_c ρ[c, c^x] * P[c^x, c].
        for c in 0..dim {
            let v = data[c * dim + (c ^ xmask)];
            if (c & zmask).count_ones() % 2 == 0 {
                acc += v;
            } else {
                acc -= v;
            }
        }
        Ok(acc * base)
    }

    /// Compact form such as `-i Z0 Y1 Z2`; identity prints as `I`.
    pub fn sparse_label(&self) -> String {
        let sign = match self.phase {
            Phase::PlusOne => "",
            Phase::MinusOne => "-",
            Phase::PlusI => "i ",
            Phase::MinusI => "-i ",
        };
        let body: Vec<String> = self
            .letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, p)| format!("{}{q}", p.symbol()))
            .collect();
        if body.is_empty() {
            format!("{sign}I")
        } else {
            format!("{sign}{}", body.join(" "))
        }
    }
}

impl Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        assert_eq!(self.num_qubits(), rhs.num_qubits(), "register mismatch");
        let mut k = self.phase.power() + rhs.phase.power();
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (pk, p) = a.product(b);
                k += pk;
                p
            })
            .collect();
        PauliString {
            letters,
            phase: Phase::from_power(k % 4),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.phase {
            Phase::PlusOne => "+",
            Phase::MinusOne => "-",
            Phase::PlusI => "+i",
            Phase::MinusI => "-i",
        };
        f.write_str(sign)?;
        for p in &self.letters {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Dense form: optional sign (`+`, `-`, `+i`, `-i`, `i`) followed by one
    /// letter per qubit, e.g. `-iXZY`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i").or_else(|| s.strip_prefix('i')) {
            (Phase::PlusI, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (Phase::MinusI, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MinusOne, r)
        } else {
            (Phase::PlusOne, s.strip_prefix('+').unwrap_or(s))
        };
        if rest.is_empty() {
            return Err(Error::arg("empty Pauli string"));
        }
        let letters = rest
            .chars()
            .map(|ch| ch.to_string().parse())
            .collect::<Result<Vec<Pauli>>>()?;
        Ok(Self { letters, phase })
    }
}

/// Complex-weighted sum of phase-free Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum<T> {
    num_qubits: usize,
    terms: BTreeMap<Vec<Pauli>, Complex<T>>,
}

impl<T: Real> PauliSum<T> {
    pub fn zero(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self::from_string(&PauliString::identity(num_qubits))
    }

    pub fn from_string(p: &PauliString) -> Self {
        Self::zero(p.num_qubits()).plus_term(Complex::new(T::one(), T::zero()), p)
    }

    /// `(I + s) / 2`.
    pub fn half_plus(s: &PauliString) -> Self {
        let half = T::lit(0.5);
        Self::identity(s.num_qubits())
            .add(&Self::from_string(s))
            .scale_real(half)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn plus_term(mut self, coef: Complex<T>, p: &PauliString) -> Self {
        assert_eq!(p.num_qubits(), self.num_qubits, "register mismatch");
        let c = coef * p.phase().to_complex();
        let entry = self
            .terms
            .entry(p.letters().to_vec())
            .or_insert_with(|| Complex::new(T::zero(), T::zero()));
        *entry += c;
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (letters, &c) in &other.terms {
            out = out.plus_term(c, &PauliString::new(letters.clone(), Phase::PlusOne));
        }
        out.prune()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_real(-T::one()))
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= k;
        }
        out.prune()
    }

    pub fn scale_real(&self, k: T) -> Self {
        self.scale(Complex::new(k, T::zero()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.num_qubits, other.num_qubits, "register mismatch");
        let mut out = Self::zero(self.num_qubits);
        for (la, &ca) in &self.terms {
            let a = PauliString::new(la.clone(), Phase::PlusOne);
            for (lb, &cb) in &other.terms {
                let b = PauliString::new(lb.clone(), Phase::PlusOne);
                out = out.plus_term(ca * cb, &(&a * &b));
            }
        }
        out.prune()
    }

    fn prune(mut self) -> Self {
        let tol = T::epsilon() * T::lit(64.0);
        self.terms.retain(|_, c| c.norm() > tol);
        self
    }

    /// Terms as `(coefficient, phase-free string)`.
    pub fn terms(&self) -> impl Iterator<Item = (Complex<T>, PauliString)> + '_ {
        self.terms
            .iter()
            .map(|(l, &c)| (c, PauliString::new(l.clone(), Phase::PlusOne)))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Qubits touched by at least one term.
    pub fn support(&self) -> Vec<usize> {
        (0..self.num_qubits)
            .filter(|&q| self.terms.keys().any(|l| l[q] != Pauli::I))
            .collect()
    }

    /// Hermitian iff every coefficient is real.
    pub fn is_hermitian(&self, tol: T) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn matrix(&self) -> Result<ComplexMatrix<T>> {
        check_register(self.num_qubits, "Pauli sum matrix")?;
        let mut m = ComplexMatrix::zeros(1 << self.num_qubits);
        for (c, p) in self.terms() {
            m = &m + &p.matrix::<T>()?.scale(c);
        }
        Ok(m)
    }

    pub fn expectation(&self, rho: &DensityMatrix<T>) -> Result<Complex<T>> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (c, p) in self.terms() {
            acc += c * p.expectation(rho)?;
        }
        Ok(acc)
    }
}
