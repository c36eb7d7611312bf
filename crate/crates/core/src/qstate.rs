//! Dense complex matrices and n-qubit density matrices.
//!
//! Qubit 0 is the most significant tensor factor everywhere: basis index
//! `b` has qubit `q` in state `(b >> (n - 1 - q)) & 1`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest register the dense engine will build.
pub const MAX_QUBITS: usize = 12;

const MAX_DIM: usize = 1 << MAX_QUBITS;

/// Square, row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Builds a matrix from row-major entries. Rejects non-square shapes and
    /// non-finite entries.
    pub fn from_vec(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::arg(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::arg("matrix entries must be finite"));
        }
        Ok(Self { dim, data })
    }

    /// Convenience constructor for small literal matrices given as `(re, im)`
    /// pairs in `f64`.
    pub fn from_f64(dim: usize, entries: &[(f64, f64)]) -> Result<Self> {
        let data = entries
            .iter()
            .map(|&(re, im)| Complex::new(T::lit(re), T::lit(im)))
            .collect();
        Self::from_vec(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits when the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        self.dim
            .is_power_of_two()
            .then(|| self.dim.trailing_zeros() as usize)
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                out.data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: T) -> Self {
        self.scale(Complex::new(k, T::zero()))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        let d = self.dim;
        (0..d).all(|r| {
            (r..d).all(|c| (self.data[r * d + c] - self.data[c * d + r].conj()).norm() <= tol)
        })
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        let prod = &self.adjoint() * self;
        prod.max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    /// Hermitian and idempotent within `tol`.
    pub fn is_projector(&self, tol: T) -> bool {
        self.is_hermitian(tol) && (self * self).max_abs_diff(self) <= tol
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        kron(self, other)
    }
}

impl<T> std::ops::Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.dim + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.dim + c]
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn mul(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let d = self.dim;
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = ComplexMatrix::zeros(d);
        for r in 0..d {
            let out_row = &mut out.data[r * d..(r + 1) * d];
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == zero {
                    continue;
                }
                let rhs_row = &rhs.data[k * d..(k + 1) * d];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn add(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn sub(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

/// Kronecker product: `out[(i*db + k, j*db + l)] = a[i,j] * b[k,l]`.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let dim = a.dim.checked_mul(b.dim).filter(|&d| d <= MAX_DIM);
    let Some(dim) = dim else {
        let bits = |d: usize| (usize::BITS - d.saturating_sub(1).leading_zeros()) as usize;
        return Err(Error::Capacity {
            what: "kron",
            requested: bits(a.dim) + bits(b.dim),
            limit: MAX_QUBITS,
        });
    };
    let mut out = ComplexMatrix::zeros(dim);
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a[(i, j)];
            for k in 0..b.dim {
                for l in 0..b.dim {
                    out[(i * b.dim + k, j * b.dim + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Lifts `op`, acting on `targets` in the listed order, to an operator on
/// `num_qubits` qubits that is the identity elsewhere.
pub fn embed<T: Real>(
    op: &ComplexMatrix<T>,
    targets: &[usize],
    num_qubits: usize,
) -> Result<ComplexMatrix<T>> {
    check_register(num_qubits, "embed")?;
    if op.dim != 1 << targets.len() {
        return Err(Error::arg(format!(
            "operator of dimension {} cannot act on {} target qubits",
            op.dim,
            targets.len()
        )));
    }
    check_targets(targets, num_qubits)?;

    let n = num_qubits;
    let dim = 1usize << n;
    let masks: Vec<usize> = targets.iter().map(|&q| 1 << (n - 1 - q)).collect();
    let all_targets: usize = masks.iter().sum();
    // Local index of a full basis index restricted to the targets.
    let local = |b: usize| {
        masks
            .iter()
            .fold(0usize, |acc, &m| (acc << 1) | usize::from(b & m != 0))
    };
    let spread = |l: usize| {
        masks
            .iter()
            .enumerate()
            .filter(|(k, _)| (l >> (masks.len() - 1 - k)) & 1 == 1)
            .map(|(_, &m)| m)
            .sum::<usize>()
    };

    let mut out = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        let rest = r & !all_targets;
        let lr = local(r);
        for lc in 0..op.dim {
            let c = rest | spread(lc);
            out[(r, c)] = op[(lr, lc)];
        }
    }
    Ok(out)
}

pub(crate) fn check_register(num_qubits: usize, what: &'static str) -> Result<()> {
    if num_qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            what,
            requested: num_qubits,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

pub(crate) fn check_targets(targets: &[usize], num_qubits: usize) -> Result<()> {
    for (k, &q) in targets.iter().enumerate() {
        if q >= num_qubits {
            return Err(Error::arg(format!(
                "qubit {q} out of range for {num_qubits} qubits"
            )));
        }
        if targets[..k].contains(&q) {
            return Err(Error::arg(format!("duplicate target qubit {q}")));
        }
    }
    Ok(())
}

/// Standard single- and two-qubit matrices.
pub mod gates {
    use super::ComplexMatrix;
    use crate::scalar::Real;

    fn lit<T: Real>(dim: usize, e: &[(f64, f64)]) -> ComplexMatrix<T> {
        ComplexMatrix::from_f64(dim, e).expect("literal gate")
    }

    pub fn identity<T: Real>() -> ComplexMatrix<T> {
        ComplexMatrix::identity(2)
    }

    pub fn pauli_x<T: Real>() -> ComplexMatrix<T> {
        lit(2, &[(0., 0.), (1., 0.), (1., 0.), (0., 0.)])
    }

    pub fn pauli_y<T: Real>() -> ComplexMatrix<T> {
        lit(2, &[(0., 0.), (0., -1.), (0., 1.), (0., 0.)])
    }

    pub fn pauli_z<T: Real>() -> ComplexMatrix<T> {
        lit(2, &[(1., 0.), (0., 0.), (0., 0.), (-1., 0.)])
    }

    pub fn hadamard<T: Real>() -> ComplexMatrix<T> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        lit(2, &[(h, 0.), (h, 0.), (h, 0.), (-h, 0.)])
    }

    pub fn controlled_z<T: Real>() -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::identity(4);
        m[(3, 3)] = -m[(3, 3)];
        m
    }

    /// `(I + sign * obs) / 2`, the projector onto the `sign` eigenspace of a
    /// single-qubit involutory observable.
    pub fn eigenprojector<T: Real>(obs: &ComplexMatrix<T>, sign: T) -> ComplexMatrix<T> {
        let half = T::lit(0.5);
        (&identity::<T>() + &obs.scale_real(sign)).scale_real(half)
    }
}

/// Density matrix of an n-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    num_qubits: usize,
    matrix: ComplexMatrix<T>,
}

/// Outcome of projecting a state onto one measurement branch.
#[derive(Clone, Debug)]
pub struct Projection<T> {
    /// `Tr(P ρ P)`.
    pub probability: T,
    /// Normalized post-measurement state, `None` when the branch is empty.
    pub state: Option<DensityMatrix<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates hermiticity and unit trace.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        let num_qubits = matrix
            .num_qubits()
            .ok_or_else(|| Error::arg(format!("dimension {} is not a power of two", matrix.dim)))?;
        check_register(num_qubits, "density matrix")?;
        if num_qubits == 0 {
            return Err(Error::arg("a density matrix needs at least one qubit"));
        }
        if !matrix.is_hermitian(T::state_tol()) {
            return Err(Error::arg("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr - Complex::new(T::one(), T::zero())).norm() > T::state_tol() {
            return Err(Error::arg(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        Ok(Self { num_qubits, matrix })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn from_pure(amplitudes: &[Complex<T>]) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::arg(format!(
                "state vector length {dim} is not a qubit register"
            )));
        }
        check_register(dim.trailing_zeros() as usize, "state vector")?;
        let norm2: T = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm2 <= T::zero() || !norm2.is_finite() {
            return Err(Error::arg("state vector has zero or non-finite norm"));
        }
        let mut m = ComplexMatrix::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = amplitudes[r] * amplitudes[c].conj() / norm2;
            }
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            matrix: m,
        })
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        check_register(num_qubits, "basis state")?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::arg(format!("basis index {index} out of range")));
        }
        let mut m = ComplexMatrix::zeros(dim);
        m[(index, index)] = Complex::new(T::one(), T::zero());
        Self::new(m)
    }

    /// The maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits, "maximally mixed state")?;
        let dim = 1usize << num_qubits;
        let k = T::one() / T::from_usize(dim).expect("dimension fits");
        Self::new(ComplexMatrix::identity(dim).scale_real(k))
    }

    /// Wraps a matrix that is already known to be a valid state.
    pub(crate) fn from_trusted(matrix: ComplexMatrix<T>) -> Self {
        let num_qubits = matrix.num_qubits().expect("qubit register");
        debug_assert!(matrix.is_hermitian(T::eq_tol()));
        Self { num_qubits, matrix }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> T {
        // ρ is Hermitian, so Tr(ρ²) = Σ |ρ_ij|².
        self.matrix.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `U ρ U†`, rejecting non-unitary `u`.
    pub fn apply_unitary(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        if u.dim != self.dim() {
            return Err(Error::arg(format!(
                "unitary of dimension {} applied to state of dimension {}",
                u.dim,
                self.dim()
            )));
        }
        if !u.is_unitary(T::eq_tol()) {
            return Err(Error::arg("operator is not unitary"));
        }
        let out = &(u * &self.matrix) * &u.adjoint();
        Ok(Self::from_trusted(out))
    }

    /// `Tr(ρ M)`.
    pub fn expectation(&self, m: &ComplexMatrix<T>) -> Result<Complex<T>> {
        if m.dim != self.dim() {
            return Err(Error::arg(format!(
                "observable of dimension {} against state of dimension {}",
                m.dim,
                self.dim()
            )));
        }
        let d = self.dim();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix.data[i * d + j] * m.data[j * d + i];
            }
        }
        Ok(acc)
    }

    /// Projects onto `projector` and renormalizes. Branches with probability
    /// at or below [`Real::branch_eps`] come back with `state: None`.
    pub fn project_and_normalize(&self, projector: &ComplexMatrix<T>) -> Result<Projection<T>> {
        if projector.dim != self.dim() {
            return Err(Error::arg("projector dimension mismatch"));
        }
        if !projector.is_projector(T::eq_tol()) {
            return Err(Error::arg(
                "operator is not a Hermitian idempotent projector",
            ));
        }
        let unnorm = &(projector * &self.matrix) * projector;
        Ok(Self::normalize_branch(unnorm))
    }

    /// Single-qubit version of [`Self::project_and_normalize`] that works in
    /// `O(4^n)` instead of building the full projector.
    pub fn project_qubit(
        &self,
        qubit: usize,
        projector: &ComplexMatrix<T>,
    ) -> Result<Projection<T>> {
        if projector.dim != 2 || !projector.is_projector(T::eq_tol()) {
            return Err(Error::arg("single-qubit projector expected"));
        }
        check_targets(&[qubit], self.num_qubits)?;
        Ok(Self::normalize_branch(
            self.conjugate_local(qubit, projector),
        ))
    }

    fn normalize_branch(unnorm: ComplexMatrix<T>) -> Projection<T> {
        let probability = unnorm.trace().re;
        if probability <= T::branch_eps() {
            return Projection {
                probability: probability.max(T::zero()),
                state: None,
            };
        }
        let state = Self::from_trusted(unnorm.scale_real(T::one() / probability));
        Projection {
            probability,
            state: Some(state),
        }
    }

    /// `A ρ A†` for a 2×2 operator `A` on `qubit`, without normalization.
    pub(crate) fn conjugate_local(&self, qubit: usize, a: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let n = self.num_qubits;
        let d = self.dim();
        let mask = 1usize << (n - 1 - qubit);
        let (a00, a01, a10, a11) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        let mut m = self.matrix.clone();
        // Left multiplication: mix row pairs.
        for r0 in (0..d).filter(|r| r & mask == 0) {
            let r1 = r0 | mask;
            for c in 0..d {
                let x0 = m.data[r0 * d + c];
                let x1 = m.data[r1 * d + c];
                m.data[r0 * d + c] = a00 * x0 + a01 * x1;
                m.data[r1 * d + c] = a10 * x0 + a11 * x1;
            }
        }
        // Right multiplication by A†: mix column pairs.
        let (b00, b01, b10, b11) = (a00.conj(), a10.conj(), a01.conj(), a11.conj());
        for r in 0..d {
            let row = &mut m.data[r * d..(r + 1) * d];
            for c0 in (0..d).filter(|c| c & mask == 0) {
                let c1 = c0 | mask;
                let x0 = row[c0];
                let x1 = row[c1];
                row[c0] = x0 * b00 + x1 * b10;
                row[c1] = x0 * b01 + x1 * b11;
            }
        }
        m
    }

    /// `U ρ U†` for a single-qubit unitary on `qubit`.
    pub fn apply_local_unitary(&self, qubit: usize, u: &ComplexMatrix<T>) -> Result<Self> {
        if u.dim != 2 || !u.is_unitary(T::eq_tol()) {
            return Err(Error::arg("single-qubit unitary expected"));
        }
        check_targets(&[qubit], self.num_qubits)?;
        Ok(Self::from_trusted(self.conjugate_local(qubit, u)))
    }

    /// `Σ_k E_k ρ E_k†` on one qubit. Completeness of the operator set is the
    /// caller's responsibility (see [`crate::noise::KrausChannel`]).
    pub(crate) fn apply_kraus_local(&self, qubit: usize, ops: &[ComplexMatrix<T>]) -> Self {
        let mut acc = ComplexMatrix::zeros(self.dim());
        for e in ops {
            let term = self.conjugate_local(qubit, e);
            for (a, t) in acc.data.iter_mut().zip(term.data) {
                *a += t;
            }
        }
        Self::from_trusted(acc)
    }

    /// Reduced state on `keep`, ordered by ascending original index.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::arg("partial trace needs at least one kept qubit"));
        }
        check_targets(keep, self.num_qubits)?;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let n = self.num_qubits;
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let kd = 1usize << keep.len();
        let td = 1usize << traced.len();
        let place = |qs: &[usize], local: usize| {
            qs.iter()
                .enumerate()
                .filter(|(k, _)| (local >> (qs.len() - 1 - k)) & 1 == 1)
                .map(|(_, &q)| 1usize << (n - 1 - q))
                .sum::<usize>()
        };
        let keep_idx: Vec<usize> = (0..kd).map(|l| place(&keep, l)).collect();
        let trace_idx: Vec<usize> = (0..td).map(|l| place(&traced, l)).collect();

        let d = self.dim();
        let mut out = ComplexMatrix::zeros(kd);
        for (r, &kr) in keep_idx.iter().enumerate() {
            for (c, &kc) in keep_idx.iter().enumerate() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for &t in &trace_idx {
                    acc += self.matrix.data[(kr | t) * d + (kc | t)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(Self::from_trusted(out))
    }

    /// `Tr(ρ σ)` for two states on the same register.
    pub fn overlap(&self, other: &Self) -> Result<T> {
        Ok(self.expectation(&other.matrix)?.re)
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    fn plus() -> DensityMatrix<f64> {
        DensityMatrix::from_pure(&[c(1.0), c(1.0)]).unwrap()
    }

    #[test]
    fn kron_identities_and_blocks() {
        let i4 = kron(&identity::<f64>(), &identity()).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));

        let xz = kron(&pauli_x::<f64>(), &pauli_z()).unwrap();
        let z = pauli_z::<f64>();
        for r in 0..2 {
            for cc in 0..2 {
                assert_eq!(xz[(r, cc)], c(0.0));
                assert_eq!(xz[(r, cc + 2)], z[(r, cc)]);
                assert_eq!(xz[(r + 2, cc)], z[(r, cc)]);
                assert_eq!(xz[(r + 2, cc + 2)], c(0.0));
            }
        }
    }

    #[test]
    fn kron_capacity_error() {
        let big = ComplexMatrix::<f64>::identity(1 << 7);
        let err = kron(&big, &big).unwrap_err();
        assert!(
            matches!(err, Error::Capacity { requested: 14, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn embed_ordering() {
        let x0 = embed(&pauli_x::<f64>(), &[0], 2).unwrap();
        assert_eq!(x0, kron(&pauli_x(), &identity()).unwrap());
        let z1 = embed(&pauli_z::<f64>(), &[1], 2).unwrap();
        assert_eq!(z1, kron(&identity(), &pauli_z()).unwrap());
        // Reversed target order swaps the factors.
        let xz = kron(&pauli_x::<f64>(), &pauli_z()).unwrap();
        let rev = embed(&xz, &[1, 0], 2).unwrap();
        assert_eq!(rev, kron(&pauli_z(), &pauli_x()).unwrap());
    }

    #[test]
    fn embed_rejects_bad_targets() {
        let x = pauli_x::<f64>();
        assert!(matches!(embed(&x, &[2], 2), Err(Error::Argument(_))));
        let cz = controlled_z::<f64>();
        assert!(matches!(embed(&cz, &[1, 1], 3), Err(Error::Argument(_))));
        assert!(matches!(embed(&cz, &[0], 3), Err(Error::Argument(_))));
        assert!(matches!(embed(&x, &[0], 13), Err(Error::Capacity { .. })));
    }

    #[test]
    fn embed_cz_matches_statevector() {
        // CZ on qubits 0 and 2 of |+++⟩ flips the sign of amplitudes with
        // both bits set.
        let n = 3;
        let amp = 1.0 / (8f64).sqrt();
        let expected: Vec<C> = (0..8)
            .map(|b| {
                let both = (b >> 2) & 1 == 1 && b & 1 == 1;
                c(if both { -amp } else { amp })
            })
            .collect();
        let expected = DensityMatrix::from_pure(&expected).unwrap();
        let start = DensityMatrix::from_pure(&[c(1.0); 8]).unwrap();
        let u = embed(&controlled_z::<f64>(), &[0, 2], n).unwrap();
        let got = start.apply_unitary(&u).unwrap();
        assert!(got.matrix().max_abs_diff(expected.matrix()) < 1e-14);
    }

    #[test]
    fn apply_unitary_cases() {
        let rho = plus();
        assert_eq!(rho.apply_unitary(&identity()).unwrap(), rho);
        let zero = DensityMatrix::<f64>::basis_state(1, 0).unwrap();
        let one = DensityMatrix::<f64>::basis_state(1, 1).unwrap();
        let flipped = zero.apply_unitary(&pauli_x()).unwrap();
        assert!(flipped.matrix().max_abs_diff(one.matrix()) < 1e-15);
        let nonunitary = ComplexMatrix::<f64>::identity(2).scale_real(2.0);
        assert!(zero.apply_unitary(&nonunitary).is_err());
    }

    #[test]
    fn expectation_cases() {
        let zero = DensityMatrix::<f64>::basis_state(1, 0).unwrap();
        assert!((zero.expectation(&pauli_z()).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((plus().expectation(&identity()).unwrap() - c(1.0)).norm() < 1e-15);
        assert!(zero.expectation(&ComplexMatrix::identity(4)).is_err());
    }

    #[test]
    fn projection_cases() {
        let p0 = eigenprojector(&pauli_z::<f64>(), 1.0);
        let proj = plus().project_and_normalize(&p0).unwrap();
        assert!((proj.probability - 0.5).abs() < 1e-15);
        let zero = DensityMatrix::<f64>::basis_state(1, 0).unwrap();
        assert!(proj.state.unwrap().matrix().max_abs_diff(zero.matrix()) < 1e-15);

        let all = plus().project_and_normalize(&identity()).unwrap();
        assert!((all.probability - 1.0).abs() < 1e-15);
        assert_eq!(all.state.unwrap(), plus());

        let p1 = eigenprojector(&pauli_z::<f64>(), -1.0);
        let empty = zero.project_and_normalize(&p1).unwrap();
        assert!(empty.state.is_none());
        assert!(empty.probability.abs() < 1e-15);

        assert!(plus().project_and_normalize(&pauli_x()).is_err());
    }

    #[test]
    fn partial_trace_cases() {
        let bell = DensityMatrix::from_pure(&[c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        let red = bell.partial_trace(&[0]).unwrap();
        let half = DensityMatrix::<f64>::maximally_mixed(1).unwrap();
        assert!(red.matrix().max_abs_diff(half.matrix()) < 1e-15);

        let zero = DensityMatrix::<f64>::basis_state(1, 0).unwrap();
        let prod = DensityMatrix::new(kron(plus().matrix(), zero.matrix()).unwrap()).unwrap();
        assert!(
            prod.partial_trace(&[0])
                .unwrap()
                .matrix()
                .max_abs_diff(plus().matrix())
                < 1e-15
        );
        assert!(
            prod.partial_trace(&[1])
                .unwrap()
                .matrix()
                .max_abs_diff(zero.matrix())
                < 1e-15
        );
        assert!(prod.partial_trace(&[]).is_err());
        assert!(prod.partial_trace(&[0, 0]).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = ComplexMatrix::<f64>::identity(2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let mut non_herm = ComplexMatrix::<f64>::identity(2).scale_real(0.5);
        non_herm[(0, 1)] = c(0.3);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(
            DensityMatrix::new(ComplexMatrix::<f64>::identity(3).scale_real(1.0 / 3.0)).is_err()
        );
    }

    #[test]
    fn local_conjugation_matches_embedded() {
        let n = 3;
        let amps: Vec<C> = (0..8)
            .map(|k| C::new(k as f64 + 0.5, (k * k) as f64 * 0.1))
            .collect();
        let rho = DensityMatrix::from_pure(&amps).unwrap();
        let y = pauli_y::<f64>();
        for q in 0..n {
            let full = rho.apply_unitary(&embed(&y, &[q], n).unwrap()).unwrap();
            let local = rho.apply_local_unitary(q, &y).unwrap();
            assert!(full.matrix().max_abs_diff(local.matrix()) < 1e-14);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let rho =
            DensityMatrix::<f32>::from_pure(&[Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)])
                .unwrap();
        let x = rho.expectation(&pauli_x()).unwrap();
        assert!((x.re - 1.0).abs() < 1e-6);
    }
}
