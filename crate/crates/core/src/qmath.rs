//! Dense complex linear algebra for qubits (dimension 2) and qubit pairs
//! (dimension 4).
//!
//! Basis conventions used throughout the crate:
//!
//! * `|1⟩ = (1, 0)ᵀ`, `|2⟩ = (0, 1)ᵀ`, `σ_z = diag(1, −1)`.
//! * Joint system/probe states are ordered system-major:
//!   `|11⟩, |12⟩, |21⟩, |22⟩` (index `2·s + p`).

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Tolerance for algebraic identities (unitarity, completeness, equalities).
pub const TOL_ALGEBRA: f64 = 1e-12;
/// Tolerance for positivity and Hermiticity gates.
pub const TOL_POSITIVITY: f64 = 1e-10;

const MAX_DIM: usize = 4;

pub(crate) const ZERO: Complex = Complex::new(0.0, 0.0);
pub(crate) const ONE: Complex = Complex::new(1.0, 0.0);
pub(crate) const I: Complex = Complex::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 => Ok(()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// A dense `dim × dim` complex matrix with `dim ∈ {2, 4}`, stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Operator {
    dim: usize,
    data: [Complex; MAX_DIM * MAX_DIM],
}

impl Operator {
    /// Builds an operator from `dim²` row-major entries. Rejects non-finite entries.
    pub fn new(dim: usize, entries: &[Complex]) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        let mut op = Self::zeros_unchecked(dim);
        op.data[..dim * dim].copy_from_slice(entries);
        Ok(op)
    }

    fn zeros_unchecked(dim: usize) -> Self {
        Self {
            dim,
            data: [ZERO; MAX_DIM * MAX_DIM],
        }
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::zeros_unchecked(dim))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut op = Self::zeros_unchecked(dim);
        for i in 0..dim {
            op.data[i * dim + i] = ONE;
        }
        Ok(op)
    }

    /// 2×2 identity.
    pub fn id2() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, ONE]])
    }

    /// 2×2 operator from rows. Panics on non-finite entries.
    pub fn from_rows(rows: [[Complex; 2]; 2]) -> Self {
        Self::new(2, &[rows[0][0], rows[0][1], rows[1][0], rows[1][1]]).expect("finite 2x2 entries")
    }

    /// 2×2 operator with real entries.
    pub fn real2(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::from_rows([[r(a), r(b)], [r(c), r(d)]])
    }

    pub fn diag(values: &[Complex]) -> Result<Self> {
        let dim = values.len();
        check_dim(dim)?;
        let mut entries = [ZERO; MAX_DIM * MAX_DIM];
        for (i, v) in values.iter().enumerate() {
            entries[i * dim + i] = *v;
        }
        Self::new(dim, &entries[..dim * dim])
    }

    pub fn diag2(a: f64, b: f64) -> Self {
        Self::real2(a, 0.0, 0.0, b)
    }

    pub fn pauli_x() -> Self {
        Self::real2(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y() -> Self {
        Self::from_rows([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::diag2(1.0, -1.0)
    }

    /// Real rotation `[[cos β, −sin β], [sin β, cos β]]`, mapping `|1⟩` toward `|2⟩`
    /// for `β > 0`. This is the tilt/feedback rotation of the optimal instrument.
    pub fn rotation(beta: f64) -> Self {
        let (s, c) = beta.sin_cos();
        Self::real2(c, -s, s, c)
    }

    /// `exp(−i |w| ŵ·σ) = cos|w| I − i sin|w| ŵ·σ`. Every element of SU(2) is
    /// reached with `|w| ∈ [0, π]`.
    pub fn axis_angle(w: [f64; 3]) -> Self {
        let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if theta == 0.0 {
            return Self::id2();
        }
        let (s, c) = theta.sin_cos();
        let (nx, ny, nz) = (w[0] / theta, w[1] / theta, w[2] / theta);
        // −i s (nx σx + ny σy + nz σz)
        Self::from_rows([
            [Complex::new(c, -s * nz), Complex::new(-s * ny, -s * nx)],
            [Complex::new(s * ny, -s * nx), Complex::new(c, s * nz)],
        ])
    }

    /// Axis-angle vector `w` with `|w| ∈ [0, π]` such that
    /// [`Operator::axis_angle`]`(w)` equals this unitary up to a global phase.
    pub fn su2_axis_angle(&self) -> [f64; 3] {
        assert_eq!(self.dim, 2, "axis-angle form needs a 2x2 unitary");
        let det = self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0);
        let v = self.scale(det.sqrt().inv());
        let cos = v.get(0, 0).re;
        let sn = [-v.get(0, 1).im, -v.get(0, 1).re, -v.get(0, 0).im];
        let sin = (sn[0] * sn[0] + sn[1] * sn[1] + sn[2] * sn[2]).sqrt();
        if sin == 0.0 {
            // ±I; −I is the identity up to phase.
            return [0.0; 3];
        }
        let theta = sin.atan2(cos);
        [
            theta * sn[0] / sin,
            theta * sn[1] / sin,
            theta * sn[2] / sin,
        ]
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &PureState, v: &PureState) -> Result<Self> {
        if u.dim != v.dim {
            return Err(Error::DimensionMismatch {
                left: u.dim,
                right: v.dim,
            });
        }
        let d = u.dim;
        let mut op = Self::zeros_unchecked(d);
        for i in 0..d {
            for j in 0..d {
                op.data[i * d + j] = u.amps[i] * v.amps[j].conj();
            }
        }
        Ok(op)
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn projector(psi: &PureState) -> Self {
        Self::outer(psi, psi).expect("same state")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex {
        assert!(row < self.dim && col < self.dim, "index out of range");
        self.data[row * self.dim + col]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, v: Complex) {
        self.data[row * self.dim + col] = v;
    }

    pub fn entries(&self) -> &[Complex] {
        &self.data[..self.dim * self.dim]
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let d = self.dim;
        let mut out = Self::zeros_unchecked(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Operator {
        let d = self.dim;
        let mut out = Self::zeros_unchecked(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: Complex) -> Operator {
        let mut out = *self;
        out.data.iter_mut().for_each(|z| *z *= k);
        out
    }

    pub fn trace(&self) -> Complex {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `A ρ A†`.
    pub fn conjugate(&self, rho: &Operator) -> Operator {
        *self * *rho * self.adjoint()
    }

    /// Largest absolute entry-wise difference. Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let id = Self::identity(self.dim).expect("valid dim");
        (self.adjoint() * *self).max_abs_diff(&id) <= tol
    }

    /// Positive semidefinite within `tol`: a Cholesky factorization of `A + tol·I`
    /// exists. Assumes (and checks) Hermiticity within `tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        let d = self.dim;
        let mut l = [ZERO; MAX_DIM * MAX_DIM];
        for j in 0..d {
            let mut diag = self.data[j * d + j].re + tol;
            for k in 0..j {
                diag -= l[j * d + k].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let ljj = diag.sqrt();
            l[j * d + j] = r(ljj);
            for i in (j + 1)..d {
                let mut s = self.data[i * d + j];
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k].conj();
                }
                l[i * d + j] = s / ljj;
            }
        }
        true
    }

    /// Hermitian, unit trace and positive within `tol`.
    pub fn is_density(&self, tol: f64) -> bool {
        (self.trace() - ONE).norm() <= tol && self.is_positive(tol)
    }

    pub(crate) fn check_density(&self) -> Result<()> {
        if !self.is_hermitian(TOL_POSITIVITY) {
            return Err(Error::NotDensity("not Hermitian"));
        }
        if (self.trace() - ONE).norm() > TOL_POSITIVITY {
            return Err(Error::NotDensity("trace differs from 1"));
        }
        if !self.is_positive(TOL_POSITIVITY) {
            return Err(Error::NotDensity("not positive semidefinite"));
        }
        Ok(())
    }

    /// `A |v⟩`.
    pub fn apply(&self, v: &PureState) -> [Complex; MAX_DIM] {
        assert_eq!(self.dim, v.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = [ZERO; MAX_DIM];
        for i in 0..d {
            out[i] = (0..d).map(|j| self.data[i * d + j] * v.amps[j]).sum();
        }
        out
    }

    /// `⟨v|A|v⟩`.
    pub fn expectation(&self, v: &PureState) -> Complex {
        let av = self.apply(v);
        (0..v.dim).map(|i| v.amps[i].conj() * av[i]).sum()
    }
}

impl Mul for Operator {
    type Output = Operator;

    /// Panics on dimension mismatch; use [`Operator::matmul`] for a checked product.
    fn mul(self, rhs: Operator) -> Operator {
        self.matmul(&rhs).expect("operator dimension mismatch")
    }
}

impl Add for Operator {
    type Output = Operator;

    fn add(self, rhs: Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let mut out = self;
        out.data
            .iter_mut()
            .zip(rhs.data.iter())
            .for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for Operator {
    type Output = Operator;

    fn sub(self, rhs: Operator) -> Operator {
        self + rhs.scale(r(-1.0))
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A normalized state vector of dimension 2 or 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState {
    dim: usize,
    amps: [Complex; MAX_DIM],
}

impl PureState {
    /// Requires unit norm within `1e-12`.
    pub fn new(amplitudes: &[Complex]) -> Result<Self> {
        let state = Self::raw(amplitudes)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > TOL_ALGEBRA {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalized(amplitudes: &[Complex]) -> Result<Self> {
        let mut state = Self::raw(amplitudes)?;
        let norm = state.norm();
        if norm == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        state.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    fn raw(amplitudes: &[Complex]) -> Result<Self> {
        let dim = amplitudes.len();
        check_dim(dim)?;
        if amplitudes.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let mut amps = [ZERO; MAX_DIM];
        amps[..dim].copy_from_slice(amplitudes);
        Ok(Self { dim, amps })
    }

    /// Real qubit state `a|1⟩ + b|2⟩`, which must be normalized.
    pub fn real2(a: f64, b: f64) -> Result<Self> {
        Self::new(&[r(a), r(b)])
    }

    /// Basis state `|k⟩` (1-based label, as in `|1⟩`, `|2⟩`).
    pub fn basis(dim: usize, label: usize) -> Result<Self> {
        check_dim(dim)?;
        if label == 0 || label > dim {
            return Err(Error::OutOfRange {
                name: "basis label",
                value: label as f64,
                min: 1.0,
                max: dim as f64,
            });
        }
        let mut amps = [ZERO; MAX_DIM];
        amps[label - 1] = ONE;
        Ok(Self { dim, amps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amps[..self.dim]
    }

    fn norm(&self) -> f64 {
        self.amplitudes()
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Kronecker product `|self⟩ ⊗ |other⟩` of two qubit states.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        if self.dim != 2 || other.dim != 2 {
            return Err(Error::UnsupportedDimension(self.dim.max(other.dim) * 2));
        }
        let mut amps = [ZERO; MAX_DIM];
        for s in 0..2 {
            for p in 0..2 {
                amps[2 * s + p] = self.amps[s] * other.amps[p];
            }
        }
        Ok(PureState { dim: 4, amps })
    }
}

/// Checked matrix product.
pub fn matmul(a: &Operator, b: &Operator) -> Result<Operator> {
    a.matmul(b)
}

/// Conjugate transpose.
pub fn adjoint(a: &Operator) -> Operator {
    a.adjoint()
}

/// Kronecker product of two qubit operators in system-major order.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim != 2 {
        return Err(Error::UnsupportedDimension(a.dim));
    }
    if b.dim != 2 {
        return Err(Error::UnsupportedDimension(b.dim));
    }
    let mut out = Operator::zeros_unchecked(4);
    for s1 in 0..2 {
        for p1 in 0..2 {
            for s2 in 0..2 {
                for p2 in 0..2 {
                    out.set(2 * s1 + p1, 2 * s2 + p2, a.get(s1, s2) * b.get(p1, p2));
                }
            }
        }
    }
    Ok(out)
}

/// Traces out the second (probe) factor of a 4×4 operator, with no validation.
pub(crate) fn partial_trace_second(a: &Operator) -> Operator {
    debug_assert_eq!(a.dim, 4);
    let mut out = Operator::zeros_unchecked(2);
    for s1 in 0..2 {
        for s2 in 0..2 {
            let v = (0..2).map(|p| a.get(2 * s1 + p, 2 * s2 + p)).sum();
            out.set(s1, s2, v);
        }
    }
    out
}

/// Reduces a joint system/probe density operator to the system.
pub fn partial_trace_probe(a: &Operator) -> Result<Operator> {
    if a.dim != 4 {
        return Err(Error::UnsupportedDimension(a.dim));
    }
    a.check_density()?;
    Ok(partial_trace_second(a))
}

/// `⟨s|ρ|s⟩` for a density operator `ρ`.
pub fn fidelity_pure(s: &PureState, rho: &Operator) -> Result<f64> {
    if s.dim != rho.dim {
        return Err(Error::DimensionMismatch {
            left: s.dim,
            right: rho.dim,
        });
    }
    rho.check_density()?;
    Ok(rho.expectation(s).re)
}

/// Principal square root of a positive semidefinite 2×2 Hermitian operator,
/// via its Bloch form `q·I + m·σ`. Returns `None` when an eigenvalue is below
/// `−tol`.
pub fn sqrt_psd2(a: &Operator, tol: f64) -> Option<Operator> {
    assert_eq!(a.dim, 2);
    let q = 0.5 * (a.get(0, 0).re + a.get(1, 1).re);
    let mz = 0.5 * (a.get(0, 0).re - a.get(1, 1).re);
    let mx = a.get(0, 1).re;
    let my = -a.get(0, 1).im;
    let m = (mx * mx + my * my + mz * mz).sqrt();
    let (lo, hi) = (q - m, q + m);
    if lo < -tol {
        return None;
    }
    let (sl, sh) = (lo.max(0.0).sqrt(), hi.max(0.0).sqrt());
    let mean = 0.5 * (sh + sl);
    if m == 0.0 {
        return Some(Operator::diag2(mean, mean));
    }
    let k = 0.5 * (sh - sl) / m;
    Some(Operator::from_rows([
        [r(mean + k * mz), c(k * mx, -k * my)],
        [c(k * mx, k * my), r(mean - k * mz)],
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn psi1(alpha: f64) -> PureState {
        PureState::real2(alpha.cos(), alpha.sin()).unwrap()
    }

    fn psi2(alpha: f64) -> PureState {
        PureState::real2(alpha.sin(), alpha.cos()).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let a = Operator::from_rows([[c(1.0, 2.0), c(-0.5, 0.0)], [c(0.0, 3.0), c(4.0, -1.0)]]);
        assert_eq!(matmul(&Operator::id2(), &a).unwrap(), a);
    }

    #[test]
    fn pauli_z_squares_to_identity() {
        let z = Operator::pauli_z();
        assert_eq!(matmul(&z, &z).unwrap(), Operator::id2());
    }

    #[test]
    fn rotation_is_unitary() {
        let u = Operator::rotation(0.477658);
        let prod = matmul(&u, &adjoint(&u)).unwrap();
        assert!(prod.max_abs_diff(&Operator::id2()) < 1e-12);
        for k in 0..100 {
            let b = -PI + 2.0 * PI * k as f64 / 99.0;
            assert!(Operator::rotation(b).is_unitary(1e-12));
        }
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = Operator::id2();
        let b = Operator::identity(4).unwrap();
        assert_eq!(
            matmul(&a, &b),
            Err(Error::DimensionMismatch { left: 2, right: 4 })
        );
    }

    #[test]
    fn unsupported_dimension_and_nan_rejected() {
        assert_eq!(Operator::identity(3), Err(Error::UnsupportedDimension(3)));
        assert!(matches!(
            Operator::new(2, &[r(f64::NAN), ZERO, ZERO, ONE]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            PureState::new(&[r(1.0), r(1.0)]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn adjoint_conjugates() {
        assert_eq!(adjoint(&Operator::id2()), Operator::id2());
        let d = Operator::diag(&[ONE, I]).unwrap();
        assert_eq!(adjoint(&d), Operator::diag(&[ONE, -I]).unwrap());
        let u = Operator::rotation(0.181109);
        assert!((adjoint(&u) * u).max_abs_diff(&Operator::id2()) < 1e-12);
    }

    #[test]
    fn tensor_examples() {
        let i4 = Operator::identity(4).unwrap();
        assert_eq!(tensor(&Operator::id2(), &Operator::id2()).unwrap(), i4);

        let p1 = Operator::diag2(1.0, 0.0);
        let p2 = Operator::diag2(0.0, 1.0);
        let parity = tensor(&p1, &p1).unwrap() + tensor(&p2, &p2).unwrap();
        assert_eq!(parity, Operator::diag(&[ONE, ZERO, ZERO, ONE]).unwrap());

        let zi = tensor(&Operator::pauli_z(), &Operator::id2()).unwrap();
        assert_eq!(zi, Operator::diag(&[ONE, ONE, -ONE, -ONE]).unwrap());

        assert_eq!(
            tensor(&i4, &Operator::id2()),
            Err(Error::UnsupportedDimension(4))
        );
    }

    #[test]
    fn partial_trace_examples() {
        let rho_s = Operator::projector(&psi1(0.3));
        let rho_p = Operator::diag2(0.25, 0.75);
        let joint = tensor(&rho_s, &rho_p).unwrap();
        assert!(partial_trace_probe(&joint).unwrap().max_abs_diff(&rho_s) < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi_plus = PureState::new(&[r(h), ZERO, ZERO, r(h)]).unwrap();
        let reduced = partial_trace_probe(&Operator::projector(&phi_plus)).unwrap();
        assert!(reduced.max_abs_diff(&Operator::diag2(0.5, 0.5)) < 1e-12);
    }

    #[test]
    fn partial_trace_of_cnot_copy() {
        // CNOT with the probe as target, probe starting in |1⟩ (index 0).
        let mut cnot = Operator::zeros(4).unwrap();
        cnot.set(0, 0, ONE);
        cnot.set(1, 1, ONE);
        cnot.set(2, 3, ONE);
        cnot.set(3, 2, ONE);
        let alpha = PI / 8.0;
        let input = psi1(alpha)
            .tensor(&PureState::basis(2, 1).unwrap())
            .unwrap();
        let out = cnot.conjugate(&Operator::projector(&input));
        let reduced = partial_trace_probe(&out).unwrap();
        let expected = Operator::diag2(0.853_553_390_593_273_8, 0.146_446_609_406_726_2);
        assert!(reduced.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_non_density() {
        let not_density = Operator::identity(4).unwrap();
        assert!(matches!(
            partial_trace_probe(&not_density),
            Err(Error::NotDensity(_))
        ));
        assert_eq!(
            partial_trace_probe(&Operator::id2()),
            Err(Error::UnsupportedDimension(2))
        );
    }

    #[test]
    fn fidelity_examples() {
        let p = psi1(0.2);
        assert!((fidelity_pure(&p, &Operator::projector(&p)).unwrap() - 1.0).abs() < 1e-12);
        let one = PureState::basis(2, 1).unwrap();
        let two = PureState::basis(2, 2).unwrap();
        assert_eq!(
            fidelity_pure(&one, &Operator::projector(&two)).unwrap(),
            0.0
        );
        let a = PI / 8.0;
        let f = fidelity_pure(&psi1(a), &Operator::projector(&psi2(a))).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
        assert!(matches!(
            fidelity_pure(&one, &Operator::identity(4).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn axis_angle_matches_rotation_about_y() {
        for b in [0.0, 0.3, -1.1, 2.5] {
            let v = Operator::axis_angle([0.0, b, 0.0]);
            assert!(v.max_abs_diff(&Operator::rotation(b)) < 1e-15);
            assert!(Operator::axis_angle([0.3 * b, -b, 0.7]).is_unitary(1e-12));
        }
    }

    #[test]
    fn su2_axis_angle_round_trips_up_to_phase() {
        let u = Operator::rotation(0.4)
            * Operator::diag(&[ONE, Complex::from_polar(1.0, -0.9)]).unwrap();
        let w = u.su2_axis_angle();
        let back = Operator::axis_angle(w);
        let phase = u.get(0, 0) / back.get(0, 0);
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(back.scale(phase).max_abs_diff(&u) < 1e-12);
        assert_eq!(Operator::id2().su2_axis_angle(), [0.0; 3]);
    }

    #[test]
    fn sqrt_psd2_squares_back() {
        let a = Operator::from_rows([[r(0.6), c(0.1, -0.2)], [c(0.1, 0.2), r(0.3)]]);
        let s = sqrt_psd2(&a, 1e-12).unwrap();
        assert!((s * s).max_abs_diff(&a) < 1e-14);
        assert!(sqrt_psd2(&Operator::diag2(1.0, -0.1), 1e-12).is_none());
        let half = sqrt_psd2(&Operator::diag2(0.5, 0.5), 0.0).unwrap();
        assert!((half.get(0, 0).re - 0.5f64.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn positivity_gate() {
        assert!(Operator::diag2(1.0, 0.0).is_positive(1e-10));
        assert!(!Operator::diag2(1.0, -1e-6).is_positive(1e-10));
        assert!(!Operator::pauli_y().scale(I).is_positive(1e-10));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn qubit_density() -> impl Strategy<Value = Operator> {
            (0.0..1.0f64, 0.0..PI, 0.0..2.0 * PI).prop_map(|(len, th, ph)| {
                let (x, y, z) = (
                    len * th.sin() * ph.cos(),
                    len * th.sin() * ph.sin(),
                    len * th.cos(),
                );
                Operator::from_rows([
                    [r(0.5 * (1.0 + z)), c(0.5 * x, -0.5 * y)],
                    [c(0.5 * x, 0.5 * y), r(0.5 * (1.0 - z))],
                ])
            })
        }

        proptest! {
            #[test]
            fn tensor_then_trace_recovers_system(rs in qubit_density(), rp in qubit_density()) {
                let joint = tensor(&rs, &rp).unwrap();
                let back = partial_trace_probe(&joint).unwrap();
                prop_assert!(back.max_abs_diff(&rs) < 1e-12);
            }

            #[test]
            fn fidelity_is_real_and_bounded(rho in qubit_density(), a in 0.0..PI, b in 0.0..2.0 * PI) {
                let s = PureState::new(&[r(a.cos()), Complex::from_polar(a.sin(), b)]).unwrap();
                let z = rho.expectation(&s);
                prop_assert!(z.im.abs() < 1e-12);
                let f = fidelity_pure(&s, &rho).unwrap();
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
            }

            #[test]
            fn axis_angle_is_unitary(x in -4.0..4.0f64, y in -4.0..4.0f64, z in -4.0..4.0f64) {
                prop_assert!(Operator::axis_angle([x, y, z]).is_unitary(1e-12));
            }
        }
    }
}
