//! Spin-J states, angular-momentum matrices and rotation unitaries.
//!
//! Basis vectors are ordered by magnetic quantum number from `m = J` down to
//! `m = -J`, so index `i` holds `m = J - i`. Half-integer spins are handled
//! exactly by storing `2J` and `2m` as integers.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Normalization tolerance applied when a state is constructed.
pub const NORM_TOL: f64 = 1e-12;
/// Relative tolerance for Hermiticity checks (scaled by the largest entry).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for unitarity checks.
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Total angular momentum, stored as `2J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinJ(u32);

impl SpinJ {
    pub const fn from_twice(twice_j: u32) -> Self {
        SpinJ(twice_j)
    }

    pub const fn integer(j: u32) -> Self {
        SpinJ(2 * j)
    }

    pub const fn twice_j(self) -> u32 {
        self.0
    }

    pub const fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Eigenvalue `J(J+1)` of the Casimir operator.
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// Vector index holding `m = m_times_2 / 2`, if that projection exists.
    pub fn index_of(self, m_times_2: i32) -> Option<usize> {
        let tj = self.0 as i32;
        if m_times_2.abs() > tj || (tj - m_times_2) % 2 != 0 {
            return None;
        }
        Some(((tj - m_times_2) / 2) as usize)
    }

    pub fn m_times_2_at(self, index: usize) -> i32 {
        self.0 as i32 - 2 * index as i32
    }

    pub fn m_at(self, index: usize) -> f64 {
        self.m_times_2_at(index) as f64 / 2.0
    }
}

impl fmt::Display for SpinJ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// A normalized pure state of a spin-J system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpinStateDoc", into = "SpinStateDoc")]
pub struct SpinState {
    j: SpinJ,
    amplitudes: CVector,
}

impl SpinState {
    /// Wraps `amplitudes`, which must already be normalized within [`NORM_TOL`].
    pub fn new(j: SpinJ, amplitudes: CVector) -> Result<Self> {
        check_len(j, amplitudes.len())?;
        let deviation = (amplitudes.norm_squared() - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(SpinState { j, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn from_unnormalized(j: SpinJ, amplitudes: CVector) -> Result<Self> {
        check_len(j, amplitudes.len())?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(SpinState {
            j,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Builds a state from `(2m, amplitude)` pairs and normalizes it.
    pub fn from_components(j: SpinJ, components: &[(i32, Complex64)]) -> Result<Self> {
        let mut v = CVector::zeros(j.dim());
        for &(m2, a) in components {
            let idx = j.index_of(m2).ok_or_else(|| {
                Error::InvalidInput(format!("m = {m2}/2 is not a projection of J = {j}"))
            })?;
            v[idx] += a;
        }
        Self::from_unnormalized(j, v)
    }

    /// The eigenstate `|J, m>` with `m = m_times_2 / 2`.
    pub fn basis(j: SpinJ, m_times_2: i32) -> Result<Self> {
        Self::from_components(j, &[(m_times_2, ONE)])
    }

    pub fn j(&self) -> SpinJ {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// Amplitude of `|J, m>`; zero when `m` is not a valid projection.
    pub fn amplitude(&self, m_times_2: i32) -> Complex64 {
        self.j
            .index_of(m_times_2)
            .map_or(ZERO, |i| self.amplitudes[i])
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &SpinState) -> Result<Complex64> {
        check_len(self.j, other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn with_global_phase(&self, phase: f64) -> SpinState {
        SpinState {
            j: self.j,
            amplitudes: self.amplitudes.map(|a| a * Complex64::from_polar(1.0, phase)),
        }
    }

    /// Projector `|psi><psi|`.
    pub fn projector(&self) -> SpinOperator {
        SpinOperator {
            j: self.j,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
            label: "|psi><psi|".into(),
        }
    }
}

fn check_len(j: SpinJ, len: usize) -> Result<()> {
    if len != j.dim() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            found: len,
        });
    }
    Ok(())
}

/// One `{"m_times_2", "re", "im"}` entry of the state file format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub m_times_2: i32,
    pub re: f64,
    pub im: f64,
}

/// On-disk form of a [`SpinState`]. Omitted projections have zero amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinStateDoc {
    pub twice_j: u32,
    pub amplitudes: Vec<AmplitudeEntry>,
}

impl SpinStateDoc {
    /// Dense amplitude vector, without any normalization check.
    pub fn to_vector(&self) -> Result<(SpinJ, CVector)> {
        let j = SpinJ::from_twice(self.twice_j);
        let mut v = CVector::zeros(j.dim());
        let mut seen = vec![false; j.dim()];
        for e in &self.amplitudes {
            let idx = j.index_of(e.m_times_2).ok_or_else(|| {
                Error::Schema(format!("m_times_2 = {} invalid for twice_j = {}", e.m_times_2, self.twice_j))
            })?;
            if seen[idx] {
                return Err(Error::Schema(format!("duplicate entry for m_times_2 = {}", e.m_times_2)));
            }
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::Schema(format!("non-finite amplitude at m_times_2 = {}", e.m_times_2)));
            }
            seen[idx] = true;
            v[idx] = Complex64::new(e.re, e.im);
        }
        Ok((j, v))
    }
}

impl TryFrom<SpinStateDoc> for SpinState {
    type Error = Error;

    fn try_from(doc: SpinStateDoc) -> Result<Self> {
        let (j, v) = doc.to_vector()?;
        SpinState::new(j, v)
    }
}

impl From<SpinState> for SpinStateDoc {
    fn from(s: SpinState) -> Self {
        let amplitudes = s
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| AmplitudeEntry {
                m_times_2: s.j.m_times_2_at(i),
                re: a.re,
                im: a.im,
            })
            .collect();
        SpinStateDoc {
            twice_j: s.j.twice_j(),
            amplitudes,
        }
    }
}

/// One complex matrix entry of the operator file format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// On-disk form of a [`SpinOperator`]: `matrix` is row-major, rows and
/// columns ordered from `m = J` down to `m = -J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinOperatorDoc {
    pub twice_j: u32,
    #[serde(default)]
    pub label: String,
    pub matrix: Vec<Vec<ComplexEntry>>,
}

impl TryFrom<SpinOperatorDoc> for SpinOperator {
    type Error = Error;

    fn try_from(doc: SpinOperatorDoc) -> Result<Self> {
        let j = SpinJ::from_twice(doc.twice_j);
        let n = j.dim();
        if doc.matrix.len() != n || doc.matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Schema(format!("operator matrix must be {n} x {n} for twice_j = {}", doc.twice_j)));
        }
        let m = CMatrix::from_fn(n, n, |r, c| Complex64::new(doc.matrix[r][c].re, doc.matrix[r][c].im));
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Schema("non-finite operator entry".into()));
        }
        SpinOperator::new(j, m, doc.label)
    }
}

impl From<SpinOperator> for SpinOperatorDoc {
    fn from(op: SpinOperator) -> Self {
        let n = op.dim();
        SpinOperatorDoc {
            twice_j: op.j.twice_j(),
            matrix: (0..n)
                .map(|r| (0..n).map(|c| ComplexEntry { re: op.matrix[(r, c)].re, im: op.matrix[(r, c)].im }).collect())
                .collect(),
            label: op.label,
        }
    }
}

/// A labeled dense operator on the `2J+1` dimensional spin space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpinOperatorDoc", into = "SpinOperatorDoc")]
pub struct SpinOperator {
    j: SpinJ,
    matrix: CMatrix,
    label: String,
}

impl SpinOperator {
    pub fn new(j: SpinJ, matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != j.dim() || matrix.ncols() != j.dim() {
            return Err(Error::DimensionMismatch {
                expected: j.dim(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(SpinOperator {
            j,
            matrix,
            label: label.into(),
        })
    }

    pub fn identity(j: SpinJ) -> Self {
        SpinOperator {
            j,
            matrix: CMatrix::identity(j.dim(), j.dim()),
            label: "I".into(),
        }
    }

    pub fn j(&self) -> SpinJ {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                dev = dev.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                label: self.label.clone(),
                deviation: self.hermitian_deviation(),
            })
        }
    }

    /// `max |(U^dag U - I)_ij|`.
    pub fn unitary_deviation(&self) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        max_abs_diff(&prod, &CMatrix::identity(self.dim(), self.dim()))
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let deviation = self.unitary_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary {
                label: self.label.clone(),
                deviation,
            });
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn adjoint(&self) -> SpinOperator {
        SpinOperator {
            j: self.j,
            matrix: self.matrix.adjoint(),
            label: format!("{}^dag", self.label),
        }
    }

    /// Operator product `self * rhs`.
    pub fn compose(&self, rhs: &SpinOperator) -> Result<SpinOperator> {
        check_len(self.j, rhs.dim())?;
        Ok(SpinOperator {
            j: self.j,
            matrix: &self.matrix * &rhs.matrix,
            label: format!("{}*{}", self.label, rhs.label),
        })
    }

    /// Largest absolute eigenvalue of a Hermitian operator.
    pub fn spectral_radius(&self) -> Result<f64> {
        let spec = HermitianSpectrum::of(self)?;
        Ok(spec.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Eigen-decomposition `G = V diag(values) V^dag` of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianSpectrum {
    pub fn of(op: &SpinOperator) -> Result<Self> {
        op.ensure_hermitian()?;
        // Symmetrize so round-off in the upper triangle is not silently dropped.
        let h = (op.matrix() + op.matrix().adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(h);
        Ok(HermitianSpectrum {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// `exp(-i theta G)`.
    pub fn evolution(&self, theta: f64) -> CMatrix {
        let phases = self.values.map(|v| Complex64::from_polar(1.0, -theta * v));
        let mut scaled = self.vectors.clone();
        for (c, p) in phases.iter().enumerate() {
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= p);
        }
        scaled * self.vectors.adjoint()
    }
}

/// Unit vector `u` defining a rotation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAxis(Vector3<f64>);

impl RotationAxis {
    pub const X: RotationAxis = RotationAxis(Vector3::new(1.0, 0.0, 0.0));
    pub const Y: RotationAxis = RotationAxis(Vector3::new(0.0, 1.0, 0.0));
    pub const Z: RotationAxis = RotationAxis(Vector3::new(0.0, 0.0, 1.0));

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NonUnitAxis { norm });
        }
        Ok(RotationAxis(v))
    }

    /// Rescales any nonzero vector onto the unit sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NonUnitAxis { norm });
        }
        Ok(RotationAxis(v / norm))
    }

    /// Axis at polar angle `theta` and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        RotationAxis(Vector3::new(
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ))
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }
}

/// Angular-momentum matrices of a fixed spin.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub jx: SpinOperator,
    pub jy: SpinOperator,
    pub jz: SpinOperator,
    pub jplus: SpinOperator,
    pub jminus: SpinOperator,
    pub jsq: SpinOperator,
}

impl SpinOperators {
    pub fn j(&self) -> SpinJ {
        self.jz.j
    }

    /// `[Jx, Jy, Jz]`.
    pub fn cartesian(&self) -> [&SpinOperator; 3] {
        [&self.jx, &self.jy, &self.jz]
    }

    /// Generator `u . J` of rotations about `u`.
    pub fn along(&self, u: &RotationAxis) -> SpinOperator {
        let v = u.vector();
        let matrix = self.jx.matrix.scale(v.x) + self.jy.matrix.scale(v.y) + self.jz.matrix.scale(v.z);
        SpinOperator {
            j: self.j(),
            matrix,
            label: format!("u.J[{:.6},{:.6},{:.6}]", v.x, v.y, v.z),
        }
    }
}

/// Standard matrix representation of `Jx, Jy, Jz, J+, J-` and `J^2`.
pub fn build_spin_operators(j: SpinJ) -> SpinOperators {
    let n = j.dim();
    let jv = j.value();
    let mut jz = CMatrix::zeros(n, n);
    let mut jplus = CMatrix::zeros(n, n);
    for i in 0..n {
        let m = j.m_at(i);
        jz[(i, i)] = Complex64::new(m, 0.0);
        // J+ |m> = sqrt(J(J+1) - m(m+1)) |m+1>, and |m+1> sits at index i-1.
        if i > 0 {
            jplus[(i - 1, i)] = Complex64::new((jv * (jv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus).scale(0.5);
    let jy = (&jplus - &jminus) / Complex64::new(0.0, 2.0);
    let jsq = &jx * &jx + &jy * &jy + &jz * &jz;
    let op = |matrix: CMatrix, label: &str| SpinOperator {
        j,
        matrix,
        label: label.into(),
    };
    SpinOperators {
        jx: op(jx, "Jx"),
        jy: op(jy, "Jy"),
        jz: op(jz, "Jz"),
        jplus: op(jplus, "J+"),
        jminus: op(jminus, "J-"),
        jsq: op(jsq, "J^2"),
    }
}

/// `exp(-i theta G)` for a Hermitian generator.
pub fn evolution(generator: &SpinOperator, theta: f64) -> Result<SpinOperator> {
    let spec = HermitianSpectrum::of(generator)?;
    Ok(SpinOperator {
        j: generator.j,
        matrix: spec.evolution(theta),
        label: format!("exp(-i*{theta}*{})", generator.label),
    })
}

/// Rotation `exp(-i theta u.J)`.
pub fn rotation_unitary(j: SpinJ, theta: f64, u: &RotationAxis) -> SpinOperator {
    let g = build_spin_operators(j).along(u);
    // u.J is Hermitian by construction, so the decomposition cannot fail.
    evolution(&g, theta)
        .expect("u.J is Hermitian")
        .relabel(format!("R({theta})"))
}

/// Matrix-vector product `op |psi>`, not renormalized.
pub fn apply(op: &SpinOperator, psi: &SpinState) -> Result<CVector> {
    check_len(op.j, psi.dim())?;
    Ok(&op.matrix * &psi.amplitudes)
}

/// `<psi|op|psi>` for an arbitrary (possibly non-Hermitian) operator.
pub fn expectation(psi: &SpinState, op: &SpinOperator) -> Result<Complex64> {
    let v = apply(op, psi)?;
    Ok(psi.amplitudes.dotc(&v))
}

/// First two moments of a Hermitian observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean `<G>` and variance `<G^2> - <G>^2`, the latter clamped at zero.
pub fn expectation_and_variance(psi: &SpinState, g: &SpinOperator) -> Result<Moments> {
    g.ensure_hermitian()?;
    let v = apply(g, psi)?;
    // Dividing by <psi|psi> and using |(G - mean) psi|^2 removes the
    // rounding left over from normalization and the cancellation in
    // <G^2> - <G>^2.
    let norm2 = psi.amplitudes.norm_squared();
    let mean = psi.amplitudes.dotc(&v).re / norm2;
    let variance = (v - &psi.amplitudes * Complex64::new(mean, 0.0)).norm_squared() / norm2;
    Ok(Moments { mean, variance })
}

/// Linear combination `sum c_k A_k`.
pub fn linear_combination(j: SpinJ, terms: &[(Complex64, &SpinOperator)], label: &str) -> Result<SpinOperator> {
    let mut m = CMatrix::zeros(j.dim(), j.dim());
    for (c, op) in terms {
        check_len(j, op.dim())?;
        m += op.matrix.map(|z| z * c);
    }
    SpinOperator::new(j, m, label)
}
