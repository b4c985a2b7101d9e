//! Error-detection and Knill–Laflamme checks on angular-momentum code
//! spaces, the error of a state under unitary noise, and the worst-case
//! codeword search.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{
    apply, expectation_and_variance, CMatrix, CVector, HermitianSpectrum, SpinJ,
    SpinOperator, SpinState,
};

const ORTHONORMAL_TOL: f64 = 1e-10;
const RECOVERY_TOL: f64 = 1e-9;
const SMALL_THETA_MAX: f64 = 0.1;

/// Orthonormal codewords spanning a code space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeSpaceDoc", into = "CodeSpaceDoc")]
pub struct CodeSpace {
    j: SpinJ,
    codewords: Vec<SpinState>,
}

impl CodeSpace {
    pub fn new(j: SpinJ, codewords: Vec<SpinState>) -> Result<Self> {
        let mut deviation: f64 = 0.0;
        for (a, ca) in codewords.iter().enumerate() {
            if ca.j() != j {
                return Err(Error::DimensionMismatch {
                    expected: j.dim(),
                    found: ca.dim(),
                });
            }
            for (b, cb) in codewords.iter().enumerate().skip(a) {
                let target = if a == b { 1.0 } else { 0.0 };
                deviation = deviation.max((ca.inner(cb)? - target).norm());
            }
        }
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(CodeSpace { j, codewords })
    }

    pub fn j(&self) -> SpinJ {
        self.j
    }

    pub fn codewords(&self) -> &[SpinState] {
        &self.codewords
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// Matrix whose columns are the codewords.
    fn embedding(&self) -> CMatrix {
        let cols: Vec<CVector> = self.codewords.iter().map(|c| c.amplitudes().clone()).collect();
        CMatrix::from_columns(&cols)
    }
}

/// File form `{"twice_j": int, "codewords": [SpinState, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeSpaceDoc {
    pub twice_j: u32,
    pub codewords: Vec<SpinState>,
}

impl TryFrom<CodeSpaceDoc> for CodeSpace {
    type Error = Error;

    fn try_from(doc: CodeSpaceDoc) -> Result<Self> {
        CodeSpace::new(SpinJ::from_twice(doc.twice_j), doc.codewords)
    }
}

impl From<CodeSpace> for CodeSpaceDoc {
    fn from(c: CodeSpace) -> Self {
        CodeSpaceDoc {
            twice_j: c.j.twice_j(),
            codewords: c.codewords,
        }
    }
}

/// Error operators `{E_a}`; they need be neither unitary nor Hermitian.
#[derive(Debug, Clone)]
pub struct ErrorSet {
    ops: Vec<SpinOperator>,
}

impl ErrorSet {
    pub fn new(ops: Vec<SpinOperator>) -> Result<Self> {
        check_same_spin(&ops)?;
        Ok(ErrorSet { ops })
    }

    pub fn ops(&self) -> &[SpinOperator] {
        &self.ops
    }
}

/// Recovery operators `{R_r}` with `sum R^dag R <= I`.
#[derive(Debug, Clone)]
pub struct RecoverySet {
    ops: Vec<SpinOperator>,
}

impl RecoverySet {
    pub fn new(ops: Vec<SpinOperator>) -> Result<Self> {
        check_same_spin(&ops)?;
        if let Some(first) = ops.first() {
            let n = first.dim();
            let total = ops
                .iter()
                .fold(CMatrix::zeros(n, n), |acc, r| acc + r.matrix().adjoint() * r.matrix());
            let sum = SpinOperator::new(first.j(), total, "sum R^dag R")?;
            let max_eigenvalue = HermitianSpectrum::of(&sum)?.values.max();
            if max_eigenvalue > 1.0 + RECOVERY_TOL {
                return Err(Error::RecoveryNotContractive { max_eigenvalue });
            }
        }
        Ok(RecoverySet { ops })
    }

    pub fn ops(&self) -> &[SpinOperator] {
        &self.ops
    }
}

fn check_same_spin(ops: &[SpinOperator]) -> Result<()> {
    if let Some(first) = ops.first() {
        if let Some(bad) = ops.iter().find(|o| o.j() != first.j()) {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: bad.dim(),
            });
        }
    }
    Ok(())
}

/// Outcome of a detection or Knill–Laflamme check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `C_a` (one column) for detection, `C_ab` for Knill–Laflamme; averaged
    /// over codewords.
    pub c_matrix: CMatrix,
    /// Per-codeword diagonal blocks `<i|E|i>` (or `<i|E_a^dag E_b|i>`).
    pub per_codeword: Vec<CMatrix>,
    /// Largest `|<i|E|j>|` with `i != j`.
    pub shuffle_violation: f64,
    /// Largest spread of a diagonal entry across codewords.
    pub diagonal_violation: f64,
    pub violation: f64,
    pub passed: bool,
}

fn condition_report(code: &CodeSpace, products: &[(usize, usize, CMatrix)], shape: (usize, usize), tol: f64) -> ConditionReport {
    // products: (row, col, codeword matrix W^dag X W) for each entry of C.
    let k = code.len();
    let mut per_codeword = vec![CMatrix::zeros(shape.0, shape.1); k];
    let mut shuffle: f64 = 0.0;
    let mut diagonal: f64 = 0.0;
    for (r, c, block) in products {
        for i in 0..k {
            per_codeword[i][(*r, *c)] = block[(i, i)];
            for j in 0..k {
                if i != j {
                    shuffle = shuffle.max(block[(i, j)].norm());
                } else {
                    for l in 0..i {
                        diagonal = diagonal.max((block[(i, i)] - block[(l, l)]).norm());
                    }
                }
            }
        }
    }
    let c_matrix = per_codeword
        .iter()
        .fold(CMatrix::zeros(shape.0, shape.1), |acc, m| acc + m)
        .unscale(k as f64);
    let violation = shuffle.max(diagonal);
    ConditionReport {
        c_matrix,
        per_codeword,
        shuffle_violation: shuffle,
        diagonal_violation: diagonal,
        violation,
        passed: violation <= tol,
    }
}

fn validate(code: &CodeSpace, errors: &ErrorSet) -> Result<CMatrix> {
    if code.is_empty() {
        return Err(Error::EmptyCode);
    }
    if errors.ops().is_empty() {
        return Err(Error::EmptyErrorSet);
    }
    if let Some(e) = errors.ops().iter().find(|e| e.j() != code.j()) {
        return Err(Error::DimensionMismatch {
            expected: code.j().dim(),
            found: e.dim(),
        });
    }
    Ok(code.embedding())
}

/// Detection condition `<i|E_a|j> = delta_ij C_a`.
pub fn detection_check(code: &CodeSpace, errors: &ErrorSet, tol: f64) -> Result<ConditionReport> {
    let w = validate(code, errors)?;
    let wd = w.adjoint();
    let products: Vec<_> = errors
        .ops()
        .iter()
        .enumerate()
        .map(|(a, e)| (a, 0, &wd * e.matrix() * &w))
        .collect();
    Ok(condition_report(code, &products, (errors.ops().len(), 1), tol))
}

/// Knill–Laflamme condition `<i|E_a^dag E_b|j> = delta_ij C_ab`.
pub fn kl_check(code: &CodeSpace, errors: &ErrorSet, tol: f64) -> Result<ConditionReport> {
    let w = validate(code, errors)?;
    let images: Vec<CMatrix> = errors.ops().iter().map(|e| e.matrix() * &w).collect();
    let n = images.len();
    let mut products = Vec::with_capacity(n * n);
    for (a, ea) in images.iter().enumerate() {
        for (b, eb) in images.iter().enumerate() {
            products.push((a, b, ea.adjoint() * eb));
        }
    }
    Ok(condition_report(code, &products, (n, n), tol))
}

/// Probability `1 - |<psi|U|psi>|^2` that `U` moves `psi` out of itself.
pub fn error_of_state(psi: &SpinState, u: &SpinOperator) -> Result<f64> {
    u.ensure_unitary()?;
    let v = apply(u, psi)?;
    let overlap = psi.amplitudes().dotc(&v);
    // |v - <psi|v> psi|^2 avoids cancellation in 1 - |overlap|^2.
    let residual = v - psi.amplitudes() * overlap;
    Ok(residual.norm_squared().clamp(0.0, 1.0))
}

/// Leading-order error `theta^2 Var(G)` for `exp(-i theta G)`, `|theta| <= 0.1`.
pub fn error_small_theta(psi: &SpinState, g: &SpinOperator, theta: f64) -> Result<f64> {
    if theta.abs() > SMALL_THETA_MAX {
        return Err(Error::InvalidInput(format!("|theta| = {} exceeds {SMALL_THETA_MAX}", theta.abs())));
    }
    Ok(theta * theta * expectation_and_variance(psi, g)?.variance)
}

/// `sum_{a,r} || (R_r E_a - <R_r E_a>) |psi> ||^2`, unweighted.
pub fn error_with_recovery(psi: &SpinState, errors: &ErrorSet, recoveries: &RecoverySet) -> Result<f64> {
    let mut total = 0.0;
    for e in errors.ops() {
        let after_error = apply(e, psi)?;
        for r in recoveries.ops() {
            if r.j() != psi.j() {
                return Err(Error::DimensionMismatch {
                    expected: psi.dim(),
                    found: r.dim(),
                });
            }
            let v = r.matrix() * &after_error;
            let mean = psi.amplitudes().dotc(&v);
            total += (v - psi.amplitudes() * mean).norm_squared();
        }
    }
    Ok(total)
}

/// Worst superposition of codewords under a small rotation.
#[derive(Debug, Clone)]
pub struct WorstCase {
    pub state: SpinState,
    pub error: f64,
}

const POLAR_STEPS: usize = 32;
const AZIMUTH_STEPS: usize = 64;
const ASCENT_GRAD_TOL: f64 = 1e-10;
const ASCENT_MAX_ITERS: usize = 20_000;

/// Variance of the projected generator on the code space:
/// `Var(c) = c^dag A c - (c^dag B c)^2`.
struct ProjectedVariance {
    b: CMatrix,
    a: CMatrix,
}

impl ProjectedVariance {
    fn value(&self, c: &CVector) -> f64 {
        let mean = c.dotc(&(&self.b * c)).re;
        (c.dotc(&(&self.a * c)).re - mean * mean).max(0.0)
    }

    /// Riemannian gradient on the unit sphere (with respect to conj(c)).
    fn gradient(&self, c: &CVector) -> CVector {
        let bc = &self.b * c;
        let mean = c.dotc(&bc).re;
        let g = &self.a * c - bc * Complex64::new(2.0 * mean, 0.0);
        let radial = c.dotc(&g);
        g - c * radial
    }
}

fn ascend(f: &ProjectedVariance, start: CVector) -> (CVector, f64) {
    let mut c = start;
    let mut value = f.value(&c);
    let mut step = 0.5;
    for _ in 0..ASCENT_MAX_ITERS {
        let g = f.gradient(&c);
        let gn = g.norm();
        if gn < ASCENT_GRAD_TOL {
            break;
        }
        let mut improved = false;
        for _ in 0..60 {
            let trial = (&c + &g * Complex64::new(step, 0.0)).normalize();
            let tv = f.value(&trial);
            // Armijo test; the directional derivative along g is 2 |g|^2.
            if tv >= value + 0.5 * step * gn * gn {
                c = trial;
                value = tv;
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (c, value)
}

/// Maximizes `theta^2 Var(G)` over normalized superpositions of codewords.
///
/// Every codeword pair is scanned on a 32 x 64 Bloch-sphere grid; the best
/// grid point of each pair seeds a gradient ascent over the full code space.
/// Ties resolve to the earliest candidate, so the result is deterministic.
pub fn max_error_over_code(code: &CodeSpace, g: &SpinOperator, theta: f64) -> Result<WorstCase> {
    if code.is_empty() {
        return Err(Error::EmptyCode);
    }
    if theta.abs() > SMALL_THETA_MAX {
        return Err(Error::InvalidInput(format!("|theta| = {} exceeds {SMALL_THETA_MAX}", theta.abs())));
    }
    g.ensure_hermitian()?;
    if g.j() != code.j() {
        return Err(Error::DimensionMismatch {
            expected: code.j().dim(),
            found: g.dim(),
        });
    }
    let w = code.embedding();
    let gw = g.matrix() * &w;
    let f = ProjectedVariance {
        b: w.adjoint() * &gw,
        a: gw.adjoint() * &gw,
    };
    let k = code.len();
    let unit = |i: usize| {
        let mut v = CVector::zeros(k);
        v[i] = Complex64::new(1.0, 0.0);
        v
    };

    let mut best = unit(0);
    let mut best_value = f.value(&best);
    let consider = |c: CVector, v: f64, best: &mut CVector, best_value: &mut f64| {
        if v > *best_value {
            *best = c;
            *best_value = v;
        }
    };
    for i in 1..k {
        let v = f.value(&unit(i));
        consider(unit(i), v, &mut best, &mut best_value);
    }
    for i in 0..k {
        for jdx in (i + 1)..k {
            let mut seed = unit(i);
            let mut seed_value = f.value(&seed);
            for p in 0..POLAR_STEPS {
                let polar = std::f64::consts::PI * p as f64 / (POLAR_STEPS - 1) as f64;
                for a in 0..AZIMUTH_STEPS {
                    let azimuth = std::f64::consts::TAU * a as f64 / AZIMUTH_STEPS as f64;
                    let mut c = CVector::zeros(k);
                    c[i] = Complex64::new((polar / 2.0).cos(), 0.0);
                    c[jdx] = Complex64::from_polar((polar / 2.0).sin(), azimuth);
                    let v = f.value(&c);
                    if v > seed_value {
                        seed = c;
                        seed_value = v;
                    }
                }
            }
            let (c, v) = ascend(&f, seed);
            consider(c, v, &mut best, &mut best_value);
        }
    }
    let (c, v) = ascend(&f, best.clone());
    consider(c, v, &mut best, &mut best_value);
    let state = SpinState::from_unnormalized(code.j(), &w * &best)?;
    Ok(WorstCase {
        state,
        error: theta * theta * best_value,
    })
}

/// AE codewords
/// `|0> = (|J,m1> + |J,-m1>)/sqrt2` and
/// `|1> = sqrt(1 - m1^2/m2^2)|J,0> + sqrt(m1^2/(2 m2^2))(|J,m2> + |J,-m2>)`.
pub fn ae_codewords(j: SpinJ, m1: u32, m2: u32) -> Result<CodeSpace> {
    if !j.is_integer() {
        return Err(Error::AeParameters("integer J".into()));
    }
    let jv = j.twice_j() / 2;
    if jv < 6 {
        return Err(Error::AeParameters(format!("J >= 6 (J = {jv})")));
    }
    if m1 < 3 {
        return Err(Error::AeParameters(format!("m1 >= 3 (m1 = {m1})")));
    }
    if m2 < m1 + 3 {
        return Err(Error::AeParameters(format!("m2 >= m1 + 3 (m1 = {m1}, m2 = {m2})")));
    }
    if m2 > jv {
        return Err(Error::AeParameters(format!("m2 <= J (m2 = {m2}, J = {jv})")));
    }
    let (m1i, m2i) = (m1 as i32, m2 as i32);
    let ratio = (m1 as f64 / m2 as f64).powi(2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| Complex64::new(x, 0.0);
    let zero = SpinState::from_components(j, &[(2 * m1i, r(s)), (-2 * m1i, r(s))])?;
    let one = SpinState::from_components(
        j,
        &[
            (0, r((1.0 - ratio).sqrt())),
            (2 * m2i, r((ratio / 2.0).sqrt())),
            (-2 * m2i, r((ratio / 2.0).sqrt())),
        ],
    )?;
    CodeSpace::new(j, vec![zero, one])
}
