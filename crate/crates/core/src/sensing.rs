//! Rotation sensing: the symmetrized spin covariance matrix, anti-coherence
//! checks, and construction of second-order anti-coherent sensor states.

use std::collections::BTreeSet;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{apply, build_spin_operators, CVector, RotationAxis, SpinJ, SpinState};

/// `J_ij = (<J_i J_j> + <J_j J_i>)/2 - <J_i><J_j>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix {
    matrix: Matrix3<f64>,
    means: Vector3<f64>,
}

impl FisherMatrix {
    pub fn j_matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// `(<Jx>, <Jy>, <Jz>)` of the generating state.
    pub fn means(&self) -> &Vector3<f64> {
        &self.means
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// QFI `4 u^T J u` for rotations about `u`.
    pub fn rotation_qfi(&self, u: &RotationAxis) -> f64 {
        4.0 * u.vector().dot(&(self.matrix * u.vector()))
    }

    /// Angle between `u` and `J u`; zero when `u` is an eigenvector.
    pub fn alignment_angle(&self, u: &RotationAxis) -> f64 {
        let ju = self.matrix * u.vector();
        let norm = ju.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let cos = u.vector().dot(&ju) / norm;
        let sin = u.vector().cross(&ju).norm() / norm;
        sin.atan2(cos)
    }
}

pub fn fisher_matrix(psi: &SpinState) -> FisherMatrix {
    let ops = build_spin_operators(psi.j());
    let images: Vec<CVector> = ops
        .cartesian()
        .iter()
        .map(|op| apply(op, psi).expect("operators built for the state's spin"))
        .collect();
    // Centered images (J_i - <J_i>) psi give the covariance without
    // cancellation; dividing by <psi|psi> absorbs normalization rounding.
    let norm2 = psi.amplitudes().norm_squared();
    let means = Vector3::from_fn(|i, _| psi.amplitudes().dotc(&images[i]).re / norm2);
    let centered: Vec<CVector> = images
        .iter()
        .zip(means.iter())
        .map(|(v, &m)| v - psi.amplitudes() * Complex64::new(m, 0.0))
        .collect();
    let mut matrix = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let v = centered[i].dotc(&centered[j]).re / norm2;
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    FisherMatrix { matrix, means }
}

/// QFI for the rotation `exp(-i theta u.J)`.
pub fn rotation_qfi(psi: &SpinState, u: &RotationAxis) -> f64 {
    fisher_matrix(psi).rotation_qfi(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnticoherenceReport {
    pub order1: bool,
    pub order2: bool,
    pub max_first_moment: f64,
    pub max_matrix_deviation: f64,
}

pub fn anticoherence_report(psi: &SpinState, tol: f64) -> AnticoherenceReport {
    let f = fisher_matrix(psi);
    let max_first_moment = f.means.amax();
    let target = Matrix3::identity() * (psi.j().casimir() / 3.0);
    let max_matrix_deviation = (f.matrix - target).amax();
    AnticoherenceReport {
        order1: max_first_moment <= tol,
        order2: max_matrix_deviation <= tol,
        max_first_moment,
        max_matrix_deviation,
    }
}

/// `(|J,J> + |J,-J>)/sqrt2`.
pub fn noon_state(j: SpinJ) -> Result<SpinState> {
    if j.twice_j() == 0 {
        return Err(Error::InvalidInput("NOON state needs J >= 1/2".into()));
    }
    let tj = j.twice_j() as i32;
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    SpinState::from_components(j, &[(tj, a), (-tj, a)])
}

/// Shells of the symmetric ansatz `a_0|J,0> + sum_m a_m (|J,m> + |J,-m>)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SupportSpecDoc", into = "SupportSpecDoc")]
pub struct SupportSpec {
    j: SpinJ,
    shells: BTreeSet<u32>,
    include_zero: bool,
}

impl SupportSpec {
    /// A zero among `shells` is the same as `include_zero = true`.
    pub fn new(j: SpinJ, shells: impl IntoIterator<Item = u32>, include_zero: bool) -> Result<Self> {
        if !j.is_integer() {
            return Err(Error::InvalidInput(format!("symmetric shells need integer J, got J = {j}")));
        }
        let jv = j.twice_j() / 2;
        let mut include_zero = include_zero;
        let mut set = BTreeSet::new();
        for m in shells {
            if m > jv {
                return Err(Error::InvalidInput(format!("shell {m} exceeds J = {jv}")));
            }
            if m == 0 {
                include_zero = true;
            } else {
                set.insert(m);
            }
        }
        if set.is_empty() && !include_zero {
            return Err(Error::InvalidInput("support is empty".into()));
        }
        Ok(SupportSpec {
            j,
            shells: set,
            include_zero,
        })
    }

    pub fn j(&self) -> SpinJ {
        self.j
    }

    /// Positive shells in increasing order.
    pub fn shells(&self) -> impl Iterator<Item = u32> + '_ {
        self.shells.iter().copied()
    }

    pub fn include_zero(&self) -> bool {
        self.include_zero
    }

    /// All shells, zero first when present.
    fn all_shells(&self) -> Vec<u32> {
        self.include_zero.then_some(0).into_iter().chain(self.shells()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportSpecDoc {
    pub twice_j: u32,
    pub support: Vec<u32>,
    #[serde(default)]
    pub include_zero: bool,
}

impl TryFrom<SupportSpecDoc> for SupportSpec {
    type Error = Error;

    fn try_from(doc: SupportSpecDoc) -> Result<Self> {
        SupportSpec::new(SpinJ::from_twice(doc.twice_j), doc.support, doc.include_zero)
    }
}

impl From<SupportSpec> for SupportSpecDoc {
    fn from(s: SupportSpec) -> Self {
        SupportSpecDoc {
            twice_j: s.j.twice_j(),
            support: s.shells.iter().copied().collect(),
            include_zero: s.include_zero,
        }
    }
}

/// Smallest distance between distinct signed shell values `{+-m} u {0}`;
/// `None` when only one value is present.
pub fn min_shell_gap(spec: &SupportSpec) -> Option<u32> {
    let mut values: Vec<i64> = spec.shells().flat_map(|m| [-(m as i64), m as i64]).collect();
    if spec.include_zero {
        values.push(0);
    }
    values.sort_unstable();
    values.windows(2).map(|w| (w[1] - w[0]) as u32).min()
}

/// Shells `J, J-3, J-6, ...` down to 3, plus zero: gap 3 and feasible for
/// every integer `J >= 3`.
pub fn default_support(j: SpinJ) -> Result<SupportSpec> {
    if !j.is_integer() || j.twice_j() < 6 {
        return Err(Error::InvalidInput(format!("default support needs integer J >= 3, got J = {j}")));
    }
    let jv = j.twice_j() / 2;
    let shells = (0..).map(|k| jv as i64 - 3 * k).take_while(|&m| m >= 3).map(|m| m as u32);
    SupportSpec::new(j, shells, true)
}

/// Second-order anti-coherent state on the given support.
///
/// Shell masses `p_m` (`|a_0|^2` for zero, `2|a_m|^2` otherwise) satisfy
/// `sum p = 1` and `sum p m^2 = J(J+1)/3`; remaining freedom is fixed by
/// maximum entropy, which gives `p_m ~ exp(lambda m^2)`. Shells two apart
/// alternate between real and imaginary amplitudes so that `<J_+^2>`
/// cancels.
pub fn construct_anticoherent(spec: &SupportSpec) -> Result<SpinState> {
    let j = spec.j();
    let target = j.casimir() / 3.0;
    let shells = spec.all_shells();
    let squares: Vec<f64> = shells.iter().map(|&m| (m as f64).powi(2)).collect();
    let (min, max) = squares
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if target < min || target > max {
        return Err(Error::InfeasibleSupport { target, min, max });
    }
    let imaginary = phase_pattern(spec)?;
    let masses = max_entropy_masses(&squares, target);

    let mut components = Vec::with_capacity(2 * shells.len());
    for ((&m, &p), &imag) in shells.iter().zip(&masses).zip(&imaginary) {
        let unit = if imag { Complex64::i() } else { Complex64::new(1.0, 0.0) };
        if m == 0 {
            components.push((0, unit * p.sqrt()));
        } else {
            let a = unit * (p / 2.0).sqrt();
            components.push((2 * m as i32, a));
            components.push((-2 * m as i32, a));
        }
    }
    SpinState::from_components(j, &components)
}

/// Which shells (in `all_shells` order) carry imaginary amplitudes.
fn phase_pattern(spec: &SupportSpec) -> Result<Vec<bool>> {
    let shells = spec.all_shells();
    if spec.shells.contains(&1) {
        return Err(Error::Spacing(
            "shell 1 pairs |J,1> with |J,-1>, two apart, and no phase choice cancels the coupling".into(),
        ));
    }
    let mut imaginary: Vec<bool> = Vec::with_capacity(shells.len());
    for (idx, &m) in shells.iter().enumerate() {
        if idx > 0 && m - shells[idx - 1] <= 1 {
            return Err(Error::Spacing(format!("shells {} and {m} are adjacent", shells[idx - 1])));
        }
        let partner = idx > 0 && m - shells[idx - 1] == 2;
        imaginary.push(partner && !imaginary[idx - 1]);
    }
    Ok(imaginary)
}

/// `p_i ~ exp(lambda x_i)` with `sum p x = target`, for `target` in
/// `[min x, max x]`.
fn max_entropy_masses(x: &[f64], target: f64) -> Vec<f64> {
    let scale = x.iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0);
    let y: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let t = target / scale;
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

    let concentrate = |edge: f64| -> Vec<f64> {
        let hits = y.iter().filter(|&&v| v == edge).count() as f64;
        y.iter().map(|&v| if v == edge { 1.0 / hits } else { 0.0 }).collect()
    };
    if hi == lo || t >= hi {
        return concentrate(hi);
    }
    if t <= lo {
        return concentrate(lo);
    }

    let gibbs = |lambda: f64| -> Vec<f64> {
        let shift = if lambda >= 0.0 { hi } else { lo };
        let w: Vec<f64> = y.iter().map(|&v| (lambda * (v - shift)).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|wi| wi / z).collect()
    };
    let mean = |p: &[f64]| p.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();

    let (mut a, mut b) = (-1.0, 1.0);
    while mean(&gibbs(a)) > t {
        a *= 2.0;
    }
    while mean(&gibbs(b)) < t {
        b *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if mean(&gibbs(mid)) < t {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut p = gibbs(0.5 * (a + b));
    polish_second_moment(&mut p, &y, t);
    p
}

/// Moves mass between the extreme shells so the second moment hits `t`
/// to rounding, keeping the total fixed.
fn polish_second_moment(p: &mut [f64], y: &[f64], t: f64) {
    let (imin, imax) = (0..y.len()).fold((0, 0), |(a, b), i| {
        (if y[i] < y[a] { i } else { a }, if y[i] > y[b] { i } else { b })
    });
    let residual = t - p.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let delta = residual / (y[imax] - y[imin]);
    if p[imax] + delta >= 0.0 && p[imin] - delta >= 0.0 {
        p[imax] += delta;
        p[imin] -= delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::ae_codewords;
    use crate::metrics::qfi;
    use crate::spin::expectation_and_variance;
    use approx::assert_abs_diff_eq;

    fn jz2(psi: &SpinState) -> f64 {
        let jz = build_spin_operators(psi.j()).jz;
        let m = expectation_and_variance(psi, &jz).unwrap();
        m.variance + m.mean * m.mean
    }

    #[test]
    fn noon_matrix() {
        for jv in [2u32, 5] {
            let j = SpinJ::integer(jv);
            let f = fisher_matrix(&noon_state(j).unwrap());
            let expected = Matrix3::from_diagonal(&Vector3::new(jv as f64 / 2.0, jv as f64 / 2.0, (jv * jv) as f64));
            assert!((f.j_matrix() - expected).amax() < 1e-12);
        }
        let f = fisher_matrix(&noon_state(SpinJ::integer(5)).unwrap());
        assert_abs_diff_eq!(f.rotation_qfi(&RotationAxis::Z), 100.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.rotation_qfi(&RotationAxis::X), 10.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.alignment_angle(&RotationAxis::Z), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coherent_state_matrix() {
        let j = SpinJ::integer(4);
        let f = fisher_matrix(&SpinState::basis(j, 8).unwrap());
        let expected = Matrix3::from_diagonal(&Vector3::new(2.0, 2.0, 0.0));
        assert!((f.j_matrix() - expected).amax() < 1e-12);
        assert_abs_diff_eq!(f.means()[2], 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.trace(), j.casimir() - 16.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_qfi_matches_generator_variance() {
        let j = SpinJ::from_twice(5);
        let psi = SpinState::from_components(
            j,
            &[(5, Complex64::new(0.3, 0.1)), (1, Complex64::new(-0.2, 0.7)), (-3, Complex64::new(0.5, 0.0))],
        )
        .unwrap();
        let ops = build_spin_operators(j);
        for u in [RotationAxis::X, RotationAxis::from_angles(1.1, -0.4), RotationAxis::from_angles(2.0, 2.5)] {
            assert_abs_diff_eq!(rotation_qfi(&psi, &u), qfi(&psi, &ops.along(&u)).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn anticoherence_examples() {
        let top = SpinState::basis(SpinJ::integer(3), 6).unwrap();
        assert!(!anticoherence_report(&top, 1e-10).order1);

        let code = ae_codewords(SpinJ::integer(6), 3, 6).unwrap();
        let r = anticoherence_report(&code.codewords()[0], 1e-10);
        assert!(r.order1);
        assert!(!r.order2);

        let noon = noon_state(SpinJ::from_twice(7)).unwrap();
        assert!(anticoherence_report(&noon, 1e-12).order1);
    }

    #[test]
    fn noon_examples() {
        let half = noon_state(SpinJ::from_twice(1)).unwrap();
        assert_abs_diff_eq!(half.amplitudes()[0].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-16);
        let j2 = noon_state(SpinJ::integer(2)).unwrap();
        let jz = build_spin_operators(SpinJ::integer(2)).jz;
        assert_abs_diff_eq!(expectation_and_variance(&j2, &jz).unwrap().variance, 4.0, epsilon = 1e-14);
        assert!(noon_state(SpinJ::integer(0)).is_err());
    }

    #[test]
    fn construct_three() {
        let spec = SupportSpec::new(SpinJ::integer(3), [0, 3], false).unwrap();
        let psi = construct_anticoherent(&spec).unwrap();
        assert_abs_diff_eq!(psi.amplitude(0).norm_sqr(), 5.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.amplitude(6).norm_sqr(), 2.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(jz2(&psi), 4.0, epsilon = 1e-12);
        let r = anticoherence_report(&psi, 1e-10);
        assert!(r.order1 && r.order2, "{r:?}");
    }

    #[test]
    fn construct_two_uses_imaginary_shell() {
        let spec = SupportSpec::new(SpinJ::integer(2), [2], true).unwrap();
        let psi = construct_anticoherent(&spec).unwrap();
        assert_abs_diff_eq!(psi.amplitude(4).norm_sqr(), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.amplitude(0).norm_sqr(), 0.5, epsilon = 1e-14);
        assert_eq!(psi.amplitude(4).re, 0.0);
        assert!(anticoherence_report(&psi, 1e-10).order2);
    }

    #[test]
    fn alternating_chain() {
        // Shells 0, 2, 4 at J = 4: real, imaginary, real.
        let spec = SupportSpec::new(SpinJ::integer(4), [0, 2, 4], false).unwrap();
        let psi = construct_anticoherent(&spec).unwrap();
        assert_eq!(psi.amplitude(4).re, 0.0);
        assert_eq!(psi.amplitude(8).im, 0.0);
        let r = anticoherence_report(&psi, 1e-10);
        assert!(r.order2, "{r:?}");
    }

    #[test]
    fn construct_errors() {
        let j3 = SpinJ::integer(3);
        let infeasible = SupportSpec::new(j3, [0, 1], false).unwrap();
        assert!(matches!(construct_anticoherent(&infeasible), Err(Error::InfeasibleSupport { .. })));
        let only_three = SupportSpec::new(j3, [3], false).unwrap();
        assert!(matches!(construct_anticoherent(&only_three), Err(Error::InfeasibleSupport { .. })));
        let adjacent = SupportSpec::new(SpinJ::integer(4), [0, 3, 4], false).unwrap();
        assert!(matches!(construct_anticoherent(&adjacent), Err(Error::Spacing(_))));
        let with_one = SupportSpec::new(SpinJ::integer(4), [1, 4], false).unwrap();
        assert!(matches!(construct_anticoherent(&with_one), Err(Error::Spacing(_))));
        assert!(SupportSpec::new(j3, [4], true).is_err());
        assert!(SupportSpec::new(SpinJ::from_twice(5), [1], true).is_err());
        assert!(SupportSpec::new(j3, [], false).is_err());
    }

    #[test]
    fn single_shell_at_target() {
        // J = 3 with only shell 2: 2^2 = 4 = J(J+1)/3 exactly.
        let spec = SupportSpec::new(SpinJ::integer(3), [2], false).unwrap();
        let psi = construct_anticoherent(&spec).unwrap();
        assert_abs_diff_eq!(psi.amplitude(4).norm_sqr(), 0.5, epsilon = 1e-15);
        assert!(anticoherence_report(&psi, 1e-10).order2);
    }

    #[test]
    fn max_entropy_is_unique_solution_for_two_shells() {
        let p = max_entropy_masses(&[0.0, 9.0], 4.0);
        assert_abs_diff_eq!(p[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 4.0 / 9.0, epsilon = 1e-15);
        let p = max_entropy_masses(&[0.0, 9.0, 36.0], 14.0);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1] * 9.0 + p[2] * 36.0, 14.0, epsilon = 1e-12);
        assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn gap_examples() {
        let j3 = SpinJ::integer(3);
        assert_eq!(min_shell_gap(&SupportSpec::new(j3, [0, 3], false).unwrap()), Some(3));
        assert_eq!(min_shell_gap(&SupportSpec::new(j3, [0, 2], false).unwrap()), Some(2));
        assert_eq!(min_shell_gap(&SupportSpec::new(j3, [3], false).unwrap()), Some(6));
        assert_eq!(min_shell_gap(&SupportSpec::new(j3, [], true).unwrap()), None);
    }

    #[test]
    fn default_support_sweep() {
        for jv in 3..=10 {
            let spec = default_support(SpinJ::integer(jv)).unwrap();
            assert!(min_shell_gap(&spec).unwrap() >= 3);
            let psi = construct_anticoherent(&spec).unwrap();
            assert!(anticoherence_report(&psi, 1e-9).order2, "J = {jv}");
        }
        assert!(default_support(SpinJ::integer(2)).is_err());
    }

    #[test]
    fn support_json() {
        let spec: SupportSpec = serde_json::from_str(r#"{"twice_j": 6, "support": [0, 3], "include_zero": false}"#).unwrap();
        assert!(spec.include_zero());
        assert_eq!(spec.shells().collect::<Vec<_>>(), vec![3]);
        assert!(serde_json::from_str::<SupportSpec>(r#"{"twice_j": 6, "support": [5]}"#).is_err());
    }
}
