//! Statistical distance between outcome distributions, quantum
//! distinguishability and Fisher information.

use crate::error::{Error, Result};
use crate::spin::{evolution, max_abs_diff, HermitianSpectrum, CMatrix, CVector, SpinJ, SpinOperator, SpinState};

const DIST_TOL: f64 = 1e-12;
const PROJECTOR_TOL: f64 = 1e-10;

/// A finite probability vector over measurement outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("distribution has no outcomes".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(Error::InvalidInput(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Distribution(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A complete set of orthogonal projectors.
#[derive(Debug, Clone)]
pub struct Projectors {
    j: SpinJ,
    ops: Vec<SpinOperator>,
}

impl Projectors {
    pub fn new(ops: Vec<SpinOperator>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::IncompleteProjectors("no projectors given".into()))?;
        let j = first.j();
        let n = j.dim();
        let mut total = CMatrix::zeros(n, n);
        for (a, pa) in ops.iter().enumerate() {
            if pa.j() != j {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: pa.dim(),
                });
            }
            if pa.hermitian_deviation() > PROJECTOR_TOL {
                return Err(Error::IncompleteProjectors(format!("projector {a} is not Hermitian")));
            }
            for (b, pb) in ops.iter().enumerate().skip(a) {
                let prod = pa.matrix() * pb.matrix();
                let target = if a == b { pa.matrix().clone() } else { CMatrix::zeros(n, n) };
                if max_abs_diff(&prod, &target) > PROJECTOR_TOL {
                    return Err(Error::IncompleteProjectors(if a == b {
                        format!("projector {a} is not idempotent")
                    } else {
                        format!("projectors {a} and {b} overlap")
                    }));
                }
            }
            total += pa.matrix();
        }
        if max_abs_diff(&total, &CMatrix::identity(n, n)) > PROJECTOR_TOL {
            return Err(Error::IncompleteProjectors("projectors do not sum to the identity".into()));
        }
        Ok(Projectors { j, ops })
    }

    /// Rank-one projectors onto the columns of a unitary matrix.
    pub fn from_unitary_columns(j: SpinJ, basis: &CMatrix) -> Result<Self> {
        let ops = basis
            .column_iter()
            .enumerate()
            .map(|(i, col)| SpinOperator::new(j, &col * col.adjoint(), format!("P{i}")))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops)
    }

    /// `{|psi><psi|, I - |psi><psi|}`, the measurement that best separates
    /// `psi` from any other state.
    pub fn optimal_pair(psi: &SpinState) -> Self {
        let p = psi.projector();
        let n = psi.dim();
        let q = SpinOperator::new(psi.j(), CMatrix::identity(n, n) - p.matrix(), "I-|psi><psi|")
            .expect("dimension matches by construction");
        Projectors {
            j: psi.j(),
            ops: vec![p, q],
        }
    }

    pub fn j(&self) -> SpinJ {
        self.j
    }

    pub fn ops(&self) -> &[SpinOperator] {
        &self.ops
    }
}

/// Outcome probabilities `<psi|P_i|psi>` of a projective measurement.
pub fn measurement_distribution(psi: &SpinState, basis: &Projectors) -> Result<Distribution> {
    if basis.j() != psi.j() {
        return Err(Error::DimensionMismatch {
            expected: basis.j().dim(),
            found: psi.dim(),
        });
    }
    let a = psi.amplitudes();
    let mut probs: Vec<f64> = basis
        .ops()
        .iter()
        .map(|p| a.dotc(&(p.matrix() * a)).re)
        .collect();
    // Values this small are indistinguishable from zero after rounding, and
    // the square root in the Bhattacharyya coefficient would inflate them.
    let floor = 8.0 * a.len() as f64 * f64::EPSILON;
    probs.iter_mut().for_each(|p| {
        if *p < floor {
            *p = 0.0;
        }
    });
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROJECTOR_TOL {
        return Err(Error::IncompleteProjectors(format!("outcome probabilities sum to {sum}")));
    }
    probs.iter_mut().for_each(|p| *p /= sum);
    Ok(Distribution(probs))
}

/// Angle `omega = arccos(B)` between two distributions on the probability
/// sphere, with `B = sum_m sqrt(P_m Q_m)` the Bhattacharyya coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticalDistance {
    pub omega: f64,
    pub bhattacharyya: f64,
}

pub fn statistical_distance(p: &Distribution, q: &Distribution) -> Result<StatisticalDistance> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let b: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a * b).sqrt())
        .sum::<f64>()
        .clamp(0.0, 1.0);
    Ok(StatisticalDistance {
        omega: b.acos(),
        bhattacharyya: b,
    })
}

/// Distinguishability angle of two pure states, `lambda = arccos |<psi|phi>|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinguishabilityReport {
    pub lambda: f64,
    pub sin_lambda: f64,
    /// Square root of the fidelity, `|<psi|phi>|`.
    pub cos_lambda: f64,
}

// sin(lambda) is taken from the component of `phi` orthogonal to `psi`, which
// keeps full relative precision when the states are nearly equal.
fn angle_between(psi: &CVector, phi: &CVector) -> DistinguishabilityReport {
    let overlap = psi.dotc(phi);
    let residual = phi - psi * overlap;
    let cos = overlap.norm().min(1.0);
    let sin = residual.norm().min(1.0);
    let lambda = sin.atan2(cos);
    DistinguishabilityReport {
        lambda,
        sin_lambda: lambda.sin(),
        cos_lambda: lambda.cos(),
    }
}

pub fn distinguishability(psi: &SpinState, phi: &SpinState) -> Result<DistinguishabilityReport> {
    if psi.j() != phi.j() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: phi.dim(),
        });
    }
    Ok(angle_between(psi.amplitudes(), phi.amplitudes()))
}

/// Classical Fisher information `sum_i (dP_i)^2 / P_i` of a one-parameter
/// family, given the probabilities and their derivatives at one point.
pub fn classical_fisher(probs: &Distribution, dprobs: &[f64]) -> Result<f64> {
    if dprobs.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            found: dprobs.len(),
        });
    }
    let sum: f64 = dprobs.iter().sum();
    if sum.abs() > PROJECTOR_TOL {
        return Err(Error::ProbabilityNotConserved { sum });
    }
    let mut f = 0.0;
    for (index, (&p, &dp)) in probs.probs().iter().zip(dprobs).enumerate() {
        if p == 0.0 {
            if dp != 0.0 {
                return Err(Error::SingularSupport { index, derivative: dp });
            }
            continue;
        }
        f += dp * dp / p;
    }
    Ok(f)
}

/// Quantum Fisher information `4 Var(G)` for the family `exp(-i theta G)|psi>`.
///
/// The variance is taken over the spectral weights `|<v_k|psi>|^2`, which is
/// exact for generators that are already diagonal.
pub fn qfi(psi: &SpinState, g: &SpinOperator) -> Result<f64> {
    if g.j() != psi.j() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: g.dim(),
        });
    }
    let spectrum = HermitianSpectrum::of(g)?;
    let a = psi.amplitudes();
    let norm2 = a.norm_squared();
    let weights: Vec<f64> = spectrum.vectors.column_iter().map(|v| v.dotc(a).norm_sqr() / norm2).collect();
    let mean: f64 = weights.iter().zip(spectrum.values.iter()).map(|(p, l)| p * l).sum();
    let var: f64 = weights.iter().zip(spectrum.values.iter()).map(|(p, l)| p * (l - mean).powi(2)).sum();
    Ok(4.0 * var)
}

/// Finite-difference estimate `4 (lambda(h) / h)^2`, where `lambda(h)` is the
/// distinguishability of `psi` from `exp(-i h G)|psi>`.
///
/// The distinguishability is even in `h` around zero, so a one-sided quotient
/// is used rather than a central difference.
pub fn qfi_finite_difference(psi: &SpinState, g: &SpinOperator, theta_step: f64) -> Result<f64> {
    if !(theta_step > 0.0 && theta_step <= 1e-2) {
        return Err(Error::StepOutOfRange(theta_step));
    }
    let u = evolution(g, theta_step)?;
    let moved = u.matrix() * psi.amplitudes();
    let lambda = angle_between(psi.amplitudes(), &moved).lambda;
    Ok(4.0 * (lambda / theta_step).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::build_spin_operators;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit() -> SpinJ {
        SpinJ::from_twice(1)
    }

    fn plus_minus_basis() -> Projectors {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        Projectors::from_unitary_columns(qubit(), &u).unwrap()
    }

    #[test]
    fn qubit_distributions() {
        let (alpha, beta) = (c(0.6, 0.0), c(0.0, 0.8));
        let psi = SpinState::from_components(qubit(), &[(1, alpha), (-1, beta)]).unwrap();
        let comp = Projectors::from_unitary_columns(qubit(), &CMatrix::identity(2, 2)).unwrap();
        let p = measurement_distribution(&psi, &comp).unwrap();
        assert_abs_diff_eq!(p.probs()[0], 0.36, epsilon = 1e-14);
        assert_abs_diff_eq!(p.probs()[1], 0.64, epsilon = 1e-14);

        let psi = SpinState::from_components(qubit(), &[(1, c(0.6, 0.0)), (-1, c(0.48, 0.64))]).unwrap();
        let re = (psi.amplitudes()[0].conj() * psi.amplitudes()[1]).re;
        let p = measurement_distribution(&psi, &plus_minus_basis()).unwrap();
        assert_abs_diff_eq!(p.probs()[0], (1.0 + 2.0 * re) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.probs()[1], (1.0 - 2.0 * re) / 2.0, epsilon = 1e-14);

        let j = SpinJ::integer(2);
        let psi = SpinState::basis(j, 4).unwrap();
        let p = measurement_distribution(&psi, &Projectors::from_unitary_columns(j, &CMatrix::identity(5, 5)).unwrap()).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn incomplete_projectors_rejected() {
        let j = SpinJ::integer(1);
        let p0 = SpinState::basis(j, 2).unwrap().projector();
        let p1 = SpinState::basis(j, 0).unwrap().projector();
        assert!(matches!(Projectors::new(vec![p0.clone(), p1.clone()]), Err(Error::IncompleteProjectors(_))));
        assert!(matches!(Projectors::new(vec![p0.clone(), p0]), Err(Error::IncompleteProjectors(_))));
        assert!(matches!(Projectors::new(vec![]), Err(Error::IncompleteProjectors(_))));
    }

    #[test]
    fn distance_examples() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let d = statistical_distance(&p, &p).unwrap();
        assert_abs_diff_eq!(d.omega, 0.0, epsilon = 1e-7);

        let a = Distribution::new(vec![1.0, 0.0]).unwrap();
        let b = Distribution::new(vec![0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(statistical_distance(&a, &b).unwrap().omega, FRAC_PI_2);

        // Reference from a direct numpy evaluation.
        let q = Distribution::new(vec![0.8, 0.2]).unwrap();
        let d = statistical_distance(&p, &q).unwrap();
        assert_abs_diff_eq!(d.bhattacharyya, 0.9486832980505138, epsilon = 1e-15);
        assert_abs_diff_eq!(d.omega, 0.3217505543966423, epsilon = 1e-14);

        let three = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(statistical_distance(&p, &three), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![]).is_err());
    }

    #[test]
    fn distinguishability_examples() {
        let j = SpinJ::integer(2);
        let psi = SpinState::from_components(j, &[(4, c(0.3, 0.1)), (0, c(-0.5, 0.4)), (-2, c(0.2, 0.0))]).unwrap();
        let d = distinguishability(&psi, &psi.with_global_phase(1.234)).unwrap();
        assert_abs_diff_eq!(d.lambda, 0.0, epsilon = 1e-15);

        let a = SpinState::basis(j, 4).unwrap();
        let b = SpinState::basis(j, -2).unwrap();
        assert_abs_diff_eq!(distinguishability(&a, &b).unwrap().lambda, FRAC_PI_2);

        let zero = SpinState::basis(qubit(), 1).unwrap();
        let plus = SpinState::from_components(qubit(), &[(1, c(1.0, 0.0)), (-1, c(1.0, 0.0))]).unwrap();
        let d = distinguishability(&zero, &plus).unwrap();
        assert_abs_diff_eq!(d.lambda, FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(d.sin_lambda.powi(2) + d.cos_lambda.powi(2), 1.0, epsilon = 1e-15);

        assert!(distinguishability(&zero, &a).is_err());
    }

    #[test]
    fn classical_fisher_examples() {
        let p = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(classical_fisher(&p, &[0.0, 0.0, 0.0]).unwrap(), 0.0);

        let half = Distribution::new(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(classical_fisher(&half, &[0.3, -0.3]).unwrap(), 4.0 * 0.09, epsilon = 1e-15);

        // P = cos^2(J t): dP/dt = -J sin(2 J t), so F = 4 J^2 at every t.
        for (jv, t) in [(1.0f64, 0.3), (2.0, 0.1), (3.5, 0.05)] {
            let pr = (jv * t).cos().powi(2);
            let dp = -jv * (2.0 * jv * t).sin();
            let dist = Distribution::new(vec![pr, 1.0 - pr]).unwrap();
            assert_relative_eq!(classical_fisher(&dist, &[dp, -dp]).unwrap(), 4.0 * jv * jv, max_relative = 1e-12);
        }

        let edge = Distribution::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(classical_fisher(&edge, &[0.1, -0.1]), Err(Error::SingularSupport { index: 1, .. })));
        assert!(matches!(classical_fisher(&half, &[0.1, 0.1]), Err(Error::ProbabilityNotConserved { .. })));
    }

    #[test]
    fn qfi_examples() {
        let j = SpinJ::integer(2);
        let ops = build_spin_operators(j);
        let eig = SpinState::basis(j, 2).unwrap();
        assert_abs_diff_eq!(qfi(&eig, &ops.jz).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(qfi_finite_difference(&eig, &ops.jz, 1e-4).unwrap(), 0.0, epsilon = 1e-12);

        let noon = SpinState::from_components(j, &[(4, c(1.0, 0.0)), (-4, c(1.0, 0.0))]).unwrap();
        assert_abs_diff_eq!(qfi(&noon, &ops.jz).unwrap(), 16.0, epsilon = 1e-12);
        assert_relative_eq!(qfi_finite_difference(&noon, &ops.jz, 1e-4).unwrap(), 16.0, max_relative = 1e-6);

        assert!(matches!(qfi_finite_difference(&noon, &ops.jz, 0.1), Err(Error::StepOutOfRange(_))));
        assert!(matches!(qfi_finite_difference(&noon, &ops.jz, 0.0), Err(Error::StepOutOfRange(_))));
    }
}
