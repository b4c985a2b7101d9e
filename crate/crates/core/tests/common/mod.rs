#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use spinsense::sensing::SupportSpec;
use spinsense::{CMatrix, CVector, RotationAxis, SpinJ, SpinOperator, SpinState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_state(rng: &mut ChaCha8Rng, j: SpinJ) -> SpinState {
    let v = CVector::from_fn(j.dim(), |_, _| gaussian(rng));
    SpinState::from_unnormalized(j, v).unwrap()
}

/// Hermitian matrix with Gaussian entries.
pub fn random_hermitian(rng: &mut ChaCha8Rng, j: SpinJ) -> SpinOperator {
    let n = j.dim();
    let a: CMatrix = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let h = (&a + a.adjoint()).scale(0.5);
    SpinOperator::new(j, h, "G").unwrap()
}

/// Hermitian matrix rescaled to spectral norm `norm`.
pub fn hermitian_with_norm(rng: &mut ChaCha8Rng, j: SpinJ, norm: f64) -> SpinOperator {
    let g = random_hermitian(rng, j);
    let r = g.spectral_radius().unwrap();
    SpinOperator::new(j, g.matrix().scale(norm / r), "G").unwrap()
}

/// Unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a: CMatrix = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    a.qr().q()
}

pub fn random_axis(rng: &mut ChaCha8Rng) -> RotationAxis {
    let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
    RotationAxis::normalized(v[0], v[1], v[2]).unwrap()
}

/// `a_0|J,0> + sum_m a_m (|J,m> + |J,-m>)` on a random set of shells with
/// random complex coefficients.
pub fn random_symmetric_state(rng: &mut ChaCha8Rng, j: SpinJ) -> (SpinState, SupportSpec) {
    let jv = j.twice_j() / 2;
    loop {
        let shells: Vec<u32> = (0..=jv).filter(|_| rng.random_bool(0.5)).collect();
        if shells.is_empty() {
            continue;
        }
        let mut components = Vec::new();
        for &m in &shells {
            let a = gaussian(rng);
            components.push((2 * m as i32, a));
            if m > 0 {
                components.push((-2 * m as i32, a));
            }
        }
        let psi = SpinState::from_components(j, &components).unwrap();
        return (psi, SupportSpec::new(j, shells, false).unwrap());
    }
}
