#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlcs_core::linalg::{Complex64, DensityMatrix, Matrix, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw via Box–Muller.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Haar-random pure state on `n` qubits.
pub fn haar_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let amps = (0..1 << n)
        .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
        .collect();
    StateVector::normalized(amps).unwrap()
}

/// Random full-rank density matrix from a Ginibre matrix.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let d = 1 << n;
    let g = Matrix::from_vec(
        d,
        (0..d * d)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect(),
    )
    .unwrap();
    let mut m = g.matmul(&g.adjoint()).unwrap();
    let t = m.trace().re;
    m.scale_real_in_place(1.0 / t);
    DensityMatrix::new(m.hermitian_part()).unwrap()
}
