//! Seeded generators of random symplectic transforms and physical
//! covariance matrices, for property checks and oracle comparisons.

use nalgebra::DMatrix;
use rand::Rng;

use crate::symplectic::{CovMatrix, SymplecticTransform};

fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}

/// Random single-mode symplectic: rotation, squeeze, rotation.
pub fn random_local<R: Rng + ?Sized>(rng: &mut R, max_squeeze: f64) -> SymplecticTransform {
    let r = rng.random_range(-max_squeeze..=max_squeeze);
    let sq = SymplecticTransform::squeeze(r).expect("bounded squeeze");
    let m = rotation(rng.random_range(0.0..std::f64::consts::TAU))
        * sq.matrix()
        * rotation(rng.random_range(0.0..std::f64::consts::TAU));
    SymplecticTransform::new(m).expect("product of symplectic matrices")
}

/// Random n-mode symplectic built from local squeezers and beam splitters
/// on every mode pair.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, n_modes: usize) -> SymplecticTransform {
    let mut total = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for _ in 0..2 {
        for k in 0..n_modes {
            let local = random_local(rng, 1.0);
            let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
            m.view_mut((2 * k, 2 * k), (2, 2)).copy_from(local.matrix());
            total = m * total;
        }
        for i in 0..n_modes {
            for j in (i + 1)..n_modes {
                let bs = SymplecticTransform::beam_splitter(rng.random_range(0.0..=1.0))
                    .expect("eta in range")
                    .embed_two_mode(i, j, n_modes)
                    .expect("valid modes");
                total = bs.matrix() * total;
            }
        }
    }
    SymplecticTransform::new(total).expect("product of symplectic matrices")
}

/// Random physical covariance matrix `S diag(ν) S^T` with symplectic
/// eigenvalues drawn from `[1/2, 3/2]`.
pub fn random_cov<R: Rng + ?Sized>(rng: &mut R, n_modes: usize) -> CovMatrix {
    let nus: Vec<f64> = (0..n_modes)
        .flat_map(|_| {
            let nu = 0.5 + rng.random_range(0.0..1.0);
            [nu, nu]
        })
        .collect();
    let thermal = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(nus));
    let s = random_symplectic(rng, n_modes);
    let m = s.matrix() * thermal * s.matrix().transpose();
    CovMatrix::new(m).expect("symplectic congruence of a thermal state")
}
