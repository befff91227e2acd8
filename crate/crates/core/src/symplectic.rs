//! Covariance matrices, symplectic transforms and the symplectic spectrum.

use nalgebra::{DMatrix, Schur};

use crate::error::{check_squeeze, check_unit_interval, Error, Result};

/// Largest accepted |r| for squeezing parameters.
pub const MAX_SQUEEZE: f64 = 20.0;

/// Vacuum quadrature variance.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Slack on the uncertainty bound nu >= 1/2.
pub const PHYSICAL_TOL: f64 = 1e-9;

const SYMPLECTIC_TOL: f64 = 1e-10;

/// Canonical symplectic form for `n_modes` modes: block diagonal with
/// `[[0, 1], [-1, 0]]` on every mode.
pub fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut om = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        om[(2 * k, 2 * k + 1)] = 1.0;
        om[(2 * k + 1, 2 * k)] = -1.0;
    }
    om
}

pub(crate) fn modes_of(m: &DMatrix<f64>) -> Result<usize> {
    let (rows, cols) = m.shape();
    if rows != cols || rows == 0 || rows % 2 != 0 {
        return Err(Error::BadShape { rows, cols });
    }
    Ok(rows / 2)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symplectic eigenvalues of a positive definite `2n x 2n` matrix, read off
/// as |Im λ| of the eigenvalues of `Ω m`. Each value shows up twice in the
/// raw spectrum; one copy of each pair is returned, sorted ascending.
///
/// Works on anything positive definite, including partially transposed
/// covariance matrices.
pub fn symplectic_spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = modes_of(m)?;
    let product = omega(n) * m;
    let schur = Schur::try_new(product, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let mut values: Vec<f64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.im.abs())
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    values.sort_by(f64::total_cmp);
    Ok(values.into_iter().step_by(2).collect())
}

/// Second-moment matrix of an n-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
}

impl TryFrom<DMatrix<f64>> for CovMatrix {
    type Error = Error;

    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        CovMatrix::new(m)
    }
}

impl From<CovMatrix> for DMatrix<f64> {
    fn from(v: CovMatrix) -> Self {
        v.entries
    }
}

impl CovMatrix {
    /// Symmetrizes `m` and checks that it describes a physical state.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        modes_of(&m)?;
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("covariance matrix entry"));
        }
        let v = Self::from_symmetrized(&m);
        let nu_min = v.min_symplectic_eigenvalue()?;
        if nu_min < VACUUM_VARIANCE - PHYSICAL_TOL {
            return Err(Error::Unphysical(nu_min));
        }
        Ok(v)
    }

    /// Used by operations that preserve physicality by construction.
    pub(crate) fn from_symmetrized(m: &DMatrix<f64>) -> Self {
        Self {
            entries: symmetrize(m),
        }
    }

    /// Single-mode vacuum, `(1/2) I`.
    pub fn vacuum() -> Self {
        Self {
            entries: DMatrix::identity(2, 2) * VACUUM_VARIANCE,
        }
    }

    /// `n` uncorrelated vacuum modes.
    pub fn vacuum_modes(n_modes: usize) -> Self {
        Self {
            entries: DMatrix::identity(2 * n_modes, 2 * n_modes) * VACUUM_VARIANCE,
        }
    }

    /// Squeezed vacuum `(1/2) diag(e^r, e^-r)`.
    pub fn squeezed_vacuum(r: f64) -> Result<Self> {
        check_squeeze(r)?;
        Ok(Self {
            entries: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                0.5 * r.exp(),
                0.5 * (-r).exp(),
            ])),
        })
    }

    /// Two-mode squeezed vacuum with `cosh(r)/2` on the diagonal and
    /// `+sinh(r)/2` (q) and `-sinh(r)/2` (p) cross correlations.
    pub fn tmsv(r: f64) -> Result<Self> {
        check_squeeze(r)?;
        let c = 0.5 * r.cosh();
        let s = 0.5 * r.sinh();
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            c, 0.0, s, 0.0,
            0.0, c, 0.0, -s,
            s, 0.0, c, 0.0,
            0.0, -s, 0.0, c,
        ]);
        Ok(Self { entries: m })
    }

    /// Isotropic thermal state `nu I` on one mode.
    pub fn thermal(nu: f64) -> Result<Self> {
        Self::new(DMatrix::identity(2, 2) * nu)
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn symplectic_spectrum(&self) -> Result<Vec<f64>> {
        symplectic_spectrum(&self.entries)
    }

    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        if self.entries.clone().cholesky().is_none() {
            // Not positive definite, so nothing physical. Report the most
            // negative eigenvalue instead of a symplectic one.
            let lowest = self
                .entries
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            return Ok(lowest);
        }
        Ok(self.symplectic_spectrum()?[0])
    }

    pub fn is_physical(&self) -> bool {
        self.min_symplectic_eigenvalue()
            .map(|nu| nu >= VACUUM_VARIANCE - PHYSICAL_TOL)
            .unwrap_or(false)
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    /// Congruence `S V S^T`.
    pub fn transform(&self, s: &SymplecticTransform) -> Result<Self> {
        if s.n_modes() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: s.n_modes(),
            });
        }
        let m = &s.entries * &self.entries * s.entries.transpose();
        Ok(Self::from_symmetrized(&m))
    }

    /// Direct sum `self ⊕ other`, modes of `self` first.
    pub fn tensor(&self, other: &CovMatrix) -> Self {
        let (a, b) = (self.entries.nrows(), other.entries.nrows());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        m.view_mut((a, a), (b, b)).copy_from(&other.entries);
        Self { entries: m }
    }

    /// Reduced state on `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let n = self.n_modes();
        if keep.is_empty() {
            return Err(Error::EmptyModeList);
        }
        for (pos, &k) in keep.iter().enumerate() {
            if k >= n {
                return Err(Error::ModeOutOfRange {
                    index: k,
                    n_modes: n,
                });
            }
            if keep[..pos].contains(&k) {
                return Err(Error::DuplicateMode(k));
            }
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])]);
        Ok(Self { entries: m })
    }

    /// 2x2 block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> nalgebra::Matrix2<f64> {
        let v = &self.entries;
        nalgebra::Matrix2::new(
            v[(2 * i, 2 * j)],
            v[(2 * i, 2 * j + 1)],
            v[(2 * i + 1, 2 * j)],
            v[(2 * i + 1, 2 * j + 1)],
        )
    }

    pub fn max_abs_diff(&self, other: &CovMatrix) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    (a - b).amax()
}

/// Real linear map on quadratures that preserves `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    entries: DMatrix<f64>,
}

impl SymplecticTransform {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = modes_of(&m)?;
        let om = omega(n);
        let dev = max_abs_diff(&(&m * &om * m.transpose()), &om);
        if dev.is_nan() || dev > SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic(dev));
        }
        Ok(Self { entries: m })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            entries: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Beam splitter of transmissivity `eta` on two modes:
    ///
    /// ```text
    /// [ √η I    √(1-η) I ]
    /// [ √(1-η) I   -√η I ]
    /// ```
    ///
    /// Orthogonal and symmetric, hence its own inverse.
    pub fn beam_splitter(eta: f64) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        let t = eta.sqrt();
        let r = (1.0 - eta).sqrt();
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            t, 0.0, r, 0.0,
            0.0, t, 0.0, r,
            r, 0.0, -t, 0.0,
            0.0, r, 0.0, -t,
        ]);
        Ok(Self { entries: m })
    }

    /// Single-mode squeezer `diag(e^r, e^-r)`.
    pub fn squeeze(r: f64) -> Result<Self> {
        check_squeeze(r)?;
        Ok(Self {
            entries: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                r.exp(),
                (-r).exp(),
            ])),
        })
    }

    /// Block-diagonal `self ⊕ other`.
    pub fn direct_sum(&self, other: &SymplecticTransform) -> Self {
        let (a, b) = (self.entries.nrows(), other.entries.nrows());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        m.view_mut((a, a), (b, b)).copy_from(&other.entries);
        Self { entries: m }
    }

    /// Product `self · other`, i.e. `other` acts first.
    pub fn then_after(&self, other: &SymplecticTransform) -> Result<Self> {
        if self.n_modes() != other.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: other.n_modes(),
            });
        }
        Ok(Self {
            entries: &self.entries * &other.entries,
        })
    }

    /// Places a two-mode transform on modes `i` and `j` of an `n`-mode
    /// register, acting as the identity elsewhere. Local mode 0 maps to `i`.
    pub fn embed_two_mode(&self, i: usize, j: usize, n_modes: usize) -> Result<Self> {
        if self.n_modes() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.n_modes(),
            });
        }
        for k in [i, j] {
            if k >= n_modes {
                return Err(Error::ModeOutOfRange { index: k, n_modes });
            }
        }
        if i == j {
            return Err(Error::DuplicateMode(i));
        }
        let idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1];
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for (a, &ga) in idx.iter().enumerate() {
            for (b, &gb) in idx.iter().enumerate() {
                m[(ga, gb)] = self.entries[(a, b)];
            }
        }
        Ok(Self { entries: m })
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Max deviation of `S Ω S^T` from `Ω`.
    pub fn symplectic_defect(&self) -> f64 {
        let om = omega(self.n_modes());
        max_abs_diff(&(&self.entries * &om * self.entries.transpose()), &om)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_is_half_identity() {
        let v = CovMatrix::vacuum();
        assert_eq!(v.matrix(), &(DMatrix::identity(2, 2) * 0.5));
        assert_abs_diff_eq!(v.symplectic_spectrum().unwrap()[0], 0.5, epsilon = 1e-14);
        assert_eq!(v.tensor(&v), CovMatrix::tmsv(0.0).unwrap());
    }

    #[test]
    fn squeezed_vacuum_values() {
        assert_eq!(
            CovMatrix::squeezed_vacuum(0.0).unwrap(),
            CovMatrix::vacuum()
        );
        let v = CovMatrix::squeezed_vacuum(1.3).unwrap();
        // 0.5 e^{±1.3}
        assert_abs_diff_eq!(v.get(0, 0), 1.834_648_333_809_622, epsilon = 1e-12);
        assert_abs_diff_eq!(v.get(1, 1), 0.136_265_896_517_006_3, epsilon = 1e-12);
        for r in [-3.0, -0.4, 0.0, 1.3, 7.5] {
            let v = CovMatrix::squeezed_vacuum(r).unwrap();
            assert_abs_diff_eq!(
                v.determinant(),
                0.25,
                epsilon = 1e-12 * v.get(0, 0).max(1.0)
            );
            assert!(v.is_physical());
        }
        assert!(matches!(
            CovMatrix::squeezed_vacuum(20.5),
            Err(Error::SqueezeOverflow(_))
        ));
        assert!(CovMatrix::squeezed_vacuum(f64::NAN).is_err());
    }

    #[test]
    fn tmsv_entries_and_purity() {
        let v = CovMatrix::tmsv(1.3).unwrap();
        assert_abs_diff_eq!(v.get(0, 0), 0.985_457_115_163_314_2, epsilon = 1e-12);
        assert_abs_diff_eq!(v.get(0, 2), 0.849_191_218_646_307_9, epsilon = 1e-12);
        assert_abs_diff_eq!(v.get(1, 3), -0.849_191_218_646_307_9, epsilon = 1e-12);
        assert_abs_diff_eq!(v.determinant(), 1.0 / 16.0, epsilon = 1e-12);
        assert!(v.is_physical());
        assert!(CovMatrix::tmsv(-21.0).is_err());
    }

    #[test]
    fn beam_splitter_properties() {
        let b1 = SymplecticTransform::beam_splitter(1.0).unwrap();
        let expected =
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert_eq!(b1.matrix(), &expected);

        let b = SymplecticTransform::beam_splitter(0.37).unwrap();
        let sq = b.matrix() * b.matrix();
        assert!(max_abs_diff(&sq, &DMatrix::identity(4, 4)) < 1e-12);
        assert!(b.symplectic_defect() < 1e-12);

        for bad in [-0.1, 1.5, f64::NAN] {
            assert!(matches!(
                SymplecticTransform::beam_splitter(bad),
                Err(Error::OutOfRange { .. })
            ));
        }
    }

    #[test]
    fn squeeze_transform_basics() {
        assert_eq!(
            SymplecticTransform::squeeze(0.0).unwrap(),
            SymplecticTransform::identity(1)
        );
        let r = 0.8;
        let s = SymplecticTransform::squeeze(r / 2.0).unwrap();
        let v = CovMatrix::vacuum().transform(&s).unwrap();
        assert!(v.max_abs_diff(&CovMatrix::squeezed_vacuum(r).unwrap()) < 1e-14);

        let inv = SymplecticTransform::squeeze(-r).unwrap();
        let prod = inv
            .then_after(&SymplecticTransform::squeeze(r).unwrap())
            .unwrap();
        assert!(max_abs_diff(prod.matrix(), &DMatrix::identity(2, 2)) < 1e-14);
        assert!(SymplecticTransform::squeeze(25.0).is_err());
    }

    #[test]
    fn transform_checks_dimensions() {
        let v = CovMatrix::vacuum();
        let b = SymplecticTransform::beam_splitter(0.5).unwrap();
        assert!(matches!(
            v.transform(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        let id = SymplecticTransform::identity(1);
        assert_eq!(v.transform(&id).unwrap(), v);
    }

    #[test]
    fn new_rejects_unphysical_and_symmetrizes() {
        let bad = DMatrix::identity(2, 2) * 0.3;
        assert!(matches!(CovMatrix::new(bad), Err(Error::Unphysical(_))));
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(CovMatrix::new(not_pd), Err(Error::Unphysical(_))));
        assert!(matches!(
            CovMatrix::new(DMatrix::zeros(3, 3)),
            Err(Error::BadShape { .. })
        ));

        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.3, 1.0]);
        let v = CovMatrix::new(skew).unwrap();
        assert_eq!(v.get(0, 1), v.get(1, 0));
        assert_abs_diff_eq!(v.get(0, 1), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_cases() {
        let v = CovMatrix::tmsv(0.9).unwrap();
        assert_eq!(v.partial_trace(&[0, 1]).unwrap(), v);
        let reduced = v.partial_trace(&[1]).unwrap();
        let thermal = CovMatrix::thermal(0.5 * 0.9_f64.cosh()).unwrap();
        assert!(reduced.max_abs_diff(&thermal) < 1e-15);

        let swapped = v.partial_trace(&[1, 0]).unwrap();
        assert_eq!(swapped.get(0, 0), v.get(2, 2));
        assert_eq!(swapped.get(1, 3), v.get(3, 1));

        assert_eq!(v.partial_trace(&[]), Err(Error::EmptyModeList));
        assert!(matches!(
            v.partial_trace(&[2]),
            Err(Error::ModeOutOfRange { .. })
        ));
        assert_eq!(v.partial_trace(&[1, 1]), Err(Error::DuplicateMode(1)));
    }

    #[test]
    fn tensor_then_trace_recovers_parts() {
        let a = CovMatrix::tmsv(0.4).unwrap();
        let b = CovMatrix::squeezed_vacuum(-0.7).unwrap();
        let ab = a.tensor(&b);
        assert_eq!(ab.n_modes(), 3);
        assert_eq!(ab.partial_trace(&[0, 1]).unwrap(), a);
        assert_eq!(ab.partial_trace(&[2]).unwrap(), b);
        assert_abs_diff_eq!(
            ab.determinant(),
            a.determinant() * b.determinant(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn embedding() {
        let b = SymplecticTransform::beam_splitter(0.3).unwrap();
        assert_eq!(b.embed_two_mode(0, 1, 2).unwrap(), b);
        let e = b.embed_two_mode(2, 0, 3).unwrap();
        assert!(e.symplectic_defect() < 1e-12);
        // local mode 0 is register mode 2
        assert_abs_diff_eq!(e.matrix()[(4, 4)], 0.3_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e.matrix()[(0, 0)], -(0.3_f64.sqrt()), epsilon = 1e-15);
        assert_eq!(e.matrix()[(2, 2)], 1.0);
        assert_eq!(b.embed_two_mode(1, 1, 3), Err(Error::DuplicateMode(1)));
        assert!(b.embed_two_mode(0, 3, 3).is_err());
        assert!(SymplecticTransform::squeeze(0.1)
            .unwrap()
            .embed_two_mode(0, 1, 2)
            .is_err());
    }

    #[test]
    fn embedded_splitter_leaves_untouched_block() {
        // c1, c2 uncorrelated with each other; BS on (c1, ancilla).
        let c1 = CovMatrix::squeezed_vacuum(0.6).unwrap();
        let c2 = CovMatrix::thermal(1.7).unwrap();
        let anc = CovMatrix::squeezed_vacuum(-1.1).unwrap();
        let reg = c1.tensor(&c2).tensor(&anc);
        let bs = SymplecticTransform::beam_splitter(0.42)
            .unwrap()
            .embed_two_mode(0, 2, 3)
            .unwrap();
        let out = reg.transform(&bs).unwrap();
        assert!(out.partial_trace(&[1]).unwrap().max_abs_diff(&c2) < 1e-15);
        assert!(out.is_physical());
    }

    #[test]
    fn spectrum_of_pure_states() {
        for r in [-1.2, 0.0, 0.5, 2.0] {
            let s = CovMatrix::squeezed_vacuum(r)
                .unwrap()
                .symplectic_spectrum()
                .unwrap();
            assert_eq!(s.len(), 1);
            assert_abs_diff_eq!(s[0], 0.5, epsilon = 1e-12);
            let t = CovMatrix::tmsv(r).unwrap().symplectic_spectrum().unwrap();
            assert_eq!(t.len(), 2);
            assert_abs_diff_eq!(t[0], 0.5, epsilon = 1e-10);
            assert_abs_diff_eq!(t[1], 0.5, epsilon = 1e-10);
        }
        let th = CovMatrix::thermal(2.25).unwrap();
        assert_abs_diff_eq!(th.symplectic_spectrum().unwrap()[0], 2.25, epsilon = 1e-12);
    }
}
