use nalgebra::{Complex, DMatrix, DVector};

use crate::loss::MechanismRateTable;
use crate::{Error, Result};

type C64 = Complex<f64>;

/// Generator `B` of `dp/dτ = B p` with its eigendecomposition `B = V Λ V⁻¹`.
///
/// Eigenpairs are ordered by decreasing real part, so index 0 is the
/// stationary mode. Eigenvectors have unit 2-norm, with the phase fixed so
/// their largest component is real and positive.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub b: DMatrix<f64>,
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: DMatrix<C64>,
    pub inverse: DMatrix<C64>,
    pub n: usize,
}

/// Assemble `B` from rate tables: `b[(j, i)] = Σ Γ_{i→j}` and `b[(i, i)] = −Σ_j Γ_{i→j}`.
pub fn build_rate_matrix(tables: &[MechanismRateTable]) -> Result<RateMatrix> {
    let n = tables
        .first()
        .map(|t| t.n())
        .ok_or_else(|| Error::InvalidParameter("no rate tables supplied".into()))?;
    let mut rates = DMatrix::zeros(n, n);
    for t in tables {
        if t.n() != n || t.rates.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: t.n(),
            });
        }
        rates += &t.rates;
    }
    RateMatrix::from_rates(&rates)
}

impl RateMatrix {
    /// Build from a table with `rates[(i, j)] = Γ_{i→j}`; the diagonal is ignored.
    pub fn from_rates(rates: &DMatrix<f64>) -> Result<Self> {
        let n = rates.nrows();
        if n < 2 || rates.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n.max(2),
                found: rates.ncols(),
            });
        }
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let r = rates[(i, j)];
                    if !(r >= 0.0 && r.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "rate {i}->{j} must be finite and nonnegative, got {r}"
                        )));
                    }
                    b[(j, i)] = r;
                }
            }
        }
        for i in 0..n {
            let out: f64 = (0..n).filter(|&j| j != i).map(|j| b[(j, i)]).sum();
            b[(i, i)] = -out;
        }
        Self::from_generator(b)
    }

    fn from_generator(b: DMatrix<f64>) -> Result<Self> {
        let n = b.nrows();
        let scale = b.amax();
        if scale == 0.0 {
            return Err(Error::Eigendecomposition("generator has no transitions".into()));
        }
        let mut eigenvalues: Vec<C64> = b.complex_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
        let zero_tol = 1e-9 * eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
        let zeros = eigenvalues.iter().filter(|l| l.norm() <= zero_tol).count();
        if zeros != 1 {
            return Err(Error::Eigendecomposition(format!(
                "expected exactly one stationary mode, found {zeros}"
            )));
        }
        eigenvalues[0] = C64::new(0.0, 0.0);

        let bc = b.map(|x| C64::new(x, 0.0));
        let mut vectors = DMatrix::<C64>::zeros(n, n);
        let cluster_tol = 1e-8 * scale;
        let mut k = 0;
        while k < n {
            let mut end = k + 1;
            while end < n && (eigenvalues[end] - eigenvalues[k]).norm() <= cluster_tol {
                end += 1;
            }
            let lambda = eigenvalues[k];
            let shifted = &bc - DMatrix::<C64>::identity(n, n) * lambda;
            let svd = shifted.svd(false, true);
            let v_t = svd
                .v_t
                .ok_or_else(|| Error::Eigendecomposition("singular vectors unavailable".into()))?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
            for (slot, &row) in order.iter().take(end - k).enumerate() {
                let v: DVector<C64> = v_t.row(row).transpose().map(|z| z.conj());
                vectors.set_column(k + slot, &normalize_phase(v));
            }
            k = end;
        }

        let inverse = vectors
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Eigendecomposition("eigenvector matrix is singular".into()))?;
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
        let residual = (&bc * &vectors - &vectors * lambda)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if residual > 1e-7 * scale {
            return Err(Error::Eigendecomposition(format!(
                "eigenpair residual {residual:e} too large for rate scale {scale:e}"
            )));
        }
        Ok(Self {
            b,
            eigenvalues,
            eigenvectors: vectors,
            inverse,
            n,
        })
    }

    /// Mode coefficients `c = V⁻¹ p`.
    pub fn coefficients(&self, p: &[f64]) -> Result<DVector<C64>> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.len(),
            });
        }
        let pc = DVector::from_iterator(self.n, p.iter().map(|&x| C64::new(x, 0.0)));
        Ok(&self.inverse * pc)
    }

    /// Stationary distribution, normalized to unit 1-norm.
    pub fn stationary(&self) -> Vec<f64> {
        let v: Vec<f64> = self.eigenvectors.column(0).iter().map(|z| z.re).collect();
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    }

    /// Largest absolute column sum of `B`, which vanishes for a valid generator.
    pub fn column_sum_defect(&self) -> f64 {
        self.b.column_iter().map(|c| c.sum().abs()).fold(0.0, f64::max)
    }

    /// Slowest nonzero decay rate.
    pub fn slowest_rate(&self) -> f64 {
        -self.eigenvalues[1].re
    }
}

fn normalize_phase(v: DVector<C64>) -> DVector<C64> {
    let (imax, _) = v.iter().enumerate().fold(
        (0, -1.0),
        |acc, (k, z)| if z.norm() > acc.1 { (k, z.norm()) } else { acc },
    );
    let phase = v[imax].conj() / v[imax].norm();
    let w = v * phase;
    let norm = w.norm();
    w / C64::new(norm, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::Mechanism;
    use approx::assert_relative_eq;

    fn table(rates: DMatrix<f64>) -> MechanismRateTable {
        MechanismRateTable {
            mechanism: Mechanism::Capacitive,
            rates,
        }
    }

    #[test]
    fn two_level_eigenvalues() {
        let rm = build_rate_matrix(&[table(DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 7.0, 0.0]))]).unwrap();
        assert_eq!(rm.eigenvalues[0], C64::new(0.0, 0.0));
        assert_relative_eq!(rm.eigenvalues[1].re, -10.0, max_relative = 1e-12);
        let pi = rm.stationary();
        assert_relative_eq!(pi[0], 0.7, max_relative = 1e-12);
        assert_relative_eq!(pi[1], 0.3, max_relative = 1e-12);
        assert!(rm.column_sum_defect() == 0.0);
        assert_eq!(rm.b[(1, 0)], 3.0);
        assert_eq!(rm.b[(0, 1)], 7.0);
    }

    #[test]
    fn tables_add() {
        let a = table(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]));
        let b = table(DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 8.0, 0.0]));
        let rm = build_rate_matrix(&[a, b]).unwrap();
        assert_relative_eq!(rm.slowest_rate(), 15.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_mismatch_and_disconnected() {
        let a = table(DMatrix::zeros(2, 2));
        let b = table(DMatrix::zeros(3, 3));
        assert!(matches!(
            build_rate_matrix(&[a, b]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(build_rate_matrix(&[]).is_err());
        // two disconnected pairs have two stationary modes
        let mut r = DMatrix::zeros(4, 4);
        r[(0, 1)] = 1.0;
        r[(1, 0)] = 2.0;
        r[(2, 3)] = 1.0;
        r[(3, 2)] = 2.0;
        assert!(matches!(
            build_rate_matrix(&[table(r)]),
            Err(Error::Eigendecomposition(_))
        ));
    }

    #[test]
    fn decomposition_reconstructs_generator() {
        let r = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.2, 0.01, 5.0, 0.0, 0.7, 0.3, 0.1, 40.0, 0.0, 2.0, 0.02, 3.0, 90.0, 0.0,
            ],
        );
        let rm = RateMatrix::from_rates(&r).unwrap();
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(rm.eigenvalues.clone()));
        let rebuilt = &rm.eigenvectors * lambda * &rm.inverse;
        for i in 0..4 {
            for j in 0..4 {
                assert!((rebuilt[(i, j)].re - rm.b[(i, j)]).abs() < 1e-10 * 90.0);
                assert!(rebuilt[(i, j)].im.abs() < 1e-10 * 90.0);
            }
        }
        for k in 0..4 {
            assert_relative_eq!(rm.eigenvectors.column(k).norm(), 1.0, max_relative = 1e-12);
        }
    }
}
