//! Fluxonium spectrum in a truncated harmonic-oscillator basis.
//!
//! The circuit Hamiltonian is
//!
//! ```text
//! H = 4 E_C n² − E_J cos φ + ½ E_L (φ − 2π Φ_ext/Φ0)²
//! ```
//!
//! Writing `φ = φ' + 2π Φ_ext/Φ0`, the charging and inductive terms form a
//! harmonic oscillator in `φ'` with plasma frequency `sqrt(8 E_C E_L)`. The
//! Josephson term is evaluated as a matrix function of the truncated `φ'`
//! operator through its eigendecomposition, so `cos` and `sin(φ/2)` carry no
//! series-truncation error. All energies are linear frequencies in Hz.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::{Error, Result};

/// Circuit energies of the fluxonium, each expressed as a frequency `E/h` in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxoniumParams {
    pub ej: f64,
    pub ec: f64,
    pub el: f64,
}

impl FluxoniumParams {
    pub fn new(ej: f64, ec: f64, el: f64) -> Result<Self> {
        let params = Self { ej, ec, el };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("ej", self.ej), ("ec", self.ec), ("el", self.el)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Plasma frequency of the linear LC sub-circuit, Hz.
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.ec * self.el).sqrt()
    }

    /// Total shunt capacitance `C_Σ = e² / (2 h E_C)`, F.
    pub fn c_sigma(&self) -> f64 {
        use crate::constants::{ELEMENTARY_CHARGE, PLANCK};
        ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * PLANCK * self.ec)
    }

    /// Zero-point phase fluctuation `(2 E_C / E_L)^{1/4}` of the LC oscillator.
    fn phase_zpf(&self) -> f64 {
        (2.0 * self.ec / self.el).powf(0.25)
    }
}

/// External flux bias in units of the flux quantum.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FluxBias(pub f64);

impl FluxBias {
    pub fn new(phi_ext: f64) -> Result<Self> {
        if !phi_ext.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "flux bias must be finite, got {phi_ext}"
            )));
        }
        Ok(Self(phi_ext))
    }

    pub fn phi_ext(self) -> f64 {
        self.0
    }

    /// Equivalent bias folded into `[0, 0.5]` using periodicity and reflection.
    pub fn folded(self) -> Self {
        let mut x = self.0.rem_euclid(1.0);
        if x > 0.5 {
            x = 1.0 - x;
        }
        Self(x)
    }
}

/// Truncation control for [`diagonalize_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConfig {
    pub initial_dim: usize,
    pub step: usize,
    pub max_dim: usize,
    /// Largest accepted relative change of any retained energy between two
    /// successive basis sizes.
    pub tolerance: f64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            initial_dim: 120,
            step: 20,
            max_dim: 400,
            tolerance: 1e-9,
        }
    }
}

/// Eigenenergies and matrix elements of the lowest `n_levels` states.
///
/// `phi_elem` holds elements of the inductive phase `φ̂ − 2π Φ_ext/Φ0`. Its
/// off-diagonal elements coincide with those of the junction phase `φ̂`, and
/// its diagonal is what enters the flux derivative of the energies.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub params: FluxoniumParams,
    pub bias: FluxBias,
    /// Ascending eigenenergies, Hz.
    pub energies: Vec<f64>,
    /// `⟨i|n̂|j⟩`, purely imaginary in the real eigenbasis.
    pub n_elem: DMatrix<Complex<f64>>,
    pub phi_elem: DMatrix<f64>,
    /// `⟨i|sin(φ̂/2)|j⟩` for the junction phase.
    pub sin_half_elem: DMatrix<f64>,
    pub basis_dim: usize,
    pub n_levels: usize,
}

impl Spectrum {
    pub fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.n_levels {
            Err(Error::IndexOutOfRange {
                index: level,
                len: self.n_levels,
            })
        } else {
            Ok(())
        }
    }

    /// `E_j − E_i` in Hz.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    /// `|⟨i|n̂|j⟩|²`
    pub fn n_sq(&self, i: usize, j: usize) -> f64 {
        self.n_elem[(i, j)].norm_sqr()
    }

    pub fn phi_sq(&self, i: usize, j: usize) -> f64 {
        self.phi_elem[(i, j)].powi(2)
    }

    pub fn sin_half_sq(&self, i: usize, j: usize) -> f64 {
        self.sin_half_elem[(i, j)].powi(2)
    }

    /// Qubit frequency `ω01/2π`, Hz.
    pub fn omega01(&self) -> f64 {
        self.transition(0, 1)
    }

    /// Copy restricted to the lowest `n_levels` states.
    pub fn truncated(&self, n_levels: usize) -> Result<Spectrum> {
        if n_levels < 2 || n_levels > self.n_levels {
            return Err(Error::IndexOutOfRange {
                index: n_levels,
                len: self.n_levels + 1,
            });
        }
        let n = n_levels;
        Ok(Spectrum {
            params: self.params,
            bias: self.bias,
            energies: self.energies[..n].to_vec(),
            n_elem: self.n_elem.view((0, 0), (n, n)).into_owned(),
            phi_elem: self.phi_elem.view((0, 0), (n, n)).into_owned(),
            sin_half_elem: self.sin_half_elem.view((0, 0), (n, n)).into_owned(),
            basis_dim: self.basis_dim,
            n_levels: n,
        })
    }
}

/// Operators of the truncated oscillator basis that do not depend on flux.
struct OscillatorBasis {
    dim: usize,
    /// Eigenvalues of the truncated `φ'` operator.
    phase_nodes: DVector<f64>,
    /// Eigenvectors of the truncated `φ'` operator (columns).
    phase_vectors: DMatrix<f64>,
    /// `φ'` in the oscillator basis.
    phase: DMatrix<f64>,
    /// Real antisymmetric `A` with `n̂ = i A`.
    charge: DMatrix<f64>,
}

impl OscillatorBasis {
    fn new(params: &FluxoniumParams, dim: usize) -> Result<Self> {
        let phase_zpf = params.phase_zpf();
        let charge_zpf = 0.5 / phase_zpf;
        let mut phase = DMatrix::zeros(dim, dim);
        let mut charge = DMatrix::zeros(dim, dim);
        for k in 1..dim {
            let s = (k as f64).sqrt();
            phase[(k - 1, k)] = phase_zpf * s;
            phase[(k, k - 1)] = phase_zpf * s;
            // A = n_zpf (a† − a)
            charge[(k, k - 1)] = charge_zpf * s;
            charge[(k - 1, k)] = -charge_zpf * s;
        }
        let eig = SymmetricEigen::try_new(phase.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigendecomposition("phase operator".into()))?;
        Ok(Self {
            dim,
            phase_nodes: eig.eigenvalues,
            phase_vectors: eig.eigenvectors,
            phase,
            charge,
        })
    }

    /// Matrix function `f(φ')` of the truncated phase operator.
    fn phase_function(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let u = &self.phase_vectors;
        let mut scaled = u.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.phase_nodes[k]);
        }
        scaled * u.transpose()
    }
}

/// Eigenvectors (as columns, lowest `n_levels`) and energies at one basis size.
struct Solution {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

fn solve_in_basis(
    params: &FluxoniumParams,
    bias: FluxBias,
    basis: &OscillatorBasis,
    n_levels: usize,
) -> Result<Solution> {
    let dim = basis.dim;
    let shift = 2.0 * PI * bias.0;
    let mut h = basis.phase_function(|x| -params.ej * (x + shift).cos());
    let wp = params.plasma_frequency();
    for k in 0..dim {
        h[(k, k)] += wp * (k as f64 + 0.5);
    }
    let eig =
        SymmetricEigen::try_new(h, f64::EPSILON, 0).ok_or_else(|| Error::Eigendecomposition("Hamiltonian".into()))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::zeros(dim, n_levels);
    let mut energies = Vec::with_capacity(n_levels);
    for (col, &idx) in order.iter().take(n_levels).enumerate() {
        energies.push(eig.eigenvalues[idx]);
        let mut v = eig.eigenvectors.column(idx).into_owned();
        // Fix the arbitrary sign so results are reproducible.
        let (imax, _) = v.iamax_full();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    Ok(Solution { energies, vectors })
}

fn build_spectrum(
    params: FluxoniumParams,
    bias: FluxBias,
    basis: &OscillatorBasis,
    sol: Solution,
    n_levels: usize,
) -> Spectrum {
    let v = &sol.vectors;
    let vt = v.transpose();
    // Projections are (anti)symmetrized so |M_ij| = |M_ji| holds exactly.
    let charge = &vt * &basis.charge * v;
    let charge = (&charge - charge.transpose()) * 0.5;
    let phi_elem = &vt * &basis.phase * v;
    let phi_elem = (&phi_elem + phi_elem.transpose()) * 0.5;
    let shift = 2.0 * PI * bias.0;
    let sin_half = basis.phase_function(|x| (0.5 * (x + shift)).sin());
    let sin_half_elem = &vt * sin_half * v;
    let sin_half_elem = (&sin_half_elem + sin_half_elem.transpose()) * 0.5;
    let n_elem = charge.map(|a| Complex::new(0.0, a));
    Spectrum {
        params,
        bias,
        energies: sol.energies,
        n_elem,
        phi_elem,
        sin_half_elem,
        basis_dim: basis.dim,
        n_levels,
    }
}

/// Diagonalize with the default basis policy.
pub fn diagonalize(params: FluxoniumParams, bias: FluxBias, n_levels: usize) -> Result<Spectrum> {
    diagonalize_with(params, bias, n_levels, &BasisConfig::default())
}

/// Diagonalize, growing the basis until every retained energy is stable.
///
/// Two successive basis sizes must agree to `config.tolerance` relative to
/// `max(|E_i|, sqrt(8 E_C E_L))`; the result from the larger basis is kept.
pub fn diagonalize_with(
    params: FluxoniumParams,
    bias: FluxBias,
    n_levels: usize,
    config: &BasisConfig,
) -> Result<Spectrum> {
    params.validate()?;
    FluxBias::new(bias.0)?;
    if n_levels < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 levels, got {n_levels}"
        )));
    }
    if config.initial_dim < n_levels + 2 || config.step == 0 {
        return Err(Error::InvalidParameter(format!(
            "basis dimension {} too small for {n_levels} levels",
            config.initial_dim
        )));
    }
    let scale_floor = params.plasma_frequency();
    let mut dim = config.initial_dim;
    let basis = OscillatorBasis::new(&params, dim)?;
    let mut previous = solve_in_basis(&params, bias, &basis, n_levels)?;
    let mut last_delta = f64::INFINITY;
    while dim + config.step <= config.max_dim {
        dim += config.step;
        let basis = OscillatorBasis::new(&params, dim)?;
        let current = solve_in_basis(&params, bias, &basis, n_levels)?;
        last_delta = previous
            .energies
            .iter()
            .zip(&current.energies)
            .map(|(a, b)| (a - b).abs() / b.abs().max(scale_floor))
            .fold(0.0, f64::max);
        if last_delta < config.tolerance {
            return Ok(build_spectrum(params, bias, &basis, current, n_levels));
        }
        previous = current;
    }
    Err(Error::ConvergenceFailure {
        basis_dim: dim,
        last_delta,
    })
}

/// Signed transition frequency `E_j − E_i`, Hz.
pub fn transition_frequency(spec: &Spectrum, i: usize, j: usize) -> Result<f64> {
    spec.check_level(i)?;
    spec.check_level(j)?;
    Ok(spec.transition(i, j))
}

/// `dω01/dΦ_ext` in rad/s per Φ0 from the Hellmann–Feynman theorem applied to
/// the inductive term: `∂E_k/∂(Φ_ext/Φ0) = −2π E_L ⟨k|φ̂ − 2πΦ_ext/Φ0|k⟩`.
pub fn flux_dispersion(params: FluxoniumParams, bias: FluxBias) -> Result<f64> {
    let spec = diagonalize(params, bias, 2)?;
    Ok(dispersion_from_spectrum(&spec))
}

pub(crate) fn dispersion_from_spectrum(spec: &Spectrum) -> f64 {
    let d_f01 = -2.0 * PI * spec.params.el * (spec.phi_elem[(1, 1)] - spec.phi_elem[(0, 0)]);
    2.0 * PI * d_f01
}

/// One spectrum per flux point, in grid order. Points are solved in parallel.
pub fn spectrum_vs_flux(params: FluxoniumParams, flux_grid: &[FluxBias], n_levels: usize) -> Result<Vec<Spectrum>> {
    if flux_grid.is_empty() {
        return Err(Error::InvalidParameter("empty flux grid".into()));
    }
    flux_grid
        .par_iter()
        .enumerate()
        .map(|(k, &bias)| diagonalize(params, bias, n_levels).map_err(|e| Error::at_grid(k, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn b1() -> FluxoniumParams {
        FluxoniumParams::new(3.15e9, 1.04e9, 0.50e9).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FluxoniumParams::new(0.0, 1e9, 1e9).is_err());
        assert!(FluxoniumParams::new(1e9, f64::NAN, 1e9).is_err());
        assert!(diagonalize(b1(), FluxBias(0.5), 1).is_err());
        assert!(diagonalize(b1(), FluxBias(f64::INFINITY), 4).is_err());
    }

    #[test]
    fn qubit_frequencies_at_half_flux() {
        let a1 = FluxoniumParams::new(3.54e9, 1.05e9, 0.53e9).unwrap();
        let f = diagonalize(a1, FluxBias(0.5), 4).unwrap().omega01();
        assert!((f / 0.362e9 - 1.0).abs() < 0.02, "A1 f01 = {f}");
        let f = diagonalize(b1(), FluxBias(0.5), 4).unwrap().omega01();
        assert!((f / 0.427e9 - 1.0).abs() < 0.02, "B1 f01 = {f}");
        let a5 = FluxoniumParams::new(7.11e9, 0.95e9, 0.53e9).unwrap();
        let f = diagonalize(a5, FluxBias(0.5), 4).unwrap().omega01();
        assert!((f / 0.042e9 - 1.0).abs() < 0.05, "A5 f01 = {f}");
    }

    #[test]
    fn harmonic_limit() {
        // E_J → 0 with E_C = E_L leaves the LC ladder.
        let p = FluxoniumParams::new(1e-3, 1.0e9, 1.0e9).unwrap();
        let spec = diagonalize(p, FluxBias(0.3), 5).unwrap();
        let wp = (8.0f64).sqrt() * 1.0e9;
        for k in 0..5 {
            assert_relative_eq!(spec.energies[k], wp * (k as f64 + 0.5), max_relative = 1e-9);
        }
    }

    #[test]
    fn periodicity_and_reflection() {
        let p = b1();
        let a = diagonalize(p, FluxBias(0.3), 6).unwrap();
        let b = diagonalize(p, FluxBias(1.3), 6).unwrap();
        let c = diagonalize(p, FluxBias(-0.3), 6).unwrap();
        let d = diagonalize(p, FluxBias(0.7), 6).unwrap();
        for k in 0..6 {
            for other in [&b, &c, &d] {
                assert_relative_eq!(a.energies[k], other.energies[k], max_relative = 1e-10);
            }
            for l in 0..6 {
                for other in [&b, &c, &d] {
                    assert!((a.n_sq(k, l) - other.n_sq(k, l)).abs() < 1e-9);
                    assert!((a.phi_sq(k, l) - other.phi_sq(k, l)).abs() < 1e-9);
                    assert!((a.sin_half_sq(k, l) - other.sin_half_sq(k, l)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn half_flux_symmetry() {
        let spec = diagonalize(b1(), FluxBias(0.5), 6).unwrap();
        for k in 0..6 {
            assert!(spec.n_elem[(k, k)].norm() < 1e-14);
            assert!(spec.phi_elem[(k, k)].abs() < 1e-8);
        }
        // Parity forbids 0 <-> 2.
        assert!(spec.n_sq(0, 2) < 1e-16);
        // ⟨0|φ|1⟩ is largest at the sweet spot.
        let off = diagonalize(b1(), FluxBias(0.45), 2).unwrap();
        assert!(spec.phi_sq(0, 1) > off.phi_sq(0, 1));
    }

    #[test]
    fn matrix_elements_are_magnitude_symmetric() {
        let spec = diagonalize(b1(), FluxBias(0.37), 6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_relative_eq!(spec.n_sq(i, j), spec.n_sq(j, i), epsilon = 1e-14);
                assert_relative_eq!(spec.sin_half_sq(i, j), spec.sin_half_sq(j, i), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn converged_against_larger_basis() {
        let p = b1();
        let spec = diagonalize(p, FluxBias(0.21), 6).unwrap();
        let cfg = BasisConfig {
            initial_dim: spec.basis_dim * 2,
            ..BasisConfig::default()
        };
        let big = diagonalize_with(p, FluxBias(0.21), 6, &cfg).unwrap();
        for k in 0..6 {
            assert_relative_eq!(spec.energies[k], big.energies[k], max_relative = 1e-9);
        }
    }

    #[test]
    fn convergence_failure_reports_delta() {
        let cfg = BasisConfig {
            initial_dim: 10,
            step: 2,
            max_dim: 14,
            tolerance: 1e-15,
        };
        match diagonalize_with(b1(), FluxBias(0.2), 4, &cfg) {
            Err(Error::ConvergenceFailure { last_delta, .. }) => assert!(last_delta > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Independent route to sin(φ/2): the real block matrix
    /// `[[0, −A], [A, 0]]` exponentiates to `[[cos A, −sin A], [sin A, cos A]]`.
    #[test]
    fn sin_half_matches_block_exponential() {
        let p = b1();
        let bias = FluxBias(0.31);
        let basis = OscillatorBasis::new(&p, 80).unwrap();
        let sol = solve_in_basis(&p, bias, &basis, 6).unwrap();
        let v = sol.vectors.clone();
        let spec = build_spectrum(p, bias, &basis, sol, 6);

        let n = basis.dim;
        let mut a = basis.phase.clone();
        for k in 0..n {
            a[(k, k)] += 2.0 * PI * bias.0;
        }
        a *= 0.5;
        let mut block = DMatrix::zeros(2 * n, 2 * n);
        block.view_mut((n, 0), (n, n)).copy_from(&a);
        block.view_mut((0, n), (n, n)).copy_from(&(-&a));
        let e = block.exp();
        let sin_a = e.view((n, 0), (n, n)).into_owned();
        let oracle = v.transpose() * sin_a * &v;
        for i in 0..6 {
            for j in 0..6 {
                assert!(
                    (oracle[(i, j)] - spec.sin_half_elem[(i, j)]).abs() < 1e-9,
                    "({i},{j}) {} vs {}",
                    oracle[(i, j)],
                    spec.sin_half_elem[(i, j)]
                );
            }
        }
    }

    #[test]
    fn dispersion_vanishes_at_symmetry_points() {
        let p = b1();
        let scale = 2.0 * PI * p.el * 2.0 * PI;
        assert!(flux_dispersion(p, FluxBias(0.5)).unwrap().abs() < 1e-6 * scale);
        assert!(flux_dispersion(p, FluxBias(0.0)).unwrap().abs() < 1e-6 * scale);
    }

    #[test]
    fn dispersion_matches_central_difference() {
        let p = b1();
        let h = 1e-4;
        for phi in [0.45, 0.3, 0.12] {
            let hf = flux_dispersion(p, FluxBias(phi)).unwrap();
            let up = diagonalize(p, FluxBias(phi + h), 2).unwrap().omega01();
            let dn = diagonalize(p, FluxBias(phi - h), 2).unwrap().omega01();
            let fd = 2.0 * PI * (up - dn) / (2.0 * h);
            assert_relative_eq!(hf, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn transition_frequency_antisymmetry() {
        let spec = diagonalize(b1(), FluxBias(0.5), 3).unwrap();
        assert_eq!(transition_frequency(&spec, 0, 0).unwrap(), 0.0);
        let up = transition_frequency(&spec, 0, 1).unwrap();
        let dn = transition_frequency(&spec, 1, 0).unwrap();
        assert_eq!(up, -dn);
        assert!(up > 0.0);
        assert!(matches!(
            transition_frequency(&spec, 0, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn sweep_preserves_order_and_mirror_symmetry() {
        let p = b1();
        let grid: Vec<FluxBias> = (0..=10).map(|k| FluxBias(0.4 + 0.02 * k as f64)).collect();
        let sweep = spectrum_vs_flux(p, &grid, 4).unwrap();
        for (k, s) in sweep.iter().enumerate() {
            assert_eq!(s.bias, grid[k]);
            let mirror = &sweep[10 - k];
            for l in 0..4 {
                assert_relative_eq!(s.energies[l], mirror.energies[l], max_relative = 1e-10);
            }
        }
        let single = spectrum_vs_flux(p, &grid[..1], 4).unwrap();
        assert_eq!(single[0].energies, diagonalize(p, grid[0], 4).unwrap().energies);
        assert!(spectrum_vs_flux(p, &[], 4).is_err());
    }

    #[test]
    fn f01_decreases_toward_half_flux() {
        let grid: Vec<FluxBias> = (0..=25).map(|k| FluxBias(0.02 * k as f64)).collect();
        let sweep = spectrum_vs_flux(b1(), &grid, 2).unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].omega01() < w[0].omega01());
        }
        assert!((sweep.last().unwrap().omega01() / 0.427e9 - 1.0).abs() < 0.02);
    }
}
