//! Brute-force single-mode computations in a truncated Fock basis.
//!
//! Everything here is dimensionless: a bath mode is displaced by
//! `η = α (X − X′) / sqrt(ħ)`. Operators are built as exponentials of their
//! truncated generators through Hermitian eigendecompositions, and the
//! overlap `B = tr sqrt(sqrt(ρ₁) ρ₂ sqrt(ρ₁))` is evaluated literally. None of
//! the closed forms of [`crate::observables`] is used to produce the Fock
//! numbers; they only appear as the comparison targets in
//! [`validate_closed_forms`].

use std::f64::consts::PI;
use std::fmt;

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{alpha_gaussian, Amplitude};
use crate::observables::{log_b_term, log_gamma_term};
use crate::{Error, Result};

/// Population allowed to fall outside a truncated basis.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Eigenvalues of a density matrix above `-EIGEN_CLAMP` are clamped to zero
/// before square roots are taken.
pub const EIGEN_CLAMP: f64 = 1e-10;

/// Default pass threshold of [`validate_closed_forms`].
pub const ORACLE_TOLERANCE: f64 = 1e-5;

const HERMITIAN_TOLERANCE: f64 = 1e-12;

const SUPPORT_FLOOR: f64 = 1e-30;

type CMat = Mat<Complex64>;

/// Density matrix in the number basis, truncated to `dim` levels.
#[derive(Debug, Clone)]
pub struct FockState {
    dim: usize,
    matrix: CMat,
}

impl FockState {
    /// Wraps a matrix after checking it is square and Hermitian.
    pub fn new(matrix: CMat) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(dim, matrix.ncols()));
        }
        let mut worst = 0.0f64;
        for j in 0..dim {
            for i in 0..=j {
                worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if worst > HERMITIAN_TOLERANCE {
            return Err(Error::Domain(format!(
                "density matrix is not Hermitian (max deviation {worst:e})"
            )));
        }
        Ok(FockState { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> MatRef<'_, Complex64> {
        self.matrix.as_ref()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.dim {
            for i in 0..self.dim {
                acc += self.matrix[(i, j)].norm_sqr();
            }
        }
        acc
    }

    /// `U ρ U†`, re-symmetrized.
    pub fn conjugated(&self, unitary: MatRef<'_, Complex64>) -> Result<FockState> {
        if unitary.nrows() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, unitary.nrows()));
        }
        let m = unitary * self.matrix.as_ref() * unitary.adjoint();
        Ok(FockState {
            dim: self.dim,
            matrix: hermitize(m.as_ref()),
        })
    }

    /// Mean occupation `tr(a†a ρ)`.
    pub fn mean_occupation(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.matrix[(n, n)].re).sum()
    }
}

fn hermitize(m: MatRef<'_, Complex64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()))
}

/// Eigenvalues (ascending, real) and eigenvectors of a Hermitian matrix.
fn eigh(m: MatRef<'_, Complex64>) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinAlg(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((values, evd.U().to_owned()))
}

/// `V diag(f(λ)) V†`.
fn spectral_map(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> Complex64) -> CMat {
    let weights: Vec<Complex64> = values.iter().map(|&l| f(l)).collect();
    let scaled = Mat::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * weights[j]);
    scaled.as_ref() * vectors.adjoint()
}

/// `exp(G)` for an anti-Hermitian generator `G`, via `G = −iH`.
fn exp_anti_hermitian(generator: &CMat) -> Result<CMat> {
    let h = Mat::from_fn(generator.nrows(), generator.ncols(), |i, j| {
        Complex64::new(0.0, 1.0) * generator[(i, j)]
    });
    let (values, vectors) = eigh(hermitize(h.as_ref()).as_ref())?;
    Ok(spectral_map(&values, &vectors, |l| Complex64::cis(-l)))
}

/// Smallest `dim` with thermal tail `(n̄/(n̄+1))^dim` below [`TAIL_TOLERANCE`].
pub fn thermal_dim(nbar: f64) -> usize {
    if nbar <= 0.0 {
        return 1;
    }
    let q = nbar / (nbar + 1.0);
    (TAIL_TOLERANCE.ln() / q.ln()).ceil() as usize
}

/// Truncation guard for displacements: `ceil(4(|η|² + 3|η| + 4))`.
pub fn displacement_dim(eta_abs: f64) -> usize {
    (4.0 * (eta_abs * eta_abs + 3.0 * eta_abs + 4.0)).ceil() as usize
}

/// Smallest even `dim` such that `S(r)|0⟩` keeps less than
/// [`TAIL_TOLERANCE`] of its population at or above level `dim/2`.
pub fn squeeze_dim(r: f64) -> usize {
    if r == 0.0 {
        return 2;
    }
    // P(2m) = (2m)! / (4^m (m!)²) · tanh^{2m} r / cosh r
    let t2 = r.tanh().powi(2);
    let mut p = 1.0 / r.cosh();
    let mut remaining = 1.0 - p;
    let mut m = 0usize;
    while remaining >= TAIL_TOLERANCE {
        m += 1;
        p *= t2 * (2 * m - 1) as f64 / (2 * m) as f64;
        remaining -= p;
        // round-off floor on `remaining`
        if p < TAIL_TOLERANCE * 1e-6 {
            break;
        }
    }
    // levels 0..=2m carry all but `remaining`
    2 * (2 * m + 1)
}

/// Thermal state with mean occupation `nbar`, populations
/// `n̄ⁿ/(n̄+1)ⁿ⁺¹`. Not renormalized after truncation.
pub fn thermal_fock(nbar: f64, dim: usize) -> Result<FockState> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::Domain(format!("mean occupation must be >= 0, got {nbar}")));
    }
    let required = thermal_dim(nbar);
    if dim < required {
        return Err(Error::Truncation {
            what: "thermal state",
            required,
            dim,
        });
    }
    let q = nbar / (nbar + 1.0);
    let p0 = 1.0 / (nbar + 1.0);
    let matrix = Mat::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(p0 * q.powi(i as i32), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(FockState { dim, matrix })
}

/// `D(η) = exp(η a† − η* a)` in a `dim`-level basis.
pub fn displace_fock(eta: Complex64, dim: usize) -> Result<CMat> {
    let required = displacement_dim(eta.norm());
    if dim < required {
        return Err(Error::Truncation {
            what: "displacement",
            required,
            dim,
        });
    }
    let mut g = Mat::zeros(dim, dim);
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt();
        g[(n + 1, n)] = eta * s;
        g[(n, n + 1)] = -eta.conj() * s;
    }
    exp_anti_hermitian(&g)
}

/// `S(ξ) = exp[(ξ* a² − ξ a†²)/2]` in a `dim`-level basis.
pub fn squeeze_fock(xi: Complex64, dim: usize) -> Result<CMat> {
    let required = squeeze_dim(xi.norm());
    if dim < required {
        return Err(Error::Truncation {
            what: "squeezing",
            required,
            dim,
        });
    }
    // a² and a†² only connect levels of equal parity
    let mut out = Mat::zeros(dim, dim);
    for parity in 0..2 {
        let levels: Vec<usize> = (parity..dim).step_by(2).collect();
        let m = levels.len();
        let mut g = Mat::zeros(m, m);
        for k in 0..m.saturating_sub(1) {
            // ⟨n+2| a†² |n⟩ = sqrt((n+1)(n+2))
            let n = levels[k];
            let s = (((n + 1) * (n + 2)) as f64).sqrt();
            g[(k + 1, k)] = -0.5 * xi * s;
            g[(k, k + 1)] = 0.5 * xi.conj() * s;
        }
        let block = exp_anti_hermitian(&g)?;
        for (bi, &i) in levels.iter().enumerate() {
            for (bj, &j) in levels.iter().enumerate() {
                out[(i, j)] = block[(bi, bj)];
            }
        }
    }
    Ok(out)
}

/// Square root of a density matrix with the eigenvalue clamp applied.
fn sqrt_psd(state: MatRef<'_, Complex64>) -> Result<CMat> {
    let (values, vectors) = eigh(state)?;
    if let Some(&worst) = values.iter().find(|&&l| l < -EIGEN_CLAMP) {
        return Err(Error::Domain(format!(
            "density matrix has eigenvalue {worst:e} below -{EIGEN_CLAMP:e}"
        )));
    }
    Ok(spectral_map(&values, &vectors, |l| Complex64::new(l.max(0.0).sqrt(), 0.0)))
}

/// Generalized overlap `tr sqrt(sqrt(ρ₁) ρ₂ sqrt(ρ₁))`.
pub fn overlap_fock(rho1: &FockState, rho2: &FockState) -> Result<f64> {
    if rho1.dim != rho2.dim {
        return Err(Error::DimensionMismatch(rho1.dim, rho2.dim));
    }
    let s = sqrt_psd(rho1.matrix.as_ref())?;
    let inner = s.as_ref() * rho2.matrix.as_ref() * s.as_ref();
    let (values, _) = eigh(hermitize(inner.as_ref()).as_ref())?;
    if let Some(&worst) = values.iter().find(|&&l| l < -EIGEN_CLAMP) {
        return Err(Error::Domain(format!(
            "overlap operator has eigenvalue {worst:e} below -{EIGEN_CLAMP:e}"
        )));
    }
    Ok(values.iter().map(|l| l.max(0.0).sqrt()).sum())
}

/// Single-mode decoherence factor `|tr(D(η) ρ₀)|`.
pub fn gamma_fock(rho0: &FockState, eta: Complex64) -> Result<f64> {
    let d = displace_fock(eta, rho0.dim)?;
    let prod = d.as_ref() * rho0.matrix.as_ref();
    let tr: Complex64 = (0..rho0.dim).map(|i| prod[(i, i)]).sum();
    Ok(tr.norm())
}

/// Initial single-mode state of a validation cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleState {
    Thermal,
    /// `S(ξ) ρ_th S(ξ)†` with `ξ = r e^{iθ}`.
    SqueezedThermal { r: f64, theta: f64 },
}

impl OracleState {
    fn squeezing(self) -> (f64, f64) {
        match self {
            OracleState::Thermal => (0.0, 0.0),
            OracleState::SqueezedThermal { r, theta } => (r, theta),
        }
    }
}

impl fmt::Display for OracleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleState::Thermal => f.write_str("thermal"),
            OracleState::SqueezedThermal { .. } => f.write_str("squeezed"),
        }
    }
}

/// Cells are the product `nbars × eta_abs × states`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    pub nbars: Vec<f64>,
    pub eta_abs: Vec<f64>,
    /// Phase of every `η`; a generic value keeps both quadratures in play.
    pub eta_phase: f64,
    pub states: Vec<OracleState>,
    /// Forces one truncation for every cell instead of the automatic choice.
    pub dim: Option<usize>,
    pub tolerance: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        let mut states = vec![OracleState::Thermal];
        for r in [0.5, 1.0] {
            for theta in [0.0, 0.5 * PI, PI] {
                states.push(OracleState::SqueezedThermal { r, theta });
            }
        }
        OracleGrid {
            nbars: vec![0.0, 0.5, 2.0],
            eta_abs: vec![0.3, 1.0, 2.0],
            eta_phase: 0.7,
            states,
            dim: None,
            tolerance: ORACLE_TOLERANCE,
        }
    }
}

impl OracleGrid {
    pub fn n_cells(&self) -> usize {
        self.nbars.len() * self.eta_abs.len() * self.states.len()
    }

    fn cells(&self) -> Vec<(f64, f64, OracleState)> {
        let mut out = Vec::with_capacity(self.n_cells());
        for &nbar in &self.nbars {
            for &eta in &self.eta_abs {
                for &state in &self.states {
                    out.push((nbar, eta, state));
                }
            }
        }
        out
    }
}

/// Automatic truncation for one cell: the squeezed thermal state is bounded
/// by a thermal tail with the stretched occupation `(n̄+½)e^{2r} − ½`, the
/// displacement guard uses the stretched `|η|e^{r}`, and the sum is doubled.
pub fn auto_dim(nbar: f64, eta_abs: f64, r: f64) -> usize {
    let stretched = (nbar + 0.5) * (2.0 * r).exp() - 0.5;
    2 * (thermal_dim(stretched).max(squeeze_dim(r)) + displacement_dim(eta_abs * r.exp()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Pass,
    /// Deviation above tolerance.
    Fail,
    /// A truncation guard rejected the cell.
    Guard(String),
    /// The Fock computation itself failed.
    Error(String),
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Pass => "PASS",
            CellStatus::Fail => "FAIL",
            CellStatus::Guard(_) => "GUARD",
            CellStatus::Error(_) => "ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCell {
    pub index: usize,
    pub nbar: f64,
    pub eta: Complex64,
    pub state: OracleState,
    pub dim: usize,
    pub gamma_fock: f64,
    pub gamma_closed: f64,
    pub b_fock: f64,
    pub b_closed: f64,
    pub status: CellStatus,
}

impl OracleCell {
    pub fn gamma_dev(&self) -> f64 {
        (self.gamma_fock - self.gamma_closed).abs()
    }

    pub fn b_dev(&self) -> f64 {
        (self.b_fock - self.b_closed).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub cells: Vec<OracleCell>,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        !self.cells.is_empty() && self.cells.iter().all(|c| c.status == CellStatus::Pass)
    }

    pub fn max_gamma_dev(&self) -> f64 {
        self.evaluated().map(OracleCell::gamma_dev).fold(0.0, f64::max)
    }

    pub fn max_b_dev(&self) -> f64 {
        self.evaluated().map(OracleCell::b_dev).fold(0.0, f64::max)
    }

    fn evaluated(&self) -> impl Iterator<Item = &OracleCell> {
        self.cells
            .iter()
            .filter(|c| matches!(c.status, CellStatus::Pass | CellStatus::Fail))
    }
}

/// Closed-form `(|Γ|, B)` of one mode: thermal purity `1/(2n̄+1)` and the
/// Gaussian-substituted displacement.
pub fn closed_form_pair(nbar: f64, eta: Complex64, state: OracleState) -> (f64, f64) {
    let (r, theta) = state.squeezing();
    let eta_sq = alpha_gaussian(Amplitude(eta), r, theta, 0.0).norm_sqr();
    let purity = 1.0 / (2.0 * nbar + 1.0);
    (
        log_gamma_term(eta_sq, purity).exp(),
        log_b_term(eta_sq, purity).exp(),
    )
}

fn fock_pair(nbar: f64, eta: Complex64, state: OracleState, dim: usize) -> Result<(f64, f64)> {
    let thermal = thermal_fock(nbar, dim)?;
    let d = displace_fock(eta, dim)?;
    // With ρ₀ = S ρ_th S†: tr(D ρ₀) = tr(D̃ ρ_th) and, since sqrt(ρ₀) =
    // S sqrt(ρ_th) S†, the fidelity operator is unitarily equivalent to
    // sqrt(ρ_th) D̃ ρ_th D̃† sqrt(ρ_th), where D̃ = S† D S.
    let d_tilde = match state {
        OracleState::Thermal => d,
        OracleState::SqueezedThermal { r, theta } => {
            let s = squeeze_fock(Complex64::from_polar(r, theta), dim)?;
            s.adjoint() * d.as_ref() * s.as_ref()
        }
    };
    let p: Vec<f64> = (0..dim).map(|i| thermal.matrix[(i, i)].re).collect();
    let g = (0..dim).map(|i| d_tilde[(i, i)] * p[i]).sum::<Complex64>().norm();

    // levels below SUPPORT_FLOOR change B by less than sqrt(SUPPORT_FLOOR) each
    let k = p.iter().take_while(|&&x| x > SUPPORT_FLOOR).count();
    let weighted = Mat::from_fn(k, dim, |i, n| d_tilde[(i, n)] * (p[i] * p[n]).sqrt());
    let inner = hermitize((weighted.as_ref() * weighted.adjoint()).as_ref());
    let (values, _) = eigh(inner.as_ref())?;
    if let Some(&worst) = values.iter().find(|&&l| l < -EIGEN_CLAMP) {
        return Err(Error::Domain(format!(
            "overlap operator has eigenvalue {worst:e} below -{EIGEN_CLAMP:e}"
        )));
    }
    let b = values.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((g, b))
}

/// Runs every cell of `grid` through both routes. Guard violations are
/// recorded per cell and make the report fail.
pub fn validate_closed_forms(grid: &OracleGrid) -> Result<OracleReport> {
    if grid.n_cells() == 0 {
        return Err(Error::Config("oracle grid has no cells".into()));
    }
    if !(grid.tolerance > 0.0) {
        return Err(Error::Config("oracle tolerance must be > 0".into()));
    }
    for &nbar in &grid.nbars {
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::Config(format!("oracle nbar must be >= 0, got {nbar}")));
        }
    }
    for &e in &grid.eta_abs {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(Error::Config(format!("oracle |eta| must be >= 0, got {e}")));
        }
    }
    let cells = grid.cells();
    let results: Vec<OracleCell> = cells
        .into_par_iter()
        .enumerate()
        .map(|(index, (nbar, eta_abs, state))| {
            let eta = Complex64::from_polar(eta_abs, grid.eta_phase);
            let (r, _) = state.squeezing();
            let dim = grid.dim.unwrap_or_else(|| auto_dim(nbar, eta_abs, r));
            let (gamma_closed, b_closed) = closed_form_pair(nbar, eta, state);
            let mut cell = OracleCell {
                index,
                nbar,
                eta,
                state,
                dim,
                gamma_fock: f64::NAN,
                gamma_closed,
                b_fock: f64::NAN,
                b_closed,
                status: CellStatus::Pass,
            };
            match fock_pair(nbar, eta, state, dim) {
                Ok((g, b)) => {
                    cell.gamma_fock = g;
                    cell.b_fock = b;
                    if cell.gamma_dev().max(cell.b_dev()) >= grid.tolerance || !g.is_finite() || !b.is_finite() {
                        cell.status = CellStatus::Fail;
                    }
                }
                Err(e @ Error::Truncation { .. }) => cell.status = CellStatus::Guard(e.to_string()),
                Err(e) => cell.status = CellStatus::Error(e.to_string()),
            }
            cell
        })
        .collect();
    Ok(OracleReport {
        cells: results,
        tolerance: grid.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis(dim: usize, n: usize) -> Vec<Complex64> {
        (0..dim).map(|i| c(if i == n { 1.0 } else { 0.0 }, 0.0)).collect()
    }

    fn pure(psi: &[Complex64]) -> FockState {
        let dim = psi.len();
        FockState::new(Mat::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj())).unwrap()
    }

    fn apply(m: &CMat, v: &[Complex64]) -> Vec<Complex64> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
            .collect()
    }

    fn max_block_dev(m: MatRef<'_, Complex64>, block: usize, target: impl Fn(usize, usize) -> Complex64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..block {
            for j in 0..block {
                worst = worst.max((m[(i, j)] - target(i, j)).norm());
            }
        }
        worst
    }

    fn identity(i: usize, j: usize) -> Complex64 {
        c(if i == j { 1.0 } else { 0.0 }, 0.0)
    }

    #[test]
    fn thermal_vacuum() {
        let rho = thermal_fock(0.0, 4).unwrap();
        assert_eq!(rho.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(rho.trace(), 1.0);
        assert_eq!(rho.purity(), 1.0);
    }

    #[test]
    fn thermal_geometric_sums() {
        let rho = thermal_fock(1.0, 80).unwrap();
        // 1 − 2⁻⁸⁰ and (1 − 4⁻⁸⁰)/3
        assert!((rho.trace() - (1.0 - 2f64.powi(-80))).abs() < 1e-15);
        assert_relative_eq!(rho.purity(), 1.0 / 3.0, max_relative = 1e-14);
        // βω = ln 2 ⇒ tanh(βω/2) = 1/3
        assert_relative_eq!((2f64.ln() / 2.0).tanh(), 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn thermal_purity_matches_tanh() {
        use crate::model::{HBAR, K_B};
        use crate::observables::thermal_purity;
        for (omega, temp) in [(4.5e9, 1e-2), (3e9, 0.1), (6e9, 3e-2)] {
            let x = HBAR * omega / (K_B * temp);
            let nbar = 1.0 / x.exp_m1();
            let rho = thermal_fock(nbar, thermal_dim(nbar)).unwrap();
            assert!((rho.purity() - thermal_purity(omega, temp)).abs() < 1e-8);
        }
    }

    #[test]
    fn thermal_guard_names_dim() {
        match thermal_fock(2.0, 10) {
            Err(Error::Truncation { required, .. }) => assert_eq!(required, thermal_dim(2.0)),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn displacement_basics() {
        let dim = 60;
        let zero = displace_fock(c(0.0, 0.0), dim).unwrap();
        assert!(max_block_dev(zero.as_ref(), dim, identity) < 1e-12);

        let eta = c(1.0, 0.5);
        let d = displace_fock(eta, dim).unwrap();
        assert!((d[(0, 0)] - c((-eta.norm_sqr() / 2.0).exp(), 0.0)).norm() < 1e-8);

        let back = displace_fock(-eta, dim).unwrap();
        let prod = d.as_ref() * back.as_ref();
        assert!(max_block_dev(prod.as_ref(), dim / 3, identity) < 1e-8);
        let unitarity = d.as_ref() * d.adjoint();
        assert!(max_block_dev(unitarity.as_ref(), dim / 3, identity) < 1e-8);

        assert!(matches!(displace_fock(c(2.0, 0.0), 8), Err(Error::Truncation { .. })));
    }

    #[test]
    fn squeezing_basics() {
        let dim = squeeze_dim(1.0) + 40;
        let zero = squeeze_fock(c(0.0, 0.0), dim).unwrap();
        assert!(max_block_dev(zero.as_ref(), dim, identity) < 1e-12);

        let s = squeeze_fock(c(0.8, 0.0), squeeze_dim(0.8)).unwrap();
        for n in (1..20).step_by(2) {
            assert!(s[(n, 0)].norm() < 1e-14);
        }
        // ⟨0|S(r)|0⟩ = 1/sqrt(cosh r)
        assert!((s[(0, 0)].norm() - 1.0 / 0.8f64.cosh().sqrt()).abs() < 1e-10);

        let s = squeeze_fock(c(1.0, 0.0), dim).unwrap();
        let vac = pure(&apply(&s, &basis(dim, 0)));
        assert!((vac.mean_occupation() - 1f64.sinh().powi(2)).abs() < 1e-6);

        let unitarity = s.as_ref() * s.adjoint();
        assert!(max_block_dev(unitarity.as_ref(), dim / 4, identity) < 1e-8);

        assert!(matches!(squeeze_fock(c(1.0, 0.0), 10), Err(Error::Truncation { .. })));
    }

    #[test]
    fn overlap_self_and_symmetry() {
        let dim = 48;
        let rho = thermal_fock(0.5, dim).unwrap();
        assert!((overlap_fock(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);

        let d = displace_fock(c(0.4, -0.3), dim).unwrap();
        let moved = rho.conjugated(d.as_ref()).unwrap();
        let ab = overlap_fock(&rho, &moved).unwrap();
        let ba = overlap_fock(&moved, &rho).unwrap();
        assert!((ab - ba).abs() < 1e-8);
        assert!(ab < 1.0 - 1e-3);

        let other = thermal_fock(0.5, dim + 1).unwrap();
        assert!(matches!(overlap_fock(&rho, &other), Err(Error::DimensionMismatch(_, _))));
    }

    #[test]
    fn overlap_vacuum_coherent() {
        let dim = 60;
        let alpha = 1.2;
        let vac = pure(&basis(dim, 0));
        let d = displace_fock(c(alpha, 0.0), dim).unwrap();
        let coh = vac.conjugated(d.as_ref()).unwrap();
        let b = overlap_fock(&vac, &coh).unwrap();
        assert!((b - (-alpha * alpha / 2.0).exp()).abs() < 1e-8);
    }

    #[test]
    fn overlap_thermal_closed_form() {
        for nbar in [0.0, 0.5, 2.0] {
            for eta_abs in [0.3, 1.0, 2.0] {
                let dim = auto_dim(nbar, eta_abs, 0.0);
                let eta = Complex64::from_polar(eta_abs, 0.4);
                let rho = thermal_fock(nbar, dim).unwrap();
                let d = displace_fock(eta, dim).unwrap();
                let moved = rho.conjugated(d.as_ref()).unwrap();
                let purity = 1.0 / (2.0 * nbar + 1.0);
                let b = overlap_fock(&moved, &rho).unwrap();
                assert!((b - (-eta_abs * eta_abs * purity / 2.0).exp()).abs() < 1e-6);
                let g = gamma_fock(&rho, eta).unwrap();
                assert!((g - (-eta_abs * eta_abs / purity / 2.0).exp()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn gamma_trivial_cases() {
        let rho = thermal_fock(2.0, 120).unwrap();
        assert!((gamma_fock(&rho, c(0.0, 0.0)).unwrap() - rho.trace()).abs() < 1e-12);
        assert!(gamma_fock(&rho, c(0.5, 0.5)).unwrap() <= 1.0);
    }

    #[test]
    fn overlap_unitary_invariance() {
        let dim = 90;
        let rho = thermal_fock(0.5, dim).unwrap();
        let sigma = rho.conjugated(displace_fock(c(0.6, 0.2), dim).unwrap().as_ref()).unwrap();
        let base = overlap_fock(&rho, &sigma).unwrap();
        for u in [
            displace_fock(c(-0.5, 0.9), dim).unwrap(),
            squeeze_fock(c(0.0, 0.4), dim).unwrap(),
        ] {
            let a = rho.conjugated(u.as_ref()).unwrap();
            let b = sigma.conjugated(u.as_ref()).unwrap();
            assert!((overlap_fock(&a, &b).unwrap() - base).abs() < 1e-7);
        }
    }

    #[test]
    fn under_truncated_grid_is_flagged() {
        let grid = OracleGrid {
            nbars: vec![0.0],
            eta_abs: vec![2.0],
            states: vec![OracleState::Thermal],
            dim: Some(8),
            ..OracleGrid::default()
        };
        let report = validate_closed_forms(&grid).unwrap();
        assert!(!report.passed());
        assert!(matches!(report.cells[0].status, CellStatus::Guard(_)));
    }

    #[test]
    fn empty_grid_is_config_error() {
        let grid = OracleGrid {
            nbars: vec![],
            ..OracleGrid::default()
        };
        assert!(matches!(validate_closed_forms(&grid), Err(Error::Config(_))));
    }

    #[test]
    fn forced_dim_hard_cell_passes() {
        let grid = OracleGrid {
            nbars: vec![2.0],
            eta_abs: vec![2.0],
            states: vec![OracleState::Thermal],
            dim: Some(160),
            ..OracleGrid::default()
        };
        let report = validate_closed_forms(&grid).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn reduced_overlap_matches_literal_route() {
        let dim = 90;
        let eta = Complex64::from_polar(1.0, 0.7);
        let xi = Complex64::from_polar(0.5, 1.1);
        let s = squeeze_fock(xi, dim).unwrap();
        let rho0 = thermal_fock(0.5, dim).unwrap().conjugated(s.as_ref()).unwrap();
        let d = displace_fock(eta, dim).unwrap();
        let shifted = rho0.conjugated(d.as_ref()).unwrap();
        let literal_b = overlap_fock(&shifted, &rho0).unwrap();
        let literal_g = gamma_fock(&rho0, eta).unwrap();
        let state = OracleState::SqueezedThermal { r: 0.5, theta: 1.1 };
        let (g, b) = fock_pair(0.5, eta, state, dim).unwrap();
        assert_relative_eq!(g, literal_g, max_relative = 1e-10);
        assert_relative_eq!(b, literal_b, epsilon = 1e-7);
    }
}
