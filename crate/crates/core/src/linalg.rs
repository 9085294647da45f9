//! Affine projection onto `{x : A x = b}` and related factorizations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::norms::l2_norm;

/// Relative singular-value cutoff for the pseudo-inverse.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Orthogonal projector onto the feasible set of an instance.
///
/// Stores an orthonormal basis `V_r` of the row space of `A` and the
/// minimum-norm solution `v = A^† b`, so that
/// `proj(ψ) = v + ψ − V_r V_rᵀ ψ`, which equals `ψ − A^†(Aψ − b)`.
/// Built once per instance and shared read-only afterwards.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    row_basis: DMatrix<f64>,
    min_norm: DVector<f64>,
    rank: usize,
}

impl AffineProjector {
    pub fn new(instance: &ProblemInstance) -> Result<Self> {
        let (row_basis, singular, u) = row_space(instance.a());
        let rank = singular.len();
        // A^† b = V_r Σ_r^{-1} U_rᵀ b
        let ub = u.transpose() * instance.b();
        let coeffs =
            DVector::from_iterator(rank, ub.iter().zip(singular.iter()).map(|(c, s)| c / s));
        let min_norm = &row_basis * coeffs;

        let residual = instance.residual_norm(&min_norm);
        let tolerance = 1e-10 * l2_norm(instance.b().as_slice()).max(f64::MIN_POSITIVE);
        if !(residual <= tolerance) {
            return Err(Error::Infeasible {
                residual,
                tolerance,
            });
        }
        Ok(Self {
            row_basis,
            min_norm,
            rank,
        })
    }

    /// Projector for the same matrix with `b` multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            row_basis: self.row_basis.clone(),
            min_norm: &self.min_norm * factor,
            rank: self.rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The minimum-norm feasible point `A^† b`.
    pub fn min_norm_point(&self) -> &DVector<f64> {
        &self.min_norm
    }

    /// Projection of `psi` onto the feasible set, written into `out`.
    pub fn project_into(
        &self,
        psi: &DVector<f64>,
        coeff: &mut DVector<f64>,
        out: &mut DVector<f64>,
    ) {
        coeff.gemv_tr(1.0, &self.row_basis, psi, 0.0);
        out.copy_from(psi);
        out.gemv(-1.0, &self.row_basis, coeff, 1.0);
        *out += &self.min_norm;
    }

    pub fn project(&self, psi: &DVector<f64>) -> DVector<f64> {
        let mut coeff = DVector::zeros(self.rank);
        let mut out = DVector::zeros(psi.len());
        self.project_into(psi, &mut coeff, &mut out);
        out
    }

    /// Component of `v` in `ker(A)`.
    pub fn kernel_component(&self, v: &DVector<f64>) -> DVector<f64> {
        let coeff = self.row_basis.transpose() * v;
        v - &self.row_basis * coeff
    }
}

/// Orthonormal row-space basis `V_r` (n×r), the retained singular values,
/// and the matching left singular vectors `U_r` (m×r).
fn row_space(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    // SVD of Aᵀ (tall) gives V directly as its left factor
    let svd = a.transpose().svd(true, true);
    let v = svd.u.expect("requested U");
    let u_t = svd.v_t.expect("requested V^T");
    let sigma = svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sigma.len())
        .filter(|&i| sigma[i] > RANK_CUTOFF * smax && sigma[i] > 0.0)
        .collect();
    let basis = v.select_columns(keep.iter());
    let u = u_t.transpose().select_columns(keep.iter());
    let s = DVector::from_iterator(keep.len(), keep.iter().map(|&i| sigma[i]));
    (basis, s, u)
}

/// Orthonormal basis of `ker(A)` (n×d), possibly with `d = 0`.
pub fn kernel_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    // pad to square so the SVD yields a full right factor
    let mut padded = DMatrix::zeros(n.max(m), n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma = svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let null: Vec<usize> = (0..sigma.len())
        .filter(|&i| !(sigma[i] > RANK_CUTOFF * smax))
        .collect();
    v_t.transpose().select_columns(null.iter())
}

/// Minimum-norm feasible point `A^T (A A^T)^† b`.
pub fn min_norm_feasible(instance: &ProblemInstance) -> Result<DVector<f64>> {
    Ok(AffineProjector::new(instance)?.min_norm_point().clone())
}

/// Feasible point supported on `support` closest to `anchor` there: the
/// anchor's entries plus the minimum-norm correction `A_S^†(b − A_S y_S)`,
/// scattered back into `R^n`. Returns `None` when the restricted system
/// leaves a residual above `tolerance`.
pub(crate) fn support_least_squares(
    instance: &ProblemInstance,
    support: &[usize],
    anchor: &DVector<f64>,
    tolerance: f64,
) -> Option<DVector<f64>> {
    if support.is_empty() {
        return None;
    }
    let a_s = instance.a().select_columns(support.iter());
    let y_s = DVector::from_iterator(support.len(), support.iter().map(|&i| anchor[i]));
    let r = instance.b() - &a_s * &y_s;
    let svd = a_s.svd(true, true);
    let delta = svd
        .solve(&r, RANK_CUTOFF * svd.singular_values.max())
        .ok()?;
    let z_s = y_s + delta;
    let mut x = DVector::zeros(instance.n());
    for (&i, v) in support.iter().zip(z_s.iter()) {
        x[i] = *v;
    }
    (instance.residual_norm(&x) <= tolerance && x.iter().all(|v| v.is_finite())).then_some(x)
}
