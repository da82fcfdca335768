//! Dense batch solvers for the stacked errors-in-variables system.
//!
//! These are reference solvers: the recursive estimator is checked against
//! them. Everything is a full decomposition on small matrices.

use nalgebra::{DMatrix, DVector, Matrix5, Vector4, Vector5};

use crate::error::{Result, TmaError};
use crate::pseudo_linear::PseudoRow;

/// Relative gap below which the two smallest singular values are treated as tied.
pub const SINGULAR_GAP_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;

/// Stacked rows `z_i = [h_i^T, y_i]` with left row weights and a right weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EivBatch {
    /// N x 5.
    pub z: DMatrix<f64>,
    /// Diagonal of the left weight, one entry per row, each in `(0, 1]`.
    pub row_weights: DVector<f64>,
    /// Symmetric positive definite right weight.
    pub weight: Matrix5<f64>,
}

impl EivBatch {
    pub fn new(z: DMatrix<f64>, row_weights: DVector<f64>, weight: Matrix5<f64>) -> Result<Self> {
        if z.ncols() != 5 {
            return Err(TmaError::InvalidConfig(format!(
                "batch needs 5 columns, got {}",
                z.ncols()
            )));
        }
        if z.nrows() < 5 {
            return Err(TmaError::InvalidConfig(format!(
                "batch needs at least 5 rows, got {}",
                z.nrows()
            )));
        }
        if row_weights.len() != z.nrows() || row_weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(TmaError::InvalidConfig(
                "row weights must be in (0, 1], one per row".into(),
            ));
        }
        if (weight - weight.transpose()).norm() > 1e-12 * weight.norm() {
            return Err(TmaError::InvalidConfig(
                "right weight must be symmetric".into(),
            ));
        }
        Ok(Self {
            z,
            row_weights,
            weight,
        })
    }

    /// Unit weights on both sides.
    pub fn unweighted(z: DMatrix<f64>) -> Result<Self> {
        let n = z.nrows();
        Self::new(z, DVector::from_element(n, 1.0), Matrix5::identity())
    }

    /// Rows from pseudo-linear measurements with the row weights a recursive
    /// estimator with forgetting factor `lambda` implicitly applies after the
    /// last row: `sqrt(lambda^(N-1-i))`.
    pub fn from_rows(rows: &[PseudoRow], lambda: f64, weight: Matrix5<f64>) -> Result<Self> {
        let n = rows.len();
        let z = DMatrix::from_fn(n, 5, |i, j| rows[i].augmented()[j]);
        let w = DVector::from_fn(n, |i, _| lambda.powf((n - 1 - i) as f64 / 2.0));
        Self::new(z, w, weight)
    }

    pub fn regressors(&self) -> DMatrix<f64> {
        self.z.columns(0, 4).into_owned()
    }

    pub fn observations(&self) -> DVector<f64> {
        self.z.column(4).into_owned()
    }
}

fn dyn5(m: &Matrix5<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(5, 5, m.as_slice())
}

/// Symmetric square root through the eigendecomposition.
pub fn symmetric_sqrt(m: &Matrix5<f64>) -> Result<Matrix5<f64>> {
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(TmaError::InvalidWeight(
            "right weight is not positive definite".into(),
        ));
    }
    let root = eig.eigenvalues.map(f64::sqrt);
    Ok(eig.eigenvectors * Matrix5::from_diagonal(&root) * eig.eigenvectors.transpose())
}

/// Generalized TLS estimate.
///
/// Takes the right singular vector of `Lambda Z W^(1/2)` for the smallest
/// singular value, maps it back through `W^(1/2)` and scales the last entry
/// to `-1`.
pub fn solve_gtls(b: &EivBatch) -> Result<Vector4<f64>> {
    let root = symmetric_sqrt(&b.weight)?;
    let mut scaled = &b.z * dyn5(&root);
    for (mut row, &w) in scaled.row_iter_mut().zip(b.row_weights.iter()) {
        row *= w;
    }
    let svd = scaled.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| TmaError::InvalidConfig("SVD did not produce right vectors".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &c| sv[a].total_cmp(&sv[c]));
    let (smallest, second) = (order[0], order[1]);
    let gap = sv[second] - sv[smallest];
    if !(gap > SINGULAR_GAP_TOL * sv[second]) {
        return Err(TmaError::NonUniqueSolution {
            ratio: if sv[second] > 0.0 {
                sv[smallest] / sv[second]
            } else {
                1.0
            },
        });
    }
    let v_tilde: Vector5<f64> = v_t
        .row(smallest)
        .transpose()
        .fixed_rows::<5>(0)
        .into_owned();
    let v = root * v_tilde;
    normalize_last(&v)
}

fn normalize_last(v: &Vector5<f64>) -> Result<Vector4<f64>> {
    let pivot = v[4];
    if pivot.abs() <= PIVOT_TOL * v.norm() {
        return Err(TmaError::PivotDegenerate {
            value: pivot,
            tol: PIVOT_TOL,
        });
    }
    Ok(-v.fixed_rows::<4>(0) / pivot)
}

/// Weighted least squares on `H x ~ y`, minimizing `|Lambda^(1/2) (H x - y)|`.
pub fn solve_wls(b: &EivBatch) -> Result<Vector4<f64>> {
    let mut h = b.regressors();
    let mut y = b.observations();
    for i in 0..h.nrows() {
        let s = b.row_weights[i].sqrt();
        h.row_mut(i).scale_mut(s);
        y[i] *= s;
    }
    let n = h.nrows() as f64;
    let svd = h.svd(true, true);
    let max = svd.singular_values.max();
    let tol = max * 1e-12 * n;
    let rank = svd.rank(tol);
    if rank < 4 {
        return Err(TmaError::RankDeficient { rank, needed: 4 });
    }
    let x = svd
        .solve(&y, tol)
        .map_err(|e| TmaError::InvalidConfig(e.to_string()))?;
    Ok(Vector4::new(x[0], x[1], x[2], x[3]))
}

/// Frobenius norm of `Lambda (Z - Z_hat) W^(1/2)`, the GTLS objective.
pub fn weighted_correction_norm(b: &EivBatch, z_hat: &DMatrix<f64>) -> Result<f64> {
    let root = symmetric_sqrt(&b.weight)?;
    let mut d = (&b.z - z_hat) * dyn5(&root);
    for (mut row, &w) in d.row_iter_mut().zip(b.row_weights.iter()) {
        row *= w;
    }
    Ok(d.norm())
}

/// Smallest correction `Z_hat` satisfying `Z_hat [x; -1] = 0` for a given `x`,
/// in the weighted norm. Each weighted row is projected onto the orthogonal
/// complement of `W^(-1/2) [x; -1]`.
pub fn optimal_correction(b: &EivBatch, x: &Vector4<f64>) -> Result<DMatrix<f64>> {
    let root = symmetric_sqrt(&b.weight)?;
    let root_inv = root
        .try_inverse()
        .ok_or_else(|| TmaError::InvalidWeight("right weight is singular".into()))?;
    let v = Vector5::new(x[0], x[1], x[2], x[3], -1.0);
    let u = root_inv * v;
    let u = u / u.norm();
    let proj = Matrix5::identity() - u * u.transpose();
    Ok(&b.z * dyn5(&(root * proj * root_inv)))
}
