//! Port-Hamiltonian normal form of a linear pseudo-gradient system with a
//! compatible storage matrix.
//!
//! Compatibility `Q = GQ⁻¹G` makes `G⁻¹Q` an involution, so its ±1
//! eigenspaces split the state space into blocks on which
//! `Q = diag(Q1, Q2)` and `G = diag(Q1, −Q2)`. In the energy coordinates
//! `z = diag(Q1, Q2)·T⁻¹x` the dynamics read
//! `ż = (J − R)·diag(Q1, Q2)⁻¹·z + [C1ᵀ; 0]·u`.

use nalgebra::Cholesky;
use serde::Serialize;

use super::{check_symmetric, LinearPseudoGradientForm, LinearSystem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::Matrix;

const SNAP_TOL: f64 = 1e-6;
const OUTPUT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitForm {
    /// Basis `T = [U1 U2]` with `x = T·w`.
    #[serde(skip)]
    pub basis: Matrix,
    /// `z = to_energy·x`.
    #[serde(skip)]
    pub to_energy: Matrix,
    /// `x = from_energy·z`.
    #[serde(skip)]
    pub from_energy: Matrix,
    #[serde(skip)]
    pub j: Matrix,
    /// `diag(P1, −P2)`.
    #[serde(skip)]
    pub r: Matrix,
    #[serde(skip)]
    pub q1: Matrix,
    #[serde(skip)]
    pub q2: Matrix,
    #[serde(skip)]
    pub p1: Matrix,
    #[serde(skip)]
    pub p2: Matrix,
    #[serde(skip)]
    pub pc: Matrix,
    #[serde(skip)]
    pub c1: Matrix,
    #[serde(skip)]
    pub d: Matrix,
    /// Dimension of the positive block.
    pub k: usize,
    pub j_skew_residual: f64,
    pub r_min_eigenvalue: f64,
    pub output_residual: f64,
}

impl SplitForm {
    /// The energy-coordinate system `(A_z, B_z, C_z, D)`.
    pub fn to_system(&self) -> Result<LinearSystem> {
        let n = self.basis.nrows();
        let m = self.d.nrows();
        let qd = linalg::block_diag(&self.q1, &self.q2);
        let qd_inv = linalg::inverse(&qd, "block storage")?;
        let a = (&self.j - &self.r) * &qd_inv;
        let mut b = Matrix::zeros(n, m);
        b.view_mut((0, 0), (self.k, m)).copy_from(&self.c1.transpose());
        let c = b.transpose() * &qd_inv;
        LinearSystem::new(a, b, c, self.d.clone())
    }

    /// `H(z) = ½ zᵀ diag(Q1, Q2)⁻¹ z`.
    pub fn hamiltonian_matrix(&self) -> Result<Matrix> {
        linalg::inverse(&linalg::block_diag(&self.q1, &self.q2), "block storage")
    }
}

/// Orthonormal basis for the column span, sign-normalized.
fn orthonormal_basis(v: &Matrix) -> Matrix {
    if v.ncols() == 0 {
        return Matrix::zeros(v.nrows(), 0);
    }
    let mut q = v.clone().qr().q();
    linalg::normalize_column_signs(&mut q);
    q
}

pub fn split_port_hamiltonian_form(
    pg: &LinearPseudoGradientForm,
    q: &Matrix,
    tol: f64,
) -> Result<SplitForm> {
    if !pg.sigma.is_identity() {
        return Err(Error::Unsupported(
            "split port-Hamiltonian form requires sigma = I".into(),
        ));
    }
    let n = pg.g.nrows();
    let m = pg.c.nrows();
    check_symmetric(q, n, "Q")?;
    let chol = Cholesky::new(q.clone())
        .ok_or_else(|| Error::NotPositiveDefinite(linalg::min_eigenvalue(q)))?;
    let l = chol.l();
    let g_inv = linalg::inverse(&pg.g, "metric G")?;

    // G⁻¹Q v = λv  ⟺  (LᵀG⁻¹L) w = λw with v = L⁻ᵀw.
    let s = l.transpose() * &g_inv * &l;
    let eig = linalg::sym_eigen(&s);
    let l_inv_t = linalg::inverse(&l.transpose(), "Cholesky factor")?;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        let v = &l_inv_t * eig.eigenvectors.column(i);
        if (lam - 1.0).abs() <= SNAP_TOL {
            plus.push(v);
        } else if (lam + 1.0).abs() <= SNAP_TOL {
            minus.push(v);
        } else {
            return Err(Error::Incompatible(*lam));
        }
    }
    let k = plus.len();
    let basis = if k == n || k == 0 {
        Matrix::identity(n, n)
    } else {
        let u1 = orthonormal_basis(&Matrix::from_columns(&plus));
        let u2 = orthonormal_basis(&Matrix::from_columns(&minus));
        let mut t = Matrix::zeros(n, n);
        t.view_mut((0, 0), (n, k)).copy_from(&u1);
        t.view_mut((0, k), (n, n - k)).copy_from(&u2);
        t
    };
    let n2 = n - k;

    let sym = |m: Matrix| 0.5 * (&m + m.transpose());
    let qt = sym(basis.transpose() * q * &basis);
    let pt = sym(basis.transpose() * &pg.p * &basis);
    let q1 = qt.view((0, 0), (k, k)).into_owned();
    let q2 = qt.view((k, k), (n2, n2)).into_owned();
    let p1 = pt.view((0, 0), (k, k)).into_owned();
    let p2 = pt.view((k, k), (n2, n2)).into_owned();
    let pc = pt.view((0, k), (k, n2)).into_owned();

    if linalg::min_eigenvalue(&p1) < -tol {
        return Err(Error::SignCondition(format!(
            "P1 has eigenvalue {:e} < 0",
            linalg::min_eigenvalue(&p1)
        )));
    }
    if linalg::max_eigenvalue(&p2) > tol {
        return Err(Error::SignCondition(format!(
            "P2 has eigenvalue {:e} > 0",
            linalg::max_eigenvalue(&p2)
        )));
    }

    let ct = &pg.c * &basis;
    let c1 = ct.view((0, 0), (m, k)).into_owned();
    let output_residual = ct.view((0, k), (m, n2)).amax();
    if output_residual > OUTPUT_TOL {
        return Err(Error::CheckFailed(format!(
            "output map has a component {output_residual:e} on the negative block"
        )));
    }

    let mut j = Matrix::zeros(n, n);
    j.view_mut((0, k), (k, n2)).copy_from(&(-&pc));
    j.view_mut((k, 0), (n2, k)).copy_from(&pc.transpose());
    let r = linalg::block_diag(&p1, &(-&p2));
    let qd = linalg::block_diag(&q1, &q2);
    let t_inv = linalg::inverse(&basis, "split basis")?;
    let qd_inv = linalg::inverse(&qd, "block storage")?;
    Ok(SplitForm {
        to_energy: &qd * &t_inv,
        from_energy: &basis * &qd_inv,
        basis,
        j_skew_residual: (&j + j.transpose()).amax(),
        r_min_eigenvalue: linalg::min_eigenvalue(&r),
        output_residual,
        j,
        r,
        q1,
        q2,
        p1,
        p2,
        pc,
        c1,
        d: pg.d.clone(),
        k,
    })
}
