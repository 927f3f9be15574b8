//! Open-system groundwork: operator-sum representations, their unitary
//! dilations, and the equivalence class of dilations realizing the same
//! channel.
//!
//! With the bath prepared in the reference state `|0>`, the first
//! block-column of a system-bath unitary is fixed entry by entry by the
//! Kraus operators; any unitary completion of the remaining columns yields
//! the same channel, and two dilations are equivalent exactly when they
//! differ by a bath rotation on the left and a unitary centralizer element
//! (identity on the `|j 0>` subspace) on the right.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, hs_distance, identity, unitarity_residual, CMatrix};
use crate::oracles::haar_unitary_with_rng;

/// Completeness tolerance for `sum_k E_k^dag E_k = 1`.
pub const KRAUS_COMPLETENESS_TOL: f64 = 1e-10;

/// An operator-sum representation: `env_dim` Kraus operators of size
/// `sys_dim x sys_dim` satisfying the completeness relation.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    sys_dim: usize,
    env_dim: usize,
    operators: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(sys_dim: usize, env_dim: usize, operators: Vec<CMatrix>) -> Result<Self> {
        if sys_dim == 0 || env_dim == 0 {
            return Err(Error::Dimension("dimensions must be positive".into()));
        }
        if operators.len() != env_dim {
            return Err(Error::Dimension(format!(
                "need {env_dim} Kraus operators (one per bath level), got {}",
                operators.len()
            )));
        }
        let mut gram = CMatrix::zeros(sys_dim, sys_dim);
        for e in &operators {
            if e.nrows() != sys_dim || e.ncols() != sys_dim {
                return Err(Error::Dimension(format!(
                    "Kraus operator is {}x{}, expected {sys_dim}x{sys_dim}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            gram += e.adjoint() * e;
        }
        let residual = hs_distance(&gram, &identity(sys_dim));
        if !(residual <= KRAUS_COMPLETENESS_TOL) {
            return Err(Error::Kraus { residual });
        }
        Ok(KrausSet {
            sys_dim,
            env_dim,
            operators,
        })
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// Apply the channel `rho -> sum_k E_k rho E_k^dag`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.sys_dim || rho.ncols() != self.sys_dim {
            return Err(Error::Dimension(
                "state dimension does not match Kraus operators".into(),
            ));
        }
        let mut out = CMatrix::zeros(self.sys_dim, self.sys_dim);
        for e in &self.operators {
            out += e * rho * e.adjoint();
        }
        Ok(out)
    }
}

/// Composite index of `|i> (x) |alpha>` with the bath index fastest.
fn composite(i: usize, alpha: usize, env_dim: usize) -> usize {
    i * env_dim + alpha
}

/// Partial trace over the environment of an operator on the composite
/// space (Kronecker ordering, bath index fastest).
pub fn partial_trace_env(x: &CMatrix, sys_dim: usize, env_dim: usize) -> Result<CMatrix> {
    linalg::check_square(x)?;
    if x.nrows() != sys_dim * env_dim {
        return Err(Error::Dimension(format!(
            "operator side {} does not factor as {sys_dim} x {env_dim}",
            x.nrows()
        )));
    }
    let mut out = CMatrix::zeros(sys_dim, sys_dim);
    for a in 0..sys_dim {
        for b in 0..sys_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for alpha in 0..env_dim {
                acc += x[(composite(a, alpha, env_dim), composite(b, alpha, env_dim))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Dilate an operator-sum representation to a system-bath unitary.
///
/// The columns over `|j 0>` are fixed exactly by `<i alpha|U|j 0> =
/// <i|E_alpha|j>`; the remaining columns are completed with seeded random
/// vectors orthonormalized against everything before them (any completion
/// is valid, and randomizing it exposes the equivalence-class freedom).
pub fn kraus_to_unitary(kraus: &KrausSet, seed: u64) -> Result<CMatrix> {
    let (ns, ne) = (kraus.sys_dim, kraus.env_dim);
    let total = ns * ne;
    let mut u = CMatrix::zeros(total, total);
    for j in 0..ns {
        for (alpha, e) in kraus.operators.iter().enumerate() {
            for i in 0..ns {
                u[(composite(i, alpha, ne), composite(j, 0, ne))] = e[(i, j)];
            }
        }
    }
    let mut fixed: Vec<usize> = (0..ns).map(|j| composite(j, 0, ne)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..ns {
        for beta in 1..ne {
            let col = composite(j, beta, ne);
            'draw: loop {
                let mut v = nalgebra::DVector::<Complex64>::from_fn(total, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                // Two Gram-Schmidt passes against all settled columns.
                for _ in 0..2 {
                    for &c in &fixed {
                        let existing = u.column(c);
                        let overlap = existing.dotc(&v);
                        v -= nalgebra::DVector::from(existing) * overlap;
                    }
                }
                let norm = v.norm();
                if norm > 1e-6 {
                    u.set_column(col, &(v / Complex64::new(norm, 0.0)));
                    fixed.push(col);
                    break 'draw;
                }
            }
        }
    }
    let residual = unitarity_residual(&u);
    if !(residual <= 1e-10) {
        return Err(Error::Kraus { residual });
    }
    Ok(u)
}

/// Read an operator-sum representation off a system-bath unitary:
/// `E_k(i, j) = <i k|U|j 0>`.
pub fn osr_from_unitary(u: &CMatrix, sys_dim: usize, env_dim: usize) -> Result<KrausSet> {
    linalg::check_square(u)?;
    if u.nrows() != sys_dim * env_dim {
        return Err(Error::Dimension(format!(
            "unitary side {} does not factor as {sys_dim} x {env_dim}",
            u.nrows()
        )));
    }
    let residual = unitarity_residual(u);
    if !(residual <= 1e-8) {
        return Err(Error::Unitarity { index: 0, residual });
    }
    let operators: Vec<CMatrix> = (0..env_dim)
        .map(|k| {
            CMatrix::from_fn(sys_dim, sys_dim, |i, j| {
                u[(composite(i, k, env_dim), composite(j, 0, env_dim))]
            })
        })
        .collect();
    KrausSet::new(sys_dim, env_dim, operators)
}

/// Random element of the unitary centralizer of `B(H_s) (x) |0><0|`:
/// identity on `span{|j 0>}`, Haar on the orthocomplement.
pub fn random_centralizer_element(sys_dim: usize, env_dim: usize, seed: u64) -> CMatrix {
    let total = sys_dim * env_dim;
    let mut q = CMatrix::zeros(total, total);
    for j in 0..sys_dim {
        let c = composite(j, 0, env_dim);
        q[(c, c)] = Complex64::new(1.0, 0.0);
    }
    let rest: Vec<usize> = (0..total)
        .filter(|&idx| idx % env_dim != 0)
        .collect();
    if rest.is_empty() {
        return q;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = haar_unitary_with_rng(rest.len(), &mut rng);
    for (p, &rp) in rest.iter().enumerate() {
        for (c, &rc) in rest.iter().enumerate() {
            q[(rp, rc)] = w[(p, c)];
        }
    }
    q
}

/// Do two system-bath unitaries express the same channel on the bath
/// reference state? Checked on every matrix unit `e_ij (x) |0><0|`
/// (linearity makes that sufficient).
pub fn equivalence_check(
    u: &CMatrix,
    w: &CMatrix,
    sys_dim: usize,
    env_dim: usize,
    tol: f64,
) -> Result<bool> {
    linalg::check_same_dim(u, w)?;
    if u.nrows() != sys_dim * env_dim {
        return Err(Error::Dimension(format!(
            "unitary side {} does not factor as {sys_dim} x {env_dim}",
            u.nrows()
        )));
    }
    for i in 0..sys_dim {
        for j in 0..sys_dim {
            let mut a = CMatrix::zeros(sys_dim * env_dim, sys_dim * env_dim);
            a[(composite(i, 0, env_dim), composite(j, 0, env_dim))] =
                Complex64::new(1.0, 0.0);
            let via_u = partial_trace_env(&(u * &a * u.adjoint()), sys_dim, env_dim)?;
            let via_w = partial_trace_env(&(w * &a * w.adjoint()), sys_dim, env_dim)?;
            if hs_distance(&via_u, &via_w) > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
