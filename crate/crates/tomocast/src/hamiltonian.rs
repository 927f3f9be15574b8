//! Admissible Hamiltonians: the distinguished minimal-norm representative
//! and the lattice parametrization of the full admissible family.
//!
//! Every admissible Hamiltonian is block scalar plus a lattice shift: on
//! each shared eigenspace the block energy solves the phase congruences
//! `exp(-i t_j h_i) = lambda_i^(j)`, and for rationally related times the
//! solution set is `h_i + 2 pi gamma Z`. The distinguished representative
//! keeps every block energy in the fundamental window `(-pi gamma, pi
//! gamma]`, which minimizes its Hilbert-Schmidt norm among the block-scalar
//! solutions; the rest of the family is reached by integer spectral shifts
//! conjugated by blockwise rotations.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::PriorDistribution;
use crate::error::{Error, Result};
use crate::linalg::{expm_i_herm, herm_eig, hs_distance, CMatrix};
use crate::oracles;
use crate::rational::{RationalStructure, MAX_LCM};
use crate::snapshot::{BlockDecomposition, TomographySet};

/// Default per-phase tolerance of the branch search.
pub const DEFAULT_BRANCH_TOL: f64 = 1e-8;

/// Branch-search half-width when the times are treated as irrational and
/// the candidate set has no lattice period to exploit.
pub const DEFAULT_IRRATIONAL_BRANCH_BOUND: i64 = 256;

/// Matrix-level admissibility tolerance, scaled with dimension.
pub fn default_admissibility_tol(dim: usize) -> f64 {
    1e-8 * (dim as f64).sqrt()
}

/// The distinguished admissible Hamiltonian: block scalar on the shared
/// eigenspaces, block energies in the fundamental window.
#[derive(Debug, Clone)]
pub struct AdmissibleHamiltonian {
    block_energies: Vec<f64>,
    matrix: CMatrix,
    gamma: Option<f64>,
}

impl AdmissibleHamiltonian {
    /// Block energy per shared eigenspace, in decomposition order.
    pub fn block_energies(&self) -> &[f64] {
        &self.block_energies
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Lattice frequency of the admissible family; `None` when the times
    /// were treated as irrationally related (singleton family).
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }
}

/// One member of the admissible family: `H = Hhat + 2 pi gamma R^dag
/// diag(k) R` in the joint eigenbasis.
#[derive(Debug, Clone)]
pub struct AdmissibleFamilyElement {
    base: AdmissibleHamiltonian,
    k_vector: Vec<i64>,
    rotations: Vec<CMatrix>,
    matrix: CMatrix,
}

impl AdmissibleFamilyElement {
    pub fn base(&self) -> &AdmissibleHamiltonian {
        &self.base
    }

    /// Lattice coordinates, one integer per basis column.
    pub fn k_vector(&self) -> &[i64] {
        &self.k_vector
    }

    /// Blockwise rotations applied to the lattice shift.
    pub fn rotations(&self) -> &[CMatrix] {
        &self.rotations
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Outcome of the branch search for one block.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BranchSearch {
    /// The passing branch of minimal magnitude, when one exists.
    pub energy: Option<f64>,
    /// Its residual, or the best residual over all branches when none pass.
    pub residual: f64,
}

/// Map `x` into `(-period/2, period/2]`.
fn fold_half_open(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r > period / 2.0 {
        r - period
    } else {
        r
    }
}

fn phase_residual(h: f64, phases: &[Complex64], times: &[f64]) -> f64 {
    phases
        .iter()
        .zip(times)
        .map(|(lambda, &t)| (Complex64::from_polar(1.0, -t * h) - lambda).norm())
        .fold(0.0, f64::max)
}

/// Search the branches of `-log(lambda^(1)) / t_1` for a block energy
/// solving every phase congruence within `tol`; among passing branches the
/// one of minimal magnitude wins (ties prefer the positive branch, so the
/// window stays half open at `+pi gamma`).
pub(crate) fn best_branch(
    phases: &[Complex64],
    times: &[f64],
    structure: &RationalStructure,
    tol: f64,
) -> BranchSearch {
    let tau1 = times[0];
    let theta = -phases[0].arg();
    let two_pi = 2.0 * std::f64::consts::PI;
    let candidates: Vec<f64> = match structure {
        RationalStructure::Rational { lcm_q, gamma, .. } => (0..*lcm_q)
            .map(|n| fold_half_open((theta + two_pi * n as f64) / tau1, two_pi * gamma))
            .collect(),
        RationalStructure::Irrational => (-DEFAULT_IRRATIONAL_BRANCH_BOUND
            ..=DEFAULT_IRRATIONAL_BRANCH_BOUND)
            .map(|n| (theta + two_pi * n as f64) / tau1)
            .collect(),
    };
    let mut best_energy: Option<f64> = None;
    let mut best_passing = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    for h in candidates {
        let r = phase_residual(h, phases, times);
        best_residual = best_residual.min(r);
        if r <= tol {
            let better = match best_energy {
                None => true,
                Some(prev) => h.abs() < prev.abs() || (h.abs() == prev.abs() && h > prev),
            };
            if better {
                best_energy = Some(h);
                best_passing = r;
            }
        }
    }
    BranchSearch {
        energy: best_energy,
        residual: if best_energy.is_some() {
            best_passing
        } else {
            best_residual
        },
    }
}

/// Extract the admissible Hamiltonian of minimal Hilbert-Schmidt norm in
/// the bicommutant: per block, the branch search above; assembled as
/// `Omega diag(h) Omega^dag`.
///
/// For rational time structures the candidate branches cover exactly one
/// lattice period `2 pi gamma`; the irrational case scans
/// [`DEFAULT_IRRATIONAL_BRANCH_BOUND`] branches either side of the
/// principal one and the family degenerates to this single Hamiltonian.
pub fn extract_min_norm_hamiltonian(
    decomp: &BlockDecomposition,
    structure: &RationalStructure,
    times: &[f64],
    tol: f64,
) -> Result<AdmissibleHamiltonian> {
    if times.len() != decomp.blocks().first().map_or(0, |b| b.phases.len()) {
        return Err(Error::Dimension(
            "time grid does not match decomposition phases".into(),
        ));
    }
    if let Some(q) = structure.lcm_q() {
        if q > MAX_LCM {
            return Err(Error::Config(format!(
                "LCM of denominators {q} exceeds branch-search budget {MAX_LCM}"
            )));
        }
    }
    let mut block_energies = Vec::with_capacity(decomp.kappa());
    for (i, block) in decomp.blocks().iter().enumerate() {
        let search = best_branch(&block.phases, times, structure, tol);
        match search.energy {
            Some(h) => block_energies.push(h),
            None => {
                return Err(Error::NotConsistent {
                    block: i,
                    residual: search.residual,
                })
            }
        }
    }
    let matrix = assemble_block_scalar(decomp, &block_energies);
    Ok(AdmissibleHamiltonian {
        block_energies,
        matrix,
        gamma: structure.gamma(),
    })
}

fn assemble_block_scalar(decomp: &BlockDecomposition, energies: &[f64]) -> CMatrix {
    let d = decomp.dim();
    let mut diag = CMatrix::zeros(d, d);
    let mut col = 0usize;
    for (block, &h) in decomp.blocks().iter().zip(energies) {
        for k in col..col + block.dim {
            diag[(k, k)] = Complex64::new(h, 0.0);
        }
        col += block.dim;
    }
    let m = decomp.from_block_basis(&diag);
    // Conjugation leaves fp-scale skew; return an exactly Hermitian matrix.
    (&m + m.adjoint()).scale(0.5)
}

/// Deterministic family member `H = Hhat + 2 pi gamma Omega (R^dag diag(k)
/// R) Omega^dag` from explicit lattice coordinates and blockwise rotations.
pub fn family_element(
    base: &AdmissibleHamiltonian,
    decomp: &BlockDecomposition,
    k_vector: Vec<i64>,
    rotations: Vec<CMatrix>,
) -> Result<AdmissibleFamilyElement> {
    let Some(gamma) = base.gamma() else {
        return Err(Error::Config(
            "irrational time structure: the admissible family is the singleton {Hhat}".into(),
        ));
    };
    let d = decomp.dim();
    if k_vector.len() != d || rotations.len() != decomp.kappa() {
        return Err(Error::Dimension(
            "lattice vector or rotation count does not match decomposition".into(),
        ));
    }
    for (block, r) in decomp.blocks().iter().zip(&rotations) {
        if r.nrows() != block.dim || r.ncols() != block.dim {
            return Err(Error::Dimension(
                "rotation dimension does not match its block".into(),
            ));
        }
    }
    let mut shift = CMatrix::zeros(d, d);
    let mut col = 0usize;
    for (block, r) in decomp.blocks().iter().zip(&rotations) {
        let diag = CMatrix::from_fn(block.dim, block.dim, |a, b| {
            if a == b {
                Complex64::new(k_vector[col + a] as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let local = r.adjoint() * diag * r;
        for a in 0..block.dim {
            for b in 0..block.dim {
                shift[(col + a, col + b)] = local[(a, b)];
            }
        }
        col += block.dim;
    }
    let lattice = decomp
        .from_block_basis(&shift)
        .scale(2.0 * std::f64::consts::PI * gamma);
    let m = base.matrix() + lattice;
    let matrix = (&m + m.adjoint()).scale(0.5);
    Ok(AdmissibleFamilyElement {
        base: base.clone(),
        k_vector,
        rotations,
        matrix,
    })
}

/// Draw a random member of the admissible family: i.i.d. lattice
/// coordinates from `k_dist` and blockwise Haar rotations, deterministic
/// per seed.
pub fn sample_admissible(
    base: &AdmissibleHamiltonian,
    decomp: &BlockDecomposition,
    k_dist: &PriorDistribution,
    seed: u64,
) -> Result<AdmissibleFamilyElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_vector = k_dist.sample_with(decomp.dim(), &mut rng);
    let rotations: Vec<CMatrix> = decomp
        .blocks()
        .iter()
        .map(|b| oracles::haar_unitary_with_rng(b.dim, &mut rng))
        .collect();
    family_element(base, decomp, k_vector, rotations)
}

/// Residuals of a candidate Hamiltonian against a snapshot set.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    /// All residuals within `tol`.
    pub ok: bool,
    /// `||exp(-i t_j H) - U^(j)||` per snapshot.
    pub residuals: Vec<f64>,
}

/// Check `exp(-i t_j H) = U^(j)` for every snapshot, reporting
/// Hilbert-Schmidt residuals.
pub fn verify_admissible(
    h: &CMatrix,
    set: &TomographySet,
    tol: f64,
) -> Result<AdmissibilityReport> {
    herm_eig(h)?; // rejects non-Hermitian input
    let residuals: Vec<f64> = set
        .times()
        .iter()
        .zip(set.unitaries())
        .map(|(&t, u)| Ok(hs_distance(&expm_i_herm(h, t)?, u)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AdmissibilityReport {
        ok: residuals.iter().all(|&r| r <= tol),
        residuals,
    })
}
