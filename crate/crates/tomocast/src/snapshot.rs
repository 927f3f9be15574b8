//! Tomography snapshots and their joint eigenstructure.
//!
//! A snapshot set is a strictly increasing time grid together with the
//! unitary propagator measured at each time. A set generated by a common
//! Hamiltonian is mutually commutative and therefore defines a decomposition
//! of the Hilbert space into maximal shared eigenspaces; every admissible
//! Hamiltonian is block diagonal with respect to it. This module ingests and
//! validates snapshot sets, computes that decomposition, and checks whether
//! the phase data is actually consistent with some Hamiltonian.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian;
use crate::jsonio::{matrix_from_rows, matrix_to_rows, MatrixRows};
use crate::linalg::{
    self, commutator_norm, expm_i_herm, herm_eig, unitarity_residual, CMatrix,
};
use crate::rational::RationalStructure;

/// Acceptance threshold for `||U^dag U - 1||` on ingested propagators.
pub const DEFAULT_UNITARITY_TOL: f64 = 1e-8;

/// Default joint-phase clustering tolerance. Tomographic noise perturbs
/// phases coherently within a true block, so one knob covers both the
/// commutator check and the phase clustering.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

/// Measurement times and unitary propagators, the raw input.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographySet {
    times: Vec<f64>,
    unitaries: Vec<CMatrix>,
    dim: usize,
}

impl TomographySet {
    /// Validate and wrap raw data: at least one snapshot, strictly
    /// increasing positive times, square unitaries of a shared dimension.
    pub fn new(times: Vec<f64>, unitaries: Vec<CMatrix>) -> Result<Self> {
        if times.is_empty() || times.len() != unitaries.len() {
            return Err(Error::Parse(format!(
                "need matching nonempty times/unitaries, got {} and {}",
                times.len(),
                unitaries.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite())
            || !(times[0] > 0.0)
            || times.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::TimeOrder);
        }
        let dim = unitaries[0].nrows();
        for (j, u) in unitaries.iter().enumerate() {
            linalg::check_square(u)?;
            if u.nrows() != dim {
                return Err(Error::Dimension(format!(
                    "propagator {} is {}x{}, expected {}x{}",
                    j,
                    u.nrows(),
                    u.ncols(),
                    dim,
                    dim
                )));
            }
            let residual = unitarity_residual(u);
            if !(residual <= DEFAULT_UNITARITY_TOL) {
                return Err(Error::Unitarity { index: j, residual });
            }
        }
        Ok(TomographySet {
            times,
            unitaries,
            dim,
        })
    }

    /// Synthesize the exact snapshot set generated by a Hamiltonian.
    pub fn from_hamiltonian(h: &CMatrix, times: &[f64]) -> Result<Self> {
        let unitaries = times
            .iter()
            .map(|&t| expm_i_herm(h, t))
            .collect::<Result<Vec<_>>>()?;
        TomographySet::new(times.to_vec(), unitaries)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    /// Number of snapshots.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Serialize, Deserialize)]
struct RawTomography {
    times: Vec<f64>,
    unitaries: Vec<MatrixRows>,
}

/// Parse a snapshot set from its JSON wire format:
/// `{"times": [...], "unitaries": [[[[re,im], ...], ...], ...]}` with
/// matrices row-major.
pub fn load_tomography(mut source: impl std::io::Read) -> Result<TomographySet> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse(e.to_string()))?;
    let raw: RawTomography =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let unitaries = raw
        .unitaries
        .iter()
        .map(matrix_from_rows)
        .collect::<Result<Vec<_>>>()?;
    TomographySet::new(raw.times, unitaries)
}

/// Serialize a snapshot set; floats survive a load/emit round trip
/// bit-exactly.
pub fn emit_tomography(set: &TomographySet) -> String {
    let raw = RawTomography {
        times: set.times.clone(),
        unitaries: set.unitaries.iter().map(matrix_to_rows).collect(),
    };
    serde_json::to_string(&raw).expect("plain floats always serialize")
}

/// One maximal shared eigenspace: its dimension and the joint eigenphase of
/// every propagator on it.
#[derive(Debug, Clone)]
pub struct Block {
    /// Dimension of the eigenspace.
    pub dim: usize,
    /// Unit-modulus eigenphase of each propagator on this eigenspace.
    pub phases: Vec<Complex64>,
}

/// Maximal shared eigenspace decomposition of a snapshot set.
///
/// The columns of `basis` form an orthonormal joint eigenbasis, grouped
/// block by block; conjugating any propagator by it yields block-scalar
/// form.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    basis: CMatrix,
    blocks: Vec<Block>,
    near_degenerate: Vec<(usize, usize, f64)>,
}

impl BlockDecomposition {
    /// Number of blocks.
    pub fn kappa(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthonormal joint eigenbasis, block-grouped columns.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Column offset of block `i` within the basis.
    pub fn block_offset(&self, i: usize) -> usize {
        self.blocks[..i].iter().map(|b| b.dim).sum()
    }

    /// Pairs of blocks whose joint phases sit within 10x the clustering
    /// tolerance of each other; the decomposition is discontinuous in the
    /// data there and the caller should know.
    pub fn near_degenerate(&self) -> &[(usize, usize, f64)] {
        &self.near_degenerate
    }

    /// `basis^dag A basis`.
    pub fn to_block_basis(&self, a: &CMatrix) -> CMatrix {
        self.basis.adjoint() * a * &self.basis
    }

    /// Inverse of [`Self::to_block_basis`].
    pub fn from_block_basis(&self, a: &CMatrix) -> CMatrix {
        &self.basis * a * self.basis.adjoint()
    }
}

/// Compute the maximal shared eigenspace decomposition of a consistent set.
///
/// A random Hermitian combination of the propagators is diagonalized (it is
/// exactly block scalar on the joint eigenspaces, so a generic combination
/// separates them with probability 1), the per-column joint phase tuples are
/// clustered by single linkage with per-coordinate threshold `tol`, and the
/// result is validated against every propagator, reseeding the combination
/// when an accidental collision is detected.
pub fn shared_eigenspaces(set: &TomographySet, tol: f64) -> Result<BlockDecomposition> {
    if !(tol > 0.0) {
        return Err(Error::Config(
            "clustering tolerance must be positive".into(),
        ));
    }
    let us = set.unitaries();
    for j in 0..us.len() {
        for k in (j + 1)..us.len() {
            let norm = commutator_norm(&us[j], &us[k]);
            if !(norm <= tol) {
                return Err(Error::Inconsistency { j, k, norm });
            }
        }
    }

    let d = set.dim();
    let m = set.len();
    let mut best_residual = f64::INFINITY;
    for attempt in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x746f_6d6f + attempt);
        let mut combo = CMatrix::zeros(d, d);
        for u in us {
            let c: f64 = rng.random::<f64>() - 0.5;
            let s: f64 = rng.random::<f64>() - 0.5;
            let herm = (u + u.adjoint()).scale(0.5);
            let skew = (u - u.adjoint()) * Complex64::new(0.0, -0.5);
            combo += herm.scale(c) + skew.scale(s);
        }
        let (_, omega) = herm_eig(&combo)?;

        // Joint phase tuple of every basis column.
        let conjugated: Vec<CMatrix> =
            us.iter().map(|u| omega.adjoint() * u * &omega).collect();
        let tuples: Vec<Vec<Complex64>> = (0..d)
            .map(|k| (0..m).map(|j| conjugated[j][(k, k)]).collect())
            .collect();

        let clusters = single_linkage(&tuples, tol);
        let perm: Vec<usize> = clusters.iter().flatten().copied().collect();
        let mut basis = CMatrix::zeros(d, d);
        for (dst, &src) in perm.iter().enumerate() {
            basis.set_column(dst, &omega.column(src));
        }

        let blocks: Vec<Block> = clusters
            .iter()
            .map(|members| {
                let phases = (0..m)
                    .map(|j| {
                        let mean: Complex64 =
                            members.iter().map(|&k| tuples[k][j]).sum::<Complex64>()
                                / members.len() as f64;
                        mean / mean.norm().max(1e-300)
                    })
                    .collect();
                Block {
                    dim: members.len(),
                    phases,
                }
            })
            .collect();

        // Validate block-scalar form of every conjugated propagator.
        let mut residual = 0.0f64;
        for (j, u) in us.iter().enumerate() {
            let e = basis.adjoint() * u * &basis;
            let mut col = 0usize;
            let mut expect = CMatrix::zeros(d, d);
            for b in &blocks {
                for k in col..col + b.dim {
                    expect[(k, k)] = b.phases[j];
                }
                col += b.dim;
            }
            residual = residual.max(
                (e - expect).iter().map(|z| z.norm()).fold(0.0, f64::max),
            );
        }
        let phase_residual = blocks
            .iter()
            .flat_map(|b| b.phases.iter())
            .map(|p| (p.norm() - 1.0).abs())
            .fold(0.0, f64::max);
        residual = residual.max(phase_residual);
        best_residual = best_residual.min(residual);
        if residual > (d as f64) * tol {
            continue; // collision in the random combination; reseed
        }

        let near_degenerate = near_degenerate_pairs(&clusters, &tuples, tol);
        return Ok(BlockDecomposition {
            basis,
            blocks,
            near_degenerate,
        });
    }
    Err(Error::Decomposition {
        residual: best_residual,
    })
}

/// Single-linkage clustering of phase tuples: two tuples are adjacent when
/// every coordinate agrees within `tol`; clusters are connected components,
/// ordered by smallest member index.
fn single_linkage(tuples: &[Vec<Complex64>], tol: f64) -> Vec<Vec<usize>> {
    let n = tuples.len();
    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for start in 0..n {
        if assigned[start] {
            continue;
        }
        let mut members = vec![start];
        assigned[start] = true;
        let mut frontier = vec![start];
        while let Some(a) = frontier.pop() {
            for b in 0..n {
                if !assigned[b] && tuple_distance(&tuples[a], &tuples[b]) <= tol {
                    assigned[b] = true;
                    members.push(b);
                    frontier.push(b);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters
}

fn tuple_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn near_degenerate_pairs(
    clusters: &[Vec<usize>],
    tuples: &[Vec<Complex64>],
    tol: f64,
) -> Vec<(usize, usize, f64)> {
    let mut pairs = Vec::new();
    for i in 0..clusters.len() {
        for k in (i + 1)..clusters.len() {
            let dist = clusters[i]
                .iter()
                .flat_map(|&a| {
                    clusters[k]
                        .iter()
                        .map(move |&b| tuple_distance(&tuples[a], &tuples[b]))
                })
                .fold(f64::INFINITY, f64::min);
            if dist < 10.0 * tol {
                pairs.push((i, k, dist));
            }
        }
    }
    pairs
}

/// Outcome of checking a decomposed snapshot set for consistency: does an
/// admissible block energy exist for every block?
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    /// True when every block's phase congruences are solvable within `tol`.
    pub consistent: bool,
    /// Per-block `max_j |exp(-i t_j h_i) - lambda_i^(j)|` for the best
    /// branch found.
    pub block_residuals: Vec<f64>,
    /// The solving block energy, where one exists.
    pub block_energies: Vec<Option<f64>>,
    /// Near-degeneracy and irrational-fallback notes.
    pub warnings: Vec<String>,
}

/// Check whether an admissible Hamiltonian exists for the decomposed set:
/// for each block, search the branches of the logarithm for a block energy
/// reproducing every measured phase within `tol`.
pub fn validate_consistency(
    set: &TomographySet,
    decomp: &BlockDecomposition,
    structure: &RationalStructure,
    tol: f64,
) -> ConsistencyReport {
    let mut block_residuals = Vec::with_capacity(decomp.kappa());
    let mut block_energies = Vec::with_capacity(decomp.kappa());
    for block in decomp.blocks() {
        let search = hamiltonian::best_branch(&block.phases, set.times(), structure, tol);
        block_residuals.push(search.residual);
        block_energies.push(search.energy);
    }
    let mut warnings: Vec<String> = decomp
        .near_degenerate()
        .iter()
        .map(|(i, k, dist)| {
            format!(
                "blocks {i} and {k} are within 10x the clustering tolerance \
                 (joint-phase distance {dist:.3e}); the decomposition is \
                 sensitive to the input here"
            )
        })
        .collect();
    if !structure.is_rational() {
        warnings.push(
            "times treated as irrationally related: the admissible family is \
             a singleton and the inverse problem is highly non-robust"
                .into(),
        );
    }
    ConsistencyReport {
        consistent: block_energies.iter().all(|e| e.is_some()),
        block_residuals,
        block_energies,
        warnings,
    }
}
