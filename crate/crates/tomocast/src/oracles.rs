//! Independent verification machinery.
//!
//! Everything here checks the predictor from a different direction than the
//! predictor itself computes: Haar-measure Monte-Carlo against closed-form
//! group averages, a brute-force lattice enumeration against the
//! characteristic-function formula, a twirl against the two-dimensional
//! centralizer it must land in, and the diophantine adversary that exhibits
//! how non-robust the inverse problem is even when the Hamiltonian is
//! unique.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hamiltonian::AdmissibleHamiltonian;
use crate::linalg::{self, expm_i_herm, herm_eig, hs_distance, hs_inner, hs_norm, identity, CMatrix};
use crate::predictor::PredictedChannel;
use crate::snapshot::{BlockDecomposition, TomographySet};

/// Enumeration budget for [`bruteforce_prediction`].
pub const BRUTEFORCE_BUDGET: u128 = 10_000_000;

/// Haar-distributed random unitary, deterministic per seed.
///
/// Complex Ginibre matrix, QR decomposition, then the Q factor is fixed by
/// the phases of R's diagonal; without
/// that correction the distribution is not Haar.
pub fn haar_sample_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_unitary_with_rng(n, &mut rng)
}

pub(crate) fn haar_unitary_with_rng(n: usize, rng: &mut impl Rng) -> CMatrix {
    assert!(n >= 1, "dimension must be positive");
    let g = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let phases: Vec<Complex64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() < 1e-300 {
                Complex64::new(1.0, 0.0)
            } else {
                d / d.norm()
            }
        })
        .collect();
    let mut q = qr.q();
    for (i, phase) in phases.iter().enumerate() {
        let scaled = q.column(i) * *phase;
        q.set_column(i, &scaled);
    }
    q
}

/// Closed form of the Haar average of `A -> (W B W^dag) A (W B W^dag)^dag`:
/// a combination of the identity and the trace projector with coefficients
/// built from `Tr B` and `||B||`.
pub fn closed_adjoint_average(b: &CMatrix, a: &CMatrix) -> Result<CMatrix> {
    linalg::check_same_dim(b, a)?;
    let d = a.nrows();
    if d == 1 {
        return Ok(a * Complex64::new(b[(0, 0)].norm_sqr(), 0.0));
    }
    let df = d as f64;
    let tr_sq = b.diagonal().iter().sum::<Complex64>().norm_sqr();
    let norm_sq = hs_norm(b).powi(2);
    let c1 = (df * tr_sq - norm_sq) / (df * (df * df - 1.0));
    let c2 = (df * norm_sq - tr_sq) / (df * df - 1.0);
    let tr_a: Complex64 = a.diagonal().iter().sum();
    Ok(a.scale(c1) + identity(d) * (tr_a * (c2 / df)))
}

/// The blockwise lemma applied directly in the joint eigenbasis; `spans`
/// lists `(offset, dim)` per block and `b_blocks` the per-block operators.
fn blockwise_average_tilde(
    b_blocks: &[CMatrix],
    a_tilde: &CMatrix,
    spans: &[(usize, usize)],
) -> CMatrix {
    let d = a_tilde.nrows();
    let traces: Vec<Complex64> = b_blocks
        .iter()
        .map(|b| b.diagonal().iter().sum())
        .collect();
    let mut out = CMatrix::zeros(d, d);
    for (i, &(ri, mi)) in spans.iter().enumerate() {
        for (j, &(cj, mj)) in spans.iter().enumerate() {
            if i == j {
                if mi == 1 {
                    out[(ri, ri)] =
                        a_tilde[(ri, ri)] * b_blocks[i][(0, 0)].norm_sqr();
                    continue;
                }
                let mu = mi as f64;
                let tr_sq = traces[i].norm_sqr();
                let norm_sq = hs_norm(&b_blocks[i]).powi(2);
                let c1 = (mu * tr_sq - norm_sq) / (mu * (mu * mu - 1.0));
                let c2 = (mu * norm_sq - tr_sq) / (mu * mu - 1.0);
                let mut tr_a = Complex64::new(0.0, 0.0);
                for k in ri..ri + mi {
                    tr_a += a_tilde[(k, k)];
                }
                let fill = tr_a * (c2 / mu);
                for r in ri..ri + mi {
                    for c in ri..ri + mi {
                        out[(r, c)] = a_tilde[(r, c)] * c1;
                        if r == c {
                            out[(r, c)] += fill;
                        }
                    }
                }
            } else {
                let coeff = traces[i] * traces[j].conj() / (mi * mj) as f64;
                for r in ri..ri + mi {
                    for c in cj..cj + mj {
                        out[(r, c)] = a_tilde[(r, c)] * coeff;
                    }
                }
            }
        }
    }
    out
}

fn spans_of(decomp: &BlockDecomposition) -> Vec<(usize, usize)> {
    decomp
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| (decomp.block_offset(i), b.dim))
        .collect()
}

/// Closed form of the blockwise Haar average `A -> (R B R^dag) A (R B
/// R^dag)^dag` with `R` drawn from the product of the block unitary groups;
/// `b_blocks[i]` acts on block `i` in the joint eigenbasis, `a` lives in
/// the computational basis.
pub fn closed_blockwise_average(
    b_blocks: &[CMatrix],
    a: &CMatrix,
    decomp: &BlockDecomposition,
) -> Result<CMatrix> {
    linalg::check_square(a)?;
    if a.nrows() != decomp.dim() {
        return Err(Error::Dimension(
            "operator dimension does not match decomposition".into(),
        ));
    }
    if b_blocks.len() != decomp.kappa() {
        return Err(Error::Dimension(
            "need one block operator per block".into(),
        ));
    }
    for (b, block) in b_blocks.iter().zip(decomp.blocks()) {
        if b.nrows() != block.dim || b.ncols() != block.dim {
            return Err(Error::Dimension(
                "block operator does not match its block dimension".into(),
            ));
        }
    }
    let tilde = decomp.to_block_basis(a);
    let out = blockwise_average_tilde(b_blocks, &tilde, &spans_of(decomp));
    Ok(decomp.from_block_basis(&out))
}

/// Monte-Carlo estimate of the Haar adjoint average, with the aggregate
/// entrywise standard error of the mean.
pub fn mc_adjoint_average(
    b: &CMatrix,
    a: &CMatrix,
    n: usize,
    seed: u64,
) -> Result<(CMatrix, f64)> {
    linalg::check_same_dim(b, a)?;
    if n < 100 {
        return Err(Error::Config(format!(
            "need at least 100 Monte-Carlo samples, got {n}"
        )));
    }
    let d = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = MeanAccumulator::new(d);
    for _ in 0..n {
        let w = haar_unitary_with_rng(d, &mut rng);
        let c = &w * b * w.adjoint();
        acc.push(&(&c * a * c.adjoint()));
    }
    Ok(acc.finish())
}

/// Monte-Carlo estimate of the blockwise Haar average, sampling `R` as a
/// direct sum of per-block Haar unitaries.
pub fn mc_blockwise_average(
    b_blocks: &[CMatrix],
    a: &CMatrix,
    decomp: &BlockDecomposition,
    n: usize,
    seed: u64,
) -> Result<(CMatrix, f64)> {
    if n < 100 {
        return Err(Error::Config(format!(
            "need at least 100 Monte-Carlo samples, got {n}"
        )));
    }
    // Reuse the dimension checks of the closed form.
    closed_blockwise_average(b_blocks, a, decomp)?;
    let d = decomp.dim();
    let spans = spans_of(decomp);
    let tilde = decomp.to_block_basis(a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = MeanAccumulator::new(d);
    for _ in 0..n {
        let mut conj = CMatrix::zeros(d, d);
        for (i, &(off, mu)) in spans.iter().enumerate() {
            let r = haar_unitary_with_rng(mu, &mut rng);
            let local = &r * &b_blocks[i] * r.adjoint();
            for p in 0..mu {
                for q in 0..mu {
                    conj[(off + p, off + q)] = local[(p, q)];
                }
            }
        }
        acc.push(&(&conj * &tilde * conj.adjoint()));
    }
    let (mean_tilde, stderr) = acc.finish();
    Ok((decomp.from_block_basis(&mean_tilde), stderr))
}

/// Entrywise running mean and variance for matrix-valued Monte-Carlo
/// (Welford recurrence, so zero-variance streams report zero instead of
/// cancellation noise).
struct MeanAccumulator {
    count: usize,
    mean: CMatrix,
    m2: Vec<f64>,
}

impl MeanAccumulator {
    fn new(d: usize) -> Self {
        MeanAccumulator {
            count: 0,
            mean: CMatrix::zeros(d, d),
            m2: vec![0.0; d * d],
        }
    }

    fn push(&mut self, sample: &CMatrix) {
        self.count += 1;
        let n = self.count as f64;
        for (e, s) in sample.iter().enumerate() {
            let m = self.mean.as_mut_slice();
            let delta = s - m[e];
            m[e] += delta / n;
            self.m2[e] += (delta.conj() * (s - m[e])).re;
        }
    }

    /// Mean and `sqrt(sum_e Var_e / N)`, the scale against which the
    /// Hilbert-Schmidt deviation of the mean should be judged.
    fn finish(self) -> (CMatrix, f64) {
        let n = self.count as f64;
        let var_total: f64 = self.m2.iter().map(|&m2| m2.max(0.0) / (n - 1.0)).sum();
        (self.mean, (var_total / n).sqrt())
    }
}

/// The trace-reflection involution `Q(A) = 2 Tr(A)/d 1 - A`, a unitary
/// involution on operator space whose span with the identity is the
/// centralizer of all conjugations.
pub fn q_involution(a: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), a.ncols(), "Q acts on square operators");
    let d = a.nrows();
    let tr: Complex64 = a.diagonal().iter().sum();
    identity(d) * (tr * (2.0 / d as f64)) - a
}

/// Superoperator matrix of `A -> U A U^dag` in the column-stacking
/// convention: `kron(conj(U), U)`.
pub fn conjugation_superoperator(u: &CMatrix) -> CMatrix {
    u.map(|z| z.conj()).kronecker(u)
}

/// Result of twirling a superoperator over the unitary group.
#[derive(Debug, Clone)]
pub struct TwirlReport {
    /// Monte-Carlo samples used.
    pub sample_count: usize,
    /// Coefficients on the orthonormalized pair `{id, Q - <Q,id>/<id,id>
    /// id}`.
    pub projected_coeffs: (Complex64, Complex64),
    /// Hilbert-Schmidt norm of the twirl outside `span{id, Q}`.
    pub residual_norm: f64,
    /// Five-sigma statistical bound on the residual from the Monte-Carlo
    /// fluctuation scale; the residual must stay below it.
    pub tolerance_sigma: f64,
}

/// Twirl a superoperator (a `d^2 x d^2` matrix acting on vectorized
/// operators) over Haar conjugations and project onto the centralizer
/// `span{id, Q}`; anything lands there in expectation, so the residual is
/// pure Monte-Carlo noise.
pub fn twirl_superoperator(x: &CMatrix, n: usize, seed: u64) -> Result<TwirlReport> {
    linalg::check_square(x)?;
    let d2 = x.nrows();
    let d = (d2 as f64).sqrt().round() as usize;
    if d * d != d2 {
        return Err(Error::Dimension(format!(
            "superoperator side {d2} is not a perfect square"
        )));
    }
    if n < 100 {
        return Err(Error::Config(format!(
            "need at least 100 Monte-Carlo samples, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = MeanAccumulator::new(d2);
    for _ in 0..n {
        let w = haar_unitary_with_rng(d, &mut rng);
        let s = conjugation_superoperator(&w);
        acc.push(&(&s * x * s.adjoint()));
    }
    let (mean, sigma) = acc.finish();

    // Orthonormal projection onto span{id, Q}.
    let id_mat = identity(d2);
    let q_mat = {
        let mut vec_id = CMatrix::zeros(d2, 1);
        for k in 0..d {
            vec_id[(k * d + k, 0)] = Complex64::new(1.0, 0.0);
        }
        &vec_id * vec_id.transpose() * Complex64::new(2.0 / d as f64, 0.0) - &id_mat
    };
    let q_tilde = &q_mat - &id_mat * Complex64::new((2.0 - (d2 as f64)) / d2 as f64, 0.0);
    let c_id = hs_inner(&id_mat, &mean)? / d2 as f64;
    let q_tilde_sq = hs_inner(&q_tilde, &q_tilde)?.re;
    let c_q = hs_inner(&q_tilde, &mean)? / q_tilde_sq;
    let projected = &id_mat * c_id + &q_tilde * c_q;
    Ok(TwirlReport {
        sample_count: n,
        projected_coeffs: (c_id, c_q),
        residual_norm: hs_distance(&mean, &projected),
        tolerance_sigma: 5.0 * sigma,
    })
}

/// Brute-force evaluation of the predicted map: enumerate the lattice
/// vectors over the prior's support, apply the exact blockwise group
/// average for each, and weight-sum. No characteristic function is ever
/// evaluated, which makes this an independent oracle for the predictor.
pub fn bruteforce_prediction(
    channel: &PredictedChannel,
    t: f64,
    a: &CMatrix,
) -> Result<CMatrix> {
    let decomp = channel.decomposition();
    linalg::check_square(a)?;
    if a.nrows() != decomp.dim() {
        return Err(Error::Dimension(
            "operator dimension does not match channel".into(),
        ));
    }
    let Some(gamma) = channel.gamma() else {
        // Singleton family: the average is the unitary conjugation itself.
        let u = expm_i_herm(channel.hamiltonian().matrix(), t)?;
        return Ok(&u * a * u.adjoint());
    };
    let k_max = channel
        .prior()
        .finite_support()
        .unwrap_or_else(|| channel.prior().tail_truncation(1e-10));
    let d = decomp.dim();
    let width = 2 * k_max + 1;
    let terms = (width as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if terms > BRUTEFORCE_BUDGET {
        return Err(Error::Budget { terms });
    }

    let pmf: Vec<f64> = (-(k_max as i64)..=k_max as i64)
        .map(|k| channel.prior().pmf(k))
        .collect();
    let spans = spans_of(decomp);
    let tilde = decomp.to_block_basis(a);
    let omega = 2.0 * std::f64::consts::PI * gamma * t;

    let mut acc = CMatrix::zeros(d, d);
    let mut digits = vec![0usize; d];
    loop {
        let weight: f64 = digits.iter().map(|&dg| pmf[dg]).product();
        if weight > 0.0 {
            let b_blocks: Vec<CMatrix> = spans
                .iter()
                .map(|&(off, mu)| {
                    CMatrix::from_fn(mu, mu, |p, q| {
                        if p == q {
                            let k = digits[off + p] as i64 - k_max as i64;
                            Complex64::from_polar(1.0, -omega * k as f64)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                })
                .collect();
            acc += blockwise_average_tilde(&b_blocks, &tilde, &spans).scale(weight);
        }
        // Odometer over the d lattice digits.
        let mut pos = 0;
        loop {
            if pos == d {
                let energies = channel.hamiltonian().block_energies();
                let mut out = CMatrix::zeros(d, d);
                for (i, &(ri, mi)) in spans.iter().enumerate() {
                    for (j, &(cj, mj)) in spans.iter().enumerate() {
                        let phase = Complex64::from_polar(1.0, -t * (energies[i] - energies[j]));
                        for r in ri..ri + mi {
                            for c in cj..cj + mj {
                                out[(r, c)] = acc[(r, c)] * phase;
                            }
                        }
                    }
                }
                return Ok(decomp.from_block_basis(&out));
            }
            digits[pos] += 1;
            if digits[pos] < width as usize {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// An explicit witness of the non-robustness of Hamiltonian identification:
/// a Hamiltonian far from the admissible one whose propagators are
/// nevertheless close to every snapshot.
#[derive(Debug, Clone)]
pub struct AdversaryWitness {
    /// The lattice multiple that achieves the epsilon.
    pub r: u64,
    /// `Hhat + (2 pi r / t_1) K`.
    pub hamiltonian: CMatrix,
    /// True Hilbert-Schmidt residuals `||exp(-i t_j H) - U^(j)||`.
    pub unitary_residuals: Vec<f64>,
    /// `||H - Hhat||`, which grows linearly in `r`.
    pub hamiltonian_distance: f64,
}

/// Search `r = 1..r_max` for a Hamiltonian `Hhat + (2 pi r / t_1) K` whose
/// propagators all sit within `epsilon` of the snapshots. `K` defaults to a
/// rank-one integer projector inside the largest block; a custom `K` must
/// be Hermitian, block diagonal in the joint eigenbasis, and have integer
/// spectrum. Dirichlet's approximation theorem guarantees success for large
/// enough `r_max` whatever the times are.
pub fn diophantine_adversary(
    set: &TomographySet,
    decomp: &BlockDecomposition,
    hhat: &AdmissibleHamiltonian,
    epsilon: f64,
    r_max: u64,
    k_op: Option<&CMatrix>,
) -> Result<AdversaryWitness> {
    if !(epsilon > 0.0) || r_max == 0 {
        return Err(Error::Config("epsilon and r_max must be positive".into()));
    }
    let k_mat = match k_op {
        Some(k) => validate_adversary_k(k, decomp)?,
        None => {
            let largest = (0..decomp.kappa())
                .max_by_key(|&i| decomp.blocks()[i].dim)
                .expect("at least one block");
            let col = decomp.basis().column(decomp.block_offset(largest));
            let adjoint = col.adjoint();
            CMatrix::from(col * adjoint)
        }
    };
    let (k_eigs, _) = herm_eig(&k_mat)?;
    let k_ints: Vec<f64> = k_eigs.iter().map(|e| e.round()).collect();

    let tau1 = set.times()[0];
    let ratios: Vec<f64> = set.times().iter().map(|&t| t / tau1).collect();
    let mut best_r = 0u64;
    let mut best_residual = f64::INFINITY;
    for r in 1..=r_max {
        let mut worst = 0.0f64;
        for s in &ratios {
            let mut sq = 0.0;
            for k in &k_ints {
                let x = r as f64 * s * k;
                let frac = x - x.round();
                let amp = 2.0 * (std::f64::consts::PI * frac).sin();
                sq += amp * amp;
            }
            worst = worst.max(sq.sqrt());
        }
        if worst < best_residual {
            best_residual = worst;
            best_r = r;
        }
        if worst <= epsilon {
            let shift = k_mat.scale(2.0 * std::f64::consts::PI * r as f64 / tau1);
            let h = hhat.matrix() + shift;
            let h = (&h + h.adjoint()).scale(0.5);
            let unitary_residuals: Vec<f64> = set
                .times()
                .iter()
                .zip(set.unitaries())
                .map(|(&t, u)| Ok(hs_distance(&expm_i_herm(&h, t)?, u)))
                .collect::<Result<Vec<_>>>()?;
            let hamiltonian_distance = hs_distance(&h, hhat.matrix());
            return Ok(AdversaryWitness {
                r,
                hamiltonian: h,
                unitary_residuals,
                hamiltonian_distance,
            });
        }
    }
    Err(Error::SearchExhausted {
        r_max,
        best_r,
        best_residual,
    })
}

fn validate_adversary_k(k: &CMatrix, decomp: &BlockDecomposition) -> Result<CMatrix> {
    if k.nrows() != decomp.dim() || k.ncols() != decomp.dim() {
        return Err(Error::Dimension(
            "K dimension does not match decomposition".into(),
        ));
    }
    let (eigs, _) = herm_eig(k)?;
    if eigs.iter().any(|e| (e - e.round()).abs() > 1e-8) {
        return Err(Error::Config("K must have integer spectrum".into()));
    }
    if eigs.iter().all(|e| e.round() == 0.0) {
        return Err(Error::Config("K must be nonzero".into()));
    }
    // K must live in the commutant: block diagonal in the joint eigenbasis.
    let tilde = decomp.to_block_basis(k);
    let mut off_norm: f64 = 0.0;
    let spans = spans_of(decomp);
    for (i, &(ri, mi)) in spans.iter().enumerate() {
        for (j, &(cj, mj)) in spans.iter().enumerate() {
            if i == j {
                continue;
            }
            for r in ri..ri + mi {
                for c in cj..cj + mj {
                    off_norm += tilde[(r, c)].norm_sqr();
                }
            }
        }
    }
    if off_norm.sqrt() > 1e-10 {
        return Err(Error::Config(
            "K must be block diagonal in the joint eigenbasis".into(),
        ));
    }
    Ok(k.clone())
}
