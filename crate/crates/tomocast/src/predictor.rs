//! The maximum-ignorance predicted evolution map.
//!
//! Averaging the conjugation `A -> U(t) A U(t)^dag` over the admissible
//! family, with i.i.d. lattice coordinates drawn from the prior, collapses
//! to a one-parameter family of completely positive trace-preserving maps:
//! a convex mix, weighted by the squared characteristic function of the
//! prior, of the unitary evolution under the distinguished Hamiltonian and
//! the projections onto the commutant and bicommutant of the propagators.
//! At the measurement times the weight returns to 1 and the map reproduces
//! the snapshots exactly; in between it interpolates with dephasing and
//! depolarizing character.
//!
//! The map is evaluated blockwise (diagonal blocks mix with their trace,
//! off-diagonal blocks pick up a phase and the weight), which avoids ever
//! materializing a superoperator; the Choi matrix is built separately as a
//! certificate of complete positivity.

use num_complex::Complex64;

use crate::distributions::PriorDistribution;
use crate::error::{Error, Result};
use crate::hamiltonian::AdmissibleHamiltonian;
use crate::linalg::{self, herm_eig, hs_distance, identity, CMatrix};
use crate::snapshot::BlockDecomposition;

/// Orthogonal projection onto the commutant of the propagators: keep the
/// diagonal blocks, zero the off-diagonal blocks (a pinching).
pub fn pinch_commutant(a: &CMatrix, decomp: &BlockDecomposition) -> Result<CMatrix> {
    check_dim(a, decomp)?;
    let mut tilde = decomp.to_block_basis(a);
    let d = decomp.dim();
    let spans: Vec<(usize, usize)> = block_spans(decomp);
    for r in 0..d {
        for c in 0..d {
            if block_of(&spans, r) != block_of(&spans, c) {
                tilde[(r, c)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(decomp.from_block_basis(&tilde))
}

/// Orthogonal projection onto the bicommutant: each diagonal block becomes
/// its normalized trace times the identity.
pub fn project_bicommutant(a: &CMatrix, decomp: &BlockDecomposition) -> Result<CMatrix> {
    check_dim(a, decomp)?;
    let tilde = decomp.to_block_basis(a);
    let d = decomp.dim();
    let mut out = CMatrix::zeros(d, d);
    for (i, block) in decomp.blocks().iter().enumerate() {
        let off = decomp.block_offset(i);
        let mut tr = Complex64::new(0.0, 0.0);
        for k in off..off + block.dim {
            tr += tilde[(k, k)];
        }
        let scal = tr / block.dim as f64;
        for k in off..off + block.dim {
            out[(k, k)] = scal;
        }
    }
    Ok(decomp.from_block_basis(&out))
}

fn check_dim(a: &CMatrix, decomp: &BlockDecomposition) -> Result<()> {
    linalg::check_square(a)?;
    if a.nrows() != decomp.dim() {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, decomposition is {}-dimensional",
            a.nrows(),
            a.ncols(),
            decomp.dim()
        )));
    }
    Ok(())
}

fn block_spans(decomp: &BlockDecomposition) -> Vec<(usize, usize)> {
    decomp
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| (decomp.block_offset(i), b.dim))
        .collect()
}

fn block_of(spans: &[(usize, usize)], index: usize) -> usize {
    spans
        .iter()
        .position(|&(off, dim)| index >= off && index < off + dim)
        .expect("index inside decomposition")
}

/// The predicted evolution map for one snapshot set, prior and time
/// parameter.
#[derive(Debug, Clone)]
pub struct PredictedChannel {
    decomp: BlockDecomposition,
    hhat: AdmissibleHamiltonian,
    dist: PriorDistribution,
}

impl PredictedChannel {
    /// Bundle a decomposition, its extracted Hamiltonian and a prior.
    ///
    /// When the time structure was irrational the admissible family is a
    /// singleton and the channel degenerates to the unitary evolution under
    /// the unique Hamiltonian; [`Self::is_unitary_fallback`] reports this.
    pub fn new(
        decomp: BlockDecomposition,
        hhat: AdmissibleHamiltonian,
        dist: PriorDistribution,
    ) -> Result<Self> {
        if hhat.block_energies().len() != decomp.kappa() {
            return Err(Error::Dimension(
                "Hamiltonian block count does not match decomposition".into(),
            ));
        }
        if hhat.matrix().nrows() != decomp.dim() {
            return Err(Error::Dimension(
                "Hamiltonian dimension does not match decomposition".into(),
            ));
        }
        Ok(PredictedChannel { decomp, hhat, dist })
    }

    pub fn decomposition(&self) -> &BlockDecomposition {
        &self.decomp
    }

    pub fn hamiltonian(&self) -> &AdmissibleHamiltonian {
        &self.hhat
    }

    pub fn prior(&self) -> &PriorDistribution {
        &self.dist
    }

    /// Lattice frequency, `None` in the unitary fallback.
    pub fn gamma(&self) -> Option<f64> {
        self.hhat.gamma()
    }

    /// True when irrational times collapsed the admissible family to a
    /// singleton, making the prediction purely unitary.
    pub fn is_unitary_fallback(&self) -> bool {
        self.hhat.gamma().is_none()
    }

    /// The mixing weight `|phi(2 pi gamma t)|^2` multiplying the unitary
    /// part of the map; identically 1 in the unitary fallback.
    pub fn unitary_weight(&self, t: f64) -> f64 {
        match self.hhat.gamma() {
            Some(gamma) => {
                self.dist
                    .char_fn(2.0 * std::f64::consts::PI * gamma * t)
                    .norm_sqr()
            }
            None => 1.0,
        }
    }

    /// Apply the predicted map at time `t` (any sign) to an operator.
    ///
    /// Diagonal blocks: `alpha A_ii + (1 - alpha) Tr(A_ii)/mu 1` with
    /// `alpha = w + (1 - w)/(mu + 1)`; one-dimensional blocks pass through
    /// untouched. Off-diagonal blocks: `w exp(-i t (h_i - h_j)) A_ij`.
    pub fn apply(&self, t: f64, a: &CMatrix) -> Result<CMatrix> {
        check_dim(a, &self.decomp)?;
        let w = self.unitary_weight(t);
        let energies = self.hhat.block_energies();
        let tilde = self.decomp.to_block_basis(a);
        let d = self.decomp.dim();
        let mut out = CMatrix::zeros(d, d);
        let spans = block_spans(&self.decomp);
        for (i, &(ri, mi)) in spans.iter().enumerate() {
            for (j, &(cj, mj)) in spans.iter().enumerate() {
                if i == j {
                    if mi == 1 {
                        out[(ri, ri)] = tilde[(ri, ri)];
                        continue;
                    }
                    let alpha = w + (1.0 - w) / (mi as f64 + 1.0);
                    let mut tr = Complex64::new(0.0, 0.0);
                    for k in ri..ri + mi {
                        tr += tilde[(k, k)];
                    }
                    let fill = tr * ((1.0 - alpha) / mi as f64);
                    for r in ri..ri + mi {
                        for c in ri..ri + mi {
                            out[(r, c)] = tilde[(r, c)] * alpha;
                            if r == c {
                                out[(r, c)] += fill;
                            }
                        }
                    }
                } else {
                    let phase =
                        Complex64::from_polar(w, -t * (energies[i] - energies[j]));
                    for r in ri..ri + mi {
                        for c in cj..cj + mj {
                            out[(r, c)] = tilde[(r, c)] * phase;
                        }
                    }
                }
            }
        }
        Ok(self.decomp.from_block_basis(&out))
    }

    /// Choi matrix of the map at time `t`, the standard certificate of
    /// complete positivity and trace preservation.
    pub fn choi(&self, t: f64) -> Result<ChoiMatrix> {
        let d = self.decomp.dim();
        let mut j_mat = CMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for k in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(j, k)] = Complex64::new(1.0, 0.0);
                let image = self.apply(t, &unit)?;
                for p in 0..d {
                    for q in 0..d {
                        j_mat[(p * d + j, q * d + k)] = image[(p, q)];
                    }
                }
            }
        }
        Ok(ChoiMatrix { matrix: j_mat, dim: d })
    }

    /// Evolve a density matrix over a list of times.
    pub fn trajectory(&self, rho0: &CMatrix, times: &[f64]) -> Result<Vec<CMatrix>> {
        check_density(rho0)?;
        times.iter().map(|&t| self.apply(t, rho0)).collect()
    }
}

fn check_density(rho: &CMatrix) -> Result<()> {
    let (eigs, _) = herm_eig(rho).map_err(|e| match e {
        Error::Hermiticity { residual } => {
            Error::State(format!("state is not Hermitian (residual {residual:.3e})"))
        }
        other => other,
    })?;
    let trace: f64 = eigs.iter().sum();
    if (trace - 1.0).abs() > 1e-10 {
        return Err(Error::State(format!("state trace is {trace}, expected 1")));
    }
    if eigs.iter().any(|&e| e < -1e-9) {
        return Err(Error::State(format!(
            "state has negative eigenvalue {:.3e}",
            eigs.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    Ok(())
}

/// Choi matrix `J = sum_{jk} Psi(E_jk) (x) E_jk` of a map on a
/// `dim`-dimensional system; `J` is `dim^2 x dim^2` with trace `dim` for
/// trace-preserving maps and positive semidefinite exactly when the map is
/// completely positive.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    matrix: CMatrix,
    dim: usize,
}

impl ChoiMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// System dimension (the matrix itself is `dim^2 x dim^2`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diagonal().iter().sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hs_distance(&self.matrix, &self.matrix.adjoint())
    }

    /// Ascending eigenvalues of the (Hermitian) Choi matrix.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (eigs, _) = herm_eig(&self.matrix)?;
        Ok(eigs)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }
}

/// Closed form of the qubit channel with two one-dimensional blocks
/// (a dephasing interpolation): `Psi(A) = (A + Z A Z)/2 + (w/2)
/// exp(-2 i a t Z) (A - Z A Z)` where `Hhat = a Z + b 1` and `w` is the
/// unitary weight at `t`.
pub fn dephasing_closed_form(
    zhat: &CMatrix,
    a: f64,
    w: f64,
    t: f64,
    input: &CMatrix,
) -> Result<CMatrix> {
    linalg::check_same_dim(zhat, input)?;
    let zaz = zhat * input * zhat;
    let sym = (input + &zaz).scale(0.5);
    let anti = input - &zaz;
    let rot = linalg::expm_i_herm(&zhat.scale(2.0 * a), t)?;
    Ok(sym + (rot * anti).scale(0.5 * w))
}

/// Closed form of the single-block qubit channel (a periodic
/// depolarization): `Psi(A) = (1 + 2w)/3 A + (2 Tr A / 3)(1 - w) 1/2`.
pub fn depolarizing_closed_form(w: f64, input: &CMatrix) -> CMatrix {
    let d = input.nrows();
    let tr: Complex64 = input.diagonal().iter().sum();
    input.scale((1.0 + 2.0 * w) / 3.0)
        + identity(d) * (tr * ((2.0 / 3.0) * (1.0 - w) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{extract_min_norm_hamiltonian, DEFAULT_BRANCH_TOL};
    use crate::linalg::testmat::*;
    use crate::linalg::hs_norm;
    use crate::rational::rationalize;
    use crate::snapshot::{shared_eigenspaces, TomographySet, DEFAULT_CLUSTER_TOL};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    pub(crate) fn channel_for(
        h0: &CMatrix,
        times: &[f64],
        dist: PriorDistribution,
    ) -> (TomographySet, PredictedChannel) {
        let set = TomographySet::from_hamiltonian(h0, times).unwrap();
        let decomp = shared_eigenspaces(&set, DEFAULT_CLUSTER_TOL).unwrap();
        let structure = rationalize(times, 64, 1e-9).unwrap();
        let hhat =
            extract_min_norm_hamiltonian(&decomp, &structure, times, DEFAULT_BRANCH_TOL)
                .unwrap();
        let channel = PredictedChannel::new(decomp, hhat, dist).unwrap();
        (set, channel)
    }

    fn random_matrix(dim: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn pinch_examples() {
        // Single block: the commutant is everything.
        let (_, channel) = channel_for(
            &real_diag(&[0.0, 0.0]),
            &[1.0],
            PriorDistribution::delta(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(2, &mut rng);
        let p = pinch_commutant(&a, channel.decomposition()).unwrap();
        assert!(hs_distance(&p, &a) < 1e-12);

        // Two one-dimensional blocks: P(A) = (A + Z A Z)/2.
        let (_, channel) = channel_for(
            &real_diag(&[0.4, -0.4]),
            &[1.0],
            PriorDistribution::delta(),
        );
        let d = channel.decomposition();
        let a = random_matrix(2, &mut rng);
        let p = pinch_commutant(&a, d).unwrap();
        let zhat = d.from_block_basis(&real_diag(&[1.0, -1.0]));
        let expect = (&a + &zhat * &a * &zhat).scale(0.5);
        assert!(hs_distance(&p, &expect) < 1e-12);
        // Purely off-diagonal operators are annihilated.
        let px = pinch_commutant(&pauli_x(), d).unwrap();
        assert!(hs_norm(&px) < 1e-12);
    }

    #[test]
    fn bicommutant_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // All blocks one-dimensional: bicommutant projection = pinching.
        let (_, channel) = channel_for(
            &real_diag(&[0.4, -0.4]),
            &[1.0],
            PriorDistribution::delta(),
        );
        let a = random_matrix(2, &mut rng);
        let d = channel.decomposition();
        assert!(
            hs_distance(
                &project_bicommutant(&a, d).unwrap(),
                &pinch_commutant(&a, d).unwrap()
            ) < 1e-12
        );

        // Single block: everything projects onto Tr(A) 1/d.
        let (_, channel) = channel_for(
            &real_diag(&[0.0, 0.0]),
            &[1.0],
            PriorDistribution::delta(),
        );
        let a = random_matrix(2, &mut rng);
        let tr: Complex64 = a.diagonal().iter().sum();
        let expect = identity(2) * (tr / 2.0);
        assert!(
            hs_distance(
                &project_bicommutant(&a, channel.decomposition()).unwrap(),
                &expect
            ) < 1e-12
        );
    }

    #[test]
    fn projector_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h0 = {
            let w = crate::oracles::haar_sample_unitary(5, 77);
            let d = real_diag(&[0.9, 0.9, -0.4, -0.4, 0.2]);
            let m = &w * d * w.adjoint();
            (&m + m.adjoint()).scale(0.5)
        };
        let (_, channel) = channel_for(&h0, &[1.0], PriorDistribution::delta());
        let d = channel.decomposition();
        for _ in 0..5 {
            let a = random_matrix(5, &mut rng);
            let b = random_matrix(5, &mut rng);
            let pc = pinch_commutant(&a, d).unwrap();
            let pb = project_bicommutant(&a, d).unwrap();
            // Idempotence and composition.
            assert!(hs_distance(&pinch_commutant(&pc, d).unwrap(), &pc) < 1e-11);
            assert!(hs_distance(&project_bicommutant(&pb, d).unwrap(), &pb) < 1e-11);
            assert!(hs_distance(&project_bicommutant(&pc, d).unwrap(), &pb) < 1e-11);
            assert!(hs_distance(&pinch_commutant(&pb, d).unwrap(), &pb) < 1e-11);
            // Orthogonality of the pinching.
            let pcb = pinch_commutant(&b, d).unwrap();
            let cross = crate::linalg::hs_inner(&pc, &(&b - &pcb)).unwrap();
            assert!(cross.norm() < 1e-11);
        }
    }

    #[test]
    fn apply_is_identity_at_t0_and_anchored_at_snapshots() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h0 = random_hermitian(3, &mut rng);
        let times = [0.75, 1.5, 2.5];
        let (set, channel) = channel_for(
            &h0,
            &times,
            PriorDistribution::binomial(2),
        );
        let a = random_matrix(3, &mut rng);
        assert!(hs_distance(&channel.apply(0.0, &a).unwrap(), &a) < 1e-12);
        for (j, &t) in times.iter().enumerate() {
            let u = &set.unitaries()[j];
            let expect = u * &a * u.adjoint();
            let got = channel.apply(t, &a).unwrap();
            assert!(
                hs_distance(&got, &expect) <= 1e-9 * hs_norm(&a),
                "anchor {j} residual {}",
                hs_distance(&got, &expect)
            );
        }
    }

    #[test]
    fn qubit_dephasing_value() {
        // kappa = 2 qubit, Hhat = (pi/2) sigma_z, binomial m=1 prior,
        // gamma = 1, t = 1/4: the image of sigma_x is
        // sqrt(2)/8 (sigma_x + sigma_y).
        let h0 = real_diag(&[PI / 2.0, -PI / 2.0]);
        let (_, channel) = channel_for(&h0, &[1.0, 2.0], PriorDistribution::binomial(1));
        assert_relative_eq!(channel.gamma().unwrap(), 1.0, epsilon = 1e-12);
        let t = 0.25;
        assert_relative_eq!(channel.unitary_weight(t), 0.25, epsilon = 1e-12);
        let got = channel.apply(t, &pauli_x()).unwrap();
        let expect = (pauli_x() + pauli_y()).scale(2.0f64.sqrt() / 8.0);
        assert!(hs_distance(&got, &expect) < 1e-12);
    }

    #[test]
    fn dephasing_closed_form_matches_engine() {
        let a_param = 0.77;
        let h0 = real_diag(&[a_param + 0.1, -a_param + 0.1]);
        for dist in [
            PriorDistribution::binomial(1),
            PriorDistribution::exponential(1.0).unwrap(),
            PriorDistribution::truncated_uniform(2),
        ] {
            let (_, channel) = channel_for(&h0, &[1.0, 2.0], dist);
            let d = channel.decomposition();
            // Z with +1 on the first block in decomposition order.
            let energies = channel.hamiltonian().block_energies();
            let zdiag = real_diag(&[1.0, -1.0]);
            let zhat = d.from_block_basis(&zdiag);
            let a = (energies[0] - energies[1]) / 2.0;
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let input = random_matrix(2, &mut rng);
            for i in 0..200 {
                let t = -1.0 + 5.0 * i as f64 / 199.0;
                let w = channel.unitary_weight(t);
                let engine = channel.apply(t, &input).unwrap();
                let closed = dephasing_closed_form(&zhat, a, w, t, &input).unwrap();
                assert!(
                    hs_distance(&engine, &closed) <= 1e-10,
                    "t = {t}: {}",
                    hs_distance(&engine, &closed)
                );
            }
        }
    }

    #[test]
    fn depolarizing_closed_form_matches_engine() {
        let h0 = real_diag(&[0.0, 0.0]);
        let (_, channel) = channel_for(
            &h0,
            &[1.0, 2.0],
            PriorDistribution::truncated_uniform(1),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let input = random_matrix(2, &mut rng);
        for i in 0..200 {
            let t = 4.0 * i as f64 / 199.0;
            let w = channel.unitary_weight(t);
            let engine = channel.apply(t, &input).unwrap();
            let closed = depolarizing_closed_form(w, &input);
            assert!(hs_distance(&engine, &closed) <= 1e-10);
        }
    }

    #[test]
    fn single_dim_blocks_pass_through_exactly() {
        let h0 = real_diag(&[0.9, -0.2, 0.4]);
        let (_, channel) = channel_for(&h0, &[1.0], PriorDistribution::normal(0.5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_matrix(3, &mut rng);
        let tilde_in = channel.decomposition().to_block_basis(&a);
        let out = channel.apply(0.37, &a).unwrap();
        let tilde_out = channel.decomposition().to_block_basis(&out);
        for k in 0..3 {
            // Bitwise equality of the diagonal in the block basis.
            assert_eq!(tilde_in[(k, k)], tilde_out[(k, k)]);
        }
    }

    #[test]
    fn choi_certificates() {
        // Identity map at t = 0: rank one with eigenvalue d.
        let (_, channel) = channel_for(
            &real_diag(&[0.3, -0.8]),
            &[1.0],
            PriorDistribution::binomial(1),
        );
        let choi = channel.choi(0.0).unwrap();
        let eigs = choi.eigenvalues().unwrap();
        assert_relative_eq!(eigs[3], 2.0, epsilon = 1e-10);
        assert!(eigs[2].abs() < 1e-10);
        assert!((choi.trace() - Complex64::new(2.0, 0.0)).norm() < 1e-10);

        // Delta prior: unitary at every t, so rank one everywhere.
        let (_, channel) = channel_for(
            &real_diag(&[0.3, -0.8]),
            &[1.0],
            PriorDistribution::delta(),
        );
        let choi = channel.choi(0.6283).unwrap();
        let eigs = choi.eigenvalues().unwrap();
        assert_relative_eq!(eigs[3], 2.0, epsilon = 1e-10);
        assert!(eigs[2].abs() < 1e-10);

        // Binomial prior at weight 1/4: still completely positive.
        let (_, channel) = channel_for(
            &real_diag(&[PI / 2.0, -PI / 2.0]),
            &[1.0, 2.0],
            PriorDistribution::binomial(1),
        );
        let choi = channel.choi(0.25).unwrap();
        assert!(choi.min_eigenvalue().unwrap() >= -1e-12);
        assert!((choi.trace() - Complex64::new(2.0, 0.0)).norm() < 1e-10);
        assert!(choi.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn trajectory_behavior() {
        let h0 = real_diag(&[0.0, 0.0]);
        let (_, channel) = channel_for(
            &h0,
            &[1.0, 2.0],
            PriorDistribution::truncated_uniform(1),
        );
        let rho0 = CMatrix::from_row_slice(
            2,
            2,
            &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)],
        );
        // t = 0 returns the state unchanged.
        let traj = channel.trajectory(&rho0, &[0.0]).unwrap();
        assert!(hs_distance(&traj[0], &rho0) < 1e-12);

        // Truncated uniform m = 1 has |phi|^2 = 0 at 2 pi gamma t = 2 pi/3:
        // the image is rho/3 + 1/3.
        let gamma = channel.gamma().unwrap();
        let t = 1.0 / (3.0 * gamma);
        assert!(channel.unitary_weight(t) < 1e-12);
        let traj = channel.trajectory(&rho0, &[t]).unwrap();
        let expect = rho0.scale(1.0 / 3.0) + identity(2).scale(1.0 / 3.0);
        assert!(hs_distance(&traj[0], &expect) < 1e-12);

        // States stay physical along a grid.
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        for rho in channel.trajectory(&rho0, &times).unwrap() {
            let (eigs, _) = herm_eig(&rho).unwrap();
            assert!(eigs[0] >= -1e-9);
            assert!((eigs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn trajectory_rejects_non_states() {
        let (_, channel) = channel_for(
            &real_diag(&[0.0, 0.0]),
            &[1.0],
            PriorDistribution::delta(),
        );
        // Wrong trace.
        let bad = identity(2);
        assert!(matches!(
            channel.trajectory(&bad, &[0.0]),
            Err(Error::State(_))
        ));
        // Negative eigenvalue.
        let bad = real_diag(&[1.5, -0.5]);
        assert!(matches!(
            channel.trajectory(&bad, &[0.0]),
            Err(Error::State(_))
        ));
        // Non-Hermitian.
        let bad = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.), c(0.3, 0.), c(0., 0.), c(0.5, 0.)],
        );
        assert!(matches!(
            channel.trajectory(&bad, &[0.0]),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn negative_times_are_supported() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h0 = random_hermitian(3, &mut rng);
        let (_, channel) = channel_for(&h0, &[1.0, 2.0], PriorDistribution::binomial(1));
        let a = random_matrix(3, &mut rng);
        let fwd = channel.apply(0.4, &a).unwrap();
        let bwd = channel.apply(-0.4, &a.adjoint()).unwrap();
        // Hermiticity preservation relates +t on A to +t on A^dag; the -t
        // map uses the conjugate weight, which is the same real number.
        assert_relative_eq!(
            channel.unitary_weight(0.4),
            channel.unitary_weight(-0.4),
            epsilon = 1e-12
        );
        // Psi_{-t}(Psi_t-ish) sanity: unitary fallback would compose to id;
        // here just check linearity and boundedness.
        assert!(hs_norm(&fwd) <= hs_norm(&a) * 1.0001);
        assert!(hs_norm(&bwd) <= hs_norm(&a) * 1.0001);
    }

    #[test]
    fn irrational_times_degrade_to_unitary() {
        let h0 = real_diag(&[0.3, -0.3]);
        let times = [1.0, 2.0f64.sqrt()];
        let set = TomographySet::from_hamiltonian(&h0, &times).unwrap();
        let decomp = shared_eigenspaces(&set, DEFAULT_CLUSTER_TOL).unwrap();
        let structure = rationalize(&times, 64, 1e-12).unwrap();
        let hhat = extract_min_norm_hamiltonian(
            &decomp,
            &structure,
            &times,
            DEFAULT_BRANCH_TOL,
        )
        .unwrap();
        let channel = PredictedChannel::new(decomp, hhat, PriorDistribution::binomial(2)).unwrap();
        assert!(channel.is_unitary_fallback());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_matrix(2, &mut rng);
        for t in [0.3, 0.9, 5.0] {
            assert_relative_eq!(channel.unitary_weight(t), 1.0, epsilon = 1e-15);
            let u = crate::linalg::expm_i_herm(channel.hamiltonian().matrix(), t).unwrap();
            let expect = &u * &a * u.adjoint();
            assert!(hs_distance(&channel.apply(t, &a).unwrap(), &expect) < 1e-10);
        }
    }
}
