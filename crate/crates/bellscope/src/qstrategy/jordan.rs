//! Simultaneous block diagonalization of two projectors (Jordan's lemma).

use super::StrategyError;
use crate::linalg::{eigh, is_hermitian, CMat};
use serde::Serialize;

/// Eigenvalues of `P+Q` closer than this are treated as one eigenspace.
const CLUSTER_TOL: f64 = 1e-8;
const BLOCK_TOL: f64 = 1e-9;

/// One invariant block: columns `offset..offset+size` of the basis.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub offset: usize,
    pub size: usize,
    #[serde(skip)]
    pub p: CMat,
    #[serde(skip)]
    pub q: CMat,
}

/// Unitary `basis` whose columns split into blocks of size 1 or 2 on which both projectors act.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub basis: CMat,
    pub blocks: Vec<Block>,
}

impl BlockDecomposition {
    pub fn two_by_two(&self) -> usize {
        self.blocks.iter().filter(|b| b.size == 2).count()
    }

    /// Largest deviation of `basis · blockdiag · basis†` from the given operators.
    pub fn reconstruction_error(&self, p: &CMat, q: &CMat) -> f64 {
        let d = self.basis.nrows();
        let mut bp = CMat::zeros(d, d);
        let mut bq = CMat::zeros(d, d);
        for b in &self.blocks {
            bp.view_mut((b.offset, b.offset), (b.size, b.size)).copy_from(&b.p);
            bq.view_mut((b.offset, b.offset), (b.size, b.size)).copy_from(&b.q);
        }
        let rp = &self.basis * bp * self.basis.adjoint() - p;
        let rq = &self.basis * bq * self.basis.adjoint() - q;
        rp.camax().max(rq.camax())
    }
}

fn check_projector(m: &CMat) -> Result<(), StrategyError> {
    if !m.is_square() || !is_hermitian(m, 1e-9) || (m * m - m).camax() > 1e-9 {
        return Err(StrategyError::NotProjective);
    }
    Ok(())
}

/// Groups ascending eigenvalues into clusters of (near-)equal value.
fn clusters(vals: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match out.last_mut() {
            Some((rep, idx)) if (v - vals[*idx.last().unwrap()]).abs() <= CLUSTER_TOL => {
                idx.push(i);
                *rep = idx.iter().map(|&k| vals[k]).sum::<f64>() / idx.len() as f64;
            }
            _ => out.push((v, vec![i])),
        }
    }
    out
}

/// Decomposes the space into subspaces of dimension at most two that are invariant under
/// both projectors, built from the eigenspaces of `P+Q`.
///
/// Eigenvalues 0 and 2 give common kernel and common range vectors; eigenvalue 1 gives
/// vectors in exactly one range, split by diagonalizing `P` there; every other eigenvector
/// `v` at `λ` pairs with `(P−Q)v`, which lies at `2−λ`.
pub fn jordan_blocks(p: &CMat, q: &CMat) -> Result<BlockDecomposition, StrategyError> {
    check_projector(p)?;
    check_projector(q)?;
    if p.nrows() != q.nrows() {
        return Err(StrategyError::DimensionMismatch("projectors of different size".into()));
    }
    let d = p.nrows();
    let (vals, vecs) = eigh(&(p + q));
    let diff = p - q;
    let mut columns: Vec<(usize, Vec<crate::linalg::CVec>)> = Vec::new();
    for (lambda, idx) in clusters(&vals) {
        if lambda > 1.0 + CLUSTER_TOL {
            // Covered by the partners of the λ < 1 clusters.
            continue;
        }
        if lambda < CLUSTER_TOL {
            columns.extend(idx.iter().map(|&k| (1, vec![vecs.column(k).into_owned()])));
        } else if (lambda - 1.0).abs() <= CLUSTER_TOL {
            let e = CMat::from_fn(d, idx.len(), |i, j| vecs[(i, idx[j])]);
            let (_, w) = eigh(&(e.adjoint() * p * &e));
            let rotated = e * w;
            columns.extend((0..idx.len()).map(|k| (1, vec![rotated.column(k).into_owned()])));
        } else {
            for &k in &idx {
                let v = vecs.column(k).into_owned();
                let w = &diff * &v;
                let norm = w.norm();
                if norm < CLUSTER_TOL {
                    return Err(StrategyError::NotProjective);
                }
                columns.push((2, vec![v, w.unscale(norm)]));
            }
        }
    }
    // Common range vectors (λ = 2) come last.
    let top: Vec<usize> = clusters(&vals)
        .into_iter()
        .filter(|(l, _)| *l >= 2.0 - CLUSTER_TOL)
        .flat_map(|(_, idx)| idx)
        .collect();
    columns.extend(top.iter().map(|&k| (1, vec![vecs.column(k).into_owned()])));

    let flat: Vec<_> = columns.iter().flat_map(|(_, c)| c.iter().cloned()).collect();
    if flat.len() != d {
        return Err(StrategyError::DimensionMismatch(format!(
            "paired {} of {d} basis vectors",
            flat.len()
        )));
    }
    let basis = CMat::from_columns(&flat);
    let bp = basis.adjoint() * p * &basis;
    let bq = basis.adjoint() * q * &basis;
    let mut blocks = Vec::with_capacity(columns.len());
    let mut offset = 0;
    for (size, _) in &columns {
        blocks.push(Block {
            offset,
            size: *size,
            p: bp.view((offset, offset), (*size, *size)).into_owned(),
            q: bq.view((offset, offset), (*size, *size)).into_owned(),
        });
        offset += size;
    }
    let decomposition = BlockDecomposition { basis, blocks };
    let unitary_err = (decomposition.basis.adjoint() * &decomposition.basis - CMat::identity(d, d)).camax();
    if unitary_err > BLOCK_TOL || decomposition.reconstruction_error(p, q) > BLOCK_TOL {
        return Err(StrategyError::DimensionMismatch(
            "projectors did not split into invariant blocks within tolerance".into(),
        ));
    }
    Ok(decomposition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, pauli_x, pauli_z, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_projector(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> CMat {
        let g = CMat::from_fn(d, rank, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let q = g.qr().q();
        &q * q.adjoint()
    }

    #[test]
    fn commuting_pair_is_diagonal() {
        let p = (identity(2) + pauli_z()).unscale(2.0);
        let dec = jordan_blocks(&p, &p).unwrap();
        assert!(dec.blocks.iter().all(|b| b.size == 1));
    }

    #[test]
    fn qubit_pair_is_one_block() {
        let p = (identity(2) + pauli_z()).unscale(2.0);
        let q = (identity(2) + pauli_x()).unscale(2.0);
        let dec = jordan_blocks(&p, &q).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert_eq!(dec.two_by_two(), 1);
    }

    #[test]
    fn random_rank_three_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = random_projector(&mut rng, 6, 3);
            let q = random_projector(&mut rng, 6, 3);
            let dec = jordan_blocks(&p, &q).unwrap();
            assert!(dec.two_by_two() <= 3);
            assert!(dec.reconstruction_error(&p, &q) < 1e-9);
        }
    }

    #[test]
    fn mixed_ranks_and_shared_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = random_projector(&mut rng, 5, 2);
        let q = random_projector(&mut rng, 5, 4);
        let dec = jordan_blocks(&p, &q).unwrap();
        assert!(dec.reconstruction_error(&p, &q) < 1e-9);
        let zero = CMat::zeros(4, 4);
        let dec = jordan_blocks(&zero, &identity(4)).unwrap();
        assert_eq!(dec.blocks.len(), 4);
    }

    #[test]
    fn rejects_non_projector() {
        assert!(jordan_blocks(&pauli_x(), &identity(2)).is_err());
    }
}
