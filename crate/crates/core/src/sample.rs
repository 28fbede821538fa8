//! Deterministic random generators for algebras, elements, ideals and
//! endomorphisms. Property tests and the acceptance suite drive everything
//! through these so that failures replay from a seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{AlgElement, BlockIdeal, FdAlgebra};
use crate::endo::Endomorphism;

/// A random block algebra with 1..=max_blocks blocks of size 1..=max_dim.
pub fn random_algebra<R: Rng>(rng: &mut R, max_blocks: usize, max_dim: usize) -> FdAlgebra {
    let b = rng.gen_range(1..=max_blocks);
    let dims = (0..b).map(|_| rng.gen_range(1..=max_dim)).collect();
    FdAlgebra::new(dims).expect("dims are positive")
}

/// A random element with entries uniform in the square [-1, 1]².
pub fn random_element<R: Rng>(rng: &mut R, algebra: &FdAlgebra) -> AlgElement {
    let blocks = algebra
        .block_dims()
        .iter()
        .map(|&n| {
            DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        })
        .collect();
    AlgElement::from_blocks(algebra, blocks).expect("shapes match")
}

/// A random self-adjoint element.
pub fn random_hermitian<R: Rng>(rng: &mut R, algebra: &FdAlgebra) -> AlgElement {
    let a = random_element(rng, algebra);
    a.add(&a.adjoint()).scale(Complex64::new(0.5, 0.0))
}

/// A uniformly random subset ideal (possibly empty or full).
pub fn random_ideal<R: Rng>(rng: &mut R, algebra: &FdAlgebra) -> BlockIdeal {
    let members = (0..algebra.block_count()).filter(|_| rng.gen_bool(0.5));
    BlockIdeal::new(algebra, members).expect("indices in range")
}

/// A random n×n unitary from the QR factor of a random complex matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let q = g.qr().q();
    debug_assert!((q.adjoint() * &q - DMatrix::<Complex64>::identity(n, n)).norm() < 1e-10);
    q
}

/// A random endomorphism: each target row is filled by a greedy random
/// composition of source-block dimensions (leaving a random pad), and every
/// block gets a random unitary twist.
pub fn random_endomorphism<R: Rng>(rng: &mut R, algebra: &FdAlgebra) -> Endomorphism {
    let bc = algebra.block_count();
    let mut mult = vec![vec![0usize; bc]; bc];
    for (c, row) in mult.iter_mut().enumerate() {
        let mut remaining = algebra.block_dim(c);
        loop {
            let candidates: Vec<usize> = (0..bc)
                .filter(|&b| algebra.block_dim(b) <= remaining)
                .collect();
            if candidates.is_empty() || rng.gen_bool(0.3) {
                break;
            }
            let b = candidates[rng.gen_range(0..candidates.len())];
            row[b] += 1;
            remaining -= algebra.block_dim(b);
        }
    }
    let unitaries = (0..bc)
        .map(|c| random_unitary(rng, algebra.block_dim(c)))
        .collect();
    Endomorphism::new(algebra, mult, Some(unitaries), None).expect("rows are balanced")
}

/// A random automorphism: a permutation of equal-dimension blocks with
/// random unitary twists.
pub fn random_automorphism<R: Rng>(rng: &mut R, algebra: &FdAlgebra) -> Endomorphism {
    let bc = algebra.block_count();
    // Shuffle block indices within each dimension class.
    let mut by_dim: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for b in 0..bc {
        by_dim.entry(algebra.block_dim(b)).or_default().push(b);
    }
    let mut sigma = vec![0usize; bc]; // target c receives block sigma[c]
    for (_, group) in by_dim.iter() {
        let mut shuffled = group.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        for (slot, &src) in group.iter().zip(&shuffled) {
            sigma[*slot] = src;
        }
    }
    let mut mult = vec![vec![0usize; bc]; bc];
    for c in 0..bc {
        mult[c][sigma[c]] = 1;
    }
    let unitaries = (0..bc)
        .map(|c| random_unitary(rng, algebra.block_dim(c)))
        .collect();
    Endomorphism::new(algebra, mult, Some(unitaries), None).expect("permutation is balanced")
}

/// A random ideal that is invariant under the endomorphism, built by closing
/// a random seed set forward under the block-level image.
pub fn random_invariant_ideal<R: Rng>(rng: &mut R, endo: &Endomorphism) -> BlockIdeal {
    let algebra = endo.algebra();
    let bc = algebra.block_count();
    let mut members: std::collections::BTreeSet<usize> =
        (0..bc).filter(|_| rng.gen_bool(0.4)).collect();
    loop {
        let mut grew = false;
        for b in members.clone() {
            for c in 0..bc {
                if endo.multiplicity()[c][b] > 0 && members.insert(c) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    BlockIdeal::new(algebra, members).expect("indices in range")
}
