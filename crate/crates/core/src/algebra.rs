//! Finite-dimensional C*-algebras: block algebras, their elements and ideals.
//!
//! A finite-dimensional C*-algebra is (up to isomorphism) a finite direct sum
//! of full complex matrix algebras. [`FdAlgebra`] records the ordered list of
//! block dimensions; an [`AlgElement`] is one complex matrix per block; every
//! closed two-sided ideal is spanned by a subset of the blocks and is stored
//! as that member set ([`BlockIdeal`]). This makes the entire ideal lattice
//! exact set arithmetic, while element-level questions (norms, distances)
//! reduce to spectral norms of the block matrices.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A finite-dimensional C*-algebra `⊕_b M_{n_b}(ℂ)`, stored as its ordered
/// block dimensions.
///
/// Block indices are 0-based throughout the crate. The zero algebra (no
/// blocks) only arises as a quotient by everything and is flagged by
/// [`FdAlgebra::is_zero_algebra`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdAlgebra {
    block_dims: Vec<usize>,
}

impl FdAlgebra {
    /// A block algebra with the given dimensions. Requires at least one
    /// block, each of positive dimension.
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::validation("an algebra needs at least one block"));
        }
        if let Some(&d) = block_dims.iter().find(|&&d| d == 0) {
            let _ = d;
            return Err(Error::validation("block dimensions must be positive"));
        }
        Ok(FdAlgebra { block_dims })
    }

    /// The zero algebra. Only meaningful as the quotient of an algebra by
    /// all of its blocks; kept out of [`FdAlgebra::new`] on purpose.
    pub(crate) fn zero_algebra() -> Self {
        FdAlgebra { block_dims: Vec::new() }
    }

    /// Number of blocks B.
    pub fn block_count(&self) -> usize {
        self.block_dims.len()
    }

    /// Dimension n_b of block `b`.
    pub fn block_dim(&self, b: usize) -> usize {
        self.block_dims[b]
    }

    /// The ordered block dimensions.
    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    /// Total representation dimension Σ n_b of the identity representation.
    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Whether this is the zero algebra (no blocks).
    pub fn is_zero_algebra(&self) -> bool {
        self.block_dims.is_empty()
    }

    /// Offset of block `b` inside the identity representation ℂ^{Σ n_b}.
    pub fn block_offset(&self, b: usize) -> usize {
        self.block_dims[..b].iter().sum()
    }

    /// The zero element.
    pub fn zero(&self) -> AlgElement {
        AlgElement {
            algebra: self.clone(),
            blocks: self
                .block_dims
                .iter()
                .map(|&n| DMatrix::zeros(n, n))
                .collect(),
        }
    }

    /// The identity element (every block the identity matrix).
    pub fn unit(&self) -> AlgElement {
        AlgElement {
            algebra: self.clone(),
            blocks: self
                .block_dims
                .iter()
                .map(|&n| DMatrix::identity(n, n))
                .collect(),
        }
    }

    /// The unit of the ideal spanned by `members`: identity on member
    /// blocks, zero elsewhere.
    pub fn partial_unit(&self, members: &BTreeSet<usize>) -> AlgElement {
        AlgElement {
            algebra: self.clone(),
            blocks: self
                .block_dims
                .iter()
                .enumerate()
                .map(|(b, &n)| {
                    if members.contains(&b) {
                        DMatrix::identity(n, n)
                    } else {
                        DMatrix::zeros(n, n)
                    }
                })
                .collect(),
        }
    }

    /// The matrix unit e^{(b)}_{p,q} (single 1 in block `b`).
    pub fn matrix_unit(&self, b: usize, p: usize, q: usize) -> AlgElement {
        let mut e = self.zero();
        e.blocks[b][(p, q)] = Complex64::new(1.0, 0.0);
        e
    }

    /// Element with scalar entries on the diagonal of each block; handy for
    /// algebras with many 1×1 blocks.
    pub fn scalar_element(&self, values: &[f64]) -> AlgElement {
        assert_eq!(values.len(), self.block_count(), "one scalar per block");
        AlgElement {
            algebra: self.clone(),
            blocks: self
                .block_dims
                .iter()
                .zip(values)
                .map(|(&n, &v)| DMatrix::from_diagonal_element(n, n, Complex64::new(v, 0.0)))
                .collect(),
        }
    }
}

/// An element of an [`FdAlgebra`]: one complex matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgElement {
    algebra: FdAlgebra,
    blocks: Vec<DMatrix<Complex64>>,
}

/// Largest eigenvalue route to the operator (spectral) norm: ‖m‖ is the
/// square root of the top eigenvalue of the Hermitian PSD matrix m*m.
pub(crate) fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let h = m.adjoint() * m;
    let eigs = h.symmetric_eigenvalues();
    eigs.iter().fold(0.0f64, |acc, &l| acc.max(l)).max(0.0).sqrt()
}

impl AlgElement {
    /// Build an element from explicit blocks, validating shapes.
    pub fn from_blocks(algebra: &FdAlgebra, blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if blocks.len() != algebra.block_count() {
            return Err(Error::validation(format!(
                "expected {} blocks, got {}",
                algebra.block_count(),
                blocks.len()
            )));
        }
        for (b, m) in blocks.iter().enumerate() {
            let n = algebra.block_dim(b);
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::validation(format!(
                    "block {b} must be {n}×{n}, got {}×{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(AlgElement {
            algebra: algebra.clone(),
            blocks,
        })
    }

    /// The ambient algebra.
    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    /// Block matrix `b`.
    pub fn block(&self, b: usize) -> &DMatrix<Complex64> {
        &self.blocks[b]
    }

    /// Mutable block access (kept crate-private so invariants stay local).
    pub(crate) fn block_mut(&mut self, b: usize) -> &mut DMatrix<Complex64> {
        &mut self.blocks[b]
    }

    /// All blocks.
    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    fn check_same_algebra(&self, other: &AlgElement) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::usage(
                "elements belong to different algebras".to_string(),
            ));
        }
        Ok(())
    }

    /// Sum.
    pub fn add(&self, other: &AlgElement) -> AlgElement {
        self.check_same_algebra(other).expect("algebra mismatch in add");
        AlgElement {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(x, y)| x + y)
                .collect(),
        }
    }

    /// Difference.
    pub fn sub(&self, other: &AlgElement) -> AlgElement {
        self.check_same_algebra(other).expect("algebra mismatch in sub");
        AlgElement {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(x, y)| x - y)
                .collect(),
        }
    }

    /// Product (blockwise matrix product).
    pub fn mul(&self, other: &AlgElement) -> AlgElement {
        self.check_same_algebra(other).expect("algebra mismatch in mul");
        AlgElement {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(x, y)| x * y)
                .collect(),
        }
    }

    /// Scalar multiple.
    pub fn scale(&self, lambda: Complex64) -> AlgElement {
        AlgElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|x| x * lambda).collect(),
        }
    }

    /// Involution a ↦ a* (blockwise conjugate transpose).
    pub fn adjoint(&self) -> AlgElement {
        AlgElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|x| x.adjoint()).collect(),
        }
    }

    /// C*-norm: the max over blocks of the spectral norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|m| spectral_norm(m)).fold(0.0, f64::max)
    }

    /// Whether the element is zero up to `tol` in norm.
    pub fn is_zero(&self, tol: f64) -> bool {
        self.norm() <= tol
    }

    /// ‖a − b‖, the natural comparison metric.
    pub fn dist(&self, other: &AlgElement) -> f64 {
        self.sub(other).norm()
    }
}

impl fmt::Display for AlgElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (b, m) in self.blocks.iter().enumerate() {
            writeln!(f, "block {b}:")?;
            write!(f, "{m:.4}")?;
        }
        Ok(())
    }
}

/// A closed two-sided ideal of an [`FdAlgebra`], stored as the set of block
/// indices it contains. Every such ideal is of this form, so the lattice
/// operations below are exhaustive and exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockIdeal {
    algebra: FdAlgebra,
    members: BTreeSet<usize>,
}

impl BlockIdeal {
    /// Ideal spanned by the given block indices.
    pub fn new(algebra: &FdAlgebra, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&b) = members.iter().find(|&&b| b >= algebra.block_count()) {
            return Err(Error::validation(format!(
                "ideal member {b} out of range (algebra has {} blocks)",
                algebra.block_count()
            )));
        }
        Ok(BlockIdeal {
            algebra: algebra.clone(),
            members,
        })
    }

    /// The zero ideal {0}.
    pub fn empty(algebra: &FdAlgebra) -> Self {
        BlockIdeal {
            algebra: algebra.clone(),
            members: BTreeSet::new(),
        }
    }

    /// The improper ideal = the whole algebra.
    pub fn full(algebra: &FdAlgebra) -> Self {
        BlockIdeal {
            algebra: algebra.clone(),
            members: (0..algebra.block_count()).collect(),
        }
    }

    /// The ambient algebra.
    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    /// Member block indices.
    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    /// Whether block `b` belongs to the ideal.
    pub fn contains_block(&self, b: usize) -> bool {
        self.members.contains(&b)
    }

    /// Set-theoretic membership of an element, up to `tol`: all blocks
    /// outside the member set vanish.
    pub fn contains_element(&self, a: &AlgElement, tol: f64) -> bool {
        (0..self.algebra.block_count())
            .filter(|b| !self.members.contains(b))
            .all(|b| spectral_norm(a.block(b)) <= tol)
    }

    /// Ideal intersection = member-set intersection.
    pub fn intersect(&self, other: &BlockIdeal) -> BlockIdeal {
        BlockIdeal {
            algebra: self.algebra.clone(),
            members: self.members.intersection(&other.members).copied().collect(),
        }
    }

    /// Ideal sum = member-set union.
    pub fn sum(&self, other: &BlockIdeal) -> BlockIdeal {
        BlockIdeal {
            algebra: self.algebra.clone(),
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    /// The annihilator S^⊥ = {a : a·S = 0}: the complementary member set,
    /// i.e. the largest ideal orthogonal to S.
    pub fn annihilator(&self) -> BlockIdeal {
        BlockIdeal {
            algebra: self.algebra.clone(),
            members: (0..self.algebra.block_count())
                .filter(|b| !self.members.contains(b))
                .collect(),
        }
    }

    /// Orthogonality (zero intersection) test.
    pub fn is_orthogonal_to(&self, other: &BlockIdeal) -> bool {
        self.members.is_disjoint(&other.members)
    }

    /// Subset test as ideals.
    pub fn is_subset_of(&self, other: &BlockIdeal) -> bool {
        self.members.is_subset(&other.members)
    }

    /// Whether the ideal is the whole algebra.
    pub fn is_full(&self) -> bool {
        self.members.len() == self.algebra.block_count()
    }

    /// The unit of the ideal (identity on members, zero elsewhere).
    pub fn unit(&self) -> AlgElement {
        self.algebra.partial_unit(&self.members)
    }
}

/// Distance from `a` to the ideal `S`: the max spectral norm of the blocks
/// of `a` outside the member set. Equals the quotient norm ‖q_S(a)‖ — the
/// closest ideal element matches `a` exactly on member blocks and the rest
/// cannot be improved.
pub fn distance_to_ideal(a: &AlgElement, s: &BlockIdeal) -> Result<f64> {
    if a.algebra() != s.algebra() {
        return Err(Error::usage(
            "element and ideal live in different algebras".to_string(),
        ));
    }
    Ok((0..a.algebra().block_count())
        .filter(|b| !s.contains_block(*b))
        .map(|b| spectral_norm(a.block(b)))
        .fold(0.0, f64::max))
}

/// The quotient map A → A/S induced by dropping the member blocks of S.
///
/// Keeps non-member blocks in their original order; `apply` is then a
/// surjective *-homomorphism with kernel exactly S and
/// ‖apply(a)‖ = distance_to_ideal(a, S).
#[derive(Debug, Clone)]
pub struct QuotientMap {
    source: FdAlgebra,
    target: FdAlgebra,
    /// Source indices of the kept blocks, in order.
    keep: Vec<usize>,
}

impl QuotientMap {
    /// The quotient algebra.
    pub fn target(&self) -> &FdAlgebra {
        &self.target
    }

    /// The source algebra.
    pub fn source(&self) -> &FdAlgebra {
        &self.source
    }

    /// Source indices of kept blocks, in target order.
    pub fn kept_blocks(&self) -> &[usize] {
        &self.keep
    }

    /// Apply the quotient map to an element.
    pub fn apply(&self, a: &AlgElement) -> AlgElement {
        assert_eq!(a.algebra(), &self.source, "quotient map applied to a foreign element");
        AlgElement {
            algebra: self.target.clone(),
            blocks: self.keep.iter().map(|&b| a.block(b).clone()).collect(),
        }
    }

    /// Push an ideal forward: q(S') = {kept members of S'}, renumbered.
    pub fn apply_ideal(&self, s: &BlockIdeal) -> BlockIdeal {
        let members: BTreeSet<usize> = self
            .keep
            .iter()
            .enumerate()
            .filter(|(_, src)| s.contains_block(**src))
            .map(|(t, _)| t)
            .collect();
        BlockIdeal {
            algebra: self.target.clone(),
            members,
        }
    }

    /// The zero-filled section A/S → A (right inverse of `apply`).
    pub fn lift(&self, a: &AlgElement) -> AlgElement {
        assert_eq!(a.algebra(), &self.target, "lift applied to a foreign element");
        let mut out = self.source.zero();
        for (t, &src) in self.keep.iter().enumerate() {
            *out.block_mut(src) = a.block(t).clone();
        }
        out
    }
}

/// Quotient of the algebra by a block ideal. Quotienting by everything
/// yields the zero algebra (flagged by [`FdAlgebra::is_zero_algebra`]).
pub fn quotient(s: &BlockIdeal) -> QuotientMap {
    let keep: Vec<usize> = (0..s.algebra().block_count())
        .filter(|b| !s.contains_block(*b))
        .collect();
    let target = if keep.is_empty() {
        FdAlgebra::zero_algebra()
    } else {
        FdAlgebra::new(keep.iter().map(|&b| s.algebra().block_dim(b)).collect())
            .expect("kept dims are positive")
    };
    QuotientMap {
        source: s.algebra().clone(),
        target,
        keep,
    }
}
