//! Reduction of a system relative to a covariance ideal.
//!
//! Blocks that the covariance ideal J forces to vanish in every J-covariant
//! representation form an increasing chain: J₀ = 0 and
//! J_{n+1} = J ∩ α⁻¹(J_n). The chain stabilizes at J_∞; dividing it out
//! yields an equivalent system whose covariance ideal meets the kernel of
//! the reduced map trivially, which is the standing hypothesis for the
//! diagonal norm formula. The special case J = A recovers the classical
//! reduction to an injective system.

use crate::algebra::{BlockIdeal, QuotientMap};
use crate::endo::DynamicalSystem;
use crate::error::{Error, Result};

/// The outcome of dividing a system by the null chain of an ideal.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// J₀ ⊆ J₁ ⊆ … up to and including the first stable value.
    pub chain: Vec<BlockIdeal>,
    /// The stable value J_∞.
    pub j_infinity: BlockIdeal,
    /// ⋃ₙ ker αⁿ, the eventual kernel of the map itself.
    pub i_infinity: BlockIdeal,
    /// The quotient system on A / J_∞.
    pub reduced_system: DynamicalSystem,
    /// The quotient map A → A / J_∞.
    pub quotient: QuotientMap,
    /// The image of J in the reduced algebra.
    pub reduced_ideal: BlockIdeal,
    /// Whether J_∞ swallowed every block (the reduced algebra is zero).
    pub degenerate: bool,
}

/// Divide out the null chain of `j`.
///
/// The chain is computed twice — by the recursion J_{n+1} = J ∩ α⁻¹(J_n)
/// and by the closed form J_n = ker αⁿ ∩ ⋂_{k<n} α⁻ᵏ(J) — and the two are
/// required to agree step by step. The reduced ideal is always orthogonal
/// to the kernel of the reduced map.
pub fn reduce(system: &DynamicalSystem, j: &BlockIdeal) -> Result<Reduction> {
    let algebra = system.algebra();
    if j.algebra() != algebra {
        return Err(Error::usage("ideal and system belong to different algebras"));
    }
    let endo = system.endo();

    // Recursion from the zero ideal.
    let mut chain = vec![BlockIdeal::empty(algebra)];
    loop {
        let prev = chain.last().expect("chain starts nonempty");
        let next = j.intersect(&endo.preimage_ideal(prev));
        if &next == prev {
            break;
        }
        chain.push(next);
    }

    // Closed form, step by step.
    for (n, link) in chain.iter().enumerate() {
        let mut closed = endo.kernel_ideal_of_power(n);
        for k in 0..n {
            closed = closed.intersect(&system.power(k).preimage_ideal(j));
        }
        assert_eq!(
            &closed, link,
            "null-chain recursion and closed form disagree at step {n}"
        );
    }
    let j_infinity = chain.last().expect("chain nonempty").clone();

    // Eventual kernel, by union until stable and by the closed form.
    let mut i_infinity = endo.kernel_ideal();
    let mut n = 1usize;
    loop {
        let next = i_infinity.sum(&endo.kernel_ideal_of_power(n + 1));
        if next == i_infinity {
            break;
        }
        i_infinity = next;
        n += 1;
    }
    assert_eq!(
        i_infinity,
        endo.kernel_ideal_of_power(algebra.block_count()),
        "kernel union must equal the kernel of the block-count power"
    );

    // The stable value is the eventual kernel cut down by all preimages
    // of J.
    let mut cross = i_infinity.clone();
    for k in 0..=algebra.block_count() {
        cross = cross.intersect(&system.power(k).preimage_ideal(j));
    }
    assert_eq!(
        cross, j_infinity,
        "J_∞ must equal I_∞ ∩ ⋂ₙ α⁻ⁿ(J)"
    );

    let (reduced_endo, quotient) = endo.quotient_system(&j_infinity)?;
    let reduced_ideal = quotient.apply_ideal(j);
    let degenerate = j_infinity.is_full();
    if !degenerate {
        assert!(
            reduced_ideal.is_orthogonal_to(&reduced_endo.kernel_ideal()),
            "reduced ideal must miss the kernel of the reduced map"
        );
    }
    Ok(Reduction {
        chain,
        j_infinity,
        i_infinity,
        reduced_system: DynamicalSystem::new(reduced_endo),
        quotient,
        reduced_ideal,
        degenerate,
    })
}

/// Reduce against the full ideal: the classical passage to an injective
/// system. Here the null chain is the kernel chain itself, so the reduced
/// map is injective.
pub fn stacey_reduce(system: &DynamicalSystem) -> Reduction {
    let full = BlockIdeal::full(system.algebra());
    let red = reduce(system, &full).expect("full ideal always shares the algebra");
    assert_eq!(
        red.j_infinity, red.i_infinity,
        "against the full ideal the null chain must exhaust the eventual kernel"
    );
    if !red.degenerate {
        assert!(
            red.reduced_system.endo().kernel_ideal().members().is_empty(),
            "the reduced map must be injective"
        );
    }
    red
}

/// Replay the null-chain recursion on the correspondence X = α(1)A with
/// honest linear algebra — no ideal bookkeeping — and compare against the
/// closed form at every step.
///
/// Membership x ∈ X·S is decided by computing the residual of x against
/// the blocks outside S, and φ(e_b)X ⊆ X·S by applying the left action to
/// a basis of X. Returns whether every step matched.
pub fn correspondence_cross_check(
    system: &DynamicalSystem,
    j: &BlockIdeal,
    tol: f64,
) -> Result<bool> {
    let algebra = system.algebra();
    if j.algebra() != algebra {
        return Err(Error::usage("ideal and system belong to different algebras"));
    }
    let endo = system.endo();

    // Basis of X = α(1)A: all columns of α(1) paired with matrix-unit
    // columns; the linear checks below only need a spanning set.
    let alpha1 = endo.image_unit(1);
    let mut span: Vec<crate::algebra::AlgElement> = Vec::new();
    for b in 0..algebra.block_count() {
        for q in 0..algebra.block_dim(b) {
            let x = alpha1.mul(&algebra.matrix_unit(b, q, q));
            if x.norm() > tol {
                span.push(x);
            }
        }
    }

    let mut current = BlockIdeal::empty(algebra);
    let expected_chain = reduce(system, j)?.chain;
    let mut step = 0usize;
    for expected in &expected_chain {
        if step > 0 {
            // Recursion step on the correspondence side: b survives when
            // b ∈ J and the left action of e_b pushes the whole of X into
            // X·(previous step).
            let mut members = Vec::new();
            for b in j.members() {
                let alpha_e = endo.apply(&unit_of_block(algebra, *b));
                let inside = span.iter().all(|x| {
                    let moved = alpha_e.mul(x);
                    (0..algebra.block_count())
                        .filter(|c| !current.contains_block(*c))
                        .all(|c| moved.block(c).norm() <= tol)
                });
                if inside {
                    members.push(*b);
                }
            }
            current = BlockIdeal::new(algebra, members).expect("members in range");
        }
        if &current != expected {
            return Ok(false);
        }
        step += 1;
    }
    // One more turn of the recursion must not move past the stable value.
    let last = expected_chain.last().expect("chain nonempty");
    Ok(current == *last)
}

fn unit_of_block(algebra: &crate::algebra::FdAlgebra, b: usize) -> crate::algebra::AlgElement {
    BlockIdeal::new(algebra, [b]).expect("in range").unit()
}
