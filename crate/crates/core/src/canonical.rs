//! The canonical injective system attached to a covariance ideal, and the
//! pullback picture identifying it.
//!
//! After dividing out the null chain of J the data (A, α, J) satisfies
//! J ∩ ker α = 0, and the crossed product is untouched by passing to the
//! *canonical system*
//!
//! ```text
//! A_J = A/ker α ⊕ A/J,      α_J(x ⊕ y) = embed(α(lift x)),
//! ```
//!
//! where embed(a) = (q_I(a), q_J(a)) and lift picks any preimage of x
//! modulo ker α (the choice cancels). The new map's kernel is exactly the
//! second summand, so its complement is the largest admissible covariance
//! ideal — the canonical system carries its ideal within its own
//! structure, which is what makes U*U visible inside π(A_J) in exact
//! covariant representations ([`unit_recovery`]).
//!
//! [`build_katsura`] assembles the same algebra as a pullback
//!
//! ```text
//! A_ω = { (a, y) ∈ A ⊕ A/J : a ≡ y  mod (ker α)ᵖᵉʳᵖ },
//! ```
//!
//! with its two legs ι₁(a) = (a, q_J(a)) and ι₂(a, y) = (q_I(a), y). The
//! second leg is always an isomorphism onto A_J; the first is one exactly
//! when J is the full complement of the kernel.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{AlgElement, BlockIdeal, FdAlgebra};
use crate::endo::{DynamicalSystem, Endomorphism};
use crate::error::{Error, Result};
use crate::reduction::{reduce, Reduction};
use crate::reps::{frob_inner, gram_push, Representation};

/// The canonical system (A_J, α_J) of a reduced triple, together with the
/// reduction that produced the triple and the block bookkeeping of the two
/// summands.
#[derive(Debug, Clone)]
pub struct Canonical {
    reduction: Reduction,
    system: DynamicalSystem,
    kernel_ideal: BlockIdeal,
    covariance_ideal: BlockIdeal,
    /// Reduced blocks outside ker α, in A_J block order (first summand).
    i_part: Vec<usize>,
    /// Reduced blocks outside J, continuing the A_J block order.
    j_part: Vec<usize>,
}

impl Canonical {
    /// The reduction performed before the construction.
    pub fn reduction(&self) -> &Reduction {
        &self.reduction
    }

    /// The reduced system the construction was applied to.
    pub fn base_system(&self) -> &DynamicalSystem {
        &self.reduction.reduced_system
    }

    /// The canonical system (A_J, α_J).
    pub fn system(&self) -> &DynamicalSystem {
        &self.system
    }

    /// ker α_J — the A/J summand.
    pub fn kernel_ideal(&self) -> &BlockIdeal {
        &self.kernel_ideal
    }

    /// (ker α_J)ᵖᵉʳᵖ — the A/ker α summand, the canonical covariance
    /// ideal of the new system.
    pub fn covariance_ideal(&self) -> &BlockIdeal {
        &self.covariance_ideal
    }

    /// The reduced blocks the first summand (A/ker α) copies, in A_J
    /// block order.
    pub fn first_summand(&self) -> &[usize] {
        &self.i_part
    }

    /// The reduced blocks the second summand (A/J) copies, continuing the
    /// A_J block order.
    pub fn second_summand(&self) -> &[usize] {
        &self.j_part
    }

    /// The split embedding a ↦ (q_I(a), q_J(a)) of the reduced algebra.
    pub fn embed(&self, a: &AlgElement) -> AlgElement {
        assert!(
            a.algebra() == self.base_system().algebra(),
            "element belongs to a different algebra"
        );
        let blocks = self
            .i_part
            .iter()
            .chain(self.j_part.iter())
            .map(|&c| a.block(c).clone())
            .collect();
        AlgElement::from_blocks(self.system.algebra(), blocks).expect("dimensions match by construction")
    }

    /// The left inverse of [`Canonical::embed`]: reassemble a reduced
    /// element, reading blocks outside ker α from the first summand and
    /// the rest from the second.
    pub fn lift(&self, x: &AlgElement) -> AlgElement {
        assert!(
            x.algebra() == self.system.algebra(),
            "element belongs to a different algebra"
        );
        let base = self.base_system().algebra();
        let mut blocks: Vec<DMatrix<Complex64>> = base
            .block_dims()
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect();
        for (r, &c) in self.i_part.iter().enumerate() {
            blocks[c] = x.block(r).clone();
        }
        for (r, &c) in self.j_part.iter().enumerate() {
            if !self.i_part.contains(&c) {
                blocks[c] = x.block(self.i_part.len() + r).clone();
            }
        }
        AlgElement::from_blocks(base, blocks).expect("dimensions match by construction")
    }
}

/// Build the canonical system of (A, α, J). The null chain of J is divided
/// out first; a degenerate reduction passes the zero system through.
pub fn build_canonical(system: &DynamicalSystem, j: &BlockIdeal) -> Result<Canonical> {
    let reduction = reduce(system, j)?;
    if reduction.degenerate {
        let zero = reduction.reduced_system.clone();
        let kernel_ideal = BlockIdeal::empty(zero.algebra());
        let covariance_ideal = BlockIdeal::empty(zero.algebra());
        return Ok(Canonical {
            reduction,
            system: zero,
            kernel_ideal,
            covariance_ideal,
            i_part: Vec::new(),
            j_part: Vec::new(),
        });
    }
    let base = &reduction.reduced_system;
    let algebra = base.algebra();
    let i = base.endo().kernel_ideal();
    let jr = &reduction.reduced_ideal;
    debug_assert!(jr.is_orthogonal_to(&i));
    let i_part: Vec<usize> = (0..algebra.block_count())
        .filter(|&b| !i.contains_block(b))
        .collect();
    let j_part: Vec<usize> = (0..algebra.block_count())
        .filter(|&b| !jr.contains_block(b))
        .collect();
    let dims: Vec<usize> = i_part
        .iter()
        .chain(j_part.iter())
        .map(|&b| algebra.block_dim(b))
        .collect();
    let a_j = FdAlgebra::new(dims)?;

    // α_J acts in every new block r by the original action in the block r
    // is tagged with; sources are drawn from the first summand only (the
    // second is discarded, which is what creates the kernel).
    let tags: Vec<usize> = i_part.iter().chain(j_part.iter()).copied().collect();
    let mut col_sources: Vec<Option<usize>> = vec![None; tags.len()];
    for (col, &b) in i_part.iter().enumerate() {
        col_sources[col] = Some(b);
    }
    let endo_j = routed_endomorphism(&a_j, base.endo(), &tags, &col_sources)?;

    let kernel_ideal = BlockIdeal::new(&a_j, i_part.len()..tags.len())?;
    let covariance_ideal = kernel_ideal.annihilator();
    debug_assert_eq!(endo_j.kernel_ideal(), kernel_ideal);
    let canonical = Canonical {
        reduction,
        system: DynamicalSystem::new(endo_j),
        kernel_ideal,
        covariance_ideal,
        i_part,
        j_part,
    };
    // The defining square commutes on the nose: α_J ∘ embed = embed ∘ α.
    debug_assert!({
        let base = canonical.base_system();
        (0..base.algebra().block_count()).all(|b| {
            let e = base.algebra().matrix_unit(b, 0, 0);
            canonical
                .system
                .endo()
                .apply(&canonical.embed(&e))
                .dist(&canonical.embed(&base.endo().apply(&e)))
                <= 1e-12
        })
    });
    Ok(canonical)
}

/// The pullback presentation A_ω of the canonical algebra, with its legs.
#[derive(Debug, Clone)]
pub struct KatsuraPullback {
    canonical: Canonical,
    system: DynamicalSystem,
    j_x: BlockIdeal,
    /// Reduced blocks outside ker α: the free first coordinate.
    a_only: Vec<usize>,
    /// Reduced blocks outside ker α and J: the free second coordinate.
    b_only: Vec<usize>,
    /// Reduced blocks inside ker α: the tied coordinate shared by both.
    shared: Vec<usize>,
}

impl KatsuraPullback {
    /// The canonical system the pullback is isomorphic to.
    pub fn canonical(&self) -> &Canonical {
        &self.canonical
    }

    /// The pullback system (A_ω, α_ω).
    pub fn system(&self) -> &DynamicalSystem {
        &self.system
    }

    /// (ker α)ᵖᵉʳᵖ in the reduced algebra — the ideal the pullback is
    /// taken over.
    pub fn j_x(&self) -> &BlockIdeal {
        &self.j_x
    }

    /// The first leg a ↦ (a, q_J(a)).
    pub fn iota1(&self, a: &AlgElement) -> AlgElement {
        assert!(
            a.algebra() == self.canonical.base_system().algebra(),
            "element belongs to a different algebra"
        );
        let blocks = self
            .a_only
            .iter()
            .chain(self.b_only.iter())
            .chain(self.shared.iter())
            .map(|&c| a.block(c).clone())
            .collect();
        AlgElement::from_blocks(self.system.algebra(), blocks).expect("dimensions match by construction")
    }

    /// The second leg (a, y) ↦ (q_I(a), y), always an isomorphism onto
    /// the canonical algebra.
    pub fn iota2(&self, x: &AlgElement) -> AlgElement {
        assert!(
            x.algebra() == self.system.algebra(),
            "element belongs to a different algebra"
        );
        let can = &self.canonical;
        let mut blocks: Vec<DMatrix<Complex64>> = Vec::new();
        // First summand of A_J: q_I(a) — read off the free a-blocks.
        for r in 0..can.i_part.len() {
            blocks.push(x.block(r).clone());
        }
        // Second summand: y — shared blocks where tied, free b-blocks else.
        for &c in &can.j_part {
            let r = if let Some(pos) = self.shared.iter().position(|&s| s == c) {
                self.a_only.len() + self.b_only.len() + pos
            } else {
                let pos = self
                    .b_only
                    .iter()
                    .position(|&s| s == c)
                    .expect("blocks outside J split into shared and free");
                self.a_only.len() + pos
            };
            blocks.push(x.block(r).clone());
        }
        AlgElement::from_blocks(can.system().algebra(), blocks).expect("dimensions match by construction")
    }

    /// Whether the first leg is an isomorphism — exactly when J is the
    /// full complement of ker α.
    pub fn iota1_is_iso(&self) -> bool {
        self.b_only.is_empty()
    }

    /// Reduced blocks reachable only through the first coordinate, in
    /// pullback block order.
    pub fn first_only(&self) -> &[usize] {
        &self.a_only
    }

    /// Reduced blocks reachable only through the second coordinate
    /// (empty exactly when ι₁ is an isomorphism).
    pub fn second_only(&self) -> &[usize] {
        &self.b_only
    }

    /// Reduced blocks the fibre condition ties together, closing the
    /// pullback block order.
    pub fn tied(&self) -> &[usize] {
        &self.shared
    }
}

/// Build the pullback presentation of the canonical algebra of (A, α, J).
pub fn build_katsura(system: &DynamicalSystem, j: &BlockIdeal) -> Result<KatsuraPullback> {
    let canonical = build_canonical(system, j)?;
    if canonical.reduction.degenerate {
        let zero = canonical.system.clone();
        let j_x = BlockIdeal::empty(zero.algebra());
        return Ok(KatsuraPullback {
            canonical,
            system: zero,
            j_x,
            a_only: Vec::new(),
            b_only: Vec::new(),
            shared: Vec::new(),
        });
    }
    let base = canonical.base_system().clone();
    let algebra = base.algebra();
    let i = base.endo().kernel_ideal();
    let jr = &canonical.reduction.reduced_ideal;
    let j_x = i.annihilator();
    let a_only: Vec<usize> = (0..algebra.block_count())
        .filter(|&b| !i.contains_block(b))
        .collect();
    let b_only: Vec<usize> = (0..algebra.block_count())
        .filter(|&b| !i.contains_block(b) && !jr.contains_block(b))
        .collect();
    let shared: Vec<usize> = i.members().iter().copied().collect();
    let dims: Vec<usize> = a_only
        .iter()
        .chain(b_only.iter())
        .chain(shared.iter())
        .map(|&b| algebra.block_dim(b))
        .collect();
    let a_omega = FdAlgebra::new(dims)?;

    // α_ω(a, y) = ι₁(α(a)): every row acts by the original action in its
    // tag; the first coordinate is assembled from the free a-blocks and
    // the tied blocks, and the free y-blocks are discarded.
    let tags: Vec<usize> = a_only
        .iter()
        .chain(b_only.iter())
        .chain(shared.iter())
        .copied()
        .collect();
    let mut col_sources: Vec<Option<usize>> = vec![None; tags.len()];
    for (col, &b) in a_only.iter().enumerate() {
        col_sources[col] = Some(b);
    }
    for (pos, &b) in shared.iter().enumerate() {
        col_sources[a_only.len() + b_only.len() + pos] = Some(b);
    }
    let endo_omega = routed_endomorphism(&a_omega, base.endo(), &tags, &col_sources)?;
    Ok(KatsuraPullback {
        canonical,
        system: DynamicalSystem::new(endo_omega),
        j_x,
        a_only,
        b_only,
        shared,
    })
}

/// Extend a covariant representation of the reduced base system to one of
/// the canonical system on the same space, with the same partial isometry
/// and window:
///
/// ```text
/// π̃(x ⊕ y) = U*U·π(lift x) + (1 − U*U)·π(lift y).
/// ```
///
/// U*U·π(k) = 0 for k ∈ ker α and (1 − U*U)·π(j) = 0 for j ∈ J make the
/// two lifts immaterial, and the defining identities of a covariant
/// representation are verified on the result. This is the structural
/// reason A_J is the right enlargement: every covariant picture of the
/// original data already contains one of the canonical data.
pub fn extend_to_canonical(rep: &Representation, can: &Canonical) -> Result<Representation> {
    if rep.system() != can.base_system() {
        return Err(Error::usage(
            "representation must realize the reduced base system of the canonical construction",
        ));
    }
    let base = can.base_system().algebra();
    let u = rep.u().clone();
    let uu = u.adjoint() * &u;
    let h = rep.h_dim();
    let one = DMatrix::<Complex64>::identity(h, h);
    let complement = &one - &uu;
    let mut pi_units = Vec::new();
    for (r, &c) in can.i_part.iter().chain(can.j_part.iter()).enumerate() {
        let n_c = base.block_dim(c);
        let factor = if r < can.i_part.len() { &uu } else { &complement };
        let mut grid = Vec::with_capacity(n_c);
        for p in 0..n_c {
            let mut row = Vec::with_capacity(n_c);
            for q in 0..n_c {
                row.push(factor * rep.pi(&base.matrix_unit(c, p, q)));
            }
            grid.push(row);
        }
        pi_units.push(grid);
    }
    Representation::from_parts(can.system(), pi_units, u, rep.window().clone())
}

/// How the range projection U*U sits relative to the represented algebra,
/// measured through the representation's window.
#[derive(Debug, Clone)]
pub struct UnitRecovery {
    /// U*U lies in the span of π(A).
    pub in_image: bool,
    /// U*U lies in the span of the represented block units — the center.
    pub in_center: bool,
    /// U*U equals π(unit of (ker α)ᵖᵉʳᵖ).
    pub is_complement_unit: bool,
    pub image_residual: f64,
    pub center_residual: f64,
    pub complement_residual: f64,
}

/// Locate U*U relative to π(A). For an exact covariant representation of
/// a canonical system the three memberships coincide and all hold: the
/// range projection is recovered inside the algebra as the unit of the
/// complement of the kernel.
pub fn unit_recovery(rep: &Representation, tol: f64) -> UnitRecovery {
    let algebra = rep.system().algebra();
    let w = rep.window();
    let uu = rep.u().adjoint() * rep.u();
    let wuu = w * &uu * w;

    let mut image_basis: Vec<DMatrix<Complex64>> = Vec::new();
    let mut center_basis: Vec<DMatrix<Complex64>> = Vec::new();
    for b in 0..algebra.block_count() {
        let n_b = algebra.block_dim(b);
        for p in 0..n_b {
            for q in 0..n_b {
                gram_push(
                    &mut image_basis,
                    w * rep.pi(&algebra.matrix_unit(b, p, q)) * w,
                );
            }
        }
        let members: std::collections::BTreeSet<usize> = std::iter::once(b).collect();
        gram_push(
            &mut center_basis,
            w * rep.pi(&algebra.partial_unit(&members)) * w,
        );
    }
    let residual = |basis: &[DMatrix<Complex64>]| -> f64 {
        let mut r = wuu.clone();
        for v in basis {
            let c = frob_inner(v, &r);
            r -= v * c;
        }
        r.norm()
    };
    let image_residual = residual(&image_basis);
    let center_residual = residual(&center_basis);
    let complement = rep
        .system()
        .endo()
        .kernel_ideal()
        .annihilator()
        .unit();
    let complement_residual = (w * (&uu - rep.pi(&complement)) * w).norm();
    UnitRecovery {
        in_image: image_residual <= tol,
        in_center: center_residual <= tol,
        is_complement_unit: complement_residual <= tol,
        image_residual,
        center_residual,
        complement_residual,
    }
}

/// Assemble an endomorphism of `target` whose action in block r is the
/// canonical-form action of `base` in the original block `tags[r]`, with
/// the copies of original source block b filled from the target block
/// named by `col_sources` (unnamed sources are zeroed out into padding).
fn routed_endomorphism(
    target: &FdAlgebra,
    base: &Endomorphism,
    tags: &[usize],
    col_sources: &[Option<usize>],
) -> Result<Endomorphism> {
    let bc = target.block_count();
    let base_alg = base.algebra();
    debug_assert_eq!(tags.len(), bc);
    debug_assert_eq!(col_sources.len(), bc);
    debug_assert!({
        let named: Vec<usize> = col_sources.iter().flatten().copied().collect();
        let mut sorted = named.clone();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.len() == named.len()
    });
    let mut mult = vec![vec![0usize; bc]; bc];
    let mut unitaries = Vec::with_capacity(bc);
    for (r, &c) in tags.iter().enumerate() {
        let row = &base.multiplicity()[c];
        let n_c = base_alg.block_dim(c);
        debug_assert_eq!(target.block_dim(r), n_c);
        for (col, src) in col_sources.iter().enumerate() {
            if let Some(b) = src {
                mult[r][col] = row[*b];
            }
        }
        // Slot permutation: the canonical layout of the new row lists the
        // surviving copies in target block order, then pads; the original
        // unitary expects them interleaved in original block order.
        let mut orig_start = vec![0usize; base_alg.block_count()];
        let mut acc = 0usize;
        for b in 0..base_alg.block_count() {
            orig_start[b] = acc;
            acc += row[b] * base_alg.block_dim(b);
        }
        let mut taken = vec![false; n_c];
        let mut perm = DMatrix::<Complex64>::zeros(n_c, n_c);
        let mut canon = 0usize;
        for src in col_sources.iter() {
            if let Some(b) = src {
                let n_b = base_alg.block_dim(*b);
                for k in 0..row[*b] {
                    let o = orig_start[*b] + k * n_b;
                    for q in 0..n_b {
                        perm[(o + q, canon + q)] = Complex64::new(1.0, 0.0);
                        taken[o + q] = true;
                    }
                    canon += n_b;
                }
            }
        }
        for (o, &t) in taken.iter().enumerate() {
            if !t {
                perm[(o, canon)] = Complex64::new(1.0, 0.0);
                canon += 1;
            }
        }
        debug_assert_eq!(canon, n_c);
        unitaries.push(&base.unitaries()[c] * perm);
    }
    Endomorphism::new(target, mult, Some(unitaries), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reps::{automorphism_rep, toeplitz_truncation};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sys1() -> DynamicalSystem {
        let a = FdAlgebra::new(vec![1, 1, 1]).unwrap();
        DynamicalSystem::new(
            Endomorphism::new(
                &a,
                vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 1]],
                None,
                None,
            )
            .unwrap(),
        )
    }

    fn sys2() -> DynamicalSystem {
        let a = FdAlgebra::new(vec![1, 1]).unwrap();
        DynamicalSystem::new(
            Endomorphism::new(&a, vec![vec![1, 0], vec![1, 0]], None, None).unwrap(),
        )
    }

    /// ℂ² with α(x, y) = (x, 0): non-unital range, kernel {1}, and the
    /// covariance ideal {0} is already the full kernel complement.
    fn corner_system() -> DynamicalSystem {
        let a = FdAlgebra::new(vec![1, 1]).unwrap();
        DynamicalSystem::new(
            Endomorphism::new(&a, vec![vec![1, 0], vec![0, 0]], None, None).unwrap(),
        )
    }

    #[test]
    fn the_three_coordinate_example() {
        // α(x, y, z) = (y, z, z) with J = {1, 2}: ker α = {0} is already
        // orthogonal, A_J = (blocks 1, 2 | block 0) ≅ ℂ³, and the new map
        // sends (y, z | x) to (z, z | y).
        let sys = sys1();
        let j = BlockIdeal::new(sys.algebra(), [1, 2]).unwrap();
        let can = build_canonical(&sys, &j).unwrap();
        assert_eq!(can.system().algebra().block_dims(), &[1, 1, 1]);
        assert!(can.kernel_ideal().members().iter().copied().eq([2]));
        assert!(can.covariance_ideal().members().iter().copied().eq([0, 1]));

        let v = can.system().algebra().scalar_element(&[5.0, 7.0, 11.0]);
        let image = can.system().endo().apply(&v);
        assert!(image.dist(&can.system().algebra().scalar_element(&[7.0, 7.0, 5.0])) <= 1e-14);

        let a = sys.algebra().scalar_element(&[11.0, 5.0, 7.0]);
        let embedded = can.embed(&a);
        assert!(embedded.dist(&can.system().algebra().scalar_element(&[5.0, 7.0, 11.0])) <= 1e-14);
        assert!(can.lift(&embedded).dist(&a) <= 1e-14);
    }

    #[test]
    fn automorphisms_with_the_full_ideal_pass_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let algebra = sample::random_algebra(&mut rng, 3, 2);
            let auto = sample::random_automorphism(&mut rng, &algebra);
            let sys = DynamicalSystem::new(auto);
            let can = build_canonical(&sys, &BlockIdeal::full(&algebra)).unwrap();
            assert_eq!(can.system().endo(), sys.endo());
            assert!(can.kernel_ideal().members().is_empty());
            assert!(can.covariance_ideal().is_full());
        }
    }

    #[test]
    fn the_full_ideal_on_the_flow_collapses_to_a_point() {
        let sys = sys1();
        let can = build_canonical(&sys, &BlockIdeal::full(sys.algebra())).unwrap();
        assert_eq!(can.system().algebra().block_dims(), &[1]);
        assert!(can.kernel_ideal().members().is_empty());
        assert_eq!(can.system().endo(), &Endomorphism::identity(can.system().algebra()));
    }

    #[test]
    fn degenerate_reductions_pass_the_zero_system_through() {
        let m2 = FdAlgebra::new(vec![2, 1]).unwrap();
        let nil = Endomorphism::new(&m2, vec![vec![0, 1], vec![0, 0]], None, None).unwrap();
        let sys = DynamicalSystem::new(nil);
        let can = build_canonical(&sys, &BlockIdeal::full(&m2)).unwrap();
        assert!(can.reduction().degenerate);
        assert!(can.system().algebra().is_zero_algebra());
    }

    #[test]
    fn the_embedding_respects_the_operations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let algebra = sample::random_algebra(&mut rng, 3, 2);
            let endo = sample::random_endomorphism(&mut rng, &algebra);
            let sys = DynamicalSystem::new(endo);
            let j = sample::random_ideal(&mut rng, &algebra);
            let can = build_canonical(&sys, &j).unwrap();
            if can.reduction().degenerate {
                continue;
            }
            let base = can.base_system().clone();
            assert_eq!(&can.system().endo().kernel_ideal(), can.kernel_ideal());
            assert_eq!(&can.kernel_ideal().annihilator(), can.covariance_ideal());

            let a = sample::random_element(&mut rng, base.algebra());
            let b = sample::random_element(&mut rng, base.algebra());
            assert!(can.embed(&a.mul(&b)).dist(&can.embed(&a).mul(&can.embed(&b))) <= 1e-12);
            assert!(can.embed(&a.adjoint()).dist(&can.embed(&a).adjoint()) <= 1e-12);
            assert!(can.lift(&can.embed(&a)).dist(&a) <= 1e-12);
            // The defining square commutes.
            assert!(
                can.system()
                    .endo()
                    .apply(&can.embed(&a))
                    .dist(&can.embed(&base.endo().apply(&a)))
                    <= 1e-12
            );
        }
    }

    #[test]
    fn the_construction_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..15 {
            let algebra = sample::random_algebra(&mut rng, 3, 2);
            let endo = sample::random_endomorphism(&mut rng, &algebra);
            let sys = DynamicalSystem::new(endo);
            let j = sample::random_ideal(&mut rng, &algebra);
            let can = build_canonical(&sys, &j).unwrap();
            if can.reduction().degenerate {
                continue;
            }
            let again = build_canonical(can.system(), can.covariance_ideal()).unwrap();
            assert_eq!(
                again.system().algebra().block_dims(),
                can.system().algebra().block_dims()
            );
            // Equal block dimensions make the algebras structurally equal,
            // so the two maps act on the same elements and must agree.
            let x = sample::random_element(&mut rng, can.system().algebra());
            assert!(
                can.system()
                    .endo()
                    .apply(&x)
                    .dist(&again.system().endo().apply(&x))
                    <= 1e-12
            );
        }
    }

    #[test]
    fn the_pullback_of_the_doubling_map_is_three_coordinates() {
        // α(x, y) = (x, x) with J = ∅: ker α = {1}, J_X = {0}, and the
        // pullback has a free a-block, a free y-block, and a tied block.
        let sys = sys2();
        let kat = build_katsura(&sys, &BlockIdeal::empty(sys.algebra())).unwrap();
        assert_eq!(kat.system().algebra().block_dims(), &[1, 1, 1]);
        assert!(kat.j_x().members().iter().copied().eq([0]));
        assert!(!kat.iota1_is_iso());

        // α_ω(u, v, w) = ι₁(α(a)) with a = (u, w): all three blocks
        // receive u.
        let x = kat.system().algebra().scalar_element(&[3.0, 5.0, 7.0]);
        assert!(
            kat.system()
                .endo()
                .apply(&x)
                .dist(&kat.system().algebra().scalar_element(&[3.0, 3.0, 3.0]))
                <= 1e-14
        );
    }

    #[test]
    fn the_two_legs_behave_as_pullback_legs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let algebra = sample::random_algebra(&mut rng, 3, 2);
            let endo = sample::random_endomorphism(&mut rng, &algebra);
            let sys = DynamicalSystem::new(endo);
            let j = sample::random_ideal(&mut rng, &algebra);
            let kat = build_katsura(&sys, &j).unwrap();
            if kat.canonical().reduction().degenerate {
                continue;
            }
            let base = kat.canonical().base_system().clone();
            let jr = kat.canonical().reduction().reduced_ideal.clone();

            // ι₂ is always an isometric isomorphism onto A_J.
            assert_eq!(
                kat.system().algebra().total_dim(),
                kat.canonical().system().algebra().total_dim()
            );
            let x = sample::random_element(&mut rng, kat.system().algebra());
            assert!((kat.iota2(&x).norm() - x.norm()).abs() <= 1e-12);
            let y = sample::random_element(&mut rng, kat.system().algebra());
            assert!(
                kat.iota2(&x.mul(&y)).dist(&kat.iota2(&x).mul(&kat.iota2(&y))) <= 1e-12
            );

            // ι₁ is an injective *-homomorphism, an isomorphism exactly
            // when J fills the kernel complement.
            let a = sample::random_element(&mut rng, base.algebra());
            let b = sample::random_element(&mut rng, base.algebra());
            assert!(kat.iota1(&a.mul(&b)).dist(&kat.iota1(&a).mul(&kat.iota1(&b))) <= 1e-12);
            assert!(kat.iota1(&a).norm() >= a.norm() - 1e-12);
            assert_eq!(kat.iota1_is_iso(), jr == kat.j_x().clone());
            assert_eq!(
                kat.iota1_is_iso(),
                kat.system().algebra().total_dim() == base.algebra().total_dim()
            );

            // The triangle ι₂ ∘ ι₁ = embed commutes, and both squares
            // with the maps do.
            assert!(
                kat.iota2(&kat.iota1(&a))
                    .dist(&kat.canonical().embed(&a))
                    <= 1e-12
            );
            assert!(
                kat.system()
                    .endo()
                    .apply(&kat.iota1(&a))
                    .dist(&kat.iota1(&base.endo().apply(&a)))
                    <= 1e-12
            );
            assert!(
                kat.iota2(&kat.system().endo().apply(&x))
                    .dist(
                        &kat.canonical()
                            .system()
                            .endo()
                            .apply(&kat.iota2(&x))
                    )
                    <= 1e-12
            );
        }
    }

    #[test]
    fn exact_pictures_recover_the_range_projection_inside_the_algebra() {
        // An automorphism with the full ideal: U*U = 1 = π(unit).
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let algebra = sample::random_algebra(&mut rng, 3, 2);
        let auto = sample::random_automorphism(&mut rng, &algebra);
        let sys = DynamicalSystem::new(auto);
        let can = build_canonical(&sys, &BlockIdeal::full(&algebra)).unwrap();
        let rep = automorphism_rep(can.base_system()).unwrap();
        let extended = extend_to_canonical(&rep, &can).unwrap();
        let rec = unit_recovery(&extended, 1e-10);
        assert!(rec.in_image && rec.in_center && rec.is_complement_unit);

        // The corner system has a genuine exact covariant picture with a
        // non-unitary partial isometry, and the recovery still holds.
        let sys = corner_system();
        let can = build_canonical(&sys, &BlockIdeal::new(sys.algebra(), [0]).unwrap()).unwrap();
        let h = 2usize;
        let mut u = DMatrix::<Complex64>::zeros(h, h);
        u[(0, 0)] = Complex64::new(1.0, 0.0);
        let mut e00 = DMatrix::<Complex64>::zeros(h, h);
        e00[(0, 0)] = Complex64::new(1.0, 0.0);
        let mut e11 = DMatrix::<Complex64>::zeros(h, h);
        e11[(1, 1)] = Complex64::new(1.0, 0.0);
        let rep = Representation::from_parts(
            can.base_system(),
            vec![vec![vec![e00]], vec![vec![e11]]],
            u,
            DMatrix::identity(h, h),
        )
        .unwrap();
        let extended = extend_to_canonical(&rep, &can).unwrap();
        let rec = unit_recovery(&extended, 1e-10);
        assert!(rec.in_image && rec.in_center && rec.is_complement_unit);
        assert!(rec.complement_residual <= 1e-14);

        // A truncation is not exact: its range projection sees the level
        // grading, which the represented algebra cannot express.
        let sys = sys2();
        let rep = toeplitz_truncation(&sys, 4);
        let rec = unit_recovery(&rep, 1e-8);
        assert!(!rec.in_image && !rec.in_center && !rec.is_complement_unit);
    }

    #[test]
    fn extensions_of_covariant_pictures_validate() {
        // Toeplitz pictures of the doubling map are J = ∅ covariant, and
        // the extension to the canonical system of J = ∅ still validates.
        let sys = sys2();
        let can = build_canonical(&sys, &BlockIdeal::empty(sys.algebra())).unwrap();
        let rep = toeplitz_truncation(can.base_system(), 4);
        let extended = extend_to_canonical(&rep, &can).unwrap();
        let report = extended.validation_report();
        assert!(report.passed, "extension fails validation: {report:?}");

        // A representation of a different system is refused.
        let other = sys1();
        let bad = toeplitz_truncation(&other, 3);
        match extend_to_canonical(&bad, &can) {
            Err(Error::Usage(_)) => {}
            other => panic!("expected a usage error, got {other:?}"),
        }
    }
}
