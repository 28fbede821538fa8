//! The matrix calculus for crossed-product elements.
//!
//! A formal element is a finitely supported matrix (a_{i,j})_{i,j ≥ 0} with
//! entries compressed to the corners a_{i,j} ∈ αⁱ(1)·A·αʲ(1). The entry at
//! (i, j) stands for u*ⁱ a_{i,j} uʲ, where u is the shift symbol subject to
//!
//! ```text
//!     u·a = α(a)·u        and        u·u* = α(1),
//! ```
//!
//! and nothing is assumed about u*u beyond it being a projection. All sums,
//! products, adjoints and shifts below are exact consequences of those two
//! relations, so the calculus evaluates faithfully in every covariant
//! representation regardless of which covariance ideal it satisfies.
//!
//! The grading by diagonals (k = column − row) is the spectral decomposition
//! for the gauge circle action; norms of single diagonals are computed in
//! [`crate::norms`] from the partial sums of their entries.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::algebra::{AlgElement, FdAlgebra, QuotientMap};
use crate::endo::DynamicalSystem;
use crate::error::{Error, Result};
use crate::PRUNE_TOL;

/// A finitely supported matrix over (A, α) in compressed form.
#[derive(Debug, Clone)]
pub struct MatElement {
    system: DynamicalSystem,
    entries: BTreeMap<(usize, usize), AlgElement>,
}

/// One diagonal of a [`MatElement`]: the part of gauge degree k.
///
/// Rows are indexed by the position n = min(row, col) along the diagonal,
/// so the entry sits at (n, n+k) for k ≥ 0 and at (n+|k|, n) for k < 0.
#[derive(Debug, Clone)]
pub struct DiagonalPart {
    system: DynamicalSystem,
    k: i64,
    rows: BTreeMap<usize, AlgElement>,
}

impl PartialEq for MatElement {
    fn eq(&self, other: &Self) -> bool {
        self.system == other.system && self.entries == other.entries
    }
}

impl MatElement {
    /// The zero element.
    pub fn zero(system: &DynamicalSystem) -> Self {
        MatElement {
            system: system.clone(),
            entries: BTreeMap::new(),
        }
    }

    /// The coefficient embedding: a at position (0, 0).
    pub fn embed(system: &DynamicalSystem, a: &AlgElement) -> Self {
        let mut x = MatElement::zero(system);
        x.insert_compressed(0, 0, a.clone());
        x
    }

    /// The shift symbol u: α(1) at position (0, 1). Its adjoint is u*.
    pub fn shift(system: &DynamicalSystem) -> Self {
        let mut x = MatElement::zero(system);
        x.insert_compressed(0, 1, system.image_unit(1));
        x
    }

    /// The standard position for gauge degree k: a at (0, k) for k ≥ 0
    /// (compressed on the right by α^k(1)), at (|k|, 0) for k < 0.
    pub fn standard_position(system: &DynamicalSystem, k: i64, a: &AlgElement) -> Self {
        let mut x = MatElement::zero(system);
        if k >= 0 {
            x.insert_compressed(0, k as usize, a.clone());
        } else {
            x.insert_compressed((-k) as usize, 0, a.clone());
        }
        x
    }

    /// Build from explicit (row, col, value) triples; values are compressed
    /// on insertion and coinciding positions accumulate.
    pub fn from_entries(
        system: &DynamicalSystem,
        triples: impl IntoIterator<Item = (usize, usize, AlgElement)>,
    ) -> Result<Self> {
        let mut x = MatElement::zero(system);
        for (i, j, v) in triples {
            if v.algebra() != system.algebra() {
                return Err(Error::usage(
                    "entry belongs to a different algebra than the system",
                ));
            }
            let prev = x.entries.remove(&(i, j));
            let compressed = x.compress(i, j, v);
            let total = match prev {
                Some(p) => p.add(&compressed),
                None => compressed,
            };
            x.insert_pruned(i, j, total);
        }
        Ok(x)
    }

    /// The ambient dynamical system.
    pub fn system(&self) -> &DynamicalSystem {
        &self.system
    }

    /// Iterate over the (row, col, value) support.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &AlgElement)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    /// The value at (i, j), if present.
    pub fn entry(&self, i: usize, j: usize) -> Option<&AlgElement> {
        self.entries.get(&(i, j))
    }

    /// Largest occupied row index (None when zero).
    pub fn max_row(&self) -> Option<usize> {
        self.entries.keys().map(|&(i, _)| i).max()
    }

    /// Largest occupied column index (None when zero).
    pub fn max_col(&self) -> Option<usize> {
        self.entries.keys().map(|&(_, j)| j).max()
    }

    /// Whether every entry is below `tol` in norm.
    pub fn is_zero(&self, tol: f64) -> bool {
        self.entries.values().all(|v| v.norm() <= tol)
    }

    /// Largest entry-wise distance to another element over the joint support.
    pub fn dist(&self, other: &MatElement) -> f64 {
        let mut d: f64 = 0.0;
        for (&key, v) in &self.entries {
            match other.entries.get(&key) {
                Some(w) => d = d.max(v.dist(w)),
                None => d = d.max(v.norm()),
            }
        }
        for (key, w) in &other.entries {
            if !self.entries.contains_key(key) {
                d = d.max(w.norm());
            }
        }
        d
    }

    fn compress(&self, i: usize, j: usize, v: AlgElement) -> AlgElement {
        let left = self.system.image_unit(i);
        let right = self.system.image_unit(j);
        left.mul(&v).mul(&right)
    }

    fn insert_pruned(&mut self, i: usize, j: usize, v: AlgElement) {
        if v.norm() > PRUNE_TOL {
            self.entries.insert((i, j), v);
        }
    }

    fn insert_compressed(&mut self, i: usize, j: usize, v: AlgElement) {
        let c = self.compress(i, j, v);
        self.insert_pruned(i, j, c);
    }

    fn accumulate(&mut self, i: usize, j: usize, v: AlgElement) {
        let total = match self.entries.remove(&(i, j)) {
            Some(p) => p.add(&v),
            None => v,
        };
        self.insert_pruned(i, j, total);
    }

    fn check_same_system(&self, other: &MatElement) {
        assert!(
            self.system == other.system,
            "operands live over different dynamical systems"
        );
    }

    /// Entry-wise sum.
    pub fn add(&self, other: &MatElement) -> MatElement {
        self.check_same_system(other);
        let mut out = self.clone();
        for (&(i, j), v) in &other.entries {
            out.accumulate(i, j, v.clone());
        }
        out
    }

    /// Entry-wise difference.
    pub fn sub(&self, other: &MatElement) -> MatElement {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Scalar multiple.
    pub fn scale(&self, z: Complex64) -> MatElement {
        let mut out = MatElement::zero(&self.system);
        for (&(i, j), v) in &self.entries {
            out.insert_pruned(i, j, v.scale(z));
        }
        out
    }

    /// The adjoint: entry (i, j) moves to (j, i) and is conjugated.
    pub fn adjoint(&self) -> MatElement {
        let mut out = MatElement::zero(&self.system);
        for (&(i, j), v) in &self.entries {
            out.insert_pruned(j, i, v.adjoint());
        }
        out
    }

    /// The ★-product. For entries a at (i, l) and b at (p, q):
    ///
    /// * l ≥ p contributes a·α^{l−p}(b) at (i, q + l − p),
    /// * l < p contributes α^{p−l}(a)·b at (i + p − l, q).
    ///
    /// Both branches follow from u·π(x) = π(α(x))·u and u·u* = π(α(1)),
    /// and compressed entries stay compressed, so no recompression is done.
    pub fn star(&self, other: &MatElement) -> MatElement {
        self.check_same_system(other);
        let mut out = MatElement::zero(&self.system);
        for (&(i, l), a) in &self.entries {
            for (&(p, q), b) in &other.entries {
                if l >= p {
                    let m = l - p;
                    let v = a.mul(&self.system.apply_power(m, b));
                    out.accumulate(i, q + m, v);
                } else {
                    let m = p - l;
                    let v = self.system.apply_power(m, a).mul(b);
                    out.accumulate(i + m, q, v);
                }
            }
        }
        out
    }

    /// The shift endomorphism Λ: entry (i, j) moves to (i+1, j+1) and picks
    /// up α. Λ is a ★-endomorphism of the calculus; it evaluates to
    /// x ↦ Σ u*ⁱ (u*u) a_{ij} uʲ, so it is invisible exactly on entries the
    /// covariance ideal controls.
    pub fn lambda_shift(&self) -> MatElement {
        let mut out = MatElement::zero(&self.system);
        for (&(i, j), v) in &self.entries {
            out.insert_pruned(i + 1, j + 1, self.system.endo().apply(v));
        }
        out
    }

    /// The gauge action: entry (i, j) is scaled by e^{iθ(j−i)}.
    pub fn gauge(&self, theta: f64) -> MatElement {
        let mut out = MatElement::zero(&self.system);
        for (&(i, j), v) in &self.entries {
            let phase = Complex64::from_polar(1.0, theta * (j as f64 - i as f64));
            out.insert_pruned(i, j, v.scale(phase));
        }
        out
    }

    /// The diagonal of gauge degree k (k = col − row).
    pub fn diagonal(&self, k: i64) -> DiagonalPart {
        let mut rows = BTreeMap::new();
        for (&(i, j), v) in &self.entries {
            if j as i64 - i as i64 == k {
                rows.insert(i.min(j), v.clone());
            }
        }
        DiagonalPart {
            system: self.system.clone(),
            k,
            rows,
        }
    }

    /// All nonzero diagonals, ordered by degree.
    pub fn diagonals(&self) -> Vec<DiagonalPart> {
        let mut degrees: Vec<i64> = self
            .entries
            .keys()
            .map(|&(i, j)| j as i64 - i as i64)
            .collect();
        degrees.sort_unstable();
        degrees.dedup();
        degrees.into_iter().map(|k| self.diagonal(k)).collect()
    }

    /// Push the element along a quotient of the coefficient algebra to the
    /// quotient system. The quotient map must intertwine the endomorphisms
    /// (checked on block units).
    pub fn pushforward(
        &self,
        target: &DynamicalSystem,
        q: &QuotientMap,
    ) -> Result<MatElement> {
        if q.source() != self.system.algebra() {
            return Err(Error::usage("quotient map does not start at this algebra"));
        }
        if q.target() != target.algebra() {
            return Err(Error::usage("quotient map does not land in the target system"));
        }
        for b in 0..self.system.algebra().block_count() {
            let unit_b = blocks_unit(self.system.algebra(), b);
            let lhs = q.apply(&self.system.endo().apply(&unit_b));
            let rhs = target.endo().apply(&q.apply(&unit_b));
            if lhs.dist(&rhs) > 1e-10 {
                return Err(Error::usage(
                    "quotient map does not intertwine the endomorphisms",
                ));
            }
        }
        let mut out = MatElement::zero(target);
        for (&(i, j), v) in &self.entries {
            out.accumulate(i, j, out.compress(i, j, q.apply(v)));
        }
        Ok(out)
    }
}

fn blocks_unit(algebra: &FdAlgebra, b: usize) -> AlgElement {
    crate::algebra::BlockIdeal::new(algebra, [b])
        .expect("index in range")
        .unit()
}

impl DiagonalPart {
    /// The gauge degree.
    pub fn degree(&self) -> i64 {
        self.k
    }

    /// The ambient system.
    pub fn system(&self) -> &DynamicalSystem {
        &self.system
    }

    /// Entry at along-diagonal position n (zero if absent).
    pub fn row(&self, n: usize) -> AlgElement {
        self.rows
            .get(&n)
            .cloned()
            .unwrap_or_else(|| self.system.algebra().zero())
    }

    /// Largest occupied position (None when zero).
    pub fn max_row(&self) -> Option<usize> {
        self.rows.keys().copied().max()
    }

    /// Occupied positions and entries.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &AlgElement)> {
        self.rows.iter().map(|(&n, v)| (n, v))
    }

    /// Whether the diagonal is empty.
    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    /// The adjoint diagonal: degree −k, same positions, conjugated entries.
    pub fn adjoint(&self) -> DiagonalPart {
        DiagonalPart {
            system: self.system.clone(),
            k: -self.k,
            rows: self
                .rows
                .iter()
                .map(|(&n, v)| (n, v.adjoint()))
                .collect(),
        }
    }

    /// Reassemble a matrix element supported on this diagonal alone.
    pub fn to_element(&self) -> MatElement {
        let mut out = MatElement::zero(&self.system);
        for (&n, v) in &self.rows {
            let (i, j) = if self.k >= 0 {
                (n, n + self.k as usize)
            } else {
                (n + (-self.k) as usize, n)
            };
            out.insert_pruned(i, j, v.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FdAlgebra;
    use crate::endo::Endomorphism;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// SYS2: A = ℂ², α(x, y) = (x, x) — unital.
    fn sys2() -> DynamicalSystem {
        let a = FdAlgebra::new(vec![1, 1]).unwrap();
        DynamicalSystem::new(
            Endomorphism::new(&a, vec![vec![1, 0], vec![1, 0]], None, None).unwrap(),
        )
    }

    /// A padded system on M₂ ⊕ ℂ where α(1) ≠ 1.
    fn padded() -> DynamicalSystem {
        let a = FdAlgebra::new(vec![2, 1]).unwrap();
        DynamicalSystem::new(
            Endomorphism::new(&a, vec![vec![0, 1], vec![0, 0]], None, None).unwrap(),
        )
    }

    fn random_small(rng: &mut ChaCha8Rng, sys: &DynamicalSystem) -> MatElement {
        use rand::Rng;
        let mut triples = Vec::new();
        for _ in 0..rng.gen_range(1..=4) {
            let i = rng.gen_range(0..3);
            let j = rng.gen_range(0..3);
            triples.push((i, j, sample::random_element(rng, sys.algebra())));
        }
        MatElement::from_entries(sys, triples).unwrap()
    }

    #[test]
    fn shift_implements_the_covariance_relation() {
        for sys in [sys2(), padded()] {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let a = sample::random_element(&mut rng, sys.algebra());
            let x = MatElement::embed(&sys, &a);
            let u = MatElement::shift(&sys);

            // u ★ a ★ u* = α(a) at (0, 0).
            let lhs = u.star(&x).star(&u.adjoint());
            let rhs = MatElement::embed(&sys, &sys.endo().apply(&a));
            assert!(lhs.dist(&rhs) < 1e-12);

            // u* ★ a ★ u = α(1)·a·α(1) at (1, 1).
            let lhs2 = u.adjoint().star(&x).star(&u);
            let a1 = sys.image_unit(1);
            let rhs2 = MatElement::from_entries(&sys, [(1, 1, a1.mul(&a).mul(&a1))]).unwrap();
            assert!(lhs2.dist(&rhs2) < 1e-12);

            // u ★ u* = α(1) at (0, 0); u* ★ u = α(1) at (1, 1).
            let uu = u.star(&u.adjoint());
            assert!(uu.dist(&MatElement::embed(&sys, &a1)) < 1e-14);
            let uu2 = u.adjoint().star(&u);
            assert!(uu2.dist(&MatElement::from_entries(&sys, [(1, 1, a1.clone())]).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn embedded_unit_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for sys in [sys2(), padded()] {
            let one = MatElement::embed(&sys, &sys.algebra().unit());
            for _ in 0..10 {
                let x = random_small(&mut rng, &sys);
                // Row 0 in particular, and in fact every compressed entry.
                assert!(one.star(&x).dist(&x) < 1e-13);
                assert!(x.star(&one).dist(&x) < 1e-13);
            }
        }
    }

    #[test]
    fn star_is_associative_and_adjoint_reverses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sys in [sys2(), padded()] {
            for _ in 0..20 {
                let x = random_small(&mut rng, &sys);
                let y = random_small(&mut rng, &sys);
                let z = random_small(&mut rng, &sys);
                let lhs = x.star(&y).star(&z);
                let rhs = x.star(&y.star(&z));
                assert!(lhs.dist(&rhs) < 1e-9, "associativity residual {}", lhs.dist(&rhs));
                assert!(x.star(&y).adjoint().dist(&y.adjoint().star(&x.adjoint())) < 1e-12);
            }
        }
    }

    #[test]
    fn lambda_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for sys in [sys2(), padded()] {
            for _ in 0..10 {
                let x = random_small(&mut rng, &sys);
                let y = random_small(&mut rng, &sys);
                let lhs = x.star(&y).lambda_shift();
                let rhs = x.lambda_shift().star(&y.lambda_shift());
                assert!(lhs.dist(&rhs) < 1e-11);
                // Λ commutes with the adjoint.
                assert!(x.lambda_shift().adjoint().dist(&x.adjoint().lambda_shift()) < 1e-13);
            }
        }
    }

    #[test]
    fn grading_adds_under_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = padded();
        let a = sample::random_element(&mut rng, sys.algebra());
        let b = sample::random_element(&mut rng, sys.algebra());
        let x = MatElement::standard_position(&sys, 2, &a);
        let y = MatElement::standard_position(&sys, -1, &b);
        let p = x.star(&y);
        for d in p.diagonals() {
            assert_eq!(d.degree(), 1);
        }
    }

    #[test]
    fn gauge_is_a_star_automorphism_scaling_diagonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sys = sys2();
        let x = random_small(&mut rng, &sys);
        let y = random_small(&mut rng, &sys);
        let theta = 0.7;
        let lhs = x.star(&y).gauge(theta);
        let rhs = x.gauge(theta).star(&y.gauge(theta));
        assert!(lhs.dist(&rhs) < 1e-12);
        // Degree-k parts pick up the phase e^{ikθ}.
        for d in x.diagonals() {
            let scaled = d
                .to_element()
                .scale(Complex64::from_polar(1.0, theta * d.degree() as f64));
            assert!(x.gauge(theta).diagonal(d.degree()).to_element().dist(&scaled) < 1e-13);
        }
    }

    #[test]
    fn diagonals_reassemble_the_element() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for sys in [sys2(), padded()] {
            let x = random_small(&mut rng, &sys);
            let mut sum = MatElement::zero(&sys);
            for d in x.diagonals() {
                sum = sum.add(&d.to_element());
            }
            assert!(sum.dist(&x) < 1e-15);
            // Adjoint flips the degree and conjugates positions.
            for d in x.diagonals() {
                let via_element = x.adjoint().diagonal(-d.degree());
                assert!(d.adjoint().to_element().dist(&via_element.to_element()) < 1e-15);
            }
        }
    }

    #[test]
    fn entries_are_compressed_on_insertion() {
        let sys = padded();
        // α(1) kills the second block and the padded corner of the first.
        let raw = sys.algebra().unit();
        let x = MatElement::from_entries(&sys, [(1, 1, raw)]).unwrap();
        let expect = sys.image_unit(1);
        assert!(x.entry(1, 1).unwrap().dist(&expect) < 1e-15);
        // A unit placed deep enough to be fully crushed is pruned.
        let y = MatElement::from_entries(
            &sys,
            [(2, 2, sys.algebra().unit())],
        )
        .unwrap();
        assert!(y.is_zero(0.0), "α²(1) = 0 in this system");
    }

    #[test]
    fn pushforward_commutes_with_the_calculus() {
        // SYS1 quotient by the invariant ideal {b1, b2}.
        let a3 = FdAlgebra::new(vec![1, 1, 1]).unwrap();
        let e = Endomorphism::new(
            &a3,
            vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 1]],
            None,
            None,
        )
        .unwrap();
        let s = crate::algebra::BlockIdeal::new(&a3, [0, 1]).unwrap();
        let (eq, q) = e.quotient_system(&s).unwrap();
        let sys = DynamicalSystem::new(e);
        let target = DynamicalSystem::new(eq);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_small(&mut rng, &sys);
        let y = random_small(&mut rng, &sys);
        let push = |m: &MatElement| m.pushforward(&target, &q).unwrap();
        assert!(push(&x.star(&y)).dist(&push(&x).star(&push(&y))) < 1e-11);
        assert!(push(&x.adjoint()).dist(&push(&x).adjoint()) < 1e-13);

        // A non-invariant ideal is rejected up front by the endomorphism.
        let bad = crate::algebra::BlockIdeal::new(&a3, [1]).unwrap();
        assert!(sys.endo().quotient_system(&bad).is_err());
    }
}
