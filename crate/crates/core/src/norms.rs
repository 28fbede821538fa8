//! Exact norms of shift-diagonal elements and the summable seminorm.
//!
//! For an element supported on a single diagonal the operator norm in the
//! universal J-covariant representation has a closed form: with rows
//! a₀, …, a_N and partial sums pᵢ = Σ_{j≤i} α^{i−j}(a_j), it is
//!
//! ```text
//! max( max_{0≤i≤N} d(pᵢ, J),  d(p_N, ker α) )
//! ```
//!
//! where d(·, S) is the distance to the ideal S. The tail term accounts for
//! all partial sums beyond the support: for i ≥ N the sums are α-iterates
//! of p_N and their distances to J eventually freeze at d(p_N, ker α).
//! The formula needs J to meet ker α trivially, which [`NormContext`]
//! enforces at construction; a general ideal is handled by first dividing
//! out its null chain ([`seminorm_general`]).
//!
//! Summing the diagonal norms gives a *-invariant, submultiplicative upper
//! bound for the norm of a general element; even powers of a★a* squeeze
//! the true norm from below ([`NormContext::norm_estimate`]).

use num_complex::Complex64;

use crate::algebra::{distance_to_ideal, BlockIdeal};
use crate::endo::DynamicalSystem;
use crate::error::{Error, Result};
use crate::matcalc::{DiagonalPart, MatElement};
use crate::par;
use crate::reduction::reduce;
use crate::reps::Representation;

/// A system together with a covariance ideal orthogonal to ker α — the
/// standing hypothesis of the diagonal norm formula.
#[derive(Debug, Clone)]
pub struct NormContext {
    system: DynamicalSystem,
    j: BlockIdeal,
    i: BlockIdeal,
}

/// The squeeze produced by [`NormContext::norm_estimate`].
#[derive(Debug, Clone)]
pub struct NormEstimate {
    /// r_k = (diagonal norm of the main diagonal of (x★x*)^{2k})^{1/4k}.
    pub r: Vec<f64>,
    /// Largest single-diagonal norm of x — never above the true norm.
    pub lower: f64,
    /// The summed seminorm of x — never below the true norm.
    pub upper: f64,
}

impl NormContext {
    /// Pair a system with a covariance ideal. Fails when the ideal meets
    /// the kernel of the map: such ideals force blocks to vanish and must
    /// be reduced away first (see [`seminorm_general`]).
    pub fn new(system: &DynamicalSystem, j: &BlockIdeal) -> Result<Self> {
        if j.algebra() != system.algebra() {
            return Err(Error::usage("ideal and system belong to different algebras"));
        }
        let i = system.endo().kernel_ideal();
        if !j.is_orthogonal_to(&i) {
            return Err(Error::domain(
                "covariance ideal meets ker α; divide out its null chain first",
            ));
        }
        Ok(NormContext {
            system: system.clone(),
            j: j.clone(),
            i,
        })
    }

    /// The ambient system.
    pub fn system(&self) -> &DynamicalSystem {
        &self.system
    }

    /// The covariance ideal J.
    pub fn covariance_ideal(&self) -> &BlockIdeal {
        &self.j
    }

    /// The exact norm of a single-diagonal element in the universal
    /// J-covariant representation.
    pub fn diagonal_norm(&self, d: &DiagonalPart) -> f64 {
        assert!(
            d.system() == &self.system,
            "diagonal belongs to a different system"
        );
        // Negative degrees go through the adjoint; the partial sums then
        // conjugate entrywise and every distance is adjoint-invariant, so
        // this is a definition, not a different computation.
        let d = if d.degree() < 0 { d.adjoint() } else { d.clone() };
        let Some(n_max) = d.max_row() else {
            return 0.0;
        };
        let endo = self.system.endo();
        let mut p = self.system.algebra().zero();
        let mut best = 0.0f64;
        for i in 0..=n_max {
            p = endo.apply(&p).add(&d.row(i));
            best = best.max(distance_to_ideal(&p, &self.j).expect("same algebra"));
        }
        best.max(distance_to_ideal(&p, &self.i).expect("same algebra"))
    }

    /// The summable seminorm: the sum of the diagonal norms. An upper
    /// bound for the norm of x in every J-covariant representation,
    /// *-invariant and submultiplicative.
    pub fn seminorm(&self, x: &MatElement) -> f64 {
        assert!(
            x.system() == &self.system,
            "element belongs to a different system"
        );
        // The diagonals are independent work items; the sum is taken in
        // degree order afterwards so the result does not depend on the
        // parallel schedule.
        let values = par::map_collect(x.diagonals(), |d| self.diagonal_norm(&d));
        values.iter().sum()
    }

    /// Squeeze the norm of x between `lower` and `upper` while the
    /// sequence r_k = dn(main diagonal of (x★x*)^{2k})^{1/4k} climbs
    /// towards it. Every r_k lies in the sandwich; for an element
    /// supported on one diagonal each r_k equals the diagonal norm
    /// exactly.
    ///
    /// r_k is positively homogeneous, so the powers are taken on x scaled
    /// to unit largest-diagonal size and the roots are scaled back. This
    /// keeps the main diagonal of every power at norm ≥ 1, clear of the
    /// sparse pruning threshold that deep powers of a small element would
    /// otherwise sink below.
    ///
    /// The intermediate powers grow; when an intermediate element exceeds
    /// `entry_budget` stored entries the computation stops with a
    /// resource error carrying the r-values obtained so far.
    pub fn norm_estimate(
        &self,
        x: &MatElement,
        k_max: usize,
        entry_budget: usize,
    ) -> Result<NormEstimate> {
        if k_max == 0 {
            return Err(Error::usage("norm estimate needs at least one power"));
        }
        let lower = par::max_f64(x.diagonals(), |d| self.diagonal_norm(&d));
        let upper = self.seminorm(x);
        if upper <= crate::PRUNE_TOL {
            return Ok(NormEstimate {
                r: vec![0.0; k_max],
                lower,
                upper,
            });
        }
        let scale = if lower > 0.0 { lower } else { upper };
        let y = x.scale(Complex64::new(1.0 / scale, 0.0));
        let c = y.star(&y.adjoint());
        let c2 = c.star(&c);
        let mut cur = c2.clone();
        let mut r = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let dn = self.diagonal_norm(&cur.diagonal(0));
            r.push(scale * dn.powf(1.0 / (4.0 * k as f64)));
            if k < k_max {
                let count = cur.entries().count();
                if count > entry_budget {
                    return Err(Error::Resource {
                        message: format!(
                            "norm estimate stopped after r_{k}: {count} stored entries exceed \
                             the budget of {entry_budget}"
                        ),
                        partial: r,
                    });
                }
                cur = cur.star(&c2);
            }
        }
        Ok(NormEstimate { r, lower, upper })
    }

    /// The main-diagonal contraction gap ‖Ψ(diag₀ x)‖ − ‖Ψ(x)‖, both
    /// computed through the representation's window. A representation has
    /// the averaging property exactly when this is ≤ 0 for every element;
    /// adequately sized amplifications have it by the copy-gauge argument.
    pub fn property_star_gap(&self, x: &MatElement, rep: &Representation) -> Result<f64> {
        if rep.system() != &self.system {
            return Err(Error::usage(
                "representation belongs to a different system",
            ));
        }
        let diag = x.diagonal(0).to_element();
        Ok(rep.windowed_norm(&diag)? - rep.windowed_norm(x)?)
    }
}

/// The seminorm for an arbitrary ideal: divide out the null chain of J,
/// push the element forward, and sum the diagonal norms there. When J
/// already misses ker α this is the plain seminorm; when the reduction
/// collapses everything the value is 0.
pub fn seminorm_general(
    system: &DynamicalSystem,
    j: &BlockIdeal,
    x: &MatElement,
) -> Result<f64> {
    if x.system() != system {
        return Err(Error::usage("element belongs to a different system"));
    }
    if j.is_orthogonal_to(&system.endo().kernel_ideal()) {
        return Ok(NormContext::new(system, j)?.seminorm(x));
    }
    let red = reduce(system, j)?;
    if red.degenerate {
        return Ok(0.0);
    }
    let y = x.pushforward(&red.reduced_system, &red.quotient)?;
    Ok(NormContext::new(&red.reduced_system, &red.reduced_ideal)?.seminorm(&y))
}
