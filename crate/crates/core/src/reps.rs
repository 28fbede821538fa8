//! Concrete matrix representations of a dynamical system.
//!
//! A covariant representation is a unital *-representation π on a
//! finite-dimensional H together with a partial isometry U satisfying
//! U·π(a)·U* = π(α(a)). The constructions here are truncations of
//! inherently infinite pictures, so every representation carries a window
//! projection W marking the subspace on which the defining identities hold
//! exactly; exact representations use W = 1.
//!
//! Three builders matter:
//! * [`toeplitz_truncation`] — levels 0..M of the shift picture on
//!   ⊕ₙ αⁿ(1)H₀; covariant with trivial covariance ideal; the operator norm
//!   of Ψ stabilizes in M and serves as the J = 0 norm oracle.
//! * [`automorphism_rep`] — for automorphisms, an exact unitary picture on
//!   H₀ with covariance ideal everything; the J = A norm oracle.
//! * [`amplify`] — a window of the two-sided amplification ℓ²(ℤ, H); the
//!   copy-gauge symmetry forces the main-diagonal contraction property on
//!   elements, which is what the property-(*) checks exploit.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{spectral_norm, AlgElement, BlockIdeal};
use crate::endo::DynamicalSystem;
use crate::error::{Error, Result};
use crate::matcalc::MatElement;

/// A windowed covariant representation on a finite-dimensional space.
#[derive(Debug, Clone)]
pub struct Representation {
    system: DynamicalSystem,
    h_dim: usize,
    /// pi_units[b][p][q] = π(e^{(b)}_{p,q}); π extends linearly.
    pi_units: Vec<Vec<Vec<DMatrix<Complex64>>>>,
    u: DMatrix<Complex64>,
    window: DMatrix<Complex64>,
    kind: RepKind,
}

#[derive(Debug, Clone)]
enum RepKind {
    /// Identities hold on all of H.
    Exact,
    /// Levels 0..=m of the shift picture; offsets[n] = first coordinate of
    /// level n, offsets[m+1] = h_dim.
    Toeplitz { m: usize, offsets: Vec<usize> },
    /// Copies lo..=hi of a base representation of dimension copy_dim.
    Amplified,
    /// User-supplied; window given as a leading-coordinate projection.
    Custom,
}

/// Residuals from checking the defining identities of a representation.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Max residual of the matrix-unit relations and adjoints under π.
    pub hom_residual: f64,
    /// ‖π(1) − 1‖.
    pub unital_residual: f64,
    /// Max over generators of ‖W(Uπ(a)U* − π(α(a)))W‖.
    pub covariance_residual: f64,
    /// ‖W(UU*U − U)W‖.
    pub partial_isometry_residual: f64,
    /// ‖W² − W‖ + ‖W* − W‖.
    pub window_residual: f64,
    /// Whether all residuals pass the standard tolerances.
    pub passed: bool,
}

impl Representation {
    /// Build and validate a representation from raw parts (window = given
    /// projection; exact when the window is the identity).
    pub fn from_parts(
        system: &DynamicalSystem,
        pi_units: Vec<Vec<Vec<DMatrix<Complex64>>>>,
        u: DMatrix<Complex64>,
        window: DMatrix<Complex64>,
    ) -> Result<Self> {
        let rep = Self::from_parts_unchecked(system, pi_units, u, window)?;
        let report = rep.validation_report();
        if !report.passed {
            return Err(Error::validation(format!(
                "representation identities fail: hom {:.2e}, unital {:.2e}, covariance {:.2e}, \
                 partial isometry {:.2e}, window {:.2e}",
                report.hom_residual,
                report.unital_residual,
                report.covariance_residual,
                report.partial_isometry_residual,
                report.window_residual,
            )));
        }
        Ok(rep)
    }

    /// Build without running the identity checks (shape checks only).
    /// Used when the caller wants the full [`ValidationReport`] even for a
    /// failing candidate.
    pub fn from_parts_unchecked(
        system: &DynamicalSystem,
        pi_units: Vec<Vec<Vec<DMatrix<Complex64>>>>,
        u: DMatrix<Complex64>,
        window: DMatrix<Complex64>,
    ) -> Result<Self> {
        let algebra = system.algebra();
        if pi_units.len() != algebra.block_count() {
            return Err(Error::validation("one image grid per block expected"));
        }
        let h_dim = u.nrows();
        if u.ncols() != h_dim || window.nrows() != h_dim || window.ncols() != h_dim {
            return Err(Error::validation("U and window must be square of equal size"));
        }
        for (b, grid) in pi_units.iter().enumerate() {
            let n_b = algebra.block_dim(b);
            if grid.len() != n_b || grid.iter().any(|row| row.len() != n_b) {
                return Err(Error::validation(format!(
                    "image grid for block {b} must be {n_b}×{n_b}"
                )));
            }
            for row in grid {
                for m in row {
                    if m.nrows() != h_dim || m.ncols() != h_dim {
                        return Err(Error::validation("π images must be H×H"));
                    }
                }
            }
        }
        let is_exact = (&window - DMatrix::<Complex64>::identity(h_dim, h_dim)).norm() == 0.0;
        Ok(Representation {
            system: system.clone(),
            h_dim,
            pi_units,
            u,
            window,
            kind: if is_exact { RepKind::Exact } else { RepKind::Custom },
        })
    }

    /// The ambient dynamical system.
    pub fn system(&self) -> &DynamicalSystem {
        &self.system
    }

    /// Dimension of the representation space.
    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    /// The partial isometry U.
    pub fn u(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    /// The window projection W.
    pub fn window(&self) -> &DMatrix<Complex64> {
        &self.window
    }

    /// Truncation level for shift-picture representations.
    pub fn toeplitz_level(&self) -> Option<usize> {
        match &self.kind {
            RepKind::Toeplitz { m, .. } => Some(*m),
            _ => None,
        }
    }

    /// Whether the window is the identity.
    pub fn is_exact(&self) -> bool {
        matches!(self.kind, RepKind::Exact)
    }

    /// Evaluate π on an algebra element.
    pub fn pi(&self, a: &AlgElement) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(self.h_dim, self.h_dim);
        for (b, grid) in self.pi_units.iter().enumerate() {
            let blk = a.block(b);
            for (p, row) in grid.iter().enumerate() {
                for (q, unit) in row.iter().enumerate() {
                    let c = blk[(p, q)];
                    if c != Complex64::new(0.0, 0.0) {
                        out += unit * c;
                    }
                }
            }
        }
        out
    }

    fn windowed(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        &self.window * x * &self.window
    }

    /// ‖W x W‖ for an operator on H.
    pub fn windowed_op_norm(&self, x: &DMatrix<Complex64>) -> f64 {
        spectral_norm(&self.windowed(x))
    }

    /// Check all defining identities and report residuals.
    pub fn validation_report(&self) -> ValidationReport {
        let algebra = self.system.algebra();
        let mut hom: f64 = 0.0;
        // Matrix-unit relations, adjoints, and cross-block orthogonality.
        for (b, grid) in self.pi_units.iter().enumerate() {
            let n_b = algebra.block_dim(b);
            for p in 0..n_b {
                for q in 0..n_b {
                    hom = hom.max((grid[p][q].adjoint() - &grid[q][p]).norm());
                    for r in 0..n_b {
                        for s in 0..n_b {
                            let prod = &grid[p][q] * &grid[r][s];
                            let expect = if q == r {
                                grid[p][s].clone()
                            } else {
                                DMatrix::zeros(self.h_dim, self.h_dim)
                            };
                            hom = hom.max((prod - expect).norm());
                        }
                    }
                }
            }
            for (b2, grid2) in self.pi_units.iter().enumerate() {
                if b2 != b {
                    hom = hom.max((&grid[0][0] * &grid2[0][0]).norm());
                }
            }
        }
        let unital = (self.pi(&algebra.unit())
            - DMatrix::<Complex64>::identity(self.h_dim, self.h_dim))
        .norm();
        let mut cov: f64 = 0.0;
        for b in 0..algebra.block_count() {
            for p in 0..algebra.block_dim(b) {
                for q in 0..algebra.block_dim(b) {
                    let e = algebra.matrix_unit(b, p, q);
                    let lhs = &self.u * self.pi(&e) * self.u.adjoint();
                    let rhs = self.pi(&self.system.endo().apply(&e));
                    cov = cov.max(self.windowed(&(lhs - rhs)).norm());
                }
            }
        }
        let pisom = self
            .windowed(&(&self.u * self.u.adjoint() * &self.u - &self.u))
            .norm();
        let win = (&self.window * &self.window - &self.window).norm()
            + (self.window.adjoint() - &self.window).norm();
        let passed = hom <= 1e-12 * (self.h_dim as f64).max(1.0)
            && unital <= 1e-12 * (self.h_dim as f64).max(1.0)
            && cov <= 1e-10
            && pisom <= 1e-10
            && win <= 1e-10;
        ValidationReport {
            hom_residual: hom,
            unital_residual: unital,
            covariance_residual: cov,
            partial_isometry_residual: pisom,
            window_residual: win,
            passed,
        }
    }

    /// Evaluate Ψ(x) = Σ U*ᵐ π(a_{m,n}) Uⁿ.
    ///
    /// On a level-truncated representation the support must fit the
    /// truncation; the error names the level that would suffice.
    pub fn psi(&self, x: &MatElement) -> Result<DMatrix<Complex64>> {
        if x.system() != &self.system {
            return Err(Error::usage(
                "element and representation belong to different systems",
            ));
        }
        let need = x.max_row().unwrap_or(0).max(x.max_col().unwrap_or(0));
        if let RepKind::Toeplitz { m, .. } = &self.kind {
            if need > *m {
                return Err(Error::usage(format!(
                    "element support needs truncation level M ≥ {need}, representation has M = {m}"
                )));
            }
        }
        let mut powers: Vec<DMatrix<Complex64>> =
            vec![DMatrix::identity(self.h_dim, self.h_dim)];
        for n in 1..=need {
            let next = &powers[n - 1] * &self.u;
            powers.push(next);
        }
        let mut out = DMatrix::<Complex64>::zeros(self.h_dim, self.h_dim);
        for (i, j, v) in x.entries() {
            out += powers[i].adjoint() * self.pi(v) * &powers[j];
        }
        Ok(out)
    }

    /// ‖Ψ(x)‖ on the truncated space (no window compression).
    pub fn operator_norm(&self, x: &MatElement) -> Result<f64> {
        Ok(spectral_norm(&self.psi(x)?))
    }

    /// ‖W Ψ(x) W‖.
    pub fn windowed_norm(&self, x: &MatElement) -> Result<f64> {
        Ok(spectral_norm(&self.windowed(&self.psi(x)?)))
    }

    /// Residual of the multiplicativity Ψ(a★b) = Ψ(a)Ψ(b), compressed on
    /// the right by the cut projection that keeps inputs whose whole
    /// evaluation stays inside the truncation.
    pub fn psi_product_residual(&self, a: &MatElement, b: &MatElement) -> Result<f64> {
        let diff = self.psi(&a.star(b))? - self.psi(a)? * self.psi(b)?;
        match &self.kind {
            RepKind::Toeplitz { m, offsets } => {
                let climb = a.max_row().unwrap_or(0) + b.max_row().unwrap_or(0);
                if climb > *m {
                    return Err(Error::usage(format!(
                        "product check needs truncation level M ≥ {climb}, representation has M = {m}"
                    )));
                }
                let cut = *m - climb;
                let p = coordinate_projection(self.h_dim, offsets[cut + 1]);
                Ok(spectral_norm(&(diff * p)))
            }
            _ => Ok(self.windowed(&diff).norm()),
        }
    }

    /// The covariance ideal: blocks where U*U acts as the unit on π.
    pub fn covariance_ideal(&self, tol: f64) -> BlockIdeal {
        let algebra = self.system.algebra();
        let uu = self.u.adjoint() * &self.u;
        let members = (0..algebra.block_count()).filter(|&b| {
            let e = self.pi(&block_unit(algebra, b));
            self.windowed(&(&uu * &e - &e)).norm() <= tol
        });
        BlockIdeal::new(algebra, members).expect("indices in range")
    }

    /// The annihilation ideal I = {blocks where U*U kills π} together with
    /// the covariance ideal and the structural cross-checks relating them
    /// to ker(π∘α) and ker π.
    pub fn kernel_report(&self, tol: f64) -> KernelReport {
        let algebra = self.system.algebra();
        let uu = self.u.adjoint() * &self.u;
        let mut i_members = Vec::new();
        let mut ker_pi = Vec::new();
        let mut ker_pi_alpha = Vec::new();
        for b in 0..algebra.block_count() {
            let e = block_unit(algebra, b);
            let pe = self.pi(&e);
            if self.windowed(&(&uu * &pe)).norm() <= tol {
                i_members.push(b);
            }
            if self.windowed(&pe).norm() <= tol {
                ker_pi.push(b);
            }
            if self.windowed(&self.pi(&self.system.endo().apply(&e))).norm() <= tol {
                ker_pi_alpha.push(b);
            }
        }
        let i_set = BlockIdeal::new(algebra, i_members).expect("in range");
        let j_set = self.covariance_ideal(tol);
        let ker_pi = BlockIdeal::new(algebra, ker_pi).expect("in range");
        let ker_pi_alpha = BlockIdeal::new(algebra, ker_pi_alpha).expect("in range");
        let i_cap_j = i_set.intersect(&j_set);

        let mut warnings = Vec::new();
        let degraded = !self.is_exact() && !ker_pi.members().is_empty();
        let (i_check, ij_check) = if degraded {
            warnings.push(
                "π has kernel and the window is proper; equalities degraded to inclusions"
                    .to_string(),
            );
            (
                ker_pi_alpha.is_subset_of(&i_set),
                ker_pi.is_subset_of(&i_cap_j),
            )
        } else {
            (i_set == ker_pi_alpha, i_cap_j == ker_pi)
        };
        KernelReport {
            annihilated: i_set,
            covariance: j_set,
            i_equals_ker_pi_alpha: i_check,
            i_cap_j_equals_ker_pi: ij_check,
            warnings,
        }
    }

    /// Verify the correspondence picture t(x) = U*π(x) on X = α(1)A:
    /// the inner-product axiom, both module actions, the rank-one form of
    /// the left action, and agreement of the correspondence covariance
    /// ideal with the representation's.
    pub fn correspondence_bridge(&self, tol: f64) -> CorrespondenceReport {
        let algebra = self.system.algebra();
        let endo = self.system.endo();
        let basis = correspondence_basis(&self.system);
        let t = |x: &AlgElement| self.u.adjoint() * self.pi(x);

        let mut inner: f64 = 0.0;
        let mut right: f64 = 0.0;
        let mut left: f64 = 0.0;
        let probes: Vec<AlgElement> = (0..algebra.block_count())
            .map(|b| block_unit(algebra, b))
            .chain([algebra.unit()])
            .collect();
        for x in &basis {
            for y in &basis {
                let lhs = t(x).adjoint() * t(y);
                let rhs = self.pi(&x.adjoint().mul(y));
                inner = inner.max(self.windowed(&(lhs - rhs)).norm());
            }
            for a in &probes {
                right = right.max(
                    self.windowed(&(t(&x.mul(a)) - t(x) * self.pi(a)))
                        .norm(),
                );
                left = left.max(
                    self.windowed(&(t(&endo.apply(a).mul(x)) - self.pi(a) * t(x)))
                        .norm(),
                );
            }
        }

        // φ(a) = Θ_{α(a), α(1)} as operators on the finite space X itself.
        let mut phi_theta: f64 = 0.0;
        let alpha1 = self.system.image_unit(1);
        for a in &probes {
            let aa = endo.apply(a);
            for x in &basis {
                let lhs = aa.mul(x);
                let rhs = aa.mul(&alpha1.adjoint().mul(x));
                phi_theta = phi_theta.max(lhs.dist(&rhs));
            }
        }

        // Correspondence-side covariance ideal: Ψ_t(φ(e_b)) = U*π(α(e_b))U
        // compared against π(e_b).
        let mut corr_members = Vec::new();
        for b in 0..algebra.block_count() {
            let e = block_unit(algebra, b);
            let lhs = self.u.adjoint() * self.pi(&endo.apply(&e)) * &self.u;
            if self.windowed(&(lhs - self.pi(&e))).norm() <= tol {
                corr_members.push(b);
            }
        }
        let corr_ideal = BlockIdeal::new(algebra, corr_members).expect("in range");
        let rep_ideal = self.covariance_ideal(tol);
        let u_reconstruct = self
            .windowed(&(t(&alpha1).adjoint() - &self.u))
            .norm();

        CorrespondenceReport {
            inner_product_residual: inner,
            right_module_residual: right,
            left_action_residual: left,
            phi_theta_residual: phi_theta,
            u_reconstruction_residual: u_reconstruct,
            ideals_match: corr_ideal == rep_ideal,
            windowed: !self.is_exact(),
        }
    }

    /// The coefficient algebra: the span of products of ⋃_{k≤n_max}
    /// U*ᵏπ(A)Uᵏ, grown until multiplicatively closed, with the complete
    /// transfer checks L(·) = U*(·)U.
    pub fn coefficient_algebra(&self, n_max: usize, iter_cap: usize) -> Result<CoefficientAlgebra> {
        let algebra = self.system.algebra();
        let mut gens: Vec<DMatrix<Complex64>> = Vec::new();
        let mut uk = DMatrix::<Complex64>::identity(self.h_dim, self.h_dim);
        for _k in 0..=n_max {
            for b in 0..algebra.block_count() {
                for p in 0..algebra.block_dim(b) {
                    for q in 0..algebra.block_dim(b) {
                        gens.push(uk.adjoint() * self.pi(&algebra.matrix_unit(b, p, q)) * &uk);
                    }
                }
            }
            uk = &uk * &self.u;
        }
        let mut basis: Vec<DMatrix<Complex64>> = Vec::new();
        for g in &gens {
            gram_push(&mut basis, g.clone());
        }
        let pi_a_dim = {
            let mut pa: Vec<DMatrix<Complex64>> = Vec::new();
            for b in 0..algebra.block_count() {
                for p in 0..algebra.block_dim(b) {
                    for q in 0..algebra.block_dim(b) {
                        gram_push(&mut pa, self.pi(&algebra.matrix_unit(b, p, q)));
                    }
                }
            }
            pa.len()
        };
        let mut closed = false;
        for _pass in 0..iter_cap {
            let len_before = basis.len();
            for i in 0..len_before {
                for j in 0..len_before {
                    let prod = &basis[i] * &basis[j];
                    gram_push(&mut basis, prod);
                }
            }
            if basis.len() == len_before {
                closed = true;
                break;
            }
        }
        if !closed {
            // One more closure probe: maybe the last pass finished the job.
            let len_before = basis.len();
            'outer: for i in 0..len_before {
                for j in 0..len_before {
                    let prod = &basis[i] * &basis[j];
                    let mut probe = basis.clone();
                    gram_push(&mut probe, prod);
                    if probe.len() != len_before {
                        return Err(Error::Resource {
                            message: format!(
                                "coefficient-algebra span still growing after {iter_cap} passes"
                            ),
                            partial: vec![basis.len() as f64],
                        });
                    }
                    if i == len_before - 1 && j == len_before - 1 {
                        break 'outer;
                    }
                }
            }
        }

        // Structural checks, all windowed: membership in B "on the window"
        // means the compression WxW lies in the span of the compressed
        // basis (compression is not multiplicative, so the span itself is
        // grown raw and only the assertions are compressed).
        let mut wbasis: Vec<DMatrix<Complex64>> = Vec::new();
        for b in &basis {
            gram_push(&mut wbasis, self.windowed(b));
        }
        let in_span = |x: &DMatrix<Complex64>| -> f64 {
            let mut r = self.windowed(x);
            for b in &wbasis {
                let c = frob_inner(b, &r);
                r -= b * c;
            }
            r.norm()
        };
        let uu = self.u.adjoint() * &self.u;
        let mut conj_in: f64 = 0.0;
        let mut transfer_in: f64 = 0.0;
        let mut central: f64 = 0.0;
        let mut transfer_alpha: f64 = 0.0;
        let mut transfer_module: f64 = 0.0;
        for bmat in &basis {
            conj_in = conj_in.max(in_span(&(&self.u * bmat * self.u.adjoint())));
            transfer_in = transfer_in.max(in_span(&(self.u.adjoint() * bmat * &self.u)));
            central = central.max(self.windowed(&(&uu * bmat - bmat * &uu)).norm());
            // L(UbU*) = U*U·b.
            let l_of_alpha = self.u.adjoint() * (&self.u * bmat * self.u.adjoint()) * &self.u;
            transfer_alpha =
                transfer_alpha.max(self.windowed(&(l_of_alpha - &uu * bmat)).norm());
            for b in 0..algebra.block_count() {
                let pa = self.pi(&block_unit(algebra, b));
                let paa = self.pi(&self.system.endo().apply(&block_unit(algebra, b)));
                // L(π(α(a))·b) = π(a)·L(b).
                let lhs = self.u.adjoint() * (&paa * bmat) * &self.u;
                let rhs = &pa * (self.u.adjoint() * bmat * &self.u);
                transfer_module = transfer_module.max(self.windowed(&(lhs - rhs)).norm());
            }
        }
        Ok(CoefficientAlgebra {
            dim: basis.len(),
            pi_a_dim,
            conjugation_residual: conj_in,
            transfer_inclusion_residual: transfer_in,
            centrality_residual: central,
            transfer_alpha_residual: transfer_alpha,
            transfer_module_residual: transfer_module,
            basis,
        })
    }
}

/// The I/J ideals of a representation and the structural identities tying
/// them to kernels of π and π∘α.
#[derive(Debug, Clone)]
pub struct KernelReport {
    /// I: blocks annihilated by U*U·π.
    pub annihilated: BlockIdeal,
    /// J: blocks where U*U·π acts as π.
    pub covariance: BlockIdeal,
    /// I = ker(π∘α) (inclusion only when degraded).
    pub i_equals_ker_pi_alpha: bool,
    /// I ∩ J = ker π (inclusion only when degraded).
    pub i_cap_j_equals_ker_pi: bool,
    /// Degradation notices for windowed non-injective representations.
    pub warnings: Vec<String>,
}

/// Residuals of the correspondence axioms for t(x) = U*π(x) on X = α(1)A.
#[derive(Debug, Clone)]
pub struct CorrespondenceReport {
    pub inner_product_residual: f64,
    pub right_module_residual: f64,
    pub left_action_residual: f64,
    pub phi_theta_residual: f64,
    pub u_reconstruction_residual: f64,
    pub ideals_match: bool,
    pub windowed: bool,
}

/// The coefficient algebra B with its structural residuals.
#[derive(Debug, Clone)]
pub struct CoefficientAlgebra {
    /// Linear dimension of B (as computed on the truncation).
    pub dim: usize,
    /// Linear dimension of π(A) for comparison.
    pub pi_a_dim: usize,
    /// Residual of UBU* ⊆ B.
    pub conjugation_residual: f64,
    /// Residual of U*BU ⊆ B.
    pub transfer_inclusion_residual: f64,
    /// Max commutator norm ‖[U*U, b]‖ over the basis.
    pub centrality_residual: f64,
    /// Residual of L(UbU*) = U*U·b.
    pub transfer_alpha_residual: f64,
    /// Residual of L(π(α(a))b) = π(a)L(b).
    pub transfer_module_residual: f64,
    /// Orthonormal basis of B (Frobenius inner product).
    pub basis: Vec<DMatrix<Complex64>>,
}

fn block_unit(algebra: &crate::algebra::FdAlgebra, b: usize) -> AlgElement {
    BlockIdeal::new(algebra, [b]).expect("in range").unit()
}

fn coordinate_projection(h: usize, keep: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(h, h, |i, j| {
        if i == j && i < keep {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub(crate) fn frob_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Gram–Schmidt push: orthogonalize against the basis and append when a
/// genuinely new direction (Frobenius norm > 1e−9) remains.
pub(crate) fn gram_push(basis: &mut Vec<DMatrix<Complex64>>, mut x: DMatrix<Complex64>) {
    for b in basis.iter() {
        let c = frob_inner(b, &x);
        x -= b * c;
    }
    let n = x.norm();
    if n > 1e-9 {
        basis.push(x / Complex64::new(n, 0.0));
    }
}

/// A basis of the correspondence space X = α(1)A: for each block, rank-one
/// matrices v·e_q* with v running over an orthonormal basis of the range of
/// α(1) in that block.
fn correspondence_basis(system: &DynamicalSystem) -> Vec<AlgElement> {
    let algebra = system.algebra();
    let endo = system.endo();
    let mut out = Vec::new();
    for b in 0..algebra.block_count() {
        let n_b = algebra.block_dim(b);
        let rank = n_b - endo.pad()[b];
        let v_b = &endo.unitaries()[b];
        for r in 0..rank {
            let col = v_b.column(r);
            for q in 0..n_b {
                let mut m = DMatrix::<Complex64>::zeros(n_b, n_b);
                for i in 0..n_b {
                    m[(i, q)] = col[i];
                }
                let mut blocks: Vec<DMatrix<Complex64>> = algebra
                    .block_dims()
                    .iter()
                    .map(|&n| DMatrix::zeros(n, n))
                    .collect();
                blocks[b] = m;
                out.push(AlgElement::from_blocks(algebra, blocks).expect("shapes match"));
            }
        }
    }
    out
}

/// Levels 0..=M of the shift picture on ⊕ₙ αⁿ(1)H₀.
///
/// Level n is the range of αⁿ(1) in the fundamental space H₀, coordinatized
/// by the leading columns of the n-th power's block unitaries; π acts on
/// level n through αⁿ, and U drops level n+1 into level n by inclusion.
/// The covariance identity and UU* = π(α(1)) hold exactly on the window
/// (levels 0..M−1); U*U = 1 − P₀ holds exactly everywhere, so the
/// representation is 0-covariant.
pub fn toeplitz_truncation(system: &DynamicalSystem, m: usize) -> Representation {
    let algebra = system.algebra();
    let h0 = algebra.total_dim();
    // Level isometries S_n: ℂ^{d_n} → H₀.
    let mut level_iso: Vec<DMatrix<Complex64>> = Vec::with_capacity(m + 1);
    for n in 0..=m {
        let pw = system.power(n);
        let d_n: usize = (0..algebra.block_count())
            .map(|b| algebra.block_dim(b) - pw.pad()[b])
            .sum();
        let mut s = DMatrix::<Complex64>::zeros(h0, d_n);
        let mut col = 0usize;
        for b in 0..algebra.block_count() {
            let keep = algebra.block_dim(b) - pw.pad()[b];
            let v = &pw.unitaries()[b];
            let row0 = algebra.block_offset(b);
            for r in 0..keep {
                for i in 0..algebra.block_dim(b) {
                    s[(row0 + i, col)] = v[(i, r)];
                }
                col += 1;
            }
        }
        level_iso.push(s);
    }
    let mut offsets = Vec::with_capacity(m + 2);
    let mut acc = 0usize;
    for s in &level_iso {
        offsets.push(acc);
        acc += s.ncols();
    }
    offsets.push(acc);
    let h_dim = acc;

    // π on matrix units, level-diagonal through αⁿ.
    let pi0 = |a: &AlgElement| -> DMatrix<Complex64> {
        let mut m0 = DMatrix::<Complex64>::zeros(h0, h0);
        for b in 0..algebra.block_count() {
            let off = algebra.block_offset(b);
            let n_b = algebra.block_dim(b);
            m0.view_mut((off, off), (n_b, n_b)).copy_from(a.block(b));
        }
        m0
    };
    let mut pi_units = Vec::with_capacity(algebra.block_count());
    for b in 0..algebra.block_count() {
        let n_b = algebra.block_dim(b);
        let mut grid = vec![vec![DMatrix::<Complex64>::zeros(h_dim, h_dim); n_b]; n_b];
        for (p, row) in grid.iter_mut().enumerate() {
            for (q, slot) in row.iter_mut().enumerate() {
                let e = algebra.matrix_unit(b, p, q);
                for n in 0..=m {
                    let img = system.apply_power(n, &e);
                    let s = &level_iso[n];
                    let blockmat = s.adjoint() * pi0(&img) * s;
                    let o = offsets[n];
                    slot.view_mut((o, o), (s.ncols(), s.ncols())).copy_from(&blockmat);
                }
            }
        }
        pi_units.push(grid);
    }

    // U: level n+1 ↪ level n.
    let mut u = DMatrix::<Complex64>::zeros(h_dim, h_dim);
    for n in 0..m {
        let blockmat = level_iso[n].adjoint() * &level_iso[n + 1];
        u.view_mut(
            (offsets[n], offsets[n + 1]),
            (blockmat.nrows(), blockmat.ncols()),
        )
        .copy_from(&blockmat);
    }
    let window = coordinate_projection(h_dim, offsets[m]);
    Representation {
        system: system.clone(),
        h_dim,
        pi_units,
        u,
        window,
        kind: RepKind::Toeplitz { m, offsets },
    }
}

/// The exact unitary picture of an automorphism on H₀: π is the identity
/// block representation and U permutes blocks through the canonical-form
/// unitaries. Covariant with U unitary, so the covariance ideal is all of A.
pub fn automorphism_rep(system: &DynamicalSystem) -> Result<Representation> {
    let endo = system.endo();
    if !endo.is_automorphism() {
        return Err(Error::domain(
            "only automorphisms admit the exact unitary picture on the fundamental space",
        ));
    }
    let algebra = system.algebra();
    let h = algebra.total_dim();
    let mut pi_units = Vec::with_capacity(algebra.block_count());
    for b in 0..algebra.block_count() {
        let n_b = algebra.block_dim(b);
        let off = algebra.block_offset(b);
        let mut grid = vec![vec![DMatrix::<Complex64>::zeros(h, h); n_b]; n_b];
        for (p, row) in grid.iter_mut().enumerate() {
            for (q, slot) in row.iter_mut().enumerate() {
                slot[(off + p, off + q)] = Complex64::new(1.0, 0.0);
            }
        }
        pi_units.push(grid);
    }
    let mut u = DMatrix::<Complex64>::zeros(h, h);
    for c in 0..algebra.block_count() {
        let src = (0..algebra.block_count())
            .find(|&b| endo.multiplicity()[c][b] == 1)
            .expect("automorphism rows have one source");
        let v = &endo.unitaries()[c];
        u.view_mut(
            (algebra.block_offset(c), algebra.block_offset(src)),
            (algebra.block_dim(c), algebra.block_dim(src)),
        )
        .copy_from(v);
    }
    let window = DMatrix::identity(h, h);
    Ok(Representation {
        system: system.clone(),
        h_dim: h,
        pi_units,
        u,
        window,
        kind: RepKind::Exact,
    })
}

/// A finite window, copies lo..=hi, of the two-sided amplification
/// ℓ²(ℤ, H): π acts copy-diagonally and U sends copy n−1 to copy n through
/// the base U. The window keeps copies above lo + drop_low compressed by
/// the base window (covariance cannot hold at the lowest retained copy).
pub fn amplify(base: &Representation, lo: i64, hi: i64, drop_low: usize) -> Result<Representation> {
    if hi <= lo {
        return Err(Error::usage("amplification needs at least two copies"));
    }
    let copies = (hi - lo + 1) as usize;
    if drop_low == 0 || drop_low >= copies {
        return Err(Error::usage(
            "window must drop at least the lowest copy and keep at least one",
        ));
    }
    let d = base.h_dim;
    let h = d * copies;
    let place = |c: usize| c * d;
    let mut pi_units = Vec::with_capacity(base.pi_units.len());
    for grid in &base.pi_units {
        let mut new_grid = Vec::with_capacity(grid.len());
        for row in grid {
            let mut new_row = Vec::with_capacity(row.len());
            for unit in row {
                let mut big = DMatrix::<Complex64>::zeros(h, h);
                for c in 0..copies {
                    big.view_mut((place(c), place(c)), (d, d)).copy_from(unit);
                }
                new_row.push(big);
            }
            new_grid.push(new_row);
        }
        pi_units.push(new_grid);
    }
    let mut u = DMatrix::<Complex64>::zeros(h, h);
    for c in 1..copies {
        u.view_mut((place(c), place(c - 1)), (d, d)).copy_from(&base.u);
    }
    let mut window = DMatrix::<Complex64>::zeros(h, h);
    for c in drop_low..copies {
        window
            .view_mut((place(c), place(c)), (d, d))
            .copy_from(&base.window);
    }
    Ok(Representation {
        system: base.system.clone(),
        h_dim: h,
        pi_units,
        u,
        window,
        kind: RepKind::Amplified,
    })
}

/// An amplified truncation sized from an element's support: base truncation
/// at level `m`, copy width 2s+2+extra, window dropping the lowest s copies
/// (s = largest shift the element performs). Sized this way, the copy-gauge
/// averaging argument applies and the main-diagonal compression can only
/// shrink windowed norms.
pub fn adequate_amplification(
    system: &DynamicalSystem,
    x: &MatElement,
    m: usize,
    extra_copies: usize,
) -> Result<Representation> {
    let s = x
        .max_row()
        .unwrap_or(0)
        .max(x.max_col().unwrap_or(0))
        .max(1);
    let need = x.max_row().unwrap_or(0).max(x.max_col().unwrap_or(0));
    if m < need {
        return Err(Error::usage(format!(
            "base truncation level M = {m} below the element's support {need}"
        )));
    }
    let base = toeplitz_truncation(system, m);
    let hi = (2 * s + 1 + extra_copies) as i64;
    amplify(&base, 0, hi, s)
}

/// The J = 0 norm oracle: operator norms of Ψ(x) on growing truncations,
/// stopped once two successive levels agree to 1e−10 (capped at
/// support + 50).
pub fn toeplitz_stabilized_norm(system: &DynamicalSystem, x: &MatElement) -> f64 {
    let n = x.max_row().unwrap_or(0).max(x.max_col().unwrap_or(0));
    let cap = n + 50;
    let mut m = n + 2;
    let mut prev: Option<f64> = None;
    let mut stable = 0usize;
    loop {
        let rep = toeplitz_truncation(system, m);
        let val = rep.operator_norm(x).expect("support fits by construction");
        if let Some(p) = prev {
            if (val - p).abs() < 1e-10 {
                stable += 1;
            } else {
                stable = 0;
            }
        }
        if stable >= 2 || m >= cap {
            return val;
        }
        prev = Some(val);
        m += 1;
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

    fn sys2() -> DynamicalSystem {
        let a = FdAlgebra::new(vec![1, 1]).unwrap();
        DynamicalSystem::new(
            Endomorphism::new(&a, vec![vec![1, 0], vec![1, 0]], None, None).unwrap(),
        )
    }

    fn padded() -> DynamicalSystem {
        let a = FdAlgebra::new(vec![2, 1]).unwrap();
        DynamicalSystem::new(
            Endomorphism::new(&a, vec![vec![0, 1], vec![0, 0]], None, None).unwrap(),
        )
    }

    #[test]
    fn toeplitz_satisfies_the_windowed_identities() {
        for sys in [sys2(), padded()] {
            let rep = toeplitz_truncation(&sys, 3);
            let report = rep.validation_report();
            assert!(report.passed, "{report:?}");
            assert!(report.covariance_residual < 1e-14);

            // U*U = 1 − P₀ exactly (not merely on the window).
            let uu = rep.u.adjoint() * &rep.u;
            let p0 = coordinate_projection(rep.h_dim, rep.h_dim)
                - coordinate_projection_complement(&rep);
            let expect = DMatrix::<Complex64>::identity(rep.h_dim, rep.h_dim) - p0;
            assert!((uu - expect).norm() < 1e-13);

            // Trivial covariance ideal on the window.
            assert!(rep.covariance_ideal(1e-8).members().is_empty());
            let kr = rep.kernel_report(1e-8);
            assert!(kr.i_equals_ker_pi_alpha && kr.i_cap_j_equals_ker_pi);
        }
    }

    fn coordinate_projection_complement(rep: &Representation) -> DMatrix<Complex64> {
        // Projection onto levels ≥ 1 for a Toeplitz representation.
        match &rep.kind {
            RepKind::Toeplitz { offsets, .. } => {
                let mut p = DMatrix::<Complex64>::zeros(rep.h_dim, rep.h_dim);
                for i in offsets[1]..rep.h_dim {
                    p[(i, i)] = Complex64::new(1.0, 0.0);
                }
                p
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn degenerate_truncation_is_allowed() {
        let sys = sys2();
        let rep = toeplitz_truncation(&sys, 0);
        assert_eq!(rep.h_dim, 2);
        assert_eq!(rep.u.norm(), 0.0);
        assert_eq!(rep.window.norm(), 0.0);
        assert!(rep.validation_report().passed);
    }

    #[test]
    fn swap_automorphism_is_exact_with_full_covariance() {
        let a = FdAlgebra::new(vec![1, 1]).unwrap();
        let swap = Endomorphism::new(&a, vec![vec![0, 1], vec![1, 0]], None, None).unwrap();
        let sys = DynamicalSystem::new(swap);
        let rep = automorphism_rep(&sys).unwrap();
        assert!(rep.validation_report().passed);
        // U is unitary, hence J = everything and I = nothing.
        let uu = rep.u.adjoint() * &rep.u;
        assert!((uu - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-14);
        let kr = rep.kernel_report(1e-10);
        assert!(kr.covariance.is_full());
        assert!(kr.annihilated.members().is_empty());
        assert!(kr.i_equals_ker_pi_alpha && kr.i_cap_j_equals_ker_pi);
        assert!(kr.warnings.is_empty());

        // Not an automorphism → no exact unitary picture.
        assert!(automorphism_rep(&sys2()).is_err());
    }

    #[test]
    fn psi_is_a_windowed_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for sys in [sys2(), padded()] {
            let rep = toeplitz_truncation(&sys, 8);
            // Ψ(u) = U on the window.
            let u_sym = MatElement::shift(&sys);
            let psi_u = rep.psi(&u_sym).unwrap();
            assert!(rep.windowed(&(psi_u - &rep.u)).norm() < 1e-13);
            for _ in 0..10 {
                let a = random_mat(&mut rng, &sys, 3);
                let b = random_mat(&mut rng, &sys, 3);
                assert!((rep.psi(&a.adjoint()).unwrap() - rep.psi(&a).unwrap().adjoint()).norm() < 1e-12);
                let res = rep.psi_product_residual(&a, &b).unwrap();
                assert!(res < 1e-9, "Ψ multiplicativity residual {res}");
            }
        }
    }

    fn random_mat(rng: &mut ChaCha8Rng, sys: &DynamicalSystem, span: usize) -> MatElement {
        use rand::Rng;
        let mut triples = Vec::new();
        for _ in 0..rng.gen_range(1..=4) {
            triples.push((
                rng.gen_range(0..=span),
                rng.gen_range(0..=span),
                sample::random_element(rng, sys.algebra()),
            ));
        }
        MatElement::from_entries(sys, triples).unwrap()
    }

    #[test]
    fn psi_reports_the_required_level() {
        let sys = sys2();
        let rep = toeplitz_truncation(&sys, 2);
        let x = MatElement::standard_position(&sys, 4, &sys.algebra().unit());
        match rep.psi(&x) {
            Err(Error::Usage(msg)) => assert!(msg.contains("M ≥ 4") && msg.contains("M = 2")),
            other => panic!("expected a usage error, got {other:?}"),
        }
    }

    #[test]
    fn iterated_projections_commute_with_pi() {
        for sys in [sys2(), padded()] {
            let rep = toeplitz_truncation(&sys, 5);
            let mut un = DMatrix::<Complex64>::identity(rep.h_dim, rep.h_dim);
            for _n in 1..=5 {
                un = &un * &rep.u;
                let proj = un.adjoint() * &un;
                for b in 0..sys.algebra().block_count() {
                    let pe = rep.pi(&block_unit(sys.algebra(), b));
                    let comm = &proj * &pe - &pe * &proj;
                    assert!(rep.windowed(&comm).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn amplification_keeps_covariance_and_partial_isometry() {
        for sys in [sys2(), padded()] {
            let base = toeplitz_truncation(&sys, 4);
            let amp = amplify(&base, -2, 3, 1).unwrap();
            let report = amp.validation_report();
            assert!(report.passed, "{report:?}");

            // A unitary base turns the amplification into the one-sided
            // truncation of the bilateral shift pattern: U*U misses exactly
            // the lowest copy.
            let a = FdAlgebra::new(vec![1, 1]).unwrap();
            let swap = Endomorphism::new(&a, vec![vec![0, 1], vec![1, 0]], None, None).unwrap();
            let ssys = DynamicalSystem::new(swap);
            let urep = automorphism_rep(&ssys).unwrap();
            let amp2 = amplify(&urep, 0, 3, 1).unwrap();
            let uu = amp2.u.adjoint() * &amp2.u;
            let mut expect = DMatrix::<Complex64>::identity(amp2.h_dim, amp2.h_dim);
            for i in (amp2.h_dim - urep.h_dim)..amp2.h_dim {
                expect[(i, i)] = Complex64::new(0.0, 0.0);
            }
            // U*U = 1 − (projection onto the top copy): copies shift upward.
            assert!((uu - expect).norm() < 1e-13);
            assert!(amp2.validation_report().passed);
        }
    }

    #[test]
    fn stabilized_norm_matches_exact_cases() {
        // Embedded element, J = 0: the Toeplitz norm of π(a) is
        // max_n ‖αⁿ(a)‖ = ‖a‖ at n = 0.
        let sys = sys2();
        let a = sys.algebra().scalar_element(&[0.25, 1.5]);
        let x = MatElement::embed(&sys, &a);
        let v = toeplitz_stabilized_norm(&sys, &x);
        assert!((v - 1.5).abs() < 1e-12);

        // The shift symbol has norm 1.
        let u = MatElement::shift(&sys);
        assert!((toeplitz_stabilized_norm(&sys, &u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correspondence_bridge_passes_on_both_oracle_reps() {
        // Exact automorphism picture.
        let a = FdAlgebra::new(vec![1, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let auto = sample::random_automorphism(&mut rng, &a);
        let sys = DynamicalSystem::new(auto);
        let rep = automorphism_rep(&sys).unwrap();
        let cb = rep.correspondence_bridge(1e-8);
        assert!(cb.inner_product_residual < 1e-12);
        assert!(cb.right_module_residual < 1e-12);
        assert!(cb.left_action_residual < 1e-12);
        assert!(cb.phi_theta_residual < 1e-12);
        assert!(cb.u_reconstruction_residual < 1e-12);
        assert!(cb.ideals_match);
        assert!(!cb.windowed);

        // Windowed Toeplitz picture.
        for sys in [sys2(), padded()] {
            let rep = toeplitz_truncation(&sys, 4);
            let cb = rep.correspondence_bridge(1e-8);
            assert!(cb.inner_product_residual < 1e-10, "{cb:?}");
            assert!(cb.right_module_residual < 1e-10);
            assert!(cb.left_action_residual < 1e-10);
            assert!(cb.phi_theta_residual < 1e-12);
            assert!(cb.u_reconstruction_residual < 1e-10);
            assert!(cb.ideals_match);
            assert!(cb.windowed);
        }
    }

    #[test]
    fn coefficient_algebra_growth_and_checks() {
        // Automorphism picture: conjugation by a unitary preserves π(A),
        // so B = π(A).
        let a = FdAlgebra::new(vec![1, 1]).unwrap();
        let swap = Endomorphism::new(&a, vec![vec![0, 1], vec![1, 0]], None, None).unwrap();
        let sys = DynamicalSystem::new(swap);
        let rep = automorphism_rep(&sys).unwrap();
        let ca = rep.coefficient_algebra(3, 8).unwrap();
        assert_eq!(ca.dim, ca.pi_a_dim);

        // SYS2 truncation: the level cut-offs enlarge the algebra.
        let rep = toeplitz_truncation(&sys2(), 4);
        let ca = rep.coefficient_algebra(3, 8).unwrap();
        assert!(ca.dim > ca.pi_a_dim, "dim {} vs π(A) {}", ca.dim, ca.pi_a_dim);
        assert!(ca.conjugation_residual < 1e-10, "{ca:?}");
        assert!(ca.transfer_inclusion_residual < 1e-10);
        assert!(ca.centrality_residual < 1e-10);
        assert!(ca.transfer_alpha_residual < 1e-10);
        assert!(ca.transfer_module_residual < 1e-10);

        // Truncation generators are level-coherent, so their span closes at
        // the generator stage; a genuinely growing span needs a transfer
        // direction skew to π, which a hand-made partial isometry provides.
        // (Zero window: we only exercise the iteration budget here.)
        let sys = sys2();
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let diag3 = |a: Complex64, b: Complex64, c: Complex64| {
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![a, b, c]))
        };
        let pi_units = vec![vec![vec![diag3(o, o, z)]], vec![vec![diag3(z, z, o)]]];
        let (c1, s1) = (1.0f64.cos(), 1.0f64.sin());
        let mut u = DMatrix::<Complex64>::zeros(3, 3);
        u[(0, 1)] = Complex64::new(c1, 0.0);
        u[(0, 2)] = Complex64::new(s1, 0.0);
        let window = DMatrix::<Complex64>::zeros(3, 3);
        let grep = Representation::from_parts(&sys, pi_units, u, window).unwrap();
        let full = grep.coefficient_algebra(1, 8).unwrap();
        match grep.coefficient_algebra(1, 0) {
            Err(Error::Resource { partial, .. }) => {
                assert!(!partial.is_empty());
                assert!((partial[0] as usize) < full.dim);
            }
            other => panic!(
                "expected resource exhaustion (full dim {}), got {other:?}",
                full.dim
            ),
        }
    }

    #[test]
    fn degraded_kernel_report_warns() {
        // π(x, y) = diag(x, x) with an identity U and a proper window:
        // covariant but non-injective, so equalities degrade to inclusions.
        let sys = sys2();
        let zero = DMatrix::<Complex64>::zeros(2, 2);
        let mut e0 = zero.clone();
        e0[(0, 0)] = Complex64::new(1.0, 0.0);
        e0[(1, 1)] = Complex64::new(1.0, 0.0);
        let pi_units = vec![vec![vec![e0]], vec![vec![zero.clone()]]];
        let u = DMatrix::<Complex64>::identity(2, 2);
        let mut window = DMatrix::<Complex64>::zeros(2, 2);
        window[(0, 0)] = Complex64::new(1.0, 0.0);
        let rep = Representation::from_parts(&sys, pi_units, u, window).unwrap();
        let kr = rep.kernel_report(1e-10);
        assert!(!kr.warnings.is_empty());
        assert!(kr.i_equals_ker_pi_alpha && kr.i_cap_j_equals_ker_pi);
        // U unitary → full covariance ideal.
        assert!(kr.covariance.is_full());
    }
}
