//! Polar geometry of the Hermann action: an orthonormal basis of `K^perp`
//! adapted to the section, the inertia operator, the orbit density and the
//! measure factor it produces in the reduced Laplacian.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{
    inner_g, inner_y_raw, radial_exp, AntiHerm, BlockView, CMat, GPair, RadialPoint, Scheme, C64,
};
use crate::oracle::laplacian_fd;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Minimal distance from the alcove walls for finite-difference evaluation.
pub const FD_WALL_GUARD: f64 = 0.05;
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    HatL,
    V,
    W,
    VTilde,
    WTilde,
    ZTilde0,
}

/// Restricted roots on the section, with 0-based particle indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Root {
    Zero,
    /// `eps_k - eps_l`, `k < l`
    Diff(usize, usize),
    /// `eps_k + eps_l`, `k < l`
    Sum(usize, usize),
    /// `2 eps_j`
    Long(usize),
    /// `eps_j`
    Short(usize),
}

impl Root {
    pub fn eval(&self, q: &[f64]) -> f64 {
        match *self {
            Root::Zero => 0.0,
            Root::Diff(k, l) => q[k] - q[l],
            Root::Sum(k, l) => q[k] + q[l],
            Root::Long(j) => 2.0 * q[j],
            Root::Short(j) => q[j],
        }
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Root::Zero => write!(f, "0"),
            Root::Diff(k, l) => write!(f, "e{}-e{}", k + 1, l + 1),
            Root::Sum(k, l) => write!(f, "e{}+e{}", k + 1, l + 1),
            Root::Long(j) => write!(f, "2e{}", j + 1),
            Root::Short(j) => write!(f, "e{}", j + 1),
        }
    }
}

/// Real (`R`) or imaginary (`I`) flavour of a basis matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flavor {
    R,
    I,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisLabel {
    pub family: Family,
    pub root: Root,
    pub flavor: Option<Flavor>,
    /// First block index (`c`), or the position in the `M` basis for `HatL`.
    pub c: Option<usize>,
    /// Second block index (`d`).
    pub d: Option<usize>,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}", self.family, self.root)?;
        if let Some(fl) = self.flavor {
            write!(f, ",{fl:?}")?;
        }
        if let Some(c) = self.c {
            write!(f, ",c={}", c + 1)?;
        }
        if let Some(d) = self.d {
            write!(f, ",d={}", d + 1)?;
        }
        write!(f, "]")
    }
}

/// A labelled u(N) matrix from one of the root families.
#[derive(Debug, Clone, PartialEq)]
pub struct RootVector {
    pub root: Root,
    pub flavor: Flavor,
    pub c: Option<usize>,
    pub d: Option<usize>,
    pub matrix: AntiHerm,
}

struct Builder {
    bv: BlockView,
    big_n: usize,
}

impl Builder {
    fn new(s: &Scheme) -> Self {
        Builder {
            bv: s.blocks(),
            big_n: s.big_n(),
        }
    }

    /// Matrix with the given `(block_i, local_i, block_j, local_j, value)` entries.
    fn mat(&self, entries: &[(usize, usize, usize, usize, C64)]) -> AntiHerm {
        let mut x = CMat::zeros(self.big_n, self.big_n);
        for &(bi, li, bj, lj, v) in entries {
            x[(self.bv.index(bi, li), self.bv.index(bj, lj))] += v;
        }
        AntiHerm::new(x).expect("basis matrices are anti-Hermitian by construction")
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn im(x: f64) -> C64 {
    C64::new(0.0, x)
}

/// Standard orthonormal basis of `u(p)` placed in diagonal block `b`:
/// `i E_aa`, then for `a < b` the pair `(E_ab - E_ba)/sqrt2`, `i(E_ab + E_ba)/sqrt2`.
fn unitary_block_basis(bld: &Builder, b: usize, p: usize) -> Vec<AntiHerm> {
    let mut out = Vec::new();
    for a in 0..p {
        out.push(bld.mat(&[(b, a, b, a, im(1.0))]));
    }
    for a in 0..p {
        for c in a + 1..p {
            out.push(bld.mat(&[(b, a, b, c, re(FRAC_1_SQRT_2)), (b, c, b, a, re(-FRAC_1_SQRT_2))]));
            out.push(bld.mat(&[(b, a, b, c, im(FRAC_1_SQRT_2)), (b, c, b, a, im(FRAC_1_SQRT_2))]));
        }
    }
    out
}

/// Orthonormal basis of `Lie(M)`: the diagonally embedded torus `T(n)` (blocks
/// 1 and 4), then `u(r - n)` in block 2, then `u(s - n)` in block 3.
pub fn build_m_basis(s: &Scheme) -> Vec<AntiHerm> {
    let bld = Builder::new(s);
    let mut out: Vec<AntiHerm> = (0..s.n())
        .map(|j| bld.mat(&[(0, j, 0, j, im(FRAC_1_SQRT_2)), (3, j, 3, j, im(FRAC_1_SQRT_2))]))
        .collect();
    out.extend(unitary_block_basis(&bld, 1, s.r() - s.n()));
    out.extend(unitary_block_basis(&bld, 2, s.s() - s.n()));
    out
}

/// Orthonormal basis `E_alpha^D` of `M^perp` inside `u(N)^{++}`.
///
/// Order: for `k < l` lexicographically `eps_k - eps_l` (R, I) then
/// `eps_k + eps_l` (R, I); then for each `j` the long root `2 eps_j` (I) followed
/// by the short root `eps_j` (R for all `d`, then I for all `d`).
pub fn e_family(s: &Scheme) -> Vec<RootVector> {
    let bld = Builder::new(s);
    let n = s.n();
    let h = 0.5;
    let mut out = Vec::new();
    let rv = |root, flavor, d, matrix| RootVector {
        root,
        flavor,
        c: None,
        d,
        matrix,
    };
    for k in 0..n {
        for l in k + 1..n {
            out.push(rv(
                Root::Diff(k, l),
                Flavor::R,
                None,
                bld.mat(&[
                    (0, k, 0, l, re(h)),
                    (0, l, 0, k, re(-h)),
                    (3, k, 3, l, re(h)),
                    (3, l, 3, k, re(-h)),
                ]),
            ));
            out.push(rv(
                Root::Diff(k, l),
                Flavor::I,
                None,
                bld.mat(&[
                    (0, k, 0, l, im(h)),
                    (0, l, 0, k, im(h)),
                    (3, k, 3, l, im(h)),
                    (3, l, 3, k, im(h)),
                ]),
            ));
            out.push(rv(
                Root::Sum(k, l),
                Flavor::R,
                None,
                bld.mat(&[
                    (0, k, 0, l, re(h)),
                    (0, l, 0, k, re(-h)),
                    (3, l, 3, k, re(h)),
                    (3, k, 3, l, re(-h)),
                ]),
            ));
            out.push(rv(
                Root::Sum(k, l),
                Flavor::I,
                None,
                bld.mat(&[
                    (0, k, 0, l, im(h)),
                    (0, l, 0, k, im(h)),
                    (3, k, 3, l, im(-h)),
                    (3, l, 3, k, im(-h)),
                ]),
            ));
        }
    }
    let b = s.r() - n;
    for j in 0..n {
        out.push(rv(
            Root::Long(j),
            Flavor::I,
            None,
            bld.mat(&[(0, j, 0, j, im(FRAC_1_SQRT_2)), (3, j, 3, j, im(-FRAC_1_SQRT_2))]),
        ));
        for d in 0..b {
            out.push(rv(
                Root::Short(j),
                Flavor::R,
                Some(d),
                bld.mat(&[(0, j, 1, d, re(FRAC_1_SQRT_2)), (1, d, 0, j, re(-FRAC_1_SQRT_2))]),
            ));
        }
        for d in 0..b {
            out.push(rv(
                Root::Short(j),
                Flavor::I,
                Some(d),
                bld.mat(&[(0, j, 1, d, im(FRAC_1_SQRT_2)), (1, d, 0, j, im(FRAC_1_SQRT_2))]),
            ));
        }
    }
    out
}

/// Orthonormal basis `E~_{eps_j}^D` of `u(N)^{+-}`, ordered by `j`, flavour, `d`.
pub fn etilde_family(s: &Scheme) -> Vec<RootVector> {
    let bld = Builder::new(s);
    let c = s.s() - s.n();
    let mut out = Vec::new();
    for j in 0..s.n() {
        for (flavor, a, b) in [(Flavor::R, re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)), (Flavor::I, im(FRAC_1_SQRT_2), im(FRAC_1_SQRT_2))] {
            for d in 0..c {
                out.push(RootVector {
                    root: Root::Short(j),
                    flavor,
                    c: None,
                    d: Some(d),
                    matrix: bld.mat(&[(2, d, 3, j, a), (3, j, 2, d, b)]),
                });
            }
        }
    }
    out
}

/// The partners `F~_{eps_j}^D` in `u(N)^{-+}`, index-aligned with [`etilde_family`].
pub fn ftilde_family(s: &Scheme) -> Vec<RootVector> {
    let bld = Builder::new(s);
    let c = s.s() - s.n();
    let mut out = Vec::new();
    for j in 0..s.n() {
        for (flavor, a, b) in [(Flavor::R, re(-FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)), (Flavor::I, im(FRAC_1_SQRT_2), im(FRAC_1_SQRT_2))] {
            for d in 0..c {
                out.push(RootVector {
                    root: Root::Short(j),
                    flavor,
                    c: None,
                    d: Some(d),
                    matrix: bld.mat(&[(0, j, 2, d, a), (2, d, 0, j, b)]),
                });
            }
        }
    }
    out
}

/// `F~_0^{D}` in the `(2,3)` blocks of `u(N)^{-+}`, ordered by flavour, then `(c, d)`.
pub fn fzero_family(s: &Scheme) -> Vec<RootVector> {
    let bld = Builder::new(s);
    let (b, c) = (s.r() - s.n(), s.s() - s.n());
    let mut out = Vec::new();
    for (flavor, x, y) in [(Flavor::R, re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)), (Flavor::I, im(FRAC_1_SQRT_2), im(FRAC_1_SQRT_2))] {
        for ci in 0..b {
            for d in 0..c {
                out.push(RootVector {
                    root: Root::Zero,
                    flavor,
                    c: Some(ci),
                    d: Some(d),
                    matrix: bld.mat(&[(1, ci, 2, d, x), (2, d, 1, ci, y)]),
                });
            }
        }
    }
    out
}

/// Ordered orthonormal basis of `K^perp` that diagonalizes the inertia
/// operator on the regular part of the section.
#[derive(Debug, Clone)]
pub struct KPerpBasis {
    scheme: Scheme,
    elements: Vec<(BasisLabel, GPair)>,
}

impl KPerpBasis {
    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[(BasisLabel, GPair)] {
        &self.elements
    }

    pub fn labels(&self) -> impl Iterator<Item = &BasisLabel> {
        self.elements.iter().map(|(l, _)| l)
    }

    pub fn vectors(&self) -> impl Iterator<Item = &GPair> {
        self.elements.iter().map(|(_, v)| v)
    }

    pub fn count(&self, family: Family) -> usize {
        self.labels().filter(|l| l.family == family).count()
    }

    /// Gram matrix under `B_G`.
    pub fn gram(&self) -> DMatrix<f64> {
        let d = self.len();
        DMatrix::from_fn(d, d, |i, j| inner_g(&self.elements[i].1, &self.elements[j].1))
    }
}

pub fn build_kperp_basis(s: &Scheme) -> KPerpBasis {
    let mut elements = Vec::new();
    let label = |family, root, flavor, c, d| BasisLabel {
        family,
        root,
        flavor,
        c,
        d,
    };

    for (idx, l) in build_m_basis(s).iter().enumerate() {
        let v = GPair::raw(l.scale(FRAC_1_SQRT_2), l.scale(-FRAC_1_SQRT_2));
        elements.push((label(Family::HatL, Root::Zero, None, Some(idx), None), v));
    }
    let es = e_family(s);
    for (family, sign) in [(Family::V, 1.0), (Family::W, -1.0)] {
        for e in &es {
            let v = GPair::raw(e.matrix.scale(FRAC_1_SQRT_2), e.matrix.scale(sign * FRAC_1_SQRT_2));
            elements.push((label(family, e.root, Some(e.flavor), e.c, e.d), v));
        }
    }
    let et = etilde_family(s);
    let ft = ftilde_family(s);
    for (family, sign) in [(Family::VTilde, 1.0), (Family::WTilde, -1.0)] {
        for (e, f) in et.iter().zip(&ft) {
            let v = GPair::raw(e.matrix.scale(FRAC_1_SQRT_2), f.matrix.scale(sign * FRAC_1_SQRT_2));
            elements.push((label(family, e.root, Some(e.flavor), e.c, e.d), v));
        }
    }
    for f in fzero_family(s) {
        let v = GPair::raw(AntiHerm::zeros(s.big_n()), f.matrix.clone());
        elements.push((label(Family::ZTilde0, Root::Zero, Some(f.flavor), f.c, f.d), v));
    }
    KPerpBasis {
        scheme: *s,
        elements,
    }
}

/// The inertia operator in the basis order of a [`KPerpBasis`].
#[derive(Debug, Clone)]
pub struct InertiaMatrix {
    pub matrix: DMatrix<f64>,
    pub point: RadialPoint,
}

/// `xi_R - g^{-1} xi_L g` with `g = exp(q)`: the left-translated tangent vector
/// generated by `(xi_L, xi_R)` at the section point.
pub(crate) fn orbit_tangent(p: &GPair, g: &CMat) -> CMat {
    let gl = g.adjoint() * p.xi_l.matrix() * g;
    p.xi_r.matrix() - gl
}

/// Inertia matrix assembled from the metric pulled back along the action.
pub fn inertia_from_definition(basis: &KPerpBasis, pt: &RadialPoint) -> Result<InertiaMatrix> {
    pt.require_regular()?;
    let g = radial_exp(&basis.scheme, pt)?;
    let tangents: Vec<CMat> = basis.vectors().map(|v| orbit_tangent(v, &g)).collect();
    let d = tangents.len();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = inner_y_raw(&tangents[i], &tangents[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(InertiaMatrix {
        matrix: m,
        point: pt.clone(),
    })
}

/// Closed-form eigenvalue of the inertia operator on a basis vector.
pub fn closed_eigenvalue(label: &BasisLabel, q: &[f64]) -> f64 {
    match label.family {
        Family::HatL => 2.0,
        Family::V => 2.0 * (label.root.eval(q) / 2.0).sin().powi(2),
        Family::W => 2.0 * (label.root.eval(q) / 2.0).cos().powi(2),
        Family::VTilde => 1.0 + label.root.eval(q).sin(),
        Family::WTilde => 1.0 - label.root.eval(q).sin(),
        Family::ZTilde0 => 1.0,
    }
}

pub fn inertia_closed_eigen(basis: &KPerpBasis, pt: &RadialPoint) -> Result<Vec<f64>> {
    pt.require_regular()?;
    Ok(basis
        .labels()
        .map(|l| closed_eigenvalue(l, pt.angles()))
        .collect())
}

/// Exponents `(nu, nu1, nu2)` of the product formula for the orbit density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuTriple {
    pub nu: f64,
    pub nu1: f64,
    pub nu2: f64,
}

impl NuTriple {
    pub fn new(nu: f64, nu1: f64, nu2: f64) -> Self {
        NuTriple { nu, nu1, nu2 }
    }

    pub fn for_scheme(s: &Scheme) -> Self {
        NuTriple {
            nu: 1.0,
            nu1: s.r() as f64 - s.s() as f64,
            nu2: (s.s() - s.n()) as f64 + 0.5,
        }
    }
}

/// `prod_{k<l} [sin(q_l - q_k) sin(q_k + q_l)]^nu prod_j sin(q_j)^nu1 sin(2 q_j)^nu2`.
///
/// The difference factor is taken as `sin(q_l - q_k)`, which is positive on the
/// alcove.
pub fn product_density(nu: NuTriple, q: &[f64]) -> f64 {
    let n = q.len();
    let mut log = 0.0;
    for k in 0..n {
        for l in k + 1..n {
            log += nu.nu * ((q[l] - q[k]).sin().abs().ln() + (q[k] + q[l]).sin().abs().ln());
        }
        log += nu.nu1 * q[k].sin().abs().ln() + nu.nu2 * (2.0 * q[k]).sin().abs().ln();
    }
    log.exp()
}

/// Square root of the orbit density, normalized to the product formula.
pub fn density_sqrt(s: &Scheme, pt: &RadialPoint) -> Result<f64> {
    pt.require_regular()?;
    if pt.len() != s.n() {
        return Err(Error::Shape(format!("need {} angles", s.n())));
    }
    Ok(product_density(NuTriple::for_scheme(s), pt.angles()))
}

/// Closed form of `delta^{-1/2} Delta(delta^{1/2})`.
pub fn measure_factor_closed(s: &Scheme, pt: &RadialPoint) -> Result<f64> {
    pt.require_regular()?;
    let (m, n, r, ss) = (s.m() as f64, s.n() as f64, s.r() as f64, s.s() as f64);
    let c1 = (m - n) * (r - ss) / 2.0;
    let c2 = (4.0 * (ss - n).powi(2) - 1.0) / 2.0;
    let c0 = -n * (3.0 * m * m + n * n - 1.0) / 6.0;
    let mut acc = c0;
    for &q in pt.angles() {
        acc += c1 / q.sin().powi(2) + c2 / (2.0 * q).sin().powi(2);
    }
    Ok(acc)
}

fn check_fd_domain(pt: &RadialPoint) -> Result<()> {
    pt.require_regular()?;
    if pt.wall_distance() < FD_WALL_GUARD {
        return Err(Error::Domain(format!(
            "{:?} is within {FD_WALL_GUARD} of an alcove wall",
            pt.angles()
        )));
    }
    Ok(())
}

/// `f^{-1} (1/2) sum_k d^2 f / dq_k^2` by central differences.
pub fn half_laplacian_ratio_fd<F: Fn(&[f64]) -> f64>(f: F, q: &[f64], h: f64) -> f64 {
    let f0 = f(q);
    0.5 * laplacian_fd(&f, q, h) / f0
}

/// Finite-difference evaluation of the measure factor from [`density_sqrt`].
pub fn measure_factor_fd(s: &Scheme, pt: &RadialPoint, h: f64) -> Result<f64> {
    check_fd_domain(pt)?;
    let nu = NuTriple::for_scheme(s);
    Ok(half_laplacian_ratio_fd(|q| product_density(nu, q), pt.angles(), h))
}

/// Closed form of `J^{-1} sum_a d^2 J / dq_a^2` for the product density.
///
/// Each pair factor depends on two coordinates, so its `1/sin^2` terms carry
/// `2 nu (nu - 1)`. This equals the one-sided coefficient `nu (nu - 1)` only at
/// `nu = 1`, the value the orbit density uses.
pub fn sutherland_identity_rhs(nu: NuTriple, q: &[f64]) -> f64 {
    sutherland_identity_rhs_with_pair(nu, q, 2.0 * nu.nu * (nu.nu - 1.0))
}

/// Same as [`sutherland_identity_rhs`] with the one-sided pair coefficient
/// `nu (nu - 1)`.
pub fn sutherland_identity_rhs_one_sided(nu: NuTriple, q: &[f64]) -> f64 {
    sutherland_identity_rhs_with_pair(nu, q, nu.nu * (nu.nu - 1.0))
}

fn sutherland_identity_rhs_with_pair(nu: NuTriple, q: &[f64], pair: f64) -> f64 {
    let n = q.len();
    let nf = n as f64;
    let NuTriple { nu, nu1, nu2 } = nu;
    let mut acc = 0.0;
    for k in 0..n {
        for l in k + 1..n {
            acc += pair * (1.0 / (q[k] - q[l]).sin().powi(2) + 1.0 / (q[k] + q[l]).sin().powi(2));
        }
        acc += nu1 * (nu1 + 2.0 * nu2 - 1.0) / q[k].sin().powi(2);
        acc += 4.0 * nu2 * (nu2 - 1.0) / (2.0 * q[k]).sin().powi(2);
    }
    let p = nu1 + 2.0 * nu2;
    acc - nf * (p * p + 2.0 * nu * p * (nf - 1.0) + 2.0 / 3.0 * nu * nu * (nf - 1.0) * (2.0 * nf - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Compares finite differences of the product density with the closed form.
pub fn sutherland_identity_check(nu: NuTriple, q: &[f64], h: f64) -> IdentityCheck {
    let lhs = laplacian_fd(|x| product_density(nu, x), q, h) / product_density(nu, q);
    let rhs = sutherland_identity_rhs(nu, q);
    IdentityCheck {
        lhs,
        rhs,
        rel_err: rel_err(lhs, rhs),
    }
}

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// `ad_q X = [q, X]` for the section element.
pub fn ad(q: &AntiHerm, x: &AntiHerm) -> AntiHerm {
    q.bracket(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{inner_y, max_abs, radial_embed, sample_alcove};
    use std::f64::consts::{FRAC_PI_4, PI};

    fn schemes() -> Vec<Scheme> {
        let mut v = Vec::new();
        for n in 1..=3 {
            v.push(Scheme::case_i(n).unwrap());
            v.push(Scheme::case_ii(n).unwrap());
            v.push(Scheme::case_iii(n).unwrap());
        }
        v.push(Scheme::new(5, 1, 4, 2).unwrap());
        v.push(Scheme::new(6, 2, 5, 3).unwrap());
        v
    }

    #[test]
    fn m_basis_sizes_and_commutation() {
        assert_eq!(build_m_basis(&Scheme::case_i(2).unwrap()).len(), 2);
        assert_eq!(build_m_basis(&Scheme::case_iii(1).unwrap()).len(), 3);
        for s in schemes() {
            let mb = build_m_basis(&s);
            assert_eq!(mb.len(), s.dim_k());
            for (i, a) in mb.iter().enumerate() {
                for (j, b) in mb.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((inner_y(a, b) - expect).abs() < 1e-14);
                }
            }
            for pt in sample_alcove(s.n(), 5, 9, 0.01) {
                let q = radial_embed(&s, &pt).unwrap();
                for l in &mb {
                    assert!(max_abs(ad(&q, l).matrix()) <= 1e-13);
                }
            }
        }
    }

    #[test]
    fn kperp_sizes() {
        let s = Scheme::case_i(1).unwrap();
        let b = build_kperp_basis(&s);
        assert_eq!(b.len(), 3);
        let fams: Vec<_> = b.labels().map(|l| (l.family, l.root, l.flavor)).collect();
        assert_eq!(
            fams,
            vec![
                (Family::HatL, Root::Zero, None),
                (Family::V, Root::Long(0), Some(Flavor::I)),
                (Family::W, Root::Long(0), Some(Flavor::I)),
            ]
        );
        assert_eq!(build_kperp_basis(&Scheme::case_ii(1).unwrap()).len(), 8);
        for s in schemes() {
            let b = build_kperp_basis(&s);
            assert_eq!(b.len(), s.dim_g() - s.dim_k(), "{s}");
            let gram = b.gram();
            let dev = (gram - DMatrix::identity(b.len(), b.len())).abs().max();
            assert!(dev < 1e-12, "{s}: {dev}");
        }
    }

    #[test]
    fn kperp_is_orthogonal_to_k() {
        for s in schemes() {
            let b = build_kperp_basis(&s);
            for l in build_m_basis(&s) {
                let k = GPair::diagonal(&l);
                for v in b.vectors() {
                    assert!(inner_g(&k, v).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn ad_relations() {
        for s in schemes() {
            for pt in sample_alcove(s.n(), 3, 5, 0.01) {
                let q = radial_embed(&s, &pt).unwrap();
                for e in e_family(&s) {
                    let a = e.root.eval(pt.angles());
                    let twice = ad(&q, &ad(&q, &e.matrix));
                    let dev = max_abs(&(twice.matrix() + e.matrix.matrix().scale(a * a)));
                    assert!(dev <= 1e-12, "{s} {:?}", e.root);
                }
                let et = etilde_family(&s);
                let ft = ftilde_family(&s);
                for (e, f) in et.iter().zip(&ft) {
                    let qj = e.root.eval(pt.angles());
                    let d1 = max_abs(&(ad(&q, &e.matrix).matrix() - f.matrix.matrix().scale(qj)));
                    let d2 = max_abs(&(ad(&q, &f.matrix).matrix() + e.matrix.matrix().scale(qj)));
                    assert!(d1 <= 1e-13 && d2 <= 1e-13);
                }
                for f in fzero_family(&s) {
                    assert!(max_abs(ad(&q, &f.matrix).matrix()) <= 1e-13);
                }
            }
        }
    }

    #[test]
    fn inertia_examples() {
        let s = Scheme::case_i(1).unwrap();
        let b = build_kperp_basis(&s);
        let pt = RadialPoint::new(vec![PI / 6.0]).unwrap();
        let j = inertia_from_definition(&b, &pt).unwrap().matrix;
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5, 1.5]));
        assert!((j - expect).abs().max() < 1e-14);

        let s = Scheme::case_iii(1).unwrap();
        let b = build_kperp_basis(&s);
        let pt = RadialPoint::new(vec![0.7]).unwrap();
        let j = inertia_from_definition(&b, &pt).unwrap().matrix;
        for (i, l) in b.labels().enumerate() {
            let expect = match l.family {
                Family::VTilde => 1.0 + 0.7f64.sin(),
                Family::WTilde => 1.0 - 0.7f64.sin(),
                Family::ZTilde0 | Family::HatL => {
                    if l.family == Family::HatL {
                        2.0
                    } else {
                        1.0
                    }
                }
                _ => continue,
            };
            assert!((j[(i, i)] - expect).abs() < 1e-14, "{l}");
        }
    }

    #[test]
    fn closed_eigen_examples() {
        let l = BasisLabel {
            family: Family::V,
            root: Root::Diff(0, 1),
            flavor: Some(Flavor::R),
            c: None,
            d: None,
        };
        let q = [0.3, 0.7];
        assert!((closed_eigenvalue(&l, &q) - 2.0 * 0.2f64.sin().powi(2)).abs() < 1e-15);
        let w = BasisLabel { family: Family::W, ..l };
        assert!((closed_eigenvalue(&w, &q) - 2.0 * 0.2f64.cos().powi(2)).abs() < 1e-15);
        let z = BasisLabel {
            family: Family::ZTilde0,
            root: Root::Zero,
            ..l
        };
        assert_eq!(closed_eigenvalue(&z, &q), 1.0);
        assert_eq!(closed_eigenvalue(&z, &[1.2, 1.3]), 1.0);
    }

    #[test]
    fn eigen_product_matches_determinant() {
        for s in schemes() {
            let b = build_kperp_basis(&s);
            for pt in sample_alcove(s.n(), 3, 17, 0.05) {
                let j = inertia_from_definition(&b, &pt).unwrap().matrix;
                let det = j.determinant();
                let prod: f64 = inertia_closed_eigen(&b, &pt).unwrap().iter().product();
                assert!(((det - prod) / prod).abs() < 1e-10, "{s}");
            }
        }
    }

    #[test]
    fn density_examples() {
        let s = Scheme::case_i(1).unwrap();
        let v = density_sqrt(&s, &RadialPoint::new(vec![FRAC_PI_4]).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let s2 = Scheme::case_ii(1).unwrap();
        let q = 0.37f64;
        let v = density_sqrt(&s2, &RadialPoint::new(vec![q]).unwrap()).unwrap();
        assert!((v - q.sin() * (2.0 * q).sin().sqrt()).abs() < 1e-15);
        let wall = RadialPoint::closed(vec![0.0]).unwrap();
        assert!(matches!(density_sqrt(&s, &wall), Err(Error::Domain(_))));
    }

    #[test]
    fn density_fourth_power_tracks_determinant() {
        for s in schemes() {
            let b = build_kperp_basis(&s);
            let ratios: Vec<f64> = sample_alcove(s.n(), 10, 23, 0.05)
                .iter()
                .map(|pt| {
                    let det = inertia_from_definition(&b, pt).unwrap().matrix.determinant();
                    density_sqrt(&s, pt).unwrap().powi(4) / det
                })
                .collect();
            for r in &ratios {
                assert!(((r - ratios[0]) / ratios[0]).abs() < 1e-9, "{s}");
            }
        }
    }

    #[test]
    fn measure_factor_examples() {
        let s = Scheme::case_ii(1).unwrap();
        let v = measure_factor_closed(&s, &RadialPoint::new(vec![FRAC_PI_4]).unwrap()).unwrap();
        assert!((v + 1.5).abs() < 1e-14);

        // case I: only the sin^2(2q) term, coefficient -1/2
        let s = Scheme::case_i(2).unwrap();
        let pt = RadialPoint::new(vec![0.4, 1.0]).unwrap();
        let closed = measure_factor_closed(&s, &pt).unwrap();
        let expect = -0.5 * (1.0 / 0.8f64.sin().powi(2) + 1.0 / 2.0f64.sin().powi(2)) - 2.0 * 15.0 / 6.0;
        assert!((closed - expect).abs() < 1e-13);
        let fd = measure_factor_fd(&s, &pt, FD_STEP).unwrap();
        assert!(rel_err(fd, closed) <= 1e-5);
    }

    #[test]
    fn measure_factor_fd_ratio_is_scale_free() {
        let s = Scheme::case_iii(2).unwrap();
        let pt = RadialPoint::new(vec![0.5, 1.1]).unwrap();
        let nu = NuTriple::for_scheme(&s);
        let a = half_laplacian_ratio_fd(|q| product_density(nu, q), pt.angles(), 1e-3);
        let b = half_laplacian_ratio_fd(|q| 4.0 * product_density(nu, q), pt.angles(), 1e-3);
        assert!(rel_err(a, b) < 1e-12);
    }

    #[test]
    fn measure_factor_fd_converges_quadratically() {
        let s = Scheme::case_ii(2).unwrap();
        let pt = RadialPoint::new(vec![0.45, 0.9]).unwrap();
        let closed = measure_factor_closed(&s, &pt).unwrap();
        let e1 = (measure_factor_fd(&s, &pt, 2e-2).unwrap() - closed).abs();
        let e2 = (measure_factor_fd(&s, &pt, 1e-2).unwrap() - closed).abs();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn fd_refuses_points_near_walls() {
        let s = Scheme::case_i(2).unwrap();
        let pt = RadialPoint::new(vec![0.02, 1.0]).unwrap();
        assert!(matches!(measure_factor_fd(&s, &pt, FD_STEP), Err(Error::Domain(_))));
    }

    #[test]
    fn sutherland_identity_examples() {
        let c = sutherland_identity_check(NuTriple::new(1.0, 0.0, 0.5), &[0.6], FD_STEP);
        assert!(c.rel_err <= 1e-5);
        let c = sutherland_identity_check(NuTriple::new(0.0, 0.0, 0.0), &[0.3, 0.9], FD_STEP);
        assert_eq!(c.rhs, 0.0);
        assert!(c.lhs.abs() < 1e-12);
    }

    #[test]
    fn pair_coefficient_is_two_sided() {
        let q = [0.3, 0.9];
        let nu = NuTriple::new(2.0, 0.0, 0.5);
        let c = sutherland_identity_check(nu, &q, FD_STEP);
        assert!(c.rel_err <= 1e-5);
        // one-sided coefficient misses 2 * (1/sin^2(0.6) + 1/sin^2(1.2))
        let gap = c.lhs - sutherland_identity_rhs_one_sided(nu, &q);
        let expect = 2.0 * (1.0 / 0.6f64.sin().powi(2) + 1.0 / 1.2f64.sin().powi(2));
        assert!(rel_err(gap, expect) < 1e-5);
        let one = NuTriple::new(1.0, 1.0, 1.5);
        assert_eq!(sutherland_identity_rhs(one, &q), sutherland_identity_rhs_one_sided(one, &q));
    }
}
