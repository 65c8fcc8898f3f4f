//! Matrix algebra for u(N) under a commuting pair of involutions.
//!
//! A [`Scheme`] `(m, n, r, s)` with `m >= r >= s >= n` and `m + n = r + s = N`
//! fixes `sigma_L = theta_{r,s}` and `sigma_R = theta_{m,n}`, where
//! `theta_{p,q}` is conjugation by `diag(1_p, -1_q)`. Every `N x N` matrix is
//! cut into a 4x4 block pattern of sizes `(n, r-n, s-n, n)`; the radial
//! section lives in the (1,4)/(4,1) corner blocks.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Tolerance used to accept a matrix as anti-Hermitian or block-diagonal.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// The imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseTag {
    I,
    II,
    III,
    Generic,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseTag::I => "I",
            CaseTag::II => "II",
            CaseTag::III => "III",
            CaseTag::Generic => "generic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scheme {
    m: usize,
    n: usize,
    r: usize,
    s: usize,
}

impl Scheme {
    pub fn new(m: usize, n: usize, r: usize, s: usize) -> Result<Self> {
        if !(m >= r && r >= s && s >= n) {
            return Err(Error::InvalidScheme(format!(
                "need m >= r >= s >= n, got (m,n,r,s) = ({m},{n},{r},{s})"
            )));
        }
        if m + n != r + s {
            return Err(Error::InvalidScheme(format!(
                "need m + n = r + s, got {} != {}",
                m + n,
                r + s
            )));
        }
        if n == 0 {
            return Err(Error::InvalidScheme("n must be positive".into()));
        }
        Ok(Scheme { m, n, r, s })
    }

    /// `m = r = s = n`, `N = 2n`.
    pub fn case_i(n: usize) -> Result<Self> {
        Scheme::new(n, n, n, n)
    }

    /// `m = r = n + 1`, `s = n`, `N = 2n + 1`.
    pub fn case_ii(n: usize) -> Result<Self> {
        Scheme::new(n + 1, n, n + 1, n)
    }

    /// `m = n + 2`, `r = s = n + 1`, `N = 2n + 2`.
    pub fn case_iii(n: usize) -> Result<Self> {
        Scheme::new(n + 2, n, n + 1, n + 1)
    }

    pub fn for_case(case: CaseTag, n: usize) -> Result<Self> {
        match case {
            CaseTag::I => Scheme::case_i(n),
            CaseTag::II => Scheme::case_ii(n),
            CaseTag::III => Scheme::case_iii(n),
            CaseTag::Generic => Err(Error::InvalidScheme(
                "a generic scheme needs explicit (m, n, r, s)".into(),
            )),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn big_n(&self) -> usize {
        self.m + self.n
    }

    pub fn case(&self) -> CaseTag {
        let (m, n, r, s) = (self.m, self.n, self.r, self.s);
        if (m, r, s) == (n, n, n) {
            CaseTag::I
        } else if (m, r, s) == (n + 1, n + 1, n) {
            CaseTag::II
        } else if (m, r, s) == (n + 2, n + 1, n + 1) {
            CaseTag::III
        } else {
            CaseTag::Generic
        }
    }

    pub fn blocks(&self) -> BlockView {
        BlockView::new([self.n, self.r - self.n, self.s - self.n, self.n])
    }

    /// Real dimension of `Lie(G) = u(r) + u(s) + u(m) + u(n)`.
    pub fn dim_g(&self) -> usize {
        self.r * self.r + self.s * self.s + self.m * self.m + self.n * self.n
    }

    /// Real dimension of the centralizer `K = M_diag`.
    pub fn dim_k(&self) -> usize {
        let b = self.r - self.n;
        let c = self.s - self.n;
        self.n + b * b + c * c
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(m,n,r,s)=({},{},{},{}) case {}",
            self.m,
            self.n,
            self.r,
            self.s,
            self.case()
        )
    }
}

/// The `(n, r-n, s-n, n)` block partition of an `N x N` matrix. Blocks may be
/// empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockView {
    sizes: [usize; 4],
    offsets: [usize; 4],
}

impl BlockView {
    pub fn new(sizes: [usize; 4]) -> Self {
        let mut offsets = [0; 4];
        for i in 1..4 {
            offsets[i] = offsets[i - 1] + sizes[i - 1];
        }
        BlockView { sizes, offsets }
    }

    pub fn sizes(&self) -> [usize; 4] {
        self.sizes
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Global row/column index of entry `local` inside block `b` (0-based).
    pub fn index(&self, b: usize, local: usize) -> usize {
        debug_assert!(local < self.sizes[b]);
        self.offsets[b] + local
    }

    pub fn range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b] + self.sizes[b]
    }

    pub fn block(&self, x: &CMat, bi: usize, bj: usize) -> CMat {
        x.view(
            (self.offsets[bi], self.offsets[bj]),
            (self.sizes[bi], self.sizes[bj]),
        )
        .into_owned()
    }
}

/// An element of u(N): `X^dagger + X = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiHerm(CMat);

impl AntiHerm {
    /// Validates anti-Hermiticity to [`STRUCTURE_TOL`] and projects onto the
    /// exact anti-Hermitian part.
    pub fn new(x: CMat) -> Result<Self> {
        if !x.is_square() {
            return Err(Error::Shape(format!(
                "expected a square matrix, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let dev = max_abs(&(&x + x.adjoint()));
        if dev > STRUCTURE_TOL {
            return Err(Error::NotAntiHermitian(dev));
        }
        Ok(AntiHerm::project(x))
    }

    /// `(X - X^dagger) / 2`, without validation.
    pub(crate) fn project(x: CMat) -> Self {
        let adj = x.adjoint();
        AntiHerm((x - adj).scale(0.5))
    }

    pub fn zeros(dim: usize) -> Self {
        AntiHerm(CMat::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn scale(&self, t: f64) -> AntiHerm {
        AntiHerm(self.0.scale(t))
    }

    pub fn add(&self, other: &AntiHerm) -> AntiHerm {
        AntiHerm(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &AntiHerm) -> AntiHerm {
        AntiHerm(&self.0 - &other.0)
    }

    /// `[X, Z] = XZ - ZX`, again in u(N).
    pub fn bracket(&self, other: &AntiHerm) -> AntiHerm {
        AntiHerm::project(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// `g^{-1} X g` for unitary `g`.
    pub fn conjugate_by(&self, g: &CMat) -> AntiHerm {
        AntiHerm::project(g.adjoint() * &self.0 * g)
    }
}

pub fn max_abs(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `diag(1_p, -1_q)`.
pub fn involution_matrix(big_n: usize, p: usize, q: usize) -> Result<CMat> {
    if p + q != big_n {
        return Err(Error::Shape(format!("p + q = {} but N = {big_n}", p + q)));
    }
    if p < q {
        return Err(Error::Shape(format!("need p >= q, got ({p}, {q})")));
    }
    Ok(CMat::from_fn(big_n, big_n, |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if i < p {
            C64::new(1.0, 0.0)
        } else {
            C64::new(-1.0, 0.0)
        }
    }))
}

/// `I X I^{-1}` for a diagonal sign matrix `I`.
pub fn apply_involution(inv: &CMat, x: &AntiHerm) -> Result<AntiHerm> {
    if inv.shape() != x.0.shape() {
        return Err(Error::Shape("involution and matrix differ in size".into()));
    }
    // I^{-1} = I for a sign matrix
    Ok(AntiHerm::project(inv * &x.0 * inv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Grade {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl Grade {
    pub const ALL: [Grade; 4] = [
        Grade::PlusPlus,
        Grade::PlusMinus,
        Grade::MinusPlus,
        Grade::MinusMinus,
    ];

    fn signs(self) -> (f64, f64) {
        match self {
            Grade::PlusPlus => (1.0, 1.0),
            Grade::PlusMinus => (1.0, -1.0),
            Grade::MinusPlus => (-1.0, 1.0),
            Grade::MinusMinus => (-1.0, -1.0),
        }
    }
}

/// `sigma_L = theta_{r,s}`.
pub fn sigma_l(s: &Scheme) -> CMat {
    involution_matrix(s.big_n(), s.r, s.s).expect("scheme invariants")
}

/// `sigma_R = theta_{m,n}`.
pub fn sigma_r(s: &Scheme) -> CMat {
    involution_matrix(s.big_n(), s.m, s.n).expect("scheme invariants")
}

/// Projection onto the `Z2 x Z2` graded piece `u(N)^{ab}`, where the first sign
/// is the `sigma_L` eigenvalue and the second the `sigma_R` eigenvalue.
pub fn grade_project(s: &Scheme, x: &AntiHerm, grade: Grade) -> Result<AntiHerm> {
    if x.dim() != s.big_n() {
        return Err(Error::Shape(format!(
            "matrix is {0}x{0}, scheme needs N = {1}",
            x.dim(),
            s.big_n()
        )));
    }
    let (a, b) = grade.signs();
    let il = sigma_l(s);
    let ir = sigma_r(s);
    let xl = &il * &x.0 * &il;
    // P_L^a P_R^b X = (X + a sL X + b sR X + ab sL sR X) / 4
    let xr = &ir * &x.0 * &ir;
    let xlr = &il * &xr * &il;
    let out = (&x.0 + xl.scale(a) + xr.scale(b) + xlr.scale(a * b)).scale(0.25);
    Ok(AntiHerm::project(out))
}

/// Real dimension of a graded piece, counted from the block pattern.
pub fn grade_dimension(s: &Scheme, grade: Grade) -> usize {
    let (n, b, c) = (s.n, s.r - s.n, s.s - s.n);
    match grade {
        // u(r) + u(s - n) + u(n)
        Grade::PlusPlus => s.r * s.r + c * c + n * n,
        Grade::PlusMinus => 2 * n * c,
        Grade::MinusPlus => 2 * s.r * c,
        Grade::MinusMinus => 2 * n * n + 2 * b * n,
    }
}

/// `B_Y(X, Z) = -tr(XZ)`.
pub fn inner_y(x: &AntiHerm, z: &AntiHerm) -> f64 {
    inner_y_raw(&x.0, &z.0)
}

pub(crate) fn inner_y_raw(x: &CMat, z: &CMat) -> f64 {
    let n = x.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (x[(i, j)] * z[(j, i)]).re;
        }
    }
    -acc
}

/// An element `(xi_L, xi_R)` of `Lie(G) = u(N)^{sigma_L,+} + u(N)^{sigma_R,+}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GPair {
    pub xi_l: AntiHerm,
    pub xi_r: AntiHerm,
}

fn off_block_contamination(x: &CMat, split: usize) -> f64 {
    let n = x.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if (i < split) != (j < split) {
                worst = worst.max(x[(i, j)].norm());
            }
        }
    }
    worst
}

impl GPair {
    pub fn new(s: &Scheme, xi_l: AntiHerm, xi_r: AntiHerm) -> Result<Self> {
        let big_n = s.big_n();
        if xi_l.dim() != big_n || xi_r.dim() != big_n {
            return Err(Error::Shape(format!("pair components must be {big_n}x{big_n}")));
        }
        let dl = off_block_contamination(&xi_l.0, s.r);
        if dl > STRUCTURE_TOL {
            return Err(Error::InvalidPair(format!(
                "xi_L is not block-diagonal for the (r,s) split (off-block {dl:e})"
            )));
        }
        let dr = off_block_contamination(&xi_r.0, s.m);
        if dr > STRUCTURE_TOL {
            return Err(Error::InvalidPair(format!(
                "xi_R is not block-diagonal for the (m,n) split (off-block {dr:e})"
            )));
        }
        Ok(GPair { xi_l, xi_r })
    }

    /// Pair built without validating the block structure.
    pub(crate) fn raw(xi_l: AntiHerm, xi_r: AntiHerm) -> Self {
        GPair { xi_l, xi_r }
    }

    /// Reassembles a pair from `X_L1 in u(r)`, `X_L2 in u(s)`, `X_R1 in u(m)`,
    /// `X_R2 in u(n)`.
    pub fn from_factors(s: &Scheme, l1: &CMat, l2: &CMat, r1: &CMat, r2: &CMat) -> Result<Self> {
        let xi_l = block_diag2(l1, l2);
        let xi_r = block_diag2(r1, r2);
        if xi_l.nrows() != s.big_n() || xi_r.nrows() != s.big_n() || l1.nrows() != s.r || r1.nrows() != s.m {
            return Err(Error::Shape("factor sizes do not match (r, s, m, n)".into()));
        }
        GPair::new(s, AntiHerm::new(xi_l)?, AntiHerm::new(xi_r)?)
    }

    pub fn add(&self, other: &GPair) -> GPair {
        GPair::raw(self.xi_l.add(&other.xi_l), self.xi_r.add(&other.xi_r))
    }

    pub fn scale(&self, t: f64) -> GPair {
        GPair::raw(self.xi_l.scale(t), self.xi_r.scale(t))
    }

    /// The diagonal embedding `(X, X)`.
    pub fn diagonal(x: &AntiHerm) -> GPair {
        GPair::raw(x.clone(), x.clone())
    }
}

fn block_diag2(a: &CMat, b: &CMat) -> CMat {
    let (p, q) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros(p + q, p + q);
    out.view_mut((0, 0), (p, p)).copy_from(a);
    out.view_mut((p, p), (q, q)).copy_from(b);
    out
}

/// `B_G = B_Y(xi_L, zeta_L) + B_Y(xi_R, zeta_R)`.
pub fn inner_g(a: &GPair, b: &GPair) -> f64 {
    inner_y(&a.xi_l, &b.xi_l) + inner_y(&a.xi_r, &b.xi_r)
}

/// The four factors `(X_L1, X_L2, X_R1, X_R2)` of a pair element.
#[derive(Debug, Clone, PartialEq)]
pub struct Factors {
    pub l1: CMat,
    pub l2: CMat,
    pub r1: CMat,
    pub r2: CMat,
}

pub fn factor_split(s: &Scheme, p: &GPair) -> Result<Factors> {
    let checked = GPair::new(s, p.xi_l.clone(), p.xi_r.clone())?;
    let (big_n, r, m) = (s.big_n(), s.r, s.m);
    let l = checked.xi_l.matrix();
    let rr = checked.xi_r.matrix();
    Ok(Factors {
        l1: l.view((0, 0), (r, r)).into_owned(),
        l2: l.view((r, r), (big_n - r, big_n - r)).into_owned(),
        r1: rr.view((0, 0), (m, m)).into_owned(),
        r2: rr.view((m, m), (big_n - m, big_n - m)).into_owned(),
    })
}

/// `n` angles on the radial section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPoint {
    q: Vec<f64>,
    regular: bool,
}

impl RadialPoint {
    /// A point of the open alcove `0 < q_1 < ... < q_n < pi/2`.
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::Domain("empty angle vector".into()));
        }
        if !Self::strictly_inside(&q) {
            return Err(Error::Domain(format!("{q:?} is not in the open alcove")));
        }
        Ok(RadialPoint { q, regular: true })
    }

    /// A point of the closed alcove `0 <= q_1 <= ... <= q_n <= pi/2`.
    pub fn closed(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::Domain("empty angle vector".into()));
        }
        let ok = q[0] >= 0.0
            && q[q.len() - 1] <= FRAC_PI_2
            && q.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            return Err(Error::Domain(format!("{q:?} is not in the closed alcove")));
        }
        let regular = Self::strictly_inside(&q);
        Ok(RadialPoint { q, regular })
    }

    fn strictly_inside(q: &[f64]) -> bool {
        q[0] > 0.0 && q[q.len() - 1] < FRAC_PI_2 && q.windows(2).all(|w| w[0] < w[1])
    }

    pub fn angles(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn is_regular(&self) -> bool {
        self.regular
    }

    /// Distance to the nearest alcove wall.
    pub fn wall_distance(&self) -> f64 {
        let q = &self.q;
        let mut d = q[0].min(FRAC_PI_2 - q[q.len() - 1]);
        for w in q.windows(2) {
            d = d.min(w[1] - w[0]);
        }
        d
    }

    pub(crate) fn require_regular(&self) -> Result<()> {
        if self.regular {
            Ok(())
        } else {
            Err(Error::Domain(format!("{:?} lies on an alcove wall", self.q)))
        }
    }
}

/// Seeded uniform samples from the alcove shrunk by `margin` from every wall.
pub fn sample_alcove(n: usize, count: usize, seed: u64, margin: f64) -> Vec<RadialPoint> {
    assert!(n >= 1);
    let hi = FRAC_PI_2 - margin;
    assert!((n as f64 + 1.0) * margin < FRAC_PI_2, "margin too large for n = {n}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(margin..hi)).collect();
        q.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if q.windows(2).all(|w| w[1] - w[0] >= margin) {
            out.push(RadialPoint { q, regular: true });
        }
    }
    out
}

/// The section element with `q` in the (1,4) corner and `-q` in the (4,1)
/// corner.
pub fn radial_embed(s: &Scheme, pt: &RadialPoint) -> Result<AntiHerm> {
    check_len(s, pt)?;
    let bv = s.blocks();
    let mut x = CMat::zeros(s.big_n(), s.big_n());
    for (k, &qk) in pt.q.iter().enumerate() {
        let (i, j) = (bv.index(0, k), bv.index(3, k));
        x[(i, j)] = C64::new(qk, 0.0);
        x[(j, i)] = C64::new(-qk, 0.0);
    }
    Ok(AntiHerm(x))
}

/// Closed form of `exp(radial_embed(q))`.
pub fn radial_exp(s: &Scheme, pt: &RadialPoint) -> Result<CMat> {
    check_len(s, pt)?;
    let bv = s.blocks();
    let mut g = CMat::identity(s.big_n(), s.big_n());
    for (k, &qk) in pt.q.iter().enumerate() {
        let (i, j) = (bv.index(0, k), bv.index(3, k));
        let (sn, cs) = qk.sin_cos();
        g[(i, i)] = C64::new(cs, 0.0);
        g[(j, j)] = C64::new(cs, 0.0);
        g[(i, j)] = C64::new(sn, 0.0);
        g[(j, i)] = C64::new(-sn, 0.0);
    }
    Ok(g)
}

fn check_len(s: &Scheme, pt: &RadialPoint) -> Result<()> {
    if pt.len() != s.n {
        return Err(Error::Shape(format!(
            "point has {} angles, scheme needs n = {}",
            pt.len(),
            s.n
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::expm;
    use std::f64::consts::PI;

    fn random_u(n: usize, rng: &mut ChaCha8Rng) -> AntiHerm {
        let a = CMat::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        AntiHerm::project(a)
    }

    #[test]
    fn scheme_validation() {
        assert!(Scheme::new(3, 1, 2, 2).is_ok());
        assert!(Scheme::new(2, 1, 1, 2).is_err());
        assert!(Scheme::new(3, 1, 3, 2).is_err());
        assert_eq!(Scheme::case_i(2).unwrap().case(), CaseTag::I);
        assert_eq!(Scheme::case_ii(2).unwrap().case(), CaseTag::II);
        assert_eq!(Scheme::case_iii(2).unwrap().case(), CaseTag::III);
        assert_eq!(Scheme::new(4, 1, 3, 2).unwrap().case(), CaseTag::Generic);
    }

    #[test]
    fn involution_examples() {
        let i11 = involution_matrix(2, 1, 1).unwrap();
        assert_eq!(i11[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(i11[(1, 1)], C64::new(-1.0, 0.0));
        assert_eq!(involution_matrix(3, 3, 0).unwrap(), CMat::identity(3, 3));
        assert!(involution_matrix(3, 1, 1).is_err());
        assert!(involution_matrix(3, 1, 2).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let i21 = involution_matrix(3, 2, 1).unwrap();
        for _ in 0..10 {
            let x = random_u(3, &mut rng);
            let twice = apply_involution(&i21, &apply_involution(&i21, &x).unwrap()).unwrap();
            assert!(max_abs(&(twice.matrix() - x.matrix())) < 1e-15);
        }
    }

    #[test]
    fn anti_herm_rejects_hermitian_part() {
        let x = CMat::from_element(2, 2, C64::new(1.0, 0.0));
        assert!(matches!(AntiHerm::new(x), Err(Error::NotAntiHermitian(_))));
    }

    #[test]
    fn gradation_is_orthogonal_and_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in [
            Scheme::case_i(2).unwrap(),
            Scheme::case_ii(2).unwrap(),
            Scheme::case_iii(1).unwrap(),
            Scheme::new(5, 1, 4, 2).unwrap(),
        ] {
            let x = random_u(s.big_n(), &mut rng);
            let parts: Vec<_> = Grade::ALL
                .iter()
                .map(|&g| grade_project(&s, &x, g).unwrap())
                .collect();
            let sum = parts.iter().fold(AntiHerm::zeros(s.big_n()), |a, p| a.add(p));
            assert!(max_abs(&(sum.matrix() - x.matrix())) < 1e-14);
            for a in 0..4 {
                for b in 0..4 {
                    if a != b {
                        assert!(inner_y(&parts[a], &parts[b]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn graded_dimensions() {
        // count real parameters by projecting a basis of u(N) and taking rank
        for s in [
            Scheme::case_i(1).unwrap(),
            Scheme::case_ii(2).unwrap(),
            Scheme::case_iii(2).unwrap(),
            Scheme::new(5, 1, 4, 2).unwrap(),
        ] {
            let big_n = s.big_n();
            let mut basis = Vec::new();
            for i in 0..big_n {
                for j in 0..big_n {
                    let mut a = CMat::zeros(big_n, big_n);
                    a[(i, j)] = C64::new(1.0, 0.0);
                    basis.push(AntiHerm::project(a.clone()));
                    a[(i, j)] = C64::new(0.0, 1.0);
                    basis.push(AntiHerm::project(a));
                }
            }
            for g in Grade::ALL {
                let rows: Vec<Vec<f64>> = basis
                    .iter()
                    .map(|b| {
                        let p = grade_project(&s, b, g).unwrap();
                        p.matrix().iter().flat_map(|z| [z.re, z.im]).collect()
                    })
                    .collect();
                let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
                let rank = m.rank(1e-10);
                assert_eq!(rank, grade_dimension(&s, g), "{s} {g:?}");
            }
        }
        let s = Scheme::case_i(1).unwrap();
        assert_eq!(grade_dimension(&s, Grade::MinusMinus), 2);
        let s = Scheme::new(5, 1, 4, 2).unwrap();
        assert_eq!(grade_dimension(&s, Grade::PlusMinus), 2 * s.n() * (s.s() - s.n()));
    }

    #[test]
    fn idempotent_on_plus_plus() {
        let s = Scheme::case_iii(1).unwrap();
        let bv = s.blocks();
        let mut a = CMat::zeros(4, 4);
        a[(bv.index(0, 0), bv.index(1, 0))] = C64::new(0.3, 0.2);
        a[(bv.index(2, 0), bv.index(2, 0))] = C64::new(0.0, 1.5);
        let x = AntiHerm::project(a);
        let pp = grade_project(&s, &x, Grade::PlusPlus).unwrap();
        assert!(max_abs(&(pp.matrix() - x.matrix())) < 1e-15);
        for g in [Grade::PlusMinus, Grade::MinusPlus, Grade::MinusMinus] {
            assert!(max_abs(grade_project(&s, &x, g).unwrap().matrix()) < 1e-15);
        }
    }

    #[test]
    fn inner_product_examples() {
        let s = Scheme::case_iii(2).unwrap();
        let pt = RadialPoint::new(vec![0.3, 0.8]).unwrap();
        let q = radial_embed(&s, &pt).unwrap();
        let expect = 2.0 * (0.3f64.powi(2) + 0.8f64.powi(2));
        assert!((inner_y(&q, &q) - expect).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_u(4, &mut rng);
        assert!(inner_y(&x, &x) > 0.0);
    }

    #[test]
    fn involutions_are_isometries_and_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = Scheme::new(5, 1, 4, 2).unwrap();
        let (il, ir) = (sigma_l(&s), sigma_r(&s));
        assert!(max_abs(&(&il * &ir - &ir * &il)) == 0.0);
        for _ in 0..10 {
            let x = random_u(6, &mut rng);
            let z = random_u(6, &mut rng);
            let tx = apply_involution(&il, &x).unwrap();
            let tz = apply_involution(&il, &z).unwrap();
            assert!((inner_y(&tx, &tz) - inner_y(&x, &z)).abs() < 1e-13);
        }
    }

    #[test]
    fn radial_exp_examples() {
        let s = Scheme::case_i(1).unwrap();
        let g = radial_exp(&s, &RadialPoint::new(vec![PI / 6.0]).unwrap()).unwrap();
        let (sn, cs) = (PI / 6.0).sin_cos();
        let expect = CMat::from_row_slice(
            2,
            2,
            &[C64::new(cs, 0.0), C64::new(sn, 0.0), C64::new(-sn, 0.0), C64::new(cs, 0.0)],
        );
        assert!(max_abs(&(g - expect)) < 1e-16);

        let s = Scheme::case_iii(2).unwrap();
        let zero = RadialPoint::closed(vec![0.0, 0.0]).unwrap();
        assert!(!zero.is_regular());
        assert_eq!(radial_exp(&s, &zero).unwrap(), CMat::identity(6, 6));

        let pt = RadialPoint::new(vec![0.4, 1.1]).unwrap();
        let closed = radial_exp(&s, &pt).unwrap();
        let generic = expm(radial_embed(&s, &pt).unwrap().matrix());
        assert!(max_abs(&(&closed - generic)) <= 1e-12);
        let unit = closed.adjoint() * &closed;
        assert!(max_abs(&(unit - CMat::identity(6, 6))) <= 1e-12);
    }

    #[test]
    fn factor_split_examples() {
        let s = Scheme::case_i(2).unwrap();
        let id = AntiHerm::new(CMat::identity(4, 4).map(|z| z * I)).unwrap();
        let p = GPair::new(&s, id.clone(), id).unwrap();
        let f = factor_split(&s, &p).unwrap();
        let i2 = CMat::identity(2, 2).map(|z| z * I);
        for b in [&f.l1, &f.l2, &f.r1, &f.r2] {
            assert_eq!(*b, i2);
        }
        let back = GPair::from_factors(&s, &f.l1, &f.l2, &f.r1, &f.r2).unwrap();
        assert_eq!(back, p);

        // case III, n = 1: xi_R = i diag(d, w, w~, d)
        let s = Scheme::case_iii(1).unwrap();
        let (d, w, wt) = (0.7, -0.2, 1.3);
        let diag = |v: &[f64]| {
            CMat::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(0.0, x))))
        };
        let xr = AntiHerm::new(diag(&[d, w, wt, d])).unwrap();
        let p = GPair::new(&s, xr.clone(), xr).unwrap();
        let f = factor_split(&s, &p).unwrap();
        assert_eq!(f.r1, diag(&[d, w, wt]));
        assert_eq!(f.r2, diag(&[d]));
        assert_eq!(f.l1, diag(&[d, w]));
        assert_eq!(f.l2, diag(&[wt, d]));

        let mut bad = CMat::zeros(4, 4);
        bad[(0, 3)] = C64::new(1.0, 0.0);
        bad[(3, 0)] = C64::new(-1.0, 0.0);
        let bad = AntiHerm::new(bad).unwrap();
        assert!(matches!(
            GPair::new(&s, bad.clone(), bad),
            Err(Error::InvalidPair(_))
        ));
    }

    #[test]
    fn alcove_sampling_respects_margin() {
        let pts = sample_alcove(3, 50, 42, 0.05);
        assert_eq!(pts.len(), 50);
        for p in &pts {
            assert!(p.is_regular());
            assert!(p.wall_distance() >= 0.05);
        }
        assert_eq!(pts, sample_alcove(3, 50, 42, 0.05));
    }
}
