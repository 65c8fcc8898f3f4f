//! Representations of `G` of KKS type, their `K`-invariants, the spin term of
//! the reduced Laplacian and the resulting `BC_n` Sutherland couplings.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{rho_prime_u, FockOperator, FockSpace, OccupationState, RepLabel};
use crate::lie::{factor_split, sample_alcove, CaseTag, GPair, RadialPoint, Scheme, C64};
use crate::polar::{build_kperp_basis, build_m_basis, inertia_from_definition, measure_factor_closed, rel_err, KPerpBasis};

/// Relative singular-value threshold for kernel computations.
pub const KERNEL_TOL: f64 = 1e-9;
/// Distance kept from the alcove walls when sampling for the reduction check.
pub const SAMPLE_MARGIN: f64 = 0.05;
/// Largest grid the enumerator accepts.
pub const CELL_CAP: usize = 1_000_000;

/// Representation data before any admissibility analysis: the symmetric power
/// `a1` on the big factor and the four determinant twists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RawParams {
    pub a1: u64,
    pub kl1: i64,
    pub kl2: i64,
    pub kr1: i64,
    pub kr2: i64,
}

impl RawParams {
    pub fn k_sum(&self) -> i64 {
        self.kl1 + self.kl2 + self.kr1 + self.kr2
    }
}

impl fmt::Display for RawParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "a1={} kl1={} kl2={} kr1={} kr2={}",
            self.a1, self.kl1, self.kl2, self.kr1, self.kr2
        )
    }
}

/// Free parameters of an admissible representation in each case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum KksParams {
    I { gamma: u64, kl1: i64, kl2: i64, kr1: i64 },
    II { gamma: u64, gamma_tilde: u64, kr1: i64, kr2: i64 },
    III { gamma: u64, gamma_tilde: u64, gamma_hat: u64, k: i64 },
}

/// `x = q + d r` with `0 <= q < d`.
pub fn euclid(x: i64, d: i64) -> (i64, i64) {
    (x.rem_euclid(d), x.div_euclid(d))
}

impl KksParams {
    pub fn case(&self) -> CaseTag {
        match self {
            KksParams::I { .. } => CaseTag::I,
            KksParams::II { .. } => CaseTag::II,
            KksParams::III { .. } => CaseTag::III,
        }
    }

    pub fn gamma(&self) -> u64 {
        match *self {
            KksParams::I { gamma, .. } | KksParams::II { gamma, .. } | KksParams::III { gamma, .. } => gamma,
        }
    }

    /// Representation data realizing these parameters on the scheme of size `n`.
    pub fn to_raw(&self, n: usize) -> RawParams {
        let ni = n as i64;
        match *self {
            KksParams::I { gamma, kl1, kl2, kr1 } => RawParams {
                a1: gamma * n as u64,
                kl1,
                kl2,
                kr1,
                kr2: -kl1 - kl2 - kr1,
            },
            KksParams::II { gamma, gamma_tilde, kr1, kr2 } => {
                let d = gamma_tilde as i64 - gamma as i64;
                let (_, r) = euclid(d, ni + 1);
                RawParams {
                    a1: gamma * n as u64 + gamma_tilde,
                    kl1: r - d - kr1,
                    kl2: d - kr2,
                    kr1,
                    kr2,
                }
            }
            KksParams::III { gamma, gamma_tilde, gamma_hat, k } => {
                let a1 = gamma * n as u64 + gamma_tilde + gamma_hat;
                let (_, r) = euclid(a1 as i64, ni + 2);
                let (g, gt, gh) = (gamma as i64, gamma_tilde as i64, gamma_hat as i64);
                RawParams {
                    a1,
                    kl1: k,
                    kl2: gt - gh + k,
                    kr1: r - gt - k,
                    kr2: gh - g - k,
                }
            }
        }
    }

    /// The `K`-invariant occupation state predicted for these parameters.
    pub fn invariant_state(&self, n: usize) -> OccupationState {
        let mut occ = vec![self.gamma() as u32; n];
        match *self {
            KksParams::I { .. } => {}
            KksParams::II { gamma_tilde, .. } => occ.push(gamma_tilde as u32),
            KksParams::III { gamma_tilde, gamma_hat, .. } => {
                occ.push(gamma_tilde as u32);
                occ.push(gamma_hat as u32);
            }
        }
        OccupationState::new(occ)
    }
}

impl fmt::Display for KksParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KksParams::I { gamma, kl1, kl2, kr1 } => write!(f, "I(gamma={gamma}, kl1={kl1}, kl2={kl2}, kr1={kr1})"),
            KksParams::II { gamma, gamma_tilde, kr1, kr2 } => {
                write!(f, "II(gamma={gamma}, gamma~={gamma_tilde}, kr1={kr1}, kr2={kr2})")
            }
            KksParams::III { gamma, gamma_tilde, gamma_hat, k } => {
                write!(f, "III(gamma={gamma}, gamma~={gamma_tilde}, gamma^={gamma_hat}, k={k})")
            }
        }
    }
}

fn require_case(s: &Scheme, case: CaseTag) -> Result<()> {
    if s.case() != case {
        return Err(Error::CaseMismatch(format!("scheme {s} is not of case {case}")));
    }
    Ok(())
}

fn kks_case(s: &Scheme) -> Result<CaseTag> {
    match s.case() {
        CaseTag::Generic => Err(Error::CaseMismatch(format!("scheme {s} carries no KKS ansatz"))),
        c => Ok(c),
    }
}

/// Number of oscillator modes of the big factor.
pub fn big_modes(s: &Scheme) -> Result<usize> {
    Ok(match kks_case(s)? {
        CaseTag::I => s.n(),
        CaseTag::II => s.n() + 1,
        _ => s.n() + 2,
    })
}

/// The representation `rho` of `G` on the level-`a1` Fock space.
#[derive(Debug, Clone)]
pub struct KksRep {
    scheme: Scheme,
    raw: RawParams,
    label: RepLabel,
    space: Arc<FockSpace>,
}

impl KksRep {
    pub fn new(s: &Scheme, raw: RawParams) -> Result<Self> {
        let space = Arc::new(FockSpace::new(big_modes(s)?, raw.a1)?);
        Self::with_space(s, raw, space)
    }

    pub fn with_space(s: &Scheme, raw: RawParams, space: Arc<FockSpace>) -> Result<Self> {
        let modes = big_modes(s)?;
        if space.modes() != modes || space.level() != raw.a1 {
            return Err(Error::Shape("Fock space does not match the representation".into()));
        }
        let k_big = if s.case() == CaseTag::III { raw.kr1 } else { raw.kl1 };
        Ok(KksRep {
            scheme: *s,
            raw,
            label: RepLabel::new(modes, k_big, raw.a1)?,
            space,
        })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn raw(&self) -> RawParams {
        self.raw
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `rho'(xi_L, xi_R)`: the big factor through the oscillators, the other
    /// three factors through trace characters.
    pub fn rho_prime(&self, p: &GPair) -> Result<FockOperator> {
        let f = factor_split(&self.scheme, p)?;
        let RawParams { kl1, kl2, kr1, kr2, .. } = self.raw;
        let (big, scalar) = match self.scheme.case() {
            CaseTag::III => (&f.r1, f.l1.trace() * kl1 as f64 + f.l2.trace() * kl2 as f64 + f.r2.trace() * kr2 as f64),
            _ => (&f.l1, f.l2.trace() * kl2 as f64 + f.r1.trace() * kr1 as f64 + f.r2.trace() * kr2 as f64),
        };
        let op = rho_prime_u(&self.label, &self.space, big)?;
        Ok(op.add(&FockOperator::identity(self.dim()).scale(scalar)))
    }
}

/// `K`-invariant subspace of a representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VKResult {
    pub dimension: usize,
    pub basis_states: Vec<OccupationState>,
    #[serde(skip)]
    pub vectors: Vec<Vec<C64>>,
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Common kernel of square operators on a `dim`-dimensional space.
///
/// The coupling graph of the operators is split into connected components and
/// each component is handled by a dense SVD.
pub fn common_kernel(ops: &[FockOperator], dim: usize) -> Vec<Vec<C64>> {
    let mut ds = DisjointSet((0..dim).collect());
    for op in ops {
        for (i, j, _) in op.triplets() {
            ds.union(i, j);
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; dim];
    for i in 0..dim {
        let r = ds.find(i);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[r]].push(i);
    }
    let mut local = vec![0usize; dim];
    let mut kernel = Vec::new();
    for comp in comps {
        let c = comp.len();
        for (k, &i) in comp.iter().enumerate() {
            local[i] = k;
        }
        let rows = (ops.len() * c).max(c);
        let mut m = DMatrix::<C64>::zeros(rows, c);
        for (o, op) in ops.iter().enumerate() {
            for &i in &comp {
                for (j, v) in op.row(i) {
                    m[(o * c + local[i], local[j])] = v;
                }
            }
        }
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let thr = KERNEL_TOL * smax.max(1.0);
        for (k, &sv) in svd.singular_values.iter().enumerate() {
            if sv < thr {
                let mut full = vec![C64::new(0.0, 0.0); dim];
                for (t, &i) in comp.iter().enumerate() {
                    full[i] = v_t[(k, t)].conj();
                }
                kernel.push(full);
            }
        }
    }
    kernel
}

fn aligned_state(space: &FockSpace, v: &[C64]) -> Option<OccupationState> {
    let (idx, best) = v
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    (best >= 1.0 - KERNEL_TOL).then(|| space.state(idx).clone())
}

/// `V^K` as the common kernel of `rho'((L, L))` over a basis of `Lie(M)`.
pub fn compute_vk_bruteforce(s: &Scheme, raw: RawParams) -> Result<VKResult> {
    vk_of_rep(&KksRep::new(s, raw)?)
}

pub fn vk_of_rep(rep: &KksRep) -> Result<VKResult> {
    let ops = build_m_basis(rep.scheme())
        .iter()
        .map(|l| rep.rho_prime(&GPair::diagonal(l)))
        .collect::<Result<Vec<_>>>()?;
    let vectors = common_kernel(&ops, rep.dim());
    let basis_states = vectors.iter().filter_map(|v| aligned_state(rep.space(), v)).collect();
    Ok(VKResult {
        dimension: vectors.len(),
        basis_states,
        vectors,
    })
}

/// Closed-form admissibility verdict for raw representation data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub dimension: usize,
    pub state: Option<OccupationState>,
    pub params: Option<KksParams>,
    pub violations: Vec<String>,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.dimension == 1
    }
}

fn divide_exact(num: i64, d: i64, what: &str, v: &mut Vec<String>) -> Option<i64> {
    if num.rem_euclid(d) != 0 {
        v.push(format!("{what} = {num}/{d} is not an integer"));
        return None;
    }
    Some(num / d)
}

fn nonneg(x: i64, what: &str, v: &mut Vec<String>) -> Option<u64> {
    if x < 0 {
        v.push(format!("{what} = {x} is negative"));
        None
    } else {
        Some(x as u64)
    }
}

/// Evaluates the integer conditions for `dim V^K = 1`.
pub fn admissibility_closed(s: &Scheme, raw: RawParams) -> Result<Admissibility> {
    let case = kks_case(s)?;
    let n = s.n() as i64;
    let RawParams { a1, kl1, kl2, kr1, kr2 } = raw;
    let a1i = a1 as i64;
    let mut v = Vec::new();
    let params = match case {
        CaseTag::I => {
            if raw.k_sum() != 0 {
                v.push(format!("kl1 + kl2 + kr1 + kr2 = {} must vanish", raw.k_sum()));
            }
            let g = divide_exact(a1i, n, "gamma = a1/n", &mut v);
            match (g, v.is_empty()) {
                (Some(g), true) => Some(KksParams::I { gamma: g as u64, kl1, kl2, kr1 }),
                _ => None,
            }
        }
        CaseTag::II => {
            let d = kl2 + kr2;
            let g = divide_exact(a1i - d, n + 1, "gamma = (a1 - kl2 - kr2)/(n + 1)", &mut v)
                .and_then(|g| nonneg(g, "gamma", &mut v));
            let gt = g.and_then(|g| nonneg(g as i64 + d, "gamma~ = gamma + kl2 + kr2", &mut v));
            let (_, r) = euclid(d, n + 1);
            if kl1 + kr1 != r - d {
                v.push(format!("kl1 + kr1 = {} must equal R - (gamma~ - gamma) = {}", kl1 + kr1, r - d));
            }
            match (g, gt, v.is_empty()) {
                (Some(g), Some(gt), true) => Some(KksParams::II { gamma: g, gamma_tilde: gt, kr1, kr2 }),
                _ => None,
            }
        }
        _ => {
            let g = divide_exact(a1i - 2 * kr2 - kl1 - kl2, n + 2, "gamma = (a1 - 2 kr2 - kl1 - kl2)/(n + 2)", &mut v)
                .and_then(|g| nonneg(g, "gamma", &mut v));
            let gh = g.and_then(|g| nonneg(g as i64 + kr2 + kl1, "gamma^ = gamma + kr2 + kl1", &mut v));
            let gt = g.and_then(|g| nonneg(g as i64 + kr2 + kl2, "gamma~ = gamma + kr2 + kl2", &mut v));
            let (_, r) = euclid(a1i, n + 2);
            if let Some(gt) = gt {
                let want = r - gt as i64 - kl1;
                if kr1 != want {
                    v.push(format!("kr1 = {kr1} must equal R - gamma~ - k = {want}"));
                }
            }
            match (g, gt, gh, v.is_empty()) {
                (Some(g), Some(gt), Some(gh), true) => Some(KksParams::III {
                    gamma: g,
                    gamma_tilde: gt,
                    gamma_hat: gh,
                    k: kl1,
                }),
                _ => None,
            }
        }
    };
    Ok(match params {
        Some(p) => Admissibility {
            dimension: 1,
            state: Some(p.invariant_state(s.n())),
            params: Some(p),
            violations: v,
        },
        None => Admissibility {
            dimension: 0,
            state: None,
            params: None,
            violations: v,
        },
    })
}

/// Free parameters for raw data, or the violated conditions.
pub fn params_from_raw(s: &Scheme, raw: RawParams) -> Result<KksParams> {
    let adm = admissibility_closed(s, raw)?;
    adm.params.ok_or_else(|| Error::Inadmissible(adm.violations.join("; ")))
}

/// Couplings `(a, b, c)` of the `BC_n` Sutherland model and the additive constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Couplings {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    #[serde(with = "ratio_string")]
    pub constant: Rational64,
}

impl Couplings {
    pub fn triple(&self) -> (u64, u64, u64) {
        (self.a, self.b, self.c)
    }

    pub fn mu(&self) -> MuParams {
        MuParams::from_couplings(self.a, self.b, self.c)
    }
}

/// Root multiplicity form of the couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuParams {
    #[serde(with = "ratio_string")]
    pub mu_pm: Rational64,
    #[serde(with = "ratio_string")]
    pub mu_short: Rational64,
    #[serde(with = "ratio_string")]
    pub mu_long: Rational64,
}

impl MuParams {
    pub fn from_couplings(a: u64, b: u64, c: u64) -> Self {
        let r = |x: u64| Rational64::from_integer(x as i64);
        MuParams {
            mu_pm: r(a) + 1,
            mu_short: r(b) - r(c),
            mu_long: r(c) + Rational64::new(1, 2),
        }
    }

    /// Inverse of [`MuParams::from_couplings`]; `None` unless the result is a
    /// non-negative integer triple.
    pub fn to_couplings(&self) -> Option<(u64, u64, u64)> {
        let a = self.mu_pm - 1;
        let c = self.mu_long - Rational64::new(1, 2);
        let b = self.mu_short + c;
        let int = |x: Rational64| (x.is_integer() && x >= Rational64::from_integer(0)).then(|| x.to_integer() as u64);
        Some((int(a)?, int(b)?, int(c)?))
    }
}

pub fn couplings(s: &Scheme, p: &KksParams) -> Result<Couplings> {
    require_case(s, p.case())?;
    let n = s.n() as i64;
    let r = Rational64::from_integer;
    Ok(match *p {
        KksParams::I { gamma, kl1, kl2, kr1 } => Couplings {
            a: gamma,
            b: (kl1 + kr1).unsigned_abs(),
            c: (kl2 + kr1).unsigned_abs(),
            constant: Rational64::new(n * (kl1 + kl2).pow(2), 2) - Rational64::new(n * (2 * n - 1) * (2 * n + 1), 6),
        },
        KksParams::II { gamma, gamma_tilde, kr1, kr2 } => Couplings {
            a: gamma,
            b: gamma + gamma_tilde + 1,
            c: (gamma_tilde as i64 - gamma as i64 + kr1 - kr2).unsigned_abs(),
            constant: Rational64::new(n * (kr1 + kr2).pow(2), 2) + r(kr1 * kr1)
                - Rational64::new(n * (n + 1) * (2 * n + 1), 3),
        },
        KksParams::III { gamma, gamma_tilde, gamma_hat, k } => {
            let (gt, gh) = (gamma_tilde as i64, gamma_hat as i64);
            Couplings {
                a: gamma,
                b: gamma + gamma_tilde + 1,
                c: gamma + gamma_hat + 1,
                constant: Rational64::new(-n * (4 * n * n + 12 * n + 11), 6)
                    + Rational64::new(n * (2 * k + gt - gh).pow(2), 2)
                    + r((gt + k) * (gt + k + 1))
                    + r((gh - k) * (gh - k + 1)),
            }
        }
    })
}

/// Exact rationals as `"p/q"` strings (`"-9/2"`, `"0"`).
pub mod ratio_string {
    use num_rational::Rational64;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

pub fn rational_to_f64(x: Rational64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Potential of the `BC_n` Sutherland Hamiltonian for real couplings.
pub fn bc_potential_abc(a: f64, b: f64, c: f64, q: &[f64]) -> f64 {
    let n = q.len();
    let mut acc = 0.0;
    for k in 0..n {
        for l in k + 1..n {
            acc += a * (a + 1.0) * (1.0 / (q[k] - q[l]).sin().powi(2) + 1.0 / (q[k] + q[l]).sin().powi(2));
        }
        acc += 0.5 * (b * b - 0.25) / q[k].sin().powi(2);
        acc += 0.5 * (c * c - 0.25) / q[k].cos().powi(2);
    }
    acc
}

pub fn bc_potential(coup: &Couplings, pt: &RadialPoint) -> Result<f64> {
    if !pt.is_regular() {
        return Err(Error::Domain(format!("{:?} lies on an alcove wall", pt.angles())));
    }
    Ok(bc_potential_abc(coup.a as f64, coup.b as f64, coup.c as f64, pt.angles()))
}

/// The spin term for case I in closed form.
pub fn spin_term_case_i_closed(n: usize, gamma: u64, kl1: i64, kl2: i64, kr1: i64, q: &[f64]) -> f64 {
    let g = gamma as f64;
    let (b2, c2) = (((kl1 + kr1) as f64).powi(2), ((kl2 + kr1) as f64).powi(2));
    let mut acc = -0.5 * n as f64 * ((kl1 + kl2) as f64).powi(2);
    for k in 0..q.len() {
        for l in k + 1..q.len() {
            acc -= g * (g + 1.0) * (1.0 / (q[k] - q[l]).sin().powi(2) + 1.0 / (q[k] + q[l]).sin().powi(2));
        }
        acc -= 0.5 * (b2 - c2) / q[k].sin().powi(2);
        acc -= 2.0 * c2 / (2.0 * q[k]).sin().powi(2);
    }
    acc
}

/// Precomputed data for evaluating the spin term at many section points:
/// the invariant vector `v` and the matrix `<v, rho'(T_a) rho'(T_b) v>` over
/// the `K^perp` basis.
#[derive(Debug, Clone)]
pub struct SpinContext {
    basis: KPerpBasis,
    ops: Vec<FockOperator>,
    v: Vec<C64>,
    gram: DMatrix<C64>,
}

fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

impl SpinContext {
    pub fn new(s: &Scheme, raw: RawParams) -> Result<Self> {
        let rep = KksRep::new(s, raw)?;
        let vk = vk_of_rep(&rep)?;
        if vk.dimension != 1 {
            return Err(Error::Inadmissible(format!("dim V^K = {} for {raw}", vk.dimension)));
        }
        let basis = build_kperp_basis(s);
        let ops = basis
            .vectors()
            .map(|t| rep.rho_prime(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(basis, ops, vk.vectors[0].clone()))
    }

    pub fn for_params(s: &Scheme, p: &KksParams) -> Result<Self> {
        require_case(s, p.case())?;
        Self::new(s, p.to_raw(s.n()))
    }

    fn assemble(basis: KPerpBasis, ops: Vec<FockOperator>, v: Vec<C64>) -> Self {
        let w: Vec<Vec<C64>> = ops.iter().map(|op| op.apply(&v)).collect();
        let d = ops.len();
        let mut gram = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                gram[(a, b)] = inner(&v, &ops[a].apply(&w[b]));
            }
        }
        SpinContext { basis, ops, v, gram }
    }

    /// Same context with `v` multiplied by `exp(i phi)`.
    pub fn with_phase(&self, phi: f64) -> Self {
        let ph = C64::from_polar(1.0, phi);
        let v = self.v.iter().map(|z| z * ph).collect();
        Self::assemble(self.basis.clone(), self.ops.clone(), v)
    }

    pub fn vector(&self) -> &[C64] {
        &self.v
    }

    pub fn basis(&self) -> &KPerpBasis {
        &self.basis
    }

    /// `<v, rho'(T_a)^2 v>` for each basis element.
    pub fn summands(&self) -> Vec<C64> {
        (0..self.gram.nrows()).map(|a| self.gram[(a, a)]).collect()
    }

    /// `sum_ab (J^{-1})_ab <v, rho'(T_a) rho'(T_b) v>` with `J` assembled from
    /// its definition at `pt`.
    pub fn spin_term(&self, pt: &RadialPoint) -> Result<f64> {
        let j = inertia_from_definition(&self.basis, pt)?.matrix;
        let jinv = j
            .cholesky()
            .ok_or_else(|| Error::Domain("inertia operator is not positive definite".into()))?
            .inverse();
        let d = jinv.nrows();
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                acc += self.gram[(a, b)] * jinv[(a, b)];
            }
        }
        Ok(acc.re)
    }
}

pub fn spin_term(s: &Scheme, p: &KksParams, pt: &RadialPoint) -> Result<f64> {
    SpinContext::for_params(s, p)?.spin_term(pt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSample {
    pub index: usize,
    pub q: Vec<f64>,
    pub measure: f64,
    pub spin: f64,
    pub potential: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub params: KksParams,
    pub raw: RawParams,
    pub couplings: Couplings,
    pub seed: u64,
    pub tol: f64,
    pub samples: Vec<ReductionSample>,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Checks `measure_factor - spin_term = V_BC + C` at explicit points.
pub fn verify_reduction_at(s: &Scheme, p: &KksParams, points: &[RadialPoint], tol: f64, seed: u64) -> Result<ReductionReport> {
    let ctx = SpinContext::for_params(s, p)?;
    let coup = couplings(s, p)?;
    let c = rational_to_f64(coup.constant);
    let samples = points
        .par_iter()
        .enumerate()
        .map(|(index, pt)| {
            let measure = measure_factor_closed(s, pt)?;
            let spin = ctx.spin_term(pt)?;
            let potential = bc_potential(&coup, pt)?;
            let (lhs, rhs) = (measure - spin, potential + c);
            let e = rel_err(lhs, rhs);
            Ok(ReductionSample {
                index,
                q: pt.angles().to_vec(),
                measure,
                spin,
                potential,
                lhs,
                rhs,
                rel_err: e,
                pass: e <= tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rel_err = samples.iter().map(|x| x.rel_err).fold(0.0, f64::max);
    Ok(ReductionReport {
        params: *p,
        raw: p.to_raw(s.n()),
        couplings: coup,
        seed,
        tol,
        pass: samples.iter().all(|x| x.pass),
        samples,
        max_rel_err,
    })
}

/// [`verify_reduction_at`] on seeded samples from the shrunk alcove.
pub fn verify_reduction(s: &Scheme, p: &KksParams, samples: usize, tol: f64, seed: u64) -> Result<ReductionReport> {
    let pts = sample_alcove(s.n(), samples, seed, SAMPLE_MARGIN);
    verify_reduction_at(s, p, &pts, tol, seed)
}

/// All free-parameter cells with `gamma`s in `0..=gamma_max` and the free `k`s in
/// `-k_bound..=k_bound`, sorted.
pub fn free_grid(case: CaseTag, gamma_max: u64, k_bound: i64) -> Vec<KksParams> {
    let ks: Vec<i64> = (-k_bound..=k_bound).collect();
    let gs: Vec<u64> = (0..=gamma_max).collect();
    let mut out = Vec::new();
    match case {
        CaseTag::I => {
            for &gamma in &gs {
                for &kl1 in &ks {
                    for &kl2 in &ks {
                        for &kr1 in &ks {
                            out.push(KksParams::I { gamma, kl1, kl2, kr1 });
                        }
                    }
                }
            }
        }
        CaseTag::II => {
            for &gamma in &gs {
                for &gamma_tilde in &gs {
                    for &kr1 in &ks {
                        for &kr2 in &ks {
                            out.push(KksParams::II { gamma, gamma_tilde, kr1, kr2 });
                        }
                    }
                }
            }
        }
        _ => {
            for &gamma in &gs {
                for &gamma_tilde in &gs {
                    for &gamma_hat in &gs {
                        for &k in &ks {
                            out.push(KksParams::III { gamma, gamma_tilde, gamma_hat, k });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Largest `a1` reached by admissible cells with all `gamma`s at most `gamma_max`.
pub fn a1_bound(s: &Scheme, gamma_max: u64) -> Result<u64> {
    Ok(gamma_max * big_modes(s)? as u64)
}

pub fn raw_grid_size(a1_max: u64, k_bound: i64) -> usize {
    (a1_max as usize + 1).saturating_mul(((2 * k_bound + 1) as usize).pow(4))
}

/// All raw cells with `a1` in `0..=a1_max` and each `k` in `-k_bound..=k_bound`, sorted.
pub fn raw_grid(a1_max: u64, k_bound: i64) -> Vec<RawParams> {
    let ks: Vec<i64> = (-k_bound..=k_bound).collect();
    let mut out = Vec::with_capacity(raw_grid_size(a1_max, k_bound));
    for a1 in 0..=a1_max {
        for &kl1 in &ks {
            for &kl2 in &ks {
                for &kr1 in &ks {
                    for &kr2 in &ks {
                        out.push(RawParams { a1, kl1, kl2, kr1, kr2 });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumRow {
    pub raw: RawParams,
    pub predicted: Admissibility,
    pub brute_dimension: Option<usize>,
    pub brute_states: Option<Vec<OccupationState>>,
    pub couplings: Option<Couplings>,
}

impl EnumRow {
    pub fn agrees(&self) -> bool {
        match (&self.brute_dimension, &self.brute_states) {
            (Some(d), Some(st)) => {
                *d == self.predicted.dimension
                    && match &self.predicted.state {
                        Some(p) => st.len() == 1 && &st[0] == p,
                        None => st.is_empty(),
                    }
            }
            _ => true,
        }
    }
}

/// Evaluates every cell of a raw grid, optionally brute-forcing `V^K`.
pub fn enumerate_cells(s: &Scheme, cells: &[RawParams], brute: bool) -> Result<Vec<EnumRow>> {
    if cells.len() > CELL_CAP {
        return Err(Error::DimensionGuard {
            dim: cells.len(),
            guard: CELL_CAP,
        });
    }
    let modes = big_modes(s)?;
    let levels: BTreeSet<u64> = cells.iter().map(|c| c.a1).collect();
    let spaces: std::collections::BTreeMap<u64, Arc<FockSpace>> = if brute {
        levels
            .into_iter()
            .map(|l| Ok((l, Arc::new(FockSpace::new(modes, l)?))))
            .collect::<Result<_>>()?
    } else {
        Default::default()
    };
    cells
        .par_iter()
        .map(|&raw| {
            let predicted = admissibility_closed(s, raw)?;
            let couplings = predicted.params.map(|p| couplings(s, &p)).transpose()?;
            let (brute_dimension, brute_states) = if brute {
                let rep = KksRep::with_space(s, raw, spaces[&raw.a1].clone())?;
                let vk = vk_of_rep(&rep)?;
                (Some(vk.dimension), Some(vk.basis_states))
            } else {
                (None, None)
            };
            Ok(EnumRow {
                raw,
                predicted,
                brute_dimension,
                brute_states,
                couplings,
            })
        })
        .collect()
}

/// Coupling triples attained by the free-parameter grid.
pub fn attained_couplings(s: &Scheme, gamma_max: u64, k_bound: i64) -> Result<BTreeSet<(u64, u64, u64)>> {
    free_grid(s.case(), gamma_max, k_bound)
        .iter()
        .map(|p| couplings(s, p).map(|c| c.triple()))
        .collect()
}

/// Whether a coupling triple is reachable in the given case.
pub fn coupling_attainable(case: CaseTag, (a, b, c): (u64, u64, u64)) -> bool {
    match case {
        CaseTag::I => true,
        CaseTag::II => b > a,
        _ => b > a && c > a,
    }
}
