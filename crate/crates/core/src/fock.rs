//! Bosonic oscillator realization of the symmetric powers of the defining
//! representation of `gl(n)`, and the `u(n)` representations built on them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{CMat, C64};

/// Largest Fock space the library will build.
pub const DIM_GUARD: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OccupationState(Vec<u32>);

impl OccupationState {
    pub fn new(occupations: Vec<u32>) -> Self {
        OccupationState(occupations)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn level(&self) -> u64 {
        self.0.iter().map(|&l| l as u64).sum()
    }

    pub fn weight(&self) -> WeightFunctional {
        WeightFunctional(self.0.iter().map(|&l| l as i64).collect())
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "|{}>", parts.join(","))
    }
}

/// Integer combination `sum_i c_i e_i` of the standard weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightFunctional(pub Vec<i64>);

impl WeightFunctional {
    pub fn coefficients(&self) -> &[i64] {
        &self.0
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Dimension of the level-`level` subspace for `modes` oscillators.
pub fn fock_dimension(modes: usize, level: u64) -> u64 {
    if modes == 0 {
        return u64::from(level == 0);
    }
    binomial(level + modes as u64 - 1, modes as u64 - 1)
}

/// The span of all occupation states of a fixed level, with the basis in
/// lexicographic order of the occupation vectors.
#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: usize,
    level: u64,
    basis: Vec<OccupationState>,
    index: HashMap<OccupationState, usize>,
}

fn enumerate_level(modes: usize, level: u32, prefix: &mut Vec<u32>, out: &mut Vec<OccupationState>) {
    if prefix.len() + 1 == modes {
        prefix.push(level);
        out.push(OccupationState(prefix.clone()));
        prefix.pop();
        return;
    }
    for l in 0..=level {
        prefix.push(l);
        enumerate_level(modes, level - l, prefix, out);
        prefix.pop();
    }
}

impl FockSpace {
    pub fn new(modes: usize, level: u64) -> Result<Self> {
        Self::with_guard(modes, level, DIM_GUARD)
    }

    pub fn with_guard(modes: usize, level: u64, guard: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Shape("a Fock space needs at least one mode".into()));
        }
        let dim = fock_dimension(modes, level);
        if dim > guard as u64 {
            return Err(Error::DimensionGuard {
                dim: dim as usize,
                guard,
            });
        }
        let mut basis = Vec::with_capacity(dim as usize);
        enumerate_level(modes, level as u32, &mut Vec::with_capacity(modes), &mut basis);
        let index = basis.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(FockSpace {
            modes,
            level,
            basis,
            index,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[OccupationState] {
        &self.basis
    }

    pub fn state(&self, i: usize) -> &OccupationState {
        &self.basis[i]
    }

    pub fn index_of(&self, s: &OccupationState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Neighbouring level, `level + delta`, or `None` below zero.
    pub fn shifted(&self, delta: i64) -> Result<Option<FockSpace>> {
        let l = self.level as i64 + delta;
        if l < 0 {
            return Ok(None);
        }
        FockSpace::new(self.modes, l as u64).map(Some)
    }

    fn check_mode(&self, i: usize) -> Result<()> {
        if i >= self.modes {
            return Err(Error::Shape(format!("mode {i} out of range for {} modes", self.modes)));
        }
        Ok(())
    }
}

/// Sparse complex matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl FockOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut map: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (i, j, v) in triplets {
            assert!(i < rows && j < cols, "triplet ({i},{j}) outside {rows}x{cols}");
            *map.entry((i, j)).or_default() += v;
        }
        let mut row_ptr = vec![0; rows + 1];
        let mut col_idx = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for ((i, j), v) in map {
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        FockOperator {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, std::iter::empty())
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(d: &[C64]) -> Self {
        Self::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn scale(&self, t: C64) -> FockOperator {
        Self::from_triplets(self.rows, self.cols, self.triplets().map(|(i, j, v)| (i, j, v * t)))
    }

    pub fn add(&self, other: &FockOperator) -> FockOperator {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_triplets(self.rows, self.cols, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &FockOperator) -> FockOperator {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &FockOperator) -> FockOperator {
        assert_eq!(self.cols, other.rows);
        let mut trip = Vec::new();
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    trip.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.rows, other.cols, trip)
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn adjoint(&self) -> FockOperator {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, _)| i == j)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}

fn ladder(from: &FockSpace, to: &FockSpace, i: usize, raise: bool) -> FockOperator {
    let mut trip = Vec::new();
    for (col, s) in from.basis().iter().enumerate() {
        let mut occ = s.occupations().to_vec();
        let coeff = if raise {
            occ[i] += 1;
            (occ[i] as f64).sqrt()
        } else {
            if occ[i] == 0 {
                continue;
            }
            let c = (occ[i] as f64).sqrt();
            occ[i] -= 1;
            c
        };
        let row = to.index_of(&OccupationState(occ)).expect("target level contains the shifted state");
        trip.push((row, col, C64::new(coeff, 0.0)));
    }
    FockOperator::from_triplets(to.dim(), from.dim(), trip)
}

/// `b_i^dagger` from `space` to the level above.
pub fn create(space: &FockSpace, i: usize) -> Result<FockOperator> {
    space.check_mode(i)?;
    let up = FockSpace::new(space.modes, space.level + 1)?;
    Ok(ladder(space, &up, i, true))
}

/// `b_i` from `space` to the level below; on level zero it maps to the
/// zero-dimensional space.
pub fn annihilate(space: &FockSpace, i: usize) -> Result<FockOperator> {
    space.check_mode(i)?;
    match space.shifted(-1)? {
        Some(down) => Ok(ladder(space, &down, i, false)),
        None => Ok(FockOperator::zeros(0, space.dim())),
    }
}

/// `psi(E_ij) = b_i^dagger b_j` restricted to `space`.
pub fn gl_action(space: &FockSpace, i: usize, j: usize) -> Result<FockOperator> {
    space.check_mode(i)?;
    space.check_mode(j)?;
    let mut trip = Vec::with_capacity(space.dim());
    for (col, s) in space.basis().iter().enumerate() {
        let occ = s.occupations();
        if i == j {
            trip.push((col, col, C64::new(occ[i] as f64, 0.0)));
            continue;
        }
        if occ[j] == 0 {
            continue;
        }
        let coeff = ((occ[j] as f64) * (occ[i] as f64 + 1.0)).sqrt();
        let mut next = occ.to_vec();
        next[j] -= 1;
        next[i] += 1;
        let row = space.index_of(&OccupationState(next)).expect("level preserved");
        trip.push((row, col, C64::new(coeff, 0.0)));
    }
    Ok(FockOperator::from_triplets(space.dim(), space.dim(), trip))
}

/// `psi(Z) = sum_ij Z_ij b_i^dagger b_j` for a complex `modes x modes` matrix.
pub fn psi(space: &FockSpace, z: &CMat) -> Result<FockOperator> {
    let n = space.modes();
    if z.nrows() != n || z.ncols() != n {
        return Err(Error::Shape(format!("expected {n}x{n}, got {}x{}", z.nrows(), z.ncols())));
    }
    let mut trip = Vec::new();
    for (col, s) in space.basis().iter().enumerate() {
        let occ = s.occupations();
        let diag: C64 = (0..n).map(|i| z[(i, i)] * occ[i] as f64).sum();
        trip.push((col, col, diag));
        for j in 0..n {
            if occ[j] == 0 {
                continue;
            }
            for i in 0..n {
                if i == j || z[(i, j)] == C64::new(0.0, 0.0) {
                    continue;
                }
                let coeff = ((occ[j] as f64) * (occ[i] as f64 + 1.0)).sqrt();
                let mut next = occ.to_vec();
                next[j] -= 1;
                next[i] += 1;
                let row = space.index_of(&OccupationState(next)).expect("level preserved");
                trip.push((row, col, z[(i, j)] * coeff));
            }
        }
    }
    Ok(FockOperator::from_triplets(space.dim(), space.dim(), trip))
}

/// States of `space` with weight `nu`: at most one.
pub fn weight_space(space: &FockSpace, nu: &WeightFunctional) -> Vec<OccupationState> {
    let c = nu.coefficients();
    if c.len() != space.modes() || c.iter().any(|&x| x < 0) {
        return Vec::new();
    }
    let s = OccupationState(c.iter().map(|&x| x as u32).collect());
    match space.index_of(&s) {
        Some(_) => vec![s],
        None => Vec::new(),
    }
}

/// `mu_n(a1 varpi_1) = a1 mod n`.
pub fn mu_label(n: usize, a1: u64) -> u64 {
    a1 % n as u64
}

/// Irreducible representation of `U(n)` with highest weight `a1 varpi_1` and
/// central twist `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepLabel {
    pub modes: usize,
    pub k: i64,
    pub a1: u64,
    pub mu: u64,
}

impl RepLabel {
    pub fn new(modes: usize, k: i64, a1: u64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Shape("U(0) has no representations".into()));
        }
        Ok(RepLabel {
            modes,
            k,
            a1,
            mu: mu_label(modes, a1),
        })
    }

    pub fn space(&self) -> Result<FockSpace> {
        FockSpace::new(self.modes, self.a1)
    }

    /// Integer `mu + n k` multiplying `tr(Z)/n` in the central part.
    pub fn central_charge(&self) -> i64 {
        self.mu as i64 + self.modes as i64 * self.k
    }
}

/// Derivative of the representation on `u(n)`:
/// `pi(Z - tr(Z)/n) + (mu + n k) tr(Z)/n Id`.
pub fn rho_prime_u(label: &RepLabel, space: &FockSpace, z: &CMat) -> Result<FockOperator> {
    if space.modes() != label.modes || space.level() != label.a1 {
        return Err(Error::Shape(format!(
            "space ({} modes, level {}) does not carry {label:?}",
            space.modes(),
            space.level()
        )));
    }
    let n = label.modes as f64;
    let tr: C64 = z.trace();
    let shift = (label.central_charge() as f64 - label.a1 as f64) / n;
    let base = psi(space, z)?;
    Ok(base.add(&FockOperator::identity(space.dim()).scale(tr * shift)))
}
