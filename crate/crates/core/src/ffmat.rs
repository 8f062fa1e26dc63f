//! Finite fields `F_{p^k}`, the five random matrix ensembles, and rank by
//! row reduction. This is the Monte Carlo side of every corank claim.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::qseries::is_prime;

/// Largest field handled; arithmetic is table driven.
pub const MAX_FIELD_SIZE: u32 = 1024;

/// `F_{p^k}` presented as `F_p[x]/(modulus)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub k: u32,
    /// Monic modulus, coefficients from `x^0` up to `x^k`.
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    /// `F_{p^k}` with the lexicographically lowest irreducible monic modulus.
    pub fn new(p: u32, k: u32) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::domain(format!(
                "field characteristic {p} is not prime"
            )));
        }
        if k == 0 {
            return Err(Error::domain("extension degree must be positive"));
        }
        let q = (p as u64)
            .checked_pow(k)
            .filter(|&q| q <= MAX_FIELD_SIZE as u64)
            .ok_or_else(|| {
                Error::domain(format!("field of order {p}^{k} exceeds {MAX_FIELD_SIZE}"))
            })?;
        for code in 0..q {
            let mut poly = digits(code as u32, p, k);
            poly.push(1);
            if is_irreducible(&poly, p) {
                return Ok(FieldSpec {
                    p,
                    k,
                    modulus: poly,
                });
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }

    pub fn with_modulus(p: u32, modulus: Vec<u32>) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::domain(format!(
                "field characteristic {p} is not prime"
            )));
        }
        if modulus.len() < 2 || *modulus.last().unwrap() != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(Error::domain(
                "modulus must be monic with coefficients in [0, p)",
            ));
        }
        let k = modulus.len() as u32 - 1;
        if (p as u64).pow(k) > MAX_FIELD_SIZE as u64 {
            return Err(Error::domain("field too large"));
        }
        if !is_irreducible(&modulus, p) {
            return Err(Error::domain("modulus is reducible"));
        }
        Ok(FieldSpec { p, k, modulus })
    }

    /// Field of prime-power order `q`.
    pub fn of_order(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::domain(format!("{q} is not a prime power")));
        }
        let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap();
        let mut k = 0;
        let mut r = q;
        while r.is_multiple_of(p) {
            r /= p;
            k += 1;
        }
        if r != 1 {
            return Err(Error::domain(format!("{q} is not a prime power")));
        }
        Self::new(p, k)
    }

    pub fn order(&self) -> u32 {
        self.p.pow(self.k)
    }
}

fn digits(mut code: u32, p: u32, len: u32) -> Vec<u32> {
    (0..len)
        .map(|_| {
            let d = code % p;
            code /= p;
            d
        })
        .collect()
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    let lead_inv = mod_inv(*m.last().unwrap(), p);
    while r.len() > dm {
        let top = *r.last().unwrap();
        if top != 0 {
            let f = top * lead_inv % p;
            let shift = r.len() - 1 - dm;
            for (i, &c) in m.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - f * c % p) % p;
            }
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

fn mod_inv(a: u32, p: u32) -> u32 {
    (1..p).find(|&x| a * x % p == 1).expect("non-invertible")
}

fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let k = poly.len() as u32 - 1;
    if k == 1 {
        return true;
    }
    for d in 1..=k / 2 {
        for code in 0..p.pow(d) {
            let mut f = digits(code, p, d);
            f.push(1);
            if poly_rem(poly, &f, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Table-driven arithmetic in a small finite field. Elements are `u16`
/// codes `Σ c_i p^i` of their polynomial residues.
#[derive(Debug, Clone)]
pub struct Field {
    spec: FieldSpec,
    q: u32,
    add: Vec<u16>,
    mul: Vec<u16>,
    neg: Vec<u16>,
    inv: Vec<u16>,
    conj: Option<Vec<u16>>,
    fixed: Vec<u16>,
}

impl Field {
    pub fn new(spec: FieldSpec) -> Self {
        let (p, k) = (spec.p, spec.k);
        let q = spec.order();
        let qs = q as usize;
        let digs: Vec<Vec<u32>> = (0..q).map(|c| digits(c, p, k)).collect();
        let encode = |d: &[u32]| -> u16 { d.iter().rev().fold(0u32, |acc, &c| acc * p + c) as u16 };
        let mut add = vec![0u16; qs * qs];
        let mut mul = vec![0u16; qs * qs];
        for a in 0..qs {
            for b in 0..qs {
                let s: Vec<u32> = digs[a]
                    .iter()
                    .zip(&digs[b])
                    .map(|(x, y)| (x + y) % p)
                    .collect();
                add[a * qs + b] = encode(&s);
                let mut prod = vec![0u32; 2 * k as usize];
                for (i, x) in digs[a].iter().enumerate() {
                    for (j, y) in digs[b].iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let mut r = poly_rem(&prod, &spec.modulus, p);
                r.resize(k as usize, 0);
                mul[a * qs + b] = encode(&r);
            }
        }
        let neg = (0..qs)
            .map(|a| (0..qs).find(|&b| add[a * qs + b] == 0).unwrap() as u16)
            .collect();
        let inv = (0..qs)
            .map(|a| {
                if a == 0 {
                    0
                } else {
                    (1..qs).find(|&b| mul[a * qs + b] == 1).unwrap() as u16
                }
            })
            .collect();
        let mut field = Field {
            spec,
            q,
            add,
            mul,
            neg,
            inv,
            conj: None,
            fixed: Vec::new(),
        };
        if k % 2 == 0 {
            let sub_q = p.pow(k / 2);
            let conj: Vec<u16> = (0..q as u16).map(|a| field.pow(a, sub_q as u64)).collect();
            field.fixed = (0..q as u16).filter(|&a| conj[a as usize] == a).collect();
            field.conj = Some(conj);
        }
        field
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u16, b: u16) -> u16 {
        self.add(a, self.neg[b as usize])
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: u16) -> u16 {
        self.neg[a as usize]
    }

    pub fn inv(&self, a: u16) -> Option<u16> {
        (a != 0).then(|| self.inv[a as usize])
    }

    pub fn pow(&self, a: u16, mut e: u64) -> u16 {
        let mut base = a;
        let mut acc = 1u16;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `x ↦ x^{√q}`; only for even extension degree.
    pub fn conj(&self, a: u16) -> Option<u16> {
        self.conj.as_ref().map(|c| c[a as usize])
    }

    /// Elements fixed by conjugation (the subfield `F_{√q}`).
    pub fn fixed_subfield(&self) -> &[u16] {
        &self.fixed
    }
}

/// Dense matrix over a [`Field`], row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u16>,
}

impl FMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u16>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        FMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u16 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u16) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Conjugate transpose `M*`.
    pub fn conj_transpose(&self, f: &Field) -> Option<Self> {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, f.conj(self.get(i, j))?);
            }
        }
        Some(t)
    }

    pub fn mul(&self, other: &Self, f: &Field) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u16;
                for l in 0..self.cols {
                    acc = f.add(acc, f.mul(self.get(i, l), other.get(l, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// Rank by Gaussian elimination.
pub fn rank(m: &FMatrix, f: &Field) -> usize {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| a.get(i, c) != 0) else {
            continue;
        };
        if piv != r {
            for j in c..cols {
                let t = a.get(r, j);
                a.set(r, j, a.get(piv, j));
                a.set(piv, j, t);
            }
        }
        let inv = f.inv(a.get(r, c)).unwrap();
        for i in r + 1..rows {
            let x = a.get(i, c);
            if x == 0 {
                continue;
            }
            let factor = f.mul(x, inv);
            for j in c..cols {
                let v = f.sub(a.get(i, j), f.mul(factor, a.get(r, j)));
                a.set(i, j, v);
            }
        }
        r += 1;
    }
    r
}

/// `rows(M) - rank(M)`.
pub fn corank(m: &FMatrix, f: &Field) -> usize {
    m.rows - rank(m, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Uniform `n × (n+m)` matrices.
    Uniform {
        n: usize,
        m: usize,
    },
    Symmetric {
        n: usize,
    },
    /// `M^T = -M` with zero diagonal.
    Alternating {
        n: usize,
    },
    /// `M* = M` over `F_{q²}`.
    Hermitian {
        n: usize,
    },
    /// `M_ij = -M_ji = M_{n+1-j, n+1-i}`, odd characteristic only.
    SkewCentrosymmetric {
        n: usize,
    },
}

impl EnsembleKind {
    pub fn rows(&self) -> usize {
        match *self {
            EnsembleKind::Uniform { n, .. }
            | EnsembleKind::Symmetric { n }
            | EnsembleKind::Alternating { n }
            | EnsembleKind::Hermitian { n }
            | EnsembleKind::SkewCentrosymmetric { n } => n,
        }
    }

    pub fn cols(&self) -> usize {
        match *self {
            EnsembleKind::Uniform { n, m } => n + m,
            _ => self.rows(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::Uniform { .. } => "uniform",
            EnsembleKind::Symmetric { .. } => "symmetric",
            EnsembleKind::Alternating { .. } => "alternating",
            EnsembleKind::Hermitian { .. } => "hermitian",
            EnsembleKind::SkewCentrosymmetric { .. } => "skew_centrosymmetric",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleKind::Uniform { n, m } => write!(f, "uniform({n}x{})", n + m),
            _ => write!(f, "{}({})", self.name(), self.rows()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub field: FieldSpec,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, field: FieldSpec) -> Result<Self> {
        match kind {
            EnsembleKind::Hermitian { .. } if !field.k.is_multiple_of(2) => {
                return Err(Error::domain(
                    "Hermitian matrices need an even-degree field F_{q^2}",
                ))
            }
            EnsembleKind::SkewCentrosymmetric { .. } if field.p == 2 => {
                return Err(Error::domain(
                    "skew centrosymmetric ensemble needs odd characteristic",
                ))
            }
            _ => {}
        }
        Ok(EnsembleSpec { kind, field })
    }

    /// The `q` of the matching Markov chain: field order, or its square root
    /// for the Hermitian ensemble.
    pub fn chain_q(&self) -> u32 {
        match self.kind {
            EnsembleKind::Hermitian { .. } => self.field.p.pow(self.field.k / 2),
            _ => self.field.order(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellMap {
    Same,
    Neg,
    Conj,
}

#[derive(Debug, Clone)]
struct Orbit {
    subfield_only: bool,
    cells: Vec<(usize, CellMap)>,
}

/// Precomputed description of which entries are free and how the rest are
/// derived. Cells in no orbit are forced to zero.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: EnsembleSpec,
    field: Field,
    orbits: Vec<Orbit>,
}

impl Sampler {
    pub fn new(spec: &EnsembleSpec) -> Result<Self> {
        let spec = EnsembleSpec::new(spec.kind, spec.field.clone())?;
        let field = Field::new(spec.field.clone());
        let (rows, cols) = (spec.kind.rows(), spec.kind.cols());
        let at = |i: usize, j: usize| i * cols + j;
        let mut orbits = Vec::new();
        match spec.kind {
            EnsembleKind::Uniform { .. } => {
                for c in 0..rows * cols {
                    orbits.push(Orbit {
                        subfield_only: false,
                        cells: vec![(c, CellMap::Same)],
                    });
                }
            }
            EnsembleKind::Symmetric { n } => {
                for i in 0..n {
                    for j in i..n {
                        let mut cells = vec![(at(i, j), CellMap::Same)];
                        if i != j {
                            cells.push((at(j, i), CellMap::Same));
                        }
                        orbits.push(Orbit {
                            subfield_only: false,
                            cells,
                        });
                    }
                }
            }
            EnsembleKind::Alternating { n } => {
                for i in 0..n {
                    for j in i + 1..n {
                        orbits.push(Orbit {
                            subfield_only: false,
                            cells: vec![(at(i, j), CellMap::Same), (at(j, i), CellMap::Neg)],
                        });
                    }
                }
            }
            EnsembleKind::Hermitian { n } => {
                for i in 0..n {
                    orbits.push(Orbit {
                        subfield_only: true,
                        cells: vec![(at(i, i), CellMap::Same)],
                    });
                    for j in i + 1..n {
                        orbits.push(Orbit {
                            subfield_only: false,
                            cells: vec![(at(i, j), CellMap::Same), (at(j, i), CellMap::Conj)],
                        });
                    }
                }
            }
            EnsembleKind::SkewCentrosymmetric { n } => {
                orbits = skew_centrosymmetric_orbits(n);
            }
        }
        let sampler = Sampler {
            spec,
            field,
            orbits,
        };
        sampler.self_check()?;
        Ok(sampler)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FMatrix {
        let (rows, cols) = (self.spec.kind.rows(), self.spec.kind.cols());
        let mut m = FMatrix::zeros(rows, cols);
        let q = self.field.order() as u16;
        let fixed = self.field.fixed_subfield();
        for orbit in &self.orbits {
            let v = if orbit.subfield_only {
                fixed[rng.random_range(0..fixed.len())]
            } else {
                rng.random_range(0..q)
            };
            for &(cell, map) in &orbit.cells {
                m.data[cell] = match map {
                    CellMap::Same => v,
                    CellMap::Neg => self.field.neg(v),
                    CellMap::Conj => self.field.conj(v).expect("conjugation on even degree"),
                };
            }
        }
        m
    }

    /// True when `m` lies in this ensemble's matrix space.
    pub fn satisfies_constraints(&self, m: &FMatrix) -> bool {
        let f = &self.field;
        let n = m.rows();
        match self.spec.kind {
            EnsembleKind::Uniform { .. } => true,
            EnsembleKind::Symmetric { .. } => *m == m.transpose(),
            EnsembleKind::Alternating { .. } => (0..n)
                .all(|i| m.get(i, i) == 0 && (0..n).all(|j| m.get(i, j) == f.neg(m.get(j, i)))),
            EnsembleKind::Hermitian { .. } => m.conj_transpose(f).as_ref() == Some(m),
            EnsembleKind::SkewCentrosymmetric { .. } => (0..n).all(|i| {
                (0..n).all(|j| {
                    m.get(i, j) == f.neg(m.get(j, i)) && m.get(i, j) == m.get(n - 1 - j, n - 1 - i)
                })
            }),
        }
    }

    fn self_check(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..4 {
            let m = self.sample(&mut rng);
            if !self.satisfies_constraints(&m) {
                return Err(Error::domain(format!(
                    "orbit construction for {} violates its constraints",
                    self.spec.kind
                )));
            }
        }
        Ok(())
    }
}

/// Orbits of `(i, j)` under `(i,j) ↦ (j,i)` (sign −1) and
/// `(i,j) ↦ (n−1−j, n−1−i)` (sign +1). An orbit that reaches some cell with
/// both signs is forced to zero and dropped.
fn skew_centrosymmetric_orbits(n: usize) -> Vec<Orbit> {
    let mut seen = vec![false; n * n];
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if seen[i * n + j] {
                continue;
            }
            let mut sign: BTreeMap<(usize, usize), i8> = BTreeMap::new();
            let mut stack = vec![((i, j), 1i8)];
            let mut conflict = false;
            while let Some(((a, b), s)) = stack.pop() {
                match sign.get(&(a, b)) {
                    Some(&prev) => {
                        if prev != s {
                            conflict = true;
                        }
                        continue;
                    }
                    None => {
                        sign.insert((a, b), s);
                    }
                }
                stack.push(((b, a), -s));
                stack.push(((n - 1 - b, n - 1 - a), s));
            }
            for &(a, b) in sign.keys() {
                seen[a * n + b] = true;
            }
            if !conflict {
                let cells = sign
                    .into_iter()
                    .map(|((a, b), s)| {
                        (a * n + b, if s > 0 { CellMap::Same } else { CellMap::Neg })
                    })
                    .collect();
                out.push(Orbit {
                    subfield_only: false,
                    cells,
                });
            }
        }
    }
    out
}

/// Empirical corank counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorankHist {
    pub ensemble: EnsembleKind,
    pub field: FieldSpec,
    pub trials: u64,
    pub seed: u64,
    pub counts: BTreeMap<usize, u64>,
}

impl CorankHist {
    pub fn frequency(&self, corank: usize) -> f64 {
        *self.counts.get(&corank).unwrap_or(&0) as f64 / self.trials as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Counter-based random stream: trial `t` of a run seeded with `seed`
/// always sees the same numbers, whichever thread runs it.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn corank_hist(spec: &EnsembleSpec, trials: u64, seed: u64) -> Result<CorankHist> {
    corank_hist_with(spec, trials, seed, Exec::default())
}

pub fn corank_hist_with(
    spec: &EnsembleSpec,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<CorankHist> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let sampler = Sampler::new(spec)?;
    let n = spec.kind.rows();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let counts = par::map_reduce(
        exec,
        trials,
        4096,
        || vec![0u64; n + 1],
        |acc, t| {
            let mut rng = base.clone();
            rng.set_stream(t);
            rng.set_word_pos(0);
            let m = sampler.sample(&mut rng);
            acc[corank(&m, sampler.field())] += 1;
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    Ok(CorankHist {
        ensemble: spec.kind,
        field: spec.field.clone(),
        trials,
        seed,
        counts: counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect(),
    })
}
