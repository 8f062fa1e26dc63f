//! The five birth-death chains on coranks, their stationary laws, exact
//! iteration from `δ₀`, and total-variation distances.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffmat::{EnsembleKind, EnsembleSpec};
use crate::qseries::{self, eta, q_pow_neg};
use crate::real::{Approx, Precision, Real};
use crate::scalar::{int, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    /// Coranks of uniform `n × (n+m)` matrices.
    Uniform,
    Symmetric,
    /// Odd-size alternating matrices, state `j` is corank `2j+1`.
    AltOdd,
    /// Even-size alternating matrices, state `j` is corank `2j`.
    AltEven,
    Hermitian,
}

impl ChainKind {
    pub const ALL: [ChainKind; 5] = [
        ChainKind::Uniform,
        ChainKind::Symmetric,
        ChainKind::AltOdd,
        ChainKind::AltEven,
        ChainKind::Hermitian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChainKind::Uniform => "uniform",
            ChainKind::Symmetric => "symmetric",
            ChainKind::AltOdd => "alt-odd",
            ChainKind::AltEven => "alt-even",
            ChainKind::Hermitian => "hermitian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "uniform" => ChainKind::Uniform,
            "symmetric" | "sym" => ChainKind::Symmetric,
            "alt-odd" | "alternating-odd" => ChainKind::AltOdd,
            "alt-even" | "alternating-even" => ChainKind::AltEven,
            "hermitian" | "her" => ChainKind::Hermitian,
            other => return Err(Error::domain(format!("unknown chain kind {other:?}"))),
        })
    }
}

/// A chain and its parameters. `m` is only meaningful for [`ChainKind::Uniform`]
/// and is zero otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainSpec {
    kind: ChainKind,
    q: BigRational,
    m: BigRational,
}

impl ChainSpec {
    pub fn new(kind: ChainKind, q: BigRational, m: BigRational) -> Result<Self> {
        if q <= BigRational::one() {
            return Err(Error::domain(format!("q must exceed 1, got {q}")));
        }
        if kind != ChainKind::Uniform && !m.is_zero() {
            return Err(Error::domain(format!(
                "the {} chain takes no m parameter",
                kind.name()
            )));
        }
        if m <= -BigRational::one() {
            return Err(Error::domain(format!("m must exceed -1, got {m}")));
        }
        Ok(ChainSpec { kind, q, m })
    }

    pub fn uniform(q: BigRational, m: BigRational) -> Result<Self> {
        Self::new(ChainKind::Uniform, q, m)
    }

    pub fn of_kind(kind: ChainKind, q: BigRational) -> Result<Self> {
        Self::new(kind, q, BigRational::zero())
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn m(&self) -> &BigRational {
        &self.m
    }

    /// Transitions are rational in the parameters, so exact arithmetic works.
    pub fn is_exact(&self) -> bool {
        self.m.is_integer()
    }

    /// Runs with `m ∈ (-1, 0)` lie outside the matrix interpretation.
    pub fn is_extended_domain(&self) -> bool {
        self.m.is_negative()
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ChainKind::Uniform => write!(f, "uniform(q={}, m={})", self.q, self.m),
            k => write!(f, "{}(q={})", k.name(), self.q),
        }
    }
}

/// One tridiagonal row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row<S> {
    pub down: S,
    pub stay: S,
    pub up: S,
}

/// `q^{-1}` and `u = q^{-m}` in the scalar type.
fn params<S: Scalar>(c: &ChainSpec, prec: Precision) -> Result<(S, S)> {
    let qinv = S::from_ratio(&c.q.recip(), prec);
    let u = if c.m.is_integer() {
        let m =
            c.m.to_integer()
                .to_i64()
                .ok_or_else(|| Error::domain("m too large"))?;
        S::from_ratio(&qpow_rat(&c.q, -m), prec)
    } else {
        S::from_real(&q_pow_neg(&c.q, &c.m, prec)?)
            .ok_or_else(|| Error::domain(format!("{c}: non-integer m needs real arithmetic")))?
    };
    Ok((qinv, u))
}

/// Rows `0..=k` of the transition matrix.
pub fn transition_rows<S: Scalar>(c: &ChainSpec, k: usize, prec: Precision) -> Result<Vec<Row<S>>> {
    let (qinv, u) = params::<S>(c, prec)?;
    let one = S::from_i64(1, prec);
    let zero = S::from_i64(0, prec);
    let qinv2 = qinv.clone() * &qinv;
    let qinv4 = qinv2.clone() * &qinv2;
    let mut rows = Vec::with_capacity(k + 1);
    // x = q^{-i}, x2 = q^{-2i}, x4 = q^{-4i}
    let mut x = one.clone();
    let mut x2 = one.clone();
    let mut x4 = one.clone();
    for i in 0..=k {
        let (down, up) = match c.kind {
            ChainKind::Uniform => (
                (one.clone() - &x) * (one.clone() - &(u.clone() * &x)),
                x2.clone() * &qinv * &u,
            ),
            ChainKind::Symmetric => (one.clone() - &x, x.clone() * &qinv),
            ChainKind::AltOdd => (
                (one.clone() - &x2) * (one.clone() - &(x2.clone() * &qinv)),
                x4.clone() * &qinv2 * &qinv,
            ),
            ChainKind::AltEven => {
                let down = if i == 0 {
                    zero.clone()
                } else {
                    (one.clone() - &x2) * (one.clone() - &(x2.clone() / &qinv))
                };
                (down, x4.clone() * &qinv)
            }
            ChainKind::Hermitian => (one.clone() - &x2, x2.clone() * &qinv),
        };
        let stay = one.clone() - &down - &up;
        rows.push(Row { down, stay, up });
        x = x * &qinv;
        x2 = x2 * &qinv2;
        x4 = x4 * &qinv4;
    }
    Ok(rows)
}

pub fn transition_row<S: Scalar>(c: &ChainSpec, i: usize, prec: Precision) -> Result<Row<S>> {
    Ok(transition_rows(c, i, prec)?.pop().unwrap())
}

/// Weights on states `0..weights.len()` plus a bound on the mass beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist<S> {
    pub weights: Vec<S>,
    pub tail_bound: S,
}

impl<S: Scalar> Dist<S> {
    pub fn delta(i: usize, len: usize, prec: Precision) -> Self {
        let mut weights = vec![S::from_i64(0, prec); len.max(i + 1)];
        weights[i] = S::from_i64(1, prec);
        Dist {
            weights,
            tail_bound: S::from_i64(0, prec),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize, prec: Precision) -> S {
        self.weights
            .get(i)
            .cloned()
            .unwrap_or_else(|| S::from_i64(0, prec))
    }

    pub fn mass(&self, prec: Precision) -> S {
        self.weights
            .iter()
            .fold(S::from_i64(0, prec), |acc, w| acc + w)
    }

    /// Index of the last nonzero weight.
    pub fn support_end(&self) -> Option<usize> {
        self.weights.iter().rposition(|w| !w.is_zero_value())
    }

    pub fn to_real(&self, prec: Precision) -> Dist<Real> {
        Dist {
            weights: self.weights.iter().map(|w| w.to_real(prec)).collect(),
            tail_bound: self.tail_bound.to_real(prec),
        }
    }

    /// `index,weight` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,weight\n");
        for (i, w) in self.weights.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", w.to_plain_string()));
        }
        out
    }

    pub fn to_json(&self, prec: Precision) -> serde_json::Value {
        serde_json::json!({
            "mode": S::mode(),
            "precision_bits": prec.bits(),
            "tail_bound": self.tail_bound.to_plain_string(),
            "weights": self.weights.iter().map(|w| w.to_plain_string()).collect::<Vec<_>>(),
        })
    }
}

/// `π(0)` from the closed forms.
pub fn stationary_zero(c: &ChainSpec, prec: Precision) -> Result<Approx> {
    let q = &c.q;
    Ok(match c.kind {
        ChainKind::Uniform if c.m.is_integer() && !c.m.is_negative() => {
            let e = qseries::eta_inf(q, prec)?;
            let em = Real::from_ratio(&eta(c.m.to_integer().to_u32().unwrap(), q)?, prec);
            Approx {
                value: &e.value / &em,
                err: &e.err / &em,
            }
        }
        ChainKind::Uniform => qseries::theta_m(q, &c.m, prec)?,
        ChainKind::Symmetric | ChainKind::AltEven => qseries::alpha(q, prec)?,
        ChainKind::AltOdd => {
            let a = qseries::alpha(q, prec)?;
            let e1 = Real::from_ratio(&eta(1, q)?, prec);
            Approx {
                value: &a.value / &e1,
                err: &a.err / &e1,
            }
        }
        ChainKind::Hermitian => qseries::beta(q, prec)?,
    })
}

/// `π(i)` evaluated straight from its product formula; independent of the
/// detailed-balance recursion used by [`stationary`].
pub fn stationary_closed_form(c: &ChainSpec, i: usize, prec: Precision) -> Result<Real> {
    let q = &c.q;
    let out_prec = prec;
    // exact q^{i²} and η_{2i} have enormous numerators; run the products in reals
    let prec = Precision::new(out_prec.bits() + 32)?;
    let pi0 = stationary_zero(c, prec)?.value;
    let ii = i as i64;
    let q_real = Real::from_ratio(q, prec);
    let qpow = |e: i64| q_real.powi(e);
    let eta_r = |k: u32, base: &BigRational| -> Result<Real> {
        let inv = Real::from_ratio(&base.recip(), prec);
        let one = Real::one(prec);
        let (mut acc, mut pw) = (one.clone(), one.clone());
        for _ in 0..k {
            pw = &pw * &inv;
            acc = &acc * &(&one - &pw);
        }
        Ok(acc)
    };
    let value = match c.kind {
        ChainKind::Uniform if c.m.is_integer() && !c.m.is_negative() => {
            let m = c.m.to_integer().to_i64().unwrap();
            let em = eta_r(m as u32, q)?;
            // η_∞/(q^{i(i+m)} η_i η_{i+m}) = π(0) η_m/(q^{i(i+m)} η_i η_{i+m})
            &(&pi0 * &em)
                / &(&(&qpow(ii * (ii + m)) * &eta_r(i as u32, q)?) * &eta_r((ii + m) as u32, q)?)
        }
        ChainKind::Uniform => {
            // θ_m/(q^{i(i+m)} η_i ∏_{j=1}^{i}(1 - q^{-m-j})) with θ_m = π(0)
            let u = q_pow_neg(q, &c.m, prec)?;
            let mut den = &qpow(ii * ii) * &eta_r(i as u32, q)?;
            den = &den * &u.powi(-ii);
            let one = Real::one(prec);
            let qinv = Real::from_ratio(&q.recip(), prec);
            for j in 1..=ii {
                den = &den * &(&one - &(&u * &qinv.powi(j)));
            }
            &pi0 / &den
        }
        ChainKind::Symmetric => {
            let mut den = Real::one(prec);
            for k in 1..=ii {
                den = &den * &(&qpow(k) - &Real::one(prec));
            }
            &pi0 / &den
        }
        ChainKind::AltOdd => {
            let e1 = eta_r(1, q)?;
            &(&pi0 * &e1) / &(&qpow(2 * ii * ii + ii) * &eta_r(2 * i as u32 + 1, q)?)
        }
        ChainKind::AltEven => &pi0 / &(&qpow(2 * ii * ii - ii) * &eta_r(2 * i as u32, q)?),
        ChainKind::Hermitian => {
            let q2 = q * q;
            &pi0 / &(&qpow(ii * ii) * &eta_r(i as u32, &q2)?)
        }
    };
    Ok(value.with_precision(out_prec))
}

fn qpow_rat(q: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(q.clone(), e as usize)
    } else {
        num_traits::pow(q.recip(), e.unsigned_abs() as usize)
    }
}

/// Smallest `K` whose stationary tail beyond `K` is below `2^{-prec/2}`.
pub fn default_truncation(c: &ChainSpec, prec: Precision) -> Result<usize> {
    let rows: Vec<Row<f64>> = transition_rows::<Real>(c, 400, Precision::new(64)?)?
        .into_iter()
        .map(|r| Row {
            down: r.down.to_f64(),
            stay: r.stay.to_f64(),
            up: r.up.to_f64(),
        })
        .collect();
    let target = -(prec.bits() as f64 / 2.0) * std::f64::consts::LN_2;
    let mut log_w = 0.0f64; // log π(i)/π(0), π(0) <= 1
    for k in 1..400 {
        log_w += (rows[k - 1].up / rows[k].down).ln();
        let r = rows[k].up / rows[k + 1].down;
        if r < 0.5 && log_w + r.ln() + std::f64::consts::LN_2 < target {
            return Ok(k);
        }
    }
    Err(Error::Truncation(format!(
        "{c}: stationary tail did not decay by state 400"
    )))
}

/// Stationary law on `0..=k` by detailed balance from the closed-form `π(0)`.
/// The tail bound uses that `π(i+1)/π(i)` is non-increasing beyond `k`.
pub fn stationary(c: &ChainSpec, k: usize, prec: Precision) -> Result<Dist<Real>> {
    if k == 0 {
        return Err(Error::domain("truncation index must be at least 1"));
    }
    let work = Precision::new(prec.bits() + 16)?;
    let rows = transition_rows::<Real>(c, k + 1, work)?;
    let pi0 = stationary_zero(c, work)?;
    let mut weights = Vec::with_capacity(k + 1);
    let mut w = pi0.value.clone();
    weights.push(w.clone());
    for i in 0..k {
        w = &(&w * &rows[i].up) / &rows[i + 1].down;
        weights.push(w.clone());
    }
    let r = &rows[k].up / &rows[k + 1].down;
    let one = Real::one(work);
    if r >= one {
        return Err(Error::Truncation(format!(
            "{c}: K = {k} is too small to bound the tail"
        )));
    }
    let rel_err = &pi0.err / &pi0.value;
    let tail = &(&(&w * &r) / &(&one - &r)) + &rel_err.abs();
    Ok(Dist {
        weights: weights
            .into_iter()
            .map(|w| w.with_precision(prec))
            .collect(),
        tail_bound: tail.with_precision(prec),
    })
}

/// One step `μ ↦ μP` on `0..len`, keeping the length; returns the mass
/// pushed past the end.
fn step<S: Scalar>(mu: &[S], rows: &[Row<S>], prec: Precision) -> (Vec<S>, S) {
    let len = mu.len();
    let zero = S::from_i64(0, prec);
    let mut out = vec![zero.clone(); len];
    let mut leak = zero;
    for (i, w) in mu.iter().enumerate() {
        if w.is_zero_value() {
            continue;
        }
        let r = &rows[i];
        out[i] = out[i].clone() + &(w.clone() * &r.stay);
        if i > 0 {
            out[i - 1] = out[i - 1].clone() + &(w.clone() * &r.down);
        }
        let up = w.clone() * &r.up;
        if i + 1 < len {
            out[i + 1] = out[i + 1].clone() + &up;
        } else {
            leak = leak + &up;
        }
    }
    (out, leak)
}

/// `init · Pⁿ` on states `0..=k`. Rejects runs where live mass would leave
/// the window.
pub fn iterate<S: Scalar>(
    c: &ChainSpec,
    init: &Dist<S>,
    n: usize,
    k: usize,
    prec: Precision,
) -> Result<Dist<S>> {
    let end = init.support_end().unwrap_or(0);
    if end + n > k {
        return Err(Error::Truncation(format!(
            "support reaches {} after {n} steps but the window ends at {k}",
            end + n
        )));
    }
    iterate_truncated(c, init, n, k, prec)
}

/// As [`iterate`], but mass leaving `0..=k` is added to the tail bound.
pub fn iterate_truncated<S: Scalar>(
    c: &ChainSpec,
    init: &Dist<S>,
    n: usize,
    k: usize,
    prec: Precision,
) -> Result<Dist<S>> {
    let rows = transition_rows::<S>(c, k, prec)?;
    let mut mu: Vec<S> = (0..=k).map(|i| init.get(i, prec)).collect();
    let mut tail = init.tail_bound.clone();
    for i in k + 1..init.len() {
        tail = tail + &init.weights[i].abs_value();
    }
    for _ in 0..n {
        let (next, leak) = step(&mu, &rows, prec);
        mu = next;
        tail = tail + &leak.abs_value();
    }
    Ok(Dist {
        weights: mu,
        tail_bound: tail,
    })
}

/// `δ₀Pⁿ` for every `n ≤ n_max`, each on the lossless window `0..=n`.
pub fn delta0_trajectory<S: Scalar>(
    c: &ChainSpec,
    n_max: usize,
    prec: Precision,
) -> Result<Vec<Vec<S>>> {
    let rows = transition_rows::<S>(c, n_max + 1, prec)?;
    let mut mu = vec![S::from_i64(0, prec); n_max + 1];
    mu[0] = S::from_i64(1, prec);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(vec![mu[0].clone()]);
    for n in 1..=n_max {
        let (next, _) = step(&mu, &rows, prec);
        mu = next;
        out.push(mu[..=n].to_vec());
    }
    Ok(out)
}

pub fn delta0_power<S: Scalar>(c: &ChainSpec, n: usize, prec: Precision) -> Result<Dist<S>> {
    iterate(c, &Dist::delta(0, 1, prec), n, n, prec)
}

/// `Σ|a(i) - b(i)|` (no factor 1/2). Both tail bounds and the rounding of
/// the sum go into the error.
pub fn tv_distance<A: Scalar, B: Scalar>(a: &Dist<A>, b: &Dist<B>, prec: Precision) -> Approx {
    let work = Precision::new(prec.bits() + 16).expect("precision");
    let len = a.len().max(b.len());
    let mut sum = Real::zero(work);
    for i in 0..len {
        let x = a
            .weights
            .get(i)
            .map(|w| w.to_real(work))
            .unwrap_or_else(|| Real::zero(work));
        let y = b
            .weights
            .get(i)
            .map(|w| w.to_real(work))
            .unwrap_or_else(|| Real::zero(work));
        sum = &sum + &(&x - &y).abs();
    }
    let rounding =
        &Real::pow2(-(work.bits() as i64) + 8, work) * &(&sum + &Real::from_i64(len as i64, work));
    // narrowing the sum to `prec` costs at most one ulp there
    let narrowing = &Real::pow2(1 - prec.bits() as i64, work) * &sum;
    let err = &(&(&a.tail_bound.to_real(work).abs() + &b.tail_bound.to_real(work).abs())
        + &rounding)
        + &narrowing;
    Approx {
        value: sum.with_precision(prec),
        err: err.with_precision(prec),
    }
}

/// Exact corank distribution for a matrix ensemble, indexed by corank
/// `0..=n`, read off the matching chain.
pub fn ensemble_corank_dist(e: &EnsembleSpec) -> Result<Vec<BigRational>> {
    let q = int(e.chain_q() as i64);
    let prec = Precision::default();
    let n = e.kind.rows();
    let mut out = vec![BigRational::zero(); n + 1];
    let place = |out: &mut Vec<BigRational>, d: Dist<BigRational>, map: &dyn Fn(usize) -> usize| {
        for (j, w) in d.weights.into_iter().enumerate() {
            if !w.is_zero() {
                out[map(j)] = w;
            }
        }
    };
    match e.kind {
        EnsembleKind::Uniform { n, m } => {
            let c = ChainSpec::uniform(q, int(m as i64))?;
            place(&mut out, delta0_power(&c, n, prec)?, &|j| j);
        }
        EnsembleKind::Symmetric { n } => {
            let c = ChainSpec::of_kind(ChainKind::Symmetric, q)?;
            place(&mut out, delta0_power(&c, n, prec)?, &|j| j);
        }
        EnsembleKind::Hermitian { n } => {
            let c = ChainSpec::of_kind(ChainKind::Hermitian, q)?;
            place(&mut out, delta0_power(&c, n, prec)?, &|j| j);
        }
        EnsembleKind::Alternating { n } => {
            if n % 2 == 1 {
                let c = ChainSpec::of_kind(ChainKind::AltOdd, q)?;
                place(&mut out, delta0_power(&c, n / 2, prec)?, &|j| 2 * j + 1);
            } else {
                let c = ChainSpec::of_kind(ChainKind::AltEven, q)?;
                place(&mut out, delta0_power(&c, n / 2, prec)?, &|j| 2 * j);
            }
        }
        EnsembleKind::SkewCentrosymmetric { n } => {
            // halves: n = 2h gives square h × h, n = 2h+1 gives h × (h+1)
            let h = n / 2;
            let c = ChainSpec::uniform(q, int((n % 2) as i64))?;
            let odd = n % 2;
            place(&mut out, delta0_power(&c, h, prec)?, &|j| 2 * j + odd);
        }
    }
    Ok(out)
}

/// Exact rational `q^{-k}` helper for callers outside the module.
pub fn q_pow(q: &BigRational, e: i64) -> BigRational {
    qpow_rat(q, e)
}

/// Big-integer free check that a row is a probability vector.
pub fn row_is_stochastic(r: &Row<BigRational>) -> bool {
    let zero = BigRational::zero();
    let one = BigRational::one();
    let in_unit = |x: &BigRational| *x >= zero && *x <= one;
    in_unit(&r.down) && in_unit(&r.stay) && in_unit(&r.up) && (&r.down + &r.stay + &r.up) == one
}
