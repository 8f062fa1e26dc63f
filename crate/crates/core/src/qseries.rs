//! q-series constants: finite and infinite q-Pochhammer products, the odd
//! products `alpha`/`beta`, the normalizer `theta_m`, Euler's coefficients,
//! automorphism counts of abelian p-groups and the Cohen–Lenstra weights.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{Approx, Precision, Real};
use crate::scalar::int;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A finite abelian p-group `⊕ Z/p^{λ_i}`, stored as the partition `λ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PGroupType {
    p: u64,
    lambda: Vec<u32>,
}

impl PGroupType {
    pub fn new(p: u64, mut lambda: Vec<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        if lambda.contains(&0) {
            return Err(Error::domain("partition parts must be positive"));
        }
        lambda.sort_unstable_by(|a, b| b.cmp(a));
        Ok(PGroupType { p, lambda })
    }

    pub fn trivial(p: u64) -> Result<Self> {
        Self::new(p, Vec::new())
    }

    /// Parse `"1,1"`, `"2"`, or `""`/`"0"`/`"trivial"` for the trivial group.
    pub fn parse(p: u64, s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "0" || s == "[]" || s.eq_ignore_ascii_case("trivial") {
            return Self::trivial(p);
        }
        let s = s.trim_start_matches('[').trim_end_matches(']');
        let parts = s
            .split(',')
            .map(|x| {
                u32::from_str(x.trim())
                    .map_err(|_| Error::domain(format!("bad partition part {x:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, parts)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn lambda(&self) -> &[u32] {
        &self.lambda
    }

    /// p-rank, `dim G/pG`.
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    /// `log_p |G|`.
    pub fn log_order(&self) -> u32 {
        self.lambda.iter().sum()
    }

    pub fn order(&self) -> BigInt {
        num_traits::pow(BigInt::from(self.p), self.log_order() as usize)
    }

    /// `log_p #G[p^k]`.
    pub fn log_torsion(&self, k: u32) -> u32 {
        self.lambda.iter().map(|&l| l.min(k)).sum()
    }

    /// Recover the partition from `log_p #G[p^k]` for `k = 1, 2, ...`
    /// (the sequence must be eventually constant).
    pub fn from_torsion_logs(p: u64, logs: &[u32]) -> Result<Self> {
        // #{i : λ_i >= k} = logs[k-1] - logs[k-2]
        let mut prev = 0;
        let mut conj = Vec::new();
        for &l in logs {
            if l < prev {
                return Err(Error::domain("torsion counts must be non-decreasing"));
            }
            if l == prev {
                break;
            }
            conj.push(l - prev);
            prev = l;
        }
        if conj.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::domain("inconsistent torsion counts"));
        }
        let rank = conj.first().copied().unwrap_or(0) as usize;
        let lambda = (0..rank)
            .map(|i| conj.iter().filter(|&&c| c as usize > i).count() as u32)
            .collect();
        Self::new(p, lambda)
    }

    /// All types with `log_p |G| <= max_log_order` and rank `<= max_rank`.
    pub fn enumerate(p: u64, max_log_order: u32, max_rank: usize) -> Result<Vec<Self>> {
        fn rec(
            remaining: u32,
            max_part: u32,
            slots: usize,
            cur: &mut Vec<u32>,
            out: &mut Vec<Vec<u32>>,
        ) {
            out.push(cur.clone());
            if slots == 0 {
                return;
            }
            for part in (1..=max_part.min(remaining)).rev() {
                cur.push(part);
                rec(remaining - part, part, slots - 1, cur, out);
                cur.pop();
            }
        }
        let mut parts = Vec::new();
        rec(
            max_log_order,
            max_log_order,
            max_rank,
            &mut Vec::new(),
            &mut parts,
        );
        parts.into_iter().map(|l| Self::new(p, l)).collect()
    }
}

impl fmt::Display for PGroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.lambda.iter().map(|l| l.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

fn check_q(q: &BigRational) -> Result<()> {
    if *q <= BigRational::one() {
        return Err(Error::domain(format!("q must exceed 1, got {q}")));
    }
    Ok(())
}

/// `η_k(q) = ∏_{j=1}^{k} (1 - q^{-j})`, exactly.
pub fn eta(k: u32, q: &BigRational) -> Result<BigRational> {
    check_q(q)?;
    let inv = q.recip();
    let mut acc = BigRational::one();
    let mut x = BigRational::one();
    for _ in 0..k {
        x *= &inv;
        acc *= BigRational::one() - &x;
    }
    Ok(acc)
}

/// Which factors an infinite product keeps.
#[derive(Debug, Clone, Copy)]
enum Indices {
    All,
    Odd,
    Even,
}

impl Indices {
    fn keeps(self, j: u64) -> bool {
        match self {
            Indices::All => true,
            Indices::Odd => j % 2 == 1,
            Indices::Even => j.is_multiple_of(2),
        }
    }
}

/// `∏ f(q^{-j})` over the selected `j >= 1`, with `f(x) = 1 - x` or
/// `f(x) = 1/(1 + x)`. The tail `Σ_{j>J} |log f(q^-j)|` is dominated by
/// `Σ_{j>J} x_j/(1-x_j) <= q^-J / ((q-1)(1-q^-(J+1)))`, so the product moves
/// by at most a relative `2R` once `R <= 1/2`.
fn infinite_product(
    q: &BigRational,
    prec: Precision,
    which: Indices,
    inverse_plus: bool,
) -> Result<Approx> {
    check_q(q)?;
    let work = Precision::new(prec.bits() + 24)?;
    let inv = Real::from_ratio(&q.recip(), work);
    let q_minus_one = Real::from_ratio(&(q - BigRational::one()), work);
    let one = Real::one(work);
    let target = Real::pow2(-(prec.bits() as i64) - 4, work);
    let mut acc = Real::one(work);
    let mut x = Real::one(work);
    let mut j: u64 = 0;
    loop {
        j += 1;
        x = &x * &inv;
        if which.keeps(j) {
            if inverse_plus {
                acc = &acc / &(&one + &x);
            } else {
                acc = &acc * &(&one - &x);
            }
        }
        // x = q^-j, bound on the remaining log-sum
        let r = &x / &(&q_minus_one * &(&one - &(&x * &inv)));
        if r.to_f64() <= 0.5 {
            let err = &(&acc.abs() * &r).mul_pow2(1);
            if *err < target {
                return Ok(Approx {
                    value: acc.with_precision(prec),
                    err: err.with_precision(prec),
                });
            }
        }
    }
}

/// `η_∞(q) = ∏_{j>=1} (1 - q^{-j})`.
pub fn eta_inf(q: &BigRational, prec: Precision) -> Result<Approx> {
    infinite_product(q, prec, Indices::All, false)
}

/// `α(q) = ∏_{j odd} (1 - q^{-j})`.
pub fn alpha(q: &BigRational, prec: Precision) -> Result<Approx> {
    infinite_product(q, prec, Indices::Odd, false)
}

/// `∏_{j even} (1 - q^{-j})`, the complement of [`alpha`] in `η_∞`.
pub fn even_product(q: &BigRational, prec: Precision) -> Result<Approx> {
    infinite_product(q, prec, Indices::Even, false)
}

/// `β(q) = ∏_{j odd} (1 + q^{-j})^{-1}`.
pub fn beta(q: &BigRational, prec: Precision) -> Result<Approx> {
    infinite_product(q, prec, Indices::Odd, true)
}

/// `∏_{j odd} (1 + q^{-j})`, kept separately for the `β` inverse check.
pub fn odd_plus_product(q: &BigRational, prec: Precision) -> Result<Real> {
    check_q(q)?;
    let inv = Real::from_ratio(&q.recip(), prec);
    let one = Real::one(prec);
    let mut acc = Real::one(prec);
    let mut x = Real::one(prec);
    for j in 1..=(4 * prec.bits() as u64) {
        x = &x * &inv;
        if j % 2 == 1 {
            acc = &acc * &(&one + &x);
        }
        if x.ilog2().unwrap_or(i64::MIN) < -(prec.bits() as i64) - 8 {
            break;
        }
    }
    Ok(acc)
}

/// `q^{-m}` for rational `m`, exact when `m` is an integer.
pub fn q_pow_neg(q: &BigRational, m: &BigRational, prec: Precision) -> Result<Real> {
    check_q(q)?;
    if m.is_integer() {
        let e = m
            .to_integer()
            .to_i64()
            .ok_or_else(|| Error::domain("exponent too large"))?;
        let v = if e >= 0 {
            num_traits::pow(q.recip(), e as usize)
        } else {
            num_traits::pow(q.clone(), (-e) as usize)
        };
        return Ok(Real::from_ratio(&v, prec));
    }
    Real::pow_ratio(q, &-m, prec)
}

/// Sum of a series of positive terms `t_0 = 1, t_i = t_{i-1} * ratio(i)`
/// whose ratios eventually decrease to zero. Once a ratio is at most `1/2`
/// and stays non-increasing, the tail after `t_i` is at most `2 t_{i+1}`.
pub(crate) fn superexp_series(prec: Precision, mut ratio: impl FnMut(u64) -> Real) -> (Real, Real) {
    let target = Real::pow2(-(prec.bits() as i64) - 8, prec);
    let mut sum = Real::one(prec);
    let mut term = Real::one(prec);
    let mut i = 0u64;
    loop {
        i += 1;
        let r = ratio(i);
        let next = &term * &r;
        if r.to_f64() <= 0.5 && next < &target * &sum {
            let tail = next.mul_pow2(1);
            return (sum, tail);
        }
        sum = &sum + &next;
        term = next;
    }
}

/// `θ_m(q)`, the normalizer with
/// `θ_m^{-1} = Σ_i 1 / (q^{i(i+m)} η_i(q) ∏_{j<=i} (1 - q^{-m-j}))`,
/// for real `q > 1` and `m > -1`.
pub fn theta_m(q: &BigRational, m: &BigRational, prec: Precision) -> Result<Approx> {
    check_q(q)?;
    if *m <= -BigRational::one() {
        return Err(Error::domain(format!("m must exceed -1, got {m}")));
    }
    let work = Precision::new(prec.bits() + 24)?;
    let inv = Real::from_ratio(&q.recip(), work);
    let u = q_pow_neg(q, m, work)?;
    let one = Real::one(work);
    let mut qi = Real::one(work); // q^{-i}
    let (sum, tail) = superexp_series(work, |_i| {
        let q_prev = qi.clone(); // q^{-(i-1)}
        qi = &qi * &inv;
        // q^{-(2i-1)} u / ((1 - q^{-i})(1 - u q^{-i}))
        let num = &(&(&q_prev * &qi) * &u);
        let den = &(&one - &qi) * &(&one - &(&u * &qi));
        num / &den
    });
    let value = &one / &sum;
    let err = &tail / &(&sum * &sum);
    Ok(Approx {
        value: value.with_precision(prec),
        err: err.with_precision(prec),
    })
}

/// Euler's coefficients `b_k = (-1)^k / ∏_{j=1}^{k} (q^j - 1)`, `k = 0..=K`,
/// so that `∏_{i>=1} (1 - q^{-i} t) = Σ_k b_k t^k`.
pub fn euler_coeffs(q: &BigRational, max_k: usize) -> Result<Vec<BigRational>> {
    check_q(q)?;
    let mut out = Vec::with_capacity(max_k + 1);
    let mut b = BigRational::one();
    let mut qj = BigRational::one();
    out.push(b.clone());
    for _ in 1..=max_k {
        qj *= q;
        b = -b / (&qj - BigRational::one());
        out.push(b.clone());
    }
    Ok(out)
}

/// `|Aut(G)|` by the closed formula for abelian p-groups: with parts sorted
/// ascending `e_1 <= ... <= e_r`, `d_k = max{l : e_l = e_k}`,
/// `c_k = min{l : e_l = e_k}`,
/// `∏_k (p^{d_k} - p^{k-1}) · ∏_j p^{e_j (r - d_j)} · ∏_i p^{(e_i - 1)(r - c_i + 1)}`.
pub fn aut_order(t: &PGroupType) -> BigInt {
    let p = BigInt::from(t.p);
    let mut e: Vec<u32> = t.lambda.clone();
    e.sort_unstable();
    let r = e.len();
    let pow = |k: u64| num_traits::pow(p.clone(), k as usize);
    let mut acc = BigInt::one();
    for k in 1..=r {
        let ek = e[k - 1];
        let d = (1..=r).filter(|&l| e[l - 1] == ek).max().unwrap();
        let c = (1..=r).filter(|&l| e[l - 1] == ek).min().unwrap();
        acc *= pow(d as u64) - pow(k as u64 - 1);
        acc *= pow(ek as u64 * (r - d) as u64);
        acc *= pow((ek as u64 - 1) * (r - c + 1) as u64);
    }
    acc
}

/// Cohen–Lenstra weight `w_m(G) = (η_∞(p)/η_m(p)) / (|G|^m |Aut G|)`.
pub fn w_m(t: &PGroupType, m: u32, prec: Precision) -> Result<Approx> {
    let p = int(t.p as i64);
    let einf = eta_inf(&p, prec)?;
    let denom = eta(m, &p)?
        * BigRational::from_integer(num_traits::pow(t.order(), m as usize) * aut_order(t));
    let d = Real::from_ratio(&denom, prec);
    Ok(Approx {
        value: &einf.value / &d,
        err: &einf.err / &d,
    })
}

/// Second-order coefficient `λ_m(G) = w_m(G)(1 + p^{-m} - p^{rk G})/(p - 1)`.
pub fn lambda_m(t: &PGroupType, m: u32, prec: Precision) -> Result<Approx> {
    let w = w_m(t, m, prec)?;
    let p = int(t.p as i64);
    let factor = (BigRational::one() + num_traits::pow(p.recip(), m as usize)
        - num_traits::pow(p.clone(), t.rank()))
        / (p - BigRational::one());
    let f = Real::from_ratio(&factor, prec);
    Ok(Approx {
        value: &w.value * &f,
        err: &w.err * &f.abs(),
    })
}

/// Exact rational `λ_m/w_m`, the sign of the second-order correction.
pub fn lambda_over_w(t: &PGroupType, m: u32) -> BigRational {
    let p = int(t.p as i64);
    (BigRational::one() + num_traits::pow(p.recip(), m as usize)
        - num_traits::pow(p.clone(), t.rank()))
        / (p - BigRational::one())
}
