//! Cokernels of Haar-random `n × (n+m)` matrices over `Z_p`: the exact
//! finite-`n` measure, its chain reformulation, the two-term expansion in
//! `p^{-n}`, and a Smith-normal-form Monte Carlo check mod `p^N`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{self, ChainSpec};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::qseries::{self, aut_order, eta, is_prime, PGroupType};
use crate::real::{Approx, Precision, Real};
use crate::scalar::int;

/// `μ(coker ≅ G)` for Haar `n × (n+m)` matrices:
/// `|G|^{-m} |Aut G|^{-1} η_{n+m} η_n / (η_m η_{n-r})`, zero when `r > n`.
pub fn cokernel_measure_exact(n: u32, m: u32, t: &PGroupType) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let r = t.rank() as u32;
    if r > n {
        return Ok(BigRational::zero());
    }
    let p = int(t.p() as i64);
    let num = eta(n + m, &p)? * eta(n, &p)?;
    let den = eta(m, &p)?
        * eta(n - r, &p)?
        * BigRational::from_integer(num_traits::pow(t.order(), m as usize) * aut_order(t));
    Ok(num / den)
}

/// Probability that a uniform `n × (n+m)` matrix over `F_p` has corank `r`:
/// `p^{-r(r+m)} η_{n+m} η_n / (η_{n-r} η_r η_{r+m})`.
pub fn corank_probability(p: u64, n: u32, m: u32, r: u32) -> Result<BigRational> {
    if r > n {
        return Ok(BigRational::zero());
    }
    let q = int(p as i64);
    let scale = num_traits::pow(q.recip(), (r * (r + m)) as usize);
    Ok(scale * eta(n + m, &q)? * eta(n, &q)? / (eta(n - r, &q)? * eta(r, &q)? * eta(r + m, &q)?))
}

/// The same measure through the corank chain:
/// `(w_m(G) / π_m(r)) · (δ₀P_mⁿ)(r)`.
pub fn cokernel_measure_chain(n: u32, m: u32, t: &PGroupType, prec: Precision) -> Result<Approx> {
    let r = t.rank();
    if r > n as usize {
        return Ok(Approx::exact(Real::zero(prec)));
    }
    let c = ChainSpec::uniform(int(t.p() as i64), int(m as i64))?;
    let work = Precision::new(prec.bits() + 32)?;
    let d = chain::delta0_power::<BigRational>(&c, n as usize, work)?;
    let w = qseries::w_m(t, m, work)?;
    let pi_r = chain::stationary_closed_form(&c, r, work)?;
    let pi0 = chain::stationary_zero(&c, work)?;
    let dr = Real::from_ratio(&d.weights[r], work);
    let value = &(&w.value * &dr) / &pi_r;
    // relative errors of w and π(0) (which scales every π(r)) add
    let rel = &(&w.err / &w.value).abs() + &(&pi0.err / &pi0.value).abs();
    let err = &(&value * &rel).abs() + &Real::pow2(-(work.bits() as i64) + 16, work);
    Ok(Approx {
        value: value.with_precision(prec),
        err: err.with_precision(prec),
    })
}

/// `μ = w + λ p^{-n} + O(p^{-2n})` with a cap on the implicit constant.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub group: PGroupType,
    pub m: u32,
    pub w: Approx,
    pub lambda: Approx,
    /// `(η_m(p)²/η_∞(p)² - 1)^{1/2}`.
    pub cap: Real,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionRow {
    pub n: u32,
    pub exact: String,
    /// `|μ_exact - w - λ p^{-n}| · p^{2n}`.
    pub normalized_residual: f64,
    pub within_cap: bool,
}

pub fn cokernel_expansion(m: u32, t: &PGroupType, prec: Precision) -> Result<Expansion> {
    let p = int(t.p() as i64);
    let w = qseries::w_m(t, m, prec)?;
    let lambda = qseries::lambda_m(t, m, prec)?;
    let einf = qseries::eta_inf(&p, prec)?.value;
    let em = Real::from_ratio(&eta(m, &p)?, prec);
    let ratio = &em / &einf;
    let cap = (&(&ratio * &ratio) - &Real::one(prec)).sqrt()?;
    Ok(Expansion {
        group: t.clone(),
        m,
        w,
        lambda,
        cap,
    })
}

impl Expansion {
    pub fn residual(&self, n: u32, prec: Precision) -> Result<Real> {
        let exact = Real::from_ratio(&cokernel_measure_exact(n, self.m, &self.group)?, prec);
        let pinv = Real::from_ratio(&int(self.group.p() as i64).recip(), prec);
        let pn = pinv.powi(n as i64);
        let resid = &(&exact - &self.w.value) - &(&self.lambda.value * &pn);
        Ok(&resid.abs() / &(&pn * &pn))
    }

    pub fn validate(
        &self,
        ns: impl IntoIterator<Item = u32>,
        prec: Precision,
    ) -> Result<Vec<ExpansionRow>> {
        ns.into_iter()
            .map(|n| {
                let exact = cokernel_measure_exact(n, self.m, &self.group)?;
                let r = self.residual(n, prec)?;
                Ok(ExpansionRow {
                    n,
                    exact: Real::from_ratio(&exact, prec).to_sci_string(30),
                    normalized_residual: r.to_f64(),
                    within_cap: r <= self.cap,
                })
            })
            .collect()
    }
}

/// Shape and precision for sampling matrices mod `p^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PadicSpec {
    pub p: u64,
    pub n: usize,
    pub m: usize,
    /// Entries are uniform mod `p^N`.
    pub big_n: u32,
}

impl PadicSpec {
    pub fn new(p: u64, n: usize, m: usize, big_n: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        if n == 0 || big_n == 0 {
            return Err(Error::domain("n and N must be positive"));
        }
        match p.checked_pow(big_n) {
            Some(x) if x < (1u64 << 62) => {}
            _ => return Err(Error::domain(format!("p^N = {p}^{big_n} exceeds 2^62"))),
        }
        Ok(PadicSpec { p, n, m, big_n })
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.big_n)
    }
}

/// A sampled matrix, row major, entries in `[0, p^N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicMatrixSample {
    pub spec: PadicSpec,
    pub entries: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SnfOutcome {
    Type(PGroupType),
    /// Some Smith diagonal entry vanishes mod `p^N`.
    Saturated,
}

impl PadicMatrixSample {
    pub fn random<R: Rng + ?Sized>(spec: PadicSpec, rng: &mut R) -> Self {
        let modulus = spec.modulus();
        let entries = (0..spec.n * (spec.n + spec.m))
            .map(|_| rng.random_range(0..modulus))
            .collect();
        PadicMatrixSample { spec, entries }
    }

    pub fn from_entries(spec: PadicSpec, entries: Vec<u64>) -> Result<Self> {
        if entries.len() != spec.n * (spec.n + spec.m) {
            return Err(Error::domain("entry count does not match the shape"));
        }
        let modulus = spec.modulus();
        Ok(PadicMatrixSample {
            spec,
            entries: entries.into_iter().map(|e| e % modulus).collect(),
        })
    }
}

fn valuation(mut x: u64, p: u64) -> u32 {
    let mut v = 0;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn inv_mod(a: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1, "not a unit");
    t0.rem_euclid(m as i128) as u64
}

/// Cokernel type of `M` from its Smith form mod `p^N`, found by repeatedly
/// moving a minimal-valuation entry to the pivot and clearing its row and
/// column.
pub fn snf_type(s: &PadicMatrixSample) -> SnfOutcome {
    let PadicSpec { p, n, m, .. } = s.spec;
    let md = s.spec.modulus();
    let cols = n + m;
    let mut a = s.entries.clone();
    let mut vals = Vec::with_capacity(n);
    for t in 0..n {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in t..n {
            for j in t..cols {
                let x = a[i * cols + j];
                if x != 0 {
                    let v = valuation(x, p);
                    if best.is_none_or(|b| v < b.0) {
                        best = Some((v, i, j));
                    }
                }
            }
            if best.is_some_and(|b| b.0 == 0) {
                break;
            }
        }
        let Some((v, bi, bj)) = best else {
            return SnfOutcome::Saturated;
        };
        if bi != t {
            for j in 0..cols {
                a.swap(t * cols + j, bi * cols + j);
            }
        }
        if bj != t {
            for i in 0..n {
                a.swap(i * cols + t, i * cols + bj);
            }
        }
        let pv = p.pow(v);
        let unit_inv = inv_mod(a[t * cols + t] / pv, md);
        for i in t + 1..n {
            let x = a[i * cols + t];
            if x == 0 {
                continue;
            }
            let f = mul_mod(x / pv, unit_inv, md);
            for j in t..cols {
                let sub = mul_mod(f, a[t * cols + j], md);
                a[i * cols + j] = (a[i * cols + j] + md - sub) % md;
            }
        }
        // rows below are cleared, so clearing the pivot row only touches it
        for j in t + 1..cols {
            a[t * cols + j] = 0;
        }
        vals.push(v);
    }
    let lambda = vals.into_iter().filter(|&v| v > 0).collect();
    SnfOutcome::Type(PGroupType::new(p, lambda).expect("valid partition"))
}

/// Empirical cokernel types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CokernelHist {
    pub spec: PadicSpec,
    pub trials: u64,
    pub seed: u64,
    pub saturated: u64,
    pub counts: BTreeMap<String, u64>,
}

pub fn cokernel_hist(spec: PadicSpec, trials: u64, seed: u64, exec: Exec) -> Result<CokernelHist> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let (counts, saturated) = par::map_reduce(
        exec,
        trials,
        1024,
        || (BTreeMap::<PGroupType, u64>::new(), 0u64),
        |acc, t| {
            let mut rng = base.clone();
            rng.set_stream(t);
            match snf_type(&PadicMatrixSample::random(spec, &mut rng)) {
                SnfOutcome::Type(g) => *acc.0.entry(g).or_insert(0) += 1,
                SnfOutcome::Saturated => acc.1 += 1,
            }
        },
        |mut a, b| {
            for (k, v) in b.0 {
                *a.0.entry(k).or_insert(0) += v;
            }
            (a.0, a.1 + b.1)
        },
    );
    Ok(CokernelHist {
        spec,
        trials,
        seed,
        saturated,
        counts: counts
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
    })
}

impl CokernelHist {
    pub fn count(&self, t: &PGroupType) -> u64 {
        *self.counts.get(&t.to_string()).unwrap_or(&0)
    }

    /// `type,count,frequency,exact,sigma` rows for every type with
    /// `log_p |G| <= max_log`, then a saturated row.
    pub fn to_csv(&self, max_log: u32) -> Result<String> {
        let mut out = String::from("type,count,frequency,exact,binomial_sigma\n");
        let used = (self.trials - self.saturated) as f64;
        for t in PGroupType::enumerate(self.spec.p, max_log, self.spec.n)? {
            let exact = cokernel_measure_exact(self.spec.n as u32, self.spec.m as u32, &t)?;
            let pe = Real::from_ratio(&exact, Precision::default()).to_f64();
            let c = self.count(&t);
            out.push_str(&format!(
                "\"{t}\",{c},{:.8},{pe:.8},{:.3e}\n",
                c as f64 / used,
                (pe * (1.0 - pe) / used).sqrt()
            ));
        }
        out.push_str(&format!(
            "saturated,{},{:.8},,\n",
            self.saturated,
            self.saturated as f64 / self.trials as f64
        ));
        Ok(out)
    }
}
