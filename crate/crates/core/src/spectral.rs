//! Eigenvectors of the corank chains, moments of their stationary laws,
//! spectral projections of `δ₀`, leading convergence constants, expansion
//! residuals and truncated numerical spectra.
//!
//! An eigenvector is written `v = π·f` with `f(l) = σ^l Σ_i a_i s^{il}`.
//! Detailed balance turns `vP = λv` into `D(l)(f(l-1) - f(l)) +
//! U(l)(f(l+1) - f(l)) = (λ - 1) f(l)`, where `D, U` are the down/up
//! probabilities as polynomials in `x^{-1} = s^{-l}`. Matching the
//! coefficient of `x^j` gives
//! `Σ_t [d_t(σ s^{-(j+t)} - 1) + u_t(σ s^{j+t} - 1)] a_{j+t} = (λ - 1) a_j`.
//! The top coefficient forces `λ = σ s^{-k}`, the rows `0 <= j < k` determine
//! `a_j` from above, and the rows `j < 0` must vanish for `λ` to be admissible.

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::chain::{self, ChainKind, ChainSpec, Dist};
use crate::error::{Error, Result};
use crate::qseries;
use crate::real::{Approx, Precision, Real};
use crate::scalar::{int, Scalar};

/// `σ` and `s` for eigenvectors of a chain, with the coefficients of the
/// down and up probabilities in powers of `s^{-l}`.
#[derive(Debug, Clone)]
pub struct Recurrence<S> {
    pub sigma: i8,
    pub s: S,
    pub d: [S; 3],
    pub u: [S; 3],
}

/// The scaling base `s` as an exact rational: `q`, `q²` or `-q`.
pub fn scaling_base(c: &ChainSpec) -> BigRational {
    let q = c.q().clone();
    match c.kind() {
        ChainKind::Uniform | ChainKind::Symmetric => q,
        ChainKind::AltOdd | ChainKind::AltEven => &q * &q,
        ChainKind::Hermitian => -q,
    }
}

pub fn recurrence<S: Scalar>(c: &ChainSpec, sigma: i8, prec: Precision) -> Result<Recurrence<S>> {
    if sigma != 1 && sigma != -1 {
        return Err(Error::domain("sigma must be +1 or -1"));
    }
    if sigma == -1 && c.kind() != ChainKind::Symmetric {
        return Err(Error::InadmissibleEigenvalue(format!(
            "{c} has no sign-flipped eigenvectors"
        )));
    }
    let r = |x: BigRational| S::from_ratio(&x, prec);
    let q = c.q().clone();
    let qi = q.recip();
    let zero = || S::from_i64(0, prec);
    let one = || S::from_i64(1, prec);
    let s = r(scaling_base(c));
    Ok(match c.kind() {
        ChainKind::Uniform => {
            let u: S = if c.m().is_integer() {
                r(chain::q_pow(&q, -c.m().to_integer().to_i64().unwrap()))
            } else {
                S::from_real(&qseries::q_pow_neg(&q, c.m(), prec)?).ok_or_else(|| {
                    Error::domain(format!("{c}: non-integer m needs real arithmetic"))
                })?
            };
            Recurrence {
                sigma,
                s,
                d: [one(), -(one() + &u), u.clone()],
                u: [zero(), zero(), u * &r(qi)],
            }
        }
        ChainKind::Symmetric => Recurrence {
            sigma,
            s,
            d: [one(), -one(), zero()],
            u: [zero(), r(qi), zero()],
        },
        ChainKind::AltOdd => Recurrence {
            sigma,
            s,
            d: [one(), -(one() + &r(qi.clone())), r(qi.clone())],
            u: [zero(), zero(), r(&qi * &qi * &qi)],
        },
        ChainKind::AltEven => Recurrence {
            sigma,
            s,
            d: [one(), -(one() + &r(q.clone())), r(q)],
            u: [zero(), zero(), r(qi)],
        },
        ChainKind::Hermitian => Recurrence {
            sigma,
            s,
            d: [one(), zero(), -one()],
            u: [zero(), zero(), r(qi)],
        },
    })
}

/// Eigenvector for `λ = σ s^{-k}`, normalized so `a_k = 1`.
#[derive(Debug, Clone)]
pub struct EigVec<S> {
    pub chain: ChainSpec,
    pub sigma: i8,
    pub k: usize,
    pub eigenvalue: S,
    pub coeffs: Vec<S>,
    pub s: S,
}

/// Labels `(σ, k)` of the first `count` eigenvalues in order of decreasing
/// modulus, positive before negative on ties.
pub fn eigen_labels(kind: ChainKind, count: usize) -> Vec<(i8, usize)> {
    let mut out = Vec::with_capacity(count);
    let mut k = 0;
    while out.len() < count {
        out.push((1, k));
        if kind == ChainKind::Symmetric && k > 0 && out.len() < count {
            out.push((-1, k));
        }
        k += 1;
    }
    out
}

pub fn eigvec<S: Scalar>(c: &ChainSpec, sigma: i8, k: usize, prec: Precision) -> Result<EigVec<S>> {
    let rec = recurrence::<S>(c, sigma, prec)?;
    let sig = S::from_i64(sigma as i64, prec);
    let one = S::from_i64(1, prec);
    let zero = S::from_i64(0, prec);
    let s_pow = |e: i64| Scalar::powi(&rec.s, e, prec);
    let lambda = sig.clone() * &s_pow(-(k as i64));
    let mut a = vec![zero.clone(); k + 1];
    a[k] = one.clone();
    // contribution of a_{j+t}, t >= 1, to the x^j equation
    let coupling = |j: i64, a: &[S]| -> S {
        let mut acc = zero.clone();
        for t in 1..3i64 {
            let idx = j + t;
            if idx < 0 || idx as usize > k {
                continue;
            }
            let ai = &a[idx as usize];
            let dn = rec.d[t as usize].clone() * &(sig.clone() * &s_pow(-idx) - &one);
            let up = rec.u[t as usize].clone() * &(sig.clone() * &s_pow(idx) - &one);
            acc = acc + &((dn + &up) * ai);
        }
        acc
    };
    for j in (0..k as i64).rev() {
        // (σ s^{-j} - λ) a_j = -coupling
        let diag = sig.clone() * &s_pow(-j) - &lambda;
        a[j as usize] = -coupling(j, &a) / &diag;
    }
    let scale = a.iter().fold(one.clone(), |m, x| {
        let x = x.abs_value();
        if x > m {
            x
        } else {
            m
        }
    });
    let tol = S::from_real(&Real::pow2(-(prec.bits() as i64) + 32, prec));
    for j in [-1i64, -2] {
        let r = coupling(j, &a);
        let bad = match &tol {
            None => !r.is_zero_value(),
            Some(t) => r.abs_value() > t.clone() * &scale,
        };
        if bad {
            return Err(Error::InadmissibleEigenvalue(format!(
                "{} is not an eigenvalue of {c}",
                lambda.to_real(Precision::new(64).unwrap()).to_sci_string(6)
            )));
        }
    }
    Ok(EigVec {
        chain: c.clone(),
        sigma,
        k,
        eigenvalue: lambda,
        coeffs: a,
        s: rec.s,
    })
}

impl<S: Scalar> EigVec<S> {
    /// `f(l) = σ^l Σ a_i s^{il}`, so that `v(l) = π(l) f(l)`.
    pub fn f_at(&self, l: usize, prec: Precision) -> S {
        let x = Scalar::powi(&self.s, l as i64, prec);
        let mut acc = S::from_i64(0, prec);
        for a in self.coeffs.iter().rev() {
            acc = acc * &x + a;
        }
        if self.sigma < 0 && l % 2 == 1 {
            -acc
        } else {
            acc
        }
    }

    /// `v(l)` for `l` in the support of `pi`.
    pub fn values(&self, pi: &Dist<Real>, prec: Precision) -> Vec<Real> {
        pi.weights
            .iter()
            .enumerate()
            .map(|(l, w)| w * &self.f_at(l, prec).to_real(prec))
            .collect()
    }

    /// `⟨δ₀, v⟩_π = f(0)`.
    pub fn delta0_product(&self, prec: Precision) -> S {
        self.f_at(0, prec)
    }

    /// `|a|_∞`, used for tail bounds.
    fn coeff_sup(&self, prec: Precision) -> Real {
        self.coeffs
            .iter()
            .map(|a| a.to_real(prec).abs())
            .fold(Real::zero(prec), Real::max)
    }
}

/// Smallest `K` such that `Σ_{l>K} π(l) g^l` is below `2^{-bits}` with `g`
/// the growth per state, and the terms shrink at least geometrically by
/// `1/2` beyond `K`.
fn weighted_truncation(c: &ChainSpec, log_growth: f64, bits: u32) -> Result<usize> {
    let p64 = Precision::new(64)?;
    let rows = chain::transition_rows::<Real>(c, 2000, p64)?;
    let ratio = |l: usize| (rows[l].up.to_f64() / rows[l + 1].down.to_f64()).ln();
    let target = -(bits as f64) * std::f64::consts::LN_2;
    let mut log_term = 0.0;
    for k in 1..1999 {
        log_term += ratio(k - 1) + log_growth;
        let r = ratio(k) + log_growth;
        if r < -std::f64::consts::LN_2 && log_term + std::f64::consts::LN_2 < target {
            return Ok(k);
        }
    }
    Err(Error::Truncation(format!(
        "{c}: weighted series did not converge by state 2000"
    )))
}

fn log_abs(x: &BigRational) -> f64 {
    x.abs().to_f64().unwrap().ln()
}

/// Stationary law on a window wide enough that `Σ π(l)|s|^{jl}` beyond it is
/// below `2^{-prec-16}`. Returns the window and the bound.
fn stationary_for_growth(c: &ChainSpec, j: usize, prec: Precision) -> Result<(Dist<Real>, Real)> {
    let g = j as f64 * log_abs(&scaling_base(c));
    let bits = prec.bits() + 16;
    let k = weighted_truncation(c, g, bits)?;
    let pi = chain::stationary(c, k, prec)?;
    Ok((pi, Real::pow2(-(bits as i64) + 1, prec)))
}

/// `M(j) = Σ_i π(i) s^{ji}` by orthogonality of the `σ = 1` eigenvectors
/// to constants: `M(j) = -Σ_{i<j} a_i M(i)` with the coefficients of the
/// eigenvector for `s^{-j}`.
pub fn moments_inductive<S: Scalar>(
    c: &ChainSpec,
    max_j: usize,
    prec: Precision,
) -> Result<Vec<S>> {
    let mut m = vec![S::from_i64(1, prec)];
    for j in 1..=max_j {
        let v = eigvec::<S>(c, 1, j, prec)?;
        let mut acc = S::from_i64(0, prec);
        for (i, a) in v.coeffs[..j].iter().enumerate() {
            acc = acc - &(a.clone() * &m[i]);
        }
        m.push(acc);
    }
    Ok(m)
}

/// `M(j)` by direct summation of the stationary series.
pub fn moment_series(c: &ChainSpec, j: usize, prec: Precision) -> Result<Approx> {
    let (pi, tail) = stationary_for_growth(c, j, prec)?;
    let s = Real::from_ratio(&scaling_base(c), prec);
    let sj = s.powi(j as i64);
    let mut x = Real::one(prec);
    let mut acc = Real::zero(prec);
    for w in &pi.weights {
        acc = &acc + &(w * &x);
        x = &x * &sj;
    }
    Ok(Approx {
        value: acc,
        err: tail,
    })
}

/// Exact moment when the chain parameters are rational, else `Real`.
pub fn moment(c: &ChainSpec, j: usize, prec: Precision) -> Result<Approx> {
    if c.is_exact() {
        let m = moments_inductive::<BigRational>(c, j, prec)?;
        Ok(Approx::exact(Real::from_ratio(&m[j], prec)))
    } else {
        let m = moments_inductive::<Real>(c, j, prec)?;
        Ok(Approx::exact(m[j].clone()))
    }
}

/// `⟨v, v⟩_π = Σ_{i,j} a_i a_j M(i+j)`, valid since `σ² = 1`.
pub fn norm_sq<S: Scalar>(v: &EigVec<S>, moments: &[S], prec: Precision) -> S {
    let mut acc = S::from_i64(0, prec);
    for (i, ai) in v.coeffs.iter().enumerate() {
        for (j, aj) in v.coeffs.iter().enumerate() {
            acc = acc + &(ai.clone() * aj * &moments[i + j]);
        }
    }
    acc
}

/// `⟨v_1, v_2⟩_π` for eigenvectors with the same `σ`.
pub fn inner<S: Scalar>(a: &EigVec<S>, b: &EigVec<S>, moments: &[S], prec: Precision) -> Result<S> {
    if a.sigma != b.sigma {
        return Err(Error::domain(
            "mixed-sign inner products need the series form",
        ));
    }
    let mut acc = S::from_i64(0, prec);
    for (i, ai) in a.coeffs.iter().enumerate() {
        for (j, bj) in b.coeffs.iter().enumerate() {
            acc = acc + &(ai.clone() * bj * &moments[i + j]);
        }
    }
    Ok(acc)
}

/// Spectral component of `δ₀` along one eigenvector.
#[derive(Debug, Clone)]
pub struct Projection {
    pub sigma: i8,
    pub k: usize,
    pub eigenvalue: Real,
    /// `c = ⟨δ₀, v⟩_π / ⟨v, v⟩_π`; the component is `c·v`.
    pub coeff: Real,
    pub norm_sq: Real,
    /// `‖c·v‖_tv`.
    pub tv_norm: Approx,
    /// `c·v` on the evaluation window.
    pub component: Vec<Real>,
}

pub fn project_delta0(c: &ChainSpec, sigma: i8, k: usize, prec: Precision) -> Result<Projection> {
    let (v, ns) = if c.is_exact() {
        let v = eigvec::<BigRational>(c, sigma, k, prec)?;
        let m = moments_inductive::<BigRational>(c, 2 * k, prec)?;
        let ns = norm_sq(&v, &m, prec);
        (to_real_eig(&v, prec), Real::from_ratio(&ns, prec))
    } else {
        let v = eigvec::<Real>(c, sigma, k, prec)?;
        let m = moments_inductive::<Real>(c, 2 * k, prec)?;
        let ns = norm_sq(&v, &m, prec);
        (v, ns)
    };
    let coeff = &v.delta0_product(prec) / &ns;
    let (pi, tail) = stationary_for_growth(c, k, prec)?;
    let component: Vec<Real> = v
        .values(&pi, prec)
        .into_iter()
        .map(|x| &x * &coeff)
        .collect();
    let tv = component
        .iter()
        .fold(Real::zero(prec), |acc, x| &acc + &x.abs());
    let n_coeffs = Real::from_i64(v.coeffs.len() as i64, prec);
    let err = &(&(&tail * &v.coeff_sup(prec)) * &n_coeffs) * &coeff.abs();
    Ok(Projection {
        sigma,
        k,
        eigenvalue: v.eigenvalue.clone(),
        coeff,
        norm_sq: ns,
        tv_norm: Approx { value: tv, err },
        component,
    })
}

fn to_real_eig(v: &EigVec<BigRational>, prec: Precision) -> EigVec<Real> {
    EigVec {
        chain: v.chain.clone(),
        sigma: v.sigma,
        k: v.k,
        eigenvalue: Real::from_ratio(&v.eigenvalue, prec),
        coeffs: v.coeffs.iter().map(|a| Real::from_ratio(a, prec)).collect(),
        s: Real::from_ratio(&v.s, prec),
    }
}

/// How the leading term depends on `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// One constant for all `n`.
    Uniform,
    /// Eigenvalues `±|λ₁|`: one constant for even `n`, another for odd.
    EvenOdd,
    /// A single negative leading eigenvalue: the constant is fixed but the
    /// signed component alternates.
    SignAlternating,
}

#[derive(Debug, Clone)]
pub struct LeadingConstant {
    pub parity: Parity,
    /// Closed-form constant for even `n` (or all `n`).
    pub even: Real,
    /// Closed-form constant for odd `n`.
    pub odd: Real,
    /// `|λ₁|`.
    pub rate: BigRational,
    /// Modulus of the next eigenvalue, the order of the error term.
    pub next_rate: BigRational,
    /// Bound on the implicit constant, `(π(0)^{-2} - 1)^{1/2}`.
    pub cap: Real,
}

impl LeadingConstant {
    pub fn for_n(&self, n: usize) -> &Real {
        if n.is_multiple_of(2) {
            &self.even
        } else {
            &self.odd
        }
    }
}

/// Leading constants from their closed forms.
pub fn leading_constant(c: &ChainSpec, prec: Precision) -> Result<LeadingConstant> {
    let q = c.q().clone();
    let one = BigRational::one();
    let rq = |x: &BigRational| Real::from_ratio(x, prec);
    let pi0 = chain::stationary_zero(c, prec)?.value;
    let cap = (&pi0.powi(-2) - &Real::one(prec)).sqrt()?;
    let qinv = q.recip();
    let (parity, even, odd, rate, next_rate) = match c.kind() {
        ChainKind::Uniform => {
            // 2π(0)u/(q-1), u = q^{-m}
            let u = qseries::q_pow_neg(&q, c.m(), prec)?;
            let k = &(&pi0 * &u).mul_pow2(1) / &rq(&(&q - &one));
            (Parity::Uniform, k.clone(), k, qinv.clone(), &qinv * &qinv)
        }
        ChainKind::Symmetric => {
            let a = qseries::alpha(&q, prec)?.value;
            let even = &(&a * &rq(&q)).mul_pow2(1) / &rq(&(&q * &q - &one));
            let odd = &even / &rq(&(&q - &one));
            (Parity::EvenOdd, even, odd, qinv.clone(), &qinv * &qinv)
        }
        ChainKind::AltOdd => {
            let a = qseries::alpha(&q, prec)?.value;
            let qm = &q - &one;
            let k = &a.mul_pow2(1) / &rq(&(&qm * &qm * (&q + &one)));
            let r = &qinv * &qinv;
            (Parity::Uniform, k.clone(), k, r.clone(), &r * &r)
        }
        ChainKind::AltEven => {
            // 2αq/((q-1)(q+1)): ν' = π' - π'∘q²/(q+1) is positive only at 0
            // and sums to zero, so ‖ν'‖_tv = 2π'(0)q/(q+1)
            let a = qseries::alpha(&q, prec)?.value;
            let k = &(&a * &rq(&q)).mul_pow2(1) / &rq(&((&q - &one) * (&q + &one)));
            let r = &qinv * &qinv;
            (Parity::Uniform, k.clone(), k, r.clone(), &r * &r)
        }
        ChainKind::Hermitian => {
            let b = qseries::beta(&q, prec)?.value;
            let a2 = qseries::alpha(&(&q * &q), prec)?.value;
            let k = &b.mul_pow2(1) / &(&rq(&(&q + &one)) * &a2);
            (
                Parity::SignAlternating,
                k.clone(),
                k,
                qinv.clone(),
                &qinv * &qinv,
            )
        }
    };
    Ok(LeadingConstant {
        parity,
        even,
        odd,
        rate,
        next_rate,
        cap,
    })
}

/// Leading TV constant computed from the spectral projections instead of
/// the closed forms: `‖Σ_{|λ|=|λ₁|} (λ/|λ₁|)ⁿ (δ₀)_λ‖_tv`.
pub fn leading_constant_from_projection(c: &ChainSpec, n: usize, prec: Precision) -> Result<Real> {
    let labels: Vec<(i8, usize)> = match c.kind() {
        ChainKind::Symmetric => vec![(1, 1), (-1, 1)],
        _ => vec![(1, 1)],
    };
    let projs = labels
        .iter()
        .map(|&(sg, k)| project_delta0(c, sg, k, prec))
        .collect::<Result<Vec<_>>>()?;
    let len = projs.iter().map(|p| p.component.len()).max().unwrap();
    let mut total = Real::zero(prec);
    for l in 0..len {
        let mut acc = Real::zero(prec);
        for p in &projs {
            let x = p
                .component
                .get(l)
                .cloned()
                .unwrap_or_else(|| Real::zero(prec));
            let flip = p.eigenvalue.is_negative() && n % 2 == 1;
            acc = if flip { &acc - &x } else { &acc + &x };
        }
        total = &total + &acc.abs();
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct ExpansionRow {
    pub n: usize,
    pub tv_exact: Approx,
    pub tv_leading: Real,
    pub residual: Real,
    /// `|residual| · |λ₂|^{-n}`.
    pub normalized: Real,
}

#[derive(Debug, Clone)]
pub struct ExpansionReport {
    pub chain: ChainSpec,
    pub leading: LeadingConstant,
    pub rows: Vec<ExpansionRow>,
    pub precision: Precision,
}

impl ExpansionReport {
    pub fn max_normalized(&self) -> Real {
        self.rows
            .iter()
            .map(|r| r.normalized.clone())
            .fold(Real::zero(self.precision), Real::max)
    }

    pub fn within_cap(&self) -> bool {
        self.rows.iter().all(|r| r.normalized <= self.leading.cap)
    }

    pub fn to_csv(&self) -> String {
        let mode = if self.chain.is_exact() {
            "exact"
        } else {
            "real"
        };
        let mut out = String::from(
            "n,tv_exact,tv_err,tv_leading,residual,normalized_residual,cap,mode,precision_bits\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.tv_exact.value.to_sci_string(20),
                r.tv_exact.err.to_sci_string(3),
                r.tv_leading.to_sci_string(20),
                r.residual.to_sci_string(12),
                r.normalized.to_sci_string(12),
                self.leading.cap.to_sci_string(12),
                mode,
                self.precision.bits()
            ));
        }
        out
    }
}

/// `‖δ₀Pⁿ - π‖_tv` for `n ∈ ns`, exact iteration against a stationary law
/// wide enough that its tail is negligible.
pub fn tv_to_stationary(c: &ChainSpec, ns: &[usize], prec: Precision) -> Result<Vec<Approx>> {
    let n_max = *ns.iter().max().unwrap_or(&0);
    let k = chain::default_truncation(c, prec)?.max(n_max + 1);
    let pi = chain::stationary(c, k, prec)?;
    let pick = |traj: Vec<Dist<Real>>| -> Vec<Approx> {
        traj.iter()
            .map(|d| chain::tv_distance(d, &pi, prec))
            .collect()
    };
    let traj: Vec<Dist<Real>> = if c.is_exact() {
        let t = chain::delta0_trajectory::<BigRational>(c, n_max, prec)?;
        ns.iter()
            .map(|&n| {
                Dist {
                    weights: t[n].clone(),
                    tail_bound: BigRational::zero(),
                }
                .to_real(prec)
            })
            .collect()
    } else {
        let t = chain::delta0_trajectory::<Real>(c, n_max, prec)?;
        ns.iter()
            .map(|&n| Dist {
                weights: t[n].clone(),
                tail_bound: Real::zero(prec),
            })
            .collect()
    };
    Ok(pick(traj))
}

pub fn expansion_check(c: &ChainSpec, ns: &[usize], prec: Precision) -> Result<ExpansionReport> {
    let leading = leading_constant(c, prec)?;
    let tvs = tv_to_stationary(c, ns, prec)?;
    let rate = Real::from_ratio(&leading.rate, prec);
    let next = Real::from_ratio(&leading.next_rate, prec);
    let rows = ns
        .iter()
        .zip(tvs)
        .map(|(&n, tv)| {
            let lead = leading.for_n(n) * &rate.powi(n as i64);
            let residual = &tv.value - &lead;
            let normalized = &residual.abs() / &next.powi(n as i64);
            ExpansionRow {
                n,
                tv_exact: tv,
                tv_leading: lead,
                residual,
                normalized,
            }
        })
        .collect();
    Ok(ExpansionReport {
        chain: c.clone(),
        leading,
        rows,
        precision: prec,
    })
}

/// `⟨δ₀Pⁿ - π, v⟩_π = Σ_l (δ₀Pⁿ)(l) f(l)` for `λ ≠ 1`, computed exactly.
/// Equals `λⁿ f(0)` since `f` is a right eigenvector.
pub fn signed_inner(c: &ChainSpec, sigma: i8, k: usize, n: usize) -> Result<BigRational> {
    if k == 0 && sigma == 1 {
        return Err(Error::domain(
            "the stationary direction has no signed component",
        ));
    }
    let prec = Precision::default();
    let v = eigvec::<BigRational>(c, sigma, k, prec)?;
    let d = chain::delta0_power::<BigRational>(c, n, prec)?;
    Ok(d.weights
        .iter()
        .enumerate()
        .fold(BigRational::zero(), |acc, (l, w)| acc + w * v.f_at(l, prec)))
}

/// Sum of `⟨δ₀, v⟩²/⟨v, v⟩` over the first `count` eigenvectors; tends to
/// `1/π(0)` when the eigenvectors are complete.
pub fn parseval_sum(c: &ChainSpec, count: usize, prec: Precision) -> Result<Real> {
    let labels = eigen_labels(c.kind(), count);
    let max_k = labels.iter().map(|l| l.1).max().unwrap_or(0);
    let mut total = Real::zero(prec);
    if c.is_exact() {
        let m = moments_inductive::<BigRational>(c, 2 * max_k, prec)?;
        for (sg, k) in labels {
            let v = eigvec::<BigRational>(c, sg, k, prec)?;
            let f0 = v.delta0_product(prec);
            total = &total + &Real::from_ratio(&(&f0 * &f0 / norm_sq(&v, &m, prec)), prec);
        }
    } else {
        let m = moments_inductive::<Real>(c, 2 * max_k, prec)?;
        for (sg, k) in labels {
            let v = eigvec::<Real>(c, sg, k, prec)?;
            let f0 = v.delta0_product(prec);
            total = &total + &(&(&f0 * &f0) / &norm_sq(&v, &m, prec));
        }
    }
    Ok(total)
}

/// Symmetrized `N × N` leading block, `S(i,i) = P(i,i)` and
/// `S(i,i+1) = √(P(i,i+1) P(i+1,i))`.
fn symmetrized_block(c: &ChainSpec, n: usize) -> Result<DMatrix<f64>> {
    let p = Precision::new(128)?;
    let rows = chain::transition_rows::<Real>(c, n, p)?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = rows[i].stay.to_f64();
        if i + 1 < n {
            let off = (&rows[i].up * &rows[i + 1].down).sqrt()?.to_f64();
            m[(i, i + 1)] = off;
            m[(i + 1, i)] = off;
        }
    }
    Ok(m)
}

/// Eigenvalues of the symmetrized `N × N` block, sorted by decreasing
/// modulus with positive values first on ties.
pub fn truncated_spectrum(c: &ChainSpec, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::domain("truncation order must be at least 2"));
    }
    let m = symmetrized_block(c, n)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    // ±λ pairs agree in modulus only up to rounding; list the positive one first
    for i in 1..ev.len() {
        let (a, b) = (ev[i - 1], ev[i]);
        if a < 0.0 && b > 0.0 && (a.abs() - b).abs() <= 1e-12 * b.max(f64::MIN_POSITIVE) {
            ev.swap(i - 1, i);
        }
    }
    Ok(ev)
}

/// `trace(S²)` of the symmetrized block, exactly.
pub fn hilbert_schmidt_block(c: &ChainSpec, n: usize) -> Result<BigRational> {
    let rows = chain::transition_rows::<BigRational>(c, n, Precision::default())?;
    let mut acc = BigRational::zero();
    for i in 0..n {
        acc += &rows[i].stay * &rows[i].stay;
        if i + 1 < n {
            acc += int(2) * &rows[i].up * &rows[i + 1].down;
        }
    }
    Ok(acc)
}

/// The exact eigenvalue list for comparison with [`truncated_spectrum`].
pub fn exact_spectrum(c: &ChainSpec, count: usize) -> Vec<f64> {
    let s = scaling_base(c).to_f64().unwrap();
    eigen_labels(c.kind(), count)
        .into_iter()
        .map(|(sg, k)| sg as f64 * s.powi(-(k as i32)))
        .collect()
}

pub fn spectrum_csv(c: &ChainSpec, n: usize, count: usize) -> Result<String> {
    let ev = truncated_spectrum(c, n)?;
    let exact = exact_spectrum(c, count);
    let mut out = String::from("index,truncated,exact,abs_error,sign,mode,truncation\n");
    for (i, (t, e)) in ev.iter().zip(&exact).enumerate() {
        let sign = if *t < 0.0 { "-" } else { "+" };
        out.push_str(&format!(
            "{i},{t:.17e},{e:.17e},{:.3e},{sign},f64,{n}\n",
            (t - e).abs()
        ));
    }
    Ok(out)
}

/// `‖vP - λv‖_π / ‖v‖_π` on a window of `k` states, the last few excluded
/// since `vP` there needs `v` beyond the window.
pub fn eigen_residual(v: &EigVec<Real>, window: usize, prec: Precision) -> Result<Real> {
    let pi = chain::stationary(&v.chain, window + 1, prec)?;
    let vals = v.values(&pi, prec);
    let rows = chain::transition_rows::<Real>(&v.chain, window + 1, prec)?;
    let mut num = Real::zero(prec);
    let mut den = Real::zero(prec);
    for l in 0..window {
        let mut vp = &vals[l] * &rows[l].stay;
        if l > 0 {
            vp = &vp + &(&vals[l - 1] * &rows[l - 1].up);
        }
        vp = &vp + &(&vals[l + 1] * &rows[l + 1].down);
        let r = &vp - &(&v.eigenvalue * &vals[l]);
        num = &num + &(&(&r * &r) / &pi.weights[l]);
        den = &den + &(&(&vals[l] * &vals[l]) / &pi.weights[l]);
    }
    (&num / &den).sqrt()
}
