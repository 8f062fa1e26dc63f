//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run all with `cargo test --release --test acceptance`, or a subset by
//! number: `cargo test --release --test acceptance -- 3 9`.
//!
//! Sub-checks listed in `KNOWN_UNATTAINABLE` are expected to fail; the run
//! succeeds only if they still fail and every other sub-check passes.

use std::time::Instant;

use corank::chain::{self, ChainKind, ChainSpec};
use corank::classgroup::{
    self, compose, fundamental_discriminants, reduced_forms, FormClass, FundDisc,
};
use corank::ffmat::{corank_hist_with, EnsembleKind, EnsembleSpec, FieldSpec};
use corank::padic::{self, PadicSpec};
use corank::par::Exec;
use corank::qseries::{self, PGroupType};
use corank::scalar::{int, Scalar};
use corank::spectral;
use corank::{Precision, Real};
use num_rational::BigRational;
use rand::Rng;

/// The stated alt-even constant is half the true one; the stated Parseval
/// truncation leaves a deficit near 1.7e-3.
const KNOWN_UNATTAINABLE: &[&str] = &["3.alt-even", "9.parseval-k12"];

struct Check {
    id: String,
    ok: bool,
    detail: String,
}

struct Criterion {
    num: u32,
    title: &'static str,
    checks: Vec<Check>,
}

impl Criterion {
    fn new(num: u32, title: &'static str) -> Self {
        Criterion {
            num,
            title,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, id: &str, ok: bool, detail: String) {
        self.checks.push(Check {
            id: format!("{}.{id}", self.num),
            ok,
            detail,
        });
    }
}

fn prec() -> Precision {
    Precision::default()
}

fn real(x: &BigRational) -> Real {
    Real::from_ratio(x, prec())
}

fn rel_dev(x: &Real, target: &Real) -> f64 {
    (&(x - target) / target).abs().to_f64()
}

fn c1() -> Criterion {
    let mut cr = Criterion::new(1, "uniform leading constant, q=2, m in {0,1}, n=10..24");
    let q = int(2);
    for m in [0i64, 1] {
        let c = ChainSpec::uniform(q.clone(), int(m)).unwrap();
        let pi0 = chain::stationary_zero(&c, prec()).unwrap().value;
        let qm = real(&chain::q_pow(&q, m));
        let konst = &pi0.mul_pow2(1) / &(&real(&(&q - int(1))) * &qm);
        let cap = (&pi0.powi(-2) - &Real::one(prec())).sqrt().unwrap();
        let ns: Vec<usize> = (10..=24).collect();
        let tvs = spectral::tv_to_stationary(&c, &ns, prec()).unwrap();
        let mut worst = 0.0f64;
        let mut at20 = f64::NAN;
        for (&n, tv) in ns.iter().zip(&tvs) {
            let qn = real(&chain::q_pow(&q, n as i64));
            let scaled = &tv.value * &qn;
            let dev = (&scaled - &konst).abs();
            let slack = &tv.err * &qn;
            let bound = &cap / &qn;
            worst = worst.max((&(&dev - &slack) / &bound).to_f64());
            if n == 20 {
                at20 = rel_dev(&scaled, &konst);
            }
        }
        cr.check(
            &format!("m{m}.bound"),
            worst <= 1.0,
            format!(
                "max |d_n q^n - C| / (cap q^-n) = {worst:.4}, C = {}",
                konst.to_sci_string(10)
            ),
        );
        cr.check(
            &format!("m{m}.n20"),
            at20 <= 1e-4,
            format!("relative deviation at n=20 = {at20:.3e}"),
        );
    }
    cr
}

fn c2() -> Criterion {
    let mut cr = Criterion::new(2, "symmetric parity split, q=3, n=20/21");
    let q = int(3);
    let c = ChainSpec::of_kind(ChainKind::Symmetric, q.clone()).unwrap();
    let alpha = qseries::alpha(&q, prec()).unwrap().value;
    let q2m1 = real(&(&q * &q - int(1)));
    let even = &(&alpha * &real(&q)).mul_pow2(1) / &q2m1;
    let odd = &even / &real(&(&q - int(1)));
    let tvs = spectral::tv_to_stationary(&c, &[20, 21], prec()).unwrap();
    for (n, tv, target, name) in [(20, &tvs[0], &even, "even"), (21, &tvs[1], &odd, "odd")] {
        let scaled = &tv.value * &real(&chain::q_pow(&q, n));
        let r = rel_dev(&scaled, target);
        cr.check(
            name,
            r <= 1e-3,
            format!(
                "n={n}: d_n q^n = {}, relative deviation {r:.3e}",
                scaled.to_sci_string(10)
            ),
        );
        let proj = spectral::leading_constant_from_projection(&c, n as usize, prec()).unwrap();
        let r = rel_dev(&proj, target);
        cr.check(
            &format!("{name}.projection"),
            r <= 1e-30,
            format!("spectral projection route differs by {r:.1e}"),
        );
    }
    cr
}

fn c3() -> Criterion {
    let mut cr = Criterion::new(3, "alternating constants, q=2, n=12");
    let q = int(2);
    let one = int(1);
    let alpha = qseries::alpha(&q, prec()).unwrap().value;
    let qm = &q - &one;
    let stated_odd = &alpha.mul_pow2(1) / &real(&(&qm * &qm * (&q + &one)));
    let stated_even = &(&alpha * &real(&q)) / &real(&(&qm * (&q + &one)));
    let q2n = real(&chain::q_pow(&q, 24));
    for (kind, stated, id) in [
        (ChainKind::AltOdd, &stated_odd, "alt-odd"),
        (ChainKind::AltEven, &stated_even, "alt-even"),
    ] {
        let c = ChainSpec::of_kind(kind, q.clone()).unwrap();
        let tv = &spectral::tv_to_stationary(&c, &[12], prec()).unwrap()[0];
        let scaled = &tv.value * &q2n;
        let r = rel_dev(&scaled, stated);
        cr.check(
            id,
            r <= 1e-3,
            format!(
                "d_12 q^24 = {}, stated {}, relative deviation {r:.3e}",
                scaled.to_sci_string(10),
                stated.to_sci_string(10)
            ),
        );
        if kind == ChainKind::AltEven {
            let corrected = stated.mul_pow2(1);
            let r = rel_dev(&scaled, &corrected);
            cr.check(
                "alt-even.corrected",
                r <= 1e-3,
                format!(
                    "against 2αq/((q-1)(q+1)) = {}: relative deviation {r:.3e}",
                    corrected.to_sci_string(10)
                ),
            );
            let proj = spectral::leading_constant_from_projection(&c, 12, prec()).unwrap();
            let r = rel_dev(&proj, &corrected);
            cr.check(
                "alt-even.projection",
                r <= 1e-30,
                format!("spectral projection agrees with the corrected constant to {r:.1e}"),
            );
        }
    }
    cr
}

fn c4() -> Criterion {
    let mut cr = Criterion::new(4, "hermitian constant and sign alternation, q=3");
    let q = int(3);
    let c = ChainSpec::of_kind(ChainKind::Hermitian, q.clone()).unwrap();
    let beta = qseries::beta(&q, prec()).unwrap().value;
    let alpha9 = qseries::alpha(&int(9), prec()).unwrap().value;
    let target = &beta.mul_pow2(1) / &alpha9.mul_pow2(2);
    let tv = &spectral::tv_to_stationary(&c, &[16], prec()).unwrap()[0];
    let scaled = &tv.value * &real(&chain::q_pow(&q, 16));
    let r = rel_dev(&scaled, &target);
    cr.check(
        "n16",
        r <= 1e-3,
        format!(
            "d_16 q^16 = {}, relative deviation {r:.3e}",
            scaled.to_sci_string(10)
        ),
    );

    let inner: Vec<BigRational> = (1..=8)
        .map(|n| spectral::signed_inner(&c, 1, 1, n).unwrap())
        .collect();
    let alternates = inner.windows(2).all(|w| (&w[0] * &w[1]) < int(0));
    cr.check(
        "inner-sign",
        alternates,
        format!("signs for n=1..8: {}", signs(&inner)),
    );

    let traj = chain::delta0_trajectory::<BigRational>(&c, 8, prec()).unwrap();
    let pi0 = chain::stationary_zero(&c, prec()).unwrap().value;
    let resid: Vec<Real> = (1..=8)
        .map(|n| &traj[n][0].to_real(prec()) - &pi0)
        .collect();
    let alternates = resid.windows(2).all(|w| w[0].signum() * w[1].signum() < 0);
    cr.check(
        "residual-sign",
        alternates,
        format!(
            "(δ₀Pⁿ)(0) - π(0) signs for n=1..8: {}",
            resid
                .iter()
                .map(|x| if x.is_negative() { '-' } else { '+' })
                .collect::<String>()
        ),
    );
    cr
}

fn signs(v: &[BigRational]) -> String {
    v.iter()
        .map(|x| if *x < int(0) { '-' } else { '+' })
        .collect()
}

fn c5() -> Criterion {
    let mut cr = Criterion::new(5, "truncated spectra N=60, q in {2,3}");
    for q in [2i64, 3] {
        for kind in ChainKind::ALL {
            let c = ChainSpec::of_kind(kind, int(q)).unwrap();
            let ev = spectral::truncated_spectrum(&c, 60).unwrap();
            let exact = spectral::exact_spectrum(&c, 6);
            let err = ev
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            cr.check(
                &format!("{}.q{q}", kind.name()),
                err <= 1e-8,
                format!("top 6 max error {err:.2e}"),
            );
            if kind == ChainKind::Symmetric {
                let gap = ev
                    .iter()
                    .map(|x| (x + 1.0).abs())
                    .fold(f64::INFINITY, f64::min);
                cr.check(
                    &format!("symmetric.q{q}.no-minus-one"),
                    gap > 1e-3,
                    format!("closest eigenvalue to -1 is {gap:.4} away"),
                );
            }
        }
    }
    cr
}

fn c6() -> Criterion {
    let mut cr = Criterion::new(
        6,
        "cokernel expansion, p in {2,3}, m in {0,1}, |G| <= p^2, n=2..10",
    );
    for p in [2u64, 3] {
        for m in [0u32, 1] {
            for t in PGroupType::enumerate(p, 2, 2).unwrap() {
                let e = padic::cokernel_expansion(m, &t, prec()).unwrap();
                let mut worst = 0.0f64;
                let mut max_diff = Real::zero(prec());
                for n in 2..=10u32 {
                    let r = e.residual(n, prec()).unwrap();
                    worst = worst.max((&r / &e.cap).to_f64());
                    let exact = real(&padic::cokernel_measure_exact(n, m, &t).unwrap());
                    let via_chain = padic::cokernel_measure_chain(n, m, &t, prec())
                        .unwrap()
                        .value;
                    max_diff = max_diff.max((&exact - &via_chain).abs());
                }
                let id = format!("p{p}.m{m}.{t}");
                cr.check(
                    &format!("{id}.cap"),
                    worst <= 1.0,
                    format!("max residual/cap = {worst:.4}"),
                );
                let tol = Real::from_f64(1e-30, prec());
                cr.check(
                    &format!("{id}.chain"),
                    max_diff <= tol,
                    format!("max |exact - chain| = {}", max_diff.to_sci_string(3)),
                );
            }
        }
    }
    cr
}

fn c7() -> Criterion {
    let mut cr = Criterion::new(
        7,
        "Monte Carlo: five ensembles n=6 at 1e6 trials, SNF p=2 n=3 at 1e5",
    );
    let trials = 1_000_000u64;
    let cases = [
        (EnsembleKind::Uniform { n: 6, m: 0 }, 2),
        (EnsembleKind::Symmetric { n: 6 }, 2),
        (EnsembleKind::Alternating { n: 6 }, 2),
        (EnsembleKind::Hermitian { n: 6 }, 4),
        (EnsembleKind::SkewCentrosymmetric { n: 6 }, 3),
    ];
    for (i, (kind, q)) in cases.into_iter().enumerate() {
        let e = EnsembleSpec::new(kind, FieldSpec::of_order(q).unwrap()).unwrap();
        let exact = chain::ensemble_corank_dist(&e).unwrap();
        let h = corank_hist_with(&e, trials, 7000 + i as u64, Exec::Parallel).unwrap();
        let tv: f64 = exact
            .iter()
            .enumerate()
            .map(|(r, w)| (h.frequency(r) - w.to_real(prec()).to_f64()).abs())
            .sum();
        cr.check(
            &format!("{}.F{q}", kind.name()),
            tv <= 0.01,
            format!("TV = {tv:.5}"),
        );
    }
    let spec = PadicSpec::new(2, 3, 0, 24).unwrap();
    let samples = 100_000u64;
    let h = padic::cokernel_hist(spec, samples, 71, Exec::Parallel).unwrap();
    let used = (samples - h.saturated) as f64;
    let mut worst = 0.0f64;
    for t in PGroupType::enumerate(2, 6, 3).unwrap() {
        let pe = real(&padic::cokernel_measure_exact(3, 0, &t).unwrap()).to_f64();
        let sigma = (used * pe * (1.0 - pe)).sqrt().max(1.0);
        worst = worst.max((h.count(&t) as f64 - used * pe).abs() / sigma);
    }
    cr.check(
        "snf",
        worst <= 4.0,
        format!(
            "max deviation {worst:.2}σ over types with |G| <= 2^6, {} saturated",
            h.saturated
        ),
    );
    cr
}

fn c8() -> Criterion {
    let mut cr = Criterion::new(8, "class groups at X=1e6");
    let x = 1_000_000u64;
    let discs = fundamental_discriminants(x).unwrap();
    let expected = 3.0 * x as f64 / std::f64::consts::PI.powi(2);
    let dev = (discs.len() as f64 - expected).abs();
    cr.check(
        "count",
        dev <= 5.0 * (x as f64).sqrt(),
        format!("{} discriminants, |count - 3X/π²| = {dev:.1}", discs.len()),
    );

    let forms = reduced_forms(FundDisc::new(-23).unwrap());
    let want = [
        FormClass { a: 1, b: 1, c: 6 },
        FormClass { a: 2, b: -1, c: 3 },
        FormClass { a: 2, b: 1, c: 3 },
    ];
    cr.check(
        "h(-23)",
        forms == want,
        format!("{} forms: {forms:?}", forms.len()),
    );

    let dir = std::env::temp_dir().join(format!("corank-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cache = dir.join("p3.bin");
    let avg = classgroup::dh_average(x, Some(&cache), Exec::Parallel).unwrap();
    cr.check(
        "dh-average",
        (1.8..=2.2).contains(&avg),
        format!("mean of 3^rk3 = {avg:.4}"),
    );

    let t = PGroupType::new(3, vec![1]).unwrap();
    let rows = classgroup::error_series(&t, x, 100, Some(&cache), Exec::Parallel).unwrap();
    let last = rows.last().unwrap();
    let direct = classgroup::sylow_types(3, x, Some(&cache), Exec::Parallel)
        .unwrap()
        .iter()
        .filter(|(_, g)| *g == t)
        .count() as u64;
    let ok = last.x == x
        && last.count_all == discs.len() as u64
        && last.count_match == direct
        && rows.windows(2).all(|w| {
            w[0].x < w[1].x
                && w[0].count_all <= w[1].count_all
                && w[0].count_match <= w[1].count_match
        })
        && rows.iter().all(|r| {
            r.count_match <= r.count_all
                && r.e.is_finite()
                && r.log_ratio.is_none_or(f64::is_finite)
        })
        && classgroup::error_series_csv(&rows).lines().count() == rows.len() + 1;
    cr.check(
        "error-series",
        ok,
        format!(
            "{} rows, final count {}/{}, E = {:.1}, log|E|/log X = {:.3}",
            rows.len(),
            last.count_match,
            last.count_all,
            last.e,
            last.log_ratio.unwrap_or(f64::NAN)
        ),
    );
    let _ = std::fs::remove_dir_all(&dir);
    cr
}

fn c9() -> Criterion {
    let mut cr = Criterion::new(9, "property suites");
    let tol = Real::pow2(-200, prec());
    let mut worst_balance = Real::zero(prec());
    let mut stochastic = true;
    for kind in ChainKind::ALL {
        for q in [int(2), int(3), int(4), corank::scalar::ratio(5, 2)] {
            let c = ChainSpec::of_kind(kind, q).unwrap();
            stochastic &= chain::transition_rows::<BigRational>(&c, 200, prec())
                .unwrap()
                .iter()
                .all(chain::row_is_stochastic);
            let rows = chain::transition_rows::<Real>(&c, 41, prec()).unwrap();
            for i in 0..40 {
                let a = chain::stationary_closed_form(&c, i, prec()).unwrap();
                let b = chain::stationary_closed_form(&c, i + 1, prec()).unwrap();
                let lhs = &a * &rows[i].up;
                worst_balance = worst_balance.max(&(&lhs - &(&b * &rows[i + 1].down)).abs() / &lhs);
            }
        }
    }
    cr.check(
        "reversibility",
        worst_balance < tol,
        format!(
            "max relative detailed-balance defect {}",
            worst_balance.to_sci_string(3)
        ),
    );
    cr.check(
        "stochastic",
        stochastic,
        "rows 0..=200 sum to 1 exactly for all kinds, q in {2,3,4,5/2}".into(),
    );

    let c = ChainSpec::uniform(int(2), int(0)).unwrap();
    let target = chain::stationary_zero(&c, prec()).unwrap().value.powi(-1);
    let gap = |k| (&target - &spectral::parseval_sum(&c, k, prec()).unwrap()).to_f64();
    let g12 = gap(12);
    cr.check(
        "parseval-k12",
        g12.abs() <= 1e-6,
        format!(
            "1/π(0) - partial sum: {g12:.3e} at K=12, {:.3e} at K=24, {:.3e} at K=32",
            gap(24),
            gap(32)
        ),
    );

    let hs = real(&spectral::hilbert_schmidt_block(&c, 60).unwrap());
    let want = real(&(int(4) / int(3)));
    let d = (&hs - &want).abs().to_f64();
    cr.check(
        "hilbert-schmidt",
        d <= 1e-6,
        format!("|trace S² - (1-q^-2)^-1| = {d:.2e} at N=60"),
    );

    let discs = fundamental_discriminants(100_000).unwrap();
    let mut rng = corank::ffmat::trial_rng(9, 0);
    let mut ok = true;
    for _ in 0..200 {
        let d = discs[rng.random_range(0..discs.len())];
        let forms = reduced_forms(d);
        let mut pick = || forms[rng.random_range(0..forms.len())];
        let (x, y, z) = (pick(), pick(), pick());
        let id = FormClass::principal(d.d());
        ok &= compose(&compose(&x, &y), &z) == compose(&x, &compose(&y, &z))
            && compose(&x, &y) == compose(&y, &x)
            && compose(&x, &id) == x
            && compose(&x, &x.inverse()) == id;
    }
    cr.check("group-law", ok, "200 random D with |D| < 1e5".into());
    cr
}

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let all: [(u32, fn() -> Criterion); 9] = [
        (1, c1),
        (2, c2),
        (3, c3),
        (4, c4),
        (5, c5),
        (6, c6),
        (7, c7),
        (8, c8),
        (9, c9),
    ];
    let mut unexpected = Vec::new();
    for (num, run) in all {
        if !wanted.is_empty() && !wanted.contains(&num) {
            continue;
        }
        let start = Instant::now();
        let cr = run();
        let pass = cr.checks.iter().all(|c| c.ok);
        let known = cr
            .checks
            .iter()
            .any(|c| !c.ok && KNOWN_UNATTAINABLE.contains(&c.id.as_str()));
        println!(
            "{} criterion {}: {} ({:.1}s){}",
            if pass { "PASS" } else { "FAIL" },
            cr.num,
            cr.title,
            start.elapsed().as_secs_f64(),
            if known {
                " [known unattainable, see README]"
            } else {
                ""
            }
        );
        for c in &cr.checks {
            println!(
                "    {} {:<28} {}",
                if c.ok { "ok  " } else { "FAIL" },
                c.id,
                c.detail
            );
            let expected_fail = KNOWN_UNATTAINABLE.contains(&c.id.as_str());
            if c.ok == expected_fail {
                unexpected.push(c.id.clone());
            }
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected outcomes: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
