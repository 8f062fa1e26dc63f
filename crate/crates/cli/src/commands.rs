use std::io::Write;
use std::path::Path;

use corank::chain::{self, ChainKind, ChainSpec};
use corank::classgroup;
use corank::ffmat::{self, CorankHist, EnsembleKind, EnsembleSpec, FieldSpec};
use corank::padic::{self, PadicSpec};
use corank::par::Exec;
use corank::qseries::PGroupType;
use corank::scalar::Scalar;
use corank::spectral;
use corank::{Error, Real, Result};
use num_rational::BigRational;
use serde::Serialize;

use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.command.as_str() {
        "chain" => chain_cmd(cfg),
        "simulate" => simulate(cfg),
        "spectrum" => spectrum(cfg),
        "expansion" => expansion(cfg),
        "cokernel" => cokernel(cfg),
        "snf" => snf(cfg),
        "classgroup" => classgroup_cmd(cfg),
        other => Err(Error::domain(format!("unknown command {other}"))),
    }
}

fn write_out(cfg: &RunConfig, body: &str) -> Result<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

/// CSV preceded by one `#` line carrying the resolved config.
fn emit_csv(cfg: &RunConfig, csv: &str) -> Result<()> {
    write_out(cfg, &format!("# run_config: {}\n{csv}", cfg.header_json()))
}

fn chain_spec(cfg: &RunConfig) -> Result<ChainSpec> {
    let kind = ChainKind::parse(cfg.require("kind")?)?;
    ChainSpec::new(kind, cfg.ratio("q")?, cfg.ratio("m")?)
}

fn chain_cmd(cfg: &RunConfig) -> Result<()> {
    let c = chain_spec(cfg)?;
    let n: usize = cfg.num("n")?;
    let prec = cfg.precision();
    if !cfg.flag("tv") {
        let csv = if c.is_exact() {
            chain::delta0_power::<BigRational>(&c, n, prec)?.to_csv()
        } else {
            chain::delta0_power::<Real>(&c, n, prec)?.to_csv()
        };
        return emit_csv(cfg, &csv);
    }
    let ns: Vec<usize> = (0..=n).collect();
    let tvs = spectral::tv_to_stationary(&c, &ns, prec)?;
    let lead = spectral::leading_constant(&c, prec)?;
    let rate = Real::from_ratio(&lead.rate, prec);
    let hermitian = c.kind() == ChainKind::Hermitian;
    let mut csv = String::from("n,tv_exact,tv_err,scaled_tv,leading_constant");
    let mut first = Vec::new();
    let mut pi0 = Real::zero(prec);
    if hermitian {
        csv.push_str(",leading_inner,signed_residual");
        first = chain::delta0_trajectory::<BigRational>(&c, n, prec)?
            .into_iter()
            .map(|d| d[0].clone())
            .collect();
        pi0 = chain::stationary_zero(&c, prec)?.value;
    }
    csv.push('\n');
    for (&k, tv) in ns.iter().zip(&tvs) {
        let scaled = &tv.value / &rate.powi(k as i64);
        csv.push_str(&format!(
            "{k},{},{},{},{}",
            tv.value.to_sci_string(20),
            tv.err.to_sci_string(3),
            scaled.to_sci_string(15),
            lead.for_n(k).to_sci_string(15)
        ));
        if hermitian {
            let inner = if k == 0 {
                Real::one(prec)
            } else {
                spectral::signed_inner(&c, 1, 1, k)?.to_real(prec)
            };
            let resid = &first[k].to_real(prec) - &pi0;
            csv.push_str(&format!(
                ",{},{}",
                inner.to_sci_string(15),
                resid.to_sci_string(15)
            ));
        }
        csv.push('\n');
    }
    emit_csv(cfg, &csv)
}

fn ensemble(cfg: &RunConfig) -> Result<EnsembleSpec> {
    let n: usize = cfg.num("n")?;
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let kind = match cfg.require("ensemble")? {
        "uniform" => EnsembleKind::Uniform {
            n,
            m: cfg.num("m")?,
        },
        "symmetric" => EnsembleKind::Symmetric { n },
        "alternating" => EnsembleKind::Alternating { n },
        "hermitian" => EnsembleKind::Hermitian { n },
        "skew_centrosymmetric" | "skew-centrosymmetric" => EnsembleKind::SkewCentrosymmetric { n },
        other => return Err(Error::domain(format!("unknown ensemble {other:?}"))),
    };
    EnsembleSpec::new(kind, FieldSpec::of_order(cfg.num("q")?)?)
}

#[derive(Serialize)]
struct OverlayRow {
    corank: usize,
    count: u64,
    empirical: f64,
    exact: f64,
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    config: &'a RunConfig,
    histogram: CorankHist,
    overlay: Vec<OverlayRow>,
    tv: f64,
    threshold: f64,
    tv_ok: bool,
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let spec = ensemble(cfg)?;
    let trials: u64 = cfg.num("trials")?;
    let prec = cfg.precision();
    let hist = ffmat::corank_hist_with(&spec, trials, cfg.seed, Exec::Parallel)?;
    let exact: Vec<f64> = chain::ensemble_corank_dist(&spec)?
        .iter()
        .map(|w| w.to_real(prec).to_f64())
        .collect();
    let overlay: Vec<OverlayRow> = exact
        .iter()
        .enumerate()
        .map(|(r, &e)| OverlayRow {
            corank: r,
            count: *hist.counts.get(&r).unwrap_or(&0),
            empirical: hist.frequency(r),
            exact: e,
        })
        .collect();
    let tv: f64 = overlay.iter().map(|r| (r.empirical - r.exact).abs()).sum();
    let k_eff = exact
        .iter()
        .filter(|&&e| e * trials as f64 >= 1.0)
        .count()
        .max(1);
    let threshold = match cfg.get("threshold") {
        Some(_) => cfg.num("threshold")?,
        None => 4.0 * (k_eff as f64 / trials as f64).sqrt(),
    };
    let out = SimulateOutput {
        config: cfg,
        histogram: hist,
        overlay,
        tv,
        threshold,
        tv_ok: tv <= threshold,
    };
    write_out(cfg, &(serde_json::to_string_pretty(&out)? + "\n"))
}

fn spectrum(cfg: &RunConfig) -> Result<()> {
    let c = chain_spec(cfg)?;
    emit_csv(
        cfg,
        &spectral::spectrum_csv(&c, cfg.num("N")?, cfg.num("count")?)?,
    )
}

fn expansion(cfg: &RunConfig) -> Result<()> {
    let c = chain_spec(cfg)?;
    let ns: Vec<usize> = cfg.range("n-range")?.map(|n| n as usize).collect();
    let report = spectral::expansion_check(&c, &ns, cfg.precision())?;
    if !report.within_cap() {
        eprintln!(
            "warning: some residuals exceed the cap {}",
            report.leading.cap.to_sci_string(6)
        );
    }
    emit_csv(cfg, &report.to_csv())
}

fn cokernel(cfg: &RunConfig) -> Result<()> {
    let p: u64 = cfg.num("p")?;
    let m: u32 = cfg.num("m")?;
    let t = PGroupType::parse(p, cfg.require("type")?)?;
    let prec = cfg.precision();
    let ns: Vec<u32> = cfg.range("n-range")?.collect();
    let validate = cfg.flag("validate");
    let rows = if validate {
        Some(padic::cokernel_expansion(m, &t, prec)?)
    } else {
        None
    };
    let mut csv = String::from("n,exact,chain,abs_diff");
    if validate {
        csv.push_str(",normalized_residual,cap,within_cap");
    }
    csv.push('\n');
    let mut all_ok = true;
    for &n in &ns {
        let exact = Real::from_ratio(&padic::cokernel_measure_exact(n, m, &t)?, prec);
        let via_chain = padic::cokernel_measure_chain(n, m, &t, prec)?;
        let diff = (&exact - &via_chain.value).abs();
        csv.push_str(&format!(
            "{n},{},{},{}",
            exact.to_sci_string(30),
            via_chain.value.to_sci_string(30),
            diff.to_sci_string(3)
        ));
        if let Some(e) = &rows {
            let r = e.residual(n, prec)?;
            let ok = r <= e.cap;
            all_ok &= ok;
            csv.push_str(&format!(
                ",{},{},{ok}",
                r.to_sci_string(12),
                e.cap.to_sci_string(12)
            ));
        }
        csv.push('\n');
    }
    if !all_ok {
        eprintln!("warning: some residuals exceed the cap");
    }
    emit_csv(cfg, &csv)
}

fn snf(cfg: &RunConfig) -> Result<()> {
    let spec = PadicSpec::new(cfg.num("p")?, cfg.num("n")?, cfg.num("m")?, cfg.num("N")?)?;
    let hist = padic::cokernel_hist(spec, cfg.num("trials")?, cfg.seed, Exec::Parallel)?;
    emit_csv(cfg, &hist.to_csv(cfg.num("max-log")?)?)
}

/// Accepts `1000000` or `1e6`.
fn parse_bound(s: &str) -> Result<u64> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 1.0 && v.fract() == 0.0 && v < 1e15 => Ok(v as u64),
        _ => Err(Error::domain(format!("X: {s:?} is not a positive integer"))),
    }
}

fn classgroup_cmd(cfg: &RunConfig) -> Result<()> {
    let p: u64 = cfg.num("p")?;
    let t = PGroupType::parse(p, cfg.require("type")?)?;
    let x = parse_bound(cfg.require("X")?)?;
    let cache = cfg.get("cache").map(Path::new);
    let rows = classgroup::error_series(&t, x, cfg.num("checkpoints")?, cache, Exec::Parallel)?;
    if let Some(svg) = cfg.get("svg") {
        std::fs::write(
            svg,
            classgroup::error_series_svg(&rows, &format!("p = {p}, G = {t}, |D| < {x}")),
        )?;
    }
    emit_csv(cfg, &classgroup::error_series_csv(&rows))
}
