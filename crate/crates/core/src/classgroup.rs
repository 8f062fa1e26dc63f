//! Class groups of imaginary quadratic fields through reduced binary
//! quadratic forms: fundamental discriminants, composition, p-Sylow types,
//! the Cohen–Lenstra error-term series and Davenport–Heilbronn averages.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::qseries::{aut_order, eta_inf, is_prime, PGroupType};
use crate::real::Precision;
use crate::scalar::int;

/// A negative fundamental discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FundDisc(i64);

impl FundDisc {
    pub fn new(d: i64) -> Result<Self> {
        if d < 0 && is_fundamental(d) {
            Ok(FundDisc(d))
        } else {
            Err(Error::domain(format!(
                "{d} is not a negative fundamental discriminant"
            )))
        }
    }

    pub fn d(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> u64 {
        self.0.unsigned_abs()
    }
}

fn squarefree(n: u64) -> bool {
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d * d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `D ≡ 1 mod 4` squarefree, or `D = 4k` with `k ≡ 2, 3 mod 4` squarefree.
pub fn is_fundamental(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => squarefree(d.unsigned_abs()),
        0 => {
            let k = d / 4;
            matches!(k.rem_euclid(4), 2 | 3) && squarefree(k.unsigned_abs())
        }
        _ => false,
    }
}

/// All fundamental `D` with `0 < -D < X`, in order of increasing `|D|`.
pub fn fundamental_discriminants(x: u64) -> Result<Vec<FundDisc>> {
    if x < 3 {
        return Err(Error::domain("discriminant bound must be at least 3"));
    }
    let mut sf = vec![true; x as usize];
    let mut p = 2usize;
    while p * p < x as usize {
        for k in (p * p..x as usize).step_by(p * p) {
            sf[k] = false;
        }
        p += 1;
    }
    let mut out = Vec::new();
    for n in 3..x as usize {
        let ok = match n % 4 {
            3 => sf[n],
            0 => matches!((n / 4) % 4, 1 | 2) && sf[n / 4],
            _ => false,
        };
        if ok {
            out.push(FundDisc(-(n as i64)));
        }
    }
    Ok(out)
}

/// A primitive positive definite form `ax² + bxy + cy²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FormClass {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl FormClass {
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let FormClass { a, b, c } = *self;
        a > 0 && b.abs() <= a && a <= c && !((b.abs() == a || a == c) && b < 0)
    }

    pub fn principal(d: i64) -> Self {
        let b = d.rem_euclid(2);
        FormClass {
            a: 1,
            b,
            c: (b * b - d) / 4,
        }
    }

    pub fn inverse(&self) -> Self {
        reduce(self.a as i128, -self.b as i128, self.c as i128)
    }
}

fn reduce(mut a: i128, mut b: i128, mut c: i128) -> FormClass {
    let d = b * b - 4 * a * c;
    loop {
        // b into (-a, a]
        if !(-a < b && b <= a) {
            let two_a = 2 * a;
            let r = (a - b).div_euclid(two_a);
            b += two_a * r;
            c = (b * b - d) / (4 * a);
        }
        if a > c {
            (a, b, c) = (c, -b, a);
            continue;
        }
        if a == c && b < 0 {
            b = -b;
        }
        return FormClass {
            a: a as i64,
            b: b as i64,
            c: c as i64,
        };
    }
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Reduced representative of the product class (Gauss composition in
/// Cohen's Algorithm 5.4.7 form).
pub fn compose(f: &FormClass, g: &FormClass) -> FormClass {
    debug_assert_eq!(f.disc(), g.disc());
    let d = f.disc() as i128;
    let (mut f1, mut f2) = (*f, *g);
    if f1.a > f2.a {
        std::mem::swap(&mut f1, &mut f2);
    }
    let (a1, b1) = (f1.a as i128, f1.b as i128);
    let (a2, b2, c2) = (f2.a as i128, f2.b as i128, f2.c as i128);
    let s = (b1 + b2) / 2;
    let n = b2 - s;
    let (y1, dd) = if a2 % a1 == 0 {
        (0, a1)
    } else {
        let (g, u, _v) = ext_gcd(a2, a1);
        (u, g)
    };
    let (x2, y2, d1) = if s % dd == 0 {
        (0, -1, dd)
    } else {
        let (g, x, y) = ext_gcd(s, dd);
        (x, -y, g)
    };
    let v1 = a1 / d1;
    let v2 = a2 / d1;
    let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
    let b3 = b2 + 2 * v2 * r;
    let a3 = v1 * v2;
    let c3 = (b3 * b3 - d) / (4 * a3);
    reduce(a3, b3, c3)
}

pub fn pow(f: &FormClass, mut e: u64) -> FormClass {
    let mut acc = FormClass::principal(f.disc());
    let mut base = *f;
    while e > 0 {
        if e & 1 == 1 {
            acc = compose(&acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = compose(&base, &base);
        }
    }
    acc
}

/// Every reduced form of discriminant `D`.
pub fn reduced_forms(d: FundDisc) -> Vec<FormClass> {
    let n = d.abs() as i64;
    let dd = d.d();
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= n {
        for b in -a + 1..=a {
            let num = b * b - dd;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            out.push(FormClass { a, b, c });
        }
        a += 1;
    }
    out
}

/// `h(D)` for every `|D| < X` (all discriminants, fundamental or not), by a
/// single pass over reduced triples with `4ac - b² < X`.
pub fn class_numbers(x: u64, exec: Exec) -> Vec<u32> {
    let x = x as i64;
    let a_max = ((x as f64 / 3.0).sqrt() as i64) + 1;
    let chunk = (a_max as u64).div_ceil(64).max(1);
    par::map_reduce(
        exec,
        a_max as u64 + 1,
        chunk,
        || vec![0u32; x as usize],
        |h, a| {
            let a = a as i64;
            if a == 0 {
                return;
            }
            for b in -a + 1..=a {
                // smallest c: a, bounded by 4ac - b² < X
                let mut c = a;
                loop {
                    let n = 4 * a * c - b * b;
                    if n >= x {
                        break;
                    }
                    if !(c == a && b < 0) {
                        h[n as usize] += 1;
                    }
                    c += 1;
                }
            }
        },
        |mut l, r| {
            for (x, y) in l.iter_mut().zip(r) {
                *x += y;
            }
            l
        },
    )
}

fn small_primes(limit: u64) -> impl Iterator<Item = u64> {
    (2..=limit).filter(|&n| is_prime(n))
}

/// A reduced form of norm `ℓ` when `ℓ` splits or ramifies.
fn prime_form(d: i64, l: i64) -> Option<FormClass> {
    let m = 4 * l;
    (0..l)
        .map(|k| 2 * k + d.rem_euclid(2))
        .find(|b| (b * b - d).rem_euclid(m) == 0)
        .map(|b| {
            let c = (b * b - d) / m;
            reduce(l as i128, b as i128, c as i128)
        })
}

/// p-Sylow subgroup of `Cl(D)` given `h = h(D)`: images `f^{h'}` of prime
/// forms generate it, since reduced forms of norm at most `√(|D|/3)` cover
/// every class.
fn sylow_subgroup(d: i64, h: u64, p: u64) -> HashSet<FormClass> {
    let mut e = 0;
    let mut hp = h;
    while hp.is_multiple_of(p) {
        hp /= p;
        e += 1;
    }
    let target = p.pow(e);
    let id = FormClass::principal(d);
    let mut s: HashSet<FormClass> = HashSet::from([id]);
    let bound = ((d.unsigned_abs() as f64 / 3.0).sqrt() as u64).max(2);
    for l in small_primes(bound) {
        if s.len() as u64 == target {
            break;
        }
        let Some(f) = prime_form(d, l as i64) else {
            continue;
        };
        let g = pow(&f, hp);
        if s.contains(&g) {
            continue;
        }
        // adjoin g: cosets s·g^j until g^j falls in s
        let mut cosets = vec![s.clone()];
        let mut gj = g;
        while !s.contains(&gj) {
            cosets.push(s.iter().map(|x| compose(x, &gj)).collect());
            gj = compose(&gj, &g);
        }
        s = cosets.into_iter().flatten().collect();
    }
    debug_assert_eq!(s.len() as u64, target, "D = {d}");
    s
}

fn type_from_subgroup(d: i64, p: u64, s: &HashSet<FormClass>) -> PGroupType {
    let id = FormClass::principal(d);
    let mut logs = Vec::new();
    let mut k = 1u32;
    loop {
        let pk = p.pow(k);
        let count = s.iter().filter(|x| pow(x, pk) == id).count() as u64;
        let mut l = 0;
        let mut c = count;
        while c > 1 {
            c /= p;
            l += 1;
        }
        logs.push(l);
        if count == s.len() as u64 {
            break;
        }
        k += 1;
    }
    PGroupType::from_torsion_logs(p, &logs).expect("torsion counts form a partition")
}

fn check_odd_prime(p: u64) -> Result<()> {
    if p == 2 {
        return Err(Error::domain(
            "the 2-part of Cl(D) is not supported; use an odd prime",
        ));
    }
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    Ok(())
}

fn sylow_type_with_h(d: i64, h: u64, p: u64) -> PGroupType {
    if !h.is_multiple_of(p) {
        return PGroupType::trivial(p).unwrap();
    }
    type_from_subgroup(d, p, &sylow_subgroup(d, h, p))
}

/// Isomorphism type of `Cl(D)[p^∞]` for odd `p`.
pub fn p_sylow_type(d: FundDisc, p: u64) -> Result<PGroupType> {
    check_odd_prime(p)?;
    let h = reduced_forms(d).len() as u64;
    Ok(sylow_type_with_h(d.d(), h, p))
}

/// `#Cl(D)[p]` by brute force over all reduced forms.
pub fn torsion_count_bruteforce(d: FundDisc, p: u64) -> u64 {
    let id = FormClass::principal(d.d());
    reduced_forms(d).iter().filter(|f| pow(f, p) == id).count() as u64
}

const CACHE_MAGIC: &[u8; 4] = b"CLGC";
const CACHE_VERSION: u32 = 1;

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn read_varint(buf: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = *buf
            .get(*pos)
            .ok_or_else(|| Error::Cache("truncated varint".into()))?;
        *pos += 1;
        v |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::Cache("varint too long".into()))
}

/// Append-only store of `(D, p) ↦ Cl(D)[p^∞]`. Records are little-endian
/// `D: i64, p: u8, λ: varint count then varint parts`, after a header of
/// magic bytes and a `u32` version.
#[derive(Debug, Default)]
pub struct TypeCache {
    map: HashMap<(i64, u8), Vec<u32>>,
}

impl TypeCache {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cache = TypeCache::default();
        if !path.exists() {
            return Ok(cache);
        }
        let mut buf = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
        if buf.len() < 8 || &buf[..4] != CACHE_MAGIC {
            return Err(Error::Cache(format!(
                "{} is not a class group cache",
                path.display()
            )));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported cache version {version}")));
        }
        let mut pos = 8;
        while pos < buf.len() {
            if pos + 9 > buf.len() {
                return Err(Error::Cache("truncated record".into()));
            }
            let d = i64::from_le_bytes(buf[pos..pos + 8].try_into().unwrap());
            let p = buf[pos + 8];
            pos += 9;
            let len = read_varint(&buf, &mut pos)? as usize;
            let mut lambda = Vec::with_capacity(len);
            for _ in 0..len {
                lambda.push(read_varint(&buf, &mut pos)? as u32);
            }
            cache.map.insert((d, p), lambda);
        }
        Ok(cache)
    }

    pub fn get(&self, d: i64, p: u64) -> Option<PGroupType> {
        self.map
            .get(&(d, p as u8))
            .map(|l| PGroupType::new(p, l.clone()).expect("cached partition"))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Insert and append the new records to `path`.
    pub fn append(&mut self, path: &Path, records: &[(i64, PGroupType)]) -> Result<()> {
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        let mut w = BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?);
        if fresh {
            w.write_all(CACHE_MAGIC)?;
            w.write_all(&CACHE_VERSION.to_le_bytes())?;
        }
        let mut buf = Vec::new();
        for (d, t) in records {
            buf.clear();
            buf.extend_from_slice(&d.to_le_bytes());
            buf.push(t.p() as u8);
            write_varint(&mut buf, t.lambda().len() as u64);
            for &l in t.lambda() {
                write_varint(&mut buf, l as u64);
            }
            w.write_all(&buf)?;
            self.map.insert((*d, t.p() as u8), t.lambda().to_vec());
        }
        w.flush()?;
        Ok(())
    }
}

/// p-Sylow types for every fundamental `D` with `0 < -D < X`, reusing and
/// extending the cache when a path is given.
pub fn sylow_types(
    p: u64,
    x: u64,
    cache_path: Option<&Path>,
    exec: Exec,
) -> Result<Vec<(FundDisc, PGroupType)>> {
    check_odd_prime(p)?;
    if p > u8::MAX as u64 {
        return Err(Error::domain("p must fit in the cache's u8 field"));
    }
    let discs = fundamental_discriminants(x)?;
    let mut cache = match cache_path {
        Some(path) => TypeCache::load(path)?,
        None => TypeCache::default(),
    };
    let missing: Vec<FundDisc> = discs
        .iter()
        .copied()
        .filter(|d| cache.get(d.d(), p).is_none())
        .collect();
    if !missing.is_empty() {
        let h = class_numbers(x, exec);
        let computed: Vec<(i64, PGroupType)> = par::map_collect(exec, &missing, |d| {
            (
                d.d(),
                sylow_type_with_h(d.d(), h[d.abs() as usize] as u64, p),
            )
        });
        match cache_path {
            Some(path) => cache.append(path, &computed)?,
            None => {
                for (d, t) in &computed {
                    cache.map.insert((*d, p as u8), t.lambda().to_vec());
                }
            }
        }
    }
    Ok(discs
        .into_iter()
        .map(|d| (d, cache.get(d.d(), p).unwrap()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSeriesRow {
    pub x: u64,
    pub count_all: u64,
    pub count_match: u64,
    pub e: f64,
    /// `log|E| / log X`, absent when `E = 0`.
    pub log_ratio: Option<f64>,
}

/// Roughly log-spaced bounds from `min(1000, X)` to `X`, strictly increasing.
pub fn checkpoints(x_max: u64, count: usize) -> Vec<u64> {
    let lo = x_max.min(1000) as f64;
    let hi = x_max as f64;
    let count = count.max(1);
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            if count == 1 {
                x_max
            } else {
                (lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).round() as u64
            }
        })
        .collect();
    out.push(x_max);
    out.sort_unstable();
    out.dedup();
    out
}

/// Cohen–Lenstra mass `η_∞(p)/|Aut G|` of `G` among imaginary quadratic
/// class groups.
pub fn imaginary_weight(t: &PGroupType) -> Result<f64> {
    let e = eta_inf(&int(t.p() as i64), Precision::default())?
        .value
        .to_f64();
    Ok(e / aut_order(t).to_string().parse::<f64>().unwrap())
}

/// `E(G, X) = #{0 < -D < X : Cl(D)[p^∞] ≅ G} - w(G)(3/π²)X` at each checkpoint.
pub fn error_series(
    t: &PGroupType,
    x_max: u64,
    checkpoint_count: usize,
    cache_path: Option<&Path>,
    exec: Exec,
) -> Result<Vec<ErrorSeriesRow>> {
    let p = t.p();
    let types = sylow_types(p, x_max, cache_path, exec)?;
    let w = imaginary_weight(t)?;
    let density = 3.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let mut rows = Vec::new();
    let (mut all, mut matched, mut idx) = (0u64, 0u64, 0usize);
    for x in checkpoints(x_max, checkpoint_count) {
        while idx < types.len() && types[idx].0.abs() < x {
            all += 1;
            if types[idx].1 == *t {
                matched += 1;
            }
            idx += 1;
        }
        let e = matched as f64 - w * density * x as f64;
        let log_ratio = (e != 0.0).then(|| e.abs().ln() / (x as f64).ln());
        rows.push(ErrorSeriesRow {
            x,
            count_all: all,
            count_match: matched,
            e,
            log_ratio,
        });
    }
    Ok(rows)
}

pub fn error_series_csv(rows: &[ErrorSeriesRow]) -> String {
    let mut out = String::from("X,count_all,count_match,E,log_ratio\n");
    for r in rows {
        let lr = r.log_ratio.map(|v| format!("{v:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            r.x, r.count_all, r.count_match, r.e, lr
        ));
    }
    out
}

/// Static plot of `log|E|/log X` against `log X`.
pub fn error_series_svg(rows: &[ErrorSeriesRow], title: &str) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.log_ratio.map(|y| ((r.x as f64).log10(), y)))
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        xml_escape(title)
    );
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (x0, x1) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = (0.0f64, pts.iter().fold(1.0f64, |a, p| a.max(p.1)));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-9) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    svg.push_str(&format!(
        "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">log10 X</text>\n\
         <text x=\"12\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 12 {})\">log|E| / log X</text>\n",
        h - pad,
        w - pad,
        h - pad,
        h - pad,
        w / 2.0,
        h - 10.0,
        h / 2.0,
        h / 2.0
    ));
    for (val, label) in [(x0, x0), (x1, x1)] {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{label:.1}</text>\n",
            sx(val),
            h - pad + 14.0
        ));
    }
    for y in [0.0, 0.25, 0.5, 0.75, 1.0].into_iter().filter(|&y| y <= y1) {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\">{y:.2}</text>\n",
            pad - 4.0,
            sy(y) + 3.0
        ));
    }
    let path: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n</svg>\n",
        path.join(" ")
    ));
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Mean of `#Cl(D)[3] = 3^{rk_3}` over fundamental `0 < -D < X`.
pub fn dh_average(x: u64, cache_path: Option<&Path>, exec: Exec) -> Result<f64> {
    if x < 100 {
        return Err(Error::domain("dh_average needs X >= 100"));
    }
    let types = sylow_types(3, x, cache_path, exec)?;
    let total: u64 = types.iter().map(|(_, t)| 3u64.pow(t.rank() as u32)).sum();
    Ok(total as f64 / types.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn fd(d: i64) -> FundDisc {
        FundDisc::new(d).unwrap()
    }

    #[test]
    fn first_discriminants() {
        let v: Vec<i64> = fundamental_discriminants(20)
            .unwrap()
            .iter()
            .map(|d| d.d())
            .collect();
        assert_eq!(&v[..5], &[-3, -4, -7, -8, -11]);
        assert!(!v.contains(&-12));
        assert!(FundDisc::new(-12).is_err());
        for d in fundamental_discriminants(3000).unwrap() {
            assert!(is_fundamental(d.d()));
        }
        let brute = (3..3000i64).filter(|&n| is_fundamental(-n)).count();
        assert_eq!(brute, fundamental_discriminants(3000).unwrap().len());
    }

    #[test]
    fn small_class_groups() {
        let f = reduced_forms(fd(-23));
        assert_eq!(
            f,
            vec![
                FormClass { a: 1, b: 1, c: 6 },
                FormClass { a: 2, b: -1, c: 3 },
                FormClass { a: 2, b: 1, c: 3 }
            ]
        );
        assert_eq!(reduced_forms(fd(-3)), vec![FormClass { a: 1, b: 1, c: 1 }]);
        assert_eq!(reduced_forms(fd(-4)), vec![FormClass { a: 1, b: 0, c: 1 }]);
    }

    #[test]
    fn composition_examples() {
        let id = FormClass::principal(-23);
        let f = FormClass { a: 2, b: 1, c: 3 };
        let g = FormClass { a: 2, b: -1, c: 3 };
        assert_eq!(compose(&f, &g), id);
        assert_eq!(pow(&f, 3), id);
        for x in reduced_forms(fd(-23)) {
            assert_eq!(compose(&id, &x), x);
        }
        assert_eq!(f.inverse(), g);
    }

    #[test]
    fn class_numbers_match_enumeration() {
        let h = class_numbers(5000, Exec::Parallel);
        assert_eq!(h, class_numbers(5000, Exec::Sequential));
        for d in fundamental_discriminants(5000).unwrap() {
            assert_eq!(
                h[d.abs() as usize] as usize,
                reduced_forms(d).len(),
                "{}",
                d.d()
            );
        }
    }

    #[test]
    fn closure_equals_class_number() {
        for d in fundamental_discriminants(4000)
            .unwrap()
            .into_iter()
            .step_by(7)
        {
            let forms = reduced_forms(d);
            if forms.len() > 200 {
                continue;
            }
            let mut seen: HashSet<FormClass> = HashSet::from([FormClass::principal(d.d())]);
            let mut frontier: Vec<FormClass> = seen.iter().copied().collect();
            while let Some(x) = frontier.pop() {
                for g in &forms {
                    let y = compose(&x, g);
                    assert!(y.is_reduced() && y.disc() == d.d());
                    if seen.insert(y) {
                        frontier.push(y);
                    }
                }
            }
            assert_eq!(seen.len(), forms.len(), "{}", d.d());
        }
    }

    #[test]
    fn group_law_fuzz() {
        let mut rng = crate::ffmat::trial_rng(5, 0);
        let discs = fundamental_discriminants(100_000).unwrap();
        for _ in 0..100 {
            let d = discs[rng.random_range(0..discs.len())];
            let forms = reduced_forms(d);
            let pick = |r: &mut rand_chacha::ChaCha8Rng| forms[r.random_range(0..forms.len())];
            let (x, y, z) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            assert_eq!(compose(&compose(&x, &y), &z), compose(&x, &compose(&y, &z)));
            assert_eq!(compose(&x, &y), compose(&y, &x));
            assert_eq!(compose(&x, &x.inverse()), FormClass::principal(d.d()));
            assert_eq!(compose(&x, &FormClass::principal(d.d())), x);
        }
    }

    #[test]
    fn sylow_examples() {
        assert_eq!(
            p_sylow_type(fd(-23), 3).unwrap(),
            PGroupType::new(3, vec![1]).unwrap()
        );
        assert_eq!(
            p_sylow_type(fd(-3), 5).unwrap(),
            PGroupType::trivial(5).unwrap()
        );
        assert_eq!(
            p_sylow_type(fd(-4027), 3).unwrap(),
            PGroupType::new(3, vec![1, 1]).unwrap()
        );
        assert!(p_sylow_type(fd(-23), 2).is_err());
        // smallest |D| with 3-rank 2
        let first = fundamental_discriminants(4000)
            .unwrap()
            .into_iter()
            .find(|&d| p_sylow_type(d, 3).unwrap().rank() == 2)
            .unwrap();
        assert_eq!(first.d(), -3299);
        assert_eq!(
            p_sylow_type(first, 3).unwrap(),
            PGroupType::new(3, vec![2, 1]).unwrap()
        );
        assert_eq!(reduced_forms(first).len(), 27);
    }

    #[test]
    fn torsion_counts_agree() {
        for d in fundamental_discriminants(20_000)
            .unwrap()
            .into_iter()
            .step_by(13)
        {
            for p in [3u64, 5] {
                let t = p_sylow_type(d, p).unwrap();
                assert_eq!(
                    torsion_count_bruteforce(d, p),
                    p.pow(t.rank() as u32),
                    "{} p={p}",
                    d.d()
                );
            }
        }
    }

    #[test]
    fn sweep_types_match_single() {
        let all = sylow_types(3, 20_000, None, Exec::Parallel).unwrap();
        for (d, t) in all.iter().step_by(11) {
            assert_eq!(*t, p_sylow_type(*d, 3).unwrap());
        }
    }

    #[test]
    fn cache_roundtrip_and_resume() {
        let dir = std::env::temp_dir().join(format!("clgc-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("types.bin");
        let _ = std::fs::remove_file(&path);
        let a = sylow_types(3, 5000, Some(&path), Exec::Parallel).unwrap();
        let size = std::fs::metadata(&path).unwrap().len();
        let b = sylow_types(3, 5000, Some(&path), Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), size);
        let c = sylow_types(3, 8000, Some(&path), Exec::Parallel).unwrap();
        assert_eq!(&c[..a.len()], &a[..]);
        assert_eq!(TypeCache::load(&path).unwrap().len(), c.len());
        std::fs::write(&path, b"nope").unwrap();
        assert!(TypeCache::load(&path).is_err());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn error_series_properties() {
        let t = PGroupType::new(3, vec![1]).unwrap();
        let rows = error_series(&t, 50_000, 20, None, Exec::Parallel).unwrap();
        assert!(rows
            .windows(2)
            .all(|w| w[0].x < w[1].x && w[0].count_all <= w[1].count_all));
        assert!(rows
            .iter()
            .all(|r| r.count_match <= r.count_all && r.e.is_finite()));
        assert_eq!(rows.last().unwrap().x, 50_000);
        let csv = error_series_csv(&rows);
        assert_eq!(csv.lines().count(), rows.len() + 1);
        assert!(error_series_svg(&rows, "p=3").starts_with("<svg"));
    }

    #[test]
    fn dh_small() {
        let v = dh_average(100, None, Exec::Sequential).unwrap();
        assert!(v >= 1.0);
        assert!(dh_average(99, None, Exec::Sequential).is_err());
    }
}
