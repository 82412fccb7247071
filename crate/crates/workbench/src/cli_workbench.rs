//! Command-line front end: configuration resolution (defaults < config file <
//! environment < flags), the end-to-end run drivers shared with the test
//! suite, and the machine-readable JSON result documents.
//!
//! All p-adic numbers are serialized exactly as {valuation, digits, precision}
//! with base-p digit strings, least significant digit first; no floats appear
//! anywhere.  The `content_hash` field is a SHA-256 over the timing-free
//! region, so identical config + seed reproduces identical hashes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::coset_geometry::{brandt_match, hecke_cosets, OpTag};
use crate::coeff_modules::{action_classical, action_family_v0, action_v0, action_v1, differential_matrix};
use crate::error::WbError;
use crate::hecke_engine::{
    build_family_space, build_space, commutation_digits, family_hecke_up, hecke_full_blocks,
    restrict_operator, scalar_operator, setup, FullOperator, HeckeMatrix,
};
use crate::padic_arith::{mat_mul, mat_sub, Fam, FamCtx, Mat, Zmod};
use crate::quaternion_arith::Mat2;
use crate::spectral_family::{
    char_series, classical_compare, d_from_series, family_char_series, family_slope_factor, slopes,
    specialize_char_series, SlopesReport,
};
use crate::weight_space::{family_t_of_weight, WeightCharacter};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;

const ENV_PREFIX: &str = "WORKBENCH_";

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub p: u32,
    pub k: Option<i64>,
    pub k0: Option<i64>,
    pub scale_m: u32,
    pub family_w: usize,
    pub v: u8,
    pub trunc_m: usize,
    pub prec_n: Option<u32>,
    pub h: Option<Ratio<i64>>,
    pub ops: Vec<OpTag>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 3,
            k: None,
            k0: None,
            scale_m: 5,
            family_w: 8,
            v: 0,
            trunc_m: 40,
            prec_n: None,
            h: None,
            ops: vec![OpTag::Up],
            out: None,
            seed: 0,
        }
    }
}

pub fn parse_ratio(s: &str) -> Result<Ratio<i64>, WbError> {
    let s = s.trim();
    let bad = |m: &str| WbError::BadInput(format!("cannot parse '{}' as a rational: {}", s, m));
    if let Some((a, b)) = s.split_once('/') {
        let n: i64 = a.trim().parse().map_err(|_| bad("numerator"))?;
        let d: i64 = b.trim().parse().map_err(|_| bad("denominator"))?;
        if d == 0 {
            return Err(bad("zero denominator"));
        }
        return Ok(Ratio::new(n, d));
    }
    if let Some((a, b)) = s.split_once('.') {
        let neg = a.trim_start().starts_with('-');
        let whole: i64 = a.trim().parse().map_err(|_| bad("integer part"))?;
        let frac_digits = b.trim();
        let frac: i64 = frac_digits.parse().map_err(|_| bad("fraction part"))?;
        let den = 10i64.pow(frac_digits.len() as u32);
        let num = whole.abs() * den + frac;
        let num = if neg || whole < 0 { -num } else { num };
        return Ok(Ratio::new(num, den));
    }
    let n: i64 = s.parse().map_err(|_| bad("integer"))?;
    Ok(Ratio::new(n, 1))
}

pub fn parse_ops(s: &str) -> Result<Vec<OpTag>, WbError> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let t = part.trim().replace('_', "");
        if t.is_empty() {
            continue;
        }
        let lower = t.to_ascii_lowercase();
        if lower == "up" {
            out.push(OpTag::Up);
        } else if let Some(rest) = lower.strip_prefix('t') {
            let l: u32 = rest
                .parse()
                .map_err(|_| WbError::BadInput(format!("bad operator '{}'", part)))?;
            out.push(OpTag::Tl(l));
        } else if let Some(rest) = lower.strip_prefix('s') {
            let l: u32 = rest
                .parse()
                .map_err(|_| WbError::BadInput(format!("bad operator '{}'", part)))?;
            out.push(OpTag::Sl(l));
        } else {
            return Err(WbError::BadInput(format!(
                "bad operator '{}': expected Up, T<l>, or S<l>",
                part
            )));
        }
    }
    Ok(out)
}

fn is_odd_prime(p: u32) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3u32;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Flat key=value config file; '#' starts a comment.
pub fn read_config_file(path: &std::path::Path) -> Result<BTreeMap<String, String>, WbError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(WbError::BadInput(format!(
                "config line {}: expected key = value",
                lineno + 1
            )));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn config_keys() -> &'static [&'static str] {
    &[
        "p", "k", "k0", "scale-m", "family-W", "v", "trunc-M", "prec-N", "h", "ops", "out", "seed",
    ]
}

fn env_name(key: &str) -> String {
    format!(
        "{}{}",
        ENV_PREFIX,
        key.replace('-', "_").to_ascii_uppercase()
    )
}

fn apply_kv(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), WbError> {
    let bad = |m: String| WbError::BadInput(m);
    match key {
        "p" => cfg.p = value.parse().map_err(|_| bad(format!("bad p '{}'", value)))?,
        "k" => cfg.k = Some(value.parse().map_err(|_| bad(format!("bad k '{}'", value)))?),
        "k0" => cfg.k0 = Some(value.parse().map_err(|_| bad(format!("bad k0 '{}'", value)))?),
        "scale-m" => {
            cfg.scale_m = value
                .parse()
                .map_err(|_| bad(format!("bad scale-m '{}'", value)))?
        }
        "family-W" => {
            cfg.family_w = value
                .parse()
                .map_err(|_| bad(format!("bad family-W '{}'", value)))?
        }
        "v" => cfg.v = value.parse().map_err(|_| bad(format!("bad v '{}'", value)))?,
        "trunc-M" => {
            cfg.trunc_m = value
                .parse()
                .map_err(|_| bad(format!("bad trunc-M '{}'", value)))?
        }
        "prec-N" => {
            cfg.prec_n = Some(
                value
                    .parse()
                    .map_err(|_| bad(format!("bad prec-N '{}'", value)))?,
            )
        }
        "h" => cfg.h = Some(parse_ratio(value)?),
        "ops" => cfg.ops = parse_ops(value)?,
        "out" => cfg.out = Some(PathBuf::from(value)),
        "seed" => {
            cfg.seed = value
                .parse()
                .map_err(|_| bad(format!("bad seed '{}'", value)))?
        }
        _ => return Err(bad(format!("unknown config key '{}'", key))),
    }
    Ok(())
}

/// Resolve a config: defaults, then file, then environment, then flags.
pub fn resolve_config(
    file: Option<&std::path::Path>,
    flags: &[(String, String)],
) -> Result<RunConfig, WbError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        for (k, v) in read_config_file(path)? {
            apply_kv(&mut cfg, &k, &v)?;
        }
    }
    for key in config_keys() {
        if let Ok(v) = std::env::var(env_name(key)) {
            apply_kv(&mut cfg, key, &v)?;
        }
    }
    for (k, v) in flags {
        apply_kv(&mut cfg, k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), WbError> {
        if !is_odd_prime(self.p) {
            return Err(WbError::BadInput(format!(
                "p = {} must be an odd prime",
                self.p
            )));
        }
        if self.v > 1 {
            return Err(WbError::BadInput("v must be 0 or 1".into()));
        }
        if let Some(k) = self.k {
            if self.trunc_m as i64 + 2 < k {
                return Err(WbError::BadInput(format!(
                    "trunc-M = {} must be at least k-2 = {} for classical comparison",
                    self.trunc_m,
                    k - 2
                )));
            }
        }
        Ok(())
    }

    fn echo_json(&self, command: &str) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        m.insert("p".into(), json!(self.p));
        m.insert("k".into(), json!(self.k));
        m.insert("k0".into(), json!(self.k0));
        m.insert("scale-m".into(), json!(self.scale_m));
        m.insert("family-W".into(), json!(self.family_w));
        m.insert("v".into(), json!(self.v));
        m.insert("trunc-M".into(), json!(self.trunc_m));
        m.insert("prec-N".into(), json!(self.prec_n));
        m.insert("h".into(), json!(self.h.map(ratio_string)));
        m.insert(
            "ops".into(),
            json!(self.ops.iter().map(|t| t.to_string()).collect::<Vec<_>>()),
        );
        m.insert("seed".into(), json!(self.seed));
        Value::Object(m)
    }
}

// ---------------------------------------------------------------------------
// Precision schedule.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct RunPrecision {
    /// invariant-defect cutoff; everything downstream certified modulo p^cutoff
    pub cutoff: u32,
    /// working precision of the module arithmetic
    pub nw: u32,
    /// splitting / match-table precision (one digit above any kappa use)
    pub n: u32,
}

/// Default schedule: the defect ladder of the stabilizer elimination loses
/// roughly 4/3 digits per truncation step below M, so a cutoff around
/// 4(M+6)/7 keeps the accepted directions and the char-series accuracy
/// balanced; the working and lift precisions ride 40 and 50 digits above.
pub fn precision_for(m_trunc: usize) -> RunPrecision {
    let cutoff = (4 * (m_trunc as u32 + 6)) / 7;
    let nw = cutoff + 40;
    RunPrecision {
        cutoff,
        nw,
        n: nw + 10,
    }
}

/// Apply a user-specified total precision N on top of the schedule.
pub fn precision_with_n(m_trunc: usize, prec_n: Option<u32>) -> Result<RunPrecision, WbError> {
    let mut pr = precision_for(m_trunc);
    if let Some(n) = prec_n {
        if n < 20 {
            return Err(WbError::BadInput("prec-N must be at least 20".into()));
        }
        pr.n = n;
        pr.nw = n - 10;
        pr.cutoff = pr.cutoff.min(pr.nw.saturating_sub(5));
    }
    Ok(pr)
}

// ---------------------------------------------------------------------------
// End-to-end drivers (shared with the acceptance tests).
// ---------------------------------------------------------------------------

pub struct FixedParams {
    pub p: u32,
    pub k: i64,
    pub v: u8,
    pub m_trunc: usize,
    pub prec: RunPrecision,
    pub seed: u64,
    pub ops: Vec<OpTag>,
    /// also compute full-module commutators of consecutive non-scalar ops
    pub commutators: bool,
}

pub struct FixedOutcome {
    /// char-series context: precision = certified digits
    pub cert_ctx: Zmod,
    pub dims: Vec<usize>,
    pub cert: u32,
    pub f: Vec<BigUint>,
    pub report: SlopesReport,
    pub hecke: Vec<HeckeMatrix>,
    /// ("[A,B]", digits) pairs measured in the full module
    pub commutation: Vec<(String, u32)>,
}

pub fn fixed_weight_run(pa: &FixedParams) -> Result<FixedOutcome, WbError> {
    let su = setup(pa.p, pa.prec.n)?;
    let ctx = Zmod::new(pa.p, pa.prec.nw);
    let kk = pa.k - 2;
    let act = |g: &Mat2| -> Result<Mat, WbError> {
        match pa.v {
            0 => action_v0(&ctx, g, kk, 0, pa.m_trunc, false),
            1 => action_v1(&ctx, g, kk, 0, pa.m_trunc, false),
            _ => Err(WbError::BadInput("v must be 0 or 1".into())),
        }
    };
    let sp = build_space(&ctx, &su, act, pa.prec.cutoff)?;
    let mut ops = pa.ops.clone();
    if !ops.contains(&OpTag::Up) {
        ops.insert(0, OpTag::Up);
    }
    let mut hecke = Vec::new();
    let mut fulls: Vec<(OpTag, FullOperator)> = Vec::new();
    for tag in &ops {
        match *tag {
            OpTag::Sl(l) => {
                let scalar = ctx.pow_signed(&ctx.from_i64(l as i64), kk)?;
                hecke.push(scalar_operator(&ctx, &sp, l, &scalar));
            }
            OpTag::Up | OpTag::Tl(_) => {
                let l = if let OpTag::Tl(l) = *tag { l } else { 0 };
                let list = hecke_cosets(*tag, pa.p, l)?;
                let table = brandt_match(&su.datum, &su.splitting, &list, pa.seed)?;
                let full = hecke_full_blocks(&ctx, &su, &list, &table, sp.rank, act)?;
                hecke.push(restrict_operator(&ctx, &sp, &full)?);
                if pa.commutators {
                    fulls.push((*tag, full));
                }
            }
        }
    }
    let mut commutation = Vec::new();
    if pa.commutators {
        for w in fulls.windows(2) {
            let d = commutation_digits(&ctx, &sp, &w[0].1, &w[1].1);
            commutation.push((format!("[{},{}]", w[0].0, w[1].0), d));
        }
    }
    let up = &hecke[0];
    let cert_ctx = Zmod::new(pa.p, up.cert);
    let f = char_series(&cert_ctx, &up.mat);
    let report = slopes(&cert_ctx, &f)?;
    Ok(FixedOutcome {
        cert_ctx,
        dims: sp.dims.clone(),
        cert: sp.cert,
        f,
        report,
        hecke,
        commutation,
    })
}

pub struct ClassicalOutcome {
    pub ctx: Zmod,
    pub dims: Vec<usize>,
    pub f: Vec<BigUint>,
}

/// The classical pipeline: exact polynomial action, exact invariants.
pub fn classical_run(p: u32, k: i64, prec_n: u32, seed: u64) -> Result<ClassicalOutcome, WbError> {
    if k < 2 {
        return Err(WbError::BadInput("classical weight must be >= 2".into()));
    }
    let su = setup(p, prec_n)?;
    let ctx = Zmod::new(p, prec_n - 1);
    let kk = k - 2;
    let act = |g: &Mat2| action_classical(&ctx, g, kk, 0, false);
    let sp = build_space(&ctx, &su, act, ctx.prec)?;
    let list = hecke_cosets(OpTag::Up, p, 0)?;
    let table = brandt_match(&su.datum, &su.splitting, &list, seed)?;
    let full = hecke_full_blocks(&ctx, &su, &list, &table, sp.rank, act)?;
    let h = restrict_operator(&ctx, &sp, &full)?;
    let cctx = Zmod::new(p, h.cert);
    let f = char_series(&cctx, &h.mat);
    Ok(ClassicalOutcome {
        ctx: cctx,
        dims: sp.dims.clone(),
        f,
    })
}

pub struct FamilyParams {
    pub p: u32,
    pub k0: i64,
    pub scale_m: u32,
    pub w: usize,
    pub m_trunc: usize,
    pub prec: RunPrecision,
    pub seed: u64,
    /// near-kernel pivots deeper than this stay free in the t-order lifting
    pub rank_tol: u32,
}

pub struct FamilyOutcome {
    pub ctx: Zmod,
    pub fc: FamCtx,
    pub kappa: WeightCharacter,
    pub dims: Vec<usize>,
    pub cert: u32,
    pub lift_floor: u32,
    pub f: Vec<Fam>,
}

pub fn family_run(pa: &FamilyParams) -> Result<FamilyOutcome, WbError> {
    let su = setup(pa.p, pa.prec.n)?;
    let ctx = Zmod::new(pa.p, pa.prec.nw);
    let kappa = WeightCharacter::family(pa.p, pa.k0, pa.scale_m, pa.w);
    let fc = kappa.fam_ctx().unwrap();

    let act =
        |g: &Mat2| action_family_v0(&ctx, &fc, &kappa, g, pa.m_trunc);
    let fsp = build_family_space(&ctx, &fc, &su, act, pa.prec.cutoff, pa.rank_tol)?;
    let list = hecke_cosets(OpTag::Up, pa.p, 0)?;
    let table = brandt_match(&su.datum, &su.splitting, &list, pa.seed)?;
    let mat = family_hecke_up(&ctx, &fc, &su, &fsp, &table, act)?;
    let f = family_char_series(&ctx, &fc, &mat);
    Ok(FamilyOutcome {
        ctx,
        fc,
        kappa,
        dims: fsp.dims.clone(),
        cert: fsp.cert,
        lift_floor: fsp.lift_floor,
        f,
    })
}

/// d(k, h) read off a specialization of the family char series.
pub fn family_d_at_weight(fam: &FamilyOutcome, k: i64, h: Ratio<i64>) -> Result<usize, WbError> {
    let tk = family_t_of_weight(&fam.ctx, &fam.kappa, k)?;
    let f = specialize_char_series(&fam.ctx, &fam.fc, &fam.f, &tk)?;
    d_from_series(&fam.ctx, &f, h)
}

// ---------------------------------------------------------------------------
// JSON serialization.
// ---------------------------------------------------------------------------

pub fn ratio_string(r: Ratio<i64>) -> String {
    if *r.denom() == 1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn digit_char(d: u32) -> char {
    char::from_digit(d, 36).unwrap_or('?')
}

/// {valuation, digits, precision}: digits of the unit part, base p, least
/// significant first; null valuation means zero to working precision.
pub fn padic_json(ctx: &Zmod, x: &BigUint) -> Value {
    let v = ctx.val(x);
    if v >= ctx.prec {
        return json!({"valuation": Value::Null, "digits": "", "precision": ctx.prec});
    }
    let mut unit = ctx.shift_down(&ctx.red(x), v);
    let pb = BigUint::from(ctx.p);
    let mut s = String::new();
    for _ in 0..(ctx.prec - v) {
        let (q, r) = unit.div_rem(&pb);
        s.push(digit_char(r.to_u32().unwrap_or(0)));
        unit = q;
    }
    json!({"valuation": v, "digits": s, "precision": ctx.prec})
}

/// Inverse of `padic_json`; returns (residue, precision).
pub fn padic_from_json(p: u32, v: &Value) -> Result<(BigUint, u32), WbError> {
    let obj = v
        .as_object()
        .ok_or_else(|| WbError::BadInput("p-adic value is not an object".into()))?;
    let prec = obj
        .get("precision")
        .and_then(|x| x.as_u64())
        .ok_or_else(|| WbError::BadInput("missing precision".into()))? as u32;
    let val = obj.get("valuation").and_then(|x| x.as_u64());
    let Some(val) = val else {
        return Ok((BigUint::zero(), prec));
    };
    let digits = obj
        .get("digits")
        .and_then(|x| x.as_str())
        .ok_or_else(|| WbError::BadInput("missing digits".into()))?;
    let mut unit = BigUint::zero();
    let pb = BigUint::from(p);
    for ch in digits.chars().rev() {
        let d = ch
            .to_digit(36)
            .ok_or_else(|| WbError::BadInput(format!("bad digit '{}'", ch)))?;
        unit = unit * &pb + BigUint::from(d);
    }
    Ok((unit * pb.pow(val as u32), prec))
}

fn series_json(ctx: &Zmod, f: &[BigUint]) -> Value {
    Value::Array(f.iter().map(|c| padic_json(ctx, c)).collect())
}

fn matrix_json(ctx: &Zmod, m: &Mat) -> Value {
    Value::Array(m.iter().map(|row| series_json(ctx, row)).collect())
}

fn fam_series_json(ctx: &Zmod, f: &[Fam]) -> Value {
    Value::Array(
        f.iter()
            .map(|c| Value::Array(c.iter().map(|x| padic_json(ctx, x)).collect()))
            .collect(),
    )
}

fn polygon_json(report: &SlopesReport) -> Value {
    json!({
        "vertices": report.polygon.vertices.iter().map(|&(x, y)| json!([x, y])).collect::<Vec<_>>(),
        "slopes": report.slopes.iter().map(|&(s, l)| json!({
            "slope": ratio_string(s),
            "multiplicity": l,
        })).collect::<Vec<_>>(),
        "certified": report.certified,
    })
}

/// Assemble the final document: hash covers everything except `timings_ms`.
pub fn finish_document(config_echo: Value, result: Value, timings_ms: Value) -> Value {
    let mut hashed = Map::new();
    hashed.insert("schema_version".into(), json!(SCHEMA_VERSION));
    hashed.insert("config".into(), config_echo);
    hashed.insert("result".into(), result);
    let body = Value::Object(hashed);
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(&body).expect("serialize").as_bytes());
    let hash = hex::encode(hasher.finalize());
    let Value::Object(mut m) = body else { unreachable!() };
    m.insert("content_hash".into(), json!(hash));
    m.insert("timings_ms".into(), timings_ms);
    Value::Object(m)
}

fn write_document(doc: &Value, out: Option<&std::path::Path>) -> Result<(), WbError> {
    let text = serde_json::to_string_pretty(doc)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{}", text),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

fn hecke_json(ctx_of: impl Fn(&HeckeMatrix) -> Zmod, hecke: &[HeckeMatrix]) -> Value {
    Value::Array(
        hecke
            .iter()
            .map(|h| {
                let c = ctx_of(h);
                json!({
                    "op": h.tag.to_string(),
                    "cert": h.cert,
                    "matrix": matrix_json(&c, &h.mat),
                })
            })
            .collect(),
    )
}

/// Shared fixed-weight result body for `slopes` and `charpoly`.
fn fixed_result_json(cfg: &RunConfig, out: &FixedOutcome, with_slopes: bool) -> Value {
    let mut m = Map::new();
    m.insert("dims".into(), json!(out.dims));
    m.insert("cert".into(), json!(out.cert));
    m.insert("char_series".into(), series_json(&out.cert_ctx, &out.f));
    if with_slopes {
        m.insert("polygon".into(), polygon_json(&out.report));
    }
    let p = cfg.p;
    m.insert(
        "hecke".into(),
        hecke_json(|h| Zmod::new(p, h.cert), &out.hecke),
    );
    if !out.commutation.is_empty() {
        m.insert(
            "commutation".into(),
            json!(out
                .commutation
                .iter()
                .map(|(n, d)| json!({"pair": n, "digits": d}))
                .collect::<Vec<_>>()),
        );
    }
    Value::Object(m)
}

pub fn cmd_slopes(cfg: &RunConfig) -> Result<(Value, i32), WbError> {
    let k = cfg
        .k
        .ok_or_else(|| WbError::BadInput("slopes requires --k".into()))?;
    let prec = precision_with_n(cfg.trunc_m, cfg.prec_n)?;
    let t0 = std::time::Instant::now();
    let out = fixed_weight_run(&FixedParams {
        p: cfg.p,
        k,
        v: cfg.v,
        m_trunc: cfg.trunc_m,
        prec,
        seed: cfg.seed,
        ops: cfg.ops.clone(),
        commutators: cfg.ops.len() > 1,
    })?;
    let mut result = fixed_result_json(cfg, &out, true);
    let mut exit = if out.report.certified {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    };
    // classical comparison whenever h < k-1 makes the theorem applicable
    if let Some(h) = cfg.h {
        if h < Ratio::new(k - 1, 1) && k >= 2 {
            let cls = classical_run(cfg.p, k, prec.n, cfg.seed)?;
            let digits_required = out.cert_ctx.prec / 2;
            let cctx = Zmod::new(cfg.p, out.cert_ctx.prec.min(cls.ctx.prec));
            let rep = classical_compare(&cctx, &out.f, &cls.f, h, digits_required)?;
            if let Value::Object(m) = &mut result {
                m.insert(
                    "classical_compare".into(),
                    json!({
                        "h": ratio_string(h),
                        "d_overconvergent": rep.d_overconvergent,
                        "d_classical": rep.d_classical,
                        "agree_digits": rep.agree_digits,
                        "digits_required": digits_required,
                        "verdict": if rep.pass { "PASS" } else { "FAIL" },
                    }),
                );
            }
            if !rep.pass {
                exit = EXIT_ERROR;
            }
        }
    }
    let doc = finish_document(
        cfg.echo_json("slopes"),
        result,
        json!({"total": t0.elapsed().as_millis() as u64}),
    );
    write_document(&doc, cfg.out.as_deref())?;
    Ok((doc, exit))
}

pub fn cmd_charpoly(cfg: &RunConfig) -> Result<(Value, i32), WbError> {
    let k = cfg
        .k
        .ok_or_else(|| WbError::BadInput("charpoly requires --k".into()))?;
    let prec = precision_with_n(cfg.trunc_m, cfg.prec_n)?;
    let t0 = std::time::Instant::now();
    let out = fixed_weight_run(&FixedParams {
        p: cfg.p,
        k,
        v: cfg.v,
        m_trunc: cfg.trunc_m,
        prec,
        seed: cfg.seed,
        ops: cfg.ops.clone(),
        commutators: false,
    })?;
    let result = fixed_result_json(cfg, &out, false);
    let doc = finish_document(
        cfg.echo_json("charpoly"),
        result,
        json!({"total": t0.elapsed().as_millis() as u64}),
    );
    write_document(&doc, cfg.out.as_deref())?;
    Ok((doc, EXIT_OK))
}

pub fn cmd_family(cfg: &RunConfig, spec_weights: &[i64]) -> Result<(Value, i32), WbError> {
    let k0 = cfg
        .k0
        .ok_or_else(|| WbError::BadInput("family requires --k0".into()))?;
    let prec = precision_with_n(cfg.trunc_m, cfg.prec_n)?;
    let t0 = std::time::Instant::now();
    let fam = family_run(&FamilyParams {
        p: cfg.p,
        k0,
        scale_m: cfg.scale_m,
        w: cfg.family_w,
        m_trunc: cfg.trunc_m,
        prec,
        seed: cfg.seed,
        rank_tol: 8,
    })?;
    let mut result = Map::new();
    result.insert("dims".into(), json!(fam.dims));
    result.insert("cert".into(), json!(fam.cert));
    result.insert("lift_floor".into(), json!(fam.lift_floor));
    result.insert(
        "scaling".into(),
        json!({"note": "coefficient of t^d stored multiplied by p^{v_p(d!)}", "sc": fam.fc.sc}),
    );
    result.insert("char_series".into(), fam_series_json(&fam.ctx, &fam.f));
    // chart datum + local-constancy verdicts when h is configured
    if let Some(h) = cfg.h {
        let chart = family_slope_factor(&fam.ctx, &fam.fc, &fam.f, h)?;
        result.insert(
            "chart".into(),
            json!({
                "h": ratio_string(h),
                "degree": chart.q.len() - 1,
                "q": fam_series_json(&fam.ctx, &chart.q),
                "residual_floor": chart.floor,
            }),
        );
        let mut verdicts = Vec::new();
        let mut all_equal = true;
        let d0 = family_d_at_weight(&fam, k0, h)?;
        for &k in spec_weights {
            let d_fam = family_d_at_weight(&fam, k, h)?;
            let fixed = fixed_weight_run(&FixedParams {
                p: cfg.p,
                k,
                v: cfg.v,
                m_trunc: cfg.trunc_m,
                prec,
                seed: cfg.seed,
                ops: vec![OpTag::Up],
                commutators: false,
            })?;
            let d_fixed = d_from_series(&fixed.cert_ctx, &fixed.f, h)?;
            let equal = d_fam == d_fixed && d_fam == d0;
            all_equal &= equal;
            verdicts.push(json!({
                "k": k,
                "d_family": d_fam,
                "d_fixed": d_fixed,
                "d_center": d0,
                "equal": equal,
            }));
        }
        result.insert("local_constancy".into(), Value::Array(verdicts));
        result.insert(
            "local_constancy_verdict".into(),
            json!(if all_equal { "PASS" } else { "FAIL" }),
        );
        if !all_equal {
            let doc = finish_document(
                cfg.echo_json("family"),
                Value::Object(result),
                json!({"total": t0.elapsed().as_millis() as u64}),
            );
            write_document(&doc, cfg.out.as_deref())?;
            return Ok((doc, EXIT_ERROR));
        }
    }
    let doc = finish_document(
        cfg.echo_json("family"),
        Value::Object(result),
        json!({"total": t0.elapsed().as_millis() as u64}),
    );
    write_document(&doc, cfg.out.as_deref())?;
    Ok((doc, EXIT_OK))
}

/// BGG commutation check at (k1, k2) = (2, 0): with t = k1 - k2 + 1 = 3,
/// the identity E_3 U = p^3 U' E_3 holds exactly on all rows of E_3, where
/// U is the weight-(2,0) U_p block and U' the rescaled weight-(-2, 2)-side
/// block unit(det)^3 * action(A, -4).
pub fn cmd_bgg_check(cfg: &RunConfig) -> Result<(Value, i32), WbError> {
    let p = cfg.p;
    let m_trunc = cfg.trunc_m;
    let n = cfg.prec_n.unwrap_or(60);
    let t0 = std::time::Instant::now();
    let su = setup(p, n)?;
    let ctx = Zmod::new(p, n - 1);
    let list = hecke_cosets(OpTag::Up, p, 0)?;
    let table = brandt_match(&su.datum, &su.splitting, &list, cfg.seed)?;
    let act_low = |g: &Mat2| action_v0(&ctx, g, 2, 0, m_trunc, false);
    let act_high = |g: &Mat2| -> Result<Mat, WbError> {
        let det = crate::quaternion_arith::m2_det(&ctx, g);
        let v = ctx.val(&det);
        if v != 1 {
            return Err(WbError::MonoidMembership(format!(
                "U_p coset matrix must have det of valuation 1, got {}",
                v
            )));
        }
        let unit = ctx.shift_down(&det, 1);
        let u3 = ctx.pow_signed(&unit, 3)?;
        let m = action_v0(&ctx, g, -4, 0, m_trunc, false)?;
        Ok(m.iter()
            .map(|row| row.iter().map(|x| ctx.mul(x, &u3)).collect())
            .collect())
    };
    let low = hecke_full_blocks(&ctx, &su, &list, &table, m_trunc + 1, act_low)?;
    let high = hecke_full_blocks(&ctx, &su, &list, &table, m_trunc + 1, act_high)?;
    let e3 = differential_matrix(&ctx, 3, m_trunc)?;
    let p3 = ctx.pp(3);
    let dnum = su.datum.dnum();
    let mut pass = true;
    let mut worst: Option<(usize, usize, usize, usize)> = None;
    for i in 0..dnum {
        for j in 0..dnum {
            let lhs = mat_mul(&ctx, &e3.entries, &low.blocks[i][j]);
            let rhs0 = mat_mul(&ctx, &high.blocks[i][j], &e3.entries);
            let rhs: Mat = rhs0
                .iter()
                .map(|row| row.iter().map(|x| ctx.mul(x, &p3)).collect())
                .collect();
            let diff = mat_sub(&ctx, &lhs, &rhs);
            for (r, row) in diff.iter().enumerate() {
                for (c, x) in row.iter().enumerate() {
                    if !x.is_zero() {
                        pass = false;
                        if worst.is_none() {
                            worst = Some((i, j, r, c));
                        }
                    }
                }
            }
        }
    }
    let result = json!({
        "identity": "E_3 * U_p(2,0) = p^3 * U_p'(-4) * E_3",
        "rows_checked": m_trunc - 2,
        "precision": ctx.prec,
        "exact": pass,
        "first_failure": worst.map(|(i, j, r, c)| json!([i, j, r, c])),
    });
    let doc = finish_document(
        cfg.echo_json("bgg-check"),
        result,
        json!({"total": t0.elapsed().as_millis() as u64}),
    );
    write_document(&doc, cfg.out.as_deref())?;
    Ok((doc, if pass { EXIT_OK } else { EXIT_ERROR }))
}

// ---------------------------------------------------------------------------
// verify: recompute cheap invariants from a serialized document.
// ---------------------------------------------------------------------------

fn verify_fail(msgs: &mut Vec<String>, msg: String) {
    msgs.push(msg);
}

pub fn cmd_verify(path: &std::path::Path) -> Result<(Value, i32), WbError> {
    let text = std::fs::read_to_string(path)?;
    let doc: Value = serde_json::from_str(&text)?;
    let mut problems = Vec::new();
    let obj = doc
        .as_object()
        .ok_or_else(|| WbError::BadInput("document is not a JSON object".into()))?;
    // schema + hash over the timing-free region
    if obj.get("schema_version").and_then(|v| v.as_u64()) != Some(SCHEMA_VERSION as u64) {
        verify_fail(&mut problems, "schema_version mismatch".into());
    }
    let stored_hash = obj
        .get("content_hash")
        .and_then(|v| v.as_str())
        .unwrap_or("");
    let mut hashed = Map::new();
    for key in ["schema_version", "config", "result"] {
        hashed.insert(
            key.into(),
            obj.get(key).cloned().unwrap_or(Value::Null),
        );
    }
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(&Value::Object(hashed))?.as_bytes());
    if hex::encode(hasher.finalize()) != stored_hash {
        verify_fail(&mut problems, "content_hash mismatch".into());
    }
    let p = obj
        .get("config")
        .and_then(|c| c.get("p"))
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if let Some(result) = obj.get("result").and_then(|r| r.as_object()) {
        if let Some(series) = result.get("char_series").and_then(|s| s.as_array()) {
            verify_char_series(p, series, result, &mut problems)?;
        }
        if let Some(hecke) = result.get("hecke").and_then(|h| h.as_array()) {
            verify_hecke(p, hecke, result, &mut problems)?;
        }
    }
    let pass = problems.is_empty();
    let out = json!({
        "verified": pass,
        "problems": problems,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok((out, if pass { EXIT_OK } else { EXIT_ERROR }))
}

fn verify_char_series(
    p: u32,
    series: &[Value],
    result: &Map<String, Value>,
    problems: &mut Vec<String>,
) -> Result<(), WbError> {
    if series.is_empty() {
        verify_fail(problems, "empty char series".into());
        return Ok(());
    }
    let mut coeffs = Vec::new();
    let mut prec = 0u32;
    for v in series {
        let (x, pr) = padic_from_json(p, v)?;
        prec = pr;
        coeffs.push(x);
    }
    let ctx = Zmod::new(p, prec);
    if !ctx.red(&coeffs[0]).is_one() {
        verify_fail(problems, "char series constant term is not 1".into());
    }
    // polygon hull recomputation against the stored vertices and slopes
    if let Some(stored) = result.get("polygon") {
        let rep = slopes(&ctx, &coeffs)?;
        let want = polygon_json(&rep);
        if stored != &want {
            verify_fail(problems, "polygon/slopes do not match the series".into());
        }
    }
    Ok(())
}

fn verify_hecke(
    p: u32,
    hecke: &[Value],
    result: &Map<String, Value>,
    problems: &mut Vec<String>,
) -> Result<(), WbError> {
    let mut mats: Vec<(String, Zmod, Mat)> = Vec::new();
    for h in hecke {
        let obj = h
            .as_object()
            .ok_or_else(|| WbError::BadInput("hecke entry not an object".into()))?;
        let name = obj
            .get("op")
            .and_then(|v| v.as_str())
            .unwrap_or("?")
            .to_string();
        let cert = obj.get("cert").and_then(|v| v.as_u64()).unwrap_or(1) as u32;
        let ctx = Zmod::new(p, cert);
        let rows = obj
            .get("matrix")
            .and_then(|v| v.as_array())
            .ok_or_else(|| WbError::BadInput("hecke matrix missing".into()))?;
        let mut mat = Vec::new();
        for row in rows {
            let row = row
                .as_array()
                .ok_or_else(|| WbError::BadInput("hecke row not an array".into()))?;
            let mut out = Vec::new();
            for v in row {
                out.push(ctx.red(&padic_from_json(p, v)?.0));
            }
            mat.push(out);
        }
        mats.push((name, ctx, mat));
    }
    // stored full-module commutation depths are only checked for plausibility:
    // the restricted matrices must commute at least to the compressed depth
    if let Some(comm) = result.get("commutation").and_then(|v| v.as_array()) {
        for entry in comm {
            let pair = entry.get("pair").and_then(|v| v.as_str()).unwrap_or("");
            let digits = entry.get("digits").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
            // find the two named operators
            let names: Vec<&str> = pair
                .trim_matches(['[', ']'])
                .split(',')
                .map(|s| s.trim())
                .collect();
            if names.len() != 2 {
                continue;
            }
            let a = mats.iter().find(|(n, _, _)| n == names[0]);
            let b = mats.iter().find(|(n, _, _)| n == names[1]);
            if let (Some((_, ca, ma)), Some((_, _, mb))) = (a, b) {
                if ma.len() != mb.len() || ma.is_empty() {
                    continue;
                }
                let ab = mat_mul(ca, ma, mb);
                let ba = mat_mul(ca, mb, ma);
                let mv = crate::padic_arith::mat_min_val(ca, &mat_sub(ca, &ab, &ba));
                if mv == 0 && digits > 0 {
                    verify_fail(
                        problems,
                        format!("restricted commutator {} does not vanish at all", pair),
                    );
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_parsing() {
        assert_eq!(parse_ratio("2").unwrap(), Ratio::new(2, 1));
        assert_eq!(parse_ratio("2.9").unwrap(), Ratio::new(29, 10));
        assert_eq!(parse_ratio("29/10").unwrap(), Ratio::new(29, 10));
        assert_eq!(parse_ratio("-1.5").unwrap(), Ratio::new(-3, 2));
        assert!(parse_ratio("x").is_err());
        assert!(parse_ratio("1/0").is_err());
    }

    #[test]
    fn ops_parsing() {
        assert_eq!(
            parse_ops("Up,T5,S7").unwrap(),
            vec![OpTag::Up, OpTag::Tl(5), OpTag::Sl(7)]
        );
        assert_eq!(parse_ops("U_p, T_11").unwrap(), vec![OpTag::Up, OpTag::Tl(11)]);
        assert!(parse_ops("Q3").is_err());
    }

    #[test]
    fn config_precedence() {
        let dir = std::env::temp_dir().join("wb-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "p = 5\ntrunc-M = 20 # comment\nseed = 3\n").unwrap();
        let flags = vec![("seed".to_string(), "9".to_string())];
        let cfg = resolve_config(Some(&path), &flags).unwrap();
        assert_eq!(cfg.p, 5);
        assert_eq!(cfg.trunc_m, 20);
        assert_eq!(cfg.seed, 9); // flag wins over file
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::default();
        cfg.p = 2;
        assert!(cfg.validate().is_err());
        cfg.p = 9;
        assert!(cfg.validate().is_err());
        cfg.p = 3;
        cfg.k = Some(50);
        cfg.trunc_m = 10;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn padic_json_roundtrip() {
        let ctx = Zmod::new(3, 12);
        for x in [0i64, 1, 3, 7, 45, -2] {
            let v = ctx.from_i64(x);
            let j = padic_json(&ctx, &v);
            let (back, prec) = padic_from_json(3, &j).unwrap();
            assert_eq!(prec, 12);
            assert_eq!(ctx.red(&back), v, "roundtrip of {}", x);
        }
    }

    #[test]
    fn document_hash_deterministic() {
        let cfg = RunConfig::default();
        let d1 = finish_document(cfg.echo_json("x"), json!({"a": 1}), json!({"total": 5}));
        let d2 = finish_document(cfg.echo_json("x"), json!({"a": 1}), json!({"total": 99}));
        assert_eq!(d1.get("content_hash"), d2.get("content_hash"));
        let d3 = finish_document(cfg.echo_json("x"), json!({"a": 2}), json!({"total": 5}));
        assert_ne!(d1.get("content_hash"), d3.get("content_hash"));
    }

    #[test]
    fn precision_schedule() {
        let pr = precision_for(40);
        assert_eq!(pr.cutoff, 26);
        assert_eq!(pr.nw, 66);
        assert_eq!(pr.n, 76);
        let pr2 = precision_for(132);
        assert_eq!(pr2.cutoff, 78);
    }
}
