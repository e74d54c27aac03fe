use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sawlab_core::hexobs::{
    strip_identity_check, strip_recursion_check, vertex_identity_check, HexError, HexZ, RecursionVerdict,
};
use sawlab_core::hwbounds::{nth_root_decimal, verify_hw_chain, verify_polygon_inequality, BRACKET_DIGITS};
use sawlab_core::lattice::{strip_domain, LatticeError, LatticeSpec};
use sawlab_core::laceexp::{
    low_order_checks, pi_hat_series, pi_via_laces, pi_via_recursion, verify_kj_identities, LaceError,
};
use sawlab_core::precise::Precise;
use sawlab_core::series::{
    bubble_series, chi_lower_bound_check, diagrammatic_bound_check, fourier_two_point, simon_lieb_check,
    srw_reference, susceptibility_ode_check, susceptibility_series, SeriesError, SrwTask, SrwValue, Verdict,
};
use sawlab_core::superint::{
    convert_form, integration_by_parts_check, loop_model_expansion, random_covariance, random_covariance_exact,
    random_form, random_tau_polynomial, saw_representation_check, to_exact, wick_permanent, Cf, Cq, Form,
    Gaussian, Matrix, Scalar, SuperError, DEFAULT_CAP,
};
use sawlab_core::walks::{
    count_half_space_and_bridges, count_polygons, count_saws, count_walks, parse_lambda, EngineConfig, WalkError,
};
use serde_json::{json, Value};

use crate::args::{GrassmannCheck, HexCheck, SeriesCheck, SrwArg};
use crate::report::{witness, witness_with, CheckReport, Outcome, Table, Witness};

/// Vertex and strip residual tolerance at 53 bits.
pub const HEX_TOL_F64: f64 = 1e-12;
/// Above 53 bits the tolerance is `2^-(bits - HEX_TOL_SLACK_BITS)`.
pub const HEX_TOL_SLACK_BITS: i32 = 10;
pub const GRASSMANN_NORM_TOL: f64 = 1e-10;
pub const GRASSMANN_WICK_TOL: f64 = 1e-12;
pub const GRASSMANN_TOL: f64 = 1e-9;
/// Rounding allowance on the f64 closed form of the 1-d two-point function.
pub const CLOSED_FORM_ROUNDING: f64 = 1e-12;
/// Exact covariances are the seeded ones rounded to multiples of `1/EXACT_DENOM`.
pub const EXACT_DENOM: i64 = 1024;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Budget(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Runtime(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Budget(m) | CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::Budget(_) => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LaceError> for CliError {
    fn from(e: LaceError) -> Self {
        match e {
            LaceError::Walk(w) => w.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        match e {
            SeriesError::Walk(w) => w.into(),
            SeriesError::Lace(l) => l.into(),
            SeriesError::Quadrature(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<HexError> for CliError {
    fn from(e: HexError) -> Self {
        match e {
            HexError::Budget(_) => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SuperError> for CliError {
    fn from(e: SuperError) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub struct Ctx {
    pub cfg: EngineConfig,
    pub bits: usize,
}

pub struct Computed {
    pub data: Value,
    pub reports: Vec<CheckReport>,
    pub table: Option<Table>,
}

/// `p/q`, an integer, or an exact decimal such as `2.638`.
pub fn parse_rational(s: &str) -> Result<BigRational, CliError> {
    let s = s.trim();
    let bad = || CliError::Usage(format!("`{s}` is not an exact rational"));
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let r = BigRational::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    s.parse().map_err(|_| bad())
}

/// A decimal with an optional exponent, such as `5.41e-1`.
fn parse_scientific(s: &str) -> Result<BigRational, CliError> {
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| CliError::Runtime(format!("bad exponent in `{s}`")))?),
        None => (s, 0),
    };
    let m = parse_rational(mantissa)?;
    let ten = BigRational::from_integer(10.into());
    Ok(if exp >= 0 { m * Pow::pow(&ten, exp as u32) } else { m / Pow::pow(&ten, (-exp) as u32) })
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    s.split(',').map(|p| f(p.trim())).collect()
}

fn parse_point(s: &str) -> Result<Vec<i32>, CliError> {
    parse_list(s, |p| p.parse().map_err(|_| CliError::Usage(format!("`{p}` is not an integer coordinate"))))
}

fn parse_lambda_arg(s: &str) -> Result<BigRational, CliError> {
    parse_lambda(s).map_err(|e| CliError::Usage(e.to_string()))
}

fn strings<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn int(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

fn lattice_input(spec: &LatticeSpec) -> (&'static str, String) {
    ("lattice", spec.to_string())
}

pub fn count(ctx: &Ctx, spec: &LatticeSpec, n: usize, lambda: &str) -> Result<Computed, CliError> {
    let lambda = parse_lambda_arg(lambda)?;
    let c: Vec<BigRational> = if lambda.is_one() {
        count_saws(spec, n, false, &ctx.cfg)?.totals.iter().map(int).collect()
    } else {
        count_walks(spec, n, &lambda, false, &ctx.cfg)?.totals
    };
    let inputs = [lattice_input(spec), ("n", n.to_string()), ("lambda", lambda.to_string())];
    let deg = BigRational::from_integer(spec.degree().into());
    let step: Vec<Witness> = (1..=n)
        .map(|k| {
            let rhs = &deg * Pow::pow(&deg - BigRational::one(), (k - 1) as u32);
            witness(format!("n={k}"), &c[k], &rhs, c[k] <= rhs)
        })
        .collect();
    let mut sub = Vec::new();
    for a in 1..=n {
        for b in 1..=a.min(n - a) {
            let rhs = &c[a] * &c[b];
            sub.push(witness(format!("n={a},m={b}"), &c[a + b], &rhs, c[a + b] <= rhs));
        }
    }
    let mut table = Table::new(&["n", "c_n"]);
    for (k, v) in c.iter().enumerate() {
        table.push(vec![k.to_string(), v.to_string()]);
    }
    Ok(Computed {
        data: json!({"lattice": spec.to_string(), "lambda": lambda.to_string(), "n": n, "c": strings(&c)}),
        reports: vec![
            CheckReport::new("count.step_bound", &inputs, step),
            CheckReport::new("count.submultiplicative", &inputs, sub),
        ],
        table: Some(table),
    })
}

pub fn bridge(ctx: &Ctx, spec: &LatticeSpec, n: usize, mu: Option<&str>) -> Result<Computed, CliError> {
    let mu = mu.map(parse_rational).transpose()?;
    let hb = count_half_space_and_bridges(spec, n, false, &ctx.cfg)?;
    let b = hb.bridges.totals;
    let h = hb.half_space.totals;
    let c = count_saws(spec, n, false, &ctx.cfg)?.totals;
    let mut inputs = vec![lattice_input(spec), ("n", n.to_string())];
    let mut sup = Vec::new();
    for a in 1..=n {
        for m in 1..=a.min(n - a) {
            let rhs = &b[a] * &b[m];
            sup.push(witness(format!("n={a},m={m}"), &b[a + m], &rhs, b[a + m] >= rhs));
        }
    }
    let ord: Vec<Witness> = (0..=n)
        .map(|k| {
            witness(format!("n={k}"), format!("{} <= {}", b[k], h[k]), &c[k], b[k] <= h[k] && h[k] <= c[k])
        })
        .collect();
    let lower = nth_root_decimal(&b[n], n, BRACKET_DIGITS);
    let upper = nth_root_decimal(&c[n], n, BRACKET_DIGITS);
    let mut reports = vec![
        CheckReport::new("bridge.supermultiplicative", &inputs, sup),
        CheckReport::new("bridge.ordering", &inputs, ord),
    ];
    if let Some(mu) = &mu {
        inputs.push(("mu", mu.to_string()));
        let p = Pow::pow(mu, n as u32);
        let w = vec![
            witness("lower < mu", &lower, mu, int(&b[n]) < p),
            witness("mu < upper", mu, &upper, p < int(&c[n])),
        ];
        reports.push(CheckReport::new("bridge.mu_bracket", &inputs, w));
    }
    let mut table = Table::new(&["n", "b_n", "h_n", "c_n"]);
    for k in 0..=n {
        table.push(vec![k.to_string(), b[k].to_string(), h[k].to_string(), c[k].to_string()]);
    }
    Ok(Computed {
        data: json!({
            "lattice": spec.to_string(), "n": n,
            "b": strings(&b), "h": strings(&h), "c": strings(&c),
            "lower": lower, "upper": upper,
        }),
        reports,
        table: Some(table),
    })
}

pub fn polygon(ctx: &Ctx, spec: &LatticeSpec, n: usize) -> Result<Computed, CliError> {
    let mut q = BTreeMap::new();
    for m in (4..=2 * n).step_by(2) {
        q.insert(m.to_string(), count_polygons(spec, m, &ctx.cfg)?.to_string());
    }
    let r = verify_polygon_inequality(spec, n, &ctx.cfg)?;
    let inputs = [lattice_input(spec), ("n", n.to_string())];
    let sq = r.rows.iter().map(|row| witness(format!("n={}", row.n), &row.sum_b_squared, &row.rhs, row.holds)).collect();
    let cor = r
        .rows
        .iter()
        .map(|row| witness(format!("n={}", row.n), &row.b_n_squared, &row.corollary_rhs, row.corollary_holds))
        .collect();
    let mut table = Table::new(&["n", "sum_b_squared", "rhs", "holds"]);
    for row in &r.rows {
        table.push(vec![row.n.to_string(), row.sum_b_squared.clone(), row.rhs.clone(), row.holds.to_string()]);
    }
    Ok(Computed {
        data: json!({"lattice": spec.to_string(), "n": n, "q": q, "rows": r.rows}),
        reports: vec![
            CheckReport::new("polygon.bridge_square", &inputs, sq),
            CheckReport::new("polygon.corollary", &inputs, cor),
        ],
        table: Some(table),
    })
}

pub fn hw(ctx: &Ctx, spec: &LatticeSpec, n: usize) -> Result<Computed, CliError> {
    let r = verify_hw_chain(spec, n, &ctx.cfg)?;
    let inputs = [lattice_input(spec), ("n", n.to_string())];
    let rows = &r.rows;
    let label = |n: usize| format!("n={n}");
    let walk = rows.iter().map(|x| witness(label(x.n), &x.c_n, &x.half_space_sum, x.walk_bound)).collect();
    let span = rows.iter().map(|x| witness(label(x.n), &x.h_n, &x.span_weighted_bridges, x.span_bound)).collect();
    let part = rows.iter().map(|x| witness(label(x.n), &x.h_n, &x.pd_times_b_n, x.partition_bound)).collect();
    let asm = rows.iter().map(|x| witness(label(x.n), &x.c_n, &x.assembled_rhs, x.assembled_bound)).collect();
    let mut reports = vec![
        CheckReport::new("hw.walk_split", &inputs, walk),
        CheckReport::new("hw.span", &inputs, span),
        CheckReport::new("hw.partition", &inputs, part),
        CheckReport::new("hw.assembled", &inputs, asm),
    ];
    if spec.is_nearest() {
        let d = spec.dim() as f64;
        let kes = r
            .kesten_ratios
            .iter()
            .map(|&(n, ratio)| {
                witness(label(n), ratio, format!("[{}, {}]", d * d, (2.0 * d - 1.0).powi(2)), ratio >= d * d && ratio <= (2.0 * d - 1.0).powi(2))
            })
            .collect();
        reports.push(CheckReport::new("hw.kesten", &inputs, kes));
    }
    let mut table = Table::new(&["n", "c_n", "half_space_sum", "h_n", "span_weighted_bridges", "pd_times_b_n", "assembled_rhs"]);
    for x in rows {
        table.push(vec![
            x.n.to_string(),
            x.c_n.clone(),
            x.half_space_sum.clone(),
            x.h_n.clone(),
            x.span_weighted_bridges.clone(),
            x.pd_times_b_n.clone(),
            x.assembled_rhs.clone(),
        ]);
    }
    Ok(Computed {
        data: serde_json::to_value(&r).map_err(|e| CliError::Runtime(e.to_string()))?,
        reports,
        table: Some(table),
    })
}

pub fn lace(
    ctx: &Ctx,
    spec: &LatticeSpec,
    m_max: usize,
    n_max: Option<usize>,
    check_recursion: bool,
    kj_b_max: Option<u32>,
) -> Result<Computed, CliError> {
    let n_max = n_max.unwrap_or(m_max);
    let t = pi_via_laces(spec, m_max, n_max, &ctx.cfg)?;
    let inputs = [lattice_input(spec), ("m_max", m_max.to_string()), ("n_max", n_max.to_string())];
    let nonneg = t
        .by_n
        .iter()
        .map(|(&(m, n), map)| {
            let min = map.values().min().cloned().unwrap_or_else(BigInt::zero);
            witness(format!("m={m},N={n}"), format!("min {min}"), "0", !min.is_negative())
        })
        .collect();
    let pi1 = t.pi.get(1).map(|m| m.len()).unwrap_or(0);
    let mut reports = vec![
        CheckReport::new("lace.nonnegative", &inputs, nonneg),
        CheckReport::new(
            "lace.pi1_zero",
            &inputs,
            vec![witness("nonzero entries of pi_1", pi1, 0, pi1 == 0)],
        ),
    ];
    let low = low_order_checks(&t)
        .into_iter()
        .map(|c| witness(c.name, c.computed, c.expected, c.holds))
        .collect();
    reports.push(CheckReport::new("lace.low_order", &inputs, low));
    if check_recursion {
        let r = pi_via_recursion(spec, m_max, &ctx.cfg)?;
        let (a, b) = (t.pi_hat(), r.pi_hat());
        let w = (1..=m_max)
            .map(|m| witness(format!("m={m}"), &a[m], &b[m], t.pi[m] == r.pi[m]))
            .collect();
        reports.push(CheckReport::new("lace.recursion", &inputs, w));
    }
    if let Some(b_max) = kj_b_max {
        let k = verify_kj_identities(spec, b_max)?;
        let w = vec![
            witness("walks checked", k.walks_checked, "> 0", k.walks_checked > 0),
            witness("graph expansion failures", k.graph_expansion_failures, 0, k.graph_expansion_failures == 0),
            witness("lace vs graph failures", k.lace_vs_graph_failures, 0, k.lace_vs_graph_failures == 0),
            witness("recursion failures", k.recursion_failures, 0, k.recursion_failures == 0),
        ];
        let mut inputs = inputs.to_vec();
        inputs.push(("kj_b_max", b_max.to_string()));
        reports.push(CheckReport::new("lace.kj", &inputs, w));
    }
    let s = pi_hat_series(&t);
    let mut table = Table::new(&["m", "pi_hat", "pi_hat_1", "pi_hat_2"]);
    for m in 0..s.total.len() {
        table.push(vec![m.to_string(), s.total[m].clone(), s.one_loop[m].clone(), s.two_loop[m].clone()]);
    }
    let pi: Vec<Value> = t
        .pi
        .iter()
        .map(|map| Value::Array(map.iter().map(|(x, v)| json!({"x": x, "value": v.to_string()})).collect()))
        .collect();
    Ok(Computed {
        data: json!({"lattice": spec.to_string(), "m_max": m_max, "n_max": n_max, "pi_hat": s, "pi": pi}),
        reports,
        table: Some(table),
    })
}

pub struct SeriesArgs<'a> {
    pub check: SeriesCheck,
    pub n_max: usize,
    pub z: Option<&'a str>,
    pub k: Option<&'a str>,
    pub lambda: &'a str,
    pub half_width: i32,
    pub x: Option<&'a str>,
    pub y: Option<&'a str>,
}

fn verdict_outcome(v: Verdict) -> Outcome {
    match v {
        Verdict::Holds => Outcome::Pass,
        Verdict::Violated => Outcome::Fail,
        Verdict::Inconclusive => Outcome::Inconclusive,
    }
}

pub fn series(ctx: &Ctx, spec: &LatticeSpec, a: &SeriesArgs) -> Result<Computed, CliError> {
    let n = a.n_max;
    let mut inputs = vec![lattice_input(spec), ("n_max", n.to_string())];
    let need_z = || -> Result<BigRational, CliError> {
        parse_rational(a.z.ok_or_else(|| CliError::Usage("this check needs --z".into()))?)
    };
    match a.check {
        SeriesCheck::Coefficients => {
            let lambda = parse_lambda_arg(a.lambda)?;
            let chi = susceptibility_series(spec, &lambda, n, &ctx.cfg)?;
            let bubble = if lambda.is_one() { Some(bubble_series(spec, n, &ctx.cfg)?) } else { None };
            let mut table = Table::new(&["n", "chi_n", "bubble_n"]);
            for k in 0..=n {
                let bb = bubble.as_ref().map(|b| b.coeff(k).to_string()).unwrap_or_default();
                table.push(vec![k.to_string(), chi.coeff(k).to_string(), bb]);
            }
            Ok(Computed {
                data: json!({
                    "lattice": spec.to_string(), "lambda": lambda.to_string(), "n_max": n,
                    "chi": chi.to_strings(), "bubble": bubble.map(|b| b.to_strings()),
                }),
                reports: vec![],
                table: Some(table),
            })
        }
        SeriesCheck::Ode => {
            let r = susceptibility_ode_check(spec, n, &ctx.cfg)?;
            let w = r
                .lhs
                .iter()
                .zip(&r.rhs)
                .enumerate()
                .map(|(k, (l, rr))| witness(format!("[z^{k}]"), l, rr, l == rr))
                .collect();
            Ok(Computed {
                data: serde_json::to_value(&r).unwrap_or(Value::Null),
                reports: vec![CheckReport::new("series.ode", &inputs, w)],
                table: None,
            })
        }
        SeriesCheck::ChiBound => {
            let r = chi_lower_bound_check(spec, n, &ctx.cfg)?;
            let c = count_saws(spec, n, false, &ctx.cfg)?.totals;
            let b: BigUint = r.b_n.parse().map_err(|_| CliError::Runtime("bad b_n".into()))?;
            let w = (0..=n)
                .map(|k| {
                    let lhs = Pow::pow(&b, k as u32);
                    let rhs = Pow::pow(&c[k], n as u32);
                    witness(format!("k={k}"), &lhs, &rhs, !r.violations.contains(&k))
                })
                .collect();
            Ok(Computed {
                data: serde_json::to_value(&r).unwrap_or(Value::Null),
                reports: vec![CheckReport::new("series.chi_lower_bound", &inputs, w)],
                table: None,
            })
        }
        SeriesCheck::Fourier => {
            let z = need_z()?;
            let k_str = a.k.ok_or_else(|| CliError::Usage("fourier needs --k".into()))?;
            let k = parse_list(k_str, parse_rational)?;
            inputs.push(("z", z.to_string()));
            inputs.push(("k", k_str.to_string()));
            inputs.push(("bits", ctx.bits.to_string()));
            let r = fourier_two_point(spec, &z, &k, n, ctx.bits, &ctx.cfg)?;
            let rc = &r.reciprocal;
            let mut reports = vec![CheckReport::new(
                "series.fourier_reciprocal",
                &inputs,
                vec![witness("|residual - excess|", (rc.residual - rc.excess).abs(), rc.tolerance, rc.holds)],
            )];
            if spec.dim() == 1 && spec.is_nearest() {
                let zf = z.to_f64().unwrap_or(f64::NAN);
                let kf = std::f64::consts::PI * k[0].to_f64().unwrap_or(f64::NAN);
                let closed = (1.0 - zf * zf) / (1.0 + zf * zf - 2.0 * zf * kf.cos());
                let diff = (r.value_f64 - closed).abs();
                let bound = r.tail_bound + CLOSED_FORM_ROUNDING;
                reports.push(CheckReport::new(
                    "series.fourier_closed_form",
                    &inputs,
                    vec![witness(format!("|G - closed form|, closed form = {closed:e}"), diff, bound, diff <= bound)],
                ));
            }
            Ok(Computed {
                data: serde_json::to_value(&r).unwrap_or(Value::Null),
                reports,
                table: None,
            })
        }
        SeriesCheck::SimonLieb => {
            let lambda = parse_lambda_arg(a.lambda)?;
            let d = spec.dim() as usize;
            let x = a.x.map(parse_point).transpose()?.unwrap_or_else(|| vec![0; d]);
            let y = a.y.map(parse_point).transpose()?.unwrap_or_else(|| spec.unit(0));
            if x.len() != d || y.len() != d {
                return Err(CliError::Usage(format!("points need {d} coordinates")));
            }
            inputs.push(("lambda", lambda.to_string()));
            inputs.push(("half_width", a.half_width.to_string()));
            inputs.push(("x", format!("{x:?}")));
            inputs.push(("y", format!("{y:?}")));
            let r = simon_lieb_check(spec, &lambda, a.half_width, &x, &y, n, &ctx.cfg)?;
            let mut w = Vec::new();
            for (k, (l, rr)) in r.lhs.iter().zip(&r.rhs).enumerate() {
                let (lq, rq) = (parse_rational(l)?, parse_rational(rr)?);
                w.push(witness(format!("[z^{k}]"), l, rr, lq <= rq));
            }
            Ok(Computed {
                data: serde_json::to_value(&r).unwrap_or(Value::Null),
                reports: vec![CheckReport::new("series.simon_lieb", &inputs, w)],
                table: None,
            })
        }
        SeriesCheck::Diagrammatic => {
            let z = need_z()?;
            inputs.push(("z", z.to_string()));
            let r = diagrammatic_bound_check(spec, &z, n, &ctx.cfg)?;
            let w = r
                .checks
                .iter()
                .map(|c| {
                    witness_with(
                        c.name.clone(),
                        format!("[{:e}, {:e}]", c.lhs.lower, c.lhs.upper),
                        format!("[{:e}, {:e}]", c.rhs.lower, c.rhs.upper),
                        verdict_outcome(c.verdict),
                    )
                })
                .collect();
            Ok(Computed {
                data: serde_json::to_value(&r).unwrap_or(Value::Null),
                reports: vec![CheckReport::new("series.diagrammatic", &inputs, w)],
                table: None,
            })
        }
    }
}

fn hex_tolerance(bits: usize) -> f64 {
    if bits <= 53 {
        HEX_TOL_F64
    } else {
        2f64.powi(-(bits as i32 - HEX_TOL_SLACK_BITS))
    }
}

/// Bracket of `z_c = 1/√(2+√2)` from integer square roots at `bits` binary digits.
pub fn zc_bracket(bits: usize) -> (BigRational, BigRational) {
    let one = BigUint::one();
    let scale = &one << bits;
    let s_lo = (BigUint::from(2u32) * &scale * &scale).sqrt();
    let s_hi = &s_lo + 1u32;
    let two = BigUint::from(2u32) * &scale;
    let u_lo = ((&two + &s_lo) * &scale).sqrt();
    let u_hi = ((&two + &s_hi) * &scale).sqrt() + 1u32;
    let sc = BigInt::from(scale);
    (
        BigRational::new(sc.clone(), BigInt::from(u_hi)),
        BigRational::new(sc, BigInt::from(u_lo)),
    )
}

fn decimal(r: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let v = (r * BigRational::from_integer(scale.clone())).floor().to_integer();
    let s = format!("{:0>width$}", v.abs(), width = digits + 1);
    let (i, f) = s.split_at(s.len() - digits);
    format!("{}{i}.{f}", if v.is_negative() { "-" } else { "" })
}

pub struct HexArgs<'a> {
    pub t: Option<u32>,
    pub l: Option<u32>,
    pub z: &'a str,
    pub sigma: &'a str,
    pub check: HexCheck,
    pub l_max: &'a str,
}

pub fn hex(ctx: &Ctx, a: &HexArgs) -> Result<Computed, CliError> {
    let bits = ctx.bits;
    let z = HexZ::parse(a.z)?;
    let sigma = parse_rational(a.sigma)?;
    let tol = hex_tolerance(bits);
    let mut inputs = vec![("z", z.to_string()), ("sigma", sigma.to_string()), ("bits", bits.to_string())];
    let mut reports = Vec::new();
    let (lo, hi) = zc_bracket(bits);
    let zc_value = if bits == 53 {
        let v = sawlab_core::hexobs::critical_z::<f64>(bits);
        (BigRational::from_float(v).unwrap_or_else(BigRational::zero), format!("{v:e}"))
    } else {
        let v: Precise = sawlab_core::hexobs::critical_z(bits);
        let d = v.to_decimal(bits * 3 / 10 + 5);
        (parse_scientific(&d)?, d)
    };
    // Rounding of the float value and of its decimal may leave it a few ulps outside.
    let ulp = BigRational::new(BigInt::one(), BigInt::one() << (bits - 4));
    let inside = zc_value.0 >= &lo - &ulp && zc_value.0 <= &hi + &ulp;
    let digits = bits * 3 / 10;
    reports.push(CheckReport::new(
        "hex.zc_bracket",
        &[("bits", bits.to_string())],
        vec![witness(
            "z_c",
            &zc_value.1,
            format!("[{}, {}]", decimal(&lo, digits), decimal(&hi, digits)),
            inside,
        )],
    ));
    let need = |v: Option<u32>, name: &str| v.ok_or_else(|| CliError::Usage(format!("this check needs --{name}")));
    let data = match a.check {
        HexCheck::Vertex => {
            let (t, l) = (need(a.t, "T")?, need(a.l, "L")?);
            inputs.push(("T", t.to_string()));
            inputs.push(("L", l.to_string()));
            let strip = strip_domain(t, l);
            let r = vertex_identity_check(&strip.domain, strip.start, &z, &sigma, bits, &ctx.cfg)?;
            reports.push(CheckReport::new(
                "hex.vertex_identity",
                &inputs,
                vec![witness(
                    format!("max over {} vertices", r.vertices),
                    &r.max_residual_decimal,
                    format!("{tol:e}"),
                    r.max_residual < tol,
                )],
            ));
            serde_json::to_value(&r).unwrap_or(Value::Null)
        }
        HexCheck::Strip => {
            let (t, l) = (need(a.t, "T")?, need(a.l, "L")?);
            if z != HexZ::critical() {
                return Err(CliError::Usage("the strip identity is evaluated at z = zc".into()));
            }
            inputs.push(("T", t.to_string()));
            inputs.push(("L", l.to_string()));
            let r = strip_identity_check(t, l, bits, &ctx.cfg)?;
            reports.push(CheckReport::new(
                "hex.strip_identity",
                &inputs,
                vec![witness("|c_alpha A + B + c_eps E - 1|", &r.residual_decimal, format!("{tol:e}"), r.residual < tol)],
            ));
            reports.push(CheckReport::new(
                "hex.strip_windings",
                &inputs,
                vec![witness("windings", format!("{:?}", r.windings), "alpha 3|-3, beta 0, eps 2, eps_bar -2", r.windings_ok)],
            ));
            serde_json::to_value(&r).unwrap_or(Value::Null)
        }
        HexCheck::Recursion => {
            let l_max = parse_list(a.l_max, |p| {
                p.parse::<u32>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| CliError::Usage(format!("`{p}` is not a positive width")))
            })?;
            if l_max.len() < 2 {
                return Err(CliError::Usage("--l-max needs at least two strip widths".into()));
            }
            inputs.push(("l_max", a.l_max.to_string()));
            let r = strip_recursion_check(&l_max, &ctx.cfg)?;
            let w = r
                .steps
                .iter()
                .map(|s| {
                    let o = match s.verdict {
                        RecursionVerdict::Holds => Outcome::Pass,
                        RecursionVerdict::Violated => Outcome::Fail,
                        RecursionVerdict::Inconclusive => Outcome::Inconclusive,
                    };
                    witness_with(
                        format!("T={}", s.t),
                        format!("[{:e}, {:e}]", s.lhs.lower, s.lhs.upper),
                        format!("[{:e}, {:e}]", s.rhs.lower, s.rhs.upper),
                        o,
                    )
                })
                .collect();
            reports.push(CheckReport::new("hex.recursion", &inputs, w));
            serde_json::to_value(&r).unwrap_or(Value::Null)
        }
    };
    Ok(Computed {
        data: json!({"zc": zc_value.1, "result": data}),
        reports,
        table: None,
    })
}

pub struct GrassmannArgs<'a> {
    pub m: usize,
    pub seed: u64,
    pub seeds: u32,
    pub check: GrassmannCheck,
    pub matrix: Option<&'a Path>,
    pub exact: bool,
}

/// Rows of `[re, im]` pairs.
pub fn read_matrix(path: &Path) -> Result<Matrix<Cf>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Usage("matrix must be square and non-empty".into()));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Usage("matrix entries must be finite".into()));
    }
    Ok(Matrix::from_fn(n, |i, j| Cf::new(rows[i][j][0], rows[i][j][1])))
}

fn grassmann_witnesses<S: Scalar>(
    c: &Matrix<S>,
    check: GrassmannCheck,
    seed: u64,
    exact: bool,
) -> Result<Vec<Witness>, CliError> {
    let m = c.n;
    let g = Gaussian::from_covariance(c)?;
    let tol = |t: f64| if exact { 0.0 } else { t };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cmp = |label: String, lhs: &S, rhs: &S, t: f64| {
        let r = (lhs.clone() - rhs.clone()).mag();
        witness(label, lhs.render(), rhs.render(), r <= tol(t) * lhs.mag().max(1.0))
    };
    let mut out = Vec::new();
    match check {
        GrassmannCheck::Norm => {
            out.push(cmp(format!("seed={seed}"), &g.superexpectation(&Form::one(m)), &S::one(), GRASSMANN_NORM_TOL));
        }
        GrassmannCheck::Wick => {
            for k in 1..=m.min(4) {
                let xs: Vec<usize> = (0..k).collect();
                let ys: Vec<usize> = (m - k..m).rev().collect();
                let mut f = Form::one(m);
                for (&x, &y) in xs.iter().zip(&ys) {
                    f = f.mul(&Form::phibar(m, x)).mul(&Form::phi(m, y));
                }
                let lhs = g.superexpectation(&f);
                let label = format!("seed={seed},k={k}");
                match wick_permanent(c, &xs, &ys) {
                    Ok(p) => out.push(cmp(label, &lhs, &p, GRASSMANN_WICK_TOL)),
                    Err(e) => out.push(witness(label, lhs.render(), e.to_string(), false)),
                }
            }
        }
        GrassmannCheck::Ibp => {
            let f = convert_form::<S>(&random_form(m, 6, &mut rng));
            for a in 0..m {
                let r = integration_by_parts_check(&g, a, &f, tol(GRASSMANN_TOL))?;
                out.push(witness(format!("seed={seed},a={a}"), r.lhs, r.rhs, r.holds));
            }
        }
        GrassmannCheck::Repsaw => {
            let r = saw_representation_check(&g, 0, m - 1, DEFAULT_CAP, tol(GRASSMANN_TOL))?;
            out.push(witness(format!("seed={seed},a=0,b={}", m - 1), r.lhs, r.rhs, r.holds));
        }
        GrassmannCheck::Loops => {
            let b = 1.min(m - 1);
            let x: Vec<usize> = (0..m).filter(|&v| v != 0 && v != b).collect();
            let r = loop_model_expansion(c, 0, b, &x, DEFAULT_CAP, tol(GRASSMANN_TOL))?;
            out.push(witness(format!("seed={seed},a=0,b={b}"), r.wick, r.combinatorial, r.holds));
        }
        GrassmannCheck::Tau => {
            let (f, f0) = random_tau_polynomial(m, 4, &mut rng);
            let lhs = g.superexpectation(&convert_form::<S>(&f));
            out.push(cmp(format!("seed={seed}"), &lhs, &S::from_cq(&f0), GRASSMANN_TOL));
        }
    }
    Ok(out)
}

fn check_name(c: GrassmannCheck) -> &'static str {
    match c {
        GrassmannCheck::Norm => "norm",
        GrassmannCheck::Wick => "wick",
        GrassmannCheck::Ibp => "ibp",
        GrassmannCheck::Repsaw => "repsaw",
        GrassmannCheck::Loops => "loops",
        GrassmannCheck::Tau => "tau",
    }
}

pub fn grassmann(a: &GrassmannArgs) -> Result<Computed, CliError> {
    let imported = a.matrix.map(read_matrix).transpose()?;
    let m = imported.as_ref().map_or(a.m, |c| c.n);
    if m > DEFAULT_CAP && matches!(a.check, GrassmannCheck::Repsaw | GrassmannCheck::Loops) {
        return Err(SuperError::CapExceeded { m, cap: DEFAULT_CAP }.into());
    }
    let mut inputs = vec![("M", m.to_string()), ("exact", a.exact.to_string())];
    let seeds: Vec<u64> = match &imported {
        Some(_) => vec![a.seed],
        None => (0..a.seeds as u64).map(|i| a.seed.wrapping_add(i)).collect(),
    };
    match a.matrix {
        Some(p) => inputs.push(("matrix", p.display().to_string())),
        None => inputs.push(("seeds", format!("{}..{}", seeds[0], seeds[0] + seeds.len() as u64))),
    }
    let mut w = Vec::new();
    for &seed in &seeds {
        let cf = match &imported {
            Some(c) => c.clone(),
            None => random_covariance(m, seed),
        };
        if a.exact {
            let cq: Matrix<Cq> = match &imported {
                Some(c) => to_exact(c),
                None => random_covariance_exact(m, seed, EXACT_DENOM),
            };
            w.extend(grassmann_witnesses(&cq, a.check, seed, true)?);
        } else {
            w.extend(grassmann_witnesses(&cf, a.check, seed, false)?);
        }
    }
    let id = format!("grassmann.{}", check_name(a.check));
    Ok(Computed {
        data: json!({"M": m, "check": check_name(a.check), "seeds": seeds}),
        reports: vec![CheckReport::new(&id, &inputs, w)],
        table: None,
    })
}

fn srw_value_strings(v: &SrwValue) -> (String, String) {
    match v {
        SrwValue::Value { value, error } => (format!("{value:.16e}"), format!("{error:e}")),
        SrwValue::Divergent => ("divergent".into(), "-".into()),
    }
}

pub fn srw(d: u32, task: SrwArg) -> Result<Computed, CliError> {
    let t = match task {
        SrwArg::Return => SrwTask::ReturnIntegral,
        SrwArg::Intersection => SrwTask::IntersectionIntegral,
        SrwArg::Green => SrwTask::GreenValue,
    };
    let v = srw_reference(d, t)?;
    let inputs = [("d", d.to_string()), ("task", format!("{t:?}"))];
    let (value, error) = srw_value_strings(&v);
    let power = if t == SrwTask::IntersectionIntegral { 2 } else { 1 };
    let divergent_expected = d <= 2 * power;
    let mut reports = vec![CheckReport::new(
        "srw.value",
        &inputs,
        vec![witness(
            "classification",
            if matches!(v, SrwValue::Divergent) { "divergent" } else { "finite" },
            if divergent_expected { "divergent" } else { "finite" },
            matches!(v, SrwValue::Divergent) == divergent_expected,
        )],
    )];
    if t == SrwTask::ReturnIntegral && (3..=4).contains(&d) {
        if let (SrwValue::Value { value: a, error: ea }, SrwValue::Value { value: b, error: eb }) =
            (v, srw_reference(d, SrwTask::GreenValue)?)
        {
            reports.push(CheckReport::new(
                "srw.cross_check",
                &inputs,
                vec![witness("|bessel - torus|", (a - b).abs(), ea + eb, (a - b).abs() <= ea + eb)],
            ));
        }
    }
    let mut table = Table::new(&["d", "task", "value", "error"]);
    table.push(vec![d.to_string(), format!("{t:?}"), value.clone(), error.clone()]);
    Ok(Computed {
        data: json!({"d": d, "task": format!("{t:?}"), "value": value, "error": error}),
        reports,
        table: Some(table),
    })
}
