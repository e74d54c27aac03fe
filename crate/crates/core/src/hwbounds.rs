//! Partitions into distinct parts, unfolding of half-space walks, and the
//! exact-integer inequality chain bounding walks by bridges.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::lattice::{LatticeSpec, Point};
use crate::walks::{
    count_half_space_and_bridges, count_saws, count_saws_to, EngineConfig, WalkError,
};

/// `values[A]` is the number of partitions of `A` into distinct parts, with
/// `values[0] = 1` for the empty partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinctPartitionTable {
    pub values: Vec<BigUint>,
}

impl DistinctPartitionTable {
    pub fn get(&self, a: usize) -> &BigUint {
        &self.values[a]
    }

    pub fn a_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `pi / sqrt(3) - log P_D(A) / sqrt(A)`.
    pub fn growth_gap(&self, a: usize) -> f64 {
        std::f64::consts::PI / 3f64.sqrt() - ln(&self.values[a]) / (a as f64).sqrt()
    }
}

pub fn distinct_partitions(a_max: usize) -> DistinctPartitionTable {
    let mut values = vec![BigUint::zero(); a_max + 1];
    values[0] = BigUint::one();
    for part in 1..=a_max {
        for a in (part..=a_max).rev() {
            let add = values[a - part].clone();
            values[a] += add;
        }
    }
    DistinctPartitionTable { values }
}

pub fn ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 60;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnfoldError {
    NotHalfSpace,
    NotSelfAvoiding,
}

/// Span decomposition `A_1 > A_2 > ... > A_k` of a half-space walk.
pub fn span_sequence(walk: &[Point]) -> Vec<u32> {
    let x: Vec<i32> = walk.iter().map(|p| p[0]).collect();
    let n = x.len() - 1;
    let mut spans = Vec::new();
    let mut at = 0usize;
    let mut sign = 1i32;
    loop {
        // Last index maximising sign * (x[j] - x[at]) over j >= at.
        let mut best = at;
        for j in at..=n {
            if sign * (x[j] - x[at]) >= sign * (x[best] - x[at]) {
                best = j;
            }
        }
        spans.push((x[best] - x[at]).unsigned_abs());
        if best == n {
            return spans;
        }
        at = best;
        sign = -sign;
    }
}

fn is_bridge(walk: &[Point]) -> bool {
    let x0 = walk[0][0];
    let xn = walk[walk.len() - 1][0];
    walk[1..].iter().all(|p| x0 < p[0] && p[0] <= xn)
}

/// Reflects the tail of a half-space walk repeatedly until it is a bridge.
pub fn unfold(walk: &[Point]) -> Result<(Vec<Point>, Vec<u32>), UnfoldError> {
    let x0 = walk[0][0];
    if walk[1..].iter().any(|p| p[0] <= x0) {
        return Err(UnfoldError::NotHalfSpace);
    }
    let mut seen = std::collections::HashSet::new();
    if !walk.iter().all(|p| seen.insert(p)) {
        return Err(UnfoldError::NotSelfAvoiding);
    }
    let spans = span_sequence(walk);
    let mut w = walk.to_vec();
    while !is_bridge(&w) {
        let top = w.iter().map(|p| p[0]).max().unwrap();
        let last = w.iter().rposition(|p| p[0] == top).unwrap();
        for p in &mut w[last + 1..] {
            p[0] = 2 * top - p[0];
        }
    }
    Ok((w, spans))
}

fn s(x: &BigUint) -> String {
    x.to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct HwRow {
    pub n: usize,
    pub c_n: String,
    pub half_space_sum: String,
    pub walk_bound: bool,
    pub h_n: String,
    pub span_weighted_bridges: String,
    pub span_bound: bool,
    pub pd_times_b_n: String,
    pub partition_bound: bool,
    pub assembled_rhs: String,
    pub assembled_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HwChainReport {
    pub spec: String,
    pub n_max: usize,
    pub rows: Vec<HwRow>,
    pub first_violation: Option<(usize, String)>,
    /// Smallest `n0` with `c_n <= b_{n+1} e^{B sqrt n}` for all `n0 <= n <= n_max`.
    pub empirical_n0: Option<usize>,
    pub threshold_b: f64,
    pub kesten_ratios: Vec<(usize, f64)>,
    pub kesten_bounded: bool,
}

impl HwChainReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none() && self.kesten_bounded
    }
}

pub const THRESHOLD_B: f64 = 2.61;

pub fn verify_hw_chain(
    spec: &LatticeSpec,
    n_max: usize,
    cfg: &EngineConfig,
) -> Result<HwChainReport, WalkError> {
    let c = count_saws(spec, n_max + 2, false, cfg)?.totals;
    let hb = count_half_space_and_bridges(spec, n_max + 1, false, cfg)?;
    let h = &hb.half_space.totals;
    let b = &hb.bridges.totals;
    let pd = distinct_partitions(n_max + 1);
    let mut rows = Vec::new();
    let mut first_violation = None;
    for n in 0..=n_max {
        let hh: BigUint = (0..=n).map(|m| &h[n - m] * &h[m + 1]).sum();
        let weighted: BigUint = hb.bridges.by_span[n]
            .iter()
            .map(|(&a, v)| pd.get(a as usize) * v)
            .sum();
        let pdb = pd.get(n) * &b[n];
        let pp: BigUint = (0..=n).map(|m| pd.get(n - m) * pd.get(m + 1)).sum();
        let assembled = &b[n + 1] * pp;
        let row = HwRow {
            n,
            c_n: s(&c[n]),
            half_space_sum: s(&hh),
            walk_bound: c[n] <= hh,
            h_n: s(&h[n]),
            span_weighted_bridges: s(&weighted),
            span_bound: h[n] <= weighted,
            pd_times_b_n: s(&pdb),
            partition_bound: h[n] <= pdb,
            assembled_rhs: s(&assembled),
            assembled_bound: c[n] <= assembled,
        };
        if first_violation.is_none() {
            let failed = [
                (row.walk_bound, "c_n <= sum_m h_{n-m} h_{m+1}"),
                (row.span_bound, "h_n <= sum_A P_D(A) b_{n,A}"),
                (row.partition_bound, "h_n <= P_D(n) b_n"),
                (row.assembled_bound, "c_n <= b_{n+1} sum_m P_D(n-m) P_D(m+1)"),
            ]
            .into_iter()
            .find(|(ok, _)| !ok);
            if let Some((_, what)) = failed {
                first_violation = Some((n, what.to_string()));
            }
        }
        rows.push(row);
    }
    let holds = |n: usize| ln(&c[n]) <= ln(&b[n + 1]) + THRESHOLD_B * (n as f64).sqrt();
    let empirical_n0 = (0..=n_max).find(|&n0| (n0..=n_max).all(holds));
    let d = spec.dim() as f64;
    let lo = d * d;
    let hi = (2.0 * d - 1.0).powi(2);
    let kesten_ratios: Vec<(usize, f64)> = (1..=n_max)
        .map(|n| (n, c[n + 2].to_f64().unwrap() / c[n].to_f64().unwrap()))
        .collect();
    let kesten_bounded =
        !spec.is_nearest() || kesten_ratios.iter().all(|&(_, r)| r >= lo && r <= hi);
    Ok(HwChainReport {
        spec: spec.to_string(),
        n_max,
        rows,
        first_violation,
        empirical_n0,
        threshold_b: THRESHOLD_B,
        kesten_ratios,
        kesten_bounded,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PolygonRow {
    pub n: usize,
    pub sum_b_squared: String,
    pub rhs: String,
    pub holds: bool,
    pub b_n_squared: String,
    pub corollary_rhs: String,
    pub corollary_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolygonReport {
    pub spec: String,
    pub rows: Vec<PolygonRow>,
}

impl PolygonReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.holds && r.corollary_holds)
    }
}

/// Checks `sum_x b_n(x)^2 <= 2d (n+1)^2 c_{2n+1}(e1)` and its Cauchy–Schwarz
/// consequence for `1 <= n <= n_max`.
pub fn verify_polygon_inequality(
    spec: &LatticeSpec,
    n_max: usize,
    cfg: &EngineConfig,
) -> Result<PolygonReport, WalkError> {
    if !spec.is_nearest() {
        return Err(WalkError::Precondition(
            "polygon inequality needs a nearest-neighbour lattice".into(),
        ));
    }
    let bridges = count_half_space_and_bridges(spec, n_max, true, cfg)?.bridges;
    let d = spec.dim();
    let two_d = BigUint::from(2 * d);
    let e1 = spec.unit(0);
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let sum_sq: BigUint = bridges.by_endpoint[n].values().map(|v| v * v).sum();
        let c = count_saws_to(spec, 2 * n + 1, &e1, cfg)?;
        let n1 = BigUint::from(n + 1);
        let rhs = &two_d * &n1 * &n1 * &c;
        let bn2 = &bridges.totals[n] * &bridges.totals[n];
        let support = BigUint::from(n) * BigUint::from(2 * n + 1).pow(d - 1);
        let corollary = &rhs * support;
        rows.push(PolygonRow {
            n,
            sum_b_squared: s(&sum_sq),
            rhs: s(&rhs),
            holds: sum_sq <= rhs,
            b_n_squared: s(&bn2),
            corollary_rhs: s(&corollary),
            corollary_holds: bn2 <= corollary,
        });
    }
    Ok(PolygonReport {
        spec: spec.to_string(),
        rows,
    })
}

pub const BRACKET_DIGITS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MuBracket {
    pub n: usize,
    /// `b_n^{1/n}` truncated to 50 significant digits.
    pub lower: String,
    /// `c_n^{1/n}` truncated to 50 significant digits.
    pub upper: String,
    #[serde(skip)]
    pub b_n: BigUint,
    #[serde(skip)]
    pub c_n: BigUint,
}

impl MuBracket {
    /// Exact test of `b_n <= mu^n <= c_n`.
    pub fn contains(&self, mu: &BigRational) -> bool {
        let p = mu.pow(self.n as i32);
        let lo = BigRational::from_integer(self.b_n.clone().into());
        let hi = BigRational::from_integer(self.c_n.clone().into());
        lo <= p && p <= hi
    }

    /// Exact test of `lower < mu`.
    pub fn lower_below(&self, mu: &BigRational) -> bool {
        BigRational::from_integer(self.b_n.clone().into()) < mu.pow(self.n as i32)
    }
}

/// Decimal expansion of `x^{1/n}` truncated to `digits` significant digits.
pub fn nth_root_decimal(x: &BigUint, n: usize, digits: usize) -> String {
    let int = x.nth_root(n as u32);
    let int_digits = int.to_string().len();
    let frac = digits.saturating_sub(int_digits);
    let scaled = x * BigUint::from(10u32).pow((frac * n) as u32);
    let root = scaled.nth_root(n as u32).to_string();
    let (a, b) = root.split_at(root.len() - frac);
    if frac == 0 {
        a.to_string()
    } else {
        format!("{a}.{b}")
    }
}

pub fn mu_bracket(
    spec: &LatticeSpec,
    n: usize,
    cfg: &EngineConfig,
) -> Result<MuBracket, WalkError> {
    if n == 0 {
        return Err(WalkError::Precondition("bracket needs n >= 1".into()));
    }
    let c_n = count_saws(spec, n, false, cfg)?.totals[n].clone();
    let b_n = count_half_space_and_bridges(spec, n, false, cfg)?.bridges.totals[n].clone();
    Ok(MuBracket {
        n,
        lower: nth_root_decimal(&b_n, n, BRACKET_DIGITS),
        upper: nth_root_decimal(&c_n, n, BRACKET_DIGITS),
        b_n,
        c_n,
    })
}
