//! Lace expansion combinatorics on integer intervals and the coefficients
//! `pi_m^(N)(x)`, computed both from laces and from the convolution recursion.
//!
//! Graph edges on `[0, m]` are packed into a `u128` with bit `t(t-1)/2 + s`
//! for the pair `s < t`, which limits mask-based routines to `m <= 15`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{LatticeSpec, Point};
use crate::precise::{Precise, Real};
use crate::walks::{count_saws, EngineConfig, Geometry, WalkError};

pub type Edge = (u32, u32);

pub const MASK_MAX_LEN: u32 = 15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LaceError {
    #[error("graph is not connected")]
    NotConnected,
    #[error("edge {0:?} is not inside the interval")]
    BadEdge(Edge),
    #[error("not a lace")]
    NotLace,
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphOnInterval {
    pub a: u32,
    pub b: u32,
    pub edges: BTreeSet<Edge>,
}

impl GraphOnInterval {
    pub fn new(a: u32, b: u32, edges: impl IntoIterator<Item = Edge>) -> Result<Self, LaceError> {
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        for &(s, t) in &edges {
            if !(a <= s && s < t && t <= b) {
                return Err(LaceError::BadEdge((s, t)));
            }
        }
        Ok(GraphOnInterval { a, b, edges })
    }

    /// Open intervals of the edges cover `(a, b)`. Graphs with `a == b` are not connected.
    pub fn is_connected(&self) -> bool {
        // Doubled coordinates: every integer and half-integer point of (a, b).
        self.a < self.b
            && (2 * self.a + 1..2 * self.b)
                .all(|q| self.edges.iter().any(|&(s, t)| 2 * s < q && q < 2 * t))
    }
}

pub fn is_connected(g: &GraphOnInterval) -> bool {
    g.is_connected()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lace {
    pub a: u32,
    pub b: u32,
    pub edges: Vec<Edge>,
}

impl Lace {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn graph(&self) -> GraphOnInterval {
        GraphOnInterval {
            a: self.a,
            b: self.b,
            edges: self.edges.iter().copied().collect(),
        }
    }

    /// The interval characterisation: `s_1 = a < s_2`, `s_N < t_{N-1} < t_N = b`,
    /// and `s_{l+1} < t_l <= s_{l+2}`.
    pub fn satisfies_characterisation(&self) -> bool {
        let e = &self.edges;
        let n = e.len();
        if n == 0 || e[0].0 != self.a || e[n - 1].1 != self.b {
            return false;
        }
        if e.iter().any(|&(s, t)| s >= t) {
            return false;
        }
        if n >= 2 && !(e[0].0 < e[1].0 && e[n - 1].0 < e[n - 2].1 && e[n - 2].1 < e[n - 1].1) {
            return false;
        }
        (0..n.saturating_sub(1)).all(|l| {
            e[l + 1].0 < e[l].1 && (l + 2 >= n || e[l].1 <= e[l + 2].0)
        }) && e.windows(2).all(|w| w[0].1 < w[1].1)
    }
}

/// The lace of a connected graph, by the greedy max/min recursion.
pub fn lace_of(g: &GraphOnInterval) -> Result<Lace, LaceError> {
    if !g.is_connected() {
        return Err(LaceError::NotConnected);
    }
    let mut edges = Vec::new();
    let mut t = g
        .edges
        .iter()
        .filter(|e| e.0 == g.a)
        .map(|e| e.1)
        .max()
        .unwrap();
    edges.push((g.a, t));
    while t < g.b {
        let next_t = g
            .edges
            .iter()
            .filter(|e| e.0 < t)
            .map(|e| e.1)
            .max()
            .unwrap();
        let next_s = g
            .edges
            .iter()
            .filter(|e| e.1 == next_t)
            .map(|e| e.0)
            .min()
            .unwrap();
        edges.push((next_s, next_t));
        t = next_t;
    }
    Ok(Lace {
        a: g.a,
        b: g.b,
        edges,
    })
}

/// Edges `st` outside the lace whose addition leaves the lace unchanged.
pub fn compatible_edges(l: &Lace) -> BTreeSet<Edge> {
    let base = l.graph();
    let mut out = BTreeSet::new();
    for t in l.a + 1..=l.b {
        for s in l.a..t {
            if base.edges.contains(&(s, t)) {
                continue;
            }
            let mut g = base.clone();
            g.edges.insert((s, t));
            if lace_of(&g).map(|m| m == *l).unwrap_or(false) {
                out.insert((s, t));
            }
        }
    }
    out
}

pub fn pair_bit(s: u32, t: u32) -> u128 {
    1u128 << (t * (t - 1) / 2 + s)
}

pub fn edges_mask(edges: impl IntoIterator<Item = Edge>, shift: u32) -> u128 {
    edges
        .into_iter()
        .fold(0, |m, (s, t)| m | pair_bit(s - shift, t - shift))
}

/// All laces on `[a, b]` whose edges satisfy `allowed`, generated from the
/// interval characterisation.
pub fn laces_within(a: u32, b: u32, allowed: &dyn Fn(u32, u32) -> bool) -> Vec<Lace> {
    fn extend(
        b: u32,
        s_l: u32,
        t_l: u32,
        t_prev: u32,
        allowed: &dyn Fn(u32, u32) -> bool,
        cur: &mut Vec<Edge>,
        out: &mut Vec<Vec<Edge>>,
    ) {
        if t_l == b {
            out.push(cur.clone());
            return;
        }
        for s in (s_l + 1).max(t_prev)..t_l {
            for t in t_l + 1..=b {
                if allowed(s, t) {
                    cur.push((s, t));
                    extend(b, s, t, t_l, allowed, cur, out);
                    cur.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    for t1 in a + 1..=b {
        if allowed(a, t1) {
            let mut cur = vec![(a, t1)];
            extend(b, a, t1, a, allowed, &mut cur, &mut out);
        }
    }
    out.into_iter().map(|edges| Lace { a, b, edges }).collect()
}

pub fn laces_on(a: u32, b: u32) -> Vec<Lace> {
    laces_within(a, b, &|_, _| true)
}

/// Laces on `[0, m]` keyed by edge mask, with size and compatible-edge mask.
pub struct LaceSet {
    pub m: u32,
    pub laces: HashMap<u128, (usize, u128)>,
}

impl LaceSet {
    pub fn new(m: u32) -> Self {
        assert!(m <= MASK_MAX_LEN, "lace masks support m <= {MASK_MAX_LEN}");
        let laces = laces_on(0, m)
            .into_iter()
            .map(|l| {
                let mask = edges_mask(l.edges.iter().copied(), 0);
                let compat = edges_mask(compatible_edges(&l), 0);
                (mask, (l.len(), compat))
            })
            .collect();
        LaceSet { m, laces }
    }

    /// Sizes `N` of the laces contributing to `J[0,m]` for a walk with
    /// coincidence mask `e`: `L` inside `e` and no compatible edge in `e`.
    pub fn contributions(&self, e: u128) -> Vec<usize> {
        let allowed = |s: u32, t: u32| e & pair_bit(s, t) != 0;
        laces_within(0, self.m, &allowed)
            .into_iter()
            .filter_map(|l| {
                let (n, compat) = self.laces[&edges_mask(l.edges.iter().copied(), 0)];
                (compat & e == 0).then_some(n)
            })
            .collect()
    }
}

/// Coincidence mask of a walk: pair bit set iff `w[s] == w[t]`.
pub fn coincidences<T: PartialEq>(w: &[T]) -> u128 {
    let mut mask = 0;
    for t in 1..w.len() {
        for s in 0..t {
            if w[s] == w[t] {
                mask |= pair_bit(s as u32, t as u32);
            }
        }
    }
    mask
}

fn sub_mask(e: u128, a: u32, b: u32) -> u128 {
    let mut m = 0;
    for t in a + 1..=b {
        for s in a..t {
            if e & pair_bit(s, t) != 0 {
                m |= pair_bit(s - a, t - a);
            }
        }
    }
    m
}

/// `K[a,b] = prod (1 + U_st)` over `a <= s < t <= b`.
pub fn k_product(e: u128, a: u32, b: u32) -> i64 {
    (sub_mask(e, a, b) == 0) as i64
}

/// `sum over all graphs on [a,b] of prod U_st`.
pub fn k_graph_sum(e: u128, a: u32, b: u32) -> i64 {
    let pairs = (b - a) * (b - a + 1) / 2;
    let sub = sub_mask(e, a, b);
    (0u128..1 << pairs)
        .filter(|g| g & !sub == 0)
        .map(|g| if g.count_ones() % 2 == 0 { 1 } else { -1 })
        .sum()
}

/// Connected graphs on `[0, m]` as masks.
pub fn connected_masks(m: u32) -> Vec<u128> {
    let pairs = m * (m + 1) / 2;
    let covers: Vec<u128> = (1..2 * m)
        .map(|q| {
            let mut c = 0;
            for t in 1..=m {
                for s in 0..t {
                    if 2 * s < q && q < 2 * t {
                        c |= pair_bit(s, t);
                    }
                }
            }
            c
        })
        .collect();
    (0u128..1 << pairs)
        .filter(|g| m > 0 && covers.iter().all(|c| g & c != 0))
        .collect()
}

/// `J[a,b]` as the sum over connected graphs of `prod U_st`.
pub fn j_graph_sum(e: u128, a: u32, b: u32, connected: &[u128]) -> i64 {
    let sub = sub_mask(e, a, b);
    connected
        .iter()
        .filter(|&&g| g & !sub == 0)
        .map(|g| if g.count_ones() % 2 == 0 { 1 } else { -1 })
        .sum()
}

/// `J[a,b]` as the sum over laces of `prod_L U prod_{C(L)} (1 + U)`.
pub fn j_lace_sum(e: u128, a: u32, b: u32, set: &LaceSet) -> i64 {
    debug_assert_eq!(set.m, b - a);
    set.contributions(sub_mask(e, a, b))
        .into_iter()
        .map(|n| if n % 2 == 0 { 1 } else { -1 })
        .sum()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct KjReport {
    pub walks_checked: u64,
    pub graph_expansion_failures: u64,
    pub lace_vs_graph_failures: u64,
    pub recursion_failures: u64,
}

impl KjReport {
    pub fn passed(&self) -> bool {
        self.walks_checked > 0
            && self.graph_expansion_failures == 0
            && self.lace_vs_graph_failures == 0
            && self.recursion_failures == 0
    }
}

/// Exhaustive check over all walks of length `b <= b_max` of
/// `K = sum_Gamma prod U`, `J` (graphs) = `J` (laces) and
/// `K[0,b] = K[1,b] + sum_j J[0,j] K[j,b]`.
pub fn verify_kj_identities(spec: &LatticeSpec, b_max: u32) -> Result<KjReport, LaceError> {
    let geo = Geometry::new(spec, b_max as usize)?;
    let sets: Vec<LaceSet> = (0..=b_max).map(LaceSet::new).collect();
    let conn: Vec<Vec<u128>> = (0..=b_max).map(connected_masks).collect();
    let mut rep = KjReport::default();
    for b in 1..=b_max {
        let mut walk = vec![spec.origin()];
        // Iterative odometer over all |Ω|^b step sequences.
        let mut idx = vec![0usize; b as usize];
        loop {
            walk.truncate(1);
            for &s in &idx {
                let last = walk.last().unwrap().clone();
                walk.push(last.iter().zip(&geo.steps[s]).map(|(x, y)| x + y).collect());
            }
            let e = coincidences(&walk);
            rep.walks_checked += 1;
            if k_product(e, 0, b) != k_graph_sum(e, 0, b) {
                rep.graph_expansion_failures += 1;
            }
            for j in 1..=b {
                if j_graph_sum(e, 0, j, &conn[j as usize]) != j_lace_sum(e, 0, j, &sets[j as usize])
                {
                    rep.lace_vs_graph_failures += 1;
                }
            }
            let rhs = k_product(e, 1, b)
                + (1..=b)
                    .map(|j| j_lace_sum(e, 0, j, &sets[j as usize]) * k_product(e, j, b))
                    .sum::<i64>();
            if k_product(e, 0, b) != rhs {
                rep.recursion_failures += 1;
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < geo.steps.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    Ok(rep)
}

pub type PointMap = BTreeMap<Point, BigInt>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiTable {
    pub spec: LatticeSpec,
    pub m_max: usize,
    /// Largest lace size included; `None` for the recursion path.
    pub n_max: Option<usize>,
    /// `pi_m^(N)(x) >= 0`, keyed by `(m, N)`; empty for the recursion path.
    pub by_n: BTreeMap<(usize, usize), PointMap>,
    /// Signed `pi_m(x)`, index `m` (entry 0 is empty).
    pub pi: Vec<PointMap>,
}

fn strip_zeros(m: &mut PointMap) {
    m.retain(|_, v| !v.is_zero());
}

impl PiTable {
    pub fn pi_hat(&self) -> Vec<BigInt> {
        self.pi.iter().map(|m| m.values().sum()).collect()
    }

    pub fn pi_hat_n(&self, n: usize) -> Vec<BigInt> {
        (0..=self.m_max)
            .map(|m| {
                self.by_n
                    .get(&(m, n))
                    .map(|t| t.values().sum())
                    .unwrap_or_else(BigInt::zero)
            })
            .collect()
    }

    pub fn all_nonnegative(&self) -> bool {
        self.by_n.values().all(|t| t.values().all(|v| !v.is_negative()))
    }
}

type Cells = HashMap<(usize, usize, usize), u64>;

/// `pi_m^(N)(x)` by summing lace weights over all walks `W_m(0, x)`.
pub fn pi_via_laces(
    spec: &LatticeSpec,
    m_max: usize,
    n_max: usize,
    cfg: &EngineConfig,
) -> Result<PiTable, LaceError> {
    if m_max as u32 > MASK_MAX_LEN {
        return Err(WalkError::Precondition(format!("m_max must be <= {MASK_MAX_LEN}")).into());
    }
    let geo = Geometry::new(spec, m_max)?;
    let sets: Vec<LaceSet> = (0..=m_max as u32).map(LaceSet::new).collect();
    let origin = geo.index(&spec.origin());
    let budget = cfg.node_budget.unwrap_or(u64::MAX);
    let nodes = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    struct Dfs<'a> {
        geo: &'a Geometry,
        sets: &'a [LaceSet],
        m_max: usize,
        n_max: usize,
        budget: u64,
        nodes: &'a AtomicU64,
        abort: &'a AtomicBool,
    }
    impl Dfs<'_> {
        fn go(&self, path: &mut Vec<usize>, e: u128, cells: &mut Cells, local: &mut u64) {
            *local += 1;
            if *local % 4096 == 0
                && self.nodes.fetch_add(4096, Ordering::Relaxed) + 4096 > self.budget
            {
                self.abort.store(true, Ordering::Relaxed);
            }
            if self.abort.load(Ordering::Relaxed) {
                return;
            }
            let m = path.len() - 1;
            if m >= 1 && e != 0 {
                for n in self.sets[m].contributions(e) {
                    if n <= self.n_max {
                        *cells.entry((m, n, *path.last().unwrap())).or_insert(0) += 1;
                    }
                }
            }
            if m == self.m_max {
                return;
            }
            let t = (m + 1) as u32;
            for &off in &self.geo.offsets {
                let next = (*path.last().unwrap() as isize + off) as usize;
                let mut e2 = e;
                for (s, &p) in path.iter().enumerate() {
                    if p == next {
                        e2 |= pair_bit(s as u32, t);
                    }
                }
                path.push(next);
                self.go(path, e2, cells, local);
                path.pop();
            }
        }
    }
    let dfs = Dfs {
        geo: &geo,
        sets: &sets,
        m_max,
        n_max,
        budget,
        nodes: &nodes,
        abort: &abort,
    };
    let merge = |mut a: Cells, b: Cells| {
        for (k, v) in b {
            *a.entry(k).or_insert(0) += v;
        }
        a
    };
    let firsts: Vec<usize> = if m_max == 0 {
        Vec::new()
    } else {
        (0..geo.offsets.len()).collect()
    };
    let cells = cfg.run(|| {
        firsts
            .par_iter()
            .map(|&s| {
                let mut cells = Cells::new();
                let mut local = 0;
                let first = (origin as isize + geo.offsets[s]) as usize;
                dfs.go(&mut vec![origin, first], 0, &mut cells, &mut local);
                cells
            })
            .reduce(Cells::new, merge)
    });
    if abort.load(Ordering::Relaxed) {
        return Err(WalkError::Budget(budget).into());
    }
    let mut by_n: BTreeMap<(usize, usize), PointMap> = BTreeMap::new();
    let mut pi = vec![PointMap::new(); m_max + 1];
    for ((m, n, pos), c) in cells {
        let x = geo.point(pos);
        *by_n.entry((m, n)).or_default().entry(x.clone()).or_default() += c;
        let signed = if n % 2 == 0 {
            BigInt::from(c)
        } else {
            -BigInt::from(c)
        };
        *pi[m].entry(x).or_default() += signed;
    }
    pi.iter_mut().for_each(strip_zeros);
    Ok(PiTable {
        spec: *spec,
        m_max,
        n_max: Some(n_max),
        by_n,
        pi,
    })
}

fn convolve(f: &PointMap, g: &PointMap) -> PointMap {
    let mut out: HashMap<Point, BigInt> = HashMap::new();
    for (x, a) in f {
        for (y, b) in g {
            let z: Point = x.iter().zip(y).map(|(p, q)| p + q).collect();
            *out.entry(z).or_default() += a * b;
        }
    }
    let mut m: PointMap = out.into_iter().collect();
    strip_zeros(&mut m);
    m
}

fn sub_assign(acc: &mut PointMap, f: &PointMap) {
    for (x, v) in f {
        *acc.entry(x.clone()).or_default() -= v;
    }
}

/// `pi_m(x)` by forward substitution in
/// `c_n = c_1 * c_{n-1} + sum_{m=1}^n pi_m * c_{n-m}`.
pub fn pi_via_recursion(
    spec: &LatticeSpec,
    m_max: usize,
    cfg: &EngineConfig,
) -> Result<PiTable, LaceError> {
    let table = count_saws(spec, m_max, true, cfg)?;
    let c: Vec<PointMap> = table
        .by_endpoint
        .iter()
        .map(|m| m.iter().map(|(k, v)| (k.clone(), BigInt::from(v.clone()))).collect())
        .collect();
    let mut pi = vec![PointMap::new(); m_max + 1];
    for n in 1..=m_max {
        let mut p = c[n].clone();
        sub_assign(&mut p, &convolve(&c[1], &c[n - 1]));
        for m in 1..n {
            sub_assign(&mut p, &convolve(&pi[m], &c[n - m]));
        }
        strip_zeros(&mut p);
        pi[n] = p;
    }
    Ok(PiTable {
        spec: *spec,
        m_max,
        n_max: None,
        by_n: BTreeMap::new(),
        pi,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PiHatSeries {
    pub total: Vec<String>,
    pub one_loop: Vec<String>,
    pub two_loop: Vec<String>,
}

pub fn pi_hat_series(table: &PiTable) -> PiHatSeries {
    let f = |v: Vec<BigInt>| v.iter().map(|c| c.to_string()).collect();
    PiHatSeries {
        total: f(table.pi_hat()),
        one_loop: f(table.pi_hat_n(1)),
        two_loop: f(table.pi_hat_n(2)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientCheck {
    pub name: String,
    pub expected: String,
    pub computed: String,
    pub holds: bool,
}

/// Low-order one- and two-loop coefficients against their closed forms.
pub fn low_order_checks(table: &PiTable) -> Vec<CoefficientCheck> {
    let two_d = BigInt::from(table.spec.degree());
    let p1 = table.pi_hat_n(1);
    let p2 = table.pi_hat_n(2);
    let total = table.pi_hat();
    let mut out = Vec::new();
    let mut push = |name: &str, expected: BigInt, computed: Option<&BigInt>| {
        if let Some(c) = computed {
            out.push(CoefficientCheck {
                name: name.to_string(),
                expected: expected.to_string(),
                computed: c.to_string(),
                holds: &expected == c,
            });
        }
    };
    push("[z^1] Pi", BigInt::zero(), total.get(1));
    push("[z^2] Pi^(1)", two_d.clone(), p1.get(2));
    push("[z^4] Pi^(1)", &two_d * (&two_d - 2), p1.get(4));
    push("[z^3] Pi^(2)", two_d.clone(), p2.get(3));
    push("[z^5] Pi^(2)", &two_d * (&two_d - 2) * 3, p2.get(5));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FixedPointStatus {
    Converged,
    NotConverged,
    Divergent,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZcEstimate {
    pub z: String,
    pub mu: String,
    pub z_f64: f64,
    pub mu_f64: f64,
    pub differences: Vec<f64>,
    pub status: FixedPointStatus,
    pub coefficients: Vec<String>,
}

/// Iterates `z <- (1 - Pi_hat_z(0)) / |Omega|` from `z = 1/|Omega|` on the
/// truncated series. Heuristic: truncation error is not bounded.
pub fn zc_fixed_point_from(
    spec: &LatticeSpec,
    pi_hat: &[BigInt],
    iterations: usize,
    bits: usize,
) -> ZcEstimate {
    let deg = Precise::from_i64(spec.degree() as i64, bits);
    let coeffs: Vec<Precise> = pi_hat.iter().map(|c| Precise::from_bigint(c, bits)).collect();
    let eval = |z: &Precise| {
        let mut acc = Precise::zero(bits);
        for c in coeffs.iter().rev() {
            acc = acc * z.clone() + c.clone();
        }
        acc
    };
    let one = Precise::one(bits);
    let mut z = one.clone() / deg.clone();
    let mut differences = Vec::new();
    let mut status = FixedPointStatus::NotConverged;
    let tol = 2f64.powi(-(bits as i32) + 8);
    for _ in 0..iterations {
        let next = (one.clone() - eval(&z)) / deg.clone();
        let diff = (next.clone() - z.clone()).abs().to_f64();
        differences.push(diff);
        z = next;
        let zf = z.to_f64();
        if !zf.is_finite() || zf <= 0.0 || zf >= 1.0 {
            status = FixedPointStatus::Divergent;
            break;
        }
        if diff <= tol {
            status = FixedPointStatus::Converged;
            break;
        }
    }
    if status != FixedPointStatus::Divergent && differences.len() >= 8 {
        let n = differences.len();
        if differences[n - 1] > differences[n - 5] && differences[n - 1] > 1e-3 {
            status = FixedPointStatus::Divergent;
        }
    }
    let mu = one / z.clone();
    ZcEstimate {
        z: z.to_decimal(30),
        mu: mu.to_decimal(30),
        z_f64: z.to_f64(),
        mu_f64: mu.to_f64(),
        differences,
        status,
        coefficients: pi_hat.iter().map(|c| c.to_string()).collect(),
    }
}

pub fn zc_fixed_point(
    spec: &LatticeSpec,
    m_max: usize,
    iterations: usize,
    cfg: &EngineConfig,
) -> Result<ZcEstimate, LaceError> {
    let table = pi_via_recursion(spec, m_max, cfg)?;
    Ok(zc_fixed_point_from(spec, &table.pi_hat(), iterations, 128))
}

/// Chebyshev `T_n(t)`.
pub fn chebyshev(n: u32, t: &BigRational) -> BigRational {
    let (mut a, mut b) = (BigRational::one(), t.clone());
    if n == 0 {
        return a;
    }
    let two_t = t * BigRational::from_integer(2.into());
    for _ in 1..n {
        let c = &two_t * &b - &a;
        a = b;
        b = c;
    }
    b
}

/// Fourier transform of a function symmetric under coordinate reflections, at
/// the wave vector with `cos k_j = cosines[j]`.
pub fn cosine_transform(f: &PointMap, cosines: &[BigRational]) -> BigRational {
    f.iter()
        .map(|(x, v)| {
            x.iter()
                .zip(cosines)
                .fold(BigRational::from_integer(v.clone()), |acc, (&xj, t)| {
                    acc * chebyshev(xj.unsigned_abs(), t)
                })
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct GhatReport {
    pub cosines: Vec<String>,
    /// `[z^n]` of `(1 - z c1(k) - Pi(k)) G(k) - 1` for `n <= m_max`.
    pub residuals: Vec<String>,
    pub holds: bool,
}

/// Coefficientwise check of `(1 - z c1_hat(k) - Pi_hat_z(k)) G_hat_z(k) = 1 + O(z^{m_max+1})`.
pub fn ghat_identity_check(
    spec: &LatticeSpec,
    pi: &PiTable,
    cosines: &[BigRational],
    cfg: &EngineConfig,
) -> Result<GhatReport, LaceError> {
    let m_max = pi.m_max;
    let table = count_saws(spec, m_max, true, cfg)?;
    let g: Vec<BigRational> = table
        .by_endpoint
        .iter()
        .map(|m| {
            let pm: PointMap = m.iter().map(|(k, v)| (k.clone(), BigInt::from(v.clone()))).collect();
            cosine_transform(&pm, cosines)
        })
        .collect();
    let c1 = cosine_transform(
        &table.by_endpoint[1]
            .iter()
            .map(|(k, v)| (k.clone(), BigInt::from(v.clone())))
            .collect(),
        cosines,
    );
    let p: Vec<BigRational> = pi.pi.iter().map(|m| cosine_transform(m, cosines)).collect();
    let mut residuals = Vec::new();
    for n in 0..=m_max {
        let mut r = g[n].clone();
        if n == 0 {
            r -= BigRational::one();
        } else {
            r -= &c1 * &g[n - 1];
            for m in 1..=n {
                r -= &p[m] * &g[n - m];
            }
        }
        residuals.push(r);
    }
    Ok(GhatReport {
        cosines: cosines.iter().map(|c| c.to_string()).collect(),
        holds: residuals.iter().all(|r| r.is_zero()),
        residuals: residuals.iter().map(|r| r.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn g(a: u32, b: u32, e: &[Edge]) -> GraphOnInterval {
        GraphOnInterval::new(a, b, e.iter().copied()).unwrap()
    }

    #[test]
    fn connectivity_examples() {
        assert!(g(0, 4, &[(0, 4)]).is_connected());
        assert!(!g(0, 4, &[(0, 1), (1, 2), (2, 3), (3, 4)]).is_connected());
        assert!(!g(0, 1, &[]).is_connected());
        assert!(GraphOnInterval::new(0, 2, [(1, 3)]).is_err());
    }

    #[test]
    fn lace_of_by_hand() {
        // t1 = 4 from 04, so the lace is {04}.
        let l = lace_of(&g(0, 4, &[(0, 4), (0, 1), (1, 3), (3, 4)])).unwrap();
        assert_eq!(l.edges, vec![(0, 4)]);
        // t1 = 2, then max t with s < 2 is 3 (edge 13), min s for t = 3 is 1;
        // then max t with s < 3 is 5 (edge 25), min s is 2.
        let l = lace_of(&g(0, 5, &[(0, 2), (1, 3), (0, 1), (2, 5), (2, 4)])).unwrap();
        assert_eq!(l.edges, vec![(0, 2), (1, 3), (2, 5)]);
        assert!(l.satisfies_characterisation());
        assert_eq!(lace_of(&l.graph()).unwrap(), l);
        assert!(lace_of(&g(0, 3, &[(0, 1)])).is_err());
    }

    #[test]
    fn compatible_edges_by_definition() {
        let l = lace_of(&g(0, 3, &[(0, 3)])).unwrap();
        let c = compatible_edges(&l);
        assert_eq!(c.len(), 5);
        assert!(!c.contains(&(0, 3)));
        // A long edge crossing several lace intervals breaks the lace.
        let l = Lace {
            a: 0,
            b: 6,
            edges: vec![(0, 2), (1, 4), (3, 6)],
        };
        assert!(l.satisfies_characterisation());
        let c = compatible_edges(&l);
        assert!(!c.contains(&(1, 6)));
        assert!(c.contains(&(0, 1)));
        for e in &l.edges {
            assert!(!c.contains(e));
        }
        let two = Lace {
            a: 0,
            b: 3,
            edges: vec![(0, 2), (1, 3)],
        };
        let c = compatible_edges(&two);
        assert_eq!(c, [(0, 1), (1, 2), (2, 3)].into());
    }

    #[test]
    fn generator_matches_exhaustive_search() {
        for b in 1..=5u32 {
            let pairs: Vec<Edge> = (1..=b).flat_map(|t| (0..t).map(move |s| (s, t))).collect();
            let mut from_graphs = BTreeSet::new();
            for mask in 0u32..1 << pairs.len() {
                let edges = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, e)| *e);
                let gr = GraphOnInterval::new(0, b, edges).unwrap();
                if let Ok(l) = lace_of(&gr) {
                    assert!(l.edges.iter().all(|e| gr.edges.contains(e)));
                    let c = compatible_edges(&l);
                    assert!(gr.edges.iter().all(|e| l.edges.contains(e) || c.contains(e)));
                    if gr.edges.len() == l.edges.len() {
                        from_graphs.insert(l);
                    }
                }
            }
            let generated: BTreeSet<Lace> = laces_on(0, b).into_iter().collect();
            assert_eq!(generated, from_graphs, "b = {b}");
            for l in &generated {
                assert!(l.satisfies_characterisation());
                for i in 0..l.edges.len() {
                    let mut gr = l.graph();
                    gr.edges.remove(&l.edges[i]);
                    assert!(!gr.is_connected());
                }
            }
        }
    }

    #[test]
    fn kj_identities_small() {
        let rep = verify_kj_identities(&LatticeSpec::nearest(2), 3).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn theta_walk_by_hand() {
        // 0 -> e1 -> 0 -> e1: lace {02, 13} with C = {01, 12, 23}.
        let w = [[0, 0], [1, 0], [0, 0], [1, 0]];
        let e = coincidences(&w);
        let set = LaceSet::new(3);
        assert_eq!(set.contributions(e), vec![2]);
    }

    #[test]
    fn two_paths_agree_small() {
        let spec = LatticeSpec::nearest(2);
        let cfg = EngineConfig::default();
        let a = pi_via_laces(&spec, 5, 5, &cfg).unwrap();
        let b = pi_via_recursion(&spec, 5, &cfg).unwrap();
        assert_eq!(a.pi, b.pi);
        assert!(a.pi[1].is_empty());
        assert_eq!(b.pi[2].get(&vec![0, 0]), Some(&BigInt::from(-4)));
        assert_eq!(a.by_n[&(2, 1)][&vec![0, 0]], BigInt::from(4));
        assert_eq!(a.by_n[&(3, 2)][&vec![1, 0]], BigInt::from(1));
        assert!(low_order_checks(&a).iter().all(|c| c.holds));
    }

    #[test]
    fn srw_limit_fixed_point() {
        let spec = LatticeSpec::nearest(3);
        let est = zc_fixed_point_from(&spec, &[BigInt::zero()], 10, 128);
        assert_eq!(est.status, FixedPointStatus::Converged);
        assert!((est.z_f64 - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_values() {
        let t: BigRational = "1/2".parse().unwrap();
        assert_eq!(chebyshev(3, &t), "-1".parse().unwrap());
        assert_eq!(chebyshev(2, &t).to_f64().unwrap(), -0.5);
    }

    #[test]
    fn ghat_identity_holds() {
        let spec = LatticeSpec::nearest(2);
        let cfg = EngineConfig::default();
        let pi = pi_via_laces(&spec, 6, 6, &cfg).unwrap();
        let ks: Vec<BigRational> = vec!["1/3".parse().unwrap(), "-2/5".parse().unwrap()];
        let r = ghat_identity_check(&spec, &pi, &ks, &cfg).unwrap();
        assert!(r.holds, "{:?}", r.residuals);
    }
}
