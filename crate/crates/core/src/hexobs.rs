//! The parafermionic observable on hexagonal domains and its discrete
//! contour identities at `z_c = 1/√(2+√2)`, `σ = 5/8`.
//!
//! Walks run between mid-edges. A walk from `a` to `x` visits `ℓ` distinct
//! vertices; its winding is the sum of its turns, `+1` for a left turn and
//! `-1` for a right turn, in units of π/3.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Sub};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{strip_domain, BoundaryPart, HexDomain, HexVertex, MidEdge, StripDomain};
use crate::precise::{Precise, Real};
use crate::walks::EngineConfig;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HexError {
    #[error("node budget of {0} exceeded")]
    Budget(u64),
    #[error("start mid-edge is not on the domain boundary")]
    NotBoundary,
    #[error("unrecognised value `{0}`; expected p/q, `zc` or p/q*zc")]
    Parse(String),
}

pub const DEFAULT_BITS: usize = 106;

/// A real weight `z`, either rational or a rational multiple of `z_c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HexZ {
    pub factor: BigRational,
    pub critical: bool,
}

impl HexZ {
    pub fn critical() -> Self {
        HexZ {
            factor: BigRational::one(),
            critical: true,
        }
    }

    pub fn scaled_critical(factor: BigRational) -> Self {
        HexZ {
            factor,
            critical: true,
        }
    }

    pub fn rational(value: BigRational) -> Self {
        HexZ {
            factor: value,
            critical: false,
        }
    }

    pub fn parse(s: &str) -> Result<Self, HexError> {
        let s = s.trim();
        let bad = || HexError::Parse(s.to_string());
        if s.eq_ignore_ascii_case("zc") {
            return Ok(HexZ::critical());
        }
        if let Some(f) = s.strip_suffix("zc").or_else(|| s.strip_suffix("*zc")) {
            let f = f.trim_end_matches('*');
            return Ok(HexZ::scaled_critical(f.parse().map_err(|_| bad())?));
        }
        Ok(HexZ::rational(s.parse().map_err(|_| bad())?))
    }

    pub fn value<R: Real>(&self, bits: usize) -> R {
        let f = R::from_ratio(&self.factor, bits);
        if self.critical {
            f * critical_z(bits)
        } else {
            f
        }
    }
}

impl std::fmt::Display for HexZ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.critical, self.factor.is_one()) {
            (true, true) => write!(f, "zc"),
            (true, false) => write!(f, "{}*zc", self.factor),
            _ => write!(f, "{}", self.factor),
        }
    }
}

/// `1/√(2+√2)`.
pub fn critical_z<R: Real>(bits: usize) -> R {
    let two = R::from_i64(2, bits);
    R::one(bits) / (two.clone() + two.sqrt()).sqrt()
}

pub fn critical_sigma() -> BigRational {
    BigRational::new(5.into(), 8.into())
}

#[derive(Debug, Clone)]
pub struct Cx<R> {
    pub re: R,
    pub im: R,
}

impl<R: Real> Cx<R> {
    pub fn zero(bits: usize) -> Self {
        Cx {
            re: R::zero(bits),
            im: R::zero(bits),
        }
    }

    /// `e^{iπ t}`.
    pub fn unit(t: &BigRational, bits: usize) -> Self {
        Cx {
            re: R::cos_pi(t, bits),
            im: R::sin_pi(t, bits),
        }
    }

    pub fn scale(&self, s: &R) -> Self {
        Cx {
            re: self.re.clone() * s.clone(),
            im: self.im.clone() * s.clone(),
        }
    }

    pub fn norm(&self) -> R {
        (self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()).sqrt()
    }
}

impl<R: Real> Add for Cx<R> {
    type Output = Cx<R>;
    fn add(self, o: Cx<R>) -> Cx<R> {
        Cx {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl<R: Real> Sub for Cx<R> {
    type Output = Cx<R>;
    fn sub(self, o: Cx<R>) -> Cx<R> {
        Cx {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl<R: Real> Mul for Cx<R> {
    type Output = Cx<R>;
    fn mul(self, o: Cx<R>) -> Cx<R> {
        Cx {
            re: self.re.clone() * o.re.clone() - self.im.clone() * o.im.clone(),
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// Walk counts by end mid-edge, then by `(winding, length)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObservableTally {
    pub start: Option<MidEdge>,
    pub by_edge: BTreeMap<MidEdge, BTreeMap<(i32, u32), u64>>,
    pub nodes: u64,
}

struct Graph {
    vertices: Vec<HexVertex>,
    /// Per vertex and direction: the mid-edge id and the in-domain neighbour.
    out: Vec<[Option<(usize, Option<usize>)>; 6]>,
    edges: Vec<MidEdge>,
}

impl Graph {
    fn new(domain: &HexDomain) -> Self {
        let vertices: Vec<HexVertex> = domain.vertices.iter().copied().collect();
        let index: HashMap<HexVertex, usize> =
            vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let edges: Vec<MidEdge> = domain.mid_edges().into_iter().collect();
        let eid: HashMap<MidEdge, usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let out = vertices
            .iter()
            .map(|v| {
                let mut row = [None; 6];
                for (w, d) in v.neighbours() {
                    row[d as usize] = Some((eid[&MidEdge::from_vertex(*v, d)], index.get(&w).copied()));
                }
                row
            })
            .collect();
        Graph {
            vertices,
            out,
            edges,
        }
    }
}

type Cells = HashMap<(usize, i32, u32), u64>;

struct Search<'a> {
    g: &'a Graph,
    visited: Vec<bool>,
    cells: Cells,
    nodes: u64,
    pending: u64,
    shared: &'a AtomicU64,
    stop: &'a AtomicBool,
    budget: u64,
}

#[derive(Clone)]
struct Frame {
    vertex: usize,
    heading: u8,
    turns: i32,
    len: u32,
    visited: Vec<bool>,
}

impl Search<'_> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.pending += 1;
        if self.pending >= 1 << 14 {
            let total = self.shared.fetch_add(self.pending, Ordering::Relaxed) + self.pending;
            self.pending = 0;
            if total > self.budget {
                self.stop.store(true, Ordering::Relaxed);
            }
        }
        !self.stop.load(Ordering::Relaxed)
    }

    /// Enters `v` moving along `heading`; records every one-step extension.
    fn go(&mut self, v: usize, heading: u8, turns: i32, len: u32, depth: Option<(usize, &mut Vec<Frame>)>) -> bool {
        if !self.tick() {
            return false;
        }
        self.visited[v] = true;
        let len = len + 1;
        let back = (heading + 3) % 6;
        let mut depth = depth;
        for d in 0..6u8 {
            if d == back {
                continue;
            }
            let Some((e, w)) = self.g.out[v][d as usize] else {
                continue;
            };
            let t = turns + if (d + 6 - heading) % 6 == 1 { 1 } else { -1 };
            *self.cells.entry((e, t, len)).or_insert(0) += 1;
            let Some(w) = w else { continue };
            if self.visited[w] {
                continue;
            }
            match depth.as_mut() {
                Some((0, frames)) => frames.push(Frame {
                    vertex: w,
                    heading: d,
                    turns: t,
                    len,
                    visited: self.visited.clone(),
                }),
                Some((k, frames)) => {
                    if !self.go(w, d, t, len, Some((*k - 1, frames))) {
                        self.visited[v] = false;
                        return false;
                    }
                }
                None => {
                    if !self.go(w, d, t, len, None) {
                        self.visited[v] = false;
                        return false;
                    }
                }
            }
        }
        self.visited[v] = false;
        true
    }
}

const SPLIT_DEPTH: usize = 6;

/// Enumerates every self-avoiding mid-edge walk in `domain` starting at `a`.
pub fn enumerate_observable(
    domain: &HexDomain,
    a: MidEdge,
    cfg: &EngineConfig,
) -> Result<ObservableTally, HexError> {
    let v0 = domain.inner_endpoint(&a).ok_or(HexError::NotBoundary)?;
    let g = Graph::new(domain);
    let v0i = g.vertices.iter().position(|v| *v == v0).expect("inner vertex");
    let heading = (a.direction_from(v0).expect("incident") + 3) % 6;
    let shared = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let budget = cfg.node_budget.unwrap_or(u64::MAX);
    let new_search = || Search {
        g: &g,
        visited: vec![false; g.vertices.len()],
        cells: Cells::new(),
        nodes: 0,
        pending: 0,
        shared: &shared,
        stop: &stop,
        budget,
    };
    let mut head = new_search();
    let mut frames = Vec::new();
    let depth = cfg.split_depth.unwrap_or(SPLIT_DEPTH);
    head.go(v0i, heading, 0, 0, Some((depth, &mut frames)));
    let parts: Vec<(Cells, u64)> = cfg.run(|| {
        frames
            .par_iter()
            .map(|f| {
                let mut s = new_search();
                s.visited = f.visited.clone();
                s.go(f.vertex, f.heading, f.turns, f.len, None);
                shared.fetch_add(s.pending, Ordering::Relaxed);
                (s.cells, s.nodes)
            })
            .collect()
    });
    shared.fetch_add(head.pending, Ordering::Relaxed);
    if stop.load(Ordering::Relaxed) || shared.load(Ordering::Relaxed) > budget {
        return Err(HexError::Budget(budget));
    }
    let mut tally = ObservableTally {
        start: Some(a),
        nodes: head.nodes,
        ..Default::default()
    };
    tally.by_edge.entry(a).or_default().insert((0, 0), 1);
    for (cells, nodes) in std::iter::once((head.cells, 0)).chain(parts) {
        tally.nodes += nodes;
        for ((e, t, l), c) in cells {
            *tally.by_edge.entry(g.edges[e]).or_default().entry((t, l)).or_insert(0) += c;
        }
    }
    Ok(tally)
}

impl ObservableTally {
    /// `F_z(x) = Σ e^{-iσ W π/3} z^ℓ` for every reached mid-edge.
    pub fn evaluate<R: Real>(&self, z: &R, sigma: &BigRational, bits: usize) -> BTreeMap<MidEdge, Cx<R>> {
        let max_len = self.max_len();
        let mut pow = vec![R::one(bits)];
        for i in 0..max_len as usize {
            pow.push(pow[i].clone() * z.clone());
        }
        let mut phases: BTreeMap<i32, Cx<R>> = BTreeMap::new();
        let three = BigRational::from_integer(3.into());
        self.by_edge
            .iter()
            .map(|(e, cells)| {
                let mut acc = Cx::zero(bits);
                for (&(t, l), &c) in cells {
                    let ph = phases
                        .entry(t)
                        .or_insert_with(|| {
                            Cx::unit(&(-sigma * BigRational::from_integer(t.into()) / &three), bits)
                        })
                        .clone();
                    acc = acc + ph.scale(&(pow[l as usize].clone() * R::from_i64(c as i64, bits)));
                }
                (*e, acc)
            })
            .collect()
    }

    /// `Σ z^ℓ` over walks ending at `x`.
    pub fn unsigned<R: Real>(&self, x: &MidEdge, z: &R, bits: usize) -> R {
        let mut acc = R::zero(bits);
        if let Some(cells) = self.by_edge.get(x) {
            for (&(_, l), &c) in cells {
                acc = acc + R::from_i64(c as i64, bits) * pow(z, l);
            }
        }
        acc
    }

    /// Number of walks ending at `x`.
    pub fn count(&self, x: &MidEdge) -> u64 {
        self.by_edge.get(x).map(|c| c.values().sum()).unwrap_or(0)
    }

    pub fn max_len(&self) -> u32 {
        self.by_edge
            .values()
            .flat_map(|c| c.keys().map(|&(_, l)| l))
            .max()
            .unwrap_or(0)
    }

    /// Coefficients of `Σ_{x ∈ edges} Σ z^ℓ` as a polynomial in `z`.
    pub fn length_polynomial<'a>(&self, edges: impl IntoIterator<Item = &'a MidEdge>) -> Vec<u64> {
        let mut out = vec![0u64; self.max_len() as usize + 1];
        for e in edges {
            if let Some(cells) = self.by_edge.get(e) {
                for (&(_, l), &c) in cells {
                    out[l as usize] += c;
                }
            }
        }
        out
    }
}

fn pow<R: Real>(z: &R, n: u32) -> R {
    (0..n).fold(R::one(z.bits()), |acc, _| acc * z.clone())
}

fn poly_eval<R: Real>(c: &[u64], z: &R, bits: usize) -> R {
    c.iter()
        .rev()
        .fold(R::zero(bits), |acc, &a| acc * z.clone() + R::from_i64(a as i64, bits))
}

fn decimal<R: Real + 'static>(x: &R) -> String {
    let any: &dyn std::any::Any = x;
    if let Some(p) = any.downcast_ref::<Precise>() {
        let digits = (p.bits as f64 / std::f64::consts::LOG2_10) as usize;
        p.to_decimal(digits)
    } else {
        format!("{:e}", x.to_f64())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableValue {
    pub x: MidEdge,
    pub re: String,
    pub im: String,
    pub re_f64: f64,
    pub im_f64: f64,
    /// `Σ z^ℓ` over the contributing walks.
    pub unsigned: f64,
    pub walks: u64,
}

fn observable_with<R: Real + 'static>(
    tally: &ObservableTally,
    z: &HexZ,
    sigma: &BigRational,
    bits: usize,
) -> BTreeMap<MidEdge, ObservableValue> {
    let zv: R = z.value(bits);
    tally
        .evaluate(&zv, sigma, bits)
        .into_iter()
        .map(|(x, v)| {
            let unsigned = tally.unsigned(&x, &zv, bits).to_f64();
            (
                x,
                ObservableValue {
                    x,
                    re: decimal(&v.re),
                    im: decimal(&v.im),
                    re_f64: v.re.to_f64(),
                    im_f64: v.im.to_f64(),
                    unsigned,
                    walks: tally.count(&x),
                },
            )
        })
        .collect()
}

/// `F_z(x)` at every mid-edge reached from `a`; `bits == 53` evaluates in `f64`.
pub fn observable(
    domain: &HexDomain,
    a: MidEdge,
    z: &HexZ,
    sigma: &BigRational,
    bits: usize,
    cfg: &EngineConfig,
) -> Result<BTreeMap<MidEdge, ObservableValue>, HexError> {
    let tally = enumerate_observable(domain, a, cfg)?;
    Ok(if bits == 53 {
        observable_with::<f64>(&tally, z, sigma, bits)
    } else {
        observable_with::<Precise>(&tally, z, sigma, bits)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub z: String,
    pub sigma: String,
    pub bits: usize,
    pub max_residual: f64,
    pub max_residual_decimal: String,
    pub worst_vertex: Option<HexVertex>,
    pub vertices: usize,
}

/// `e^{iπ d/3}`, the unit vector from a vertex towards the mid-edge in direction `d`.
fn direction_vector<R: Real>(d: u8, bits: usize) -> Cx<R> {
    Cx::unit(&BigRational::new((d as i64).into(), 3.into()), bits)
}

fn vertex_residuals<R: Real + 'static>(
    domain: &HexDomain,
    tally: &ObservableTally,
    z: &HexZ,
    sigma: &BigRational,
    bits: usize,
) -> (R, String, Option<HexVertex>) {
    let f = tally.evaluate::<R>(&z.value(bits), sigma, bits);
    let mut worst: Option<(R, HexVertex)> = None;
    for v in &domain.vertices {
        let mut s = Cx::<R>::zero(bits);
        for (_, d) in v.neighbours() {
            if let Some(fx) = f.get(&MidEdge::from_vertex(*v, d)) {
                s = s + direction_vector::<R>(d, bits) * fx.clone();
            }
        }
        let n = s.norm();
        if worst.as_ref().is_none_or(|(w, _)| w.to_f64() < n.to_f64()) {
            worst = Some((n, *v));
        }
    }
    match worst {
        Some((n, v)) => {
            let d = decimal(&n);
            (n, d, Some(v))
        }
        None => (R::zero(bits), "0".into(), None),
    }
}

/// Max over vertices of `|Σ_{p ∼ v} (p - v) F(p)|`.
pub fn vertex_identity_check(
    domain: &HexDomain,
    a: MidEdge,
    z: &HexZ,
    sigma: &BigRational,
    bits: usize,
    cfg: &EngineConfig,
) -> Result<ResidualReport, HexError> {
    let tally = enumerate_observable(domain, a, cfg)?;
    Ok(vertex_report(domain, &tally, z, sigma, bits))
}

pub fn vertex_report(
    domain: &HexDomain,
    tally: &ObservableTally,
    z: &HexZ,
    sigma: &BigRational,
    bits: usize,
) -> ResidualReport {
    let (max_residual, max_residual_decimal, worst_vertex) = if bits == 53 {
        let (n, d, v) = vertex_residuals::<f64>(domain, tally, z, sigma, bits);
        (n, d, v)
    } else {
        let (n, d, v) = vertex_residuals::<Precise>(domain, tally, z, sigma, bits);
        (n.to_f64(), d, v)
    };
    ResidualReport {
        z: z.to_string(),
        sigma: sigma.to_string(),
        bits,
        max_residual,
        max_residual_decimal,
        worst_vertex,
        vertices: domain.len(),
    }
}

/// `|Σ_{x ∈ ∂Ω} (x - v_x) F(x)|` with `v_x` the inner endpoint of `x`; the sum
/// of all vertex identities, in which interior mid-edges cancel.
pub fn boundary_identity_check(
    domain: &HexDomain,
    a: MidEdge,
    bits: usize,
    cfg: &EngineConfig,
) -> Result<ResidualReport, HexError> {
    let tally = enumerate_observable(domain, a, cfg)?;
    let z = HexZ::critical();
    let sigma = critical_sigma();
    fn sum<R: Real + 'static>(
        domain: &HexDomain,
        tally: &ObservableTally,
        z: &HexZ,
        sigma: &BigRational,
        bits: usize,
    ) -> (f64, String) {
        let f = tally.evaluate::<R>(&z.value(bits), sigma, bits);
        let mut s = Cx::<R>::zero(bits);
        for x in domain.boundary() {
            let v = domain.inner_endpoint(&x).expect("boundary");
            if let Some(fx) = f.get(&x) {
                let d = x.direction_from(v).expect("incident");
                s = s + direction_vector::<R>(d, bits) * fx.clone();
            }
        }
        let n = s.norm();
        (n.to_f64(), decimal(&n))
    }
    let (max_residual, max_residual_decimal) = if bits == 53 {
        sum::<f64>(domain, &tally, &z, &sigma, bits)
    } else {
        sum::<Precise>(domain, &tally, &z, &sigma, bits)
    };
    Ok(ResidualReport {
        z: z.to_string(),
        sigma: sigma.to_string(),
        bits,
        max_residual,
        max_residual_decimal,
        worst_vertex: None,
        vertices: domain.len(),
    })
}

/// Winding values (in units of π/3) seen on each boundary part.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StripWindings {
    pub alpha: Vec<i32>,
    pub beta: Vec<i32>,
    pub eps: Vec<i32>,
    pub eps_bar: Vec<i32>,
}

impl StripWindings {
    pub fn as_expected(&self) -> bool {
        self.alpha.iter().all(|w| w.abs() == 3)
            && self.beta.iter().all(|&w| w == 0)
            && self.eps.iter().all(|&w| w == 2)
            && self.eps_bar.iter().all(|&w| w == -2)
    }
}

/// Exact length polynomials of the strip sums.
#[derive(Debug, Clone, Serialize)]
pub struct StripPolynomials {
    pub t: u32,
    pub l: u32,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub e: Vec<u64>,
    pub windings: StripWindings,
}

pub fn strip_polynomials(t: u32, l: u32, cfg: &EngineConfig) -> Result<StripPolynomials, HexError> {
    let strip = strip_domain(t, l);
    let tally = enumerate_observable(&strip.domain, strip.start, cfg)?;
    Ok(polynomials_from(&strip, &tally))
}

fn polynomials_from(strip: &StripDomain, tally: &ObservableTally) -> StripPolynomials {
    let alpha: Vec<MidEdge> = strip.alpha.iter().filter(|e| **e != strip.start).copied().collect();
    let e: Vec<MidEdge> = strip.eps.iter().chain(&strip.eps_bar).copied().collect();
    let mut windings = StripWindings::default();
    for (x, cells) in &tally.by_edge {
        let Some(part) = strip.part_of(x) else { continue };
        if *x == strip.start {
            continue;
        }
        let slot = match part {
            BoundaryPart::Alpha => &mut windings.alpha,
            BoundaryPart::Beta => &mut windings.beta,
            BoundaryPart::Eps => &mut windings.eps,
            BoundaryPart::EpsBar => &mut windings.eps_bar,
        };
        for &(w, _) in cells.keys() {
            if !slot.contains(&w) {
                slot.push(w);
            }
        }
    }
    for v in [
        &mut windings.alpha,
        &mut windings.beta,
        &mut windings.eps,
        &mut windings.eps_bar,
    ] {
        v.sort();
    }
    StripPolynomials {
        t: strip.t,
        l: strip.l,
        a: tally.length_polynomial(&alpha),
        b: tally.length_polynomial(&strip.beta),
        e: tally.length_polynomial(&e),
        windings,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StripSums {
    pub t: u32,
    pub l: u32,
    pub z: String,
    pub a: String,
    pub b: String,
    pub e: String,
    pub a_f64: f64,
    pub b_f64: f64,
    pub e_f64: f64,
}

fn sums_with<R: Real + 'static>(p: &StripPolynomials, z: &HexZ, bits: usize) -> (R, R, R) {
    let zv: R = z.value(bits);
    (
        poly_eval(&p.a, &zv, bits),
        poly_eval(&p.b, &zv, bits),
        poly_eval(&p.e, &zv, bits),
    )
}

impl StripPolynomials {
    pub fn sums(&self, z: &HexZ, bits: usize) -> StripSums {
        let (a, b, e, af, bf, ef) = if bits == 53 {
            let (a, b, e) = sums_with::<f64>(self, z, bits);
            (decimal(&a), decimal(&b), decimal(&e), a, b, e)
        } else {
            let (a, b, e) = sums_with::<Precise>(self, z, bits);
            (decimal(&a), decimal(&b), decimal(&e), a.to_f64(), b.to_f64(), e.to_f64())
        };
        StripSums {
            t: self.t,
            l: self.l,
            z: z.to_string(),
            a,
            b,
            e,
            a_f64: af,
            b_f64: bf,
            e_f64: ef,
        }
    }
}

/// `(A_{T,L}, B_{T,L}, E_{T,L})` at `z`.
pub fn strip_sums(t: u32, l: u32, z: &HexZ, bits: usize, cfg: &EngineConfig) -> Result<StripSums, HexError> {
    Ok(strip_polynomials(t, l, cfg)?.sums(z, bits))
}

/// `cos(3π/8)` and `cos(π/4)`.
pub fn strip_coefficients<R: Real>(bits: usize) -> (R, R) {
    (
        R::cos_pi(&BigRational::new(3.into(), 8.into()), bits),
        R::cos_pi(&BigRational::new(1.into(), 4.into()), bits),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct StripIdentityReport {
    pub sums: StripSums,
    pub residual: f64,
    pub residual_decimal: String,
    pub windings: StripWindings,
    pub windings_ok: bool,
}

fn strip_residual<R: Real + 'static>(p: &StripPolynomials, bits: usize) -> (f64, String) {
    let (a, b, e) = sums_with::<R>(p, &HexZ::critical(), bits);
    let (ca, ce) = strip_coefficients::<R>(bits);
    let r = (ca * a + b + ce * e - R::one(bits)).abs();
    (r.to_f64(), decimal(&r))
}

impl StripPolynomials {
    pub fn identity(&self, bits: usize) -> StripIdentityReport {
        let (residual, residual_decimal) = if bits == 53 {
            strip_residual::<f64>(self, bits)
        } else {
            strip_residual::<Precise>(self, bits)
        };
        StripIdentityReport {
            sums: self.sums(&HexZ::critical(), bits),
            residual,
            residual_decimal,
            windings_ok: self.windings.as_expected(),
            windings: self.windings.clone(),
        }
    }
}

/// `|c_α A_{T,L} + B_{T,L} + c_ε E_{T,L} - 1|` at `z_c`.
pub fn strip_identity_check(t: u32, l: u32, bits: usize, cfg: &EngineConfig) -> Result<StripIdentityReport, HexError> {
    Ok(strip_polynomials(t, l, cfg)?.identity(bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RecursionVerdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StripLimitBrackets {
    pub t: u32,
    /// Per `L`: brackets of `lim_L A_{T,L}` and `lim_L B_{T,L}` at `z_c`.
    pub l: Vec<u32>,
    pub a: Vec<Bracket>,
    pub b: Vec<Bracket>,
    pub e: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecursionStep {
    pub t: u32,
    /// Bracket of `A_{T+1} - A_T`.
    pub lhs: Bracket,
    /// Bracket of `z_c B_{T+1}^2`.
    pub rhs: Bracket,
    pub verdict: RecursionVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecursionReport {
    pub brackets: Vec<StripLimitBrackets>,
    pub steps: Vec<RecursionStep>,
    pub nested: bool,
}

/// Checks `A_{T+1} - A_T <= z_c B_{T+1}^2` for `T < l_max.len()` from strips
/// with `L = 1..=l_max[T - 1]`. As `L` grows, `A` and `B` increase and `E >= 0` decreases, so with
/// `1 = c_α A + B + c_ε E` in the limit:
/// `A_{T,L} <= A_T <= (1 - B_{T,L})/c_α` and `B_{T,L} <= B_T <= 1 - c_α A_{T,L}`.
pub fn strip_recursion_check(l_max: &[u32], cfg: &EngineConfig) -> Result<RecursionReport, HexError> {
    let t_max = l_max.len() as u32;
    let (ca, _) = strip_coefficients::<f64>(53);
    let zc: f64 = critical_z(53);
    let slack = 1e-12;
    let mut brackets = Vec::new();
    for t in 1..=t_max {
        let mut br = StripLimitBrackets {
            t,
            l: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
            e: Vec::new(),
        };
        for l in 1..=l_max[t as usize - 1] {
            let s = strip_sums(t, l, &HexZ::critical(), DEFAULT_BITS, cfg)?;
            br.l.push(l);
            br.a.push(Bracket {
                lower: s.a_f64 - slack,
                upper: (1.0 - s.b_f64) / ca + slack,
            });
            br.b.push(Bracket {
                lower: s.b_f64 - slack,
                upper: 1.0 - ca * s.a_f64 + slack,
            });
            br.e.push(s.e_f64);
        }
        brackets.push(br);
    }
    let tight = |v: &[Bracket]| Bracket {
        lower: v.iter().map(|b| b.lower).fold(f64::NEG_INFINITY, f64::max),
        upper: v.iter().map(|b| b.upper).fold(f64::INFINITY, f64::min),
    };
    let nested = brackets.iter().all(|br| {
        let ok = |v: &[Bracket]| {
            v.windows(2)
                .all(|w| w[1].lower >= w[0].lower - slack && w[1].upper <= w[0].upper + slack)
        };
        ok(&br.a) && ok(&br.b)
    });
    let mut steps = Vec::new();
    for t in 1..t_max {
        let a0 = tight(&brackets[t as usize - 1].a);
        let a1 = tight(&brackets[t as usize].a);
        let b1 = tight(&brackets[t as usize].b);
        let lhs = Bracket {
            lower: a1.lower - a0.upper,
            upper: a1.upper - a0.lower,
        };
        let rhs = Bracket {
            lower: zc * b1.lower.max(0.0).powi(2),
            upper: zc * b1.upper.powi(2),
        };
        let verdict = if lhs.upper <= rhs.lower {
            RecursionVerdict::Holds
        } else if lhs.lower > rhs.upper {
            RecursionVerdict::Violated
        } else {
            RecursionVerdict::Inconclusive
        };
        steps.push(RecursionStep { t, lhs, rhs, verdict });
    }
    Ok(RecursionReport {
        brackets,
        steps,
        nested,
    })
}

/// A single mid-edge walk, for small domains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MidEdgeWalk {
    pub mid_edges: Vec<MidEdge>,
    pub vertices: Vec<HexVertex>,
    /// Turn signs, one per visited vertex.
    pub turns: Vec<i8>,
}

impl MidEdgeWalk {
    pub fn winding(&self) -> i32 {
        self.turns.iter().map(|&t| t as i32).sum()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Every self-avoiding mid-edge walk from `a` in `domain`, by explicit listing.
pub fn list_mid_edge_walks(domain: &HexDomain, a: MidEdge) -> Result<Vec<MidEdgeWalk>, HexError> {
    let v0 = domain.inner_endpoint(&a).ok_or(HexError::NotBoundary)?;
    let mut out = vec![MidEdgeWalk {
        mid_edges: vec![a],
        vertices: Vec::new(),
        turns: Vec::new(),
    }];
    fn go(domain: &HexDomain, cur: &mut MidEdgeWalk, via: HexVertex, out: &mut Vec<MidEdgeWalk>) {
        let last = *cur.mid_edges.last().unwrap();
        let next = crate::lattice::hex_continuations(last, via).expect("incident");
        cur.vertices.push(via);
        for (e, t) in next {
            cur.mid_edges.push(e);
            cur.turns.push(t);
            out.push(cur.clone());
            if let Some(w) = e.other(via) {
                if domain.contains(&w) && !cur.vertices.contains(&w) {
                    go(domain, cur, w, out);
                }
            }
            cur.mid_edges.pop();
            cur.turns.pop();
        }
        cur.vertices.pop();
    }
    let mut cur = out[0].clone();
    go(domain, &mut cur, v0, &mut out);
    Ok(out)
}
