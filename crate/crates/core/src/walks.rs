//! Exact enumeration of self-avoiding walks and relatives on Z^d.
//!
//! The engine walks a bitset box of side `2nR + 1` per axis. The search tree
//! is cut at a prefix depth into independent tasks which run on a rayon pool;
//! per-worker tallies are plain integer sums, so the result does not depend on
//! the number of workers or on scheduling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{step_set, LatticeError, LatticeSpec, Point};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WalkError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("node budget of {0} exceeded")]
    Budget(u64),
    #[error("lambda must be an exact rational in [0, 1], got {0}")]
    Lambda(String),
    #[error("{0}")]
    Precondition(String),
    #[error("polygon count {numerator}/{denominator} is not an integer")]
    Divisibility { numerator: String, denominator: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EngineConfig {
    /// Worker threads; 0 picks the rayon default.
    pub workers: usize,
    /// Prefix depth at which the tree is split; `None` starts at 3 and deepens
    /// until there are enough tasks to keep every worker busy.
    pub split_depth: Option<usize>,
    /// Maximum number of visited nodes; exceeding it aborts with `Budget`.
    pub node_budget: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: 0,
            split_depth: None,
            node_budget: None,
        }
    }
}

impl EngineConfig {
    pub fn with_workers(workers: usize) -> Self {
        EngineConfig {
            workers,
            ..Default::default()
        }
    }

    pub(crate) fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        if self.workers == 0 {
            return f();
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    CN,
    CNx,
    BN,
    BNA,
    BNx,
    HN,
    ReturnsN,
    QN,
    Restricted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable<W> {
    pub spec: LatticeSpec,
    pub quantity: Quantity,
    pub lambda: Option<BigRational>,
    pub totals: Vec<W>,
    /// Per length, counts by endpoint. Empty when not requested.
    pub by_endpoint: Vec<BTreeMap<Point, W>>,
    /// Per length, counts by span. Empty when not requested.
    pub by_span: Vec<BTreeMap<u32, W>>,
}

impl<W> CountTable<W> {
    pub fn n_max(&self) -> usize {
        self.totals.len() - 1
    }

    pub fn at(&self, n: usize, x: &[i32]) -> Option<&W> {
        self.by_endpoint.get(n)?.get(x)
    }
}

/// Bitset box encoding of Z^d points of sup-norm at most `radius`.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub dim: usize,
    pub radius: i32,
    pub side: usize,
    pub strides: Vec<usize>,
    pub steps: Vec<Point>,
    pub offsets: Vec<isize>,
}

impl Geometry {
    pub fn new(spec: &LatticeSpec, n: usize) -> Result<Self, WalkError> {
        let steps = step_set(spec)?;
        let dim = spec.dim() as usize;
        let radius = (n as i32) * spec.range() as i32 + 1;
        let side = 2 * radius as usize + 1;
        let strides: Vec<usize> = (0..dim).map(|i| side.pow(i as u32)).collect();
        let offsets = steps
            .iter()
            .map(|s| {
                s.iter()
                    .zip(&strides)
                    .map(|(&c, &st)| c as isize * st as isize)
                    .sum()
            })
            .collect();
        Ok(Geometry {
            dim,
            radius,
            side,
            strides,
            steps,
            offsets,
        })
    }

    pub fn volume(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn index(&self, p: &[i32]) -> usize {
        p.iter()
            .zip(&self.strides)
            .map(|(&c, &st)| (c + self.radius) as usize * st)
            .sum()
    }

    pub fn point(&self, mut idx: usize) -> Point {
        let mut p = vec![0; self.dim];
        for c in p.iter_mut() {
            *c = (idx % self.side) as i32 - self.radius;
            idx /= self.side;
        }
        p
    }

    pub fn step_index(&self, s: &[i32]) -> Option<usize> {
        self.steps.iter().position(|t| t.as_slice() == s)
    }
}

/// Minimal number of steps needed to cover displacement `v`.
fn steps_needed(spec: &LatticeSpec, v: &[i32]) -> i32 {
    match spec {
        LatticeSpec::ZdSpreadOut { range, .. } => {
            let sup = v.iter().map(|c| c.abs()).max().unwrap_or(0);
            (sup + *range as i32 - 1) / *range as i32
        }
        _ => v.iter().map(|c| c.abs()).sum(),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Saw,
    HalfSpace,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Reduction {
    None,
    /// First step +e1 only; tables unfold over the signed permutations.
    FirstStep,
    /// Straight along +e1 until the first turn, which must be +e2.
    FirstTurn,
}

struct Search<'a> {
    spec: LatticeSpec,
    geo: &'a Geometry,
    n: usize,
    mode: Mode,
    reduction: Reduction,
    endpoints: bool,
    spans: bool,
    /// Only walks of length exactly `n` ending in `targets` are counted.
    targets: Option<(Vec<usize>, Point, i32)>,
    e1: usize,
    e2: Option<usize>,
    budget: u64,
    nodes: &'a AtomicU64,
    abort: &'a AtomicBool,
}

#[derive(Clone)]
struct State {
    visited: Vec<u64>,
    coords: Vec<i32>,
    x1_max: i32,
    straight: bool,
    pending: u64,
}

#[derive(Clone, Default)]
struct Tally {
    straight: Vec<u128>,
    turned: Vec<u128>,
    bridge_straight: Vec<u128>,
    bridge_turned: Vec<u128>,
    span: Vec<Vec<u128>>,
    endpoints: Vec<u64>,
    bridge_endpoints: Vec<u64>,
    hits: u128,
}

impl Tally {
    fn new(search: &Search) -> Self {
        let n = search.n;
        let vol = search.geo.volume();
        Tally {
            straight: vec![0; n + 1],
            turned: vec![0; n + 1],
            bridge_straight: vec![0; n + 1],
            bridge_turned: vec![0; n + 1],
            span: if search.spans {
                vec![vec![0; n * search.spec.range() as usize + 1]; n + 1]
            } else {
                Vec::new()
            },
            endpoints: if search.endpoints {
                vec![0; (n + 1) * vol]
            } else {
                Vec::new()
            },
            bridge_endpoints: if search.endpoints && search.mode == Mode::HalfSpace {
                vec![0; (n + 1) * vol]
            } else {
                Vec::new()
            },
            hits: 0,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        fn add<T: Copy + std::ops::AddAssign>(a: &mut [T], b: &[T]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        add(&mut self.straight, &other.straight);
        add(&mut self.turned, &other.turned);
        add(&mut self.bridge_straight, &other.bridge_straight);
        add(&mut self.bridge_turned, &other.bridge_turned);
        for (a, b) in self.span.iter_mut().zip(&other.span) {
            add(a, b);
        }
        add(&mut self.endpoints, &other.endpoints);
        add(&mut self.bridge_endpoints, &other.bridge_endpoints);
        self.hits += other.hits;
        self
    }
}

const FLUSH: u64 = 1 << 14;

impl<'a> Search<'a> {
    fn fresh_state(&self) -> State {
        let vol = self.geo.volume();
        let mut st = State {
            visited: vec![0; vol.div_ceil(64)],
            coords: vec![0; self.geo.dim],
            x1_max: 0,
            straight: true,
            pending: 0,
        };
        let o = self.geo.index(&st.coords);
        st.visited[o / 64] |= 1 << (o % 64);
        st
    }

    fn is_visited(st: &State, pos: usize) -> bool {
        st.visited[pos / 64] >> (pos % 64) & 1 == 1
    }

    fn allowed(&self, st: &State, k: usize, s: usize) -> bool {
        let step = &self.geo.steps[s];
        if self.mode == Mode::HalfSpace && st.coords[0] + step[0] <= 0 {
            return false;
        }
        match self.reduction {
            Reduction::None => true,
            Reduction::FirstStep => k > 0 || s == self.e1,
            Reduction::FirstTurn => {
                !st.straight || s == self.e1 || (k > 0 && Some(s) == self.e2)
            }
        }
    }

    fn apply(&self, st: &mut State, pos: usize, s: usize) -> (usize, bool, i32) {
        let next = (pos as isize + self.geo.offsets[s]) as usize;
        st.visited[next / 64] |= 1 << (next % 64);
        for (c, d) in st.coords.iter_mut().zip(&self.geo.steps[s]) {
            *c += d;
        }
        let saved = (st.straight, st.x1_max);
        if s != self.e1 {
            st.straight = false;
        }
        st.x1_max = st.x1_max.max(st.coords[0]);
        (next, saved.0, saved.1)
    }

    fn undo(&self, st: &mut State, next: usize, s: usize, saved: (bool, i32)) {
        st.visited[next / 64] &= !(1 << (next % 64));
        for (c, d) in st.coords.iter_mut().zip(&self.geo.steps[s]) {
            *c -= d;
        }
        st.straight = saved.0;
        st.x1_max = saved.1;
    }

    fn record(&self, st: &mut State, tally: &mut Tally, k: usize, pos: usize) -> bool {
        st.pending += 1;
        if st.pending >= FLUSH {
            let total = self.nodes.fetch_add(st.pending, Ordering::Relaxed) + st.pending;
            st.pending = 0;
            if total > self.budget {
                self.abort.store(true, Ordering::Relaxed);
            }
        }
        if self.abort.load(Ordering::Relaxed) {
            return false;
        }
        if let Some((targets, _, _)) = &self.targets {
            if k == self.n && targets.contains(&pos) {
                tally.hits += 1;
            }
            return true;
        }
        if st.straight {
            tally.straight[k] += 1;
        } else {
            tally.turned[k] += 1;
        }
        if self.endpoints {
            tally.endpoints[k * self.geo.volume() + pos] += 1;
        }
        if self.mode == Mode::HalfSpace && st.coords[0] == st.x1_max {
            if st.straight {
                tally.bridge_straight[k] += 1;
            } else {
                tally.bridge_turned[k] += 1;
            }
            if self.spans {
                tally.span[k][st.coords[0] as usize] += 1;
            }
            if self.endpoints {
                tally.bridge_endpoints[k * self.geo.volume() + pos] += 1;
            }
        }
        true
    }

    fn pruned(&self, st: &State, k: usize) -> bool {
        match &self.targets {
            Some((_, center, slack)) => {
                let v: Vec<i32> = st.coords.iter().zip(center).map(|(a, b)| a - b).collect();
                steps_needed(&self.spec, &v) > (self.n - k) as i32 + slack
            }
            None => false,
        }
    }

    /// Explores below the node at depth `k`; stops at `cut` and collects tasks.
    fn expand(
        &self,
        st: &mut State,
        tally: &mut Tally,
        k: usize,
        pos: usize,
        path: &mut Vec<u8>,
        cut: Option<(usize, &mut Vec<Vec<u8>>)>,
    ) {
        if k == self.n {
            return;
        }
        let mut cut = cut;
        for s in 0..self.geo.steps.len() {
            if !self.allowed(st, k, s) {
                continue;
            }
            let next = (pos as isize + self.geo.offsets[s]) as usize;
            if Self::is_visited(st, next) {
                continue;
            }
            let (next, straight, x1_max) = self.apply(st, pos, s);
            if !self.pruned(st, k + 1) {
                if !self.record(st, tally, k + 1, next) {
                    self.undo(st, next, s, (straight, x1_max));
                    return;
                }
                path.push(s as u8);
                match cut.as_mut() {
                    Some((depth, tasks)) if k + 1 == *depth => tasks.push(path.clone()),
                    Some((depth, tasks)) => {
                        self.expand(st, tally, k + 1, next, path, Some((*depth, &mut **tasks)))
                    }
                    None => self.expand(st, tally, k + 1, next, path, None),
                }
                path.pop();
            }
            self.undo(st, next, s, (straight, x1_max));
        }
    }

    fn run_task(&self, tally: &mut Tally, st: &mut State, task: &[u8]) {
        let mut pos = self.geo.index(&vec![0; self.geo.dim]);
        for &s in task {
            pos = self.apply(st, pos, s as usize).0;
        }
        let mut path = task.to_vec();
        self.expand(st, tally, task.len(), pos, &mut path, None);
        let mut back = pos;
        for &s in task.iter().rev() {
            let s = s as usize;
            let prev = (back as isize - self.geo.offsets[s]) as usize;
            st.visited[back / 64] &= !(1 << (back % 64));
            for (c, d) in st.coords.iter_mut().zip(&self.geo.steps[s]) {
                *c -= d;
            }
            back = prev;
        }
        st.straight = true;
        st.x1_max = 0;
    }

    fn execute(&self, cfg: &EngineConfig) -> Result<Tally, WalkError> {
        let mut root_tally = Tally::new(self);
        let mut st = self.fresh_state();
        let origin = self.geo.index(&st.coords.clone());
        if !self.pruned(&st, 0) {
            self.record(&mut st, &mut root_tally, 0, origin);
        }
        let workers = if cfg.workers == 0 {
            rayon::current_num_threads()
        } else {
            cfg.workers
        };
        let mut depth = cfg.split_depth.unwrap_or(3).max(1);
        let mut tasks = Vec::new();
        loop {
            let mut t = Tally::new(self);
            let mut s = self.fresh_state();
            tasks.clear();
            self.expand(&mut s, &mut t, 0, origin, &mut Vec::new(), Some((depth, &mut tasks)));
            if self.abort.load(Ordering::Relaxed) {
                return Err(WalkError::Budget(self.budget));
            }
            let enough = tasks.len() >= 64 * workers;
            if cfg.split_depth.is_some() || enough || depth >= self.n || depth >= 8 {
                root_tally = root_tally.merge(t);
                self.nodes.fetch_add(s.pending, Ordering::Relaxed);
                break;
            }
            self.nodes.store(0, Ordering::Relaxed);
            depth += 1;
        }
        let fold = cfg.run(|| {
            tasks
                .par_iter()
                .fold(
                    || (Tally::new(self), self.fresh_state()),
                    |(mut t, mut s), task| {
                        if !self.abort.load(Ordering::Relaxed) {
                            self.run_task(&mut t, &mut s, task);
                        }
                        (t, s)
                    },
                )
                .map(|(t, s)| {
                    self.nodes.fetch_add(s.pending, Ordering::Relaxed);
                    t
                })
                .reduce(|| Tally::new(self), Tally::merge)
        });
        if self.abort.load(Ordering::Relaxed) || self.nodes.load(Ordering::Relaxed) > self.budget {
            return Err(WalkError::Budget(self.budget));
        }
        Ok(root_tally.merge(fold))
    }
}

fn big(x: u128) -> BigUint {
    BigUint::from(x)
}

/// The signed permutations taking +e1 to each unit step.
fn unit_symmetries(dim: usize) -> Vec<(usize, i32)> {
    (0..dim).flat_map(|i| [(i, 1), (i, -1)]).collect()
}

fn apply_symmetry(p: &[i32], (axis, sign): (usize, i32)) -> Point {
    let mut q = p.to_vec();
    q.swap(0, axis);
    q[axis] *= sign;
    q
}

struct Outcome {
    tally: Tally,
    geo: Geometry,
    reduction: Reduction,
}

fn search(
    spec: &LatticeSpec,
    n: usize,
    mode: Mode,
    endpoints: bool,
    spans: bool,
    targets: Option<(Vec<Point>, Point, i32)>,
    cfg: &EngineConfig,
) -> Result<Outcome, WalkError> {
    if !spec.is_zd() {
        return Err(LatticeError::NotZd.into());
    }
    let geo = Geometry::new(spec, n)?;
    let e1 = geo.step_index(&spec.unit(0)).unwrap_or(usize::MAX);
    let e2 = if spec.dim() >= 2 {
        geo.step_index(&spec.unit(1))
    } else {
        None
    };
    let reduction = if !spec.is_nearest() || targets.is_some() {
        Reduction::None
    } else if endpoints {
        if mode == Mode::Saw {
            Reduction::FirstStep
        } else {
            Reduction::None
        }
    } else {
        Reduction::FirstTurn
    };
    let nodes = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let targets = targets.map(|(ts, c, slack)| {
        (ts.iter().map(|t| geo.index(t)).collect::<Vec<_>>(), c, slack)
    });
    let s = Search {
        spec: *spec,
        geo: &geo,
        n,
        mode,
        reduction,
        endpoints,
        spans,
        targets,
        e1,
        e2,
        budget: cfg.node_budget.unwrap_or(u64::MAX),
        nodes: &nodes,
        abort: &abort,
    };
    let tally = s.execute(cfg)?;
    Ok(Outcome {
        tally,
        geo,
        reduction,
    })
}

/// Combines straight and turned tallies according to the reduction used.
fn combine(
    spec: &LatticeSpec,
    reduction: Reduction,
    straight: &[u128],
    turned: &[u128],
    rooted: bool,
) -> Vec<BigUint> {
    let deg = spec.degree() as u128;
    let side = 2 * (spec.dim() as u128 - 1);
    straight
        .iter()
        .zip(turned)
        .enumerate()
        .map(|(k, (&s, &t))| match reduction {
            Reduction::None => big(s + t),
            Reduction::FirstStep if k == 0 => big(s + t),
            Reduction::FirstStep => big(s + t) * deg,
            Reduction::FirstTurn => {
                let inner = big(s) + big(t) * side;
                if k > 0 && rooted {
                    inner * deg
                } else {
                    inner
                }
            }
        })
        .collect()
}

fn endpoint_maps(
    geo: &Geometry,
    data: &[u64],
    n: usize,
    unfold: bool,
) -> Vec<BTreeMap<Point, BigUint>> {
    let vol = geo.volume();
    (0..=n)
        .map(|k| {
            let mut m: BTreeMap<Point, BigUint> = BTreeMap::new();
            for (pos, &c) in data[k * vol..(k + 1) * vol].iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let p = geo.point(pos);
                if unfold && k > 0 {
                    for g in unit_symmetries(geo.dim) {
                        *m.entry(apply_symmetry(&p, g)).or_default() += c;
                    }
                } else {
                    *m.entry(p).or_default() += c;
                }
            }
            m
        })
        .collect()
}

/// Self-avoiding walk counts `c_0..c_n`, optionally resolved by endpoint.
pub fn count_saws(
    spec: &LatticeSpec,
    n: usize,
    endpoints: bool,
    cfg: &EngineConfig,
) -> Result<CountTable<BigUint>, WalkError> {
    let out = search(spec, n, Mode::Saw, endpoints, false, None, cfg)?;
    let totals = combine(
        spec,
        out.reduction,
        &out.tally.straight,
        &out.tally.turned,
        true,
    );
    let by_endpoint = if endpoints {
        endpoint_maps(
            &out.geo,
            &out.tally.endpoints,
            n,
            out.reduction == Reduction::FirstStep,
        )
    } else {
        Vec::new()
    };
    Ok(CountTable {
        spec: *spec,
        quantity: if endpoints { Quantity::CNx } else { Quantity::CN },
        lambda: None,
        totals,
        by_endpoint,
        by_span: Vec::new(),
    })
}

/// Half-space walks and bridges, in one pass.
pub struct HalfSpaceCounts {
    pub half_space: CountTable<BigUint>,
    pub bridges: CountTable<BigUint>,
}

pub fn count_half_space_and_bridges(
    spec: &LatticeSpec,
    n: usize,
    endpoints: bool,
    cfg: &EngineConfig,
) -> Result<HalfSpaceCounts, WalkError> {
    let out = search(spec, n, Mode::HalfSpace, endpoints, true, None, cfg)?;
    let t = &out.tally;
    let h = combine(spec, out.reduction, &t.straight, &t.turned, false);
    let b = combine(
        spec,
        out.reduction,
        &t.bridge_straight,
        &t.bridge_turned,
        false,
    );
    let factor = match out.reduction {
        Reduction::FirstTurn => 2 * (spec.dim() - 1),
        _ => 1,
    };
    // Spans are tallied in the reduced class only; straight bridges are the
    // ones of span k with no transverse move.
    let by_span = t
        .span
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(a, &c)| {
                    let straight = if out.reduction == Reduction::FirstTurn && a == k {
                        t.bridge_straight[k]
                    } else {
                        0
                    };
                    let turned = c - straight;
                    (a as u32, big(straight) + big(turned) * factor)
                })
                .collect()
        })
        .collect();
    let (h_end, b_end) = if endpoints {
        (
            endpoint_maps(&out.geo, &t.endpoints, n, false),
            endpoint_maps(&out.geo, &t.bridge_endpoints, n, false),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(HalfSpaceCounts {
        half_space: CountTable {
            spec: *spec,
            quantity: Quantity::HN,
            lambda: None,
            totals: h,
            by_endpoint: h_end,
            by_span: Vec::new(),
        },
        bridges: CountTable {
            spec: *spec,
            quantity: if endpoints { Quantity::BNx } else { Quantity::BNA },
            lambda: None,
            totals: b,
            by_endpoint: b_end,
            by_span,
        },
    })
}

pub fn count_bridges(
    spec: &LatticeSpec,
    n: usize,
    endpoints: bool,
    cfg: &EngineConfig,
) -> Result<CountTable<BigUint>, WalkError> {
    Ok(count_half_space_and_bridges(spec, n, endpoints, cfg)?.bridges)
}

pub fn count_half_space(
    spec: &LatticeSpec,
    n: usize,
    cfg: &EngineConfig,
) -> Result<CountTable<BigUint>, WalkError> {
    Ok(count_half_space_and_bridges(spec, n, false, cfg)?.half_space)
}

/// Number of `n`-step self-avoiding walks from the origin to `target`.
pub fn count_saws_to(
    spec: &LatticeSpec,
    n: usize,
    target: &[i32],
    cfg: &EngineConfig,
) -> Result<BigUint, WalkError> {
    let t = target.to_vec();
    let out = search(
        spec,
        n,
        Mode::Saw,
        false,
        false,
        Some((vec![t.clone()], t, 0)),
        cfg,
    )?;
    Ok(big(out.tally.hits))
}

/// Self-avoiding returns: `m`-step walks back to the origin, otherwise distinct.
pub fn count_returns(
    spec: &LatticeSpec,
    m: usize,
    cfg: &EngineConfig,
) -> Result<BigUint, WalkError> {
    if m < 2 {
        return Err(WalkError::Precondition("returns need m >= 2".into()));
    }
    let steps = step_set(spec)?;
    let out = search(
        spec,
        m - 1,
        Mode::Saw,
        false,
        false,
        Some((steps, spec.origin(), 1)),
        cfg,
    )?;
    Ok(big(out.tally.hits))
}

/// Number of self-avoiding polygons `q_{2n}` for `m = 2n >= 4`.
pub fn count_polygons(
    spec: &LatticeSpec,
    m: usize,
    cfg: &EngineConfig,
) -> Result<BigUint, WalkError> {
    if !spec.is_nearest() {
        return Err(WalkError::Precondition(
            "polygon counts need a nearest-neighbour lattice".into(),
        ));
    }
    if m < 4 || m % 2 == 1 {
        return Err(WalkError::Precondition(
            "polygon length must be even and at least 4".into(),
        ));
    }
    let c = count_saws_to(spec, m - 1, &spec.unit(0), cfg)?;
    let numerator = c * spec.degree();
    let denominator = 2 * m as u64;
    if (&numerator % denominator) != BigUint::zero() {
        return Err(WalkError::Divisibility {
            numerator: numerator.to_string(),
            denominator,
        });
    }
    Ok(numerator / denominator)
}

/// The conventional value `q_2 = 1`; not a count.
pub const Q2_CONVENTION: u32 = 1;

pub fn check_lambda(lambda: &BigRational) -> Result<(), WalkError> {
    if lambda.is_negative() || lambda > &BigRational::one() {
        return Err(WalkError::Lambda(lambda.to_string()));
    }
    Ok(())
}

/// Parses an exact `p/q` or integer; decimal and exponent forms are rejected.
pub fn parse_lambda(s: &str) -> Result<BigRational, WalkError> {
    let s = s.trim();
    if s.contains(['.', 'e', 'E']) {
        return Err(WalkError::Lambda(format!(
            "{s} (write it as an exact fraction p/q)"
        )));
    }
    let r: BigRational = s.parse().map_err(|_| WalkError::Lambda(s.to_string()))?;
    check_lambda(&r)?;
    Ok(r)
}

/// Evaluates `sum_p counts[p] * base^p`.
pub fn weight_polynomial(counts: &[BigUint], base: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in counts.iter().rev() {
        acc = acc * base + BigRational::from_integer(BigInt::from(c.clone()));
    }
    acc
}

/// Walk counts by length and number of coincident pairs `s < t`, `ω(s) = ω(t)`.
pub struct PairTally {
    pub totals: Vec<Vec<BigUint>>,
    pub by_endpoint: Vec<BTreeMap<Point, Vec<BigUint>>>,
}

struct PairSearch<'a> {
    geo: &'a Geometry,
    n: usize,
    endpoints: bool,
    budget: u64,
    nodes: &'a AtomicU64,
    abort: &'a AtomicBool,
}

type PairCells = HashMap<(usize, usize, u32), u64>;

impl<'a> PairSearch<'a> {
    fn go(
        &self,
        visits: &mut [u16],
        k: usize,
        pos: usize,
        pairs: u32,
        acc: &mut (Vec<Vec<u64>>, PairCells, u64),
    ) {
        acc.2 += 1;
        if acc.2 % FLUSH == 0 {
            let total = self.nodes.fetch_add(FLUSH, Ordering::Relaxed) + FLUSH;
            if total > self.budget {
                self.abort.store(true, Ordering::Relaxed);
            }
        }
        if self.abort.load(Ordering::Relaxed) {
            return;
        }
        acc.0[k][pairs as usize] += 1;
        if self.endpoints {
            *acc.1.entry((k, pos, pairs)).or_insert(0) += 1;
        }
        if k == self.n {
            return;
        }
        for &off in &self.geo.offsets {
            let next = (pos as isize + off) as usize;
            let extra = visits[next] as u32;
            visits[next] += 1;
            self.go(visits, k + 1, next, pairs + extra, acc);
            visits[next] -= 1;
        }
    }
}

/// Enumerates all `|Ω|^k` walks for `k <= n`, tallying coincident pairs.
pub fn count_walk_pairs(
    spec: &LatticeSpec,
    n: usize,
    endpoints: bool,
    cfg: &EngineConfig,
) -> Result<PairTally, WalkError> {
    let geo = Geometry::new(spec, n)?;
    let nodes = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let ps = PairSearch {
        geo: &geo,
        n,
        endpoints,
        budget: cfg.node_budget.unwrap_or(u64::MAX),
        nodes: &nodes,
        abort: &abort,
    };
    let max_pairs = n * (n + 1) / 2 + 1;
    let origin = geo.index(&spec.origin());
    let empty = || (vec![vec![0u64; max_pairs]; n + 1], PairCells::new(), 0u64);
    let mut root = empty();
    root.0[0][0] = 1;
    if endpoints {
        root.1.insert((0, origin, 0), 1);
    }
    let merge = |mut a: (Vec<Vec<u64>>, PairCells, u64), b: (Vec<Vec<u64>>, PairCells, u64)| {
        for (x, y) in a.0.iter_mut().zip(&b.0) {
            for (u, v) in x.iter_mut().zip(y) {
                *u += v;
            }
        }
        for (key, v) in b.1 {
            *a.1.entry(key).or_insert(0) += v;
        }
        a
    };
    let first: Vec<usize> = if n == 0 {
        Vec::new()
    } else {
        (0..geo.offsets.len()).collect()
    };
    let acc = cfg.run(|| {
        first
            .par_iter()
            .map(|&s| {
                let mut visits = vec![0u16; geo.volume()];
                visits[origin] = 1;
                let next = (origin as isize + geo.offsets[s]) as usize;
                visits[next] += 1;
                let mut acc = empty();
                ps.go(&mut visits, 1, next, 0, &mut acc);
                acc
            })
            .reduce(empty, merge)
    });
    if abort.load(Ordering::Relaxed) {
        return Err(WalkError::Budget(ps.budget));
    }
    let acc = merge(root, acc);
    let totals = acc
        .0
        .iter()
        .map(|row| trim(row.iter().map(|&c| BigUint::from(c)).collect()))
        .collect();
    let mut by_endpoint = vec![BTreeMap::new(); if endpoints { n + 1 } else { 0 }];
    for ((k, pos, p), c) in acc.1 {
        let v: &mut Vec<BigUint> = by_endpoint[k].entry(geo.point(pos)).or_default();
        if v.len() <= p as usize {
            v.resize(p as usize + 1, BigUint::zero());
        }
        v[p as usize] += c;
    }
    Ok(PairTally {
        totals,
        by_endpoint,
    })
}

fn trim(mut v: Vec<BigUint>) -> Vec<BigUint> {
    while v.len() > 1 && v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

/// λ-weighted walk counts: every walk weighted by `(1 - λ)^{#coincident pairs}`.
pub fn count_walks(
    spec: &LatticeSpec,
    n: usize,
    lambda: &BigRational,
    endpoints: bool,
    cfg: &EngineConfig,
) -> Result<CountTable<BigRational>, WalkError> {
    check_lambda(lambda)?;
    let to_rat = |c: &BigUint| BigRational::from_integer(BigInt::from(c.clone()));
    if lambda.is_one() {
        let t = count_saws(spec, n, endpoints, cfg)?;
        return Ok(CountTable {
            spec: *spec,
            quantity: t.quantity,
            lambda: Some(lambda.clone()),
            totals: t.totals.iter().map(to_rat).collect(),
            by_endpoint: t
                .by_endpoint
                .iter()
                .map(|m| m.iter().map(|(k, v)| (k.clone(), to_rat(v))).collect())
                .collect(),
            by_span: Vec::new(),
        });
    }
    let base = BigRational::one() - lambda;
    let pt = count_walk_pairs(spec, n, endpoints, cfg)?;
    Ok(CountTable {
        spec: *spec,
        quantity: if endpoints { Quantity::CNx } else { Quantity::CN },
        lambda: Some(lambda.clone()),
        totals: pt
            .totals
            .iter()
            .map(|c| weight_polynomial(c, &base))
            .collect(),
        by_endpoint: pt
            .by_endpoint
            .iter()
            .map(|m| {
                m.iter()
                    .map(|(k, c)| (k.clone(), weight_polynomial(c, &base)))
                    .collect()
            })
            .collect(),
        by_span: Vec::new(),
    })
}

/// λ-weighted counts of walks from `x` to `y` with every site in `domain`.
pub fn count_restricted(
    spec: &LatticeSpec,
    n: usize,
    lambda: &BigRational,
    domain: &BTreeSet<Point>,
    x: &[i32],
    y: &[i32],
    cfg: &EngineConfig,
) -> Result<Vec<BigRational>, WalkError> {
    check_lambda(lambda)?;
    if !domain.contains(x) {
        return Err(WalkError::Precondition("start site must lie in the domain".into()));
    }
    let steps = step_set(spec)?;
    let mut pairs: Vec<Vec<BigUint>> = vec![Vec::new(); n + 1];
    let mut visits: HashMap<Point, u32> = HashMap::from([(x.to_vec(), 1)]);
    let budget = cfg.node_budget.unwrap_or(u64::MAX);
    let mut nodes = 0u64;
    #[allow(clippy::too_many_arguments)]
    fn go(
        steps: &[Point],
        domain: &BTreeSet<Point>,
        y: &[i32],
        n: usize,
        cur: &mut Point,
        k: usize,
        p: usize,
        visits: &mut HashMap<Point, u32>,
        pairs: &mut Vec<Vec<BigUint>>,
        nodes: &mut u64,
        budget: u64,
    ) -> bool {
        *nodes += 1;
        if *nodes > budget {
            return false;
        }
        if cur.as_slice() == y {
            let row = &mut pairs[k];
            if row.len() <= p {
                row.resize(p + 1, BigUint::zero());
            }
            row[p] += 1u32;
        }
        if k == n {
            return true;
        }
        for s in steps {
            for (c, d) in cur.iter_mut().zip(s) {
                *c += d;
            }
            if domain.contains(cur.as_slice()) {
                let v = visits.entry(cur.clone()).or_insert(0);
                let extra = *v as usize;
                *v += 1;
                let ok = go(
                    steps, domain, y, n, cur, k + 1, p + extra, visits, pairs, nodes, budget,
                );
                *visits.get_mut(cur.as_slice()).unwrap() -= 1;
                if !ok {
                    return false;
                }
            }
            for (c, d) in cur.iter_mut().zip(s) {
                *c -= d;
            }
        }
        true
    }
    let mut cur = x.to_vec();
    let ok = go(
        &steps,
        domain,
        y,
        n,
        &mut cur,
        0,
        0,
        &mut visits,
        &mut pairs,
        &mut nodes,
        budget,
    );
    if !ok {
        return Err(WalkError::Budget(budget));
    }
    let base = BigRational::one() - lambda;
    Ok(pairs.iter().map(|c| weight_polynomial(c, &base)).collect())
}

/// Explicit list of all `n`-step self-avoiding walks, optionally half-space only.
pub fn list_saws(spec: &LatticeSpec, n: usize, half_space: bool) -> Result<Vec<Vec<Point>>, WalkError> {
    let steps = step_set(spec)?;
    let mut out = Vec::new();
    let mut path = vec![spec.origin()];
    fn go(steps: &[Point], n: usize, half: bool, path: &mut Vec<Point>, out: &mut Vec<Vec<Point>>) {
        if path.len() == n + 1 {
            out.push(path.clone());
            return;
        }
        for s in steps {
            let next: Point = path.last().unwrap().iter().zip(s).map(|(a, b)| a + b).collect();
            if (half && next[0] <= 0) || path.contains(&next) {
                continue;
            }
            path.push(next);
            go(steps, n, half, path, out);
            path.pop();
        }
    }
    go(&steps, n, half_space, &mut path, &mut out);
    Ok(out)
}

pub fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z2: [u64; 13] = [
        1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932,
    ];

    fn z(d: u32) -> LatticeSpec {
        LatticeSpec::nearest(d)
    }

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    #[test]
    fn square_lattice_counts() {
        let t = count_saws(&z(2), 12, false, &cfg()).unwrap();
        let got: Vec<u64> = t.totals.iter().map(|c| c.to_u64().unwrap()).collect();
        assert_eq!(got, Z2);
    }

    #[test]
    fn endpoint_tables_sum_to_totals() {
        for spec in [z(2), z(3), LatticeSpec::ZdSpreadOut { dim: 2, range: 1 }] {
            let t = count_saws(&spec, 6, true, &cfg()).unwrap();
            let plain = count_saws(&spec, 6, false, &cfg()).unwrap();
            assert_eq!(t.totals, plain.totals);
            for (k, m) in t.by_endpoint.iter().enumerate() {
                let s: BigUint = m.values().sum();
                assert_eq!(s, t.totals[k]);
            }
        }
    }

    #[test]
    fn one_dimension() {
        let t = count_saws(&z(1), 5, true, &cfg()).unwrap();
        assert!(t.totals[1..].iter().all(|c| c == &BigUint::from(2u32)));
        assert_eq!(t.at(3, &[3]), Some(&BigUint::from(1u32)));
    }

    #[test]
    fn bridges_and_half_space_small() {
        let hb = count_half_space_and_bridges(&z(2), 3, false, &cfg()).unwrap();
        let h: Vec<u64> = hb.half_space.totals.iter().map(|c| c.to_u64().unwrap()).collect();
        let b: Vec<u64> = hb.bridges.totals.iter().map(|c| c.to_u64().unwrap()).collect();
        assert_eq!(h, vec![1, 1, 3, 7]);
        assert_eq!(b[..3], [1, 1, 3]);
    }

    #[test]
    fn span_tables_agree_with_totals() {
        for spec in [z(2), z(3)] {
            let plain = count_half_space_and_bridges(&spec, 8, false, &cfg()).unwrap();
            let full = count_half_space_and_bridges(&spec, 8, true, &cfg()).unwrap();
            assert_eq!(plain.bridges.totals, full.bridges.totals);
            assert_eq!(plain.half_space.totals, full.half_space.totals);
            for k in 0..=8 {
                let a: BigUint = plain.bridges.by_span[k].values().sum();
                let b: BigUint = full.bridges.by_span[k].values().sum();
                let c: BigUint = full.bridges.by_endpoint[k].values().sum();
                assert_eq!(a, plain.bridges.totals[k]);
                assert_eq!(b, a);
                assert_eq!(c, a);
                assert_eq!(plain.bridges.by_span[k], full.bridges.by_span[k]);
            }
        }
    }

    #[test]
    fn returns_and_polygons() {
        let r = |m| count_returns(&z(2), m, &cfg()).unwrap().to_u64().unwrap();
        assert_eq!((r(2), r(3), r(4)), (4, 0, 8));
        let q = |m| count_polygons(&z(2), m, &cfg()).unwrap().to_u64().unwrap();
        assert_eq!((q(4), q(6), q(8), q(10)), (1, 2, 7, 28));
        assert!(count_polygons(&z(2), 2, &cfg()).is_err());
    }

    #[test]
    fn target_counts_match_endpoint_table() {
        let t = count_saws(&z(2), 7, true, &cfg()).unwrap();
        for target in [[1, 0], [2, 1], [0, 3]] {
            let c = count_saws_to(&z(2), 7, &target, &cfg()).unwrap();
            assert_eq!(Some(&c), t.at(7, &target).or(Some(&BigUint::zero())));
        }
    }

    #[test]
    fn lambda_interpolates() {
        let zero = BigRational::zero();
        let t = count_walks(&z(2), 5, &zero, false, &cfg()).unwrap();
        for (k, c) in t.totals.iter().enumerate() {
            assert_eq!(c, &BigRational::from_integer(BigInt::from(4u32.pow(k as u32))));
        }
        let half: BigRational = "1/2".parse().unwrap();
        let w = count_walks(&z(2), 5, &half, true, &cfg()).unwrap();
        let one = count_walks(&z(2), 5, &BigRational::one(), false, &cfg()).unwrap();
        for k in 0..=5 {
            assert!(one.totals[k] <= w.totals[k] && w.totals[k] <= t.totals[k]);
            let s: BigRational = w.by_endpoint[k].values().cloned().sum();
            assert_eq!(s, w.totals[k]);
        }
        // 0 -> e1 -> 0 has one coincident pair.
        assert_eq!(w.totals[2], "14".parse::<BigRational>().unwrap());
    }

    #[test]
    fn lambda_parsing() {
        assert!(parse_lambda("1/3").is_ok());
        assert!(parse_lambda("0.5").is_err());
        assert!(parse_lambda("3/2").is_err());
        assert!(parse_lambda("-1/2").is_err());
    }

    #[test]
    fn restricted_counts() {
        let spec = z(2);
        let one = BigRational::one();
        let d0: BTreeSet<Point> = [vec![0, 0]].into();
        let c = count_restricted(&spec, 3, &one, &d0, &[0, 0], &[0, 0], &cfg()).unwrap();
        assert_eq!(c[0], one);
        assert!(c[1..].iter().all(|v| v.is_zero()));
        let boxed: BTreeSet<Point> = (-1..=1)
            .flat_map(|a| (-1..=1).map(move |b| vec![a, b]))
            .collect();
        let r = count_restricted(&spec, 4, &one, &boxed, &[0, 0], &[1, 1], &cfg()).unwrap();
        assert_eq!(r[2], BigRational::from_integer(2.into()));
        assert!(count_restricted(&spec, 1, &one, &d0, &[5, 5], &[0, 0], &cfg()).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = EngineConfig {
            node_budget: Some(50_000),
            ..Default::default()
        };
        assert_eq!(
            count_saws(&z(2), 14, false, &cfg).unwrap_err(),
            WalkError::Budget(50_000)
        );
        assert!(count_saws(&z(2), 5, false, &cfg).is_ok());
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let a = count_saws(&z(3), 7, true, &EngineConfig::with_workers(1)).unwrap();
        let b = count_saws(&z(3), 7, true, &EngineConfig::with_workers(3)).unwrap();
        let c = count_saws(
            &z(3),
            7,
            true,
            &EngineConfig {
                workers: 2,
                split_depth: Some(1),
                node_budget: None,
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
