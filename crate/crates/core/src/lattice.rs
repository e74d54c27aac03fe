//! Lattices, step sets and hexagonal mid-edge geometry.
//!
//! Hexagonal vertices use brick-wall coordinates `(col, row)`. A vertex is of
//! type `L` when `col + row` is even and `R` otherwise. Both types join to
//! `(col, row ± 1)`; an `L` vertex also joins to `(col - 1, row)` and an `R`
//! vertex to `(col + 1, row)`. Edge directions are integers mod 6 in units of
//! π/3: an `L` vertex leaves upward along 1, leftward along 3, downward along
//! 5; an `R` vertex rightward along 0, upward along 2, downward along 4.
//!
//! Strip `S_{T,L}` (normative definition): columns `0..T`, column `j` holds
//! rows `|r| <= 2L - 1 + j`. Its boundary splits into
//! * `alpha`: left edges of the `L` vertices in column 0,
//! * `beta`: right edges of the `R` vertices in column `T - 1`,
//! * `eps`: upward exits of the topmost vertex of each column,
//! * `eps_bar`: downward exits of the bottommost vertex of each column.
//!
//! The start mid-edge `a` is the left edge of `L(0, 0)`; a walk enters the
//! domain through it moving in direction 0.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("unrecognised lattice spec `{0}`")]
    Parse(String),
    #[error("dimension and range must be positive")]
    Degenerate,
    #[error("operation requires a Z^d lattice")]
    NotZd,
    #[error("vertex is not incident to the mid-edge")]
    NotIncident,
}

pub type Point = Vec<i32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LatticeSpec {
    ZdNearest { dim: u32 },
    ZdSpreadOut { dim: u32, range: u32 },
    Hexagonal,
}

impl LatticeSpec {
    pub fn nearest(dim: u32) -> Self {
        LatticeSpec::ZdNearest { dim }
    }

    pub fn dim(&self) -> u32 {
        match *self {
            LatticeSpec::ZdNearest { dim } | LatticeSpec::ZdSpreadOut { dim, .. } => dim,
            LatticeSpec::Hexagonal => 2,
        }
    }

    /// Largest sup-norm of a single step.
    pub fn range(&self) -> u32 {
        match *self {
            LatticeSpec::ZdSpreadOut { range, .. } => range,
            _ => 1,
        }
    }

    pub fn is_zd(&self) -> bool {
        !matches!(self, LatticeSpec::Hexagonal)
    }

    pub fn is_nearest(&self) -> bool {
        matches!(self, LatticeSpec::ZdNearest { .. })
    }

    /// Coordination number |Ω|.
    pub fn degree(&self) -> usize {
        match *self {
            LatticeSpec::ZdNearest { dim } => 2 * dim as usize,
            LatticeSpec::ZdSpreadOut { dim, range } => {
                (2 * range as usize + 1).pow(dim) - 1
            }
            LatticeSpec::Hexagonal => 3,
        }
    }

    pub fn origin(&self) -> Point {
        vec![0; self.dim() as usize]
    }

    pub fn unit(&self, axis: usize) -> Point {
        let mut p = self.origin();
        p[axis] = 1;
        p
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeSpec::ZdNearest { dim } => write!(f, "z{dim}"),
            LatticeSpec::ZdSpreadOut { dim, range } => write!(f, "zd{dim}-so{range}"),
            LatticeSpec::Hexagonal => write!(f, "hex"),
        }
    }
}

impl FromStr for LatticeSpec {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if s == "hex" {
            return Ok(LatticeSpec::Hexagonal);
        }
        let bad = || LatticeError::Parse(s.clone());
        let body = s
            .strip_prefix("zd")
            .or_else(|| s.strip_prefix('z'))
            .ok_or_else(bad)?;
        let (dim, range) = match body.split_once("-so") {
            Some((d, l)) => (d, Some(l)),
            None => (body, None),
        };
        let dim: u32 = dim.parse().map_err(|_| bad())?;
        if dim == 0 {
            return Err(LatticeError::Degenerate);
        }
        match range {
            None => Ok(LatticeSpec::ZdNearest { dim }),
            Some(l) => {
                let range: u32 = l.parse().map_err(|_| bad())?;
                if range == 0 {
                    return Err(LatticeError::Degenerate);
                }
                Ok(LatticeSpec::ZdSpreadOut { dim, range })
            }
        }
    }
}

/// All steps of a Z^d lattice in lexicographic order.
pub fn step_set(spec: &LatticeSpec) -> Result<Vec<Point>, LatticeError> {
    let (dim, range) = match *spec {
        LatticeSpec::ZdNearest { dim } => (dim as usize, 1i32),
        LatticeSpec::ZdSpreadOut { dim, range } => (dim as usize, range as i32),
        LatticeSpec::Hexagonal => return Err(LatticeError::NotZd),
    };
    let mut out = Vec::new();
    let mut cur = vec![-range; dim];
    loop {
        let sup = cur.iter().map(|c| c.abs()).max().unwrap_or(0);
        let l1: i32 = cur.iter().map(|c| c.abs()).sum();
        let keep = match spec {
            LatticeSpec::ZdNearest { .. } => l1 == 1,
            _ => sup > 0,
        };
        if keep {
            out.push(cur.clone());
        }
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < range {
                cur[i] += 1;
                break;
            }
            cur[i] = -range;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sublattice {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HexVertex {
    pub col: i32,
    pub row: i32,
}

impl HexVertex {
    pub const fn new(col: i32, row: i32) -> Self {
        HexVertex { col, row }
    }

    pub fn sublattice(&self) -> Sublattice {
        if (self.col + self.row).rem_euclid(2) == 0 {
            Sublattice::L
        } else {
            Sublattice::R
        }
    }

    /// The three neighbours with the direction (mod 6) of the edge leading there.
    pub fn neighbours(&self) -> [(HexVertex, u8); 3] {
        let (c, r) = (self.col, self.row);
        match self.sublattice() {
            Sublattice::L => [
                (HexVertex::new(c, r + 1), 1),
                (HexVertex::new(c - 1, r), 3),
                (HexVertex::new(c, r - 1), 5),
            ],
            Sublattice::R => [
                (HexVertex::new(c + 1, r), 0),
                (HexVertex::new(c, r + 1), 2),
                (HexVertex::new(c, r - 1), 4),
            ],
        }
    }

    pub fn neighbour(&self, dir: u8) -> Option<HexVertex> {
        self.neighbours()
            .into_iter()
            .find(|&(_, d)| d == dir % 6)
            .map(|(v, _)| v)
    }

    /// Position in the plane; edges have unit length.
    pub fn position(&self) -> (f64, f64) {
        let shift = match self.sublattice() {
            Sublattice::L => 0.5,
            Sublattice::R => 1.0,
        };
        (
            1.5 * self.col as f64 + shift,
            self.row as f64 * 3f64.sqrt() / 2.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Orientation {
    Horizontal,
    UpSlant,
    DownSlant,
}

/// A hexagonal edge, stored by its `L` endpoint and the direction leaving it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MidEdge {
    pub left: HexVertex,
    pub dir: u8,
}

impl MidEdge {
    pub fn from_vertex(v: HexVertex, dir: u8) -> Self {
        let dir = dir % 6;
        match v.sublattice() {
            Sublattice::L => MidEdge { left: v, dir },
            Sublattice::R => {
                let other = v.neighbour(dir).expect("direction not available at vertex");
                MidEdge {
                    left: other,
                    dir: (dir + 3) % 6,
                }
            }
        }
    }

    pub fn endpoints(&self) -> (HexVertex, HexVertex) {
        (self.left, self.left.neighbour(self.dir).expect("valid edge"))
    }

    pub fn orientation(&self) -> Orientation {
        match self.dir {
            3 => Orientation::Horizontal,
            1 => Orientation::UpSlant,
            _ => Orientation::DownSlant,
        }
    }

    pub fn is_incident(&self, v: HexVertex) -> bool {
        let (a, b) = self.endpoints();
        a == v || b == v
    }

    pub fn other(&self, v: HexVertex) -> Option<HexVertex> {
        let (a, b) = self.endpoints();
        if a == v {
            Some(b)
        } else if b == v {
            Some(a)
        } else {
            None
        }
    }

    /// Direction pointing from `v` along this edge.
    pub fn direction_from(&self, v: HexVertex) -> Option<u8> {
        let (a, _) = self.endpoints();
        if a == v {
            Some(self.dir)
        } else if self.is_incident(v) {
            Some((self.dir + 3) % 6)
        } else {
            None
        }
    }
}

/// The two non-backtracking exits when a walk reaches `via` along `current`,
/// each with its turn sign (+1 left, -1 right).
pub fn hex_continuations(
    current: MidEdge,
    via: HexVertex,
) -> Result<[(MidEdge, i8); 2], LatticeError> {
    let towards_via = current.direction_from(via).ok_or(LatticeError::NotIncident)?;
    let heading = (towards_via + 3) % 6;
    let mut out = [(current, 0i8); 2];
    let mut k = 0;
    for (_, d) in via.neighbours() {
        if d == towards_via {
            continue;
        }
        let turn = if (d + 6 - heading) % 6 == 1 { 1 } else { -1 };
        out[k] = (MidEdge::from_vertex(via, d), turn);
        k += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HexDomain {
    pub vertices: BTreeSet<HexVertex>,
}

impl HexDomain {
    pub fn new(vertices: impl IntoIterator<Item = HexVertex>) -> Self {
        HexDomain {
            vertices: vertices.into_iter().collect(),
        }
    }

    /// The six vertices around the hexagon whose lower-left vertex is `R(col, row)`.
    pub fn hexagon(col: i32, row: i32) -> Self {
        assert_eq!(HexVertex::new(col, row).sublattice(), Sublattice::R);
        HexDomain::new([
            HexVertex::new(col, row),
            HexVertex::new(col, row + 1),
            HexVertex::new(col, row + 2),
            HexVertex::new(col + 1, row),
            HexVertex::new(col + 1, row + 1),
            HexVertex::new(col + 1, row + 2),
        ])
    }

    pub fn contains(&self, v: &HexVertex) -> bool {
        self.vertices.contains(v)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn mid_edges(&self) -> BTreeSet<MidEdge> {
        self.vertices
            .iter()
            .flat_map(|v| v.neighbours().map(|(_, d)| MidEdge::from_vertex(*v, d)))
            .collect()
    }

    pub fn boundary(&self) -> BTreeSet<MidEdge> {
        self.mid_edges()
            .into_iter()
            .filter(|e| {
                let (a, b) = e.endpoints();
                self.contains(&a) != self.contains(&b)
            })
            .collect()
    }

    /// The endpoint of a boundary mid-edge lying inside the domain.
    pub fn inner_endpoint(&self, e: &MidEdge) -> Option<HexVertex> {
        let (a, b) = e.endpoints();
        match (self.contains(&a), self.contains(&b)) {
            (true, false) => Some(a),
            (false, true) => Some(b),
            _ => None,
        }
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.iter().next() else {
            return true;
        };
        flood(start, |v| self.contains(v)).len() == self.len()
    }

    /// Connected with connected complement, checked by flood fill in a padded box.
    pub fn is_simply_connected(&self) -> bool {
        if !self.is_connected() {
            return false;
        }
        if self.is_empty() {
            return true;
        }
        let c0 = self.vertices.iter().map(|v| v.col).min().unwrap() - 2;
        let c1 = self.vertices.iter().map(|v| v.col).max().unwrap() + 2;
        let r0 = self.vertices.iter().map(|v| v.row).min().unwrap() - 2;
        let r1 = self.vertices.iter().map(|v| v.row).max().unwrap() + 2;
        let inside_box = |v: &HexVertex| v.col >= c0 && v.col <= c1 && v.row >= r0 && v.row <= r1;
        let outside = |v: &HexVertex| inside_box(v) && !self.contains(v);
        let reached = flood(HexVertex::new(c0, r0), outside);
        let total = ((c1 - c0 + 1) * (r1 - r0 + 1)) as usize - self.len();
        reached.len() == total
    }
}

fn flood(start: HexVertex, allowed: impl Fn(&HexVertex) -> bool) -> BTreeSet<HexVertex> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for (w, _) in v.neighbours() {
            if allowed(&w) && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripDomain {
    pub t: u32,
    pub l: u32,
    pub domain: HexDomain,
    pub alpha: Vec<MidEdge>,
    pub beta: Vec<MidEdge>,
    pub eps: Vec<MidEdge>,
    pub eps_bar: Vec<MidEdge>,
    pub start: MidEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryPart {
    Alpha,
    Beta,
    Eps,
    EpsBar,
}

impl StripDomain {
    pub fn part_of(&self, e: &MidEdge) -> Option<BoundaryPart> {
        if self.alpha.contains(e) {
            Some(BoundaryPart::Alpha)
        } else if self.beta.contains(e) {
            Some(BoundaryPart::Beta)
        } else if self.eps.contains(e) {
            Some(BoundaryPart::Eps)
        } else if self.eps_bar.contains(e) {
            Some(BoundaryPart::EpsBar)
        } else {
            None
        }
    }
}

pub fn strip_start() -> MidEdge {
    MidEdge::from_vertex(HexVertex::new(0, 0), 3)
}

pub fn strip_domain(t: u32, l: u32) -> StripDomain {
    assert!(t >= 1 && l >= 1, "strip needs T, L >= 1");
    let (t, l) = (t as i32, l as i32);
    let height = |j: i32| 2 * l - 1 + j;
    let mut vertices = BTreeSet::new();
    for j in 0..t {
        for r in -height(j)..=height(j) {
            vertices.insert(HexVertex::new(j, r));
        }
    }
    let domain = HexDomain { vertices };
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut eps = Vec::new();
    let mut eps_bar = Vec::new();
    for e in domain.boundary() {
        let v = domain.inner_endpoint(&e).expect("boundary edge");
        match e.direction_from(v).expect("incident") {
            3 => alpha.push(e),
            0 => beta.push(e),
            1 | 2 => eps.push(e),
            _ => eps_bar.push(e),
        }
    }
    StripDomain {
        t: t as u32,
        l: l as u32,
        domain,
        alpha,
        beta,
        eps,
        eps_bar,
        start: strip_start(),
    }
}
