//! Finitely presented dynamical systems.
//!
//! A [`SystemPresentation`] is an ordered list of disjoint pieces: explicit
//! successor tables, lazily stepped parametric cycles, and sets of fixed
//! points. Products pair pieces up componentwise, and a presentation can be
//! quotiented by collapsing finitely many finite invariant sets to points.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{
    fmt_rational, int, rational_str, sqrt_enclose, CylPoint, Enclosure, Rational,
};

/// A point of a presented system.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    /// A point of the cylinder.
    Cyl(CylPoint),
    /// An abstract point; distinct atoms are at distance 1.
    Atom(u64),
    /// A point of a product system.
    Pair(Box<Point>, Box<Point>),
    /// A collapsed class of a quotient system.
    Class(usize),
}

impl Point {
    pub fn pair(a: Point, b: Point) -> Point {
        Point::Pair(Box::new(a), Box::new(b))
    }

    pub fn as_cyl(&self) -> Option<&CylPoint> {
        match self {
            Point::Cyl(c) => Some(c),
            _ => None,
        }
    }
}

impl From<CylPoint> for Point {
    fn from(c: CylPoint) -> Self {
        Point::Cyl(c)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Cyl(c) => write!(f, "{c}"),
            Point::Atom(n) => write!(f, "#{n}"),
            Point::Pair(a, b) => write!(f, "<{a}; {b}>"),
            Point::Class(k) => write!(f, "[{k}]"),
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_point(s: &str) -> Result<(Point, &str)> {
    let err = || Error::ParsePoint(s.to_string());
    let s = s.trim_start();
    if let Some(rest) = s.strip_prefix('#') {
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        let n = rest[..end].parse().map_err(|_| err())?;
        Ok((Point::Atom(n), &rest[end..]))
    } else if let Some(rest) = s.strip_prefix('[') {
        let end = rest.find(']').ok_or_else(err)?;
        let k = rest[..end].trim().parse().map_err(|_| err())?;
        Ok((Point::Class(k), &rest[end + 1..]))
    } else if s.starts_with('(') {
        let end = s.find(')').ok_or_else(err)?;
        let c: CylPoint = s[..=end].parse()?;
        Ok((Point::Cyl(c), &s[end + 1..]))
    } else if let Some(rest) = s.strip_prefix('<') {
        let (a, rest) = parse_point(rest)?;
        let rest = rest.trim_start().strip_prefix(';').ok_or_else(err)?;
        let (b, rest) = parse_point(rest)?;
        let rest = rest.trim_start().strip_prefix('>').ok_or_else(err)?;
        Ok((Point::pair(a, b), rest))
    } else {
        Err(err())
    }
}

impl FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, rest) = parse_point(s)?;
        if !rest.trim().is_empty() {
            return Err(Error::ParsePoint(s.to_string()));
        }
        Ok(p)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Squared distance between base points. Pairs use the maximum metric.
pub fn point_dist_sq(a: &Point, b: &Point) -> Result<Rational> {
    match (a, b) {
        (Point::Cyl(p), Point::Cyl(q)) => Ok(crate::numeric::dist_sq(p, q)),
        (Point::Atom(p), Point::Atom(q)) => Ok(if p == q { int(0) } else { int(1) }),
        (Point::Pair(a1, a2), Point::Pair(b1, b2)) => {
            let d1 = point_dist_sq(a1, b1)?;
            let d2 = point_dist_sq(a2, b2)?;
            Ok(d1.max(d2))
        }
        _ => Err(Error::InvalidSystem(format!(
            "no base metric between {a} and {b}"
        ))),
    }
}

/// A parametric piece that is stepped without enumerating it.
pub trait LazyPiece: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn contains(&self, p: &Point) -> bool;
    fn successor(&self, p: &Point) -> Result<Point>;
    /// `T^n p`, computed without iterating when the piece allows it.
    fn jump(&self, p: &Point, n: &BigUint) -> Result<Point>;
    /// Declared common period of every point of the piece.
    fn period(&self) -> BigUint;
    fn cardinality(&self) -> BigUint;
    /// All points in cycle order, when there are at most `limit` of them.
    fn enumerate(&self, limit: usize) -> Option<Vec<Point>>;
}

/// Explicit successor map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitTable {
    pub name: String,
    pub successor: BTreeMap<Point, Point>,
}

impl OrbitTable {
    pub fn new(name: impl Into<String>, successor: BTreeMap<Point, Point>) -> Self {
        OrbitTable {
            name: name.into(),
            successor,
        }
    }

    /// A single cycle `p0 -> p1 -> ... -> p0`.
    pub fn cycle(name: impl Into<String>, points: Vec<Point>) -> Self {
        let n = points.len();
        let successor = (0..n)
            .map(|k| (points[k].clone(), points[(k + 1) % n].clone()))
            .collect();
        OrbitTable::new(name, successor)
    }
}

/// Points on which the map is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixedSet {
    Points(BTreeSet<Point>),
    /// The segment `{x} x [-1, 1]` of the cylinder, closed up by the identification.
    VerticalCircle { x: Rational },
}

impl FixedSet {
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            FixedSet::Points(s) => s.contains(p),
            FixedSet::VerticalCircle { x } => matches!(p, Point::Cyl(c) if c.x() == x),
        }
    }

    /// `n` evenly spaced circle points `(x, -1 + 2(j+1)/n)`, or the explicit points.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        match self {
            FixedSet::Points(s) => s.iter().cloned().collect(),
            FixedSet::VerticalCircle { x } => (0..n as i64)
                .map(|j| {
                    let y = int(-1) + Rational::new((2 * (j + 1)).into(), (n as i64).into());
                    Point::Cyl(CylPoint::new(x.clone(), y).expect("sample stays on the circle"))
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Piece {
    Table(OrbitTable),
    Lazy(Arc<dyn LazyPiece>),
    Fixed(FixedSet),
    Product(Box<Piece>, Box<Piece>),
}

impl Piece {
    pub fn name(&self) -> String {
        match self {
            Piece::Table(t) => t.name.clone(),
            Piece::Lazy(l) => l.name(),
            Piece::Fixed(FixedSet::Points(_)) => "fixed".into(),
            Piece::Fixed(FixedSet::VerticalCircle { x }) => format!("circle x={}", fmt_rational(x)),
            Piece::Product(a, b) => format!("{} x {}", a.name(), b.name()),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Piece::Table(_) => "table",
            Piece::Lazy(_) => "lazy",
            Piece::Fixed(_) => "fixed",
            Piece::Product(..) => "product",
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Piece::Table(t) => t.successor.contains_key(p),
            Piece::Lazy(l) => l.contains(p),
            Piece::Fixed(f) => f.contains(p),
            Piece::Product(a, b) => match p {
                Point::Pair(x, y) => a.contains(x) && b.contains(y),
                _ => false,
            },
        }
    }

    fn successor(&self, p: &Point) -> Result<Point> {
        match self {
            Piece::Table(t) => t
                .successor
                .get(p)
                .cloned()
                .ok_or_else(|| Error::UnknownPoint(p.to_string())),
            Piece::Lazy(l) => l.successor(p),
            Piece::Fixed(_) => Ok(p.clone()),
            Piece::Product(a, b) => match p {
                Point::Pair(x, y) => Ok(Point::pair(a.successor(x)?, b.successor(y)?)),
                _ => Err(Error::UnknownPoint(p.to_string())),
            },
        }
    }

    /// Declared period shared by all points, when the piece has one.
    fn declared_period(&self) -> Option<BigUint> {
        match self {
            Piece::Table(_) => None,
            Piece::Lazy(l) => Some(l.period()),
            Piece::Fixed(_) => Some(BigUint::one()),
            Piece::Product(a, b) => Some(a.declared_period()?.lcm(&b.declared_period()?)),
        }
    }

    fn jump(&self, p: &Point, n: &BigUint) -> Result<Option<Point>> {
        match self {
            Piece::Lazy(l) => l.jump(p, n).map(Some),
            Piece::Fixed(_) => Ok(Some(p.clone())),
            Piece::Product(a, b) => match p {
                Point::Pair(x, y) => match (a.jump(x, n)?, b.jump(y, n)?) {
                    (Some(x), Some(y)) => Ok(Some(Point::pair(x, y))),
                    _ => Ok(None),
                },
                _ => Err(Error::UnknownPoint(p.to_string())),
            },
            Piece::Table(_) => Ok(None),
        }
    }

    fn enumerate(&self, limit: usize) -> Option<Vec<Point>> {
        match self {
            Piece::Table(t) => (t.successor.len() <= limit).then(|| t.successor.keys().cloned().collect()),
            Piece::Lazy(l) => l.enumerate(limit),
            Piece::Fixed(FixedSet::Points(s)) => (s.len() <= limit).then(|| s.iter().cloned().collect()),
            Piece::Fixed(FixedSet::VerticalCircle { .. }) => None,
            Piece::Product(a, b) => {
                let xs = a.enumerate(limit)?;
                let ys = b.enumerate(limit)?;
                if xs.len().saturating_mul(ys.len()) > limit {
                    return None;
                }
                Some(
                    xs.iter()
                        .flat_map(|x| ys.iter().map(move |y| Point::pair(x.clone(), y.clone())))
                        .collect(),
                )
            }
        }
    }

    fn sample(&self, circle_samples: usize, limit: usize) -> Option<Vec<Point>> {
        match self {
            Piece::Fixed(f) => Some(f.sample(circle_samples)),
            Piece::Product(a, b) => {
                let xs = a.sample(circle_samples, limit)?;
                let ys = b.sample(circle_samples, limit)?;
                if xs.len().saturating_mul(ys.len()) > limit {
                    return None;
                }
                Some(
                    xs.iter()
                        .flat_map(|x| ys.iter().map(move |y| Point::pair(x.clone(), y.clone())))
                        .collect(),
                )
            }
            _ => self.enumerate(limit),
        }
    }
}

/// Collapsed classes of a quotient and its chain metric.
#[derive(Clone, Debug)]
pub struct Collapse {
    base: Box<SystemPresentation>,
    classes: Vec<BTreeSet<Point>>,
    class_of: BTreeMap<Point, usize>,
    node_of: BTreeMap<Point, usize>,
    nodes: Vec<Point>,
    tol: Rational,
    // all-pairs shortest path over lower / upper bounds of the edge weights
    lo: Vec<Vec<Rational>>,
    hi: Vec<Vec<Rational>>,
}

impl Collapse {
    pub fn classes(&self) -> &[BTreeSet<Point>] {
        &self.classes
    }

    fn project(&self, p: Point) -> Point {
        match self.class_of.get(&p) {
            Some(&k) => Point::Class(k),
            None => p,
        }
    }

    fn representative<'a>(&'a self, p: &'a Point) -> Result<&'a Point> {
        match p {
            Point::Class(k) => self
                .classes
                .get(*k)
                .and_then(|c| c.iter().next())
                .ok_or_else(|| Error::UnknownPoint(p.to_string())),
            _ => Ok(p),
        }
    }

    fn distance(&self, a: &Point, b: &Point) -> Result<Enclosure> {
        let i = *self.node_of.get(a).ok_or_else(|| Error::UnknownPoint(a.to_string()))?;
        let j = *self.node_of.get(b).ok_or_else(|| Error::UnknownPoint(b.to_string()))?;
        Ok(Enclosure {
            lo: self.lo[i][j].clone(),
            hi: self.hi[i][j].clone(),
        })
    }
}

/// A finitely presented dynamical system.
#[derive(Clone, Debug)]
pub struct SystemPresentation {
    pieces: Vec<Piece>,
    collapse: Option<Arc<Collapse>>,
}

/// Global step ceiling; `DYNTOP_BUDGET_STEPS` overrides the default.
pub fn step_budget() -> u64 {
    std::env::var("DYNTOP_BUDGET_STEPS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(50_000_000)
}

const ENUMERATION_LIMIT: usize = 1 << 20;

impl SystemPresentation {
    /// Validates disjointness and closure on every enumerable table, fixed or product piece.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let sys = SystemPresentation {
            pieces,
            collapse: None,
        };
        for (k, piece) in sys.pieces.iter().enumerate() {
            if matches!(piece, Piece::Lazy(_)) {
                continue;
            }
            let Some(points) = piece.enumerate(ENUMERATION_LIMIT) else {
                continue;
            };
            for p in &points {
                for (j, other) in sys.pieces.iter().enumerate() {
                    if j != k && other.contains(p) {
                        return Err(Error::InvalidSystem(format!(
                            "pieces {k} and {j} share the point {p}"
                        )));
                    }
                }
                let q = piece.successor(p)?;
                if !sys.contains(&q) {
                    return Err(Error::InvalidSystem(format!(
                        "{p} maps to {q}, outside every piece"
                    )));
                }
            }
        }
        Ok(sys)
    }

    pub fn empty() -> Self {
        SystemPresentation {
            pieces: Vec::new(),
            collapse: None,
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn collapse(&self) -> Option<&Collapse> {
        self.collapse.as_deref()
    }

    pub fn piece_index(&self, p: &Point) -> Option<usize> {
        if let Some(c) = &self.collapse {
            return match p {
                Point::Class(k) => (*k < c.classes.len()).then_some(0),
                _ if c.class_of.contains_key(p) => None,
                _ => c.base.piece_index(p),
            };
        }
        self.pieces.iter().position(|piece| piece.contains(p))
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.piece_index(p).is_some()
    }

    fn piece_of(&self, p: &Point) -> Result<&Piece> {
        self.pieces
            .iter()
            .find(|piece| piece.contains(p))
            .ok_or_else(|| Error::UnknownPoint(p.to_string()))
    }

    /// `T p`.
    pub fn successor(&self, p: &Point) -> Result<Point> {
        if let Some(c) = &self.collapse {
            if !self.contains(p) {
                return Err(Error::UnknownPoint(p.to_string()));
            }
            let rep = c.representative(p)?;
            return Ok(c.project(c.base.successor(rep)?));
        }
        self.piece_of(p)?.successor(p)
    }

    /// `T^n p`.
    pub fn step(&self, p: &Point, n: u64) -> Result<Point> {
        self.step_big(p, &BigUint::from(n))
    }

    /// `T^n p` for arbitrarily large `n`.
    pub fn step_big(&self, p: &Point, n: &BigUint) -> Result<Point> {
        if self.collapse.is_none() {
            let piece = self.piece_of(p)?;
            if let Some(q) = piece.jump(p, n)? {
                return Ok(q);
            }
        } else if !self.contains(p) {
            return Err(Error::UnknownPoint(p.to_string()));
        }
        // iterate, folding the remaining count over the first detected cycle
        let budget = step_budget();
        let mut seen: HashMap<Point, u64> = HashMap::new();
        let mut cur = p.clone();
        let mut t: u64 = 0;
        loop {
            if BigUint::from(t) == *n {
                return Ok(cur);
            }
            if let Some(&first) = seen.get(&cur) {
                let cycle = t - first;
                let remaining = (n - BigUint::from(t)) % BigUint::from(cycle);
                let r = remaining.to_u64().expect("remainder below cycle length");
                for _ in 0..r {
                    cur = self.successor(&cur)?;
                }
                return Ok(cur);
            }
            if t >= budget {
                return Err(Error::Budget(format!("stepping {p} beyond {budget} steps")));
            }
            seen.insert(cur.clone(), t);
            cur = self.successor(&cur)?;
            t += 1;
        }
    }

    pub fn cursor(&self, p: Point) -> Result<OrbitCursor<'_>> {
        if !self.contains(&p) {
            return Err(Error::UnknownPoint(p.to_string()));
        }
        Ok(OrbitCursor {
            sys: self,
            current: p,
            steps_taken: 0,
        })
    }

    /// Least `m <= max_steps` with `T^m p = p`.
    pub fn detect_period(&self, p: &Point, max_steps: u64) -> Result<Option<u64>> {
        let mut cur = self.successor(p)?;
        for m in 1..=max_steps {
            if cur == *p {
                return Ok(Some(m));
            }
            if m < max_steps {
                cur = self.successor(&cur)?;
            }
        }
        Ok(None)
    }

    /// Period of a periodic point: declared for lazy pieces, detected otherwise.
    pub fn period(&self, p: &Point) -> Result<BigUint> {
        if self.collapse.is_none() {
            if let Some(d) = self.piece_of(p)?.declared_period() {
                return Ok(d);
            }
        }
        let budget = step_budget();
        self.detect_period(p, budget)?
            .map(BigUint::from)
            .ok_or_else(|| Error::Budget(format!("{p} is not periodic within {budget} steps")))
    }

    /// Period as a machine integer no larger than `budget`.
    pub fn small_period(&self, p: &Point, budget: u64) -> Result<u64> {
        let per = self.period(p)?;
        per.to_u64()
            .filter(|&v| v <= budget)
            .ok_or_else(|| Error::Budget(format!("period {per} of {p} exceeds {budget}")))
    }

    /// Exact squared distance. Quotients by nontrivial classes have no exact form.
    pub fn dist_sq(&self, a: &Point, b: &Point) -> Result<Rational> {
        match &self.collapse {
            None => point_dist_sq(a, b),
            Some(c) if c.classes.is_empty() => c.base.dist_sq(a, b),
            Some(_) => Err(Error::Undecided(
                "quotient distances are only available as enclosures".into(),
            )),
        }
    }

    /// Encloses the distance between two points.
    pub fn dist_enclose(&self, a: &Point, b: &Point, tol: &Rational) -> Result<Enclosure> {
        match &self.collapse {
            Some(c) if !c.classes.is_empty() => c.distance(a, b),
            _ => sqrt_enclose(&self.dist_sq(a, b)?, tol),
        }
    }

    /// Decides `d(a, b) < eps`.
    pub fn dist_lt(&self, a: &Point, b: &Point, eps: &Rational) -> Result<bool> {
        match &self.collapse {
            Some(c) if !c.classes.is_empty() => {
                let e = c.distance(a, b)?;
                if e.hi < *eps {
                    Ok(true)
                } else if e.lo >= *eps {
                    Ok(false)
                } else {
                    Err(Error::Undecided(format!(
                        "quotient distance [{}, {}] straddles {}; rebuild with a finer tolerance",
                        fmt_rational(&e.lo),
                        fmt_rational(&e.hi),
                        fmt_rational(eps)
                    )))
                }
            }
            _ => Ok(self.dist_sq(a, b)? < eps * eps),
        }
    }

    /// Every point, when every piece is finite and the total stays within `limit`.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<Point>> {
        if let Some(c) = &self.collapse {
            return Ok(c.nodes.clone());
        }
        let mut out = Vec::new();
        for piece in &self.pieces {
            let pts = piece
                .enumerate(limit.saturating_sub(out.len()))
                .ok_or_else(|| Error::Budget(format!("piece `{}` is not enumerable", piece.name())))?;
            out.extend(pts);
        }
        Ok(out)
    }

    /// Like [`Self::enumerate`], but circles contribute `circle_samples` points.
    pub fn sample_points(&self, circle_samples: usize, limit: usize) -> Result<Vec<Point>> {
        if let Some(c) = &self.collapse {
            return Ok(c.nodes.clone());
        }
        let mut out = Vec::new();
        for piece in &self.pieces {
            let pts = piece
                .sample(circle_samples, limit.saturating_sub(out.len()))
                .ok_or_else(|| Error::Budget(format!("piece `{}` exceeds the point budget", piece.name())))?;
            out.extend(pts);
        }
        Ok(out)
    }

    /// Residues of `N(x, B(center, radius))` over one period of `x`.
    pub fn return_times(&self, x: &Point, center: &Point, radius: &Rational) -> Result<ReturnTimeSet> {
        let budget = step_budget();
        let period = self.small_period(x, budget)?;
        let mut residues = Vec::new();
        let mut cur = x.clone();
        for r in 0..period {
            if self.dist_lt(&cur, center, radius)? {
                residues.push(r);
            }
            cur = self.successor(&cur)?;
        }
        Ok(ReturnTimeSet { residues, period })
    }

    /// JSON descriptor listing pieces, kinds and declared periods.
    pub fn descriptor(&self) -> serde_json::Value {
        let pieces: Vec<_> = self
            .pieces
            .iter()
            .map(|p| {
                serde_json::json!({
                    "name": p.name(),
                    "kind": p.kind(),
                    "declared_period": p.declared_period().map(|v| v.to_string()),
                })
            })
            .collect();
        serde_json::json!({
            "v": "v1",
            "pieces": pieces,
            "collapsed_classes": self.collapse.as_ref().map(|c| c.classes.len()).unwrap_or(0),
        })
    }

    /// CSV orbit dump with columns `step,x,y`.
    pub fn orbit_csv(&self, p: &Point, steps: u64) -> Result<String> {
        let mut out = String::from("step,x,y\n");
        let mut cur = self.cursor(p.clone())?;
        loop {
            let c = cur
                .current()
                .as_cyl()
                .ok_or_else(|| Error::Precondition(format!("{} is not a cylinder point", cur.current())))?;
            out.push_str(&format!(
                "{},{},{}\n",
                cur.steps_taken(),
                fmt_rational(c.x()),
                fmt_rational(c.y())
            ));
            if cur.steps_taken() == steps {
                break;
            }
            cur.advance()?;
        }
        Ok(out)
    }
}

/// Position along an orbit.
#[derive(Debug, Clone)]
pub struct OrbitCursor<'a> {
    sys: &'a SystemPresentation,
    current: Point,
    steps_taken: u64,
}

impl OrbitCursor<'_> {
    pub fn current(&self) -> &Point {
        &self.current
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn advance(&mut self) -> Result<&Point> {
        self.current = self.sys.successor(&self.current)?;
        self.steps_taken += 1;
        Ok(&self.current)
    }
}

/// `N(x, U) = residues + period * Z_+`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnTimeSet {
    pub residues: Vec<u64>,
    pub period: u64,
}

impl ReturnTimeSet {
    pub fn contains(&self, n: u64) -> bool {
        self.residues.binary_search(&(n % self.period)).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// Largest cyclic distance between consecutive residues.
    pub fn max_cyclic_gap(&self) -> Option<u64> {
        let first = *self.residues.first()?;
        let mut gap = 0;
        for w in self.residues.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        let last = *self.residues.last()?;
        Some(gap.max(first + self.period - last))
    }

    /// Least `m` such that every window `[a, a+m]` meets the set.
    pub fn syndetic_gap(&self) -> Option<u64> {
        self.max_cyclic_gap().map(|g| g - 1)
    }
}

/// Product system with componentwise step and the maximum metric.
pub fn product(a: &SystemPresentation, b: &SystemPresentation) -> Result<SystemPresentation> {
    if a.collapse.is_some() || b.collapse.is_some() {
        return Err(Error::Precondition("products of quotients are not supported".into()));
    }
    let mut pieces = Vec::new();
    for pa in &a.pieces {
        for pb in &b.pieces {
            pieces.push(Piece::Product(Box::new(pa.clone()), Box::new(pb.clone())));
        }
    }
    Ok(SystemPresentation {
        pieces,
        collapse: None,
    })
}

/// Collapses each class (a finite invariant set) to a point.
///
/// The quotient metric is the chain metric: shortest paths over the graph
/// whose nodes are classes and uncollapsed points, weighted by set-to-set
/// distances. Weights are square roots, so each is enclosed to `tol` and
/// the shortest paths are run on both bounds.
pub fn quotient_collapse(
    sys: &SystemPresentation,
    classes: Vec<BTreeSet<Point>>,
    tol: &Rational,
) -> Result<SystemPresentation> {
    if sys.collapse.is_some() {
        return Err(Error::Precondition("nested quotients are not supported".into()));
    }
    let mut class_of = BTreeMap::new();
    for (k, class) in classes.iter().enumerate() {
        if class.is_empty() {
            return Err(Error::Precondition(format!("class {k} is empty")));
        }
        for p in class {
            if !sys.contains(p) {
                return Err(Error::UnknownPoint(p.to_string()));
            }
            if class_of.insert(p.clone(), k).is_some() {
                return Err(Error::Precondition(format!("classes overlap at {p}")));
            }
        }
    }
    for (k, class) in classes.iter().enumerate() {
        for p in class {
            let q = sys.successor(p)?;
            if !class.contains(&q) {
                return Err(Error::Precondition(format!(
                    "class {k} is not invariant: {p} maps to {q}"
                )));
            }
        }
    }
    let base_points = sys.enumerate(ENUMERATION_LIMIT).map_err(|_| {
        Error::Precondition("quotients need an enumerable presentation".into())
    })?;

    let mut nodes: Vec<Point> = (0..classes.len()).map(Point::Class).collect();
    let mut members: Vec<Vec<Point>> = classes.iter().map(|c| c.iter().cloned().collect()).collect();
    for p in base_points {
        if !class_of.contains_key(&p) {
            nodes.push(p.clone());
            members.push(vec![p]);
        }
    }
    let n = nodes.len();
    let mut lo = vec![vec![int(0); n]; n];
    let mut hi = vec![vec![int(0); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut best: Option<Rational> = None;
            for a in &members[i] {
                for b in &members[j] {
                    let d = point_dist_sq(a, b)?;
                    if best.as_ref().is_none_or(|m| d < *m) {
                        best = Some(d);
                    }
                }
            }
            let e = sqrt_enclose(&best.expect("nodes are nonempty"), tol)?;
            lo[i][j] = e.lo.clone();
            lo[j][i] = e.lo;
            hi[i][j] = e.hi.clone();
            hi[j][i] = e.hi;
        }
    }
    for m in [&mut lo, &mut hi] {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = &m[i][k] + &m[k][j];
                    if via < m[i][j] {
                        m[i][j] = via;
                    }
                }
            }
        }
    }
    let node_of = nodes.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
    Ok(SystemPresentation {
        pieces: vec![],
        collapse: Some(Arc::new(Collapse {
            base: Box::new(sys.clone()),
            classes,
            class_of,
            node_of,
            nodes,
            tol: tol.clone(),
            lo,
            hi,
        })),
    })
}

impl Collapse {
    pub fn tolerance(&self) -> &Rational {
        &self.tol
    }
}

/// Serializable form of a ball `B(center, radius)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    #[serde(with = "rational_str")]
    pub radius: Rational,
}

impl Ball {
    pub fn new(center: Point, radius: Rational) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, sys: &SystemPresentation, p: &Point) -> Result<bool> {
        sys.dist_lt(p, &self.center, &self.radius)
    }
}

/// Least common multiple of two periods.
pub fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    fn cyl(x: (i64, i64), y: (i64, i64)) -> Point {
        Point::Cyl(CylPoint::from_ratios(x, y).unwrap())
    }

    fn rotation(m: u64) -> SystemPresentation {
        let pts = (0..m).map(Point::Atom).collect();
        SystemPresentation::new(vec![Piece::Table(OrbitTable::cycle("rot", pts))]).unwrap()
    }

    #[test]
    fn point_text_round_trip() {
        let p = Point::pair(cyl((1, 2), (-1, 3)), Point::pair(Point::Atom(4), Point::Class(2)));
        let s = p.to_string();
        assert_eq!(s, "<(1/2, -1/3); <#4; [2]>>");
        assert_eq!(s.parse::<Point>().unwrap(), p);
        assert!("<#1 #2>".parse::<Point>().is_err());
    }

    #[test]
    fn table_steps_and_periods() {
        let sys = rotation(5);
        let p = Point::Atom(2);
        assert_eq!(sys.step(&p, 0).unwrap(), p);
        assert_eq!(sys.step(&p, 4).unwrap(), Point::Atom(1));
        assert_eq!(sys.step(&p, 1_000_000_003).unwrap(), Point::Atom(0));
        assert_eq!(sys.detect_period(&p, 10).unwrap(), Some(5));
        assert_eq!(sys.detect_period(&p, 4).unwrap(), None);
        assert!(sys.step(&Point::Atom(9), 1).is_err());
    }

    #[test]
    fn step_composes_through_transients() {
        // 0 -> 1 -> 2 -> 3 -> 1
        let succ = [(0, 1), (1, 2), (2, 3), (3, 1)]
            .into_iter()
            .map(|(a, b)| (Point::Atom(a), Point::Atom(b)))
            .collect();
        let sys = SystemPresentation::new(vec![Piece::Table(OrbitTable::new("rho", succ))]).unwrap();
        let p = Point::Atom(0);
        for a in 0..9u64 {
            for b in 0..9u64 {
                let lhs = sys.step(&sys.step(&p, a).unwrap(), b).unwrap();
                assert_eq!(lhs, sys.step(&p, a + b).unwrap());
            }
        }
        assert_eq!(sys.detect_period(&p, 100).unwrap(), None);
        assert_eq!(sys.detect_period(&Point::Atom(2), 100).unwrap(), Some(3));
    }

    #[test]
    fn rejects_overlap_and_escape() {
        let a = Piece::Table(OrbitTable::cycle("a", vec![Point::Atom(0), Point::Atom(1)]));
        let b = Piece::Fixed(FixedSet::Points([Point::Atom(1)].into()));
        assert!(SystemPresentation::new(vec![a, b]).is_err());
        let succ = [(Point::Atom(0), Point::Atom(7))].into_iter().collect();
        assert!(SystemPresentation::new(vec![Piece::Table(OrbitTable::new("x", succ))]).is_err());
    }

    #[test]
    fn fixed_circle_is_identity() {
        let sys = SystemPresentation::new(vec![Piece::Fixed(FixedSet::VerticalCircle { x: int(0) })]).unwrap();
        let p = cyl((0, 1), (1, 2));
        assert_eq!(sys.step(&p, 1_000_000).unwrap(), p);
        assert_eq!(sys.detect_period(&p, 1).unwrap(), Some(1));
        let rt = sys.return_times(&p, &p, &ratio(1, 3)).unwrap();
        assert_eq!(rt, ReturnTimeSet { residues: vec![0], period: 1 });
        assert!(!sys.contains(&cyl((1, 3), (0, 1))));
        let far = sys.return_times(&p, &cyl((0, 1), (-1, 2)), &ratio(1, 100)).unwrap();
        assert!(far.is_empty());
        assert_eq!(far.syndetic_gap(), None);
    }

    #[test]
    fn circle_samples_are_canonical() {
        let pts = FixedSet::VerticalCircle { x: int(0) }.sample(4);
        let ys: Vec<String> = pts.iter().map(|p| fmt_rational(p.as_cyl().unwrap().y())).collect();
        assert_eq!(ys, ["-1/2", "0", "1/2", "1"]);
    }

    #[test]
    fn return_time_gaps() {
        let rt = ReturnTimeSet { residues: vec![1, 2, 7], period: 10 };
        assert_eq!(rt.max_cyclic_gap(), Some(5));
        assert_eq!(rt.syndetic_gap(), Some(4));
        assert!(rt.contains(17) && !rt.contains(13));
    }

    #[test]
    fn product_of_fixed_points() {
        let f = SystemPresentation::new(vec![Piece::Fixed(FixedSet::Points([Point::Atom(0)].into()))]).unwrap();
        let pr = product(&f, &f).unwrap();
        let pts = pr.enumerate(10).unwrap();
        assert_eq!(pts, vec![Point::pair(Point::Atom(0), Point::Atom(0))]);
        assert_eq!(pr.detect_period(&pts[0], 1).unwrap(), Some(1));
    }

    #[test]
    fn product_periods_are_lcms() {
        for (m, n) in [(2u64, 3u64), (4, 6), (5, 5), (1, 7)] {
            let pr = product(&rotation(m), &rotation(n)).unwrap();
            let p = Point::pair(Point::Atom(0), Point::Atom(0));
            assert_eq!(pr.detect_period(&p, 1000).unwrap(), Some(lcm(m, n)));
        }
    }

    #[test]
    fn product_metric_is_max() {
        let a = Point::pair(cyl((0, 1), (0, 1)), cyl((0, 1), (0, 1)));
        let b = Point::pair(cyl((1, 2), (0, 1)), cyl((0, 1), (1, 3)));
        assert_eq!(point_dist_sq(&a, &b).unwrap(), ratio(1, 4));
    }

    #[test]
    fn collapse_nothing_keeps_metric() {
        let pts: Vec<Point> = (0..4).map(|k| cyl((k, 4), (0, 1))).collect();
        let sys = SystemPresentation::new(vec![Piece::Table(OrbitTable::cycle("c", pts.clone()))]).unwrap();
        let q = quotient_collapse(&sys, vec![], &ratio(1, 1000)).unwrap();
        assert_eq!(q.dist_sq(&pts[0], &pts[3]).unwrap(), sys.dist_sq(&pts[0], &pts[3]).unwrap());
        assert_eq!(q.step(&pts[1], 3).unwrap(), pts[0]);
    }

    #[test]
    fn collapse_rejects_bad_classes() {
        let pts: Vec<Point> = (0..4).map(|k| cyl((k, 4), (0, 1))).collect();
        let sys = SystemPresentation::new(vec![Piece::Table(OrbitTable::cycle("c", pts.clone()))]).unwrap();
        let tol = ratio(1, 100);
        let half: BTreeSet<Point> = pts[..2].iter().cloned().collect();
        assert!(quotient_collapse(&sys, vec![half], &tol).is_err());
        let all: BTreeSet<Point> = pts.iter().cloned().collect();
        assert!(quotient_collapse(&sys, vec![all.clone(), all], &tol).is_err());
    }

    #[test]
    fn collapsed_cycle_is_a_fixed_point() {
        let cyc: Vec<Point> = (0..3).map(|k| cyl((k, 6), (0, 1))).collect();
        let far = cyl((1, 1), (1, 2));
        let sys = SystemPresentation::new(vec![
            Piece::Table(OrbitTable::cycle("c", cyc.clone())),
            Piece::Fixed(FixedSet::Points([far.clone()].into())),
        ])
        .unwrap();
        let q = quotient_collapse(&sys, vec![cyc.iter().cloned().collect()], &ratio(1, 1 << 20)).unwrap();
        assert_eq!(q.successor(&Point::Class(0)).unwrap(), Point::Class(0));
        assert!(!q.contains(&cyc[1]));
        assert_eq!(q.enumerate(100).unwrap().len(), 2);
        // nearest member is (1/3, 0): rho^2 = 4/9 + 1/4
        let e = q.dist_enclose(&Point::Class(0), &far, &ratio(1, 10)).unwrap();
        let d2 = ratio(4, 9) + ratio(1, 4);
        assert!(&e.lo * &e.lo <= d2 && d2 <= &e.hi * &e.hi);
    }
}
