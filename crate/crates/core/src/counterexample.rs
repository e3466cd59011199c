//! A distal system of periodic orbits whose regionally proximal relation of
//! every order is nontrivial while no pair is finite-IP independent.
//!
//! The space is a subset of the cylinder. Piece `I_i` is a single cycle
//! drawn in the unit square and then squeezed horizontally into the strip
//! `[B_i.x, C_i.x]`:
//!
//! * down the left edge from `(0, 1)` to `(0, 0)` in steps of `1/(2i)`,
//! * a zigzag along the bottom band over columns `s/2^i`, heights `0` and `1/(2i)`,
//! * down the right edge from `(1, 0)` to `(1, -1)` in steps of `1/(2i)`,
//! * and the wrap `(1, -1) -> (0, 1)`.
//!
//! The cycle has `2^(i+1) + 4i + 1` points. The segment `{0} x [-1, 1]` is fixed.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dist_lt, dist_sq, int, rational_str, sqrt_enclose, CylPoint, Rational};
use crate::relations::{PatternCheck, RegionalWitness};
use crate::catalog::SystemSpec;
use crate::systems::{FixedSet, LazyPiece, Piece, Point, SystemPresentation};

/// Position of a point inside the unsqueezed picture of `I_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Local {
    /// `(0, k/(2i))`, `0 <= k <= 2i`.
    Left(u64),
    /// `(s/2^i, j/(2i))`, `1 <= s <= 2^i`, `j` in `{0, 1}`.
    Band { s: BigUint, j: u8 },
    /// `(1, -t/(2i))`, `1 <= t <= 2i`.
    Right(u64),
}

/// The squeezed and embedded piece `I_i`.
#[derive(Clone, Debug)]
pub struct BasicPiece {
    i: u64,
    two_i: u64,
    columns: BigUint,
    len: BigUint,
    left_x: Rational,
    width: Rational,
}

impl BasicPiece {
    pub fn index(&self) -> u64 {
        self.i
    }

    /// Cycle length `2^(i+1) + 4i + 1`.
    pub fn len(&self) -> &BigUint {
        &self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Horizontal extent `C_i.x - B_i.x = 1/(2i(i+1))`.
    pub fn width(&self) -> &Rational {
        &self.width
    }

    pub fn b(&self) -> CylPoint {
        self.embed(&Local::Left(0))
    }

    pub fn a(&self) -> CylPoint {
        self.embed(&Local::Left(self.two_i))
    }

    pub fn c(&self) -> CylPoint {
        self.embed(&Local::Band {
            s: self.columns.clone(),
            j: 0,
        })
    }

    /// `(1/i, -1)`, stored canonically as `(1/i, 1)`.
    pub fn d(&self) -> CylPoint {
        self.embed(&Local::Right(self.two_i))
    }

    fn height(&self, k: i64) -> Rational {
        Rational::new(k.into(), (self.two_i as i64).into())
    }

    pub fn embed(&self, local: &Local) -> CylPoint {
        let (u, y) = match local {
            Local::Left(k) => (int(0), self.height(*k as i64)),
            Local::Band { s, j } => (
                Rational::new(s.clone().into(), self.columns.clone().into()),
                self.height(*j as i64),
            ),
            Local::Right(t) => (int(1), self.height(-(*t as i64))),
        };
        CylPoint::new(&self.left_x + u * &self.width, y).expect("piece points lie in the cylinder")
    }

    /// Inverse of [`Self::embed`] on the piece.
    pub fn locate(&self, p: &CylPoint) -> Option<Local> {
        let u = (p.x() - &self.left_x) / &self.width;
        if u < int(0) || u > int(1) {
            return None;
        }
        let k = p.y() * Rational::from_integer((self.two_i as i64).into());
        if !k.is_integer() {
            return None;
        }
        let k = k.to_integer();
        if u.is_zero() {
            let k = k.to_u64()?;
            return (k <= self.two_i).then_some(Local::Left(k));
        }
        if u == int(1) {
            // y = 1 here is the canonical form of (1, -1)
            if k == self.two_i.into() {
                return Some(Local::Right(self.two_i));
            }
            if k == 0.into() || k == 1.into() {
                return Some(Local::Band {
                    s: self.columns.clone(),
                    j: k.to_u8()?,
                });
            }
            let t = (-k).to_u64()?;
            return (1..self.two_i).contains(&t).then_some(Local::Right(t));
        }
        let s = &u * Rational::from_integer(self.columns.clone().into());
        if !s.is_integer() || !(k == 0.into() || k == 1.into()) {
            return None;
        }
        Some(Local::Band {
            s: s.to_integer().to_biguint()?,
            j: k.to_u8()?,
        })
    }

    /// One step of `T_i`, by cases on the position in the unsqueezed picture.
    pub fn successor_local(&self, local: &Local) -> Local {
        match local {
            Local::Left(k) if *k >= 2 => Local::Left(k - 1),
            // (0, 1/(2i)) is the top of column 0, which drops to (0, 0)
            Local::Left(1) => Local::Left(0),
            Local::Left(_) => Local::Band {
                s: BigUint::one(),
                j: 0,
            },
            Local::Band { s, j } => {
                let odd = (s.bit(0) as u8 + j) % 2 == 1;
                if odd {
                    Local::Band { s: s.clone(), j: 1 - j }
                } else if *s < self.columns {
                    Local::Band { s: s + 1u32, j: *j }
                } else {
                    Local::Right(1)
                }
            }
            Local::Right(t) if *t < self.two_i => Local::Right(t + 1),
            Local::Right(_) => Local::Left(self.two_i),
        }
    }

    /// Index along the cycle, with `A_i` at 0.
    pub fn position(&self, local: &Local) -> BigUint {
        let two_i = BigUint::from(self.two_i);
        match local {
            Local::Left(k) => BigUint::from(self.two_i - k),
            Local::Band { s, j } => {
                // column s is entered at height (s-1) mod 2, then flips
                let first = (s - 1u32).bit(0) as u8 == *j;
                let offset = if first { 1u32 } else { 2u32 };
                two_i + (s - 1u32) * 2u32 + offset
            }
            Local::Right(t) => two_i + &self.columns * 2u32 + BigUint::from(*t),
        }
    }

    pub fn local_at(&self, pos: &BigUint) -> Local {
        let pos = pos % &self.len;
        let two_i = BigUint::from(self.two_i);
        if pos <= two_i {
            return Local::Left(self.two_i - pos.to_u64().expect("small"));
        }
        let band_end = &two_i + &self.columns * 2u32;
        if pos <= band_end {
            let q = &pos - &two_i - 1u32;
            let s: BigUint = &q / 2u32 + 1u32;
            let second = q.bit(0);
            let entry = (&s - 1u32).bit(0) as u8;
            let j = if second { 1 - entry } else { entry };
            return Local::Band { s, j };
        }
        Local::Right((pos - band_end).to_u64().expect("small"))
    }

    pub fn point_at(&self, pos: &BigUint) -> CylPoint {
        self.embed(&self.local_at(pos))
    }

    pub fn position_of(&self, p: &CylPoint) -> Option<BigUint> {
        self.locate(p).map(|l| self.position(&l))
    }

    /// Cycle positions of all points in the open ball `B(center, radius)`.
    ///
    /// Edge points are scanned; band columns are bracketed by binary search,
    /// since the horizontal distance to the center is unimodal in `s`.
    pub fn ball_positions(&self, center: &CylPoint, radius: &Rational, limit: usize) -> Result<Vec<BigUint>> {
        let mut out = Vec::new();
        for k in 0..=self.two_i {
            let l = Local::Left(k);
            if dist_lt(&self.embed(&l), center, radius) {
                out.push(self.position(&l));
            }
        }
        for t in 1..=self.two_i {
            let l = Local::Right(t);
            if dist_lt(&self.embed(&l), center, radius) {
                out.push(self.position(&l));
            }
        }
        for j in 0..2u8 {
            let inside = |s: &BigUint| {
                dist_lt(&self.embed(&Local::Band { s: s.clone(), j }), center, radius)
            };
            // nearest column to the center's x
            let target = (center.x() - &self.left_x) / &self.width
                * Rational::from_integer(self.columns.clone().into());
            let lo_s = BigUint::one();
            let hi_s = self.columns.clone();
            let clamp = |v: num_bigint::BigInt| -> BigUint {
                match v.to_biguint() {
                    Some(v) if v < lo_s => lo_s.clone(),
                    Some(v) if v > hi_s => hi_s.clone(),
                    Some(v) => v,
                    None => lo_s.clone(),
                }
            };
            let f = clamp(target.floor().to_integer());
            let c = clamp(target.ceil().to_integer());
            let seed = if inside(&f) {
                f
            } else if inside(&c) {
                c
            } else {
                continue;
            };
            // least s in [1, seed] inside
            let (mut a, mut b) = (lo_s.clone(), seed.clone());
            while a < b {
                let mid: BigUint = (&a + &b) / 2u32;
                if inside(&mid) {
                    b = mid;
                } else {
                    a = mid + 1u32;
                }
            }
            let first = a;
            // greatest s in [seed, 2^i] inside
            let (mut a, mut b) = (seed, hi_s.clone());
            while a < b {
                let mid: BigUint = (&a + &b + 1u32) / 2u32;
                if inside(&mid) {
                    a = mid;
                } else {
                    b = mid - 1u32;
                }
            }
            let last = a;
            let count = (&last - &first + 1u32).to_usize().unwrap_or(usize::MAX);
            if out.len().saturating_add(count) > limit {
                return Err(Error::Budget(format!(
                    "ball meets {count} band points of I_{}",
                    self.i
                )));
            }
            let mut s = first;
            while s <= last {
                out.push(self.position(&Local::Band { s: s.clone(), j }));
                s += 1u32;
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl LazyPiece for BasicPiece {
    fn name(&self) -> String {
        format!("I_{}", self.i)
    }

    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Cyl(c) if self.locate(c).is_some())
    }

    fn successor(&self, p: &Point) -> Result<Point> {
        let local = p
            .as_cyl()
            .and_then(|c| self.locate(c))
            .ok_or_else(|| Error::UnknownPoint(p.to_string()))?;
        Ok(Point::Cyl(self.embed(&self.successor_local(&local))))
    }

    fn jump(&self, p: &Point, n: &BigUint) -> Result<Point> {
        let pos = p
            .as_cyl()
            .and_then(|c| self.position_of(c))
            .ok_or_else(|| Error::UnknownPoint(p.to_string()))?;
        Ok(Point::Cyl(self.point_at(&(pos + n))))
    }

    fn period(&self) -> BigUint {
        self.len.clone()
    }

    fn cardinality(&self) -> BigUint {
        self.len.clone()
    }

    fn enumerate(&self, limit: usize) -> Option<Vec<Point>> {
        let n = self.len.to_usize().filter(|&n| n <= limit)?;
        let mut out = Vec::with_capacity(n);
        let mut local = Local::Left(self.two_i);
        for _ in 0..n {
            out.push(Point::Cyl(self.embed(&local)));
            local = self.successor_local(&local);
        }
        Some(out)
    }
}

/// `I_i` with `B_i = ((2i+1)/(2i(i+1)), 0)` and `C_i = (1/i, 0)`.
pub fn build_piece(i: u64) -> Result<BasicPiece> {
    if i == 0 {
        return Err(Error::Precondition("piece index starts at 1".into()));
    }
    let two_i = 2 * i;
    let columns = BigUint::one() << i;
    let len = (BigUint::one() << (i + 1)) + BigUint::from(4 * i + 1);
    let denom = (2 * i * (i + 1)) as i64;
    Ok(BasicPiece {
        i,
        two_i,
        columns,
        len,
        left_x: Rational::new(((2 * i + 1) as i64).into(), denom.into()),
        width: Rational::new(1.into(), denom.into()),
    })
}

/// `A = (0, 1)`, the common limit of `A_i` and `D_i`.
pub fn point_a() -> CylPoint {
    CylPoint::new(int(0), int(1)).expect("in range")
}

/// `B = (0, 0)`, the common limit of `B_i` and `C_i`.
pub fn point_b() -> CylPoint {
    CylPoint::new(int(0), int(0)).expect("in range")
}

/// The truncation `X_N = I_1 u ... u I_N u I`.
#[derive(Clone, Debug)]
pub struct CounterexampleTruncation {
    pieces: Vec<Arc<BasicPiece>>,
    system: SystemPresentation,
}

impl CounterexampleTruncation {
    pub fn new(levels: u64) -> Result<Self> {
        let pieces: Vec<Arc<BasicPiece>> = (1..=levels)
            .map(|i| build_piece(i).map(Arc::new))
            .collect::<Result<_>>()?;
        let mut parts: Vec<Piece> = pieces
            .iter()
            .map(|p| Piece::Lazy(p.clone() as Arc<dyn LazyPiece>))
            .collect();
        parts.push(Piece::Fixed(FixedSet::VerticalCircle { x: int(0) }));
        Ok(CounterexampleTruncation {
            pieces,
            system: SystemPresentation::new(parts)?,
        })
    }

    pub fn levels(&self) -> u64 {
        self.pieces.len() as u64
    }

    pub fn piece(&self, i: u64) -> Option<&BasicPiece> {
        self.pieces.get((i as usize).checked_sub(1)?).map(|p| p.as_ref())
    }

    pub fn system(&self) -> &SystemPresentation {
        &self.system
    }

    pub fn spec(&self) -> SystemSpec {
        SystemSpec::Counterexample {
            levels: self.levels(),
        }
    }
}

/// Result of checking `rho(TQ, Q) <= 1/(2i)` along `I_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepBoundReport {
    pub i: u64,
    pub sample_budget: u64,
    pub exhaustive: bool,
    pub steps_checked: u64,
    #[serde(with = "rational_str")]
    pub max_dist_sq: Rational,
    #[serde(with = "rational_str")]
    pub bound_sq: Rational,
    pub all_pass: bool,
}

pub fn step_distance_bound_check(i: u64, sample_budget: u64) -> Result<StepBoundReport> {
    let piece = build_piece(i)?;
    let bound_sq = Rational::new(1.into(), ((2 * i) * (2 * i)).into());
    let len = piece.len().clone();
    let exhaustive = len <= BigUint::from(sample_budget);
    let positions: BTreeSet<BigUint> = if exhaustive {
        (0..len.to_u64().expect("within budget")).map(BigUint::from).collect()
    } else {
        // the start of the cycle plus windows around every corner
        let w = (sample_budget / 8).max(1);
        let two_i = BigUint::from(2 * i);
        let corners = [
            BigUint::zero(),
            two_i.clone(),
            &two_i + (BigUint::one() << (i + 1)),
            &len - 1u32,
        ];
        let mut set = BTreeSet::new();
        for c in corners {
            for off in 0..w {
                set.insert((&c + &len + off - w / 2) % &len);
            }
        }
        for p in 0..w {
            set.insert(BigUint::from(p) % &len);
        }
        set
    };
    let mut max_dist_sq = int(0);
    let mut all_pass = true;
    for pos in &positions {
        let local = piece.local_at(pos);
        let q = piece.embed(&local);
        let next_local = piece.successor_local(&local);
        if next_local != piece.local_at(&(pos + 1u32)) {
            return Err(Error::Construction(format!(
                "successor and cycle index disagree at position {pos} of I_{i}"
            )));
        }
        let d = dist_sq(&piece.embed(&next_local), &q);
        if d > bound_sq {
            all_pass = false;
        }
        if d > max_dist_sq {
            max_dist_sq = d;
        }
    }
    Ok(StepBoundReport {
        i,
        sample_budget,
        exhaustive,
        steps_checked: positions.len() as u64,
        max_dist_sq,
        bound_sq,
        all_pass,
    })
}

/// One comparison recorded in a report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub alpha_or_residues: Vec<u64>,
    pub time: u64,
    pub left: CylPoint,
    pub right: CylPoint,
    #[serde(with = "rational_str")]
    pub dist_sq: Rational,
    #[serde(with = "rational_str")]
    pub bound_sq: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim1Parameters {
    pub d: u64,
    #[serde(with = "rational_str")]
    pub eps: Rational,
}

/// A checked witness that `(A, B)` is regionally proximal of order `d` at scale `eps`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpdWitness {
    pub v: String,
    pub parameters: Claim1Parameters,
    pub chosen_i_or_levels: Vec<u64>,
    pub nbar: Vec<u64>,
    /// `rho(A_i, A)^2 = rho(B_i, B)^2`.
    #[serde(with = "rational_str")]
    pub anchor_dist_sq: Rational,
    pub checks: Vec<Check>,
}

impl RpdWitness {
    pub fn level(&self) -> u64 {
        self.chosen_i_or_levels[0]
    }
}

/// All `alpha` in `{0,1}^d \ {0}` in increasing binary order, first coordinate least significant.
pub fn nonzero_patterns(d: usize) -> Vec<Vec<u8>> {
    (1u64..(1 << d))
        .map(|m| (0..d).map(|k| ((m >> k) & 1) as u8).collect())
        .collect()
}

pub fn dot(nbar: &[u64], alpha: &[u8]) -> u64 {
    nbar.iter().zip(alpha).map(|(n, a)| n * *a as u64).sum()
}

/// Least `i` with `(2i+1)/(2i(i+1)) < eps` and `(1+d)di < 2^i`.
pub fn claim1_level(d: u64, eps: &Rational) -> u64 {
    (1u64..)
        .find(|&i| {
            let r = Rational::new(((2 * i + 1) as i64).into(), ((2 * i * (i + 1)) as i64).into());
            let steps = BigUint::from((1 + d) * d * i);
            r < *eps && steps < (BigUint::one() << i)
        })
        .expect("both conditions hold for large i")
}

/// Builds the order-`d` witness for `(A, B)` at scale `eps` by exact stepping.
pub fn verify_claim1(d: u64, eps: &Rational, step_ceiling: u64) -> Result<RpdWitness> {
    if d == 0 {
        return Err(Error::Precondition("d must be at least 1".into()));
    }
    if *eps <= int(0) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let i = claim1_level(d, eps);
    let piece = build_piece(i)?;
    let nbar: Vec<u64> = (1..=d).map(|k| 2 * i * k).collect();
    let patterns = nonzero_patterns(d as usize);
    let max_time = dot(&nbar, &vec![1; d as usize]);
    if max_time > step_ceiling {
        return Err(Error::Budget(format!(
            "needs {max_time} steps, ceiling is {step_ceiling}"
        )));
    }
    let mut times: Vec<u64> = patterns.iter().map(|a| dot(&nbar, a)).collect();
    times.sort_unstable();
    times.dedup();
    // walk both orbits once, recording the needed iterates
    let mut a = Local::Left(2 * i);
    let mut b = Local::Left(0);
    let mut at = std::collections::BTreeMap::new();
    let mut t = 0;
    for &target in &times {
        while t < target {
            a = piece.successor_local(&a);
            b = piece.successor_local(&b);
            t += 1;
        }
        at.insert(target, (piece.embed(&a), piece.embed(&b)));
    }
    let bound_sq = eps * eps;
    let mut checks = Vec::with_capacity(patterns.len());
    for alpha in &patterns {
        let time = dot(&nbar, alpha);
        let (l, r) = at[&time].clone();
        let d2 = dist_sq(&l, &r);
        if d2 >= bound_sq {
            return Err(Error::Construction(format!(
                "pattern {alpha:?} at time {time} is not eps-close"
            )));
        }
        checks.push(Check {
            alpha_or_residues: alpha.iter().map(|&v| v as u64).collect(),
            time,
            left: l,
            right: r,
            dist_sq: d2,
            bound_sq: bound_sq.clone(),
        });
    }
    let anchor_dist_sq = dist_sq(&piece.a(), &point_a());
    debug_assert_eq!(anchor_dist_sq, dist_sq(&piece.b(), &point_b()));
    Ok(RpdWitness {
        v: "v1".into(),
        parameters: Claim1Parameters { d, eps: eps.clone() },
        chosen_i_or_levels: vec![i],
        nbar,
        anchor_dist_sq,
        checks,
    })
}

/// Lifts a [`verify_claim1`] witness into the generic regional-proximality record.
pub fn claim1_as_regional(w: &RpdWitness) -> Result<RegionalWitness> {
    let i = w.level();
    let piece = build_piece(i)?;
    let checks = w
        .checks
        .iter()
        .map(|c| PatternCheck {
            alpha: c.alpha_or_residues.iter().map(|&v| v as u8).collect(),
            time: c.time,
            left: Point::Cyl(c.left.clone()),
            right: Point::Cyl(c.right.clone()),
            dist_sq: c.dist_sq.clone(),
        })
        .collect();
    Ok(RegionalWitness {
        v: "v1".into(),
        system: SystemSpec::Counterexample { levels: i },
        x: Point::Cyl(point_a()),
        y: Point::Cyl(point_b()),
        d: w.parameters.d,
        eps: w.parameters.eps.clone(),
        x_approx: Point::Cyl(piece.a()),
        y_approx: Point::Cyl(piece.b()),
        nbar: w.nbar.clone(),
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndfipParameters {
    #[serde(with = "rational_str")]
    pub c: Rational,
    #[serde(with = "rational_str")]
    pub dd: Rational,
    pub max_level: u64,
}

/// Neighbourhoods chosen for a refutation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationBalls {
    pub k: u64,
    pub center1: CylPoint,
    #[serde(with = "rational_str")]
    pub r1: Rational,
    pub center2: CylPoint,
    #[serde(with = "rational_str")]
    pub r2: Rational,
    /// `min{(c-dd)/4, (2k+1)/(2k(k+1))}`, which `2 r1` must undercut.
    #[serde(with = "rational_str")]
    pub diameter_bound: Rational,
    /// Lower bound on the distance between the closed balls.
    #[serde(with = "rational_str")]
    pub separation_lower: Rational,
    #[serde(with = "rational_str")]
    pub separation_required: Rational,
}

/// Refutation of one starting point `P` on one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartRefutation {
    pub start: CylPoint,
    /// `{r mod m_i : T^r P in U1}`.
    pub residues: Vec<String>,
    pub pairs_checked: u64,
    /// Least `rho(T^(r1+r2) P, D)^2` over all residue pairs.
    #[serde(with = "rational_str")]
    pub min_dist_sq_to_d: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRefutation {
    pub i: u64,
    pub period: String,
    pub vacuous: bool,
    pub starts: Vec<StartRefutation>,
}

/// Bounded refutation that `(C, D)` is an `Ind_fip` pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndfipRefutation {
    pub v: String,
    pub parameters: IndfipParameters,
    pub balls: RefutationBalls,
    pub chosen_i_or_levels: Vec<u64>,
    pub levels: Vec<LevelRefutation>,
    /// Points of the fixed circle never leave `U1`, and `U1` misses `U2`.
    pub circle_refuted: bool,
    /// A pair `(P, r1, r2)` realizing the forbidden pattern, if one was found.
    pub falsifying: Option<FalsifyingPattern>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalsifyingPattern {
    pub i: u64,
    pub start: CylPoint,
    pub r1: String,
    pub r2: String,
}

impl IndfipRefutation {
    pub fn refuted(&self) -> bool {
        self.falsifying.is_none()
    }
}

/// Chooses `U1 = B(C, r1)`, `U2 = B(D, r2)` with `C = (0, c)`, `D = (0, dd)`.
pub fn refutation_balls(c: &Rational, dd: &Rational) -> Result<RefutationBalls> {
    if !(int(0) <= *dd && dd < c && *c <= int(1)) {
        return Err(Error::Degenerate(format!(
            "need 0 <= dd < c <= 1, got c = {}, dd = {}",
            crate::numeric::fmt_rational(c),
            crate::numeric::fmt_rational(dd)
        )));
    }
    // least k with c > 2/k
    let k = (int(2) / c).floor().to_integer().to_u64().expect("c <= 1") + 1;
    let gap = c - dd;
    let kr = Rational::new(((2 * k + 1) as i64).into(), ((2 * k * (k + 1)) as i64).into());
    let quarter = &gap / int(4);
    let diameter_bound = if quarter < kr { quarter } else { kr };
    let r1 = int(3) * &diameter_bound / int(8);
    let r2 = r1.clone();
    let center1 = CylPoint::new(int(0), c.clone())?;
    let center2 = CylPoint::new(int(0), dd.clone())?;
    let tol = Rational::new(1.into(), (1i64 << 40).into());
    let rho = sqrt_enclose(&dist_sq(&center1, &center2), &tol)?;
    let separation_lower = &rho.lo - &r1 - &r2;
    let separation_required = int(3) * &gap / int(4);
    if separation_lower <= separation_required {
        return Err(Error::Degenerate(
            "no radii separate the neighbourhoods by 3(c-dd)/4".into(),
        ));
    }
    Ok(RefutationBalls {
        k,
        center1,
        r1,
        center2,
        r2,
        diameter_bound,
        separation_lower,
        separation_required,
    })
}

/// Checks every level `i <= max_level`: no `P` in `I_i` and residues `r1, r2`
/// with `T^r1 P, T^r2 P` in `U1` have `T^(r1+r2) P` in `U2`.
pub fn refute_indfip(c: &Rational, dd: &Rational, max_level: u64, point_budget: usize) -> Result<IndfipRefutation> {
    let balls = refutation_balls(c, dd)?;
    let mut levels = Vec::new();
    let mut falsifying = None;
    for i in 1..=max_level {
        let piece = build_piece(i)?;
        let len = piece.len().clone();
        let hits = piece.ball_positions(&balls.center1, &balls.r1, point_budget)?;
        let mut starts = Vec::new();
        for p in &hits {
            let residues: Vec<BigUint> = hits.iter().map(|q| (q + &len - p) % &len).collect();
            let mut min_d = None::<Rational>;
            let mut pairs = 0u64;
            for r1 in &residues {
                for r2 in &residues {
                    let q = piece.point_at(&(p + r1 + r2));
                    let dq = dist_sq(&q, &balls.center2);
                    if dq < &balls.r2 * &balls.r2 && falsifying.is_none() {
                        falsifying = Some(FalsifyingPattern {
                            i,
                            start: piece.point_at(p),
                            r1: r1.to_string(),
                            r2: r2.to_string(),
                        });
                    }
                    if min_d.as_ref().is_none_or(|m| dq < *m) {
                        min_d = Some(dq);
                    }
                    pairs += 1;
                }
            }
            let mut sorted = residues.clone();
            sorted.sort();
            starts.push(StartRefutation {
                start: piece.point_at(p),
                residues: sorted.iter().map(|r| r.to_string()).collect(),
                pairs_checked: pairs,
                min_dist_sq_to_d: min_d.expect("residues contain 0"),
            });
        }
        levels.push(LevelRefutation {
            i,
            period: len.to_string(),
            vacuous: hits.is_empty(),
            starts,
        });
    }
    Ok(IndfipRefutation {
        v: "v1".into(),
        parameters: IndfipParameters {
            c: c.clone(),
            dd: dd.clone(),
            max_level,
        },
        chosen_i_or_levels: (1..=max_level).collect(),
        circle_refuted: balls.separation_lower > int(0),
        balls,
        levels,
        falsifying,
    })
}

/// Bounded search for an order-`d` witness of `(C, B)` with `C` on the fixed circle.
///
/// Levels are tried in increasing order, then `nbar` lexicographically with
/// entries in `1..=step_bound`, then approximants by cycle position.
pub fn rp_infty_witness_general(
    c: &CylPoint,
    d: u64,
    eps: &Rational,
    level_bound: u64,
    step_bound: u64,
) -> Result<Option<RegionalWitness>> {
    let b = point_b();
    if c.x() != &int(0) {
        return Err(Error::Precondition(format!("{c} is not on the fixed circle")));
    }
    if *c == b {
        return Err(Error::Precondition("C must differ from B".into()));
    }
    if d == 0 || step_bound == 0 || *eps <= int(0) {
        return Err(Error::Precondition("d, step_bound and eps must be positive".into()));
    }
    for i in 1..=level_bound {
        let piece = build_piece(i)?;
        let len = piece
            .len()
            .to_usize()
            .filter(|&n| n <= crate::systems::step_budget() as usize)
            .ok_or_else(|| Error::Budget(format!("I_{i} is too large to search")))?;
        let pts: Vec<CylPoint> = (0..len).map(|p| piece.point_at(&BigUint::from(p))).collect();
        let xs: Vec<usize> = (0..len).filter(|&p| dist_lt(&pts[p], c, eps)).collect();
        let ys: Vec<usize> = (0..len).filter(|&p| dist_lt(&pts[p], &b, eps)).collect();
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let patterns = nonzero_patterns(d as usize);
        let mut close = std::collections::HashMap::new();
        let mut nbar = vec![1u64; d as usize];
        loop {
            let times: Vec<usize> = patterns.iter().map(|a| dot(&nbar, a) as usize).collect();
            for &x in &xs {
                for &y in &ys {
                    let ok = times.iter().all(|&t| {
                        let (p, q) = ((x + t) % len, (y + t) % len);
                        *close
                            .entry((p, q))
                            .or_insert_with(|| dist_lt(&pts[p], &pts[q], eps))
                    });
                    if ok {
                        let checks = patterns
                            .iter()
                            .zip(&times)
                            .map(|(a, &t)| {
                                let (p, q) = (&pts[(x + t) % len], &pts[(y + t) % len]);
                                PatternCheck {
                                    alpha: a.clone(),
                                    time: t as u64,
                                    left: Point::Cyl(p.clone()),
                                    right: Point::Cyl(q.clone()),
                                    dist_sq: dist_sq(p, q),
                                }
                            })
                            .collect();
                        return Ok(Some(RegionalWitness {
                            v: "v1".into(),
                            system: SystemSpec::Counterexample { levels: i },
                            x: Point::Cyl(c.clone()),
                            y: Point::Cyl(b),
                            d,
                            eps: eps.clone(),
                            x_approx: Point::Cyl(pts[x].clone()),
                            y_approx: Point::Cyl(pts[y].clone()),
                            nbar,
                            checks,
                        }));
                    }
                }
            }
            if !crate::relations::next_lex(&mut nbar, step_bound) {
                break;
            }
        }
    }
    Ok(None)
}
