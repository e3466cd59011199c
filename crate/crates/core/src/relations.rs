//! Proximality, distality scans and regional proximality witnesses.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::SystemSpec;
use crate::counterexample::{dot, nonzero_patterns};
use crate::error::{Error, Result};
use crate::numeric::{rational_str, Rational};
use crate::systems::{lcm, step_budget, Point, SystemPresentation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Proximal,
    AsymptoticToEqual,
    NotProximal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairClassification {
    pub v: String,
    pub x: Point,
    pub y: Point,
    pub verdict: Verdict,
    /// Least `n` with `T^n x = T^n y`.
    pub sync_time: Option<u64>,
    /// Exact minimum of the squared distance over the joint orbit.
    #[serde(with = "opt_rational")]
    pub min_dist_sq: Option<Rational>,
    /// Steps before the pair orbit becomes periodic.
    pub preperiod: u64,
    pub joint_period: u64,
}

impl PairClassification {
    pub fn is_proximal(&self) -> bool {
        self.verdict != Verdict::NotProximal
    }
}

pub(crate) mod opt_rational {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::numeric::{fmt_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        r.as_ref().map(fmt_rational).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| parse_rational(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Preperiod and period of the orbit of `p`.
pub fn orbit_shape(sys: &SystemPresentation, p: &Point, budget: u64) -> Result<(u64, u64)> {
    let mut seen = HashMap::new();
    let mut cur = p.clone();
    for n in 0..=budget {
        if let Some(&m) = seen.get(&cur) {
            return Ok((m, n - m));
        }
        seen.insert(cur.clone(), n);
        cur = sys.successor(&cur)?;
    }
    Err(Error::Budget(format!("orbit of {p} does not close within {budget} steps")))
}

/// Exact proximality verdict for a pair with eventually periodic orbits.
pub fn classify_proximal(sys: &SystemPresentation, x: &Point, y: &Point) -> Result<PairClassification> {
    let budget = step_budget();
    let (px, lx) = orbit_shape(sys, x, budget)?;
    let (py, ly) = orbit_shape(sys, y, budget)?;
    let pre = px.max(py);
    let period = lcm(lx, ly);
    let total = pre
        .checked_add(period)
        .filter(|&t| t <= budget)
        .ok_or_else(|| Error::Budget(format!("joint period {period} exceeds {budget}")))?;
    let (mut a, mut b) = (x.clone(), y.clone());
    let mut min: Option<Rational> = None;
    for n in 0..total {
        if a == b {
            let verdict = if n == 0 {
                Verdict::Proximal
            } else {
                Verdict::AsymptoticToEqual
            };
            return Ok(PairClassification {
                v: "v1".into(),
                x: x.clone(),
                y: y.clone(),
                verdict,
                sync_time: Some(n),
                min_dist_sq: None,
                preperiod: pre,
                joint_period: period,
            });
        }
        let d = sys.dist_sq(&a, &b)?;
        if min.as_ref().is_none_or(|m| d < *m) {
            min = Some(d);
        }
        a = sys.successor(&a)?;
        b = sys.successor(&b)?;
    }
    Ok(PairClassification {
        v: "v1".into(),
        x: x.clone(),
        y: y.clone(),
        verdict: Verdict::NotProximal,
        sync_time: None,
        min_dist_sq: min,
        preperiod: pre,
        joint_period: period,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistalityReport {
    pub v: String,
    pub points: usize,
    pub pairs_total: u64,
    pub pairs_checked: u64,
    pub exhaustive: bool,
    pub violation: Option<PairClassification>,
}

/// Classifies pairs of presented points until a proximal pair of distinct points turns up.
///
/// Beyond `pair_budget` pairs a seeded sample is checked instead.
pub fn distality_scan(
    sys: &SystemPresentation,
    circle_samples: usize,
    pair_budget: u64,
    seed: u64,
) -> Result<DistalityReport> {
    let points = sys.sample_points(circle_samples, 1 << 16)?;
    let n = points.len() as u64;
    let total = n * n.saturating_sub(1) / 2;
    let pairs: Vec<(usize, usize)> = if total <= pair_budget {
        (0..points.len())
            .flat_map(|i| (i + 1..points.len()).map(move |j| (i, j)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<usize> = sample(&mut rng, total as usize, pair_budget as usize).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|k| unrank_pair(k as u64, n)).collect()
    };
    let mut checked = 0;
    for (i, j) in pairs {
        checked += 1;
        let c = classify_proximal(sys, &points[i], &points[j])?;
        if c.is_proximal() {
            return Ok(DistalityReport {
                v: "v1".into(),
                points: points.len(),
                pairs_total: total,
                pairs_checked: checked,
                exhaustive: total <= pair_budget,
                violation: Some(c),
            });
        }
    }
    Ok(DistalityReport {
        v: "v1".into(),
        points: points.len(),
        pairs_total: total,
        pairs_checked: checked,
        exhaustive: total <= pair_budget,
        violation: None,
    })
}

fn unrank_pair(mut k: u64, n: u64) -> (usize, usize) {
    for i in 0..n {
        let row = n - 1 - i;
        if k < row {
            return (i as usize, (i + 1 + k) as usize);
        }
        k -= row;
    }
    unreachable!("pair rank out of range")
}

/// One pattern comparison `rho(T^(n.alpha) x', T^(n.alpha) y')`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCheck {
    pub alpha: Vec<u8>,
    pub time: u64,
    pub left: Point,
    pub right: Point,
    #[serde(with = "rational_str")]
    pub dist_sq: Rational,
}

/// Evidence that `(x, y)` is regionally proximal of order `d` at scale `eps`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionalWitness {
    pub v: String,
    pub system: SystemSpec,
    pub x: Point,
    pub y: Point,
    pub d: u64,
    #[serde(with = "rational_str")]
    pub eps: Rational,
    pub x_approx: Point,
    pub y_approx: Point,
    pub nbar: Vec<u64>,
    pub checks: Vec<PatternCheck>,
}

impl RegionalWitness {
    /// Replays every comparison through `step` and `dist_sq`.
    pub fn verify(&self, sys: &SystemPresentation) -> Result<()> {
        let fail = |msg: String| Err(Error::Construction(msg));
        if self.d == 0 || self.nbar.len() as u64 != self.d {
            return fail("nbar length differs from d".into());
        }
        if self.nbar.contains(&0) {
            return fail("nbar entries must be positive".into());
        }
        let eps_sq = &self.eps * &self.eps;
        if sys.dist_sq(&self.x, &self.x_approx)? >= eps_sq {
            return fail(format!("{} is not within eps of {}", self.x_approx, self.x));
        }
        if sys.dist_sq(&self.y, &self.y_approx)? >= eps_sq {
            return fail(format!("{} is not within eps of {}", self.y_approx, self.y));
        }
        let patterns = nonzero_patterns(self.d as usize);
        if patterns.len() != self.checks.len() {
            return fail("one check per nonzero pattern is required".into());
        }
        for (alpha, c) in patterns.iter().zip(&self.checks) {
            if *alpha != c.alpha {
                return fail(format!("pattern {:?} out of order", c.alpha));
            }
            let t = dot(&self.nbar, alpha);
            if t != c.time {
                return fail(format!("pattern {alpha:?} records time {} instead of {t}", c.time));
            }
            let l = sys.step(&self.x_approx, t)?;
            let r = sys.step(&self.y_approx, t)?;
            if l != c.left || r != c.right {
                return fail(format!("recorded iterates at time {t} do not match"));
            }
            let d2 = sys.dist_sq(&l, &r)?;
            if d2 != c.dist_sq {
                return fail(format!("recorded distance at time {t} does not match"));
            }
            if d2 >= eps_sq {
                return fail(format!("pattern {alpha:?} is not eps-close"));
            }
        }
        Ok(())
    }

    /// Restriction to the first `d` coordinates at a scale `eps >= self.eps`.
    pub fn weaken(&self, d: u64, eps: &Rational) -> Option<RegionalWitness> {
        if d == 0 || d > self.d || *eps < self.eps {
            return None;
        }
        let nbar = self.nbar[..d as usize].to_vec();
        let checks = nonzero_patterns(d as usize)
            .into_iter()
            .map(|alpha| {
                let mut full = alpha.clone();
                full.resize(self.d as usize, 0);
                let src = self.checks.iter().find(|c| c.alpha == full)?;
                Some(PatternCheck {
                    alpha,
                    ..src.clone()
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(RegionalWitness {
            d,
            eps: eps.clone(),
            nbar,
            checks,
            ..self.clone()
        })
    }

    /// The order-1 witness carried by a synchronizing time.
    pub fn from_sync(system: SystemSpec, sys: &SystemPresentation, c: &PairClassification, eps: &Rational) -> Result<RegionalWitness> {
        let n = c
            .sync_time
            .ok_or_else(|| Error::Precondition("the pair never synchronizes".into()))?
            .max(1);
        let l = sys.step(&c.x, n)?;
        let r = sys.step(&c.y, n)?;
        let dist_sq = sys.dist_sq(&l, &r)?;
        Ok(RegionalWitness {
            v: "v1".into(),
            system,
            x: c.x.clone(),
            y: c.y.clone(),
            d: 1,
            eps: eps.clone(),
            x_approx: c.x.clone(),
            y_approx: c.y.clone(),
            nbar: vec![n],
            checks: vec![PatternCheck {
                alpha: vec![1],
                time: n,
                left: l,
                right: r,
                dist_sq,
            }],
        })
    }
}

/// Bounds for [`rp_witness`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    /// Largest entry of `nbar`.
    pub max_step: u64,
    /// Points taken from each fixed circle.
    pub circle_samples: usize,
    /// Largest number of candidate points.
    pub point_limit: usize,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_step: 32,
            circle_samples: 16,
            point_limit: 1 << 14,
        }
    }
}

/// Bounded search for a [`RegionalWitness`].
///
/// Candidate pairs are grouped by the larger piece index of the two
/// approximants; groups are tried in increasing order, and within a group
/// `nbar` runs lexicographically over `[1, max_step]^d`.
pub fn rp_witness(
    system: &SystemSpec,
    sys: &SystemPresentation,
    x: &Point,
    y: &Point,
    d: u64,
    eps: &Rational,
    bounds: &SearchBounds,
) -> Result<Option<RegionalWitness>> {
    if d == 0 || *eps <= Rational::from_integer(0.into()) || bounds.max_step == 0 {
        return Err(Error::Precondition("d, eps and max_step must be positive".into()));
    }
    let build = |xa: &Point, ya: &Point, nbar: Vec<u64>| -> Result<RegionalWitness> {
        let checks = nonzero_patterns(d as usize)
            .into_iter()
            .map(|alpha| {
                let t = dot(&nbar, &alpha);
                let l = sys.step(xa, t)?;
                let r = sys.step(ya, t)?;
                let dist_sq = sys.dist_sq(&l, &r)?;
                Ok(PatternCheck {
                    alpha,
                    time: t,
                    left: l,
                    right: r,
                    dist_sq,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RegionalWitness {
            v: "v1".into(),
            system: system.clone(),
            x: x.clone(),
            y: y.clone(),
            d,
            eps: eps.clone(),
            x_approx: xa.clone(),
            y_approx: ya.clone(),
            nbar,
            checks,
        })
    };
    if x == y {
        return Ok(Some(build(x, y, vec![1; d as usize])?));
    }
    let mut candidates = sys.sample_points(bounds.circle_samples, bounds.point_limit)?;
    for p in [x, y] {
        if !candidates.contains(p) {
            candidates.push(p.clone());
        }
    }
    let near = |c: &Point| -> Result<(bool, bool)> {
        Ok((sys.dist_lt(c, x, eps)?, sys.dist_lt(c, y, eps)?))
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, c) in candidates.iter().enumerate() {
        let (nx, ny) = near(c)?;
        if nx {
            xs.push(k);
        }
        if ny {
            ys.push(k);
        }
    }
    let level = |k: usize| sys.piece_index(&candidates[k]).unwrap_or(usize::MAX);
    let mut groups: std::collections::BTreeMap<usize, Vec<(usize, usize)>> = Default::default();
    for &a in &xs {
        for &b in &ys {
            groups.entry(level(a).max(level(b))).or_default().push((a, b));
        }
    }
    let horizon = d * bounds.max_step;
    let mut orbits: HashMap<usize, Vec<Point>> = HashMap::new();
    let mut orbit = |k: usize| -> Result<Vec<Point>> {
        if let Some(o) = orbits.get(&k) {
            return Ok(o.clone());
        }
        let mut cur = sys.cursor(candidates[k].clone())?;
        let mut o = vec![cur.current().clone()];
        for _ in 0..horizon {
            o.push(cur.advance()?.clone());
        }
        orbits.insert(k, o.clone());
        Ok(o)
    };
    let patterns = nonzero_patterns(d as usize);
    let eps_sq = eps * eps;
    for pairs in groups.values() {
        let orbs: Vec<(Vec<Point>, Vec<Point>)> = pairs
            .iter()
            .map(|&(a, b)| Ok((orbit(a)?, orbit(b)?)))
            .collect::<Result<_>>()?;
        let mut nbar = vec![1u64; d as usize];
        loop {
            let times: Vec<usize> = patterns.iter().map(|a| dot(&nbar, a) as usize).collect();
            for (k, (oa, ob)) in orbs.iter().enumerate() {
                let mut ok = true;
                for &t in &times {
                    if sys.dist_sq(&oa[t], &ob[t])? >= eps_sq {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    let (a, b) = pairs[k];
                    return Ok(Some(build(&candidates[a], &candidates[b], nbar)?));
                }
            }
            if !next_lex(&mut nbar, bounds.max_step) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advances `v` lexicographically over `[1, max]^len`; false after the last vector.
pub(crate) fn next_lex(v: &mut [u64], max: u64) -> bool {
    for k in (0..v.len()).rev() {
        if v[k] < max {
            v[k] += 1;
            for w in &mut v[k + 1..] {
                *w = 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::{
        build_piece, claim1_as_regional, point_a, point_b, verify_claim1, CounterexampleTruncation,
    };
    use crate::numeric::{int, ratio, CylPoint};
    use crate::systems::{FixedSet, OrbitTable, Piece};

    fn cyl(x: (i64, i64), y: (i64, i64)) -> Point {
        Point::Cyl(CylPoint::from_ratios(x, y).unwrap())
    }

    #[test]
    fn equal_points_are_proximal() {
        let x = CounterexampleTruncation::new(2).unwrap();
        let p = Point::Cyl(x.piece(1).unwrap().b());
        let c = classify_proximal(x.system(), &p, &p).unwrap();
        assert_eq!(c.verdict, Verdict::Proximal);
        assert_eq!(c.sync_time, Some(0));
    }

    #[test]
    fn distinct_points_of_i1_are_not_proximal() {
        let x = CounterexampleTruncation::new(1).unwrap();
        let sys = x.system();
        let piece = x.piece(1).unwrap();
        let b = Point::Cyl(piece.b());
        let c = Point::Cyl(piece.c());
        let r = classify_proximal(sys, &b, &c).unwrap();
        assert_eq!(r.verdict, Verdict::NotProximal);
        assert_eq!(r.joint_period, 9);
        // oracle: walk 9 shifts by hand
        let mut min = None::<Rational>;
        let (mut p, mut q) = (b.clone(), c.clone());
        for _ in 0..9 {
            let d = sys.dist_sq(&p, &q).unwrap();
            if min.as_ref().is_none_or(|m| d < *m) {
                min = Some(d);
            }
            p = sys.successor(&p).unwrap();
            q = sys.successor(&q).unwrap();
        }
        assert_eq!(r.min_dist_sq, min);
        assert!(r.min_dist_sq.unwrap() > int(0));
    }

    #[test]
    fn circle_point_and_i1() {
        let x = CounterexampleTruncation::new(1).unwrap();
        let circle = cyl((0, 1), (1, 2));
        let b1 = Point::Cyl(x.piece(1).unwrap().b());
        let r = classify_proximal(x.system(), &circle, &b1).unwrap();
        assert_eq!(r.verdict, Verdict::NotProximal);
        assert_eq!(r.joint_period, 9);
        assert!(r.min_dist_sq.unwrap() >= ratio(9, 16));
    }

    #[test]
    fn verdict_is_shift_invariant() {
        let x = CounterexampleTruncation::new(2).unwrap();
        let sys = x.system();
        let pts = sys.sample_points(4, 100).unwrap();
        for a in pts.iter().take(12) {
            for b in pts.iter().skip(20).take(6) {
                let r = classify_proximal(sys, a, b).unwrap();
                let s = classify_proximal(sys, &sys.successor(a).unwrap(), &sys.successor(b).unwrap()).unwrap();
                assert_eq!(r.verdict, s.verdict);
                assert_eq!(r.min_dist_sq, s.min_dist_sq);
            }
        }
    }

    fn merging_system() -> SystemPresentation {
        let succ = [("#0", "#2"), ("#1", "#2"), ("#2", "#3"), ("#3", "#2")]
            .iter()
            .map(|(a, b)| (a.parse().unwrap(), b.parse().unwrap()))
            .collect();
        SystemPresentation::new(vec![Piece::Table(OrbitTable::new("merge", succ))]).unwrap()
    }

    #[test]
    fn merging_pair_is_asymptotic() {
        let sys = merging_system();
        let r = classify_proximal(&sys, &Point::Atom(0), &Point::Atom(1)).unwrap();
        assert_eq!(r.verdict, Verdict::AsymptoticToEqual);
        assert_eq!(r.sync_time, Some(1));
        let w = RegionalWitness::from_sync(
            SystemSpec::Rotation { modulus: 1 },
            &sys,
            &r,
            &ratio(1, 2),
        )
        .unwrap();
        w.verify(&sys).unwrap();
    }

    #[test]
    fn distality_scans() {
        let x = CounterexampleTruncation::new(2).unwrap();
        let rep = distality_scan(x.system(), 8, 1 << 20, 0).unwrap();
        assert!(rep.exhaustive && rep.violation.is_none());
        assert_eq!(rep.points, 9 + 17 + 8);
        let rep = distality_scan(&merging_system(), 0, 100, 0).unwrap();
        assert!(rep.violation.is_some());
        let rep = distality_scan(&SystemPresentation::empty(), 0, 100, 0).unwrap();
        assert_eq!(rep.pairs_total, 0);
        assert!(rep.violation.is_none());
        let sampled = distality_scan(x.system(), 8, 50, 7).unwrap();
        assert_eq!(sampled.pairs_checked, 50);
        assert_eq!(sampled, distality_scan(x.system(), 8, 50, 7).unwrap());
    }

    #[test]
    fn pair_unranking_covers_all_pairs() {
        let n = 7;
        let all: Vec<_> = (0..21).map(|k| unrank_pair(k, n)).collect();
        let want: Vec<_> = (0..7usize).flat_map(|i| (i + 1..7).map(move |j| (i, j))).collect();
        assert_eq!(all, want);
    }

    #[test]
    fn trivial_witness_for_diagonal() {
        let spec = SystemSpec::Rotation { modulus: 5 };
        let sys = spec.build().unwrap();
        let w = rp_witness(&spec, &sys, &Point::Atom(2), &Point::Atom(2), 3, &ratio(1, 10), &SearchBounds::default())
            .unwrap()
            .unwrap();
        w.verify(&sys).unwrap();
        assert_eq!(w.checks.len(), 7);
    }

    #[test]
    fn separated_fixed_points_have_no_witness() {
        let pts = [cyl((0, 1), (0, 1)), cyl((0, 1), (1, 1))];
        let sys = SystemPresentation::new(vec![Piece::Fixed(FixedSet::Points(pts.iter().cloned().collect()))]).unwrap();
        let spec = SystemSpec::Explicit {
            tables: vec![],
            cycles: vec![],
            fixed: pts.to_vec(),
        };
        let bounds = SearchBounds {
            max_step: 6,
            ..SearchBounds::default()
        };
        assert_eq!(rp_witness(&spec, &sys, &pts[0], &pts[1], 1, &ratio(1, 4), &bounds).unwrap(), None);
        assert_eq!(rp_witness(&spec, &sys, &pts[0], &pts[1], 2, &ratio(1, 4), &bounds).unwrap(), None);
    }

    #[test]
    fn claim1_witness_lifts_and_agrees_with_search() {
        let claim = verify_claim1(2, &ratio(1, 2), 10_000).unwrap();
        let lifted = claim1_as_regional(&claim).unwrap();
        let spec = SystemSpec::Counterexample { levels: 5 };
        let sys = spec.build().unwrap();
        lifted.verify(&sys).unwrap();
        assert_eq!(lifted.x_approx, Point::Cyl(build_piece(5).unwrap().a()));
        let found = rp_witness(
            &spec,
            &sys,
            &Point::Cyl(point_a()),
            &Point::Cyl(point_b()),
            2,
            &ratio(1, 2),
            &SearchBounds {
                max_step: 12,
                circle_samples: 4,
                point_limit: 1 << 12,
            },
        )
        .unwrap()
        .unwrap();
        found.verify(&sys).unwrap();
        for w in [&lifted, &found] {
            let weaker = w.weaken(1, &ratio(3, 4)).unwrap();
            weaker.verify(&sys).unwrap();
            assert!(w.weaken(3, &ratio(1, 2)).is_none());
            assert!(w.weaken(1, &ratio(1, 4)).is_none());
        }
    }

    #[test]
    fn tampered_witness_fails() {
        let claim = verify_claim1(1, &ratio(1, 2), 10_000).unwrap();
        let mut w = claim1_as_regional(&claim).unwrap();
        let sys = w.system.build().unwrap();
        w.verify(&sys).unwrap();
        w.checks[0].dist_sq = ratio(1, 100);
        assert!(w.verify(&sys).is_err());
    }

    #[test]
    fn lexicographic_order() {
        let mut v = vec![1, 1];
        let mut seen = vec![v.clone()];
        while next_lex(&mut v, 3) {
            seen.push(v.clone());
        }
        assert_eq!(seen.len(), 9);
        assert_eq!(seen[3], vec![2, 1]);
    }
}
