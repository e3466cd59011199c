//! Covers, sequence-entropy counts and independence sets on finite systems.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::catalog::SystemSpec;
use crate::error::{Error, Result};
use crate::numeric::{rational_str, Rational};
use crate::relations::orbit_shape;
use crate::systems::{lcm, step_budget, Point, SystemPresentation};
use crate::zplus::{product_syndetic, ts_intersect_tree, Cube, SyndeticPresentation, TsPresentation};

const POINT_LIMIT: usize = 1 << 16;

/// An enumerated system with points indexed `0..len`.
#[derive(Clone, Debug)]
pub struct FiniteSystem {
    points: Vec<Point>,
    index: HashMap<Point, usize>,
    succ: Vec<usize>,
    preperiod: u64,
    period: u64,
}

impl FiniteSystem {
    pub fn new(sys: &SystemPresentation) -> Result<Self> {
        let points = sys.enumerate(POINT_LIMIT)?;
        let index: HashMap<Point, usize> = points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let succ = points
            .iter()
            .map(|p| {
                let q = sys.successor(p)?;
                index
                    .get(&q)
                    .copied()
                    .ok_or_else(|| Error::InvalidSystem(format!("{p} maps to unlisted {q}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut preperiod = 0;
        let mut period = 1u64;
        for i in 0..points.len() {
            let mut seen = HashMap::new();
            let mut cur = i;
            let mut n = 0u64;
            while !seen.contains_key(&cur) {
                seen.insert(cur, n);
                cur = succ[cur];
                n += 1;
            }
            let start = seen[&cur];
            preperiod = preperiod.max(start);
            period = lcm(period, n - start);
        }
        Ok(FiniteSystem {
            points,
            index,
            succ,
            preperiod,
            period,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn index_of(&self, p: &Point) -> Result<usize> {
        self.index.get(p).copied().ok_or_else(|| Error::UnknownPoint(p.to_string()))
    }

    /// Every orbit is periodic from this step on.
    pub fn preperiod(&self) -> u64 {
        self.preperiod
    }

    /// Common period of all cycles.
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn full(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.len());
        s.insert_range(..);
        s
    }

    pub fn set_of(&self, pts: &[Point]) -> Result<FixedBitSet> {
        let mut s = FixedBitSet::with_capacity(self.len());
        for p in pts {
            s.insert(self.index_of(p)?);
        }
        Ok(s)
    }

    /// `{z : d(z, center) < radius}`.
    pub fn ball(&self, sys: &SystemPresentation, center: &Point, radius: &Rational) -> Result<FixedBitSet> {
        let mut s = FixedBitSet::with_capacity(self.len());
        for (i, p) in self.points.iter().enumerate() {
            if sys.dist_lt(p, center, radius)? {
                s.insert(i);
            }
        }
        Ok(s)
    }

    /// `T^n` as an index map.
    pub fn power(&self, n: u64) -> Vec<usize> {
        let mut result: Vec<usize> = (0..self.len()).collect();
        let mut base = self.succ.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.iter().map(|&i| base[i]).collect();
            }
            base = base.iter().map(|&i| base[i]).collect();
            e >>= 1;
        }
        result
    }

    /// `T^(-n) U`.
    pub fn pullback(&self, map: &[usize], set: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.len());
        for (i, &j) in map.iter().enumerate() {
            if set.contains(j) {
                out.insert(i);
            }
        }
        out
    }
}

/// `T^t` for `t = 0, 1, ...`, built on demand.
struct Powers<'a> {
    fs: &'a FiniteSystem,
    maps: Vec<Vec<usize>>,
}

impl<'a> Powers<'a> {
    fn new(fs: &'a FiniteSystem) -> Self {
        Powers {
            fs,
            maps: vec![(0..fs.len()).collect()],
        }
    }

    fn get(&mut self, t: u64) -> &[usize] {
        let t = t as usize;
        while self.maps.len() <= t {
            let last = self.maps.last().expect("nonempty");
            let next = last.iter().map(|&i| self.fs.succ[i]).collect();
            self.maps.push(next);
        }
        &self.maps[t]
    }
}

/// A finite cover by explicit point sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    elements: Vec<FixedBitSet>,
}

impl Cover {
    pub fn new(fs: &FiniteSystem, elements: Vec<FixedBitSet>) -> Result<Self> {
        let mut union = FixedBitSet::with_capacity(fs.len());
        for (k, e) in elements.iter().enumerate() {
            if e.is_clear() {
                return Err(Error::Precondition(format!("cover element {k} is empty")));
            }
            union.union_with(e);
        }
        if union.count_ones(..) != fs.len() {
            return Err(Error::Precondition("cover elements do not cover the space".into()));
        }
        Ok(Cover { elements })
    }

    pub fn from_points(fs: &FiniteSystem, sets: &[Vec<Point>]) -> Result<Self> {
        let elements = sets.iter().map(|s| fs.set_of(s)).collect::<Result<_>>()?;
        Cover::new(fs, elements)
    }

    pub fn elements(&self) -> &[FixedBitSet] {
        &self.elements
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    Exact,
    /// Greedy only; the count is an upper bound.
    GreedyOnly,
}

/// The join of pulled-back covers and its minimal subcover size.
#[derive(Clone, Debug)]
pub struct JoinResult {
    pub cells: Vec<FixedBitSet>,
    pub minimal: usize,
    /// False when `minimal` is only a greedy upper bound.
    pub exact: bool,
    pub greedy: usize,
    /// Indices into `cells` of one subcover of size `minimal`.
    pub chosen: Vec<usize>,
}

const JOIN_BUDGET: usize = 1 << 26;

fn refine(fs: &FiniteSystem, powers: &mut Powers, cells: Vec<FixedBitSet>, cover: &Cover, t: u64) -> Vec<FixedBitSet> {
    let map = powers.get(t).to_vec();
    let pulled: Vec<FixedBitSet> = cover.elements.iter().map(|u| fs.pullback(&map, u)).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in &cells {
        for u in &pulled {
            let mut x = c.clone();
            x.intersect_with(u);
            if !x.is_clear() && seen.insert(x.clone()) {
                out.push(x);
            }
        }
    }
    out
}

/// `N(T^(-t_1) U v ... v T^(-t_n) U)` together with the join cells.
pub fn join_and_count(fs: &FiniteSystem, cover: &Cover, times: &[u64], mode: CountMode) -> Result<JoinResult> {
    if times.is_empty() {
        return Err(Error::Precondition("times must be nonempty".into()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("times must be strictly increasing".into()));
    }
    let mut powers = Powers::new(fs);
    let mut cells = vec![fs.full()];
    for &t in times {
        cells = refine(fs, &mut powers, cells, cover, t);
    }
    count_cells(fs, cells, mode)
}

fn count_cells(fs: &FiniteSystem, cells: Vec<FixedBitSet>, mode: CountMode) -> Result<JoinResult> {
    if mode == CountMode::Exact && cells.len().saturating_mul(fs.len()) > JOIN_BUDGET {
        return Err(Error::Budget(format!(
            "{} cells over {} points; use greedy-only mode",
            cells.len(),
            fs.len()
        )));
    }
    let (greedy, greedy_pick) = greedy_cover(fs.len(), &cells);
    let (minimal, chosen, exact) = match mode {
        CountMode::GreedyOnly => (greedy, greedy_pick, false),
        CountMode::Exact => {
            let (m, c) = exact_cover(fs.len(), &cells, greedy, greedy_pick)?;
            (m, c, true)
        }
    };
    Ok(JoinResult {
        cells,
        minimal,
        exact,
        greedy,
        chosen,
    })
}

fn greedy_cover(n: usize, cells: &[FixedBitSet]) -> (usize, Vec<usize>) {
    let mut uncovered = FixedBitSet::with_capacity(n);
    uncovered.insert_range(..);
    let mut pick = Vec::new();
    while !uncovered.is_clear() {
        let (best, _) = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.intersection_count(&uncovered)))
            .max_by_key(|&(i, k)| (k, std::cmp::Reverse(i)))
            .expect("cells cover the space");
        uncovered.difference_with(&cells[best]);
        pick.push(best);
    }
    (pick.len(), pick)
}

fn exact_cover(n: usize, cells: &[FixedBitSet], incumbent: usize, pick: Vec<usize>) -> Result<(usize, Vec<usize>)> {
    // cells strictly inside another cell never help
    let mut keep: Vec<usize> = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        let dominated = cells
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && c.is_subset(d) && (c != d || j < i));
        if !dominated {
            keep.push(i);
        }
    }
    let by_point: Vec<Vec<usize>> = (0..n)
        .map(|p| keep.iter().copied().filter(|&i| cells[i].contains(p)).collect())
        .collect();
    let max_size = keep.iter().map(|&i| cells[i].count_ones(..)).max().unwrap_or(1).max(1);
    struct Search<'a> {
        cells: &'a [FixedBitSet],
        by_point: Vec<Vec<usize>>,
        max_size: usize,
        best: usize,
        best_pick: Vec<usize>,
        nodes: u64,
        budget: u64,
    }
    impl Search<'_> {
        fn go(&mut self, uncovered: &FixedBitSet, chosen: &mut Vec<usize>) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::Budget("set cover search exceeded the step budget".into()));
            }
            let left = uncovered.count_ones(..);
            if left == 0 {
                if chosen.len() < self.best {
                    self.best = chosen.len();
                    self.best_pick = chosen.clone();
                }
                return Ok(());
            }
            if chosen.len() + left.div_ceil(self.max_size) >= self.best {
                return Ok(());
            }
            let p = uncovered
                .ones()
                .min_by_key(|&p| self.by_point[p].len())
                .expect("nonempty");
            for i in self.by_point[p].clone() {
                let mut next = uncovered.clone();
                next.difference_with(&self.cells[i]);
                chosen.push(i);
                self.go(&next, chosen)?;
                chosen.pop();
            }
            Ok(())
        }
    }
    let mut s = Search {
        cells,
        by_point,
        max_size,
        best: incumbent,
        best_pick: pick,
        nodes: 0,
        budget: step_budget(),
    };
    let mut all = FixedBitSet::with_capacity(n);
    all.insert_range(..);
    s.go(&all, &mut Vec::new())?;
    Ok((s.best, s.best_pick))
}

/// `(n, N_n, log(N_n) / n)` for every prefix of the sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub n: usize,
    pub count: usize,
    pub exact: bool,
    pub value: f64,
}

pub fn seq_entropy_estimate(fs: &FiniteSystem, cover: &Cover, seq: &[u64], mode: CountMode) -> Result<Vec<EntropyPoint>> {
    if seq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("sequence must be strictly increasing".into()));
    }
    let mut powers = Powers::new(fs);
    let mut cells = vec![fs.full()];
    let mut out = Vec::new();
    for (k, &t) in seq.iter().enumerate() {
        cells = refine(fs, &mut powers, cells, cover, t);
        let r = count_cells(fs, cells.clone(), mode)?;
        let n = k + 1;
        out.push(EntropyPoint {
            n,
            count: r.minimal,
            exact: r.exact,
            value: (r.minimal as f64).ln() / n as f64,
        });
    }
    Ok(out)
}

/// Every element misses some tuple point (closures taken within the presented set).
pub fn is_admissible(cover: &[FixedBitSet], tuple: &[usize]) -> bool {
    cover.iter().all(|e| tuple.iter().any(|&p| !e.contains(p)))
}

/// A neighbourhood given as an open ball or as an explicit point set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Neighborhood {
    Ball {
        center: Point,
        #[serde(with = "rational_str")]
        radius: Rational,
    },
    Set {
        points: Vec<Point>,
    },
}

impl Neighborhood {
    pub fn contains(&self, sys: &SystemPresentation, p: &Point) -> Result<bool> {
        match self {
            Neighborhood::Ball { center, radius } => sys.dist_lt(p, center, radius),
            Neighborhood::Set { points } => Ok(points.contains(p)),
        }
    }

    pub fn bitset(&self, fs: &FiniteSystem, sys: &SystemPresentation) -> Result<FixedBitSet> {
        match self {
            Neighborhood::Ball { center, radius } => fs.ball(sys, center, radius),
            Neighborhood::Set { points } => fs.set_of(points),
        }
    }
}

/// All patterns in `{0..n-1}^k`, lexicographic.
pub fn all_patterns(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..n).map(move |u| {
                    let mut q = p.clone();
                    q.push(u);
                    q
                })
            })
            .collect();
    }
    out
}

/// Times found by [`independence_search`] and one point per pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchHit {
    pub times: Vec<u64>,
    /// Witness indices for the patterns of [`all_patterns`], in that order.
    pub witnesses: Vec<usize>,
}

/// Depth-first search for `t_1 < ... < t_k <= horizon` realizing every pattern.
///
/// Each level keeps one feasible set per pattern prefix; a time is dropped as
/// soon as some prefix set becomes empty.
pub fn independence_search(fs: &FiniteSystem, neighborhoods: &[FixedBitSet], k: usize, horizon: u64) -> Result<Option<SearchHit>> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    if neighborhoods.is_empty() {
        return Err(Error::Precondition("no neighbourhoods".into()));
    }
    let n = neighborhoods.len();
    if (n as u128).pow(k as u32) > 1 << 22 {
        return Err(Error::Budget(format!("{n}^{k} patterns")));
    }
    let mut powers = Powers::new(fs);
    let mut pulled: Vec<Vec<FixedBitSet>> = Vec::new();
    for t in 0..=horizon {
        let map = powers.get(t).to_vec();
        pulled.push(neighborhoods.iter().map(|u| fs.pullback(&map, u)).collect());
    }
    fn dfs(
        pulled: &[Vec<FixedBitSet>],
        layer: &[FixedBitSet],
        from: u64,
        depth: usize,
        k: usize,
        times: &mut Vec<u64>,
    ) -> Option<Vec<FixedBitSet>> {
        if depth == k {
            return Some(layer.to_vec());
        }
        for t in from..pulled.len() as u64 {
            let mut next = Vec::with_capacity(layer.len() * pulled[0].len());
            let mut ok = true;
            'fill: for f in layer {
                for u in &pulled[t as usize] {
                    let mut x = f.clone();
                    x.intersect_with(u);
                    if x.is_clear() {
                        ok = false;
                        break 'fill;
                    }
                    next.push(x);
                }
            }
            if !ok {
                continue;
            }
            times.push(t);
            if let Some(done) = dfs(pulled, &next, t + 1, depth + 1, k, times) {
                return Some(done);
            }
            times.pop();
        }
        None
    }
    let mut times = Vec::new();
    Ok(dfs(&pulled, &[fs.full()], 0, 0, k, &mut times).map(|sets| SearchHit {
        times,
        witnesses: sets.iter().map(|s| s.minimum().expect("nonempty")).collect(),
    }))
}

/// Naive check used as an oracle: tries every time tuple and every pattern directly.
pub fn exhaustive_independence(
    sys: &SystemPresentation,
    neighborhoods: &[Neighborhood],
    k: usize,
    horizon: u64,
) -> Result<Option<Vec<u64>>> {
    let points = sys.enumerate(POINT_LIMIT)?;
    let n = neighborhoods.len();
    // member[t][z] = set of neighbourhood indices containing T^t z
    let mut member = Vec::new();
    let mut cur = points.clone();
    for _ in 0..=horizon {
        let row = cur
            .iter()
            .map(|p| {
                (0..n)
                    .map(|u| neighborhoods[u].contains(sys, p))
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        member.push(row);
        cur = cur.iter().map(|p| sys.successor(p)).collect::<Result<_>>()?;
    }
    let patterns = all_patterns(n, k);
    let mut times: Vec<u64> = (0..k as u64).collect();
    if k as u64 > horizon + 1 {
        return Ok(None);
    }
    loop {
        let ok = patterns.iter().all(|s| {
            (0..points.len()).any(|z| times.iter().zip(s).all(|(&t, &u)| member[t as usize][z][u]))
        });
        if ok {
            return Ok(Some(times));
        }
        // next combination of k values from 0..=horizon
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
            if times[i] < horizon - (k - 1 - i) as u64 {
                times[i] += 1;
                for j in i + 1..k {
                    times[j] = times[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternWitness {
    /// One-based neighbourhood indices.
    pub pattern: Vec<usize>,
    pub point: Point,
}

/// `U_1..U_n`, times `t_1 < ... < t_k`, and a point in `T^(-t_1) U_s(1) n ... n T^(-t_k) U_s(k)` for every `s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceCertificate {
    pub v: String,
    pub system: SystemSpec,
    pub neighborhoods: Vec<Neighborhood>,
    pub times: Vec<u64>,
    pub witnesses: Vec<PatternWitness>,
}

impl IndependenceCertificate {
    fn from_hit(system: &SystemSpec, fs: &FiniteSystem, neighborhoods: Vec<Neighborhood>, hit: SearchHit) -> Self {
        let k = hit.times.len();
        let witnesses = all_patterns(neighborhoods.len(), k)
            .into_iter()
            .zip(&hit.witnesses)
            .map(|(s, &z)| PatternWitness {
                pattern: s.iter().map(|u| u + 1).collect(),
                point: fs.point(z).clone(),
            })
            .collect();
        IndependenceCertificate {
            v: "v1".into(),
            system: system.clone(),
            neighborhoods,
            times: hit.times,
            witnesses,
        }
    }

    /// Uses only `step` and neighbourhood membership.
    pub fn verify(&self) -> Result<()> {
        let sys = self.system.build()?;
        let fail = |m: String| Err(Error::Construction(m));
        if self.times.is_empty() || self.times.windows(2).any(|w| w[0] >= w[1]) {
            return fail("times must be nonempty and strictly increasing".into());
        }
        let n = self.neighborhoods.len();
        let want = all_patterns(n, self.times.len());
        if want.len() != self.witnesses.len() {
            return fail(format!("{} witnesses for {} patterns", self.witnesses.len(), want.len()));
        }
        for (s, w) in want.iter().zip(&self.witnesses) {
            let one_based: Vec<usize> = s.iter().map(|u| u + 1).collect();
            if one_based != w.pattern {
                return fail(format!("pattern {:?} out of order", w.pattern));
            }
            if !sys.contains(&w.point) {
                return Err(Error::UnknownPoint(w.point.to_string()));
            }
            for (&t, &u) in self.times.iter().zip(s) {
                let q = sys.step(&w.point, t)?;
                if !self.neighborhoods[u].contains(&sys, &q)? {
                    return fail(format!("witness {} for {:?} leaves U_{} at time {t}", w.point, w.pattern, u + 1));
                }
            }
        }
        Ok(())
    }

    /// Restriction to the neighbourhoods listed in `keep` (zero-based), in that order.
    pub fn project(&self, keep: &[usize]) -> Result<IndependenceCertificate> {
        if keep.is_empty() || keep.iter().any(|&u| u >= self.neighborhoods.len()) {
            return Err(Error::Precondition("bad sub-collection".into()));
        }
        let witnesses = all_patterns(keep.len(), self.times.len())
            .into_iter()
            .map(|s| {
                let full: Vec<usize> = s.iter().map(|&u| keep[u] + 1).collect();
                let w = self
                    .witnesses
                    .iter()
                    .find(|w| w.pattern == full)
                    .expect("every pattern has a witness");
                PatternWitness {
                    pattern: s.iter().map(|u| u + 1).collect(),
                    point: w.point.clone(),
                }
            })
            .collect();
        Ok(IndependenceCertificate {
            neighborhoods: keep.iter().map(|&u| self.neighborhoods[u].clone()).collect(),
            witnesses,
            ..self.clone()
        })
    }
}

/// Outcome of a search, kept even when nothing was found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceSearchReport {
    pub v: String,
    pub system: SystemSpec,
    pub neighborhoods: Vec<Neighborhood>,
    pub k: usize,
    pub horizon: u64,
    pub certificate: Option<IndependenceCertificate>,
}

/// Builds the system, runs [`independence_search`] and packages the result.
pub fn search_certificate(system: &SystemSpec, neighborhoods: &[Neighborhood], k: usize, horizon: u64) -> Result<IndependenceSearchReport> {
    let sys = system.build()?;
    let fs = FiniteSystem::new(&sys)?;
    let sets = neighborhoods
        .iter()
        .map(|u| u.bitset(&fs, &sys))
        .collect::<Result<Vec<_>>>()?;
    let hit = independence_search(&fs, &sets, k, horizon)?;
    Ok(IndependenceSearchReport {
        v: "v1".into(),
        system: system.clone(),
        neighborhoods: neighborhoods.to_vec(),
        k,
        horizon,
        certificate: hit.map(|h| IndependenceCertificate::from_hit(system, &fs, neighborhoods.to_vec(), h)),
    })
}

/// `{sum eps_i p_i : eps in {0,1}^m} \ {0}` as a sorted set.
pub fn ip_set(generators: &[u64]) -> Vec<u64> {
    let mut sums = std::collections::BTreeSet::new();
    for mask in 1u32..(1 << generators.len()) {
        let s = (0..generators.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| generators[i])
            .sum();
        sums.insert(s);
    }
    sums.into_iter().filter(|&s| s != 0).collect()
}

/// Witnesses for every `s in {1,2}^F`; a subset `J` of `F` reuses the witness of any extension of `s|J`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpIndependenceCertificate {
    pub v: String,
    pub system: SystemSpec,
    pub a1: Neighborhood,
    pub a2: Neighborhood,
    pub generators: Vec<u64>,
    pub ip_set: Vec<u64>,
    pub witnesses: Vec<PatternWitness>,
}

/// A pattern on a prefix `J` of `F` with empty intersection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpFailure {
    pub v: String,
    pub system: SystemSpec,
    pub a1: Neighborhood,
    pub a2: Neighborhood,
    pub generators: Vec<u64>,
    pub ip_set: Vec<u64>,
    pub subset: Vec<u64>,
    /// Entries in `{1, 2}`.
    pub pattern: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IpOutcome {
    Certified(IpIndependenceCertificate),
    Failed(IpFailure),
}

pub const DEFAULT_IP_CAP: usize = 4;

/// Checks `(A_1, A_2)` against the finite IP-set of `generators`.
///
/// Patterns on all of `F` are propagated prefix by prefix; the first prefix
/// pattern with an empty intersection is reported.
pub fn ip_independence_check(
    system: &SystemSpec,
    a1: &Neighborhood,
    a2: &Neighborhood,
    generators: &[u64],
    cap: usize,
) -> Result<IpOutcome> {
    if generators.is_empty() || generators.contains(&0) {
        return Err(Error::Precondition("generators must be positive and m >= 1".into()));
    }
    if generators.len() > cap {
        return Err(Error::Budget(format!("m = {} exceeds the cap {cap}", generators.len())));
    }
    let sys = system.build()?;
    let fs = FiniteSystem::new(&sys)?;
    let sets = [a1.bitset(&fs, &sys)?, a2.bitset(&fs, &sys)?];
    let f = ip_set(generators);
    let mut layer = vec![fs.full()];
    for (j, &t) in f.iter().enumerate() {
        let map = fs.power(t);
        let pulled = [fs.pullback(&map, &sets[0]), fs.pullback(&map, &sets[1])];
        let mut next = Vec::with_capacity(layer.len() * 2);
        for (idx, cell) in layer.iter().enumerate() {
            for (u, p) in pulled.iter().enumerate() {
                let mut x = cell.clone();
                x.intersect_with(p);
                if x.is_clear() {
                    let mut pattern: Vec<u8> = (0..j).rev().map(|b| (idx >> b & 1) as u8 + 1).collect();
                    pattern.push(u as u8 + 1);
                    return Ok(IpOutcome::Failed(IpFailure {
                        v: "v1".into(),
                        system: system.clone(),
                        a1: a1.clone(),
                        a2: a2.clone(),
                        generators: generators.to_vec(),
                        ip_set: f.clone(),
                        subset: f[..=j].to_vec(),
                        pattern,
                    }));
                }
                next.push(x);
            }
        }
        layer = next;
    }
    let witnesses = layer
        .iter()
        .enumerate()
        .map(|(idx, cell)| PatternWitness {
            pattern: (0..f.len()).rev().map(|b| (idx >> b & 1) + 1).collect(),
            point: fs.point(cell.minimum().expect("nonempty")).clone(),
        })
        .collect();
    Ok(IpOutcome::Certified(IpIndependenceCertificate {
        v: "v1".into(),
        system: system.clone(),
        a1: a1.clone(),
        a2: a2.clone(),
        generators: generators.to_vec(),
        ip_set: f,
        witnesses,
    }))
}

impl IpIndependenceCertificate {
    pub fn verify(&self) -> Result<()> {
        let sys = self.system.build()?;
        if ip_set(&self.generators) != self.ip_set {
            return Err(Error::Construction("IP-set does not match the generators".into()));
        }
        let want = all_patterns(2, self.ip_set.len());
        if want.len() != self.witnesses.len() {
            return Err(Error::Construction("one witness per pattern on F is required".into()));
        }
        let sets = [&self.a1, &self.a2];
        for (s, w) in want.iter().zip(&self.witnesses) {
            if w.pattern != s.iter().map(|u| u + 1).collect::<Vec<_>>() {
                return Err(Error::Construction(format!("pattern {:?} out of order", w.pattern)));
            }
            if !sys.contains(&w.point) {
                return Err(Error::UnknownPoint(w.point.to_string()));
            }
            for (&t, &u) in self.ip_set.iter().zip(s) {
                if !sets[u].contains(&sys, &sys.step(&w.point, t)?)? {
                    return Err(Error::Construction(format!("witness for {:?} fails at time {t}", w.pattern)));
                }
            }
        }
        Ok(())
    }
}

impl IpFailure {
    /// Confirms by brute force that no point realizes the pattern on the subset.
    pub fn verify(&self) -> Result<()> {
        let sys = self.system.build()?;
        if ip_set(&self.generators) != self.ip_set || !self.ip_set.starts_with(&self.subset) {
            return Err(Error::Construction("subset is not a prefix of the IP-set".into()));
        }
        if self.pattern.len() != self.subset.len() || self.pattern.iter().any(|&u| u != 1 && u != 2) {
            return Err(Error::Construction("malformed pattern".into()));
        }
        let sets = [&self.a1, &self.a2];
        for z in sys.enumerate(POINT_LIMIT)? {
            let mut all = true;
            for (&t, &u) in self.subset.iter().zip(&self.pattern) {
                if !sets[u as usize - 1].contains(&sys, &sys.step(&z, t)?)? {
                    all = false;
                    break;
                }
            }
            if all {
                return Err(Error::Construction(format!("{z} realizes the pattern")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Through the folded filter intersection of the `B_s`.
    Filter,
    /// Directly from the exact periodic sets `B_s`.
    ExactIntersection,
}

/// Output of [`se_tuple_witness_from_fixed_points`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeTupleWitness {
    pub v: String,
    pub l: usize,
    pub n_steps: u64,
    #[serde(with = "rational_str")]
    pub delta_sq: Rational,
    #[serde(with = "rational_str")]
    pub delta_prime_sq: Rational,
    /// Gap of `N(y, V_i)` for each fixed point.
    pub return_gaps: Vec<u64>,
    pub route: Route,
    /// Why the filter route was abandoned, when it was.
    pub filter_failure: Option<String>,
    pub nbar: Vec<u64>,
    pub certificate: IndependenceCertificate,
}

/// Builds an independence certificate for fixed points `x_1..x_n` from a periodic `y`.
///
/// `U_i = B(x_i, radius_i)` and `delta = min radius_i`. `delta'` is the exact
/// modulus of continuity of `T, ..., T^N` at `delta`, capped by `delta`.
/// The sets `A_s = prod N(y, V_s(j))` with `V_i = B(x_i, delta')` generate
/// `B_s` at cube sizes up to `N`; above `N` the exact periodic translates are
/// used. The `B_s` are intersected by the filter construction; if a `B_s`
/// turns out not to be thickly syndetic in this finite system, the vector is
/// taken from the exact intersection instead and the route says so.
pub fn se_tuple_witness_from_fixed_points(
    system: &SystemSpec,
    fixed: &[Point],
    y: &Point,
    radii: &[Rational],
    l: usize,
    n_steps: u64,
) -> Result<SeTupleWitness> {
    if fixed.is_empty() || fixed.len() != radii.len() {
        return Err(Error::Precondition("one radius per fixed point is required".into()));
    }
    if l == 0 {
        return Err(Error::Precondition("l must be positive".into()));
    }
    if radii.iter().any(|r| *r <= Rational::from_integer(0.into())) {
        return Err(Error::Precondition("radii must be positive".into()));
    }
    let sys = system.build()?;
    for x in fixed {
        if sys.successor(x)? != *x {
            return Err(Error::Precondition(format!("{x} is not a fixed point")));
        }
    }
    let (pre_y, period_y) = orbit_shape(&sys, y, step_budget())?;
    if pre_y != 0 {
        return Err(Error::Precondition(format!("{y} is not periodic")));
    }
    let fs = FiniteSystem::new(&sys)?;
    let n = fixed.len();
    let neighborhoods: Vec<Neighborhood> = fixed
        .iter()
        .zip(radii)
        .map(|(x, r)| Neighborhood::Ball {
            center: x.clone(),
            radius: r.clone(),
        })
        .collect();
    let u_sets = neighborhoods
        .iter()
        .map(|u| u.bitset(&fs, &sys))
        .collect::<Result<Vec<_>>>()?;
    let y_idx = fs.index_of(y)?;
    let y_orbit: Vec<usize> = {
        let mut o = vec![y_idx];
        for _ in 1..period_y {
            o.push(fs.succ[*o.last().expect("nonempty")]);
        }
        o
    };
    for (i, u) in u_sets.iter().enumerate() {
        if !y_orbit.iter().any(|&z| u.contains(z)) {
            return Err(Error::Unvisited(fixed[i].to_string()));
        }
    }

    // delta' from the exact modulus of continuity of T^1..T^N
    let delta_sq = radii.iter().map(|r| r * r).min().expect("nonempty");
    let pts = fs.len();
    if (pts as u128).pow(2) * n_steps as u128 > step_budget() as u128 {
        return Err(Error::Budget("modulus of continuity scan exceeds the step budget".into()));
    }
    let maps: Vec<Vec<usize>> = (1..=n_steps).map(|j| fs.power(j)).collect();
    let mut delta_prime_sq = delta_sq.clone();
    for a in 0..pts {
        for b in a + 1..pts {
            let d = sys.dist_sq(fs.point(a), fs.point(b))?;
            if d >= delta_prime_sq {
                continue;
            }
            for m in &maps {
                if sys.dist_sq(fs.point(m[a]), fs.point(m[b]))? >= delta_sq {
                    delta_prime_sq = d.clone();
                    break;
                }
            }
        }
    }

    // N(y, V_i) as residues mod the period of y
    let mut returns = Vec::with_capacity(n);
    for (i, x) in fixed.iter().enumerate() {
        let residues: Vec<Vec<u64>> = y_orbit
            .iter()
            .enumerate()
            .filter(|(_, &z)| sys.dist_sq(fs.point(z), x).map(|d| d < delta_prime_sq).unwrap_or(false))
            .map(|(r, _)| vec![r as u64])
            .collect();
        if residues.is_empty() {
            return Err(Error::Construction(format!(
                "N = {n_steps} is too large: delta'^2 = {} and the orbit of {y} never enters B({}, delta')",
                crate::numeric::fmt_rational(&delta_prime_sq),
                fixed[i]
            )));
        }
        returns.push(SyndeticPresentation::new(vec![period_y], residues)?);
    }
    let return_gaps = returns.iter().map(|r| r.gap()).collect();

    let patterns = all_patterns(n, l);
    let feas = Arc::new(Feasibility::new(&fs, &u_sets));
    let mut b_sets = Vec::with_capacity(patterns.len());
    for s in &patterns {
        let a_s = product_syndetic(&s.iter().map(|&u| returns[u].clone()).collect::<Vec<_>>())?;
        b_sets.push(b_presentation(feas.clone(), s.clone(), a_s, n_steps));
    }

    let (route, filter_failure, nbar) = match filter_vector(&b_sets, l) {
        Ok(v) => (Route::Filter, None, v),
        Err(e) => {
            let v = exact_vector(&feas, &patterns, l)?.ok_or_else(|| {
                Error::Construction(format!(
                    "no increasing vector lies in every B_s (filter route: {e})"
                ))
            })?;
            (Route::ExactIntersection, Some(e.to_string()), v)
        }
    };
    for (s, b) in patterns.iter().zip(&b_sets) {
        if !b.contains(&nbar) {
            return Err(Error::Construction(format!("{nbar:?} is not in B_{s:?}")));
        }
    }
    let witnesses = patterns
        .iter()
        .map(|s| {
            let z = feas
                .realize(s, &nbar)
                .ok_or_else(|| Error::Construction(format!("pattern {s:?} has no witness")))?;
            Ok(PatternWitness {
                pattern: s.iter().map(|u| u + 1).collect(),
                point: fs.point(z).clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeTupleWitness {
        v: "v1".into(),
        l,
        n_steps,
        delta_sq,
        delta_prime_sq,
        return_gaps,
        route,
        filter_failure,
        nbar: nbar.clone(),
        certificate: IndependenceCertificate {
            v: "v1".into(),
            system: system.clone(),
            neighborhoods,
            times: nbar,
            witnesses,
        },
    })
}

/// `T^(-t) U_i` for `t` up to one preperiod plus one period; larger `t` fold back.
struct Feasibility {
    pre: u64,
    period: u64,
    pulled: Vec<Vec<FixedBitSet>>,
}

impl Feasibility {
    fn new(fs: &FiniteSystem, u_sets: &[FixedBitSet]) -> Self {
        let mut powers = Powers::new(fs);
        let span = fs.preperiod() + fs.period();
        let pulled = (0..span)
            .map(|t| {
                let map = powers.get(t).to_vec();
                u_sets.iter().map(|u| fs.pullback(&map, u)).collect()
            })
            .collect();
        Feasibility {
            pre: fs.preperiod(),
            period: fs.period(),
            pulled,
        }
    }

    fn fold(&self, t: u64) -> usize {
        if t < self.pre {
            t as usize
        } else {
            (self.pre + (t - self.pre) % self.period) as usize
        }
    }

    fn cell(&self, s: &[usize], times: &[u64]) -> FixedBitSet {
        let mut cell = self.pulled[0][0].clone();
        cell.insert_range(..);
        for (&u, &t) in s.iter().zip(times) {
            cell.intersect_with(&self.pulled[self.fold(t)][u]);
        }
        cell
    }

    /// `times in B_s`.
    fn member(&self, s: &[usize], times: &[u64]) -> bool {
        !self.cell(s, times).is_clear()
    }

    fn realize(&self, s: &[usize], times: &[u64]) -> Option<usize> {
        self.cell(s, times).minimum()
    }
}

/// `B_s` with generator `A_s` up to cube size `N` and exact translates above.
fn b_presentation(feas: Arc<Feasibility>, s: Vec<usize>, a_s: SyndeticPresentation, n_steps: u64) -> TsPresentation {
    let l = s.len();
    let name = format!("B_{:?}", s.iter().map(|u| u + 1).collect::<Vec<_>>());
    let (fm, sm) = (feas.clone(), s.clone());
    let label = name.clone();
    TsPresentation::new(
        l,
        name,
        Arc::new(move |n| {
            if n <= n_steps {
                return Ok(a_s.clone());
            }
            // B_s is periodic beyond the preperiod, so S_n is too
            let (pre, per) = (feas.pre, feas.period);
            let cube = Cube::new(l, n.min(per - 1));
            let mut base = Vec::new();
            for r in crate::zplus::BoxIter::new(vec![per; l]) {
                let b: Vec<u64> = r.iter().map(|v| v + pre).collect();
                let fits = cube.points().all(|p| {
                    let v: Vec<u64> = b.iter().zip(&p).map(|(x, y)| x + y).collect();
                    feas.member(&s, &v)
                });
                if fits {
                    base.push(b);
                }
            }
            if base.is_empty() {
                return Err(Error::Construction(format!(
                    "{label} is not thickly syndetic here: no translate of P_{n} fits inside it"
                )));
            }
            SyndeticPresentation::new(vec![per; l], base)
        }),
        Arc::new(move |v| fm.member(&sm, v)),
    )
}

/// A strictly increasing vector from `S_0` of the folded intersection.
fn filter_vector(b_sets: &[TsPresentation], l: usize) -> Result<Vec<u64>> {
    let folded = ts_intersect_tree(b_sets)?;
    let s0 = folded.generate(0)?;
    let g = s0.gap();
    let a: Vec<u64> = (0..l as u64).map(|j| j * (g + 1)).collect();
    Cube::new(l, g)
        .points()
        .map(|p| a.iter().zip(&p).map(|(x, y)| x + y).collect::<Vec<u64>>())
        .find(|v| s0.contains(v))
        .ok_or_else(|| Error::Construction("gap certificate of S_0 fails".into()))
}

/// Lexicographically least increasing vector in every `B_s`.
///
/// Coordinates past the preperiod only matter mod the period, so vectors
/// below `pre + l * period` suffice.
fn exact_vector(feas: &Feasibility, patterns: &[Vec<usize>], l: usize) -> Result<Option<Vec<u64>>> {
    let bound = feas.pre + l as u64 * feas.period;
    fn go(feas: &Feasibility, patterns: &[Vec<usize>], l: usize, bound: u64, v: &mut Vec<u64>) -> bool {
        if v.len() == l {
            return patterns.iter().all(|s| feas.member(s, v));
        }
        let from = v.last().map(|t| t + 1).unwrap_or(0);
        for t in from..bound {
            v.push(t);
            let k = v.len();
            // prefixes must already be feasible
            let ok = patterns
                .iter()
                .filter(|s| s[k..].iter().all(|&u| u == 0))
                .all(|s| feas.member(&s[..k], v));
            if ok && go(feas, patterns, l, bound, v) {
                return true;
            }
            v.pop();
        }
        false
    }
    let mut v = Vec::new();
    Ok(go(feas, patterns, l, bound, &mut v).then_some(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, ratio};

    fn rot(m: u64) -> (SystemSpec, SystemPresentation, FiniteSystem) {
        let spec = SystemSpec::Rotation { modulus: m };
        let sys = spec.build().unwrap();
        let fs = FiniteSystem::new(&sys).unwrap();
        (spec, sys, fs)
    }

    fn atoms(v: &[u64]) -> Vec<Point> {
        v.iter().map(|&k| Point::Atom(k)).collect()
    }

    fn brute_min_cover(n: usize, cells: &[FixedBitSet]) -> usize {
        (1u32..(1 << cells.len()))
            .filter(|mask| {
                let mut u = FixedBitSet::with_capacity(n);
                for (i, c) in cells.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        u.union_with(c);
                    }
                }
                u.count_ones(..) == n
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn rotation_join_count() {
        let (_, _, fs) = rot(4);
        let cover = Cover::from_points(&fs, &[atoms(&[0, 1]), atoms(&[1, 2]), atoms(&[2, 3]), atoms(&[3, 0])]).unwrap();
        let r = join_and_count(&fs, &cover, &[0, 1], CountMode::Exact).unwrap();
        assert_eq!(r.minimal, 2);
        assert!(r.exact);
        assert_eq!(brute_min_cover(4, &r.cells), 2);
        let whole = Cover::from_points(&fs, &[atoms(&[0, 1, 2, 3])]).unwrap();
        assert_eq!(join_and_count(&fs, &whole, &[0, 3, 9], CountMode::Exact).unwrap().minimal, 1);
        let singles = Cover::from_points(&fs, &(0..4).map(|k| atoms(&[k])).collect::<Vec<_>>()).unwrap();
        assert_eq!(join_and_count(&fs, &singles, &[0], CountMode::Exact).unwrap().minimal, 4);
        assert!(join_and_count(&fs, &singles, &[], CountMode::Exact).is_err());
        assert!(Cover::from_points(&fs, &[atoms(&[0])]).is_err());
    }

    #[test]
    fn exact_cover_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.gen_range(3..10);
            let k = rng.gen_range(1..12);
            let mut cells: Vec<FixedBitSet> = (0..k)
                .map(|_| {
                    let mut c = FixedBitSet::with_capacity(n);
                    for p in 0..n {
                        if rng.gen_bool(0.35) {
                            c.insert(p);
                        }
                    }
                    c
                })
                .filter(|c| !c.is_clear())
                .collect();
            for p in 0..n {
                let mut c = FixedBitSet::with_capacity(n);
                c.insert(p);
                cells.push(c);
            }
            cells.truncate(12);
            let mut union = FixedBitSet::with_capacity(n);
            for c in &cells {
                union.union_with(c);
            }
            for p in 0..n {
                if !union.contains(p) {
                    cells[0].insert(p);
                }
            }
            let (g, pick) = greedy_cover(n, &cells);
            let (m, _) = exact_cover(n, &cells, g, pick).unwrap();
            assert_eq!(m, brute_min_cover(n, &cells));
        }
    }

    #[test]
    fn greedy_mode_is_labelled() {
        let (_, _, fs) = rot(6);
        let cover = Cover::from_points(&fs, &[atoms(&[0, 1, 2]), atoms(&[3, 4, 5]), atoms(&[1, 4])]).unwrap();
        let r = join_and_count(&fs, &cover, &[0, 2], CountMode::GreedyOnly).unwrap();
        assert!(!r.exact);
        let e = join_and_count(&fs, &cover, &[0, 2], CountMode::Exact).unwrap();
        assert!(r.minimal >= e.minimal);
    }

    #[test]
    fn entropy_quotients_vanish() {
        let (_, _, fs) = rot(4);
        let cover = Cover::from_points(&fs, &[atoms(&[0, 1]), atoms(&[1, 2]), atoms(&[2, 3]), atoms(&[3, 0])]).unwrap();
        let seq: Vec<u64> = (0..8).collect();
        let est = seq_entropy_estimate(&fs, &cover, &seq, CountMode::Exact).unwrap();
        for w in est.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
        for e in &est {
            assert!(e.value <= (4f64).ln() / e.n as f64 + 1e-12);
        }
        let (_, _, one) = rot(1);
        let c1 = Cover::from_points(&one, &[atoms(&[0])]).unwrap();
        assert!(seq_entropy_estimate(&one, &c1, &[0, 5, 7], CountMode::Exact)
            .unwrap()
            .iter()
            .all(|e| e.value == 0.0));
    }

    #[test]
    fn two_fixed_points_entropy() {
        let spec = SystemSpec::Explicit {
            tables: vec![],
            cycles: vec![],
            fixed: atoms(&[0, 1]),
        };
        let sys = spec.build().unwrap();
        let fs = FiniteSystem::new(&sys).unwrap();
        let cover = Cover::from_points(&fs, &[atoms(&[0]), atoms(&[1])]).unwrap();
        let est = seq_entropy_estimate(&fs, &cover, &[1, 4, 9, 16], CountMode::Exact).unwrap();
        for e in est {
            assert_eq!(e.count, 2);
            assert!((e.value - (2f64).ln() / e.n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn admissibility() {
        let (_, _, fs) = rot(4);
        let set = |v: &[u64]| fs.set_of(&atoms(v)).unwrap();
        assert!(is_admissible(&[set(&[0, 1, 3]), set(&[1, 2, 3])], &[0, 2]));
        assert!(!is_admissible(&[set(&[0, 1, 2, 3])], &[0, 2]));
        assert!(is_admissible(&[set(&[0, 1]), set(&[2, 3])], &[0, 2]));
    }

    fn singleton(k: u64) -> Neighborhood {
        Neighborhood::Set { points: atoms(&[k]) }
    }

    #[test]
    fn rotation_has_no_independence_pair() {
        let spec = SystemSpec::Rotation { modulus: 4 };
        let r = search_certificate(&spec, &[singleton(0), singleton(2)], 2, 8).unwrap();
        assert!(r.certificate.is_none());
        let sys = spec.build().unwrap();
        assert_eq!(exhaustive_independence(&sys, &[singleton(0), singleton(2)], 2, 8).unwrap(), None);
    }

    #[test]
    fn whole_space_is_independent() {
        let spec = SystemSpec::Rotation { modulus: 5 };
        let all = Neighborhood::Set { points: atoms(&[0, 1, 2, 3, 4]) };
        let r = search_certificate(&spec, &[all], 3, 4).unwrap();
        let c = r.certificate.unwrap();
        assert_eq!(c.times, vec![0, 1, 2]);
        c.verify().unwrap();
    }

    #[test]
    fn search_agrees_with_exhaustive_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let npts = rng.gen_range(2..=10u64);
            let succ: Vec<(Point, Point)> = (0..npts)
                .map(|i| (Point::Atom(i), Point::Atom(rng.gen_range(0..npts))))
                .collect();
            let spec = SystemSpec::Explicit {
                tables: vec![crate::catalog::TableSpec {
                    name: "random".into(),
                    successor: succ,
                }],
                cycles: vec![],
                fixed: vec![],
            };
            let sys = spec.build().unwrap();
            let hoods: Vec<Neighborhood> = (0..rng.gen_range(1..=3))
                .map(|_| Neighborhood::Set {
                    points: (0..npts).filter(|_| rng.gen_bool(0.5)).map(Point::Atom).collect(),
                })
                .collect();
            for k in 1..=3 {
                let r = search_certificate(&spec, &hoods, k, 6).unwrap();
                let naive = exhaustive_independence(&sys, &hoods, k, 6).unwrap();
                assert_eq!(r.certificate.as_ref().map(|c| c.times.clone()), naive);
                if let Some(c) = r.certificate {
                    c.verify().unwrap();
                }
            }
        }
    }

    #[test]
    fn tampered_certificate_fails() {
        let spec = SystemSpec::Rotation { modulus: 3 };
        let all = Neighborhood::Set { points: atoms(&[0, 1, 2]) };
        let mut c = search_certificate(&spec, &[all, singleton(1)], 1, 3).unwrap().certificate.unwrap();
        c.verify().unwrap();
        c.witnesses[1].point = Point::Atom(0);
        assert!(c.verify().is_err());
    }

    #[test]
    fn ip_examples() {
        assert_eq!(ip_set(&[1, 2]), vec![1, 2, 3]);
        assert_eq!(ip_set(&[1, 2, 4]), (1..=7).collect::<Vec<_>>());
        let spec = SystemSpec::Rotation { modulus: 4 };
        let all = Neighborhood::Set { points: atoms(&[0, 1, 2, 3]) };
        match ip_independence_check(&spec, &all, &all, &[3], DEFAULT_IP_CAP).unwrap() {
            IpOutcome::Certified(c) => c.verify().unwrap(),
            IpOutcome::Failed(_) => panic!("whole space is independent"),
        }
        match ip_independence_check(&spec, &singleton(0), &singleton(2), &[1, 2], DEFAULT_IP_CAP).unwrap() {
            IpOutcome::Failed(f) => {
                assert_eq!(f.subset, vec![1, 2]);
                assert_eq!(f.pattern, vec![1, 1]);
                f.verify().unwrap();
            }
            IpOutcome::Certified(_) => panic!("rotation is not IP-independent"),
        }
        assert!(ip_independence_check(&spec, &all, &all, &[1, 1, 1, 1, 1], DEFAULT_IP_CAP).is_err());
        assert!(ip_independence_check(&spec, &all, &all, &[0], DEFAULT_IP_CAP).is_err());
    }

    #[test]
    fn identity_never_moves_between_fixed_points() {
        let spec = SystemSpec::Explicit {
            tables: vec![],
            cycles: vec![],
            fixed: atoms(&[0, 1]),
        };
        for gens in [vec![1, 3], vec![2, 5, 7]] {
            match ip_independence_check(&spec, &singleton(0), &singleton(1), &gens, DEFAULT_IP_CAP).unwrap() {
                IpOutcome::Failed(f) => f.verify().unwrap(),
                IpOutcome::Certified(_) => panic!("identity cannot be independent"),
            }
        }
    }

    fn two_point_fixture() -> (SystemSpec, Vec<Point>, Point) {
        let f = crate::fixtures::two_points();
        (f.system, f.fixed, f.y)
    }

    fn cyl(x: (i64, i64), y: (i64, i64)) -> Point {
        Point::Cyl(crate::numeric::CylPoint::from_ratios(x, y).unwrap())
    }

    #[test]
    fn se_witness_two_points() {
        let (spec, fixed, y) = two_point_fixture();
        let radii = vec![ratio(1, 4), ratio(1, 4)];
        let w = se_tuple_witness_from_fixed_points(&spec, &fixed, &y, &radii, 2, 1).unwrap();
        assert_eq!(w.certificate.witnesses.len(), 4);
        w.certificate.verify().unwrap();
        let naive = exhaustive_independence(&spec.build().unwrap(), &w.certificate.neighborhoods, 2, 24).unwrap();
        assert!(naive.is_some());
        for keep in [vec![0], vec![1]] {
            w.certificate.project(&keep).unwrap().verify().unwrap();
        }
    }

    #[test]
    fn se_witness_routes_match_search() {
        for f in crate::fixtures::fixed_point_fixtures() {
            let sys = f.system.build().unwrap();
            let fs = FiniteSystem::new(&sys).unwrap();
            for l in 1..=f.l {
                let w = se_tuple_witness_from_fixed_points(&f.system, &f.fixed, &f.y, &f.radii, l, f.n_steps).unwrap();
                w.certificate.verify().unwrap();
                assert_eq!(w.route == Route::Filter, w.filter_failure.is_none());
                let sets: Vec<FixedBitSet> = w
                    .certificate
                    .neighborhoods
                    .iter()
                    .map(|u| u.bitset(&fs, &sys).unwrap())
                    .collect();
                let hit = independence_search(&fs, &sets, l, *w.nbar.last().unwrap()).unwrap().unwrap();
                if w.route == Route::ExactIntersection {
                    assert_eq!(hit.times, w.nbar, "{}", f.name);
                }
            }
        }
    }

    #[test]
    fn se_witness_single_point_is_degenerate() {
        let (spec, fixed, y) = two_point_fixture();
        let w = se_tuple_witness_from_fixed_points(&spec, &fixed[..1], &y, &[ratio(1, 4)], 2, 1).unwrap();
        assert_eq!(w.certificate.witnesses.len(), 1);
        w.certificate.verify().unwrap();
    }

    #[test]
    fn se_witness_errors() {
        let (spec, fixed, y) = two_point_fixture();
        let far = vec![fixed[0].clone(), cyl((1, 1), (0, 1))];
        let spec_far = match spec.clone() {
            SystemSpec::Explicit { tables, cycles, .. } => SystemSpec::Explicit {
                tables,
                cycles,
                fixed: far.clone(),
            },
            _ => unreachable!(),
        };
        let e = se_tuple_witness_from_fixed_points(&spec_far, &far, &y, &[ratio(1, 4), ratio(1, 4)], 2, 1);
        assert!(matches!(e, Err(Error::Unvisited(_))));
        let e = se_tuple_witness_from_fixed_points(&spec, &fixed, &y, &[ratio(1, 4), ratio(1, 4)], 2, 40);
        assert!(matches!(e, Err(Error::Construction(ref m)) if m.contains("too large")), "{e:?}");
        assert!(se_tuple_witness_from_fixed_points(&spec, &fixed, &y, &[int(0), int(1)], 2, 1).is_err());
    }
}
