//! Cubes, syndetic and thickly syndetic subsets of `Z_+^l`.
//!
//! Syndetic sets are presented as eventually periodic lattices
//! `{r + q (.) k : r in base, k in Z_+^l}`. Thickly syndetic sets are
//! infinite objects with no finite extensional form, so they are given by a
//! membership predicate plus a generator `n -> S_n` with `S_n + P_n` inside
//! the set. Everything is checked on finite windows.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `P_m^(l) = [0, m]^l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cube {
    pub l: usize,
    pub m: u64,
}

impl Cube {
    pub fn new(l: usize, m: u64) -> Self {
        Cube { l, m }
    }

    pub fn len(&self) -> u128 {
        (self.m as u128 + 1).pow(self.l as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: &[u64]) -> bool {
        p.len() == self.l && p.iter().all(|&v| v <= self.m)
    }

    /// Points in lexicographic order.
    pub fn points(&self) -> BoxIter {
        BoxIter::new(vec![self.m + 1; self.l])
    }
}

/// Lexicographic iterator over `[0, dims_0) x ... x [0, dims_(l-1))`.
#[derive(Clone, Debug)]
pub struct BoxIter {
    dims: Vec<u64>,
    next: Option<Vec<u64>>,
}

impl BoxIter {
    pub fn new(dims: Vec<u64>) -> Self {
        let next = (!dims.contains(&0)).then(|| vec![0; dims.len()]);
        BoxIter { dims, next }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        for k in (0..succ.len()).rev() {
            succ[k] += 1;
            if succ[k] < self.dims[k] {
                self.next = Some(succ);
                break;
            }
            succ[k] = 0;
        }
        Some(cur)
    }
}

/// Membership counts over a box, with `l`-dimensional prefix sums.
struct Grid {
    dims: Vec<usize>,
    strides: Vec<usize>,
    sums: Vec<u32>,
}

impl Grid {
    fn build(dims: &[u64], pred: &dyn Fn(&[u64]) -> bool) -> Result<Grid> {
        let cells = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize + 1))
            .filter(|&c| c <= 1 << 28)
            .ok_or_else(|| Error::Budget(format!("window {dims:?} is too large")))?;
        let dims: Vec<usize> = dims.iter().map(|&d| d as usize).collect();
        let l = dims.len();
        let mut strides = vec![1; l];
        for k in (0..l.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * (dims[k + 1] + 1);
        }
        // index shifted by one in every axis so that row 0 is all zeros
        let mut sums = vec![0u32; cells];
        for p in BoxIter::new(dims.iter().map(|&d| d as u64).collect()) {
            if pred(&p) {
                let idx: usize = p.iter().zip(&strides).map(|(&v, s)| (v as usize + 1) * s).sum();
                sums[idx] = 1;
            }
        }
        for k in 0..l {
            for idx in 0..cells {
                let coord = (idx / strides[k]) % (dims[k] + 1);
                if coord > 0 {
                    sums[idx] += sums[idx - strides[k]];
                }
            }
        }
        Ok(Grid { dims, strides, sums })
    }

    /// Members in `a + P_m`, clipped to the box.
    fn cube_count(&self, a: &[u64], m: u64) -> u32 {
        let l = self.dims.len();
        let mut total: i64 = 0;
        for corner in 0u32..(1 << l) {
            let mut idx = 0;
            let mut sign = 1i64;
            let mut skip = false;
            for k in 0..l {
                let hi = ((a[k] + m) as usize + 1).min(self.dims[k]);
                let v = if corner >> k & 1 == 1 {
                    sign = -sign;
                    a[k] as usize
                } else {
                    hi
                };
                if v > self.dims[k] {
                    skip = true;
                }
                idx += v * self.strides[k];
            }
            if !skip {
                total += sign * self.sums[idx] as i64;
            }
        }
        total as u32
    }
}

/// An eventually periodic syndetic set.
#[derive(Clone, Serialize, Deserialize)]
pub struct SyndeticPresentation {
    l: usize,
    period: Vec<u64>,
    base: Vec<Vec<u64>>,
    gap: u64,
    #[serde(skip)]
    floor: Vec<u64>,
    #[serde(skip)]
    residues: HashSet<Vec<u64>>,
}

impl PartialEq for SyndeticPresentation {
    fn eq(&self, other: &Self) -> bool {
        self.period == other.period && self.base == other.base && self.gap == other.gap
    }
}

impl Eq for SyndeticPresentation {}

impl fmt::Debug for SyndeticPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SyndeticPresentation")
            .field("period", &self.period)
            .field("base", &self.base.len())
            .field("gap", &self.gap)
            .finish()
    }
}

impl SyndeticPresentation {
    /// Normalizes the base points and computes the exact gap.
    pub fn new(period: Vec<u64>, base: Vec<Vec<u64>>) -> Result<Self> {
        let l = period.len();
        if l == 0 {
            return Err(Error::Precondition("dimension must be positive".into()));
        }
        if period.contains(&0) {
            return Err(Error::Precondition("periods must be positive".into()));
        }
        if base.is_empty() {
            return Err(Error::Degenerate("empty residue set".into()));
        }
        for b in &base {
            if b.len() != l {
                return Err(Error::DimensionMismatch {
                    left: l,
                    right: b.len(),
                });
            }
        }
        let base: Vec<Vec<u64>> = base.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let floor: Vec<u64> = (0..l).map(|k| base.iter().map(|b| b[k]).max().unwrap_or(0)).collect();
        let residues = base
            .iter()
            .map(|b| b.iter().zip(&period).map(|(v, q)| v % q).collect())
            .collect();
        let mut s = SyndeticPresentation {
            l,
            period,
            base,
            gap: 0,
            floor,
            residues,
        };
        s.gap = s.exact_gap()?;
        Ok(s)
    }

    /// Restores the derived fields after deserialization and rechecks the gap.
    pub fn revalidated(&self) -> Result<Self> {
        let fresh = SyndeticPresentation::new(self.period.clone(), self.base.clone())?;
        if fresh.gap != self.gap {
            return Err(Error::Construction(format!(
                "recorded gap {} differs from the exact gap {}",
                self.gap, fresh.gap
            )));
        }
        Ok(fresh)
    }

    /// `q Z_+^l` shifted by nothing: the lattice with base point 0.
    pub fn lattice(period: Vec<u64>) -> Result<Self> {
        let l = period.len();
        SyndeticPresentation::new(period, vec![vec![0; l]])
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    pub fn base(&self) -> &[Vec<u64>] {
        &self.base
    }

    /// Least `m` such that every `a + P_m` meets the set.
    pub fn gap(&self) -> u64 {
        self.gap
    }

    /// Beyond this corner membership depends only on residues.
    pub fn floor(&self) -> &[u64] {
        &self.floor
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        if v.len() != self.l {
            return false;
        }
        if v.iter().zip(&self.floor).all(|(a, f)| a >= f) {
            let r: Vec<u64> = v.iter().zip(&self.period).map(|(a, q)| a % q).collect();
            return self.residues.contains(&r);
        }
        self.base.iter().any(|b| {
            b.iter()
                .zip(v)
                .zip(&self.period)
                .all(|((r, a), q)| a >= r && (a - r) % q == 0)
        })
    }

    /// Members in `[0, w]^l`.
    pub fn window(&self, w: u64) -> Vec<Vec<u64>> {
        BoxIter::new(vec![w + 1; self.l]).filter(|p| self.contains(p)).collect()
    }

    /// Suggested validation window: three times the largest `floor + period`.
    pub fn default_window(&self) -> u64 {
        3 * self
            .floor
            .iter()
            .zip(&self.period)
            .map(|(f, q)| f + q)
            .max()
            .unwrap_or(1)
    }

    fn exact_gap(&self) -> Result<u64> {
        let reach: Vec<u64> = self.floor.iter().zip(&self.period).map(|(f, q)| f + q).collect();
        let bound = *reach.iter().max().expect("l > 0");
        let dims: Vec<u64> = reach.iter().map(|r| r + bound).collect();
        let grid = Grid::build(&dims, &|p| self.contains(p))?;
        let mut gap = 0;
        for a in BoxIter::new(reach) {
            if grid.cube_count(&a, gap) > 0 {
                continue;
            }
            let (mut lo, mut hi) = (gap + 1, bound);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if grid.cube_count(&a, mid) > 0 {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            gap = lo;
        }
        Ok(gap)
    }
}

/// Checks the gap condition for all `a` in `[0, w - m]^l`; returns the first failure.
pub fn is_syndetic_window(l: usize, member: &dyn Fn(&[u64]) -> bool, m: u64, w: u64) -> Result<Option<Vec<u64>>> {
    if w < m {
        return Err(Error::Precondition(format!("window {w} is smaller than the gap {m}")));
    }
    if l == 0 {
        return Err(Error::Precondition("dimension must be positive".into()));
    }
    let grid = Grid::build(&vec![w + 1; l], member)?;
    Ok(BoxIter::new(vec![w - m + 1; l]).find(|a| grid.cube_count(a, m) == 0))
}

/// `prod N_i` for one-dimensional factors.
pub fn product_syndetic(factors: &[SyndeticPresentation]) -> Result<SyndeticPresentation> {
    if factors.is_empty() {
        return Err(Error::Degenerate("no factors".into()));
    }
    if let Some(f) = factors.iter().find(|f| f.l != 1) {
        return Err(Error::DimensionMismatch { left: 1, right: f.l });
    }
    let period = factors.iter().map(|f| f.period[0]).collect();
    let mut base = vec![vec![]];
    for f in factors {
        base = base
            .into_iter()
            .flat_map(|b: Vec<u64>| {
                f.base.iter().map(move |r| {
                    let mut c = b.clone();
                    c.push(r[0]);
                    c
                })
            })
            .collect();
    }
    SyndeticPresentation::new(period, base)
}

/// `S + P_n`.
#[derive(Clone, Debug)]
pub struct Thickened {
    pub set: SyndeticPresentation,
    pub n: u64,
}

pub fn thicken(s: &SyndeticPresentation, n: u64) -> Thickened {
    Thickened { set: s.clone(), n }
}

impl Thickened {
    pub fn contains(&self, a: &[u64]) -> bool {
        Cube::new(self.set.l, self.n).points().any(|p| {
            p.iter().zip(a).all(|(pi, ai)| pi <= ai)
                && self.set.contains(&a.iter().zip(&p).map(|(x, y)| x - y).collect::<Vec<_>>())
        })
    }

    pub fn window(&self, w: u64) -> Vec<Vec<u64>> {
        BoxIter::new(vec![w + 1; self.set.l]).filter(|p| self.contains(p)).collect()
    }
}

pub type Generator = Arc<dyn Fn(u64) -> Result<SyndeticPresentation> + Send + Sync>;
pub type Membership = Arc<dyn Fn(&[u64]) -> bool + Send + Sync>;

/// A thickly syndetic set: a membership predicate and a generator `n -> S_n`.
#[derive(Clone)]
pub struct TsPresentation {
    l: usize,
    name: String,
    generator: Generator,
    membership: Membership,
}

impl fmt::Debug for TsPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TsPresentation({}, l={})", self.name, self.l)
    }
}

/// Outcome of [`TsPresentation::validate`] at one cube size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsCheck {
    pub n: u64,
    pub window: u64,
    pub generated: SyndeticPresentation,
    pub gap_counterexample: Option<Vec<u64>>,
    pub thickening_counterexample: Option<Vec<u64>>,
}

impl TsCheck {
    pub fn passed(&self) -> bool {
        self.gap_counterexample.is_none() && self.thickening_counterexample.is_none()
    }
}

/// The window checks behind [`TsPresentation::validate`], usable on recorded data.
pub fn check_generated(
    s: &SyndeticPresentation,
    n: u64,
    window: u64,
    member: &dyn Fn(&[u64]) -> bool,
) -> Result<(Option<Vec<u64>>, Option<Vec<u64>>)> {
    let gap_cx = is_syndetic_window(s.l, &|p| s.contains(p), s.gap, window)?;
    let cube = Cube::new(s.l, n);
    let mut thick_cx = None;
    'outer: for a in BoxIter::new(vec![window + 1; s.l]) {
        if !s.contains(&a) {
            continue;
        }
        for p in cube.points() {
            let v: Vec<u64> = a.iter().zip(&p).map(|(x, y)| x + y).collect();
            if v.iter().all(|&c| c <= window) && !member(&v) {
                thick_cx = Some(v);
                break 'outer;
            }
        }
    }
    Ok((gap_cx, thick_cx))
}

impl TsPresentation {
    pub fn new(l: usize, name: impl Into<String>, generator: Generator, membership: Membership) -> Self {
        TsPresentation {
            l,
            name: name.into(),
            generator,
            membership,
        }
    }

    /// `Z_+^l` itself.
    pub fn everything(l: usize) -> Self {
        TsPresentation::new(
            l,
            "all",
            Arc::new(move |_| SyndeticPresentation::lattice(vec![1; l])),
            Arc::new(|_| true),
        )
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generate(&self, n: u64) -> Result<SyndeticPresentation> {
        let s = (self.generator)(n)?;
        if s.l != self.l {
            return Err(Error::DimensionMismatch {
                left: self.l,
                right: s.l,
            });
        }
        Ok(s)
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        (self.membership)(v)
    }

    /// Checks the gap certificate of `S_n` and `S_n + P_n` inside the set, on `[0, window]^l`.
    ///
    /// With `window = None` the window is three times the largest `floor + period` of `S_n`.
    pub fn validate(&self, n: u64, window: Option<u64>) -> Result<TsCheck> {
        let s = self.generate(n)?;
        let window = window.unwrap_or_else(|| s.default_window()).max(s.gap);
        let (gap_counterexample, thickening_counterexample) =
            check_generated(&s, n, window, &|v| self.contains(v))?;
        Ok(TsCheck {
            n,
            window,
            generated: s,
            gap_counterexample,
            thickening_counterexample,
        })
    }
}

/// Intersection of two thickly syndetic sets, following the filter argument.
///
/// For cube size `n`: take `S_n` from `f1` with gap `m`, take `S_(m+n)` from
/// `f2`, and push every point of the latter by the lexicographically least
/// `m' in P_m` landing in `S_n`. Points are first raised above the corner
/// where `S_n` turns periodic so the choice is the same on every period cell.
pub fn ts_intersect(f1: &TsPresentation, f2: &TsPresentation) -> Result<TsPresentation> {
    if f1.l != f2.l {
        return Err(Error::DimensionMismatch {
            left: f1.l,
            right: f2.l,
        });
    }
    let l = f1.l;
    let (a, b) = (f1.clone(), f2.clone());
    let generator: Generator = Arc::new(move |n| {
        let sn = a.generate(n)?;
        let m = sn.gap;
        let d = m
            .checked_add(n)
            .ok_or_else(|| Error::Budget("cube size overflow".into()))?;
        let sd = b.generate(d)?;
        let q: Vec<u64> = sd.period.iter().zip(&sn.period).map(|(x, y)| x.lcm(y)).collect();
        let cells: u128 = q.iter().zip(&sd.period).map(|(x, y)| (x / y) as u128).product::<u128>()
            * sd.base.len() as u128;
        if cells > 1 << 22 {
            return Err(Error::Budget(format!("{cells} lattice representatives")));
        }
        let cube = Cube::new(l, m);
        let mut base = BTreeSet::new();
        for r in &sd.base {
            for k in BoxIter::new(q.iter().zip(&sd.period).map(|(x, y)| x / y).collect()) {
                let mut p: Vec<u64> = (0..l).map(|i| r[i] + sd.period[i] * k[i]).collect();
                for i in 0..l {
                    if p[i] < sn.floor[i] {
                        p[i] += q[i] * (sn.floor[i] - p[i]).div_ceil(q[i]);
                    }
                }
                let shift = cube
                    .points()
                    .find(|mm| sn.contains(&p.iter().zip(mm).map(|(x, y)| x + y).collect::<Vec<_>>()))
                    .ok_or_else(|| Error::Construction(format!("gap {m} of S_{n} fails at {p:?}")))?;
                base.insert(p.iter().zip(&shift).map(|(x, y)| x + y).collect::<Vec<u64>>());
            }
        }
        SyndeticPresentation::new(q, base.into_iter().collect())
    });
    let (ma, mb) = (f1.membership.clone(), f2.membership.clone());
    Ok(TsPresentation::new(
        l,
        format!("({} & {})", f1.name, f2.name),
        generator,
        Arc::new(move |v| ma(v) && mb(v)),
    ))
}

/// Left fold of [`ts_intersect`].
pub fn ts_intersect_all(sets: &[TsPresentation]) -> Result<TsPresentation> {
    let (first, rest) = sets
        .split_first()
        .ok_or_else(|| Error::Degenerate("nothing to intersect".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| ts_intersect(&acc, f))
}

/// [`ts_intersect`] folded as a balanced tree, which keeps the floors of the
/// generated sets growing with the depth rather than the number of operands.
pub fn ts_intersect_tree(sets: &[TsPresentation]) -> Result<TsPresentation> {
    match sets.len() {
        0 => Err(Error::Degenerate("nothing to intersect".into())),
        1 => Ok(sets[0].clone()),
        n => ts_intersect(&ts_intersect_tree(&sets[..n / 2])?, &ts_intersect_tree(&sets[n / 2..])?),
    }
}

/// One-dimensional thickly syndetic families with closed-form generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    All,
    /// `Z_+` minus `{2^k}`.
    NotPow2,
    /// `Z_+` minus `{3 * 2^k}`.
    #[serde(rename = "not-3pow2")]
    NotThreePow2,
    /// `Z_+` minus `{2^k - 1}`.
    NotPow2Minus1,
}

impl Family {
    pub fn contains(self, v: u64) -> bool {
        match self {
            Family::All => true,
            Family::NotPow2 => !v.is_power_of_two(),
            Family::NotThreePow2 => !(v % 3 == 0 && (v / 3).is_power_of_two()),
            Family::NotPow2Minus1 => !(v + 1).is_power_of_two(),
        }
    }

    /// `S_n` as a one-dimensional lattice.
    pub fn generate(self, n: u64) -> Result<SyndeticPresentation> {
        let q = (n + 2).next_power_of_two();
        let base = match self {
            Family::All => return SyndeticPresentation::lattice(vec![1]),
            Family::NotPow2 => q + 1,
            Family::NotThreePow2 => 3 * q + 1,
            Family::NotPow2Minus1 => q,
        };
        SyndeticPresentation::new(vec![q], vec![vec![base]])
    }

    fn name(self) -> &'static str {
        match self {
            Family::All => "all",
            Family::NotPow2 => "not-pow2",
            Family::NotThreePow2 => "not-3pow2",
            Family::NotPow2Minus1 => "not-pow2-minus1",
        }
    }
}

/// A product of [`Family`] sets, one per coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsSpec {
    pub coords: Vec<Family>,
}

impl TsSpec {
    /// Parses `not-pow2*all` style products.
    pub fn parse(s: &str) -> Result<TsSpec> {
        let coords = s
            .split('*')
            .map(|t| {
                serde_json::from_value(serde_json::Value::String(t.trim().to_string()))
                    .map_err(|_| Error::Precondition(format!("unknown family `{t}`")))
            })
            .collect::<Result<Vec<Family>>>()?;
        Ok(TsSpec { coords })
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        v.len() == self.coords.len() && self.coords.iter().zip(v).all(|(f, &x)| f.contains(x))
    }

    pub fn presentation(&self) -> TsPresentation {
        let coords = self.coords.clone();
        let gen_coords = coords.clone();
        let name = coords.iter().map(|f| f.name()).collect::<Vec<_>>().join("*");
        TsPresentation::new(
            coords.len(),
            name,
            Arc::new(move |n| {
                let factors = gen_coords.iter().map(|f| f.generate(n)).collect::<Result<Vec<_>>>()?;
                product_syndetic(&factors)
            }),
            Arc::new(move |v| v.len() == coords.len() && coords.iter().zip(v).all(|(f, &x)| f.contains(x))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_gap(s: &SyndeticPresentation, w: u64) -> u64 {
        // largest distance to the set seen from points of [0, w]^l
        BoxIter::new(vec![w + 1; s.l])
            .map(|a| {
                (0..)
                    .find(|&m| {
                        Cube::new(s.l, m)
                            .points()
                            .any(|p| s.contains(&a.iter().zip(&p).map(|(x, y)| x + y).collect::<Vec<_>>()))
                    })
                    .unwrap()
            })
            .max()
            .unwrap()
    }

    #[test]
    fn cube_sizes() {
        assert_eq!(Cube::new(2, 3).len(), 16);
        assert_eq!(Cube::new(3, 0).len(), 1);
        assert_eq!(Cube::new(2, 1).points().count(), 4);
        assert_eq!(
            Cube::new(2, 1).points().collect::<Vec<_>>(),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
    }

    #[test]
    fn window_examples() {
        let three = |v: &[u64]| v[0] % 3 == 0;
        assert_eq!(is_syndetic_window(1, &three, 2, 30).unwrap(), None);
        let pow2 = |v: &[u64]| v[0].is_power_of_two();
        assert_eq!(is_syndetic_window(1, &pow2, 5, 100).unwrap(), Some(vec![9]));
        let even = |v: &[u64]| v.iter().all(|x| x % 2 == 0);
        assert_eq!(is_syndetic_window(2, &even, 1, 10).unwrap(), None);
        assert!(is_syndetic_window(1, &three, 5, 3).is_err());
    }

    #[test]
    fn gaps_match_brute_force() {
        let cases = vec![
            (vec![3], vec![vec![0]]),
            (vec![5], vec![vec![0], vec![1]]),
            (vec![4], vec![vec![9]]),
            (vec![3, 2], vec![vec![1, 0], vec![4, 5]]),
            (vec![2, 3, 2], vec![vec![0, 1, 1]]),
        ];
        for (q, b) in cases {
            let s = SyndeticPresentation::new(q.clone(), b.clone()).unwrap();
            assert_eq!(s.gap(), brute_gap(&s, 14), "{q:?} {b:?}");
        }
        assert_eq!(SyndeticPresentation::lattice(vec![3]).unwrap().gap(), 2);
    }

    #[test]
    fn membership_respects_base_points() {
        let s = SyndeticPresentation::new(vec![4], vec![vec![9]]).unwrap();
        assert!(!s.contains(&[1]) && !s.contains(&[5]));
        assert!(s.contains(&[9]) && s.contains(&[13]));
        assert_eq!(s.gap(), 9);
    }

    #[test]
    fn products() {
        let three = SyndeticPresentation::lattice(vec![3]).unwrap();
        let p = product_syndetic(&[three.clone(), three.clone()]).unwrap();
        assert_eq!(p.period(), &[3, 3]);
        assert_eq!(p.gap(), 2);
        let a = SyndeticPresentation::new(vec![5], vec![vec![0], vec![1]]).unwrap();
        let b = SyndeticPresentation::lattice(vec![2]).unwrap();
        let p = product_syndetic(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(p.base().len(), 2);
        assert_eq!(p.gap(), a.gap().max(b.gap()));
        assert_eq!(is_syndetic_window(2, &|v| p.contains(v), p.gap(), 30).unwrap(), None);
        assert_eq!(product_syndetic(&[three.clone()]).unwrap(), three);
        assert!(product_syndetic(&[]).is_err());
        assert!(product_syndetic(&[p]).is_err());
    }

    #[test]
    fn thickenings() {
        let t = thicken(&SyndeticPresentation::lattice(vec![3]).unwrap(), 2);
        assert_eq!(t.window(20).len(), 21);
        let t = thicken(&SyndeticPresentation::lattice(vec![5]).unwrap(), 2);
        let want: Vec<Vec<u64>> = (0..=30).filter(|a| a % 5 <= 2).map(|a| vec![a]).collect();
        assert_eq!(t.window(30), want);
        assert!(SyndeticPresentation::new(vec![5], vec![]).is_err());
    }

    fn l1_fixtures() -> Vec<TsPresentation> {
        [Family::NotPow2, Family::NotThreePow2, Family::NotPow2Minus1]
            .iter()
            .map(|f| TsSpec { coords: vec![*f] }.presentation())
            .collect()
    }

    #[test]
    fn families_are_valid() {
        for f in l1_fixtures() {
            for n in 0..=6 {
                assert!(f.validate(n, None).unwrap().passed(), "{} n={n}", f.name());
            }
        }
    }

    #[test]
    fn excluded_sets_are_not_syndetic() {
        let pow2 = |v: &[u64]| v[0].is_power_of_two();
        assert!(is_syndetic_window(1, &pow2, 20, 200).unwrap().is_some());
        let three = |v: &[u64]| v[0] % 3 == 0 && (v[0] / 3).is_power_of_two();
        assert!(is_syndetic_window(1, &three, 20, 200).unwrap().is_some());
    }

    #[test]
    fn trivial_intersection() {
        let all = TsPresentation::everything(1);
        let f = ts_intersect(&all, &all).unwrap();
        assert!(f.contains(&[17]));
        assert!(f.validate(3, None).unwrap().passed());
        assert!(ts_intersect(&all, &TsPresentation::everything(2)).is_err());
    }

    #[test]
    fn pairwise_and_folded_intersections() {
        let fs = l1_fixtures();
        let f = ts_intersect(&fs[0], &fs[1]).unwrap();
        for n in 1..=3 {
            let c = f.validate(n, Some(512)).unwrap();
            assert!(c.passed(), "n={n}");
            for s in c.generated.window(512 - n) {
                for p in 0..=n {
                    let v = s[0] + p;
                    assert!(!v.is_power_of_two());
                    assert!(!(v % 3 == 0 && (v / 3).is_power_of_two()));
                }
            }
        }
        let all3 = ts_intersect_all(&fs).unwrap();
        for n in 1..=3 {
            assert!(all3.validate(n, None).unwrap().passed());
        }
    }

    #[test]
    fn two_dimensional_fold() {
        let specs = ["not-pow2*all", "all*not-3pow2", "not-pow2-minus1*not-pow2-minus1"];
        let fs: Vec<_> = specs.iter().map(|s| TsSpec::parse(s).unwrap().presentation()).collect();
        let all3 = ts_intersect_all(&fs).unwrap();
        for n in 1..=2 {
            let c = all3.validate(n, None).unwrap();
            assert!(c.passed());
            assert!(c.window >= 3 * c.generated.period().iter().max().unwrap());
        }
        assert!(TsSpec::parse("bogus").is_err());
    }

    #[test]
    fn broken_generator_is_caught() {
        let bad = TsPresentation::new(
            1,
            "bad",
            Arc::new(|_| SyndeticPresentation::lattice(vec![4])),
            Arc::new(|v| v[0] % 4 == 0),
        );
        let c = bad.validate(2, None).unwrap();
        assert!(c.gap_counterexample.is_none());
        assert_eq!(c.thickening_counterexample, Some(vec![1]));
    }
}
