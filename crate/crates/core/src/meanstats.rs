//! Orbit averages of the distance, mean-equicontinuity scans and empirical pair measures.

use std::collections::BTreeMap;

use num_traits::Signed;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::SystemSpec;
use crate::error::{Error, Result};
use crate::numeric::{fmt_rational, rational_str, rational_vec, ratio, sqrt_enclose, Enclosure, Rational};
use crate::relations::orbit_shape;
use crate::systems::{lcm, step_budget, Point, SystemPresentation};

/// `(1/n) sum sqrt(t_i)` with every root enclosed to width `tol`.
pub fn average_enclosure(sq_terms: &[Rational], tol: &Rational) -> Result<Enclosure> {
    if sq_terms.is_empty() {
        return Err(Error::Precondition("no terms to average".into()));
    }
    let mut sum = Enclosure::exact(Rational::from_integer(0.into()));
    for t in sq_terms {
        sum = sum.add(&sqrt_enclose(t, tol)?);
    }
    Ok(sum.scale(&ratio(1, sq_terms.len() as i64)))
}

/// Exact average of `rho(T^i x, T^i y)` over one joint period.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BesicovitchValue {
    pub x: Point,
    pub y: Point,
    /// Terms start here, after both orbits have become periodic.
    pub start: u64,
    pub period: u64,
    #[serde(with = "rational_str")]
    pub tol: Rational,
    #[serde(with = "rational_vec")]
    pub exact_sq_terms: Vec<Rational>,
    pub enclosure: Enclosure,
}

fn joint_shape(sys: &SystemPresentation, x: &Point, y: &Point) -> Result<(u64, u64)> {
    let budget = step_budget();
    let (px, lx) = orbit_shape(sys, x, budget)?;
    let (py, ly) = orbit_shape(sys, y, budget)?;
    let period = lcm(lx, ly);
    let start = px.max(py);
    if start.saturating_add(period) > budget {
        return Err(Error::Budget(format!("joint period {period} exceeds the step budget {budget}")));
    }
    Ok((start, period))
}

fn sq_terms(sys: &SystemPresentation, x: &Point, y: &Point, start: u64, n: u64) -> Result<Vec<Rational>> {
    let (mut a, mut b) = (sys.step(x, start)?, sys.step(y, start)?);
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        out.push(sys.dist_sq(&a, &b)?);
        a = sys.successor(&a)?;
        b = sys.successor(&b)?;
    }
    Ok(out)
}

/// `limsup (1/n) sum_{i<n} rho(T^i x, T^i y)` for eventually periodic `x, y`.
pub fn besicovitch(sys: &SystemPresentation, x: &Point, y: &Point, tol: &Rational) -> Result<BesicovitchValue> {
    if !tol.is_positive() {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let (start, period) = joint_shape(sys, x, y)?;
    let exact_sq_terms = sq_terms(sys, x, y, start, period)?;
    let enclosure = average_enclosure(&exact_sq_terms, tol)?;
    Ok(BesicovitchValue {
        x: x.clone(),
        y: y.clone(),
        start,
        period,
        tol: tol.clone(),
        exact_sq_terms,
        enclosure,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanVerdict {
    /// Upper bound below `eps`.
    Pass,
    /// Lower bound at least `eps`.
    Violation,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub x: Point,
    pub y: Point,
    #[serde(with = "rational_str")]
    pub dist_sq: Rational,
    pub period: u64,
    pub enclosure: Enclosure,
    pub verdict: ScanVerdict,
}

/// Which pairs a scan looks at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSample {
    pub circle_samples: usize,
    pub point_limit: usize,
    /// Close pairs beyond this many are subsampled with `seed`.
    pub max_pairs: usize,
    pub seed: u64,
}

impl Default for PairSample {
    fn default() -> Self {
        PairSample {
            circle_samples: 16,
            point_limit: 1 << 12,
            max_pairs: 256,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanScanReport {
    pub system: SystemSpec,
    #[serde(with = "rational_str")]
    pub eps: Rational,
    #[serde(with = "rational_str")]
    pub delta: Rational,
    #[serde(with = "rational_str")]
    pub tol: Rational,
    pub sample: PairSample,
    /// Pairs closer than `delta` before subsampling.
    pub close_pairs: usize,
    pub entries: Vec<ScanEntry>,
}

impl MeanScanReport {
    pub fn count(&self, v: ScanVerdict) -> usize {
        self.entries.iter().filter(|e| e.verdict == v).count()
    }

    /// Columns `x,y,period,lo,hi,verdict`.
    pub fn csv(&self) -> String {
        let mut out = String::from("x,y,period,lo,hi,verdict\n");
        for e in &self.entries {
            let verdict = match e.verdict {
                ScanVerdict::Pass => "pass",
                ScanVerdict::Violation => "violation",
                ScanVerdict::Undecided => "undecided",
            };
            out.push_str(&format!(
                "\"{}\",\"{}\",{},{},{},{verdict}\n",
                e.x,
                e.y,
                e.period,
                fmt_rational(&e.enclosure.lo),
                fmt_rational(&e.enclosure.hi)
            ));
        }
        out
    }
}

pub fn verdict(enclosure: &Enclosure, eps: &Rational) -> ScanVerdict {
    if enclosure.hi < *eps {
        ScanVerdict::Pass
    } else if enclosure.lo >= *eps {
        ScanVerdict::Violation
    } else {
        ScanVerdict::Undecided
    }
}

/// Average for every sampled pair with `rho(x, y) < delta`, judged against `eps`.
///
/// The tolerance is refined up to three times by a factor of 16 before a
/// pair is left undecided.
pub fn mean_equi_scan(
    system: &SystemSpec,
    eps: &Rational,
    delta: &Rational,
    tol: &Rational,
    sample_spec: &PairSample,
) -> Result<MeanScanReport> {
    if !eps.is_positive() || !delta.is_positive() || !tol.is_positive() {
        return Err(Error::Precondition("eps, delta and tol must be positive".into()));
    }
    let sys = system.build()?;
    let points = sys.sample_points(sample_spec.circle_samples, sample_spec.point_limit)?;
    let mut close = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if sys.dist_lt(a, b, delta)? {
                close.push((a.clone(), b.clone()));
            }
        }
    }
    let close_pairs = close.len();
    if close.len() > sample_spec.max_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_spec.seed);
        let mut keep = sample(&mut rng, close.len(), sample_spec.max_pairs).into_vec();
        keep.sort_unstable();
        close = keep.into_iter().map(|i| close[i].clone()).collect();
    }
    let mut entries = Vec::with_capacity(close.len());
    for (x, y) in close {
        let (start, period) = joint_shape(&sys, &x, &y)?;
        let terms = sq_terms(&sys, &x, &y, start, period)?;
        let mut t = tol.clone();
        let mut enclosure = average_enclosure(&terms, &t)?;
        for _ in 0..3 {
            if verdict(&enclosure, eps) != ScanVerdict::Undecided {
                break;
            }
            t /= ratio(16, 1);
            enclosure = average_enclosure(&terms, &t)?;
        }
        entries.push(ScanEntry {
            dist_sq: sys.dist_sq(&x, &y)?,
            verdict: verdict(&enclosure, eps),
            x,
            y,
            period,
            enclosure,
        });
    }
    entries.sort_by(|a, b| (&a.x, &a.y).cmp(&(&b.x, &b.y)));
    Ok(MeanScanReport {
        system: system.clone(),
        eps: eps.clone(),
        delta: delta.clone(),
        tol: tol.clone(),
        sample: sample_spec.clone(),
        close_pairs,
        entries,
    })
}

/// `(1/n_k) sum_{i<n_k} delta_(T^i x_k, T^i y_k)`, one atom per step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalPairMeasure {
    pub n_k: u64,
    pub atoms: Vec<(Point, Point)>,
    #[serde(with = "rational_vec")]
    sq_terms: Vec<Rational>,
}

pub fn empirical_measure(sys: &SystemPresentation, x: &Point, y: &Point, n_k: u64) -> Result<EmpiricalPairMeasure> {
    if n_k == 0 {
        return Err(Error::Precondition("n_k must be at least 1".into()));
    }
    if n_k > step_budget() {
        return Err(Error::Budget(format!("window {n_k} exceeds the step budget")));
    }
    let (mut a, mut b) = (x.clone(), y.clone());
    let mut atoms = Vec::with_capacity(n_k as usize);
    let mut sq = Vec::with_capacity(n_k as usize);
    for _ in 0..n_k {
        sq.push(sys.dist_sq(&a, &b)?);
        let (na, nb) = (sys.successor(&a)?, sys.successor(&b)?);
        atoms.push((std::mem::replace(&mut a, na), std::mem::replace(&mut b, nb)));
    }
    Ok(EmpiricalPairMeasure {
        n_k,
        atoms,
        sq_terms: sq,
    })
}

impl EmpiricalPairMeasure {
    pub fn weight(&self) -> Rational {
        ratio(1, self.n_k as i64)
    }

    /// Enclosure of the integral of `rho`.
    pub fn integrate_rho(&self, tol: &Rational) -> Result<Enclosure> {
        average_enclosure(&self.sq_terms, tol)
    }

    /// Distinct atoms with their total weights.
    pub fn support(&self) -> BTreeMap<(Point, Point), Rational> {
        let mut out = BTreeMap::new();
        for a in &self.atoms {
            *out.entry(a.clone()).or_insert_with(|| Rational::from_integer(0.into())) += self.weight();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::build_piece;
    use crate::numeric::int;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    fn piece_b(i: u64) -> Point {
        Point::Cyl(build_piece(i).unwrap().b())
    }

    fn ce(levels: u64) -> SystemPresentation {
        SystemSpec::Counterexample { levels }.build().unwrap()
    }

    #[test]
    fn circle_pair_is_exact() {
        let sys = ce(1);
        let v = besicovitch(&sys, &p("(0, 1/2)"), &p("(0, 1/4)"), &ratio(1, 1000)).unwrap();
        assert_eq!(v.enclosure, Enclosure::exact(ratio(1, 4)));
        assert_eq!(v.period, 1);
        let z = besicovitch(&sys, &p("(0, 1/2)"), &p("(0, 1/2)"), &ratio(1, 1000)).unwrap();
        assert_eq!(z.enclosure, Enclosure::exact(int(0)));
    }

    #[test]
    fn nine_term_average() {
        let sys = ce(1);
        let b1 = piece_b(1);
        let y = sys.step(&b1, 3).unwrap();
        let tol = ratio(1, 1 << 20);
        let v = besicovitch(&sys, &b1, &y, &tol).unwrap();
                assert_eq!(v.period, 9);
        // term-by-term oracle
        let mut lo = int(0);
        let mut hi = int(0);
        let (mut a, mut b) = (b1.clone(), y.clone());
        for _ in 0..9 {
            let e = sqrt_enclose(&sys.dist_sq(&a, &b).unwrap(), &tol).unwrap();
            lo += e.lo;
            hi += e.hi;
            a = sys.successor(&a).unwrap();
            b = sys.successor(&b).unwrap();
        }
        assert_eq!(v.enclosure, Enclosure { lo: lo / int(9), hi: hi / int(9) });
        assert!(v.enclosure.width() <= tol);
        let m = empirical_measure(&sys, &b1, &y, 9).unwrap();
        assert_eq!(m.integrate_rho(&tol).unwrap(), v.enclosure);
    }

    #[test]
    fn shift_invariance_and_refinement() {
        let sys = ce(2);
        let x = piece_b(2);
        let y = sys.step(&piece_b(1), 4).unwrap();
        let v = besicovitch(&sys, &x, &y, &ratio(1, 64)).unwrap();
        let w = besicovitch(&sys, &sys.successor(&x).unwrap(), &sys.successor(&y).unwrap(), &ratio(1, 64)).unwrap();
        let mut a = v.exact_sq_terms.clone();
        let mut b = w.exact_sq_terms.clone();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        let fine = besicovitch(&sys, &x, &y, &ratio(1, 4096)).unwrap();
        assert!(fine.enclosure.lo >= v.enclosure.lo && fine.enclosure.hi <= v.enclosure.hi);
    }

    #[test]
    fn empirical_basics() {
        let sys = ce(1);
        let b = piece_b(1);
        let m = empirical_measure(&sys, &b, &b, 5).unwrap();
        assert_eq!(m.atoms.len(), 5);
        assert!(m.atoms.iter().all(|(a, c)| a == c));
        assert_eq!(m.integrate_rho(&ratio(1, 8)).unwrap(), Enclosure::exact(int(0)));
        let one = empirical_measure(&sys, &b, &piece_b(1), 1).unwrap();
        assert_eq!(one.support().into_values().collect::<Vec<_>>(), vec![int(1)]);
        let full = empirical_measure(&sys, &b, &sys.successor(&b).unwrap(), 18).unwrap();
        assert!(full.support().values().all(|w| *w == ratio(2, 18)));
        assert!(empirical_measure(&sys, &b, &b, 0).is_err());
    }

    #[test]
    fn scans() {
        let circle = SystemSpec::Explicit {
            tables: vec![],
            cycles: vec![],
            fixed: (0..8).map(|k| p(&format!("(0, {k}/40)"))).collect(),
        };
        let r = mean_equi_scan(&circle, &ratio(1, 10), &ratio(1, 20), &ratio(1, 1000), &PairSample::default()).unwrap();
        assert!(r.count(ScanVerdict::Pass) > 0);
        assert_eq!(r.count(ScanVerdict::Pass), r.entries.len());

        let r = mean_equi_scan(
            &crate::fixtures::mean_split(),
            &ratio(1, 10),
            &ratio(1, 20),
            &ratio(1, 1000),
            &PairSample::default(),
        )
        .unwrap();
        assert_eq!(r.count(ScanVerdict::Violation), 1);
        assert!(r.entries[0].enclosure.lo >= ratio(1, 2));
        assert!(r.csv().lines().count() == 2);

        let lone = SystemSpec::Explicit {
            tables: vec![],
            cycles: vec![],
            fixed: vec![p("(0, 0)")],
        };
        let r = mean_equi_scan(&lone, &ratio(1, 10), &ratio(1, 20), &ratio(1, 1000), &PairSample::default()).unwrap();
        assert!(r.entries.is_empty());
    }

    #[test]
    fn subsampling_is_deterministic() {
        let spec = SystemSpec::Counterexample { levels: 3 };
        let sample = PairSample {
            max_pairs: 5,
            ..PairSample::default()
        };
        let a = mean_equi_scan(&spec, &ratio(1, 10), &ratio(1, 4), &ratio(1, 100), &sample).unwrap();
        let b = mean_equi_scan(&spec, &ratio(1, 10), &ratio(1, 4), &ratio(1, 100), &sample).unwrap();
        assert_eq!(a.entries.len(), 5);
        assert!(a.close_pairs > 5);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
