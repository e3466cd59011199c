//! Serialized reports and their re-verification.
//!
//! [`recheck`] rebuilds the system from the embedded [`SystemSpec`] and
//! replays each recorded fact through `step`, `dist_sq` and set membership.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::catalog::SystemSpec;
use crate::counterexample::{dot, nonzero_patterns, IndfipRefutation, RpdWitness, StepBoundReport};
use crate::error::{Error, Result};
use crate::independence::{
    exhaustive_independence, IndependenceSearchReport, IpFailure, IpIndependenceCertificate, Neighborhood, Route,
    SeTupleWitness,
};
use crate::meanstats::{average_enclosure, mean_equi_scan, verdict, BesicovitchValue, MeanScanReport};
use crate::numeric::{dist_sq, fmt_rational, int, rational_str, Rational};
use crate::relations::{distality_scan, rp_witness, DistalityReport, PairClassification, RegionalWitness, SearchBounds, Verdict};
use crate::systems::{Point, SystemPresentation};
use crate::zplus::{check_generated, ts_intersect_all, TsCheck, TsSpec};
use crate::CylPoint;

pub const VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub v: String,
    #[serde(flatten)]
    pub body: ReportBody,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpSearch {
    pub system: SystemSpec,
    pub x: Point,
    pub y: Point,
    pub d: u64,
    #[serde(with = "rational_str")]
    pub eps: Rational,
    pub max_step: u64,
    pub circle_samples: usize,
    pub point_limit: usize,
    pub witness: Option<RegionalWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistalityRun {
    pub system: SystemSpec,
    pub circle_samples: usize,
    pub pair_budget: u64,
    pub seed: u64,
    pub report: DistalityReport,
}

/// Window validations of the intersection of `operands`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsIntersectReport {
    pub operands: Vec<TsSpec>,
    pub checks: Vec<TsCheck>,
}

impl TsIntersectReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }
}

/// Folds [`crate::zplus::ts_intersect`] over `operands` and validates cube sizes `ns`.
pub fn ts_intersect_report(operands: &[TsSpec], ns: &[u64], window: Option<u64>) -> Result<TsIntersectReport> {
    let pres: Vec<_> = operands.iter().map(|o| o.presentation()).collect();
    let f = ts_intersect_all(&pres)?;
    let checks = ns.iter().map(|&n| f.validate(n, window)).collect::<Result<_>>()?;
    Ok(TsIntersectReport {
        operands: operands.to_vec(),
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReportBody {
    Claim1 { witness: RpdWitness },
    Refutation { transcript: IndfipRefutation },
    StepBound { report: StepBoundReport },
    Proximal { system: SystemSpec, classification: PairClassification },
    Distality { run: DistalityRun },
    RpWitness { search: RpSearch },
    Independence { search: IndependenceSearchReport },
    IpCertificate { certificate: IpIndependenceCertificate },
    IpFailure { failure: IpFailure },
    SeWitness { witness: SeTupleWitness },
    TsIntersect { report: TsIntersectReport },
    Besicovitch { system: SystemSpec, value: BesicovitchValue },
    MeanScan { report: MeanScanReport },
}

impl Report {
    pub fn new(body: ReportBody) -> Self {
        Report {
            v: VERSION.into(),
            body,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Report> {
        serde_json::from_str(text).map_err(|e| Error::Precondition(format!("malformed report: {e}")))
    }

    pub fn kind(&self) -> &'static str {
        match &self.body {
            ReportBody::Claim1 { .. } => "claim1",
            ReportBody::Refutation { .. } => "refutation",
            ReportBody::StepBound { .. } => "step-bound",
            ReportBody::Proximal { .. } => "proximal",
            ReportBody::Distality { .. } => "distality",
            ReportBody::RpWitness { .. } => "rp-witness",
            ReportBody::Independence { .. } => "independence",
            ReportBody::IpCertificate { .. } => "ip-certificate",
            ReportBody::IpFailure { .. } => "ip-failure",
            ReportBody::SeWitness { .. } => "se-witness",
            ReportBody::TsIntersect { .. } => "ts-intersect",
            ReportBody::Besicovitch { .. } => "besicovitch",
            ReportBody::MeanScan { .. } => "mean-scan",
        }
    }
}

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Construction(msg.into()))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        fail(msg())
    }
}

/// Re-verifies a report. `Ok` means every recorded fact was reproduced.
pub fn recheck(report: &Report) -> Result<()> {
    ensure(report.v == VERSION, || format!("unknown schema version `{}`", report.v))?;
    match &report.body {
        ReportBody::Claim1 { witness } => recheck_claim1(witness),
        ReportBody::Refutation { transcript } => recheck_refutation(transcript),
        ReportBody::StepBound { report } => recheck_step_bound(report),
        ReportBody::Proximal { system, classification } => recheck_proximal(&system.build()?, classification),
        ReportBody::Distality { run } => recheck_distality(run),
        ReportBody::RpWitness { search } => recheck_rp(search),
        ReportBody::Independence { search } => recheck_independence(search),
        ReportBody::IpCertificate { certificate } => certificate.verify(),
        ReportBody::IpFailure { failure } => failure.verify(),
        ReportBody::SeWitness { witness } => recheck_se(witness),
        ReportBody::TsIntersect { report } => recheck_ts(report),
        ReportBody::Besicovitch { system, value } => recheck_besicovitch(&system.build()?, value),
        ReportBody::MeanScan { report } => recheck_mean_scan(report),
    }
}

/// Parses and re-verifies a report file's contents.
pub fn recheck_json(text: &str) -> Result<Report> {
    let r = Report::from_json(text)?;
    recheck(&r)?;
    Ok(r)
}

fn ratio_u(p: u64, q: u64) -> Rational {
    Rational::new(p.into(), q.into())
}

/// `B_i` and `A_i`, computed from their coordinates.
fn anchors(i: u64) -> Result<(CylPoint, CylPoint)> {
    let x = ratio_u(2 * i + 1, 2 * i * (i + 1));
    Ok((CylPoint::new(x.clone(), int(0))?, CylPoint::new(x, int(1))?))
}

fn cyl(p: &Point) -> Result<&CylPoint> {
    p.as_cyl().ok_or_else(|| Error::Construction(format!("{p} is not a cylinder point")))
}

fn recheck_claim1(w: &RpdWitness) -> Result<()> {
    let d = w.parameters.d;
    let eps = &w.parameters.eps;
    ensure(d >= 1 && w.chosen_i_or_levels.len() == 1, || "malformed parameters".into())?;
    let i = w.chosen_i_or_levels[0];
    let admissible = |j: u64| {
        ratio_u(2 * j + 1, 2 * j * (j + 1)) < *eps && BigUint::from((1 + d) * d * j) < (BigUint::one() << j)
    };
    ensure(i >= 1 && admissible(i), || format!("level {i} violates the level conditions"))?;
    ensure((1..i).all(|j| !admissible(j)), || format!("a level below {i} already qualifies"))?;
    let want: Vec<u64> = (1..=d).map(|k| 2 * i * k).collect();
    ensure(w.nbar == want, || format!("nbar {:?} should be {want:?}", w.nbar))?;
    let sys = SystemSpec::Counterexample { levels: i }.build()?;
    let (b_i, a_i) = anchors(i)?;
    let a = CylPoint::new(int(0), int(1))?;
    ensure(w.anchor_dist_sq == dist_sq(&a_i, &a), || "anchor distance does not match".into())?;
    ensure(w.anchor_dist_sq < eps * eps, || "A_i is not eps-close to A".into())?;
    let patterns = nonzero_patterns(d as usize);
    ensure(patterns.len() == w.checks.len(), || "one check per pattern is required".into())?;
    for (alpha, c) in patterns.iter().zip(&w.checks) {
        let t = dot(&w.nbar, alpha);
        ensure(c.alpha_or_residues == alpha.iter().map(|&v| v as u64).collect::<Vec<_>>(), || {
            format!("pattern {:?} out of order", c.alpha_or_residues)
        })?;
        ensure(c.time == t, || format!("time {} should be {t}", c.time))?;
        let l = sys.step(&Point::Cyl(a_i.clone()), t)?;
        let r = sys.step(&Point::Cyl(b_i.clone()), t)?;
        ensure(*cyl(&l)? == c.left && *cyl(&r)? == c.right, || format!("iterates at time {t} differ"))?;
        let d2 = dist_sq(&c.left, &c.right);
        ensure(d2 == c.dist_sq, || format!("dist_sq at time {t} is {} not {}", fmt_rational(&d2), fmt_rational(&c.dist_sq)))?;
        ensure(c.bound_sq == eps * eps && d2 < c.bound_sq, || format!("pattern {alpha:?} is not eps-close"))?;
    }
    Ok(())
}

const EXHAUSTIVE_CYCLE: u64 = 1 << 16;

fn recheck_refutation(t: &IndfipRefutation) -> Result<()> {
    let p = &t.parameters;
    let b = &t.balls;
    let (c, dd) = (&p.c, &p.dd);
    ensure(int(0) <= *dd && dd < c && *c <= int(1), || "parameters out of range".into())?;
    let k = b.k;
    ensure(k >= 1 && *c > ratio_u(2, k) && (k == 1 || *c <= ratio_u(2, k - 1)), || format!("k = {k} is not least with c > 2/k"))?;
    let quarter = (c - dd) / int(4);
    let kr = ratio_u(2 * k + 1, 2 * k * (k + 1));
    ensure(b.diameter_bound == quarter.clone().min(kr), || "diameter bound does not match".into())?;
    ensure(b.r1 > int(0) && b.r1 == b.r2 && int(2) * &b.r1 < b.diameter_bound, || "radii too large".into())?;
    ensure(b.center1 == CylPoint::new(int(0), c.clone())? && b.center2 == CylPoint::new(int(0), dd.clone())?, || {
        "centres do not match".into()
    })?;
    let reach = &b.separation_lower + &b.r1 + &b.r2;
    ensure(reach >= int(0) && &reach * &reach <= dist_sq(&b.center1, &b.center2), || "separation bound is not a lower bound".into())?;
    ensure(b.separation_required == int(3) * (c - dd) / int(4), || "required separation does not match".into())?;
    ensure(b.separation_lower > b.separation_required, || "neighbourhoods are not separated enough".into())?;
    ensure(t.circle_refuted == (b.separation_lower > int(0)), || "circle verdict does not match".into())?;
    ensure(t.chosen_i_or_levels == (1..=p.max_level).collect::<Vec<_>>(), || "levels list does not match".into())?;
    ensure(t.levels.len() as u64 == p.max_level, || "a level is missing".into())?;
    let r1_sq = &b.r1 * &b.r1;
    let r2_sq = &b.r2 * &b.r2;
    let in_u1 = |q: &CylPoint| dist_sq(q, &b.center1) < r1_sq;
    let in_u2 = |q: &CylPoint| dist_sq(q, &b.center2) < r2_sq;
    let mut found_falsifying = false;
    for (lvl, idx) in t.levels.iter().zip(1u64..) {
        let i = lvl.i;
        ensure(i == idx, || format!("level {i} out of order"))?;
        let len: BigUint = (BigUint::one() << (i + 1)) + BigUint::from(4 * i + 1);
        ensure(lvl.period == len.to_string(), || format!("period of I_{i} should be {len}"))?;
        ensure(lvl.vacuous == lvl.starts.is_empty(), || format!("vacuous flag of level {i}"))?;
        let sys = SystemSpec::Counterexample { levels: i }.build()?;
        let (_, a_i) = anchors(i)?;
        if len <= BigUint::from(EXHAUSTIVE_CYCLE) {
            // walk the whole cycle and redo the search by brute force
            let n = len.to_usize().expect("small");
            let mut cycle = Vec::with_capacity(n);
            let mut cur = Point::Cyl(a_i.clone());
            for _ in 0..n {
                cycle.push(cyl(&cur)?.clone());
                cur = sys.successor(&cur)?;
            }
            ensure(cur == Point::Cyl(a_i.clone()), || format!("I_{i} does not close after {n} steps"))?;
            let hits: Vec<usize> = (0..n).filter(|&q| in_u1(&cycle[q])).collect();
            ensure(hits.len() == lvl.starts.len(), || format!("level {i}: {} starts in U1, {} recorded", hits.len(), lvl.starts.len()))?;
            let mut recorded: Vec<&CylPoint> = lvl.starts.iter().map(|s| &s.start).collect();
            let mut actual: Vec<&CylPoint> = hits.iter().map(|&q| &cycle[q]).collect();
            recorded.sort();
            actual.sort();
            ensure(recorded == actual, || format!("level {i}: recorded starts differ"))?;
            for s in &lvl.starts {
                let p = cycle.iter().position(|q| *q == s.start).expect("matched above");
                let mut residues: Vec<usize> = hits.iter().map(|&q| (q + n - p) % n).collect();
                residues.sort_unstable();
                ensure(s.residues == residues.iter().map(|r| r.to_string()).collect::<Vec<_>>(), || {
                    format!("level {i}: residues of {} differ", s.start)
                })?;
                let mut min: Option<Rational> = None;
                for &r1 in &residues {
                    for &r2 in &residues {
                        let q = &cycle[(p + r1 + r2) % n];
                        if in_u2(q) {
                            found_falsifying = true;
                        }
                        let dq = dist_sq(q, &b.center2);
                        if min.as_ref().is_none_or(|m| dq < *m) {
                            min = Some(dq);
                        }
                    }
                }
                ensure(s.pairs_checked == (residues.len() * residues.len()) as u64, || format!("level {i}: pair count"))?;
                ensure(min.as_ref() == Some(&s.min_dist_sq_to_d), || format!("level {i}: minimum distance to D differs"))?;
            }
        } else {
            // replay the recorded residues with jumps
            for s in &lvl.starts {
                let start = Point::Cyl(s.start.clone());
                ensure(in_u1(&s.start) && sys.contains(&start), || format!("level {i}: {} is not a start in U1", s.start))?;
                let residues = s
                    .residues
                    .iter()
                    .map(|r| r.parse::<BigUint>().map_err(|_| Error::Construction(format!("bad residue `{r}`"))))
                    .collect::<Result<Vec<_>>>()?;
                ensure(residues.first().is_some_and(|r| r.is_zero()), || "residue list must start at 0".into())?;
                for r in &residues {
                    ensure(in_u1(cyl(&sys.step_big(&start, r)?)?), || format!("level {i}: residue {r} leaves U1"))?;
                }
                for r1 in &residues {
                    for r2 in &residues {
                        if in_u2(cyl(&sys.step_big(&start, &(r1 + r2))?)?) {
                            found_falsifying = true;
                        }
                    }
                }
            }
        }
    }
    ensure(found_falsifying == t.falsifying.is_some(), || "falsifying verdict does not match".into())
}

fn recheck_step_bound(r: &StepBoundReport) -> Result<()> {
    let i = r.i;
    ensure(r.bound_sq == ratio_u(1, 4 * i * i), || "bound should be 1/(2i)^2".into())?;
    if !r.exhaustive {
        let again = crate::counterexample::step_distance_bound_check(i, r.sample_budget)?;
        return ensure(again == *r, || "sampled step bound does not reproduce".into());
    }
    let sys = SystemSpec::Counterexample { levels: i }.build()?;
    let len = (1u64 << (i + 1)) + 4 * i + 1;
    ensure(r.steps_checked == len, || format!("an exhaustive check of I_{i} covers {len} steps"))?;
    let (_, a_i) = anchors(i)?;
    let mut cur = Point::Cyl(a_i);
    let mut max = int(0);
    for _ in 0..len {
        let next = sys.successor(&cur)?;
        let d = dist_sq(cyl(&cur)?, cyl(&next)?);
        if d > max {
            max = d;
        }
        cur = next;
    }
    ensure(max == r.max_dist_sq, || format!("largest step is {}", fmt_rational(&max)))?;
    ensure(r.all_pass == (max <= r.bound_sq), || "pass flag does not match".into())
}

fn recheck_proximal(sys: &SystemPresentation, c: &PairClassification) -> Result<()> {
    let total = c.preperiod + c.joint_period;
    ensure(c.joint_period >= 1, || "joint period must be positive".into())?;
    // the pair orbit must repeat exactly at preperiod + period
    let (a_end, b_end) = (sys.step(&c.x, total)?, sys.step(&c.y, total)?);
    let (a_pre, b_pre) = (sys.step(&c.x, c.preperiod)?, sys.step(&c.y, c.preperiod)?);
    ensure(a_end == a_pre && b_end == b_pre, || "pair orbit does not repeat as recorded".into())?;
    let (mut a, mut b) = (c.x.clone(), c.y.clone());
    let mut sync = None;
    let mut min: Option<Rational> = None;
    for n in 0..total {
        if a == b && sync.is_none() {
            sync = Some(n);
        }
        let d = sys.dist_sq(&a, &b)?;
        if min.as_ref().is_none_or(|m| d < *m) {
            min = Some(d);
        }
        a = sys.successor(&a)?;
        b = sys.successor(&b)?;
    }
    ensure(sync == c.sync_time, || format!("sync time should be {sync:?}"))?;
    let expected = match sync {
        Some(0) => Verdict::Proximal,
        Some(_) => Verdict::AsymptoticToEqual,
        None => Verdict::NotProximal,
    };
    ensure(c.verdict == expected, || format!("verdict should be {expected:?}"))?;
    if sync.is_none() {
        ensure(min == c.min_dist_sq, || "minimum distance does not match".into())?;
        ensure(min.as_ref().is_some_and(|m| *m > int(0)), || "a non-proximal pair needs a positive minimum".into())?;
    }
    Ok(())
}

fn recheck_distality(run: &DistalityRun) -> Result<()> {
    let sys = run.system.build()?;
    if let Some(v) = &run.report.violation {
        recheck_proximal(&sys, v)?;
        ensure(v.x != v.y && v.is_proximal(), || "violation must be a proximal pair of distinct points".into())?;
    }
    let again = distality_scan(&sys, run.circle_samples, run.pair_budget, run.seed)?;
    ensure(again == run.report, || "scan does not reproduce".into())
}

fn recheck_rp(s: &RpSearch) -> Result<()> {
    let sys = s.system.build()?;
    match &s.witness {
        Some(w) => {
            ensure(w.system == s.system && w.x == s.x && w.y == s.y && w.d == s.d && w.eps == s.eps, || {
                "witness does not answer the recorded query".into()
            })?;
            w.verify(&sys)
        }
        None => {
            let bounds = SearchBounds {
                max_step: s.max_step,
                circle_samples: s.circle_samples,
                point_limit: s.point_limit,
            };
            let again = rp_witness(&s.system, &sys, &s.x, &s.y, s.d, &s.eps, &bounds)?;
            ensure(again.is_none(), || "the bounded search finds a witness".into())
        }
    }
}

fn recheck_independence(s: &IndependenceSearchReport) -> Result<()> {
    match &s.certificate {
        Some(c) => {
            ensure(c.system == s.system && c.neighborhoods == s.neighborhoods, || "certificate answers another query".into())?;
            ensure(c.times.len() == s.k && c.times.last().is_some_and(|&t| t <= s.horizon), || {
                "times do not fit k and the horizon".into()
            })?;
            c.verify()
        }
        None => {
            let sys = s.system.build()?;
            let naive = exhaustive_independence(&sys, &s.neighborhoods, s.k, s.horizon)?;
            ensure(naive.is_none(), || format!("exhaustive enumeration finds times {naive:?}"))
        }
    }
}

fn recheck_se(w: &SeTupleWitness) -> Result<()> {
    let c = &w.certificate;
    c.verify()?;
    ensure(c.times == w.nbar && w.nbar.len() == w.l, || "time vector does not match l".into())?;
    let radii_sq = c
        .neighborhoods
        .iter()
        .map(|u| match u {
            Neighborhood::Ball { radius, .. } => Ok(radius * radius),
            Neighborhood::Set { .. } => fail("neighbourhoods must be balls"),
        })
        .collect::<Result<Vec<_>>>()?;
    ensure(radii_sq.iter().min() == Some(&w.delta_sq), || "delta is not the least radius".into())?;
    ensure(w.delta_prime_sq > int(0) && w.delta_prime_sq <= w.delta_sq, || "delta' out of range".into())?;
    ensure((w.route == Route::Filter) == w.filter_failure.is_none(), || "route and failure disagree".into())
}

fn recheck_ts(r: &TsIntersectReport) -> Result<()> {
    let l = r.operands.first().map(|o| o.coords.len()).unwrap_or(0);
    ensure(l > 0 && r.operands.iter().all(|o| o.coords.len() == l), || "operands need one common dimension".into())?;
    let member = |v: &[u64]| r.operands.iter().all(|o| o.contains(v));
    for c in &r.checks {
        let s = c.generated.revalidated()?;
        ensure(s.l() == l, || "generated set has the wrong dimension".into())?;
        ensure(c.window >= s.gap(), || "window smaller than the gap".into())?;
        let (gap_cx, thick_cx) = check_generated(&s, c.n, c.window, &member)?;
        ensure(gap_cx == c.gap_counterexample && thick_cx == c.thickening_counterexample, || {
            format!("window check at n = {} does not reproduce", c.n)
        })?;
        ensure(c.passed(), || format!("S_{} fails on the window", c.n))?;
    }
    Ok(())
}

fn recheck_besicovitch(sys: &SystemPresentation, v: &BesicovitchValue) -> Result<()> {
    ensure(v.period >= 1 && v.exact_sq_terms.len() as u64 == v.period, || "one term per step of the period".into())?;
    let (mut a, mut b) = (sys.step(&v.x, v.start)?, sys.step(&v.y, v.start)?);
    let (a0, b0) = (a.clone(), b.clone());
    for (n, t) in v.exact_sq_terms.iter().enumerate() {
        ensure(sys.dist_sq(&a, &b)? == *t, || format!("term {n} does not match"))?;
        a = sys.successor(&a)?;
        b = sys.successor(&b)?;
    }
    ensure(a == a0 && b == b0, || "the pair does not return after the recorded period".into())?;
    // the period must be the least joint one
    let (mut a, mut b) = (sys.successor(&a0)?, sys.successor(&b0)?);
    for m in 1..v.period {
        ensure(!(a == a0 && b == b0), || format!("the pair already returns after {m} steps"))?;
        a = sys.successor(&a)?;
        b = sys.successor(&b)?;
    }
    let again = average_enclosure(&v.exact_sq_terms, &v.tol)?;
    ensure(again == v.enclosure, || "enclosure does not match".into())?;
    ensure(v.enclosure.width() <= v.tol, || "enclosure wider than the tolerance".into())
}

fn recheck_mean_scan(r: &MeanScanReport) -> Result<()> {
    let sys = r.system.build()?;
    for e in &r.entries {
        ensure(sys.dist_sq(&e.x, &e.y)? == e.dist_sq && e.dist_sq < &r.delta * &r.delta, || {
            format!("pair ({}, {}) is not delta-close", e.x, e.y)
        })?;
        ensure(verdict(&e.enclosure, &r.eps) == e.verdict, || "verdict does not follow from the enclosure".into())?;
        let bv = crate::meanstats::besicovitch(&sys, &e.x, &e.y, &r.tol)?;
        ensure(bv.period == e.period, || "period does not match".into())?;
        let exact_lo_hi = (&bv.enclosure.lo - &r.tol, &bv.enclosure.hi + &r.tol);
        ensure(e.enclosure.lo >= exact_lo_hi.0 && e.enclosure.hi <= exact_lo_hi.1, || {
            "enclosure is inconsistent with the recomputed average".into()
        })?;
    }
    let again = mean_equi_scan(&r.system, &r.eps, &r.delta, &r.tol, &r.sample)?;
    ensure(again == *r, || "scan does not reproduce".into())
}
