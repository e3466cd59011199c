//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use dyntop::cli;
use dyntop::counterexample::{build_piece, step_distance_bound_check};
use dyntop::fixtures::fixed_point_fixtures;
use dyntop::independence::{
    exhaustive_independence, independence_search, search_certificate, se_tuple_witness_from_fixed_points,
    FiniteSystem, Neighborhood, Route,
};
use dyntop::meanstats::{besicovitch, empirical_measure};
use dyntop::numeric::{dist_sq, ratio, Rational};
use dyntop::report::{ts_intersect_report, Report, ReportBody};
use dyntop::zplus::TsSpec;
use dyntop::{Point, SystemSpec};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;

/// Reports emitted by one criterion, by name.
type Emitted = Vec<(String, String)>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["dyntop"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn criterion1(emitted: &mut Emitted) -> Outcome {
    for d in 1..=3u64 {
        for eps in ["1/2", "1/10", "1/100"] {
            let t = Instant::now();
            let (code, json, err) = run_cli(&["verify-claim1", "--d", &d.to_string(), "--eps", eps]);
            let elapsed = t.elapsed();
            ensure(code == 0, || format!("verify-claim1 d={d} eps={eps} exited {code}: {err}"))?;
            ensure(elapsed < Duration::from_secs(10), || format!("d={d} eps={eps} took {elapsed:?}"))?;
            let report = Report::from_json(&json).map_err(|e| e.to_string())?;
            let ReportBody::Claim1 { witness } = &report.body else {
                return Err("verify-claim1 emitted another kind".into());
            };
            let i = witness.level();
            let bound = d * (d + 1) * i;
            ensure(witness.checks.iter().all(|c| c.time <= bound), || {
                format!("d={d} eps={eps}: a check time exceeds (1+d)di")
            })?;
            if d == 1 && eps == "1/2" {
                ensure(i == 3 && witness.nbar == vec![6], || {
                    format!("(1, 1/2): level {i}, nbar {:?}", witness.nbar)
                })?;
                // step A_3 and B_3 through the system presentation, not the piece codec
                let sys = SystemSpec::Counterexample { levels: 3 }.build().unwrap();
                let piece = build_piece(3).unwrap();
                let a = sys.step(&Point::Cyl(piece.a()), 6).unwrap();
                let b = sys.step(&Point::Cyl(piece.b()), 6).unwrap();
                let stepped = sys.dist_sq(&a, &b).unwrap();
                let check = witness
                    .checks
                    .iter()
                    .find(|c| c.alpha_or_residues == vec![1])
                    .ok_or("no check for alpha = (1)")?;
                ensure(check.dist_sq == stepped, || {
                    format!("recorded {} but stepping gives {}", check.dist_sq, stepped)
                })?;
                ensure(stepped == ratio(1033, 36864), || format!("stepped value {stepped}"))?;
            }
            emitted.push((format!("claim1-d{d}-eps{}", eps.replace('/', "_")), json));
        }
    }
    Ok(())
}

fn criterion2(emitted: &mut Emitted) -> Outcome {
    for (c, dd) in [("1", "0"), ("3/4", "1/4"), ("9/10", "1/10")] {
        let t = Instant::now();
        let (code, json, err) = run_cli(&["refute-indfip", "--c", c, "--dd", dd, "--max-level", "12"]);
        let elapsed = t.elapsed();
        ensure(code == 0, || format!("refute c={c} dd={dd} exited {code}: {err}"))?;
        ensure(elapsed < Duration::from_secs(60), || format!("c={c} dd={dd} took {elapsed:?}"))?;
        let report = Report::from_json(&json).map_err(|e| e.to_string())?;
        let ReportBody::Refutation { transcript } = &report.body else {
            return Err("refute-indfip emitted another kind".into());
        };
        ensure(transcript.refuted() && transcript.levels.len() == 12, || {
            format!("c={c} dd={dd}: {} levels, refuted {}", transcript.levels.len(), transcript.refuted())
        })?;
        emitted.push((format!("refute-{}-{}", c.replace('/', "_"), dd.replace('/', "_")), json));
    }
    Ok(())
}

fn criterion3(emitted: &mut Emitted) -> Outcome {
    for i in 1..=8u64 {
        let sys = SystemSpec::Counterexample { levels: i }.build().unwrap();
        let piece = build_piece(i).unwrap();
        let expected = (1u64 << (i + 1)) + 4 * i + 1;
        ensure(*piece.len() == BigUint::from(expected), || format!("I_{i} has length {}", piece.len()))?;
        let points: BTreeSet<Point> = (0..expected)
            .map(|p| Point::Cyl(piece.point_at(&BigUint::from(p))))
            .collect();
        ensure(points.len() as u64 == expected, || format!("I_{i}: {} distinct points", points.len()))?;
        let mut images = BTreeSet::new();
        let bound = ratio(1, ((2 * i) * (2 * i)) as i64);
        for p in &points {
            let tp = sys.successor(p).unwrap();
            ensure(points.contains(&tp), || format!("I_{i}: T{p} leaves the piece"))?;
            let d = dist_sq(tp.as_cyl().unwrap(), p.as_cyl().unwrap());
            ensure(d <= bound, || format!("I_{i}: step from {p} has dist_sq {d}"))?;
            images.insert(tp);
        }
        ensure(images.len() as u64 == expected, || format!("I_{i}: T is not injective"))?;
        let start = Point::Cyl(piece.a());
        let mut p = sys.successor(&start).unwrap();
        let mut n = 1;
        while p != start {
            p = sys.successor(&p).unwrap();
            n += 1;
        }
        ensure(n == expected, || format!("I_{i}: the orbit of A_{i} has length {n}"))?;
        let r = step_distance_bound_check(i, 1 << 16).map_err(|e| e.to_string())?;
        ensure(r.exhaustive && r.all_pass, || format!("I_{i}: step-bound report fails"))?;
        emitted.push((format!("step-bound-{i}"), Report::new(ReportBody::StepBound { report: r }).to_json()));
    }
    Ok(())
}

fn criterion4(emitted: &mut Emitted) -> Outcome {
    let fixtures = [
        ["not-pow2", "not-3pow2", "not-pow2-minus1"],
        ["not-pow2*all", "all*not-3pow2", "not-pow2-minus1*not-pow2"],
    ];
    for (l, names) in fixtures.iter().enumerate() {
        let specs: Vec<TsSpec> = names.iter().map(|s| TsSpec::parse(s).unwrap()).collect();
        let mut groups: Vec<Vec<TsSpec>> = Vec::new();
        for a in 0..3 {
            for b in a + 1..3 {
                groups.push(vec![specs[a].clone(), specs[b].clone()]);
            }
        }
        groups.push(specs.clone());
        for (g, ops) in groups.iter().enumerate() {
            let r = ts_intersect_report(ops, &[1, 2, 3], None).map_err(|e| e.to_string())?;
            for c in &r.checks {
                let period = *c.generated.period().iter().max().unwrap();
                ensure(c.window >= 3 * period, || format!("l={} group {g}: window {} is short", l + 1, c.window))?;
            }
            ensure(r.passed(), || format!("l={} group {g}: a window check fails", l + 1))?;
            let report = Report::new(ReportBody::TsIntersect { report: r });
            emitted.push((format!("ts-l{}-{g}", l + 1), report.to_json()));
        }
    }
    Ok(())
}

fn singleton(k: u64) -> Neighborhood {
    Neighborhood::Set {
        points: vec![Point::Atom(k)],
    }
}

fn criterion5(emitted: &mut Emitted) -> Outcome {
    for m in 2..=12u64 {
        let spec = SystemSpec::Rotation { modulus: m };
        let sys = spec.build().unwrap();
        let fs = FiniteSystem::new(&sys).unwrap();
        for j in 1..m {
            let hoods = vec![singleton(0), singleton(j)];
            let bits: Vec<_> = hoods.iter().map(|h| h.bitset(&fs, &sys).unwrap()).collect();
            let found = independence_search(&fs, &bits, 2, 2 * m).map_err(|e| e.to_string())?;
            let brute = exhaustive_independence(&sys, &hoods, 2, 2 * m).map_err(|e| e.to_string())?;
            ensure(found.is_none() && brute.is_none(), || {
                format!("Z/{m} with #0, #{j}: search {found:?}, enumeration {brute:?}")
            })?;
            if j == m / 2 {
                let r = search_certificate(&spec, &hoods, 2, 2 * m).map_err(|e| e.to_string())?;
                emitted.push((format!("rotation-{m}"), Report::new(ReportBody::Independence { search: r }).to_json()));
            }
        }
    }
    Ok(())
}

fn criterion6(emitted: &mut Emitted) -> Outcome {
    for fx in fixed_point_fixtures() {
        let sys = fx.system.build().unwrap();
        let fs = FiniteSystem::new(&sys).unwrap();
        for l in 1..=3 {
            let made = se_tuple_witness_from_fixed_points(&fx.system, &fx.fixed, &fx.y, &fx.radii, l, fx.n_steps);
            let Ok(w) = made else {
                // the generator finds no vector below pre + l*period; the search must agree past that bound
                let hoods: Vec<_> = fx
                    .fixed
                    .iter()
                    .zip(&fx.radii)
                    .map(|(c, r)| fs.ball(&sys, c, r).unwrap())
                    .collect();
                let horizon = fs.preperiod() + (l as u64 + 1) * fs.period();
                let hit = independence_search(&fs, &hoods, l, horizon).map_err(|e| e.to_string())?;
                ensure(hit.is_none() && l > fx.l, || format!("{} l={l}: generator failed but search found {hit:?}", fx.name))?;
                continue;
            };
            ensure(l <= fx.l, || format!("{} l={l}: fixture declares a smaller l", fx.name))?;
            w.certificate.verify().map_err(|e| format!("{} l={l}: {e}", fx.name))?;
            let bits: Vec<_> = w
                .certificate
                .neighborhoods
                .iter()
                .map(|h| h.bitset(&fs, &sys).unwrap())
                .collect();
            let horizon = *w.nbar.iter().max().unwrap();
            let hit = independence_search(&fs, &bits, l, horizon).map_err(|e| e.to_string())?;
            let hit = hit.ok_or_else(|| format!("{} l={l}: search finds nothing up to {horizon}", fx.name))?;
            ensure(hit.times <= w.nbar, || format!("{} l={l}: search {:?} after {:?}", fx.name, hit.times, w.nbar))?;
            if w.route == Route::ExactIntersection {
                ensure(hit.times == w.nbar, || format!("{} l={l}: exact route {:?} vs {:?}", fx.name, w.nbar, hit.times))?;
            }
            emitted.push((format!("se-{}-{l}", fx.name), Report::new(ReportBody::SeWitness { witness: w }).to_json()));
        }
    }
    Ok(())
}

fn criterion7(emitted: &mut Emitted) -> Outcome {
    let spec = SystemSpec::Counterexample { levels: 2 };
    let sys = spec.build().unwrap();
    let mut pool = Vec::new();
    for i in 1..=2 {
        let piece = build_piece(i).unwrap();
        let len: u64 = (1u64 << (i + 1)) + 4 * i + 1;
        pool.extend((0..len).map(|p| Point::Cyl(piece.point_at(&BigUint::from(p)))));
    }
    let tol = ratio(1, 1_000_000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..20 {
        let x = pool[rng.gen_range(0..pool.len())].clone();
        let y = pool[rng.gen_range(0..pool.len())].clone();
        let b = besicovitch(&sys, &x, &y, &tol).map_err(|e| e.to_string())?;
        ensure(b.start == 0, || format!("pair {k}: not periodic from the start"))?;
        let mu = empirical_measure(&sys, &x, &y, b.period).map_err(|e| e.to_string())?;
        let enc = mu.integrate_rho(&tol).map_err(|e| e.to_string())?;
        ensure(
            serde_json::to_string(&enc).unwrap() == serde_json::to_string(&b.enclosure).unwrap(),
            || format!("pair {k}: empirical {enc:?} vs besicovitch {:?}", b.enclosure),
        )?;
        let (tx, ty) = (sys.successor(&x).unwrap(), sys.successor(&y).unwrap());
        let shifted = empirical_measure(&sys, &tx, &ty, b.period).map_err(|e| e.to_string())?;
        let pushed: BTreeMap<(Point, Point), Rational> = mu
            .support()
            .into_iter()
            .map(|((a, c), w)| ((sys.successor(&a).unwrap(), sys.successor(&c).unwrap()), w))
            .collect();
        ensure(pushed == shifted.support(), || format!("pair {k}: measure is not shift invariant"))?;
        let bt = besicovitch(&sys, &tx, &ty, &tol).map_err(|e| e.to_string())?;
        ensure(bt.enclosure == b.enclosure, || format!("pair {k}: besicovitch changes under the shift"))?;
        let report = Report::new(ReportBody::Besicovitch {
            system: spec.clone(),
            value: b,
        });
        emitted.push((format!("besicovitch-{k}"), report.to_json()));
    }
    Ok(())
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dyntop-acceptance-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

type Criterion = fn(&mut Emitted) -> Outcome;

const CRITERIA: [(&str, Criterion); 7] = [
    ("claim 1 reproduction", criterion1),
    ("bounded Ind_fip refutation", criterion2),
    ("T_i structural oracle", criterion3),
    ("thickly syndetic intersections", criterion4),
    ("finite rotations have no independence pairs", criterion5),
    ("fixed-point witnesses", criterion6),
    ("besicovitch and empirical measures", criterion7),
];

fn run_all() -> (Vec<Outcome>, Emitted) {
    let mut emitted = Vec::new();
    let outcomes = CRITERIA
        .iter()
        .map(|(name, f)| {
            let t = Instant::now();
            let o = f(&mut emitted);
            eprintln!("  {name}: {:?}", t.elapsed());
            o
        })
        .collect();
    (outcomes, emitted)
}

fn criterion8(first: &Emitted, second: &Emitted) -> Outcome {
    ensure(first.len() == second.len(), || "runs emitted different report counts".into())?;
    for ((n1, j1), (n2, j2)) in first.iter().zip(second) {
        ensure(n1 == n2 && j1 == j2, || format!("{n1} differs between runs"))?;
    }
    let dir = scratch_dir("recheck");
    for (name, json) in first {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, json).unwrap();
        let (code, _, err) = run_cli(&["recheck", "--in", path.to_str().unwrap()]);
        ensure(code == 0, || format!("{name}: recheck exited {code}: {err}"))?;
    }
    std::fs::remove_dir_all(&dir).ok();
    ensure(!first.is_empty(), || "no reports".into())
}

fn main() {
    let (outcomes, first) = run_all();
    let (_, second) = run_all();
    let mut failed = 0;
    let mut line = |n: usize, name: &str, o: &Outcome| match o {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(e) => {
            failed += 1;
            println!("criterion {n} ({name}): FAIL: {e}");
        }
    };
    for (n, ((name, _), o)) in CRITERIA.iter().zip(&outcomes).enumerate() {
        line(n + 1, name, o);
    }
    line(8, "determinism and recheck", &criterion8(&first, &second));
    println!("{} reports rechecked", first.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
