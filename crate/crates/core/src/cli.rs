//! The `dyntop` command line.
//!
//! Exit codes: 0 verified, 1 usage error, 2 budget exhausted, 3 a witness
//! falsifying a claimed refutation was found, 4 a report failed recheck.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::catalog::SystemSpec;
use crate::counterexample::{refute_indfip, step_distance_bound_check, verify_claim1};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::independence::{
    ip_independence_check, se_tuple_witness_from_fixed_points, search_certificate, IpOutcome, Neighborhood,
};
use crate::meanstats::{besicovitch, mean_equi_scan, PairSample};
use crate::numeric::{parse_rational, Rational};
use crate::relations::{classify_proximal, distality_scan, rp_witness, SearchBounds};
use crate::report::{recheck_json, ts_intersect_report, DistalityRun, Report, ReportBody, RpSearch};
use crate::systems::{step_budget, Point};
use crate::zplus::TsSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;
pub const EXIT_RECHECK: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "dyntop", version, about = "Exact experiments on finite presentations of dynamical systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Order-d regional proximality witness for (A, B) in the counterexample.
    VerifyClaim1 {
        #[arg(long)]
        d: u64,
        #[arg(long, value_parser = rational)]
        eps: Rational,
        /// Largest number of steps allowed; defaults to the global step budget.
        #[arg(long)]
        step_ceiling: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Bounded refutation that ((0,c), (0,dd)) is an Ind_fip pair.
    RefuteIndfip {
        #[arg(long, value_parser = rational)]
        c: Rational,
        #[arg(long, value_parser = rational)]
        dd: Rational,
        #[arg(long, default_value_t = 10)]
        max_level: u64,
        #[arg(long, default_value_t = 1 << 20)]
        point_budget: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Per-step distance bound on one piece of the counterexample.
    StepBound {
        #[arg(long)]
        i: u64,
        #[arg(long, default_value_t = 1 << 16)]
        sample_budget: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Re-verify a report file.
    Recheck {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// CSV of an orbit.
    Orbit {
        #[arg(long, value_parser = system)]
        system: SystemSpec,
        #[arg(long, value_parser = point)]
        point: Point,
        #[arg(long)]
        steps: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Exact proximality verdict for a pair.
    Proximal {
        #[arg(long, value_parser = system)]
        system: SystemSpec,
        #[arg(long, value_parser = point)]
        x: Point,
        #[arg(long, value_parser = point)]
        y: Point,
        #[command(flatten)]
        output: Output,
    },
    /// Search for a proximal pair of distinct points.
    Distality {
        #[arg(long, value_parser = system)]
        system: SystemSpec,
        #[arg(long, default_value_t = 16)]
        circle_samples: usize,
        #[arg(long, default_value_t = 1 << 16)]
        pair_budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Bounded search for a regional proximality witness.
    RpWitness {
        #[arg(long, value_parser = system)]
        system: SystemSpec,
        #[arg(long, value_parser = point)]
        x: Point,
        #[arg(long, value_parser = point)]
        y: Point,
        #[arg(long)]
        d: u64,
        #[arg(long, value_parser = rational)]
        eps: Rational,
        #[arg(long, default_value_t = 32)]
        max_step: u64,
        #[arg(long, default_value_t = 16)]
        circle_samples: usize,
        #[arg(long, default_value_t = 1 << 14)]
        point_limit: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Search for an independence set of length k.
    Independence {
        #[arg(long, value_parser = system)]
        system: SystemSpec,
        /// `set:P|P|...`, `ball:P@r`, or JSON; repeat once per neighbourhood.
        #[arg(long = "hood", value_parser = neighborhood, required = true)]
        hoods: Vec<Neighborhood>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        horizon: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Independence of (A1, A2) along a finite IP-set.
    IpCheck {
        #[arg(long, value_parser = system)]
        system: SystemSpec,
        #[arg(long, value_parser = neighborhood)]
        a1: Neighborhood,
        #[arg(long, value_parser = neighborhood)]
        a2: Neighborhood,
        #[arg(long, value_delimiter = ',', required = true)]
        gens: Vec<u64>,
        #[arg(long, default_value_t = crate::independence::DEFAULT_IP_CAP)]
        cap: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Validate the intersection of thickly syndetic families.
    TsIntersect {
        /// Product of families such as `not-pow2*all`; repeat per operand.
        #[arg(long = "operand", value_parser = ts_spec, required = true)]
        operands: Vec<TsSpec>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        n: Vec<u64>,
        #[arg(long)]
        window: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Average distance along a pair orbit.
    Besicovitch {
        #[arg(long, value_parser = system)]
        system: SystemSpec,
        #[arg(long, value_parser = point)]
        x: Point,
        #[arg(long, value_parser = point)]
        y: Point,
        #[arg(long, value_parser = rational, default_value = "1/1000000")]
        tol: Rational,
        #[command(flatten)]
        output: Output,
    },
    /// Mean-equicontinuity scan with pass, violation and undecided verdicts.
    MeanScan {
        #[arg(long, value_parser = system)]
        system: SystemSpec,
        #[arg(long, value_parser = rational)]
        eps: Rational,
        #[arg(long, value_parser = rational)]
        delta: Rational,
        #[arg(long, value_parser = rational, default_value = "1/1000")]
        tol: Rational,
        #[arg(long, default_value_t = 16)]
        circle_samples: usize,
        #[arg(long, default_value_t = 256)]
        max_pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the per-pair CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Independence certificate built from fixed points and a periodic orbit.
    SeWitness {
        /// A built-in fixture: two-points, binary-word or three-points.
        #[arg(long, conflicts_with_all = ["system", "fixed", "y", "radius"])]
        fixture: Option<String>,
        #[arg(long, value_parser = system)]
        system: Option<SystemSpec>,
        #[arg(long, value_parser = point)]
        fixed: Vec<Point>,
        #[arg(long, value_parser = point)]
        y: Option<Point>,
        #[arg(long, value_parser = rational)]
        radius: Vec<Rational>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long = "n")]
        n_steps: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
}

fn rational(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn point(s: &str) -> std::result::Result<Point, String> {
    s.parse::<Point>().map_err(|e| e.to_string())
}

fn system(s: &str) -> std::result::Result<SystemSpec, String> {
    SystemSpec::parse(s).map_err(|e| e.to_string())
}

fn ts_spec(s: &str) -> std::result::Result<TsSpec, String> {
    TsSpec::parse(s).map_err(|e| e.to_string())
}

fn neighborhood(s: &str) -> std::result::Result<Neighborhood, String> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| e.to_string());
    }
    if let Some(rest) = s.strip_prefix("set:") {
        let points = rest.split('|').map(point).collect::<std::result::Result<_, _>>()?;
        return Ok(Neighborhood::Set { points });
    }
    if let Some(rest) = s.strip_prefix("ball:") {
        let (c, r) = rest.rsplit_once('@').ok_or("expected ball:POINT@RADIUS")?;
        return Ok(Neighborhood::Ball {
            center: point(c)?,
            radius: rational(r)?,
        });
    }
    Err(format!("unknown neighbourhood `{s}`"))
}

/// What a command produced, before it is written out.
enum Outcome {
    Report(Report, i32),
    Text(String),
    Exit(i32),
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Budget(_) => EXIT_BUDGET,
        _ => EXIT_USAGE,
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(Option<PathBuf>, Outcome)> {
    let report = |body| Outcome::Report(Report::new(body), EXIT_OK);
    Ok(match cmd {
        Command::VerifyClaim1 { d, eps, step_ceiling, output } => {
            let w = verify_claim1(d, &eps, step_ceiling.unwrap_or_else(step_budget))?;
            (output.out, report(ReportBody::Claim1 { witness: w }))
        }
        Command::RefuteIndfip { c, dd, max_level, point_budget, output } => {
            let t = refute_indfip(&c, &dd, max_level, point_budget)?;
            let code = if t.refuted() { EXIT_OK } else { EXIT_FALSIFIED };
            (output.out, Outcome::Report(Report::new(ReportBody::Refutation { transcript: t }), code))
        }
        Command::StepBound { i, sample_budget, output } => {
            let r = step_distance_bound_check(i, sample_budget)?;
            (output.out, report(ReportBody::StepBound { report: r }))
        }
        Command::Recheck { input } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", input.display())))?;
            let r = Report::from_json(&text)?;
            return match crate::report::recheck(&r) {
                Ok(()) => Ok((None, Outcome::Text(format!("ok {}\n", r.kind())))),
                Err(Error::Budget(m)) => Err(Error::Budget(m)),
                Err(e) => {
                    let _ = writeln!(out, "recheck failed: {e}");
                    Ok((None, Outcome::Exit(EXIT_RECHECK)))
                }
            };
        }
        Command::Orbit { system, point, steps, output } => {
            let sys = system.build()?;
            (output.out, Outcome::Text(sys.orbit_csv(&point, steps)?))
        }
        Command::Proximal { system, x, y, output } => {
            let c = classify_proximal(&system.build()?, &x, &y)?;
            (output.out, report(ReportBody::Proximal { system, classification: c }))
        }
        Command::Distality { system, circle_samples, pair_budget, seed, output } => {
            let r = distality_scan(&system.build()?, circle_samples, pair_budget, seed)?;
            let run = DistalityRun {
                system,
                circle_samples,
                pair_budget,
                seed,
                report: r,
            };
            (output.out, report(ReportBody::Distality { run }))
        }
        Command::RpWitness { system, x, y, d, eps, max_step, circle_samples, point_limit, output } => {
            let bounds = SearchBounds {
                max_step,
                circle_samples,
                point_limit,
            };
            let w = rp_witness(&system, &system.build()?, &x, &y, d, &eps, &bounds)?;
            let search = RpSearch {
                system,
                x,
                y,
                d,
                eps,
                max_step,
                circle_samples,
                point_limit,
                witness: w,
            };
            (output.out, report(ReportBody::RpWitness { search }))
        }
        Command::Independence { system, hoods, k, horizon, output } => {
            let s = search_certificate(&system, &hoods, k, horizon)?;
            (output.out, report(ReportBody::Independence { search: s }))
        }
        Command::IpCheck { system, a1, a2, gens, cap, output } => {
            let body = match ip_independence_check(&system, &a1, &a2, &gens, cap)? {
                IpOutcome::Certified(certificate) => ReportBody::IpCertificate { certificate },
                IpOutcome::Failed(failure) => ReportBody::IpFailure { failure },
            };
            (output.out, report(body))
        }
        Command::TsIntersect { operands, n, window, output } => {
            let r = ts_intersect_report(&operands, &n, window)?;
            (output.out, report(ReportBody::TsIntersect { report: r }))
        }
        Command::Besicovitch { system, x, y, tol, output } => {
            let v = besicovitch(&system.build()?, &x, &y, &tol)?;
            (output.out, report(ReportBody::Besicovitch { system, value: v }))
        }
        Command::MeanScan { system, eps, delta, tol, circle_samples, max_pairs, seed, csv, output } => {
            let sample = PairSample {
                circle_samples,
                max_pairs,
                seed,
                ..PairSample::default()
            };
            let r = mean_equi_scan(&system, &eps, &delta, &tol, &sample)?;
            if let Some(path) = csv {
                std::fs::write(&path, r.csv())
                    .map_err(|e| Error::Precondition(format!("cannot write {}: {e}", path.display())))?;
            }
            (output.out, report(ReportBody::MeanScan { report: r }))
        }
        Command::SeWitness { fixture, system, fixed, y, radius, l, n_steps, output } => {
            let (system, fixed, y, radius, l, n_steps) = match fixture {
                Some(name) => {
                    let f = fixtures::fixed_point_fixtures()
                        .into_iter()
                        .find(|f| f.name == name)
                        .ok_or_else(|| Error::Precondition(format!("unknown fixture `{name}`")))?;
                    (f.system, f.fixed, f.y, f.radii, l.unwrap_or(f.l), n_steps.unwrap_or(f.n_steps))
                }
                None => {
                    let missing = |what: &str| Error::Precondition(format!("--{what} is required without --fixture"));
                    (
                        system.ok_or_else(|| missing("system"))?,
                        fixed,
                        y.ok_or_else(|| missing("y"))?,
                        radius,
                        l.ok_or_else(|| missing("l"))?,
                        n_steps.unwrap_or(1),
                    )
                }
            };
            let w = se_tuple_witness_from_fixed_points(&system, &fixed, &y, &radius, l, n_steps)?;
            (output.out, report(ReportBody::SeWitness { witness: w }))
        }
    })
}

/// Runs the command line with `args` (program name first); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, err) {
        Ok((path, outcome)) => {
            let (text, code) = match outcome {
                Outcome::Exit(code) => return code,
                Outcome::Report(r, code) => (r.to_json(), code),
                Outcome::Text(t) => (t, EXIT_OK),
            };
            let written = match path {
                Some(p) => std::fs::write(&p, &text).map_err(|e| format!("cannot write {}: {e}", p.display())),
                None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => code,
                Err(m) => {
                    let _ = writeln!(err, "error: {m}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Re-verifies report text; used by tests that bypass the file system.
pub fn recheck_text(text: &str) -> i32 {
    match recheck_json(text) {
        Ok(_) => EXIT_OK,
        Err(Error::Precondition(_)) => EXIT_USAGE,
        Err(Error::Budget(_)) => EXIT_BUDGET,
        Err(_) => EXIT_RECHECK,
    }
}
