//! Serializable descriptions of the systems this crate knows how to build.
//!
//! Reports embed a [`SystemSpec`] so that a checker can rebuild the system
//! without the code path that produced the report.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::counterexample::CounterexampleTruncation;
use crate::error::{Error, Result};
use crate::systems::{product, FixedSet, OrbitTable, Piece, Point, SystemPresentation};

/// One explicit successor table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    pub successor: Vec<(Point, Point)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemSpec {
    /// `X_N` with `N = levels`.
    Counterexample { levels: u64 },
    /// `k -> k+1 mod m` on the atoms `#0..#(m-1)`.
    Rotation { modulus: u64 },
    Explicit {
        #[serde(default)]
        tables: Vec<TableSpec>,
        #[serde(default)]
        cycles: Vec<Vec<Point>>,
        #[serde(default)]
        fixed: Vec<Point>,
    },
    Product {
        left: Box<SystemSpec>,
        right: Box<SystemSpec>,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemPresentation> {
        match self {
            SystemSpec::Counterexample { levels } => {
                if *levels == 0 {
                    return Err(Error::InvalidSystem("a truncation needs at least one level".into()));
                }
                Ok(CounterexampleTruncation::new(*levels)?.system().clone())
            }
            SystemSpec::Rotation { modulus } => {
                if *modulus == 0 {
                    return Err(Error::InvalidSystem("rotation modulus must be positive".into()));
                }
                let pts = (0..*modulus).map(Point::Atom).collect();
                SystemPresentation::new(vec![Piece::Table(OrbitTable::cycle(
                    format!("Z/{modulus}"),
                    pts,
                ))])
            }
            SystemSpec::Explicit {
                tables,
                cycles,
                fixed,
            } => {
                let mut pieces = Vec::new();
                for t in tables {
                    let mut map = BTreeMap::new();
                    for (a, b) in &t.successor {
                        if map.insert(a.clone(), b.clone()).is_some() {
                            return Err(Error::InvalidSystem(format!(
                                "table `{}` maps {a} twice",
                                t.name
                            )));
                        }
                    }
                    pieces.push(Piece::Table(OrbitTable::new(t.name.clone(), map)));
                }
                for (k, c) in cycles.iter().enumerate() {
                    if c.is_empty() {
                        return Err(Error::InvalidSystem(format!("cycle {k} is empty")));
                    }
                    pieces.push(Piece::Table(OrbitTable::cycle(format!("cycle {k}"), c.clone())));
                }
                if !fixed.is_empty() {
                    let set: BTreeSet<Point> = fixed.iter().cloned().collect();
                    pieces.push(Piece::Fixed(FixedSet::Points(set)));
                }
                SystemPresentation::new(pieces)
            }
            SystemSpec::Product { left, right } => product(&left.build()?, &right.build()?),
        }
    }

    /// Accepts `counterexample:N`, `rotation:M`, inline JSON, or a path to a JSON file.
    pub fn parse(s: &str) -> Result<SystemSpec> {
        let s = s.trim();
        let number = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::InvalidSystem(format!("bad number in `{s}`")))
        };
        if let Some(v) = s.strip_prefix("counterexample:") {
            return Ok(SystemSpec::Counterexample { levels: number(v)? });
        }
        if let Some(v) = s.strip_prefix("rotation:") {
            return Ok(SystemSpec::Rotation { modulus: number(v)? });
        }
        let text = if s.starts_with('{') {
            s.to_string()
        } else {
            std::fs::read_to_string(s)
                .map_err(|e| Error::InvalidSystem(format!("cannot read `{s}`: {e}")))?
        };
        serde_json::from_str(&text).map_err(|e| Error::InvalidSystem(format!("bad system JSON: {e}")))
    }
}
