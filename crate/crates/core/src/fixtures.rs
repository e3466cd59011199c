//! Small systems shared by tests, examples and the command line.

use crate::catalog::SystemSpec;
use crate::numeric::{ratio, CylPoint, Rational};
use crate::systems::Point;

fn cyl(x: (i64, i64), y: (i64, i64)) -> Point {
    Point::Cyl(CylPoint::from_ratios(x, y).expect("in range"))
}

/// Fixed points, a periodic point `y` and ball radii around the fixed points.
#[derive(Clone, Debug)]
pub struct FixedPointFixture {
    pub name: &'static str,
    pub system: SystemSpec,
    pub fixed: Vec<Point>,
    pub y: Point,
    pub radii: Vec<Rational>,
    /// Largest `l` for which the balls admit an independence set along `y`.
    pub l: usize,
    pub n_steps: u64,
}

fn explicit(cycle: Vec<Point>, fixed: &[Point]) -> SystemSpec {
    SystemSpec::Explicit {
        tables: vec![],
        cycles: vec![cycle],
        fixed: fixed.to_vec(),
    }
}

/// `(0,0)` and `(0,1)` fixed; `y` of period 12 climbs at `x = 1/50` and descends at `x = 3/20`.
pub fn two_points() -> FixedPointFixture {
    let mut cycle: Vec<Point> = (0..=6).map(|k| cyl((1, 50), (k, 6))).collect();
    cycle.extend((1..=5).rev().map(|k| cyl((3, 20), (k, 6))));
    let fixed = vec![cyl((0, 1), (0, 1)), cyl((0, 1), (1, 1))];
    FixedPointFixture {
        name: "two-points",
        system: explicit(cycle.clone(), &fixed),
        y: cycle[0].clone(),
        fixed,
        radii: vec![ratio(1, 4), ratio(1, 4)],
        l: 2,
        n_steps: 1,
    }
}

/// `(0,0)` and `(0,1)` fixed; `y` follows the cyclic word `00010111`, resting
/// `1/1000` from a fixed point before each letter and jumping from `1/20` after it.
pub fn binary_word() -> FixedPointFixture {
    let word = [0, 0, 0, 1, 0, 1, 1, 1];
    let mut cycle = Vec::new();
    for (k, &b) in word.iter().enumerate() {
        let h = if b == 0 { (0, 1) } else { (1, 1) };
        cycle.push(cyl((1, 1000), h));
        cycle.push(cyl((k as i64 + 5, 100), h));
    }
    let fixed = vec![cyl((0, 1), (0, 1)), cyl((0, 1), (1, 1))];
    FixedPointFixture {
        name: "binary-word",
        system: explicit(cycle.clone(), &fixed),
        y: cycle[0].clone(),
        fixed,
        radii: vec![ratio(1, 4), ratio(1, 4)],
        l: 3,
        n_steps: 1,
    }
}

/// Three fixed points on the line `x = 0` with heights `0, 1/2, 1`; the
/// middle one lies in all three balls.
pub fn three_points() -> FixedPointFixture {
    let heights = [(0, 1), (1, 2), (1, 1)];
    let fixed: Vec<Point> = heights.iter().map(|&h| cyl((0, 1), h)).collect();
    let mut cycle = Vec::new();
    for (k, &h) in heights.iter().enumerate() {
        cycle.push(cyl((1, 1000), h));
        cycle.push(cyl((k as i64 + 1, 10), h));
    }
    FixedPointFixture {
        name: "three-points",
        system: explicit(cycle.clone(), &fixed),
        y: cycle[0].clone(),
        fixed,
        radii: vec![ratio(3, 5); 3],
        l: 3,
        n_steps: 1,
    }
}

pub fn fixed_point_fixtures() -> Vec<FixedPointFixture> {
    vec![two_points(), binary_word(), three_points()]
}

/// Two orbits of period 2 that start `1/100` apart and are `1` apart every other step.
pub fn mean_split() -> SystemSpec {
    SystemSpec::Explicit {
        tables: vec![],
        cycles: vec![
            vec![cyl((1, 4), (0, 1)), cyl((1, 2), (0, 1))],
            vec![cyl((1, 4), (1, 100)), cyl((1, 2), (1, 1))],
        ],
        fixed: vec![],
    }
}
