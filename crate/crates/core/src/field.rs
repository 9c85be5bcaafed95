//! Uniform 1D grids and the sampled fields that live on them.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 8 {
            return Err(CascadeError::Config(format!("grid needs n_points ≥ 8 (got {n_points})")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(CascadeError::Config(format!("grid needs x_max > x_min (got [{x_min}, {x_max}])")));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Grid on `[-half_width, half_width)`, symmetric about zero for even `n_points`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn is_power_of_two(&self) -> bool {
        self.n_points.is_power_of_two()
    }

    pub fn require_power_of_two(&self) -> Result<()> {
        if self.is_power_of_two() {
            Ok(())
        } else {
            Err(CascadeError::Config(format!(
                "spectral path needs a power-of-two grid (n_points = {})",
                self.n_points
            )))
        }
    }

    /// Symmetric grids map node `i` to `n - i` under `x -> -x`.
    pub fn is_symmetric(&self) -> bool {
        self.n_points % 2 == 0 && (self.x_min + self.x_max).abs() <= 1e-12 * self.length()
    }

    /// Index of the node mirrored through the origin, when it exists.
    pub fn mirror(&self, i: usize) -> Option<usize> {
        if i == 0 {
            None
        } else {
            Some(self.n_points - i)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
    None,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Distance from `x` to the interval (zero inside).
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn scaled(&self, s: f64) -> Self {
        let (a, b) = (self.lo * s, self.hi * s);
        Self::new(a.min(b), a.max(b))
    }
}

/// A real function sampled on a uniform grid, with declared support and parity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub support: Vec<Interval>,
    pub parity: Parity,
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<f64>, support: Vec<Interval>, parity: Parity) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(CascadeError::InvalidField(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.n_points
            )));
        }
        let f = Self { grid, values, support, parity };
        f.check_finite()?;
        Ok(f)
    }

    /// Field whose support is the whole grid.
    pub fn full(grid: Grid, values: Vec<f64>, parity: Parity) -> Result<Self> {
        let support = vec![Interval::new(grid.x_min, grid.x_max)];
        Self::new(grid, values, support, parity)
    }

    pub fn from_fn(grid: Grid, support: Vec<Interval>, parity: Parity, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values, support, parity)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.n_points);
        Self { values, ..self.clone() }
    }

    pub fn check_finite(&self) -> Result<()> {
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(CascadeError::InvalidField(format!(
                "non-finite value at node {i} (x = {})",
                self.grid.x(i)
            )));
        }
        Ok(())
    }

    pub fn in_support(&self, x: f64) -> bool {
        self.support.iter().any(|s| s.contains(x))
    }

    pub fn support_distance(&self, x: f64) -> f64 {
        self.support
            .iter()
            .map(|s| s.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Trapezoid (equivalently, rectangle) L^1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.spacing()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.spacing()).sqrt()
    }

    /// Largest value outside the declared support.
    pub fn leakage(&self) -> f64 {
        self.grid
            .points()
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| !self.in_support(**x))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Largest `|f(x) + f(-x)|` (odd) or `|f(x) - f(-x)|` (even) over mirrored nodes.
    pub fn parity_defect(&self, parity: Parity) -> f64 {
        if !self.grid.is_symmetric() {
            return f64::NAN;
        }
        let sign = match parity {
            Parity::Odd => 1.0,
            Parity::Even => -1.0,
            Parity::None => return 0.0,
        };
        (1..self.grid.n_points)
            .map(|i| {
                let j = self.grid.mirror(i).unwrap();
                (self.values[i] + sign * self.values[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Nonzero samples as `(x, value)` pairs.
    pub fn nonzero_samples(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (self.grid.x(i), *v))
            .collect()
    }

    /// Writes the two-column CSV format with grid metadata as `#` comments.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::new();
        writeln!(header, "# x_min = {:e}", self.grid.x_min).unwrap();
        writeln!(header, "# x_max = {:e}", self.grid.x_max).unwrap();
        writeln!(header, "# n_points = {}", self.grid.n_points).unwrap();
        let parity = match self.parity {
            Parity::Odd => "odd",
            Parity::Even => "even",
            Parity::None => "none",
        };
        writeln!(header, "# parity = {parity}").unwrap();
        let sup: Vec<String> = self.support.iter().map(|s| format!("{:e}:{:e}", s.lo, s.hi)).collect();
        writeln!(header, "# support = {}", sup.join(",")).unwrap();
        header.push_str("x,value\n");
        w.write_all(header.as_bytes())?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.x(i), v)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut x_min = None;
        let mut x_max = None;
        let mut n_points = None;
        let mut parity = Parity::None;
        let mut support = Vec::new();
        let mut values = Vec::new();
        let bad = |m: &str| CascadeError::Schema(format!("field CSV: {m}"));
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((key, val)) = meta.split_once('=') else { continue };
                let (key, val) = (key.trim(), val.trim());
                match key {
                    "x_min" => x_min = Some(val.parse::<f64>().map_err(|_| bad("x_min"))?),
                    "x_max" => x_max = Some(val.parse::<f64>().map_err(|_| bad("x_max"))?),
                    "n_points" => n_points = Some(val.parse::<usize>().map_err(|_| bad("n_points"))?),
                    "parity" => {
                        parity = match val {
                            "odd" => Parity::Odd,
                            "even" => Parity::Even,
                            _ => Parity::None,
                        }
                    }
                    "support" => {
                        for part in val.split(',').filter(|p| !p.is_empty()) {
                            let (lo, hi) = part.split_once(':').ok_or_else(|| bad("support"))?;
                            support.push(Interval::new(
                                lo.parse().map_err(|_| bad("support"))?,
                                hi.parse().map_err(|_| bad("support"))?,
                            ));
                        }
                    }
                    _ => {}
                }
                continue;
            }
            if line.starts_with("x,") {
                continue;
            }
            let (_, v) = line.split_once(',').ok_or_else(|| bad("row"))?;
            values.push(v.trim().parse::<f64>().map_err(|_| bad("value"))?);
        }
        let grid = Grid::new(
            x_min.ok_or_else(|| bad("missing x_min"))?,
            x_max.ok_or_else(|| bad("missing x_max"))?,
            n_points.ok_or_else(|| bad("missing n_points"))?,
        )?;
        Self::new(grid, values, support, parity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_tiny_and_inverted() {
        assert!(Grid::new(0.0, 1.0, 4).is_err());
        assert!(Grid::new(1.0, 0.0, 16).is_err());
        let g = Grid::new(0.0, 1.0, 10).unwrap();
        assert!(g.require_power_of_two().is_err());
    }

    #[test]
    fn symmetric_grid_mirrors() {
        let g = Grid::symmetric(1.2, 16).unwrap();
        assert!(g.is_symmetric());
        for i in 1..16 {
            let j = g.mirror(i).unwrap();
            assert!((g.x(i) + g.x(j)).abs() < 1e-14);
        }
        assert!(g.x(8).abs() < 1e-15);
    }

    #[test]
    fn nan_rejected() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(
            SampledField::full(g, v, Parity::None),
            Err(CascadeError::InvalidField(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::symmetric(2.0, 32).unwrap();
        let f = SampledField::from_fn(g, vec![Interval::new(-1.0, 1.0)], Parity::Odd, |x| {
            if x.abs() < 1.0 {
                x * (1.0 - x * x)
            } else {
                0.0
            }
        })
        .unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# x_min"));
        let back = SampledField::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(back.parity, Parity::Odd);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
        assert!(f.parity_defect(Parity::Odd) < 1e-15);
    }
}
