//! Hilbert-transform machinery.
//!
//! Convention: `Hf(x) = (1/π) p.v.∫ f(y)/(x-y) dy`, so `H cos = sin` and
//! `H∘H = -I` on mean-zero data. Three realizations are provided:
//!
//! * [`hilbert_periodic`]: the Fourier multiplier `-i sgn(k)` on a periodic grid;
//! * a regular-kernel quadrature of `∂^N H f(x) = ((-1)^N N!/π) ∫ f(y)/(x-y)^{N+1} dy`
//!   for points away from the support of `f`;
//! * a principal-value path for points on or near the support: the derivative is
//!   moved onto `f` (`∂^N H f = H f^{(N)}`), and `H` is applied to the sinc
//!   interpolant of the samples, which on grid nodes reduces to the odd-offset
//!   stencil `(2/π) Σ_{m odd} g_{i-m}/m`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assembly::BubbleAtlas;
use crate::error::{CascadeError, Result};
use crate::field::{Grid, Interval, Parity, SampledField};
use crate::spectral;

/// Highest derivative order supported by the kernel paths.
pub const MAX_HILBERT_ORDER: usize = 5;

/// Points closer than this many grid spacings to the support use the
/// principal-value path.
const NEAR_SUPPORT_SPACINGS: f64 = 8.0;

/// Which bubbles contribute to an interaction field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BubbleSet {
    /// All bubbles, including the target itself.
    All,
    /// `B_-`: bubbles with index below the target.
    Below,
    /// `B_+`: bubbles with index above the target.
    Above,
}

impl BubbleSet {
    fn includes(self, j: usize, k: usize) -> bool {
        match self {
            BubbleSet::All => true,
            BubbleSet::Below => j < k,
            BubbleSet::Above => j > k,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct QuadratureOptions {
    /// One level of Richardson extrapolation on the regular-kernel path.
    pub richardson: bool,
}

/// `H f` through the multiplier `-i sgn(k)` on the grid's period.
pub fn hilbert_periodic(f: &SampledField) -> Result<SampledField> {
    f.grid.require_power_of_two()?;
    f.check_finite()?;
    let values = hilbert_periodic_values(&f.values, f.grid.length());
    let parity = match f.parity {
        Parity::Odd => Parity::Even,
        Parity::Even => Parity::Odd,
        Parity::None => Parity::None,
    };
    SampledField::full(f.grid, values, parity)
}

pub(crate) fn hilbert_periodic_values(values: &[f64], period: f64) -> Vec<f64> {
    spectral::apply_multiplier(values, period, |k, nyq| {
        if nyq || k == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -k.signum())
        }
    })
}

/// `∂^N (H f)(x)` for a compactly supported field.
pub fn hilbert_derivative_at(f: &SampledField, x: f64, order: usize) -> Result<f64> {
    hilbert_derivative_at_with(f, x, order, QuadratureOptions::default())
}

pub fn hilbert_derivative_at_with(f: &SampledField, x: f64, order: usize, opts: QuadratureOptions) -> Result<f64> {
    if order > MAX_HILBERT_ORDER {
        return Err(CascadeError::UnsupportedOrder { order, max: MAX_HILBERT_ORDER });
    }
    let ev = HilbertEvaluator::new(f, order)?.with_options(opts);
    ev.eval(x, order)
}

/// Precomputed data for repeated evaluation of `∂^N H f` for one field.
#[derive(Debug, Clone)]
pub struct HilbertEvaluator {
    grid: Grid,
    support: Vec<Interval>,
    /// Nonzero samples `(index, y, f(y))`.
    samples: Vec<(usize, f64, f64)>,
    /// Spectral derivatives `f^{(m)}` on the grid, `m = 0..=max_order`.
    derivs: Vec<Vec<f64>>,
    /// Mirror-paired samples `(index, y > 0, symmetric part)` when the field is odd or
    /// even on a symmetric grid; the paired kernel avoids cancellation near `x = 0`.
    pairs: Option<(Parity, Vec<(usize, f64, f64)>)>,
    opts: QuadratureOptions,
    l1: f64,
}

impl HilbertEvaluator {
    pub fn new(f: &SampledField, max_order: usize) -> Result<Self> {
        if max_order > MAX_HILBERT_ORDER {
            return Err(CascadeError::UnsupportedOrder { order: max_order, max: MAX_HILBERT_ORDER });
        }
        f.check_finite()?;
        let samples = f
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, f.grid.x(i), *v))
            .collect();
        let derivs = spectral::with_zero_padding_multi(&f.values, f.grid.length(), 2, max_order as u32);
        Ok(Self {
            grid: f.grid,
            support: f.support.clone(),
            samples,
            derivs,
            pairs: mirror_pairs(f),
            opts: QuadratureOptions::default(),
            l1: f.l1_norm(),
        })
    }

    pub fn with_options(mut self, opts: QuadratureOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn max_order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    pub fn is_zero(&self) -> bool {
        self.samples.is_empty()
    }

    fn support_distance(&self, x: f64) -> f64 {
        self.support.iter().map(|s| s.distance(x)).fold(f64::INFINITY, f64::min)
    }

    fn on_endpoint(&self, x: f64) -> bool {
        let tol = 1e-12 * self.grid.spacing();
        self.support
            .iter()
            .any(|s| (x - s.lo).abs() <= tol || (x - s.hi).abs() <= tol)
    }

    pub fn eval(&self, x: f64, order: usize) -> Result<f64> {
        if order > self.max_order() {
            return Err(CascadeError::UnsupportedOrder { order, max: self.max_order() });
        }
        if !x.is_finite() {
            return Err(CascadeError::InvalidField(format!("evaluation point {x}")));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        let h = self.grid.spacing();
        let in_range = x >= self.grid.x_min && x <= self.grid.x_max;
        if self.on_endpoint(x) {
            log::warn!("Hilbert derivative evaluated on a support endpoint (x = {x}); using the principal-value path");
            return Ok(self.pv_at(x, order));
        }
        if in_range && self.support_distance(x) < NEAR_SUPPORT_SPACINGS * h {
            Ok(self.pv_at(x, order))
        } else if self.support_distance(x) < h {
            Err(CascadeError::Extrapolation(format!(
                "x = {x} is within one grid spacing of the support but outside the sampled range"
            )))
        } else {
            Ok(self.kernel_at(x, order))
        }
    }

    /// Regular-kernel quadrature; valid away from the support.
    pub fn kernel_at(&self, x: f64, order: usize) -> f64 {
        let h = self.grid.spacing();
        let coef = if order % 2 == 0 { 1.0 } else { -1.0 } * factorial(order) / PI;
        let p = order as i32 + 1;
        let sum = |stride: usize| -> f64 {
            let raw = match &self.pairs {
                Some((parity, pairs)) => {
                    let odd_powers = *parity == Parity::Odd;
                    pairs
                        .iter()
                        .filter(|(i, _, _)| i % stride == 0)
                        .map(|&(_, y, v)| {
                            if y == 0.0 {
                                return v / x.powi(p);
                            }
                            v * paired_kernel(x, y, p as u32, odd_powers)
                        })
                        .sum::<f64>()
                }
                None => self
                    .samples
                    .iter()
                    .filter(|(i, _, _)| i % stride == 0)
                    .map(|&(_, y, v)| v / (x - y).powi(p))
                    .sum::<f64>(),
            };
            raw * h * stride as f64
        };
        let fine = sum(1);
        if self.opts.richardson {
            let coarse = sum(2);
            coef * (4.0 * fine - coarse) / 3.0
        } else {
            coef * fine
        }
    }

    /// Hilbert transform of the sinc interpolant of `f^{(order)}` at `x`.
    pub fn pv_at(&self, x: f64, order: usize) -> f64 {
        let g = &self.derivs[order];
        let h = self.grid.spacing();
        let s = (x - self.grid.x_min) / h;
        let c = (PI * s).cos();
        let mut acc = 0.0;
        for (j, &gj) in g.iter().enumerate() {
            if gj == 0.0 {
                continue;
            }
            let m = s - j as f64;
            if m.abs() < 1e-12 {
                continue;
            }
            let cos_term = if j % 2 == 0 { c } else { -c };
            acc += gj * (1.0 - cos_term) / (PI * m);
        }
        acc
    }

    /// `∂^N H f` at every grid node through the odd-offset stencil.
    pub fn on_nodes(&self, order: usize) -> Vec<f64> {
        let g = &self.derivs[order];
        let n = g.len();
        let nz: Vec<(usize, f64)> = g.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for &(j, gj) in &nz {
                    let m = i as isize - j as isize;
                    if m & 1 != 0 {
                        acc += gj / m as f64;
                    }
                }
                acc * 2.0 / PI
            })
            .collect()
    }
}

fn mirror_pairs(f: &SampledField) -> Option<(Parity, Vec<(usize, f64, f64)>)> {
    let sign = match f.parity {
        Parity::Odd => -1.0,
        Parity::Even => 1.0,
        Parity::None => return None,
    };
    let n = f.grid.n_points;
    if !f.grid.is_symmetric() || n % 2 != 0 || f.values[0] != 0.0 {
        return None;
    }
    let mut pairs = Vec::new();
    if sign > 0.0 && f.values[n / 2] != 0.0 {
        pairs.push((n / 2, 0.0, f.values[n / 2]));
    }
    for i in n / 2 + 1..n {
        let v = 0.5 * (f.values[i] + sign * f.values[n - i]);
        if v != 0.0 {
            pairs.push((i, f.grid.x(i), v));
        }
    }
    Some((f.parity, pairs))
}

/// `(x-y)^{-p} - (x+y)^{-p}` (odd powers of `y` in the binomial numerator) or the
/// sum `(x-y)^{-p} + (x+y)^{-p}`, without cancellation for small `x`.
fn paired_kernel(x: f64, y: f64, p: u32, odd_powers: bool) -> f64 {
    let mut num = 0.0;
    let mut binom = 1.0;
    for m in 0..=p {
        if ((p - m) % 2 == 1) == odd_powers {
            num += binom * x.powi(m as i32) * y.powi((p - m) as i32);
        }
        binom = binom * (p - m) as f64 / (m + 1) as f64;
    }
    2.0 * num / ((x - y) * (x + y)).powi(p as i32)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Upper bound `(N!/π) ‖f‖_{L^1} / dist^{N+1}` on `|∂^N Hf(x)|` at distance `dist` from the support.
pub fn far_field_bound(l1: f64, dist: f64, order: usize) -> f64 {
    factorial(order) / PI * l1 / dist.powi(order as i32 + 1)
}

/// Per-bubble evaluators for one atlas snapshot.
pub struct InteractionEngine<'a> {
    atlas: &'a BubbleAtlas,
    evaluators: Vec<HilbertEvaluator>,
    lengths: Vec<f64>,
    prefactors: Vec<f64>,
}

impl<'a> InteractionEngine<'a> {
    pub fn new(atlas: &'a BubbleAtlas, max_order: usize) -> Result<Self> {
        atlas.check_nesting()?;
        let evaluators = atlas
            .profiles
            .par_iter()
            .map(|w| HilbertEvaluator::new(w, max_order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            atlas,
            evaluators,
            lengths: atlas.length_scales(),
            prefactors: atlas.prefactors(),
        })
    }

    pub fn evaluator(&self, k: usize) -> &HilbertEvaluator {
        &self.evaluators[k]
    }

    /// `∂^N H B_j` at the physical point `x`.
    pub fn bubble_at(&self, j: usize, x: f64, order: usize) -> Result<f64> {
        let lam = self.lengths[j];
        let scale = self.prefactors[j] / lam.powi(order as i32);
        Ok(scale * self.evaluators[j].eval(x / lam, order)?)
    }

    /// `∂^N H B_•` at physical points.
    pub fn at_points(&self, points: &[f64], order: usize, set: BubbleSet, target: usize) -> Result<Vec<f64>> {
        points
            .iter()
            .map(|&x| {
                let mut acc = 0.0;
                for j in 0..self.evaluators.len() {
                    if set.includes(j, target) {
                        acc += self.bubble_at(j, x, order)?;
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    /// `∂^N H B_•(ξ λ_k)` at every node `ξ` of bubble `k`'s reference grid.
    pub fn field(&self, k: usize, order: usize, set: BubbleSet) -> Result<SampledField> {
        let grid = self.atlas.profiles[k].grid;
        let lam_k = self.lengths[k];
        let mut values = vec![0.0; grid.n_points];
        for j in 0..self.evaluators.len() {
            if !set.includes(j, k) || self.evaluators[j].is_zero() {
                continue;
            }
            if j == k {
                let scale = self.prefactors[k] / lam_k.powi(order as i32);
                for (v, s) in values.iter_mut().zip(self.evaluators[k].on_nodes(order)) {
                    *v += scale * s;
                }
            } else {
                let lam_j = self.lengths[j];
                let scale = self.prefactors[j] / lam_j.powi(order as i32);
                let ratio = lam_k / lam_j;
                for (i, v) in values.iter_mut().enumerate() {
                    *v += scale * self.evaluators[j].eval(grid.x(i) * ratio, order)?;
                }
            }
        }
        let parity = if order % 2 == 0 { Parity::Even } else { Parity::Odd };
        SampledField::full(grid, values, parity)
    }
}

/// `∂^N H B_•` on bubble `k`'s reference grid, mapped to physical points `ξ λ_k`.
pub fn interaction_field(atlas: &BubbleAtlas, k: usize, order: usize, set: BubbleSet) -> Result<SampledField> {
    if k >= atlas.profiles.len() {
        return Err(CascadeError::Config(format!("bubble index {k} exceeds n = {}", atlas.n())));
    }
    if order == 0 || order > MAX_HILBERT_ORDER {
        return Err(CascadeError::UnsupportedOrder { order, max: MAX_HILBERT_ORDER });
    }
    InteractionEngine::new(atlas, order)?.field(k, order, set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic_grid(n: usize) -> Grid {
        Grid::new(0.0, 2.0 * PI, n).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = periodic_grid(64);
        let f = SampledField::full(g, vec![0.0; 64], Parity::None).unwrap();
        assert!(hilbert_periodic(&f).unwrap().max_abs() == 0.0);
        let f = SampledField::new(g, vec![0.0; 64], vec![Interval::new(1.0, 2.0)], Parity::None).unwrap();
        for order in 0..=5 {
            assert_eq!(hilbert_derivative_at(&f, 0.3, order).unwrap(), 0.0);
        }
    }

    #[test]
    fn cos_and_sin_pairs() {
        let g = periodic_grid(256);
        let c = SampledField::from_fn(g, vec![], Parity::None, f64::cos).unwrap();
        let s = SampledField::from_fn(g, vec![], Parity::None, f64::sin).unwrap();
        let hc = hilbert_periodic(&c).unwrap();
        let hs = hilbert_periodic(&s).unwrap();
        for i in 0..256 {
            let x = g.x(i);
            assert!((hc.values[i] - x.sin()).abs() <= 1e-10);
            assert!((hs.values[i] + x.cos()).abs() <= 1e-10);
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        let g = Grid::new(0.0, 1.0, 12).unwrap();
        let f = SampledField::full(g, vec![1.0; 12], Parity::None).unwrap();
        assert!(matches!(hilbert_periodic(&f), Err(CascadeError::Config(_))));
    }

    #[test]
    fn order_above_five_rejected() {
        let g = Grid::symmetric(2.0, 64).unwrap();
        let f = SampledField::full(g, vec![0.0; 64], Parity::None).unwrap();
        assert!(matches!(
            hilbert_derivative_at(&f, 0.0, 6),
            Err(CascadeError::UnsupportedOrder { order: 6, .. })
        ));
    }

    #[test]
    fn narrow_bump_far_field() {
        // unit-mass Gaussian of width 1e-3 at y = 1, seen from x = 0
        let w = 1e-3;
        let g = Grid::new(1.0 - 12.0 * w, 1.0 + 12.0 * w, 4096).unwrap();
        let f = SampledField::from_fn(g, vec![Interval::new(g.x_min, g.x_max)], Parity::None, |y| {
            (-(y - 1.0).powi(2) / (2.0 * w * w)).exp() / (w * (2.0 * PI).sqrt())
        })
        .unwrap();
        let v = hilbert_derivative_at(&f, 0.0, 2).unwrap();
        assert!((v + 2.0 / PI).abs() < 1e-4, "{v}");
    }

    #[test]
    fn lorentzian_pair() {
        let g = Grid::symmetric(50.0, 8192).unwrap();
        let f = SampledField::from_fn(g, vec![Interval::new(-50.0, 50.0)], Parity::Even, |y| 1.0 / (1.0 + y * y)).unwrap();
        let v = hilbert_derivative_at(&f, 3.0, 0).unwrap();
        assert!((v - 0.3).abs() <= 1e-3, "{v}");
    }

    #[test]
    fn paths_agree_just_outside_support() {
        let g = Grid::symmetric(1.5, 1024).unwrap();
        let f = SampledField::from_fn(g, vec![Interval::new(-1.0, 1.0)], Parity::None, |y| {
            if y.abs() < 1.0 {
                (-1.0 / (1.0 - y * y)).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let ev = HilbertEvaluator::new(&f, 3).unwrap();
        for &x in &[1.1, 1.2, 1.4] {
            for order in 0..=3 {
                let a = ev.kernel_at(x, order);
                let b = ev.pv_at(x, order);
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "x={x} N={order}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn paired_kernel_keeps_relative_accuracy_near_zero() {
        let g = Grid::symmetric(1.2, 512).unwrap();
        let sup = vec![Interval::new(-1.1, -0.9), Interval::new(0.9, 1.1)];
        let f = SampledField::from_fn(g, sup, Parity::Odd, |y| {
            let s = (y.abs() - 1.0).abs();
            if s < 0.1 {
                -y.signum() * (-0.01 / (0.01 - s * s)).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let ev = HilbertEvaluator::new(&f, 3).unwrap();
        let plain = HilbertEvaluator::new(&SampledField { parity: Parity::None, ..f.clone() }, 3).unwrap();
        for (x, order) in [(0.3, 0), (0.5, 1), (0.2, 2), (1.6, 3)] {
            let (a, b) = (ev.kernel_at(x, order), plain.kernel_at(x, order));
            assert!((a - b).abs() <= 1e-12 * b.abs(), "{x} {order}: {a} vs {b}");
        }
        let slope = ev.kernel_at(1e-3, 1) / 1e-3;
        for x in [1e-8, 1e-12, 1e-16] {
            let v = ev.kernel_at(x, 1) / x;
            assert!((v - slope).abs() <= 1e-5 * slope.abs(), "{x}: {v} vs {slope}");
        }
    }

    #[test]
    fn richardson_flag_is_consistent() {
        let g = Grid::symmetric(1.5, 512).unwrap();
        let f = SampledField::from_fn(g, vec![Interval::new(-1.0, 1.0)], Parity::None, |y| {
            if y.abs() < 1.0 {
                (1.0 - y * y).powi(6)
            } else {
                0.0
            }
        })
        .unwrap();
        let a = hilbert_derivative_at(&f, 3.0, 2).unwrap();
        let b = hilbert_derivative_at_with(&f, 3.0, 2, QuadratureOptions { richardson: true }).unwrap();
        assert!((a - b).abs() < 1e-8 * a.abs());
    }
}
