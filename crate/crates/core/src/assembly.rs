//! The composite solution `B_n = Σ_k B_{n,k}` built from per-bubble profiles.
//!
//! Bubble `k` lives at length scale `λ_k = x_k (r/A)^k` with prefactor
//! `P_k = x_k^c (r/A)^{dk}`, so `B_{n,k}(x) = P_k W_k(x/λ_k)` and
//! `∂^m B_{n,k}(x) = P_k λ_k^{-m} W_k^{(m)}(x/λ_k)`.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade_ode::CascadeState;
use crate::direct_solver;
use crate::error::{CascadeError, Result};
use crate::field::{Interval, SampledField};
use crate::params::{ModelParams, ProfileExponents};
use crate::profile::SeedProfile;
use crate::singular_integral::{BubbleSet, InteractionEngine};
use crate::spectral;

/// Highest derivative order `evaluate` accepts.
pub const MAX_EVAL_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleAtlas {
    pub params: ModelParams,
    pub cascade: CascadeState,
    pub profiles: Vec<SampledField>,
    pub exponents: ProfileExponents,
}

impl BubbleAtlas {
    pub fn new(params: ModelParams, cascade: CascadeState, profiles: Vec<SampledField>) -> Result<Self> {
        if profiles.is_empty() || profiles.len() != cascade.x.len() {
            return Err(CascadeError::Config(format!(
                "{} profiles for {} scaling factors",
                profiles.len(),
                cascade.x.len()
            )));
        }
        if cascade.x.iter().any(|x| !(*x > 0.0)) {
            return Err(CascadeError::InvalidField("scaling factors must be positive".into()));
        }
        let exponents = params.exponents();
        Ok(Self {
            params,
            cascade,
            profiles,
            exponents,
        })
    }

    /// `W_k = φ`, `x_k = A^k`, couplings `a_j = Hφ''(0)` times the ODE factor.
    pub fn initial(params: &ModelParams, seed: &SeedProfile) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let couplings = vec![params.ode_factor() * seed.delta0; n + 1];
        let cascade = CascadeState::initial(&params.cascade(), couplings);
        let atlas = Self::new(params.clone(), cascade, vec![seed.field.clone(); n + 1])?;
        atlas.check_nesting()?;
        Ok(atlas)
    }

    /// Index of the last bubble.
    pub fn n(&self) -> usize {
        self.profiles.len() - 1
    }

    pub fn t(&self) -> f64 {
        self.cascade.t
    }

    fn ratio(&self) -> f64 {
        self.params.r / self.params.amp
    }

    pub fn length_scale(&self, k: usize) -> f64 {
        self.cascade.x[k] * self.ratio().powi(k as i32)
    }

    pub fn prefactor(&self, k: usize) -> f64 {
        let ProfileExponents { c, d } = self.exponents;
        self.cascade.x[k].powf(c) * self.ratio().powf(d * k as f64)
    }

    pub fn length_scales(&self) -> Vec<f64> {
        (0..self.profiles.len()).map(|k| self.length_scale(k)).collect()
    }

    pub fn prefactors(&self) -> Vec<f64> {
        (0..self.profiles.len()).map(|k| self.prefactor(k)).collect()
    }

    /// Declared support of `B_{n,k}` in physical coordinates.
    pub fn physical_support(&self, k: usize) -> Vec<Interval> {
        let lam = self.length_scale(k);
        self.profiles[k].support.iter().map(|s| s.scaled(lam)).collect()
    }

    fn radial_extent(&self, k: usize) -> (f64, f64) {
        let mut inner = f64::INFINITY;
        let mut outer: f64 = 0.0;
        for s in &self.profiles[k].support {
            if s.lo <= 0.0 && s.hi >= 0.0 {
                inner = 0.0;
            } else {
                inner = inner.min(s.lo.abs().min(s.hi.abs()));
            }
            outer = outer.max(s.lo.abs().max(s.hi.abs()));
        }
        (inner, outer)
    }

    /// Physical supports must be nested, disjoint, and away from the origin.
    pub fn check_nesting(&self) -> Result<()> {
        for k in 0..self.profiles.len() {
            let (inner, _) = self.radial_extent(k);
            if inner <= 0.0 {
                return Err(CascadeError::Degeneracy(format!("profile {k} support touches 0")));
            }
            if k > 0 {
                let outer_k = self.radial_extent(k).1 * self.length_scale(k);
                let inner_prev = self.radial_extent(k - 1).0 * self.length_scale(k - 1);
                if outer_k >= inner_prev {
                    return Err(CascadeError::Degeneracy(format!(
                        "bubble {k} reaches |x| = {outer_k:e}, overlapping bubble {} from {inner_prev:e}",
                        k - 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn evaluator(&self, max_order: usize) -> Result<AtlasEvaluator<'_>> {
        AtlasEvaluator::new(self, max_order)
    }

    /// `∂^m B_n` at physical points; exactly 0 outside every declared support.
    pub fn evaluate(&self, points: &[f64], m: usize) -> Result<Vec<f64>> {
        let ev = self.evaluator(m)?;
        points.iter().map(|&x| ev.eval(x, m)).collect()
    }

    /// `∂^m B_{n,k}` at physical points (bubble `k` alone).
    pub fn evaluate_bubble(&self, k: usize, points: &[f64], m: usize) -> Result<Vec<f64>> {
        let ev = self.evaluator(m)?;
        points.iter().map(|&x| ev.eval_bubble(k, x, m)).collect()
    }

    /// `max|∂³B_n| = sup_k P_k λ_k^{-3} max|W_k'''|` with the maximizing bubble and its
    /// reference-grid peak location.
    pub fn sup_third_derivative(&self) -> Result<ThirdDerivativePeak> {
        let mut best = ThirdDerivativePeak {
            value: 0.0,
            bubble: 0,
            xi: 0.0,
        };
        for (k, w) in self.profiles.iter().enumerate() {
            let d3 = spectral::with_zero_padding_multi(&w.values, w.grid.length(), 2, 3).pop().unwrap();
            let (i, m) = d3
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bi, bm), (i, v)| if v.abs() > bm { (i, v.abs()) } else { (bi, bm) });
            let value = self.prefactor(k) / self.length_scale(k).powi(3) * m;
            if value > best.value {
                best = ThirdDerivativePeak {
                    value,
                    bubble: k,
                    xi: w.grid.x(i),
                };
            }
        }
        Ok(best)
    }

    /// `‖∂^m B_{n,k}‖_{L²} = P_k λ_k^{1/2-m} ‖W_k‖_{Ḣ^m}`, `m` in half steps on `[0, 3.5]`.
    pub fn bubble_seminorm(&self, k: usize, m: f64) -> f64 {
        let w = &self.profiles[k];
        let padded = padded(&w.values);
        let semi = spectral::homogeneous_seminorm_sq(&padded, 2.0 * w.grid.length(), m).sqrt();
        self.prefactor(k) * self.length_scale(k).powf(0.5 - m) * semi
    }

    /// Inhomogeneous `H^m` norm of one bubble: integer orders up to `⌊m⌋` plus the fractional top.
    pub fn bubble_sobolev(&self, k: usize, m: f64) -> f64 {
        let mut acc = 0.0;
        let top = m.floor() as usize;
        for i in 0..=top {
            acc += self.bubble_seminorm(k, i as f64).powi(2);
        }
        if m > top as f64 {
            acc += self.bubble_seminorm(k, m).powi(2);
        }
        acc.sqrt()
    }

    pub fn sobolev_norm(&self, m: f64) -> Result<SobolevReport> {
        if !(0.0..=3.5).contains(&m) || (2.0 * m).fract() != 0.0 {
            return Err(CascadeError::Domain(format!("Sobolev order m = {m} must be a half-integer in [0, 3.5]")));
        }
        let per_bubble: Vec<f64> = (0..self.profiles.len()).map(|k| self.bubble_seminorm(k, m)).collect();
        let norm = per_bubble.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (amp, r) = (self.params.amp, self.params.r);
        let tail_ratio = amp * r.powf(3.5 - m);
        let divergent = tail_ratio >= 1.0;
        if divergent {
            log::warn!(
                "geometric tail ratio A r^(3.5-m) = {tail_ratio:.4} >= 1 at m = {m}: the bubble sum diverges as n grows"
            );
        }
        Ok(SobolevReport {
            m,
            norm,
            per_bubble,
            tail_ratio,
            divergent,
            convergent_below: convergent_sobolev_bound(amp, r),
        })
    }

    pub fn write_checkpoint(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let files: Vec<String> = (0..self.profiles.len()).map(|k| format!("bubble_{k:03}.csv")).collect();
        for (w, name) in self.profiles.iter().zip(&files) {
            w.write_csv(BufWriter::new(fs::File::create(dir.join(name))?))?;
        }
        let manifest = CheckpointManifest {
            params: self.params.clone(),
            exponents: self.exponents,
            t: self.cascade.t,
            x: self.cascade.x.clone(),
            a: self.cascade.a.clone(),
            profiles: files,
        };
        serde_json::to_writer_pretty(BufWriter::new(fs::File::create(dir.join("atlas.json"))?), &manifest)?;
        Ok(())
    }

    pub fn read_checkpoint(dir: &Path) -> Result<Self> {
        let manifest: CheckpointManifest =
            serde_json::from_reader(BufReader::new(fs::File::open(dir.join("atlas.json"))?))?;
        let profiles = manifest
            .profiles
            .iter()
            .map(|name| SampledField::read_csv(BufReader::new(fs::File::open(dir.join(name))?)))
            .collect::<Result<Vec<_>>>()?;
        let cascade = CascadeState {
            t: manifest.t,
            x: manifest.x,
            a: manifest.a,
        };
        let mut atlas = Self::new(manifest.params, cascade, profiles)?;
        atlas.exponents = manifest.exponents;
        Ok(atlas)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointManifest {
    params: ModelParams,
    exponents: ProfileExponents,
    t: f64,
    x: Vec<f64>,
    a: Vec<f64>,
    profiles: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThirdDerivativePeak {
    pub value: f64,
    pub bubble: usize,
    /// Peak location in the bubble's reference coordinate.
    pub xi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevReport {
    pub m: f64,
    pub norm: f64,
    pub per_bubble: Vec<f64>,
    /// `A r^{3.5-m}`.
    pub tail_ratio: f64,
    pub divergent: bool,
    /// Orders below `3.5 - ln A / ln(1/r)` give a convergent bubble sum.
    pub convergent_below: f64,
}

pub fn convergent_sobolev_bound(amp: f64, r: f64) -> f64 {
    3.5 - amp.ln() / (1.0 / r).ln()
}

fn padded(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; 2 * n];
    out[n / 2..n / 2 + n].copy_from_slice(values);
    out
}

/// Cached spectral derivatives of every profile for repeated point evaluation.
pub struct AtlasEvaluator<'a> {
    atlas: &'a BubbleAtlas,
    derivs: Vec<Vec<Vec<f64>>>,
    lengths: Vec<f64>,
    prefactors: Vec<f64>,
}

impl<'a> AtlasEvaluator<'a> {
    pub fn new(atlas: &'a BubbleAtlas, max_order: usize) -> Result<Self> {
        if max_order > MAX_EVAL_ORDER {
            return Err(CascadeError::UnsupportedOrder {
                order: max_order,
                max: MAX_EVAL_ORDER,
            });
        }
        let derivs = atlas
            .profiles
            .iter()
            .map(|w| spectral::with_zero_padding_multi(&w.values, w.grid.length(), 2, max_order as u32))
            .collect();
        Ok(Self {
            atlas,
            derivs,
            lengths: atlas.length_scales(),
            prefactors: atlas.prefactors(),
        })
    }

    pub fn eval_bubble(&self, k: usize, x: f64, m: usize) -> Result<f64> {
        if m >= self.derivs[k].len() {
            return Err(CascadeError::UnsupportedOrder {
                order: m,
                max: self.derivs[k].len() - 1,
            });
        }
        if !x.is_finite() {
            return Err(CascadeError::InvalidField(format!("evaluation point {x}")));
        }
        let w = &self.atlas.profiles[k];
        let xi = x / self.lengths[k];
        if !w.in_support(xi) {
            return Ok(0.0);
        }
        let v = cubic(&self.derivs[k][m], w.grid.x_min, w.grid.spacing(), xi);
        Ok(self.prefactors[k] / self.lengths[k].powi(m as i32) * v)
    }

    pub fn eval(&self, x: f64, m: usize) -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..self.derivs.len() {
            acc += self.eval_bubble(k, x, m)?;
        }
        Ok(acc)
    }
}

/// Four-point Lagrange interpolation of nodal data.
fn cubic(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let s = (x - x0) / h;
    let i = s.floor() as isize;
    let base = (i - 1).clamp(0, n as isize - 4) as usize;
    let u = s - base as f64;
    let mut acc = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (u - b as f64) / (a as f64 - b as f64);
            }
        }
        acc += l * values[base + a];
    }
    acc
}

/// Residual of the model equation between two consecutive atlases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `‖∂_t B - N(B)‖ / max(‖∂_t B‖, ‖2b(H∂B)∂B‖, ‖b(H∂²B)B‖)`.
    pub residual: f64,
    pub time_derivative_norm: f64,
    pub transport_norm: f64,
    pub stretching_norm: f64,
    pub points: usize,
}

/// Evaluated at the nodes of each bubble's support in the midpoint atlas.
pub fn model_residual(before: &BubbleAtlas, after: &BubbleAtlas, dt: f64, params: &ModelParams) -> Result<ResidualReport> {
    if before.profiles.len() != after.profiles.len() {
        return Err(CascadeError::Schema("atlases hold different bubble counts".into()));
    }
    if dt == 0.0 {
        return Err(CascadeError::Config("dt must be nonzero".into()));
    }
    let mid = midpoint(before, after)?;
    let engine = InteractionEngine::new(&mid, 2)?;
    let b = params.b;
    let (mut sq_r, mut sq_t, mut sq_u, mut sq_s) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0;
    for k in 0..mid.profiles.len() {
        let w = &mid.profiles[k];
        let lam = mid.length_scale(k);
        let pk = mid.prefactor(k);
        let u = engine.field(k, 1, BubbleSet::All)?;
        let s = engine.field(k, 2, BubbleSet::All)?;
        let dw = spectral::with_zero_padding_multi(&w.values, w.grid.length(), 2, 1);
        let side = |atlas: &BubbleAtlas| {
            let d = spectral::with_zero_padding_multi(&atlas.profiles[k].values, w.grid.length(), 2, 2);
            (atlas.prefactor(k), lam / atlas.length_scale(k), d)
        };
        let (p_b, q_b, d_b) = side(before);
        let (p_a, q_a, d_a) = side(after);
        let weight = lam * w.grid.spacing();
        for i in 0..w.grid.n_points {
            if w.values[i] == 0.0 {
                continue;
            }
            let xi = w.grid.x(i);
            let taylor = |p: f64, q: f64, d: &[Vec<f64>]| {
                let delta = xi * (q - 1.0);
                p * (d[0][i] + delta * d[1][i] + 0.5 * delta * delta * d[2][i])
            };
            let dbdt = (taylor(p_a, q_a, &d_a) - taylor(p_b, q_b, &d_b)) / dt;
            let transport = 2.0 * b * u.values[i] * pk / lam * dw[1][i];
            let stretching = b * s.values[i] * pk * dw[0][i];
            sq_r += weight * (dbdt - transport - stretching).powi(2);
            sq_t += weight * dbdt * dbdt;
            sq_u += weight * transport * transport;
            sq_s += weight * stretching * stretching;
            count += 1;
        }
    }
    let scale = sq_t.max(sq_u).max(sq_s).sqrt();
    Ok(ResidualReport {
        residual: if scale > 0.0 { sq_r.sqrt() / scale } else { 0.0 },
        time_derivative_norm: sq_t.sqrt(),
        transport_norm: sq_u.sqrt(),
        stretching_norm: sq_s.sqrt(),
        points: count,
    })
}

/// Average of the profiles and scaling factors of two atlases.
pub fn midpoint(before: &BubbleAtlas, after: &BubbleAtlas) -> Result<BubbleAtlas> {
    let profiles = before
        .profiles
        .iter()
        .zip(&after.profiles)
        .map(|(a, b)| {
            let mut f = a.with_values(a.values.iter().zip(&b.values).map(|(u, v)| 0.5 * (u + v)).collect());
            f.support = a
                .support
                .iter()
                .zip(&b.support)
                .map(|(s, q)| Interval::new(s.lo.min(q.lo), s.hi.max(q.hi)))
                .collect();
            f
        })
        .collect();
    let cascade = CascadeState {
        t: 0.5 * (before.cascade.t + after.cascade.t),
        x: before.cascade.x.iter().zip(&after.cascade.x).map(|(a, b)| 0.5 * (a + b)).collect(),
        a: before.cascade.a.clone(),
    };
    BubbleAtlas::new(before.params.clone(), cascade, profiles)
}

/// The same residual for periodic samples, through the direct solver's nonlinear evaluator.
pub fn model_residual_periodic(before: &[f64], after: &[f64], dt: f64, period: f64, b: f64) -> ResidualReport {
    let mid: Vec<f64> = before.iter().zip(after).map(|(u, v)| 0.5 * (u + v)).collect();
    let terms = direct_solver::nonlinear_terms(&mid, period, b);
    let h = period / mid.len() as f64;
    let (mut sq_r, mut sq_t, mut sq_u, mut sq_s) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..mid.len() {
        let dbdt = (after[i] - before[i]) / dt;
        sq_r += h * (dbdt - terms.transport[i] - terms.stretching[i]).powi(2);
        sq_t += h * dbdt * dbdt;
        sq_u += h * terms.transport[i].powi(2);
        sq_s += h * terms.stretching[i].powi(2);
    }
    let scale = sq_t.max(sq_u).max(sq_s).sqrt();
    ResidualReport {
        residual: if scale > 0.0 { sq_r.sqrt() / scale } else { 0.0 },
        time_derivative_norm: sq_t.sqrt(),
        transport_norm: sq_u.sqrt(),
        stretching_norm: sq_s.sqrt(),
        points: mid.len(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub order: usize,
    pub window: (f64, f64),
    /// `(n', C^N distance between B_n and B_{n'})` on `±window`.
    pub cn_distance: Vec<(usize, f64)>,
    /// Sobolev order used for the tail (largest half-integer ≤ 3 inside the convergent range).
    pub m: f64,
    /// Per-bubble inhomogeneous `H^m` norms.
    pub bubble_norms: Vec<f64>,
    /// `Σ_{j>k} ‖B_{n,j}‖_{H^m}` indexed by `k`.
    pub tail: Vec<f64>,
    pub consecutive_ratios: Vec<f64>,
    /// Geometric ratio fitted to the bubble norms for `j ≥ 1`.
    pub fitted_ratio: f64,
    pub predicted_ratio: f64,
    pub convergent_below: f64,
    /// The tail ratio at `m → 3.5` is `A ≥ 1`; set when `A r^{3.5-m} ≥ 1` for some `m < 3.5`.
    pub divergence_warning: bool,
}

/// Cauchy behavior of truncations on `±[lo, hi]` and the geometric `H^m` tail.
pub fn tail_report(atlas: &BubbleAtlas, order: usize, window: (f64, f64)) -> Result<TailReport> {
    let order_eval = order.min(MAX_EVAL_ORDER);
    let ev = atlas.evaluator(order_eval)?;
    let samples = 2001;
    let mut pts = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let x = window.0 + (window.1 - window.0) * i as f64 / (samples - 1) as f64;
        pts.push(x);
        pts.push(-x);
    }
    let n = atlas.n();
    let mut cn_distance = Vec::new();
    for np in 0..n {
        let mut dist: f64 = 0.0;
        for m in 0..=order_eval {
            for &x in &pts {
                let mut acc = 0.0;
                for j in np + 1..=n {
                    acc += ev.eval_bubble(j, x, m)?;
                }
                dist = dist.max(acc.abs());
            }
        }
        cn_distance.push((np, dist));
    }
    let (amp, r) = (atlas.params.amp, atlas.params.r);
    let bound = convergent_sobolev_bound(amp, r);
    let mut m = 3.0f64.min((2.0 * bound).ceil() / 2.0 - 0.5);
    if m < 0.0 {
        m = 0.0;
    }
    let bubble_norms: Vec<f64> = (0..=n).map(|k| atlas.bubble_sobolev(k, m)).collect();
    let tail: Vec<f64> = (0..=n).map(|k| bubble_norms[k + 1..].iter().sum()).collect();
    let consecutive_ratios: Vec<f64> = bubble_norms.windows(2).map(|w| w[1] / w[0]).collect();
    let fitted_ratio = if n >= 2 {
        let pts: Vec<(f64, f64)> = (1..=n).map(|k| (k as f64, bubble_norms[k].ln())).collect();
        crate::diagnostics::least_squares(&pts).0.exp()
    } else {
        consecutive_ratios.first().copied().unwrap_or(f64::NAN)
    };
    let divergence_warning = amp > 1.0 && bound < 3.5;
    if divergence_warning {
        log::warn!(
            "H^m tail diverges for m >= {bound:.4} (A r^(3.5-m) >= 1); convergence holds only below that order"
        );
    }
    Ok(TailReport {
        order,
        window,
        cn_distance,
        m,
        bubble_norms,
        tail,
        consecutive_ratios,
        fitted_ratio,
        predicted_ratio: amp * r.powf(3.5 - m),
        convergent_below: bound,
        divergence_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::make_seed_profile;

    fn atlas(n: usize) -> BubbleAtlas {
        let params = ModelParams { n, ..Default::default() };
        let seed = make_seed_profile(params.r, 512).unwrap();
        BubbleAtlas::initial(&params, &seed).unwrap()
    }

    #[test]
    fn first_bubble_is_the_seed() {
        let a = atlas(2);
        let seed = &a.profiles[0];
        let pts: Vec<f64> = (0..seed.grid.n_points).map(|i| seed.grid.x(i)).filter(|x| x.abs() > 0.5).collect();
        let vals = a.evaluate_bubble(0, &pts, 0).unwrap();
        for (x, v) in pts.iter().zip(vals) {
            let i = ((x - seed.grid.x_min) / seed.grid.spacing()).round() as usize;
            assert!((v - seed.values[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn initial_identity_and_scaling() {
        let a = atlas(3);
        let (amp, r) = (a.params.amp, a.params.r);
        for k in 0..=3 {
            let lam = r.powi(k as i32);
            assert!((a.length_scale(k) - lam).abs() <= 1e-15 * lam);
            let p = r.powi(3 * k as i32) * amp.powi(k as i32);
            assert!((a.prefactor(k) - p).abs() <= 1e-12 * p);
        }
        a.check_nesting().unwrap();
    }

    #[test]
    fn far_points_vanish_and_high_order_rejected() {
        let a = atlas(2);
        assert_eq!(a.evaluate(&[5.0, -3.0, 0.5, 0.0], 2).unwrap(), vec![0.0; 4]);
        assert!(matches!(a.evaluate(&[0.1], 5), Err(CascadeError::UnsupportedOrder { .. })));
    }

    #[test]
    fn sobolev_scaling_at_initial_time() {
        let a = atlas(3);
        let (amp, r) = (a.params.amp, a.params.r);
        for m in [0.0, 1.0, 2.5, 3.0] {
            let rep = a.sobolev_norm(m).unwrap();
            for k in 1..=3 {
                let expect = (amp * r.powf(3.5 - m)).powi(k as i32) * rep.per_bubble[0];
                assert!((rep.per_bubble[k] - expect).abs() <= 1e-9 * expect);
            }
        }
        assert!(!a.sobolev_norm(3.0).unwrap().divergent);
        assert!(a.sobolev_norm(3.5).unwrap().divergent);
        assert!(a.sobolev_norm(1.25).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let a = atlas(2);
        let dir = std::env::temp_dir().join(format!("emhd_ckpt_{}", std::process::id()));
        a.write_checkpoint(&dir).unwrap();
        let b = BubbleAtlas::read_checkpoint(&dir).unwrap();
        assert_eq!(a, b);
        fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn cubic_is_exact_on_cubics() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let v: Vec<f64> = xs.iter().map(|x| x * x * x - 2.0 * x).collect();
        for x in [0.1, 1.3, 4.4] {
            assert!((cubic(&v, 0.0, 0.5, x) - (x * x * x - 2.0 * x)).abs() < 1e-12);
        }
    }
}
