//! Bootstrap monitors: `Ḣ⁴` closeness to the seed, support windows, the `L¹`
//! consequence, the eight energy terms, the scaling-flow energy identity, and the
//! interaction-bound battery.

use serde::{Deserialize, Serialize};

use crate::assembly::BubbleAtlas;
use crate::error::{CascadeError, Result};
use crate::field::SampledField;
use crate::params::ModelParams;
use crate::profile::{coefficients, support_windows, Coefficients, MonitorSample, SeedProfile};
use crate::singular_integral::{BubbleSet, InteractionEngine};
use crate::spectral::{self, TrigInterpolant};

/// Energy terms bounded by `C‖W-φ‖²_{Ḣ⁴}`; the rest are linear in the distance.
pub const QUADRATIC_TERMS: [usize; 4] = [0, 2, 4, 6];

/// Largest fraction of spectral energy allowed in the top third of the modes.
const SPECTRAL_TAIL_LIMIT: f64 = 1e-3;

fn pad(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; 2 * n];
    out[n / 2..n / 2 + n].copy_from_slice(values);
    out
}

/// `‖f - g‖_{Ḣ^s}` on a shared grid, computed spectrally on a zero-padded copy.
pub fn hdot_distance(f: &SampledField, g: &SampledField, s: f64) -> f64 {
    let d: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a - b).collect();
    spectral::homogeneous_seminorm_sq(&pad(&d), 2.0 * f.grid.length(), s).sqrt()
}

pub fn hdot_norm(f: &SampledField, s: f64) -> f64 {
    spectral::homogeneous_seminorm_sq(&pad(&f.values), 2.0 * f.grid.length(), s).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BubbleBootstrap {
    pub k: usize,
    pub hdot4: f64,
    pub l1: f64,
    /// `512 r⁴ √(2r) ε`.
    pub l1_literal_bound: f64,
    /// `2⁹ r⁴ √(2r) ‖∂⁴(W-φ)‖_{L²}`.
    pub l1_proof_bound: f64,
    pub support_inside: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub epsilon: f64,
    pub bubbles: Vec<BubbleBootstrap>,
    pub max_hdot4: f64,
    pub pass: bool,
}

pub fn bootstrap_monitor(atlas: &BubbleAtlas, seed: &SeedProfile, epsilon: f64) -> BootstrapReport {
    let r = seed.r;
    let windows = support_windows(r);
    let c = r.powi(4) * (2.0 * r).sqrt() * 512.0;
    let bubbles: Vec<BubbleBootstrap> = atlas
        .profiles
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let hdot4 = hdot_distance(w, &seed.field, 4.0);
            let l1 = w
                .values
                .iter()
                .zip(&seed.field.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                * w.grid.spacing();
            let support_inside = w
                .support
                .iter()
                .all(|s| windows.iter().any(|win| win.lo <= s.lo && s.hi <= win.hi));
            BubbleBootstrap {
                k,
                hdot4,
                l1,
                l1_literal_bound: c * epsilon,
                l1_proof_bound: c * hdot4,
                support_inside,
            }
        })
        .collect();
    let max_hdot4 = bubbles.iter().fold(0.0, |m: f64, b| m.max(b.hdot4));
    let pass = bubbles
        .iter()
        .all(|b| b.hdot4 <= epsilon && b.support_inside && b.l1 <= b.l1_literal_bound);
    BootstrapReport {
        epsilon,
        bubbles,
        max_hdot4,
        pass,
    }
}

/// The eight energy terms with the self-check against `∫∂⁴D ∂⁴(rhs)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub terms: [f64; 8],
    /// `∫∂⁴(W-φ) ∂⁴(∂_t W)` computed in one piece.
    pub direct: f64,
    pub closure_error: f64,
}

/// `E_1..E_8` for bubble `k` in integration-by-parts form `∫∂⁴D ∂⁴(X_i)`, `D = W - φ`.
pub fn energy_terms(w_k: &SampledField, seed: &SeedProfile, atlas: &BubbleAtlas, k: usize, params: &ModelParams) -> Result<[f64; 8]> {
    if params.b != atlas.params.b || params.c != atlas.exponents.c {
        return Err(CascadeError::Config("params disagree with the atlas".into()));
    }
    let coef = coefficients(atlas)?;
    Ok(energy_terms_with(w_k, seed, atlas, k, &coef)?.terms)
}

fn spectral_tail(values: &[f64]) -> f64 {
    let spec = spectral::fft(values);
    let n = values.len();
    let mut total = 0.0;
    let mut tail = 0.0;
    for (j, c) in spec.iter().enumerate() {
        let m = j.min(n - j);
        let e = c.norm_sqr();
        total += e;
        if 3 * m > n {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

pub fn energy_terms_with(
    w_k: &SampledField,
    seed: &SeedProfile,
    atlas: &BubbleAtlas,
    k: usize,
    coef: &Coefficients,
) -> Result<EnergyTerms> {
    let grid = w_k.grid;
    if grid != seed.field.grid {
        return Err(CascadeError::Config("profile and seed grids differ".into()));
    }
    let tail = spectral_tail(&w_k.values);
    if tail > SPECTRAL_TAIL_LIMIT {
        return Err(CascadeError::Resolution(format!(
            "{:.1e} of the spectral energy of W_{k} sits in the top third of the modes",
            tail
        )));
    }
    let n = grid.n_points;
    let h = grid.spacing();
    let period = grid.length();
    let b = atlas.params.b;
    let c = atlas.exponents.c;
    let rho = coef.rho[k];
    let alpha = 2.0 * b / atlas.length_scale(k);

    // derivatives of compact data are cut off a few nodes outside the support
    let margin = 4.0 * h;
    let mask: Vec<bool> = (0..n)
        .map(|i| {
            let x = grid.x(i);
            w_k.support_distance(x) <= margin || seed.field.support_distance(x) <= margin
        })
        .collect();
    let d: Vec<f64> = w_k.values.iter().zip(&seed.field.values).map(|(a, b)| a - b).collect();
    let first = |v: &[f64]| -> Vec<f64> {
        let dv = spectral::with_zero_padding_multi(v, period, 2, 1).pop().unwrap();
        dv.into_iter().zip(&mask).map(|(x, m)| if *m { x } else { 0.0 }).collect()
    };
    let fourth = |v: &[f64]| -> Vec<f64> { spectral::with_zero_padding_multi(v, period, 2, 4).pop().unwrap() };
    let dd = first(&d);
    let dphi = first(&seed.field.values);
    let u = &coef.u[k];
    let s = &coef.s[k];
    let xs = grid.points();
    let prod = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).map(f).collect() };
    let x_fields = [
        prod(&|i| alpha * u[i] * dd[i]),
        prod(&|i| alpha * u[i] * dphi[i]),
        prod(&|i| rho * xs[i] * dd[i]),
        prod(&|i| rho * xs[i] * dphi[i]),
        prod(&|i| b * s[i] * d[i]),
        prod(&|i| b * s[i] * seed.field.values[i]),
    ];
    let d4 = fourth(&d);
    let phi4 = fourth(&seed.field.values);
    let inner = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * h;
    let mut terms = [0.0; 8];
    for (i, x) in x_fields.iter().enumerate() {
        terms[i] = inner(&d4, &fourth(x));
    }
    terms[6] = -c * rho * inner(&d4, &d4);
    terms[7] = -c * rho * inner(&d4, &phi4);
    let dw: Vec<f64> = dd.iter().zip(&dphi).map(|(a, b)| a + b).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| (alpha * u[i] + rho * xs[i]) * dw[i] + (b * s[i] - c * rho) * w_k.values[i])
        .collect();
    let direct = inner(&d4, &fourth(&rhs));
    let total: f64 = terms.iter().sum();
    let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(direct.abs());
    Ok(EnergyTerms {
        terms,
        direct,
        closure_error: if scale > 0.0 { (total - direct).abs() / scale } else { 0.0 },
    })
}

/// Relative mismatch between the measured `½ d/dt ‖W‖²_{Ḣ^N}` under the scaling flow
/// `∂_t W = ρξW' - cρW` and `(N - ½ - c) ρ ‖W‖²_{Ḣ^N}`.
///
/// The flow is advanced exactly, `W(t) = e^{-cρt} W(ξ e^{ρt})`, by band-limited
/// interpolation; the derivative is a centered difference across `±dt`.
pub fn energy_identity_check(w: &SampledField, order: u32, rho: f64, c: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(CascadeError::Config("energy identity check needs dt > 0".into()));
    }
    w.check_finite()?;
    let grid = w.grid;
    let interp = TrigInterpolant::new(&w.values, grid.x_min, grid.length());
    let evolve = |t: f64| -> Vec<f64> {
        let (amp, stretch) = ((-c * rho * t).exp(), (rho * t).exp());
        grid.points().iter().map(|x| amp * interp.eval(x * stretch, 0)).collect()
    };
    let norm = |v: &[f64]| spectral::homogeneous_seminorm_sq(&pad(v), 2.0 * grid.length(), order as f64);
    let base = norm(&w.values);
    let measured = (norm(&evolve(dt)) - norm(&evolve(-dt))) / (4.0 * dt);
    let predicted = (order as f64 - 0.5 - c) * rho * base;
    if predicted == 0.0 {
        return Ok(if base > 0.0 { measured.abs() / base } else { measured.abs() });
    }
    Ok((measured - predicted).abs() / predicted.abs())
}

/// `√E = K|t|` through the origin, with every sample's ratio to the fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GronwallFit {
    pub k: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Fits `max_k ‖W_k-φ‖_{Ḣ⁴} ≤ K|t|` by least squares; passes when every ratio lies in `[1/2, 2]`.
pub fn gronwall_fit(samples: &[MonitorSample]) -> GronwallFit {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.t != 0.0)
        .map(|s| (s.t.abs(), s.hdot4.iter().fold(0.0, |m: f64, v| m.max(*v))))
        .collect();
    let num: f64 = pts.iter().map(|(t, y)| t * y).sum();
    let den: f64 = pts.iter().map(|(t, _)| t * t).sum();
    let k = if den > 0.0 { num / den } else { f64::NAN };
    let ratios: Vec<f64> = pts.iter().map(|(t, y)| y / (k * t)).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    GronwallFit {
        k,
        min_ratio,
        max_ratio,
        samples: pts.len(),
        pass: !pts.is_empty() && min_ratio >= 0.5 && max_ratio <= 2.0,
    }
}

/// Stability of `|E_i| / ‖W_k-φ‖^p` along a run (`p = 2` for quadratic terms, 1 otherwise).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyStability {
    /// Calibrated constant per `(term, bubble)`; `NaN` when the term vanishes identically.
    pub constants: Vec<[f64; 8]>,
    /// Largest `max(q/C, C/q)` per term over bubbles and samples.
    pub worst_factor: [f64; 8],
    pub pass: bool,
}

/// Constants are calibrated at the first sample with `t ≠ 0`; every later ratio must stay within factor 2.
pub fn energy_ratio_stability(samples: &[MonitorSample]) -> EnergyStability {
    let run: Vec<&MonitorSample> = samples.iter().filter(|s| s.t != 0.0 && !s.energies.is_empty()).collect();
    let bubbles = run.first().map(|s| s.energies.len()).unwrap_or(0);
    let ratio = |s: &MonitorSample, k: usize, i: usize| -> Option<f64> {
        let dist = s.hdot4[k];
        let e = s.energies[k][i].abs();
        if dist == 0.0 || e == 0.0 {
            return None;
        }
        let p = if QUADRATIC_TERMS.contains(&i) { 2 } else { 1 };
        Some(e / dist.powi(p))
    };
    let mut constants = vec![[f64::NAN; 8]; bubbles];
    let mut worst = [1.0; 8];
    for k in 0..bubbles {
        for i in 0..8 {
            let mut cal = None;
            for s in &run {
                let Some(q) = ratio(s, k, i) else { continue };
                match cal {
                    None => {
                        cal = Some(q);
                        constants[k][i] = q;
                    }
                    Some(c) => {
                        let f = (q / c).max(c / q);
                        if f > worst[i] {
                            worst[i] = f;
                        }
                    }
                }
            }
        }
    }
    EnergyStability {
        constants,
        worst_factor: worst,
        pass: bubbles > 0 && worst.iter().all(|w| *w <= 2.0),
    }
}

/// The ten interaction bounds as `(order, bubble set)`.
pub const INTERACTION_BOUNDS: [(usize, BubbleSet); 10] = [
    (1, BubbleSet::Below),
    (2, BubbleSet::Below),
    (3, BubbleSet::Below),
    (4, BubbleSet::Below),
    (5, BubbleSet::Below),
    (5, BubbleSet::Above),
    (4, BubbleSet::Above),
    (3, BubbleSet::Above),
    (2, BubbleSet::Above),
    (1, BubbleSet::Above),
];

/// Scale each interaction bound is measured against, for bubble `k`.
fn bound_scale(i: usize, atlas: &BubbleAtlas, k: usize) -> f64 {
    let (amp, r) = (atlas.params.amp, atlas.params.r);
    let x = atlas.cascade.x[k];
    let kk = k as i32;
    match i {
        0 => x * (r / amp).powi(kk),
        1 | 8 => 1.0,
        2 | 7 => amp.powi(kk),
        3 | 6 => (amp / r).powi(kk),
        4 | 5 => (amp / r).powi(2 * kk) / x,
        _ => (amp * r).powi(kk),
    }
}

/// `max_{supp B_k} |∂^N H B_±| / scale` per bubble; `NaN` where the sum is empty.
pub fn interaction_ratios(atlas: &BubbleAtlas) -> Result<Vec<[f64; 10]>> {
    let engine = InteractionEngine::new(atlas, 5)?;
    let n = atlas.n();
    (0..=n)
        .map(|k| {
            let w = &atlas.profiles[k];
            let mut out = [f64::NAN; 10];
            for (i, (order, set)) in INTERACTION_BOUNDS.iter().enumerate() {
                let empty = match set {
                    BubbleSet::Below => k == 0,
                    BubbleSet::Above => k == n,
                    BubbleSet::All => false,
                };
                if empty {
                    continue;
                }
                let f = engine.field(k, *order, *set)?;
                let peak = (0..w.grid.n_points)
                    .filter(|&j| w.in_support(w.grid.x(j)))
                    .fold(0.0, |m: f64, j| m.max(f.values[j].abs()));
                out[i] = peak / bound_scale(i, atlas, k);
            }
            Ok(out)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionBattery {
    /// Fitted constants (first defined bubble of the first atlas) times the safety factor.
    pub constants: [f64; 10],
    /// Largest measured ratio divided by its constant, per bound.
    pub worst: [f64; 10],
    /// `(t, bubble, bound index)` of every violation.
    pub violations: Vec<(f64, usize, usize)>,
    pub pass: bool,
}

pub fn interaction_battery(atlases: &[BubbleAtlas], safety: f64) -> Result<InteractionBattery> {
    let Some(first) = atlases.first() else {
        return Err(CascadeError::Coverage("no atlases".into()));
    };
    let cal = interaction_ratios(first)?;
    let mut constants = [f64::NAN; 10];
    for (i, c) in constants.iter_mut().enumerate() {
        if let Some(row) = cal.iter().find(|row| row[i].is_finite()) {
            *c = safety * row[i];
        }
    }
    let mut worst = [0.0; 10];
    let mut violations = Vec::new();
    for atlas in atlases {
        let rows = if std::ptr::eq(atlas, first) { cal.clone() } else { interaction_ratios(atlas)? };
        for (k, row) in rows.iter().enumerate() {
            for i in 0..10 {
                if !row[i].is_finite() || !constants[i].is_finite() {
                    continue;
                }
                let q = row[i] / constants[i];
                if q > worst[i] {
                    worst[i] = q;
                }
                if q > 1.0 {
                    violations.push((atlas.t(), k, i));
                }
            }
        }
    }
    Ok(InteractionBattery {
        constants,
        worst,
        pass: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::field::Parity;
    use crate::profile::make_seed_profile;

    fn atlas(n: usize) -> (BubbleAtlas, SeedProfile, ModelParams) {
        let params = ModelParams { n, ..Default::default() };
        let seed = make_seed_profile(params.r, 512).unwrap();
        (BubbleAtlas::initial(&params, &seed).unwrap(), seed, params)
    }

    #[test]
    fn seed_is_at_distance_zero() {
        let (a, seed, p) = atlas(2);
        let rep = bootstrap_monitor(&a, &seed, p.epsilon);
        assert!(rep.pass);
        assert!(rep.bubbles.iter().all(|b| b.hdot4 == 0.0 && b.l1 == 0.0));
        for k in 0..=2 {
            assert_eq!(energy_terms(&a.profiles[k], &seed, &a, k, &p).unwrap(), [0.0; 8]);
        }
    }

    #[test]
    fn homogeneity_of_the_distance() {
        let (mut a, seed, p) = atlas(0);
        let eta = 1e-6;
        a.profiles[0].values.iter_mut().for_each(|v| *v *= 1.0 + eta);
        let rep = bootstrap_monitor(&a, &seed, p.epsilon);
        let expect = eta * hdot_norm(&seed.field, 4.0);
        assert!((rep.bubbles[0].hdot4 - expect).abs() <= 1e-6 * expect, "{} vs {expect}", rep.bubbles[0].hdot4);
    }

    #[test]
    fn scaling_identity_zero_rate() {
        let g = Grid::symmetric(1.2, 256).unwrap();
        let f = SampledField::from_fn(g, vec![], Parity::None, |x| (-x * x / 0.02).exp()).unwrap();
        assert!(energy_identity_check(&f, 2, 0.0, 4.0, 1e-3).unwrap() < 1e-10);
    }
}
