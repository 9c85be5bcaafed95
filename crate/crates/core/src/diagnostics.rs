//! Blow-up rate fits, Hölder exponent estimates, and the self-similarity probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::BubbleAtlas;
use crate::cascade_ode::{solve_root, Trajectory};
use crate::error::{CascadeError, Result};
use crate::params::ModelParams;
use crate::spectral;

/// Ordinary least squares `y = slope·x + intercept`; returns `(slope, intercept, R²)`.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    if points.len() < 2 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, my, f64::NAN);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `(|t|_min, |t|_max)` of the samples used.
    pub window: (f64, f64),
    /// `max(M|t|) / min(M|t|)` over the window.
    pub band_ratio: f64,
    pub samples: usize,
}

/// Fit `log M` against `log|t|` for samples `(|t|, M)` inside `window`.
pub fn rate_fit(samples: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<RateFit> {
    let used: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(t, m)| *t > 0.0 && *m > 0.0 && window.is_none_or(|(lo, hi)| *t >= lo * (1.0 - 1e-12) && *t <= hi * (1.0 + 1e-12)))
        .collect();
    if used.len() < 3 {
        return Err(CascadeError::Coverage(format!("{} usable samples for a rate fit", used.len())));
    }
    let lo = used.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|p| p.0).fold(0.0, f64::max);
    if (hi / lo).log10() < 2.0 - 1e-9 {
        return Err(CascadeError::Coverage(format!(
            "samples span |t| in [{lo:e}, {hi:e}], under two decades"
        )));
    }
    let logs: Vec<(f64, f64)> = used.iter().map(|(t, m)| (t.ln(), m.ln())).collect();
    let (slope, intercept, r2) = least_squares(&logs);
    let band: Vec<f64> = used.iter().map(|(t, m)| t * m).collect();
    let band_ratio = band.iter().fold(0.0, |a: f64, b| a.max(*b)) / band.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    Ok(RateFit {
        slope,
        intercept,
        r2,
        window: (lo, hi),
        band_ratio,
        samples: used.len(),
    })
}

/// Rate fit over atlas checkpoints with `M(t) = max|∂³B(·,t)|`.
pub fn blowup_rate_fit(checkpoints: &[BubbleAtlas]) -> Result<RateFit> {
    let samples = checkpoints
        .par_iter()
        .map(|a| Ok((a.t().abs(), a.sup_third_derivative()?.value)))
        .collect::<Result<Vec<_>>>()?;
    rate_fit(&samples, None)
}

/// Rate fit of `sup_k x_k(t)` along an ODE trajectory.
pub fn cascade_rate_fit(traj: &Trajectory, window: (f64, f64)) -> Result<RateFit> {
    let samples: Vec<(f64, f64)> = traj.states.iter().map(|s| (s.t.abs(), s.sup_x())).collect();
    rate_fit(&samples, Some(window))
}

/// `s = (a - ln A)/(a - ln r)` with `a` the positive root of `a = A(1 - e^{-a})`.
pub fn predicted_holder_exponent(amp: f64, r: f64) -> Result<f64> {
    let a = solve_root(amp)?;
    Ok((a - amp.ln()) / (a - r.ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HolderOptions {
    pub random_pairs: usize,
    pub seed: u64,
    /// First bubble index entering the adjacent-peak fit.
    pub first_bubble: usize,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self {
            random_pairs: 4000,
            seed: 7,
            first_bubble: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderPair {
    pub x: f64,
    pub y: f64,
    pub separation: f64,
    pub difference: f64,
    pub adjacent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderReport {
    pub s_measured: f64,
    pub s_predicted: f64,
    /// `s_predicted` was clamped into `[0, 1/2]`.
    pub clamped: bool,
    pub pair_count: usize,
    /// Fit of `log|Δ∂³B|` against `log|x - y|` over random pairs inside one bubble.
    pub within_slope: f64,
    /// Largest `|Δ∂³B| / |x - y|^{s_floor}` with `s_floor = s_predicted / 2`.
    pub max_quotient: f64,
    /// Growth rate in `k` of the per-bubble largest quotient at `s_floor`.
    pub quotient_trend: f64,
    /// Smallest `s` with `|Δ∂³B| = Q₀|x - y|^s` over pairs below the first fitted bubble,
    /// `Q₀` the largest quotient at `s_floor` within that bubble.
    pub min_implied_exponent: f64,
    pub resolved_bubbles: usize,
    pub precision_warning: bool,
    pub pairs: Vec<HolderPair>,
}

/// Positive-side location of `max|W_k'''|` in the reference coordinate.
fn third_derivative_peak(atlas: &BubbleAtlas, k: usize) -> f64 {
    let w = &atlas.profiles[k];
    let d3 = spectral::with_zero_padding_multi(&w.values, w.grid.length(), 2, 3).pop().unwrap();
    let mut best = (0.0, 0.0);
    for (i, v) in d3.iter().enumerate() {
        let xi = w.grid.x(i);
        if xi > 0.0 && v.abs() > best.1 {
            best = (xi, v.abs());
        }
    }
    best.0
}

/// Hölder exponent of `∂³B` measured from adjacent-bubble peak pairs, with random
/// within-bubble pairs as a check on the quotient.
pub fn holder_estimate(atlas: &BubbleAtlas, opts: &HolderOptions) -> Result<HolderReport> {
    let n = atlas.n();
    let resolved = n + 1;
    let precision_warning = resolved < 10;
    if precision_warning {
        log::warn!("Hölder estimate on {resolved} bubbles; at least 10 are needed for a reliable slope");
    }
    let raw = predicted_holder_exponent(atlas.params.amp, atlas.params.r)?;
    let s_predicted = raw.clamp(0.0, 0.5);
    let ev = atlas.evaluator(3)?;
    let peaks: Vec<f64> = (0..=n).map(|k| third_derivative_peak(atlas, k) * atlas.length_scale(k)).collect();
    let mut pairs = Vec::new();
    let first = opts.first_bubble.min(n.saturating_sub(2));
    for k in first..n {
        let (x, y) = (peaks[k], peaks[k + 1]);
        let difference = (ev.eval(x, 3)? - ev.eval(y, 3)?).abs();
        pairs.push(HolderPair {
            x,
            y,
            separation: (x - y).abs(),
            difference,
            adjacent: true,
        });
    }
    let fit_pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|p| p.difference > 0.0)
        .map(|p| (p.separation.ln(), p.difference.ln()))
        .collect();
    let s_measured = least_squares(&fit_pts).0;

    // The same reference-coordinate pairs are placed in every bubble so that
    // per-bubble quotients differ only through the scaling.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let draws: Vec<(f64, f64)> = (0..opts.random_pairs)
        .map(|_| (rng.random_range(0.0..1.0), rng.random_range(-4.0..-0.05)))
        .collect();
    let mut within = Vec::new();
    for k in first..=n {
        let supp = atlas.physical_support(k);
        let Some(s) = supp.iter().filter(|s| s.lo > 0.0).max_by(|a, b| a.width().total_cmp(&b.width())) else {
            continue;
        };
        for &(u, e) in &draws {
            let d = s.width() * 10f64.powf(e);
            let x = s.lo + u * (s.width() - d);
            let y = x + d;
            let difference = (ev.eval(x, 3)? - ev.eval(y, 3)?).abs();
            within.push((k, HolderPair {
                x,
                y,
                separation: d,
                difference,
                adjacent: false,
            }));
        }
    }
    // Sub-grid separations at shared positions; per-position means are removed so the
    // slope is not swamped by the spread of |∂⁴B| across the bubble.
    let within_slope = {
        let h = atlas.profiles[first].grid.spacing() * atlas.length_scale(first);
        let supp = atlas.physical_support(first);
        let mut pts = Vec::new();
        if let Some(s) = supp.iter().filter(|s| s.lo > 0.0).max_by(|a, b| a.width().total_cmp(&b.width())) {
            for &(u, _) in draws.iter().take(500) {
                let x = s.lo + u * (s.width() - h);
                let f0 = ev.eval(x, 3)?;
                let mut group = Vec::new();
                for j in 0..=6 {
                    let d = h * 10f64.powf(-1.0 - 0.5 * j as f64);
                    let diff = (ev.eval(x + d, 3)? - f0).abs();
                    if diff > 0.0 {
                        group.push((d.ln(), diff.ln()));
                    }
                }
                if group.len() >= 2 {
                    let mx = group.iter().map(|p| p.0).sum::<f64>() / group.len() as f64;
                    let my = group.iter().map(|p| p.1).sum::<f64>() / group.len() as f64;
                    pts.extend(group.into_iter().map(|(a, b)| (a - mx, b - my)));
                }
            }
        }
        least_squares(&pts).0
    };

    let s_floor = 0.5 * s_predicted;
    let all: Vec<(usize, &HolderPair)> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (first + i, p))
        .chain(within.iter().map(|(k, p)| (*k, p)))
        .filter(|(_, p)| p.difference > 0.0)
        .collect();
    let mut per_bubble = vec![0.0f64; n + 1];
    for (k, p) in &all {
        let q = p.difference / p.separation.powf(s_floor);
        per_bubble[*k] = per_bubble[*k].max(q);
    }
    let max_quotient = per_bubble.iter().fold(0.0f64, |a, b| a.max(*b));
    // Exponent at which each deeper pair would reach the constant realized at the top scale.
    let q0 = per_bubble[first];
    let mut min_implied = f64::INFINITY;
    for (k, p) in &all {
        if *k > first && p.separation < 1.0 && q0 > 0.0 {
            min_implied = min_implied.min((p.difference / q0).ln() / p.separation.ln());
        }
    }
    let trend_pts: Vec<(f64, f64)> = (first..=n)
        .filter(|k| per_bubble[*k] > 0.0)
        .map(|k| (k as f64, per_bubble[k].ln()))
        .collect();
    let quotient_trend = least_squares(&trend_pts).0;
    let pair_count = all.len();
    pairs.extend(within.into_iter().map(|(_, p)| p));
    Ok(HolderReport {
        s_measured,
        s_predicted,
        clamped: raw != s_predicted,
        pair_count,
        within_slope,
        max_quotient,
        quotient_trend,
        min_implied_exponent: min_implied,
        resolved_bubbles: resolved,
        precision_warning,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRow {
    pub c: f64,
    /// Limit of `C_w^{-1}`.
    pub cw_inv: f64,
    /// Limit of `C_l^{-2}`.
    pub cl_inv_sq: f64,
    pub feasible: bool,
}

/// Limits of the dynamic rescaling constants: `C_w^{-1} → -(2c+1)` and
/// `C_w^{-1}C_l^{-2} → 1` force `C_l^{-2} = -1/(2c+1)`.
pub fn selfsim_feasibility(c_values: &[f64], params: &ModelParams) -> Result<Vec<FeasibilityRow>> {
    let _ = params;
    c_values
        .iter()
        .map(|&c| {
            if !(c > -0.5) || !c.is_finite() {
                return Err(CascadeError::Domain(format!("c = {c} outside (-1/2, ∞)")));
            }
            let cw_inv = -(2.0 * c + 1.0);
            let cl_inv_sq = 1.0 / cw_inv;
            Ok(FeasibilityRow {
                c,
                cw_inv,
                cl_inv_sq,
                feasible: cl_inv_sq > 0.0,
            })
        })
        .collect()
}

/// A solution snapshot the self-similarity probe can rescale.
pub trait Snapshot: Sync {
    fn time(&self) -> f64;
    /// `(max|∂³B|, positive location of the maximizer)`.
    fn third_derivative_peak(&self) -> Result<(f64, f64)>;
    fn values(&self, xs: &[f64]) -> Result<Vec<f64>>;
}

impl Snapshot for BubbleAtlas {
    fn time(&self) -> f64 {
        self.t()
    }

    fn third_derivative_peak(&self) -> Result<(f64, f64)> {
        let p = self.sup_third_derivative()?;
        Ok((p.value, p.xi.abs() * self.length_scale(p.bubble)))
    }

    fn values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        self.evaluate(xs, 0)
    }
}

/// `u(x,t) = |t|^{-1} g(x/|t|) + |t|·h(x)` with `g(ξ) = ξ e^{-ξ²}` and `h(x) = x e^{-x²}`;
/// self-similar as `t → 0`.
#[derive(Debug, Clone, Copy)]
pub struct SelfSimilarFamily {
    pub t: f64,
    pub perturbation: f64,
}

impl SelfSimilarFamily {
    fn g(xi: f64) -> f64 {
        xi * (-xi * xi).exp()
    }
}

impl Snapshot for SelfSimilarFamily {
    fn time(&self) -> f64 {
        self.t
    }

    fn third_derivative_peak(&self) -> Result<(f64, f64)> {
        let s = self.t.abs();
        if s == 0.0 {
            return Err(CascadeError::Probe("self-similar family is singular at t = 0".into()));
        }
        // |g'''| peaks at ξ = 0 with value 6; the length scale is |t|.
        Ok((6.0 / s.powi(4), s))
    }

    fn values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let s = self.t.abs();
        Ok(xs
            .iter()
            .map(|x| Self::g(x / s) / s + self.perturbation * s * x * (-x * x).exp())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeOptions {
    /// Rescaled profiles are compared on `|ξ| ∈ [xi_min, xi_max]`.
    pub xi_min: f64,
    pub xi_max: f64,
    pub points_per_decade: usize,
    /// Exponent `p` of the weight `(1 + ξ²)^{-p}`.
    pub weight_power: f64,
    /// Checkpoints within this factor of the smallest `|t|` form the final window.
    pub final_window: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            xi_min: 1e-3,
            xi_max: 1e3,
            points_per_decade: 2000,
            weight_power: 1.0,
            final_window: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfsimReport {
    pub times: Vec<f64>,
    pub length_scales: Vec<f64>,
    /// Distances between checkpoints adjacent in time, final window only.
    pub consecutive: Vec<f64>,
    pub min_consecutive: f64,
    /// Smallest distance over all pairs in the final window.
    pub min_pairwise: f64,
    pub weight_power: f64,
}

/// Rescale each snapshot by the location of its `∂³B` peak, normalize in weighted
/// `L²`, and compare late-time snapshots pairwise.
pub fn selfsim_probe<S: Snapshot>(snapshots: &[S], opts: &ProbeOptions) -> Result<SelfsimReport> {
    if snapshots.len() < 2 {
        return Err(CascadeError::Coverage("self-similarity probe needs two snapshots".into()));
    }
    let mut order: Vec<usize> = (0..snapshots.len()).collect();
    order.sort_by(|&a, &b| snapshots[b].time().abs().total_cmp(&snapshots[a].time().abs()));
    let t_lo = snapshots[*order.last().unwrap()].time().abs();
    let t_hi = snapshots[order[0]].time().abs();
    if !(t_lo > 0.0) || t_hi / t_lo < 10.0 * (1.0 - 1e-9) {
        return Err(CascadeError::Coverage(format!(
            "snapshots span |t| in [{t_lo:e}, {t_hi:e}], under one decade"
        )));
    }
    let late: Vec<usize> = order
        .into_iter()
        .filter(|&i| snapshots[i].time().abs() <= opts.final_window * t_lo * (1.0 + 1e-9))
        .collect();

    let decades = (opts.xi_max / opts.xi_min).log10();
    let m = (decades * opts.points_per_decade as f64).ceil() as usize + 1;
    let half: Vec<f64> = (0..m)
        .map(|i| opts.xi_min * 10f64.powf(decades * i as f64 / (m - 1) as f64))
        .collect();
    let xi: Vec<f64> = half.iter().rev().map(|v| -v).chain(half.iter().copied()).collect();
    let weights = trapezoid_weights(&xi, opts.weight_power);

    let rescaled = late
        .par_iter()
        .map(|&i| {
            let s = &snapshots[i];
            let (peak, loc) = s.third_derivative_peak()?;
            if !(peak > 0.0) || !peak.is_finite() {
                return Err(CascadeError::Probe(format!("degenerate amplitude at t = {:e}", s.time())));
            }
            let scale = loc;
            if !(scale > 0.0) {
                return Err(CascadeError::Probe(format!("degenerate length scale at t = {:e}", s.time())));
            }
            let xs: Vec<f64> = xi.iter().map(|v| v * scale).collect();
            let vals = s.values(&xs)?;
            let norm = vals.iter().zip(&weights).map(|(v, w)| v * v * w).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(CascadeError::Probe(format!("zero rescaled profile at t = {:e}", s.time())));
            }
            Ok((scale, vals.into_iter().map(|v| v / norm).collect::<Vec<f64>>()))
        })
        .collect::<Result<Vec<_>>>()?;

    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(&weights).map(|((x, y), w)| (x - y).powi(2) * w).sum::<f64>().sqrt()
    };
    let consecutive: Vec<f64> = rescaled.windows(2).map(|w| dist(&w[0].1, &w[1].1)).collect();
    let mut min_pairwise = f64::INFINITY;
    for i in 0..rescaled.len() {
        for j in i + 1..rescaled.len() {
            min_pairwise = min_pairwise.min(dist(&rescaled[i].1, &rescaled[j].1));
        }
    }
    Ok(SelfsimReport {
        times: late.iter().map(|&i| snapshots[i].time()).collect(),
        length_scales: rescaled.iter().map(|r| r.0).collect(),
        min_consecutive: consecutive.iter().copied().fold(f64::INFINITY, f64::min),
        consecutive,
        min_pairwise,
        weight_power: opts.weight_power,
    })
}

fn trapezoid_weights(xi: &[f64], p: f64) -> Vec<f64> {
    let n = xi.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { xi[i] - xi[i - 1] } else { 0.0 };
            let right = if i + 1 < n { xi[i + 1] - xi[i] } else { 0.0 };
            0.5 * (left + right) * (1.0 + xi[i] * xi[i]).powf(-p)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub run_id: String,
    pub params: ModelParams,
    pub rate_fit: Option<RateFit>,
    pub holder: Option<HolderSummary>,
    pub selfsim: Option<SelfsimReport>,
    pub feasibility: Vec<FeasibilityRow>,
    pub monitors: Vec<MonitorSummary>,
}

/// `HolderReport` without the pair list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderSummary {
    pub s_measured: f64,
    pub s_predicted: f64,
    pub pair_count: usize,
    pub within_slope: f64,
    pub max_quotient: f64,
    pub quotient_trend: f64,
    pub min_implied_exponent: f64,
}

impl From<&HolderReport> for HolderSummary {
    fn from(h: &HolderReport) -> Self {
        Self {
            s_measured: h.s_measured,
            s_predicted: h.s_predicted,
            pair_count: h.pair_count,
            within_slope: h.within_slope,
            max_quotient: h.max_quotient,
            quotient_trend: h.quotient_trend,
            min_implied_exponent: h.min_implied_exponent,
        }
    }
}

impl DiagnosticsReport {
    pub fn new(run_id: impl Into<String>, params: ModelParams) -> Self {
        Self {
            run_id: run_id.into(),
            params,
            rate_fit: None,
            holder: None,
            selfsim: None,
            feasibility: Vec::new(),
            monitors: Vec::new(),
        }
    }

    pub fn monitor(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.monitors.push(MonitorSummary {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.monitors.iter().all(|m| m.pass)
    }

    pub fn failures(&self) -> Vec<&MonitorSummary> {
        self.monitors.iter().filter(|m| !m.pass).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let (s, c, r2) = least_squares(&pts);
        assert!((s + 2.0).abs() < 1e-12 && (c - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_of_power_laws() {
        let inv: Vec<(f64, f64)> = (0..40).map(|i| {
            let t = 10f64.powf(-0.1 * i as f64);
            (t, 5.0 / t)
        }).collect();
        let f = rate_fit(&inv, None).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12 && (f.band_ratio - 1.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = inv.iter().map(|(t, _)| (*t, 2.0)).collect();
        assert!(rate_fit(&flat, None).unwrap().slope.abs() < 1e-12);
        assert!(matches!(rate_fit(&inv[..15], None), Err(CascadeError::Coverage(_))));
    }

    #[test]
    fn predicted_exponent_example() {
        let s = predicted_holder_exponent(2.0, 0.1).unwrap();
        assert!((s - 0.2311).abs() < 5e-4, "{s}");
        assert!(predicted_holder_exponent(2.0, 1e-300).unwrap() < 3e-3);
    }

    #[test]
    fn feasibility_examples() {
        let p = ModelParams::default();
        let rows = selfsim_feasibility(&[0.0, -0.25, 1.0], &p).unwrap();
        assert_eq!(rows[0].cl_inv_sq, -1.0);
        assert_eq!(rows[1].cl_inv_sq, -2.0);
        assert!((rows[2].cl_inv_sq + 1.0 / 3.0).abs() < 1e-15);
        assert!(rows.iter().all(|r| !r.feasible));
        assert!(selfsim_feasibility(&[-0.5], &p).is_err());
    }

    #[test]
    fn frozen_snapshot_has_zero_distance() {
        let snaps: Vec<SelfSimilarFamily> = [1.0, 0.3, 0.1, 0.05]
            .iter()
            .map(|&t| SelfSimilarFamily { t: -t, perturbation: 0.0 })
            .collect();
        let opts = ProbeOptions {
            points_per_decade: 200,
            final_window: 100.0,
            ..Default::default()
        };
        let rep = selfsim_probe(&snaps, &opts).unwrap();
        assert!(rep.min_pairwise < 1e-12, "{}", rep.min_pairwise);
    }
}
