//! The triangular scaling-factor system `ẋ_k = x_k Σ_{j<k} a_j x_j`, its root
//! equation, and the checks on its trajectories.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::assembly::BubbleAtlas;
use crate::error::{CascadeError, Result};
use crate::params::CascadeParams;
use crate::profile::raw_couplings;

/// Smallest step magnitude before the integrator gives up.
pub const MIN_STEP: f64 = 1e-15;
/// Relative local-error tolerance of the step-doubling estimate.
pub const LOCAL_TOLERANCE: f64 = 1e-3;

/// `a_j = H∂²W_j(0)` for every bubble, by the far-field kernel.
///
/// Fails with a degeneracy error when a profile's support reaches 0.
pub fn coupling_coefficients(atlas: &BubbleAtlas) -> Result<Vec<f64>> {
    raw_couplings(atlas)
}

/// Positive root of `a = A(1 - e^{-a})` for `A > 1`.
pub fn solve_root(amp: f64) -> Result<f64> {
    if !(amp > 1.0) || !amp.is_finite() {
        return Err(CascadeError::Regime(format!(
            "a = A(1-e^(-a)) has no positive root for A = {amp}; only A > 1 is supported \
             (the A < 1 regime is inconsistent with ln A < a < 2(A-1))"
        )));
    }
    let g = |a: f64| amp * (-(-a).exp_m1()) - a;
    // g is concave with g(0) = 0, g'(0) = A - 1 > 0; (A-1)/A <= ln A < root.
    let mut lo = (amp - 1.0) / amp;
    let mut hi = 2.0 * amp;
    debug_assert!(g(lo) > 0.0 && g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = amp * (-a).exp() - 1.0;
        if d == 0.0 {
            break;
        }
        let next = a - g(a) / d;
        if next > lo * 0.5 && next < hi * 2.0 {
            a = next;
        }
    }
    Ok(a)
}

/// Residual `|A(1-e^{-a}) - a|`.
pub fn root_residual(amp: f64, a: f64) -> f64 {
    (amp * (-(-a).exp_m1()) - a).abs()
}

/// Scaling factors, time, and the couplings in force at that time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeState {
    pub t: f64,
    pub x: Vec<f64>,
    /// Effective couplings `a_j`, already including any model-coefficient factor.
    pub a: Vec<f64>,
}

impl CascadeState {
    /// `x_k(0) = A^k`.
    pub fn initial(params: &CascadeParams, couplings: Vec<f64>) -> Self {
        let x = (0..=params.n).map(|k| params.amp.powi(k as i32)).collect();
        Self { t: 0.0, x, a: couplings }
    }

    pub fn n(&self) -> usize {
        self.x.len() - 1
    }

    /// `ẋ_k / x_k = Σ_{j<k} a_j x_j`.
    pub fn log_rates(&self) -> Vec<f64> {
        log_rates(&self.x, &self.a)
    }

    pub fn rates(&self) -> Vec<f64> {
        self.log_rates().iter().zip(&self.x).map(|(r, x)| r * x).collect()
    }

    pub fn sup_x(&self) -> f64 {
        self.x.iter().fold(0.0, |m: f64, v| m.max(*v))
    }
}

fn log_rates(x: &[f64], a: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for k in 0..x.len() {
        out.push(acc);
        acc += a.get(k).copied().unwrap_or(0.0) * x[k];
    }
    out
}

fn rhs(x: &[f64], a: &[f64]) -> Vec<f64> {
    log_rates(x, a).iter().zip(x).map(|(r, x)| r * x).collect()
}

fn rk4(x: &[f64], a: &[f64], dt: f64) -> Vec<f64> {
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + s * k).collect() };
    let k1 = rhs(x, a);
    let k2 = rhs(&axpy(x, &k1, 0.5 * dt), a);
    let k3 = rhs(&axpy(x, &k2, 0.5 * dt), a);
    let k4 = rhs(&axpy(x, &k3, dt), a);
    x.iter()
        .enumerate()
        .map(|(i, x)| x + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: CascadeState,
    /// Step actually taken (may be a halving of the request).
    pub dt: f64,
    pub rejections: usize,
}

/// One RK4 step with frozen couplings; the step is halved until positivity
/// holds and the step-doubling error estimate is below [`LOCAL_TOLERANCE`].
pub fn step_cascade(state: &CascadeState, params: &CascadeParams, dt: f64, couplings: &[f64]) -> Result<StepOutcome> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(CascadeError::Config(format!("step size must be nonzero and finite (dt = {dt})")));
    }
    if couplings.iter().any(|a| !a.is_finite()) {
        return Err(CascadeError::InvalidField("non-finite coupling".into()));
    }
    if state.x.len() != params.n + 1 {
        return Err(CascadeError::Config(format!(
            "state holds {} factors but n = {}",
            state.x.len(),
            params.n
        )));
    }
    let mut h = dt;
    let mut rejections = 0;
    loop {
        if h.abs() < MIN_STEP {
            return Err(CascadeError::Stiffness { t: state.t, dt: h });
        }
        let full = rk4(&state.x, couplings, h);
        let half = rk4(&state.x, couplings, 0.5 * h);
        let two = rk4(&half, couplings, 0.5 * h);
        let positive = two.iter().chain(&full).all(|v| *v > 0.0 && v.is_finite());
        let err = full
            .iter()
            .zip(&two)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        if positive && err <= LOCAL_TOLERANCE {
            return Ok(StepOutcome {
                state: CascadeState {
                    t: state.t + h,
                    x: two,
                    a: couplings.to_vec(),
                },
                dt: h,
                rejections,
            });
        }
        h *= 0.5;
        rejections += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationOptions {
    /// Target `|dt| · max_k |ẋ_k/x_k|` per step.
    pub safety: f64,
    pub dt_max: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            safety: 0.02,
            dt_max: 1e-2,
        }
    }
}

/// Time series of cascade states, one per accepted step.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<CascadeState>,
}

impl Trajectory {
    pub fn new(states: Vec<CascadeState>) -> Self {
        Self { states }
    }

    pub fn last(&self) -> &CascadeState {
        self.states.last().expect("empty trajectory")
    }

    /// States sorted by increasing time.
    pub fn chronological(&self) -> Vec<&CascadeState> {
        let mut v: Vec<&CascadeState> = self.states.iter().collect();
        v.sort_by(|a, b| a.t.total_cmp(&b.t));
        v
    }

    pub fn t_min(&self) -> f64 {
        self.states.iter().map(|s| s.t).fold(f64::INFINITY, f64::min)
    }

    pub fn t_max(&self) -> f64 {
        self.states.iter().map(|s| s.t).fold(f64::NEG_INFINITY, f64::max)
    }

    /// State nearest each of `count` log-uniform targets in `|t|` over `[t_lo, t_hi]` (magnitudes).
    pub fn log_checkpoints(&self, abs_lo: f64, abs_hi: f64, count: usize) -> Vec<CascadeState> {
        let mut out: Vec<CascadeState> = Vec::with_capacity(count);
        if count == 0 || self.states.is_empty() {
            return out;
        }
        for i in 0..count {
            let frac = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            let target = (abs_lo.ln() + frac * (abs_hi.ln() - abs_lo.ln())).exp();
            let best = self
                .states
                .iter()
                .filter(|s| s.t < 0.0)
                .min_by(|a, b| {
                    let da = (a.t.abs().ln() - target.ln()).abs();
                    let db = (b.t.abs().ln() - target.ln()).abs();
                    da.total_cmp(&db)
                });
            if let Some(s) = best {
                if out.last().map(|l| l.t) != Some(s.t) {
                    out.push(s.clone());
                }
            }
        }
        out
    }

    /// CSV with columns `t, x_0..x_n, a_0..a_n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let Some(first) = self.states.first() else {
            return Ok(());
        };
        let n = first.x.len();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|k| format!("x_{k}")));
        header.extend((0..n).map(|k| format!("a_{k}")));
        writeln!(w, "{}", header.join(","))?;
        for s in &self.states {
            let mut row = vec![format!("{:e}", s.t)];
            row.extend(s.x.iter().map(|v| format!("{v:e}")));
            row.extend((0..n).map(|k| format!("{:e}", s.a.get(k).copied().unwrap_or(0.0))));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Integrates from `state.t` to `t_end` with constant couplings, storing every accepted step.
pub fn integrate_cascade(
    initial: CascadeState,
    params: &CascadeParams,
    t_end: f64,
    opts: IntegrationOptions,
) -> Result<Trajectory> {
    let couplings = initial.a.clone();
    let dir = (t_end - initial.t).signum();
    let mut states = vec![initial];
    loop {
        let cur = states.last().unwrap();
        let remaining = t_end - cur.t;
        if remaining.abs() <= 1e-14 * t_end.abs().max(1e-300) || remaining * dir <= 0.0 {
            break;
        }
        let rate = cur.log_rates().iter().fold(0.0, |m: f64, r| m.max(r.abs()));
        let mut dt = opts.dt_max;
        if rate > 0.0 {
            dt = dt.min(opts.safety / rate);
        }
        let dt = dir * dt.min(remaining.abs());
        let out = step_cascade(cur, params, dt, &couplings)?;
        let mut next = out.state;
        if (t_end - next.t) * dir < 0.0 {
            next.t = t_end;
        }
        states.push(next);
    }
    Ok(Trajectory::new(states))
}

/// Outcome of the integral sandwich around `∫_{-a}^0 x_n dt`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralBoundReport {
    pub root: f64,
    pub integral: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    /// `a / δ_min`.
    pub upper_bound: f64,
    /// `a / δ_max`, the reversed inequality.
    pub lower_bound: f64,
    pub upper_pass: bool,
    pub lower_pass: bool,
    pub relative_slack: f64,
}

impl IntegralBoundReport {
    pub fn pass(&self) -> bool {
        self.upper_pass && self.lower_pass
    }
}

/// Cubic Hermite integral of `x_n` between two stored states over `[lo, hi] ⊂ [t0, t1]`.
fn hermite_segment(t0: f64, f0: f64, d0: f64, t1: f64, f1: f64, d1: f64, lo: f64, hi: f64) -> f64 {
    let h = t1 - t0;
    let eval = |t: f64| {
        let s = (t - t0) / h;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
    };
    // Gauss–Legendre, exact for cubics.
    let nodes = [-(3.0f64 / 5.0).sqrt(), 0.0, (3.0f64 / 5.0).sqrt()];
    let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    nodes.iter().zip(weights).map(|(x, w)| w * eval(m + r * x)).sum::<f64>() * r
}

/// `∫_{-a}^0 x_n dt` against `a/δ_min` (upper) and `a/δ_max` (reversed).
pub fn verify_integral_bound(traj: &Trajectory, params: &CascadeParams, relative_slack: f64) -> Result<IntegralBoundReport> {
    let root = solve_root(params.amp)?;
    let states = traj.chronological();
    if states.is_empty() || states[0].t > -root + 1e-12 * root || states.last().unwrap().t < -1e-14 {
        return Err(CascadeError::Coverage(format!(
            "need [-a, 0] = [{:.6}, 0], have [{:.6}, {:.6}]",
            -root,
            traj.t_min(),
            traj.t_max()
        )));
    }
    let n = states[0].x.len() - 1;
    let mut integral = 0.0;
    let mut dmin = f64::INFINITY;
    let mut dmax = f64::NEG_INFINITY;
    for w in states.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1.t <= -root || s1.t == s0.t {
            continue;
        }
        let lo = s0.t.max(-root);
        let hi = s1.t.min(0.0);
        if hi <= lo {
            continue;
        }
        let d0 = s0.log_rates()[n] * s0.x[n];
        let d1 = s1.log_rates()[n] * s1.x[n];
        integral += hermite_segment(s0.t, s0.x[n], d0, s1.t, s1.x[n], d1, lo, hi);
    }
    for s in states.iter().filter(|s| s.t >= -root) {
        for a in s.a.iter().take(n) {
            dmin = dmin.min(*a);
            dmax = dmax.max(*a);
        }
    }
    if !dmin.is_finite() {
        dmin = params.delta;
        dmax = params.delta;
    }
    let upper = root / dmin;
    let lower = root / dmax;
    Ok(IntegralBoundReport {
        root,
        integral,
        delta_min: dmin,
        delta_max: dmax,
        upper_bound: upper,
        lower_bound: lower,
        upper_pass: integral <= upper * (1.0 + relative_slack),
        lower_pass: integral >= lower * (1.0 - relative_slack),
        relative_slack,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    /// Largest relative decrease of `x_{n'}/x_{k'}` between consecutive stored times.
    pub worst_violation: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub worst_time: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that `x_{n'}/x_{k'}` is nondecreasing in time for every `n' > k'`.
pub fn ratio_monotonicity(traj: &Trajectory) -> RatioReport {
    ratio_monotonicity_with(traj, 1e-10)
}

pub fn ratio_monotonicity_with(traj: &Trajectory, tolerance: f64) -> RatioReport {
    let states = traj.chronological();
    let mut worst = 0.0;
    let mut pair = None;
    let mut time = None;
    for w in states.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1.t == s0.t {
            continue;
        }
        let l0: Vec<f64> = s0.x.iter().map(|v| v.ln()).collect();
        let l1: Vec<f64> = s1.x.iter().map(|v| v.ln()).collect();
        for hi in 1..l0.len() {
            for lo in 0..hi {
                let drop = (l0[hi] - l0[lo]) - (l1[hi] - l1[lo]);
                // relative decrease of the ratio
                let rel = -(-drop).exp_m1();
                if rel > worst {
                    worst = rel;
                    pair = Some((hi, lo));
                    time = Some(s1.t);
                }
            }
        }
    }
    RatioReport {
        worst_violation: worst,
        worst_pair: pair,
        worst_time: time,
        tolerance,
        pass: worst <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::profile::{make_seed_profile, seed_value};

    #[test]
    fn couplings_of_the_seed_atlas() {
        let params = ModelParams { n: 4, ..ModelParams::default() };
        let seed = make_seed_profile(params.r, 512).unwrap();
        let atlas = BubbleAtlas::initial(&params, &seed).unwrap();
        let a = coupling_coefficients(&atlas).unwrap();
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|v| *v == a[0]));
        assert!((a[0] - seed.delta0).abs() <= 1e-14 * seed.delta0);
        // (2/π)∫φ(y)/(-y)³ dy by a fine trapezoid; the integrand is even
        let r = params.r;
        let m = 200_000;
        let h = 2.0 * r / m as f64;
        let sum: f64 = (0..=m)
            .map(|i| {
                let y = 1.0 - r + i as f64 * h;
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                w * seed_value(y, r) / -(y * y * y)
            })
            .sum();
        let oracle = 2.0 * 2.0 / std::f64::consts::PI * sum * h;
        // 512 nodes put about 21 samples across the bump
        assert!((seed.delta0 - oracle).abs() <= 1e-4 * oracle);
        let fine = make_seed_profile(r, 4096).unwrap().delta0;
        assert!((fine - oracle).abs() <= 1e-10 * oracle, "{fine} vs {oracle}");
    }

    fn bisect_root(amp: f64) -> f64 {
        let g = |a: f64| amp * (1.0 - (-a).exp()) - a;
        let (mut lo, mut hi) = (1e-9, 2.0 * amp);
        for _ in 0..300 {
            let m = 0.5 * (lo + hi);
            if g(m) > 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn root_examples() {
        let a = solve_root(2.0).unwrap();
        assert!((a - bisect_root(2.0)).abs() < 1e-12);
        assert!((a - 1.5936).abs() < 1e-4);
        assert!(2f64.ln() < a && a < 2.0);
        let a = solve_root(1.5).unwrap();
        assert!((a - bisect_root(1.5)).abs() < 1e-12);
        assert!((a - 0.874).abs() < 1e-3);
        assert!(1.5f64.ln() < a && a < 1.0);
    }

    #[test]
    fn root_vanishes_as_amp_approaches_one() {
        let mut prev = f64::INFINITY;
        for e in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
            let a = solve_root(1.0 + e).unwrap();
            assert!(a > 0.0 && a < prev);
            assert!(root_residual(1.0 + e, a) <= 1e-12);
            prev = a;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn root_regime_error() {
        assert!(matches!(solve_root(1.0), Err(CascadeError::Regime(_))));
        assert!(matches!(solve_root(0.7), Err(CascadeError::Regime(_))));
    }

    fn params(n: usize) -> CascadeParams {
        CascadeParams {
            amp: 2.0,
            r: 0.05,
            n,
            delta: 1.0,
            b: 1.0,
        }
    }

    #[test]
    fn single_bubble_is_frozen() {
        let p = params(0);
        let s = CascadeState::initial(&p, vec![1.0]);
        let traj = integrate_cascade(s, &p, -2.0, IntegrationOptions::default()).unwrap();
        assert!(traj.states.iter().all(|s| s.x[0] == 1.0));
    }

    #[test]
    fn two_bubbles_match_exponential() {
        let p = params(1);
        let delta = 0.7;
        let s = CascadeState::initial(&p, vec![delta, delta]);
        let traj = integrate_cascade(s, &p, -1.5, IntegrationOptions::default()).unwrap();
        for s in &traj.states {
            let exact = 2.0 * (delta * s.t).exp();
            assert!((s.x[1] - exact).abs() <= 1e-9 * exact);
        }
    }

    #[test]
    fn step_rejects_zero_and_reports_underflow() {
        let p = params(1);
        let s = CascadeState::initial(&p, vec![1.0, 1.0]);
        assert!(step_cascade(&s, &p, 0.0, &[1.0, 1.0]).is_err());
        let huge = CascadeState {
            t: 0.0,
            x: vec![1.0, 1.0],
            a: vec![1e300, 0.0],
        };
        assert!(matches!(
            step_cascade(&huge, &p, -1.0, &[1e300, 0.0]),
            Err(CascadeError::Stiffness { .. })
        ));
    }

    #[test]
    fn step_halves_on_large_error() {
        let p = params(2);
        let s = CascadeState::initial(&p, vec![1.0; 3]);
        let out = step_cascade(&s, &p, -1.0, &[1.0; 3]).unwrap();
        assert!(out.rejections > 0);
        assert!(out.dt > -1.0);
    }

    #[test]
    fn ratio_check_flags_negative_couplings() {
        let p = params(3);
        let s = CascadeState::initial(&p, vec![-0.5; 4]);
        let traj = integrate_cascade(s, &p, -1.0, IntegrationOptions::default()).unwrap();
        let rep = ratio_monotonicity(&traj);
        assert!(!rep.pass);
        assert!(rep.worst_violation > 1e-3);
    }

    #[test]
    fn trajectory_csv_header() {
        let p = params(1);
        let s = CascadeState::initial(&p, vec![1.0, 1.0]);
        let traj = integrate_cascade(s, &p, -0.1, IntegrationOptions::default()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x_0,x_1,a_0,a_1\n"));
    }
}
