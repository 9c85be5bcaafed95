//! Seed profile, the transport–stretching evolution of the rescaled profiles, and
//! the coupled backward run on `[-T, 0]`.
//!
//! Profile `k` obeys
//! `∂_t W = (2b U/λ_k + ξρ_k) W' + (b S - cρ_k) W`, with `U = ∂HB_n(ξλ_k)`,
//! `S = ∂²HB_n(ξλ_k)` and `ρ_k = ẋ_k/x_k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::BubbleAtlas;
use crate::bootstrap::{bootstrap_monitor, energy_terms_with, hdot_norm, BootstrapReport};
use crate::error::{CascadeError, Result};
use crate::field::{Grid, Interval, Parity, SampledField};
use crate::params::ModelParams;
use crate::singular_integral::{BubbleSet, HilbertEvaluator, InteractionEngine};

/// Largest admissible `max|u| |dt| / h`.
pub const CFL_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedProfile {
    pub field: SampledField,
    pub r: f64,
    /// Sign multiplying `sgn(x)`; `-1` makes `Hφ''(0)` positive.
    pub orientation: f64,
    /// `Hφ''(0)`.
    pub delta0: f64,
}

/// `φ(x) = -sgn(x) exp(-r²/(r² - (|x|-1)²))` on `||x|-1| < r`.
pub fn seed_value(x: f64, r: f64) -> f64 {
    let s = x.abs() - 1.0;
    if s.abs() >= r || x == 0.0 {
        return 0.0;
    }
    -x.signum() * (-(r * r) / (r * r - s * s)).exp()
}

/// Support windows `±[1-2r, 1+2r]`.
pub fn support_windows(r: f64) -> [Interval; 2] {
    [Interval::new(-1.0 - 2.0 * r, -1.0 + 2.0 * r), Interval::new(1.0 - 2.0 * r, 1.0 + 2.0 * r)]
}

/// Reference grid `[-(1+4r), 1+4r)` with `n_points` nodes.
pub fn reference_grid(r: f64, n_points: usize) -> Result<Grid> {
    let g = Grid::symmetric(1.0 + 4.0 * r, n_points)?;
    g.require_power_of_two()?;
    Ok(g)
}

pub fn make_seed_profile(r: f64, n_points: usize) -> Result<SeedProfile> {
    if !(r > 0.0 && r < 0.125) {
        return Err(CascadeError::Config(format!("0 < r < 1/8 violated (r = {r})")));
    }
    if n_points < 64 {
        return Err(CascadeError::Resolution(format!("{n_points} points cannot resolve the seed")));
    }
    let grid = reference_grid(r, n_points)?;
    let support = vec![Interval::new(-1.0 - r, -1.0 + r), Interval::new(1.0 - r, 1.0 + r)];
    let mut field = SampledField::from_fn(grid, support, Parity::Odd, |x| seed_value(x, r))?;
    // Node coordinates are not exactly antisymmetric in floating point; mirror the right half.
    let n = n_points;
    for i in n / 2 + 1..n {
        field.values[n - i] = -field.values[i];
    }
    field.values[n / 2] = 0.0;
    let delta0 = HilbertEvaluator::new(&field, 2)?.kernel_at(0.0, 2);
    if !(delta0 > 0.0) {
        return Err(CascadeError::Construction(format!("Hφ''(0) = {delta0} is not positive")));
    }
    Ok(SeedProfile {
        field,
        r,
        orientation: -1.0,
        delta0,
    })
}

/// Per-bubble coefficient fields for one atlas snapshot.
#[derive(Debug, Clone)]
pub struct Coefficients {
    /// `a_j = H∂²W_j(0)` (without the ODE factor).
    pub couplings: Vec<f64>,
    /// `ẋ_k / x_k`.
    pub rho: Vec<f64>,
    /// `∂HB_n(ξλ_k)` on bubble `k`'s nodes.
    pub u: Vec<Vec<f64>>,
    /// `∂²HB_n(ξλ_k)` on bubble `k`'s nodes.
    pub s: Vec<Vec<f64>>,
}

impl Coefficients {
    /// Transport speed `2bU/λ_k + ξρ_k` on bubble `k`'s nodes.
    pub fn speed(&self, atlas: &BubbleAtlas, k: usize) -> Vec<f64> {
        let grid = atlas.profiles[k].grid;
        let alpha = 2.0 * atlas.params.b / atlas.length_scale(k);
        self.u[k]
            .iter()
            .enumerate()
            .map(|(i, u)| alpha * u + grid.x(i) * self.rho[k])
            .collect()
    }

    /// Stretching coefficient `bS - cρ_k`.
    pub fn stretch(&self, atlas: &BubbleAtlas, k: usize) -> Vec<f64> {
        let b = atlas.params.b;
        let c = atlas.exponents.c;
        self.s[k].iter().map(|s| b * s - c * self.rho[k]).collect()
    }
}

/// `a_j = H∂²W_j(0)` by the regular kernel.
pub fn raw_couplings(atlas: &BubbleAtlas) -> Result<Vec<f64>> {
    atlas
        .profiles
        .iter()
        .enumerate()
        .map(|(j, w)| {
            if w.support_distance(0.0) < w.grid.spacing() || w.in_support(0.0) {
                return Err(CascadeError::Degeneracy(format!("profile {j} support touches 0")));
            }
            Ok(HilbertEvaluator::new(w, 2)?.kernel_at(0.0, 2))
        })
        .collect()
}

pub fn coefficients(atlas: &BubbleAtlas) -> Result<Coefficients> {
    let engine = InteractionEngine::new(atlas, 2)?;
    let couplings: Vec<f64> = (0..atlas.profiles.len())
        .map(|j| engine.evaluator(j).kernel_at(0.0, 2))
        .collect();
    let factor = atlas.params.ode_factor();
    let mut rho = Vec::with_capacity(couplings.len());
    let mut acc = 0.0;
    for (j, a) in couplings.iter().enumerate() {
        rho.push(acc);
        acc += factor * a * atlas.cascade.x[j];
    }
    let fields: Vec<(Vec<f64>, Vec<f64>)> = (0..atlas.profiles.len())
        .into_par_iter()
        .map(|k| {
            let u = engine.field(k, 1, BubbleSet::All)?.values;
            let s = engine.field(k, 2, BubbleSet::All)?.values;
            Ok((u, s))
        })
        .collect::<Result<_>>()?;
    let (u, s) = fields.into_iter().unzip();
    Ok(Coefficients { couplings, rho, u, s })
}

/// Five-point centered first derivative with zeros beyond the grid.
pub fn centered_derivative(w: &[f64], h: f64) -> Vec<f64> {
    let n = w.len() as isize;
    let at = |i: isize| if i < 0 || i >= n { 0.0 } else { w[i as usize] };
    (0..n)
        .map(|i| (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h))
        .collect()
}

/// Third-order upwind-biased first derivative for `∂_t W = speed · ∂W` marched forward.
pub fn upwind_derivative(w: &[f64], speed: &[f64], h: f64) -> Vec<f64> {
    let n = w.len() as isize;
    let at = |i: isize| if i < 0 || i >= n { 0.0 } else { w[i as usize] };
    (0..n)
        .map(|i| {
            // ∂_t W = u ∂W draws data from the side u points to
            if speed[i as usize] <= 0.0 {
                (2.0 * at(i + 1) + 3.0 * at(i) - 6.0 * at(i - 1) + at(i - 2)) / (6.0 * h)
            } else {
                (-at(i + 2) + 6.0 * at(i + 1) - 3.0 * at(i) - 2.0 * at(i - 1)) / (6.0 * h)
            }
        })
        .collect()
}

/// `direction` is the sign of the time step; backward marching flips the upwind side.
fn rhs_values(w: &[f64], h: f64, speed: &[f64], stretch: &[f64], upwind: bool, direction: f64) -> Vec<f64> {
    let d = if upwind {
        let marched: Vec<f64> = speed.iter().map(|s| s * direction).collect();
        upwind_derivative(w, &marched, h)
    } else {
        centered_derivative(w, h)
    };
    (0..w.len()).map(|i| speed[i] * d[i] + stretch[i] * w[i]).collect()
}

/// Zeroes the entries outside the bootstrap windows. Centered stencils otherwise
/// leak roundoff outward, where it meets the much larger coefficients of the next bubble.
fn mask_to_windows(values: &mut [f64], grid: &Grid, r: f64) {
    let windows = support_windows(r);
    for (i, v) in values.iter_mut().enumerate() {
        let x = grid.x(i);
        if !windows.iter().any(|w| w.lo <= x && x <= w.hi) {
            *v = 0.0;
        }
    }
}

/// Right side of the profile equation for `W_k`, with coefficients taken from `atlas`.
pub fn profile_rhs(w_k: &SampledField, atlas: &BubbleAtlas, k: usize, params: &ModelParams) -> Result<SampledField> {
    if k > atlas.n() {
        return Err(CascadeError::Config(format!("bubble index {k} exceeds n = {}", atlas.n())));
    }
    if params.b != atlas.params.b {
        return Err(CascadeError::Config("params disagree with the atlas".into()));
    }
    let coef = coefficients(atlas)?;
    let speed = coef.speed(atlas, k);
    let stretch = coef.stretch(atlas, k);
    let values = rhs_values(&w_k.values, w_k.grid.spacing(), &speed, &stretch, false, 1.0);
    Ok(w_k.with_values(values))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct StepOptions {
    /// Third-order upwind-biased differences instead of centered ones.
    pub upwind: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { upwind: false }
    }
}

/// Endpoint speeds of every bubble's declared support at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointSample {
    pub t: f64,
    /// `speeds[k][e]`, endpoints in declared-support order (`lo, hi` per interval).
    pub speeds: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ProfileStep {
    pub atlas: BubbleAtlas,
    /// Endpoint speeds at the start of the step.
    pub endpoints: EndpointSample,
    /// Largest `max|u| |dt| / h` over bubbles.
    pub cfl: f64,
    /// Bubbles whose support left the `±[1∓2r]` windows.
    pub escaped: Vec<usize>,
}

fn interp_linear(values: &[f64], grid: &Grid, x: f64) -> f64 {
    let s = (x - grid.x_min) / grid.spacing();
    let i = (s.floor() as isize).clamp(0, grid.n_points as isize - 2) as usize;
    let u = s - i as f64;
    values[i] * (1.0 - u) + values[i + 1] * u
}

fn endpoint_speeds(atlas: &BubbleAtlas, speeds: &[Vec<f64>]) -> Vec<Vec<f64>> {
    atlas
        .profiles
        .iter()
        .zip(speeds)
        .map(|(w, sp)| {
            w.support
                .iter()
                .flat_map(|s| [s.lo, s.hi])
                .map(|e| interp_linear(sp, &w.grid, e))
                .collect()
        })
        .collect()
}

fn with_state(atlas: &BubbleAtlas, x: &[f64], ws: &[Vec<f64>]) -> BubbleAtlas {
    let mut out = atlas.clone();
    out.cascade.x = x.to_vec();
    for (p, w) in out.profiles.iter_mut().zip(ws) {
        p.values.clone_from(w);
    }
    out
}

/// Joint RK4 step of the scaling factors and profiles; couplings are recomputed at every stage.
pub fn step_profiles(atlas: &BubbleAtlas, params: &ModelParams, dt: f64, opts: StepOptions) -> Result<ProfileStep> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(CascadeError::Config(format!("step size must be nonzero and finite (dt = {dt})")));
    }
    let n1 = atlas.profiles.len();
    let stage = |x: &[f64], ws: &[Vec<f64>]| -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let a = with_state(atlas, x, ws);
        let coef = coefficients(&a).map_err(|e| match e {
            CascadeError::InvalidField(msg) => CascadeError::Overflow {
                t: atlas.t(),
                msg: format!("stage state became non-finite: {msg}"),
            },
            e => e,
        })?;
        let dx: Vec<f64> = x.iter().zip(&coef.rho).map(|(x, r)| x * r).collect();
        let per: Vec<(Vec<f64>, Vec<f64>)> = (0..n1)
            .into_par_iter()
            .map(|k| {
                let speed = coef.speed(&a, k);
                let stretch = coef.stretch(&a, k);
                let grid = a.profiles[k].grid;
                let mut dw = rhs_values(&ws[k], grid.spacing(), &speed, &stretch, opts.upwind, dt.signum());
                mask_to_windows(&mut dw, &grid, params.r);
                (dw, speed)
            })
            .collect();
        let (dw, speeds) = per.into_iter().unzip();
        Ok((dx, dw, speeds))
    };
    let x0 = atlas.cascade.x.clone();
    let w0: Vec<Vec<f64>> = atlas.profiles.iter().map(|p| p.values.clone()).collect();
    let (k1x, k1w, s1) = stage(&x0, &w0)?;

    let mut cfl: f64 = 0.0;
    for (k, w) in atlas.profiles.iter().enumerate() {
        let h = w.grid.spacing();
        let umax = s1[k]
            .iter()
            .enumerate()
            .filter(|(i, _)| w.in_support(w.grid.x(*i)) || w.values[*i] != 0.0)
            .fold(0.0, |m: f64, (_, u)| m.max(u.abs()));
        cfl = cfl.max(umax * dt.abs() / h);
    }
    if cfl > CFL_LIMIT {
        return Err(CascadeError::Cfl(format!(
            "max|u| |dt| / h = {cfl:.3e} exceeds {CFL_LIMIT} at t = {:e}",
            atlas.t()
        )));
    }

    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let axpy_w = |w: &[Vec<f64>], k: &[Vec<f64>], s: f64| -> Vec<Vec<f64>> {
        w.iter().zip(k).map(|(a, b)| axpy(a, b, s)).collect()
    };
    let (k2x, k2w, s2) = stage(&axpy(&x0, &k1x, 0.5 * dt), &axpy_w(&w0, &k1w, 0.5 * dt))?;
    let (k3x, k3w, s3) = stage(&axpy(&x0, &k2x, 0.5 * dt), &axpy_w(&w0, &k2w, 0.5 * dt))?;
    let (k4x, k4w, s4) = stage(&axpy(&x0, &k3x, dt), &axpy_w(&w0, &k3w, dt))?;

    let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..y.len())
            .map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    let x1 = combine(&x0, &k1x, &k2x, &k3x, &k4x);
    if x1.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(CascadeError::Overflow {
            t: atlas.t() + dt,
            msg: "scaling factor left (0, ∞)".into(),
        });
    }
    let w1: Vec<Vec<f64>> = (0..n1).map(|k| combine(&w0[k], &k1w[k], &k2w[k], &k3w[k], &k4w[k])).collect();

    let e1 = endpoint_speeds(atlas, &s1);
    let e2 = endpoint_speeds(atlas, &s2);
    let e3 = endpoint_speeds(atlas, &s3);
    let e4 = endpoint_speeds(atlas, &s4);
    let mut next = with_state(atlas, &x1, &w1);
    next.cascade.t = atlas.t() + dt;
    let windows = support_windows(params.r);
    let mut escaped = Vec::new();
    for k in 0..n1 {
        let ends = &mut next.profiles[k].support;
        for (idx, s) in ends.iter_mut().enumerate() {
            let v = |e: &[Vec<f64>], j: usize| e[k][2 * idx + j];
            let mv = |j: usize| dt / 6.0 * (v(&e1, j) + 2.0 * v(&e2, j) + 2.0 * v(&e3, j) + v(&e4, j));
            *s = Interval::new(s.lo + mv(0), s.hi + mv(1));
        }
        let inside = ends
            .iter()
            .all(|s| windows.iter().any(|w| w.lo <= s.lo && s.hi <= w.hi));
        if !inside {
            escaped.push(k);
        }
        if next.profiles[k].check_finite().is_err() {
            return Err(CascadeError::Overflow {
                t: next.cascade.t,
                msg: format!("profile {k} became non-finite"),
            });
        }
    }
    let raw = raw_couplings(&next)?;
    next.cascade.a = raw.iter().map(|a| a * params.ode_factor()).collect();
    Ok(ProfileStep {
        atlas: next,
        endpoints: EndpointSample {
            t: atlas.t(),
            speeds: e1,
        },
        cfl,
        escaped,
    })
}

/// Endpoint displacement over a time window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportReport {
    /// Largest displacement per bubble.
    pub displacement: Vec<f64>,
    pub max_displacement: f64,
    pub limit: f64,
    pub pass: bool,
}

/// Integrates endpoint speeds by the trapezoid rule over the samples falling in `window`.
pub fn support_tracker(samples: &[EndpointSample], r: f64, window: (f64, f64)) -> SupportReport {
    let (lo, hi) = (window.0.min(window.1), window.0.max(window.1));
    let mut inside: Vec<&EndpointSample> = samples.iter().filter(|s| s.t >= lo && s.t <= hi).collect();
    inside.sort_by(|a, b| a.t.total_cmp(&b.t));
    let bubbles = inside.first().map(|s| s.speeds.len()).unwrap_or(0);
    let mut displacement = vec![0.0; bubbles];
    for (k, d) in displacement.iter_mut().enumerate() {
        let ends = inside[0].speeds[k].len();
        let mut worst: f64 = 0.0;
        for e in 0..ends {
            let mut acc = 0.0;
            for w in inside.windows(2) {
                acc += 0.5 * (w[1].t - w[0].t) * (w[0].speeds[k][e] + w[1].speeds[k][e]);
            }
            worst = worst.max(acc.abs());
        }
        *d = worst;
    }
    let max_displacement = displacement.iter().fold(0.0, |m: f64, v| m.max(*v));
    SupportReport {
        displacement,
        max_displacement,
        limit: r,
        pass: max_displacement <= r,
    }
}

#[derive(Debug, Clone, PartialEq, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct CoupledOptions {
    /// Steps per run of length `T`.
    pub steps: usize,
    pub upwind: bool,
    /// First trial `T` of the window search.
    pub discovery_start: f64,
    pub bisection_iters: usize,
    /// Evaluate the eight energy terms at every step.
    pub monitor_energy: bool,
}

impl Default for CoupledOptions {
    fn default() -> Self {
        Self {
            steps: 16,
            upwind: false,
            discovery_start: 1e-3,
            bisection_iters: 8,
            monitor_energy: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorSample {
    pub t: f64,
    /// `‖W_k - φ‖_{Ḣ⁴}` per bubble.
    pub hdot4: Vec<f64>,
    /// `E_1..E_8` per bubble (empty when energy monitoring is off).
    pub energies: Vec<[f64; 8]>,
    /// Relative mismatch `|ΣE_i - ∫∂⁴D ∂⁴(rhs)|` per bubble.
    pub energy_closure: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub window: f64,
    /// Atlas after every step, starting with `t = 0`.
    pub atlases: Vec<BubbleAtlas>,
    pub endpoints: Vec<EndpointSample>,
    pub samples: Vec<MonitorSample>,
    pub support: SupportReport,
    /// `(t, bubble)` for every support escape.
    pub escapes: Vec<(f64, usize)>,
    pub final_bootstrap: BootstrapReport,
    pub max_hdot4: f64,
    pub bootstrap_pass: bool,
}

fn monitor(atlas: &BubbleAtlas, seed: &SeedProfile, params: &ModelParams, energy: bool) -> Result<MonitorSample> {
    let boot = bootstrap_monitor(atlas, seed, params.epsilon);
    let hdot4 = boot.bubbles.iter().map(|b| b.hdot4).collect();
    let (mut energies, mut closure) = (Vec::new(), Vec::new());
    if energy {
        let coef = coefficients(atlas)?;
        for k in 0..atlas.profiles.len() {
            let e = energy_terms_with(&atlas.profiles[k], seed, atlas, k, &coef)?;
            energies.push(e.terms);
            closure.push(e.closure_error);
        }
    }
    Ok(MonitorSample {
        t: atlas.t(),
        hdot4,
        energies,
        energy_closure: closure,
    })
}

/// Backward run from the initial atlas to `t = -window` in `opts.steps` equal steps.
pub fn run_coupled(params: &ModelParams, seed: &SeedProfile, window: f64, opts: CoupledOptions) -> Result<CoupledRun> {
    params.validate()?;
    if !(window > 0.0) || opts.steps == 0 {
        return Err(CascadeError::Config("coupled run needs T > 0 and at least one step".into()));
    }
    let dt = -window / opts.steps as f64;
    let mut atlas = BubbleAtlas::initial(params, seed)?;
    let mut atlases = vec![atlas.clone()];
    let mut endpoints = Vec::new();
    let mut samples = vec![monitor(&atlas, seed, params, opts.monitor_energy)?];
    let mut escapes = Vec::new();
    for _ in 0..opts.steps {
        let step = step_profiles(&atlas, params, dt, StepOptions { upwind: opts.upwind })?;
        escapes.extend(step.escaped.iter().map(|k| (step.atlas.t(), *k)));
        endpoints.push(step.endpoints);
        atlas = step.atlas;
        atlas.check_nesting()?;
        samples.push(monitor(&atlas, seed, params, opts.monitor_energy)?);
        atlases.push(atlas.clone());
    }
    // closing speed sample at t = -T
    let coef = coefficients(&atlas)?;
    let speeds: Vec<Vec<f64>> = (0..atlas.profiles.len()).map(|k| coef.speed(&atlas, k)).collect();
    endpoints.push(EndpointSample {
        t: atlas.t(),
        speeds: endpoint_speeds(&atlas, &speeds),
    });
    let support = support_tracker(&endpoints, params.r, (-window, 0.0));
    let final_bootstrap = bootstrap_monitor(&atlas, seed, params.epsilon);
    let max_hdot4 = samples
        .iter()
        .flat_map(|s| s.hdot4.iter())
        .fold(0.0, |m: f64, v| m.max(*v));
    let bootstrap_pass = max_hdot4 <= params.epsilon && escapes.is_empty() && support.pass && final_bootstrap.pass;
    Ok(CoupledRun {
        window,
        atlases,
        endpoints,
        samples,
        support,
        escapes,
        final_bootstrap,
        max_hdot4,
        bootstrap_pass,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSearch {
    pub window: f64,
    /// `(T, bootstrap held)` for every trial, in order.
    pub trials: Vec<(f64, bool)>,
}

/// `max_k ‖∂_t W_k‖_{Ḣ⁴}` at `t = 0`.
pub fn initial_hdot4_rate(params: &ModelParams, seed: &SeedProfile) -> Result<f64> {
    let atlas = BubbleAtlas::initial(params, seed)?;
    let coef = coefficients(&atlas)?;
    let rate = (0..atlas.profiles.len())
        .map(|k| {
            let w = &atlas.profiles[k];
            let mut rhs = rhs_values(&w.values, w.grid.spacing(), &coef.speed(&atlas, k), &coef.stretch(&atlas, k), false, 1.0);
            mask_to_windows(&mut rhs, &w.grid, params.r);
            hdot_norm(&w.with_values(rhs), 4.0)
        })
        .fold(0.0, f64::max);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(CascadeError::Degeneracy(format!("initial Ḣ⁴ rate {rate} is not positive")));
    }
    Ok(rate)
}

/// Starts at `min(opts.discovery_start, 4ε / initial_hdot4_rate)` and halves `T` until the bootstrap holds, then bisects
/// between the last failure and the first success.
pub fn discover_window(params: &ModelParams, seed: &SeedProfile, opts: CoupledOptions) -> Result<WindowSearch> {
    let trial_opts = CoupledOptions {
        monitor_energy: false,
        ..opts
    };
    let mut trials = Vec::new();
    let mut trial = |t: f64| -> Result<bool> {
        let ok = match run_coupled(params, seed, t, trial_opts) {
            Ok(run) => run.bootstrap_pass,
            Err(
                CascadeError::Cfl(_)
                | CascadeError::Degeneracy(_)
                | CascadeError::Overflow { .. }
                | CascadeError::Extrapolation(_)
                | CascadeError::Resolution(_),
            ) => false,
            Err(e) => return Err(e),
        };
        log::debug!("window trial T = {t:e}: {}", if ok { "holds" } else { "fails" });
        trials.push((t, ok));
        Ok(ok)
    };
    let mut t = opts.discovery_start.min(4.0 * params.epsilon / initial_hdot4_rate(params, seed)?);
    let mut failed = None;
    while !trial(t)? {
        failed = Some(t);
        t *= 0.5;
        if t < 1e-30 {
            return Err(CascadeError::Resolution("no window down to T = 1e-30 keeps the bootstrap".into()));
        }
    }
    let mut lo = t;
    if let Some(mut hi) = failed {
        for _ in 0..opts.bisection_iters {
            let mid = 0.5 * (lo + hi);
            if trial(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(WindowSearch { window: lo, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_shape() {
        let s = make_seed_profile(0.05, 512).unwrap();
        assert_eq!(seed_value(0.0, 0.05), 0.0);
        assert_eq!(seed_value(1.0, 0.05), -(-1.0f64).exp());
        assert_eq!(seed_value(-1.0, 0.05), (-1.0f64).exp());
        assert!(s.field.parity_defect(Parity::Odd) == 0.0);
        assert!(s.delta0 > 0.0);
        assert_eq!(s.field.leakage(), 0.0);
    }

    #[test]
    fn seed_rejects_bad_r() {
        assert!(make_seed_profile(0.2, 512).is_err());
        assert!(make_seed_profile(0.05, 500).is_err());
    }

    #[test]
    fn tracker_constant_speed() {
        let samples: Vec<EndpointSample> = (0..=10)
            .map(|i| EndpointSample {
                t: -0.1 * i as f64,
                speeds: vec![vec![0.3, -0.3, 0.0, 0.0]],
            })
            .collect();
        let rep = support_tracker(&samples, 0.5, (-1.0, 0.0));
        assert!((rep.max_displacement - 0.3).abs() < 1e-14);
        assert!(rep.pass);
        let still: Vec<EndpointSample> = samples
            .iter()
            .map(|s| EndpointSample {
                t: s.t,
                speeds: vec![vec![0.0; 4]],
            })
            .collect();
        assert_eq!(support_tracker(&still, 0.5, (-1.0, 0.0)).max_displacement, 0.0);
    }

    #[test]
    fn derivative_stencils_are_exact_on_cubics() {
        let h = 0.1;
        let w: Vec<f64> = (0..20).map(|i| (i as f64 * h).powi(3)).collect();
        let d = centered_derivative(&w, h);
        let u = upwind_derivative(&w, &vec![1.0; 20], h);
        for i in 3..17 {
            let x = i as f64 * h;
            assert!((d[i] - 3.0 * x * x).abs() < 1e-10);
            assert!((u[i] - 3.0 * x * x).abs() < 1e-10);
        }
    }
}
