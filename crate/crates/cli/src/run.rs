//! Mode execution and artifact emission.

use std::f64::consts::PI;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use log::debug;
use serde::Serialize;

use emhd_cascade::assembly::tail_report;
use emhd_cascade::bootstrap::{energy_ratio_stability, gronwall_fit};
use emhd_cascade::cascade_ode::{
    integrate_cascade, ratio_monotonicity, root_residual, solve_root, verify_integral_bound, CascadeState,
};
use emhd_cascade::diagnostics::{
    cascade_rate_fit, holder_estimate, predicted_holder_exponent, selfsim_feasibility, selfsim_probe,
    DiagnosticsReport, HolderSummary,
};
use emhd_cascade::direct_solver::{crosscheck, embed_atlas, integrate};
use emhd_cascade::profile::{discover_window, make_seed_profile, run_coupled, SeedProfile};
use emhd_cascade::singular_integral::{hilbert_derivative_at, hilbert_periodic};
use emhd_cascade::{
    BubbleAtlas, CascadeError, Grid, Interval, ModelParams, Parity, Result, SampledField, SpectralState, Trajectory,
};

use crate::config::{Mode, RunConfig};
use crate::plot::{line_plot, Axes, Series};
use crate::report::{run_id, Manifest, MANIFEST};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    Io = 1,
    MonitorFailure = 2,
    ConfigError = 3,
    NumericalBreakdown = 4,
}

impl Exit {
    pub fn of_error(e: &CascadeError) -> Self {
        match e {
            CascadeError::Config(_) | CascadeError::Regime(_) | CascadeError::Domain(_) | CascadeError::Schema(_) => {
                Exit::ConfigError
            }
            CascadeError::Io(_) | CascadeError::Json(_) => Exit::Io,
            _ => Exit::NumericalBreakdown,
        }
    }

    fn status(self) -> &'static str {
        match self {
            Exit::Pass => "pass",
            Exit::Io => "io-error",
            Exit::MonitorFailure => "monitor-failure",
            Exit::ConfigError => "config-error",
            Exit::NumericalBreakdown => "numerical-breakdown",
        }
    }
}

pub struct RunOutcome {
    pub exit: Exit,
    pub manifest: Manifest,
    pub report: Option<DiagnosticsReport>,
    /// Human-readable result lines for the terminal.
    pub summary: Vec<String>,
}

struct Ctx {
    dir: PathBuf,
    plots: bool,
    artifacts: Vec<String>,
    summary: Vec<String>,
}

impl Ctx {
    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.artifacts.push(name.to_string());
        Ok(p)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name)?;
        serde_json::to_writer_pretty(BufWriter::new(fs::File::create(p)?), value)?;
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name)?;
        fs::write(p, body)?;
        Ok(())
    }

    fn field(&mut self, name: &str, f: &SampledField) -> Result<()> {
        let p = self.path(name)?;
        f.write_csv(BufWriter::new(fs::File::create(p)?))
    }

    fn trajectory(&mut self, name: &str, traj: &Trajectory) -> Result<()> {
        let p = self.path(name)?;
        traj.write_csv(BufWriter::new(fs::File::create(p)?))
    }

    fn checkpoint(&mut self, name: &str, atlas: &BubbleAtlas) -> Result<()> {
        atlas.write_checkpoint(&self.dir.join(name))?;
        self.artifacts.push(format!("{name}/atlas.json"));
        self.artifacts.extend((0..atlas.profiles.len()).map(|k| format!("{name}/bubble_{k:03}.csv")));
        Ok(())
    }

    fn plot(&mut self, name: &str, title: &str, labels: (&str, &str), axes: Axes, series: &[Series]) -> Result<()> {
        if !self.plots {
            return Ok(());
        }
        let svg = line_plot(title, labels.0, labels.1, axes, series);
        self.text(name, &svg)
    }

    fn say(&mut self, line: impl Into<String>) {
        let line = line.into();
        debug!("{line}");
        self.summary.push(line);
    }
}

/// Runs the configured mode, writes every artifact and the manifest, and maps the outcome to an exit status.
pub fn run(config: &RunConfig) -> RunOutcome {
    let start = Instant::now();
    let mut ctx = Ctx {
        dir: config.output.dir.clone(),
        plots: config.output.plots,
        artifacts: Vec::new(),
        summary: Vec::new(),
    };
    let id = run_id(config);
    let result = config
        .validate()
        .and_then(|_| fs::create_dir_all(&ctx.dir).map_err(Into::into))
        .and_then(|_| {
            let mut report = DiagnosticsReport::new(id.clone(), config.params.clone());
            execute(config, &mut ctx, &mut report)?;
            ctx.json("diagnostics.json", &report)?;
            Ok(report)
        });
    let (exit, report, error) = match result {
        Ok(r) if r.all_pass() => (Exit::Pass, Some(r), None),
        Ok(r) => (Exit::MonitorFailure, Some(r), None),
        Err(e) => (Exit::of_error(&e), None, Some(e.to_string())),
    };
    let manifest = Manifest {
        run_id: id,
        mode: config.mode,
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        exit_code: exit as i32,
        status: exit.status().to_string(),
        artifacts: ctx.artifacts.clone(),
        failures: report.as_ref().map(|r| r.failures().into_iter().cloned().collect()).unwrap_or_default(),
        error,
    };
    let mut exit = exit;
    if ctx.dir.is_dir() {
        let written = serde_json::to_string_pretty(&manifest)
            .map_err(CascadeError::from)
            .and_then(|s| fs::write(ctx.dir.join(MANIFEST), s).map_err(Into::into));
        if written.is_err() && exit == Exit::Pass {
            exit = Exit::Io;
        }
    }
    RunOutcome {
        exit,
        manifest,
        report,
        summary: ctx.summary,
    }
}

fn execute(config: &RunConfig, ctx: &mut Ctx, report: &mut DiagnosticsReport) -> Result<()> {
    match config.mode {
        Mode::Root => root_mode(config, ctx, report),
        Mode::HilbertSelftest => hilbert_mode(ctx, report),
        Mode::Cascade => cascade_mode(config, ctx, report),
        Mode::Diagnose => diagnose_mode(config, ctx, report),
        Mode::Direct => direct_mode(config, ctx, report),
        Mode::Crosscheck => crosscheck_mode(config, ctx, report),
    }
}

#[derive(Serialize)]
struct RootResult {
    amp: f64,
    root: f64,
    residual: f64,
    lower: f64,
    upper: f64,
    holder_exponent: f64,
}

fn root_mode(config: &RunConfig, ctx: &mut Ctx, report: &mut DiagnosticsReport) -> Result<()> {
    let amp = config.params.amp;
    let a = solve_root(amp)?;
    let res = RootResult {
        amp,
        root: a,
        residual: root_residual(amp, a),
        lower: amp.ln(),
        upper: 2.0 * (amp - 1.0),
        holder_exponent: predicted_holder_exponent(amp, config.params.r)?,
    };
    ctx.say(format!("a = {:.12} for A = {amp}", a));
    ctx.say(format!("ln A = {:.6} < a < 2(A-1) = {:.6}", res.lower, res.upper));
    report.monitor("root_residual", res.residual <= 1e-12, format!("|a - A(1-e^-a)| = {:.1e}", res.residual));
    report.monitor(
        "root_bounds",
        res.lower < a && a < res.upper,
        format!("{:.6} < {a:.6} < {:.6}", res.lower, res.upper),
    );
    ctx.json("root.json", &res)
}

#[derive(Serialize)]
struct SelftestResult {
    cos_to_sin: f64,
    sin_to_minus_cos: f64,
    lorentzian: f64,
    involution: f64,
    far_field: f64,
}

fn hilbert_mode(ctx: &mut Ctx, report: &mut DiagnosticsReport) -> Result<()> {
    let n = 4096;
    let g = Grid::new(0.0, 2.0 * PI, n)?;
    let err = |f: &SampledField, exact: &dyn Fn(f64) -> f64| -> Result<f64> {
        let h = hilbert_periodic(f)?;
        let scale = (0..n).fold(0.0f64, |m, i| m.max(exact(g.x(i)).abs()));
        Ok((0..n).fold(0.0f64, |m, i| m.max((h.values[i] - exact(h.grid.x(i))).abs())) / scale)
    };
    let cos_to_sin = err(&SampledField::from_fn(g, vec![], Parity::None, f64::cos)?, &f64::sin)?;
    let sin_to_minus_cos = err(&SampledField::from_fn(g, vec![], Parity::None, f64::sin)?, &|x| -x.cos())?;

    // 1/(1+x²) summed over the period 64 lattice, and its conjugate
    let l = 64.0;
    let gl = Grid::new(-0.5 * l, 0.5 * l, n)?;
    let q = 2.0 * PI / l;
    let den = move |x: f64| q.cosh() - (q * x).cos();
    let lor = SampledField::from_fn(gl, vec![], Parity::None, |x| PI / l * q.sinh() / den(x))?;
    let hl = hilbert_periodic(&lor)?;
    let exact: Vec<f64> = gl.points().iter().map(|&x| PI / l * (q * x).sin() / den(x)).collect();
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lorentzian = (0..n).fold(0.0f64, |m, i| m.max((hl.values[i] - exact[i]).abs())) / scale;

    let mixed = |x: f64| (1..=64).map(|j| ((j * j) as f64 * 0.37 + j as f64 * x).cos() / j as f64).sum::<f64>();
    let u = SampledField::from_fn(g, vec![], Parity::None, mixed)?;
    let hhu = hilbert_periodic(&hilbert_periodic(&u)?)?;
    let involution = (0..n).fold(0.0f64, |m, i| m.max((hhu.values[i] + u.values[i]).abs())) / u.max_abs();

    let w = 1e-3;
    let gp = Grid::new(1.0 - 12.0 * w, 1.0 + 12.0 * w, 4096)?;
    let bump = SampledField::from_fn(gp, vec![Interval::new(gp.x_min, gp.x_max)], Parity::None, |y| {
        (-(y - 1.0).powi(2) / (2.0 * w * w)).exp() / (w * (2.0 * PI).sqrt())
    })?;
    let far_field = (hilbert_derivative_at(&bump, 0.0, 2)? + 2.0 / PI).abs();

    let res = SelftestResult {
        cos_to_sin,
        sin_to_minus_cos,
        lorentzian,
        involution,
        far_field,
    };
    report.monitor("cos_to_sin", cos_to_sin <= 1e-6, format!("{cos_to_sin:.1e}"));
    report.monitor("sin_to_minus_cos", sin_to_minus_cos <= 1e-6, format!("{sin_to_minus_cos:.1e}"));
    report.monitor("lorentzian", lorentzian <= 1e-6, format!("{lorentzian:.1e}"));
    report.monitor("involution", involution <= 1e-8, format!("{involution:.1e}"));
    report.monitor("far_field", far_field <= 1e-3, format!("{far_field:.1e}"));
    ctx.say(format!(
        "relative errors: cos {cos_to_sin:.1e}, sin {sin_to_minus_cos:.1e}, lorentzian {lorentzian:.1e}, H∘H {involution:.1e}, far field {far_field:.1e}"
    ));
    ctx.json("hilbert.json", &res)
}

fn ode_params(config: &RunConfig) -> ModelParams {
    config.params.with_n(config.numerics.ode_bubbles)
}

fn ode_trajectory(config: &RunConfig) -> Result<Trajectory> {
    let p = ode_params(config);
    let cp = p.cascade();
    let init = CascadeState::initial(&cp, vec![cp.delta; p.n + 1]);
    integrate_cascade(init, &cp, -config.numerics.ode_window, config.numerics.integration)
}

fn seed(config: &RunConfig) -> Result<SeedProfile> {
    make_seed_profile(config.params.r, config.numerics.points_per_bubble)
}

fn frozen(p: &ModelParams, state: &CascadeState, seed: &SeedProfile) -> Result<BubbleAtlas> {
    BubbleAtlas::new(p.clone(), state.clone(), vec![seed.field.clone(); p.n + 1])
}

/// Samples the assembled field over the support of bubble 0.
fn assembled_field(atlas: &BubbleAtlas, points: usize) -> Result<SampledField> {
    let reach = atlas.physical_support(0).iter().fold(0.0f64, |m, s| m.max(s.lo.abs()).max(s.hi.abs()));
    let grid = Grid::symmetric(1.05 * reach, points)?;
    let values = atlas.evaluate(&grid.points(), 0)?;
    SampledField::new(grid, values, atlas.physical_support(0), Parity::Odd)
}

fn ode_monitors(config: &RunConfig, traj: &Trajectory, ctx: &mut Ctx, report: &mut DiagnosticsReport) -> Result<()> {
    let cp = ode_params(config).cascade();
    let ratio = ratio_monotonicity(traj);
    report.monitor(
        "ratio_monotonicity",
        ratio.pass,
        format!("worst violation {:.1e}", ratio.worst_violation),
    );
    let bound = verify_integral_bound(traj, &cp, 1e-6)?;
    report.monitor(
        "integral_bound",
        bound.pass(),
        format!("∫x_n = {:.10} against a/δ = {:.10}", bound.integral, bound.upper_bound),
    );
    let fit = cascade_rate_fit(traj, config.numerics.fit_window)?;
    report.monitor(
        "blowup_rate",
        (fit.slope + 1.0).abs() <= 0.05 && fit.band_ratio <= 10.0,
        format!("slope {:.4}, band ratio {:.3}", fit.slope, fit.band_ratio),
    );
    ctx.say(format!("rate fit: slope {:.4} (r² {:.6}), band ratio {:.3}", fit.slope, fit.r2, fit.band_ratio));
    report.rate_fit = Some(fit);

    let sup: Vec<(f64, f64)> = traj.states.iter().filter(|s| s.t < 0.0).map(|s| (-s.t, s.sup_x())).collect();
    let c = sup.iter().map(|(t, m)| t * m).fold(0.0, f64::max);
    let reference: Vec<(f64, f64)> = sup.iter().map(|(t, _)| (*t, c / t)).collect();
    ctx.plot(
        "sup_x.svg",
        "max_k x_k against |t|",
        ("|t|", "max_k x_k"),
        Axes { log_x: true, log_y: true },
        &[Series::new("max_k x_k", sup), Series::new("C/|t|", reference)],
    )
}

fn cascade_mode(config: &RunConfig, ctx: &mut Ctx, report: &mut DiagnosticsReport) -> Result<()> {
    let traj = ode_trajectory(config)?;
    ctx.say(format!("{} ODE steps down to t = {:e}", traj.states.len(), traj.t_min()));
    ctx.trajectory("trajectory.csv", &traj)?;
    ode_monitors(config, &traj, ctx, report)?;

    let p = &config.params;
    let seed = seed(config)?;
    let atlas = if config.numerics.profiles {
        let opts = config.numerics.coupled;
        let search = discover_window(p, &seed, opts)?;
        ctx.say(format!("bootstrap window T = {:.4e} after {} trials", search.window, search.trials.len()));
        let run = run_coupled(p, &seed, search.window, opts)?;
        report.monitor(
            "bootstrap",
            run.bootstrap_pass && run.escapes.is_empty(),
            format!("max ‖W-φ‖_Ḣ⁴ = {:.4} against ε = {}", run.max_hdot4, p.epsilon),
        );
        report.monitor(
            "support_displacement",
            run.support.pass,
            format!("{:.2e} against r = {}", run.support.max_displacement, p.r),
        );
        let gron = gronwall_fit(&run.samples);
        report.monitor(
            "gronwall",
            gron.pass,
            format!("K = {:.4e}, ratios [{:.4}, {:.4}]", gron.k, gron.min_ratio, gron.max_ratio),
        );
        if opts.monitor_energy {
            let energy = energy_ratio_stability(&run.samples);
            let worst = energy.worst_factor.iter().copied().fold(0.0, f64::max);
            report.monitor("energy_ratios", energy.pass, format!("worst factor {worst:.4}"));
        }
        let mut csv = String::from("t,max_hdot4\n");
        for s in &run.samples {
            csv.push_str(&format!("{:e},{:e}\n", s.t, s.hdot4.iter().copied().fold(0.0, f64::max)));
        }
        ctx.text("bootstrap.csv", &csv)?;
        let pts: Vec<(f64, f64)> =
            run.samples.iter().map(|s| (-s.t, s.hdot4.iter().copied().fold(0.0, f64::max))).collect();
        ctx.plot(
            "bootstrap.svg",
            "max_k ‖W_k - φ‖ in Ḣ⁴",
            ("|t|", "distance"),
            Axes::default(),
            &[Series::new("max_k", pts)],
        )?;
        run.atlases.last().cloned().expect("coupled run stores atlases")
    } else {
        BubbleAtlas::initial(p, &seed)?
    };
    ctx.checkpoint("atlas", &atlas)?;
    let field = assembled_field(&atlas, config.numerics.field_points)?;
    ctx.field("field.csv", &field)
}

#[derive(Serialize)]
struct TailSummary {
    order: usize,
    m: f64,
    fitted_ratio: f64,
    predicted_ratio: f64,
    convergent_below: f64,
    divergence_warning: bool,
    cn_distance: Vec<(usize, f64)>,
    bubble_norms: Vec<f64>,
}

fn diagnose_mode(config: &RunConfig, ctx: &mut Ctx, report: &mut DiagnosticsReport) -> Result<()> {
    let p = ode_params(config);
    let seed = seed(config)?;
    let traj = ode_trajectory(config)?;
    ctx.trajectory("trajectory.csv", &traj)?;
    ode_monitors(config, &traj, ctx, report)?;

    let snapshot = frozen(&p, traj.last(), &seed)?;
    let h = holder_estimate(&snapshot, &config.numerics.holder)?;
    report.monitor(
        "holder_band",
        (0.5 * h.s_predicted..=1.5 * h.s_predicted).contains(&h.s_measured),
        format!("s = {:.4} against {:.4}", h.s_measured, h.s_predicted),
    );
    report.monitor(
        "holder_floor",
        h.min_implied_exponent >= 0.5 * h.s_predicted,
        format!("smallest implied exponent {:.4}", h.min_implied_exponent),
    );
    ctx.say(format!("Hölder: s = {:.4}, predicted {:.4}", h.s_measured, h.s_predicted));
    report.holder = Some(HolderSummary::from(&h));

    let cs: Vec<f64> = (1..=100).map(|i| -0.5 + 5.5 * i as f64 / 100.0).collect();
    report.feasibility = selfsim_feasibility(&cs, &p)?;
    let infeasible = report.feasibility.iter().filter(|r| !r.feasible).count();
    report.monitor("selfsim_infeasible", infeasible == cs.len(), format!("{infeasible}/{} infeasible", cs.len()));

    if config.numerics.selfsim_probe {
        let (lo, hi) = config.numerics.fit_window;
        let atlases = traj
            .log_checkpoints(lo, hi, config.numerics.checkpoints)
            .iter()
            .map(|s| frozen(&p, s, &seed))
            .collect::<Result<Vec<_>>>()?;
        let probe = selfsim_probe(&atlases, &config.numerics.probe)?;
        report.monitor(
            "selfsim_distance",
            probe.min_pairwise >= 0.05,
            format!("min pairwise {:.4}, min consecutive {:.4}", probe.min_pairwise, probe.min_consecutive),
        );
        ctx.say(format!("self-similarity: min pairwise distance {:.4}", probe.min_pairwise));
        let dist: Vec<(f64, f64)> = probe.times.iter().skip(1).map(|t| t.abs()).zip(probe.consecutive.iter().copied()).collect();
        ctx.plot(
            "selfsim.svg",
            "distance between consecutive rescaled snapshots",
            ("|t|", "distance"),
            Axes { log_x: true, log_y: false },
            &[Series::new("consecutive", dist)],
        )?;
        report.selfsim = Some(probe);
    }

    let atlas = BubbleAtlas::initial(&config.params, &seed)?;
    let tail = tail_report(&atlas, 3, (0.1, 1.0))?;
    let rel = (tail.fitted_ratio / tail.predicted_ratio - 1.0).abs();
    report.monitor(
        "tail_ratio",
        rel <= 0.1,
        format!("{:.5} against A r^0.5 = {:.5}", tail.fitted_ratio, tail.predicted_ratio),
    );
    let half = config.params.n / 2;
    if let Some((_, d)) = tail.cn_distance.iter().find(|(k, _)| *k == half) {
        report.monitor("truncation_distance", *d <= 1e-12, format!("C³ distance n = {half} vs {}: {d:.1e}", config.params.n));
    }
    if tail.divergence_warning {
        ctx.say(format!("warning: the H^m tail diverges as m → 3.5 (convergent below m = {:.3})", tail.convergent_below));
    }
    let norms: Vec<(f64, f64)> = tail.bubble_norms.iter().enumerate().map(|(k, v)| (k as f64, *v)).collect();
    ctx.plot(
        "tail.svg",
        "bubble norms in H^m",
        ("k", "norm"),
        Axes { log_x: false, log_y: true },
        &[Series::new(format!("m = {}", tail.m), norms)],
    )?;
    ctx.json(
        "tail.json",
        &TailSummary {
            order: tail.order,
            m: tail.m,
            fitted_ratio: tail.fitted_ratio,
            predicted_ratio: tail.predicted_ratio,
            convergent_below: tail.convergent_below,
            divergence_warning: tail.divergence_warning,
            cn_distance: tail.cn_distance.clone(),
            bubble_norms: tail.bubble_norms.clone(),
        },
    )?;
    ctx.checkpoint("atlas", &snapshot)
}

fn direct_mode(config: &RunConfig, ctx: &mut Ctx, report: &mut DiagnosticsReport) -> Result<()> {
    let num = &config.numerics;
    let p = config.params.with_n(num.direct_bubbles);
    let seed = make_seed_profile(p.r, num.crosscheck_seed_points)?;
    let atlas = BubbleAtlas::initial(&p, &seed)?;
    let field = embed_atlas(&atlas, num.direct_period, num.direct_points)?;
    ctx.field("initial_field.csv", &field)?;
    let state = SpectralState::new(&field, 0.0, p.dissipation)?;
    let mut opts = num.direct.clone();
    if opts.record_times.is_empty() {
        opts.record_times = (1..20).map(|i| num.direct_time * i as f64 / 20.0).collect();
    }
    let run = integrate(&state, &p, num.direct_time, &opts)?;
    let last = run.last();
    let scale = field.max_abs().max(f64::MIN_POSITIVE);
    report.monitor("mean_conservation", run.mean_drift <= 1e-10 * scale, format!("drift {:.1e}", run.mean_drift));
    report.monitor("hermitian", last.hermitian_defect() <= 1e-10 * scale, format!("{:.1e}", last.hermitian_defect()));
    report.monitor(
        "reached_end",
        run.stopped.is_none(),
        run.stopped.clone().unwrap_or_else(|| format!("t = {:e} after {} steps", last.t, run.steps)),
    );
    ctx.say(format!("direct solver: {} steps, final t = {:e}", run.steps, last.t));

    let mut csv = String::from("t,l2,max_abs,max_d3\n");
    let mut d3 = Vec::new();
    for s in &run.snapshots {
        let v = s.values();
        let l2 = (v.iter().map(|x| x * x).sum::<f64>() * s.grid.spacing()).sqrt();
        let m3 = s.max_third_derivative();
        d3.push((s.t, m3));
        csv.push_str(&format!("{:e},{:e},{:e},{:e}\n", s.t, l2, v.iter().fold(0.0f64, |m, x| m.max(x.abs())), m3));
    }
    ctx.text("direct_series.csv", &csv)?;
    ctx.plot(
        "direct_d3.svg",
        "max |∂³B| in the direct solver",
        ("t", "max |∂³B|"),
        Axes { log_x: false, log_y: true },
        &[Series::new("max |∂³B|", d3)],
    )?;
    ctx.field("field.csv", &last.to_field())
}

fn crosscheck_mode(config: &RunConfig, ctx: &mut Ctx, report: &mut DiagnosticsReport) -> Result<()> {
    let seed = make_seed_profile(config.params.r, config.numerics.crosscheck_seed_points)?;
    let rep = crosscheck(&config.params, &seed, &config.numerics.crosscheck)?;
    report.monitor(
        "crosscheck_l2",
        rep.pass,
        format!("relative L² {:.2e} against {} over T = {:.2e}", rep.relative_l2, rep.tolerance, rep.window),
    );
    report.monitor(
        "direct_self_convergence",
        rep.self_convergence <= config.numerics.crosscheck.self_tolerance,
        format!("{:.2e}", rep.self_convergence),
    );
    ctx.say(format!(
        "crosscheck over T = {:.2e}: relative L² {:.2e}, increment error {:.2e}, images {:.1e}",
        rep.window, rep.relative_l2, rep.increment_error, rep.periodic_image
    ));
    let trials: Vec<(f64, f64)> = rep.trials.iter().copied().filter(|(_, e)| e.is_finite()).collect();
    ctx.plot(
        "crosscheck.svg",
        "direct solver self-convergence per trial window",
        ("T", "relative L² gap"),
        Axes { log_x: true, log_y: true },
        &[Series::new("N vs N/2", trials)],
    )?;
    ctx.json("crosscheck.json", &rep)
}
