use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use magnetotunnel::bounce::{
    find_alpha_r, hard_wall_action, integrate_bounce, resonance_field, resonance_ratio, resonance_ratio_derivative,
    BounceControl,
};
use magnetotunnel::effpot::{
    crossing_depths, eval_u_high_field, extract_u, levels_1d, x0_for_vortex, EffectivePotentialProfile,
    ExtractOptions, PiecewiseModel,
};
use magnetotunnel::field::{
    assemble_field, current, find_vortices, gauge_invariant_q, measure_vortex, GridField, GridSpec, VortexFilter,
};
use magnetotunnel::hj::{connection_constant, RegionGeometry};
use magnetotunnel::oracle::{
    build_problem, compare_semiclassics, resonance_scan, solve_ground, solve_self_consistent, GridPolicy,
    ProblemSpec, SolverOptions,
};
use magnetotunnel::setup::{period, vortex_core};
use magnetotunnel::{derive_dimensionless, validate};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Physical, Units};
use crate::output::{Cell, Sink, Table};

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Resonance wall position α_R, the near-resonance coefficient and H_R.
    Resonance(ResonanceArgs),
    /// Decay exponent per period over a range of α.
    Action(ActionArgs),
    /// |ψ(x, 0)| along the barrier from the closed-form action.
    Profile(ProfileArgs),
    /// Boundary curves of the reflectionless regions.
    Regions(RegionsArgs),
    /// Grid wavefunction with Q and the current.
    Field(FieldArgs),
    /// Imaginary-time bounce trajectory for a finite wall.
    Bounce(BounceArgs),
    /// Direct eigensolve and comparison with the closed forms.
    Oracle(OracleArgs),
    /// Effective potential along y = 0 and its levels.
    Effpot(EffpotArgs),
    /// Per-period suppression measured over α.
    Scan(ScanArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Resonance(_) => "resonance",
            Command::Action(_) => "action",
            Command::Profile(_) => "profile",
            Command::Regions(_) => "regions",
            Command::Field(_) => "field",
            Command::Bounce(_) => "bounce",
            Command::Oracle(_) => "oracle",
            Command::Effpot(_) => "effpot",
            Command::Scan(_) => "scan",
        }
    }
}

/// Dimensionless parameters; anything left out is derived from the
/// physical configuration when one is given.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Params {
    /// a / L
    #[arg(long)]
    pub alpha: Option<f64>,
    /// 2|E| / ħω_c
    #[arg(long)]
    pub nu: Option<f64>,
    /// u0 / |E|
    #[arg(long)]
    pub wall_ratio: Option<f64>,
    /// Wall exponent N of (y/a)^{4N}.
    #[arg(long)]
    pub exponent: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolved {
    pub alpha: f64,
    pub nu: f64,
    pub wall_ratio: f64,
    pub exponent: u32,
}

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_NU: f64 = 4.0;
pub const DEFAULT_WALL_RATIO: f64 = 50.0;
pub const DEFAULT_EXPONENT: u32 = 4;

impl Params {
    pub fn resolve(&self, ctx: &RunContext) -> Result<Resolved> {
        let derived = if ctx.physical.is_empty() || (self.alpha.is_some() && self.nu.is_some()) {
            None
        } else {
            Some(derive_dimensionless(&ctx.physical.setup(ctx.units)?)?)
        };
        Ok(Resolved {
            alpha: self.alpha.or(derived.map(|d| d.alpha)).unwrap_or(DEFAULT_ALPHA),
            nu: self.nu.or(derived.map(|d| d.nu)).unwrap_or(DEFAULT_NU),
            wall_ratio: self
                .wall_ratio
                .or(derived.map(|d| d.wall_energy_ratio))
                .or_else(|| {
                    let v = &ctx.physical.values;
                    v.get("u0").zip(v.get("energy")).map(|(u, e)| u / e)
                })
                .unwrap_or(DEFAULT_WALL_RATIO),
            exponent: self
                .exponent
                .or(derived.map(|d| d.wall_exponent))
                .or(ctx.physical.values.get("N").map(|n| *n as u32))
                .unwrap_or(DEFAULT_EXPONENT),
        })
    }
}

/// Shared state handed to every command.
pub struct RunContext {
    pub physical: Physical,
    pub units: Units,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ResonanceArgs {
    /// Root tolerance in α.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ActionArgs {
    /// Single α; overrides the sweep.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 2.5)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 25)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub params: Params,
    /// Number of periods shown.
    #[arg(long, default_value_t = 3.0)]
    pub periods: f64,
    #[arg(long, default_value_t = 601)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegionsArgs {
    #[command(flatten)]
    pub params: Params,
    #[arg(long, default_value_t = 3)]
    pub regions: usize,
    #[arg(long, default_value_t = 181)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FieldArgs {
    #[command(flatten)]
    pub params: Params,
    #[arg(long, default_value_t = 241)]
    pub nx: usize,
    #[arg(long, default_value_t = 121)]
    pub ny: usize,
    /// Use the direct solution instead of the closed form.
    #[arg(long)]
    pub oracle: bool,
    /// Radius of the loops drawn around detected vortices.
    #[arg(long, default_value_t = 0.05)]
    pub loop_radius: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BounceArgs {
    #[command(flatten)]
    pub params: Params,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub max_step: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub params: Params,
    /// Intervals along x (the oracle grid has nx x-nodes).
    #[arg(long, default_value_t = 384)]
    pub nx: usize,
    /// Intervals along y; even so that y = 0 is a node.
    #[arg(long, default_value_t = 256)]
    pub ny: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    /// Iterate the Robin coefficient to ν sqrt(-Ẽ₁).
    #[arg(long)]
    pub self_consistent: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EffpotArgs {
    #[command(flatten)]
    pub params: Params,
    /// Also extract U from a direct solution on an nx × ny grid.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = 384)]
    pub nx: usize,
    #[arg(long, default_value_t = 256)]
    pub ny: usize,
    #[arg(long, default_value_t = 801)]
    pub samples: usize,
    /// Largest well depth swept, in units of 2α².
    #[arg(long, default_value_t = 10.0)]
    pub depth_max: f64,
    #[arg(long, default_value_t = 40)]
    pub sweep: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub params: Params,
    /// Comma-separated α values.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.7, 0.9, 1.1])]
    pub alphas: Vec<f64>,
    /// Grid spacing bound used for every α.
    #[arg(long, default_value_t = 0.02)]
    pub spacing: f64,
}

pub type Results = Vec<(&'static str, Value)>;

pub fn run(cmd: &Command, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    match cmd {
        Command::Resonance(a) => resonance(a, ctx, sink),
        Command::Action(a) => action(a, ctx, sink),
        Command::Profile(a) => profile(a, ctx, sink),
        Command::Regions(a) => regions(a, ctx, sink),
        Command::Field(a) => field(a, ctx, sink),
        Command::Bounce(a) => bounce(a, ctx, sink),
        Command::Oracle(a) => oracle(a, ctx, sink),
        Command::Effpot(a) => effpot(a, ctx, sink),
        Command::Scan(a) => scan(a, ctx, sink),
    }
}

fn resonance(args: &ResonanceArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let root = find_alpha_r(args.tol)?;
    let a = root.alpha_r;
    let coefficient = a * resonance_ratio_derivative(a);
    let mut t = Table::new(&["quantity", "value"]);
    let mut results: Results = vec![
        ("alpha_R", json!(a)),
        ("alpha_R_connection", json!(root.alpha_r_connection)),
        ("I_minus_1", json!(resonance_ratio(a) - 1.0)),
        ("C", json!(connection_constant(a))),
        ("coefficient", json!(coefficient)),
        ("period_over_wall", json!(period(a) / a)),
    ];
    if !ctx.physical.is_empty() {
        let setup = ctx.physical.setup(ctx.units)?;
        results.push(("H_R", json!(resonance_field(&setup)?)));
    }
    for (k, v) in &results {
        t.push(vec![(*k).into(), v.as_f64().into()]);
    }
    sink.table("resonance", &t)?;
    Ok(results)
}

fn action(args: &ActionArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let nu = Params {
        alpha: Some(args.alpha.unwrap_or(DEFAULT_ALPHA)),
        nu: args.nu,
        wall_ratio: None,
        exponent: None,
    }
    .resolve(ctx)?
    .nu;
    let alphas: Vec<f64> = match args.alpha {
        Some(a) => vec![a],
        None => {
            if args.steps < 2 || !(args.alpha_max > args.alpha_min) {
                bail!("need --steps >= 2 and --alpha-max > --alpha-min");
            }
            let h = (args.alpha_max - args.alpha_min) / (args.steps - 1) as f64;
            (0..args.steps).map(|i| args.alpha_min + i as f64 * h).collect()
        }
    };
    let mut t = Table::new(&["alpha", "nu", "a_wkb", "transverse", "total", "suppression", "I", "C"]);
    for &alpha in &alphas {
        let b = hard_wall_action(alpha, nu)?;
        t.push(vec![
            alpha.into(),
            nu.into(),
            b.a_wkb.into(),
            b.transverse.into(),
            b.total.into(),
            b.suppression.into(),
            resonance_ratio(alpha).into(),
            connection_constant(alpha).into(),
        ]);
    }
    sink.table("action", &t)?;
    Ok(vec![("nu", json!(nu)), ("rows", json!(alphas.len()))])
}

fn profile(args: &ProfileArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let p = args.params.resolve(ctx)?;
    let g = RegionGeometry::new(p.alpha)?;
    if args.samples < 2 || !(args.periods > 0.0) {
        bail!("need --samples >= 2 and --periods > 0");
    }
    let x_max = args.periods * g.period;
    let mut t = Table::new(&["x", "region", "abs_psi", "log_abs_psi"]);
    for i in 0..args.samples {
        let x = x_max * i as f64 / (args.samples - 1) as f64;
        match g.action(x, 0.0) {
            Ok(a) => t.push(vec![
                x.into(),
                a.region.into(),
                (-p.nu * a.sigma.re).exp().into(),
                (-p.nu * a.sigma.re).into(),
            ]),
            Err(_) => t.push(vec![x.into(), Cell::Empty, Cell::Empty, Cell::Empty]),
        }
    }
    sink.table("profile", &t)?;
    Ok(vec![("alpha", json!(p.alpha)), ("nu", json!(p.nu)), ("period", json!(g.period))])
}

fn regions(args: &RegionsArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let p = args.params.resolve(ctx)?;
    let g = RegionGeometry::new(p.alpha)?;
    if args.samples < 2 {
        bail!("need --samples >= 2");
    }
    let mut t = Table::new(&["region", "t", "x", "y"]);
    for k in 0..args.regions {
        for i in 0..args.samples {
            let s = std::f64::consts::TAU * i as f64 / (args.samples - 1) as f64;
            let (x, y) = g.boundary_point(k, s);
            t.push(vec![k.into(), s.into(), x.into(), y.into()]);
        }
    }
    sink.table("regions", &t)?;
    Ok(vec![
        ("alpha", json!(p.alpha)),
        ("period", json!(g.period)),
        ("connection", json!(g.connection)),
    ])
}

fn field_table(f: &GridField) -> (Table, Table) {
    let q = gauge_invariant_q(f);
    let j = current(f, &q);
    let g = &f.grid;
    let mut t = Table::new(&["x", "y", "re_psi", "im_psi", "abs_psi", "chi", "Qx", "Qy", "region"]);
    let mut c = Table::new(&["x", "y", "jx", "jy"]);
    for i in 0..g.nx {
        for jy in 0..g.ny {
            let k = g.index(i, jy);
            let (x, y) = (g.x(i), g.y(jy));
            if f.is_valid(k) {
                let z = g.data[k];
                t.push(vec![
                    x.into(),
                    y.into(),
                    z.re.into(),
                    z.im.into(),
                    z.norm().into(),
                    f.phase_at(k).into(),
                    q[k].map(|v| v[0]).into(),
                    q[k].map(|v| v[1]).into(),
                    f.region[k].into(),
                ]);
            } else {
                let mut row = vec![x.into(), y.into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 7));
                t.push(row);
            }
            c.push(vec![x.into(), y.into(), j[k].map(|v| v[0]).into(), j[k].map(|v| v[1]).into()]);
        }
    }
    (t, c)
}

fn vortex_table(f: &GridField, radius: f64) -> Result<(Table, Vec<Value>)> {
    let mut t = Table::new(&[
        "x",
        "y",
        "winding",
        "circulation",
        "enclosed_flux",
        "topological",
        "residual",
        "relative_residual",
        "circulation_in_flux_quanta",
    ]);
    let mut all = Vec::new();
    for (x, y, _) in find_vortices(f, VortexFilter::for_alpha(f.alpha)) {
        let r = measure_vortex(f, x, y, radius)?;
        let c = &r.circulation;
        t.push(vec![
            x.into(),
            y.into(),
            r.winding.into(),
            c.circulation.into(),
            c.enclosed_flux.into(),
            c.topological.into(),
            c.residual.into(),
            c.relative_residual.into(),
            c.circulation_in_flux_quanta.into(),
        ]);
        all.push(serde_json::to_value(&r)?);
    }
    Ok((t, all))
}

fn oracle_spec(p: Resolved, nx: usize, ny: usize) -> ProblemSpec {
    ProblemSpec {
        nx,
        ny,
        wall_ratio: p.wall_ratio,
        wall_exponent: p.exponent,
        ..ProblemSpec::new(p.nu, p.alpha)
    }
}

fn field(args: &FieldArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let p = args.params.resolve(ctx)?;
    let f = if args.oracle {
        let problem = build_problem(oracle_spec(p, args.nx, args.ny))?;
        let sol = solve_ground(&problem, SolverOptions::default())?;
        GridField::from_oracle(sol.psi, p.alpha, p.nu)?
    } else {
        let spec = GridSpec {
            nx: args.nx,
            ny: args.ny,
            x_max: 2.0 * period(p.alpha),
            y_max: 1.2 * p.alpha,
        };
        assemble_field(spec, p.alpha, p.nu)?
    };
    let (t, c) = field_table(&f);
    sink.table("field", &t)?;
    sink.table("current", &c)?;
    let mut results: Results = vec![
        ("source", json!(f.source)),
        ("alpha", json!(p.alpha)),
        ("nu", json!(p.nu)),
        ("nx", json!(f.grid.nx)),
        ("ny", json!(f.grid.ny)),
    ];
    if args.oracle {
        let (v, all) = vortex_table(&f, args.loop_radius)?;
        sink.table("vortices", &v)?;
        results.push(("vortices", Value::Array(all)));
    }
    Ok(results)
}

fn bounce(args: &BounceArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let p = args.params.resolve(ctx)?;
    let control = BounceControl {
        max_step: args.max_step,
        samples: args.samples,
        ..BounceControl::default()
    };
    let b = integrate_bounce(p.alpha, p.nu, p.wall_ratio, p.exponent, control)?;
    let mut t = Table::new(&["tau", "eta", "eta_dot"]);
    for ((tau, eta), d) in b.tau.iter().zip(&b.eta).zip(&b.eta_dot) {
        t.push(vec![(*tau).into(), (*eta).into(), (*d).into()]);
    }
    sink.table("bounce", &t)?;
    let hw = hard_wall_action(p.alpha, p.nu)?;
    Ok(vec![
        ("params", json!(p)),
        ("period", json!(b.period)),
        ("turning_point", json!(b.turning_point)),
        ("transverse_action", json!(b.transverse_action)),
        ("transverse_action_stepped", json!(b.transverse_action_stepped)),
        ("period_length", json!(b.period_length)),
        ("action", json!(b.action)),
        ("hard_wall", json!(hw)),
        ("max_energy_residual", json!(b.max_energy_residual)),
        ("closure_error", json!(b.closure_error)),
    ])
}

fn oracle(args: &OracleArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let p = args.params.resolve(ctx)?;
    let spec = oracle_spec(p, args.nx, args.ny);
    let options = SolverOptions {
        tolerance: args.tolerance,
        max_outer: args.max_outer,
        ..SolverOptions::default()
    };
    let problem = build_problem(spec)?;
    let herm = problem.hermiticity(2, 1);
    let (sol, kappa) = if args.self_consistent {
        solve_self_consistent(spec, options, 50)?
    } else {
        (solve_ground(&problem, options)?, problem.robin)
    };
    let report = compare_semiclassics(&sol, p.alpha, p.nu)?;
    let f = GridField::from_oracle(sol.psi.clone(), p.alpha, p.nu)?;
    let (t, _) = field_table(&f);
    sink.table("field", &t)?;
    sink.json("report", &report)?;
    Ok(vec![
        ("params", json!(p)),
        ("grid", json!({"nx": args.nx, "ny": args.ny, "hx": problem.hx, "hy": problem.hy,
                         "x_extent": problem.x_extent, "y_extent": problem.y_extent})),
        ("robin", json!(kappa)),
        ("eigenvalue", json!(sol.eigenvalue)),
        ("eigenvalue_imag", json!(sol.eigenvalue_imag)),
        ("energy_mismatch", json!((sol.eigenvalue + 1.0).abs())),
        ("residual", json!(sol.residual)),
        ("outer_iterations", json!(sol.outer_iterations)),
        ("inner_iterations", json!(sol.inner_iterations)),
        ("residual_history", json!(sol.residual_history)),
        ("hermiticity", json!(herm)),
        ("comparison", json!(report)),
    ])
}

fn push_profile(t: &mut Table, p: &EffectivePotentialProfile) {
    for (x, u) in p.x.iter().zip(&p.u) {
        t.push(vec![(*x).into(), (*u).into(), p.variant.tag().into(), u.is_none().into()]);
    }
}

fn effpot(args: &EffpotArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let p = args.params.resolve(ctx)?;
    let dx = period(p.alpha);
    let mut t = Table::new(&["x", "U", "variant", "masked"]);
    let mut results: Results = vec![("params", json!(p))];

    // vortex at Δx/2 unless a direct solution places it elsewhere
    let mut vortex = 0.5 * dx;
    if args.oracle {
        let problem = build_problem(oracle_spec(p, args.nx, args.ny))?;
        let sol = solve_ground(&problem, SolverOptions::default())?;
        let f = GridField::from_oracle(sol.psi.clone(), p.alpha, p.nu)?;
        let e = extract_u(&f, sol.eigenvalue, ExtractOptions::default())?;
        if let Some(&n) = e.nodes.first() {
            vortex = n;
        }
        push_profile(&mut t, &e.transverse);
        push_profile(&mut t, &e.line);
        results.push(("eigenvalue", json!(sol.eigenvalue)));
        results.push(("nodes", json!(e.nodes)));
    }
    let x0 = x0_for_vortex(vortex, p.alpha, p.nu);
    let high = eval_u_high_field(0.0, 2.0 * dx, args.samples, p.alpha, p.nu, x0, 0.0)?;
    push_profile(&mut t, &high);

    let scale = PiecewiseModel::depth_scale(p.alpha);
    let model = PiecewiseModel::new(p.alpha, p.nu, scale)?;
    let piecewise = model.profile(args.samples);
    push_profile(&mut t, &piecewise);
    sink.table("effpot", &t)?;

    let window = (-1.05, -0.95);
    let crossings = crossing_depths(p.alpha, p.nu, -1.0, (0.0, args.depth_max * scale), args.sweep, args.samples)
        .context("sweeping well depth")?;
    let at_scale = levels_1d(&piecewise, p.nu, (-2.0 * scale - 1.0, 0.0))?;
    let mut tuned = Vec::new();
    for &d in &crossings {
        let m = PiecewiseModel::new(p.alpha, p.nu, d)?;
        tuned.push(json!({
            "depth": d,
            "depth_over_scale": d / scale,
            "levels_in_window": levels_1d(&m.profile(args.samples), p.nu, window)?,
        }));
    }
    let levels = json!({
        "alpha": p.alpha,
        "nu": p.nu,
        "period": dx,
        "well_width": vortex_core(p.alpha, p.nu),
        "depth_scale": scale,
        "levels_at_scale": at_scale,
        "window": [window.0, window.1],
        "level_near_target_at_scale": at_scale.iter().any(|e| *e >= window.0 && *e <= window.1),
        "crossings": tuned,
        "high_field_shift": x0,
        "high_field_poles": high.singular_points,
    });
    sink.json("levels", &levels)?;
    results.push(("levels", levels));
    Ok(results)
}

fn scan(args: &ScanArgs, ctx: &RunContext, sink: &mut Sink) -> Result<Results> {
    let p = args.params.resolve(ctx)?;
    let base = oracle_spec(p, 0, 0);
    let table = resonance_scan(
        p.nu,
        &args.alphas,
        GridPolicy::Spacing { h: args.spacing },
        base,
        SolverOptions::default(),
    )?;
    let mut t = Table::new(&[
        "alpha",
        "nx",
        "ny",
        "eigenvalue",
        "measured_log",
        "predicted_log",
        "ratio",
        "error",
    ]);
    for r in &table.rows {
        t.push(vec![
            r.alpha.into(),
            r.nx.into(),
            r.ny.into(),
            r.eigenvalue.into(),
            r.measured_log.into(),
            r.predicted_log.into(),
            r.ratio.into(),
            r.error.clone().map_or(Cell::Empty, Cell::Text),
        ]);
    }
    sink.table("scan", &t)?;
    Ok(vec![
        ("nu", json!(p.nu)),
        ("monotone", json!(table.monotone)),
        ("within_envelope", json!(table.within_envelope)),
    ])
}

/// Validity conditions of the physical configuration, when there is one.
pub fn validity(ctx: &RunContext) -> Option<Value> {
    let setup = ctx.physical.setup(ctx.units).ok()?;
    let d = derive_dimensionless(&setup).ok()?;
    Some(json!({"dimensionless": d, "validity": validate(&setup)}))
}
