//! `fsrk`: inspect, analyze, optimize and run 2-split FSRK methods.
//!
//! Exit codes: 0 on success, 1 on domain errors (non-convergence, search
//! failure, instability, ...), 2 on usage errors (bad flags, unknown names,
//! malformed input files, refusing to overwrite).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fsrk::integrators::{integrate, IntegrateOptions, PlanSpec};
use fsrk::methods::{
    lem3, lookup, order_condition_residuals, read_method, registry, write_method, SplittingMethod,
};
use fsrk::optimizer::{minimize, DesignSpec};
use fsrk::problems::{
    largest_stable_dt, make_rd_fhn, mrms_grouped, reference_solution, DtTrialSetup,
    Noncommuting, RdFhnConfig, ReferenceOptions,
};
use fsrk::stability::{
    find_xhat, raster, OperatorOrdering, RegionRaster, StabilityContext, Window,
    BENCHMARK_EIGEN_RATIO, DEFAULT_SCAN_DEPTH,
};
use fsrk::Error;

#[derive(Parser)]
#[command(name = "fsrk", version, about = "Fractional-step Runge-Kutta operator splitting toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in methods.
    Methods,
    /// Highest order whose conditions a method satisfies.
    CheckOrder {
        #[command(flatten)]
        method: MethodArg,
        /// Highest order to check (up to 4).
        #[arg(long, default_value_t = 4)]
        max_order: u32,
        /// Also print every residual.
        #[arg(long)]
        residuals: bool,
    },
    /// Third-order local error measure.
    Lem {
        /// Built-in method name (repeatable).
        #[arg(long = "method")]
        methods: Vec<String>,
        /// Method file (repeatable).
        #[arg(long = "method-file")]
        files: Vec<PathBuf>,
        /// Ruth, AKS3 and OS437-minLEM.
        #[arg(long)]
        all: bool,
    },
    /// Render the single-variable stability region as SVG and CSV.
    Stability {
        #[command(flatten)]
        method: MethodArg,
        #[command(flatten)]
        setting: StabilitySetting,
        /// `x0,x1,y0,y1` in units of lambda_R dt.
        #[arg(long, default_value = "-12,2,-6,6", allow_hyphen_values = true)]
        window: String,
        #[arg(long, default_value_t = 281)]
        nx: usize,
        #[arg(long, default_value_t = 241)]
        ny: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Right-most negative real intercept of |R(z)| = 1.
    Xhat {
        /// Built-in method name (repeatable).
        #[arg(long = "method")]
        methods: Vec<String>,
        /// Method file (repeatable).
        #[arg(long = "method-file")]
        files: Vec<PathBuf>,
        #[command(flatten)]
        setting: StabilitySetting,
        /// Scan depth in units of lambda_R dt.
        #[arg(long, default_value_t = DEFAULT_SCAN_DEPTH)]
        depth: f64,
    },
    /// Design a third-order method from a design file.
    Optimize {
        /// Design file (method header keys plus zero/box/seeds/rng/objective/...).
        spec: PathBuf,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        rng: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// One constant-step run on the FitzHugh-Nagumo reaction-diffusion problem.
    Run {
        #[command(flatten)]
        method: MethodArg,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Step size in problem time units.
        #[arg(long)]
        dt: f64,
        /// Record every n-th step instead of the sample times.
        #[arg(long)]
        stride: Option<usize>,
        /// Report the voltage MRMS error against a fine-step reference.
        #[arg(long)]
        reference: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Largest stable step sizes on the FHN problem, or observed orders on a linear problem.
    Convergence {
        /// `method[:ordering]` (repeatable; ordering defaults to --ordering);
        /// defaults to the benchmark set.
        #[arg(long = "case")]
        cases: Vec<String>,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Voltage MRMS threshold.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        /// `lo,hi` step-size bracket in problem time units.
        #[arg(long, default_value = "1e-4,0.05")]
        bounds: String,
        /// Fit convergence slopes on a noncommuting 2x2 linear problem instead.
        #[arg(long)]
        linear: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct MethodArg {
    /// Built-in method name (trailing `*` for the adjoint).
    #[arg(long, conflicts_with = "method_file", required_unless_present = "method_file")]
    method: Option<String>,
    /// Method file.
    #[arg(long)]
    method_file: Option<PathBuf>,
}

#[derive(Args)]
struct StabilitySetting {
    /// DR (diffusion first) or RD.
    #[arg(long, default_value = "DR")]
    ordering: String,
    /// lambda_D / lambda_R.
    #[arg(long, default_value_t = BENCHMARK_EIGEN_RATIO)]
    ratio: f64,
    /// `<diffusion>:<reaction>[+negfe]`.
    #[arg(long, default_value = "sdirk23:rk3")]
    plan: String,
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem config file; defaults to the 1D benchmark.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "DR")]
    ordering: String,
    #[arg(long, default_value = "sdirk23:rk3")]
    plan: String,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "FSRK_OUT_DIR", default_value = ".")]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

enum Failure {
    Usage(String),
    Domain(String),
}

type CmdResult = Result<(), Failure>;

/// Attaches the module operation that failed.
fn ctx(op: &'static str) -> impl Fn(Error) -> Failure {
    move |e| {
        let msg = format!("{op}: {e}");
        match e {
            Error::Input(_) | Error::Parse { .. } => Failure::Usage(msg),
            _ => Failure::Domain(msg),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn existing_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("no such file: {}", path.display())))
    }
}

impl MethodArg {
    fn load(&self) -> Result<SplittingMethod, Failure> {
        match (&self.method, &self.method_file) {
            (Some(name), _) => lookup(name).map_err(ctx("methods::lookup")),
            (None, Some(path)) => {
                existing_file(path)?;
                read_method(path).map_err(ctx("methods::read_method"))
            }
            (None, None) => Err(usage("need --method or --method-file")),
        }
    }
}

fn load_many(names: &[String], files: &[PathBuf]) -> Result<Vec<SplittingMethod>, Failure> {
    for f in files {
        existing_file(f)?;
    }
    let mut out = Vec::new();
    for n in names {
        out.push(lookup(n).map_err(ctx("methods::lookup"))?);
    }
    for f in files {
        out.push(read_method(f).map_err(ctx("methods::read_method"))?);
    }
    Ok(out)
}

fn parse_ordering(s: &str) -> Result<OperatorOrdering, Failure> {
    s.parse().map_err(ctx("stability::OperatorOrdering"))
}

fn parse_plan(s: &str) -> Result<PlanSpec, Failure> {
    s.parse().map_err(ctx("integrators::PlanSpec"))
}

fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("{what}: expected {n} comma-separated numbers, got {s:?}")))?;
    if vals.len() != n {
        return Err(usage(format!("{what}: expected {n} comma-separated numbers, got {s:?}")));
    }
    Ok(vals)
}

impl OutArgs {
    /// Resolves output paths up front so nothing is computed before a refusal.
    fn prepare(&self, names: &[String]) -> Result<Vec<PathBuf>, Failure> {
        if self.out.exists() && !self.out.is_dir() {
            return Err(usage(format!("output path {} is not a directory", self.out.display())));
        }
        std::fs::create_dir_all(&self.out)
            .map_err(|e| Failure::Domain(format!("cannot create {}: {e}", self.out.display())))?;
        let paths: Vec<PathBuf> = names.iter().map(|n| self.out.join(n)).collect();
        if !self.force {
            if let Some(p) = paths.iter().find(|p| p.exists()) {
                return Err(usage(format!("{} exists; pass --force to overwrite", p.display())));
            }
        }
        Ok(paths)
    }
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Failure::Domain(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else if c == '*' { 'a' } else { '_' })
        .collect()
}

fn cmd_methods() -> CmdResult {
    println!("name,stages,order,lem3");
    for m in registry() {
        let lem = if m.claimed_order() >= 3 { format!("{:.6e}", lem3(&m).lem3) } else { String::new() };
        println!("{},{},{},{}", m.name(), m.stages(), m.claimed_order(), lem);
    }
    Ok(())
}

fn cmd_check_order(method: &MethodArg, max_order: u32, residuals: bool) -> CmdResult {
    let m = method.load()?;
    let rep = order_condition_residuals(&m, max_order).map_err(ctx("methods::order_condition_residuals"))?;
    println!("satisfied_order,{}", rep.satisfied_order);
    if residuals {
        println!("order,condition,residual");
        for (p, rs) in &rep.residuals_by_order {
            for (i, r) in rs.iter().enumerate() {
                println!("{p},{},{r:.6e}", i + 1);
            }
        }
    }
    Ok(())
}

fn cmd_lem(names: &[String], files: &[PathBuf], all: bool) -> CmdResult {
    let mut names = names.to_vec();
    if all {
        names.extend(["ruth", "aks3", "os437-minlem"].map(String::from));
    }
    let methods = load_many(&names, files)?;
    if methods.is_empty() {
        return Err(usage("need --method, --method-file or --all"));
    }
    println!("method,lambda41,lambda42,lambda43,lem3,third_order");
    for m in methods {
        let r = lem3(&m);
        println!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{}",
            m.name(),
            r.lambda41,
            r.lambda42,
            r.lambda43,
            r.lem3,
            r.third_order
        );
    }
    Ok(())
}

fn stability_context(m: SplittingMethod, s: &StabilitySetting) -> Result<StabilityContext, Failure> {
    let ordering = parse_ordering(&s.ordering)?;
    let plan = parse_plan(&s.plan)?;
    StabilityContext::from_spec(m, &plan, ordering, s.ratio).map_err(ctx("stability::StabilityContext"))
}

fn cmd_stability(method: &MethodArg, setting: &StabilitySetting, window: &str, nx: usize, ny: usize, out: &OutArgs) -> CmdResult {
    let m = method.load()?;
    let w = parse_list(window, 4, "--window")?;
    let window = Window::new(w[0], w[1], w[2], w[3]).map_err(ctx("stability::Window"))?;
    let ctx_ = stability_context(m, setting)?;
    let svg_name = RegionRaster::svg_file_name(ctx_.method.name(), ctx_.ordering);
    let csv_name = svg_name.replace(".svg", ".csv");
    let paths = out.prepare(&[svg_name, csv_name])?;
    let r = raster(&ctx_, window, nx, ny).map_err(ctx("stability::raster"))?;
    let title = format!("{} {} ratio {} plan {}", ctx_.method.name(), ctx_.ordering, ctx_.eigen_ratio, setting.plan);
    write_file(&paths[0], &r.to_svg(&title))?;
    write_file(&paths[1], &r.to_csv())
}

fn cmd_xhat(names: &[String], files: &[PathBuf], setting: &StabilitySetting, depth: f64) -> CmdResult {
    let methods = load_many(names, files)?;
    if methods.is_empty() {
        return Err(usage("need --method or --method-file"));
    }
    println!("method,ordering,xhat");
    for m in methods {
        let c = stability_context(m, setting)?;
        let res = find_xhat(&c, depth).map_err(ctx("stability::find_xhat"))?;
        let x = res.xhat.map_or_else(|| format!("<-{depth}"), |x| format!("{x:.6}"));
        println!("{},{},{x}", c.method.name(), c.ordering);
    }
    Ok(())
}

fn cmd_optimize(spec_path: &Path, seeds: Option<usize>, rng: Option<u64>, out: &OutArgs) -> CmdResult {
    existing_file(spec_path)?;
    let mut spec = DesignSpec::read(spec_path).map_err(ctx("optimizer::DesignSpec"))?;
    if let Some(n) = seeds {
        spec = spec.with_seeds(n);
    }
    if let Some(r) = rng {
        spec = spec.with_rng_seed(r);
    }
    spec.validate().map_err(ctx("optimizer::DesignSpec"))?;
    let paths = out.prepare(&[format!("{}.method", file_stem(&spec.method_name()))])?;
    let (cand, stats) = minimize(&spec).map_err(ctx("optimizer::minimize"))?;
    if !cand.feasible {
        return Err(Failure::Domain(format!(
            "optimizer::minimize: best candidate is infeasible (order residual {:e})",
            cand.order_residual_norm
        )));
    }
    write_method(&paths[0], &cand.method).map_err(ctx("methods::write_method"))?;
    eprintln!("wrote {}", paths[0].display());
    // Round trip: the written file must reproduce the residuals exactly.
    let back = read_method(&paths[0]).map_err(ctx("methods::read_method"))?;
    let r0 = order_condition_residuals(&cand.method, 3).map_err(ctx("methods::order_condition_residuals"))?;
    let r1 = order_condition_residuals(&back, 3).map_err(ctx("methods::order_condition_residuals"))?;
    let drift = r0
        .residuals_by_order
        .values()
        .flatten()
        .zip(r1.residuals_by_order.values().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if drift > 1e-14 || r1.satisfied_order < 3 {
        return Err(Failure::Domain(format!("methods::read_method: round trip changed residuals by {drift:e}")));
    }
    println!("method,objective,value,order_residual,starts,infeasible_starts");
    println!(
        "{},{},{:.9e},{:.3e},{},{}",
        cand.method.name(),
        spec.objective.label(),
        cand.objective_value,
        cand.order_residual_norm,
        stats.starts,
        stats.infeasible_starts
    );
    Ok(())
}

fn load_config(path: &Option<PathBuf>) -> Result<RdFhnConfig, Failure> {
    match path {
        Some(p) => {
            existing_file(p)?;
            RdFhnConfig::read(p).map_err(ctx("problems::RdFhnConfig"))
        }
        None => Ok(RdFhnConfig::default()),
    }
}

fn cmd_run(method: &MethodArg, problem: &ProblemArgs, dt: f64, stride: Option<usize>, with_ref: bool, out: &OutArgs) -> CmdResult {
    let m = method.load()?;
    let config = load_config(&problem.config)?;
    let ordering = parse_ordering(&problem.ordering)?;
    let spec = parse_plan(&problem.plan)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(usage(format!("--dt must be positive, got {dt}")));
    }
    let p = make_rd_fhn(config, ordering).map_err(ctx("problems::make_rd_fhn"))?;
    let paths = out.prepare(&[format!("run_{}_{ordering}.csv", file_stem(m.name()))])?;
    let opts = match stride {
        Some(s) => IntegrateOptions { stride: s.max(1), ..IntegrateOptions::default() },
        None => IntegrateOptions::sampled(p.config.sample_times()),
    };
    let start = Instant::now();
    let traj = integrate(&p, &m, &spec.for_ordering(ordering), 0.0, p.config.t_end, dt, &opts)
        .map_err(|f| ctx("integrators::integrate")(f.error))?;
    let wall = start.elapsed().as_secs_f64();
    write_file(&paths[0], &traj.to_csv(1))?;
    let mut summary = String::from("key,value\n");
    let _ = writeln!(summary, "method,{}", m.name());
    let _ = writeln!(summary, "ordering,{ordering}");
    let _ = writeln!(summary, "plan,{spec}");
    let _ = writeln!(summary, "dt,{dt}");
    let _ = writeln!(summary, "steps,{}", traj.stats.steps);
    let _ = writeln!(summary, "f_evals_op1,{}", traj.stats.f_evals[0]);
    let _ = writeln!(summary, "f_evals_op2,{}", traj.stats.f_evals[1]);
    let _ = writeln!(summary, "newton_iters,{}", traj.stats.newton_iters);
    let _ = writeln!(summary, "wall_time_s,{wall:.3}");
    if with_ref {
        let reference = reference_solution(&p, Some(&out.out), &ReferenceOptions::default())
            .map_err(ctx("problems::reference_solution"))?;
        let sampled: Vec<Vec<f64>> = reference
            .sample_times
            .iter()
            .map(|&s| {
                let i = traj.times.iter().position(|&t| t == s);
                i.map(|i| traj.states[i].clone())
            })
            .collect::<Option<_>>()
            .ok_or_else(|| usage("--reference needs the default sampling (omit --stride)"))?;
        let rep = mrms_grouped(&sampled, &reference.states, 2).map_err(ctx("problems::mrms"))?;
        let _ = writeln!(summary, "mrms_v,{:.6e}", rep.per_variable[0]);
    }
    print!("{summary}");
    Ok(())
}

fn default_cases() -> Vec<String> {
    ["ruth:RD", "ruth:DR", "aks3:DR", "aks3:RD", "os437dr-minx:DR"].map(String::from).to_vec()
}

fn cmd_convergence(cases: &[String], problem: &ProblemArgs, threshold: f64, bounds: &str, linear: bool, out: &OutArgs) -> CmdResult {
    let spec = parse_plan(&problem.plan)?;
    if linear {
        return linear_study(cases, &spec, out);
    }
    let cases = if cases.is_empty() { default_cases() } else { cases.to_vec() };
    let default_ordering = parse_ordering(&problem.ordering)?;
    let mut parsed = Vec::new();
    for c in &cases {
        let (name, ordering) = match c.split_once(':') {
            Some((name, ord)) => (name, parse_ordering(ord)?),
            None => (c.as_str(), default_ordering),
        };
        parsed.push((lookup(name).map_err(ctx("methods::lookup"))?, ordering));
    }
    let b = parse_list(bounds, 2, "--bounds")?;
    let config = load_config(&problem.config)?;
    let paths = out.prepare(&["convergence.csv".to_string()])?;
    let base = make_rd_fhn(config, OperatorOrdering::DR).map_err(ctx("problems::make_rd_fhn"))?;
    let reference = reference_solution(&base, Some(&out.out), &ReferenceOptions::default())
        .map_err(ctx("problems::reference_solution"))?;
    let setup = DtTrialSetup {
        t_end: base.config.t_end,
        sample_times: reference.sample_times.clone(),
        reference: Some(&reference.states),
        variable: (2, 0),
        blowup_limit: 1e3,
    };
    let mut csv = String::from("method,ordering,plan,dt,mrms_v,f_evals_per_step,xhat\n");
    for (m, ordering) in parsed {
        let p = base.with_ordering(ordering);
        let found = largest_stable_dt(&p, &m, &spec.for_ordering(ordering), &setup, (b[0], b[1]), threshold)
            .map_err(ctx("problems::largest_stable_dt"))?;
        let sctx = StabilityContext::from_spec(m.clone(), &spec, ordering, BENCHMARK_EIGEN_RATIO)
            .map_err(ctx("stability::StabilityContext"))?;
        let x = find_xhat(&sctx, DEFAULT_SCAN_DEPTH).map_err(ctx("stability::find_xhat"))?.xhat;
        let _ = writeln!(
            csv,
            "{},{ordering},{spec},{},{:.6e},{:.2},{}",
            m.name(),
            found.dt,
            found.trial.error,
            found.trial.f_evals_per_step(),
            x.map_or(String::new(), |x| format!("{x:.6}"))
        );
    }
    print!("{csv}");
    write_file(&paths[0], &csv)
}

fn linear_study(cases: &[String], spec: &PlanSpec, out: &OutArgs) -> CmdResult {
    let names: Vec<String> = if cases.is_empty() {
        registry().iter().map(|m| m.name().to_string()).collect()
    } else {
        cases.iter().map(|c| c.split(':').next().unwrap_or(c).to_string()).collect()
    };
    let methods = load_many(&names, &[])?;
    let paths = out.prepare(&["convergence_linear.csv".to_string()])?;
    let problem = Noncommuting::convergence_pair();
    let exact = fsrk::integrators::SplitProblem::exact(&problem, 1.0).expect("closed form");
    let plan = spec.for_ordering(OperatorOrdering::DR);
    let mut errors = String::from("method,plan,dt,max_error\n");
    println!("method,plan,slope");
    for m in methods {
        let mut pts = Vec::new();
        for k in 4..=10 {
            let dt = 0.5_f64.powi(k);
            let traj = integrate(&problem, &m, &plan, 0.0, 1.0, dt, &IntegrateOptions::default())
                .map_err(|f| ctx("integrators::integrate")(f.error))?;
            let (_, y) = traj.last().expect("nonempty trajectory");
            let err = y.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let _ = writeln!(errors, "{},{spec},{dt},{err:.6e}", m.name());
            pts.push((dt.ln(), err.ln()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        println!("{},{spec},{slope:.4}", m.name());
    }
    write_file(&paths[0], &errors)
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Methods => cmd_methods(),
        Command::CheckOrder { method, max_order, residuals } => cmd_check_order(method, *max_order, *residuals),
        Command::Lem { methods, files, all } => cmd_lem(methods, files, *all),
        Command::Stability { method, setting, window, nx, ny, out } => cmd_stability(method, setting, window, *nx, *ny, out),
        Command::Xhat { methods, files, setting, depth } => cmd_xhat(methods, files, setting, *depth),
        Command::Optimize { spec, seeds, rng, out } => cmd_optimize(spec, *seeds, *rng, out),
        Command::Run { method, problem, dt, stride, reference, out } => cmd_run(method, problem, *dt, *stride, *reference, out),
        Command::Convergence { cases, problem, threshold, bounds, linear, out } => {
            cmd_convergence(cases, problem, *threshold, bounds, *linear, out)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on its own usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
