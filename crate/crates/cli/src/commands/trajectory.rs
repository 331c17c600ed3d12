use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Parser;

use qrel_core::apparatus::dilate_survival_failure;
use qrel_core::dynamics::{independent_sum, thermal_qubit, StepMethod};
use qrel_core::events::{compile_structure, parse_system, ComponentSpace, Projector};
use qrel_core::histories::{consistency_matrix, reliability_curve, weight, TrajectoryFamily};
use qrel_core::numkernel::{read_matrix_file, write_matrix_text, ComplexMatrix};

use crate::commands::{resolve_n_thermal, resolve_positive};
use crate::config::{resolve_f64, resolve_string, resolve_usize};
use crate::output::{deliver, fmt_float, fmt_param, info, Csv};
use crate::{CliError, Ctx};

#[derive(Parser, Debug)]
pub struct Args {
    /// Structure-function system file (component decls + `system := …`)
    #[arg(long)]
    dsl: Option<PathBuf>,
    /// Bind a component's survival projector: NAME=MATRIX_FILE
    /// (overrides a `matrix` path in the declaration)
    #[arg(long)]
    bind: Vec<String>,
    /// Code-state amplitude for the default initial ket
    /// alpha|1…1⟩ + beta|0…0⟩
    #[arg(long)]
    alpha: Option<f64>,
    /// Initial ket from a matrix text file (n x 1), overriding --alpha
    #[arg(long)]
    initial: Option<PathBuf>,
    /// Thermal occupation N in [0, 0.5]
    #[arg(long)]
    n_thermal: Option<f64>,
    /// Final time in 1/gamma0 units
    #[arg(long)]
    t_max: Option<f64>,
    /// Checkpoint interval in 1/gamma0 units
    #[arg(long)]
    dt: Option<f64>,
    /// Per-interval map: exact | euler
    #[arg(long)]
    method: Option<String>,
    /// Export the compiled survival projector in matrix text format
    #[arg(long)]
    emit_projector: Option<PathBuf>,

    /// Check the consistency of the survival/failure family of a
    /// repeated unitary instead of running a reliability curve
    #[arg(long)]
    check_consistency: bool,
    /// Per-interval unitary (matrix text file) for --check-consistency
    #[arg(long)]
    unitary: Option<PathBuf>,
    /// Survival projector (matrix text file) for --check-consistency
    #[arg(long)]
    event: Option<PathBuf>,
    /// Number of checkpoints for --check-consistency
    #[arg(long)]
    steps: Option<usize>,
    /// Also run the measurement-dilated family and compare weights
    #[arg(long)]
    dilate: bool,
    /// Consistency tolerance on the off-diagonal overlaps
    #[arg(long)]
    tolerance: Option<f64>,
}

pub fn run(args: &Args, ctx: &Ctx) -> Result<(), CliError> {
    if args.check_consistency {
        check_consistency(args, ctx)
    } else {
        run_curve(args, ctx)
    }
}

fn read_ket(path: &Path) -> Result<ComplexMatrix, CliError> {
    let m = read_matrix_file(path)?;
    if m.cols() != 1 {
        return Err(CliError::Usage(format!(
            "{} holds a {}x{} matrix, expected a ket (one column)",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    if (m.norm_sqr() - 1.0).abs() > 1e-10 {
        return Err(CliError::Usage(format!(
            "initial ket in {} is not normalized (norm² = {})",
            path.display(),
            m.norm_sqr()
        )));
    }
    Ok(m)
}

fn run_curve(args: &Args, ctx: &Ctx) -> Result<(), CliError> {
    let dsl_path = args
        .dsl
        .clone()
        .or_else(|| ctx.config.get_string("dsl").map(PathBuf::from))
        .ok_or_else(|| CliError::Usage("missing --dsl system file".into()))?;
    let n_thermal = resolve_n_thermal(args.n_thermal, &ctx.config)?;
    let t_max = resolve_positive(args.t_max, &ctx.config, "t-max", 5.0)?;
    let dt = resolve_positive(args.dt, &ctx.config, "dt", 1e-3)?;
    let method: StepMethod =
        resolve_string(args.method.clone(), ctx.config.get_string("method"), "exact")
            .parse()
            .map_err(|e: qrel_core::Error| CliError::Usage(e.to_string()))?;

    let text = std::fs::read_to_string(&dsl_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {}", dsl_path.display(), e)))?;
    let spec = parse_system(&text)?;

    // bindings: declaration matrix paths (relative to the DSL file),
    // overridden by --bind NAME=FILE (relative to the working directory)
    let dsl_dir = dsl_path.parent().unwrap_or(Path::new("."));
    let mut bindings: BTreeMap<String, Projector> = BTreeMap::new();
    for decl in &spec.components {
        if let Some(rel) = &decl.matrix_path {
            let m = read_matrix_file(&dsl_dir.join(rel))?;
            bindings.insert(decl.name.clone(), Projector::from_matrix(m)?);
        }
    }
    for pair in &args.bind {
        let (name, file) = pair.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--bind `{}` is not NAME=MATRIX_FILE", pair))
        })?;
        let m = read_matrix_file(Path::new(file))?;
        bindings.insert(name.to_string(), Projector::from_matrix(m)?);
    }

    let decls: Vec<(&str, usize)> =
        spec.components.iter().map(|d| (d.name.as_str(), d.dim)).collect();
    let space = ComponentSpace::new(&decls)?;
    for name in spec.expr.atoms() {
        if !bindings.contains_key(&name) {
            return Err(CliError::Usage(format!(
                "component `{}` has no survival projector; declare `matrix \"…\"` or pass --bind {}=FILE",
                name, name
            )));
        }
    }
    let survival = compile_structure(&spec.expr, &bindings, &space)?;
    if let Some(path) = &args.emit_projector {
        std::fs::write(path, write_matrix_text(survival.matrix()))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {}", path.display(), e)))?;
    }

    if space.dims().iter().any(|&d| d != 2) {
        return Err(CliError::Usage(
            "reliability curves require qubit components (dim 2) for the thermal model".into(),
        ));
    }
    let copies = space.dims().len();
    let model = independent_sum(&thermal_qubit(n_thermal)?, copies)?;

    let initial = match &args.initial {
        Some(path) => read_ket(path)?,
        None => {
            let alpha = resolve_f64(args.alpha, ctx.config.get_f64("alpha"), 1.0)?;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(CliError::Usage(format!("--alpha {} must lie in [0, 1]", alpha)));
            }
            let dim = space.total_dim();
            let mut ket = ComplexMatrix::zeros(dim, 1);
            ket[(0, 0)] = qrel_core::Complex64::new((1.0 - alpha * alpha).sqrt(), 0.0);
            ket[(dim - 1, 0)] = qrel_core::Complex64::new(alpha, 0.0);
            ket
        }
    };
    if initial.rows() != space.total_dim() {
        return Err(CliError::Usage(format!(
            "initial ket dim {} vs system dim {}",
            initial.rows(),
            space.total_dim()
        )));
    }

    let curve = reliability_curve(&model, &survival, &initial, t_max, dt, method)?;
    let mut csv = Csv::new(
        &[
            ("dsl", dsl_path.display().to_string()),
            ("n-thermal", fmt_param(n_thermal)),
            ("t-max", fmt_param(t_max)),
            ("dt", fmt_param(dt)),
            ("method", method.name().into()),
            ("gamma0", fmt_param(ctx.gamma0)),
        ],
        "t,R,err_est",
    );
    for ((t, r), err) in curve.times.iter().zip(&curve.values).zip(&curve.err_est) {
        csv.row(&[fmt_float(t / ctx.gamma0), fmt_float(*r), fmt_float(*err)]);
    }
    deliver(&csv.render()?, ctx.out.as_deref())?;
    info(
        ctx.quiet,
        ctx.csv_on_stdout(),
        &format!(
            "trajectory: {} components, survival rank {}, dt_halving_err={}",
            copies,
            survival.rank(),
            fmt_float(curve.max_err_est())
        ),
    );
    Ok(())
}

fn check_consistency(args: &Args, ctx: &Ctx) -> Result<(), CliError> {
    let unitary_path = args
        .unitary
        .clone()
        .ok_or_else(|| CliError::Usage("--check-consistency needs --unitary FILE".into()))?;
    let event_path = args
        .event
        .clone()
        .ok_or_else(|| CliError::Usage("--check-consistency needs --event FILE".into()))?;
    let initial_path = args
        .initial
        .clone()
        .ok_or_else(|| CliError::Usage("--check-consistency needs --initial FILE".into()))?;
    let steps = resolve_usize(args.steps, ctx.config.get_usize("steps"), 2)?;
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let tolerance = match args.tolerance.or(ctx.config.get_f64("tolerance")?) {
        None => None,
        Some(t) if t > 0.0 && t.is_finite() => Some(t),
        Some(t) => {
            return Err(CliError::Usage(format!("--tolerance {} must be positive", t)))
        }
    };

    let unitary = read_matrix_file(&unitary_path)?;
    let event = Projector::from_matrix(read_matrix_file(&event_path)?)?;
    let initial = read_ket(&initial_path)?;
    let times: Vec<f64> = (1..=steps).map(|k| k as f64).collect();
    let unitaries = vec![unitary.clone(); steps];

    let family = TrajectoryFamily::survival_failure(initial.clone(), times.clone(), &event)?;
    let report = consistency_matrix(&family, &unitaries, tolerance)?;

    let verdict = |ok: bool| if ok { "consistent" } else { "inconsistent" };
    println!(
        "family: {} trajectories over {} checkpoints",
        family.len(),
        steps
    );
    for (i, li) in family.labels().iter().enumerate() {
        for (j, lj) in family.labels().iter().enumerate() {
            if j > i {
                println!(
                    "overlap {} {} = {}",
                    li,
                    lj,
                    fmt_float(report.overlaps[i][j])
                );
            }
        }
    }
    println!(
        "verdict: {} (max_off_diagonal={}, tolerance={})",
        verdict(report.consistent),
        fmt_float(report.max_off_diagonal),
        fmt_param(report.tolerance)
    );

    if let Some(out) = &ctx.out {
        let mut csv = Csv::new(
            &[
                ("unitary", unitary_path.display().to_string()),
                ("event", event_path.display().to_string()),
                ("initial", initial_path.display().to_string()),
                ("steps", steps.to_string()),
            ],
            "i,j,label_i,label_j,re_overlap",
        );
        for i in 0..family.len() {
            for j in 0..family.len() {
                csv.row(&[
                    i.to_string(),
                    j.to_string(),
                    family.labels()[i].clone(),
                    family.labels()[j].clone(),
                    fmt_float(report.overlaps[i][j]),
                ]);
            }
        }
        deliver(&csv.render()?, Some(out))?;
    }

    if args.dilate {
        let (dilated, dilated_us) =
            dilate_survival_failure(&initial, &times, &event, &unitaries)?;
        let dreport = consistency_matrix(&dilated, &dilated_us, tolerance)?;
        let mut max_shift: f64 = 0.0;
        for i in 0..family.len() {
            let plain = family.trajectory(i)?;
            let dil = dilated.trajectory(i)?;
            let wp = weight(&plain, &unitaries[..plain.len()])?;
            let wd = weight(&dil, &dilated_us[..dil.len()])?;
            max_shift = max_shift.max((wp - wd).abs());
        }
        println!(
            "dilated verdict: {} (max_off_diagonal={})",
            verdict(dreport.consistent),
            fmt_float(dreport.max_off_diagonal)
        );
        println!("max_weight_shift = {}", fmt_float(max_shift));
    }
    Ok(())
}
