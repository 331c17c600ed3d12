use clap::Parser;

use qrel_core::apparatus::{
    apparatus_matrix_discrete, d_blocks, entropy_gap, failure_rate, lifetime_mean,
    ApparatusMatrix, D1Variant,
};
use qrel_core::dynamics::{independent_sum, thermal_qubit, StepMethod};
use qrel_core::events::{flip_code_projector, flip_code_state};
use qrel_core::histories::reliability_curve;

use crate::commands::{need_alpha, resolve_n_thermal, resolve_positive};
use crate::config::{resolve_string, resolve_usize};
use crate::output::{deliver, fmt_float, fmt_param, info, Csv};
use crate::{CliError, Ctx};

#[derive(Parser, Debug)]
pub struct Args {
    /// Amplitude of |111⟩ in the stored logical state
    #[arg(long)]
    alpha: Option<f64>,
    /// Thermal occupation N in [0, 0.5]
    #[arg(long)]
    n_thermal: Option<f64>,
    /// Recording horizon in 1/gamma0 units
    #[arg(long)]
    t_max: Option<f64>,
    /// Checkpoint interval for the lifetime distribution and hazard
    #[arg(long)]
    dt: Option<f64>,
    /// Checkpoints of the full interference matrix (its grid is
    /// t_max/steps wide; the full matrix costs O(steps²))
    #[arg(long)]
    steps: Option<usize>,
    /// Which matrix the primary CSV carries: discrete | continuous
    #[arg(long)]
    matrix: Option<String>,
    /// Continuous-kernel grid size (grid × grid matrix)
    #[arg(long)]
    grid: Option<usize>,
    /// Upper-left generator block: printed | ode-consistent
    #[arg(long)]
    variant: Option<String>,
    /// Also write the hazard table t,R,rho_diag,x here
    #[arg(long)]
    rate_out: Option<std::path::PathBuf>,
    /// Also write the one-row entropy summary CSV here
    #[arg(long)]
    summary_out: Option<std::path::PathBuf>,
}

pub fn run(args: &Args, ctx: &Ctx) -> Result<(), CliError> {
    let alpha = need_alpha(args.alpha, &ctx.config)?;
    let n_thermal = resolve_n_thermal(args.n_thermal, &ctx.config)?;
    let t_max = resolve_positive(args.t_max, &ctx.config, "t-max", 10.0)?;
    let dt = resolve_positive(args.dt, &ctx.config, "dt", 1e-3)?;
    let steps = resolve_usize(args.steps, ctx.config.get_usize("steps"), 200)?;
    let grid = resolve_usize(args.grid, ctx.config.get_usize("grid"), 200)?;
    let matrix_kind =
        resolve_string(args.matrix.clone(), ctx.config.get_string("matrix"), "discrete");
    if matrix_kind != "discrete" && matrix_kind != "continuous" {
        return Err(CliError::Usage(format!(
            "--matrix `{}`, expected discrete|continuous",
            matrix_kind
        )));
    }
    let variant: D1Variant = resolve_string(
        args.variant.clone(),
        ctx.config.get_string("variant"),
        "ode-consistent",
    )
    .parse()
    .map_err(|e: qrel_core::Error| CliError::Usage(e.to_string()))?;
    if steps < 2 || grid < 2 {
        return Err(CliError::Usage("--steps and --grid must be at least 2".into()));
    }

    let model = independent_sum(&thermal_qubit(n_thermal)?, 3)?;
    let survival = flip_code_projector(alpha)?;
    let psi = flip_code_state(alpha)?;

    // fine-grid lifetime distribution (diagonal record)
    let curve = reliability_curve(&model, &survival, &psi, t_max, dt, StepMethod::Exact)?;
    let weights: Vec<f64> = curve.values.windows(2).map(|w| w[0] - w[1]).collect();
    let record = ApparatusMatrix::from_failure_weights(&weights, dt)?;

    // interference matrix at the coarser checkpoint grid
    let coarse_dt = t_max / steps as f64;
    let coarse_step = StepMethod::Exact.build(&model, coarse_dt)?;
    let discrete = apparatus_matrix_discrete(&coarse_step, &survival, &psi, steps, coarse_dt)?;

    let params = [
        ("alpha", fmt_param(alpha)),
        ("n-thermal", fmt_param(n_thermal)),
        ("t-max", fmt_param(t_max)),
        ("dt", fmt_param(dt)),
        ("steps", steps.to_string()),
        ("grid", grid.to_string()),
        ("matrix", matrix_kind.clone()),
        ("variant", variant.name().into()),
        ("gamma0", fmt_param(ctx.gamma0)),
    ];

    let exported = match matrix_kind.as_str() {
        "discrete" => discrete.clone(),
        _ => {
            let blocks = d_blocks(alpha, n_thermal, variant)?;
            ApparatusMatrix::from_continuous_grid(&blocks, t_max, grid)?
        }
    };
    let mut csv = Csv::new(&params, "i,j,t_i,t_j,re,im");
    let dense = exported.dense();
    for i in 0..exported.dim() {
        for j in 0..exported.dim() {
            csv.row(&[
                i.to_string(),
                j.to_string(),
                fmt_float(exported.times()[i] / ctx.gamma0),
                fmt_float(exported.times()[j] / ctx.gamma0),
                fmt_float(dense[(i, j)].re),
                fmt_float(dense[(i, j)].im),
            ]);
        }
    }
    deliver(&csv.render()?, ctx.out.as_deref())?;

    // summary built from the physically valid records
    let mean = lifetime_mean(&record).map(|m| m / ctx.gamma0);
    let gap = entropy_gap(&discrete);
    match (&mean, &gap) {
        (Ok(mean), Ok(gap)) => {
            let lines = [
                format!("mean_lifetime={}", fmt_float(*mean)),
                format!("trace_unnormalized={}", fmt_float(record.trace())),
                format!("s_shannon={}", fmt_float(gap.s_shannon)),
                format!("s_von_neumann={}", fmt_float(gap.s_von_neumann)),
                format!("gap={}", fmt_float(gap.gap)),
            ];
            for line in &lines {
                info(ctx.quiet, ctx.csv_on_stdout(), line);
            }
            if let Some(path) = &args.summary_out {
                let mut csv = Csv::new(&params, "alpha,n_thermal,s_shannon,s_von_neumann,gap");
                csv.row(&[
                    format!("{:?}", alpha),
                    format!("{:?}", n_thermal),
                    fmt_float(gap.s_shannon),
                    fmt_float(gap.s_von_neumann),
                    fmt_float(gap.gap),
                ]);
                deliver(&csv.render()?, Some(path))?;
            }
        }
        _ => {
            // dark state: no failure weight, lifetime and entropies undefined
            info(ctx.quiet, ctx.csv_on_stdout(), "mean_lifetime=undefined (no failure weight)");
            if let Some(path) = &args.summary_out {
                let mut csv = Csv::new(&params, "alpha,n_thermal,s_shannon,s_von_neumann,gap");
                csv.row(&[
                    format!("{:?}", alpha),
                    format!("{:?}", n_thermal),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                deliver(&csv.render()?, Some(path))?;
            }
        }
    }

    if let Some(path) = &args.rate_out {
        let hazard = failure_rate(&record, &curve)?;
        let mut csv = Csv::new(&params, "t,R,rho_diag,x");
        let diag = record.diagonal();
        for (c, x) in hazard.iter().enumerate().take(record.dim() - 1) {
            csv.row(&[
                fmt_float(record.times()[c] / ctx.gamma0),
                fmt_float(curve.values[c + 1]),
                fmt_float(diag[c]),
                x.map(fmt_float).unwrap_or_default(),
            ]);
        }
        deliver(&csv.render()?, Some(path))?;
    }
    Ok(())
}
