use clap::Parser;

use qrel_core::dynamics::{thermal_qubit, StepMethod};
use qrel_core::events::Projector;
use qrel_core::flipcode::{r_physical, CodeParams};
use qrel_core::histories::reliability_curve;

use crate::commands::{need_alpha, resolve_n_thermal, resolve_positive};
use crate::config::resolve_string;
use crate::output::{deliver, fmt_float, fmt_param, info, Csv};
use crate::{CliError, Ctx};

#[derive(Parser, Debug)]
pub struct Args {
    /// Amplitude of |1⟩ in the stored state (beta = sqrt(1 - alpha^2))
    #[arg(long)]
    alpha: Option<f64>,
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
}

pub fn run(args: &Args, ctx: &Ctx) -> Result<(), CliError> {
    let alpha = need_alpha(args.alpha, &ctx.config)?;
    let n_thermal = resolve_n_thermal(args.n_thermal, &ctx.config)?;
    let t_max = resolve_positive(args.t_max, &ctx.config, "t-max", 5.0)?;
    let dt = resolve_positive(args.dt, &ctx.config, "dt", 1e-3)?;
    let method: StepMethod =
        resolve_string(args.method.clone(), ctx.config.get_string("method"), "exact")
            .parse()
            .map_err(|e: qrel_core::Error| CliError::Usage(e.to_string()))?;

    let params = CodeParams::new(alpha, n_thermal)?;
    let model = thermal_qubit(n_thermal)?;
    let psi = params.single_qubit_state();
    let survival = Projector::onto_ket(&psi)?;
    let mut curve = reliability_curve(&model, &survival, &psi, t_max, dt, method)?;
    curve.alpha = Some(alpha);
    curve.n_thermal = Some(n_thermal);

    let mut csv = Csv::new(
        &[
            ("alpha", fmt_param(alpha)),
            ("n-thermal", fmt_param(n_thermal)),
            ("t-max", fmt_param(t_max)),
            ("dt", fmt_param(dt)),
            ("method", method.name().into()),
            ("gamma0", fmt_param(ctx.gamma0)),
        ],
        "t,R,R_closed,abs_diff",
    );
    for (t, r) in curve.times.iter().zip(&curve.values) {
        let closed = r_physical(*t, &params);
        csv.row(&[
            fmt_float(t / ctx.gamma0),
            fmt_float(*r),
            fmt_float(closed),
            fmt_float((r - closed).abs()),
        ]);
    }
    deliver(&csv.render()?, ctx.out.as_deref())?;
    info(
        ctx.quiet,
        ctx.csv_on_stdout(),
        &format!(
            "physical: M={} dt_halving_err={}",
            fmt_float(qrel_core::flipcode::coeff_m(&params)),
            fmt_float(curve.max_err_est())
        ),
    );
    Ok(())
}
