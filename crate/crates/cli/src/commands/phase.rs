use clap::Parser;

use qrel_core::flipcode::{phase_diagram, FtClass};

use crate::commands::{parse_grid, resolve_positive};
use crate::config::{resolve_string, resolve_usize};
use crate::output::{deliver, fmt_float, fmt_param, info, Csv};
use crate::{CliError, Ctx};

#[derive(Parser, Debug)]
pub struct Args {
    /// Alpha grid as min:max:count
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Thermal-occupation grid as min:max:count
    #[arg(long)]
    n_grid: Option<String>,
    /// Scan horizon in 1/gamma0 units (extended internally when R_P
    /// decays too slowly)
    #[arg(long)]
    t_max: Option<f64>,
    /// Log-spaced time samples per classification
    #[arg(long)]
    samples: Option<usize>,
}

pub fn run(args: &Args, ctx: &Ctx) -> Result<(), CliError> {
    let alpha_spec = resolve_string(
        args.alpha_grid.clone(),
        ctx.config.get_string("alpha-grid"),
        "0:1:21",
    );
    let n_spec =
        resolve_string(args.n_grid.clone(), ctx.config.get_string("n-grid"), "0:0.5:6");
    let alpha_grid = parse_grid(&alpha_spec, "alpha-grid")?;
    let n_grid = parse_grid(&n_spec, "n-grid")?;
    if alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(CliError::Usage(format!("--alpha-grid {} leaves [0, 1]", alpha_spec)));
    }
    if n_grid.iter().any(|n| !(0.0..=0.5).contains(n)) {
        return Err(CliError::Usage(format!("--n-grid {} leaves [0, 0.5]", n_spec)));
    }
    let t_max = resolve_positive(args.t_max, &ctx.config, "t-max", 20.0)?;
    let samples = resolve_usize(args.samples, ctx.config.get_usize("samples"), 2000)?;
    if samples < 16 {
        return Err(CliError::Usage(format!("--samples {} must be at least 16", samples)));
    }

    let rows = phase_diagram(&alpha_grid, &n_grid, t_max, samples)?;
    let mut csv = Csv::new(
        &[
            ("alpha-grid", alpha_spec),
            ("n-grid", n_spec),
            ("t-max", fmt_param(t_max)),
            ("samples", samples.to_string()),
        ],
        "alpha,n_thermal,class,r_c",
    );
    let mut ft_count = 0usize;
    for row in &rows {
        let (class, r_c) = match row.class {
            FtClass::Ft { r_c } => {
                ft_count += 1;
                ("FT", fmt_float(r_c))
            }
            FtClass::Nft => ("NFT", String::new()),
        };
        csv.row(&[
            format!("{:?}", row.alpha),
            format!("{:?}", row.n_thermal),
            class.to_string(),
            r_c,
        ]);
    }
    deliver(&csv.render()?, ctx.out.as_deref())?;
    info(
        ctx.quiet,
        ctx.csv_on_stdout(),
        &format!("phase: {} points, {} FT", rows.len(), ft_count),
    );
    Ok(())
}
