use crate::error::CliError;
use respiro::eval::{kl_divergence, EvalError};
use respiro::io::{read_pmf, write_report, MetricValue, Report};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// PMF file for the observed distribution p (one mass per line)
    pub p: PathBuf,
    /// PMF file for the model distribution q
    pub q: PathBuf,
    /// Optional report JSON output
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let p = read_pmf(&args.p)?;
    let q = read_pmf(&args.q)?;
    let bits = match kl_divergence(&p, &q) {
        Ok(bits) => bits,
        // mathematically the divergence exists and is infinite; report it
        Err(EvalError::InfiniteDivergence { index }) => {
            println!("kl_bits=inf (p[{index}] > 0 where q[{index}] = 0)");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    println!("kl_bits={bits}");
    if let Some(path) = &args.report {
        let report = Report::new("kl-divergence")
            .with_metric("kl", MetricValue::new(bits, "bits"))
            .with_metric("support", MetricValue::new(p.len() as f64, "count"));
        write_report(path, &report)?;
    }
    Ok(())
}
