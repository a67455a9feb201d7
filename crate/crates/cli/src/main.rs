//! Command-line front end: theory evaluation, curve sweeps, count simulation,
//! table analysis, and optics verification.
//!
//! Data goes to `--out` (or standard output); diagnostics go to standard
//! error. Every command is deterministic given its flags and seed.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use seqrac_core::expsim::{analyze_table, simulate_counts, CountTable};
use seqrac_core::optics::verify_angle_table;
use seqrac_core::protocol::{
    eta_lower_bound, eta_upper_bound, inverse_tradeoff_bound, three_receiver_no_go,
    tradeoff_bound, witness_abc, witness_chain, CLASSICAL_LIMIT, SECURITY_CROSSING,
};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "seqrac",
    about = "Sequential quantum random access codes: theory, photonic model, and count analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form decoding witnesses at one strength.
    Theory {
        /// Measurement strength of the intermediate decoder, in [0, 1].
        #[arg(long)]
        eta: f64,
        /// Number of sequential receivers; beyond the first, all but the
        /// last reuse --eta and the last measures at full strength.
        #[arg(long, default_value_t = 2)]
        receivers: usize,
    },
    /// Write the theory curves over an equally spaced strength grid as CSV.
    Sweep {
        /// Number of grid points (at least 2).
        #[arg(long)]
        steps: usize,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a synthetic coincidence-count table as CSV.
    Simulate {
        /// Measurement strength, in [0, 1].
        #[arg(long)]
        eta: f64,
        /// Mean total coincidences per settings group.
        #[arg(long, default_value_t = 8000.0)]
        mean_counts: f64,
        /// RNG seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate witnesses, error bars and strength bounds from a count table.
    Analyze {
        /// Count-table CSV to analyze.
        #[arg(long)]
        counts: PathBuf,
        /// Bootstrap resamples per strength setting.
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        /// RNG seed for the bootstrap.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path for the JSON results; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a settings table against the protocol predictions.
    VerifyOptics {
        /// Settings/count CSV carrying the plate-angle columns.
        #[arg(long)]
        table: PathBuf,
        /// Strengths to verify at (comma separated); defaults to the
        /// strength settings present in the table.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        etas: Option<Vec<f64>>,
    },
    /// Strength bounds and trade-off values from observed witnesses.
    Bounds {
        /// Observed first-decoder witness.
        #[arg(long)]
        wab: Option<f64>,
        /// Observed second-decoder witness.
        #[arg(long)]
        wac: Option<f64>,
    },
    /// Ceiling on a third receiver's witness when the first two are
    /// nonclassical.
    NoGo,
}

fn main() {
    reset_sigpipe();
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

/// Die quietly when a downstream pipe closes instead of panicking mid-print.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Theory { eta, receivers } => theory(eta, receivers),
        Command::Sweep { steps, out } => sweep(steps, out.as_deref()),
        Command::Simulate {
            eta,
            mean_counts,
            seed,
            out,
        } => simulate(eta, mean_counts, seed, out.as_deref()),
        Command::Analyze {
            counts,
            resamples,
            seed,
            out,
        } => analyze(&counts, resamples, seed, out.as_deref()),
        Command::VerifyOptics { table, etas } => verify_optics(&table, etas),
        Command::Bounds { wab, wac } => bounds(wab, wac),
        Command::NoGo => no_go(),
    }
}

fn check_strength(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
        bail!("--eta must lie in [0, 1], got {eta}");
    }
    Ok(())
}

fn flag(nonclassical: bool) -> &'static str {
    if nonclassical {
        "nonclassical (> 3/4)"
    } else {
        ""
    }
}

fn theory(eta: f64, receivers: usize) -> Result<()> {
    check_strength(eta)?;
    if receivers == 0 {
        bail!("--receivers must be at least 1");
    }
    let mut strengths = vec![eta; receivers.saturating_sub(1)];
    if receivers >= 2 {
        strengths.push(1.0);
    } else {
        strengths = vec![eta];
    }
    let chain = witness_chain(&strengths)?;

    println!("eta        = {eta:.6}");
    if receivers == 2 {
        println!("W_AB       = {:.6}  {}", chain[0], flag(chain[0] > CLASSICAL_LIMIT));
        println!("W_AC       = {:.6}  {}", chain[1], flag(chain[1] > CLASSICAL_LIMIT));
        println!("W_ABC      = {:.6}", witness_abc(eta));
    } else {
        for (k, w) in chain.iter().enumerate() {
            println!(
                "W_AR{:<2}     = {:.6}  {}",
                k + 1,
                w,
                flag(*w > CLASSICAL_LIMIT)
            );
        }
    }
    Ok(())
}

fn open_output(out: Option<&std::path::Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(
            std::fs::File::create(path)
                .with_context(|| format!("cannot write {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn sweep(steps: usize, out: Option<&std::path::Path>) -> Result<()> {
    if steps < 2 {
        bail!("--steps must be at least 2");
    }
    let mut writer = open_output(out)?;
    writeln!(writer, "eta,w_ab,w_ac,w_abc,tradeoff_bound")?;
    for i in 0..steps {
        let eta = i as f64 / (steps - 1) as f64;
        let pair = witness_chain(&[eta, 1.0])?;
        writeln!(
            writer,
            "{eta},{},{},{},{}",
            pair[0],
            pair[1],
            witness_abc(eta),
            tradeoff_bound(pair[0])?,
        )?;
    }
    writer.flush()?;
    Ok(())
}

fn simulate(eta: f64, mean_counts: f64, seed: u64, out: Option<&std::path::Path>) -> Result<()> {
    check_strength(eta)?;
    let table = simulate_counts(eta, mean_counts, seed)?;
    eprintln!("# {}", table.exposure_note);
    table.to_writer(open_output(out)?)?;
    Ok(())
}

fn analyze(
    counts: &std::path::Path,
    resamples: usize,
    seed: u64,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let table = CountTable::from_csv_path(counts)
        .with_context(|| format!("cannot read {}", counts.display()))?;
    let result = analyze_table(&table, resamples, seed)?;
    for skipped in &result.skipped {
        eprintln!("warning: skipped eta_set={}: {}", skipped.eta_set, skipped.reason);
    }
    result.write_json(open_output(out)?)?;
    Ok(())
}

fn verify_optics(table: &std::path::Path, etas: Option<Vec<f64>>) -> Result<()> {
    let counts = CountTable::from_csv_path(table)
        .with_context(|| format!("cannot read {}", table.display()))?;
    let rows = counts.settings_rows()?;
    let strengths = match etas {
        Some(list) => list,
        None => counts.eta_sets(),
    };
    for &eta in &strengths {
        check_strength(eta).context("--etas")?;
    }
    let report = verify_angle_table(&rows, &strengths)?;
    println!(
        "verified {} rows x {} strengths = {} checks, max deviation {:.3e}",
        rows.len(),
        strengths.len(),
        report.checks,
        report.max_deviation()
    );
    for failure in report.failures() {
        let b = failure.row.bits();
        println!(
            "MISMATCH row (x0={} x1={} y={} b={} z={} c={}): deviation {:.3e} at eta={}",
            b[0], b[1], b[2], b[3], b[4], b[5], failure.max_deviation, failure.worst_strength
        );
    }
    if report.passed() {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        bail!("{} of 64 rows disagree with the protocol predictions", report.failures().count());
    }
}

fn bounds(wab: Option<f64>, wac: Option<f64>) -> Result<()> {
    if wab.is_none() && wac.is_none() {
        bail!("provide --wab and/or --wac");
    }
    if let Some(w) = wab {
        let lower = eta_lower_bound(w).context("--wab")?;
        let ceiling = tradeoff_bound(w).context("--wab")?;
        println!("eta_low               = {lower:.6}");
        println!("tradeoff bound W_AC  <= {ceiling:.6}");
    }
    if let Some(w) = wac {
        let upper = eta_upper_bound(w).context("--wac")?;
        let ceiling = inverse_tradeoff_bound(w).context("--wac")?;
        println!("eta_up                = {upper:.6}");
        println!("inverse bound W_AB   <= {ceiling:.6}");
        println!(
            "SDI-QKD crossing      = {} (threshold {:.6})",
            if w > SECURITY_CROSSING { "yes" } else { "no" },
            SECURITY_CROSSING
        );
    }
    Ok(())
}

fn no_go() -> Result<()> {
    let best = three_receiver_no_go();
    println!("max third-receiver witness = {best:.6}");
    println!("gap to classical limit     = {:.6}", CLASSICAL_LIMIT - best);
    println!(
        "feasibility corner: eta_1 > {:.6}, eta_2 > {:.6}",
        FRAC_1_SQRT_2,
        2.0 * (SQRT_2 - 1.0)
    );
    Ok(())
}
