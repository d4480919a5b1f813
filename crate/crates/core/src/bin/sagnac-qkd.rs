use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sagnac_qkd::harness::{
    self, calibrate, default_fringe_grid, load_scenario, output, parse_grid, sweep, Axis, CalibrationTargets,
    QberKnob, RateKnob, RunReport, Scenario,
};
use sagnac_qkd::loopnet::{detect_disturbance, Verdict, DEFAULT_DISTURBANCE_THRESHOLD};
use sagnac_qkd::Error;

/// Sagnac-loop BB84 simulator.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of pulses.
    #[arg(long, global = true)]
    pulses: Option<u64>,
    /// CSV output path (stdout if absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the per-pulse transcript CSV here.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session.
    Run { scenario: PathBuf },
    /// Fit the scenario to a raw rate and QBER; prints the fitted scenario.
    Calibrate {
        scenario: PathBuf,
        #[arg(long)]
        target_raw: f64,
        #[arg(long)]
        target_qber: f64,
        #[arg(long, value_enum, default_value = "extra-transmittance")]
        rate_knob: RateArg,
        #[arg(long, value_enum, default_value = "misalignment")]
        qber_knob: QberArg,
        /// Where to write the fitted scenario (stdout if absent).
        #[arg(long)]
        fitted: Option<PathBuf>,
    },
    /// One session per grid point.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        axis: String,
        /// `start:stop:n` or `a,b,c`.
        #[arg(long)]
        grid: String,
    },
    /// Session between Bob and one ring entity.
    NetRun {
        scenario: PathBuf,
        #[arg(long)]
        partner: String,
        #[arg(long, default_value_t = DEFAULT_DISTURBANCE_THRESHOLD)]
        threshold: f64,
    },
    /// Detection probabilities against the phase difference.
    Fringe {
        scenario: PathBuf,
        #[arg(long, default_value_t = 360)]
        points: usize,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RateArg {
    ExtraTransmittance,
    Efficiency,
    Mu,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum QberArg {
    Misalignment,
    DarkProb,
}

fn sink(path: &Option<PathBuf>) -> sagnac_qkd::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(path: &Path, c: &Common) -> sagnac_qkd::Result<Scenario> {
    let mut s = load_scenario(path)?;
    if let Some(seed) = c.seed {
        s.seed = seed;
    }
    if let Some(n) = c.pulses {
        s.protocol.pulses = n;
    }
    s.validate()?;
    Ok(s)
}

fn summarize(r: &RunReport) {
    let s = &r.stats;
    eprintln!("scenario digest {}  seed {}", r.digest, r.seed);
    eprintln!("seed policy: pulse i draws from ChaCha8 keyed by SHA-256(seed, substream), stream i");
    eprintln!(
        "pulses {}  sifted {}  errors {}  raw rate {:.1} Hz (expected {:.1})",
        s.pulses_sent, s.sifted_bits, s.errors, s.raw_rate, r.expected.raw_rate
    );
    match (s.qber, s.qber_interval) {
        (Some(q), Some((lo, hi))) => eprintln!("qber {:.5}  95% [{:.5}, {:.5}]", q, lo, hi),
        _ => eprintln!("qber undefined (no sifted bits sampled)"),
    }
    if r.timing.conflict {
        eprintln!(
            "warning: CW/CCW pulses overlap at Alice's modulator ({:.3e} s apart)",
            r.timing.separation_at_alice_s
        );
    }
    eprintln!("wall clock {:.3} s", r.wall_clock.as_secs_f64());
}

fn session(s: &Scenario, c: &Common) -> sagnac_qkd::Result<RunReport> {
    let report = harness::run(s)?;
    summarize(&report);
    output::write_run(&report, sink(&c.out)?)?;
    if let Some(path) = &c.transcript {
        let records = harness::transcript(s, s.protocol.pulses)?;
        output::write_transcript(&records, BufWriter::new(File::create(path)?))?;
    }
    Ok(report)
}

fn execute(cli: Cli) -> sagnac_qkd::Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Run { scenario } => {
            session(&load(scenario, c)?, c)?;
        }
        Command::NetRun {
            scenario,
            partner,
            threshold,
        } => {
            let s = load(scenario, c)?.with_partner(partner)?;
            let report = session(&s, c)?;
            let verdict = detect_disturbance(&report.stats, *threshold);
            eprintln!("partner {partner}: {verdict:?}");
            if verdict == Verdict::Disturbed {
                eprintln!("QBER above {threshold}: treat the link as eavesdropped");
            }
        }
        Command::Calibrate {
            scenario,
            target_raw,
            target_qber,
            rate_knob,
            qber_knob,
            fitted,
        } => {
            let s = load(scenario, c)?;
            let rate = match rate_knob {
                RateArg::ExtraTransmittance => RateKnob::ExtraTransmittance,
                RateArg::Efficiency => RateKnob::Efficiency,
                RateArg::Mu => RateKnob::Mu,
            };
            let qber = match qber_knob {
                QberArg::Misalignment => QberKnob::Misalignment,
                QberArg::DarkProb => QberKnob::DarkProb,
            };
            let targets = CalibrationTargets {
                raw_rate: *target_raw,
                qber: *target_qber,
            };
            let fit = calibrate(&s, targets, rate, qber)?;
            eprintln!(
                "fitted {rate:?} = {:.9e}, {qber:?} = {:.9e} in {} rounds; per-pulse sifted probability {:.9e}, visibility {:?}",
                fit.rate_value, fit.qber_value, fit.rounds, fit.expected.p_sift, fit.visibility
            );
            let mut w = sink(fitted)?;
            w.write_all(output::calibrated_toml(&fit).as_bytes())?;
            w.flush()?;
            if c.out.is_some() || c.transcript.is_some() {
                session(&fit.scenario, c)?;
            }
        }
        Command::Sweep { scenario, axis, grid } => {
            let s = load(scenario, c)?;
            let axis: Axis = axis.parse()?;
            let grid = parse_grid(grid)?;
            eprintln!("every point runs with seed {}", s.seed);
            let result = sweep(&s, axis, &grid)?;
            output::write_sweep(&result, sink(&c.out)?)?;
        }
        Command::Fringe { scenario, points } => {
            if *points == 0 {
                return Err(Error::Scenario("--points must be >= 1".into()));
            }
            let s = load(scenario, c)?;
            let f = harness::fringe(&s, &default_fringe_grid(*points))?;
            output::write_fringe(&f, sink(&c.out)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| execute(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
        Err(_) => ExitCode::from(2),
    }
}
