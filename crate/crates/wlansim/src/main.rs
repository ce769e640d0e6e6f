use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use wlansim::runner::{self, RunError};
use wlansim::scenario;
use wlansim::stats;

#[derive(Parser)]
#[command(
    name = "wlansim",
    version,
    about = "Discrete-event CSMA/CA WLAN simulator with analytic cross-checks"
)]
struct Cli {
    /// Scenario CSV path (omit when --sweep-wlans generates its own)
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// Simulated duration per run, seconds
    #[arg(long, default_value_t = 10.0)]
    time: f64,

    /// Master RNG seed for single runs; sweeps take --seeds
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output directory; results are always printed to stdout too
    #[arg(long)]
    out: Option<PathBuf>,

    /// Per-node state-transition log
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    logs: Switch,

    /// Event trace
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    trace: Switch,

    #[arg(long, value_enum, default_value_t = Mode::Simulate)]
    mode: Mode,

    /// Density sweep over auto-generated fully-overlapping scenarios:
    /// inclusive range "2..10" or explicit list "1,2,5,10,20,50"
    #[arg(long, value_name = "A..B")]
    sweep_wlans: Option<String>,

    /// Comma-separated seeds; with --scenario this sweeps seeds instead
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    Simulate,
    OracleBianchi,
    OracleCtmn,
    Compare,
}

/// Failure with the exit code it maps to: 2 for bad input, 3 for runtime.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn input(msg: impl Into<String>) -> Fail {
        Fail { code: 2, msg: msg.into() }
    }

    fn runtime(msg: impl Into<String>) -> Fail {
        Fail { code: 3, msg: msg.into() }
    }
}

impl From<RunError> for Fail {
    fn from(e: RunError) -> Fail {
        if e.is_input_error() {
            Fail::input(e.to_string())
        } else {
            Fail::runtime(e.to_string())
        }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Fail {
        Fail::runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            // Single line, machine-parsable.
            eprintln!("error: {}", f.msg.replace('\n', " | "));
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Fail> {
    if cli.time <= 0.0 || !cli.time.is_finite() {
        return Err(Fail::input(format!("--time must be positive, got {}", cli.time)));
    }
    let out = match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            probe_writable(dir)?;
            Some(dir.as_path())
        }
        None => None,
    };

    if let Some(axis) = &cli.sweep_wlans {
        if cli.scenario.is_some() {
            return Err(Fail::input("--sweep-wlans generates its own scenarios; drop --scenario"));
        }
        if cli.mode != Mode::Simulate {
            return Err(Fail::input("--sweep-wlans only supports --mode simulate"));
        }
        let ns = parse_axis(axis)?;
        let seeds = cli.seeds.clone().unwrap_or_else(|| vec![cli.seed]);
        let points = runner::sweep_density(&ns, &seeds, cli.time)?;
        return finish_sweep(&points, out);
    }

    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| Fail::input("--scenario is required unless --sweep-wlans is given"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Fail::input(format!("cannot read scenario {}: {e}", path.display())))?;
    let (sc, warnings) = scenario::parse_csv(&text).map_err(RunError::from)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    scenario::validate(&sc).map_err(RunError::from)?;

    match cli.mode {
        Mode::Simulate => {
            if let Some(seeds) = cli.seeds.as_ref().filter(|s| s.len() > 1) {
                let points = runner::sweep_seeds(&sc, seeds, cli.time)?;
                return finish_sweep(&points, out);
            }
            let seed = cli.seeds.as_ref().and_then(|s| s.first().copied()).unwrap_or(cli.seed);
            let o = runner::simulate(&sc, seed, cli.time, cli.trace.on(), cli.logs.on())?;
            print!("{}", o.stats_csv);
            if let Some(dir) = out {
                fs::write(dir.join("stats.csv"), &o.stats_csv)?;
                if let Some(t) = &o.trace_csv {
                    fs::write(dir.join("trace.csv"), t)?;
                }
                if let Some(l) = &o.node_log {
                    fs::write(dir.join("nodes.log"), l)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Mode::OracleBianchi => {
            let rows = runner::bianchi_stats(&sc)?;
            emit(&stats::to_csv(&rows), out, "oracle_bianchi.csv")
        }
        Mode::OracleCtmn => {
            let rows = runner::ctmn_stats(&sc)?;
            emit(&stats::to_csv(&rows), out, "oracle_ctmn.csv")
        }
        Mode::Compare => {
            let (table, outcome) = runner::compare_with_ctmn(&sc, cli.seed, cli.time)?;
            print!("{}", table.to_csv());
            if let Some(dir) = out {
                fs::write(dir.join("compare.csv"), table.to_csv())?;
                fs::write(dir.join("stats.csv"), &outcome.stats_csv)?;
            }
            if table.within_tolerance() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "error: simulated throughput deviates from the analytic chain by more than {:.0}%",
                    runner::COMPARE_TOLERANCE * 100.0
                );
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn emit(csv: &str, out: Option<&Path>, name: &str) -> Result<ExitCode, Fail> {
    print!("{csv}");
    if let Some(dir) = out {
        fs::write(dir.join(name), csv)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn finish_sweep(points: &[runner::SweepPoint], out: Option<&Path>) -> Result<ExitCode, Fail> {
    let csv = runner::sweep_csv(points);
    print!("{csv}");
    if let Some(dir) = out {
        fs::write(dir.join("sweep.csv"), &csv)?;
        for p in points {
            for (seed, o) in &p.outcomes {
                let sub = dir.join(format!("{}_seed{}", p.label.replace('=', ""), seed));
                fs::create_dir_all(&sub)?;
                fs::write(sub.join("stats.csv"), &o.stats_csv)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// "A..B" inclusive, or "a,b,c" explicit. Every point needs 1..=64 WLANs.
fn parse_axis(s: &str) -> Result<Vec<u32>, Fail> {
    let ns: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a
            .trim()
            .parse()
            .map_err(|_| Fail::input(format!("bad sweep bound {a:?}")))?;
        let b: u32 = b
            .trim()
            .parse()
            .map_err(|_| Fail::input(format!("bad sweep bound {b:?}")))?;
        if a > b {
            return Err(Fail::input(format!("empty sweep range {s:?}")));
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| Fail::input(format!("bad sweep point {t:?}"))))
            .collect::<Result<_, _>>()?
    };
    if ns.is_empty() {
        return Err(Fail::input("sweep axis is empty"));
    }
    if let Some(bad) = ns.iter().find(|&&n| n == 0 || n > 64) {
        return Err(Fail::input(format!("sweep point {bad} outside 1..=64")));
    }
    Ok(ns)
}

fn probe_writable(dir: &Path) -> Result<(), Fail> {
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"")
        .map_err(|e| Fail::runtime(format!("output directory {} not writable: {e}", dir.display())))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}
