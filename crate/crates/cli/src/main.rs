use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpad_core::codes::{
    diffusion_check, single_flip_detectable, CodeFamily, Codec, ConvCodec, MmChecksumCodec, MmCodec,
};
use qpad_core::protocol::TraceLog;
use qpad_core::sim::{
    estimate_detection, exact_oracle, matrix_from_seed, run_scenario, ConfigError, Pairing,
    ScenarioConfig,
};
use qpad_core::{Bitstring, ReceivedWord, RngStream};

#[derive(Parser)]
#[command(name = "qpad", version, about = "Quantum one-time-pad reuse simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and print summary statistics as JSON.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write stats here instead of stdout; CSV when the name ends in `.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the newline-delimited JSON event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write stats as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Detection probability against the number of intercepted photons.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Range such as `k=1..16` (inclusive).
        #[arg(long)]
        param: String,
        #[arg(long, default_value = "unpaired")]
        pairing: Pairing,
    },
    /// Cross-check exact oracles against Monte Carlo and run code self-checks.
    Verify {
        #[arg(long, default_value_t = 8)]
        max_k: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Generate an admissible diffusive matrix and write it as hex text.
    GenMatrix {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Check(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            trials,
            seed,
            out,
            trace,
            csv,
        } => run(&scenario, trials, seed, out, trace, csv),
        Command::Sweep {
            scenario,
            param,
            pairing,
        } => sweep(&scenario, &param, pairing),
        Command::Verify {
            max_k,
            trials,
            seed,
        } => verify(max_k, trials, seed),
        Command::GenMatrix { n, seed, out } => gen_matrix(n, seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg = ScenarioConfig::from_json(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(
    path: &Path,
    trials: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    trace: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = load(path)?;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let result = run_scenario(&cfg, trace.is_some())?;
    let json = result.stats.to_json() + "\n";
    match out {
        Some(p) if p.extension().is_some_and(|e| e == "csv") => fs::write(p, result.stats.to_csv())?,
        Some(p) => fs::write(p, json)?,
        None => io::stdout().write_all(json.as_bytes())?,
    }
    if let Some(p) = trace {
        let f = io::BufWriter::new(fs::File::create(p)?);
        TraceLog::write_ndjson(&result.trace, f)?;
    }
    if let Some(p) = csv {
        fs::write(p, result.stats.to_csv())?;
    }
    Ok(())
}

fn parse_range(param: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Config(format!("expected --param k=A..B, got `{param}`"));
    let range = param.strip_prefix("k=").ok_or_else(bad)?;
    let (a, b) = range.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn sweep(path: &Path, param: &str, pairing: Pairing) -> Result<(), Failure> {
    let cfg = load(path)?;
    let (lo, hi) = parse_range(param)?;
    let code = cfg.build_code()?;
    let mut out = String::from("k,pairing,detection,ci_low,ci_high,trials,exact,bound_075\n");
    for k in lo..=hi {
        if pairing == Pairing::Paired && k % 2 == 1 {
            continue;
        }
        let e = estimate_detection(k, pairing, &code, cfg.trials, cfg.master_seed.wrapping_add(k as u64))
            .map_err(|e| Failure::Config(e.to_string()))?;
        let exact = exact_oracle(k, pairing, &code)
            .map(|r| format!("{:.6}", *r.numer() as f64 / *r.denom() as f64))
            .unwrap_or_default();
        out += &format!(
            "{k},{},{:.6},{:.6},{:.6},{},{exact},{:.6}\n",
            if pairing == Pairing::Paired { "paired" } else { "unpaired" },
            e.estimate,
            e.ci_low,
            e.ci_high,
            e.trials,
            1.0 - 0.75f64.powi(k as i32)
        );
    }
    io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn verify(max_k: usize, trials: u64, seed: u64) -> Result<(), Failure> {
    let n = max_k.max(8);
    let mut failures = Vec::new();
    let codes: [CodeFamily; 2] = [MmCodec::new(n).into(), MmChecksumCodec::new(n).into()];
    for code in &codes {
        for pairing in [Pairing::Unpaired, Pairing::Paired] {
            for k in 0..=max_k {
                if pairing == Pairing::Paired && k % 2 == 1 {
                    continue;
                }
                let exact = exact_oracle(k, pairing, code).map_err(|e| Failure::Config(e.to_string()))?;
                let p = *exact.numer() as f64 / *exact.denom() as f64;
                let est = estimate_detection(k, pairing, code, trials, seed ^ (k as u64) << 8)
                    .map_err(|e| Failure::Config(e.to_string()))?;
                let ok = est.agrees_with(p, 3.0);
                println!(
                    "{} {:<11} {:?} k={k}: exact {p:.6} monte-carlo {:.6}",
                    if ok { "ok  " } else { "FAIL" },
                    code.name(),
                    pairing,
                    est.estimate
                );
                if !ok {
                    failures.push(format!("{} {pairing:?} k={k}", code.name()));
                }
            }
        }
    }
    for (name, ok) in code_self_checks(seed) {
        println!("{} {name}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            failures.push(name);
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failures.join(", ")))
    }
}

fn code_self_checks(seed: u64) -> Vec<(String, bool)> {
    let mut checks = Vec::new();
    let round_trip = |code: &dyn Codec| {
        (0..1u64 << code.message_len()).all(|v| {
            let m = Bitstring::from_u64(v, code.message_len());
            code.decode(&ReceivedWord::from(&code.encode(&m))).message() == Some(&m)
        })
    };
    checks.push((
        "mm round trip n<=8".to_string(),
        (1..=8).all(|n| round_trip(&MmCodec::new(n))),
    ));
    checks.push((
        "mm_checksum round trip n<=8".to_string(),
        (1..=8).all(|n| round_trip(&MmChecksumCodec::new(n))),
    ));
    let mut rng = RngStream::new(seed, 77);
    let conv = ConvCodec::with_default_threshold(64);
    checks.push((
        "conv clean round trip".to_string(),
        (0..200).all(|_| {
            let m = Bitstring::random(64, &mut rng);
            conv.decode(&ReceivedWord::from(&conv.encode(&m))).message() == Some(&m)
        }),
    ));
    let diffusive_ok = (0..10).all(|i| match matrix_from_seed(16, seed.wrapping_add(i)) {
        Ok(a) => {
            a.determinant()
                && single_flip_detectable(&a)
                && diffusion_check(&a, 4, 1000, &mut rng)
        }
        Err(_) => false,
    });
    checks.push(("diffusive admission n=16".to_string(), diffusive_ok));
    checks
}

fn gen_matrix(n: usize, seed: u64, out: &Path) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::Config("n must be positive".into()));
    }
    let a = matrix_from_seed(n, seed).map_err(|e| Failure::Config(e.to_string()))?;
    fs::write(out, a.to_hex_text())?;
    Ok(())
}
