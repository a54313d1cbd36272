//! `balise`: key generation, balise programming and verification, and stop
//! control simulation.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 timeout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use balise::auth::{encode_authenticated, verify_and_decode, Keystore, VerifyError};
use balise::sim::{run_scenario, ScenarioConfig, SimError, SimResult};
use balise::telegram::{
    derive_scrambling_key_legacy, BaliseId, Codec, GeneratorPolynomial, ScramblingBits,
    SubstitutionTable, TelegramFile, TelegramFormat, UserData,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "balise", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a master-key keystore.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        /// Deterministic key for tests; omit for a random key.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        ver: u16,
    },
    /// Encode a telegram for one balise.
    Program {
        #[arg(long)]
        keystore: Option<PathBuf>,
        #[arg(long)]
        id: u16,
        /// Reported location in millimetres.
        #[arg(long, allow_hyphen_values = true)]
        loc_mm: i32,
        #[arg(long, default_value = "long")]
        format: TelegramFormat,
        #[arg(long, value_enum, default_value_t = Mode::Authenticated)]
        mode: Mode,
        /// Scrambling bits for legacy mode, hex.
        #[arg(long)]
        sb: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Decode and authenticate a telegram file; prints a JSON report.
    Verify {
        #[arg(long)]
        keystore: PathBuf,
        #[arg(long)]
        telegram: PathBuf,
        #[arg(long)]
        id: u16,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Run a scenario, or every scenario in a directory.
    Simulate {
        #[arg(required_unless_present = "batch", conflicts_with = "batch")]
        config: Option<PathBuf>,
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Directory for trajectory.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, conflicts_with = "batch")]
        csv: Option<PathBuf>,
        #[arg(long, conflicts_with = "batch")]
        summary: Option<PathBuf>,
    },
    /// Emit tag test vectors as JSON lines.
    Vectors {
        #[arg(long)]
        keystore: Option<PathBuf>,
        /// Master-key seed when no keystore is given.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        count: u16,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Legacy,
    Authenticated,
}

#[derive(Args)]
struct CodecArgs {
    /// Substitution alphabet as a JSON array of 1024 words.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Generator polynomial as a JSON array of exponents.
    #[arg(long)]
    poly: Option<PathBuf>,
}

enum Failure {
    Verification,
    Input(String),
    Timeout(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Input(_) => 2,
            Failure::Timeout(_) => 3,
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    serde_json::from_str(&text).map_err(input(path.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(input(path.display()))
}

impl CodecArgs {
    fn build(&self) -> Result<Codec, Failure> {
        let table = match &self.table {
            Some(p) => read_json::<SubstitutionTable>(p)?,
            None => SubstitutionTable::default(),
        };
        let poly = match &self.poly {
            Some(p) => read_json::<GeneratorPolynomial>(p)?,
            None => GeneratorPolynomial::default(),
        };
        Ok(Codec::new(table, poly))
    }
}

fn load_keystore(path: &Path) -> Result<Keystore, Failure> {
    Keystore::load(path).map_err(input(path.display()))
}

fn balise_id(id: u16) -> Result<BaliseId, Failure> {
    BaliseId::new(id).map_err(input("--id"))
}

fn keygen(out: &Path, seed: Option<u64>, ver: u16) -> Result<(), Failure> {
    let mut ks = Keystore::generate(seed);
    ks.ver = ver;
    ks.save(out).map_err(input(out.display()))
}

#[allow(clippy::too_many_arguments)]
fn program(
    keystore: Option<&Path>,
    id: u16,
    loc_mm: i32,
    format: TelegramFormat,
    mode: Mode,
    sb: Option<&str>,
    out: &Path,
    codec: &CodecArgs,
) -> Result<(), Failure> {
    let codec = codec.build()?;
    let id = balise_id(id)?;
    let user = UserData::from_fields(format, id, loc_mm);
    let telegram = match mode {
        Mode::Authenticated => {
            let path = keystore
                .ok_or_else(|| Failure::Input("authenticated mode needs --keystore".into()))?;
            let keys = load_keystore(path)?.keys_for(id);
            encode_authenticated(&codec, &user, &keys).map_err(input("encode"))?
        }
        Mode::Legacy => {
            let raw = sb.ok_or_else(|| Failure::Input("legacy mode needs --sb".into()))?;
            let value = u16::from_str_radix(raw.trim_start_matches("0x"), 16)
                .map_err(input("--sb"))?;
            let sb = ScramblingBits::new(value).map_err(input("--sb"))?;
            codec
                .encode(&user, sb, derive_scrambling_key_legacy(sb))
                .map_err(input("encode"))?
        }
    };
    let text = serde_json::to_string_pretty(&telegram.to_file()).expect("telegram file serialises");
    write_file(out, format!("{text}\n").as_bytes())
}

fn verify(keystore: &Path, telegram: &Path, id: u16, codec: &CodecArgs) -> Result<(), Failure> {
    let codec = codec.build()?;
    let keys = load_keystore(keystore)?.keys_for(balise_id(id)?);
    let file: TelegramFile = read_json(telegram)?;
    let format = file.format;
    let telegram = file.into_telegram().map_err(input(telegram.display()))?;
    let stream = telegram.transmission(0, 3);
    let (report, ok) = match verify_and_decode(&codec, &stream, &keys, format) {
        Ok(user) => (
            json!({
                "decode": "ok",
                "auth": "pass",
                "format": format,
                "id": user.balise_group_id().value(),
                "location_mm": user.reported_location_mm(),
                "sb_hex": telegram.scrambling_bits().to_string(),
            }),
            true,
        ),
        Err(VerifyError::AuthFailure { received, expected }) => (
            json!({
                "decode": "ok",
                "auth": "fail",
                "format": format,
                "sb_hex": received.to_string(),
                "expected_sb_hex": expected.to_string(),
            }),
            false,
        ),
        Err(VerifyError::Codec(e)) => (
            json!({
                "decode": "fail",
                "auth": "fail",
                "format": format,
                "error": e.to_string(),
            }),
            false,
        ),
    };
    println!("{report}");
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn write_outputs(
    result: &SimResult,
    out: Option<&Path>,
    csv: Option<&Path>,
    summary: Option<&Path>,
) -> Result<(), Failure> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(input(dir.display()))?;
    }
    let csv = csv.map(Path::to_path_buf).or_else(|| out.map(|d| d.join("trajectory.csv")));
    let summary = summary
        .map(Path::to_path_buf)
        .or_else(|| out.map(|d| d.join("summary.json")));
    if let Some(path) = csv {
        let file = fs::File::create(&path).map_err(input(path.display()))?;
        result
            .write_csv(std::io::BufWriter::new(file))
            .map_err(input(path.display()))?;
    }
    if let Some(path) = summary {
        let text = serde_json::to_string_pretty(&result.summary()).expect("summary serialises");
        write_file(&path, format!("{text}\n").as_bytes())?;
    }
    Ok(())
}

fn run_one(config: &ScenarioConfig) -> Result<SimResult, Failure> {
    run_scenario(config).map_err(|e| match e {
        SimError::Timeout { .. } => Failure::Timeout(format!("{}: {e}", config.name)),
        other => Failure::Input(format!("{}: {other}", config.name)),
    })
}

fn report(name: &str, result: &SimResult) {
    println!(
        "{name}: stop_error_m={:.4} stop_time_s={:.2}",
        result.stop_error, result.stop_time
    );
}

fn simulate(
    config: &Path,
    out: Option<&Path>,
    csv: Option<&Path>,
    summary: Option<&Path>,
) -> Result<(), Failure> {
    let config = ScenarioConfig::load(config).map_err(|e| Failure::Input(e.to_string()))?;
    let result = run_one(&config)?;
    write_outputs(&result, out, csv, summary)?;
    report(&config.name, &result);
    Ok(())
}

fn simulate_batch(dir: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let mut configs = Vec::new();
    for entry in fs::read_dir(dir).map_err(input(dir.display()))? {
        let path = entry.map_err(input(dir.display()))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            // skip auxiliary JSON such as track maps
            if let Ok(config) = ScenarioConfig::load(&path) {
                configs.push(config);
            }
        }
    }
    if configs.is_empty() {
        return Err(Failure::Input(format!("no scenarios in {}", dir.display())));
    }
    configs.sort_by(|a, b| a.name.cmp(&b.name));
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run_one(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    let mut failed = Vec::new();
    for (config, result) in configs.iter().zip(results) {
        match result {
            Ok(r) => {
                write_outputs(&r, out.map(|d| d.join(&config.name)).as_deref(), None, None)?;
                report(&config.name, &r);
            }
            Err(f) => failed.push(f),
        }
    }
    let summary = format!("{} of {} scenarios failed", failed.len(), configs.len());
    match failed.into_iter().max_by_key(Failure::code) {
        None => Ok(()),
        Some(Failure::Timeout(m)) => Err(Failure::Timeout(format!("{m} ({summary})"))),
        Some(Failure::Input(m)) => Err(Failure::Input(format!("{m} ({summary})"))),
        Some(Failure::Verification) => Err(Failure::Verification),
    }
}

fn vectors(keystore: Option<&Path>, seed: u64, count: u16) -> Result<(), Failure> {
    let ks = match keystore {
        Some(p) => load_keystore(p)?,
        None => Keystore::generate(Some(seed)),
    };
    for format in TelegramFormat::ALL {
        for id in 1..=count {
            let id = balise_id(id)?;
            let user = UserData::from_fields(format, id, -1000 * i32::from(id.value()));
            let keys = ks.keys_for(id);
            let sb = keys.tag(&user);
            println!(
                "{}",
                json!({
                    "id": id.value(),
                    "ver": ks.ver,
                    "user_bits": user.bits().to_01_string(),
                    "sb_hex": sb.to_string(),
                    "S_hex": format!("{:08x}", keys.scrambling_key(sb).value()),
                })
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Keygen { out, seed, ver } => keygen(out, *seed, *ver),
        Command::Program {
            keystore,
            id,
            loc_mm,
            format,
            mode,
            sb,
            out,
            codec,
        } => program(
            keystore.as_deref(),
            *id,
            *loc_mm,
            *format,
            *mode,
            sb.as_deref(),
            out,
            codec,
        ),
        Command::Verify {
            keystore,
            telegram,
            id,
            codec,
        } => verify(keystore, telegram, *id, codec),
        Command::Simulate {
            config,
            batch,
            out,
            csv,
            summary,
        } => match (batch, config) {
            (Some(dir), _) => simulate_batch(dir, out.as_deref()),
            (None, Some(config)) => {
                simulate(config, out.as_deref(), csv.as_deref(), summary.as_deref())
            }
            (None, None) => Err(Failure::Input("missing scenario config".into())),
        },
        Command::Vectors {
            keystore,
            seed,
            count,
        } => vectors(keystore.as_deref(), *seed, *count),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) | Failure::Timeout(m) => eprintln!("error: {m}"),
                Failure::Verification => {}
            }
            ExitCode::from(f.code())
        }
    }
}
