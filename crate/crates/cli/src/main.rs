//! Batch front end: catalog listing, simulation, bounds and scheme verification.
//!
//! Exit codes: 0 clean, 1 configuration or input error, 2 decoding failures
//! observed during `simulate`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use wyner_tim::bounds::{bound_terms, gap_report, upper_bound};
use wyner_tim::coding::{
    as_linear_scheme, naive_scheme, plan_quadruple, plan_separate, verify_decodable, ChannelDraw,
    LinearScheme,
};
use wyner_tim::galois::Field;
use wyner_tim::simulate::{run, Horizon, Mode, SimulationConfig};
use wyner_tim::topology::{
    all_states, format_rational, rational_to_f64, to_dot, StateDistribution, StateId, User,
};
use wyner_tim::Rational;

#[derive(Parser)]
#[command(
    name = "wyner-tim",
    version,
    about = "Three-user Wyner-type interference channel with alternating connectivity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
    Dot,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Joint,
    Separate,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Joint => Mode::Joint,
            ModeArg::Separate => Mode::Separate,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Builtin {
    Quadruple1,
    Quadruple2,
    HRepetition,
    NaiveH,
}

#[derive(Args)]
struct DistArgs {
    /// Equiprobable states (the default).
    #[arg(long, conflicts_with = "dist")]
    uniform: bool,
    /// Distribution JSON: {"states": {"A": "1/27", ...}}.
    #[arg(long)]
    dist: Option<PathBuf>,
}

impl DistArgs {
    fn load(&self) -> Result<StateDistribution> {
        match &self.dist {
            None => Ok(StateDistribution::uniform()),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                StateDistribution::from_json(&text)
                    .with_context(|| format!("loading {}", path.display()))
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the 27 connectivity states, or one state's links.
    States {
        #[arg(long)]
        name: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run an end-to-end simulation.
    Simulate {
        #[command(flatten)]
        dist: DistArgs,
        /// Exact rounds (each realizes the distribution at its denominators).
        #[arg(long, conflicts_with = "n_uses")]
        rounds: Option<u64>,
        /// I.i.d. sampled channel uses.
        #[arg(long)]
        n_uses: Option<u64>,
        #[arg(long, value_enum, default_value = "joint")]
        mode: ModeArg,
        #[arg(long, env = "WYNER_TIM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 257)]
        q: u64,
        /// Worker threads (0 = all cores). Never changes the output.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Add decimal renderings of the rationals.
        #[arg(long)]
        float: bool,
        /// Write to this file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Closed-form upper bound for a distribution.
    Bound {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        float: bool,
    },
    /// Upper bound next to the joint and separate achievable DoF.
    Report {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        float: bool,
    },
    /// Check a linear scheme's decodability over random channel draws.
    Verify {
        /// LinearScheme JSON file.
        #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
        scheme: Option<PathBuf>,
        #[arg(long, value_enum)]
        builtin: Option<Builtin>,
        #[arg(long, default_value_t = 1000)]
        draws: u64,
        #[arg(long, default_value_t = 257)]
        q: u64,
        #[arg(long, env = "WYNER_TIM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Print the scheme JSON instead of verifying it.
        #[arg(long)]
        dump: bool,
    },
}

fn require_format(format: Format, allowed: &[Format]) -> Result<()> {
    if !allowed.contains(&format) {
        let name = format.to_possible_value().expect("named variant");
        bail!("format {} not supported for this command", name.get_name());
    }
    Ok(())
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn describe(s: StateId) -> String {
    let p = s.pattern();
    let links: Vec<String> = User::ALL
        .into_iter()
        .map(|rx| match p.interferer(rx) {
            Some(tx) => format!("Rx{rx}<-Tx{tx}"),
            None => "-".into(),
        })
        .collect();
    format!("{:<3} {}", s.name(), links.join(" "))
}

fn cmd_states(name: Option<String>, format: Format) -> Result<String> {
    require_format(format, &[Format::Text, Format::Json, Format::Dot])?;
    let selected: Vec<StateId> = match name {
        Some(n) => vec![n.parse::<StateId>()?],
        None => StateId::ALL.to_vec(),
    };
    Ok(match format {
        Format::Dot => selected
            .iter()
            .map(|&s| to_dot(s))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => {
            let rows: Vec<_> = all_states()
                .into_iter()
                .filter(|(s, _)| selected.contains(s))
                .map(|(s, p)| {
                    let interferers: Vec<Option<usize>> = p
                        .interferers()
                        .iter()
                        .map(|i| i.map(User::number))
                        .collect();
                    json!({ "name": s.name(), "interferer": interferers })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            s
        }
        _ => selected.iter().map(|&s| describe(s) + "\n").collect(),
    })
}

fn builtin_scheme(b: Builtin, field: Field) -> Result<(String, LinearScheme)> {
    let zeros = |n| vec![field.zero(); n];
    let ls = match b {
        Builtin::Quadruple1 => as_linear_scheme(&plan_quadruple(1, &zeros(9))?, field),
        Builtin::Quadruple2 => as_linear_scheme(&plan_quadruple(2, &zeros(9))?, field),
        Builtin::HRepetition => as_linear_scheme(&plan_separate(StateId::H1, &zeros(3))?, field),
        Builtin::NaiveH => naive_scheme(StateId::H1, field),
    };
    let name = b
        .to_possible_value()
        .expect("named variant")
        .get_name()
        .to_string();
    Ok((name, ls))
}

fn cmd_verify(
    scheme: Option<PathBuf>,
    builtin: Option<Builtin>,
    draws: u64,
    q: u64,
    seed: u64,
    format: Format,
    dump: bool,
) -> Result<String> {
    require_format(format, &[Format::Text, Format::Json])?;
    let field = Field::new(q)?;
    let (name, ls) = match (scheme, builtin) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            (
                path.display().to_string(),
                LinearScheme::from_json(&text, field)?,
            )
        }
        (None, Some(b)) => builtin_scheme(b, field)?,
        (None, None) => bail!("either --scheme or --builtin is required"),
    };
    if dump {
        return Ok(ls.to_json());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_rx = [0u64; 3];
    let mut all = 0u64;
    for _ in 0..draws {
        let ch = ChannelDraw::random(field, ls.states(), &mut rng);
        let ok = verify_decodable(&ls, &ch)?;
        for (count, &flag) in per_rx.iter_mut().zip(&ok) {
            *count += u64::from(flag);
        }
        all += u64::from(ok.iter().all(|&f| f));
    }
    let states: Vec<&str> = ls.states().iter().map(|s| s.name()).collect();
    Ok(match format {
        Format::Json => {
            let v = json!({
                "scheme": name,
                "uses": states,
                "q": q,
                "seed": seed,
                "draws": draws,
                "per_rx": per_rx,
                "all_receivers": all,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        _ => {
            let mut s = format!(
                "scheme: {name} ({} uses: {})\nq: {q}, draws: {draws}, seed: {seed}\n",
                states.len(),
                states.join(" ")
            );
            for rx in User::ALL {
                s.push_str(&format!("Rx{rx}: {}/{draws}\n", per_rx[rx.idx()]));
            }
            s.push_str(&format!("all receivers: {all}/{draws}\n"));
            s
        }
    })
}

fn cmd_bound(d: &StateDistribution, format: Format, float: bool) -> Result<String> {
    require_format(format, &[Format::Text, Format::Json])?;
    let ub = upper_bound(d);
    let t = bound_terms(d);
    let names = ["theta1", "theta2", "theta3"];
    Ok(match format {
        Format::Json => {
            let mut v = json!({
                "upper": format_rational(&ub),
                "lambda": {
                    "theta1": format_rational(&t.theta[0]),
                    "theta2": format_rational(&t.theta[1]),
                    "theta3": format_rational(&t.theta[2]),
                    "E3": format_rational(&t.both[0]),
                    "F3": format_rational(&t.both[1]),
                    "G3": format_rational(&t.both[2]),
                },
            });
            if float {
                v["upper_float"] = json!(num_f64(&ub));
            }
            serde_json::to_string_pretty(&v)? + "\n"
        }
        _ => {
            let mut s = format!("upper bound: {}", format_rational(&ub));
            if float {
                s.push_str(&format!(" ({:.6})", num_f64(&ub)));
            }
            s.push('\n');
            for (n, m) in names.iter().zip(&t.theta) {
                s.push_str(&format!("lambda {n}: {}\n", format_rational(m)));
            }
            for (n, m) in ["E3", "F3", "G3"].iter().zip(&t.both) {
                s.push_str(&format!("lambda {n}: {}\n", format_rational(m)));
            }
            s
        }
    })
}

fn num_f64(r: &Rational) -> f64 {
    rational_to_f64(r)
}

fn real_main() -> Result<ExitCode> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let clean = !e.use_stderr();
            e.print()?;
            return Ok(if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
    };
    match cli.command {
        Command::States { name, format } => emit(&cmd_states(name, format)?, None)?,
        Command::Simulate {
            dist,
            rounds,
            n_uses,
            mode,
            seed,
            q,
            threads,
            format,
            float,
            output,
        } => {
            require_format(format, &[Format::Text, Format::Json, Format::Csv])?;
            let horizon = match (rounds, n_uses) {
                (_, Some(n)) => Horizon::Uses(n),
                (Some(r), None) => Horizon::Rounds(r),
                (None, None) => Horizon::Rounds(1),
            };
            let mut cfg = SimulationConfig::new(dist.load()?, horizon, mode.into(), seed);
            cfg.q = q;
            cfg.threads = threads;
            let report = run(&cfg)?;
            let text = match format {
                Format::Json => report.to_json(float),
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    String::from_utf8(buf)?
                }
                _ => report.to_text(float),
            };
            emit(&text, output.as_deref())?;
            if report.failures > 0 || report.mismatches > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bound {
            dist,
            format,
            float,
        } => emit(&cmd_bound(&dist.load()?, format, float)?, None)?,
        Command::Report {
            dist,
            format,
            float,
        } => {
            require_format(format, &[Format::Text, Format::Json])?;
            let rep = gap_report(&dist.load()?);
            let text = if format == Format::Json {
                rep.to_json(float)
            } else {
                rep.to_text(float)
            };
            emit(&text, None)?;
        }
        Command::Verify {
            scheme,
            builtin,
            draws,
            q,
            seed,
            format,
            dump,
        } => emit(
            &cmd_verify(scheme, builtin, draws, q, seed, format, dump)?,
            None,
        )?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
