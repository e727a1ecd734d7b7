//! Command-line front end. Every run writes one results file plus a
//! `<out>.meta.json` sidecar that is enough to replay the run.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::{covert_capacity_awgn, covert_capacity_binary, covert_capacity_general, key_stream_capacity, CovertCapacityResult};
use crate::channel::{AnySpec, BroadcastSpec, SpecFile};
use crate::condition::{check_condition, check_condition_binary, condition_map};
use crate::converse::{converse_csv, converse_sweep, gaussian_converse_region, max_weight_gaussian};
use crate::error::{Error, Result};
use crate::region::{boundary, boundary_csv, min_key_rate, time_division_plan, RegionSpec};
use crate::sim::{run, sweep, sweep_csv, SimConfig};

const TOOL: &str = "covert-bc";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    /// Covert capacities of both receivers and the key-stream capacity.
    Capacity,
    /// Decide whether time division is optimal.
    Condition,
    /// Condition verdicts over binary second receivers.
    Map,
    /// Region boundary, or a time-division plan with --rho.
    Region,
    /// Converse bound over blocklengths.
    Converse,
    /// Minimum key rates along the region boundary.
    Keys,
    /// Monte Carlo of the time-division scheme.
    Simulate,
    /// Simulation over a list of blocklengths.
    Sweep,
    /// Re-run the command recorded in a sidecar.
    Replay,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Capacity => "capacity",
            CommandKind::Condition => "condition",
            CommandKind::Map => "map",
            CommandKind::Region => "region",
            CommandKind::Converse => "converse",
            CommandKind::Keys => "keys",
            CommandKind::Simulate => "simulate",
            CommandKind::Sweep => "sweep",
            CommandKind::Replay => "replay",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct Params {
    /// Channel or Gaussian spec file (JSON).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Results file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Covertness budget in nats.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Blocklength.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Time share of receiver 1.
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report rates in bits instead of nats.
    #[arg(long, global = true)]
    #[serde(default)]
    pub bits: bool,
    /// Comma-separated blocklengths for converse and sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub rates_fraction: Option<f64>,
    /// Points per edge for boundary sampling.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Full simulator configuration (JSON) for simulate and sweep.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Sidecar to replay.
    #[arg(long, global = true)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "covert", version, about = "Covert communication over broadcast channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub input_path: Option<String>,
    pub output_path: String,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub manifest: RunManifest,
    pub spec: Option<SpecFile>,
    pub config: Option<SimConfig>,
    pub seed: u64,
    pub units: String,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::EmptyMatrix | Error::NotRectangular { .. } | Error::NonStochasticRow { .. } => 2,
        Error::ConditionViolated(_) | Error::TooFewSamples(_) | Error::UnsortedSamples | Error::SupportViolation => 4,
        _ => 3,
    }
}

pub fn error_record(e: &Error, operation: &str) -> Value {
    json!({
        "error": e.kind(),
        "module": e.module(),
        "operation": operation,
        "message": e.to_string(),
    })
}

fn units(bits: bool) -> &'static str {
    if bits {
        "bits_per_sqrt_use"
    } else {
        "nats_per_sqrt_use"
    }
}

fn rate_scale(bits: bool) -> f64 {
    if bits {
        1.0 / std::f64::consts::LN_2
    } else {
        1.0
    }
}

fn pretty(v: &impl Serialize) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Parse(e.to_string()))
}

fn discrete(spec: &AnySpec) -> Result<&BroadcastSpec> {
    match spec {
        AnySpec::Discrete(s) => Ok(s),
        AnySpec::Gaussian(_) => Err(Error::Unsupported("command needs a discrete channel spec".into())),
    }
}

fn capacity_of(legit: &crate::channel::Channel, warden: &crate::channel::Channel) -> Result<CovertCapacityResult> {
    if warden.inputs() == 2 {
        covert_capacity_binary(legit, warden)
    } else {
        covert_capacity_general(legit, warden)
    }
}

fn l_stars(spec: &AnySpec) -> Result<(f64, f64)> {
    match spec {
        AnySpec::Discrete(s) => Ok((capacity_of(&s.w, &s.warden)?.l_star, capacity_of(&s.v, &s.warden)?.l_star)),
        AnySpec::Gaussian(g) => Ok((covert_capacity_awgn(g.n1, g.sigma2)?, covert_capacity_awgn(g.n2, g.sigma2)?)),
    }
}

fn l_z_star(spec: &AnySpec) -> Result<f64> {
    match spec {
        AnySpec::Discrete(s) => Ok(key_stream_capacity(&s.warden)?.l_star),
        AnySpec::Gaussian(g) => covert_capacity_awgn(g.sigma2, g.sigma2),
    }
}

fn capacity_json(spec: &AnySpec, p: &Params) -> Result<String> {
    let k = rate_scale(p.bits);
    let receivers: Vec<Value> = match spec {
        AnySpec::Discrete(s) => {
            let mut out = Vec::new();
            for (j, ch) in [&s.w, &s.v].into_iter().enumerate() {
                let r = capacity_of(ch, &s.warden)?;
                if r.ill_conditioned {
                    eprintln!("warning: receiver {}: chi-squared at the optimum is below 1e-9", j + 1);
                }
                out.push(json!({
                    "receiver": j + 1,
                    "l_star": r.l_star * k,
                    "argmax_p": r.argmax_p,
                    "zero_capacity": r.zero_capacity,
                    "ill_conditioned": r.ill_conditioned,
                }));
            }
            out
        }
        AnySpec::Gaussian(g) => [g.n1, g.n2]
            .iter()
            .enumerate()
            .map(|(j, &nj)| {
                Ok(json!({
                    "receiver": j + 1,
                    "l_star": covert_capacity_awgn(nj, g.sigma2)? * k,
                    "argmax_p": Value::Null,
                }))
            })
            .collect::<Result<_>>()?,
    };
    let pruning = match spec {
        AnySpec::Discrete(s) => serde_json::to_value(&s.pruning).map_err(|e| Error::Parse(e.to_string()))?,
        AnySpec::Gaussian(_) => Value::Null,
    };
    pretty(&json!({
        "units": units(p.bits),
        "receivers": receivers,
        "key_stream": { "l_star": l_z_star(spec)? * k },
        "pruning": pruning,
    }))
}

fn condition_json(spec: &AnySpec) -> Result<String> {
    let s = discrete(spec)?;
    let (route, verdict) = if s.inputs() == 2 {
        ("binary", check_condition_binary(s)?)
    } else {
        ("general", check_condition(s)?)
    };
    pretty(&json!({ "route": route, "verdict": verdict }))
}

fn map_csv(spec: &AnySpec, p: &Params) -> Result<String> {
    let s = discrete(spec)?;
    Ok(condition_map(&s.w, &s.warden, p.grid_step.unwrap_or(0.02))?.to_csv())
}

fn region_out(spec: &AnySpec, p: &Params) -> Result<String> {
    let (l1, l2) = l_stars(spec)?;
    let region = RegionSpec::two_user(l1, l2)?;
    if let Some(rho) = p.rho {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::OutOfRange { what: "rho", value: rho });
        }
        let plan = time_division_plan(rho * l1, (1.0 - rho) * l2, p.delta.unwrap_or(1.0), p.n.unwrap_or(10_000), &region)?;
        return pretty(&plan);
    }
    let k = rate_scale(p.bits);
    let mut pts = boundary(&region, p.resolution.unwrap_or(101))?;
    for pt in &mut pts {
        pt.rates.iter_mut().for_each(|r| *r *= k);
    }
    Ok(boundary_csv(&pts))
}

fn keys_csv(spec: &AnySpec, p: &Params) -> Result<String> {
    let (l1, l2) = l_stars(spec)?;
    let lz = l_z_star(spec)?;
    let region = RegionSpec::two_user(l1, l2)?;
    let k = rate_scale(p.bits);
    let mut s = String::from("share_1,L_1,L_2,L_key_min\n");
    for pt in boundary(&region, p.resolution.unwrap_or(101))? {
        let m = min_key_rate(pt.rates[0], pt.rates[1], &region, lz)?;
        s.push_str(&format!("{},{},{},{}\n", pt.shares[0], pt.rates[0] * k, pt.rates[1] * k, m * k));
    }
    Ok(s)
}

fn converse_out(spec: &AnySpec, p: &Params) -> Result<String> {
    let delta = p.delta.unwrap_or(1.0);
    let k = rate_scale(p.bits);
    match spec {
        AnySpec::Discrete(s) => {
            let n_list = p.n_list.clone().unwrap_or_else(|| vec![p.n.unwrap_or(10_000)]);
            let (l1, l2) = l_stars(spec)?;
            let dom = if l1 >= l2 { &s.w } else { &s.v };
            let mix = covert_capacity_general(dom, &s.warden)?.argmax_p;
            let mut rows = converse_sweep(s, delta, &mix, &n_list)?;
            for r in &mut rows {
                r.bound_nats *= k;
                r.normalized *= k;
            }
            Ok(converse_csv(&rows))
        }
        AnySpec::Gaussian(g) => {
            let n = p.n.unwrap_or(10_000);
            let budget = max_weight_gaussian(delta, n, g.sigma2)?;
            let scale = (n as f64 / delta).sqrt() * k;
            let steps = p.resolution.unwrap_or(101).max(2) - 1;
            let mut s = String::from("L_1,L_2\n");
            for (a, b) in gaussian_converse_region(g.n1, g.n2, &budget, steps)? {
                s.push_str(&format!("{},{}\n", a * scale, b * scale));
            }
            Ok(s)
        }
    }
}

fn sim_config(spec: Option<&AnySpec>, config: Option<&SimConfig>, p: &Params) -> Result<SimConfig> {
    if let Some(c) = config {
        return Ok(c.clone());
    }
    let s = discrete(spec.ok_or_else(|| Error::Parse("--spec or --config is required".into()))?)?;
    Ok(SimConfig::new(
        s.clone(),
        p.n.unwrap_or(10_000),
        p.delta.unwrap_or(1.0),
        p.rho.unwrap_or(0.5),
        p.rates_fraction.unwrap_or(0.3),
        p.trials.unwrap_or(1000),
        p.seed.unwrap_or(0),
    ))
}

/// Compute the results file contents for one command.
pub fn execute(cmd: CommandKind, p: &Params, spec: Option<&AnySpec>, config: Option<&SimConfig>) -> Result<String> {
    let need = || spec.ok_or_else(|| Error::Parse("--spec is required".into()));
    match cmd {
        CommandKind::Capacity => capacity_json(need()?, p),
        CommandKind::Condition => condition_json(need()?),
        CommandKind::Map => map_csv(need()?, p),
        CommandKind::Region => region_out(need()?, p),
        CommandKind::Converse => converse_out(need()?, p),
        CommandKind::Keys => keys_csv(need()?, p),
        CommandKind::Simulate => pretty(&run(&sim_config(spec, config, p)?)?),
        CommandKind::Sweep => {
            let cfg = sim_config(spec, config, p)?;
            let n_list = p.n_list.clone().unwrap_or_else(|| vec![2_500, 10_000, 40_000]);
            let mut rows = sweep(&cfg, &n_list)?;
            if p.bits {
                rows.iter_mut().for_each(|r| r.log_m_sum *= rate_scale(true));
            }
            Ok(sweep_csv(&rows))
        }
        CommandKind::Replay => Err(Error::Unsupported("replay cannot be nested".into())),
    }
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Execute and write the results file and its sidecar.
pub fn dispatch(cmd: CommandKind, p: &Params, spec_file: Option<SpecFile>, config: Option<SimConfig>) -> Result<PathBuf> {
    let out = p.out.clone().ok_or_else(|| Error::Parse("--out is required".into()))?;
    let spec = spec_file.clone().map(SpecFile::validate).transpose()?;
    let body = execute(cmd, p, spec.as_ref(), config.as_ref())?;
    fs::write(&out, body).map_err(|e| io(&out, e))?;
    let seed = config.as_ref().map_or(p.seed.unwrap_or(0), |c| c.seed);
    let meta = Sidecar {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        manifest: RunManifest {
            command: cmd,
            input_path: p.spec.as_ref().map(|s| s.display().to_string()),
            output_path: out.display().to_string(),
            params: p.clone(),
        },
        spec: spec_file,
        config,
        seed,
        units: units(p.bits).into(),
    };
    let side = sidecar_path(&out);
    fs::write(&side, pretty(&meta)?).map_err(|e| io(&side, e))?;
    Ok(out)
}

/// Re-dispatch a recorded run, optionally to a different results file.
pub fn replay(sidecar: &Path, out: Option<PathBuf>) -> Result<PathBuf> {
    let text = fs::read_to_string(sidecar).map_err(|e| io(sidecar, e))?;
    let meta: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut params = meta.manifest.params.clone();
    if let Some(o) = out {
        params.out = Some(o);
    }
    dispatch(meta.manifest.command, &params, meta.spec, meta.config)
}

fn load(p: &Params) -> Result<(Option<SpecFile>, Option<SimConfig>)> {
    let spec = p.spec.as_deref().map(SpecFile::read).transpose()?;
    let config = match &p.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
            Some(serde_json::from_str::<SimConfig>(&text).map_err(|e| Error::Parse(e.to_string()))?)
        }
        None => None,
    };
    Ok((spec, config))
}

fn run_cli(cli: Cli) -> Result<PathBuf> {
    let p = cli.params;
    if cli.command == CommandKind::Replay {
        let side = p.sidecar.clone().ok_or_else(|| Error::Parse("--sidecar is required".into()))?;
        return replay(&side, p.out.clone());
    }
    let (spec, config) = load(&p)?;
    dispatch(cli.command, &p, spec, config)
}

/// Entry point used by the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rec = error_record(&Error::Parse(e.to_string()), "parse");
            eprintln!("{rec}");
            return 2;
        }
    };
    let op = cli.command.name();
    match run_cli(cli) {
        Ok(path) => {
            println!("{}", path.display());
            0
        }
        Err(e) => {
            eprintln!("{}", error_record(&e, op));
            exit_code(&e)
        }
    }
}
