//! key=value config files and flag/file/environment resolution.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::str::FromStr;

use ckptplan::simulator::{Mode, SimConfig, DEFAULT_BUDGET_FACTOR, DEFAULT_HEARTBEAT_TIMEOUT};
use ckptplan::{ExponentialFailureModel, JobSpec};

use crate::args::{ModeArg, SimFlags};
use crate::{CliFailure, CliResult};

pub const SEED_ENV_VAR: &str = "CKPT_SEED";

/// Parsed `key=value` config file. Blank lines and `#` comments allowed.
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self {
            values: HashMap::new(),
        }
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::empty());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliFailure::input(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliFailure::input(format!(
                    "parse error at line {}: expected key=value, got `{line}`",
                    idx + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliFailure::input(format!("config value for `{key}` is invalid: `{raw}`"))
            }),
        }
    }
}

/// Seed resolution order: flag, config file, $CKPT_SEED, 0.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig, key: &str) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Some(seed) = file.get::<u64>(key)? {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw.parse().map_err(|_| {
            CliFailure::input(format!("${SEED_ENV_VAR} is not a valid seed: `{raw}`"))
        }),
        Err(_) => Ok(0),
    }
}

/// Exactly one of `--lambda` / `--mttf` (or their file keys) must resolve.
pub fn resolve_failure_model(
    lambda_flag: Option<f64>,
    mttf_flag: Option<f64>,
    file: &FileConfig,
) -> CliResult<ExponentialFailureModel> {
    let lambda = match lambda_flag {
        Some(v) => Some(v),
        None => file.get::<f64>("lambda")?,
    };
    let mttf = match mttf_flag {
        Some(v) => Some(v),
        None => file.get::<f64>("mttf")?,
    };
    // A flag pair is ambiguous; a flag overriding the *other* file key is
    // not, the flag wins.
    match (lambda_flag, mttf_flag, lambda, mttf) {
        (Some(_), Some(_), ..) => Err(CliFailure::input(
            "give exactly one of --lambda / --mttf, not both",
        )),
        (Some(l), None, ..) | (None, None, Some(l), None) => {
            ExponentialFailureModel::from_lambda(l)
                .map_err(|e| CliFailure::input(format!("--lambda: {e}")))
        }
        (None, Some(m), ..) | (None, None, None, Some(m)) => ExponentialFailureModel::from_mttf(m)
            .map_err(|e| CliFailure::input(format!("--mttf: {e}"))),
        (None, None, Some(_), Some(_)) => Err(CliFailure::input(
            "config file sets both lambda and mttf; keep one",
        )),
        (None, None, None, None) => Err(CliFailure::input("one of --lambda / --mttf is required")),
    }
}

fn resolve<T: FromStr + Copy>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
) -> CliResult<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn required<T: FromStr + Copy>(flag: Option<T>, file: &FileConfig, key: &str) -> CliResult<T> {
    resolve(flag, file, key)?.ok_or_else(|| CliFailure::input(format!("--{key} is required")))
}

/// Build a validated `SimConfig` from flags plus an optional config file,
/// returning the fully resolved parameter map for the run manifest.
pub fn build_sim_config(
    flags: &SimFlags,
    needs_tc: bool,
) -> CliResult<(SimConfig, BTreeMap<String, String>)> {
    let file = FileConfig::load(flags.config.as_deref())?;

    let mode = match flags.mode {
        Some(ModeArg::Model) => Mode::Model,
        Some(ModeArg::Volpex) => Mode::Volpex,
        None => match file.get::<String>("mode")?.as_deref() {
            Some("model") => Mode::Model,
            Some("volpex") => Mode::Volpex,
            Some(other) => {
                return Err(CliFailure::input(format!(
                    "config mode must be model or volpex, got `{other}`"
                )))
            }
            None => return Err(CliFailure::input("--mode is required")),
        },
    };

    let tc = if needs_tc {
        required(flags.tc, &file, "tc")?
    } else {
        // The sweep overrides tc per interval; seed the config with any
        // positive placeholder.
        resolve(flags.tc, &file, "tc")?.unwrap_or(1.0)
    };
    let ts = required(flags.ts, &file, "ts")?;
    let n = required(flags.n, &file, "n")?;
    let r = required(flags.r, &file, "r")?;
    let total_work = required(flags.total_work, &file, "total-work")?;
    let quantum_time = resolve(flags.quantum_time, &file, "quantum-time")?.unwrap_or(1.0);
    let heartbeat_timeout = resolve(flags.heartbeat_timeout, &file, "heartbeat-timeout")?
        .unwrap_or(DEFAULT_HEARTBEAT_TIMEOUT);
    let speed_spread = resolve(flags.speed_spread, &file, "speed-spread")?.unwrap_or(0.0);
    let budget_factor =
        resolve(flags.budget_factor, &file, "budget-factor")?.unwrap_or(DEFAULT_BUDGET_FACTOR);
    let failure_model = resolve_failure_model(flags.lambda, flags.mttf, &file)?;

    let spec = JobSpec::new(n, r).map_err(|e| CliFailure::input(format!("--n/--r: {e}")))?;
    let mut cfg = SimConfig::new(spec, tc, ts, failure_model, total_work);
    cfg.quantum_time = quantum_time;
    cfg.heartbeat_timeout = heartbeat_timeout;
    cfg.mode = mode;
    cfg.speed_spread = speed_spread;
    cfg.budget_factor = budget_factor;
    cfg.validate()?;

    let mut params = BTreeMap::new();
    params.insert("mode".into(), mode.as_str().to_string());
    if needs_tc {
        params.insert("tc".into(), tc.to_string());
    }
    params.insert("ts".into(), ts.to_string());
    params.insert("lambda".into(), failure_model.lambda().to_string());
    params.insert("n".into(), n.to_string());
    params.insert("r".into(), r.to_string());
    params.insert("total-work".into(), total_work.to_string());
    params.insert("quantum-time".into(), quantum_time.to_string());
    params.insert("heartbeat-timeout".into(), heartbeat_timeout.to_string());
    params.insert("speed-spread".into(), speed_spread.to_string());
    params.insert("budget-factor".into(), budget_factor.to_string());
    Ok((cfg, params))
}
