//! Experiment configuration. Precedence: command-line flags, then
//! HECKELAB_CACHE (cache directory only), then the config file, then
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use heckelab_core::arith::{gcd, is_prime};
use heckelab_core::newforms::lookup;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::report::num;

pub const CACHE_ENV: &str = "HECKELAB_CACHE";

/// A configuration problem, reported as a machine-readable diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for Diagnostic {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. All are optional so that the config
/// file and defaults can fill the gaps.
#[derive(Args, Clone, Debug, Default)]
pub struct GlobalArgs {
    /// Form label(s), comma separated: delta, 11a, 14a, 15a, 17a, 37a
    #[arg(long, global = true)]
    pub form: Option<String>,
    /// Odd prime p
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// Conductor exponents: "4", "2,3,5" or "2..6" (inclusive)
    #[arg(long, global = true)]
    pub n: Option<String>,
    /// Reference depth(s) n0
    #[arg(long, global = true)]
    pub n0: Option<String>,
    /// Target indices r, comma separated or a range
    #[arg(long, global = true)]
    pub r: Option<String>,
    /// Truncation tolerance of each L-value, in (0, 1e-2]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for character sweeps
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Coefficient cache directory
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exit with status 1 when any row is flagged
    #[arg(long, global = true)]
    pub strict: bool,
    /// Add functional-equation residuals to L-value rows
    #[arg(long, global = true)]
    pub check_fe: bool,
    /// Evaluation points: "center" or complex literals like 6.5+1i
    #[arg(long, global = true)]
    pub s: Option<String>,
    /// Balance parameter y = p^(EXP·n) for the split (default 55/39)
    #[arg(long, global = true, value_name = "EXP")]
    pub y_exp: Option<f64>,
    /// Levels N for the twisted Gauss-average bound
    #[arg(long, global = true)]
    pub levels: Option<String>,
    /// Character exponents to keep (default: all primitive characters)
    #[arg(long, global = true)]
    pub phi: Option<String>,
    /// Include the untwisted L-value
    #[arg(long, global = true)]
    pub untwisted: bool,
    /// Add wall-clock timings to the report (makes output run-dependent)
    #[arg(long, global = true)]
    pub timings: bool,
    /// Flat key = value file supplying any of the options above
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Corrupt one discrete-log entry, RESIDUE:LOG (negative-control fixture)
    #[arg(long, global = true, hide = true)]
    pub corrupt: Option<String>,
}

/// A point s, either the centre k/2 of each form or a fixed value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SPoint {
    Center,
    Value(Complex64),
}

impl SPoint {
    pub fn at(&self, weight: u32) -> Complex64 {
        match self {
            SPoint::Center => Complex64::new(weight as f64 / 2.0, 0.0),
            SPoint::Value(s) => *s,
        }
    }

    fn label(&self) -> String {
        match self {
            SPoint::Center => "center".into(),
            SPoint::Value(s) => format!("{}{:+}i", s.re, s.im),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub forms: Vec<String>,
    pub p: u64,
    pub ns: Vec<u32>,
    pub n0s: Vec<u32>,
    pub rs: Vec<u64>,
    pub tol: f64,
    pub threads: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub strict: bool,
    pub check_fe: bool,
    pub s: Vec<SPoint>,
    pub y_exp: Option<f64>,
    pub levels: Vec<u64>,
    pub phi: Option<Vec<u64>>,
    pub untwisted: bool,
    pub timings: bool,
    pub corrupt: Option<(u64, u32)>,
}

const KEYS: [&str; 18] = [
    "form", "p", "n", "n0", "r", "tol", "threads", "cache_dir", "format", "out", "strict",
    "check_fe", "s", "y_exp", "levels", "phi", "untwisted", "timings",
];

fn invalid(msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new("CONFIG_INVALID", msg)
}

/// Parses `key = value` lines; `#` starts a comment, dashes in keys are
/// read as underscores.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, Diagnostic> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(invalid(format!("line {}: unknown key {key:?}", i + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(key: &str, text: &str) -> Result<Vec<T>, Diagnostic> {
    text.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| invalid(format!("{key}: cannot parse {t:?}"))))
        .collect()
}

/// "4", "2,3,5" or "2..6" (inclusive).
pub fn parse_range(key: &str, text: &str) -> Result<Vec<u64>, Diagnostic> {
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| invalid(format!("{key}: bad range {text:?}")))?;
        let b: u64 = b.trim().parse().map_err(|_| invalid(format!("{key}: bad range {text:?}")))?;
        return Ok((a..=b).collect());
    }
    parse_list(key, text)
}

pub fn parse_s(text: &str) -> Result<SPoint, Diagnostic> {
    let t = text.trim().replace(' ', "");
    if t == "center" || t == "centre" {
        return Ok(SPoint::Center);
    }
    let bad = || invalid(format!("s: cannot parse {text:?}"));
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let cut = (1..bytes.len())
            .rev()
            .find(|&j| (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E'))
            .ok_or_else(bad)?;
        let re: f64 = body[..cut].parse().map_err(|_| bad())?;
        let im_text = &body[cut..];
        let im: f64 = match im_text {
            "+" => 1.0,
            "-" => -1.0,
            _ => im_text.parse().map_err(|_| bad())?,
        };
        return Ok(SPoint::Value(Complex64::new(re, im)));
    }
    Ok(SPoint::Value(Complex64::new(t.parse().map_err(|_| bad())?, 0.0)))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, Diagnostic> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn parse_scalar<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Diagnostic> {
    v.parse().map_err(|_| invalid(format!("{key}: cannot parse {v:?}")))
}

impl ExperimentConfig {
    /// Merges flags, environment, config file and defaults, then checks
    /// the values that every command relies on.
    pub fn resolve(args: &GlobalArgs, env_cache: Option<String>) -> Result<Self, Diagnostic> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Diagnostic::new("CONFIG_UNREADABLE", format!("{}: {e}", path.display()))
                })?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let pick = |flag: Option<String>, key: &str, default: &str| -> String {
            flag.or_else(|| file.get(key).cloned()).unwrap_or_else(|| default.to_string())
        };
        let file_bool = |key: &str| -> Result<bool, Diagnostic> {
            file.get(key).map_or(Ok(false), |v| parse_bool(key, v))
        };

        let forms: Vec<String> = pick(args.form.clone(), "form", "delta")
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let p = match args.p {
            Some(p) => p,
            None => parse_scalar("p", &pick(None, "p", "3"))?,
        };
        let ns = parse_range("n", &pick(args.n.clone(), "n", "2"))?
            .into_iter()
            .map(|n| u32::try_from(n).map_err(|_| invalid("n out of range")))
            .collect::<Result<Vec<u32>, _>>()?;
        let n0s = parse_range("n0", &pick(args.n0.clone(), "n0", "1"))?
            .into_iter()
            .map(|n| u32::try_from(n).map_err(|_| invalid("n0 out of range")))
            .collect::<Result<Vec<u32>, _>>()?;
        let rs = parse_range("r", &pick(args.r.clone(), "r", "2"))?;
        let tol = match args.tol {
            Some(t) => t,
            None => parse_scalar("tol", &pick(None, "tol", "1e-13"))?,
        };
        let threads = match args.threads {
            Some(t) => Some(t),
            None => file.get("threads").map(|v| parse_scalar("threads", v)).transpose()?,
        };
        let cache_dir = args
            .cache_dir
            .clone()
            .or_else(|| env_cache.filter(|s| !s.is_empty()).map(PathBuf::from))
            .or_else(|| file.get("cache_dir").map(PathBuf::from));
        let format = match args.format {
            Some(f) => f,
            None => match file.get("format").map(String::as_str) {
                None | Some("json") => Format::Json,
                Some("csv") => Format::Csv,
                Some(other) => return Err(invalid(format!("format: expected json or csv, got {other:?}"))),
            },
        };
        let out = args.out.clone().or_else(|| file.get("out").map(PathBuf::from));
        let s = pick(args.s.clone(), "s", "center")
            .split(',')
            .map(parse_s)
            .collect::<Result<Vec<_>, _>>()?;
        let y_exp = match args.y_exp {
            Some(v) => Some(v),
            None => file.get("y_exp").map(|v| parse_scalar("y_exp", v)).transpose()?,
        };
        let levels = parse_list("levels", &pick(args.levels.clone(), "levels", "1,11"))?;
        let phi = match args.phi.clone().or_else(|| file.get("phi").cloned()) {
            Some(v) => Some(parse_list("phi", &v)?),
            None => None,
        };
        let corrupt = match &args.corrupt {
            Some(v) => {
                let (a, b) = v.split_once(':').ok_or_else(|| invalid("corrupt: expected RESIDUE:LOG"))?;
                Some((parse_scalar("corrupt", a)?, parse_scalar("corrupt", b)?))
            }
            None => None,
        };

        let cfg = Self {
            forms,
            p,
            ns,
            n0s,
            rs,
            tol,
            threads,
            cache_dir,
            format,
            out,
            strict: args.strict || file_bool("strict")?,
            check_fe: args.check_fe || file_bool("check_fe")?,
            s,
            y_exp,
            levels,
            phi,
            untwisted: args.untwisted || file_bool("untwisted")?,
            timings: args.timings || file_bool("timings")?,
            corrupt,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Diagnostic> {
        if self.p == 2 || !is_prime(self.p) {
            return Err(Diagnostic::new("P_INVALID", format!("p must be an odd prime, got {}", self.p)));
        }
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(Diagnostic::new("N_RANGE_INVALID", "n-range must be nonempty and positive"));
        }
        if self.n0s.is_empty() || self.n0s.contains(&0) {
            return Err(Diagnostic::new("N_RANGE_INVALID", "n0 must be positive"));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(Diagnostic::new("TOL_INVALID", format!("tol must lie in (0, 1e-2], got {}", self.tol)));
        }
        if self.forms.is_empty() {
            return Err(Diagnostic::new("FORM_UNKNOWN", "no form given"));
        }
        for f in &self.forms {
            lookup(f).map_err(|_| Diagnostic::new("FORM_UNKNOWN", format!("unknown form label {f:?}")))?;
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be positive"));
        }
        Ok(())
    }

    /// Checks used by the commands that average over r.
    pub fn require_r(&self) -> Result<(), Diagnostic> {
        if self.rs.is_empty() {
            return Err(Diagnostic::new("R_NOT_COPRIME", "r-set is empty"));
        }
        for &r in &self.rs {
            if r == 0 || gcd(r, self.p) != 1 {
                return Err(Diagnostic::new(
                    "R_NOT_COPRIME",
                    format!("r = {r} must be a positive integer coprime to p = {}", self.p),
                ));
            }
        }
        Ok(())
    }

    /// Twisting needs each level coprime to p.
    pub fn require_coprime_levels(&self) -> Result<(), Diagnostic> {
        for f in &self.forms {
            let level = lookup(f).expect("validated").level;
            if gcd(level, self.p) != 1 {
                return Err(Diagnostic::new(
                    "LEVEL_NOT_COPRIME",
                    format!("form {f} has level {level}, which is not coprime to p = {}", self.p),
                ));
            }
        }
        Ok(())
    }

    pub fn n_max(&self) -> u32 {
        *self.ns.iter().max().expect("validated nonempty")
    }

    pub fn y_of(&self, n: u32) -> f64 {
        let e = self.y_exp.unwrap_or(55.0 / 39.0);
        (self.p as f64).powf(e * n as f64)
    }

    /// Echo for the report envelope; paths and timings are left out so the
    /// echo depends only on the numerical setup.
    pub fn echo(&self) -> Value {
        json!({
            "forms": self.forms,
            "p": self.p,
            "n": self.ns,
            "n0": self.n0s,
            "r": self.rs,
            "tol": num(self.tol),
            "s": self.s.iter().map(SPoint::label).collect::<Vec<_>>(),
            "y_exp": self.y_exp.map_or(Value::Null, num),
            "levels": self.levels,
            "phi": self.phi,
            "untwisted": self.untwisted,
            "check_fe": self.check_fe,
            "strict": self.strict,
            "threads": self.threads,
            "cache": self.cache_dir.is_some(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_points() {
        assert_eq!(parse_range("n", "2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_range("n", "2, 4").unwrap(), vec![2, 4]);
        assert!(parse_range("n", "x").is_err());
        assert_eq!(parse_s("center").unwrap(), SPoint::Center);
        assert_eq!(parse_s("6.5").unwrap(), SPoint::Value(Complex64::new(6.5, 0.0)));
        assert_eq!(parse_s("1-2i").unwrap(), SPoint::Value(Complex64::new(1.0, -2.0)));
        assert_eq!(parse_s("1e-1+3e0i").unwrap(), SPoint::Value(Complex64::new(0.1, 3.0)));
        assert_eq!(parse_s("2+i").unwrap(), SPoint::Value(Complex64::new(2.0, 1.0)));
    }

    #[test]
    fn file_format() {
        let m = parse_config_file("# setup\nform = 11a\ncheck-fe = true  # inline\n\np=5\n").unwrap();
        assert_eq!(m["form"], "11a");
        assert_eq!(m["check_fe"], "true");
        assert_eq!(m["p"], "5");
        assert!(parse_config_file("colour = red").is_err());
        assert!(parse_config_file("just text").is_err());
    }
}
