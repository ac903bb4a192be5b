//! Scenario configuration: a flat `key = value` file with dotted keys,
//! layered over built-in defaults and under command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use twopatch_core::{
    to_reduced, ConstantFamily, ConstantSearch, GrowthModel, HermiteTable, PhysicalParams, ReducedParams, SimConfig,
    State, Strategy,
};

use crate::CliError;

/// Every recognised key with its default. `None` marks keys that are unset
/// unless given.
const KEYS: &[(&str, Option<&str>)] = &[
    ("growth.kind", Some("monod")),
    ("growth.mu_max", Some("1")),
    ("growth.ks", Some("1")),
    ("growth.table", None),
    ("params.r", Some("0.3")),
    ("params.d", Some("0.1")),
    ("params.s_bar", Some("1")),
    ("params.epsilon", None),
    ("params.v1", None),
    ("params.v2", None),
    ("params.v_r", None),
    ("params.diffusion", None),
    ("sim.rel_tol", Some("1e-10")),
    ("sim.abs_tol", Some("1e-12")),
    ("sim.t_max", None),
    ("sim.diag_tol", Some("1e-9")),
    ("sim.event_tol", Some("1e-10")),
    ("sim.max_step", Some("0.25")),
    ("init.x0", Some("4,1.5")),
    ("strategy", Some("optimal")),
    ("seed", Some("42")),
    ("search.family", Some("zeta")),
    ("search.grid", Some("41")),
    ("search.min_step", Some("1e-3")),
    ("full.epsilon", Some("0.1,0.01,0.001")),
    ("full.x_r0", Some("1")),
    ("full.s_r0", None),
    ("compare.x0", Some("1.5,0;3,0;4,0.5;4,1.5;4,4")),
    ("compare.d", Some("0.1,10")),
    ("compare.s_bar", Some("1,0.1")),
    ("compare.family", Some("setpoint")),
    ("compare.extra_family", Some("zeta")),
    ("compare.one_patch", Some("1")),
    ("verify.count", Some("20")),
    ("verify.d", Some("0.1,1,10")),
    ("verify.x_max", Some("5")),
    ("hjb.n", Some("50")),
    ("hjb.kinks", Some("20")),
    ("hjb.x_max", Some("5")),
    ("hjb.tol", Some("1e-9")),
    ("value.lo", Some("0,0")),
    ("value.hi", Some("6,6")),
    ("value.n", Some("61,61")),
    ("gamma.s_max", Some("10")),
    ("gamma.n", Some("201")),
    ("output.dir", Some("out")),
];

const PHYSICAL: [&str; 4] = ["params.v1", "params.v2", "params.v_r", "params.diffusion"];

/// Strategy as named in the config: a fixed law, or the best constant
/// control found by search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategySpec {
    Fixed(Strategy),
    BestConstant,
}

impl std::fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategySpec::Fixed(s) => s.fmt(f),
            StrategySpec::BestConstant => f.write_str("bestconst"),
        }
    }
}

impl std::str::FromStr for StrategySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "bestconst" {
            return Ok(StrategySpec::BestConstant);
        }
        s.parse::<Strategy>()
            .map(StrategySpec::Fixed)
            .map_err(|e| format!("{e}, or bestconst"))
    }
}

/// Which one-pump time fills the T_one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnePatch {
    One,
    Two,
    Best,
}

impl OnePatch {
    pub fn as_str(&self) -> &'static str {
        match self {
            OnePatch::One => "1",
            OnePatch::Two => "2",
            OnePatch::Best => "best",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullSpec {
    pub epsilons: Vec<f64>,
    pub x_r0: f64,
    /// Initial bioreactor substrate; the strategy's setpoint when unset.
    pub s_r0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSpec {
    pub x0s: Vec<State>,
    pub ds: Vec<f64>,
    pub s_bars: Vec<f64>,
    pub family: ConstantFamily,
    pub extra_family: Option<ConstantFamily>,
    pub one_patch: OnePatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub count: usize,
    pub ds: Vec<f64>,
    pub x_max: f64,
    pub hjb_n: usize,
    pub hjb_kinks: usize,
    pub hjb_x_max: f64,
    pub hjb_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDefaults {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub growth: GrowthModel,
    pub params: ReducedParams,
    pub epsilon: Option<f64>,
    pub physical: Option<PhysicalParams>,
    pub sim: SimConfig,
    pub x0: State,
    pub strategy: StrategySpec,
    pub seed: u64,
    pub search: ConstantSearch,
    pub full: FullSpec,
    pub compare: CompareSpec,
    pub verify: VerifySpec,
    pub grid: GridDefaults,
    pub gamma_s_max: f64,
    pub gamma_n: usize,
    pub output_dir: PathBuf,
    resolved: BTreeMap<String, String>,
}

impl ScenarioConfig {
    /// Defaults with `overrides` applied.
    pub fn from_overrides(overrides: &[(String, String)]) -> Result<Self, CliError> {
        Self::build(BTreeMap::new(), overrides)
    }

    /// Parses `text` as a config file, then applies `overrides`.
    pub fn from_text(text: &str, overrides: &[(String, String)]) -> Result<Self, CliError> {
        Self::build(parse_pairs(text)?, overrides)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::from_text(&text, overrides)
            }
            None => Self::from_overrides(overrides),
        }
    }

    fn build(file: BTreeMap<String, String>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut explicit = file;
        for (k, v) in overrides {
            explicit.insert(k.trim().to_string(), v.trim().to_string());
        }
        for k in explicit.keys() {
            if !KEYS.iter().any(|(name, _)| name == k) {
                return Err(CliError::Config(format!("unknown key `{k}`")));
            }
        }
        let physical_given = PHYSICAL.iter().filter(|k| explicit.contains_key(**k)).count();
        if physical_given > 0 {
            if physical_given < PHYSICAL.len() {
                return Err(CliError::Config(format!(
                    "physical parameters need all of {}",
                    PHYSICAL.join(", ")
                )));
            }
            for k in ["params.r", "params.d", "params.epsilon"] {
                if explicit.contains_key(k) {
                    return Err(CliError::Config(format!("`{k}` conflicts with the physical volumes")));
                }
            }
        }

        let mut resolved = BTreeMap::new();
        for (k, default) in KEYS {
            if physical_given > 0 && matches!(*k, "params.r" | "params.d") {
                continue;
            }
            if let Some(v) = explicit.get(*k).map(String::as_str).or(*default) {
                resolved.insert(k.to_string(), v.to_string());
            }
        }
        let get = Getter(&resolved);

        let growth = match get.str("growth.kind")? {
            "monod" => {
                let mu_max = get.positive("growth.mu_max")?;
                let ks = get.positive("growth.ks")?;
                GrowthModel::monod(mu_max, ks)
            }
            "table" => {
                let path = get.str("growth.table")?;
                GrowthModel::Tabulated(read_growth_table(Path::new(path))?)
            }
            other => {
                return Err(CliError::Config(format!(
                    "growth.kind: expected monod or table, got `{other}`"
                )))
            }
        };

        let s_bar = get.positive("params.s_bar")?;
        let (params, epsilon, physical) = if physical_given > 0 {
            let phys = PhysicalParams {
                v1: get.f64("params.v1")?,
                v2: get.f64("params.v2")?,
                v_r: get.f64("params.v_r")?,
                diffusion: get.f64("params.diffusion")?,
            };
            let (red, full) = to_reduced(&phys, s_bar).map_err(|e| CliError::Config(e.to_string()))?;
            (red, Some(full.epsilon), Some(phys))
        } else {
            let red = ReducedParams::new(get.f64("params.r")?, get.f64("params.d")?, s_bar)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let eps = get
                .opt("params.epsilon")
                .map(|_| get.positive("params.epsilon"))
                .transpose()?;
            (red, eps, None)
        };

        let sim = SimConfig {
            rel_tol: get.positive("sim.rel_tol")?,
            abs_tol: get.positive("sim.abs_tol")?,
            t_max: get.opt("sim.t_max").map(|_| get.positive("sim.t_max")).transpose()?,
            diag_tol: get.positive("sim.diag_tol")?,
            event_tol: get.positive("sim.event_tol")?,
            max_step: get.positive("sim.max_step")?,
        };

        let strategy: StrategySpec = get
            .str("strategy")?
            .parse()
            .map_err(|e| CliError::Config(format!("strategy: {e}")))?;
        if let StrategySpec::Fixed(s) = strategy {
            s.validate().map_err(|e| CliError::Config(format!("strategy: {e}")))?;
        }

        let search = ConstantSearch {
            family: get.family("search.family")?,
            grid: get.usize_at_least("search.grid", 2)?,
            min_step: get.positive("search.min_step")?,
        };

        let x_r0 = get.f64("full.x_r0")?;
        if x_r0.is_nan() || x_r0 <= 0.0 {
            return Err(CliError::Config(format!("full.x_r0 must be positive, got {x_r0}")));
        }
        let full = FullSpec {
            epsilons: get.positive_list("full.epsilon")?,
            x_r0,
            s_r0: get.opt("full.s_r0").map(|_| get.nonnegative("full.s_r0")).transpose()?,
        };

        let compare = CompareSpec {
            x0s: get.states("compare.x0")?,
            ds: get.nonnegative_list("compare.d")?,
            s_bars: get.positive_list("compare.s_bar")?,
            family: get.family("compare.family")?,
            extra_family: match get.str("compare.extra_family")? {
                "none" => None,
                _ => Some(get.family("compare.extra_family")?),
            },
            one_patch: match get.str("compare.one_patch")? {
                "1" => OnePatch::One,
                "2" => OnePatch::Two,
                "best" => OnePatch::Best,
                other => {
                    return Err(CliError::Config(format!(
                        "compare.one_patch: expected 1, 2 or best, got `{other}`"
                    )))
                }
            },
        };

        let verify = VerifySpec {
            count: get.usize_at_least("verify.count", 1)?,
            ds: get.nonnegative_list("verify.d")?,
            x_max: get.positive("verify.x_max")?,
            hjb_n: get.usize_at_least("hjb.n", 1)?,
            hjb_kinks: get.usize_at_least("hjb.kinks", 0)?,
            hjb_x_max: get.positive("hjb.x_max")?,
            hjb_tol: get.positive("hjb.tol")?,
        };
        if verify.x_max <= s_bar || verify.hjb_x_max <= s_bar {
            return Err(CliError::Config(
                "verify.x_max and hjb.x_max must exceed params.s_bar".into(),
            ));
        }

        let lo = get.state("value.lo")?;
        let hi = get.state("value.hi")?;
        let n = get.usizes("value.n")?;
        let grid = GridDefaults {
            lo: [lo.s1, lo.s2],
            hi: [hi.s1, hi.s2],
            n,
        };

        Ok(Self {
            growth,
            params,
            epsilon,
            physical,
            sim,
            x0: get.state("init.x0")?,
            strategy,
            seed: get.parse("seed")?,
            search,
            full,
            compare,
            verify,
            grid,
            gamma_s_max: get.positive("gamma.s_max")?,
            gamma_n: get.usize_at_least("gamma.n", 2)?,
            output_dir: PathBuf::from(get.str("output.dir")?),
            resolved,
        })
    }

    /// Resolved settings as sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the canonical settings minus the output location, hex
    /// encoded.
    pub fn hash(&self) -> String {
        let text: String = self
            .resolved
            .iter()
            .filter(|(k, _)| !k.starts_with("output."))
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.resolved.get(key).map(String::as_str)
    }
}

/// Splits `key=value` as given to `--set`.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

/// Reads a growth table CSV with columns `s,mu,dmu`.
fn read_growth_table(path: &Path) -> Result<HermiteTable, CliError> {
    let bad = |msg: String| CliError::Config(format!("growth.table {}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["s", "mu", "dmu"] {
        return Err(bad("expected header s,mu,dmu".into()));
    }
    let (mut s, mut mu, mut dmu) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad number `{}`", &rec[i])))
        };
        s.push(field(0)?);
        mu.push(field(1)?);
        dmu.push(field(2)?);
    }
    HermiteTable::new(s, mu, dmu).map_err(|e| bad(e.to_string()))
}

struct Getter<'a>(&'a BTreeMap<String, String>);

impl Getter<'_> {
    fn opt(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn str(&self, key: &str) -> Result<&str, CliError> {
        self.opt(key)
            .ok_or_else(|| CliError::Config(format!("missing `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.str(key)?;
        v.parse()
            .map_err(|_| CliError::Config(format!("{key}: cannot parse `{v}`")))
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        let x: f64 = self.parse(key)?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(CliError::Config(format!("{key} must be finite")))
        }
    }

    fn positive(&self, key: &str) -> Result<f64, CliError> {
        let x = self.f64(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(CliError::Config(format!("{key} must be positive, got {x}")))
        }
    }

    fn nonnegative(&self, key: &str) -> Result<f64, CliError> {
        let x = self.f64(key)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err(CliError::Config(format!("{key} must be nonnegative, got {x}")))
        }
    }

    fn usize_at_least(&self, key: &str, min: usize) -> Result<usize, CliError> {
        let n: usize = self.parse(key)?;
        if n >= min {
            Ok(n)
        } else {
            Err(CliError::Config(format!("{key} must be at least {min}")))
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = self.str(key)?;
        let xs = v
            .split(',')
            .map(|t| t.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| CliError::Config(format!("{key}: expected comma-separated numbers, got `{v}`")))?;
        if xs.is_empty() {
            return Err(CliError::Config(format!("{key}: empty list")));
        }
        Ok(xs)
    }

    fn positive_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let xs = self.list(key)?;
        if xs.iter().all(|&x| x > 0.0) {
            Ok(xs)
        } else {
            Err(CliError::Config(format!("{key}: entries must be positive")))
        }
    }

    fn nonnegative_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let xs = self.list(key)?;
        if xs.iter().all(|&x| x >= 0.0) {
            Ok(xs)
        } else {
            Err(CliError::Config(format!("{key}: entries must be nonnegative")))
        }
    }

    fn state(&self, key: &str) -> Result<State, CliError> {
        parse_state(self.str(key)?).map_err(|e| CliError::Config(format!("{key}: {e}")))
    }

    fn states(&self, key: &str) -> Result<Vec<State>, CliError> {
        self.str(key)?
            .split(';')
            .map(|p| parse_state(p).map_err(|e| CliError::Config(format!("{key}: {e}"))))
            .collect()
    }

    fn usizes(&self, key: &str) -> Result<[usize; 2], CliError> {
        let v = self.str(key)?;
        let parts: Vec<_> = v.split(',').map(|t| t.trim().parse::<usize>().ok()).collect();
        match parts[..] {
            [Some(a), Some(b)] if a >= 2 && b >= 2 => Ok([a, b]),
            _ => Err(CliError::Config(format!(
                "{key}: expected two counts of at least 2, got `{v}`"
            ))),
        }
    }

    fn family(&self, key: &str) -> Result<ConstantFamily, CliError> {
        let v = self.str(key)?;
        v.parse()
            .map_err(|_| CliError::Config(format!("{key}: expected zeta or setpoint, got `{v}`")))
    }
}

/// Parses `s1,s2` into a nonnegative state.
pub fn parse_state(s: &str) -> Result<State, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected s1,s2, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(format!("concentrations must be finite and nonnegative, got ({a}, {b})"));
    }
    Ok(State::new(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults() {
        let c = ScenarioConfig::from_overrides(&[]).unwrap();
        assert_eq!(c.params, ReducedParams::new(0.3, 0.1, 1.0).unwrap());
        assert_eq!(c.x0, State::new(4.0, 1.5));
        assert_eq!(c.seed, 42);
        assert_eq!(c.compare.x0s.len(), 5);
        assert_eq!(c.compare.one_patch, OnePatch::One);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn file_then_overrides() {
        let text = "# scenario\nparams.d = 10\ninit.x0 = 4, 0.5  # start\n";
        let c = ScenarioConfig::from_text(text, &set(&[("params.d", "1")])).unwrap();
        assert_eq!(c.params.d, 1.0);
        assert_eq!(c.x0, State::new(4.0, 0.5));
    }

    #[test]
    fn hash_tracks_effective_values() {
        let a = ScenarioConfig::from_text("params.d = 0.1\n", &[]).unwrap();
        let b = ScenarioConfig::from_overrides(&[]).unwrap();
        let c = ScenarioConfig::from_overrides(&set(&[("params.d", "10")])).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        let d = ScenarioConfig::from_overrides(&set(&[("output.dir", "elsewhere")])).unwrap();
        assert_eq!(b.hash(), d.hash());
    }

    #[test]
    fn physical_volumes() {
        let c = ScenarioConfig::from_overrides(&set(&[
            ("params.v1", "3"),
            ("params.v2", "7"),
            ("params.v_r", "0.1"),
            ("params.diffusion", "0.01"),
        ]))
        .unwrap();
        assert!((c.params.r - 0.3).abs() < 1e-15);
        assert!((c.params.d - 0.1).abs() < 1e-15);
        assert!((c.epsilon.unwrap() - 0.01).abs() < 1e-15);
        assert!(c.get("params.r").is_none());
    }

    #[test]
    fn rejects() {
        let bad: &[&[(&str, &str)]] = &[
            &[("params.nope", "1")],
            &[("params.r", "1.5")],
            &[("params.v1", "3")],
            &[
                ("params.v1", "3"),
                ("params.v2", "7"),
                ("params.v_r", "1"),
                ("params.diffusion", "1"),
                ("params.r", "0.3"),
            ],
            &[("full.x_r0", "0")],
            &[("strategy", "twopump")],
            &[("strategy", "const:1.5:0.5")],
            &[("init.x0", "4")],
            &[("init.x0", "-1,2")],
            &[("growth.kind", "haldane")],
            &[("compare.one_patch", "3")],
            &[("value.n", "1,5")],
        ];
        for pairs in bad {
            let e = ScenarioConfig::from_overrides(&set(pairs)).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{pairs:?}");
        }
        assert!(ScenarioConfig::from_text("params.d 0.1\n", &[]).is_err());
        assert!(ScenarioConfig::from_text("params.d = 1\nparams.d = 2\n", &[]).is_err());
    }

    #[test]
    fn strategy_strings() {
        for s in [
            "optimal",
            "onepump:1",
            "onepump:2",
            "homog",
            "const:0.5:0.3",
            "constsr:0.3:0.4",
            "bestconst",
        ] {
            let spec: StrategySpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<StrategySpec>().unwrap(), spec);
        }
    }
}
