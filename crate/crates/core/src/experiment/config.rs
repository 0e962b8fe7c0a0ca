//! Experiment configuration: `key=value` settings, validated as a whole.
//!
//! Sources are applied in order: defaults, then a config file, then
//! positional `key=value` words, then flags. Later sources win.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::PoissonTruncation;
use crate::lattice::AntKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Gen,
    Kernel,
    Balayage,
    Phi,
    Llt,
    Green,
    All,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Gen,
        Command::Kernel,
        Command::Balayage,
        Command::Phi,
        Command::Llt,
        Command::Green,
        Command::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Kernel => "kernel",
            Command::Balayage => "balayage",
            Command::Phi => "phi",
            Command::Llt => "llt",
            Command::Green => "green",
            Command::All => "all",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("command", format!("unknown subcommand `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Law {
    /// Bond percolation with open probability `p`.
    Bernoulli(f64),
    /// Conductances on `[1/K, K]`.
    Conductance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub dim: usize,
    pub side: usize,
    pub law: Law,
    pub kind: AntKind,
    pub seeds: Vec<u64>,
    pub tol: f64,
    pub out: PathBuf,
    pub n_list: Vec<usize>,
    pub t_grid: Vec<f64>,
    /// Grid points `x = s e_1`, given by `s`.
    pub x_grid: Vec<f64>,
    /// Cylinder radii; defaults to those of 8, 16 that fit in `L/4`.
    pub radius: Vec<usize>,
    /// Cylinder horizon for balayage; `None` means `min(R^2, 64)`.
    pub horizon: Option<usize>,
    /// Kernel checkpoint times; defaults to those of 16, 64 inside the margin horizon.
    pub times: Vec<usize>,
    /// Caloric test functions per balayage cylinder.
    pub functions: usize,
    /// Boundary vertices in the lateral-delta Harnack diagnostic (0 skips it).
    pub lateral: usize,
    /// Also measure the continuous-time local limit.
    pub continuous: bool,
}

/// Keys accepted in files, positional words and flags.
pub const KEYS: [&str; 17] = [
    "d", "L", "p", "K", "kind", "seeds", "tol", "out", "n-list", "t-grid", "x-grid", "radius", "horizon",
    "times", "functions", "lateral", "continuous",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = match key {
        "seed" => "seeds",
        "n_list" => "n-list",
        "t_grid" => "t-grid",
        "x_grid" => "x-grid",
        other => other,
    };
    KEYS.into_iter().find(|&k| k == key)
}

fn parse_one<T: FromStr>(key: &str, text: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{text}`")))
}

fn parse_list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_one(key, s))
        .collect()
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Defaults for `command`; grid defaults that depend on `L` are filled by
    /// [`ExperimentConfig::finish`].
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            dim: 2,
            side: 128,
            law: Law::Bernoulli(0.7),
            kind: AntKind::Myopic,
            seeds: vec![1],
            tol: 1e-10,
            out: PathBuf::from("phl-out"),
            n_list: Vec::new(),
            t_grid: vec![1.0, 2.0],
            x_grid: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            radius: Vec::new(),
            horizon: None,
            times: Vec::new(),
            functions: 5,
            lateral: 0,
            continuous: false,
        }
    }

    /// Apply one setting. Unknown keys are rejected by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = canonical_key(key).ok_or_else(|| Error::config(key, "unknown key"))?;
        match key {
            "d" => self.dim = parse_one(key, value)?,
            "L" => self.side = parse_one(key, value)?,
            "p" => self.law = Law::Bernoulli(parse_one(key, value)?),
            "K" => {
                self.law = Law::Conductance(parse_one(key, value)?);
                self.kind = AntKind::Conductance;
            }
            "kind" => self.kind = value.trim().parse().map_err(|_| Error::config(key, format!("unknown ant kind `{value}`")))?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "tol" => self.tol = parse_one(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "n-list" => self.n_list = parse_list(key, value)?,
            "t-grid" => self.t_grid = parse_list(key, value)?,
            "x-grid" => self.x_grid = parse_list(key, value)?,
            "radius" => self.radius = parse_list(key, value)?,
            "horizon" => {
                self.horizon = match value.trim() {
                    "auto" => None,
                    v => Some(parse_one(key, v)?),
                }
            }
            "times" => self.times = parse_list(key, value)?,
            "functions" => self.functions = parse_one(key, value)?,
            "lateral" => self.lateral = parse_one(key, value)?,
            "continuous" => self.continuous = parse_one(key, value)?,
            _ => unreachable!("key table and match agree"),
        }
        Ok(())
    }

    /// Apply `key=value` words.
    pub fn apply_words<'a>(&mut self, words: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for word in words {
            let (k, v) = word
                .split_once('=')
                .ok_or_else(|| Error::config(word, "expected `key=value`"))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Apply a config file body: one `key = value` per line, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, "expected `key = value`"))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Margin horizon `(L/4)^2`.
    pub fn margin_horizon(&self) -> usize {
        (self.side / 4).pow(2)
    }

    /// Fill `L`-dependent defaults, then validate every field.
    pub fn finish(mut self) -> Result<Self> {
        if self.n_list.is_empty() {
            self.n_list = self.default_n_list();
        }
        if self.radius.is_empty() {
            self.radius = [8, 16].into_iter().filter(|&r| r <= self.side / 4).collect();
            if self.radius.is_empty() {
                self.radius = vec![self.side / 4];
            }
        }
        if self.times.is_empty() {
            let h = self.margin_horizon();
            self.times = [16, 64].into_iter().filter(|&t| t <= h).collect();
            if self.times.is_empty() {
                self.times = vec![h];
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Truncation tolerance for the Poisson weights of the continuous reference.
    pub fn poisson_tol(&self) -> f64 {
        self.tol.max(1e-15)
    }

    /// Walk steps the local limit needs at `n`: `floor(n t_max) + 1` sites of
    /// the discrete kernel, or one less than the Poisson terms when the
    /// continuous-time kernel is also measured.
    pub fn llt_steps(&self, n: usize) -> usize {
        let t_max = self.t_grid.iter().cloned().fold(1.0, f64::max);
        let time = n as f64 * t_max;
        let discrete = time.floor() as usize + 1;
        if !self.continuous {
            return discrete;
        }
        PoissonTruncation::new(time, self.poisson_tol()).map_or(usize::MAX, |p| discrete.max(p.terms() - 1))
    }

    /// The three largest powers of 4 whose longest time fits the margin horizon.
    fn default_n_list(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut n = 4usize;
        while self.llt_steps(n) <= self.margin_horizon() {
            out.push(n);
            n *= 4;
        }
        let skip = out.len().saturating_sub(3);
        out.split_off(skip)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(key, msg));
        if !(2..=3).contains(&self.dim) {
            return bad("d", format!("dimension must be 2 or 3, got {}", self.dim));
        }
        let max_side = if self.dim == 2 { 4096 } else { 256 };
        if self.side < 16 || self.side > max_side {
            return bad("L", format!("side must lie in [16, {max_side}] for d = {}, got {}", self.dim, self.side));
        }
        match self.law {
            Law::Bernoulli(p) if !(p > 0.0 && p <= 1.0) => return bad("p", format!("p must lie in (0, 1], got {p}")),
            Law::Conductance(k) if !(k >= 1.0 && k.is_finite()) => {
                return bad("K", format!("K must be finite and >= 1, got {k}"))
            }
            _ => {}
        }
        match (self.law, self.kind) {
            (Law::Conductance(_), k) if k != AntKind::Conductance => {
                return bad("kind", "conductance laws need kind=conductance".into())
            }
            (Law::Bernoulli(_), AntKind::Conductance) => {
                return bad("kind", "kind=conductance needs a conductance law (set K)".into())
            }
            _ => {}
        }
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad("seeds", "seeds must be distinct".into());
        }
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return bad("tol", format!("tolerance must lie in (0, 1e-3], got {}", self.tol));
        }
        if self.out.as_os_str().is_empty() {
            return bad("out", "output directory must be named".into());
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("t-grid", "times must be positive and finite".into());
        }
        if self.x_grid.is_empty() || self.x_grid.iter().any(|x| !x.is_finite()) {
            return bad("x-grid", "grid points must be finite".into());
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n-list", "n values must be positive (box too small for any default)".into());
        }
        for &n in &self.n_list {
            let steps = self.llt_steps(n);
            if steps > self.margin_horizon() {
                return bad(
                    "n-list",
                    format!("n = {n} needs {steps} steps, beyond the margin horizon (L/4)^2 = {}", self.margin_horizon()),
                );
            }
        }
        if self.radius.is_empty() || self.radius.iter().any(|&r| r < 3 || r > self.side / 4) {
            return bad("radius", format!("radii must lie in [3, L/4 = {}]", self.side / 4));
        }
        if self.horizon == Some(0) {
            return bad("horizon", "horizon must be positive".into());
        }
        if self.times.is_empty() || self.times.iter().any(|&t| t > self.margin_horizon()) {
            return bad("times", format!("checkpoint times must lie in [0, (L/4)^2 = {}]", self.margin_horizon()));
        }
        if self.functions == 0 {
            return bad("functions", "at least one test function is required".into());
        }
        if self.command == Command::Green && self.dim != 3 {
            return bad("d", "the Green's function needs d = 3".into());
        }
        Ok(())
    }

    /// Canonical text form: the subcommand followed by every key.
    pub fn emit(&self) -> String {
        let mut s = String::from(self.command.name());
        let mut put = |k: &str, v: String| {
            let _ = write!(s, " {k}={v}");
        };
        put("d", self.dim.to_string());
        put("L", self.side.to_string());
        match self.law {
            Law::Bernoulli(p) => put("p", p.to_string()),
            Law::Conductance(k) => put("K", k.to_string()),
        }
        put("kind", self.kind.name().to_string());
        put("seeds", join(&self.seeds));
        put("tol", format!("{:e}", self.tol));
        put("out", self.out.display().to_string());
        put("n-list", join(&self.n_list));
        put("t-grid", join(&self.t_grid));
        put("x-grid", join(&self.x_grid));
        put("radius", join(&self.radius));
        put("horizon", self.horizon.map_or("auto".into(), |h| h.to_string()));
        put("times", join(&self.times));
        put("functions", self.functions.to_string());
        put("lateral", self.lateral.to_string());
        put("continuous", self.continuous.to_string());
        s
    }
}

/// Parse `"<subcommand> key=value ..."`, filling defaults and validating.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut words = text.split_whitespace();
    let command: Command = words
        .next()
        .ok_or_else(|| Error::config("command", "missing subcommand"))?
        .parse()?;
    let mut cfg = ExperimentConfig::defaults(command);
    cfg.apply_words(words)?;
    cfg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn continuous_defaults_respect_poisson_tail() {
        for side in [48, 64, 256] {
            let cfg = parse_config(&format!("llt L={side} continuous=true")).unwrap();
            let h = cfg.margin_horizon();
            for &n in &cfg.n_list {
                let terms = PoissonTruncation::new(2.0 * n as f64, cfg.poisson_tol()).unwrap().terms();
                assert!(terms <= h + 1, "L = {side}, n = {n}: {terms} terms, horizon {h}");
            }
            let discrete = parse_config(&format!("llt L={side}")).unwrap();
            assert!(cfg.n_list.last() <= discrete.n_list.last());
        }
        let e = parse_config("llt L=48 continuous=true n-list=64").unwrap_err();
        assert_eq!(key_of(e), "n-list");
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("llt d=2 L=256 p=0.7 seed=1").unwrap();
        assert_eq!(cfg.command, Command::Llt);
        assert_eq!((cfg.dim, cfg.side, cfg.law), (2, 256, Law::Bernoulli(0.7)));
        assert_eq!(cfg.seeds, vec![1]);
        assert_eq!(cfg.kind, AntKind::Myopic);
        assert_eq!(cfg.t_grid, vec![1.0, 2.0]);
        // (256/4)^2 = 4096 admits n * 2 + 1 <= 4096
        assert_eq!(cfg.n_list, vec![64, 256, 1024]);
    }

    #[test]
    fn rejections_name_the_key() {
        assert_eq!(key_of(parse_config("llt p=1.5").unwrap_err()), "p");
        assert_eq!(key_of(parse_config("llt bogus=3").unwrap_err()), "bogus");
        assert_eq!(key_of(parse_config("llt L=abc").unwrap_err()), "L");
        assert_eq!(key_of(parse_config("green d=2").unwrap_err()), "d");
        assert_eq!(key_of(parse_config("llt n-list=4096").unwrap_err()), "n-list");
        assert_eq!(key_of(parse_config("phi radius=40").unwrap_err()), "radius");
        assert_eq!(key_of(parse_config("gen kind=conductance").unwrap_err()), "kind");
        assert_eq!(key_of(parse_config("gen seeds=2,2").unwrap_err()), "seeds");
        assert_eq!(key_of(parse_config("frobnicate").unwrap_err()), "command");
    }

    #[test]
    fn conductance_law_switches_kind() {
        let cfg = parse_config("kernel K=4").unwrap();
        assert_eq!((cfg.law, cfg.kind), (Law::Conductance(4.0), AntKind::Conductance));
    }

    #[test]
    fn file_text_and_comments() {
        let mut cfg = ExperimentConfig::defaults(Command::Gen);
        cfg.apply_text("# sample\nL = 64\n\np = 0.55  # subcritical-ish\nseeds = 3,4\n").unwrap();
        let cfg = cfg.finish().unwrap();
        assert_eq!((cfg.side, cfg.law, cfg.seeds.clone()), (64, Law::Bernoulli(0.55), vec![3, 4]));
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            0usize..7,
            prop_oneof![Just(2usize), Just(3usize)],
            16usize..200,
            prop_oneof![(0.01f64..=1.0).prop_map(Law::Bernoulli), (1.0f64..50.0).prop_map(Law::Conductance)],
            prop::collection::vec(any::<u64>(), 1..4),
            1e-14f64..1e-4,
            prop::collection::vec(0.01f64..4.0, 1..4),
            prop::collection::vec(-3.0f64..3.0, 1..6),
            (prop::option::of(1usize..100), 0usize..4, any::<bool>(), 1usize..9),
        )
            .prop_map(|(c, dim, side, law, mut seeds, tol, t_grid, x_grid, (horizon, lateral, continuous, functions))| {
                seeds.sort_unstable();
                seeds.dedup();
                let mut cfg = ExperimentConfig::defaults(Command::ALL[c]);
                cfg.dim = dim;
                cfg.side = side;
                cfg.law = law;
                if let Law::Conductance(_) = law {
                    cfg.kind = AntKind::Conductance;
                }
                cfg.seeds = seeds;
                cfg.tol = tol;
                cfg.t_grid = t_grid;
                cfg.x_grid = x_grid;
                cfg.horizon = horizon;
                cfg.lateral = lateral;
                cfg.continuous = continuous;
                cfg.functions = functions;
                cfg.radius = vec![3, side / 4];
                cfg.times = vec![0, cfg.margin_horizon()];
                cfg.n_list = vec![1];
                cfg
            })
    }

    proptest! {
        #[test]
        fn emit_then_parse_is_identity(cfg in arb_config()) {
            prop_assume!(cfg.validate().is_ok());
            let back = parse_config(&cfg.emit()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
