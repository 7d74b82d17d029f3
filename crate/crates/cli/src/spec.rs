//! Experiment files: a flat `key = value` text format.
//!
//! Lines are `key = value`; `#` starts a comment. Keys fall in two groups.
//! Experiment keys (`name`, `sweep`, `grid`, `designs`, `estimators`,
//! `trials`, `seed`, `output`, `pgam_*`) shape the run. Every other key is a
//! scenario parameter and may be overridden per case with
//! `case.<name> = key=value; key=value`.
//!
//! Units are part of the key name: `_db`/`_dbw` keys are decibels, `_deg`
//! degrees, `_m` metres, `_bps` bit/s/Hz; every other number is linear.
//! Decibel and degree inputs are kept as written and converted only when a
//! [`SystemConfig`] is built, so a manifest reproduces the run bit for bit.

use std::fmt::Write as _;
use std::path::PathBuf;

use starfd::channel::{Direction, GeometryAngles, UserDrops};
use starfd::config::{db_to_linear, RicianFactors};
use starfd::geometry::{CellGeometry, Region, UserPosition, DEFAULT_QUADRATURE_NODES};
use starfd::{
    NoisePowers, PgamOptions, PowerConfig, Scenario, SelfInterference, Simplifications, SystemConfig, TargetRates,
    Weights,
};

use crate::CliError;

/// Quantity varied along the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Transmit SNR `P_t / sigma^2` in dB.
    SnrDb,
    NElements,
    /// Share of the budget spent at the BS.
    Tau,
    /// SIC error factor.
    Xi,
    /// Self-interference scale.
    Beta,
    /// Both edge-user targets (bit/s/Hz).
    TargetRate,
}

impl SweepVar {
    pub const ALL: [SweepVar; 6] =
        [SweepVar::SnrDb, SweepVar::NElements, SweepVar::Tau, SweepVar::Xi, SweepVar::Beta, SweepVar::TargetRate];

    /// Spelling in experiment files.
    pub fn key(self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::NElements => "n_elements",
            SweepVar::Tau => "tau",
            SweepVar::Xi => "xi",
            SweepVar::Beta => "beta",
            SweepVar::TargetRate => "target-rate",
        }
    }

    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            SweepVar::TargetRate => "target_rate",
            other => other.key(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.key() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// Projected gradient ascent started from the aligned surface.
    Optimal,
    /// Angle-based phase alignment.
    Aligned,
    /// Uniformly random phases.
    Random,
}

impl Design {
    pub fn key(self) -> &'static str {
        match self {
            Design::Optimal => "optimal",
            Design::Aligned => "aligned",
            Design::Random => "random",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Design::Optimal, Design::Aligned, Design::Random].into_iter().find(|d| d.key() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorSet {
    ClosedForm,
    MonteCarlo,
    Both,
}

impl EstimatorSet {
    pub fn key(self) -> &'static str {
        match self {
            EstimatorSet::ClosedForm => "cf",
            EstimatorSet::MonteCarlo => "mc",
            EstimatorSet::Both => "both",
        }
    }

    pub fn wants_mc(self) -> bool {
        self != EstimatorSet::ClosedForm
    }

    fn parse(s: &str) -> Option<Self> {
        [EstimatorSet::ClosedForm, EstimatorSet::MonteCarlo, EstimatorSet::Both].into_iter().find(|e| e.key() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerScheme {
    /// Fixed `tau`, `alpha1` and `ul_share_u1` splits.
    Fixed,
    /// Exact edge targets from the closed-form allocation; uses the whole budget.
    ClosedForm,
    /// Fixed `tau`, edge users get just enough power for their targets.
    TargetSplit,
}

impl PowerScheme {
    pub fn key(self) -> &'static str {
        match self {
            PowerScheme::Fixed => "fixed",
            PowerScheme::ClosedForm => "closed-form",
            PowerScheme::TargetSplit => "target-split",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [PowerScheme::Fixed, PowerScheme::ClosedForm, PowerScheme::TargetSplit].into_iter().find(|p| p.key() == s)
    }
}

/// Scenario parameters exactly as written in an experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub center_radius_m: f64,
    pub edge_radius_m: f64,
    pub bs_ris_distance_m: f64,
    pub pathloss_exponent: f64,
    pub n_elements: usize,
    pub kappa: f64,
    /// `(azimuth, elevation)` of the BS-RIS, RIS-u1d, RIS-u2d, RIS-u1u and
    /// RIS-u2u links.
    pub angles_deg: [(f64, f64); 5],
    pub element_spacing: f64,
    pub noise_dbw: f64,
    pub sic_error: f64,
    pub si_beta: f64,
    pub si_lambda: f64,
    /// u1d, u2d, u1u, u2u, center flow, edge flow.
    pub weights: [f64; 6],
    pub target_dl_bps: f64,
    pub target_ul_bps: f64,
    pub scenario: Scenario,
    pub perfect_sic: bool,
    pub perfect_si: bool,
    pub no_ris_to_center: bool,
    pub fixed_locations: bool,
    /// `(radius, angle)` of u1d, u2d, u1u, u2u around their disk centers.
    pub drops_m_deg: [(f64, f64); 4],
    pub quadrature_nodes: usize,
    pub snr_db: f64,
    pub tau: f64,
    pub alpha1: f64,
    pub ul_share_u1: f64,
    pub rho_t: f64,
    pub power_scheme: PowerScheme,
}

const ANGLE_KEYS: [&str; 5] = ["angle_bs_ris_deg", "angle_ris_u1d_deg", "angle_ris_u2d_deg", "angle_ris_u1u_deg", "angle_ris_u2u_deg"];
const WEIGHT_KEYS: [&str; 6] = ["weight_u1d", "weight_u2d", "weight_u1u", "weight_u2u", "weight_center_flow", "weight_edge_flow"];
const DROP_KEYS: [&str; 4] = ["drop_u1d_m_deg", "drop_u2d_m_deg", "drop_u1u_m_deg", "drop_u2u_m_deg"];
const DROP_REGIONS: [Region; 4] = [Region::Center, Region::Edge, Region::Center, Region::Edge];

impl Default for Params {
    fn default() -> Self {
        Self {
            center_radius_m: 50.0,
            edge_radius_m: 30.0,
            bs_ris_distance_m: 80.0,
            pathloss_exponent: 2.7,
            n_elements: 20,
            kappa: 3.0,
            angles_deg: [(40.0, 60.0), (-30.0, 100.0), (20.0, 75.0), (-50.0, 110.0), (65.0, 80.0)],
            element_spacing: 0.5,
            noise_dbw: 0.0,
            sic_error: 0.0,
            si_beta: 0.001,
            si_lambda: 0.1,
            weights: [0.8; 6],
            target_dl_bps: 1.0,
            target_ul_bps: 1.0,
            scenario: Scenario::NomaPair,
            perfect_sic: false,
            perfect_si: false,
            no_ris_to_center: false,
            fixed_locations: false,
            drops_m_deg: [(25.0, 90.0), (15.0, 60.0), (25.0, 270.0), (15.0, 300.0)],
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            snr_db: 40.0,
            tau: 0.8,
            alpha1: 0.2,
            ul_share_u1: 0.5,
            rho_t: 0.5,
            power_scheme: PowerScheme::Fixed,
        }
    }
}

fn num(v: &str) -> Result<f64, String> {
    let x: f64 = v.trim().parse().map_err(|_| format!("expected a number, got '{}'", v.trim()))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got '{}'", v.trim()))
    }
}

fn count(v: &str) -> Result<usize, String> {
    v.trim().parse().map_err(|_| format!("expected a non-negative integer, got '{}'", v.trim()))
}

fn flag(v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, got '{other}'")),
    }
}

fn pair(v: &str) -> Result<(f64, f64), String> {
    match v.split(',').collect::<Vec<_>>().as_slice() {
        [a, b] => Ok((num(a)?, num(b)?)),
        _ => Err(format!("expected two comma-separated numbers, got '{}'", v.trim())),
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_pair((a, b): (f64, f64)) -> String {
    format!("{}, {}", fmt_f64(a), fmt_f64(b))
}

fn scenario_key(s: Scenario) -> &'static str {
    match s {
        Scenario::NomaPair => "noma",
        Scenario::Bidirectional => "bidirectional",
    }
}

impl Params {
    /// Sets one key; `Ok(false)` when the key is not a scenario parameter.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let v = value;
        match key {
            "center_radius_m" => self.center_radius_m = num(v)?,
            "edge_radius_m" => self.edge_radius_m = num(v)?,
            "bs_ris_distance_m" => self.bs_ris_distance_m = num(v)?,
            "pathloss_exponent" => self.pathloss_exponent = num(v)?,
            "n_elements" => self.n_elements = count(v)?,
            "kappa" => self.kappa = num(v)?,
            "element_spacing" => self.element_spacing = num(v)?,
            "noise_dbw" => self.noise_dbw = num(v)?,
            "sic_error" => self.sic_error = num(v)?,
            "si_beta" => self.si_beta = num(v)?,
            "si_lambda" => self.si_lambda = num(v)?,
            "target_dl_bps" => self.target_dl_bps = num(v)?,
            "target_ul_bps" => self.target_ul_bps = num(v)?,
            "scenario" => {
                self.scenario = match v.trim() {
                    "noma" => Scenario::NomaPair,
                    "bidirectional" => Scenario::Bidirectional,
                    other => return Err(format!("expected noma or bidirectional, got '{other}'")),
                }
            }
            "perfect_sic" => self.perfect_sic = flag(v)?,
            "perfect_si" => self.perfect_si = flag(v)?,
            "no_ris_to_center" => self.no_ris_to_center = flag(v)?,
            "fixed_locations" => self.fixed_locations = flag(v)?,
            "quadrature_nodes" => self.quadrature_nodes = count(v)?,
            "snr_db" => self.snr_db = num(v)?,
            "tau" => self.tau = num(v)?,
            "alpha1" => self.alpha1 = num(v)?,
            "ul_share_u1" => self.ul_share_u1 = num(v)?,
            "rho_t" => self.rho_t = num(v)?,
            "power_scheme" => {
                self.power_scheme = PowerScheme::parse(v.trim())
                    .ok_or_else(|| format!("expected fixed, closed-form or target-split, got '{}'", v.trim()))?
            }
            _ => {
                if let Some(i) = ANGLE_KEYS.iter().position(|k| *k == key) {
                    self.angles_deg[i] = pair(v)?;
                } else if let Some(i) = WEIGHT_KEYS.iter().position(|k| *k == key) {
                    self.weights[i] = num(v)?;
                } else if let Some(i) = DROP_KEYS.iter().position(|k| *k == key) {
                    self.drops_m_deg[i] = pair(v)?;
                } else {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Every parameter in canonical text, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e = vec![
            ("scenario", scenario_key(self.scenario).to_string()),
            ("center_radius_m", fmt_f64(self.center_radius_m)),
            ("edge_radius_m", fmt_f64(self.edge_radius_m)),
            ("bs_ris_distance_m", fmt_f64(self.bs_ris_distance_m)),
            ("pathloss_exponent", fmt_f64(self.pathloss_exponent)),
            ("n_elements", self.n_elements.to_string()),
            ("kappa", fmt_f64(self.kappa)),
            ("element_spacing", fmt_f64(self.element_spacing)),
        ];
        e.extend(ANGLE_KEYS.iter().zip(self.angles_deg).map(|(k, a)| (*k, fmt_pair(a))));
        e.extend([
            ("noise_dbw", fmt_f64(self.noise_dbw)),
            ("snr_db", fmt_f64(self.snr_db)),
            ("sic_error", fmt_f64(self.sic_error)),
            ("si_beta", fmt_f64(self.si_beta)),
            ("si_lambda", fmt_f64(self.si_lambda)),
        ]);
        e.extend(WEIGHT_KEYS.iter().zip(self.weights).map(|(k, w)| (*k, fmt_f64(w))));
        e.extend([
            ("target_dl_bps", fmt_f64(self.target_dl_bps)),
            ("target_ul_bps", fmt_f64(self.target_ul_bps)),
            ("perfect_sic", self.perfect_sic.to_string()),
            ("perfect_si", self.perfect_si.to_string()),
            ("no_ris_to_center", self.no_ris_to_center.to_string()),
            ("fixed_locations", self.fixed_locations.to_string()),
        ]);
        e.extend(DROP_KEYS.iter().zip(self.drops_m_deg).map(|(k, d)| (*k, fmt_pair(d))));
        e.extend([
            ("quadrature_nodes", self.quadrature_nodes.to_string()),
            ("power_scheme", self.power_scheme.key().to_string()),
            ("tau", fmt_f64(self.tau)),
            ("alpha1", fmt_f64(self.alpha1)),
            ("ul_share_u1", fmt_f64(self.ul_share_u1)),
            ("rho_t", fmt_f64(self.rho_t)),
        ]);
        e
    }

    /// Copy with the sweep variable set to `value`.
    pub fn at(&self, var: SweepVar, value: f64) -> Self {
        let mut p = self.clone();
        match var {
            SweepVar::SnrDb => p.snr_db = value,
            SweepVar::NElements => p.n_elements = value as usize,
            SweepVar::Tau => p.tau = value,
            SweepVar::Xi => p.sic_error = value,
            SweepVar::Beta => p.si_beta = value,
            SweepVar::TargetRate => {
                p.target_dl_bps = value;
                p.target_ul_bps = value;
            }
        }
        p
    }

    pub fn system(&self) -> SystemConfig {
        let dir = |(az, el): (f64, f64)| Direction::from_degrees(az, el);
        let a = self.angles_deg;
        let w = self.weights;
        let drop = |i: usize| UserPosition {
            radius: self.drops_m_deg[i].0,
            angle: self.drops_m_deg[i].1.to_radians(),
            region: DROP_REGIONS[i],
        };
        SystemConfig {
            geometry: CellGeometry {
                center_radius: self.center_radius_m,
                edge_radius: self.edge_radius_m,
                bs_ris_distance: self.bs_ris_distance_m,
                exponent: self.pathloss_exponent,
            },
            n_elements: self.n_elements,
            kappa: RicianFactors::uniform(self.kappa),
            angles: GeometryAngles {
                bs_ris: dir(a[0]),
                ris_u1d: dir(a[1]),
                ris_u2d: dir(a[2]),
                ris_u1u: dir(a[3]),
                ris_u2u: dir(a[4]),
                spacing: self.element_spacing,
            },
            noise: NoisePowers::uniform(db_to_linear(self.noise_dbw)),
            sic_error: self.sic_error,
            self_interference: SelfInterference { beta: self.si_beta, lambda: self.si_lambda },
            weights: Weights { u1d: w[0], u2d: w[1], u1u: w[2], u2u: w[3], center_flow: w[4], edge_flow: w[5] },
            targets: TargetRates { downlink: self.target_dl_bps, uplink: self.target_ul_bps },
            scenario: self.scenario,
            simplifications: Simplifications {
                perfect_sic: self.perfect_sic,
                no_ris_to_center: self.no_ris_to_center,
                fixed_locations: self.fixed_locations,
                perfect_si: self.perfect_si,
            },
            fixed_drops: UserDrops { u1d: drop(0), u2d: drop(1), u1u: drop(2), u2u: drop(3) },
            quadrature_nodes: self.quadrature_nodes,
        }
    }

    /// Total budget `P_t = sigma^2 10^(snr/10)` (W).
    pub fn total_power(&self) -> f64 {
        db_to_linear(self.noise_dbw) * db_to_linear(self.snr_db)
    }

    /// Powers of the fixed split.
    pub fn fixed_split(&self) -> starfd::Result<PowerConfig> {
        PowerConfig::from_split(self.total_power(), self.tau, self.alpha1, self.ul_share_u1)
    }

    /// Every rule this parameter set breaks, each prefixed with `context`.
    pub fn problems(&self, context: &str) -> Vec<String> {
        let mut errs: Vec<String> = self.system().validation_errors();
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            errs.push(format!("tau must lie in (0, 1] (got {}); use 0.01 for the uplink-only limit", fmt_f64(self.tau)));
        }
        if !(self.alpha1 >= 0.0 && self.alpha1 < 0.5) {
            errs.push(format!(
                "alpha1 = {} breaks the NOMA ordering alpha1 < alpha2 = 1 - alpha1",
                fmt_f64(self.alpha1)
            ));
        }
        if !(0.0..=1.0).contains(&self.ul_share_u1) {
            errs.push(format!("ul_share_u1 must lie in [0, 1] (got {})", fmt_f64(self.ul_share_u1)));
        }
        if !(0.0..=1.0).contains(&self.rho_t) {
            errs.push(format!("rho_t must lie in [0, 1] (got {})", fmt_f64(self.rho_t)));
        }
        errs.into_iter().map(|e| format!("{context}: {e}")).collect()
    }
}

/// Named parameter overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub name: String,
    pub params: Params,
}

/// A resolved, validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: Params,
    /// Base parameters with each case's overrides applied, in file order.
    pub cases: Vec<Case>,
    pub sweep: SweepVar,
    /// Strictly increasing.
    pub grid: Vec<f64>,
    pub designs: Vec<Design>,
    pub estimators: EstimatorSet,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub pgam: PgamOptions,
}

/// Expands `a:step:b` ranges and comma lists; range points are rounded to
/// 12 decimals so `0.05:0.05:1` yields `0.15`, not `0.15000000000000002`.
fn parse_grid(v: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(num(x)?),
            [a, step, b] => {
                let (a, step, b) = (num(a)?, num(step)?, num(b)?);
                if !(step > 0.0) || b < a {
                    return Err(format!("range '{item}' needs a positive step and start <= stop"));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(format!("range '{item}' has more than 100000 points"));
                }
                for i in 0..=n {
                    let x = a + i as f64 * step;
                    out.push(format!("{x:.12}").parse::<f64>().expect("formatted float parses"));
                }
            }
            _ => return Err(format!("grid item '{item}' is neither a number nor start:step:stop")),
        }
    }
    Ok(out)
}

fn list<T>(v: &str, parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| format!("unknown {what} '{s}'")))
        .collect()
}

impl ExperimentSpec {
    /// Parses and validates an experiment file, reporting every problem.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut errs = Vec::new();
        let mut base = Params::default();
        let mut case_lines: Vec<(String, String, usize)> = Vec::new();
        let mut name = String::from("experiment");
        let mut sweep = None;
        let mut grid = None;
        let mut designs = vec![Design::Aligned];
        let mut estimators = EstimatorSet::ClosedForm;
        let mut trials = 100_000usize;
        let mut seed = 1u64;
        let mut output = None;
        let mut pgam = PgamOptions::default();
        let mut seen = std::collections::HashSet::new();

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errs.push(format!("line {lineno}: expected 'key = value'"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                errs.push(format!("line {lineno}: duplicate key '{key}'"));
                continue;
            }
            let res: Result<(), String> = match key {
                "name" => {
                    name = value.to_string();
                    Ok(())
                }
                "sweep" => SweepVar::parse(value)
                    .map(|s| sweep = Some(s))
                    .ok_or_else(|| format!("unknown sweep variable '{value}'")),
                "grid" => parse_grid(value).map(|g| grid = Some(g)),
                "designs" => list(value, Design::parse, "design").map(|d| designs = d),
                "estimators" => EstimatorSet::parse(value)
                    .map(|e| estimators = e)
                    .ok_or_else(|| format!("expected cf, mc or both, got '{value}'")),
                "trials" => count(value).map(|t| trials = t),
                "seed" => value.parse().map(|s| seed = s).map_err(|_| format!("expected an unsigned seed, got '{value}'")),
                "output" => {
                    output = Some(PathBuf::from(value));
                    Ok(())
                }
                "pgam_step" => num(value).map(|x| pgam.step = x),
                "pgam_amplitude_scale" => num(value).map(|x| pgam.amplitude_scale = x),
                "pgam_tolerance" => num(value).map(|x| pgam.tolerance = x),
                "pgam_max_iters" => count(value).map(|x| pgam.max_iters = x),
                _ if key.starts_with("case.") => {
                    case_lines.push((key["case.".len()..].to_string(), value.to_string(), lineno));
                    Ok(())
                }
                _ => match base.set(key, value) {
                    Ok(true) => Ok(()),
                    Ok(false) => Err(format!("unknown key '{key}'")),
                    Err(e) => Err(e),
                },
            };
            if let Err(e) = res {
                errs.push(format!("line {lineno}: {key}: {e}"));
            }
        }

        let mut cases = Vec::new();
        for (cname, body, lineno) in case_lines {
            if cname.is_empty() || cname.contains(',') || cname.contains(char::is_whitespace) {
                errs.push(format!("line {lineno}: case names must be non-empty without commas or spaces"));
                continue;
            }
            let mut p = base.clone();
            for item in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let Some((k, v)) = item.split_once('=') else {
                    errs.push(format!("line {lineno}: case {cname}: expected key=value, got '{item}'"));
                    continue;
                };
                match p.set(k.trim(), v) {
                    Ok(true) => {}
                    Ok(false) => errs.push(format!("line {lineno}: case {cname}: '{}' is not a scenario parameter", k.trim())),
                    Err(e) => errs.push(format!("line {lineno}: case {cname}: {}: {e}", k.trim())),
                }
            }
            cases.push(Case { name: cname, params: p });
        }
        if cases.is_empty() {
            cases.push(Case { name: "base".into(), params: base.clone() });
        }

        let sweep = sweep.unwrap_or_else(|| {
            errs.push("sweep: missing (one of snr_db, n_elements, tau, xi, beta, target-rate)".into());
            SweepVar::SnrDb
        });
        let grid = grid.unwrap_or_default();
        if grid.is_empty() {
            errs.push("grid: empty grid".into());
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            errs.push("grid: values must be strictly increasing".into());
        }
        if sweep == SweepVar::NElements && grid.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
            errs.push("grid: element counts must be positive integers".into());
        }
        if designs.is_empty() {
            errs.push("designs: at least one design is required".into());
        }
        if estimators.wants_mc() && trials == 0 {
            errs.push("trials: Monte-Carlo needs at least one trial".into());
        }
        if !(pgam.step > 0.0 && pgam.tolerance > 0.0 && pgam.max_iters >= 1 && pgam.amplitude_scale >= 0.0) {
            errs.push("pgam_*: step and tolerance must be positive, max_iters at least 1".into());
        }
        let mut names = std::collections::HashSet::new();
        for c in &cases {
            if !names.insert(c.name.clone()) {
                errs.push(format!("case {}: defined twice", c.name));
            }
            // sweep extremes cover every monotone rule
            for x in [grid.first(), grid.last()].into_iter().flatten() {
                let ctx = format!("case {} at {} = {}", c.name, sweep.key(), fmt_f64(*x));
                for e in c.params.at(sweep, *x).problems(&ctx) {
                    if !errs.contains(&e) {
                        errs.push(e);
                    }
                }
            }
        }

        if errs.is_empty() {
            Ok(Self { name, base, cases, sweep, grid, designs, estimators, trials, seed, output, pgam })
        } else {
            Err(CliError::Validation(errs))
        }
    }

    /// Fully resolved experiment text; running it reproduces this run.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# resolved experiment, starfd {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "sweep = {}", self.sweep.key());
        let grid: Vec<String> = self.grid.iter().map(|x| fmt_f64(*x)).collect();
        let _ = writeln!(s, "grid = {}", grid.join(", "));
        let designs: Vec<&str> = self.designs.iter().map(|d| d.key()).collect();
        let _ = writeln!(s, "designs = {}", designs.join(", "));
        let _ = writeln!(s, "estimators = {}", self.estimators.key());
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "pgam_step = {}", fmt_f64(self.pgam.step));
        let _ = writeln!(s, "pgam_amplitude_scale = {}", fmt_f64(self.pgam.amplitude_scale));
        let _ = writeln!(s, "pgam_tolerance = {}", fmt_f64(self.pgam.tolerance));
        let _ = writeln!(s, "pgam_max_iters = {}", self.pgam.max_iters);
        let base = self.base.entries();
        for (k, v) in &base {
            let _ = writeln!(s, "{k} = {v}");
        }
        let implicit = self.cases.len() == 1 && self.cases[0].name == "base" && self.cases[0].params == self.base;
        if !implicit {
            for c in &self.cases {
                let diff: Vec<String> = c
                    .params
                    .entries()
                    .into_iter()
                    .zip(&base)
                    .filter(|((_, v), (_, b))| v != b)
                    .map(|((k, v), _)| format!("{k}={v}"))
                    .collect();
                let _ = writeln!(s, "case.{} = {}", c.name, diff.join("; "));
            }
        }
        s
    }
}
