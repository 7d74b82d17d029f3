//! Sweep execution and CSV assembly.
//!
//! Grid points run concurrently; rows are collected per point and emitted in
//! grid order, so the table never depends on scheduling. Nothing is written
//! unless every point succeeds.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use starfd::{
    aligned_state, ergodic_rate_mc, pgam, power_allocation_closed_form, target_split_allocation, CfModel, Estimator,
    PowerConfig, RateReport, Scenario, StarRisState, UserRates,
};

use crate::spec::{fmt_f64, Design, EstimatorSet, ExperimentSpec, Params, PowerScheme, SweepVar};
use crate::CliError;

/// Keeps random surfaces independent of the Monte-Carlo streams.
const RANDOM_SURFACE_SALT: u64 = 0x5eed_0f5a_7fac_e5e5;

/// CSV columns after the sweep column.
pub const COLUMNS: [&str; 14] = [
    "case",
    "design",
    "estimator",
    "R_u1d",
    "R_u2d",
    "R_u1u",
    "R_u2u",
    "R_c",
    "R_e",
    "sum",
    "stderr_u1d",
    "stderr_u2d",
    "stderr_u1u",
    "stderr_u2u",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep_value: f64,
    pub case: String,
    pub design: Design,
    pub estimator: Estimator,
    pub rates: UserRates,
    /// End-to-end flow rates `(R_c, R_e)`; bidirectional scenario only.
    pub flows: Option<(f64, f64)>,
    /// Sum of the four user rates, or `R_c + R_e` for the bidirectional case.
    pub sum: f64,
    /// Standard errors of the Monte-Carlo means.
    pub stderr: Option<UserRates>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub sweep: SweepVar,
    pub rows: Vec<Row>,
}

/// Best grid point of one `(case, design, estimator)` curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub case: String,
    pub design: Design,
    pub estimator: Estimator,
    pub argmax: f64,
    pub sum: f64,
}

fn estimator_key(e: Estimator) -> &'static str {
    match e {
        Estimator::ClosedForm => "cf",
        Estimator::MonteCarlo => "mc",
    }
}

impl Table {
    pub fn header(&self) -> String {
        format!("{},{}", self.sweep.column(), COLUMNS.join(","))
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header();
        s.push('\n');
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            let sweep = match self.sweep {
                SweepVar::NElements => format!("{}", r.sweep_value as usize),
                _ => fmt_f64(r.sweep_value),
            };
            let _ = writeln!(
                s,
                "{sweep},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.case,
                r.design.key(),
                estimator_key(r.estimator),
                fmt_f64(r.rates.u1d),
                fmt_f64(r.rates.u2d),
                fmt_f64(r.rates.u1u),
                fmt_f64(r.rates.u2u),
                opt(r.flows.map(|f| f.0)),
                opt(r.flows.map(|f| f.1)),
                fmt_f64(r.sum),
                opt(r.stderr.map(|e| e.u1d)),
                opt(r.stderr.map(|e| e.u2d)),
                opt(r.stderr.map(|e| e.u1u)),
                opt(r.stderr.map(|e| e.u2u)),
            );
        }
        s
    }

    /// Rows of one curve in grid order.
    pub fn curve(&self, case: &str, design: Design, estimator: Estimator) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.case == case && r.design == design && r.estimator == estimator).collect()
    }

    /// Sum-rate maximiser of every curve; the first grid point wins ties.
    pub fn peaks(&self) -> Vec<Peak> {
        let mut keys: Vec<(String, Design, Estimator)> = Vec::new();
        for r in &self.rows {
            let k = (r.case.clone(), r.design, r.estimator);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(case, design, estimator)| {
                let best = self
                    .curve(&case, design, estimator)
                    .into_iter()
                    .fold(None::<&Row>, |b, r| match b {
                        Some(b) if b.sum >= r.sum => Some(b),
                        _ => Some(r),
                    })
                    .expect("curves are non-empty");
                Peak { argmax: best.sweep_value, sum: best.sum, case, design, estimator }
            })
            .collect()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for p in self.peaks() {
            let _ = writeln!(
                s,
                "argmax {} [case {}, design {}, estimator {}] = {} (sum {})",
                self.sweep.column(),
                p.case,
                p.design.key(),
                estimator_key(p.estimator),
                fmt_f64(p.argmax),
                fmt_f64(p.sum)
            );
        }
        s
    }
}

fn numeric(context: String) -> impl FnOnce(starfd::Error) -> CliError {
    move |source| CliError::Numeric { context, source }
}

fn allocate(p: &Params, model: &CfModel, ris: &StarRisState) -> starfd::Result<PowerConfig> {
    let sys = model.config();
    match p.power_scheme {
        PowerScheme::Fixed => p.fixed_split(),
        PowerScheme::ClosedForm => {
            let t = model.terms(ris)?;
            power_allocation_closed_form(sys, &t, p.total_power(), sys.targets.downlink, sys.targets.uplink)
        }
        PowerScheme::TargetSplit => {
            let t = model.terms(ris)?;
            target_split_allocation(sys, &t, p.total_power(), p.tau, sys.targets.downlink, sys.targets.uplink)
        }
    }
}

fn surface(spec: &ExperimentSpec, p: &Params, model: &CfModel, design: Design, case_index: usize) -> starfd::Result<(StarRisState, PowerConfig)> {
    let sys = model.config();
    // the fixed split decides the bidirectional alignment before powers are known
    let nominal = p.fixed_split()?;
    match design {
        Design::Aligned => {
            let ris = aligned_state(sys, &nominal, p.rho_t)?;
            let pw = allocate(p, model, &ris)?;
            Ok((ris, pw))
        }
        Design::Random => {
            // one surface per case, shared by every grid point with the same size
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ RANDOM_SURFACE_SALT);
            rng.set_stream(case_index as u64);
            let ris = StarRisState::random_phases(sys.n_elements, p.rho_t, &mut rng)?;
            let pw = allocate(p, model, &ris)?;
            Ok((ris, pw))
        }
        Design::Optimal => {
            let init = aligned_state(sys, &nominal, p.rho_t)?;
            let pw0 = allocate(p, model, &init)?;
            let ris = pgam(sys, &pw0, &init, &spec.pgam)?.state;
            let pw = allocate(p, model, &ris)?;
            Ok((ris, pw))
        }
    }
}

fn row(value: f64, case: &str, design: Design, rep: &RateReport) -> Row {
    let r = rep.rates;
    let flows = match rep.scenario {
        Scenario::Bidirectional => rep.center_flow().zip(rep.edge_flow()),
        Scenario::NomaPair => None,
    };
    let sum = match flows {
        Some((c, e)) => c + e,
        None => r.u1d + r.u2d + r.u1u + r.u2u,
    };
    Row {
        sweep_value: value,
        case: case.to_string(),
        design,
        estimator: rep.estimator,
        rates: r,
        flows,
        sum,
        stderr: rep.stderr.map(|e| e.rates),
    }
}

fn point(spec: &ExperimentSpec, value: f64, case_index: usize) -> Result<Vec<Row>, CliError> {
    let case = &spec.cases[case_index];
    let p = case.params.at(spec.sweep, value);
    let ctx = |what: &str| format!("case {} at {} = {} ({what})", case.name, spec.sweep.key(), fmt_f64(value));
    let sys = p.system();
    let model = CfModel::new(&sys).map_err(numeric(ctx("closed-form setup")))?;
    let mut rows = Vec::new();
    for &design in &spec.designs {
        let (ris, pw) = surface(spec, &p, &model, design, case_index).map_err(numeric(ctx(design.key())))?;
        if spec.estimators != EstimatorSet::MonteCarlo {
            let rep = model.report(&ris, &pw).map_err(numeric(ctx("closed form")))?;
            rows.push(row(value, &case.name, design, &rep));
        }
        if spec.estimators.wants_mc() {
            let rep = ergodic_rate_mc(&sys, &ris, &pw, spec.trials, spec.seed).map_err(numeric(ctx("Monte Carlo")))?;
            rows.push(row(value, &case.name, design, &rep));
        }
    }
    Ok(rows)
}

/// Evaluates every `(grid point, case, design, estimator)` combination.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let jobs: Vec<(f64, usize)> =
        spec.grid.iter().flat_map(|&x| (0..spec.cases.len()).map(move |c| (x, c))).collect();
    let results: Vec<Result<Vec<Row>, CliError>> = jobs.par_iter().map(|&(x, c)| point(spec, x, c)).collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(Table { sweep: spec.sweep, rows })
}

/// Files produced by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub summary: PathBuf,
}

impl OutputPaths {
    /// Manifest and summary sit next to the CSV.
    pub fn for_csv(csv: &Path) -> Self {
        Self {
            csv: csv.to_path_buf(),
            manifest: csv.with_extension("manifest"),
            summary: csv.with_extension("summary.txt"),
        }
    }
}

pub fn write_outputs(spec: &ExperimentSpec, table: &Table, paths: &OutputPaths) -> Result<(), CliError> {
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |e: std::io::Error| CliError::Io(format!("cannot write {p}: {e}"))
    };
    if let Some(dir) = paths.csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(&paths.csv, table.to_csv()).map_err(io(&paths.csv))?;
    std::fs::write(&paths.manifest, spec.manifest()).map_err(io(&paths.manifest))?;
    std::fs::write(&paths.summary, table.summary()).map_err(io(&paths.summary))?;
    Ok(())
}
