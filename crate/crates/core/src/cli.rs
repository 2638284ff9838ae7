//! JSON-configured sweeps over SNR and the oracle-chain validation report.

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::channels::{
    FsoLinkParams, InterferenceParams, PointingPreset, RfLinkParams, SystemConfig,
};
use crate::error::{Error, Result};
use crate::mc::{simulate_asr, simulate_outage, too_few_trials, McEstimate};
use crate::metrics::{
    asr_asymptotic_with, asr_exact_with, asr_quadrature_with, outage_asymptotic_with,
    outage_exact_with, outage_quadrature_with, Evaluation, Numerics,
};

pub const THREADS_ENV: &str = "FSORELAY_THREADS";

pub const CSV_HEADER: [&str; 12] = [
    "sweep_db", "op_exact", "op_asymp", "op_quad", "op_mc", "op_mc_se", "asr_exact",
    "asr_asymp", "asr_quad", "asr_mc", "asr_mc_se", "flags",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    MuRDb,
    AvgSnrDb,
    BothLocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    OpExact,
    OpAsymp,
    OpQuad,
    OpMc,
    AsrExact,
    AsrAsymp,
    AsrQuad,
    AsrMc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfSection {
    pub m_rf: u32,
    pub num_users: u32,
    /// Used when the sweep does not move γ̄.
    #[serde(default)]
    pub avg_snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsoSection {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Either `xi` or `pointing`.
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub pointing: Option<PointingPreset>,
    pub r: u32,
    /// Used when the sweep does not move μ_r.
    #[serde(default)]
    pub mu_r_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub start_db: f64,
    pub stop_db: f64,
    pub points: usize,
    pub metrics: Vec<Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for McSection {
    fn default() -> Self {
        Self { trials: 1_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub rf: RfSection,
    pub fso: FsoSection,
    pub interference: InterferenceParams,
    #[serde(default)]
    pub gamma_th_db: f64,
    pub sweep: SweepSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub numerics: Numerics,
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        if s.metrics.is_empty() {
            return Err(Error::Config("sweep.metrics is empty".into()));
        }
        if !(s.start_db < s.stop_db) {
            return Err(Error::Config("sweep.start_db must be < sweep.stop_db".into()));
        }
        if s.points < 2 {
            return Err(Error::Config("sweep.points must be >= 2".into()));
        }
        match (self.fso.xi, self.fso.pointing) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::Config("fso: give exactly one of xi or pointing".into()))
            }
            _ => {}
        }
        if s.variable == SweepVariable::MuRDb && self.rf.avg_snr_db.is_none() {
            return Err(Error::Config("rf.avg_snr_db is required when only mu_r_db is swept".into()));
        }
        if s.variable == SweepVariable::AvgSnrDb && self.fso.mu_r_db.is_none() {
            return Err(Error::Config("fso.mu_r_db is required when only avg_snr_db is swept".into()));
        }
        let needs_mc = s.metrics.iter().any(|m| matches!(m, Metric::OpMc | Metric::AsrMc));
        if needs_mc && self.mc.trials < crate::mc::MIN_TRIALS {
            return Err(Error::Config(format!(
                "mc.trials must be >= {}",
                crate::mc::MIN_TRIALS
            )));
        }
        self.numerics.validate()?;
        self.system_at(s.start_db)?.validate()?;
        self.system_at(s.stop_db)?.validate()
    }

    pub fn grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        let step = (s.stop_db - s.start_db) / (s.points - 1) as f64;
        (0..s.points).map(|i| s.start_db + step * i as f64).collect()
    }

    /// Linear-unit system at sweep abscissa `x_db`.
    pub fn system_at(&self, x_db: f64) -> Result<SystemConfig> {
        let (snr_db, mu_db) = match self.sweep.variable {
            SweepVariable::BothLocked => (x_db, x_db),
            SweepVariable::AvgSnrDb => (x_db, self.fso.mu_r_db.unwrap_or(f64::NAN)),
            SweepVariable::MuRDb => (self.rf.avg_snr_db.unwrap_or(f64::NAN), x_db),
        };
        let f = &self.fso;
        let xi = match (f.xi, f.pointing) {
            (Some(x), _) => x,
            (None, Some(p)) => p.xi(),
            (None, None) => return Err(Error::Config("fso: xi or pointing required".into())),
        };
        Ok(SystemConfig {
            rf: RfLinkParams {
                m_rf: self.rf.m_rf,
                avg_snr: db(snr_db),
                num_users: self.rf.num_users,
            },
            fso: FsoLinkParams {
                alpha1: f.alpha1,
                alpha2: f.alpha2,
                beta1: f.beta1,
                beta2: f.beta2,
                omega1: f.omega1,
                omega2: f.omega2,
                xi,
                r: f.r,
                mu_r: db(mu_db),
            },
            intf: self.interference,
            gamma_th: db(self.gamma_th_db),
        })
    }

    fn wants(&self, m: Metric) -> bool {
        self.sweep.metrics.contains(&m)
    }
}

/// Per-point seed derived from the run seed and the grid index.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    let mut z = (seed ^ index as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_db: f64,
    pub op_exact: Option<f64>,
    pub op_asymp: Option<f64>,
    pub op_quad: Option<f64>,
    pub op_mc: Option<McEstimate>,
    pub asr_exact: Option<f64>,
    pub asr_asymp: Option<f64>,
    pub asr_quad: Option<f64>,
    pub asr_mc: Option<McEstimate>,
    pub flags: Vec<String>,
    /// A requested metric could not be computed.
    pub failed: bool,
    pub warnings: Vec<String>,
}

fn record(row: &mut SweepRow, name: &str, r: Result<Evaluation>) -> Option<f64> {
    match r {
        Ok(ev) => {
            for f in &ev.flags {
                let s = format!("{name}:{f}");
                if !row.flags.contains(&s) {
                    row.flags.push(s);
                }
            }
            Some(ev.value)
        }
        Err(e) => {
            row.flags.push(format!("{name}:error({e})"));
            row.failed = true;
            None
        }
    }
}

fn record_mc(row: &mut SweepRow, name: &str, r: Result<McEstimate>) -> Option<McEstimate> {
    match r {
        Ok(m) => Some(m),
        Err(e) => {
            row.flags.push(format!("{name}:error({e})"));
            row.failed = true;
            None
        }
    }
}

/// Evaluates one grid point.
pub fn evaluate_point(cfg: &Config, index: usize, x_db: f64, seed: u64) -> SweepRow {
    let mut row = SweepRow { sweep_db: x_db, ..Default::default() };
    let sys = match cfg.system_at(x_db) {
        Ok(s) => s,
        Err(e) => {
            row.flags.push(format!("config:error({e})"));
            row.failed = true;
            return row;
        }
    };
    let num = &cfg.numerics;
    let pseed = point_seed(seed, index);
    if cfg.wants(Metric::OpExact) {
        row.op_exact = record(&mut row, "op_exact", outage_exact_with(&sys, num));
    }
    if cfg.wants(Metric::OpAsymp) {
        row.op_asymp = record(&mut row, "op_asymp", outage_asymptotic_with(&sys, num));
    }
    if cfg.wants(Metric::OpQuad) {
        row.op_quad = record(&mut row, "op_quad", outage_quadrature_with(&sys, num, false));
    }
    if cfg.wants(Metric::OpMc) {
        row.op_mc = record_mc(&mut row, "op_mc", simulate_outage(&sys, cfg.mc.trials, pseed));
        let level = row.op_exact.or(row.op_quad).or(row.op_mc.map(|m| m.mean));
        if let Some(p) = level {
            if too_few_trials(p, cfg.mc.trials) {
                row.warnings.push(format!(
                    "{x_db} dB: {} trials give fewer than 100 expected outages at OP = {p:.3e}",
                    cfg.mc.trials
                ));
            }
        }
    }
    if cfg.wants(Metric::AsrExact) {
        row.asr_exact = record(&mut row, "asr_exact", asr_exact_with(&sys, num));
    }
    if cfg.wants(Metric::AsrAsymp) {
        row.asr_asymp = record(&mut row, "asr_asymp", asr_asymptotic_with(&sys, num));
    }
    if cfg.wants(Metric::AsrQuad) {
        row.asr_quad = record(&mut row, "asr_quad", asr_quadrature_with(&sys, num));
    }
    if cfg.wants(Metric::AsrMc) {
        // different stream family from the outage run
        row.asr_mc = record_mc(&mut row, "asr_mc", simulate_asr(&sys, cfg.mc.trials, !pseed));
    }
    row
}

/// Evaluates the grid concurrently; rows come back in grid order.
pub fn run_sweep(cfg: &Config, seed: u64) -> Vec<SweepRow> {
    let grid = cfg.grid();
    grid.par_iter()
        .enumerate()
        .map(|(i, &x)| evaluate_point(cfg, i, x, seed))
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            format!("{:.12e}", r.sweep_db),
            cell(r.op_exact),
            cell(r.op_asymp),
            cell(r.op_quad),
            cell(r.op_mc.map(|m| m.mean)),
            cell(r.op_mc.map(|m| m.std_error)),
            cell(r.asr_exact),
            cell(r.asr_asymp),
            cell(r.asr_quad),
            cell(r.asr_mc.map(|m| m.mean)),
            cell(r.asr_mc.map(|m| m.std_error)),
            r.flags.join(";"),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(())
}

// ------------------------------------------------------------ validation

pub const OP_REL_TOL: f64 = 1e-4;
pub const OP_FLOOR: f64 = 1e-6;
pub const ASR_ABS_TOL: f64 = 1e-3;
pub const MC_SIGMAS: f64 = 3.0;

/// Resolutions of ambiguities in the source formulas that the closed forms
/// rely on.
pub const RESOLUTIONS: [&str; 6] = [
    "outage event is min(gamma_RF, gamma_FSO)/gamma_I < gamma_th",
    "FSO-coupled outage weight is A1*D4/Gamma(m1 N) (duplicate factorial dropped)",
    "RF rate term uses the single G^{3,2}_{3,3} form; Omega inside B3 is Omega_I1",
    "rate prefactor is 1/(2 ln 2) on both terms",
    "delta is the configured numerics.delta (1 reproduces quadrature)",
    "alpha1/alpha2 replaced by the best rational lambda/sigma with denominator <= numerics.max_denominator",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s += &format!(
                "{:<22} {:>12.4e} (tol {:.1e}, {} pts)  {}\n",
                c.name,
                c.statistic,
                c.tolerance,
                c.points,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        for f in &self.failures {
            s += &format!("failure: {f}\n");
        }
        for w in &self.warnings {
            s += &format!("warning: {w}\n");
        }
        s += "resolutions in force:\n";
        for r in RESOLUTIONS {
            s += &format!("  - {r}\n");
        }
        s += if self.pass() { "PASS\n" } else { "FAIL\n" };
        s
    }
}

/// Runs exact, quadrature and (if `mc.trials > 0`) Monte Carlo for both
/// metrics at every grid point and compares them.
pub fn validate(cfg: &Config, seed: u64) -> Report {
    let mut full = cfg.clone();
    full.sweep.metrics = vec![Metric::OpExact, Metric::OpQuad, Metric::AsrExact, Metric::AsrQuad];
    let with_mc = cfg.mc.trials >= crate::mc::MIN_TRIALS;
    if with_mc {
        full.sweep.metrics.extend([Metric::OpMc, Metric::AsrMc]);
    }
    let rows = run_sweep(&full, seed);
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for r in &rows {
        if r.failed {
            failures.push(format!("{} dB: {}", r.sweep_db, r.flags.join(";")));
        }
        warnings.extend(r.warnings.iter().cloned());
    }
    let mut checks = Vec::new();
    let mut max_check = |name: &str, tol: f64, vals: Vec<f64>| {
        let stat = vals.iter().cloned().fold(0.0f64, f64::max);
        checks.push(Check {
            name: name.into(),
            statistic: stat,
            tolerance: tol,
            pass: stat < tol,
            points: vals.len(),
        });
    };
    max_check(
        "op exact vs quad (rel)",
        OP_REL_TOL,
        rows.iter()
            .filter_map(|r| match (r.op_exact, r.op_quad) {
                (Some(e), Some(q)) if q >= OP_FLOOR => Some((e - q).abs() / q),
                _ => None,
            })
            .collect(),
    );
    max_check(
        "asr exact vs quad (abs)",
        ASR_ABS_TOL,
        rows.iter()
            .filter_map(|r| Some((r.asr_exact? - r.asr_quad?).abs()))
            .collect(),
    );
    if with_mc {
        let z = |v: f64, m: McEstimate| {
            if m.std_error > 0.0 {
                (v - m.mean).abs() / m.std_error
            } else if v == m.mean {
                0.0
            } else {
                f64::INFINITY
            }
        };
        max_check(
            "op exact vs mc (sigma)",
            MC_SIGMAS,
            rows.iter().filter_map(|r| Some(z(r.op_exact?, r.op_mc?))).collect(),
        );
        max_check(
            "asr exact vs mc (sigma)",
            MC_SIGMAS,
            rows.iter().filter_map(|r| Some(z(r.asr_exact?, r.asr_mc?))).collect(),
        );
    }
    Report { checks, failures, warnings }
}

// ------------------------------------------------------------ entry point

#[derive(Debug, Parser)]
#[command(name = "fsorelay", about = "Outage and sum-rate of a mixed RF/FSO two-way relay")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the requested metrics over the sweep grid and write CSV.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides mc.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare closed forms against quadrature and Monte Carlo.
    Validate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

/// `FSORELAY_THREADS` wins over `--threads`.
pub fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        },
        Err(_) => match flag {
            Some(0) => Err("--threads must be >= 1".into()),
            f => Ok(f),
        },
    }
}

fn with_threads<T: Send>(n: Option<usize>, f: impl FnOnce() -> T + Send) -> std::result::Result<T, String> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| e.to_string())?;
    Ok(pool.install(f))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (path, seed, threads) = match &cli.command {
        Command::Sweep { config, seed, threads, .. } => (config, seed, threads),
        Command::Validate { config, seed, threads } => (config, seed, threads),
    };
    let cfg = match Config::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let threads = match thread_count(*threads) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let seed = seed.unwrap_or(cfg.mc.seed);
    match &cli.command {
        Command::Sweep { out, .. } => {
            let rows = match with_threads(threads, || run_sweep(&cfg, seed)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            for w in rows.iter().flat_map(|r| &r.warnings) {
                eprintln!("warning: {w}");
            }
            let written = match out {
                Some(p) => std::fs::File::create(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))
                    .and_then(|f| write_csv(&rows, std::io::BufWriter::new(f))),
                None => write_csv(&rows, std::io::stdout().lock()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 2;
            }
            if rows.iter().any(|r| r.failed) {
                eprintln!("error: some requested metrics failed; see the flags column");
                return 1;
            }
            0
        }
        Command::Validate { .. } => {
            let report = match with_threads(threads, || validate(&cfg, seed)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            print!("{}", report.render());
            if report.pass() {
                0
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SMALL: &str = r#"{
        "rf": {"m_rf": 2, "num_users": 2},
        "fso": {"alpha1": 2.1, "alpha2": 2.0, "beta1": 4.0, "beta2": 4.5,
                "omega1": 1.0676, "omega2": 1.06, "pointing": "strong", "r": 1},
        "interference": {"num_interferers": 1, "m1": 1.0, "omega_i1": 1.0},
        "gamma_th_db": 0.0,
        "sweep": {"variable": "both_locked", "start_db": 5, "stop_db": 10, "points": 2,
                  "metrics": ["op_quad"]},
        "mc": {"trials": 20000, "seed": 3}
    }"#;

    #[test]
    fn parses_and_builds_grid() {
        let c = Config::from_json(SMALL).unwrap();
        assert_eq!(c.grid(), vec![5.0, 10.0]);
        let s = c.system_at(10.0).unwrap();
        assert!((s.rf.avg_snr - 10.0).abs() < 1e-12 && (s.fso.mu_r - 10.0).abs() < 1e-12);
        assert_eq!(s.gamma_th, 1.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad_key = SMALL.replace("\"m_rf\"", "\"m_rff\"");
        let e = Config::from_json(&bad_key).unwrap_err().to_string();
        assert!(e.contains("m_rff"), "{e}");
        let empty = SMALL.replace("[\"op_quad\"]", "[]");
        assert!(Config::from_json(&empty).unwrap_err().to_string().contains("metrics"));
        let both = SMALL.replace("\"pointing\": \"strong\"", "\"pointing\": \"strong\", \"xi\": 1.0");
        assert!(Config::from_json(&both).is_err());
        let reversed = SMALL.replace("\"stop_db\": 10", "\"stop_db\": 1");
        assert!(Config::from_json(&reversed).is_err());
    }

    #[test]
    fn csv_shape() {
        let c = Config::from_json(SMALL).unwrap();
        let rows = run_sweep(&c, 1);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("5.000000000000e0,,,"));
    }

    #[test]
    fn point_seeds_differ() {
        assert_ne!(point_seed(1, 0), point_seed(1, 1));
        assert_ne!(point_seed(1, 0), point_seed(2, 0));
    }
}
