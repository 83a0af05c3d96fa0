//! check → phase 1 → phase 2 → verify → export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ewm_core::phase1::{run_phase1, Phase1Method, WeightCoefficientsSet, DEFAULT_MAX_ITER};
use ewm_core::phase2::{run_phase2, LevelStats, NonConvergence, Phase2Method, Phase2Outcome};
use ewm_core::system::{locality_backmap, EligibilityReport, Locality, NumerationSystem};
use ewm_core::table::{export_csv, read_csv, WeightFunction};
use ewm_core::{EwmError, Result};
use serde::Serialize;

use crate::config::JobConfig;
use crate::verify::{verify_synthesis, verify_table, VerificationReport, DEFAULT_MAX_LENGTH, DEFAULT_TRIALS};

pub const WEIGHTS_FILE: &str = "weights.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOG_FILE: &str = "log.txt";
pub const WITNESS_FILE: &str = "witness.json";

#[derive(Clone, Debug, Serialize)]
pub struct Methods {
    pub phase1: Phase1Method,
    pub phase2: Phase2Method,
}

#[derive(Clone, Debug, Serialize)]
pub struct Phase1Summary {
    pub count: usize,
    pub iterations: usize,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockLocality {
    pub k: usize,
    /// Memory and anticipation for each position inside a block.
    pub positions: Vec<Locality>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub eligibility: EligibilityReport,
    pub methods: Methods,
    pub weight_coefficients: Phase1Summary,
    pub memory: usize,
    pub anticipation: usize,
    /// p = r + 1.
    pub locality: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockLocality>,
    pub table_rows: usize,
    pub levels: Vec<LevelStats>,
    pub verification: VerificationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub eligibility: EligibilityReport,
    pub methods: Methods,
    pub weight_coefficients: Phase1Summary,
    pub levels: Vec<LevelStats>,
    pub witness: NonConvergence,
}

pub enum RunOutcome {
    Converged(Box<Manifest>),
    NonConvergent(Box<Witness>),
}

/// In-memory result of a synthesis, before anything is written.
pub struct Synthesis {
    pub report: EligibilityReport,
    pub q: WeightCoefficientsSet,
    pub outcome: Phase2Outcome,
    pub log: String,
}

pub fn methods(config: &JobConfig) -> Methods {
    Methods { phase1: config.method_phase1, phase2: config.method_phase2 }
}

pub fn cmd_check(config: &JobConfig) -> Result<EligibilityReport> {
    Ok(config.system()?.1)
}

fn summary(q: &WeightCoefficientsSet) -> Phase1Summary {
    Phase1Summary { count: q.elements.len(), iterations: q.iterations, values: q.elements.iter().map(|x| x.to_string()).collect() }
}

pub fn cmd_phase1(config: &JobConfig) -> Result<(EligibilityReport, Phase1Summary)> {
    let (system, report) = config.system()?;
    let q = run_phase1(&system, config.method_phase1, DEFAULT_MAX_ITER)?;
    Ok((report, summary(&q)))
}

fn log_line(log: &mut String, line: String) {
    log::info!("{line}");
    log.push_str(&line);
    log.push('\n');
}

pub fn synthesize(config: &JobConfig) -> Result<(NumerationSystem, Synthesis)> {
    let mut log = String::new();
    let (system, report) = config.system()?;
    log_line(&mut log, format!("base {} with minimal polynomial {}", report.base, report.base_min_poly));
    log_line(&mut log, format!("|A| = {}, |B| = {}, block length {}", report.alphabet_size, report.input_alphabet_size, report.block_length));
    for w in &report.warnings {
        log_line(&mut log, format!("warning: {w}"));
    }
    let t = Instant::now();
    let q = run_phase1(&system, config.method_phase1, DEFAULT_MAX_ITER)?;
    for (i, n) in q.history.iter().enumerate() {
        log_line(&mut log, format!("phase 1 iteration {}: |Q| = {n}", i + 1));
    }
    log_line(&mut log, format!("phase 1 done: #Q = {} ({:.3?})", q.elements.len(), t.elapsed()));
    let t = Instant::now();
    let outcome = run_phase2(&system, &q.elements, &config.phase2_options())?;
    let levels = match &outcome {
        Phase2Outcome::Converged(r) => &r.levels,
        Phase2Outcome::NonConvergent { levels, .. } => levels,
    };
    for l in levels {
        let rauzy = l.rauzy_vertices.map(|v| format!(", {v} Rauzy vertices")).unwrap_or_default();
        log_line(
            &mut log,
            format!("phase 2 level {}: {} windows, max |Q_w| = {}, mean {:.4}{rauzy}", l.level, l.windows, l.max_size, l.mean_size),
        );
    }
    match &outcome {
        Phase2Outcome::Converged(r) => log_line(
            &mut log,
            format!("phase 2 done: r = {}, p = {}, {} rows ({:.3?})", r.weight_function.memory(), r.weight_function.locality(), r.weight_function.rows(), t.elapsed()),
        ),
        Phase2Outcome::NonConvergent { witness, .. } => {
            log_line(&mut log, format!("phase 2 does not converge: {witness} ({:.3?})", t.elapsed()))
        }
    }
    Ok((system, Synthesis { report, q, outcome, log }))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn output_dir(config: &JobConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("ewm-out"))
}

/// Full pipeline. Writes the table, manifest and log on success, or the
/// witness and log when phase 2 provably cannot converge.
pub fn cmd_run(config: &JobConfig, out: &Path) -> Result<RunOutcome> {
    let (_, mut syn) = synthesize(config)?;
    std::fs::create_dir_all(out)?;
    let methods = methods(config);
    match syn.outcome {
        Phase2Outcome::NonConvergent { witness, levels } => {
            let w = Witness { eligibility: syn.report, methods, weight_coefficients: summary(&syn.q), levels, witness };
            write(&out.join(WITNESS_FILE), &json(&w))?;
            write(&out.join(LOG_FILE), &syn.log)?;
            Ok(RunOutcome::NonConvergent(Box::new(w)))
        }
        Phase2Outcome::Converged(result) => {
            let wf = result.weight_function;
            let t = Instant::now();
            let verification = verify_synthesis(&wf, &syn.q.elements, DEFAULT_TRIALS, DEFAULT_MAX_LENGTH, config.seed);
            log_line(&mut syn.log, format!("verification {} ({:.3?})", if verification.passed() { "passed" } else { "FAILED" }, t.elapsed()));
            let r = wf.memory();
            let k = config.block_length;
            let manifest = Manifest {
                eligibility: syn.report,
                methods,
                weight_coefficients: summary(&syn.q),
                memory: r,
                anticipation: 0,
                locality: r + 1,
                block: (k > 1).then(|| BlockLocality { k, positions: locality_backmap(k, r + 1) }),
                table_rows: wf.rows(),
                levels: result.levels,
                verification,
            };
            write(&out.join(WEIGHTS_FILE), &export_csv(&wf))?;
            write(&out.join(MANIFEST_FILE), &json(&manifest))?;
            write(&out.join(LOG_FILE), &syn.log)?;
            Ok(RunOutcome::Converged(Box::new(manifest)))
        }
    }
}

/// The synthesized table as CSV text, or an error when phase 2 does not converge.
pub fn cmd_export(config: &JobConfig) -> Result<String> {
    let (_, syn) = synthesize(config)?;
    match syn.outcome {
        Phase2Outcome::Converged(r) => Ok(export_csv(&r.weight_function)),
        Phase2Outcome::NonConvergent { witness, .. } => Err(EwmError::Abort(format!("no table: {witness}"))),
    }
}

pub fn load_table(config: &JobConfig, table: &Path) -> Result<WeightFunction> {
    let (system, _) = config.system()?;
    read_csv(table, &system)
}

pub fn cmd_verify(config: &JobConfig, table: &Path, trials: u64, max_length: usize) -> Result<VerificationReport> {
    let wf = load_table(config, table)?;
    Ok(verify_table(&wf, trials, max_length, config.seed))
}

/// Stable process exit codes.
pub mod exit {
    use ewm_core::EwmError;

    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const NON_CONVERGENT: i32 = 2;
    pub const INELIGIBLE: i32 = 3;
    pub const CONFIG: i32 = 4;
    pub const RESOURCE: i32 = 5;
    pub const VERIFICATION: i32 = 6;

    pub fn code(e: &EwmError) -> i32 {
        match e {
            EwmError::Ineligible(_) | EwmError::InconclusiveNumerics(_) => INELIGIBLE,
            EwmError::Config(_) | EwmError::Import { .. } => CONFIG,
            EwmError::ResourceAbort(_) => RESOURCE,
            EwmError::TableIncomplete { .. } | EwmError::InvalidTable { .. } => VERIFICATION,
            _ => OTHER,
        }
    }
}

/// Plain-text rendering of a verification report for the terminal.
pub fn describe(report: &VerificationReport) -> String {
    let mut s = String::new();
    if let Some(f) = &report.fixpoint {
        let _ = writeln!(s, "fixpoint B+Q in A+beta*Q: {}", if f.passed { "ok" } else { "FAILED" });
    }
    if let Some(b) = &report.bound {
        let _ = writeln!(s, "weight bound: max {:.6} <= {:.6}: {}", b.max_norm, b.bound, if b.passed { "ok" } else { "FAILED" });
    }
    let _ = writeln!(s, "q(0,...,0) = 0: {}", if report.zero_window { "ok" } else { "FAILED" });
    let mode = if report.validity.exhaustive { "exhaustive" } else { "sampled" };
    let _ = writeln!(
        s,
        "window validity ({mode}, {} checks): {}",
        report.validity.checks,
        if report.validity.passed() { "ok" } else { "FAILED" }
    );
    let a = &report.additions;
    let _ = writeln!(s, "random additions ({} trials, length <= {}): {} failures", a.trials, a.max_length, a.failures);
    if let Some(f) = report.failure() {
        let _ = writeln!(s, "first failure: {f}");
    }
    s
}
