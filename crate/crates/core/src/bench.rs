//! Configuration-lattice harness: run every typed/untyped assignment of a
//! program's configurable modules under all four semantics, fold the check
//! counters into a scalar cost, and report overheads relative to the
//! all-untyped baseline. Reports are plain CSV and bit-identical across runs.

use crate::runtime::{run_isolated, CostCounters, Mode, RunOptions, RunOutcome, RuntimeError};
use crate::syntax::Program;
use crate::types::StaticError;

/// Overhead thresholds the distribution is sampled at: a fine sweep through
/// the contended 1x-2x region, then coarse out to 20x.
pub const CDF_TICKS: [f64; 15] =
    [1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0];

/// Per-counter weights for the scalar cost. The defaults price a wrapper
/// allocation highest, calls through wrappers next, blame bookkeeping above
/// plain checks, and raw interpretation steps at a token rate.
#[derive(Debug, Clone)]
pub struct CostWeights {
    pub shape: f64,
    pub flat: f64,
    pub wrapped_call: f64,
    pub wrapper: f64,
    pub blame: f64,
    pub step: f64,
}

impl Default for CostWeights {
    fn default() -> CostWeights {
        CostWeights { shape: 1.0, flat: 1.0, wrapped_call: 3.0, wrapper: 5.0, blame: 2.0, step: 0.01 }
    }
}

pub fn cost(c: &CostCounters, w: &CostWeights) -> f64 {
    c.shape_checks as f64 * w.shape
        + c.flat_checks as f64 * w.flat
        + c.wrapped_calls as f64 * w.wrapped_call
        + c.wrappers_allocated as f64 * w.wrapper
        + c.blame_ops as f64 * w.blame
        + c.steps as f64 * w.step
}

#[derive(Debug)]
pub enum LatticeError {
    /// Refuse to enumerate 2^n configurations past n = 16.
    LatticeTooLarge { modules: usize },
    Static(StaticError),
}

impl std::fmt::Display for LatticeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LatticeError::LatticeTooLarge { modules } => write!(
                f,
                "configuration lattice too large: {modules} configurable modules (max 16)"
            ),
            LatticeError::Static(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LatticeError {}

/// All typed/untyped assignments for `n` configurable modules, ordered by
/// the binary value of the bit string (first module is the high bit, so the
/// all-untyped configuration comes first and the all-typed one last).
pub fn enumerate_lattice(n: usize) -> Result<Vec<Vec<bool>>, LatticeError> {
    if n > 16 {
        return Err(LatticeError::LatticeTooLarge { modules: n });
    }
    let mut out = Vec::with_capacity(1usize << n);
    for cfg in 0..(1u32 << n) {
        out.push((0..n).map(|i| cfg >> (n - 1 - i) & 1 == 1).collect());
    }
    Ok(out)
}

pub fn bits_label(bits: &[bool]) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    ShapeError,
    ContractError,
    DynamicError,
    LinkError,
    Timeout,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::ShapeError => "shape-error",
            RunStatus::ContractError => "contract-error",
            RunStatus::DynamicError => "dynamic-error",
            RunStatus::LinkError => "link-error",
            RunStatus::Timeout => "timeout",
        }
    }

    fn of(outcome: &RunOutcome) -> RunStatus {
        match &outcome.result {
            Ok(_) => RunStatus::Ok,
            Err(RuntimeError::Shape { .. }) => RunStatus::ShapeError,
            Err(RuntimeError::Contract(_)) => RunStatus::ContractError,
            Err(RuntimeError::Dynamic { .. }) => RunStatus::DynamicError,
            Err(RuntimeError::UnsupportedBoundary { .. }) => RunStatus::LinkError,
            Err(RuntimeError::Timeout { .. }) => RunStatus::Timeout,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConfigRow {
    pub bits: String,
    pub mode: Mode,
    pub counters: CostCounters,
    pub cost: f64,
    /// Cost relative to the all-untyped erased run; absent after a timeout.
    pub overhead: Option<f64>,
    pub status: RunStatus,
    /// Printed top-level value on success.
    pub value: Option<String>,
}

#[derive(Debug)]
pub struct LatticeReport {
    /// Configurable module names in bit order.
    pub modules: Vec<String>,
    /// One row per configuration per mode, configurations ascending.
    pub rows: Vec<ConfigRow>,
    pub baseline: f64,
}

/// Evaluate the whole lattice. Each run gets a fresh isolated evaluator;
/// rows come back in `(configuration, mode)` order with `Mode::ALL` inner.
pub fn run_lattice(
    p: &Program,
    weights: &CostWeights,
    step_budget: Option<u64>,
) -> Result<LatticeReport, LatticeError> {
    let modules: Vec<String> =
        p.configurable_modules().iter().map(|m| m.name.clone()).collect();
    let configs = enumerate_lattice(modules.len())?;
    let mut rows = Vec::with_capacity(configs.len() * Mode::ALL.len());
    for bits in &configs {
        for mode in Mode::ALL {
            let mut opts = RunOptions::new(mode);
            opts.step_budget = step_budget;
            let outcome = run_isolated(p, bits, &opts).map_err(LatticeError::Static)?;
            let status = RunStatus::of(&outcome);
            rows.push(ConfigRow {
                bits: bits_label(bits),
                mode,
                cost: cost(&outcome.counters, weights),
                counters: outcome.counters,
                overhead: None,
                status,
                value: outcome.result.ok(),
            });
        }
    }
    // The first row is the all-untyped erased run: the baseline prices what
    // the program costs with gradual typing switched off entirely.
    let baseline = rows[0].cost;
    for row in &mut rows {
        if row.status != RunStatus::Timeout {
            row.overhead = Some(row.cost / baseline);
        }
    }
    Ok(LatticeReport { modules, rows, baseline })
}

impl LatticeReport {
    pub fn row(&self, bits: &str, mode: Mode) -> Option<&ConfigRow> {
        self.rows.iter().find(|r| r.bits == bits && r.mode == mode)
    }

    fn all_typed_bits(&self) -> String {
        "1".repeat(self.modules.len())
    }

    /// `(threshold, percent of error-free configurations at or under it)`
    /// for one mode: the fixed tick sweep, extended with a terminal point at
    /// the maximum observed overhead whenever the ticks stop short of 100%.
    pub fn cdf(&self, mode: Mode) -> Vec<(f64, f64)> {
        let oks: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.mode == mode && r.status == RunStatus::Ok)
            .filter_map(|r| r.overhead)
            .collect();
        let mut points: Vec<(f64, f64)> = CDF_TICKS
            .iter()
            .map(|&x| {
                let pct = if oks.is_empty() {
                    0.0
                } else {
                    100.0 * oks.iter().filter(|&&o| o <= x).count() as f64 / oks.len() as f64
                };
                (x, pct)
            })
            .collect();
        if let Some(last) = points.last().copied() {
            if !oks.is_empty() && last.1 < 100.0 {
                let max = oks.iter().fold(f64::MIN, |a, &o| a.max(o));
                points.push((max, 100.0));
            }
        }
        points
    }

    pub fn error_count(&self, mode: Mode) -> usize {
        self.rows.iter().filter(|r| r.mode == mode && r.status != RunStatus::Ok).count()
    }

    /// Largest overhead among error-free configurations, unless any
    /// configuration timed out (then there is no finite worst case).
    pub fn worst_overhead(&self, mode: Mode) -> Option<f64> {
        if self.rows.iter().any(|r| r.mode == mode && r.status == RunStatus::Timeout) {
            return None;
        }
        self.rows
            .iter()
            .filter(|r| r.mode == mode && r.status == RunStatus::Ok)
            .filter_map(|r| r.overhead)
            .fold(None, |acc, o| Some(acc.map_or(o, |a: f64| a.max(o))))
    }

    /// One line of the cost-of-blame table: worst shallow overhead, worst
    /// deep overhead, and the blame-tracking overhead at the all-typed
    /// configuration. `TO` marks a step-budget exhaustion.
    pub fn blame_cost_row(&self) -> String {
        let cell = |o: Option<f64>| o.map_or_else(|| "TO".to_string(), |v| format!("{v:.2}"));
        let typed = self.all_typed_bits();
        let sb = self.row(&typed, Mode::ShallowBlame).and_then(|r| match r.status {
            RunStatus::Ok => r.overhead,
            _ => None,
        });
        format!(
            "{},{},{}",
            cell(self.worst_overhead(Mode::Shallow)),
            cell(self.worst_overhead(Mode::Deep)),
            cell(sb)
        )
    }

    /// Full per-configuration table as CSV.
    pub fn rows_csv(&self) -> String {
        self.rows_csv_for(None)
    }

    /// Per-configuration table as CSV, optionally limited to one mode.
    pub fn rows_csv_for(&self, only: Option<Mode>) -> String {
        let mut out = String::from(
            "config_bits,mode,shape_checks,flat_checks,wrappers,wrapped_calls,blame_ops,steps,cost,overhead,status\n",
        );
        for r in &self.rows {
            if only.is_some_and(|m| m != r.mode) {
                continue;
            }
            let c = &r.counters;
            let overhead =
                r.overhead.map_or_else(|| "TO".to_string(), |o| format!("{o:.4}"));
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{:.4},{},{}\n",
                r.bits,
                r.mode,
                c.shape_checks,
                c.flat_checks,
                c.wrappers_allocated,
                c.wrapped_calls,
                c.blame_ops,
                c.steps,
                r.cost,
                overhead,
                r.status.as_str(),
            ));
        }
        out
    }

    /// Overhead distributions as CSV, all modes.
    pub fn cdf_csv(&self) -> String {
        self.cdf_csv_for(None)
    }

    /// Overhead distributions as CSV, optionally limited to one mode.
    pub fn cdf_csv_for(&self, only: Option<Mode>) -> String {
        let mut out = String::from("mode,x,percent\n");
        for mode in Mode::ALL {
            if only.is_some_and(|m| m != mode) {
                continue;
            }
            for (x, pct) in self.cdf(mode) {
                out.push_str(&format!("{mode},{x},{pct:.1}\n"));
            }
        }
        out
    }
}

/// Wall-clock a closure the standard way: nine runs, discard the warmup,
/// average the final eight. Returns milliseconds.
pub fn wall_clock_ms<F: FnMut()>(mut f: F) -> f64 {
    let mut total = 0.0;
    for i in 0..9 {
        let t0 = std::time::Instant::now();
        f();
        let dt = t0.elapsed().as_secs_f64() * 1000.0;
        if i > 0 {
            total += dt;
        }
    }
    total / 8.0
}
