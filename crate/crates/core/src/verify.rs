//! Batch verification over seeded random instances.

use rayon::prelude::*;

use crate::distribution::Instance;
use crate::generate::trial_instance;
use crate::greedy::BoundReport;
use crate::oracle::{compare_greedy_to_oracle, OracleCaps};
use crate::scalar::{NumericMode, Scalar, Tolerance};
use crate::split::verify_split_majorization;

/// Largest support for which the oracle comparison runs on two marginals.
pub const ORACLE_MAX_N: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub trials: u64,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub zs: Vec<u64>,
    pub mode: NumericMode,
    pub tail: f64,
    pub tol: Tolerance,
    pub caps: OracleCaps,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            trials: 1000,
            m: 2,
            n: 3,
            seed: 0,
            zs: vec![2, 3, 5, 10],
            mode: NumericMode::Float64,
            tail: crate::split::DEFAULT_TAIL,
            tol: Tolerance::DEFAULT,
            caps: OracleCaps::default(),
        }
    }
}

/// Everything measured on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCheck {
    pub gap: f64,
    pub oracle_difference: Option<f64>,
    /// Smallest `H(p) - log2(alpha) - H(q)` over the split checks.
    pub min_entropy_slack: f64,
    pub failures: Vec<String>,
}

impl InstanceCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs the certificate, the log2(e) band, the split checks for each `z`,
/// and (for two marginals on at most [`ORACLE_MAX_N`] states) the oracle.
pub fn check_instance<T: Scalar>(
    instance: &Instance<T>,
    zs: &[u64],
    tail: &T,
    tol: Tolerance,
    caps: OracleCaps,
) -> InstanceCheck {
    let mut failures = Vec::new();
    let report = BoundReport::build(instance, zs, tol);
    if !report.marginals_ok {
        failures.push("coupling marginals do not reproduce the instance".to_string());
    }
    let (m, n) = (instance.m(), instance.n());
    if report.trace.steps.len() > m * (n - 1) + 1 {
        failures.push(format!(
            "greedy used {} steps, more than m(n-1)+1 = {}",
            report.trace.steps.len(),
            m * (n - 1) + 1
        ));
    }
    if report.certificate.is_none() {
        failures.push("per-step lower bound violated".to_string());
    }
    if !report.lower_ok || !report.upper_ok {
        failures.push(format!("gap {} outside [0, log2(e)]", report.gap));
    }
    for &(z, bound) in &report.split_bounds {
        if report.coupling_entropy > bound + tol.compare {
            failures.push(format!(
                "H(G) = {} exceeds z = {z} bound {bound}",
                report.coupling_entropy
            ));
        }
    }

    let mut min_entropy_slack = f64::INFINITY;
    for &z in zs {
        match verify_split_majorization(instance, z, tail, tol) {
            Ok(r) if r.passed() => {
                if let Some(order) = r.entropy_order {
                    min_entropy_slack = min_entropy_slack.min(order.slack);
                }
            }
            Ok(r) => failures.push(format!(
                "z = {z}: strong majorization fails: {:?}",
                r.outcome
            )),
            Err(e) => failures.push(format!("z = {z}: {e}")),
        }
    }

    let oracle_difference = if m == 2 && n <= ORACLE_MAX_N {
        match compare_greedy_to_oracle(instance, caps, tol) {
            Ok(c) => Some(c.difference),
            Err(e) => {
                failures.push(format!("oracle: {e}"));
                None
            }
        }
    } else {
        None
    };

    InstanceCheck {
        gap: report.gap,
        oracle_difference,
        min_entropy_slack,
        failures,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedTrial {
    pub trial: u64,
    pub instance: Instance,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub trials: u64,
    pub failed: u64,
    pub max_gap: Option<f64>,
    pub max_oracle_difference: Option<f64>,
    pub min_entropy_slack: Option<f64>,
    /// Lowest-index failing trial.
    pub first_failure: Option<FailedTrial>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Generates and checks `config.trials` instances in parallel.
pub fn run_verify(config: &VerifyConfig) -> VerifySummary {
    let outcomes: Vec<(u64, InstanceCheck)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let instance = trial_instance(config.seed, t, config.m, config.n);
            let check = match config.mode {
                NumericMode::Float64 => {
                    check_instance(&instance, &config.zs, &config.tail, config.tol, config.caps)
                }
                NumericMode::ExactRational => {
                    let exact = instance.to_exact();
                    let tail = config.tail.to_rational();
                    check_instance(&exact, &config.zs, &tail, config.tol, config.caps)
                }
            };
            (t, check)
        })
        .collect();

    let mut summary = VerifySummary {
        trials: config.trials,
        failed: 0,
        max_gap: None,
        max_oracle_difference: None,
        min_entropy_slack: None,
        first_failure: None,
    };
    for (t, check) in outcomes {
        summary.max_gap = max_opt(summary.max_gap, Some(check.gap));
        summary.max_oracle_difference =
            max_opt(summary.max_oracle_difference, check.oracle_difference);
        if check.min_entropy_slack.is_finite() {
            let s = check.min_entropy_slack;
            summary.min_entropy_slack =
                Some(summary.min_entropy_slack.map_or(s, |m: f64| m.min(s)));
        }
        if !check.passed() {
            summary.failed += 1;
            if summary.first_failure.is_none() {
                summary.first_failure = Some(FailedTrial {
                    trial: t,
                    instance: trial_instance(config.seed, t, config.m, config.n),
                    failures: check.failures,
                });
            }
        }
    }
    summary
}
