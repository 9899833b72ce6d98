//! Measurement harness: generator bias against output tests, exact
//! circuit-versus-hard-function correlation, the full restriction
//! pipeline experiment, and report persistence.

use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::hardfn::{gip_copy_check, structure_under_restriction, RwParams};
use crate::nwgen::{HardFunction, NwGenerator, OutputTest};
use crate::restrictlab::{fair_pipeline_sample, PIPELINE_MAX_VARS};
use crate::rng::trial_rng;
use crate::stats::{mean_and_se, z_for_confidence};
use crate::truthtable::TruthTable;
use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::path::Path;

pub const REPORT_SCHEMA: u32 = 1;
/// Exact bias enumeration walks 2^seed_len seeds and 2^arity inputs.
pub const EXACT_BIAS_MAX_SEED: usize = 24;
pub const EXACT_BIAS_MAX_ARITY: usize = 20;
pub const CORR_MAX_VARS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BiasMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoolReport {
    #[serde(flatten)]
    pub mode: BiasMode,
    /// |E_seed[T(G(seed))] - E_x[T(x)]|.
    pub bias: f64,
    pub generator_mean: f64,
    pub uniform_mean: f64,
    pub generator_samples: u64,
    pub uniform_samples: u64,
    /// 99% normal-approximation half-width on the bias; 0 in exact mode.
    pub half_width_99: f64,
}

/// Fraction of all `arity`-bit inputs accepted by the test.
pub fn exact_uniform_mean(target: &dyn OutputTest) -> Result<f64> {
    let arity = target.arity();
    if arity > EXACT_BIAS_MAX_ARITY {
        return Err(Error::cap(format!(
            "exact enumeration needs arity <= {EXACT_BIAS_MAX_ARITY}, got {arity}"
        )));
    }
    let total = 1u64 << arity;
    let hits = (0..total)
        .into_par_iter()
        .map(|x| -> Result<u64> {
            let bits: Vec<bool> = (0..arity).map(|i| (x >> i) & 1 == 1).collect();
            Ok(target.check(&bits)? as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(hits as f64 / total as f64)
}

/// How far the generator's output distribution is from uniform, as seen by
/// one output test: exact mode enumerates both sides, Monte-Carlo mode
/// samples both sides and carries a confidence interval.
pub fn measure_bias(
    target: &dyn OutputTest,
    generator: &NwGenerator,
    mode: BiasMode,
) -> Result<FoolReport> {
    let arity = target.arity();
    if arity > generator.output_len() {
        return Err(Error::dimension(format!(
            "test arity {arity} exceeds output length {}",
            generator.output_len()
        )));
    }
    match mode {
        BiasMode::Exact => {
            let m = generator.seed_len();
            if m > EXACT_BIAS_MAX_SEED {
                return Err(Error::cap(format!(
                    "exact enumeration needs seed length <= {EXACT_BIAS_MAX_SEED}, got {m}"
                )));
            }
            let generator_mean = generator.approx_count(target)?;
            let uniform_mean = exact_uniform_mean(target)?;
            Ok(FoolReport {
                mode,
                bias: (generator_mean - uniform_mean).abs(),
                generator_mean,
                uniform_mean,
                generator_samples: 1u64 << m,
                uniform_samples: 1u64 << arity,
                half_width_99: 0.0,
            })
        }
        BiasMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::param("monte-carlo mode needs a sample budget"));
            }
            use rand::Rng as _;
            let m = generator.seed_len();
            let counts = (0..samples)
                .into_par_iter()
                .map(|i| -> Result<(u64, u64)> {
                    let mut rng = trial_rng(seed, i);
                    let seed_bits: Vec<bool> = (0..m).map(|_| rng.random()).collect();
                    let out = generator.generate(&seed_bits)?;
                    let gen_hit = target.check(&out[..arity])? as u64;
                    let x: Vec<bool> = (0..arity).map(|_| rng.random()).collect();
                    let uni_hit = target.check(&x)? as u64;
                    Ok((gen_hit, uni_hit))
                })
                .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
            let generator_mean = counts.0 as f64 / samples as f64;
            let uniform_mean = counts.1 as f64 / samples as f64;
            let var = generator_mean * (1.0 - generator_mean) / samples as f64
                + uniform_mean * (1.0 - uniform_mean) / samples as f64;
            let z = z_for_confidence(0.99)?;
            Ok(FoolReport {
                mode,
                bias: (generator_mean - uniform_mean).abs(),
                generator_mean,
                uniform_mean,
                generator_samples: samples,
                uniform_samples: samples,
                half_width_99: z * var.sqrt(),
            })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountReport {
    /// Acceptance fraction over all generator outputs.
    pub estimate: f64,
    /// Acceptance fraction over all inputs, when the arity permits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    pub seed_count: u64,
}

/// Deterministic approximate count of a test's acceptance probability: the
/// estimate enumerates every generator seed; the exact side is included
/// whenever the test's arity allows brute force.
pub fn count_experiment(generator: &NwGenerator, target: &dyn OutputTest) -> Result<CountReport> {
    let estimate = generator.approx_count(target)?;
    let exact = if target.arity() <= EXACT_BIAS_MAX_ARITY {
        Some(exact_uniform_mean(target)?)
    } else {
        None
    };
    Ok(CountReport {
        estimate,
        exact,
        abs_error: exact.map(|e| (estimate - e).abs()),
        seed_count: 1u64 << generator.seed_len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrReport {
    pub agreement: f64,
    /// Agreement minus one half.
    pub correlation: f64,
    pub domain_size: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_sl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_corr: Option<f64>,
}

fn hard_table(hard: &HardFunction) -> Result<TruthTable> {
    let n = hard.arity();
    let mut scratch = vec![false; n];
    let mut out = TruthTable::new_constant(n, false)?;
    for x in 0..1u64 << n {
        for (i, b) in scratch.iter_mut().enumerate() {
            *b = (x >> i) & 1 == 1;
        }
        out.set(x, hard.eval_bits(&scratch)?);
    }
    Ok(out)
}

/// Exact agreement of a circuit with a hard function over all inputs.
pub fn measure_correlation(circuit: &CircuitSpec, hard: &HardFunction) -> Result<CorrReport> {
    let n = circuit.n;
    if n != hard.arity() {
        return Err(Error::dimension(format!(
            "circuit arity {n} != hard function arity {}",
            hard.arity()
        )));
    }
    if n > CORR_MAX_VARS {
        return Err(Error::cap(format!(
            "exact correlation needs n <= {CORR_MAX_VARS}, n={n}"
        )));
    }
    let agreement = circuit.truth_table()?.agreement(&hard_table(hard)?)?;
    Ok(CorrReport {
        agreement,
        correlation: agreement - 0.5,
        domain_size: 1u64 << n,
        gamma_sl: None,
        gamma_target: None,
        gamma_corr: None,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub circuit: CircuitSpec,
    pub rw: RwParams,
    /// Width the restricted circuit should collapse to; the walk drives
    /// the bottom conjunctions down to this width.
    pub k: usize,
    pub p: f64,
    pub q: f64,
    /// Depth budget the collapse diagnostic is checked against.
    pub t_cap: Option<usize>,
    /// Surviving rows required for the target to count as structured.
    pub target_m: usize,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    /// Fraction of trials where the circuit failed to collapse.
    pub gamma_sl_hat: f64,
    /// Fraction of trials where the circuit collapsed but the target lost
    /// its inner-product copy; disjoint from gamma_sl_hat by construction.
    pub gamma_target_hat: f64,
    /// Post-restriction correlations from trials where both survived.
    pub corr_samples: u64,
    pub corr_max: Option<f64>,
    pub corr_mean: Option<f64>,
    /// Restricted agreement averaged over all trials; by fairness its
    /// expectation is the unrestricted exact agreement.
    pub mean_restricted_agreement: f64,
    pub restricted_agreement_se: f64,
    pub agreement_exact: f64,
    /// Three standard errors of the trial mean.
    pub slack: f64,
    /// 1/2 + gamma_sl_hat + gamma_target_hat + max(corr_max, 0) + slack.
    pub rhs: f64,
    pub inequality_holds: bool,
}

struct TrialOutcome {
    collapsed: bool,
    copy_ok: bool,
    agreement: f64,
}

/// Per trial: draw a fair pipeline restriction, record whether the circuit
/// collapsed to width k and whether the target keeps an inner-product
/// copy, and measure the exact post-restriction agreement. The aggregate
/// checks the decomposition
/// agreement <= 1/2 + gamma_sl + gamma_target + max corr + slack.
pub fn pipeline_experiment(config: &PipelineConfig) -> Result<PipelineReport> {
    let n = config.circuit.n;
    if n != config.rw.n() {
        return Err(Error::dimension(format!(
            "circuit arity {n} != target arity {}",
            config.rw.n()
        )));
    }
    if n > PIPELINE_MAX_VARS {
        return Err(Error::cap(format!(
            "pipeline needs n <= {PIPELINE_MAX_VARS}, n={n}"
        )));
    }
    if config.trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    config.circuit.validate()?;
    let circuit_table = config.circuit.truth_table()?;
    let target_table = config.rw.to_table()?;

    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|i| -> Result<TrialOutcome> {
            let mut rng = trial_rng(config.seed, i);
            let (rho, diag) = fair_pipeline_sample(
                &config.circuit,
                config.k,
                config.p,
                config.q,
                config.t_cap,
                &mut rng,
            )?;
            let structure = structure_under_restriction(&config.rw, &rho)?;
            let agreement = circuit_table
                .restrict(&rho)?
                .agreement(&target_table.restrict(&rho)?)?;
            Ok(TrialOutcome {
                collapsed: diag.collapsed_to_width_k,
                copy_ok: gip_copy_check(&structure, config.target_m),
                agreement,
            })
        })
        .collect::<Result<_>>()?;

    let trials = outcomes.len() as f64;
    let sl_misses = outcomes.iter().filter(|o| !o.collapsed).count();
    let target_misses = outcomes
        .iter()
        .filter(|o| o.collapsed && !o.copy_ok)
        .count();
    let corrs: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.collapsed && o.copy_ok)
        .map(|o| o.agreement - 0.5)
        .collect();
    let agreements: Vec<f64> = outcomes.iter().map(|o| o.agreement).collect();
    let (mean_agreement, se) = mean_and_se(&agreements);
    let agreement_exact = circuit_table.agreement(&target_table)?;

    let gamma_sl_hat = sl_misses as f64 / trials;
    let gamma_target_hat = target_misses as f64 / trials;
    let corr_max = corrs.iter().copied().fold(None, |acc: Option<f64>, c| {
        Some(acc.map_or(c, |a| a.max(c)))
    });
    let corr_mean = if corrs.is_empty() {
        None
    } else {
        Some(corrs.iter().sum::<f64>() / corrs.len() as f64)
    };
    let slack = 3.0 * se;
    let rhs = 0.5 + gamma_sl_hat + gamma_target_hat + corr_max.unwrap_or(0.0).max(0.0) + slack;
    Ok(PipelineReport {
        config: config.clone(),
        gamma_sl_hat,
        gamma_target_hat,
        corr_samples: corrs.len() as u64,
        corr_max,
        corr_mean,
        mean_restricted_agreement: mean_agreement,
        restricted_agreement_se: se,
        agreement_exact,
        slack,
        rhs,
        inequality_holds: agreement_exact <= rhs,
    })
}

/// Versioned wrapper every saved report lives in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportEnvelope<T> {
    pub schema: u32,
    pub kind: String,
    pub report: T,
}

pub fn report_to_json<T: Serialize>(kind: &str, report: &T) -> Result<String> {
    let envelope = ReportEnvelope {
        schema: REPORT_SCHEMA,
        kind: kind.to_string(),
        report,
    };
    Ok(serde_json::to_string_pretty(&envelope)?)
}

pub fn save_report<T: Serialize>(kind: &str, report: &T, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_json(kind, report)? + "\n")?;
    Ok(())
}

pub fn load_report<T: DeserializeOwned>(path: &Path, expected_kind: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let envelope: ReportEnvelope<T> = serde_json::from_str(&text)?;
    if envelope.schema != REPORT_SCHEMA {
        return Err(Error::parse(format!(
            "unsupported report schema {}",
            envelope.schema
        )));
    }
    if envelope.kind != expected_kind {
        return Err(Error::parse(format!(
            "expected a {expected_kind} report, found {}",
            envelope.kind
        )));
    }
    Ok(envelope.report)
}

fn flatten_value(prefix: &str, value: &serde_json::Value, out: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (key, sub) in map {
                let name = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten_value(&name, sub, out);
            }
        }
        serde_json::Value::Array(_) => {}
        serde_json::Value::Null => {}
        serde_json::Value::String(s) => out.push((prefix.to_string(), s.clone())),
        scalar => out.push((prefix.to_string(), scalar.to_string())),
    }
}

/// Header line plus one row: the scalar fields of the report, dot-named;
/// arrays are dropped, so this is a lossy projection for plotting.
pub fn report_to_csv<T: Serialize>(report: &T) -> Result<String> {
    let value = serde_json::to_value(report)?;
    let mut fields = Vec::new();
    flatten_value("", &value, &mut fields);
    let header: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
    let row: Vec<String> = fields
        .iter()
        .map(|(_, v)| {
            if v.contains(',') || v.contains('"') {
                format!("\"{}\"", v.replace('"', "\"\""))
            } else {
                v.clone()
            }
        })
        .collect();
    Ok(format!("{}\n{}\n", header.join(","), row.join(",")))
}
