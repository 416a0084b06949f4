//! Post-selection cost analysis and the experiment sweep harness.
//!
//! Exact probabilities are always read off the simulated state; the
//! closed-form laws (`1/2ⁿ`, `1/M`, `1/(c²M)`) live in tests as independent
//! cross-checks, never as the reported value.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{DataRecord, Dataset, DatasetError};
use crate::encoders::{
    a_pqm_encode, ff_qram_encode, ffp_qram_encode, plus_zero_initial, preprocess_max_scale,
    EncodeError, EncodingResult,
};
use crate::state::StateError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("this encoding is deterministic; there is no post-selection register")]
    Deterministic,
    #[error("success probability {0} is not positive; the encoding cannot succeed")]
    NonPositiveProbability(f64),
    #[error("sweep point asks for {m} patterns but width {n} holds only 2^{n}")]
    PointTooLarge { m: usize, n: usize },
    #[error("peak amplitude {0} must lie in (0, 1)")]
    BadPeak(f64),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Exact squared-amplitude mass on `R = 1`, computed from the final state.
pub fn exact_postselect_probability(result: &EncodingResult) -> Result<f64, AnalysisError> {
    if result.postselect_probability.is_deterministic() {
        return Err(AnalysisError::Deterministic);
    }
    let r = result
        .final_state
        .layout()
        .qubit(&result.register_of_interest, 0)?;
    Ok(result.final_state.bit_probability(r, true)?)
}

/// Fraction of `shots` seeded measurements of the register qubit reading 1.
pub fn sampled_postselect_probability(
    result: &EncodingResult,
    shots: u64,
    seed: u64,
) -> Result<f64, AnalysisError> {
    if result.postselect_probability.is_deterministic() {
        return Err(AnalysisError::Deterministic);
    }
    let r = result
        .final_state
        .layout()
        .qubit(&result.register_of_interest, 0)?;
    let outcomes = result.final_state.measure_shots(&[r], shots, seed)?;
    let ones = outcomes
        .iter()
        .find(|o| o.bitstring == "1")
        .map_or(0, |o| o.count);
    Ok(ones as f64 / shots as f64)
}

/// Geometric-trial expectation `1/p` of the repetitions until post-selection
/// succeeds.
pub fn expected_repetitions(p: f64) -> Result<f64, AnalysisError> {
    if p <= 0.0 {
        return Err(AnalysisError::NonPositiveProbability(p));
    }
    Ok(1.0 / p)
}

/// Which loader a sweep drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepEncoder {
    FfQram,
    FfpQram,
    APqm,
}

impl SweepEncoder {
    pub fn name(&self) -> &'static str {
        match self {
            SweepEncoder::FfQram => "ff-qram",
            SweepEncoder::FfpQram => "ffp-qram",
            SweepEncoder::APqm => "a-pqm",
        }
    }
}

/// How each sweep point's dataset is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Amplitudes √0.3 and √0.7 at two distinct random patterns; the sweep
    /// walks the pattern width n = 1..=n_max.
    TwoPattern,
    /// M distinct random patterns with i.i.d. uniform amplitudes, jointly
    /// normalized; the sweep walks the M values.
    UniformRandom,
    /// One amplitude pinned at `peak`, the rest random and scaled so the
    /// whole set is exactly normalized.
    AdversarialMax { peak: f64 },
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub encoder: SweepEncoder,
    pub preprocess: bool,
    pub n: usize,
    pub m_values: Vec<usize>,
    pub distribution: Distribution,
    pub shots: u64,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(encoder: SweepEncoder, n: usize, distribution: Distribution) -> SweepConfig {
        SweepConfig {
            encoder,
            preprocess: false,
            n,
            m_values: Vec::new(),
            distribution,
            shots: 1024,
            seed: 0,
        }
    }

    /// M = 4, 8, …, 2ⁿ — the doubling ladder the experiments use.
    pub fn doubling_m_values(n: usize) -> Vec<usize> {
        let mut values = Vec::new();
        let mut m = 4usize;
        while m <= 1 << n {
            values.push(m);
            m *= 2;
        }
        values
    }
}

/// One sweep point. `within_five_sigma` flags (without failing) sampled
/// estimates that stray past five binomial standard deviations of exact.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub encoder: String,
    pub preprocess: bool,
    pub n: usize,
    pub m: usize,
    pub exact_probability: f64,
    pub sampled_probability: f64,
    pub expected_repetitions: f64,
    pub gate_count: usize,
    pub qubit_count: usize,
    pub within_five_sigma: bool,
}

/// splitmix64-style mixing so every sweep point owns an independent stream.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_distinct_patterns(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let capacity = 1usize << n;
    let format = |value: usize| format!("{value:0n$b}", n = n);
    if capacity <= 1 << 14 {
        // Partial Fisher-Yates over the full pattern space.
        let mut all: Vec<usize> = (0..capacity).collect();
        for i in 0..m {
            let j = rng.gen_range(i..capacity);
            all.swap(i, j);
        }
        all[..m].iter().map(|&v| format(v)).collect()
    } else {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let v = rng.gen_range(0..capacity);
            if seen.insert(v) {
                out.push(format(v));
            }
        }
        out
    }
}

/// Two records √0.3 and √0.7 at distinct random patterns of width `n`.
pub fn gen_two_pattern_dataset(n: usize, seed: u64) -> Result<Dataset, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns = random_distinct_patterns(n, 2, &mut rng);
    let records = vec![
        DataRecord::real(0.3f64.sqrt(), patterns[0].clone()),
        DataRecord::real(0.7f64.sqrt(), patterns[1].clone()),
    ];
    Ok(Dataset::new(records, n)?)
}

/// `m` records at distinct random patterns with uniform(0,1) amplitudes,
/// jointly normalized.
pub fn gen_uniform_dataset(n: usize, m: usize, seed: u64) -> Result<Dataset, AnalysisError> {
    if m > 1usize << n {
        return Err(AnalysisError::PointTooLarge { m, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns = random_distinct_patterns(n, m, &mut rng);
    let mut values: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut values {
        *v /= norm;
    }
    let records = patterns
        .into_iter()
        .zip(values)
        .map(|(pattern, v)| DataRecord::real(v, pattern))
        .collect();
    Ok(Dataset::new(records, n)?)
}

/// One amplitude pinned at `peak`; the remaining `m − 1` drawn uniformly and
/// scaled so the whole set carries exactly unit weight.
pub fn gen_adversarial_dataset(
    n: usize,
    m: usize,
    peak: f64,
    seed: u64,
) -> Result<Dataset, AnalysisError> {
    if !(peak > 0.0 && peak < 1.0) {
        return Err(AnalysisError::BadPeak(peak));
    }
    if m > 1usize << n {
        return Err(AnalysisError::PointTooLarge { m, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns = random_distinct_patterns(n, m, &mut rng);
    let mut values = vec![0.0f64; m];
    if m == 1 {
        values[0] = 1.0;
    } else {
        values[0] = peak;
        let rest: Vec<f64> = (1..m).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let rest_norm = rest.iter().map(|v| v * v).sum::<f64>().sqrt();
        let budget = (1.0 - peak * peak).sqrt();
        for (slot, v) in values[1..].iter_mut().zip(rest) {
            *slot = v / rest_norm * budget;
        }
    }
    let records = patterns
        .into_iter()
        .zip(values)
        .map(|(pattern, v)| DataRecord::real(v, pattern))
        .collect();
    Ok(Dataset::new(records, n)?)
}

/// `m` records with complex normalized amplitudes — input for the
/// deterministic complex loader.
pub fn gen_complex_dataset(n: usize, m: usize, seed: u64) -> Result<Dataset, AnalysisError> {
    if m > 1usize << n {
        return Err(AnalysisError::PointTooLarge { m, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns = random_distinct_patterns(n, m, &mut rng);
    let mut values: Vec<(f64, f64)> = (0..m)
        .map(|_| (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = values
        .iter()
        .map(|(re, im)| re * re + im * im)
        .sum::<f64>()
        .sqrt();
    for (re, im) in &mut values {
        *re /= norm;
        *im /= norm;
    }
    let records = patterns
        .into_iter()
        .zip(values)
        .map(|(pattern, (re, im))| DataRecord::new(re, im, pattern))
        .collect();
    Ok(Dataset::new(records, n)?)
}

fn sweep_point(
    config: &SweepConfig,
    index: usize,
    n: usize,
    dataset: &Dataset,
) -> Result<SweepRow, AnalysisError> {
    let m = dataset.len();
    let (exact, sampled, repetitions, gate_count, qubit_count) = match config.encoder {
        SweepEncoder::APqm => {
            // Deterministic: success probability is identically 1.
            let result = a_pqm_encode(dataset)?;
            (
                1.0,
                1.0,
                1.0,
                result.gate_count,
                result.circuit.layout().total_qubits(),
            )
        }
        SweepEncoder::FfQram | SweepEncoder::FfpQram => {
            let prepared;
            let data = if config.preprocess {
                prepared = preprocess_max_scale(dataset)?.0;
                &prepared
            } else {
                dataset
            };
            let result = match config.encoder {
                SweepEncoder::FfQram => ff_qram_encode(data, &plus_zero_initial(n)?)?,
                _ => ffp_qram_encode(data)?,
            };
            let exact = exact_postselect_probability(&result)?;
            let sampled = sampled_postselect_probability(
                &result,
                config.shots,
                derive_seed(config.seed, 2 * index as u64 + 1),
            )?;
            (
                exact,
                sampled,
                expected_repetitions(exact)?,
                result.gate_count,
                result.circuit.layout().total_qubits(),
            )
        }
    };
    let sigma = (exact * (1.0 - exact) / config.shots as f64).sqrt();
    Ok(SweepRow {
        encoder: config.encoder.name().to_string(),
        preprocess: config.preprocess,
        n,
        m,
        exact_probability: exact,
        sampled_probability: sampled,
        expected_repetitions: repetitions,
        gate_count,
        qubit_count,
        within_five_sigma: (sampled - exact).abs() <= 5.0 * sigma,
    })
}

/// Runs one row per point: per pattern width for the two-pattern family,
/// per M value otherwise. Fully deterministic for a fixed seed.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, AnalysisError> {
    let mut rows = Vec::new();
    match config.distribution {
        Distribution::TwoPattern => {
            for (index, n) in (1..=config.n).enumerate() {
                let dataset =
                    gen_two_pattern_dataset(n, derive_seed(config.seed, 2 * index as u64))?;
                rows.push(sweep_point(config, index, n, &dataset)?);
            }
        }
        Distribution::UniformRandom => {
            for (index, &m) in config.m_values.iter().enumerate() {
                let dataset =
                    gen_uniform_dataset(config.n, m, derive_seed(config.seed, 2 * index as u64))?;
                rows.push(sweep_point(config, index, config.n, &dataset)?);
            }
        }
        Distribution::AdversarialMax { peak } => {
            for (index, &m) in config.m_values.iter().enumerate() {
                let dataset = gen_adversarial_dataset(
                    config.n,
                    m,
                    peak,
                    derive_seed(config.seed, 2 * index as u64),
                )?;
                rows.push(sweep_point(config, index, config.n, &dataset)?);
            }
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "encoder,preprocess,n,M,exact_probability,sampled_probability,expected_repetitions,gate_count,qubit_count";

fn format_float(value: f64) -> String {
    // 12 significant digits.
    format!("{value:.11e}")
}

/// Writes rows as CSV with the pinned header, 12-significant-digit floats and
/// LF line endings; byte-identical for identical rows.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut writer: W) -> Result<(), AnalysisError> {
    writeln!(writer, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{}",
            row.encoder,
            row.preprocess,
            row.n,
            row.m,
            format_float(row.exact_probability),
            format_float(row.sampled_probability),
            format_float(row.expected_repetitions),
            row.gate_count,
            row.qubit_count,
        )?;
    }
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut out = Vec::new();
    write_csv(rows, &mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("CSV output is ASCII")
}

/// Runs a sweep and renders it as CSV in one step.
pub fn sweep_csv(config: &SweepConfig) -> Result<String, AnalysisError> {
    Ok(csv_string(&run_sweep(config)?))
}
