//! Synthetic missing-data benchmark: low-rank ground truth plus Gaussian
//! noise, uniform or tracking-style masks, and a sweep over missing fractions
//! and regularization strengths.

use std::fmt::Write as _;
use std::io;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_same_shape, Error, Result};
use crate::linalg::{singular_values, DenseMatrix};
use crate::penalty::{inverse_spectrum_weights, DEFAULT_EPS};
use crate::solver::{admm_complete, AdmmConfig, MaskedObservations};

/// Header of the sweep result CSV.
pub const CSV_HEADER: &str =
    "method,pattern,missing_fraction,mu,instances,mean_norm_dist,mean_datafit";

/// Method label written for every sweep row.
pub const METHOD_LABEL: &str = "rh";

/// Label of the best-μ row for each missing fraction.
pub const BEST_METHOD_LABEL: &str = "rh-best";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskPattern {
    Uniform,
    Tracking,
}

impl MaskPattern {
    pub fn name(self) -> &'static str {
        match self {
            MaskPattern::Uniform => "uniform",
            MaskPattern::Tracking => "tracking",
        }
    }
}

impl std::str::FromStr for MaskPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(MaskPattern::Uniform),
            "tracking" => Ok(MaskPattern::Tracking),
            other => Err(Error::InvalidInput(format!(
                "unknown mask pattern '{other}'"
            ))),
        }
    }
}

/// The log-spaced μ grid `1, 10^0.5, …, 10^3.5`.
///
/// The weights divide by the singular values of the zero-filled measurements,
/// whose noise tail grows with the missing fraction; the useful μ range moves
/// up accordingly.
pub fn default_mu_grid() -> Vec<f64> {
    (0..8).map(|j| 10f64.powf(0.5 * j as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub noise_sigma: f64,
    pub pattern: MaskPattern,
    pub missing_fractions: Vec<f64>,
    pub instances: usize,
    pub mu_grid: Vec<f64>,
    pub seed: u64,
    pub admm: AdmmConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            rows: 32,
            cols: 512,
            rank: 4,
            noise_sigma: 0.1,
            pattern: MaskPattern::Uniform,
            missing_fractions: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            instances: 20,
            mu_grid: default_mu_grid(),
            seed: 0,
            admm: AdmmConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.rank == 0 || self.instances == 0 {
            return Err(Error::InvalidInput(
                "rows, cols, rank and instances must be positive".into(),
            ));
        }
        if self.rank > self.rows.min(self.cols) {
            return Err(Error::InvalidInput(format!(
                "rank {} exceeds min({}, {})",
                self.rank, self.rows, self.cols
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "invalid noise sigma {}",
                self.noise_sigma
            )));
        }
        for &f in &self.missing_fractions {
            check_fraction(f)?;
        }
        if self.mu_grid.is_empty() || self.mu_grid.iter().any(|mu| !(*mu > 0.0 && mu.is_finite())) {
            return Err(Error::InvalidInput(
                "mu grid must hold positive values".into(),
            ));
        }
        self.admm.validate()
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidInput(format!(
            "missing fraction must lie in [0, 1), got {fraction}"
        )));
    }
    Ok(())
}

/// SplitMix64 finalizer; decorrelates derived seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one stream of one instance.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(seed) ^ stream) ^ index)
}

const STREAM_DATA: u64 = 1;
const STREAM_MASK: u64 = 2;

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    // Filled row by row so the draw order follows the logical layout.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let z: f64 = StandardNormal.sample(rng);
            m[(i, j)] = scale * z;
        }
    }
    m
}

/// Ground truth `m0 = L Rᵀ` and measurements `m = m0 + N` for one instance.
pub fn gen_instance(
    spec: &ExperimentSpec,
    instance_index: usize,
) -> Result<(DenseMatrix, DenseMatrix)> {
    spec.validate()?;
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_DATA, instance_index as u64));
    let left = normal_matrix(&mut rng, spec.rows, spec.rank, 1.0);
    let right = normal_matrix(&mut rng, spec.cols, spec.rank, 1.0);
    let m0 = &left * right.transpose();
    let noise = normal_matrix(&mut rng, spec.rows, spec.cols, spec.noise_sigma);
    let m = &m0 + noise;
    Ok((
        DenseMatrix::from_nalgebra(m0)?,
        DenseMatrix::from_nalgebra(m)?,
    ))
}

/// A mask with exactly `round(fraction · rows · cols)` zeros placed uniformly.
pub fn mask_uniform(rows: usize, cols: usize, fraction: f64, seed: u64) -> Result<DenseMatrix> {
    check_fraction(fraction)?;
    let n = rows * cols;
    let missing = (fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = vec![1.0; n];
    for idx in sample(&mut rng, n, missing) {
        entries[idx] = 0.0;
    }
    DenseMatrix::from_row_major(rows, cols, &entries)
}

/// Tracking-failure style mask: rows are frames and columns are tracks.
///
/// Each column is observed over one contiguous run of rows. Run lengths are
/// drawn around the target length and then nudged so the total number of
/// observed entries equals `round((1 − fraction) · rows · cols)`.
pub fn mask_tracking(rows: usize, cols: usize, fraction: f64, seed: u64) -> Result<DenseMatrix> {
    check_fraction(fraction)?;
    let total = rows * cols;
    let observed = total - (fraction * total as f64).round() as usize;
    if observed < cols {
        return Err(Error::Generation(format!(
            "{observed} observations cannot cover {cols} tracks"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = observed as f64 / cols as f64;
    // Lengths vary by up to half the room on the tighter side of the target.
    let spread = (target - 1.0).min(rows as f64 - target) * 0.5;
    let mut lengths: Vec<usize> = (0..cols)
        .map(|_| {
            let l = target + rng.random_range(-1.0..=1.0) * spread;
            (l.round() as usize).clamp(1, rows)
        })
        .collect();

    let mut sum: usize = lengths.iter().sum();
    while sum != observed {
        let j = rng.random_range(0..cols);
        if sum < observed && lengths[j] < rows {
            lengths[j] += 1;
            sum += 1;
        } else if sum > observed && lengths[j] > 1 {
            lengths[j] -= 1;
            sum -= 1;
        }
    }

    let mut mask = DMatrix::zeros(rows, cols);
    for (j, &len) in lengths.iter().enumerate() {
        let start = rng.random_range(0..=rows - len);
        for i in start..start + len {
            mask[(i, j)] = 1.0;
        }
    }
    DenseMatrix::from_nalgebra(mask)
}

/// Mask of the given pattern.
pub fn make_mask(
    pattern: MaskPattern,
    rows: usize,
    cols: usize,
    fraction: f64,
    seed: u64,
) -> Result<DenseMatrix> {
    match pattern {
        MaskPattern::Uniform => mask_uniform(rows, cols, fraction, seed),
        MaskPattern::Tracking => mask_tracking(rows, cols, fraction, seed),
    }
}

/// The mask paired with instance `instance_index` of `spec`.
pub fn gen_mask(
    spec: &ExperimentSpec,
    instance_index: usize,
    fraction: f64,
) -> Result<DenseMatrix> {
    let seed = derive_seed(spec.seed, STREAM_MASK, instance_index as u64);
    make_mask(spec.pattern, spec.rows, spec.cols, fraction, seed)
}

/// `‖x − m0‖_F / ‖m0‖_F`.
pub fn normalized_distance(x: &DenseMatrix, m0: &DenseMatrix) -> Result<f64> {
    check_same_shape(m0.shape(), x.shape())?;
    let denom = m0.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric("ground truth has zero norm".into()));
    }
    Ok(x.sub(m0)?.frobenius_norm() / denom)
}

/// `‖W ⊙ (x − M)‖_F`.
pub fn datafit(x: &DenseMatrix, obs: &MaskedObservations) -> Result<f64> {
    Ok(obs.masked_residual(x)?.frobenius_norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub method: String,
    pub pattern: MaskPattern,
    pub missing_fraction: f64,
    pub mu: f64,
    pub instances: usize,
    pub mean_norm_dist: f64,
    pub mean_datafit: f64,
    /// Lowest mean distance among the μ values tried for this fraction.
    pub best: bool,
}

/// Outcome of one completion run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceOutcome {
    pub norm_dist: f64,
    pub datafit: f64,
    pub iterations: usize,
}

/// Solves one instance with the inverse-spectrum weights built from the
/// zero-filled measurements.
pub fn run_instance(
    spec: &ExperimentSpec,
    instance_index: usize,
    fraction: f64,
    mu: f64,
) -> Result<InstanceOutcome> {
    let (m0, m) = gen_instance(spec, instance_index)?;
    let mask = gen_mask(spec, instance_index, fraction)?;
    let obs = MaskedObservations::new(m, mask)?;
    let s0 = singular_values(&obs.zero_filled())?;
    let weights = inverse_spectrum_weights(&s0, mu, DEFAULT_EPS)?;
    let (x, diag) = admm_complete(&obs, &weights, &spec.admm)?;
    Ok(InstanceOutcome {
        norm_dist: normalized_distance(&x, &m0)?,
        datafit: datafit(&x, &obs)?,
        iterations: diag.iterations,
    })
}

/// One record per `(fraction, μ)`, with the best μ of each fraction flagged.
///
/// Instances are solved in parallel; each owns its seeded generators, so the
/// records do not depend on scheduling.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    let mut records = Vec::new();
    for &fraction in &spec.missing_fractions {
        let start = records.len();
        for &mu in &spec.mu_grid {
            let outcomes: Vec<InstanceOutcome> = (0..spec.instances)
                .into_par_iter()
                .map(|i| run_instance(spec, i, fraction, mu))
                .collect::<Result<_>>()?;
            let n = outcomes.len() as f64;
            records.push(ResultRecord {
                method: METHOD_LABEL.to_string(),
                pattern: spec.pattern,
                missing_fraction: fraction,
                mu,
                instances: spec.instances,
                mean_norm_dist: outcomes.iter().map(|o| o.norm_dist).sum::<f64>() / n,
                mean_datafit: outcomes.iter().map(|o| o.datafit).sum::<f64>() / n,
                best: false,
            });
        }
        let best = (start..records.len())
            .min_by(|&i, &j| {
                records[i]
                    .mean_norm_dist
                    .total_cmp(&records[j].mean_norm_dist)
            })
            .expect("mu grid is non-empty");
        records[best].best = true;
    }
    Ok(records)
}

/// Best-μ record for each missing fraction, in sweep order.
pub fn best_records(records: &[ResultRecord]) -> Vec<&ResultRecord> {
    records.iter().filter(|r| r.best).collect()
}

/// Formats `x` with six significant digits, like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // The exponent after rounding to six digits decides the notation.
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the sweep CSV.
pub fn write_results_csv<W: io::Write>(records: &[ResultRecord], mut out: W) -> io::Result<()> {
    let mut buf = String::new();
    writeln!(buf, "{CSV_HEADER}").expect("string write");
    for r in records {
        let method = if r.best {
            BEST_METHOD_LABEL
        } else {
            r.method.as_str()
        };
        writeln!(
            buf,
            "{},{},{},{},{},{},{}",
            method,
            r.pattern.name(),
            format_sig6(r.missing_fraction),
            format_sig6(r.mu),
            r.instances,
            format_sig6(r.mean_norm_dist),
            format_sig6(r.mean_datafit)
        )
        .expect("string write");
    }
    out.write_all(buf.as_bytes())
}
