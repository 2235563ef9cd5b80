//! MA(1) versus MA(2) benchmark: priors, simulation, autocorrelation
//! summaries, the exact Gaussian likelihood and quadrature posteriors.
//!
//! Both models are `x_t = e_t - θ1 e_{t-1} - θ2 e_{t-2}` with `e_t ~ N(0, σ²)`
//! (θ2 = 0 for MA(1)). Priors are uniform on the invertibility regions:
//! the segment (-1, 1) for MA(1) and the triangle with vertices
//! (-2, -1), (2, -1), (0, 1) for MA(2).

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::{ModelIndex, ReferenceTable, SimulationRecord};
use crate::error::{Error, Result};
use crate::quadrature::{triangle_rule, GaussLegendre};
use crate::rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// MA(2) prior triangle vertices; the first one is where the Duffy map collapses.
pub const MA2_TRIANGLE: [[f64; 2]; 3] = [[0.0, 1.0], [-2.0, -1.0], [2.0, -1.0]];
pub const MA2_TRIANGLE_AREA: f64 = 4.0;

/// Which lag statistics summarize a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SummaryKind {
    /// ρ̂_k, each in [-1, 1]
    #[default]
    Autocorrelation,
    /// γ̂_k with the same centring and 1/T normalization
    Autocovariance,
}

impl SummaryKind {
    pub fn name(self) -> &'static str {
        match self {
            SummaryKind::Autocorrelation => "autocorrelation",
            SummaryKind::Autocovariance => "autocovariance",
        }
    }

    /// Column prefix of the summary names.
    pub fn prefix(self) -> &'static str {
        match self {
            SummaryKind::Autocorrelation => "ac",
            SummaryKind::Autocovariance => "acov",
        }
    }
}

impl std::str::FromStr for SummaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "autocorrelation" | "acf" => Ok(SummaryKind::Autocorrelation),
            "autocovariance" | "acov" => Ok(SummaryKind::Autocovariance),
            _ => Err(Error::arg(format!("unknown summary kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyConfig {
    pub series_length: usize,
    pub noise_sd: f64,
    pub n_lags: usize,
    pub summary: SummaryKind,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            series_length: 100,
            noise_sd: 1.0,
            n_lags: 7,
            summary: SummaryKind::Autocorrelation,
        }
    }
}

impl ToyConfig {
    pub fn with_lags(n_lags: usize) -> Self {
        ToyConfig {
            n_lags,
            ..Self::default()
        }
    }

    pub fn with_summary(mut self, summary: SummaryKind) -> Self {
        self.summary = summary;
        self
    }

    /// Whether both configurations define the same likelihood.
    pub fn same_likelihood(&self, other: &ToyConfig) -> bool {
        self.series_length == other.series_length && self.noise_sd == other.noise_sd
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lags == 0 || self.series_length < self.n_lags + 1 {
            return Err(Error::arg(format!(
                "series length {} must exceed the lag count {} (>= 1)",
                self.series_length, self.n_lags
            )));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::arg("noise sd must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaParams {
    pub order: u8,
    pub theta1: f64,
    pub theta2: f64,
}

impl MaParams {
    pub fn ma1(theta1: f64) -> Self {
        MaParams {
            order: 1,
            theta1,
            theta2: 0.0,
        }
    }

    pub fn ma2(theta1: f64, theta2: f64) -> Self {
        MaParams {
            order: 2,
            theta1,
            theta2,
        }
    }

    /// Whether the parameters lie in the prior support of their order.
    pub fn in_support(&self) -> bool {
        match self.order {
            1 => self.theta2 == 0.0 && self.theta1 > -1.0 && self.theta1 < 1.0,
            2 => in_ma2_triangle(self.theta1, self.theta2),
            _ => false,
        }
    }

    /// Autocovariances `(γ0, γ1, γ2)` for noise variance `var`.
    pub fn autocovariances(&self, var: f64) -> (f64, f64, f64) {
        let (a, b) = (self.theta1, self.theta2);
        (
            var * (1.0 + a * a + b * b),
            var * (-a + a * b),
            -var * b,
        )
    }
}

pub fn in_ma2_triangle(theta1: f64, theta2: f64) -> bool {
    theta2 > -1.0 && theta1 + theta2 < 1.0 && theta2 - theta1 < 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
}

/// Uniform prior draw for model 1 or 2.
pub fn sample_prior(model: ModelIndex, seed: u64) -> Result<MaParams> {
    sample_prior_with(model, &mut rng::from_seed(seed))
}

pub fn sample_prior_with<R: Rng + ?Sized>(model: ModelIndex, rng: &mut R) -> Result<MaParams> {
    match model {
        1 => loop {
            let t = rng.random_range(-1.0..1.0);
            if t != -1.0 {
                return Ok(MaParams::ma1(t));
            }
        },
        2 => loop {
            // rejection from the bounding box, acceptance 1/2
            let a = rng.random_range(-2.0..2.0);
            let b = rng.random_range(-1.0..1.0);
            if in_ma2_triangle(a, b) {
                return Ok(MaParams::ma2(a, b));
            }
        },
        m => Err(Error::arg(format!("toy model index must be 1 or 2, got {m}"))),
    }
}

pub fn simulate(params: &MaParams, config: &ToyConfig, seed: u64) -> TimeSeries {
    simulate_with(params, config, &mut rng::from_seed(seed))
}

/// Simulates a stationary series: the two pre-sample innovations are drawn
/// from the same noise law as the rest.
pub fn simulate_with<R: Rng + ?Sized>(
    params: &MaParams,
    config: &ToyConfig,
    rng: &mut R,
) -> TimeSeries {
    let sd = config.noise_sd;
    let mut e2: f64 = sd * rng.sample::<f64, _>(StandardNormal);
    let mut e1: f64 = sd * rng.sample::<f64, _>(StandardNormal);
    let values = (0..config.series_length)
        .map(|_| {
            let e: f64 = sd * rng.sample::<f64, _>(StandardNormal);
            let x = e - params.theta1 * e1 - params.theta2 * e2;
            e2 = e1;
            e1 = e;
            x
        })
        .collect();
    TimeSeries { values }
}

/// Sample autocorrelations at lags `1..=n_lags`, mean-centred with the
/// biased (1/T) normalization, so every value lies in [-1, 1].
pub fn summarize(series: &TimeSeries, n_lags: usize) -> Result<Vec<f64>> {
    let x = &series.values;
    let n = x.len();
    if n_lags >= n {
        return Err(Error::arg(format!(
            "{n_lags} lags requested for a series of length {n}"
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::Degenerate("series has zero sample variance".into()));
    }
    Ok((1..=n_lags)
        .map(|k| {
            let ck: f64 = c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum();
            (ck / c0).clamp(-1.0, 1.0)
        })
        .collect())
}

/// Sample autocovariances at lags `1..=n_lags`, mean-centred, divided by T.
pub fn autocovariances(series: &TimeSeries, n_lags: usize) -> Result<Vec<f64>> {
    let x = &series.values;
    let n = x.len();
    if n_lags >= n {
        return Err(Error::arg(format!(
            "{n_lags} lags requested for a series of length {n}"
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    Ok((1..=n_lags)
        .map(|k| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect())
}

/// Summary vector of `config.summary` kind over `config.n_lags` lags.
pub fn summarize_with(series: &TimeSeries, config: &ToyConfig) -> Result<Vec<f64>> {
    match config.summary {
        SummaryKind::Autocorrelation => summarize(series, config.n_lags),
        SummaryKind::Autocovariance => autocovariances(series, config.n_lags),
    }
}

/// Unit-lower-triangular `L D Lᵀ` factor of the banded MA covariance.
#[derive(Debug, Clone)]
struct BandFactor {
    sub1: Vec<f64>,
    sub2: Vec<f64>,
    inv_d: Vec<f64>,
    log_det: f64,
}

impl BandFactor {
    fn new(params: &MaParams, n: usize, var: f64) -> Result<Self> {
        let (g0, g1, g2) = params.autocovariances(var);
        let mut sub1 = vec![0.0; n];
        let mut sub2 = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let l2 = if i >= 2 { g2 / d[i - 2] } else { 0.0 };
            let l1 = if i >= 1 {
                let cross = if i >= 2 { l2 * sub1[i - 1] * d[i - 2] } else { 0.0 };
                (g1 - cross) / d[i - 1]
            } else {
                0.0
            };
            let mut di = g0;
            if i >= 1 {
                di -= l1 * l1 * d[i - 1];
            }
            if i >= 2 {
                di -= l2 * l2 * d[i - 2];
            }
            if !(di > 0.0) || !di.is_finite() {
                return Err(Error::Numeric(format!(
                    "MA covariance not positive definite at row {i} for θ = ({}, {})",
                    params.theta1, params.theta2
                )));
            }
            sub1[i] = l1;
            sub2[i] = l2;
            d[i] = di;
        }
        let log_det = d.iter().map(|v| v.ln()).sum();
        let inv_d = d.iter().map(|v| 1.0 / v).collect();
        Ok(BandFactor {
            sub1,
            sub2,
            inv_d,
            log_det,
        })
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let (mut y1, mut y2) = (0.0, 0.0);
        let mut quad = 0.0;
        for i in 0..x.len() {
            let y = x[i] - self.sub1[i] * y1 - self.sub2[i] * y2;
            quad += y * y * self.inv_d[i];
            y2 = y1;
            y1 = y;
        }
        -0.5 * (x.len() as f64 * LN_2PI + self.log_det + quad)
    }
}

/// Exact Gaussian log-density of `series` under the MA model.
pub fn log_likelihood(series: &TimeSeries, params: &MaParams, config: &ToyConfig) -> Result<f64> {
    let var = config.noise_sd * config.noise_sd;
    Ok(BandFactor::new(params, series.values.len(), var)?.log_density(&series.values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub p_ma1: f64,
    pub p_ma2: f64,
    pub log_marginal_1: f64,
    pub log_marginal_2: f64,
    /// Largest posterior change when the quadrature resolution is doubled,
    /// if that check was run.
    pub refinement_delta: Option<f64>,
    pub warning: Option<String>,
}

impl ExactPosterior {
    fn from_log_marginals(l1: f64, l2: f64) -> Self {
        // uniform model prior
        let p_ma2 = 1.0 / (1.0 + (l1 - l2).exp());
        ExactPosterior {
            p_ma1: 1.0 - p_ma2,
            p_ma2,
            log_marginal_1: l1,
            log_marginal_2: l2,
            refinement_delta: None,
            warning: None,
        }
    }

    /// MAP model, ties to model 1.
    pub fn map_model(&self) -> ModelIndex {
        if self.p_ma2 > self.p_ma1 {
            2
        } else {
            1
        }
    }

    pub fn prob(&self, model: ModelIndex) -> f64 {
        if model == 2 {
            self.p_ma2
        } else {
            self.p_ma1
        }
    }
}

/// Refinement disagreement above which the result carries a warning.
pub const REFINEMENT_TOLERANCE: f64 = 1e-4;

/// Quadrature resolution for the marginal likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureRule {
    pub ma1_nodes: usize,
    pub ma2_nodes: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule {
            ma1_nodes: 256,
            ma2_nodes: 128,
        }
    }
}

impl QuadratureRule {
    pub fn doubled(&self) -> Self {
        QuadratureRule {
            ma1_nodes: 2 * self.ma1_nodes,
            ma2_nodes: 2 * self.ma2_nodes,
        }
    }
}

/// Marginal likelihoods of both models by deterministic quadrature, with
/// the covariance factors of every node precomputed so each series costs
/// only forward substitutions.
pub struct ExactPosteriorSolver {
    config: ToyConfig,
    ma1: Vec<(BandFactor, f64)>,
    ma2: Vec<(BandFactor, f64)>,
}

impl ExactPosteriorSolver {
    pub fn new(config: &ToyConfig, rule: QuadratureRule) -> Result<Self> {
        config.validate()?;
        let var = config.noise_sd * config.noise_sd;
        let n = config.series_length;
        // prior densities 1/2 and 1/area fold into the log weights
        let ma1 = GaussLegendre::new(rule.ma1_nodes)
            .on_interval(-1.0, 1.0)
            .into_par_iter()
            .map(|(t, w)| Ok((BandFactor::new(&MaParams::ma1(t), n, var)?, (0.5 * w).ln())))
            .collect::<Result<Vec<_>>>()?;
        let [a, b, c] = MA2_TRIANGLE;
        let ma2 = triangle_rule(rule.ma2_nodes, a, b, c)
            .into_par_iter()
            .map(|(p, w)| {
                Ok((
                    BandFactor::new(&MaParams::ma2(p[0], p[1]), n, var)?,
                    (w / MA2_TRIANGLE_AREA).ln(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExactPosteriorSolver { config: *config, ma1, ma2 })
    }

    /// Solver for the default configuration and rule, built once per process.
    pub fn shared_default() -> &'static ExactPosteriorSolver {
        static SOLVER: OnceLock<ExactPosteriorSolver> = OnceLock::new();
        SOLVER.get_or_init(|| {
            ExactPosteriorSolver::new(&ToyConfig::default(), QuadratureRule::default())
                .expect("default MA quadrature is well posed")
        })
    }

    pub fn config(&self) -> &ToyConfig {
        &self.config
    }

    pub fn posterior(&self, series: &TimeSeries) -> Result<ExactPosterior> {
        if series.values.len() != self.config.series_length {
            return Err(Error::arg(format!(
                "series of length {}, solver built for {}",
                series.values.len(),
                self.config.series_length
            )));
        }
        if series.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("series has non-finite values"));
        }
        let l1 = log_sum(&self.ma1, &series.values);
        let l2 = log_sum(&self.ma2, &series.values);
        Ok(ExactPosterior::from_log_marginals(l1, l2))
    }
}

fn log_sum(grid: &[(BandFactor, f64)], x: &[f64]) -> f64 {
    let terms: Vec<f64> = grid.iter().map(|(f, lw)| f.log_density(x) + lw).collect();
    log_sum_exp(&terms)
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log marginal likelihoods computed node by node without caching factors.
fn log_marginals_direct(
    series: &TimeSeries,
    config: &ToyConfig,
    rule: QuadratureRule,
) -> Result<(f64, f64)> {
    let ma1: Vec<f64> = GaussLegendre::new(rule.ma1_nodes)
        .on_interval(-1.0, 1.0)
        .par_iter()
        .map(|&(t, w)| Ok(log_likelihood(series, &MaParams::ma1(t), config)? + (0.5 * w).ln()))
        .collect::<Result<_>>()?;
    let [a, b, c] = MA2_TRIANGLE;
    let ma2: Vec<f64> = triangle_rule(rule.ma2_nodes, a, b, c)
        .par_iter()
        .map(|&(p, w)| {
            Ok(log_likelihood(series, &MaParams::ma2(p[0], p[1]), config)?
                + (w / MA2_TRIANGLE_AREA).ln())
        })
        .collect::<Result<_>>()?;
    Ok((log_sum_exp(&ma1), log_sum_exp(&ma2)))
}

/// Posterior model probabilities under the uniform model prior, with a
/// refinement check at doubled resolution.
pub fn exact_posterior(series: &TimeSeries, config: &ToyConfig) -> Result<ExactPosterior> {
    exact_posterior_with(series, config, QuadratureRule::default(), true)
}

pub fn exact_posterior_with(
    series: &TimeSeries,
    config: &ToyConfig,
    rule: QuadratureRule,
    check_refinement: bool,
) -> Result<ExactPosterior> {
    config.validate()?;
    let (l1, l2) = log_marginals_direct(series, config, rule)?;
    let mut post = ExactPosterior::from_log_marginals(l1, l2);
    if check_refinement {
        let (r1, r2) = log_marginals_direct(series, config, rule.doubled())?;
        let fine = ExactPosterior::from_log_marginals(r1, r2);
        let delta = (fine.p_ma2 - post.p_ma2).abs();
        post.refinement_delta = Some(delta);
        if delta > REFINEMENT_TOLERANCE {
            post.warning = Some(format!(
                "quadrature refinement changed the posterior by {delta:.2e}"
            ));
        }
    }
    Ok(post)
}

/// Draws `(model, params, series)` from the hierarchical prior for record `index`.
pub fn draw_record(
    config: &ToyConfig,
    seed: u64,
    index: u64,
) -> Result<(ModelIndex, MaParams, TimeSeries)> {
    let mut r = rng::stream(seed, "record", index);
    let model = if r.random_bool(0.5) { 2 } else { 1 };
    let params = sample_prior_with(model, &mut r)?;
    let series = simulate_with(&params, config, &mut r);
    Ok((model, params, series))
}

pub fn summary_names(n_lags: usize) -> Vec<String> {
    (1..=n_lags).map(|k| format!("ac{k}")).collect()
}

pub fn config_summary_names(config: &ToyConfig) -> Vec<String> {
    let p = config.summary.prefix();
    (1..=config.n_lags).map(|k| format!("{p}{k}")).collect()
}

fn param_names() -> Vec<String> {
    vec!["theta1".into(), "theta2".into()]
}

/// Reference table of `n_total` i.i.d. records with uniform model prior.
/// Record `i` depends only on `(seed, i)`.
pub fn generate_table(n_total: usize, config: &ToyConfig, seed: u64) -> Result<ReferenceTable> {
    if n_total == 0 {
        return Err(Error::arg("reference table size must be positive"));
    }
    config.validate()?;
    let records = (0..n_total as u64)
        .into_par_iter()
        .map(|i| {
            let (model, p, series) = draw_record(config, seed, i)?;
            let s = summarize_with(&series, config)?;
            Ok(SimulationRecord::new(model, vec![p.theta1, p.theta2], s))
        })
        .collect::<Result<Vec<_>>>()?;
    ReferenceTable::new(param_names(), config_summary_names(config), 2, records)
}

/// Reference table with exactly `n_per_model` records of each model
/// (model 1 first).
pub fn generate_table_per_model(
    n_per_model: usize,
    config: &ToyConfig,
    seed: u64,
) -> Result<ReferenceTable> {
    if n_per_model == 0 {
        return Err(Error::arg("reference table size must be positive"));
    }
    config.validate()?;
    let records = (0..2 * n_per_model as u64)
        .into_par_iter()
        .map(|i| {
            let model = if i < n_per_model as u64 { 1 } else { 2 };
            let mut r = rng::stream(seed, "record", i);
            let p = sample_prior_with(model, &mut r)?;
            let series = simulate_with(&p, config, &mut r);
            let s = summarize_with(&series, config)?;
            Ok(SimulationRecord::new(model, vec![p.theta1, p.theta2], s))
        })
        .collect::<Result<Vec<_>>>()?;
    ReferenceTable::new(param_names(), config_summary_names(config), 2, records)
}

/// Nadaraya–Watson estimate of P(model = 2 | summaries) with a Gaussian
/// product kernel and per-dimension Silverman bandwidths.
#[derive(Debug, Clone)]
pub struct KernelPosterior {
    points: Vec<f64>,
    is_ma2: Vec<bool>,
    dim: usize,
    inv_bandwidth: Vec<f64>,
}

impl KernelPosterior {
    pub fn new(pool: &ReferenceTable) -> Result<Self> {
        let n = pool.len();
        let dim = pool.n_summaries();
        if n < 2 || dim == 0 {
            return Err(Error::arg("kernel pool needs at least two records and one summary"));
        }
        let factor = (4.0 / ((dim as f64 + 2.0) * n as f64)).powf(1.0 / (dim as f64 + 4.0));
        let mut inv_bandwidth = Vec::with_capacity(dim);
        for j in 0..dim {
            let mean = pool.records().iter().map(|r| r.summaries[j]).sum::<f64>() / n as f64;
            let var = pool
                .records()
                .iter()
                .map(|r| (r.summaries[j] - mean).powi(2))
                .sum::<f64>()
                / (n as f64 - 1.0);
            let h = var.sqrt() * factor;
            if !(h > 0.0) {
                return Err(Error::Degenerate(format!(
                    "summary {} is constant over the pool",
                    pool.summary_names()[j]
                )));
            }
            inv_bandwidth.push(1.0 / h);
        }
        Ok(KernelPosterior {
            points: pool
                .records()
                .iter()
                .flat_map(|r| r.summaries.iter().copied())
                .collect(),
            is_ma2: pool.records().iter().map(|r| r.model == 2).collect(),
            dim,
            inv_bandwidth,
        })
    }

    pub fn bandwidths(&self) -> Vec<f64> {
        self.inv_bandwidth.iter().map(|v| 1.0 / v).collect()
    }

    pub fn estimate(&self, summaries: &[f64]) -> Result<f64> {
        if summaries.len() != self.dim {
            return Err(Error::arg(format!(
                "{} summaries given, pool has {}",
                summaries.len(),
                self.dim
            )));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (p, &lab) in self.points.chunks_exact(self.dim).zip(&self.is_ma2) {
            let mut q = 0.0;
            for j in 0..self.dim {
                let z = (summaries[j] - p[j]) * self.inv_bandwidth[j];
                q += z * z;
            }
            let w = (-0.5 * q).exp();
            den += w;
            if lab {
                num += w;
            }
        }
        if !(den > 0.0) {
            return Err(Error::Degenerate(
                "every kernel weight underflowed; observed summaries are far from the pool".into(),
            ));
        }
        Ok((num / den).clamp(0.0, 1.0))
    }
}

/// π(model = 2 | first `n_lags` autocorrelations) from a simulated pool.
pub fn summary_posterior(
    series: &TimeSeries,
    n_lags: usize,
    pool: &ReferenceTable,
) -> Result<f64> {
    if pool.n_summaries() != n_lags {
        return Err(Error::arg(format!(
            "pool has {} summaries, expected {n_lags}",
            pool.n_summaries()
        )));
    }
    KernelPosterior::new(pool)?.estimate(&summarize(series, n_lags)?)
}

/// One point of the exact versus summary-based posterior comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyPoint {
    pub model: ModelIndex,
    pub exact_ma2: f64,
    pub summary_ma2: f64,
}

/// Posterior probability of MA(2) computed exactly and from the first two
/// autocorrelations (kernel smoothing over a `pool_size` pool), for
/// `n_series` fresh series drawn from the prior predictive.
pub fn discrepancy_experiment(
    n_series: usize,
    pool_size: usize,
    config: &ToyConfig,
    seed: u64,
) -> Result<Vec<DiscrepancyPoint>> {
    if n_series == 0 {
        return Err(Error::arg("discrepancy experiment needs at least one series"));
    }
    let pool_cfg = ToyConfig {
        n_lags: 2,
        summary: SummaryKind::Autocorrelation,
        ..*config
    };
    let pool = generate_table(pool_size, &pool_cfg, rng::derive_seed(seed, "pool", 0))?;
    let kernel = KernelPosterior::new(&pool)?;
    let owned;
    let solver = if config.same_likelihood(&ToyConfig::default()) {
        ExactPosteriorSolver::shared_default()
    } else {
        owned = ExactPosteriorSolver::new(config, QuadratureRule::default())?;
        &owned
    };
    let series_seed = rng::derive_seed(seed, "series", 0);
    (0..n_series as u64)
        .into_par_iter()
        .map(|i| {
            let (model, _, series) = draw_record(config, series_seed, i)?;
            Ok(DiscrepancyPoint {
                model,
                exact_ma2: solver.posterior(&series)?.p_ma2,
                summary_ma2: kernel.estimate(&summarize(&series, 2)?)?,
            })
        })
        .collect()
}

/// Fraction of points whose two posteriors differ by more than `gap`.
pub fn discrepancy_fraction(points: &[DiscrepancyPoint], gap: f64) -> f64 {
    let far = points
        .iter()
        .filter(|p| (p.exact_ma2 - p.summary_ma2).abs() > gap)
        .count();
    far as f64 / points.len().max(1) as f64
}
