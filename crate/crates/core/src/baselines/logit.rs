//! Multinomial logistic regression fitted by damped Newton iterations.
//!
//! The first class is the reference; coefficients of the others are stored
//! row by row as `[intercept, slope_1, .., slope_d]`.

use nalgebra::{DMatrix, DVector};

use crate::classifier::{argmax, check_dim, present_models, ModelClassifier};
use crate::data::{ModelIndex, ReferenceTable};
use crate::error::{Error, Result};

/// Ridge used on the retry after an unpenalized fit fails to converge.
pub const FALLBACK_RIDGE: f64 = 1e-4;

const SATURATION: f64 = 10.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitOptions {
    /// penalty `ridge/2 * |slopes|²` added to the mean negative log-likelihood
    pub ridge: f64,
    pub max_iter: usize,
    /// convergence threshold on the largest gradient component
    pub tolerance: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        LogitOptions {
            ridge: 0.0,
            max_iter: 200,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultinomialLogit {
    pub classes: Vec<ModelIndex>,
    /// (M−1) × (d+1)
    pub coefficients: DMatrix<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// true when the fit needed the fallback ridge
    pub regularized: bool,
}

/// Raw fit on 0-based labels `y < n_classes`; `x` is row-major `n × d`.
#[derive(Debug, Clone)]
pub struct LogitFit {
    pub coefficients: DMatrix<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [usize],
    w: &'a [f64],
    d: usize,
    k: usize,
    ridge: f64,
    wsum: f64,
}

impl Problem<'_> {
    fn n_par(&self) -> usize {
        (self.k - 1) * (self.d + 1)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    /// Class probabilities of row `i`, reference class first.
    fn probs(&self, beta: &[f64], i: usize, out: &mut [f64]) -> f64 {
        let x = self.row(i);
        let p1 = self.d + 1;
        out[0] = 0.0;
        for c in 1..self.k {
            let b = &beta[(c - 1) * p1..c * p1];
            out[c] = b[0] + b[1..].iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        }
        let mx = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for o in out.iter_mut() {
            *o = (*o - mx).exp();
            z += *o;
        }
        for o in out.iter_mut() {
            *o /= z;
        }
        mx + z.ln()
    }

    fn objective(&self, beta: &[f64]) -> f64 {
        let mut p = vec![0.0; self.k];
        let mut nll = 0.0;
        for i in 0..self.y.len() {
            if self.w[i] == 0.0 {
                continue;
            }
            let lse = self.probs(beta, i, &mut p);
            let eta = if self.y[i] == 0 {
                0.0
            } else {
                let c = self.y[i];
                let p1 = self.d + 1;
                let b = &beta[(c - 1) * p1..c * p1];
                b[0] + b[1..].iter().zip(self.row(i)).map(|(a, v)| a * v).sum::<f64>()
            };
            nll += self.w[i] * (lse - eta);
        }
        nll / self.wsum + 0.5 * self.ridge * self.penalty(beta)
    }

    /// Whether some weighted row has a fitted probability numerically 0 or 1.
    fn saturated(&self, beta: &[f64]) -> bool {
        let mut p = vec![0.0; self.k];
        (0..self.y.len()).any(|i| {
            self.w[i] > 0.0 && {
                self.probs(beta, i, &mut p);
                p.iter().any(|&v| v < SATURATION || v > 1.0 - SATURATION)
            }
        })
    }

    fn penalty(&self, beta: &[f64]) -> f64 {
        beta.chunks(self.d + 1)
            .map(|b| b[1..].iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    fn gradient_hessian(&self, beta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let np = self.n_par();
        let p1 = self.d + 1;
        let mut g = DVector::zeros(np);
        let mut h = DMatrix::zeros(np, np);
        let mut p = vec![0.0; self.k];
        let mut z = vec![0.0; p1];
        for i in 0..self.y.len() {
            let wi = self.w[i];
            if wi == 0.0 {
                continue;
            }
            self.probs(beta, i, &mut p);
            z[0] = 1.0;
            z[1..].copy_from_slice(self.row(i));
            for a in 1..self.k {
                let r = p[a] - f64::from(self.y[i] == a);
                for (s, zs) in z.iter().enumerate() {
                    g[(a - 1) * p1 + s] += wi * r * zs;
                }
                for b in 1..self.k {
                    let v = wi * p[a] * (f64::from(a == b) - p[b]);
                    if v == 0.0 {
                        continue;
                    }
                    for s in 0..p1 {
                        for t in 0..p1 {
                            h[((a - 1) * p1 + s, (b - 1) * p1 + t)] += v * z[s] * z[t];
                        }
                    }
                }
            }
        }
        g /= self.wsum;
        h /= self.wsum;
        for c in 0..self.k - 1 {
            for s in 1..p1 {
                let j = c * p1 + s;
                g[j] += self.ridge * beta[j];
                h[(j, j)] += self.ridge;
            }
        }
        (g, h)
    }
}

/// Weighted multinomial logit on 0-based labels.
pub fn fit_weighted(
    x: &[f64],
    d: usize,
    y: &[usize],
    weights: &[f64],
    n_classes: usize,
    opts: &LogitOptions,
) -> Result<LogitFit> {
    let n = y.len();
    if x.len() != n * d || weights.len() != n {
        return Err(Error::arg("logit design, labels and weights disagree in length"));
    }
    if n_classes < 2 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::arg("logit needs at least two classes and labels below n_classes"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::arg("logit weights must be finite and non-negative"));
    }
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::arg("logit weights sum to zero"));
    }
    let prob = Problem {
        x,
        y,
        w: weights,
        d,
        k: n_classes,
        ridge: opts.ridge,
        wsum,
    };
    let np = prob.n_par();
    let mut beta = vec![0.0; np];
    let mut f = prob.objective(&beta);
    let mut gnorm = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let (g, mut h) = prob.gradient_hessian(&beta);
        gnorm = g.amax();
        if !gnorm.is_finite() {
            break;
        }
        if gnorm <= opts.tolerance {
            if opts.ridge == 0.0 && prob.saturated(&beta) {
                return Err(Error::Numeric(format!(
                    "fitted probabilities numerically 0 or 1 after {iter} iterations (separated classes)"
                )));
            }
            return Ok(LogitFit {
                coefficients: DMatrix::from_row_slice(n_classes - 1, d + 1, &beta),
                iterations: iter,
                gradient_norm: gnorm,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        // the Hessian is only semi-definite under separation or collinearity
        let scale = h.diagonal().amax().max(1.0);
        let mut jitter = 0.0;
        let step = loop {
            if let Some(ch) = h.clone().cholesky() {
                break ch.solve(&g);
            }
            jitter = if jitter == 0.0 { 1e-12 * scale } else { jitter * 10.0 };
            if jitter > scale {
                return Err(Error::Numeric("logit Hessian is not positive definite".into()));
            }
            for j in 0..np {
                h[(j, j)] += jitter;
            }
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b - t * s).collect();
            let fc = prob.objective(&cand);
            if fc.is_finite() && fc <= f {
                beta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::Numeric(format!(
        "logit did not converge within {} iterations (max gradient {gnorm:.3e}, objective {f:.6})",
        opts.max_iter
    )))
}

/// Maximum-likelihood logit on a reference table; under separation the fit
/// is retried with a small ridge and flagged as regularized.
pub fn logit_fit(table: &ReferenceTable) -> Result<MultinomialLogit> {
    logit_fit_with(table, &LogitOptions::default())
}

pub fn logit_fit_with(table: &ReferenceTable, opts: &LogitOptions) -> Result<MultinomialLogit> {
    let classes = present_models(table);
    if classes.len() < 2 {
        return Err(Error::arg("logit needs at least two models in the table"));
    }
    let d = table.n_summaries();
    let x: Vec<f64> = table.records().iter().flat_map(|r| r.summaries.iter().copied()).collect();
    let y: Vec<usize> = table
        .records()
        .iter()
        .map(|r| classes.iter().position(|&c| c == r.model).expect("present"))
        .collect();
    let w = vec![1.0; y.len()];
    let (fit, regularized) = match fit_weighted(&x, d, &y, &w, classes.len(), opts) {
        Ok(f) => (f, false),
        Err(Error::Numeric(msg)) if opts.ridge == 0.0 => {
            log::warn!("{msg}; refitting with ridge {FALLBACK_RIDGE}");
            let o = LogitOptions {
                ridge: FALLBACK_RIDGE,
                ..*opts
            };
            (fit_weighted(&x, d, &y, &w, classes.len(), &o)?, true)
        }
        Err(e) => return Err(e),
    };
    Ok(MultinomialLogit {
        classes,
        coefficients: fit.coefficients,
        iterations: fit.iterations,
        gradient_norm: fit.gradient_norm,
        regularized,
    })
}

impl MultinomialLogit {
    pub fn n_summaries(&self) -> usize {
        self.coefficients.ncols() - 1
    }

    /// Linear predictors per class, reference class at 0.
    pub fn linear_predictors(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_summaries(), x)?;
        let mut eta = vec![0.0];
        for row in self.coefficients.row_iter() {
            eta.push(row[0] + x.iter().enumerate().map(|(j, v)| row[j + 1] * v).sum::<f64>());
        }
        Ok(eta)
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let eta = self.linear_predictors(x)?;
        let mx = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = eta.iter().map(|v| (v - mx).exp()).collect();
        let z: f64 = e.iter().sum();
        Ok(e.into_iter().map(|v| v / z).collect())
    }
}

pub fn logit_classify(m: &MultinomialLogit, summaries: &[f64]) -> Result<ModelIndex> {
    Ok(m.classes[argmax(&m.linear_predictors(summaries)?)])
}

impl ModelClassifier for MultinomialLogit {
    fn classify(&self, summaries: &[f64]) -> Result<ModelIndex> {
        logit_classify(self, summaries)
    }
}
