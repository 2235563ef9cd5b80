//! Linear discriminant analysis with a pooled within-class covariance.

use nalgebra::{DMatrix, DVector};

use crate::classifier::{argmax, check_dim, present_models, ModelClassifier};
use crate::data::{ModelIndex, ReferenceTable};
use crate::error::{Error, Result};

/// Diagonal loading added to the pooled covariance, relative to trace/d.
pub const COVARIANCE_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LdaModel {
    pub classes: Vec<ModelIndex>,
    pub means: Vec<DVector<f64>>,
    pub pooled_covariance: DMatrix<f64>,
    pub priors: Vec<f64>,
    /// columns are discriminant axes, ordered by decreasing eigenvalue
    pub axes: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    overall_mean: DVector<f64>,
    coef: Vec<DVector<f64>>,
    intercept: Vec<f64>,
}

pub fn lda_fit(table: &ReferenceTable) -> Result<LdaModel> {
    let d = table.n_summaries();
    let classes = present_models(table);
    let n = table.len();
    if classes.len() < 2 {
        return Err(Error::arg("LDA needs at least two models in the table"));
    }
    if n <= classes.len() || d == 0 {
        return Err(Error::arg("LDA needs more records than models and at least one summary"));
    }
    let counts = table.model_counts();
    let slot = |m: ModelIndex| classes.iter().position(|&c| c == m).expect("present");
    let mut means = vec![DVector::zeros(d); classes.len()];
    for r in table.records() {
        means[slot(r.model)] += DVector::from_column_slice(&r.summaries);
    }
    for (k, m) in classes.iter().enumerate() {
        means[k] /= counts[m - 1] as f64;
    }
    let mut within = DMatrix::zeros(d, d);
    for r in table.records() {
        let c = DVector::from_column_slice(&r.summaries) - &means[slot(r.model)];
        within.ger(1.0, &c, &c, 1.0);
    }
    within /= (n - classes.len()) as f64;
    let ridge = COVARIANCE_RIDGE * within.trace() / d as f64;
    for i in 0..d {
        within[(i, i)] += ridge;
    }
    let chol = within
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("pooled covariance is singular".into()))?;

    let priors: Vec<f64> = classes.iter().map(|m| counts[m - 1] as f64 / n as f64).collect();
    let coef: Vec<DVector<f64>> = means.iter().map(|mu| chol.solve(mu)).collect();
    let intercept: Vec<f64> = means
        .iter()
        .zip(&coef)
        .zip(&priors)
        .map(|((mu, w), p)| -0.5 * mu.dot(w) + p.ln())
        .collect();

    let mut overall = DVector::zeros(d);
    for (mu, p) in means.iter().zip(&priors) {
        overall += mu * *p;
    }
    let mut between = DMatrix::zeros(d, d);
    for (mu, p) in means.iter().zip(&priors) {
        let c = mu - &overall;
        between.ger(*p, &c, &c, 1.0);
    }
    // whiten: A = L⁻¹ B L⁻ᵀ, axes v = L⁻ᵀ u
    let l = chol.l();
    let linv_b = l
        .solve_lower_triangular(&between)
        .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
    let a = l
        .solve_lower_triangular(&linv_b.transpose())
        .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
    let a = (&a + a.transpose()) * 0.5;
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let n_axes = (classes.len() - 1).min(d);
    let lt = l.transpose();
    let mut axes = DMatrix::zeros(d, n_axes);
    let mut eigenvalues = Vec::with_capacity(n_axes);
    for (k, &i) in order.iter().take(n_axes).enumerate() {
        let u = eig.eigenvectors.column(i).into_owned();
        let mut v = lt
            .solve_upper_triangular(&u)
            .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
        // sign: largest-magnitude component positive
        let big = v.iamax();
        if v[big] < 0.0 {
            v.neg_mut();
        }
        axes.set_column(k, &v);
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(LdaModel {
        classes,
        means,
        pooled_covariance: within,
        priors,
        axes,
        eigenvalues,
        overall_mean: overall,
        coef,
        intercept,
    })
}

impl LdaModel {
    pub fn n_summaries(&self) -> usize {
        self.overall_mean.len()
    }

    pub fn n_axes(&self) -> usize {
        self.axes.ncols()
    }

    /// Linear discriminant scores per present class.
    pub fn discriminants(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_summaries(), x)?;
        let x = DVector::from_column_slice(x);
        Ok(self
            .coef
            .iter()
            .zip(&self.intercept)
            .map(|(w, b)| w.dot(&x) + b)
            .collect())
    }
}

pub fn lda_classify(m: &LdaModel, summaries: &[f64]) -> Result<ModelIndex> {
    Ok(m.classes[argmax(&m.discriminants(summaries)?)])
}

/// Coordinates on the discriminant axes, relative to the prior-weighted mean.
pub fn lda_project(m: &LdaModel, summaries: &[f64]) -> Result<Vec<f64>> {
    check_dim(m.n_summaries(), summaries)?;
    let c = DVector::from_column_slice(summaries) - &m.overall_mean;
    Ok((m.axes.transpose() * c).iter().copied().collect())
}

/// Table with the LDA coordinates appended as summaries `LD1..`.
pub fn augment_with_lda(table: &ReferenceTable, model: &LdaModel) -> Result<ReferenceTable> {
    if table.n_summaries() != model.n_summaries() {
        return Err(Error::arg(format!(
            "table has {} summaries, LDA model {}",
            table.n_summaries(),
            model.n_summaries()
        )));
    }
    let names = (1..=model.n_axes()).map(|k| format!("LD{k}")).collect();
    let cols = table
        .records()
        .iter()
        .map(|r| lda_project(model, &r.summaries))
        .collect::<Result<Vec<_>>>()?;
    table.with_extra_summaries(names, cols)
}

impl ModelClassifier for LdaModel {
    fn classify(&self, summaries: &[f64]) -> Result<ModelIndex> {
        lda_classify(self, summaries)
    }
}
