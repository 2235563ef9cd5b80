use crate::classifier::{argmax, check_dim, present_models, ModelClassifier};
use crate::data::{ModelIndex, ReferenceTable};
use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Independent Gaussian marginals per class, fitted by maximum likelihood.
#[derive(Debug, Clone)]
pub struct NaiveBayesModel {
    pub classes: Vec<ModelIndex>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
}

pub fn naive_bayes_fit(table: &ReferenceTable) -> Result<NaiveBayesModel> {
    let d = table.n_summaries();
    let classes = present_models(table);
    if classes.is_empty() {
        return Err(Error::arg("naive Bayes needs a non-empty table"));
    }
    let counts = table.model_counts();
    if let Some(m) = classes.iter().find(|&&m| counts[m - 1] < 2) {
        return Err(Error::arg(format!("model {m} has fewer than two records")));
    }
    let mut means = vec![vec![0.0; d]; classes.len()];
    let mut variances = vec![vec![0.0; d]; classes.len()];
    for (k, &m) in classes.iter().enumerate() {
        let rows: Vec<&[f64]> = table
            .records()
            .iter()
            .filter(|r| r.model == m)
            .map(|r| r.summaries.as_slice())
            .collect();
        let n = rows.len() as f64;
        for j in 0..d {
            let mu = rows.iter().map(|x| x[j]).sum::<f64>() / n;
            let var = rows.iter().map(|x| (x[j] - mu).powi(2)).sum::<f64>() / n;
            if !var.is_finite() {
                return Err(Error::Numeric(format!("variance of summary {j} is not finite")));
            }
            means[k][j] = mu;
            variances[k][j] = var.max(VARIANCE_FLOOR);
        }
    }
    let n = table.len() as f64;
    Ok(NaiveBayesModel {
        priors: classes.iter().map(|m| counts[m - 1] as f64 / n).collect(),
        classes,
        means,
        variances,
    })
}

impl NaiveBayesModel {
    pub fn log_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.means[0].len(), x)?;
        Ok(self
            .means
            .iter()
            .zip(&self.variances)
            .zip(&self.priors)
            .map(|((mu, var), p)| {
                p.ln()
                    + x.iter()
                        .zip(mu)
                        .zip(var)
                        .map(|((xi, m), v)| -0.5 * ((xi - m).powi(2) / v + v.ln()))
                        .sum::<f64>()
            })
            .collect())
    }
}

pub fn naive_bayes_classify(m: &NaiveBayesModel, summaries: &[f64]) -> Result<ModelIndex> {
    Ok(m.classes[argmax(&m.log_scores(summaries)?)])
}

impl ModelClassifier for NaiveBayesModel {
    fn classify(&self, summaries: &[f64]) -> Result<ModelIndex> {
        naive_bayes_classify(self, summaries)
    }
}
