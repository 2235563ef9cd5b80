use rayon::prelude::*;

use crate::data::{ModelIndex, ReferenceTable};
use crate::error::{Error, Result};

/// Anything that maps a summary vector to a model index.
pub trait ModelClassifier: Sync {
    fn classify(&self, summaries: &[f64]) -> Result<ModelIndex>;

    /// Classifies every record of `table`, in parallel.
    fn classify_table(&self, table: &ReferenceTable) -> Result<Vec<ModelIndex>> {
        table
            .records()
            .par_iter()
            .map(|r| self.classify(&r.summaries))
            .collect()
    }
}

impl<F> ModelClassifier for F
where
    F: Fn(&[f64]) -> Result<ModelIndex> + Sync,
{
    fn classify(&self, summaries: &[f64]) -> Result<ModelIndex> {
        self(summaries)
    }
}

/// Index of the largest score; ties go to the first.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Sorted list of model indices present in the table.
pub(crate) fn present_models(table: &ReferenceTable) -> Vec<ModelIndex> {
    table
        .model_counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(m, _)| m + 1)
        .collect()
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::arg(format!(
            "{} summaries given, classifier expects {expected}",
            x.len()
        )));
    }
    Ok(())
}
