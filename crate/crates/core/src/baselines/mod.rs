//! Comparison classifiers and neighbour-count calibration.

pub mod calibration;
pub mod knn;
pub mod lda;
pub mod local_logit;
pub mod logit;
pub mod naive_bayes;

pub use calibration::{calibrate_k, CalibrationCurve, NeighborFamily};
pub use knn::{knn_classify, knn_fit, KnnClassifier};
pub use lda::{augment_with_lda, lda_classify, lda_fit, lda_project, LdaModel};
pub use local_logit::{local_logit_classify, local_logit_fit, LocalLogitClassifier};
pub use logit::{logit_classify, logit_fit, MultinomialLogit};
pub use naive_bayes::{naive_bayes_classify, naive_bayes_fit, NaiveBayesModel};
