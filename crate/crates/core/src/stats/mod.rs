//! Hypothesis tests and regressions used to analyse audit results.

mod anova;
mod binomial;
mod ols;
mod sdt;
mod threshold;
mod tukey;

pub use anova::{two_way_anova, AnovaRow, AnovaTable};
pub use binomial::{clopper_pearson, exact_binomial_test, BinomialTestResult};
pub use ols::{ols_fit, OlsFit};
pub use sdt::{response_bias_c, ResponseBias};
pub use threshold::{pick_threshold, ThresholdPick};
pub use tukey::{studentized_range_cdf, tukey_hsd, TukeyPair, TukeyResult, STUDENTIZED_RANGE_TOL};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unbalanced design: every cell needs the same number of replicates")]
    UnbalancedDesign,
    #[error("design matrix is rank deficient")]
    SingularDesign,
}
