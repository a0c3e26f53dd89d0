use crate::error::{ClsmError, Result};

/// Fixed priors and dimensions of the model.
///
/// `alpha` is the Dirichlet prior on memberships (length `K`), `eta = (η₁, η₀)`
/// the Beta prior on community strengths, `kappa` the Dirichlet prior on
/// topic-behavior distributions (length `V`), and `epsilon` the link
/// probability between nodes whose indicators disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub num_topics: usize,
    pub alpha: Vec<f64>,
    pub eta: (f64, f64),
    pub kappa: Vec<f64>,
    pub epsilon: f64,
}

impl Hyperparams {
    pub fn new(alpha: Vec<f64>, eta: (f64, f64), kappa: Vec<f64>, epsilon: f64) -> Result<Self> {
        let h = Hyperparams {
            num_topics: alpha.len(),
            alpha,
            eta,
            kappa,
            epsilon,
        };
        h.validate()?;
        Ok(h)
    }

    /// Symmetric priors: `α_k = alpha_precision / K`, `κ_v = kappa_value`.
    pub fn symmetric(
        num_topics: usize,
        vocab_size: usize,
        alpha_precision: f64,
        eta: (f64, f64),
        kappa_value: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if num_topics == 0 {
            return Err(ClsmError::Config("number of topics must be at least 1".into()));
        }
        Self::new(
            vec![alpha_precision / num_topics as f64; num_topics],
            eta,
            vec![kappa_value; vocab_size],
            epsilon,
        )
    }

    pub fn vocab_size(&self) -> usize {
        self.kappa.len()
    }

    pub fn alpha_precision(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.num_topics == 0 || self.alpha.len() != self.num_topics {
            return Err(ClsmError::Config("alpha must have one entry per topic (K >= 1)".into()));
        }
        if !self.alpha.iter().all(|&a| positive(a)) {
            return Err(ClsmError::Config("alpha entries must be positive".into()));
        }
        if !positive(self.eta.0) || !positive(self.eta.1) {
            return Err(ClsmError::Config("eta entries must be positive".into()));
        }
        if self.kappa.is_empty() || !self.kappa.iter().all(|&k| positive(k)) {
            return Err(ClsmError::Config("kappa must be a non-empty vector of positive entries".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(ClsmError::Config(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}
