//! Discrete hidden Markov models trained with scaled Baum-Welch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_alphabet, proportional_distribution, NextSymbolDistribution, PredictError, Predictor, SUM_TOLERANCE};
use crate::eventlog::{Alphabet, SequenceDatabase, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "epsilon", rename_all = "lowercase")]
pub enum Regularizer {
    None,
    /// Adds ε to every transition and emission count before normalizing.
    Additive(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmmConfig {
    pub n_states: usize,
    pub regularizer: Regularizer,
    pub max_iters: usize,
    /// Convergence threshold on the per-event log-likelihood gain.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for HmmConfig {
    fn default() -> Self {
        HmmConfig { n_states: 2, regularizer: Regularizer::None, max_iters: 100, tol: 1e-6, restarts: 3, seed: 0 }
    }
}

impl HmmConfig {
    /// `ceil(ratio · |Σ|)`, at least 1.
    pub fn states_for_ratio(ratio: f64, alphabet_len: usize) -> usize {
        ((ratio * alphabet_len as f64).ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    alphabet: Alphabet,
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emission: Vec<Vec<f64>>,
    fallback: NextSymbolDistribution,
    /// Training log-likelihood after each iteration of the kept restart.
    #[serde(default)]
    history: Vec<f64>,
}

fn is_stochastic(row: &[f64]) -> bool {
    row.iter().all(|p| (0.0..=1.0 + SUM_TOLERANCE).contains(p)) && (row.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE
}

fn normalize(row: &mut [f64]) -> bool {
    let total: f64 = row.iter().sum();
    if total > 0.0 && total.is_finite() {
        row.iter_mut().for_each(|x| *x /= total);
        true
    } else {
        false
    }
}

/// Symmetric Dirichlet(1) sample: normalized unit exponentials.
fn dirichlet_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    if !normalize(&mut row) {
        row = vec![1.0 / n as f64; n];
    }
    row
}

struct Accumulators {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emission: Vec<Vec<f64>>,
    log_likelihood: f64,
}

impl HmmModel {
    /// Builds a model from explicit parameters; the fallback defaults to uniform.
    pub fn from_parameters(
        alphabet: &Alphabet,
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        fallback: Option<NextSymbolDistribution>,
    ) -> Result<Self, PredictError> {
        check_alphabet(alphabet)?;
        let n = initial.len();
        let bad = |what: &str| PredictError::InvalidParameter(format!("HMM {what} is not a probability table"));
        if n == 0 || !is_stochastic(&initial) {
            return Err(bad("initial distribution"));
        }
        if transition.len() != n || transition.iter().any(|r| r.len() != n || !is_stochastic(r)) {
            return Err(bad("transition matrix"));
        }
        if emission.len() != n || emission.iter().any(|r| r.len() != alphabet.len() || !is_stochastic(r)) {
            return Err(bad("emission matrix"));
        }
        let fallback = fallback.unwrap_or_else(|| NextSymbolDistribution::uniform(alphabet));
        Ok(HmmModel { alphabet: alphabet.clone(), initial, transition, emission, fallback, history: Vec::new() })
    }

    pub fn fit(train: &SequenceDatabase, alphabet: &Alphabet, config: &HmmConfig) -> Result<Self, PredictError> {
        if config.n_states == 0 {
            return Err(PredictError::InvalidParameter("HMM needs at least one hidden state".into()));
        }
        if let Regularizer::Additive(eps) = config.regularizer {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(PredictError::InvalidParameter(format!("additive regularizer {eps}")));
            }
        }
        let fallback = proportional_distribution(train, alphabet)?;
        let data: Vec<(Vec<usize>, f64)> = train
            .iter()
            .filter(|(s, _)| !s.is_empty())
            .map(|(s, n)| (alphabet.encode(s).expect("checked by proportional_distribution"), n as f64))
            .collect();
        let events: f64 = data.iter().map(|(s, w)| s.len() as f64 * w).sum();

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut best: Option<HmmModel> = None;
        for _ in 0..config.restarts.max(1) {
            let n = config.n_states;
            let mut model = HmmModel {
                alphabet: alphabet.clone(),
                initial: dirichlet_row(&mut rng, n),
                transition: (0..n).map(|_| dirichlet_row(&mut rng, n)).collect(),
                emission: (0..n).map(|_| dirichlet_row(&mut rng, alphabet.len())).collect(),
                fallback: fallback.clone(),
                history: Vec::new(),
            };
            model.baum_welch(&data, events, config)?;
            let better = match &best {
                None => true,
                Some(b) => model.training_log_likelihood() > b.training_log_likelihood(),
            };
            if better {
                best = Some(model);
            }
        }
        Ok(best.expect("at least one restart"))
    }

    fn baum_welch(&mut self, data: &[(Vec<usize>, f64)], events: f64, config: &HmmConfig) -> Result<(), PredictError> {
        for iter in 0..=config.max_iters {
            let acc = self.expectation(data)?;
            let prev = self.history.last().copied();
            self.history.push(acc.log_likelihood);
            let converged = prev.is_some_and(|p| (acc.log_likelihood - p) / events.max(1.0) < config.tol);
            if iter == config.max_iters || converged {
                break;
            }
            self.maximization(acc, config.regularizer);
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    fn expectation(&self, data: &[(Vec<usize>, f64)]) -> Result<Accumulators, PredictError> {
        let n = self.n_states();
        let m = self.alphabet.len();
        let mut acc = Accumulators {
            initial: vec![0.0; n],
            transition: vec![vec![0.0; n]; n],
            emission: vec![vec![0.0; m]; n],
            log_likelihood: 0.0,
        };
        for (seq, w) in data {
            let (alpha, scale) = self
                .forward(seq)
                .ok_or_else(|| PredictError::InvalidParameter("training sequence has zero likelihood".into()))?;
            let len = seq.len();
            let mut beta = vec![vec![1.0; n]; len];
            for t in (0..len - 1).rev() {
                let x = seq[t + 1];
                for i in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += self.transition[i][j] * self.emission[j][x] * beta[t + 1][j];
                    }
                    beta[t][i] = s / scale[t + 1];
                }
            }
            for t in 0..len {
                for i in 0..n {
                    let g = alpha[t][i] * beta[t][i];
                    if t == 0 {
                        acc.initial[i] += w * g;
                    }
                    acc.emission[i][seq[t]] += w * g;
                }
                if t + 1 < len {
                    let x = seq[t + 1];
                    for i in 0..n {
                        for j in 0..n {
                            acc.transition[i][j] += w * alpha[t][i] * self.transition[i][j] * self.emission[j][x]
                                * beta[t + 1][j]
                                / scale[t + 1];
                        }
                    }
                }
            }
            acc.log_likelihood += w * scale.iter().map(|c| c.ln()).sum::<f64>();
        }
        Ok(acc)
    }

    fn maximization(&mut self, mut acc: Accumulators, regularizer: Regularizer) {
        let eps = match regularizer {
            Regularizer::None => 0.0,
            Regularizer::Additive(e) => e,
        };
        if normalize(&mut acc.initial) {
            self.initial = acc.initial;
        }
        for (row, new) in self.transition.iter_mut().zip(acc.transition) {
            let mut new: Vec<f64> = new.into_iter().map(|x| x + eps).collect();
            // rows of states that are never left keep their previous values
            if normalize(&mut new) {
                *row = new;
            }
        }
        for (row, new) in self.emission.iter_mut().zip(acc.emission) {
            let mut new: Vec<f64> = new.into_iter().map(|x| x + eps).collect();
            if normalize(&mut new) {
                *row = new;
            }
        }
    }

    /// Scaled forward pass: normalized α per position and the scale factors.
    fn forward(&self, seq: &[usize]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        let n = self.n_states();
        let mut alpha = Vec::with_capacity(seq.len());
        let mut scale = Vec::with_capacity(seq.len());
        let mut cur: Vec<f64> = (0..n).map(|i| self.initial[i] * self.emission[i][seq[0]]).collect();
        for (t, &x) in seq.iter().enumerate() {
            if t > 0 {
                let prev: &Vec<f64> = alpha.last().expect("t > 0");
                cur = (0..n)
                    .map(|j| (0..n).map(|i| prev[i] * self.transition[i][j]).sum::<f64>() * self.emission[j][x])
                    .collect();
            }
            let c: f64 = cur.iter().sum();
            if c.is_nan() || c <= 0.0 {
                return None;
            }
            cur.iter_mut().for_each(|a| *a /= c);
            scale.push(c);
            alpha.push(std::mem::take(&mut cur));
        }
        Some((alpha, scale))
    }

    /// Log-likelihood of `seq`; `None` for symbols outside the alphabet or zero probability.
    pub fn log_likelihood(&self, seq: &[Symbol]) -> Option<f64> {
        if seq.is_empty() {
            return Some(0.0);
        }
        let encoded = self.alphabet.encode(seq)?;
        let (_, scale) = self.forward(&encoded)?;
        Some(scale.iter().map(|c| c.ln()).sum())
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn emission(&self) -> &[Vec<f64>] {
        &self.emission
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn training_log_likelihood(&self) -> f64 {
        self.history.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Emission mixture for a hidden-state distribution.
    fn emit(&self, state: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.alphabet.len()];
        for (i, &p) in state.iter().enumerate() {
            for (o, e) in out.iter_mut().zip(&self.emission[i]) {
                *o += p * e;
            }
        }
        out
    }
}

impl Predictor for HmmModel {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Forward pass over the prefix, one transition step, then the emission mixture.
    /// The empty prefix predicts the first symbol, i.e. the emission mixture of the initial distribution.
    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        if prefix.is_empty() {
            return Ok(NextSymbolDistribution::from_weights(&self.alphabet, &self.emit(&self.initial))
                .unwrap_or_else(|| self.fallback.clone()));
        }
        let Some(encoded) = self.alphabet.encode(prefix) else {
            return Ok(self.fallback.clone());
        };
        let Some((alpha, _)) = self.forward(&encoded) else {
            return Ok(self.fallback.clone());
        };
        let last = alpha.last().expect("nonempty prefix");
        let n = self.n_states();
        let next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| last[i] * self.transition[i][j]).sum()).collect();
        Ok(NextSymbolDistribution::from_weights(&self.alphabet, &self.emit(&next)).unwrap_or_else(|| self.fallback.clone()))
    }
}
