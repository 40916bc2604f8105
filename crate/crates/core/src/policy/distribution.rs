use cmvrp_autodiff::{Array, Graph};
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::rng::StreamRng;

/// How the next action is picked from a step distribution.
#[derive(Debug)]
pub enum DecodeChoice<'r> {
    /// Most probable feasible node; ties go to the lowest index.
    Greedy,
    /// Draw from the categorical distribution.
    Sample(&'r mut StreamRng),
    /// Take a given node (trajectory replay); it must be feasible.
    Forced(usize),
}

/// Categorical distribution over all nodes for one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    pub log_probs: Vec<f64>,
    pub mask: Vec<bool>,
    pub chosen: usize,
    pub chosen_log_prob: f64,
}

impl StepDistribution {
    /// Picks an action from masked log-probabilities.
    pub fn choose(log_probs: Vec<f64>, mask: Vec<bool>, choice: DecodeChoice<'_>) -> Result<Self> {
        if log_probs.len() != mask.len() {
            return Err(CoreError::Contract(format!(
                "{} log-probabilities for a mask of {}",
                log_probs.len(),
                mask.len()
            )));
        }
        let feasible: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let Some(&last) = feasible.last() else {
            return Err(CoreError::Contract("no feasible action".into()));
        };
        let chosen = match choice {
            DecodeChoice::Greedy => {
                let mut best = feasible[0];
                for &i in &feasible[1..] {
                    if log_probs[i] > log_probs[best] {
                        best = i;
                    }
                }
                best
            }
            DecodeChoice::Sample(rng) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = last;
                for &i in &feasible {
                    acc += log_probs[i].exp();
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            }
            DecodeChoice::Forced(node) => {
                if !mask.get(node).copied().unwrap_or(false) {
                    return Err(CoreError::Contract(format!("forced action {node} is masked")));
                }
                node
            }
        };
        Ok(Self {
            chosen_log_prob: log_probs[chosen],
            log_probs,
            mask,
            chosen,
        })
    }

    /// Probabilities; masked nodes are exactly zero.
    pub fn probs(&self) -> Vec<f64> {
        self.log_probs
            .iter()
            .zip(&self.mask)
            .map(|(&lp, &m)| if m { lp.exp() } else { 0.0 })
            .collect()
    }
}

/// Masked softmax over `logits` followed by an action choice.
pub fn action_distribution(logits: &[f64], mask: &[bool], choice: DecodeChoice<'_>) -> Result<StepDistribution> {
    let mut g = Graph::new();
    let u = g.constant(Array::row(logits.to_vec()))?;
    let lp = g.masked_log_softmax(u, mask)?;
    StepDistribution::choose(g.value(lp).data().to_vec(), mask.to_vec(), choice)
}
