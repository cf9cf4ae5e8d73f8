use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use phid_core::{Error, Result};

/// Synthetic next-token tasks; the label is predicted at the last position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    /// `a b =` → `(a + b) mod p`; every ordered pair appears once.
    ModAdd { p: usize },
    /// `x0 op1 x1 … opk xk =` with ops `+`/`−` evaluated left to right mod p.
    Chain { p: usize, k: usize, examples: usize },
    /// Random sequence → its last token.
    Copy { vocab: usize, len: usize, examples: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub tokens: Vec<usize>,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Example>,
    pub holdout: Vec<Example>,
}

fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

impl TaskSpec {
    pub fn vocab(&self) -> usize {
        match *self {
            TaskSpec::ModAdd { p } => p + 1,
            TaskSpec::Chain { p, .. } => p + 3,
            TaskSpec::Copy { vocab, .. } => vocab,
        }
    }

    pub fn seq_len(&self) -> usize {
        match *self {
            TaskSpec::ModAdd { .. } => 3,
            TaskSpec::Chain { k, .. } => 2 * k + 2,
            TaskSpec::Copy { len, .. } => len,
        }
    }

    /// Number of output classes that can be correct.
    pub fn classes(&self) -> usize {
        match *self {
            TaskSpec::ModAdd { p } | TaskSpec::Chain { p, .. } => p,
            TaskSpec::Copy { vocab, .. } => vocab,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            TaskSpec::ModAdd { p } => format!("mod_add_p{p}"),
            TaskSpec::Chain { p, k, .. } => format!("chain_p{p}_k{k}"),
            TaskSpec::Copy { vocab, len, .. } => format!("copy_v{vocab}_l{len}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TaskSpec::ModAdd { p } | TaskSpec::Chain { p, .. } if !is_prime(p) => {
                Err(Error::Validation(format!("modulus {p} is not prime")))
            }
            TaskSpec::Chain { k, examples, .. } if k == 0 || examples == 0 => {
                Err(Error::Validation("chain tasks need k ≥ 1 and examples ≥ 1".into()))
            }
            TaskSpec::Copy { vocab, len, examples } if vocab < 2 || len == 0 || examples == 0 => {
                Err(Error::Validation("copy tasks need vocab ≥ 2, len ≥ 1, examples ≥ 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// All examples in a seeded order.
    pub fn examples(&self, seed: u64) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match *self {
            TaskSpec::ModAdd { p } => {
                let mut all: Vec<Example> = (0..p * p)
                    .map(|i| Example {
                        tokens: vec![i / p, i % p, p],
                        target: (i / p + i % p) % p,
                    })
                    .collect();
                all.shuffle(&mut rng);
                all
            }
            TaskSpec::Chain { p, k, examples } => (0..examples)
                .map(|_| {
                    let mut acc = rng.random_range(0..p);
                    let mut tokens = vec![acc];
                    for _ in 0..k {
                        let plus = rng.random_bool(0.5);
                        let x = rng.random_range(0..p);
                        tokens.push(if plus { p } else { p + 1 });
                        tokens.push(x);
                        acc = if plus { (acc + x) % p } else { (acc + p - x) % p };
                    }
                    tokens.push(p + 2);
                    Example { tokens, target: acc }
                })
                .collect(),
            TaskSpec::Copy { vocab, len, examples } => (0..examples)
                .map(|_| {
                    let tokens: Vec<usize> = (0..len).map(|_| rng.random_range(0..vocab)).collect();
                    Example {
                        target: tokens[len - 1],
                        tokens,
                    }
                })
                .collect(),
        }
    }

    /// Seeded split; the training share is `ceil(fraction · n)`.
    pub fn dataset(&self, train_fraction: f64, seed: u64) -> Dataset {
        let mut all = self.examples(seed);
        let n_train = ((train_fraction * all.len() as f64).ceil() as usize).min(all.len());
        let holdout = all.split_off(n_train);
        Dataset { train: all, holdout }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modular_addition_covers_all_pairs() {
        let t = TaskSpec::ModAdd { p: 7 };
        let ex = t.examples(0);
        assert_eq!(ex.len(), 49);
        for e in &ex {
            assert_eq!(e.tokens.len(), 3);
            assert_eq!(e.target, (e.tokens[0] + e.tokens[1]) % 7);
            assert_eq!(e.tokens[2], 7);
        }
        let d = t.dataset(0.5, 0);
        assert_eq!(d.train.len(), 25);
        assert_eq!(d.holdout.len(), 24);
        assert_eq!(d, t.dataset(0.5, 0));
    }

    #[test]
    fn chain_is_evaluated_left_to_right() {
        let t = TaskSpec::Chain { p: 5, k: 3, examples: 50 };
        for e in t.examples(1) {
            assert_eq!(e.tokens.len(), 8);
            let mut acc = e.tokens[0] as i64;
            for step in e.tokens[1..7].chunks(2) {
                let x = step[1] as i64;
                acc = if step[0] == 5 { acc + x } else { acc - x };
            }
            assert_eq!(e.target as i64, acc.rem_euclid(5));
            assert!(e.tokens.iter().all(|&tok| tok < t.vocab()));
        }
    }

    #[test]
    fn copy_target_is_last_token() {
        let t = TaskSpec::Copy { vocab: 4, len: 5, examples: 20 };
        for e in t.examples(2) {
            assert_eq!(e.target, *e.tokens.last().unwrap());
        }
    }

    #[test]
    fn moduli_must_be_prime() {
        assert!(TaskSpec::ModAdd { p: 91 }.validate().is_err());
        assert!(TaskSpec::ModAdd { p: 97 }.validate().is_ok());
        assert!(TaskSpec::Chain { p: 11, k: 0, examples: 3 }.validate().is_err());
    }
}
