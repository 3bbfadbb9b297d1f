#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// New best score; keep these parameters.
    Improved,
    Continue,
    Stop,
}

/// Patience rule over 1-based epochs. Only a strict improvement resets the
/// counter, so ties keep the earlier epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64) -> Decision {
        match self.best {
            Some((_, best)) if score <= best => {
                self.stale += 1;
                if self.stale >= self.patience {
                    Decision::Stop
                } else {
                    Decision::Continue
                }
            }
            _ => {
                self.best = Some((epoch, score));
                self.stale = 0;
                Decision::Improved
            }
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|b| b.0)
    }

    pub fn best_score(&self) -> Option<f64> {
        self.best.map(|b| b.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(scores: &[f64], patience: usize) -> (usize, usize) {
        let mut es = EarlyStopping::new(patience);
        for (i, &s) in scores.iter().enumerate() {
            if es.observe(i + 1, s) == Decision::Stop {
                return (i + 1, es.best_epoch().unwrap());
            }
        }
        (scores.len(), es.best_epoch().unwrap())
    }

    #[test]
    fn plateau_stops_after_patience() {
        let mut scores = vec![0.3, 0.4];
        scores.extend([0.4; 15]);
        assert_eq!(run(&scores, 10), (12, 2));
    }

    proptest! {
        #[test]
        fn best_epoch_has_maximal_score(scores in prop::collection::vec(0.0f64..1.0, 1..60), patience in 1usize..8) {
            let (stopped, best) = run(&scores, patience);
            let seen = &scores[..stopped];
            let max = seen.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(scores[best - 1], max);
            prop_assert!(best <= stopped);
            // first occurrence of the maximum
            prop_assert!(seen[..best - 1].iter().all(|&s| s < max));
        }
    }
}
