//! Empirical soundness check: refill the holes of the sliced initial state
//! with random terms, replay the recorded steps and compare the outcome at
//! the criterion.

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{SliceError, SlicedTrace};
use crate::rewrite::Trace;
use crate::term::{SlicedTerm, Term, TermGenerator};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayFailure {
    pub sample: usize,
    /// Step that failed to replay; `None` when the replay finished but
    /// disagrees at the criterion.
    pub step: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub samples: usize,
    pub agreed: usize,
    pub failures: Vec<ReplayFailure>,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.agreed == self.samples
    }
}

const REFILL_DEPTH: usize = 3;

fn refill(slice: &SlicedTerm, gen: &TermGenerator, rng: &mut StdRng) -> Result<Term, SliceError> {
    let mut t = slice.term().clone();
    for (p, sort) in slice.holes() {
        t = t.replace_at_raw(&p, gen.generate(&sort, REFILL_DEPTH, rng)?)?;
    }
    Ok(t)
}

/// Replays `samples` refills of the sliced initial state. An empty
/// criterion asks for nothing and agrees trivially.
pub fn replay_check(trace: &Trace, sliced: &SlicedTrace, samples: usize, seed: u64) -> Result<ReplayReport, SliceError> {
    let theory = &trace.theory;
    let gen = TermGenerator::new(&theory.sig);
    let mut rng = StdRng::seed_from_u64(seed);
    let n = sliced.criterion.state_index;
    let mut report = ReplayReport { samples, ..Default::default() };
    if sliced.criterion.positions.is_empty() {
        report.agreed = samples;
        return Ok(report);
    }
    let want = &trace.states[n];
    'sample: for sample in 0..samples {
        let mut s = refill(&sliced.states[0], &gen, &mut rng)?;
        for (k, step) in trace.steps[..n].iter().enumerate() {
            match theory.replay_step(&s, step, false) {
                Ok(next) => s = next,
                Err(e) => {
                    report.failures.push(ReplayFailure { sample, step: Some(k), message: e.to_string() });
                    continue 'sample;
                }
            }
        }
        let differs = sliced.criterion.positions.iter().find(|p| match (s.subterm_at(p), want.subterm_at(p)) {
            (Ok(a), Ok(b)) => a.head() != b.head() || a.arity() != b.arity(),
            _ => true,
        });
        match differs {
            Some(p) => report.failures.push(ReplayFailure { sample, step: None, message: format!("final state differs at {p}") }),
            None => report.agreed += 1,
        }
    }
    Ok(report)
}
