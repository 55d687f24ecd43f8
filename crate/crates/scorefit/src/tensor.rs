//! Sparse subject x stimulus x repetition opinion scores.
//!
//! Missing votes are represented by absence: a cell either holds a finite
//! score or nothing at all. Every reduction elsewhere in the crate iterates
//! present cells only, so a missing vote can never leak into a sum.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

/// A vote at dense indices `(subject, stimulus, repetition)`.
pub type Cell = (usize, usize, usize);

/// Sparse opinion-score tensor with explicit presence.
///
/// Subject and stimulus identifiers are opaque strings; dense indices are
/// assigned in first-appearance order and kept stable so results can be
/// mapped back to identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTensor {
    subjects: Vec<String>,
    stimuli: Vec<String>,
    repetitions: usize,
    scores: BTreeMap<Cell, f64>,
}

impl ScoreTensor {
    /// Number of subjects `I`.
    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    /// Number of stimuli `J`.
    pub fn stimulus_count(&self) -> usize {
        self.stimuli.len()
    }

    /// Repetition count `R` (maximum repetition index + 1).
    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    /// Total number of present votes.
    pub fn vote_count(&self) -> usize {
        self.scores.len()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subjects
    }

    pub fn stimulus_ids(&self) -> &[String] {
        &self.stimuli
    }

    /// Present score at a cell, or `None` for a missing vote.
    pub fn get(&self, subject: usize, stimulus: usize, repetition: usize) -> Option<f64> {
        self.scores.get(&(subject, stimulus, repetition)).copied()
    }

    /// Iterate present votes in `(subject, stimulus, repetition)` order.
    pub fn votes(&self) -> impl Iterator<Item = (Cell, f64)> + '_ {
        self.scores.iter().map(|(&cell, &score)| (cell, score))
    }

    /// Votes per subject.
    pub fn subject_vote_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.subjects.len()];
        for &(i, _, _) in self.scores.keys() {
            counts[i] += 1;
        }
        counts
    }

    /// Votes per stimulus.
    pub fn stimulus_vote_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.stimuli.len()];
        for &(_, j, _) in self.scores.keys() {
            counts[j] += 1;
        }
        counts
    }

    /// Build a complete `I x J` tensor with one repetition from a dense
    /// matrix indexed `[subject][stimulus]`. Identifiers are synthesized.
    pub fn from_complete(matrix: &[Vec<f64>]) -> Result<ScoreTensor> {
        let mut builder = ScoreTensorBuilder::new();
        for (i, row) in matrix.iter().enumerate() {
            for (j, &score) in row.iter().enumerate() {
                builder.add_vote(&format!("s{i:03}"), &format!("v{j:03}"), 0, score)?;
            }
        }
        builder.build()
    }

    /// Build from explicit `(subject, stimulus, repetition, score)` entries
    /// with synthesized identifiers. Indices must be dense.
    pub fn from_sparse(
        subjects: usize,
        stimuli: usize,
        entries: &[(usize, usize, usize, f64)],
    ) -> Result<ScoreTensor> {
        let mut builder = ScoreTensorBuilder::new();
        // Register identifiers up front so dense indices match the caller's.
        for i in 0..subjects {
            builder.touch_subject(&format!("s{i:03}"));
        }
        for j in 0..stimuli {
            builder.touch_stimulus(&format!("v{j:03}"));
        }
        for &(i, j, r, score) in entries {
            if i >= subjects || j >= stimuli {
                return Err(Error::DimensionMismatch {
                    context: "sparse entry index",
                    expected: subjects.max(stimuli),
                    actual: i.max(j),
                });
            }
            builder.add_vote(&format!("s{i:03}"), &format!("v{j:03}"), r, score)?;
        }
        builder.build()
    }

    /// New tensor keeping only the subjects for which `keep` returns true.
    ///
    /// Kept subjects are re-indexed densely in their original order; the
    /// stimulus list is unchanged. Errors if nothing is kept or if a
    /// stimulus is left without votes.
    pub fn retain_subjects<F: Fn(usize) -> bool>(&self, keep: F) -> Result<ScoreTensor> {
        let mut remap = vec![None; self.subjects.len()];
        let mut kept_ids = Vec::new();
        for (i, id) in self.subjects.iter().enumerate() {
            if keep(i) {
                remap[i] = Some(kept_ids.len());
                kept_ids.push(id.clone());
            }
        }
        if kept_ids.is_empty() {
            return Err(Error::AllSubjectsRejected);
        }
        let mut scores = BTreeMap::new();
        for (&(i, j, r), &score) in &self.scores {
            if let Some(new_i) = remap[i] {
                scores.insert((new_i, j, r), score);
            }
        }
        let tensor = ScoreTensor {
            subjects: kept_ids,
            stimuli: self.stimuli.clone(),
            repetitions: self.repetitions,
            scores,
        };
        tensor.validate()?;
        Ok(tensor)
    }

    /// Copy of this tensor with every present score replaced by
    /// `f(subject, stimulus, repetition, score)`. The presence mask is
    /// preserved exactly.
    pub fn map_scores<F: Fn(Cell, f64) -> f64>(&self, f: F) -> Result<ScoreTensor> {
        let mut scores = BTreeMap::new();
        for (&cell, &score) in &self.scores {
            let mapped = f(cell, score);
            if !mapped.is_finite() {
                let (i, j, r) = cell;
                return Err(Error::NonFiniteScore {
                    subject: self.subjects[i].clone(),
                    stimulus: self.stimuli[j].clone(),
                    repetition: r,
                });
            }
            scores.insert(cell, mapped);
        }
        Ok(ScoreTensor {
            subjects: self.subjects.clone(),
            stimuli: self.stimuli.clone(),
            repetitions: self.repetitions,
            scores,
        })
    }

    pub(crate) fn from_parts(
        subjects: Vec<String>,
        stimuli: Vec<String>,
        repetitions: usize,
        scores: BTreeMap<Cell, f64>,
    ) -> Result<ScoreTensor> {
        let tensor = ScoreTensor {
            subjects,
            stimuli,
            repetitions,
            scores,
        };
        tensor.validate()?;
        Ok(tensor)
    }

    fn validate(&self) -> Result<()> {
        if self.scores.is_empty() {
            return Err(Error::EmptyTensor);
        }
        for (&(i, j, r), &score) in &self.scores {
            if i >= self.subjects.len() || j >= self.stimuli.len() || r >= self.repetitions {
                return Err(Error::DimensionMismatch {
                    context: "vote cell out of range",
                    expected: self.subjects.len(),
                    actual: i,
                });
            }
            if !score.is_finite() {
                return Err(Error::NonFiniteScore {
                    subject: self.subjects[i].clone(),
                    stimulus: self.stimuli[j].clone(),
                    repetition: r,
                });
            }
        }
        let subject_counts = self.subject_vote_counts();
        if let Some(i) = subject_counts.iter().position(|&c| c == 0) {
            return Err(Error::VotelessSubject { index: i });
        }
        let stimulus_counts = self.stimulus_vote_counts();
        if let Some(j) = stimulus_counts.iter().position(|&c| c == 0) {
            return Err(Error::VotelessStimulus { index: j });
        }
        Ok(())
    }
}

/// Incremental construction of a [`ScoreTensor`].
#[derive(Debug, Default)]
pub struct ScoreTensorBuilder {
    subjects: Vec<String>,
    stimuli: Vec<String>,
    subject_index: HashMap<String, usize>,
    stimulus_index: HashMap<String, usize>,
    repetitions: usize,
    scores: BTreeMap<Cell, f64>,
}

impl ScoreTensorBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a subject identifier without adding a vote.
    pub fn touch_subject(&mut self, id: &str) -> usize {
        if let Some(&i) = self.subject_index.get(id) {
            return i;
        }
        let i = self.subjects.len();
        self.subjects.push(id.to_string());
        self.subject_index.insert(id.to_string(), i);
        i
    }

    /// Register a stimulus identifier without adding a vote.
    pub fn touch_stimulus(&mut self, id: &str) -> usize {
        if let Some(&j) = self.stimulus_index.get(id) {
            return j;
        }
        let j = self.stimuli.len();
        self.stimuli.push(id.to_string());
        self.stimulus_index.insert(id.to_string(), j);
        j
    }

    pub fn add_vote(
        &mut self,
        subject: &str,
        stimulus: &str,
        repetition: usize,
        score: f64,
    ) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::NonFiniteScore {
                subject: subject.to_string(),
                stimulus: stimulus.to_string(),
                repetition,
            });
        }
        let i = self.touch_subject(subject);
        let j = self.touch_stimulus(stimulus);
        if self.scores.contains_key(&(i, j, repetition)) {
            return Err(Error::DuplicateVote {
                subject: subject.to_string(),
                stimulus: stimulus.to_string(),
                repetition,
            });
        }
        self.repetitions = self.repetitions.max(repetition + 1);
        self.scores.insert((i, j, repetition), score);
        Ok(())
    }

    pub fn build(self) -> Result<ScoreTensor> {
        ScoreTensor::from_parts(self.subjects, self.stimuli, self.repetitions, self.scores)
    }
}
