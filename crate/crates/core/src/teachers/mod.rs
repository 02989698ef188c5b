//! Error-picking experts: the positive teacher flags false negatives among
//! predicted negatives, the negative teacher flags false positives among
//! predicted positives.

mod learned;
mod profile;
mod synthetic;

pub use learned::{hog_view, teacher_fit, LearnedTeacher, LearnedTeacherConfig};
pub use profile::{estimate_profile, ProfileEstimate};
pub use synthetic::{synthetic_pick, PickOutcome, SyntheticTeacher};

use crate::error::Result;
use crate::linear::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    /// Predicted label of the outputs this side examines.
    pub fn examines(self) -> Label {
        match self {
            Side::Positive => Label::Negative,
            Side::Negative => Label::Positive,
        }
    }

    /// Label assigned to a picked example.
    pub fn amends_to(self) -> Label {
        self.examines().flipped()
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Positive => "positive",
            Side::Negative => "negative",
        }
    }
}

/// One classifier output shown to a teacher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Output {
    pub id: usize,
    pub predicted: Label,
}

pub trait Teacher: Send {
    fn side(&self) -> Side;

    /// Ids of suspected errors, all drawn from the outputs of the examined side.
    fn pick(&mut self, outputs: &[Output]) -> Result<Vec<usize>>;

    /// Called when a new unlabeled chunk starts.
    fn refresh(&mut self, _chunk: usize) -> Result<()> {
        Ok(())
    }
}

pub(crate) fn side_pool(outputs: &[Output], side: Side) -> impl Iterator<Item = &Output> {
    outputs.iter().filter(move |o| o.predicted == side.examines())
}
