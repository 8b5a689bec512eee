use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("probabilities on line {line} sum to {sum}, expected 1")]
    ProbabilitySum { line: usize, sum: String },

    #[error("duplicate transition on line {line}: {message}")]
    DuplicateTransition { line: usize, message: String },

    #[error("weights sum to {sum}, expected 1")]
    WeightSum { sum: String },

    #[error("negative or zero weight {weight}")]
    BadWeight { weight: String },

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error("state index {0} is out of range")]
    StateOutOfRange(usize),

    #[error("relation is not an equivalence relation")]
    NotEquivalence,

    #[error("formula syntax error at offset {offset}: {message}")]
    FormulaSyntax { offset: usize, message: String },

    #[error("connective `{connective}` is not part of {logic}")]
    GrammarMode {
        connective: String,
        logic: &'static str,
    },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("formula size {size} exceeds the node budget of {budget}")]
    NodeBudget { size: usize, budget: usize },

    #[error("equation system is malformed: {0}")]
    EquationSystem(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
