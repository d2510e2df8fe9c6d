use std::fmt;

use serde::{Deserialize, Serialize};

/// A non-fatal problem found while extracting or analysing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Warning {
    /// Where the problem was found: a file path, `path:line`, or a stage name.
    pub origin: String,
    pub message: String,
}

impl Warning {
    pub fn new(origin: impl Into<String>, message: impl Into<String>) -> Self {
        Warning { origin: origin.into(), message: message.into() }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.origin, self.message)
    }
}
