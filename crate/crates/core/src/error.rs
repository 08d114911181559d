// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
///
/// The variants mirror the failure classes the CLI maps onto exit codes:
/// malformed or invalid input is a usage problem (exit 2), while an input
/// that is well formed but on which the statistic is undefined is reported
/// as degenerate (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid community assignment: {0}")]
    Assignment(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for inputs that parse fine but leave the statistic undefined.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Assignment(_) | Error::Degenerate(_))
    }
}
