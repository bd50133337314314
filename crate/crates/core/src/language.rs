//! Language identifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A lowercase language code, e.g. `es` or `pt`.
///
/// Codes follow ISO 639-1/-2 conventions in real workspaces; synthetic
/// workspaces may use any lowercase ASCII alphanumeric tag.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageId(String);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LanguageIdError {
    #[error("language code is empty")]
    Empty,
    #[error("language code {0:?} is too long (max 8 characters)")]
    TooLong(String),
    #[error("language code {0:?} must be lowercase ASCII alphanumeric")]
    InvalidCharacter(String),
}

impl LanguageId {
    pub fn new(code: &str) -> Result<Self, LanguageIdError> {
        if code.is_empty() {
            return Err(LanguageIdError::Empty);
        }
        if code.len() > 8 {
            return Err(LanguageIdError::TooLong(code.to_string()));
        }
        if !code
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
        {
            return Err(LanguageIdError::InvalidCharacter(code.to_string()));
        }
        Ok(LanguageId(code.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LanguageId({})", self.0)
    }
}

impl FromStr for LanguageId {
    type Err = LanguageIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageId::new(s)
    }
}

impl TryFrom<String> for LanguageId {
    type Error = LanguageIdError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        LanguageId::new(&value)
    }
}

impl From<LanguageId> for String {
    fn from(id: LanguageId) -> Self {
        id.0
    }
}
