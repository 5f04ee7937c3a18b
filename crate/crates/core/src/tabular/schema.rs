use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Feature,
    TargetDisorder,
    TargetSubclass,
    Ignore,
}

impl Role {
    pub fn is_target(self) -> bool {
        matches!(self, Role::TargetDisorder | Role::TargetSubclass)
    }
}

/// One column of a schema document. Category codes are list positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default)]
    pub role: Role,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ColumnKind::Numeric, categories: Vec::new(), role: Role::Feature }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
            role: Role::Feature,
        }
    }

    /// Binary column; `categories` lists the token for code 0 then code 1.
    pub fn binary(name: impl Into<String>, no: &str, yes: &str) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Binary,
            categories: vec![no.to_string(), yes.to_string()],
            role: Role::Feature,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn is_discrete(&self) -> bool {
        self.kind != ColumnKind::Numeric
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn code_of(&self, token: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == token)
    }

    pub fn token_of(&self, code: usize) -> Option<&str> {
        self.categories.get(code).map(String::as_str)
    }

    /// Fills defaults and checks the per-column invariants.
    pub fn normalized(mut self) -> Result<Self> {
        match self.kind {
            ColumnKind::Numeric => {
                if !self.categories.is_empty() {
                    return Err(Error::Schema(format!("numeric column `{}` must not list categories", self.name)));
                }
            }
            ColumnKind::Binary => {
                if self.categories.is_empty() {
                    self.categories = vec!["0".into(), "1".into()];
                }
                if self.categories.len() != 2 {
                    return Err(Error::Schema(format!(
                        "binary column `{}` needs exactly 2 categories, got {}",
                        self.name,
                        self.categories.len()
                    )));
                }
            }
            ColumnKind::Categorical => {
                if self.categories.is_empty() && self.role != Role::Ignore {
                    return Err(Error::Schema(format!("categorical column `{}` lists no categories", self.name)));
                }
            }
        }
        let mut seen = HashSet::new();
        for c in &self.categories {
            if !seen.insert(c.as_str()) {
                return Err(Error::Schema(format!("column `{}` repeats category `{c}`", self.name)));
            }
        }
        Ok(self)
    }
}

/// Ordered list of column schemas, serialized as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
}

impl Schema {
    /// Normalizes every column and checks document-level invariants: unique
    /// names and exactly one column per target role.
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self> {
        let columns = columns.into_iter().map(ColumnSchema::normalized).collect::<Result<Vec<_>>>()?;
        let mut names = HashSet::new();
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        for role in [Role::TargetDisorder, Role::TargetSubclass] {
            let n = columns.iter().filter(|c| c.role == role).count();
            if n != 1 {
                return Err(Error::Schema(format!("expected exactly one column with role {role:?}, found {n}")));
            }
            let target = columns.iter().find(|c| c.role == role).unwrap();
            if !target.is_discrete() {
                return Err(Error::Schema(format!("target column `{}` must be categorical", target.name)));
            }
        }
        Ok(Self { columns })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let columns: Vec<ColumnSchema> = serde_json::from_str(text)?;
        Self::new(columns)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn get(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn target(&self, role: Role) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.role == role)
    }
}
