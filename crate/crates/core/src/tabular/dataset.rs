use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, ColumnSchema, Role};
use crate::error::{Error, Result};

/// A single typed column. Categorical cells hold their integer code as `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    schema: ColumnSchema,
    cells: Vec<Option<f64>>,
}

impl Column {
    pub fn new(schema: ColumnSchema, cells: Vec<Option<f64>>) -> Result<Self> {
        let col = Self { schema, cells };
        col.validate()?;
        Ok(col)
    }

    pub fn numeric(name: impl Into<String>, cells: Vec<Option<f64>>) -> Result<Self> {
        Self::new(ColumnSchema::numeric(name), cells)
    }

    /// Numeric column with no missing cells.
    pub fn dense(name: impl Into<String>, values: &[f64]) -> Result<Self> {
        Self::numeric(name, values.iter().map(|&v| Some(v)).collect())
    }

    pub fn coded(schema: ColumnSchema, codes: &[Option<usize>]) -> Result<Self> {
        Self::new(schema, codes.iter().map(|c| c.map(|c| c as f64)).collect())
    }

    fn validate(&self) -> Result<()> {
        for (row, cell) in self.cells.iter().enumerate() {
            let Some(v) = *cell else { continue };
            let ok = match self.schema.kind {
                ColumnKind::Numeric => v.is_finite(),
                ColumnKind::Categorical | ColumnKind::Binary => {
                    v >= 0.0 && v.fract() == 0.0 && (v as usize) < self.schema.n_categories()
                }
            };
            if !ok {
                return Err(Error::Type(format!(
                    "value {v} at row {row} is invalid for column `{}`",
                    self.schema.name
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.schema.name
    }

    pub fn schema(&self) -> &ColumnSchema {
        &self.schema
    }

    pub fn kind(&self) -> ColumnKind {
        self.schema.kind
    }

    pub fn role(&self) -> Role {
        self.schema.role
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        self.cells[row]
    }

    /// Category code at `row`, `None` when missing or the column is numeric.
    pub fn code(&self, row: usize) -> Option<usize> {
        if self.schema.is_discrete() {
            self.cells[row].map(|v| v as usize)
        } else {
            None
        }
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Fails with the first missing row, otherwise returns the dense values.
    pub fn require_dense(&self) -> Result<Vec<f64>> {
        self.cells
            .iter()
            .enumerate()
            .map(|(row, c)| c.ok_or_else(|| Error::MissingValue { column: self.schema.name.clone(), row }))
            .collect()
    }

    pub(crate) fn cells_mut(&mut self) -> &mut Vec<Option<f64>> {
        &mut self.cells
    }

    pub(crate) fn with_cells(&self, cells: Vec<Option<f64>>) -> Self {
        Self { schema: self.schema.clone(), cells }
    }
}

/// Column-typed table. Immutable after construction; every transformation
/// returns a new value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        for c in &columns {
            if c.len() != n_rows {
                return Err(Error::Schema(format!("column `{}` has {} cells, expected {n_rows}", c.name(), c.len())));
            }
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|o| o.name() == c.name()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name())));
            }
        }
        Ok(Self { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn schema(&self) -> Vec<ColumnSchema> {
        self.columns.iter().map(|c| c.schema().clone()).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(Column::name)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name() == name)
            .ok_or_else(|| Error::Schema(format!("no column named `{name}`")))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.column_index(name)?])
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name() == name)
    }

    /// Names of columns with role `feature`, in column order.
    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().filter(|c| c.role() == Role::Feature).map(|c| c.name().to_string()).collect()
    }

    pub fn target(&self, role: Role) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.role() == role)
            .ok_or_else(|| Error::Schema(format!("no column with role {role:?}")))
    }

    /// New dataset with `column` appended. Rejects duplicate names.
    pub fn with_column(&self, column: Column) -> Result<Self> {
        if self.has_column(column.name()) {
            return Err(Error::Schema(format!("column `{}` already exists", column.name())));
        }
        let mut columns = self.columns.clone();
        columns.push(column);
        Self::new(columns)
    }

    /// New dataset with the named column replaced.
    pub fn replace_column(&self, column: Column) -> Result<Self> {
        let idx = self.column_index(column.name())?;
        let mut columns = self.columns.clone();
        columns[idx] = column;
        Self::new(columns)
    }

    /// The named columns, in the given order.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let columns = names.iter().map(|n| self.column(n.as_ref()).cloned()).collect::<Result<Vec<_>>>()?;
        Self::new(columns)
    }

    /// Rows at `idx`, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let columns = self.columns.iter().map(|c| c.with_cells(idx.iter().map(|&i| c.cells[i]).collect())).collect();
        Self { columns, n_rows: idx.len() }
    }

    pub(crate) fn columns_mut(&mut self) -> &mut [Column] {
        &mut self.columns
    }
}
