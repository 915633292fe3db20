use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::vtree::{Var, Vtree};

/// Complete assignment of the variables `X1..Xn`, stored densely by slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Assignment {
        Assignment { values }
    }

    /// Assignment of `width` variables where bit `i` of `bits` is the value of `X{i+1}`.
    pub fn from_bits(width: usize, bits: u64) -> Assignment {
        Assignment {
            values: (0..width).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn get(&self, var: Var) -> Option<bool> {
        self.values.get(var.slot()).copied()
    }

    pub fn value(&self, var: Var) -> Result<bool> {
        self.get(var).ok_or(Error::Unassigned(var))
    }

    pub fn set(&mut self, var: Var, value: bool) {
        if self.values.len() < var.index() as usize {
            self.values.resize(var.index() as usize, false);
        }
        self.values[var.slot()] = value;
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn width(&self) -> usize {
        self.values.len()
    }

    /// Whether the assignment agrees with every observed value in `evidence`.
    pub fn agrees_with(&self, evidence: &Evidence) -> bool {
        evidence.iter().all(|(var, val)| self.get(var) == Some(val))
    }
}

impl From<Vec<bool>> for Assignment {
    fn from(values: Vec<bool>) -> Self {
        Assignment::new(values)
    }
}

/// Partial assignment of observed variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    observed: BTreeMap<Var, bool>,
}

impl Evidence {
    pub fn empty() -> Evidence {
        Evidence::default()
    }

    /// Builds evidence from `(var, value)` pairs; a variable may appear only once.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, bool)>) -> Result<Evidence> {
        let mut observed = BTreeMap::new();
        for (var, value) in pairs {
            if observed.insert(var, value).is_some() {
                return Err(Error::DuplicateAssignment(var));
            }
        }
        Ok(Evidence { observed })
    }

    /// Evidence observing every variable of `vtree` at its value in `x`.
    pub fn full(vtree: &Vtree, x: &Assignment) -> Result<Evidence> {
        let pairs: Result<Vec<_>> = vtree.variables().into_iter().map(|v| Ok((v, x.value(v)?))).collect();
        Evidence::from_pairs(pairs?)
    }

    pub fn observe(&mut self, var: Var, value: bool) -> Result<()> {
        if self.observed.insert(var, value).is_some() {
            return Err(Error::DuplicateAssignment(var));
        }
        Ok(())
    }

    pub fn get(&self, var: Var) -> Option<bool> {
        self.observed.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.observed.iter().map(|(&v, &b)| (v, b))
    }

    /// Checks that every observed variable belongs to `vtree`.
    pub fn check_against(&self, vtree: &Vtree) -> Result<()> {
        match self.observed.keys().find(|v| !vtree.contains(**v)) {
            Some(&v) => Err(Error::UnknownVariable(v)),
            None => Ok(()),
        }
    }
}
