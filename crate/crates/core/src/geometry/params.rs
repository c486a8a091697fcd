use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A numeric scenario parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Number(f64),
    List(Vec<f64>),
}

/// Named numeric parameters of a library family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(pub BTreeMap<String, Param>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), Param::Number(value));
        self
    }

    pub fn with_list(mut self, key: &str, value: Vec<f64>) -> Self {
        self.0.insert(key.to_string(), Param::List(value));
        self
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Param::Number(x)) => Ok(Some(*x)),
            Some(Param::List(_)) => Err(Error::InvalidParams(format!("`{key}` must be a number"))),
        }
    }

    pub fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`")))
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Param::List(v)) => Ok(Some(v.clone())),
            Some(Param::Number(x)) => Ok(Some(vec![*x])),
        }
    }

    /// A parameter that must be a whole number within `[min, max]`.
    pub fn integer(&self, key: &str, default: usize, min: usize, max: usize) -> Result<usize> {
        let x = self.number_or(key, default as f64)?;
        if x.fract() != 0.0 || x < min as f64 || x > max as f64 {
            return Err(Error::InvalidParams(format!("`{key}` must be an integer in [{min}, {max}], got {x}")));
        }
        Ok(x as usize)
    }

    /// Rejects keys outside `allowed`, so misspellings are reported.
    pub fn check_keys(&self, family: &str, allowed: &[&str]) -> Result<()> {
        for key in self.0.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::InvalidParams(format!(
                    "unknown parameter `{key}` for `{family}` (expected one of {allowed:?})"
                )));
            }
        }
        Ok(())
    }
}
