//! String-keyed, JSON-compatible algorithm parameter records.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use crate::error::ParamError;

pub type ParamMap = BTreeMap<String, Value>;

/// Parses a `key=value` pair. The value is read as JSON when it parses,
/// otherwise as a bare string (`acceptance_mode=metropolis`).
pub fn parse_assignment(text: &str) -> Result<(String, Value), ParamError> {
    let (key, raw) = text.split_once('=').ok_or_else(|| ParamError::Invalid {
        key: text.to_string(),
        message: "expected key=value".into(),
    })?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ParamError::Invalid {
            key: text.to_string(),
            message: "empty key".into(),
        });
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Typed accessor that tracks which keys were consumed so leftovers can be
/// reported as unknown.
pub(crate) struct ParamReader<'a> {
    map: &'a ParamMap,
    algorithm: &'static str,
    known: BTreeSet<&'static str>,
}

impl<'a> ParamReader<'a> {
    pub(crate) fn new(map: &'a ParamMap, algorithm: &'static str) -> Self {
        Self {
            map,
            algorithm,
            known: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.insert(key);
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn invalid(key: &str, message: impl Into<String>) -> ParamError {
        ParamError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn f64_opt(&mut self, key: &'static str) -> Result<Option<f64>, ParamError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let x = match v {
                    Value::Number(n) => n.as_f64(),
                    Value::String(s) => s.parse().ok(),
                    _ => None,
                }
                .ok_or_else(|| Self::invalid(key, format!("expected a number, got {v}")))?;
                if !x.is_finite() && x != f64::INFINITY {
                    return Err(Self::invalid(key, "must not be NaN"));
                }
                Ok(Some(x))
            }
        }
    }

    pub(crate) fn f64(&mut self, key: &'static str, default: f64) -> Result<f64, ParamError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub(crate) fn usize_opt(&mut self, key: &'static str) -> Result<Option<usize>, ParamError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let x = match v {
                    Value::Number(n) => n.as_u64(),
                    Value::String(s) => s.parse().ok(),
                    _ => None,
                }
                .ok_or_else(|| Self::invalid(key, format!("expected a non-negative integer, got {v}")))?;
                Ok(Some(x as usize))
            }
        }
    }

    pub(crate) fn usize(&mut self, key: &'static str, default: usize) -> Result<usize, ParamError> {
        Ok(self.usize_opt(key)?.unwrap_or(default))
    }

    pub(crate) fn bool(&mut self, key: &'static str, default: bool) -> Result<bool, ParamError> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(Value::String(s)) if s == "true" || s == "false" => Ok(s == "true"),
            Some(Value::Number(n)) if n.as_u64().is_some_and(|x| x <= 1) => Ok(n.as_u64() == Some(1)),
            Some(v) => Err(Self::invalid(key, format!("expected a boolean, got {v}"))),
        }
    }

    pub(crate) fn string(&mut self, key: &'static str) -> Result<Option<&'a str>, ParamError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Self::invalid(key, format!("expected a string, got {v}"))),
        }
    }

    /// Fails on any key that no accessor asked for.
    pub(crate) fn finish(self) -> Result<(), ParamError> {
        for key in self.map.keys() {
            if !self.known.contains(key.as_str()) {
                return Err(ParamError::Unknown {
                    key: key.clone(),
                    algorithm: self.algorithm,
                    known: self.known.iter().copied().collect::<Vec<_>>().join(", "),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn require(cond: bool, key: &str, message: &str) -> Result<(), ParamError> {
    if cond {
        Ok(())
    } else {
        Err(ParamError::Invalid {
            key: key.to_string(),
            message: message.to_string(),
        })
    }
}
