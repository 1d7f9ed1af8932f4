use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{DiagnosticState, NamePath};

/// One timestamped report from one named source.
///
/// On the wire the timestamp travels in the envelope, not in the status
/// body, so it is skipped by serde.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticStatus {
    pub name: NamePath,
    pub state: DiagnosticState,
    pub message: String,
    pub values: BTreeMap<String, String>,
    #[serde(skip)]
    pub timestamp_ms: u64,
}

impl DiagnosticStatus {
    pub fn new(name: NamePath, state: DiagnosticState, timestamp_ms: u64) -> Self {
        DiagnosticStatus {
            name,
            state,
            message: String::new(),
            values: BTreeMap::new(),
            timestamp_ms,
        }
    }

    pub fn with_message(mut self, message: impl Into<String>) -> Self {
        self.message = message.into();
        self
    }

    pub fn with_value(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.values.insert(key.into(), value.into());
        self
    }
}

/// A scalar carried in a data message field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl DataValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            DataValue::Number(x) => Some(*x),
            DataValue::Text(t) => t.trim().parse().ok(),
            DataValue::Bool(_) => None,
        }
    }
}

impl fmt::Display for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataValue::Bool(b) => write!(f, "{b}"),
            DataValue::Number(x) => write!(f, "{x}"),
            DataValue::Text(t) => f.write_str(t),
        }
    }
}

impl From<f64> for DataValue {
    fn from(x: f64) -> Self {
        DataValue::Number(x)
    }
}

impl From<bool> for DataValue {
    fn from(b: bool) -> Self {
        DataValue::Bool(b)
    }
}

impl From<&str> for DataValue {
    fn from(s: &str) -> Self {
        DataValue::Text(s.to_string())
    }
}

/// A component message on a data channel. `stamp_ms` is the time the
/// carried data refers to; the envelope timestamp is the receipt time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMessage {
    pub stamp_ms: u64,
    #[serde(default)]
    pub fields: BTreeMap<String, DataValue>,
}

impl DataMessage {
    pub fn new(stamp_ms: u64) -> Self {
        DataMessage {
            stamp_ms,
            fields: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<DataValue>) -> Self {
        self.fields.insert(key.into(), value.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&DataValue> {
        self.fields.get(key)
    }
}
