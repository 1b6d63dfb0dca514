use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

pub const DEFAULT_SPLIT: [f64; 3] = [0.6, 0.2, 0.2];

/// How the privileged group (Z = 1) is recognised from the raw sensitive column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum PrivilegedRule {
    Eq { value: String },
    In { values: Vec<String> },
    Gt { value: f64 },
    Ge { value: f64 },
    Lt { value: f64 },
    Le { value: f64 },
}

impl PrivilegedRule {
    pub fn is_privileged(&self, cell: &str) -> Result<bool, String> {
        let cell = cell.trim();
        let numeric = |threshold: f64, cmp: fn(f64, f64) -> bool| {
            cell.parse::<f64>()
                .map(|x| cmp(x, threshold))
                .map_err(|_| format!("non-numeric value {cell:?}"))
        };
        match self {
            PrivilegedRule::Eq { value } => Ok(cell == value.trim()),
            PrivilegedRule::In { values } => Ok(values.iter().any(|v| v.trim() == cell)),
            PrivilegedRule::Gt { value } => numeric(*value, |x, t| x > t),
            PrivilegedRule::Ge { value } => numeric(*value, |x, t| x >= t),
            PrivilegedRule::Lt { value } => numeric(*value, |x, t| x < t),
            PrivilegedRule::Le { value } => numeric(*value, |x, t| x <= t),
        }
    }
}

/// Where the rows of a task come from. Only consumed by callers that resolve
/// files (the CLI); [`super::load_csv`] takes an explicit path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    /// A CSV file; relative paths are resolved against the dataset root.
    File {
        path: String,
        #[serde(default)]
        sha256: Option<String>,
    },
    /// The bundled biased synthetic generator.
    Synthetic { rows: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub dataset_name: String,
    pub label_column: String,
    pub favorable_value: String,
    pub sensitive_column: String,
    pub privileged: PrivilegedRule,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub numeric_columns: Vec<String>,
    #[serde(default = "default_split")]
    pub split_fractions: [f64; 3],
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// Cell values treated as missing (compared after trimming).
    #[serde(default = "default_missing")]
    pub missing_markers: Vec<String>,
    #[serde(default)]
    pub source: Option<DataSource>,
}

fn default_split() -> [f64; 3] {
    DEFAULT_SPLIT
}

fn default_delimiter() -> String {
    ",".to_string()
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "?".to_string(), "NA".to_string()]
}

impl TaskConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let config: TaskConfig =
            toml::from_str(text).map_err(|e| DataError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            DataError::Config(msg) => DataError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), DataError> {
        validate_fractions(self.split_fractions)?;
        if self.delimiter.len() != 1 {
            return Err(DataError::Config(format!(
                "delimiter must be a single byte, got {:?}",
                self.delimiter
            )));
        }
        let features = self.numeric_columns.iter().chain(&self.categorical_columns);
        for column in features {
            if column == &self.sensitive_column {
                return Err(DataError::Config(format!(
                    "sensitive column {column:?} must not be listed as a feature"
                )));
            }
            if column == &self.label_column {
                return Err(DataError::Config(format!(
                    "label column {column:?} must not be listed as a feature"
                )));
            }
        }
        if self.numeric_columns.is_empty() && self.categorical_columns.is_empty() {
            return Err(DataError::Config("no feature columns configured".into()));
        }
        Ok(())
    }

    pub(crate) fn delimiter_byte(&self) -> u8 {
        self.delimiter.as_bytes()[0]
    }

    pub(crate) fn is_missing(&self, cell: &str) -> bool {
        let cell = cell.trim();
        self.missing_markers.iter().any(|m| m.trim() == cell)
    }
}

pub fn validate_fractions(fractions: [f64; 3]) -> Result<(), DataError> {
    if fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(DataError::Config(format!(
            "split fractions must be positive, got {fractions:?}"
        )));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::Config(format!(
            "split fractions must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BANK: &str = r#"
dataset_name = "bank"
label_column = "y"
favorable_value = "yes"
sensitive_column = "age"
privileged = { op = "gt", value = 25 }
numeric_columns = ["duration"]
categorical_columns = ["job"]
"#;

    #[test]
    fn parses_numeric_threshold_rule() {
        let config = TaskConfig::from_toml_str(BANK).unwrap();
        assert_eq!(config.privileged, PrivilegedRule::Gt { value: 25.0 });
        assert_eq!(config.split_fractions, DEFAULT_SPLIT);
        assert!(config.privileged.is_privileged("26").unwrap());
        assert!(!config.privileged.is_privileged("25").unwrap());
        assert!(config.privileged.is_privileged("abc").is_err());
    }

    #[test]
    fn rejects_sensitive_column_as_feature() {
        let text = BANK.replace(r#"["duration"]"#, r#"["duration", "age"]"#);
        let err = TaskConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("age"), "{err}");
    }

    #[test]
    fn rejects_bad_fractions() {
        assert!(validate_fractions([0.5, 0.5, 0.0]).is_err());
        assert!(validate_fractions([0.6, 0.2, 0.3]).is_err());
        assert!(validate_fractions([0.6, 0.2, 0.2]).is_ok());
    }

    #[test]
    fn membership_rule() {
        let rule = PrivilegedRule::In {
            values: vec!["male single".into(), "male mar/wid".into()],
        };
        assert!(rule.is_privileged(" male single ").unwrap());
        assert!(!rule.is_privileged("female div/dep/mar").unwrap());
    }
}
