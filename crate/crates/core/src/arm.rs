//! Arm identities: one fault-localization technique is a localization
//! method paired with a suspiciousness formula.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Localization method of an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Spectrum-based fault localization.
    Sbfl,
    /// Mutation-based fault localization.
    Mbfl,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sbfl => "sbfl",
            Method::Mbfl => "mbfl",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sbfl" => Ok(Method::Sbfl),
            "mbfl" => Ok(Method::Mbfl),
            other => Err(Error::domain(format!(
                "unknown method {other:?} (expected sbfl or mbfl)"
            ))),
        }
    }
}

/// Identity of one selectable technique, e.g. `sbfl+ochiai`.
///
/// The canonical text form is `<method>+<formula>` in lowercase; it is also
/// the serialized form, so arm ids can key JSON objects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArmId {
    method: Method,
    formula: String,
}

impl ArmId {
    /// Builds an arm id. The formula is lowercased and must be a non-empty
    /// token of `[a-z0-9_-]`.
    pub fn new(method: Method, formula: &str) -> Result<Self> {
        let formula = formula.trim().to_ascii_lowercase();
        if formula.is_empty() {
            return Err(Error::domain("formula must not be empty"));
        }
        if !formula
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-')
        {
            return Err(Error::domain(format!(
                "formula {formula:?} is not a plain lowercase token"
            )));
        }
        Ok(Self { method, formula })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn formula(&self) -> &str {
        &self.formula
    }

    /// Display label used in reports, e.g. `SBFL+ochiai`.
    pub fn label(&self) -> String {
        format!("{}+{}", self.method.as_str().to_ascii_uppercase(), self.formula)
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.method, self.formula)
    }
}

impl FromStr for ArmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (method, formula) = s
            .split_once('+')
            .ok_or_else(|| Error::domain(format!("arm {s:?} is not of the form method+formula")))?;
        ArmId::new(method.parse()?, formula)
    }
}

impl Serialize for ArmId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ArmId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fails if any arm appears more than once.
pub fn ensure_unique(arms: &[ArmId]) -> Result<()> {
    for (i, arm) in arms.iter().enumerate() {
        if arms[..i].contains(arm) {
            return Err(Error::config(format!("duplicate arm {arm}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_canonical_and_report_forms() {
        let a: ArmId = "sbfl+ochiai".parse().unwrap();
        let b: ArmId = "SBFL + Ochiai".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "sbfl+ochiai");
        assert_eq!(a.label(), "SBFL+ochiai");
        assert_eq!(a.method(), Method::Sbfl);
    }

    #[test]
    fn rejects_bad_ids() {
        assert!("ochiai".parse::<ArmId>().is_err());
        assert!("sbfl+".parse::<ArmId>().is_err());
        assert!("xbfl+ochiai".parse::<ArmId>().is_err());
        assert!("sbfl+och iai".parse::<ArmId>().is_err());
    }

    #[test]
    fn serializes_as_string() {
        let a: ArmId = "mbfl+dstar2".parse().unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "\"mbfl+dstar2\"");
        let back: ArmId = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn duplicate_detection() {
        let a: ArmId = "sbfl+ochiai".parse().unwrap();
        let b: ArmId = "mbfl+ochiai".parse().unwrap();
        assert!(ensure_unique(&[a.clone(), b]).is_ok());
        assert!(ensure_unique(&[a.clone(), a]).is_err());
    }
}
