//! Plain `key=value` text configuration shared by camera, scene and pipeline
//! files. Blank lines and lines starting with `#` are ignored; keys are
//! unique per file.

use std::str::FromStr;

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<Entry>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                ParseError::at(line, format!("expected key=value, got {trimmed:?}"))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ParseError::at(line, "empty key"));
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(ParseError::at(
                    line,
                    format!("duplicate key {key:?} (first set on line {})", prev.line),
                ));
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Fails on the first key not in `allowed`, naming its line.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<(), ParseError> {
        match self
            .entries
            .iter()
            .find(|e| !allowed.contains(&e.key.as_str()))
        {
            Some(e) => Err(ParseError::at(e.line, format!("unknown key {:?}", e.key))),
            None => Ok(()),
        }
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                ParseError::at(
                    e.line,
                    format!("cannot parse value {:?} for key {:?}", e.value, key),
                )
            }),
        }
    }

    pub fn parse_required<T: FromStr>(&self, key: &str) -> Result<T, ParseError> {
        self.parse_opt(key)?
            .ok_or_else(|| ParseError::general(format!("missing required key {key:?}")))
    }

    /// Parses a finite real value.
    pub fn real_opt(&self, key: &str) -> Result<Option<f64>, ParseError> {
        let v: Option<f64> = self.parse_opt(key)?;
        match (v, self.get(key)) {
            (Some(x), Some(e)) if !x.is_finite() => Err(ParseError::at(
                e.line,
                format!("value for {key:?} must be finite"),
            )),
            _ => Ok(v),
        }
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.get(key).map(|e| e.line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments_and_whitespace() {
        let kv = KeyValues::parse("# camera\n\n focal = 185.5 \nmodel=equidistant\n").unwrap();
        assert_eq!(kv.entries().len(), 2);
        assert_eq!(kv.real_opt("focal").unwrap(), Some(185.5));
        assert_eq!(kv.line_of("model"), Some(4));
    }

    #[test]
    fn missing_equals_names_line() {
        let err = KeyValues::parse("a=1\nnot a pair\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn duplicate_key_names_second_line() {
        let err = KeyValues::parse("a=1\nb=2\na=3\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn bad_number_names_line() {
        let kv = KeyValues::parse("x=1\ny=abc\n").unwrap();
        let err = kv.real_opt("y").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(kv.real_opt("missing").unwrap().is_none());
        assert!(kv
            .parse_required::<f64>("missing")
            .unwrap_err()
            .line
            .is_none());
    }

    #[test]
    fn non_finite_rejected() {
        let kv = KeyValues::parse("x=NaN\n").unwrap();
        assert_eq!(kv.real_opt("x").unwrap_err().line, Some(1));
    }

    #[test]
    fn unknown_key_rejected() {
        let kv = KeyValues::parse("a=1\nzzz=2\n").unwrap();
        assert_eq!(kv.reject_unknown(&["a"]).unwrap_err().line, Some(2));
    }
}
