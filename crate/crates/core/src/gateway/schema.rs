//! Minimal output-schema validation: required fields, enumerations, and value
//! ranges. Extra fields are preserved, never rejected.

use serde_json::Value;

#[derive(Debug, Clone)]
pub enum Schema {
    /// Object with declared fields; undeclared fields pass through untouched.
    Object(Vec<FieldSchema>),
    Array {
        items: Box<Schema>,
        min_items: usize,
    },
    Str {
        non_empty: bool,
    },
    Int {
        min: i64,
        max: i64,
    },
    Num,
    Bool,
    /// String drawn from a fixed enumeration.
    Enum(Vec<String>),
    /// Object used as a free-form string map.
    StringMap,
    Any,
}

#[derive(Debug, Clone)]
pub struct FieldSchema {
    pub name: String,
    pub schema: Schema,
    pub required: bool,
}

impl FieldSchema {
    pub fn required(name: impl Into<String>, schema: Schema) -> Self {
        Self {
            name: name.into(),
            schema,
            required: true,
        }
    }

    pub fn optional(name: impl Into<String>, schema: Schema) -> Self {
        Self {
            name: name.into(),
            schema,
            required: false,
        }
    }
}

impl Schema {
    pub fn object(fields: Vec<FieldSchema>) -> Self {
        Schema::Object(fields)
    }

    pub fn array(items: Schema) -> Self {
        Schema::Array {
            items: Box::new(items),
            min_items: 0,
        }
    }

    pub fn non_empty_array(items: Schema) -> Self {
        Schema::Array {
            items: Box::new(items),
            min_items: 1,
        }
    }

    pub fn string() -> Self {
        Schema::Str { non_empty: false }
    }

    pub fn non_empty_string() -> Self {
        Schema::Str { non_empty: true }
    }

    pub fn int(min: i64, max: i64) -> Self {
        Schema::Int { min, max }
    }

    pub fn enumeration(values: &[&str]) -> Self {
        Schema::Enum(values.iter().map(|s| s.to_string()).collect())
    }

    pub fn validate(&self, value: &Value) -> Result<(), String> {
        self.validate_at(value, "$")
    }

    fn validate_at(&self, value: &Value, path: &str) -> Result<(), String> {
        match self {
            Schema::Any => Ok(()),
            Schema::Object(fields) => {
                let obj = value
                    .as_object()
                    .ok_or_else(|| format!("{path}: expected object"))?;
                for field in fields {
                    match obj.get(&field.name) {
                        Some(v) => field
                            .schema
                            .validate_at(v, &format!("{path}.{}", field.name))?,
                        None if field.required => {
                            return Err(format!("{path}: missing required field `{}`", field.name))
                        }
                        None => {}
                    }
                }
                Ok(())
            }
            Schema::Array { items, min_items } => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| format!("{path}: expected array"))?;
                if arr.len() < *min_items {
                    return Err(format!(
                        "{path}: expected at least {min_items} item(s), got {}",
                        arr.len()
                    ));
                }
                for (i, v) in arr.iter().enumerate() {
                    items.validate_at(v, &format!("{path}[{i}]"))?;
                }
                Ok(())
            }
            Schema::Str { non_empty } => {
                let s = value
                    .as_str()
                    .ok_or_else(|| format!("{path}: expected string"))?;
                if *non_empty && s.trim().is_empty() {
                    return Err(format!("{path}: string must be non-empty"));
                }
                Ok(())
            }
            Schema::Int { min, max } => {
                let n = value
                    .as_i64()
                    .ok_or_else(|| format!("{path}: expected integer"))?;
                if n < *min || n > *max {
                    return Err(format!("{path}: {n} outside [{min}, {max}]"));
                }
                Ok(())
            }
            Schema::Num => value
                .as_f64()
                .map(|_| ())
                .ok_or_else(|| format!("{path}: expected number")),
            Schema::Bool => value
                .as_bool()
                .map(|_| ())
                .ok_or_else(|| format!("{path}: expected boolean")),
            Schema::Enum(allowed) => {
                let s = value
                    .as_str()
                    .ok_or_else(|| format!("{path}: expected string"))?;
                if allowed.iter().any(|a| a == s) {
                    Ok(())
                } else {
                    Err(format!("{path}: `{s}` not one of {}", allowed.join(", ")))
                }
            }
            Schema::StringMap => {
                let obj = value
                    .as_object()
                    .ok_or_else(|| format!("{path}: expected object"))?;
                for (k, v) in obj {
                    if !v.is_string() && !v.is_number() && !v.is_boolean() {
                        return Err(format!("{path}.{k}: expected scalar value"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Pulls the first JSON value out of a model response: a fenced ```json block
/// if present, otherwise the first balanced object or array.
pub fn extract_json(response: &str) -> Option<Value> {
    if let Ok(v) = serde_json::from_str::<Value>(response.trim()) {
        return Some(v);
    }
    if let Some(fenced) = extract_fenced(response) {
        if let Ok(v) = serde_json::from_str::<Value>(fenced.trim()) {
            return Some(v);
        }
    }
    extract_balanced(response).and_then(|s| serde_json::from_str(s).ok())
}

fn extract_fenced(response: &str) -> Option<&str> {
    let start = response
        .find("```json")
        .map(|i| i + 7)
        .or_else(|| response.find("```").map(|i| i + 3))?;
    let rest = &response[start..];
    let end = rest.find("```")?;
    Some(&rest[..end])
}

fn extract_balanced(response: &str) -> Option<&str> {
    let start = response.find(['{', '['])?;
    let bytes = response.as_bytes();
    let (open, close) = if bytes[start] == b'{' {
        (b'{', b'}')
    } else {
        (b'[', b']')
    };
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            _ if b == open => depth += 1,
            _ if b == close => {
                depth -= 1;
                if depth == 0 {
                    return Some(&response[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}
