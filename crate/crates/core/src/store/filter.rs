//! Conjunctive metadata filters.
//!
//! Text form: clauses joined by `&`, each one of
//! `field:[lo,hi]` (inclusive numeric range), `field=value` (equality; numbers
//! compare numerically) or `field~text` (exact string match).

use std::fmt;

use thiserror::Error;

use super::schema::{CollectionSchema, FieldType, MetaValue, Metadata};

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Eq { field: String, value: MetaValue },
    Range { field: String, lo: f64, hi: f64 },
    Matches { field: String, value: String },
}

impl Predicate {
    pub fn field(&self) -> &str {
        match self {
            Predicate::Eq { field, .. } | Predicate::Range { field, .. } | Predicate::Matches { field, .. } => field,
        }
    }

    fn accepts(&self, metadata: &Metadata) -> bool {
        let Some(v) = metadata.get(self.field()) else {
            return false;
        };
        match self {
            Predicate::Eq { value, .. } => match (v.as_f64(), value.as_f64()) {
                (Some(a), Some(b)) => a == b,
                _ => v == value,
            },
            Predicate::Range { lo, hi, .. } => v.as_f64().is_some_and(|x| *lo <= x && x <= *hi),
            Predicate::Matches { value, .. } => matches!(v, MetaValue::Str(s) if s == value),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Eq { field, value } => write!(f, "{field}={value}"),
            Predicate::Range { field, lo, hi } => write!(f, "{field}:[{lo},{hi}]"),
            Predicate::Matches { field, value } => write!(f, "{field}~{value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("cannot parse filter clause {clause:?}: {reason}")]
    Syntax { clause: String, reason: &'static str },
    #[error("filter field {0:?} is not declared in the collection schema")]
    UnknownField(String),
    #[error("filter field {field:?} has type {actual:?}, which {op} does not apply to")]
    TypeMismatch {
        field: String,
        actual: FieldType,
        op: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetadataFilter {
    pub predicates: Vec<Predicate>,
}

impl MetadataFilter {
    pub fn new(predicates: Vec<Predicate>) -> Self {
        MetadataFilter { predicates }
    }

    pub fn range(field: &str, lo: f64, hi: f64) -> Self {
        MetadataFilter::new(vec![Predicate::Range {
            field: field.to_owned(),
            lo,
            hi,
        }])
    }

    pub fn parse(text: &str) -> Result<Self, FilterError> {
        let mut predicates = Vec::new();
        for clause in text.split('&').map(str::trim).filter(|c| !c.is_empty()) {
            predicates.push(parse_clause(clause)?);
        }
        Ok(MetadataFilter { predicates })
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn accepts(&self, metadata: &Metadata) -> bool {
        self.predicates.iter().all(|p| p.accepts(metadata))
    }

    /// Checks that every field is declared and each operator suits its type.
    pub fn validate(&self, schema: &CollectionSchema) -> Result<(), FilterError> {
        for p in &self.predicates {
            let ty = *schema
                .metadata_fields
                .get(p.field())
                .ok_or_else(|| FilterError::UnknownField(p.field().to_owned()))?;
            let mismatch = |op| FilterError::TypeMismatch {
                field: p.field().to_owned(),
                actual: ty,
                op,
            };
            match p {
                Predicate::Range { .. } if ty == FieldType::String => return Err(mismatch("a range")),
                Predicate::Matches { .. } if ty != FieldType::String => return Err(mismatch("a string match")),
                Predicate::Eq { value, .. } if value.as_f64().is_some() != (ty != FieldType::String) => {
                    return Err(mismatch("equality with this value"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for MetadataFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.predicates.iter().enumerate() {
            if i > 0 {
                f.write_str("&")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

fn parse_clause(clause: &str) -> Result<Predicate, FilterError> {
    let err = |reason| FilterError::Syntax {
        clause: clause.to_owned(),
        reason,
    };
    let split = clause
        .find([':', '=', '~'])
        .ok_or_else(|| err("expected ':', '=' or '~'"))?;
    let field = clause[..split].trim();
    if field.is_empty() {
        return Err(err("missing field name"));
    }
    let rest = clause[split + 1..].trim();
    match clause.as_bytes()[split] {
        b':' => {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| err("range must look like [lo,hi]"))?;
            let (lo, hi) = inner.split_once(',').ok_or_else(|| err("range needs two bounds"))?;
            let lo: f64 = lo.trim().parse().map_err(|_| err("lower bound is not a number"))?;
            let hi: f64 = hi.trim().parse().map_err(|_| err("upper bound is not a number"))?;
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(err("lower bound exceeds upper bound"));
            }
            Ok(Predicate::Range {
                field: field.to_owned(),
                lo,
                hi,
            })
        }
        b'=' => {
            let value = if let Ok(i) = rest.parse::<i64>() {
                MetaValue::Int(i)
            } else if let Ok(x) = rest.parse::<f64>() {
                MetaValue::Float(x)
            } else {
                MetaValue::Str(rest.to_owned())
            };
            Ok(Predicate::Eq {
                field: field.to_owned(),
                value,
            })
        }
        _ => Ok(Predicate::Matches {
            field: field.to_owned(),
            value: rest.to_owned(),
        }),
    }
}
