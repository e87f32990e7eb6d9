//! JSON query expressions.
//!
//! Grammar, one key per object:
//! - `"CCO"` or `{"smiles": "CCO"}`: the unit embedding a structure is stored with
//! - `{"text": "..."}`: raw text embedding
//! - `{"image": "path"}`: raw image embedding
//! - `{"vector": [..]}`: a literal vector
//! - `{"add": [a, b]}`, `{"sub": [a, b]}`, `{"avg": [a, ...]}`
//! - `{"scale": [e, m]}`, `{"norm": e}`

use serde_json::Value;

use chemvecrag_core::embedding::{Leaf, QueryExpression};

use crate::error::ServiceError;

/// Supplies the vectors and bytes that leaves refer to.
pub trait LeafSource {
    fn structure(&self, smiles: &str) -> Result<Vec<f32>, ServiceError>;
    fn image(&self, path: &str) -> Result<Vec<u8>, ServiceError>;
}

fn bad(detail: impl Into<String>) -> ServiceError {
    ServiceError::new(crate::error::ErrorClass::Usage, "bad_expression", detail)
}

fn operands<'a>(op: &str, v: &'a Value, arity: Option<usize>) -> Result<&'a [Value], ServiceError> {
    let items = v.as_array().ok_or_else(|| bad(format!("{op} takes a list")))?;
    match arity {
        Some(n) if items.len() != n => Err(bad(format!("{op} takes {n} operands, got {}", items.len()))),
        None if items.is_empty() => Err(bad(format!("{op} needs at least one operand"))),
        _ => Ok(items),
    }
}

pub fn parse_expression(v: &Value, leaves: &dyn LeafSource) -> Result<QueryExpression, ServiceError> {
    let boxed = |e: &Value| parse_expression(e, leaves).map(Box::new);
    let obj = match v {
        Value::String(s) => return Ok(QueryExpression::Embed(Leaf::Vector(leaves.structure(s)?))),
        Value::Object(obj) if obj.len() == 1 => obj,
        other => return Err(bad(format!("expected a string or a one-key object, got {other}"))),
    };
    let (op, arg) = obj.iter().next().unwrap();
    let text_arg = || arg.as_str().ok_or_else(|| bad(format!("{op} takes a string")));
    Ok(match op.as_str() {
        "smiles" => QueryExpression::Embed(Leaf::Vector(leaves.structure(text_arg()?)?)),
        "text" => QueryExpression::Embed(Leaf::Text(text_arg()?.to_owned())),
        "image" => {
            let path = text_arg()?;
            QueryExpression::Embed(Leaf::Image {
                name: path.to_owned(),
                bytes: leaves.image(path)?,
            })
        }
        "vector" => {
            let values: Vec<f32> = serde_json::from_value(arg.clone())
                .map_err(|e| bad(format!("vector must be a list of numbers: {e}")))?;
            QueryExpression::Embed(Leaf::Vector(values))
        }
        "add" => {
            let xs = operands(op, arg, Some(2))?;
            QueryExpression::Add(boxed(&xs[0])?, boxed(&xs[1])?)
        }
        "sub" => {
            let xs = operands(op, arg, Some(2))?;
            QueryExpression::Sub(boxed(&xs[0])?, boxed(&xs[1])?)
        }
        "avg" => QueryExpression::Average(
            operands(op, arg, None)?
                .iter()
                .map(|e| parse_expression(e, leaves))
                .collect::<Result<_, _>>()?,
        ),
        "scale" => {
            let xs = operands(op, arg, Some(2))?;
            let m = xs[1].as_f64().ok_or_else(|| bad("scale factor must be a number"))?;
            QueryExpression::Scale(boxed(&xs[0])?, m)
        }
        "norm" => QueryExpression::Normalize(boxed(arg)?),
        other => return Err(bad(format!("unknown operator {other:?}"))),
    })
}
