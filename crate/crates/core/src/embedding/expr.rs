use super::{embed_image, embed_text, normalize_f64, EmbeddingError, EmbeddingProvider, EmbeddingVector, Modality};

/// A value at the bottom of a query expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Leaf {
    /// Embedded verbatim by the text provider.
    Text(String),
    Image {
        name: String,
        bytes: Vec<u8>,
    },
    /// A precomputed vector.
    Vector(Vec<f32>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryExpression {
    Embed(Leaf),
    Add(Box<QueryExpression>, Box<QueryExpression>),
    Sub(Box<QueryExpression>, Box<QueryExpression>),
    Average(Vec<QueryExpression>),
    Scale(Box<QueryExpression>, f64),
    Normalize(Box<QueryExpression>),
}

#[derive(Clone, Copy, Default)]
pub struct ProviderSet<'a> {
    pub text: Option<&'a dyn EmbeddingProvider>,
    pub image: Option<&'a dyn EmbeddingProvider>,
}

/// Evaluates bottom-up in f64 and rounds to f32 once at the end. The result
/// is flagged normalized only when the root is `Normalize`.
pub fn evaluate(expr: &QueryExpression, providers: &ProviderSet<'_>) -> Result<EmbeddingVector, EmbeddingError> {
    let values = eval(expr, providers)?;
    EmbeddingVector::from_f64(&values, matches!(expr, QueryExpression::Normalize(_)))
}

fn eval(expr: &QueryExpression, providers: &ProviderSet<'_>) -> Result<Vec<f64>, EmbeddingError> {
    match expr {
        QueryExpression::Embed(leaf) => {
            let v = match leaf {
                Leaf::Text(text) => {
                    embed_text(providers.text.ok_or(EmbeddingError::NoProvider(Modality::Text))?, text)?
                }
                Leaf::Image { name, bytes } => embed_image(
                    providers.image.ok_or(EmbeddingError::NoProvider(Modality::Image))?,
                    name,
                    bytes,
                )?,
                Leaf::Vector(values) => EmbeddingVector::new(values.clone())?,
            };
            Ok(v.values().iter().map(|&x| x as f64).collect())
        }
        QueryExpression::Add(a, b) => zip(eval(a, providers)?, eval(b, providers)?, |x, y| x + y),
        QueryExpression::Sub(a, b) => zip(eval(a, providers)?, eval(b, providers)?, |x, y| x - y),
        QueryExpression::Average(items) => {
            let (first, rest) = items.split_first().ok_or(EmbeddingError::EmptyAverage)?;
            let mut sum = eval(first, providers)?;
            for item in rest {
                sum = zip(sum, eval(item, providers)?, |x, y| x + y)?;
            }
            let k = items.len() as f64;
            Ok(sum.into_iter().map(|x| x / k).collect())
        }
        QueryExpression::Scale(e, m) => {
            if !m.is_finite() {
                return Err(EmbeddingError::NonFiniteScale(*m));
            }
            Ok(eval(e, providers)?.into_iter().map(|x| x * m).collect())
        }
        QueryExpression::Normalize(e) => normalize_f64(&eval(e, providers)?),
    }
}

fn zip(a: Vec<f64>, b: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect())
}
