use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{EmbeddingProvider, Modality, ProviderError, ProviderInput};

/// Fetches embeddings from a remote service.
///
/// Request: `POST {"input": text | base64(image), "modality": "text" | "image"}`.
/// Response: `{"dim": n, "values": [f32; n]}`.
pub struct HttpProvider {
    name: String,
    endpoint: String,
    modality: Modality,
    dim: usize,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct Request<'a> {
    input: &'a str,
    modality: Modality,
}

#[derive(Deserialize)]
struct Response {
    dim: usize,
    values: Vec<f32>,
}

impl HttpProvider {
    pub fn new(endpoint: &str, modality: Modality, dim: usize, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).build();
        HttpProvider {
            name: format!("http:{endpoint}"),
            endpoint: endpoint.to_owned(),
            modality,
            dim,
            agent: ureq::Agent::new_with_config(config),
        }
    }

    fn transport(&self, e: impl std::fmt::Display) -> ProviderError {
        ProviderError::Transport {
            provider: self.name.clone(),
            detail: e.to_string(),
        }
    }
}

impl EmbeddingProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn modality(&self) -> Modality {
        self.modality
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_raw(&self, input: ProviderInput<'_>) -> Result<Vec<f32>, ProviderError> {
        let encoded;
        let text = match input {
            ProviderInput::Text(t) => t,
            ProviderInput::Image { bytes, .. } => {
                encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
                &encoded
            }
        };
        let body = Request {
            input: text,
            modality: input.modality(),
        };
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| self.transport(e))?;
        let parsed: Response = resp.body_mut().read_json().map_err(|e| ProviderError::BadResponse {
            provider: self.name.clone(),
            detail: e.to_string(),
        })?;
        if parsed.dim != parsed.values.len() {
            return Err(ProviderError::BadResponse {
                provider: self.name.clone(),
                detail: format!("dim {} but {} values", parsed.dim, parsed.values.len()),
            });
        }
        Ok(parsed.values)
    }
}
