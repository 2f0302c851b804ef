//! Minimal JSON-over-HTTP client for the optional external services
//! (embedding, instruction parsing, cluster summarisation).

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Environment variable holding the embedding service URL.
pub const EMBED_URL_ENV: &str = "NAVMEM_EMBED_URL";
/// Environment variable holding the language-model service URL used for
/// instruction parsing and cluster summaries.
pub const LLM_URL_ENV: &str = "NAVMEM_LLM_URL";

const TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("request failed: {0}")]
    Http(#[from] ureq::Error),
}

/// Reads a service URL from the environment. Unset or blank means the
/// deterministic local implementation should be used.
pub fn url_from_env(var: &str) -> Option<String> {
    std::env::var(var).ok().filter(|s| !s.trim().is_empty())
}

pub fn post_json<B: Serialize, R: DeserializeOwned>(url: &str, body: &B) -> Result<R, ServiceError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(TIMEOUT))
        .build()
        .into();
    let mut resp = agent.post(url).send_json(body)?;
    Ok(resp.body_mut().read_json::<R>()?)
}
