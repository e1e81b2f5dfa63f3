//! Q&A lookup over HTTP.

use std::time::Duration;

use tutorcast_core::help::{ProviderError, QaClient, Resource};

const TIMEOUT: Duration = Duration::from_secs(3);

/// Calls `GET <url>?q=<query>&lang=<language>` and expects a JSON array of
/// `{title, url, score}`. Blocking; call it off the async runtime.
#[derive(Debug, Clone)]
pub struct HttpQaClient {
    url: String,
}

impl HttpQaClient {
    pub fn new(url: impl Into<String>) -> Self {
        HttpQaClient { url: url.into() }
    }
}

impl QaClient for HttpQaClient {
    fn lookup(&self, query: &str, language_id: &str) -> Result<Vec<Resource>, ProviderError> {
        let client = reqwest::blocking::Client::builder().timeout(TIMEOUT).build().map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        let response = client.get(&self.url).query(&[("q", query), ("lang", language_id)]).send().map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(ProviderError::BadResponse(format!("status {}", response.status())));
        }
        response.json().map_err(|e| ProviderError::BadResponse(e.to_string()))
    }
}
