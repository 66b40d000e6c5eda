//! Optional remote keyword processing and embedding.
//!
//! Talks to an OpenAI-compatible HTTP endpoint in two stages: a chat model
//! filters noisy keywords and generates related ones, then an embedding
//! model turns the processed keywords into vectors. Everything here runs
//! during ingestion, before any search; searches themselves stay offline.
//!
//! Keyword processing is best-effort: any failure falls back to the input
//! keywords unchanged, with a warning recorded. Embedding is not; it fails
//! after the configured retries.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::{normalize_keyword, set_key};

/// Environment variable holding the API key. Read only here.
pub const API_KEY_ENV: &str = "SSAC_API_KEY";

const FILTER_CLARITY_PROMPT: &str = "You are given a list of user keywords, one per line. \
Keep only the keywords that carry a clear, unambiguous meaning on their own; drop vague, \
ambiguous, or overly specific entries. Reply with the kept keywords, one per line, and \
nothing else.\n\nKeywords:\n{keywords}";

const FILTER_RELEVANCE_PROMPT: &str = "You are given a list of keywords, one per line. \
Keep only the keywords that describe a skill, topic, or interest; drop entries that are \
noise, names, or chatter with no topical content. Reply with the kept keywords, one per \
line, and nothing else.\n\nKeywords:\n{keywords}";

const AUGMENT_PROMPT: &str = "You are given a list of keywords, one per line. For the list \
as a whole, produce up to five additional closely related keywords that someone searching \
for these topics would also use. Reply with the new keywords only, one per line, and \
nothing else.\n\nKeywords:\n{keywords}";

/// The three chat prompt templates. `{keywords}` is replaced by the
/// newline-joined keyword list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub filter_clarity: String,
    pub filter_relevance: String,
    pub augment: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            filter_clarity: FILTER_CLARITY_PROMPT.to_string(),
            filter_relevance: FILTER_RELEVANCE_PROMPT.to_string(),
            augment: AUGMENT_PROMPT.to_string(),
        }
    }
}

/// Connection and model configuration for the remote pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPipelineConfig {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub chat_model: String,
    pub embed_model: String,
    #[serde(default)]
    pub prompts: PromptTemplates,
    pub timeout_secs: f64,
    pub retries: u32,
}

impl PromptPipelineConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            chat_model: "gpt-3.5-turbo".to_string(),
            embed_model: "text-embedding-3-small".to_string(),
            prompts: PromptTemplates::default(),
            timeout_secs: 30.0,
            retries: 2,
        }
    }

    pub fn validate(&self) -> Result<(), RemoteError> {
        if self.timeout_secs <= 0.0 {
            return Err(RemoteError::BadConfig("timeout must be positive".into()));
        }
        if self.prompts.filter_clarity.is_empty()
            || self.prompts.filter_relevance.is_empty()
            || self.prompts.augment.is_empty()
        {
            return Err(RemoteError::BadConfig("prompt templates must be non-empty".into()));
        }
        if self.endpoint.is_empty() {
            return Err(RemoteError::BadConfig("endpoint must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("remote configuration invalid: {0}")]
    BadConfig(String),
    #[error("request to {url} failed after {attempts} attempts: {last}")]
    RequestFailed {
        url: String,
        attempts: u32,
        last: String,
    },
    #[error("unexpected response shape: {0}")]
    BadResponse(String),
}

/// Keywords after the filter/augment pipeline, with any warnings raised
/// along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedKeywords {
    pub keywords: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Vectors fetched for a keyword set: one per keyword plus one for the set
/// as a whole, keyed for the vectors file.
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteEmbeddings {
    pub dimension: usize,
    pub keyword_vectors: BTreeMap<String, Vec<f64>>,
    pub set_key: String,
    pub set_vector: Vec<f64>,
}

fn client(cfg: &PromptPipelineConfig) -> Result<reqwest::blocking::Client, RemoteError> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs_f64(cfg.timeout_secs))
        .build()
        .map_err(|e| RemoteError::BadConfig(e.to_string()))
}

fn post_json(
    cfg: &PromptPipelineConfig,
    path: &str,
    body: serde_json::Value,
) -> Result<serde_json::Value, RemoteError> {
    let url = format!("{}/{}", cfg.endpoint.trim_end_matches('/'), path);
    let client = client(cfg)?;
    let key = std::env::var(API_KEY_ENV).ok();
    let attempts = cfg.retries.saturating_add(1);
    let mut last = String::new();
    for _ in 0..attempts {
        let mut req = client.post(&url).json(&body);
        if let Some(k) = &key {
            req = req.bearer_auth(k);
        }
        match req.send() {
            Ok(resp) => {
                let status = resp.status();
                match resp.json::<serde_json::Value>() {
                    Ok(v) if status.is_success() => return Ok(v),
                    Ok(v) => last = format!("HTTP {status}: {v}"),
                    Err(e) => last = format!("HTTP {status}: {e}"),
                }
            }
            Err(e) => last = e.to_string(),
        }
    }
    Err(RemoteError::RequestFailed { url, attempts, last })
}

fn chat(cfg: &PromptPipelineConfig, prompt: &str) -> Result<Vec<String>, RemoteError> {
    let body = json!({
        "model": cfg.chat_model,
        "temperature": 0,
        "messages": [{"role": "user", "content": prompt}],
    });
    let resp = post_json(cfg, "chat/completions", body)?;
    let content = resp["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| RemoteError::BadResponse("missing choices[0].message.content".into()))?;
    Ok(content
        .lines()
        .map(str::trim)
        .map(|l| l.trim_start_matches(['-', '*', ' ']))
        .filter(|l| !l.is_empty())
        .map(normalize_keyword)
        .collect())
}

fn fill(template: &str, keywords: &BTreeSet<String>) -> String {
    let joined = keywords.iter().cloned().collect::<Vec<_>>().join("\n");
    template.replace("{keywords}", &joined)
}

/// Filter, then augment, the keyword set through the chat model.
///
/// The result is the filtered keywords united with the generated ones.
/// Any request or parse failure keeps the stage's input unchanged and
/// records a warning; this never fails.
pub fn process_keywords_remote(
    cfg: &PromptPipelineConfig,
    keywords: &BTreeSet<String>,
) -> ProcessedKeywords {
    let mut warnings = Vec::new();
    if keywords.is_empty() {
        return ProcessedKeywords {
            keywords: BTreeSet::new(),
            warnings,
        };
    }
    if let Err(e) = cfg.validate() {
        warnings.push(format!("keyword processing skipped: {e}"));
        return ProcessedKeywords {
            keywords: keywords.clone(),
            warnings,
        };
    }

    let normalized: BTreeSet<String> = keywords.iter().map(|k| normalize_keyword(k)).collect();

    let mut filtered = normalized.clone();
    for (stage, template) in [
        ("clarity filter", &cfg.prompts.filter_clarity),
        ("relevance filter", &cfg.prompts.filter_relevance),
    ] {
        match chat(cfg, &fill(template, &filtered)) {
            // The model must not invent keywords while filtering.
            Ok(kept) => {
                let kept: BTreeSet<String> =
                    kept.into_iter().filter(|k| filtered.contains(k)).collect();
                if kept.is_empty() {
                    warnings.push(format!("{stage} removed every keyword; stage ignored"));
                } else {
                    filtered = kept;
                }
            }
            Err(e) => warnings.push(format!("{stage} failed, keeping keywords: {e}")),
        }
    }

    let mut out = filtered.clone();
    match chat(cfg, &fill(&cfg.prompts.augment, &filtered)) {
        Ok(generated) => out.extend(generated),
        Err(e) => warnings.push(format!("augmentation failed, no keywords added: {e}")),
    }

    ProcessedKeywords {
        keywords: out,
        warnings,
    }
}

/// Fetch one vector per keyword plus a set-level vector for the whole set.
/// `dimensions` asks the provider to truncate to that width, for stores
/// with a fixed dimension.
pub fn embed_remote(
    cfg: &PromptPipelineConfig,
    keywords: &BTreeSet<String>,
    dimensions: Option<usize>,
) -> Result<RemoteEmbeddings, RemoteError> {
    cfg.validate()?;
    let normalized: BTreeSet<String> = keywords.iter().map(|k| normalize_keyword(k)).collect();
    if normalized.is_empty() {
        return Err(RemoteError::BadConfig("cannot embed an empty keyword set".into()));
    }

    let mut inputs: Vec<String> = normalized.iter().cloned().collect();
    // Final input embeds the whole set as one text.
    inputs.push(normalized.iter().cloned().collect::<Vec<_>>().join(", "));

    let mut body = json!({ "model": cfg.embed_model, "input": inputs });
    if let Some(d) = dimensions {
        body["dimensions"] = json!(d);
    }
    let resp = post_json(cfg, "embeddings", body)?;
    let data = resp["data"]
        .as_array()
        .ok_or_else(|| RemoteError::BadResponse("missing data array".into()))?;
    if data.len() != normalized.len() + 1 {
        return Err(RemoteError::BadResponse(format!(
            "expected {} embeddings, got {}",
            normalized.len() + 1,
            data.len()
        )));
    }

    let parse_vec = |v: &serde_json::Value| -> Result<Vec<f64>, RemoteError> {
        v["embedding"]
            .as_array()
            .ok_or_else(|| RemoteError::BadResponse("missing embedding field".into()))?
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| RemoteError::BadResponse("non-numeric component".into()))
            })
            .collect()
    };

    let mut keyword_vectors = BTreeMap::new();
    let mut dimension = 0usize;
    for (kw, item) in normalized.iter().zip(data.iter()) {
        let v = parse_vec(item)?;
        if dimension == 0 {
            dimension = v.len();
        } else if v.len() != dimension {
            return Err(RemoteError::BadResponse("inconsistent dimensions".into()));
        }
        keyword_vectors.insert(kw.clone(), v);
    }
    let set_vector = parse_vec(&data[normalized.len()])?;
    if set_vector.len() != dimension {
        return Err(RemoteError::BadResponse("inconsistent dimensions".into()));
    }

    Ok(RemoteEmbeddings {
        dimension,
        keyword_vectors,
        set_key: set_key(&normalized),
        set_vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn unreachable_cfg() -> PromptPipelineConfig {
        let mut cfg = PromptPipelineConfig::new("http://127.0.0.1:1/v1");
        cfg.timeout_secs = 0.2;
        cfg.retries = 0;
        cfg
    }

    #[test]
    fn unreachable_endpoint_falls_back_with_warning() {
        let cfg = unreachable_cfg();
        let input = crate::testutil::kwset(&["power grid maintenance", "likes cats"]);
        let out = process_keywords_remote(&cfg, &input);
        let expect: BTreeSet<String> = input.iter().map(|k| normalize_keyword(k)).collect();
        assert_eq!(out.keywords, expect);
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn empty_input_yields_empty_output_without_calls() {
        let cfg = unreachable_cfg();
        let out = process_keywords_remote(&cfg, &BTreeSet::new());
        assert!(out.keywords.is_empty());
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn embed_remote_errors_after_retries() {
        let cfg = unreachable_cfg();
        let err = embed_remote(&cfg, &crate::testutil::kwset(&["a"]), None).unwrap_err();
        assert!(matches!(err, RemoteError::RequestFailed { attempts: 1, .. }));
    }

    #[test]
    fn bad_config_is_rejected() {
        let mut cfg = unreachable_cfg();
        cfg.timeout_secs = 0.0;
        assert!(matches!(cfg.validate(), Err(RemoteError::BadConfig(_))));
        let mut cfg = unreachable_cfg();
        cfg.prompts.augment = String::new();
        assert!(matches!(cfg.validate(), Err(RemoteError::BadConfig(_))));
    }

    /// Minimal HTTP/1.1 responder: answers each incoming request with the
    /// next canned JSON body.
    fn serve_once(listener: TcpListener, bodies: Vec<String>) -> std::thread::JoinHandle<()> {
        std::thread::spawn(move || {
            for body in bodies {
                let (mut stream, _) = listener.accept().expect("accept");
                let mut buf = Vec::new();
                let mut tmp = [0u8; 1024];
                // Read headers, then the announced content length.
                let mut content_len = 0usize;
                let mut header_end = 0usize;
                loop {
                    let n = stream.read(&mut tmp).expect("read");
                    buf.extend_from_slice(&tmp[..n]);
                    if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                        header_end = pos + 4;
                        let headers = String::from_utf8_lossy(&buf[..pos]);
                        for line in headers.lines() {
                            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:")
                            {
                                content_len = v.trim().parse().unwrap_or(0);
                            }
                        }
                        break;
                    }
                    if n == 0 {
                        break;
                    }
                }
                while buf.len() < header_end + content_len {
                    let n = stream.read(&mut tmp).expect("read body");
                    if n == 0 {
                        break;
                    }
                    buf.extend_from_slice(&tmp[..n]);
                }
                let resp = format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
                stream.write_all(resp.as_bytes()).expect("write");
            }
        })
    }

    fn chat_body(content: &str) -> String {
        serde_json::to_string(&serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        }))
        .unwrap()
    }

    #[test]
    fn pipeline_filters_and_augments_against_mock_server() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let handle = serve_once(
            listener,
            vec![
                chat_body("power grid maintenance"),
                chat_body("power grid maintenance"),
                chat_body("substation repair\ntransformer inspection"),
            ],
        );
        let mut cfg = PromptPipelineConfig::new(format!("http://127.0.0.1:{port}/v1"));
        cfg.timeout_secs = 5.0;
        cfg.retries = 0;

        let input = crate::testutil::kwset(&["power grid maintenance", "likes cats"]);
        let out = process_keywords_remote(&cfg, &input);
        handle.join().unwrap();

        assert!(out.warnings.is_empty(), "{:?}", out.warnings);
        assert_eq!(
            out.keywords,
            crate::testutil::kwset(&[
                "power grid maintenance",
                "substation repair",
                "transformer inspection"
            ])
        );
        assert!(!out.keywords.contains("likes cats"));
    }

    #[test]
    fn embed_remote_parses_vectors_and_counts() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let body = serde_json::to_string(&serde_json::json!({
            "data": [
                {"embedding": [1.0, 0.0]},
                {"embedding": [0.0, 1.0]},
                {"embedding": [0.5, 0.5]},
                {"embedding": [0.7, 0.7]},
            ]
        }))
        .unwrap();
        let handle = serve_once(listener, vec![body]);
        let mut cfg = PromptPipelineConfig::new(format!("http://127.0.0.1:{port}/v1"));
        cfg.timeout_secs = 5.0;

        // Duplicate keyword folds into a single entry: 3 keywords + 1 set.
        let kws = crate::testutil::kwset(&["a", "b", "c", "A "]);
        let out = embed_remote(&cfg, &kws, None).unwrap();
        handle.join().unwrap();

        assert_eq!(out.dimension, 2);
        assert_eq!(out.keyword_vectors.len(), 3);
        assert_eq!(out.set_vector, vec![0.7, 0.7]);
        assert_eq!(out.set_key, set_key(&kws));
    }
}
