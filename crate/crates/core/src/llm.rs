//! Chat-completions client, replay double and the bounded generation pool.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::prompt::{embedded_netlist, extract_code_block, ExtractWarning};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub max_tokens: u32,
    /// Kept at 0 (greedy decoding).
    pub temperature: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            max_tokens: 8192,
            temperature: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub variant: u8,
    pub max_tokens: u32,
    pub concurrency: usize,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub request_timeout_s: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: String::new(),
            api_key_env: None,
            variant: 3,
            max_tokens: 8192,
            concurrency: 4,
            max_attempts: 3,
            backoff_ms: 500,
            request_timeout_s: 300,
        }
    }
}

impl EndpointConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: EndpointConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.concurrency == 0 || cfg.max_attempts == 0 {
            return Err(Error::Config("concurrency and max_attempts must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            max_tokens: self.max_tokens,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    /// The endpoint stopped at the token cap.
    pub truncated: bool,
    pub attempts: u32,
}

pub trait ModelClient: Send + Sync {
    fn complete(&self, prompt: &str, g: &GenerationConfig) -> Result<Completion>;
}

fn new_run_id() -> String {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    format!("{:x}-{:x}", nanos, std::process::id())
}

pub struct HttpClient {
    cfg: EndpointConfig,
    agent: ureq::Agent,
    token: Option<String>,
    pub run_id: String,
}

impl HttpClient {
    pub fn new(cfg: EndpointConfig) -> Result<Self> {
        let token = match &cfg.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| Error::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(cfg.request_timeout_s))
            .build();
        Ok(HttpClient {
            cfg,
            agent,
            token,
            run_id: new_run_id(),
        })
    }

    fn body(&self, prompt: &str, g: &GenerationConfig) -> serde_json::Value {
        json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": g.max_tokens,
            "temperature": g.temperature,
        })
    }
}

fn parse_completion(v: &serde_json::Value, attempts: u32) -> Result<Completion> {
    let choice = v
        .pointer("/choices/0")
        .ok_or_else(|| Error::BadResponse("no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| Error::BadResponse("choice has no message content".into()))?;
    let truncated = choice.get("finish_reason").and_then(|f| f.as_str()) == Some("length");
    Ok(Completion {
        text: text.to_string(),
        truncated,
        attempts,
    })
}

impl ModelClient for HttpClient {
    fn complete(&self, prompt: &str, g: &GenerationConfig) -> Result<Completion> {
        let body = self.body(prompt, g);
        let mut last = String::new();
        for attempt in 1..=self.cfg.max_attempts {
            if attempt > 1 {
                let wait = self.cfg.backoff_ms.saturating_mul(1 << (attempt - 2).min(16));
                thread::sleep(Duration::from_millis(wait));
            }
            log::debug!("[{}] request attempt {attempt}: {} prompt bytes", self.run_id, prompt.len());
            let mut req = self.agent.post(&self.cfg.url);
            if let Some(t) = &self.token {
                req = req.set("Authorization", &format!("Bearer {t}"));
            }
            match req.send_json(body.clone()) {
                Ok(resp) => {
                    let v: serde_json::Value =
                        resp.into_json().map_err(|e| Error::BadResponse(e.to_string()))?;
                    let c = parse_completion(&v, attempt)?;
                    log::debug!(
                        "[{}] response: {} bytes, truncated={}",
                        self.run_id,
                        c.text.len(),
                        c.truncated
                    );
                    return Ok(c);
                }
                Err(ureq::Error::Status(code @ (401 | 403), _)) => return Err(Error::Auth(code)),
                Err(ureq::Error::Status(code, _)) if code == 429 || code >= 500 => {
                    log::warn!("[{}] HTTP {code}, attempt {attempt}", self.run_id);
                    last = format!("HTTP {code}");
                }
                Err(ureq::Error::Status(code, resp)) => {
                    let text = resp.into_string().unwrap_or_default();
                    return Err(Error::BadResponse(format!("HTTP {code}: {text}")));
                }
                Err(ureq::Error::Transport(t)) => {
                    log::warn!("[{}] transport error, attempt {attempt}: {t}", self.run_id);
                    last = t.to_string();
                }
            }
        }
        Err(Error::Transport {
            attempts: self.cfg.max_attempts,
            msg: last,
        })
    }
}

/// Replays stored responses keyed by the netlist embedded in the prompt.
#[derive(Clone, Debug, Default)]
pub struct ReplayClient {
    responses: HashMap<String, String>,
}

impl ReplayClient {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        ReplayClient {
            responses: pairs.into_iter().collect(),
        }
    }
}

impl ModelClient for ReplayClient {
    fn complete(&self, prompt: &str, _g: &GenerationConfig) -> Result<Completion> {
        let key = embedded_netlist(prompt).unwrap_or(prompt);
        let text = self
            .responses
            .get(key)
            .ok_or_else(|| Error::BadResponse("no stored response for prompt".into()))?;
        Ok(Completion {
            text: text.clone(),
            truncated: false,
            attempts: 1,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationJob {
    pub id: String,
    pub prompt: String,
}

/// Per-sample sidecar written next to each generated `.asc`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub id: String,
    pub truncated: bool,
    pub warning: Option<ExtractWarning>,
    pub attempts: u32,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationOutput {
    pub meta: GenerationMeta,
    pub raw: String,
    /// Extracted schematic text; empty when the request or extraction failed.
    pub asc: String,
}

fn run_job(client: &dyn ModelClient, job: &GenerationJob, g: &GenerationConfig) -> Result<GenerationOutput> {
    let c = client.complete(&job.prompt, g)?;
    let mut meta = GenerationMeta {
        id: job.id.clone(),
        truncated: c.truncated,
        attempts: c.attempts,
        ..Default::default()
    };
    let asc = match extract_code_block(&c.text) {
        Ok(b) => {
            meta.warning = b.warning;
            b.text
        }
        Err(e) => {
            meta.error = Some(e.to_string());
            String::new()
        }
    };
    Ok(GenerationOutput { meta, raw: c.text, asc })
}

/// Runs jobs with at most `concurrency` in flight; output order matches `jobs`.
/// Authentication failures abort the run, other per-job errors are recorded.
pub fn generate_all(
    client: &dyn ModelClient,
    jobs: &[GenerationJob],
    g: &GenerationConfig,
    concurrency: usize,
) -> Result<Vec<GenerationOutput>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<GenerationOutput>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..concurrency.max(1).min(jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let r = run_job(client, job, g);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut out = Vec::with_capacity(jobs.len());
    for (job, slot) in jobs.iter().zip(slots.into_inner().unwrap()) {
        match slot.expect("every job ran") {
            Ok(o) => out.push(o),
            Err(e @ Error::Auth(_)) => return Err(e),
            Err(e) => {
                log::error!("{}: {e}", job.id);
                out.push(GenerationOutput {
                    meta: GenerationMeta {
                        id: job.id.clone(),
                        error: Some(e.to_string()),
                        ..Default::default()
                    },
                    raw: String::new(),
                    asc: String::new(),
                });
            }
        }
    }
    Ok(out)
}

/// Writes `<id>.asc`, `<id>.raw.txt` and `<id>.meta.json` for each output.
pub fn write_outputs(dir: &Path, outputs: &[GenerationOutput]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for o in outputs {
        let id = &o.meta.id;
        let write = |name: String, text: &str| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        write(format!("{id}.asc"), &o.asc)?;
        write(format!("{id}.raw.txt"), &o.raw)?;
        write(format!("{id}.meta.json"), &serde_json::to_string_pretty(&o.meta)?)?;
    }
    Ok(())
}

/// Minimal HTTP/1.1 server for exercising clients without a real endpoint.
pub mod mock {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{SocketAddr, TcpListener, TcpStream};
    use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::thread::JoinHandle;

    /// Handler input is the request body; output is (status, body).
    pub type Handler = dyn Fn(&str) -> (u16, String) + Send + Sync;

    pub struct MockServer {
        pub addr: SocketAddr,
        hits: Arc<AtomicUsize>,
        stop: Arc<AtomicBool>,
        handle: Option<JoinHandle<()>>,
    }

    fn serve(mut stream: TcpStream, handler: &Handler) -> std::io::Result<()> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut len = 0usize;
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Ok(());
            }
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0u8; len];
        reader.read_exact(&mut body)?;
        let (status, resp) = handler(&String::from_utf8_lossy(&body));
        write!(
            stream,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{resp}",
            resp.len()
        )?;
        stream.flush()
    }

    impl MockServer {
        pub fn start(handler: impl Fn(&str) -> (u16, String) + Send + Sync + 'static) -> Self {
            let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
            let addr = listener.local_addr().unwrap();
            let hits = Arc::new(AtomicUsize::new(0));
            let stop = Arc::new(AtomicBool::new(false));
            let (h, s) = (hits.clone(), stop.clone());
            let handle = std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if s.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    h.fetch_add(1, Ordering::SeqCst);
                    let _ = serve(stream, &handler);
                }
            });
            MockServer {
                addr,
                hits,
                stop,
                handle: Some(handle),
            }
        }

        pub fn url(&self) -> String {
            format!("http://{}/v1/chat/completions", self.addr)
        }

        pub fn hits(&self) -> usize {
            self.hits.load(Ordering::SeqCst)
        }

        /// Body of a successful chat-completions reply.
        pub fn reply(content: &str, finish_reason: &str) -> String {
            serde_json::json!({
                "choices": [{
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": finish_reason,
                }]
            })
            .to_string()
        }
    }

    impl Drop for MockServer {
        fn drop(&mut self) {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect(self.addr);
            if let Some(h) = self.handle.take() {
                let _ = h.join();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::mock::MockServer;
    use super::*;
    use std::sync::atomic::AtomicU32;
    use std::sync::Arc;

    fn cfg(url: String) -> EndpointConfig {
        EndpointConfig {
            url,
            model: "m".into(),
            backoff_ms: 5,
            request_timeout_s: 5,
            ..Default::default()
        }
    }

    #[test]
    fn config_from_toml() {
        let c = EndpointConfig::from_toml_str(
            "url = \"http://h/v1/chat/completions\"\nmodel = \"x\"\napi_key_env = \"KEY\"\nvariant = 4\n",
        )
        .unwrap();
        assert_eq!((c.variant, c.concurrency, c.max_tokens), (4, 4, 8192));
        assert_eq!(c.generation().temperature, 0.0);
        assert!(EndpointConfig::from_toml_str("concurrency = 0").is_err());
        assert!(EndpointConfig::from_toml_str("url = 3").is_err());
    }

    #[test]
    fn echoes_fixture_and_sends_request_shape() {
        let seen = Arc::new(Mutex::new(String::new()));
        let s2 = seen.clone();
        let server = MockServer::start(move |body| {
            *s2.lock().unwrap() = body.to_string();
            (200, MockServer::reply("```\nVersion 4\n```", "stop"))
        });
        let client = HttpClient::new(cfg(server.url())).unwrap();
        let c = client.complete("hello", &GenerationConfig::default()).unwrap();
        assert_eq!(c, Completion { text: "```\nVersion 4\n```".into(), truncated: false, attempts: 1 });
        let req: serde_json::Value = serde_json::from_str(&seen.lock().unwrap()).unwrap();
        assert_eq!(req["messages"][0]["content"], "hello");
        assert_eq!(req["messages"].as_array().unwrap().len(), 1);
        assert_eq!(req["max_tokens"], 8192);
        assert_eq!(req["temperature"], 0.0);
    }

    #[test]
    fn retries_after_rate_limiting() {
        let calls = Arc::new(AtomicU32::new(0));
        let c2 = calls.clone();
        let server = MockServer::start(move |_| match c2.fetch_add(1, Ordering::SeqCst) {
            0 | 1 => (429, "{}".into()),
            _ => (200, MockServer::reply("ok", "length")),
        });
        let client = HttpClient::new(cfg(server.url())).unwrap();
        let c = client.complete("p", &GenerationConfig::default()).unwrap();
        assert_eq!((c.text.as_str(), c.truncated, c.attempts), ("ok", true, 3));
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let server = MockServer::start(|_| (401, "{}".into()));
        let client = HttpClient::new(cfg(server.url())).unwrap();
        assert!(matches!(client.complete("p", &GenerationConfig::default()), Err(Error::Auth(401))));
        assert_eq!(server.hits(), 1);
    }

    #[test]
    fn unreachable_host_gives_up_after_three_attempts() {
        let addr = {
            let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap()
        };
        let client = HttpClient::new(cfg(format!("http://{addr}/v1/chat/completions"))).unwrap();
        match client.complete("p", &GenerationConfig::default()) {
            Err(Error::Transport { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected transport error, got {other:?}"),
        }
    }

    #[test]
    fn missing_key_variable_is_a_config_error() {
        let mut c = cfg("http://127.0.0.1:1".into());
        c.api_key_env = Some("NETSCHEM_TEST_SURELY_UNSET_KEY".into());
        assert!(matches!(HttpClient::new(c), Err(Error::Config(_))));
    }

    struct Slow;
    impl ModelClient for Slow {
        fn complete(&self, prompt: &str, _g: &GenerationConfig) -> Result<Completion> {
            let n: u64 = prompt.parse().unwrap();
            thread::sleep(Duration::from_millis(30 - 5 * n));
            if n == 2 {
                return Err(Error::BadResponse("boom".into()));
            }
            Ok(Completion { text: format!("```\n{prompt}\n```"), truncated: false, attempts: 1 })
        }
    }

    #[test]
    fn pool_output_is_order_stamped() {
        let jobs: Vec<GenerationJob> =
            (0..6).map(|i| GenerationJob { id: format!("s{i}"), prompt: i.to_string() }).collect();
        let out = generate_all(&Slow, &jobs, &GenerationConfig::default(), 3).unwrap();
        let ids: Vec<&str> = out.iter().map(|o| o.meta.id.as_str()).collect();
        assert_eq!(ids, ["s0", "s1", "s2", "s3", "s4", "s5"]);
        assert_eq!(out[4].asc, "4");
        assert!(out[2].meta.error.is_some() && out[2].asc.is_empty());
    }

    #[test]
    fn replay_uses_embedded_netlist() {
        let v = crate::prompt::PromptVariant::new(1).unwrap();
        let p = crate::prompt::render_prompt(v, "R1 A B R", None, None).unwrap();
        let client = ReplayClient::new([("R1 A B R".to_string(), "resp".to_string())]);
        assert_eq!(client.complete(&p, &GenerationConfig::default()).unwrap().text, "resp");
        assert!(client.complete("other", &GenerationConfig::default()).is_err());
    }
}
