//! The generation-service client against an in-process HTTP stub.

use std::net::TcpListener;
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

use evschema::corpus::{Document, Lexicon, Sentence};
use evschema::pipeline::{exit_code, extract_candidates, Backend};
use evschema::promptgen::{build_prompt, generate_rule_based, parse_candidates, GeneratorClient};
use evschema::{BackendError, Error};

const DEMO_X: &str = "The threat posed by the Iraqi dictator justifies a war, which is sure to kill thousands of innocent children and women.";
const DEMO_Y: &str = "Event war has arguments: Iraqi dictator; Event kill has arguments: children, women.";

fn demo_lexicon() -> Lexicon {
    Lexicon::new(
        ["war", "kill"],
        ["threat", "posed", "justifies"],
        ["iraqi dictator", "children", "women"],
    )
}

/// Reply to one request: status code and body.
type Handler = dyn Fn(&Value) -> (u16, String) + Send + Sync;

struct Stub {
    server: Arc<Server>,
    url: String,
    worker: Option<JoinHandle<()>>,
}

impl Stub {
    fn start(handler: impl Fn(&Value) -> (u16, String) + Send + Sync + 'static) -> Self {
        Self::start_with_delay(Duration::ZERO, handler)
    }

    fn start_with_delay(delay: Duration, handler: impl Fn(&Value) -> (u16, String) + Send + Sync + 'static) -> Self {
        let server = Arc::new(Server::http("127.0.0.1:0").unwrap());
        let url = format!("http://{}", server.server_addr().to_ip().unwrap());
        let handler: Box<Handler> = Box::new(handler);
        let worker = {
            let server = Arc::clone(&server);
            thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let mut body = String::new();
                    request.as_reader().read_to_string(&mut body).unwrap();
                    let value: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
                    let (status, reply) = if request.url() == "/generate" {
                        handler(&value)
                    } else {
                        (404, json!({"error": "not found"}).to_string())
                    };
                    thread::sleep(delay);
                    let header = Header::from_bytes("Content-Type", "application/json").unwrap();
                    let _ = request.respond(
                        Response::from_string(reply)
                            .with_status_code(status)
                            .with_header(header),
                    );
                }
            })
        };
        Stub {
            server,
            url,
            worker: Some(worker),
        }
    }
}

impl Drop for Stub {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

/// Checks the request shape and answers the demo sentence with its expected
/// output, anything else with no events.
fn demo_service(req: &Value) -> (u16, String) {
    let well_formed = req["input"].is_string() && req["prompt"].is_string() && req["soft_tokens"].is_u64();
    if !well_formed {
        return (400, json!({"error": "bad request"}).to_string());
    }
    let output = if req["input"] == DEMO_X { DEMO_Y } else { "" };
    (200, json!({ "output": output }).to_string())
}

fn client(url: &str) -> GeneratorClient {
    GeneratorClient::new(url, Duration::from_secs(5)).unwrap()
}

#[test]
fn demo_request_parses_into_two_events() {
    let stub = Stub::start(demo_service);
    let sentence = Sentence::new("t1", DEMO_X);
    let y = client(&stub.url)
        .generate(&build_prompt(&sentence, &demo_lexicon()))
        .unwrap();
    assert_eq!(y, DEMO_Y);
    let (events, diag) = parse_candidates(&y, &sentence);
    assert!(diag.is_clean());
    assert_eq!(events.len(), 2);
    assert_eq!(events, generate_rule_based(&sentence, &demo_lexicon()));
}

#[test]
fn hundred_round_trips_conform() {
    let stub = Stub::start(demo_service);
    let c = client(&format!("{}/", stub.url));
    let lexicon = demo_lexicon();
    for i in 0..100 {
        let text = if i % 2 == 0 {
            DEMO_X.to_owned()
        } else {
            format!("Sentence {i} mentions no war.")
        };
        let y = c.generate(&build_prompt(&Sentence::new("s", text), &lexicon)).unwrap();
        assert_eq!(y.is_empty(), i % 2 == 1);
    }
}

#[test]
fn request_body_matches_wire_format() {
    let stub = Stub::start(|req| {
        let keys: Vec<&String> = req.as_object().unwrap().keys().collect();
        (
            200,
            json!({ "output": format!("{keys:?} {}", req["soft_tokens"]) }).to_string(),
        )
    });
    let y = client(&stub.url)
        .generate(&build_prompt(&Sentence::new("s", "war"), &demo_lexicon()))
        .unwrap();
    assert_eq!(y, r#"["input", "prompt", "soft_tokens"] 20"#);
}

#[test]
fn error_status_is_reported_with_message() {
    let stub = Stub::start(|_| (503, json!({"error": "model not loaded"}).to_string()));
    let err = client(&stub.url)
        .generate(&build_prompt(&Sentence::new("s", "war"), &demo_lexicon()))
        .unwrap_err();
    match err {
        BackendError::Status { status, message } => {
            assert_eq!(status, 503);
            assert_eq!(message, "model not loaded");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_output_field() {
    let stub = Stub::start(|_| (200, json!({"text": "Event war has arguments: none."}).to_string()));
    let err = client(&stub.url)
        .generate(&build_prompt(&Sentence::new("s", "war"), &demo_lexicon()))
        .unwrap_err();
    assert!(matches!(err, BackendError::MissingOutput), "{err:?}");
}

#[test]
fn slow_service_times_out() {
    let stub = Stub::start_with_delay(Duration::from_millis(1500), demo_service);
    let c = GeneratorClient::new(&stub.url, Duration::from_millis(200)).unwrap();
    let err = c
        .generate(&build_prompt(&Sentence::new("s", "war"), &demo_lexicon()))
        .unwrap_err();
    assert!(matches!(err, BackendError::Timeout { .. }), "{err:?}");
}

fn dead_url() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}

#[test]
fn refused_connection() {
    let err = client(&dead_url())
        .generate(&build_prompt(&Sentence::new("s", "war"), &demo_lexicon()))
        .unwrap_err();
    assert!(matches!(err, BackendError::Connect { .. }), "{err:?}");
}

fn demo_docs() -> Vec<Document> {
    vec![Document {
        doc_id: "d".into(),
        sentences: vec![
            Sentence::new("t1", DEMO_X),
            Sentence::new("t2", "No war here, only women."),
        ],
    }]
}

#[test]
fn fallback_uses_rule_backend() {
    let docs = demo_docs();
    let lexicon = demo_lexicon();
    let backend = Backend::External {
        url: dead_url(),
        timeout_secs: 2.0,
        fallback: true,
    };
    let got = extract_candidates(&docs, &lexicon, &backend).unwrap();
    let want = extract_candidates(&docs, &lexicon, &Backend::Rule).unwrap();
    assert_eq!(got, want);
    assert_eq!(got[0].events.len(), 2);
}

#[test]
fn failure_without_fallback_is_a_backend_error() {
    let backend = Backend::External {
        url: dead_url(),
        timeout_secs: 2.0,
        fallback: false,
    };
    let err = extract_candidates(&demo_docs(), &demo_lexicon(), &backend).unwrap_err();
    assert!(matches!(err, Error::Backend(BackendError::Connect { .. })), "{err}");
    assert_eq!(exit_code(&err), 4);
}

#[test]
fn external_backend_aligns_spans() {
    let stub = Stub::start(demo_service);
    let backend = Backend::External {
        url: stub.url.clone(),
        timeout_secs: 5.0,
        fallback: false,
    };
    let got = extract_candidates(&demo_docs(), &demo_lexicon(), &backend).unwrap();
    let rule = generate_rule_based(&Sentence::new("t1", DEMO_X), &demo_lexicon());
    assert_eq!(got[0].events, rule);
    assert!(got[1].events.is_empty());
}
