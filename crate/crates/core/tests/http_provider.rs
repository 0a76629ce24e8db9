//! The HTTP provider against a throwaway chat-completions server on
//! localhost.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use gazegraph::llm::prompt::serialize_kg_output;
use gazegraph::llm::{
    extract_kg, render_prompt1, CallContext, ExtractionSettings, GenerationSettings, HttpProvider,
    LlmProvider, ProviderError,
};
use gazegraph::{Edge, KnowledgeGraph, Node, Sentence, Task};

struct Captured {
    request_line: String,
    authorization: Option<String>,
    body: serde_json::Value,
}

/// Serves one canned `(status, body)` per incoming request, in order, and
/// reports what each request carried.
fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap();
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            tx.send(Captured {
                request_line: request_line.trim_end().to_string(),
                authorization,
                body: serde_json::from_slice(&buf).unwrap_or(serde_json::Value::Null),
            })
            .unwrap();
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (url, rx)
}

fn completion(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
        .to_string()
}

fn sentence() -> Sentence {
    Sentence::new("h1", Task::Task1, "Reynolds signed with MGM")
}

#[test]
fn posts_chat_request_and_reads_first_choice() {
    let (url, rx) = serve(vec![(200, completion("hello back"))]);
    let provider = HttpProvider::new(url, "secret", Duration::from_secs(5));
    let request = render_prompt1(&sentence(), &GenerationSettings::default());
    let resp = provider
        .complete(
            &request,
            CallContext {
                sentence_id: "h1",
                attempt: 1,
            },
        )
        .unwrap();
    assert_eq!(resp.raw_text, "hello back");
    assert_eq!(provider.call_count(), 1);

    let got = rx.recv().unwrap();
    assert!(got.request_line.starts_with("POST /v1/chat/completions"));
    assert_eq!(got.authorization.as_deref(), Some("Bearer secret"));
    assert_eq!(got.body["model"], "gpt-4o");
    assert_eq!(got.body["temperature"], 0.7);
    assert_eq!(got.body["messages"][0]["role"], "user");
    assert_eq!(got.body["messages"][0]["content"], request.rendered_text);
}

#[test]
fn server_error_and_malformed_body() {
    let (url, _rx) = serve(vec![
        (500, "{}".into()),
        (200, "{\"choices\": []}".into()),
        (200, "not json".into()),
    ]);
    let provider = HttpProvider::new(url, "k", Duration::from_secs(5));
    let request = render_prompt1(&sentence(), &GenerationSettings::default());
    let ctx = || CallContext {
        sentence_id: "h1",
        attempt: 1,
    };
    assert!(matches!(
        provider.complete(&request, ctx()),
        Err(ProviderError::Http(_))
    ));
    assert!(matches!(
        provider.complete(&request, ctx()),
        Err(ProviderError::MalformedResponse(_))
    ));
    assert!(matches!(
        provider.complete(&request, ctx()),
        Err(ProviderError::MalformedResponse(_))
    ));
    assert_eq!(provider.call_count(), 3);
}

#[test]
fn unreachable_endpoint_is_an_http_error() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let provider = HttpProvider::new(
        format!("http://127.0.0.1:{port}/"),
        "k",
        Duration::from_secs(2),
    );
    let request = render_prompt1(&sentence(), &GenerationSettings::default());
    let r = provider.complete(
        &request,
        CallContext {
            sentence_id: "h1",
            attempt: 1,
        },
    );
    assert!(matches!(r, Err(ProviderError::Http(_))));
}

#[test]
fn extraction_over_http() {
    let kg = KnowledgeGraph::new(
        "h1",
        vec![
            Node::new(1, "Person", "Reynolds"),
            Node::new(2, "Organization", "MGM"),
        ],
        vec![Edge::new(1, 2, "signed with")],
    );
    let (url, rx) = serve(vec![
        (200, completion("garbage")),
        (200, completion(&serialize_kg_output(&kg))),
        (200, completion("also garbage")),
    ]);
    let provider = HttpProvider::new(url, "k", Duration::from_secs(5));
    let out = extract_kg(&sentence(), &provider, &ExtractionSettings::default()).unwrap();
    assert_eq!(out.provenance.chosen_trial, Some(1));
    assert_eq!(out.nodes, kg.nodes);
    assert_eq!(provider.call_count(), 3);
    assert_eq!(rx.iter().take(3).count(), 3);
}
