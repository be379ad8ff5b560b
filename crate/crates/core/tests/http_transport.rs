use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use evoipd_core::ingest::{ChatTransport, HttpTransport, Message, TransportError};

/// Serves one canned `(status, body)` per connection; returns the request bodies.
fn serve(replies: Vec<(u16, &'static str)>) -> (String, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            seen.push(String::from_utf8(buf).unwrap());
            let mut out = stream;
            write!(
                out,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        seen
    });
    (url, handle)
}

const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"Cooperate always."}}]}"#;

fn transport(url: &str) -> HttpTransport {
    let mut t = HttpTransport::new(url, Some("k".into())).unwrap();
    t.backoff = Duration::ZERO;
    t
}

#[test]
fn retries_transient_failures() {
    let (url, h) = serve(vec![(500, "{}"), (429, "{}"), (200, OK)]);
    let reply = transport(&url).complete("m", &[Message::user("hi")]).unwrap();
    assert_eq!(reply, "Cooperate always.");
    let seen = h.join().unwrap();
    assert_eq!(seen.len(), 3);
    let body: serde_json::Value = serde_json::from_str(&seen[2]).unwrap();
    assert_eq!(body["model"], "m");
    assert_eq!(body["messages"][0]["content"], "hi");
}

#[test]
fn gives_up_after_three_attempts() {
    let (url, h) = serve(vec![(503, "busy"), (503, "busy"), (503, "busy")]);
    let err = transport(&url).complete("m", &[Message::user("hi")]).unwrap_err();
    assert!(matches!(err, TransportError::Http { status: 503, .. }), "{err:?}");
    assert_eq!(h.join().unwrap().len(), 3);
}

#[test]
fn auth_errors_are_not_retried() {
    let (url, h) = serve(vec![(401, "{}")]);
    let err = transport(&url).complete("m", &[Message::user("hi")]).unwrap_err();
    assert!(matches!(err, TransportError::Auth { status: 401 }), "{err:?}");
    assert_eq!(h.join().unwrap().len(), 1);
}

#[test]
fn malformed_body_is_reported() {
    let (url, h) = serve(vec![(200, r#"{"choices":[]}"#)]);
    let err = transport(&url).complete("m", &[Message::user("hi")]).unwrap_err();
    assert!(matches!(err, TransportError::Malformed(_)), "{err:?}");
    h.join().unwrap();
}
