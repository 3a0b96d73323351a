//! Golden values for the local embedder and wire tests for the remote client.
//!
//! Golden numbers were produced by a separate Python implementation of the
//! hashing scheme and frozen here.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use cec_core::embedding::{cosine, Backend, EmbedError, Embedder, EmbedderConfig, LocalEmbedder};
use cec_core::{embed_batch, RemoteEmbedder};

fn raw_buckets(text: &str) -> Vec<(usize, f64)> {
    let v = LocalEmbedder::default().embed(text);
    v.values().iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, x)| (i, *x)).collect()
}

#[test]
fn golden_bucket_layout() {
    // unnormalized bucket weights from the reference implementation; every
    // weight is ±1 here, so the normalized value is weight / sqrt(count)
    let cases: [(&str, &[(usize, f64)]); 2] = [
        ("你好", &[(70, 1.0), (94, 1.0), (163, 1.0)]),
        (
            "预留紧急联系人",
            &[
                (13, 1.0),
                (51, 1.0),
                (66, 1.0),
                (67, 1.0),
                (88, -1.0),
                (100, 1.0),
                (124, -1.0),
                (144, 1.0),
                (194, -1.0),
                (195, 1.0),
                (197, -1.0),
                (250, 1.0),
                (252, 1.0),
            ],
        ),
    ];
    for (text, expected) in cases {
        let got = raw_buckets(text);
        let scale = (expected.len() as f64).sqrt();
        assert_eq!(got.len(), expected.len(), "{text}");
        for ((gi, gv), (ei, ev)) in got.iter().zip(expected) {
            assert_eq!(gi, ei, "{text}");
            assert!((gv * scale - ev).abs() < 1e-12, "{text}: bucket {gi}");
        }
    }
}

#[test]
fn golden_cosines() {
    let e = LocalEmbedder::default();
    let cos = |a: &str, b: &str| cosine(&e.embed(a), &e.embed(b)).unwrap();

    // character-disjoint sentences
    let disjoint = cos("今日晴朗无云", "我爱北京天安门");
    assert!(disjoint.abs() < 0.3);
    assert_eq!(disjoint, 0.0);

    // the two valid corrections differ by one comma
    let y1 = "李先生你好，您的欠款已经逾期了，预留紧急联系人是否真实有效？";
    let y2 = "李先生你好，您的欠款已经逾期了预留紧急联系人是否真实有效？";
    assert!((cos(y1, y2) - 0.9655068046526193).abs() < 1e-12);

    let x = "李先生你好，您的欠款已经逾期了，预溜紧急耳关系人是否真实有效？";
    assert!((cos(x, y1) - 0.8881370860980516).abs() < 1e-12);
}

#[test]
fn unit_norm_for_nonempty_text() {
    let e = LocalEmbedder::new(64);
    for text in ["a", "ab", "你好世界", "，。！", "   "] {
        let v = e.embed(text);
        assert!((v.norm() - 1.0).abs() < 1e-9, "{text:?}");
        assert_eq!(v.dim(), 64);
    }
}

#[test]
fn free_function_uses_config() {
    let cfg = EmbedderConfig { dim: 32, ..Default::default() };
    let out = embed_batch(&["x", "", "y"], &cfg).unwrap();
    assert_eq!(out.len(), 3);
    assert!(out.iter().all(|v| v.dim() == 32));
    assert!(out[1].is_zero());
}

/// Minimal HTTP/1.1 server answering each request with `respond(texts)`.
fn mock_server<F>(respond: F) -> (String, Arc<AtomicUsize>)
where
    F: Fn(Vec<String>) -> (u16, String) + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/embed", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let respond = Arc::new(respond);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let respond = respond.clone();
            let counter = counter.clone();
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = line.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            content_length = v.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0u8; content_length];
                reader.read_exact(&mut body).unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let parsed: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let texts =
                    parsed["texts"].as_array().unwrap().iter().map(|t| t.as_str().unwrap().to_string()).collect();
                let (status, payload) = respond(texts);
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                let _ = stream.write_all(reply.as_bytes());
            });
        }
    });
    (url, hits)
}

fn remote_cfg(url: &str, dim: usize, batch: usize) -> EmbedderConfig {
    EmbedderConfig {
        backend: Backend::Remote,
        dim,
        remote_url: Some(url.to_string()),
        remote_timeout_ms: 5_000,
        remote_batch_size: batch,
    }
}

// encodes each text as [len, first codepoint]
fn echo_rows(texts: Vec<String>) -> (u16, String) {
    let rows: Vec<Vec<f64>> = texts
        .iter()
        .map(|t| vec![t.chars().count() as f64, t.chars().next().map_or(0.0, |c| c as u32 as f64)])
        .collect();
    (200, serde_json::json!({ "embeddings": rows }).to_string())
}

#[test]
fn remote_preserves_order_across_chunks() {
    let (url, hits) = mock_server(echo_rows);
    let embedder = RemoteEmbedder::new(&remote_cfg(&url, 2, 3)).unwrap();
    let texts: Vec<String> = (0..11).map(|i| "x".repeat(i + 1)).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let out = embedder.embed_batch(&refs).unwrap();
    assert_eq!(out.len(), 11);
    for (i, v) in out.iter().enumerate() {
        assert_eq!(v.values()[0], (i + 1) as f64);
    }
    assert_eq!(hits.load(Ordering::SeqCst), 4);
}

#[test]
fn remote_shape_errors() {
    let (url, _) = mock_server(|texts| {
        let rows: Vec<Vec<f64>> = texts.iter().skip(1).map(|_| vec![1.0, 2.0]).collect();
        (200, serde_json::json!({ "embeddings": rows }).to_string())
    });
    let embedder = RemoteEmbedder::new(&remote_cfg(&url, 2, 8)).unwrap();
    assert!(matches!(embedder.embed_batch(&["a", "b"]), Err(EmbedError::RemoteShape(_))));

    let (url, _) = mock_server(echo_rows);
    let embedder = RemoteEmbedder::new(&remote_cfg(&url, 3, 8)).unwrap();
    assert!(matches!(embedder.embed_batch(&["a"]), Err(EmbedError::RemoteShape(_))));

    let (url, _) = mock_server(|_| (200, "{\"vectors\": []}".to_string()));
    let embedder = RemoteEmbedder::new(&remote_cfg(&url, 2, 8)).unwrap();
    assert!(matches!(embedder.embed_batch(&["a"]), Err(EmbedError::RemoteShape(_))));
}

#[test]
fn remote_failures_are_atomic() {
    // the second chunk fails; nothing is returned
    let (url, _) =
        mock_server(|texts| if texts.iter().any(|t| t == "boom") { (500, "{}".to_string()) } else { echo_rows(texts) });
    let embedder = RemoteEmbedder::new(&remote_cfg(&url, 2, 2)).unwrap();
    let err = embedder.embed_batch(&["a", "b", "boom", "c"]).unwrap_err();
    assert!(matches!(err, EmbedError::RemoteUnavailable(_)), "{err}");
}

#[test]
fn remote_unreachable() {
    // bind then drop to get a port nobody listens on
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = remote_cfg(&format!("http://127.0.0.1:{port}/embed"), 2, 8);
    let err = cfg.build().unwrap().embed_batch(&["a"]).unwrap_err();
    assert!(matches!(err, EmbedError::RemoteUnavailable(_)), "{err}");
}
