//! Test-only oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use artattack::models::{decode_request, ProbabilityRequest};
use artattack::{Genome, Image, ShapeKind};

/// Pixel index from a genome entry: `min(floor(v * dim + 0.5), dim - 1)`.
fn idx(v: f64, dim: usize) -> i64 {
    ((v * dim as f64 + 0.5).floor() as i64).min(dim as i64 - 1)
}

/// Per-pixel membership test written directly from the shape definitions,
/// checking every pixel of the image.
pub fn brute_force_member(kind: ShapeKind, y: &[f64], h: usize, w: usize, beta: f64, p: i64, q: i64) -> bool {
    match kind {
        ShapeKind::Circle => {
            let (cr, cc) = (idx(y[1], h), idx(y[0], w));
            let r = (y[2] * (h + w) as f64 / beta + 0.5).floor() as i64;
            (p - cr) * (p - cr) + (q - cc) * (q - cc) <= r * r
        }
        ShapeKind::Triangle => {
            let v = [
                (idx(y[0], h), idx(y[1], w)),
                (idx(y[2], h), idx(y[3], w)),
                (idx(y[4], h), idx(y[5], w)),
            ];
            let cross = |a: (i64, i64), b: (i64, i64), c: (i64, i64)| {
                (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
            };
            let area = cross(v[0], v[1], v[2]);
            if area == 0 {
                return false;
            }
            let e = [cross(v[0], v[1], (p, q)), cross(v[1], v[2], (p, q)), cross(v[2], v[0], (p, q))];
            if area > 0 {
                e.iter().all(|&x| x >= 0)
            } else {
                e.iter().all(|&x| x <= 0)
            }
        }
        ShapeKind::Rectangle => {
            let (r1, r2) = (idx(y[0], h), idx(y[3], h));
            let (c1, c2) = (idx(y[1], w), idx(y[2], w));
            r1.min(r2) <= p && p <= r1.max(r2) && c1.min(c2) <= q && q <= c1.max(c2)
        }
    }
}

fn colour_alpha(kind: ShapeKind, y: &[f64]) -> ([f64; 3], f64) {
    let a = kind.arity();
    ([y[a - 4], y[a - 3], y[a - 2]], y[a - 1])
}

/// Brute-force renderer: composite every shape by full-image membership
/// scans, then clip into the ε-ball (skipped when `epsilon` is `None`).
pub fn brute_force_render(genome: &Genome, x: &Image, epsilon: Option<f64>, beta: f64) -> Vec<f64> {
    let (h, w) = x.dims();
    let mut out = x.as_slice().to_vec();
    for y in genome.rows() {
        let (colour, alpha) = colour_alpha(genome.kind(), y);
        for p in 0..h {
            for q in 0..w {
                if brute_force_member(genome.kind(), y, h, w, beta, p as i64, q as i64) {
                    let o = (p * w + q) * 3;
                    for (v, c) in out[o..o + 3].iter_mut().zip(colour) {
                        *v = ((1.0 - alpha) * *v + alpha * c).clamp(0.0, 1.0);
                    }
                }
            }
        }
    }
    if let Some(eps) = epsilon {
        for (v, &orig) in out.iter_mut().zip(x.as_slice()) {
            let lo = (orig - eps).max(0.0);
            let hi = (orig + eps).min(1.0);
            *v = v.max(lo).min(hi);
        }
    }
    out
}

/// Minimal HTTP/1.1 server answering every request through `handler`.
pub struct StubServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

pub enum StubReply {
    Json(u16, String),
    /// Close the connection without answering.
    Drop,
}

impl StubServer {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(usize, &ProbabilityRequest) -> StubReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let count = requests.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let n = count.fetch_add(1, Ordering::SeqCst) + 1;
                serve(stream, n, &handler);
            }
        });
        Self { url, requests }
    }

    pub fn count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn serve<F>(stream: TcpStream, n: usize, handler: &F)
where
    F: Fn(usize, &ProbabilityRequest) -> StubReply,
{
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    reader.read_line(&mut request_line).unwrap();
    assert!(request_line.starts_with("POST /v1/probabilities "), "{request_line}");
    let mut length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        if line == "\r\n" || line.is_empty() {
            break;
        }
        let lower = line.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            length = v.trim().parse().unwrap();
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let req: ProbabilityRequest = serde_json::from_slice(&body).unwrap();
    decode_request(&req).expect("client sent a decodable image");
    let mut stream = stream;
    match handler(n, &req) {
        StubReply::Drop => {}
        StubReply::Json(status, text) => {
            let resp = format!(
                "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
            stream.write_all(resp.as_bytes()).unwrap();
        }
    }
}
