mod common;

use std::path::PathBuf;
use std::time::Duration;

use artattack::models::{decode_request, WeightFile};
use artattack::{attack, AttackConfig, ClassifierOracle, Image, LinearSoftmaxOracle, MlpOracle, OracleError, RemoteOracle, ShapeKind};
use common::{StubReply, StubServer};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn naive_softmax(z: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = z.iter().map(|v| v.exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

#[test]
fn linear_oracle_matches_independent_matmul() {
    let (h, w, k) = (5, 4, 7);
    let oracle = LinearSoftmaxOracle::for_images(21, h, w, k);
    let d = h * w * 3;
    assert_eq!(oracle.weights().len(), k * d);
    let x = Image::from_fn(h, w, |r, c| [(r * w + c) as f64 / 20.0, 0.3, 1.0 - c as f64 / 4.0]);
    let logits: Vec<f64> = (0..k)
        .map(|i| {
            let mut z = oracle.bias()[i];
            for j in 0..d {
                z += oracle.weights()[i * d + j] * x.as_slice()[j];
            }
            z
        })
        .collect();
    let expected = naive_softmax(&logits);
    let got = oracle.probabilities(&x).unwrap();
    for (a, b) in got.as_slice().iter().zip(&expected) {
        assert!((a - b).abs() < 1e-9);
    }
    let again = LinearSoftmaxOracle::for_images(21, h, w, k);
    assert_eq!(again.weights(), oracle.weights());
    assert_ne!(LinearSoftmaxOracle::for_images(22, h, w, k).weights(), oracle.weights());
}

#[test]
fn linear_weights_have_expected_scale() {
    let d = 3072;
    let oracle = LinearSoftmaxOracle::from_seed(0, d, 10);
    let n = oracle.weights().len() as f64;
    let mean = oracle.weights().iter().sum::<f64>() / n;
    let var = oracle.weights().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    // N(0, 1/d): variance 1/3072
    assert!(mean.abs() < 5.0 / (n * d as f64).sqrt());
    assert!((var * d as f64 - 1.0).abs() < 0.05, "{var}");
}

#[test]
fn linear_oracle_converts_to_an_equivalent_mlp() {
    let oracle = LinearSoftmaxOracle::for_images(1, 3, 3, 4);
    let mlp = oracle.to_mlp();
    let x = Image::from_fn(3, 3, |r, c| [r as f64 / 3.0, c as f64 / 3.0, 0.5]);
    let a = oracle.probabilities(&x).unwrap();
    let b = mlp.probabilities(&x).unwrap();
    for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn mlp_fixture_matches_reference_forward_pass() {
    let oracle = MlpOracle::load(fixture("mlp_small.json")).unwrap();
    assert_eq!(oracle.num_classes(), 4);
    assert_eq!(oracle.input_dim(), 12);
    let values: Vec<f64> = (0..12).map(|k| (k * 7 % 12) as f64 / 11.0).collect();
    let x = Image::new(2, 2, values).unwrap();
    // from tests/fixtures/mlp_reference.py
    let logits = [5.154955196363637, -1.1033735290909092, -1.8875154318181822, -0.6980951118181818];
    let probs = [0.9943723147859623, 0.0019036688029919798, 0.0008690462530776456, 0.0028549701579681295];
    for (a, b) in oracle.logits(x.as_slice()).iter().zip(logits) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    for (a, b) in oracle.probabilities(&x).unwrap().as_slice().iter().zip(probs) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert!(matches!(oracle.probabilities(&Image::zeros(3, 3)), Err(OracleError::DimensionMismatch { .. })));
}

#[test]
fn weight_file_round_trips_and_rejects_bad_shapes() {
    let text = std::fs::read_to_string(fixture("mlp_small.json")).unwrap();
    let oracle = MlpOracle::from_json(&text).unwrap();
    let file = oracle.to_weight_file();
    let again = MlpOracle::from_json(&serde_json::to_string(&file).unwrap()).unwrap();
    assert_eq!(again, oracle);

    let mut short: WeightFile = serde_json::from_str(&text).unwrap();
    short.weights[1].pop();
    assert!(MlpOracle::from_weight_file(short).is_err());
    let mut unchained: WeightFile = serde_json::from_str(&text).unwrap();
    unchained.arch[1].input = 5;
    assert!(MlpOracle::from_weight_file(unchained).is_err());
    assert!(MlpOracle::from_json("{\"arch\": []}").is_err());
}

fn quick(url: &str, k: usize) -> RemoteOracle {
    RemoteOracle::with_options(url, k, Duration::from_secs(5), 2)
}

#[test]
fn remote_round_trip_and_one_request_per_call() {
    let server = StubServer::start(|_, req| {
        let img = decode_request(req).unwrap();
        // echo something derived from the image so the payload is exercised
        let m = img.get(0, 0, 0);
        StubReply::Json(200, format!("{{\"probs\": [{m}, {}]}}", 1.0 - m))
    });
    let oracle = quick(&server.url, 2);
    for (i, v) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let p = oracle.probabilities(&Image::filled(3, 2, v)).unwrap();
        assert!((p.get(0) - v).abs() < 1e-7);
        assert_eq!(server.count(), i + 1);
    }
}

#[test]
fn remote_rejects_unnormalised_probabilities() {
    let server = StubServer::start(|_, _| StubReply::Json(200, "{\"probs\": [0.25, 0.25]}".into()));
    let err = quick(&server.url, 2).probabilities(&Image::zeros(1, 1)).unwrap_err();
    assert!(matches!(err, OracleError::Probabilities(_)), "{err}");
}

#[test]
fn remote_accepts_sums_within_tolerance() {
    let server = StubServer::start(|_, _| StubReply::Json(200, "{\"probs\": [0.5005, 0.5]}".into()));
    let p = quick(&server.url, 2).probabilities(&Image::zeros(1, 1)).unwrap();
    assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn remote_wrong_class_count_and_garbage_fail() {
    let server = StubServer::start(|_, _| StubReply::Json(200, "{\"probs\": [0.5, 0.5]}".into()));
    assert!(matches!(quick(&server.url, 3).probabilities(&Image::zeros(1, 1)), Err(OracleError::ClassCount { .. })));
    let server = StubServer::start(|_, _| StubReply::Json(200, "not json".into()));
    assert!(matches!(quick(&server.url, 2).probabilities(&Image::zeros(1, 1)), Err(OracleError::MalformedResponse(_))));
}

#[test]
fn remote_http_errors_are_not_retried() {
    let server = StubServer::start(|_, _| StubReply::Json(503, "{\"error\": \"busy\"}".into()));
    let err = quick(&server.url, 2).probabilities(&Image::zeros(1, 1)).unwrap_err();
    assert!(matches!(err, OracleError::HttpStatus { status: 503, .. }), "{err}");
    assert_eq!(server.count(), 1);
}

#[test]
fn remote_retries_dropped_connections() {
    let server = StubServer::start(|n, _| {
        if n == 1 {
            StubReply::Drop
        } else {
            StubReply::Json(200, "{\"probs\": [0.1, 0.9]}".into())
        }
    });
    let p = quick(&server.url, 2).probabilities(&Image::zeros(1, 1)).unwrap();
    assert_eq!(p.argmax(), 1);
    assert_eq!(server.count(), 2);
}

#[test]
fn attack_aborts_on_invalid_remote_answer_with_query_count() {
    let server = StubServer::start(|n, _| {
        if n < 4 {
            StubReply::Json(200, "{\"probs\": [0.5, 0.3, 0.2]}".into())
        } else {
            StubReply::Json(200, "{\"probs\": [0.2, 0.2, 0.1]}".into())
        }
    });
    let oracle = quick(&server.url, 3);
    let cfg = AttackConfig { budget: 50, seed: 1, ..AttackConfig::new(ShapeKind::Circle, 5, 2) };
    let err = attack(&oracle, &Image::filled(4, 4, 0.5), 0, &cfg).unwrap_err();
    assert_eq!(err.queries_used(), Some(4));
    assert_eq!(server.count(), 4);
}
