use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{checked_probs, ClassifierOracle, OracleError};
use crate::image::{Image, CHANNELS};
use crate::objective::ProbVector;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_RETRIES: u32 = 2;
pub const ROUTE: &str = "/v1/probabilities";

/// Request body of `POST <endpoint>/v1/probabilities`.
///
/// `data` is base64 of `height * width * 3` little-endian `f32`s in
/// (row, col, channel) order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRequest {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub dtype: String,
    pub data: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityResponse {
    pub probs: Vec<f64>,
}

pub fn encode_request(image: &Image) -> ProbabilityRequest {
    let bytes: Vec<u8> = image
        .as_slice()
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    ProbabilityRequest {
        height: image.height(),
        width: image.width(),
        channels: CHANNELS,
        dtype: "f32le".to_string(),
        data: STANDARD.encode(bytes),
    }
}

/// Server-side decoding of a request, mainly for stub servers and tests.
pub fn decode_request(req: &ProbabilityRequest) -> Result<Image, String> {
    if req.channels != CHANNELS {
        return Err(format!("expected 3 channels, got {}", req.channels));
    }
    if req.dtype != "f32le" {
        return Err(format!("unsupported dtype {:?}", req.dtype));
    }
    let bytes = STANDARD.decode(&req.data).map_err(|e| e.to_string())?;
    if bytes.len() % 4 != 0 {
        return Err(format!("payload of {} bytes is not a whole number of f32s", bytes.len()));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Image::new(req.height, req.width, values).map_err(|e| e.to_string())
}

/// Oracle served over HTTP.
///
/// Each call is one logical query. Only transport failures (connection,
/// timeout, I/O) are retried; any HTTP response ends the call.
#[derive(Clone, Debug)]
pub struct RemoteOracle {
    url: String,
    num_classes: usize,
    timeout: Duration,
    retries: u32,
    agent: ureq::Agent,
}

impl RemoteOracle {
    pub fn new(endpoint: &str, num_classes: usize) -> Self {
        Self::with_options(endpoint, num_classes, DEFAULT_TIMEOUT, DEFAULT_RETRIES)
    }

    pub fn with_options(endpoint: &str, num_classes: usize, timeout: Duration, retries: u32) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: format!("{}{}", endpoint.trim_end_matches('/'), ROUTE),
            num_classes,
            timeout,
            retries,
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn retries(&self) -> u32 {
        self.retries
    }

    fn post_once(&self, body: &str) -> Result<(u16, String), ureq::Error> {
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(body)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string()?;
        Ok((status, text))
    }
}

fn is_transport(err: &ureq::Error) -> bool {
    matches!(
        err,
        ureq::Error::Io(_)
            | ureq::Error::Timeout(_)
            | ureq::Error::ConnectionFailed
            | ureq::Error::HostNotFound
            | ureq::Error::Protocol(_)
    )
}

impl ClassifierOracle for RemoteOracle {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn probabilities(&self, image: &Image) -> Result<ProbVector, OracleError> {
        let body = serde_json::to_string(&encode_request(image))
            .map_err(|e| OracleError::MalformedResponse(format!("cannot encode request: {e}")))?;
        let mut attempts = 0;
        let (status, text) = loop {
            attempts += 1;
            match self.post_once(&body) {
                Ok(v) => break v,
                Err(e) if is_transport(&e) && attempts <= self.retries => continue,
                Err(e) => {
                    return Err(OracleError::Transport {
                        attempts,
                        message: e.to_string(),
                    })
                }
            }
        };
        if status != 200 {
            return Err(OracleError::HttpStatus { status, body: text });
        }
        let resp: ProbabilityResponse =
            serde_json::from_str(&text).map_err(|e| OracleError::MalformedResponse(e.to_string()))?;
        checked_probs(resp.probs, self.num_classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_round_trip_is_f32_exact() {
        let img = Image::from_fn(2, 3, |r, c| [0.25 * r as f64, 0.125 * c as f64, 1.0]);
        let req = encode_request(&img);
        assert_eq!(req.dtype, "f32le");
        assert_eq!(req.channels, 3);
        assert_eq!(STANDARD.decode(&req.data).unwrap().len(), 2 * 3 * 3 * 4);
        assert_eq!(decode_request(&req).unwrap(), img);
    }

    #[test]
    fn request_json_shape() {
        let v = serde_json::to_value(encode_request(&Image::zeros(1, 1))).unwrap();
        assert_eq!(v["height"], 1);
        assert_eq!(v["width"], 1);
        assert_eq!(v["channels"], 3);
        assert_eq!(v["dtype"], "f32le");
        assert_eq!(v["data"], STANDARD.encode([0u8; 12]));
    }

    #[test]
    fn url_joins_route() {
        assert_eq!(RemoteOracle::new("http://h:1/", 10).url(), "http://h:1/v1/probabilities");
    }

    #[test]
    fn unreachable_endpoint_is_transport_error_after_retries() {
        // port 9 on localhost is almost never listening
        let o = RemoteOracle::with_options("http://127.0.0.1:9", 3, Duration::from_millis(500), 2);
        match o.probabilities(&Image::zeros(1, 1)) {
            Err(OracleError::Transport { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
