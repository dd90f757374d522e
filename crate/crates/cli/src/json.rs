//! JSON output with every float written to 17 significant digits.

use std::io::{self, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    body: &'a T,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

pub fn to_string<T: Serialize>(value: &T, reproducible: bool) -> serde_json::Result<String> {
    let timestamp = (!reproducible).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, Fixed17);
    Envelope { body: value, timestamp }.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Doc {
        b: f64,
        a: Vec<f64>,
        k: usize,
        none: Option<f64>,
    }

    #[test]
    fn floats_have_seventeen_digits_and_order_is_kept() {
        let doc = Doc { b: 0.1, a: vec![1.0, -0.25], k: 3, none: None };
        let s = to_string(&doc, true).unwrap();
        assert_eq!(
            s,
            "{\"b\":1.0000000000000001e-1,\"a\":[1.0000000000000000e0,-2.5000000000000000e-1],\"k\":3,\"none\":null}\n"
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn timestamp_only_when_not_reproducible() {
        let doc = Doc { b: 0.0, a: vec![], k: 0, none: None };
        assert!(!to_string(&doc, true).unwrap().contains("timestamp"));
        assert!(to_string(&doc, false).unwrap().contains("\"timestamp\":"));
    }
}
