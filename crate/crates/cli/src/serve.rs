//! Echo backend of the adapter protocol; each request gets its reactants back
//! as the only candidate.

use std::io::{BufRead, Write};

use mechrxn::hybrid::{AdapterRequest, EchoPredictor, Predictor};
use serde_json::{json, Value};

pub fn respond(line: &str) -> Value {
    match serde_json::from_str::<AdapterRequest>(line) {
        Ok(req) => match EchoPredictor.predict(&req.reactants, req.top_k) {
            Ok(c) => json!({"id": req.id, "candidates": c}),
            Err(e) => json!({"id": req.id, "error": e.to_string()}),
        },
        Err(e) => {
            let id = serde_json::from_str::<Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(Value::as_u64))
                .map_or(Value::Null, Value::from);
            json!({"id": id, "error": format!("malformed request: {e}")})
        }
    }
}

pub fn serve_echo() -> anyhow::Result<()> {
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", json!({"hello": {"name": "echo", "version": env!("CARGO_PKG_VERSION")}}))?;
    out.flush()?;
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(out, "{}", respond(&line))?;
        out.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_and_errors() {
        let v = respond(r#"{"id":4,"reactants":"CBr.[OH-]","top_k":2}"#);
        assert_eq!(v["id"], 4);
        assert_eq!(v["candidates"][0]["products"], "CBr.[OH-]");
        let v = respond(r#"{"id":5,"reactants":3}"#);
        assert_eq!(v["id"], 5);
        assert!(v["error"].is_string());
        assert!(respond("not json")["id"].is_null());
        assert!(respond(r#"{"id":"7"}"#)["id"].is_null());
    }
}
