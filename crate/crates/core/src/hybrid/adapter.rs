//! External predictor protocol: newline-delimited JSON over a child process.
//!
//! ```text
//! <- {"hello":{"name":"echo","version":"1"}}
//! -> {"id":0,"reactants":"CBr.[OH-]","top_k":5}
//! <- {"id":0,"candidates":[{"products":"CO.[Br-]","log_likelihood":-0.1}]}
//! ```
//!
//! An adapter may answer `{"id":0,"error":"..."}`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{canonical_smiles, parse_smiles};

pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(30);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error("adapter did not answer within {0:?}")]
    Timeout(Duration),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("adapter reported: {0}")]
    Remote(String),
    #[error("adapter process: {0}")]
    Process(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub name: String,
    pub version: String,
}

#[derive(Serialize, Deserialize)]
struct HelloLine {
    hello: Hello,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub id: u64,
    pub reactants: String,
    pub top_k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterCandidate {
    pub products: String,
    pub log_likelihood: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterResponse {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<AdapterCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub trait Predictor: Send + Sync {
    fn name(&self) -> &str;
    /// Candidates sorted by descending log-likelihood, at most `top_k`.
    fn predict(&self, reactants: &str, top_k: usize) -> Result<Vec<AdapterCandidate>, PredictorError>;
}

/// Returns the reactants as the only candidate, log-likelihood 0.
pub struct EchoPredictor;

impl Predictor for EchoPredictor {
    fn name(&self) -> &str {
        "echo"
    }

    fn predict(&self, reactants: &str, top_k: usize) -> Result<Vec<AdapterCandidate>, PredictorError> {
        Ok(if top_k == 0 {
            Vec::new()
        } else {
            vec![AdapterCandidate {
                products: reactants.to_string(),
                log_likelihood: 0.0,
            }]
        })
    }
}

/// Canned answers keyed by canonical reactant text.
#[derive(Default)]
pub struct MockPredictor {
    name: String,
    table: HashMap<String, Vec<AdapterCandidate>>,
    fail: Option<String>,
}

impl MockPredictor {
    pub fn new(name: &str) -> MockPredictor {
        MockPredictor {
            name: name.to_string(),
            ..MockPredictor::default()
        }
    }

    pub fn failing(message: &str) -> MockPredictor {
        MockPredictor {
            name: "failing".into(),
            fail: Some(message.to_string()),
            ..MockPredictor::default()
        }
    }

    fn key(smiles: &str) -> String {
        parse_smiles(smiles).map(|m| canonical_smiles(&m)).unwrap_or_else(|_| smiles.to_string())
    }

    pub fn insert(&mut self, reactants: &str, candidates: Vec<AdapterCandidate>) {
        self.table.insert(Self::key(reactants), candidates);
    }

    pub fn with(mut self, reactants: &str, candidates: &[(&str, f64)]) -> MockPredictor {
        let list = candidates
            .iter()
            .map(|&(p, ll)| AdapterCandidate {
                products: p.to_string(),
                log_likelihood: ll,
            })
            .collect();
        self.insert(reactants, list);
        self
    }
}

impl Predictor for MockPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, reactants: &str, top_k: usize) -> Result<Vec<AdapterCandidate>, PredictorError> {
        if let Some(m) = &self.fail {
            return Err(PredictorError::Remote(m.clone()));
        }
        let mut out = self.table.get(&Self::key(reactants)).cloned().unwrap_or_default();
        out.truncate(top_k);
        Ok(out)
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    dead: Option<String>,
}

impl Session {
    fn read_line(&mut self, deadline: Duration) -> Result<String, PredictorError> {
        match self.lines.recv_timeout(deadline) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(PredictorError::Process(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(PredictorError::Timeout(deadline)),
            Err(RecvTimeoutError::Disconnected) => Err(PredictorError::Process("adapter closed its output".into())),
        }
    }

    fn kill(&mut self, why: &str) {
        self.dead = Some(why.to_string());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A child process speaking the adapter protocol. One request in flight at a
/// time. A timeout or protocol violation kills the child; later calls fail.
pub struct ProcessAdapter {
    hello: Hello,
    deadline: Duration,
    session: Mutex<Session>,
}

impl ProcessAdapter {
    /// Spawns `program args..` and waits for the handshake.
    pub fn spawn(program: &str, args: &[String], deadline: Duration) -> Result<ProcessAdapter, PredictorError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PredictorError::Process(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let (tx, rx) = channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut session = Session {
            child,
            stdin,
            lines: rx,
            next_id: 0,
            dead: None,
        };
        let hello = match session.read_line(deadline) {
            Ok(line) => match serde_json::from_str::<HelloLine>(&line) {
                Ok(h) => h.hello,
                Err(e) => {
                    session.kill("bad handshake");
                    return Err(PredictorError::Protocol(format!("bad handshake '{line}': {e}")));
                }
            },
            Err(e) => {
                session.kill("no handshake");
                return Err(e);
            }
        };
        log::info!("adapter {} {} ready", hello.name, hello.version);
        Ok(ProcessAdapter {
            hello,
            deadline,
            session: Mutex::new(session),
        })
    }

    pub fn hello(&self) -> &Hello {
        &self.hello
    }
}

impl Drop for ProcessAdapter {
    fn drop(&mut self) {
        if let Ok(s) = self.session.get_mut() {
            if s.dead.is_none() {
                s.kill("dropped");
            }
        }
    }
}

impl Predictor for ProcessAdapter {
    fn name(&self) -> &str {
        &self.hello.name
    }

    fn predict(&self, reactants: &str, top_k: usize) -> Result<Vec<AdapterCandidate>, PredictorError> {
        let mut s = self.session.lock().map_err(|_| PredictorError::Process("poisoned".into()))?;
        if let Some(why) = &s.dead {
            return Err(PredictorError::Process(format!("adapter unavailable ({why})")));
        }
        let id = s.next_id;
        s.next_id += 1;
        let req = AdapterRequest {
            id,
            reactants: reactants.to_string(),
            top_k,
        };
        let line = serde_json::to_string(&req).expect("plain data");
        if let Err(e) = writeln!(s.stdin, "{line}").and_then(|_| s.stdin.flush()) {
            s.kill("write failed");
            return Err(PredictorError::Process(e.to_string()));
        }
        let reply = match s.read_line(self.deadline) {
            Ok(r) => r,
            Err(e) => {
                s.kill(&e.to_string());
                return Err(e);
            }
        };
        let resp: AdapterResponse = match serde_json::from_str(&reply) {
            Ok(r) => r,
            Err(e) => {
                s.kill("malformed response");
                return Err(PredictorError::Protocol(format!("'{reply}': {e}")));
            }
        };
        if resp.id != id {
            s.kill("id mismatch");
            return Err(PredictorError::Protocol(format!("expected id {id}, got {}", resp.id)));
        }
        if let Some(e) = resp.error {
            return Err(PredictorError::Remote(e));
        }
        let mut c = resp.candidates;
        if c.len() > top_k {
            return Err(PredictorError::Protocol(format!("{} candidates for top_k {top_k}", c.len())));
        }
        c.sort_by(|a, b| b.log_likelihood.total_cmp(&a.log_likelihood));
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str, deadline: Duration) -> Result<ProcessAdapter, PredictorError> {
        ProcessAdapter::spawn("sh", &["-c".to_string(), script.to_string()], deadline)
    }

    const HELLO: &str = r#"echo '{"hello":{"name":"t","version":"0"}}'"#;

    #[test]
    fn handshake_and_one_answer() {
        let script = format!(
            r#"{HELLO}; read l; echo '{{"id":0,"candidates":[{{"products":"C","log_likelihood":-2}},{{"products":"O","log_likelihood":-1}}]}}'; read l"#
        );
        let a = sh(&script, Duration::from_secs(5)).unwrap();
        assert_eq!(a.hello().name, "t");
        let c = a.predict("C.O", 3).unwrap();
        assert_eq!(c[0].products, "O");
        // the script has no second answer and exits
        assert!(a.predict("C.O", 3).is_err());
    }

    #[test]
    fn missing_handshake_times_out() {
        let e = sh("sleep 5", Duration::from_millis(200)).err().unwrap();
        assert_eq!(e, PredictorError::Timeout(Duration::from_millis(200)));
    }

    #[test]
    fn slow_answer_times_out_and_kills() {
        let a = sh(&format!("{HELLO}; sleep 5"), Duration::from_millis(200)).unwrap();
        assert!(matches!(a.predict("C", 1), Err(PredictorError::Timeout(_))));
        assert!(matches!(a.predict("C", 1), Err(PredictorError::Process(_))));
    }

    #[test]
    fn wrong_id_is_a_violation() {
        let a = sh(&format!(r#"{HELLO}; read l; echo '{{"id":7,"candidates":[]}}'; sleep 1"#), Duration::from_secs(5)).unwrap();
        assert!(matches!(a.predict("C", 1), Err(PredictorError::Protocol(_))));
    }

    #[test]
    fn remote_error_keeps_the_session() {
        let a = sh(
            &format!(r#"{HELLO}; read l; echo '{{"id":0,"error":"bad smiles"}}'; read l; echo '{{"id":1,"candidates":[]}}'"#),
            Duration::from_secs(5),
        )
        .unwrap();
        assert_eq!(a.predict("x", 1), Err(PredictorError::Remote("bad smiles".into())));
        assert_eq!(a.predict("C", 1), Ok(vec![]));
    }

    #[test]
    fn mock_looks_up_canonical_reactants() {
        let m = MockPredictor::new("m").with("[OH-].CBr", &[("CO.[Br-]", -0.1), ("C=C", -3.0)]);
        assert_eq!(m.predict("BrC.[OH-]", 1).unwrap().len(), 1);
        assert!(m.predict("CC", 5).unwrap().is_empty());
    }
}
