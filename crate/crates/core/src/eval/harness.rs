use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::client::{ChatModel, ScriptedModel};
use super::metrics::{parse_answer, Verdict};
use crate::dataset::Problem;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub problem_id: String,
    pub raw_response: String,
    pub parsed: Verdict,
    pub label: bool,
    pub correct: bool,
    /// Transport or protocol failure, if the query did not complete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EvalRecord {
    pub fn new(problem_id: String, label: bool, response: Result<String, String>) -> Self {
        let (raw_response, error) = match response {
            Ok(text) => (text, None),
            Err(e) => (String::new(), Some(e)),
        };
        let parsed = if error.is_some() {
            Verdict::Invalid
        } else {
            parse_answer(&raw_response)
        };
        Self {
            problem_id,
            correct: parsed.as_bool() == Some(label),
            raw_response,
            parsed,
            label,
            error,
        }
    }
}

/// Queries `model` once per problem with up to `max_concurrency` requests in
/// flight. Records come back in dataset order; failures are recorded, never
/// propagated.
pub fn evaluate(problems: &[Problem], model: &dyn ChatModel, max_concurrency: usize) -> Vec<EvalRecord> {
    let workers = max_concurrency.clamp(1, problems.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<EvalRecord>>> = Mutex::new(vec![None; problems.len()]);

    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(p) = problems.get(i) else { break };
                let response = model.complete(&p.prompt).map_err(|e| e.to_string());
                let record = EvalRecord::new(p.id.clone(), p.label, response);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(record);
            });
        }
    });

    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every index visited"))
        .collect()
}

fn answer_key(problems: &[Problem], flip: bool) -> HashMap<String, String> {
    problems
        .iter()
        .map(|p| {
            let answer = if p.label != flip { "True" } else { "False" };
            (p.prompt.clone(), answer.to_string())
        })
        .collect()
}

/// Answers every prompt of `problems` with its stored label.
pub fn oracle_model(problems: &[Problem]) -> ScriptedModel {
    ScriptedModel::lookup(answer_key(problems, false))
}

/// Answers every prompt of `problems` with the opposite of its label.
pub fn adversarial_model(problems: &[Problem]) -> ScriptedModel {
    ScriptedModel::lookup(answer_key(problems, true))
}
