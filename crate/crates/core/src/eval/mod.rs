//! Model evaluation: querying, answer parsing, metrics and sweeps.

pub mod client;
pub mod harness;
pub mod metrics;
pub mod sweep;

pub use client::{
    query_model, ChatModel, EndpointConfig, HttpChatModel, QueryError, RetryPolicy, ScriptedModel, API_KEY_ENV,
};
pub use harness::{adversarial_model, evaluate, oracle_model, EvalRecord};
pub use metrics::{compute_metrics, metrics_from_pairs, parse_answer, Confusion, MetricsError, MetricsReport, Verdict};
pub use sweep::{metrics_table, run_sweep, run_sweep_with, sweep_csv, SweepAxis, SweepCell, SweepConfig};
