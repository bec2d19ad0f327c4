pub mod checker;
pub mod dataset;
pub mod eval;
pub mod formula_gen;
pub mod graph;
pub mod lasso;
pub mod ltl;
pub mod par;
pub mod render;
pub mod rng;
pub mod smv;

pub use checker::{check, check_bruteforce, totalize, CheckResult, KripkeStructure, Lasso};
pub use dataset::{build_dataset, build_problem, DatasetError, DatasetSpec, Problem};
pub use formula_gen::{generate_formula, generate_formulas, FormulaGenConfig};
pub use graph::{generate_graph, EventGraph};
pub use lasso::eval_on_lasso;
pub use ltl::{parse_formula, print_formula, BinaryOp, Event, Formula, UnaryOp};
pub use par::Execution;
pub use render::render;
pub use smv::{emit_smv, run_nusmv, SmvStyle};
