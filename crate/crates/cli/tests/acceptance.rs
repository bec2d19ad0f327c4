//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and
//! exits nonzero if any criterion fails.

use std::env;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ltlgen_core::checker::{check, check_bruteforce, totalize, BruteForceBounds};
use ltlgen_core::dataset::{self, build_dataset, DatasetSpec, Problem};
use ltlgen_core::eval::{
    compute_metrics, evaluate, metrics_from_pairs, oracle_model, run_sweep_with, sweep_csv, EvalRecord, ScriptedModel,
    SweepConfig, Verdict,
};
use ltlgen_core::formula_gen::{generate_formulas, FormulaGenConfig};
use ltlgen_core::graph::EventGraph;
use ltlgen_core::ltl::{parse_formula, universe, Event};
use ltlgen_core::par::Execution;
use ltlgen_core::render::render;
use ltlgen_core::rng::{derive_seed, Stream};
use ltlgen_core::smv::{emit_smv, run_nusmv, SmvStyle};
use ltlgen_core::{generate_formula, generate_graph};

enum Outcome {
    Pass(String),
    Skip(String),
}

type Check = Result<Outcome, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

const FORMULA: &str = "(event1 -> (G (F event2)))";

const MODEL: &str = "MODULE main
VAR
    state : {event1, event2, event3};
ASSIGN
    init(state) := event3;
    next(state) := case
        state = event1 : event2;
        state = event1 : event3;
        state = event3 : event1;
        state = event3 : event2;
        state = event2 : event2;
    esac;
LTLSPEC ((state=event1) -> (G (F (state=event2))))";

const PROMPT: &str = "=== Context ===

Initially, event3 happened. After event1, event2 can happen. After event1, event3 can happen. After event2, no other events can happen. After event3, event1 can happen. After event3, event2 can happen.

=== Hypothesis ===

C1: Event2 will happen eventually.
C2: C1 will always be true at any future time.
C3: That event1 happens implies that C2 holds.

C3 is True or False? Answer with \"True\" or \"False\" directly:";

fn trimmed_lines(s: &str) -> Vec<&str> {
    s.trim_end().lines().map(str::trim_end).collect()
}

fn golden_example() -> Check {
    let start = Instant::now();
    let g = EventGraph::new(3, 3, [(1, 2), (1, 3), (3, 1), (3, 2)]).map_err(|e| e.to_string())?;
    let f = parse_formula(FORMULA, &universe(3)).map_err(|e| e.to_string())?;
    ensure(f.to_string() == FORMULA, || format!("formula printed as {f}"))?;
    let doc = emit_smv(&g, &f, SmvStyle::PaperLiteral).map_err(|e| e.to_string())?;
    ensure(trimmed_lines(&doc.text) == trimmed_lines(MODEL), || {
        format!("SMV differs:\n{}", doc.text)
    })?;
    let r = render(&g, &f);
    ensure(r.prompt == PROMPT, || format!("prompt differs:\n{}", r.prompt))?;
    let label = check(&totalize(&g), &f).map_err(|e| e.to_string())?.holds;
    ensure(label, || "label is false".into())?;
    let t = within(Duration::from_secs(1), start)?;
    Ok(Outcome::Pass(format!(
        "formula, model, prompt identical; label true; {t:.2?}"
    )))
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut instances = 0;
    for n in [2u32, 3] {
        for m in [1usize, 2, 3] {
            for i in 0..100u64 {
                let seed = derive_seed(0xacce_0002, u64::from(n) * 16 + m as u64, i);
                let g = generate_graph(n, 0.5, seed).map_err(|e| e.to_string())?;
                let f = generate_formula(&g.events(), m, seed.rotate_left(1)).map_err(|e| e.to_string())?;
                let k = totalize(&g);
                let fast = check(&k, &f).map_err(|e| e.to_string())?;
                let slow =
                    check_bruteforce(&k, &f, BruteForceBounds::complete_for(&k, &f)).map_err(|e| e.to_string())?;
                ensure(fast.holds == slow.holds, || format!("disagree on {f} over {g:?}"))?;
                instances += 1;
            }
        }
    }
    let t = within(Duration::from_secs(300), start)?;
    Ok(Outcome::Pass(format!("{instances} instances agree; {t:.2?}")))
}

fn find_nusmv() -> Option<PathBuf> {
    if let Some(p) = env::var_os("NUSMV_PATH") {
        let p = PathBuf::from(p);
        return p.is_file().then_some(p);
    }
    let path = env::var_os("PATH")?;
    env::split_paths(&path)
        .flat_map(|d| [d.join("NuSMV"), d.join("nusmv")])
        .find(|p| p.is_file())
}

fn nusmv_cross_validation() -> Check {
    let Some(nusmv) = find_nusmv() else {
        return Ok(Outcome::Skip(
            "no NuSMV binary (set NUSMV_PATH or put NuSMV on PATH)".into(),
        ));
    };
    let mut s = Stream::new(0xacce_0003);
    for i in 0..200u64 {
        let n = 2 + s.below(3) as u32;
        let m = 1 + s.below(4) as usize;
        let g = generate_graph(n, 0.5, derive_seed(3, 0, i)).map_err(|e| e.to_string())?;
        let f = generate_formula(&g.events(), m, derive_seed(3, 1, i)).map_err(|e| e.to_string())?;
        let doc = emit_smv(&g, &f, SmvStyle::Sets).map_err(|e| e.to_string())?;
        let ours = check(&totalize(&g), &f).map_err(|e| e.to_string())?.holds;
        let theirs = run_nusmv(&doc, &nusmv).map_err(|e| e.to_string())?;
        ensure(ours == theirs, || format!("NuSMV says {theirs} on {f} over {g:?}"))?;
    }
    Ok(Outcome::Pass(format!("200 instances agree with {}", nusmv.display())))
}

fn generate_via_cli(out: &std::path::Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_ltlgen"))
        .args([
            "--quiet",
            "generate",
            "--events",
            "3",
            "--operators",
            "3",
            "--count",
            "100",
            "--seed",
            "42",
            "--balanced",
            "--out",
        ])
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("generate exited with {status}"))?;
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = generate_via_cli(&dir.path().join("a.jsonl"))?;
    let b = generate_via_cli(&dir.path().join("b.jsonl"))?;
    ensure(a == b, || "outputs differ".into())?;
    let lines = a.iter().filter(|&&c| c == b'\n').count();
    ensure(lines == 100, || format!("{lines} lines"))?;
    let spec = DatasetSpec::new(100, 3, 3, 42);
    let seq = build_dataset_with_bytes(&spec, Execution::Sequential)?;
    ensure(seq == a, || "sequential build differs from CLI output".into())?;
    Ok(Outcome::Pass(
        "two CLI runs and a sequential build are byte-identical (100 lines)".into(),
    ))
}

fn build_dataset_with_bytes(spec: &DatasetSpec, exec: Execution) -> Result<Vec<u8>, String> {
    let ds = dataset::build_dataset_with(spec, exec).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    dataset::write_jsonl(&ds, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn balance() -> Check {
    for count in [10usize, 100, 2000] {
        let ds = build_dataset(&DatasetSpec::new(count, 3, 3, 5)).map_err(|e| e.to_string())?;
        let t = ds.iter().filter(|p| p.label).count();
        ensure(ds.len() == count && t == count / 2, || {
            format!("count {count}: {t} true of {}", ds.len())
        })?;
    }
    Ok(Outcome::Pass("counts 10, 100, 2000 are exactly half true".into()))
}

fn replay() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("bench.jsonl");
    let ds = build_dataset(&DatasetSpec::new(2000, 3, 3, 1)).map_err(|e| e.to_string())?;
    dataset::write_dataset(&ds, &path).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let loaded: Vec<Problem> = dataset::read_dataset(&path).map_err(|e| e.to_string())?;
    let bad = dataset::replay_labels(&loaded, Execution::Parallel);
    ensure(loaded.len() == 2000, || format!("{} records", loaded.len()))?;
    ensure(bad.is_empty(), || {
        format!("{} labels do not replay, first {:?}", bad.len(), bad.first())
    })?;
    let t = within(Duration::from_secs(600), start)?;
    Ok(Outcome::Pass(format!("2000/2000 labels replay; {t:.2?}")))
}

fn formula_generator() -> Check {
    for m in 1..=9usize {
        let events: Vec<Event> = (1..=3).map(Event).collect();
        let cfg = FormulaGenConfig {
            states: events.clone(),
            length: m,
            count: 1000,
            seed: 100 + m as u64,
        };
        let fs = generate_formulas(&cfg).map_err(|e| e.to_string())?;
        ensure(fs.len() == 1000, || format!("m={m}: {} formulas", fs.len()))?;
        for f in &fs {
            ensure(f.operator_count() == m, || {
                format!("m={m}: {f} has {} operators", f.operator_count())
            })?;
            ensure(f.atoms().iter().all(|a| events.contains(a)), || {
                format!("{f} uses an undeclared event")
            })?;
        }
    }
    Ok(Outcome::Pass(
        "9000 formulas have exactly m operators over declared events".into(),
    ))
}

fn roc_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let p = labels.iter().filter(|&&l| l).count() as f64;
    let n = labels.len() as f64 - p;
    if p == 0.0 || n == 0.0 {
        return 0.5;
    }
    let mut ts = scores.to_vec();
    ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ts.dedup();
    let mut pts = vec![(0.0, 0.0)];
    for t in ts {
        let tp = scores.iter().zip(labels).filter(|(&s, &l)| l && s >= t).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(&s, &l)| !l && s >= t).count() as f64;
        pts.push((fp / n, tp / p));
    }
    pts.push((1.0, 1.0));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

fn metrics() -> Check {
    use Verdict::{False as F, True as T};
    let pairs =
        |l: &[bool], v: &[Verdict]| -> Vec<(bool, Verdict)> { l.iter().copied().zip(v.iter().copied()).collect() };
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;

    let r = metrics_from_pairs(&pairs(&[true, true, false, false], &[T, F, F, F])).map_err(|e| e.to_string())?;
    ensure(r.accuracy == 0.75 && close(r.f1, 2.0 / 3.0) && r.auc == 0.75, || {
        format!("example 1: {r:?}")
    })?;
    let r = metrics_from_pairs(&pairs(&[true, false, false, true], &[T, F, F, T])).map_err(|e| e.to_string())?;
    ensure(r.accuracy == 1.0 && r.f1 == 1.0 && r.auc == 1.0, || {
        format!("example 2: {r:?}")
    })?;
    let r = metrics_from_pairs(&pairs(&[true, false, true, false], &[T, T, T, T])).map_err(|e| e.to_string())?;
    ensure(r.accuracy == 0.5 && close(r.f1, 2.0 / 3.0) && r.auc == 0.5, || {
        format!("example 3: {r:?}")
    })?;

    let mut s = Stream::new(0xacce_0008);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let len = 1 + s.below(200) as usize;
        let mut ps = Vec::with_capacity(len);
        for _ in 0..len {
            let label = s.bernoulli(0.5);
            let v = match s.below(5) {
                0 => Verdict::Invalid,
                1 => Verdict::from_bool(!label),
                _ => Verdict::from_bool(label),
            };
            ps.push((label, v));
        }
        let got = metrics_from_pairs(&ps).map_err(|e| e.to_string())?;
        let labels: Vec<bool> = ps.iter().map(|p| p.0).collect();
        let scores: Vec<f64> = ps
            .iter()
            .map(|p| match p.1 {
                Verdict::True => 1.0,
                Verdict::False => 0.0,
                Verdict::Invalid => 0.5,
            })
            .collect();
        let predicted: Vec<bool> = ps.iter().map(|&(l, v)| v.as_bool().unwrap_or(!l)).collect();
        let acc = labels.iter().zip(&predicted).filter(|(a, b)| a == b).count() as f64 / len as f64;
        let tp = labels.iter().zip(&predicted).filter(|(&l, &p)| l && p).count() as f64;
        let denom = predicted.iter().filter(|&&p| p).count() as f64 + labels.iter().filter(|&&l| l).count() as f64;
        let f1 = if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
        for d in [got.accuracy - acc, got.f1 - f1, got.auc - roc_auc(&scores, &labels)] {
            worst = worst.max(d.abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation from reference {worst:e}"))?;

    let ds = build_dataset(&DatasetSpec::new(100, 3, 3, 8)).map_err(|e| e.to_string())?;
    let recs: Vec<EvalRecord> = evaluate(&ds, &ScriptedModel::always("True"), 8);
    let r = compute_metrics(&recs).map_err(|e| e.to_string())?;
    ensure(
        r.accuracy == 0.5 && (r.f1 - 2.0 / 3.0).abs() <= 1e-9 && r.auc == 0.5,
        || format!("always-True: {r:?}"),
    )?;
    Ok(Outcome::Pass(format!(
        "examples exact; reference max deviation {worst:e}; always-True acc {:.3} F1 {:.3} AUC {:.3}",
        r.accuracy, r.f1, r.auc
    )))
}

fn sweeps() -> Check {
    let mut cells_total = 0;
    for cfg in [SweepConfig::operators_protocol(9), SweepConfig::events_protocol(9)] {
        let cells =
            run_sweep_with(&cfg, 8, Execution::Parallel, |ps| Box::new(oracle_model(ps))).map_err(|e| e.to_string())?;
        ensure(cells.len() == cfg.values.len(), || "missing cells".into())?;
        for c in &cells {
            ensure(c.report.n_total == 300, || {
                format!("{} = {}: {} problems", c.axis, c.value, c.report.n_total)
            })?;
            ensure(c.report.accuracy == 1.0, || {
                format!("{} = {}: accuracy {}", c.axis, c.value, c.report.accuracy)
            })?;
        }
        let csv = sweep_csv(&cells);
        ensure(csv.lines().count() == cells.len() + 1, || "CSV row count".into())?;
        ensure(csv.lines().skip(1).all(|l| l.split(',').count() == 9), || {
            "CSV column count".into()
        })?;
        cells_total += cells.len();
    }
    Ok(Outcome::Pass(format!(
        "{cells_total} cells of 300 problems, oracle accuracy 1.0 everywhere"
    )))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("AC1 golden example", golden_example),
        ("AC2 oracle equivalence", oracle_equivalence),
        ("AC3 NuSMV cross-validation", nusmv_cross_validation),
        ("AC4 determinism", determinism),
        ("AC5 balance", balance),
        ("AC6 replay", replay),
        ("AC7 formula generator", formula_generator),
        ("AC8 metrics", metrics),
        ("AC9 sweep harness", sweeps),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(Outcome::Pass(detail)) => println!("PASS {name}: {detail}"),
            Ok(Outcome::Skip(detail)) => println!("SKIP {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all criteria passed or skipped");
        ExitCode::SUCCESS
    }
}
