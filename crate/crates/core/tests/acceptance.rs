//! End-to-end acceptance checks, one line of output per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report lines always
//! reach stdout. Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 2 8`.

use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};
use vulcan_core::corpus::{
    alpha_rename_source, corpus_hash, generate_corpus, generate_program, generate_similarity_triplets, CorpusRecord,
    CorpusSpec, SizeSpec, Split, StatementRecord,
};
use vulcan_core::dependence::{build_vocabs, get_path, resolve_endpoint, rhs_tokens, PathOrOneHot, TokenClass};
use vulcan_core::frontend::{parse_source, NodeKind};
use vulcan_core::gradcheck::{model_check, op_checks};
use vulcan_core::harness::ablation::results_csv;
use vulcan_core::harness::{
    evaluate, run_ablation_suite, run_bow_suite, similarity_experiment, summarize, train, ExperimentConfig,
    FeatureMode, Metrics, Ratio, RunResult,
};
use vulcan_core::model::{build_plan, save_model, ModelConfig, PreparedProgram, Variant, VulcanModel};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))
}

/// 1. Finite-difference checks of every operation and the composed model.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut results = op_checks(17);
    results.push(model_check(ModelConfig::tiny(), 11).map_err(|e| e.to_string())?);
    let mut detail = Vec::new();
    for r in &results {
        ensure(r.passed(), || format!("{} rel err {:.2e} (tol {:.0e})", r.name, r.report.max_rel_err, r.tolerance))?;
        detail.push(format!("{} {:.1e}", r.name, r.report.max_rel_err));
    }
    within(Duration::from_secs(60), start)?;
    Ok(detail.join(", "))
}

/// Most recent definition of `name` strictly before `line` in `function`,
/// scanning the generator's own statement records.
fn oracle_variable(stmts: &[StatementRecord], function: &str, name: &str, line: usize) -> Option<usize> {
    stmts
        .iter()
        .filter(|s| s.function == function && s.line < line && s.writes.iter().any(|w| w == name))
        .map(|s| s.line)
        .max()
}

fn oracle_return(stmts: &[StatementRecord], callee: &str) -> Option<usize> {
    stmts
        .iter()
        .filter(|s| s.function == callee && s.kind == NodeKind::Return)
        .map(|s| s.line)
        .max()
}

/// 2. resolve_endpoint against a backward scan over generator records.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0;
    for seed in 0..300u64 {
        let g = generate_program(1_000 + seed, &SizeSpec::lines(5, 30)).map_err(|e| e.to_string())?;
        let ast = g.program.parse().map_err(|e| e.to_string())?;
        // function owning each line, from the header records
        let headers: Vec<&StatementRecord> = g.statements.iter().filter(|s| s.kind == NodeKind::FuncDecl).collect();
        for l in &g.labels {
            let function = &headers.iter().rev().find(|h| h.line < l.line).ok_or("line before any function")?.function;
            for occ in rhs_tokens(&ast, l.line).map_err(|e| e.to_string())? {
                let expected = match occ.class {
                    TokenClass::Variable => oracle_variable(&g.statements, function, &occ.text, l.line),
                    TokenClass::UserFunc => oracle_return(&g.statements, &occ.text),
                    TokenClass::Operator | TokenClass::BuiltinFunc => None,
                };
                let got = resolve_endpoint(&occ, l.line, &ast);
                ensure(got == expected, || {
                    format!("program seed {} line {} token {}: {got:?} != {expected:?}", 1_000 + seed, l.line, occ.text)
                })?;
                pairs += 1;
            }
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{pairs} (token, line) pairs over 300 programs agree"))
}

const LOOP_THEN_DIVIDE: &str = "\
func foo(n, y, r) { while n > 0 {
        r = r + 1 }
    y = y * 2
    x = y / r
    return x
}
";

/// 3. Representing line 4 recurses into lines 3 and 2, and the path of `r`
/// passes through the loop and a binary operation.
fn criterion_3() -> Outcome {
    let ast = parse_source(LOOP_THEN_DIVIDE).map_err(|e| e.to_string())?;
    let cfg = ModelConfig::default();
    let vocab = build_vocabs(std::slice::from_ref(&ast), cfg.endpoint_mode()).map_err(|e| e.to_string())?;
    let prog = PreparedProgram::from_source("loop_then_divide", LOOP_THEN_DIVIDE, &vocab, &cfg).map_err(|e| e.to_string())?;
    let plan = build_plan(&[&prog], &[(0, 4)], &cfg).map_err(|e| e.to_string())?;
    let root = plan.roots[0];
    let mut direct: Vec<usize> = plan.dependencies(root).iter().map(|&n| plan.nodes[n].line).collect();
    direct.sort_unstable();
    ensure(direct == [2, 3], || format!("line 4 depends on {direct:?}"))?;
    // transitive defines: lines 2 and 3 read parameters from the header
    let reached: Vec<usize> = plan.lines_reached(root).into_iter().collect();
    ensure(reached == [1, 2, 3], || format!("line 4 reaches {reached:?}"))?;
    let r = rhs_tokens(&ast, 4)
        .map_err(|e| e.to_string())?
        .into_iter()
        .find(|t| t.text == "r")
        .ok_or("no r on line 4")?;
    let (ep, what) = get_path(&r, 4, &ast).map_err(|e| e.to_string())?;
    let PathOrOneHot::Path(path) = what else {
        return Err("r has no path".into());
    };
    ensure(ep == Some(2), || format!("r resolves to {ep:?}"))?;
    ensure(path.contains_kind(NodeKind::Loop) && path.contains_kind(NodeKind::BinOp), || {
        format!("path {}", path.render())
    })?;
    Ok(format!("deps {direct:?}, reached {reached:?}, r path {}", path.render()))
}

/// 4. Consistent renaming leaves representations and probabilities bitwise
/// unchanged.
fn criterion_4() -> Outcome {
    let programs: Vec<_> = (0..50u64)
        .map(|s| generate_program(5_000 + s, &SizeSpec::default()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let asts: Vec<_> = programs.iter().map(|g| g.program.parse()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let cfg = ModelConfig::default();
    let vocab = build_vocabs(&asts, cfg.endpoint_mode()).map_err(|e| e.to_string())?;
    let model = VulcanModel::new(cfg, vocab, 3).map_err(|e| e.to_string())?;
    let mut lines_checked = 0;
    for (i, g) in programs.iter().enumerate() {
        let renamed = alpha_rename_source(&g.program, 77 + i as u64).map_err(|e| e.to_string())?;
        ensure(renamed.source != g.program.source, || format!("program {i} unchanged by renaming"))?;
        let a = model.prepare(&g.program.id, &g.program.source).map_err(|e| e.to_string())?;
        let b = model.prepare(&renamed.id, &renamed.source).map_err(|e| e.to_string())?;
        let lines: Vec<usize> = g.labels.iter().map(|l| l.line).collect();
        let ra = model.represent_lines(&a, &lines).map_err(|e| e.to_string())?;
        let rb = model.represent_lines(&b, &lines).map_err(|e| e.to_string())?;
        let pa = model.predict(&a, &lines).map_err(|e| e.to_string())?;
        let pb = model.predict(&b, &lines).map_err(|e| e.to_string())?;
        let same = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits());
        ensure(ra.iter().zip(&rb).all(|(x, y)| same(x, y)), || format!("program {i}: representations differ"))?;
        ensure(same(&pa, &pb), || format!("program {i}: probabilities differ"))?;
        lines_checked += lines.len();
    }
    Ok(format!("{lines_checked} lines over 50 programs bitwise identical"))
}

/// A function whose last definitions sit `depth` blocks deep, read by a
/// line with `width` operands, followed by `pad` chained lines.
fn stress_function(depth: usize, width: usize, pad: usize) -> String {
    let mut s = String::from("func stress(p0, p1) {\n");
    for d in 0..depth {
        let indent = "    ".repeat(d + 1);
        if d % 2 == 0 {
            s.push_str(&format!("{indent}if p0 > {d} {{\n"));
        } else {
            s.push_str(&format!("{indent}while p1 > {d} {{\n"));
        }
    }
    s.push_str(&format!("{}var deep = p0 * 2\n", "    ".repeat(depth + 1)));
    for d in (0..depth).rev() {
        s.push_str(&format!("{}}}\n", "    ".repeat(d + 1)));
    }
    let terms: Vec<String> = (0..width)
        .map(|k| match k % 3 {
            0 => "deep".to_string(),
            1 => "p1".to_string(),
            _ => k.to_string(),
        })
        .collect();
    s.push_str(&format!("    var wide = {}\n", terms.join(" + ")));
    for k in 0..pad {
        let prev = if k == 0 { "wide".to_string() } else { format!("c{}", k - 1) };
        s.push_str(&format!("    var c{k} = {prev} - 1\n"));
    }
    s.push_str("    return wide\n}\n");
    s
}

/// 5. Path, token, and line caps over 500 random programs.
fn criterion_5() -> Outcome {
    let cfg = ModelConfig::default();
    let vocab = build_vocabs(&[parse_source(LOOP_THEN_DIVIDE).map_err(|e| e.to_string())?], cfg.endpoint_mode())
        .map_err(|e| e.to_string())?;
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 500,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let stats = std::cell::RefCell::new((0usize, 0usize, 0usize));
    let strategy = (any::<u64>(), 0usize..24, 1usize..40, 0usize..160);
    runner
        .run(&strategy, |(seed, depth, width, pad)| {
            let g = generate_program(seed, &SizeSpec::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let source = format!("{}\n{}", g.program.source, stress_function(depth, width, pad));
            let line_count = source.lines().count();
            let prog = PreparedProgram::from_source("p", &source, &vocab, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(prog.represented_lines(), line_count.min(128));
            prop_assert!(prog.slots(129).is_none());
            let mut st = stats.borrow_mut();
            if line_count > 128 {
                st.0 += 1;
            }
            for line in 1..=prog.represented_lines() {
                let slots = prog.slots(line).expect("represented");
                prop_assert!(slots.len() <= 16, "line {} has {} slots", line, slots.len());
                for c in slots.iter().filter_map(|s| s.context.as_ref()) {
                    prop_assert!(c.indices.len() <= 32, "path of {} steps", c.indices.len());
                    if c.truncated {
                        st.1 += 1;
                    }
                }
                if slots.len() == 16 {
                    st.2 += 1;
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let (long, truncated, full) = stats.into_inner();
    ensure(long > 0 && truncated > 0 && full > 0, || {
        format!("caps never exercised: {long} long programs, {truncated} truncated paths, {full} full lines")
    })?;
    Ok(format!("500 programs: {long} over 128 lines, {truncated} truncated paths, {full} lines at 16 slots"))
}

/// Settings for the classification runs. The learning rate is lowered from
/// the harness default because Adagrad's first steps at 0.05 are as large as
/// the initial weights of the 512-wide layers and training becomes erratic.
fn experiment_config() -> ExperimentConfig {
    ExperimentConfig {
        lr: 0.01,
        ..ExperimentConfig::default()
    }
}

fn f1_of(rows: &[vulcan_core::harness::SummaryRow], name: &str) -> f64 {
    rows.iter().find(|r| r.name == name).map(|r| r.f1.or_zero()).unwrap_or(f64::NAN)
}

/// 6. Orderings between the model, its ablations, and the baselines, plus
/// the absolute floor for the full model. Returns the seed-1 full model for
/// the similarity check.
fn criterion_6(records: &[CorpusRecord]) -> (Outcome, Option<VulcanModel>) {
    let start = Instant::now();
    let base = experiment_config();
    let mut results: Vec<RunResult> = Vec::new();
    let mut kept = None;
    for variant in [Variant::Full, Variant::NoEndpoints, Variant::NoAttn] {
        for seed in 1..=3u64 {
            let cfg = match base.with_variant(variant) {
                Ok(c) => c.with_seed(seed),
                Err(e) => return (Err(e.to_string()), None),
            };
            let run = train(records, &cfg).and_then(|(model, log)| {
                let val = evaluate(&model, records, Split::Val)?;
                Ok((model, log, val))
            });
            let (model, log, val) = match run {
                Ok(r) => r,
                Err(e) => return (Err(e.to_string()), None),
            };
            results.push(RunResult {
                name: variant.name().to_string(),
                seed,
                val,
                test: None,
                config: cfg,
                best_epoch: Some(log.best_epoch),
            });
            if variant == Variant::Full && seed == 1 {
                kept = Some(model);
            }
        }
    }
    match run_bow_suite(records, &base, &FeatureMode::ALL, &[1, 2, 3]) {
        Ok(r) => results.extend(r),
        Err(e) => return (Err(e.to_string()), kept),
    }
    let rows = summarize(&results, Split::Val);
    for r in &rows {
        println!("    {:<14} median val F1 {}", r.name, r.f1);
    }
    let full = f1_of(&rows, "full");
    let no_end = f1_of(&rows, "no_endpoints");
    let no_attn = f1_of(&rows, "no_attn");
    let paths = f1_of(&rows, "bow_ast_paths");
    let nodes = f1_of(&rows, "bow_ast_nodes");
    let tokens = f1_of(&rows, "bow_tokens");
    let checks = [
        (full >= no_end, "full >= no_endpoints"),
        (full >= no_attn, "full >= no_attn"),
        (full >= paths, "full >= bow_ast_paths"),
        (paths >= nodes, "bow_ast_paths >= bow_ast_nodes"),
        (nodes >= tokens, "bow_ast_nodes >= bow_tokens"),
        (full >= 0.70, "full >= 0.70"),
    ];
    let detail = format!(
        "full {full:.3}, no_endpoints {no_end:.3}, no_attn {no_attn:.3}, paths {paths:.3}, nodes {nodes:.3}, tokens {tokens:.3}"
    );
    if let Some((_, what)) = checks.iter().find(|c| !c.0) {
        return (Err(format!("{what} violated: {detail}")), kept);
    }
    if let Err(e) = within(Duration::from_secs(30 * 60), start) {
        return (Err(e), kept);
    }
    (Ok(format!("{detail} in {:.0?}", start.elapsed())), kept)
}

/// 7. Structure-preserving edits move the line of interest less than
/// removing its loop, and the two loop-free comparisons are close.
fn criterion_7(model: &VulcanModel) -> Outcome {
    let start = Instant::now();
    let triplets = generate_similarity_triplets(20, 11);
    let rows = similarity_experiment(model, &triplets).map_err(|e| e.to_string())?;
    let by_pair: BTreeMap<&str, _> = rows.iter().map(|r| (r.pair.as_str(), r)).collect();
    let (bm, bn, mn) = (by_pair["base-mod_dep"], by_pair["base-no_mod_dep"], by_pair["mod_dep-no_mod_dep"]);
    let pooled = ((bn.std.powi(2) + mn.std.powi(2)) / 2.0).sqrt();
    let detail = format!(
        "base-mod {:.3}, base-nomod {:.3} (sd {:.3}), mod-nomod {:.3} (sd {:.3}), pooled sd {pooled:.3}",
        bm.mean, bn.mean, bn.std, mn.mean, mn.std
    );
    ensure(bm.mean < bn.mean, || format!("base-mod not closer: {detail}"))?;
    ensure((bn.mean - mn.mean).abs() < pooled, || format!("loop-free distances differ: {detail}"))?;
    within(Duration::from_secs(5 * 60), start)?;
    Ok(detail)
}

/// 8. Metric identities on random confusion matrices.
fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut defined_f1 = 0;
    for _ in 0..1000 {
        let mut draw = || if rng.gen_bool(0.1) { 0 } else { rng.gen_range(0..200u64) };
        let (tp, fp, tn, fn_) = (draw(), draw(), draw(), draw());
        let m = Metrics::from_counts(tp, fp, tn, fn_);
        match (m.recall, m.fnr) {
            (Ratio::Value(r), Ratio::Value(f)) => ensure(r == 1.0 - f, || format!("recall {r} vs 1 - fnr {}", 1.0 - f))?,
            (r, f) => ensure(r.is_undefined() && f.is_undefined() && tp + fn_ == 0, || format!("{r:?} {f:?}"))?,
        }
        let fnr_expected = (tp + fn_ > 0).then(|| fn_ as f64 / (tp + fn_) as f64);
        ensure(m.fnr.value() == fnr_expected, || format!("fnr {:?} vs {fnr_expected:?}", m.fnr))?;
        let p_expected = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
        ensure(m.precision.value() == p_expected, || format!("precision {:?} vs {p_expected:?}", m.precision))?;
        match (m.precision.value(), m.recall.value()) {
            (Some(p), Some(r)) if p + r > 0.0 => {
                ensure(m.f1 == Ratio::Value(2.0 * p * r / (p + r)), || format!("f1 {:?} for p {p} r {r}", m.f1))?;
                defined_f1 += 1;
            }
            _ => ensure(m.f1.is_undefined(), || format!("f1 {:?} should be undefined", m.f1))?,
        }
    }
    Ok(format!("1000 matrices, {defined_f1} with a defined F1"))
}

/// 9. Two runs with the same seed and corpus give identical checkpoints and
/// results files.
fn criterion_9(records: &[CorpusRecord]) -> Outcome {
    let again = generate_corpus(7, &CorpusSpec::default()).map_err(|e| e.to_string())?;
    ensure(corpus_hash(records) == corpus_hash(&again), || "corpus hash differs between generations".into())?;
    let cfg = ExperimentConfig {
        max_epochs: 2,
        ..experiment_config()
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut ckpts = Vec::new();
    let mut csvs = Vec::new();
    for run in 0..2 {
        let (model, _) = train(&again, &cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("run{run}.ckpt"));
        save_model(&model, &path).map_err(|e| e.to_string())?;
        ckpts.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        let results = run_ablation_suite(&again, &cfg, &[Variant::Full], &[1]).map_err(|e| e.to_string())?;
        csvs.push(results_csv(&results));
    }
    ensure(ckpts[0] == ckpts[1], || "checkpoints differ".into())?;
    ensure(csvs[0] == csvs[1], || "results CSV differs".into())?;
    Ok(format!("checkpoints of {} bytes and CSVs identical", ckpts[0].len()))
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut outcomes: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |n: u32, o: Outcome| {
        match &o {
            Ok(d) => println!("criterion {n}: PASS ({d})"),
            Err(d) => println!("criterion {n}: FAIL ({d})"),
        }
        outcomes.push((n, o));
    };

    if wanted(1) {
        report(1, criterion_1());
    }
    if wanted(2) {
        report(2, criterion_2());
    }
    if wanted(3) {
        report(3, criterion_3());
    }
    if wanted(4) {
        report(4, criterion_4());
    }
    if wanted(5) {
        report(5, criterion_5());
    }
    if wanted(8) {
        report(8, criterion_8());
    }
    if wanted(6) || wanted(7) || wanted(9) {
        match generate_corpus(7, &CorpusSpec::default()) {
            Err(e) => {
                for n in [6, 7, 9].into_iter().filter(|&n| wanted(n)) {
                    report(n, Err(format!("corpus generation failed: {e}")));
                }
            }
            Ok(records) => {
                if wanted(6) || wanted(7) {
                    let (six, model) = criterion_6(&records);
                    if wanted(6) {
                        report(6, six);
                    }
                    if wanted(7) {
                        match model {
                            Some(m) => report(7, criterion_7(&m)),
                            None => report(7, Err("no trained model".into())),
                        }
                    }
                }
                if wanted(9) {
                    report(9, criterion_9(&records));
                }
            }
        }
    }

    let failed: Vec<u32> = outcomes.iter().filter(|(_, o)| o.is_err()).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: {} criteria passed", outcomes.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
