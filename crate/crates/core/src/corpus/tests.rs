use super::*;
use crate::frontend::{parse_source, pretty_print, NodeKind};

fn spec(min: usize, max: usize) -> SizeSpec {
    SizeSpec::lines(min, max)
}

fn oracle_labels(source: &str) -> Vec<LabeledLine> {
    label_oracle(&parse_source(source).unwrap())
}

#[test]
fn same_seed_gives_identical_program() {
    let a = generate_program(42, &SizeSpec::default()).unwrap();
    let b = generate_program(42, &SizeSpec::default()).unwrap();
    assert_eq!(a, b);
    let c = generate_program(43, &SizeSpec::default()).unwrap();
    assert_ne!(a.program.source, c.program.source);
}

#[test]
fn zero_plants_means_all_negative() {
    for seed in 0..50 {
        let g = generate_program(seed, &spec(10, 40).with_plants(vec![])).unwrap();
        assert!(g.labels.iter().all(|l| l.label == 0 && l.vuln.is_none()));
        assert_eq!(oracle_labels(&g.program.source), g.labels);
    }
}

#[test]
fn planted_division_on_a_ten_line_program() {
    let g = generate_program(1, &SizeSpec::lines(5, 10).with_plants(vec![VulnClass::UncheckedDiv])).unwrap();
    assert!(g.program.source.lines().count() <= 10);
    let positives: Vec<_> = g.labels.iter().filter(|l| l.label == 1).collect();
    assert_eq!(positives.len(), 1);
    assert_eq!(positives[0].vuln, Some(VulnClass::UncheckedDiv));
    assert!(g.program.lines[positives[0].line - 1].contains(" / "));
    assert_eq!(oracle_labels(&g.program.source), g.labels);
}

#[test]
fn each_class_can_be_planted_alone() {
    for class in VulnClass::ALL {
        for seed in 0..30 {
            let g = generate_program(seed, &spec(12, 40).with_plants(vec![class])).unwrap();
            let classes: Vec<_> = g.labels.iter().filter_map(|l| l.vuln).collect();
            assert!(!classes.is_empty() && classes.iter().all(|&c| c == class), "{class}: {classes:?}");
            assert_eq!(oracle_labels(&g.program.source), g.labels, "{}", g.program.source);
        }
    }
}

#[test]
fn generator_and_oracle_agree() {
    for seed in 0..300 {
        let g = generate_program(seed, &SizeSpec::default()).unwrap();
        assert_eq!(oracle_labels(&g.program.source), g.labels, "seed {seed}:\n{}", g.program.source);
    }
}

#[test]
fn emitted_text_is_canonical() {
    for seed in 0..100 {
        let g = generate_program(seed, &SizeSpec::default()).unwrap();
        let ast = parse_source(&g.program.source).unwrap();
        assert_eq!(pretty_print(&ast), g.program.source);
    }
}

#[test]
fn recorded_statement_lines_match_parsed_anchors() {
    for seed in 0..100 {
        let g = generate_program(seed, &SizeSpec::default()).unwrap();
        let ast = parse_source(&g.program.source).unwrap();
        for rec in &g.statements {
            let found = ast.nodes.iter().any(|n| n.line == rec.line && n.kind == rec.kind);
            assert!(found, "seed {seed}: no {:?} on line {}", rec.kind, rec.line);
        }
    }
}

#[test]
fn labeled_lines_host_assignments() {
    let g = generate_program(9, &SizeSpec::default()).unwrap();
    let ast = parse_source(&g.program.source).unwrap();
    for l in &g.labels {
        assert!(crate::frontend::assignments_on_line(&ast, l.line).unwrap().is_some());
    }
}

#[test]
fn unsatisfiable_spec_is_rejected() {
    // three plants cannot fit in three lines
    let err = generate_program(0, &spec(3, 3).with_plants(vec![VulnClass::LoopOverflow; 3])).unwrap_err();
    assert_eq!(err, CorpusError::GenerationRetryExceeded { attempts: MAX_ATTEMPTS });
    assert!(matches!(generate_program(0, &spec(10, 200)), Err(CorpusError::InvalidSpec(_))));
}

#[test]
fn ext_call_as_last_statement_marks_nothing() {
    let src = "func f(a) {\n    var b = a * 2\n    var c = ext_call(b)\n}\n";
    assert!(oracle_labels(src).iter().all(|l| l.label == 0));
}

#[test]
fn assignments_after_ext_call_in_the_same_block() {
    let src = "\
func f(a) {
    if a > 0 {
        var s = ext_call(a)
        var t = s * 2
    }
    var u = a * 3
}
";
    let labels = oracle_labels(src);
    assert_eq!(labels[0], LabeledLine::new(3, None));
    assert_eq!(labels[1], LabeledLine::new(4, Some(VulnClass::DeadAfterCall)));
    assert_eq!(labels[2], LabeledLine::new(6, None));
}

#[test]
fn guarded_division_is_benign() {
    let src = "\
func f(x, d) {
    d = assert_nonzero(d)
    var q = x / d
    var p = x / 4
    d = d - 1
    var r = x / d
}
";
    let labels = oracle_labels(src);
    assert_eq!(labels[1], LabeledLine::new(3, None));
    assert_eq!(labels[2], LabeledLine::new(4, None));
    assert_eq!(labels[4], LabeledLine::new(6, Some(VulnClass::UncheckedDiv)));
}

#[test]
fn parameter_denominator_is_unchecked() {
    let labels = oracle_labels("func f(x, d) {\n    var q = x / d\n}\n");
    assert_eq!(labels, vec![LabeledLine::new(2, Some(VulnClass::UncheckedDiv))]);
}

#[test]
fn loop_overflow_needs_loop_definition_and_no_bound_check() {
    let src = "\
func f(n, acc, y) {
    var b = acc + y
    while n > 0 {
        acc = acc * 2
        n = n - 1
    }
    var r = acc + y
    if acc < 100 {
        var s = acc + y
    }
    var t = acc * y
}
";
    let labels = oracle_labels(src);
    let find = |line| labels.iter().find(|l| l.line == line).unwrap().vuln;
    assert_eq!(find(2), None);
    assert_eq!(find(7), Some(VulnClass::LoopOverflow));
    assert_eq!(find(9), None);
    assert_eq!(find(11), None);
}

#[test]
fn corpus_positive_rate_and_splits() {
    let records = generate_corpus(7, &CorpusSpec::default()).unwrap();
    assert_eq!(records.len(), 200);
    let rate = positive_rate(&records);
    assert!((0.02..=0.05).contains(&rate), "positive rate {rate}");
    let count = |s| records.iter().filter(|r| r.split == s).count();
    assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (140, 30, 30));
    assert_eq!(assign_splits(200, 7), records.iter().map(|r| r.split).collect::<Vec<_>>());
    let again = generate_corpus(7, &CorpusSpec::default()).unwrap();
    assert_eq!(corpus_hash(&records), corpus_hash(&again));
}

#[test]
fn label_noise_flips_some_labels() {
    let spec = CorpusSpec {
        programs: 20,
        ..CorpusSpec::default()
    };
    let clean = generate_corpus(3, &spec).unwrap();
    let noisy = generate_corpus(
        3,
        &CorpusSpec {
            label_noise: 0.2,
            ..spec.clone()
        },
    )
    .unwrap();
    let flips = clean
        .iter()
        .zip(&noisy)
        .flat_map(|(a, b)| a.labels.iter().zip(&b.labels))
        .filter(|(a, b)| a.label != b.label)
        .count();
    assert!(flips > 0);
    assert!(generate_corpus(3, &CorpusSpec { label_noise: 1.5, ..spec }).is_err());
}

fn synthetic_examples(pos: usize, neg: usize) -> Vec<LineExample> {
    (0..pos + neg)
        .map(|i| LineExample {
            record: i / 10,
            line: i % 10 + 1,
            label: (i % ((pos + neg) / pos.max(1)) == 0 && i / ((pos + neg) / pos.max(1)) < pos) as u8,
        })
        .collect()
}

#[test]
fn subsampling_keeps_positives_and_caps_negatives() {
    let ex = synthetic_examples(10, 1000);
    assert_eq!(ex.iter().filter(|e| e.label == 1).count(), 10);
    let kept = subsample_negatives(&ex, 10.0, 5);
    assert_eq!(kept.iter().filter(|e| e.label == 1).count(), 10);
    assert_eq!(kept.iter().filter(|e| e.label == 0).count(), 100);
    assert_eq!(kept, subsample_negatives(&ex, 10.0, 5));
    assert_ne!(kept, subsample_negatives(&ex, 10.0, 6));
    let all = subsample_negatives(&ex, 1000.0, 5);
    assert_eq!(all.len(), ex.len());
}

#[test]
fn corpus_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let records = generate_corpus(
        11,
        &CorpusSpec {
            programs: 100,
            ..CorpusSpec::default()
        },
    )
    .unwrap();
    write_corpus(&path, &records).unwrap();
    assert_eq!(read_corpus(&path).unwrap(), records);
}

#[test]
fn truncated_corpus_file_reports_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let records = generate_corpus(
        11,
        &CorpusSpec {
            programs: 3,
            ..CorpusSpec::default()
        },
    )
    .unwrap();
    write_corpus(&path, &records).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() - 20]).unwrap();
    match read_corpus(&path) {
        Err(CorpusError::Format { record, .. }) => assert_eq!(record, 3),
        other => panic!("expected format error, got {other:?}"),
    }
    std::fs::write(&path, "").unwrap();
    assert!(read_corpus(&path).unwrap().is_empty());
}

#[test]
fn triplet_lines_of_interest_match() {
    let triplets = generate_similarity_triplets(20, 3);
    assert_eq!(triplets.len(), 20);
    for t in &triplets {
        let loi = t.line_of_interest;
        let text = &t.base.lines[loi.base - 1];
        assert_eq!(&t.mod_dep.lines[loi.mod_dep - 1], text);
        assert_eq!(&t.no_mod_dep.lines[loi.no_mod_dep - 1], text);
        for p in [&t.base, &t.mod_dep, &t.no_mod_dep] {
            assert_eq!(pretty_print(&p.parse().unwrap()), p.source);
        }
    }
}

#[test]
fn no_mod_dep_only_drops_the_loop() {
    for t in generate_similarity_triplets(20, 4) {
        let base: Vec<&str> = t.base.source.lines().collect();
        let loop_at = base.iter().position(|l| l.trim_start().starts_with("while ")).unwrap();
        let mut expected: Vec<String> = base.iter().map(|s| s.to_string()).collect();
        expected.remove(loop_at + 2);
        let body = expected.remove(loop_at + 1);
        expected[loop_at] = body.trim_start().to_string();
        expected[loop_at] = format!("    {}", expected[loop_at]);
        let got: Vec<String> = t.no_mod_dep.source.lines().map(str::to_string).collect();
        assert_eq!(got, expected);
    }
}

#[test]
fn mod_dep_keeps_statement_kinds_at_line_of_interest() {
    fn kinds_at(p: &crate::frontend::SourceProgram, line: usize) -> Vec<NodeKind> {
        let ast = p.parse().unwrap();
        ast.preorder(ast.root)
            .into_iter()
            .filter(|&n| ast.node(n).line == line && n != ast.root)
            .map(|n| ast.kind(n))
            .collect()
    }
    for t in generate_similarity_triplets(20, 5) {
        let loi = t.line_of_interest;
        assert_eq!(kinds_at(&t.base, loi.base), kinds_at(&t.mod_dep, loi.mod_dep));
        assert_ne!(t.base.source, t.mod_dep.source);
    }
}

#[test]
fn renaming_changes_only_names() {
    let g = generate_program(21, &SizeSpec::default()).unwrap();
    let renamed = alpha_rename_source(&g.program, 1).unwrap();
    assert_eq!(renamed.line_count(), g.program.line_count());
    let a = parse_source(&g.program.source).unwrap();
    let b = parse_source(&renamed.source).unwrap();
    let kinds = |ast: &crate::frontend::Ast| ast.nodes.iter().map(|n| (n.kind, n.line, n.op_text.clone())).collect::<Vec<_>>();
    assert_eq!(kinds(&a), kinds(&b));
    assert_eq!(label_oracle(&a), label_oracle(&b));
    assert_ne!(g.program.source, renamed.source);
}
