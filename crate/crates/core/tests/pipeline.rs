use proptest::prelude::*;
use vulcan_core::corpus::{
    alpha_rename, corpus_hash, generate_corpus, generate_program, label_oracle, read_corpus, write_corpus, CorpusSpec,
    SizeSpec,
};
use vulcan_core::dependence::build_vocabs;
use vulcan_core::frontend::{parse_source, pretty_print};
use vulcan_core::model::{load_model, save_model, ModelConfig, VulcanModel};

#[test]
fn generator_labels_match_ast_oracle_over_1000_programs() {
    for seed in 0..1000u64 {
        let g = generate_program(seed, &SizeSpec::default()).unwrap();
        let ast = g.program.parse().unwrap();
        assert_eq!(label_oracle(&ast), g.labels, "program seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generated_source_is_canonical(seed in any::<u64>()) {
        let g = generate_program(seed, &SizeSpec::default()).unwrap();
        let ast = parse_source(&g.program.source).unwrap();
        let printed = pretty_print(&ast);
        prop_assert_eq!(&printed, &g.program.source);
        prop_assert_eq!(parse_source(&printed).unwrap(), ast);
    }

    #[test]
    fn renaming_preserves_labels(seed in any::<u64>(), rename_seed in any::<u64>()) {
        let g = generate_program(seed, &SizeSpec::default()).unwrap();
        let ast = g.program.parse().unwrap();
        let renamed = alpha_rename(&ast, rename_seed);
        prop_assert_eq!(label_oracle(&renamed), label_oracle(&ast));
        let reparsed = parse_source(&pretty_print(&renamed)).unwrap();
        prop_assert_eq!(label_oracle(&reparsed), g.labels);
    }
}

#[test]
fn corpus_round_trips_through_jsonl() {
    let spec = CorpusSpec { programs: 20, ..CorpusSpec::default() };
    let records = generate_corpus(3, &spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    write_corpus(&path, &records).unwrap();
    let back = read_corpus(&path).unwrap();
    assert_eq!(corpus_hash(&back), corpus_hash(&records));
    assert_eq!(back.len(), 20);
}

#[test]
fn checkpoint_round_trip_keeps_predictions() {
    let g = generate_program(9, &SizeSpec::default()).unwrap();
    let ast = g.program.parse().unwrap();
    let cfg = ModelConfig::tiny();
    let vocab = build_vocabs(std::slice::from_ref(&ast), cfg.endpoint_mode()).unwrap();
    let model = VulcanModel::new(cfg, vocab, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    let lines: Vec<usize> = g.labels.iter().map(|l| l.line).collect();
    let a = model.predict(&model.prepare("p", &g.program.source).unwrap(), &lines).unwrap();
    let b = loaded.predict(&loaded.prepare("p", &g.program.source).unwrap(), &lines).unwrap();
    assert_eq!(a, b);
}
