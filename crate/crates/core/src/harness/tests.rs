use super::*;
use crate::corpus::{generate_program, CorpusRecord, SimilarityTriplet, SizeSpec, VulnClass};
use crate::frontend::SourceProgram;
use crate::model::ModelConfig;

fn record(seed: u64, plants: Vec<VulnClass>, split: Split) -> CorpusRecord {
    let g = generate_program(seed, &SizeSpec::lines(12, 24).with_plants(plants)).unwrap();
    CorpusRecord {
        id: format!("r{seed}"),
        source: g.program.source,
        labels: g.labels,
        split,
    }
}

fn toy_corpus() -> Vec<CorpusRecord> {
    vec![
        record(1, vec![VulnClass::UncheckedDiv, VulnClass::LoopOverflow], Split::Train),
        record(2, vec![VulnClass::DeadAfterCall], Split::Val),
    ]
}

fn tiny_cfg(seed: u64, epochs: usize) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelConfig::tiny(),
        max_epochs: epochs,
        patience: epochs,
        seed,
        ..ExperimentConfig::default()
    }
}

#[test]
fn hand_built_confusion_matrix() {
    let m = Metrics::from_counts(3, 1, 5, 1);
    assert_eq!(m.precision, Ratio::Value(0.75));
    assert_eq!(m.recall, Ratio::Value(0.75));
    assert_eq!(m.f1, Ratio::Value(0.75));
    assert_eq!(m.fpr, Ratio::Value(1.0 / 6.0));
    assert_eq!(m.fnr, Ratio::Value(0.25));
}

#[test]
fn perfect_and_all_positive_predictions() {
    let labels = [1, 0, 0, 1, 0];
    let perfect = Metrics::from_predictions(&labels, &[0.9, 0.1, 0.2, 0.8, 0.3]);
    assert_eq!((perfect.f1, perfect.fpr, perfect.fnr), (Ratio::Value(1.0), Ratio::Value(0.0), Ratio::Value(0.0)));
    let all = Metrics::from_predictions(&labels, &[0.9; 5]);
    assert_eq!((all.recall, all.fnr, all.fpr), (Ratio::Value(1.0), Ratio::Value(0.0), Ratio::Value(1.0)));
}

#[test]
fn undefined_ratios_are_not_zero() {
    let m = Metrics::from_counts(0, 0, 5, 0);
    assert!(m.precision.is_undefined() && m.recall.is_undefined() && m.fnr.is_undefined() && m.f1.is_undefined());
    assert_eq!(m.fpr, Ratio::Value(0.0));
    let m = Metrics::from_counts(0, 2, 3, 4);
    assert_eq!(m.precision, Ratio::Value(0.0));
    assert!(m.f1.is_undefined());
    assert_eq!(serde_json::to_string(&m.f1).unwrap(), "\"undefined\"");
    let back: Ratio = serde_json::from_str("\"undefined\"").unwrap();
    assert!(back.is_undefined());
}

#[test]
fn median_and_spread() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    let (m, s) = mean_std(&[1.0, 3.0]);
    assert_eq!(m, 2.0);
    assert!((s - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn all_negative_train_split_is_degenerate() {
    let records = vec![record(3, vec![], Split::Train), record(4, vec![], Split::Val)];
    assert!(matches!(train(&records, &tiny_cfg(1, 1)), Err(HarnessError::DegenerateTraining(_))));
    assert!(matches!(
        train_bow(&records, FeatureMode::LineTokens, &tiny_cfg(1, 1)),
        Err(HarnessError::DegenerateTraining(_))
    ));
    let no_val = vec![record(1, vec![VulnClass::UncheckedDiv], Split::Train)];
    assert!(matches!(train(&no_val, &tiny_cfg(1, 1)), Err(HarnessError::EmptySplit(Split::Val))));
}

#[test]
fn toy_training_lowers_the_loss() {
    let records = toy_corpus();
    let mut drops = Vec::new();
    for seed in 1..=3 {
        let (_, log) = train(&records, &tiny_cfg(seed, 3)).unwrap();
        assert_eq!(log.epochs.len(), 3);
        drops.push(log.epochs[0].train_loss - log.epochs[2].train_loss);
    }
    assert!(median(&drops) > 0.0, "loss drops {drops:?}");
}

#[test]
fn training_is_deterministic() {
    let records = toy_corpus();
    let (a, la) = train(&records, &tiny_cfg(7, 2)).unwrap();
    let (b, lb) = train(&records, &tiny_cfg(7, 2)).unwrap();
    assert_eq!(crate::nn::checkpoint::checkpoint_bytes(&a.store), crate::nn::checkpoint::checkpoint_bytes(&b.store));
    assert_eq!(la, lb);
    assert_eq!(evaluate(&a, &records, Split::Val).unwrap(), evaluate(&a, &records, Split::Val).unwrap());
}

#[test]
fn class_weights_follow_subsampled_counts() {
    let (_, log) = train(&toy_corpus(), &tiny_cfg(1, 1)).unwrap();
    let expected = log.train_negatives as f64 / log.train_positives as f64;
    assert_eq!(log.class_weights, [1.0, expected]);
    assert!(log.train_negatives <= 10 * log.train_positives);
}

#[test]
fn unseen_bow_features_use_the_unk_column() {
    let records = toy_corpus();
    let mut bow = train_bow(&records, FeatureMode::LineTokens, &tiny_cfg(1, 3)).unwrap();
    let unseen = vec!["never_seen_token".to_string(), "another_one".to_string()];
    assert_eq!(bow.vectorize(&unseen), vec![(0, 2.0)]);
    let before = bow.probability(&unseen);
    bow.weights[0] += 1.0;
    assert!(bow.probability(&unseen) > before);
}

#[test]
fn bow_features_per_mode() {
    let src = "func f(n, r) {\n    while n > 0 {\n        r = r * 2\n    }\n    var x = r + n\n}\n";
    let toks = line_features(src, &[5], FeatureMode::LineTokens).unwrap();
    assert_eq!(toks[0], vec!["var", "x", "=", "r", "+", "n"]);
    let nodes = line_features(src, &[5], FeatureMode::AstNodes).unwrap();
    assert!(nodes[0].contains(&"Loop".to_string()));
    let paths = line_features(src, &[5], FeatureMode::AstPathStrings).unwrap();
    assert_eq!(paths[0].len(), 2);
    assert!(paths[0].iter().any(|p| p.contains("Loopv")));
}

#[test]
fn suite_table_has_one_row_per_variant() {
    let records = toy_corpus();
    let results = run_ablation_suite(&records, &tiny_cfg(1, 1), &Variant::ABLATIONS, &[1]).unwrap();
    let table = summarize(&results, Split::Val);
    assert_eq!(table.len(), 4);
    let names: Vec<&str> = table.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, vec!["full", "no_endpoints", "prev_line", "no_attn"]);
    for r in &results[1..] {
        let mut c = r.config.clone();
        c.model = results[0].config.model.clone();
        assert_eq!(c, results[0].config);
        assert_ne!(r.config.model, results[0].config.model);
    }
    let csv = ablation::results_csv(&results);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "variant,seed,split,tp,fp,tn,fn,fpr,fnr,precision,recall,f1");
    assert_eq!(lines.count(), 4);
}

#[test]
fn identical_triplet_programs_have_zero_distance() {
    let (model, _) = train(&toy_corpus(), &tiny_cfg(1, 1)).unwrap();
    let src = "func f(a, w, i) {\n    var z = a * 3\n    while i > 0 {\n        z = z * w\n    }\n    var r = z - w\n    return r\n}\n";
    let p = SourceProgram::new("p", src);
    let t = SimilarityTriplet {
        base: p.clone(),
        mod_dep: p.clone(),
        no_mod_dep: p,
        line_of_interest: crate::corpus::LinesOfInterest {
            base: 6,
            mod_dep: 6,
            no_mod_dep: 6,
        },
    };
    let rows = similarity_experiment(&model, &[t.clone(), t]).unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!((r.mean, r.std, r.n), (0.0, 0.0, 2));
    }
}
