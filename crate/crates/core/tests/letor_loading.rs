use std::fs;
use std::path::Path;

use oltr::dataset::{load_dataset, DatasetError, DatasetSpec};

fn write_fold(dir: &Path, train: &str, vali: &str, test: &str) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("train.txt"), train).unwrap();
    fs::write(dir.join("vali.txt"), vali).unwrap();
    fs::write(dir.join("test.txt"), test).unwrap();
}

const TRAIN: &str = "\
2 qid:1 1:0.2 2:0.9 3:0.5 # docid = a
0 qid:1 1:0.4 2:0.1 3:0.5 # docid = b
1 qid:1 1:0.6 2:0.5 3:0.5
0 qid:2 1:1.0 3:3.0
1 qid:2 1:2.0 2:1.0 3:1.0
";
const VALI: &str = "0 qid:3 1:1 2:1 3:1\n1 qid:3 1:0 2:0 3:0\n";
const TEST: &str = "1 qid:4 1:5 2:5 3:5\n0 qid:4 1:1 2:2 3:3\n";

#[test]
fn multi_fold_layout_loads_and_normalizes() {
    let root = tempfile::tempdir().unwrap();
    let spec = DatasetSpec::new("toy", 3, 2, 2);
    write_fold(&root.path().join("Fold1"), TRAIN, VALI, TEST);
    write_fold(&root.path().join("Fold2"), TEST, VALI, TRAIN);
    let ds = load_dataset(root.path(), &spec).unwrap();
    assert_eq!(ds.folds.len(), 2);
    let q1 = &ds.folds[0].train[0];
    assert_eq!(q1.query_id, "1");
    assert_eq!(q1.grades(), vec![2, 0, 1]);
    assert_eq!(q1.documents[0].features, vec![0.0, 1.0, 0.0]);
    assert_eq!(q1.documents[2].features, vec![1.0, 0.5, 0.0]);
    // Feature 2 of qid 2 is absent on the first line.
    assert_eq!(
        ds.folds[0].train[1].documents[0].features,
        vec![0.0, 0.0, 1.0]
    );
    assert_eq!(ds.folds[1].test.len(), 2);
}

#[test]
fn raw_features_survive_without_normalization() {
    let root = tempfile::tempdir().unwrap();
    let spec = DatasetSpec {
        normalize: false,
        ..DatasetSpec::new("toy", 3, 2, 1)
    };
    write_fold(root.path(), TRAIN, VALI, TEST);
    let ds = load_dataset(root.path(), &spec).unwrap();
    assert_eq!(
        ds.folds[0].test[0].documents[0].features,
        vec![5.0, 5.0, 5.0]
    );
}

#[test]
fn missing_split_and_overlap_are_reported() {
    let root = tempfile::tempdir().unwrap();
    let spec = DatasetSpec::new("toy", 3, 2, 1);
    fs::write(root.path().join("train.txt"), TRAIN).unwrap();
    assert!(matches!(
        load_dataset(root.path(), &spec),
        Err(DatasetError::MissingFile { .. })
    ));
    write_fold(root.path(), TRAIN, VALI, TRAIN);
    assert!(matches!(
        load_dataset(root.path(), &spec),
        Err(DatasetError::OverlappingPartitions { .. })
    ));
}

#[test]
fn grades_above_the_scale_are_rejected() {
    let root = tempfile::tempdir().unwrap();
    let spec = DatasetSpec::new("toy", 3, 2, 1);
    write_fold(root.path(), "4 qid:1 1:1\n", VALI, TEST);
    assert!(matches!(
        load_dataset(root.path(), &spec),
        Err(DatasetError::GradeOutOfRange { grade: 4, .. })
    ));
}

#[test]
fn letor_round_trip() {
    let root = tempfile::tempdir().unwrap();
    let spec = DatasetSpec {
        normalize: false,
        ..DatasetSpec::new("toy", 3, 2, 1)
    };
    write_fold(root.path(), TRAIN, VALI, TEST);
    let ds = load_dataset(root.path(), &spec).unwrap();
    let text: String = ds.folds[0].train.iter().map(|q| q.to_letor()).collect();
    let again = oltr::dataset::parse_letor(text.as_bytes(), 3, Path::new("mem")).unwrap();
    assert_eq!(again, ds.folds[0].train);
}
