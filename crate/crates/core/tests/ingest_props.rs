use std::path::PathBuf;

use fairforest::ingest::{load_csv, load_csv_reader, split, test_size, FeatureSchema};
use fairforest::{builtin_schema, Error};
use proptest::prelude::*;

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

const SCHEMA: &str = r#"{
  "columns": [
    {"name": "age", "kind": "numeric"},
    {"name": "job", "kind": "categorical"},
    {"name": "sex", "kind": "sensitive", "values": ["M", "F"]},
    {"name": "y", "kind": "label", "values": ["no", "yes"]}
  ],
  "sensitive_privileged_value": "M",
  "favorable_label_value": "yes",
  "missing_tokens": ["?"]
}"#;

fn csv_from(rows: &[(u8, usize, bool, bool)]) -> String {
    const JOBS: [&str; 4] = ["clerk", "smith", "baker", "?"];
    let mut s = String::from("age,job,sex,y\n");
    for &(age, job, male, yes) in rows {
        s.push_str(&format!(
            "{age},{},{},{}\n",
            JOBS[job],
            if male { "M" } else { "F" },
            if yes { "yes" } else { "no" }
        ));
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_is_pure_one_hot_complete_and_leak_free(
        rows in prop::collection::vec((18u8..90, 0usize..4, any::<bool>(), any::<bool>()), 1..40)
    ) {
        let schema = FeatureSchema::from_json(SCHEMA).unwrap();
        let text = csv_from(&rows);
        let a = load_csv_reader(text.as_bytes(), &schema);
        let kept: Vec<_> = rows.iter().filter(|r| r.1 != 3).collect();
        if kept.is_empty() {
            prop_assert!(a.is_err() || a.as_ref().unwrap().is_empty());
            return Ok(());
        }
        let a = a.unwrap();
        let b = load_csv_reader(text.as_bytes(), &schema).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), kept.len());
        let names = a.feature_names();
        let job_cols: Vec<usize> = (0..names.len()).filter(|&j| names[j].starts_with("job=")).collect();
        prop_assert!(!names.iter().any(|n| n == "y" || n.contains("yes") || n.contains("sex=")));
        let sex_col = names.iter().position(|n| n == "sex").unwrap();
        for (i, r) in kept.iter().enumerate() {
            let row = a.row(i);
            prop_assert_eq!(job_cols.iter().filter(|&&j| row[j] == 1.0).count(), 1);
            prop_assert!(job_cols.iter().all(|&j| row[j] == 0.0 || row[j] == 1.0));
            prop_assert_eq!(row[0], f64::from(r.0));
            prop_assert_eq!(a.group(i), u8::from(r.2));
            prop_assert_eq!(row[sex_col], f64::from(u8::from(r.2)));
            prop_assert_eq!(a.label(i), u8::from(r.3));
        }
    }

    #[test]
    fn split_partitions_rows(n in 2usize..200, f in 0.05f64..0.95, seed in any::<u64>()) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let groups = (0..n).map(|i| (i % 2) as u8).collect();
        let data = fairforest::Dataset::from_rows(vec!["i".into()], "s", &rows, vec![0; n], groups).unwrap();
        let (train, test) = split(&data, f, seed).unwrap();
        prop_assert_eq!(test.len(), test_size(n, f));
        prop_assert_eq!(train.len() + test.len(), n);
        let mut ids: Vec<f64> = (0..train.len()).map(|i| train.row(i)[0]).chain((0..test.len()).map(|i| test.row(i)[0])).collect();
        ids.sort_by(f64::total_cmp);
        prop_assert_eq!(ids, (0..n).map(|i| i as f64).collect::<Vec<_>>());
        let (train2, _) = split(&data, f, seed).unwrap();
        prop_assert_eq!(train, train2);
    }
}

#[test]
fn shipped_adult_file_encodes() {
    let data = load_csv(repo_file("data/adult.csv"), &builtin_schema("adult").unwrap()).unwrap();
    // 32,561 rows, 2,399 with a missing value.
    assert_eq!(data.len(), 30_162);
    assert_eq!(data.sensitive_name(), "sex");
    assert_eq!(data.n_s1() + data.n_s0(), data.len());
    assert!(data.n_s1() > data.n_s0());
    let pos = data.labels().iter().filter(|&&y| y == 1).count();
    assert_eq!(pos, 7_508);
}

#[test]
fn shipped_compas_file_encodes() {
    let data = load_csv(repo_file("data/compas.csv"), &builtin_schema("compas").unwrap()).unwrap();
    assert!(data.len() > 6_000, "{} rows", data.len());
    assert_eq!(data.sensitive_name(), "race");
    assert!(data.n_s1() > 0 && data.n_s0() > 0);
}

#[test]
fn unseen_category_and_missing_file_are_input_errors() {
    let schema = FeatureSchema::from_json(SCHEMA).unwrap();
    let bad = "age,job,sex,y\n30,clerk,X,yes\n";
    match load_csv_reader(bad.as_bytes(), &schema) {
        Err(Error::Row { row, .. }) => assert_eq!(row, 2),
        other => panic!("expected a row error, got {other:?}"),
    }
    let err = load_csv("/no/such/file.csv", &schema).unwrap_err();
    assert!(err.to_string().contains("/no/such/file.csv"));
    assert_eq!(err.exit_code(), 2);
}
