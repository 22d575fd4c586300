use std::path::Path;

use elastic_bench::dataset::{
    format_dataset, load_raw, load_split, parse_dataset, write_dataset, Dataset, Delimiter, LabelMap,
    LoadOptions,
};
use elastic_bench::folds::make_folds;
use elastic_core::learn::{Example, Label};
use elastic_core::TimeSeries;
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(
        (any::<bool>(), prop::collection::vec(-1e12f64..1e12, 1..20)),
        2..15,
    )
    .prop_map(|rows| Dataset {
        name: "gen".into(),
        examples: rows
            .into_iter()
            .map(|(pos, v)| {
                let label = if pos { Label::Positive } else { Label::Negative };
                Example::new(TimeSeries::new(v).unwrap(), label)
            })
            .collect(),
    })
}

proptest! {
    #[test]
    fn write_then_read_is_exact(data in dataset_strategy(), tab in any::<bool>()) {
        let delim = if tab { '\t' } else { ',' };
        let text = format_dataset(&data, None, delim);
        let raw = parse_dataset(&text, Path::new("gen"), LoadOptions::default()).unwrap();
        prop_assert_eq!(raw.rows.len(), data.len());
        for ((l, x), ex) in raw.rows.iter().zip(&data.examples) {
            prop_assert_eq!(*l, ex.label.sign());
            prop_assert_eq!(x.values(), ex.series.values());
        }
    }

    #[test]
    fn ten_folds_keep_class_ratios(pos in 1usize..60, neg in 1usize..60, seed in any::<u64>()) {
        prop_assume!(pos + neg > 30);
        let mut labels = vec![Label::Positive; pos];
        labels.extend(vec![Label::Negative; neg]);
        let folds = make_folds(&labels, seed);
        prop_assert_eq!(folds.len(), 10);
        for f in &folds {
            let p = f.validation.iter().filter(|&&i| labels[i] == Label::Positive).count();
            prop_assert!(p == pos / 10 || p == pos.div_ceil(10));
            let q = f.validation.len() - p;
            prop_assert!(q == neg / 10 || q == neg.div_ceil(10));
        }
    }
}

#[test]
fn files_round_trip_with_raw_labels() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("a_TRAIN");
    let test = dir.path().join("a_TEST");
    std::fs::write(&train, "2,0.1,0.2,0.3\n1,1e-3,2E2\n").unwrap();
    std::fs::write(&test, "1\t3\t4\n2\t-1\t-2\tNaN\tNaN\n").unwrap();
    let (a, b, map) = load_split(&train, &test, LoadOptions::default()).unwrap();
    assert_eq!(map.pair(), [1.0, 2.0]);
    assert_eq!(a.labels(), vec![Label::Positive, Label::Negative]);
    assert_eq!(b.examples[1].series.values(), &[-1.0, -2.0]);

    let out = dir.path().join("copy");
    write_dataset(&out, &a, Some(&map), ',').unwrap();
    let back = load_raw(&out, LoadOptions { delimiter: Delimiter::Comma, z_normalize: false }).unwrap();
    assert_eq!(back.distinct_labels(), vec![1.0, 2.0]);
    let again = Dataset::from_raw(&back, &LabelMap::fit(&[&back]).unwrap()).unwrap();
    assert_eq!(again.examples, a.examples);
}

#[test]
fn loader_errors() {
    let p = Path::new("mem");
    let e = parse_dataset("1,2\n1,x\n", p, LoadOptions::default()).unwrap_err();
    assert!(e.to_string().contains(":2:"), "{e}");
    assert!(parse_dataset("1,2\n", p, LoadOptions::default()).is_err());
    let three = parse_dataset("1,2\n2,3\n3,4\n", p, LoadOptions::default()).unwrap();
    assert!(LabelMap::fit(&[&three]).is_err());
}
