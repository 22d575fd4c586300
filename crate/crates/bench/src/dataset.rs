//! Labelled time series files.
//!
//! One example per line: the class label, then the samples. Fields are
//! separated by commas or tabs (detected from the first data line, or forced
//! with [`Delimiter`]); runs of spaces are accepted as a fallback. Blank lines
//! are skipped and trailing `NaN` fields, used to pad variable-length series,
//! are dropped.
//!
//! Raw labels become `{-1, +1}` by sorting the two distinct values
//! numerically: the smaller one is `-1`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use elastic_core::learn::{Example, Label};
use elastic_core::TimeSeries;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Auto,
    Comma,
    Tab,
    Whitespace,
}

impl Delimiter {
    fn detect(line: &str) -> Self {
        if line.contains(',') {
            Delimiter::Comma
        } else if line.contains('\t') {
            Delimiter::Tab
        } else {
            Delimiter::Whitespace
        }
    }

    fn split<'a>(self, line: &'a str) -> Box<dyn Iterator<Item = &'a str> + 'a> {
        match self {
            Delimiter::Comma => Box::new(line.split(',').map(str::trim)),
            Delimiter::Tab => Box::new(line.split('\t').map(str::trim)),
            Delimiter::Whitespace | Delimiter::Auto => Box::new(line.split_whitespace()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadOptions {
    pub delimiter: Delimiter,
    /// Z-normalise every series after loading.
    pub z_normalize: bool,
}

/// Rows of a file before label mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub path: PathBuf,
    pub rows: Vec<(f64, TimeSeries)>,
}

impl RawDataset {
    pub fn distinct_labels(&self) -> Vec<f64> {
        let mut labels: Vec<f64> = self.rows.iter().map(|(l, _)| *l).collect();
        labels.sort_by(f64::total_cmp);
        labels.dedup();
        labels
    }
}

fn parse_number(field: &str) -> Option<f64> {
    field.parse::<f64>().ok()
}

/// Parse dataset text. `path` only labels error messages.
pub fn parse_dataset(text: &str, path: &Path, options: LoadOptions) -> Result<RawDataset> {
    let mut delimiter = options.delimiter;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if delimiter == Delimiter::Auto {
            delimiter = Delimiter::detect(trimmed);
        }
        let err = |message: String| BenchError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let mut fields = delimiter.split(trimmed);
        let label_field = fields.next().unwrap_or_default();
        let label = parse_number(label_field)
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(format!("invalid label `{label_field}`")))?;
        let mut values = Vec::new();
        for field in fields {
            let v = parse_number(field).ok_or_else(|| err(format!("invalid sample `{field}`")))?;
            values.push(v);
        }
        while values.last().is_some_and(|v| v.is_nan()) {
            values.pop();
        }
        if values.is_empty() {
            return Err(err("row has no samples".into()));
        }
        let series = TimeSeries::new(values).map_err(|e| err(e.to_string()))?;
        let series = if options.z_normalize {
            series.z_normalized()
        } else {
            series
        };
        rows.push((label, series));
    }
    if rows.len() < 2 {
        return Err(BenchError::Data(format!(
            "{}: need at least 2 examples, found {}",
            path.display(),
            rows.len()
        )));
    }
    Ok(RawDataset {
        path: path.to_path_buf(),
        rows,
    })
}

pub fn load_raw(path: &Path, options: LoadOptions) -> Result<RawDataset> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, path, options)
}

/// Raw label values behind `-1` and `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMap {
    pub negative: f64,
    pub positive: f64,
}

impl LabelMap {
    /// Mapping from the distinct labels of all given sets, which must number
    /// exactly two.
    pub fn fit(sets: &[&RawDataset]) -> Result<Self> {
        let mut labels: Vec<f64> = sets.iter().flat_map(|s| s.distinct_labels()).collect();
        labels.sort_by(f64::total_cmp);
        labels.dedup();
        match labels.as_slice() {
            [negative, positive] => Ok(Self {
                negative: *negative,
                positive: *positive,
            }),
            other => Err(BenchError::Data(format!(
                "expected exactly two classes, found {} ({:?})",
                other.len(),
                other
            ))),
        }
    }

    pub fn from_pair(pair: [f64; 2]) -> Self {
        Self {
            negative: pair[0],
            positive: pair[1],
        }
    }

    pub fn pair(&self) -> [f64; 2] {
        [self.negative, self.positive]
    }

    pub fn label(&self, raw: f64) -> Option<Label> {
        if raw == self.negative {
            Some(Label::Negative)
        } else if raw == self.positive {
            Some(Label::Positive)
        } else {
            None
        }
    }

    pub fn raw(&self, label: Label) -> f64 {
        match label {
            Label::Negative => self.negative,
            Label::Positive => self.positive,
        }
    }
}

/// A two-class dataset with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn from_raw(raw: &RawDataset, map: &LabelMap) -> Result<Self> {
        let examples = raw
            .rows
            .iter()
            .map(|(l, x)| {
                map.label(*l)
                    .map(|label| Example::new(x.clone(), label))
                    .ok_or_else(|| {
                        BenchError::Data(format!(
                            "{}: label {l} is not one of {:?}",
                            raw.path.display(),
                            map.pair()
                        ))
                    })
            })
            .collect::<Result<_>>()?;
        let name = raw
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self { name, examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Length of the longest series.
    pub fn max_len(&self) -> usize {
        self.examples.iter().map(|e| e.series.len()).max().unwrap_or(0)
    }

    pub fn series(&self) -> Vec<TimeSeries> {
        self.examples.iter().map(|e| e.series.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.examples.iter().map(|e| e.label).collect()
    }
}

/// Load a training and a test file with a shared label mapping.
pub fn load_split(train: &Path, test: &Path, options: LoadOptions) -> Result<(Dataset, Dataset, LabelMap)> {
    let raw_train = load_raw(train, options)?;
    let raw_test = load_raw(test, options)?;
    let map = LabelMap::fit(&[&raw_train, &raw_test])?;
    Ok((
        Dataset::from_raw(&raw_train, &map)?,
        Dataset::from_raw(&raw_test, &map)?,
        map,
    ))
}

/// Text form readable by [`parse_dataset`]; labels are written as `-1`/`1`
/// unless `map` gives the raw values. Samples round-trip exactly.
pub fn format_dataset(data: &Dataset, map: Option<&LabelMap>, delimiter: char) -> String {
    let mut out = String::new();
    for ex in &data.examples {
        let label = map.map_or(ex.label.sign(), |m| m.raw(ex.label));
        let _ = write!(out, "{label}");
        for v in ex.series.iter() {
            let _ = write!(out, "{delimiter}{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(path: &Path, data: &Dataset, map: Option<&LabelMap>, delimiter: char) -> Result<()> {
    fs::write(path, format_dataset(data, map, delimiter)).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `<dir>/<name>/<name>_TRAIN` and `_TEST`, with or without a `.tsv`/`.txt`
/// extension.
pub fn ucr_paths(dir: &Path, name: &str) -> Option<(PathBuf, PathBuf)> {
    let base = dir.join(name);
    for ext in ["", ".tsv", ".txt", ".csv"] {
        let train = base.join(format!("{name}_TRAIN{ext}"));
        let test = base.join(format!("{name}_TEST{ext}"));
        if train.is_file() && test.is_file() {
            return Some((train, test));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RawDataset> {
        parse_dataset(text, Path::new("mem"), LoadOptions::default())
    }

    #[test]
    fn two_row_file() {
        let raw = parse("1,0.0,1.0\n-1,1.0,0.0").unwrap();
        assert_eq!(raw.rows.len(), 2);
        assert_eq!(raw.rows[0].1.values(), &[0.0, 1.0]);
        let map = LabelMap::fit(&[&raw]).unwrap();
        let d = Dataset::from_raw(&raw, &map).unwrap();
        assert_eq!(d.labels(), vec![Label::Positive, Label::Negative]);
        assert_eq!(d.max_len(), 2);
    }

    #[test]
    fn tabs_blank_lines_scientific_and_padding() {
        let raw = parse("\n2\t1e-3\t-2.5E+1\tNaN\n\n1\t3\t4\t5\n").unwrap();
        assert_eq!(raw.rows[0].1.values(), &[1e-3, -25.0]);
        assert_eq!(raw.rows[1].1.len(), 3);
        let map = LabelMap::fit(&[&raw]).unwrap();
        assert_eq!(map.pair(), [1.0, 2.0]);
    }

    #[test]
    fn whitespace_fallback() {
        let raw = parse("  1.0000000e+00   2.0   3.0\n  2.0000000e+00  1.0  1.0\n").unwrap();
        assert_eq!(raw.distinct_labels(), vec![1.0, 2.0]);
    }

    #[test]
    fn labels_sort_numerically_not_textually() {
        let raw = parse("10,1\n9,2\n").unwrap();
        let map = LabelMap::fit(&[&raw]).unwrap();
        assert_eq!(map.negative, 9.0);
        assert_eq!(map.positive, 10.0);
    }

    #[test]
    fn errors_report_line_numbers() {
        match parse("1,2,3\n\n1,x,3\n") {
            Err(BenchError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("1,2\n"), Err(BenchError::Data(_))));
        assert!(matches!(parse("1\n2,3\n"), Err(BenchError::Parse { line: 1, .. })));
        let three = parse("1,1\n2,2\n3,3\n").unwrap();
        assert!(LabelMap::fit(&[&three]).is_err());
    }

    #[test]
    fn forced_delimiter() {
        let opts = LoadOptions {
            delimiter: Delimiter::Tab,
            ..LoadOptions::default()
        };
        assert!(parse_dataset("1,2\n1,3\n", Path::new("m"), opts).is_err());
    }

    #[test]
    fn z_normalization_flag() {
        let opts = LoadOptions {
            z_normalize: true,
            ..LoadOptions::default()
        };
        let raw = parse_dataset("1,1,2,3\n2,5,5,5\n", Path::new("m"), opts).unwrap();
        let x = raw.rows[0].1.values();
        assert!((x.iter().sum::<f64>()).abs() < 1e-12);
        assert_eq!(raw.rows[1].1.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn format_round_trips() {
        let raw = parse("1,0.1,0.2,0.30000000000000004\n-1,1e300,-5e-324\n").unwrap();
        let map = LabelMap::fit(&[&raw]).unwrap();
        let d = Dataset::from_raw(&raw, &map).unwrap();
        for delim in [',', '\t'] {
            let text = format_dataset(&d, Some(&map), delim);
            let back = Dataset::from_raw(&parse(&text).unwrap(), &map).unwrap();
            assert_eq!(back.examples, d.examples);
        }
    }
}
