// SPDX-License-Identifier: MIT OR Apache-2.0

//! Fixed train/validation/test partition by filename rank.
//!
//! Files of each class are ranked in lexicographic filename order. The first
//! `cap` of a class form the train/validation pool, of which the first
//! `ceil(0.8 * cap)` train and the rest validate. The next `cap` files of the
//! class are the test set.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use attrgraph_core::io::{list_graph_files, load_files, DatasetEntry};
use attrgraph_core::report::{parse_report, Report, ReportHeader};
use attrgraph_core::Label;

use crate::error::{DetectorError, Result};

pub const DEFAULT_CAP: usize = 250;
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Train,
    Val,
    Test,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Train, Part::Val, Part::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Val => "val",
            Part::Test => "test",
        }
    }

    pub fn index_file_name(self) -> String {
        format!("{}.csv", self.as_str())
    }
}

/// File names (relative to the dataset directory) with labels, per part.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetSplit {
    pub cap: usize,
    pub train: Vec<(String, Label)>,
    pub val: Vec<(String, Label)>,
    pub test: Vec<(String, Label)>,
}

impl DatasetSplit {
    pub fn part(&self, part: Part) -> &[(String, Label)] {
        match part {
            Part::Train => &self.train,
            Part::Val => &self.val,
            Part::Test => &self.test,
        }
    }
}

pub fn train_count(cap: usize) -> usize {
    (TRAIN_FRACTION * cap as f64).ceil() as usize
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Splits labeled entries, assumed to be in lexicographic filename order.
pub fn split_entries(entries: &[DatasetEntry], cap: usize) -> Result<DatasetSplit> {
    let mut by_class: BTreeMap<Label, Vec<String>> = BTreeMap::new();
    for e in entries {
        let label = e.graph.label.ok_or_else(|| DetectorError::Unlabeled { path: e.path.clone() })?;
        by_class.entry(label).or_default().push(file_name(&e.path));
    }
    let count = |l| by_class.get(&l).map_or(0, Vec::len);
    let (correct, wrong) = (count(Label::Correct), count(Label::Wrong));
    if cap == 0 || correct < 2 * cap || wrong < 2 * cap {
        return Err(DetectorError::ClassDeficit {
            needed: 2 * cap.max(1),
            correct,
            wrong,
        });
    }
    let n_train = train_count(cap);
    let mut split = DatasetSplit {
        cap,
        ..Default::default()
    };
    for (label, mut names) in by_class {
        names.sort();
        let tag = |v: &[String]| v.iter().map(|n| (n.clone(), label)).collect::<Vec<_>>();
        split.train.extend(tag(&names[..n_train]));
        split.val.extend(tag(&names[n_train..cap]));
        split.test.extend(tag(&names[cap..2 * cap]));
    }
    for part in [&mut split.train, &mut split.val, &mut split.test] {
        part.sort();
    }
    Ok(split)
}

/// Loads and splits every graph in `dir`.
pub fn split_dataset(dir: impl AsRef<Path>, cap: usize) -> Result<DatasetSplit> {
    let files = list_graph_files(dir.as_ref())?;
    if files.is_empty() {
        return Err(attrgraph_core::Error::NoGraphs(dir.as_ref().to_path_buf()).into());
    }
    let entries = load_files(&files)?;
    split_entries(&entries, cap)
}

fn index_report(split: &DatasetSplit, part: Part) -> Report {
    let config = [
        ("cap".to_string(), split.cap.to_string()),
        ("part".to_string(), part.as_str().to_string()),
        ("train_fraction".to_string(), TRAIN_FRACTION.to_string()),
    ]
    .into();
    let mut r = Report::new(ReportHeader::new("split", None, config), &["file", "label"]);
    for (name, label) in split.part(part) {
        r.push_row(vec![name.clone(), label.as_u8().to_string()]);
    }
    r
}

/// Writes `train.csv`, `val.csv` and `test.csv` into `out_dir`.
pub fn write_split(split: &DatasetSplit, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| DetectorError::io(out_dir, e))?;
    let mut written = Vec::new();
    for part in Part::ALL {
        let path = out_dir.join(part.index_file_name());
        index_report(split, part).write(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Reads one index file back as file names.
pub fn read_index(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DetectorError::io(path, e))?;
    let bad = |message: String| DetectorError::Index {
        path: path.to_path_buf(),
        message,
    };
    let (header, columns, rows) = parse_report(&text).map_err(|e| bad(e.to_string()))?;
    if !header.starts_with('#') || columns.first().map(String::as_str) != Some("file") {
        return Err(bad("expected a report header and a `file` column".into()));
    }
    Ok(rows.into_iter().map(|mut r| r.swap_remove(0)).collect())
}

/// Resolves index entries against the graphs in `dir`, in index order.
pub fn select_entries(dir: impl AsRef<Path>, names: &[String]) -> Result<Vec<DatasetEntry>> {
    let files = list_graph_files(dir.as_ref())?;
    let by_name: HashMap<String, PathBuf> = files.into_iter().map(|p| (file_name(&p), p)).collect();
    let paths = names
        .iter()
        .map(|n| by_name.get(n).cloned().ok_or_else(|| DetectorError::IndexMismatch(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(load_files(&paths)?)
}
