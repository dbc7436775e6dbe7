//! Dataset CSV ingestion, model persistence and output helpers.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{IsolationForest, IsolationTree, TreeNode};

/// Formats a float with 17 significant digits, enough to round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Reads a numeric CSV file.
///
/// The first row is taken as a header when none of its cells parse as
/// numbers; otherwise columns are named `f0..f(d-1)`. Parse errors report
/// 1-based file row and column.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records().peekable();

    let mut names: Option<Vec<String>> = None;
    let mut row_offset = 1;
    if let Some(first) = records.peek() {
        let first = first
            .as_ref()
            .map_err(|e| Error::Structure(e.to_string()))?;
        if first.iter().all(|c| c.parse::<f64>().is_err()) {
            names = Some(first.iter().map(str::to_string).collect());
            records.next();
            row_offset = 2;
        }
    }

    let mut values = Vec::new();
    let mut d = names.as_ref().map(Vec::len);
    let mut n = 0;
    for (i, record) in records.enumerate() {
        let row = i + row_offset;
        let record = record.map_err(|e| Error::Structure(format!("row {row}: {e}")))?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match d {
            None => d = Some(record.len()),
            Some(width) if width != record.len() => {
                return Err(Error::Structure(format!(
                    "row {row} has {} fields, expected {width}",
                    record.len()
                )))
            }
            _ => {}
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    message: format!("'{cell}' is not finite"),
                });
            }
            values.push(v);
        }
        n += 1;
    }
    let d = d.unwrap_or(0);
    if n == 0 {
        return Err(Error::Structure("CSV contains no data rows".into()));
    }
    let names = names.unwrap_or_else(|| (0..d).map(|j| format!("f{j}")).collect());
    Dataset::from_flat(values, n, d, names)
}

/// Writes a dataset with a header row at full precision.
pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(data.column_names())?;
    for row in data.rows() {
        w.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    w.flush().map_err(|e| Error::io("<dataset csv>", e))?;
    Ok(())
}

/// Writes `path` through a temporary file in the same directory followed by
/// a rename, so readers never see a partial file.
pub fn write_atomic(
    path: impl AsRef<Path>,
    fill: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Expected shapes of the benchmark datasets this harness knows by id.
pub const KNOWN_DATASETS: &[(&str, usize, usize)] = &[
    ("glass", 214, 10),
    ("cardio", 1831, 21),
    ("ionosphere", 351, 33),
    ("lympho", 148, 18),
    ("musk", 3062, 166),
    ("letter", 1600, 32),
];

/// Compares a dataset against the registered shape for `id`.
///
/// Returns a human-readable mismatch description, or `None` when the shape
/// matches or the id is unknown. Callers warn rather than fail, since
/// distributions of the same dataset differ in their feature counts.
pub fn check_known_shape(id: &str, data: &Dataset) -> Option<String> {
    let (_, n, d) = KNOWN_DATASETS.iter().find(|(name, _, _)| *name == id)?;
    if data.n() == *n && data.d() == *d {
        None
    } else {
        Some(format!(
            "dataset '{id}' has shape {}x{}, expected {n}x{d}",
            data.n(),
            data.d()
        ))
    }
}

pub const MODEL_MAGIC: &str = "isoexplain-forest";
pub const MODEL_VERSION: u32 = 1;

/// Serializes a forest as a line-oriented text document.
///
/// ```text
/// isoexplain-forest 1
/// psi 256
/// d 6
/// seed 42
/// trees 100
/// tree
/// split <feature> <value bits, 16 hex digits> <size>
/// leaf <size> <depth>
/// ...
/// end
/// ```
///
/// Each tree is written in pre-order: a `split` record is followed by its
/// left then right subtree. Split thresholds are stored as the raw IEEE-754
/// bit pattern so reloading is exact.
pub fn model_to_string(forest: &IsolationForest) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MODEL_MAGIC} {MODEL_VERSION}");
    let _ = writeln!(s, "psi {}", forest.psi());
    let _ = writeln!(s, "d {}", forest.d());
    let _ = writeln!(s, "seed {}", forest.seed());
    let _ = writeln!(s, "trees {}", forest.n_trees());
    for tree in forest.trees() {
        s.push_str("tree\n");
        write_node(tree.root(), &mut s);
    }
    s.push_str("end\n");
    s
}

fn write_node(node: &TreeNode, s: &mut String) {
    match node {
        TreeNode::Leaf { size, depth } => {
            let _ = writeln!(s, "leaf {size} {depth}");
        }
        TreeNode::Internal {
            feature,
            value,
            size,
            left,
            right,
        } => {
            let _ = writeln!(s, "split {feature} {:016x} {size}", value.to_bits());
            write_node(left, s);
            write_node(right, s);
        }
    }
}

pub fn save_model(path: impl AsRef<Path>, forest: &IsolationForest) -> Result<()> {
    let text = model_to_string(forest);
    write_atomic(path.as_ref(), |w| {
        w.write_all(text.as_bytes())
            .map_err(|e| Error::io(path.as_ref(), e))
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<IsolationForest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((i + 1, fields));
            }
        }
        Err(Error::Format("unexpected end of model file".into()))
    }

    fn header_value(&mut self, key: &str) -> Result<u64> {
        let (line, fields) = self.next_fields()?;
        match fields.as_slice() {
            [k, v] if *k == key => v
                .parse()
                .map_err(|_| Error::Format(format!("line {line}: bad value for '{key}'"))),
            _ => Err(Error::Format(format!(
                "line {line}: expected '{key} <value>'"
            ))),
        }
    }
}

pub fn model_from_str(text: &str) -> Result<IsolationForest> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, magic) = lines
        .next_fields()
        .map_err(|_| Error::Format("empty model file".into()))?;
    if magic.len() != 2 || magic[0] != MODEL_MAGIC {
        return Err(Error::Format("missing model header".into()));
    }
    let version: u32 = magic[1]
        .parse()
        .map_err(|_| Error::Format(format!("bad version '{}'", magic[1])))?;
    if version != MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let psi = lines.header_value("psi")? as usize;
    let d = lines.header_value("d")? as usize;
    let seed = lines.header_value("seed")?;
    let n_trees = lines.header_value("trees")? as usize;

    let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
    for _ in 0..n_trees {
        let (line, fields) = lines.next_fields()?;
        if fields != ["tree"] {
            return Err(Error::Format(format!("line {line}: expected 'tree'")));
        }
        let root = read_node(&mut lines, 0)?;
        trees.push(IsolationTree::new(root, d).map_err(|e| Error::Format(e.to_string()))?);
    }
    let (line, fields) = lines.next_fields()?;
    if fields != ["end"] {
        return Err(Error::Format(format!("line {line}: expected 'end'")));
    }
    IsolationForest::from_trees(trees, psi, seed).map_err(|e| Error::Format(e.to_string()))
}

fn read_node(lines: &mut Lines<'_>, depth: usize) -> Result<TreeNode> {
    let (line, fields) = lines.next_fields()?;
    let bad = || Error::Format(format!("line {line}: malformed node record"));
    match fields.as_slice() {
        ["leaf", size, recorded] => Ok(TreeNode::Leaf {
            size: size.parse().map_err(|_| bad())?,
            depth: recorded.parse().map_err(|_| bad())?,
        }),
        ["split", feature, bits, size] => {
            if depth > 4096 {
                return Err(Error::Format(format!("line {line}: tree too deep")));
            }
            let feature = feature.parse().map_err(|_| bad())?;
            let value = f64::from_bits(u64::from_str_radix(bits, 16).map_err(|_| bad())?);
            let size = size.parse().map_err(|_| bad())?;
            let left = read_node(lines, depth + 1)?;
            let right = read_node(lines, depth + 1)?;
            Ok(TreeNode::Internal {
                feature,
                value,
                size,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        _ => Err(bad()),
    }
}
