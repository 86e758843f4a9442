//! Model persistence.
//!
//! A saved model directory holds three text tables, each starting with a
//! `<rows> <dim>` header:
//!
//! * `senses.txt`: `word#identity v1 … vd`
//! * `contexts.txt`: `word v1 … vd`
//! * `identities.txt`: `identity v1 … vd`
//!
//! Values are printed with 6 significant digits. `model.bin` stores the
//! same model losslessly, including per-sense token counts.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hetnet::SenseRegistry;
use crate::model::{EmbeddingModel, Matrix};

pub const SENSES_FILE: &str = "senses.txt";
pub const CONTEXTS_FILE: &str = "contexts.txt";
pub const IDENTITIES_FILE: &str = "identities.txt";
pub const BINARY_FILE: &str = "model.bin";

const MAGIC: &[u8; 8] = b"ISEMODL1";

/// Formats `v` like C's `%.6g`.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn write_table(path: &Path, m: &Matrix, label: impl Fn(usize) -> String) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{} {}", m.rows(), m.cols()).map_err(io)?;
    for r in 0..m.rows() {
        write!(out, "{}", label(r)).map_err(io)?;
        for v in m.row(r) {
            write!(out, " {}", format_sig6(*v)).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes the three text tables and the binary sidecar into `dir`.
pub fn save_model(model: &EmbeddingModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_table(&dir.join(SENSES_FILE), &model.sense_vectors, |r| model.sense_name(r as u32))?;
    write_table(&dir.join(CONTEXTS_FILE), &model.context_vectors, |r| model.words[r].clone())?;
    write_table(&dir.join(IDENTITIES_FILE), &model.identity_vectors, |r| r.to_string())?;
    save_binary(model, dir.join(BINARY_FILE))
}

/// Loads the binary sidecar when present, otherwise the text tables.
pub fn load_model(dir: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let dir = dir.as_ref();
    let bin = dir.join(BINARY_FILE);
    if bin.exists() {
        load_binary(bin)
    } else {
        load_text_model(dir)
    }
}

pub fn save_binary(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    let put_u64 = |buf: &mut Vec<u8>, v: u64| buf.extend_from_slice(&v.to_le_bytes());
    put_u64(&mut buf, model.dim() as u64);
    put_u64(&mut buf, model.words.len() as u64);
    for w in &model.words {
        put_u64(&mut buf, w.len() as u64);
        buf.extend_from_slice(w.as_bytes());
    }
    put_u64(&mut buf, model.num_senses() as u64);
    for s in model.senses.iter() {
        buf.extend_from_slice(&s.word.to_le_bytes());
        buf.extend_from_slice(&s.identity.to_le_bytes());
        put_u64(&mut buf, model.senses.count(s.row));
    }
    put_u64(&mut buf, model.num_identities as u64);
    for m in [&model.sense_vectors, &model.context_vectors, &model.identity_vectors] {
        for v in m.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    path: &'a Path,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() < n {
            return Err(Error::format(self.path, 0, "binary model is truncated"));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n <= self.bytes.len())
            .ok_or_else(|| Error::format(self.path, 0, "implausible length in binary model"))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::format(self.path, 0, "matrix size overflows"))?;
        let raw = self.take(n)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Matrix::from_vec(rows, cols, data)
    }
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor { bytes: &bytes, path };
    if cur.take(8)? != MAGIC {
        return Err(Error::format(path, 0, "not a binary model file"));
    }
    let dim = cur.u64()?;
    let dim = usize::try_from(dim)
        .ok()
        .filter(|&d| d <= 1 << 20)
        .ok_or_else(|| Error::format(path, 0, "implausible dimension in binary model"))?;
    let n_words = cur.len()?;
    let mut words = Vec::with_capacity(n_words.min(1 << 24));
    for _ in 0..n_words {
        let n = cur.len()?;
        let w = std::str::from_utf8(cur.take(n)?)
            .map_err(|_| Error::format(path, 0, "word is not UTF-8"))?
            .to_string();
        words.push(w);
    }
    let n_senses = cur.len()?;
    let mut pairs = Vec::with_capacity(n_senses.min(1 << 24));
    for _ in 0..n_senses {
        let word = cur.u32()?;
        let identity = cur.u32()?;
        let count = cur.u64()?;
        if word as usize >= n_words {
            return Err(Error::format(path, 0, "sense refers to a missing word"));
        }
        pairs.push(((word, identity), count));
    }
    if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::format(path, 0, "sense rows are not in canonical order"));
    }
    let num_identities = cur.u64()? as u32;
    let senses = SenseRegistry::from_counts(n_words, pairs);
    let sense_vectors = cur.matrix(n_senses, dim)?;
    let context_vectors = cur.matrix(n_words, dim)?;
    let identity_vectors = cur.matrix(num_identities as usize, dim)?;
    if !cur.bytes.is_empty() {
        return Err(Error::format(path, 0, "trailing bytes after binary model"));
    }
    EmbeddingModel::from_parts(words, senses, num_identities, sense_vectors, context_vectors, identity_vectors)
}

struct TextTable {
    labels: Vec<String>,
    dim: usize,
    values: Vec<f64>,
}

fn read_table(path: &Path) -> Result<TextTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format(path, 1, "missing header"))?;
    let (rows, dim) = header
        .split_once(' ')
        .and_then(|(r, d)| Some((r.parse::<usize>().ok()?, d.parse::<usize>().ok()?)))
        .ok_or_else(|| Error::format(path, 1, "header must be `<rows> <dim>`"))?;
    let mut table = TextTable {
        labels: Vec::with_capacity(rows),
        dim,
        values: Vec::with_capacity(rows * dim),
    };
    for (n, line) in lines.enumerate() {
        let mut fields = line.split(' ');
        let label = fields.next().unwrap_or_default();
        let before = table.values.len();
        for f in fields {
            let v = f
                .parse()
                .map_err(|_| Error::format(path, n + 2, format!("bad value `{f}`")))?;
            table.values.push(v);
        }
        if table.values.len() - before != dim {
            return Err(Error::format(
                path,
                n + 2,
                format!("expected {dim} values, found {}", table.values.len() - before),
            ));
        }
        table.labels.push(label.to_string());
    }
    if table.labels.len() != rows {
        return Err(Error::format(
            path,
            1,
            format!("header declares {rows} rows but file has {}", table.labels.len()),
        ));
    }
    Ok(table)
}

/// Loads the three text tables. Sense token counts are not part of the
/// text format and come back as zero.
pub fn load_text_model(dir: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let dir = dir.as_ref();
    let senses_path = dir.join(SENSES_FILE);
    let contexts_path = dir.join(CONTEXTS_FILE);
    let identities_path = dir.join(IDENTITIES_FILE);
    let contexts = read_table(&contexts_path)?;
    let senses = read_table(&senses_path)?;
    let identities = read_table(&identities_path)?;
    let dim = contexts.dim;
    for (path, t) in [(&senses_path, &senses), (&identities_path, &identities)] {
        if t.dim != dim {
            return Err(Error::format(
                path,
                1,
                format!("dimension {} differs from {} in {CONTEXTS_FILE}", t.dim, dim),
            ));
        }
    }
    let words = contexts.labels;
    let index: std::collections::HashMap<&str, u32> =
        words.iter().enumerate().map(|(i, w)| (w.as_str(), i as u32)).collect();
    if index.len() != words.len() {
        return Err(Error::format(&contexts_path, 0, "duplicate context words"));
    }
    for (i, label) in identities.labels.iter().enumerate() {
        if label.parse::<usize>().ok() != Some(i) {
            return Err(Error::format(&identities_path, i + 2, format!("expected identity {i}, found `{label}`")));
        }
    }
    let num_identities = identities.labels.len() as u32;

    let mut rows = Vec::with_capacity(senses.labels.len());
    for (i, label) in senses.labels.iter().enumerate() {
        let bad = |m: String| Error::format(&senses_path, i + 2, m);
        let (word, identity) = label
            .rsplit_once('#')
            .ok_or_else(|| bad(format!("sense `{label}` is not word#identity")))?;
        let word = *index
            .get(word)
            .ok_or_else(|| bad(format!("sense word `{word}` missing from {CONTEXTS_FILE}")))?;
        let identity: u32 = identity
            .parse()
            .ok()
            .filter(|&id| id < num_identities)
            .ok_or_else(|| bad(format!("bad identity in `{label}`")))?;
        rows.push(((word, identity), i));
    }
    rows.sort_unstable();
    if rows.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::format(&senses_path, 0, "duplicate senses"));
    }
    let mut sense_values = Vec::with_capacity(senses.values.len());
    for &(_, i) in &rows {
        sense_values.extend_from_slice(&senses.values[i * dim..(i + 1) * dim]);
    }
    let registry = SenseRegistry::from_counts(words.len(), rows.iter().map(|&(k, _)| (k, 0)).collect());
    let n_words = words.len();
    EmbeddingModel::from_parts(
        words,
        registry,
        num_identities,
        Matrix::from_vec(rows.len(), dim, sense_values)?,
        Matrix::from_vec(n_words, dim, contexts.values)?,
        Matrix::from_vec(num_identities as usize, dim, identities.values)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(-0.5), "-0.5");
        assert_eq!(format_sig6(0.123456789), "0.123457");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(0.0000123456), "1.23456e-05");
        assert_eq!(format_sig6(0.000123456), "0.000123456");
        assert_eq!(format_sig6(9.9999996), "10");
    }
}
