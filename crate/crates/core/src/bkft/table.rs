use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BkftError;

/// Dense token-name to row-id mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VocabIndex {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl VocabIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self, BkftError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = VocabIndex::new();
        for n in names {
            v.push(n)?;
        }
        Ok(v)
    }

    pub fn push(&mut self, name: impl Into<String>) -> Result<usize, BkftError> {
        let name = name.into();
        if self.ids.contains_key(&name) {
            return Err(BkftError::DuplicateToken(name));
        }
        let id = self.names.len();
        self.ids.insert(name.clone(), id);
        self.names.push(name);
        Ok(id)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Row-major `rows x dim` matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self, BkftError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(BkftError::Format(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(BkftError::Format(format!(
                "non-finite value at flat index {i}"
            )));
        }
        Ok(EmbeddingTable { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn set_row(&mut self, i: usize, values: &[f64]) {
        self.row_mut(i).copy_from_slice(values);
    }

    pub fn push_zero_rows(&mut self, n: usize) {
        self.data.resize(self.data.len() + n * self.dim, 0.0);
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    vocab: Vec<String>,
    dim: usize,
}

fn sibling(base: &Path, ext: &str) -> PathBuf {
    base.with_extension(ext)
}

/// Writes `<base>.json` (vocab + dim) and `<base>.bin` (little-endian f64 rows).
pub fn save_embeddings(
    base: impl AsRef<Path>,
    vocab: &VocabIndex,
    table: &EmbeddingTable,
) -> Result<(), BkftError> {
    if vocab.len() != table.rows() {
        return Err(BkftError::Format(format!(
            "vocab has {} names but table has {} rows",
            vocab.len(),
            table.rows()
        )));
    }
    let base = base.as_ref();
    let header = Header {
        vocab: vocab.names().to_vec(),
        dim: table.dim(),
    };
    fs::write(sibling(base, "json"), serde_json::to_vec(&header)?)?;
    let bytes: Vec<u8> = table
        .as_flat()
        .iter()
        .flat_map(|x| x.to_le_bytes())
        .collect();
    fs::write(sibling(base, "bin"), bytes)?;
    Ok(())
}

pub fn load_embeddings(base: impl AsRef<Path>) -> Result<(VocabIndex, EmbeddingTable), BkftError> {
    let base = base.as_ref();
    let header: Header = serde_json::from_slice(&fs::read(sibling(base, "json"))?)?;
    let bytes = fs::read(sibling(base, "bin"))?;
    if bytes.len() != header.vocab.len() * header.dim * 8 {
        return Err(BkftError::Format(format!(
            "expected {} bytes for {} rows of width {}, found {}",
            header.vocab.len() * header.dim * 8,
            header.vocab.len(),
            header.dim,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let table = EmbeddingTable::from_flat(header.dim, data)?;
    let vocab = VocabIndex::from_names(header.vocab)?;
    Ok((vocab, table))
}
