use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use super::{fnv1a64, Embedding, EmbeddingError, EmbeddingProvider};

/// Vectors computed offline, looked up by exact sentence text.
///
/// File format: a header `EMB v1 <count> <dim>`, then one record per line:
/// the sentence as a JSON string followed by `dim` space-separated reals.
#[derive(Debug, Clone)]
pub struct Precomputed {
    dim: usize,
    keys: Vec<String>,
    vectors: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
    fingerprint: u64,
}

impl Precomputed {
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Embedding)>,
    {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        let mut p = Self {
            dim,
            keys: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
            fingerprint: 0,
        };
        for (i, (key, e)) in entries.into_iter().enumerate() {
            let line = i + 2;
            if e.dim() != dim {
                return Err(EmbeddingError::Format {
                    line,
                    message: format!("expected {dim} values, found {}", e.dim()),
                });
            }
            if e.0.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::Format {
                    line,
                    message: "non-finite value".into(),
                });
            }
            p.insert(key, e.0, line)?;
        }
        p.fingerprint = fnv1a64(p.to_text().as_bytes());
        Ok(p)
    }

    fn insert(&mut self, key: String, v: Vec<f64>, line: usize) -> Result<(), EmbeddingError> {
        if self.index.contains_key(&key) {
            return Err(EmbeddingError::DuplicateKey(key, line));
        }
        self.index.insert(key.clone(), self.keys.len());
        self.keys.push(key);
        self.vectors.push(v);
        Ok(())
    }

    pub fn parse<R: BufRead>(input: R) -> Result<Self, EmbeddingError> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.ok_or(EmbeddingError::Format {
            line: 1,
            message: "missing header".into(),
        })?;
        let (count, dim) = parse_header(&header)?;

        let mut entries = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            if entries.len() == count {
                return Err(EmbeddingError::Format {
                    line: lineno,
                    message: format!("header declares {count} records but more follow"),
                });
            }
            entries.push(parse_record(line, dim, lineno)?);
        }
        if entries.len() != count {
            return Err(EmbeddingError::Format {
                line: entries.len() + 1,
                message: format!("header declares {count} records, found {}", entries.len()),
            });
        }
        Self::from_entries(dim, entries)
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "EMB v1 {} {}", self.keys.len(), self.dim)?;
        for (key, v) in self.keys.iter().zip(&self.vectors) {
            out.write_all(
                serde_json::to_string(key)
                    .expect("strings serialize")
                    .as_bytes(),
            )?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("UTF-8")
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, text: &str) -> bool {
        self.index.contains_key(text)
    }
}

fn parse_header(header: &str) -> Result<(usize, usize), EmbeddingError> {
    let bad = |message: &str| EmbeddingError::Format {
        line: 1,
        message: message.to_string(),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    match fields.as_slice() {
        ["EMB", "v1", count, dim] => {
            let count = count.parse().map_err(|_| bad("bad record count"))?;
            let dim: usize = dim.parse().map_err(|_| bad("bad dimension"))?;
            if dim == 0 {
                return Err(bad("dimension must be at least 1"));
            }
            Ok((count, dim))
        }
        _ => Err(bad("expected `EMB v1 <count> <dim>`")),
    }
}

fn parse_record(
    line: &str,
    dim: usize,
    lineno: usize,
) -> Result<(String, Embedding), EmbeddingError> {
    let bad = |message: String| EmbeddingError::Format {
        line: lineno,
        message,
    };
    let mut stream = serde_json::Deserializer::from_str(line).into_iter::<String>();
    let key = match stream.next() {
        Some(Ok(k)) => k,
        _ => return Err(bad("record must start with a JSON string key".into())),
    };
    let rest = &line[stream.byte_offset()..];
    if !rest.starts_with(' ') {
        return Err(bad("expected a space after the key".into()));
    }
    let values = rest
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| bad(format!("bad number {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != dim {
        return Err(bad(format!(
            "expected {dim} values, found {}",
            values.len()
        )));
    }
    Ok((key, Embedding(values)))
}

impl EmbeddingProvider for Precomputed {
    /// `precomputed:<fingerprint>`, a hash of the canonical file contents.
    fn id(&self) -> String {
        format!("precomputed:{:016x}", self.fingerprint)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        self.index
            .get(text)
            .map(|&i| Embedding(self.vectors[i].clone()))
            .ok_or_else(|| EmbeddingError::Missing(text.to_string()))
    }
}
