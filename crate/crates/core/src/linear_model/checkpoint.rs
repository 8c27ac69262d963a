use std::io::{self, BufRead, Write};

use super::loss::softmax;
use super::params::{argmax, LinearParams};
use super::ModelError;
use crate::corpus::RhetoricalLabel;
use crate::embedding::EmbeddingProvider;
use crate::matrix::Matrix;

/// Trained head plus what is needed to reuse it.
///
/// Text format:
///
/// ```text
/// CKPT v1 <num_labels> <dim> <provider_id>
/// <label>\t<label>\t...
/// <W row 0: dim space-separated reals>
/// ...
/// <b: num_labels reals>
/// ```
///
/// Reals are written with 17 significant digits, which round-trips every
/// `f64` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCheckpoint {
    pub params: LinearParams,
    /// Row order of the weight matrix.
    pub labels: Vec<RhetoricalLabel>,
    pub provider_id: String,
    /// Validation score of the selected epoch; not stored in the file.
    pub selection_score: Option<f64>,
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl LinearCheckpoint {
    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Fails unless `provider` produced the vectors this head was trained on.
    pub fn check_provider(&self, provider: &dyn EmbeddingProvider) -> Result<(), ModelError> {
        if provider.dim() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: provider.dim(),
            });
        }
        if provider.id() != self.provider_id {
            return Err(ModelError::ProviderMismatch {
                checkpoint: self.provider_id.clone(),
                provider: provider.id(),
            });
        }
        Ok(())
    }

    /// Label with the largest logit (ties to the lowest index) and its
    /// softmax probability.
    pub fn predict_with_probability(
        &self,
        x: &[f64],
    ) -> Result<(RhetoricalLabel, f64), ModelError> {
        let z = self.params.forward(x)?;
        let best = argmax(&z);
        Ok((self.labels[best], softmax(&z)[best]))
    }

    pub fn predict(&self, x: &[f64]) -> Result<RhetoricalLabel, ModelError> {
        let z = self.params.forward(x)?;
        Ok(self.labels[argmax(&z)])
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        if self.provider_id.is_empty() || self.provider_id.contains(char::is_whitespace) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!(
                    "provider id {:?} must be non-empty without whitespace",
                    self.provider_id
                ),
            ));
        }
        let p = &self.params;
        writeln!(
            out,
            "CKPT v1 {} {} {}",
            p.num_classes(),
            p.dim(),
            self.provider_id
        )?;
        let labels: Vec<&str> = self.labels.iter().map(|l| l.as_str()).collect();
        writeln!(out, "{}", labels.join("\t"))?;
        for row in p
            .weights
            .iter_rows()
            .chain(std::iter::once(p.bias.as_slice()))
        {
            let line: Vec<String> = row.iter().map(|&v| fmt_real(v)).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf)
            .expect("checkpoint provider id is valid");
        String::from_utf8(buf).expect("UTF-8")
    }

    pub fn parse<R: BufRead>(input: R) -> Result<Self, ModelError> {
        let lines: Vec<String> = input.lines().collect::<Result<_, _>>()?;
        let bad = |line: usize, message: String| ModelError::Format { line, message };
        let line = |i: usize| -> Result<&str, ModelError> {
            lines
                .get(i)
                .map(|s| s.strip_suffix('\r').unwrap_or(s))
                .ok_or_else(|| bad(i + 1, "unexpected end of file".into()))
        };

        let header: Vec<&str> = line(0)?.split(' ').collect();
        let (k, dim, provider_id) = match header.as_slice() {
            ["CKPT", "v1", k, dim, id] if !id.is_empty() => {
                let k: usize = k.parse().map_err(|_| bad(1, "bad label count".into()))?;
                let dim: usize = dim.parse().map_err(|_| bad(1, "bad dimension".into()))?;
                (k, dim, id.to_string())
            }
            _ => {
                return Err(bad(
                    1,
                    "expected `CKPT v1 <num_labels> <dim> <provider_id>`".into(),
                ))
            }
        };
        if k == 0 || dim == 0 {
            return Err(bad(1, "label count and dimension must be positive".into()));
        }

        let labels = line(1)?
            .split('\t')
            .map(|s| {
                s.parse::<RhetoricalLabel>()
                    .map_err(|e| bad(2, e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if labels.len() != k {
            return Err(bad(
                2,
                format!("expected {k} labels, found {}", labels.len()),
            ));
        }

        let reals = |i: usize, n: usize| -> Result<Vec<f64>, ModelError> {
            let vals = line(i)?
                .split(' ')
                .map(|t| match t.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(bad(i + 1, format!("bad number {t:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() != n {
                return Err(bad(
                    i + 1,
                    format!("expected {n} values, found {}", vals.len()),
                ));
            }
            Ok(vals)
        };
        let mut w = Vec::with_capacity(k * dim);
        for r in 0..k {
            w.extend(reals(2 + r, dim)?);
        }
        let bias = reals(2 + k, k)?;
        if lines.len() > 3 + k && lines[3 + k..].iter().any(|l| !l.trim().is_empty()) {
            return Err(bad(4 + k, "trailing content".into()));
        }
        Ok(Self {
            params: LinearParams::new(Matrix::from_vec(k, dim, w).expect("sized above"), bias)?,
            labels,
            provider_id,
            selection_score: None,
        })
    }
}
