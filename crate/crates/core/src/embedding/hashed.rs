use super::{Casing, Embedding, EmbeddingError, EmbeddingProvider, TokenizerConfig};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Prefix byte for the sign hash. 0xFF never occurs in UTF-8, so the sign
/// stream cannot collide with the bucket stream of another token.
const SIGN_SALT: u8 = 0xff;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn fnv1a64_salted(bytes: &[u8]) -> u64 {
    let h = (FNV_OFFSET ^ SIGN_SALT as u64).wrapping_mul(FNV_PRIME);
    bytes
        .iter()
        .fold(h, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Signed feature hashing.
///
/// Each token adds +1 or -1 at bucket `fnv1a64(token) % dim`; the sign is +1
/// when the salted second hash is even. The result is L2-normalized unless
/// it is all zeros.
pub fn encode_hashed_bow<S: AsRef<str>>(tokens: &[S], dim: usize) -> Embedding {
    assert!(dim >= 1, "dim must be at least 1");
    let mut v = vec![0.0; dim];
    for tok in tokens {
        let bytes = tok.as_ref().as_bytes();
        let bucket = (fnv1a64(bytes) % dim as u64) as usize;
        let sign = if fnv1a64_salted(bytes).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        v[bucket] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Embedding(v)
}

/// Tokenize-then-hash provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedBow {
    dim: usize,
    tokenizer: TokenizerConfig,
}

impl HashedBow {
    pub fn new(dim: usize, tokenizer: TokenizerConfig) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        Ok(Self { dim, tokenizer })
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    /// Inverse of [`EmbeddingProvider::id`]: `hashed:<dim>:<casing>:<max_len>`.
    pub fn from_id(id: &str) -> Option<Self> {
        let mut parts = id.split(':');
        if parts.next()? != "hashed" {
            return None;
        }
        let dim = parts.next()?.parse().ok()?;
        let casing: Casing = parts.next()?.parse().ok()?;
        let max_len: usize = parts.next()?.parse().ok()?;
        if parts.next().is_some() || max_len == 0 {
            return None;
        }
        Self::new(dim, TokenizerConfig::new(casing, max_len)).ok()
    }
}

impl EmbeddingProvider for HashedBow {
    fn id(&self) -> String {
        format!(
            "hashed:{}:{}:{}",
            self.dim, self.tokenizer.casing, self.tokenizer.max_len
        )
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        Ok(encode_hashed_bow(&self.tokenizer.tokenize(text), self.dim))
    }
}
