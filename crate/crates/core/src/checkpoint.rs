//! Binary model checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "EVCK"  u32 version  u64 E  u64 M  f64 dropout
//! M × (u32 byte length, UTF-8 label code)
//! E·M × f64 W (row-major)   M × f64 b
//! u8 encoder kind: 0 none, 1 mean embedding
//!   kind 1: u64 V  u64 dim  V·dim × f64 table
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::encoder::MeanEmbeddingEncoder;
use crate::error::{Error, Result};
use crate::head::ClassifierHead;
use crate::scalar::Scalar;
use crate::thesaurus::DescriptorId;
use crate::tokenize::SubwordVocabulary;

const MAGIC: &[u8; 4] = b"EVCK";
pub const FORMAT_VERSION: u32 = 1;

const KIND_NONE: u8 = 0;
const KIND_MEAN_EMBEDDING: u8 = 1;

/// Embedding table stored alongside a head; the vocabulary lives elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    pub vocab_size: usize,
    pub dim: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn into_encoder(self, vocab: SubwordVocabulary) -> Result<MeanEmbeddingEncoder<T>> {
        if vocab.len() != self.vocab_size {
            return Err(Error::Checkpoint(format!(
                "embedding table has {} rows but the vocabulary has {} tokens",
                self.vocab_size,
                vocab.len()
            )));
        }
        MeanEmbeddingEncoder::from_table(vocab, self.dim, self.values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T: Scalar> {
    pub head: ClassifierHead<T>,
    pub embeddings: Option<EmbeddingTable<T>>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(head: ClassifierHead<T>, encoder: Option<&MeanEmbeddingEncoder<T>>) -> Self {
        let embeddings = encoder.map(|enc| EmbeddingTable {
            vocab_size: enc.vocab().len(),
            dim: crate::encoder::Encoder::dim(enc),
            values: enc.table().to_vec(),
        });
        Self { head, embeddings }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::new();
        let head = &self.head;
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        put_u64(&mut buf, head.input_dim());
        put_u64(&mut buf, head.num_labels());
        buf.extend_from_slice(&head.dropout_rate().as_f64().to_le_bytes());
        for label in head.labels() {
            let bytes = label.as_str().as_bytes();
            buf.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            buf.extend_from_slice(bytes);
        }
        put_floats(&mut buf, head.weights());
        put_floats(&mut buf, head.bias());
        match &self.embeddings {
            None => buf.push(KIND_NONE),
            Some(table) => {
                buf.push(KIND_MEAN_EMBEDDING);
                put_u64(&mut buf, table.vocab_size);
                put_u64(&mut buf, table.dim);
                put_floats(&mut buf, &table.values);
            }
        }
        out.write_all(&buf)
            .map_err(|e| Error::io("<checkpoint>", e))
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io("<checkpoint>", e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(r.array()?);
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version}"
            )));
        }
        let e = r.count()?;
        let m = r.count()?;
        let dropout = T::lit(f64::from_le_bytes(r.array()?));
        let mut labels = Vec::with_capacity(m.min(1 << 16));
        for _ in 0..m {
            let len = u32::from_le_bytes(r.array()?) as usize;
            let text = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Checkpoint("label code is not valid UTF-8".into()))?;
            labels.push(DescriptorId::new(text)?);
        }
        let weights = r.floats(checked_mul(e, m)?)?;
        let bias = r.floats(m)?;
        let head = ClassifierHead::from_parts(e, labels, weights, bias, dropout)?;
        let embeddings = match r.take(1)?[0] {
            KIND_NONE => None,
            KIND_MEAN_EMBEDDING => {
                let vocab_size = r.count()?;
                let dim = r.count()?;
                let values = r.floats(checked_mul(vocab_size, dim)?)?;
                if dim != e {
                    return Err(Error::Checkpoint(format!(
                        "embedding size {dim} does not match head input size {e}"
                    )));
                }
                Some(EmbeddingTable {
                    vocab_size,
                    dim,
                    values,
                })
            }
            other => return Err(Error::Checkpoint(format!("unknown encoder kind {other}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { head, embeddings })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_u64(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u64).to_le_bytes());
}

fn put_floats<T: Scalar>(buf: &mut Vec<u8>, values: &[T]) {
    for v in values {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
}

fn checked_mul(a: usize, b: usize) -> Result<usize> {
    a.checked_mul(b)
        .ok_or_else(|| Error::Checkpoint("tensor size overflows".into()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("slice of length N"))
    }

    fn count(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.array()?))
            .map_err(|_| Error::Checkpoint("dimension does not fit in memory".into()))
    }

    fn floats<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let raw = self.take(checked_mul(n, 8)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::VocabConfig;

    fn head() -> ClassifierHead<f64> {
        let labels = ["10", "20", "30"]
            .iter()
            .map(|c| DescriptorId::new(*c).unwrap());
        ClassifierHead::new(4, labels, 7).unwrap()
    }

    fn vocab() -> SubwordVocabulary {
        let tokens = ["[UNK]", "[CLS]", "[SEP]", "a"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        SubwordVocabulary::new(tokens, VocabConfig::default()).unwrap()
    }

    #[test]
    fn round_trip_head_only() {
        let ck = Checkpoint::new(head(), None);
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"EVCK");
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
    }

    #[test]
    fn round_trip_with_encoder() {
        let enc = MeanEmbeddingEncoder::<f64>::new(vocab(), 4, 3).unwrap();
        let ck = Checkpoint::new(head(), Some(&enc));
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        let back = Checkpoint::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        let restored = back.embeddings.unwrap().into_encoder(vocab()).unwrap();
        assert_eq!(restored.table(), enc.table());
    }

    #[test]
    fn damaged_files_are_rejected() {
        let mut bytes = Vec::new();
        Checkpoint::new(head(), None).write_to(&mut bytes).unwrap();
        assert!(Checkpoint::<f64>::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::<f64>::from_bytes(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::<f64>::from_bytes(&bad).is_err());
    }

    #[test]
    fn f32_load_of_f64_file() {
        let mut bytes = Vec::new();
        Checkpoint::new(head(), None).write_to(&mut bytes).unwrap();
        let back = Checkpoint::<f32>::from_bytes(&bytes).unwrap();
        assert_eq!(back.head.num_labels(), 3);
    }
}
