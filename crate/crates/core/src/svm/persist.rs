//! Line-oriented model file.
//!
//! ```text
//! primal-svm-model 1
//! features bin|freq
//! dim <V>
//! vocab <count>
//! <word>                      (count lines, index order)
//! task binary                 then one model block
//! task multi                  then `pair <j>` + model block for j = 0..4, then the table
//! ```
//!
//! A model block is either `linear`, `bias <b>`, `weights <w_0> ... <w_{V-1}>` or
//! `kernel linear|rbf <sigma>`, `n_train <n>`, `support <m>` followed by `m` lines of
//! `<index> <beta> <i:v> ...`. The multiclass table is `patterns <p>`, `p` lines of four
//! signs and five counts, then `prior <c_0> ... <c_4>`. Floats are written in shortest
//! round-trip form, so a reload reproduces every prediction exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{FeatureMode, Vocabulary, N_LABELS};
use crate::numerics::{KernelSpec, SparseVector};

use super::multiclass::{MulticlassSvm, PatternTable, SignPattern, N_PAIRS};
use super::{BinarySvm, Classifier, KernelModel, SupportVector};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "primal-svm-model";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    Version { found: String },
}

/// Everything needed to classify raw phrases: featurization settings plus the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub features: FeatureMode,
    pub dim: usize,
    /// May be empty for models trained on pre-featurized data.
    pub vocab: Vocabulary,
    pub classifier: Classifier,
}

pub fn write_model<W: Write>(model: &SavedModel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
    writeln!(out, "features {}", model.features)?;
    writeln!(out, "dim {}", model.dim)?;
    writeln!(out, "vocab {}", model.vocab.len())?;
    for w in model.vocab.words() {
        writeln!(out, "{w}")?;
    }
    match &model.classifier {
        Classifier::Binary(m) => {
            writeln!(out, "task binary")?;
            write_binary(m, &mut out)?;
        }
        Classifier::Multi(m) => {
            writeln!(out, "task multi")?;
            for (j, pm) in m.pairwise.iter().enumerate() {
                writeln!(out, "pair {j}")?;
                write_binary(pm, &mut out)?;
            }
            writeln!(out, "patterns {}", m.table.counts.len())?;
            for (s, c) in &m.table.counts {
                let signs: Vec<String> = s.0.iter().map(|v| v.to_string()).collect();
                let counts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{} {}", signs.join(" "), counts.join(" "))?;
            }
            let prior: Vec<String> = m.table.prior.iter().map(|v| v.to_string()).collect();
            writeln!(out, "prior {}", prior.join(" "))?;
        }
    }
    writeln!(out, "end")?;
    out.flush()
}

fn write_binary<W: Write>(m: &BinarySvm, out: &mut W) -> std::io::Result<()> {
    match m {
        BinarySvm::Linear { w, b } => {
            writeln!(out, "linear")?;
            writeln!(out, "bias {b}")?;
            write!(out, "weights")?;
            for v in w {
                write!(out, " {v}")?;
            }
            writeln!(out)
        }
        BinarySvm::Kernel(k) => {
            match k.kernel {
                KernelSpec::Linear => writeln!(out, "kernel linear")?,
                KernelSpec::Rbf { sigma } => writeln!(out, "kernel rbf {sigma}")?,
            }
            writeln!(out, "n_train {}", k.n_train)?;
            writeln!(out, "support {}", k.support.len())?;
            for s in &k.support {
                write!(out, "{} {}", s.index, s.beta)?;
                for (i, v) in s.x.entries() {
                    write!(out, " {i}:{v}")?;
                }
                writeln!(out)?;
            }
            Ok(())
        }
    }
}

pub fn save_model(model: &SavedModel, path: impl AsRef<Path>) -> std::io::Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    no: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, msg: impl Into<String>) -> ModelFileError {
        ModelFileError::Format {
            line: self.no,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<String, ModelFileError> {
        self.no += 1;
        match self.inner.next() {
            Some(l) => Ok(l?.trim_end_matches('\r').to_string()),
            None => Err(self.err("unexpected end of file")),
        }
    }

    /// Reads `<key> <rest>` and returns `rest`.
    fn keyed(&mut self, key: &str) -> Result<String, ModelFileError> {
        let line = self.next()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.to_string()),
            _ if line == key => Ok(String::new()),
            _ => Err(self.err(format!("expected `{key}`, found `{line}`"))),
        }
    }

    fn parse<T: FromStr>(&self, s: &str, what: &str) -> Result<T, ModelFileError> {
        s.parse().map_err(|_| self.err(format!("bad {what} `{s}`")))
    }

    fn keyed_value<T: FromStr>(&mut self, key: &str) -> Result<T, ModelFileError> {
        let v = self.keyed(key)?;
        self.parse(&v, key)
    }
}

pub fn read_model<R: BufRead>(reader: R) -> Result<SavedModel, ModelFileError> {
    let mut lines = Lines {
        inner: reader.lines(),
        no: 0,
    };
    let version = lines.keyed(MAGIC)?;
    if version != FORMAT_VERSION.to_string() {
        return Err(ModelFileError::Version { found: version });
    }
    let features: FeatureMode = {
        let f = lines.keyed("features")?;
        lines.parse(&f, "feature mode")?
    };
    let dim: usize = lines.keyed_value("dim")?;
    let n_words: usize = lines.keyed_value("vocab")?;
    let mut words = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        words.push(lines.next()?);
    }
    if n_words > dim {
        return Err(lines.err(format!("vocabulary of {n_words} words exceeds dim {dim}")));
    }
    let vocab = Vocabulary::from_words(words).map_err(|e| lines.err(e.to_string()))?;
    let task = lines.keyed("task")?;
    let classifier = match task.as_str() {
        "binary" => Classifier::Binary(read_binary(&mut lines, dim)?),
        "multi" => {
            let mut models = Vec::with_capacity(N_PAIRS);
            for j in 0..N_PAIRS {
                let got: usize = lines.keyed_value("pair")?;
                if got != j {
                    return Err(lines.err(format!("expected pair {j}, found {got}")));
                }
                models.push(read_binary(&mut lines, dim)?);
            }
            let pairwise: [BinarySvm; N_PAIRS] = models.try_into().expect("four pairs");
            let n_patterns: usize = lines.keyed_value("patterns")?;
            let mut table = PatternTable::default();
            for _ in 0..n_patterns {
                let line = lines.next()?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != N_PAIRS + N_LABELS {
                    return Err(lines.err("pattern row needs 4 signs and 5 counts"));
                }
                let mut signs = [0i8; N_PAIRS];
                for (s, f) in signs.iter_mut().zip(&fields[..N_PAIRS]) {
                    *s = lines.parse(f, "sign")?;
                    if *s != 1 && *s != -1 {
                        return Err(lines.err(format!("sign must be ±1, found {s}")));
                    }
                }
                let mut counts = [0u64; N_LABELS];
                for (c, f) in counts.iter_mut().zip(&fields[N_PAIRS..]) {
                    *c = lines.parse(f, "count")?;
                }
                table.counts.insert(SignPattern(signs), counts);
            }
            let prior = lines.keyed("prior")?;
            let prior: Vec<u64> = prior
                .split_whitespace()
                .map(|f| lines.parse(f, "prior count"))
                .collect::<Result<_, _>>()?;
            table.prior = prior
                .try_into()
                .map_err(|_| lines.err("prior needs 5 counts"))?;
            Classifier::Multi(MulticlassSvm { pairwise, table })
        }
        other => return Err(lines.err(format!("unknown task `{other}`"))),
    };
    lines.keyed("end")?;
    Ok(SavedModel {
        features,
        dim,
        vocab,
        classifier,
    })
}

fn read_binary<R: BufRead>(lines: &mut Lines<R>, dim: usize) -> Result<BinarySvm, ModelFileError> {
    let head = lines.next()?;
    if head == "linear" {
        let b: f64 = lines.keyed_value("bias")?;
        let ws = lines.keyed("weights")?;
        let w: Vec<f64> = ws
            .split_whitespace()
            .map(|f| lines.parse(f, "weight"))
            .collect::<Result<_, _>>()?;
        if w.len() != dim {
            return Err(lines.err(format!("expected {dim} weights, found {}", w.len())));
        }
        return Ok(BinarySvm::Linear { w, b });
    }
    let kernel = match head.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["kernel", "linear"] => KernelSpec::Linear,
        ["kernel", "rbf", sigma] => KernelSpec::Rbf {
            sigma: lines.parse(sigma, "sigma")?,
        },
        _ => return Err(lines.err(format!("expected a model block, found `{head}`"))),
    };
    kernel.validate().map_err(|e| lines.err(e.to_string()))?;
    let n_train: usize = lines.keyed_value("n_train")?;
    let m: usize = lines.keyed_value("support")?;
    let mut support = Vec::with_capacity(m);
    for _ in 0..m {
        let line = lines.next()?;
        let mut fields = line.split_whitespace();
        let (Some(index), Some(beta)) = (fields.next(), fields.next()) else {
            return Err(lines.err("support line needs an index and a coefficient"));
        };
        let mut entries = Vec::new();
        for f in fields {
            let (i, v) = f
                .split_once(':')
                .ok_or_else(|| lines.err(format!("bad entry `{f}`")))?;
            entries.push((
                lines.parse::<usize>(i, "index")?,
                lines.parse::<f64>(v, "value")?,
            ));
        }
        support.push(SupportVector {
            index: lines.parse(index, "support index")?,
            beta: lines.parse(beta, "coefficient")?,
            x: SparseVector::new(entries).map_err(|e| lines.err(e.to_string()))?,
        });
    }
    Ok(BinarySvm::Kernel(KernelModel {
        kernel,
        n_train,
        support,
    }))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel, ModelFileError> {
    read_model(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_model() -> SavedModel {
        SavedModel {
            features: FeatureMode::Frequency,
            dim: 3,
            vocab: Vocabulary::from_words(vec!["good".into(), "bad".into(), "movie".into()])
                .unwrap(),
            classifier: Classifier::Binary(BinarySvm::Linear {
                w: vec![0.1, -1.0 / 3.0, 1e-300],
                b: -0.25,
            }),
        }
    }

    fn round_trip(m: &SavedModel) -> SavedModel {
        let mut buf = Vec::new();
        write_model(m, &mut buf).unwrap();
        read_model(buf.as_slice()).unwrap()
    }

    #[test]
    fn linear_round_trip_is_exact() {
        let m = linear_model();
        assert_eq!(round_trip(&m), m);
    }

    #[test]
    fn kernel_and_multi_round_trip() {
        let k = BinarySvm::Kernel(KernelModel {
            kernel: KernelSpec::Rbf { sigma: 0.7 },
            n_train: 10,
            support: vec![SupportVector {
                index: 4,
                beta: -0.123456789,
                x: SparseVector::new(vec![(0, 1.0), (2, 2.5)]).unwrap(),
            }],
        });
        let mut table = PatternTable {
            prior: [1, 2, 3, 4, 5],
            ..Default::default()
        };
        table
            .counts
            .insert(SignPattern([1, -1, 1, -1]), [0, 1, 0, 2, 0]);
        let lin = BinarySvm::Linear {
            w: vec![1.0, 2.0, 3.0],
            b: 0.5,
        };
        let m = SavedModel {
            features: FeatureMode::Binary,
            dim: 3,
            vocab: Vocabulary::default(),
            classifier: Classifier::Multi(MulticlassSvm {
                pairwise: [k.clone(), lin.clone(), k, lin],
                table,
            }),
        };
        assert_eq!(round_trip(&m), m);
    }

    #[test]
    fn rejects_version_mismatch() {
        let mut buf = Vec::new();
        write_model(&linear_model(), &mut buf).unwrap();
        let text =
            String::from_utf8(buf)
                .unwrap()
                .replacen("primal-svm-model 1", "primal-svm-model 2", 1);
        assert!(matches!(
            read_model(text.as_bytes()),
            Err(ModelFileError::Version { .. })
        ));
    }

    #[test]
    fn rejects_truncated_and_garbled() {
        let mut buf = Vec::new();
        write_model(&linear_model(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(read_model(truncated.as_bytes()).is_err());
        let garbled = text.replace("bias -0.25", "bias nope");
        assert!(matches!(
            read_model(garbled.as_bytes()),
            Err(ModelFileError::Format { .. })
        ));
        assert!(load_model("/definitely/not/here.model").is_err());
    }
}
