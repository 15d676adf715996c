//! Checkpoint files: a short versioned text header followed by the raw
//! little-endian `f64` payload.
//!
//! ```text
//! glgcn-checkpoint 1
//! dims 1433 16 7
//! bias 0
//! config {"variant":"gcn",...}
//! payload 183584
//! <payload bytes: weights layer by layer, row-major, then biases>
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::DenseMatrix;
use crate::optim_train::TrainConfig;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "glgcn-checkpoint";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub config: TrainConfig,
}

pub fn save_checkpoint(params: &ModelParams, config: &TrainConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dims = params.layer_dims();
    let payload_len = params.num_parameters() * 8;
    let config_json = serde_json::to_string(config).expect("config serializes");

    let mut out = Vec::with_capacity(payload_len + 256);
    out.extend_from_slice(format!("{MAGIC} {CHECKPOINT_VERSION}\n").as_bytes());
    let dims_str: Vec<String> = dims.iter().map(usize::to_string).collect();
    out.extend_from_slice(format!("dims {}\n", dims_str.join(" ")).as_bytes());
    out.extend_from_slice(format!("bias {}\n", u8::from(params.has_bias())).as_bytes());
    out.extend_from_slice(format!("config {config_json}\n").as_bytes());
    out.extend_from_slice(format!("payload {payload_len}\n").as_bytes());
    for t in params.tensors() {
        for v in t.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Header<'a> {
    rest: &'a [u8],
    line: usize,
}

impl<'a> Header<'a> {
    fn next_line(&mut self, path: &Path) -> Result<&'a str> {
        let end = self
            .rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Checkpoint {
                path: path.to_path_buf(),
                msg: format!("truncated header at line {}", self.line + 1),
            })?;
        let line = std::str::from_utf8(&self.rest[..end]).map_err(|_| Error::Checkpoint {
            path: path.to_path_buf(),
            msg: format!("header line {} is not UTF-8", self.line + 1),
        })?;
        self.rest = &self.rest[end + 1..];
        self.line += 1;
        Ok(line)
    }

    fn field(&mut self, path: &Path, key: &str) -> Result<&'a str> {
        let line = self.next_line(path)?;
        line.strip_prefix(key)
            .and_then(|s| s.strip_prefix(' '))
            .ok_or_else(|| Error::Checkpoint {
                path: path.to_path_buf(),
                msg: format!("line {}: expected `{key} ...`", self.line),
            })
    }
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let bad = |msg: String| Error::Checkpoint {
        path: path.to_path_buf(),
        msg,
    };

    let mut header = Header { rest: &bytes, line: 0 };
    let version = header.field(path, MAGIC)?;
    let version: u32 = version
        .trim()
        .parse()
        .map_err(|_| bad(format!("unreadable version {version:?}")))?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "format version {version}, this build reads version {CHECKPOINT_VERSION}"
        )));
    }
    let dims: Vec<usize> = header
        .field(path, "dims")?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad dimension {t:?}"))))
        .collect::<Result<_>>()?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(bad(format!("invalid layer dims {dims:?}")));
    }
    let bias = match header.field(path, "bias")? {
        "0" => false,
        "1" => true,
        other => return Err(bad(format!("bias flag {other:?}"))),
    };
    let config: TrainConfig =
        serde_json::from_str(header.field(path, "config")?).map_err(|e| bad(format!("config: {e}")))?;
    let payload_len: usize = header
        .field(path, "payload")?
        .parse()
        .map_err(|_| bad("unreadable payload length".into()))?;

    let mut shapes: Vec<(usize, usize)> = dims.windows(2).map(|w| (w[0], w[1])).collect();
    if bias {
        shapes.extend(dims[1..].iter().map(|&c| (1, c)));
    }
    let expected: usize = shapes.iter().map(|(r, c)| r * c * 8).sum();
    if payload_len != expected {
        return Err(bad(format!(
            "payload declared as {payload_len} bytes but dims {dims:?} need {expected}"
        )));
    }
    if header.rest.len() != payload_len {
        return Err(bad(format!(
            "payload has {} bytes, header declares {payload_len}",
            header.rest.len()
        )));
    }

    let mut values = header
        .rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut tensors = Vec::with_capacity(shapes.len());
    for (r, c) in shapes {
        let data: Vec<f64> = values.by_ref().take(r * c).collect();
        tensors.push(DenseMatrix::from_vec(r, c, data)?);
    }
    let biases = if bias {
        tensors.split_off(dims.len() - 1)
    } else {
        Vec::new()
    };
    let params = ModelParams::new(tensors, biases)?;

    let hidden = &dims[1..dims.len() - 1];
    if hidden != config.hidden_dims.as_slice() {
        return Err(bad(format!(
            "weights have hidden dims {hidden:?} but the embedded config says {:?}",
            config.hidden_dims
        )));
    }
    Ok(Checkpoint { params, config })
}

/// Loads a checkpoint and checks its layer dims against `expected_dims`.
pub fn load_checkpoint_expecting(path: impl AsRef<Path>, expected_dims: &[usize]) -> Result<Checkpoint> {
    let path = path.as_ref();
    let ck = load_checkpoint(path)?;
    let dims = ck.params.layer_dims();
    if dims != expected_dims {
        return Err(Error::shape(
            "load_checkpoint",
            format!(
                "{} holds layer dims {dims:?}, expected {expected_dims:?}",
                path.display()
            ),
        ));
    }
    Ok(ck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    fn sample(bias: bool) -> (ModelParams, TrainConfig) {
        let config = TrainConfig {
            hidden_dims: vec![16],
            bias,
            ..TrainConfig::default()
        };
        let mut params = ModelParams::glorot(&[5, 16, 3], bias, &mut seeded_rng(4)).unwrap();
        for b in params.tensors_mut().skip(2) {
            b.as_mut_slice()[0] = 0.125;
        }
        (params, config)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let tmp = tempfile::tempdir().unwrap();
        for bias in [false, true] {
            let (params, config) = sample(bias);
            let path = tmp.path().join(format!("m{bias}.ckpt"));
            save_checkpoint(&params, &config, &path).unwrap();
            let ck = load_checkpoint(&path).unwrap();
            assert_eq!(ck.params, params);
            for (a, b) in ck.params.tensors().zip(params.tensors()) {
                let bits_a: Vec<u64> = a.as_slice().iter().map(|v| v.to_bits()).collect();
                let bits_b: Vec<u64> = b.as_slice().iter().map(|v| v.to_bits()).collect();
                assert_eq!(bits_a, bits_b);
            }
            assert_eq!(ck.config, config);
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let (params, config) = sample(false);
        let path = tmp.path().join("m.ckpt");
        save_checkpoint(&params, &config, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        for cut in [10, bytes.len() / 2, bytes.len() - 1] {
            fs::write(&path, &bytes[..cut]).unwrap();
            assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint { .. })));
        }
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let (params, config) = sample(false);
        let path = tmp.path().join("m.ckpt");
        save_checkpoint(&params, &config, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let pos = MAGIC.len() + 1;
        bytes[pos] = b'9';
        fs::write(&path, &bytes).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("version 9"), "{err}");
    }

    #[test]
    fn hidden_width_mismatch_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let (params, config) = sample(false);
        let path = tmp.path().join("m.ckpt");
        save_checkpoint(&params, &config, &path).unwrap();
        assert!(load_checkpoint_expecting(&path, &[5, 16, 3]).is_ok());
        assert!(matches!(
            load_checkpoint_expecting(&path, &[5, 32, 3]),
            Err(Error::Shape { .. })
        ));
    }
}
