//! Binary model checkpoints.
//!
//! Layout: the ASCII magic `CLSM1`; five little-endian `u64` values
//! `N, K, V, T, iterations`; little-endian `f64` blocks `θ̂` (N×K row-major),
//! `β̂` (K), `ω̂` (K×V row-major), `α` (K), `η₁`, `η₀`, `κ` (V), `ε` and the
//! bound trace (T); finally the CRC-32 of everything before it as a
//! little-endian `u32`.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{ClsmError, Result};
use crate::hyper::Hyperparams;
use crate::model::FittedModel;

pub const MAGIC: &[u8; 5] = b"CLSM1";
const HEADER_LEN: usize = MAGIC.len() + 5 * 8;
const CHECKSUM_LEN: usize = 4;

pub fn encode_checkpoint(model: &FittedModel) -> Vec<u8> {
    let (n, k, v) = (model.num_nodes(), model.num_topics(), model.vocab_size());
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * payload_floats(n, k, v, model.elbo_trace.len()).unwrap_or(0) + 4);
    out.extend_from_slice(MAGIC);
    for dim in [n, k, v, model.elbo_trace.len(), model.iterations] {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    let hyper = &model.hyper;
    let blocks = model
        .theta_hat
        .iter()
        .chain(&model.beta_hat)
        .chain(model.omega_hat.iter())
        .chain(&hyper.alpha)
        .chain([&hyper.eta.0, &hyper.eta.1])
        .chain(&hyper.kappa)
        .chain([&hyper.epsilon])
        .chain(&model.elbo_trace);
    for x in blocks {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn payload_floats(n: usize, k: usize, v: usize, t: usize) -> Option<usize> {
    let nk = n.checked_mul(k)?;
    let kv = k.checked_mul(v)?;
    nk.checked_add(kv)?.checked_add(2 * k)?.checked_add(v)?.checked_add(3)?.checked_add(t)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<FittedModel> {
    let magic_seen = &bytes[..bytes.len().min(MAGIC.len())];
    if magic_seen != &MAGIC[..magic_seen.len()] {
        return Err(ClsmError::Format("not a CLSM1 checkpoint".into()));
    }
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(ClsmError::CorruptCheckpoint(format!("truncated at {} bytes", bytes.len())));
    }
    let (body, tail) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    let stored = u32::from_le_bytes(tail.try_into().expect("four bytes"));
    if crc32fast::hash(body) != stored {
        return Err(ClsmError::CorruptCheckpoint("checksum mismatch".into()));
    }
    let mut dims = [0usize; 5];
    for (i, d) in dims.iter_mut().enumerate() {
        let start = MAGIC.len() + 8 * i;
        let raw = u64::from_le_bytes(body[start..start + 8].try_into().expect("eight bytes"));
        *d = usize::try_from(raw).map_err(|_| ClsmError::CorruptCheckpoint("dimension overflows".into()))?;
    }
    let [n, k, v, t, iterations] = dims;
    let floats = payload_floats(n, k, v, t).ok_or_else(|| ClsmError::CorruptCheckpoint("dimension overflows".into()))?;
    let payload = &body[HEADER_LEN..];
    if Some(payload.len()) != floats.checked_mul(8) {
        return Err(ClsmError::CorruptCheckpoint(format!(
            "payload has {} bytes, dimensions require {} floats",
            payload.len(),
            floats
        )));
    }
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")));
    let mut take = |count: usize| -> Vec<f64> { values.by_ref().take(count).collect() };
    let theta_hat = Array2::from_shape_vec((n, k), take(n * k)).expect("sized above");
    let beta_hat = take(k);
    let omega_hat = Array2::from_shape_vec((k, v), take(k * v)).expect("sized above");
    let alpha = take(k);
    let eta = take(2);
    let kappa = take(v);
    let epsilon = take(1)[0];
    let elbo_trace = take(t);
    let hyper = Hyperparams {
        num_topics: k,
        alpha,
        eta: (eta[0], eta[1]),
        kappa,
        epsilon,
    };
    hyper
        .validate()
        .map_err(|e| ClsmError::CorruptCheckpoint(format!("stored priors are invalid: {e}")))?;
    Ok(FittedModel {
        theta_hat,
        beta_hat,
        omega_hat,
        hyper,
        elbo_trace,
        iterations,
    })
}

pub fn save_checkpoint(model: &FittedModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<FittedModel> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn model() -> FittedModel {
        FittedModel {
            theta_hat: array![[0.25, 0.75], [1.0, 0.0], [0.5, 0.5]],
            beta_hat: vec![0.3, 0.1 + 0.2],
            omega_hat: array![[0.2, 0.3, 0.5], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
            hyper: Hyperparams::symmetric(2, 3, 1.0, (1.0, 2.0), 0.1, 1e-5).unwrap(),
            elbo_trace: vec![-10.0, -9.5, -9.25],
            iterations: 2,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        assert_eq!(decode_checkpoint(&encode_checkpoint(&m)).unwrap(), m);
    }

    #[test]
    fn truncation_is_corruption() {
        let bytes = encode_checkpoint(&model());
        for cut in [3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(decode_checkpoint(&bytes[..cut]), Err(ClsmError::CorruptCheckpoint(_))),
                "cut {cut}"
            );
        }
    }

    #[test]
    fn flipped_byte_is_corruption() {
        let mut bytes = encode_checkpoint(&model());
        bytes[60] ^= 0x10;
        assert!(matches!(decode_checkpoint(&bytes), Err(ClsmError::CorruptCheckpoint(_))));
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let mut bytes = encode_checkpoint(&model());
        bytes[..5].copy_from_slice(b"CLSM2");
        assert!(matches!(decode_checkpoint(&bytes), Err(ClsmError::Format(_))));
        assert!(matches!(decode_checkpoint(b"hello world"), Err(ClsmError::Format(_))));
    }
}
