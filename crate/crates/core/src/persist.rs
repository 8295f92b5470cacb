//! Binary weight container ("SGCW").
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "SGCW" | u32 version
//! u32 x 8   in_channels w_in w_out conv_filters conv_kernel lstm1_units lstm2_units dense_units
//! u32 x 2   dense and output activation codes
//! f64 x 2   scaler min, max
//! u64 n     followed by n f64 parameters in canonical layer order
//! u64 e     followed by e f64 per-epoch losses
//! u8        1 if optimizer state follows, else 0
//!           u64 t, f64 lr, beta1, beta2, eps, n f64 first moments, n f64 second moments
//! ```
//!
//! Values are always stored as f64 so a model trained in one precision loads in either.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::nn::{Activation, AdamState, NetworkConfig, NetworkParams};
use crate::pipeline::ScalerParams;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"SGCW";
pub const VERSION: u32 = 1;

pub fn encode_model<T: Scalar>(model: &TrainedModel<T>) -> Vec<u8> {
    let c = &model.config;
    let n = model.params.param_count();
    let mut out = Vec::with_capacity(96 + 8 * (n + model.loss_curve.len()) + model.optimizer.as_ref().map_or(0, |_| 16 * n + 40));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [c.in_channels, c.w_in, c.w_out, c.conv_filters, c.conv_kernel, c.lstm1_units, c.lstm2_units, c.dense_units] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&model.params.dense.activation.code().to_le_bytes());
    out.extend_from_slice(&model.params.output.activation.code().to_le_bytes());
    put_f64s(&mut out, [model.scaler.min, model.scaler.max].iter());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for block in model.params.slices() {
        put_f64s(&mut out, block.iter());
    }
    out.extend_from_slice(&(model.loss_curve.len() as u64).to_le_bytes());
    put_f64s(&mut out, model.loss_curve.iter());
    match &model.optimizer {
        None => out.push(0),
        Some(adam) => {
            out.push(1);
            out.extend_from_slice(&adam.t.to_le_bytes());
            put_f64s(&mut out, [adam.lr, adam.beta1, adam.beta2, adam.eps].iter());
            put_f64s(&mut out, adam.m.iter());
            put_f64s(&mut out, adam.v.iter());
        }
    }
    out
}

fn put_f64s<'a, T: Scalar>(out: &mut Vec<u8>, values: impl Iterator<Item = &'a T>) {
    for v in values {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated weight file while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn len(&mut self, what: &str) -> Result<usize> {
        let n = self.u64(what)?;
        // each entry needs 8 bytes, which bounds any honest length
        if n > (self.bytes.len() / 8) as u64 {
            return Err(Error::Format(format!("implausible {what} length {n}")));
        }
        Ok(n as usize)
    }

    fn f64s<T: Scalar>(&mut self, n: usize, what: &str) -> Result<Vec<T>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format(format!("{what} too long")))?, what)?;
        Ok(raw.chunks_exact(8).map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap()))).collect())
    }
}

pub fn decode_model<T: Scalar>(bytes: &[u8]) -> Result<TrainedModel<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Format("not an SGCW weight file (bad magic)".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported SGCW version {version}")));
    }
    let mut dims = [0usize; 8];
    for d in &mut dims {
        *d = r.u32("network config")? as usize;
    }
    let [in_channels, w_in, w_out, conv_filters, conv_kernel, lstm1_units, lstm2_units, dense_units] = dims;
    let config = NetworkConfig { w_in, w_out, in_channels, conv_filters, conv_kernel, lstm1_units, lstm2_units, dense_units };
    config.validate()?;
    for (expected, what) in [(Activation::Tanh, "dense activation"), (Activation::Linear, "output activation")] {
        let code = r.u32(what)?;
        if Activation::from_code(code) != Some(expected) {
            return Err(Error::Format(format!("unexpected {what} code {code}")));
        }
    }
    let s = r.f64s::<T>(2, "scaler")?;
    let scaler = ScalerParams::new(s[0], s[1])?;
    let n = r.len("parameter")?;
    if n != config.param_count() {
        return Err(Error::shape("stored parameter count", config.param_count(), n));
    }
    let params = NetworkParams::from_flat(config, &r.f64s::<T>(n, "parameters")?)?;
    let epochs = r.len("loss curve")?;
    let loss_curve = r.f64s(epochs, "loss curve")?;
    let optimizer = match r.u8("optimizer flag")? {
        0 => None,
        1 => {
            let t = r.u64("adam step")?;
            let h = r.f64s::<T>(4, "adam hyperparameters")?;
            let m = r.f64s(n, "adam first moments")?;
            let v = r.f64s(n, "adam second moments")?;
            let adam = AdamState { m, v, t, lr: h[0], beta1: h[1], beta2: h[2], eps: h[3] };
            adam.validate()?;
            Some(adam)
        }
        other => return Err(Error::Format(format!("bad optimizer flag {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after weight data", bytes.len() - r.pos)));
    }
    Ok(TrainedModel { config, params, scaler, loss_curve, optimizer })
}

pub fn save_model<T: Scalar>(model: &TrainedModel<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<TrainedModel<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(with_adam: bool) -> TrainedModel<f64> {
        let config = NetworkConfig::standard(6, 2).with_widths(2, 3, 4, 2);
        let params = NetworkParams::build(config, 3).unwrap();
        let mut adam = AdamState::new(params.param_count(), 0.001);
        adam.t = 17;
        adam.m.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64 * 1e-3);
        TrainedModel {
            config,
            params,
            scaler: ScalerParams::new(-0.4, 1.3).unwrap(),
            loss_curve: vec![0.5, 0.25, 0.125],
            optimizer: with_adam.then_some(adam),
        }
    }

    #[test]
    fn round_trip() {
        for with_adam in [false, true] {
            let m = model(with_adam);
            let bytes = encode_model(&m);
            assert_eq!(&bytes[..4], b"SGCW");
            assert_eq!(decode_model::<f64>(&bytes).unwrap(), m);
        }
    }

    #[test]
    fn loads_into_f32() {
        let m = model(true);
        let m32 = decode_model::<f32>(&encode_model(&m)).unwrap();
        assert_eq!(m32.params.param_count(), m.params.param_count());
        assert_eq!(m32.scaler.max, 1.3f32);
    }

    #[test]
    fn corrupt_files_rejected() {
        let bytes = encode_model(&model(true));
        assert!(decode_model::<f64>(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model::<f64>(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_model::<f64>(&bad).is_err());
        let mut wrong_dims = bytes;
        wrong_dims[12] = 9; // w_out
        assert!(decode_model::<f64>(&wrong_dims).is_err());
    }
}
