use std::collections::BTreeMap;
use std::path::Path;

use half::{bf16, f16};
use ndarray::{ArrayD, IxDyn};
use safetensors::tensor::{Dtype, SafeTensors, TensorView};

use crate::error::{Error, Result};

/// Reads every floating-point tensor from a safetensors file as `f64`.
pub fn read_safetensors(path: &Path) -> Result<BTreeMap<String, ArrayD<f64>>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_safetensors(&bytes).map_err(|e| match e {
        Error::Checkpoint { message, .. } => Error::checkpoint(path, message),
        other => other,
    })
}

pub fn decode_safetensors(bytes: &[u8]) -> Result<BTreeMap<String, ArrayD<f64>>> {
    let st = SafeTensors::deserialize(bytes)
        .map_err(|e| Error::checkpoint("<memory>", format!("invalid safetensors data: {e}")))?;
    let mut out = BTreeMap::new();
    for (name, view) in st.tensors() {
        if let Some(values) = to_f64(&view) {
            let arr = ArrayD::from_shape_vec(IxDyn(view.shape()), values).map_err(|e| {
                Error::checkpoint("<memory>", format!("tensor {name}: {e}"))
            })?;
            out.insert(name, arr);
        }
    }
    Ok(out)
}

/// Tensor shapes and dtypes without converting data.
pub fn describe_safetensors(path: &Path) -> Result<BTreeMap<String, Vec<usize>>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let st = SafeTensors::deserialize(&bytes)
        .map_err(|e| Error::checkpoint(path, format!("invalid safetensors data: {e}")))?;
    Ok(st
        .tensors()
        .into_iter()
        .map(|(n, v)| (n, v.shape().to_vec()))
        .collect())
}

fn to_f64(view: &TensorView<'_>) -> Option<Vec<f64>> {
    let data = view.data();
    let values = match view.dtype() {
        Dtype::F64 => data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F16 => data
            .chunks_exact(2)
            .map(|c| f16::from_le_bytes(c.try_into().unwrap()).to_f64())
            .collect(),
        Dtype::BF16 => data
            .chunks_exact(2)
            .map(|c| bf16::from_le_bytes(c.try_into().unwrap()).to_f64())
            .collect(),
        _ => return None,
    };
    Some(values)
}

/// Writes tensors as little-endian F64.
pub fn write_safetensors(path: &Path, tensors: &BTreeMap<String, ArrayD<f64>>) -> Result<()> {
    let buffers: Vec<(String, Vec<usize>, Vec<u8>)> = tensors
        .iter()
        .map(|(name, t)| {
            let bytes = t.iter().flat_map(|v| v.to_le_bytes()).collect();
            (name.clone(), t.shape().to_vec(), bytes)
        })
        .collect();
    let mut views = Vec::with_capacity(buffers.len());
    for (name, shape, bytes) in &buffers {
        let view = TensorView::new(Dtype::F64, shape.clone(), bytes)
            .map_err(|e| Error::checkpoint(path, format!("tensor {name}: {e}")))?;
        views.push((name.as_str(), view));
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    safetensors::tensor::serialize_to_file(views, &None, path)
        .map_err(|e| Error::checkpoint(path, format!("write failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.safetensors");
        let mut m = BTreeMap::new();
        m.insert(
            "a.weight".to_string(),
            ArrayD::from_shape_vec(IxDyn(&[2, 3]), vec![0.1, -2.0, 3.5, 1e-300, 7.0, 0.0]).unwrap(),
        );
        m.insert("a.bias".to_string(), ArrayD::from_shape_vec(IxDyn(&[1]), vec![0.3]).unwrap());
        write_safetensors(&path, &m).unwrap();
        assert_eq!(read_safetensors(&path).unwrap(), m);
        assert_eq!(describe_safetensors(&path).unwrap()["a.weight"], vec![2, 3]);
    }

    #[test]
    fn reads_half_precision() {
        let data: Vec<u8> = [1.5f32, -0.25]
            .iter()
            .flat_map(|v| f16::from_f32(*v).to_le_bytes())
            .collect();
        let view = TensorView::new(Dtype::F16, vec![2], &data).unwrap();
        let bytes = safetensors::tensor::serialize(vec![("x", view)], &None).unwrap();
        let t = decode_safetensors(&bytes).unwrap();
        assert_eq!(t["x"].as_slice().unwrap(), &[1.5, -0.25]);
    }

    #[test]
    fn garbage_is_checkpoint_error() {
        assert!(matches!(decode_safetensors(b"nope"), Err(Error::Checkpoint { .. })));
    }
}
