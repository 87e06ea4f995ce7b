use nalgebra::DMatrix;

use super::{CMat, C64};
use crate::error::{Error, Result};

/// Row-major nested arrays of `[re, im]` pairs.
pub type EncodedMatrix = Vec<Vec<[f64; 2]>>;

pub fn encode_matrix(m: &CMat) -> EncodedMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn decode_matrix(rows: &EncodedMatrix) -> Result<CMat> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::InvalidModel("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::InvalidModel("matrix has no columns".into()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::InvalidModel(format!(
            "row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    let m = DMatrix::from_fn(nrows, ncols, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
    if let Some(k) = m.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        // column-major storage index
        return Err(Error::NonFinite {
            row: k % nrows,
            col: k / nrows,
        });
    }
    Ok(m)
}

/// `#[serde(with = "matrix_serde")]` adaptor for [`CMat`] fields.
pub mod matrix_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{decode_matrix, encode_matrix, EncodedMatrix};
    use crate::linalg::CMat;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        encode_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows = EncodedMatrix::deserialize(d)?;
        decode_matrix(&rows).map_err(serde::de::Error::custom)
    }
}
