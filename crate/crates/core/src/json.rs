//! JSON encoding shared by every interchange file.
//!
//! Complex scalars are `[re, im]` pairs and matrices are row-major nested arrays, so a
//! 2×2 identity is `[[[1,0],[0,0]],[[0,0],[1,0]]]`.

use serde::de::{DeserializeOwned, Error as _};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{c, CMatrix};

type RawMatrix = Vec<Vec<[f64; 2]>>;

fn to_raw(m: &CMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|k| [m[(r, k)].re, m[(r, k)].im])
                .collect()
        })
        .collect()
}

fn from_raw(raw: RawMatrix) -> std::result::Result<CMatrix, String> {
    let rows = raw.len();
    if rows == 0 {
        return Err("matrix has no rows".into());
    }
    let cols = raw[0].len();
    if cols == 0 {
        return Err("matrix has no columns".into());
    }
    if let Some((r, row)) = raw.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(format!(
            "ragged matrix: row {r} has {} entries, expected {cols}",
            row.len()
        ));
    }
    let flat: Vec<_> = raw.into_iter().flatten().collect();
    if flat
        .iter()
        .any(|[re, im]| !re.is_finite() || !im.is_finite())
    {
        return Err("matrix contains non-finite entries".into());
    }
    Ok(CMatrix::from_row_iterator(
        rows,
        cols,
        flat.into_iter().map(|[re, im]| c(re, im)),
    ))
}

/// `#[serde(with = "json::matrix")]` for a single [`CMatrix`].
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_raw(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        from_raw(RawMatrix::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "json::matrix_list")]` for `Vec<CMatrix>`.
pub mod matrix_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(ms.len()))?;
        for m in ms {
            seq.serialize_element(&to_raw(m))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMatrix>, D::Error> {
        Vec::<RawMatrix>::deserialize(d)?
            .into_iter()
            .enumerate()
            .map(|(i, raw)| from_raw(raw).map_err(|e| D::Error::custom(format!("matrix {i}: {e}"))))
            .collect()
    }
}

/// `#[serde(with = "json::optional_matrix")]` for `Option<CMatrix>`.
pub mod optional_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &Option<CMatrix>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(to_raw).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<CMatrix>, D::Error> {
        Option::<RawMatrix>::deserialize(d)?
            .map(from_raw)
            .transpose()
            .map_err(D::Error::custom)
    }
}

/// Deserialize `text`, reporting failures with the JSON path of the offending value.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        Error::Parse {
            path,
            message: err.into_inner().to_string(),
        }
    })
}

pub fn to_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("in-memory values always serialize")
}

pub fn to_string_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("in-memory values always serialize")
}

/// Density matrix file: `{"dim": m, "rho": [[[re,im],...],...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    #[serde(with = "matrix")]
    pub rho: CMatrix,
}

impl StateFile {
    pub fn new(rho: CMatrix) -> Self {
        Self {
            dim: rho.nrows(),
            rho,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let state: StateFile = parse(text)?;
        if state.rho.shape() != (state.dim, state.dim) {
            return Err(Error::Parse {
                path: "rho".into(),
                message: format!(
                    "expected a {0}x{0} matrix, got {1}x{2}",
                    state.dim,
                    state.rho.nrows(),
                    state.rho.ncols()
                ),
            });
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_round_trip() {
        let rho =
            CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)]);
        let text = to_string(&StateFile::new(rho.clone()));
        assert_eq!(
            text,
            r#"{"dim":2,"rho":[[[0.5,0.0],[0.0,-0.5]],[[0.0,0.5],[0.5,0.0]]]}"#
        );
        assert_eq!(StateFile::from_json(&text).unwrap().rho, rho);
    }

    #[test]
    fn ragged_rows_are_rejected_with_path() {
        let err = StateFile::from_json(r#"{"dim":2,"rho":[[[1,0],[0,0]],[[0,0]]]}"#).unwrap_err();
        match err {
            Error::Parse { path, message } => {
                assert_eq!(path, "rho");
                assert!(message.contains("ragged"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(StateFile::from_json(r#"{"dim":3,"rho":[[[1,0]]]}"#).is_err());
    }
}
