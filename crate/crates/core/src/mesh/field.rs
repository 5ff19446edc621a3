use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::{Quaternion, Vec3};

/// Which parts of a quaternion field may be nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    Scalar,
    Vector,
    Full,
}

/// Quaternion samples, one per node. Boundary fields live at triangle
/// barycenters, volume fields at tet nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    values: Vec<Quaternion>,
    tag: FieldTag,
}

pub type BoundaryField = Field;
pub type VolumeField = Field;

impl Field {
    pub fn new(values: Vec<Quaternion>, tag: FieldTag) -> Result<Self> {
        let bad = values.iter().position(|q| match tag {
            FieldTag::Scalar => !q.is_real(),
            FieldTag::Vector => !q.is_pure(),
            FieldTag::Full => false,
        });
        if let Some(i) = bad {
            return Err(Error::Precondition(format!(
                "node {i} has components outside a {tag:?} field"
            )));
        }
        Ok(Field { values, tag })
    }

    pub fn scalar(values: &[f64]) -> Self {
        Field {
            values: values.iter().map(|&s| Quaternion::scalar(s)).collect(),
            tag: FieldTag::Scalar,
        }
    }

    pub fn vector(values: &[Vec3]) -> Self {
        Field {
            values: values.iter().map(|&v| Quaternion::vector(v)).collect(),
            tag: FieldTag::Vector,
        }
    }

    pub fn full(values: Vec<Quaternion>) -> Self {
        Field {
            values,
            tag: FieldTag::Full,
        }
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Quaternion] {
        &self.values
    }

    pub fn scalar_part(&self) -> Vec<f64> {
        self.values.iter().map(|q| q.w0).collect()
    }

    pub fn vector_part(&self) -> Vec<Vec3> {
        self.values.iter().map(|q| q.vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_are_enforced() {
        let ok = Field::new(vec![Quaternion::scalar(1.0)], FieldTag::Scalar);
        assert!(ok.is_ok());
        let bad = Field::new(vec![Quaternion::E1], FieldTag::Scalar);
        assert!(bad.is_err());
        let bad = Field::new(vec![Quaternion::ONE], FieldTag::Vector);
        assert!(bad.is_err());
        let v = Field::vector(&[Vec3::new(1.0, 2.0, 3.0)]);
        assert_eq!(v.scalar_part(), vec![0.0]);
        assert_eq!(v.vector_part()[0], Vec3::new(1.0, 2.0, 3.0));
    }
}
