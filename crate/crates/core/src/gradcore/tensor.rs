//! Dense n-dimensional array with row-major storage.

use crate::scalar::Scalar;

use super::GradError;

/// A dense real-valued tensor. The element count always equals the product
/// of the dimensions; dimensions are all positive (a rank-0 tensor is a
/// scalar with one element).
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn new(shape: Vec<usize>, data: Vec<S>) -> Result<Self, GradError> {
        let numel: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(GradError::InvalidShape {
                op: "tensor",
                shape,
                reason: "zero-sized dimension".into(),
            });
        }
        if numel != data.len() {
            return Err(GradError::InvalidShape {
                op: "tensor",
                shape,
                reason: format!("shape wants {} elements, data has {}", numel, data.len()),
            });
        }
        Ok(Self { shape, data })
    }

    /// Construct without the shape/length check. Internal use where the
    /// invariant is guaranteed by construction.
    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<S>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self::from_raw(shape.to_vec(), vec![S::zero(); numel])
    }

    pub fn full(shape: &[usize], value: S) -> Self {
        let numel = shape.iter().product();
        Self::from_raw(shape.to_vec(), vec![value; numel])
    }

    /// Rank-0 scalar.
    pub fn scalar(value: S) -> Self {
        Self::from_raw(vec![], vec![value])
    }

    /// Rank-1 vector.
    pub fn vector(data: Vec<S>) -> Self {
        let n = data.len();
        Self::from_raw(vec![n], data)
    }

    /// Rank-2 matrix in row-major order.
    pub fn matrix(rows: usize, cols: usize, data: Vec<S>) -> Result<Self, GradError> {
        Self::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// The single element of a scalar tensor.
    ///
    /// Panics if the tensor has more than one element.
    pub fn item(&self) -> S {
        assert!(self.is_scalar(), "item() on non-scalar shape {:?}", self.shape);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.as_f64()).collect()
    }

    pub fn from_f64_slice(shape: &[usize], data: &[f64]) -> Result<Self, GradError> {
        Self::new(shape.to_vec(), data.iter().map(|&v| S::from_f64(v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_product_must_match() {
        assert!(Tensor::<f64>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f64>::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::<f64>::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn scalar_roundtrip() {
        let t = Tensor::scalar(2.5f64);
        assert!(t.is_scalar());
        assert_eq!(t.rank(), 0);
        assert_eq!(t.item(), 2.5);
    }
}
