//! Generative factor roster and image geometry.

use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub cardinality: u16,
}

impl Factor {
    pub fn new(name: &str, cardinality: u16) -> Self {
        Self {
            name: name.to_string(),
            cardinality,
        }
    }
}

/// Ordered factor list plus image dimensions and the designated principal
/// factor. The sample index order is the lexicographic enumeration of factor
/// tuples (first factor most significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub factors: Vec<Factor>,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub principal: String,
}

impl Default for FactorSpec {
    fn default() -> Self {
        Self {
            factors: vec![
                Factor::new("shape", 4),
                Factor::new("scale", 4),
                Factor::new("hue", 8),
                Factor::new("pos_x", 4),
                Factor::new("pos_y", 4),
            ],
            width: 32,
            height: 32,
            channels: 3,
            principal: "scale".to_string(),
        }
    }
}

impl FactorSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.factors.is_empty() {
            return Err(DataError::InvalidSpec("no factors".into()));
        }
        for f in &self.factors {
            if f.cardinality < 2 {
                return Err(DataError::InvalidSpec(format!(
                    "factor {:?} has cardinality {}, need >= 2",
                    f.name, f.cardinality
                )));
            }
        }
        if self.factor_index(&self.principal).is_none() {
            return Err(DataError::InvalidSpec(format!(
                "principal factor {:?} not in the factor list",
                self.principal
            )));
        }
        if self.width == 0 || self.height == 0 || self.channels != 3 {
            return Err(DataError::InvalidSpec(format!(
                "unsupported image dims {}x{}x{}",
                self.width, self.height, self.channels
            )));
        }
        Ok(())
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    pub fn principal_index(&self) -> usize {
        self.factor_index(&self.principal)
            .expect("validated spec has a principal factor")
    }

    pub fn principal_cardinality(&self) -> usize {
        self.factors[self.principal_index()].cardinality as usize
    }

    pub fn cardinalities(&self) -> Vec<u16> {
        self.factors.iter().map(|f| f.cardinality).collect()
    }

    pub fn total_combinations(&self) -> usize {
        self.factors
            .iter()
            .map(|f| f.cardinality as usize)
            .product()
    }

    pub fn pixels_per_image(&self) -> usize {
        self.width * self.height * self.channels
    }

    /// Lexicographic tuple for a combination index.
    pub fn tuple_from_index(&self, mut index: usize) -> Vec<u16> {
        let mut tuple = vec![0u16; self.factors.len()];
        for (slot, f) in tuple.iter_mut().zip(&self.factors).rev() {
            let card = f.cardinality as usize;
            *slot = (index % card) as u16;
            index /= card;
        }
        tuple
    }

    pub fn check_tuple(&self, tuple: &[u16]) -> Result<(), DataError> {
        let cards = self.cardinalities();
        if tuple.len() != cards.len() || tuple.iter().zip(&cards).any(|(&t, &c)| t >= c) {
            return Err(DataError::TupleOutOfRange {
                tuple: tuple.to_vec(),
                cards,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_enumerates_2048_combinations() {
        let spec = FactorSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.total_combinations(), 4 * 4 * 8 * 4 * 4);
    }

    #[test]
    fn tuple_enumeration_is_lexicographic() {
        let spec = FactorSpec::default();
        assert_eq!(spec.tuple_from_index(0), vec![0, 0, 0, 0, 0]);
        assert_eq!(spec.tuple_from_index(1), vec![0, 0, 0, 0, 1]);
        assert_eq!(spec.tuple_from_index(4), vec![0, 0, 0, 1, 0]);
        assert_eq!(spec.tuple_from_index(2047), vec![3, 3, 7, 3, 3]);
    }

    #[test]
    fn cardinality_below_two_is_invalid() {
        let mut spec = FactorSpec::default();
        spec.factors[0].cardinality = 1;
        assert!(spec.validate().is_err());
    }
}
