/// Dense scatter array with a list of occupied positions.
///
/// Clearing touches only the occupied positions.
#[derive(Debug, Clone)]
pub struct SparseAccumulator {
    values: Vec<f64>,
    occupied: Vec<bool>,
    indices: Vec<usize>,
}

impl SparseAccumulator {
    pub fn new(n: usize) -> Self {
        SparseAccumulator {
            values: vec![0.0; n],
            occupied: vec![false; n],
            indices: Vec::new(),
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, v: f64) {
        if !self.occupied[i] {
            self.occupied[i] = true;
            self.indices.push(i);
            self.values[i] = v;
        } else {
            self.values[i] += v;
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.occupied[i]
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Occupied positions in insertion order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Multiplies every stored value by `f`.
    pub fn scale(&mut self, f: f64) {
        for &i in &self.indices {
            self.values[i] *= f;
        }
    }

    /// Occupied `(index, value)` pairs in insertion order.
    pub fn entries(&self) -> Vec<(usize, f64)> {
        self.indices.iter().map(|&i| (i, self.values[i])).collect()
    }

    pub fn clear(&mut self) {
        for &i in &self.indices {
            self.occupied[i] = false;
            self.values[i] = 0.0;
        }
        self.indices.clear();
    }

    #[cfg(test)]
    pub(crate) fn is_consistent(&self) -> bool {
        let count = self.occupied.iter().filter(|&&b| b).count();
        count == self.indices.len() && self.indices.iter().all(|&i| self.occupied[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_merge_clear() {
        let mut acc = SparseAccumulator::new(6);
        acc.add(4, 1.0);
        acc.add(1, 2.0);
        acc.add(4, -0.5);
        assert_eq!(acc.entries(), vec![(4, 0.5), (1, 2.0)]);
        assert!(acc.is_consistent());
        acc.clear();
        assert!(acc.is_empty());
        assert_eq!(acc.get(4), 0.0);
        assert!(acc.is_consistent());
    }
}
