use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Assignment of rows `0..n` to folds `0..V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    folds: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    /// Plan from explicit labels; every fold must receive at least one row.
    pub fn from_assignments(folds: usize, assignments: Vec<usize>) -> Result<Self> {
        if folds < 2 {
            return Err(Error::domain(format!("need at least 2 folds, got {folds}")));
        }
        let mut sizes = vec![0usize; folds];
        for &a in &assignments {
            if a >= folds {
                return Err(Error::domain(format!("fold label {a} out of range for {folds} folds")));
            }
            sizes[a] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::domain(format!("fold {} is empty", empty + 1)));
        }
        Ok(Self { folds, assignments })
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Rows in fold `v`, ascending.
    pub fn fold_rows(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignments[i] == v).collect()
    }

    /// Rows outside fold `v`, ascending.
    pub fn complement_rows(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignments[i] != v).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Uniformly random balanced partition: fold sizes differ by at most one.
pub fn make_folds(n: usize, folds: usize, rng: &RngStream) -> Result<FoldPlan> {
    if folds < 2 {
        return Err(Error::domain(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::domain(format!("cannot split {n} rows into {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng.rng());
    let mut assignments = vec![0; n];
    for (k, &row) in order.iter().enumerate() {
        assignments[row] = k % folds;
    }
    FoldPlan::from_assignments(folds, assignments)
}
