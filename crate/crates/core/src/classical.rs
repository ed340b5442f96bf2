//! Classical joint distributions, conditionals and stochastic dynamics.
//!
//! A joint table is indexed `(i, j)` with `i` the value of Y and `j` the value of
//! X, so column `j` of a conditional is `P(Y | X = j)`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Accepts weights summing to one within tolerance and renormalizes them.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::validation("nonempty", "distribution has no outcomes"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::validation("nonnegative", format!("weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol::DISTRIBUTION {
            return Err(Error::validation("normalized", format!("weights sum to {sum}")));
        }
        Ok(Distribution {
            weights: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.weights[j] > 0.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    table: DMatrix<f64>,
}

impl JointDistribution {
    pub fn new(table: DMatrix<f64>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::validation("nonempty", "joint table has no entries"));
        }
        if let Some(w) = table.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::validation("nonnegative", format!("entry {w}")));
        }
        let sum = table.sum();
        if (sum - 1.0).abs() > tol::DISTRIBUTION {
            return Err(Error::validation("normalized", format!("entries sum to {sum}")));
        }
        Ok(JointDistribution { table })
    }

    /// Entry `(i, j)` is `P(Y = i, X = j)`.
    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }
}

/// Column-stochastic matrix `Γ_ij = P(Y = i | X = j)` with possibly undefined columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
    defined: Vec<bool>,
}

impl StochasticMatrix {
    pub fn new(entries: DMatrix<f64>, defined: Vec<bool>) -> Result<Self> {
        if defined.len() != entries.ncols() {
            return Err(Error::Shape(format!(
                "support mask has {} entries for {} columns",
                defined.len(),
                entries.ncols()
            )));
        }
        for j in (0..entries.ncols()).filter(|&j| defined[j]) {
            let col = entries.column(j);
            if col.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::validation("nonnegative", format!("column {j} has a negative entry")));
            }
            let sum = col.sum();
            if (sum - 1.0).abs() > tol::DISTRIBUTION {
                return Err(Error::validation("column-normalized", format!("column {j} sums to {sum}")));
            }
        }
        let mut entries = entries;
        for j in (0..entries.ncols()).filter(|&j| !defined[j]) {
            entries.column_mut(j).fill(0.0);
        }
        Ok(StochasticMatrix { entries, defined })
    }

    /// Every column defined.
    pub fn full(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.ncols();
        Self::new(entries, vec![true; n])
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_defined(&self, j: usize) -> bool {
        self.defined[j]
    }

    pub fn support_mask(&self) -> &[bool] {
        &self.defined
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.defined[j].then(|| self.entries[(i, j)])
    }

    /// Entries with undefined columns zero-filled.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Keeps only the columns in `support`.
    pub fn restrict(&self, support: &[usize]) -> StochasticMatrix {
        let defined = (0..self.cols()).map(|j| self.defined[j] && support.contains(&j)).collect();
        StochasticMatrix::new(self.entries.clone(), defined).expect("restriction keeps columns valid")
    }
}

/// `(P(X), P(Y))` from column and row sums.
pub fn marginals(joint: &JointDistribution) -> (Distribution, Distribution) {
    let t = joint.table();
    let px: Vec<f64> = (0..t.ncols()).map(|j| t.column(j).sum()).collect();
    let py: Vec<f64> = (0..t.nrows()).map(|i| t.row(i).sum()).collect();
    (
        Distribution::new(px).expect("column sums of a valid joint"),
        Distribution::new(py).expect("row sums of a valid joint"),
    )
}

/// `P(Y | X)`, undefined wherever `P(X = j) = 0`.
pub fn conditional(joint: &JointDistribution) -> StochasticMatrix {
    let t = joint.table();
    let mut entries = DMatrix::zeros(t.nrows(), t.ncols());
    let mut defined = vec![false; t.ncols()];
    for j in 0..t.ncols() {
        let px = t.column(j).sum();
        if px > 0.0 {
            defined[j] = true;
            for i in 0..t.nrows() {
                entries[(i, j)] = t[(i, j)] / px;
            }
        }
    }
    StochasticMatrix::new(entries, defined).expect("conditional columns are normalized")
}

/// `P(X, Y) = P(Y | X) P(X)`.
pub fn compose(p: &Distribution, g: &StochasticMatrix) -> Result<JointDistribution> {
    if p.len() != g.cols() {
        return Err(Error::Shape(format!(
            "distribution over {} values, conditional over {} columns",
            p.len(),
            g.cols()
        )));
    }
    let mut table = DMatrix::zeros(g.rows(), g.cols());
    for (j, &pj) in p.weights().iter().enumerate() {
        if pj == 0.0 {
            continue;
        }
        if !g.is_defined(j) {
            return Err(Error::Support { column: j });
        }
        for i in 0..g.rows() {
            table[(i, j)] = g.entries[(i, j)] * pj;
        }
    }
    JointDistribution::new(table)
}

/// Output distribution `P(Y = i) = Σ_j Γ_ij P(X = j)`.
pub fn evolve(p: &Distribution, g: &StochasticMatrix) -> Result<Distribution> {
    Ok(marginals(&compose(p, g)?).1)
}

/// Forward then reverse through the classical isomorphism.
pub fn classical_iso_roundtrip(p: &Distribution, g: &StochasticMatrix) -> Result<(Distribution, StochasticMatrix)> {
    let joint = compose(p, g)?;
    Ok((marginals(&joint).0, conditional(&joint)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_probabilities, random_stochastic, Rng64};

    fn dist(w: &[f64]) -> Distribution {
        Distribution::new(w.to_vec()).unwrap()
    }

    fn joint(rows: usize, cols: usize, w: &[f64]) -> JointDistribution {
        JointDistribution::new(DMatrix::from_row_slice(rows, cols, w)).unwrap()
    }

    #[test]
    fn marginals_examples() {
        let (px, py) = marginals(&joint(2, 2, &[0.25; 4]));
        assert_eq!(px.weights(), &[0.5, 0.5]);
        assert_eq!(py.weights(), &[0.5, 0.5]);

        let p = 0.3;
        let (px, py) = marginals(&joint(2, 2, &[p, 0.0, 0.0, 1.0 - p]));
        assert_eq!(px.weights(), &[p, 1.0 - p]);
        assert_eq!(py.weights(), &[p, 1.0 - p]);
    }

    #[test]
    fn random_marginals_are_normalized() {
        let mut rng = Rng64::seed(9);
        for _ in 0..20 {
            let w = random_probabilities(12, &mut rng);
            let (px, py) = marginals(&joint(3, 4, &w));
            assert!((px.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((py.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_examples() {
        let g = conditional(&joint(2, 2, &[0.4, 0.0, 0.0, 0.6]));
        assert_eq!(g.entries(), &DMatrix::identity(2, 2));
        assert!(g.is_defined(0) && g.is_defined(1));

        let g = conditional(&joint(2, 2, &[0.4, 0.0, 0.6, 0.0]));
        assert!(g.is_defined(0));
        assert!(!g.is_defined(1));
        assert_eq!(g.get(0, 1), None);
    }

    #[test]
    fn compose_examples() {
        let id = StochasticMatrix::full(DMatrix::identity(2, 2)).unwrap();
        let j = compose(&dist(&[0.5, 0.5]), &id).unwrap();
        assert_eq!(j.table(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));

        let g = StochasticMatrix::new(DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.7, 0.0]), vec![true, false]).unwrap();
        let j = compose(&dist(&[1.0, 0.0]), &g).unwrap();
        assert_eq!(j.table().column(1).sum(), 0.0);
        assert!((j.table().column(0).sum() - 1.0).abs() < 1e-15);

        let p = 0.3;
        let flip = StochasticMatrix::full(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let j = compose(&dist(&[p, 1.0 - p]), &flip).unwrap();
        assert_eq!(j.table(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0 - p, p, 0.0]));
    }

    #[test]
    fn compose_rejects_undefined_supported_column() {
        let g = StochasticMatrix::new(DMatrix::identity(2, 2), vec![true, false]).unwrap();
        assert_eq!(compose(&dist(&[0.5, 0.5]), &g), Err(Error::Support { column: 1 }));
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.4]).is_err());
        assert!(Distribution::new(vec![1.1, -0.1]).is_err());
        let d = Distribution::new(vec![0.5, 0.5 + 1e-13]).unwrap();
        assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn roundtrip_examples() {
        let id = StochasticMatrix::full(DMatrix::identity(2, 2)).unwrap();
        let (p, g) = classical_iso_roundtrip(&dist(&[0.5, 0.5]), &id).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.5]);
        assert_eq!(g, id);

        let mut rng = Rng64::seed(2);
        let any = StochasticMatrix::full(random_stochastic(3, 2, &mut rng)).unwrap();
        let (p, g) = classical_iso_roundtrip(&dist(&[1.0, 0.0]), &any).unwrap();
        assert_eq!(p.weights(), &[1.0, 0.0]);
        assert!(g.is_defined(0) && !g.is_defined(1));
    }

    #[test]
    fn random_roundtrip_is_exact() {
        let mut rng = Rng64::seed(4);
        for _ in 0..50 {
            let p = dist(&random_probabilities(4, &mut rng));
            let g = StochasticMatrix::full(random_stochastic(3, 4, &mut rng)).unwrap();
            let joint = compose(&p, &g).unwrap();
            let (px, _) = marginals(&joint);
            let back = conditional(&joint);
            for j in 0..4 {
                assert!((px.weights()[j] - p.weights()[j]).abs() < 1e-12);
                for i in 0..3 {
                    assert!((back.get(i, j).unwrap() - g.get(i, j).unwrap()).abs() < 1e-12);
                }
            }
            let y = evolve(&p, &g).unwrap();
            for i in 0..3 {
                let direct: f64 = (0..4).map(|j| g.entries()[(i, j)] * p.weights()[j]).sum();
                assert!((y.weights()[i] - direct).abs() < 1e-12);
            }
        }
    }
}
