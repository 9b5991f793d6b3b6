use super::{Norm, SelectionResult, SelectionRule};
use crate::error::Result;
use crate::estimators::{apply, EstimatorSpec};
use crate::linalg::SymMatrix;

/// Grid point minimizing `||estimate(lambda) - truth||^2` in `norm`, with
/// estimates built from `input`.
pub fn oracle_select(
    spec: &EstimatorSpec,
    input: &SymMatrix,
    truth: &SymMatrix,
    norm: Norm,
) -> Result<SelectionResult> {
    input.check_same_dim(truth)?;
    spec.check_dim(input.dim())?;
    let scores = spec
        .grid()
        .iter()
        .map(|&l| norm.squared_distance(&apply(spec, input, l)?, truth))
        .collect::<Result<Vec<_>>>()?;
    SelectionResult::from_scores(SelectionRule::oracle(norm), spec.grid(), scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Family;

    fn input() -> SymMatrix {
        SymMatrix::from_rows(&[
            vec![2.0, 0.7, 0.3, -0.2],
            vec![0.7, 1.5, 0.4, 0.1],
            vec![0.3, 0.4, 1.0, 0.5],
            vec![-0.2, 0.1, 0.5, 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn truth_equal_to_input_picks_full_band() {
        let spec = EstimatorSpec::new(Family::Band, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        for norm in [Norm::Frobenius, Norm::Operator] {
            let r = oracle_select(&spec, &input(), &input(), norm).unwrap();
            assert_eq!(r.lambda, 3.0);
            assert_eq!(r.curve[3].score, 0.0);
        }
    }

    #[test]
    fn diagonal_truth_picks_zero_band() {
        let spec = EstimatorSpec::new(Family::Band, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let truth = SymMatrix::from_diagonal(&input().diagonal());
        for norm in [Norm::Frobenius, Norm::Operator] {
            let r = oracle_select(&spec, &input(), &truth, norm).unwrap();
            assert_eq!(r.lambda, 0.0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let spec = EstimatorSpec::new(Family::Hard, vec![0.0]).unwrap();
        assert!(oracle_select(&spec, &input(), &SymMatrix::identity(3), Norm::Frobenius).is_err());
    }
}
