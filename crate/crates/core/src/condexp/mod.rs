//! The conditional expectation onto the sigma-algebra of a partition.
//!
//! On a finite space `E(f)` is the μ-weighted average of `f` over the block
//! containing each point; it is the unique block-constant function with the
//! same integral as `f` over every block.

pub mod properties;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::measure::{same_space, FiniteMeasureSpace, MeasurableFunction, Partition, C64};
use crate::opalgebra::WeightedOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalExpectation {
    partition: Partition,
    block_masses: Vec<f64>,
}

impl ConditionalExpectation {
    pub fn new(partition: Partition) -> Self {
        let block_masses = partition.block_masses();
        Self {
            partition,
            block_masses,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn space(&self) -> &Arc<FiniteMeasureSpace> {
        self.partition.space()
    }

    pub fn block_masses(&self) -> &[f64] {
        &self.block_masses
    }

    /// The value of `E(f)` on each block.
    pub fn block_values(&self, f: &MeasurableFunction) -> Result<Vec<C64>> {
        if !same_space(f.space(), self.space()) {
            return Err(Error::SpaceMismatch);
        }
        let weights = self.space().weights();
        Ok(self
            .partition
            .blocks()
            .iter()
            .zip(&self.block_masses)
            .map(|(block, &mass)| {
                let integral: C64 = block.iter().map(|&j| f.get(j) * weights[j]).sum();
                integral / mass
            })
            .collect())
    }

    /// The block-constant function taking `values[b]` on block `b`.
    pub fn lift(&self, values: &[C64]) -> MeasurableFunction {
        let n = self.space().len();
        let lifted = (0..n).map(|i| values[self.partition.block_of(i)]).collect();
        MeasurableFunction::new(self.space().clone(), lifted).expect("finite block values")
    }

    pub fn apply(&self, f: &MeasurableFunction) -> Result<MeasurableFunction> {
        Ok(self.lift(&self.block_values(f)?))
    }

    /// `M_{ij} = μ_j / μ(B(i))` when `j` shares a block with `i`, else 0.
    pub fn operator(&self) -> WeightedOperator {
        let n = self.space().len();
        let weights = self.space().weights();
        let p = &self.partition;
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            let b = p.block_of(i);
            if p.block_of(j) == b {
                C64::new(weights[j] / self.block_masses[b], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        WeightedOperator::new(self.space().clone(), matrix).expect("square finite matrix")
    }
}

pub fn cond_exp(e: &ConditionalExpectation, f: &MeasurableFunction) -> Result<MeasurableFunction> {
    e.apply(f)
}

pub fn cond_exp_operator(e: &ConditionalExpectation) -> WeightedOperator {
    e.operator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::is_measurable;
    use crate::opalgebra::{hermitian_eig, relative_deviation, weighted_adjoint};

    fn r(s: &Arc<FiniteMeasureSpace>, v: &[f64]) -> MeasurableFunction {
        MeasurableFunction::from_real(s.clone(), v).unwrap()
    }

    #[test]
    fn cond_exp_examples() {
        // ∫ f = 4·1 + 0·3 = c·4
        let s = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let e = ConditionalExpectation::new(Partition::coarsest(s.clone()));
        assert_eq!(e.apply(&r(&s, &[4.0, 0.0])).unwrap(), r(&s, &[1.0, 1.0]));

        let s4 = FiniteMeasureSpace::new(vec![0.3, 1.0, 2.5, 9.0]).unwrap();
        let fine = ConditionalExpectation::new(Partition::finest(s4.clone()));
        let f = MeasurableFunction::new(
            s4.clone(),
            vec![
                C64::new(1.0, -2.0),
                C64::new(0.5, 0.0),
                C64::new(-3.0, 1.0),
                C64::new(0.0, 4.0),
            ],
        )
        .unwrap();
        assert_eq!(fine.apply(&f).unwrap(), f);

        let p = Partition::new(s4.clone(), vec![vec![0, 3], vec![1, 2]]).unwrap();
        let e = ConditionalExpectation::new(p.clone());
        let one = MeasurableFunction::one(s4.clone());
        let image = e.apply(&one).unwrap();
        assert!((&image - &one).max_abs() < 1e-15);

        let g = e.apply(&f).unwrap();
        assert!(is_measurable(&g, &p, 1e-12).unwrap());
        // defining identity on every block
        for b in 0..p.block_count() {
            let block = p.block_set(b);
            let lhs: C64 = block.iter().map(|i| f.get(i) * s4.weight(i)).sum();
            let rhs: C64 = block.iter().map(|i| g.get(i) * s4.weight(i)).sum();
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn space_mismatch() {
        let s = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let t = FiniteMeasureSpace::new(vec![1.0, 2.0]).unwrap();
        let e = ConditionalExpectation::new(Partition::coarsest(s));
        assert_eq!(e.apply(&r(&t, &[1.0, 1.0])).unwrap_err(), Error::SpaceMismatch);
    }

    #[test]
    fn operator_examples() {
        let s = FiniteMeasureSpace::new(vec![1.0, 1.0]).unwrap();
        let m = ConditionalExpectation::new(Partition::coarsest(s)).operator();
        assert!(m.matrix().iter().all(|z| (*z - C64::new(0.5, 0.0)).norm() < 1e-15));

        let s3 = FiniteMeasureSpace::new(vec![1.0, 2.0, 3.0]).unwrap();
        let m = ConditionalExpectation::new(Partition::finest(s3.clone())).operator();
        assert_eq!(m, WeightedOperator::identity(s3));

        let s = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let m = ConditionalExpectation::new(Partition::coarsest(s)).operator();
        for i in 0..2 {
            assert!((m.matrix()[(i, 0)].re - 0.25).abs() < 1e-15);
            assert!((m.matrix()[(i, 1)].re - 0.75).abs() < 1e-15);
        }
    }

    #[test]
    fn operator_agrees_with_apply_on_basis() {
        let s = FiniteMeasureSpace::new(vec![0.2, 1.0, 4.0, 2.0, 0.7]).unwrap();
        let p = Partition::new(s.clone(), vec![vec![0, 2], vec![1], vec![3, 4]]).unwrap();
        let e = ConditionalExpectation::new(p);
        let by_action = WeightedOperator::from_action(s, |f| e.apply(f).unwrap());
        assert!(relative_deviation(&by_action, &e.operator()) < 1e-15);
    }

    #[test]
    fn operator_is_self_adjoint_projection_of_rank_k() {
        let s = FiniteMeasureSpace::new(vec![0.5, 1.5, 2.0, 3.0, 0.1, 6.0]).unwrap();
        let p = Partition::new(s, vec![vec![0, 5], vec![1, 2, 3], vec![4]]).unwrap();
        let m = ConditionalExpectation::new(p).operator();
        assert!(relative_deviation(&weighted_adjoint(&m), &m) < 1e-15);
        assert!(relative_deviation(&(&m * &m), &m) < 1e-15);
        let eig = hermitian_eig(&m).unwrap();
        let ones = eig.values.iter().filter(|&&x| (x - 1.0).abs() < 1e-12).count();
        let zeros = eig.values.iter().filter(|&&x| x.abs() < 1e-12).count();
        assert_eq!((ones, zeros), (3, 3));
        assert!((m.trace().re - 3.0).abs() < 1e-13);
    }
}
