//! Finite measure spaces, partitions (sub-sigma-algebras), point functions and
//! index sets.
//!
//! Every space is a finite set of points with strictly positive masses, so
//! "almost everywhere" is "everywhere" and an essential supremum is a max.
//! On such a space every sub-sigma-algebra is generated by a partition of the
//! points; its blocks are the atoms. There is never a non-atomic part.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// `n` weighted points, optionally labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasureSpace {
    weights: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FiniteMeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Arc<Self>> {
        if weights.is_empty() {
            return Err(Error::EmptySpace);
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::NonpositiveWeight { index, value });
        }
        Ok(Arc::new(Self { weights, labels: None }))
    }

    pub fn with_labels(weights: Vec<f64>, labels: Vec<String>) -> Result<Arc<Self>> {
        let space = Self::new(weights)?;
        if labels.len() != space.len() {
            return Err(Error::InvalidLabels(format!(
                "{} labels for {} points",
                labels.len(),
                space.len()
            )));
        }
        let distinct: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidLabels("labels are not distinct".into()));
        }
        Ok(Arc::new(Self {
            weights: space.weights.clone(),
            labels: Some(labels),
        }))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of a set of points, summed in index order.
    pub fn mass_of(&self, set: &IndexSet) -> f64 {
        set.iter().map(|i| self.weights[i]).sum()
    }
}

/// True when both handles describe the same space.
pub fn same_space(a: &Arc<FiniteMeasureSpace>, b: &Arc<FiniteMeasureSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A subset of `{0, .., n-1}`, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(BTreeSet<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full(n: usize) -> Self {
        (0..n).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn insert(&mut self, i: usize) -> bool {
        self.0.insert(i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.0.intersection(&other.0).copied().collect()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.0.union(&other.0).copied().collect()
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.0.difference(&other.0).copied().collect()
    }

    pub fn complement(&self, n: usize) -> Self {
        (0..n).filter(|i| !self.contains(*i)).collect()
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A partition of the points into nonempty blocks: the atoms of a
/// sub-sigma-algebra.
#[derive(Debug, Clone)]
pub struct Partition {
    space: Arc<FiniteMeasureSpace>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.blocks == other.blocks
    }
}

impl Partition {
    pub fn new(space: Arc<FiniteMeasureSpace>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.len();
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::NotAPartition(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::NotAPartition(format!(
                        "block {b} contains point {i}, but the space has {n} points"
                    )));
                }
                if block_of[i] != usize::MAX {
                    let other = block_of[i];
                    return Err(Error::NotAPartition(if other == b {
                        format!("block {b} lists point {i} twice")
                    } else {
                        format!("blocks {other} and {b} overlap at point {i}")
                    }));
                }
                block_of[i] = b;
            }
        }
        let missing: Vec<usize> = (0..n).filter(|&i| block_of[i] == usize::MAX).collect();
        if !missing.is_empty() {
            return Err(Error::NotAPartition(format!(
                "points {missing:?} are not covered by any block"
            )));
        }
        Ok(Self {
            space,
            blocks,
            block_of,
        })
    }

    /// All singletons: the full sigma-algebra.
    pub fn finest(space: Arc<FiniteMeasureSpace>) -> Self {
        let blocks = (0..space.len()).map(|i| vec![i]).collect();
        Self::new(space, blocks).expect("singletons partition every space")
    }

    /// One block: the trivial sigma-algebra.
    pub fn coarsest(space: Arc<FiniteMeasureSpace>) -> Self {
        let blocks = vec![(0..space.len()).collect()];
        Self::new(space, blocks).expect("one block partitions every space")
    }

    pub fn space(&self) -> &Arc<FiniteMeasureSpace> {
        &self.space
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing point `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn block_set(&self, b: usize) -> IndexSet {
        self.blocks[b].iter().copied().collect()
    }

    pub fn block_masses(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|block| block.iter().map(|&i| self.space.weight(i)).sum())
            .collect()
    }

    /// True when every block of `self` sits inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        same_space(&self.space, &coarser.space)
            && self.blocks.iter().all(|block| {
                let target = coarser.block_of(block[0]);
                block.iter().all(|&i| coarser.block_of(i) == target)
            })
    }

    /// Union of the blocks selected by `pick`.
    pub fn union_of_blocks(&self, pick: impl Fn(usize) -> bool) -> IndexSet {
        (0..self.blocks.len())
            .filter(|&b| pick(b))
            .flat_map(|b| self.blocks[b].iter().copied())
            .collect()
    }
}

/// A complex-valued function on the points of a space.
#[derive(Debug, Clone)]
pub struct MeasurableFunction {
    space: Arc<FiniteMeasureSpace>,
    values: Vec<C64>,
}

impl PartialEq for MeasurableFunction {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.values == other.values
    }
}

impl MeasurableFunction {
    pub fn new(space: Arc<FiniteMeasureSpace>, values: Vec<C64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::LengthMismatch {
                expected: space.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { space, values })
    }

    pub fn from_real(space: Arc<FiniteMeasureSpace>, values: &[f64]) -> Result<Self> {
        Self::new(space, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn constant(space: Arc<FiniteMeasureSpace>, c: C64) -> Self {
        let values = vec![c; space.len()];
        Self { space, values }
    }

    pub fn zero(space: Arc<FiniteMeasureSpace>) -> Self {
        Self::constant(space, C64::new(0.0, 0.0))
    }

    pub fn one(space: Arc<FiniteMeasureSpace>) -> Self {
        Self::constant(space, C64::new(1.0, 0.0))
    }

    /// The characteristic function of `set`.
    pub fn indicator(space: Arc<FiniteMeasureSpace>, set: &IndexSet) -> Self {
        let values = (0..space.len())
            .map(|i| C64::new(if set.contains(i) { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Self { space, values }
    }

    pub fn space(&self) -> &Arc<FiniteMeasureSpace> {
        &self.space
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> C64 {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert!(
            same_space(&self.space, &other.space),
            "pointwise operation on functions from different spaces"
        );
        Self {
            space: self.space.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// `|f|^2` as a real-valued function.
    pub fn abs_sq(&self) -> Self {
        self.map(|z| C64::new(z.norm_sqr(), 0.0))
    }

    pub fn abs_pow(&self, p: f64) -> Self {
        self.map(|z| C64::new(z.norm().powf(p), 0.0))
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|z| z * c)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Real parts (for functions known to be real).
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    /// Weighted inner product `sum f_i conj(g_i) mu_i`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert!(same_space(&self.space, &other.space));
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.space.weights())
            .map(|((&a, &b), &m)| a * b.conj() * m)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }
}

impl Add for &MeasurableFunction {
    type Output = MeasurableFunction;
    fn add(self, rhs: Self) -> MeasurableFunction {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &MeasurableFunction {
    type Output = MeasurableFunction;
    fn sub(self, rhs: Self) -> MeasurableFunction {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &MeasurableFunction {
    type Output = MeasurableFunction;
    fn mul(self, rhs: Self) -> MeasurableFunction {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &MeasurableFunction {
    type Output = MeasurableFunction;
    fn neg(self) -> MeasurableFunction {
        self.map(|z| -z)
    }
}

/// `{i : |f_i| > tol * max_j |f_j|}`; empty for the zero function.
pub fn support(f: &MeasurableFunction, tol: f64) -> IndexSet {
    let scale = f.max_abs();
    if scale == 0.0 {
        return IndexSet::empty();
    }
    let threshold = tol * scale;
    (0..f.len()).filter(|&i| f.get(i).norm() > threshold).collect()
}

/// True when `f` is constant on every block of `partition`, up to
/// `tol * (1 + max|f|)`.
pub fn is_measurable(f: &MeasurableFunction, partition: &Partition, tol: f64) -> Result<bool> {
    if !same_space(f.space(), partition.space()) {
        return Err(Error::SpaceMismatch);
    }
    let threshold = tol * (1.0 + f.max_abs());
    Ok(partition.blocks().iter().all(|block| {
        let anchor = f.get(block[0]);
        block.iter().all(|&i| (f.get(i) - anchor).norm() <= threshold)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn make_space_examples() {
        let one = FiniteMeasureSpace::new(vec![1.0]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.total_mass(), 1.0);

        let two = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(two.total_mass(), 4.0);

        assert_eq!(
            FiniteMeasureSpace::new(vec![1.0, -1.0]).unwrap_err(),
            Error::NonpositiveWeight { index: 1, value: -1.0 }
        );
        assert_eq!(FiniteMeasureSpace::new(vec![]).unwrap_err(), Error::EmptySpace);
        assert!(FiniteMeasureSpace::new(vec![0.0]).is_err());
        assert!(FiniteMeasureSpace::new(vec![f64::NAN]).is_err());
        assert!(FiniteMeasureSpace::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn labels_must_be_distinct_and_complete() {
        assert!(FiniteMeasureSpace::with_labels(vec![1.0, 2.0], vec!["a".into(), "b".into()]).is_ok());
        assert!(FiniteMeasureSpace::with_labels(vec![1.0, 2.0], vec!["a".into(), "a".into()]).is_err());
        assert!(FiniteMeasureSpace::with_labels(vec![1.0, 2.0], vec!["a".into()]).is_err());
    }

    #[test]
    fn make_partition_examples() {
        let s4 = FiniteMeasureSpace::new(vec![1.0; 4]).unwrap();
        let p = Partition::new(s4.clone(), vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(p.block_count(), 2);
        assert_eq!(p.block_of(3), 1);

        let s2 = FiniteMeasureSpace::new(vec![1.0; 2]).unwrap();
        let finest = Partition::new(s2.clone(), vec![vec![0], vec![1]]).unwrap();
        assert_eq!(finest, Partition::finest(s2));

        let s3 = FiniteMeasureSpace::new(vec![1.0; 3]).unwrap();
        let err = Partition::new(s3.clone(), vec![vec![0, 1], vec![1, 2]]).unwrap_err();
        assert_eq!(err, Error::NotAPartition("blocks 0 and 1 overlap at point 1".into()));
        assert!(matches!(
            Partition::new(s3.clone(), vec![vec![0, 1]]),
            Err(Error::NotAPartition(_))
        ));
        assert!(matches!(
            Partition::new(s3.clone(), vec![vec![0, 1, 2], vec![]]),
            Err(Error::NotAPartition(_))
        ));
        assert!(matches!(
            Partition::new(s3, vec![vec![0, 1, 5], vec![2]]),
            Err(Error::NotAPartition(_))
        ));
    }

    #[test]
    fn block_masses_sum_to_total() {
        let s = FiniteMeasureSpace::new(vec![0.5, 1.5, 2.0, 4.0, 0.25]).unwrap();
        let p = Partition::new(s.clone(), vec![vec![4, 0], vec![2], vec![1, 3]]).unwrap();
        let sum: f64 = p.block_masses().iter().sum();
        assert!((sum - s.total_mass()).abs() < 1e-15);
    }

    #[test]
    fn support_examples() {
        let s3 = FiniteMeasureSpace::new(vec![1.0; 3]).unwrap();
        let zero = MeasurableFunction::zero(s3);
        assert!(support(&zero, 0.0).is_empty());
        assert!(support(&zero, 0.5).is_empty());

        let s2 = FiniteMeasureSpace::new(vec![1.0; 2]).unwrap();
        let f = MeasurableFunction::from_real(s2.clone(), &[2.0, 0.0]).unwrap();
        assert_eq!(support(&f, 1e-10).to_vec(), vec![0]);

        let g = MeasurableFunction::from_real(s2, &[1.0, 1e-16]).unwrap();
        assert_eq!(support(&g, 1e-10).to_vec(), vec![0]);
        // exact set semantics at tol = 0
        assert_eq!(support(&g, 0.0).to_vec(), vec![0, 1]);
    }

    #[test]
    fn measurability_examples() {
        let s4 = FiniteMeasureSpace::new(vec![1.0; 4]).unwrap();
        let p = Partition::new(s4.clone(), vec![vec![0, 1], vec![2, 3]]).unwrap();
        let f = MeasurableFunction::from_real(s4.clone(), &[5.0, 5.0, 7.0, 7.0]).unwrap();
        assert!(is_measurable(&f, &p, 1e-10).unwrap());
        let g = MeasurableFunction::from_real(s4.clone(), &[5.0, 6.0, 7.0, 7.0]).unwrap();
        assert!(!is_measurable(&g, &p, 1e-10).unwrap());
        assert!(is_measurable(&g, &Partition::finest(s4), 1e-10).unwrap());

        let other = FiniteMeasureSpace::new(vec![2.0; 4]).unwrap();
        let h = MeasurableFunction::from_real(other, &[1.0; 4]).unwrap();
        assert_eq!(is_measurable(&h, &p, 1e-10), Err(Error::SpaceMismatch));
    }

    #[test]
    fn function_validation() {
        let s2 = FiniteMeasureSpace::new(vec![1.0; 2]).unwrap();
        assert_eq!(
            MeasurableFunction::new(s2.clone(), vec![c(1.0)]).unwrap_err(),
            Error::LengthMismatch { expected: 2, found: 1 }
        );
        assert_eq!(
            MeasurableFunction::new(s2, vec![c(1.0), C64::new(0.0, f64::NAN)]).unwrap_err(),
            Error::NonFinite { index: 1 }
        );
    }

    #[test]
    fn refinement() {
        let s = FiniteMeasureSpace::new(vec![1.0; 4]).unwrap();
        let coarse = Partition::new(s.clone(), vec![vec![0, 1], vec![2, 3]]).unwrap();
        let fine = Partition::new(s.clone(), vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(Partition::finest(s.clone()).refines(&Partition::coarsest(s)));
    }
}
