//! Projection-valued measures induced by a point map `φ: X → X`.
//!
//! `𝓔(S) = E^φ M_{χ_{φ⁻¹(S)}}`, where `E^φ` is the conditional expectation
//! onto functions constant on the fibers of `φ`. Because `χ_{φ⁻¹(S)}` is
//! itself fiber-constant, `𝓔(S)` is multiplication by that indicator on the
//! range of `E^φ`. On all of `L²(Σ)` the total mass `𝓔(X) = E^φ` is the
//! identity only when `φ` is injective, so the axioms are reported both on the
//! full space and on the fiber-measurable subspace.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::condexp::ConditionalExpectation;
use crate::error::{Error, Result};
use crate::measure::{is_measurable, FiniteMeasureSpace, IndexSet, MeasurableFunction, Partition, C64};
use crate::opalgebra::jacobi::svd;
use crate::opalgebra::WeightedOperator;
use crate::tolerance::SUPPORT_TOL;

/// `φ(x_i) = x_{images[i]}`. Every point has positive mass, so `μ∘φ⁻¹` is
/// automatically absolutely continuous with respect to `μ`.
#[derive(Debug, Clone)]
pub struct PointMap {
    space: Arc<FiniteMeasureSpace>,
    images: Vec<usize>,
}

impl PartialEq for PointMap {
    fn eq(&self, other: &Self) -> bool {
        crate::measure::same_space(&self.space, &other.space) && self.images == other.images
    }
}

impl PointMap {
    pub fn new(space: Arc<FiniteMeasureSpace>, images: Vec<usize>) -> Result<Self> {
        let n = space.len();
        if images.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: images.len(),
            });
        }
        if let Some((index, &image)) = images.iter().enumerate().find(|(_, &s)| s >= n) {
            return Err(Error::ImageOutOfRange { index, image });
        }
        Ok(Self { space, images })
    }

    pub fn identity(space: Arc<FiniteMeasureSpace>) -> Self {
        let images = (0..space.len()).collect();
        Self { space, images }
    }

    pub fn constant(space: Arc<FiniteMeasureSpace>, target: usize) -> Result<Self> {
        let images = vec![target; space.len()];
        Self::new(space, images)
    }

    pub fn space(&self) -> &Arc<FiniteMeasureSpace> {
        &self.space
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `φ⁻¹(S)`.
    pub fn preimage(&self, set: &IndexSet) -> IndexSet {
        (0..self.images.len())
            .filter(|&i| set.contains(self.images[i]))
            .collect()
    }

    /// `φ⁻¹({s})`.
    pub fn fiber(&self, s: usize) -> IndexSet {
        (0..self.images.len()).filter(|&i| self.images[i] == s).collect()
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.images.len()];
        self.images.iter().all(|&s| !std::mem::replace(&mut seen[s], true))
    }
}

/// The nonempty fibers of `φ`, ordered by image point.
pub fn fiber_partition(phi: &PointMap) -> Partition {
    let n = phi.space.len();
    let mut fibers = vec![Vec::new(); n];
    for (i, &s) in phi.images.iter().enumerate() {
        fibers[s].push(i);
    }
    let blocks = fibers.into_iter().filter(|f| !f.is_empty()).collect();
    Partition::new(phi.space.clone(), blocks).expect("fibers partition the space")
}

/// `h(x) = μ(φ⁻¹({x})) / μ({x})`.
pub fn pushforward_density(phi: &PointMap) -> MeasurableFunction {
    let weights = phi.space.weights();
    let mut mass = vec![0.0; weights.len()];
    for (i, &s) in phi.images.iter().enumerate() {
        mass[s] += weights[i];
    }
    let h: Vec<f64> = mass.iter().zip(weights).map(|(m, w)| m / w).collect();
    MeasurableFunction::from_real(phi.space.clone(), &h).expect("finite density")
}

/// `𝓔(S) = E^φ M_{χ_{φ⁻¹(S)}}`.
pub fn spectral_measure(phi: &PointMap, set: &IndexSet) -> WeightedOperator {
    let e = ConditionalExpectation::new(fiber_partition(phi)).operator();
    let chi = MeasurableFunction::indicator(phi.space.clone(), &phi.preimage(set));
    &e * &WeightedOperator::multiplication(&chi)
}

/// `𝓔({s})` for every point `s`; `𝓔(S)` is obtained by summation.
#[derive(Debug, Clone)]
pub struct SpectralMeasureTable {
    phi: PointMap,
    singletons: Vec<WeightedOperator>,
}

impl SpectralMeasureTable {
    pub fn new(phi: &PointMap) -> Self {
        let e = ConditionalExpectation::new(fiber_partition(phi)).operator();
        let singletons = (0..phi.space.len())
            .map(|s| {
                let chi = MeasurableFunction::indicator(phi.space.clone(), &phi.fiber(s));
                &e * &WeightedOperator::multiplication(&chi)
            })
            .collect();
        Self {
            phi: phi.clone(),
            singletons,
        }
    }

    pub fn phi(&self) -> &PointMap {
        &self.phi
    }

    pub fn singleton(&self, s: usize) -> &WeightedOperator {
        &self.singletons[s]
    }

    pub fn measure(&self, set: &IndexSet) -> WeightedOperator {
        set.iter()
            .fold(WeightedOperator::zero(self.phi.space.clone()), |acc, s| {
                &acc + &self.singletons[s]
            })
    }
}

/// Worst residual per axiom, each an operator norm on the chosen Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomReport {
    pub on_subspace: bool,
    /// `max ‖P² − P‖ + ‖P − P*‖` over the tested sets.
    pub projection: f64,
    /// `‖𝓔(∅)‖`.
    pub empty: f64,
    /// `‖𝓔(X) − I‖`.
    pub whole: f64,
    /// `max ‖𝓔(S₁ ∩ S₂) − 𝓔(S₁)𝓔(S₂)‖`.
    pub multiplicative: f64,
    /// `max ‖𝓔(S₁ ∪ S₂ ∪ …) − Σ 𝓔(S_i)‖` over disjoint families.
    pub additive: f64,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.projection
            .max(self.empty)
            .max(self.whole)
            .max(self.multiplicative)
            .max(self.additive)
    }

    /// Every axiom other than `𝓔(X) = I`.
    pub fn max_without_whole(&self) -> f64 {
        self.projection
            .max(self.empty)
            .max(self.multiplicative)
            .max(self.additive)
    }
}

/// Columns `χ_B √μ / √μ(B)`: the Euclidean image of the μ-orthonormal basis
/// `χ_B / √μ(B)` of fiber-measurable functions.
fn fiber_basis(phi: &PointMap) -> DMatrix<C64> {
    let partition = fiber_partition(phi);
    let weights = phi.space.weights();
    let masses = partition.block_masses();
    let mut q = DMatrix::zeros(weights.len(), partition.block_count());
    for (b, block) in partition.blocks().iter().enumerate() {
        for &i in block {
            q[(i, b)] = C64::new((weights[i] / masses[b]).sqrt(), 0.0);
        }
    }
    q
}

/// Matrix of `P_H A|_H` on the fiber-measurable subspace `H`, in an
/// orthonormal basis, so that Euclidean norms and adjoints apply.
pub fn compress(op: &WeightedOperator, phi: &PointMap) -> DMatrix<C64> {
    let q = fiber_basis(phi);
    q.adjoint() * op.to_euclidean() * q
}

fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    svd(m).sigma_max()
}

fn random_subset<R: Rng + ?Sized>(n: usize, rng: &mut R) -> IndexSet {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

/// Number of random subsets tested in addition to all singletons, `∅` and `X`.
pub const RANDOM_SETS: usize = 8;

/// Evaluates the four spectral-measure axioms. With `on_subspace` every
/// operator is compressed to `L²(φ⁻¹(Σ))`; otherwise it acts on `L²(Σ)`.
pub fn check_spectral_axioms<R: Rng + ?Sized>(phi: &PointMap, on_subspace: bool, rng: &mut R) -> AxiomReport {
    let n = phi.space.len();
    let table = SpectralMeasureTable::new(phi);
    let frame = |op: &WeightedOperator| -> DMatrix<C64> {
        if on_subspace {
            compress(op, phi)
        } else {
            op.to_euclidean()
        }
    };
    let measure = |set: &IndexSet| frame(&table.measure(set));

    let mut sets: Vec<IndexSet> = (0..n).map(|s| std::iter::once(s).collect()).collect();
    sets.push(IndexSet::empty());
    sets.push(IndexSet::full(n));
    let random: Vec<IndexSet> = (0..RANDOM_SETS).map(|_| random_subset(n, rng)).collect();
    sets.extend(random.iter().cloned());

    let mut projection: f64 = 0.0;
    for set in &sets {
        let p = measure(set);
        projection = projection.max(spectral_norm(&(&p * &p - &p)) + spectral_norm(&(&p - p.adjoint())));
    }

    let empty = spectral_norm(&measure(&IndexSet::empty()));
    let whole_op = measure(&IndexSet::full(n));
    let identity = DMatrix::<C64>::identity(whole_op.nrows(), whole_op.ncols());
    let whole = spectral_norm(&(whole_op - identity));

    let mut multiplicative: f64 = 0.0;
    let mut pairs: Vec<(&IndexSet, &IndexSet)> = Vec::new();
    for a in &random {
        for b in &random {
            pairs.push((a, b));
        }
    }
    for s in 0..n.min(4) {
        pairs.push((&sets[s], &sets[(s + 1) % n]));
        pairs.push((&sets[s], &sets[s]));
    }
    for (a, b) in pairs {
        let lhs = measure(&a.intersection(b));
        let rhs = measure(a) * measure(b);
        multiplicative = multiplicative.max(spectral_norm(&(lhs - rhs)));
    }

    // a random set split into three disjoint parts, and X split into points
    let mut additive: f64 = 0.0;
    for set in &random {
        let mut parts = [IndexSet::empty(), IndexSet::empty(), IndexSet::empty()];
        for s in set.iter() {
            parts[rng.gen_range(0..3)].insert(s);
        }
        let sum = parts.iter().fold(DMatrix::zeros(0, 0), |acc: DMatrix<C64>, part| {
            let m = measure(part);
            if acc.is_empty() {
                m
            } else {
                acc + m
            }
        });
        additive = additive.max(spectral_norm(&(measure(set) - sum)));
    }
    let by_points = (0..n)
        .map(|s| frame(table.singleton(s)))
        .reduce(|a, b| a + b)
        .expect("nonempty space");
    additive = additive.max(spectral_norm(&(measure(&IndexSet::full(n)) - by_points)));

    AxiomReport {
        on_subspace,
        projection,
        empty,
        whole,
        multiplicative,
        additive,
    }
}

/// `v(s)` = value of `u` on the fiber of `s`, 0 where the fiber is empty.
pub fn pull_back_values(phi: &PointMap, u: &MeasurableFunction) -> Result<Vec<C64>> {
    if !is_measurable(u, &fiber_partition(phi), SUPPORT_TOL)? {
        return Err(Error::NotFiberMeasurable);
    }
    let mut v = vec![C64::new(0.0, 0.0); phi.space.len()];
    let mut filled = vec![false; phi.space.len()];
    for (i, &s) in phi.images.iter().enumerate() {
        if !filled[s] {
            v[s] = u.get(i);
            filled[s] = true;
        }
    }
    Ok(v)
}

/// `Σ_s v(s) 𝓔({s})` with `v ∘ φ = u`; equals `E^φ M_u`.
pub fn reconstruct_from_measure(phi: &PointMap, u: &MeasurableFunction) -> Result<WeightedOperator> {
    let v = pull_back_values(phi, u)?;
    let table = SpectralMeasureTable::new(phi);
    Ok(v.iter()
        .enumerate()
        .fold(WeightedOperator::zero(phi.space.clone()), |acc, (s, &vs)| {
            &acc + &table.singleton(s).scale(vs)
        }))
}

/// `E^φ M_u`, assembled directly.
pub fn fiber_multiplier(phi: &PointMap, u: &MeasurableFunction) -> WeightedOperator {
    let e = ConditionalExpectation::new(fiber_partition(phi)).operator();
    &e * &WeightedOperator::multiplication(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalgebra::relative_deviation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example() -> (Arc<FiniteMeasureSpace>, PointMap) {
        let s = FiniteMeasureSpace::new(vec![1.0, 1.0, 2.0]).unwrap();
        let phi = PointMap::new(s.clone(), vec![0, 0, 2]).unwrap();
        (s, phi)
    }

    #[test]
    fn point_map_validation() {
        let s = FiniteMeasureSpace::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(
            PointMap::new(s.clone(), vec![0, 2]).unwrap_err(),
            Error::ImageOutOfRange { index: 1, image: 2 }
        );
        assert!(PointMap::new(s.clone(), vec![0]).is_err());
        assert!(PointMap::identity(s.clone()).is_injective());
        assert!(!PointMap::constant(s, 1).unwrap().is_injective());
    }

    #[test]
    fn fiber_partition_examples() {
        let s = FiniteMeasureSpace::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            fiber_partition(&PointMap::identity(s.clone())),
            Partition::finest(s.clone())
        );
        assert_eq!(
            fiber_partition(&PointMap::constant(s.clone(), 1).unwrap()),
            Partition::coarsest(s)
        );
        let (_, phi) = example();
        assert_eq!(fiber_partition(&phi).blocks(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn pushforward_examples() {
        let s = FiniteMeasureSpace::new(vec![0.5, 2.0, 3.0]).unwrap();
        let h = pushforward_density(&PointMap::identity(s.clone()));
        assert_eq!(h, MeasurableFunction::one(s));

        let (s, phi) = example();
        assert_eq!(
            pushforward_density(&phi),
            MeasurableFunction::from_real(s, &[2.0, 0.0, 1.0]).unwrap()
        );

        let s = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let h = pushforward_density(&PointMap::constant(s.clone(), 0).unwrap());
        assert_eq!(h, MeasurableFunction::from_real(s, &[4.0, 0.0]).unwrap());
    }

    #[test]
    fn spectral_measure_examples() {
        let (s, phi) = example();
        let zero = spectral_measure(&phi, &IndexSet::empty());
        assert_eq!(zero, WeightedOperator::zero(s.clone()));

        let e = ConditionalExpectation::new(fiber_partition(&phi)).operator();
        assert!(relative_deviation(&spectral_measure(&phi, &IndexSet::full(3)), &e) < 1e-15);

        let p = spectral_measure(&phi, &[0].into_iter().collect());
        let want = [[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]];
        for (i, row) in want.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!((p.matrix()[(i, j)] - C64::new(v, 0.0)).norm() < 1e-15);
            }
        }
        assert!(relative_deviation(&(&p * &p), &p) < 1e-15);
        assert!(relative_deviation(&p.adjoint(), &p) < 1e-15);

        let table = SpectralMeasureTable::new(&phi);
        let set: IndexSet = [0, 1].into_iter().collect();
        assert!(relative_deviation(&table.measure(&set), &spectral_measure(&phi, &set)) < 1e-15);
    }

    #[test]
    fn axiom_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = FiniteMeasureSpace::new(vec![1.0, 2.0, 0.5, 4.0]).unwrap();
        let report = check_spectral_axioms(&PointMap::identity(s), false, &mut rng);
        assert!(report.max_residual() < 1e-12, "{report:?}");

        let (_, phi) = example();
        let report = check_spectral_axioms(&phi, true, &mut rng);
        assert!(report.max_residual() < 1e-12, "{report:?}");

        let report = check_spectral_axioms(&phi, false, &mut rng);
        assert!((report.whole - 1.0).abs() < 1e-12, "{report:?}");
        assert!(report.max_without_whole() < 1e-12, "{report:?}");
    }

    #[test]
    fn reconstruction_examples() {
        let (s, phi) = example();
        let e = ConditionalExpectation::new(fiber_partition(&phi)).operator();
        let one = MeasurableFunction::one(s.clone());
        assert!(relative_deviation(&reconstruct_from_measure(&phi, &one).unwrap(), &e) < 1e-15);

        let zero = MeasurableFunction::zero(s.clone());
        assert_eq!(
            reconstruct_from_measure(&phi, &zero).unwrap(),
            WeightedOperator::zero(s.clone())
        );

        let u = MeasurableFunction::from_real(s.clone(), &[3.0, 3.0, 7.0]).unwrap();
        let table = SpectralMeasureTable::new(&phi);
        let by_hand = &table.singleton(0).scale(C64::new(3.0, 0.0)) + &table.singleton(2).scale(C64::new(7.0, 0.0));
        let got = reconstruct_from_measure(&phi, &u).unwrap();
        assert!(relative_deviation(&got, &by_hand) < 1e-15);
        assert!(relative_deviation(&got, &fiber_multiplier(&phi, &u)) < 1e-15);

        let bad = MeasurableFunction::from_real(s, &[3.0, 4.0, 7.0]).unwrap();
        assert_eq!(
            reconstruct_from_measure(&phi, &bad).unwrap_err(),
            Error::NotFiberMeasurable
        );
    }
}
