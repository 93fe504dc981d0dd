//! Spectral structure of `E M_u`, `f ↦ E(u f)`.
//!
//! `E M_u` is normal exactly when `u` is constant on blocks. In that case
//! `E M_u = M_u E`, its powers and adjoint powers are `M_{u^m ū^n} E`, and a
//! continuous function of it is `M_{f(u)} E`. Its spectrum is the set of block
//! values of `E(u)` together with 0.
//!
//! The *-polynomial and continuous calculus follow the displayed formulas
//! literally: the constant term acts through `E`, not through the identity.
//! The difference is `α_0 (I − E)` and the certification hooks account for it
//! explicitly.

pub mod measure;

use crate::condexp::ConditionalExpectation;
use crate::error::{Error, Result};
use crate::measure::{is_measurable, IndexSet, MeasurableFunction, Partition, C64};
use crate::opalgebra::{commutator_norm, general_eigenvalues, operator_norm, WeightedOperator};
use crate::tolerance::SUPPORT_TOL;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `E M_u`.
pub fn emu_operator(u: &MeasurableFunction, partition: &Partition) -> WeightedOperator {
    let e = ConditionalExpectation::new(partition.clone()).operator();
    &e * &WeightedOperator::multiplication(u)
}

/// Normality of `E M_u`, decided by measurability of `u`.
pub fn is_normal_emu(u: &MeasurableFunction, partition: &Partition) -> Result<bool> {
    is_measurable(u, partition, SUPPORT_TOL)
}

/// `‖T T* − T* T‖ / (1 + ‖T‖²)` for `T = E M_u`.
pub fn normality_residual(u: &MeasurableFunction, partition: &Partition) -> f64 {
    let t = emu_operator(u, partition);
    let norm = operator_norm(&t);
    commutator_norm(&t) / (1.0 + norm * norm)
}

/// Merges values closer than `tol` (greedy, in input order) and returns one
/// representative per group, the mean of its members.
pub fn group_values(values: &[C64], tol: f64) -> Vec<C64> {
    let mut groups: Vec<(C64, Vec<C64>)> = Vec::new();
    for &z in values {
        match groups.iter_mut().find(|(anchor, _)| (z - *anchor).norm() <= tol) {
            Some((_, members)) => members.push(z),
            None => groups.push((z, vec![z])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let count = members.len() as f64;
            members.into_iter().sum::<C64>() / count
        })
        .collect()
}

fn sort_complex(values: &mut [C64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Grouping threshold for values of `u`: `tol · (1 + max|u|)`.
pub fn grouping_threshold(u: &MeasurableFunction, tol: f64) -> f64 {
    tol * (1.0 + u.max_abs())
}

/// Block values of `E(u)` with 0 adjoined, merged at the grouping threshold,
/// sorted by real then imaginary part.
pub fn spectrum_emu(u: &MeasurableFunction, partition: &Partition, tol: f64) -> Result<Vec<C64>> {
    let cond = ConditionalExpectation::new(partition.clone());
    let mut values = cond.block_values(u)?;
    values.push(ZERO);
    let threshold = grouping_threshold(u, tol);
    let mut grouped = group_values(&values, threshold);
    // the adjoined zero stays exactly zero
    for z in grouped.iter_mut() {
        if z.norm() <= threshold {
            *z = ZERO;
        }
    }
    sort_complex(&mut grouped);
    Ok(grouped)
}

/// Eigenvalues of the matrix of `E M_u`, merged at the grouping threshold.
pub fn numerical_spectrum(u: &MeasurableFunction, partition: &Partition, tol: f64) -> Vec<C64> {
    let eig = general_eigenvalues(&emu_operator(u, partition));
    let mut grouped = group_values(&eig, grouping_threshold(u, tol));
    sort_complex(&mut grouped);
    grouped
}

/// `spectrum_emu` without the adjoined 0 when 0 is not an eigenvalue of the
/// matrix, which happens only for the finest partition with `u` nowhere zero.
pub fn expected_eigenvalues(u: &MeasurableFunction, partition: &Partition, tol: f64) -> Result<Vec<C64>> {
    let spectrum = spectrum_emu(u, partition, tol)?;
    let threshold = grouping_threshold(u, tol);
    let cond = ConditionalExpectation::new(partition.clone());
    let zero_block = cond.block_values(u)?.iter().any(|z| z.norm() <= threshold);
    if partition.block_count() == u.len() && !zero_block {
        return Ok(spectrum.into_iter().filter(|z| *z != ZERO).collect());
    }
    Ok(spectrum)
}

/// Hausdorff distance between two finite sets of complex numbers; infinite
/// when exactly one of them is empty.
pub fn set_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { f64::INFINITY };
    }
    let one_way = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// One term `α z^m t^n` of a polynomial in `z` and `t = z̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarTerm {
    pub coeff: C64,
    /// Power of `z` (of `T`).
    pub z_power: u32,
    /// Power of `t` (of `T*`).
    pub conj_power: u32,
}

/// `p(z, t) = Σ α_{n,m} z^m t^n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StarPolynomial {
    pub terms: Vec<StarTerm>,
}

impl StarPolynomial {
    pub fn new(terms: Vec<StarTerm>) -> Self {
        Self { terms }
    }

    pub fn term(mut self, coeff: C64, z_power: u32, conj_power: u32) -> Self {
        self.terms.push(StarTerm {
            coeff,
            z_power,
            conj_power,
        });
        self
    }

    /// `p(z, z̄)`.
    pub fn eval(&self, z: C64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coeff * z.powu(t.z_power) * z.conj().powu(t.conj_power))
            .sum()
    }

    pub fn constant_term(&self) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.z_power == 0 && t.conj_power == 0)
            .map(|t| t.coeff)
            .sum()
    }
}

fn require_normal(u: &MeasurableFunction, partition: &Partition) -> Result<()> {
    if !is_normal_emu(u, partition)? {
        return Err(Error::NotNormal);
    }
    Ok(())
}

/// `p(T, T*) = M_{p(u, ū)} E` for normal `T = E M_u`.
pub fn star_poly_calc(u: &MeasurableFunction, partition: &Partition, p: &StarPolynomial) -> Result<WeightedOperator> {
    cont_func_calc_emu(u, partition, |z| p.eval(z))
}

/// `Σ α T^m (T*)^n` assembled by matrix products, with `T^0 = I`.
pub fn star_poly_direct(u: &MeasurableFunction, partition: &Partition, p: &StarPolynomial) -> WeightedOperator {
    let t = emu_operator(u, partition);
    let adj = t.adjoint();
    let mut out = WeightedOperator::zero(u.space().clone());
    for term in &p.terms {
        let product = &t.pow(term.z_power) * &adj.pow(term.conj_power);
        out = &out + &product.scale(term.coeff);
    }
    out
}

/// `f(T) = M_{f(u)} E` for normal `T = E M_u`.
pub fn cont_func_calc_emu(
    u: &MeasurableFunction,
    partition: &Partition,
    f: impl Fn(C64) -> C64,
) -> Result<WeightedOperator> {
    require_normal(u, partition)?;
    let e = ConditionalExpectation::new(partition.clone()).operator();
    Ok(&WeightedOperator::multiplication(&u.map(f)) * &e)
}

/// `EM_u = Σ λ_n P_n` with distinct eigenvalues and mutually orthogonal
/// projections. A zero eigenvalue appears only when the kernel is nontrivial.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<C64>,
    pub projections: Vec<WeightedOperator>,
    /// `A_n = {x : u(x) = λ_n}` for the nonzero eigenvalues; for zero, the
    /// points where `u` vanishes.
    pub level_sets: Vec<IndexSet>,
}

impl SpectralDecomp {
    pub fn reconstruct(&self) -> Option<WeightedOperator> {
        let first = self.projections.first()?;
        let mut out = WeightedOperator::zero(first.space().clone());
        for (lambda, p) in self.eigenvalues.iter().zip(&self.projections) {
            out = &out + &p.scale(*lambda);
        }
        Some(out)
    }
}

/// Eigenvalues are the distinct nonzero block values of `u` (merged at the
/// grouping threshold), with `P_n f = χ_{A_n} E(f)`; the zero eigenvalue gets
/// `I − Σ P_n`, the projection onto `ker E M_u`.
pub fn spectral_decomposition(u: &MeasurableFunction, partition: &Partition, tol: f64) -> Result<SpectralDecomp> {
    require_normal(u, partition)?;
    let space = u.space().clone();
    let cond = ConditionalExpectation::new(partition.clone());
    let e = cond.operator();
    let threshold = grouping_threshold(u, tol);
    let block_values = cond.block_values(u)?;

    // group block values, remembering which blocks fall in each group
    let mut groups: Vec<(C64, Vec<usize>)> = Vec::new();
    for (b, &z) in block_values.iter().enumerate() {
        if z.norm() <= threshold {
            continue;
        }
        match groups.iter_mut().find(|(anchor, _)| (z - *anchor).norm() <= threshold) {
            Some((_, blocks)) => blocks.push(b),
            None => groups.push((z, vec![b])),
        }
    }

    let mut eigenvalues = Vec::new();
    let mut projections = Vec::new();
    let mut level_sets = Vec::new();
    let mut range_sum = WeightedOperator::zero(space.clone());
    for (_, blocks) in &groups {
        let lambda = blocks.iter().map(|&b| block_values[b]).sum::<C64>() / blocks.len() as f64;
        let set = partition.union_of_blocks(|b| blocks.contains(&b));
        let chi = MeasurableFunction::indicator(space.clone(), &set);
        let p = &WeightedOperator::multiplication(&chi) * &e;
        range_sum = &range_sum + &p;
        eigenvalues.push(lambda);
        projections.push(p);
        level_sets.push(set);
    }

    let kernel = &WeightedOperator::identity(space.clone()) - &range_sum;
    // each block in a nonzero group contributes one dimension to the range
    let range_rank: usize = groups.iter().map(|(_, b)| b.len()).sum();
    if range_rank < space.len() {
        let zero_set = partition.union_of_blocks(|b| block_values[b].norm() <= threshold);
        eigenvalues.push(ZERO);
        projections.push(kernel);
        level_sets.push(zero_set);
    }

    Ok(SpectralDecomp {
        eigenvalues,
        projections,
        level_sets,
    })
}
