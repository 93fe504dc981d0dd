//! Weighted conditional expectation operators `T = M_w E M_u`, acting as
//! `f ↦ w · E(u f)`, and their closed-form decompositions.
//!
//! Everything here is assembled from multiplication operators, the averaging
//! matrix `E`, and the block-constant functions `E(|u|²)` and `E(|w|²)`.
//! Nothing in this module calls an eigensolver; the oracles live in
//! [`crate::opalgebra`].
//!
//! Quotients such as `E(|w|²)/E(|u|²)` are only formed on the support they are
//! multiplied by (`S`, `G` or `S ∩ G`) and are zero elsewhere. Supports are
//! resolved per block, so they are always unions of blocks.

use std::sync::Arc;

use crate::condexp::ConditionalExpectation;
use crate::error::{Error, Result};
use crate::measure::{
    is_measurable, same_space, support, FiniteMeasureSpace, IndexSet, MeasurableFunction, Partition, C64,
};
use crate::opalgebra::{operator_norm, WeightedOperator};
use crate::tolerance::SUPPORT_TOL;

#[derive(Debug, Clone)]
pub struct WceInstance {
    cond: ConditionalExpectation,
    u: MeasurableFunction,
    w: MeasurableFunction,
    eu2_blocks: Vec<f64>,
    ew2_blocks: Vec<f64>,
    in_s: Vec<bool>,
    in_g: Vec<bool>,
}

impl PartialEq for WceInstance {
    fn eq(&self, other: &Self) -> bool {
        self.cond.partition() == other.cond.partition() && self.u == other.u && self.w == other.w
    }
}

fn block_support(values: &[f64], tol: f64) -> Vec<bool> {
    let scale = values.iter().fold(0.0, |m: f64, x| m.max(*x));
    values.iter().map(|&x| scale > 0.0 && x > tol * scale).collect()
}

impl WceInstance {
    pub fn new(partition: Partition, u: MeasurableFunction, w: MeasurableFunction) -> Result<Self> {
        Self::with_support_tol(partition, u, w, SUPPORT_TOL)
    }

    pub fn with_support_tol(
        partition: Partition,
        u: MeasurableFunction,
        w: MeasurableFunction,
        tol: f64,
    ) -> Result<Self> {
        if !same_space(partition.space(), u.space()) || !same_space(partition.space(), w.space()) {
            return Err(Error::SpaceMismatch);
        }
        let cond = ConditionalExpectation::new(partition);
        let eu2_blocks: Vec<f64> = cond.block_values(&u.abs_sq())?.iter().map(|z| z.re).collect();
        let ew2_blocks: Vec<f64> = cond.block_values(&w.abs_sq())?.iter().map(|z| z.re).collect();
        let in_s = block_support(&eu2_blocks, tol);
        let in_g = block_support(&ew2_blocks, tol);
        Ok(Self {
            cond,
            u,
            w,
            eu2_blocks,
            ew2_blocks,
            in_s,
            in_g,
        })
    }

    pub fn space(&self) -> &Arc<FiniteMeasureSpace> {
        self.cond.space()
    }

    pub fn partition(&self) -> &Partition {
        self.cond.partition()
    }

    pub fn cond_exp(&self) -> &ConditionalExpectation {
        &self.cond
    }

    pub fn u(&self) -> &MeasurableFunction {
        &self.u
    }

    pub fn w(&self) -> &MeasurableFunction {
        &self.w
    }

    /// Block values of `E(|u|²)`.
    pub fn eu2_blocks(&self) -> &[f64] {
        &self.eu2_blocks
    }

    /// Block values of `E(|w|²)`.
    pub fn ew2_blocks(&self) -> &[f64] {
        &self.ew2_blocks
    }

    pub fn eu2(&self) -> MeasurableFunction {
        self.lift(|b| self.eu2_blocks[b])
    }

    pub fn ew2(&self) -> MeasurableFunction {
        self.lift(|b| self.ew2_blocks[b])
    }

    pub fn block_in_s(&self, b: usize) -> bool {
        self.in_s[b]
    }

    pub fn block_in_g(&self, b: usize) -> bool {
        self.in_g[b]
    }

    /// `S = S(E(|u|²))`.
    pub fn s(&self) -> IndexSet {
        self.partition().union_of_blocks(|b| self.in_s[b])
    }

    /// `G = S(E(|w|²))`.
    pub fn g(&self) -> IndexSet {
        self.partition().union_of_blocks(|b| self.in_g[b])
    }

    /// Real block-constant function with value `f(b)` on block `b`.
    pub fn lift(&self, f: impl Fn(usize) -> f64) -> MeasurableFunction {
        let values: Vec<C64> = (0..self.partition().block_count())
            .map(|b| C64::new(f(b), 0.0))
            .collect();
        self.cond.lift(&values)
    }

    /// Block values of `E(|w|²) E(|u|²)`.
    pub fn product_blocks(&self) -> Vec<f64> {
        self.eu2_blocks
            .iter()
            .zip(&self.ew2_blocks)
            .map(|(a, b)| a * b)
            .collect()
    }

    /// `M_α E M_β`.
    fn sandwich(&self, alpha: &MeasurableFunction, beta: &MeasurableFunction) -> WeightedOperator {
        let e = self.cond.operator();
        &(&WeightedOperator::multiplication(alpha) * &e) * &WeightedOperator::multiplication(beta)
    }
}

/// `T = M_w E M_u`.
pub fn build_t(inst: &WceInstance) -> WeightedOperator {
    inst.sandwich(&inst.w, &inst.u)
}

/// `T* f = ū E(w̄ f)`.
pub fn closed_adjoint(inst: &WceInstance) -> WeightedOperator {
    inst.sandwich(&inst.u.conj(), &inst.w.conj())
}

/// `‖T‖ = max (E(|w|²) E(|u|²))^{1/2}`.
pub fn norm_formula(inst: &WceInstance) -> f64 {
    inst.product_blocks()
        .iter()
        .fold(0.0, |m: f64, p| m.max(p.max(0.0).sqrt()))
}

/// `‖M_g T‖ = max |g| (E(|w|²) E(|u|²))^{1/2}` for block-constant `g`.
pub fn multiplied_norm_formula(inst: &WceInstance, g: &MeasurableFunction) -> Result<f64> {
    require_measurable(inst, g)?;
    let products = inst.product_blocks();
    Ok(inst
        .partition()
        .blocks()
        .iter()
        .zip(&products)
        .map(|(block, p)| g.get(block[0]).norm() * p.max(0.0).sqrt())
        .fold(0.0, f64::max))
}

fn require_measurable(inst: &WceInstance, g: &MeasurableFunction) -> Result<()> {
    if !is_measurable(g, inst.partition(), SUPPORT_TOL)? {
        return Err(Error::NotMeasurable);
    }
    Ok(())
}

/// `‖M_g T‖` computed from the matrix.
pub fn multiplied_norm(inst: &WceInstance, g: &MeasurableFunction) -> f64 {
    operator_norm(&(&WeightedOperator::multiplication(g) * &build_t(inst)))
}

/// Tests the implication "`M_g T = 0` forces `g = 0` on the support of
/// `E(|w|²) E(|u|²)`" for one block-constant `g`.
///
/// `M_g T` counts as zero when its norm is at most
/// `tol · (1 + ‖g‖_∞ ‖T‖)`.
pub fn check_vanishing(inst: &WceInstance, g: &MeasurableFunction, tol: f64) -> Result<bool> {
    require_measurable(inst, g)?;
    let threshold = tol * (1.0 + g.max_abs() * norm_formula(inst));
    if multiplied_norm(inst, g) > threshold {
        return Ok(true);
    }
    let product = inst.lift(|b| inst.product_blocks()[b]);
    Ok(support(g, SUPPORT_TOL).is_disjoint(&support(&product, SUPPORT_TOL)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialIsometryVerdict {
    pub is_partial_isometry: bool,
    /// `A = S(E(|w|²) E(|u|²))`, which equals `S ∩ G`.
    pub set: IndexSet,
    /// Largest distance of a block value of the product from `{0, 1}`.
    pub distance: f64,
}

/// Partial isometry test: `E(|w|²) E(|u|²)` must be an indicator function.
pub fn partial_isometry_criterion(inst: &WceInstance, tol: f64) -> PartialIsometryVerdict {
    let products = inst.product_blocks();
    let distance = products
        .iter()
        .map(|p| p.abs().min((p - 1.0).abs()))
        .fold(0.0, f64::max);
    let set = support(&inst.lift(|b| products[b]), SUPPORT_TOL);
    PartialIsometryVerdict {
        is_partial_isometry: distance <= tol,
        set,
        distance,
    }
}

/// `(T*T)^n f = ū E(|w|²)^n E(|u|²)^{n-1} E(u f)` for `n ≥ 1`.
pub fn tstar_t_power(inst: &WceInstance, n: u32) -> WeightedOperator {
    assert!(n >= 1, "power formula starts at n = 1");
    let k = n as i32;
    let coeff = inst.lift(|b| inst.ew2_blocks[b].powi(k) * inst.eu2_blocks[b].powi(k - 1));
    inst.sandwich(&(&coeff * &inst.u.conj()), &inst.u)
}

/// `(TT*)^n f = w E(|u|²)^n E(|w|²)^{n-1} E(w̄ f)` for `n ≥ 1`.
pub fn t_tstar_power(inst: &WceInstance, n: u32) -> WeightedOperator {
    assert!(n >= 1, "power formula starts at n = 1");
    let k = n as i32;
    let coeff = inst.lift(|b| inst.eu2_blocks[b].powi(k) * inst.ew2_blocks[b].powi(k - 1));
    inst.sandwich(&(&coeff * &inst.w), &inst.w.conj())
}

/// `f(T*T) = f(0) I + M_{χ_S / E(|u|²)} (M_{f∘(E(|u|²)E(|w|²))} − f(0) I) M_ū E M_u`.
///
/// `f` must be finite at 0 and at every block value of the product.
pub fn closed_func_calc_tstar_t(inst: &WceInstance, f: impl Fn(f64) -> f64) -> WeightedOperator {
    let f0 = f(0.0);
    let products = inst.product_blocks();
    let coeff = inst.lift(|b| {
        if inst.in_s[b] {
            (f(products[b]) - f0) / inst.eu2_blocks[b]
        } else {
            0.0
        }
    });
    let identity = WeightedOperator::identity(inst.space().clone());
    let range_part = inst.sandwich(&(&coeff * &inst.u.conj()), &inst.u);
    &identity.scale(C64::new(f0, 0.0)) + &range_part
}

/// `g(TT*) = g(0) I + M_{χ_G / E(|w|²)} (M_{g∘(E(|u|²)E(|w|²))} − g(0) I) M_w E M_w̄`.
pub fn closed_func_calc_t_tstar(inst: &WceInstance, g: impl Fn(f64) -> f64) -> WeightedOperator {
    let g0 = g(0.0);
    let products = inst.product_blocks();
    let coeff = inst.lift(|b| {
        if inst.in_g[b] {
            (g(products[b]) - g0) / inst.ew2_blocks[b]
        } else {
            0.0
        }
    });
    let identity = WeightedOperator::identity(inst.space().clone());
    let range_part = inst.sandwich(&(&coeff * &inst.w), &inst.w.conj());
    &identity.scale(C64::new(g0, 0.0)) + &range_part
}

/// The two factors of `T = U |T|`.
#[derive(Debug, Clone)]
pub struct PolarParts {
    pub partial_isometry: WeightedOperator,
    pub modulus: WeightedOperator,
}

/// `|T| f = (E(|w|²)/E(|u|²))^{1/2} χ_S ū E(u f)` and
/// `U f = (χ_{S∩G} / (E(|w|²) E(|u|²)))^{1/2} w E(u f)`.
pub fn closed_polar(inst: &WceInstance) -> PolarParts {
    let modulus_coeff = inst.lift(|b| {
        if inst.in_s[b] {
            (inst.ew2_blocks[b] / inst.eu2_blocks[b]).sqrt()
        } else {
            0.0
        }
    });
    let u_coeff = inst.lift(|b| {
        if inst.in_s[b] && inst.in_g[b] {
            1.0 / (inst.ew2_blocks[b] * inst.eu2_blocks[b]).sqrt()
        } else {
            0.0
        }
    });
    PolarParts {
        partial_isometry: inst.sandwich(&(&u_coeff * &inst.w), &inst.u),
        modulus: inst.sandwich(&(&modulus_coeff * &inst.u.conj()), &inst.u),
    }
}

/// `V f = (E(|w|²) / E(|u|²)³)^{1/4} χ_S ū E(u f)`, the square root of `|T|`.
pub fn aluthge_auxiliary(inst: &WceInstance) -> WeightedOperator {
    let coeff = inst.lift(|b| {
        if inst.in_s[b] {
            (inst.ew2_blocks[b] / inst.eu2_blocks[b].powi(3)).powf(0.25)
        } else {
            0.0
        }
    });
    inst.sandwich(&(&coeff * &inst.u.conj()), &inst.u)
}

/// `T̂ f = χ_S E(u w) / E(|u|²) · ū E(u f)`.
pub fn closed_aluthge(inst: &WceInstance) -> Result<WeightedOperator> {
    let euw = inst.cond.block_values(&(&inst.u * &inst.w))?;
    let coeff: Vec<C64> = (0..inst.partition().block_count())
        .map(|b| {
            if inst.in_s[b] {
                euw[b] / inst.eu2_blocks[b]
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let coeff = inst.cond.lift(&coeff);
    Ok(inst.sandwich(&(&coeff * &inst.u.conj()), &inst.u))
}

/// `‖u‖ = max E(|u|²)^{1/2}`.
pub fn w_algebra_norm(u: &MeasurableFunction, partition: &Partition) -> Result<f64> {
    let cond = ConditionalExpectation::new(partition.clone());
    Ok(cond
        .block_values(&u.abs_sq())?
        .iter()
        .fold(0.0, |m: f64, z| m.max(z.re.max(0.0).sqrt())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalgebra::{
        func_calc_oracle, partial_isometry_residual, polar_oracle, positive_sqrt, relative_deviation,
    };
    use nalgebra::DMatrix;

    fn r(s: &Arc<FiniteMeasureSpace>, v: &[f64]) -> MeasurableFunction {
        MeasurableFunction::from_real(s.clone(), v).unwrap()
    }

    fn two_point(u: &[f64], w: &[f64]) -> WceInstance {
        let s = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        WceInstance::new(Partition::coarsest(s.clone()), r(&s, u), r(&s, w)).unwrap()
    }

    fn close(a: &WeightedOperator, b: &WeightedOperator) -> bool {
        relative_deviation(a, b) < 1e-12
    }

    #[test]
    fn build_t_examples() {
        let s = FiniteMeasureSpace::new(vec![0.5, 1.0, 2.0]).unwrap();
        let p = Partition::new(s.clone(), vec![vec![0, 2], vec![1]]).unwrap();
        let one = MeasurableFunction::one(s.clone());
        let inst = WceInstance::new(p.clone(), one.clone(), one.clone()).unwrap();
        assert!(close(&build_t(&inst), &ConditionalExpectation::new(p).operator()));

        let u = r(&s, &[2.0, -1.0, 0.5]);
        let w = MeasurableFunction::new(
            s.clone(),
            vec![C64::new(0.0, 1.0), C64::new(3.0, 0.0), C64::new(1.0, 1.0)],
        )
        .unwrap();
        let inst = WceInstance::new(Partition::finest(s.clone()), u.clone(), w.clone()).unwrap();
        assert!(close(&build_t(&inst), &WeightedOperator::multiplication(&(&u * &w))));

        // E(u f) = (2 f0 · 1 + 0) / 4 = f0 / 2, so T f = (0, f0/2)
        let inst = two_point(&[2.0, 0.0], &[0.0, 1.0]);
        let t = build_t(&inst);
        let expect = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        assert!((t.matrix() - expect).norm() < 1e-15);
    }

    #[test]
    fn build_t_agrees_with_action() {
        let s = FiniteMeasureSpace::new(vec![0.5, 1.0, 2.0, 4.0]).unwrap();
        let p = Partition::new(s.clone(), vec![vec![0, 3], vec![1, 2]]).unwrap();
        let u = MeasurableFunction::new(
            s.clone(),
            vec![
                C64::new(1.0, 2.0),
                C64::new(0.0, -1.0),
                C64::new(3.0, 0.0),
                C64::new(-0.5, 0.5),
            ],
        )
        .unwrap();
        let w = MeasurableFunction::new(
            s.clone(),
            vec![
                C64::new(0.2, 0.0),
                C64::new(1.0, 1.0),
                C64::new(0.0, 0.0),
                C64::new(2.0, -1.0),
            ],
        )
        .unwrap();
        let inst = WceInstance::new(p, u.clone(), w.clone()).unwrap();
        let by_action = WeightedOperator::from_action(s, |f| &w * &inst.cond_exp().apply(&(&u * f)).unwrap());
        assert!(close(&build_t(&inst), &by_action));
        assert!(close(&build_t(&inst).adjoint(), &closed_adjoint(&inst)));
    }

    #[test]
    fn norm_formula_examples() {
        let s = FiniteMeasureSpace::new(vec![1.0, 2.0]).unwrap();
        let one = MeasurableFunction::one(s.clone());
        let inst = WceInstance::new(Partition::coarsest(s.clone()), one.clone(), one.clone()).unwrap();
        assert!((norm_formula(&inst) - 1.0).abs() < 1e-15);

        // Eu2 = 4/4 = 1, Ew2 = 3/4
        let inst = two_point(&[2.0, 0.0], &[0.0, 1.0]);
        assert!((norm_formula(&inst) - 0.8660254037844386).abs() < 1e-15);
        assert!((operator_norm(&build_t(&inst)) - 0.8660254037844386).abs() < 1e-14);

        let inst = WceInstance::new(Partition::coarsest(s.clone()), one, MeasurableFunction::zero(s)).unwrap();
        assert_eq!(norm_formula(&inst), 0.0);
    }

    #[test]
    fn vanishing_examples() {
        let s = FiniteMeasureSpace::new(vec![1.0, 2.0, 1.5, 0.5]).unwrap();
        let p = Partition::new(s.clone(), vec![vec![0, 1], vec![2, 3]]).unwrap();
        let one = MeasurableFunction::one(s.clone());
        let inst = WceInstance::new(p.clone(), one.clone(), one.clone()).unwrap();
        assert!(check_vanishing(&inst, &MeasurableFunction::zero(s.clone()), 1e-10).unwrap());
        assert!(check_vanishing(&inst, &one, 1e-10).unwrap());

        // u, w live on the first block; g is the indicator of the second
        let u = r(&s, &[1.0, 2.0, 0.0, 0.0]);
        let w = r(&s, &[0.5, -1.0, 0.0, 0.0]);
        let inst = WceInstance::new(p, u, w).unwrap();
        let g = r(&s, &[0.0, 0.0, 1.0, 1.0]);
        assert!(multiplied_norm(&inst, &g) == 0.0);
        assert!(check_vanishing(&inst, &g, 1e-10).unwrap());

        let bad = r(&s, &[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(check_vanishing(&inst, &bad, 1e-10).unwrap_err(), Error::NotMeasurable);
    }

    #[test]
    fn partial_isometry_examples() {
        let s = FiniteMeasureSpace::new(vec![1.0, 2.0, 3.0]).unwrap();
        let one = MeasurableFunction::one(s.clone());
        let inst = WceInstance::new(
            Partition::new(s.clone(), vec![vec![0], vec![1, 2]]).unwrap(),
            one.clone(),
            one,
        )
        .unwrap();
        let v = partial_isometry_criterion(&inst, 1e-8);
        assert!(v.is_partial_isometry);
        assert_eq!(v.set, IndexSet::full(3));

        // Eu2 = Ew2 = 1
        let inst = two_point(&[2.0, 0.0], &[2.0, 0.0]);
        let v = partial_isometry_criterion(&inst, 1e-8);
        assert!(v.is_partial_isometry);
        assert_eq!(v.set.to_vec(), vec![0, 1]);
        assert!(partial_isometry_residual(&build_t(&inst)) < 1e-14);

        // constant 2 gives product 16
        let two = r(&s, &[2.0, 2.0, 2.0]);
        let inst = WceInstance::new(Partition::coarsest(s), two.clone(), two).unwrap();
        let v = partial_isometry_criterion(&inst, 1e-8);
        assert!(!v.is_partial_isometry);
        assert_eq!(v.set, IndexSet::full(3));
        assert!(partial_isometry_residual(&build_t(&inst)) > 1.0);
    }

    fn rich_instance() -> WceInstance {
        let s = FiniteMeasureSpace::new(vec![0.5, 1.0, 2.0, 4.0, 1.5, 0.25]).unwrap();
        let p = Partition::new(s.clone(), vec![vec![0, 3], vec![1, 2], vec![4], vec![5]]).unwrap();
        let u = MeasurableFunction::new(
            s.clone(),
            vec![
                C64::new(1.0, 2.0),
                C64::new(0.0, -1.0),
                C64::new(3.0, 0.0),
                C64::new(-0.5, 0.5),
                C64::new(0.0, 0.0),
                C64::new(1.0, 1.0),
            ],
        )
        .unwrap();
        let w = MeasurableFunction::new(
            s.clone(),
            vec![
                C64::new(0.2, 0.0),
                C64::new(1.0, 1.0),
                C64::new(0.0, 0.0),
                C64::new(2.0, -1.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        WceInstance::new(p, u, w).unwrap()
    }

    #[test]
    fn supports_are_unions_of_blocks() {
        let inst = rich_instance();
        assert_eq!(inst.s().to_vec(), vec![0, 1, 2, 3, 5]);
        assert_eq!(inst.g().to_vec(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn func_calc_examples() {
        let inst = rich_instance();
        let t = build_t(&inst);
        let tst = &t.adjoint() * &t;
        let ttst = &t * &t.adjoint();
        let id = WeightedOperator::identity(inst.space().clone());
        assert!(close(&closed_func_calc_tstar_t(&inst, |x| x), &tst));
        assert!(close(&closed_func_calc_tstar_t(&inst, |_| 1.0), &id));
        assert!(close(&closed_func_calc_tstar_t(&inst, |x| x * x), &(&tst * &tst)));
        assert!(close(&tstar_t_power(&inst, 2), &(&tst * &tst)));
        assert!(close(&closed_func_calc_t_tstar(&inst, |x| x), &ttst));
        assert!(close(&closed_func_calc_t_tstar(&inst, |_| 1.0), &id));
        assert!(close(&closed_func_calc_t_tstar(&inst, |x| x.powi(3)), &ttst.pow(3)));
        assert!(close(&t_tstar_power(&inst, 3), &ttst.pow(3)));

        let oracle = func_calc_oracle(&tst, |x| (-x).exp()).unwrap();
        assert!(relative_deviation(&closed_func_calc_tstar_t(&inst, |x| (-x).exp()), &oracle) < 1e-12);
    }

    #[test]
    fn polar_examples() {
        let s = FiniteMeasureSpace::new(vec![1.0, 2.0, 3.0]).unwrap();
        let one = MeasurableFunction::one(s.clone());
        let p = Partition::new(s.clone(), vec![vec![0, 2], vec![1]]).unwrap();
        let e = ConditionalExpectation::new(p.clone()).operator();
        let parts = closed_polar(&WceInstance::new(p.clone(), one.clone(), one.clone()).unwrap());
        assert!(close(&parts.partial_isometry, &e));
        assert!(close(&parts.modulus, &e));

        // Ew2/Eu2 = 3/4 and χ/(Ew2 Eu2) = 4/3 on the single block
        let inst = two_point(&[2.0, 0.0], &[0.0, 1.0]);
        let parts = closed_polar(&inst);
        let t = build_t(&inst);
        let modulus = parts.modulus.matrix();
        assert!((modulus[(0, 0)].re - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(modulus.iter().enumerate().all(|(k, z)| k == 0 || z.norm() == 0.0));
        assert!((parts.partial_isometry.matrix()[(1, 0)].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(close(&(&parts.modulus * &parts.modulus), &(&t.adjoint() * &t)));
        assert!(close(&(&parts.partial_isometry * &parts.modulus), &t));

        let inst = WceInstance::new(p, MeasurableFunction::zero(s.clone()), one).unwrap();
        let parts = closed_polar(&inst);
        assert_eq!(operator_norm(&parts.partial_isometry), 0.0);
        assert_eq!(operator_norm(&parts.modulus), 0.0);
    }

    #[test]
    fn polar_agrees_with_oracles_on_mixed_supports() {
        let inst = rich_instance();
        let t = build_t(&inst);
        let parts = closed_polar(&inst);
        let (u, p) = polar_oracle(&t);
        assert!(relative_deviation(&parts.modulus, &p) < 1e-12);
        assert!(relative_deviation(&parts.partial_isometry, &u) < 1e-12);
        let root = positive_sqrt(&(&t.adjoint() * &t)).unwrap();
        assert!(relative_deviation(&parts.modulus, &root) < 1e-12);
    }

    #[test]
    fn aluthge_examples() {
        let s = FiniteMeasureSpace::new(vec![1.0, 2.0, 3.0]).unwrap();
        let one = MeasurableFunction::one(s.clone());
        let p = Partition::new(s.clone(), vec![vec![0, 2], vec![1]]).unwrap();
        let inst = WceInstance::new(p.clone(), one.clone(), one.clone()).unwrap();
        assert!(close(
            &closed_aluthge(&inst).unwrap(),
            &ConditionalExpectation::new(p.clone()).operator()
        ));

        // E(uw) = 1, Eu2 = 1: T̂ f = ū E(u f) = (f0, 0)
        let inst = two_point(&[2.0, 0.0], &[2.0, 0.0]);
        let that = closed_aluthge(&inst).unwrap();
        assert!((that.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(that.matrix().iter().enumerate().all(|(k, z)| k == 0 || z.norm() == 0.0));

        let inst = WceInstance::new(p, MeasurableFunction::zero(s.clone()), one).unwrap();
        assert_eq!(operator_norm(&closed_aluthge(&inst).unwrap()), 0.0);
    }

    #[test]
    fn aluthge_auxiliary_squares_to_modulus() {
        let inst = rich_instance();
        let v = aluthge_auxiliary(&inst);
        assert!(close(&(&v * &v), &closed_polar(&inst).modulus));
        let parts = closed_polar(&inst);
        let oracle = &(&v * &parts.partial_isometry) * &v;
        assert!(close(&closed_aluthge(&inst).unwrap(), &oracle));
    }

    #[test]
    fn w_norm_examples() {
        let s = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let p = Partition::coarsest(s.clone());
        assert!((w_algebra_norm(&MeasurableFunction::one(s.clone()), &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((w_algebra_norm(&r(&s, &[2.0, 0.0]), &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(w_algebra_norm(&MeasurableFunction::zero(s), &p).unwrap(), 0.0);
    }
}
