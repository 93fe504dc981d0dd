//! The standard inequalities and identities satisfied by a conditional
//! expectation, each evaluated as a normalized violation on concrete inputs.

use serde::Serialize;

use super::ConditionalExpectation;
use crate::error::Result;
use crate::measure::{support, MeasurableFunction, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CondExpProperty {
    Idempotence,
    Range,
    Module,
    Jensen,
    Positivity,
    Holder,
    SupportGrowth,
    SelfAdjoint,
}

impl CondExpProperty {
    pub const ALL: [CondExpProperty; 8] = [
        Self::Idempotence,
        Self::Range,
        Self::Module,
        Self::Jensen,
        Self::Positivity,
        Self::Holder,
        Self::SupportGrowth,
        Self::SelfAdjoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Idempotence => "idempotence",
            Self::Range => "range",
            Self::Module => "module",
            Self::Jensen => "jensen",
            Self::Positivity => "positivity",
            Self::Holder => "holder",
            Self::SupportGrowth => "support-growth",
            Self::SelfAdjoint => "self-adjoint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub property: CondExpProperty,
    /// Violation divided by the natural scale of the quantities involved.
    pub residual: f64,
    pub passed: bool,
}

const JENSEN_EXPONENTS: [f64; 3] = [1.0, 2.0, 4.0];
const HOLDER_PAIRS: [(f64, f64); 2] = [(2.0, 2.0), (4.0, 4.0 / 3.0)];

/// Offset that turns `|f|` into a strictly positive function.
const STRICT_OFFSET: f64 = 1e-3;

fn max_diff(a: &MeasurableFunction, b: &MeasurableFunction) -> f64 {
    (a - b).max_abs()
}

fn positive_part_excess(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter().zip(rhs).map(|(l, r)| (l - r).max(0.0)).fold(0.0, f64::max)
}

fn real(f: &MeasurableFunction) -> Vec<f64> {
    f.real_parts()
}

/// Evaluates every property on `f`, `g` and the block-constant function read
/// off `g` at the first point of each block. `slack` bounds each normalized
/// residual.
pub fn check_properties(
    e: &ConditionalExpectation,
    f: &MeasurableFunction,
    g: &MeasurableFunction,
    slack: f64,
) -> Result<Vec<PropertyOutcome>> {
    let partition = e.partition();
    let anchors: Vec<C64> = partition.blocks().iter().map(|b| g.get(b[0])).collect();
    let h = e.lift(&anchors);

    let ef = e.apply(f)?;
    let eg = e.apply(g)?;
    let mut out = Vec::with_capacity(8);
    let mut push = |property, residual: f64| {
        out.push(PropertyOutcome {
            property,
            residual,
            passed: residual <= slack,
        })
    };

    // E(E f) = E f
    let eef = e.apply(&ef)?;
    push(CondExpProperty::Idempotence, max_diff(&eef, &ef) / (1.0 + f.max_abs()));

    // E f is block-constant, and E fixes block-constant functions
    let spread = partition
        .blocks()
        .iter()
        .flat_map(|block| block.iter().map(|&i| (ef.get(i) - ef.get(block[0])).norm()))
        .fold(0.0, f64::max);
    let fixed = max_diff(&e.apply(&h)?, &h);
    push(
        CondExpProperty::Range,
        spread.max(fixed) / (1.0 + f.max_abs().max(h.max_abs())),
    );

    // E(f h) = E(f) h
    let module = max_diff(&e.apply(&(f * &h))?, &(&ef * &h));
    push(CondExpProperty::Module, module / (1.0 + f.max_abs() * h.max_abs()));

    // |E f|^p ≤ E(|f|^p)
    let mut jensen: f64 = 0.0;
    for p in JENSEN_EXPONENTS {
        let lhs: Vec<f64> = ef.values().iter().map(|z| z.norm().powf(p)).collect();
        let rhs = real(&e.apply(&f.abs_pow(p))?);
        let scale = 1.0 + rhs.iter().fold(0.0, |m: f64, x| m.max(*x));
        jensen = jensen.max(positive_part_excess(&lhs, &rhs) / scale);
    }
    push(CondExpProperty::Jensen, jensen);

    // f ≥ 0 ⇒ E f ≥ 0; f > 0 ⇒ E f > 0
    let nonneg = f.abs_pow(1.0);
    let e_nonneg = real(&e.apply(&nonneg)?);
    let negativity = e_nonneg.iter().fold(0.0, |m: f64, x| m.max(-x)) / (1.0 + nonneg.max_abs());
    let strict = nonneg.map(|z| z + STRICT_OFFSET);
    let strict_fail = real(&e.apply(&strict)?).iter().any(|&x| x <= 0.0);
    push(
        CondExpProperty::Positivity,
        if strict_fail { negativity.max(1.0) } else { negativity },
    );

    // |E(f g)| ≤ E(|f|^p)^{1/p} E(|g|^q)^{1/q}
    let efg = e.apply(&(f * g))?;
    let mut holder: f64 = 0.0;
    for (p, q) in HOLDER_PAIRS {
        let fp = real(&e.apply(&f.abs_pow(p))?);
        let gq = real(&e.apply(&g.abs_pow(q))?);
        let rhs: Vec<f64> = fp
            .iter()
            .zip(&gq)
            .map(|(a, b)| a.max(0.0).powf(1.0 / p) * b.max(0.0).powf(1.0 / q))
            .collect();
        let lhs: Vec<f64> = efg.values().iter().map(|z| z.norm()).collect();
        let scale = 1.0 + rhs.iter().fold(0.0, |m: f64, x| m.max(*x));
        holder = holder.max(positive_part_excess(&lhs, &rhs) / scale);
    }
    push(CondExpProperty::Holder, holder);

    // S(f) ⊆ S(E f) for f ≥ 0, exact set semantics
    let escapes = support(&nonneg, 0.0)
        .difference(&support(&e.apply(&nonneg)?, 0.0))
        .len();
    push(CondExpProperty::SupportGrowth, escapes as f64);

    // ⟨E f, g⟩ = ⟨f, E g⟩
    let sa = (ef.inner(g) - f.inner(&eg)).norm();
    push(CondExpProperty::SelfAdjoint, sa / (1.0 + f.l2_norm() * g.l2_norm()));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{FiniteMeasureSpace, Partition};

    #[test]
    fn all_properties_pass_on_a_small_example() {
        let s = FiniteMeasureSpace::new(vec![0.5, 2.0, 1.0, 3.0, 0.25]).unwrap();
        let p = Partition::new(s.clone(), vec![vec![0, 3], vec![1, 2, 4]]).unwrap();
        let e = ConditionalExpectation::new(p);
        let f = MeasurableFunction::new(
            s.clone(),
            vec![
                C64::new(1.0, -1.0),
                C64::new(0.0, 0.0),
                C64::new(-2.0, 0.5),
                C64::new(3.0, 0.0),
                C64::new(0.0, 2.0),
            ],
        )
        .unwrap();
        let g = f.map(|z| z * z + C64::new(0.5, -0.25));
        let outcomes = check_properties(&e, &f, &g, 1e-12).unwrap();
        assert_eq!(outcomes.len(), CondExpProperty::ALL.len());
        for o in &outcomes {
            assert!(o.passed, "{:?}", o);
        }
    }

    #[test]
    fn jensen_residual_is_zero_for_strict_inequality() {
        let s = FiniteMeasureSpace::new(vec![1.0, 1.0]).unwrap();
        let f = MeasurableFunction::from_real(s.clone(), &[1.0, -1.0]).unwrap();
        let e = ConditionalExpectation::new(Partition::coarsest(s));
        let ef = e.apply(&f).unwrap();
        // E f = 0 while E|f| = 1: strict inequality, residual zero
        assert!(ef.max_abs() < 1e-15);
        let outcomes = check_properties(&e, &f, &f, 1e-12).unwrap();
        let jensen = outcomes.iter().find(|o| o.property == CondExpProperty::Jensen).unwrap();
        assert_eq!(jensen.residual, 0.0);
    }
}
