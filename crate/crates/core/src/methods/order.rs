//! Order conditions (p = 1..4) and the third-order local error measure.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::SplittingMethod;
use crate::error::{Error, Result};

/// Scalar type the condition polynomials are evaluated in. Complex values
/// are used for complex-step derivatives.
pub(crate) trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn lit(x: f64) -> Self;
}

impl Scalar for f64 {
    fn lit(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn lit(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

fn suffix_sums<T: Scalar>(v: &[T]) -> Vec<T> {
    // suffix[i] = sum_{k >= i} v[k]; suffix[s] = 0
    let mut out = vec![T::lit(0.0); v.len() + 1];
    for i in (0..v.len()).rev() {
        out[i] = out[i + 1] + v[i];
    }
    out
}

fn prefix_sums<T: Scalar>(v: &[T]) -> Vec<T> {
    // prefix[i] = sum_{k < i} v[k]; prefix[0] = 0
    let mut out = vec![T::lit(0.0); v.len() + 1];
    for i in 0..v.len() {
        out[i + 1] = out[i] + v[i];
    }
    out
}

/// Left-hand sides minus right-hand sides of the conditions of order 1..=3,
/// in the order `[p1a, p1b, p2, p3a, p3b]`.
pub(crate) fn residuals_123<T: Scalar>(a: &[T], b: &[T]) -> [T; 5] {
    let s = a.len();
    let pa = prefix_sums(a);
    let sa = suffix_sums(a);
    let sb = suffix_sums(b);
    let zero = T::lit(0.0);

    let p2 = (0..s).fold(zero, |acc, i| acc + b[i] * pa[i + 1]);
    // sum_{i<s} b_i (sum_{k>i} a_k)^2. The variant sum_{i>=2} a_i (sum_{k<i} b_k)^2
    // is implied by p3b once p1 and p2 hold, so it cannot replace this one.
    let p3a = (0..s.saturating_sub(1)).fold(zero, |acc, i| acc + b[i] * sa[i + 1] * sa[i + 1]);
    let p3b = (0..s).fold(zero, |acc, i| acc + a[i] * sb[i] * sb[i]);
    [
        pa[s] - T::lit(1.0),
        sb[0] - T::lit(1.0),
        p2 - T::lit(0.5),
        p3a - T::lit(1.0 / 3.0),
        p3b - T::lit(1.0 / 3.0),
    ]
}

/// The three fourth-order sums `(S1, S2, S3)` whose targets are 1/4, 1/6, 1/4.
pub(crate) fn fourth_order_sums(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let s = a.len();
    let sa = suffix_sums(a);
    let pb = prefix_sums(b);

    let s1: f64 = (0..s.saturating_sub(1)).map(|i| b[i] * sa[i + 1].powi(3)).sum();
    let mut s2: f64 = (0..s.saturating_sub(1))
        .map(|i| b[i] * b[i] * sa[i + 1] * sa[i + 1])
        .sum();
    for i in 0..s.saturating_sub(2) {
        let inner: f64 = (i + 1..s - 1).map(|k| b[k] * sa[k + 1] * sa[k + 1]).sum();
        s2 += 2.0 * b[i] * inner;
    }
    let s3: f64 = (1..s).map(|i| a[i] * pb[i].powi(3)).sum();
    (s1, s2, s3)
}

/// The five conditions of orders 1..=3 as a fixed array (used by the optimizer).
pub fn third_order_residuals(m: &SplittingMethod) -> [f64; 5] {
    let a = m.column(super::Operator::First);
    let b = m.column(super::Operator::Second);
    residuals_123(&a, &b)
}

/// Residuals of the order conditions, grouped by order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderConditionReport {
    pub residuals_by_order: BTreeMap<u32, Vec<f64>>,
    /// Largest `p` such that every residual of order `<= p` is below `tolerance`.
    pub satisfied_order: u32,
    pub tolerance: f64,
}

impl OrderConditionReport {
    pub fn residuals(&self, p: u32) -> &[f64] {
        self.residuals_by_order
            .get(&p)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Largest absolute residual over orders `1..=p`.
    pub fn max_abs_through(&self, p: u32) -> f64 {
        self.residuals_by_order
            .range(1..=p)
            .flat_map(|(_, r)| r.iter())
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

/// Order-condition residuals up to `max_p` with the method's default tolerance.
pub fn order_condition_residuals(m: &SplittingMethod, max_p: u32) -> Result<OrderConditionReport> {
    order_condition_residuals_with_tol(m, max_p, m.order_tolerance())
}

pub fn order_condition_residuals_with_tol(
    m: &SplittingMethod,
    max_p: u32,
    tolerance: f64,
) -> Result<OrderConditionReport> {
    if !(1..=4).contains(&max_p) {
        return Err(Error::input(format!("max_p must be in 1..=4, got {max_p}")));
    }
    let a = m.column(super::Operator::First);
    let b = m.column(super::Operator::Second);
    let r = residuals_123(&a, &b);

    let mut by_order = BTreeMap::new();
    by_order.insert(1, vec![r[0], r[1]]);
    if max_p >= 2 {
        by_order.insert(2, vec![r[2]]);
    }
    if max_p >= 3 {
        by_order.insert(3, vec![r[3], r[4]]);
    }
    if max_p >= 4 {
        let (s1, s2, s3) = fourth_order_sums(&a, &b);
        by_order.insert(4, vec![s1 - 0.25, s2 - 1.0 / 6.0, s3 - 0.25]);
    }

    let mut satisfied_order = 0;
    for (&p, res) in &by_order {
        if res.iter().all(|x| x.abs() < tolerance) {
            satisfied_order = p;
        } else {
            break;
        }
    }
    Ok(OrderConditionReport {
        residuals_by_order: by_order,
        satisfied_order,
        tolerance,
    })
}

/// Leading-monomial coefficients of the fourth-order local error and their norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemReport {
    pub lambda41: f64,
    pub lambda42: f64,
    pub lambda43: f64,
    pub lem3: f64,
    /// Whether the method satisfied orders 1..=3 at its default tolerance.
    pub third_order: bool,
}

/// LEM(3) without checking that the method is third order.
pub fn lem3_unchecked(m: &SplittingMethod) -> LemReport {
    let a = m.column(super::Operator::First);
    let b = m.column(super::Operator::Second);
    let (s1, s2, s3) = fourth_order_sums(&a, &b);
    let lambda41 = 4.0 * s1 - 1.0;
    let lambda42 = 6.0 * s2 - 1.0;
    let lambda43 = 4.0 * s3 - 1.0;
    LemReport {
        lambda41,
        lambda42,
        lambda43,
        lem3: (lambda41 * lambda41 + lambda42 * lambda42 + lambda43 * lambda43).sqrt(),
        third_order: false,
    }
}

/// LEM(3) of a method. Methods that are not third order still get a value,
/// flagged through `third_order = false`.
pub fn lem3(m: &SplittingMethod) -> LemReport {
    let mut report = lem3_unchecked(m);
    let tol = m.order_tolerance();
    report.third_order = residuals_123(&m.column(super::Operator::First), &m.column(super::Operator::Second))
        .iter()
        .all(|r| r.abs() < tol);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::{lookup, registry, Operator};

    fn method(a: &[f64], b: &[f64]) -> SplittingMethod {
        SplittingMethod::from_columns("t", a, b, 0).unwrap()
    }

    #[test]
    fn ruth_residuals_vanish() {
        let ruth = lookup("ruth").unwrap();
        let report = order_condition_residuals(&ruth, 3).unwrap();
        assert!(report.max_abs_through(3) < 1e-15, "{report:?}");
        assert_eq!(report.satisfied_order, 3);
    }

    #[test]
    fn lie_trotter_second_order_residual() {
        let lt = lookup("lie-trotter").unwrap();
        let report = order_condition_residuals(&lt, 2).unwrap();
        assert_eq!(report.residuals(1), &[0.0, 0.0]);
        assert_eq!(report.residuals(2), &[0.5]);
        assert_eq!(report.satisfied_order, 1);
    }

    #[test]
    fn two_stage_candidate_fails_only_last_condition() {
        let m = method(&[1.0 / 3.0, 2.0 / 3.0], &[3.0 / 4.0, 1.0 / 4.0]);
        let report = order_condition_residuals(&m, 3).unwrap();
        assert!(report.residuals(1).iter().all(|r| r.abs() < 1e-15));
        assert!(report.residuals(2)[0].abs() < 1e-15);
        assert!(report.residuals(3)[0].abs() < 1e-15);
        // (1/3 * 1^2 + 2/3 * (1/4)^2) - 1/3 = 1/24
        assert!((report.residuals(3)[1] - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(report.satisfied_order, 2);
    }

    #[test]
    fn residual_vector_lengths() {
        let ruth = lookup("ruth").unwrap();
        let report = order_condition_residuals(&ruth, 4).unwrap();
        let lens: Vec<usize> = (1..=4).map(|p| report.residuals(p).len()).collect();
        assert_eq!(lens, vec![2, 1, 2, 3]);
    }

    #[test]
    fn max_p_out_of_range() {
        let ruth = lookup("ruth").unwrap();
        assert!(order_condition_residuals(&ruth, 0).is_err());
        assert!(order_condition_residuals(&ruth, 5).is_err());
    }

    #[test]
    fn lem_values_match_summary_table() {
        // Two significant figures: 0.36, 0.25, 6.55e-8 (rounded 6.6e-8).
        let cases = [("ruth", 0.36, 0.005), ("aks3", 0.25, 0.005), ("os437-minlem", 6.55e-8, 0.05e-8)];
        for (name, expected, half_unit) in cases {
            let r = lem3(&lookup(name).unwrap());
            assert!(r.third_order);
            assert!((r.lem3 - expected).abs() <= half_unit, "{name}: {}", r.lem3);
        }
    }

    #[test]
    fn lem_zero_iff_lambdas_vanish() {
        let r = lem3_unchecked(&lookup("ruth").unwrap());
        assert!(r.lem3 > 0.0);
        let norm = (r.lambda41.powi(2) + r.lambda42.powi(2) + r.lambda43.powi(2)).sqrt();
        assert_eq!(r.lem3, norm);
    }

    #[test]
    fn fourth_order_residuals_are_scaled_lambdas() {
        for m in registry() {
            let rep = order_condition_residuals(&m, 4).unwrap();
            let lem = lem3_unchecked(&m);
            let r4 = rep.residuals(4);
            assert!((4.0 * r4[0] - lem.lambda41).abs() < 1e-14);
            assert!((6.0 * r4[1] - lem.lambda42).abs() < 1e-14);
            assert!((4.0 * r4[2] - lem.lambda43).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_step_matches_real_evaluation() {
        let ruth = lookup("ruth").unwrap();
        let a: Vec<Complex64> = ruth.column(Operator::First).iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let b: Vec<Complex64> = ruth.column(Operator::Second).iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let rc = residuals_123(&a, &b);
        let rr = third_order_residuals(&ruth);
        for (c, r) in rc.iter().zip(rr) {
            assert_eq!(c.re, r);
            assert_eq!(c.im, 0.0);
        }
    }
}
