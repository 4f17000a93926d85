use crate::error::{Error, Result};

/// Mixed root-mean-square error `sqrt(mean(((x - r) / (1 + |r|))^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MrmsReport {
    pub value: f64,
    pub sample_count: usize,
    /// MRMS restricted to each variable group (see [`mrms_grouped`]).
    pub per_variable: Vec<f64>,
}

/// MRMS over all entries of `x` against `xref` (rows are sample times).
pub fn mrms(x: &[Vec<f64>], xref: &[Vec<f64>]) -> Result<MrmsReport> {
    mrms_grouped(x, xref, 1)
}

/// As [`mrms`], additionally breaking the error down by variable: column `c`
/// belongs to variable `c % groups` (interleaved state layout).
pub fn mrms_grouped(x: &[Vec<f64>], xref: &[Vec<f64>], groups: usize) -> Result<MrmsReport> {
    if groups == 0 {
        return Err(Error::input("groups must be positive"));
    }
    if x.len() != xref.len() {
        return Err(Error::input(format!("{} sample rows vs {} reference rows", x.len(), xref.len())));
    }
    let mut sums = vec![0.0; groups];
    let mut counts = vec![0usize; groups];
    for (row, (a, r)) in x.iter().zip(xref).enumerate() {
        if a.len() != r.len() {
            return Err(Error::input(format!("row {row}: {} values vs {} reference values", a.len(), r.len())));
        }
        for (c, (&u, &v)) in a.iter().zip(r).enumerate() {
            if !v.is_finite() {
                return Err(Error::input(format!("non-finite reference value at row {row}, column {c}")));
            }
            let e = (u - v) / (1.0 + v.abs());
            sums[c % groups] += e * e;
            counts[c % groups] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::input("no samples"));
    }
    let value = (sums.iter().sum::<f64>() / total as f64).sqrt();
    let per_variable = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { 0.0 } else { (s / c as f64).sqrt() })
        .collect();
    Ok(MrmsReport {
        value,
        sample_count: total,
        per_variable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_samples() {
        let x = vec![vec![1.0, -2.0], vec![0.5, 3.0]];
        assert_eq!(mrms(&x, &x).unwrap().value, 0.0);
    }

    #[test]
    fn zero_reference_gives_absolute_error() {
        let r = vec![vec![0.0; 3]; 4];
        let x = vec![vec![-0.25; 3]; 4];
        let rep = mrms(&x, &r).unwrap();
        assert!((rep.value - 0.25).abs() < 1e-15);
        assert_eq!(rep.sample_count, 12);
    }

    #[test]
    fn single_sample() {
        let rep = mrms(&[vec![1.1]], &[vec![1.0]]).unwrap();
        assert!((rep.value - 0.05).abs() < 1e-15);
    }

    #[test]
    fn grouped_breakdown() {
        let r = vec![vec![0.0, 0.0, 0.0, 0.0]];
        let x = vec![vec![0.1, 0.0, 0.1, 0.0]];
        let rep = mrms_grouped(&x, &r, 2).unwrap();
        assert!((rep.per_variable[0] - 0.1).abs() < 1e-15);
        assert_eq!(rep.per_variable[1], 0.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(mrms(&[vec![1.0]], &[vec![1.0, 2.0]]).is_err());
        assert!(mrms(&[vec![1.0]], &[]).is_err());
        assert!(mrms(&[vec![1.0]], &[vec![f64::NAN]]).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(vals in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..20), rot in 0usize..20) {
            let x: Vec<Vec<f64>> = vals.iter().map(|v| vec![v.0]).collect();
            let r: Vec<Vec<f64>> = vals.iter().map(|v| vec![v.1]).collect();
            let k = rot % vals.len();
            let (mut xs, mut rs) = (x.clone(), r.clone());
            xs.rotate_left(k);
            rs.rotate_left(k);
            let a = mrms(&x, &r).unwrap().value;
            let b = mrms(&xs, &rs).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a));
        }

        #[test]
        fn exact_sample_does_not_increase(vals in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..20), extra in -5.0f64..5.0) {
            let mut x: Vec<Vec<f64>> = vals.iter().map(|v| vec![v.0]).collect();
            let mut r: Vec<Vec<f64>> = vals.iter().map(|v| vec![v.1]).collect();
            let before = mrms(&x, &r).unwrap();
            x.push(vec![extra]);
            r.push(vec![extra]);
            let after = mrms(&x, &r).unwrap();
            prop_assert!(after.value <= before.value);
            let m = before.sample_count as f64;
            let expected = (before.value.powi(2) * m / (m + 1.0)).sqrt();
            prop_assert!((after.value - expected).abs() <= 1e-14 * (1.0 + expected));
        }
    }
}
