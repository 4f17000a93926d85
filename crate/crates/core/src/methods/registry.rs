//! Built-in splitting methods.

use super::{CoefficientKind, SplittingMethod};
use crate::error::{Error, Result};

/// AKS3 coefficients exactly as usually printed (15 decimals). They satisfy the
/// second- and third-order conditions only to about 1e-9, so the registry
/// entry uses the exact palindromic family member instead; this table is kept
/// for comparisons.
pub const AKS3_PRINTED: [[f64; 2]; 3] = [
    [0.268330095673069, 0.919661524555154],
    [-0.187991620228223, -0.187991620228223],
    [0.919661524555154, 0.268330095673069],
];

// Palindromic minimum-LEM three-stage method, computed in extended precision.
#[allow(clippy::excessive_precision)]
const AKS3_EXACT: [f64; 3] = [0.26833009578175992, -0.18799161879915978, 0.91966152301739986];

fn build(name: &str, rows: &[[f64; 2]], order: u32, kind: CoefficientKind) -> SplittingMethod {
    SplittingMethod::with_kind(name, rows.to_vec(), order, kind)
        .expect("built-in method tables are consistent")
}

fn ruth() -> SplittingMethod {
    build(
        "ruth",
        &[
            [7.0 / 24.0, 2.0 / 3.0],
            [3.0 / 4.0, -2.0 / 3.0],
            [-1.0 / 24.0, 1.0],
        ],
        3,
        CoefficientKind::Rational,
    )
}

fn aks3() -> SplittingMethod {
    let [a, b, c] = AKS3_EXACT;
    build("aks3", &[[a, c], [b, b], [c, a]], 3, CoefficientKind::Decimal)
}

fn os437_minlem() -> SplittingMethod {
    build(
        "os437-minlem",
        &[
            [0.675603619637542, 1.351207213243766],
            [-0.175603577692365, -1.702414383919316],
            [-0.175603614267295, 1.351207170675550],
            [0.675603572322118, 0.0],
        ],
        3,
        CoefficientKind::Decimal,
    )
}

fn os437dr_minx() -> SplittingMethod {
    build(
        "os437dr-minx",
        &[
            [0.0, 0.214870149852186],
            [0.511486052225367, 0.668690687888393],
            [-0.501427388979812, -0.041956908041494],
            [0.989941336754445, 0.158396070300915],
        ],
        3,
        CoefficientKind::Decimal,
    )
}

fn strang() -> SplittingMethod {
    build("strang", &[[0.5, 1.0], [0.5, 0.0]], 2, CoefficientKind::Rational)
}

fn lie_trotter() -> SplittingMethod {
    build("lie-trotter", &[[1.0, 1.0]], 1, CoefficientKind::Rational)
}

/// All built-in methods: Lie–Trotter, Strang, Ruth, AKS3, OS(2,4,3,7)-minLEM
/// and OS(2,4,3,7)DR-minx.
pub fn registry() -> Vec<SplittingMethod> {
    vec![
        lie_trotter(),
        strang(),
        ruth(),
        aks3(),
        os437_minlem(),
        os437dr_minx(),
    ]
}

pub fn registry_names() -> Vec<String> {
    registry().into_iter().map(|m| m.name().to_string()).collect()
}

/// Case-insensitive lookup; `os437-minx`-style aliases and a trailing `*`
/// (adjoint) are accepted.
pub fn lookup(name: &str) -> Result<SplittingMethod> {
    let key = name.trim().to_ascii_lowercase();
    let (base, adjoint) = match key.strip_suffix('*') {
        Some(b) => (b.to_string(), true),
        None => (key.clone(), false),
    };
    let canonical = match base.as_str() {
        "lt" | "lie" | "lietrotter" => "lie-trotter",
        "strang-marchuk" => "strang",
        "os437minlem" | "minlem" => "os437-minlem",
        "os437drminx" | "os437dr_minx" | "drminx" | "os437-dr-minx" => "os437dr-minx",
        other => other,
    };
    registry()
        .into_iter()
        .find(|m| m.name() == canonical)
        .map(|m| if adjoint { m.adjoint() } else { m })
        .ok_or_else(|| {
            Error::input(format!(
                "unknown method {name:?}; available: {}",
                registry_names().join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::{
        lem3, order_condition_residuals, order_condition_residuals_with_tol, Operator,
    };

    #[test]
    fn six_methods_with_claimed_orders() {
        let orders: Vec<u32> = registry().iter().map(|m| m.claimed_order()).collect();
        assert_eq!(orders, vec![1, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let m = lookup("OS437DR-minx").unwrap();
        assert_eq!(m.alpha(2, Operator::First), 0.511486052225367);
        assert_eq!(m.alpha(1, Operator::First), 0.0);
        assert_eq!(lookup("Strang").unwrap().sub_integration_count(), 3);
        assert_eq!(lookup("ruth*").unwrap(), lookup("ruth").unwrap().adjoint());
    }

    #[test]
    fn unknown_name_lists_registry() {
        let err = lookup("yoshida").unwrap_err().to_string();
        for name in registry_names() {
            assert!(err.contains(&name), "{err}");
        }
    }

    #[test]
    fn exact_zeros() {
        assert_eq!(lookup("os437-minlem").unwrap().alpha(4, Operator::Second), 0.0);
        assert_eq!(lookup("os437dr-minx").unwrap().alpha(1, Operator::First), 0.0);
        assert_eq!(lookup("os437-minlem").unwrap().sub_integration_count(), 7);
        assert_eq!(lookup("os437dr-minx").unwrap().sub_integration_count(), 7);
    }

    #[test]
    fn every_method_confirms_its_claimed_order() {
        for m in registry() {
            let rep = order_condition_residuals(&m, 4).unwrap();
            assert!(rep.satisfied_order >= m.claimed_order(), "{}: {rep:?}", m.name());
            assert!(rep.residuals(1).iter().all(|r| r.abs() < 1e-12));
        }
    }

    #[test]
    fn adjoint_preserves_order_and_lem() {
        for m in registry() {
            let adj = m.adjoint();
            let a = order_condition_residuals_with_tol(&m, 4, 1e-10).unwrap();
            let b = order_condition_residuals_with_tol(&adj, 4, 1e-10).unwrap();
            assert_eq!(a.satisfied_order, b.satisfied_order, "{}", m.name());
            if m.claimed_order() == 3 {
                assert!((lem3(&m).lem3 - lem3(&adj).lem3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_aks3_is_close_to_printed_table() {
        let m = lookup("aks3").unwrap();
        for (row, printed) in m.rows().iter().zip(AKS3_PRINTED) {
            for l in 0..2 {
                assert!((row[l] - printed[l]).abs() < 5e-9);
            }
        }
        // The printed table itself misses the decimal tolerance.
        let printed = SplittingMethod::new("aks3-printed", AKS3_PRINTED.to_vec(), 0).unwrap();
        let rep = order_condition_residuals(&printed, 3).unwrap();
        assert!(rep.max_abs_through(3) > 1e-10);
        assert!(rep.max_abs_through(3) < 1e-8);
    }
}
