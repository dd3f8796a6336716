//! Heisenberg group algebra.
//!
//! Points of `H_n` are triples `(x, y, τ) ∈ R^n × R^n × R` with the
//! polarized product
//!
//! ```text
//!     (x, y, τ) ∘ (x', y', τ') = (x + x', y + y', τ + τ' + 2(⟨x,y'⟩ − ⟨x',y⟩))
//! ```
//!
//! The gauge `|(x,y,τ)|_H = ((|x|² + |y|²)² + τ²)^{1/4}` is homogeneous of
//! degree one under the anisotropic dilation `δ_r(x,y,τ) = (rx, ry, r²τ)`,
//! and `d(a,b) = |b⁻¹ ∘ a|_H` is a left-invariant distance. The homogeneous
//! dimension is `Q = 2n + 2`; it, not the topological dimension `2n + 1`,
//! governs kernel decay and the Fujita exponent `1 + 2/Q`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A point of the Heisenberg group `H_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub tau: f64,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, tau: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(CoreError::InvalidParameter(format!(
                "x and y must have equal length, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(CoreError::InvalidParameter(
                "group points need n >= 1".into(),
            ));
        }
        Ok(GroupPoint { x, y, tau })
    }

    /// The identity (all-zeros point) of `H_n`.
    pub fn identity(n: usize) -> Self {
        GroupPoint {
            x: vec![0.0; n],
            y: vec![0.0; n],
            tau: 0.0,
        }
    }

    /// Convenience constructor for `H_1`.
    pub fn h1(x: f64, y: f64, tau: f64) -> Self {
        GroupPoint {
            x: vec![x],
            y: vec![y],
            tau,
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Group-level parameters: `n` and the homogeneous dimension `Q = 2n + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    pub n: usize,
    pub homogeneous_dim: usize,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidParameter("n must be >= 1".into()));
        }
        Ok(GroupParams {
            n,
            homogeneous_dim: 2 * n + 2,
        })
    }

    /// `Q` as a float, the form in which it enters every exponent.
    pub fn q(&self) -> f64 {
        self.homogeneous_dim as f64
    }

    /// Fujita exponent `p_F = 1 + 2/Q`. Below it every positive datum blows
    /// up; above it small data live globally.
    pub fn fujita_exponent(&self) -> f64 {
        1.0 + 2.0 / self.q()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Group product `a ∘ b`.
pub fn compose(a: &GroupPoint, b: &GroupPoint) -> GroupPoint {
    debug_assert_eq!(a.n(), b.n(), "compose requires matching n");
    let x = a.x.iter().zip(&b.x).map(|(u, v)| u + v).collect();
    let y = a.y.iter().zip(&b.y).map(|(u, v)| u + v).collect();
    let twist = 2.0 * (dot(&a.x, &b.y) - dot(&b.x, &a.y));
    GroupPoint {
        x,
        y,
        tau: a.tau + b.tau + twist,
    }
}

/// Group inverse; for this product simply `-a`.
pub fn inverse(a: &GroupPoint) -> GroupPoint {
    GroupPoint {
        x: a.x.iter().map(|v| -v).collect(),
        y: a.y.iter().map(|v| -v).collect(),
        tau: -a.tau,
    }
}

/// Homogeneous gauge `((|x|² + |y|²)² + τ²)^{1/4}`.
pub fn gauge(a: &GroupPoint) -> f64 {
    let r2 = dot(&a.x, &a.x) + dot(&a.y, &a.y);
    (r2 * r2 + a.tau * a.tau).sqrt().sqrt()
}

/// Gauge evaluated on raw `H_1`-style coordinates; the grid loops use this
/// to avoid building `GroupPoint`s node by node.
pub fn gauge_coords(r2: f64, tau: f64) -> f64 {
    (r2 * r2 + tau * tau).sqrt().sqrt()
}

/// Left-invariant distance `d(a, b) = |b⁻¹ ∘ a|_H`.
pub fn distance(a: &GroupPoint, b: &GroupPoint) -> f64 {
    gauge(&compose(&inverse(b), a))
}

/// Anisotropic dilation `δ_r(x, y, τ) = (rx, ry, r²τ)`.
pub fn dilate(r: f64, a: &GroupPoint) -> GroupPoint {
    GroupPoint {
        x: a.x.iter().map(|v| r * v).collect(),
        y: a.y.iter().map(|v| r * v).collect(),
        tau: r * r * a.tau,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn product_twists_the_center() {
        let a = GroupPoint::h1(1.0, 0.0, 0.0);
        let b = GroupPoint::h1(0.0, 1.0, 0.0);
        let ab = compose(&a, &b);
        assert_eq!(ab, GroupPoint::h1(1.0, 1.0, 2.0));
        // reversing the factors flips the twist sign
        let ba = compose(&b, &a);
        assert_eq!(ba, GroupPoint::h1(1.0, 1.0, -2.0));
    }

    #[test]
    fn inverse_composes_to_identity_exactly() {
        let a = GroupPoint::h1(0.3, -1.7, 2.9);
        let e = compose(&inverse(&a), &a);
        assert_eq!(e, GroupPoint::identity(1), "b⁻¹∘b must vanish exactly");
        let e2 = compose(&a, &inverse(&a));
        assert_eq!(e2, GroupPoint::identity(1));
    }

    #[test]
    fn gauge_of_pure_center_point() {
        let p = GroupPoint::h1(0.0, 0.0, 4.0);
        assert_eq!(gauge(&p), 2.0, "fourth root of τ² = 16");
    }

    #[test]
    fn distance_to_identity_is_the_gauge() {
        let p = GroupPoint::h1(1.0, 1.0, 2.0);
        let d = distance(&p, &GroupPoint::identity(1));
        let expected = 8.0_f64.sqrt().sqrt();
        assert!(
            (d - expected).abs() < 1e-15,
            "d = {d}, expected 8^(1/4) = {expected}"
        );
    }

    #[test]
    fn dilation_scales_tau_quadratically() {
        let p = GroupPoint::h1(1.0, 0.0, 3.0);
        assert_eq!(dilate(2.0, &p), GroupPoint::h1(2.0, 0.0, 12.0));
    }

    #[test]
    fn fujita_exponent_values() {
        assert_eq!(GroupParams::new(1).unwrap().fujita_exponent(), 1.5);
        let q6 = GroupParams::new(2).unwrap();
        assert_eq!(q6.homogeneous_dim, 6);
        assert!((q6.fujita_exponent() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_coordinate_lengths() {
        assert!(GroupPoint::new(vec![1.0], vec![1.0, 2.0], 0.0).is_err());
        assert!(GroupParams::new(0).is_err());
    }

    fn point_in(range: f64) -> impl Strategy<Value = GroupPoint> {
        (
            -range..range,
            -range..range,
            -range..range,
        )
            .prop_map(|(x, y, tau)| GroupPoint::h1(x, y, tau))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        /// Associativity in floating point, relative to the component scale.
        #[test]
        fn compose_is_associative(a in point_in(10.0), b in point_in(10.0), c in point_in(10.0)) {
            let lhs = compose(&compose(&a, &b), &c);
            let rhs = compose(&a, &compose(&b, &c));
            let scale = 1.0 + lhs.tau.abs().max(rhs.tau.abs());
            prop_assert!((lhs.x[0] - rhs.x[0]).abs() <= 1e-12);
            prop_assert!((lhs.y[0] - rhs.y[0]).abs() <= 1e-12);
            prop_assert!((lhs.tau - rhs.tau).abs() <= 1e-12 * scale,
                "tau mismatch: {} vs {}", lhs.tau, rhs.tau);
        }

        /// Degree-one homogeneity of the gauge under δ_r.
        #[test]
        fn gauge_is_homogeneous(a in point_in(10.0), r in 0.01f64..100.0) {
            let lhs = gauge(&dilate(r, &a));
            let rhs = r * gauge(&a);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300),
                "|δ_r a| = {lhs} vs r|a| = {rhs}");
        }

        /// Dilations are group homomorphisms.
        #[test]
        fn dilation_respects_the_product(a in point_in(10.0), b in point_in(10.0), r in 0.01f64..10.0) {
            let lhs = dilate(r, &compose(&a, &b));
            let rhs = compose(&dilate(r, &a), &dilate(r, &b));
            let scale = 1.0 + lhs.tau.abs();
            prop_assert!((lhs.tau - rhs.tau).abs() <= 1e-12 * scale);
            prop_assert!((lhs.x[0] - rhs.x[0]).abs() <= 1e-12 * (1.0 + lhs.x[0].abs()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10000))]

        /// Triangle inequality for the gauge: |a ∘ b| ≤ |a| + |b|.
        #[test]
        fn gauge_triangle_inequality(a in point_in(10.0), b in point_in(10.0)) {
            let lhs = gauge(&compose(&a, &b));
            let rhs = gauge(&a) + gauge(&b);
            prop_assert!(lhs <= rhs + 1e-12, "|ab| = {lhs} > |a| + |b| = {rhs}");
        }

        /// Reverse triangle inequality for the induced distance.
        #[test]
        fn reverse_triangle_inequality(a in point_in(10.0), b in point_in(10.0)) {
            let e = GroupPoint::identity(1);
            let lhs = (gauge(&a) - gauge(&b)).abs();
            let d = distance(&a, &b);
            prop_assert!(lhs <= d + 1e-12,
                "||a| - |b|| = {lhs} exceeds d(a,b) = {d}");
            // distance is symmetric up to the same slack
            prop_assert!((d - distance(&b, &a)).abs() <= 1e-12 * (1.0 + d));
            let _ = e;
        }

        /// Left invariance: d(ζ∘a, ζ∘b) = d(a, b).
        #[test]
        fn distance_is_left_invariant(a in point_in(10.0), b in point_in(10.0), z in point_in(10.0)) {
            let d0 = distance(&a, &b);
            let d1 = distance(&compose(&z, &a), &compose(&z, &b));
            prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0),
                "left translation changed the distance: {d0} vs {d1}");
        }
    }
}
