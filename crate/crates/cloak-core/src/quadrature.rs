//! Fixed quadrature rules and P2 shape functions on the reference
//! triangle and reference edge.
//!
//! The triangle rule is the 6-point degree-4 Dunavant rule, exact for
//! products of two P2 functions with constant coefficients. The edge
//! rule is 3-point Gauss-Legendre, exact up to degree 5.

/// Barycentric quadrature points `(l1, l2, l3)` and weights for the
/// 6-point degree-4 rule. Weights sum to 1; multiply by the triangle
/// area when integrating.
pub const TRI_POINTS: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.108_103_018_168_070;
    const B1: f64 = 0.445_948_490_915_965;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.816_847_572_980_459;
    const B2: f64 = 0.091_576_213_509_771;
    const W2: f64 = 0.109_951_743_655_322;
    [
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Gauss-Legendre points and weights on [-1, 1], degree 5.
pub const EDGE_POINTS: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    (0.0, 0.888_888_888_888_888_9),
    (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
];

/// Values of the six P2 shape functions at barycentric coordinates.
///
/// Local node order: vertices 0,1,2 then midpoints of edges (0,1),
/// (1,2), (2,0).
pub fn p2_shape(l: [f64; 3]) -> [f64; 6] {
    let [l1, l2, l3] = l;
    [
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        l3 * (2.0 * l3 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l3,
        4.0 * l3 * l1,
    ]
}

/// Gradients of the six P2 shape functions with respect to the
/// barycentric coordinates; chain with the (constant) barycentric
/// gradients of the physical triangle to get physical gradients.
pub fn p2_shape_dl(l: [f64; 3]) -> [[f64; 3]; 6] {
    let [l1, l2, l3] = l;
    [
        [4.0 * l1 - 1.0, 0.0, 0.0],
        [0.0, 4.0 * l2 - 1.0, 0.0],
        [0.0, 0.0, 4.0 * l3 - 1.0],
        [4.0 * l2, 4.0 * l1, 0.0],
        [0.0, 4.0 * l3, 4.0 * l2],
        [4.0 * l3, 0.0, 4.0 * l1],
    ]
}

/// Values of the three quadratic shape functions on the reference edge
/// xi in [-1, 1]. Node order: endpoint (-1), endpoint (+1), midpoint.
pub fn edge_shape(xi: f64) -> [f64; 3] {
    [
        0.5 * xi * (xi - 1.0),
        0.5 * xi * (xi + 1.0),
        1.0 - xi * xi,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tri_weights_sum_to_one() {
        let s: f64 = TRI_POINTS.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn tri_rule_exact_degree_4() {
        // integral of l1^a * l2^b over the reference triangle (area 1/2)
        // is a! b! 2! / (a + b + 2 + ...)! per the standard formula
        // a! b! c! * 2A / (a+b+c+2)! with c = 0.
        let cases = [
            ((0u32, 0u32), 1.0 / 2.0),
            ((1, 0), 1.0 / 6.0),
            ((2, 0), 1.0 / 12.0),
            ((1, 1), 1.0 / 24.0),
            ((2, 2), 1.0 / 180.0),
            ((4, 0), 1.0 / 30.0),
            ((3, 1), 1.0 / 120.0),
        ];
        for ((a, b), exact) in cases {
            let approx: f64 = TRI_POINTS
                .iter()
                .map(|(l, w)| 0.5 * w * l[0].powi(a as i32) * l[1].powi(b as i32))
                .sum();
            assert_relative_eq!(approx, exact, epsilon = 1e-15);
        }
    }

    #[test]
    fn edge_rule_exact_degree_5() {
        for k in 0..=5u32 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let approx: f64 = EDGE_POINTS
                .iter()
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            assert_relative_eq!(approx, exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn p2_partition_of_unity() {
        for (l, _) in TRI_POINTS {
            let s: f64 = p2_shape(l).iter().sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn p2_nodal_values() {
        // each shape function is 1 at its node, 0 at the others
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        for (i, l) in nodes.iter().enumerate() {
            let vals = p2_shape(*l);
            for (j, v) in vals.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(*v, expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn edge_shape_nodal_values() {
        let v = edge_shape(-1.0);
        assert_relative_eq!(v[0], 1.0);
        assert_relative_eq!(v[1], 0.0);
        assert_relative_eq!(v[2], 0.0);
        let v = edge_shape(0.0);
        assert_relative_eq!(v[2], 1.0);
    }
}
