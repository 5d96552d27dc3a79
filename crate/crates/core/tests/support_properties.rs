use drcvar_safety::geometry::{support, ConvexShape};
use proptest::prelude::*;

/// Random bounded polygon with `k` faces whose outward normals are spread
/// around the circle, so it always contains the origin.
fn polygon(k: usize, jitter: Vec<f64>, offsets: Vec<f64>) -> ConvexShape {
    let step = std::f64::consts::TAU / k as f64;
    let normals = (0..k)
        .map(|i| {
            // gaps stay below 1.4 steps, under a half turn even for triangles
            let angle = i as f64 * step + 0.2 * step * jitter[i];
            vec![angle.cos(), angle.sin()]
        })
        .collect();
    ConvexShape::polytope(normals, offsets[..k].to_vec()).unwrap()
}

fn polygon_strategy(max_faces: usize) -> impl Strategy<Value = ConvexShape> {
    (3..=max_faces).prop_flat_map(move |k| {
        (
            Just(k),
            prop::collection::vec(-1.0..1.0f64, k),
            prop::collection::vec(0.2..2.0f64, k),
        )
            .prop_map(|(k, jitter, offsets)| polygon(k, jitter, offsets))
    })
}

fn shape_strategy() -> impl Strategy<Value = ConvexShape> {
    prop_oneof![
        (0.0..3.0f64).prop_map(|r| ConvexShape::disk(r).unwrap()),
        (0.01..2.0f64, 0.01..2.0f64).prop_map(|(a, b)| ConvexShape::rectangle(a, b).unwrap()),
        polygon_strategy(8),
    ]
}

/// Every pairwise intersection of boundary lines that satisfies all faces.
fn vertices(shape: &ConvexShape) -> Vec<[f64; 2]> {
    let ConvexShape::Polytope { normals, offsets } = shape else {
        panic!("polytope expected");
    };
    let mut out = Vec::new();
    for i in 0..normals.len() {
        for j in i + 1..normals.len() {
            let (a, b) = (&normals[i], &normals[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (offsets[i] * b[1] - a[1] * offsets[j]) / det;
            let y = (a[0] * offsets[j] - offsets[i] * b[0]) / det;
            let feasible = normals
                .iter()
                .zip(offsets)
                .all(|(n, o)| n[0] * x + n[1] * y <= o + 1e-9);
            if feasible {
                out.push([x, y]);
            }
        }
    }
    out
}

fn vertex_support(shape: &ConvexShape, z: &[f64]) -> f64 {
    vertices(shape)
        .iter()
        .map(|v| v[0] * z[0] + v[1] * z[1])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn direction() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn positive_homogeneity(shape in shape_strategy(), z in direction(), c in 0.0..10.0f64) {
        let base = support(&shape, &z).unwrap();
        let scaled_z: Vec<f64> = z.iter().map(|v| c * v).collect();
        let scaled = support(&shape, &scaled_z).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-9 * (1.0 + (c * base).abs()));
    }

    #[test]
    fn subadditivity(shape in shape_strategy(), z1 in direction(), z2 in direction()) {
        let sum: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a + b).collect();
        let lhs = support(&shape, &sum).unwrap();
        let rhs = support(&shape, &z1).unwrap() + support(&shape, &z2).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn polygon_matches_vertex_enumeration(shape in polygon_strategy(8), z in direction()) {
        let expected = vertex_support(&shape, &z);
        prop_assert!((support(&shape, &z).unwrap() - expected).abs() <= 1e-8);
    }

    #[test]
    fn box_matches_vertex_enumeration(a in 0.01..3.0f64, b in 0.01..3.0f64, z in direction()) {
        let shape = ConvexShape::rectangle(a, b).unwrap();
        prop_assert!((support(&shape, &z).unwrap() - vertex_support(&shape, &z)).abs() <= 1e-8);
        prop_assert!((support(&shape, &z).unwrap() - (a * z[0].abs() + b * z[1].abs())).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    // More faces than vertex enumeration handles goes through the LP path.
    #[test]
    fn many_faced_polygon_matches_vertex_enumeration(shape in (17usize..=24).prop_flat_map(|k| {
        (
            Just(k),
            prop::collection::vec(-1.0..1.0f64, k),
            prop::collection::vec(0.5..1.5f64, k),
        )
            .prop_map(|(k, jitter, offsets)| polygon(k, jitter, offsets))
    }), z in direction()) {
        let expected = vertex_support(&shape, &z);
        prop_assert!((support(&shape, &z).unwrap() - expected).abs() <= 1e-6 * (1.0 + expected.abs()));
    }
}

#[test]
fn disk_plus_box_inflation() {
    use drcvar_safety::geometry::pair_inflation;
    let disk = ConvexShape::disk(0.3).unwrap();
    let square = ConvexShape::rectangle(0.1, 0.1).unwrap();
    let value = pair_inflation(&disk, &square, &[1.0, 0.0]).unwrap();
    assert!((value - 0.4).abs() < 1e-12);
}
