use gradstate::linalg::CsrMatrix;
use gradstate::projections::{
    project_box, project_ellipsoid, prox_support_ellipsoid, support_function_ellipsoid, BoxSet, EllipsoidSet,
};
use proptest::prelude::*;

/// Tridiagonal SPD metric `tridiag(-b, a, -b)` with `a > 2b`.
fn tridiagonal(n: usize, a: f64, b: f64) -> CsrMatrix<f64> {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, a));
        if i + 1 < n {
            t.push((i, i + 1, -b));
            t.push((i + 1, i, -b));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(-5.0..5.0f64, n))
}

proptest! {
    #[test]
    fn ellipsoid_projection_is_nonexpansive(
        (g, h) in (1usize..20).prop_flat_map(pair),
        a in 2.5..6.0f64,
        b in 0.0..1.0f64,
        delta in 0.1..3.0f64,
    ) {
        let set = EllipsoidSet::new(tridiagonal(g.len(), a, b), delta).unwrap();
        let pg = project_ellipsoid(&g, &set, 1e-12).unwrap();
        let ph = project_ellipsoid(&h, &set, 1e-12).unwrap();
        prop_assert!(dist(&pg.x, &ph.x) <= dist(&g, &h) + 1e-10);
        prop_assert!(set.contains(&pg.x));
        // idempotent
        let again = project_ellipsoid(&pg.x, &set, 1e-12).unwrap();
        prop_assert!(dist(&again.x, &pg.x) <= 1e-9);
    }

    #[test]
    fn box_projection_is_nonexpansive((g, h) in (1usize..30).prop_flat_map(pair), lo in -3.0..0.0f64, w in 0.0..3.0f64) {
        let s = BoxSet::new(lo, lo + w).unwrap();
        let (pg, ph) = (project_box(&g, &s), project_box(&h, &s));
        prop_assert!(dist(&pg, &ph) <= dist(&g, &h) + 1e-12);
        prop_assert!(s.contains(&pg));
    }

    #[test]
    fn moreau_decomposition((d, _) in (1usize..15).prop_flat_map(pair), sigma in 0.1..10.0f64, delta in 0.1..3.0f64) {
        // d = prox_{δ*_C/σ}(d) + (1/σ) Π_C(σd)
        let set = EllipsoidSet::new(tridiagonal(d.len(), 3.0, 1.0), delta).unwrap();
        let (prox, proj) = prox_support_ellipsoid(&d, sigma, &set, 1e-12).unwrap();
        for i in 0..d.len() {
            prop_assert!((prox[i] + proj.x[i] / sigma - d[i]).abs() <= 1e-10 * (1.0 + d[i].abs()));
        }
        // Fenchel-Young with equality at the pair (Π_C(σd), prox)
        let support = support_function_ellipsoid(&prox, &set).unwrap();
        let inner: f64 = prox.iter().zip(&proj.x).map(|(a, b)| a * b).sum();
        prop_assert!((support - inner).abs() <= 1e-8 * (1.0 + support.abs()));
    }
}
