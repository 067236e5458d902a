use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thbfrac::splines::{gauss_legendre, two_scale_row, two_scale_table, KnotVector};
use thbfrac::Error;

fn eighths() -> KnotVector {
    KnotVector::uniform(2, 8, 0.0, 1.0)
}

#[test]
fn quadratic_values_mid_span() {
    let e = eighths().eval(9.0 / 16.0, 0).unwrap();
    assert_eq!(e.first, 4);
    for (v, want) in e.ders[0].iter().zip([0.125, 0.75, 0.125]) {
        assert_abs_diff_eq!(*v, want, epsilon = 1e-15);
    }
}

#[test]
fn quadratic_values_clamped_end() {
    let e = eighths().eval(1.0 / 16.0, 0).unwrap();
    assert_eq!(e.first, 0);
    for (v, want) in e.ders[0].iter().zip([0.25, 0.625, 0.125]) {
        assert_abs_diff_eq!(*v, want, epsilon = 1e-15);
    }
}

#[test]
fn partition_of_unity_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kv in [eighths(), KnotVector::uniform(3, 7, -1.0, 2.0), KnotVector::uniform(1, 5, 0.0, 1.0)] {
        for _ in 0..1000 {
            let x = rng.gen_range(kv.first()..=kv.last());
            let e = kv.eval(x, 1).unwrap();
            assert_abs_diff_eq!(e.ders[0].iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(e.ders[1].iter().sum::<f64>(), 0.0, epsilon = 1e-9);
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.2, 0.5, 0.55, 1.0, 1.0, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    for _ in 0..200 {
        let x: f64 = rng.gen_range(0.01..0.99);
        let span = kv.find_span(x).unwrap();
        // Keep the stencil inside one span.
        let t = kv.knots();
        if x - h <= t[span] || x + h >= t[span + 1] {
            continue;
        }
        let e = kv.eval_in_span(x, span, 2);
        let ep = kv.eval_in_span(x + h, span, 1);
        let em = kv.eval_in_span(x - h, span, 1);
        for j in 0..3 {
            let d1 = (ep.ders[0][j] - em.ders[0][j]) / (2.0 * h);
            let d2 = (ep.ders[1][j] - em.ders[1][j]) / (2.0 * h);
            assert!((d1 - e.ders[1][j]).abs() <= 1e-5 * e.ders[1][j].abs().max(1.0));
            assert!((d2 - e.ders[2][j]).abs() <= 1e-5 * e.ders[2][j].abs().max(1.0));
        }
    }
}

#[test]
fn evaluation_outside_range_fails() {
    assert!(matches!(eighths().eval(1.5, 0), Err(Error::Domain(_))));
    assert!(matches!(eighths().eval(-1e-9, 0), Err(Error::Domain(_))));
    assert!(eighths().eval(1.0, 2).is_ok());
}

#[test]
fn invalid_knot_vectors_rejected() {
    assert!(KnotVector::new(2, vec![0.0, 0.0, 0.5, 1.0, 1.0, 1.0]).is_err());
    assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.6, 0.4, 1.0, 1.0, 1.0]).is_err());
    assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0]).is_err());
    assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0]).is_ok());
}

#[test]
fn dyadic_refinement_bisects_spans() {
    let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!(kv.dyadic_refine().knots(), &[0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0]);
    let fine = eighths().dyadic_refine();
    assert_eq!(fine, KnotVector::uniform(2, 16, 0.0, 1.0));
    let one = KnotVector::uniform(1, 1, 0.0, 1.0);
    assert_eq!(one.dyadic_refine().dyadic_refine().num_elements(), 4);
}

#[test]
fn two_scale_rows_match_subdivision() {
    let lin = KnotVector::uniform(1, 4, 0.0, 1.0);
    let row = two_scale_row(&lin, &lin.dyadic_refine(), 2).unwrap();
    assert_eq!(row, vec![(3, 0.5), (4, 1.0), (5, 0.5)]);

    let quad = eighths();
    let fine = quad.dyadic_refine();
    let row = two_scale_row(&quad, &fine, 4).unwrap();
    let vals: Vec<f64> = row.iter().map(|r| r.1).collect();
    assert_eq!(vals, vec![0.25, 0.75, 0.75, 0.25]);
    assert_eq!(row[0].0, 6);

    let row = two_scale_row(&quad, &fine, 0).unwrap();
    assert_eq!(row, vec![(0, 1.0), (1, 0.5)]);

    assert!(matches!(
        two_scale_row(&quad, &fine, quad.num_basis()),
        Err(Error::IndexOutOfRange { .. })
    ));
}

#[test]
fn two_scale_rows_reproduce_coarse_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kv in [eighths(), KnotVector::uniform(2, 5, 0.0, 1.0), KnotVector::uniform(3, 6, 0.0, 2.0)] {
        let fine = kv.dyadic_refine();
        let table = two_scale_table(&kv);
        for (i, row) in table.iter().enumerate() {
            for _ in 0..100 {
                let x = rng.gen_range(kv.first()..=kv.last());
                let c = kv.eval(x, 0).unwrap();
                let f = fine.eval(x, 0).unwrap();
                let coarse = if i >= c.first && i <= c.first + kv.degree() { c.ders[0][i - c.first] } else { 0.0 };
                let sum: f64 = row
                    .iter()
                    .filter(|(j, _)| *j >= f.first && *j <= f.first + kv.degree())
                    .map(|(j, v)| v * f.ders[0][j - f.first])
                    .sum();
                assert_abs_diff_eq!(coarse, sum, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
    for n in 1..=6 {
        let (x, w) = gauss_legendre(n);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        for k in 0..2 * n {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k + 1) as f64 };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            assert_abs_diff_eq!(q, exact, epsilon = 1e-13);
        }
    }
}
