use std::sync::OnceLock;

use crate::model::{Family, ModelSpec, Order};
use crate::solvers::solve_linear;
use crate::sparse::CsrMatrix;

/// Minimiser of the half-line dissipation `∫₀^L c_d d^β + c_g d'² + c_l d''²` with `d(0) = 1`.
///
/// Nodes `r_i = i L / (n − 1)`; `d'(0) = 0` by a mirror ghost node for the Laplacian term, `d = 0`
/// beyond `L`, and `d ≥ 0` enforced by a primal-dual active-set iteration.
pub fn fd_profile(spec: &ModelSpec, length: f64, n: usize) -> Vec<f64> {
    assert!(n >= 3);
    let h = length / (n - 1) as f64;
    let m = n - 1; // unknowns d_1 .. d_{n-1}
    let mut t: Vec<(usize, usize, f64)> = Vec::new();
    let mut b = vec![0.0; m];
    // Quadratic form ½ xᵀ A x − bᵀ x over the full node vector, d_0 = 1 eliminated.
    let full = |i: usize, j: usize, v: f64, t: &mut Vec<(usize, usize, f64)>, b: &mut Vec<f64>| {
        match (i, j) {
            (0, 0) => {}
            (0, j) => b[j - 1] -= v,
            (_, 0) => {}
            (i, j) => t.push((i - 1, j - 1, v)),
        }
    };
    let add_sq = |stencil: &[(isize, f64)], w: f64, t: &mut Vec<(usize, usize, f64)>, b: &mut Vec<f64>| {
        // Adds w (Σ c_k d_k)² to the energy; indices beyond the last node are zero.
        for &(i, ci) in stencil {
            for &(j, cj) in stencil {
                if i < 0 || j < 0 || i as usize >= n || j as usize >= n {
                    continue;
                }
                full(i as usize, j as usize, 2.0 * w * ci * cj, t, b);
            }
        }
    };
    for i in 0..n - 1 {
        let s = [(i as isize, -1.0 / h), (i as isize + 1, 1.0 / h)];
        add_sq(&s, spec.c_g * h, &mut t, &mut b);
    }
    if spec.c_l > 0.0 {
        // Mirror ghost d_{-1} = d_1 at the crack centre.
        let c = 1.0 / (h * h);
        add_sq(&[(1, 2.0 * c), (0, -2.0 * c)], spec.c_l * h * 0.5, &mut t, &mut b);
        for i in 1..n {
            let s = [(i as isize - 1, c), (i as isize, -2.0 * c), (i as isize + 1, c)];
            add_sq(&s, spec.c_l * h, &mut t, &mut b);
        }
    }
    let mut lin = vec![0.0; m];
    for i in 1..n {
        let w = if i == n - 1 { 0.5 * h } else { h };
        if spec.beta == 2 {
            t.push((i - 1, i - 1, 2.0 * spec.c_d * w));
        } else {
            lin[i - 1] = spec.c_d * w;
        }
    }
    for (bi, li) in b.iter_mut().zip(&lin) {
        *bi -= li;
    }
    let a = CsrMatrix::from_triplets(m, m, t);

    // Primal-dual active set for x ≥ 0, Ax − b ≥ 0, complementarity.
    let mut active = vec![false; m];
    let mut x = vec![0.0; m];
    // The free boundary moves by about one node per sweep.
    let mut converged = false;
    for _ in 0..4 * n {
        let free: Vec<usize> = (0..m).filter(|&i| !active[i]).collect();
        let rhs: Vec<f64> = free.iter().map(|&i| b[i]).collect();
        let xf = solve_linear(&a.submatrix(&free), &rhs).expect("profile system is positive definite");
        x.fill(0.0);
        for (k, &i) in free.iter().enumerate() {
            x[i] = xf[k];
        }
        let ax = a.mul_vec(&x);
        let next: Vec<bool> = (0..m).map(|i| {
            let lambda = if active[i] { ax[i] - b[i] } else { 0.0 };
            lambda - x[i] > 0.0
        }).collect();
        if next == active {
            converged = true;
            break;
        }
        active = next;
    }
    assert!(converged, "active-set iteration for the profile did not settle");
    let mut d = Vec::with_capacity(n);
    d.push(1.0);
    d.extend(x);
    d
}

/// Tabulated fourth-order AT1 profile for unit internal length.
fn at1_fourth_table() -> &'static (f64, Vec<f64>) {
    static TABLE: OnceLock<(f64, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let spec = ModelSpec::new(Family::At1, Order::Fourth, 1.0);
        let length = 8.0;
        let mut d = fd_profile(&spec, length, 2001);
        // Enforce monotone decay against round-off in the flat tail.
        for i in 1..d.len() {
            d[i] = d[i].min(d[i - 1]).max(0.0);
        }
        (length, d)
    })
}

/// Optimal 1D damage profile at distance `r ≥ 0` from the crack.
pub fn optimal_profile(spec: &ModelSpec, l0: f64, r: f64) -> f64 {
    let s = r.abs() / l0;
    match (spec.family, spec.order) {
        (Family::At2, Order::Second) => (-s).exp(),
        (Family::At2, Order::Fourth) => (-2.0 * s).exp() * (1.0 + 2.0 * s),
        (Family::At1, Order::Second) => (1.0 - 0.5 * s).max(0.0).powi(2),
        (Family::At1, Order::Fourth) => {
            let (length, d) = at1_fourth_table();
            if s >= *length {
                return 0.0;
            }
            let x = s / length * (d.len() - 1) as f64;
            let i = (x.floor() as usize).min(d.len() - 2);
            let f = x - i as f64;
            d[i] * (1.0 - f) + d[i + 1] * f
        }
    }
}
