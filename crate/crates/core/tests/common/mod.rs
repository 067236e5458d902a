#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use thbfrac::hierarchy::{mark_admissible_closure, Cell, HierarchicalMesh, ThbSpace};

/// Random admissible refinement of an 8×8 quadratic mesh.
pub fn random_mesh<R: Rng>(rng: &mut R, steps: usize, max_level: usize) -> HierarchicalMesh<2> {
    let mut mesh = HierarchicalMesh::unit(2, [8, 8], max_level);
    for _ in 0..steps {
        let candidates: Vec<Cell<2>> = mesh
            .active_cells()
            .into_iter()
            .filter(|c| c.level < max_level)
            .collect();
        if candidates.is_empty() {
            break;
        }
        let k = rng.gen_range(1..=4.min(candidates.len()));
        let marked: Vec<_> = candidates.choose_multiple(rng, k).copied().collect();
        let closed = mark_admissible_closure(&mesh, &marked, 2);
        mesh = mesh.refine(&closed).unwrap();
    }
    mesh
}

pub fn random_point<R: Rng>(rng: &mut R) -> [f64; 2] {
    [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)]
}

pub fn pou_error(space: &ThbSpace<2>, p: &[f64; 2]) -> f64 {
    let s: f64 = space.eval(p, 0).unwrap().iter().map(|b| b.value).sum();
    (s - 1.0).abs()
}

/// Greville abscissa of an active function; linear fields have these as coefficients.
pub fn greville(space: &ThbSpace<2>, dof: usize) -> [f64; 2] {
    let f = space.function(dof);
    let p = space.degree();
    let kv = space.knots(f.level);
    std::array::from_fn(|k| kv[k].knots()[f.index[k] + 1..=f.index[k] + p].iter().sum::<f64>() / p as f64)
}

/// Interleaved displacement coefficients of the linear field `u(x) = a + B x`.
pub fn linear_displacement(space: &ThbSpace<2>, a: [f64; 2], b: [[f64; 2]; 2]) -> Vec<f64> {
    let mut u = vec![0.0; 2 * space.num_dofs()];
    for i in 0..space.num_dofs() {
        let g = greville(space, i);
        for c in 0..2 {
            u[2 * i + c] = a[c] + b[c][0] * g[0] + b[c][1] * g[1];
        }
    }
    u
}

/// Active functions below the finest level whose support reaches two undamaged regions
/// that the set `{damage ≥ 0.95}` separates. Components are labelled on an `n × n` grid of
/// cell centres with 4-connectivity.
pub fn cross_talk_violations(space: &ThbSpace<2>, damage: impl Fn(&[f64; 2]) -> f64, n: usize) -> Vec<usize> {
    let mesh = space.mesh();
    let (lo, hi) = (mesh.lower(), mesh.upper());
    let point = |i: usize, j: usize| {
        [
            lo[0] + (i as f64 + 0.5) / n as f64 * (hi[0] - lo[0]),
            lo[1] + (j as f64 + 0.5) / n as f64 * (hi[1] - lo[1]),
        ]
    };
    let intact: Vec<bool> = (0..n * n).map(|k| damage(&point(k % n, k / n)) < 0.95).collect();
    let mut label = vec![usize::MAX; n * n];
    let mut next = 0;
    for start in 0..n * n {
        if !intact[start] || label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(k) = stack.pop() {
            let (i, j) = (k % n, k / n);
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(k - 1);
            }
            if i + 1 < n {
                nb.push(k + 1);
            }
            if j > 0 {
                nb.push(k - n);
            }
            if j + 1 < n {
                nb.push(k + n);
            }
            for m in nb {
                if intact[m] && label[m] == usize::MAX {
                    label[m] = next;
                    stack.push(m);
                }
            }
        }
        next += 1;
    }
    (0..space.num_dofs())
        .filter(|&dof| {
            let f = space.function(dof);
            if f.level >= mesh.max_level() {
                return false;
            }
            let (clo, chi) = space.support(&f);
            let (blo, _) = mesh.cell_bounds(&Cell::new(f.level, clo));
            let (_, bhi) = mesh.cell_bounds(&Cell::new(f.level, chi));
            let mut seen = None;
            for k in 0..n * n {
                if label[k] == usize::MAX {
                    continue;
                }
                let p = point(k % n, k / n);
                if p[0] > blo[0] && p[0] < bhi[0] && p[1] > blo[1] && p[1] < bhi[1] {
                    match seen {
                        None => seen = Some(label[k]),
                        Some(l) if l != label[k] => return true,
                        _ => {}
                    }
                }
            }
            false
        })
        .collect()
}

pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = (0..n).map(|k| b[i][k] * b[j][k]).sum::<f64>();
        }
        a[i][i] += n as f64;
    }
    a
}

/// Dense Cholesky solve.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = if i == j { (a[i][i] - s).sqrt() } else { (a[i][j] - s) / l[j][j] };
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

/// Enumerate all free sets and return the complementary feasible point.
pub fn brute_force_lcp(q: &[Vec<f64>], r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut found = None;
    for mask in 0u32..(1 << n) {
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| q[i][j]).collect()).collect();
        let rhs: Vec<f64> = free.iter().map(|&i| r[i]).collect();
        let xf = dense_solve(&sub, &rhs);
        let mut x = vec![0.0; n];
        for (k, &i) in free.iter().enumerate() {
            x[i] = xf[k];
        }
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * x[j]).sum::<f64>() - r[i]).collect();
        if x.iter().all(|&v| v >= -1e-12) && w.iter().all(|&v| v >= -1e-12) {
            assert!(found.is_none(), "LCP with SPD matrix has a unique solution");
            found = Some(x);
        }
    }
    found.expect("SPD LCP is solvable")
}
