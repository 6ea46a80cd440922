//! Brute-force reference computations used to cross-check the fast paths.
//!
//! Nothing here shares code with the routines it checks: assignment costs are
//! enumerated over every injection, Jacobians are taken by central
//! differences, DBSCAN partitions are rebuilt from an explicit neighbor graph
//! with union-find, and the WELM check solves both closed forms. The
//! `oracle-check` CLI command and the test suites both run these.

use crate::error::Result;

/// Minimum total cost over every one-to-one pairing of size `min(n, m)`,
/// by exhaustive enumeration. Costs are summed in row order.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    let mut best = f64::INFINITY;
    let mut used = vec![false; cols.max(rows)];
    let mut pairs = Vec::with_capacity(rows.min(cols));

    if rows <= cols {
        fn rec(
            r: usize,
            cost: &[Vec<f64>],
            used: &mut [bool],
            pairs: &mut Vec<(usize, usize)>,
            best: &mut f64,
        ) {
            if r == cost.len() {
                let total: f64 = pairs.iter().map(|&(r, c)| cost[r][c]).sum();
                if total < *best {
                    *best = total;
                }
                return;
            }
            for c in 0..cost[0].len() {
                if !used[c] {
                    used[c] = true;
                    pairs.push((r, c));
                    rec(r + 1, cost, used, pairs, best);
                    pairs.pop();
                    used[c] = false;
                }
            }
        }
        rec(0, cost, &mut used, &mut pairs, &mut best);
    } else {
        fn rec(
            c: usize,
            cost: &[Vec<f64>],
            used: &mut [bool],
            pairs: &mut Vec<(usize, usize)>,
            best: &mut f64,
        ) {
            if c == cost[0].len() {
                let mut sorted = pairs.clone();
                sorted.sort_unstable();
                let total: f64 = sorted.iter().map(|&(r, c)| cost[r][c]).sum();
                if total < *best {
                    *best = total;
                }
                return;
            }
            for r in 0..cost.len() {
                if !used[r] {
                    used[r] = true;
                    pairs.push((r, c));
                    rec(c + 1, cost, used, pairs, best);
                    pairs.pop();
                    used[r] = false;
                }
            }
        }
        rec(0, cost, &mut used, &mut pairs, &mut best);
    }
    best
}

/// Central-difference Jacobian of `f: R^n -> R^m` at `x`.
pub fn finite_difference_jacobian(
    f: impl Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    step: f64,
) -> Vec<Vec<f64>> {
    let m = f(x).len();
    let mut jac = vec![vec![0.0; x.len()]; m];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = step * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// DBSCAN partition rebuilt from first principles: mark core points by
/// counting neighbors, union every pair of core points within `eps`, then
/// attach each border point to the component of its lowest-index core
/// neighbor. Returns one component id per point, `None` for noise.
pub fn brute_force_dbscan(points: &[[f64; 2]], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let near = |a: usize, b: usize| {
        let dx = points[a][0] - points[b][0];
        let dy = points[a][1] - points[b][1];
        dx * dx + dy * dy <= eps * eps
    };
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts)
        .collect();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            if core[i] {
                Some(find(&mut parent, i))
            } else {
                (0..n)
                    .find(|&j| core[j] && near(i, j))
                    .map(|j| find(&mut parent, j))
            }
        })
        .collect()
}

/// Whether two labelings describe the same partition (up to renumbering).
/// Noise must coincide exactly.
pub fn same_partition<A: Eq + Copy + std::hash::Hash, B: Eq + Copy + std::hash::Hash>(
    a: &[Option<A>],
    b: &[Option<B>],
) -> bool {
    use std::collections::HashMap;
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: HashMap<A, B> = HashMap::new();
    let mut bwd: HashMap<B, A> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        match (x, y) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                if *fwd.entry(*x).or_insert(*y) != *y || *bwd.entry(*y).or_insert(*x) != *x {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

/// Outcome of one named oracle suite.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleOutcome {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
}

impl OracleOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs every oracle suite with modest sizes; used by the `oracle-check`
/// command.
pub fn run_all(seed: u64) -> Result<Vec<OracleOutcome>> {
    Ok(vec![
        suites::assignment(seed, 200)?,
        suites::welm_dual_forms(seed, 6)?,
        suites::ekf_jacobians(seed, 100)?,
        suites::dbscan(seed, 100),
    ])
}

pub mod suites {
    //! Randomized oracle suites shared by the CLI and the acceptance tests.

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;
    use crate::assignment::solve_assignment;
    use crate::clustering::dbscan as run_dbscan;
    use crate::config::SystemConfig;
    use crate::reid::{welm_dual_form_gap, FeatureStore, GaitFeature, FEATURE_DIM};
    use crate::thermal_track::{FaceState, ProcessModel};

    pub fn assignment(seed: u64, cases: usize) -> Result<OracleOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..cases {
            let n = rng.random_range(1..=7);
            let m = rng.random_range(1..=7);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.random_range(-10.0..10.0)).collect())
                .collect();
            let fast = solve_assignment(&cost)?.total_cost;
            let slow = brute_force_assignment(&cost);
            worst = worst.max((fast - slow).abs());
            if fast != slow {
                failures += 1;
            }
        }
        Ok(OracleOutcome {
            name: "assignment".into(),
            cases,
            failures,
            worst,
        })
    }

    /// Random store with `size` samples spread over `classes` labels.
    pub fn random_store(rng: &mut impl Rng, size: usize, classes: usize) -> FeatureStore {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut store = FeatureStore::default();
        for i in 0..size {
            let label = if i < classes {
                i
            } else {
                rng.random_range(0..classes)
            };
            let raw: Vec<f64> = (0..FEATURE_DIM)
                .map(|_| normal.sample(rng) + label as f64 * 0.3)
                .collect();
            store.push(
                label as u64,
                GaitFeature::from_raw(raw, 0, 0).expect("nonzero"),
            );
        }
        store
    }

    pub fn welm_dual_forms(seed: u64, cases: usize) -> Result<OracleOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = [10usize, 500, 3000];
        let mut failures = 0;
        let mut worst: f64 = 0.0;
        for i in 0..cases {
            let store = random_store(&mut rng, sizes[i % sizes.len()], 6);
            let gap = welm_dual_form_gap(&store, 1024, 0.1, 0.1, rng.random())?;
            worst = worst.max(gap);
            if !(gap <= 1e-8) {
                failures += 1;
            }
        }
        Ok(OracleOutcome {
            name: "welm_dual_forms".into(),
            cases,
            failures,
            worst,
        })
    }

    /// Random EKF state in the operating range.
    pub fn random_face_state(rng: &mut impl Rng) -> FaceState {
        FaceState::from_array([
            rng.random_range(0.0..640.0),
            rng.random_range(0.0..512.0),
            rng.random_range(-200.0..200.0),
            rng.random_range(-200.0..200.0),
            rng.random_range(10.0..120.0),
            rng.random_range(0.6..4.5),
            rng.random_range(-1.5..1.5),
        ])
    }

    /// Largest relative deviation between the analytic Jacobians (state and
    /// noise) and central differences, plus the smallest eigenvalue of the
    /// transformed process noise seen.
    pub fn ekf_jacobian_errors(seed: u64, cases: usize) -> (f64, f64) {
        let cfg = SystemConfig::default();
        let model = ProcessModel::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut min_eig = f64::INFINITY;
        for _ in 0..cases {
            let x = random_face_state(&mut rng);
            let xs = x.to_array();
            let f_jac = model.state_jacobian(&x);
            let l_jac = model.noise_jacobian(&x);
            let fd_f = finite_difference_jacobian(
                |s| {
                    let st = FaceState::from_slice(s);
                    model.transition(&st, [0.0; 4]).to_array().to_vec()
                },
                &xs,
                1e-6,
            );
            let fd_l = finite_difference_jacobian(
                |u| {
                    model
                        .transition(&x, [u[0], u[1], u[2], u[3]])
                        .to_array()
                        .to_vec()
                },
                &[0.0; 4],
                1e-6,
            );
            worst = worst.max(relative_gap(&fd_f, |i, j| f_jac[(i, j)]));
            worst = worst.max(relative_gap(&fd_l, |i, j| l_jac[(i, j)]));
            let q = model.transformed_process_noise(&x);
            let eig = q.symmetric_eigenvalues().min();
            min_eig = min_eig.min(eig);
        }
        (worst, min_eig)
    }

    fn relative_gap(reference: &[Vec<f64>], analytic: impl Fn(usize, usize) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in reference.iter().enumerate() {
            for (j, &r) in row.iter().enumerate() {
                let a = analytic(i, j);
                worst = worst.max((a - r).abs() / r.abs().max(1.0));
            }
        }
        worst
    }

    pub fn ekf_jacobians(seed: u64, cases: usize) -> Result<OracleOutcome> {
        let (worst, min_eig) = ekf_jacobian_errors(seed, cases);
        // Q' is PSD up to round-off.
        let failures = usize::from(!(worst <= 1e-4)) + usize::from(min_eig < -1e-9);
        Ok(OracleOutcome {
            name: "ekf_jacobians".into(),
            cases,
            failures,
            worst,
        })
    }

    pub fn dbscan(seed: u64, cases: usize) -> OracleOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut failures = 0;
        for _ in 0..cases {
            let blobs = rng.random_range(1..=4);
            let mut pts = Vec::new();
            for _ in 0..blobs {
                let c = [rng.random_range(-4.0..4.0), rng.random_range(0.0..6.0)];
                let s = rng.random_range(0.05..0.4);
                for _ in 0..rng.random_range(3..40) {
                    pts.push([
                        c[0] + s * normal.sample(&mut rng),
                        c[1] + s * normal.sample(&mut rng),
                    ]);
                }
            }
            for _ in 0..rng.random_range(0..10) {
                pts.push([rng.random_range(-4.0..4.0), rng.random_range(0.0..6.0)]);
            }
            let eps = rng.random_range(0.1..0.6);
            let min_pts = rng.random_range(1..12);
            let fast = run_dbscan(&pts, eps, min_pts);
            let slow = brute_force_dbscan(&pts, eps, min_pts);
            if !same_core_partition(&pts, eps, min_pts, &fast.labels, &slow) {
                failures += 1;
            }
        }
        OracleOutcome {
            name: "dbscan".into(),
            cases,
            failures,
            worst: failures as f64,
        }
    }

    /// Border points reachable from two clusters may legitimately go to
    /// either; compare the partition of core points plus the noise set, and
    /// check each border point sits next to a core point of its cluster.
    pub fn same_core_partition(
        pts: &[[f64; 2]],
        eps: f64,
        min_pts: usize,
        fast: &[Option<usize>],
        slow: &[Option<usize>],
    ) -> bool {
        let n = pts.len();
        let near = |a: usize, b: usize| {
            let dx = pts[a][0] - pts[b][0];
            let dy = pts[a][1] - pts[b][1];
            dx * dx + dy * dy <= eps * eps
        };
        let core: Vec<bool> = (0..n)
            .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts)
            .collect();
        let fc: Vec<_> = (0..n)
            .map(|i| if core[i] { fast[i] } else { None })
            .collect();
        let sc: Vec<_> = (0..n)
            .map(|i| if core[i] { slow[i] } else { None })
            .collect();
        if !same_partition(&fc, &sc) {
            return false;
        }
        (0..n).all(|i| {
            if core[i] {
                return true;
            }
            match fast[i] {
                None => slow[i].is_none(),
                Some(l) => {
                    slow[i].is_some() && (0..n).any(|j| core[j] && near(i, j) && fast[j] == Some(l))
                }
            }
        })
    }
}
