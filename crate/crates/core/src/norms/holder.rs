use super::integrals::triangles_in_shrunk;
use crate::error::{Error, Result};
use crate::geometry::{dist, Point, ShrunkRegion};
use crate::solver::SpaceTimeField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderOptions {
    /// Above this many candidate pairs, a seeded sample of this size is used.
    pub pair_budget: usize,
    pub seed: u64,
}

impl Default for HolderOptions {
    fn default() -> Self {
        HolderOptions { pair_budget: 20_000, seed: 7 }
    }
}

/// Max of `diff(i, j) / |p_i - p_j|^α` over pairs at distance `≥ min_sep`.
///
/// Small sets are scanned exhaustively. Otherwise half the budget goes to
/// pairs from neighbouring buckets (where the quotient tends to peak) and
/// half to uniform pairs.
pub(crate) fn max_quotient(
    pts: &[Point],
    diff: impl Fn(usize, usize) -> f64,
    alpha: f64,
    min_sep: f64,
    opts: HolderOptions,
) -> f64 {
    let n = pts.len();
    let mut best: f64 = 0.0;
    let mut visit = |i: usize, j: usize| {
        let d = dist(pts[i], pts[j]);
        if d >= min_sep && d > 0.0 {
            best = best.max(diff(i, j) / d.powf(alpha));
        }
    };
    if n < 2 {
        return 0.0;
    }
    if n * (n - 1) / 2 <= opts.pair_budget {
        for i in 0..n {
            for j in i + 1..n {
                visit(i, j);
            }
        }
        return best;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cell = if min_sep > 0.0 {
        2.0 * min_sep
    } else {
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in pts {
            lo = [lo[0].min(p[0]), lo[1].min(p[1])];
            hi = [hi[0].max(p[0]), hi[1].max(p[1])];
        }
        (3.0 * ((hi[0] - lo[0]) * (hi[1] - lo[1]) / n as f64).sqrt()).max(1e-12)
    };
    let key = |p: Point| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in pts.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let local = opts.pair_budget / 2;
    for _ in 0..local {
        let i = rng.random_range(0..n);
        let (cx, cy) = key(pts[i]);
        let c = (cx + rng.random_range(-1..=1), cy + rng.random_range(-1..=1));
        if let Some(b) = buckets.get(&c) {
            let j = b[rng.random_range(0..b.len())];
            visit(i, j);
        }
    }
    for _ in local..opts.pair_budget {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        visit(i, j);
    }
    best
}

fn region_triangles(u: &SpaceTimeField, m: usize, shrunk: &ShrunkRegion) -> Vec<usize> {
    let mesh = u.mesh();
    let sel = triangles_in_shrunk(mesh, shrunk);
    (0..mesh.n_triangles()).filter(|&t| sel[t] && mesh.tag(t) == m).collect()
}

fn seminorm_on(u: &SpaceTimeField, tris: &[usize], alpha: f64, k: usize, opts: HolderOptions) -> f64 {
    let mesh = u.mesh();
    let pts: Vec<Point> = tris.iter().map(|&t| mesh.barycenter(t)).collect();
    let grads: Vec<Point> = tris.iter().map(|&t| u.gradient(k, t)).collect();
    max_quotient(
        &pts,
        |i, j| (grads[i][0] - grads[j][0]).hypot(grads[i][1] - grads[j][1]),
        alpha,
        2.0 * mesh.h(),
        opts,
    )
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// Sampled Hölder quotient of the elementwise gradient on region `m ∩ D_ε`
/// at slice `k`, over barycentre pairs at least `2h` apart.
pub fn holder_seminorm_grad(
    u: &SpaceTimeField,
    m: usize,
    alpha: f64,
    k: usize,
    opts: HolderOptions,
    shrunk: &ShrunkRegion,
) -> Result<f64> {
    check_alpha(alpha)?;
    if k >= u.n_slices() {
        return Err(Error::InvalidParameter(format!("slice {k} out of range")));
    }
    Ok(seminorm_on(u, &region_triangles(u, m, shrunk), alpha, k, opts))
}

/// Discrete `sup_{t > ε²} ‖u‖_{C^{1,α}}` per region `1..=n_regions`:
/// nodal `max |u|` plus elementwise `max |∇u|` plus the sampled seminorm.
/// A single-slice (stationary) field uses its only slice.
pub fn piecewise_c1alpha(
    u: &SpaceTimeField,
    n_regions: usize,
    shrunk: &ShrunkRegion,
    alpha: f64,
    opts: HolderOptions,
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mesh = u.mesh();
    let eps2 = shrunk.epsilon * shrunk.epsilon;
    let slices: Vec<usize> = if u.n_slices() == 1 {
        vec![0]
    } else {
        (0..u.n_slices()).filter(|&k| u.time(k) > eps2 * (1.0 + 1e-12)).collect()
    };
    if slices.is_empty() {
        return Err(Error::EmptyWindow(format!("no slice after t = {eps2}")));
    }
    let mut out = vec![0.0f64; n_regions];
    for m in 1..=n_regions {
        let tris = region_triangles(u, m, shrunk);
        if tris.is_empty() {
            continue;
        }
        let mut nodes: Vec<usize> = tris.iter().flat_map(|&t| mesh.triangle(t)).collect();
        nodes.sort_unstable();
        nodes.dedup();
        for &k in &slices {
            let v = u.slice(k);
            let sup_u = nodes.iter().map(|&i| v[i].abs()).fold(0.0, f64::max);
            let sup_g = tris.iter().map(|&t| {
                let g = u.gradient(k, t);
                g[0].hypot(g[1])
            });
            let sup_g = sup_g.fold(0.0, f64::max);
            let semi = seminorm_on(u, &tris, alpha, k, opts);
            out[m - 1] = out[m - 1].max(sup_u + sup_g + semi);
        }
    }
    Ok(out)
}
