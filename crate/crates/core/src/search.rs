//! Deterministic grid-plus-compass searches used by the analytic modules.

use std::f64::consts::PI;

const TIE_MARGIN: f64 = 1e-12;

/// Result of a search over the Bloch sphere in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    pub value: f64,
    pub polar: f64,
    pub azimuth: f64,
}

/// Maximizes `f(polar, azimuth)` on a grid of `step` radians, then refines
/// the best `starts` grid points by compass search down to `tol`.
///
/// Ties keep the first point in (polar ascending, azimuth ascending) order.
pub fn sphere_maximize(f: impl Fn(f64, f64) -> f64, step: f64, tol: f64, starts: usize) -> SpherePoint {
    let np = (PI / step).round() as usize;
    let na = (2.0 * PI / step).round() as usize;
    let mut grid = Vec::with_capacity((np + 1) * na);
    for i in 0..=np {
        let polar = i as f64 * PI / np as f64;
        // the poles need a single azimuth
        let count = if i == 0 || i == np { 1 } else { na };
        for k in 0..count {
            let azimuth = k as f64 * 2.0 * PI / na as f64;
            grid.push(SpherePoint { value: f(polar, azimuth), polar, azimuth });
        }
    }
    let order = start_order(&grid.iter().map(|p| p.value).collect::<Vec<_>>());
    let mut best = grid[order[0]];
    for (rank, &idx) in order.iter().take(starts.max(1)).enumerate() {
        let p = grid[idx];
        let (x, v) = compass(|x| f(x[0], x[1]), vec![p.polar, p.azimuth], p.value, step, tol);
        // later starts must win by more than round-off
        if rank == 0 || v > best.value + TIE_MARGIN {
            best = SpherePoint { value: v, polar: x[0], azimuth: x[1] };
        }
    }
    best
}

/// Grid indices by decreasing value; values within [`TIE_MARGIN`] of the
/// maximum count as tied and the first of them in grid order leads.
fn start_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let top = values[order[0]];
    let lead = (0..values.len())
        .find(|&i| values[i] >= top - TIE_MARGIN)
        .expect("maximum is attained");
    let pos = order.iter().position(|&i| i == lead).expect("lead is in order");
    order.remove(pos);
    order.insert(0, lead);
    order
}

/// Smallest relative gain accepted as a move.
const COMPASS_GAIN: f64 = 1e-15;
/// Moves allowed per coordinate at one step size before it is halved anyway.
const COMPASS_LEVEL_MOVES: usize = 100;
const COMPASS_MAX_MOVES: usize = 1_000_000;

/// Compass (coordinate pattern) search maximizing `f` from `x0`.
pub fn compass(f: impl Fn(&[f64]) -> f64, x0: Vec<f64>, f0: f64, step: f64, tol: f64) -> (Vec<f64>, f64) {
    let mut x = x0;
    let mut fx = f0;
    let mut h = step;
    let mut moves = 0usize;
    let mut level = 0usize;
    while h > tol && moves < COMPASS_MAX_MOVES {
        let mut moved = false;
        for k in 0..x.len() {
            for s in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += s * h;
                let fy = f(&y);
                if fy > fx + COMPASS_GAIN * fx.abs().max(1.0) {
                    moves += 1;
                    level += 1;
                    x = y;
                    fx = fy;
                    moved = true;
                    break;
                }
            }
        }
        if !moved || level > COMPASS_LEVEL_MOVES * x.len() {
            h *= 0.5;
            level = 0;
        }
    }
    (x, fx)
}

/// Maximizes `f` over the Bloch ball `|r| ≤ 1`: cubic grid of spacing
/// `step`, then compass refinement with radial projection.
pub fn ball_maximize(f: impl Fn([f64; 3]) -> f64, step: f64, tol: f64, starts: usize) -> ([f64; 3], f64) {
    let n = (1.0 / step).round() as i64;
    let mut grid = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let r = [i as f64 * step, j as f64 * step, k as f64 * step];
                if r.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12 {
                    grid.push((project_ball(r), 0.0));
                }
            }
        }
    }
    for g in grid.iter_mut() {
        g.1 = f(g.0);
    }
    let order = start_order(&grid.iter().map(|p| p.1).collect::<Vec<_>>());
    let mut best = grid[order[0]];
    let g = |x: &[f64]| f(project_ball([x[0], x[1], x[2]]));
    for (rank, &idx) in order.iter().take(starts.max(1)).enumerate() {
        let (r, v) = grid[idx];
        let (x, fx) = compass(g, r.to_vec(), v, step, tol);
        if rank == 0 || fx > best.1 + TIE_MARGIN {
            best = (project_ball([x[0], x[1], x[2]]), fx);
        }
    }
    best
}

pub fn project_ball(r: [f64; 3]) -> [f64; 3] {
    let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1.0 {
        [r[0] / n, r[1] / n, r[2] / n]
    } else {
        r
    }
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the interval ends are candidates too
    [(x, fx), (a, f(a)), (b, f(b))]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

/// Bisection for a sign change of `g` on `[a, b]` where `g(a) ≤ 0 ≤ g(b)`.
pub fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) <= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
