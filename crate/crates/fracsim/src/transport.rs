//! Desk-scale flow and tracer transport over a rasterized fracture network:
//! 5-point finite-volume incompressible pressure solve (unit viscosity,
//! harmonic face transmissibilities, no-flow boundaries, rate wells) and
//! explicit upwind advection with central diffusion.

use crate::geometry::Trace;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("pressure solver did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("invalid well placement: {0}")]
    BadWells(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// World coordinates of the grid's lower-left corner.
    pub x0: f64,
    pub y0: f64,
}

impl GridSpec {
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

#[derive(Debug, Clone)]
pub struct PermeabilityGrid {
    pub spec: GridSpec,
    pub k: Vec<f64>,
    pub porosity: f64,
    pub fracture_cells: usize,
}

/// Mark every cell whose interior a segment crosses (grid-line traversal),
/// assign k_f = ratio * k_m there and k_m elsewhere.
pub fn rasterize(
    traces: &[Trace],
    spec: GridSpec,
    k_matrix: f64,
    ratio: f64,
    porosity: f64,
) -> PermeabilityGrid {
    assert!(k_matrix > 0.0 && ratio > 0.0 && porosity > 0.0);
    let mut fracture = vec![false; spec.cells()];
    for t in traces {
        for s in t.segments() {
            for (i, j) in traverse_cells(&spec, s.start.x, s.start.y, s.end.x, s.end.y) {
                fracture[spec.idx(i, j)] = true;
            }
        }
    }
    let fracture_cells = fracture.iter().filter(|&&f| f).count();
    let k = fracture
        .iter()
        .map(|&f| if f { ratio * k_matrix } else { k_matrix })
        .collect();
    PermeabilityGrid { spec, k, porosity, fracture_cells }
}

/// Cells visited by the segment (x0,y0)-(x1,y1), via parametric grid-line
/// crossings (Amanatides–Woo style), clipped to the grid.
fn traverse_cells(spec: &GridSpec, x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<(usize, usize)> {
    let gx = |x: f64| (x - spec.x0) / spec.dx;
    let gy = |y: f64| (y - spec.y0) / spec.dy;
    let (ax, ay, bx, by) = (gx(x0), gy(y0), gx(x1), gy(y1));
    let dx = bx - ax;
    let dy = by - ay;
    // Collect crossing parameters of all grid lines between the endpoints.
    let mut ts = vec![0.0, 1.0];
    if dx.abs() > 0.0 {
        let (lo, hi) = if ax < bx { (ax, bx) } else { (bx, ax) };
        for gi in (lo.ceil() as i64)..=(hi.floor() as i64) {
            ts.push((gi as f64 - ax) / dx);
        }
    }
    if dy.abs() > 0.0 {
        let (lo, hi) = if ay < by { (ay, by) } else { (by, ay) };
        for gj in (lo.ceil() as i64)..=(hi.floor() as i64) {
            ts.push((gj as f64 - ay) / dy);
        }
    }
    ts.retain(|t| (0.0..=1.0).contains(t));
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut cells = Vec::new();
    for w in ts.windows(2) {
        let tm = 0.5 * (w[0] + w[1]);
        if w[1] - w[0] < 1e-12 {
            continue;
        }
        let cx = ax + tm * dx;
        let cy = ay + tm * dy;
        if cx < 0.0 || cy < 0.0 {
            continue;
        }
        let (i, j) = (cx.floor() as usize, cy.floor() as usize);
        if i < spec.nx && j < spec.ny {
            cells.push((i, j));
        }
    }
    cells.dedup();
    cells
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Wells {
    /// Injector cell (i, j); rate +q with tracer concentration 1.
    pub injector: (usize, usize),
    /// Producer cell (i, j); rate -q, pressure pinned to 0 there.
    pub producer: (usize, usize),
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct FlowField {
    pub pressure: Vec<f64>,
    /// Flux through x-faces, (nx+1) * ny entries, positive in +x.
    pub flux_x: Vec<f64>,
    /// Flux through y-faces, nx * (ny+1) entries, positive in +y.
    pub flux_y: Vec<f64>,
    pub wells: Wells,
    pub residual: f64,
}

/// Face transmissibilities: harmonic mean of the two cell permeabilities.
fn trans(grid: &PermeabilityGrid) -> (Vec<f64>, Vec<f64>) {
    let s = &grid.spec;
    let mut tx = vec![0.0; (s.nx + 1) * s.ny];
    let mut ty = vec![0.0; s.nx * (s.ny + 1)];
    for j in 0..s.ny {
        for i in 1..s.nx {
            let ka = grid.k[s.idx(i - 1, j)];
            let kb = grid.k[s.idx(i, j)];
            tx[j * (s.nx + 1) + i] = (s.dy / s.dx) * 2.0 * ka * kb / (ka + kb);
        }
    }
    for j in 1..s.ny {
        for i in 0..s.nx {
            let ka = grid.k[s.idx(i, j - 1)];
            let kb = grid.k[s.idx(i, j)];
            ty[j * s.nx + i] = (s.dx / s.dy) * 2.0 * ka * kb / (ka + kb);
        }
    }
    (tx, ty)
}

pub fn solve_flow(grid: &PermeabilityGrid, wells: Wells) -> Result<FlowField, TransportError> {
    let s = grid.spec;
    let n = s.cells();
    if wells.injector == wells.producer {
        return Err(TransportError::BadWells("injector equals producer".into()));
    }
    for (i, j) in [wells.injector, wells.producer] {
        if i >= s.nx || j >= s.ny {
            return Err(TransportError::BadWells(format!("cell ({i}, {j}) outside grid")));
        }
    }
    if wells.rate <= 0.0 || wells.rate.is_nan() {
        return Err(TransportError::BadWells(format!("rate must be > 0, got {}", wells.rate)));
    }
    let (tx, ty) = trans(grid);
    let pinned = s.idx(wells.producer.0, wells.producer.1);

    // A p = q with the producer row eliminated (p = 0 there) keeps the system
    // symmetric positive definite for conjugate gradients.
    let apply = |p: &[f64], out: &mut [f64]| {
        for j in 0..s.ny {
            for i in 0..s.nx {
                let c = s.idx(i, j);
                let pc = if c == pinned { 0.0 } else { p[c] };
                let mut acc = 0.0;
                let mut add = |t: f64, other: usize| {
                    let po = if other == pinned { 0.0 } else { p[other] };
                    acc += t * (pc - po);
                };
                if i > 0 {
                    add(tx[j * (s.nx + 1) + i], s.idx(i - 1, j));
                }
                if i + 1 < s.nx {
                    add(tx[j * (s.nx + 1) + i + 1], s.idx(i + 1, j));
                }
                if j > 0 {
                    add(ty[j * s.nx + i], s.idx(i, j - 1));
                }
                if j + 1 < s.ny {
                    add(ty[(j + 1) * s.nx + i], s.idx(i, j + 1));
                }
                out[c] = if c == pinned { 0.0 } else { acc };
            }
        }
    };
    let mut diag = vec![0.0; n];
    for j in 0..s.ny {
        for i in 0..s.nx {
            let c = s.idx(i, j);
            let mut d = 0.0;
            if i > 0 {
                d += tx[j * (s.nx + 1) + i];
            }
            if i + 1 < s.nx {
                d += tx[j * (s.nx + 1) + i + 1];
            }
            if j > 0 {
                d += ty[j * s.nx + i];
            }
            if j + 1 < s.ny {
                d += ty[(j + 1) * s.nx + i];
            }
            diag[c] = if c == pinned || d == 0.0 { 1.0 } else { d };
        }
    }
    let mut rhs = vec![0.0; n];
    rhs[s.idx(wells.injector.0, wells.injector.1)] = wells.rate;

    // Jacobi-preconditioned conjugate gradients.
    let mut p = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut d = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ad = vec![0.0; n];
    let tol = 1e-12 * wells.rate;
    let max_iter = 40 * n + 1000;
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        residual = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if residual <= tol {
            break;
        }
        if it + 1 == max_iter {
            return Err(TransportError::NoConvergence { residual, iterations: max_iter });
        }
        apply(&d, &mut ad);
        let dad: f64 = d.iter().zip(&ad).map(|(a, b)| a * b).sum();
        let alpha = rz / dad;
        for c in 0..n {
            p[c] += alpha * d[c];
            r[c] -= alpha * ad[c];
        }
        for c in 0..n {
            z[c] = r[c] / diag[c];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for c in 0..n {
            d[c] = z[c] + beta * d[c];
        }
    }
    p[pinned] = 0.0;

    let mut flux_x = vec![0.0; (s.nx + 1) * s.ny];
    let mut flux_y = vec![0.0; s.nx * (s.ny + 1)];
    for j in 0..s.ny {
        for i in 1..s.nx {
            let f = j * (s.nx + 1) + i;
            flux_x[f] = tx[f] * (p[s.idx(i - 1, j)] - p[s.idx(i, j)]);
        }
    }
    for j in 1..s.ny {
        for i in 0..s.nx {
            let f = j * s.nx + i;
            flux_y[f] = ty[f] * (p[s.idx(i, j - 1)] - p[s.idx(i, j)]);
        }
    }
    Ok(FlowField { pressure: p, flux_x, flux_y, wells, residual })
}

impl FlowField {
    /// Worst per-cell mass-balance error (flux divergence minus well source).
    pub fn max_balance_error(&self, spec: &GridSpec) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let mut net = self.flux_x[j * (spec.nx + 1) + i]
                    - self.flux_x[j * (spec.nx + 1) + i + 1]
                    + self.flux_y[j * spec.nx + i]
                    - self.flux_y[(j + 1) * spec.nx + i];
                if (i, j) == self.wells.injector {
                    net += self.wells.rate;
                }
                if (i, j) == self.wells.producer {
                    net -= self.wells.rate;
                }
                worst = worst.max(net.abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreakthroughCurve {
    pub times: Vec<f64>,
    pub concentrations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TracerResult {
    pub curve: BreakthroughCurve,
    pub injected: f64,
    pub produced: f64,
    pub resident: f64,
    pub max_concentration: f64,
}

/// Explicit first-order upwind advection plus central diffusion, sub-stepped
/// to satisfy the CFL bound. Injected water carries c = 1; the curve samples
/// the producer cell every `dt`.
pub fn advect_tracer(
    flow: &FlowField,
    grid: &PermeabilityGrid,
    dt: f64,
    t_end: f64,
    diffusion: f64,
) -> TracerResult {
    let s = grid.spec;
    let n = s.cells();
    let vol = s.dx * s.dy * grid.porosity;
    let inj = s.idx(flow.wells.injector.0, flow.wells.injector.1);
    let prod = s.idx(flow.wells.producer.0, flow.wells.producer.1);
    let gx = diffusion * grid.porosity * s.dy / s.dx;
    let gy = diffusion * grid.porosity * s.dx / s.dy;

    // CFL: per cell, total outflow (advective + well + diffusive conductance)
    // must not drain more than the cell holds in one substep.
    let mut max_out = 0.0f64;
    for j in 0..s.ny {
        for i in 0..s.nx {
            let c = s.idx(i, j);
            let mut out = 0.0;
            out += (-flow.flux_x[j * (s.nx + 1) + i]).max(0.0);
            out += flow.flux_x[j * (s.nx + 1) + i + 1].max(0.0);
            out += (-flow.flux_y[j * s.nx + i]).max(0.0);
            out += flow.flux_y[(j + 1) * s.nx + i].max(0.0);
            if c == prod {
                out += flow.wells.rate;
            }
            let faces_x = (i > 0) as u32 + (i + 1 < s.nx) as u32;
            let faces_y = (j > 0) as u32 + (j + 1 < s.ny) as u32;
            out += faces_x as f64 * gx + faces_y as f64 * gy;
            max_out = max_out.max(out);
        }
    }
    let dt_limit = if max_out > 0.0 { 0.9 * vol / max_out } else { dt };
    let substeps = (dt / dt_limit).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;

    let mut conc = vec![0.0f64; n];
    let mut times = vec![0.0];
    let mut curve = vec![0.0];
    let mut injected = 0.0;
    let mut produced = 0.0;
    let mut cmax = 0.0f64;
    let steps = (t_end / dt).round() as usize;
    let mut delta = vec![0.0f64; n];
    for step in 1..=steps {
        for _ in 0..substeps {
            delta.iter_mut().for_each(|d| *d = 0.0);
            for j in 0..s.ny {
                for i in 0..s.nx {
                    let c = s.idx(i, j);
                    if i + 1 < s.nx {
                        let r = s.idx(i + 1, j);
                        let f = flow.flux_x[j * (s.nx + 1) + i + 1];
                        let adv = f * if f >= 0.0 { conc[c] } else { conc[r] };
                        let dif = gx * (conc[r] - conc[c]);
                        delta[c] += (dif - adv) * h;
                        delta[r] += (adv - dif) * h;
                    }
                    if j + 1 < s.ny {
                        let u = s.idx(i, j + 1);
                        let f = flow.flux_y[(j + 1) * s.nx + i];
                        let adv = f * if f >= 0.0 { conc[c] } else { conc[u] };
                        let dif = gy * (conc[u] - conc[c]);
                        delta[c] += (dif - adv) * h;
                        delta[u] += (adv - dif) * h;
                    }
                }
            }
            let q = flow.wells.rate * h;
            delta[inj] += q;
            injected += q;
            let taken = q * conc[prod];
            delta[prod] -= taken;
            produced += taken;
            for c in 0..n {
                conc[c] += delta[c] / vol;
                cmax = cmax.max(conc[c]);
            }
        }
        times.push(step as f64 * dt);
        curve.push(conc[prod]);
    }
    let resident: f64 = conc.iter().map(|c| c * vol).sum();
    TracerResult {
        curve: BreakthroughCurve { times, concentrations: curve },
        injected,
        produced,
        resident,
        max_concentration: cmax,
    }
}

/// First time the curve reaches the threshold (linear interpolation between
/// samples); None if it never does.
pub fn breakthrough_time(curve: &BreakthroughCurve, threshold: f64) -> Option<f64> {
    for w in 0..curve.times.len() {
        if curve.concentrations[w] >= threshold {
            if w == 0 {
                return Some(curve.times[0]);
            }
            let (t0, t1) = (curve.times[w - 1], curve.times[w]);
            let (c0, c1) = (curve.concentrations[w - 1], curve.concentrations[w]);
            let f = if c1 > c0 { (threshold - c0) / (c1 - c0) } else { 1.0 };
            return Some(t0 + f * (t1 - t0));
        }
    }
    None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreakthroughComparison {
    pub time_a: Option<f64>,
    pub time_b: Option<f64>,
    /// |t_a - t_b|; None when either curve never breaks through.
    pub time_delta: Option<f64>,
    /// Root-mean-square distance of the curves on a common time grid.
    pub l2: f64,
}

pub fn compare_breakthrough(
    a: &BreakthroughCurve,
    b: &BreakthroughCurve,
    threshold: f64,
) -> BreakthroughComparison {
    let time_a = breakthrough_time(a, threshold);
    let time_b = breakthrough_time(b, threshold);
    let t_end = a
        .times
        .last()
        .copied()
        .unwrap_or(0.0)
        .min(b.times.last().copied().unwrap_or(0.0));
    let samples = 512;
    let mut acc = 0.0;
    for k in 0..=samples {
        let t = t_end * k as f64 / samples as f64;
        let d = sample(a, t) - sample(b, t);
        acc += d * d;
    }
    BreakthroughComparison {
        time_a,
        time_b,
        time_delta: match (time_a, time_b) {
            (Some(x), Some(y)) => Some((x - y).abs()),
            _ => None,
        },
        l2: (acc / (samples + 1) as f64).sqrt(),
    }
}

fn sample(curve: &BreakthroughCurve, t: f64) -> f64 {
    let ts = &curve.times;
    let cs = &curve.concentrations;
    if ts.is_empty() {
        return 0.0;
    }
    if t <= ts[0] {
        return cs[0];
    }
    if t >= *ts.last().unwrap() {
        return *cs.last().unwrap();
    }
    let i = ts.partition_point(|&x| x <= t);
    let f = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    cs[i - 1] + f * (cs[i] - cs[i - 1])
}
