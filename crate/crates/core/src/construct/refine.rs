//! Seeded greedy refinement toward `|H| = Λ` or `Duᵀ Du = α 𝕀`.
//!
//! Each iteration tiles the grid into boxes at the current scale (random
//! offset), and on every box that still holds deviating interior nodes tries
//! a few replacement profiles: envelopes of the box-boundary data, clamped
//! sawtooth patterns and jittered tensor-product hats. Each profile is
//! blended in with a short line search; the best blend is kept if it adds
//! good nodes in the box closure, or lowers the total deficiency there,
//! without pushing `|H|` past `Λ + tol`.

use alloc::vec::Vec;

use super::{SolveRequest, Target};
use crate::eigen::alpha_inverse;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::jet::{node_jet_unchecked, Jet};
use crate::linalg::{frobenius_sq, gram_rect};
use crate::math;
use crate::rng::SeededRng;
use crate::supremand::{Catalog, SupremandSpec};

const THETAS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
const MIN_SCALE: usize = 4;
const PATTERN_TRIES: usize = 3;
const PATTERN_LEVELS: usize = 5;
/// Envelope slopes as fractions of `σ`. Envelopes over discrete rim nodes
/// pick up the rim slope `g` and reach `√(σ² + g²)` next to the rim.
const ENVELOPE_SLOPES: [f64; 3] = [1.0, 0.98, 0.96];

pub(super) struct RunOutput {
    pub field: Field,
    pub trace: Vec<f64>,
    pub alpha_range: Option<(f64, f64)>,
    pub stalled: bool,
}

#[derive(Clone, Copy)]
struct Cell {
    lo: [usize; 2],
    hi: [usize; 2],
}

#[derive(Clone, Copy)]
struct Score {
    good: usize,
    deficiency: f64,
    feasible: bool,
}

impl Score {
    fn beats(&self, other: &Score) -> bool {
        self.feasible
            && (self.good > other.good
                || (self.good == other.good
                    && self.deficiency < other.deficiency - 1e-12 * (1.0 + other.deficiency)))
    }
}

struct State<'a> {
    spec: &'a SupremandSpec,
    target: Target,
    lambda: f64,
    eps: f64,
    cap: f64,
    budget: Option<f64>,
    alpha_const: Option<f64>,
    deficiency_cap: f64,
    u: Field,
    good: Vec<bool>,
    interior: Vec<bool>,
    n_interior: usize,
    n_good: usize,
}

impl State<'_> {
    fn grid(&self) -> Grid {
        *self.u.grid()
    }

    fn alpha_at(&self, x: [f64; 2], u: [f64; 2]) -> Option<f64> {
        self.alpha_const
            .or_else(|| alpha_inverse(self.spec, x, u, self.grid().dim(), self.lambda).ok())
    }

    /// `(good, deficiency, feasible)` at one interior node.
    fn eval_node(&self, idx: usize) -> Result<(bool, f64, bool)> {
        let jet = node_jet_unchecked(&self.u, idx, 1);
        let abs_h = match self.spec.eval_H(&jet) {
            Ok(v) => v.abs(),
            Err(Error::NonFinite { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let (ncomp, dim) = (jet.ncomp, jet.dim);
        let lip_ok = self
            .budget
            .is_none_or(|b| frobenius_sq(&jet.du, ncomp, dim) <= b * b);
        let feasible = abs_h <= self.cap && lip_ok;
        let (good, deficiency) = match self.target {
            Target::Level => (
                abs_h >= self.lambda - self.eps,
                (self.lambda - abs_h).max(0.0),
            ),
            Target::Gram => match self.alpha_at(jet.x, jet.u) {
                Some(a) => {
                    let d = gram_rect(&jet.du, ncomp, dim).dist_to_scaled_identity(a);
                    (d <= self.eps, d)
                }
                None => (false, self.deficiency_cap),
            },
        };
        Ok((good, deficiency.min(self.deficiency_cap), feasible))
    }

    fn score(&self, window: &[usize]) -> Result<Score> {
        let mut s = Score {
            good: 0,
            deficiency: 0.0,
            feasible: true,
        };
        for &i in window {
            let (g, d, f) = self.eval_node(i)?;
            s.good += g as usize;
            s.deficiency += d;
            s.feasible &= f;
        }
        Ok(s)
    }

    fn fraction(&self) -> f64 {
        (self.n_interior - self.n_good) as f64 / self.n_interior as f64
    }

    fn cell_nodes(&self, cell: &Cell) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let grid = self.grid();
        let (mut inner, mut rim, mut window) = (Vec::new(), Vec::new(), Vec::new());
        for i in cell.lo[0]..=cell.hi[0] {
            for j in cell.lo[1]..=cell.hi[1] {
                let idx = grid.index([i, j]);
                let on_rim = i == cell.lo[0]
                    || i == cell.hi[0]
                    || (grid.dim() == 2 && (j == cell.lo[1] || j == cell.hi[1]));
                if on_rim {
                    rim.push(idx);
                } else {
                    inner.push(idx);
                }
                if self.interior[idx] {
                    window.push(idx);
                }
            }
        }
        (inner, rim, window)
    }

    /// Slope `σ` with `|H(x, u, σ e₁ ⊗ e₁)| = Λ`, used to size profiles.
    fn level_slope(&self, x: [f64; 2], u: [f64; 2]) -> Option<f64> {
        if self.spec.catalog() == Some(&Catalog::Eikonal) {
            return Some(self.lambda);
        }
        let grid = self.grid();
        let f = |s: f64| {
            let mut du = [[0.0; 2]; 2];
            du[0][0] = s;
            let jet = Jet::first_order(grid.dim(), self.u.ncomp(), x, u, du);
            self.spec.eval_H(&jet).ok().map(|v| v.abs() - self.lambda)
        };
        if !(f(0.0)? < 0.0) {
            return None;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while f(hi)? < 0.0 {
            lo = hi;
            hi *= 4.0;
            if hi > 1e12 {
                return None;
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// `(lower, upper)` `σ`-envelopes of component `c` over the rim, at the inner nodes.
    fn envelopes(
        &self,
        inner: &[usize],
        rim: &[usize],
        c: usize,
        sigma: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let grid = self.grid();
        let rim_pts: Vec<([f64; 2], f64)> = rim
            .iter()
            .map(|&i| (grid.point(i), self.u.value(i, c)))
            .collect();
        let mut lower = Vec::with_capacity(inner.len());
        let mut upper = Vec::with_capacity(inner.len());
        for &i in inner {
            let x = grid.point(i);
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for (y, v) in &rim_pts {
                let d = sigma * math::hypot(x[0] - y[0], x[1] - y[1]);
                lo = lo.max(v - d);
                hi = hi.min(v + d);
            }
            lower.push(lo);
            upper.push(hi);
        }
        (lower, upper)
    }

    fn proposals(
        &self,
        cell: &Cell,
        inner: &[usize],
        rim: &[usize],
        rng: &mut SeededRng,
    ) -> Vec<Vec<f64>> {
        let grid = self.grid();
        let dim = grid.dim();
        let ncomp = self.u.ncomp();
        let centre = grid.index([(cell.lo[0] + cell.hi[0]) / 2, (cell.lo[1] + cell.hi[1]) / 2]);
        let cx = grid.point(centre);
        let mut cu = [0.0; 2];
        cu[..ncomp].copy_from_slice(self.u.node(centre));
        let sigma = match self.target {
            Target::Level => self.level_slope(cx, cu),
            Target::Gram => self.alpha_at(cx, cu).filter(|a| *a > 0.0).map(math::sqrt),
        };
        let mut out = Vec::new();
        if let Some(s) = sigma {
            match self.target {
                Target::Level if ncomp == 1 => {
                    for k in ENVELOPE_SLOPES {
                        let (lower, upper) = self.envelopes(inner, rim, 0, k * s);
                        out.push(upper);
                        out.push(lower);
                    }
                }
                Target::Gram if ncomp == 2 && dim == 2 => {
                    let env = [
                        self.envelopes(inner, rim, 0, s),
                        self.envelopes(inner, rim, 1, s),
                    ];
                    for _ in 0..PATTERN_TRIES {
                        out.push(self.pattern(inner, &env, s, rng));
                    }
                }
                _ => {}
            }
        }
        let amp_slope = sigma.unwrap_or(self.lambda);
        for c in 0..ncomp {
            for sign in [1.0, -1.0] {
                out.push(self.hat(cell, inner, c, sign * amp_slope, rng));
            }
        }
        out
    }

    /// Sawtooth pair `(±S(x_a), ±S(x_b))`, `{a, b} = {1, 2}`, clamped between the rim envelopes.
    fn pattern(
        &self,
        inner: &[usize],
        env: &[(Vec<f64>, Vec<f64>); 2],
        s: f64,
        rng: &mut SeededRng,
    ) -> Vec<f64> {
        let grid = self.grid();
        let swap = rng.sign() < 0.0;
        let level = 1 + rng.index(PATTERN_LEVELS);
        let mut period = [0.0; 2];
        let mut phase = [0.0; 2];
        let mut sign = [0.0; 2];
        for c in 0..2 {
            let axis = if swap { 1 - c } else { c };
            let len = grid.upper(axis) - grid.lower(axis);
            period[c] = (len / (1u64 << level) as f64).max(4.0 * grid.spacing(axis));
            phase[c] = rng.uniform(0.0, period[c]);
            sign[c] = rng.sign();
        }
        let mut out = Vec::with_capacity(2 * inner.len());
        for (k, &i) in inner.iter().enumerate() {
            let x = grid.point(i);
            for c in 0..2 {
                let axis = if swap { 1 - c } else { c };
                let p = period[c];
                let y = x[axis] + phase[c];
                let y = y - p * math::floor(y / p);
                let tooth = sign[c] * s * ((y - 0.5 * p).abs() - 0.25 * p);
                let (lo, hi) = (env[c].0[k], env[c].1[k]);
                out.push(if lo <= hi {
                    tooth.clamp(lo, hi)
                } else {
                    self.u.value(i, c)
                });
            }
        }
        out
    }

    /// Current values plus a tensor hat on component `c` with peak slope about `slope`.
    fn hat(
        &self,
        cell: &Cell,
        inner: &[usize],
        c: usize,
        slope: f64,
        rng: &mut SeededRng,
    ) -> Vec<f64> {
        let grid = self.grid();
        let dim = grid.dim();
        let ncomp = self.u.ncomp();
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut mid = [0.0; 2];
        let mut reach = f64::INFINITY;
        for a in 0..dim {
            lo[a] = grid.coord(a, cell.lo[a]);
            hi[a] = grid.coord(a, cell.hi[a]);
            let r = 0.5 * (hi[a] - lo[a]);
            mid[a] = lo[a] + r + rng.uniform(-0.25 * r, 0.25 * r);
            reach = reach.min((mid[a] - lo[a]).min(hi[a] - mid[a]));
        }
        let amp = slope * reach;
        let mut out = Vec::with_capacity(ncomp * inner.len());
        for &i in inner {
            let x = grid.point(i);
            let mut b = 1.0;
            for a in 0..dim {
                b *= if x[a] <= mid[a] {
                    (x[a] - lo[a]) / (mid[a] - lo[a])
                } else {
                    (hi[a] - x[a]) / (hi[a] - mid[a])
                };
            }
            for k in 0..ncomp {
                let v = self.u.value(i, k);
                out.push(if k == c { v + amp * b } else { v });
            }
        }
        out
    }

    fn write(&mut self, inner: &[usize], values: &[f64]) {
        let ncomp = self.u.ncomp();
        for (k, &i) in inner.iter().enumerate() {
            for c in 0..ncomp {
                self.u.set(i, c, values[k * ncomp + c]);
            }
        }
    }

    /// Tries every proposal on one cell; returns whether the field changed.
    fn improve_cell(&mut self, cell: &Cell, rng: &mut SeededRng) -> Result<bool> {
        let (inner, rim, window) = self.cell_nodes(cell);
        if inner.is_empty() || !inner.iter().any(|&i| self.interior[i] && !self.good[i]) {
            return Ok(false);
        }
        let ncomp = self.u.ncomp();
        let old: Vec<f64> = inner
            .iter()
            .flat_map(|&i| self.u.node(i).to_vec())
            .collect();
        let mut best = self.score(&window)?;
        let mut best_values: Option<Vec<f64>> = None;
        let mut trial = old.clone();
        for prop in self.proposals(cell, &inner, &rim, rng) {
            for theta in THETAS {
                for k in 0..old.len() {
                    trial[k] = old[k] + theta * (prop[k] - old[k]);
                }
                if trial.iter().any(|v| !v.is_finite()) {
                    continue;
                }
                self.write(&inner, &trial);
                let s = self.score(&window)?;
                if s.beats(&best) {
                    best = s;
                    best_values = Some(trial.clone());
                }
            }
        }
        let Some(values) = best_values else {
            self.write(&inner, &old);
            return Ok(false);
        };
        debug_assert_eq!(values.len(), ncomp * inner.len());
        self.write(&inner, &values);
        for &i in &window {
            let (g, _, f) = self.eval_node(i)?;
            debug_assert!(f, "overshoot at node {i}");
            if g != self.good[i] {
                if g {
                    self.n_good += 1;
                } else {
                    self.n_good -= 1;
                }
                self.good[i] = g;
            }
        }
        Ok(true)
    }

    fn sweep(&mut self, scale: usize, rng: &mut SeededRng) -> Result<()> {
        let grid = self.grid();
        let segs0 = segments(grid.nodes(0), scale, rng);
        let segs1 = if grid.dim() == 2 {
            segments(grid.nodes(1), scale, rng)
        } else {
            alloc::vec![(0, 0)]
        };
        for &(a0, b0) in &segs0 {
            for &(a1, b1) in &segs1 {
                self.improve_cell(
                    &Cell {
                        lo: [a0, a1],
                        hi: [b0, b1],
                    },
                    rng,
                )?;
            }
        }
        Ok(())
    }
}

/// Breakpoints `0 = c₀ < … < c_k = m − 1` spaced `scale` apart from a random
/// offset; every segment spans at least two steps.
fn segments(m: usize, scale: usize, rng: &mut SeededRng) -> Vec<(usize, usize)> {
    let last = m - 1;
    if scale >= last {
        return alloc::vec![(0, last)];
    }
    let mut cuts = alloc::vec![0];
    let mut c = rng.index(scale);
    if c == 0 {
        c = scale;
    }
    while c < last {
        cuts.push(c);
        c += scale;
    }
    cuts.push(last);
    let mut out: Vec<(usize, usize)> = Vec::new();
    for w in cuts.windows(2) {
        match out.last_mut() {
            Some(prev) if w[1] - w[0] < 2 => prev.1 = w[1],
            _ => out.push((w[0], w[1])),
        }
    }
    if out.len() > 1 && out[0].1 - out[0].0 < 2 {
        let first = out.remove(0);
        out[0].0 = first.0;
    }
    out
}

pub(super) fn run(request: &SolveRequest, lambda: f64, target: Target) -> Result<RunOutput> {
    let problem = &request.problem;
    let params = &request.params;
    let grid = problem.grid;
    let (dim, ncomp) = (grid.dim(), problem.ncomp);
    if target == Target::Gram && ncomp != dim {
        return Err(Error::DimensionMismatch {
            components: ncomp,
            dim,
        });
    }
    let spec = &problem.spec;
    let alpha_const = if target == Target::Gram && spec.h_is_autonomous() {
        Some(alpha_inverse(spec, [0.0; 2], [0.0; 2], dim, lambda)?)
    } else {
        None
    };
    let start = problem.phi.field(&grid, ncomp)?;
    let interior: Vec<bool> = (0..grid.len()).map(|i| !grid.is_boundary(i)).collect();
    let n_interior = interior.iter().filter(|b| **b).count();
    let mut state = State {
        spec,
        target,
        lambda,
        eps: params.eps_frac * lambda,
        cap: lambda * (1.0 + params.tol_frac),
        budget: params.lipschitz_budget,
        alpha_const,
        deficiency_cap: 1e6 * (1.0 + lambda),
        u: start.clone(),
        good: alloc::vec![false; grid.len()],
        interior,
        n_interior,
        n_good: 0,
    };
    for i in 0..grid.len() {
        if state.interior[i] {
            let (g, _, _) = state.eval_node(i)?;
            state.good[i] = g;
            state.n_good += g as usize;
        }
    }

    let max_scale = (0..dim)
        .map(|a| grid.nodes(a) - 1)
        .max()
        .unwrap_or(MIN_SCALE);
    let mut scale = max_scale;
    let mut rng = SeededRng::new(request.seed);
    let mut trace = alloc::vec![state.fraction()];
    let mut stalled = false;
    for _ in 0..params.max_iters {
        let before = state.fraction();
        if before <= params.target_deviation_fraction {
            break;
        }
        state.sweep(scale, &mut rng)?;
        let after = state.fraction();
        debug_assert!((0..grid.len())
            .filter(|i| !state.interior[*i])
            .all(|i| state.u.node(i) == start.node(i)));
        if after >= before {
            scale = if scale / 2 >= MIN_SCALE {
                scale / 2
            } else {
                max_scale
            };
        }
        trace.push(after);
        let k = trace.len() - 1;
        if k >= params.stall_window && trace[k] >= trace[k - params.stall_window] {
            stalled = true;
            break;
        }
    }

    let alpha_range = if target == Target::Gram {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..grid.len() {
            let mut u = [0.0; 2];
            u[..ncomp].copy_from_slice(state.u.node(i));
            if let Some(a) = state.alpha_at(grid.point(i), u) {
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
        Some((lo, hi))
    } else {
        None
    };
    Ok(RunOutput {
        field: state.u,
        trace,
        alpha_range,
        stalled,
    })
}
