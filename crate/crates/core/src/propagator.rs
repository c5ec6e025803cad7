//! Velocity-family propagator kernel and its verification probes.
//!
//! The kernel K(x, x₀; t) = (m/2πℏ)∫dv₀ Φ(v₀, x, t)·Φ*(v₀, x₀, 0) is built
//! by quadrature over a family of Gaussian packets launched from the source
//! point x₀, one per initial velocity v₀. For each source column the family
//! member launched there satisfies Φ*(v₀, x₀, 0) = e^{−i m v₀ x₀/ℏ}, a pure
//! phase, so the integrand per node reduces to the closed form
//! √(a₀/a)·exp(−u²/4a²)·exp i[S₀(t) − S₀(0) + k₁u + k₂u²] with u = x − q(t).
//!
//! For quadratic potentials q(t) is affine and S₀(t) quadratic in (x₀, v₀),
//! so one 14-component integration (width, particular + fundamental center
//! solutions, and the six action coefficients) serves every source point and
//! velocity node. Other potentials get one trajectory per (column, node).

use num_complex::Complex64;

use crate::dynamics::{integrate_trajectory, PacketState};
use crate::error::{Result, SchError};
use crate::grid::{ComplexField, Grid, RealField};
use crate::params::{InitialConditions, MeanActionVariant, PhysicsParams};
use crate::potential::PotentialModel;
use crate::quad::gauss_legendre;
use crate::rk::{Dopri5, Tolerances};

/// Below this time the kernel approaches a distribution no fixed grid can
/// hold; `delta_limit_check` is the supported probe there.
pub const T_MIN: f64 = 1e-3;
/// Kernel assembly demands the integrand envelope at the window edges stay
/// below this fraction of its peak for every (x, x₀) pair.
pub const EDGE_ENVELOPE_LIMIT: f64 = 1e-10;
/// The weak-limit probes demand the velocity-resolved inner sums decay to
/// this fraction of their peak at the window edges.
pub const INNER_SUM_EDGE_LIMIT: f64 = 1e-6;

const KERNEL_ODE_TOL: f64 = 1e-11;
const WIDTH_FLOOR: f64 = 1e-100;

/// Quadrature rule over the velocity window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Trapezoid,
    GaussLegendre,
}

/// Velocity window and sampling for the ∫dv₀ of the kernel.
#[derive(Debug, Clone, Copy)]
pub struct VelocityQuadrature {
    pub v_min: f64,
    pub v_max: f64,
    pub n_v: usize,
    pub rule: QuadratureRule,
}

impl VelocityQuadrature {
    pub const MIN_NODES: usize = 32;

    pub fn new(v_min: f64, v_max: f64, n_v: usize, rule: QuadratureRule) -> Result<Self> {
        if !(v_min.is_finite() && v_max.is_finite()) {
            return Err(SchError::invalid("velocity window must be finite"));
        }
        if !(v_max > v_min) {
            return Err(SchError::invalid(format!(
                "velocity window needs v_max > v_min, got [{v_min}, {v_max}]"
            )));
        }
        if n_v < Self::MIN_NODES {
            return Err(SchError::invalid(format!(
                "velocity quadrature needs at least {} nodes, got {n_v}",
                Self::MIN_NODES
            )));
        }
        Ok(Self {
            v_min,
            v_max,
            n_v,
            rule,
        })
    }

    /// Nodes and weights on [v_min, v_max].
    pub fn nodes_weights(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let span = self.v_max - self.v_min;
        match self.rule {
            QuadratureRule::Trapezoid => {
                let h = span / (self.n_v - 1) as f64;
                let nodes: Vec<f64> = (0..self.n_v).map(|i| self.v_min + i as f64 * h).collect();
                let mut weights = vec![h; self.n_v];
                weights[0] = 0.5 * h;
                weights[self.n_v - 1] = 0.5 * h;
                Ok((nodes, weights))
            }
            QuadratureRule::GaussLegendre => {
                let (xs, ws) = gauss_legendre(self.n_v)?;
                let c = 0.5 * (self.v_min + self.v_max);
                let s = 0.5 * span;
                Ok((
                    xs.iter().map(|&x| c + s * x).collect(),
                    ws.iter().map(|&w| s * w).collect(),
                ))
            }
        }
    }
}

/// Discretized kernel K(x, x₀; t): row index runs over arrival points x,
/// column index over source points x₀. Entries carry units 1/length so the
/// trapezoid contraction ∫K ψ₀ dx₀ has wave-function units.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub t: f64,
    pub x_grid: Grid,
    pub x0_grid: Grid,
    /// Row-major: `values[ix * x0_grid.n + i0]`.
    pub values: Vec<Complex64>,
    /// Mean-action convention the underlying trajectories used.
    pub variant: MeanActionVariant,
    pub quad: VelocityQuadrature,
    /// Worst observed edge-envelope/peak ratio over all (x, x₀) pairs.
    pub edge_envelope_ratio: f64,
    /// Number of trajectory integrations performed (1 on the quadratic
    /// fast path).
    pub trajectories: usize,
}

impl KernelMatrix {
    pub fn value(&self, ix: usize, i0: usize) -> Complex64 {
        self.values[ix * self.x0_grid.n + i0]
    }
}

/// Weak-sense completeness diagnostics for the velocity family.
#[derive(Debug, Clone, Copy)]
pub struct CompletenessReport {
    /// max over x of |(m/2πℏ)Σ_v w_v Φ*(v,x,t)·⟨Φ(v,·,t), f⟩ − f(x)|.
    pub weak_deviation: f64,
    /// |Σ_v w_v Φ*(v,x_c,t)·∫Φ(v,x′,t)dx′| at the point x_c where the
    /// family is densest; the ideal value is 2πℏ/m.
    pub weight_integral: f64,
}

/// Family member's trajectory state at time t: the packet launched from
/// `ic_rest.x0` with initial velocity `v0` (and ic_rest's width data).
pub fn family_state(
    v0: f64,
    ic_rest: &InitialConditions,
    potential: &PotentialModel,
    params: &PhysicsParams,
    t: f64,
) -> Result<PacketState> {
    let ic = InitialConditions::new(ic_rest.x0, v0, ic_rest.a0, ic_rest.b0)?;
    if t == 0.0 {
        return Ok(PacketState::initial(&ic, params));
    }
    let record = integrate_trajectory(&ic, potential, params, &[0.0, t], KERNEL_ODE_TOL)?;
    Ok(*record.last())
}

/// Closed-form value of Φ(v₀, x, t) = (2πa₀²)^{1/4}·ψ(x, t) given the
/// trajectory state at t.
fn family_value(state: &PacketState, a0: f64, params: &PhysicsParams, x: f64) -> Complex64 {
    let u = x - state.q;
    let k1 = params.mass * state.qdot / params.hbar;
    let k2 = 0.5 * params.mass / params.hbar * (state.adot / state.a - 0.5 * params.nu);
    let amp = (a0 / state.a).sqrt() * (-u * u / (4.0 * state.a * state.a)).exp();
    Complex64::from_polar(amp, state.s0 + k1 * u + k2 * u * u)
}

/// Φ(v₀, x, t) for the velocity family anchored at `ic_rest`: the packet
/// launched from ic_rest.x0 with velocity v₀, normalized by (2πa₀²)^{1/4}
/// so that Φ(v₀, x₀, 0) = e^{i m v₀ x₀/ℏ} is a pure phase.
pub fn phi_family(
    v0: f64,
    ic_rest: &InitialConditions,
    potential: &PotentialModel,
    params: &PhysicsParams,
    t: f64,
    x: f64,
) -> Result<Complex64> {
    let state = family_state(v0, ic_rest, potential, params, t)?;
    Ok(family_value(&state, ic_rest.a0, params, x))
}

/// Overlap ∫Φ*(v₀, x, t)·ψ(x) dx over ψ's grid.
pub fn family_overlap(
    v0: f64,
    ic_rest: &InitialConditions,
    potential: &PotentialModel,
    params: &PhysicsParams,
    t: f64,
    psi: &ComplexField,
) -> Result<Complex64> {
    if !psi.is_finite() {
        return Err(SchError::non_finite("family_overlap field"));
    }
    let state = family_state(v0, ic_rest, potential, params, t)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..psi.grid.n {
        let x = psi.grid.point(i);
        acc += psi.grid.weight(i) * family_value(&state, ic_rest.a0, params, x).conj()
            * psi.values[i];
    }
    Ok(acc)
}

/// Solution of the packet equations for a quadratic potential
/// V = k₀ + k₁x + ½k₂x², carried in a form valid for every launch point
/// and velocity at once: q(t) = p + u·x₀ + w·v₀ (particular + fundamental
/// solutions of the damped center equation) and
/// S₀(t) = c00 + c10·x₀ + c01·v₀ + c20·x₀² + c11·x₀v₀ + c02·v₀².
#[derive(Debug, Clone, Copy)]
struct QuadraticPath {
    a: f64,
    adot: f64,
    p: f64,
    pdot: f64,
    u: f64,
    udot: f64,
    w: f64,
    wdot: f64,
    c00: f64,
    c10: f64,
    c01: f64,
    c20: f64,
    c11: f64,
    c02: f64,
}

impl QuadraticPath {
    fn from_vector(y: &[f64; 14]) -> Self {
        Self {
            a: y[0],
            adot: y[1],
            p: y[2],
            pdot: y[3],
            u: y[4],
            udot: y[5],
            w: y[6],
            wdot: y[7],
            c00: y[8],
            c10: y[9],
            c01: y[10],
            c20: y[11],
            c11: y[12],
            c02: y[13],
        }
    }

    fn center(&self, x0: f64, v0: f64) -> (f64, f64) {
        (
            self.p + self.u * x0 + self.w * v0,
            self.pdot + self.udot * x0 + self.wdot * v0,
        )
    }

    /// S₀(t) − S₀(0), with S₀(0) = (m/ℏ)x₀v₀ subtracted through the c11
    /// coefficient so no large-phase cancellation occurs.
    fn action_increment(&self, x0: f64, v0: f64, params: &PhysicsParams) -> f64 {
        let dc11 = self.c11 - params.mass / params.hbar;
        self.c00
            + self.c10 * x0
            + self.c01 * v0
            + self.c20 * x0 * x0
            + dc11 * x0 * v0
            + self.c02 * v0 * v0
    }
}

fn integrate_quadratic_path(
    coeffs: (f64, f64, f64),
    ic_rest: &InitialConditions,
    params: &PhysicsParams,
    t: f64,
) -> Result<QuadraticPath> {
    let (k0, k1, k2) = coeffs;
    let m = params.mass;
    let hbar = params.hbar;
    let nu = params.nu;
    let y0: [f64; 14] = [
        ic_rest.a0,
        ic_rest.b0,
        0.0,
        0.0,
        1.0,
        0.0,
        0.0,
        1.0,
        0.0,
        0.0,
        0.0,
        0.0,
        m / hbar,
        0.0,
    ];
    if t == 0.0 {
        return Ok(QuadraticPath::from_vector(&y0));
    }
    let mut rhs = |tt: f64, y: &[f64; 14]| -> Result<[f64; 14]> {
        let [a, adot, p, pdot, u, udot, w, wdot, ..] = *y;
        if a < WIDTH_FLOOR {
            return Err(SchError::WidthCollapse { t: tt, a });
        }
        let beta = adot / a - 0.5 * nu;
        let mean_w = match params.variant {
            MeanActionVariant::Paper => 1.0,
            MeanActionVariant::Corrected => a * a,
        };
        let width_terms = 0.5 * nu * m * beta * mean_w - hbar * hbar / (4.0 * m * a * a);
        Ok([
            adot,
            -a * (k2 / m - 0.25 * nu * nu) + hbar * hbar / (4.0 * m * m * a * a * a),
            pdot,
            -nu * pdot - (k1 + k2 * p) / m,
            udot,
            -nu * udot - (k2 / m) * u,
            wdot,
            -nu * wdot - (k2 / m) * w,
            (0.5 * m * pdot * pdot + width_terms - k0 - k1 * p - 0.5 * k2 * p * p) / hbar,
            (m * pdot * udot - k1 * u - k2 * p * u) / hbar,
            (m * pdot * wdot - k1 * w - k2 * p * w) / hbar,
            (0.5 * m * udot * udot - 0.5 * k2 * u * u) / hbar,
            (m * udot * wdot - k2 * u * w) / hbar,
            (0.5 * m * wdot * wdot - 0.5 * k2 * w * w) / hbar,
        ])
    };
    let tol = Tolerances {
        rtol: KERNEL_ODE_TOL,
        atol: KERNEL_ODE_TOL * 1e-2,
    };
    let mut solver = Dopri5::new(0.0, y0, tol)?;
    solver.advance_to(t, &mut rhs)?;
    let y = *solver.state();
    if y[0] < WIDTH_FLOOR {
        return Err(SchError::WidthCollapse { t, a: y[0] });
    }
    Ok(QuadraticPath::from_vector(&y))
}

/// Per-pair envelope bookkeeping for one source column.
struct EnvelopeTracker {
    peak: Vec<f64>,
    edge: Vec<f64>,
}

impl EnvelopeTracker {
    fn new(n: usize) -> Self {
        Self {
            peak: vec![0.0; n],
            edge: vec![0.0; n],
        }
    }

    fn reset(&mut self) {
        self.peak.iter_mut().for_each(|p| *p = 0.0);
        self.edge.iter_mut().for_each(|e| *e = 0.0);
    }

    fn observe(&mut self, ix: usize, amp: f64, at_edge: bool) {
        if amp > self.peak[ix] {
            self.peak[ix] = amp;
        }
        if at_edge && amp > self.edge[ix] {
            self.edge[ix] = amp;
        }
    }

    fn worst_ratio(&self) -> f64 {
        self.peak
            .iter()
            .zip(&self.edge)
            .filter(|&(&p, _)| p > 0.0)
            .map(|(&p, &e)| e / p)
            .fold(0.0, f64::max)
    }
}

/// Assemble the kernel matrix at time t over the given grids.
///
/// Quadratic potentials use one 14-component integration shared by every
/// (source, velocity) pair; otherwise each pair integrates its own packet
/// trajectory. Fails when t ≤ t_min (distributional regime) or when the
/// integrand envelope has not decayed at the velocity-window edges.
pub fn kernel(
    t: f64,
    x_grid: &Grid,
    x0_grid: &Grid,
    quad: &VelocityQuadrature,
    ic_rest: &InitialConditions,
    potential: &PotentialModel,
    params: &PhysicsParams,
) -> Result<KernelMatrix> {
    if !t.is_finite() {
        return Err(SchError::invalid("kernel time must be finite"));
    }
    if t <= T_MIN {
        return Err(SchError::CausalityLimit { t, t_min: T_MIN });
    }
    match potential.quadratic_coefficients() {
        Some(coeffs) => {
            let path = integrate_quadratic_path(coeffs, ic_rest, params, t)?;
            kernel_from_paths(t, x_grid, x0_grid, quad, ic_rest, params, |x0, v| {
                let (q, qdot) = path.center(x0, v);
                Ok(NodeData {
                    q,
                    qdot,
                    a: path.a,
                    adot: path.adot,
                    ds0: path.action_increment(x0, v, params),
                    trajectories: 0,
                })
            })
            .map(|mut k| {
                k.trajectories = 1;
                k
            })
        }
        None => kernel_from_paths(t, x_grid, x0_grid, quad, ic_rest, params, |x0, v| {
            let column_ic = InitialConditions::new(x0, v, ic_rest.a0, ic_rest.b0)?;
            let state = family_state(v, &column_ic, potential, params, t)?;
            Ok(NodeData {
                q: state.q,
                qdot: state.qdot,
                a: state.a,
                adot: state.adot,
                ds0: state.s0 - params.mass * v * x0 / params.hbar,
                trajectories: 1,
            })
        }),
    }
}

/// Per-(source, node) packet data needed to evaluate the kernel integrand.
struct NodeData {
    q: f64,
    qdot: f64,
    a: f64,
    adot: f64,
    /// S₀(t) − S₀(0).
    ds0: f64,
    trajectories: usize,
}

fn kernel_from_paths(
    t: f64,
    x_grid: &Grid,
    x0_grid: &Grid,
    quad: &VelocityQuadrature,
    ic_rest: &InitialConditions,
    params: &PhysicsParams,
    mut node_data: impl FnMut(f64, f64) -> Result<NodeData>,
) -> Result<KernelMatrix> {
    let (nodes, weights) = quad.nodes_weights()?;
    let nx = x_grid.n;
    let n0 = x0_grid.n;
    let prefactor = params.mass / (2.0 * std::f64::consts::PI * params.hbar);
    let mut values = vec![Complex64::new(0.0, 0.0); nx * n0];
    let mut column = vec![Complex64::new(0.0, 0.0); nx];
    let mut tracker = EnvelopeTracker::new(nx);
    let mut worst_ratio = 0.0f64;
    let mut trajectories = 0usize;
    let a0 = ic_rest.a0;

    for i0 in 0..n0 {
        let x0 = x0_grid.point(i0);
        column.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        tracker.reset();
        for (iv, (&v, &wv)) in nodes.iter().zip(&weights).enumerate() {
            let data = node_data(x0, v)?;
            trajectories += data.trajectories;
            if data.a < WIDTH_FLOOR {
                return Err(SchError::WidthCollapse { t, a: data.a });
            }
            let amp0 = (a0 / data.a).sqrt();
            let inv4a2 = 1.0 / (4.0 * data.a * data.a);
            let k1 = params.mass * data.qdot / params.hbar;
            let k2 = 0.5 * params.mass / params.hbar * (data.adot / data.a - 0.5 * params.nu);
            let at_edge = iv == 0 || iv == nodes.len() - 1;
            for ix in 0..nx {
                let u = x_grid.point(ix) - data.q;
                let amp = amp0 * (-u * u * inv4a2).exp();
                let phase = data.ds0 + k1 * u + k2 * u * u;
                column[ix] += wv * Complex64::from_polar(amp, phase);
                tracker.observe(ix, amp, at_edge);
            }
        }
        worst_ratio = worst_ratio.max(tracker.worst_ratio());
        for ix in 0..nx {
            values[ix * n0 + i0] = prefactor * column[ix];
        }
    }

    if worst_ratio >= EDGE_ENVELOPE_LIMIT {
        return Err(SchError::VelocityWindowTooNarrow {
            v_min: quad.v_min,
            v_max: quad.v_max,
            edge_ratio: worst_ratio,
            limit: EDGE_ENVELOPE_LIMIT,
        });
    }
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SchError::non_finite("kernel matrix entries"));
    }
    Ok(KernelMatrix {
        t,
        x_grid: *x_grid,
        x0_grid: *x0_grid,
        values,
        variant: params.variant,
        quad: *quad,
        edge_envelope_ratio: worst_ratio,
        trajectories,
    })
}

/// Pick a velocity window wide enough that the kernel integrand decays at
/// the edges for every grid pair: it must cover every stationary velocity
/// v_c = (x − x₀)/t, extended by a margin set by how far the packet
/// envelope reaches in velocity (width over velocity-to-displacement gain,
/// floored by the family's intrinsic momentum spread ℏ/2ma₀).
pub fn auto_velocity_window(
    t: f64,
    x_grid: &Grid,
    x0_grid: &Grid,
    ic_rest: &InitialConditions,
    potential: &PotentialModel,
    params: &PhysicsParams,
    n_v: usize,
    rule: QuadratureRule,
) -> Result<VelocityQuadrature> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(SchError::invalid("auto window needs t > 0"));
    }
    let vc_lo = (x_grid.x_min - x0_grid.x_max) / t;
    let vc_hi = (x_grid.x_max - x0_grid.x_min) / t;
    let v_center = 0.5 * (vc_lo + vc_hi);
    let dv = (1e-3 * vc_hi.abs().max(vc_lo.abs())).max(1e-3);
    let hi = family_state(v_center + dv, ic_rest, potential, params, t)?;
    let lo = family_state(v_center - dv, ic_rest, potential, params, t)?;
    // Velocity-to-displacement gain ∂q(t)/∂v₀; near a focus it vanishes and
    // no finite window works — the floor below then produces an enormous
    // window whose assembly fails the edge-envelope check, which is the
    // honest outcome.
    let gain = ((hi.q - lo.q).abs() / (2.0 * dv)).max(1e-9 * t);
    let a_t = 0.5 * (hi.a + lo.a);
    let margin = 12.0 * (a_t / gain).max(params.hbar / (2.0 * params.mass * ic_rest.a0));
    VelocityQuadrature::new(vc_lo - margin, vc_hi + margin, n_v, rule)
}

/// ψ(x, t) = ∫K(x, x₀; t)·ψ₀(x₀) dx₀ by trapezoid contraction over the
/// kernel's source grid.
pub fn propagate(kernel: &KernelMatrix, psi0: &ComplexField) -> Result<ComplexField> {
    if !kernel.x0_grid.compatible(&psi0.grid) {
        return Err(SchError::GridMismatch(
            "propagate: psi0 must live on the kernel's source grid".into(),
        ));
    }
    if !psi0.is_finite() {
        return Err(SchError::non_finite("propagate input field"));
    }
    let n0 = kernel.x0_grid.n;
    let mut out = Vec::with_capacity(kernel.x_grid.n);
    for ix in 0..kernel.x_grid.n {
        let row = &kernel.values[ix * n0..(ix + 1) * n0];
        let mut acc = Complex64::new(0.0, 0.0);
        for i0 in 0..n0 {
            acc += kernel.x0_grid.weight(i0) * row[i0] * psi0.values[i0];
        }
        out.push(acc);
    }
    ComplexField::new(kernel.x_grid, out)
}

/// Indices of the sample points used by `delta_limit_check`: nine points
/// spread over the middle half of the test function's grid.
fn sample_indices(n: usize) -> Vec<usize> {
    (0..9).map(|k| n / 4 + k * (n / 2) / 8).collect()
}

/// Short-time sanity probe: applies the kernel at `t_small` to a smooth test
/// function and returns max over sampled x of |(K f)(x) − f(x)|. As t → 0
/// the kernel approaches δ(x − x₀), so the deviation must shrink.
///
/// Works below `T_MIN` (that is its purpose); the velocity window must cover
/// the test function's bandwidth mℏ⁻¹-scaled, which is checked through the
/// decay of the velocity-resolved inner sums at the window edges.
pub fn delta_limit_check(
    t_small: f64,
    f: &RealField,
    quad: &VelocityQuadrature,
    ic_rest: &InitialConditions,
    potential: &PotentialModel,
    params: &PhysicsParams,
) -> Result<f64> {
    if !(t_small > 0.0 && t_small.is_finite()) {
        return Err(SchError::invalid("delta_limit_check needs t_small > 0"));
    }
    if !f.is_finite() {
        return Err(SchError::non_finite("delta_limit_check test function"));
    }
    if f.values.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let grid = f.grid;
    let samples = sample_indices(grid.n);
    let (nodes, weights) = quad.nodes_weights()?;
    let n_v = nodes.len();
    let prefactor = params.mass / (2.0 * std::f64::consts::PI * params.hbar);

    // inner[s][iv] = Σ_{x₀} w₀ f(x₀)·Φ*(v,x₀,0)Φ(v,x_s,t) — the kernel
    // integrand contracted over sources at fixed sample point and node.
    let mut inner = vec![Complex64::new(0.0, 0.0); samples.len() * n_v];
    match potential.quadratic_coefficients() {
        Some(coeffs) => {
            let path = integrate_quadratic_path(coeffs, ic_rest, params, t_small)?;
            if path.a < WIDTH_FLOOR {
                return Err(SchError::WidthCollapse {
                    t: t_small,
                    a: path.a,
                });
            }
            let amp0 = (ic_rest.a0 / path.a).sqrt();
            let inv4a2 = 1.0 / (4.0 * path.a * path.a);
            let k2 = 0.5 * params.mass / params.hbar * (path.adot / path.a - 0.5 * params.nu);
            for (iv, &v) in nodes.iter().enumerate() {
                for i0 in 0..grid.n {
                    let x0 = grid.point(i0);
                    let wf = grid.weight(i0) * f.values[i0];
                    if wf == 0.0 {
                        continue;
                    }
                    let (q, qdot) = path.center(x0, v);
                    let k1 = params.mass * qdot / params.hbar;
                    let ds0 = path.action_increment(x0, v, params);
                    for (s, &is) in samples.iter().enumerate() {
                        let u = grid.point(is) - q;
                        let amp = amp0 * (-u * u * inv4a2).exp();
                        let phase = ds0 + k1 * u + k2 * u * u;
                        inner[s * n_v + iv] += wf * Complex64::from_polar(amp, phase);
                    }
                }
            }
        }
        None => {
            for i0 in 0..grid.n {
                let x0 = grid.point(i0);
                let wf = grid.weight(i0) * f.values[i0];
                if wf == 0.0 {
                    continue;
                }
                let column_ic = InitialConditions::new(x0, 0.0, ic_rest.a0, ic_rest.b0)?;
                for (iv, &v) in nodes.iter().enumerate() {
                    let state = family_state(v, &column_ic, potential, params, t_small)?;
                    let ds0 = state.s0 - params.mass * v * x0 / params.hbar;
                    let shifted = PacketState { s0: ds0, ..state };
                    for (s, &is) in samples.iter().enumerate() {
                        let x = grid.point(is);
                        inner[s * n_v + iv] += wf * family_value(&shifted, ic_rest.a0, params, x);
                    }
                }
            }
        }
    }

    let mut deviation = 0.0f64;
    for (s, &is) in samples.iter().enumerate() {
        let row = &inner[s * n_v..(s + 1) * n_v];
        let peak = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let edge = row[0].norm().max(row[n_v - 1].norm());
        if peak > 0.0 && edge / peak >= INNER_SUM_EDGE_LIMIT {
            return Err(SchError::VelocityWindowTooNarrow {
                v_min: quad.v_min,
                v_max: quad.v_max,
                edge_ratio: edge / peak,
                limit: INNER_SUM_EDGE_LIMIT,
            });
        }
        let mut out = Complex64::new(0.0, 0.0);
        for (z, &wv) in row.iter().zip(&weights) {
            out += wv * z;
        }
        out *= prefactor;
        deviation = deviation.max((out - f.values[is]).norm());
    }
    Ok(deviation)
}

/// Weak-sense check of the family completeness relation
/// ∫dv₀ Φ*(v₀,x,t)Φ(v₀,x′,t) = (2πℏ/m)δ(x−x′): contracts the left side
/// against the test function f over x′ and compares with f(x) across the
/// pair grid, and separately integrates the delta weight at the family's
/// densest point for comparison with 2πℏ/m.
pub fn completeness_check(
    t: f64,
    x_pair_grid: &Grid,
    quad: &VelocityQuadrature,
    f: &RealField,
    ic_rest: &InitialConditions,
    potential: &PotentialModel,
    params: &PhysicsParams,
) -> Result<CompletenessReport> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SchError::invalid("completeness_check needs t ≥ 0"));
    }
    if !x_pair_grid.compatible(&f.grid) {
        return Err(SchError::GridMismatch(
            "completeness_check: test function must live on the pair grid".into(),
        ));
    }
    if !f.is_finite() {
        return Err(SchError::non_finite("completeness_check test function"));
    }
    let grid = *x_pair_grid;
    let (nodes, weights) = quad.nodes_weights()?;
    let n_v = nodes.len();
    let n = grid.n;

    // rows[iv] = Φ(v_iv, ·, t) over the pair grid.
    let mut rows = vec![Complex64::new(0.0, 0.0); n_v * n];
    for (iv, &v) in nodes.iter().enumerate() {
        let state = family_state(v, ic_rest, potential, params, t)?;
        let row = &mut rows[iv * n..(iv + 1) * n];
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = family_value(&state, ic_rest.a0, params, grid.point(i));
        }
    }

    let mut inner_f = vec![Complex64::new(0.0, 0.0); n_v];
    let mut inner_one = vec![Complex64::new(0.0, 0.0); n_v];
    for iv in 0..n_v {
        let row = &rows[iv * n..(iv + 1) * n];
        let mut acc_f = Complex64::new(0.0, 0.0);
        let mut acc_1 = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let w = grid.weight(i);
            acc_f += w * f.values[i] * row[i];
            acc_1 += w * row[i];
        }
        inner_f[iv] = acc_f;
        inner_one[iv] = acc_1;
    }

    let peak_f = inner_f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge_f = inner_f[0].norm().max(inner_f[n_v - 1].norm());
    if peak_f > 0.0 && edge_f / peak_f >= INNER_SUM_EDGE_LIMIT {
        return Err(SchError::VelocityWindowTooNarrow {
            v_min: quad.v_min,
            v_max: quad.v_max,
            edge_ratio: edge_f / peak_f,
            limit: INNER_SUM_EDGE_LIMIT,
        });
    }

    let prefactor = params.mass / (2.0 * std::f64::consts::PI * params.hbar);
    let mut weak_deviation = 0.0f64;
    for i in 0..n {
        let mut out = Complex64::new(0.0, 0.0);
        for iv in 0..n_v {
            out += weights[iv] * rows[iv * n + i].conj() * inner_f[iv];
        }
        out *= prefactor;
        weak_deviation = weak_deviation.max((out - f.values[i]).norm());
    }

    // Densest point of the family: where Σ_v w_v |Φ|² peaks.
    let mut x_c = 0;
    let mut best = -1.0f64;
    for i in 0..n {
        let mut density = 0.0;
        for iv in 0..n_v {
            density += weights[iv] * rows[iv * n + i].norm_sqr();
        }
        if density > best {
            best = density;
            x_c = i;
        }
    }
    let mut weight_integral = Complex64::new(0.0, 0.0);
    for iv in 0..n_v {
        weight_integral += weights[iv] * rows[iv * n + x_c].conj() * inner_one[iv];
    }

    Ok(CompletenessReport {
        weak_deviation,
        weight_integral: weight_integral.norm(),
    })
}
