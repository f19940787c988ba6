use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::error::{Result, WgError};
use crate::par;
use crate::problem::{ExactSolution, ProblemSpec};
use crate::weak::{project_exact, reference_edge_point, Discretization, WeakFunction};

/// Errors at or below this are treated as exact when estimating rates.
pub const EXACT_FLOOR: f64 = 1e-10;

/// Relative tolerance of the conservation and flux-continuity checks.
pub const FLUX_TOLERANCE: f64 = 1e-9;

/// One refinement level of an error study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    /// Largest triangle diameter.
    pub h: f64,
    pub dofs: usize,
    /// `||grad_d (u_h - Q_h u)||`.
    pub e_h1: f64,
    /// `||u_0 - Q_0 u||`.
    pub e_l2proj: f64,
    /// `||u_0 - u||`.
    pub e_l2: f64,
}

/// The three error norms of `u_h` against the exact solution.
pub fn error_norms(disc: &Discretization, exact: &ExactSolution, uh: &WeakFunction) -> Result<ErrorRow> {
    let qh = project_exact(disc, &exact.u)?;
    let diff = uh.sub(&qh);
    let mesh = disc.mesh();
    let parts = par::map_indexed(mesh.num_triangles(), |t| -> Result<[f64; 3]> {
        // both bases are orthonormal, so coefficient norms are L2 norms
        let g = disc.gradient(t).apply(&diff.local(mesh, t));
        let proj: f64 = diff.interior(t).iter().map(|c| c * c).sum();
        let mut l2 = 0.0;
        for (xi, x, w) in disc.quadrature(t) {
            let e = disc.interior_value(t, uh.interior(t), xi) - exact.u.eval(x)?;
            l2 += w * e * e;
        }
        Ok([g.norm_squared(), proj, l2])
    });
    let mut sums = [0.0; 3];
    for p in parts {
        let p = p?;
        for k in 0..3 {
            sums[k] += p[k];
        }
    }
    Ok(ErrorRow {
        h: mesh.h_max(),
        dofs: disc.dofs().total(),
        e_h1: sums[0].sqrt(),
        e_l2proj: sums[1].sqrt(),
        e_l2: sums[2].sqrt(),
    })
}

/// Observed order between two levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Observed(f64),
    /// Both errors are at roundoff level; no rate can be measured.
    Exact,
}

impl Rate {
    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Observed(r) => Some(r),
            Rate::Exact => None,
        }
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::Observed(r) => write!(f, "{r:.4}"),
            Rate::Exact => f.write_str("exact"),
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rate::Observed(r) => s.serialize_f64(*r),
            Rate::Exact => s.serialize_str("exact"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    /// `rates[k]` compares levels `k` and `k + 1`.
    pub per_step: Vec<Rate>,
    /// Slope of `log e` against `log h` over levels above the exactness floor.
    pub least_squares: Option<f64>,
}

impl RateEstimate {
    pub fn finest(&self) -> Option<Rate> {
        self.per_step.last().copied()
    }
}

/// Per-step rates `log(e_k / e_{k+1}) / log(h_k / h_{k+1})` and the
/// least-squares slope.
pub fn estimate_rates(h: &[f64], e: &[f64]) -> Result<RateEstimate> {
    if h.len() != e.len() || h.len() < 2 {
        return Err(WgError::InvalidArgument(
            "rate estimation needs at least two levels with matching h and error".into(),
        ));
    }
    let per_step = (0..h.len() - 1)
        .map(|k| {
            if e[k] <= EXACT_FLOOR || e[k + 1] <= EXACT_FLOOR {
                Rate::Exact
            } else {
                Rate::Observed((e[k] / e[k + 1]).ln() / (h[k] / h[k + 1]).ln())
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(_, &e)| e > EXACT_FLOOR)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let least_squares = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(RateEstimate { per_step, least_squares })
}

/// Error table with rates for every norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub levels: Vec<ErrorRow>,
    pub rates_h1: RateEstimate,
    pub rates_l2proj: RateEstimate,
    pub rates_l2: RateEstimate,
}

impl ErrorReport {
    pub fn new(levels: Vec<ErrorRow>) -> Result<Self> {
        let h: Vec<f64> = levels.iter().map(|r| r.h).collect();
        let col = |f: fn(&ErrorRow) -> f64| levels.iter().map(f).collect::<Vec<_>>();
        Ok(ErrorReport {
            rates_h1: estimate_rates(&h, &col(|r| r.e_h1))?,
            rates_l2proj: estimate_rates(&h, &col(|r| r.e_l2proj))?,
            rates_l2: estimate_rates(&h, &col(|r| r.e_l2))?,
            levels,
        })
    }

    pub const CSV_HEADER: &'static str = "h,dofs,eH1,eL2proj,eL2,rate_eH1,rate_eL2proj";

    /// One row per level; the first row has empty rate cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (k, r) in self.levels.iter().enumerate() {
            let rate = |est: &RateEstimate| match k {
                0 => String::new(),
                _ => est.per_step[k - 1].to_string(),
            };
            let _ = writeln!(
                out,
                "{:.10e},{},{:.10e},{:.10e},{:.10e},{},{}",
                r.h,
                r.dofs,
                r.e_h1,
                r.e_l2proj,
                r.e_l2,
                rate(&self.rates_h1),
                rate(&self.rates_l2proj)
            );
        }
        out
    }
}

/// Coefficients of `R_h(-a grad_d u_h + b u_0)` on triangle `t`, in the
/// orthonormal gradient basis.
pub fn flux_coefficients(
    disc: &Discretization,
    problem: &ProblemSpec,
    uh: &WeakFunction,
    t: usize,
) -> Result<Vec<f64>> {
    let grad = disc.gradient(t);
    let vs = grad.vector_space();
    let g = grad.apply(&uh.local(disc.mesh(), t));
    let mut c = vec![0.0; vs.dim()];
    for (xi, x, w) in disc.quadrature(t) {
        let a = problem.diffusion(x)?;
        let b = problem.convection(x)?;
        let du = vs.combine(g.as_slice(), xi);
        let u0 = disc.interior_value(t, uh.interior(t), xi);
        let q = [
            -(a[0][0] * du[0] + a[0][1] * du[1]) + b[0] * u0,
            -(a[1][0] * du[0] + a[1][1] * du[1]) + b[1] * u0,
        ];
        for (cm, psi) in c.iter_mut().zip(vs.eval(xi)) {
            *cm += w * (q[0] * psi[0] + q[1] * psi[1]);
        }
    }
    Ok(c)
}

/// Outward normal flux `q_h . n_T` on local edge `k` of `t`, as Legendre
/// coefficients in the global direction of that edge.
pub fn numerical_flux(
    disc: &Discretization,
    problem: &ProblemSpec,
    uh: &WeakFunction,
    t: usize,
    k: usize,
) -> Result<Vec<f64>> {
    let coeffs = flux_coefficients(disc, problem, uh, t)?;
    Ok(edge_flux(disc, t, k, &coeffs))
}

fn edge_flux(disc: &Discretization, t: usize, k: usize, coeffs: &[f64]) -> Vec<f64> {
    let re = disc.reference();
    let vs = disc.gradient(t).vector_space();
    let (_, _, n) = disc.element_map(t).edge(k);
    let reversed = disc.mesh().orientations(t)[k] < 0;
    let mut out = vec![0.0; re.edge.dim()];
    let mut leg = vec![0.0; re.edge.dim()];
    for (s, w) in re.edge_rule.iter() {
        let q = vs.combine(coeffs, reference_edge_point(k, s));
        let qn = q[0] * n[0] + q[1] * n[1];
        re.edge.eval_into(if reversed { 1.0 - s } else { s }, &mut leg);
        for (o, l) in out.iter_mut().zip(&leg) {
            *o += w * qn * l;
        }
    }
    out
}

/// `|oint_{dT} q_h . n + int_T c u_0 - int_T f|` together with the
/// element's scale `|T| ||f||_inf + 1`.
pub fn conservation_residual(
    disc: &Discretization,
    problem: &ProblemSpec,
    uh: &WeakFunction,
    t: usize,
) -> Result<(f64, f64)> {
    let coeffs = flux_coefficients(disc, problem, uh, t)?;
    let mesh = disc.mesh();
    let mut boundary = 0.0;
    for k in 0..3 {
        let e = mesh.triangle_edges(t)[k];
        // the constant Legendre mode integrates to the mean over [0, 1]
        boundary += mesh.edge_length(e) * edge_flux(disc, t, k, &coeffs)[0];
    }
    let mut volume = 0.0;
    let mut f_max: f64 = 0.0;
    for (xi, x, w) in disc.quadrature(t) {
        let f = problem.f.eval(x)?;
        f_max = f_max.max(f.abs());
        volume += w * (problem.c.eval(x)? * disc.interior_value(t, uh.interior(t), xi) - f);
    }
    Ok(((boundary + volume).abs(), mesh.geometry(t).area * f_max + 1.0))
}

/// Mass balance and normal-flux continuity of a discrete solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxReport {
    /// Conservation residual of each element divided by its scale.
    pub element_residuals: Vec<f64>,
    /// `(edge, ||q_T . n_T + q_T' . n_T'||_{L2(e)} / scale)` for interior edges.
    pub edge_jumps: Vec<(usize, f64)>,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub max_jump: f64,
    pub mean_jump: f64,
    pub tolerance: f64,
}

impl FluxReport {
    pub fn conservation_ok(&self) -> bool {
        self.max_residual <= self.tolerance
    }

    pub fn continuity_ok(&self) -> bool {
        self.max_jump <= self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.conservation_ok() && self.continuity_ok()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,index,scaled_value\n");
        for (t, r) in self.element_residuals.iter().enumerate() {
            let _ = writeln!(out, "element,{t},{r:.6e}");
        }
        for (e, j) in &self.edge_jumps {
            let _ = writeln!(out, "edge,{e},{j:.6e}");
        }
        out
    }
}

/// Element residuals are scaled by `|T| ||f||_inf + 1`; edge jumps by
/// `1 + ` the larger one-sided flux norm on that edge.
pub fn flux_report(disc: &Discretization, problem: &ProblemSpec, uh: &WeakFunction) -> Result<FluxReport> {
    let mesh = disc.mesh();
    let nt = mesh.num_triangles();
    let coeffs: Vec<Vec<f64>> = par::map_indexed(nt, |t| flux_coefficients(disc, problem, uh, t))
        .into_iter()
        .collect::<Result<_>>()?;
    let residuals: Vec<f64> = par::map_indexed(nt, |t| {
        conservation_residual(disc, problem, uh, t).map(|(r, s)| r / s)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let interior: Vec<usize> = (0..mesh.num_edges()).filter(|&e| !mesh.edges()[e].boundary).collect();
    let jumps = par::map_indexed(interior.len(), |i| {
        let e = interior[i];
        let [t1, t2] = mesh.edges()[e].triangles;
        let side = |t: usize| {
            let k = mesh.local_edge_index(t, e).expect("edge belongs to its triangles");
            edge_flux(disc, t, k, &coeffs[t])
        };
        // Legendre coefficients are orthonormal on [0,1]: scale by sqrt|e|
        let (a, b) = (side(t1), side(t2));
        let len = mesh.edge_length(e).sqrt();
        let jump = a.iter().zip(&b).map(|(x, y)| (x + y).powi(2)).sum::<f64>().sqrt() * len;
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt() * len;
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt() * len;
        (e, jump / (1.0 + na.max(nb)))
    });
    let mean = |v: &mut dyn Iterator<Item = f64>, n: usize| if n == 0 { 0.0 } else { v.sum::<f64>() / n as f64 };
    Ok(FluxReport {
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        mean_residual: mean(&mut residuals.iter().copied(), residuals.len()),
        max_jump: jumps.iter().map(|j| j.1).fold(0.0, f64::max),
        mean_jump: mean(&mut jumps.iter().map(|j| j.1), jumps.len()),
        element_residuals: residuals,
        edge_jumps: jumps,
        tolerance: FLUX_TOLERANCE,
    })
}
