//! Heat equation `u' - div(A grad u) = f` with `u = 0` on the boundary,
//! discretized in space by P1/P2 elements and in time by implicit Euler,
//! Crank-Nicolson, dG(0) or dG(1).
//!
//! The step functions act on the system reduced to the free DOFs: `m` and
//! `k` are the mass and stiffness matrices, loads are vectors `(f, phi_i)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::{debug, info};

use crate::assembly::{
    assemble_load, assemble_mass, assemble_stiffness, constant, dirichlet_values, CoefficientSet, RulePolicy,
    ScalarField,
};
use crate::error::{FemError, Result};
use crate::linalg::{cg_solve, dot, energy_norms, lu_solve, CgOptions, CooBuilder, SparseMatrix};
use crate::mesh::{Mesh, Point};
use crate::problems::HeatDecay;
use crate::refelem::{interpolate, ElementKind, FeFunction};

/// Time nodes `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(FemError::InvalidArgument("a time grid needs at least two nodes".into()));
        }
        if times[0] != 0.0 {
            return Err(FemError::InvalidArgument(format!("time grid must start at 0, got {}", times[0])));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(FemError::InvalidArgument(format!(
                "time nodes must increase strictly: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(TimeGrid { times })
    }

    /// `n` equal steps on `[0, t_end]`.
    pub fn uniform(t_end: f64, n: usize) -> Result<Self> {
        if n == 0 || !(t_end > 0.0) {
            return Err(FemError::InvalidArgument(format!("need n >= 1 steps and T > 0, got {n} and {t_end}")));
        }
        Self::new((0..=n).map(|m| t_end * m as f64 / n as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Step size `k_m = t_m - t_{m-1}`, `m >= 1`.
    pub fn step(&self, m: usize) -> f64 {
        self.times[m] - self.times[m - 1]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("at least two nodes")
    }

    pub fn max_step(&self) -> f64 {
        (1..self.times.len()).map(|m| self.step(m)).fold(0.0, f64::max)
    }
}

/// Time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
    Dg0,
    Dg1,
}

impl TimeScheme {
    pub const ALL: [TimeScheme; 4] =
        [TimeScheme::ImplicitEuler, TimeScheme::CrankNicolson, TimeScheme::Dg0, TimeScheme::Dg1];

    /// Classical nodal order in the step size.
    pub fn order(self) -> usize {
        match self {
            TimeScheme::ImplicitEuler | TimeScheme::Dg0 => 1,
            TimeScheme::CrankNicolson => 2,
            TimeScheme::Dg1 => 3,
        }
    }
}

impl fmt::Display for TimeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeScheme::ImplicitEuler => "euler",
            TimeScheme::CrankNicolson => "cn",
            TimeScheme::Dg0 => "dg0",
            TimeScheme::Dg1 => "dg1",
        })
    }
}

impl FromStr for TimeScheme {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" | "implicit-euler" | "ie" => Ok(TimeScheme::ImplicitEuler),
            "cn" | "crank-nicolson" => Ok(TimeScheme::CrankNicolson),
            "dg0" => Ok(TimeScheme::Dg0),
            "dg1" => Ok(TimeScheme::Dg1),
            other => {
                Err(FemError::InvalidArgument(format!("unknown time scheme '{other}'; expected euler, cn, dg0 or dg1")))
            }
        }
    }
}

const STEP_CG: CgOptions = CgOptions { tol: 1e-13, max_iter: None };

/// Solves `(M + c K) x = rhs` by conjugate gradients.
fn solve_shifted(m: &SparseMatrix, k: &SparseMatrix, c: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let a = m.add_scaled(1.0, k, c)?;
    Ok(cg_solve(&a, rhs, STEP_CG)?.x)
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

/// `(M + k K) u = M u_prev + k F(t + k)`.
pub fn step_implicit_euler(
    m: &SparseMatrix,
    k: &SparseMatrix,
    u_prev: &[f64],
    dt: f64,
    f_next: &[f64],
) -> Result<Vec<f64>> {
    let mut rhs = m.matvec(u_prev);
    axpy(&mut rhs, dt, f_next);
    solve_shifted(m, k, dt, &rhs)
}

/// `(M + k/2 K) u = (M - k/2 K) u_prev + k F(t + k/2)`.
pub fn step_crank_nicolson(
    m: &SparseMatrix,
    k: &SparseMatrix,
    u_prev: &[f64],
    dt: f64,
    f_mid: &[f64],
) -> Result<Vec<f64>> {
    let mut rhs = m.matvec(u_prev);
    axpy(&mut rhs, -0.5 * dt, &k.matvec(u_prev));
    axpy(&mut rhs, dt, f_mid);
    solve_shifted(m, k, 0.5 * dt, &rhs)
}

/// `(M + k K) u = M u_prev + int_J F dt`.
pub fn step_dg0(m: &SparseMatrix, k: &SparseMatrix, u_prev: &[f64], dt: f64, f_integral: &[f64]) -> Result<Vec<f64>> {
    let mut rhs = m.matvec(u_prev);
    axpy(&mut rhs, 1.0, f_integral);
    solve_shifted(m, k, dt, &rhs)
}

/// One dG(1) step: `u(t) = u0 + u1 (t - t_{m-1}) / k` on the interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Dg1Step {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
}

impl Dg1Step {
    /// Left limit at the end of the interval, `u0 + u1`.
    pub fn end_value(&self) -> Vec<f64> {
        self.u0.iter().zip(&self.u1).map(|(a, b)| a + b).collect()
    }

    /// Value at the relative position `s` in `[0, 1]` of the interval.
    pub fn at(&self, s: f64) -> Vec<f64> {
        self.u0.iter().zip(&self.u1).map(|(a, b)| a + s * b).collect()
    }
}

/// Solves the coupled dG(1) system
///
/// `[[M + k K, M + k/2 K], [k/2 K, M/2 + k/3 K]] (u0; u1) = (M u_prev + F0; F1)`
///
/// with `F0 = int_J F dt` and `F1 = (1/k) int_J (t - t_{m-1}) F dt`.
pub fn step_dg1(
    m: &SparseMatrix,
    k: &SparseMatrix,
    u_prev: &[f64],
    dt: f64,
    f0: &[f64],
    f1: &[f64],
) -> Result<Dg1Step> {
    let n = m.rows();
    let blocks = [
        (0, 0, m.add_scaled(1.0, k, dt)?),
        (0, n, m.add_scaled(1.0, k, 0.5 * dt)?),
        (n, 0, k.scaled(0.5 * dt)),
        (n, n, m.add_scaled(0.5, k, dt / 3.0)?),
    ];
    let mut b = CooBuilder::new(2 * n, 2 * n);
    for (r0, c0, block) in &blocks {
        for i in 0..n {
            let (cols, vals) = block.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.add(r0 + i, c0 + j, v);
            }
        }
    }
    let mut rhs = m.matvec(u_prev);
    axpy(&mut rhs, 1.0, f0);
    rhs.extend_from_slice(f1);
    let x = lu_solve(&b.finalize(), &rhs)?;
    Ok(Dg1Step { u0: x[..n].to_vec(), u1: x[n..].to_vec() })
}

/// Two-point Gauss nodes on `[a, b]` as fractions of the interval.
const GAUSS2: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];

/// How the initial value enters the discrete space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialValue {
    #[default]
    Interpolation,
    L2Projection,
}

/// Space-time source term.
pub type SourceField = Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>;

/// Heat problem on a fixed mesh with homogeneous Dirichlet conditions.
#[derive(Clone)]
pub struct HeatProblem {
    pub mesh: Arc<Mesh>,
    pub kind: ElementKind,
    /// Diffusion (and optionally reaction) coefficients; source and boundary
    /// entries are ignored.
    pub coeffs: CoefficientSet,
    pub u0: ScalarField,
    pub f: SourceField,
    pub grid: TimeGrid,
    pub scheme: TimeScheme,
    pub initial: InitialValue,
}

impl HeatProblem {
    /// `u = e^{-t} sin(pi x) sin(pi y)` on `mesh` with `n_steps` equal steps on `[0, t_end]`.
    pub fn decay(mesh: Arc<Mesh>, kind: ElementKind, scheme: TimeScheme, t_end: f64, n_steps: usize) -> Result<Self> {
        let ex = HeatDecay;
        Ok(HeatProblem {
            mesh,
            kind,
            coeffs: CoefficientSet::poisson(constant(0.0)),
            u0: Arc::new(move |p| ex.u(0.0, p)),
            f: Arc::new(move |t, p| ex.f(t, p)),
            grid: TimeGrid::uniform(t_end, n_steps)?,
            scheme,
            initial: InitialValue::Interpolation,
        })
    }
}

/// Mass and stiffness matrices restricted to the free DOFs.
#[derive(Debug, Clone)]
pub struct HeatOperators {
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    /// Full mass matrix, for L2 norms of full vectors.
    pub full_mass: SparseMatrix,
    pub free: Vec<usize>,
    n_full: usize,
    mesh: Arc<Mesh>,
    kind: ElementKind,
}

impl HeatOperators {
    pub fn new(mesh: &Arc<Mesh>, kind: ElementKind, coeffs: &CoefficientSet) -> Result<Self> {
        if !matches!(kind, ElementKind::P1 | ElementKind::P2) {
            return Err(FemError::UnsupportedElement(format!("heat solver needs P1 or P2, got {kind}")));
        }
        let mut diffusion = coeffs.clone();
        diffusion.source = None;
        diffusion.boundary.clear();
        let tags = mesh.boundary_tags();
        let zero = CoefficientSet::poisson(constant(0.0)).with_dirichlet(&tags, constant(0.0));
        let fixed = dirichlet_values(mesh, kind, &zero)?;
        let k = assemble_stiffness(mesh, kind, &diffusion, RulePolicy::Default)?;
        let m = assemble_mass(mesh, kind)?;
        let n_full = m.rows();
        let mut is_fixed = vec![false; n_full];
        fixed.iter().for_each(|&(d, _)| is_fixed[d] = true);
        let free: Vec<usize> = (0..n_full).filter(|&i| !is_fixed[i]).collect();
        Ok(HeatOperators {
            mass: m.submatrix(&free, &free),
            stiffness: k.submatrix(&free, &free),
            full_mass: m,
            free,
            n_full,
            mesh: Arc::clone(mesh),
            kind,
        })
    }

    /// Reduced load vector `(f, phi_i)` for the free DOFs.
    pub fn load(&self, f: &dyn Fn(Point) -> f64) -> Result<Vec<f64>> {
        let full = assemble_load(&self.mesh, self.kind, f, RulePolicy::Default)?;
        Ok(self.free.iter().map(|&i| full[i]).collect())
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n_full];
        for (&i, &v) in self.free.iter().zip(reduced) {
            u[i] = v;
        }
        u
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// `u^T M u` of a reduced vector.
    pub fn energy(&self, u: &[f64]) -> f64 {
        dot(u, &self.mass.matvec(u))
    }

    /// Exact L2 norm of the difference of two full coefficient vectors.
    pub fn l2_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        dot(&d, &self.full_mass.matvec(&d)).max(0.0).sqrt()
    }

    fn initial(&self, u0: &ScalarField, how: InitialValue) -> Result<Vec<f64>> {
        match how {
            InitialValue::Interpolation => {
                let full = interpolate(&self.mesh, self.kind, |p| u0(p))?;
                Ok(self.restrict(full.coefficients()))
            }
            InitialValue::L2Projection => {
                let rhs = self.load(&|p| u0(p))?;
                Ok(cg_solve(&self.mass, &rhs, STEP_CG)?.x)
            }
        }
    }
}

/// Computed trajectory of a heat problem.
#[derive(Debug, Clone)]
pub struct HeatSolution {
    pub times: Vec<f64>,
    /// Full coefficient vectors (Dirichlet DOFs included) at every time node.
    pub states: Vec<Vec<f64>>,
    /// `u_m^T M u_m` at every node.
    pub energy: Vec<f64>,
    /// L2 errors against the exact solution at every node, if known.
    pub errors: Option<Vec<f64>>,
}

impl HeatSolution {
    pub fn max_error(&self) -> Option<f64> {
        self.errors.as_ref().map(|e| e.iter().copied().fold(0.0, f64::max))
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("at least the initial state")
    }

    /// CSV with columns `t, l2_error, energy`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,l2_error,energy\n");
        for (m, t) in self.times.iter().enumerate() {
            let e = self.errors.as_ref().map_or(f64::NAN, |e| e[m]);
            s.push_str(&format!(
                "{},{},{}\n",
                crate::study::fmt_float(*t),
                crate::study::fmt_float(e),
                crate::study::fmt_float(self.energy[m])
            ));
        }
        s
    }
}

/// Marches the problem through its time grid with preassembled operators.
pub fn solve_heat_with(
    problem: &HeatProblem,
    ops: &HeatOperators,
    exact: Option<&dyn Fn(f64, Point) -> f64>,
) -> Result<HeatSolution> {
    let (m, k) = (&ops.mass, &ops.stiffness);
    let grid = &problem.grid;
    let f = &problem.f;
    let load_at = |t: f64| ops.load(&|p| f(t, p));
    let mut u = ops.initial(&problem.u0, problem.initial)?;
    let mut states = vec![ops.expand(&u)];
    let mut energy = vec![ops.energy(&u)];
    for step in 1..=grid.n_steps() {
        let (t0, dt) = (grid.times()[step - 1], grid.step(step));
        u = match problem.scheme {
            TimeScheme::ImplicitEuler => step_implicit_euler(m, k, &u, dt, &load_at(t0 + dt)?)?,
            TimeScheme::CrankNicolson => step_crank_nicolson(m, k, &u, dt, &load_at(t0 + 0.5 * dt)?)?,
            TimeScheme::Dg0 => {
                let mut integral = load_at(t0 + GAUSS2[0] * dt)?;
                axpy(&mut integral, 1.0, &load_at(t0 + GAUSS2[1] * dt)?);
                integral.iter_mut().for_each(|v| *v *= 0.5 * dt);
                step_dg0(m, k, &u, dt, &integral)?
            }
            TimeScheme::Dg1 => {
                let (fa, fb) = (load_at(t0 + GAUSS2[0] * dt)?, load_at(t0 + GAUSS2[1] * dt)?);
                let f0: Vec<f64> = fa.iter().zip(&fb).map(|(a, b)| 0.5 * dt * (a + b)).collect();
                let f1: Vec<f64> =
                    fa.iter().zip(&fb).map(|(a, b)| 0.5 * dt * (GAUSS2[0] * a + GAUSS2[1] * b)).collect();
                step_dg1(m, k, &u, dt, &f0, &f1)?.end_value()
            }
        };
        states.push(ops.expand(&u));
        energy.push(ops.energy(&u));
    }
    let errors = match exact {
        None => None,
        Some(ex) => Some(
            grid.times()
                .iter()
                .zip(&states)
                .map(|(&t, s)| {
                    let uh = FeFunction::new(Arc::clone(&problem.mesh), problem.kind, s.clone())?;
                    Ok(energy_norms(&uh, |p| ex(t, p), |_| [0.0, 0.0])?.l2)
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
    };
    debug!("heat {}: {} steps, final energy {:.4e}", problem.scheme, grid.n_steps(), energy.last().unwrap());
    Ok(HeatSolution { times: grid.times().to_vec(), states, energy, errors })
}

/// Assembles the operators and marches the problem.
pub fn solve_heat(problem: &HeatProblem, exact: Option<&dyn Fn(f64, Point) -> f64>) -> Result<HeatSolution> {
    let ops = HeatOperators::new(&problem.mesh, problem.kind, &problem.coeffs)?;
    solve_heat_with(problem, &ops, exact)
}

/// What the temporal error of a step-size sweep is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeReference {
    /// The manufactured solution; includes the spatial error.
    Exact,
    /// The semi-discrete solution on the same mesh, approximated by
    /// Crank-Nicolson with `factor` times more steps than the finest run.
    FineSteps(usize),
}

/// Temporal convergence of `scheme` for the decaying manufactured solution:
/// error at the final time for each step count, against `reference`.
pub fn time_study(
    mesh: &Arc<Mesh>,
    kind: ElementKind,
    scheme: TimeScheme,
    t_end: f64,
    steps: &[usize],
    reference: TimeReference,
) -> Result<crate::study::RateTable> {
    crate::study::RateTable::check_levels(steps.len())?;
    let ex = HeatDecay;
    let base = HeatProblem::decay(Arc::clone(mesh), kind, scheme, t_end, 1)?;
    let ops = HeatOperators::new(mesh, kind, &base.coeffs)?;
    let reference_state = match reference {
        TimeReference::Exact => None,
        TimeReference::FineSteps(factor) => {
            let n = steps.iter().max().copied().unwrap_or(1) * factor.max(1);
            let mut p = base.clone();
            p.scheme = TimeScheme::CrankNicolson;
            p.grid = TimeGrid::uniform(t_end, n)?;
            info!("time reference: Crank-Nicolson with {n} steps");
            Some(solve_heat_with(&p, &ops, None)?.final_state().to_vec())
        }
    };
    let mut table = crate::study::RateTable::new(&["l2"]);
    for &n in steps {
        let mut p = base.clone();
        p.grid = TimeGrid::uniform(t_end, n)?;
        let sol = solve_heat_with(&p, &ops, None)?;
        let err = match &reference_state {
            Some(r) => ops.l2_distance(sol.final_state(), r),
            None => {
                let uh = FeFunction::new(Arc::clone(mesh), kind, sol.final_state().to_vec())?;
                energy_norms(&uh, |x| ex.u(t_end, x), |_| [0.0, 0.0])?.l2
            }
        };
        table.push(t_end / n as f64, ops.free.len(), vec![err]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    fn scalar(v: f64) -> SparseMatrix {
        SparseMatrix::from_dense(&[vec![v]])
    }

    #[test]
    fn scalar_amplification_factors() {
        let (lam, dt) = (3.0, 0.2);
        let (m, k) = (scalar(1.0), scalar(lam));
        let ie = step_implicit_euler(&m, &k, &[1.0], dt, &[0.0]).unwrap()[0];
        assert!((ie - 1.0 / (1.0 + lam * dt)).abs() < 1e-14);
        let cn = step_crank_nicolson(&m, &k, &[1.0], dt, &[0.0]).unwrap()[0];
        assert!((cn - (1.0 - 0.5 * lam * dt) / (1.0 + 0.5 * lam * dt)).abs() < 1e-14);
        let z = lam * dt;
        let dg1 = step_dg1(&m, &k, &[1.0], dt, &[0.0], &[0.0]).unwrap().end_value()[0];
        assert!((dg1 - (6.0 - 2.0 * z) / (6.0 + 4.0 * z + z * z)).abs() < 1e-14);
    }

    #[test]
    fn cn_node_annihilates() {
        let cn = step_crank_nicolson(&scalar(1.0), &scalar(4.0), &[1.0], 0.5, &[0.0]).unwrap()[0];
        assert!(cn.abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.1, 0.5]).is_err());
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.n_steps(), 4);
        assert!((g.step(2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_data_stays_zero() {
        let mesh = Arc::new(unit_square_mesh(3).unwrap());
        for scheme in TimeScheme::ALL {
            let mut p = HeatProblem::decay(Arc::clone(&mesh), ElementKind::P1, scheme, 1.0, 4).unwrap();
            p.u0 = constant(0.0);
            p.f = Arc::new(|_, _| 0.0);
            let sol = solve_heat(&p, None).unwrap();
            assert!(sol.states.iter().flatten().all(|v| *v == 0.0), "{scheme}");
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in TimeScheme::ALL {
            assert_eq!(s.to_string().parse::<TimeScheme>().unwrap(), s);
        }
    }
}
