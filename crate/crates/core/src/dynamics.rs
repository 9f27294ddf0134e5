//! Time stepping: the scalar model problem and general systems
//! `M q'' = -A q + f(q)`, plus the reduction of linear systems to
//! independent model problems.
//!
//! For SPD `M = L L^T` the rotation flow is solved exactly in the modal
//! coordinates of `L^{-1} A L^{-T} = V diag(lambda) V^T`, where it is a set of
//! plane rotations with frequencies `sqrt(lambda)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::transfer_matrix;
use crate::schemes::{Family, Flow, SplittingScheme};

/// Norm at which a run is abandoned as exponentially unstable.
pub const BLOWUP_NORM: f64 = 1e150;
/// Relative symmetry tolerance for `M` and the reduced matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Residual allowed when checking simultaneous diagonalization.
pub const DIAGONALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub q: f64,
    pub p: f64,
}

impl ModelState {
    pub fn new(q: f64, p: f64) -> Self {
        ModelState { q, p }
    }
}

/// States of a run, stored flat as `[q_1..q_d, p_1..p_d]` per step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    pub dim: usize,
    pub states: Vec<f64>,
    pub max_norm: f64,
    /// Per-step geometric growth of the norm, fitted by least squares on
    /// `log |z_n|` over the last half of the run.
    pub empirical_growth: f64,
}

impl TrajectoryReport {
    fn from_states(dim: usize, states: Vec<f64>) -> Self {
        let norms: Vec<f64> = states
            .chunks(2 * dim)
            .map(|z| z.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let max_norm = norms.iter().copied().fold(0.0, f64::max);
        TrajectoryReport {
            dim,
            states,
            max_norm,
            empirical_growth: fitted_growth(&norms),
        }
    }

    /// Number of stored states, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.states.len() / (2 * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        let w = 2 * self.dim;
        &self.states[i * w..(i + 1) * w]
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.state(i).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn min_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| self.norm(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `exp` of the least-squares slope of `log norm` against the step index,
/// over the last half of the samples.
fn fitted_growth(norms: &[f64]) -> f64 {
    let n = norms.len();
    if n < 2 {
        return 1.0;
    }
    let start = if n >= 4 { n / 2 } else { 0 };
    let pts: Vec<(f64, f64)> = (start..n)
        .filter(|&i| norms[i] > 0.0)
        .map(|i| (i as f64, norms[i].ln()))
        .collect();
    if pts.len() < 2 {
        return 1.0;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxy / sxx).exp()
}

/// Iterates the transfer matrix of `scheme` from `z0`.
pub fn integrate_model(
    scheme: &SplittingScheme,
    eps: f64,
    h: f64,
    n_steps: usize,
    z0: ModelState,
) -> Result<TrajectoryReport> {
    if n_steps == 0 {
        return Err(Error::OutOfRange("n_steps must be at least 1".into()));
    }
    if eps <= -1.0 {
        log::warn!("eps = {eps} <= -1: the model problem is no longer an oscillator");
    }
    let m = transfer_matrix(scheme, eps, h);
    let mut states = Vec::with_capacity(2 * (n_steps + 1));
    let (mut q, mut p) = (z0.q, z0.p);
    states.extend([q, p]);
    for step in 0..n_steps {
        (q, p) = m.apply(q, p);
        if q.hypot(p).is_nan() || q.hypot(p) > BLOWUP_NORM {
            return Err(Error::ExponentialBlowup {
                steps_completed: step,
            });
        }
        states.extend([q, p]);
    }
    Ok(TrajectoryReport::from_states(1, states))
}

pub type ForceFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// The perturbation force `f(q)`.
#[derive(Clone)]
pub enum Force {
    /// `f(q) = -B q`.
    Linear(DMatrix<f64>),
    /// `f(q) = -delta q^3`, componentwise.
    Cubic {
        delta: f64,
    },
    Custom(Arc<ForceFn>),
}

impl fmt::Debug for Force {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Force::Linear(b) => f.debug_tuple("Linear").field(b).finish(),
            Force::Cubic { delta } => f.debug_struct("Cubic").field("delta", delta).finish(),
            Force::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Force {
    pub fn eval(&self, q: &DVector<f64>) -> DVector<f64> {
        match self {
            Force::Linear(b) => -(b * q),
            Force::Cubic { delta } => q.map(|x| -delta * x * x * x),
            Force::Custom(f) => f(q),
        }
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= SYMMETRY_TOL * scale
}

/// `M q'' = -A q + f(q)` with `M` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct GeneralProblem {
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    force: Force,
    chol_l: DMatrix<f64>,
}

impl GeneralProblem {
    pub fn new(mass: DMatrix<f64>, stiffness: DMatrix<f64>, force: Force) -> Result<Self> {
        let d = mass.nrows();
        if d == 0 || !mass.is_square() || stiffness.shape() != (d, d) {
            return Err(Error::ShapeMismatch(format!(
                "mass {:?} and stiffness {:?} must be square of equal size",
                mass.shape(),
                stiffness.shape()
            )));
        }
        if let Force::Linear(b) = &force {
            if b.shape() != (d, d) {
                return Err(Error::ShapeMismatch(format!("B has shape {:?}", b.shape())));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("B"));
            }
        }
        if mass.iter().chain(stiffness.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("mass/stiffness"));
        }
        if !is_symmetric(&mass) {
            return Err(Error::NotSpd);
        }
        let chol_l = mass.clone().cholesky().ok_or(Error::NotSpd)?.l();
        Ok(GeneralProblem {
            mass,
            stiffness,
            force,
            chol_l,
        })
    }

    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn force(&self) -> &Force {
        &self.force
    }

    /// `L^{-1} X L^{-T}` for the Cholesky factor of the mass matrix.
    fn reduced(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let l = &self.chol_l;
        let y = l
            .solve_lower_triangular(x)
            .expect("Cholesky factor is nonsingular");
        let yt = y.transpose();
        l.solve_lower_triangular(&yt)
            .expect("Cholesky factor is nonsingular")
            .transpose()
    }

    fn mass_solve(&self, p: &DVector<f64>) -> DVector<f64> {
        let l = &self.chol_l;
        let y = l.solve_lower_triangular(p).expect("nonsingular");
        l.transpose()
            .solve_upper_triangular(&y)
            .expect("nonsingular")
    }
}

/// Exact flows of a [`GeneralProblem`], with the modal basis of the rotation
/// system computed once.
#[derive(Debug, Clone)]
pub struct GeneralIntegrator<'a> {
    problem: &'a GeneralProblem,
    /// `x = to_modal_q q`, `y = to_modal_p p`.
    to_modal_q: DMatrix<f64>,
    to_modal_p: DMatrix<f64>,
    from_modal_q: DMatrix<f64>,
    from_modal_p: DMatrix<f64>,
    omega: DVector<f64>,
}

impl<'a> GeneralIntegrator<'a> {
    pub fn new(problem: &'a GeneralProblem) -> Result<Self> {
        let a_bar = problem.reduced(&problem.stiffness);
        if !is_symmetric(&a_bar) {
            return Err(Error::NotSymmetric);
        }
        let eig = SymmetricEigen::new(a_bar);
        let min = eig.eigenvalues.min();
        if min <= 0.0 {
            return Err(Error::NonPositiveSpectrum(min));
        }
        let v = eig.eigenvectors;
        let l = &problem.chol_l;
        // q_bar = L^T q, p_bar = L^{-1} p, then project on V
        let to_modal_q = v.transpose() * l.transpose();
        let l_inv = l
            .clone()
            .try_inverse()
            .expect("Cholesky factor is nonsingular");
        let to_modal_p = v.transpose() * &l_inv;
        let from_modal_q = l_inv.transpose() * &v;
        let from_modal_p = l * &v;
        Ok(GeneralIntegrator {
            problem,
            to_modal_q,
            to_modal_p,
            from_modal_q,
            from_modal_p,
            omega: eig.eigenvalues.map(f64::sqrt),
        })
    }

    /// Exact flow of `q' = M^{-1} p`, `p' = -A q` for time `t`.
    pub fn rotate(&self, t: f64, q: &mut DVector<f64>, p: &mut DVector<f64>) {
        let x = &self.to_modal_q * &*q;
        let y = &self.to_modal_p * &*p;
        let mut xn = x.clone();
        let mut yn = y.clone();
        for i in 0..x.len() {
            let w = self.omega[i];
            let (s, c) = (w * t).sin_cos();
            xn[i] = c * x[i] + s / w * y[i];
            yn[i] = -w * s * x[i] + c * y[i];
        }
        *q = &self.from_modal_q * xn;
        *p = &self.from_modal_p * yn;
    }

    /// Exact flow of `q' = 0`, `p' = f(q)`.
    pub fn kick(&self, t: f64, q: &DVector<f64>, p: &mut DVector<f64>) {
        *p += self.problem.force.eval(q) * t;
    }

    /// Kick with the whole force `-A q + f(q)`, for the drift/kick family.
    pub fn full_kick(&self, t: f64, q: &DVector<f64>, p: &mut DVector<f64>) {
        let g = self.problem.force.eval(q) - &self.problem.stiffness * q;
        *p += g * t;
    }

    pub fn drift(&self, t: f64, q: &mut DVector<f64>, p: &DVector<f64>) {
        *q += self.problem.mass_solve(p) * t;
    }

    /// One step of `scheme` with steplength `h`.
    pub fn step(
        &self,
        scheme: &SplittingScheme,
        h: f64,
        q: &mut DVector<f64>,
        p: &mut DVector<f64>,
    ) {
        let family = scheme.family();
        for (flow, c) in scheme.flows() {
            let t = c * h;
            match (flow, family) {
                (Flow::Rotation, _) => self.rotate(t, q, p),
                (Flow::Drift, _) => self.drift(t, q, p),
                (Flow::Kick, Family::RotationKick) => self.kick(t, q, p),
                (Flow::Kick, Family::DriftKick) => self.full_kick(t, q, p),
            }
        }
    }
}

/// Runs `n_steps` of `scheme` on a general problem from `z0 = [q0, p0]`.
pub fn integrate_general(
    scheme: &SplittingScheme,
    problem: &GeneralProblem,
    h: f64,
    n_steps: usize,
    z0: &[f64],
) -> Result<TrajectoryReport> {
    let d = problem.dim();
    if z0.len() != 2 * d {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} entries, expected {}",
            z0.len(),
            2 * d
        )));
    }
    if n_steps == 0 {
        return Err(Error::OutOfRange("n_steps must be at least 1".into()));
    }
    let integrator = GeneralIntegrator::new(problem)?;
    let mut q = DVector::from_column_slice(&z0[..d]);
    let mut p = DVector::from_column_slice(&z0[d..]);
    let mut states = Vec::with_capacity(2 * d * (n_steps + 1));
    states.extend_from_slice(z0);
    for step in 0..n_steps {
        integrator.step(scheme, h, &mut q, &mut p);
        let norm = (q.norm_squared() + p.norm_squared()).sqrt();
        if norm.is_nan() || norm > BLOWUP_NORM {
            return Err(Error::ExponentialBlowup {
                steps_completed: step,
            });
        }
        states.extend(q.iter());
        states.extend(p.iter());
    }
    Ok(TrajectoryReport::from_states(d, states))
}

/// One uncoupled oscillator `x'' = -(lambda + mu) x`; with time rescaled by
/// `sqrt(lambda)` it is the model problem with `eps = mu / lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub lambda: f64,
    pub mu: f64,
    pub eps: f64,
    /// `sqrt(lambda)`: model time is `sqrt(lambda) t`, so a step `h` of the
    /// full system is a model step `sqrt(lambda) h`.
    pub frequency: f64,
}

/// Modal decomposition of a linear problem.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub modes: Vec<Mode>,
    to_modal_q: DMatrix<f64>,
    to_modal_p: DMatrix<f64>,
}

impl Reduction {
    /// Model-problem coordinates of mode `i`: `(x_i, y_i / sqrt(lambda_i))`.
    pub fn modal_state(&self, q: &[f64], p: &[f64], i: usize) -> ModelState {
        let x = self
            .to_modal_q
            .row(i)
            .transpose()
            .dot(&DVector::from_column_slice(q));
        let y = self
            .to_modal_p
            .row(i)
            .transpose()
            .dot(&DVector::from_column_slice(p));
        ModelState::new(x, y / self.modes[i].frequency)
    }
}

/// Splits a linear problem (`f(q) = -B q`) into per-mode `(lambda, eps)`,
/// sorted by `lambda`, then `eps`.
pub fn reduce_to_model(problem: &GeneralProblem) -> Result<Reduction> {
    let Force::Linear(b) = &problem.force else {
        return Err(Error::OutOfRange(
            "reduction requires a linear force f(q) = -B q".into(),
        ));
    };
    let a_bar = problem.reduced(&problem.stiffness);
    let b_bar = problem.reduced(b);
    if !is_symmetric(&a_bar) || !is_symmetric(&b_bar) {
        return Err(Error::NotSymmetric);
    }
    let scale = a_bar.norm().max(b_bar.norm()).max(1e-300);
    let commutator = (&a_bar * &b_bar - &b_bar * &a_bar).norm() / (scale * scale);
    if commutator > DIAGONALIZATION_TOL {
        return Err(Error::NotSimultaneouslyDiagonalizable(commutator));
    }
    // eigenvectors of a generic combination diagonalize both commuting
    // matrices; retry a few weights in case one creates a spurious degeneracy
    let mut best = f64::INFINITY;
    for tau in [
        0.618_033_988_749_895,
        std::f64::consts::SQRT_2,
        0.123_456_789,
    ] {
        let c = &a_bar + &b_bar * tau;
        let v = SymmetricEigen::new(c).eigenvectors;
        let lam = (v.transpose() * &a_bar * &v).diagonal();
        let mu = (v.transpose() * &b_bar * &v).diagonal();
        let res_a = (&a_bar * &v - &v * DMatrix::from_diagonal(&lam)).norm();
        let res_b = (&b_bar * &v - &v * DMatrix::from_diagonal(&mu)).norm();
        let residual = res_a.max(res_b) / scale;
        best = best.min(residual);
        if residual > DIAGONALIZATION_TOL {
            continue;
        }
        let mut order: Vec<usize> = (0..lam.len()).collect();
        order.sort_by(|&i, &j| {
            lam[i]
                .total_cmp(&lam[j])
                .then((mu[i] / lam[i]).total_cmp(&(mu[j] / lam[j])))
        });
        let mut modes = Vec::with_capacity(order.len());
        for &i in &order {
            if lam[i] <= 0.0 {
                return Err(Error::NonPositiveLambda(lam[i]));
            }
            modes.push(Mode {
                lambda: lam[i],
                mu: mu[i],
                eps: mu[i] / lam[i],
                frequency: lam[i].sqrt(),
            });
        }
        let vs = v.select_columns(&order);
        let l = &problem.chol_l;
        let l_inv = l
            .clone()
            .try_inverse()
            .expect("Cholesky factor is nonsingular");
        return Ok(Reduction {
            modes,
            to_modal_q: vs.transpose() * l.transpose(),
            to_modal_p: vs.transpose() * l_inv,
        });
    }
    Err(Error::NotSimultaneouslyDiagonalizable(best))
}

/// A problem as stored on disk: dense matrices flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub dim: usize,
    pub mass: Vec<f64>,
    pub stiffness: Vec<f64>,
    pub force: ForceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ForceSpec {
    #[serde(rename = "linear_B")]
    LinearB { matrix: Vec<f64> },
    #[serde(rename = "cubic_delta")]
    CubicDelta { delta: f64 },
}

fn row_major(dim: usize, data: &[f64], what: &str) -> Result<DMatrix<f64>> {
    if data.len() != dim * dim {
        return Err(Error::ShapeMismatch(format!(
            "{what} has {} entries, expected {}",
            data.len(),
            dim * dim
        )));
    }
    Ok(DMatrix::from_row_slice(dim, dim, data))
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<GeneralProblem> {
        let force = match &self.force {
            ForceSpec::LinearB { matrix } => Force::Linear(row_major(self.dim, matrix, "B")?),
            ForceSpec::CubicDelta { delta } => Force::Cubic { delta: *delta },
        };
        GeneralProblem::new(
            row_major(self.dim, &self.mass, "mass")?,
            row_major(self.dim, &self.stiffness, "stiffness")?,
            force,
        )
    }

    /// `[q0, p0]`, defaulting to `q = (1, .., 1)`, `p = 0`.
    pub fn initial_state(&self) -> Result<Vec<f64>> {
        let q = self.q0.clone().unwrap_or_else(|| vec![1.0; self.dim]);
        let p = self.p0.clone().unwrap_or_else(|| vec![0.0; self.dim]);
        if q.len() != self.dim || p.len() != self.dim {
            return Err(Error::ShapeMismatch("q0/p0 length differs from dim".into()));
        }
        Ok([q, p].concat())
    }
}
