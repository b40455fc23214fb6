//! Pose refinement by Levenberg-Marquardt on the reprojection error.
//!
//! The residual for `N_M` matched pairs is the `2 N_M` vector of
//! `(u_E - u_p, v_E - v_p)` stacked in `pfp_id` order, where `(u_p, v_p)` is
//! the beacon projected at the candidate pose. The minimized objective is
//! `‖r / N_M‖²` by default; dividing by `N_M` does not move the minimum and,
//! with Marquardt's diagonal scaling, does not change the step sequence.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correspondence::MatchSet;
use crate::geometry::{extrinsic_from_pose, try_project_point, CameraIntrinsics, FeaturePoint3D, GeometryError, PoseVector};

/// Fewest matched pairs the solver accepts.
pub const MIN_MATCHES: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("need at least {MIN_MATCHES} matched pairs, got {0}")]
    InsufficientPoints(usize),
    #[error("feature point {0} projects behind the camera")]
    BehindCamera(u32),
    #[error("matched pair refers to unknown feature point {0}")]
    UnknownFeaturePoint(u32),
    #[error("sample {0} needs the previous estimate as its initial value")]
    MissingPrevious(usize),
    #[error("solver did not converge within {iterations} iterations (rms {rms_residual} px)")]
    NotConverged { iterations: usize, rms_residual: f64 },
    #[error("initial pose is not finite")]
    NonFiniteInit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Convergence threshold on the norm of the 6-vector step.
    pub step_tol: f64,
    /// Convergence threshold on the relative cost decrease of an accepted step.
    pub residual_tol: f64,
    /// Central-difference step for the position columns, meters.
    pub fd_step_pos: f64,
    /// Central-difference step for the attitude columns, degrees.
    pub fd_step_ang: f64,
    /// Report the objective as `‖r / N_M‖²` rather than `‖r‖²`. The factor
    /// cancels in every step and test, so iterates are computed unscaled and
    /// only the reported costs change.
    pub normalize_by_matches: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            step_tol: 1e-8,
            residual_tol: 1e-10,
            fd_step_pos: 1e-4,
            fd_step_ang: 1e-4,
            normalize_by_matches: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub pose: PoseVector,
    /// Root mean square of the unscaled residual entries, pixels.
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_m: usize,
    /// Objective value at the start and after every accepted step.
    pub cost_history: Vec<f64>,
}

impl PoseEstimate {
    /// Turns a non-converged estimate into [`SolveError::NotConverged`].
    pub fn ensure_converged(self) -> Result<PoseEstimate, SolveError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SolveError::NotConverged { iterations: self.iterations, rms_residual: self.rms_residual })
        }
    }
}

/// Matched pairs resolved against the feature point table, ready for
/// repeated residual evaluation.
struct Problem<'a> {
    intr: &'a CameraIntrinsics,
    points: Vec<(FeaturePoint3D, [f64; 2])>,
}

impl<'a> Problem<'a> {
    fn new(
        matches: &MatchSet,
        intr: &'a CameraIntrinsics,
        pfps: &[FeaturePoint3D],
    ) -> Result<Self, SolveError> {
        let table: HashMap<u32, &FeaturePoint3D> = pfps.iter().map(|p| (p.id, p)).collect();
        let mut pairs: Vec<_> = matches.pairs.iter().collect();
        pairs.sort_by_key(|p| p.pfp_id);
        let points = pairs
            .into_iter()
            .map(|p| {
                let fp = table.get(&p.pfp_id).ok_or(SolveError::UnknownFeaturePoint(p.pfp_id))?;
                Ok((**fp, [p.extracted.u, p.extracted.v]))
            })
            .collect::<Result<Vec<_>, SolveError>>()?;
        Ok(Self { intr, points })
    }

    fn residual(&self, pose: &PoseVector) -> Result<DVector<f64>, SolveError> {
        let m = extrinsic_from_pose(pose, self.intr);
        let mut r = DVector::zeros(2 * self.points.len());
        for (k, (fp, [ue, ve])) in self.points.iter().enumerate() {
            let p = try_project_point(self.intr, &m, fp).map_err(|e| match e {
                GeometryError::BehindCamera { id, .. } => SolveError::BehindCamera(id.unwrap_or(fp.id)),
                _ => unreachable!("projection only fails for points behind the camera"),
            })?;
            r[2 * k] = ue - p.u;
            r[2 * k + 1] = ve - p.v;
        }
        Ok(r)
    }

    fn jacobian(&self, pose: &PoseVector, cfg: &SolverConfig) -> Result<DMatrix<f64>, SolveError> {
        let x = pose.to_array();
        let mut jac = DMatrix::zeros(2 * self.points.len(), 6);
        for j in 0..6 {
            let h = if j < 3 { cfg.fd_step_pos } else { cfg.fd_step_ang };
            let (mut plus, mut minus) = (x, x);
            plus[j] += h;
            minus[j] -= h;
            let rp = self.residual(&PoseVector::from_array(plus))?;
            let rm = self.residual(&PoseVector::from_array(minus))?;
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        Ok(jac)
    }
}

/// Stacked `(u_E - u_p, v_E - v_p)` per pair in `pfp_id` order, pixels.
pub fn reprojection_residual(
    pose: &PoseVector,
    matches: &MatchSet,
    intr: &CameraIntrinsics,
    pfps: &[FeaturePoint3D],
) -> Result<Vec<f64>, SolveError> {
    Ok(Problem::new(matches, intr, pfps)?.residual(pose)?.as_slice().to_vec())
}

/// Central-difference Jacobian of [`reprojection_residual`]; `2 N_M × 6`,
/// columns in pose order (pixels per meter, then pixels per degree).
pub fn numeric_jacobian(
    pose: &PoseVector,
    matches: &MatchSet,
    intr: &CameraIntrinsics,
    pfps: &[FeaturePoint3D],
    cfg: &SolverConfig,
) -> Result<DMatrix<f64>, SolveError> {
    Problem::new(matches, intr, pfps)?.jacobian(pose, cfg)
}

fn solve_damped(a: &Matrix6<f64>, g: &Vector6<f64>, lambda: f64) -> Option<Vector6<f64>> {
    let mut damped = *a;
    for i in 0..6 {
        // floor keeps columns with no sensitivity from making the system singular
        damped[(i, i)] += lambda * a[(i, i)].max(1e-12);
    }
    damped.cholesky().map(|c| c.solve(&(-g))).or_else(|| damped.lu().solve(&(-g)))
}

/// Levenberg-Marquardt refinement of `init` against `matches`.
///
/// A non-converged run still returns its last estimate with
/// `converged = false`; see [`PoseEstimate::ensure_converged`].
pub fn lm_solve(
    init: &PoseVector,
    matches: &MatchSet,
    intr: &CameraIntrinsics,
    pfps: &[FeaturePoint3D],
    cfg: &SolverConfig,
) -> Result<PoseEstimate, SolveError> {
    let n_m = matches.len();
    if n_m < MIN_MATCHES {
        return Err(SolveError::InsufficientPoints(n_m));
    }
    if !init.is_finite() {
        return Err(SolveError::NonFiniteInit);
    }
    let problem = Problem::new(matches, intr, pfps)?;
    let objective_scale = if cfg.normalize_by_matches { 1.0 / (n_m * n_m) as f64 } else { 1.0 };

    let mut pose = *init;
    let mut r = problem.residual(&pose)?;
    let mut cost = r.norm_squared();
    let mut history = vec![cost * objective_scale];
    let mut lambda = cfg.lambda0;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    let mut jac = None;

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let j = match jac.take() {
            Some(j) => j,
            None => problem.jacobian(&pose, cfg)?,
        };
        let a: Matrix6<f64> = (j.transpose() * &j).fixed_view::<6, 6>(0, 0).into_owned();
        let g: Vector6<f64> = (j.transpose() * &r).fixed_rows::<6>(0).into_owned();
        let Some(step) = solve_damped(&a, &g, lambda) else {
            lambda *= cfg.lambda_up;
            jac = Some(j);
            continue;
        };
        // a step below tolerance is not taken: its effect on the cost is at
        // rounding level and accepting it would depend on that rounding
        if step.norm() < cfg.step_tol {
            converged = true;
            break;
        }
        let trial = pose.add(&PoseVector::from_array(step.into()));
        let trial_r = match problem.residual(&trial) {
            Ok(tr) => Some(tr),
            Err(SolveError::BehindCamera(_)) => None,
            Err(e) => return Err(e),
        };
        match trial_r {
            Some(tr) if tr.norm_squared() < cost => {
                let new_cost = tr.norm_squared();
                let rel_decrease = (cost - new_cost) / cost;
                pose = trial;
                r = tr;
                cost = new_cost;
                history.push(cost * objective_scale);
                lambda *= cfg.lambda_down;
                converged = rel_decrease < cfg.residual_tol || cost == 0.0;
            }
            _ => {
                lambda *= cfg.lambda_up;
                jac = Some(j);
            }
        }
    }

    let rms_residual = (cost / (2 * n_m) as f64).sqrt();
    Ok(PoseEstimate { pose, rms_residual, iterations, converged, n_m, cost_history: history })
}

/// Initial value for sample `k` (1-based): the external prior for the first
/// sample, the previous estimate afterwards.
pub fn initial_pose(k: usize, previous: Option<&PoseEstimate>, prior: &PoseVector) -> Result<PoseVector, SolveError> {
    match (k, previous) {
        (0 | 1, _) => Ok(*prior),
        (_, Some(prev)) => Ok(prev.pose),
        (_, None) => Err(SolveError::MissingPrevious(k)),
    }
}
