//! Two-phase log-barrier path following for LMI-form SDPs.
//!
//! Phase 1 maximizes `t` subject to `Fᵏ(y) − t I ⪰ 0` to find a strictly
//! feasible start; a certified `t* < feas_tol` means the problem is
//! infeasible. Phase 2 minimizes `cᵀy` by damped Newton steps on the barrier
//! `μ cᵀy − Σ log det Fᵏ(y)` with `μ` increased geometrically until the gap
//! estimate `(Σ block dims)/μ` drops below `gap_tol`.
//!
//! Everything is deterministic: fixed stage schedule, fixed sweep order, no
//! randomized pivoting, so identical problems yield bitwise-identical
//! solutions.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::eig::min_eig;
use crate::error::SdpError;
use crate::problem::{SdpBlock, SdpProblem};

/// Armijo constant for the backtracking line search.
const ARMIJO_C: f64 = 0.01;
/// Line-search shrink factor.
const BACKTRACK: f64 = 0.5;
/// Smallest accepted line-search step before declaring a stall.
const MIN_STEP: f64 = 1e-14;
/// Newton decrement (λ²/2) threshold that ends a centering stage.
const CENTER_TOL: f64 = 1e-9;
/// Loose fallback threshold: a stalled stage at this centering quality still
/// lets the path following continue instead of aborting.
const CENTER_TOL_LOOSE: f64 = 1e-5;
/// Geometric growth factor of the barrier parameter.
const MU_FACTOR: f64 = 10.0;
/// Hard cap on barrier stages per phase.
const MAX_STAGES: usize = 60;

/// Solver tolerances and iteration budget.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Feasibility tolerance: phase-1 optimum below this is infeasible, and
    /// certified solutions must have block min-eigenvalues above `-feas_tol`.
    pub feas_tol: f64,
    /// Target duality-gap estimate for phase 2.
    pub gap_tol: f64,
    /// Newton-iteration budget per phase.
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            gap_tol: 1e-6,
            max_iter: 200,
        }
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
    Numerical,
}

/// Objective bookkeeping for one barrier stage.
#[derive(Debug, Clone, Copy)]
pub struct StageStat {
    pub mu: f64,
    pub objective: f64,
    pub newton_steps: usize,
    pub gap_estimate: f64,
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub y: DVector<f64>,
    pub status: SolveStatus,
    pub objective_value: f64,
    /// Independently recomputed smallest eigenvalue of every block at `y`.
    pub min_eig_per_block: Vec<f64>,
    /// Total Newton iterations across both phases.
    pub iterations: usize,
    pub duality_gap_estimate: f64,
    /// Phase-2 stage log; objectives are non-increasing along the path.
    pub stages: Vec<StageStat>,
    /// Best phase-1 margin found; the infeasibility certificate when the
    /// status is `Infeasible`.
    pub phase1_t: f64,
}

/// Solves the LMI-form SDP by two-phase barrier path following.
///
/// Hard errors are reserved for ill-formed inputs; solver outcomes
/// (including infeasibility) are reported through [`SdpSolution::status`].
pub fn solve(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution, SdpError> {
    if !(opts.feas_tol > 0.0 && opts.gap_tol > 0.0 && opts.max_iter > 0) {
        return Err(SdpError::BadProblem(
            "tolerances must be positive and max_iter nonzero".into(),
        ));
    }
    let m = problem.num_vars();
    let nu = problem.total_dim() as f64;

    // ---- Phase 1: maximize t s.t. F(y) - tI >= 0 ----
    let phase1 = phase1_problem(problem);
    let y0 = DVector::zeros(m);
    let t0 = initial_margin(problem, &y0)? - 1.0;
    let mut y_ext = y0.clone().push(t0);
    // Early exit as soon as the margin is comfortably positive.
    let t_exit = (1e3 * opts.feas_tol).max(1e-4);

    let mut iterations = 0usize;
    let mut mu = 1.0;
    let mut phase1_t = t0;
    let mut feasible = t0 >= t_exit;
    for _ in 0..MAX_STAGES {
        if feasible {
            break;
        }
        let out = center(
            &phase1,
            &mut y_ext,
            mu,
            opts.max_iter.saturating_sub(iterations),
            Some((m, t_exit)),
        );
        iterations += out.steps;
        phase1_t = y_ext[m];
        match out.kind {
            CenterOutcome::EarlyExit => {
                feasible = true;
                break;
            }
            CenterOutcome::Centered | CenterOutcome::Loose => {}
            CenterOutcome::Stalled => {
                return finish(problem, y_ext.rows(0, m).into_owned(), SolveStatus::Numerical,
                    iterations, f64::INFINITY, Vec::new(), phase1_t);
            }
            CenterOutcome::Budget => {
                return finish(problem, y_ext.rows(0, m).into_owned(), SolveStatus::MaxIter,
                    iterations, f64::INFINITY, Vec::new(), phase1_t);
            }
        }
        let gap = nu / mu;
        if phase1_t >= opts.feas_tol && gap <= phase1_t * 0.5 {
            feasible = true;
            break;
        }
        if gap <= opts.feas_tol * 0.5 {
            // Converged to t*; decide feasibility by its sign.
            feasible = phase1_t >= opts.feas_tol;
            break;
        }
        mu *= MU_FACTOR;
    }
    if !feasible {
        return finish(problem, y_ext.rows(0, m).into_owned(), SolveStatus::Infeasible,
            iterations, f64::INFINITY, Vec::new(), phase1_t);
    }

    // ---- Phase 2: minimize cᵀy from the strictly feasible start ----
    let mut y = y_ext.rows(0, m).into_owned();
    debug_assert!(initial_margin(problem, &y)? > 0.0);
    let mut stages = Vec::new();
    let mut mu = 1.0;
    let mut phase2_iters = 0usize;
    let mut gap = nu / mu;
    for _ in 0..MAX_STAGES {
        let out = center(
            problem,
            &mut y,
            mu,
            opts.max_iter.saturating_sub(phase2_iters),
            None,
        );
        phase2_iters += out.steps;
        gap = nu / mu;
        stages.push(StageStat {
            mu,
            objective: problem.objective_value(&y),
            newton_steps: out.steps,
            gap_estimate: gap,
        });
        match out.kind {
            CenterOutcome::Centered | CenterOutcome::Loose => {}
            CenterOutcome::Stalled => {
                return finish(problem, y, SolveStatus::Numerical,
                    iterations + phase2_iters, gap, stages, phase1_t);
            }
            CenterOutcome::Budget => {
                return finish(problem, y, SolveStatus::MaxIter,
                    iterations + phase2_iters, gap, stages, phase1_t);
            }
            CenterOutcome::EarlyExit => unreachable!("phase 2 has no early exit"),
        }
        if gap <= opts.gap_tol {
            break;
        }
        if phase2_iters >= opts.max_iter {
            return finish(problem, y, SolveStatus::MaxIter,
                iterations + phase2_iters, gap, stages, phase1_t);
        }
        mu *= MU_FACTOR;
    }
    let status = if gap <= opts.gap_tol {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };
    let sol = finish(problem, y, status, iterations + phase2_iters, gap, stages, phase1_t)?;
    // Certificate re-check through the eigenvalue routine.
    if sol.status == SolveStatus::Optimal
        && sol.min_eig_per_block.iter().any(|&e| e < -opts.feas_tol)
    {
        let mut sol = sol;
        sol.status = SolveStatus::Numerical;
        return Ok(sol);
    }
    Ok(sol)
}

fn finish(
    problem: &SdpProblem,
    y: DVector<f64>,
    status: SolveStatus,
    iterations: usize,
    gap: f64,
    stages: Vec<StageStat>,
    phase1_t: f64,
) -> Result<SdpSolution, SdpError> {
    let mut min_eigs = Vec::with_capacity(problem.blocks().len());
    for b in problem.blocks() {
        min_eigs.push(min_eig(&b.eval(&y))?);
    }
    Ok(SdpSolution {
        objective_value: problem.objective_value(&y),
        y,
        status,
        min_eig_per_block: min_eigs,
        iterations,
        duality_gap_estimate: gap,
        stages,
        phase1_t,
    })
}

/// Extends the problem with a margin variable `t`: blocks become
/// `F(y) − t I` and the objective maximizes `t`.
fn phase1_problem(problem: &SdpProblem) -> SdpProblem {
    let m = problem.num_vars();
    let mut objective = DVector::zeros(m + 1);
    objective[m] = -1.0; // minimize -t
    let blocks: Vec<SdpBlock> = problem
        .blocks()
        .iter()
        .map(|b| {
            let mut coeffs: Vec<DMatrix<f64>> = (0..m).map(|i| b.coeff(i).clone()).collect();
            coeffs.push(-DMatrix::<f64>::identity(b.dim(), b.dim()));
            SdpBlock::new(b.f0().clone(), coeffs).expect("phase-1 block stays symmetric")
        })
        .collect();
    SdpProblem::new(objective, blocks).expect("phase-1 problem stays well-formed")
}

fn initial_margin(problem: &SdpProblem, y: &DVector<f64>) -> Result<f64, SdpError> {
    let mut t = f64::INFINITY;
    for b in problem.blocks() {
        t = t.min(min_eig(&b.eval(y))?);
    }
    Ok(t)
}

enum CenterOutcome {
    /// Newton decrement reached `CENTER_TOL`.
    Centered,
    /// Line search stalled but the decrement is small; acceptable center.
    Loose,
    /// Line search stalled far from the central point.
    Stalled,
    /// Iteration budget exhausted.
    Budget,
    /// The early-exit predicate fired.
    EarlyExit,
}

struct CenterResult {
    kind: CenterOutcome,
    steps: usize,
}

/// Damped-Newton centering of `μ cᵀy − Σ log det Fᵏ(y)` starting from a
/// strictly feasible `y` (updated in place).
///
/// `margin_target = Some((idx, target))` makes the search exit as soon as
/// `y[idx] >= target` (the phase-1 feasibility margin); steps along that
/// coordinate are shortened to land at the target instead of chasing an
/// unbounded maximizer.
fn center(
    problem: &SdpProblem,
    y: &mut DVector<f64>,
    mu: f64,
    budget: usize,
    margin_target: Option<(usize, f64)>,
) -> CenterResult {
    let mut steps = 0usize;
    loop {
        if steps >= budget {
            return CenterResult {
                kind: CenterOutcome::Budget,
                steps,
            };
        }
        let Some((grad, hess)) = barrier_derivatives(problem, y, mu) else {
            // The iterate left the cone numerically; treat as a stall.
            return CenterResult {
                kind: CenterOutcome::Stalled,
                steps,
            };
        };
        let Some(mut dir) = newton_direction(&hess, &grad) else {
            return CenterResult {
                kind: CenterOutcome::Stalled,
                steps,
            };
        };
        let Some(f0) = barrier_value(problem, y, mu) else {
            return CenterResult {
                kind: CenterOutcome::Stalled,
                steps,
            };
        };
        // Stop once the predicted decrease sinks below what f64 can resolve
        // at the current barrier magnitude; further steps cannot make
        // representable progress.
        let stop_tol = CENTER_TOL.max(f0.abs() * 1e-13);
        let decrement = -0.5 * grad.dot(&dir);
        if decrement.abs() <= stop_tol {
            return CenterResult {
                kind: CenterOutcome::Centered,
                steps,
            };
        }
        // Trust-region style cap: never move further than ~1e3 times the
        // current iterate scale in one step. Guards against unbounded
        // recession directions (singular Hessian along a direction of linear
        // barrier decrease), where the ridged Newton step can be
        // astronomically long.
        let cap = 1e3 * (1.0 + y.amax());
        let dir_max = dir.amax();
        if dir_max > cap {
            dir *= cap / dir_max;
        }
        let slope = grad.dot(&dir);
        if !(slope < 0.0) {
            // Corrupt solve on a near-singular Hessian; no usable descent.
            return CenterResult {
                kind: CenterOutcome::Stalled,
                steps,
            };
        }
        let mut step: f64 = 1.0;
        if let Some((idx, target)) = margin_target {
            if dir[idx] > 0.0 && y[idx] < target {
                // Land just past the exit threshold rather than chasing an
                // unbounded maximizer (aim 1.5x so rounding cannot stop the
                // exit check from firing).
                step = step.min((1.5 * target - y[idx]) / dir[idx]);
            }
        }
        let mut accepted = false;
        while step >= MIN_STEP {
            let candidate = &*y + &dir * step;
            if candidate
                .iter()
                .zip(y.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
            {
                // The step is below the resolution of the iterate itself.
                break;
            }
            if let Some(f) = barrier_value(problem, &candidate, mu) {
                if f <= f0 + ARMIJO_C * step * slope {
                    *y = candidate;
                    accepted = true;
                    break;
                }
            }
            step *= BACKTRACK;
        }
        if !accepted {
            let kind = if decrement <= CENTER_TOL_LOOSE {
                CenterOutcome::Loose
            } else {
                CenterOutcome::Stalled
            };
            return CenterResult { kind, steps };
        }
        steps += 1;
        if let Some((idx, target)) = margin_target {
            if y[idx] >= target {
                return CenterResult {
                    kind: CenterOutcome::EarlyExit,
                    steps,
                };
            }
        }
    }
}

/// Barrier value `μ cᵀy − Σ log det Fᵏ(y)`, or `None` when some block is not
/// positive definite (the Cholesky guard of the line search).
fn barrier_value(problem: &SdpProblem, y: &DVector<f64>, mu: f64) -> Option<f64> {
    let mut val = mu * problem.objective_value(y);
    for b in problem.blocks() {
        let chol = Cholesky::new(b.eval(y))?;
        let mut logdet = 0.0;
        let l = chol.l();
        for i in 0..l.nrows() {
            let d = l[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            logdet += d.ln();
        }
        val -= 2.0 * logdet;
    }
    if val.is_finite() {
        Some(val)
    } else {
        None
    }
}

/// Gradient and Hessian of the barrier at an interior point.
///
/// `∇ᵢ = μ cᵢ − Σₖ tr(Fᵏ⁻¹ Fᵢᵏ)` and `Hᵢⱼ = Σₖ tr(Fᵏ⁻¹ Fᵢᵏ Fᵏ⁻¹ Fⱼᵏ)`.
fn barrier_derivatives(
    problem: &SdpProblem,
    y: &DVector<f64>,
    mu: f64,
) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let m = problem.num_vars();
    let mut grad = problem.objective() * mu;
    let mut hess = DMatrix::<f64>::zeros(m, m);
    for b in problem.blocks() {
        let f = b.eval(y);
        let chol = Cholesky::new(f)?;
        let inv = chol.inverse();
        // G_i = F⁻¹ F_i; tr(G_i) feeds the gradient, tr(G_i G_j) the Hessian.
        let gs: Vec<DMatrix<f64>> = (0..m).map(|i| &inv * b.coeff(i)).collect();
        for i in 0..m {
            grad[i] -= gs[i].trace();
            for j in i..m {
                let mut tr = 0.0;
                let n = gs[i].nrows();
                for a in 0..n {
                    for c in 0..n {
                        tr += gs[i][(a, c)] * gs[j][(c, a)];
                    }
                }
                hess[(i, j)] += tr;
                if i != j {
                    hess[(j, i)] += tr;
                }
            }
        }
    }
    if grad.iter().all(|x| x.is_finite()) && hess.iter().all(|x| x.is_finite()) {
        Some((grad, hess))
    } else {
        None
    }
}

/// Solves `H d = −g` with a deterministic ridge escalation fallback.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let m = hess.nrows();
    let diag_scale = (hess.trace() / m as f64).abs().max(1e-300);
    let mut ridge = 0.0;
    for attempt in 0..9 {
        let h = if ridge == 0.0 {
            hess.clone()
        } else {
            hess + DMatrix::<f64>::identity(m, m) * ridge
        };
        if let Some(chol) = Cholesky::new(h) {
            let d = chol.solve(&(-grad));
            if d.iter().all(|x| x.is_finite()) {
                return Some(d);
            }
        }
        ridge = diag_scale * 1e-14 * 10f64.powi(attempt);
    }
    None
}
