//! Parametric crossover model and the augmented state-space representation.
//!
//! The unknown crossover flux is approximated as `Q_x ≈ Ψ(s)·θ` with `θ`
//! generated by a pure integrator chain of order `l`. Stacking the battery
//! states with the chain states gives an `(l+2)`-dimensional augmented system
//! whose matrices depend affinely on the measured flow rate; a diagonal
//! similarity transformation removes the Ψ dependence so the flow-rate
//! interval embeds the dynamics in a two-vertex matrix polytope.

use nalgebra::{DMatrix, DVector, RowDVector};
use thiserror::Error;

use crate::battery::{
    nernst_voltage, BatteryError, BatteryParams, BatteryState, PlantInputs, Trajectory,
    TrajectorySample,
};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("invalid crossover model configuration: {0}")]
    InvalidConfig(String),

    #[error("transformation is singular: psi evaluated to {psi_val}")]
    SingularTransform { psi_val: f64 },

    #[error(transparent)]
    Battery(#[from] BatteryError),
}

/// Configuration of the integrator-chain crossover model.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverModelConfig {
    /// Chain order `l >= 1`; the augmented state has dimension `l + 2`.
    pub order_l: usize,
    /// Chain gains `λ₁ … λ_{l-1}`, all strictly positive.
    pub lambda: Vec<f64>,
    /// Transformation scale `ϱ > 0`.
    pub varrho: f64,
}

impl CrossoverModelConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.order_l < 1 {
            return Err(AugmentError::InvalidConfig("order_l must be >= 1".into()));
        }
        if self.lambda.len() != self.order_l - 1 {
            return Err(AugmentError::InvalidConfig(format!(
                "lambda must have {} entries for order {}, got {}",
                self.order_l - 1,
                self.order_l,
                self.lambda.len()
            )));
        }
        if self.lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(AugmentError::InvalidConfig(
                "every lambda gain must be strictly positive".into(),
            ));
        }
        if !(self.varrho > 0.0) || !self.varrho.is_finite() {
            return Err(AugmentError::InvalidConfig(format!(
                "varrho must be strictly positive, got {}",
                self.varrho
            )));
        }
        Ok(())
    }

    /// Dimension of the augmented state, `l + 2`.
    pub fn dim(&self) -> usize {
        self.order_l + 2
    }
}

/// Augmented state `[SOC, SOC_cell, θ, ω₂, …, ω_l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub z: BatteryState,
    /// Chain states; `omega[0]` is the crossover parameter θ.
    pub omega: DVector<f64>,
}

impl AugmentedState {
    pub fn new(z: BatteryState, omega: DVector<f64>) -> Self {
        Self { z, omega }
    }

    pub fn zeros(order_l: usize) -> Self {
        Self {
            z: BatteryState::new(0.0, 0.0),
            omega: DVector::zeros(order_l),
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.len() + 2
    }

    pub fn theta(&self) -> f64 {
        self.omega[0]
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = self.z.soc;
        v[1] = self.z.soc_cell;
        for (i, w) in self.omega.iter().enumerate() {
            v[2 + i] = *w;
        }
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            z: BatteryState::new(v[0], v[1]),
            omega: DVector::from_fn(v.len() - 2, |i, _| v[2 + i]),
        }
    }
}

/// Augmented system matrices `(A_e, B_e, C_e, E_e)`.
#[derive(Debug, Clone)]
pub struct AugmentedMatrices {
    pub a_e: DMatrix<f64>,
    pub b_e: DVector<f64>,
    pub c_e: RowDVector<f64>,
    pub e_e: DVector<f64>,
}

/// Chain matrix Λ: `λᵢ` on the superdiagonal, zero elsewhere. Nilpotent of
/// order `l`.
pub fn build_lambda_matrix(cfg: &CrossoverModelConfig) -> DMatrix<f64> {
    let l = cfg.order_l;
    let mut m = DMatrix::zeros(l, l);
    for (i, &gain) in cfg.lambda.iter().enumerate() {
        m[(i, i + 1)] = gain;
    }
    m
}

/// Parametric scaling `Ψ(ŝ) = 0.5 (1 + clamp(ŝ, 0, 1))`, always in `[0.5, 1]`.
pub fn psi(s_hat: f64) -> f64 {
    0.5 * (1.0 + s_hat.clamp(0.0, 1.0))
}

/// Measurement row `C_e = [0, 1, 0, …, 0]`.
pub fn measurement_row(cfg: &CrossoverModelConfig) -> RowDVector<f64> {
    let mut c = RowDVector::zeros(cfg.dim());
    c[1] = 1.0;
    c
}

/// Builds the augmented matrices at scaling `psi_val` and flow `q` (L/min).
pub fn build_augmented(
    psi_val: f64,
    q: f64,
    p: &BatteryParams,
    cfg: &CrossoverModelConfig,
) -> Result<AugmentedMatrices, AugmentError> {
    cfg.validate()?;
    p.validate()?;
    if !(psi_val > 0.0) || !psi_val.is_finite() {
        return Err(AugmentError::InvalidConfig(format!(
            "psi_val must be strictly positive, got {psi_val}"
        )));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(AugmentError::InvalidConfig(format!(
            "flow rate must be strictly positive, got {q}"
        )));
    }
    Ok(assemble(psi_val, q, p, cfg))
}

fn assemble(theta_col_scale: f64, q: f64, p: &BatteryParams, cfg: &CrossoverModelConfig) -> AugmentedMatrices {
    let n = cfg.dim();
    let l = cfg.order_l;
    let mix = p.mixing_rate(q);
    let e = p.crossover_gain();
    let b = p.current_gain();

    let mut a_e = DMatrix::zeros(n, n);
    a_e[(1, 0)] = mix;
    a_e[(1, 1)] = -mix;
    a_e[(0, 2)] = e[0] * theta_col_scale;
    a_e[(1, 2)] = e[1] * theta_col_scale;
    // Integrator chain occupies the trailing l x l block.
    for (i, &gain) in cfg.lambda.iter().enumerate() {
        a_e[(2 + i, 3 + i)] = gain;
    }

    let mut b_e = DVector::zeros(n);
    b_e[0] = b[0];
    b_e[1] = b[1];
    let mut e_e = DVector::zeros(n);
    e_e[0] = e[0];
    e_e[1] = e[1];
    let _ = l;

    AugmentedMatrices {
        a_e,
        b_e,
        c_e: measurement_row(cfg),
        e_e,
    }
}

/// Diagonal similarity transformation `T̂ = diag(1, 1, ψ/ϱ, …, ψ/ϱ)`.
#[derive(Debug, Clone)]
pub struct TransformT {
    pub psi_val: f64,
    pub varrho: f64,
    pub diag: DVector<f64>,
}

impl TransformT {
    /// Entrywise inverse (the diagonal is never zero by construction).
    pub fn inverse_diag(&self) -> DVector<f64> {
        self.diag.map(|d| 1.0 / d)
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.diag.component_mul(v)
    }

    pub fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        v.component_div(&self.diag)
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.diag)
    }
}

/// Builds the similarity transformation at scaling `psi_val`.
pub fn build_transform(
    psi_val: f64,
    cfg: &CrossoverModelConfig,
) -> Result<TransformT, AugmentError> {
    cfg.validate()?;
    if psi_val == 0.0 || !psi_val.is_finite() {
        return Err(AugmentError::SingularTransform { psi_val });
    }
    let n = cfg.dim();
    let ratio = psi_val / cfg.varrho;
    let diag = DVector::from_fn(n, |i, _| if i < 2 { 1.0 } else { ratio });
    Ok(TransformT {
        psi_val,
        varrho: cfg.varrho,
        diag,
    })
}

/// The transformed system matrix `𝒜(Q) = T̂ A_e T̂⁻¹`, independent of Ψ:
/// identical to `A_e` except that the θ column couples through `ϱ E`.
pub fn build_script_a(q: f64, p: &BatteryParams, cfg: &CrossoverModelConfig) -> DMatrix<f64> {
    assemble(cfg.varrho, q, p, cfg).a_e
}

/// Vertices `(𝒜(q_min), 𝒜(q_max))` of the flow-rate polytope.
pub fn polytope_vertices(
    q_min: f64,
    q_max: f64,
    p: &BatteryParams,
    cfg: &CrossoverModelConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>), AugmentError> {
    if !(q_min > 0.0 && q_min < q_max) {
        return Err(AugmentError::InvalidConfig(format!(
            "flow interval must satisfy 0 < q_min < q_max, got [{q_min}, {q_max}]"
        )));
    }
    Ok((build_script_a(q_min, p, cfg), build_script_a(q_max, p, cfg)))
}

/// Crossover flux estimate `Ψ·θ`, mol/min.
pub fn crossover_estimate(psi_val: f64, theta: f64) -> f64 {
    psi_val * theta
}

/// Model bound constants used by the residual-set diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSet {
    pub gamma_z: f64,
    pub gamma_theta: f64,
    pub gamma_omega: f64,
    pub eps_bar: f64,
    pub gamma_psi: f64,
    pub gamma_psi_tilde: f64,
    pub gamma_s_tilde: f64,
    pub gamma_t: f64,
    pub tau_m: f64,
    pub tau_max: f64,
}

impl BoundSet {
    /// Bounds derivable from the implemented Ψ and transformation scale;
    /// `gamma_theta`, `gamma_omega`, `eps_bar` and `gamma_t` stay at zero
    /// until the caller supplies application-specific values.
    pub fn for_model(cfg: &CrossoverModelConfig) -> Self {
        Self {
            gamma_z: std::f64::consts::SQRT_2,
            gamma_theta: 0.0,
            gamma_omega: 0.0,
            eps_bar: 0.0,
            gamma_psi: 1.0,
            gamma_psi_tilde: 0.5,
            gamma_s_tilde: 1.0,
            gamma_t: 0.0,
            tau_m: (0.5 / cfg.varrho).min(1.0),
            tau_max: (1.0 / cfg.varrho).max(1.0),
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        let fields = [
            self.gamma_z,
            self.gamma_theta,
            self.gamma_omega,
            self.eps_bar,
            self.gamma_psi,
            self.gamma_psi_tilde,
            self.gamma_s_tilde,
            self.gamma_t,
            self.tau_m,
            self.tau_max,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(AugmentError::InvalidConfig(
                "bounds must be finite and nonnegative".into(),
            ));
        }
        if self.tau_m > self.tau_max {
            return Err(AugmentError::InvalidConfig(format!(
                "tau_m {} exceeds tau_max {}",
                self.tau_m, self.tau_max
            )));
        }
        Ok(())
    }
}

/// Norm of the crossover input column, `γ_E = ‖E‖`.
pub fn gamma_e(p: &BatteryParams) -> f64 {
    let e = p.crossover_gain();
    e[0].hypot(e[1])
}

/// Upper bound on the uncompensated uncertainty:
/// `δ̄ = τ_M γ_E (γ_Ψ̃ γ_s̃ γ_z max{γ_z, γ_ω}(1-σ) + ε̄)`.
pub fn delta_bar(bounds: &BoundSet, sigma: f64, gamma_e: f64) -> f64 {
    let sigma = sigma.clamp(0.0, 1.0);
    bounds.tau_max
        * gamma_e
        * (bounds.gamma_psi_tilde
            * bounds.gamma_s_tilde
            * bounds.gamma_z
            * bounds.gamma_z.max(bounds.gamma_omega)
            * (1.0 - sigma)
            + bounds.eps_bar)
}

/// One record of an augmented-truth trajectory.
#[derive(Debug, Clone)]
pub struct AugmentedSample {
    pub time: f64,
    pub state: AugmentedState,
    /// True crossover flux `Ψ(z₂)·θ`, mol/min.
    pub crossover_flux: f64,
    pub v_out: f64,
    pub v_clamped: bool,
}

/// Trajectory of the exact parametric plant (`ε ≡ 0`).
#[derive(Debug, Clone, Default)]
pub struct AugmentedTrajectory {
    pub samples: Vec<AugmentedSample>,
}

impl AugmentedTrajectory {
    /// Projects onto the battery states for error metrics and CSV export.
    pub fn battery_trajectory(&self) -> Trajectory {
        Trajectory {
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample {
                    time: s.time,
                    state: s.state.z,
                    crossover_flux: s.crossover_flux,
                    v_out: s.v_out,
                    v_clamped: s.v_clamped,
                })
                .collect(),
        }
    }
}

/// Simulates the exact parametric plant: crossover flux `Ψ(z₂)·θ(t)` with
/// `θ` generated by the integrator chain and no approximation error. RK4
/// with fixed step `dt`; states are not clamped (the augmented truth is the
/// reference for error analysis).
pub fn simulate_parametric<FI>(
    p: &BatteryParams,
    cfg: &CrossoverModelConfig,
    x0: &AugmentedState,
    inputs: FI,
    horizon: f64,
    dt: f64,
) -> Result<AugmentedTrajectory, AugmentError>
where
    FI: Fn(f64) -> PlantInputs,
{
    cfg.validate()?;
    p.validate()?;
    if x0.omega.len() != cfg.order_l {
        return Err(AugmentError::InvalidConfig(format!(
            "initial state has {} chain entries, config expects {}",
            x0.omega.len(),
            cfg.order_l
        )));
    }
    if !(dt > 0.0 && dt.is_finite() && horizon >= dt) {
        return Err(AugmentError::InvalidConfig(format!(
            "need 0 < dt <= horizon, got dt={dt}, horizon={horizon}"
        )));
    }

    let n_steps = (horizon / dt).ceil() as usize;
    let h = horizon / n_steps as f64;
    let mut x = x0.to_vector();
    let mut samples = Vec::with_capacity(n_steps + 1);

    let derivative = |t: f64, x: &DVector<f64>| -> Result<DVector<f64>, AugmentError> {
        let u = inputs(t);
        let m = build_augmented(psi(x[1]), u.flow_rate, p, cfg)?;
        Ok(&m.a_e * x + &m.b_e * u.current)
    };
    let record = |t: f64, x: &DVector<f64>| -> Result<AugmentedSample, AugmentError> {
        let state = AugmentedState::from_vector(x);
        let u = inputs(t);
        let v = nernst_voltage(state.z.soc_cell.clamp(0.0, 1.0), u.current, p)?;
        Ok(AugmentedSample {
            crossover_flux: crossover_estimate(psi(state.z.soc_cell), state.theta()),
            state,
            time: t,
            v_out: v.volts,
            v_clamped: v.clamped,
        })
    };
    samples.push(record(0.0, &x)?);

    for k in 0..n_steps {
        let t = k as f64 * h;
        let k1 = derivative(t, &x)?;
        let k2 = derivative(t + 0.5 * h, &(&x + &k1 * (0.5 * h)))?;
        let k3 = derivative(t + 0.5 * h, &(&x + &k2 * (0.5 * h)))?;
        let k4 = derivative(t + h, &(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let t_next = (k + 1) as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(AugmentError::Battery(BatteryError::Integration {
                time_min: t_next,
            }));
        }
        samples.push(record(t_next, &x)?);
    }
    Ok(AugmentedTrajectory { samples })
}
