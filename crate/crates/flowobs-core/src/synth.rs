//! Observer gain synthesis.
//!
//! Assembles the two-vertex polytopic matrix-inequality program
//!
//! ```text
//! min  ᾱ + κ_Z γ_Z
//! s.t. [ -𝒜ᵢᵀP - P𝒜ᵢ + C_eᵀZᵀ + ZC_e - βĪ - W   P  ]
//!      [ P                                      ᾱ I ]  ⪰ 0   (i = 1, 2)
//!      [ γ_Z I  Z ; Zᵀ  γ_Z ] ⪰ 0,  P ⪰ εI,  W ⪰ εI,  ᾱ ≥ 0,  γ_Z ≥ 0
//! ```
//!
//! over the vertices `𝒜₁ = 𝒜(q_min)`, `𝒜₂ = 𝒜(q_max)` of the flow-rate
//! polytope, solves it through the dense barrier solver, re-checks the
//! certificates with an independent eigenvalue pass, and derives the
//! observer gain factor `P⁻¹Z` plus the residual-set diagnostics.

use std::io::{BufRead, Write};

use nalgebra::{Cholesky, DMatrix, DVector, RowDVector};
use sdp_core::{min_eig, solve, SdpBlock, SdpError, SdpProblem, SolveOptions, SolveStatus};
use thiserror::Error;

use crate::augment::{
    build_script_a, delta_bar, gamma_e, measurement_row, polytope_vertices, AugmentError,
    BoundSet, CrossoverModelConfig, TransformT,
};
use crate::batch;
use crate::battery::BatteryParams;

/// Positive-definiteness floor for the `P` and `W` decision variables.
pub const PSD_FLOOR: f64 = 1e-9;

/// Upper box bound on `γ_Z`; keeps the barrier bounded when `κ_Z = 0`
/// removes `γ_Z` from the objective. Inactive in any sane configuration.
pub const GAMMA_Z_CAP: f64 = 1e9;

/// Default eigenvalue slack accepted by the verifier.
pub const DEFAULT_FEAS_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("invalid synthesis configuration: {0}")]
    InvalidConfig(String),

    #[error("LMI program infeasible (phase-1 margin {phase1_t:e})")]
    Infeasible { phase1_t: f64 },

    #[error("solver did not converge ({status:?} after {iterations} iterations, gap {gap:e})")]
    Numerical {
        status: SolveStatus,
        iterations: usize,
        gap: f64,
    },

    #[error("solution failed certification: {0}")]
    Certification(String),

    #[error("gain file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("gain file dimension {found} does not match configuration dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(transparent)]
    Augment(#[from] AugmentError),

    #[error(transparent)]
    Sdp(#[from] SdpError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Configuration of one synthesis run.
#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    /// Fixed weight β of the compensated-uncertainty block.
    pub beta: f64,
    /// Objective weight κ_Z on the gain-norm bound.
    pub kappa_z: f64,
    /// Flow-rate interval, L/min.
    pub q_min: f64,
    pub q_max: f64,
    /// Eigenvalue slack demanded of the verified solution.
    pub feas_margin: f64,
    pub cfg: CrossoverModelConfig,
    pub params: BatteryParams,
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        self.cfg.validate()?;
        self.params
            .validate()
            .map_err(|e| SynthesisError::InvalidConfig(e.to_string()))?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(SynthesisError::InvalidConfig(format!(
                "beta must be strictly positive, got {}",
                self.beta
            )));
        }
        if !(self.kappa_z >= 0.0 && self.kappa_z.is_finite()) {
            return Err(SynthesisError::InvalidConfig(format!(
                "kappa_z must be nonnegative, got {}",
                self.kappa_z
            )));
        }
        if !(self.q_min > 0.0 && self.q_min < self.q_max && self.q_max.is_finite()) {
            return Err(SynthesisError::InvalidConfig(format!(
                "flow interval must satisfy 0 < q_min < q_max, got [{}, {}]",
                self.q_min, self.q_max
            )));
        }
        if !(self.feas_margin >= 0.0) {
            return Err(SynthesisError::InvalidConfig(
                "feas_margin must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Index layout of the scalarized decision vector
/// `y = [vech(P), vech(W), Z, ᾱ, γ_Z]`.
#[derive(Debug, Clone, Copy)]
pub struct VarLayout {
    /// Augmented dimension `n = l + 2`.
    pub n: usize,
}

impl VarLayout {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    /// Number of upper-triangle entries of an `n x n` symmetric matrix.
    pub fn vech_len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn num_vars(&self) -> usize {
        2 * self.vech_len() + self.n + 2
    }

    pub fn p_index(&self, i: usize, j: usize) -> usize {
        vech_index(self.n, i, j)
    }

    pub fn w_index(&self, i: usize, j: usize) -> usize {
        self.vech_len() + vech_index(self.n, i, j)
    }

    pub fn z_index(&self, i: usize) -> usize {
        2 * self.vech_len() + i
    }

    pub fn alpha_index(&self) -> usize {
        2 * self.vech_len() + self.n
    }

    pub fn gamma_index(&self) -> usize {
        2 * self.vech_len() + self.n + 1
    }

    /// Upper-triangle entries in layout order.
    pub fn vech_entries(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
    }
}

fn vech_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // Row-major upper triangle: row i starts after sum_{k<i} (n-k) entries.
    i * (2 * n - i + 1) / 2 + (j - i)
}

/// Symmetric basis matrix of the `(i, j)` upper-triangle entry: carries both
/// mirrored entries off the diagonal.
fn sym_basis(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n);
    b[(i, j)] = 1.0;
    b[(j, i)] = 1.0;
    b
}

/// `Ī = Ī_v Ī_vᵀ` with `Ī_v = [I₂; 0]`: identity on the battery states.
fn battery_selector(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(0, 0)] = 1.0;
    m[(1, 1)] = 1.0;
    m
}

/// Assembles one vertex block of the program: the `2n x 2n` symmetric affine
/// expression
/// `[ -𝒜ᵀP - P𝒜 + C_eᵀZᵀ + ZC_e - βĪ - W , P ; P , ᾱI ]`
/// in the decision variables designated by `layout`.
pub fn assemble_vertex_block(
    script_a: &DMatrix<f64>,
    c_e: &RowDVector<f64>,
    beta: f64,
    layout: &VarLayout,
) -> Result<SdpBlock, SynthesisError> {
    let n = layout.n;
    if script_a.nrows() != n || script_a.ncols() != n || c_e.len() != n {
        return Err(SynthesisError::InvalidConfig(format!(
            "vertex matrix is {}x{} and output row has {} entries; layout expects {n}",
            script_a.nrows(),
            script_a.ncols(),
            c_e.len()
        )));
    }
    let dim = 2 * n;
    let mut f0 = DMatrix::zeros(dim, dim);
    let sel = battery_selector(n);
    for i in 0..n {
        for j in 0..n {
            f0[(i, j)] = -beta * sel[(i, j)];
        }
    }

    let mut coeffs = vec![DMatrix::zeros(dim, dim); layout.num_vars()];
    for (i, j) in layout.vech_entries() {
        let b = sym_basis(n, i, j);
        // P: Lyapunov part in the top-left, plain entries off-diagonal.
        let lyap = -script_a.transpose() * &b - &b * script_a;
        let cp = &mut coeffs[layout.p_index(i, j)];
        for r in 0..n {
            for c in 0..n {
                cp[(r, c)] = lyap[(r, c)];
                cp[(r, n + c)] = b[(r, c)];
                cp[(n + r, c)] = b[(r, c)];
            }
        }
        // W enters negated in the top-left.
        let cw = &mut coeffs[layout.w_index(i, j)];
        for r in 0..n {
            for c in 0..n {
                cw[(r, c)] = -b[(r, c)];
            }
        }
    }
    for a in 0..n {
        // Z column a: Z C_e + C_eᵀ Zᵀ restricted to the unit column e_a.
        let cz = &mut coeffs[layout.z_index(a)];
        for c in 0..n {
            cz[(a, c)] += c_e[c];
            cz[(c, a)] += c_e[c];
        }
    }
    let ca = &mut coeffs[layout.alpha_index()];
    for r in 0..n {
        ca[(n + r, n + r)] = 1.0;
    }
    Ok(SdpBlock::new(f0, coeffs)?)
}

/// Gain-norm block `[γ_Z I, Z; Zᵀ, γ_Z] ⪰ 0`, equivalent to `‖Z‖ ≤ γ_Z`.
fn z_norm_block(layout: &VarLayout) -> Result<SdpBlock, SynthesisError> {
    let n = layout.n;
    let dim = n + 1;
    let f0 = DMatrix::zeros(dim, dim);
    let mut coeffs = vec![DMatrix::zeros(dim, dim); layout.num_vars()];
    for a in 0..n {
        let cz = &mut coeffs[layout.z_index(a)];
        cz[(a, n)] = 1.0;
        cz[(n, a)] = 1.0;
    }
    coeffs[layout.gamma_index()] = DMatrix::identity(dim, dim);
    Ok(SdpBlock::new(f0, coeffs)?)
}

/// `M - floor·I ⪰ 0` for the symmetric variable selected by `index`.
fn psd_floor_block(
    layout: &VarLayout,
    index: impl Fn(&VarLayout, usize, usize) -> usize,
    floor: f64,
) -> Result<SdpBlock, SynthesisError> {
    let n = layout.n;
    let f0 = -DMatrix::<f64>::identity(n, n) * floor;
    let mut coeffs = vec![DMatrix::zeros(n, n); layout.num_vars()];
    for (i, j) in layout.vech_entries() {
        coeffs[index(layout, i, j)] = sym_basis(n, i, j);
    }
    Ok(SdpBlock::new(f0, coeffs)?)
}

/// 1x1 scalar bound block `sign·y[idx] + offset ⪰ 0`.
fn scalar_block(layout: &VarLayout, idx: usize, sign: f64, offset: f64) -> SdpBlock {
    let mut coeffs = vec![DMatrix::zeros(1, 1); layout.num_vars()];
    coeffs[idx] = DMatrix::from_element(1, 1, sign);
    SdpBlock::new(DMatrix::from_element(1, 1, offset), coeffs).expect("1x1 blocks are symmetric")
}

/// Builds the LMI program for an arbitrary pair of vertex matrices.
pub fn build_sdp_from_vertices(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    c_e: &RowDVector<f64>,
    beta: f64,
    kappa_z: f64,
) -> Result<(SdpProblem, VarLayout), SynthesisError> {
    let layout = VarLayout::new(a1.nrows());
    let mut objective = DVector::zeros(layout.num_vars());
    objective[layout.alpha_index()] = 1.0;
    objective[layout.gamma_index()] = kappa_z;
    let blocks = vec![
        assemble_vertex_block(a1, c_e, beta, &layout)?,
        assemble_vertex_block(a2, c_e, beta, &layout)?,
        z_norm_block(&layout)?,
        psd_floor_block(&layout, VarLayout::p_index, PSD_FLOOR)?,
        psd_floor_block(&layout, VarLayout::w_index, PSD_FLOOR)?,
        scalar_block(&layout, layout.alpha_index(), 1.0, 0.0),
        scalar_block(&layout, layout.gamma_index(), 1.0, 0.0),
        scalar_block(&layout, layout.gamma_index(), -1.0, GAMMA_Z_CAP),
    ];
    Ok((SdpProblem::new(objective, blocks)?, layout))
}

/// Builds the program for the configured battery and flow interval.
pub fn build_sdp(config: &SynthesisConfig) -> Result<(SdpProblem, VarLayout), SynthesisError> {
    config.validate()?;
    let (a1, a2) = polytope_vertices(config.q_min, config.q_max, &config.params, &config.cfg)?;
    let c_e = measurement_row(&config.cfg);
    build_sdp_from_vertices(&a1, &a2, &c_e, config.beta, config.kappa_z)
}

/// Certified solution of the gain-synthesis program.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub p_mat: DMatrix<f64>,
    pub z_vec: DVector<f64>,
    pub w_mat: DMatrix<f64>,
    pub alpha_bar: f64,
    /// Certified bound on `‖Z‖`.
    pub gamma_z_norm: f64,
    /// Precomputed `P⁻¹Z`; the time-varying gain is `T̂⁻¹ · gain_factor`.
    pub gain_factor: DVector<f64>,
    /// Eigenvalue margins of the two vertex blocks at the solution.
    pub vertex_margins: Vec<f64>,
}

impl SynthesisResult {
    pub fn dim(&self) -> usize {
        self.p_mat.nrows()
    }

    /// Extracts the solution matrices from a raw decision vector.
    fn from_solution(y: &DVector<f64>, layout: &VarLayout) -> Result<Self, SynthesisError> {
        let n = layout.n;
        let mut p = DMatrix::zeros(n, n);
        let mut w = DMatrix::zeros(n, n);
        for (i, j) in layout.vech_entries() {
            p[(i, j)] = y[layout.p_index(i, j)];
            p[(j, i)] = y[layout.p_index(i, j)];
            w[(i, j)] = y[layout.w_index(i, j)];
            w[(j, i)] = y[layout.w_index(i, j)];
        }
        let z = DVector::from_fn(n, |i, _| y[layout.z_index(i)]);
        let chol = Cholesky::new(p.clone()).ok_or_else(|| {
            SynthesisError::Certification("P is not positive definite".into())
        })?;
        let gain_factor = chol.solve(&z);
        Ok(Self {
            p_mat: p,
            z_vec: z,
            w_mat: w,
            alpha_bar: y[layout.alpha_index()],
            gamma_z_norm: y[layout.gamma_index()],
            gain_factor,
            vertex_margins: Vec::new(),
        })
    }

    /// Evaluates one vertex block at the solution values.
    pub fn vertex_block_at(&self, script_a: &DMatrix<f64>, c_e: &RowDVector<f64>, beta: f64) -> DMatrix<f64> {
        let n = self.dim();
        let m = self.riccati_residual_linear(script_a, c_e, beta);
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                big[(i, j)] = m[(i, j)];
                big[(i, n + j)] = self.p_mat[(i, j)];
                big[(n + i, j)] = self.p_mat[(i, j)];
            }
            big[(n + i, n + i)] = self.alpha_bar;
        }
        big
    }

    /// Top-left affine part `-𝒜ᵀP - P𝒜 + C_eᵀZᵀ + ZC_e - βĪ - W`.
    fn riccati_residual_linear(
        &self,
        script_a: &DMatrix<f64>,
        c_e: &RowDVector<f64>,
        beta: f64,
    ) -> DMatrix<f64> {
        let n = self.dim();
        let zc = &self.z_vec * c_e;
        let mut m = -script_a.transpose() * &self.p_mat - &self.p_mat * script_a + &zc
            + zc.transpose()
            - &self.w_mat;
        m -= battery_selector(n) * beta;
        m
    }

    /// The unschured Riccati-like expression
    /// `-𝒜ᵀP - P𝒜 + C_eᵀZᵀ + ZC_e - βĪ - W - (1/ᾱ)PP`.
    pub fn riccati_residual(
        &self,
        script_a: &DMatrix<f64>,
        c_e: &RowDVector<f64>,
        beta: f64,
    ) -> DMatrix<f64> {
        self.riccati_residual_linear(script_a, c_e, beta)
            - &self.p_mat * &self.p_mat / self.alpha_bar
    }

    /// Closed-loop matrix `𝒜 - P⁻¹ Z C_e` in transformed coordinates.
    pub fn closed_loop(&self, script_a: &DMatrix<f64>, c_e: &RowDVector<f64>) -> DMatrix<f64> {
        script_a - &self.gain_factor * c_e
    }
}

/// Solves the configured program and certifies the solution.
pub fn synthesize(config: &SynthesisConfig) -> Result<SynthesisResult, SynthesisError> {
    let (problem, layout) = build_sdp(config)?;
    let opts = SolveOptions {
        feas_tol: 1e-7,
        gap_tol: 1e-6,
        max_iter: 600,
    };
    let sol = solve(&problem, &opts)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(SynthesisError::Infeasible {
                phase1_t: sol.phase1_t,
            })
        }
        status => {
            return Err(SynthesisError::Numerical {
                status,
                iterations: sol.iterations,
                gap: sol.duality_gap_estimate,
            })
        }
    }

    let mut result = SynthesisResult::from_solution(&sol.y, &layout)?;
    let (a1, a2) = polytope_vertices(config.q_min, config.q_max, &config.params, &config.cfg)?;
    let c_e = measurement_row(&config.cfg);
    for a in [&a1, &a2] {
        let block = result.vertex_block_at(a, &c_e, config.beta);
        result.vertex_margins.push(min_eig(&block)?);
    }

    // Independent certificate pass.
    let lam_p = min_eig(&result.p_mat)?;
    if !(lam_p > 0.0) {
        return Err(SynthesisError::Certification(format!(
            "lambda_min(P) = {lam_p:e} is not positive"
        )));
    }
    let lam_w = min_eig(&result.w_mat)?;
    if !(lam_w > 0.0) {
        return Err(SynthesisError::Certification(format!(
            "lambda_min(W) = {lam_w:e} is not positive"
        )));
    }
    for (i, margin) in result.vertex_margins.iter().enumerate() {
        if *margin < -config.feas_margin {
            return Err(SynthesisError::Certification(format!(
                "vertex {i} block margin {margin:e} below -{:e}",
                config.feas_margin
            )));
        }
    }
    if result.z_vec.norm() > result.gamma_z_norm + 1e-6 {
        return Err(SynthesisError::Certification(format!(
            "|Z| = {} exceeds certified bound {}",
            result.z_vec.norm(),
            result.gamma_z_norm
        )));
    }
    Ok(result)
}

/// Pointwise certificate check at one flow rate.
#[derive(Debug, Clone, Copy)]
pub struct FlowCheck {
    pub q: f64,
    /// Smallest eigenvalue of the vertex-form block evaluated at `𝒜(q)`.
    pub block_margin: f64,
    /// Largest real part over the closed-loop spectrum at `𝒜(q)`.
    pub spectral_abscissa: f64,
}

/// Runs the certificate checks at one sampled flow rate.
pub fn check_at_flow(
    result: &SynthesisResult,
    config: &SynthesisConfig,
    q: f64,
) -> Result<FlowCheck, SynthesisError> {
    let script = build_script_a(q, &config.params, &config.cfg);
    let c_e = measurement_row(&config.cfg);
    let block = result.vertex_block_at(&script, &c_e, config.beta);
    let block_margin = min_eig(&block)?;
    let closed = result.closed_loop(&script, &c_e);
    let spectral_abscissa = closed
        .complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FlowCheck {
        q,
        block_margin,
        spectral_abscissa,
    })
}

/// Certificate report over a sampled flow grid.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub checks: Vec<FlowCheck>,
    pub lambda_min_p: f64,
    pub lambda_min_w: f64,
    pub margin_tol: f64,
    pub passed: bool,
    /// Human-readable description of every failed check.
    pub failures: Vec<String>,
}

/// Re-checks the certificates at `n_samples` flow rates spanning the
/// configured interval (vertices included).
pub fn verify_solution(
    result: &SynthesisResult,
    config: &SynthesisConfig,
    n_samples: usize,
) -> Result<VerificationReport, SynthesisError> {
    config.validate()?;
    if result.dim() != config.cfg.dim() {
        return Err(SynthesisError::DimensionMismatch {
            expected: config.cfg.dim(),
            found: result.dim(),
        });
    }
    let n_samples = n_samples.max(2);
    let qs: Vec<f64> = (0..n_samples)
        .map(|i| {
            config.q_min + (config.q_max - config.q_min) * i as f64 / (n_samples - 1) as f64
        })
        .collect();
    let checks: Vec<Result<FlowCheck, SynthesisError>> =
        batch::map(&qs, |&q| check_at_flow(result, config, q));
    let mut unwrapped = Vec::with_capacity(checks.len());
    for c in checks {
        unwrapped.push(c?);
    }
    let lambda_min_p = min_eig(&result.p_mat)?;
    let lambda_min_w = min_eig(&result.w_mat)?;
    let mut failures = Vec::new();
    for c in &unwrapped {
        if c.block_margin < -config.feas_margin {
            failures.push(format!(
                "block margin {:e} below -{:e} at Q = {} L/min",
                c.block_margin, config.feas_margin, c.q
            ));
        }
        if !(c.spectral_abscissa < 0.0) {
            failures.push(format!(
                "closed-loop spectral abscissa {:e} not negative at Q = {} L/min",
                c.spectral_abscissa, c.q
            ));
        }
    }
    if !(lambda_min_p > 0.0) {
        failures.push(format!("lambda_min(P) = {lambda_min_p:e} not positive"));
    }
    if !(lambda_min_w > 0.0) {
        failures.push(format!("lambda_min(W) = {lambda_min_w:e} not positive"));
    }
    Ok(VerificationReport {
        checks: unwrapped,
        lambda_min_p,
        lambda_min_w,
        margin_tol: config.feas_margin,
        passed: failures.is_empty(),
        failures,
    })
}

/// Time-varying observer gain `H_t = T̂⁻¹ P⁻¹ Z` at the given transformation.
pub fn gain_at(result: &SynthesisResult, transform: &TransformT) -> DVector<f64> {
    transform.apply_inverse(&result.gain_factor)
}

/// Proof-side tuning knobs of the residual-set diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct EuubKnobs {
    /// Compensation split σ ∈ [0, 1].
    pub sigma: f64,
    /// Decay/radius split ρ ∈ (0, 1].
    pub rho: f64,
    /// Margin split μ ∈ (0, 1].
    pub mu: f64,
    /// Radius r of the error region considered by the bound.
    pub r: f64,
}

impl Default for EuubKnobs {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            rho: 0.5,
            mu: 0.5,
            r: 1.0,
        }
    }
}

/// Exponential-convergence and ultimate-bound diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct EuubReport {
    /// `c_m = λ_min(P)`.
    pub p_eig_min: f64,
    /// `c_M = λ_max(P)`.
    pub p_eig_max: f64,
    /// `c_W = λ_min(W)`.
    pub w_eig_min: f64,
    /// `c̄ = c_W - 2ργ_T c_M`; the report is valid only when positive.
    pub c_bar: f64,
    pub delta_bar: f64,
    /// `Δ = δ̄ + (1-ρ)γ_T r`.
    pub delta_cap: f64,
    /// Residual radius in transformed coordinates `r_δ = 2c_M Δ/(μ c̄)`.
    pub r_delta: f64,
    /// Ultimate bound on the estimation error `r_x̃`.
    pub r_xtilde: f64,
    /// Exponential decay rate `(1-μ) c̄ / (2 c_M)`, 1/min.
    pub decay_rate: f64,
    /// Condition number bound `κ_P = c_M / c_m`.
    pub kappa_p: f64,
    /// Compensated-uncertainty magnitude `γ = σ γ_E γ_θ γ_Ψ̃ γ_s̃`.
    pub gamma: f64,
    /// Whether `(1/ᾱ)·β ≥ γ²` holds for the supplied bounds.
    pub alpha_beta_admissible: bool,
    /// False when `c̄ ≤ 0` (the decay hypothesis is violated).
    pub valid: bool,
}

/// Computes the residual-set diagnostics for a certified solution.
pub fn euub_report(
    result: &SynthesisResult,
    config: &SynthesisConfig,
    bounds: &BoundSet,
    knobs: &EuubKnobs,
) -> Result<EuubReport, SynthesisError> {
    bounds.validate()?;
    if !(knobs.rho > 0.0 && knobs.rho <= 1.0) || !(knobs.mu > 0.0 && knobs.mu <= 1.0) {
        return Err(SynthesisError::InvalidConfig(format!(
            "rho and mu must lie in (0, 1], got rho={}, mu={}",
            knobs.rho, knobs.mu
        )));
    }
    if !(0.0..=1.0).contains(&knobs.sigma) {
        return Err(SynthesisError::InvalidConfig(format!(
            "sigma must lie in [0, 1], got {}",
            knobs.sigma
        )));
    }
    let (p_eigs, _) = sdp_core::sym_eig(&result.p_mat)?;
    let (w_eigs, _) = sdp_core::sym_eig(&result.w_mat)?;
    let c_m = p_eigs[0];
    let c_max = p_eigs[p_eigs.len() - 1];
    let c_w = w_eigs[0];
    let ge = gamma_e(&config.params);
    let dbar = delta_bar(bounds, knobs.sigma, ge);
    let c_bar = c_w - 2.0 * knobs.rho * bounds.gamma_t * c_max;
    let valid = c_bar > 0.0;
    let delta_cap = dbar + (1.0 - knobs.rho) * bounds.gamma_t * knobs.r;
    let (r_delta, r_xtilde) = if valid {
        let r_delta = 2.0 * c_max * delta_cap / (knobs.mu * c_bar);
        let kappa_p = c_max / c_m;
        (r_delta, kappa_p.sqrt() * r_delta / bounds.tau_m)
    } else {
        (f64::NAN, f64::NAN)
    };
    let gamma = knobs.sigma * ge * bounds.gamma_theta * bounds.gamma_psi_tilde * bounds.gamma_s_tilde;
    Ok(EuubReport {
        p_eig_min: c_m,
        p_eig_max: c_max,
        w_eig_min: c_w,
        c_bar,
        delta_bar: dbar,
        delta_cap,
        r_delta,
        r_xtilde,
        decay_rate: if valid {
            (1.0 - knobs.mu) * c_bar / (2.0 * c_max)
        } else {
            f64::NAN
        },
        kappa_p: c_max / c_m,
        gamma,
        alpha_beta_admissible: config.beta / result.alpha_bar >= gamma * gamma,
        valid,
    })
}

/// Writes the solution in the structured gain-file format: a header,
/// dimension, then each matrix row-major with shortest round-trip floats.
pub fn write_gain<W: Write>(result: &SynthesisResult, mut w: W) -> std::io::Result<()> {
    let n = result.dim();
    writeln!(w, "flowobs-gain 1")?;
    writeln!(w, "dim {n}")?;
    writeln!(w, "p")?;
    write_matrix(&mut w, &result.p_mat)?;
    writeln!(w, "z")?;
    writeln!(w, "{}", join_floats(result.z_vec.as_slice()))?;
    writeln!(w, "w")?;
    write_matrix(&mut w, &result.w_mat)?;
    writeln!(w, "gain_factor")?;
    writeln!(w, "{}", join_floats(result.gain_factor.as_slice()))?;
    writeln!(w, "alpha_bar {}", result.alpha_bar)?;
    writeln!(w, "gamma_z {}", result.gamma_z_norm)?;
    writeln!(w, "vertex_margins {}", join_floats(&result.vertex_margins))?;
    Ok(())
}

/// Reads a gain file written by [`write_gain`].
pub fn read_gain<R: BufRead>(r: R) -> Result<SynthesisResult, SynthesisError> {
    let mut lines = Lines::new(r);
    if lines.next()?.trim() != "flowobs-gain 1" {
        return Err(lines.err("expected header `flowobs-gain 1`"));
    }
    let dim_line = lines.next()?;
    let n: usize = dim_line
        .strip_prefix("dim ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| lines.err("expected `dim <n>`"))?;
    lines.expect("p")?;
    let p_mat = lines.matrix(n)?;
    lines.expect("z")?;
    let z_vec = DVector::from_vec(lines.floats(n)?);
    lines.expect("w")?;
    let w_mat = lines.matrix(n)?;
    lines.expect("gain_factor")?;
    let gain_factor = DVector::from_vec(lines.floats(n)?);
    let alpha_bar = lines.keyed_float("alpha_bar")?;
    let gamma_z_norm = lines.keyed_float("gamma_z")?;
    let margins_line = lines.next()?;
    let vertex_margins: Vec<f64> = margins_line
        .strip_prefix("vertex_margins")
        .ok_or_else(|| lines.err("expected `vertex_margins ...`"))?
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| lines.err("bad vertex margin entry"))?;
    Ok(SynthesisResult {
        p_mat,
        z_vec,
        w_mat,
        alpha_bar,
        gamma_z_norm,
        gain_factor,
        vertex_margins,
    })
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

struct Lines<R> {
    reader: R,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R) -> Self {
        Self { reader, line: 0 }
    }

    fn err(&self, message: &str) -> SynthesisError {
        SynthesisError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<String, SynthesisError> {
        let mut buf = String::new();
        loop {
            buf.clear();
            let n = self
                .reader
                .read_line(&mut buf)
                .map_err(SynthesisError::Io)?;
            self.line += 1;
            if n == 0 {
                return Err(SynthesisError::Parse {
                    line: self.line,
                    message: "unexpected end of file".into(),
                });
            }
            if !buf.trim().is_empty() {
                return Ok(buf);
            }
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<(), SynthesisError> {
        let line = self.next()?;
        if line.trim() != keyword {
            return Err(self.err(&format!("expected `{keyword}`, found `{}`", line.trim())));
        }
        Ok(())
    }

    fn floats(&mut self, count: usize) -> Result<Vec<f64>, SynthesisError> {
        let line = self.next()?;
        let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|_| self.err("expected floating-point entries"))?;
        if vals.len() != count {
            return Err(self.err(&format!("expected {count} entries, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn matrix(&mut self, n: usize) -> Result<DMatrix<f64>, SynthesisError> {
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            rows.push(self.floats(n)?);
        }
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    fn keyed_float(&mut self, key: &str) -> Result<f64, SynthesisError> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| self.err(&format!("expected `{key} <value>`")))
    }
}
