//! Isothermal lumped-parameter plant model of one half-cell plus reservoir:
//! state derivatives, the Nernst output map and its inverse, the linear
//! ground-truth crossover law, and a fixed-step RK4 simulator.
//!
//! Unit conventions: time in minutes, volumes in liters, flows in L/min,
//! molar flux in mol/min, current in amperes (converted internally to
//! mol/min through the Faraday constant), voltages in volts. Positive
//! current discharges the battery.

use thiserror::Error;

/// Seconds per internal time unit; converts amperes to coulombs per minute.
pub const SECONDS_PER_MINUTE: f64 = 60.0;

/// Clamp distance from the Nernst singularities at 0 and 1.
pub const SOC_CLAMP_DELTA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BatteryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("integration produced a non-finite state at t = {time_min} min")]
    Integration { time_min: f64 },
}

/// Fundamental constants of the electrochemical output map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Faraday constant, C/mol.
    pub faraday: f64,
    /// Universal gas constant, J/(mol·K).
    pub gas_constant: f64,
    /// Operating temperature, K.
    pub temperature: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            faraday: 96485.33212331,
            gas_constant: 8.31446261815324,
            temperature: 275.0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), BatteryError> {
        for (v, name) in [
            (self.faraday, "faraday"),
            (self.gas_constant, "gas_constant"),
            (self.temperature, "temperature"),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(BatteryError::InvalidParams(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Slope of the logistic voltage term: `2RT/F`, volts.
    pub fn nernst_slope(&self) -> f64 {
        2.0 * self.gas_constant * self.temperature / self.faraday
    }

    /// Converts a current in amperes to the equivalent molar rate in mol/min.
    pub fn current_to_mol_per_min(&self, current: f64) -> f64 {
        current * SECONDS_PER_MINUTE / self.faraday
    }
}

/// Plant parameters of one half-cell and its reservoir.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryParams {
    /// Reservoir volume, L.
    pub v_res: f64,
    /// Half-cell volume, L.
    pub v_cell: f64,
    /// Initial concentration of the neutral species, mol/L.
    pub c0: f64,
    /// Porosity of the carbon electrode, dimensionless in (0, 1].
    pub epsilon: f64,
    /// Equilibrium cell potential, V.
    pub e0_cell: f64,
    /// Ohmic overpotential coefficient, Ω (0 for open-circuit work).
    pub r_ohm: f64,
    pub constants: PhysicalConstants,
}

impl BatteryParams {
    pub fn validate(&self) -> Result<(), BatteryError> {
        self.constants.validate()?;
        if !(self.v_res > 0.0 && self.v_res.is_finite()) {
            return Err(BatteryError::InvalidParams(format!(
                "v_res must be positive, got {}",
                self.v_res
            )));
        }
        if !(self.v_cell > 0.0 && self.v_cell.is_finite()) {
            return Err(BatteryError::InvalidParams(format!(
                "v_cell must be positive, got {}",
                self.v_cell
            )));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(BatteryError::InvalidParams(format!(
                "c0 must be positive, got {}",
                self.c0
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(BatteryError::InvalidParams(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !self.e0_cell.is_finite() {
            return Err(BatteryError::InvalidParams("e0_cell must be finite".into()));
        }
        if !(self.r_ohm >= 0.0 && self.r_ohm.is_finite()) {
            return Err(BatteryError::InvalidParams(format!(
                "r_ohm must be nonnegative, got {}",
                self.r_ohm
            )));
        }
        Ok(())
    }

    /// Half-cell mixing rate `Q/(ε V_cell)`, 1/min, for a flow `q` in L/min.
    pub fn mixing_rate(&self, q: f64) -> f64 {
        q / (self.epsilon * self.v_cell)
    }

    /// Crossover input gains `[-1/(c0 V_res), -1/(ε c0 V_cell)]` (per mol/min).
    pub fn crossover_gain(&self) -> [f64; 2] {
        [
            -1.0 / (self.c0 * self.v_res),
            -1.0 / (self.epsilon * self.c0 * self.v_cell),
        ]
    }

    /// Current input gains (per ampere), including the s→min conversion.
    pub fn current_gain(&self) -> [f64; 2] {
        let per_amp = SECONDS_PER_MINUTE / self.constants.faraday;
        let e = self.crossover_gain();
        [e[0] * per_amp, e[1] * per_amp]
    }
}

/// Battery state pair: overall (reservoir) and half-cell state of charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    pub soc: f64,
    pub soc_cell: f64,
}

impl BatteryState {
    pub fn new(soc: f64, soc_cell: f64) -> Self {
        Self { soc, soc_cell }
    }

    pub fn is_finite(&self) -> bool {
        self.soc.is_finite() && self.soc_cell.is_finite()
    }
}

/// Exogenous plant inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantInputs {
    /// Battery current, A. Positive discharges.
    pub current: f64,
    /// Volumetric flow rate, L/min.
    pub flow_rate: f64,
}

/// Time derivative of the battery states for crossover flux `qx` (mol/min).
pub fn state_derivative(
    z: &BatteryState,
    u: &PlantInputs,
    qx: f64,
    p: &BatteryParams,
) -> Result<[f64; 2], BatteryError> {
    if !z.is_finite() {
        return Err(BatteryError::NonFinite("battery state"));
    }
    if !u.current.is_finite() || !u.flow_rate.is_finite() {
        return Err(BatteryError::NonFinite("plant inputs"));
    }
    if !qx.is_finite() {
        return Err(BatteryError::NonFinite("crossover flux"));
    }
    let i_mol = p.constants.current_to_mol_per_min(u.current);
    let d_soc = -(qx + i_mol) / (p.c0 * p.v_res);
    let d_soc_cell = p.mixing_rate(u.flow_rate) * (z.soc - z.soc_cell)
        - (qx + i_mol) / (p.epsilon * p.c0 * p.v_cell);
    Ok([d_soc, d_soc_cell])
}

/// Linear ground-truth crossover law `k_mt · c0 · SOC_cell`, mol/min.
pub fn linear_crossover_flux(soc_cell: f64, k_mt: f64, c0: f64) -> f64 {
    k_mt * c0 * soc_cell
}

/// Nernst voltage with clamp bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NernstVoltage {
    pub volts: f64,
    /// True when the input had to be clamped away from 0 or 1.
    pub clamped: bool,
}

/// Terminal voltage from the half-cell state of charge and current.
///
/// The logistic argument is clamped to `[δ, 1-δ]` with `δ = 1e-6`; a clamp is
/// reported in the result rather than treated as an error.
pub fn nernst_voltage(
    soc_cell: f64,
    current: f64,
    p: &BatteryParams,
) -> Result<NernstVoltage, BatteryError> {
    if !soc_cell.is_finite() {
        return Err(BatteryError::NonFinite("soc_cell"));
    }
    if !current.is_finite() {
        return Err(BatteryError::NonFinite("current"));
    }
    let s = soc_cell.clamp(SOC_CLAMP_DELTA, 1.0 - SOC_CLAMP_DELTA);
    let clamped = s != soc_cell;
    let volts = p.e0_cell + p.constants.nernst_slope() * (s / (1.0 - s)).ln() + p.r_ohm * current;
    Ok(NernstVoltage { volts, clamped })
}

/// Inverse of the Nernst map: half-cell state of charge from voltage.
///
/// Total on finite voltages; extreme inputs saturate at the `[δ, 1-δ]` clamp.
pub fn invert_nernst(v_out: f64, current: f64, p: &BatteryParams) -> f64 {
    let arg = (v_out - p.e0_cell - p.r_ohm * current) / p.constants.nernst_slope();
    let s = 1.0 / (1.0 + (-arg).exp());
    s.clamp(SOC_CLAMP_DELTA, 1.0 - SOC_CLAMP_DELTA)
}

/// One record of a simulated plant trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub time: f64,
    pub state: BatteryState,
    /// Crossover flux at this time and state, mol/min.
    pub crossover_flux: f64,
    pub v_out: f64,
    pub v_clamped: bool,
}

/// Fixed-step plant trajectory with strictly increasing time stamps.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples.first().map_or(f64::NAN, |s| s.time)
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.time)
    }

    /// Linear interpolation of the state at time `t` (must lie inside the
    /// recorded range up to `1e-9` slack).
    pub fn interp_state(&self, t: f64) -> Option<BatteryState> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if t < first.time - 1e-9 || t > last.time + 1e-9 {
            return None;
        }
        let t = t.clamp(first.time, last.time);
        let idx = self
            .samples
            .partition_point(|s| s.time <= t)
            .saturating_sub(1);
        let a = &self.samples[idx];
        if idx + 1 >= self.samples.len() {
            return Some(a.state);
        }
        let b = &self.samples[idx + 1];
        let w = (t - a.time) / (b.time - a.time);
        Some(BatteryState::new(
            a.state.soc + w * (b.state.soc - a.state.soc),
            a.state.soc_cell + w * (b.state.soc_cell - a.state.soc_cell),
        ))
    }

    /// Linear interpolation of the crossover flux at time `t`.
    pub fn interp_flux(&self, t: f64) -> Option<f64> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if t < first.time - 1e-9 || t > last.time + 1e-9 {
            return None;
        }
        let t = t.clamp(first.time, last.time);
        let idx = self
            .samples
            .partition_point(|s| s.time <= t)
            .saturating_sub(1);
        let a = &self.samples[idx];
        if idx + 1 >= self.samples.len() {
            return Some(a.crossover_flux);
        }
        let b = &self.samples[idx + 1];
        let w = (t - a.time) / (b.time - a.time);
        Some(a.crossover_flux + w * (b.crossover_flux - a.crossover_flux))
    }
}

/// Classical RK4 integration of the plant over `[0, horizon]` with fixed step
/// `dt` (the last step is shortened so the horizon is hit exactly).
///
/// `inputs` maps time to the plant inputs; `crossover` maps time and state to
/// the ground-truth flux and is re-evaluated at every RK4 stage. States are
/// clamped to `[0, 1]` after each step.
pub fn simulate<FI, FX>(
    p: &BatteryParams,
    z0: BatteryState,
    inputs: FI,
    crossover: FX,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory, BatteryError>
where
    FI: Fn(f64) -> PlantInputs,
    FX: Fn(f64, &BatteryState) -> f64,
{
    p.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(BatteryError::InvalidParams(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(horizon >= dt) {
        return Err(BatteryError::InvalidParams(format!(
            "horizon {horizon} must be at least one step {dt}"
        )));
    }
    if !z0.is_finite() {
        return Err(BatteryError::NonFinite("initial state"));
    }

    let n_steps = (horizon / dt).ceil() as usize;
    let h = horizon / n_steps as f64;
    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut z = z0;

    let record = |t: f64, z: &BatteryState| -> Result<TrajectorySample, BatteryError> {
        let u = inputs(t);
        let flux = crossover(t, z);
        let v = nernst_voltage(z.soc_cell, u.current, p)?;
        Ok(TrajectorySample {
            time: t,
            state: *z,
            crossover_flux: flux,
            v_out: v.volts,
            v_clamped: v.clamped,
        })
    };
    samples.push(record(0.0, &z)?);

    for k in 0..n_steps {
        let t = k as f64 * h;
        let f = |t: f64, z: &BatteryState| -> Result<[f64; 2], BatteryError> {
            let u = inputs(t);
            state_derivative(z, &u, crossover(t, z), p)
        };
        let k1 = f(t, &z)?;
        let z2 = BatteryState::new(z.soc + 0.5 * h * k1[0], z.soc_cell + 0.5 * h * k1[1]);
        let k2 = f(t + 0.5 * h, &z2)?;
        let z3 = BatteryState::new(z.soc + 0.5 * h * k2[0], z.soc_cell + 0.5 * h * k2[1]);
        let k3 = f(t + 0.5 * h, &z3)?;
        let z4 = BatteryState::new(z.soc + h * k3[0], z.soc_cell + h * k3[1]);
        let k4 = f(t + h, &z4)?;
        z = BatteryState::new(
            z.soc + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            z.soc_cell + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        );
        let t_next = (k + 1) as f64 * h;
        if !z.is_finite() {
            return Err(BatteryError::Integration { time_min: t_next });
        }
        z = BatteryState::new(z.soc.clamp(0.0, 1.0), z.soc_cell.clamp(0.0, 1.0));
        samples.push(record(t_next, &z)?);
    }
    Ok(Trajectory { samples })
}
