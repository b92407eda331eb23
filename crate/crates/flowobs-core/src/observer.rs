//! Augmented observer execution against a measurement stream.
//!
//! Measurements arrive as terminal voltage, current and flow rate; the
//! innovation is formed in half-cell state-of-charge space by inverting the
//! Nernst map, then injected through the time-varying gain
//! `H_t = T̂⁻¹(Ψ(ẑ₂)) · (P⁻¹Z)`. Between samples the observer integrates
//! with RK4 substeps under a zero-order hold of the measurement; Ψ, the
//! system matrices and the gain are re-evaluated at every stage.

use nalgebra::DVector;
use thiserror::Error;

use crate::augment::{
    build_augmented, crossover_estimate, psi, AugmentError, AugmentedState, CrossoverModelConfig,
};
use crate::battery::{invert_nernst, BatteryParams, PlantInputs, Trajectory};

#[derive(Debug, Error)]
pub enum ObserverError {
    #[error("invalid observer configuration: {0}")]
    InvalidConfig(String),

    #[error("bad measurement stream at index {index}: {message}")]
    BadStream { index: usize, message: String },

    #[error("observer state became non-finite at t = {time_min} min")]
    NonFinite { time_min: f64 },

    #[error("time alignment failed: {0}")]
    Alignment(String),

    #[error(transparent)]
    Augment(#[from] AugmentError),
}

/// Static configuration of one observer run.
#[derive(Debug, Clone)]
pub struct ObserverConfig {
    pub params: BatteryParams,
    pub cfg: CrossoverModelConfig,
    /// Precomputed `P⁻¹Z` from synthesis.
    pub gain_factor: DVector<f64>,
    pub x_hat0: AugmentedState,
    /// Maximum RK4 substep, minutes.
    pub dt: f64,
    /// Flow-rate interval certified by synthesis; out-of-range samples are
    /// flagged in the trace, not rejected.
    pub flow_range: Option<(f64, f64)>,
}

impl ObserverConfig {
    pub fn validate(&self) -> Result<(), ObserverError> {
        self.cfg
            .validate()
            .map_err(|e| ObserverError::InvalidConfig(e.to_string()))?;
        self.params
            .validate()
            .map_err(|e| ObserverError::InvalidConfig(e.to_string()))?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ObserverError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        let n = self.cfg.dim();
        if self.gain_factor.len() != n {
            return Err(ObserverError::InvalidConfig(format!(
                "gain factor has {} entries, augmented dimension is {n}",
                self.gain_factor.len()
            )));
        }
        if self.x_hat0.dim() != n {
            return Err(ObserverError::InvalidConfig(format!(
                "initial estimate has dimension {}, augmented dimension is {n}",
                self.x_hat0.dim()
            )));
        }
        Ok(())
    }
}

/// One timestamped measurement record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSample {
    /// Time, minutes.
    pub time: f64,
    /// Terminal voltage, V.
    pub v_out: f64,
    /// Current, A (positive discharges).
    pub current: f64,
    /// Flow rate, L/min.
    pub flow_rate: f64,
}

/// Per-sample observer record.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub time: f64,
    pub x_hat: DVector<f64>,
    /// Predicted output `ŷ = C_e x̂` (half-cell state of charge).
    pub y_hat: f64,
    /// Innovation `ỹ = y - ŷ` at this sample.
    pub y_tilde: f64,
    /// Gain vector in effect at this sample.
    pub h_t: DVector<f64>,
    /// Crossover flux estimate `Ψ(ẑ₂)·θ̂`, mol/min.
    pub qx_hat: f64,
}

/// Full observer trace over a measurement stream.
#[derive(Debug, Clone, Default)]
pub struct ObserverTrace {
    pub records: Vec<TraceRecord>,
    /// Backward-difference estimate of `sup |ψ̇/ψ|` over the run
    /// (diagnostic for the transformation-drift bound).
    pub gamma_t_estimate: f64,
    /// Indices of samples whose flow rate left the certified interval.
    pub flow_warnings: Vec<usize>,
}

impl ObserverTrace {
    pub fn start_time(&self) -> f64 {
        self.records.first().map_or(f64::NAN, |r| r.time)
    }

    pub fn end_time(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.time)
    }
}

/// Gain in effect at the estimate `x_hat`: `H = T̂⁻¹(Ψ(ẑ₂)) g` with the
/// diagonal inverse applied entrywise.
fn gain_at_estimate(x_hat: &DVector<f64>, oc: &ObserverConfig) -> DVector<f64> {
    let ratio = oc.cfg.varrho / psi(x_hat[1]);
    DVector::from_fn(oc.gain_factor.len(), |i, _| {
        if i < 2 {
            oc.gain_factor[i]
        } else {
            oc.gain_factor[i] * ratio
        }
    })
}

/// Observer vector field at estimate `x_hat` for a held measurement
/// `y_meas` (SOC_cell space) and inputs `u`.
pub fn observer_derivative(
    x_hat: &DVector<f64>,
    y_meas: f64,
    u: &PlantInputs,
    oc: &ObserverConfig,
) -> Result<DVector<f64>, ObserverError> {
    let matrices = build_augmented(psi(x_hat[1]), u.flow_rate, &oc.params, &oc.cfg)?;
    let h = gain_at_estimate(x_hat, oc);
    let innovation = y_meas - x_hat[1];
    Ok(&matrices.a_e * x_hat + &matrices.b_e * u.current + h * innovation)
}

/// Advances the estimate from `sample.time` to `t_end` under a zero-order
/// hold of `sample`, splitting the interval into RK4 substeps of length at
/// most `oc.dt`. Returns the state unchanged for an empty interval.
pub fn step(
    x_hat: &DVector<f64>,
    sample: &MeasurementSample,
    t_end: f64,
    oc: &ObserverConfig,
) -> Result<DVector<f64>, ObserverError> {
    let span = t_end - sample.time;
    if span < 0.0 {
        return Err(ObserverError::InvalidConfig(format!(
            "step target {t_end} precedes sample time {}",
            sample.time
        )));
    }
    if span == 0.0 {
        return Ok(x_hat.clone());
    }
    let y_meas = invert_nernst(sample.v_out, sample.current, &oc.params);
    let u = PlantInputs {
        current: sample.current,
        flow_rate: sample.flow_rate,
    };
    let n_sub = (span / oc.dt).ceil().max(1.0) as usize;
    let h = span / n_sub as f64;
    let mut x = x_hat.clone();
    for k in 0..n_sub {
        let k1 = observer_derivative(&x, y_meas, &u, oc)?;
        let k2 = observer_derivative(&(&x + &k1 * (0.5 * h)), y_meas, &u, oc)?;
        let k3 = observer_derivative(&(&x + &k2 * (0.5 * h)), y_meas, &u, oc)?;
        let k4 = observer_derivative(&(&x + &k3 * h), y_meas, &u, oc)?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ObserverError::NonFinite {
                time_min: sample.time + (k + 1) as f64 * h,
            });
        }
    }
    Ok(x)
}

/// Runs the observer over an ordered measurement stream.
pub fn run(oc: &ObserverConfig, stream: &[MeasurementSample]) -> Result<ObserverTrace, ObserverError> {
    oc.validate()?;
    if stream.len() < 2 {
        return Err(ObserverError::BadStream {
            index: stream.len(),
            message: "need at least two samples".into(),
        });
    }
    for (i, s) in stream.iter().enumerate() {
        if !(s.time.is_finite() && s.v_out.is_finite() && s.current.is_finite() && s.flow_rate.is_finite())
        {
            return Err(ObserverError::BadStream {
                index: i,
                message: "non-finite sample".into(),
            });
        }
        if i > 0 && s.time <= stream[i - 1].time {
            return Err(ObserverError::BadStream {
                index: i,
                message: format!(
                    "time {} does not increase past {}",
                    s.time,
                    stream[i - 1].time
                ),
            });
        }
    }

    let mut flow_warnings = Vec::new();
    if let Some((q_lo, q_hi)) = oc.flow_range {
        for (i, s) in stream.iter().enumerate() {
            if s.flow_rate < q_lo || s.flow_rate > q_hi {
                flow_warnings.push(i);
            }
        }
    }

    let mut records = Vec::with_capacity(stream.len());
    let mut x = oc.x_hat0.to_vector();
    let mut gamma_t_estimate = 0.0f64;
    let mut psi_prev = psi(x[1]);

    let record = |x: &DVector<f64>, s: &MeasurementSample, oc: &ObserverConfig| TraceRecord {
        time: s.time,
        x_hat: x.clone(),
        y_hat: x[1],
        y_tilde: invert_nernst(s.v_out, s.current, &oc.params) - x[1],
        h_t: gain_at_estimate(x, oc),
        qx_hat: crossover_estimate(psi(x[1]), x[2]),
    };

    records.push(record(&x, &stream[0], oc));
    for k in 0..stream.len() - 1 {
        let dt_k = stream[k + 1].time - stream[k].time;
        x = step(&x, &stream[k], stream[k + 1].time, oc)?;
        let psi_now = psi(x[1]);
        gamma_t_estimate = gamma_t_estimate.max(((psi_now - psi_prev) / (dt_k * psi_now)).abs());
        psi_prev = psi_now;
        records.push(record(&x, &stream[k + 1], oc));
    }
    Ok(ObserverTrace {
        records,
        gamma_t_estimate,
        flow_warnings,
    })
}

/// Estimation-error metrics of a trace against an aligned truth trajectory.
#[derive(Debug, Clone)]
pub struct ErrorMetrics {
    pub times: Vec<f64>,
    pub err_soc: Vec<f64>,
    pub err_soc_cell: Vec<f64>,
    /// `‖z̃‖` per record.
    pub z_err_norm: Vec<f64>,
    pub sup_norm: f64,
    pub initial_norm: f64,
    pub terminal_norm: f64,
    /// Exponential rate fitted to `ln ‖z̃‖` over the decaying transient, 1/min
    /// (positive = decay); zero when there is nothing to fit.
    pub fitted_decay_rate: f64,
    /// Time averages of true and estimated crossover flux over the final
    /// quarter of the run, and their relative mismatch.
    pub flux_avg_true: f64,
    pub flux_avg_est: f64,
    pub flux_rel_err: f64,
}

/// Aligns the truth trajectory onto the trace times (linear interpolation)
/// and computes the error metrics.
pub fn error_metrics(truth: &Trajectory, trace: &ObserverTrace) -> Result<ErrorMetrics, ObserverError> {
    if truth.is_empty() || trace.records.is_empty() {
        return Err(ObserverError::Alignment("empty truth or trace".into()));
    }
    if trace.start_time() < truth.start_time() - 1e-9
        || trace.end_time() > truth.end_time() + 1e-9
    {
        return Err(ObserverError::Alignment(format!(
            "trace range [{}, {}] not covered by truth range [{}, {}]",
            trace.start_time(),
            trace.end_time(),
            truth.start_time(),
            truth.end_time()
        )));
    }

    let mut times = Vec::with_capacity(trace.records.len());
    let mut err_soc = Vec::with_capacity(trace.records.len());
    let mut err_soc_cell = Vec::with_capacity(trace.records.len());
    let mut z_err_norm = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        let z = truth.interp_state(r.time).ok_or_else(|| {
            ObserverError::Alignment(format!("no truth sample covers t = {}", r.time))
        })?;
        let e0 = z.soc - r.x_hat[0];
        let e1 = z.soc_cell - r.x_hat[1];
        times.push(r.time);
        err_soc.push(e0);
        err_soc_cell.push(e1);
        z_err_norm.push(e0.hypot(e1));
    }
    let sup_norm = z_err_norm.iter().cloned().fold(0.0, f64::max);
    let initial_norm = z_err_norm[0];
    let terminal_norm = *z_err_norm.last().unwrap();

    // Fit ln ‖z̃‖ over the transient: from the start until the error first
    // sinks to twice its terminal level (at least two points).
    let threshold = (2.0 * terminal_norm).max(1e-300);
    let mut fit_end = z_err_norm
        .iter()
        .position(|&e| e <= threshold)
        .unwrap_or(z_err_norm.len());
    fit_end = fit_end.max(2).min(z_err_norm.len());
    let fitted_decay_rate = fit_log_slope(&times[..fit_end], &z_err_norm[..fit_end])
        .map_or(0.0, |slope| -slope);

    // Flux agreement over the final quarter.
    let t_start = trace.end_time() - 0.25 * (trace.end_time() - trace.start_time());
    let mut sum_true = 0.0;
    let mut sum_est = 0.0;
    let mut count = 0usize;
    for r in &trace.records {
        if r.time >= t_start {
            let qx = truth.interp_flux(r.time).ok_or_else(|| {
                ObserverError::Alignment(format!("no truth flux covers t = {}", r.time))
            })?;
            sum_true += qx;
            sum_est += r.qx_hat;
            count += 1;
        }
    }
    let flux_avg_true = sum_true / count.max(1) as f64;
    let flux_avg_est = sum_est / count.max(1) as f64;
    let flux_rel_err = if flux_avg_true.abs() > 0.0 {
        (flux_avg_est - flux_avg_true).abs() / flux_avg_true.abs()
    } else {
        flux_avg_est.abs()
    };

    Ok(ErrorMetrics {
        times,
        err_soc,
        err_soc_cell,
        z_err_norm,
        sup_norm,
        initial_norm,
        terminal_norm,
        fitted_decay_rate,
        flux_avg_true,
        flux_avg_est,
        flux_rel_err,
    })
}

/// Least-squares slope of `ln(values)` against time; `None` when fewer than
/// two positive values exist.
fn fit_log_slope(times: &[f64], values: &[f64]) -> Option<f64> {
    let (mut st, mut sy, mut stt, mut sty, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &v) in times.iter().zip(values) {
        if v <= 0.0 {
            continue;
        }
        let y = v.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        n += 1.0;
    }
    if n < 2.0 {
        return None;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sty - st * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{simulate_parametric, AugmentedState};
    use crate::battery::{nernst_voltage, BatteryState, PhysicalConstants, TrajectorySample};
    use approx::assert_relative_eq;

    fn table_params() -> BatteryParams {
        BatteryParams {
            v_res: 0.0176,
            v_cell: 0.0006985,
            c0: 0.1,
            epsilon: 0.87,
            e0_cell: 2.2,
            r_ohm: 0.0,
            constants: PhysicalConstants::default(),
        }
    }

    fn paper_cfg() -> CrossoverModelConfig {
        CrossoverModelConfig {
            order_l: 3,
            lambda: vec![0.5, 0.025],
            varrho: 1e-4,
        }
    }

    fn test_config(gain: DVector<f64>) -> ObserverConfig {
        ObserverConfig {
            params: table_params(),
            cfg: paper_cfg(),
            gain_factor: gain,
            x_hat0: AugmentedState::new(BatteryState::new(0.87, 0.85), DVector::zeros(3)),
            dt: 0.01,
            flow_range: None,
        }
    }

    #[test]
    fn zero_innovation_matches_open_loop() {
        let oc = test_config(DVector::from_vec(vec![3.0, -2.0, 1.0, 0.5, 0.25]));
        let x = DVector::from_vec(vec![0.9, 0.8, 1e-9, 0.0, 0.0]);
        let u = PlantInputs {
            current: 0.0,
            flow_rate: 0.009,
        };
        let with_gain = observer_derivative(&x, x[1], &u, &oc).unwrap();
        let open_loop = {
            let oc0 = test_config(DVector::zeros(5));
            observer_derivative(&x, x[1], &u, &oc0).unwrap()
        };
        assert_eq!(with_gain, open_loop, "gain term must vanish exactly");
    }

    #[test]
    fn matched_estimate_reproduces_plant_derivative() {
        // With the estimate equal to the true augmented state, the observer
        // vector field equals the exact parametric plant vector field.
        let oc = test_config(DVector::from_vec(vec![3.0, -2.0, 1.0, 0.5, 0.25]));
        let x = DVector::from_vec(vec![0.95, 0.91, 5e-9, 1e-10, 0.0]);
        let u = PlantInputs {
            current: 0.02,
            flow_rate: 0.009,
        };
        let d_obs = observer_derivative(&x, x[1], &u, &oc).unwrap();
        let m = build_augmented(psi(x[1]), u.flow_rate, &oc.params, &oc.cfg).unwrap();
        let d_plant = &m.a_e * &x + &m.b_e * u.current;
        assert!((d_obs - d_plant).norm() < 1e-15);
    }

    #[test]
    fn equilibrium_estimate_is_fixed_point() {
        let oc = test_config(DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0, 1.0]));
        // Equal states, zero chain, zero current: the model derivative is
        // zero and the held measurement matches the estimate.
        let x0 = DVector::from_vec(vec![0.7, 0.7, 0.0, 0.0, 0.0]);
        let v = nernst_voltage(0.7, 0.0, &oc.params).unwrap().volts;
        let sample = MeasurementSample {
            time: 0.0,
            v_out: v,
            current: 0.0,
            flow_rate: 0.009,
        };
        let x1 = step(&x0, &sample, 5.0, &oc).unwrap();
        assert!((x1 - &x0).norm() < 1e-12);
    }

    #[test]
    fn zero_span_step_is_identity() {
        let oc = test_config(DVector::zeros(5));
        let x0 = DVector::from_vec(vec![0.7, 0.6, 0.0, 0.0, 0.0]);
        let sample = MeasurementSample {
            time: 1.0,
            v_out: 2.2,
            current: 0.0,
            flow_rate: 0.009,
        };
        let x1 = step(&x0, &sample, 1.0, &oc).unwrap();
        assert_eq!(x0, x1);
    }

    #[test]
    fn step_halving_converges_at_fourth_order() {
        let oc_coarse = ObserverConfig {
            dt: 0.2,
            ..test_config(DVector::from_vec(vec![2.0, 1.0, 1e-4, 0.0, 0.0]))
        };
        let oc_mid = ObserverConfig {
            dt: 0.1,
            ..oc_coarse.clone()
        };
        let oc_fine = ObserverConfig {
            dt: 0.05,
            ..oc_coarse.clone()
        };
        let x0 = DVector::from_vec(vec![0.9, 0.6, 0.0, 0.0, 0.0]);
        let sample = MeasurementSample {
            time: 0.0,
            v_out: 2.25,
            current: 0.0,
            flow_rate: 0.009,
        };
        let horizon = 2.0;
        let a = step(&x0, &sample, horizon, &oc_coarse).unwrap();
        let b = step(&x0, &sample, horizon, &oc_mid).unwrap();
        let c = step(&x0, &sample, horizon, &oc_fine).unwrap();
        let e1 = (a - &b).norm();
        let e2 = (b - &c).norm();
        assert!(e2 > 0.0);
        let order = (e1 / e2).log2();
        assert!(order >= 3.5, "observed step order {order}");
    }

    #[test]
    fn run_rejects_unordered_and_short_streams() {
        let oc = test_config(DVector::zeros(5));
        let mk = |t: f64| MeasurementSample {
            time: t,
            v_out: 2.2,
            current: 0.0,
            flow_rate: 0.009,
        };
        let err = run(&oc, &[mk(0.0)]).unwrap_err();
        assert!(matches!(err, ObserverError::BadStream { .. }));
        let err = run(&oc, &[mk(0.0), mk(2.0), mk(1.0)]).unwrap_err();
        match err {
            ObserverError::BadStream { index, .. } => assert_eq!(index, 2),
            other => panic!("expected BadStream, got {other:?}"),
        }
    }

    #[test]
    fn run_flags_out_of_range_flow() {
        let mut oc = test_config(DVector::zeros(5));
        oc.flow_range = Some((0.00225, 0.018));
        let mk = |t: f64, q: f64| MeasurementSample {
            time: t,
            v_out: 2.2,
            current: 0.0,
            flow_rate: q,
        };
        let trace = run(&oc, &[mk(0.0, 0.009), mk(1.0, 0.05), mk(2.0, 0.009)]).unwrap();
        assert_eq!(trace.flow_warnings, vec![1]);
    }

    #[test]
    fn self_consistent_stream_keeps_innovation_small() {
        // Generate measurements from the exact parametric plant starting at
        // the observer's own initial estimate; innovations stay at the
        // integration-noise level.
        let p = table_params();
        let cfg = paper_cfg();
        let x0 = AugmentedState::new(BatteryState::new(0.87, 0.87), DVector::zeros(3));
        let truth = simulate_parametric(
            &p,
            &cfg,
            &x0,
            |_| PlantInputs {
                current: 0.0,
                flow_rate: 0.009,
            },
            20.0,
            0.01,
        )
        .unwrap();
        let stream: Vec<MeasurementSample> = truth
            .samples
            .iter()
            .step_by(10)
            .map(|s| MeasurementSample {
                time: s.time,
                v_out: s.v_out,
                current: 0.0,
                flow_rate: 0.009,
            })
            .collect();
        let oc = ObserverConfig {
            x_hat0: x0,
            ..test_config(DVector::from_vec(vec![2.0, 1.0, 1e-4, 0.0, 0.0]))
        };
        let trace = run(&oc, &stream).unwrap();
        let sup_innov = trace
            .records
            .iter()
            .map(|r| r.y_tilde.abs())
            .fold(0.0, f64::max);
        assert!(sup_innov < 1e-7, "sup innovation {sup_innov}");
    }

    #[test]
    fn error_metrics_zero_for_identical_series() {
        let p = table_params();
        let times = [0.0, 1.0, 2.0, 3.0];
        let truth = Trajectory {
            samples: times
                .iter()
                .map(|&t| TrajectorySample {
                    time: t,
                    state: BatteryState::new(0.9, 0.8),
                    crossover_flux: 1e-9,
                    v_out: nernst_voltage(0.8, 0.0, &p).unwrap().volts,
                    v_clamped: false,
                })
                .collect(),
        };
        let trace = ObserverTrace {
            records: times
                .iter()
                .map(|&t| TraceRecord {
                    time: t,
                    x_hat: DVector::from_vec(vec![0.9, 0.8, 1e-9, 0.0, 0.0]),
                    y_hat: 0.8,
                    y_tilde: 0.0,
                    h_t: DVector::zeros(5),
                    qx_hat: 1e-9,
                })
                .collect(),
            gamma_t_estimate: 0.0,
            flow_warnings: vec![],
        };
        let m = error_metrics(&truth, &trace).unwrap();
        assert_eq!(m.sup_norm, 0.0);
        assert_eq!(m.terminal_norm, 0.0);
        assert_eq!(m.fitted_decay_rate, 0.0);
        assert_eq!(m.flux_rel_err, 0.0);
    }

    #[test]
    fn error_metrics_recovers_constructed_decay_rate() {
        // Truth constant, estimate decaying toward it as 2^{-t}.
        let p = table_params();
        let n = 200;
        let truth = Trajectory {
            samples: (0..=n)
                .map(|k| TrajectorySample {
                    time: k as f64 * 0.1,
                    state: BatteryState::new(0.9, 0.9),
                    crossover_flux: 0.0,
                    v_out: nernst_voltage(0.9, 0.0, &p).unwrap().volts,
                    v_clamped: false,
                })
                .collect(),
        };
        let trace = ObserverTrace {
            records: (0..=n)
                .map(|k| {
                    let t = k as f64 * 0.1;
                    let e = 0.1 * 2f64.powf(-t);
                    TraceRecord {
                        time: t,
                        x_hat: DVector::from_vec(vec![0.9 - e, 0.9, 0.0, 0.0, 0.0]),
                        y_hat: 0.9,
                        y_tilde: 0.0,
                        h_t: DVector::zeros(5),
                        qx_hat: 0.0,
                    }
                })
                .collect(),
            gamma_t_estimate: 0.0,
            flow_warnings: vec![],
        };
        let m = error_metrics(&truth, &trace).unwrap();
        assert_relative_eq!(m.fitted_decay_rate, 2f64.ln(), max_relative = 0.02);
    }

    #[test]
    fn error_metrics_rejects_disjoint_ranges() {
        let p = table_params();
        let truth = Trajectory {
            samples: vec![TrajectorySample {
                time: 10.0,
                state: BatteryState::new(0.9, 0.8),
                crossover_flux: 0.0,
                v_out: nernst_voltage(0.8, 0.0, &p).unwrap().volts,
                v_clamped: false,
            }],
        };
        let trace = ObserverTrace {
            records: vec![TraceRecord {
                time: 0.0,
                x_hat: DVector::zeros(5),
                y_hat: 0.0,
                y_tilde: 0.0,
                h_t: DVector::zeros(5),
                qx_hat: 0.0,
            }],
            gamma_t_estimate: 0.0,
            flow_warnings: vec![],
        };
        assert!(matches!(
            error_metrics(&truth, &trace),
            Err(ObserverError::Alignment(_))
        ));
    }
}
