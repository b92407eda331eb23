//! Sequential vs data-parallel throughput on the two batch-style workloads:
//! certificate verification over a flow grid, and independent observer runs.

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

use flowobs_core::augment::{simulate_parametric, AugmentedState, CrossoverModelConfig};
use flowobs_core::batch;
use flowobs_core::battery::{BatteryParams, BatteryState, PhysicalConstants, PlantInputs};
use flowobs_core::observer::{run, MeasurementSample, ObserverConfig};
use flowobs_core::synth::{check_at_flow, synthesize, SynthesisConfig, SynthesisResult};

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

fn paper_config() -> SynthesisConfig {
    SynthesisConfig {
        beta: 1e-4,
        kappa_z: 0.01,
        q_min: 0.00225,
        q_max: 0.018,
        feas_margin: 1e-6,
        cfg: CrossoverModelConfig {
            order_l: 3,
            lambda: vec![0.5, 0.025],
            varrho: 1e-4,
        },
        params: table_params(),
    }
}

fn flow_grid(config: &SynthesisConfig, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| config.q_min + (config.q_max - config.q_min) * i as f64 / (n - 1) as f64)
        .collect()
}

fn bench_flow_grid(c: &mut Criterion) {
    let config = paper_config();
    let result = synthesize(&config).expect("paper configuration is feasible");
    let qs = flow_grid(&config, 512);
    let mut group = c.benchmark_group("flow_grid_checks");
    group.sample_size(10);
    group.bench_function("seq", |b| {
        b.iter(|| run_checks_seq(&result, &config, &qs));
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| run_checks_par(&result, &config, &qs));
    });
    group.finish();
}

fn run_checks_seq(result: &SynthesisResult, config: &SynthesisConfig, qs: &[f64]) -> f64 {
    batch::map_seq(qs, |&q| check_at_flow(result, config, q).unwrap().block_margin)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(feature = "parallel")]
fn run_checks_par(result: &SynthesisResult, config: &SynthesisConfig, qs: &[f64]) -> f64 {
    batch::map_par(qs, |&q| check_at_flow(result, config, q).unwrap().block_margin)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn bench_observer_batch(c: &mut Criterion) {
    let config = paper_config();
    let result = synthesize(&config).expect("paper configuration is feasible");
    let p = table_params();
    let cfg = config.cfg.clone();

    // One shared synthetic stream, many independent initial estimates.
    let truth = simulate_parametric(
        &p,
        &cfg,
        &AugmentedState::new(
            BatteryState::new(1.0, 1.0),
            DVector::from_vec(vec![5.6142e-9, 0.0, 0.0]),
        ),
        |_| PlantInputs {
            current: 0.0,
            flow_rate: 0.009,
        },
        30.0,
        0.01,
    )
    .unwrap();
    let stream: Vec<MeasurementSample> = truth
        .samples
        .iter()
        .step_by(100)
        .map(|s| MeasurementSample {
            time: s.time,
            v_out: s.v_out,
            current: 0.0,
            flow_rate: 0.009,
        })
        .collect();
    let configs: Vec<ObserverConfig> = (0..16)
        .map(|i| ObserverConfig {
            params: p,
            cfg: cfg.clone(),
            gain_factor: result.gain_factor.clone(),
            x_hat0: AugmentedState::new(
                BatteryState::new(0.80 + 0.01 * i as f64, 0.78 + 0.01 * i as f64),
                DVector::zeros(3),
            ),
            dt: 0.01,
            flow_range: None,
        })
        .collect();

    let mut group = c.benchmark_group("observer_batch");
    group.sample_size(10);
    group.bench_function("seq", |b| {
        b.iter(|| {
            batch::map_seq(&configs, |oc| run(oc, &stream).unwrap().records.len())
                .into_iter()
                .sum::<usize>()
        });
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| {
            batch::map_par(&configs, |oc| run(oc, &stream).unwrap().records.len())
                .into_iter()
                .sum::<usize>()
        });
    });
    group.finish();
}

criterion_group!(benches, bench_flow_grid, bench_observer_batch);
criterion_main!(benches);
