use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levywave::analysis::{run_ensemble, EnsembleSettings};
use levywave::dynamics::CoefficientPair;
use levywave::ensemble::Execution;
use levywave::noise::LevyModel;
use levywave::solver::{SimulateOptions, SolverConfig};
use levywave::spectral::{GalerkinState, SpectralDomain, TransformKind};

fn ensembles(c: &mut Criterion) {
    let domain = SpectralDomain::new(std::f64::consts::PI, 16).unwrap();
    let model = LevyModel::uniform_band(0.0, 17.0 / 15.0, 0.75, true).unwrap();
    let coeff = CoefficientPair::linear(0.1f64.sqrt(), 0.1f64.sqrt());
    let config = SolverConfig::new(0.05, 20.0, 2.0, 0.5).unwrap();
    let initial = GalerkinState::from_leading_modes(16, &[1.0], &[]).unwrap();

    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for execution in [Execution::Sequential, Execution::Parallel] {
        let settings = EnsembleSettings {
            n_paths: 500,
            execution,
            ..EnsembleSettings::default()
        };
        group.bench_function(BenchmarkId::from_parameter(format!("{execution:?}")), |b| {
            b.iter(|| {
                run_ensemble(
                    &initial,
                    &settings,
                    &config,
                    &coeff,
                    &model,
                    &domain,
                    SimulateOptions::default(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("sine_transform");
    for modes in [64, 256, 1024] {
        let coeffs: Vec<f64> = (0..modes).map(|k| 1.0 / (1 + k) as f64).collect();
        for kind in [TransformKind::Direct, TransformKind::Fast] {
            let domain = SpectralDomain::with_transform(1.0, modes, 2 * modes, kind).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{kind:?}"), modes), &coeffs, |b, c| {
                b.iter(|| {
                    domain
                        .from_physical(&domain.to_physical(black_box(c)).unwrap())
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ensembles, transforms);
criterion_main!(benches);
