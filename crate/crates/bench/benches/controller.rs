//! Controller step latency on the two-trailer vehicle, straight reversing
//! path, from a joint-angle perturbation. The first case keeps the cached
//! KKT factorization warm (the steady-state cost of a straight path); the
//! second forces a cold controller every iteration.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use msnt_core::controller::ControllerConfig;
use msnt_core::nalgebra::DVector;
use msnt_core::{MpcController, Path, Vehicle};

fn setup() -> (Vehicle, Path, DVector<f64>, DVector<f64>) {
    let vehicle = Vehicle::demo_two_trailer(true);
    let path = Path::straight(&vehicle, 200.0, -1.0, 0.2).unwrap();
    let p0 = path.sample_at(5.0);
    let state = DVector::from_vec(vec![p0.x, p0.y, p0.theta, 0.6, -0.6]);
    let u_prev = DVector::zeros(vehicle.n_controls());
    (vehicle, path, state, u_prev)
}

fn bench_mpc_step(c: &mut Criterion) {
    let (vehicle, path, state, u_prev) = setup();

    c.bench_function("mpc_step_warm", |b| {
        let cfg = ControllerConfig::default_for(&vehicle);
        let mut ctrl = MpcController::new(vehicle.clone(), cfg, -1.0).unwrap();
        // Prime the factorization cache and warm start.
        ctrl.step(&state, &path, 4.0, &u_prev).unwrap();
        b.iter(|| ctrl.step(&state, &path, 4.0, &u_prev).unwrap());
    });

    c.bench_function("mpc_step_cold", |b| {
        let cfg = ControllerConfig::default_for(&vehicle);
        b.iter_batched(
            || MpcController::new(vehicle.clone(), cfg.clone(), -1.0).unwrap(),
            |mut ctrl| ctrl.step(&state, &path, 4.0, &u_prev).unwrap(),
            BatchSize::SmallInput,
        );
    });
}

criterion_group!(benches, bench_mpc_step);
criterion_main!(benches);
