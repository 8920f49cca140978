//! Sequential against data-parallel execution for the hot loops: matrix
//! assembly, the kernel SVD and kernel application.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lark_core::basis::BasisSpec;
use lark_core::forward::{build_projection_matrix_with, ScanGeometry};
use lark_core::grid::{make_grid, GridSpec};
use lark_core::kernel::filter::FilterSpec;
use lark_core::kernel::mollifier::{Mollifier, MollifierMode};
use lark_core::kernel::symmetry::{compute_block_lark_with, symmetric_svd_with};
use lark_core::kernel::lark::KernelOperator;
use lark_core::phantom::{phantom_sinogram, Lattice, Phantom, SheppLoganContrast};
use lark_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn setup() -> (ScanGeometry, lark_core::grid::InterpolationGrid, Lattice) {
    let geom = ScanGeometry::new(30f64.to_radians(), 40, 41).unwrap();
    let grid = make_grid(
        &GridSpec::Circular {
            n_rings: 10,
            spacing: 0.1,
            counts: None,
        },
        BasisSpec::wendland(0.15, 3),
    )
    .unwrap();
    (geom, grid, Lattice::pixel_centers(31))
}

fn assembly(c: &mut Criterion) {
    let (geom, grid, _) = setup();
    let mut group = c.benchmark_group("projection_matrix");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| build_projection_matrix_with(&geom, &grid, exec).unwrap())
        });
    }
    group.finish();
}

fn decomposition(c: &mut Criterion) {
    let (geom, grid, _) = setup();
    let mut group = c.benchmark_group("symmetric_svd");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| symmetric_svd_with(&geom, &grid, exec).unwrap())
        });
    }
    group.finish();
}

fn application(c: &mut Criterion) {
    let (geom, grid, lattice) = setup();
    let svd = symmetric_svd_with(&geom, &grid, Exec::default()).unwrap();
    let moll = Mollifier::new(&grid, 1.0 / 31.0f64.powi(2), MollifierMode::Point).unwrap();
    let filter = FilterSpec::Arctan { tau: 1e-2 * svd.sigma()[0] };
    let k = compute_block_lark_with(&svd, &moll, &lattice, &filter, Exec::default()).unwrap();
    let g = phantom_sinogram(&Phantom::shepp_logan(SheppLoganContrast::Original), &geom);
    let mut group = c.benchmark_group("kernel_apply");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| k.apply_transpose(&g.values, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, decomposition, application);
criterion_main!(benches);
