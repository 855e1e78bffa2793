use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reassembly::evaluation::shapes::cube_surface;
use reassembly::evaluation::{generate_fracture, CutPlane, FractureParams};
use reassembly::graph::build_graph;
use reassembly::parallel;
use reassembly::pipeline::{assemble, segment_fragment, PipelineConfig};
use reassembly::{Point3, PointCloud, Vec3};

fn cube(n: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    PointCloud::new(cube_surface(n, 1.0, &mut rng).points).unwrap()
}

/// Runs `f` once through rayon and once forced onto one thread.
fn both<F: Fn()>(c: &mut Criterion, group: &str, size: usize, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", size), |b| b.iter(&f));
    g.bench_function(BenchmarkId::new("sequential", size), |b| b.iter(|| parallel::sequential(&f)));
    g.finish();
}

fn graph(c: &mut Criterion) {
    let cloud = cube(20_000);
    both(c, "build_graph", cloud.len(), || {
        black_box(build_graph(&cloud, 15, 2.0).unwrap());
    });
}

fn segmentation(c: &mut Criterion) {
    let cloud = cube(20_000);
    let config = PipelineConfig::default();
    both(c, "segment_fragment", cloud.len(), || {
        black_box(segment_fragment(&cloud, &config).unwrap());
    });
}

fn assembly(c: &mut Criterion) {
    let source = cube(10_000);
    let cut = CutPlane {
        point: Point3::new(0.1, -0.05, 0.0),
        normal: Vec3::new(0.8, 0.5, 0.3),
    };
    let f = generate_fracture(&source, &FractureParams::new(cut, 2)).unwrap();
    let config = PipelineConfig::default();
    both(c, "assemble", source.len(), || {
        black_box(assemble(&f.fragment_a, &f.fragment_b, &config).unwrap());
    });
}

criterion_group!(benches, graph, segmentation, assembly);
criterion_main!(benches);
