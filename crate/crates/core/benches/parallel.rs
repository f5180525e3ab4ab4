use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ricci_tube::certificates::{pipeline_constants, CertificateOptions};
use ricci_tube::problem::{tightest_envelope, Mode, ProblemData, SmoothProfile};
use ricci_tube::solver::{
    apply_c, background, verify_with, Grid, MetricSolution, PathPair, Provenance, VerifyOptions,
};
use ricci_tube::structure::{compute_constants, tables, HomogeneousStructure};
use ricci_tube::Execution;

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn problem(s: HomogeneousStructure, sigma: f64) -> ProblemData {
    let n = s.n();
    let phi = (0..n)
        .map(|i| SmoothProfile::Polynomial(vec![4.0 + i as f64, 0.3, -0.2]))
        .collect();
    ProblemData::new(s, sigma, phi, vec![1.0; n], vec![1.0001; n], false).unwrap()
}

fn lipschitz(c: &mut Criterion) {
    let s = compute_constants(&tables::su3_flag()).unwrap().structure;
    let p = problem(s.clone(), 0.01);
    let env = tightest_envelope(&p, 1.0).unwrap();
    let mut group = c.benchmark_group("pipeline_constants");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let mut opts = CertificateOptions::default();
        opts.sampling.execution = exec;
        group.bench_function(BenchmarkId::new("su3_flag", name), |b| {
            b.iter(|| {
                let c = pipeline_constants(black_box(&s), &env, Mode::Standard, &opts).unwrap();
                assert!(c.empty_box.is_none());
                c
            })
        });
    }
    group.finish();
}

fn fixed_point_map(c: &mut Criterion) {
    let s = compute_constants(&tables::su3_flag()).unwrap().structure;
    let p = problem(s, 0.01);
    let g = Grid::new(20_001, p.sigma).unwrap();
    let bg = background(&p, &g).unwrap();
    let zero = PathPair::zeros(p.n(), g.len());
    let mut group = c.benchmark_group("apply_c");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::new("su3_flag_20001", name), |b| {
            b.iter(|| apply_c(black_box(&zero), &bg, &p, exec).unwrap())
        });
    }
    group.finish();
}

fn verifier(c: &mut Criterion) {
    let s = compute_constants(&tables::su3_flag()).unwrap().structure;
    let p = problem(s, 0.01);
    let g = Grid::new(20_001, p.sigma).unwrap();
    let bg = background(&p, &g).unwrap();
    let sol = MetricSolution {
        n: bg.n,
        r: g.nodes(),
        f: bg.f.clone(),
        fp: bg.fp.clone(),
        h: bg.h.clone(),
        hp: bg.hp.clone(),
        provenance: Provenance::External,
    };
    let mut group = c.benchmark_group("verify");
    for (name, exec) in POLICIES {
        let opts = VerifyOptions {
            convergence: true,
            execution: exec,
        };
        group.bench_function(BenchmarkId::new("su3_flag_20001", name), |b| {
            b.iter(|| verify_with(black_box(&sol), &p, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, lipschitz, fixed_point_map, verifier);
criterion_main!(benches);
