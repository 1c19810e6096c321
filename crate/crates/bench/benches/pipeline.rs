use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hardattn_core::compiler::encode_input;
use hardattn_core::harness::evaluate_words;
use hardattn_core::lang::enumerate_strings;
use hardattn_core::zoo;
use hardattn_core::{compile, normalize, CompileOptions, GuhatModel, NormalizeOptions};

fn palindromes() -> GuhatModel {
    zoo::registry("palindromes")
        .unwrap()
        .build()
        .unwrap()
        .as_guhat()
        .unwrap()
}

fn normalize_bench(c: &mut Criterion) {
    let model = palindromes();
    let mut group = c.benchmark_group("normalize");
    for n in [4, 6, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| normalize(black_box(&model), n, &NormalizeOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn compile_bench(c: &mut Criterion) {
    let model = palindromes();
    let mut group = c.benchmark_group("compile");
    group.sample_size(10);
    for n in [4, 6, 8] {
        let nf = normalize(&model, n, &NormalizeOptions::default()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &nf, |b, nf| {
            b.iter(|| compile(black_box(nf), &CompileOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn evaluate_bench(c: &mut Criterion) {
    let model = palindromes();
    let nf = normalize(&model, 7, &NormalizeOptions::default()).unwrap();
    let circuit = compile(&nf, &CompileOptions::default()).unwrap().circuit;
    let words: Vec<String> = enumerate_strings(model.alphabet(), 6)
        .into_iter()
        .filter(|w| w.len() == 6)
        .collect();
    let bits = encode_input(&nf, &words[0]).unwrap();

    c.bench_function("evaluate/single", |b| {
        b.iter(|| circuit.evaluate(black_box(&bits)).unwrap())
    });
    c.bench_function("evaluate/all-729", |b| {
        b.iter(|| evaluate_words(&circuit, |w| encode_input(&nf, w), black_box(&words)).unwrap())
    });
}

criterion_group!(benches, normalize_bench, compile_bench, evaluate_bench);
criterion_main!(benches);
