use std::hint::black_box;

use covtune::{select, Family, RngStream, SelectionRule};
use covtune_bench::{ar1_data, ar1_sigma, spec};
use criterion::{criterion_group, criterion_main, Criterion};

fn rules(c: &mut Criterion) {
    let mut group = c.benchmark_group("select");
    group.sample_size(10);
    let data = ar1_data(100, 50, 5);
    let truth = ar1_sigma(50);
    let band = spec(Family::Band, &data);
    for name in [
        "oracle:op",
        "CV10",
        "CV10:op",
        "reCV3:op",
        "RCV2",
        "SURE",
        "boot",
        "boot:op",
    ] {
        let rule = SelectionRule::parse(name, 100).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| select(&rule, &band, black_box(&data), Some(&truth), &RngStream::new(1, 0)).unwrap())
        });
    }
    let hard = spec(Family::Hard, &data);
    let rule = SelectionRule::parse("CV2:op", 0).unwrap();
    group.bench_function("hard CV2:op", |b| {
        b.iter(|| select(&rule, &hard, black_box(&data), None, &RngStream::new(1, 0)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, rules);
criterion_main!(benches);
