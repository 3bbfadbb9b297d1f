use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use stancegen::model::AdversarialLink;
use stancegen::nn::{lstm_step, Dropout, LstmParams, LstmState, ParamGroup, ParamStore};
use stancegen::tensor::{Tape, Tensor};
use stancegen::train::{objective, Hyperparams, Trainer};
use stancegen::{Rng, Variant};
use stancegen_bench::{fixture, EMBED_DIM, HIDDEN_DIM};

fn lstm(c: &mut Criterion) {
    let mut store = ParamStore::<f32>::new();
    let p = LstmParams::register(
        &mut store,
        "lstm",
        EMBED_DIM,
        HIDDEN_DIM,
        ParamGroup::Stance,
        &mut Rng::seed_from_u64(0),
    );
    c.bench_function("lstm_step forward+backward", |b| {
        b.iter(|| {
            let mut t = Tape::new();
            let bound = store.bind(&mut t);
            let x = t.constant(Tensor::vector(vec![0.1f32; EMBED_DIM]));
            let s = LstmState::zeros(&mut t, HIDDEN_DIM);
            let next = lstm_step(&mut t, &bound, &p, x, s).unwrap();
            let root = t.sum(next.h);
            t.backward(root).unwrap()
        })
    });
}

fn model(c: &mut Criterion) {
    let mut g = c.benchmark_group("example forward+backward");
    g.sample_size(20);
    for v in Variant::ALL {
        let f = fixture::<f32>(v, EMBED_DIM, HIDDEN_DIM);
        let ex = &f.examples[0];
        g.bench_function(v.name(), |b| {
            b.iter(|| {
                let mut t = Tape::with_capacity(4096);
                let bound = f.model.params().bind(&mut t);
                let graph = f
                    .model
                    .forward_graph(
                        &mut t,
                        &bound,
                        ex,
                        &mut Dropout::eval(),
                        AdversarialLink::Reversed,
                    )
                    .unwrap();
                let obj = objective(&mut t, &graph, ex.stance, ex.domain, 0.1).unwrap();
                t.backward(obj.root).unwrap()
            })
        });
    }
    g.finish();
}

fn epoch(c: &mut Criterion) {
    let f = fixture::<f32>(Variant::BcaInvar, 32, 32);
    let hp = Hyperparams {
        embed_dim: 32,
        hidden_dim: 32,
        ..Default::default()
    };
    let mut g = c.benchmark_group("training");
    g.sample_size(10);
    g.bench_function("BCA-Invar epoch, 32 examples, dims 32", |b| {
        b.iter_batched(
            || f.model.clone(),
            |mut m| {
                let mut t = Trainer::new(&mut m, &f.examples, &hp).unwrap();
                t.run_epoch(&mut |_, _| {}).unwrap()
            },
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, lstm, model, epoch);
criterion_main!(benches);
