use std::collections::BTreeSet;

use dblplink_core::embed::{filtered_hits_at_k, grad_check, score, train_embeddings, EmbedTrainConfig, LossPoint};
use dblplink_core::synth::toy_kg;
use dblplink_core::EmbeddingKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn oracle_transe(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    -h.iter().zip(r).zip(t).map(|((h, r), t)| (h + r - t).powi(2)).sum::<f64>().sqrt()
}

fn oracle_distmult(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    h.iter().zip(r).zip(t).map(|((h, r), t)| h * r * t).sum()
}

/// Re(sum h * r * conj(t)) with explicit complex products.
fn oracle_complex(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let n = h.len() / 2;
    (0..n)
        .map(|i| {
            let (hr, hi, rr, ri, tr, ti) = (h[i], h[n + i], r[i], r[n + i], t[i], t[n + i]);
            let (pr, pi) = (hr * rr - hi * ri, hr * ri + hi * rr);
            pr * tr + pi * ti
        })
        .sum()
}

#[test]
fn scores_match_reference_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let dim = 2 * rng.random_range(1..32);
        let (h, r, t) = (vector(&mut rng, dim), vector(&mut rng, dim), vector(&mut rng, dim));
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
        assert!(close(score(EmbeddingKind::TransE, &h, &r, &t).unwrap(), oracle_transe(&h, &r, &t)));
        assert!(close(score(EmbeddingKind::DistMult, &h, &r, &t).unwrap(), oracle_distmult(&h, &r, &t)));
        assert!(close(score(EmbeddingKind::ComplEx, &h, &r, &t).unwrap(), oracle_complex(&h, &r, &t)));
    }
}

#[test]
fn scoring_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let dim = 2 * rng.random_range(1..32);
        let (h, r, t) = (vector(&mut rng, dim), vector(&mut rng, dim), vector(&mut rng, dim));

        let dm = |a: &[f64], b: &[f64]| score(EmbeddingKind::DistMult, a, &r, b).unwrap();
        assert_eq!(dm(&h, &t), dm(&t, &h));

        let half = dim / 2;
        let real = |v: &[f64]| -> Vec<f64> { v[..half].iter().copied().chain(std::iter::repeat_n(0.0, half)).collect() };
        let (hr, rr, tr) = (real(&h), real(&r), real(&t));
        let cx = score(EmbeddingKind::ComplEx, &hr, &rr, &tr).unwrap();
        let reduced = score(EmbeddingKind::DistMult, &h[..half], &r[..half], &t[..half]).unwrap();
        assert!((cx - reduced).abs() <= 1e-12, "{cx} vs {reduced}");

        let forward = score(EmbeddingKind::ComplEx, &h, &rr, &t).unwrap();
        let backward = score(EmbeddingKind::ComplEx, &t, &rr, &h).unwrap();
        assert!((forward - backward).abs() <= 1e-12);

        assert!(score(EmbeddingKind::TransE, &h, &r, &t).unwrap() <= 0.0);
        let exact: Vec<f64> = h.iter().zip(&r).map(|(a, b)| a + b).collect();
        assert_eq!(score(EmbeddingKind::TransE, &h, &r, &exact).unwrap(), 0.0);
        if exact != t {
            assert!(score(EmbeddingKind::TransE, &h, &r, &t).unwrap() < 0.0);
        }
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for kind in EmbeddingKind::ALL {
        let worst = (0..100)
            .map(|seed| grad_check(kind, &LossPoint::random(kind, 16, 1000 + seed), 1e-5).unwrap())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "{kind}: {worst}");
    }
}

fn hits_at_1(kind: EmbeddingKind, seed: u64) -> (f64, Vec<f64>) {
    let triples = toy_kg(17);
    let cfg = EmbedTrainConfig { epochs: 200, dim: 32, seed, ..EmbedTrainConfig::default() };
    let out = train_embeddings(&triples, &cfg, kind).unwrap();
    let test: Vec<(String, String, String)> = triples
        .iter()
        .map(|t| (t.subject.clone(), t.predicate.clone(), t.object_iri().unwrap().to_string()))
        .collect();
    let known: BTreeSet<_> = test.iter().cloned().collect();
    (filtered_hits_at_k(&out.embeddings, &test, &known, 1), out.epoch_losses)
}

#[test]
fn toy_graph_link_prediction() {
    let triples = toy_kg(17);
    assert_eq!(triples.len(), 200);
    let entities: BTreeSet<&str> = triples.iter().flat_map(|t| [t.subject.as_str(), t.object_iri().unwrap()]).collect();
    let relations: BTreeSet<&str> = triples.iter().map(|t| t.predicate.as_str()).collect();
    assert_eq!((entities.len(), relations.len()), (50, 5));

    for seed in [0, 1, 2] {
        let (hits, losses) = hits_at_1(EmbeddingKind::TransE, seed);
        assert!(hits >= 0.9, "seed {seed}: hits@1 {hits}");
        assert!(losses.last() < losses.first());
    }
    for kind in [EmbeddingKind::DistMult, EmbeddingKind::ComplEx] {
        let (_, losses) = hits_at_1(kind, 0);
        assert!(losses.last().unwrap() < losses.first().unwrap(), "{kind}");
    }
}

#[test]
fn training_is_bit_identical_for_a_seed() {
    let triples = toy_kg(3);
    let cfg = EmbedTrainConfig { epochs: 5, dim: 8, seed: 9, ..EmbedTrainConfig::default() };
    for kind in EmbeddingKind::ALL {
        let a = train_embeddings(&triples, &cfg, kind).unwrap();
        let b = train_embeddings(&triples, &cfg, kind).unwrap();
        assert_eq!(a.embeddings.to_bytes(), b.embeddings.to_bytes());
    }
}
