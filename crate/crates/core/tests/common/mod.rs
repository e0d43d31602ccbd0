//! Randomized invariant checks shared by the property tests and the acceptance run.

#![allow(dead_code)]

use ndarray::{Array2, Array3};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use stjd::contrastive::{
    gap_pool, info_nce, jafp_pool, momentum_update, project, EncoderPair, FeatureMap, MemoryBank,
    TrainConfig,
};
use stjd::density::{
    compute_density, density_change, density_change_field, BandwidthVector, NormalizeOptions,
};
use stjd::prime::{detect_prime, threshold_mask};
use stjd::JointLayout;

pub const CASES: u32 = 1000;

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn field(max_t: usize, max_v: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_t, 1..=max_v).prop_flat_map(|(t, v)| {
        prop::collection::vec(0.0..=1.0f64, t * v)
            .prop_map(move |vals| Array2::from_shape_vec((t, v), vals).unwrap())
    })
}

fn unit_vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, dim).prop_filter_map("non-zero", |v| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (n > 1e-3).then(|| v.iter().map(|x| x / n).collect())
    })
}

/// beta1 <= beta2 implies mask(beta2) is a subset of mask(beta1), with and without the fallback.
pub fn beta_nesting(cases: u32) -> Result<(), String> {
    run(cases, (field(8, 8), 0.0..=1.0f64, 0.0..=1.0f64), |(f, a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let wide = threshold_mask(&f, lo).unwrap();
        let narrow = threshold_mask(&f, hi).unwrap();
        for (n, w) in narrow.iter().zip(wide.iter()) {
            prop_assert!(!n || *w);
        }
        let wide = detect_prime(&f, lo).unwrap().mask;
        let narrow = detect_prime(&f, hi).unwrap().mask;
        for (n, w) in narrow.iter().zip(wide.iter()) {
            prop_assert!(!n || *w);
        }
        Ok(())
    })
}

/// The bank holds the most recent `min(n, capacity)` entries, oldest first.
pub fn fifo_bank(cases: u32) -> Result<(), String> {
    run(cases, (0usize..12, 0usize..40), |(capacity, n)| {
        let mut bank = MemoryBank::new(capacity);
        for i in 0..n {
            bank.enqueue(vec![i as f64]);
            prop_assert!(bank.len() <= capacity);
        }
        let kept: Vec<f64> = bank.iter().map(|z| z[0]).collect();
        let expected: Vec<f64> = (n.saturating_sub(capacity)..n).map(|i| i as f64).collect();
        prop_assert_eq!(kept, expected);
        Ok(())
    })
}

/// Every offline entry lands between its old value and the online value.
pub fn momentum_convexity(cases: u32) -> Result<(), String> {
    run(cases, (0.0..=1.0f64, any::<u64>(), any::<u64>()), |(alpha, s1, s2)| {
        let cfg = TrainConfig {
            hidden: 4,
            embed: 3,
            ..TrainConfig::default()
        };
        let adj = JointLayout::generic(4).normalized_adjacency();
        let mut pair = EncoderPair::new(3, adj.clone(), &cfg, s1);
        pair.online = EncoderPair::new(3, adj, &cfg, s2).online;
        pair.alpha = alpha;
        let before = pair.clone();
        momentum_update(&mut pair).unwrap();
        prop_assert_eq!(&pair.online, &before.online);
        let check = |new: &Array2<f64>, old: &Array2<f64>, on: &Array2<f64>| {
            new.iter().zip(old).zip(on).all(|((n, o), q)| {
                let (lo, hi) = if o <= q { (*o, *q) } else { (*q, *o) };
                *n >= lo && *n <= hi
            })
        };
        let (off, old, on) = (&pair.offline, &before.offline, &before.online);
        prop_assert!(check(&off.encoder.w1, &old.encoder.w1, &on.encoder.w1));
        prop_assert!(check(&off.encoder.w2, &old.encoder.w2, &on.encoder.w2));
        prop_assert!(check(&off.projector_k, &old.projector_k, &on.projector));
        prop_assert!(check(&off.projector_p, &old.projector_p, &on.projector));
        Ok(())
    })
}

fn feature_map() -> impl Strategy<Value = FeatureMap> {
    (1usize..5, 1usize..6, 1usize..6).prop_flat_map(|(d, t, v)| {
        prop::collection::vec(0.0..3.0f64, d * t * v)
            .prop_map(move |vals| FeatureMap(Array3::from_shape_vec((d, t, v), vals).unwrap()))
    })
}

/// JAFP with an all-ones mask is GAP; a single-entry mask picks that column;
/// any mask yields a per-channel value within the channel's range.
pub fn pooling(cases: u32) -> Result<(), String> {
    run(cases, (feature_map(), any::<u64>()), |(u, seed)| {
        let (d, t, v) = u.0.dim();
        let ones = Array2::from_elem((t, v), 1.0);
        prop_assert_eq!(jafp_pool(&u, &ones).unwrap(), gap_pool(&u));

        let (t0, v0) = ((seed as usize) % t, (seed as usize / 7) % v);
        let mut point = Array2::zeros((t, v));
        point[[t0, v0]] = 1.0;
        let picked = jafp_pool(&u, &point).unwrap();
        for c in 0..d {
            prop_assert_eq!(picked[c], u.0[[c, t0, v0]]);
        }

        let mask = Array2::from_shape_fn((t, v), |(a, b)| ((seed >> ((a * v + b) % 60)) & 1) as f64);
        if mask.sum() > 0.0 {
            let pooled = jafp_pool(&u, &mask).unwrap();
            for c in 0..d {
                let plane = u.0.index_axis(ndarray::Axis(0), c);
                let lo = plane.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(pooled[c] >= lo - 1e-12 && pooled[c] <= hi + 1e-12);
            }
        }
        Ok(())
    })
}

/// Projected embeddings have unit norm.
pub fn unit_norm_projection(cases: u32) -> Result<(), String> {
    let strategy = (1usize..6, 1usize..8).prop_flat_map(|(p, d)| {
        (
            prop::collection::vec(-2.0..2.0f64, p * d).prop_map(move |w| Array2::from_shape_vec((p, d), w).unwrap()),
            prop::collection::vec(-2.0..2.0f64, d),
        )
    });
    run(cases, strategy, |(g, pooled)| {
        let (z, n) = project(&g, &pooled);
        if n > 1e-9 {
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-9);
        }
        Ok(())
    })
}

/// With the bank fixed, a key closer to the query never raises the loss.
pub fn info_nce_monotone(cases: u32) -> Result<(), String> {
    let strategy = (2usize..6).prop_flat_map(|p| {
        (
            unit_vector(p),
            unit_vector(p),
            unit_vector(p),
            prop::collection::vec(unit_vector(p), 0..6),
            0.05..2.0f64,
        )
    });
    run(cases, strategy, |(q, k1, k2, negatives, tau)| {
        let mut bank = MemoryBank::new(8);
        for z in negatives {
            bank.enqueue(z);
        }
        let sim = |k: &[f64]| q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>();
        let (near, far) = if sim(&k1) >= sim(&k2) { (&k1, &k2) } else { (&k2, &k1) };
        let l_near = info_nce(&q, near, &bank, tau).unwrap();
        let l_far = info_nce(&q, far, &bank, tau).unwrap();
        prop_assert!(l_near >= 0.0 && l_far >= 0.0);
        prop_assert!(l_near <= l_far + 1e-12);
        if !bank.is_empty() && sim(near) - sim(far) > 1e-6 {
            prop_assert!(l_near < l_far);
        }
        Ok(())
    })
}

fn coords(max_v: usize, max_t: usize) -> impl Strategy<Value = (Array3<f64>, Vec<f64>)> {
    (1usize..=3, 1..=max_v, 2..=max_t).prop_flat_map(|(c, v, t)| {
        (
            prop::collection::vec(-1.0..1.0f64, c * v * t)
                .prop_map(move |vals| Array3::from_shape_vec((c, v, t), vals).unwrap()),
            prop::collection::vec(0.1..1.0f64, v),
        )
    })
}

/// Density is positive; the change field has a zero first row, non-negative
/// raw values, and a normalized field in [0, 1] that reaches 1 unless all-zero.
pub fn density_field_invariants(cases: u32) -> Result<(), String> {
    run(cases, coords(6, 6), |(x, h)| {
        let h = BandwidthVector::new(h).unwrap();
        let d = compute_density(&x, &h).unwrap();
        prop_assert!(d.values.iter().all(|&a| a > 0.0 && a.is_finite()));
        let f = density_change_field(&x, &h, 1, NormalizeOptions::default()).unwrap();
        prop_assert!(f.raw.row(0).iter().all(|&a| a == 0.0));
        prop_assert!(f.raw.iter().all(|&a| a >= 0.0));
        prop_assert!(f.normalized.iter().all(|&a| (0.0..=1.0).contains(&a)));
        if f.raw.iter().all(|&a| a == 0.0) {
            prop_assert!(f.normalized.iter().all(|&a| a == 0.0));
        } else {
            prop_assert!(f.normalized.iter().any(|&a| a == 1.0));
        }
        Ok(())
    })
}

/// Permuting joints (and their bandwidths) permutes density and raw change columns.
pub fn permutation_equivariance(cases: u32) -> Result<(), String> {
    run(cases, (coords(6, 5), any::<u64>()), |((x, h), seed)| {
        let v = h.len();
        let mut perm: Vec<usize> = (0..v).collect();
        let mut s = seed;
        for i in (1..v).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let xp = Array3::from_shape_fn(x.dim(), |(c, j, t)| x[[c, perm[j], t]]);
        let hp: Vec<f64> = perm.iter().map(|&j| h[j]).collect();
        let h = BandwidthVector::new(h).unwrap();
        let hp = BandwidthVector::new(hp).unwrap();
        let d = compute_density(&x, &h).unwrap().values;
        let dp = compute_density(&xp, &hp).unwrap().values;
        let r = density_change(&x, &h, 1).unwrap();
        let rp = density_change(&xp, &hp, 1).unwrap();
        for t in 0..d.nrows() {
            for j in 0..v {
                prop_assert!((dp[[t, j]] - d[[t, perm[j]]]).abs() <= 1e-12 * d[[t, perm[j]]].max(1.0));
                prop_assert!((rp[[t, j]] - r[[t, perm[j]]]).abs() <= 1e-12 * d[[t, perm[j]]].max(1.0));
            }
        }
        Ok(())
    })
}
