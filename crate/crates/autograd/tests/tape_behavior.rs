use placenet_autograd::{
    glorot_uniform, load_checkpoint, save_checkpoint, softmax_rows, AdError, NamedTensor,
    SparseMatrix, Tape,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sigmoid_at_zero() {
    let mut t = Tape::new();
    let x = t.leaf(1, 1, vec![0.0]).unwrap();
    let y = t.sigmoid(x).unwrap();
    assert_eq!(t.value(y)[0], 0.5);
    let l = t.sum(y).unwrap();
    t.backward(l).unwrap();
    assert_eq!(t.grad(x).unwrap()[0], 0.25);
}

#[test]
fn identity_and_constant_gradients() {
    let mut t = Tape::new();
    let x = t.leaf(1, 1, vec![3.5]).unwrap();
    let l = t.sum(x).unwrap();
    t.backward(l).unwrap();
    assert_eq!(t.grad(x).unwrap(), vec![1.0]);

    let mut t2 = Tape::new();
    let x2 = t2.leaf(1, 1, vec![3.5]).unwrap();
    let c = t2.constant(1, 1, vec![7.0]).unwrap();
    let l2 = t2.sum(c).unwrap();
    t2.backward(l2).unwrap();
    assert_eq!(t2.grad(x2).unwrap(), vec![0.0]);
}

#[test]
fn chebyshev_order_one_is_x() {
    let mut t = Tape::new();
    let lap = SparseMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)])
        .unwrap();
    let lid = t.sparse(lap);
    let x = t.leaf(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let y = t.chebyshev_filter(lid, x, 1).unwrap();
    assert_eq!(y, x);
    assert_eq!(t.value(y), t.value(x));
}

#[test]
fn chebyshev_recurrence_matches_dense() {
    // T_0 = X, T_1 = L X, T_2 = 2 L T_1 - T_0, stacked along columns.
    let lap_entries = vec![(0u32, 1u32, -0.7), (1, 0, -0.7), (1, 2, 0.3), (2, 1, 0.3)];
    let lap = SparseMatrix::from_triplets(3, 3, lap_entries).unwrap();
    let ld = lap.to_dense();
    let x = vec![0.5, -1.0, 2.0, 0.25, -0.5, 1.5];
    let mut t = Tape::new();
    let lid = t.sparse(lap);
    let xt = t.leaf(3, 2, x.clone()).unwrap();
    let y = t.chebyshev_filter(lid, xt, 3).unwrap();
    assert_eq!(t.shape(y), (3, 6));
    let dense_mul = |m: &[f64], v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; 6];
        for i in 0..3 {
            for k in 0..3 {
                for j in 0..2 {
                    out[i * 2 + j] += m[i * 3 + k] * v[k * 2 + j];
                }
            }
        }
        out
    };
    let t1 = dense_mul(&ld, &x);
    let lt1 = dense_mul(&ld, &t1);
    let t2: Vec<f64> = lt1
        .iter()
        .zip(&x)
        .map(|(a, b)| 2.0 * a - b)
        .collect();
    let got = t.value(y);
    for i in 0..3 {
        for j in 0..2 {
            assert!((got[i * 6 + j] - x[i * 2 + j]).abs() < 1e-12);
            assert!((got[i * 6 + 2 + j] - t1[i * 2 + j]).abs() < 1e-12);
            assert!((got[i * 6 + 4 + j] - t2[i * 2 + j]).abs() < 1e-12);
        }
    }
}

#[test]
fn empty_mask_is_an_error() {
    let mut t = Tape::new();
    let logits = t.leaf(3, 2, vec![0.1; 6]).unwrap();
    let err = t.softmax_cross_entropy(logits, &[0, 1, 0], &[]).unwrap_err();
    assert!(matches!(err, AdError::EmptyMask { .. }));
}

#[test]
fn repeated_backward_errors_and_reset_clears() {
    let mut t = Tape::new();
    let x = t.leaf(2, 1, vec![1.0, 2.0]).unwrap();
    let s = t.sum(x).unwrap();
    t.backward(s).unwrap();
    assert!(matches!(t.backward(s), Err(AdError::BackwardTwice)));
    t.reset_grads();
    t.backward(s).unwrap();
    assert_eq!(t.grad(x).unwrap(), vec![1.0, 1.0]);
}

#[test]
fn grad_before_backward_errors() {
    let mut t = Tape::new();
    let x = t.leaf(2, 1, vec![1.0, 2.0]).unwrap();
    assert!(matches!(t.grad(x), Err(AdError::GradBeforeBackward)));
}

#[test]
fn overflow_is_reported_not_propagated() {
    // 1e200 * 1e200 overflows f64; the op must fail instead of recording inf.
    let mut t = Tape::new();
    let x = t.leaf(1, 1, vec![1e200]).unwrap();
    assert!(matches!(t.mul(x, x), Err(AdError::NonFinite { .. })));

    let mut t2 = Tape::new();
    let z = t2.leaf(1, 2, vec![1e200, 1e200]).unwrap();
    let zt = t2.leaf(2, 1, vec![1e200, 1e200]).unwrap();
    assert!(matches!(t2.matmul(z, zt), Err(AdError::NonFinite { .. })));

    // NaN inputs are rejected at leaf creation.
    let mut t3 = Tape::new();
    assert!(matches!(
        t3.leaf(1, 1, vec![f64::NAN]),
        Err(AdError::NonFinite { .. })
    ));
}

#[test]
fn bitwise_replay_determinism() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w0 = glorot_uniform(6, 4, &mut rng);
        let w1 = glorot_uniform(4, 2, &mut rng);
        let mut t = Tape::new();
        let x = t
            .constant(5, 6, (0..30).map(|i| (i as f64) * 0.1 - 1.3).collect())
            .unwrap();
        let w0t = t.leaf(6, 4, w0).unwrap();
        let w1t = t.leaf(4, 2, w1).unwrap();
        let h = t.matmul(x, w0t).unwrap();
        let h = t.tanh(h).unwrap();
        let mut drop_rng = ChaCha8Rng::seed_from_u64(12);
        let h = t.dropout(h, 0.2, &mut drop_rng).unwrap();
        let logits = t.matmul(h, w1t).unwrap();
        let loss = t
            .softmax_cross_entropy(logits, &[0, 1, 0, 1, 1], &[0, 1, 2, 3, 4])
            .unwrap();
        t.backward(loss).unwrap();
        (
            t.value(loss).to_vec(),
            t.grad(w0t).unwrap(),
            t.grad(w1t).unwrap(),
        )
    };
    let a = run();
    let b = run();
    assert_eq!(a.0[0].to_bits(), b.0[0].to_bits());
    for (x, y) in a.1.iter().zip(&b.1) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    for (x, y) in a.2.iter().zip(&b.2) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn backward_linearity() {
    // Scaling the loss by a power of two scales every gradient exactly;
    // for general scalars agreement is to relative 1e-12.
    let grads_for = |scale: Option<f64>| {
        let mut t = Tape::new();
        let x = t.leaf(3, 1, vec![0.3, -0.7, 1.1]).unwrap();
        let y = t.tanh(x).unwrap();
        let q = t.mul(y, y).unwrap();
        let mut l = t.sum(q).unwrap();
        if let Some(a) = scale {
            l = t.scale(l, a).unwrap();
        }
        t.backward(l).unwrap();
        t.grad(x).unwrap()
    };
    let base = grads_for(None);
    let doubled = grads_for(Some(2.0));
    for (g, d) in base.iter().zip(&doubled) {
        assert_eq!((g * 2.0).to_bits(), d.to_bits());
    }
    let scaled = grads_for(Some(3.7));
    for (g, s) in base.iter().zip(&scaled) {
        let want = g * 3.7;
        assert!((want - s).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn gradients_accumulate_across_uses() {
    // f(x) = sum(x) + sum(x) => grad = 2 everywhere.
    let mut t = Tape::new();
    let x = t.leaf(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
    let a = t.sum(x).unwrap();
    let b = t.sum(x).unwrap();
    let l = t.add(a, b).unwrap();
    t.backward(l).unwrap();
    assert_eq!(t.grad(x).unwrap(), vec![2.0, 2.0, 2.0]);
}

#[test]
fn dropout_zero_rate_is_identity_and_off_at_predict() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut t = Tape::new();
    let x = t.leaf(2, 2, vec![1.0, -2.0, 3.0, -4.0]).unwrap();
    let d = t.dropout(x, 0.0, &mut rng).unwrap();
    assert_eq!(t.value(d), t.value(x));
    let bad = t.dropout(x, 1.0, &mut rng);
    assert!(matches!(bad, Err(AdError::BadArgument { .. })));
}

#[test]
fn softmax_rows_normalizes() {
    let p = softmax_rows(&[0.0, 0.0, 5.0, 5.0], 2, 2);
    assert!((p[0] - 0.5).abs() < 1e-15);
    assert!((p[2] - 0.5).abs() < 1e-15);
    let q = softmax_rows(&[1000.0, 0.0], 1, 2);
    assert!((q[0] - 1.0).abs() < 1e-12 && q.iter().all(|v| v.is_finite()));
}

#[test]
fn segment_softmax_requires_sorted_segments() {
    let mut t = Tape::new();
    let x = t.leaf(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
    assert!(t.segment_softmax(x, &[1, 0, 1]).is_err());
    let ok = t.segment_softmax(x, &[0, 0, 1]).unwrap();
    let v = t.value(ok);
    assert!((v[0] + v[1] - 1.0).abs() < 1e-12);
    assert!((v[2] - 1.0).abs() < 1e-12);
}

#[test]
fn glorot_bounds_and_determinism() {
    let mut r1 = ChaCha8Rng::seed_from_u64(9);
    let mut r2 = ChaCha8Rng::seed_from_u64(9);
    let a = glorot_uniform(30, 20, &mut r1);
    let b = glorot_uniform(30, 20, &mut r2);
    assert_eq!(a, b);
    let limit = (6.0f64 / 50.0).sqrt();
    assert!(a.iter().all(|v| v.abs() < limit));
}

#[test]
fn checkpoint_roundtrip_is_bitwise() {
    let dir = std::env::temp_dir().join(format!("ckpt_test_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let tensors = vec![
        NamedTensor {
            name: "layer0/weight".into(),
            rows: 3,
            cols: 2,
            data: vec![1.5, -2.25, 0.1, f64::MIN_POSITIVE, 1e300, -0.0],
        },
        NamedTensor {
            name: "layer0/bias".into(),
            rows: 1,
            cols: 2,
            data: vec![0.25, std::f64::consts::PI],
        },
    ];
    let bin = dir.join("params.bin");
    let man = dir.join("params.json");
    save_checkpoint(&bin, &man, &tensors).unwrap();
    let back = load_checkpoint(&bin, &man).unwrap();
    assert_eq!(back.len(), 2);
    for (a, b) in tensors.iter().zip(&back) {
        assert_eq!(a.name, b.name);
        assert_eq!((a.rows, a.cols), (b.rows, b.cols));
        for (x, y) in a.data.iter().zip(&b.data) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn masked_loss_ignores_unmasked_rows() {
    // Changing logits of rows outside the mask leaves the loss bitwise equal.
    let loss_with = |extra: f64| {
        let mut t = Tape::new();
        let logits = t
            .leaf(4, 2, vec![0.3, -0.2, 0.9, 0.1, extra, extra, 0.0, 0.5])
            .unwrap();
        let l = t
            .softmax_cross_entropy(logits, &[0, 1, 0, 1], &[0, 1, 3])
            .unwrap();
        t.value(l)[0]
    };
    assert_eq!(loss_with(0.0).to_bits(), loss_with(123.456).to_bits());
}
