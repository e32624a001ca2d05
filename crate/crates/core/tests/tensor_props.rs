use nalgebra::DMatrix;
use proptest::prelude::*;

use tucker_core::tensor::{io, linalg};
use tucker_core::{DenseTensor, ModeOp, RandomStream, SparseTensor, TuckerModel};

fn tensor(dims: &[usize], seed: u64) -> DenseTensor {
    let mut rng = RandomStream::new(seed);
    DenseTensor::from_fn(dims.to_vec(), |_| rng.gaussian()).unwrap()
}

fn dims_and_mode(max_order: usize) -> impl Strategy<Value = (Vec<usize>, usize, u64)> {
    (prop::collection::vec(1usize..6, 1..=max_order), any::<u64>())
        .prop_flat_map(|(dims, seed)| {
            let n = dims.len();
            (Just(dims), 0..n, Just(seed))
        })
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fold_inverts_unfold((dims, n, seed) in dims_and_mode(5)) {
        let t = tensor(&dims, seed);
        let back = DenseTensor::fold(&t.unfold(n).unwrap(), n, t.shape()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn unfolding_keeps_every_entry((dims, n, seed) in dims_and_mode(5)) {
        let t = tensor(&dims, seed);
        let u = t.unfold(n).unwrap();
        prop_assert_eq!(u.nrows(), dims[n]);
        let mut a: Vec<f64> = u.iter().copied().collect();
        let mut b = t.data().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn unfolding_column_index((dims, n, seed) in dims_and_mode(4)) {
        // Column of entry (i_0, .., i_{N-1}) is sum_{k != n} i_k prod_{m < k, m != n} I_m.
        let t = tensor(&dims, seed);
        let u = t.unfold(n).unwrap();
        let mut index = vec![0usize; dims.len()];
        for (lin, &v) in t.data().iter().enumerate() {
            let mut rest = lin;
            for (k, d) in dims.iter().enumerate() {
                index[k] = rest % d;
                rest /= d;
            }
            let mut col = 0;
            let mut stride = 1;
            for (k, &d) in dims.iter().enumerate().filter(|&(k, _)| k != n) {
                col += index[k] * stride;
                stride *= d;
            }
            prop_assert_eq!(u[(index[n], col)], v);
        }
    }

    #[test]
    fn repeated_mode_products_compose((dims, n, seed) in dims_and_mode(4), r1 in 1usize..5, r2 in 1usize..5) {
        let t = tensor(&dims, seed);
        let mut rng = RandomStream::new(seed ^ 0x55);
        let b = rng.gaussian_matrix(r1, dims[n]);
        let a = rng.gaussian_matrix(r2, r1);
        let lhs = t.mode_product(&b, n).unwrap().mode_product(&a, n).unwrap();
        let rhs = t.mode_product(&(&a * &b), n).unwrap();
        let err = lhs.sub(&rhs).unwrap().frobenius_norm();
        prop_assert!(err <= 1e-12 * t.frobenius_norm() * a.norm() * b.norm());
    }

    #[test]
    fn products_in_distinct_modes_commute((dims, n, seed) in dims_and_mode(4), r in 1usize..4) {
        prop_assume!(dims.len() >= 2);
        let m = (n + 1) % dims.len();
        let t = tensor(&dims, seed);
        let mut rng = RandomStream::new(seed ^ 0x77);
        let a = rng.gaussian_matrix(r, dims[n]);
        let b = rng.gaussian_matrix(r + 1, dims[m]);
        let ab = t.mode_product(&a, n).unwrap().mode_product(&b, m).unwrap();
        let ba = t.mode_product(&b, m).unwrap().mode_product(&a, n).unwrap();
        let multi = t.multi_mode_product(&[ModeOp::new(n, &a), ModeOp::new(m, &b)]).unwrap();
        prop_assert!(ab.sub(&ba).unwrap().frobenius_norm() <= 1e-12 * ab.frobenius_norm().max(1e-300));
        prop_assert!(ab.sub(&multi).unwrap().frobenius_norm() <= 1e-12 * ab.frobenius_norm().max(1e-300));
    }

    #[test]
    fn transposed_product_matches_explicit_transpose((dims, n, seed) in dims_and_mode(4), r in 1usize..5) {
        let t = tensor(&dims, seed);
        let q = RandomStream::new(seed ^ 3).gaussian_matrix(dims[n], r);
        let a = t.mode_product_t(&q, n).unwrap();
        let b = t.mode_product(&q.transpose(), n).unwrap();
        prop_assert!(a.sub(&b).unwrap().frobenius_norm() <= 1e-12 * b.frobenius_norm().max(1e-300));
    }

    #[test]
    fn unfolding_norm_is_bit_exact((dims, n, seed) in dims_and_mode(5)) {
        let t = tensor(&dims, seed);
        let u = t.unfold(n).unwrap();
        let direct: f64 = u.iter().map(|v| v * v).sum::<f64>();
        let mut sorted_u: Vec<f64> = u.iter().map(|v| v * v).collect();
        let mut sorted_t: Vec<f64> = t.data().iter().map(|v| v * v).collect();
        sorted_u.sort_by(f64::total_cmp);
        sorted_t.sort_by(f64::total_cmp);
        prop_assert_eq!(sorted_u.iter().sum::<f64>(), sorted_t.iter().sum::<f64>());
        prop_assert!((direct.sqrt() - t.frobenius_norm()).abs() <= 1e-14 * t.frobenius_norm());
    }

    #[test]
    fn orthogonal_projection_is_idempotent((dims, n, seed) in dims_and_mode(4), r in 1usize..6) {
        let r = r.min(dims[n]);
        let t = tensor(&dims, seed);
        let q = linalg::orthonormalize(&RandomStream::new(seed ^ 9).gaussian_matrix(dims[n], r));
        let p = &q * q.transpose();
        let once = t.mode_product(&p, n).unwrap();
        let twice = once.mode_product(&p, n).unwrap();
        prop_assert!(once.sub(&twice).unwrap().frobenius_norm() <= 1e-12 * t.frobenius_norm());
    }

    #[test]
    fn unfolded_products_match_mode_products((dims, n, seed) in dims_and_mode(4), r in 1usize..5) {
        let t = tensor(&dims, seed);
        let mut rng = RandomStream::new(seed ^ 11);
        let m = rng.gaussian_matrix(t.shape().len_without(n), r);
        let x = t.unfold(n).unwrap();
        prop_assert!(rel(&t.unfold_mul(n, &m).unwrap(), &(&x * &m)) <= 1e-12);
        let w = rng.gaussian_matrix(dims[n], r);
        prop_assert!(rel(&t.unfold_t_mul(n, &w).unwrap(), &(x.transpose() * &w)) <= 1e-12);
        prop_assert!(rel(&t.gram(n).unwrap(), &(&x * x.transpose())) <= 1e-12);
    }

    #[test]
    fn tucker_unfolding_uses_reversed_kronecker((dims, n, seed) in dims_and_mode(4)) {
        let mut rng = RandomStream::new(seed);
        let ranks: Vec<usize> = dims.iter().map(|&d| 1 + rng.below(d)).collect();
        let core = tensor(&ranks, seed ^ 1);
        let factors: Vec<DMatrix<f64>> = dims.iter().zip(&ranks).map(|(&d, &r)| rng.gaussian_matrix(d, r)).collect();
        let model = TuckerModel::new(core.clone(), factors.clone()).unwrap();
        let others: Vec<&DMatrix<f64>> = (0..dims.len()).rev().filter(|&p| p != n).map(|p| &factors[p]).collect();
        let kron = if others.is_empty() { DMatrix::identity(1, 1) } else { linalg::kronecker_all(&others) };
        let expected = &factors[n] * core.unfold(n).unwrap() * kron.transpose();
        prop_assert!(rel(&model.reconstruct().unfold(n).unwrap(), &expected) <= 1e-11);
    }

    #[test]
    fn sparse_mode_product_matches_dense((dims, n, seed) in dims_and_mode(4), r in 1usize..4) {
        let mut t = tensor(&dims, seed);
        for v in t.data_mut().iter_mut().step_by(3) {
            *v = 0.0;
        }
        let s = SparseTensor::from_dense(&t);
        prop_assert_eq!(s.to_dense(), t.clone());
        let b = RandomStream::new(seed ^ 5).gaussian_matrix(r, dims[n]);
        let dense = t.mode_product(&b, n).unwrap();
        let sparse = s.mode_product_dense(&b, n, false).unwrap();
        prop_assert!(dense.sub(&sparse).unwrap().frobenius_norm() <= 1e-12 * dense.frobenius_norm().max(1e-300));
    }

    #[test]
    fn dts_roundtrip_is_exact((dims, _n, seed) in dims_and_mode(5)) {
        let t = tensor(&dims, seed);
        let mut buf = Vec::new();
        io::write_dts(&t, &mut buf).unwrap();
        prop_assert_eq!(io::read_dts(buf.as_slice()).unwrap(), t);
    }
}

#[test]
fn tns_roundtrip() {
    let s = SparseTensor::from_entries(vec![3, 4, 2], vec![(vec![0, 1, 1], 2.5), (vec![2, 3, 0], -1.0)]).unwrap();
    let mut buf = Vec::new();
    io::write_tns(&s, &mut buf).unwrap();
    let back = io::read_tns(buf.as_slice(), Some(&[3, 4, 2])).unwrap();
    assert_eq!(back.to_dense(), s.to_dense());
}

#[test]
fn pinv_examples() {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.0]));
    let p = linalg::pinv(&d);
    assert!((p - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.0]))).norm() < 1e-15);
    let m = RandomStream::new(1).gaussian_matrix(9, 4);
    assert!((linalg::pinv(&m) * &m - DMatrix::identity(4, 4)).norm() < 1e-10);
}
