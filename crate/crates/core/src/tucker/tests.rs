use super::*;
use crate::rng::RandomStream;
use crate::sketch::SamplingDistribution;
use crate::synth::gen_low_rank;
use crate::tensor::{linalg, MultilinearRank, SparseTensor};

fn low_rank(dims: &[usize], ranks: &[usize], seed: u64) -> DenseTensor {
    gen_low_rank(dims, &MultilinearRank::new(ranks.to_vec()).unwrap(), seed).unwrap()
}

fn random(dims: &[usize], seed: u64) -> DenseTensor {
    let mut rng = RandomStream::new(seed);
    DenseTensor::from_fn(dims.to_vec(), |_| rng.gaussian()).unwrap()
}

fn cfg(ranks: &[usize]) -> TuckerConfig {
    TuckerConfig::with_ranks(ranks.to_vec()).unwrap()
}

fn error(t: &DenseTensor, d: &Decomposition) -> f64 {
    metrics::relative_error(t, &d.model).unwrap()
}

fn assert_orthonormal(d: &Decomposition) {
    for (n, q) in d.factors().iter().enumerate() {
        assert!(linalg::orthonormality_error(q) <= 1e-10, "factor {n}");
    }
}

#[test]
fn full_ranks_reconstruct_exactly() {
    let t = random(&[4, 5, 3], 1);
    let c = cfg(&[4, 5, 3]);
    for algo in [Algorithm::Thosvd, Algorithm::Sthosvd, Algorithm::Hooi] {
        let d = algo.run(&t, &c).unwrap();
        assert!(error(&t, &d) <= 1e-10, "{algo}");
        assert_orthonormal(&d);
    }
}

#[test]
fn exact_rank_recovered_by_every_algorithm() {
    let t = low_rank(&[30, 30, 30], &[3, 4, 2], 7);
    let base = cfg(&[3, 4, 2]).noiseless();
    for algo in Algorithm::ALL {
        let c = match algo {
            Algorithm::RLshooi => base.clone().init(HooiInit::Hosvd).max_iters(3),
            _ => base.clone(),
        };
        let d = algo.run(&t, &c).unwrap();
        let limit = match algo {
            Algorithm::Thosvd | Algorithm::Sthosvd | Algorithm::Hooi => 1e-12,
            Algorithm::RpHosvd | Algorithm::RpHooi | Algorithm::RSthosvd => 1e-10,
            _ => 1e-8,
        };
        let e = error(&t, &d);
        assert!(e <= limit, "{algo}: {e}");
        assert_eq!(d.model.dims(), t.dims());
        assert_eq!(d.model.ranks(), vec![3, 4, 2]);
    }
}

#[test]
fn thosvd_is_quasi_optimal() {
    for seed in 0..5 {
        let t = random(&[8, 7, 6], seed);
        let c = cfg(&[3, 2, 4]).max_iters(500).tol(1e-14);
        let e_t = error(&t, &thosvd(&t, &c).unwrap());
        let e_h = error(&t, &hooi(&t, &c).unwrap());
        assert!(e_t <= 3f64.sqrt() * e_h + 1e-14);
        assert!(e_h <= e_t + 1e-12);
    }
}

#[test]
fn sthosvd_orders_and_shortcut_agree() {
    let t = random(&[9, 8, 7], 3);
    let c = cfg(&[3, 4, 2]).max_iters(500).tol(1e-14);
    let best = error(&t, &hooi(&t, &c).unwrap());
    let a = sthosvd(&t, &c).unwrap();
    let b = sthosvd(&t, &c.clone().mode_order(vec![2, 0, 1])).unwrap();
    for d in [&a, &b] {
        assert_orthonormal(d);
        assert!(error(&t, d) <= 3f64.sqrt() * best + 1e-14);
    }
    let mut slow = c.clone();
    slow.sthosvd_shortcut = false;
    let s = sthosvd(&t, &slow).unwrap();
    let diff = s.model.reconstruct().sub(&a.model.reconstruct()).unwrap().frobenius_norm();
    assert!(diff <= 1e-12 * t.frobenius_norm(), "{diff}");
}

#[test]
fn leading_vector_methods_agree() {
    let t = random(&[12, 5, 6], 2);
    let e: Vec<f64> = [LeadingVectors::Svd, LeadingVectors::Gram, LeadingVectors::Auto]
        .into_iter()
        .map(|l| error(&t, &thosvd(&t, &cfg(&[3, 3, 3]).leading(l)).unwrap()))
        .collect();
    assert!((e[0] - e[1]).abs() <= 1e-10 && (e[0] - e[2]).abs() <= 1e-10, "{e:?}");
}

#[test]
fn hooi_fit_is_monotone() {
    for seed in 0..5 {
        let t = random(&[10, 9, 8], 10 + seed);
        let d = hooi(&t, &cfg(&[2, 3, 2]).init(HooiInit::Random).tol(1e-13).max_iters(40)).unwrap();
        for w in d.fit_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{:?}", d.fit_trace);
        }
        assert_orthonormal(&d);
    }
}

#[test]
fn hooi_from_hosvd_converges_at_once_on_exact_rank() {
    let t = low_rank(&[15, 12, 10], &[3, 2, 4], 1);
    let d = hooi(&t, &cfg(&[3, 2, 4])).unwrap();
    assert!(d.iterations <= 2, "{}", d.iterations);
    assert!(error(&t, &d) <= 1e-12);
}

#[test]
fn randomized_runs_are_seed_deterministic() {
    let t = low_rank(&[14, 13, 12], &[3, 3, 3], 4);
    let mut rng = RandomStream::new(5);
    let noisy = DenseTensor::from_fn(t.dims().to_vec(), |i| t.get(i) + 1e-3 * rng.gaussian()).unwrap();
    let c = cfg(&[3, 3, 3]).seed(42).max_iters(5);
    for algo in Algorithm::ALL.into_iter().filter(|a| a.is_randomized()) {
        let a = algo.run(&noisy, &c).unwrap();
        let b = algo.run(&noisy, &c).unwrap();
        assert_eq!(a.model.reconstruct(), b.model.reconstruct(), "{algo}");
    }
}

#[test]
fn rp_hosvd_memory_efficient_variant() {
    let t = low_rank(&[20, 18, 16], &[4, 3, 5], 8);
    let mut c = cfg(&[4, 3, 5]).noiseless();
    c.memory_efficient = true;
    let d = rp_hosvd(&t, &c).unwrap();
    assert!(error(&t, &d) <= 1e-10);
    assert_orthonormal(&d);

    let noisy = random(&[20, 18, 16], 3);
    let plain = error(&noisy, &rp_hosvd(&noisy, &cfg(&[4, 3, 5])).unwrap());
    let mut c = cfg(&[4, 3, 5]);
    c.memory_efficient = true;
    let eff = error(&noisy, &rp_hosvd(&noisy, &c).unwrap());
    assert!((plain - eff).abs() < 0.05, "{plain} vs {eff}");
}

#[test]
fn r_pet_reads_data_once() {
    let t = low_rank(&[16, 15, 14], &[3, 2, 3], 9);
    let counted = CountingTensor::new(t.clone());
    let d = r_pet(&counted, &cfg(&[3, 2, 3])).unwrap();
    assert_eq!(counted.passes(), 1);
    assert_eq!(d.passes, 1);
    assert!(error(&t, &d) <= 1e-8);
    assert_orthonormal(&d);
}

#[test]
fn r_pet_rejects_bad_sketch_sizes() {
    let t = random(&[6, 6, 6], 1);
    let c = cfg(&[3, 3, 3]).pet(vec![2, 4, 4], vec![5, 9, 9]);
    assert!(r_pet(&t, &c).is_err());
    let c = cfg(&[3, 3, 3]).pet(vec![4, 4, 4], vec![3, 9, 9]);
    assert!(r_pet(&t, &c).is_err());
}

#[test]
fn r_st_factors_are_fibers() {
    let t = low_rank(&[12, 11, 10], &[2, 3, 2], 2);
    for dist in [SamplingDistribution::Uniform, SamplingDistribution::LengthSquared] {
        let d = r_st(&t, &cfg(&[2, 3, 2]).sampling(dist, false)).unwrap();
        assert!(error(&t, &d) <= 1e-8);
        let selected = d.selected.as_ref().unwrap();
        for n in 0..3 {
            assert!(!d.model.orthonormal_flags()[n]);
            let unf = t.unfold(n).unwrap();
            for (k, &col) in selected[n].iter().enumerate() {
                assert_eq!(d.model.factor(n).column(k), unf.column(col));
            }
        }
    }
}

#[test]
fn r_st_sparse_keeps_sparse_factors() {
    let entries = vec![
        (vec![0, 0, 0], 1.0),
        (vec![1, 1, 1], 2.0),
        (vec![2, 0, 1], 3.0),
        (vec![4, 2, 0], -1.0),
        (vec![3, 1, 2], 0.5),
    ];
    let s = SparseTensor::from_entries(vec![5, 3, 3], entries).unwrap();
    let dense = s.to_dense();
    let d = r_st_sparse(&s, &cfg(&[2, 2, 2]).seed(3)).unwrap();
    for (n, q) in d.factors().iter().enumerate() {
        let unf = dense.unfold(n).unwrap();
        for (k, &col) in d.selected.as_ref().unwrap()[n].iter().enumerate() {
            assert_eq!(q.column(k), unf.column(col));
        }
    }
    let full = r_st_sparse(&s, &cfg(&[3, 3, 3])).unwrap();
    assert!(full.model.reconstruct().sub(&dense).unwrap().frobenius_norm() <= 1e-12 || !full.warnings.is_empty());
}

#[test]
fn r_hoid_selects_columns() {
    let t = low_rank(&[14, 12, 10], &[3, 2, 4], 6);
    let d = r_hoid(&t, &cfg(&[3, 2, 4])).unwrap();
    assert!(error(&t, &d) <= 1e-8);
    let sel = d.selected.as_ref().unwrap();
    for n in 0..3 {
        let unf = t.unfold(n).unwrap();
        for (k, &col) in sel[n].iter().enumerate() {
            let diff = (d.model.factor(n).column(k) - unf.column(col)).norm();
            assert!(diff <= 1e-12 * unf.norm(), "mode {n}");
        }
    }
}

#[test]
fn r_lshooi_full_matches_hooi() {
    let t = random(&[9, 8, 7], 12);
    let c = cfg(&[3, 2, 3]).init(HooiInit::Hosvd).max_iters(200).tol(1e-14);
    let h = error(&t, &hooi(&t, &c).unwrap());
    let l = r_lshooi(&t, &c.clone().ls_sketch(LsSketch::Full)).unwrap();
    assert!((error(&t, &l) - h).abs() <= 1e-10, "{} vs {h}", error(&t, &l));
    assert_orthonormal(&l);
}

#[test]
fn r_lshooi_random_init_recovers_exact_rank() {
    let t = low_rank(&[15, 14, 13], &[3, 3, 2], 3);
    let d = r_lshooi(&t, &cfg(&[3, 3, 2]).seed(1)).unwrap();
    assert!(error(&t, &d) <= 1e-9, "{}", error(&t, &d));
    assert_orthonormal(&d);
}

#[test]
fn rank_checks() {
    let t = random(&[4, 5, 6], 0);
    assert!(thosvd(&t, &cfg(&[5, 2, 2])).is_err());
    assert!(thosvd(&t, &cfg(&[2, 2])).is_err());
    assert!(sthosvd(&t, &cfg(&[2, 2, 2]).mode_order(vec![0, 0, 1])).is_err());
}

#[test]
fn algorithm_names_round_trip() {
    for a in Algorithm::ALL {
        assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        assert!(!a.counterpart().is_randomized());
    }
    assert_eq!("R_STHOSVD".parse::<Algorithm>().unwrap(), Algorithm::RSthosvd);
    assert!("bogus".parse::<Algorithm>().is_err());
}

#[test]
fn report_fit_is_one_minus_error() {
    let t = low_rank(&[10, 9, 8], &[2, 2, 2], 1);
    let (d, rep) = decompose(&t, Algorithm::RSthosvd, &cfg(&[2, 2, 2])).unwrap();
    assert_eq!(rep.fit, 1.0 - rep.relative_error);
    assert_eq!(rep.passes, d.passes);
}

#[test]
fn residual_bound_holds() {
    for seed in 0..5 {
        let t = random(&[9, 8, 7], 50 + seed);
        let d = thosvd(&t, &cfg(&[3, 3, 3])).unwrap();
        let res = mlrank_residual(&t, &d.model).unwrap();
        let err = t.sub(&d.model.reconstruct()).unwrap().norm_sq();
        assert!(err <= res.iter().map(|r| r * r).sum::<f64>() + 1e-10);
    }
}
