//! Randomized SVD (Gaussian range finder with power iterations).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::svd::finish;
use super::{economy_svd, thin_qr, DenseMatrix, LinalgError, Result, SvdFactorization, SvdMethod};

/// Parameters of the randomized range finder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsvdParams {
    pub target_rank: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl RsvdParams {
    pub fn new(target_rank: usize, seed: u64) -> Self {
        RsvdParams {
            target_rank,
            oversampling: 10,
            power_iterations: 1,
            seed,
        }
    }
}

/// Leading `target_rank` singular triplets of `x`.
///
/// A Gaussian test matrix with `target_rank + oversampling` columns (capped
/// at `min(rows, cols)`) samples the range of `x`; each power iteration
/// re-orthonormalizes before applying `x xᵀ` again. The small projected
/// matrix `Qᵀx` is then factored exactly.
pub fn randomized_svd(x: &DenseMatrix, params: RsvdParams) -> Result<SvdFactorization> {
    let RsvdParams {
        target_rank,
        oversampling,
        power_iterations,
        seed,
    } = params;
    let full = x.rows().min(x.cols());
    if target_rank == 0 || target_rank > full {
        return Err(LinalgError::Dimension(format!(
            "target rank {target_rank} outside 1..={full} for a {}x{} matrix",
            x.rows(),
            x.cols()
        )));
    }
    x.check_finite()?;

    let samples = (target_rank + oversampling).min(full);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DenseMatrix::from_fn(x.cols(), samples, |_, _| StandardNormal.sample(&mut rng));

    let mut q = thin_qr(&x.matmul(&omega)?)?;
    for _ in 0..power_iterations {
        let z = thin_qr(&x.tr_matmul(&q)?)?;
        q = thin_qr(&x.matmul(&z)?)?;
    }

    let b = q.tr_matmul(x)?;
    let small = economy_svd(&b)?;
    let u = q.matmul(small.u())?.leading_columns(target_rank);
    let sigma = small.sigma()[..target_rank].to_vec();
    let v = small.vt().leading_rows(target_rank).transpose();
    Ok(finish(
        u,
        sigma,
        v,
        SvdMethod::Randomized {
            target_rank,
            oversampling,
            power_iterations,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn recovers_exact_low_rank_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random(100, 3, &mut rng).matmul(&random(3, 40, &mut rng)).unwrap();
        let exact = economy_svd(&x).unwrap();
        let approx = randomized_svd(&x, RsvdParams::new(5, 1)).unwrap();
        for i in 0..3 {
            assert!((approx.sigma()[i] - exact.sigma()[i]).abs() <= 1e-8);
        }
        for i in 3..5 {
            assert!(approx.sigma()[i] <= 1e-8);
        }
    }

    #[test]
    fn zero_matrix() {
        let f = randomized_svd(&DenseMatrix::zeros(20, 10), RsvdParams::new(3, 0)).unwrap();
        assert_eq!(f.sigma(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn full_target_rank_matches_economy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(30, 12, &mut rng);
        let exact = economy_svd(&x).unwrap();
        let approx = randomized_svd(&x, RsvdParams::new(12, 9)).unwrap();
        for (a, e) in approx.sigma().iter().zip(exact.sigma()) {
            assert!((a - e).abs() <= 1e-8);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(40, 25, &mut rng);
        let a = randomized_svd(&x, RsvdParams::new(6, 42)).unwrap();
        let b = randomized_svd(&x, RsvdParams::new(6, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn target_rank_out_of_range() {
        let x = DenseMatrix::zeros(5, 4);
        assert!(randomized_svd(&x, RsvdParams::new(0, 0)).is_err());
        assert!(randomized_svd(&x, RsvdParams::new(5, 0)).is_err());
    }
}
