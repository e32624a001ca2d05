use nalgebra::DMatrix;

use crate::error::{Result, TuckerError};
use crate::rng::Distribution;
use crate::sketch::SamplingDistribution;
use crate::tensor::{MultilinearRank, Shape, TuckerModel};

/// How leading left singular vectors of an unfolding are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeadingVectors {
    /// Gram route when the unfolding has more than four times as many
    /// columns as rows, SVD otherwise.
    #[default]
    Auto,
    /// SVD of the materialized unfolding.
    Svd,
    /// Eigendecomposition of `X_(n) X_(n)^T`.
    Gram,
}

/// Initialization of the HOOI-type iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HooiInit {
    /// Truncated HOSVD factors.
    Hosvd,
    /// Random factors (Gaussian for HOOI and RP-HOOI, uniform on `[0, 1)`
    /// together with a uniform core for R-LSHOOI).
    Random,
}

/// Sketch used by R-LSHOOI for its least-squares subproblems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LsSketch {
    /// Count-sketch with per-mode hashes, drawn once and reused across
    /// iterations.
    #[default]
    CountSketch,
    /// No sketching: the exact least-squares problems.
    Full,
}

/// Parameters shared by all Tucker algorithms. Fields that an algorithm
/// does not use are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerConfig {
    pub rank: MultilinearRank,
    /// Oversampling `p` of the random projections.
    pub oversampling: usize,
    /// Power iterations `q` of the random projections.
    pub power_iterations: usize,
    pub distribution: Distribution,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop iterating once the fit changes by less than this.
    pub tol: f64,
    /// Mode visiting order of the sequentially truncated variants.
    pub mode_order: Option<Vec<usize>>,
    pub leading: LeadingVectors,
    /// Truncate the working tensor of STHOSVD through the SVD factors
    /// (`Sigma V^T`) instead of a mode product.
    pub sthosvd_shortcut: bool,
    /// Sketch `X x_{p!=n} Omega_p^T` instead of `X_(n) Omega` in RP-HOSVD.
    pub memory_efficient: bool,
    pub init: Option<HooiInit>,
    /// R-PET range sketch sizes `K_n` (default `2 R_n`).
    pub pet_k: Option<Vec<usize>>,
    /// R-PET core sketch sizes `S_n` (default `2 K_n + 1`).
    pub pet_s: Option<Vec<usize>>,
    pub sampling: SamplingDistribution,
    pub replacement: bool,
    pub ls_sketch: LsSketch,
    /// R-LSHOOI sketch size factor: `multiplier * prod_{p != n} R_p` rows for
    /// the mode-`n` factor problem and `multiplier * prod R_p` for the core.
    pub ls_multiplier: usize,
}

impl TuckerConfig {
    pub const DEFAULT_MAX_ITERS: usize = 50;
    pub const DEFAULT_TOL: f64 = 1e-8;

    pub fn new(rank: MultilinearRank) -> Self {
        Self {
            rank,
            oversampling: 10,
            power_iterations: 2,
            distribution: Distribution::Gaussian,
            seed: 0,
            max_iters: Self::DEFAULT_MAX_ITERS,
            tol: Self::DEFAULT_TOL,
            mode_order: None,
            leading: LeadingVectors::Auto,
            sthosvd_shortcut: false,
            memory_efficient: false,
            init: None,
            pet_k: None,
            pet_s: None,
            sampling: SamplingDistribution::Uniform,
            replacement: false,
            ls_sketch: LsSketch::CountSketch,
            ls_multiplier: 10,
        }
    }

    /// Convenience constructor from a rank list.
    pub fn with_ranks(ranks: impl Into<Vec<usize>>) -> Result<Self> {
        Ok(Self::new(MultilinearRank::new(ranks)?))
    }

    /// No oversampling and no power iterations, for exactly low-rank data.
    pub fn noiseless(mut self) -> Self {
        self.oversampling = 0;
        self.power_iterations = 0;
        self
    }

    pub fn oversampling(mut self, p: usize) -> Self {
        self.oversampling = p;
        self
    }

    pub fn power_iterations(mut self, q: usize) -> Self {
        self.power_iterations = q;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn mode_order(mut self, order: Vec<usize>) -> Self {
        self.mode_order = Some(order);
        self
    }

    pub fn leading(mut self, l: LeadingVectors) -> Self {
        self.leading = l;
        self
    }

    pub fn init(mut self, init: HooiInit) -> Self {
        self.init = Some(init);
        self
    }

    pub fn pet(mut self, k: Vec<usize>, s: Vec<usize>) -> Self {
        self.pet_k = Some(k);
        self.pet_s = Some(s);
        self
    }

    pub fn sampling(mut self, dist: SamplingDistribution, replacement: bool) -> Self {
        self.sampling = dist;
        self.replacement = replacement;
        self
    }

    pub fn ls_sketch(mut self, s: LsSketch) -> Self {
        self.ls_sketch = s;
        self
    }

    /// Validate the rank against `shape` and return the mode order.
    pub(crate) fn checked_order(&self, shape: &Shape) -> Result<Vec<usize>> {
        self.rank.check(shape)?;
        for m in 0..shape.order() {
            let cols = shape.len_without(m);
            if self.rank.get(m) > cols {
                return Err(TuckerError::RankTooLarge { rank: self.rank.get(m), dim: cols });
            }
        }
        let n = shape.order();
        match &self.mode_order {
            None => Ok((0..n).collect()),
            Some(order) => {
                let mut seen = vec![false; n];
                if order.len() != n {
                    return Err(TuckerError::InvalidParameter(format!(
                        "mode order has {} entries, tensor has order {n}",
                        order.len()
                    )));
                }
                for &m in order {
                    shape.check_mode(m)?;
                    if std::mem::replace(&mut seen[m], true) {
                        return Err(TuckerError::DuplicateMode(m));
                    }
                }
                Ok(order.clone())
            }
        }
    }

    /// Projection size `min(R_n + p, limit)`.
    pub(crate) fn sketch_size(&self, mode: usize, limit: usize) -> usize {
        (self.rank.get(mode) + self.oversampling).min(limit)
    }
}

/// Output of a Tucker algorithm.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub model: TuckerModel,
    /// Completed sweeps of the iterative algorithms; zero otherwise.
    pub iterations: usize,
    /// Full reads of the input tensor.
    pub passes: usize,
    /// Fit after initialization and after every sweep (iterative
    /// algorithms only).
    pub fit_trace: Vec<f64>,
    /// Selected unfolding columns per mode (sampling algorithms only).
    pub selected: Option<Vec<Vec<usize>>>,
    pub warnings: Vec<String>,
}

impl Decomposition {
    pub(crate) fn direct(model: TuckerModel, passes: usize) -> Self {
        Self { model, iterations: 0, passes, fit_trace: Vec::new(), selected: None, warnings: Vec::new() }
    }

    pub(crate) fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        self.model.factors()
    }
}
