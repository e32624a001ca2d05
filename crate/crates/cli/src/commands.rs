use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use nalgebra::DMatrix;

use tucker_core::cpd::{tucker_then_cp, CpConfig};
use tucker_core::sketch::SamplingDistribution;
use tucker_core::tensor::io as tio;
use tucker_core::tucker::r_st_sparse;
use tucker_core::{metrics, synth, Algorithm, DenseTensor, MultilinearRank, SparseTensor, TuckerConfig, TuckerError};

use crate::args::{BenchArgs, DecomposeArgs, EvalArgs, GenerateArgs, GeneratorArgs, GeneratorKind, SamplingArg, TuningArgs};
use crate::report::{write_csv, MetricsRow};
use crate::NumericalFailure;

/// A Tucker algorithm or Tucker compression followed by CP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Tucker(Algorithm),
    CpAccel { tucker: Algorithm, cp_rank: usize },
}

impl Method {
    pub fn parse(name: &str, tuning: &TuningArgs) -> Result<Self> {
        if name.trim().eq_ignore_ascii_case("cp-accel") {
            let cp_rank = tuning.cp_rank.ok_or_else(|| anyhow!("--algo cp-accel needs --cp-rank"))?;
            let tucker = tuning.tucker_algo.parse()?;
            return Ok(Method::CpAccel { tucker, cp_rank });
        }
        Ok(Method::Tucker(name.parse()?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Tucker(a) => a.name(),
            Method::CpAccel { .. } => "cp-accel",
        }
    }
}

/// Input tensor; sparse files keep their sparse form for R-ST.
pub enum Input {
    Dense(DenseTensor),
    Sparse(SparseTensor, DenseTensor),
}

impl Input {
    pub fn dense(&self) -> &DenseTensor {
        match self {
            Input::Dense(t) | Input::Sparse(_, t) => t,
        }
    }
}

fn is_tns(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tns"))
}

pub fn load_input(path: &Path) -> Result<Input> {
    if is_tns(path) {
        let s = tio::load_tns(path).with_context(|| format!("reading {}", path.display()))?;
        let d = s.to_dense();
        Ok(Input::Sparse(s, d))
    } else {
        Ok(Input::Dense(tio::load_dts(path).with_context(|| format!("reading {}", path.display()))?))
    }
}

pub fn tucker_config(tuning: &TuningArgs, seed: u64) -> Result<TuckerConfig> {
    let mut cfg = TuckerConfig::new(MultilinearRank::new(tuning.rank.clone())?).seed(seed);
    if let Some(p) = tuning.oversampling {
        cfg = cfg.oversampling(p);
    }
    if let Some(q) = tuning.power {
        cfg = cfg.power_iterations(q);
    }
    match (&tuning.pet_k, &tuning.pet_s) {
        (Some(k), Some(s)) => cfg = cfg.pet(k.clone(), s.clone()),
        (Some(k), None) => cfg.pet_k = Some(k.clone()),
        (None, Some(s)) => cfg.pet_s = Some(s.clone()),
        (None, None) => {}
    }
    let dist = match tuning.dist {
        SamplingArg::Uniform => SamplingDistribution::Uniform,
        SamplingArg::LengthSquared => SamplingDistribution::LengthSquared,
    };
    cfg = cfg.sampling(dist, tuning.replacement);
    if let Some(order) = &tuning.mode_order {
        cfg = cfg.mode_order(order.clone());
    }
    if let Some(n) = tuning.max_iters {
        cfg = cfg.max_iters(n);
    }
    if let Some(tol) = tuning.tol {
        cfg = cfg.tol(tol);
    }
    Ok(cfg)
}

/// Result of one run: the metrics and the fitted model.
pub struct Run {
    pub row: MetricsRow,
    pub model: Model,
}

pub enum Model {
    Tucker(tucker_core::TuckerModel),
    Cp(tucker_core::CpModel),
}

/// Runs `method` once, timing only the decomposition itself.
pub fn run_once(input: &Input, method: Method, cfg: &TuckerConfig, trial: usize) -> Result<Run> {
    let t = input.dense();
    let ranks = cfg.rank.as_slice();
    let compression_ratio_inv = metrics::compression_ratio_inv(t.dims(), ranks)?;
    let (model, seconds, passes) = match method {
        Method::Tucker(algo) => {
            let start = Instant::now();
            let d = match (algo, input) {
                (Algorithm::RSt, Input::Sparse(s, _)) => r_st_sparse(s, cfg)?,
                _ => algo.run(t, cfg)?,
            };
            let seconds = start.elapsed().as_secs_f64();
            (Model::Tucker(d.model), seconds, d.passes)
        }
        Method::CpAccel { tucker, cp_rank } => {
            let cp = CpConfig::new(cp_rank).seed(cfg.seed);
            let start = Instant::now();
            let fit = tucker_then_cp(t, tucker, cfg, &cp)?;
            let seconds = start.elapsed().as_secs_f64();
            for w in &fit.core_fit.warnings {
                log::warn!("{w}");
            }
            (Model::Cp(fit.model), seconds, fit.tucker.passes)
        }
    };
    let relative_error = match &model {
        Model::Tucker(m) => metrics::relative_error(t, m)?,
        Model::Cp(m) => metrics::relative_error_dense(t, &m.reconstruct())?,
    };
    if !relative_error.is_finite() {
        return Err(NumericalFailure(format!("{} produced a non-finite error", method.name())).into());
    }
    let row = MetricsRow {
        algo: method.name().to_string(),
        trial,
        relative_error,
        fit: 1.0 - relative_error,
        wall_time_s: seconds,
        compression_ratio_inv,
        passes,
    };
    Ok(Run { row, model })
}

pub fn generate_tensor(g: &GeneratorArgs, rank: Option<&[usize]>, seed: u64) -> Result<Input> {
    if let Some(snr) = g.snr_db {
        if !snr.is_finite() {
            bail!("--snr-db must be finite");
        }
    }
    let input = match g.generator {
        GeneratorKind::LowRank => {
            let r = g.gen_rank.as_deref().or(rank).ok_or_else(|| anyhow!("low-rank generator needs --gen-rank or --rank"))?;
            Input::Dense(synth::gen_low_rank(&g.dims, &MultilinearRank::new(r.to_vec())?, seed)?)
        }
        GeneratorKind::Function => Input::Dense(synth::gen_function(&g.dims)?),
        GeneratorKind::Hilbert => Input::Dense(synth::gen_hilbert(&g.dims)?),
        GeneratorKind::SparseCp => {
            let s = synth::gen_sparse_cp(&g.dims, g.gamma, g.sparsity, seed)?;
            let d = s.to_dense();
            Input::Sparse(s, d)
        }
    };
    match g.snr_db {
        None => Ok(input),
        Some(snr) => {
            // Noise makes the tensor dense.
            let (noisy, realized) = synth::add_noise(input.dense(), snr, seed ^ 0x6e6f697365)?;
            info!("requested SNR {snr} dB, realized {realized} dB");
            Ok(Input::Dense(noisy))
        }
    }
}

fn csv_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn generate(args: &GenerateArgs) -> Result<()> {
    let input = generate_tensor(&args.generator, args.rank.as_deref(), args.seed)?;
    match (&input, is_tns(&args.output)) {
        (Input::Sparse(s, _), true) => tio::save_tns(s, &args.output)?,
        (Input::Dense(d), true) => tio::save_tns(&SparseTensor::from_dense(d), &args.output)?,
        (_, false) => tio::save_dts(input.dense(), &args.output)?,
    }
    info!("wrote {:?} tensor to {}", input.dense().dims(), args.output.display());
    Ok(())
}

fn matrix_tensor(m: &DMatrix<f64>) -> Result<DenseTensor> {
    // Column-major storage is first-mode-fastest.
    Ok(DenseTensor::from_vec(vec![m.nrows(), m.ncols()], m.as_slice().to_vec())?)
}

fn save_model(model: &Model, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match model {
        Model::Tucker(m) => {
            tio::save_dts(m.core(), dir.join("core.dts"))?;
            for (n, q) in m.factors().iter().enumerate() {
                tio::save_dts(&matrix_tensor(q)?, dir.join(format!("factor_{n}.dts")))?;
            }
        }
        Model::Cp(m) => {
            tio::save_dts(&DenseTensor::from_vec(vec![m.rank()], m.weights.clone())?, dir.join("weights.dts"))?;
            for (n, a) in m.factors.iter().enumerate() {
                tio::save_dts(&matrix_tensor(a)?, dir.join(format!("factor_{n}.dts")))?;
            }
        }
    }
    Ok(())
}

pub fn decompose(args: &DecomposeArgs) -> Result<()> {
    let method = Method::parse(&args.algo, &args.tuning)?;
    let input = load_input(&args.input)?;
    let cfg = tucker_config(&args.tuning, args.tuning.seed)?;
    let run = run_once(&input, method, &cfg, 0)?;
    if let Some(dir) = &args.save_dir {
        save_model(&run.model, dir)?;
    }
    write_csv(&[run.row], csv_sink(args.output.as_deref())?)
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    Ok(())
}

/// Trial `k` uses seed `base + k`.
pub fn eval(args: &EvalArgs) -> Result<()> {
    check_trials(args.trials)?;
    let methods: Vec<Method> = args.algo.iter().map(|a| Method::parse(a, &args.tuning)).collect::<Result<_>>()?;
    let input = load_input(&args.input)?;
    let mut rows = Vec::new();
    for &method in &methods {
        for trial in 0..args.trials {
            let cfg = tucker_config(&args.tuning, args.tuning.seed.wrapping_add(trial as u64))?;
            rows.push(run_once(&input, method, &cfg, trial)?.row);
        }
    }
    write_csv(&rows, csv_sink(args.output.as_deref())?)
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    check_trials(args.trials)?;
    let methods: Vec<Method> = args.algo.iter().map(|a| Method::parse(a, &args.tuning)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for trial in 0..args.trials {
        let seed = args.tuning.seed.wrapping_add(trial as u64);
        let input = generate_tensor(&args.generator, Some(&args.tuning.rank), seed)?;
        for &method in &methods {
            let cfg = tucker_config(&args.tuning, seed)?;
            rows.push(run_once(&input, method, &cfg, trial)?.row);
        }
    }
    write_csv(&rows, csv_sink(args.output.as_deref())?)
}

/// Whether an error is a numerical failure rather than bad input.
pub fn is_numerical(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<NumericalFailure>()
            || matches!(
                e.downcast_ref::<TuckerError>(),
                Some(TuckerError::ZeroTensor | TuckerError::NotOrthonormal(_) | TuckerError::InsufficientSupport { .. })
            )
    })
}
