//! Reproducible experiment runner.
//!
//! A single JSON document describes one experiment (kernels inline as
//! nested arrays or by file reference); identical configs produce
//! byte-identical outputs apart from a timestamp header line that the
//! `reproducible` flag suppresses. All floating-point output carries 17
//! significant digits so files round-trip exactly.

use crate::chaos2::{
    cumulant_set2, exact_symgamma_kernel, sample_chaos2, six_moment_check, vg_bound2, Kernel2,
};
use crate::empirical::{
    homogeneous_sum, k_statistics, multivariate_bound, wasserstein_1d, wasserstein_to_table,
    BaseLaw, HomogeneousCoeff, SampleSet,
};
use crate::error::{Result, VgError};
use crate::numeric::factorial;
use crate::report::BoundReport;
use crate::rng::SeedStream;
use crate::stein::{
    residual_symgamma, residual_vg, solve_stein, stein_constants, GridSpec, Polynomial, SmoothFn,
};
use crate::tensorq::{
    gamma3_decomp, mixed_sum_bound, sample_multiple_integral, symgamma_contraction_bound,
    vg_contraction_bound, SymTensor,
};
use crate::vgdist::{vg_sample, CdfTable, SpecialCase, VGParams};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn default_mc() -> usize {
    1_000_000
}

/// Kernel description: inline rows, a diagonal, a spectrum, the exact
/// symmetric-Gamma spectrum, or a CSV file reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    Rows(Vec<Vec<f64>>),
    Diag(Vec<f64>),
    Spectrum(Vec<f64>),
    ExactSymGamma { m: usize, lambda: f64 },
    File(PathBuf),
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel2> {
        match self {
            KernelSpec::Rows(rows) => Kernel2::from_rows(rows),
            KernelSpec::Diag(diag) => Ok(Kernel2::diagonal(diag)),
            KernelSpec::Spectrum(spectrum) => Ok(Kernel2::diagonal(spectrum)),
            KernelSpec::ExactSymGamma { m, lambda } => {
                Ok(exact_symgamma_kernel(*m, *lambda).embed())
            }
            KernelSpec::File(file) => Kernel2::from_csv(&std::fs::read_to_string(file)?),
        }
    }
}

/// Dense symmetric tensor description (flat entries with order and dim),
/// or a text file reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorSpec {
    Inline {
        order: usize,
        dim: usize,
        entries: Vec<f64>,
    },
    File {
        file: PathBuf,
    },
}

impl TensorSpec {
    pub fn build(&self) -> Result<SymTensor> {
        match self {
            TensorSpec::Inline { order, dim, entries } => {
                SymTensor::new(*order, *dim, entries.clone())
            }
            TensorSpec::File { file } => SymTensor::from_text(&std::fs::read_to_string(file)?),
        }
    }
}

/// Target law: either raw shape parameters (centred convention) or a
/// named special case.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Special(SpecialCase),
    Vg { r: f64, theta: f64, sigma: f64 },
}

impl TargetSpec {
    pub fn params(&self) -> Result<VGParams> {
        match self {
            TargetSpec::Special(s) => s.params(),
            TargetSpec::Vg { r, theta, sigma } => VGParams::centred(*r, *theta, *sigma),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SixMomentConfig {
    pub base: KernelSpec,
    pub perturbation: KernelSpec,
    pub target: TargetSpec,
    pub ns: Vec<u32>,
    #[serde(default = "default_mc")]
    pub mc: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltConfig {
    /// Kernel dimensions along the sequence; each must be even so the
    /// balanced spectrum has vanishing odd cumulants.
    pub dims: Vec<usize>,
    pub sigma2: f64,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniversalityConfig {
    pub sizes: Vec<usize>,
    #[serde(default = "default_mc")]
    pub mc: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSpec {
    Kernel { kernel: KernelSpec },
    Tensor { tensor: TensorSpec },
    Target { target: TargetSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CumulantsConfig {
    #[serde(flatten)]
    pub source: SourceSpec,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundConfig {
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub tensor: Option<TensorSpec>,
    /// Second tensor selects the mixed two-chaos bound.
    #[serde(default)]
    pub tensor2: Option<TensorSpec>,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    /// Symmetric-target rate for the tensor-only forms.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteinCheckConfig {
    pub target: TargetSpec,
    #[serde(default = "default_degree")]
    pub max_degree: usize,
    /// Solve the Stein equation for a battery of Lipschitz test functions
    /// and check the closed-form bounds (symmetric integer-shape targets).
    #[serde(default)]
    pub solve: bool,
    #[serde(default)]
    pub name: Option<String>,
}

fn default_degree() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleConfig {
    #[serde(flatten)]
    pub source: SourceSpec,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultivariateConfig {
    pub kernels: Vec<KernelSpec>,
    pub targets: Vec<TargetSpec>,
    #[serde(default = "default_mc")]
    pub mc: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub name: Option<String>,
}

/// One experiment; the `kind` tag selects the variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    SixMoment(SixMomentConfig),
    Clt(CltConfig),
    Universality(UniversalityConfig),
    Cumulants(CumulantsConfig),
    Bound(BoundConfig),
    SteinCheck(SteinCheckConfig),
    Sample(SampleConfig),
    Multivariate(MultivariateConfig),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentConfig::SixMoment(_) => "six_moment",
            ExperimentConfig::Clt(_) => "clt",
            ExperimentConfig::Universality(_) => "universality",
            ExperimentConfig::Cumulants(_) => "cumulants",
            ExperimentConfig::Bound(_) => "bound",
            ExperimentConfig::SteinCheck(_) => "stein_check",
            ExperimentConfig::Sample(_) => "sample",
            ExperimentConfig::Multivariate(_) => "multivariate",
        }
    }

    fn name(&self) -> String {
        let explicit = match self {
            ExperimentConfig::SixMoment(c) => &c.name,
            ExperimentConfig::Clt(c) => &c.name,
            ExperimentConfig::Universality(c) => &c.name,
            ExperimentConfig::Cumulants(c) => &c.name,
            ExperimentConfig::Bound(c) => &c.name,
            ExperimentConfig::SteinCheck(c) => &c.name,
            ExperimentConfig::Sample(c) => &c.name,
            ExperimentConfig::Multivariate(c) => &c.name,
        };
        explicit.clone().unwrap_or_else(|| self.kind_name().to_string())
    }
}

/// Runtime options; CLI flags override config fields.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub mc: Option<usize>,
    /// Suppress the timestamp header so replays are byte-identical.
    pub reproducible: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("out"),
            seed: None,
            mc: None,
            reproducible: true,
        }
    }
}

/// Files written by a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Copy)]
enum Cell {
    Int(i64),
    Num(f64),
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self, reproducible: bool) -> String {
        let mut s = String::new();
        if !reproducible {
            let ts = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            s.push_str(&format!("# timestamp_unix={ts}\n"));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Num(v) => format!("{:.16e}", v),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value)?;
    write_file(dir, name, &(text + "\n"))
}

/// Executes one experiment and writes its outputs.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    match config {
        ExperimentConfig::SixMoment(c) => run_six_moment(c, config, opts),
        ExperimentConfig::Clt(c) => run_clt(c, config, opts),
        ExperimentConfig::Universality(c) => run_universality(c, config, opts),
        ExperimentConfig::Cumulants(c) => run_cumulants(c, config, opts),
        ExperimentConfig::Bound(c) => run_bound(c, config, opts),
        ExperimentConfig::SteinCheck(c) => run_stein_check(c, config, opts),
        ExperimentConfig::Sample(c) => run_sample(c, config, opts),
        ExperimentConfig::Multivariate(c) => run_multivariate(c, config, opts),
    }
}

/// CLT-style sequence kernel: a balanced spectrum of `dim` eigenvalues
/// `+-sqrt(sigma2 / (2 dim))`, which has variance exactly `sigma2` and
/// vanishing odd cumulants.
pub fn balanced_clt_kernel(dim: usize, sigma2: f64) -> Result<Kernel2> {
    if dim == 0 || dim % 2 != 0 {
        return Err(VgError::ConfigInvalid(format!(
            "balanced kernel needs a positive even dimension, got {dim}"
        )));
    }
    let a = (sigma2 / (2.0 * dim as f64)).sqrt();
    let mut diag = vec![a; dim / 2];
    diag.extend(std::iter::repeat_n(-a, dim / 2));
    Ok(Kernel2::diagonal(&diag))
}

fn run_six_moment(
    c: &SixMomentConfig,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let base = c.base.build()?;
    let pert = c.perturbation.build()?;
    let target = c.target.params()?;
    let mc = opts.mc.unwrap_or(c.mc);
    let seed = opts.seed.unwrap_or(c.seed);
    let table_target = CdfTable::build(&target.to_mean_zero())?;
    let symmetric = target.theta() == 0.0;
    let mut table = Table::new(if symmetric {
        vec![
            "n",
            "m2_gap",
            "m4_gap",
            "m6_gap",
            "bound_interior",
            "bound_total",
            "empirical_dw",
        ]
    } else {
        vec![
            "n",
            "m2_gap",
            "m3_gap",
            "m4_gap",
            "m5_gap",
            "m6_gap",
            "bound_interior",
            "bound_total",
            "empirical_dw",
        ]
    });
    let mut reports = Vec::new();
    let stream = SeedStream::new(seed);
    for &n in &c.ns {
        let kernel = base.add(&pert.scale(1.0 / n as f64))?;
        let gaps = six_moment_check(&kernel, &target)?;
        let bound = vg_bound2(&kernel, &target)?;
        let sample = sample_chaos2(&kernel, mc, stream.substream(n as u64).seed());
        let dw = wasserstein_to_table(&sample, &table_target)?;
        let mut row = vec![Cell::Int(n as i64)];
        for &(_, g) in &gaps.gaps {
            row.push(Cell::Num(g));
        }
        row.push(Cell::Num(bound.value("interior").unwrap_or(f64::NAN)));
        row.push(Cell::Num(bound.total));
        row.push(Cell::Num(dw));
        table.push(row);
        reports.push((n, bound));
    }
    let name = config.name();
    let csv = write_file(&opts.out_dir, &format!("{name}.csv"), &table.to_csv(opts.reproducible))?;
    let json = write_json(
        &opts.out_dir,
        &format!("{name}.json"),
        &serde_json::json!({
            "kind": "six_moment",
            "mc": mc,
            "seed": seed,
            "reports": reports.iter().map(|(n, b)| serde_json::json!({"n": n, "bound": b})).collect::<Vec<_>>(),
        }),
    )?;
    Ok(RunOutput { files: vec![csv, json] })
}

fn run_clt(c: &CltConfig, config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let mut table = Table::new(vec![
        "n",
        "kappa2",
        "kappa3",
        "kappa6",
        "gamma3_second_moment",
        "sqrt_form",
        "variance_gap",
        "bound_total",
    ]);
    for &dim in &c.dims {
        let kernel = balanced_clt_kernel(dim, c.sigma2)?;
        let report = crate::chaos2::gauss_bound2(&kernel, c.sigma2)?;
        let k = cumulant_set2(&kernel);
        table.push(vec![
            Cell::Int(dim as i64),
            Cell::Num(k.kappa(2)),
            Cell::Num(k.kappa(3)),
            Cell::Num(k.kappa(6)),
            Cell::Num(report.value("gamma3_second_moment").unwrap_or(f64::NAN)),
            Cell::Num(report.value("sqrt_gamma3_second_moment").unwrap_or(f64::NAN)),
            Cell::Num(report.value("variance_gap").unwrap_or(f64::NAN)),
            Cell::Num(report.total),
        ]);
    }
    let name = config.name();
    let csv = write_file(&opts.out_dir, &format!("{name}.csv"), &table.to_csv(opts.reproducible))?;
    Ok(RunOutput { files: vec![csv] })
}

fn run_universality(
    c: &UniversalityConfig,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let mc = opts.mc.unwrap_or(c.mc);
    let seed = opts.seed.unwrap_or(c.seed);
    let stream = SeedStream::new(seed);
    let mut table = Table::new(vec!["n", "d_w_rademacher_gaussian"]);
    for &n in &c.sizes {
        let coeff = HomogeneousCoeff::banded_unit_variance(n)?;
        let rademacher = homogeneous_sum(
            &coeff,
            BaseLaw::Rademacher,
            mc,
            stream.substream(2 * n as u64).seed(),
        );
        let gaussian = homogeneous_sum(
            &coeff,
            BaseLaw::Gaussian,
            mc,
            stream.substream(2 * n as u64 + 1).seed(),
        );
        let dw = wasserstein_1d(&rademacher, &gaussian)?;
        table.push(vec![Cell::Int(n as i64), Cell::Num(dw)]);
    }
    let name = config.name();
    let csv = write_file(&opts.out_dir, &format!("{name}.csv"), &table.to_csv(opts.reproducible))?;
    Ok(RunOutput { files: vec![csv] })
}

fn run_cumulants(
    c: &CumulantsConfig,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let name = config.name();
    let payload = match &c.source {
        SourceSpec::Kernel { kernel } => {
            let k = cumulant_set2(&kernel.build()?);
            serde_json::json!({"source": "kernel", "kappa": k.kappas()})
        }
        SourceSpec::Tensor { tensor } => {
            let f = tensor.build()?;
            let kappa2 = factorial(f.order()) * f.inner_product(&f)?;
            let kappa3 = 2.0 * gamma3_decomp(&f)?.level0().unwrap_or(0.0);
            serde_json::json!({
                "source": "tensor",
                "order": f.order(),
                "kappa2": kappa2,
                "kappa3": kappa3,
            })
        }
        SourceSpec::Target { target } => {
            let k = crate::vgdist::vg_cumulants(&target.params()?)?;
            serde_json::json!({"source": "target", "kappa": k.kappas()})
        }
    };
    let json = write_json(&opts.out_dir, &format!("{name}.json"), &payload)?;
    Ok(RunOutput { files: vec![json] })
}

fn run_bound(c: &BoundConfig, config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let report: BoundReport = match (&c.kernel, &c.tensor, &c.tensor2) {
        (Some(kernel), None, None) => {
            let target = c
                .target
                .as_ref()
                .ok_or_else(|| VgError::ConfigInvalid("kernel bound needs a target".into()))?
                .params()?;
            vg_bound2(&kernel.build()?, &target)?
        }
        (None, Some(tensor), None) => {
            let f = tensor.build()?;
            if let Some(target) = &c.target {
                vg_contraction_bound(&f, &target.params()?)?
            } else if let Some(lambda) = c.lambda {
                let total = symgamma_contraction_bound(&f, lambda)?;
                let mut rep = BoundReport::new();
                rep.push("interior", total);
                rep.total = total;
                rep
            } else {
                return Err(VgError::ConfigInvalid(
                    "tensor bound needs a target or a lambda".into(),
                ));
            }
        }
        (None, Some(tensor), Some(tensor2)) => {
            let lambda = c
                .lambda
                .ok_or_else(|| VgError::ConfigInvalid("mixed bound needs lambda".into()))?;
            let total = mixed_sum_bound(&tensor.build()?, &tensor2.build()?, lambda)?;
            let mut rep = BoundReport::new();
            rep.push("mixed_sum_bound", total);
            rep.total = total;
            rep
        }
        _ => {
            return Err(VgError::ConfigInvalid(
                "bound config needs exactly one of kernel / tensor / tensor pair".into(),
            ))
        }
    };
    let name = config.name();
    let json = write_json(&opts.out_dir, &format!("{name}.json"), &report)?;
    let mut table = Table::new(vec!["term", "value"]);
    // Terms as CSV for quick diffing; names in the JSON carry the detail.
    for (i, t) in report.terms.iter().enumerate() {
        table.push(vec![Cell::Int(i as i64), Cell::Num(t.value)]);
    }
    let csv = write_file(&opts.out_dir, &format!("{name}.csv"), &table.to_csv(opts.reproducible))?;
    Ok(RunOutput { files: vec![json, csv] })
}

fn run_stein_check(
    c: &SteinCheckConfig,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let target = c.target.params()?;
    let mut rows: Vec<serde_json::Value> = Vec::new();
    for deg in 0..=c.max_degree {
        let f = Polynomial::monomial(deg);
        let res = residual_vg(&target, &f)?;
        rows.push(serde_json::json!({"check": "vg_characterization", "degree": deg, "residual": res}));
        if target.theta() == 0.0 {
            let res = residual_symgamma(1.0 / target.sigma(), 0.5 * target.r(), &f)?;
            rows.push(serde_json::json!({"check": "symgamma_characterization", "degree": deg, "residual": res}));
        }
    }
    if target.theta() == 0.0 {
        let shape = 0.5 * target.r();
        if shape.fract() == 0.0 {
            let cst = stein_constants(1.0 / target.sigma(), shape)?;
            rows.push(serde_json::json!({
                "check": "constants",
                "c0": cst.c0, "c1": cst.c1, "c2_1": cst.c2_1, "c2_2": cst.c2_2,
            }));
        }
    }
    let mut files = Vec::new();
    if c.solve {
        let h = SmoothFn {
            f: |x: f64| x.tanh(),
            df: |x: f64| 1.0 / x.cosh().powi(2),
            d2f: |x: f64| -2.0 * x.tanh() / x.cosh().powi(2),
        };
        let sol = solve_stein(&target, &h, &GridSpec::default())?;
        rows.push(serde_json::json!({
            "check": "stein_solve",
            "h": "tanh",
            "max_interior_residual": sol.max_interior_residual,
            "sup_f": sol.sup_f(),
            "sup_f1": sol.sup_f1(),
            "sup_f2": sol.sup_f2(),
            "expectation_h": sol.expectation_h,
        }));
        let name = config.name();
        files.push(write_file(
            &opts.out_dir,
            &format!("{name}_solution.csv"),
            &sol.to_csv(),
        )?);
    }
    let name = config.name();
    files.insert(
        0,
        write_json(&opts.out_dir, &format!("{name}.json"), &serde_json::json!({"rows": rows}))?,
    );
    Ok(RunOutput { files })
}

fn run_sample(c: &SampleConfig, config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let seed = opts.seed.unwrap_or(c.seed);
    let n = opts.mc.unwrap_or(c.n);
    let sample: SampleSet = match &c.source {
        SourceSpec::Kernel { kernel } => sample_chaos2(&kernel.build()?, n, seed),
        SourceSpec::Tensor { tensor } => sample_multiple_integral(&tensor.build()?, n, seed),
        SourceSpec::Target { target } => vg_sample(&target.params()?.to_mean_zero(), n, seed),
    };
    let name = config.name();
    let csv = write_file(&opts.out_dir, &format!("{name}.csv"), &sample.to_csv())?;
    // Summary with k-statistics when the sample is large enough.
    let files = if sample.len() >= 7 {
        let k = k_statistics(&sample, 6)?;
        let json = write_json(
            &opts.out_dir,
            &format!("{name}.json"),
            &serde_json::json!({
                "n": sample.len(),
                "seed": sample.seed(),
                "meta": sample.meta(),
                "k_statistics": k.estimate.kappas(),
                "std_error": k.std_error,
            }),
        )?;
        vec![csv, json]
    } else {
        vec![csv]
    };
    Ok(RunOutput { files })
}

fn run_multivariate(
    c: &MultivariateConfig,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let kernels: Result<Vec<Kernel2>> = c.kernels.iter().map(|k| k.build()).collect();
    let targets: Result<Vec<VGParams>> = c.targets.iter().map(|t| t.params()).collect();
    let mc = opts.mc.unwrap_or(c.mc);
    let seed = opts.seed.unwrap_or(c.seed);
    let report = multivariate_bound(&kernels?, &targets?, mc, seed)?;
    let name = config.name();
    let json = write_json(&opts.out_dir, &format!("{name}.json"), &report)?;
    Ok(RunOutput { files: vec![json] })
}
