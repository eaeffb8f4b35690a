//! Batch front end: every computation as a reproducible job with CSV or JSON
//! output. A [`JobSpec`] is the fully resolved, serializable job description;
//! it is embedded in JSON outputs and written as a sidecar next to CSV files.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_h_tau, heisenberg_split};
use crate::io::{write_coo_csv, write_entropy_csv, write_hamiltonian_binary};
use crate::model::{haake_thol_delta, Boundary, ModelParams, TauSector};
use crate::mps::{entropy_profile, imaginary_time_ground_state, write_checkpoint, TebdSchedule};
use crate::pool::parallel_map;
use crate::quantum::{sector_norms, DensityMatrix, LindbladPropagator};
use crate::rates::{check_detailed_balance, GlauberRates};
use crate::spectra::{positivity_violations, spectral_report, write_sweep_csv, PositivityRow, KERNEL_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    DbcCheck,
    Spectrum,
    GapScan,
    PositivitySweep,
    LindbladEvolve,
    StationaryStates,
    EntropyProfile,
    HeisenbergSplit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// δ as a number or as the Haake–Thol rule δ = γ/(2−γ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Value(f64),
    Rule(DeltaRule),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaRule {
    #[serde(rename = "haake-thol")]
    HaakeThol,
}

impl DeltaSpec {
    pub fn at(&self, gamma: f64) -> f64 {
        match self {
            DeltaSpec::Value(d) => *d,
            DeltaSpec::Rule(DeltaRule::HaakeThol) => haake_thol_delta(gamma),
        }
    }
}

impl FromStr for DeltaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "haake-thol" {
            return Ok(DeltaSpec::Rule(DeltaRule::HaakeThol));
        }
        s.parse::<f64>()
            .map(DeltaSpec::Value)
            .map_err(|_| Error::Parse(format!("delta {s:?} is neither a number nor haake-thol")))
    }
}

/// Which τ sectors a job visits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TauSelector {
    All,
    Homogeneous,
    TwoFlips,
    DomainWall,
    Bits(u64),
    Signs(TauSector),
}

impl TauSelector {
    pub fn sectors(&self, n_sites: usize) -> Result<Vec<TauSector>> {
        Ok(match self {
            TauSelector::All => {
                if n_sites > 14 {
                    return Err(Error::TooLarge { n_sites, max: 14 });
                }
                (0..1u64 << n_sites).map(|b| TauSector::from_bits(b, n_sites)).collect::<Result<_>>()?
            }
            TauSelector::Homogeneous => vec![TauSector::homogeneous(n_sites)],
            TauSelector::TwoFlips => vec![TauSector::two_flips(n_sites)?],
            TauSelector::DomainWall => vec![TauSector::domain_wall(n_sites)?],
            TauSelector::Bits(b) => vec![TauSector::from_bits(*b, n_sites)?],
            TauSelector::Signs(t) => {
                if t.n_sites() != n_sites {
                    return Err(Error::SizeMismatch { expected: n_sites, found: t.n_sites() });
                }
                vec![t.clone()]
            }
        })
    }
}

impl FromStr for TauSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => TauSelector::All,
            "homogeneous" => TauSelector::Homogeneous,
            "two-flips" => TauSelector::TwoFlips,
            "domain-wall" => TauSelector::DomainWall,
            _ if !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit()) => {
                TauSelector::Bits(s.parse().map_err(|_| Error::Parse(format!("tau bits {s:?} overflow")))?)
            }
            _ => TauSelector::Signs(s.parse()?),
        })
    }
}

impl fmt::Display for TauSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauSelector::All => f.write_str("all"),
            TauSelector::Homogeneous => f.write_str("homogeneous"),
            TauSelector::TwoFlips => f.write_str("two-flips"),
            TauSelector::DomainWall => f.write_str("domain-wall"),
            TauSelector::Bits(b) => write!(f, "{b}"),
            TauSelector::Signs(t) => write!(f, "{t}"),
        }
    }
}

impl TryFrom<String> for TauSelector {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TauSelector> for String {
    fn from(t: TauSelector) -> String {
        t.to_string()
    }
}

/// Initial density matrix for the Lindblad jobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialState {
    Ghz,
    GhzMinus,
    /// Diagonal weights ½ on the two aligned states, corner coherence p − ½.
    GhzMixture(f64),
    Thermal,
    /// |→…→⟩⟨→…→|.
    Uniform,
    File(PathBuf),
}

impl InitialState {
    pub fn build(&self, params: &ModelParams) -> Result<DensityMatrix> {
        let n = params.n_sites;
        match self {
            InitialState::Ghz => DensityMatrix::ghz(n, true),
            InitialState::GhzMinus => DensityMatrix::ghz(n, false),
            InitialState::GhzMixture(p) => DensityMatrix::ghz_mixture(n, *p),
            InitialState::Thermal => DensityMatrix::thermal(params),
            InitialState::Uniform => DensityMatrix::uniform_superposition(n),
            InitialState::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let rho = DensityMatrix::from_json(&serde_json::from_str(&text)?)?;
                if rho.n_sites() != n {
                    return Err(Error::SizeMismatch { expected: n, found: rho.n_sites() });
                }
                Ok(rho)
            }
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ghz" => InitialState::Ghz,
            "ghz-minus" => InitialState::GhzMinus,
            "thermal" => InitialState::Thermal,
            "uniform" => InitialState::Uniform,
            _ => {
                if let Some(p) = s.strip_prefix("ghz-mixture:") {
                    InitialState::GhzMixture(p.parse().map_err(|_| Error::Parse(format!("bad mixture weight {p:?}")))?)
                } else if let Some(path) = s.strip_prefix("file:") {
                    InitialState::File(PathBuf::from(path))
                } else {
                    return Err(Error::Parse(format!("unknown initial state {s:?}")));
                }
            }
        })
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Ghz => f.write_str("ghz"),
            InitialState::GhzMinus => f.write_str("ghz-minus"),
            InitialState::GhzMixture(p) => write!(f, "ghz-mixture:{p}"),
            InitialState::Thermal => f.write_str("thermal"),
            InitialState::Uniform => f.write_str("uniform"),
            InitialState::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl TryFrom<String> for InitialState {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InitialState> for String {
    fn from(s: InitialState) -> String {
        s.to_string()
    }
}

fn parse_list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(|x| x.trim().parse()).collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {x:?}"))))
        .collect()
}

/// Command-line arguments. All flags are shared; each command reads the ones
/// it needs and rejects missing required ones.
#[derive(Debug, Parser)]
#[command(name = "qkim", version, allow_negative_numbers = true, about = "Quantum kinetic Ising model: sector spectra, Lindblad dynamics and TEBD entropy profiles")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Number of sites.
    #[arg(long)]
    pub n: usize,
    /// γ = tanh 2βJ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// δ, or `haake-thol` for δ = γ/(2−γ).
    #[arg(long, default_value = "0")]
    pub delta: String,
    /// periodic | open (entropy-profile defaults to open).
    #[arg(long)]
    pub boundary: Option<String>,
    /// Γ, the overall rate.
    #[arg(long, default_value_t = 1.0)]
    pub rate_scale: f64,
    /// all | homogeneous | two-flips | domain-wall | integer bits | +/- string.
    #[arg(long, default_value = "homogeneous")]
    pub tau: String,
    /// Comma-separated γ grid for gap-scan and positivity-sweep.
    #[arg(long)]
    pub gammas: Option<String>,
    /// Comma-separated δ grid for positivity-sweep (numbers or haake-thol).
    #[arg(long)]
    pub deltas: Option<String>,
    /// Comma-separated times for lindblad-evolve.
    #[arg(long, default_value = "0.1,1,10")]
    pub times: String,
    /// ghz | ghz-minus | ghz-mixture:P | thermal | uniform | file:PATH.
    #[arg(long, default_value = "ghz")]
    pub initial: String,
    /// Maximum MPS bond dimension.
    #[arg(long, default_value_t = 64)]
    pub chi: usize,
    /// Discarded Schmidt weight threshold.
    #[arg(long, default_value_t = 1e-12)]
    pub cutoff: f64,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// spectrum only: also write the Hamiltonian (.bin dense binary, otherwise COO CSV).
    #[arg(long)]
    pub hamiltonian: Option<PathBuf>,
    /// entropy-profile only: write an MPS checkpoint.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

/// A fully resolved job.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub command: Command,
    pub n_sites: usize,
    pub boundary: Boundary,
    pub gamma: Option<f64>,
    pub delta: DeltaSpec,
    pub rate_scale: f64,
    pub tau: TauSelector,
    pub gammas: Vec<f64>,
    pub deltas: Vec<DeltaSpec>,
    pub times: Vec<f64>,
    pub initial: InitialState,
    pub chi: usize,
    pub cutoff: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub hamiltonian: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

const DEFAULT_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.95];

impl JobSpec {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let boundary = match &cli.boundary {
            Some(b) => b.parse()?,
            None if cli.command == Command::EntropyProfile => Boundary::Open,
            None => Boundary::Periodic,
        };
        let delta: DeltaSpec = cli.delta.parse()?;
        let gammas = match &cli.gammas {
            Some(s) => parse_f64_list(s)?,
            None => DEFAULT_GRID.to_vec(),
        };
        let deltas = match &cli.deltas {
            Some(s) => parse_list(s)?,
            None if cli.command == Command::PositivitySweep => {
                [-1.0, -0.5, 0.0, 0.5, 1.0].into_iter().map(DeltaSpec::Value).collect()
            }
            None => vec![delta],
        };
        let job = JobSpec {
            command: cli.command,
            n_sites: cli.n,
            boundary,
            gamma: cli.gamma,
            delta,
            rate_scale: cli.rate_scale,
            tau: cli.tau.parse()?,
            gammas,
            deltas,
            times: parse_f64_list(&cli.times)?,
            initial: cli.initial.parse()?,
            chi: cli.chi,
            cutoff: cli.cutoff,
            output: cli.output.clone(),
            format: cli.format,
            hamiltonian: cli.hamiltonian.clone(),
            checkpoint: cli.checkpoint.clone(),
        };
        job.validate()?;
        Ok(job)
    }

    /// Command-specific checks, run before any computation.
    pub fn validate(&self) -> Result<()> {
        use Command::*;
        let needs_gamma = !matches!(self.command, GapScan | PositivitySweep | HeisenbergSplit);
        if needs_gamma && self.gamma.is_none() {
            return Err(Error::InvalidParams(format!("{:?} needs --gamma", self.command)));
        }
        if self.command == EntropyProfile && self.boundary != Boundary::Open {
            return Err(Error::Unsupported("entropy-profile runs on open chains".into()));
        }
        if matches!(self.command, GapScan | PositivitySweep) && (self.gammas.is_empty() || self.deltas.is_empty()) {
            return Err(Error::InvalidParams("empty parameter grid".into()));
        }
        if self.command == LindbladEvolve && self.times.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::InvalidParams("times must be nonnegative".into()));
        }
        if self.chi == 0 || !(self.cutoff >= 0.0) {
            return Err(Error::InvalidParams("chi must be positive and cutoff nonnegative".into()));
        }
        if self.hamiltonian.is_some() && self.command != Spectrum {
            return Err(Error::InvalidParams("--hamiltonian only applies to spectrum".into()));
        }
        if self.checkpoint.is_some() && self.command != EntropyProfile {
            return Err(Error::InvalidParams("--checkpoint only applies to entropy-profile".into()));
        }
        if let Some(g) = self.gamma {
            self.params_at(g, &self.delta)?;
        }
        for &g in &self.gammas {
            for d in &self.deltas {
                if matches!(self.command, GapScan | PositivitySweep) {
                    self.params_at(g, d)?;
                }
            }
        }
        Ok(())
    }

    pub fn params_at(&self, gamma: f64, delta: &DeltaSpec) -> Result<ModelParams> {
        ModelParams::new(self.n_sites, gamma, delta.at(gamma))?
            .with_boundary(self.boundary)
            .with_rate_scale(self.rate_scale)
    }

    /// Parameters at the job's single γ, when it has one.
    pub fn params(&self) -> Result<ModelParams> {
        let g = self.gamma.ok_or_else(|| Error::InvalidParams("no --gamma given".into()))?;
        self.params_at(g, &self.delta)
    }
}

/// Rendered job results.
#[derive(Clone, Debug, PartialEq)]
pub struct JobOutput {
    /// Main payload in the requested format.
    pub body: Vec<u8>,
    /// JSON metadata (job, resolved parameters, scalar results). Embedded in
    /// JSON bodies and written as `<output>.json` next to CSV files.
    pub metadata: Value,
}

fn csv_bytes<F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>>(f: F) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        f(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

fn metadata(job: &JobSpec, extra: Value) -> Result<Value> {
    let params = match job.gamma {
        Some(_) => serde_json::to_value(job.params()?)?,
        None => Value::Null,
    };
    Ok(json!({ "job": job, "params": params, "summary": extra }))
}

fn finish(job: &JobSpec, csv: Vec<u8>, result: Value, summary: Value) -> Result<JobOutput> {
    let metadata = metadata(job, summary)?;
    let body = match job.format {
        Format::Csv => csv,
        Format::Json => {
            let mut doc = metadata.clone();
            doc["result"] = result;
            let mut s = serde_json::to_vec_pretty(&doc)?;
            s.push(b'\n');
            s
        }
    };
    Ok(JobOutput { body, metadata })
}

fn grid_rows(job: &JobSpec, jobs: usize) -> Result<Vec<PositivityRow>> {
    let mut tasks = Vec::new();
    for &g in &job.gammas {
        for d in &job.deltas {
            let p = job.params_at(g, d)?;
            for t in job.tau.sectors(job.n_sites)? {
                tasks.push((p, t));
            }
        }
    }
    parallel_map(&tasks, jobs, |(p, t)| -> Result<PositivityRow> {
        let rep = spectral_report(&build_h_tau(t, p)?, KERNEL_TOL)?;
        Ok(PositivityRow {
            gamma: p.gamma,
            delta: p.delta,
            tau_bits: t.bits().ok_or(Error::TooLarge { n_sites: t.n_sites(), max: 64 })?,
            min_eig: rep.min_eigenvalue(),
            kernel_dim: rep.kernel_dim,
            gap: rep.gap,
        })
    })
    .into_iter()
    .collect()
}

/// Runs a job and renders its output without touching the file system
/// (except for `--hamiltonian`, `--checkpoint` and file initial states).
pub fn run(job: &JobSpec, jobs: usize) -> Result<JobOutput> {
    job.validate()?;
    match job.command {
        Command::DbcCheck => {
            let p = job.params()?;
            let rep = check_detailed_balance(&GlauberRates, &p)?;
            let csv = csv_bytes(|w| {
                w.write_record(["holds", "max_violation"])?;
                w.serialize((rep.holds, rep.max_violation))?;
                Ok(())
            })?;
            let v = json!({ "holds": rep.holds, "max_violation": rep.max_violation });
            finish(job, csv, v.clone(), v)
        }
        Command::Spectrum => {
            let p = job.params()?;
            let taus = job.tau.sectors(job.n_sites)?;
            if job.hamiltonian.is_some() && taus.len() != 1 {
                return Err(Error::InvalidParams("--hamiltonian needs a single tau sector".into()));
            }
            let reports = parallel_map(&taus, jobs, |t| -> Result<_> {
                let h = build_h_tau(t, &p)?;
                if let Some(path) = &job.hamiltonian {
                    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
                    if path.extension().is_some_and(|e| e == "bin") {
                        write_hamiltonian_binary(&h, file)?;
                    } else {
                        write_coo_csv(&h.matrix, file)?;
                    }
                }
                Ok((t.clone(), spectral_report(&h, KERNEL_TOL)?))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let csv = csv_bytes(|w| {
                w.write_record(["tau", "index", "value"])?;
                for (t, r) in &reports {
                    for (i, v) in r.eigenvalues.iter().enumerate() {
                        w.serialize((t.to_string(), i, v))?;
                    }
                }
                Ok(())
            })?;
            let result: Vec<Value> = reports
                .iter()
                .map(|(t, r)| {
                    json!({
                        "tau": t.to_string(),
                        "eigenvalues": r.eigenvalues,
                        "kernel_dim": r.kernel_dim,
                        "gap": r.gap,
                    })
                })
                .collect();
            let summary: Vec<Value> = reports
                .iter()
                .map(|(t, r)| json!({ "tau": t.to_string(), "min_eigenvalue": r.min_eigenvalue(), "kernel_dim": r.kernel_dim }))
                .collect();
            finish(job, csv, Value::from(result), Value::from(summary))
        }
        Command::GapScan | Command::PositivitySweep => {
            let rows = grid_rows(job, jobs)?;
            let mut csv = Vec::new();
            write_sweep_csv(&rows, &mut csv)?;
            let summary = if job.command == Command::PositivitySweep {
                let v = positivity_violations(&rows, job.n_sites, KERNEL_TOL);
                json!({ "rows": rows.len(), "violations": v })
            } else {
                json!({ "rows": rows.len() })
            };
            finish(job, csv, serde_json::to_value(&rows)?, summary)
        }
        Command::LindbladEvolve => {
            let p = job.params()?;
            let rho0 = job.initial.build(&p)?;
            let prop = LindbladPropagator::new(&p, jobs)?;
            let mut snapshots = Vec::new();
            let mut rows = Vec::new();
            for &t in &job.times {
                let rho = prop.evolve(&rho0, t)?;
                let trace = rho.trace().re;
                for (tau, norm) in sector_norms(&rho).into_iter().enumerate() {
                    rows.push((t, tau, norm, trace));
                }
                snapshots.push(json!({ "t": t, "trace": trace, "density": rho.to_json() }));
            }
            let csv = csv_bytes(|w| {
                w.write_record(["t", "tau_bits", "sector_norm", "trace"])?;
                for r in &rows {
                    w.serialize(r)?;
                }
                Ok(())
            })?;
            finish(job, csv, Value::from(snapshots), json!({ "times": job.times }))
        }
        Command::StationaryStates => {
            let p = job.params()?;
            let rho0 = job.initial.build(&p)?;
            let prop = LindbladPropagator::new(&p, jobs)?;
            let rho = prop.evolve(&rho0, f64::INFINITY)?;
            let dense = rho.to_json();
            let csv = csv_bytes(|w| {
                w.write_record(["row", "col", "re", "im"])?;
                for e in &dense.entries {
                    w.serialize(e)?;
                }
                Ok(())
            })?;
            let norms = sector_norms(&rho);
            let carrying: Vec<usize> = (0..norms.len()).filter(|&k| norms[k] > 1e-12).collect();
            finish(job, csv, serde_json::to_value(&dense)?, json!({ "sectors_with_weight": carrying }))
        }
        Command::EntropyProfile => {
            let p = job.params()?;
            let taus = job.tau.sectors(job.n_sites)?;
            let [tau] = taus.as_slice() else {
                return Err(Error::InvalidParams("entropy-profile needs a single tau sector".into()));
            };
            let schedule = TebdSchedule { chi_max: job.chi, cutoff: job.cutoff, ..TebdSchedule::default() };
            let mut gs = imaginary_time_ground_state(tau, &p, &schedule)?;
            if !gs.converged {
                let last = gs.stages.last().expect("nonempty ladder");
                return Err(Error::NonConvergence { sweeps: last.sweeps, delta: last.last_change });
            }
            if let Some(path) = &job.checkpoint {
                write_checkpoint(&gs.state, std::io::BufWriter::new(std::fs::File::create(path)?))?;
            }
            let profile = entropy_profile(&mut gs.state)?;
            let mut csv = Vec::new();
            write_entropy_csv(&profile, &mut csv)?;
            let summary = json!({
                "tau": tau.to_string(),
                "energy": gs.energy,
                "max_bond_dim": gs.state.max_bond_dim(),
                "discarded_weight": gs.state.discarded_weight,
                "stages": gs.stages,
            });
            finish(job, csv, Value::from(profile), summary)
        }
        Command::HeisenbergSplit => {
            let taus = job.tau.sectors(job.n_sites)?;
            let [tau] = taus.as_slice() else {
                return Err(Error::InvalidParams("heisenberg-split needs a single tau sector".into()));
            };
            let d = heisenberg_split(tau)?;
            let mut block_of = vec![-1i64; job.n_sites];
            for (k, b) in d.blocks.iter().enumerate() {
                for &i in b {
                    block_of[i] = k as i64;
                }
            }
            let csv = csv_bytes(|w| {
                w.write_record(["site", "f", "block"])?;
                for i in 0..job.n_sites {
                    w.serialize((i, d.f[i], block_of[i]))?;
                }
                Ok(())
            })?;
            let v = json!({
                "tau": tau.to_string(),
                "f": d.f,
                "blocks": d.blocks,
                "isolated_sites": d.isolated_sites,
            });
            finish(job, csv, v, json!({ "blocks": d.blocks.len() }))
        }
    }
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Runs a job and writes its outputs: the body to `--output` (or standard
/// output) and, for CSV files, a JSON metadata sidecar.
pub fn execute(job: &JobSpec, jobs: usize) -> Result<()> {
    let out = run(job, jobs)?;
    match &job.output {
        Some(path) => {
            std::fs::write(path, &out.body)?;
            if job.format == Format::Csv {
                let mut meta = serde_json::to_vec_pretty(&out.metadata)?;
                meta.push(b'\n');
                std::fs::write(sidecar_path(path), meta)?;
            }
        }
        None => std::io::stdout().lock().write_all(&out.body)?,
    }
    Ok(())
}

/// The machine-readable error document.
pub fn error_json(err: &Error, context: Value) -> Value {
    json!({ "code": err.code(), "message": err.to_string(), "context": context })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("qkim").chain(args.iter().copied())).unwrap()
    }

    fn job(args: &[&str]) -> JobSpec {
        JobSpec::from_cli(&cli(args)).unwrap()
    }

    #[test]
    fn selectors_parse_and_print() {
        for s in ["all", "homogeneous", "two-flips", "domain-wall", "5", "+-+-"] {
            assert_eq!(s.parse::<TauSelector>().unwrap().to_string(), s);
        }
        assert!("+x".parse::<TauSelector>().is_err());
        assert_eq!("haake-thol".parse::<DeltaSpec>().unwrap().at(0.5), 0.5 / 1.5);
        assert!("fast".parse::<DeltaSpec>().is_err());
        for s in ["ghz", "ghz-minus", "ghz-mixture:0.75", "thermal", "uniform", "file:/tmp/x.json"] {
            assert_eq!(s.parse::<InitialState>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn job_json_round_trips() {
        let j = job(&["positivity-sweep", "--n", "4", "--deltas", "0,haake-thol", "--tau", "all"]);
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(serde_json::from_str::<JobSpec>(&text).unwrap(), j);
        let j = job(&["entropy-profile", "--n", "12", "--gamma", "0.9", "--tau", "two-flips", "--delta", "haake-thol"]);
        assert_eq!(j.boundary, Boundary::Open);
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(serde_json::from_str::<JobSpec>(&text).unwrap(), j);
    }

    #[test]
    fn validation_rejects_incomplete_jobs() {
        let bad = |a: &[&str]| JobSpec::from_cli(&cli(a)).is_err();
        assert!(bad(&["spectrum", "--n", "4"]));
        assert!(bad(&["spectrum", "--n", "4", "--gamma", "1.5"]));
        assert!(bad(&["entropy-profile", "--n", "8", "--gamma", "0.5", "--boundary", "periodic"]));
        assert!(bad(&["lindblad-evolve", "--n", "3", "--gamma", "0.5", "--times", "-1"]));
        assert!(bad(&["dbc-check", "--n", "4", "--gamma", "0.5", "--checkpoint", "x"]));
        assert!(Cli::try_parse_from(["qkim", "nonsense", "--n", "3"]).is_err());
    }

    #[test]
    fn spectrum_job_output() {
        let out = run(&job(&["spectrum", "--n", "6", "--gamma", "0.5", "--delta", "0", "--tau", "0"]), 1).unwrap();
        let text = String::from_utf8(out.body).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau,index,value");
        assert_eq!(lines.len(), 65);
        let min: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert!(min.abs() < 1e-10);
    }

    #[test]
    fn dbc_job_output() {
        let j = job(&["dbc-check", "--n", "8", "--gamma", "0.7", "--delta", "0.3", "--format", "json"]);
        let out = run(&j, 1).unwrap();
        let v: Value = serde_json::from_slice(&out.body).unwrap();
        assert_eq!(v["result"]["holds"], true);
        assert!(v["result"]["max_violation"].as_f64().unwrap() < 1e-12);
        assert_eq!(serde_json::from_value::<JobSpec>(v["job"].clone()).unwrap(), j);
        assert_eq!(v["params"]["n_sites"], 8);
    }

    #[test]
    fn outputs_are_deterministic() {
        let j = job(&["gap-scan", "--n", "5", "--gammas", "0.2,0.6", "--tau", "all", "--format", "json"]);
        assert_eq!(run(&j, 1).unwrap(), run(&j, 3).unwrap());
    }

    #[test]
    fn heisenberg_split_output() {
        let j = job(&["heisenberg-split", "--n", "14", "--tau", "+++-++-+-+-++-"]);
        let text = String::from_utf8(run(&j, 1).unwrap().body).unwrap();
        assert_eq!(text.lines().count(), 15);
    }

    #[test]
    fn lindblad_and_stationary_jobs() {
        let j = job(&["lindblad-evolve", "--n", "3", "--gamma", "0.5", "--times", "0,1"]);
        let text = String::from_utf8(run(&j, 1).unwrap().body).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 8);
        let j = job(&["stationary-states", "--n", "3", "--gamma", "0.5", "--initial", "ghz", "--format", "json"]);
        let v: Value = serde_json::from_slice(&run(&j, 1).unwrap().body).unwrap();
        assert_eq!(v["summary"]["sectors_with_weight"], json!([0, 7]));
    }
}
