//! bilap: build and inspect weighted magnetic graphs, check the
//! self-adjointness criterion on families, run the verification lab, probe
//! deficiency indices, and export truncated operators.
//!
//! Exit codes: 0 success (and, for `check`, verdict satisfied; for `verify`,
//! all checks passed), 2 verdict not satisfied / checks failed, 64 malformed
//! input file, 1 other runtime failures. Data goes to stdout, diagnostics to
//! stderr.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bilap::error::ProbeError;
use bilap::io::{
    load_amplitudes, load_graph, matrix_sidecar, save_amplitudes, to_matrix_market, DocumentError,
};
use bilap::lab::{run_suite, CheckName, TrialConfig};
use bilap::manifest::{sha256_hex, RunManifest};
use bilap::probe::{
    consistency_probe, rectangular_residual, shoot, shooting_csv, shooting_report, ProbeThresholds,
    Sign,
};
use bilap::theorem::{check_instance, InstanceDoc, Verdict};
use bilap::{
    apply_bilaplacian, apply_h, apply_laplacian, apply_p, assemble_truncation, growth_table,
    Boundary, FamilySpec, GraphFamily, Potential,
};

#[derive(Parser)]
#[command(
    name = "bilap",
    version,
    about = "weighted magnetic graph calculus toolkit"
)]
struct Cli {
    /// Epoch-seconds timestamp stamped into manifests; defaults to the
    /// BILAP_TIMESTAMP environment variable, then to the current time.
    #[arg(long, global = true)]
    timestamp: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate d_n, p_n, beta_n, d_n p_n / n for a built-in family.
    Stats(StatsArgs),
    /// Check the self-adjointness criterion hypotheses for an instance file.
    Check(CheckArgs),
    /// Run the randomized identity and inequality lab.
    Verify(VerifyArgs),
    /// Probe deficiency indices by shooting or truncated-operator SVD.
    Probe(ProbeArgs),
    /// Apply an operator to an amplitudes file over a graph file.
    Apply(ApplyArgs),
    /// Export a truncated operator in Matrix Market format.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum BuilderName {
    HalfLineUnit,
    HalfLineSqrt,
    RadialTree,
}

#[derive(Args, Serialize)]
struct FamilyArgs {
    /// Built-in family.
    #[arg(long, value_enum)]
    builder: BuilderName,
    /// Tree branching exponent (radial_tree only).
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    /// Radial potential exponent bundled with radial_tree.
    #[arg(long)]
    alpha: Option<f64>,
    /// Vertex budget per generated ball.
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
}

impl FamilyArgs {
    fn build(&self) -> anyhow::Result<GraphFamily> {
        let spec = match self.builder {
            BuilderName::HalfLineUnit => FamilySpec::HalfLineUnit,
            BuilderName::HalfLineSqrt => FamilySpec::HalfLineSqrt,
            BuilderName::RadialTree => FamilySpec::RadialTree {
                kappa: self.kappa,
                alpha: self.alpha,
            },
        };
        Ok(GraphFamily::build_example(&spec)?.with_budget(self.budget))
    }
}

/// Without a flag, family commands fall back to the family's bundled example
/// potential (half_line_unit carries W = -r, half_line_sqrt W = -sqrt(r),
/// radial_tree W = -r^alpha when --alpha is given), and W = 0 otherwise.
#[derive(Args, Serialize)]
struct PotentialArgs {
    /// W(x) = -r(x)^E.
    #[arg(long, value_name = "E", conflicts_with = "w_constant")]
    w_exponent: Option<f64>,
    /// Constant potential W = C.
    #[arg(long, value_name = "C")]
    w_constant: Option<f64>,
}

impl PotentialArgs {
    /// Resolve against the family's bundled potential when no flag is given.
    fn resolve(&self, family: Option<&GraphFamily>) -> Potential {
        if let Some(e) = self.w_exponent {
            Potential::NegRadialPow { exponent: e }
        } else if let Some(c) = self.w_constant {
            Potential::Constant { value: c }
        } else {
            family
                .and_then(|f| f.potential_model().cloned())
                .unwrap_or(Potential::Zero)
        }
    }
}

#[derive(Args, Serialize)]
struct StatsArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 10)]
    n_max: u32,
    #[arg(long, value_enum, default_value_t = StatsFormat::Json)]
    format: StatsFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum StatsFormat {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
struct CheckArgs {
    /// Instance description file (family, potential, q, alpha, certificate).
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Comma-separated check names, or "all". Names: product_rule,
    /// expansion_identity, cutoff_p_bound, cutoff_multiplier_bound,
    /// localization_bound, localization_half_epsilon,
    /// pairing_p_squared_bound, pairing_multiplier_squared_bound,
    /// radial_q_bound, scalar_sum_square, young_inequality,
    /// green_first_order, green_second_order, form_positivity.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Cut-off indices 1..=n_max (clamped per family by the budget).
    #[arg(long, default_value_t = 10)]
    n_max: u32,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, default_value_t = 0.5)]
    tree_kappa: f64,
    #[arg(long, default_value_t = 200_000)]
    budget: u64,
    /// CI mode: a seed must be given explicitly.
    #[arg(long, default_value_t = false)]
    ci: bool,
    #[arg(long, value_enum, default_value_t = VerifyFormat::Json)]
    format: VerifyFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum VerifyFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum ProbeMethod {
    Shooting,
    Rectangular,
    /// Shooting re-run at nu in {0.5, 1, 2} requiring agreeing conclusions.
    NuConsistency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Args, Serialize)]
struct ProbeArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    potential: PotentialArgs,
    #[arg(long, value_enum, default_value_t = ProbeMethod::Shooting)]
    method: ProbeMethod,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    sign: SignArg,
    /// Shooting horizon.
    #[arg(long, default_value_t = 200)]
    horizon: u32,
    /// Rectangular horizons.
    #[arg(long, value_delimiter = ',', default_values_t = [20u32, 40, 60, 80])]
    horizons: Vec<u32>,
    /// Write per-solution CSV files (k, |u(k)|, P_k) into this directory.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// Divergent when partial norms grow by this factor over the last
    /// quarter of the horizon.
    #[arg(long, default_value_t = 10.0)]
    divergence_factor: f64,
    /// Square-summable candidate when tail increments decay at this ratio.
    #[arg(long, default_value_t = 0.99)]
    decay_ratio: f64,
    /// Defect suspected when sigma_min decays by this ratio across three
    /// successive horizons.
    #[arg(long, default_value_t = 0.7)]
    sigma_decay: f64,
    /// Bounded-below verdict when min sigma >= fraction * max sigma.
    #[arg(long, default_value_t = 0.5)]
    sigma_floor: f64,
    /// Dense SVD column cap.
    #[arg(long, default_value_t = 4000)]
    svd_cap: usize,
}

impl ProbeArgs {
    fn thresholds(&self) -> ProbeThresholds {
        ProbeThresholds {
            divergence_factor: self.divergence_factor,
            decay_ratio: self.decay_ratio,
            sigma_decay_threshold: self.sigma_decay,
            sigma_floor_fraction: self.sigma_floor,
            svd_cap: self.svd_cap,
            ..ProbeThresholds::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum OpName {
    Laplacian,
    Bilaplacian,
    H,
    P,
}

#[derive(Args, Serialize)]
struct ApplyArgs {
    /// Standalone graph document.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    op: OpName,
    /// Amplitudes file (JSON map id -> [re, im]).
    #[arg(long)]
    amplitudes: PathBuf,
    /// Real multiplier file for op = p.
    #[arg(long)]
    psi: Option<PathBuf>,
    #[command(flatten)]
    potential: PotentialArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum BoundaryArg {
    Dirichlet,
    InteriorRows,
}

#[derive(Args, Serialize)]
struct ExportArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    potential: PotentialArgs,
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Dirichlet)]
    boundary: BoundaryArg,
    /// Output path; joined with BILAP_OUT_DIR when relative.
    #[arg(long)]
    out: PathBuf,
}

fn resolve_timestamp(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("BILAP_TIMESTAMP")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

fn out_path(p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var_os("BILAP_OUT_DIR") {
        Some(dir) => Path::new(&dir).join(p),
        None => p.to_path_buf(),
    }
}

fn manifest_for<T: Serialize>(
    command: &str,
    args: &T,
    seed: Option<u64>,
    inputs: &[(&Path, &str)],
    timestamp: u64,
) -> RunManifest {
    let digests: BTreeMap<String, String> = inputs
        .iter()
        .map(|(p, text)| (p.display().to_string(), sha256_hex(text.as_bytes())))
        .collect();
    RunManifest::new(
        command,
        serde_json::to_value(args).expect("args serialize"),
        seed,
        digests,
        timestamp,
    )
}

#[derive(Serialize)]
struct StatsReport {
    manifest: RunManifest,
    family: String,
    rows: Vec<bilap::GrowthStats>,
}

fn exit_err(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    let code = if e
        .downcast_ref::<DocumentError>()
        .is_some_and(|d| matches!(d, DocumentError::Json(_)))
        || e.downcast_ref::<serde_json::Error>().is_some()
    {
        64
    } else {
        1
    };
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let timestamp = resolve_timestamp(cli.timestamp);
    let result = match cli.command {
        Command::Stats(args) => cmd_stats(args, timestamp),
        Command::Check(args) => cmd_check(args, timestamp),
        Command::Verify(args) => cmd_verify(args, timestamp),
        Command::Probe(args) => cmd_probe(args, timestamp),
        Command::Apply(args) => cmd_apply(args, timestamp),
        Command::Export(args) => cmd_export(args, timestamp),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => exit_err(e),
    }
}

fn cmd_stats(args: StatsArgs, timestamp: u64) -> anyhow::Result<u8> {
    let family = args.family.build()?;
    let rows = growth_table(&family, args.n_max)?;
    match args.format {
        StatsFormat::Csv => {
            let mut out = String::from("n,d_n,p_n,beta_n,dnpn_over_n\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.n, r.d_n, r.p_n, r.beta_n, r.dnpn_over_n
                ));
            }
            print!("{out}");
        }
        StatsFormat::Json => {
            let manifest = manifest_for("stats", &args, None, &[], timestamp);
            let report = StatsReport {
                manifest,
                family: family.name().to_owned(),
                rows,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(0)
}

fn cmd_check(args: CheckArgs, timestamp: u64) -> anyhow::Result<u8> {
    let text = fs::read_to_string(&args.instance)?;
    let doc: InstanceDoc = serde_json::from_str(&text)?;
    let mut report = check_instance(&doc)?;
    report.manifest = Some(manifest_for(
        "check",
        &args,
        None,
        &[(args.instance.as_path(), text.as_str())],
        timestamp,
    ));
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.verdict == Verdict::Satisfied {
        0
    } else {
        2
    })
}

fn cmd_verify(args: VerifyArgs, timestamp: u64) -> anyhow::Result<u8> {
    if args.ci && args.seed == 0 {
        anyhow::bail!("CI mode requires an explicit nonzero --seed");
    }
    let suite: Vec<CheckName> = if args.suite == "all" {
        CheckName::all()
    } else {
        args.suite
            .split(',')
            .map(CheckName::parse)
            .collect::<Result<_, _>>()?
    };
    let cfg = TrialConfig {
        trials: args.trials,
        n_range: (1..=args.n_max).collect(),
        support_radius: None,
        seed: args.seed,
        tolerance: args.tolerance,
        max_support: 24,
        vertex_budget: args.budget,
    };
    let mut families = bilap::lab::default_families(args.budget);
    if args.tree_kappa != 0.5 {
        families.pop();
        families.push(
            GraphFamily::build_example(&FamilySpec::RadialTree {
                kappa: args.tree_kappa,
                alpha: Some((1.0 - args.tree_kappa).max(0.0)),
            })?
            .with_budget(args.budget),
        );
    }
    let mut report = run_suite(&cfg, &families, &suite)?;
    report.manifest = Some(manifest_for(
        "verify",
        &args,
        Some(args.seed),
        &[],
        timestamp,
    ));
    match args.format {
        VerifyFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        VerifyFormat::Table => print!("{}", lab_table(&report)),
    }
    Ok(if report.all_passed { 0 } else { 2 })
}

fn lab_table(report: &bilap::lab::LabReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<34} {:<10} {:>7} {:>12} {:>12}  pass\n",
        "check", "kind", "trials", "metric", "threshold"
    ));
    for c in &report.checks {
        let kind = serde_json::to_value(c.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        out.push_str(&format!(
            "{:<34} {:<10} {:>7} {:>12.4e} {:>12.4e}  {}\n",
            c.name,
            kind,
            c.trials,
            c.metric,
            c.threshold,
            if c.pass { "yes" } else { "NO" }
        ));
    }
    out.push_str(&format!(
        "all passed: {} (seed {}, families: {})\n",
        if report.all_passed { "yes" } else { "NO" },
        report.seed,
        report.families.join(", ")
    ));
    out
}

fn cmd_probe(args: ProbeArgs, timestamp: u64) -> anyhow::Result<u8> {
    let family = args.family.build()?;
    let w = args.potential.resolve(Some(&family));
    let sign = match args.sign {
        SignArg::Plus => Sign::Plus,
        SignArg::Minus => Sign::Minus,
    };
    let thresholds = args.thresholds();
    let manifest = manifest_for("probe", &args, None, &[], timestamp);

    if let Some(dir) = &args.csv_dir {
        let dir = out_path(dir);
        fs::create_dir_all(&dir)?;
        let solutions = shoot(&family, &w, args.nu, sign, args.horizon, &thresholds)?;
        for s in &solutions {
            let name = format!("shooting_nu{}_{:?}.csv", args.nu, s.label).to_lowercase();
            fs::write(dir.join(name), shooting_csv(s))?;
        }
    }

    match args.method {
        ProbeMethod::Shooting => {
            let mut report =
                shooting_report(&family, &w, args.nu, sign, args.horizon, &thresholds)?;
            report.manifest = Some(manifest);
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        ProbeMethod::Rectangular => {
            let mut report =
                rectangular_residual(&family, &w, args.nu, sign, &args.horizons, &thresholds)?;
            report.manifest = Some(manifest);
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        ProbeMethod::NuConsistency => {
            let report = consistency_probe(&family, &w, sign, args.horizon, &thresholds)?;
            #[derive(Serialize)]
            struct Wrapped {
                manifest: RunManifest,
                #[serde(flatten)]
                report: bilap::probe::ConsistencyReport,
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&Wrapped { manifest, report })?
            );
        }
    }
    Ok(0)
}

fn cmd_apply(args: ApplyArgs, _timestamp: u64) -> anyhow::Result<u8> {
    let graph_text = fs::read_to_string(&args.graph)?;
    let g = load_graph(&graph_text)?;
    let amp_text = fs::read_to_string(&args.amplitudes)?;
    let u = load_amplitudes(&amp_text, &g)?;
    let result = match args.op {
        OpName::Laplacian => apply_laplacian(&g, &u)?,
        OpName::Bilaplacian => apply_bilaplacian(&g, &u)?,
        OpName::H => {
            let w = args.potential.resolve(None);
            apply_h(&g, &w, &u)?
        }
        OpName::P => {
            let psi_path = args
                .psi
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("--psi FILE is required for op = p"))?;
            let psi_text = fs::read_to_string(psi_path)?;
            let psi_complex = load_amplitudes(&psi_text, &g)?;
            let mut psi = bilap::RealAmplitudes::new();
            for (idx, v) in psi_complex.iter() {
                if v.im != 0.0 {
                    anyhow::bail!(
                        "psi must be real-valued: vertex `{}` has imaginary part {}",
                        g.id(idx),
                        v.im
                    );
                }
                psi.set(idx, v.re);
            }
            apply_p(&g, &psi, &u)?
        }
    };
    print!("{}", save_amplitudes(&result, &g));
    Ok(0)
}

fn cmd_export(args: ExportArgs, timestamp: u64) -> anyhow::Result<u8> {
    let family = args.family.build()?;
    let w = args.potential.resolve(Some(&family));
    let boundary = match args.boundary {
        BoundaryArg::Dirichlet => Boundary::Dirichlet,
        BoundaryArg::InteriorRows => Boundary::InteriorRows,
    };
    let op = match assemble_truncation(&family, &w, args.n, boundary) {
        Ok(op) => op,
        Err(e @ ProbeError::HorizonTooSmall(..)) => anyhow::bail!(e),
        Err(e) => return Err(e.into()),
    };
    let path = out_path(&args.out);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&path, to_matrix_market(&op))?;
    #[derive(Serialize)]
    struct Sidecar {
        manifest: RunManifest,
        #[serde(flatten)]
        map: bilap::io::MatrixSidecar,
    }
    let sidecar = Sidecar {
        manifest: manifest_for("export", &args, None, &[], timestamp),
        map: matrix_sidecar(&op),
    };
    let sidecar_path = path.with_extension("mtx.json");
    fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;
    eprintln!(
        "wrote {} ({}x{}, {} entries) and {}",
        path.display(),
        op.nrows,
        op.ncols,
        op.nnz(),
        sidecar_path.display()
    );
    Ok(0)
}
