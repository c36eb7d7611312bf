//! Command-line front end: fidelity curves, immunity scans, protection
//! comparisons and a self-check.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbqc_noise::analysis::{
    compare_patterns, grid, immunity_scan, sweep_curve, FidelityCurve, IMMUNITY_PROBES,
};
use mbqc_noise::{
    build_cluster_state, cluster_state_from_stabilizers, ChannelKind, ChannelSpec, Engine, Error,
    GateKind, Method, NoiseAssignment, Registry, CROSS_CHECK_TOL,
};

#[derive(Parser)]
#[command(
    name = "mbqc-noise",
    version,
    about = "Gate fidelity of noisy cluster states"
)]
struct Cli {
    /// Pattern registry file (defaults to the bundled registry).
    #[arg(long, global = true, value_name = "PATH")]
    registry: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity against error rate with one channel on the chosen qubits.
    Curve(CurveArgs),
    /// Find (qubit, channel) pairs that leave the gate exactly intact.
    ScanImmunity(ScanArgs),
    /// Compare two choices of noise-free (protected) qubits.
    Compare(CompareArgs),
    /// Check the registry, the channels and formula/oracle agreement.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GateArgs {
    /// identity, hadamard, zrot or cz.
    #[arg(long)]
    gate: String,
    /// Rotation angle in radians (zrot only).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    gate: GateArgs,
    /// bitflip, dephasing, phasedamp or ampdamp.
    #[arg(long)]
    channel: String,
    /// Exposed qubits, comma separated (indices or labels).
    #[arg(long, value_delimiter = ',', required = true)]
    qubit: Vec<String>,
    /// Sweep each listed qubit on its own and add a `qubit` column.
    #[arg(long)]
    each: bool,
    /// Error-rate grid `start:stop:step`, endpoints inclusive.
    #[arg(long, default_value = "0:0.5:0.05")]
    grid: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Formula)]
    method: MethodArg,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// Gate to scan; all four when omitted.
    #[arg(long)]
    gate: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Emit CSV instead of a table.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    gate: GateArgs,
    #[arg(long)]
    channel: String,
    /// Protected qubits of pattern A.
    #[arg(long = "protectA", alias = "protect-a", value_delimiter = ',', num_args = 0..)]
    protect_a: Vec<String>,
    /// Protected qubits of pattern B.
    #[arg(long = "protectB", alias = "protect-b", value_delimiter = ',', num_args = 0..)]
    protect_b: Vec<String>,
    #[arg(long, default_value = "0:0.5:0.05")]
    grid: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Rotation angle used for the zrot checks.
    #[arg(long, default_value_t = 0.7, allow_hyphen_values = true)]
    theta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Formula,
    Oracle,
    Both,
}

/// Failure classes and their exit codes.
enum Failure {
    Validation(String),
    Usage(String),
    Capacity(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Capacity(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Usage(m) | Failure::Capacity(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity { .. } => Failure::Capacity(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    let engine = Engine::new(load_registry(cli.registry.as_deref())?);
    match cli.command {
        Command::Curve(a) => curve(&engine, a),
        Command::ScanImmunity(a) => scan(&engine, a),
        Command::Compare(a) => compare(&engine, a),
        Command::Validate(a) => validate(&engine, a),
    }
}

fn configure_threads() -> Outcome {
    let Ok(value) = std::env::var("MBQC_THREADS") else {
        return Ok(());
    };
    let threads: usize = match value.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            return usage(format!(
                "MBQC_THREADS must be a positive integer, got {value:?}"
            ))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn load_registry(path: Option<&Path>) -> Outcome<Registry> {
    let Some(path) = path else {
        return Ok(Registry::bundled());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read registry {}: {e}", path.display())))?;
    Registry::parse(&text).map_err(|e| Failure::Usage(format!("registry {}: {e}", path.display())))
}

fn parse_gate(name: &str, theta: Option<f64>) -> Outcome<GateKind> {
    Ok(GateKind::from_name(name, theta)?)
}

fn parse_channel(spec: &str) -> Outcome<ChannelKind> {
    let spec: ChannelSpec = spec.parse()?;
    if spec.rate.is_some() {
        return usage(format!(
            "channel {spec}: the error rate comes from --grid, give the channel name only"
        ));
    }
    Ok(spec.kind)
}

fn parse_grid(spec: &str) -> Outcome<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return usage(format!("grid {spec:?} is not start:stop:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Failure::Usage(format!("grid {spec:?}: bad number {s:?}")))
    };
    let points = grid(num(start)?, num(stop)?, num(step)?)?;
    if points.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return usage(format!("grid {spec:?} leaves [0, 1]"));
    }
    Ok(points)
}

fn parse_qubits(
    engine: &Engine,
    gate: &GateKind,
    items: &[String],
    what: &str,
) -> Outcome<BTreeSet<usize>> {
    let pattern = engine.pattern(gate)?;
    let mut set = BTreeSet::new();
    for item in items.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let q = pattern
            .qubit(item)
            .map_err(|_| Failure::Usage(format!("{what}: unknown qubit {item:?}")))?;
        if q >= pattern.num_qubits() {
            return usage(format!(
                "{what}: qubit {q} is outside the {} pattern ({} qubits)",
                pattern.name(),
                pattern.num_qubits()
            ));
        }
        if !set.insert(q) {
            return usage(format!("{what}: qubit {item} listed twice"));
        }
    }
    Ok(set)
}

fn join(set: &BTreeSet<usize>) -> String {
    set.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// CSV with a `#` metadata header. Output is a pure function of the input.
fn write_csv(
    output: Option<&Path>,
    header: &[String],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Outcome {
    let mut buf = Vec::new();
    for line in header {
        writeln!(buf, "# {line}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    match output {
        Some(path) => fs::write(path, buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12}")
}

fn curve(engine: &Engine, a: CurveArgs) -> Outcome {
    let gate = parse_gate(&a.gate.gate, a.gate.theta)?;
    let kind = parse_channel(&a.channel)?;
    let points = parse_grid(&a.grid)?;
    let qubits = parse_qubits(engine, &gate, &a.qubit, "--qubit")?;
    if qubits.is_empty() {
        return usage("--qubit needs at least one qubit");
    }
    let exposures: Vec<BTreeSet<usize>> = if a.each {
        qubits.iter().map(|&q| BTreeSet::from([q])).collect()
    } else {
        vec![qubits.clone()]
    };

    let mut rows = Vec::new();
    let mut max_delta: f64 = 0.0;
    for exposed in &exposures {
        let run = |m| sweep_curve(engine, &gate, &kind, exposed, &points, m);
        let (main, oracle): (FidelityCurve, Option<FidelityCurve>) = match a.method {
            MethodArg::Formula => (run(Method::Formula)?, None),
            MethodArg::Oracle => (run(Method::Oracle)?, None),
            MethodArg::Both => (run(Method::Formula)?, Some(run(Method::Oracle)?)),
        };
        for (k, &(p, f)) in main.points.iter().enumerate() {
            let mut row = Vec::new();
            if a.each {
                row.push(join(exposed));
            }
            row.push(p.to_string());
            row.push(fmt_f(f));
            if let Some(o) = &oracle {
                let fo = o.points[k].1;
                max_delta = max_delta.max((f - fo).abs());
                row.push(fmt_f(fo));
            }
            rows.push(row);
        }
    }

    let mut columns = Vec::new();
    if a.each {
        columns.push("qubit");
    }
    columns.extend(["p", "fidelity"]);
    let method = match a.method {
        MethodArg::Formula => "formula",
        MethodArg::Oracle => "oracle",
        MethodArg::Both => {
            columns.push("fidelity_oracle");
            "formula+oracle"
        }
    };
    let mut header = vec![
        format!("mbqc-noise curve gate={gate} channel={kind} method={method}"),
        format!("exposed qubits: {}", join(&qubits)),
    ];
    if matches!(a.method, MethodArg::Both) {
        header.push(format!("max |formula - oracle| = {max_delta:.3e}"));
    }
    write_csv(a.output.as_deref(), &header, &columns, &rows)?;
    if max_delta > CROSS_CHECK_TOL {
        return Err(Failure::Validation(format!(
            "formula and oracle disagree by {max_delta:.3e} (tolerance {CROSS_CHECK_TOL:e})"
        )));
    }
    Ok(())
}

fn scan(engine: &Engine, a: ScanArgs) -> Outcome {
    let gates = match &a.gate {
        Some(name) => vec![parse_gate(name, a.theta)?],
        None => GateKind::all(a.theta.unwrap_or(std::f64::consts::FRAC_PI_4)).to_vec(),
    };
    let mut reports = Vec::new();
    for g in &gates {
        reports.push(immunity_scan(engine, g)?);
    }

    let probes: Vec<String> = IMMUNITY_PROBES.iter().map(|p| format!("F({p})")).collect();
    if a.csv {
        let mut columns = vec!["gate", "qubit", "label", "channel", "immune"];
        columns.extend(probes.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = reports
            .iter()
            .flat_map(|r| {
                r.rows.iter().map(move |row| {
                    let mut v = vec![
                        r.gate.name().to_string(),
                        row.qubit.to_string(),
                        row.label.clone(),
                        row.channel.to_string(),
                        row.immune.to_string(),
                    ];
                    v.extend(row.values.iter().map(|&x| fmt_f(x)));
                    v
                })
            })
            .collect();
        let header = vec![format!(
            "mbqc-noise scan-immunity gates={}",
            gates
                .iter()
                .map(|g| g.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )];
        return write_csv(a.output.as_deref(), &header, &columns, &rows);
    }

    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>5} {:<6} {:<10} {:<7} {}\n",
        "gate",
        "qubit",
        "label",
        "channel",
        "immune",
        probes.iter().map(|p| format!("{p:>9}")).collect::<String>()
    ));
    for r in &reports {
        for row in &r.rows {
            out.push_str(&format!(
                "{:<10} {:>5} {:<6} {:<10} {:<7} {}\n",
                r.gate.name(),
                row.qubit,
                row.label,
                row.channel.name(),
                if row.immune { "yes" } else { "no" },
                row.values
                    .iter()
                    .map(|v| format!("{v:>9.6}"))
                    .collect::<String>()
            ));
        }
    }
    for r in &reports {
        let list: Vec<String> = r.immune().map(|(q, c)| format!("{c}@{q}")).collect();
        out.push_str(&format!(
            "immune pairs for {}: {}\n",
            r.gate,
            if list.is_empty() {
                "none".into()
            } else {
                list.join(" ")
            }
        ));
    }
    match a.output {
        Some(path) => fs::write(path, out)?,
        None => io::stdout().write_all(out.as_bytes())?,
    }
    Ok(())
}

fn compare(engine: &Engine, a: CompareArgs) -> Outcome {
    let gate = parse_gate(&a.gate.gate, a.gate.theta)?;
    let kind = parse_channel(&a.channel)?;
    let points = parse_grid(&a.grid)?;
    let pa = parse_qubits(engine, &gate, &a.protect_a, "--protectA")?;
    let pb = parse_qubits(engine, &gate, &a.protect_b, "--protectB")?;
    let c = compare_patterns(engine, &gate, &kind, &pa, &pb, &points)?;

    let rows: Vec<Vec<String>> = c
        .curve_a
        .points
        .iter()
        .zip(&c.curve_b.points)
        .map(|(x, y)| vec![x.0.to_string(), fmt_f(x.1), fmt_f(y.1)])
        .collect();
    let shared = (c.slope_a.slope - c.slope_b.slope).abs() <= 1e-6;
    let summary = format!(
        "dominance: {}; initial slopes A={:.9} B={:.9} ({})",
        c.dominance,
        c.slope_a.slope,
        c.slope_b.slope,
        if shared { "shared" } else { "different" }
    );
    let header = vec![
        format!("mbqc-noise compare gate={gate} channel={kind}"),
        format!(
            "protected A: {}; exposed A: {}",
            join(&pa),
            join(&c.curve_a.exposed)
        ),
        format!(
            "protected B: {}; exposed B: {}",
            join(&pb),
            join(&c.curve_b.exposed)
        ),
        summary.clone(),
    ];
    write_csv(a.output.as_deref(), &header, &["p", "F_A", "F_B"], &rows)?;
    eprintln!("{summary}");
    Ok(())
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn validate(engine: &Engine, a: ValidateArgs) -> Outcome {
    let mut checks = Vec::new();
    let gates: Vec<GateKind> = engine
        .registry()
        .names()
        .map(|name| GateKind::from_name(name, Some(a.theta)))
        .collect::<Result<_, _>>()?;

    for g in &gates {
        let pattern = engine.pattern(g)?;
        let noiseless = engine.formula(g, &NoiseAssignment::new())?.value;
        let byproducts = engine.check_byproducts(g)?;
        let cluster = build_cluster_state::<f64>(pattern.graph())?;
        let alt = cluster_state_from_stabilizers::<f64>(pattern.graph())?;
        let gap = cluster.matrix().max_abs_diff(alt.matrix());
        checks.push(Check {
            name: format!("registry {}", g.name()),
            pass: (noiseless - 1.0).abs() <= 1e-9 && byproducts.max_deviation <= 1e-9 && gap <= 1e-10,
            detail: format!(
                "noiseless witness {noiseless:.12}, byproduct spread {:.1e} over {} branches, cluster constructions {gap:.1e}",
                byproducts.max_deviation, byproducts.branches
            ),
        });
    }

    let mut defect: f64 = 0.0;
    for kind in ChannelKind::ALL {
        for k in 0..=10 {
            defect = defect.max(kind.at(k as f64 / 10.0)?.completeness_defect());
        }
    }
    checks.push(Check {
        name: "channel completeness".into(),
        pass: defect <= 1e-12,
        detail: format!("max defect {defect:.1e} over 4 channels at 11 rates"),
    });

    for g in &gates {
        let n = engine.pattern(g)?.num_qubits();
        let assignments: Vec<NoiseAssignment> = ChannelKind::ALL
            .iter()
            .flat_map(|kind| {
                (0..n).map(move |q| NoiseAssignment::new().with(q, kind.at(0.3).unwrap()))
            })
            .collect();
        let cv = engine.cross_validate(g, &assignments, CROSS_CHECK_TOL)?;
        let mass = cv
            .entries
            .iter()
            .map(|e| (e.probability_mass - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(Check {
            name: format!("formula = oracle {}", g.name()),
            pass: cv.passed() && mass <= 1e-10,
            detail: format!(
                "{} assignments, max gap {:.1e}, branch mass error {mass:.1e}",
                cv.entries.len(),
                cv.max_discrepancy()
            ),
        });
    }

    for c in &checks {
        println!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}
