//! `pivcs` command-line tool.
//!
//! Exit codes: 0 success, 1 failed checks or residual above tolerance,
//! 2 invalid spec / usage / unreadable or corrupt file, 3 too few
//! evaluable points for a Painlevé residual.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use pivcs::coherent::{self, divergence_witness, Label, MeasureFamily, MeasureFn, MAX_LEVELS};
use pivcs::document::{self, Provenance};
use pivcs::ladder::LadderCoeffs;
use pivcs::painleve::{self, Assignment, Root, DEFAULT_RESIDUAL_TOL, GUARD_BAND, WIDE_GUARD_BAND};
use pivcs::susy::{build_system, DEFAULT_N_MAX};
use pivcs::verify::{self, Suite};
use pivcs::{Error, Family, Grid, SusySystem, SystemSpec};

/// Terms kept in the divergence witness emitted for `docs-iso`.
const WITNESS_TERMS: usize = 200;

#[derive(Parser)]
#[command(name = "pivcs", version, about = "Painlevé IV coherent states of SUSY partners of the oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a k-SUSY partner system and write it as JSON.
    Build {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract g(x) from a system file and check the Painlevé IV residual.
    Painleve {
        system: PathBuf,
        /// `e1=eps0`, `e1=half`, or a full `e1=..,e2=..,e3=..` permutation
        /// of half, eps0, top+1.
        #[arg(long)]
        assign: Option<String>,
        /// Shift added to the parameter a (negative control).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        perturb_a: f64,
        #[arg(long, default_value_t = DEFAULT_RESIDUAL_TOL)]
        tol: f64,
        /// Samples masked on each side of a node of the extremal state.
        #[arg(long)]
        band: Option<usize>,
        /// CSV of x, g, residual.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a coherent state.
    Cs {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        state: StateArgs,
        /// Also write |ψ(x)|² as CSV.
        #[arg(long)]
        density: Option<PathBuf>,
        /// Where to write the divergence witness when the family is docs-iso.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run invariant suites on a system file.
    Verify {
        system: PathBuf,
        /// Repeatable; all suites when omitted.
        #[arg(long, value_parser = parse_suite)]
        suite: Vec<Suite>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a measure density f(r²) over an r-grid.
    Measure {
        #[command(flatten)]
        source: SourceArgs,
        /// f1, f2 or f3.
        #[arg(long, value_parser = parse_measure)]
        measure: MeasureFamily,
        #[arg(long, default_value_t = 6.0)]
        r_max: f64,
        #[arg(long, default_value_t = 121)]
        count: usize,
        #[arg(long, default_value_t = coherent::measure::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write |ψ(x)|² and ψ(x) of a coherent state as CSV.
    Density {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate |⟨z′|z⟩| over a square of z values.
    Kernel {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_label)]
        zp: Label,
        /// Half-width of the square centred on the origin.
        #[arg(long, default_value_t = 8.0)]
        extent: f64,
        #[arg(long, default_value_t = 81)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// System parameters; defaults are the k = 4 acceptance system.
#[derive(Args, Clone)]
struct SystemArgs {
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = -2.8, allow_negative_numbers = true)]
    eps_top: f64,
    #[arg(long, default_value_t = -0.9, allow_negative_numbers = true)]
    nu: f64,
    #[arg(long, allow_negative_numbers = true)]
    xmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    xmax: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    nmax: usize,
}

impl SystemArgs {
    fn spec(&self) -> pivcs::Result<SystemSpec> {
        let d = Grid::default();
        let grid = Grid::new(
            self.xmin.unwrap_or(d.x_min),
            self.xmax.unwrap_or(d.x_max),
            self.n.unwrap_or(d.n_points),
        )?;
        let spec = SystemSpec::new(self.k, self.eps_top, self.nu).with_grid(grid);
        spec.validate()?;
        Ok(spec)
    }
}

/// Either a system file or inline parameters.
#[derive(Args)]
struct SourceArgs {
    /// System JSON written by `build`; overrides the inline parameters.
    #[arg(long)]
    system: Option<PathBuf>,
    #[command(flatten)]
    params: SystemArgs,
}

impl SourceArgs {
    fn spec(&self) -> pivcs::Result<(SystemSpec, usize)> {
        match &self.system {
            Some(path) => {
                let doc: document::SystemDocument = serde_json::from_value(document::read_json(path)?)
                    .map_err(|e| Error::Document(format!("{}: {e}", path.display())))?;
                doc.provenance.spec.validate()?;
                Ok((doc.provenance.spec, doc.provenance.n_max))
            }
            None => Ok((self.params.spec()?, self.params.nmax)),
        }
    }

    fn system(&self) -> pivcs::Result<SusySystem> {
        match &self.system {
            Some(path) => document::read_system(path),
            None => build_system(&self.params.spec()?, self.params.nmax),
        }
    }
}

#[derive(Args)]
struct StateArgs {
    /// aocs-iso, docs-new, lin-iso or lin-new.
    #[arg(long)]
    family: String,
    /// `R@theta` (radians) or `re,im`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_label)]
    z: Label,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_measure(s: &str) -> Result<MeasureFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_label(s: &str) -> Result<Label, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InsufficientSupport { .. } => 3,
            Error::NonConvergence { .. } | Error::Construction { .. } => 1,
            Error::Domain { .. }
            | Error::InvalidSpec(_)
            | Error::SingularPotential { .. }
            | Error::Truncation { .. }
            | Error::Usage(_)
            | Error::Document(_) => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Build { system, out } => cmd_build(&system, out.as_deref()),
        Command::Painleve {
            system,
            assign,
            perturb_a,
            tol,
            band,
            csv,
            out,
        } => cmd_painleve(&system, assign.as_deref(), perturb_a, tol, band, csv.as_deref(), out.as_deref()),
        Command::Cs {
            source,
            state,
            density,
            witness,
            out,
        } => cmd_cs(&source, &state, density.as_deref(), witness.as_deref(), out.as_deref()),
        Command::Verify { system, suite, out } => cmd_verify(&system, &suite, out.as_deref()),
        Command::Measure {
            source,
            measure,
            r_max,
            count,
            tol,
            out,
        } => cmd_measure(&source, measure, r_max, count, tol, out.as_deref()),
        Command::Density { source, state, out } => cmd_density(&source, &state, out.as_deref()),
        Command::Kernel {
            source,
            family,
            zp,
            extent,
            count,
            out,
        } => cmd_kernel(&source, family, zp, extent, count, out.as_deref()),
    }
}

fn emit_json(out: Option<&Path>, value: &Value) -> CmdResult {
    match out {
        Some(path) => document::write_json(path, value)?,
        None => print!("{}", document::canonical_json(value)),
    }
    Ok(())
}

fn emit_csv(out: Option<&Path>, header: &[&str], rows: Vec<Vec<f64>>) -> CmdResult {
    match out {
        Some(path) => document::write_csv_file(path, header, rows)?,
        None => document::write_csv(std::io::stdout().lock(), header, rows)
            .map_err(|e| Failure { code: 1, message: e.to_string() })?,
    }
    Ok(())
}

fn cmd_build(args: &SystemArgs, out: Option<&Path>) -> CmdResult {
    let system = build_system(&args.spec()?, args.nmax)?;
    let doc = serde_json::to_value(document::SystemDocument::from_system(&system))
        .map_err(|e| Error::Document(e.to_string()))?;
    emit_json(out, &doc)
}

/// Parses `e1=eps0` (cyclic completion) or `e1=..,e2=..,e3=..`.
fn parse_assignment(spec: &SystemSpec, text: &str) -> pivcs::Result<Assignment> {
    let mut roles: [Option<Root>; 3] = [None; 3];
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("assignment `{part}` is not of the form eN=root")))?;
        let slot = match key.trim() {
            "e1" => 0,
            "e2" => 1,
            "e3" => 2,
            other => return Err(Error::Usage(format!("unknown assignment slot `{other}` (use e1, e2, e3)"))),
        };
        roles[slot] = Some(value.parse()?);
    }
    match roles {
        [Some(first), None, None] => Ok(Assignment::cyclic(spec, first)),
        [Some(a), Some(b), Some(c)] => Assignment::new(spec, [a, b, c]),
        _ => Err(Error::Usage("give e1 alone or all of e1, e2, e3".into())),
    }
}

fn cmd_painleve(
    path: &Path,
    assign: Option<&str>,
    perturb_a: f64,
    tol: f64,
    band: Option<usize>,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    let system = document::read_system(path)?;
    let assignment = match assign {
        Some(text) => parse_assignment(&system.spec, text)?,
        None => Assignment::nodeless(&system.spec),
    };
    // φ at 1/2 has k nodes; a narrow band leaves stencils next to poles of g.
    let band = band.unwrap_or(if assignment.roles[0] == Root::Half && system.spec.k > 0 {
        WIDE_GUARD_BAND
    } else {
        GUARD_BAND
    });
    let solution = painleve::solve_with_band(&system, assignment, perturb_a, band)?;
    if let Some(csv) = csv {
        let rows = solution
            .xs()
            .into_iter()
            .zip(&solution.g)
            .zip(&solution.residual)
            .map(|((x, g), r)| vec![x, *g, *r])
            .collect::<Vec<_>>();
        document::write_csv_file(csv, &["x", "g", "residual"], rows)?;
    }
    let provenance = Provenance::new(&system.spec, system.n_max)
        .with_tolerance("residual", tol)
        .with_tolerance("guard_band", band as f64);
    let mut summary = document::painleve_summary(&solution, &provenance, tol)?;
    summary["perturb_a"] = perturb_a.into();
    emit_json(out, &summary)?;
    if solution.passes(tol) {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!(
                "Painlevé IV residual {:e} exceeds tolerance {tol:e} (a = {}, b = {})",
                solution.stats.max, solution.a, solution.b
            ),
        })
    }
}

/// Parses the family, turning the non-constructible docs-iso request into a
/// divergence explanation backed by witness data.
fn resolve_family(state: &StateArgs, spec: &SystemSpec, witness: Option<&Path>) -> Result<Family, Failure> {
    let params = &LadderCoeffs::from_spec(spec);
    match state.family.parse::<Family>() {
        Ok(f) => Ok(f),
        Err(e) if state.family.trim().eq_ignore_ascii_case("docs-iso") => {
            let w = divergence_witness(state.z, params, WITNESS_TERMS);
            let provenance = Provenance::new(spec, 0).with_tolerance("divergence_threshold", coherent::DIVERGENCE_THRESHOLD);
            let doc = document::witness_document(&w, &provenance)?;
            let location = match witness {
                Some(path) => {
                    document::write_json(path, &doc)?;
                    format!("witness data written to {}", path.display())
                }
                None => {
                    print!("{}", document::canonical_json(&doc));
                    "witness data printed on stdout".into()
                }
            };
            let growth = match w.exceeds_at {
                Some(n) => format!("partial sums exceed 1e6 after {n} terms"),
                None => format!("partial sums not yet past 1e6 after {WITNESS_TERMS} terms"),
            };
            Err(Failure {
                code: 2,
                message: match w.n_star {
                    Some(n) => format!("{e}; {growth}, terms grow from n = {n}; {location}"),
                    None => format!("{e}; {growth}; {location}"),
                },
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_cs(
    source: &SourceArgs,
    state: &StateArgs,
    density: Option<&Path>,
    witness: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    let (spec, n_max) = source.spec()?;
    let params = LadderCoeffs::from_spec(&spec);
    let family = resolve_family(state, &spec, witness)?;
    let cs = coherent::construct(family, state.z, &params, MAX_LEVELS)?;
    let mut density_norm = None;
    if let Some(path) = density {
        let system = source.system()?;
        let wf = coherent::wavefunction(&cs, &system)?;
        density_norm = Some(wf.norm);
        write_wavefunction(path, &wf)?;
    }
    let provenance = Provenance::new(&spec, n_max)
        .with_tolerance("truncation_tail", coherent::TAIL_TOL);
    let doc = document::coherent_document(
        &cs,
        &provenance,
        density.map(|p| p.to_string_lossy()).as_deref(),
        density_norm,
    )?;
    emit_json(out, &doc)
}

fn wavefunction_rows(wf: &coherent::Wavefunction) -> Vec<Vec<f64>> {
    wf.xs
        .iter()
        .zip(&wf.density)
        .zip(&wf.psi)
        .map(|((x, d), p)| vec![*x, *d, p.re, p.im])
        .collect()
}

const DENSITY_HEADER: [&str; 4] = ["x", "density", "psi_re", "psi_im"];

fn write_wavefunction(path: &Path, wf: &coherent::Wavefunction) -> CmdResult {
    document::write_csv_file(path, &DENSITY_HEADER, wavefunction_rows(wf))?;
    Ok(())
}

fn cmd_density(source: &SourceArgs, state: &StateArgs, out: Option<&Path>) -> CmdResult {
    let system = source.system()?;
    let params = LadderCoeffs::from_spec(&system.spec);
    let family = resolve_family(state, &system.spec, None)?;
    let cs = coherent::construct(family, state.z, &params, MAX_LEVELS)?;
    let wf = coherent::wavefunction(&cs, &system)?;
    emit_csv(out, &DENSITY_HEADER, wavefunction_rows(&wf))
}

fn cmd_verify(path: &Path, suites: &[Suite], out: Option<&Path>) -> CmdResult {
    let system = document::read_system(path)?;
    let suites = if suites.is_empty() { Suite::ALL.to_vec() } else { suites.to_vec() };
    let report = verify::run(&system, &suites);
    let mut provenance = Provenance::new(&system.spec, system.n_max);
    for (name, tol) in verify::TOLERANCES {
        provenance = provenance.with_tolerance(name, *tol);
    }
    emit_json(out, &document::report_document(&report, &provenance)?)?;
    if report.passed {
        return Ok(());
    }
    let failing: Vec<String> = report
        .failures()
        .map(|c| match &c.detail {
            Some(d) => format!("  [{}] {}: {d}", c.suite, c.name),
            None => format!("  [{}] {}: {:e} (tolerance {:e})", c.suite, c.name, c.value, c.tolerance),
        })
        .collect();
    Err(Failure {
        code: 1,
        message: format!("{} check(s) failed:\n{}", failing.len(), failing.join("\n")),
    })
}

fn cmd_measure(
    source: &SourceArgs,
    measure: MeasureFamily,
    r_max: f64,
    count: usize,
    tol: f64,
    out: Option<&Path>,
) -> CmdResult {
    let (spec, _) = source.spec()?;
    let m = MeasureFn::new(measure, LadderCoeffs::from_spec(&spec)).with_tol(tol);
    let table = coherent::measure::density_table(&m, r_max, count)?;
    emit_csv(out, &["r", "value"], table.into_iter().map(|(r, v)| vec![r, v]).collect())
}

fn cmd_kernel(
    source: &SourceArgs,
    family: Family,
    zp: Label,
    extent: f64,
    count: usize,
    out: Option<&Path>,
) -> CmdResult {
    if count < 2 || !(extent > 0.0) {
        return Err(Error::Usage("kernel grid needs count >= 2 and a positive extent".into()).into());
    }
    let (spec, _) = source.spec()?;
    let params = LadderCoeffs::from_spec(&spec);
    let axis: Vec<f64> = (0..count)
        .map(|i| -extent + 2.0 * extent * i as f64 / (count - 1) as f64)
        .collect();
    let grid = coherent::kernel_grid(family, zp, &params, &axis, &axis)?;
    let mut rows = Vec::with_capacity(count * count);
    for (y, row) in axis.iter().zip(&grid) {
        for (x, k) in axis.iter().zip(row) {
            rows.push(vec![*x, *y, *k]);
        }
    }
    emit_csv(out, &["re", "im", "modulus"], rows)
}
