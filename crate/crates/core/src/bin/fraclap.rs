//! Command-line front end: constants, pointwise operators, form checks,
//! matrix assembly, generalized eigenproblems and the s-sweep.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fraclap::constants::ConstantSet;
use fraclap::fem::{assemble_frac, assemble_log, assemble_mass, load_matrix, mesh_domain, save_matrix, FormKind};
use fraclap::forms::{delta_split, elementary_slacks, energy_s, expansion_residuals};
use fraclap::harness::{sweep, write_outputs, SweepConfig};
use fraclap::operators::{auto_cutoff, frac_lap_point, log_lap_point, symbol_point, Symbol};
use fraclap::spectra::solve_generalized;
use fraclap::testlab::{make_bump, BumpKind, Domain};
use fraclap::Result;

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Fractional and logarithmic Laplacian toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpKind {
    Frac,
    Log,
    Symbol,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bump {
    Smooth,
    PolynomialC2,
    Hat,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormCheck {
    /// reconstruction of E_s from its δ-split parts
    DeltaSplit,
    /// small-s expansion bounds of E_s(u,u) on random bumps
    Lemma23,
    /// elementary bounds on (r^{2s} − 1)/s over log-uniform r
    Lemma22,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Frac,
    Log,
    Mass,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normalization constants for dimension N and order s.
    Constants {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate an operator applied to a radial bump at one point.
    Opeval {
        #[arg(long, value_enum)]
        op: OpKind,
        #[arg(long, default_value_t = 0.25)]
        s: f64,
        /// comma-separated coordinates
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, value_enum, default_value = "smooth")]
        bump: Bump,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// comma-separated bump center; defaults to the origin
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
    },
    /// Run a bilinear-form check and print the slack table as CSV.
    Forms {
        #[arg(long, value_enum)]
        check: FormCheck,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a Galerkin matrix and save it in NLFM format.
    Assemble {
        /// domain as JSON, inline or a file path
        #[arg(long)]
        domain: String,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0.1)]
        s: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lowest eigenpairs of A x = λ M x from NLFM files.
    Spectrum {
        #[arg(long = "A")]
        a: PathBuf,
        #[arg(long = "M")]
        m: PathBuf,
        #[arg(short = 'k', default_value_t = 4)]
        k: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the s-sweep and write CSV tables and report.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// worker threads (results are identical for any value)
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn bump_kind(b: Bump) -> BumpKind {
    match b {
        Bump::Smooth => BumpKind::Smooth,
        Bump::PolynomialC2 => BumpKind::PolynomialC2,
        Bump::Hat => BumpKind::Hat,
    }
}

fn parse_domain(arg: &str) -> Result<Domain> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    let d: Domain = serde_json::from_str(&text)?;
    d.validate()?;
    Ok(d)
}

fn cmd_constants(dim: usize, s: f64, json: bool) -> Result<bool> {
    let c = ConstantSet::new(dim, s)?;
    if json {
        println!("{}", serde_json::to_string(&c)?);
    } else {
        println!("c_frac      {:.17e}", c.c_frac);
        println!("c_log       {:.17e}", c.c_log);
        println!("rho         {:.17e}", c.rho);
        println!("omega       {:.17e}", c.omega);
        match c.kappa_riesz {
            Some(k) => println!("kappa_riesz {k:.17e}"),
            None => println!("kappa_riesz undefined (s >= N/2)"),
        }
        println!("kappa_form  {:.17e}", c.kappa_form);
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_opeval(
    op: OpKind,
    s: f64,
    at: &[f64],
    tol: f64,
    bump: Bump,
    radius: f64,
    amplitude: f64,
    center: Option<Vec<f64>>,
) -> Result<bool> {
    if at.is_empty() {
        return Err(fraclap::Error::InvalidArgument("--at needs at least one coordinate".into()));
    }
    let center = center.unwrap_or_else(|| vec![0.0; at.len()]);
    let u = make_bump(bump_kind(bump), &center, radius, amplitude)?;
    let ev = match op {
        OpKind::Frac => frac_lap_point(&u, s, at, tol)?,
        OpKind::Log => log_lap_point(&u, at, tol)?,
        OpKind::Symbol => {
            let sym = Symbol::Power(2.0 * s);
            let cutoff = auto_cutoff(&u, sym, 0.5 * tol)?;
            symbol_point(&u, sym, at, cutoff, tol)?
        }
    };
    println!("value {:.17e}", ev.value);
    println!("est_error {:.3e}", ev.est_error);
    Ok(true)
}

fn sample_bumps(rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<fraclap::testlab::TestFunction>> {
    (0..count)
        .map(|i| {
            let kind = if i % 2 == 0 { BumpKind::Smooth } else { BumpKind::PolynomialC2 };
            make_bump(kind, &[rng.gen_range(-0.5..0.5)], rng.gen_range(0.5..1.5), rng.gen_range(0.5..2.0))
        })
        .collect()
}

fn cmd_forms(check: FormCheck, seed: u64, out: Option<PathBuf>) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("case,s,delta,slack\n");
    let mut pass = true;
    match check {
        FormCheck::DeltaSplit => {
            let bumps = sample_bumps(&mut rng, 6)?;
            for (p, pair) in bumps.chunks(2).enumerate() {
                for s in [0.05, 0.25] {
                    let e = energy_s(&pair[0], &pair[1], s, 1e-10)?.value;
                    for delta in [0.1, 0.3, 0.9] {
                        let split = delta_split(&pair[0], &pair[1], s, delta, 1e-10)?;
                        let slack = 1e-8 - (split.reconstruct() - e).abs();
                        pass &= slack >= 0.0;
                        csv.push_str(&format!("pair{p},{s},{delta},{slack:e}\n"));
                    }
                }
            }
        }
        FormCheck::Lemma23 => {
            let bumps = sample_bumps(&mut rng, 5)?;
            for (b, u) in bumps.iter().enumerate() {
                for s in [0.05, 0.1, 0.25] {
                    let (s1, s2) = expansion_residuals(u, s)?;
                    pass &= s1 >= 0.0 && s2 >= 0.0;
                    csv.push_str(&format!("bump{b}_first,{s},,{s1:e}\n"));
                    csv.push_str(&format!("bump{b}_second,{s},,{s2:e}\n"));
                }
            }
        }
        FormCheck::Lemma22 => {
            let rs: Vec<f64> = (0..1000).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect();
            for s in [0.01, 0.05, 0.1, 0.2, 0.25] {
                for (i, &r) in rs.iter().enumerate() {
                    let (a, b) = elementary_slacks(r, s)?;
                    let slack = a.min(b);
                    pass &= slack >= 0.0;
                    csv.push_str(&format!("r{i}={r:e},{s},,{slack:e}\n"));
                }
            }
        }
    }
    match out {
        Some(p) => std::fs::write(p, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    eprintln!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn cmd_assemble(domain: &str, kind: Kind, s: f64, n: usize, tol: f64, out: &Path) -> Result<bool> {
    let d = parse_domain(domain)?;
    let mesh = mesh_domain(&d, n)?;
    let m = match kind {
        Kind::Frac => assemble_frac(&mesh, s, tol)?,
        Kind::Log => assemble_log(&mesh, tol)?,
        Kind::Mass => assemble_mass(&mesh)?,
    };
    save_matrix(out, &m)?;
    let name = match m.kind {
        FormKind::Frac => "frac",
        FormKind::Log => "log",
        FormKind::Mass => "mass",
    };
    eprintln!("wrote {name} matrix of size {} to {}", m.size(), out.display());
    Ok(true)
}

fn cmd_spectrum(a: &Path, m: &Path, k: usize, json: bool) -> Result<bool> {
    let a = load_matrix(a)?;
    let m = load_matrix(m)?;
    let sp = solve_generalized(&a, &m, k)?;
    if json {
        let v = serde_json::json!({"eigenvalues": sp.eigenvalues, "residuals": sp.residuals});
        println!("{v}");
    } else {
        for (i, (l, r)) in sp.eigenvalues.iter().zip(&sp.residuals).enumerate() {
            println!("{:>4} {l:.15e} {r:.3e}", i + 1);
        }
    }
    Ok(true)
}

fn cmd_sweep(config: &Path, out: &Path, workers: Option<usize>) -> Result<bool> {
    let mut cfg: SweepConfig = serde_json::from_str(&std::fs::read_to_string(config)?)?;
    if workers.is_some() {
        cfg.workers = workers;
    }
    let res = sweep(&cfg)?;
    let pass = write_outputs(&res, out)?;
    eprintln!("{}", if pass { "all checks passed" } else { "some checks failed, see report.json" });
    Ok(pass)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Constants { dim, s, json } => cmd_constants(dim, s, json),
        Command::Opeval {
            op,
            s,
            at,
            tol,
            bump,
            radius,
            amplitude,
            center,
        } => cmd_opeval(op, s, &at, tol, bump, radius, amplitude, center),
        Command::Forms { check, seed, out } => cmd_forms(check, seed, out),
        Command::Assemble {
            domain,
            kind,
            s,
            n,
            tol,
            out,
        } => cmd_assemble(&domain, kind, s, n, tol, &out),
        Command::Spectrum { a, m, k, json } => cmd_spectrum(&a, &m, k, json),
        Command::Sweep { config, out, workers } => cmd_sweep(&config, &out, workers),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
