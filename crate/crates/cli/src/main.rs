use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use deformq::classes::orbit_equivalent;
use deformq::literal::{parse_poly_at, Pos};
use deformq_cli::scenario::parse_class;
use deformq_cli::{parse_model_file, parse_scenario, run_checks, Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "deformq", version, about = "Exact checks for star products, deformed projections and line bundles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a scenario file.
    Verify {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Include per-check wall-clock times (makes output non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Same as `verify`, rendered as JSON unless `--format text` is given.
    Report {
        scenario: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        timings: bool,
    },
    /// Print the coefficients of f ⋆ g.
    StarMul {
        scenario: String,
        #[arg(allow_hyphen_values = true)]
        f: String,
        #[arg(allow_hyphen_values = true)]
        g: String,
    },
    /// Print the lifted idempotent qP.
    Lift {
        scenario: String,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Decide whether (im/2π)·t0 is integral up to the model's automorphisms.
    Orbit {
        model: String,
        #[arg(allow_hyphen_values = true)]
        t0: String,
    },
}

fn read(path: &str) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_string(), source })
}

fn load(path: &str, order: Option<usize>) -> Result<Scenario, ScenarioError> {
    parse_scenario(&read(path)?, order)
}

fn usage_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn verify(path: &str, seed: Option<u64>, order: Option<usize>, format: Format, timings: bool) -> ExitCode {
    let sc = match load(path, order) {
        Ok(sc) => sc,
        Err(e) => return usage_error(e),
    };
    let seed = seed.or(sc.seed).unwrap_or(0);
    let mut report = run_checks(&sc, seed);
    if !timings {
        report = report.without_timings();
    }
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => print!("{}", report.to_json()),
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn star_mul(path: &str, f: &str, g: &str) -> ExitCode {
    let sc = match load(path, None) {
        Ok(sc) => sc,
        Err(e) => return usage_error(e),
    };
    let origin = Pos { line: 1, column: 1 };
    let (f, g) = match (parse_poly_at(f, &sc.names, origin), parse_poly_at(g, &sc.names, origin)) {
        (Ok(f), Ok(g)) => (f, g),
        (Err(e), _) | (_, Err(e)) => return usage_error(e),
    };
    let prod = sc.star.mul_fn(&f, &g);
    for (k, c) in prod.coeffs().iter().enumerate() {
        println!("lambda^{k}: {}", c.display_with(&sc.names));
    }
    ExitCode::SUCCESS
}

fn lift(path: &str, order: Option<usize>) -> ExitCode {
    let sc = match load(path, order) {
        Ok(sc) => sc,
        Err(e) => return usage_error(e),
    };
    let Some(p0) = &sc.p0 else {
        return usage_error("scenario has no projection P0");
    };
    let lifted = match deformq::matdef::lift_idempotent(p0, &sc.star) {
        Ok(l) => l,
        Err(e) => return usage_error(e),
    };
    for (k, m) in lifted.qp().coeffs().iter().enumerate() {
        let rows: Vec<String> = (0..m.rows())
            .map(|i| {
                let cells: Vec<String> = (0..m.cols()).map(|j| m.poly(i, j).display_with(&sc.names)).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        println!("lambda^{k}: [{}]", rows.join(", "));
    }
    let clean = lifted.defect().is_zero();
    println!("idempotent mod lambda^{}: {}", lifted.order() + 1, if clean { "yes" } else { "no" });
    println!("full: {}", if lifted.is_full() { "yes" } else { "no" });
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn orbit(model_path: &str, t0: &str) -> ExitCode {
    let model = match read(model_path).and_then(|t| parse_model_file(&t)) {
        Ok(m) => m,
        Err(e) => return usage_error(e),
    };
    let class = match parse_class(t0, Pos { line: 1, column: 1 }) {
        Ok(c) if c.rank() == model.rank() => c,
        Ok(c) => return usage_error(format!("class has {} entries, model has b = {}", c.rank(), model.rank())),
        Err(e) => return usage_error(e),
    };
    if orbit_equivalent(&model, &class) {
        println!("t0 = {class}: integral");
        ExitCode::SUCCESS
    } else {
        println!("t0 = {class}: not integral");
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { scenario, seed, order, format, timings } => verify(&scenario, seed, order, format, timings),
        Command::Report { scenario, format, seed, order, timings } => verify(&scenario, seed, order, format, timings),
        Command::StarMul { scenario, f, g } => star_mul(&scenario, &f, &g),
        Command::Lift { scenario, order } => lift(&scenario, order),
        Command::Orbit { model, t0 } => orbit(&model, &t0),
    }
}
