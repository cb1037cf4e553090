//! Argument parsing and validation.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use halphen_core::modular_forms::MAX_TERMS_ENV;
use halphen_core::SeriesParams;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// P = f = 1.
    Constant,
    /// P = |Θ¹Θ²Θ³|, f = |Θ²|/r from the closed-form triad.
    Triad,
}

/// Flags shared by every subcommand. Each suite accepts a subset; the
/// others are rejected so a typo never silently falls back to a default.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Flags {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output path (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Integrator or quadrature tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Lower end of the sweep variable.
    #[arg(long, allow_negative_numbers = true)]
    pub t_min: Option<f64>,
    /// Upper end of the sweep variable.
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    /// Number of samples (points, triples, eigenvalues or displacements).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Higgs vacuum expectation value.
    #[arg(long, allow_negative_numbers = true)]
    pub v: Option<f64>,
    /// Gauge coupling.
    #[arg(long, allow_negative_numbers = true)]
    pub e: Option<f64>,
    /// Outer radius of monopole quadratures.
    #[arg(long, allow_negative_numbers = true)]
    pub rmax: Option<f64>,
    /// Affine length of geodesics.
    #[arg(long, allow_negative_numbers = true)]
    pub arc: Option<f64>,
    /// Grid size (points per axis or interior points).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Coefficient preset of the radial Schrödinger problem.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Reduced Planck constant of the radial Schrödinger problem.
    #[arg(long, allow_negative_numbers = true)]
    pub hbar: Option<f64>,
}

macro_rules! leaves {
    ($name:ident { $($(#[$doc:meta])* $variant:ident),* $(,)? }) => {
        #[derive(Debug, Clone, PartialEq, Subcommand)]
        pub enum $name {
            $($(#[$doc])* $variant(Flags),)*
        }
        impl $name {
            fn split(self) -> (String, Flags) {
                match self {
                    $($name::$variant(f) => (stringify!($variant).to_lowercase(), f),)*
                }
            }
        }
    };
}

leaves!(Verify {
    /// Theta and Eisenstein identities over random τ.
    Forms,
    /// Closed-form triad against the DH system and the integrator.
    Dh,
    /// The y, y″ and Jacobian identities of the quasi-modular triad.
    Halphen,
    /// Anti-self-duality, Ricci-flatness and a perturbed control on the AH branch.
    Asd,
    /// Ricci tensor and torsion on the AH branch.
    Ricci,
    /// Bogomolny residuals, convergence and the linearized system.
    Bogomolny,
    /// Energy, flux, charge and the Bogomolny bound.
    Charge,
    /// Bogomolny identity and charge checks together.
    Bps,
});
leaves!(Sweep {
    /// Closed-form triad on a t grid.
    Dh,
    /// Metric coefficients and curvature residuals on the AH branch.
    Metric,
});
leaves!(Monopole {
    /// Energy and profile table.
    Energy,
    /// Abelian 't Hooft field against the Dirac field, magnetic charge.
    Project,
    /// Dirac monopole flux quantisation.
    Dirac,
});
leaves!(Moduli {
    /// Sylvester resultant against the k = 2 closed form.
    Resultant,
    /// Geodesic conservation on the AH metric.
    Geodesic,
    /// Line scattering of a translated charge-one monopole.
    Scatter,
    /// Radial Schrödinger spectrum.
    Spectrum,
});

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Group {
    /// Identity and acceptance checks.
    #[command(subcommand)]
    Verify(Verify),
    /// Parameter sweeps exported as tables.
    #[command(subcommand)]
    Sweep(Sweep),
    /// Monopole energy, abelian projection and Dirac limit.
    #[command(subcommand)]
    Monopole(Monopole),
    /// Rational maps, geodesics, line scattering and spectra.
    #[command(subcommand)]
    Moduli(Moduli),
}

/// Verification suites for quasi-modular forms, the Darboux-Halphen flow,
/// Bianchi IX instantons, BPS monopoles and the two-monopole moduli space.
///
/// Exit codes: 0 when every check passes, 1 when a check fails, 2 on a usage
/// error. HALPHEN_MAX_TERMS overrides the q-series term limit.
#[derive(Debug, Parser)]
#[command(name = "halphen", version)]
pub struct Cli {
    #[command(subcommand)]
    pub group: Group,
}

/// A parsed and validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `"<group> <leaf>"`, e.g. `"verify dh"`.
    pub command: String,
    pub flags: Flags,
    pub series: SeriesParams,
}

#[derive(Debug)]
pub enum CliError {
    /// Parser output, including `--help` and `--version`.
    Clap(clap::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => 2,
        }
    }

    /// Help and version output go to standard output.
    pub fn is_informational(&self) -> bool {
        matches!(self, CliError::Clap(e) if e.exit_code() == 0)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{}", e.render()),
            CliError::Usage(m) => writeln!(f, "error: {m}"),
        }
    }
}

/// Flags each command understands, besides `--format`, `--out` and `--seed`.
pub fn accepted_flags(command: &str) -> &'static [&'static str] {
    match command {
        "verify forms" | "verify halphen" => &["t-min", "t-max", "samples"],
        "verify dh" => &["t-min", "t-max", "samples", "tol"],
        "verify asd" | "verify ricci" | "sweep metric" => &["t-min", "t-max", "samples"],
        "verify bogomolny" => &["v", "e", "grid", "samples"],
        "verify charge" | "monopole energy" => &["v", "e", "rmax", "tol", "samples"],
        "verify bps" => &["v", "e", "rmax", "tol", "grid", "samples"],
        "sweep dh" => &["t-min", "t-max", "samples"],
        "monopole project" => &["v", "e", "rmax", "tol", "samples"],
        "monopole dirac" => &["rmax", "samples"],
        "moduli resultant" => &["samples"],
        "moduli geodesic" => &["tol", "arc", "samples"],
        "moduli scatter" => &["tol", "samples", "grid", "v", "e"],
        "moduli spectrum" => &["grid", "samples", "preset", "hbar", "t-min", "t-max"],
        _ => &[],
    }
}

fn given(f: &Flags) -> Vec<&'static str> {
    let mut out = Vec::new();
    let mut push = |set: bool, name| {
        if set {
            out.push(name)
        }
    };
    push(f.tol.is_some(), "tol");
    push(f.t_min.is_some(), "t-min");
    push(f.t_max.is_some(), "t-max");
    push(f.samples.is_some(), "samples");
    push(f.v.is_some(), "v");
    push(f.e.is_some(), "e");
    push(f.rmax.is_some(), "rmax");
    push(f.arc.is_some(), "arc");
    push(f.grid.is_some(), "grid");
    push(f.preset.is_some(), "preset");
    push(f.hbar.is_some(), "hbar");
    out
}

fn validate(command: &str, f: &Flags) -> Result<(), String> {
    let ok = accepted_flags(command);
    for name in given(f) {
        if !ok.contains(&name) {
            return Err(format!("`{command}` does not take --{name}"));
        }
    }
    let positive = [
        ("tol", f.tol),
        ("v", f.v),
        ("e", f.e),
        ("rmax", f.rmax),
        ("arc", f.arc),
        ("hbar", f.hbar),
    ];
    for (name, v) in positive {
        if let Some(x) = v {
            if !(x > 0.0 && x.is_finite()) {
                return Err(format!("--{name} must be positive and finite, got {x}"));
            }
        }
    }
    for (name, v) in [("t-min", f.t_min), ("t-max", f.t_max)] {
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(format!("--{name} must be finite, got {x}"));
            }
        }
    }
    if let (Some(a), Some(b)) = (f.t_min, f.t_max) {
        if a >= b {
            return Err(format!("empty range: --t-min {a} is not below --t-max {b}"));
        }
    }
    if f.samples == Some(0) {
        return Err("--samples must be at least 1".into());
    }
    if let Some(n) = f.grid {
        if n < 3 {
            return Err(format!("--grid must be at least 3, got {n}"));
        }
    }
    Ok(())
}

/// Parses argv (program name first) and validates the result.
pub fn parse<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let (group, (leaf, flags)) = match cli.group {
        Group::Verify(c) => ("verify", c.split()),
        Group::Sweep(c) => ("sweep", c.split()),
        Group::Monopole(c) => ("monopole", c.split()),
        Group::Moduli(c) => ("moduli", c.split()),
    };
    let command = format!("{group} {leaf}");
    validate(&command, &flags).map_err(CliError::Usage)?;
    let series = SeriesParams::from_env()
        .map_err(|e| CliError::Usage(format!("{MAX_TERMS_ENV}: {e}")))?;
    Ok(RunConfig {
        command,
        flags,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(args: &str) -> Result<RunConfig, CliError> {
        parse(std::iter::once("halphen").chain(args.split_whitespace()))
    }

    #[test]
    fn parses_examples() {
        let c = p("verify dh --t-min 0.5 --t-max 3 --tol 1e-8").unwrap();
        assert_eq!(c.command, "verify dh");
        assert_eq!((c.flags.t_min, c.flags.t_max, c.flags.tol), (Some(0.5), Some(3.0), Some(1e-8)));
        let c = p("monopole energy --v 1 --e 1 --rmax 40").unwrap();
        assert_eq!(c.command, "monopole energy");
        assert_eq!(c.flags.rmax, Some(40.0));
        assert_eq!(c.flags.seed, 0);
        assert_eq!(c.flags.format, Format::Json);
    }

    #[test]
    fn usage_errors_exit_two() {
        for bad in [
            "verify dh --tol -1",
            "verify dh --bogus 1",
            "verify dh --v 1",
            "verify asd --t-min 3 --t-max 1",
            "moduli spectrum --grid 2",
            "verify nothing",
            "verify dh --format xml",
        ] {
            let e = p(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}");
            assert!(!e.is_informational());
        }
    }

    #[test]
    fn help_is_informational() {
        let e = p("verify --help").unwrap_err();
        assert_eq!(e.exit_code(), 0);
        assert!(e.is_informational());
        assert!(e.to_string().contains("forms"));
    }

    #[test]
    fn negative_range_is_parsed() {
        let c = p("verify dh --t-min -1").unwrap();
        assert_eq!(c.flags.t_min, Some(-1.0));
    }
}
