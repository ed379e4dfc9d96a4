use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Comma-separated decimals, e.g. `1,0` or `-0.5,2e-3`.
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

impl FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let v: f64 = part.parse().map_err(|_| format!("`{part}` is not a decimal number"))?;
            if !v.is_finite() {
                return Err(format!("`{part}` is not finite"));
            }
            out.push(v);
        }
        Ok(List(out))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "calabi",
    version,
    about = "Calabi affine invariants of graphs of convex functions",
    long_about = "Calabi affine invariants of graphs of convex functions.\n\n\
        Exit status: 0 on success, 1 when `verify` finds a failing check, \
        2 on invalid input, 3 on numeric or domain errors.\n\n\
        The environment variable CALABI_THREADS (a positive integer) caps the worker pool."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metric, cubic form, curvature, operator residuals and theta at one point.
    ///
    /// Reports det Hess f, the eigenvalue range of G = Hess f, the Tchebychev
    /// vector T and |T|², the Pick invariant J, the scalar curvature computed
    /// by contracting Ricci and from n(n-1)J - n²|T|², the coordinate-plane
    /// sectional curvatures, residuals of f^ij (D^a)_ij = 0 for each exponent,
    /// and the maximum theta of the cubic form over unit vectors.
    Analyze(AnalyzeArgs),
    /// Residuals of the affine maximal type operator f^ij (D^a)_ij, D = det Hess f.
    ///
    /// Also reports the Abreu-type contraction F^ij (D^a)_ij with the cofactor
    /// matrix F and the implied L♯ = -F^ij (D^a)_ij.
    Residual(ResidualArgs),
    /// Both sides of f^ij (D^a)_ij = 4(n+1)[(n+1)a² + na] D^a for the
    /// log-parabolic function -¼ ln(x1 - ½Σ_{k≥2} x_k²).
    Identity54(IdentityArgs),
    /// Maximum of the cubic form A(u,u,u) over G-unit vectors (theta) and the
    /// eigenvalues of A(T/|T|, ·, ·).
    Theta(ThetaArgs),
    /// Integrate η' = 1 - η², ρ' = ηρ and track c̄ = ρ²(1 - η²).
    Ode(OdeArgs),
    /// Check a warped-product parametrization: graph residual, pulled-back
    /// metric dt² + ρ(t)² g_fiber, Christoffel symbols and cubic form.
    ParamCheck(ParamCheckArgs),
    /// Legendre transform x = ∇f(y), u = y·x - f(y), and the duality defect
    /// against a conjugate function.
    Legendre(LegendreArgs),
    /// Integrate the geodesic equation of the Calabi metric.
    Geodesic(GeodesicArgs),
    /// Calabi length of a ray until it comes within eps of the domain boundary.
    Length(LengthArgs),
    /// List or show the built-in functions.
    Catalog(CatalogArgs),
    /// Run the acceptance suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct SourceArgs {
    /// Built-in function name (see `calabi catalog list`).
    #[arg(long)]
    pub catalog: Option<String>,
    /// Function body, e.g. "-0.25*ln(x1 - x2^2/2)".
    #[arg(long, allow_hyphen_values = true)]
    pub expr: Option<String>,
}

#[derive(Debug, Args)]
pub struct FunctionArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Domain inequality `h(x) > 0`, given as the expression h; repeatable.
    #[arg(long, requires = "expr", allow_hyphen_values = true)]
    pub domain: Vec<String>,
    /// Dimension n; inferred from --point when omitted.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    /// Evaluation point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub point: List,
    /// Exponents a for the operator residuals; defaults to the catalog
    /// solving exponent (if any) and -1.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<List>,
    /// Random restarts of the theta maximization.
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub point: List,
    /// Nonzero exponents, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub a: List,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    /// Dimension n ≥ 2; inferred from --point when omitted.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    /// Point with x1 > ½Σ_{k≥2} x_k².
    #[arg(long, allow_hyphen_values = true)]
    pub point: List,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub point: List,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also run the grid search with this many steps per angle (n = 2, 3).
    #[arg(long)]
    pub resolution: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    /// Initial value η(0); ρ(0) = 1.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// RK4 step, at most 0.01.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ParamCheckArgs {
    /// sphere, flat_minus, flat_plus or hyperbolic.
    #[arg(long)]
    pub case: String,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Parameters (t, u2, …, un); random samples are drawn when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<List>,
    /// Number of random parameter samples when --point is omitted.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LegendreArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub point: List,
    /// Built-in conjugate function for the duality defect.
    #[arg(long, conflicts_with = "conjugate_expr")]
    pub conjugate: Option<String>,
    /// Conjugate function body for the duality defect.
    #[arg(long, allow_hyphen_values = true)]
    pub conjugate_expr: Option<String>,
    /// Domain inequality of the conjugate; repeatable.
    #[arg(long, requires = "conjugate_expr", allow_hyphen_values = true)]
    pub conjugate_domain: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    /// Starting point.
    #[arg(long, allow_hyphen_values = true)]
    pub point: List,
    /// Initial velocity.
    #[arg(long, allow_hyphen_values = true)]
    pub velocity: List,
    /// Final value of the parameter s.
    #[arg(long, default_value_t = 1.0)]
    pub s_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LengthArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    /// Starting point.
    #[arg(long, allow_hyphen_values = true)]
    pub point: List,
    /// Ray direction.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: List,
    /// Stop where the smallest domain inequality drops to eps.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Euclidean length at which an unbounded ray is cut.
    #[arg(long, default_value_t = 1e3)]
    pub cap: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[command(subcommand)]
    pub action: CatalogAction,
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// Names and descriptions of the built-in functions.
    List {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Source, domain and expected invariants of one entry.
    Show {
        name: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// All thirteen acceptance checks.
    Paper,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "paper")]
    pub suite: Suite,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output format; a plain table when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
