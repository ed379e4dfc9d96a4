use std::fmt;
use std::io::Write;

use calabi_core::catalog::{self, CatalogEntry};
use calabi_core::frames::{theta_bruteforce_at, theta_max_at};
use calabi_core::geodesics::{geodesic, length_to_boundary_capped};
use calabi_core::invariants::CalabiInvariants;
use calabi_core::legendre::{duality_defect, legendre_point};
use calabi_core::pde::{identity_coefficient, operator_identity, pde_reports};
use calabi_core::report::{csv_records, csv_string, AnalysisOptions, AnalysisReport, Envelope};
use calabi_core::warped::{
    christoffel_numeric, closed_form_metric, integrate_eta, stated_christoffel, stated_cubic, CaseId, ParamCase,
};
use calabi_core::{verify, ConvexFunction, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;

#[derive(Debug)]
pub enum Failure {
    /// Bad input; exit status 2.
    Usage(String),
    /// Numeric or domain failure; exit status 3.
    Numeric(String),
    /// Some verification check failed; exit status 1.
    ChecksFailed,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::ChecksFailed => 1,
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => f.write_str(m),
            Failure::ChecksFailed => f.write_str("verification failed"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Analyze(a) => analyze(a),
        Command::Residual(a) => residual(a),
        Command::Identity54(a) => identity(a),
        Command::Theta(a) => theta(a),
        Command::Ode(a) => ode(a),
        Command::ParamCheck(a) => param_check(a),
        Command::Legendre(a) => legendre(a),
        Command::Geodesic(a) => geodesic_cmd(a),
        Command::Length(a) => length(a),
        Command::Catalog(a) => catalog_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn write_out(out: &OutputArgs, text: &str) -> Outcome {
    write_to(out.out.as_deref(), text)
}

fn write_to(path: Option<&std::path::Path>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("--out {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Numeric(format!("writing output: {e}")))
        }
    }
}

/// Flattens a JSON value into `key,value` rows with dotted paths.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, rows);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&join(&i.to_string()), x, rows);
            }
        }
        Value::Null => rows.push(vec![prefix.to_string(), String::new()]),
        Value::String(s) => rows.push(vec![prefix.to_string(), s.clone()]),
        other => rows.push(vec![prefix.to_string(), other.to_string()]),
    }
}

fn key_value_csv<T: Serialize>(result: &T) -> Result<String, Failure> {
    let v = serde_json::to_value(result).map_err(Error::from)?;
    let mut rows = Vec::new();
    flatten("", &v, &mut rows);
    Ok(csv_records(&["key", "value"], &rows)?)
}

type CsvFn<'a, T> = &'a dyn Fn(&T) -> Result<String, Failure>;

/// Writes `result` as a JSON envelope, or as CSV via `csv` (key/value rows
/// when `csv` is `None`).
fn emit<T: Serialize>(
    command: &str,
    seed: Option<u64>,
    result: T,
    out: &OutputArgs,
    csv: Option<CsvFn<'_, T>>,
) -> Outcome {
    let text = match out.format.unwrap_or(Format::Json) {
        Format::Json => Envelope::new(command, seed, &result).to_json()?,
        Format::Csv => match csv {
            Some(f) => f(&result)?,
            None => key_value_csv(&result)?,
        },
    };
    write_out(out, &text)
}

fn resolve_dim(dim: Option<usize>, point: &[f64]) -> Result<usize, Failure> {
    match dim {
        Some(n) if n != point.len() => Err(usage(format!(
            "--dim {n} does not match --point of length {}",
            point.len()
        ))),
        Some(n) => Ok(n),
        None => Ok(point.len()),
    }
}

struct Resolved {
    function: ConvexFunction,
    entry: Option<CatalogEntry>,
}

fn resolve_function(args: &FunctionArgs, point: &[f64]) -> Result<Resolved, Failure> {
    let n = resolve_dim(args.dim, point)?;
    if n == 0 {
        return Err(usage("--point must not be empty"));
    }
    match (&args.source.catalog, &args.source.expr) {
        (Some(name), _) => {
            let entry = catalog::get(name, n)?;
            Ok(Resolved {
                function: entry.function.clone(),
                entry: Some(entry),
            })
        }
        (None, Some(src)) => {
            let domain: Vec<&str> = args.domain.iter().map(String::as_str).collect();
            Ok(Resolved {
                function: ConvexFunction::parse(src, &domain, n)?,
                entry: None,
            })
        }
        (None, None) => Err(usage("one of --catalog or --expr is required")),
    }
}

fn check_restarts(restarts: usize) -> Outcome {
    if restarts < 8 {
        return Err(usage(format!("--restarts must be at least 8, got {restarts}")));
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Outcome {
    let r = resolve_function(&a.function, &a.point.0)?;
    check_restarts(a.restarts)?;
    let exponents = match &a.a {
        Some(list) => list.0.clone(),
        None => {
            let mut v: Vec<f64> = r
                .entry
                .as_ref()
                .and_then(|e| e.expected("solving_exponent"))
                .into_iter()
                .collect();
            v.push(-1.0);
            v
        }
    };
    if exponents.contains(&0.0) {
        return Err(Error::ZeroExponent.into());
    }
    let report = AnalysisReport::build(
        &r.function,
        &a.point.0,
        AnalysisOptions {
            exponents: &exponents,
            restarts: a.restarts,
            seed: a.seed,
            expected: r.entry.map(|e| e.expected).unwrap_or_default(),
        },
    )?;
    emit("analyze", Some(a.seed), report, &a.output, None)
}

fn residual(a: ResidualArgs) -> Outcome {
    if a.a.0.contains(&0.0) {
        return Err(Error::ZeroExponent.into());
    }
    let r = resolve_function(&a.function, &a.point.0)?;
    let reports = pde_reports(&r.function, &a.point.0, &a.a.0)?;
    let result = json!({
        "function": r.function.descriptor(),
        "point": a.point.0,
        "reports": reports,
    });
    let rows = reports
        .iter()
        .map(|p| {
            vec![
                p.a,
                p.det,
                p.w,
                p.residual_12,
                p.residual_11,
                p.implied_lsharp,
                p.normalized_residual,
            ]
        })
        .collect::<Vec<_>>();
    let csv = move |_: &Value| -> Result<String, Failure> {
        Ok(csv_string(
            &[
                "a",
                "detD",
                "w",
                "residual_12",
                "residual_11",
                "implied_lsharp",
                "normalized_residual",
            ],
            rows.clone(),
        )?)
    };
    emit("residual", None, result, &a.output, Some(&csv))
}

#[derive(Serialize)]
struct IdentityResult {
    n: usize,
    a: f64,
    point: Vec<f64>,
    lhs: f64,
    rhs: f64,
    coefficient: f64,
    relative_error: f64,
}

fn identity(a: IdentityArgs) -> Outcome {
    if a.a == 0.0 {
        return Err(Error::ZeroExponent.into());
    }
    let n = resolve_dim(a.dim, &a.point.0)?;
    let (lhs, rhs) = operator_identity(n, a.a, &a.point.0)?;
    let relative_error = if rhs != 0.0 { (lhs / rhs - 1.0).abs() } else { lhs.abs() };
    let result = IdentityResult {
        n,
        a: a.a,
        point: a.point.0,
        lhs,
        rhs,
        coefficient: identity_coefficient(n, a.a),
        relative_error,
    };
    emit("identity54", None, result, &a.output, None)
}

fn theta(a: ThetaArgs) -> Outcome {
    let r = resolve_function(&a.function, &a.point.0)?;
    check_restarts(a.restarts)?;
    if let Some(res) = a.resolution {
        if res < 360 {
            return Err(usage(format!("--resolution must be at least 360, got {res}")));
        }
        if !(2..=3).contains(&r.function.dim()) {
            return Err(Error::UnsupportedDimension(r.function.dim()).into());
        }
    }
    let inv = CalabiInvariants::at(&r.function, &a.point.0)?;
    let ej = theta_max_at(&inv, a.restarts, a.seed)?;
    let brute = a.resolution.map(|res| theta_bruteforce_at(&inv, res)).transpose()?;
    let mut result = serde_json::to_value(&ej).map_err(Error::from)?;
    result["bruteforce"] = json!(brute);
    emit("theta", Some(a.seed), result, &a.output, None)
}

fn ode(a: OdeArgs) -> Outcome {
    if !(a.t_end > 0.0 && a.t_end.is_finite()) {
        return Err(usage(format!("--t-end must be positive, got {}", a.t_end)));
    }
    let tr = integrate_eta(a.eta0, a.t_end, a.step)?;
    let csv = |t: &calabi_core::EtaTrajectory| -> Result<String, Failure> { Ok(t.to_csv()?) };
    emit("ode", None, tr, &a.output, Some(&csv))
}

#[derive(Serialize)]
struct ParamCheckResult {
    params: Vec<f64>,
    graph_point: Vec<f64>,
    graph_residual: f64,
    metric: Vec<Vec<f64>>,
    metric_closed_form: Vec<Vec<f64>>,
    metric_deviation: f64,
    christoffel_deviation: f64,
    cubic_deviation: f64,
}

fn max_dev<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn param_check(a: ParamCheckArgs) -> Outcome {
    let id = CaseId::from_name(&a.case).ok_or_else(|| {
        usage(format!(
            "--case must be one of sphere, flat_minus, flat_plus, hyperbolic; got `{}`",
            a.case
        ))
    })?;
    let n = match (&a.point, a.dim) {
        (Some(p), d) => resolve_dim(d, &p.0)?,
        (None, Some(d)) => d,
        (None, None) => 2,
    };
    let case = ParamCase::new(id, n)?;
    let params: Vec<Vec<f64>> = match a.point {
        Some(p) => vec![p.0],
        None => {
            if a.samples == 0 {
                return Err(usage("--samples must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..a.samples).map(|_| case.sample_params(&mut rng)).collect()
        }
    };
    let to_rows = |m: &nalgebra::DMatrix<f64>| (0..n).map(|i| m.row(i).iter().copied().collect()).collect();
    let mut checks = Vec::new();
    for p in params {
        let g = case.pullback_metric(&p)?;
        let want = closed_form_metric(id, &p);
        let num = christoffel_numeric(|q| closed_form_metric(id, q), &p, 1e-5);
        checks.push(ParamCheckResult {
            graph_point: case.normalized_point(&p)?,
            graph_residual: case.graph_residual(&p)?,
            metric_deviation: max_dev(g.iter(), want.iter()),
            christoffel_deviation: max_dev(&num, &stated_christoffel(id, &p)),
            cubic_deviation: max_dev(&case.pullback_cubic(&p)?, &stated_cubic(id, &p)),
            metric: to_rows(&g),
            metric_closed_form: to_rows(&want),
            params: p,
        });
    }
    let result = json!({
        "case": id.name(),
        "n": n,
        "target": id.target(),
        "checks": checks,
    });
    emit("param-check", Some(a.seed), result, &a.output, None)
}

fn legendre(a: LegendreArgs) -> Outcome {
    let r = resolve_function(&a.function, &a.point.0)?;
    let n = r.function.dim();
    let pair = legendre_point(&r.function, &a.point.0)?;
    let conjugate = match (&a.conjugate, &a.conjugate_expr) {
        (Some(name), _) => Some(catalog::get(name, n)?.function),
        (None, Some(src)) => {
            let domain: Vec<&str> = a.conjugate_domain.iter().map(String::as_str).collect();
            Some(ConvexFunction::parse(src, &domain, n)?)
        }
        (None, None) => None,
    };
    let defect = conjugate
        .as_ref()
        .map(|g| duality_defect(&r.function, g, &a.point.0))
        .transpose()?;
    let result = json!({
        "function": r.function.descriptor(),
        "conjugate": conjugate.as_ref().map(|g| g.descriptor()),
        "y": pair.y,
        "x": pair.x,
        "u_value": pair.u_value,
        "duality_defect": defect,
    });
    emit("legendre", None, result, &a.output, None)
}

fn geodesic_cmd(a: GeodesicArgs) -> Outcome {
    let r = resolve_function(&a.function, &a.point.0)?;
    if a.velocity.0.len() != r.function.dim() {
        return Err(usage(format!(
            "--velocity has length {}, expected {}",
            a.velocity.0.len(),
            r.function.dim()
        )));
    }
    let csv = |p: &calabi_core::GeodesicPath| -> Result<String, Failure> { Ok(p.to_csv()?) };
    match geodesic(&r.function, &a.point.0, &a.velocity.0, a.s_end, a.step) {
        Ok(path) => emit("geodesic", None, path, &a.output, Some(&csv)),
        Err(Error::LeftDomain { s, path }) => {
            // keep the partial path, then report the failure
            emit("geodesic", None, *path, &a.output, Some(&csv))?;
            Err(Failure::Numeric(format!("geodesic left the domain at s = {s}")))
        }
        Err(e) => Err(e.into()),
    }
}

fn length(a: LengthArgs) -> Outcome {
    let r = resolve_function(&a.function, &a.point.0)?;
    let probe = length_to_boundary_capped(&r.function, &a.point.0, &a.direction.0, a.eps, a.cap)?;
    emit("length", None, probe, &a.output, None)
}

fn catalog_cmd(a: CatalogArgs) -> Outcome {
    match a.action {
        CatalogAction::List { output } => {
            let entries: Vec<Value> = catalog::list()
                .into_iter()
                .map(|(name, label)| json!({ "name": name, "label": label }))
                .collect();
            let rows: Vec<Vec<String>> = catalog::list()
                .into_iter()
                .map(|(n, l)| vec![n.to_string(), l.to_string()])
                .collect();
            let csv = move |_: &Vec<Value>| -> Result<String, Failure> { Ok(csv_records(&["name", "label"], &rows)?) };
            emit("catalog list", None, entries, &output, Some(&csv))
        }
        CatalogAction::Show { name, dim, output } => {
            let e = catalog::get(&name, dim)?;
            let result = json!({
                "name": e.name,
                "label": e.label,
                "n": e.n,
                "source": e.function.body.to_string(),
                "domain": e.function.domain.inequalities.iter().map(|h| format!("{h} > 0")).collect::<Vec<_>>(),
                "expected": e.expected,
                "solves_for_no_exponent": e.solves_for_no_exponent,
                "param_case": e.param_case.map(|c| c.name()),
                "equivalent_to": e.equivalence.as_ref().map(|(_, target)| *target),
            });
            emit("catalog show", None, result, &output, None)
        }
    }
}

fn verify_cmd(a: VerifyArgs) -> Outcome {
    let Suite::Paper = a.suite;
    let report = verify::run_suite(a.seed);
    let text = match a.format {
        None => report.table(),
        Some(Format::Json) => Envelope::new("verify", Some(a.seed), &report).to_json()?,
        Some(Format::Csv) => {
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.id.to_string(),
                        c.label.clone(),
                        if c.passed { "pass" } else { "fail" }.to_string(),
                        c.worst.to_string(),
                        c.tolerance.to_string(),
                        c.detail.clone(),
                    ]
                })
                .collect();
            csv_records(&["id", "label", "status", "worst", "tolerance", "detail"], &rows)?
        }
    };
    write_to(a.out.as_deref(), &text)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::ChecksFailed)
    }
}
