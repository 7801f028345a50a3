use std::fmt;
use std::time::Instant;

use serde::Serialize;

use gausslattice::fits::{self, FitOutcome, ResidualStats};
use gausslattice::theta::{self, DisplacedSumInput, Method};
use gausslattice::verify::{self, CheckReport};
use gausslattice::{
    diffit, efit, oracle_eval, GridSpec, SigmoidParams, StretchedLogisticParams, SQRT_PI,
};

use crate::render::{self, float, OutputFormat, Table};
use crate::{Command, MethodArg, Output};

/// Exit codes: 1 verification or convergence failure, 2 usage, 3 domain.
#[derive(Debug)]
pub enum CliError {
    Failure(String),
    Usage(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Failure(m) | CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<gausslattice::Error> for CliError {
    fn from(err: gausslattice::Error) -> Self {
        use gausslattice::Error as E;
        let msg = err.to_string();
        match err {
            E::Domain(_)
            | E::ToleranceTooSmall { .. }
            | E::TruncationCap { .. }
            | E::NonFinite(_) => CliError::Domain(msg),
            E::InvalidGrid(_) | E::TooFewSamples { .. } | E::DuplicateSample(_) => {
                CliError::Usage(msg)
            }
            E::NoConvergence { .. } | E::OracleMismatch { .. } => CliError::Failure(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Failure(format!("i/o: {err}"))
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(command: Command) -> CliResult {
    match command {
        Command::Eval {
            a,
            s,
            tol,
            method,
            output,
        } => eval(a, s, tol, method, &output),
        Command::Grid {
            from,
            to,
            step,
            columns,
            tol,
            output,
        } => grid(from, to, step, &columns, tol, &output),
        Command::Fit {
            target,
            from,
            to,
            step,
            self_test,
            output,
        } => fit(&target, from, to, step, self_test, &output),
        Command::Verify { tol, output } => verify(tol, &output),
        Command::Bench {
            from,
            to,
            points,
            tol,
            output,
        } => bench(from, to, points, tol, &output),
    }
}

fn write(
    output: &Output,
    csv: impl FnOnce() -> String,
    json: impl FnOnce() -> String,
) -> CliResult {
    let text = match output.format {
        OutputFormat::Csv => csv(),
        OutputFormat::Json => json(),
    };
    render::emit(&text, output.out.as_deref())?;
    Ok(())
}

fn eval(a: f64, s: f64, tol: f64, method: MethodArg, output: &Output) -> CliResult {
    let input = DisplacedSumInput::new(a, s, tol)?;
    let report = match method {
        MethodArg::Auto => theta::eval_auto(&input)?,
        MethodArg::Direct => theta::eval_direct(&input)?,
        MethodArg::Transformed => theta::eval_transformed(&input)?,
    };
    write(
        output,
        || {
            let mut t = Table::new(["value", "method", "terms", "truncation_bound"]);
            t.push(vec![
                float(report.value),
                report.method.to_string(),
                report.terms.to_string(),
                float(report.truncation_bound),
            ]);
            t.to_csv()
        },
        || render::json(&report),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    S,
    Y0,
    YHalf,
    E,
    Efit,
    Diff,
    Diffit,
}

impl Column {
    const ALL: [(&'static str, Column); 7] = [
        ("s", Column::S),
        ("y0", Column::Y0),
        ("yhalf", Column::YHalf),
        ("e", Column::E),
        ("efit", Column::Efit),
        ("diff", Column::Diff),
        ("diffit", Column::Diffit),
    ];

    fn parse(name: &str) -> CliResult<Self> {
        Self::ALL
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, c)| c)
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|(n, _)| *n).collect();
                CliError::Usage(format!(
                    "unknown column '{name}' (expected one of {})",
                    known.join(",")
                ))
            })
    }

    fn value(self, s: f64, tol: f64) -> CliResult<f64> {
        Ok(match self {
            Column::S => s,
            Column::Y0 => theta::y0(s, tol)?,
            Column::YHalf => theta::y(0.5, s, tol)?,
            Column::E => theta::e_of_s(s, tol)?,
            Column::Efit => efit(s, &SigmoidParams::PUBLISHED),
            Column::Diff => theta::diff0_half(s, tol)?,
            Column::Diffit => diffit(s, &StretchedLogisticParams::PUBLISHED),
        })
    }
}

#[derive(Serialize)]
struct GridTable<'a> {
    columns: Vec<&'a str>,
    rows: Vec<Vec<f64>>,
}

fn grid(from: f64, to: f64, step: f64, columns: &str, tol: f64, output: &Output) -> CliResult {
    let names: Vec<&str> = columns.split(',').map(str::trim).collect();
    let cols = names
        .iter()
        .map(|n| Column::parse(n))
        .collect::<CliResult<Vec<_>>>()?;
    let spec = GridSpec::linear_step(from, to, step)?;
    let rows = spec
        .points()
        .into_iter()
        .map(|s| {
            cols.iter()
                .map(|c| c.value(s, tol))
                .collect::<CliResult<Vec<_>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    write(
        output,
        || {
            let mut t = Table::new(names.iter().copied());
            for row in &rows {
                t.push(row.iter().copied().map(float).collect());
            }
            t.to_csv()
        },
        || {
            render::json(&GridTable {
                columns: names.clone(),
                rows: rows.clone(),
            })
        },
    )
}

#[derive(Serialize)]
struct FitReport {
    params: SigmoidParams,
    stats: ResidualStats,
    iterations: usize,
}

/// Noiseless samples of the published sigmoid on [0.3, 0.9], step 0.02.
fn self_test_samples() -> Vec<(f64, f64)> {
    GridSpec::linear_step(0.3, 0.9, 0.02)
        .expect("valid grid")
        .points()
        .into_iter()
        .map(|s| (s, efit(s, &SigmoidParams::PUBLISHED)))
        .collect()
}

const SELF_TEST_TOL: f64 = 1e-6;

fn fit(target: &str, from: f64, to: f64, step: f64, self_test: bool, output: &Output) -> CliResult {
    if target != "e" {
        return Err(CliError::Usage(format!(
            "fit target '{target}' is not supported (only 'e')"
        )));
    }
    let outcome: FitOutcome = if self_test {
        let out = fits::fit_sigmoid(&self_test_samples(), SigmoidParams::DEFAULT_INIT)?;
        let want = SigmoidParams::PUBLISHED;
        let p = out.params;
        let recovered = [
            (p.plateau, want.plateau),
            (p.amplitude, want.amplitude),
            (p.center, want.center),
            (p.width, want.width),
        ]
        .iter()
        .all(|(got, want)| (got - want).abs() <= SELF_TEST_TOL);
        if !recovered {
            return Err(CliError::Failure(format!(
                "self-test did not recover the published constants: {p:?}"
            )));
        }
        out
    } else {
        let samples = GridSpec::linear_step(from, to, step)?
            .points()
            .into_iter()
            .map(|s| Ok((s, SQRT_PI * s + 1.0 - oracle_eval(0.0, s)?)))
            .collect::<Result<Vec<_>, gausslattice::Error>>()?;
        fits::refit_sigmoid(&samples)?
    };
    let report = FitReport {
        params: outcome.params,
        stats: outcome.stats,
        iterations: outcome.iterations,
    };
    write(
        output,
        || {
            let mut t = Table::new([
                "plateau",
                "amplitude",
                "center",
                "width",
                "sup_abs",
                "rms",
                "argmax",
                "n_points",
                "iterations",
            ]);
            let (p, st) = (&report.params, &report.stats);
            t.push(vec![
                float(p.plateau),
                float(p.amplitude),
                float(p.center),
                float(p.width),
                float(st.sup_abs),
                float(st.rms),
                float(st.argmax),
                st.n_points.to_string(),
                report.iterations.to_string(),
            ]);
            t.to_csv()
        },
        || render::json(&report),
    )
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    passed: bool,
    checks: &'a [CheckReport],
}

fn verify(tol: f64, output: &Output) -> CliResult {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::Domain(format!(
            "tolerance must be >= 0, got {tol}"
        )));
    }
    let reports = verify::run_suite(tol)?;
    let passed = reports.iter().all(|r| r.passed);
    write(
        output,
        || {
            let mut t = Table::new([
                "name",
                "passed",
                "worst_residual",
                "worst_point",
                "displacement",
                "threshold",
                "criterion",
            ]);
            for r in &reports {
                t.push(vec![
                    r.name.clone(),
                    r.passed.to_string(),
                    float(r.worst_residual),
                    float(r.worst_point),
                    r.displacement.map(float).unwrap_or_default(),
                    float(r.threshold),
                    r.criterion.as_str().to_string(),
                ]);
            }
            t.to_csv()
        },
        || {
            render::json(&SuiteReport {
                passed,
                checks: &reports,
            })
        },
    )?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<String> = reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| {
                format!(
                    "{} (worst {:e} at s = {}, threshold {:e})",
                    r.name, r.worst_residual, r.worst_point, r.threshold
                )
            })
            .collect();
        Err(CliError::Failure(format!(
            "failed checks: {}",
            failed.join("; ")
        )))
    }
}

#[derive(Serialize)]
struct BenchRow {
    s: f64,
    k_direct: usize,
    k_transformed: usize,
    k_auto: usize,
    t_direct_ns: f64,
    t_transformed_ns: f64,
    t_auto_ns: f64,
}

const BENCH_REPEATS: u32 = 200;

fn time_ns(method: Option<Method>, input: &DisplacedSumInput) -> CliResult<f64> {
    let start = Instant::now();
    for _ in 0..BENCH_REPEATS {
        let r = match method {
            Some(m) => theta::eval_with(m, input)?,
            None => theta::eval_auto(input)?,
        };
        std::hint::black_box(r);
    }
    Ok(start.elapsed().as_nanos() as f64 / BENCH_REPEATS as f64)
}

fn bench(from: f64, to: f64, points: usize, tol: f64, output: &Output) -> CliResult {
    let spec = GridSpec::logarithmic(from, to, points)?;
    let mut rows = Vec::with_capacity(points);
    for s in spec.points() {
        let input = DisplacedSumInput::new(0.0, s, tol)?;
        let k_direct = theta::truncation_terms(Method::Direct, s, tol)?;
        let k_transformed = theta::truncation_terms(Method::Transformed, s, tol)?;
        let k_auto = theta::eval_auto(&input)?.terms;
        rows.push(BenchRow {
            s,
            k_direct,
            k_transformed,
            k_auto,
            t_direct_ns: time_ns(Some(Method::Direct), &input)?,
            t_transformed_ns: time_ns(Some(Method::Transformed), &input)?,
            t_auto_ns: time_ns(None, &input)?,
        });
    }
    write(
        output,
        || {
            let mut t = Table::new([
                "s",
                "k_direct",
                "k_transformed",
                "k_auto",
                "t_direct_ns",
                "t_transformed_ns",
                "t_auto_ns",
            ]);
            for r in &rows {
                t.push(vec![
                    float(r.s),
                    r.k_direct.to_string(),
                    r.k_transformed.to_string(),
                    r.k_auto.to_string(),
                    float(r.t_direct_ns),
                    float(r.t_transformed_ns),
                    float(r.t_auto_ns),
                ]);
            }
            t.to_csv()
        },
        || render::json(&serde_json::json!({ "rows": rows })),
    )
}
