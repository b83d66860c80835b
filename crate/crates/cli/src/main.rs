//! `mpt` — max-plus measures and transport distances on finite spaces.
//!
//! Subcommands bind the library operations one-to-one; all output is
//! deterministic given inputs, flags and seed.

mod io;
mod render;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use maxplus_transport::convergence::{
    converges_metric, converges_pointwise, default_tail, separating_panel, star_condition,
    StarReport,
};
use maxplus_transport::coupling::{random_member, xi0, Coupling};
use maxplus_transport::metric::{gram, h, h_bruteforce};
use maxplus_transport::semiring::oplus_h;
use maxplus_transport::space::ValidationReport;
use maxplus_transport::{DistanceReport, IdempotentMeasure, Normalization};

use io::{
    load_function, load_measure, load_measure_dir, load_measure_sequence, load_point_map,
    load_space, CliError, CliResult,
};
use render::{csv_line, kv_block, sig12, support_inline, table};

#[derive(Parser)]
#[command(
    name = "mpt",
    version,
    about = "Max-plus measures and transport distances on finite spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    /// Require the top weight to be 0 (within 1e-9).
    Strict,
    /// Shift all weights so the top weight becomes 0.
    Autonormalize,
}

impl From<Mode> for Normalization {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Strict => Normalization::Strict,
            Mode::Autonormalize => Normalization::Autonormalize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CoupleKind {
    /// The canonical coupling.
    Xi0,
    /// A random member of the coupling set.
    Random,
    /// Min-bound weights on the distance solver's optimal support.
    Optimal,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two measures.
    Dist {
        space: PathBuf,
        mu1: PathBuf,
        mu2: PathBuf,
        /// Also run the exhaustive oracle and require bitwise agreement.
        #[arg(long)]
        oracle: bool,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Emit a coupling of two measures as JSON.
    Couple {
        space: PathBuf,
        mu1: PathBuf,
        mu2: PathBuf,
        #[arg(long, value_enum, default_value_t = CoupleKind::Xi0)]
        kind: CoupleKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
    },
    /// Maslov integral of a function table against a measure.
    Integrate {
        space: PathBuf,
        measure: PathBuf,
        function: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Pushforward of a measure along a point map.
    Push {
        space: PathBuf,
        measure: PathBuf,
        map: PathBuf,
        /// Target space file; defaults to the source space.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
    },
    /// Pairwise distance matrix over a directory of measure files.
    Gram {
        space: PathBuf,
        measures: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Convergence diagnostics of a measure sequence against a limit.
    Converge {
        space: PathBuf,
        sequence: PathBuf,
        limit: PathBuf,
        /// Ground-distance tolerance for atom tracking.
        #[arg(long, default_value_t = 1e-3)]
        eps_x: f64,
        /// Weight tolerance for atom tracking.
        #[arg(long, default_value_t = 1e-3)]
        eps_w: f64,
        /// Tail length; defaults to the last quarter of the sequence.
        #[arg(long)]
        tail: Option<usize>,
        /// Metric tolerance; defaults to eps_x + eps_w.
        #[arg(long)]
        metric_eps: Option<f64>,
        /// Neighborhood tolerance; defaults to eps_w + eps_x * height/width.
        #[arg(long)]
        pointwise_eps: Option<f64>,
        /// Height margin of the separating panel above max |weight|.
        #[arg(long, default_value_t = 1.0)]
        panel_margin: f64,
        /// Tent width of the separating panel; defaults to half the
        /// smallest distance between limit support points.
        #[arg(long)]
        panel_width: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Smoothed maxima u ⊕ₕ v against max(u, v) for a list of h values.
    Dequantize {
        u: f64,
        v: f64,
        /// Comma-separated positive h values, e.g. 1,0.1,0.01.
        h_values: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Validate a space file and optionally measures against it.
    Validate {
        space: PathBuf,
        /// Measure files to check against the space.
        #[arg(long = "measure")]
        measures: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => print!("{out}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable output");
    out.push('\n');
    out
}

fn run(command: Command) -> CliResult<String> {
    match command {
        Command::Dist {
            space,
            mu1,
            mu2,
            oracle,
            mode,
            format,
        } => {
            let space = load_space(&space)?;
            let mu1 = load_measure(&mu1, &space, mode.into())?;
            let mu2 = load_measure(&mu2, &space, mode.into())?;
            cmd_dist(&mu1, &mu2, oracle, format)
        }
        Command::Couple {
            space,
            mu1,
            mu2,
            kind,
            seed,
            mode,
        } => {
            let space = load_space(&space)?;
            let mu1 = load_measure(&mu1, &space, mode.into())?;
            let mu2 = load_measure(&mu2, &space, mode.into())?;
            cmd_couple(&mu1, &mu2, kind, seed)
        }
        Command::Integrate {
            space,
            measure,
            function,
            mode,
            format,
        } => {
            let space = load_space(&space)?;
            let mu = load_measure(&measure, &space, mode.into())?;
            let f = load_function(&function)?;
            let value = mu.integrate(&f)?;
            Ok(match format {
                Format::Json => json_pretty(&serde_json::json!({ "integral": value })),
                _ => format!("{}\n", sig12(value)),
            })
        }
        Command::Push {
            space,
            measure,
            map,
            target,
            mode,
        } => {
            let space = load_space(&space)?;
            let mu = load_measure(&measure, &space, mode.into())?;
            let map = load_point_map(&map)?;
            let target = match target {
                Some(path) => load_space(&path)?,
                None => Arc::clone(&space),
            };
            let pushed = mu.pushforward(&map, &target)?;
            Ok(json_pretty(&pushed.to_spec(false)))
        }
        Command::Gram {
            space,
            measures,
            mode,
            format,
        } => {
            let space = load_space(&space)?;
            let labeled = load_measure_dir(&measures, &space, mode.into())?;
            cmd_gram(&labeled, format)
        }
        Command::Converge {
            space,
            sequence,
            limit,
            eps_x,
            eps_w,
            tail,
            metric_eps,
            pointwise_eps,
            panel_margin,
            panel_width,
            mode,
            format,
        } => {
            let space = load_space(&space)?;
            let seq = load_measure_sequence(&sequence, &space, mode.into())?;
            let limit = load_measure(&limit, &space, mode.into())?;
            cmd_converge(
                &seq,
                &limit,
                ConvergeOptions {
                    eps_x,
                    eps_w,
                    tail,
                    metric_eps,
                    pointwise_eps,
                    panel_margin,
                    panel_width,
                },
                format,
            )
        }
        Command::Dequantize {
            u,
            v,
            h_values,
            format,
        } => cmd_dequantize(u, v, &h_values, format),
        Command::Validate {
            space,
            measures,
            mode,
            format,
        } => cmd_validate(&space, &measures, mode, format),
    }
}

#[derive(Serialize)]
struct DistOutput {
    #[serde(flatten)]
    report: DistanceReport,
    #[serde(rename = "oracle_H", skip_serializing_if = "Option::is_none")]
    oracle_h: Option<f64>,
}

fn cmd_dist(
    mu1: &IdempotentMeasure,
    mu2: &IdempotentMeasure,
    oracle: bool,
    format: Format,
) -> CliResult<String> {
    let report = h(mu1, mu2)?;
    let oracle_h = if oracle {
        let reference = h_bruteforce(mu1, mu2)?;
        if reference.h.to_bits() != report.h.to_bits() {
            return Err(CliError::OracleMismatch {
                solver: report.h,
                oracle: reference.h,
            });
        }
        Some(reference.h)
    } else {
        None
    };
    match format {
        Format::Json => Ok(json_pretty(&DistOutput { report, oracle_h })),
        _ => {
            let mut rows = vec![
                ("H", sig12(report.h)),
                ("rho_omega", sig12(report.rho_omega)),
                ("truncated", report.truncated.to_string()),
                ("support", support_inline(&report.support)),
            ];
            if let Some(o) = oracle_h {
                rows.push(("oracle_H", sig12(o)));
            }
            Ok(kv_block(&rows))
        }
    }
}

fn cmd_couple(
    mu1: &IdempotentMeasure,
    mu2: &IdempotentMeasure,
    kind: CoupleKind,
    seed: u64,
) -> CliResult<String> {
    let coupling = match kind {
        CoupleKind::Xi0 => xi0(mu1, mu2)?,
        CoupleKind::Random => random_member(mu1, mu2, seed)?,
        CoupleKind::Optimal => {
            let report = h(mu1, mu2)?;
            let entries = report
                .support
                .iter()
                .map(|&(j, k)| ((j, k), mu1.atoms()[j].weight.min(mu2.atoms()[k].weight)))
                .collect();
            Coupling::new(mu1.clone(), mu2.clone(), entries)?
        }
    };
    let (ok, marginals) = coupling.check_marginals();
    if !ok {
        return Err(CliError::EmissionInvalid(format!(
            "coupling violates its marginals (max residual {})",
            marginals.max_residual()
        )));
    }
    Ok(json_pretty(&coupling.to_spec(false)))
}

#[derive(Serialize)]
struct GramOutput<'a> {
    labels: Vec<&'a str>,
    matrix: &'a Vec<Vec<f64>>,
}

fn cmd_gram(labeled: &[(String, IdempotentMeasure)], format: Format) -> CliResult<String> {
    let measures: Vec<IdempotentMeasure> = labeled.iter().map(|(_, m)| m.clone()).collect();
    let matrix = gram(&measures)?;
    let labels: Vec<&str> = labeled.iter().map(|(l, _)| l.as_str()).collect();
    match format {
        Format::Json => Ok(json_pretty(&GramOutput {
            labels,
            matrix: &matrix,
        })),
        _ => {
            let mut out = String::new();
            let mut header = vec![String::new()];
            header.extend(labels.iter().map(|l| l.to_string()));
            out.push_str(&csv_line(&header));
            out.push('\n');
            for (label, row) in labels.iter().zip(&matrix) {
                let mut cells = vec![label.to_string()];
                cells.extend(row.iter().map(|&v| sig12(v)));
                out.push_str(&csv_line(&cells));
                out.push('\n');
            }
            Ok(out)
        }
    }
}

struct ConvergeOptions {
    eps_x: f64,
    eps_w: f64,
    tail: Option<usize>,
    metric_eps: Option<f64>,
    pointwise_eps: Option<f64>,
    panel_margin: f64,
    panel_width: Option<f64>,
}

#[derive(Serialize)]
struct Tolerances {
    eps_x: f64,
    eps_w: f64,
    metric_eps: f64,
    pointwise_eps: f64,
    panel_margin: f64,
    panel_width: f64,
    tail: usize,
}

#[derive(Serialize)]
struct ConvergeOutput {
    converges_metric: bool,
    converges_pointwise: bool,
    star: StarReport,
    tolerances: Tolerances,
}

/// Half the smallest distance between distinct support points, falling
/// back to a quarter of the diameter, then to 1.
fn default_panel_width(mu: &IdempotentMeasure) -> f64 {
    let space = mu.space();
    let atoms = mu.atoms();
    let mut min_dist = f64::INFINITY;
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[i + 1..] {
            let d = space.dist_idx(a.point, b.point);
            if d > 0.0 {
                min_dist = min_dist.min(d);
            }
        }
    }
    if min_dist.is_finite() {
        min_dist / 2.0
    } else if space.diam() > 0.0 {
        space.diam() / 4.0
    } else {
        1.0
    }
}

fn cmd_converge(
    seq: &[IdempotentMeasure],
    limit: &IdempotentMeasure,
    opts: ConvergeOptions,
    format: Format,
) -> CliResult<String> {
    let tail = opts.tail.unwrap_or_else(|| default_tail(seq.len()));
    let metric_eps = opts.metric_eps.unwrap_or(opts.eps_x + opts.eps_w);
    let panel_width = opts
        .panel_width
        .unwrap_or_else(|| default_panel_width(limit));
    let height = limit.weights().iter().fold(0.0f64, |m, w| m.max(w.abs())) + opts.panel_margin;
    let pointwise_eps = opts
        .pointwise_eps
        .unwrap_or(opts.eps_w + opts.eps_x * height / panel_width);

    let star = star_condition(seq, limit, opts.eps_x, opts.eps_w, tail)?;
    let metric = converges_metric(seq, limit, metric_eps, tail)?;
    let panel = separating_panel(limit, opts.panel_margin, panel_width);
    let pointwise = converges_pointwise(seq, limit, &panel, pointwise_eps, tail)?;

    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str("atom,weight,index,distance,weight_gap\n");
            for atom in &star.atoms {
                for sample in &atom.trajectory {
                    out.push_str(&csv_line(&[
                        atom.point.clone(),
                        sig12(atom.weight),
                        sample.index.to_string(),
                        sig12(sample.distance),
                        sig12(sample.weight_gap),
                    ]));
                    out.push('\n');
                }
            }
            Ok(out)
        }
        _ => Ok(json_pretty(&ConvergeOutput {
            converges_metric: metric,
            converges_pointwise: pointwise,
            star,
            tolerances: Tolerances {
                eps_x: opts.eps_x,
                eps_w: opts.eps_w,
                metric_eps,
                pointwise_eps,
                panel_margin: opts.panel_margin,
                panel_width,
                tail,
            },
        })),
    }
}

#[derive(Serialize)]
struct DequantizeRow {
    h: f64,
    oplus_h: f64,
    max: f64,
    gap: f64,
}

fn cmd_dequantize(u: f64, v: f64, h_values: &str, format: Format) -> CliResult<String> {
    let mut rows = Vec::new();
    for part in h_values.split(',') {
        let text = part.trim();
        let h_param: f64 = text
            .parse()
            .map_err(|_| CliError::BadArgument(format!("not a number in h list: `{text}`")))?;
        let value = oplus_h(u, v, h_param)?;
        let max = u.max(v);
        rows.push(DequantizeRow {
            h: h_param,
            oplus_h: value,
            max,
            gap: value - max,
        });
    }
    match format {
        Format::Json => Ok(json_pretty(&rows)),
        Format::Csv => {
            let mut out = String::from("h,oplus_h,max,gap\n");
            for r in &rows {
                out.push_str(&csv_line(&[
                    sig12(r.h),
                    sig12(r.oplus_h),
                    sig12(r.max),
                    sig12(r.gap),
                ]));
                out.push('\n');
            }
            Ok(out)
        }
        Format::Text => Ok(table(
            &["h", "oplus_h", "max", "gap"],
            &rows
                .iter()
                .map(|r| vec![sig12(r.h), sig12(r.oplus_h), sig12(r.max), sig12(r.gap)])
                .collect::<Vec<_>>(),
        )),
    }
}

#[derive(Serialize)]
struct MeasureCheck {
    file: String,
    atoms: usize,
}

#[derive(Serialize)]
struct ValidateOutput {
    space: ValidationReport,
    measures: Vec<MeasureCheck>,
}

fn cmd_validate(
    space_path: &Path,
    measures: &[PathBuf],
    mode: Mode,
    format: Format,
) -> CliResult<String> {
    // Load structurally, then report axioms; an invalid metric still gets
    // its report printed before the nonzero exit.
    let loaded = load_space(space_path);
    let (space, report) = match loaded {
        Ok(space) => {
            let report = space.validate_metric();
            (Some(space), report)
        }
        Err(CliError::Core(maxplus_transport::Error::InvalidMetric(report))) => (None, report),
        Err(other) => return Err(other),
    };

    let mut checks = Vec::new();
    if let Some(space) = &space {
        for path in measures {
            let mu = load_measure(path, space, mode.into())?;
            checks.push(MeasureCheck {
                file: path.display().to_string(),
                atoms: mu.support_size(),
            });
        }
    }

    let rendered = match format {
        Format::Json => json_pretty(&ValidateOutput {
            space: report.clone(),
            measures: checks,
        }),
        _ => {
            let mut out = String::new();
            if report.is_clean() {
                out.push_str("space ok\n");
            } else {
                out.push_str(&format!("{report}\n"));
            }
            for check in &checks {
                out.push_str(&format!(
                    "measure {} ok ({} atoms)\n",
                    check.file, check.atoms
                ));
            }
            out
        }
    };
    if report.is_clean() {
        Ok(rendered)
    } else {
        print!("{rendered}");
        Err(CliError::ValidationFailed)
    }
}
