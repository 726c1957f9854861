//! Command-line front end: parse networks, locate bifurcations, apply
//! enlargements, run inheritance sweeps and the built-in gallery.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use crn_core::bifurcation::{BifKind, Tolerances};
use crn_core::enlarge::{compose, render_enlarged};
use crn_core::gallery;
use crn_core::inherit::{Seeding, SweepConfig, Verdict};
use crn_core::network::Network;
use crn_core::parser::{parse_enlargement, parse_file, EnlargeSpec};
use crn_core::report;

const EXIT_PARTIAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_ANALYSIS: u8 = 3;
const EXIT_ENLARGEMENT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "crn",
    about = "Mass action reaction networks: bifurcations, enlargements, inheritance sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a network file and print its canonical form and exact structure
    Parse {
        path: PathBuf,
        /// emit a machine-readable JSON dump instead of text
        #[arg(long, value_parser = ["text", "json"], default_value = "text")]
        format: String,
    },
    /// Locate a bifurcation with a transversality certificate
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// write the BifPoint JSON here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Apply the file's (or --enlarge) enlargements and print the enlarged
    /// network with its rate schedule annotations
    Enlarge {
        path: PathBuf,
        /// extra enlargement specs, e.g. "E5: Y1 + X1 <-> 2 Y2"
        #[arg(long = "enlarge")]
        enlarge: Vec<String>,
        /// base point for E2 schedules (comma-separated, default all ones)
        #[arg(long)]
        base: Option<String>,
    },
    /// Verify that an enlarged network inherits a bifurcation as eps -> 0
    Inherit {
        path: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// extra enlargement specs applied after those in the file
        #[arg(long = "enlarge")]
        enlarge: Vec<String>,
        #[arg(long, default_value_t = 1e-1)]
        eps_max: f64,
        #[arg(long, default_value_t = 1e-4)]
        eps_min: f64,
        #[arg(long, default_value_t = 12)]
        count: usize,
        /// seed every grid point from the singular-limit prediction
        #[arg(long)]
        cold: bool,
        /// write the InheritanceReport JSON here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
        /// also write a per-eps CSV (eps, deviations, min transverse Re)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the built-in verification gallery and write per-case reports
    Gallery {
        /// output directory for the report files
        #[arg(long, default_value = "gallery-out")]
        out: PathBuf,
        /// run only the listed case ids
        #[arg(long)]
        only: Vec<String>,
        /// also write per-case convergence CSVs
        #[arg(long)]
        csv: bool,
        /// worker pool size
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args)]
struct AnalysisArgs {
    /// bifurcation kind
    #[arg(long, value_parser = ["fold", "hopf", "cusp"])]
    kind: String,
    /// unfolding parameter names (codimension many); chosen automatically
    /// by column-pivoted factorization when omitted
    #[arg(long = "free")]
    free: Vec<String>,
    /// chart base point, comma-separated positive values (default all ones)
    #[arg(long)]
    base: Option<String>,
    /// parameter seed values, repeatable name=value (default 1)
    #[arg(long = "kappa")]
    kappa: Vec<String>,
    /// continuation range for the free parameter, "lo:hi"
    #[arg(long, default_value = "0.05:20")]
    range: String,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Parse { path, format } => cmd_parse(&path, &format),
        Command::Analyze {
            path,
            analysis,
            output,
        } => cmd_analyze(&path, &analysis, output),
        Command::Enlarge {
            path,
            enlarge,
            base,
        } => cmd_enlarge(&path, &enlarge, base),
        Command::Inherit {
            path,
            analysis,
            enlarge,
            eps_max,
            eps_min,
            count,
            cold,
            output,
            csv,
        } => cmd_inherit(
            &path, &analysis, &enlarge, eps_max, eps_min, count, cold, output, csv,
        ),
        Command::Gallery {
            out,
            only,
            csv,
            jobs,
        } => cmd_gallery(&out, &only, csv, jobs),
    }
}

fn read_network(path: &Path) -> Result<(Network, Vec<EnlargeSpec>), ExitCode> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(EXIT_INPUT));
        }
    };
    match parse_file(&text) {
        Ok(f) => Ok((f.network, f.enlargements)),
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            Err(ExitCode::from(EXIT_INPUT))
        }
    }
}

fn cmd_parse(path: &Path, format: &str) -> Result<ExitCode> {
    let (net, _) = match read_network(path) {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    let dump = report::dump_network(&net);
    if format == "json" {
        println!("{}", serde_json::to_string_pretty(&dump)?);
        return Ok(ExitCode::SUCCESS);
    }
    print!("{}", dump.canonical);
    println!("rank: {}", dump.rank);
    println!("gamma:");
    for row in &dump.gamma {
        println!("  {row:?}");
    }
    println!("gamma_l:");
    for row in &dump.gamma_l {
        println!("  {row:?}");
    }
    if dump.conservation.is_empty() {
        println!("conservation basis: (empty)");
    } else {
        println!("conservation basis:");
        for row in &dump.conservation {
            println!("  {row:?}");
        }
    }
    println!("fully open: {}", dump.fully_open);
    println!("free parameters: {:?}", dump.free_params);
    Ok(ExitCode::SUCCESS)
}

struct AnalysisSetup {
    kind: BifKind,
    free: Vec<String>,
    base: Vec<f64>,
    kappa: Vec<f64>,
    range: (f64, f64),
}

fn setup_analysis(net: &Network, args: &AnalysisArgs) -> Result<AnalysisSetup> {
    let kind = match args.kind.as_str() {
        "fold" => BifKind::Fold,
        "hopf" => BifKind::Hopf,
        "cusp" => BifKind::Cusp,
        other => return Err(anyhow!("unknown kind {other}")),
    };
    let base: Vec<f64> = match &args.base {
        Some(s) => s
            .split(',')
            .map(|v| v.trim().parse::<f64>().context("invalid --base entry"))
            .collect::<Result<_>>()?,
        None => vec![1.0; net.n_species()],
    };
    let params = net.free_params();
    let mut kappa = vec![1.0; params.len()];
    for kv in &args.kappa {
        let (name, value) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--kappa expects name=value, got {kv}"))?;
        let idx = params
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| anyhow!("unknown parameter {name}"))?;
        kappa[idx] = value.trim().parse().context("invalid --kappa value")?;
    }
    let (lo, hi) = args
        .range
        .split_once(':')
        .ok_or_else(|| anyhow!("--range expects lo:hi"))?;
    let range = (lo.trim().parse()?, hi.trim().parse()?);
    let mut free = args.free.clone();
    if free.is_empty() {
        // delegate to the column-pivoting rule at the kappa seed
        let chart =
            crn_core::massaction::make_chart(net, &base).map_err(|e| anyhow!("chart: {e}"))?;
        let field = crn_core::massaction::reduced_field(net, &chart);
        let tol = Tolerances::default();
        let th =
            crn_core::bifurcation::find_equilibrium(&field, &vec![0.0; field.dim], &kappa, &tol)
                .map_err(|e| anyhow!("no equilibrium near the seed for parameter choice: {e}"))?;
        let picked =
            crn_core::bifurcation::choose_unfolding_params(&field, kind, &th, &kappa, &tol)
                .map_err(|e| anyhow!("parameter choice: {e}"))?;
        free = picked.into_iter().map(|i| params[i].clone()).collect();
        eprintln!("note: unfolding parameters chosen automatically: {free:?}");
    }
    Ok(AnalysisSetup {
        kind,
        free,
        base,
        kappa,
        range,
    })
}

fn cmd_analyze(path: &Path, args: &AnalysisArgs, output: Option<PathBuf>) -> Result<ExitCode> {
    let (net, _) = match read_network(path) {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    let setup = setup_analysis(&net, args)?;
    let tol = Tolerances::default();
    match gallery::analyze(
        &net,
        setup.kind,
        &setup.free,
        &setup.base,
        &setup.kappa,
        setup.range,
        &tol,
    ) {
        Ok((chart, bp)) => {
            let field = gallery::base_field(&net, &chart);
            let cert = crn_core::bifurcation::transversality_certificate(&field, &bp, &tol);
            let text = report::bif_point_json(&bp);
            match output {
                Some(p) => fs::write(&p, &text)?,
                None => println!("{text}"),
            }
            eprintln!(
                "transversality: sigma_min={:.3e} (scaled {:.3e}) rank_full={} -> {}",
                cert.sigma_min,
                cert.sigma_min_scaled,
                cert.state_rank_full,
                if cert.pass { "PASS" } else { "FAIL" }
            );
            Ok(if bp.pass.all() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_ANALYSIS)
            })
        }
        Err(e) => {
            eprintln!("analysis failed: {e}");
            Ok(ExitCode::from(EXIT_ANALYSIS))
        }
    }
}

fn parse_extra_specs(extra: &[String]) -> Result<Vec<EnlargeSpec>, ExitCode> {
    let mut out = Vec::new();
    for s in extra {
        match parse_enlargement(s) {
            Ok(spec) => out.push(spec),
            Err(e) => {
                eprintln!("error: invalid enlargement spec `{s}`: {e}");
                return Err(ExitCode::from(EXIT_INPUT));
            }
        }
    }
    Ok(out)
}

fn cmd_enlarge(path: &Path, extra: &[String], base: Option<String>) -> Result<ExitCode> {
    let (net, mut specs) = match read_network(path) {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    match parse_extra_specs(extra) {
        Ok(more) => specs.extend(more),
        Err(code) => return Ok(code),
    }
    if specs.is_empty() {
        eprintln!("error: no enlargement specifications given");
        return Ok(ExitCode::from(EXIT_INPUT));
    }
    let x_base: Option<Vec<f64>> = match base {
        Some(s) => Some(
            s.split(',')
                .map(|v| v.trim().parse::<f64>().context("invalid --base entry"))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    match compose::<f64>(&net, &specs, x_base.as_deref()) {
        Ok(enl) => {
            print!("{}", render_enlarged(&enl));
            eprintln!(
                "chain: {:?}, rank {} -> {}",
                enl.chain_names(),
                net.rank(),
                enl.network.rank()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("invalid enlargement: {e}");
            Ok(ExitCode::from(EXIT_ENLARGEMENT))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_inherit(
    path: &Path,
    args: &AnalysisArgs,
    extra: &[String],
    eps_max: f64,
    eps_min: f64,
    count: usize,
    cold: bool,
    output: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<ExitCode> {
    let (net, mut specs) = match read_network(path) {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    match parse_extra_specs(extra) {
        Ok(more) => specs.extend(more),
        Err(code) => return Ok(code),
    }
    if specs.is_empty() {
        eprintln!("error: no enlargement specifications given");
        return Ok(ExitCode::from(EXIT_INPUT));
    }
    let setup = setup_analysis(&net, args)?;
    let cfg = SweepConfig {
        eps_max,
        eps_min,
        count,
        seeding: if cold {
            Seeding::ColdStart
        } else {
            Seeding::Continuation
        },
        tol: Tolerances::default(),
    };
    // base analysis first, so enlargement validation errors are reported
    // distinctly from analysis failures
    let tol = cfg.tol.clone();
    let (chart, bp) = match gallery::analyze(
        &net,
        setup.kind,
        &setup.free,
        &setup.base,
        &setup.kappa,
        setup.range,
        &tol,
    ) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("base analysis failed: {e}");
            return Ok(ExitCode::from(EXIT_ANALYSIS));
        }
    };
    let enlarged = match compose::<f64>(&net, &specs, Some(&bp.x)) {
        Ok(enl) => enl,
        Err(e) => {
            eprintln!("invalid enlargement: {e}");
            return Ok(ExitCode::from(EXIT_ENLARGEMENT));
        }
    };
    let report =
        crn_core::inherit::track_inherited_bifurcation(&chart, &bp, &enlarged, &cfg, "inherit");
    let text = report::inheritance_json(&report);
    match output {
        Some(p) => fs::write(&p, &text)?,
        None => println!("{text}"),
    }
    if let Some(p) = csv {
        fs::write(&p, report.to_csv())?;
    }
    print_report_summary(&report);
    Ok(match report.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        _ => ExitCode::from(EXIT_PARTIAL),
    })
}

fn print_report_summary(rep: &crn_core::inherit::InheritanceReport) {
    let slopes = rep
        .fits
        .as_ref()
        .map(|f| {
            format!(
                "kappa-slope {:.3}, theta-slope {:.3}",
                f.kappa_slope, f.theta_slope
            )
        })
        .unwrap_or_else(|| "fit skipped (fewer than 4 points)".into());
    eprintln!(
        "{}: {:?} over {} grid points ({slopes})",
        rep.case_id,
        rep.verdict,
        rep.records.len()
    );
}

fn cmd_gallery(out: &Path, only: &[String], csv: bool, jobs: usize) -> Result<ExitCode> {
    let ids: Vec<String> = gallery::CASE_IDS
        .iter()
        .filter(|id| only.is_empty() || only.iter().any(|o| o == *id))
        .map(|s| s.to_string())
        .collect();
    if ids.is_empty() {
        eprintln!("error: no gallery cases match {only:?}");
        return Ok(ExitCode::from(EXIT_INPUT));
    }
    fs::create_dir_all(out)?;
    let results: Mutex<Vec<Option<crn_core::inherit::InheritanceReport>>> =
        Mutex::new(vec![None; ids.len()]);
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(ids.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= ids.len() {
                    break;
                }
                let rep = gallery::run_case(&ids[i]).ok();
                results.lock().unwrap()[i] = rep;
            });
        }
    });
    let results = results.into_inner().unwrap();
    let mut reports = Vec::new();
    let mut failed = 0usize;
    for (id, rep) in ids.iter().zip(results.into_iter()) {
        match rep {
            Some(rep) => {
                fs::write(
                    out.join(format!("{id}.json")),
                    report::inheritance_json(&rep),
                )?;
                if csv {
                    fs::write(out.join(format!("{id}.csv")), rep.to_csv())?;
                }
                let status = match rep.verdict {
                    Verdict::Pass => "PASS",
                    Verdict::Fail => "FAIL",
                    Verdict::Inconclusive => "INCONCLUSIVE",
                };
                if rep.verdict != Verdict::Pass {
                    failed += 1;
                }
                let slopes = rep
                    .fits
                    .as_ref()
                    .map(|f| format!("kappa-slope {:+.3}", f.kappa_slope))
                    .unwrap_or_default();
                println!(
                    "{status:12} {id:16} kind {:6} {slopes}",
                    format!("{:?}", rep.kind)
                );
                reports.push(rep);
            }
            None => {
                failed += 1;
                println!("ERROR        {id:16} case preparation failed");
            }
        }
    }
    let suite = gallery::SuiteReport {
        passed: reports
            .iter()
            .filter(|r| r.verdict == Verdict::Pass)
            .count(),
        failed,
        reports,
    };
    fs::write(out.join("summary.json"), report::suite_json(&suite))?;
    println!(
        "{} passed, {} failed; reports in {}",
        suite.passed,
        suite.failed,
        out.display()
    );
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    })
}
