//! `korogrid`: build sparse-grid interpolants, compile them into explicit
//! ReLU networks, and run convergence/scaling studies.
//!
//! Exit codes: 0 success, 1 domain error (message on stderr), 2 usage error.
//! Identical configuration and seed produce byte-identical grid and network
//! artifacts; study CSVs are deterministic except for the wall_ms column.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use korogrid::constructions::{compile_sparse_grid_net, predicted_bounds};
use korogrid::harness::{
    self, auto_resolution, grid_convergence_study, network_scaling_study, selftest,
};
use korogrid::sparse_grid::{hierarchize, Scheme, SparseGridInterpolant};
use korogrid::relu_ir::ReluNetwork;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "korogrid", version, about = "Sparse-grid interpolants compiled to deep ReLU networks")]
struct Cli {
    /// Seed recorded in artifacts and used for sampled verifications.
    /// Overridden by the KOROGRID_SEED environment variable when set.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for studies and error sampling (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Resolution cap for auto-selection and studies.
    #[arg(long, global = true, default_value_t = 14)]
    max_n: u32,

    /// Dimension cap for registry functions.
    #[arg(long, global = true, default_value_t = 6)]
    max_d: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, evaluate, inspect, and verify grid interpolants.
    #[command(subcommand)]
    Grid(GridCmd),
    /// Compile, evaluate, and inspect networks.
    #[command(subcommand)]
    Net(NetCmd),
    /// Convergence and scaling studies (CSV + JSON sidecar).
    #[command(subcommand)]
    Study(StudyCmd),
    /// Run the built-in verification suite.
    Selftest {
        /// Run a single criterion (1..=10) instead of all.
        #[arg(long)]
        criterion: Option<u32>,
    },
}

#[derive(Subcommand)]
enum GridCmd {
    /// Hierarchize a registered function onto a grid and write it to a file.
    Build {
        #[arg(long)]
        function: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        level: u32,
        #[arg(long, default_value = "sparse")]
        scheme: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a stored interpolant at a point.
    Eval {
        #[arg(long)]
        grid: PathBuf,
        /// Comma-separated coordinates, e.g. 0.5,0.25
        #[arg(long, value_parser = parse_point)]
        point: Point,
    },
    /// Summarize a stored interpolant.
    Info { grid: PathBuf },
    /// Re-check a stored interpolant against its source function.
    Verify {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        function: String,
        /// Boundary sample count.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum NetCmd {
    /// Compile a stored interpolant into a network at total accuracy eps.
    Compile {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Auto-select the grid for a registered function (normalized to unit
    /// seminorm), then compile at total accuracy eps.
    CompileAuto {
        #[arg(long)]
        function: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "sparse")]
        scheme: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a stored network at a point.
    Eval {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, value_parser = parse_point)]
        point: Point,
    },
    /// Structural statistics and metadata of a stored network.
    Stats { net: PathBuf },
}

#[derive(Subcommand)]
enum StudyCmd {
    /// Grid-convergence study over a resolution range.
    Convergence {
        #[arg(long)]
        function: String,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = "sparse")]
        scheme: String,
        #[arg(long)]
        n_min: u32,
        #[arg(long)]
        n_max: u32,
        /// CSV output path; a JSON sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Network-scaling study over a descending accuracy list.
    Network {
        #[arg(long)]
        function: String,
        #[arg(long)]
        d: usize,
        /// Comma-separated descending accuracies, e.g. 0.0625,0.03125
        #[arg(long, value_parser = parse_eps_list)]
        eps: EpsList,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Debug)]
struct Point(Vec<f64>);

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let coords: std::result::Result<Vec<f64>, _> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect();
    let coords = coords?;
    if coords.is_empty() {
        return Err("point needs at least one coordinate".to_string());
    }
    Ok(Point(coords))
}

#[derive(Clone, Debug)]
struct EpsList(Vec<f64>);

fn parse_eps_list(s: &str) -> std::result::Result<EpsList, String> {
    let eps: std::result::Result<Vec<f64>, _> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect();
    let eps = eps?;
    if eps.is_empty() {
        return Err("accuracy list needs at least one value".to_string());
    }
    Ok(EpsList(eps))
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // usage errors exit with code 2
    let seed = match std::env::var("KOROGRID_SEED") {
        Ok(v) => match v.parse::<u64>() {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: KOROGRID_SEED=`{v}` is not a valid seed: {e}");
                return ExitCode::from(1);
            }
        },
        Err(_) => cli.seed,
    };
    if let Some(t) = cli.threads {
        // ignore failure if a pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(&cli, seed) {
        Ok(all_ok) => {
            if all_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn provenance(seed: u64, config: String) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    meta.insert("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string());
    meta.insert("config".to_string(), config);
    meta.insert("seed".to_string(), seed.to_string());
    meta
}

fn check_caps(d: usize, n: u32, max_d: usize, max_n: u32) -> Result<()> {
    if d < 1 || d > max_d {
        bail!("dimension {d} outside 1..={max_d} (raise --max-d to override)");
    }
    if n < 1 || n > max_n {
        bail!("resolution {n} outside 1..={max_n} (raise --max-n to override)");
    }
    Ok(())
}

fn read_grid(path: &Path) -> Result<SparseGridInterpolant> {
    let doc = fs::read_to_string(path)
        .with_context(|| format!("reading grid file {}", path.display()))?;
    SparseGridInterpolant::from_json_str(&doc)
        .with_context(|| format!("parsing grid file {}", path.display()))
}

fn read_net(path: &Path) -> Result<ReluNetwork> {
    let doc = fs::read_to_string(path)
        .with_context(|| format!("reading network file {}", path.display()))?;
    ReluNetwork::from_json_str(&doc)
        .with_context(|| format!("parsing network file {}", path.display()))
}

fn write_artifact(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli, seed: u64) -> Result<bool> {
    match &cli.command {
        Command::Grid(cmd) => run_grid(cmd, cli, seed).map(|()| true),
        Command::Net(cmd) => run_net(cmd, cli, seed).map(|()| true),
        Command::Study(cmd) => run_study(cmd, cli, seed).map(|()| true),
        Command::Selftest { criterion } => run_selftest(*criterion),
    }
}

fn run_grid(cmd: &GridCmd, cli: &Cli, seed: u64) -> Result<()> {
    match cmd {
        GridCmd::Build {
            function,
            d,
            level,
            scheme,
            out,
        } => {
            check_caps(*d, *level, cli.max_d, cli.max_n)?;
            let scheme: Scheme = scheme.parse()?;
            let tf = harness::lookup(function, *d)?;
            let mut interp = hierarchize(|x| tf.eval(x), *d, *level, scheme)?;
            interp.set_meta(provenance(
                seed,
                format!(
                    "grid build --function {function} --d {d} --level {level} --scheme {scheme} --out {}",
                    out.display()
                ),
            ));
            write_artifact(out, &interp.to_json_string()?)?;
            println!(
                "wrote {} ({} terms, {} scheme, n = {level}, d = {d})",
                out.display(),
                interp.term_count(),
                scheme
            );
            Ok(())
        }
        GridCmd::Eval { grid, point } => {
            let interp = read_grid(grid)?;
            let v = interp.evaluate(&point.0)?;
            println!("{v}");
            Ok(())
        }
        GridCmd::Info { grid } => {
            let interp = read_grid(grid)?;
            println!("d: {}", interp.dimension());
            println!("n: {}", interp.resolution());
            println!("scheme: {}", interp.scheme());
            println!("terms: {}", interp.term_count());
            let max_coeff = interp
                .terms()
                .map(|(_, v)| v.abs())
                .fold(0.0f64, f64::max);
            println!("max |coefficient|: {max_coeff:e}");
            for (k, v) in interp.meta() {
                println!("meta.{k}: {v}");
            }
            Ok(())
        }
        GridCmd::Verify {
            grid,
            function,
            samples,
        } => {
            let interp = read_grid(grid)?;
            let tf = harness::lookup(function, interp.dimension())?;
            let report = harness::verify_interpolant(&tf, &interp, *samples, seed)?;
            println!(
                "interpolation property: max node deviation {:e}",
                report.max_node_deviation
            );
            println!("boundary samples: max |value| {:e}", report.max_boundary_value);
            match report.max_decay_excess {
                Some(excess) => {
                    println!("coefficient decay: max excess over bound {excess:e}")
                }
                None => {
                    println!("coefficient decay: skipped (no analytic seminorm for {function})")
                }
            }
            if report.ok() {
                println!("verify: ok");
                Ok(())
            } else {
                bail!("verification failed: {}", report.failures.join("; "))
            }
        }
    }
}

fn run_net(cmd: &NetCmd, cli: &Cli, seed: u64) -> Result<()> {
    match cmd {
        NetCmd::Compile { grid, eps, out } => {
            if grid == out {
                bail!("input and output paths must differ");
            }
            let interp = read_grid(grid)?;
            let mut net = compile_sparse_grid_net(&interp, *eps)?;
            let mut meta = net.metadata().clone();
            meta.extend(provenance(
                seed,
                format!(
                    "net compile --grid {} --eps {eps} --out {}",
                    grid.display(),
                    out.display()
                ),
            ));
            net.set_metadata(meta);
            write_artifact(out, &net.to_json_string()?)?;
            let stats = net.stats();
            println!(
                "wrote {} (depth {}, size {}, {} weights)",
                out.display(),
                stats.depth,
                stats.size,
                stats.weight_count
            );
            Ok(())
        }
        NetCmd::CompileAuto {
            function,
            d,
            eps,
            scheme,
            out,
        } => {
            check_caps(*d, 1, cli.max_d, cli.max_n)?;
            let scheme: Scheme = scheme.parse()?;
            let tf = harness::lookup(function, *d)?;
            let scale = tf
                .seminorm()
                .ok_or_else(|| anyhow::anyhow!("{function} declares no analytic seminorm"))?;
            let nf = tf.normalized()?;
            let (n, interp, grid_err) =
                auto_resolution(&nf, 0.5 * eps, cli.max_n, scheme)?;
            let mut net = compile_sparse_grid_net(&interp, *eps)?;
            let mut meta = net.metadata().clone();
            meta.insert("grid_error".to_string(), format!("{grid_err:e}"));
            meta.insert("seminorm_scale".to_string(), format!("{scale:e}"));
            meta.insert("function".to_string(), function.clone());
            meta.extend(provenance(
                seed,
                format!(
                    "net compile-auto --function {function} --d {d} --eps {eps} --scheme {scheme} \
                     --out {}",
                    out.display()
                ),
            ));
            net.set_metadata(meta);
            write_artifact(out, &net.to_json_string()?)?;
            let stats = net.stats();
            println!(
                "wrote {} (n = {n}, grid error {grid_err:.3e}, depth {}, size {})",
                out.display(),
                stats.depth,
                stats.size
            );
            Ok(())
        }
        NetCmd::Eval { net, point } => {
            let net = read_net(net)?;
            let out = net.eval(&point.0)?;
            let line: Vec<String> = out.iter().map(|v| format!("{v}")).collect();
            println!("{}", line.join(" "));
            Ok(())
        }
        NetCmd::Stats { net } => {
            let net = read_net(net)?;
            let stats = net.stats();
            println!("input_dim: {}", net.input_dim());
            println!("output_dim: {}", net.output_dim());
            println!("depth: {}", stats.depth);
            println!("size: {}", stats.size);
            println!("total_units: {}", stats.total_units);
            println!("weight_count: {}", stats.weight_count);
            if let (Some(d), Some(n), Some(eps)) = (
                net.metadata().get("d"),
                net.metadata().get("n"),
                net.metadata().get("eps"),
            ) {
                if let (Ok(d), Ok(n), Ok(eps)) =
                    (d.parse::<usize>(), n.parse::<u32>(), eps.parse::<f64>())
                {
                    if let Ok((pd, ps)) = predicted_bounds(d, n, eps) {
                        println!("predicted_depth: {pd}");
                        println!("predicted_size: {ps}");
                    }
                }
            }
            for (k, v) in net.metadata() {
                println!("meta.{k}: {v}");
            }
            Ok(())
        }
    }
}

fn run_study(cmd: &StudyCmd, cli: &Cli, seed: u64) -> Result<()> {
    let (table, out) = match cmd {
        StudyCmd::Convergence {
            function,
            d,
            scheme,
            n_min,
            n_max,
            out,
        } => {
            check_caps(*d, *n_max, cli.max_d, cli.max_n)?;
            let scheme: Scheme = scheme.parse()?;
            let tf = harness::lookup(function, *d)?;
            let ns: Vec<u32> = (*n_min..=*n_max).collect();
            (grid_convergence_study(&tf, &ns, scheme, seed)?, out)
        }
        StudyCmd::Network {
            function,
            d,
            eps,
            out,
        } => {
            check_caps(*d, 1, cli.max_d, cli.max_n)?;
            let tf = harness::lookup(function, *d)?;
            (network_scaling_study(&tf, &eps.0, cli.max_n, seed)?, out)
        }
    };
    write_artifact(out, &table.to_csv_string()?)?;
    let sidecar = out.with_extension(match out.extension() {
        Some(e) => format!("{}.json", e.to_string_lossy()),
        None => "json".to_string(),
    });
    write_artifact(&sidecar, &table.sidecar_json()?)?;
    println!(
        "wrote {} and {} ({} rows)",
        out.display(),
        sidecar.display(),
        table.rows.len()
    );
    for row in &table.rows {
        if let Some(note) = &row.note {
            println!("note at control {}: {note}", row.control);
        }
    }
    Ok(())
}

fn run_selftest(criterion: Option<u32>) -> Result<bool> {
    let reports = match criterion {
        Some(id) => match selftest::run_one(id) {
            Some(r) => vec![r],
            None => bail!("no criterion {id} (expected 1..=10)"),
        },
        None => selftest::run_all(),
    };
    let mut all_ok = true;
    for r in &reports {
        println!("{r}");
        all_ok &= r.passed;
    }
    println!(
        "selftest: {}/{} criteria passed",
        reports.iter().filter(|r| r.passed).count(),
        reports.len()
    );
    Ok(all_ok)
}
