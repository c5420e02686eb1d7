//! Command-line front end.
//!
//! Every command writes its result files plus a `manifest.json` into `--out`.
//! Output files contain no timestamps, so reruns with the same inputs are
//! byte-identical.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::format::{matrix_csv, round12, sig12};
use crate::game::{
    binomial, pure_nash_all, stackelberg_bruteforce, stackelberg_tree, Certification, EquilibriumKind, EquilibriumReport,
    GameInstance, PlacementPair,
};
use crate::platoon::{leader_placement_sweep, platoon_game, platoon_ne_prediction, PlatoonScenario};
use crate::recipes::{run_recipe, RecipeParams};
use crate::simulator::{frequency_csv, frequency_response, simulate_first_order, simulate_platoon, SimConfig};
use crate::spectral::{closed_form_directed, closed_form_undirected, grounded_system, invert_numeric, kernel_for, GroundedKernel};
use crate::topology::{LeaderNetwork, Mode};

#[derive(Debug, Parser)]
#[command(name = "sensor-game", version, about = "Attacker-detector sensor placement on leader-follower networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Export the payoff kernel of a network.
    Kernel {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the placement game on a network.
    Solve {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        f: usize,
        #[arg(long, value_enum, default_value = "stackelberg-tree")]
        solver: SolverArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a randomized or exhaustive check and write its pass/fail table.
    Reproduce {
        #[arg(long)]
        recipe: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        max_f: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Platoon game, leader placement sweep, or time-domain run.
    Platoon {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        f: usize,
        #[arg(long, value_enum, default_value = "game")]
        action: PlatoonAction,
        /// Constant attack injected at each attacked vehicle.
        #[arg(long, default_value_t = 1.0)]
        attack: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// First-order time run and frequency sweep at the Stackelberg placement.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = 1)]
        f: usize,
        #[arg(long, default_value_t = 1.0)]
        attack: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        omega_min: f64,
        #[arg(long, default_value_t = 1e3)]
        omega_max: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Numeric,
    PathOverlap,
    Reachability,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    Ne,
    StackelbergBrute,
    StackelbergTree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlatoonAction {
    Game,
    Sweep,
    Simulate,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub version: String,
    pub outputs: Vec<FileDigest>,
}

/// Parse `args` (program name first), run, print, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command; returns the human-readable summary lines.
pub fn execute(cli: &Cli) -> Result<Vec<String>> {
    match &cli.command {
        Command::Kernel { network, method, out } => cmd_kernel(network, *method, out),
        Command::Solve { network, f, solver, out } => cmd_solve(network, *f, *solver, out),
        Command::Reproduce { recipe, seed, samples, max_n, max_f, out } => {
            let d = RecipeParams::defaults(recipe);
            let params = RecipeParams {
                seed: *seed,
                samples: samples.unwrap_or(d.samples),
                max_n: max_n.unwrap_or(d.max_n),
                max_f: max_f.unwrap_or(d.max_f),
            };
            cmd_reproduce(recipe, &params, out)
        }
        Command::Platoon { scenario, f, action, attack, dt, horizon, out } => {
            cmd_platoon(scenario, *f, *action, *attack, *dt, *horizon, out)
        }
        Command::Simulate { network, f, attack, dt, horizon, omega_min, omega_max, points, out } => {
            let sweep = Sweep { omega_min: *omega_min, omega_max: *omega_max, points: *points };
            cmd_simulate(network, *f, *attack, *dt, *horizon, sweep, out)
        }
    }
}

struct Output {
    dir: PathBuf,
    written: Vec<FileDigest>,
}

impl Output {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.written.push(FileDigest { path: name.to_string(), sha256: sha256_hex(contents.as_bytes()) });
        Ok(())
    }

    fn finish(self, command: &str, inputs: &[&Path], seed: Option<u64>, params: serde_json::Value) -> Result<()> {
        let inputs = inputs
            .iter()
            .map(|p| {
                let bytes = fs::read(p)?;
                Ok(FileDigest { path: p.display().to_string(), sha256: sha256_hex(&bytes) })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            command: command.to_string(),
            inputs,
            seed,
            params,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.written,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_network(path: &Path) -> Result<LeaderNetwork> {
    LeaderNetwork::from_json(&fs::read_to_string(path)?)
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct KernelFile<'a> {
    order: &'a [usize],
    method: &'static str,
    matrix: Vec<Vec<f64>>,
}

fn kernel_json(kernel: &GroundedKernel) -> Result<String> {
    let m = &kernel.inv;
    let matrix = (0..m.nrows()).map(|r| m.row(r).iter().map(|&x| round12(x)).collect()).collect();
    json_line(&KernelFile { order: &kernel.follower_order, method: kernel.method.name(), matrix })
}

fn cmd_kernel(network: &Path, method: MethodArg, out: &Path) -> Result<Vec<String>> {
    let net = read_network(network)?;
    let numeric = || invert_numeric(&grounded_system(&net)?);
    let kernels = match method {
        MethodArg::Numeric => vec![numeric()?],
        MethodArg::PathOverlap => vec![closed_form_undirected(&net)?],
        MethodArg::Reachability => vec![closed_form_directed(&net)?],
        MethodArg::All => {
            let mut all = vec![numeric()?];
            if net.validate_tree() {
                all.push(match net.mode() {
                    Mode::Undirected => closed_form_undirected(&net)?,
                    Mode::Directed => closed_form_directed(&net)?,
                });
            }
            all
        }
    };
    let mut output = Output::create(out)?;
    let mut lines = Vec::new();
    for kernel in &kernels {
        let name = kernel.method.name();
        output.write(&format!("kernel-{name}.csv"), &matrix_csv(&kernel.inv))?;
        output.write(&format!("kernel-{name}.json"), &kernel_json(kernel)?)?;
        lines.push(format!("{name}: {0}x{0} kernel written", kernel.size()));
    }
    if method == MethodArg::All {
        let worst = kernels.iter().skip(1).map(|k| k.max_discrepancy(&kernels[0])).fold(0.0, f64::max);
        let line = format!("max discrepancy: {}", sig12(worst));
        output.write("discrepancy.txt", &format!("{line}\n"))?;
        lines.push(line);
    }
    output.finish("kernel", &[network], None, serde_json::json!({ "method": method }))?;
    Ok(lines)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    kind: EquilibriumKind,
    value: Option<f64>,
    strategies: &'a [PlacementPair],
    certified_by: Certification,
    evaluations: u64,
    no_pure_ne: bool,
}

fn report_json(report: &EquilibriumReport) -> Result<String> {
    json_line(&ReportFile {
        kind: report.kind,
        value: Some(round12(report.value)),
        strategies: &report.strategies,
        certified_by: report.certified_by,
        evaluations: report.evaluations,
        no_pure_ne: false,
    })
}

fn no_ne_json(game: &GameInstance) -> Result<String> {
    let count = binomial(game.followers() as u128, game.budget() as u128);
    json_line(&ReportFile {
        kind: EquilibriumKind::PureNash,
        value: None,
        strategies: &[],
        certified_by: Certification::SaddleCheck,
        evaluations: (count * count) as u64,
        no_pure_ne: true,
    })
}

fn summarize(report: &EquilibriumReport) -> Vec<String> {
    let mut lines = vec![format!(
        "{:?} value {} ({:?}, {} evaluations)",
        report.kind,
        sig12(report.value),
        report.certified_by,
        report.evaluations
    )];
    for s in &report.strategies {
        lines.push(format!("  attacker {:?} detector {:?}", s.attacker, s.detector));
    }
    lines
}

/// Solve `game` and write `report.json`; a missing pure NE is a result, not an error.
fn solve_into(game: &GameInstance, net: &LeaderNetwork, solver: SolverArg, output: &mut Output) -> Result<Vec<String>> {
    let report = match solver {
        SolverArg::Ne => pure_nash_all(game)?,
        SolverArg::StackelbergBrute => Some(stackelberg_bruteforce(game)?),
        SolverArg::StackelbergTree => Some(stackelberg_tree(game, net)?),
    };
    match report {
        Some(report) => {
            output.write("report.json", &report_json(&report)?)?;
            Ok(summarize(&report))
        }
        None => {
            output.write("report.json", &no_ne_json(game)?)?;
            Ok(vec!["no pure NE".to_string()])
        }
    }
}

fn cmd_solve(network: &Path, f: usize, solver: SolverArg, out: &Path) -> Result<Vec<String>> {
    let net = read_network(network)?;
    let game = GameInstance::new(kernel_for(&net)?, f)?;
    let mut output = Output::create(out)?;
    let lines = solve_into(&game, &net, solver, &mut output)?;
    output.finish("solve", &[network], None, serde_json::json!({ "f": f, "solver": solver }))?;
    Ok(lines)
}

fn cmd_reproduce(recipe: &str, params: &RecipeParams, out: &Path) -> Result<Vec<String>> {
    let outcome = run_recipe(recipe, params)?;
    let mut output = Output::create(out)?;
    output.write(&format!("{recipe}.csv"), &outcome.to_csv())?;
    let summary = outcome.summary();
    output.write("summary.txt", &format!("{summary}\n"))?;
    output.finish("reproduce", &[], Some(params.seed), serde_json::json!({ "recipe": recipe, "params": params }))?;
    if !outcome.all_passed() {
        return Err(Error::Invariant(summary));
    }
    Ok(vec![summary])
}

fn sim_config(defaults: SimConfig, dt: Option<f64>, horizon: Option<f64>) -> Result<SimConfig> {
    let cfg = SimConfig { dt: dt.unwrap_or(defaults.dt), horizon: horizon.unwrap_or(defaults.horizon), ..defaults };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_platoon(
    scenario: &Path,
    f: usize,
    action: PlatoonAction,
    attack: f64,
    dt: Option<f64>,
    horizon: Option<f64>,
    out: &Path,
) -> Result<Vec<String>> {
    let scn = PlatoonScenario::from_json(&fs::read_to_string(scenario)?)?;
    let mut output = Output::create(out)?;
    let mut params = serde_json::json!({ "f": f, "action": action });
    let lines = match action {
        PlatoonAction::Game => {
            let game = platoon_game(&scn, f)?;
            let mut lines = solve_into(&game, &scn.network()?, SolverArg::Ne, &mut output)?;
            if scn.leader_at_end() {
                let pair = platoon_ne_prediction(&scn, f)?;
                let saddle = game.is_saddle_point(&pair)?;
                lines.push(format!(
                    "predicted attacker {:?} detector {:?}: value {}, saddle {}",
                    pair.attacker,
                    pair.detector,
                    sig12(game.payoff(&pair)?),
                    saddle
                ));
            }
            lines
        }
        PlatoonAction::Sweep => {
            let rows = leader_placement_sweep(scn.vehicle_count, f, scn.mode)?;
            let mut csv = String::from("position,value,ne_exists,strategies,within_end_values\n");
            for row in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.position,
                    sig12(row.value),
                    row.ne_exists,
                    placement_cell(&row.strategy),
                    row.within_end_values
                ));
            }
            output.write("sweep.csv", &csv)?;
            let outliers = rows.iter().filter(|r| !r.within_end_values).count();
            vec![format!("{} leader positions, {} above the end values", rows.len(), outliers)]
        }
        PlatoonAction::Simulate => {
            let game = platoon_game(&scn, f)?;
            let pair = if scn.leader_at_end() {
                platoon_ne_prediction(&scn, f)?
            } else {
                stackelberg_tree(&game, &scn.network()?)?.strategies[0].clone()
            };
            let cfg = sim_config(SimConfig::platoon_defaults(&scn)?, dt, horizon)?;
            params["dt"] = cfg.dt.into();
            params["horizon"] = cfg.horizon.into();
            params["attack"] = attack.into();
            let run = simulate_platoon(&scn, &pair.attacker, &pair.detector, &vec![attack; f], &cfg)?;
            output.write("trajectory.csv", &run.trajectory.to_csv())?;
            let expected = game.kernel().submatrix(&pair.detector, &pair.attacker) * nalgebra::DVector::from_element(f, attack);
            let worst = run
                .steady_position_deviation
                .iter()
                .zip(expected.iter())
                .map(|(got, want)| (got - want / scn.k_p).abs())
                .fold(0.0, f64::max);
            let line = format!(
                "dc-check: position deviation {:?}, velocity deviation {:?}, max error vs kernel/k_p {}",
                run.steady_position_deviation.iter().map(|&x| sig12(x)).collect::<Vec<_>>(),
                run.steady_velocity_deviation.iter().map(|&x| sig12(x)).collect::<Vec<_>>(),
                sig12(worst)
            );
            output.write("dc-check.txt", &format!("{line}\n"))?;
            vec![line]
        }
    };
    output.finish("platoon", &[scenario], None, params)?;
    Ok(lines)
}

fn placement_cell(pair: &PlacementPair) -> String {
    let join = |s: &[usize]| s.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    format!("A[{}] D[{}]", join(&pair.attacker), join(&pair.detector))
}

#[derive(Clone, Copy, Debug)]
struct Sweep {
    omega_min: f64,
    omega_max: f64,
    points: usize,
}

impl Sweep {
    fn omegas(&self) -> Result<Vec<f64>> {
        if !(self.omega_min > 0.0 && self.omega_max >= self.omega_min && self.points >= 2) {
            return Err(Error::InvalidConfig("need 0 < omega-min <= omega-max and at least 2 points".into()));
        }
        let ratio = (self.omega_max / self.omega_min).ln();
        Ok((0..self.points)
            .map(|k| self.omega_min * (ratio * k as f64 / (self.points - 1) as f64).exp())
            .collect())
    }
}

fn cmd_simulate(
    network: &Path,
    f: usize,
    attack: f64,
    dt: Option<f64>,
    horizon: Option<f64>,
    sweep: Sweep,
    out: &Path,
) -> Result<Vec<String>> {
    let net = read_network(network)?;
    let game = GameInstance::new(kernel_for(&net)?, f)?;
    let pair = if net.validate_tree() {
        stackelberg_tree(&game, &net)?
    } else {
        stackelberg_bruteforce(&game)?
    }
    .strategies[0]
        .clone();
    let cfg = sim_config(SimConfig::first_order_defaults(&grounded_system(&net)?)?, dt, horizon)?;
    let mut output = Output::create(out)?;
    let run = simulate_first_order(&net, &pair.attacker, &pair.detector, &vec![attack; f], &cfg)?;
    output.write("trajectory.csv", &run.to_csv())?;
    let points = frequency_response(&net, &pair.attacker, &pair.detector, &sweep.omegas()?)?;
    output.write("frequency.csv", &frequency_csv(&points))?;

    let expected = game.kernel().submatrix(&pair.detector, &pair.attacker) * nalgebra::DVector::from_element(f, attack);
    let worst = run.final_outputs().iter().zip(expected.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let peak = points.iter().fold(points[0], |best, p| if p.1 > best.1 { *p } else { best });
    let lines = vec![
        format!("attacker {:?} detector {:?}, settled {}", pair.attacker, pair.detector, run.settled),
        format!("dc-check: max |y - kernel w| {}", sig12(worst)),
        format!("peak gain {} at omega {}", sig12(peak.1), sig12(peak.0)),
    ];
    output.write("dc-check.txt", &format!("{}\n", lines[1]))?;
    let params = serde_json::json!({
        "f": f, "attack": attack, "dt": cfg.dt, "horizon": cfg.horizon,
        "omega_min": sweep.omega_min, "omega_max": sweep.omega_max, "points": sweep.points,
    });
    output.finish("simulate", &[network], None, params)?;
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn sweep_spacing_hits_both_ends() {
        let w = Sweep { omega_min: 1e-2, omega_max: 1e2, points: 5 }.omegas().unwrap();
        assert_eq!(w.len(), 5);
        assert!((w[0] - 1e-2).abs() < 1e-15 && (w[4] - 1e2).abs() < 1e-9 && (w[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_exit_with_one() {
        assert_eq!(run(["sensor-game", "solve", "--f", "x"]), 1);
    }
}
