use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use trustnet_market::analysis::hurst_rs;
use trustnet_market::experiments::{run_hub_vs_periphery, run_sweep};
use trustnet_market::market::build_network;
use trustnet_market::network::fit_degree_exponent;
use trustnet_market::output::{self, sig6};
use trustnet_market::{run, Profile, SimulationConfig, TrustNetwork};

/// Agent-based stock market on a scale-free trust network.
#[derive(Parser)]
#[command(name = "trustnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Barabási–Albert network and write its edge list.
    GenNet {
        #[arg(long, default_value_t = 3969)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        isolated_fraction: f64,
        /// Edge-list file; printed to stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run one simulation and write CSV/JSON artifacts.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        seed: u64,
        /// Also render SVG charts.
        #[arg(long)]
        svg: bool,
    },
    /// Sweep follow probabilities and hub profiles over several seeds.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated follow probabilities.
        #[arg(long = "p", value_delimiter = ',', default_value = "0.01,0.05,0.3,0.5,0.7,0.95,0.99")]
        ps: Vec<f64>,
        /// Comma-separated hub profiles, or `none` for no override.
        #[arg(long, value_delimiter = ',', default_value = "imitator,anti_imitator,random_trader")]
        hub_profiles: Vec<String>,
        #[command(flatten)]
        seeds: SeedArgs,
    },
    /// Compare a hub profile swap against swapping the k least-connected agents.
    HubExperiment {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 300)]
        k: usize,
        #[command(flatten)]
        seeds: SeedArgs,
    },
    /// Estimate the Hurst exponent of an index.csv.
    Analyze { index_csv: PathBuf },
    /// Render SVG charts from a run directory.
    Plot { run_dir: PathBuf },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set case_id=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    case: Option<u8>,
    /// Follow probability of the momentum channel.
    #[arg(long = "prob")]
    prob: Option<f64>,
    /// `compare` or `combined_index`.
    #[arg(long)]
    algorithm: Option<String>,
    /// Total steps, warm-up included.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    n_agents: Option<usize>,
    /// Output root; defaults to $TRUSTNET_OUT, then `./runs`.
    #[arg(long, env = "TRUSTNET_OUT", default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SeedArgs {
    /// Seeds as a list (`1,2,5`) or an inclusive range (`0-9`).
    #[arg(long)]
    seeds: String,
}

impl SeedArgs {
    fn parse(&self) -> anyhow::Result<Vec<u64>> {
        let s = self.seeds.trim();
        if let Some((a, b)) = s.split_once('-') {
            let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
            if a > b {
                bail!("empty seed range {s}");
            }
            return Ok((a..=b).collect());
        }
        s.split(',')
            .map(|x| x.trim().parse().with_context(|| format!("bad seed `{x}`")))
            .collect()
    }
}

impl ConfigArgs {
    fn load(&self, seed: Option<u64>) -> anyhow::Result<SimulationConfig> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => String::new(),
        };
        let mut overrides = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                overrides.push((k.to_string(), v));
            }
        };
        push("case_id", self.case.map(|c| c.to_string()));
        push("follow_probability", self.prob.map(|p| p.to_string()));
        push("algorithm", self.algorithm.as_ref().map(|a| format!("\"{a}\"")));
        push("steps", self.steps.map(|s| s.to_string()));
        push("n_agents", self.n_agents.map(|s| s.to_string()));
        push("seed", seed.map(|s| s.to_string()));
        Ok(SimulationConfig::from_toml_with_overrides(&text, &overrides)?)
    }
}

fn parse_hub_profiles(list: &[String]) -> anyhow::Result<Vec<Profile>> {
    if list.len() == 1 && list[0].trim() == "none" {
        return Ok(Vec::new());
    }
    list.iter()
        .map(|p| p.parse::<Profile>().map_err(anyhow::Error::msg))
        .collect()
}

fn out_dir(root: &Path, command: &str, config: &SimulationConfig) -> anyhow::Result<PathBuf> {
    let dir = root.join(output::run_dir_name(command, config));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), config.to_toml())?;
    Ok(dir)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenNet { n, m, seed, isolated_fraction, out } => {
            let cfg = SimulationConfig {
                n_agents: n,
                ba_m: m,
                isolated_fraction,
                seed,
                ..Default::default()
            };
            let net = build_network(&cfg)?;
            match &out {
                Some(path) => net.write_edge_list(fs::File::create(path)?)?,
                None => net.write_edge_list(std::io::stdout().lock())?,
            }
            if out.is_some() {
                report_network(&net);
            }
        }
        Command::Run { cfg, seed, svg } => {
            let config = cfg.load(Some(seed))?;
            let dir = out_dir(&cfg.out_dir, "run", &config)?;
            let result = run(&config)?;
            let analysis = output::write_run(&dir, &result)?;
            if svg {
                output::plot_run_dir(&dir)?;
            }
            for p in Profile::ALL {
                if let Some(m) = result.mean_wealth(p) {
                    println!("{:<14} mean wealth {}", p.as_str(), sig6(m));
                }
            }
            if let Ok(h) = analysis.hurst {
                println!("hurst {} (stderr {})", sig6(h.h), sig6(h.stderr));
            }
            println!("{}", dir.display());
        }
        Command::Sweep { cfg, ps, hub_profiles, seeds } => {
            let config = cfg.load(None)?;
            let hubs = parse_hub_profiles(&hub_profiles)?;
            let seeds = seeds.parse()?;
            let result = run_sweep(&config, &ps, &hubs, &seeds)?;
            let dir = out_dir(&cfg.out_dir, "sweep", &config)?;
            fs::write(dir.join("sweep.csv"), result.to_csv())?;
            output::write_json(&dir.join("sweep.json"), &result)?;
            let failed = result.failures().count();
            println!(
                "{} grid points, {failed} failed -> {}",
                result.records.len(),
                dir.display()
            );
            if failed > 0 {
                for r in result.failures() {
                    eprintln!("seed {} p {}: {}", r.seed, r.follow_probability, r.error.as_deref().unwrap_or(""));
                }
                bail!("{failed} sweep runs failed");
            }
        }
        Command::HubExperiment { cfg, k, seeds } => {
            let config = cfg.load(None)?;
            let seeds = seeds.parse()?;
            let report = run_hub_vs_periphery(&config, k, &seeds)?;
            let dir = out_dir(&cfg.out_dir, "hub-experiment", &config)?;
            output::write_json(&dir.join("hub_experiment.json"), &report)?;
            for s in &report.seeds {
                println!(
                    "seed {:>4}  hub distance {:>10}  periphery distance {:>10}",
                    s.seed,
                    sig6(s.hub_distance),
                    sig6(s.periphery_distance)
                );
            }
            println!(
                "hub dominant in {}/{} seeds -> {}",
                report.hub_dominant_count(),
                report.seeds.len(),
                dir.display()
            );
        }
        Command::Analyze { index_csv } => {
            let text = fs::read_to_string(&index_csv)
                .with_context(|| format!("reading {}", index_csv.display()))?;
            let index = output::read_index_csv(&text)?;
            let h = hurst_rs(&index)?;
            println!(
                "hurst {} stderr {} windows {}..{} r2 {} slope_break {}",
                sig6(h.h),
                sig6(h.stderr),
                h.min_window,
                h.max_window,
                sig6(h.r2),
                sig6(h.slope_break)
            );
        }
        Command::Plot { run_dir } => {
            for path in output::plot_run_dir(&run_dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn report_network(net: &TrustNetwork) {
    let degrees = net.degrees();
    let fit = fit_degree_exponent(&degrees).ok();
    println!(
        "nodes {} edges {} hub {:?} hub_degree {} exponent {}",
        net.n(),
        net.edge_count(),
        net.hub(),
        net.hub().map(|h| net.degree(h)).unwrap_or(0),
        fit.map(|f| sig6(f.slope)).unwrap_or_else(|| "n/a".into())
    );
}
