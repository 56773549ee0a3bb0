use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use sigaccess::security::attack::{run_attack_scenario, AttackKind, AttackScenario, AttackTarget};
use sigaccess::security::terminal::TerminalIdentity;
use sigaccess::server::config::{ConfigDelta, Profile, SystemConfig};
use sigaccess::server::http::serve;
use sigaccess::server::service::AccessService;
use sigaccess::tooling::batch::{enroll_batch, verify_batch, VerifyBatchOptions};
use sigaccess::tooling::client::ApiClient;
use sigaccess::tooling::corpus::{generate, Corpus, CorpusParams};
use sigaccess::tooling::eval::{eval, report_from_trials, score_trials, EvalOptions, ThresholdGrid};

#[derive(Parser)]
#[command(name = "sigaccess", version, about = "Signature verification access server and tools")]
struct Cli {
    /// Base URL of the server for client commands.
    #[arg(long, global = true, env = "SIGACCESS_SERVER", default_value = "http://127.0.0.1:8080")]
    server: String,
    /// Admin token, required by `serve` and the admin commands.
    #[arg(long, global = true, env = "ADMIN_TOKEN", hide_env_values = true)]
    admin_token: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the verification server until interrupted.
    Serve {
        /// JSON config file. Config changes made over the API are written here.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "production")]
        profile: Profile,
        /// Overrides data_dir (and log_path, placed inside it) of the profile.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Overrides bind_address.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Authorize a new user and print the temporary enrollment password.
    Authorize {
        username: String,
        #[arg(long)]
        display_name: Option<String>,
    },
    /// List users.
    Users,
    /// Clear a user's block.
    Unblock { username: String },
    /// Show the configuration, or change it with --set key=value.
    Config {
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print the tail of the transaction log.
    Logs {
        #[arg(long, default_value_t = 50)]
        last: usize,
    },
    /// Write a synthetic corpus.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        genuine: Option<usize>,
        #[arg(long)]
        forgeries: Option<usize>,
        #[arg(long)]
        random_forgeries: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Authorize and enroll every corpus user on the server.
    EnrollBatch {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Verify every non-enrollment probe of a corpus through the server.
    VerifyBatch {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Leave update_rule and max_failures as configured on the server.
        #[arg(long)]
        no_freeze: bool,
        /// Also score in process and fail on any differing decision.
        #[arg(long)]
        compare: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// FAR/FRR/EER sweep computed in process.
    Eval {
        /// Corpus directory. The default synthetic corpus is used if omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Operating threshold to report.
        #[arg(long, default_value_t = 1.6)]
        threshold: f64,
        /// Threshold grid as start:stop:step.
        #[arg(long, default_value = "0:5:0.01")]
        grid: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run an attack scenario and print the report.
    AttackSim {
        #[arg(value_enum)]
        kind: KindArg,
        /// Attack point 1..8. Defaults by kind.
        #[arg(long)]
        point: Option<u8>,
        /// Attack the server at --server instead of a private local one.
        #[arg(long)]
        remote: bool,
        /// Terminal credentials for point 8 against a remote server.
        #[arg(long, requires = "terminal_secret")]
        terminal_id: Option<String>,
        #[arg(long, requires = "terminal_id")]
        terminal_secret: Option<String>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum KindArg {
    Replay,
    TrojanAccept,
    TrojanReject,
    DosFlood,
    SensorDestroy,
}

impl From<KindArg> for AttackKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Replay => AttackKind::Replay,
            KindArg::TrojanAccept => AttackKind::TrojanAccept,
            KindArg::TrojanReject => AttackKind::TrojanReject,
            KindArg::DosFlood => AttackKind::DosFlood,
            KindArg::SensorDestroy => AttackKind::SensorDestroy,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::FAILURE;
        }
    };
    match rt.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn admin_client(cli: &Cli) -> anyhow::Result<ApiClient> {
    let token = cli
        .admin_token
        .clone()
        .context("admin token required (set ADMIN_TOKEN or pass --admin-token)")?;
    Ok(ApiClient::new(&cli.server).with_admin_token(token))
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("value serializes"));
}

async fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.cmd {
        Cmd::Serve {
            config,
            profile,
            data_dir,
            bind,
        } => serve_cmd(&cli, config.as_deref(), *profile, data_dir.clone(), bind.clone()).await,
        Cmd::Authorize {
            username,
            display_name,
        } => {
            let c = admin_client(&cli)?;
            let r = c.authorize(username, display_name.as_deref()).await?;
            println!("authorized {}", r.username);
            println!("temporary password: {}", r.temp_password);
            Ok(())
        }
        Cmd::Users => {
            let users = admin_client(&cli)?.users().await?;
            println!(
                "{:<24} {:<16} {:>8} {:>7}  last success",
                "user", "phase", "failures", "blocked"
            );
            for u in users {
                println!(
                    "{:<24} {:<16} {:>8} {:>7}  {}",
                    u.name,
                    u.phase.to_string(),
                    u.consecutive_failures,
                    u.blocked,
                    u.last_success_at
                        .map(|t| t.to_rfc3339())
                        .unwrap_or_else(|| "-".into())
                );
            }
            Ok(())
        }
        Cmd::Unblock { username } => {
            let u = admin_client(&cli)?.unblock(username).await?;
            println!("unblocked {}", u.name);
            Ok(())
        }
        Cmd::Config { set } => {
            let c = admin_client(&cli)?;
            let cfg = if set.is_empty() {
                c.get_config().await?
            } else {
                c.set_config(&parse_delta(set)?).await?
            };
            print_json(&cfg);
            Ok(())
        }
        Cmd::Logs { last } => {
            for r in admin_client(&cli)?.transactions(*last).await? {
                println!("{}", serde_json::to_string(&r)?);
            }
            Ok(())
        }
        Cmd::GenCorpus {
            out,
            users,
            genuine,
            forgeries,
            random_forgeries,
            seed,
        } => {
            let d = CorpusParams::default();
            let p = CorpusParams {
                n_users: users.unwrap_or(d.n_users),
                genuines_per_user: genuine.unwrap_or(d.genuines_per_user),
                forgeries_per_user: forgeries.unwrap_or(d.forgeries_per_user),
                random_forgeries_per_user: random_forgeries.unwrap_or(d.random_forgeries_per_user),
                master_seed: seed.unwrap_or(d.master_seed),
                ..d
            };
            let m = generate(&p)?.write(out)?;
            println!("wrote {} users to {}", m.users.len(), out.display());
            Ok(())
        }
        Cmd::EnrollBatch { corpus } => {
            let corpus = Corpus::load(corpus)?;
            let s = enroll_batch(&admin_client(&cli)?, &corpus).await?;
            println!("enrolled {} users with {} samples", s.users, s.samples);
            Ok(())
        }
        Cmd::VerifyBatch {
            corpus,
            parallel,
            no_freeze,
            compare,
            report,
        } => {
            let corpus = Corpus::load(corpus)?;
            let client = admin_client(&cli)?;
            let cfg = client.get_config().await?;
            let opts = VerifyBatchOptions {
                enroll_count: cfg.enroll_count,
                parallel: *parallel,
                freeze_models: !no_freeze,
            };
            let started = std::time::Instant::now();
            let trials = verify_batch(&client, &corpus, opts).await?;
            let eval_opts = EvalOptions {
                enroll_count: cfg.enroll_count,
                resample_len: cfg.resample_len,
                threshold: cfg.accept_threshold,
                ..EvalOptions::default()
            };
            let r = report_from_trials(trials.clone(), &eval_opts, started.elapsed())?;
            println!("{}", r.summary());
            if let Some(path) = report {
                r.write_json(path)?;
            }
            if *compare {
                let local = score_trials(&corpus, &eval_opts)?;
                let t = cfg.accept_threshold;
                let diffs = trials
                    .iter()
                    .zip(&local)
                    .filter(|(a, b)| a.accepted(t) != b.accepted(t))
                    .count();
                if diffs > 0 || local.len() != trials.len() {
                    bail!("{diffs} decisions differ from the in-process evaluation");
                }
                println!("all {} decisions match the in-process evaluation", trials.len());
            }
            Ok(())
        }
        Cmd::Eval {
            corpus,
            threshold,
            grid,
            report,
        } => {
            let corpus = match corpus {
                Some(dir) => Corpus::load(dir)?,
                None => generate(&CorpusParams::default())?,
            };
            let opts = EvalOptions {
                threshold: *threshold,
                grid: parse_grid(grid)?,
                ..EvalOptions::default()
            };
            let r = eval(&corpus, &opts)?;
            println!("{}", r.summary());
            if let Some(path) = report {
                r.write_json(path)?;
            }
            Ok(())
        }
        Cmd::AttackSim {
            kind,
            point,
            remote,
            terminal_id,
            terminal_secret,
        } => {
            let kind = AttackKind::from(*kind);
            let scenario = AttackScenario::standard(kind, point.unwrap_or(kind.default_point()))?;
            let target = if *remote {
                let terminal = match (terminal_id, terminal_secret) {
                    (Some(id), Some(secret)) => Some(terminal_from_hex(id, secret)?),
                    _ => None,
                };
                AttackTarget::Remote {
                    client: admin_client(&cli)?,
                    terminal,
                }
            } else {
                AttackTarget::Local
            };
            let report = run_attack_scenario(&scenario, target).await?;
            print!("{}", report.render());
            if !report.passed {
                bail!("scenario postcondition did not hold");
            }
            Ok(())
        }
    }
}

async fn serve_cmd(
    cli: &Cli,
    config_path: Option<&Path>,
    profile: Profile,
    data_dir: Option<PathBuf>,
    bind: Option<String>,
) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    let token = cli
        .admin_token
        .clone()
        .context("serve needs an admin token (set ADMIN_TOKEN)")?;

    let mut base = SystemConfig::for_profile(profile);
    if let Some(d) = &data_dir {
        base.log_path = d.join("transactions.log");
        base.data_dir = d.clone();
    }
    let persisted = config_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| base.data_dir.join("config.json"));
    let mut cfg = if persisted.exists() {
        SystemConfig::load(&persisted)?
    } else {
        base
    };
    if let Some(b) = bind {
        cfg.bind_address = b;
    }
    let listener = tokio::net::TcpListener::bind(&cfg.bind_address)
        .await
        .with_context(|| format!("binding {}", cfg.bind_address))?;
    let svc = AccessService::builder(cfg, token)
        .config_path(persisted)
        .open()?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    serve(Arc::new(svc), listener, shutdown_signal()).await?;
    tracing::info!("stopped");
    Ok(())
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

/// `key=value` pairs to a partial config. Values are read as JSON, falling
/// back to a plain string.
fn parse_delta(pairs: &[String]) -> anyhow::Result<ConfigDelta> {
    let mut map = serde_json::Map::new();
    for p in pairs {
        let (k, v) = p
            .split_once('=')
            .with_context(|| format!("expected KEY=VALUE, got {p:?}"))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.into()));
        map.insert(k.to_string(), value);
    }
    serde_json::from_value(serde_json::Value::Object(map)).context("invalid config change")
}

fn parse_grid(s: &str) -> anyhow::Result<ThresholdGrid> {
    let parts: Vec<f64> = s
        .split(':')
        .map(str::parse)
        .collect::<Result<_, _>>()
        .with_context(|| format!("grid must be start:stop:step, got {s:?}"))?;
    let [start, stop, step] = parts[..] else {
        bail!("grid must be start:stop:step, got {s:?}");
    };
    let g = ThresholdGrid { start, stop, step };
    g.values()?;
    Ok(g)
}

fn terminal_from_hex(id: &str, secret: &str) -> anyhow::Result<TerminalIdentity> {
    let json = serde_json::json!({ "terminal_id": id, "shared_secret": secret, "enabled": true });
    serde_json::from_value(json).context("terminal secret must be 64 hex characters")
}
