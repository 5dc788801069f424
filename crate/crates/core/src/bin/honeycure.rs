use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use honeycure::config::Settings;
use honeycure::corpus_format::read_corpus;
use honeycure::detector::{
    append_suspects, generate_signatures, push_corpus, run_detection, run_service, DetectionReport,
    PushReply, PushServer, Signature,
};
use honeycure::distribution::{Broadcaster, ThinClient};
use honeycure::model::unix_now;
use honeycure::sim::{gen_traffic, simulate, SimOptions, SimScenario};
use honeycure::{Error, Result, Shutdown};

#[derive(Parser)]
#[command(
    name = "honeycure",
    version,
    about = "Payload signature detection and distribution"
)]
struct Cli {
    /// key=value settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic CORP file.
    GenTraffic {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run detection over a CORP file and append to the suspects log.
    Detect {
        corpus: PathBuf,
        /// Overrides `log_path`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Accept pushed corpora and run the periodic detector.
    Serve,
    /// Send a CORP file to a push server.
    Push {
        corpus: PathBuf,
        /// Overrides `push_listen`.
        #[arg(long)]
        addr: Option<String>,
    },
    /// Run a thin client.
    Client,
    /// Run the whole pipeline in one process against a fresh directory.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Work directory; must be empty or absent.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    sets: usize,
    #[arg(long, default_value_t = 100)]
    packets_per_set: usize,
    #[arg(long, default_value_t = 1500)]
    packet_len: usize,
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    /// Injected payload as text (default: the EICAR test string).
    #[arg(long, conflicts_with = "payload_hex")]
    payload: Option<String>,
    #[arg(long)]
    payload_hex: Option<String>,
    /// Corpus timestamp in Unix seconds (default: now).
    #[arg(long)]
    created_at: Option<u64>,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<SimScenario> {
        let inject_payload = match (&self.payload, &self.payload_hex) {
            (Some(text), _) => text.as_bytes().to_vec(),
            (None, Some(h)) => {
                hex::decode(h).map_err(|e| Error::Argument(format!("--payload-hex: {e}")))?
            }
            (None, None) => honeycure::EICAR.to_vec(),
        };
        let scenario = SimScenario {
            n_sets: self.sets,
            packets_per_set: self.packets_per_set,
            packet_len: self.packet_len,
            inject_fraction: self.fraction,
            inject_payload,
            seed: self.seed,
            created_at: self.created_at.unwrap_or_else(unix_now),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn emit(record: Value) {
    println!("{record}");
}

fn report_record(report: &DetectionReport, signatures: &[Signature]) -> Value {
    json!({
        "event": "detection",
        "corpus_id": report.corpus_id,
        "sets": report.sets_analyzed,
        "suspects": report.suspects.len(),
        "signatures": signatures.len(),
        "started_at": report.started_at.to_rfc3339(),
        "finished_at": report.finished_at.to_rfc3339(),
    })
}

fn interrupt_handle() -> Result<Shutdown> {
    let shutdown = Shutdown::new();
    let flag = shutdown.clone();
    ctrlc::set_handler(move || flag.request())
        .map_err(|e| Error::Argument(format!("cannot install signal handler: {e}")))?;
    Ok(shutdown)
}

fn cmd_detect(settings: &Settings, corpus: &Path, log: &Path) -> Result<()> {
    let bytes = fs::read(corpus)
        .map_err(|e| Error::Argument(format!("cannot read {}: {e}", corpus.display())))?;
    let corpus = read_corpus(&bytes)?;
    let report = run_detection(&corpus, &settings.extraction, &settings.policy)?;
    append_suspects(&report, log)?;
    for entry in &report.suspects {
        emit(json!({
            "event": "suspect",
            "fraction": entry.fraction,
            "count": entry.count,
            "hash": entry.pattern.hash(),
            "hex": hex::encode(entry.pattern.bytes()),
        }));
    }
    emit(report_record(&report, &generate_signatures(&report)));
    eprintln!("{} suspects", report.suspects.len());
    Ok(())
}

fn cmd_serve(settings: &Settings) -> Result<()> {
    let shutdown = interrupt_handle()?;
    let service = settings.service_config();
    service.validate()?;
    fs::create_dir_all(&service.spool)?;
    let server = PushServer::bind(settings.push_listen.as_str(), &service.spool)?;
    let addr = server.local_addr()?;
    emit(json!({"event": "listening", "addr": addr.to_string(), "spool": service.spool}));
    eprintln!("accepting corpora on {addr}");
    let stop = shutdown.clone();
    let receiver = thread::spawn(move || server.serve(&stop));

    let mut broadcaster =
        Broadcaster::new(settings.endpoints.clone(), settings.broadcast_options());
    let mut sink = |report: &DetectionReport, sigs: &[Signature]| {
        emit(report_record(report, sigs));
        eprintln!("{}: {} suspects", report.corpus_id, report.suspects.len());
        if sigs.is_empty() || settings.endpoints.is_empty() {
            return;
        }
        match broadcaster.publish(sigs) {
            Ok(delivery) => {
                for d in &delivery.deliveries {
                    emit(json!({
                        "event": "delivery",
                        "endpoint": d.endpoint,
                        "ok": d.outcome.is_ok(),
                        "error": d.outcome.as_ref().err(),
                    }));
                }
            }
            Err(err) => eprintln!("broadcast failed: {err}"),
        }
    };
    let served = run_service(&service, &mut sink, &shutdown);
    shutdown.request();
    let received = receiver.join().unwrap_or(Ok(()));
    served.and(received)?;
    emit(json!({"event": "stopped"}));
    Ok(())
}

fn cmd_push(corpus: &Path, addr: &str) -> Result<bool> {
    let bytes = fs::read(corpus)
        .map_err(|e| Error::Argument(format!("cannot read {}: {e}", corpus.display())))?;
    let reply = push_corpus(addr, &bytes)?;
    let accepted = reply == PushReply::Accepted;
    emit(json!({"event": "push", "addr": addr, "bytes": bytes.len(), "accepted": accepted}));
    eprintln!(
        "{addr}: {}",
        if accepted {
            "accepted"
        } else {
            "rejected as malformed"
        }
    );
    Ok(accepted)
}

fn cmd_client(settings: &Settings) -> Result<()> {
    let shutdown = interrupt_handle()?;
    let cfg = settings.client_config();
    fs::create_dir_all(&cfg.quarantine_dir)?;
    let client = ThinClient::bind(cfg.clone())?;
    let addr = client.local_addr()?;
    emit(json!({"event": "listening", "addr": addr.to_string(), "db_size": client.db().len()}));
    eprintln!(
        "thin client on {addr}, scanning {}",
        cfg.scan_root.display()
    );
    client.run(&shutdown, |cycle| {
        for q in &cycle.quarantined {
            emit(json!({
                "event": "quarantine",
                "original": q.original,
                "quarantined": q.quarantined,
                "hash": q.signature_hash,
                "offset": q.offset,
            }));
        }
        emit(json!({
            "event": "cycle",
            "new_signatures": cycle.new_signatures,
            "db_size": cycle.db_size,
            "matches": cycle.matches.len(),
            "quarantined": cycle.quarantined.len(),
        }));
        eprintln!(
            "{} new signatures, {} files quarantined",
            cycle.new_signatures,
            cycle.quarantined.len()
        );
    })?;
    emit(json!({"event": "stopped"}));
    Ok(())
}

fn cmd_simulate(
    settings: Settings,
    scenario: &SimScenario,
    out: &Path,
    timeout: Duration,
) -> Result<bool> {
    let mut settings = settings;
    settings.period = Duration::from_secs(1);
    let options = SimOptions {
        settings,
        timeout,
        ..SimOptions::default()
    };
    let report = simulate(scenario, out, &options)?;
    for (i, c) in report.clients.iter().enumerate() {
        emit(json!({
            "event": "client",
            "index": i,
            "root": c.root,
            "infected_quarantined": c.infected_quarantined,
            "clean_untouched": c.clean_untouched,
            "quarantined_files": c.quarantined_files,
        }));
    }
    emit(json!({
        "event": "simulation",
        "workdir": report.workdir,
        "injected_packets": report.injected_packets,
        "suspects": report.suspects,
        "signatures": report.signatures,
        "expected_detection": report.expected_detection,
        "detected": report.detected,
        "detection_to_quarantine_secs": report.detection_to_quarantine.map(|d| d.as_secs_f64()),
        "elapsed_secs": report.elapsed.as_secs_f64(),
        "timed_out": report.timed_out,
        "success": report.success(),
    }));
    match (report.detected, report.detection_to_quarantine) {
        (true, Some(t)) => eprintln!("detection to quarantine: {:.3}s", t.as_secs_f64()),
        (false, _) if !report.expected_detection => eprintln!("no detection (expected)"),
        (false, _) => eprintln!("no detection"),
        _ => {}
    }
    if !report.success() {
        eprint!("simulation failed\n{}", report.stage_dump());
    }
    Ok(report.success())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    match cli.command {
        Command::GenTraffic { scenario, out } => {
            let scenario = scenario.scenario()?;
            let traffic = gen_traffic(&scenario, &out)?;
            emit(json!({
                "event": "gen-traffic",
                "out": out,
                "seed": scenario.seed,
                "packets": traffic.corpus.packet_count(),
                "injected": traffic.injected_count(),
            }));
            eprintln!(
                "wrote {} packets ({} injected) to {}",
                traffic.corpus.packet_count(),
                traffic.injected_count(),
                out.display()
            );
        }
        Command::Detect { corpus, log } => {
            let log = log.unwrap_or_else(|| settings.log_path.clone());
            cmd_detect(&settings, &corpus, &log)?;
        }
        Command::Serve => cmd_serve(&settings)?,
        Command::Push { corpus, addr } => {
            let addr = addr.unwrap_or_else(|| settings.push_listen.clone());
            if !cmd_push(&corpus, &addr)? {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Client => cmd_client(&settings)?,
        Command::Simulate {
            scenario,
            out,
            timeout_secs,
        } => {
            let scenario = scenario.scenario()?;
            if !cmd_simulate(settings, &scenario, &out, Duration::from_secs(timeout_secs))? {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
