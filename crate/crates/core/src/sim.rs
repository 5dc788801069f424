//! Synthetic traffic and a self-contained end-to-end run: traffic with a
//! planted payload is pushed to a detector, whose signatures are broadcast to
//! thin clients that must quarantine their infected file and nothing else.
//!
//! Every component talks over its real protocol (CXFR over TCP, AMP1 over
//! UDP); only the threads share a process.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Settings;
use crate::corpus_format::write_corpus;
use crate::detector::{
    push_corpus, run_service, DetectionReport, PushReply, PushServer, ServiceConfig, Signature,
};
use crate::distribution::{Broadcaster, ClientConfig, ThinClient};
use crate::error::{Error, Result};
use crate::model::{unix_now, Corpus, Packet, PacketSet, MAX_PAYLOAD_LEN};
use crate::shutdown::Shutdown;

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub n_sets: usize,
    pub packets_per_set: usize,
    pub packet_len: usize,
    pub inject_fraction: f64,
    pub inject_payload: Vec<u8>,
    pub seed: u64,
    /// Stamped into the corpus header.
    pub created_at: u64,
}

impl SimScenario {
    /// 10 sets of 100 packets of 1500 random bytes, EICAR in half the packets.
    pub fn eicar(seed: u64) -> Self {
        SimScenario {
            n_sets: 10,
            packets_per_set: 100,
            packet_len: 1500,
            inject_fraction: 0.5,
            inject_payload: crate::EICAR.to_vec(),
            seed,
            created_at: unix_now(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.inject_fraction) {
            return Err(Error::Config(format!(
                "inject fraction {} outside [0, 1]",
                self.inject_fraction
            )));
        }
        if self.packet_len < self.inject_payload.len() {
            return Err(Error::Config(format!(
                "packet length {} cannot hold a {}-byte payload",
                self.packet_len,
                self.inject_payload.len()
            )));
        }
        if self.packet_len == 0 || self.packet_len > MAX_PAYLOAD_LEN {
            return Err(Error::Config(format!(
                "packet length {} out of range",
                self.packet_len
            )));
        }
        if self.packets_per_set < 2 {
            return Err(Error::Config(
                "a packet set needs at least 2 packets".into(),
            ));
        }
        if self.n_sets > u16::MAX as usize {
            return Err(Error::Config("too many packet sets for one corpus".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedTraffic {
    pub corpus: Corpus,
    /// Per set, per packet: whether the payload was planted.
    pub injected: Vec<Vec<bool>>,
}

impl GeneratedTraffic {
    pub fn injected_count(&self) -> usize {
        self.injected.iter().flatten().filter(|&&b| b).count()
    }
}

/// Uniform random packets; each independently carries the payload at a
/// random offset with probability `inject_fraction`.
pub fn generate_corpus(scenario: &SimScenario) -> Result<GeneratedTraffic> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let payload = &scenario.inject_payload;
    let mut sets = Vec::with_capacity(scenario.n_sets);
    let mut injected = Vec::with_capacity(scenario.n_sets);
    for _ in 0..scenario.n_sets {
        let mut packets = Vec::with_capacity(scenario.packets_per_set);
        let mut flags = Vec::with_capacity(scenario.packets_per_set);
        for _ in 0..scenario.packets_per_set {
            let mut bytes = vec![0u8; scenario.packet_len];
            rng.fill_bytes(&mut bytes);
            let plant = rng.gen_bool(scenario.inject_fraction);
            if plant {
                let at = rng.gen_range(0..=scenario.packet_len - payload.len());
                bytes[at..at + payload.len()].copy_from_slice(payload);
            }
            packets.push(Packet::new(bytes)?);
            flags.push(plant);
        }
        sets.push(PacketSet::new(packets)?);
        injected.push(flags);
    }
    Ok(GeneratedTraffic {
        corpus: Corpus::new(sets, scenario.created_at),
        injected,
    })
}

/// Generates traffic and writes it as a CORP file.
pub fn gen_traffic(scenario: &SimScenario, out: &Path) -> Result<GeneratedTraffic> {
    let traffic = generate_corpus(scenario)?;
    fs::write(out, write_corpus(&traffic.corpus)?)?;
    Ok(traffic)
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub settings: Settings,
    pub clients: usize,
    pub timeout: Duration,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            settings: Settings {
                period: Duration::from_secs(1),
                ..Settings::default()
            },
            clients: 2,
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientOutcome {
    pub root: PathBuf,
    pub quarantine_dir: PathBuf,
    pub infected_quarantined: bool,
    pub clean_untouched: bool,
    pub quarantined_files: usize,
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub workdir: PathBuf,
    pub injected_packets: usize,
    pub suspects: usize,
    pub signatures: usize,
    /// Whether the scenario should produce a detection at all.
    pub expected_detection: bool,
    pub detected: bool,
    pub clients: Vec<ClientOutcome>,
    pub detection_to_quarantine: Option<Duration>,
    pub elapsed: Duration,
    pub timed_out: bool,
    /// `(stage, status)` in pipeline order.
    pub stages: Vec<(String, String)>,
}

impl SimReport {
    /// The run behaved as expected: either every client quarantined exactly
    /// its infected file, or nothing was detected when nothing should be.
    pub fn success(&self) -> bool {
        if self.timed_out || self.detected != self.expected_detection {
            return false;
        }
        if self.detected {
            self.clients
                .iter()
                .all(|c| c.infected_quarantined && c.clean_untouched && c.quarantined_files == 1)
        } else {
            self.clients
                .iter()
                .all(|c| !c.infected_quarantined && c.clean_untouched && c.quarantined_files == 0)
        }
    }

    pub fn stage_dump(&self) -> String {
        self.stages
            .iter()
            .map(|(stage, status)| format!("{stage:>12}: {status}\n"))
            .collect()
    }
}

const INFECTED_NAME: &str = "infected.bin";
const CLEAN_NAME: &str = "clean.bin";

struct ClientRig {
    root: PathBuf,
    qdir: PathBuf,
    clean: Vec<u8>,
}

impl ClientRig {
    fn infected_present(&self) -> bool {
        self.root.join(INFECTED_NAME).exists()
    }

    fn quarantined_files(&self) -> usize {
        fs::read_dir(&self.qdir)
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .filter(|e| !e.file_name().to_string_lossy().ends_with(".meta"))
                    .count()
            })
            .unwrap_or(0)
    }

    fn infected_in_quarantine(&self) -> bool {
        fs::read_dir(&self.qdir)
            .map(|rd| {
                rd.filter_map(|e| e.ok()).any(|e| {
                    let name = e.file_name().to_string_lossy().into_owned();
                    name.starts_with(INFECTED_NAME) && !name.ends_with(".meta")
                })
            })
            .unwrap_or(false)
    }

    fn outcome(&self) -> ClientOutcome {
        ClientOutcome {
            root: self.root.clone(),
            quarantine_dir: self.qdir.clone(),
            infected_quarantined: !self.infected_present() && self.infected_in_quarantine(),
            clean_untouched: fs::read(self.root.join(CLEAN_NAME)).is_ok_and(|b| b == self.clean),
            quarantined_files: self.quarantined_files(),
        }
    }
}

struct Detection {
    at: Instant,
    suspects: usize,
    signatures: usize,
    delivered: usize,
}

/// Runs the whole pipeline in `workdir` (created if missing, must be empty).
pub fn simulate(scenario: &SimScenario, workdir: &Path, options: &SimOptions) -> Result<SimReport> {
    scenario.validate()?;
    options.settings.validate()?;
    fs::create_dir_all(workdir)?;
    if fs::read_dir(workdir)?.next().is_some() {
        return Err(Error::Argument(format!(
            "{} is not empty",
            workdir.display()
        )));
    }
    let start = Instant::now();
    let deadline = start + options.timeout;
    let mut stages: Vec<(String, String)> = Vec::new();

    let traffic = gen_traffic(scenario, &workdir.join("input.corp"))?;
    stages.push((
        "traffic".into(),
        format!(
            "{} packets, {} injected",
            traffic.corpus.packet_count(),
            traffic.injected_count()
        ),
    ));

    let shutdown = Shutdown::new();
    let mut threads = Vec::new();

    // Thin clients, each with one infected and one clean file.
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x5eed_c11e_0000_0000);
    let mut rigs = Vec::new();
    let mut endpoints = Vec::new();
    for i in 0..options.clients {
        let base = workdir.join(format!("client-{i}"));
        let root = base.join("root");
        let qdir = base.join("quarantine");
        fs::create_dir_all(&root)?;
        fs::create_dir_all(&qdir)?;
        let mut infected = vec![0u8; 4096];
        rng.fill_bytes(&mut infected);
        let at =
            rng.gen_range(0..=infected.len() - scenario.inject_payload.len().min(infected.len()));
        let end = (at + scenario.inject_payload.len()).min(infected.len());
        infected[at..end].copy_from_slice(&scenario.inject_payload[..end - at]);
        let mut clean = vec![0u8; 4096];
        rng.fill_bytes(&mut clean);
        fs::write(root.join(INFECTED_NAME), &infected)?;
        fs::write(root.join(CLEAN_NAME), &clean)?;

        let client = ThinClient::bind(ClientConfig::new(
            "127.0.0.1:0",
            base.join("signatures.amp1"),
            root.clone(),
            qdir.clone(),
        ))?;
        endpoints.push(client.local_addr()?.to_string());
        let stop = shutdown.clone();
        threads.push(thread::spawn(move || {
            let _ = client.run(&stop, |_| {});
        }));
        rigs.push(ClientRig { root, qdir, clean });
    }

    // Honeypot: push receiver plus the periodic detector.
    let honeypot = workdir.join("honeypot");
    let spool = honeypot.join("spool");
    fs::create_dir_all(&spool)?;
    let server = PushServer::bind("127.0.0.1:0", &spool)?;
    let push_addr = server.local_addr()?;
    {
        let stop = shutdown.clone();
        threads.push(thread::spawn(move || {
            let _ = server.serve(&stop);
        }));
    }
    let service = ServiceConfig {
        spool,
        log: honeypot.join("suspects.log"),
        period: options.settings.period,
        extraction: options.settings.extraction,
        policy: options.settings.policy,
    };
    let (tx, rx) = mpsc::channel::<Detection>();
    {
        let stop = shutdown.clone();
        let mut broadcaster =
            Broadcaster::new(endpoints.clone(), options.settings.broadcast_options())
                .with_archive(honeypot.join("broadcasts"));
        threads.push(thread::spawn(move || {
            let mut sink = |report: &DetectionReport, sigs: &[Signature]| {
                let at = Instant::now();
                let delivered = if sigs.is_empty() {
                    0
                } else {
                    broadcaster.publish(sigs).map_or(0, |r| r.successes())
                };
                let _ = tx.send(Detection {
                    at,
                    suspects: report.suspects.len(),
                    signatures: sigs.len(),
                    delivered,
                });
            };
            let _ = run_service(&service, &mut sink, &stop);
        }));
    }

    let corpus_bytes = fs::read(workdir.join("input.corp"))?;
    let pushed = push_corpus(push_addr, &corpus_bytes);
    stages.push((
        "push".into(),
        match &pushed {
            Ok(reply) => format!("{reply:?}"),
            Err(err) => format!("failed: {err}"),
        },
    ));

    let expected_detection = scenario.inject_fraction > 0.0
        && scenario.inject_payload.len() >= options.settings.extraction.min_len;
    let mut report = SimReport {
        workdir: workdir.to_path_buf(),
        injected_packets: traffic.injected_count(),
        suspects: 0,
        signatures: 0,
        expected_detection,
        detected: false,
        clients: Vec::new(),
        detection_to_quarantine: None,
        elapsed: Duration::ZERO,
        timed_out: false,
        stages: Vec::new(),
    };

    let detection = match pushed {
        Ok(PushReply::Accepted) => rx
            .recv_timeout(deadline.saturating_duration_since(Instant::now()))
            .ok(),
        _ => None,
    };
    match &detection {
        None => {
            report.timed_out = true;
            stages.push((
                "detection".into(),
                "pending (no report before timeout)".into(),
            ));
        }
        Some(d) => {
            report.suspects = d.suspects;
            report.signatures = d.signatures;
            report.detected = d.signatures > 0;
            stages.push((
                "detection".into(),
                format!("{} suspects, {} signatures", d.suspects, d.signatures),
            ));
            if report.detected {
                stages.push((
                    "broadcast".into(),
                    format!("{}/{} endpoints acknowledged", d.delivered, endpoints.len()),
                ));
            } else {
                stages.push(("broadcast".into(), "skipped: no detection".into()));
            }
        }
    }

    if let Some(d) = detection.as_ref().filter(|d| d.signatures > 0) {
        let mut done = vec![None; rigs.len()];
        while Instant::now() < deadline && done.iter().any(Option::is_none) {
            for (slot, rig) in done.iter_mut().zip(&rigs) {
                if slot.is_none() && !rig.infected_present() && rig.infected_in_quarantine() {
                    *slot = Some(d.at.elapsed());
                }
            }
            thread::sleep(Duration::from_millis(10));
        }
        if done.iter().all(Option::is_some) {
            report.detection_to_quarantine = done.iter().flatten().max().copied();
        } else {
            report.timed_out = true;
        }
        for (i, slot) in done.iter().enumerate() {
            stages.push((
                format!("client-{i}"),
                match slot {
                    Some(t) => format!("quarantined after {:.3}s", t.as_secs_f64()),
                    None => "infected file not quarantined".into(),
                },
            ));
        }
    } else if detection.is_some() {
        // Give a stray broadcast no chance to go unnoticed.
        thread::sleep(Duration::from_millis(200));
        for i in 0..rigs.len() {
            stages.push((format!("client-{i}"), "idle".into()));
        }
    }

    shutdown.request();
    for handle in threads {
        let _ = handle.join();
    }
    report.clients = rigs.iter().map(ClientRig::outcome).collect();
    report.elapsed = start.elapsed();
    report.stages = stages;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_format::read_corpus;

    fn small(seed: u64, fraction: f64) -> SimScenario {
        SimScenario {
            n_sets: 2,
            packets_per_set: 10,
            packet_len: 200,
            inject_fraction: fraction,
            inject_payload: crate::EICAR.to_vec(),
            seed,
            created_at: 1_700_000_000,
        }
    }

    #[test]
    fn fixed_seed_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.corp"), dir.path().join("b.corp"));
        gen_traffic(&small(9, 0.0), &a).unwrap();
        gen_traffic(&small(9, 0.0), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        gen_traffic(&small(10, 0.0), &b).unwrap();
        assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(
            read_corpus(&fs::read(&a).unwrap()).unwrap().packet_count(),
            20
        );
    }

    #[test]
    fn full_injection_plants_everywhere() {
        let t = generate_corpus(&small(1, 1.0)).unwrap();
        assert_eq!(t.injected_count(), 20);
        for p in t.corpus.sets().iter().flat_map(|s| s.packets()) {
            assert!(p
                .payload()
                .windows(crate::EICAR.len())
                .any(|w| w == crate::EICAR));
        }
    }

    #[test]
    fn injection_flags_match_content() {
        let t = generate_corpus(&small(3, 0.5)).unwrap();
        for (set, flags) in t.corpus.sets().iter().zip(&t.injected) {
            for (p, &flag) in set.packets().iter().zip(flags) {
                let has = p
                    .payload()
                    .windows(crate::EICAR.len())
                    .any(|w| w == crate::EICAR);
                assert_eq!(has, flag);
            }
        }
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut s = small(1, 1.5);
        assert!(s.validate().is_err());
        s.inject_fraction = 0.5;
        s.packet_len = 10;
        assert!(s.validate().is_err());
    }

    #[test]
    fn non_empty_workdir_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x"), b"").unwrap();
        assert!(simulate(&small(1, 0.5), dir.path(), &SimOptions::default()).is_err());
    }
}
