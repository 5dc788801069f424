use std::path::PathBuf;
use std::time::Duration;

use log::{error, info, warn};

use super::{
    append_suspects, generate_signatures, receive_corpus, run_detection, DetectionReport, Signature,
};
use crate::error::{Error, Result};
use crate::extract::ExtractionConfig;
use crate::shutdown::Shutdown;
use crate::stats::FilterPolicy;

pub const DEFAULT_PERIOD: Duration = Duration::from_secs(3600);

/// Receives each finished detection and the signatures generated from it.
pub trait DetectionSink {
    fn deliver(&mut self, report: &DetectionReport, signatures: &[Signature]);
}

impl<F> DetectionSink for F
where
    F: FnMut(&DetectionReport, &[Signature]),
{
    fn deliver(&mut self, report: &DetectionReport, signatures: &[Signature]) {
        self(report, signatures)
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub spool: PathBuf,
    pub log: PathBuf,
    pub period: Duration,
    pub extraction: ExtractionConfig,
    pub policy: FilterPolicy,
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.period < Duration::from_secs(1) {
            return Err(Error::Config(
                "service period must be at least 1 second".into(),
            ));
        }
        self.extraction.validate()?;
        self.policy.validate()
    }
}

/// Drains the spool once. Returns the number of corpora analysed.
///
/// A failure on one corpus is logged and does not stop the drain.
pub fn run_cycle(
    config: &ServiceConfig,
    sink: &mut dyn DetectionSink,
    shutdown: &Shutdown,
) -> Result<usize> {
    let mut processed = 0;
    while !shutdown.is_requested() {
        let Some(spooled) = receive_corpus(&config.spool)? else {
            break;
        };
        let mut report = match run_detection(&spooled.corpus, &config.extraction, &config.policy) {
            Ok(report) => report,
            Err(err) => {
                error!("detection failed for {}: {err}", spooled.id);
                continue;
            }
        };
        report.corpus_id = spooled.id;
        if let Err(err) = append_suspects(&report, &config.log) {
            // The report still goes to the sink; the log can be rebuilt from it.
            error!("could not append to {}: {err}", config.log.display());
        }
        let signatures = generate_signatures(&report);
        info!(
            "corpus {}: {} suspects, {} signatures",
            report.corpus_id,
            report.suspects.len(),
            signatures.len()
        );
        sink.deliver(&report, &signatures);
        processed += 1;
    }
    Ok(processed)
}

/// Runs detection cycles every `config.period` until shutdown.
pub fn run_service(
    config: &ServiceConfig,
    sink: &mut dyn DetectionSink,
    shutdown: &Shutdown,
) -> Result<()> {
    config.validate()?;
    loop {
        if let Err(err) = run_cycle(config, sink, shutdown) {
            warn!("detection cycle failed: {err}");
        }
        if !shutdown.wait(config.period) {
            return Ok(());
        }
    }
}
