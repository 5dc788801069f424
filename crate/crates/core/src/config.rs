//! Line-oriented `key=value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored; unknown keys are an
//! error. Paths are used as written (relative paths resolve against the
//! working directory).
//!
//! ```text
//! # detector
//! k_min=20
//! k_max=none
//! pairing=adjacent-disjoint
//! tau=0.3
//! c=3.0
//! min_population=10
//! period_seconds=3600
//! spool_dir=spool
//! log_path=suspects.log
//! bloom_m=10000
//! bloom_k=4
//! hash_q=257
//! push_listen=127.0.0.1:7401
//! endpoints=10.0.0.5:7402,10.0.0.6:7402
//! # thin client
//! client_listen=0.0.0.0:7402
//! db_path=signatures.amp1
//! scan_root=/home
//! quarantine_dir=quarantine
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::detector::ServiceConfig;
use crate::distribution::{BroadcastOptions, ClientConfig, DEFAULT_CHUNK_SIZE};
use crate::error::{Error, Result};
use crate::extract::ExtractionConfig;
use crate::stats::FilterPolicy;

#[derive(Debug, Clone)]
pub struct Settings {
    pub extraction: ExtractionConfig,
    pub policy: FilterPolicy,
    pub period: Duration,
    pub spool_dir: PathBuf,
    pub log_path: PathBuf,
    pub push_listen: String,
    pub endpoints: Vec<String>,
    pub subnet_broadcast: bool,
    pub ack_timeout: Duration,
    pub client_listen: String,
    pub db_path: PathBuf,
    pub scan_root: PathBuf,
    pub quarantine_dir: PathBuf,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            extraction: ExtractionConfig::default(),
            policy: FilterPolicy::default(),
            period: Duration::from_secs(3600),
            spool_dir: "spool".into(),
            log_path: "suspects.log".into(),
            push_listen: "127.0.0.1:7401".into(),
            endpoints: Vec::new(),
            subnet_broadcast: false,
            ack_timeout: BroadcastOptions::default().ack_timeout,
            client_listen: "0.0.0.0:7402".into(),
            db_path: "signatures.amp1".into(),
            scan_root: ".".into(),
            quarantine_dir: "quarantine".into(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "k_min" => s.extraction.min_len = parse(key, value)?,
                "k_max" => {
                    s.extraction.max_len = match value {
                        "" | "none" => None,
                        v => Some(parse(key, v)?),
                    }
                }
                "pairing" => s.extraction.pairing = value.parse()?,
                "tau" => s.policy.tau = parse(key, value)?,
                "c" => s.policy.c = parse(key, value)?,
                "min_population" => s.policy.min_population = parse(key, value)?,
                "period_seconds" => s.period = Duration::from_secs(parse(key, value)?),
                "spool_dir" => s.spool_dir = value.into(),
                "log_path" => s.log_path = value.into(),
                "bloom_m" => s.extraction.bloom.m = parse(key, value)?,
                "bloom_k" => s.extraction.bloom.k = parse(key, value)?,
                "hash_q" => s.extraction.hash_base = parse(key, value)?,
                "push_listen" => s.push_listen = value.into(),
                "endpoints" => {
                    s.endpoints = value
                        .split(',')
                        .map(str::trim)
                        .filter(|e| !e.is_empty())
                        .map(String::from)
                        .collect()
                }
                "subnet_broadcast" => s.subnet_broadcast = parse(key, value)?,
                "ack_timeout_ms" => s.ack_timeout = Duration::from_millis(parse(key, value)?),
                "client_listen" => s.client_listen = value.into(),
                "db_path" => s.db_path = value.into(),
                "scan_root" => s.scan_root = value.into(),
                "quarantine_dir" => s.quarantine_dir = value.into(),
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.extraction.validate()?;
        self.policy.validate()?;
        if self.period < Duration::from_secs(1) {
            return Err(Error::Config("period_seconds must be >= 1".into()));
        }
        Ok(())
    }

    /// Renders the settings back into the file format.
    pub fn to_config_string(&self) -> String {
        let e = &self.extraction;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("k_min", &e.min_len);
        kv(
            "k_max",
            &e.max_len.map_or("none".to_string(), |m| m.to_string()),
        );
        kv("pairing", &e.pairing.as_str());
        kv("tau", &self.policy.tau);
        kv("c", &self.policy.c);
        kv("min_population", &self.policy.min_population);
        kv("period_seconds", &self.period.as_secs());
        kv("spool_dir", &self.spool_dir.display());
        kv("log_path", &self.log_path.display());
        kv("bloom_m", &e.bloom.m);
        kv("bloom_k", &e.bloom.k);
        kv("hash_q", &e.hash_base);
        kv("push_listen", &self.push_listen);
        kv("endpoints", &self.endpoints.join(","));
        kv("subnet_broadcast", &self.subnet_broadcast);
        kv("ack_timeout_ms", &self.ack_timeout.as_millis());
        kv("client_listen", &self.client_listen);
        kv("db_path", &self.db_path.display());
        kv("scan_root", &self.scan_root.display());
        kv("quarantine_dir", &self.quarantine_dir.display());
        out
    }

    pub fn service_config(&self) -> ServiceConfig {
        ServiceConfig {
            spool: self.spool_dir.clone(),
            log: self.log_path.clone(),
            period: self.period,
            extraction: self.extraction,
            policy: self.policy,
        }
    }

    pub fn broadcast_options(&self) -> BroadcastOptions {
        BroadcastOptions {
            ack_timeout: self.ack_timeout,
            subnet_broadcast: self.subnet_broadcast,
        }
    }

    pub fn client_config(&self) -> ClientConfig {
        ClientConfig {
            listen: self.client_listen.clone(),
            db_path: self.db_path.clone(),
            scan_root: self.scan_root.clone(),
            quarantine_dir: self.quarantine_dir.clone(),
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::Pairing;

    #[test]
    fn empty_file_gives_defaults() {
        let s = Settings::parse("").unwrap();
        assert_eq!(s.extraction, ExtractionConfig::default());
        assert_eq!(s.policy, FilterPolicy::default());
        assert_eq!(s.period, Duration::from_secs(3600));
    }

    #[test]
    fn all_detector_keys_parse() {
        let s = Settings::parse(
            "# comment\n\
             k_min = 24\nk_max=64\npairing=all-pairs\ntau=0.25\nc=2.5\nmin_population=20\n\
             period_seconds=5\nspool_dir=/var/spool/corp\nlog_path=/var/log/suspects\n\
             bloom_m=20000\nbloom_k=6\nhash_q=263\nendpoints=127.0.0.1:1, 127.0.0.1:2\n",
        )
        .unwrap();
        assert_eq!(s.extraction.min_len, 24);
        assert_eq!(s.extraction.max_len, Some(64));
        assert_eq!(s.extraction.pairing, Pairing::AllPairs);
        assert_eq!(s.policy.tau, 0.25);
        assert_eq!(s.policy.c, 2.5);
        assert_eq!(s.policy.min_population, 20);
        assert_eq!(s.period, Duration::from_secs(5));
        assert_eq!(s.spool_dir, PathBuf::from("/var/spool/corp"));
        assert_eq!(s.extraction.bloom.m, 20_000);
        assert_eq!(s.extraction.bloom.k, 6);
        assert_eq!(s.extraction.hash_base, 263);
        assert_eq!(s.endpoints, ["127.0.0.1:1", "127.0.0.1:2"]);
    }

    #[test]
    fn rendering_round_trips() {
        let mut s = Settings::default();
        s.extraction.max_len = Some(99);
        s.endpoints = vec!["a:1".into(), "b:2".into()];
        let again = Settings::parse(&s.to_config_string()).unwrap();
        assert_eq!(again.to_config_string(), s.to_config_string());
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(Settings::parse("nonsense").is_err());
        assert!(Settings::parse("colour=blue").is_err());
        assert!(Settings::parse("k_min=abc").is_err());
        assert!(Settings::parse("tau=0").is_err());
        assert!(Settings::parse("period_seconds=0").is_err());
        assert!(Settings::parse("k_min=30\nk_max=20").is_err());
        assert!(Settings::parse("pairing=sliding").is_err());
    }
}
