//! Broadcasts one signature to a local thin client and waits for it to
//! quarantine the matching file.
use std::fs;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use honeycure::detector::Signature;
use honeycure::distribution::{broadcast_signatures, BroadcastOptions, ClientConfig, ThinClient};
use honeycure::Shutdown;

fn main() -> honeycure::Result<()> {
    let dir = std::env::temp_dir().join(format!("honeycure-distribute-{}", std::process::id()));
    let (root, qdir) = (dir.join("root"), dir.join("quarantine"));
    fs::create_dir_all(&root)?;
    fs::create_dir_all(&qdir)?;
    fs::write(root.join("eicar.com"), honeycure::EICAR)?;
    fs::write(root.join("notes.txt"), "harmless")?;

    let client = ThinClient::bind(ClientConfig::new(
        "127.0.0.1:0",
        dir.join("db.amp1"),
        root,
        qdir.clone(),
    ))?;
    let addr = client.local_addr()?.to_string();
    let shutdown = Shutdown::new();
    let stop = shutdown.clone();
    let (tx, rx) = mpsc::channel();
    let worker = thread::spawn(move || {
        client.run(&stop, move |c| {
            let _ = tx.send(c.clone());
        })
    });

    let sig = Signature::from_parts(honeycure::EICAR, 0, honeycure::model::unix_now());
    let delivery = broadcast_signatures(
        &[sig],
        std::slice::from_ref(&addr),
        &BroadcastOptions::default(),
    )?;
    println!("{addr}: {} acknowledged", delivery.successes());
    if let Ok(cycle) = rx.recv_timeout(Duration::from_secs(5)) {
        for q in cycle.quarantined {
            println!(
                "quarantined {} -> {}",
                q.original.display(),
                q.quarantined.display()
            );
            print!("{}", fs::read_to_string(&q.sidecar)?);
        }
    }
    shutdown.request();
    let _ = worker.join();
    fs::remove_dir_all(&dir)?;
    Ok(())
}
