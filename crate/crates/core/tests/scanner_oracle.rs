mod common;

use std::fs;
use std::path::PathBuf;

use honeycure::detector::Signature;
use honeycure::distribution::Scanner;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn signatures(rng: &mut ChaCha8Rng) -> Vec<Signature> {
    let mut sigs: Vec<Signature> = (0..6)
        .map(|_| {
            let mut b = vec![0u8; rng.gen_range(4..80)];
            rng.fill_bytes(&mut b);
            Signature::from_parts(&b, 0, 0)
        })
        .collect();
    sigs.push(Signature::from_parts(honeycure::EICAR, 0, 0));
    sigs
}

#[test]
fn scan_path_agrees_with_whole_file_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let sigs = signatures(&mut rng);
    let dir = tempfile::tempdir().unwrap();
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    for i in 0..30 {
        let mut data = vec![0u8; rng.gen_range(0..300_000)];
        rng.fill_bytes(&mut data);
        for _ in 0..rng.gen_range(0..4) {
            let sig = &sigs[rng.gen_range(0..sigs.len())];
            if sig.bytes().len() <= data.len() {
                let at = rng.gen_range(0..=data.len() - sig.bytes().len());
                data[at..at + sig.bytes().len()].copy_from_slice(sig.bytes());
            }
        }
        let sub = dir.path().join(format!("d{}", i % 4));
        fs::create_dir_all(&sub).unwrap();
        let path = sub.join(format!("f{i:02}.bin"));
        fs::write(&path, &data).unwrap();
        files.push((path, data));
    }
    files.sort();

    let mut want = Vec::new();
    for (path, data) in &files {
        let mut per_file: Vec<(Vec<u8>, u64)> = sigs
            .iter()
            .filter_map(|s| common::find(data, s.bytes()).map(|at| (s.bytes().to_vec(), at as u64)))
            .collect();
        per_file.sort();
        want.extend(per_file.into_iter().map(|(b, at)| (path.clone(), b, at)));
    }

    for chunk in [13usize, 4096, 65_536] {
        let scanner = Scanner::new(sigs.clone()).unwrap().with_chunk_size(chunk);
        let got: Vec<(PathBuf, Vec<u8>, u64)> = scanner
            .scan_path(dir.path())
            .unwrap()
            .into_iter()
            .map(|m| (m.file, m.signature.bytes().to_vec(), m.offset))
            .collect();
        assert_eq!(got, want, "chunk size {chunk}");
    }
}

#[test]
fn signature_split_across_every_boundary_position() {
    let chunk = 128;
    let needle = honeycure::EICAR;
    for at in (chunk - needle.len())..=(2 * chunk) {
        let mut data = vec![b'-'; 4 * chunk];
        data[at..at + needle.len()].copy_from_slice(needle);
        let scanner = Scanner::new(vec![Signature::from_parts(needle, 0, 0)])
            .unwrap()
            .with_chunk_size(chunk);
        assert_eq!(
            scanner.scan_reader(&data[..]).unwrap(),
            vec![Some(at as u64)]
        );
    }
}
