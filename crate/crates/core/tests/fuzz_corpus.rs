//! Replays the checked-in fuzz corpus through the decoders with the same
//! assertions as the fuzz targets, so the seeds stay meaningful on stable.

use std::path::PathBuf;

use compresslab::julia::{parse_pgm, Bounds};
use compresslab::report::{parse_config, parse_tolerances};
use compresslab::sim::{decode_snapshot, encode_snapshot};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> Option<&str> {
    std::str::from_utf8(bytes).ok()
}

#[test]
fn snapshot_seeds() {
    let mut decoded = 0;
    for (name, bytes) in seeds("decode_snapshot") {
        if let Ok(chain) = decode_snapshot(&bytes) {
            assert_eq!(encode_snapshot(&chain), bytes, "{name}");
            decoded += 1;
        }
    }
    assert!(decoded >= 3);
}

#[test]
fn config_seeds() {
    for (name, bytes) in seeds("parse_config") {
        let Some(s) = text(&bytes) else { continue };
        let parsed = parse_config(s);
        assert_eq!(parsed.is_ok(), !name.contains("unknown"), "{name}");
    }
}

#[test]
fn tolerance_seeds() {
    for (name, bytes) in seeds("parse_tolerances") {
        let Some(s) = text(&bytes) else { continue };
        match parse_tolerances(s) {
            Ok(t) => assert!(t.validate().is_ok(), "{name}"),
            Err(_) => assert_eq!(name, "negative"),
        }
    }
}

#[test]
fn pgm_seeds() {
    for (name, bytes) in seeds("parse_pgm") {
        let Some(s) = text(&bytes) else { continue };
        if let Ok(g) = parse_pgm(s) {
            assert_eq!(g.pixels.len(), g.width * g.height, "{name}");
            assert!(g.pixels.iter().all(|&p| p <= g.maxval), "{name}");
        } else {
            assert_eq!(name, "binary_magic");
        }
    }
}

#[test]
fn bounds_seeds() {
    for (name, bytes) in seeds("parse_bounds") {
        let Some(s) = text(&bytes) else { continue };
        if let Ok(b) = s.parse::<Bounds>() {
            assert_eq!(b.to_string().parse::<Bounds>().unwrap(), b, "{name}");
        } else {
            assert_eq!(name, "degenerate");
        }
    }
}
