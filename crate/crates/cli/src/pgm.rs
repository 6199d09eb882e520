//! Semantic-map snapshots as portable graymap (PGM) images.
//!
//! One binary `P5` file per channel — `explored`, `obstacles`, and one per
//! tracked class — plus a JSON manifest mapping each image file to its
//! channel. Set cells are white (255), unset black (0), rows run north to
//! south, so any image viewer doubles as a map debugger and golden-file
//! tests can compare bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use homeworld_core::grid::{Cell, Plane};
use homeworld_core::semmap::SemanticMap;
use serde::Serialize;

/// Manifest written next to the images.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    width: usize,
    height: usize,
    /// Image file name → channel name (`explored`, `obstacles`, or class).
    channels: BTreeMap<String, &'a str>,
}

/// Render one bit plane as a binary PGM.
fn plane_pgm(plane: &Plane, width: usize, height: usize) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.reserve(width * height);
    for y in 0..height as i32 {
        for x in 0..width as i32 {
            out.push(if plane.get(&Cell::new(x, y)) { 255 } else { 0 });
        }
    }
    out
}

/// Export every channel of `map` into `dir` as `{stem}-<channel>.pgm`
/// (class channels are numbered `{stem}-c00.pgm`, ... in tracked order)
/// plus `{stem}-manifest.json`. Returns the written paths, manifest first.
pub fn export_map(map: &SemanticMap, dir: &Path, stem: &str) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let (w, h) = (map.width(), map.height());

    let mut images: Vec<(String, &str, &Plane)> = vec![
        (format!("{stem}-explored.pgm"), "explored", &map.explored),
        (format!("{stem}-obstacles.pgm"), "obstacles", &map.obstacles),
    ];
    for (i, class) in map.tracked().iter().enumerate() {
        let plane = map.plane(class).expect("tracked class has a plane");
        images.push((format!("{stem}-c{i:02}.pgm"), class.as_str(), plane));
    }

    let manifest = Manifest {
        width: w,
        height: h,
        channels: images.iter().map(|(file, name, _)| (file.clone(), *name)).collect(),
    };
    let manifest_path = dir.join(format!("{stem}-manifest.json"));
    let mut manifest_text =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization is total");
    manifest_text.push('\n');
    fs::write(&manifest_path, manifest_text)?;

    let mut written = vec![manifest_path];
    for (file, _, plane) in &images {
        let path = dir.join(file);
        fs::write(&path, plane_pgm(plane, w, h))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map() -> SemanticMap {
        let mut map = SemanticMap::new(3, 2, vec!["Mug".into(), "Desk".into()]);
        map.explored.set(&Cell::new(0, 0));
        map.explored.set(&Cell::new(1, 0));
        map.obstacles.set(&Cell::new(1, 0));
        map.mark("Mug", &Cell::new(2, 1));
        map
    }

    #[test]
    fn pgm_bytes_are_golden() {
        let map = sample_map();
        let pgm = plane_pgm(&map.explored, 3, 2);
        // Header, then row 0 (two explored cells, one dark), then row 1.
        let mut expected = b"P5\n3 2\n255\n".to_vec();
        expected.extend([255, 255, 0, 0, 0, 0]);
        assert_eq!(pgm, expected);
    }

    #[test]
    fn export_writes_every_channel_and_a_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let map = sample_map();
        let written = export_map(&map, dir.path(), "snap").unwrap();
        // Manifest + explored + obstacles + two class channels.
        assert_eq!(written.len(), 5);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&written[0]).unwrap()).unwrap();
        assert_eq!(manifest["width"], 3);
        // Channels are sorted in the map, so Desk is c00 and Mug is c01.
        assert_eq!(manifest["channels"]["snap-c00.pgm"], "Desk");
        assert_eq!(manifest["channels"]["snap-c01.pgm"], "Mug");
        let mug = fs::read(dir.path().join("snap-c01.pgm")).unwrap();
        let header = b"P5\n3 2\n255\n".len();
        assert_eq!(&mug[header..], &[0, 0, 0, 0, 0, 255]);
    }

    #[test]
    fn export_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let map = sample_map();
        let first = export_map(&map, &dir.path().join("a"), "snap").unwrap();
        let second = export_map(&map, &dir.path().join("b"), "snap").unwrap();
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
        }
    }
}
