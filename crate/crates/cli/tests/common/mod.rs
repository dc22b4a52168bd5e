#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use annofix::format::write_annotations;
use annofix::imaging::{write_pgm, FrameSource};
use annofix::synthetic::{static_scene, Scene, SceneSpec};
use annofix::AnnotationTrack;

pub fn annofix(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annofix"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .expect("run annofix")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn write_labels(path: &Path, track: &AnnotationTrack) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, write_annotations(track)).unwrap();
}

/// Writes `<root>/<id>/frames/000001.pgm...` and `<root>/<id>/label.json`.
pub fn write_video(root: &Path, id: &str, frames: &dyn FrameSource, track: &AnnotationTrack) -> PathBuf {
    let dir = root.join(id);
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).unwrap();
    for t in 0..frames.frame_count() {
        write_pgm(&frames_dir.join(format!("{:06}.pgm", t + 1)), &frames.frame(t).unwrap()).unwrap();
    }
    write_labels(&dir.join("label.json"), track);
    dir
}

/// Synthetic scene with its labels renamed to `id`.
pub fn scene(id: &str, frames: usize, seed: u64) -> Scene {
    let mut s = static_scene(&SceneSpec {
        frames,
        seed,
        ..Default::default()
    })
    .unwrap();
    s.truth = AnnotationTrack::new(id, s.truth.fps(), s.truth.labels().to_vec()).unwrap();
    s
}

/// `n` clean synthetic videos `v00, v01, ...`.
pub fn dataset(root: &Path, n: usize, frames: usize) -> Vec<Scene> {
    (0..n)
        .map(|i| {
            let id = format!("v{i:02}");
            let s = scene(&id, frames, i as u64);
            write_video(root, &id, &s.video, &s.truth);
            s
        })
        .collect()
}

/// Relative paths and contents of every file below `root`, sorted.
pub fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
