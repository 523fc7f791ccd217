//! The canonical trace file format.
//!
//! Line-delimited JSON: line 1 is a header object
//! `{version, class_names, frame_width, frame_height}`, every following line
//! is one [`FrameTruth`] record. One frame per line keeps traces streamable
//! and appendable. Coordinates are real-valued pixels in
//! `[0, frame_width] x [0, frame_height]`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::types::{FrameBounds, FrameTruth};

pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub class_names: Vec<String>,
    pub frame_width: f64,
    pub frame_height: f64,
}

impl TraceHeader {
    pub fn new(class_names: Vec<String>, frame_width: f64, frame_height: f64) -> Self {
        TraceHeader { version: TRACE_VERSION, class_names, frame_width, frame_height }
    }

    pub fn bounds(&self) -> FrameBounds {
        FrameBounds::new(self.frame_width, self.frame_height)
    }

    pub fn n_classes(&self) -> u32 {
        self.class_names.len() as u32
    }
}

/// A header plus its frames, in increasing `frame_index` order.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub frames: Vec<FrameTruth>,
}

impl Trace {
    pub fn load(path: impl AsRef<Path>) -> Result<Trace, Error> {
        load_trace(path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), Error> {
        save_trace(self, path)
    }

    pub fn bounds(&self) -> FrameBounds {
        self.header.bounds()
    }

    /// Check every type invariant the format promises: positive box sizes,
    /// unique identities within a frame, stable labels across frames, and
    /// strictly increasing frame indices.
    pub fn validate(&self) -> Result<(), Error> {
        let mut labels: HashMap<u64, u32> = HashMap::new();
        let mut prev_index: Option<u64> = None;
        for frame in &self.frames {
            if let Some(prev) = prev_index {
                if frame.frame_index <= prev {
                    return Err(Error::config(format!(
                        "frame_index {} not greater than previous {}",
                        frame.frame_index, prev
                    )));
                }
            }
            prev_index = Some(frame.frame_index);
            let mut seen = std::collections::HashSet::new();
            for obj in &frame.objects {
                if !obj.bbox.is_valid() {
                    return Err(Error::config(format!(
                        "frame {}: object {} has degenerate bbox",
                        frame.frame_index, obj.identity
                    )));
                }
                if !seen.insert(obj.identity) {
                    return Err(Error::config(format!(
                        "frame {}: duplicate identity {}",
                        frame.frame_index, obj.identity
                    )));
                }
                match labels.entry(obj.identity) {
                    std::collections::hash_map::Entry::Occupied(e) => {
                        if *e.get() != obj.label {
                            return Err(Error::config(format!(
                                "identity {} changes label {} -> {}",
                                obj.identity,
                                e.get(),
                                obj.label
                            )));
                        }
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(obj.label);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Turn a serde_json message like ``missing field `bbox` at line 1 column 40``
/// into plain `missing field bbox`.
fn clean_json_message(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    let msg = match msg.find(" at line ") {
        Some(pos) => &msg[..pos],
        None => &msg,
    };
    msg.replace('`', "")
}

/// Load a trace. Malformed lines report their 1-based line number; frames
/// must appear in strictly increasing `frame_index` order.
pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace, Error> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let header: TraceHeader = match lines.next() {
        None => {
            // An empty file is a trace with no frames and an empty header.
            return Ok(Trace {
                header: TraceHeader::new(Vec::new(), 0.0, 0.0),
                frames: Vec::new(),
            });
        }
        Some((_, line)) => {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&line)
                .map_err(|e| Error::Parse { line: 1, message: clean_json_message(&e) })?
        }
    };

    let mut frames: Vec<FrameTruth> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: FrameTruth = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: line_no, message: clean_json_message(&e) })?;
        if let Some(prev) = frames.last() {
            if frame.frame_index <= prev.frame_index {
                return Err(Error::Ordering {
                    line: line_no,
                    prev: prev.frame_index,
                    found: frame.frame_index,
                });
            }
        }
        frames.push(frame);
    }

    Ok(Trace { header, frames })
}

/// Save a trace. Frames must already be in increasing order; numeric fields
/// round-trip bit-exactly through the JSON encoding.
pub fn save_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    for pair in trace.frames.windows(2) {
        if pair[1].frame_index <= pair[0].frame_index {
            return Err(Error::config(format!(
                "frames out of order: {} then {}",
                pair[0].frame_index, pair[1].frame_index
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let mut write_line = |value: String| -> Result<(), Error> {
        writer.write_all(value.as_bytes()).map_err(|e| Error::io(path, e))?;
        writer.write_all(b"\n").map_err(|e| Error::io(path, e))
    };
    write_line(serde_json::to_string(&trace.header).expect("header serializes"))?;
    for frame in &trace.frames {
        write_line(serde_json::to_string(frame).expect("frame serializes"))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BBox, TruthObject};

    fn frame(index: u64, n: usize) -> FrameTruth {
        FrameTruth {
            frame_index: index,
            objects: (0..n)
                .map(|i| TruthObject {
                    identity: i as u64,
                    label: (i % 3) as u32,
                    bbox: BBox::new(100.0 + 10.0 * i as f64, 50.0, 20.0, 30.0),
                })
                .collect(),
            camera_shift: [0.5, -0.25],
        }
    }

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("edgefuse-trace-{}-{}", std::process::id(), name));
        p
    }

    #[test]
    fn round_trip_is_identity() {
        let trace = Trace {
            header: TraceHeader::new(vec!["car".into(), "person".into(), "van".into()], 1280.0, 720.0),
            frames: (0..100).map(|f| frame(f, (f % 5) as usize)).collect(),
        };
        let path = tmp("roundtrip.jsonl");
        save_trace(&trace, &path).unwrap();
        let loaded = load_trace(&path).unwrap();
        assert_eq!(trace, loaded);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn three_lines_load_in_order() {
        let trace = Trace {
            header: TraceHeader::new(vec!["car".into()], 640.0, 480.0),
            frames: vec![frame(0, 1), frame(1, 2), frame(2, 0)],
        };
        let path = tmp("three.jsonl");
        save_trace(&trace, &path).unwrap();
        let loaded = load_trace(&path).unwrap();
        assert_eq!(loaded.frames.len(), 3);
        assert!(loaded.frames.windows(2).all(|w| w[0].frame_index < w[1].frame_index));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn empty_file_is_empty_trace() {
        let path = tmp("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let loaded = load_trace(&path).unwrap();
        assert!(loaded.frames.is_empty());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_bbox_reports_line_number() {
        let path = tmp("malformed.jsonl");
        let header = r#"{"version":1,"class_names":["car"],"frame_width":640.0,"frame_height":480.0}"#;
        let bad = r#"{"frame_index":0,"objects":[{"identity":0,"label":0}],"camera_shift":[0.0,0.0]}"#;
        std::fs::write(&path, format!("{header}\n{bad}\n")).unwrap();
        let err = load_trace(&path).unwrap_err();
        assert_eq!(err.to_string(), "line 2: missing field bbox");
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn non_monotone_frames_rejected_on_load() {
        let path = tmp("order.jsonl");
        let header = r#"{"version":1,"class_names":[],"frame_width":640.0,"frame_height":480.0}"#;
        let f2 = r#"{"frame_index":2,"objects":[],"camera_shift":[0.0,0.0]}"#;
        let f1 = r#"{"frame_index":1,"objects":[],"camera_shift":[0.0,0.0]}"#;
        std::fs::write(&path, format!("{header}\n{f2}\n{f1}\n")).unwrap();
        let err = load_trace(&path).unwrap_err();
        assert!(matches!(err, Error::Ordering { line: 3, prev: 2, found: 1 }));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn out_of_order_frames_rejected_on_save() {
        let trace = Trace {
            header: TraceHeader::new(vec![], 640.0, 480.0),
            frames: vec![frame(5, 0), frame(3, 0)],
        };
        assert!(save_trace(&trace, tmp("bad-order.jsonl")).is_err());
    }

    #[test]
    fn frame_with_zero_objects_round_trips() {
        let trace = Trace {
            header: TraceHeader::new(vec!["car".into()], 640.0, 480.0),
            frames: vec![frame(0, 0)],
        };
        let path = tmp("zero-objects.jsonl");
        save_trace(&trace, &path).unwrap();
        let loaded = load_trace(&path).unwrap();
        assert_eq!(loaded.frames[0].objects.len(), 0);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn validate_catches_label_flips() {
        let mut trace = Trace {
            header: TraceHeader::new(vec!["a".into(), "b".into(), "c".into()], 640.0, 480.0),
            frames: vec![frame(0, 2), frame(1, 2)],
        };
        trace.validate().unwrap();
        trace.frames[1].objects[0].label = 2;
        assert!(trace.validate().is_err());
    }
}
