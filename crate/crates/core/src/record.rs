//! JSON Lines interchange format: one [`Frame`] per line.
//!
//! ```text
//! {"meta":{...}}                                   optional first line
//! {"timestamp":0.1,"ego":{"x":0,"y":0,"yaw":0},"detections":[
//!   {"box":[x,y,z,w,l,h,yaw],"score":0.9,"class":"car",
//!    "motion":{"model":"unicycle","v":10,"omega":0.5},"track_id":3}]}
//! ```
//!
//! Floats are written in shortest round-trip form, so
//! `parse(serialize(frame)) == frame` holds bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fusion::{Detection, Frame, FusionTally};
use crate::geometry::{check_finite, Box3D, EgoPose};
use crate::motion::MotionParams;

#[derive(Serialize, Deserialize)]
pub(crate) struct RawDetection {
    #[serde(rename = "box")]
    bbox: Box3D,
    score: f64,
    class: String,
    motion: MotionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    lag: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_fused: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_current: Option<u32>,
    // written for readers of fused output; recomputed from the tally on input
    #[serde(default, skip_serializing_if = "Option::is_none")]
    history_only: Option<bool>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl TryFrom<RawDetection> for Detection {
    type Error = Error;

    fn try_from(r: RawDetection) -> Result<Self> {
        let tally = match (r.n_fused, r.n_current) {
            (Some(members), Some(current_members)) if current_members <= members => Some(FusionTally {
                members,
                current_members,
            }),
            (None, None) => None,
            _ => return Err(Error::invalid("n_fused", "needs n_current not exceeding it")),
        };
        let det = Detection {
            bbox: r.bbox,
            score: r.score,
            class: r.class,
            motion: r.motion,
            weight: r.weight,
            lag: r.lag,
            track_id: r.track_id,
            tally,
        };
        det.validate()?;
        Ok(det)
    }
}

impl From<Detection> for RawDetection {
    fn from(d: Detection) -> Self {
        let history_only = d.tally.map(|t| t.current_members == 0);
        RawDetection {
            bbox: d.bbox,
            score: d.score,
            class: d.class,
            motion: d.motion,
            track_id: d.track_id,
            weight: d.weight,
            lag: d.lag,
            n_fused: d.tally.map(|t| t.members),
            n_current: d.tally.map(|t| t.current_members),
            history_only,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RawFrame {
    timestamp: f64,
    #[serde(default)]
    ego: EgoPose,
    #[serde(default)]
    detections: Vec<Detection>,
}

impl TryFrom<RawFrame> for Frame {
    type Error = Error;

    fn try_from(r: RawFrame) -> Result<Self> {
        check_finite(r.timestamp, "timestamp")?;
        Ok(Frame::new(r.timestamp, r.ego, r.detections))
    }
}

impl From<Frame> for RawFrame {
    fn from(f: Frame) -> Self {
        RawFrame {
            timestamp: f.timestamp,
            ego: f.ego,
            detections: f.detections,
        }
    }
}

/// Streaming reader. Blank lines are skipped; a leading `{"meta": ...}` line
/// is kept aside and exposed through [`FrameReader::meta`].
pub struct FrameReader<R> {
    lines: Lines<R>,
    line: usize,
    meta: Option<Value>,
    pending: Option<Result<Frame>>,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(reader: R) -> Self {
        let mut this = Self {
            lines: reader.lines(),
            line: 0,
            meta: None,
            pending: None,
        };
        this.read_header();
        this
    }

    fn next_nonblank(&mut self) -> Option<std::io::Result<String>> {
        loop {
            let line = self.lines.next()?;
            self.line += 1;
            match line {
                Ok(s) if s.trim().is_empty() => continue,
                other => return Some(other),
            }
        }
    }

    fn read_header(&mut self) {
        let Some(first) = self.next_nonblank() else { return };
        let text = match first {
            Ok(t) => t,
            Err(e) => {
                self.pending = Some(Err(e.into()));
                return;
            }
        };
        let line = self.line;
        let parsed = serde_json::from_str::<Value>(&text).and_then(|mut v| {
            let is_header = v.as_object().is_some_and(|o| o.len() == 1 && o.contains_key("meta"));
            if is_header {
                self.meta = Some(v["meta"].take());
                Ok(None)
            } else {
                serde_json::from_value::<Frame>(v).map(Some)
            }
        });
        self.pending = match parsed {
            Ok(None) => None,
            Ok(Some(frame)) => Some(Ok(frame)),
            Err(source) => Some(Err(Error::Parse { line, source })),
        };
    }

    /// Metadata object from the header line, if present.
    pub fn meta(&self) -> Option<&Value> {
        self.meta.as_ref()
    }
}

impl<R: BufRead> Iterator for FrameReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(p) = self.pending.take() {
            return Some(p);
        }
        let text = match self.next_nonblank()? {
            Ok(t) => t,
            Err(e) => return Some(Err(e.into())),
        };
        let line = self.line;
        Some(serde_json::from_str(&text).map_err(|source| Error::Parse { line, source }))
    }
}

pub fn open_frames(path: impl AsRef<Path>) -> Result<FrameReader<BufReader<File>>> {
    Ok(FrameReader::new(BufReader::new(File::open(path)?)))
}

/// Reads a whole file, returning the metadata (if any) and the frames.
pub fn read_frames(path: impl AsRef<Path>) -> Result<(Option<Value>, Vec<Frame>)> {
    let mut reader = open_frames(path)?;
    let frames = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((reader.meta, frames))
}

pub fn write_meta<W: Write>(w: &mut W, meta: &impl Serialize) -> Result<()> {
    #[derive(Serialize)]
    struct Header<'a, M> {
        meta: &'a M,
    }
    serde_json::to_writer(&mut *w, &Header { meta })?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<()> {
    serde_json::to_writer(&mut *w, frame)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Writes an optional metadata header followed by every frame.
pub fn write_frames<'a>(
    path: impl AsRef<Path>,
    meta: Option<&impl Serialize>,
    frames: impl IntoIterator<Item = &'a Frame>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if let Some(m) = meta {
        write_meta(&mut w, m)?;
    }
    for f in frames {
        write_frame(&mut w, f)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{BicycleParams, CvParams, UnicycleParams};
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::io::Cursor;

    fn parse_all(text: &str) -> Result<Vec<Frame>> {
        FrameReader::new(Cursor::new(text)).collect()
    }

    #[test]
    fn reads_documented_example() {
        let text = r#"{"timestamp":0.1,"ego":{"x":1.0,"y":2.0,"yaw":0.1},"detections":[{"box":[1,2,0,2.1,4.7,1.7,0.3],"score":0.9,"class":"car","motion":{"model":"bicycle","v":10,"beta":0.05,"l_r":1.2},"track_id":7}]}"#;
        let frames = parse_all(text).unwrap();
        let d = &frames[0].detections[0];
        assert_eq!(d.bbox.length(), 4.7);
        assert_eq!(d.track_id, Some(7));
        assert_eq!(d.motion, MotionParams::Bicycle(BicycleParams { speed: 10.0, slip: 0.05, rear_axle: 1.2 }));
    }

    #[test]
    fn meta_line_is_skipped() {
        let text = "{\"meta\":{\"seed\":3}}\n\n{\"timestamp\":0.0,\"detections\":[]}\n";
        let mut r = FrameReader::new(Cursor::new(text));
        let frames: Vec<_> = r.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(r.meta().unwrap()["seed"], 3);
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\"timestamp\":0.0}\n{\"timestamp\":0.1}\n{\"timestamp\":oops}\n";
        match parse_all(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad_box = r#"{"timestamp":0,"detections":[{"box":[0,0,0,0,4,1,0],"score":0.5,"class":"car","motion":{"model":"cv","vx":0,"vy":0}}]}"#;
        assert!(matches!(parse_all(bad_box), Err(Error::Parse { line: 1, .. })));
        let bad_score = bad_box.replace("[0,0,0,0,4", "[0,0,0,2,4").replace("0.5", "1.5");
        assert!(matches!(parse_all(&bad_score), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_input_yields_nothing() {
        assert!(parse_all("").unwrap().is_empty());
        assert!(parse_all("{\"meta\":{}}\n").unwrap().is_empty());
    }

    fn arb_motion() -> impl Strategy<Value = MotionParams> {
        prop_oneof![
            (-30.0f64..30.0, -30.0f64..30.0).prop_map(|(vx, vy)| MotionParams::Cv(CvParams { vx, vy })),
            (-30.0f64..30.0, -2.0f64..2.0)
                .prop_map(|(speed, yaw_rate)| MotionParams::Unicycle(UnicycleParams { speed, yaw_rate })),
            (-30.0f64..30.0, -1.5f64..1.5, 0.5f64..3.0).prop_map(|(speed, slip, rear_axle)| {
                MotionParams::Bicycle(BicycleParams { speed, slip, rear_axle })
            }),
        ]
    }

    fn arb_detection() -> impl Strategy<Value = Detection> {
        (
            prop::array::uniform3(-1e3f64..1e3),
            prop::array::uniform3(0.1f64..10.0),
            -PI..PI,
            0.0f64..=1.0,
            "[a-z]{1,8}",
            arb_motion(),
            prop::option::of(any::<u64>()),
            prop::option::of(0.0f64..=1.0),
            0u32..6,
            prop::option::of((1u32..6, 0u32..6)),
        )
            .prop_map(|(c, s, yaw, score, class, motion, track_id, weight, lag, tally)| Detection {
                bbox: Box3D::new(c, s, yaw).unwrap(),
                score,
                class,
                motion,
                weight,
                lag,
                track_id,
                tally: tally.map(|(m, cur)| FusionTally {
                    members: m,
                    current_members: cur.min(m),
                }),
            })
    }

    proptest! {
        #[test]
        fn roundtrip_is_exact(
            t in -1e6f64..1e6,
            ego in (-1e4f64..1e4, -1e4f64..1e4, -PI..PI),
            dets in prop::collection::vec(arb_detection(), 0..5),
        ) {
            let frame = Frame::new(t, EgoPose::new(ego.0, ego.1, ego.2).unwrap(), dets);
            let mut buf = Vec::new();
            write_frame(&mut buf, &frame).unwrap();
            let back = parse_all(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(&back, &vec![frame.clone()]);
            let mut again = Vec::new();
            write_frame(&mut again, &back[0]).unwrap();
            prop_assert_eq!(buf, again);
        }
    }
}
