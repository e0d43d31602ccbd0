//! Reader for the NTU RGB+D `.skeleton` text format.
//!
//! Layout of a file: the frame count, then per frame the body count, then per
//! body one metadata line (body id first), the joint count, and one line per
//! joint whose first three fields are the camera-space `x y z` in meters.

use std::collections::HashMap;

use ndarray::Array3;

use super::layout::JointLayout;
use super::sequence::SkeletonSequence;
use crate::error::{Error, Result};

pub const NTU_JOINTS: usize = 25;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line with its 1-based line number.
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            if !line.trim().is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::TruncatedFile {
            line: self.last + 1,
            message: format!("expected {what}"),
        })
    }

    fn count(&mut self, what: &str) -> Result<(usize, usize)> {
        let (no, line) = self.next(what)?;
        let token = line.split_whitespace().next().unwrap_or("");
        let n = token.parse::<usize>().map_err(|_| Error::MalformedNumber {
            line: no,
            token: token.to_string(),
        })?;
        Ok((no, n))
    }
}

struct Track {
    frames: Vec<Option<[[f64; 3]; NTU_JOINTS]>>,
}

/// Parses NTU skeleton text into one sequence per tracked body.
///
/// Bodies are matched across frames by their body id and ordered by first
/// appearance. Frames where a body is absent repeat its nearest observed pose.
pub fn parse_ntu_skeleton(text: &str) -> Result<Vec<SkeletonSequence>> {
    let mut lines = Lines::new(text);
    let (_, frame_count) = lines.count("frame count")?;
    let mut order: Vec<String> = Vec::new();
    let mut tracks: HashMap<String, Track> = HashMap::new();

    for frame in 0..frame_count {
        let (_, bodies) = lines.count("body count")?;
        for _ in 0..bodies {
            let (_, meta) = lines.next("body metadata")?;
            let body_id = meta.split_whitespace().next().unwrap_or("").to_string();
            let (no, joints) = lines.count("joint count")?;
            if joints != NTU_JOINTS {
                return Err(Error::JointCountMismatch {
                    line: no,
                    expected: NTU_JOINTS,
                    found: joints,
                });
            }
            let mut pose = [[0.0; 3]; NTU_JOINTS];
            for joint in pose.iter_mut() {
                let (no, line) = lines.next("joint line")?;
                let mut fields = line.split_whitespace();
                for coord in joint.iter_mut() {
                    let token = fields.next().ok_or_else(|| Error::TruncatedFile {
                        line: no,
                        message: "joint line has fewer than 3 fields".into(),
                    })?;
                    *coord = token
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::MalformedNumber {
                            line: no,
                            token: token.to_string(),
                        })?;
                }
            }
            let track = tracks.entry(body_id.clone()).or_insert_with(|| {
                order.push(body_id.clone());
                Track {
                    frames: vec![None; frame_count],
                }
            });
            track.frames[frame] = Some(pose);
        }
    }

    let layout = JointLayout::ntu25();
    order
        .iter()
        .enumerate()
        .map(|(person, id)| {
            let track = &tracks[id];
            let filled = fill_gaps(&track.frames);
            let values = Array3::from_shape_fn((3, NTU_JOINTS, frame_count), |(c, v, t)| {
                filled[t][v][c]
            });
            let mut seq = SkeletonSequence::new(values, layout.clone())?;
            seq.person_index = person;
            Ok(seq)
        })
        .collect()
}

fn fill_gaps(frames: &[Option<[[f64; 3]; NTU_JOINTS]>]) -> Vec<[[f64; 3]; NTU_JOINTS]> {
    let first = frames
        .iter()
        .flatten()
        .next()
        .copied()
        .expect("a track has at least one observed frame");
    let mut last = first;
    frames
        .iter()
        .map(|f| {
            if let Some(p) = f {
                last = *p;
            }
            last
        })
        .collect()
}
