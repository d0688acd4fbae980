//! Overlapping fixed-length clip decomposition of a video timeline.
//!
//! Times are integer milliseconds ([`Millis`]) so clip starts are exact.
//! With clip length `τ` and overlap `ω`, a video of duration `T` yields
//! `ceil((T - τ) / (τ - ω)) + 1` clips (one clip when `T <= τ`), the `i`-th
//! starting at `(i - 1)(τ - ω)`. The last window is clamped to end at `T`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative time quantity in whole milliseconds.
///
/// Serialized as decimal seconds; deserialization rounds to the nearest
/// millisecond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Millis(pub u64);

impl Millis {
    pub const ZERO: Millis = Millis(0);

    pub const fn from_secs(secs: u64) -> Millis {
        Millis(secs * 1000)
    }

    /// Rounds to the nearest millisecond; `None` for negative or non-finite input.
    pub fn from_secs_f64(secs: f64) -> Option<Millis> {
        if !secs.is_finite() || secs < 0.0 || secs > (u64::MAX / 1000) as f64 {
            return None;
        }
        Some(Millis(libm::round(secs * 1000.0) as u64))
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn saturating_sub(self, other: Millis) -> Millis {
        Millis(self.0.saturating_sub(other.0))
    }

    /// `m:ss` or `m:ss.mmm` clock notation.
    pub fn clock(self) -> String {
        let total_s = self.0 / 1000;
        let ms = self.0 % 1000;
        if ms == 0 {
            format!("{}:{:02}", total_s / 60, total_s % 60)
        } else {
            format!("{}:{:02}.{:03}", total_s / 60, total_s % 60, ms)
        }
    }
}

impl fmt::Display for Millis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0 / 1000;
        let ms = self.0 % 1000;
        if ms == 0 {
            write!(f, "{s}")
        } else {
            let frac = format!("{ms:03}");
            write!(f, "{s}.{}", frac.trim_end_matches('0'))
        }
    }
}

impl Serialize for Millis {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_secs_f64())
    }
}

impl<'de> Deserialize<'de> for Millis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let secs = f64::deserialize(d)?;
        Millis::from_secs_f64(secs).ok_or_else(|| serde::de::Error::custom("seconds must be finite and non-negative"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentationError {
    #[error("clip length must be positive")]
    ZeroClipLength,
    #[error("overlap {overlap}s must be smaller than clip length {clip_len}s")]
    OverlapTooLarge { clip_len: Millis, overlap: Millis },
    #[error("duration must be positive")]
    NonPositiveDuration,
    #[error("fps must be positive and finite")]
    BadFps,
    #[error("clip index must be at least 1")]
    IndexOutOfRange,
    #[error("empty video id")]
    EmptyVideoId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationParams {
    clip_len: Millis,
    overlap: Millis,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams { clip_len: Millis::from_secs(30), overlap: Millis::from_secs(5) }
    }
}

impl SegmentationParams {
    pub fn new(clip_len: Millis, overlap: Millis) -> Result<Self, SegmentationError> {
        if clip_len.0 == 0 {
            return Err(SegmentationError::ZeroClipLength);
        }
        if overlap >= clip_len {
            return Err(SegmentationError::OverlapTooLarge { clip_len, overlap });
        }
        Ok(SegmentationParams { clip_len, overlap })
    }

    pub fn from_secs(clip_len: u64, overlap: u64) -> Result<Self, SegmentationError> {
        Self::new(Millis::from_secs(clip_len), Millis::from_secs(overlap))
    }

    pub fn clip_len(&self) -> Millis {
        self.clip_len
    }

    pub fn overlap(&self) -> Millis {
        self.overlap
    }

    /// Distance between consecutive clip starts, `τ - ω`.
    pub fn stride(&self) -> Millis {
        Millis(self.clip_len.0 - self.overlap.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    #[serde(rename = "duration_s")]
    pub duration: Millis,
    pub fps: f64,
    #[serde(default)]
    pub source_uri: String,
}

impl VideoMeta {
    pub fn new(video_id: impl Into<String>, duration: Millis, fps: f64, source_uri: impl Into<String>) -> Result<Self, SegmentationError> {
        let v = VideoMeta { video_id: video_id.into(), duration, fps, source_uri: source_uri.into() };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<(), SegmentationError> {
        if self.video_id.trim().is_empty() {
            return Err(SegmentationError::EmptyVideoId);
        }
        if self.duration.0 == 0 {
            return Err(SegmentationError::NonPositiveDuration);
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(SegmentationError::BadFps);
        }
        Ok(())
    }

    /// Frame index nearest to time `t`.
    pub fn frame_at(&self, t: Millis) -> u64 {
        libm::floor(t.as_secs_f64() * self.fps + 1e-9) as u64
    }

    pub fn total_frames(&self) -> u64 {
        self.frame_at(self.duration).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipWindow {
    pub video_id: String,
    pub index: u32,
    #[serde(rename = "start_s")]
    pub start: Millis,
    #[serde(rename = "length_s")]
    pub length: Millis,
}

impl ClipWindow {
    pub fn end(&self) -> Millis {
        Millis(self.start.0 + self.length.0)
    }
}

/// Number of clips for a video of the given duration.
pub fn clip_count(duration: Millis, params: &SegmentationParams) -> Result<u32, SegmentationError> {
    if duration.0 == 0 {
        return Err(SegmentationError::NonPositiveDuration);
    }
    let tau = params.clip_len.0;
    if duration.0 <= tau {
        return Ok(1);
    }
    let stride = params.stride().0;
    let extra = (duration.0 - tau).div_ceil(stride);
    Ok((extra + 1) as u32)
}

/// Start of the 1-based `index`-th clip.
pub fn clip_start(index: u32, params: &SegmentationParams) -> Result<Millis, SegmentationError> {
    if index == 0 {
        return Err(SegmentationError::IndexOutOfRange);
    }
    Ok(Millis((index as u64 - 1) * params.stride().0))
}

/// Clip windows for `video`, in index order.
pub fn segment(video: &VideoMeta, params: &SegmentationParams) -> Result<Vec<ClipWindow>, SegmentationError> {
    video.validate()?;
    let count = clip_count(video.duration, params)?;
    let mut out = Vec::with_capacity(count as usize);
    for index in 1..=count {
        let start = clip_start(index, params)?;
        let end = Millis((start.0 + params.clip_len.0).min(video.duration.0));
        out.push(ClipWindow { video_id: video.video_id.clone(), index, start, length: Millis(end.0 - start.0) });
    }
    Ok(out)
}
