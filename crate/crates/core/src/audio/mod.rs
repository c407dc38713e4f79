//! Audio ingestion and the spectral primitives every other stage builds on.
//!
//! Everything here works in `f64` on mono clips. WAV input may be 16-bit
//! integer PCM or 32-bit float at any rate; stereo is averaged to mono.

mod envelope;
mod resample;
mod spectrum;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use envelope::{amplitude_envelope, EnvelopeSeq};
pub use resample::resample;
pub use spectrum::{hann, power_spectrogram, power_spectrum, SpectralFrameSeq, Window};

/// Rate every pipeline stage works at after ingest.
pub const CANONICAL_RATE: u32 = 16_000;

/// A mono clip of audio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    pub id: String,
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

impl AudioClip {
    pub fn new(id: impl Into<String>, sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self {
            id: id.into(),
            sample_rate,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sub-clip covering `[start_s, end_s)`, clamped to the clip.
    pub fn slice(&self, start_s: f64, end_s: f64) -> AudioClip {
        let sr = self.sample_rate as f64;
        let a = ((start_s * sr).round().max(0.0) as usize).min(self.samples.len());
        let b = ((end_s * sr).round().max(0.0) as usize).clamp(a, self.samples.len());
        AudioClip {
            id: self.id.clone(),
            sample_rate: self.sample_rate,
            samples: self.samples[a..b].to_vec(),
        }
    }

    /// Multiply every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> AudioClip {
        AudioClip {
            id: self.id.clone(),
            sample_rate: self.sample_rate,
            samples: self.samples.iter().map(|s| s * gain).collect(),
        }
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }
}

/// Load a RIFF/WAVE file as a mono clip at its native rate.
///
/// The clip id is the file stem.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Audio {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            message: "zero channels".into(),
        });
    }
    let decode_err = |e: hound::Error| Error::Audio {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(decode_err)?,
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(decode_err)?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.to_path_buf(),
                message: format!("{fmt:?} with {bits} bits per sample"),
            })
        }
    };
    if interleaved.is_empty() {
        return Err(Error::EmptyAudio(path.to_path_buf()));
    }
    let samples: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    AudioClip::new(id, spec.sample_rate, samples).map_err(|e| Error::Audio {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Sample encoding used by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Write a mono clip as RIFF/WAVE. Integer output is clipped to [-1, 1].
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: bits,
        sample_format: format,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Audio {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &s in &clip.samples {
        match encoding {
            WavEncoding::Pcm16 => {
                let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
                writer.write_sample(v).map_err(wrap)?;
            }
            WavEncoding::Float32 => writer.write_sample(s as f32).map_err(wrap)?,
        }
    }
    writer.finalize().map_err(wrap)
}

/// Load and bring a file to the canonical rate.
pub fn load_canonical(path: impl AsRef<Path>) -> Result<AudioClip> {
    let clip = load_audio(path)?;
    resample(&clip, CANONICAL_RATE)
}
