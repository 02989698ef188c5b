use crate::error::{Error, Result};

/// Channel-planar image with unit-scaled pixels: index `(c * height + y) * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::OutOfRange(format!("channels must be 1 or 3, got {channels}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::OutOfRange("image sides must be positive".into()));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::DimensionMismatch {
                expected: width * height * channels,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Planar bytes (as stored in the CIFAR binaries) scaled by 1/255.
    pub fn from_planar_bytes(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            bytes.iter().map(|b| f32::from(*b) / 255.0).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    /// Inverse of [`Image::from_planar_bytes`] for pixels on the 1/255 grid.
    pub fn to_planar_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.pixels[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.pixels[(c * self.height + y) * self.width + x] = v;
    }

    /// Luminance for colour images, identity for grey ones.
    pub fn grayscale(&self) -> Vec<f64> {
        let plane = self.width * self.height;
        if self.channels == 1 {
            return self.pixels.iter().map(|p| f64::from(*p)).collect();
        }
        (0..plane)
            .map(|i| {
                0.299 * f64::from(self.pixels[i])
                    + 0.587 * f64::from(self.pixels[plane + i])
                    + 0.114 * f64::from(self.pixels[2 * plane + i])
            })
            .collect()
    }
}
