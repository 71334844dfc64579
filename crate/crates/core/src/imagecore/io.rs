//! PNG / PPM file boundary. Values quantize to 8 bits here and nowhere else.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader, RgbImage};

use super::{ColorField, Image, Mask, CHANNELS};
use crate::error::{AscError, Result};

fn quantize(v: f64) -> u8 {
    // f64::round is half-away-from-zero, i.e. half-up on [0, 255].
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn format_for(path: &Path) -> ImageFormat {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
    {
        Some(ext) if ext == "ppm" || ext == "pgm" || ext == "pnm" => ImageFormat::Pnm,
        _ => ImageFormat::Png,
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let bytes = std::fs::read(path).map_err(|source| AscError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| AscError::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    if reader.format().is_none() {
        return Err(AscError::Malformed {
            path: path.to_path_buf(),
            reason: "unrecognized image header".into(),
        });
    }
    reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(u) => AscError::UnsupportedBitDepth {
            path: path.to_path_buf(),
            detail: u.to_string(),
        },
        other => AscError::Malformed {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })
}

fn write(path: &Path, img: DynamicImage) -> Result<()> {
    img.save_with_format(path, format_for(path))
        .map_err(|e| match e {
            image::ImageError::IoError(source) => AscError::Unwritable {
                path: path.to_path_buf(),
                source,
            },
            other => AscError::Unwritable {
                path: path.to_path_buf(),
                source: std::io::Error::other(other.to_string()),
            },
        })
}

/// Loads an 8-bit RGB (or grayscale, or RGBA with alpha discarded) image.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let rgb = match decode(path)? {
        DynamicImage::ImageRgb8(img) => img,
        img @ (DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageRgba8(_)
        | DynamicImage::ImageLumaA8(_)) => img.to_rgb8(),
        other => {
            return Err(AscError::UnsupportedBitDepth {
                path: path.to_path_buf(),
                detail: format!("{:?}; only 8 bits per channel are accepted", other.color()),
            })
        }
    };
    let (w, h) = rgb.dimensions();
    let data = rgb
        .into_raw()
        .into_iter()
        .map(|b| b as f64 / 255.0)
        .collect();
    Image::new(h as usize, w as usize, data)
}

fn save_rgb(height: usize, width: usize, data: &[f64], path: &Path) -> Result<()> {
    debug_assert_eq!(data.len(), height * width * CHANNELS);
    let bytes = data.iter().map(|&v| quantize(v)).collect();
    let img = RgbImage::from_raw(width as u32, height as u32, bytes)
        .ok_or_else(|| AscError::invalid("raster does not fit an RGB buffer"))?;
    write(path, DynamicImage::ImageRgb8(img))
}

/// Saves as PNG, or binary PPM when the extension is `.ppm`.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    save_rgb(img.height(), img.width(), img.data(), path.as_ref())
}

pub fn save_color_field(colors: &ColorField, path: impl AsRef<Path>) -> Result<()> {
    save_rgb(
        colors.height(),
        colors.width(),
        colors.data(),
        path.as_ref(),
    )
}

/// Single-channel PNG, 0 = background, 255 = selected.
pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let bytes = mask.data().iter().map(|&v| v * 255).collect();
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, bytes)
        .ok_or_else(|| AscError::invalid("mask does not fit a gray buffer"))?;
    write(path.as_ref(), DynamicImage::ImageLuma8(img))
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let gray = match decode(path)? {
        DynamicImage::ImageLuma8(img) => img,
        other => {
            return Err(AscError::UnsupportedBitDepth {
                path: path.to_path_buf(),
                detail: format!("{:?}; masks are 8-bit single channel", other.color()),
            })
        }
    };
    let (w, h) = gray.dimensions();
    let mut data = Vec::with_capacity((w * h) as usize);
    for v in gray.into_raw() {
        match v {
            0 => data.push(0),
            255 => data.push(1),
            other => {
                return Err(AscError::Malformed {
                    path: path.to_path_buf(),
                    reason: format!("mask byte {other} is neither 0 nor 255"),
                })
            }
        }
    }
    Mask::new(h as usize, w as usize, data)
}
