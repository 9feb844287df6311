//! PNG codecs for the raster types. Masks are 8-bit (0 / 255), label maps
//! 16-bit with the instance id as the pixel value.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, RgbImage};

use super::{BinaryMask, ImageGray, ImageRgb, LabelMap};
use crate::error::{Error, Result};

pub fn read_gray(path: impl AsRef<Path>) -> Result<ImageGray> {
    let img = open(path.as_ref())?.into_luma8();
    let (w, h) = img.dimensions();
    ImageGray::new(w as usize, h as usize, img.into_raw())
}

pub fn read_rgb(path: impl AsRef<Path>) -> Result<ImageRgb> {
    let img = open(path.as_ref())?.into_rgb8();
    let (w, h) = img.dimensions();
    ImageRgb::new(w as usize, h as usize, img.into_raw())
}

/// Any nonzero pixel is foreground.
/// Any nonzero sample is foreground. Decoded at 16 bits so label maps with
/// small ids read as their union.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = open(path.as_ref())?.into_luma16();
    let (w, h) = img.dimensions();
    Ok(BinaryMask { width: w as usize, height: h as usize, bits: img.into_raw().into_iter().map(|v| v != 0).collect() })
}

pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let img = open(path.as_ref())?.into_luma16();
    let (w, h) = img.dimensions();
    LabelMap::new(w as usize, h as usize, img.into_raw().into_iter().map(u32::from).collect())
}

pub fn write_gray(path: impl AsRef<Path>, img: &ImageGray) -> Result<()> {
    let buf = GrayImage::from_raw(img.width as u32, img.height as u32, img.data.clone())
        .expect("raster length checked at construction");
    save_png(path.as_ref(), &image::DynamicImage::ImageLuma8(buf))
}

pub fn write_rgb(path: impl AsRef<Path>, img: &ImageRgb) -> Result<()> {
    let buf = RgbImage::from_raw(img.width as u32, img.height as u32, img.data.clone())
        .expect("raster length checked at construction");
    save_png(path.as_ref(), &image::DynamicImage::ImageRgb8(buf))
}

pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    let data = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_gray(path, &ImageGray { width: mask.width, height: mask.height, data, microns_per_pixel: None })
}

pub fn write_label_map(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    let data = labels
        .labels
        .iter()
        .map(|&l| {
            u16::try_from(l).map_err(|_| Error::InvalidInput(format!("instance id {l} does not fit in 16 bits")))
        })
        .collect::<Result<Vec<u16>>>()?;
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(labels.width as u32, labels.height as u32, data).expect("length checked");
    save_png(path.as_ref(), &image::DynamicImage::ImageLuma16(buf))
}

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let tmp = tmp_sibling(path);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn save_png(path: &Path, img: &image::DynamicImage) -> Result<()> {
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)?;
    write_atomic(path, &bytes)
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)?)
}

fn tmp_sibling(path: &Path) -> std::path::PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}
