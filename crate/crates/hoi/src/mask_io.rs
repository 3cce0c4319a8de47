//! Binary masks as PNG images. A pixel is set when its luma exceeds 127.

use std::path::Path;

use hoi_core::image::BinaryMask;
use image::{GrayImage, Luma};

use crate::error::{io_error, HoiError, Result};

fn image_error(path: &Path, e: impl ToString) -> HoiError {
    HoiError::Image { path: path.to_path_buf(), message: e.to_string() }
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let img = image::open(path).map_err(|e| image_error(path, e))?.to_luma8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0[0] > 127).collect();
    Ok(BinaryMask::from_data(w as usize, h as usize, data)?)
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let img = GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| image_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let m = BinaryMask::from_fn(7, 5, |x, y| (x + 2 * y) % 3 == 0);
        write_mask(&path, &m).unwrap();
        assert_eq!(read_mask(&path).unwrap(), m);
        assert!(read_mask(&dir.path().join("missing.png")).is_err());
    }
}
