//! Overlay images: object masks in gray, reconstructed humans in blue and
//! objects in red, mask outlines in green.

use std::path::Path;

use hoi_core::body::Camera;
use hoi_core::geometry::TriangleMesh;
use hoi_core::image::BinaryMask;
use hoi_core::scene::render_silhouette;
use image::{Rgb, RgbImage};

use crate::error::{io_error, HoiError, Result};

const HUMAN: [u8; 3] = [70, 110, 220];
const OBJECT: [u8; 3] = [230, 80, 60];
const OUTLINE: [u8; 3] = [60, 220, 90];

fn blend(px: &mut Rgb<u8>, color: [u8; 3], alpha: f64) {
    for (c, t) in px.0.iter_mut().zip(color) {
        *c = (*c as f64 * (1.0 - alpha) + t as f64 * alpha).round() as u8;
    }
}

pub fn overlay(camera: &Camera, masks: &[BinaryMask], humans: &[TriangleMesh], objects: &[TriangleMesh]) -> Result<RgbImage> {
    let (w, h) = (camera.width as u32, camera.height as u32);
    let mut img = RgbImage::from_pixel(w, h, Rgb([20, 20, 20]));
    let paint = |img: &mut RgbImage, m: &BinaryMask, color: [u8; 3], alpha: f64| {
        for y in 0..h.min(m.height() as u32) {
            for x in 0..w.min(m.width() as u32) {
                if m.get(x as usize, y as usize) {
                    blend(img.get_pixel_mut(x, y), color, alpha);
                }
            }
        }
    };
    for m in masks {
        paint(&mut img, m, [110, 110, 110], 1.0);
    }
    for mesh in humans {
        paint(&mut img, &render_silhouette(mesh.vertices(), mesh.faces(), camera)?, HUMAN, 0.6);
    }
    for mesh in objects {
        paint(&mut img, &render_silhouette(mesh.vertices(), mesh.faces(), camera)?, OBJECT, 0.6);
    }
    for m in masks {
        for p in m.boundary_points() {
            let (x, y) = (p.x.floor() as u32, p.y.floor() as u32);
            if x < w && y < h {
                img.put_pixel(x, y, Rgb(OUTLINE));
            }
        }
    }
    Ok(img)
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| HoiError::Image { path: path.to_path_buf(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hoi_core::geometry::shapes::lattice_box;
    use hoi_core::Vec3;

    #[test]
    fn object_pixels_are_tinted() {
        let cam = Camera::new(100.0, 100.0, 32.0, 24.0, 64, 48).unwrap();
        let (v, f, _) = lattice_box(Vec3::new(-0.1, -0.1, 1.9), Vec3::new(0.1, 0.1, 2.1), [1, 1, 1]);
        let cube = TriangleMesh::new(v, f).unwrap();
        let mask = BinaryMask::from_fn(64, 48, |x, y| x < 10 && y < 10);
        let img = overlay(&cam, &[mask], &[], &[cube]).unwrap();
        let center = img.get_pixel(32, 24).0;
        assert!(center[0] > center[1] && center[0] > center[2], "{center:?}");
        assert_eq!(img.get_pixel(5, 5).0, [110, 110, 110]);
        assert_eq!(img.get_pixel(60, 40).0, [20, 20, 20]);
        assert_eq!(img.get_pixel(10, 5).0, OUTLINE);
    }
}
