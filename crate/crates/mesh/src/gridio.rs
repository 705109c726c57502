use crate::{Coverage, Rgb, TexelGrid};
use exr::prelude as exrp;
use exrp::traits::*;
use serde::{Deserialize, Serialize};
use std::io;
use std::path::Path;

/// Sidecar metadata stored next to every serialized grid: resolution,
/// run-length-encoded coverage and free-form per-producer fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSidecar {
    pub width: usize,
    pub height: usize,
    /// Runs of (coverage state, length); states: 0 outside, 1 interior,
    /// 2 dilated.
    pub coverage_rle: Vec<(u8, u32)>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl GridSidecar {
    pub fn from_grid<T>(grid: &TexelGrid<T>, meta: serde_json::Value) -> Self {
        let mut rle: Vec<(u8, u32)> = Vec::new();
        for c in grid.coverage() {
            let code = match c {
                Coverage::Outside => 0u8,
                Coverage::Interior => 1,
                Coverage::Dilated => 2,
            };
            match rle.last_mut() {
                Some((state, run)) if *state == code => *run += 1,
                _ => rle.push((code, 1)),
            }
        }
        GridSidecar {
            width: grid.width(),
            height: grid.height(),
            coverage_rle: rle,
            meta,
        }
    }

    pub fn coverage(&self) -> Vec<Coverage> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for &(state, run) in &self.coverage_rle {
            let c = match state {
                1 => Coverage::Interior,
                2 => Coverage::Dilated,
                _ => Coverage::Outside,
            };
            out.extend(std::iter::repeat_n(c, run as usize));
        }
        out
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)
    }

    pub fn load(path: &Path) -> io::Result<GridSidecar> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    std::path::PathBuf::from(os)
}

fn exr_to_io(e: exrp::Error) -> io::Error {
    io::Error::other(format!("exr: {e}"))
}

/// RGB EXR, uncompressed so output bytes are reproducible.
pub fn write_rgb_exr(path: &Path, width: usize, height: usize, data: &[Rgb]) -> io::Result<()> {
    assert_eq!(data.len(), width * height);
    let channels = exrp::SpecificChannels::rgb(|pos: exrp::Vec2<usize>| {
        let p = data[pos.y() * width + pos.x()];
        (p.x, p.y, p.z)
    });
    let layer = exrp::Layer::new(
        (width, height),
        exrp::LayerAttributes::named("main"),
        exrp::Encoding::UNCOMPRESSED,
        channels,
    );
    exrp::Image::from_layer(layer)
        .write()
        .non_parallel()
        .to_file(path)
        .map_err(exr_to_io)
}

pub fn read_rgb_exr(path: &Path) -> io::Result<(usize, usize, Vec<Rgb>)> {
    let image = exrp::read_first_rgba_layer_from_file(
        path,
        |resolution: exrp::Vec2<usize>, _| {
            (
                resolution.width(),
                vec![Rgb::zeros(); resolution.width() * resolution.height()],
            )
        },
        |(width, pixels): &mut (usize, Vec<Rgb>), pos: exrp::Vec2<usize>, (r, g, b, _a): (f32, f32, f32, f32)| {
            pixels[pos.y() * *width + pos.x()] = Rgb::new(r, g, b);
        },
    )
    .map_err(exr_to_io)?;
    let size = image.layer_data.size;
    let (_, pixels) = image.layer_data.channel_data.pixels;
    Ok((size.width(), size.height(), pixels))
}

/// Single-channel ("Y") float EXR, uncompressed.
pub fn write_scalar_exr(path: &Path, width: usize, height: usize, data: &[f32]) -> io::Result<()> {
    assert_eq!(data.len(), width * height);
    let channel = exrp::AnyChannel::new("Y", exrp::FlatSamples::F32(data.to_vec()));
    let channels = exrp::AnyChannels::sort(exrp::SmallVec::from_vec(vec![channel]));
    let layer = exrp::Layer::new(
        (width, height),
        exrp::LayerAttributes::named("main"),
        exrp::Encoding::UNCOMPRESSED,
        channels,
    );
    exrp::Image::from_layer(layer)
        .write()
        .non_parallel()
        .to_file(path)
        .map_err(exr_to_io)
}

pub fn read_scalar_exr(path: &Path) -> io::Result<(usize, usize, Vec<f32>)> {
    let image = exrp::read()
        .no_deep_data()
        .largest_resolution_level()
        .all_channels()
        .first_valid_layer()
        .all_attributes()
        .from_file(path)
        .map_err(exr_to_io)?;
    let layer = image.layer_data;
    let size = layer.size;
    let channel = layer
        .channel_data
        .list
        .iter()
        .find(|c| c.name.eq("Y"))
        .or_else(|| layer.channel_data.list.first())
        .ok_or_else(|| io::Error::other("exr file has no channels"))?;
    let values = channel
        .sample_data
        .values_as_f32()
        .collect::<Vec<f32>>();
    Ok((size.width(), size.height(), values))
}

pub fn save_grid_rgb(grid: &TexelGrid<Rgb>, path: &Path, meta: serde_json::Value) -> io::Result<()> {
    write_rgb_exr(path, grid.width(), grid.height(), grid.texels())?;
    GridSidecar::from_grid(grid, meta).save(&sidecar_path(path))
}

pub fn load_grid_rgb(path: &Path) -> io::Result<(TexelGrid<Rgb>, GridSidecar)> {
    let (w, h, data) = read_rgb_exr(path)?;
    let sidecar = GridSidecar::load(&sidecar_path(path))?;
    if sidecar.width != w || sidecar.height != h {
        return Err(io::Error::other("sidecar resolution mismatch"));
    }
    Ok((TexelGrid::from_parts(w, h, data, sidecar.coverage()), sidecar))
}

pub fn save_grid_scalar(
    grid: &TexelGrid<f32>,
    path: &Path,
    meta: serde_json::Value,
) -> io::Result<()> {
    write_scalar_exr(path, grid.width(), grid.height(), grid.texels())?;
    GridSidecar::from_grid(grid, meta).save(&sidecar_path(path))
}

pub fn load_grid_scalar(path: &Path) -> io::Result<(TexelGrid<f32>, GridSidecar)> {
    let (w, h, data) = read_scalar_exr(path)?;
    let sidecar = GridSidecar::load(&sidecar_path(path))?;
    if sidecar.width != w || sidecar.height != h {
        return Err(io::Error::other("sidecar resolution mismatch"));
    }
    Ok((TexelGrid::from_parts(w, h, data, sidecar.coverage()), sidecar))
}

/// 8-bit PNG with gamma encoding, for previews and reference images.
pub fn write_rgb_png(
    path: &Path,
    width: usize,
    height: usize,
    data: &[Rgb],
    gamma: f32,
) -> io::Result<()> {
    assert_eq!(data.len(), width * height);
    let mut img = image::RgbImage::new(width as u32, height as u32);
    let encode = |v: f32| -> u8 {
        let c = v.clamp(0.0, 1.0).powf(1.0 / gamma);
        (c * 255.0).round() as u8
    };
    for (i, p) in data.iter().enumerate() {
        let (x, y) = ((i % width) as u32, (i / width) as u32);
        img.put_pixel(x, y, image::Rgb([encode(p.x), encode(p.y), encode(p.z)]));
    }
    img.save(path).map_err(|e| io::Error::other(format!("png: {e}")))
}

/// Loads an 8-bit PNG and linearizes it with the given gamma.
pub fn read_rgb_png(path: &Path, gamma: f32) -> io::Result<(usize, usize, Vec<Rgb>)> {
    let img = image::open(path)
        .map_err(|e| io::Error::other(format!("png: {e}")))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let decode = |v: u8| (v as f32 / 255.0).powf(gamma);
    let data = img
        .pixels()
        .map(|p| Rgb::new(decode(p.0[0]), decode(p.0[1]), decode(p.0[2])))
        .collect();
    Ok((w, h, data))
}

/// Loads a PNG as a binary mask: a pixel is set when its red channel
/// exceeds half intensity.
pub fn read_mask_png(path: &Path) -> io::Result<(usize, usize, Vec<bool>)> {
    let img = image::open(path)
        .map_err(|e| io::Error::other(format!("png: {e}")))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.pixels().map(|p| p.0[0] >= 128).collect();
    Ok((w, h, data))
}

pub fn write_mask_png(path: &Path, width: usize, height: usize, mask: &[bool]) -> io::Result<()> {
    assert_eq!(mask.len(), width * height);
    let mut img = image::GrayImage::new(width as u32, height as u32);
    for (i, &m) in mask.iter().enumerate() {
        let (x, y) = ((i % width) as u32, (i / width) as u32);
        img.put_pixel(x, y, image::Luma([if m { 255 } else { 0 }]));
    }
    img.save(path).map_err(|e| io::Error::other(format!("png: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_exr_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.exr");
        let data: Vec<Rgb> = (0..12)
            .map(|i| Rgb::new(i as f32 * 0.1, 1.0 - i as f32 * 0.05, 0.5))
            .collect();
        write_rgb_exr(&path, 4, 3, &data).unwrap();
        let (w, h, back) = read_rgb_exr(&path).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(data, back);
    }

    #[test]
    fn scalar_exr_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.exr");
        let data: Vec<f32> = (0..6).map(|i| i as f32 / 5.0).collect();
        write_scalar_exr(&path, 3, 2, &data).unwrap();
        let (w, h, back) = read_scalar_exr(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(data, back);
    }

    #[test]
    fn grid_with_sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.exr");
        let mut grid = TexelGrid::filled(3, 2, 0.0f32);
        grid.set(1, 0, 0.75, Coverage::Interior);
        grid.set(2, 0, 0.25, Coverage::Dilated);
        save_grid_scalar(&grid, &path, serde_json::json!({"samples": 16})).unwrap();
        let (back, sidecar) = load_grid_scalar(&path).unwrap();
        assert!(back.same_layout(&grid));
        assert_eq!(back.texels(), grid.texels());
        assert_eq!(sidecar.meta["samples"], 16);
    }

    #[test]
    fn exr_bytes_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.exr");
        let b = dir.path().join("b.exr");
        let data: Vec<Rgb> = (0..16).map(|i| Rgb::new(i as f32, 0.0, 1.0)).collect();
        write_rgb_exr(&a, 4, 4, &data).unwrap();
        write_rgb_exr(&b, 4, 4, &data).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
