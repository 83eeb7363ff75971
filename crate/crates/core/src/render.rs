//! Deterministic rasterizer for schematics.
//!
//! Wires become 1-pixel (or `wire_stroke`) black Bresenham lines, symbols a
//! bounding-box outline with a hatch pattern derived from the symbol kind,
//! flags small filled triangles. The canvas is the tight bounding box of
//! everything drawn plus `pad` pixels on each side, so output is invariant
//! under translation and symbol order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asc::{AscDocument, BBox, Point};
use crate::error::{Error, Result};
use crate::extract::PinMapRegistry;

pub const BACKGROUND: u8 = 255;
const INK: u8 = 0;
const HATCH: u8 = 96;
/// Glyph used for symbols missing from the pin table, `[x0, y0, x1, y1]`.
const UNKNOWN_GLYPH: [i64; 4] = [0, 0, 32, 32];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        GrayImage {
            width,
            height,
            data: vec![BACKGROUND; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut img = GrayImage::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    fn put(&mut self, x: i64, y: i64, v: u8) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.data[y as usize * self.width + x as usize] = v;
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut buf, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
            w.write_image_data(&self.data)
                .map_err(|e| Error::Png(e.to_string()))?;
        }
        Ok(buf)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
        let dec = png::Decoder::new(bytes);
        let mut reader = dec.read_info().map_err(|e| Error::Png(e.to_string()))?;
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::Png(e.to_string()))?;
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
            return Err(Error::Png("expected 8-bit grayscale".into()));
        }
        buf.truncate(info.buffer_size());
        Ok(GrayImage {
            width: info.width as usize,
            height: info.height as usize,
            data: buf,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub units_per_pixel: u32,
    pub wire_stroke: u32,
    pub pad: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            units_per_pixel: 4,
            wire_stroke: 1,
            pad: 8,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.units_per_pixel == 0 || self.wire_stroke == 0 || self.pad == 0 {
            return Err(Error::Config("render settings must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Hatch {
    Horizontal,
    Vertical,
    Rising,
    Falling,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn hatch_for(kind: &str) -> (Hatch, i64) {
    let h = fnv1a(&kind.to_ascii_lowercase());
    let style = match h % 4 {
        0 => Hatch::Horizontal,
        1 => Hatch::Vertical,
        2 => Hatch::Rising,
        _ => Hatch::Falling,
    };
    (style, 3 + ((h >> 2) % 4) as i64)
}

struct Canvas<'a> {
    img: GrayImage,
    origin: Point,
    cfg: &'a RenderConfig,
}

impl Canvas<'_> {
    fn to_px(&self, p: Point) -> (i64, i64) {
        let upp = i64::from(self.cfg.units_per_pixel);
        let pad = i64::from(self.cfg.pad);
        (
            (p.x - self.origin.x).div_euclid(upp) + pad,
            (p.y - self.origin.y).div_euclid(upp) + pad,
        )
    }

    fn line(&mut self, a: (i64, i64), b: (i64, i64), v: u8, stroke: i64) {
        let (mut x, mut y) = a;
        let dx = (b.0 - x).abs();
        let dy = -(b.1 - y).abs();
        let sx = if x < b.0 { 1 } else { -1 };
        let sy = if y < b.1 { 1 } else { -1 };
        let mut err = dx + dy;
        let lo = -(stroke - 1) / 2;
        loop {
            for oy in lo..lo + stroke {
                for ox in lo..lo + stroke {
                    self.img.put(x + ox, y + oy, v);
                }
            }
            if (x, y) == b {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn glyph(&mut self, bbox: BBox, kind: &str) {
        let (x0, y0) = self.to_px(bbox.min);
        let (x1, y1) = self.to_px(bbox.max);
        let (style, step) = hatch_for(kind);
        for y in y0 + 1..y1 {
            for x in x0 + 1..x1 {
                let (i, j) = (x - x0, y - y0);
                let on = match style {
                    Hatch::Horizontal => j % step == 0,
                    Hatch::Vertical => i % step == 0,
                    Hatch::Rising => (i + j) % step == 0,
                    Hatch::Falling => (i - j).rem_euclid(step) == 0,
                };
                if on {
                    self.img.put(x, y, HATCH);
                }
            }
        }
        for (a, b) in [
            ((x0, y0), (x1, y0)),
            ((x1, y0), (x1, y1)),
            ((x1, y1), (x0, y1)),
            ((x0, y1), (x0, y0)),
        ] {
            self.line(a, b, INK, 1);
        }
    }

    fn flag(&mut self, p: Point) {
        let (x, y) = self.to_px(p);
        for row in 0..3 {
            for dx in -(2 - row)..=(2 - row) {
                self.img.put(x + dx, y + row, INK);
            }
        }
    }
}

fn glyph_bbox(table: &PinMapRegistry, kind: &str, at: Point, o: crate::asc::Orientation) -> BBox {
    match table.get(kind) {
        Some(map) => map.placed_bbox(at, o),
        None => {
            let [x0, y0, x1, y1] = UNKNOWN_GLYPH;
            let corners = [(x0, y0), (x1, y1)].map(|(x, y)| o.apply(Point::new(x, y)).translate(at.x, at.y));
            BBox::of_points(corners).expect("two corners")
        }
    }
}

pub fn render(doc: &AscDocument, cfg: &RenderConfig, table: &PinMapRegistry) -> Result<GrayImage> {
    cfg.validate()?;
    let glyphs: Vec<(BBox, &str)> = doc
        .symbols
        .iter()
        .map(|s| (glyph_bbox(table, &s.kind, s.at, s.orientation), s.kind.as_str()))
        .collect();
    let extent = BBox::of_points(
        doc.wires
            .iter()
            .flat_map(|w| [w.start, w.end])
            .chain(doc.flags.iter().map(|f| f.at))
            .chain(glyphs.iter().flat_map(|(b, _)| [b.min, b.max])),
    )
    .ok_or(Error::EmptyGeometry)?;

    let upp = i64::from(cfg.units_per_pixel);
    let pad = cfg.pad as usize;
    let width = extent.width().div_euclid(upp) as usize + 1 + 2 * pad;
    let height = extent.height().div_euclid(upp) as usize + 1 + 2 * pad;
    let mut canvas = Canvas {
        img: GrayImage::new(width, height),
        origin: extent.min,
        cfg,
    };

    // Sorted so that overlapping glyphs paint identically for any symbol order.
    let mut sorted = glyphs;
    sorted.sort_by(|a, b| (a.0.min, a.0.max, a.1).cmp(&(b.0.min, b.0.max, b.1)));
    for (bbox, kind) in sorted {
        canvas.glyph(bbox, kind);
    }
    let stroke = i64::from(cfg.wire_stroke);
    for w in &doc.wires {
        let (a, b) = (canvas.to_px(w.start), canvas.to_px(w.end));
        canvas.line(a, b, INK, stroke);
    }
    for f in &doc.flags {
        canvas.flag(f.at);
    }
    Ok(canvas.img)
}

/// Centers both images on background canvases of the larger size.
pub fn pad_to_common(x: &GrayImage, y: &GrayImage) -> (GrayImage, GrayImage) {
    let w = x.width.max(y.width);
    let h = x.height.max(y.height);
    (pad_to(x, w, h), pad_to(y, w, h))
}

fn pad_to(img: &GrayImage, w: usize, h: usize) -> GrayImage {
    if img.width == w && img.height == h {
        return img.clone();
    }
    let ox = (w - img.width) / 2;
    let oy = (h - img.height) / 2;
    let mut out = GrayImage::new(w, h);
    for y in 0..img.height {
        let src = &img.data[y * img.width..(y + 1) * img.width];
        let start = (y + oy) * w + ox;
        out.data[start..start + img.width].copy_from_slice(src);
    }
    out
}
