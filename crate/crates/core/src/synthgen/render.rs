//! Deterministic glyph rasterizer.
//!
//! Each factor tuple maps to a colored geometric glyph on a fixed dark
//! background: `shape` picks the glyph outline, `scale` its half-size
//! (strictly increasing, so glyph area is injective in the scale index),
//! `hue` the fill color, and `pos_x`/`pos_y` the center. Factors missing
//! from a spec fall back to index 0 / a centered position. Rendering uses
//! no randomness at all.

use super::{DataError, FactorSpec};

/// One rendered sample: pixels in `[0,1]`, the principal label, and the
/// generating tuple. The tuple is for dataset bookkeeping and evaluation;
/// training code receives images and principal labels only (see
/// [`super::TrainView`]).
#[derive(Debug, Clone)]
pub struct ImageSample {
    pub pixels: Vec<f32>,
    pub label: usize,
    pub tuple: Vec<u16>,
}

const BACKGROUND: [f32; 3] = [0.12, 0.12, 0.12];
const MAX_SHAPES: u16 = 4;

struct Geometry {
    cx: f64,
    cy: f64,
    r: f64,
    shape: u16,
    color: [f32; 3],
}

fn half_size(min_side: f64, scale_idx: u16) -> f64 {
    // 4px base and 2px steps on a 32px image, proportional elsewhere.
    min_side * 0.125 + scale_idx as f64 * min_side * 0.0625
}

fn center(extent: usize, margin: f64, idx: u16, card: u16) -> f64 {
    if card <= 1 {
        return extent as f64 / 2.0;
    }
    let usable = extent as f64 - 2.0 * margin;
    margin + idx as f64 * usable / (card - 1) as f64
}

fn geometry(spec: &FactorSpec, tuple: &[u16]) -> Result<Geometry, DataError> {
    let lookup = |name: &str| -> (u16, u16) {
        match spec.factor_index(name) {
            Some(i) => (tuple[i], spec.factors[i].cardinality),
            None => (0, 1),
        }
    };
    let (shape, shape_card) = lookup("shape");
    let (scale, scale_card) = lookup("scale");
    let (hue, hue_card) = lookup("hue");
    let (px, px_card) = lookup("pos_x");
    let (py, py_card) = lookup("pos_y");

    if shape_card > MAX_SHAPES {
        return Err(DataError::InvalidSpec(format!(
            "shape cardinality {} exceeds the {} available glyphs",
            shape_card, MAX_SHAPES
        )));
    }
    let min_side = spec.width.min(spec.height) as f64;
    let r_max = half_size(min_side, scale_card.saturating_sub(1));
    if 2.0 * r_max > spec.width.min(spec.height) as f64 {
        return Err(DataError::InvalidSpec(format!(
            "largest glyph (half-size {:.1}) does not fit a {}x{} image",
            r_max, spec.width, spec.height
        )));
    }
    Ok(Geometry {
        cx: center(spec.width, r_max, px, px_card),
        cy: center(spec.height, r_max, py, py_card),
        r: half_size(min_side, scale),
        shape,
        color: hue_color(hue, hue_card),
    })
}

fn hue_color(idx: u16, card: u16) -> [f32; 3] {
    let h = idx as f64 * 360.0 / card.max(1) as f64;
    hsv_to_rgb(h, 0.85, 0.95)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f32; 3] {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) as f32, (g + m) as f32, (b + m) as f32]
}

fn inside(shape: u16, dx: f64, dy: f64, r: f64) -> bool {
    match shape {
        0 => dx.abs().max(dy.abs()) <= r,          // square
        1 => dx * dx + dy * dy <= r * r,           // circle
        2 => dx.abs() + dy.abs() <= r,             // diamond
        _ => {
            // upward triangle: apex (0,-r), base corners (+-r, +r)
            dy >= -r && dy <= r && dx.abs() <= (dy + r) / 2.0
        }
    }
}

/// Rasterize the glyph for a factor tuple. Pure function of its inputs.
pub fn render(spec: &FactorSpec, tuple: &[u16]) -> Result<ImageSample, DataError> {
    spec.check_tuple(tuple)?;
    let geo = geometry(spec, tuple)?;
    let (w, h) = (spec.width, spec.height);
    let mut pixels = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let dx = (x as f64 + 0.5) - geo.cx;
            let dy = (y as f64 + 0.5) - geo.cy;
            let px = if inside(geo.shape, dx, dy, geo.r) {
                geo.color
            } else {
                BACKGROUND
            };
            pixels.extend_from_slice(&px);
        }
    }
    Ok(ImageSample {
        pixels,
        label: tuple[spec.principal_index()] as usize,
        tuple: tuple.to_vec(),
    })
}

/// Axis-aligned pixel bounding box `(x0, y0, x1, y1)` (inclusive) of the
/// glyph a tuple renders, clamped to the image.
pub fn glyph_bbox(spec: &FactorSpec, tuple: &[u16]) -> Result<(usize, usize, usize, usize), DataError> {
    spec.check_tuple(tuple)?;
    let geo = geometry(spec, tuple)?;
    let x0 = (geo.cx - geo.r - 0.5).floor().max(0.0) as usize;
    let y0 = (geo.cy - geo.r - 0.5).floor().max(0.0) as usize;
    let x1 = ((geo.cx + geo.r + 0.5).ceil() as usize).min(spec.width - 1);
    let y1 = ((geo.cy + geo.r + 0.5).ceil() as usize).min(spec.height - 1);
    Ok((x0, y0, x1, y1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_is_deterministic() {
        let spec = FactorSpec::default();
        let t = [1, 2, 3, 0, 2];
        let a = render(&spec, &t).unwrap();
        let b = render(&spec, &t).unwrap();
        assert_eq!(a.pixels, b.pixels);
        assert_eq!(a.label, 2);
    }

    #[test]
    fn out_of_range_tuple_is_rejected() {
        let spec = FactorSpec::default();
        assert!(render(&spec, &[0, 0, 8, 0, 0]).is_err());
        assert!(render(&spec, &[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn scale_changes_stay_inside_bbox_union() {
        let spec = FactorSpec::default();
        let t1 = [0, 0, 2, 1, 1];
        let t2 = [0, 3, 2, 1, 1];
        let a = render(&spec, &t1).unwrap();
        let b = render(&spec, &t2).unwrap();
        let (ax0, ay0, ax1, ay1) = glyph_bbox(&spec, &t1).unwrap();
        let (bx0, by0, bx1, by1) = glyph_bbox(&spec, &t2).unwrap();
        let (ux0, uy0) = (ax0.min(bx0), ay0.min(by0));
        let (ux1, uy1) = (ax1.max(bx1), ay1.max(by1));
        for y in 0..spec.height {
            for x in 0..spec.width {
                let inside_union = x >= ux0 && x <= ux1 && y >= uy0 && y <= uy1;
                if !inside_union {
                    let off = (y * spec.width + x) * 3;
                    assert_eq!(a.pixels[off..off + 3], b.pixels[off..off + 3]);
                }
            }
        }
    }

    #[test]
    fn larger_scale_strictly_grows_glyph_area() {
        let spec = FactorSpec::default();
        for shape in 0..4u16 {
            let mut prev = 0usize;
            for scale in 0..4u16 {
                let img = render(&spec, &[shape, scale, 0, 1, 1]).unwrap();
                let area = img
                    .pixels
                    .chunks(3)
                    .filter(|p| *p != [0.12, 0.12, 0.12])
                    .count();
                assert!(area > prev, "shape {} scale {}", shape, scale);
                prev = area;
            }
        }
    }
}
