//! PNG heatmaps of sweep results with axes in units of ω and a probability
//! colorbar on the fixed scale [0, 1].

use crate::run::SweepResult;
use image::{ImageFormat, Rgb, RgbImage};
use std::io::Cursor;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    Viridis,
    Gray,
}

impl std::str::FromStr for Palette {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "viridis" => Ok(Palette::Viridis),
            "gray" | "grey" => Ok(Palette::Gray),
            _ => Err(format!("unknown palette \"{s}\" (viridis, gray)")),
        }
    }
}

pub const NAN_COLOR: Rgb<u8> = Rgb([255, 0, 255]);
const BG: Rgb<u8> = Rgb([255, 255, 255]);
const INK: Rgb<u8> = Rgb([0, 0, 0]);

const VIRIDIS: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

impl Palette {
    /// Color of a probability; values are clamped to [0, 1].
    pub fn color(self, v: f64) -> Rgb<u8> {
        if v.is_nan() {
            return NAN_COLOR;
        }
        let x = v.clamp(0.0, 1.0);
        match self {
            Palette::Gray => {
                let g = (255.0 * x).round() as u8;
                Rgb([g, g, g])
            }
            Palette::Viridis => {
                let pos = x * (VIRIDIS.len() - 1) as f64;
                let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
                let f = pos - i as f64;
                let c = |k: usize| (VIRIDIS[i][k] + f * (VIRIDIS[i + 1][k] - VIRIDIS[i][k])).round() as u8;
                Rgb([c(0), c(1), c(2)])
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("incomplete result: {got} values for a {na}x{ne} grid")]
    Incomplete { got: usize, na: usize, ne: usize },
    #[error("png encoding: {0}")]
    Encode(String),
}

// 3x5 bitmaps, rows top to bottom, bit 2 = left column
fn glyph(c: char) -> [u8; 5] {
    match c {
        '0' => [7, 5, 5, 5, 7],
        '1' => [2, 6, 2, 2, 7],
        '2' => [7, 1, 7, 4, 7],
        '3' => [7, 1, 7, 1, 7],
        '4' => [5, 5, 7, 1, 1],
        '5' => [7, 4, 7, 1, 7],
        '6' => [7, 4, 7, 5, 7],
        '7' => [7, 1, 1, 1, 1],
        '8' => [7, 5, 7, 5, 7],
        '9' => [7, 5, 7, 1, 7],
        '-' => [0, 0, 7, 0, 0],
        '.' => [0, 0, 0, 0, 2],
        '/' => [1, 1, 2, 4, 4],
        'A' => [2, 5, 7, 5, 5],
        'E' => [7, 4, 6, 4, 7],
        'P' => [6, 5, 6, 4, 4],
        'W' => [5, 5, 5, 7, 5],
        _ => [0; 5],
    }
}

const SCALE: u32 = 2;
const CHAR_W: u32 = 4 * SCALE;
const CHAR_H: u32 = 5 * SCALE;

fn text_width(s: &str) -> u32 {
    (s.chars().count() as u32 * CHAR_W).saturating_sub(SCALE)
}

fn draw_text(img: &mut RgbImage, x: i64, y: i64, s: &str) {
    for (k, c) in s.chars().enumerate() {
        let g = glyph(c);
        for (row, bits) in g.iter().enumerate() {
            for col in 0..3 {
                if bits & (4 >> col) == 0 {
                    continue;
                }
                for dy in 0..SCALE {
                    for dx in 0..SCALE {
                        let px = x + (k as u32 * CHAR_W + col * SCALE + dx) as i64;
                        let py = y + (row as u32 * SCALE + dy) as i64;
                        put(img, px, py, INK);
                    }
                }
            }
        }
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

/// Tick values at 1, 2 or 5 times a power of ten, about five per axis.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.2}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

const LEFT: u32 = 64;
const BOTTOM: u32 = 44;
const TOP: u32 = 12;
const BAR_GAP: u32 = 12;
const BAR_W: u32 = 16;
const RIGHT: u32 = BAR_GAP + BAR_W + 48;

/// Renders the heatmap: ε₀/ω horizontal, A/ω vertical (increasing upward).
pub fn render(r: &SweepResult, palette: Palette) -> Result<RgbImage, PlotError> {
    let (na, ne) = (r.a_axis.len(), r.eps0_axis.len());
    if na == 0 || ne == 0 || r.values.len() != na * ne {
        return Err(PlotError::Incomplete { got: r.values.len(), na, ne });
    }
    let cell = (600 / na.max(ne) as u32).clamp(1, 200);
    let (pw, ph) = (ne as u32 * cell, na as u32 * cell);
    let mut img = RgbImage::from_pixel(LEFT + pw + RIGHT, TOP + ph + BOTTOM, BG);

    for ia in 0..na {
        for ie in 0..ne {
            let c = palette.color(r.value(ia, ie));
            let x0 = LEFT + ie as u32 * cell;
            let y0 = TOP + (na - 1 - ia) as u32 * cell;
            for dy in 0..cell {
                for dx in 0..cell {
                    img.put_pixel(x0 + dx, y0 + dy, c);
                }
            }
        }
    }

    // frame
    for x in LEFT - 1..=LEFT + pw {
        put(&mut img, x as i64, (TOP - 1) as i64, INK);
        put(&mut img, x as i64, (TOP + ph) as i64, INK);
    }
    for y in TOP - 1..=TOP + ph {
        put(&mut img, (LEFT - 1) as i64, y as i64, INK);
        put(&mut img, (LEFT + pw) as i64, y as i64, INK);
    }

    let pos = |axis: &[f64], v: f64, len: u32| -> f64 {
        let (lo, hi) = (axis[0], axis[axis.len() - 1]);
        if axis.len() == 1 || hi == lo {
            return len as f64 / 2.0;
        }
        (v - lo) / (hi - lo) * (len - cell) as f64 + cell as f64 / 2.0
    };

    let (elo, ehi) = (r.eps0_axis[0], r.eps0_axis[ne - 1]);
    for t in ticks(elo, ehi) {
        let x = LEFT as i64 + pos(&r.eps0_axis, t, pw).round() as i64;
        for dy in 0..5 {
            put(&mut img, x, (TOP + ph + 1 + dy) as i64, INK);
        }
        let lbl = tick_label(t);
        draw_text(&mut img, x - text_width(&lbl) as i64 / 2, (TOP + ph + 8) as i64, &lbl);
    }
    let xl = "E0/W";
    draw_text(&mut img, (LEFT + pw / 2) as i64 - text_width(xl) as i64 / 2, (TOP + ph + 26) as i64, xl);

    let (alo, ahi) = (r.a_axis[0], r.a_axis[na - 1]);
    for t in ticks(alo, ahi) {
        let y = (TOP + ph) as i64 - pos(&r.a_axis, t, ph).round() as i64;
        for dx in 0..5 {
            put(&mut img, (LEFT - 2 - dx) as i64, y, INK);
        }
        let lbl = tick_label(t);
        draw_text(&mut img, (LEFT - 9) as i64 - text_width(&lbl) as i64, y - CHAR_H as i64 / 2, &lbl);
    }
    draw_text(&mut img, 2, TOP as i64, "A/W");

    // colorbar, 0 at the bottom
    let bx = LEFT + pw + BAR_GAP;
    for y in 0..ph {
        let v = if ph > 1 { 1.0 - y as f64 / (ph - 1) as f64 } else { 0.5 };
        let c = palette.color(v);
        for dx in 0..BAR_W {
            img.put_pixel(bx + dx, TOP + y, c);
        }
    }
    for v in [0.0, 0.5, 1.0] {
        let y = (TOP + ph) as i64 - 1 - (v * (ph.max(2) - 1) as f64).round() as i64;
        let lbl = tick_label(v);
        draw_text(&mut img, (bx + BAR_W + 4) as i64, y - CHAR_H as i64 / 2, &lbl);
    }
    draw_text(&mut img, (bx + BAR_W + 4) as i64, (TOP + ph + 8) as i64, "P");
    Ok(img)
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, PlotError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png).map_err(|e| PlotError::Encode(e.to_string()))?;
    Ok(buf.into_inner())
}

/// Writes a PNG heatmap of `r` to `path`.
pub fn emit_plot(r: &SweepResult, palette: Palette, path: &Path) -> Result<(), PlotError> {
    let bytes = encode_png(&render(r, palette)?)?;
    std::fs::write(path, bytes)?;
    Ok(())
}
