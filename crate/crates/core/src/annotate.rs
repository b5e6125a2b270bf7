//! Track overlays on output frames.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::tracker::Track;

const BOX_COLOUR: Rgb<u8> = Rgb([255, 40, 40]);
const COAST_COLOUR: Rgb<u8> = Rgb([255, 200, 0]);
const LABEL_COLOUR: Rgb<u8> = Rgb([40, 255, 40]);

// 3x5 digits, one row per entry, most significant bit on the left.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

/// Gray frame as an RGB image.
pub fn to_rgb(frame: &Frame) -> RgbImage {
    let gray = frame.to_gray8();
    RgbImage::from_fn(frame.width() as u32, frame.height() as u32, |x, y| {
        let v = gray[y as usize * frame.width() + x as usize];
        Rgb([v, v, v])
    })
}

/// 1-px rectangle with corners `(x0, y0)` and `(x1, y1)` inclusive, 0-based.
/// Dashed outlines draw two pixels on, two off.
pub fn draw_rect(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64, colour: Rgb<u8>, dashed: bool) {
    let mut k = 0u32;
    let mut plot = |img: &mut RgbImage, x: i64, y: i64| {
        if !dashed || k % 4 < 2 {
            put(img, x, y, colour);
        }
        k += 1;
    };
    for x in x0..=x1 {
        plot(img, x, y0);
    }
    for y in y0 + 1..=y1 {
        plot(img, x1, y);
    }
    for x in (x0..x1).rev() {
        plot(img, x, y1);
    }
    for y in (y0 + 1..y1).rev() {
        plot(img, x0, y);
    }
}

/// Decimal number in the 3x5 font with its top-left at `(x, y)`.
pub fn draw_number(img: &mut RgbImage, x: i64, y: i64, n: u64, colour: Rgb<u8>) {
    for (i, ch) in n.to_string().bytes().enumerate() {
        let glyph = DIGITS[(ch - b'0') as usize];
        let ox = x + 4 * i as i64;
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) != 0 {
                    put(img, ox + col, y + row as i64, colour);
                }
            }
        }
    }
}

/// The frame with one box per track and its id at the box's top-left.
/// Coasting tracks get a dashed box at their predicted position.
pub fn annotate_frame(frame: &Frame, tracks: &[Track]) -> RgbImage {
    let mut img = to_rgb(frame);
    for t in tracks {
        let b = t.bbox();
        let (x0, y0) = (b.x as i64 - 1, b.y as i64 - 1);
        let (x1, y1) = (x0 + b.w as i64 - 1, y0 + b.h as i64 - 1);
        let coasting = !t.is_visible();
        let colour = if coasting { COAST_COLOUR } else { BOX_COLOUR };
        draw_rect(&mut img, x0, y0, x1, y1, colour, coasting);
        // above the box when there is room, inside it otherwise
        let ly = if y0 >= 6 { y0 - 6 } else { y0 + 2 };
        draw_number(&mut img, x0 + 1, ly, t.id, LABEL_COLOUR);
    }
    img
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::format("<memory>", e.to_string()))?;
    Ok(out.into_inner())
}

pub fn write_png(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))
}
