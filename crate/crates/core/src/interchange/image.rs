//! Plain-text 8-bit previews. One channel gives PGM (`P2`), three give PPM
//! (`P3`); any other count is written as PGM with the channel planes stacked
//! vertically. Values are clamped to `[0, 1]` and scaled to 255.

use std::fmt::Write as _;
use std::path::Path;

use super::write_file;
use crate::error::Result;
use crate::generators::ImageBuffer;

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_image(img: &ImageBuffer) -> String {
    let shape = img.shape();
    let (h, w, c) = (shape.height, shape.width, shape.channels);
    let px = img.pixels();
    let plane = h * w;
    let mut s = String::new();
    if c == 3 {
        let _ = write!(s, "P3\n{w} {h}\n255\n");
        for y in 0..h {
            let row: Vec<String> = (0..w)
                .flat_map(|x| (0..3).map(move |ch| ch * plane + y * w + x))
                .map(|i| quantize(px[i]).to_string())
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
    } else {
        let _ = write!(s, "P2\n{w} {}\n255\n", h * c);
        for row in px.chunks(w) {
            let row: Vec<String> = row.iter().map(|&v| quantize(v).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
    }
    s
}

pub fn write_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), encode_image(img).as_bytes())
}
