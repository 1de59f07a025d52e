//! Synthetic test imagery: a 5x7 bitmap font and simple text pages.

use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;

/// Characters the font can draw.
pub const CHARSET: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,:-";

#[rustfmt::skip]
const GLYPHS: [(char, [&str; 7]); 40] = [
    ('A', [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('B', ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."]),
    ('C', [".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."]),
    ('D', ["###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."]),
    ('E', ["#####", "#....", "#....", "####.", "#....", "#....", "#####"]),
    ('F', ["#####", "#....", "#....", "####.", "#....", "#....", "#...."]),
    ('G', [".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"]),
    ('H', ["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('I', [".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('J', ["..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."]),
    ('K', ["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"]),
    ('L', ["#....", "#....", "#....", "#....", "#....", "#....", "#####"]),
    ('M', ["#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"]),
    ('N', ["#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"]),
    ('O', [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('P', ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."]),
    ('Q', [".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"]),
    ('R', ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"]),
    ('S', [".####", "#....", "#....", ".###.", "....#", "....#", "####."]),
    ('T', ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."]),
    ('U', ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('V', ["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."]),
    ('W', ["#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."]),
    ('X', ["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"]),
    ('Y', ["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."]),
    ('Z', ["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"]),
    ('0', [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."]),
    ('1', ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('2', [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"]),
    ('3', ["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."]),
    ('4', ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."]),
    ('5', ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."]),
    ('6', ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."]),
    ('7', ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."]),
    ('8', [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."]),
    ('9', [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."]),
    ('.', [".....", ".....", ".....", ".....", ".....", ".##..", ".##.."]),
    (',', [".....", ".....", ".....", ".....", ".##..", "..#..", ".#..."]),
    (':', [".....", ".##..", ".##..", ".....", ".##..", ".##..", "....."]),
    ('-', [".....", ".....", ".....", "#####", ".....", ".....", "....."]),
];

/// Bitmap of `c` (upper-cased) as `GLYPH_H` rows of `GLYPH_W` booleans, or
/// `None` for characters outside [`CHARSET`]. Space is blank.
pub fn glyph(c: char) -> Option<[[bool; GLYPH_W]; GLYPH_H]> {
    let c = c.to_ascii_uppercase();
    if c == ' ' {
        return Some([[false; GLYPH_W]; GLYPH_H]);
    }
    let (_, rows) = GLYPHS.iter().find(|(g, _)| *g == c)?;
    let mut out = [[false; GLYPH_W]; GLYPH_H];
    for (r, row) in rows.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            out[r][x] = ch == '#';
        }
    }
    Some(out)
}

/// Layout parameters for [`render_text`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TextStyle {
    /// Pixels per font dot.
    pub scale: usize,
    /// Gap between characters and between lines, in font dots.
    pub char_gap: usize,
    pub line_gap: usize,
    pub margin: usize,
    pub foreground: u8,
    pub background: u8,
}

impl Default for TextStyle {
    fn default() -> Self {
        TextStyle {
            scale: 4,
            char_gap: 1,
            line_gap: 3,
            margin: 40,
            foreground: 0,
            background: 255,
        }
    }
}

impl TextStyle {
    pub fn cell_width(&self) -> usize {
        (GLYPH_W + self.char_gap) * self.scale
    }

    pub fn line_height(&self) -> usize {
        (GLYPH_H + self.line_gap) * self.scale
    }

    /// Characters per line and lines per page that fit in `width x height`.
    pub fn capacity(&self, width: usize, height: usize) -> (usize, usize) {
        let w = width.saturating_sub(2 * self.margin);
        let h = height.saturating_sub(2 * self.margin);
        (w / self.cell_width(), h / self.line_height())
    }
}

/// Draws text lines onto a `width x height` page. Characters outside the
/// font are drawn blank.
pub fn render_text(lines: &[String], width: u32, height: u32, style: &TextStyle) -> GrayImage {
    let mut img = GrayImage::from_pixel(width, height, Luma([style.background]));
    let s = style.scale;
    for (li, line) in lines.iter().enumerate() {
        let y0 = style.margin + li * style.line_height();
        for (ci, c) in line.chars().enumerate() {
            let x0 = style.margin + ci * style.cell_width();
            let Some(g) = glyph(c) else { continue };
            for (gy, row) in g.iter().enumerate() {
                for (gx, &on) in row.iter().enumerate() {
                    if !on {
                        continue;
                    }
                    for dy in 0..s {
                        for dx in 0..s {
                            let (x, y) = ((x0 + gx * s + dx) as u32, (y0 + gy * s + dy) as u32);
                            if x < width && y < height {
                                img.put_pixel(x, y, Luma([style.foreground]));
                            }
                        }
                    }
                }
            }
        }
    }
    img
}

/// Random words from the font's letters and digits, laid out to fill a page.
pub fn random_text(rng: &mut impl Rng, chars_per_line: usize, lines: usize) -> Vec<String> {
    let alphabet: Vec<char> = CHARSET.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    (0..lines)
        .map(|_| {
            let mut line = String::new();
            while line.len() < chars_per_line {
                let len = rng.random_range(2..=8);
                let word: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
                if line.len() + word.len() + usize::from(!line.is_empty()) > chars_per_line {
                    break;
                }
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&word);
            }
            line
        })
        .collect()
}

/// A seeded random text page and its transcript.
pub fn text_page(seed: u64, width: u32, height: u32, style: &TextStyle) -> (GrayImage, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cols, rows) = style.capacity(width as usize, height as usize);
    let lines = random_text(&mut rng, cols, rows);
    (render_text(&lines, width, height, style), lines)
}
