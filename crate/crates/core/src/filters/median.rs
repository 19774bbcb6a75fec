use alloc::vec;
use alloc::vec::Vec;

use super::Boundary;
use crate::error::Result;
use crate::image::Image;

/// Per-channel median over a `(2 radius + 1)^2` window with symmetric
/// padding. The window always holds an odd number of samples.
pub fn median(input: &Image, radius: usize) -> Result<Image> {
    let (h, w, c) = input.dims();
    let r = radius as isize;
    let src = input.data();
    let mut out = vec![0.0; src.len()];
    let mut window: Vec<f64> = Vec::with_capacity((2 * radius + 1) * (2 * radius + 1));
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                window.clear();
                for dy in -r..=r {
                    let sy = Boundary::Symmetric.index(y as isize + dy, h);
                    for dx in -r..=r {
                        let sx = Boundary::Symmetric.index(x as isize + dx, w);
                        window.push(src[(sy * w + sx) * c + ch]);
                    }
                }
                let mid = window.len() / 2;
                let (_, m, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
                out[(y * w + x) * c + ch] = *m;
            }
        }
    }
    Ok(Image::from_raw(h, w, c, out))
}
