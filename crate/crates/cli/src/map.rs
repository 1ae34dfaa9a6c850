//! Classification maps as binary PPM (`P6`).
//!
//! Background and pixels outside the sample are black. Class k is drawn with
//! `PALETTE[(k - 1) % 16]`:
//!
//! | k | RGB | k | RGB |
//! |---|-----|---|-----|
//! | 1 | 230 25 75 | 9 | 240 50 230 |
//! | 2 | 60 180 75 | 10 | 250 190 212 |
//! | 3 | 255 225 25 | 11 | 0 128 128 |
//! | 4 | 0 130 200 | 12 | 220 190 255 |
//! | 5 | 245 130 48 | 13 | 170 110 40 |
//! | 6 | 145 30 180 | 14 | 255 250 200 |
//! | 7 | 70 240 240 | 15 | 128 0 0 |
//! | 8 | 210 245 60 | 16 | 170 255 195 |

use scale_core::ScaleError;

pub const PALETTE: [[u8; 3]; 16] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [210, 245, 60],
    [240, 50, 230],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
];

pub fn class_color(k: u32) -> [u8; 3] {
    if k == 0 {
        [0, 0, 0]
    } else {
        PALETTE[((k - 1) % 16) as usize]
    }
}

/// Renders `labels[i]` at grid cell `pixel_index[i]` of a `(height, width)` grid.
pub fn render_map(labels: &[u32], grid_dims: (usize, usize), pixel_index: &[usize]) -> Result<Vec<u8>, ScaleError> {
    let (h, w) = grid_dims;
    if labels.len() != pixel_index.len() {
        return Err(ScaleError::Data(format!(
            "{} labels but {} pixel indices",
            labels.len(),
            pixel_index.len()
        )));
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    let header = out.len();
    out.resize(header + 3 * h * w, 0);
    for (&k, &pix) in labels.iter().zip(pixel_index) {
        if pix >= h * w {
            return Err(ScaleError::Data(format!("pixel index {pix} outside the {h}x{w} grid")));
        }
        out[header + 3 * pix..header + 3 * pix + 3].copy_from_slice(&class_color(k));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_is_distinct_and_never_black() {
        for (i, a) in PALETTE.iter().enumerate() {
            assert_ne!(*a, [0, 0, 0]);
            assert!(PALETTE[i + 1..].iter().all(|b| b != a));
        }
        assert_eq!(class_color(17), class_color(1));
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(render_map(&[1], (2, 2), &[4]).is_err());
        assert!(render_map(&[1, 2], (2, 2), &[0]).is_err());
    }
}
