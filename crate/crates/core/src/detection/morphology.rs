//! Binary morphology with filled square structuring elements.
//!
//! Pixels outside the image are background (0). Square elements are
//! separable, so each operator is a row pass followed by a column pass.

use super::BinaryMask;

fn check_se(se: usize) {
    assert!(se % 2 == 1, "structuring element size must be odd, got {se}");
}

/// 1D pass: `all == true` is erosion (every sample in the window set),
/// otherwise dilation (any sample set).
fn pass(src: &[bool], dst: &mut [bool], len: usize, stride: usize, count: usize, lane_stride: usize, radius: usize, all: bool) {
    for lane in 0..count {
        let base = lane * lane_stride;
        // Running count of set pixels inside the window.
        let mut set = 0usize;
        let window = 2 * radius + 1;
        for i in 0..radius.min(len) {
            set += src[base + i * stride] as usize;
        }
        for i in 0..len {
            let enter = i + radius;
            if enter < len {
                set += src[base + enter * stride] as usize;
            }
            if i > radius {
                set -= src[base + (i - radius - 1) * stride] as usize;
            }
            dst[base + i * stride] = if all { set == window } else { set > 0 };
        }
    }
}

fn separable(mask: &BinaryMask, se: usize, all: bool) -> BinaryMask {
    check_se(se);
    let (rows, cols) = (mask.rows(), mask.cols());
    let radius = se / 2;
    let mut tmp = vec![false; rows * cols];
    pass(mask.bits(), &mut tmp, cols, 1, rows, cols, radius, all);
    let mut out = vec![false; rows * cols];
    pass(&tmp, &mut out, rows, cols, cols, 1, radius, all);
    BinaryMask::from_bits(rows, cols, out).expect("shape preserved")
}

pub fn erode(mask: &BinaryMask, se: usize) -> BinaryMask {
    separable(mask, se, true)
}

pub fn dilate(mask: &BinaryMask, se: usize) -> BinaryMask {
    separable(mask, se, false)
}

pub fn open(mask: &BinaryMask, se: usize) -> BinaryMask {
    dilate(&erode(mask, se), se)
}

pub fn close(mask: &BinaryMask, se: usize) -> BinaryMask {
    erode(&dilate(mask, se), se)
}
