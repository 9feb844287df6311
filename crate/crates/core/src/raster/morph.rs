use super::label::{label_where, Connectivity};
use super::BinaryMask;

/// Flat structuring element given as offsets from its origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<(isize, isize)>,
}

impl StructuringElement {
    /// `size`×`size` square centred on the origin. Even sizes are rounded up.
    pub fn square(size: usize) -> Self {
        let r = (size / 2) as isize;
        let offsets = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).collect();
        Self { offsets }
    }

    /// Plus-shaped element of the given radius.
    pub fn cross(radius: usize) -> Self {
        let r = radius as isize;
        let mut offsets = vec![(0, 0)];
        for d in 1..=r {
            offsets.extend([(d, 0), (-d, 0), (0, d), (0, -d)]);
        }
        Self { offsets }
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    /// Largest coordinate magnitude of any offset.
    pub fn radius(&self) -> usize {
        self.offsets.iter().map(|&(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs())).max().unwrap_or(0)
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::square(3)
    }
}

/// Binary dilation; pixels outside the image count as background.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        se.offsets.iter().any(|&(dx, dy)| sample(mask, x as isize - dx, y as isize - dy, false))
    })
}

/// Binary erosion; pixels outside the image count as foreground, so the
/// image border never eats into a mask.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        se.offsets.iter().all(|&(dx, dy)| sample(mask, x as isize + dx, y as isize + dy, true))
    })
}

/// Dilation followed by erosion with the same element, evaluated as if the
/// mask sat on an unbounded background plane. Always a superset of the input.
pub fn binary_closing(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let r = se.radius();
    let (w, h) = mask.dims();
    let padded = BinaryMask::from_fn(w + 2 * r, h + 2 * r, |x, y| {
        x >= r && y >= r && x - r < w && y - r < h && mask.get(x - r, y - r)
    });
    let closed = erode(&dilate(&padded, se), se);
    BinaryMask::from_fn(w, h, |x, y| closed.get(x + r, y + r))
}

/// Fills enclosed background regions of at most `max_area` pixels.
///
/// Background components are 4-connected (the dual of the 8-connected
/// foreground); any component touching the image border is not a hole.
pub fn fill_holes(mask: &BinaryMask, max_area: usize) -> BinaryMask {
    let (w, h) = mask.dims();
    let (labels, areas) = label_where(w, h, |i| !mask.bits[i], Connectivity::Four);
    let mut touches_border = vec![false; areas.len()];
    for x in 0..w {
        touches_border[labels[x] as usize] = true;
        touches_border[labels[(h - 1) * w + x] as usize] = true;
    }
    for y in 0..h {
        touches_border[labels[y * w] as usize] = true;
        touches_border[labels[y * w + w - 1] as usize] = true;
    }
    let bits = mask
        .bits
        .iter()
        .zip(&labels)
        .map(|(&fg, &l)| fg || (!touches_border[l as usize] && areas[l as usize] <= max_area))
        .collect();
    BinaryMask { width: w, height: h, bits }
}

#[inline]
fn sample(mask: &BinaryMask, x: isize, y: isize, outside: bool) -> bool {
    if x < 0 || y < 0 || x >= mask.width as isize || y >= mask.height as isize {
        outside
    } else {
        mask.get(x as usize, y as usize)
    }
}
