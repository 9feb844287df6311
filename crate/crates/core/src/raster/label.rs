use std::collections::VecDeque;

use super::{BinaryMask, LabelMap};

/// Pixel adjacency used for component labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    /// The complementary connectivity used for the background.
    pub fn dual(self) -> Self {
        match self {
            Connectivity::Four => Connectivity::Eight,
            Connectivity::Eight => Connectivity::Four,
        }
    }

    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(isize, isize); 8] =
            [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Labels foreground components 1..K in raster-scan discovery order.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelMap {
    let (labels, _) = label_where(mask.width, mask.height, |i| mask.bits[i], connectivity);
    LabelMap { width: mask.width, height: mask.height, labels }
}

/// Flood-fills every pixel where `member` holds. Returns the label raster and
/// the pixel count of each component (index 0 unused).
pub(crate) fn label_where(
    width: usize,
    height: usize,
    member: impl Fn(usize) -> bool,
    connectivity: Connectivity,
) -> (Vec<u32>, Vec<usize>) {
    let mut labels = vec![0u32; width * height];
    let mut areas = vec![0usize];
    let mut queue = VecDeque::new();
    let offsets = connectivity.offsets();

    for start in 0..width * height {
        if labels[start] != 0 || !member(start) {
            continue;
        }
        let id = areas.len() as u32;
        let mut area = 0;
        labels[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            area += 1;
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for &(dx, dy) in offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                if labels[j] == 0 && member(j) {
                    labels[j] = id;
                    queue.push_back(j);
                }
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        BinaryMask::from_fn(w, h, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn two_blobs_get_discovery_order_labels() {
        let m = mask(&["##...", "##...", ".....", "...##", "...##"]);
        let lm = connected_components(&m, Connectivity::Eight);
        assert_eq!(lm.instance_ids(), vec![1, 2]);
        assert_eq!(lm.get(0, 0), 1);
        assert_eq!(lm.get(4, 4), 2);
    }

    #[test]
    fn diagonal_neighbours_depend_on_connectivity() {
        let m = mask(&["#.", ".#"]);
        assert_eq!(connected_components(&m, Connectivity::Eight).instance_ids().len(), 1);
        assert_eq!(connected_components(&m, Connectivity::Four).instance_ids().len(), 2);
    }

    #[test]
    fn empty_mask_gives_zero_labels() {
        let lm = connected_components(&BinaryMask::empty(7, 3), Connectivity::Four);
        assert!(lm.labels.iter().all(|&l| l == 0));
    }

    /// Union-find component count, independent of the BFS labeller.
    fn union_find_count(m: &BinaryMask, conn: Connectivity) -> usize {
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let (w, h) = m.dims();
        let mut parent: Vec<usize> = (0..w * h).collect();
        for y in 0..h {
            for x in 0..w {
                if !m.get(x, y) {
                    continue;
                }
                for &(dx, dy) in conn.offsets() {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h && m.get(nx as usize, ny as usize) {
                        let a = find(&mut parent, y * w + x);
                        let b = find(&mut parent, ny as usize * w + nx as usize);
                        parent[a] = b;
                    }
                }
            }
        }
        (0..w * h).filter(|&i| m.bits[i] && find(&mut parent, i) == i).count()
    }

    #[test]
    fn exhaustive_4x4_matches_union_find() {
        for bits in 0u32..(1 << 16) {
            let m = BinaryMask::from_fn(4, 4, |x, y| bits >> (y * 4 + x) & 1 == 1);
            for conn in [Connectivity::Four, Connectivity::Eight] {
                let lm = connected_components(&m, conn);
                let k = lm.labels.iter().copied().max().unwrap_or(0) as usize;
                assert_eq!(k, union_find_count(&m, conn), "grid {bits:#06x} {conn:?}");
            }
        }
    }
}
