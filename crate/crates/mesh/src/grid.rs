use serde::{Deserialize, Serialize};

/// Coverage state of one texel. `Interior` texels have their center inside
/// a UV triangle; `Dilated` texels received a value from island-margin
/// dilation; `Outside` texels hold the sentinel fill value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coverage {
    Outside,
    Interior,
    Dilated,
}

/// UV-space texel grid with per-texel coverage.
#[derive(Debug, Clone)]
pub struct TexelGrid<T> {
    width: usize,
    height: usize,
    texels: Vec<T>,
    coverage: Vec<Coverage>,
}

impl<T: Clone> TexelGrid<T> {
    pub fn filled(width: usize, height: usize, sentinel: T) -> Self {
        assert!(width >= 1 && height >= 1, "resolution must be >= 1");
        TexelGrid {
            width,
            height,
            texels: vec![sentinel; width * height],
            coverage: vec![Coverage::Outside; width * height],
        }
    }

    /// Value-map preserving coverage.
    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> TexelGrid<U> {
        TexelGrid {
            width: self.width,
            height: self.height,
            texels: self.texels.iter().map(f).collect(),
            coverage: self.coverage.clone(),
        }
    }
}

impl<T> TexelGrid<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.texels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texels.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.texels[self.index(x, y)]
    }

    #[inline]
    pub fn coverage_at(&self, x: usize, y: usize) -> Coverage {
        self.coverage[self.index(x, y)]
    }

    /// True for texels whose center lies inside a UV triangle.
    #[inline]
    pub fn is_covered(&self, x: usize, y: usize) -> bool {
        self.coverage_at(x, y) == Coverage::Interior
    }

    /// True for texels that carry a meaningful value (interior or dilated).
    #[inline]
    pub fn has_value(&self, x: usize, y: usize) -> bool {
        self.coverage_at(x, y) != Coverage::Outside
    }

    pub fn set(&mut self, x: usize, y: usize, value: T, coverage: Coverage) {
        let i = self.index(x, y);
        self.texels[i] = value;
        self.coverage[i] = coverage;
    }

    pub fn texels(&self) -> &[T] {
        &self.texels
    }

    pub fn texels_mut(&mut self) -> &mut [T] {
        &mut self.texels
    }

    pub fn coverage(&self) -> &[Coverage] {
        &self.coverage
    }

    /// UV coordinates of the texel center.
    pub fn texel_center(&self, x: usize, y: usize) -> (f64, f64) {
        (
            (x as f64 + 0.5) / self.width as f64,
            (y as f64 + 0.5) / self.height as f64,
        )
    }

    pub fn same_layout<U>(&self, other: &TexelGrid<U>) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.coverage == other.coverage
    }

    pub fn same_resolution<U>(&self, other: &TexelGrid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        texels: Vec<T>,
        coverage: Vec<Coverage>,
    ) -> Self {
        assert_eq!(texels.len(), width * height);
        assert_eq!(coverage.len(), width * height);
        TexelGrid {
            width,
            height,
            texels,
            coverage,
        }
    }

    pub fn valued_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.coverage
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != Coverage::Outside)
            .map(move |(i, _)| (i % w, i / w))
    }

    pub fn covered_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.coverage
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Coverage::Interior)
            .map(move |(i, _)| (i % w, i / w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_states() {
        let mut g = TexelGrid::filled(4, 2, 0.0f32);
        assert!(!g.has_value(0, 0));
        g.set(1, 0, 0.5, Coverage::Interior);
        g.set(2, 0, 0.25, Coverage::Dilated);
        assert!(g.is_covered(1, 0));
        assert!(!g.is_covered(2, 0));
        assert!(g.has_value(2, 0));
        assert_eq!(g.covered_indices().count(), 1);
        assert_eq!(g.valued_indices().count(), 2);
    }

    #[test]
    fn texel_centers_are_half_offset() {
        let g = TexelGrid::filled(2, 2, 0.0f32);
        assert_eq!(g.texel_center(0, 0), (0.25, 0.25));
        assert_eq!(g.texel_center(1, 1), (0.75, 0.75));
    }
}
