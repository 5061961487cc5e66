//! Region sampling geometry and per-region activation vectors.

mod io;
mod synth;

pub use io::{
    load_features, parse_features_binary, parse_features_text, save_features,
    write_features_binary, write_features_text, FeatureEncoding,
};
pub(crate) use synth::mix_seed;
pub use synth::{synth_features, CompatTable, StyleRef, SyntheticSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Short side every image is resized to before windows are laid out.
pub const DEFAULT_SHORT_SIDE: u32 = 256;
pub const DEFAULT_WINDOW: u32 = 128;
pub const DEFAULT_STRIDE: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionGeometry {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionFeature {
    pub geometry: RegionGeometry,
    pub activation: Vec<f32>,
}

impl RegionFeature {
    pub fn dim(&self) -> usize {
        self.activation.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub short_side: u32,
    pub window: u32,
    pub stride: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            short_side: DEFAULT_SHORT_SIDE,
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
        }
    }
}

impl Sampling {
    /// Proportional resize so the shorter side equals `short_side`; the
    /// scaled longer side is floored.
    pub fn resized(&self, width: u32, height: u32) -> (u32, u32) {
        let short = self.short_side as u64;
        let (w, h) = (width as u64, height as u64);
        if w <= h {
            (self.short_side, (h * short / w.max(1)) as u32)
        } else {
            ((w * short / h.max(1)) as u32, self.short_side)
        }
    }

    /// Row-major sliding-window lattice over the resized image.
    pub fn plan(&self, image_width: u32, image_height: u32) -> Result<Vec<RegionGeometry>> {
        if image_width == 0 || image_height == 0 || self.stride == 0 || self.window == 0 {
            return Err(Error::Config(format!(
                "degenerate sampling {image_width}x{image_height}, window {}, stride {}",
                self.window, self.stride
            )));
        }
        let (w, h) = self.resized(image_width, image_height);
        if self.window > w || self.window > h {
            return Err(Error::WindowTooLarge {
                window: self.window,
                width: w,
                height: h,
            });
        }
        let cols = (w - self.window) / self.stride + 1;
        let rows = (h - self.window) / self.stride + 1;
        let mut out = Vec::with_capacity((cols * rows) as usize);
        for r in 0..rows {
            for c in 0..cols {
                out.push(RegionGeometry {
                    x: c * self.stride,
                    y: r * self.stride,
                    width: self.window,
                    height: self.window,
                });
            }
        }
        Ok(out)
    }
}

/// [`Sampling::plan`] with the default 256-pixel short side.
pub fn plan_regions(
    image_width: u32,
    image_height: u32,
    window: u32,
    stride: u32,
) -> Result<Vec<RegionGeometry>> {
    Sampling {
        short_side: DEFAULT_SHORT_SIDE,
        window,
        stride,
    }
    .plan(image_width, image_height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn resize_then_grid() {
        assert_eq!(Sampling::default().resized(512, 1024), (256, 512));
        assert_eq!(plan_regions(512, 1024, 128, 32).unwrap().len(), 5 * 13);
        assert_eq!(plan_regions(256, 256, 128, 32).unwrap().len(), 25);
    }

    #[test]
    fn row_major_order() {
        let regions = plan_regions(256, 288, 128, 32).unwrap();
        assert_eq!(
            regions[0],
            RegionGeometry {
                x: 0,
                y: 0,
                width: 128,
                height: 128
            }
        );
        assert_eq!(regions[1].x, 32);
        assert_eq!(regions[1].y, 0);
        assert_eq!(regions[5].x, 0);
        assert_eq!(regions[5].y, 32);
    }

    #[test]
    fn window_too_large() {
        assert!(matches!(
            plan_regions(100, 100, 300, 32),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn floor_on_major_side() {
        // 300x200 -> 384x256 exactly; 301x200 -> 385.28 floored to 385.
        assert_eq!(Sampling::default().resized(300, 200), (384, 256));
        assert_eq!(Sampling::default().resized(301, 200), (385, 256));
    }

    proptest! {
        #[test]
        fn grid_count_and_bounds(w in 16u32..4000, h in 16u32..4000, window in 16u32..256, stride in 1u32..96) {
            let s = Sampling { short_side: 256, window, stride };
            let (rw, rh) = s.resized(w, h);
            match s.plan(w, h) {
                Ok(regions) => {
                    let expected = ((rw - window) / stride + 1) * ((rh - window) / stride + 1);
                    prop_assert_eq!(regions.len() as u32, expected);
                    for r in &regions {
                        prop_assert!(r.x + r.width <= rw && r.y + r.height <= rh);
                        prop_assert_eq!(r.x % stride, 0);
                        prop_assert_eq!(r.y % stride, 0);
                        prop_assert_eq!((r.width, r.height), (window, window));
                    }
                }
                Err(_) => prop_assert!(window > rw || window > rh),
            }
        }
    }
}
