//! Orientation families of view stacks.
//!
//! Emission order within a family:
//!
//! * 0°: one stack per row `s`, ascending, views ordered by `t`.
//! * 90°: one stack per column `t`, ascending, views ordered by `s`.
//! * 45°: maximal chains `(s,t),(s+1,t+1),…` with origins
//!   `(S,1),(S−1,1),…,(1,1),(1,2),…,(1,T)`.
//! * 135°: maximal chains `(s,t),(s+1,t−1),…` starting on the first row or
//!   last column, ordered by `s + t` ascending. The chain ending at
//!   `(k,1)` comes `k`-th, then the chains ending at `(S,2),…,(S,T)`.
//!
//! Angular coordinates in this module are 1-based.

use ndarray::Array2;

use crate::colorspace::ChannelGrid;
use crate::tucker::Tensor3;

/// Shortest stack used for features: the quadratic fit needs three points.
pub const DEFAULT_MIN_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::Deg0,
        Orientation::Deg45,
        Orientation::Deg90,
        Orientation::Deg135,
    ];

    pub fn degrees(self) -> u32 {
        match self {
            Orientation::Deg0 => 0,
            Orientation::Deg45 => 45,
            Orientation::Deg90 => 90,
            Orientation::Deg135 => 135,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Orientation::Deg0 => 0,
            Orientation::Deg45 => 1,
            Orientation::Deg90 => 2,
            Orientation::Deg135 => 3,
        }
    }
}

/// A channel's views along one orientation, as an `X × Y × V` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewStack {
    pub data: Tensor3,
    pub orientation: Orientation,
    /// 0 = L*, 1 = a*, 2 = b*.
    pub channel: usize,
    /// 1-based angular coordinates of each view, in stack order.
    pub coords: Vec<(usize, usize)>,
}

impl ViewStack {
    /// A horizontal stack built directly from images, for tests and tools
    /// that do not start from a light field.
    pub fn from_views(views: Vec<Array2<f64>>) -> Self {
        let coords = (1..=views.len()).map(|t| (1, t)).collect();
        Self {
            data: Tensor3::from_slices(&views).expect("equally sized views"),
            orientation: Orientation::Deg0,
            channel: 0,
            coords,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn origin(&self) -> (usize, usize) {
        self.coords[0]
    }

    pub fn view(&self, i: usize) -> Array2<f64> {
        self.data.slice3(i)
    }
}

/// Angular coordinate chains for one orientation of an `S × T` grid.
pub fn stack_coords(angular: (usize, usize), orientation: Orientation) -> Vec<Vec<(usize, usize)>> {
    let (s_len, t_len) = angular;
    let chain = |mut s: usize, mut t: usize, ds: isize, dt: isize| {
        let mut out = Vec::new();
        while (1..=s_len).contains(&s) && (1..=t_len).contains(&t) {
            out.push((s, t));
            s = (s as isize + ds) as usize;
            let next_t = t as isize + dt;
            if next_t < 1 {
                break;
            }
            t = next_t as usize;
        }
        out
    };
    match orientation {
        Orientation::Deg0 => (1..=s_len).map(|s| chain(s, 1, 0, 1)).collect(),
        Orientation::Deg90 => (1..=t_len).map(|t| chain(1, t, 1, 0)).collect(),
        Orientation::Deg45 => {
            let mut out: Vec<_> = (1..=s_len).rev().map(|s| chain(s, 1, 1, 1)).collect();
            out.extend((2..=t_len).map(|t| chain(1, t, 1, 1)));
            out
        }
        Orientation::Deg135 => {
            let mut out: Vec<_> = (1..=t_len).map(|t| chain(1, t, 1, -1)).collect();
            out.extend((2..=s_len).map(|s| chain(s, t_len, 1, -1)));
            out
        }
    }
}

/// Builds every stack of one orientation from a channel grid.
pub fn build_stacks(
    grid: &ChannelGrid,
    orientation: Orientation,
    channel: usize,
) -> Vec<ViewStack> {
    stack_coords(grid.angular, orientation)
        .into_iter()
        .map(|coords| {
            let views: Vec<Array2<f64>> = coords
                .iter()
                .map(|&(s, t)| grid.view(s - 1, t - 1).clone())
                .collect();
            ViewStack {
                data: Tensor3::from_slices(&views).expect("grid views share a size"),
                orientation,
                channel,
                coords,
            }
        })
        .collect()
}

/// Drops stacks shorter than `min_len`, keeping order. May return nothing.
pub fn filter_usable(stacks: Vec<ViewStack>, min_len: usize) -> Vec<ViewStack> {
    assert!(min_len >= 1, "min_len must be at least 1");
    stacks.into_iter().filter(|s| s.len() >= min_len).collect()
}
