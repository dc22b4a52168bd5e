use serde::{Deserialize, Serialize};

use super::{GrayFrame, Patch};
use crate::error::{Error, Result};

/// Integer pixel offset found by a template search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Displacement {
    pub dx: i32,
    pub dy: i32,
}

impl Displacement {
    pub const ZERO: Displacement = Displacement { dx: 0, dy: 0 };

    pub fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    /// True when the offset sits on the border of the search window.
    pub fn is_saturated(&self, radius: u32) -> bool {
        self.dx.unsigned_abs() == radius || self.dy.unsigned_abs() == radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub displacement: Displacement,
    /// ZNCC score in [-1, 1].
    pub score: f64,
}

/// Borrowed floating-point image, row-major.
#[derive(Debug, Clone, Copy)]
pub struct FloatImage<'a> {
    pub width: usize,
    pub height: usize,
    pub data: &'a [f64],
}

/// Searches `frame` for `template` over every integer offset in
/// `[-radius, radius]²` around `center`.
///
/// At offset `d` the template's top-left corner sits at
/// `floor(center - size / 2) + d`. Placements that leave the frame are
/// skipped. The score is zero-mean normalized cross-correlation, taken as 0
/// when either side has zero variance. Ties go to the smallest `dx² + dy²`,
/// then the smallest `dy`, then the smallest `dx`.
pub fn zncc_match(template: &Patch, frame: &GrayFrame, center: (f64, f64), radius: u32) -> Result<Match> {
    search(
        template.pixels(),
        template.width(),
        template.height(),
        frame.pixels(),
        frame.width(),
        frame.height(),
        center,
        radius,
    )
}

/// [`zncc_match`] over floating-point intensities.
pub fn zncc_match_f64(
    template: FloatImage<'_>,
    image: FloatImage<'_>,
    center: (f64, f64),
    radius: u32,
) -> Result<Match> {
    for img in [&template, &image] {
        if img.data.len() != img.width * img.height {
            return Err(Error::validation(None, "float image buffer size mismatch"));
        }
    }
    search(
        template.data,
        template.width,
        template.height,
        image.data,
        image.width,
        image.height,
        center,
        radius,
    )
}

/// Offsets in tie-break order.
fn search_order(radius: i32) -> Vec<(i32, i32)> {
    let mut order: Vec<(i32, i32)> = (-radius..=radius)
        .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
        .collect();
    order.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
    order
}

#[allow(clippy::too_many_arguments)]
fn search<T: Copy + Into<f64>>(
    tpl: &[T],
    tw: usize,
    th: usize,
    img: &[T],
    iw: usize,
    ih: usize,
    center: (f64, f64),
    radius: u32,
) -> Result<Match> {
    if radius == 0 {
        return Err(Error::validation(None, "search radius must be at least 1"));
    }
    let infeasible = Error::MatchInfeasible {
        template_w: tw,
        template_h: th,
        frame_w: iw,
        frame_h: ih,
    };
    if tw > iw || th > ih || tw == 0 || th == 0 {
        return Err(infeasible);
    }

    let n = (tw * th) as f64;
    let tmean = tpl.iter().map(|&v| v.into()).sum::<f64>() / n;
    let tz: Vec<f64> = tpl.iter().map(|&v| v.into() - tmean).collect();
    let tvar: f64 = tz.iter().map(|v| v * v).sum();

    let base_x = (center.0 - tw as f64 / 2.0).floor() as i64;
    let base_y = (center.1 - th as f64 / 2.0).floor() as i64;
    let max_left = (iw - tw) as i64;
    let max_top = (ih - th) as i64;

    let mut best: Option<Match> = None;
    for (dx, dy) in search_order(radius as i32) {
        let left = base_x + i64::from(dx);
        let top = base_y + i64::from(dy);
        if left < 0 || top < 0 || left > max_left || top > max_top {
            continue;
        }
        let score = window_score(&tz, tvar, tw, th, img, iw, left as usize, top as usize);
        if best.is_none_or(|b| score > b.score) {
            best = Some(Match {
                displacement: Displacement::new(dx, dy),
                score,
            });
        }
    }
    best.ok_or(infeasible)
}

/// Single pass over the window. For 8-bit input every sum except `cross`
/// is an exact integer in f64, so a flat window yields exactly zero variance.
#[allow(clippy::too_many_arguments)]
fn window_score<T: Copy + Into<f64>>(
    tz: &[f64],
    tvar: f64,
    tw: usize,
    th: usize,
    img: &[T],
    iw: usize,
    left: usize,
    top: usize,
) -> f64 {
    if tvar == 0.0 {
        return 0.0;
    }
    let n = (tw * th) as f64;
    let (mut sum, mut sq, mut cross) = (0.0, 0.0, 0.0);
    for (r, trow) in (top..top + th).zip(tz.chunks_exact(tw)) {
        let row = &img[r * iw + left..r * iw + left + tw];
        for (&v, &t) in row.iter().zip(trow) {
            let v: f64 = v.into();
            sum += v;
            sq += v * v;
            cross += t * v;
        }
    }
    // n² times the population variance
    let var_n = n * sq - sum * sum;
    if var_n <= 0.0 {
        return 0.0;
    }
    (cross / (tvar * var_n / n).sqrt()).clamp(-1.0, 1.0)
}
