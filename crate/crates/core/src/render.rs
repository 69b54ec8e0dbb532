//! SVG drawings of cylinder images.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::linalg::Vec2;
use crate::pressure::word_count;
use crate::symbolic::Word;
use crate::system::{AffineMap, IfsSystem};

pub const RENDER_CAP: u64 = 100_000;

/// Shape whose images are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseShape {
    UnitSquare,
    /// 64-gon approximating the bounding ball.
    Ball,
}

/// The unit square when every map sends it into itself, else the ball.
pub fn default_shape(sys: &IfsSystem) -> BaseShape {
    let sq = Polygon::unit_square();
    let inside =
        |p: Vec2| (-1e-12..=1.0 + 1e-12).contains(&p.x) && (-1e-12..=1.0 + 1e-12).contains(&p.y);
    let ok = sys
        .maps()
        .iter()
        .all(|m| sq.vertices.iter().all(|&p| inside(m.apply(p))));
    if ok {
        BaseShape::UnitSquare
    } else {
        BaseShape::Ball
    }
}

fn base_polygon(sys: &IfsSystem, shape: BaseShape) -> Polygon {
    match shape {
        BaseShape::UnitSquare => Polygon::unit_square(),
        BaseShape::Ball => Polygon::circumscribed(sys.center(), sys.radius(), 64),
    }
}

/// `(word, polygon)` for every `f_w(base)` with `|w| = depth`.
pub fn cylinder_shapes(
    sys: &IfsSystem,
    depth: usize,
    shape: BaseShape,
) -> Result<Vec<(Word, Polygon)>> {
    let count = word_count(sys.len(), depth)?;
    if count > RENDER_CAP {
        return Err(Error::BudgetExceeded(format!(
            "{count} cylinders at depth {depth} exceeds {RENDER_CAP}"
        )));
    }
    let base = base_polygon(sys, shape);
    let mut out = Vec::with_capacity(count as usize);
    let mut stack = vec![(Word::empty(), AffineMap::IDENTITY)];
    while let Some((w, f)) = stack.pop() {
        if w.len() == depth {
            out.push((w, base.transform(&f.a, f.t)));
            continue;
        }
        for k in (0..sys.len()).rev() {
            stack.push((w.pushed(k), f.compose(sys.map(k))));
        }
    }
    Ok(out)
}

fn colour(prefix: Option<usize>, n: usize) -> String {
    match prefix {
        None => "#9aa5b1".into(),
        Some(i) => format!("hsl({:.1},65%,50%)", 360.0 * i as f64 / n as f64),
    }
}

/// SVG of the depth-`depth` cylinders, coloured by first symbol, with the
/// view box fitted to the bounding ball.
pub fn render_svg(sys: &IfsSystem, depth: usize, shape: BaseShape) -> Result<String> {
    let shapes = cylinder_shapes(sys, depth, shape)?;
    let c = sys.center();
    let r = sys.radius();
    let size = 2.0 * r;
    let stroke = size * 1e-3;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}" width="800" height="800">"#,
        c.x - r,
        -(c.y + r),
        size,
        size
    );
    let _ = writeln!(svg, r#"<g transform="scale(1,-1)">"#);
    for (w, p) in &shapes {
        let pts: Vec<String> = p
            .vertices
            .iter()
            .map(|v| format!("{:.6},{:.6}", v.x, v.y))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon data-word="{}" points="{}" fill="{}" fill-opacity="0.75" stroke="black" stroke-width="{:.6}"/>"#,
            w,
            pts.join(" "),
            colour((!w.is_empty()).then(|| w.get(0)), sys.len()),
            stroke
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    #[test]
    fn figure1_first_level() {
        let fig = Preset::Figure1.system();
        assert_eq!(default_shape(&fig), BaseShape::UnitSquare);
        let shapes = cylinder_shapes(&fig, 1, BaseShape::UnitSquare).unwrap();
        assert_eq!(shapes.len(), 6);
        for (w, p) in &shapes[..5] {
            assert!((p.area() - 1.0 / 15.0).abs() < 1e-15, "{w}");
        }
        // The sixth map shears the square: area |det| = 0.03.
        assert!((shapes[5].1.area() - 0.03).abs() < 1e-15);
        let svg = render_svg(&fig, 1, BaseShape::UnitSquare).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 6);
    }

    #[test]
    fn grid_tiles_at_depth_two() {
        let grid = Preset::Grid2x3.system();
        let shapes = cylinder_shapes(&grid, 2, BaseShape::UnitSquare).unwrap();
        assert_eq!(shapes.len(), 36);
        let area: f64 = shapes.iter().map(|s| s.1.area()).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depth_zero_and_budget() {
        let grid = Preset::Grid2x3.system();
        let svg = render_svg(&grid, 0, BaseShape::Ball).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(matches!(
            render_svg(&grid, 7, BaseShape::UnitSquare),
            Err(Error::BudgetExceeded(_))
        ));
        assert_eq!(
            render_svg(&grid, 2, BaseShape::UnitSquare).unwrap(),
            render_svg(&grid, 2, BaseShape::UnitSquare).unwrap()
        );
    }
}
