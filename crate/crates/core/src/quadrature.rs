//! Composite Gauss–Legendre rules on intervals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of a composite Gauss–Legendre rule on `[a, b]` split into
/// `panels` equal panels with `points` nodes each.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, points: usize) -> Vec<(f64, f64)> {
    let panels = panels.max(1);
    let points = NonZeroUsize::new(points.max(1)).expect("nonzero");
    let rule = GaussLegendre::new(points);
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * points.get());
    for p in 0..panels {
        let lo = a + width * p as f64;
        let (mid, half) = (lo + 0.5 * width, 0.5 * width);
        out.extend(
            rule.as_node_weight_pairs()
                .iter()
                .map(|&(x, w)| (mid + half * x, half * w)),
        );
    }
    out
}
