//! Hand-written SVG scatter of the first two principal components, clusters
//! color-coded and noise in gray.

const PALETTE: [&str; 10] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcf60c",
    "#008080", "#9a6324",
];
const NOISE_COLOR: &str = "#9e9e9e";

pub fn scatter_svg(points: &[Vec<f64>], clusters: &[i64]) -> String {
    assert_eq!(points.len(), clusters.len());
    let (w, h, pad) = (640.0, 640.0, 40.0);
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let (x, y) = (p[0], *p.get(1).unwrap_or(&0.0));
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    if points.is_empty() || !min_x.is_finite() {
        min_x = 0.0;
        max_x = 1.0;
        min_y = 0.0;
        max_y = 1.0;
    }
    let span_x = (max_x - min_x).max(1e-12);
    let span_y = (max_y - min_y).max(1e-12);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">mined clusters, first two principal components</text>\n",
        w / 2.0
    ));
    for (p, &c) in points.iter().zip(clusters) {
        let x = pad + (p[0] - min_x) / span_x * (w - 2.0 * pad);
        let y = h - pad - (p.get(1).unwrap_or(&0.0) - min_y) / span_y * (h - 2.0 * pad);
        let color = if c < 0 {
            NOISE_COLOR
        } else {
            PALETTE[(c as usize) % PALETTE.len()]
        };
        svg.push_str(&format!(
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.75\"/>\n",
            x, y, color
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn produces_a_circle_per_point() {
        let points = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5]];
        let svg = scatter_svg(&points, &[0, 1, -1]);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains(NOISE_COLOR));
        assert!(svg.starts_with("<svg "));
    }
}
