//! Minimal SVG heatmaps on a logarithmic color scale.

use std::fmt::Write;

/// Viridis-like anchors, dark (low) to bright (high).
const RAMP: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

/// Number of distinct colors; adjacent cells of equal color are merged.
const LEVELS: usize = 64;

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Cells per axis.
    pub nx: usize,
    pub ny: usize,
    /// `values[ix * ny + iy]`; non-finite values render at the upper clip.
    pub values: &'a [f64],
    pub clip: [f64; 2],
}

fn level(v: f64, clip: [f64; 2]) -> usize {
    let v = if v.is_finite() {
        v.clamp(clip[0], clip[1])
    } else {
        clip[1]
    };
    let t = (v.ln() - clip[0].ln()) / (clip[1].ln() - clip[0].ln());
    ((t * (LEVELS - 1) as f64).round() as usize).min(LEVELS - 1)
}

fn color(level: usize) -> String {
    let t = level as f64 / (LEVELS - 1) as f64 * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    let mix = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

impl Heatmap<'_> {
    pub fn render(&self) -> String {
        let plot = 600.0;
        let (left, top, legend_w) = (70.0, 40.0, 80.0);
        let cw = plot / self.nx as f64;
        let ch = plot / self.ny as f64;
        let width = left + plot + legend_w + 20.0;
        let height = top + plot + 60.0;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" shape-rendering="crispEdges">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            left + plot / 2.0,
            self.title
        );
        // rows run along x for fixed y; σ_y grows upward
        for iy in 0..self.ny {
            let y = top + plot - (iy + 1) as f64 * ch;
            let mut ix = 0;
            while ix < self.nx {
                let l = level(self.values[ix * self.ny + iy], self.clip);
                let mut run = 1;
                while ix + run < self.nx && level(self.values[(ix + run) * self.ny + iy], self.clip) == l {
                    run += 1;
                }
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                    left + ix as f64 * cw,
                    y,
                    run as f64 * cw,
                    ch,
                    color(l)
                );
                ix += run;
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{left}" y="{top}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
        );
        for (k, frac) in [0.0, 0.5, 1.0].iter().enumerate() {
            let xv = self.x_range[0] + frac * (self.x_range[1] - self.x_range[0]);
            let yv = self.y_range[0] + frac * (self.y_range[1] - self.y_range[0]);
            let anchor = ["start", "middle", "end"][k];
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{xv:.3}</text>"#,
                left + frac * plot,
                top + plot + 16.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">{yv:.3}</text>"#,
                left - 6.0,
                top + plot - frac * plot + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            left + plot / 2.0,
            top + plot + 40.0,
            self.x_label
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            top + plot / 2.0,
            top + plot / 2.0,
            self.y_label
        );
        // legend, bottom = low clip
        let lx = left + plot + 20.0;
        let lh = plot / LEVELS as f64;
        for l in 0..LEVELS {
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{:.3}" width="20" height="{:.3}" fill="{}"/>"#,
                top + plot - (l + 1) as f64 * lh,
                lh + 0.5,
                color(l)
            );
        }
        for (v, y) in [(self.clip[1], top + 4.0), (self.clip[0], top + plot)] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="12">{v:e}</text>"#,
                lx + 24.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_follow_log_scale() {
        let clip = [1e-8, 1e2];
        assert_eq!(level(1e-12, clip), 0);
        assert_eq!(level(1e-8, clip), 0);
        assert_eq!(level(1e2, clip), LEVELS - 1);
        assert_eq!(level(f64::NAN, clip), LEVELS - 1);
        assert_eq!(level(1e-3, clip), 32);
        assert_eq!(color(0), "#440154");
        assert_eq!(color(LEVELS - 1), "#fde725");
    }

    #[test]
    fn uniform_rows_merge() {
        let values = vec![1.0; 16];
        let svg = Heatmap {
            title: "t",
            x_label: "x",
            y_label: "y",
            x_range: [0.0, 1.0],
            y_range: [0.0, 1.0],
            nx: 4,
            ny: 4,
            values: &values,
            clip: [1e-2, 1e2],
        }
        .render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // 4 merged rows + background + frame + legend
        assert_eq!(svg.matches("<rect").count(), 4 + 2 + LEVELS);
    }
}
