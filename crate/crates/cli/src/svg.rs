//! Static SVG rendering of a layout. Row 0 is drawn at the bottom.

use std::fmt::Write as _;

use packclass_core::{free_columns, Layout};

const CELL: u32 = 32;
const MARGIN: u32 = 16;

const PALETTE: [&str; 8] = [
    "#8ecae6", "#ffb703", "#90be6d", "#f28482", "#cdb4db", "#f4a261", "#84a59d", "#ffd6a5",
];

pub fn render(layout: &Layout) -> String {
    let c = layout.container;
    let (w, h) = (c.width * CELL, c.height * CELL);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + 2 * MARGIN,
        h + 2 * MARGIN,
        w + 2 * MARGIN,
        h + 2 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<g transform="translate({MARGIN},{MARGIN})" font-family="monospace">"#
    );
    let _ = writeln!(
        s,
        r##"<rect class="device" x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##
    );

    for x in free_columns(layout).columns {
        let _ = writeln!(
            s,
            r##"<rect class="free-column" x="{}" y="0" width="{CELL}" height="{h}" fill="#e9ecef"/>"##,
            x * CELL
        );
    }

    for (i, (m, r)) in layout.placed().enumerate() {
        let px = r.x * CELL;
        let py = (c.height - r.y - r.height) * CELL;
        let (pw, ph) = (r.width * CELL, r.height * CELL);
        let _ = writeln!(
            s,
            r##"<rect class="module" x="{px}" y="{py}" width="{pw}" height="{ph}" fill="{}" stroke="#222222" stroke-width="2"/>"##,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            px + pw / 2,
            py + ph / 2,
            escape(&m.id)
        );
    }

    let _ = writeln!(s, r##"<g stroke="#adb5bd" stroke-width="1">"##);
    for x in 0..=c.width {
        let _ = writeln!(s, r#"<line x1="{0}" y1="0" x2="{0}" y2="{h}"/>"#, x * CELL);
    }
    for y in 0..=c.height {
        let _ = writeln!(s, r#"<line x1="0" y1="{0}" x2="{w}" y2="{0}"/>"#, y * CELL);
    }
    s.push_str("</g>\n</g>\n</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
