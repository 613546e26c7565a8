//! Tree exports: CSV, compact binary and SVG drawings.

use std::fmt::Write as _;
use std::io::Write;

use super::{Tree, VertexRef};
use crate::Result;

impl Tree {
    /// One line per vertex: `height,child_index,parent_index` (1-based; the
    /// root has an empty parent).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["height", "child_index", "parent_index"])?;
        w.write_record(["0", "1", ""])?;
        for (i, parents) in self.parents.iter().enumerate().skip(1) {
            for (c, &p) in parents.iter().enumerate() {
                w.write_record([i.to_string(), (c + 1).to_string(), (p + 1).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Little-endian `u32` words: the height `h`, then for each height
    /// `1..=h` its width followed by the 1-based parent of every vertex.
    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&(self.height() as u32).to_le_bytes())?;
        for parents in self.parents.iter().skip(1) {
            writer.write_all(&(parents.len() as u32).to_le_bytes())?;
            for &p in parents {
                writer.write_all(&(p + 1).to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Vertices at each height in plane order: children follow their
    /// father's position, and within a father they keep slot order.
    pub fn plane_order(&self) -> Vec<Vec<u32>> {
        let mut order = vec![vec![0u32]];
        for i in 0..self.height() {
            let next: Vec<u32> = order[i]
                .iter()
                .flat_map(|&p| {
                    self.children(VertexRef::new(i, p as usize + 1))
                        .map(|c| (c.index - 1) as u32)
                })
                .collect();
            order.push(next);
        }
        order
    }
}

const SVG_WIDTH: f64 = 1000.0;
const SVG_HEIGHT: f64 = 800.0;
const MARGIN: f64 = 20.0;
/// Above this many vertices only edges are drawn.
const MAX_DOTS: usize = 20_000;

fn ramp(f: f64) -> String {
    // green at the root, red at the top
    let r = (40.0 + 200.0 * f).round() as u8;
    let g = (170.0 * (1.0 - f)).round() as u8;
    format!("#{r:02x}{g:02x}30")
}

/// Draws the tree with the root at the bottom; each height is a horizontal
/// line of vertices spread evenly in plane order and coloured by height.
pub fn render_svg(tree: &Tree) -> String {
    let h = tree.height().max(1) as f64;
    let order = tree.plane_order();
    let mut x = vec![Vec::new(); order.len()];
    for (i, level) in order.iter().enumerate() {
        let mut xs = vec![0.0; level.len()];
        for (rank, &pos) in level.iter().enumerate() {
            xs[pos as usize] = MARGIN + (rank as f64 + 0.5) / level.len() as f64 * (SVG_WIDTH - 2.0 * MARGIN);
        }
        x[i] = xs;
    }
    let y = |i: usize| SVG_HEIGHT - MARGIN - i as f64 / h * (SVG_HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<g stroke-width="0.4" stroke-opacity="0.7">"#);
    for i in 1..order.len() {
        let colour = ramp(i as f64 / h);
        for (c, &p) in tree.parents[i].iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}"/>"#,
                x[i - 1][p as usize],
                y(i - 1),
                x[i][c],
                y(i)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    if tree.vertex_count() <= MAX_DOTS {
        let _ = writeln!(out, "<g>");
        for (i, xs) in x.iter().enumerate() {
            let colour = ramp(i as f64 / h);
            for &xv in xs {
                let _ = writeln!(out, r#"<circle cx="{xv:.2}" cy="{:.2}" r="1.5" fill="{colour}"/>"#, y(i));
            }
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}
