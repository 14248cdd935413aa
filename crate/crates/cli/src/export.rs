//! DOT, SVG and JSON renderings of a colored instance.

use std::fmt::Write;

use anyhow::{bail, Result};
use edgecolor::coloring::EdgeColoring;
use edgecolor::group::TorusInstance;
use edgecolor::io::InstanceSpec;
use serde::{Deserialize, Serialize};

const PALETTE: [&str; 12] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcf60c", "#008080",
    "#9a6324", "#800000", "#000075",
];

fn color_name(c: u32) -> &'static str {
    match c {
        0 => "#bbbbbb",
        c => PALETTE[(c as usize - 1) % PALETTE.len()],
    }
}

fn label(instance: &TorusInstance, v: usize) -> String {
    let c: Vec<String> = instance.coords(v).iter().map(u64::to_string).collect();
    c.join(",")
}

pub fn dot(instance: &TorusInstance, coloring: &EdgeColoring) -> String {
    let mut s = String::from("graph schreier {\n  node [shape=point];\n");
    for v in 0..instance.n_vertices() {
        let _ = writeln!(s, "  v{v} [xlabel=\"{}\"];", label(instance, v));
    }
    for (e, ed) in instance.edges().iter().enumerate() {
        let c = coloring.colors[e];
        let _ = writeln!(
            s,
            "  v{} -- v{} [color=\"{}\", label=\"{c}\"];",
            ed.source,
            ed.target,
            color_name(c)
        );
    }
    s.push_str("}\n");
    s
}

/// Grid position: free coordinates on the axes, torsion stacked along `y`
/// when a free axis is missing.
fn position(instance: &TorusInstance, v: usize) -> (u64, u64) {
    let g = instance.group();
    let t = g.invariants().len();
    let c = instance.coords(v);
    let torsion_index = c[..t]
        .iter()
        .zip(g.invariants())
        .fold(0u64, |acc, (x, n)| acc * n + x);
    match g.rank() {
        0 => (torsion_index, 0),
        1 => (c[t], torsion_index),
        _ => (c[t], c[t + 1]),
    }
}

pub fn svg(instance: &TorusInstance, coloring: &EdgeColoring) -> Result<String> {
    if instance.group().rank() > 2 {
        bail!("svg export draws rank at most 2");
    }
    const STEP: u64 = 24;
    const PAD: u64 = 16;
    let pos: Vec<(u64, u64)> = (0..instance.n_vertices()).map(|v| position(instance, v)).collect();
    let w = pos.iter().map(|p| p.0).max().unwrap_or(0) * STEP + 2 * PAD;
    let h = pos.iter().map(|p| p.1).max().unwrap_or(0) * STEP + 2 * PAD;
    let xy = |p: (u64, u64)| ((p.0 * STEP + PAD) as i64, (p.1 * STEP + PAD) as i64);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    for (e, ed) in instance.edges().iter().enumerate() {
        let (x1, y1) = xy(pos[ed.source]);
        let (mut x2, mut y2) = xy(pos[ed.target]);
        // Wrapping edges are drawn as short stubs.
        let far = (x2 - x1).abs() > 4 * STEP as i64 || (y2 - y1).abs() > 4 * STEP as i64;
        if far {
            x2 = x1 + (x2 - x1).signum() * (STEP as i64 / 3);
            y2 = y1 + (y2 - y1).signum() * (STEP as i64 / 3);
        }
        let _ = writeln!(
            s,
            "  <line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"{}\" stroke-width=\"2\"/>",
            color_name(coloring.colors[e])
        );
    }
    for &p in &pos {
        let (x, y) = xy(p);
        let _ = writeln!(s, "  <circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"black\"/>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Instance and coloring in one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub instance: InstanceSpec,
    pub coloring: EdgeColoring,
}

pub fn json(instance: &TorusInstance, coloring: &EdgeColoring) -> String {
    edgecolor::io::to_json(&Bundle {
        instance: InstanceSpec::of(instance),
        coloring: coloring.clone(),
    })
}
