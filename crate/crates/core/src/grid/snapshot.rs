//! Plain-text field snapshots.
//!
//! ```text
//! nx ny lx ly t
//! <node (0,0) values>
//! <node (1,0) values>
//! ...
//! ```
//!
//! Nodes follow row-major order; each line holds one value per component,
//! space separated, printed with 17 significant digits.

use super::{Grid, ScalarField2D, VectorField2D};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub fn write_vector<W: Write>(out: &mut W, field: &VectorField2D, t: f64) -> Result<()> {
    write_components(
        out,
        field.grid(),
        t,
        &[field.comps[0].data(), field.comps[1].data()],
    )
}

pub fn write_scalar<W: Write>(out: &mut W, field: &ScalarField2D, t: f64) -> Result<()> {
    write_components(out, field.grid(), t, &[field.data()])
}

fn write_components<W: Write>(out: &mut W, g: &Grid, t: f64, comps: &[&[f64]]) -> Result<()> {
    writeln!(
        out,
        "{} {} {:.17e} {:.17e} {:.17e}",
        g.nx, g.ny, g.lx, g.ly, t
    )?;
    for p in 0..g.len() {
        let line: Vec<String> = comps.iter().map(|c| format!("{:.17e}", c[p])).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// A snapshot read back from disk.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub grid: Grid,
    pub t: f64,
    pub components: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn into_vector(self) -> Result<VectorField2D> {
        if self.components.len() != 2 {
            return Err(Error::Dimension(format!(
                "expected 2 components, snapshot has {}",
                self.components.len()
            )));
        }
        let mut it = self.components.into_iter();
        let a = ScalarField2D::from_vec(self.grid, it.next().unwrap())?;
        let b = ScalarField2D::from_vec(self.grid, it.next().unwrap())?;
        VectorField2D::new(a, b)
    }
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

pub fn read<R: BufRead>(input: R) -> Result<Snapshot> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty snapshot".into()))??;
    let mut tok = header.split_whitespace();
    let nx: usize = parse(tok.next(), "nx")?;
    let ny: usize = parse(tok.next(), "ny")?;
    let lx: f64 = parse(tok.next(), "lx")?;
    let ly: f64 = parse(tok.next(), "ly")?;
    let t: f64 = parse(tok.next(), "t")?;
    let grid = Grid::new(nx, ny, lx, ly)?;
    let mut components: Vec<Vec<f64>> = Vec::new();
    for p in 0..grid.len() {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("snapshot truncated at node {p}")))??;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad value at node {p}")))
            })
            .collect::<Result<_>>()?;
        if p == 0 {
            components = vec![Vec::with_capacity(grid.len()); vals.len()];
        } else if vals.len() != components.len() {
            return Err(Error::Parse(format!("node {p} has {} values", vals.len())));
        }
        for (c, v) in components.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    Ok(Snapshot {
        grid,
        t,
        components,
    })
}
