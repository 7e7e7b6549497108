//! Snapshot and CSV serialization.
//!
//! Field snapshots use a little-endian binary layout:
//!
//! ```text
//! magic "GGL1" | version u32 | dim u32 | half_side i32 | model u8 |
//! payload tag u8 | seed u64 | step_count u64 | offset i32 x 4 |
//! payload f64 x count
//! ```
//!
//! Height payloads hold one value per site in site-index order; gradient
//! payloads hold one value per (site, axis) canonical bond slot in the same
//! order. CSV files open with `# key=value` metadata lines, then a header
//! row; fields containing separators are quoted per RFC 4180. All floats are
//! printed with a fixed format so equal runs produce byte-identical files.

use crate::disorder::DisorderSample;
use crate::error::{Error, Result};
use crate::field::{BoundarySpec, HeightField};
use crate::gradient::GradientField;
use crate::lattice::{LatticeBox, SiteIdx};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"GGL1";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Heights,
    Gradients,
    SiteDisorder,
    BondDisorder,
}

#[derive(Debug, Clone, Copy)]
pub struct SnapshotMeta {
    pub model: crate::disorder::ModelKind,
    pub seed: u64,
    pub step_count: u64,
}

fn write_header(
    w: &mut impl Write,
    bx: &LatticeBox,
    meta: &SnapshotMeta,
    payload: PayloadKind,
) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(bx.dim() as u32).to_le_bytes())?;
    w.write_all(&bx.half_side().to_le_bytes())?;
    w.write_all(&[match meta.model {
        crate::disorder::ModelKind::A => b'A',
        crate::disorder::ModelKind::B => b'B',
    }])?;
    w.write_all(&[match payload {
        PayloadKind::Heights => 0u8,
        PayloadKind::Gradients => 1u8,
        PayloadKind::SiteDisorder => 2u8,
        PayloadKind::BondDisorder => 3u8,
    }])?;
    w.write_all(&meta.seed.to_le_bytes())?;
    w.write_all(&meta.step_count.to_le_bytes())?;
    for i in 0..4 {
        w.write_all(&bx.offset()[i].to_le_bytes())?;
    }
    Ok(())
}

struct Header {
    dim: usize,
    half_side: i32,
    payload: PayloadKind,
    offset: [i32; 4],
}

fn read_header(r: &mut impl Read) -> Result<(Header, SnapshotMeta)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::InvalidParameter("bad snapshot magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != SNAPSHOT_VERSION {
        return Err(Error::InvalidParameter(
            "unsupported snapshot version".into(),
        ));
    }
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let half_side = i32::from_le_bytes(b4);
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let model = match b1[0] {
        b'A' => crate::disorder::ModelKind::A,
        b'B' => crate::disorder::ModelKind::B,
        _ => return Err(Error::InvalidParameter("bad model tag".into())),
    };
    r.read_exact(&mut b1)?;
    let payload = match b1[0] {
        0 => PayloadKind::Heights,
        1 => PayloadKind::Gradients,
        2 => PayloadKind::SiteDisorder,
        3 => PayloadKind::BondDisorder,
        _ => return Err(Error::InvalidParameter("bad payload tag".into())),
    };
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let step_count = u64::from_le_bytes(b8);
    let mut offset = [0i32; 4];
    for o in offset.iter_mut() {
        r.read_exact(&mut b4)?;
        *o = i32::from_le_bytes(b4);
    }
    Ok((
        Header {
            dim,
            half_side,
            payload,
            offset,
        },
        SnapshotMeta {
            model,
            seed,
            step_count,
        },
    ))
}

pub fn write_height_snapshot(path: &Path, field: &HeightField, meta: &SnapshotMeta) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, field.boxref(), meta, PayloadKind::Heights)?;
    for &v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_height_snapshot(path: &Path) -> Result<(HeightField, SnapshotMeta)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let (h, meta) = read_header(&mut r)?;
    if h.payload != PayloadKind::Heights {
        return Err(Error::InvalidParameter("not a height snapshot".into()));
    }
    let bx = Arc::new(LatticeBox::build(h.dim, h.half_side, &h.offset[..h.dim])?);
    let mut field = HeightField::new(bx.clone(), &BoundarySpec::zero())?;
    let mut b8 = [0u8; 8];
    for idx in 0..bx.total_sites() {
        r.read_exact(&mut b8)?;
        field.values_mut()[idx] = f64::from_le_bytes(b8);
    }
    Ok((field, meta))
}

pub fn write_gradient_snapshot(
    path: &Path,
    grad: &GradientField,
    meta: &SnapshotMeta,
) -> Result<()> {
    let bx = grad.boxref();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, bx, meta, PayloadKind::Gradients)?;
    for idx in 0..bx.total_sites() as SiteIdx {
        let c = bx.site_coord(idx);
        for ax in 0..bx.dim() {
            let v = grad.canonical(&c, ax).unwrap_or(0.0);
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_gradient_snapshot(path: &Path) -> Result<(GradientField, SnapshotMeta)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let (h, meta) = read_header(&mut r)?;
    if h.payload != PayloadKind::Gradients {
        return Err(Error::InvalidParameter("not a gradient snapshot".into()));
    }
    let bx = Arc::new(LatticeBox::build(h.dim, h.half_side, &h.offset[..h.dim])?);
    let mut grad = GradientField::zeros(bx.clone());
    let mut b8 = [0u8; 8];
    for idx in 0..bx.total_sites() as SiteIdx {
        let c = bx.site_coord(idx);
        for ax in 0..bx.dim() {
            r.read_exact(&mut b8)?;
            grad.set_canonical(&c, ax, f64::from_le_bytes(b8))?;
        }
    }
    Ok((grad, meta))
}

/// Fixed float formatting shared by every CSV writer.
pub fn fmt_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:.12e}")
    }
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Write a CSV file with a `# key=value` metadata preamble.
pub fn write_csv(
    path: &Path,
    metadata: &[(&str, String)],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(
        w,
        "{}",
        header
            .iter()
            .map(|h| csv_quote(h))
            .collect::<Vec<_>>()
            .join(",")
    )?;
    for row in rows {
        writeln!(
            w,
            "{}",
            row.iter()
                .map(|f| csv_quote(f))
                .collect::<Vec<_>>()
                .join(",")
        )?;
    }
    Ok(())
}

fn law_code(law: &crate::disorder::DisorderLaw) -> (u8, [f64; 2]) {
    use crate::disorder::DisorderLaw::*;
    match *law {
        Gaussian { sigma } => (0, [sigma, 0.0]),
        Rademacher { sigma } => (1, [sigma, 0.0]),
        Uniform { half_width } => (2, [half_width, 0.0]),
        UniformConductance { kappa, delta } => (3, [kappa, delta]),
    }
}

fn law_from_code(code: u8, p: [f64; 2]) -> Result<crate::disorder::DisorderLaw> {
    use crate::disorder::DisorderLaw::*;
    Ok(match code {
        0 => Gaussian { sigma: p[0] },
        1 => Rademacher { sigma: p[0] },
        2 => Uniform { half_width: p[0] },
        3 => UniformConductance {
            kappa: p[0],
            delta: p[1],
        },
        _ => return Err(Error::InvalidParameter("bad law tag".into())),
    })
}

/// Compact binary disorder snapshot: the field header plus a law tag and
/// its parameters, payload in site (or site-axis) order.
pub fn write_disorder_snapshot(
    path: &Path,
    bx: &LatticeBox,
    sample: &DisorderSample,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let meta = SnapshotMeta {
        model: sample.model,
        seed: sample.seed,
        step_count: 0,
    };
    let payload = match sample.model {
        crate::disorder::ModelKind::A => PayloadKind::SiteDisorder,
        crate::disorder::ModelKind::B => PayloadKind::BondDisorder,
    };
    write_header(&mut w, bx, &meta, payload)?;
    let (code, params) = law_code(&sample.law);
    w.write_all(&[code])?;
    for p in params {
        w.write_all(&p.to_le_bytes())?;
    }
    match (&sample.fields, &sample.conductances) {
        (Some(f), _) => {
            for &v in f.values() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        (_, Some(k)) => {
            for idx in 0..bx.total_sites() as SiteIdx {
                for ax in 0..bx.dim() {
                    w.write_all(&k.value(idx, ax).to_le_bytes())?;
                }
            }
        }
        _ => return Err(Error::InvalidParameter("empty disorder sample".into())),
    }
    Ok(())
}

pub fn read_disorder_snapshot(path: &Path) -> Result<(LatticeBox, DisorderSample)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let (h, meta) = read_header(&mut r)?;
    if !matches!(
        h.payload,
        PayloadKind::SiteDisorder | PayloadKind::BondDisorder
    ) {
        return Err(Error::InvalidParameter("not a disorder snapshot".into()));
    }
    let bx = LatticeBox::build(h.dim, h.half_side, &h.offset[..h.dim])?;
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let mut params = [0.0f64; 2];
    let mut b8 = [0u8; 8];
    for p in params.iter_mut() {
        r.read_exact(&mut b8)?;
        *p = f64::from_le_bytes(b8);
    }
    let law = law_from_code(b1[0], params)?;
    let sample = match meta.model {
        crate::disorder::ModelKind::A => {
            let mut values = Vec::with_capacity(bx.total_sites());
            for _ in 0..bx.total_sites() {
                r.read_exact(&mut b8)?;
                values.push(f64::from_le_bytes(b8));
            }
            DisorderSample {
                model: meta.model,
                law,
                seed: meta.seed,
                fields: Some(crate::disorder::site_field_from_values(&bx, values)?),
                conductances: None,
            }
        }
        crate::disorder::ModelKind::B => {
            let mut raw = vec![0.0; bx.total_sites() * bx.dim()];
            for v in raw.iter_mut() {
                r.read_exact(&mut b8)?;
                *v = f64::from_le_bytes(b8);
            }
            let dim = bx.dim();
            let field = crate::disorder::bond_field_from_fn(&bx, |c, ax| {
                let idx = bx.site_index(c).unwrap() as usize;
                raw[idx * dim + ax]
            });
            DisorderSample {
                model: meta.model,
                law,
                seed: meta.seed,
                fields: None,
                conductances: Some(field),
            }
        }
    };
    Ok((bx, sample))
}

/// Height field export: one row per site.
pub fn write_height_csv(path: &Path, field: &HeightField) -> Result<()> {
    let bx = field.boxref();
    let dim = bx.dim();
    let mut header: Vec<&str> = vec!["x1", "x2", "x3", "x4"][..dim].to_vec();
    header.push("frozen");
    header.push("value");
    let rows: Vec<Vec<String>> = (0..bx.total_sites() as SiteIdx)
        .map(|idx| {
            let c = bx.site_coord(idx);
            let mut row: Vec<String> = c[..dim].iter().map(|v| v.to_string()).collect();
            row.push((field.is_frozen(idx) as u8).to_string());
            row.push(fmt_float(field.values()[idx as usize]));
            row
        })
        .collect();
    write_csv(
        path,
        &[
            ("dim", dim.to_string()),
            ("half_side", bx.half_side().to_string()),
        ],
        &header,
        &rows,
    )
}

/// Energy trace export: `(step, time, energy)` rows.
pub fn write_energy_trace_csv(path: &Path, trace: &[(f64, f64)]) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .iter()
        .enumerate()
        .map(|(i, &(t, e))| vec![i.to_string(), fmt_float(t), fmt_float(e)])
        .collect();
    write_csv(path, &[], &["step", "time", "energy"], &rows)
}

/// Green table export `(x, y, value)` with a normalization header line;
/// limited to domains small enough for the full pair table.
pub fn write_green_csv(path: &Path, table: &crate::green::GreenTable) -> Result<()> {
    let domain = table.domain();
    let n = domain.free_count();
    if n > 1000 {
        return Err(Error::Unsupported(format!(
            "full pair table limited to 1000 free sites, got {n}"
        )));
    }
    let dim = table.system().dim();
    let mut rows = Vec::with_capacity(n * n);
    for j in 0..n as u32 {
        let y = domain.coord_of_local(j);
        for i in 0..n as u32 {
            let x = domain.coord_of_local(i);
            let v = table.entry(&x, &y)?;
            let mut row: Vec<String> = x[..dim].iter().map(|c| c.to_string()).collect();
            row.extend(y[..dim].iter().map(|c| c.to_string()));
            row.push(fmt_float(v));
            rows.push(row);
        }
    }
    let mut header: Vec<&str> = Vec::new();
    header.extend_from_slice(&["x1", "x2", "x3", "x4"][..dim]);
    header.extend_from_slice(&["y1", "y2", "y3", "y4"][..dim]);
    header.push("value");
    write_csv(
        path,
        &[("normalization", format!("{:?}", table.normalization()))],
        &header,
        &rows,
    )
}

/// Disorder sample export: one row per site or bond.
pub fn write_disorder_csv(path: &Path, bx: &LatticeBox, sample: &DisorderSample) -> Result<()> {
    let dim = bx.dim();
    let meta = vec![
        ("model", format!("{:?}", sample.model)),
        ("law", format!("{:?}", sample.law)),
        ("seed", sample.seed.to_string()),
    ];
    match (&sample.fields, &sample.conductances) {
        (Some(f), _) => {
            let mut header: Vec<&str> = vec!["x1", "x2", "x3", "x4"][..dim].to_vec();
            header.push("value");
            let rows: Vec<Vec<String>> = (0..bx.total_sites() as SiteIdx)
                .map(|idx| {
                    let c = bx.site_coord(idx);
                    let mut row: Vec<String> = c[..dim].iter().map(|v| v.to_string()).collect();
                    row.push(fmt_float(f.value(idx)));
                    row
                })
                .collect();
            write_csv(path, &meta, &header, &rows)
        }
        (_, Some(k)) => {
            let mut header: Vec<&str> = vec!["x1", "x2", "x3", "x4"][..dim].to_vec();
            header.push("axis");
            header.push("value");
            let mut rows = Vec::new();
            for idx in 0..bx.total_sites() as SiteIdx {
                let c = bx.site_coord(idx);
                for ax in 0..dim {
                    let mut row: Vec<String> = c[..dim].iter().map(|v| v.to_string()).collect();
                    row.push(ax.to_string());
                    row.push(fmt_float(k.value(idx, ax)));
                    rows.push(row);
                }
            }
            write_csv(path, &meta, &header, &rows)
        }
        _ => Err(Error::InvalidParameter("empty disorder sample".into())),
    }
}
