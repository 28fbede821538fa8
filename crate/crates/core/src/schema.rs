//! JSON descriptions of systems, elements, and representations.
//!
//! A *system file* carries the algebra, the map in canonical form, and the
//! covariance ideal:
//!
//! ```json
//! {
//!   "blocks": [1, 2],
//!   "endomorphism": {
//!     "multiplicity": [[0, 1], [0, 0]],
//!     "unitaries": [[[ [0.0, 0.0], ... ]]],   // optional, identity if absent
//!     "pad": [0, 1]                            // optional, inferred if absent
//!   },
//!   "ideal_J": [0]                             // optional, empty if absent
//! }
//! ```
//!
//! An *element file* lists matrix entries by position, one algebra element
//! per entry (a matrix for every block):
//!
//! ```json
//! { "entries": [ { "row": 0, "col": 1, "blocks": [ [[[1.0, 0.0]]], ... ] } ] }
//! ```
//!
//! A *representation file* gives the images of all matrix units, the
//! partial isometry, and (optionally) how many leading coordinates of the
//! space the window keeps:
//!
//! ```json
//! { "pi_blocks": [ [[ matrix ]], ... ], "U": matrix, "window_levels": 6 }
//! ```
//!
//! Complex scalars are `[re, im]` pairs and matrices are row-major arrays
//! of rows. Parse errors name the offending location by JSON pointer.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::algebra::{AlgElement, BlockIdeal, FdAlgebra};
use crate::endo::{DynamicalSystem, Endomorphism};
use crate::error::{Error, Result};
use crate::matcalc::MatElement;
use crate::reps::Representation;

fn bad(path: &str, msg: &str) -> Error {
    Error::validation(format!("{path}: {msg}"))
}

fn get<'v>(v: &'v Value, path: &str, key: &str) -> Result<&'v Value> {
    v.get(key)
        .ok_or_else(|| bad(&format!("{path}/{key}"), "missing"))
}

fn as_object<'v>(v: &'v Value, path: &str) -> Result<&'v Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(path, "expected an object"))
}

fn as_array<'v>(v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
    v.as_array().ok_or_else(|| bad(path, "expected an array"))
}

fn as_index(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| bad(path, "expected a non-negative integer"))
}

fn as_real(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| bad(path, "expected a number"))
}

fn parse_complex(v: &Value, path: &str) -> Result<Complex64> {
    let pair = as_array(v, path)?;
    if pair.len() != 2 {
        return Err(bad(path, "expected an [re, im] pair"));
    }
    Ok(Complex64::new(
        as_real(&pair[0], &format!("{path}/0"))?,
        as_real(&pair[1], &format!("{path}/1"))?,
    ))
}

fn parse_matrix(v: &Value, path: &str, rows: usize, cols: usize) -> Result<DMatrix<Complex64>> {
    let arr = as_array(v, path)?;
    if arr.len() != rows {
        return Err(bad(path, &format!("expected {rows} rows, found {}", arr.len())));
    }
    let mut m = DMatrix::<Complex64>::zeros(rows, cols);
    for (i, rv) in arr.iter().enumerate() {
        let rp = format!("{path}/{i}");
        let row = as_array(rv, &rp)?;
        if row.len() != cols {
            return Err(bad(&rp, &format!("expected {cols} entries, found {}", row.len())));
        }
        for (j, ev) in row.iter().enumerate() {
            m[(i, j)] = parse_complex(ev, &format!("{rp}/{j}"))?;
        }
    }
    Ok(m)
}

fn matrix_to_json(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            Value::Array(vec![
                                Value::from(z.re),
                                Value::from(z.im),
                            ])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Parse a system file into the dynamical system and its covariance ideal.
pub fn parse_system(v: &Value) -> Result<(DynamicalSystem, BlockIdeal)> {
    as_object(v, "")?;
    let blocks_v = as_array(get(v, "", "blocks")?, "/blocks")?;
    let mut dims = Vec::with_capacity(blocks_v.len());
    for (i, d) in blocks_v.iter().enumerate() {
        let n = as_index(d, &format!("/blocks/{i}"))?;
        if n == 0 {
            return Err(bad(&format!("/blocks/{i}"), "block dimensions must be positive"));
        }
        dims.push(n);
    }
    let algebra = FdAlgebra::new(dims)?;
    let bc = algebra.block_count();

    let endo_v = get(v, "", "endomorphism")?;
    as_object(endo_v, "/endomorphism")?;
    let mult_v = as_array(
        get(endo_v, "/endomorphism", "multiplicity")?,
        "/endomorphism/multiplicity",
    )?;
    if mult_v.len() != bc {
        return Err(bad(
            "/endomorphism/multiplicity",
            &format!("expected {bc} rows, found {}", mult_v.len()),
        ));
    }
    let mut mult = Vec::with_capacity(bc);
    for (c, rv) in mult_v.iter().enumerate() {
        let rp = format!("/endomorphism/multiplicity/{c}");
        let row_v = as_array(rv, &rp)?;
        if row_v.len() != bc {
            return Err(bad(&rp, &format!("expected {bc} entries, found {}", row_v.len())));
        }
        let mut row = Vec::with_capacity(bc);
        for (b, mv) in row_v.iter().enumerate() {
            row.push(as_index(mv, &format!("{rp}/{b}"))?);
        }
        mult.push(row);
    }

    let unitaries = match endo_v.get("unitaries") {
        None | Some(Value::Null) => None,
        Some(uv) => {
            let arr = as_array(uv, "/endomorphism/unitaries")?;
            if arr.len() != bc {
                return Err(bad(
                    "/endomorphism/unitaries",
                    &format!("expected {bc} matrices, found {}", arr.len()),
                ));
            }
            let mut vs = Vec::with_capacity(bc);
            for (c, mv) in arr.iter().enumerate() {
                let n_c = algebra.block_dim(c);
                vs.push(parse_matrix(
                    mv,
                    &format!("/endomorphism/unitaries/{c}"),
                    n_c,
                    n_c,
                )?);
            }
            Some(vs)
        }
    };

    let pad = match endo_v.get("pad") {
        None | Some(Value::Null) => None,
        Some(pv) => {
            let arr = as_array(pv, "/endomorphism/pad")?;
            let mut ps = Vec::with_capacity(arr.len());
            for (c, zv) in arr.iter().enumerate() {
                ps.push(as_index(zv, &format!("/endomorphism/pad/{c}"))?);
            }
            Some(ps)
        }
    };

    let endo = Endomorphism::new(&algebra, mult, unitaries, pad)?;

    let ideal = match v.get("ideal_J") {
        None | Some(Value::Null) => BlockIdeal::empty(&algebra),
        Some(iv) => {
            let arr = as_array(iv, "/ideal_J")?;
            let mut members = Vec::with_capacity(arr.len());
            for (i, bv) in arr.iter().enumerate() {
                let b = as_index(bv, &format!("/ideal_J/{i}"))?;
                if b >= bc {
                    return Err(bad(
                        &format!("/ideal_J/{i}"),
                        &format!("block {b} out of range (algebra has {bc} blocks)"),
                    ));
                }
                members.push(b);
            }
            BlockIdeal::new(&algebra, members)?
        }
    };

    Ok((DynamicalSystem::new(endo), ideal))
}

/// Emit a system file. The unitaries and pads are always written, so the
/// output reparses to the identical system.
pub fn system_to_json(system: &DynamicalSystem, ideal: &BlockIdeal) -> Value {
    let algebra = system.algebra();
    let endo = system.endo();
    let mut endo_map = Map::new();
    endo_map.insert(
        "multiplicity".into(),
        Value::Array(
            endo.multiplicity()
                .iter()
                .map(|row| Value::Array(row.iter().map(|&m| Value::from(m as u64)).collect()))
                .collect(),
        ),
    );
    endo_map.insert(
        "unitaries".into(),
        Value::Array(endo.unitaries().iter().map(matrix_to_json).collect()),
    );
    endo_map.insert(
        "pad".into(),
        Value::Array(endo.pad().iter().map(|&z| Value::from(z as u64)).collect()),
    );
    let mut map = Map::new();
    map.insert(
        "blocks".into(),
        Value::Array(
            algebra
                .block_dims()
                .iter()
                .map(|&n| Value::from(n as u64))
                .collect(),
        ),
    );
    map.insert("endomorphism".into(), Value::Object(endo_map));
    map.insert(
        "ideal_J".into(),
        Value::Array(
            ideal
                .members()
                .iter()
                .map(|&b| Value::from(b as u64))
                .collect(),
        ),
    );
    Value::Object(map)
}

/// Parse an element file against a system.
pub fn parse_element(system: &DynamicalSystem, v: &Value) -> Result<MatElement> {
    as_object(v, "")?;
    let algebra = system.algebra();
    let entries_v = as_array(get(v, "", "entries")?, "/entries")?;
    let mut triples = Vec::with_capacity(entries_v.len());
    for (i, ev) in entries_v.iter().enumerate() {
        let ep = format!("/entries/{i}");
        as_object(ev, &ep)?;
        let row = as_index(get(ev, &ep, "row")?, &format!("{ep}/row"))?;
        let col = as_index(get(ev, &ep, "col")?, &format!("{ep}/col"))?;
        let blocks_v = as_array(get(ev, &ep, "blocks")?, &format!("{ep}/blocks"))?;
        if blocks_v.len() != algebra.block_count() {
            return Err(bad(
                &format!("{ep}/blocks"),
                &format!(
                    "expected {} block matrices, found {}",
                    algebra.block_count(),
                    blocks_v.len()
                ),
            ));
        }
        let mut blocks = Vec::with_capacity(blocks_v.len());
        for (b, bv) in blocks_v.iter().enumerate() {
            let n_b = algebra.block_dim(b);
            blocks.push(parse_matrix(bv, &format!("{ep}/blocks/{b}"), n_b, n_b)?);
        }
        triples.push((row, col, AlgElement::from_blocks(algebra, blocks)?));
    }
    MatElement::from_entries(system, triples)
}

/// Emit an element file listing the stored entries in position order.
pub fn element_to_json(x: &MatElement) -> Value {
    let mut entries = Vec::new();
    for (row, col, a) in x.entries() {
        let mut entry = Map::new();
        entry.insert("row".into(), Value::from(row as u64));
        entry.insert("col".into(), Value::from(col as u64));
        entry.insert(
            "blocks".into(),
            Value::Array(a.blocks().iter().map(matrix_to_json).collect()),
        );
        entries.push(Value::Object(entry));
    }
    let mut map = Map::new();
    map.insert("entries".into(), Value::Array(entries));
    Value::Object(map)
}

/// Parse a representation file against a system. Only shapes are checked
/// here; run [`Representation::validation_report`] on the result to judge
/// the candidate, so that failing candidates still produce a full report.
pub fn parse_representation(system: &DynamicalSystem, v: &Value) -> Result<Representation> {
    as_object(v, "")?;
    let algebra = system.algebra();
    let u_v = get(v, "", "U")?;
    let h = as_array(u_v, "/U")?.len();
    let u = parse_matrix(u_v, "/U", h, h)?;

    let pi_v = as_array(get(v, "", "pi_blocks")?, "/pi_blocks")?;
    if pi_v.len() != algebra.block_count() {
        return Err(bad(
            "/pi_blocks",
            &format!(
                "expected {} block grids, found {}",
                algebra.block_count(),
                pi_v.len()
            ),
        ));
    }
    let mut pi_units = Vec::with_capacity(pi_v.len());
    for (b, gv) in pi_v.iter().enumerate() {
        let gp = format!("/pi_blocks/{b}");
        let n_b = algebra.block_dim(b);
        let grid_v = as_array(gv, &gp)?;
        if grid_v.len() != n_b {
            return Err(bad(&gp, &format!("expected {n_b} rows of images")));
        }
        let mut grid = Vec::with_capacity(n_b);
        for (p, rv) in grid_v.iter().enumerate() {
            let rp = format!("{gp}/{p}");
            let row_v = as_array(rv, &rp)?;
            if row_v.len() != n_b {
                return Err(bad(&rp, &format!("expected {n_b} images")));
            }
            let mut row = Vec::with_capacity(n_b);
            for (q, mv) in row_v.iter().enumerate() {
                row.push(parse_matrix(mv, &format!("{rp}/{q}"), h, h)?);
            }
            grid.push(row);
        }
        pi_units.push(grid);
    }

    let window = match v.get("window_levels") {
        None | Some(Value::Null) => DMatrix::<Complex64>::identity(h, h),
        Some(wv) => {
            let keep = as_index(wv, "/window_levels")?;
            if keep > h {
                return Err(bad(
                    "/window_levels",
                    &format!("cannot keep {keep} coordinates of a {h}-dimensional space"),
                ));
            }
            let mut w = DMatrix::<Complex64>::zeros(h, h);
            for i in 0..keep {
                w[(i, i)] = Complex64::new(1.0, 0.0);
            }
            w
        }
    };

    Representation::from_parts_unchecked(system, pi_units, u, window)
}
