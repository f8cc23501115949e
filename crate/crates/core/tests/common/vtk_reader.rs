//! Strict reader for legacy ASCII VTK unstructured grids. Rejects anything
//! a conforming reader would warn about: bad header, count mismatches,
//! unknown sections, out-of-range connectivity, unparsable numbers and
//! trailing data.

use std::collections::HashMap;

#[derive(Debug, Default)]
pub struct Grid {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub point_vectors: HashMap<String, Vec<[f64; 3]>>,
    pub cell_scalars: HashMap<String, Vec<f64>>,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), String> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| "unexpected end of file".to_string())
    }

    fn numbers<T: std::str::FromStr>(&mut self, count: usize) -> Result<Vec<T>, String> {
        let (n, l) = self.next()?;
        let vals: Vec<T> = l
            .split_whitespace()
            .map(|t| {
                t.parse::<T>()
                    .map_err(|_| format!("line {n}: bad number `{t}`"))
            })
            .collect::<Result<_, _>>()?;
        if vals.len() != count {
            return Err(format!(
                "line {n}: expected {count} values, found {}",
                vals.len()
            ));
        }
        Ok(vals)
    }
}

fn expect_keyword<'a>(
    line: (usize, &'a str),
    keyword: &str,
    args: usize,
) -> Result<Vec<&'a str>, String> {
    let (n, l) = line;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.first() != Some(&keyword) || toks.len() != args + 1 {
        return Err(format!(
            "line {n}: expected `{keyword}` with {args} arguments, found `{l}`"
        ));
    }
    Ok(toks[1..].to_vec())
}

fn count(tok: &str, n: usize) -> Result<usize, String> {
    tok.parse()
        .map_err(|_| format!("line {n}: bad count `{tok}`"))
}

fn finite3(v: Vec<f64>, n: usize) -> Result<[f64; 3], String> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(format!("line {n}: non-finite value"));
    }
    Ok([v[0], v[1], v[2]])
}

pub fn parse(text: &str) -> Result<Grid, String> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let mut g = Grid::default();
    let (_, header) = lines.next()?;
    if header != "# vtk DataFile Version 3.0" {
        return Err(format!("bad header `{header}`"));
    }
    g.title = lines.next()?.1.to_string();
    if g.title.len() > 255 {
        return Err("title longer than 256 characters".into());
    }
    if lines.next()?.1 != "ASCII" {
        return Err("only ASCII files are accepted".into());
    }
    if lines.next()?.1 != "DATASET UNSTRUCTURED_GRID" {
        return Err("expected DATASET UNSTRUCTURED_GRID".into());
    }
    let l = lines.next()?;
    let a = expect_keyword(l, "POINTS", 2)?;
    let np = count(a[0], l.0)?;
    if a[1] != "double" {
        return Err(format!("line {}: points must be double", l.0));
    }
    for _ in 0..np {
        let v = lines.numbers::<f64>(3)?;
        g.points.push(finite3(v, 0)?);
    }
    let l = lines.next()?;
    let a = expect_keyword(l, "CELLS", 2)?;
    let (nc, size) = (count(a[0], l.0)?, count(a[1], l.0)?);
    let mut used = 0;
    for _ in 0..nc {
        let (n, line) = lines.next()?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| format!("line {n}: bad index `{t}`")))
            .collect::<Result<_, _>>()?;
        if ids.is_empty() || ids[0] + 1 != ids.len() {
            return Err(format!("line {n}: cell size prefix does not match"));
        }
        if ids[1..].iter().any(|&i| i >= np) {
            return Err(format!("line {n}: point index out of range"));
        }
        used += ids.len();
        g.cells.push(ids[1..].to_vec());
    }
    if used != size {
        return Err(format!("CELLS size {size} but {used} integers listed"));
    }
    let l = lines.next()?;
    let a = expect_keyword(l, "CELL_TYPES", 1)?;
    if count(a[0], l.0)? != nc {
        return Err("CELL_TYPES count differs from CELLS".into());
    }
    for (k, cell) in g.cells.iter().enumerate() {
        let t = lines.numbers::<u8>(1)?[0];
        let expected = match t {
            9 => 4,
            5 => 3,
            _ => return Err(format!("cell {k}: unsupported type {t}")),
        };
        if cell.len() != expected {
            return Err(format!("cell {k}: type {t} needs {expected} points"));
        }
        g.cell_types.push(t);
    }

    let mut section: Option<(&str, usize)> = None;
    while let Some((n, l)) = lines.inner.next().map(|(i, l)| (i + 1, l)) {
        if l.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[0] {
            "POINT_DATA" => {
                let a = expect_keyword((n, l), "POINT_DATA", 1)?;
                if count(a[0], n)? != np {
                    return Err(format!("line {n}: POINT_DATA count differs from POINTS"));
                }
                section = Some(("point", np));
            }
            "CELL_DATA" => {
                let a = expect_keyword((n, l), "CELL_DATA", 1)?;
                if count(a[0], n)? != nc {
                    return Err(format!("line {n}: CELL_DATA count differs from CELLS"));
                }
                section = Some(("cell", nc));
            }
            "VECTORS" => {
                let a = expect_keyword((n, l), "VECTORS", 2)?;
                let (kind, len) =
                    section.ok_or(format!("line {n}: VECTORS outside a data section"))?;
                if a[1] != "double" || kind != "point" {
                    return Err(format!("line {n}: only double point vectors are expected"));
                }
                let mut data = Vec::with_capacity(len);
                for _ in 0..len {
                    let v = lines.numbers::<f64>(3)?;
                    data.push(finite3(v, n)?);
                }
                if g.point_vectors.insert(a[0].to_string(), data).is_some() {
                    return Err(format!("line {n}: duplicate array `{}`", a[0]));
                }
            }
            "SCALARS" => {
                let a = expect_keyword((n, l), "SCALARS", 3)?;
                let (kind, len) =
                    section.ok_or(format!("line {n}: SCALARS outside a data section"))?;
                if a[1] != "double" || a[2] != "1" || kind != "cell" {
                    return Err(format!(
                        "line {n}: only single-component double cell scalars are expected"
                    ));
                }
                let (m, lt) = lines.next()?;
                if lt != "LOOKUP_TABLE default" {
                    return Err(format!("line {m}: expected LOOKUP_TABLE default"));
                }
                let mut data = Vec::with_capacity(len);
                for _ in 0..len {
                    let v = lines.numbers::<f64>(1)?[0];
                    if !v.is_finite() {
                        return Err(format!("line {n}: non-finite scalar"));
                    }
                    data.push(v);
                }
                if g.cell_scalars.insert(a[0].to_string(), data).is_some() {
                    return Err(format!("line {n}: duplicate array `{}`", a[0]));
                }
            }
            other => return Err(format!("line {n}: unexpected keyword `{other}`")),
        }
    }
    Ok(g)
}
