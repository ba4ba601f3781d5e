//! Extended-XYZ reading and writing.
//!
//! Each frame is an atom-count line, a comment line of `key=value` pairs
//! (`Lattice`, `Properties`, `pbc`, `energy`, plus arbitrary extras) and
//! one row per atom. Without a `Properties` key the rows are read as plain
//! XYZ (`symbol x y z`).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{check_selection, Dataset, Structure};

/// One parsed frame before conversion into a [`Structure`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtXyzFrame {
    /// Comment-line pairs in file order, values unquoted.
    pub info: Vec<(String, String)>,
    pub symbols: Vec<String>,
    pub positions: Vec<Vector3<f64>>,
    pub forces: Option<Vec<Vector3<f64>>>,
    /// 1-based line number of the atom-count line.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Property {
    name: String,
    kind: char,
    count: usize,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Split a comment line into `key=value` pairs. Bare keys map to `"T"`.
pub fn parse_comment_line(text: &str, line: usize) -> Result<Vec<(String, String)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut pairs = Vec::new();

    let read_quoted = |pos: &mut usize| -> Result<String> {
        let mut out = String::new();
        *pos += 1;
        while *pos < chars.len() {
            match chars[*pos] {
                '\\' if *pos + 1 < chars.len() => {
                    out.push(chars[*pos + 1]);
                    *pos += 2;
                }
                '"' => {
                    *pos += 1;
                    return Ok(out);
                }
                c => {
                    out.push(c);
                    *pos += 1;
                }
            }
        }
        Err(parse_error(
            line,
            "unterminated quoted string in comment line",
        ))
    };

    while pos < chars.len() {
        if chars[pos].is_whitespace() {
            pos += 1;
            continue;
        }
        let key = if chars[pos] == '"' {
            read_quoted(&mut pos)?
        } else {
            let start = pos;
            while pos < chars.len() && !chars[pos].is_whitespace() && chars[pos] != '=' {
                pos += 1;
            }
            chars[start..pos].iter().collect()
        };
        if key.is_empty() {
            return Err(parse_error(line, "empty key in comment line"));
        }
        if pos < chars.len() && chars[pos] == '=' {
            pos += 1;
            let value = match chars.get(pos) {
                Some('"') => read_quoted(&mut pos)?,
                Some('{') => {
                    let start = pos + 1;
                    while pos < chars.len() && chars[pos] != '}' {
                        pos += 1;
                    }
                    if pos == chars.len() {
                        return Err(parse_error(line, "unterminated '{' in comment line"));
                    }
                    pos += 1;
                    chars[start..pos - 1].iter().collect()
                }
                _ => {
                    let start = pos;
                    while pos < chars.len() && !chars[pos].is_whitespace() {
                        pos += 1;
                    }
                    chars[start..pos].iter().collect()
                }
            };
            pairs.push((key, value));
        } else {
            pairs.push((key, "T".to_string()));
        }
    }
    Ok(pairs)
}

fn parse_properties(value: &str, line: usize) -> Result<Vec<Property>> {
    let parts: Vec<&str> = value.split(':').collect();
    if !parts.len().is_multiple_of(3) {
        return Err(parse_error(line, format!("malformed Properties '{value}'")));
    }
    parts
        .chunks_exact(3)
        .map(|p| {
            let kind = match p[1] {
                "S" | "R" | "I" | "L" => p[1].chars().next().expect("non-empty"),
                other => {
                    return Err(parse_error(
                        line,
                        format!("unknown property type '{other}'"),
                    ))
                }
            };
            let count = p[2]
                .parse::<usize>()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| parse_error(line, format!("bad column count '{}'", p[2])))?;
            Ok(Property {
                name: p[0].to_string(),
                kind,
                count,
            })
        })
        .collect()
}

fn parse_bool(token: &str) -> Option<bool> {
    match token {
        "T" | "True" | "true" | "1" => Some(true),
        "F" | "False" | "false" | "0" => Some(false),
        _ => None,
    }
}

fn parse_f64(token: &str, line: usize, what: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| parse_error(line, format!("invalid {what} '{token}'")))
}

/// Column layout of the atom rows.
struct Layout {
    width: usize,
    species: usize,
    pos: usize,
    forces: Option<usize>,
    strict: bool,
}

fn layout(properties: Option<&str>, line: usize) -> Result<Layout> {
    let Some(properties) = properties else {
        return Ok(Layout {
            width: 4,
            species: 0,
            pos: 1,
            forces: None,
            strict: false,
        });
    };
    let props = parse_properties(properties, line)?;
    let mut column = 0;
    let (mut species, mut pos, mut forces) = (None, None, None);
    for p in &props {
        match (p.name.as_str(), p.kind, p.count) {
            ("species" | "symbols", 'S', 1) => species = Some(column),
            ("pos" | "positions", 'R', 3) => pos = Some(column),
            ("forces" | "force", 'R', 3) => forces = Some(column),
            _ => {}
        }
        column += p.count;
    }
    Ok(Layout {
        width: column,
        species: species.ok_or_else(|| parse_error(line, "Properties lacks species:S:1"))?,
        pos: pos.ok_or_else(|| parse_error(line, "Properties lacks pos:R:3"))?,
        forces,
        strict: true,
    })
}

fn vector_at(fields: &[&str], start: usize, line: usize, what: &str) -> Result<Vector3<f64>> {
    Ok(Vector3::new(
        parse_f64(fields[start], line, what)?,
        parse_f64(fields[start + 1], line, what)?,
        parse_f64(fields[start + 2], line, what)?,
    ))
}

/// Parse every frame of an extended-XYZ text.
pub fn parse_frames(text: &str) -> Result<Vec<ExtXyzFrame>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut frames = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let count_line = i + 1;
        let n_atoms: usize = lines[i].trim().parse().map_err(|_| {
            parse_error(
                count_line,
                format!("expected atom count, got '{}'", lines[i].trim()),
            )
        })?;
        let comment = lines
            .get(i + 1)
            .ok_or_else(|| parse_error(count_line + 1, "missing comment line"))?;
        let info = parse_comment_line(comment, count_line + 1)?;
        let properties = info
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("properties"))
            .map(|(_, v)| v.as_str());
        let layout = layout(properties, count_line + 1)?;

        let mut symbols = Vec::with_capacity(n_atoms);
        let mut positions = Vec::with_capacity(n_atoms);
        let mut forces = layout.forces.map(|_| Vec::with_capacity(n_atoms));
        for atom in 0..n_atoms {
            let line_no = count_line + 2 + atom;
            let row = lines.get(i + 2 + atom).ok_or_else(|| {
                parse_error(
                    line_no,
                    format!("frame declares {n_atoms} atoms but only {atom} rows follow"),
                )
            })?;
            let fields: Vec<&str> = row.split_whitespace().collect();
            if fields.len() < layout.width || (layout.strict && fields.len() != layout.width) {
                return Err(parse_error(
                    line_no,
                    format!("expected {} columns, found {}", layout.width, fields.len()),
                ));
            }
            symbols.push(fields[layout.species].to_string());
            positions.push(vector_at(&fields, layout.pos, line_no, "coordinate")?);
            if let (Some(out), Some(col)) = (forces.as_mut(), layout.forces) {
                out.push(vector_at(&fields, col, line_no, "force")?);
            }
        }
        frames.push(ExtXyzFrame {
            info,
            symbols,
            positions,
            forces,
            line: count_line,
        });
        i += 2 + n_atoms;
    }
    Ok(frames)
}

impl ExtXyzFrame {
    pub fn into_structure(self) -> Result<Structure> {
        let line = self.line + 1;
        let mut cell = None;
        let mut pbc = None;
        let mut energy = None;
        let mut extras = Vec::new();
        for (key, value) in self.info {
            match key.to_ascii_lowercase().as_str() {
                "lattice" => {
                    let v: Vec<f64> = value
                        .split_whitespace()
                        .map(|t| parse_f64(t, line, "Lattice entry"))
                        .collect::<Result<_>>()?;
                    if v.len() != 9 {
                        return Err(parse_error(
                            line,
                            format!("Lattice has {} values, expected 9", v.len()),
                        ));
                    }
                    cell = Some(Matrix3::from_row_slice(&v));
                }
                "pbc" => {
                    let flags: Vec<bool> = value
                        .split_whitespace()
                        .map(|t| {
                            parse_bool(t)
                                .ok_or_else(|| parse_error(line, format!("invalid pbc flag '{t}'")))
                        })
                        .collect::<Result<_>>()?;
                    if flags.len() != 3 {
                        return Err(parse_error(line, "pbc needs three flags"));
                    }
                    pbc = Some([flags[0], flags[1], flags[2]]);
                }
                "energy" => energy = Some(parse_f64(&value, line, "energy")?),
                "properties" => {}
                _ => extras.push((key, value)),
            }
        }
        let pbc = pbc.unwrap_or([cell.is_some(); 3]);
        let cell = cell.unwrap_or_else(Matrix3::zeros);
        let mut structure = Structure::new(cell, pbc, self.positions, self.symbols)
            .map_err(|e| parse_error(self.line, e.to_string()))?
            .with_info(extras);
        if let Some(forces) = self.forces {
            structure = structure.with_forces(forces)?;
        }
        if let Some(energy) = energy {
            structure = structure.with_energy(energy);
        }
        Ok(structure)
    }
}

/// Read every frame from a stream.
pub fn read_extxyz(mut reader: impl Read, name: &str) -> Result<Dataset> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let structures = parse_frames(&text)?
        .into_iter()
        .map(ExtXyzFrame::into_structure)
        .collect::<Result<_>>()?;
    Ok(Dataset::new(name, structures))
}

/// Read a file; the dataset is named after the file stem.
pub fn read_extxyz_file(path: &Path) -> Result<Dataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_extxyz(File::open(path)?, &name)
}

fn quote(value: &str) -> String {
    if !value.is_empty()
        && !value
            .chars()
            .any(|c| c.is_whitespace() || c == '"' || c == '=' || c == '\\')
    {
        return value.to_string();
    }
    let escaped = value.replace('\\', "\\\\").replace('"', "\\\"");
    format!("\"{escaped}\"")
}

fn flag(b: bool) -> &'static str {
    if b {
        "T"
    } else {
        "F"
    }
}

fn write_structure(out: &mut impl Write, s: &Structure) -> Result<()> {
    writeln!(out, "{}", s.n_atoms())?;
    let mut comment = Vec::new();
    if s.is_periodic() || s.cell().iter().any(|&x| x != 0.0) {
        let c = s.cell();
        let values: Vec<String> = (0..3)
            .flat_map(|r| (0..3).map(move |col| format!("{:?}", c[(r, col)])))
            .collect();
        comment.push(format!("Lattice=\"{}\"", values.join(" ")));
    }
    let mut properties = "species:S:1:pos:R:3".to_string();
    if s.forces().is_some() {
        properties.push_str(":forces:R:3");
    }
    comment.push(format!("Properties={properties}"));
    if let Some(e) = s.energy() {
        comment.push(format!("energy={e:?}"));
    }
    let pbc = s.pbc();
    comment.push(format!(
        "pbc=\"{} {} {}\"",
        flag(pbc[0]),
        flag(pbc[1]),
        flag(pbc[2])
    ));
    for (key, value) in s.info() {
        comment.push(format!("{}={}", quote(key), quote(value)));
    }
    writeln!(out, "{}", comment.join(" "))?;
    for (atom, p) in s.positions().iter().enumerate() {
        write!(out, "{} {:?} {:?} {:?}", s.species()[atom], p.x, p.y, p.z)?;
        if let Some(f) = s.forces() {
            write!(out, " {:?} {:?} {:?}", f[atom].x, f[atom].y, f[atom].z)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Write the structures at `selection`, in that order.
pub fn write_extxyz(dataset: &Dataset, selection: &[usize], out: impl Write) -> Result<()> {
    check_selection(selection, dataset.len())?;
    let mut out = BufWriter::new(out);
    for &i in selection {
        write_structure(&mut out, &dataset.structures[i])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_extxyz_file(dataset: &Dataset, selection: &[usize], path: &Path) -> Result<()> {
    write_extxyz(dataset, selection, File::create(path)?)
}
