//! Reader and writer for MATPOWER version-2 case files.
//!
//! Only the `baseMVA`, `bus`, `gen` and `branch` fields are interpreted;
//! other assignments (`gencost`, cell arrays, ...) are skipped.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{BusId, Error, Result};
use crate::scalar::{cx, Real};

use super::{Branch, Bus, BusKind, NetworkModel};

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

/// Raw case matrices in MATPOWER units (MW, MVAr, degrees).
#[derive(Debug, Clone, PartialEq)]
pub struct MatpowerCase {
    pub base_mva: f64,
    pub bus: Vec<Vec<f64>>,
    pub gen: Vec<Vec<f64>>,
    pub branch: Vec<Vec<f64>>,
}

/// Parses case text straight into a validated model.
pub fn parse_matpower<T: Real>(text: &str) -> Result<NetworkModel<T>> {
    MatpowerCase::parse(text)?.to_model()
}

struct RawMatrix {
    rows: Vec<Vec<f64>>,
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '\'' => in_str = !in_str,
            '%' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    match tok {
        "Inf" | "inf" => Ok(f64::INFINITY),
        "-Inf" | "-inf" => Ok(f64::NEG_INFINITY),
        "NaN" | "nan" => Ok(f64::NAN),
        _ => tok.parse::<f64>().map_err(|_| Error::Parse {
            line,
            message: format!("invalid number `{tok}`"),
        }),
    }
}

/// Pulls `mpc.<name> = <value>` assignments out of the text.
fn scan(text: &str) -> Result<(HashMap<String, RawMatrix>, HashMap<String, (String, usize)>)> {
    let mut matrices = HashMap::new();
    let mut scalars = HashMap::new();
    let lines: Vec<&str> = text.lines().map(strip_comment).collect();
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 1;
        let line = lines[i].trim();
        i += 1;
        let Some(rest) = line.strip_prefix("mpc.") else {
            continue;
        };
        let Some((name, value)) = rest.split_once('=') else {
            continue;
        };
        let name = name.trim().to_string();
        let value = value.trim();
        if let Some(body) = value.strip_prefix('[') {
            let mut rows: Vec<Vec<f64>> = Vec::new();
            let mut current: Vec<f64> = Vec::new();
            let mut chunk = body.to_string();
            let mut chunk_line = lineno;
            loop {
                let (content, closed) = match chunk.find(']') {
                    Some(p) => (chunk[..p].to_string(), true),
                    None => (chunk.clone(), false),
                };
                for (k, piece) in content.split(';').enumerate() {
                    if k > 0 && !current.is_empty() {
                        rows.push(std::mem::take(&mut current));
                    }
                    for tok in piece
                        .split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|t| !t.is_empty() && *t != "...")
                    {
                        current.push(parse_number(tok, chunk_line)?);
                    }
                }
                // a newline also ends a row
                if !current.is_empty() {
                    rows.push(std::mem::take(&mut current));
                }
                if closed {
                    break;
                }
                if i >= lines.len() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("unterminated matrix `{name}`"),
                    });
                }
                chunk = lines[i].to_string();
                chunk_line = i + 1;
                i += 1;
            }
            matrices.insert(name, RawMatrix { rows });
        } else if value.starts_with('{') {
            let mut depth_closed = value.contains('}');
            while !depth_closed && i < lines.len() {
                depth_closed = lines[i].contains('}');
                i += 1;
            }
        } else {
            let v = value.trim_end_matches(';').trim().to_string();
            scalars.insert(name, (v, lineno));
        }
    }
    Ok((matrices, scalars))
}

fn take_matrix(
    matrices: &mut HashMap<String, RawMatrix>,
    name: &str,
    min_cols: usize,
) -> Result<Vec<Vec<f64>>> {
    let m = matrices
        .remove(name)
        .ok_or_else(|| Error::MissingField(format!("mpc.{name}")))?;
    let width = m.rows.first().map_or(0, Vec::len);
    for (r, row) in m.rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::MalformedRow {
                matrix: name.into(),
                row: r + 1,
                message: format!("expected {width} columns, found {}", row.len()),
            });
        }
        if row.len() < min_cols {
            return Err(Error::MalformedRow {
                matrix: name.into(),
                row: r + 1,
                message: format!("expected at least {min_cols} columns, found {}", row.len()),
            });
        }
    }
    Ok(m.rows)
}

fn bus_id(matrix: &str, row: usize, v: f64) -> Result<BusId> {
    if v >= 1.0 && v.fract() == 0.0 && v <= BusId::MAX as f64 {
        Ok(v as BusId)
    } else {
        Err(Error::MalformedRow {
            matrix: matrix.into(),
            row: row + 1,
            message: format!("invalid bus number {v}"),
        })
    }
}

impl MatpowerCase {
    pub fn parse(text: &str) -> Result<Self> {
        let (mut matrices, scalars) = scan(text)?;
        if let Some((v, line)) = scalars.get("version") {
            let v = v.trim_matches(|c| c == '\'' || c == '"');
            if v != "2" {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("unsupported case version `{v}`"),
                });
            }
        }
        let (base, line) = scalars
            .get("baseMVA")
            .ok_or_else(|| Error::MissingField("mpc.baseMVA".into()))?;
        let base_mva = parse_number(base, *line)?;
        Ok(Self {
            base_mva,
            bus: take_matrix(&mut matrices, "bus", BUS_COLS)?,
            gen: take_matrix(&mut matrices, "gen", GEN_COLS)?,
            branch: take_matrix(&mut matrices, "branch", BRANCH_COLS)?,
        })
    }

    /// Converts to per-unit and validates. Generators at a bus are netted;
    /// a generator bus with no in-service unit becomes PQ.
    pub fn to_model<T: Real>(&self) -> Result<NetworkModel<T>> {
        let base = self.base_mva;
        let mut order: Vec<BusId> = Vec::with_capacity(self.bus.len());
        let mut row_of: HashMap<BusId, usize> = HashMap::new();
        for (r, row) in self.bus.iter().enumerate() {
            let id = bus_id("bus", r, row[0])?;
            if row_of.insert(id, r).is_some() {
                return Err(Error::DuplicateBus(id));
            }
            order.push(id);
        }

        let mut gen_p = vec![0.0; self.bus.len()];
        let mut gen_q = vec![0.0; self.bus.len()];
        let mut vset: Vec<Option<f64>> = vec![None; self.bus.len()];
        for (r, g) in self.gen.iter().enumerate() {
            let id = bus_id("gen", r, g[0])?;
            let &k = row_of.get(&id).ok_or(Error::UnknownBus(id))?;
            if g[7] <= 0.0 {
                continue;
            }
            gen_p[k] += g[1];
            gen_q[k] += g[2];
            let kind = self.bus[k][1];
            match vset[k] {
                Some(prev) if prev != g[5] && (kind == 2.0 || kind == 3.0) => {
                    return Err(Error::ConflictingSetpoint {
                        bus: id,
                        first: prev,
                        second: g[5],
                    })
                }
                Some(_) => {}
                None => vset[k] = Some(g[5]),
            }
        }

        let mut buses = Vec::with_capacity(self.bus.len());
        for (r, row) in self.bus.iter().enumerate() {
            let id = order[r];
            let kind = match row[1] as i64 {
                1 => BusKind::Pq,
                2 => BusKind::Pv,
                3 => BusKind::Slack,
                4 => return Err(Error::Disconnected(id)),
                other => {
                    return Err(Error::MalformedRow {
                        matrix: "bus".into(),
                        row: r + 1,
                        message: format!("unknown bus type {other}"),
                    })
                }
            };
            let kind = match (kind, vset[r]) {
                (BusKind::Pv, None) => BusKind::Pq,
                (k, _) => k,
            };
            let v_setpoint = match kind {
                BusKind::Pq => row[7],
                _ => vset[r].ok_or(Error::MissingSetpoint(id))?,
            };
            buses.push(Bus {
                id,
                kind,
                p_inject: T::lit((gen_p[r] - row[2]) / base),
                q_inject: T::lit((gen_q[r] - row[3]) / base),
                v_setpoint: T::lit(v_setpoint),
                v0_angle: T::lit(row[8].to_radians()),
                shunt_g: T::lit(row[4] / base),
                shunt_b: T::lit(row[5] / base),
            });
        }

        let mut branches = Vec::with_capacity(self.branch.len());
        for (r, row) in self.branch.iter().enumerate() {
            let ratio = if row[8] == 0.0 { 1.0 } else { row[8] };
            let shift = row[9].to_radians();
            branches.push(Branch {
                from: bus_id("branch", r, row[0])?,
                to: bus_id("branch", r, row[1])?,
                series_z: cx(T::lit(row[2]), T::lit(row[3])),
                charging_b: T::lit(row[4]),
                tap: cx(T::lit(ratio * shift.cos()), T::lit(ratio * shift.sin())),
                in_service: row[10] > 0.0,
            });
        }
        NetworkModel::new(buses, branches, T::lit(base))
    }

    /// Multiplies every bus's reactive load `Qd` by `factor`.
    pub fn scale_reactive_load(&mut self, factor: f64) {
        for row in &mut self.bus {
            row[3] *= factor;
        }
    }

    /// Serializes as a MATPOWER function file named `name`.
    pub fn to_text(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "function mpc = {name}");
        let _ = writeln!(s, "mpc.version = '2';");
        let _ = writeln!(s, "mpc.baseMVA = {};", self.base_mva);
        for (field, rows) in [("bus", &self.bus), ("gen", &self.gen), ("branch", &self.branch)] {
            let _ = writeln!(s, "\nmpc.{field} = [");
            for row in rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                let _ = writeln!(s, "\t{};", cells.join("\t"));
            }
            let _ = writeln!(s, "];");
        }
        s
    }
}
