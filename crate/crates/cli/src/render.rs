//! CSV and JSON renderings of saved reports.
//!
//! CSV columns per command:
//! - `validate`: `x,y,s,z,entries,exact`
//! - `sym`: `u,a,b,feasible,residual` (diagonal checks leave `a` and `b` empty)
//! - `capacity`: `r1,r2`, hull vertices counterclockwise from the origin
//! - `gtable`: `A,g_lower,g_upper,exact,witness` (witness cells `r:c` joined by `;`)
//! - `attack`: `m,u,l,n,trials,seed,restricted,estimate,std_err,bound,pass`
//! - `decode-sim`: `state,mean,std_err,trials,exact`
//! - `goodcode`: `state,a_complement,b_complement,c_complement,a_bound,bc_bound,margin,passes`

use anyhow::{anyhow, bail, Result};
use serde_json::Value;

use crate::report::{canonical_json, fmt_float};

fn get<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Value> {
    let mut cur = v;
    for key in path {
        cur = cur.get(*key).ok_or_else(|| anyhow!("report field {} missing", path.join(".")))?;
    }
    Ok(cur)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => fmt_float(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn row(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

fn fields(obj: &Value, keys: &[&str]) -> Result<Vec<String>> {
    keys.iter().map(|k| get(obj, &[k]).map(cell)).collect()
}

fn state_label(s: &Value) -> Result<String> {
    let arr = s.as_array().ok_or_else(|| anyhow!("state must be an array"))?;
    Ok(arr.iter().map(cell).collect::<Vec<_>>().join(" "))
}

pub fn render(report: &Value, format: &str) -> Result<String> {
    match format {
        "json" => return Ok(canonical_json(report)),
        "csv" => {}
        other => bail!("unknown format {other:?}; expected csv or json"),
    }
    let command = get(report, &["command"])?
        .as_str()
        .ok_or_else(|| anyhow!("report field command is not a string"))?;
    let result = get(report, &["result"])?;
    let mut out = String::new();
    match command {
        "validate" => {
            out += "x,y,s,z,entries,exact\n";
            out += &row(&fields(result, &["x", "y", "s", "z", "entries", "exact"])?);
        }
        "sym" => {
            out += "u,a,b,feasible,residual\n";
            for v in get(result, &["verdicts"])?.as_array().into_iter().flatten() {
                let u = cell(get(v, &["u"])?);
                let diag = get(v, &["diag"])?;
                out += &row(&[
                    u.clone(),
                    String::new(),
                    String::new(),
                    cell(get(diag, &["feasible"])?),
                    cell(get(diag, &["min_residual"])?),
                ]);
                for r in get(v, &["rect"])?.as_array().into_iter().flatten() {
                    let check = get(r, &["check"])?;
                    out += &row(&[
                        u.clone(),
                        cell(get(r, &["a"])?),
                        cell(get(r, &["b"])?),
                        cell(get(check, &["feasible"])?),
                        cell(get(check, &["min_residual"])?),
                    ]);
                }
            }
        }
        "capacity" => {
            out += "r1,r2\n";
            for p in get(result, &["region", "vertices"])?.as_array().into_iter().flatten() {
                out += &row(&fields(p, &["x", "y"])?);
            }
        }
        "gtable" => {
            out += "A,g_lower,g_upper,exact,witness\n";
            for g in get(result, &["g"])?.as_array().into_iter().flatten() {
                let mut cells = fields(g, &["a", "lower", "upper", "exact"])?;
                let witness: Vec<String> = get(g, &["witness", "cells"])?
                    .as_array()
                    .into_iter()
                    .flatten()
                    .map(|c| format!("{}:{}", cell(&c[0]), cell(&c[1])))
                    .collect();
                cells.push(witness.join(";"));
                out += &row(&cells);
            }
        }
        "attack" => {
            let keys = [
                "m", "u", "l", "n", "trials", "seed", "restricted", "estimate", "std_err", "bound", "pass",
            ];
            out += &row(&keys.map(String::from));
            out += &row(&fields(get(result, &["attack"])?, &keys)?);
        }
        "decode-sim" => {
            out += "state,mean,std_err,trials,exact\n";
            for e in get(result, &["states"])?.as_array().into_iter().flatten() {
                let mut cells = vec![state_label(get(e, &["s"])?)?];
                cells.extend(fields(get(e, &["estimate"])?, &["mean", "std_err", "trials", "exact"])?);
                out += &row(&cells);
            }
        }
        "goodcode" => {
            let keys = [
                "a_complement",
                "b_complement",
                "c_complement",
                "a_bound",
                "bc_bound",
                "margin",
                "passes",
            ];
            out += "state,";
            out += &row(&keys.map(String::from));
            for e in get(result, &["report", "entries"])?.as_array().into_iter().flatten() {
                let mut cells = vec![state_label(get(e, &["s"])?)?];
                cells.extend(fields(e, &keys)?);
                out += &row(&cells);
            }
        }
        other => bail!("unknown report command {other:?}"),
    }
    Ok(out)
}
