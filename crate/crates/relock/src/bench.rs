//! ISCAS/MCNC `.bench` netlists.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use relock_core::circuit::{Circuit, CircuitBuilder, CircuitError, GateId, GateType};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: sequential element `{kind}` driving `{net}` (only combinational netlists are supported)")]
    Sequential {
        line: usize,
        net: String,
        kind: String,
    },
    #[error("line {line}: undefined net `{net}`")]
    Undefined { line: usize, net: String },
    #[error("line {line}: net `{net}` is defined more than once")]
    Redefined { line: usize, net: String },
    #[error("combinational loop through net `{0}`")]
    Cycle(String),
    #[error("no primary outputs declared")]
    NoOutputs,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

const SEQUENTIAL: [&str; 4] = ["DFF", "DFFR", "LATCH", "SDFF"];

enum Def<'a> {
    Input,
    Gate { kind: GateType, args: Vec<&'a str> },
}

fn syntax(line: usize, msg: impl Into<String>) -> BenchError {
    BenchError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn valid_net(s: &str) -> bool {
    !s.is_empty() && !s.contains(|c: char| c.is_whitespace() || "()=,#".contains(c))
}

/// Splits `KEYWORD(args)` into the keyword and the raw argument list.
fn call(line: usize, s: &str) -> Result<(&str, &str), BenchError> {
    let open = s.find('(').ok_or_else(|| syntax(line, "expected `(`"))?;
    let rest = s[open + 1..].trim_end();
    let body = rest
        .strip_suffix(')')
        .ok_or_else(|| syntax(line, "expected `)` at end of line"))?;
    if body.contains(['(', ')']) {
        return Err(syntax(line, "unbalanced parentheses"));
    }
    Ok((s[..open].trim(), body))
}

pub fn parse_bench(text: &str) -> Result<Circuit, BenchError> {
    let mut defs: Vec<(usize, &str, Def)> = Vec::new();
    let mut ids: HashMap<&str, GateId> = HashMap::new();
    let mut outputs: Vec<(usize, &str)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap().trim();
        if s.is_empty() {
            continue;
        }
        let (net, def) = if let Some(eq) = s.find('=') {
            let net = s[..eq].trim();
            if !valid_net(net) {
                return Err(syntax(line, format!("invalid net name `{net}`")));
            }
            let (kw, body) = call(line, s[eq + 1..].trim())?;
            if SEQUENTIAL.iter().any(|q| q.eq_ignore_ascii_case(kw)) {
                return Err(BenchError::Sequential {
                    line,
                    net: net.into(),
                    kind: kw.into(),
                });
            }
            let kind = match GateType::from_keyword(kw) {
                Some(GateType::Input) | None => {
                    return Err(syntax(line, format!("unknown gate type `{kw}`")))
                }
                Some(k) => k,
            };
            let args: Vec<&str> = body.split(',').map(str::trim).collect();
            if let Some(bad) = args.iter().find(|a| !valid_net(a)) {
                return Err(syntax(line, format!("invalid fan-in `{bad}`")));
            }
            if !kind.accepts_fanin(args.len()) {
                return Err(syntax(
                    line,
                    format!("{kind} cannot take {} input(s)", args.len()),
                ));
            }
            (net, Def::Gate { kind, args })
        } else {
            let (kw, body) = call(line, s)?;
            let net = body.trim();
            if !valid_net(net) {
                return Err(syntax(line, format!("invalid net name `{net}`")));
            }
            if kw.eq_ignore_ascii_case("INPUT") {
                (net, Def::Input)
            } else if kw.eq_ignore_ascii_case("OUTPUT") {
                outputs.push((line, net));
                continue;
            } else {
                return Err(syntax(
                    line,
                    format!("expected INPUT, OUTPUT or an assignment, found `{kw}`"),
                ));
            }
        };
        if ids.insert(net, GateId(defs.len() as u32)).is_some() {
            return Err(BenchError::Redefined {
                line,
                net: net.into(),
            });
        }
        defs.push((line, net, def));
    }

    let mut b = CircuitBuilder::new();
    for (line, net, def) in &defs {
        match def {
            Def::Input => b.add_input(*net)?,
            Def::Gate { kind, args } => {
                let fanin = args
                    .iter()
                    .map(|a| {
                        ids.get(a).copied().ok_or_else(|| BenchError::Undefined {
                            line: *line,
                            net: (*a).into(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                b.add_gate(*net, *kind, fanin)?
            }
        };
    }
    for (line, net) in outputs {
        let id = ids.get(net).copied().ok_or_else(|| BenchError::Undefined {
            line,
            net: net.into(),
        })?;
        b.add_output(id);
    }
    b.build().map_err(|e| match e {
        CircuitError::Cycle(n) => BenchError::Cycle(n),
        CircuitError::NoOutputs => BenchError::NoOutputs,
        other => BenchError::Circuit(other),
    })
}

pub fn read_bench(path: &Path) -> Result<Circuit, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_bench(&text)
}

/// Serializes definitions in gate-id order, so that parsing the text back
/// yields a structurally identical circuit. OUTPUT lines follow the leading
/// run of INPUT lines.
pub fn write_bench(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} inputs, {} outputs, {} gates",
        c.num_inputs(),
        c.num_outputs(),
        c.num_gates()
    );
    let mut outputs_written = false;
    let emit_outputs = |out: &mut String| {
        for &o in c.outputs() {
            let _ = writeln!(out, "OUTPUT({})", c.name(o));
        }
    };
    for id in c.ids() {
        let g = c.gate(id);
        if g.kind == GateType::Input {
            let _ = writeln!(out, "INPUT({})", c.name(id));
            continue;
        }
        if !outputs_written {
            emit_outputs(&mut out);
            out.push('\n');
            outputs_written = true;
        }
        let args: Vec<&str> = g.fanin.iter().map(|&f| c.name(f)).collect();
        let _ = writeln!(out, "{} = {}({})", c.name(id), g.kind, args.join(", "));
    }
    if !outputs_written {
        emit_outputs(&mut out);
    }
    out
}
