//! Plain-text network checkpoints.
//!
//! ```text
//! qnn-checkpoint 1
//! sample_qubits 2
//! total_qubits 4
//! bandwidth 2
//! readout parity 0 1 -1 1
//! qp 0 0,2 <16 coefficients>
//! qp 0 1,3 <16 coefficients>
//! qp 1 0,1 <16 coefficients>
//! ```
//!
//! `qp` lines carry the layer, the comma-separated support and the
//! coefficients in word order, each written with 17 significant digits so
//! values survive a round trip exactly. Blank lines and lines starting with
//! `#` are ignored. A computational readout is written
//! `readout computational <qubit> <label0> <label1>`.

use std::fmt::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::qnn::{BandLimitedQp, Network, Readout};

const MAGIC: &str = "qnn-checkpoint 1";

pub fn to_text(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "sample_qubits {}", net.sample_qubits());
    let _ = writeln!(out, "total_qubits {}", net.total_qubits());
    let _ = writeln!(out, "bandwidth {}", net.bandwidth());
    match net.readout() {
        Readout::Parity { qubits, even, odd } => {
            let _ = writeln!(
                out,
                "readout parity {} {} {even} {odd}",
                qubits[0], qubits[1]
            );
        }
        Readout::Computational { qubit, zero, one } => {
            let _ = writeln!(out, "readout computational {qubit} {zero} {one}");
        }
    }
    for (l, layer) in net.layers().iter().enumerate() {
        for qp in layer {
            let support: Vec<String> = qp.support().iter().map(usize::to_string).collect();
            let _ = write!(out, "qp {l} {}", support.join(","));
            for a in qp.coefficients() {
                let _ = write!(out, " {a:.16e}");
            }
            out.push('\n');
        }
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: FromStr>(line: usize, token: Option<&str>, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{token}'")))
}

pub fn from_text(text: &str) -> Result<Network> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((n, l)) => return Err(parse_err(n, format!("expected '{MAGIC}', found '{l}'"))),
        None => return Err(parse_err(0, "empty checkpoint")),
    }

    let mut sample_qubits = None;
    let mut total_qubits = None;
    let mut bandwidth = None;
    let mut readout = None;
    let mut layers: Vec<Vec<BandLimitedQp>> = Vec::new();

    for (n, line) in lines {
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap_or_default();
        match key {
            "sample_qubits" => {
                sample_qubits = Some(field::<usize>(n, tokens.next(), "qubit count")?)
            }
            "total_qubits" => total_qubits = Some(field::<usize>(n, tokens.next(), "qubit count")?),
            "bandwidth" => bandwidth = Some(field::<usize>(n, tokens.next(), "bandwidth")?),
            "readout" => {
                readout = Some(match tokens.next() {
                    Some("parity") => Readout::Parity {
                        qubits: [
                            field(n, tokens.next(), "qubit")?,
                            field(n, tokens.next(), "qubit")?,
                        ],
                        even: field(n, tokens.next(), "label")?,
                        odd: field(n, tokens.next(), "label")?,
                    },
                    Some("computational") => Readout::Computational {
                        qubit: field(n, tokens.next(), "qubit")?,
                        zero: field(n, tokens.next(), "label")?,
                        one: field(n, tokens.next(), "label")?,
                    },
                    other => return Err(parse_err(n, format!("unknown readout {other:?}"))),
                });
            }
            "qp" => {
                let layer: usize = field(n, tokens.next(), "layer")?;
                if layer > layers.len() {
                    return Err(parse_err(
                        n,
                        format!("layer {layer} listed before layer {}", layers.len()),
                    ));
                }
                let support_text = tokens
                    .next()
                    .ok_or_else(|| parse_err(n, "missing support"))?;
                let support = support_text
                    .split(',')
                    .map(|q| field::<usize>(n, Some(q), "support qubit"))
                    .collect::<Result<Vec<_>>>()?;
                let coefficients = tokens
                    .by_ref()
                    .map(|t| field::<f64>(n, Some(t), "coefficient"))
                    .collect::<Result<Vec<_>>>()?;
                let qp = BandLimitedQp::new(support, coefficients)
                    .map_err(|e| parse_err(n, e.to_string()))?;
                if layer == layers.len() {
                    layers.push(Vec::new());
                }
                layers[layer].push(qp);
            }
            other => return Err(parse_err(n, format!("unknown key '{other}'"))),
        }
        if key != "qp" {
            if let Some(extra) = tokens.next() {
                return Err(parse_err(n, format!("unexpected trailing '{extra}'")));
            }
        }
    }

    let missing = |what: &str| parse_err(0, format!("missing {what}"));
    Network::new(
        sample_qubits.ok_or_else(|| missing("sample_qubits"))?,
        total_qubits.ok_or_else(|| missing("total_qubits"))?,
        bandwidth.ok_or_else(|| missing("bandwidth"))?,
        layers,
        readout.ok_or_else(|| missing("readout"))?,
    )
}
