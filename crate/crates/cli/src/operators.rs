//! Operator names accepted on the command line: `I`, `Jx`, `Jy`, `Jz`,
//! `J+`, `J-`, `Rz(theta)`, and `@file.json` for a dense operator file.

use spinsense::{build_spin_operators, rotation_unitary, RotationAxis, SpinJ, SpinOperator};

use crate::error::CliError;
use crate::input::read_source;

pub fn parse_operator(token: &str, j: SpinJ) -> Result<SpinOperator, CliError> {
    let token = token.trim();
    let ops = build_spin_operators(j);
    let op = match token {
        "I" => SpinOperator::identity(j),
        "Jx" => ops.jx,
        "Jy" => ops.jy,
        "Jz" => ops.jz,
        "J+" => ops.jplus,
        "J-" => ops.jminus,
        _ => {
            if let Some(path) = token.strip_prefix('@') {
                let text = read_source(path)?;
                let op: SpinOperator = serde_json::from_str(&text)
                    .map_err(|e| CliError::Input(format!("operator file {path}: {e}")))?;
                if op.j() != j {
                    return Err(CliError::Input(format!(
                        "operator file {path} acts on twice_j = {}, expected {}",
                        op.j().twice_j(),
                        j.twice_j()
                    )));
                }
                op
            } else if let Some(arg) = token.strip_prefix("Rz(").and_then(|s| s.strip_suffix(')')) {
                let theta: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("bad angle in {token}")))?;
                rotation_unitary(j, theta, &RotationAxis::Z).relabel(token)
            } else {
                return Err(CliError::Input(format!(
                    "unknown operator {token:?} (expected I, Jx, Jy, Jz, J+, J-, Rz(theta) or @file.json)"
                )));
            }
        }
    };
    Ok(op)
}

pub fn parse_operator_list(list: &str, j: SpinJ) -> Result<Vec<SpinOperator>, CliError> {
    let ops = list
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_operator(t, j))
        .collect::<Result<Vec<_>, _>>()?;
    if ops.is_empty() {
        return Err(CliError::Input("operator list is empty".into()));
    }
    Ok(ops)
}

/// `x`, `y`, `z`, or a unit vector `ux,uy,uz`.
pub fn parse_axis(text: &str) -> Result<RotationAxis, CliError> {
    match text.trim() {
        "x" | "X" => Ok(RotationAxis::X),
        "y" | "Y" => Ok(RotationAxis::Y),
        "z" | "Z" => Ok(RotationAxis::Z),
        other => {
            let parts: Vec<f64> = other
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Input(format!("bad axis {other:?}")))?;
            match parts.as_slice() {
                [x, y, z] => Ok(RotationAxis::new(*x, *y, *z)?),
                _ => Err(CliError::Input(format!("axis needs three components, got {other:?}"))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary() {
        let j = SpinJ::integer(1);
        let ops = parse_operator_list("I, Jx,Jy,Jz,J+,J-,Rz(0.5)", j).unwrap();
        assert_eq!(ops.len(), 7);
        assert_eq!(ops[4].matrix()[(0, 1)].re, 2f64.sqrt());
        assert!(ops[6].unitary_deviation() < 1e-14);
        assert!(parse_operator("Jq", j).is_err());
        assert!(parse_operator("Rz(abc)", j).is_err());
        assert!(parse_operator_list(" , ", j).is_err());
    }

    #[test]
    fn axes() {
        assert_eq!(parse_axis("z").unwrap().vector().z, 1.0);
        assert!(parse_axis("0.6,0.8,0").is_ok());
        assert!(parse_axis("1,1,0").is_err());
        assert!(parse_axis("1,0").is_err());
    }
}
