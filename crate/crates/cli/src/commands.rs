use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use spinsense::codes::{
    ae_codewords, detection_check, error_of_state, error_small_theta, error_with_recovery, kl_check,
    max_error_over_code, CodeSpace, ConditionReport, ErrorSet, RecoverySet,
};
use spinsense::estimation::{crb_report, EstimationConfig};
use spinsense::metrics::{distinguishability, measurement_distribution, qfi, statistical_distance, Projectors};
use spinsense::sensing::{
    anticoherence_report, construct_anticoherent, default_support, fisher_matrix, AnticoherenceReport, SupportSpec,
};
use spinsense::spin::SpinStateDoc;
use spinsense::{build_spin_operators, evolution, CMatrix, RotationAxis, SpinJ, SpinOperator, SpinState};

use crate::error::CliError;
use crate::input::{load_state, read_json};
use crate::operators::{parse_axis, parse_operator, parse_operator_list};
use crate::output::{complex_rows, emit, to_json, ComplexOut};
use crate::{
    AeArgs, BasisChoice, CodeCheckArgs, Command, Condition, ConstructArgs, DistanceArgs, ErrorArgs, EstimateArgs,
    FisherArgs, QfiArgs, StateCheckArgs, Status,
};

type CmdResult = Result<Status, CliError>;

pub fn run(command: &Command, out: Option<&Path>) -> CmdResult {
    match command {
        Command::StateCheck(a) => state_check(a, out),
        Command::Qfi(a) => qfi_cmd(a, out),
        Command::FisherMatrix(a) => fisher(a, out),
        Command::Construct(a) => construct(a, out),
        Command::AeCode(a) => ae_code(a, out),
        Command::CodeCheck(a) => code_check(a, out),
        Command::Error(a) => error_cmd(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Distance(a) => distance(a, out),
    }
}

fn write<T: Serialize + ?Sized>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    emit(&to_json(value)?, out)?;
    Ok(())
}

fn positive_tol(tol: f64) -> Result<f64, CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(CliError::Input(format!("tolerance must be positive, got {tol}")))
    }
}

/// Axis names map straight to the Cartesian matrices; anything else goes
/// through `u . J`.
fn axis_generator(j: SpinJ, axis: &str) -> Result<(RotationAxis, SpinOperator), CliError> {
    let u = parse_axis(axis)?;
    let ops = build_spin_operators(j);
    let g = match axis.trim() {
        "x" | "X" => ops.jx,
        "y" | "Y" => ops.jy,
        "z" | "Z" => ops.jz,
        _ => ops.along(&u),
    };
    Ok((u, g))
}

#[derive(Serialize)]
struct StateCheckOut {
    twice_j: u32,
    norm_deviation: f64,
    normalized: bool,
    #[serde(flatten)]
    anticoherence: AnticoherenceReport,
    required_order: Option<u8>,
    passed: bool,
}

fn state_check(a: &StateCheckArgs, out: Option<&Path>) -> CmdResult {
    let tol = positive_tol(a.tol)?;
    let doc: SpinStateDoc = read_json(&a.input)?;
    let (j, v) = doc.to_vector()?;
    let norm_deviation = (v.norm_squared() - 1.0).abs();
    let psi = SpinState::from_unnormalized(j, v)?;
    let anticoherence = anticoherence_report(&psi, tol);
    let normalized = norm_deviation <= tol;
    let order_ok = match a.require_order {
        None => true,
        Some(1) => anticoherence.order1,
        Some(_) => anticoherence.order1 && anticoherence.order2,
    };
    let passed = normalized && order_ok;
    write(
        &StateCheckOut {
            twice_j: j.twice_j(),
            norm_deviation,
            normalized,
            anticoherence,
            required_order: a.require_order,
            passed,
        },
        out,
    )?;
    Ok(if passed { Status::Ok } else { Status::CheckFailed })
}

fn qfi_cmd(a: &QfiArgs, out: Option<&Path>) -> CmdResult {
    let psi = load_state(&a.source.state, a.source.twice_j)?;
    let g = match (&a.axis, &a.generator) {
        (Some(axis), None) => axis_generator(psi.j(), axis)?.1,
        (None, Some(name)) => parse_operator(name, psi.j())?,
        _ => return Err(CliError::Input("give exactly one of --axis or --generator".into())),
    };
    write(&qfi(&psi, &g)?, out)?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct FisherOut {
    twice_j: u32,
    j_matrix: [[f64; 3]; 3],
    means: [f64; 3],
    trace: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rotation_qfi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alignment_angle: Option<f64>,
}

fn fisher(a: &FisherArgs, out: Option<&Path>) -> CmdResult {
    let psi = load_state(&a.source.state, a.source.twice_j)?;
    let f = fisher_matrix(&psi);
    let m = f.j_matrix();
    let axis = a.axis.as_deref().map(parse_axis).transpose()?;
    write(
        &FisherOut {
            twice_j: psi.j().twice_j(),
            j_matrix: [0, 1, 2].map(|r| [0, 1, 2].map(|c| m[(r, c)])),
            means: [0, 1, 2].map(|i| f.means()[i]),
            trace: f.trace(),
            axis: axis.as_ref().map(|u| [u.vector().x, u.vector().y, u.vector().z]),
            rotation_qfi: axis.as_ref().map(|u| f.rotation_qfi(u)),
            alignment_angle: axis.as_ref().map(|u| f.alignment_angle(u)),
        },
        out,
    )?;
    Ok(Status::Ok)
}

fn construct(a: &ConstructArgs, out: Option<&Path>) -> CmdResult {
    let spec = if let Some(path) = &a.spec {
        read_json::<SupportSpec>(path)?
    } else {
        let j = SpinJ::from_twice(a.twice_j.expect("clap requires --twice-j without --spec"));
        if a.default_support {
            default_support(j)?
        } else if a.support.is_empty() && !a.include_zero {
            return Err(CliError::Input("give --support, --include-zero, --default-support or --spec".into()));
        } else {
            SupportSpec::new(j, a.support.iter().copied(), a.include_zero)?
        }
    };
    write(&construct_anticoherent(&spec)?, out)?;
    Ok(Status::Ok)
}

fn ae_code(a: &AeArgs, out: Option<&Path>) -> CmdResult {
    write(&ae_codewords(SpinJ::from_twice(a.twice_j), a.m1, a.m2)?, out)?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct ConditionOut {
    violation: f64,
    shuffle_violation: f64,
    diagonal_violation: f64,
    passed: bool,
    c_matrix: Vec<Vec<ComplexOut>>,
}

impl From<&ConditionReport> for ConditionOut {
    fn from(r: &ConditionReport) -> Self {
        ConditionOut {
            violation: r.violation,
            shuffle_violation: r.shuffle_violation,
            diagonal_violation: r.diagonal_violation,
            passed: r.passed,
            c_matrix: complex_rows(&r.c_matrix),
        }
    }
}

#[derive(Serialize)]
struct CodeCheckOut {
    twice_j: u32,
    codewords: usize,
    errors: Vec<String>,
    tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    detection: Option<ConditionOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kl: Option<ConditionOut>,
    passed: bool,
}

fn code_check(a: &CodeCheckArgs, out: Option<&Path>) -> CmdResult {
    let tol = positive_tol(a.tol)?;
    let code: CodeSpace = read_json(&a.input)?;
    let errors = ErrorSet::new(parse_operator_list(&a.errors, code.j())?)?;
    let detection = match a.condition {
        Condition::Detection | Condition::Both => Some(detection_check(&code, &errors, tol)?),
        Condition::Kl => None,
    };
    let kl = match a.condition {
        Condition::Kl | Condition::Both => Some(kl_check(&code, &errors, tol)?),
        Condition::Detection => None,
    };
    let passed = detection.iter().chain(&kl).all(|r| r.passed);
    write(
        &CodeCheckOut {
            twice_j: code.j().twice_j(),
            codewords: code.len(),
            errors: errors.ops().iter().map(|e| e.label().to_string()).collect(),
            tol,
            detection: detection.as_ref().map(ConditionOut::from),
            kl: kl.as_ref().map(ConditionOut::from),
            passed,
        },
        out,
    )?;
    Ok(if passed { Status::Ok } else { Status::CheckFailed })
}

#[derive(Serialize)]
struct StateErrorOut {
    error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    small_theta: Option<f64>,
}

#[derive(Serialize)]
struct WorstCaseOut {
    max_error: f64,
    worst_state: SpinState,
}

#[derive(Serialize)]
struct RecoveryOut {
    error_with_recovery: f64,
}

fn error_cmd(a: &ErrorArgs, out: Option<&Path>) -> CmdResult {
    if a.code {
        let code: CodeSpace = read_json(&a.source.state)?;
        let (Some(name), Some(theta)) = (&a.generator, a.theta) else {
            return Err(CliError::Input("--code needs --generator and --theta".into()));
        };
        let g = parse_operator(name, code.j())?;
        let worst = max_error_over_code(&code, &g, theta)?;
        write(
            &WorstCaseOut {
                max_error: worst.error,
                worst_state: worst.state,
            },
            out,
        )?;
        return Ok(Status::Ok);
    }
    let psi = load_state(&a.source.state, a.source.twice_j)?;
    let j = psi.j();
    if let Some(name) = &a.unitary {
        let u = parse_operator(name, j)?;
        write(
            &StateErrorOut {
                error: error_of_state(&psi, &u)?,
                small_theta: None,
            },
            out,
        )?;
    } else if let (Some(name), Some(theta)) = (&a.generator, a.theta) {
        let g = parse_operator(name, j)?;
        let exact = error_of_state(&psi, &evolution(&g, theta)?)?;
        let small = if theta.abs() <= 0.1 {
            Some(error_small_theta(&psi, &g, theta)?)
        } else {
            None
        };
        write(
            &StateErrorOut {
                error: exact,
                small_theta: small,
            },
            out,
        )?;
    } else if let (Some(errs), Some(recs)) = (&a.errors, &a.recoveries) {
        let errors = ErrorSet::new(parse_operator_list(errs, j)?)?;
        let recoveries = RecoverySet::new(parse_operator_list(recs, j)?)?;
        write(
            &RecoveryOut {
                error_with_recovery: error_with_recovery(&psi, &errors, &recoveries)?,
            },
            out,
        )?;
    } else {
        return Err(CliError::Input(
            "give --unitary, --generator with --theta, or --errors with --recoveries".into(),
        ));
    }
    Ok(Status::Ok)
}

fn estimate(a: &EstimateArgs, out: Option<&Path>) -> CmdResult {
    let psi = load_state(&a.source.state, a.source.twice_j)?;
    let generator = parse_operator(&a.generator, psi.j())?;
    let config = EstimationConfig {
        psi,
        generator,
        theta_true: a.theta,
        trials_per_run: a.trials,
        runs: a.runs,
        seed: a.seed,
    };
    let result = crb_report(&config)?;
    if let Some(path) = &a.csv {
        let file = File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        result.write_csv(BufWriter::new(file))?;
    }
    write(&result.summary(&config), out)?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct DistanceOut {
    lambda: f64,
    sin_lambda: f64,
    cos_lambda: f64,
    basis: String,
    omega: f64,
    bhattacharyya: f64,
    first_distribution: Vec<f64>,
    second_distribution: Vec<f64>,
}

fn distance(a: &DistanceArgs, out: Option<&Path>) -> CmdResult {
    if a.first == "-" && a.second == "-" {
        return Err(CliError::Input("only one state can come from stdin".into()));
    }
    let psi = load_state(&a.first, a.twice_j)?;
    let phi = load_state(&a.second, a.twice_j)?;
    let d = distinguishability(&psi, &phi)?;
    let j = psi.j();
    let (basis, name) = if let Some(path) = &a.unitary_basis {
        let u = parse_operator(&format!("@{path}"), j)?;
        u.ensure_unitary()?;
        (Projectors::from_unitary_columns(j, u.matrix())?, format!("@{path}"))
    } else {
        match a.basis {
            BasisChoice::Standard => (
                Projectors::from_unitary_columns(j, &CMatrix::identity(j.dim(), j.dim()))?,
                "standard".to_string(),
            ),
            BasisChoice::Optimal => (Projectors::optimal_pair(&psi), "optimal".to_string()),
        }
    };
    let p = measurement_distribution(&psi, &basis)?;
    let q = measurement_distribution(&phi, &basis)?;
    let s = statistical_distance(&p, &q)?;
    write(
        &DistanceOut {
            lambda: d.lambda,
            sin_lambda: d.sin_lambda,
            cos_lambda: d.cos_lambda,
            basis: name,
            omega: s.omega,
            bhattacharyya: s.bhattacharyya,
            first_distribution: p.probs().to_vec(),
            second_distribution: q.probs().to_vec(),
        },
        out,
    )?;
    Ok(Status::Ok)
}
