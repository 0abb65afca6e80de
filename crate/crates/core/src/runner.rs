//! Executes the check directives of a resolved document.

use crate::dsl::{ResolvedCheck, ResolvedDocument};
use crate::expr::eval::confirm_zero;
use crate::expr::Expr;
use crate::report::{render_combination, render_expr, CheckRecord, Report};
use crate::subsym::{
    deform_claw, generate_claw, quasi_noether_check, subsymmetry_check, triviality_classify,
    CheckOutcome, SubsymError, Triviality,
};
use crate::system::{Combination, DifferentialSystem, OracleConfig, SolutionVerdict};

/// Runs every directive of `doc`, in declaration order.
pub fn run_document(name: &str, doc: &ResolvedDocument, oracle: &OracleConfig) -> Report {
    let mut report = Report::new(name, oracle.seed, oracle.points);
    for (label, check) in &doc.checks {
        report.push(run_check(doc, label, check, oracle));
    }
    report
}

fn fail_from_error(label: &str, note: &str, err: impl std::fmt::Display) -> CheckRecord {
    CheckRecord::failing(label, note, Some(err.to_string()))
}

/// Exact identity check with the numeric oracle on the residual.
fn identity_record(
    sys: &DifferentialSystem,
    label: &str,
    note: &str,
    residual: &Expr,
    oracle: &OracleConfig,
) -> CheckRecord {
    match residual.is_zero() {
        Ok(true) => CheckRecord::passing(label, note)
            .with_oracle(confirm_zero(residual, oracle.seed, oracle.points)),
        Ok(false) => {
            CheckRecord::failing(label, note, Some(render_expr(sys, residual)))
        }
        Err(e) => fail_from_error(label, note, e),
    }
}

fn run_check(
    doc: &ResolvedDocument,
    label: &str,
    check: &ResolvedCheck,
    oracle: &OracleConfig,
) -> CheckRecord {
    let sys = &doc.system;
    match check {
        ResolvedCheck::Zero { expr } => {
            identity_record(sys, label, "expression normalizes to zero", expr, oracle)
        }
        ResolvedCheck::ZeroOnSolutions { expr, cert } => {
            match sys.on_solutions_zero(expr, cert.as_ref(), oracle) {
                Ok(SolutionVerdict::Zero { certificate, oracle }) => {
                    CheckRecord::passing(label, "vanishes on the solution manifold")
                        .with_certificate(render_combination(sys, &certificate))
                        .with_oracle(oracle)
                }
                Ok(SolutionVerdict::Nonzero { normal_form, .. }) => CheckRecord::failing(
                    label,
                    "vanishes on the solution manifold",
                    Some(render_expr(sys, &normal_form)),
                ),
                Ok(SolutionVerdict::Undecided { reason }) => {
                    CheckRecord::failing(label, format!("undecided: {reason}"), None)
                }
                Err(e) => fail_from_error(label, "vanishes on the solution manifold", e),
            }
        }
        ResolvedCheck::NonzeroOnSolutions { expr } => {
            match sys.on_solutions_zero(expr, None, oracle) {
                Ok(SolutionVerdict::Nonzero { normal_form, oracle }) => CheckRecord::passing(
                    label,
                    format!(
                        "nonzero on solutions; reduced form {}",
                        render_expr(sys, &normal_form)
                    ),
                )
                .with_oracle(oracle),
                Ok(SolutionVerdict::Zero { .. }) => CheckRecord::failing(
                    label,
                    "expected a nonzero residual on solutions",
                    Some("0".into()),
                ),
                Ok(SolutionVerdict::Undecided { reason }) => {
                    CheckRecord::failing(label, format!("undecided: {reason}"), None)
                }
                Err(e) => fail_from_error(label, "nonzero on solutions", e),
            }
        }
        ResolvedCheck::Law { flux, cert } => match law_residual(sys, flux, cert) {
            Ok(residual) => identity_record(
                sys,
                label,
                "divergence of the flux equals the certified combination",
                &residual,
                oracle,
            )
            .with_certificate(render_combination(sys, cert)),
            Err(e) => fail_from_error(label, "law identity", e),
        },
        ResolvedCheck::Divergence { combo, flux } => {
            let residual = (|| -> Result<Expr, SubsymError> {
                Ok((sys.combination_value(combo)? - sys.ctx().divergence(flux)?).normalized()?)
            })();
            match residual {
                Ok(r) => identity_record(
                    sys,
                    label,
                    "combination is the divergence of the flux",
                    &r,
                    oracle,
                ),
                Err(e) => fail_from_error(label, "divergence identity", e),
            }
        }
        ResolvedCheck::NotDivergence { expr } => match sys.ctx().divergence_invert(expr) {
            Ok(None) => CheckRecord::passing(label, "inversion heuristic finds no flux"),
            Ok(Some(m)) => CheckRecord::failing(
                label,
                "inversion heuristic finds no flux",
                Some(format!(
                    "found [{}]",
                    m.iter()
                        .map(|e| render_expr(sys, e))
                        .collect::<Vec<_>>()
                        .join(", ")
                )),
            ),
            Err(e) => fail_from_error(label, "inversion heuristic", e),
        },
        ResolvedCheck::InvertDivergence { expr, flux } => {
            match sys.ctx().divergence_invert(expr) {
                Ok(Some(m)) => {
                    let mut residuals = Vec::new();
                    for (got, want) in m.iter().zip(flux) {
                        match (got - want).normalized() {
                            Ok(r) if r.is_zero().unwrap_or(false) => {}
                            Ok(r) => residuals.push(render_expr(sys, &r)),
                            Err(e) => residuals.push(e.to_string()),
                        }
                    }
                    if residuals.is_empty() {
                        CheckRecord::passing(label, "inversion heuristic recovers the flux")
                    } else {
                        CheckRecord::failing(
                            label,
                            "inversion heuristic recovers the flux",
                            Some(residuals.join("; ")),
                        )
                    }
                }
                Ok(None) => CheckRecord::failing(
                    label,
                    "inversion heuristic recovers the flux",
                    Some("heuristic found nothing".into()),
                ),
                Err(e) => fail_from_error(label, "inversion heuristic", e),
            }
        }
        ResolvedCheck::Quasi { combo } => match quasi_noether_check(sys, combo, oracle) {
            Ok(CheckOutcome::Verified(q)) => {
                let mut outcome = crate::expr::eval::OracleOutcome {
                    points: 0,
                    failures: 0,
                };
                if let Ok(g) = sys.combination_value(combo) {
                    for (a, gamma) in q.gammas.iter().enumerate() {
                        let dep = sys.ctx().dep_names()[a].clone();
                        if let (Ok(ea), Ok(rhs)) = (
                            sys.ctx().euler_op(&g, &dep),
                            sys.combination_value(gamma),
                        ) {
                            let o = confirm_zero(&(ea - rhs), oracle.seed, oracle.points);
                            outcome.points += o.points;
                            outcome.failures += o.failures;
                        }
                    }
                }
                CheckRecord::passing(
                    label,
                    "Euler operators annihilate the combination on solutions",
                )
                .with_oracle(outcome)
            }
            Ok(CheckOutcome::Refuted { residual }) => CheckRecord::failing(
                label,
                "Euler operators annihilate the combination on solutions",
                Some(render_expr(sys, &residual)),
            ),
            Ok(CheckOutcome::Undecided { reason }) => {
                CheckRecord::failing(label, format!("undecided: {reason}"), None)
            }
            Err(e) => fail_from_error(label, "quasi-Noether condition", e),
        },
        ResolvedCheck::Subsym { field, combo, cert } => {
            let x = &doc.vectorfields[field];
            match subsymmetry_check(sys, x, combo, cert.as_ref(), oracle) {
                Ok(CheckOutcome::Verified(sub)) => {
                    let oracle_outcome = (|| {
                        let g = sys.combination_value(combo).ok()?;
                        let xg = sys.ctx().prolong_apply(x, &g).ok()?;
                        let rhs = sys.combination_value(&sub.certificate).ok()?;
                        Some(confirm_zero(&(xg - rhs), oracle.seed, oracle.points))
                    })();
                    let mut rec = CheckRecord::passing(
                        label,
                        "field is a sub-symmetry of the selected combination",
                    )
                    .with_certificate(render_combination(sys, &sub.certificate));
                    if let Some(o) = oracle_outcome {
                        rec = rec.with_oracle(o);
                    }
                    rec
                }
                Ok(CheckOutcome::Refuted { residual }) => CheckRecord::failing(
                    label,
                    "field is a sub-symmetry of the selected combination",
                    Some(render_expr(sys, &residual)),
                ),
                Ok(CheckOutcome::Undecided { reason }) => {
                    CheckRecord::failing(label, format!("undecided: {reason}"), None)
                }
                Err(e) => fail_from_error(label, "sub-symmetry certificate", e),
            }
        }
        ResolvedCheck::NotSubsym { field, combo } => {
            let x = &doc.vectorfields[field];
            match subsymmetry_check(sys, x, combo, None, oracle) {
                Ok(CheckOutcome::Refuted { residual }) => CheckRecord::passing(
                    label,
                    format!(
                        "not a sub-symmetry: residual {} survives on solutions",
                        render_expr(sys, &residual)
                    ),
                ),
                Ok(CheckOutcome::Verified(_)) => CheckRecord::failing(
                    label,
                    "expected the combination not to be invariant",
                    Some("0".into()),
                ),
                Ok(CheckOutcome::Undecided { reason }) => {
                    CheckRecord::failing(label, format!("undecided: {reason}"), None)
                }
                Err(e) => fail_from_error(label, "refutation", e),
            }
        }
        ResolvedCheck::Apply {
            field,
            expr,
            expected,
        } => {
            let x = &doc.vectorfields[field];
            match sys.ctx().prolong_apply(x, expr) {
                Ok(got) => identity_record(
                    sys,
                    label,
                    "prolonged action equals the expected expression",
                    &(got - expected),
                    oracle,
                ),
                Err(e) => fail_from_error(label, "prolonged action", e),
            }
        }
        ResolvedCheck::Claw {
            field,
            combo,
            flux,
            cert,
        } => {
            let x = &doc.vectorfields[field];
            let law = (|| -> Result<_, SubsymError> {
                let sub = match subsymmetry_check(sys, x, combo, cert.as_ref(), oracle)? {
                    CheckOutcome::Verified(s) => s,
                    CheckOutcome::Refuted { residual } => {
                        return Err(SubsymError::IdentityResidual(residual))
                    }
                    CheckOutcome::Undecided { reason } => {
                        return Err(SubsymError::System(
                            crate::system::SystemError::CertificateMismatch {
                                residual: Expr::dep(&reason),
                            },
                        ))
                    }
                };
                let quasi = match quasi_noether_check(sys, combo, oracle)? {
                    CheckOutcome::Verified(q) => q,
                    CheckOutcome::Refuted { residual } => {
                        return Err(SubsymError::IdentityResidual(residual))
                    }
                    CheckOutcome::Undecided { .. } => {
                        return Err(SubsymError::NotFunctionValued)
                    }
                };
                generate_claw(sys, &sub, &quasi)
            })();
            match law {
                Ok(law) => flux_match_record(sys, label, "generated flux", &law.flux, flux, oracle)
                    .with_certificate(render_combination(sys, &law.certificate)),
                Err(e) => fail_from_error(label, "law generation", e),
            }
        }
        ResolvedCheck::Deform {
            field,
            base_flux,
            combo,
            expected,
            cert,
        } => {
            let x = &doc.vectorfields[field];
            match deform_claw(sys, x, base_flux, combo, cert.as_ref(), oracle) {
                Ok(CheckOutcome::Verified(law)) => {
                    flux_match_record(sys, label, "deformed flux", &law.flux, expected, oracle)
                        .with_certificate(render_combination(sys, &law.certificate))
                }
                Ok(CheckOutcome::Refuted { residual }) => CheckRecord::failing(
                    label,
                    "deformation",
                    Some(render_expr(sys, &residual)),
                ),
                Ok(CheckOutcome::Undecided { reason }) => {
                    CheckRecord::failing(label, format!("undecided: {reason}"), None)
                }
                Err(e) => fail_from_error(label, "deformation", e),
            }
        }
        ResolvedCheck::Classify {
            cert,
            apps,
            nontrivial,
            chars,
        } => {
            let law = crate::system::ConservationLaw {
                flux: vec![Expr::zero(); sys.ctx().num_indep()],
                certificate: cert.clone(),
                characteristics: None,
            };
            match triviality_classify(sys, &law, apps, oracle) {
                Ok(Triviality::Nontrivial {
                    characteristics, ..
                }) => {
                    if !*nontrivial {
                        return CheckRecord::failing(
                            label,
                            "expected a trivial law",
                            Some("nontrivial".into()),
                        );
                    }
                    match expected_characteristics_match(sys, &characteristics, chars, oracle) {
                        Ok(None) => CheckRecord::passing(label, "law is nontrivial")
                            .with_certificate(render_characteristics(sys, &characteristics)),
                        Ok(Some(residual)) => CheckRecord::failing(
                            label,
                            "characteristics match the expected tuple on solutions",
                            Some(residual),
                        ),
                        Err(e) => fail_from_error(label, "characteristic comparison", e),
                    }
                }
                Ok(Triviality::Trivial { .. }) => {
                    if *nontrivial {
                        CheckRecord::failing(label, "expected a nontrivial law", Some("trivial".into()))
                    } else {
                        CheckRecord::passing(label, "law is trivial")
                    }
                }
                Ok(Triviality::Undecided { reason }) => {
                    CheckRecord::failing(label, format!("undecided: {reason}"), None)
                }
                Err(e) => fail_from_error(label, "triviality classification", e),
            }
        }
        ResolvedCheck::Reduce { expr, expected } => match sys.reduce(expr) {
            Ok((nf, cert)) => {
                let soundness = (|| -> Result<Expr, SubsymError> {
                    Ok((expr - &nf - sys.combination_value(&cert)?).normalized()?)
                })();
                match soundness {
                    Ok(residual) if residual.is_zero().unwrap_or(false) => identity_record(
                        sys,
                        label,
                        "reduction reaches the expected normal form",
                        &(nf - expected),
                        oracle,
                    )
                    .with_certificate(render_combination(sys, &cert)),
                    Ok(residual) => CheckRecord::failing(
                        label,
                        "reduction soundness",
                        Some(render_expr(sys, &residual)),
                    ),
                    Err(e) => fail_from_error(label, "reduction", e),
                }
            }
            Err(e) => fail_from_error(label, "reduction", e),
        },
    }
}

fn law_residual(
    sys: &DifferentialSystem,
    flux: &[Expr],
    cert: &Combination,
) -> Result<Expr, SubsymError> {
    Ok((sys.ctx().divergence(flux)? - sys.combination_value(cert)?).normalized()?)
}

fn flux_match_record(
    sys: &DifferentialSystem,
    label: &str,
    note: &str,
    got: &[Expr],
    expected: &[Expr],
    oracle: &OracleConfig,
) -> CheckRecord {
    let mut residuals = Vec::new();
    let mut outcome = crate::expr::eval::OracleOutcome {
        points: 0,
        failures: 0,
    };
    for (g, w) in got.iter().zip(expected) {
        match (g - w).normalized() {
            Ok(r) if r.is_zero().unwrap_or(false) => {
                let o = confirm_zero(&(g - w), oracle.seed, oracle.points);
                outcome.points += o.points;
                outcome.failures += o.failures;
            }
            Ok(r) => residuals.push(render_expr(sys, &r)),
            Err(e) => residuals.push(e.to_string()),
        }
    }
    if residuals.is_empty() {
        CheckRecord::passing(label, format!("{note} matches componentwise"))
            .with_oracle(outcome)
    } else {
        CheckRecord::failing(
            label,
            format!("{note} matches componentwise"),
            Some(residuals.join("; ")),
        )
    }
}

/// `Ok(None)` when each computed characteristic equals the expected one on
/// the solution manifold (exact reduction); `Ok(Some(residual))` otherwise.
fn expected_characteristics_match(
    sys: &DifferentialSystem,
    got: &[Expr],
    expected: &Option<Vec<Expr>>,
    oracle: &OracleConfig,
) -> Result<Option<String>, SubsymError> {
    let Some(expected) = expected else {
        return Ok(None);
    };
    for (g, w) in got.iter().zip(expected) {
        let diff = (g - w).normalized()?;
        if diff.is_zero()? {
            continue;
        }
        match sys.on_solutions_zero(&diff, None, oracle)? {
            SolutionVerdict::Zero { .. } => continue,
            SolutionVerdict::Nonzero { normal_form, .. } => {
                return Ok(Some(render_expr(sys, &normal_form)))
            }
            SolutionVerdict::Undecided { reason } => return Ok(Some(reason)),
        }
    }
    Ok(None)
}

fn render_characteristics(sys: &DifferentialSystem, mu: &[Expr]) -> serde_json::Value {
    let items: Vec<serde_json::Value> = mu
        .iter()
        .enumerate()
        .map(|(v, e)| {
            serde_json::json!({
                "equation": sys.names()[v],
                "coefficient": render_expr(sys, e),
            })
        })
        .collect();
    serde_json::json!({ "characteristics": items })
}
