//! Sub-symmetry machinery: quasi-Noether checks, sub-symmetry verification,
//! conservation-law generation through the Noether operator identity,
//! first-Noether fluxes for variational systems, and triviality
//! classification of the generated laws.

use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::jet::{EvolutionaryField, JetContext, JetError};
use crate::system::{
    Certificate, ConservationLaw, DifferentialSystem, Multiplier, OracleConfig,
    SolutionVerdict, SystemError, SyzygyApplication,
};

#[derive(Debug, Error)]
pub enum SubsymError {
    #[error("law generation requires a function-valued multiplier")]
    NotFunctionValued,
    #[error("the selected combination is not the divergence of the given flux")]
    NotADivergence,
    #[error("the field is not a variational symmetry of the Lagrangian for the given flux")]
    NotVariationalSymmetry,
    #[error("internal identity failed to close; residual {0}")]
    IdentityResidual(Expr),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Tri-state outcome of an on-solutions check.
#[derive(Debug)]
pub enum CheckOutcome<T> {
    Verified(T),
    Refuted { residual: Expr },
    Undecided { reason: String },
}

impl<T> CheckOutcome<T> {
    pub fn verified(self) -> Option<T> {
        match self {
            CheckOutcome::Verified(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, CheckOutcome::Verified(_))
    }
}

/// A verified sub-symmetry: the field leaves `sum Xi^{vJ} D_J Delta_v`
/// invariant on solutions, with `certificate` the exact decomposition of the
/// transformed combination.
#[derive(Debug)]
pub struct SubSymmetry {
    pub field: EvolutionaryField,
    pub combo: Multiplier,
    pub certificate: Certificate,
}

/// Result of a quasi-Noether check: one certificate per dependent variable
/// decomposing `E_a(sum Xi^v Delta_v)`.
#[derive(Debug)]
pub struct QuasiNoether {
    pub gammas: Vec<Certificate>,
}

/// Checks `E_a(sum Xi^{vJ} D_J Delta_v) = 0` on solutions for every
/// dependent variable. An exact divergence gives empty certificates; else
/// the decomposition is found by reduction.
pub fn quasi_noether_check(
    sys: &DifferentialSystem,
    xi: &Multiplier,
    oracle: &OracleConfig,
) -> Result<CheckOutcome<QuasiNoether>, SubsymError> {
    let combination = sys.combination_value(xi)?;
    let mut gammas = Vec::new();
    for dep in sys.ctx().dep_names().to_vec() {
        let ea = sys.ctx().euler_op(&combination, &dep)?;
        if ea.is_zero()? {
            gammas.push(Certificate::new());
            continue;
        }
        match sys.on_solutions_zero(&ea, None, oracle)? {
            SolutionVerdict::Zero { certificate, .. } => gammas.push(certificate),
            SolutionVerdict::Nonzero { normal_form, .. } => {
                return Ok(CheckOutcome::Refuted {
                    residual: normal_form,
                })
            }
            SolutionVerdict::Undecided { reason } => {
                return Ok(CheckOutcome::Undecided { reason })
            }
        }
    }
    Ok(CheckOutcome::Verified(QuasiNoether { gammas }))
}

/// Checks that `(X, sum Xi^{vJ} D_J Delta_v)` is a sub-symmetry. When an
/// expected certificate is supplied it is verified exactly (a mismatch is a
/// hard error); otherwise a certificate is sought by reduction.
pub fn subsymmetry_check(
    sys: &DifferentialSystem,
    field: &EvolutionaryField,
    xi: &Multiplier,
    expected: Option<&Certificate>,
    oracle: &OracleConfig,
) -> Result<CheckOutcome<SubSymmetry>, SubsymError> {
    let combination = sys.combination_value(xi)?;
    let transformed = sys.ctx().prolong_apply(field, &combination)?;
    match sys.on_solutions_zero(&transformed, expected, oracle)? {
        SolutionVerdict::Zero { certificate, .. } => Ok(CheckOutcome::Verified(SubSymmetry {
            field: field.clone(),
            combo: xi.clone(),
            certificate,
        })),
        SolutionVerdict::Nonzero { normal_form, .. } => Ok(CheckOutcome::Refuted {
            residual: normal_form,
        }),
        SolutionVerdict::Undecided { reason } => Ok(CheckOutcome::Undecided { reason }),
    }
}

/// Theorem-route law generation: flux `K^i = R^i(sum Xi^v Delta_v)` with
/// certificate `Lambda - phi^a Gamma^{av}`. Requires a function-valued
/// multiplier and a passed quasi-Noether check.
pub fn generate_claw(
    sys: &DifferentialSystem,
    sub: &SubSymmetry,
    quasi: &QuasiNoether,
) -> Result<ConservationLaw, SubsymError> {
    if !sub.combo.is_function_valued() {
        return Err(SubsymError::NotFunctionValued);
    }
    let combination = sys.combination_value(&sub.combo)?;
    let flux = sys.ctx().noether_r(&sub.field, &combination)?;
    let mut certificate = sub.certificate.clone();
    for (a, gamma) in quasi.gammas.iter().enumerate() {
        let phi = &sub.field.characteristics[a];
        certificate = certificate.minus(&gamma.scaled(phi));
    }
    let certificate = certificate.pruned()?;
    // the operator identity guarantees this closes; verify anyway
    let residual =
        (sys.ctx().flat_divergence(&flux)? - sys.combination_value(&certificate)?).normalized()?;
    if !residual.is_zero()? {
        return Err(SubsymError::IdentityResidual(residual));
    }
    Ok(ConservationLaw {
        flux: flux
            .into_iter()
            .map(|e| e.normalized())
            .collect::<Result<Vec<_>, _>>()?,
        certificate,
        characteristics: None,
    })
}

/// Corollary-route law generation: when the selected combination is itself a
/// divergence `sum Xi Delta = Div M`, a sub-symmetry deforms it into the law
/// `Div(X M) = Lambda^v Delta_v`.
pub fn deform_claw(
    sys: &DifferentialSystem,
    field: &EvolutionaryField,
    flux: &[Expr],
    xi: &Multiplier,
    expected: Option<&Certificate>,
    oracle: &OracleConfig,
) -> Result<CheckOutcome<ConservationLaw>, SubsymError> {
    let combination = sys.combination_value(xi)?;
    if !sys.ctx().divergence_verify(&combination, flux)? {
        return Err(SubsymError::NotADivergence);
    }
    let sub = match subsymmetry_check(sys, field, xi, expected, oracle)? {
        CheckOutcome::Verified(s) => s,
        CheckOutcome::Refuted { residual } => return Ok(CheckOutcome::Refuted { residual }),
        CheckOutcome::Undecided { reason } => return Ok(CheckOutcome::Undecided { reason }),
    };
    let deformed = flux
        .iter()
        .map(|m| sys.ctx().prolong_apply(field, m)?.normalized().map_err(SubsymError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let residual = (sys.ctx().divergence(&deformed)?
        - sys.combination_value(&sub.certificate)?)
    .normalized()?;
    if !residual.is_zero()? {
        return Err(SubsymError::IdentityResidual(residual));
    }
    Ok(CheckOutcome::Verified(ConservationLaw {
        flux: deformed,
        certificate: sub.certificate,
        characteristics: None,
    }))
}

/// A first-Noether law of a variational problem: flux `M^i - R^i(L)` whose
/// certificate puts the symmetry characteristics on the Euler-Lagrange
/// expressions.
#[derive(Debug)]
pub struct NoetherLaw {
    pub flux: Vec<Expr>,
    pub euler_lagrange: Vec<Expr>,
    /// certificate coefficients: exactly the field characteristics
    pub characteristics: Vec<Expr>,
}

/// First Noether theorem for a Lagrangian density: requires `X L = Div M`
/// (variational symmetry) and returns the conserved flux `M - R(L)`.
pub fn first_noether(
    ctx: &JetContext,
    lagrangian: &Expr,
    field: &EvolutionaryField,
    flux: &[Expr],
) -> Result<NoetherLaw, SubsymError> {
    let xl = ctx.prolong_apply(field, lagrangian)?;
    if !ctx.divergence_verify(&xl, flux)? {
        return Err(SubsymError::NotVariationalSymmetry);
    }
    let r = ctx.noether_r(field, lagrangian)?;
    let law_flux = flux
        .iter()
        .zip(&r)
        .map(|(m, ri)| (m - ri).normalized().map_err(SubsymError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let euler_lagrange = ctx
        .dep_names()
        .to_vec()
        .iter()
        .map(|dep| ctx.euler_op(lagrangian, dep)?.normalized().map_err(SubsymError::from))
        .collect::<Result<Vec<_>, _>>()?;
    // identity: Div(M - R L) = phi^a E_a(L)
    let mut rhs = Vec::new();
    for (a, el) in euler_lagrange.iter().enumerate() {
        rhs.push(&field.characteristics[a] * el);
    }
    let residual = (ctx.flat_divergence(&law_flux)? - Expr::sum(rhs)).normalized()?;
    if !residual.is_zero()? {
        return Err(SubsymError::IdentityResidual(residual));
    }
    Ok(NoetherLaw {
        flux: law_flux,
        euler_lagrange,
        characteristics: field.characteristics.clone(),
    })
}

/// Verdict of the triviality analysis.
#[derive(Debug)]
pub enum Triviality {
    /// some integrated characteristic survives on the solution manifold
    Nontrivial {
        characteristics: Vec<Expr>,
        trivial_flux: Vec<Expr>,
    },
    /// every integrated characteristic vanishes on solutions
    Trivial { trivial_flux: Vec<Expr> },
    Undecided { reason: String },
}

/// Classifies a law by integrating its certificate by parts (after the
/// directed syzygy rewrites) and testing each characteristic on solutions.
pub fn triviality_classify(
    sys: &DifferentialSystem,
    law: &ConservationLaw,
    apps: &[SyzygyApplication],
    oracle: &OracleConfig,
) -> Result<Triviality, SubsymError> {
    let form = sys.ibp_characteristic(&law.certificate, apps)?;
    let mut any_nonzero = false;
    for mu in &form.characteristics {
        if mu.is_zero()? {
            continue;
        }
        match sys.on_solutions_zero(mu, None, oracle)? {
            SolutionVerdict::Zero { .. } => {}
            SolutionVerdict::Nonzero { .. } => {
                any_nonzero = true;
                break;
            }
            SolutionVerdict::Undecided { reason } => {
                return Ok(Triviality::Undecided { reason })
            }
        }
    }
    Ok(if any_nonzero {
        Triviality::Nontrivial {
            characteristics: form.characteristics,
            trivial_flux: form.trivial_flux,
        }
    } else {
        Triviality::Trivial {
            trivial_flux: form.trivial_flux,
        }
    })
}

/// Outcome of comparing two fluxes as conservation laws.
#[derive(Debug)]
pub struct LawEquivalence {
    pub equivalent: bool,
    /// the part of the difference that vanishes on solutions (first kind)
    pub first_kind_part: Vec<Expr>,
    /// divergence of the remaining difference (zero iff equivalent)
    pub residual_divergence: Expr,
}

/// Two fluxes are equivalent when their difference, after subtracting a
/// first-kind part found by reduction, has identically zero divergence.
pub fn laws_equivalent(
    sys: &DifferentialSystem,
    a: &[Expr],
    b: &[Expr],
) -> Result<LawEquivalence, SubsymError> {
    let mut first_kind = Vec::new();
    let mut remainder = Vec::new();
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).normalized()?;
        let (r, _) = sys.reduce(&d)?;
        first_kind.push((&d - &r).normalized()?);
        remainder.push(r);
    }
    let residual_divergence = sys.ctx().divergence(&remainder)?.normalized()?;
    Ok(LawEquivalence {
        equivalent: residual_divergence.is_zero()?,
        first_kind_part: first_kind,
        residual_divergence,
    })
}

/// Splits off a declared portion of a law's flux whose divergence is
/// certified by `part_certificate`; the remaining flux is again a law with
/// the difference certificate.
pub fn subtract_flux_part(
    sys: &DifferentialSystem,
    law: &ConservationLaw,
    part: &[Expr],
    part_certificate: &Certificate,
) -> Result<ConservationLaw, SubsymError> {
    let residual =
        (sys.ctx().divergence(part)? - sys.combination_value(part_certificate)?).normalized()?;
    if !residual.is_zero()? {
        return Err(SubsymError::IdentityResidual(residual));
    }
    let flux = law
        .flux
        .iter()
        .zip(part)
        .map(|(k, t)| (k - t).normalized().map_err(SubsymError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let certificate = law.certificate.minus(part_certificate).pruned()?;
    let check = (sys.ctx().divergence(&flux)? - sys.combination_value(&certificate)?)
        .normalized()?;
    if !check.is_zero()? {
        return Err(SubsymError::IdentityResidual(check));
    }
    Ok(ConservationLaw {
        flux,
        certificate,
        characteristics: law.characteristics.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::MultiIndex;
    use crate::jet::JetContext;
    use crate::system::Combination;

    /// NLS in real and imaginary parts.
    fn nls() -> DifferentialSystem {
        let mut ctx = JetContext::new(&["t", "x"], &["u", "v"]);
        ctx.declare_param("k");
        let (t, x) = (0u8, 1u8);
        let u = Expr::dep("u");
        let v = Expr::dep("v");
        let k = Expr::param("k");
        let sq = &u * &u + &v * &v;
        let d1 = Expr::jet("v", &[t]).neg() + Expr::jet("u", &[x, x]) - &k * &u * &sq;
        let d2 = Expr::jet("u", &[t]) + Expr::jet("v", &[x, x]) - &k * &v * &sq;
        let mut sys = DifferentialSystem::new(ctx, vec![d1, d2]);
        sys.solve_for(0, crate::expr::Atom::jet("u", &[x, x])).unwrap();
        sys.solve_for(1, crate::expr::Atom::jet("v", &[x, x])).unwrap();
        sys
    }

    #[test]
    fn nls_dilatation_is_a_subsymmetry() {
        let sys = nls();
        let oracle = OracleConfig::default();
        let field = EvolutionaryField::from_pairs(
            sys.ctx(),
            &[("u", Expr::dep("u")), ("v", Expr::dep("v"))],
        );
        let xi = Combination::from_functions(&[Expr::dep("v").neg(), Expr::dep("u")]);
        // expected: X(G) = 2G, i.e. certificate 2*Xi
        let expected = xi.scaled(&Expr::int(2));
        let out = subsymmetry_check(&sys, &field, &xi, Some(&expected), &oracle).unwrap();
        assert!(out.is_verified());
    }

    #[test]
    fn nls_mass_law_and_its_characteristics() {
        let sys = nls();
        let oracle = OracleConfig::default();
        let u = Expr::dep("u");
        let v = Expr::dep("v");
        let xi = Combination::from_functions(&[v.neg(), u.clone()]);
        // (u^2+v^2)/2, u v_x - v u_x is an exact divergence form of Xi*Delta
        let m = vec![
            Expr::rat(1, 2) * (&u * &u + &v * &v),
            &u * Expr::jet("v", &[1]) - &v * Expr::jet("u", &[1]),
        ];
        let g = sys.combination_value(&xi).unwrap();
        assert!(sys.ctx().divergence_verify(&g, &m).unwrap());

        // quasi-Noether holds with zero Gamma (exact divergence)
        let quasi = quasi_noether_check(&sys, &xi, &oracle).unwrap().verified().unwrap();
        assert!(quasi.gammas.iter().all(|g| g.entries.is_empty()));

        // the law itself: certificate = Xi, characteristics (-v, u), nontrivial
        let law = ConservationLaw {
            flux: m,
            certificate: xi.clone(),
            characteristics: None,
        };
        match triviality_classify(&sys, &law, &[], &oracle).unwrap() {
            Triviality::Nontrivial { characteristics, .. } => {
                assert!(characteristics[0].equivalent(&Expr::dep("v").neg()).unwrap());
                assert!(characteristics[1].equivalent(&Expr::dep("u")).unwrap());
            }
            other => panic!("expected nontrivial, got {other:?}"),
        }
    }

    #[test]
    fn nls_theorem_route_flux() {
        // R-generated flux of the dilatation sub-symmetry:
        // (u^2 + v^2, 2(u v_x - v u_x)) with certificate 2*Xi
        let sys = nls();
        let oracle = OracleConfig::default();
        let field = EvolutionaryField::from_pairs(
            sys.ctx(),
            &[("u", Expr::dep("u")), ("v", Expr::dep("v"))],
        );
        let xi = Combination::from_functions(&[Expr::dep("v").neg(), Expr::dep("u")]);
        let expected = xi.scaled(&Expr::int(2));
        let sub = subsymmetry_check(&sys, &field, &xi, Some(&expected), &oracle)
            .unwrap()
            .verified()
            .unwrap();
        let quasi = quasi_noether_check(&sys, &xi, &oracle).unwrap().verified().unwrap();
        let law = generate_claw(&sys, &sub, &quasi).unwrap();
        let u = Expr::dep("u");
        let v = Expr::dep("v");
        assert!(law.flux[0].equivalent(&(&u * &u + &v * &v)).unwrap());
        assert!(law.flux[1]
            .equivalent(
                &(Expr::int(2) * (&u * Expr::jet("v", &[1]) - &v * Expr::jet("u", &[1])))
            )
            .unwrap());
    }

    #[test]
    fn wave_equation_first_noether() {
        let ctx = JetContext::new(&["t", "x"], &["u"]);
        let ut = Expr::jet("u", &[0]);
        let ux = Expr::jet("u", &[1]);
        let lagr = Expr::rat(1, 2) * (ut.pow_i(2) - ux.pow_i(2));

        // time translation: energy
        let energy = first_noether(
            &ctx,
            &lagr,
            &EvolutionaryField::new(vec![ut.neg()]),
            &[
                Expr::rat(-1, 2) * ut.pow_i(2) + Expr::rat(1, 2) * ux.pow_i(2),
                Expr::zero(),
            ],
        )
        .unwrap();
        let expect_t = Expr::rat(1, 2) * (ut.pow_i(2) + ux.pow_i(2));
        let expect_x = (&ut * &ux).neg();
        assert!(energy.flux[0].equivalent(&expect_t).unwrap());
        assert!(energy.flux[1].equivalent(&expect_x).unwrap());
        // certificate characteristic is the symmetry characteristic
        assert!(energy.characteristics[0].equivalent(&ut.neg()).unwrap());
        // E(L) = u_xx - u_tt
        let el = &energy.euler_lagrange[0];
        assert!(el
            .equivalent(&(Expr::jet("u", &[1, 1]) - Expr::jet("u", &[0, 0])))
            .unwrap());

        // space translation: momentum
        let momentum = first_noether(
            &ctx,
            &lagr,
            &EvolutionaryField::new(vec![ux.neg()]),
            &[
                Expr::zero(),
                Expr::rat(-1, 2) * ut.pow_i(2) + Expr::rat(1, 2) * ux.pow_i(2),
            ],
        )
        .unwrap();
        assert!(momentum.flux[0].equivalent(&(&ut * &ux)).unwrap());
        assert!(momentum.flux[1]
            .equivalent(&(Expr::rat(-1, 2) * (ut.pow_i(2) + ux.pow_i(2))))
            .unwrap());

        // zero characteristic: zero law
        let zero = first_noether(
            &ctx,
            &lagr,
            &EvolutionaryField::new(vec![Expr::zero()]),
            &[Expr::zero(), Expr::zero()],
        )
        .unwrap();
        assert!(zero.flux.iter().all(|f| f.is_zero().unwrap()));

        // not a variational symmetry: phi = u with M = 0
        assert!(matches!(
            first_noether(
                &ctx,
                &lagr,
                &EvolutionaryField::new(vec![Expr::dep("u")]),
                &[Expr::zero(), Expr::zero()],
            ),
            Err(SubsymError::NotVariationalSymmetry)
        ));
    }

    #[test]
    fn first_kind_flux_is_trivial() {
        // flux K = (Delta_1, 0): certificate {(1,(t)): 1}, all mu_bar vanish
        let sys = nls();
        let oracle = OracleConfig::default();
        let d1 = sys.equations()[0].clone();
        let mut cert = Certificate::new();
        cert.add(0, MultiIndex::new(vec![0]), Expr::one());
        let law = ConservationLaw {
            flux: vec![d1, Expr::zero()],
            certificate: cert,
            characteristics: None,
        };
        assert!(matches!(
            triviality_classify(&sys, &law, &[], &oracle).unwrap(),
            Triviality::Trivial { .. }
        ));
    }
}
