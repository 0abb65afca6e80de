//! Differential systems, reduction modulo the solution manifold, and
//! ideal-membership certificates with multiplier tracking.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::atom::{Atom, MultiIndex};
use crate::expr::eval::{confirm_zero, OracleOutcome};
use crate::expr::{Expr, ExprError};
use crate::jet::{JetContext, JetError};

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("equation {equation}: leading coefficient depends on jet coordinates ({detail})")]
    NonLinearLeading { equation: usize, detail: String },
    #[error("equation {equation}: leading atom does not occur")]
    LeadingAtomMissing { equation: usize },
    #[error("equation {equation}: right-hand side atom {atom} does not rank below the leading atom")]
    RankViolation { equation: usize, atom: String },
    #[error("syzygy {name} is not an identity in the jet space")]
    SyzygyNotIdentity { name: String },
    #[error("supplied certificate fails the exact identity; residual {residual}")]
    CertificateMismatch { residual: Expr },
    #[error("reduction did not terminate under the declared ranking")]
    NonTerminatingRanking,
    #[error("unknown equation index {0}")]
    UnknownEquation(usize),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A finite combination `sum mu^{vJ} D_J Delta_v`, keyed by equation index
/// and multi-index. Serves as multiplier (sub-system selector), certificate
/// (proof object for an on-solutions zero) and syzygy body alike.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Combination {
    pub entries: BTreeMap<(usize, MultiIndex), Expr>,
}

pub type Certificate = Combination;
pub type Multiplier = Combination;

impl Combination {
    pub fn new() -> Self {
        Self::default()
    }

    /// Function-valued combination: one coefficient per equation, `J` empty.
    pub fn from_functions(coefficients: &[Expr]) -> Self {
        let mut c = Combination::new();
        for (v, e) in coefficients.iter().enumerate() {
            c.add(v, MultiIndex::empty(), e.clone());
        }
        c
    }

    pub fn add(&mut self, equation: usize, index: MultiIndex, coefficient: Expr) {
        if matches!(coefficient.as_constant(), Ok(Some(ref c)) if num::Zero::is_zero(c)) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.entries.entry((equation, index)) {
            Entry::Vacant(v) => {
                v.insert(coefficient);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + coefficient;
                *o.get_mut() = sum;
            }
        }
    }

    pub fn is_function_valued(&self) -> bool {
        self.entries.keys().all(|(_, j)| j.is_empty())
    }

    /// The coefficient tuple when function-valued.
    pub fn as_functions(&self, n: usize) -> Option<Vec<Expr>> {
        if !self.is_function_valued() {
            return None;
        }
        let mut out = vec![Expr::zero(); n];
        for ((v, _), e) in &self.entries {
            out[*v] = e.clone();
        }
        Some(out)
    }

    pub fn scaled(&self, factor: &Expr) -> Combination {
        let mut out = Combination::new();
        for ((v, j), e) in &self.entries {
            out.add(*v, j.clone(), factor * e);
        }
        out
    }

    pub fn plus(&self, other: &Combination) -> Combination {
        let mut out = self.clone();
        for ((v, j), e) in &other.entries {
            out.add(*v, j.clone(), e.clone());
        }
        out
    }

    pub fn minus(&self, other: &Combination) -> Combination {
        self.plus(&other.scaled(&Expr::int(-1)))
    }

    /// Drops entries whose coefficient normalizes to zero.
    pub fn pruned(&self) -> Result<Combination, ExprError> {
        let mut out = Combination::new();
        for ((v, j), e) in &self.entries {
            if !e.is_zero()? {
                out.add(*v, j.clone(), e.normalized()?);
            }
        }
        Ok(out)
    }
}

/// A declared identity `sum sigma^{vJ} D_J Delta_v = 0` holding everywhere in
/// the jet space (abnormal-system interdependency).
#[derive(Debug, Clone)]
pub struct Syzygy {
    pub name: String,
    pub body: Combination,
}

/// A directed use of a declared syzygy inside the characteristic pipeline:
/// adds `multiplier * (syzygy body)` — identically zero — to a certificate
/// before integrating by parts.
#[derive(Debug, Clone)]
pub struct SyzygyApplication {
    pub syzygy: usize,
    pub multiplier: Expr,
}

#[derive(Debug)]
struct SolvedForm {
    leading: Atom,
    /// jet-free nonzero factor with `Delta = coeff * (leading - rhs)`
    coeff: Expr,
    rhs: Expr,
}

#[derive(Debug)]
/// Equations `Delta_v` over a jet context, with optional solved forms
/// (enabling reduction) and declared syzygies.
pub struct DifferentialSystem {
    ctx: JetContext,
    equations: Vec<Expr>,
    names: Vec<String>,
    solved: Vec<Option<SolvedForm>>,
    syzygies: Vec<Syzygy>,
}

impl DifferentialSystem {
    pub fn new(ctx: JetContext, equations: Vec<Expr>) -> Self {
        let names = (1..=equations.len()).map(|i| format!("D{i}")).collect();
        let solved = equations.iter().map(|_| None).collect();
        DifferentialSystem {
            ctx,
            equations,
            names,
            solved,
            syzygies: Vec::new(),
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.equations.len());
        self.names = names;
        self
    }

    pub fn ctx(&self) -> &JetContext {
        &self.ctx
    }

    pub fn equations(&self) -> &[Expr] {
        &self.equations
    }

    pub fn equation(&self, v: usize) -> Result<&Expr, SystemError> {
        self.equations.get(v).ok_or(SystemError::UnknownEquation(v))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn syzygies(&self) -> &[Syzygy] {
        &self.syzygies
    }

    pub fn all_solved(&self) -> bool {
        self.solved.iter().all(Option::is_some)
    }

    /// Leading atom of the solved form of equation `v`, when declared.
    pub fn solved_leading(&self, v: usize) -> Option<&Atom> {
        self.solved.get(v).and_then(|s| s.as_ref()).map(|s| &s.leading)
    }

    /// Declares `equation` solved for `leading`: the equation must be linear
    /// in `leading` with a jet-free coefficient, and every jet atom of the
    /// resulting right-hand side must rank strictly below `leading`.
    pub fn solve_for(&mut self, equation: usize, leading: Atom) -> Result<(), SystemError> {
        let delta = self.equation(equation)?.clone();
        let coeff = delta.diff_atom(&leading).normalized()?;
        if coeff.is_zero()? {
            return Err(SystemError::LeadingAtomMissing { equation });
        }
        if let Some(bad) = coeff.atoms().iter().find(|a| a.is_jet()) {
            return Err(SystemError::NonLinearLeading {
                equation,
                detail: format!("{bad:?}"),
            });
        }
        let rhs = (Expr::atom(leading.clone()) - &delta / &coeff).normalized()?;
        let (dep, index) = leading.as_jet().expect("leading must be a jet atom");
        let lead_rank = self.ctx.rank(dep, index);
        for a in rhs.jet_atoms() {
            let (d, j) = a.as_jet().unwrap();
            if self.ctx.rank(d, j) >= lead_rank {
                return Err(SystemError::RankViolation {
                    equation,
                    atom: format!("{a:?}"),
                });
            }
        }
        self.solved[equation] = Some(SolvedForm {
            leading,
            coeff,
            rhs,
        });
        Ok(())
    }

    /// Declares a syzygy after verifying it normalizes to zero identically.
    pub fn add_syzygy(&mut self, name: &str, body: Combination) -> Result<(), SystemError> {
        let total = self.combination_value(&body)?;
        if !total.is_zero()? {
            return Err(SystemError::SyzygyNotIdentity {
                name: name.to_string(),
            });
        }
        self.syzygies.push(Syzygy {
            name: name.to_string(),
            body,
        });
        Ok(())
    }

    /// Evaluates `sum mu^{vJ} D_J Delta_v` as an expression.
    pub fn combination_value(&self, combo: &Combination) -> Result<Expr, SystemError> {
        let mut terms = Vec::new();
        for ((v, j), coeff) in &combo.entries {
            let delta = self.equation(*v)?;
            terms.push(coeff * self.ctx.total_derivative_multi(delta, j)?);
        }
        Ok(Expr::sum(terms))
    }

    /// For a jet atom, the most specific solved form that rewrites it:
    /// maximal leading order, then lowest equation index.
    fn reducer_for(&self, atom: &Atom) -> Option<(usize, MultiIndex)> {
        let (dep, index) = atom.as_jet()?;
        let mut best: Option<(usize, usize, MultiIndex)> = None;
        for (v, sf) in self.solved.iter().enumerate() {
            let Some(sf) = sf else { continue };
            let (ldep, lindex) = sf.leading.as_jet().unwrap();
            if ldep != dep || !index.contains(lindex) {
                continue;
            }
            let extra = index.difference(lindex).unwrap();
            let better = match &best {
                None => true,
                Some((bo, _, _)) => lindex.order() > *bo,
            };
            if better {
                best = Some((lindex.order(), v, extra));
            }
        }
        best.map(|(_, v, extra)| (v, extra))
    }

    /// Reduces `e` modulo the solved forms, accumulating multipliers so that
    /// `e = normal_form + sum mu^{vJ} D_J Delta_v` holds identically.
    pub fn reduce(&self, e: &Expr) -> Result<(Expr, Certificate), SystemError> {
        let mut work = e.normalized()?;
        let mut cert = Certificate::new();
        for _ in 0..4096 {
            // highest-ranked reducible atom first
            let target = work
                .jet_atoms()
                .into_iter()
                .filter(|a| self.reducer_for(a).is_some())
                .max_by_key(|a| {
                    let (d, j) = a.as_jet().unwrap();
                    self.ctx.rank(d, j)
                });
            let Some(atom) = target else {
                return Ok((work, cert));
            };
            let (v, extra) = self.reducer_for(&atom).unwrap();
            let sf = self.solved[v].as_ref().unwrap();
            let replacement = self.ctx.total_derivative_multi(&sf.rhs, &extra)?;
            let mut bindings = BTreeMap::new();
            bindings.insert(atom.clone(), replacement.clone());
            let substituted = work.substitute(&bindings)?;
            // work - substituted = Q * (atom - D_K rhs) = Q * D_K(Delta/c)
            let quotient = ((&work - &substituted)
                / (Expr::atom(atom.clone()) - &replacement))
                .normalized()?;
            if !quotient.is_zero()? {
                let inv_coeff = Expr::one() / &sf.coeff;
                for (k1, k2, mult) in extra.subsets_with_multiplicity() {
                    let dc = self.ctx.total_derivative_multi(&inv_coeff, &k1)?;
                    if dc.is_zero()? {
                        continue;
                    }
                    cert.add(
                        v,
                        k2,
                        (Expr::int(mult as i64) * &quotient * dc).normalized()?,
                    );
                }
            }
            work = substituted;
        }
        Err(SystemError::NonTerminatingRanking)
    }

    /// Decides whether `e` vanishes on the solution manifold.
    ///
    /// With a certificate supplied, checks the exact identity
    /// `e = sum mu^{vJ} D_J Delta_v` (an inexact certificate is an error).
    /// Otherwise reduces modulo the solved forms. Both routes are
    /// cross-checked by the numeric oracle on the decomposition residual; a
    /// nonzero verdict additionally requires a numeric witness.
    pub fn on_solutions_zero(
        &self,
        e: &Expr,
        cert: Option<&Certificate>,
        oracle: &OracleConfig,
    ) -> Result<SolutionVerdict, SystemError> {
        if let Some(cert) = cert {
            let residual = (e - self.combination_value(cert)?).normalized()?;
            if !residual.is_zero()? {
                return Err(SystemError::CertificateMismatch { residual });
            }
            let outcome = confirm_zero(
                &(e - self.combination_value(cert)?),
                oracle.seed,
                oracle.points,
            );
            return Ok(SolutionVerdict::Zero {
                certificate: cert.clone(),
                oracle: outcome,
            });
        }
        let (nf, cert) = self.reduce(e)?;
        if nf.is_zero()? {
            let outcome = confirm_zero(
                &(e - self.combination_value(&cert)?),
                oracle.seed,
                oracle.points,
            );
            return Ok(SolutionVerdict::Zero {
                certificate: cert,
                oracle: outcome,
            });
        }
        // nonzero normal form: insist on a numeric witness on the manifold
        match self.manifold_nonzero_witness(&nf, oracle)? {
            Some(outcome) => Ok(SolutionVerdict::Nonzero {
                normal_form: nf,
                oracle: outcome,
            }),
            None => Ok(SolutionVerdict::Undecided {
                reason: if self.all_solved() {
                    "nonzero normal form vanished at every sampled point".into()
                } else {
                    "no admissible sample point satisfying the unsolved equations".into()
                },
            }),
        }
    }

    /// Looks for a point satisfying the base equations at which `nf` (already
    /// reduced modulo the solved forms) is nonzero. Solved equations hold by
    /// construction; each unsolved equation is imposed numerically by solving
    /// for one linear slack atom outside the atoms of `nf`.
    fn manifold_nonzero_witness(
        &self,
        nf: &Expr,
        oracle: &OracleConfig,
    ) -> Result<Option<OracleOutcome>, SystemError> {
        use crate::expr::eval::{eval_exact, random_sample};
        use rand_chacha::rand_core::SeedableRng;

        // reduced residuals of the unsolved equations, with a slack atom each
        let nf_atoms = nf.atoms();
        let mut constraints = Vec::new();
        let mut taken: Vec<Atom> = Vec::new();
        for (v, sf) in self.solved.iter().enumerate() {
            if sf.is_some() {
                continue;
            }
            let (eq, _) = self.reduce(&self.equations[v])?;
            if eq.is_zero()? {
                continue;
            }
            let slack = eq
                .jet_atoms()
                .into_iter()
                .filter(|a| !nf_atoms.contains(a) && !taken.contains(a))
                .filter(|a| eq.diff_atom(a).diff_atom(a).is_zero().unwrap_or(false))
                .max_by_key(|a| {
                    let (d, j) = a.as_jet().unwrap();
                    self.ctx.rank(d, j)
                });
            let Some(slack) = slack else {
                return Ok(None);
            };
            taken.push(slack.clone());
            constraints.push((eq, slack));
        }

        let everything = Expr::sum(
            std::iter::once(nf.clone())
                .chain(constraints.iter().map(|(eq, _)| eq.clone()))
                .collect(),
        );
        let mut hits = 0;
        for i in 0..oracle.points {
            'attempt: for attempt in 0..8u64 {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                    oracle
                        .seed
                        .wrapping_mul(0xA076_1D64_78BD_642F)
                        .wrapping_add(i as u64)
                        .wrapping_add(attempt << 32),
                );
                let (mut point, inst) = random_sample(&everything, &mut rng);
                // impose each constraint by solving for its slack atom
                for (eq, slack) in &constraints {
                    point.bindings.insert(slack.clone(), num::Zero::zero());
                    let at0 = match eval_exact(eq, &point, &inst) {
                        Ok(v) => v,
                        Err(_) => continue 'attempt,
                    };
                    point.bindings.insert(slack.clone(), num::One::one());
                    let at1 = match eval_exact(eq, &point, &inst) {
                        Ok(v) => v,
                        Err(_) => continue 'attempt,
                    };
                    let (Some(v0), Some(v1)) = (at0.as_rational(), at1.as_rational()) else {
                        continue 'attempt;
                    };
                    let c = v1 - v0;
                    if num::Zero::is_zero(&c) {
                        continue 'attempt;
                    }
                    point.bindings.insert(slack.clone(), -v0 / c);
                }
                // later slack assignments may disturb earlier constraints
                for (eq, _) in &constraints {
                    match eval_exact(eq, &point, &inst) {
                        Ok(v) if v.is_zero() => {}
                        _ => continue 'attempt,
                    }
                }
                match eval_exact(nf, &point, &inst) {
                    Ok(v) if !v.is_zero() => {
                        hits += 1;
                        break 'attempt;
                    }
                    _ => break 'attempt,
                }
            }
        }
        Ok(if hits > 0 {
            Some(OracleOutcome {
                points: oracle.points,
                failures: oracle.points - hits,
            })
        } else {
            None
        })
    }

    /// Integrates every `J != 0` certificate entry by parts, after applying
    /// the directed syzygy rewrites. Output invariant (exact):
    /// `sum mu_bar^v Delta_v + flat_div(trivial_flux) = sum mu^{vJ} D_J Delta_v`.
    /// The discarded flux is first-kind trivial: every component is a
    /// multiple of equation values.
    pub fn ibp_characteristic(
        &self,
        cert: &Certificate,
        apps: &[SyzygyApplication],
    ) -> Result<CharacteristicForm, SystemError> {
        let mut working = cert.clone();
        for app in apps {
            let syz = self
                .syzygies
                .get(app.syzygy)
                .unwrap_or_else(|| panic!("unknown syzygy index {}", app.syzygy));
            working = working.plus(&syz.body.scaled(&app.multiplier));
        }
        let mut mu_bar = vec![Expr::zero(); self.equations.len()];
        let mut flux = vec![Expr::zero(); self.ctx.num_indep()];
        for ((v, index), mu) in &working.entries {
            let delta = self.equation(*v)?;
            let dirs = index.dirs().to_vec();
            let mut coeff = mu.clone();
            for (t, &j) in dirs.iter().enumerate() {
                let rest = MultiIndex::new(dirs[t + 1..].to_vec());
                let tail = self.ctx.total_derivative_multi(delta, &rest)?;
                flux[j as usize] = &flux[j as usize] + &coeff * tail;
                coeff = self.ctx.total_derivative(&coeff, j)?.neg();
            }
            mu_bar[*v] = &mu_bar[*v] + coeff;
        }
        Ok(CharacteristicForm {
            characteristics: mu_bar
                .into_iter()
                .map(|e| e.normalized())
                .collect::<Result<Vec<_>, _>>()?,
            trivial_flux: flux
                .into_iter()
                .map(|e| e.normalized())
                .collect::<Result<Vec<_>, _>>()?,
        })
    }
}

/// Seed and point count for the numeric oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub seed: u64,
    pub points: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed: 0x5EED,
            points: 20,
        }
    }
}

#[derive(Debug)]
pub enum SolutionVerdict {
    Zero {
        certificate: Certificate,
        oracle: OracleOutcome,
    },
    Nonzero {
        normal_form: Expr,
        oracle: OracleOutcome,
    },
    Undecided {
        reason: String,
    },
}

impl SolutionVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, SolutionVerdict::Zero { .. })
    }

    pub fn is_nonzero(&self) -> bool {
        matches!(self, SolutionVerdict::Nonzero { .. })
    }
}

/// Characteristic form of a certificate after integration by parts:
/// `sum mu_bar^v Delta_v + flat_div(trivial_flux)` reproduces the input.
#[derive(Debug, Clone)]
pub struct CharacteristicForm {
    pub characteristics: Vec<Expr>,
    pub trivial_flux: Vec<Expr>,
}

/// A conserved flux with its proof object.
#[derive(Debug, Clone)]
pub struct ConservationLaw {
    pub flux: Vec<Expr>,
    pub certificate: Certificate,
    /// characteristic coefficients, filled by triviality analysis
    pub characteristics: Option<Vec<Expr>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetContext;

    /// 2D Euler/vorticity system used across examples.
    fn system_2d() -> DifferentialSystem {
        let mut ctx = JetContext::new(&["t", "x1", "x2"], &["u1", "u2", "w", "p"]);
        ctx.set_block("w", 1);
        let (t, x1, x2) = (0u8, 1u8, 2u8);
        let u1 = Expr::dep("u1");
        let u2 = Expr::dep("u2");
        let w = Expr::dep("w");
        let d1 = Expr::jet("u1", &[t])
            + &u1 * Expr::jet("u1", &[x1])
            + &u2 * Expr::jet("u1", &[x2])
            + Expr::jet("p", &[x1]);
        let d2 = Expr::jet("u2", &[t])
            + &u1 * Expr::jet("u2", &[x1])
            + &u2 * Expr::jet("u2", &[x2])
            + Expr::jet("p", &[x2]);
        let d3 = Expr::jet("w", &[t]) + &u1 * Expr::jet("w", &[x1]) + &u2 * Expr::jet("w", &[x2]);
        let d4 = Expr::jet("u1", &[x1]) + Expr::jet("u2", &[x2]);
        let d5 = &w - (Expr::jet("u2", &[x1]) - Expr::jet("u1", &[x2]));
        let mut sys = DifferentialSystem::new(ctx, vec![d1, d2, d3, d4, d5]);
        sys.solve_for(0, Atom::jet("u1", &[t])).unwrap();
        sys.solve_for(1, Atom::jet("u2", &[t])).unwrap();
        sys.solve_for(2, Atom::jet("w", &[t])).unwrap();
        sys.solve_for(3, Atom::jet("u2", &[x2])).unwrap();
        sys.solve_for(4, Atom::dep("w")).unwrap();
        sys
    }

    #[test]
    fn reduce_equation_itself_to_zero() {
        let sys = system_2d();
        // Delta_5 reduces to zero with unit multiplier on equation 5
        let d5 = sys.equations()[4].clone();
        let (nf, cert) = sys.reduce(&d5).unwrap();
        assert!(nf.is_zero().unwrap());
        assert_eq!(cert.entries.len(), 1);
        let ((v, j), c) = cert.entries.iter().next().unwrap();
        assert_eq!((*v, j.is_empty()), (4, true));
        assert!(c.equivalent(&Expr::one()).unwrap());

        // transport equation reduces via its own solved form
        let d3 = sys.equations()[2].clone();
        let (nf3, cert3) = sys.reduce(&d3).unwrap();
        assert!(nf3.is_zero().unwrap());
        let ((v3, _), c3) = cert3.entries.iter().next().unwrap();
        assert_eq!(*v3, 2);
        assert!(c3.equivalent(&Expr::one()).unwrap());
    }

    #[test]
    fn reduce_soundness_identity() {
        let sys = system_2d();
        // a messier expression: w_t * u1 + w * Delta_4-ish pieces
        let e = Expr::jet("w", &[0]) * Expr::dep("u1")
            + Expr::dep("w") * Expr::jet("u2", &[2]).pow_i(2)
            + Expr::jet("w", &[0, 1]);
        let (nf, cert) = sys.reduce(&e).unwrap();
        let recomposed = &nf + sys.combination_value(&cert).unwrap();
        assert!(recomposed.equivalent(&e).unwrap());
        // all reducible atoms are gone
        assert!(nf
            .jet_atoms()
            .iter()
            .all(|a| sys.reducer_for(a).is_none()));
    }

    #[test]
    fn certificate_verification_modes() {
        let sys = system_2d();
        let oracle = OracleConfig::default();
        // e = 2*Delta_1 with certificate {mu = 2}
        let e = Expr::int(2) * sys.equations()[0].clone();
        let mut cert = Certificate::new();
        cert.add(0, MultiIndex::empty(), Expr::int(2));
        let v = sys.on_solutions_zero(&e, Some(&cert), &oracle).unwrap();
        assert!(v.is_zero());

        // wrong certificate is a mismatch error
        let mut bad = Certificate::new();
        bad.add(0, MultiIndex::empty(), Expr::int(3));
        assert!(matches!(
            sys.on_solutions_zero(&e, Some(&bad), &oracle),
            Err(SystemError::CertificateMismatch { .. })
        ));

        // f(w) is nonzero on solutions
        let f = Expr::fn_app("f", &[0], &[Expr::dep("w")]).unwrap();
        let v2 = sys.on_solutions_zero(&f, None, &oracle).unwrap();
        assert!(v2.is_nonzero());
    }

    #[test]
    fn ibp_characteristic_trivial_case() {
        let sys = system_2d();
        // only J = 0 entries: characteristics equal the entries, no flux
        let mut cert = Certificate::new();
        cert.add(2, MultiIndex::empty(), Expr::dep("u1"));
        let form = sys.ibp_characteristic(&cert, &[]).unwrap();
        assert!(form.characteristics[2].equivalent(&Expr::dep("u1")).unwrap());
        assert!(form.trivial_flux.iter().all(|f| f.is_zero().unwrap()));
    }

    #[test]
    fn ibp_characteristic_decomposition_is_exact() {
        let sys = system_2d();
        let f = Expr::fn_app("f", &[1], &[Expr::dep("w")]).unwrap();
        let mut cert = Certificate::new();
        // mu^{1,(x1)} = f'(w) u1 and mu^{4, (t,x2)} = w
        cert.add(0, MultiIndex::new(vec![1]), &f * Expr::dep("u1"));
        cert.add(3, MultiIndex::new(vec![0, 2]), Expr::dep("w"));
        let form = sys.ibp_characteristic(&cert, &[]).unwrap();
        let lhs = {
            let mut terms = Vec::new();
            for (v, mu) in form.characteristics.iter().enumerate() {
                terms.push(mu * &sys.equations()[v]);
            }
            Expr::sum(terms)
        };
        // trivial flux is integrated with the flat divergence
        let flat = JetContext::new(&["t", "x1", "x2"], &["u1", "u2", "w", "p"]);
        let div = flat.divergence(&form.trivial_flux).unwrap();
        let rhs = sys.combination_value(&cert).unwrap();
        assert!((lhs + div).equivalent(&rhs).unwrap());
    }

    #[test]
    fn solved_form_validation_errors() {
        let ctx = JetContext::new(&["t", "x"], &["u"]);
        // u_t + u*u_x: solving for u_x has a jet-dependent coefficient
        let e = Expr::jet("u", &[0]) + Expr::dep("u") * Expr::jet("u", &[1]);
        let mut sys = DifferentialSystem::new(ctx, vec![e]);
        assert!(matches!(
            sys.solve_for(0, Atom::jet("u", &[1])),
            Err(SystemError::NonLinearLeading { .. })
        ));
        // solving for u_t is fine
        sys.solve_for(0, Atom::jet("u", &[0])).unwrap();
    }
}
