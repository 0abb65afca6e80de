//! Atoms: the indeterminates of the expression kernel.
//!
//! Every expression is a rational function in a finite set of atoms. Atoms
//! are totally ordered (kind, then name, then index data) so that the
//! canonical normal form is deterministic.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

type DirVec = SmallVec<[u8; 6]>;

use super::poly::Poly;
use super::Expr;

/// An unordered multiset of derivative directions `(j1, ..., jk)`.
///
/// Directions are indices into the independent-variable list of the ambient
/// context. The empty index denotes the bare dependent variable itself.
/// Ordered by total order first, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex(DirVec);

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(DirVec::new())
    }

    /// Builds a multi-index from directions in any order.
    pub fn new(dirs: Vec<u8>) -> Self {
        let mut v = DirVec::from_vec(dirs);
        v.sort_unstable();
        MultiIndex(v)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dirs(&self) -> &[u8] {
        &self.0
    }

    /// Multiplicity of one direction.
    pub fn count(&self, dir: u8) -> usize {
        self.0.iter().filter(|&&d| d == dir).count()
    }

    /// The multi-index with one extra derivative in `dir`.
    pub fn push(&self, dir: u8) -> Self {
        let mut v = self.0.clone();
        let pos = v.partition_point(|&d| d <= dir);
        v.insert(pos, dir);
        MultiIndex(v)
    }

    /// Multiset union.
    pub fn concat(&self, other: &MultiIndex) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        MultiIndex(v)
    }

    /// Removes one occurrence of `dir`; `None` if absent.
    pub fn remove(&self, dir: u8) -> Option<Self> {
        let pos = self.0.iter().position(|&d| d == dir)?;
        let mut v = self.0.clone();
        v.remove(pos);
        Some(MultiIndex(v))
    }

    /// True when `self` contains `other` as a multiset.
    pub fn contains(&self, other: &MultiIndex) -> bool {
        let mut rest = self.0.clone();
        for d in &other.0 {
            match rest.iter().position(|x| x == d) {
                Some(p) => {
                    rest.remove(p);
                }
                None => return false,
            }
        }
        true
    }

    /// Multiset difference `self \ other`; requires containment.
    pub fn difference(&self, other: &MultiIndex) -> Option<Self> {
        let mut rest = self.0.clone();
        for d in &other.0 {
            let p = rest.iter().position(|x| x == d)?;
            rest.remove(p);
        }
        Some(MultiIndex(rest))
    }

    /// All sub-multisets `S ⊆ self` together with the multiplicity with which
    /// the split `self = S ∪ (self \ S)` occurs in a Leibniz expansion, i.e.
    /// the product of binomial coefficients per distinct direction.
    pub fn subsets_with_multiplicity(&self) -> Vec<(MultiIndex, MultiIndex, u64)> {
        // group by direction
        let mut groups: Vec<(u8, u32)> = Vec::new();
        for &d in &self.0 {
            match groups.last_mut() {
                Some((dir, n)) if *dir == d => *n += 1,
                _ => groups.push((d, 1)),
            }
        }
        let mut out: Vec<(Vec<u8>, Vec<u8>, u64)> = vec![(Vec::new(), Vec::new(), 1u64)];
        for (dir, n) in groups {
            let mut next = Vec::new();
            for (taken, left, mult) in &out {
                for k in 0..=n {
                    let mut t = taken.clone();
                    t.extend(std::iter::repeat(dir).take(k as usize));
                    let mut l = left.clone();
                    l.extend(std::iter::repeat(dir).take((n - k) as usize));
                    next.push((t, l, mult * binomial(n, k)));
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|(t, l, m)| (MultiIndex::new(t), MultiIndex::new(l), m))
            .collect()
    }
}

fn binomial(n: u32, k: u32) -> u64 {
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J{:?}", self.0)
    }
}

/// A scalar field symbol such as `B(r)`: a named function of the independent
/// variables, opaque except for derivative rules registered in the context
/// and an optional declared square.
///
/// The `square`, when present, is a rational function (num, den) that the
/// normalizer substitutes for even powers of the atom. This is how closed
/// forms like `B(r) = r/sqrt(a^2 r^2 + b^2)` stay exactly representable:
/// the atom is kept opaque, while `B^2 = r^2/(a^2 r^2 + b^2)` folds away.
///
/// Identity is by name alone; contexts are responsible for keeping one
/// definition per name.
pub struct FieldSym {
    pub name: Arc<str>,
    pub square: Option<(Poly, Poly)>,
}

impl FieldSym {
    pub fn plain(name: &str) -> Arc<Self> {
        Arc::new(FieldSym {
            name: name.into(),
            square: None,
        })
    }
}

impl PartialEq for FieldSym {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}
impl Eq for FieldSym {}
impl PartialOrd for FieldSym {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FieldSym {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}
impl std::hash::Hash for FieldSym {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.name.hash(state);
    }
}
impl fmt::Debug for FieldSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// An application of an arbitrary (opaque) function, e.g. `f''(w)` or the
/// two-argument `diff(f,1,0)(phi, w)`.
///
/// `orders[j]` is the number of formal derivatives taken in argument `j`.
/// Arguments are stored in canonical normal form, so two applications are
/// equal iff name, orders and arguments all agree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FnApp {
    pub name: Arc<str>,
    pub orders: Vec<u32>,
    pub args: Vec<Expr>,
}

impl fmt::Debug for FnApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}{:?}", self.name, self.orders, self.args)
    }
}

/// The indeterminates of the kernel.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// An independent variable `x^i`.
    Indep(Arc<str>),
    /// A constant parameter.
    Param(Arc<str>),
    /// A registered field symbol (see [`FieldSym`]).
    Field(Arc<FieldSym>),
    /// A jet coordinate `u^a_J`; `index.is_empty()` denotes `u^a` itself.
    Jet { dep: Arc<str>, index: MultiIndex },
    /// An opaque function application (see [`FnApp`]).
    Fn(Arc<FnApp>),
}

impl Atom {
    pub fn indep(name: &str) -> Atom {
        Atom::Indep(name.into())
    }
    pub fn param(name: &str) -> Atom {
        Atom::Param(name.into())
    }
    pub fn jet(dep: &str, dirs: &[u8]) -> Atom {
        Atom::Jet {
            dep: dep.into(),
            index: MultiIndex::new(dirs.to_vec()),
        }
    }
    pub fn dep(dep: &str) -> Atom {
        Atom::jet(dep, &[])
    }

    /// For jet atoms, the (dependent variable, multi-index) pair.
    pub fn as_jet(&self) -> Option<(&Arc<str>, &MultiIndex)> {
        match self {
            Atom::Jet { dep, index } => Some((dep, index)),
            _ => None,
        }
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, Atom::Jet { .. })
    }

    /// The declared square of a field atom, if any.
    pub fn square(&self) -> Option<&(Poly, Poly)> {
        match self {
            Atom::Field(sym) => sym.square.as_ref(),
            _ => None,
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Indep(n) => write!(f, "{n}"),
            Atom::Param(n) => write!(f, "{n}"),
            Atom::Field(s) => write!(f, "{}", s.name),
            Atom::Jet { dep, index } => {
                if index.is_empty() {
                    write!(f, "{dep}")
                } else {
                    write!(f, "{dep}_{:?}", index)
                }
            }
            Atom::Fn(app) => write!(f, "{app:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiindex_is_order_insensitive() {
        assert_eq!(MultiIndex::new(vec![1, 2]), MultiIndex::new(vec![2, 1]));
        assert_eq!(MultiIndex::new(vec![0, 1, 1]).order(), 3);
    }

    #[test]
    fn multiindex_multiset_ops() {
        let m = MultiIndex::new(vec![0, 1, 1]);
        assert!(m.contains(&MultiIndex::new(vec![1, 1])));
        assert!(!m.contains(&MultiIndex::new(vec![2])));
        assert_eq!(
            m.difference(&MultiIndex::new(vec![1])).unwrap(),
            MultiIndex::new(vec![0, 1])
        );
        assert_eq!(m.remove(3), None);
    }

    #[test]
    fn subset_multiplicities_are_binomial() {
        let m = MultiIndex::new(vec![1, 1]);
        let subs = m.subsets_with_multiplicity();
        // {} (1), {1} (2), {1,1} (1)
        assert_eq!(subs.len(), 3);
        let total: u64 = subs.iter().map(|(_, _, k)| *k).sum();
        assert_eq!(total, 4);
        let mid = subs
            .iter()
            .find(|(s, _, _)| s.order() == 1)
            .expect("has singleton");
        assert_eq!(mid.2, 2);
    }

    #[test]
    fn atom_order_is_by_kind_then_name() {
        let x = Atom::indep("x");
        let a = Atom::param("a");
        let u = Atom::dep("u");
        assert!(x < a && a < u);
        assert!(Atom::jet("u", &[0]) < Atom::jet("u", &[1]));
        assert!(Atom::jet("u", &[1]) < Atom::jet("u", &[0, 1]));
    }
}
