//! Marginal scenarios and marginal models.
//!
//! A scenario declares a downward-closed family of jointly measurable subsets
//! (contexts) of dichotomic ±1 observables. A model assigns an outcome
//! distribution to every context, consistently on shared sub-contexts
//! (no-disturbance). Models come in two numeric flavours: exact rationals for
//! polytope work and `f64` for quantum-derived statistics; the two are never
//! mixed inside one model.
//!
//! Outcome tuples are encoded as binary integers: +1 is bit 0, -1 is bit 1,
//! and the context's first observable (in canonical order) is the most
//! significant bit. With that encoding the probability table of an m-observable
//! context and its expectation values are related by the 2^m Hadamard matrix,
//! which is what [`probs_to_expectations`] and [`expectations_to_probs`] apply.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest number of observables a scenario may declare.
pub const MAX_OBSERVABLES: usize = 20;
/// Largest context size; keeps the 2^m outcome tables small.
pub const MAX_CONTEXT_SIZE: usize = 8;
/// Cap on the order of [`hadamard_matrix`].
pub const MAX_HADAMARD_ORDER: usize = 20;
/// Comparison tolerance for `f64`-valued tables and expectations.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("context list is empty")]
    EmptyContextList,
    #[error("context {0:?} is empty")]
    EmptyContext(String),
    #[error("duplicate observable {0:?} inside one context")]
    DuplicateObservable(String),
    #[error("observable name {0:?} is not well-formed (nonempty, no commas or whitespace)")]
    BadObservableName(String),
    #[error("scenario has {0} observables, cap is {MAX_OBSERVABLES}")]
    TooManyObservables(usize),
    #[error("context {0:?} has {1} observables, cap is {MAX_CONTEXT_SIZE}")]
    ContextTooLarge(String, usize),
    #[error("unknown observable {0:?}")]
    UnknownObservable(String),
    #[error("unknown context {0:?}")]
    UnknownContext(String),
    #[error("hadamard order must be between 1 and {MAX_HADAMARD_ORDER}, got {0}")]
    BadHadamardOrder(usize),
    #[error("table for context {context:?} has {got} entries, expected {expected}")]
    BadTableSize {
        context: String,
        got: usize,
        expected: usize,
    },
    #[error("table for context {context:?} sums to {sum}, expected 1")]
    NotNormalized { context: String, sum: String },
    #[error("negative probability {value} for outcome {outcome:?} in context {context:?}")]
    NegativeProbability {
        context: String,
        outcome: String,
        value: String,
    },
    #[error("no-disturbance violated: {0}")]
    Disturbance(NoDisturbanceReport),
    #[error("missing table for maximal context {0:?}")]
    MissingTable(String),
    #[error(
        "positivity violated reconstructing context {context:?}: \
         2^{m}*p({outcome}|{context}) = {value} < 0 (inequality {inequality})"
    )]
    PositivityViolation {
        context: String,
        outcome: String,
        m: usize,
        value: String,
        inequality: String,
    },
    #[error("expectation {value} for context {context:?} outside [-1, 1]")]
    ExpectationOutOfRange { context: String, value: String },
}

/// Number type a model can carry: exact rationals or binary floats.
///
/// The two implementations differ only in how equality and sign are judged:
/// rationals compare exactly, floats within [`FLOAT_TOLERANCE`].
pub trait Scalar: Clone + PartialEq + PartialOrd + fmt::Debug + fmt::Display {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Division by a power of two (the only division the transforms need).
    fn div_pow2(&self, k: usize) -> Self;
    /// Equality at the type's native tolerance.
    fn close_to(&self, other: &Self) -> bool;
    /// Strictly negative beyond the type's native tolerance.
    fn is_negative_strict(&self) -> bool;
    /// Tiny negatives (inside tolerance) snapped to zero; everything else kept.
    fn clamp_tiny_negative(self) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div_pow2(&self, k: usize) -> Self {
        self / (1u64 << k) as f64
    }
    fn close_to(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }
    fn is_negative_strict(&self) -> bool {
        *self < -FLOAT_TOLERANCE
    }
    fn clamp_tiny_negative(self) -> Self {
        if self < 0.0 && self >= -FLOAT_TOLERANCE {
            0.0
        } else {
            self
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div_pow2(&self, k: usize) -> Self {
        self / BigRational::from_integer(BigInt::from(1u64) << k)
    }
    fn close_to(&self, other: &Self) -> bool {
        self == other
    }
    fn is_negative_strict(&self) -> bool {
        self.is_negative()
    }
    fn clamp_tiny_negative(self) -> Self {
        self
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// A dichotomic random variable. Outcomes are fixed as (+1, -1).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Observable {
    pub name: String,
}

impl Observable {
    pub const OUTCOMES: [i8; 2] = [1, -1];
}

fn name_ok(name: &str) -> bool {
    !name.is_empty() && !name.contains(',') && !name.chars().any(char::is_whitespace)
}

/// Symbol for one outcome: '+' for +1 (bit 0), '-' for -1 (bit 1).
pub fn outcome_char(bit: bool) -> char {
    if bit {
        '-'
    } else {
        '+'
    }
}

/// Render an outcome index of an m-observable context as a +/- string,
/// most significant bit (first observable) first.
pub fn outcome_string(index: usize, m: usize) -> String {
    (0..m)
        .map(|j| outcome_char(index & (1 << (m - 1 - j)) != 0))
        .collect()
}

/// Parse a +/- string back to an outcome index.
pub fn parse_outcome(s: &str, m: usize) -> Option<usize> {
    if s.chars().count() != m {
        return None;
    }
    let mut idx = 0usize;
    for c in s.chars() {
        idx <<= 1;
        match c {
            '+' => {}
            '-' => idx |= 1,
            _ => return None,
        }
    }
    Some(idx)
}

/// The sign (+1/-1) of observable position `j` (0-based, canonical order)
/// in outcome index `idx` of an m-observable context.
pub fn outcome_sign(idx: usize, m: usize, j: usize) -> i8 {
    if idx & (1 << (m - 1 - j)) != 0 {
        -1
    } else {
        1
    }
}

/// A downward-closed family of measurable observable subsets.
///
/// Observables are stored sorted lexicographically by name; contexts are
/// stored as sorted index lists, ordered by (size, members). Both orderings
/// are the canonical ones used by every serialization in the crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalScenario {
    observables: Vec<Observable>,
    contexts: Vec<Vec<usize>>,
    maximal: Vec<usize>,
}

impl MarginalScenario {
    /// Validate a raw context family: checks names, adds singletons, closes
    /// downward, applies canonical ordering. This is the only constructor.
    pub fn from_context_names(raw: &[Vec<String>]) -> Result<Self, ScenarioError> {
        if raw.is_empty() {
            return Err(ScenarioError::EmptyContextList);
        }
        let mut names: BTreeSet<String> = BTreeSet::new();
        for ctx in raw {
            if ctx.is_empty() {
                return Err(ScenarioError::EmptyContext(ctx.join(",")));
            }
            let mut seen = BTreeSet::new();
            for name in ctx {
                if !name_ok(name) {
                    return Err(ScenarioError::BadObservableName(name.clone()));
                }
                if !seen.insert(name.clone()) {
                    return Err(ScenarioError::DuplicateObservable(name.clone()));
                }
                names.insert(name.clone());
            }
            if ctx.len() > MAX_CONTEXT_SIZE {
                return Err(ScenarioError::ContextTooLarge(ctx.join(","), ctx.len()));
            }
        }
        if names.len() > MAX_OBSERVABLES {
            return Err(ScenarioError::TooManyObservables(names.len()));
        }
        let observables: Vec<Observable> = names
            .into_iter()
            .map(|name| Observable { name })
            .collect();
        let index_of: BTreeMap<&str, usize> = observables
            .iter()
            .enumerate()
            .map(|(i, o)| (o.name.as_str(), i))
            .collect();

        // Downward closure over nonempty subsets, singletons included.
        let mut closed: BTreeSet<Vec<usize>> = BTreeSet::new();
        for i in 0..observables.len() {
            closed.insert(vec![i]);
        }
        for ctx in raw {
            let mut members: Vec<usize> = ctx.iter().map(|n| index_of[n.as_str()]).collect();
            members.sort_unstable();
            let m = members.len();
            for mask in 1usize..(1 << m) {
                let subset: Vec<usize> = (0..m)
                    .filter(|j| mask & (1 << j) != 0)
                    .map(|j| members[j])
                    .collect();
                closed.insert(subset);
            }
        }
        let mut contexts: Vec<Vec<usize>> = closed.into_iter().collect();
        contexts.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

        let maximal = (0..contexts.len())
            .filter(|&i| {
                !contexts
                    .iter()
                    .enumerate()
                    .any(|(j, c)| j != i && contexts[i].iter().all(|x| c.contains(x)))
            })
            .collect();
        Ok(MarginalScenario {
            observables,
            contexts,
            maximal,
        })
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    /// All contexts in canonical order. This is also the coordinate order of
    /// [`ExpectationVector`] entries.
    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    /// Indices (into `contexts`) of the inclusion-maximal contexts.
    pub fn maximal_contexts(&self) -> &[usize] {
        &self.maximal
    }

    /// Number of contexts; the ambient dimension of the model polytopes.
    pub fn dimension(&self) -> usize {
        self.contexts.len()
    }

    pub fn observable_index(&self, name: &str) -> Option<usize> {
        self.observables
            .binary_search_by(|o| o.name.as_str().cmp(name))
            .ok()
    }

    pub fn context_index(&self, members: &[usize]) -> Option<usize> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        self.contexts
            .binary_search_by(|c| c.len().cmp(&sorted.len()).then_with(|| c.cmp(&&sorted)))
            .ok()
    }

    pub fn context_index_by_names(&self, names: &[String]) -> Option<usize> {
        let members: Option<Vec<usize>> = names
            .iter()
            .map(|n| self.observable_index(n))
            .collect();
        self.context_index(&members?)
    }

    /// Canonical comma-joined key of a context, e.g. `"X0,X1"`.
    pub fn context_key(&self, ctx: usize) -> String {
        self.contexts[ctx]
            .iter()
            .map(|&i| self.observables[i].name.as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn context_names(&self, ctx: usize) -> Vec<String> {
        self.contexts[ctx]
            .iter()
            .map(|&i| self.observables[i].name.clone())
            .collect()
    }

    /// Parse a comma-joined context key (member order irrelevant).
    pub fn context_index_by_key(&self, key: &str) -> Option<usize> {
        let names: Vec<String> = key.split(',').map(|s| s.trim().to_string()).collect();
        self.context_index_by_names(&names)
    }

    /// Index of the first maximal context containing `ctx`.
    pub fn parent_maximal(&self, ctx: usize) -> usize {
        *self
            .maximal
            .iter()
            .find(|&&m| self.contexts[ctx].iter().all(|x| self.contexts[m].contains(x)))
            .expect("every context is inside some maximal context")
    }
}

/// The 2^m x 2^m Hadamard matrix H_m = H_1 (x) H_{m-1}.
///
/// Symmetric, with H_m^2 = 2^m * identity; entry (i, j) is (-1)^popcount(i & j).
pub fn hadamard_matrix(m: usize) -> Result<Vec<Vec<i32>>, ScenarioError> {
    if m == 0 || m > MAX_HADAMARD_ORDER {
        return Err(ScenarioError::BadHadamardOrder(m));
    }
    let n = 1usize << m;
    let mut h = vec![vec![0i32; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = if (i & j).count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    Ok(h)
}

/// In-place fast Walsh-Hadamard transform: v := H_m v for len(v) = 2^m.
pub fn hadamard_apply<T: Scalar>(v: &mut [T]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        let mut base = 0;
        while base < n {
            for i in base..base + half {
                let x = v[i].clone();
                let y = v[i + half].clone();
                v[i] = x.add(&y);
                v[i + half] = x.sub(&y);
            }
            base += half * 2;
        }
        half *= 2;
    }
}

/// Per-context outcome probability tables satisfying no-disturbance.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalModel<T: Scalar> {
    scenario: MarginalScenario,
    /// One table per context (canonical order); table index is the outcome
    /// encoding described at module level.
    tables: Vec<Vec<T>>,
}

/// Outcome of [`check_no_disturbance`]: empty `violations` means pass.
#[derive(Clone, Debug, Default)]
pub struct NoDisturbanceReport {
    pub violations: Vec<NdViolation>,
}

/// Two sources (a context's own table, or the marginal of a superset table)
/// disagree about the distribution of `context`.
#[derive(Clone, Debug)]
pub struct NdViolation {
    pub context: String,
    pub outcome: String,
    pub source_a: String,
    pub value_a: String,
    pub source_b: String,
    pub value_b: String,
}

impl NoDisturbanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for NoDisturbanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "pass");
        }
        for v in &self.violations {
            writeln!(
                f,
                "p({}|{}) is {} via {} but {} via {}",
                v.outcome, v.context, v.value_a, v.source_a, v.value_b, v.source_b
            )?;
        }
        Ok(())
    }
}

/// Marginalize `table` of context `sup` (member indices, sorted) down to
/// `sub`, both in canonical bit encoding.
fn marginalize<T: Scalar>(table: &[T], sup: &[usize], sub: &[usize]) -> Vec<T> {
    let m_sup = sup.len();
    let m_sub = sub.len();
    // position of each sub-member inside sup
    let pos: Vec<usize> = sub
        .iter()
        .map(|x| sup.iter().position(|y| y == x).expect("sub not inside sup"))
        .collect();
    let mut out = vec![T::zero(); 1 << m_sub];
    for (idx, p) in table.iter().enumerate() {
        let mut sub_idx = 0usize;
        for (j, &pj) in pos.iter().enumerate() {
            if idx & (1 << (m_sup - 1 - pj)) != 0 {
                sub_idx |= 1 << (m_sub - 1 - j);
            }
        }
        out[sub_idx] = out[sub_idx].add(p);
    }
    out
}

/// Verify marginal compatibility (no-disturbance) of raw per-context tables:
/// for every context of the scenario, all ways of obtaining its distribution
/// from the provided tables (its own table, or marginals of provided superset
/// tables) must agree — exactly for rationals, to 1e-12 for floats.
/// Violations are report content, not errors.
pub fn check_no_disturbance<T: Scalar>(
    scenario: &MarginalScenario,
    tables: &BTreeMap<usize, Vec<T>>,
) -> NoDisturbanceReport {
    let mut report = NoDisturbanceReport::default();
    for sub_id in 0..scenario.dimension() {
        let sub = &scenario.contexts()[sub_id];
        // (source context, distribution of `sub` derived from it)
        let mut sources: Vec<(usize, Vec<T>)> = Vec::new();
        for (&sup_id, sup_table) in tables {
            let sup = &scenario.contexts()[sup_id];
            if sub.iter().all(|x| sup.contains(x)) {
                sources.push((sup_id, marginalize(sup_table, sup, sub)));
            }
        }
        let Some((first_id, first)) = sources.first().cloned() else {
            continue;
        };
        for (other_id, other) in &sources[1..] {
            for (idx, got) in other.iter().enumerate() {
                if !got.close_to(&first[idx]) {
                    report.violations.push(NdViolation {
                        context: scenario.context_key(sub_id),
                        outcome: outcome_string(idx, sub.len()),
                        source_a: scenario.context_key(first_id),
                        value_a: format!("{}", first[idx]),
                        source_b: scenario.context_key(*other_id),
                        value_b: format!("{}", got),
                    });
                }
            }
        }
    }
    report
}

impl<T: Scalar> MarginalModel<T> {
    /// Build a model from tables for some contexts. Tables for every maximal
    /// context are required; missing sub-context tables are derived by
    /// marginalization. All provided tables are validated for normalization,
    /// nonnegativity, and mutual no-disturbance.
    pub fn from_tables(
        scenario: MarginalScenario,
        provided: BTreeMap<usize, Vec<T>>,
    ) -> Result<Self, ScenarioError> {
        for (&ctx, table) in &provided {
            let m = scenario.contexts()[ctx].len();
            if table.len() != 1 << m {
                return Err(ScenarioError::BadTableSize {
                    context: scenario.context_key(ctx),
                    got: table.len(),
                    expected: 1 << m,
                });
            }
            let mut sum = T::zero();
            for (idx, p) in table.iter().enumerate() {
                if p.is_negative_strict() {
                    return Err(ScenarioError::NegativeProbability {
                        context: scenario.context_key(ctx),
                        outcome: outcome_string(idx, m),
                        value: format!("{}", p),
                    });
                }
                sum = sum.add(p);
            }
            if !sum.close_to(&T::one()) {
                return Err(ScenarioError::NotNormalized {
                    context: scenario.context_key(ctx),
                    sum: format!("{}", sum),
                });
            }
        }
        for &mx in scenario.maximal_contexts() {
            if !provided.contains_key(&mx) {
                return Err(ScenarioError::MissingTable(scenario.context_key(mx)));
            }
        }
        let report = check_no_disturbance(&scenario, &provided);
        if !report.passed() {
            return Err(ScenarioError::Disturbance(report));
        }
        let mut tables = Vec::with_capacity(scenario.dimension());
        for ctx in 0..scenario.dimension() {
            if let Some(t) = provided.get(&ctx) {
                tables.push(t.clone());
            } else {
                let parent = scenario.parent_maximal(ctx);
                let t = marginalize(
                    &provided[&parent],
                    &scenario.contexts()[parent],
                    &scenario.contexts()[ctx],
                );
                tables.push(t.iter().cloned().map(T::clamp_tiny_negative).collect());
            }
        }
        Ok(MarginalModel { scenario, tables })
    }

    /// Build a model by evaluating `f` on every context. `f` receives the
    /// context's sorted member indices and must return its outcome table.
    pub fn from_context_fn(
        scenario: MarginalScenario,
        mut f: impl FnMut(&[usize]) -> Vec<T>,
    ) -> Result<Self, ScenarioError> {
        let provided: BTreeMap<usize, Vec<T>> = (0..scenario.dimension())
            .map(|c| (c, f(&scenario.contexts()[c])))
            .collect();
        Self::from_tables(scenario, provided)
    }

    pub fn scenario(&self) -> &MarginalScenario {
        &self.scenario
    }

    pub fn table(&self, ctx: usize) -> &[T] {
        &self.tables[ctx]
    }

    pub fn tables(&self) -> &[Vec<T>] {
        &self.tables
    }
}

impl MarginalModel<f64> {
    /// Convert a float model to an exactly valid rational model.
    ///
    /// Every table entry is read as an exact binary fraction (no decimal
    /// rounding). Because a float model satisfies no-disturbance only to
    /// 1e-12, the exact readings of overlapping contexts can disagree at that
    /// scale, so the model is re-assembled through its expectation
    /// representation (which parametrizes no-disturbance models freely): each
    /// context's expectation is the exact signed sum over its first maximal
    /// parent's table. If reconstruction then leaves some probability negative
    /// within the float tolerance — models on the positivity boundary do this —
    /// the expectation vector is shrunk toward the uniform model by the
    /// smallest power-of-two factor that restores nonnegativity. Violations
    /// beyond the float tolerance are errors.
    pub fn rationalize(&self) -> Result<MarginalModel<BigRational>, ScenarioError> {
        let scenario = &self.scenario;
        let exact = |x: f64| BigRational::from_float(x).unwrap_or_else(<BigRational as Zero>::zero);
        let mut entries: Vec<BigRational> = Vec::with_capacity(scenario.dimension());
        for ctx in 0..scenario.dimension() {
            let parent = scenario.parent_maximal(ctx);
            let sup = &scenario.contexts()[parent];
            let sub = &scenario.contexts()[ctx];
            let pos: Vec<usize> = sub
                .iter()
                .map(|x| sup.iter().position(|y| y == x).unwrap())
                .collect();
            let m_sup = sup.len();
            let mut e = <BigRational as Zero>::zero();
            for (idx, &p) in self.tables[parent].iter().enumerate() {
                let parity = pos
                    .iter()
                    .filter(|&&pj| idx & (1 << (m_sup - 1 - pj)) != 0)
                    .count();
                if parity % 2 == 0 {
                    e += exact(p);
                } else {
                    e -= exact(p);
                }
            }
            // |e| can exceed 1 by the model's float slack; clamp exactly.
            let one = <BigRational as One>::one();
            if e > one {
                e = one;
            } else if e < -one.clone() {
                e = -one;
            }
            entries.push(e);
        }
        let tol = BigRational::new(BigInt::from(1), BigInt::from(10u64).pow(12));
        for shrink_pow in 0..=4u32 {
            let scale = if shrink_pow == 0 {
                <BigRational as One>::one()
            } else {
                // 1 - 2^-(40 - 8*(shrink_pow-1)): deterministic dyadic shrink
                let k = 40 - 8 * (shrink_pow - 1);
                <BigRational as One>::one()
                    - BigRational::new(BigInt::from(1), BigInt::from(1u64) << k)
            };
            let scaled: Vec<BigRational> = entries.iter().map(|e| e * &scale).collect();
            let ev = ExpectationVector::new(scenario.clone(), scaled)?;
            match expectations_to_probs(&ev) {
                Ok(model) => return Ok(model),
                Err(ScenarioError::PositivityViolation { ref value, .. }) => {
                    let v: BigRational = value.parse().map_err(|_| {
                        ScenarioError::NegativeProbability {
                            context: String::new(),
                            outcome: String::new(),
                            value: value.clone(),
                        }
                    })?;
                    if -v > tol {
                        return Err(expectations_to_probs(&ev).unwrap_err());
                    }
                    // inside tolerance: shrink a bit more and retry
                }
                Err(e) => return Err(e),
            }
        }
        // unreachable in practice: shrinking by 1 - 2^-16 clears any
        // within-tolerance negativity since table entries are affine in e
        expectations_to_probs(&ExpectationVector::new(scenario.clone(), entries)?)
    }
}

/// One expectation value per context, in canonical context order
/// (singletons first, then pairs, then larger contexts).
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationVector<T: Scalar> {
    scenario: MarginalScenario,
    entries: Vec<T>,
}

impl<T: Scalar> ExpectationVector<T> {
    pub fn new(scenario: MarginalScenario, entries: Vec<T>) -> Result<Self, ScenarioError> {
        assert_eq!(entries.len(), scenario.dimension());
        for (ctx, e) in entries.iter().enumerate() {
            // 1 - e < 0 means e > 1; e + 1 < 0 means e < -1 (beyond tolerance)
            let above = T::one().sub(e).is_negative_strict();
            let below = e.add(&T::one()).is_negative_strict();
            if above || below {
                return Err(ScenarioError::ExpectationOutOfRange {
                    context: scenario.context_key(ctx),
                    value: format!("{}", e),
                });
            }
        }
        Ok(ExpectationVector { scenario, entries })
    }

    pub fn scenario(&self) -> &MarginalScenario {
        &self.scenario
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn entry(&self, ctx: usize) -> &T {
        &self.entries[ctx]
    }
}

/// Expectation values of all contexts of a valid model.
///
/// Each context's expectation is the Hadamard component of its own table
/// (row of all outcome signs); no-disturbance makes reading it from any
/// parent context agree.
pub fn probs_to_expectations<T: Scalar>(model: &MarginalModel<T>) -> ExpectationVector<T> {
    let scenario = model.scenario().clone();
    let entries: Vec<T> = (0..scenario.dimension())
        .map(|c| {
            let table = model.table(c);
            let mut e = T::zero();
            for (idx, p) in table.iter().enumerate() {
                if idx.count_ones() % 2 == 0 {
                    e = e.add(p);
                } else {
                    e = e.sub(p);
                }
            }
            e
        })
        .collect();
    ExpectationVector::new(scenario, entries)
        .expect("expectations of a valid model are within [-1, 1]")
}

/// Invert the Hadamard representation: reconstruct every context table as
/// H_m e / 2^m and reject if any entry is negative (the violated positivity
/// inequality is reported). Exact for rational inputs.
pub fn expectations_to_probs<T: Scalar>(
    vec: &ExpectationVector<T>,
) -> Result<MarginalModel<T>, ScenarioError> {
    let scenario = vec.scenario().clone();
    let mut provided = BTreeMap::new();
    for ctx in 0..scenario.dimension() {
        let members = &scenario.contexts()[ctx];
        let m = members.len();
        // e-vector indexed by subset mask (MSB-first positions), e[0] = 1
        let mut e = vec![T::zero(); 1 << m];
        for mask in 0..(1usize << m) {
            if mask == 0 {
                e[0] = T::one();
                continue;
            }
            let subset: Vec<usize> = (0..m)
                .filter(|j| mask & (1 << (m - 1 - j)) != 0)
                .map(|j| members[j])
                .collect();
            let sub_ctx = scenario
                .context_index(&subset)
                .expect("downward closure: every subset is a context");
            e[mask] = vec.entry(sub_ctx).clone();
        }
        hadamard_apply(&mut e);
        let table: Vec<T> = e.into_iter().map(|x| x.div_pow2(m)).collect();
        for (idx, p) in table.iter().enumerate() {
            if p.is_negative_strict() {
                let terms: Vec<String> = (0..(1usize << m))
                    .map(|mask| {
                        if mask == 0 {
                            "1".to_string()
                        } else {
                            let sign = if (mask & idx).count_ones() % 2 == 0 {
                                '+'
                            } else {
                                '-'
                            };
                            let names: Vec<&str> = (0..m)
                                .filter(|j| mask & (1 << (m - 1 - j)) != 0)
                                .map(|j| scenario.observables()[members[j]].name.as_str())
                                .collect();
                            format!(" {} <{}>", sign, names.join(""))
                        }
                    })
                    .collect();
                return Err(ScenarioError::PositivityViolation {
                    context: scenario.context_key(ctx),
                    outcome: outcome_string(idx, m),
                    m,
                    value: format!("{}", p),
                    inequality: format!("{} >= 0", terms.concat()),
                });
            }
        }
        provided.insert(
            ctx,
            table.into_iter().map(T::clamp_tiny_negative).collect(),
        );
    }
    MarginalModel::from_tables(scenario, provided)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(lists: &[&[&str]]) -> Vec<Vec<String>> {
        lists
            .iter()
            .map(|l| l.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    fn os_scenario() -> MarginalScenario {
        MarginalScenario::from_context_names(&names(&[
            &["X0", "X1"],
            &["X1", "X2"],
            &["X2", "X0"],
        ]))
        .unwrap()
    }

    /// The anti-correlated model on OS: p(+-) = p(-+) = 1/2 in every pair.
    fn os_anticorrelated() -> MarginalModel<BigRational> {
        let scenario = os_scenario();
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let zero = <BigRational as Zero>::zero();
        let mut provided = BTreeMap::new();
        for ctx in 0..scenario.dimension() {
            if scenario.contexts()[ctx].len() == 2 {
                provided.insert(
                    ctx,
                    vec![zero.clone(), half.clone(), half.clone(), zero.clone()],
                );
            }
        }
        MarginalModel::from_tables(scenario, provided).unwrap()
    }

    #[test]
    fn os_scenario_has_three_singletons_and_three_pairs() {
        let s = os_scenario();
        assert_eq!(s.num_observables(), 3);
        assert_eq!(s.dimension(), 6);
        assert_eq!(s.contexts()[..3].iter().filter(|c| c.len() == 1).count(), 3);
        assert_eq!(s.contexts()[3..].iter().filter(|c| c.len() == 2).count(), 3);
        assert_eq!(s.maximal_contexts().len(), 3);
    }

    #[test]
    fn minimal_scenario_is_one_singleton() {
        let s = MarginalScenario::from_context_names(&names(&[&["X0"]])).unwrap();
        assert_eq!(s.dimension(), 1);
        assert_eq!(s.context_key(0), "X0");
    }

    #[test]
    fn chsh_scenario_shape() {
        let s = MarginalScenario::from_context_names(&names(&[
            &["A0", "B0"],
            &["A0", "B1"],
            &["A1", "B0"],
            &["A1", "B1"],
        ]))
        .unwrap();
        assert_eq!(s.num_observables(), 4);
        assert_eq!(s.dimension(), 8);
        assert_eq!(s.maximal_contexts().len(), 4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            MarginalScenario::from_context_names(&[]),
            Err(ScenarioError::EmptyContextList)
        ));
        assert!(matches!(
            MarginalScenario::from_context_names(&names(&[&["X0", "X0"]])),
            Err(ScenarioError::DuplicateObservable(_))
        ));
        assert!(MarginalScenario::from_context_names(&names(&[&["a,b"]])).is_err());
    }

    #[test]
    fn downward_closure_is_idempotent() {
        let s = os_scenario();
        let again = MarginalScenario::from_context_names(
            &(0..s.dimension())
                .map(|c| s.context_names(c))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn hadamard_small_orders() {
        let h1 = hadamard_matrix(1).unwrap();
        assert_eq!(h1, vec![vec![1, 1], vec![1, -1]]);
        let h2 = hadamard_matrix(2).unwrap();
        assert_eq!(
            h2,
            vec![
                vec![1, 1, 1, 1],
                vec![1, -1, 1, -1],
                vec![1, 1, -1, -1],
                vec![1, -1, -1, 1],
            ]
        );
        assert!(hadamard_matrix(0).is_err());
        assert!(hadamard_matrix(MAX_HADAMARD_ORDER + 1).is_err());
    }

    #[test]
    fn hadamard_squares_to_scaled_identity() {
        for m in 1..=10usize {
            let h = hadamard_matrix(m).unwrap();
            let n = 1 << m;
            // spot-check H^2 = 2^m I without materializing the product
            for i in 0..n {
                for j in (0..n).step_by((n / 8).max(1)) {
                    let dot: i64 = (0..n).map(|k| h[i][k] as i64 * h[k][j] as i64).sum();
                    assert_eq!(dot, if i == j { 1i64 << m } else { 0 });
                }
            }
        }
    }

    #[test]
    fn osp_expectations_match_the_anticorrelated_tables() {
        let model = os_anticorrelated();
        let e = probs_to_expectations(&model);
        let vals: Vec<i64> = e
            .entries()
            .iter()
            .map(|x| x.to_integer().to_i64().unwrap())
            .collect();
        assert_eq!(vals, vec![0, 0, 0, -1, -1, -1]);
    }

    #[test]
    fn uniform_model_gives_zero_vector_and_deterministic_gives_ones() {
        let scenario = os_scenario();
        let uniform = MarginalModel::from_context_fn(scenario.clone(), |ctx| {
            let m = ctx.len();
            vec![BigRational::new(BigInt::from(1), BigInt::from(1i64 << m)); 1 << m]
        })
        .unwrap();
        assert!(probs_to_expectations(&uniform)
            .entries()
            .iter()
            .all(|x| x.is_zero()));

        let det = MarginalModel::from_context_fn(scenario, |ctx| {
            let m = ctx.len();
            let mut t = vec![<BigRational as Zero>::zero(); 1 << m];
            t[0] = <BigRational as One>::one();
            t
        })
        .unwrap();
        assert!(probs_to_expectations(&det)
            .entries()
            .iter()
            .all(|x| x.is_one()));
    }

    #[test]
    fn osp_vector_reconstructs_the_tables() {
        let scenario = os_scenario();
        let e = ExpectationVector::new(
            scenario,
            [0, 0, 0, -1, -1, -1]
                .iter()
                .map(|&n| BigRational::from_integer(BigInt::from(n)))
                .collect(),
        )
        .unwrap();
        let model = expectations_to_probs(&e).unwrap();
        assert_eq!(model, os_anticorrelated());
    }

    #[test]
    fn forced_negativity_is_reported() {
        let scenario = MarginalScenario::from_context_names(&names(&[&["X0", "X1"]])).unwrap();
        let one = <BigRational as One>::one();
        let e = ExpectationVector::new(
            scenario,
            vec![one.clone(), one.clone(), -one.clone()],
        )
        .unwrap();
        match expectations_to_probs(&e) {
            Err(ScenarioError::PositivityViolation { outcome, value, .. }) => {
                // 4p(++) = 1 + 1 + 1 - 1 = 2, fine; 4p(--) = 1 - 1 - 1 - 1 = -2 < 0,
                // but the first negative entry hit is p(+-) = wait: scan order is
                // index order, ++ first. 4p(+-) = 1 + <X0> - <X1> - <X0X1> = 2.
                // 4p(-+) = 1 - 1 + 1 - (-1) = 2? Recompute: entries are
                // <X0>=1, <X1>=1, <X0X1>=-1. 4p(-+) = 1 - <X0> + <X1> - <X0X1> = 2.
                // 4p(--) = 1 - 1 - 1 + (-1) = -2 < 0. So the report is for "--".
                assert_eq!(outcome, "--");
                assert_eq!(value, "-1/2");
            }
            other => panic!("expected positivity violation, got {:?}", other),
        }
    }

    #[test]
    fn disturbance_is_detected() {
        let scenario = os_scenario();
        // p(+|X0) = 0.5 from {X0,X1} but 0.6 from {X0,X2}
        let mut provided: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for ctx in 0..scenario.dimension() {
            if scenario.contexts()[ctx].len() != 2 {
                continue;
            }
            let key = scenario.context_key(ctx);
            let t = if key == "X0,X2" {
                vec![0.3, 0.3, 0.2, 0.2]
            } else {
                vec![0.25, 0.25, 0.25, 0.25]
            };
            provided.insert(ctx, t);
        }
        let report = check_no_disturbance(&scenario, &provided);
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .any(|v| v.context == "X0" || v.context == "X2"));

        // single-context input passes vacuously
        let single: BTreeMap<usize, Vec<f64>> =
            [(3, vec![0.25, 0.25, 0.25, 0.25])].into_iter().collect();
        assert!(check_no_disturbance(&scenario, &single).passed());
    }

    #[test]
    fn float_model_roundtrip_and_rationalization() {
        let scenario = os_scenario();
        let mut provided: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for ctx in 0..scenario.dimension() {
            if scenario.contexts()[ctx].len() == 2 {
                provided.insert(ctx, vec![0.1, 0.4, 0.4, 0.1]);
            }
        }
        let model = MarginalModel::from_tables(scenario, provided).unwrap();
        let e = probs_to_expectations(&model);
        let back = expectations_to_probs(&e).unwrap();
        for ctx in 0..model.scenario().dimension() {
            for (a, b) in model.table(ctx).iter().zip(back.table(ctx)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let rat = model.rationalize().unwrap();
        let sum: BigRational = rat.table(3).iter().cloned().sum();
        assert!(sum.is_one());
        for ctx in 0..rat.scenario().dimension() {
            for (a, b) in rat.table(ctx).iter().zip(model.table(ctx)) {
                assert!((Scalar::to_f64(a) - b).abs() < 1e-9);
            }
        }
    }
}
