//! Exact convex geometry over marginal models.
//!
//! Everything here runs in arbitrary-precision rational arithmetic — vertex
//! counts and facet identities are exact claims, so no floating point enters
//! this module. The contextuality decision follows the joint-distribution
//! characterization: a model is noncontextual iff a probability distribution
//! over global ±1 assignments reproduces every context table, which is a
//! rational LP feasibility question. Infeasibility is turned into a
//! separating Boole inequality.

pub mod dd;
pub mod simplex;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::scenario::{
    outcome_sign, ExpectationVector, MarginalModel, MarginalScenario, MAX_OBSERVABLES,
};

/// Ambient-dimension cap for the enumeration routines.
pub const MAX_ENUMERATION_DIMENSION: usize = 12;
/// Vertex-count cap for facet enumeration.
pub const MAX_ENUMERATION_VERTICES: usize = 10_000;

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("scenario has {0} observables; enumeration cap is {MAX_OBSERVABLES}")]
    TooManyObservables(usize),
    #[error("ambient dimension {0} exceeds enumeration cap {MAX_ENUMERATION_DIMENSION}")]
    DimensionTooLarge(usize),
    #[error("vertex count {0} exceeds enumeration cap {MAX_ENUMERATION_VERTICES}")]
    TooManyVertices(usize),
    #[error("polytope is unbounded in direction {0:?}")]
    Unbounded(Vec<String>),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("inequality references context {0:?} which the scenario lacks")]
    UnknownContext(String),
}

/// A total ±1 assignment to every observable of a scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalAssignment {
    pub values: Vec<i8>,
}

impl GlobalAssignment {
    /// Assignment number `mask`: bit i set means observable i gets -1.
    pub fn from_mask(mask: usize, k: usize) -> Self {
        GlobalAssignment {
            values: (0..k)
                .map(|i| if mask & (1 << i) != 0 { -1 } else { 1 })
                .collect(),
        }
    }

    /// Image in expectation coordinates: one product per context.
    pub fn expectation_point(&self, scenario: &MarginalScenario) -> Vec<BigRational> {
        scenario
            .contexts()
            .iter()
            .map(|ctx| {
                let prod: i8 = ctx.iter().fold(1, |acc, &i| acc * self.values[i]);
                BigRational::from_integer(BigInt::from(prod))
            })
            .collect()
    }
}

/// V-representation of a polytope in expectation coordinates.
#[derive(Clone, Debug)]
pub struct PolytopeV {
    scenario: MarginalScenario,
    vertices: Vec<Vec<BigRational>>,
}

impl PolytopeV {
    pub fn new(scenario: MarginalScenario, mut vertices: Vec<Vec<BigRational>>) -> Self {
        vertices.sort();
        vertices.dedup();
        PolytopeV { scenario, vertices }
    }

    pub fn scenario(&self) -> &MarginalScenario {
        &self.scenario
    }

    pub fn dimension(&self) -> usize {
        self.scenario.dimension()
    }

    pub fn vertices(&self) -> &[Vec<BigRational>] {
        &self.vertices
    }
}

/// A linear functional on expectation vectors with a noncontextual bound,
/// oriented as `coefficients . model  <=  bound`.
///
/// Stored normalized: integer coefficients with gcd 1 (the unique positive
/// scaling), contexts keyed by their sorted observable-name lists.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BooleInequality {
    coefficients: BTreeMap<Vec<String>, BigRational>,
    bound: BigRational,
}

impl BooleInequality {
    pub fn new(
        coefficients: BTreeMap<Vec<String>, BigRational>,
        bound: BigRational,
    ) -> Self {
        let mut ineq = BooleInequality {
            coefficients: coefficients
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(mut names, c)| {
                    names.sort();
                    (names, c)
                })
                .collect(),
            bound,
        };
        ineq.normalize();
        ineq
    }

    /// Positive rescaling to coprime integer coefficients.
    fn normalize(&mut self) {
        if self.coefficients.is_empty() {
            return;
        }
        let mut lcm = BigInt::one();
        for c in self.coefficients.values() {
            lcm = lcm.lcm(c.denom());
        }
        lcm = lcm.lcm(self.bound.denom());
        let mut gcd = BigInt::zero();
        for c in self.coefficients.values() {
            gcd = gcd.gcd(&(c.numer() * (&lcm / c.denom())));
        }
        if gcd.is_zero() {
            return;
        }
        let scale = BigRational::new(lcm, gcd);
        for c in self.coefficients.values_mut() {
            *c *= &scale;
        }
        self.bound *= &scale;
    }

    pub fn coefficients(&self) -> &BTreeMap<Vec<String>, BigRational> {
        &self.coefficients
    }

    pub fn bound(&self) -> &BigRational {
        &self.bound
    }

    pub fn is_trivial(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Value of the functional on an expectation vector (rational).
    pub fn evaluate(&self, vec: &ExpectationVector<BigRational>) -> BigRational {
        let mut s = BigRational::zero();
        for (names, c) in &self.coefficients {
            let ctx = vec
                .scenario()
                .context_index_by_names(names)
                .expect("inequality context must exist in the scenario");
            s += c * vec.entry(ctx);
        }
        s
    }

    /// Value of the functional on a float expectation vector.
    pub fn evaluate_f64(&self, vec: &ExpectationVector<f64>) -> f64 {
        self.coefficients
            .iter()
            .map(|(names, c)| {
                let ctx = vec
                    .scenario()
                    .context_index_by_names(names)
                    .expect("inequality context must exist in the scenario");
                crate::scenario::Scalar::to_f64(c) * vec.entry(ctx)
            })
            .sum()
    }

    /// Value on a raw coordinate vector in the scenario's context order.
    pub fn evaluate_point(&self, scenario: &MarginalScenario, point: &[BigRational]) -> BigRational {
        let mut s = BigRational::zero();
        for (names, c) in &self.coefficients {
            let ctx = scenario
                .context_index_by_names(names)
                .expect("inequality context must exist in the scenario");
            s += c * &point[ctx];
        }
        s
    }

    /// Algebraic maximum of the left side: sum of |coefficients|.
    pub fn algebraic_maximum(&self) -> BigRational {
        self.coefficients.values().map(|c| c.abs()).sum()
    }

    /// Dense coefficient vector in the scenario's canonical context order.
    pub fn dense(&self, scenario: &MarginalScenario) -> Result<Vec<BigRational>, PolytopeError> {
        let mut v = vec![BigRational::zero(); scenario.dimension()];
        for (names, c) in &self.coefficients {
            let ctx = scenario
                .context_index_by_names(names)
                .ok_or_else(|| PolytopeError::UnknownContext(names.join(",")))?;
            v[ctx] = c.clone();
        }
        Ok(v)
    }

    pub fn from_dense(
        scenario: &MarginalScenario,
        coeffs: &[BigRational],
        bound: BigRational,
    ) -> Self {
        let map: BTreeMap<Vec<String>, BigRational> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(ctx, c)| (scenario.context_names(ctx), c.clone()))
            .collect();
        BooleInequality::new(map, bound)
    }
}

impl fmt::Display for BooleInequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (names, c) in &self.coefficients {
            if c.is_negative() {
                write!(f, " - ")?;
            } else if !first {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            if !mag.is_one() {
                write!(f, "{} ", mag)?;
            }
            write!(f, "<{}>", names.join(""))?;
            first = false;
        }
        write!(f, " <= {}", self.bound)
    }
}

/// Facet classes: instances of the generalized positivity conditions versus
/// genuinely contextuality-detecting (Boole) facets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FacetClass {
    Positivity,
    Boole,
}

#[derive(Clone, Debug)]
pub struct ClassifiedFacet {
    pub inequality: BooleInequality,
    pub class: FacetClass,
}

/// Verdict of the contextuality decision, with its certificate.
#[derive(Clone, Debug)]
pub enum ContextualityVerdict {
    /// A mixture of deterministic global assignments reproducing every
    /// context table exactly.
    Noncontextual {
        witness: Vec<(GlobalAssignment, BigRational)>,
    },
    /// A separating Boole inequality: every noncontextual vertex satisfies
    /// it, the input violates it by `violation` (> 0).
    Contextual {
        certificate: BooleInequality,
        violation: BigRational,
        value: BigRational,
    },
}

/// Vertices of the noncontextual polytope: the image of all 2^k global ±1
/// assignments in expectation coordinates, deduplicated.
pub fn nc_vertices(scenario: &MarginalScenario) -> Result<PolytopeV, PolytopeError> {
    let k = scenario.num_observables();
    if k > MAX_OBSERVABLES {
        return Err(PolytopeError::TooManyObservables(k));
    }
    let vertices: Vec<Vec<BigRational>> = (0..(1usize << k))
        .map(|mask| GlobalAssignment::from_mask(mask, k).expectation_point(scenario))
        .collect();
    Ok(PolytopeV::new(scenario.clone(), vertices))
}

/// All positivity inequalities of a scenario in normalized <= form:
/// for every context C and outcome c, `2^|C| p(c|C) >= 0` rewritten over
/// expectations. Used to classify facets.
pub fn positivity_inequalities(scenario: &MarginalScenario) -> Vec<BooleInequality> {
    let mut out = Vec::new();
    for ctx in 0..scenario.dimension() {
        let members = &scenario.contexts()[ctx];
        let m = members.len();
        for outcome in 0..(1usize << m) {
            let mut coeffs: BTreeMap<Vec<String>, BigRational> = BTreeMap::new();
            for mask in 1usize..(1 << m) {
                let names: Vec<String> = (0..m)
                    .filter(|j| mask & (1 << (m - 1 - j)) != 0)
                    .map(|j| scenario.observables()[members[j]].name.clone())
                    .collect();
                // sign of <S> in 2^m p(c|C) is the product of c's signs on S
                let mut sign = 1i8;
                for j in 0..m {
                    if mask & (1 << (m - 1 - j)) != 0 {
                        sign *= outcome_sign(outcome, m, j);
                    }
                }
                // positivity: 1 + sum sign <S> >= 0  ->  -sum sign <S> <= 1
                coeffs.insert(names, BigRational::from_integer(BigInt::from(-sign)));
            }
            out.push(BooleInequality::new(coeffs, BigRational::one()));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Complete irredundant H-representation of `conv(vertices)` by double
/// description, classified into positivity and Boole facets.
pub fn facet_enumeration(
    polytope: &PolytopeV,
) -> Result<Vec<ClassifiedFacet>, PolytopeError> {
    let dim = polytope.dimension();
    if dim > MAX_ENUMERATION_DIMENSION {
        return Err(PolytopeError::DimensionTooLarge(dim));
    }
    if polytope.vertices().len() > MAX_ENUMERATION_VERTICES {
        return Err(PolytopeError::TooManyVertices(polytope.vertices().len()));
    }
    // valid inequalities a.x <= b form the cone {(b, -a) . (1, v) >= 0};
    // its extreme rays are the facets
    let rows: Vec<Vec<BigRational>> = polytope
        .vertices()
        .iter()
        .map(|v| {
            let mut row = Vec::with_capacity(dim + 1);
            row.push(BigRational::one());
            row.extend(v.iter().cloned());
            row
        })
        .collect();
    let rays = dd::extreme_rays(&rows).map_err(|e| PolytopeError::Degenerate(e.to_string()))?;

    let positivity: Vec<BooleInequality> = positivity_inequalities(polytope.scenario());
    let mut out = Vec::with_capacity(rays.len());
    for ray in rays {
        let bound = BigRational::from_integer(ray[0].clone());
        let coeffs: Vec<BigRational> = ray[1..]
            .iter()
            .map(|a| BigRational::from_integer(-a.clone()))
            .collect();
        let ineq = BooleInequality::from_dense(polytope.scenario(), &coeffs, bound);
        if ineq.is_trivial() {
            continue;
        }
        let class = if positivity.binary_search(&ineq).is_ok() {
            FacetClass::Positivity
        } else {
            FacetClass::Boole
        };
        out.push(ClassifiedFacet {
            inequality: ineq,
            class,
        });
    }
    out.sort_by(|a, b| a.class.cmp(&b.class).then_with(|| a.inequality.cmp(&b.inequality)));
    Ok(out)
}

/// Complete vertex list of `{ x : inequalities }` by double description on
/// the homogenization cone. Unbounded inputs are detected and reported with
/// a recession direction.
pub fn vertex_enumeration(
    scenario: &MarginalScenario,
    inequalities: &[BooleInequality],
) -> Result<PolytopeV, PolytopeError> {
    let dim = scenario.dimension();
    if dim > MAX_ENUMERATION_DIMENSION {
        return Err(PolytopeError::DimensionTooLarge(dim));
    }
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(inequalities.len() + 1);
    for ineq in inequalities {
        let dense = ineq.dense(scenario)?;
        let mut row = Vec::with_capacity(dim + 1);
        row.push(ineq.bound().clone());
        row.extend(dense.iter().map(|c| -c.clone()));
        rows.push(row);
    }
    // homogenization coordinate is nonnegative
    let mut x0 = vec![BigRational::zero(); dim + 1];
    x0[0] = BigRational::one();
    rows.push(x0);

    let rays = dd::extreme_rays(&rows).map_err(|e| PolytopeError::Degenerate(e.to_string()))?;
    let mut vertices = Vec::new();
    for ray in rays {
        if ray[0].is_zero() {
            let dir: Vec<String> = ray[1..].iter().map(|x| x.to_string()).collect();
            return Err(PolytopeError::Unbounded(dir));
        }
        let scale = BigRational::from_integer(ray[0].clone());
        vertices.push(
            ray[1..]
                .iter()
                .map(|x| BigRational::from_integer(x.clone()) / &scale)
                .collect(),
        );
    }
    Ok(PolytopeV::new(scenario.clone(), vertices))
}

/// LP feasibility of an exact rational constraint system; see
/// [`simplex::feasibility`]. Re-exported here because the module contract
/// names it as an operation.
pub use simplex::{feasibility as lp_feasibility, LpOutcome, Relation};

/// Decide whether a rational marginal model is noncontextual (Fine's
/// characterization): search for a distribution over all 2^k global
/// assignments matching every maximal-context table.
///
/// Noncontextual: returns the witness mixture. Contextual: returns a
/// normalized separating Boole inequality, produced by maximizing the
/// violation `a . model - bound` over box-bounded functionals with every
/// noncontextual vertex on the allowed side — a second exact LP seeded by
/// the infeasibility of the first.
pub fn decide_contextuality(
    model: &MarginalModel<BigRational>,
) -> Result<ContextualityVerdict, PolytopeError> {
    let scenario = model.scenario();
    let k = scenario.num_observables();
    if k > MAX_OBSERVABLES {
        return Err(PolytopeError::TooManyObservables(k));
    }
    let n_assign = 1usize << k;

    // marginal-matching equalities over maximal contexts
    let mut a: Vec<Vec<BigRational>> = Vec::new();
    let mut b: Vec<BigRational> = Vec::new();
    for &ctx in scenario.maximal_contexts() {
        let members = &scenario.contexts()[ctx];
        let m = members.len();
        for outcome in 0..(1usize << m) {
            let mut row = vec![BigRational::zero(); n_assign];
            for (mask, slot) in row.iter_mut().enumerate() {
                let matches = (0..m).all(|j| {
                    let assigned: i8 = if mask & (1 << members[j]) != 0 { -1 } else { 1 };
                    assigned == outcome_sign(outcome, m, j)
                });
                if matches {
                    *slot = BigRational::one();
                }
            }
            a.push(row);
            b.push(model.table(ctx)[outcome].clone());
        }
    }
    let lp = simplex::StandardLp {
        a,
        b,
        c: vec![BigRational::zero(); n_assign],
    };
    match simplex::solve(&lp) {
        simplex::LpOutcome::Optimal { x, .. } => {
            let witness = x
                .into_iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(mask, p)| (GlobalAssignment::from_mask(mask, k), p))
                .collect();
            Ok(ContextualityVerdict::Noncontextual { witness })
        }
        simplex::LpOutcome::Infeasible { .. } => {
            let (certificate, value, violation) = separating_certificate(model)?;
            Ok(ContextualityVerdict::Contextual {
                certificate,
                violation,
                value,
            })
        }
        simplex::LpOutcome::Unbounded => unreachable!("feasibility LP cannot be unbounded"),
    }
}

/// Most-violated normalized inequality separating `model` from the
/// noncontextual polytope: maximize `a . m - b` subject to `a . v <= b` for
/// every NC vertex `v` and `|a_S| <= 1`.
fn separating_certificate(
    model: &MarginalModel<BigRational>,
) -> Result<(BooleInequality, BigRational, BigRational), PolytopeError> {
    let scenario = model.scenario();
    let dim = scenario.dimension();
    let m_vec: Vec<BigRational> = crate::scenario::probs_to_expectations(model)
        .entries()
        .to_vec();
    let vertices = nc_vertices(scenario)?;

    // standard-form variables: a+ (dim), a- (dim), b+ , b-, s_v (per vertex),
    // t_S (per box constraint, 2*dim)
    let nv = vertices.vertices().len();
    let cols = 2 * dim + 2 + nv + 2 * dim;
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut rhs: Vec<BigRational> = Vec::new();
    for (vi, v) in vertices.vertices().iter().enumerate() {
        // a.v - b + s_v = 0
        let mut row = vec![BigRational::zero(); cols];
        for s in 0..dim {
            row[s] = v[s].clone();
            row[dim + s] = -v[s].clone();
        }
        row[2 * dim] = -BigRational::one();
        row[2 * dim + 1] = BigRational::one();
        row[2 * dim + 2 + vi] = BigRational::one();
        rows.push(row);
        rhs.push(BigRational::zero());
    }
    for s in 0..dim {
        // a_S + t1 = 1 ; -a_S + t2 = 1
        let mut row1 = vec![BigRational::zero(); cols];
        row1[s] = BigRational::one();
        row1[dim + s] = -BigRational::one();
        row1[2 * dim + 2 + nv + 2 * s] = BigRational::one();
        rows.push(row1);
        rhs.push(BigRational::one());
        let mut row2 = vec![BigRational::zero(); cols];
        row2[s] = -BigRational::one();
        row2[dim + s] = BigRational::one();
        row2[2 * dim + 2 + nv + 2 * s + 1] = BigRational::one();
        rows.push(row2);
        rhs.push(BigRational::one());
    }
    // minimize b - a.m
    let mut c = vec![BigRational::zero(); cols];
    for s in 0..dim {
        c[s] = -m_vec[s].clone();
        c[dim + s] = m_vec[s].clone();
    }
    c[2 * dim] = BigRational::one();
    c[2 * dim + 1] = -BigRational::one();

    let lp = simplex::StandardLp { a: rows, b: rhs, c };
    match simplex::solve(&lp) {
        simplex::LpOutcome::Optimal { x, objective } => {
            debug_assert!(objective.is_negative(), "model must be outside the polytope");
            let coeffs: Vec<BigRational> =
                (0..dim).map(|s| &x[s] - &x[dim + s]).collect();
            let bound = &x[2 * dim] - &x[2 * dim + 1];
            let ineq = BooleInequality::from_dense(scenario, &coeffs, bound);
            // violation in the normalized scaling
            let value = {
                let mut s = BigRational::zero();
                for (names, cf) in ineq.coefficients() {
                    let ctx = scenario.context_index_by_names(names).unwrap();
                    s += cf * &m_vec[ctx];
                }
                s
            };
            let violation = &value - ineq.bound();
            Ok((ineq, value, violation))
        }
        _ => unreachable!("certificate LP is feasible (a=0) and bounded (box)"),
    }
}
