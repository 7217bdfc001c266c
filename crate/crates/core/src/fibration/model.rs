use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::point::ProjectivePoint;
use super::symbols::{hilbert_symbol_int, is_perfect_square, Place};
use crate::arith::{factorize, gcd_u64, PrimeWindow};
use crate::error::{Error, Result};
use crate::poly::IntegerForm;

/// When a component of the fibre over a point is non-split at `p`.
///
/// The rules are explicit Chebotarev conditions with known densities: a
/// quadratic-residue rule fires at the primes where `a` is a non-residue,
/// a residue-class rule fires at the primes lying in the listed classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SplitRule {
    AlwaysNonsplit,
    QuadraticResidue { a: i64 },
    ResidueClasses { modulus: u64, classes: Vec<u64> },
}

impl SplitRule {
    fn validate(&self) -> Result<()> {
        match self {
            SplitRule::AlwaysNonsplit => Ok(()),
            SplitRule::QuadraticResidue { a } => {
                if *a == 0 || is_perfect_square(*a) {
                    Err(Error::invalid(format!(
                        "quadratic-residue rule needs a nonzero non-square, got {a}"
                    )))
                } else {
                    Ok(())
                }
            }
            SplitRule::ResidueClasses { modulus, classes } => {
                if *modulus < 2 {
                    return Err(Error::invalid("residue-class modulus must be >= 2"));
                }
                let set: BTreeSet<u64> = classes.iter().copied().collect();
                if set.len() != classes.len() {
                    return Err(Error::invalid("repeated residue class"));
                }
                if classes.iter().any(|&c| c >= *modulus || gcd_u64(c, *modulus) != 1) {
                    return Err(Error::invalid(format!(
                        "residue classes must be units modulo {modulus}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Whether the rule fires (component non-split) at the good prime `p`.
    pub fn fires_at(&self, p: u128) -> bool {
        match self {
            SplitRule::AlwaysNonsplit => true,
            SplitRule::QuadraticResidue { a } => super::symbols::jacobi(*a as i128, p) == -1,
            SplitRule::ResidueClasses { modulus, classes } => {
                let r = (p % *modulus as u128) as u64;
                classes.contains(&r)
            }
        }
    }

    /// Density of primes at which the rule fires, `1 - delta`.
    pub fn firing_density(&self) -> Ratio<u64> {
        match self {
            SplitRule::AlwaysNonsplit => Ratio::from_integer(1),
            SplitRule::QuadraticResidue { .. } => Ratio::new(1, 2),
            SplitRule::ResidueClasses { modulus, classes } => {
                Ratio::new(classes.len() as u64, euler_phi(*modulus))
            }
        }
    }

    /// The splitting density `delta` of the component.
    pub fn split_density(&self) -> Ratio<u64> {
        Ratio::from_integer(1) - self.firing_density()
    }

    fn data_primes(&self) -> Result<Vec<u64>> {
        let m = match self {
            SplitRule::AlwaysNonsplit => return Ok(Vec::new()),
            SplitRule::QuadraticResidue { a } => 2 * a.unsigned_abs() as u128,
            SplitRule::ResidueClasses { modulus, .. } => *modulus as u128,
        };
        Ok(factorize(m)?.primes().map(|p| p as u64).collect())
    }
}

fn euler_phi(m: u64) -> u64 {
    let f = factorize(m as u128).expect("nonzero modulus");
    f.factors
        .iter()
        .fold(m, |acc, &(p, _)| acc / p as u64 * (p as u64 - 1))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub form: IntegerForm,
    pub rule: SplitRule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Fibres are modelled by the splitting rules alone.
    Coin,
    /// Conics `z^2 = a(x) u^2 + b(x) v^2` over `P^1`.
    ConicBundle { a: IntegerForm, b: IntegerForm },
}

/// A computable stand-in for a fibration over `P^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct FibrationModel {
    n: usize,
    components: Vec<Component>,
    kind: ModelKind,
    bad_primes: BTreeSet<u64>,
}

/// JSON shape of a model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKindTag,
    pub n: usize,
    pub components: Vec<Component>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<IntegerForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<IntegerForm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKindTag {
    Coin,
    ConicBundle,
}

impl TryFrom<ModelSpec> for FibrationModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        match spec.kind {
            ModelKindTag::Coin => {
                if spec.a.is_some() || spec.b.is_some() {
                    return Err(Error::invalid("coin models take no auxiliary conic forms"));
                }
                FibrationModel::coin(spec.n, spec.components)
            }
            ModelKindTag::ConicBundle => {
                let a = spec.a.ok_or_else(|| Error::invalid("conic bundle needs form `a`"))?;
                let b = spec.b.ok_or_else(|| Error::invalid("conic bundle needs form `b`"))?;
                if spec.n != 1 {
                    return Err(Error::invalid("conic bundles live over P^1 (n = 1)"));
                }
                FibrationModel::conic_bundle(spec.components, a, b)
            }
        }
    }
}

impl From<FibrationModel> for ModelSpec {
    fn from(m: FibrationModel) -> Self {
        let (kind, a, b) = match m.kind {
            ModelKind::Coin => (ModelKindTag::Coin, None, None),
            ModelKind::ConicBundle { a, b } => (ModelKindTag::ConicBundle, Some(a), Some(b)),
        };
        ModelSpec {
            kind,
            n: m.n,
            components: m.components,
            a,
            b,
        }
    }
}

impl FibrationModel {
    pub fn coin(n: usize, components: Vec<Component>) -> Result<Self> {
        Self::build(n, components, ModelKind::Coin)
    }

    pub fn conic_bundle(components: Vec<Component>, a: IntegerForm, b: IntegerForm) -> Result<Self> {
        for f in [&a, &b] {
            if f.nvars() != 2 || !f.is_homogeneous() {
                return Err(Error::invalid("conic forms must be homogeneous binary forms"));
            }
        }
        Self::build(1, components, ModelKind::ConicBundle { a, b })
    }

    /// Single component `x0` that is non-split at every prime.
    pub fn always_nonsplit_line(n: usize) -> Result<Self> {
        Self::coin(
            n,
            vec![Component {
                form: IntegerForm::variable(n + 1, 0)?,
                rule: SplitRule::AlwaysNonsplit,
            }],
        )
    }

    fn build(n: usize, components: Vec<Component>, kind: ModelKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("the base must be P^n with n >= 1"));
        }
        if components.is_empty() {
            return Err(Error::invalid("a model needs at least one component"));
        }
        for c in &components {
            if c.form.nvars() != n + 1 {
                return Err(Error::invalid(format!(
                    "component form {} has {} variables, expected {}",
                    c.form,
                    c.form.nvars(),
                    n + 1
                )));
            }
            if !c.form.is_homogeneous() || c.form.degree() == 0 {
                return Err(Error::invalid(format!(
                    "component form {} must be homogeneous of positive degree",
                    c.form
                )));
            }
            c.rule.validate()?;
        }
        let mut model = Self {
            n,
            components,
            kind,
            bad_primes: BTreeSet::new(),
        };
        if model.delta_exact() == Ratio::from_integer(0) {
            return Err(Error::invalid("the model has Delta = 0"));
        }
        model.bad_primes = model.compute_bad_primes()?;
        Ok(model)
    }

    /// Primes where the oracles are not trusted: 2, primes dividing rule
    /// data, primes dividing the content or the pure-power (leading)
    /// coefficients of any form, and primes up to the total degree.
    fn compute_bad_primes(&self) -> Result<BTreeSet<u64>> {
        let mut bad = BTreeSet::from([2u64]);
        let mut forms: Vec<&IntegerForm> = self.components.iter().map(|c| &c.form).collect();
        if let ModelKind::ConicBundle { a, b } = &self.kind {
            forms.push(a);
            forms.push(b);
        }
        for c in &self.components {
            bad.extend(c.rule.data_primes()?);
        }
        let total_degree: u32 = forms.iter().map(|f| f.degree()).sum();
        bad.extend(crate::arith::primes_up_to(total_degree as u64));
        for f in forms {
            let content = f
                .terms()
                .iter()
                .fold(0u64, |g, t| gcd_u64(g, t.coeff.unsigned_abs()));
            let mut data = vec![content];
            data.extend((0..f.nvars()).map(|i| f.pure_power_coefficient(i).unsigned_abs()));
            for m in data.into_iter().filter(|&m| m > 1) {
                bad.extend(factorize(m as u128)?.primes().map(|p| p as u64));
            }
        }
        Ok(bad)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn is_coin(&self) -> bool {
        matches!(self.kind, ModelKind::Coin)
    }

    pub fn bad_primes(&self) -> &BTreeSet<u64> {
        &self.bad_primes
    }

    /// The bad-prime bound `A`: the largest bad prime.
    pub fn bad_bound(&self) -> u64 {
        *self.bad_primes.iter().next_back().unwrap()
    }

    pub fn is_bad(&self, p: u128) -> bool {
        p <= u64::MAX as u128 && self.bad_primes.contains(&(p as u64))
    }

    /// `Delta = sum_i (1 - delta_i)` as an exact fraction.
    pub fn delta_exact(&self) -> Ratio<u64> {
        self.components
            .iter()
            .map(|c| c.rule.firing_density())
            .fold(Ratio::from_integer(0), |a, b| a + b)
    }

    pub fn delta_invariant(&self) -> f64 {
        let d = self.delta_exact();
        *d.numer() as f64 / *d.denom() as f64
    }

    /// Total degree of `F = prod_i form_i` (plus the conic forms).
    pub fn product_degree(&self) -> u32 {
        let mut d: u32 = self.components.iter().map(|c| c.form.degree()).sum();
        if let ModelKind::ConicBundle { a, b } = &self.kind {
            d += a.degree() + b.degree();
        }
        d
    }

    fn check_point(&self, x: &[i64]) -> Result<()> {
        if x.len() != self.n + 1 {
            return Err(Error::invalid(format!(
                "point has {} coordinates, model lives on P^{}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Whether the point lies on the discarded locus `prod_i form_i(x) = 0`
    /// (including the conic forms for conic bundles).
    pub fn is_degenerate(&self, x: &[i64]) -> Result<bool> {
        self.check_point(x)?;
        for c in &self.components {
            if c.form.evaluate(x)? == 0 {
                return Ok(true);
            }
        }
        if let ModelKind::ConicBundle { a, b } = &self.kind {
            if a.evaluate(x)? == 0 || b.evaluate(x)? == 0 {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// The local indicator: 1 when the fibre over `x` has no `Q_p`-point.
    pub fn theta_p(&self, x: &ProjectivePoint, p: u64) -> Result<u8> {
        self.theta_p_coords(x.coords(), p as u128)
    }

    pub(crate) fn theta_p_coords(&self, x: &[i64], p: u128) -> Result<u8> {
        self.check_point(x)?;
        if self.is_bad(p) {
            return Err(Error::BadPrime {
                p: p as u64,
                bound: self.bad_bound(),
            });
        }
        match &self.kind {
            ModelKind::Coin => {
                for c in &self.components {
                    if c.rule.fires_at(p) && c.form.evaluate(x)?.unsigned_abs() % p == 0 {
                        return Ok(1);
                    }
                }
                Ok(0)
            }
            ModelKind::ConicBundle { a, b } => {
                let (av, bv) = (a.evaluate(x)?, b.evaluate(x)?);
                if av == 0 || bv == 0 {
                    return Err(Error::invalid("the fibre over this point is degenerate"));
                }
                Ok((hilbert_symbol_int(av, bv, Place::Prime(p))? == -1) as u8)
            }
        }
    }

    /// All good primes `p` with `theta_p(x) = 1`, ascending. Found by
    /// factoring the relevant form values once.
    pub fn theta_primes(&self, x: &[i64]) -> Result<Vec<u128>> {
        self.check_point(x)?;
        let mut out = BTreeSet::new();
        match &self.kind {
            ModelKind::Coin => {
                for c in &self.components {
                    let v = c.form.evaluate(x)?;
                    if v == 0 {
                        return Err(Error::invalid("point lies on a component"));
                    }
                    for p in factorize(v.unsigned_abs())?.primes() {
                        if !self.is_bad(p) && c.rule.fires_at(p) {
                            out.insert(p);
                        }
                    }
                }
            }
            ModelKind::ConicBundle { a, b } => {
                let (av, bv) = (a.evaluate(x)?, b.evaluate(x)?);
                if av == 0 || bv == 0 {
                    return Err(Error::invalid("the fibre over this point is degenerate"));
                }
                let mut candidates = BTreeSet::new();
                candidates.extend(factorize(av.unsigned_abs())?.primes());
                candidates.extend(factorize(bv.unsigned_abs())?.primes());
                for p in candidates {
                    if !self.is_bad(p) && hilbert_symbol_int(av, bv, Place::Prime(p))? == -1 {
                        out.insert(p);
                    }
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// `omega_f` restricted to a window: the number of primes of the window
    /// at which the fibre over `x` is locally insoluble.
    pub fn omega_f(&self, x: &ProjectivePoint, window: &PrimeWindow) -> Result<u32> {
        self.check_window(window)?;
        if window.is_empty() {
            return Ok(0);
        }
        Ok(count_in_window(&self.theta_primes(x.coords())?, window))
    }

    pub fn check_window(&self, window: &PrimeWindow) -> Result<()> {
        if window.lo < self.bad_bound() {
            return Err(Error::invalid(format!(
                "window lower end {} is below the bad-prime bound {}",
                window.lo,
                self.bad_bound()
            )));
        }
        Ok(())
    }

    /// The window `(A, infinity)` over which `omega_f` is untruncated.
    pub fn full_window(&self) -> PrimeWindow {
        PrimeWindow::above(self.bad_bound())
    }
}

pub(crate) fn count_in_window(primes: &[u128], w: &PrimeWindow) -> u32 {
    primes
        .iter()
        .filter(|&&p| p > w.lo as u128 && (!w.is_bounded() || p <= w.hi as u128))
        .count() as u32
}
