//! The eleven exponent inequalities, compared exactly.
//!
//! Every side is the exponent of λ_q of a pure power of a, so comparing
//! exponents is the same as comparing the quantities once λ_q > 1.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

use super::params::ParameterSet;

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// One reduced inequality LHS < RHS.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub id: &'static str,
    pub lhs: BigRational,
    pub rhs: BigRational,
}

impl Entry {
    pub fn slack(&self) -> BigRational {
        &self.rhs - &self.lhs
    }

    pub fn holds(&self) -> bool {
        self.lhs < self.rhs
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.holds() { "PASS" } else { "FAIL" };
        write!(f, "({}) lhs={} rhs={} slack={} {verdict}", self.id, self.lhs, self.rhs, self.slack())
    }
}

/// The Γ(1 − b) term of the Nash and transport bounds: halved in two
/// dimensions, where a pipe only gains r^{1/2} from L² to L¹.
fn gain(p: &ParameterSet) -> BigRational {
    let g = &p.big_gamma * (int(1) - p.b_rat());
    if p.dim == 2 {
        g / int(2)
    } else {
        g
    }
}

/// All reduced inequalities with β in place of the exponent of δ.
pub fn entries_at(p: &ParameterSet, beta: &BigRational) -> Vec<Entry> {
    let b = p.b_rat();
    let b2 = &b * &b;
    let gm = &p.big_gamma;
    let ga = &p.gamma;
    let n = int(p.n_dec as i64);
    let d = int(p.d as i64);
    let one = BigRational::one();
    let two = int(2);
    let e = |id, lhs, rhs| Entry { id, lhs, rhs };
    let rhs_main = |g: &BigRational| -(&two * beta * &b2) + (&two - g) * &b2;
    vec![
        e("1", int(-16 + 10), -(&two * beta * &b2) + &two * &b2),
        e("2", int(-8), &two * &b2 - &two * beta * &b2),
        e("3", int(96), b.clone()),
        e("4", int(64) * (&n + int(4)), &b * &n * (&one - gm - gm / &b)),
        e("5", gm * (&b - &one), b.clone()),
        e("6", -(&two * beta * &b) + (&one + ga) * &b + int(8), rhs_main(ga)),
        e("7", -(&two * beta * &b) + (&two + ga) * &b - int(8), rhs_main(ga)),
        e("7'", -(&two * beta * &b) + &two * &b + gm * (&one - &b) + ga * &b, rhs_main(ga)),
        e("8", &d * (int(40) - &b + gm * (&b - &one)), -&b + gm * (&b - &one) - int(32)),
        e("9", &d * (int(40) - &b) + int(160), -b.clone()),
        e("10", int(232) - &b + gm * (&b - &one), rhs_main(&(&two * ga))),
        e("11", int(264) + gain(p), rhs_main(ga)),
    ]
}

/// The conditions fixing γ once b and Γ are chosen.
pub fn gamma_conditions(p: &ParameterSet, gamma: &BigRational) -> Vec<Entry> {
    let b = p.b_rat();
    let b2 = &b * &b;
    let gm = &p.big_gamma;
    let one = BigRational::one();
    let e = |id, lhs, rhs| Entry { id, lhs, rhs };
    vec![
        e("i", int(-2) * &b + (&one + gamma) * &b + int(8), -(gamma * &b2)),
        e("ii", gamma * &b - int(8), -(gamma * &b2)),
        e("iii", int(232) - &b + gm * (&b - &one), -(int(2) * gamma * &b2)),
        e("iv", int(264) + gain(p), -(gamma * &b2)),
        e("v", gm * (&one - &b) + gamma * &b, -(gamma * &b2)),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerReport {
    /// Evaluated with the auxiliary exponent β' = 1.
    pub at_one: Vec<Entry>,
    /// Evaluated with the supplied β.
    pub at_beta: Vec<Entry>,
    pub beta: BigRational,
    /// Smallest slack at β' = 1.
    pub min_slack: BigRational,
    /// Twice the largest rate at which a slack falls as β grows; every
    /// inequality passing at β' = 1 then passes on (1, 1 + min_slack/K].
    pub sensitivity: BigRational,
    /// 1 + min_slack/K and the verdict there.
    pub endpoint: BigRational,
    pub endpoint_holds: bool,
}

impl LedgerReport {
    pub fn passed(&self) -> bool {
        self.at_beta.iter().all(Entry::holds)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.at_beta.iter().filter(|e| !e.holds()).map(|e| e.id).collect()
    }
}

impl fmt::Display for LedgerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "beta = {}", self.beta)?;
        for e in &self.at_beta {
            writeln!(f, "{e}")?;
        }
        writeln!(f, "beta' = 1 minimum slack {} sensitivity {}", self.min_slack, self.sensitivity)?;
        let verdict = if self.endpoint_holds { "PASS" } else { "FAIL" };
        write!(f, "continuity endpoint beta = {} {verdict}", self.endpoint)
    }
}

/// Slack lost per unit increase of β, for each inequality. All sides are
/// affine in β, so two evaluations give the rate exactly.
pub fn beta_rates(p: &ParameterSet) -> Vec<BigRational> {
    let s1 = entries_at(p, &int(1));
    let s2 = entries_at(p, &int(2));
    s1.iter().zip(&s2).map(|(a, b)| a.slack() - b.slack()).collect()
}

pub fn check_inequalities(p: &ParameterSet) -> LedgerReport {
    let at_one = entries_at(p, &int(1));
    let at_beta = entries_at(p, &p.beta);
    let min_slack = at_one.iter().map(Entry::slack).min().expect("nonempty");
    let rate = beta_rates(p).into_iter().max().expect("nonempty");
    let sensitivity = if rate.is_positive() { int(2) * rate } else { BigRational::one() };
    let endpoint = if min_slack.is_positive() { int(1) + &min_slack / &sensitivity } else { int(1) };
    let endpoint_holds = min_slack.is_positive() && entries_at(p, &endpoint).iter().all(Entry::holds);
    LedgerReport { at_one, at_beta, beta: p.beta.clone(), min_slack, sensitivity, endpoint, endpoint_holds }
}

/// Exponents of the scales at level q, each as coefficient·b^q in base a.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleExponent {
    pub name: &'static str,
    pub coefficient: BigRational,
    pub q: u32,
}

impl ScaleExponent {
    /// log_a of the scale.
    pub fn log_a(&self, b: u64) -> BigRational {
        &self.coefficient * BigRational::from_integer(num::pow(BigInt::from(b), self.q as usize))
    }
}

impl fmt::Display for ScaleExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = a^({} b^{})", self.name, self.coefficient, self.q)
    }
}

/// λ_q = a^{b^q}, δ_q = λ_q^{−2β}, ℓ = λ_q^{−8}, τ_q = ℓ³,
/// r_q = (λ_q/λ_{q+1})^Γ and δ'_q = λ_q^{−2}.
pub fn derive_scales(p: &ParameterSet, q: u32) -> Vec<ScaleExponent> {
    let b = p.b_rat();
    let s = |name, coefficient| ScaleExponent { name, coefficient, q };
    vec![
        s("lambda_q", int(1)),
        s("delta_q", -(int(2) * &p.beta)),
        s("ell", int(-8)),
        s("tau_q", int(-24)),
        s("r_q", &p.big_gamma * (int(1) - &b)),
        s("delta'_q", int(-2)),
        s("lambda_q+1", b.clone()),
        s("delta_q+1", -(int(2) * &p.beta * &b)),
    ]
}

/// Whether some inequality is an exact tie.
pub fn has_ties(entries: &[Entry]) -> bool {
    entries.iter().any(|e| e.slack().is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn base() -> ParameterSet {
        ParameterSet {
            a: 1024.into(),
            b: 601,
            beta: r(1_000_001, 1_000_000),
            big_gamma: r(1, 2),
            gamma: r(1, 1 << 16),
            n_dec: 2,
            d: 2,
            c_r: r(1, 10),
            dim: 3,
        }
    }

    fn find<'a>(es: &'a [Entry], id: &str) -> &'a Entry {
        es.iter().find(|e| e.id == id).unwrap()
    }

    #[test]
    fn named_examples() {
        let p = base();
        let rep = check_inequalities(&p);
        assert_eq!(find(&rep.at_beta, "3").rhs, r(601, 1));
        assert!(find(&rep.at_beta, "3").holds());
        assert_eq!(find(&rep.at_beta, "5").lhs, r(300, 1));
        assert!(find(&rep.at_beta, "5").holds());
        let four = find(&rep.at_beta, "4");
        assert_eq!((four.lhs.clone(), four.rhs.clone()), (r(384, 1), r(600, 1)));
    }

    #[test]
    fn one_decoupling_level_is_a_near_miss() {
        let mut p = base();
        p.n_dec = 1;
        let rep = check_inequalities(&p);
        let four = find(&rep.at_beta, "4");
        assert_eq!((four.lhs.clone(), four.rhs.clone()), (r(320, 1), r(300, 1)));
        assert_eq!(rep.failures(), vec!["4"]);
    }

    #[test]
    fn beta_two_breaks_six() {
        let mut p = base();
        p.beta = r(2, 1);
        let six = find(&check_inequalities(&p).at_beta, "6").clone();
        let gamma = r(1, 1 << 16);
        assert_eq!(six.lhs, r(-1795, 1) + &gamma * r(601, 1));
        assert_eq!(six.rhs, r(-722402, 1) - gamma * r(361201, 1));
        assert!(!six.holds());
    }

    #[test]
    fn slacks_fall_with_beta() {
        let p = base();
        let betas = [r(1, 1), r(1_000_001, 1_000_000), r(1001, 1000), r(11, 10), r(2, 1)];
        for id in ["6", "7", "7'", "10", "11"] {
            let s: Vec<BigRational> = betas.iter().map(|b| find(&entries_at(&p, b), id).slack()).collect();
            assert!(s.windows(2).all(|w| w[1] < w[0]), "({id}) {s:?}");
        }
    }

    #[test]
    fn continuity_endpoint_passes() {
        let rep = check_inequalities(&base());
        assert!(rep.at_one.iter().all(Entry::holds));
        assert!(rep.min_slack.is_positive());
        assert!(rep.endpoint_holds);
        assert!(!has_ties(&rep.at_one));
    }

    #[test]
    fn report_is_deterministic() {
        let a = check_inequalities(&base());
        let b = check_inequalities(&base());
        assert_eq!(a, b);
        assert_eq!(a.to_string(), b.to_string());
        assert_eq!(a.to_string().lines().filter(|l| l.starts_with('(')).count(), 12);
    }

    #[test]
    fn scale_table() {
        let p = base();
        let t = derive_scales(&p, 0);
        let get = |n: &str| t.iter().find(|s| s.name == n).unwrap();
        assert_eq!(get("lambda_q").log_a(p.b), r(1, 1));
        assert_eq!(get("ell").log_a(p.b), r(-8, 1));
        assert_eq!(get("tau_q").coefficient, r(-24, 1));
        assert_eq!(get("r_q").coefficient, r(-300, 1));
        let t2 = derive_scales(&p, 2);
        assert_eq!(t2[0].log_a(p.b), r(361201, 1));
    }

    #[test]
    fn two_dimensions_need_a_larger_base() {
        let mut p = base();
        p.dim = 2;
        assert!(check_inequalities(&p).failures().contains(&"11"));
    }

    proptest! {
        #[test]
        fn three_matches_integer_comparison(b in 2u64..5000) {
            let mut p = base();
            p.b = b;
            prop_assert_eq!(find(&entries_at(&p, &p.beta), "3").holds(), b > 96);
        }

        #[test]
        fn slack_is_affine_in_beta(num in 1i64..1000, den in 1i64..1000) {
            let p = base();
            let beta = r(1, 1) + r(num, den);
            let rates = beta_rates(&p);
            let at_one = entries_at(&p, &r(1, 1));
            let at_beta = entries_at(&p, &beta);
            for ((a, b), k) in at_one.iter().zip(&at_beta).zip(&rates) {
                prop_assert_eq!(a.slack() - b.slack(), k * r(num, den));
            }
        }
    }
}
