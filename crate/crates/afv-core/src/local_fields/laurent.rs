//! Laurent polynomials in a symbolic prime `pi` with rational coefficients:
//! the values a formula takes at a generic prime.

use super::rational_primes;
use crate::primes::TooLarge;
use crate::logic_core::Rational;
use num_traits::Zero;
use std::collections::BTreeSet;
use std::fmt;

/// `sum_i coeffs[i] * pi^(low + i)`, trimmed so that the first and last
/// coefficients are nonzero; zero has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Laurent {
    low: i64,
    coeffs: Vec<Rational>,
}

impl Laurent {
    pub fn zero() -> Laurent {
        Laurent { low: 0, coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Laurent {
        Laurent { low: 0, coeffs: vec![c] }.trimmed()
    }

    /// `c * pi^a`.
    pub fn monomial(c: Rational, a: i64) -> Laurent {
        Laurent { low: a, coeffs: vec![c] }.trimmed()
    }

    fn trimmed(mut self) -> Laurent {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        self.coeffs.drain(..lead);
        self.low = if self.coeffs.is_empty() { 0 } else { self.low + lead as i64 };
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest degree and its coefficient; at every prime not dividing any
    /// coefficient this degree is the valuation.
    pub fn lowest(&self) -> Option<(i64, &Rational)> {
        self.coeffs.first().map(|c| (self.low, c))
    }

    /// The value if no power of `pi` occurs.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.coeffs.as_slice() {
            [] => Some(Rational::zero()),
            [c] if self.low == 0 => Some(c.clone()),
            _ => None,
        }
    }

    /// Primes dividing a numerator or denominator of some coefficient.
    pub fn primes(&self) -> Result<BTreeSet<u64>, TooLarge> {
        let mut out = BTreeSet::new();
        for c in &self.coeffs {
            out.extend(rational_primes(c)?);
        }
        Ok(out)
    }

    pub fn add(&self, o: &Laurent) -> Laurent {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let low = self.low.min(o.low);
        let high = (self.low + self.coeffs.len() as i64).max(o.low + o.coeffs.len() as i64);
        let mut coeffs = vec![Rational::zero(); (high - low) as usize];
        for x in [self, o] {
            for (i, c) in x.coeffs.iter().enumerate() {
                coeffs[(x.low - low) as usize + i] += c;
            }
        }
        Laurent { low, coeffs }.trimmed()
    }

    pub fn neg(&self) -> Laurent {
        Laurent { low: self.low, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn mul(&self, o: &Laurent) -> Laurent {
        if self.is_zero() || o.is_zero() {
            return Laurent::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Laurent { low: self.low + o.low, coeffs }.trimmed()
    }

    /// The value at `pi = p`.
    pub fn eval_at(&self, p: u64) -> Rational {
        let pr = Rational::from_integer(p.into());
        self.coeffs.iter().enumerate().fold(Rational::zero(), |acc, (i, c)| acc + c * pr.pow((self.low + i as i64) as i32))
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match self.low + i as i64 {
                0 => c.to_string(),
                d => format!("{c}*pi^{d}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}
