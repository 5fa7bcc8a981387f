//! Small-integer prime utilities: primality, sieving and factoring.

use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `b^e mod m`.
pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// All primes `<= n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64).collect()
}

/// The first `k` primes.
pub fn first_primes(k: usize) -> Vec<u64> {
    let mut bound = 16u64;
    loop {
        let ps = primes_up_to(bound);
        if ps.len() >= k {
            return ps[..k].to_vec();
        }
        bound *= 2;
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn pollard_rho(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// Distinct prime factors of `n`, ascending.
pub fn prime_factors_u64(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m < 2 {
            continue;
        }
        let mut m = m;
        for p in [2u64, 3, 5, 7, 11, 13] {
            while m % p == 0 {
                out.push(p);
                m /= p;
            }
        }
        if m < 2 {
            continue;
        }
        if is_prime(m) {
            out.push(m);
            continue;
        }
        let d = pollard_rho(m);
        stack.push(d);
        stack.push(m / d);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// A rational prime, checked on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0} is not prime")]
pub struct NotPrime(pub u64);

impl Prime {
    pub fn new(p: u64) -> Result<Prime, NotPrime> {
        if is_prime(p) { Ok(Prime(p)) } else { Err(NotPrime(p)) }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for Prime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot factor {0}: exceeds 64 bits")]
pub struct TooLarge(pub String);

/// Distinct prime factors of `|n|`; `0` has none.
pub fn prime_factors(n: &BigInt) -> Result<Vec<u64>, TooLarge> {
    if n.is_zero() {
        return Ok(Vec::new());
    }
    let mag = if n.sign() == Sign::Minus { -n } else { n.clone() };
    match mag.to_u64() {
        Some(m) => Ok(prime_factors_u64(m)),
        None => {
            // Strip small factors before giving up.
            let mut m = mag;
            let mut out = Vec::new();
            for p in primes_up_to(1 << 16) {
                let bp = BigInt::from(p);
                if (&m % &bp).is_zero() {
                    out.push(p);
                    while (&m % &bp).is_zero() {
                        m /= &bp;
                    }
                }
            }
            match m.to_u64() {
                Some(rest) => {
                    out.extend(prime_factors_u64(rest));
                    out.sort_unstable();
                    out.dedup();
                    Ok(out)
                }
                None => Err(TooLarge(n.to_string())),
            }
        }
    }
}
