//! Integer factorization sized for the moduli this crate constructs.
//!
//! The moduli come from smooth decompositions (`2^a - 1`, `3^b - 1`), so
//! their factors are small or known; trial division plus Brent's cycle
//! variant of Pollard rho covers them comfortably. Arithmetic is 128-bit
//! capable throughout so moduli a little above 2^64 are handled exactly.

use super::ModError;
use std::collections::BTreeMap;

/// `(a * b) mod m` for full 128-bit operands.
///
/// Uses the native product when it cannot overflow, otherwise falls back to
/// shift-and-add on 128-bit words.
pub fn mulmod_u128(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(m > 0);
    let (a, b) = (a % m, b % m);
    if let Some(p) = a.checked_mul(b) {
        return p % m;
    }
    // double-and-add; m < 2^127 keeps every intermediate sum in range
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut acc: u128 = 0;
    while a > 0 {
        if a & 1 == 1 {
            acc += b;
            if acc >= m {
                acc -= m;
            }
        }
        a >>= 1;
        b <<= 1;
        if b >= m {
            b -= m;
        }
    }
    acc
}

/// `base^exp mod m` on 128-bit words.
pub fn powmod_u128(mut base: u128, mut exp: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let mut acc: u128 = 1;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod_u128(acc, base, m);
        }
        base = mulmod_u128(base, base, m);
        exp >>= 1;
    }
    acc
}

fn miller_rabin_round(n: u128, a: u128, d: u128, s: u32) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let mut x = powmod_u128(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mulmod_u128(x, x, n);
        if x == n - 1 {
            return true;
        }
        if x == 1 {
            return false;
        }
    }
    false
}

/// Primality test.
///
/// Deterministic for `n < 2^64` via the standard 12-base Miller–Rabin set;
/// above that, a fixed battery of 24 bases (the same 12 plus a dozen large
/// pseudo-random ones) is used, which is far beyond the certainty needed for
/// moduli of the size this crate builds.
pub fn is_prime_u128(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    const SMALL: [u128; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    const EXTRA: [u128; 12] = [
        0x9e3779b97f4a7c15,
        0xbf58476d1ce4e5b9,
        0x94d049bb133111eb,
        0xd6e8feb86659fd93,
        0xa0761d6478bd642f,
        0xe7037ed1a0b428db,
        0x8ebc6af09c88c6e3,
        0x589965cc75374cc3,
        0x1d8e4e27c47d124f,
        0xeb44accab455d165,
        0x6eed0e9da4d94a4f,
        0x2f72b4215a3d8caf,
    ];
    for &a in SMALL.iter() {
        if !miller_rabin_round(n, a, d, s) {
            return false;
        }
    }
    if n >= 1u128 << 64 {
        for &a in EXTRA.iter() {
            if !miller_rabin_round(n, a, d, s) {
                return false;
            }
        }
    }
    true
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Brent's variant of Pollard rho. Returns a nontrivial factor of composite
/// odd `n`, or `None` if every seed stalls (callers treat that as a
/// factorization failure rather than looping forever).
fn pollard_brent(n: u128) -> Option<u128> {
    for seed in 1u128..40 {
        let c = seed;
        let mut y: u128 = seed.wrapping_mul(0x9e37_79b9) % n;
        let (mut x, mut ys);
        let mut g: u128 = 1;
        let mut r: u128 = 1;
        let mut q: u128 = 1;
        let m_batch: u128 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = (mulmod_u128(y, y, n) + c) % n;
            }
            let mut k: u128 = 0;
            ys = y;
            while k < r && g == 1 {
                ys = y;
                let lim = std::cmp::min(m_batch, r - k);
                for _ in 0..lim {
                    y = (mulmod_u128(y, y, n) + c) % n;
                    q = mulmod_u128(q, x.abs_diff(y), n);
                }
                g = gcd_u128(q, n);
                k += m_batch;
            }
            r <<= 1;
            if r > 1 << 24 {
                break;
            }
            if g == n {
                // backtrack one step at a time
                loop {
                    ys = (mulmod_u128(ys, ys, n) + c) % n;
                    g = gcd_u128(x.abs_diff(ys), n);
                    if g > 1 {
                        break;
                    }
                }
            }
            if g > 1 && g < n {
                return Some(g);
            }
        }
        if g > 1 && g < n {
            return Some(g);
        }
    }
    None
}

/// Full factorization of `n ≥ 1` as a map `prime -> exponent`.
pub fn factorize(n: u128) -> Result<BTreeMap<u128, u32>, ModError> {
    let mut out = BTreeMap::new();
    if n <= 1 {
        return Ok(out);
    }
    let mut n = n;
    for p in [2u128, 3, 5] {
        while n % p == 0 {
            *out.entry(p).or_insert(0) += 1;
            n /= p;
        }
    }
    // trial-divide with a 2,3,5 wheel
    let mut d: u128 = 7;
    const WHEEL: [u128; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut w = 0usize;
    while d <= 1 << 20 && d * d <= n {
        while n % d == 0 {
            *out.entry(d).or_insert(0) += 1;
            n /= d;
        }
        d += WHEEL[w];
        w = (w + 1) % WHEEL.len();
    }
    // what remains has no factor below 2^20; split recursively with rho
    let mut stack = vec![n];
    while let Some(v) = stack.pop() {
        if v == 1 {
            continue;
        }
        if is_prime_u128(v) {
            *out.entry(v).or_insert(0) += 1;
            continue;
        }
        let f = pollard_brent(v).ok_or(ModError::FactorizationFailed { n: v })?;
        stack.push(f);
        stack.push(v / f);
    }
    Ok(out)
}

fn lcm_u128(a: u128, b: u128) -> u128 {
    a / gcd_u128(a, b) * b
}

/// The Carmichael function λ(m): the exponent of the multiplicative group
/// modulo `m`. λ(1) = 1, λ(2) = 1, λ(4) = 2, λ(2^k) = 2^(k−2) for k ≥ 3,
/// and λ(p^k) = p^(k−1)(p−1) for odd primes, combined with lcm.
pub fn carmichael(m: u128) -> Result<u128, ModError> {
    if m == 0 {
        return Err(ModError::ZeroModulus);
    }
    let factors = factorize(m)?;
    let mut lambda: u128 = 1;
    for (&p, &k) in &factors {
        let lp = if p == 2 {
            match k {
                1 => 1,
                2 => 2,
                _ => 1u128 << (k - 2),
            }
        } else {
            p.pow(k - 1) * (p - 1)
        };
        lambda = lcm_u128(lambda, lp);
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mulmod_matches_native_when_it_fits() {
        let m = (1u128 << 90) - 17;
        let a = (1u128 << 70) + 12345;
        let b = (1u128 << 69) + 99999;
        // reference via num-bigint
        let big = (num_bigint::BigUint::from(a) * num_bigint::BigUint::from(b))
            % num_bigint::BigUint::from(m);
        let expect: u128 = big.try_into().unwrap();
        assert_eq!(mulmod_u128(a, b, m), expect);
    }

    #[test]
    fn powmod_small() {
        assert_eq!(powmod_u128(2, 10, 1000), 24);
        assert_eq!(powmod_u128(3, 0, 7), 1);
        assert_eq!(powmod_u128(5, 3, 1), 0);
    }

    #[test]
    fn primality_small() {
        let primes = [2u128, 3, 5, 7, 11, 101, 104729, 2147483647];
        for p in primes {
            assert!(is_prime_u128(p), "{p}");
        }
        let composites = [1u128, 4, 9, 561, 1105, 1729, 2047, 3277, 1 << 20];
        for c in composites {
            assert!(!is_prime_u128(c), "{c}");
        }
    }

    #[test]
    fn primality_above_64_bits() {
        // 2^89 - 1 is a Mersenne prime
        assert!(is_prime_u128((1u128 << 89) - 1));
        assert!(!is_prime_u128((1u128 << 89) - 3));
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(1).unwrap(), BTreeMap::new());
        let f = factorize(24).unwrap();
        assert_eq!(f, BTreeMap::from([(2, 3), (3, 1)]));
        let f = factorize(1099511627760).unwrap();
        let rebuilt: u128 = f.iter().map(|(&p, &k)| p.pow(k)).product();
        assert_eq!(rebuilt, 1099511627760);
        for (&p, _) in &f {
            assert!(is_prime_u128(p));
        }
    }

    #[test]
    fn factorize_the_largest_constructed_modulus() {
        let m: u128 = 1811941545963463911360;
        let f = factorize(m).unwrap();
        let rebuilt: u128 = f.iter().map(|(&p, &k)| p.pow(k)).product();
        assert_eq!(rebuilt, m);
        for (&p, _) in &f {
            assert!(is_prime_u128(p), "{p} not prime");
        }
    }

    #[test]
    fn carmichael_examples() {
        assert_eq!(carmichael(5).unwrap(), 4);
        assert_eq!(carmichael(24).unwrap(), 2);
        assert_eq!(carmichael(1).unwrap(), 1);
        assert_eq!(carmichael(8).unwrap(), 2);
        assert_eq!(carmichael(16).unwrap(), 4);
    }

    #[test]
    fn carmichael_matches_group_exponent_brute_force() {
        for m in 2u128..300 {
            let lambda = carmichael(m).unwrap();
            // every unit must satisfy a^λ = 1, and some unit must have order
            // not dividing λ/p for each prime p | λ
            for a in 1..m {
                if gcd_u128(a, m) == 1 {
                    assert_eq!(powmod_u128(a, lambda, m), 1, "a={a} m={m}");
                }
            }
            let mut minimal = true;
            'outer: for (&p, _) in factorize(lambda).unwrap().iter() {
                let reduced = lambda / p;
                for a in 1..m {
                    if gcd_u128(a, m) == 1 && powmod_u128(a, reduced, m) != 1 {
                        continue 'outer;
                    }
                }
                minimal = false;
                break;
            }
            assert!(minimal, "λ({m}) = {lambda} is not minimal");
        }
    }
}
