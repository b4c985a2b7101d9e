//! Wigner 3j symbols, rank-1/rank-2 spherical tensor operators and
//! Wigner–Eckart expectation values.
//!
//! 3j symbols are evaluated from the Racah sum in exact big-integer
//! arithmetic; only the final square root is taken in floating point.
//! Matrix elements follow
//!
//! ```text
//! <J n| T(k,q) |J m> = (-1)^(J-n) (J k J; -n q m) <J||T(k)||J>
//! ```

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::spin::{build_spin_operators, CMatrix, SpinJ, SpinOperator, SpinState};

/// Arguments of a 3j symbol, all stored doubled so half-integers are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThreeJArgs {
    pub two_j: [u32; 3],
    pub two_m: [i32; 3],
}

impl ThreeJArgs {
    pub const fn new(two_j: [u32; 3], two_m: [i32; 3]) -> Self {
        ThreeJArgs { two_j, two_m }
    }

    /// Convenience constructor for integer arguments.
    pub const fn integer(j: [u32; 3], m: [i32; 3]) -> Self {
        ThreeJArgs {
            two_j: [2 * j[0], 2 * j[1], 2 * j[2]],
            two_m: [2 * m[0], 2 * m[1], 2 * m[2]],
        }
    }

    /// Cyclic (even) column permutation.
    pub fn rotated(self) -> Self {
        let [j1, j2, j3] = self.two_j;
        let [m1, m2, m3] = self.two_m;
        ThreeJArgs::new([j2, j3, j1], [m2, m3, m1])
    }

    /// Swap of the first two columns (odd permutation).
    pub fn swapped(self) -> Self {
        let [j1, j2, j3] = self.two_j;
        let [m1, m2, m3] = self.two_m;
        ThreeJArgs::new([j2, j1, j3], [m2, m1, m3])
    }

    pub fn negated(self) -> Self {
        let [m1, m2, m3] = self.two_m;
        ThreeJArgs::new(self.two_j, [-m1, -m2, -m3])
    }

    /// Whether `j1 + j2 + j3` is odd, i.e. odd permutations flip the sign.
    pub fn odd_sum(&self) -> bool {
        (self.two_j.iter().sum::<u32>() / 2) % 2 == 1
    }

    fn selection_rules_hold(&self) -> bool {
        let [j1, j2, j3] = self.two_j;
        for (j, m) in self.two_j.iter().zip(self.two_m) {
            if m.unsigned_abs() > *j || (*j as i32 - m) % 2 != 0 {
                return false;
            }
        }
        self.two_m.iter().sum::<i32>() == 0
            && (j1 + j2 + j3) % 2 == 0
            && j3 <= j1 + j2
            && j3 >= j1.abs_diff(j2)
    }
}

fn cache() -> &'static RwLock<HashMap<ThreeJArgs, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<ThreeJArgs, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Wigner 3j symbol; zero whenever a selection rule fails.
pub fn three_j(args: ThreeJArgs) -> f64 {
    if !args.selection_rules_hold() {
        return 0.0;
    }
    if let Some(v) = cache().read().ok().and_then(|c| c.get(&args).copied()) {
        return v;
    }
    let v = racah(args);
    if let Ok(mut c) = cache().write() {
        c.insert(args, v);
    }
    v
}

fn factorial(n: i64) -> BigUint {
    debug_assert!(n >= 0);
    (2..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

fn racah(args: ThreeJArgs) -> f64 {
    let [tj1, tj2, tj3] = args.two_j.map(i64::from);
    let [tm1, tm2, tm3] = args.two_m.map(i64::from);
    // All combinations below are even by the selection rules.
    let h = |x: i64| x / 2;

    let tri_num = factorial(h(tj1 + tj2 - tj3)) * factorial(h(tj1 - tj2 + tj3)) * factorial(h(-tj1 + tj2 + tj3));
    let tri_den = factorial(h(tj1 + tj2 + tj3) + 1);
    let mut pre = tri_num;
    for (tj, tm) in [(tj1, tm1), (tj2, tm2), (tj3, tm3)] {
        pre *= factorial(h(tj + tm)) * factorial(h(tj - tm));
    }

    let t_min = 0.max(h(tj2 - tj3 - tm1)).max(h(tj1 - tj3 + tm2));
    let t_max = h(tj1 + tj2 - tj3).min(h(tj1 - tm1)).min(h(tj2 + tm2));

    // Signed rational accumulator pos/den - neg/den.
    let mut pos = BigUint::zero();
    let mut neg = BigUint::zero();
    let mut den = BigUint::one();
    for t in t_min..=t_max {
        let d = factorial(t)
            * factorial(h(tj3 - tj2 + tm1) + t)
            * factorial(h(tj3 - tj1 - tm2) + t)
            * factorial(h(tj1 + tj2 - tj3) - t)
            * factorial(h(tj1 - tm1) - t)
            * factorial(h(tj2 + tm2) - t);
        let l = den.lcm(&d);
        let scale_old = &l / &den;
        pos *= &scale_old;
        neg *= &scale_old;
        if t % 2 == 0 {
            pos += &l / &d;
        } else {
            neg += &l / &d;
        }
        den = l;
    }
    let (sum, sum_negative) = if pos >= neg { (pos - neg, false) } else { (neg - pos, true) };
    if sum.is_zero() {
        return 0.0;
    }

    // value^2 = sum^2 * pre * tri_num / (den^2 * tri_den)
    let num = &sum * &sum * pre;
    let den2 = &den * &den * tri_den;
    let g = num.gcd(&den2);
    let magnitude = ratio_to_f64(&(num / &g), &(den2 / &g)).sqrt();

    let phase_odd = h(tj1 - tj2 - tm3).rem_euclid(2) == 1;
    if phase_odd ^ sum_negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Correctly scaled `p / q` for arbitrarily large positive integers.
fn ratio_to_f64(p: &BigUint, q: &BigUint) -> f64 {
    let shift = q.bits() as i64 - p.bits() as i64 + 64;
    let quotient = if shift >= 0 {
        (p << shift as u64) / q
    } else {
        p / (q << (-shift) as u64)
    };
    let mut value = quotient.to_f64().unwrap_or(f64::INFINITY);
    let mut remaining = -shift;
    while remaining != 0 {
        let step = remaining.clamp(-512, 512);
        value *= 2f64.powi(step as i32);
        remaining -= step;
    }
    value
}

/// A spherical tensor component `T(k, q)` on a spin-J space.
#[derive(Debug, Clone)]
pub struct TensorOperator {
    pub k: u32,
    pub q: i32,
    pub op: SpinOperator,
}

impl TensorOperator {
    /// Largest entry lying off the `q`-th diagonal (`n = m + q`).
    pub fn off_band_max(&self) -> f64 {
        let m = self.op.matrix();
        let n = m.nrows();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                // Row index r holds m = J - r, so n - m = c - r.
                if c as i64 - r as i64 != self.q as i64 {
                    worst = worst.max(m[(r, c)].norm());
                }
            }
        }
        worst
    }
}

/// Builds `T(k, q)` from the Cartesian angular-momentum matrices.
pub fn tensor_operator(j: SpinJ, k: u32, q: i32) -> Result<TensorOperator> {
    if k == 0 || k > 2 {
        return Err(Error::UnsupportedRank(k));
    }
    if q.unsigned_abs() > k {
        return Err(Error::InvalidComponent { k, q });
    }
    let ops = build_spin_operators(j);
    let (x, y, z) = (ops.jx.matrix(), ops.jy.matrix(), ops.jz.matrix());
    let i = Complex64::new(0.0, 1.0);
    let half = Complex64::new(0.5, 0.0);
    let matrix: CMatrix = match (k, q) {
        (1, 0) => z.clone(),
        (1, 1) => ops.jplus.matrix().scale(-std::f64::consts::FRAC_1_SQRT_2),
        (1, -1) => ops.jminus.matrix().scale(std::f64::consts::FRAC_1_SQRT_2),
        (2, 2) | (2, -2) => {
            let s = q.signum() as f64;
            (x * x - y * y) * half + (x * y + y * x) * (i * 0.5 * s)
        }
        (2, 1) | (2, -1) => {
            let s = q.signum() as f64;
            (x * z + z * x) * Complex64::new(-0.5 * s, 0.0) - (y * z + z * y) * (i * 0.5)
        }
        (2, 0) => (z * z * Complex64::new(2.0, 0.0) - x * x - y * y).unscale(6f64.sqrt()),
        _ => unreachable!(),
    };
    Ok(TensorOperator {
        k,
        q,
        op: SpinOperator::new(j, matrix, format!("T({k},{q:+})"))?,
    })
}

/// Reduced matrix element `<J||T(k)||J>` together with its internal
/// consistency across every admissible `(n, q, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedElement {
    pub j: SpinJ,
    pub k: u32,
    pub value: f64,
    /// Largest `|element - phase * 3j * value|` over all matrix elements.
    pub max_deviation: f64,
}

/// `(-1)^(J-n) (J k J; -n q m)`.
pub(crate) fn we_coefficient(j: SpinJ, k: u32, two_n: i32, q: i32, two_m: i32) -> f64 {
    let tj = j.twice_j();
    let w = three_j(ThreeJArgs::new([tj, 2 * k, tj], [-two_n, 2 * q, two_m]));
    if ((tj as i32 - two_n) / 2).rem_euclid(2) == 1 {
        -w
    } else {
        w
    }
}

fn ensure_rank(j: SpinJ, k: u32) -> Result<()> {
    if k == 0 || k > 2 {
        return Err(Error::UnsupportedRank(k));
    }
    if j.twice_j() < k {
        return Err(Error::NoTensorOfRank { twice_j: j.twice_j(), k });
    }
    Ok(())
}

pub fn reduced_matrix_element(j: SpinJ, k: u32) -> Result<ReducedElement> {
    ensure_rank(j, k)?;
    let mut entries = Vec::new();
    for q in -(k as i32)..=(k as i32) {
        let t = tensor_operator(j, k, q)?;
        for r in 0..j.dim() {
            for c in 0..j.dim() {
                let w = we_coefficient(j, k, j.m_times_2_at(r), q, j.m_times_2_at(c));
                entries.push((t.op.matrix()[(r, c)], w));
            }
        }
    }
    let (elem, w) = entries
        .iter()
        .copied()
        .filter(|(_, w)| *w != 0.0)
        .max_by(|a, b| a.0.norm().total_cmp(&b.0.norm()))
        .ok_or(Error::NoTensorOfRank { twice_j: j.twice_j(), k })?;
    let value = elem.re / w;
    let max_deviation = entries
        .iter()
        .map(|(e, w)| (e - Complex64::new(w * value, 0.0)).norm())
        .fold(0.0, f64::max);
    Ok(ReducedElement {
        j,
        k,
        value,
        max_deviation,
    })
}

/// `<psi| T(k, q) |psi>` evaluated as a 3j-weighted sum over amplitudes.
pub fn we_expectation(psi: &SpinState, k: u32, q: i32) -> Result<Complex64> {
    let j = psi.j();
    ensure_rank(j, k)?;
    if q.unsigned_abs() > k {
        return Err(Error::InvalidComponent { k, q });
    }
    let reduced = reduced_matrix_element(j, k)?.value;
    let tj = j.twice_j() as i32;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut two_m = -tj;
    while two_m <= tj {
        let two_n = two_m + 2 * q;
        if two_n.abs() <= tj {
            let w = we_coefficient(j, k, two_n, q, two_m);
            acc += psi.amplitude(two_n).conj() * psi.amplitude(two_m) * w;
        }
        two_m += 2;
    }
    Ok(acc * reduced)
}
