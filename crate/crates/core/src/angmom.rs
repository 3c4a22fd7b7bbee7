//! Angular-momentum coupling coefficients.
//!
//! Quantum numbers are passed doubled (`2j`, `2m`) so half-integers stay
//! exact integers.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

fn factorial(n: i32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn is_triangle(a2: i32, b2: i32, c2: i32) -> bool {
    c2 >= (a2 - b2).abs() && c2 <= a2 + b2 && (a2 + b2 + c2) % 2 == 0
}

/// Clebsch–Gordan coefficient ⟨j₁ m₁ j₂ m₂ | J M⟩ (Condon–Shortley phase),
/// arguments doubled.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j + m) % 2 != 0 {
        return 0.0;
    }
    if !is_triangle(j1, j2, j) {
        return 0.0;
    }
    // Racah's closed form; every factorial argument below is an integer.
    let h = |x: i32| x / 2;
    let pref = ((j + 1) as f64 * factorial(h(j1 + j2 - j)) * factorial(h(j1 - j2 + j))
        * factorial(h(-j1 + j2 + j))
        / factorial(h(j1 + j2 + j) + 1))
        .sqrt()
        * (factorial(h(j1 + m1))
            * factorial(h(j1 - m1))
            * factorial(h(j2 + m2))
            * factorial(h(j2 - m2))
            * factorial(h(j + m))
            * factorial(h(j - m)))
        .sqrt();
    let kmin = 0.max(h(j2 - j - m1)).max(h(j1 - j + m2));
    let kmax = h(j1 + j2 - j).min(h(j1 - m1)).min(h(j2 + m2));
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign
            / (factorial(k)
                * factorial(h(j1 + j2 - j) - k)
                * factorial(h(j1 - m1) - k)
                * factorial(h(j2 + m2) - k)
                * factorial(h(j - j2 + m1) + k)
                * factorial(h(j - j1 - m2) + k));
    }
    pref * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // ⟨½ ½ ½ -½ | 1 0⟩ = 1/√2
        assert!((clebsch_gordan(1, 1, 1, -1, 2, 0) - 0.5f64.sqrt()).abs() < 1e-14);
        // ⟨½ ½ 1 -1 | ½ -½⟩ = +√(2/3) (order-swapped from the 1 ⊗ ½ table)
        assert!((clebsch_gordan(1, 1, 2, -2, 1, -1) - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        // ⟨3/2 3/2 1 1 | 5/2 5/2⟩ = 1
        assert!((clebsch_gordan(3, 3, 2, 2, 5, 5) - 1.0).abs() < 1e-14);
        assert_eq!(clebsch_gordan(1, 1, 2, 2, 1, 3), 0.0);
    }

    #[test]
    fn orthonormal_columns() {
        // Σ_{m1,m2} |⟨j1 m1 j2 m2|J M⟩|² = 1 for j1 = 3/2, j2 = 3/2
        for j in [0, 2, 4, 6] {
            for m in (-j..=j).step_by(2) {
                let mut s = 0.0;
                for m1 in (-3..=3).step_by(2) {
                    s += clebsch_gordan(3, m1, 3, m - m1, j, m).powi(2);
                }
                assert!((s - 1.0).abs() < 1e-12, "J={j} M={m} sum={s}");
            }
        }
    }
}
