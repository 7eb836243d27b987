use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler's gamma function for `x > 0` (Lanczos, `g = 7`, nine terms).
pub fn gamma_function(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma_function needs x > 0, got {x}")));
    }
    if x < 0.5 {
        // Γ(x) = Γ(x+1)/x keeps the series in its accurate range
        return Ok(lanczos(x + 1.0) / x);
    }
    Ok(lanczos(x))
}

fn lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut series = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // mpmath, 40 digits
        let cases = [
            (1.0, 1.0),
            (0.5, std::f64::consts::PI.sqrt()),
            (2.0 / 3.0, 1.354_117_939_426_400_416_945_288),
            (1.0 / 3.0, 2.678_938_534_707_747_633_655_693),
            (0.1, 9.513_507_698_668_731_836_292_487),
            (0.001, 999.423_772_484_595_466_114_982_2),
            (5.5, 52.342_777_784_553_520_181_149_01),
            (9.9, 289_867.703_840_109_406_783_986_2),
            (10.0, 362_880.0),
        ];
        for (x, want) in cases {
            let got = gamma_function(x).unwrap();
            assert!(((got - want) / want).abs() < 1e-12, "Γ({x}) = {got}, want {want}");
        }
        assert!((gamma_function(2.0 / 3.0).unwrap() - 1.354_117_9).abs() < 1e-7);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(gamma_function(0.0).is_err());
        assert!(gamma_function(-1.5).is_err());
        assert!(gamma_function(f64::NAN).is_err());
    }

    #[test]
    fn recurrence_holds() {
        for k in 1..100 {
            let x = 0.05 + k as f64 * 0.09;
            let lhs = gamma_function(x + 1.0).unwrap();
            let rhs = x * gamma_function(x).unwrap();
            assert!(((lhs - rhs) / rhs).abs() < 1e-13);
        }
    }
}
