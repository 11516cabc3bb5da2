//! Inter-rater statistics: Cohen's kappa and the McNemar test.

use crate::labels::{LabelVector, N_CLASSES};

/// Cohen's kappa from a 2x2 agreement table:
/// `a` both-yes, `b` A-yes/B-no, `c` A-no/B-yes, `d` both-no.
pub fn kappa_from_table(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let n = (a + b + c + d) as f64;
    if n == 0.0 {
        return 1.0;
    }
    let p_o = (a + d) as f64 / n;
    let pa_yes = (a + b) as f64 / n;
    let pb_yes = (a + c) as f64 / n;
    let p_e = pa_yes * pb_yes + (1.0 - pa_yes) * (1.0 - pb_yes);
    if (1.0 - p_e).abs() < 1e-12 {
        // Both raters constant and identical: defined as full agreement.
        1.0
    } else {
        (p_o - p_e) / (1.0 - p_e)
    }
}

/// Per-class kappa between two raters over the same exams.
pub fn kappa_per_class(rater_a: &[LabelVector], rater_b: &[LabelVector]) -> [f64; N_CLASSES] {
    assert_eq!(rater_a.len(), rater_b.len());
    let mut out = [0.0; N_CLASSES];
    for (ci, slot) in out.iter_mut().enumerate() {
        let (mut a, mut b, mut c, mut d) = (0u64, 0u64, 0u64, 0u64);
        for (va, vb) in rater_a.iter().zip(rater_b) {
            match (va.0[ci], vb.0[ci]) {
                (true, true) => a += 1,
                (true, false) => b += 1,
                (false, true) => c += 1,
                (false, false) => d += 1,
            }
        }
        *slot = kappa_from_table(a, b, c, d);
    }
    out
}

/// Two-sided McNemar p-value from discordant counts: exact binomial when
/// b + c < 25, chi-square with continuity correction otherwise.
pub fn mcnemar_counts(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    if n < 25 {
        let k = b.min(c);
        let mut tail = 0.0f64;
        let mut coeff = 1.0f64; // C(n, 0)
        for i in 0..=k {
            if i > 0 {
                coeff = coeff * (n - i + 1) as f64 / i as f64;
            }
            tail += coeff;
        }
        let p = 2.0 * tail * 0.5f64.powi(n as i32);
        p.min(1.0)
    } else {
        let diff = b.abs_diff(c) as f64;
        let x = (diff - 1.0) * (diff - 1.0) / n as f64;
        chi2_sf_1df(x)
    }
}

/// McNemar over per-exam error indicators of two raters.
pub fn mcnemar(rater_a_errors: &[bool], rater_b_errors: &[bool]) -> f64 {
    assert_eq!(rater_a_errors.len(), rater_b_errors.len());
    let mut b = 0u64;
    let mut c = 0u64;
    for (&ea, &eb) in rater_a_errors.iter().zip(rater_b_errors) {
        match (ea, eb) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    mcnemar_counts(b, c)
}

/// Survival function of chi-square with 1 degree of freedom: erfc(sqrt(x/2)).
fn chi2_sf_1df(x: f64) -> f64 {
    erfc((x / 2.0).sqrt())
}

/// Complementary error function, rational approximation with fractional
/// error below 1.2e-7 everywhere.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{EcgClass, CLASSES};

    #[test]
    fn perfect_agreement_is_one() {
        let mut a = Vec::new();
        for i in 0..20 {
            let mut v = LabelVector::all_false();
            v.set(EcgClass::SinusBradycardia, i % 3 == 0);
            v.set(EcgClass::AtrialFibrillation, i % 4 == 0);
            a.push(v);
        }
        let k = kappa_per_class(&a, &a);
        assert!((k[EcgClass::SinusBradycardia.index()] - 1.0).abs() < 1e-12);
        assert!((k[EcgClass::AtrialFibrillation.index()] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chance_level_table_gives_zero() {
        // a=9, b=3, c=3, d=1: p_o = p_e = 0.625.
        let k = kappa_from_table(9, 3, 3, 1);
        assert!(k.abs() < 1e-12, "{k}");
    }

    #[test]
    fn strong_agreement_table_gives_point_eight() {
        // a=45, b=5, c=5, d=45: p_o = 0.9, p_e = 0.5.
        let k = kappa_from_table(45, 5, 5, 45);
        assert!((k - 0.8).abs() < 1e-12, "{k}");
    }

    #[test]
    fn kappa_is_symmetric() {
        assert_eq!(
            kappa_from_table(12, 5, 9, 30),
            kappa_from_table(12, 9, 5, 30)
        );
    }

    #[test]
    fn constant_identical_raters_define_one() {
        let a = vec![LabelVector::all_false(); 10];
        let k = kappa_per_class(&a, &a);
        for c in CLASSES {
            assert_eq!(k[c.index()], 1.0);
        }
    }

    #[test]
    fn identical_error_vectors_give_p_one() {
        let e = vec![true, false, true, false];
        assert_eq!(mcnemar(&e, &e), 1.0);
    }

    #[test]
    fn balanced_discordance_gives_p_one() {
        assert_eq!(mcnemar_counts(5, 5), 1.0);
    }

    #[test]
    fn one_sided_discordance_closed_form() {
        // b=10, c=0: p = 2 * 0.5^10.
        let p = mcnemar_counts(10, 0);
        assert!((p - 2.0 * 0.5f64.powi(10)).abs() < 1e-15, "{p}");
    }

    #[test]
    fn mcnemar_is_symmetric() {
        assert_eq!(mcnemar_counts(3, 11), mcnemar_counts(11, 3));
        assert_eq!(mcnemar_counts(40, 13), mcnemar_counts(13, 40));
    }

    #[test]
    fn asymptotic_branch_is_sane() {
        // Large balanced counts: no evidence of difference, p near 1.
        let p = mcnemar_counts(50, 50);
        assert!(p > 0.9, "{p}");
        // Strongly one-sided: tiny p.
        let p = mcnemar_counts(60, 5);
        assert!(p < 1e-10, "{p}");
    }
}
