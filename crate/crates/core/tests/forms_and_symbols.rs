use ldp_core::fibration::{hilbert_symbol_int, jacobi, legendre_symbol, relevant_places, Place};
use ldp_core::poly::{affine_zero_count_fibered, count_zeros_mod_p, projective_point_count, IntegerForm, Space};
use proptest::prelude::*;

const BUDGET: u64 = 100_000_000;

fn naive_affine_zeros(form: &IntegerForm, p: u64) -> u64 {
    let n = form.nvars();
    let mut x = vec![0u64; n];
    let mut count = 0;
    loop {
        count += (form.eval_mod(&x, p) == 0) as u64;
        let mut i = 0;
        loop {
            if i == n {
                return count;
            }
            x[i] += 1;
            if x[i] < p {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

fn euler_criterion(a: i64, p: u64) -> i8 {
    let a = a.rem_euclid(p as i64) as u128;
    if a == 0 {
        return 0;
    }
    let (mut base, mut e, mut acc) = (a, (p - 1) / 2, 1u128);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u128;
        }
        base = base * base % p as u128;
        e >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

fn small_form(nvars: usize) -> impl Strategy<Value = IntegerForm> {
    prop::collection::vec((-9i64..=9, prop::collection::vec(0u32..4, nvars)), 1..5)
        .prop_filter_map("zero form", move |terms| IntegerForm::new(nvars, terms).ok())
}

fn homogeneous_form(nvars: usize, degree: u32) -> impl Strategy<Value = IntegerForm> {
    prop::collection::vec((-9i64..=9, prop::collection::vec(0u32..=degree, nvars - 1)), 1..5).prop_filter_map(
        "not homogeneous",
        move |raw| {
            let terms: Vec<(i64, Vec<u32>)> = raw
                .into_iter()
                .filter_map(|(c, mut e)| {
                    let used: u32 = e.iter().sum();
                    (used <= degree).then(|| {
                        e.push(degree - used);
                        (c, e)
                    })
                })
                .collect();
            IntegerForm::new(nvars, terms).ok()
        },
    )
}

const SMALL_PRIMES: [u64; 6] = [3, 5, 7, 11, 13, 17];

proptest! {
    #[test]
    fn affine_counts_match_brute_force(form in small_form(3), pi in 0usize..6) {
        let p = SMALL_PRIMES[pi];
        let expect = naive_affine_zeros(&form, p);
        prop_assert_eq!(count_zeros_mod_p(&form, p, Space::Affine, BUDGET).unwrap().affine_zeros, expect);
        prop_assert_eq!(affine_zero_count_fibered(&form, p, BUDGET).unwrap(), expect);
    }

    #[test]
    fn cone_relation_for_homogeneous_forms(form in homogeneous_form(3, 3), pi in 0usize..6) {
        let p = SMALL_PRIMES[pi];
        let c = count_zeros_mod_p(&form, p, Space::Projective, BUDGET).unwrap();
        prop_assert!(c.is_consistent());
        let proj = c.projective_zeros.unwrap();
        prop_assert!(proj as u128 <= projective_point_count(2, p));
    }

    #[test]
    fn legendre_matches_euler(a in -10_000i64..10_000, pi in 0usize..6) {
        let p = SMALL_PRIMES[pi];
        prop_assert_eq!(legendre_symbol(a as i128, p), euler_criterion(a, p));
        prop_assert_eq!(jacobi(a as i128, p as u128), euler_criterion(a, p));
    }

    #[test]
    fn jacobi_is_multiplicative_in_the_modulus(a in -500i64..500, i in 0usize..6, j in 0usize..6) {
        let (p, q) = (SMALL_PRIMES[i], SMALL_PRIMES[j]);
        prop_assert_eq!(
            jacobi(a as i128, (p * q) as u128),
            jacobi(a as i128, p as u128) * jacobi(a as i128, q as u128)
        );
    }

    #[test]
    fn hilbert_product_formula(a in -2000i64..2000, b in -2000i64..2000) {
        prop_assume!(a != 0 && b != 0);
        let mut product = hilbert_symbol_int(a as i128, b as i128, Place::Infinity).unwrap();
        for place in relevant_places(a as i128, b as i128).unwrap() {
            if place != Place::Infinity {
                product *= hilbert_symbol_int(a as i128, b as i128, place).unwrap();
            }
        }
        prop_assert_eq!(product, 1);
    }

    #[test]
    fn hilbert_symbol_is_symmetric_and_bilinear(a in -300i64..300, b in -300i64..300, c in -300i64..300) {
        prop_assume!(a != 0 && b != 0 && c != 0);
        for p in [2u128, 3, 5, 7] {
            let h = |x: i64, y: i64| hilbert_symbol_int(x as i128, y as i128, Place::Prime(p)).unwrap();
            prop_assert_eq!(h(a, b), h(b, a));
            prop_assert_eq!(h(a, b * c), h(a, b) * h(a, c));
            prop_assert_eq!(h(a, -a), 1);
        }
    }
}

#[test]
fn conic_x2_plus_y2_is_insoluble_exactly_at_primes_3_mod_4() {
    // (-1, p)_p = -1 iff p = 3 mod 4
    for p in [3u128, 5, 7, 11, 13, 17, 19, 23] {
        let h = hilbert_symbol_int(-1, p as i128, Place::Prime(p)).unwrap();
        assert_eq!(h == -1, p % 4 == 3, "p = {p}");
    }
    assert_eq!(hilbert_symbol_int(-1, -1, Place::Infinity).unwrap(), -1);
    assert_eq!(hilbert_symbol_int(-1, -1, Place::Prime(2)).unwrap(), -1);
}
