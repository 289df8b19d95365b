#![allow(dead_code)]

use invzero::linalg::{Complex64, RMatrix};
use invzero::model::{matrix, random_system, RandomSystemSpec, StateSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn siso() -> StateSpace {
    StateSpace::strictly_proper(
        matrix(3, 3, &[-9.0, -6.5, -3.0, 4.0, 0.0, 0.0, 0.0, 2.0, 0.0]),
        matrix(3, 1, &[0.5, 0.0, 0.0]),
        matrix(1, 3, &[0.0, 0.5, 0.25]),
    )
    .unwrap()
}

#[rustfmt::skip]
pub fn example1() -> StateSpace {
    StateSpace::strictly_proper(
        matrix(6, 6, &[
            -24.0, -11.0, -6.0, 0.0, 0.0, 0.0,
            16.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 4.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -24.0, -11.0, -6.0,
            0.0, 0.0, 0.0, 16.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 4.0, 0.0,
        ]),
        matrix(6, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0]),
        matrix(2, 6, &[
            0.0, 0.0, 1.0, 0.0, 2.0, 2.0,
            0.0, 4.0, -2.0, 0.0, 2.0, -4.0,
        ]),
    )
    .unwrap()
}

pub fn example1_bz() -> RMatrix {
    matrix(2, 6, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
}

#[rustfmt::skip]
pub fn example2() -> StateSpace {
    StateSpace::new(
        matrix(4, 4, &[
            -12.0, -4.0, 0.0, 0.0,
            8.0, 0.0, 0.0, 0.0,
            0.0, 0.0, -12.0, -4.0,
            0.0, 0.0, 8.0, 0.0,
        ]),
        matrix(4, 2, &[16.0, 0.0, 0.0, 0.0, 0.0, 16.0, 0.0, 0.0]),
        matrix(2, 4, &[4.0, 1.0, -40.0, -14.0, -32.0, -12.0, 4.0, 2.0]),
        matrix(2, 2, &[0.0, 64.0, 64.0, 0.0]),
    )
    .unwrap()
}

/// A 6-state realization of `G(s)/(s + 16)` for the feedthrough example.
#[rustfmt::skip]
pub fn example2_h() -> StateSpace {
    StateSpace::strictly_proper(
        matrix(6, 6, &[
            -28.0, -14.0, -4.0, 0.0, 0.0, 0.0,
            16.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 8.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -28.0, -14.0, -4.0,
            0.0, 0.0, 0.0, 16.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 8.0, 0.0,
        ]),
        matrix(6, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
        matrix(2, 6, &[
            0.0, 4.0, 1.0, 64.0, 8.0, 2.0,
            64.0, 16.0, 4.0, 0.0, 4.0, 2.0,
        ]),
    )
    .unwrap()
}

#[rustfmt::skip]
pub fn example2_h_bz() -> RMatrix {
    matrix(4, 6, &[
        0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
    ])
}

pub fn example2_printed_zeros() -> Vec<Complex64> {
    vec![c(-0.77, 1.38), c(-0.77, -1.38), c(-2.23, 2.16), c(-2.23, -2.16)]
}

#[rustfmt::skip]
pub fn example3() -> StateSpace {
    StateSpace::strictly_proper(
        matrix(6, 6, &[
            0.0, 0.0, 2.0, 0.0, 0.0, 0.0,
            1.0, 0.0, 1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, -2.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0, 2.0,
            0.0, 0.0, 0.0, 1.0, 0.0, 1.0,
            0.0, 0.0, 0.0, 0.0, 1.0, -2.0,
        ]),
        matrix(6, 3, &[
            -2.0, 0.0, 1.0,
            1.0, 0.0, -2.0,
            1.0, 0.0, 1.0,
            2.0, -1.0, -1.0,
            -3.0, 0.0, 0.0,
            1.0, 1.0, 1.0,
        ]),
        matrix(2, 6, &[
            0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ]),
    )
    .unwrap()
}

pub fn example3_row1() -> RMatrix {
    matrix(1, 6, &[2.0, 1.0, 3.0, 4.0, 7.0, 3.0])
}

pub fn example3_row2() -> RMatrix {
    matrix(1, 6, &[1.0, 4.0, 2.0, 4.0, 0.0, 3.0])
}

/// One system of the random square `D = 0` suite: every other index plants
/// zeros (with a random relative degree profile); the rest are dense
/// Gaussian with unknown zeros.
pub fn suite_system(index: u64) -> (StateSpace, Option<Vec<Complex64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index);
    let n = rng.random_range(2..=10usize);
    let m = rng.random_range(1..=n.min(3));
    if index % 2 == 1 {
        let spec = RandomSystemSpec::new(n, m, m, rng.random());
        let out = random_system(&spec, &[]).unwrap();
        return (out.system, None);
    }
    let rho = rng.random_range(m..=n);
    let mut degrees = vec![1usize; m];
    for _ in m..rho {
        let k = rng.random_range(0..m);
        degrees[k] += 1;
    }
    let l_eta = n - rho;
    let mut planted = Vec::new();
    while planted.len() + 2 <= l_eta && rng.random_bool(0.5) {
        let z = c(rng.random_range(-3.0..3.0), rng.random_range(0.3..3.0));
        planted.push(z);
        planted.push(z.conj());
    }
    let spec = RandomSystemSpec::new(n, m, m, rng.random()).with_relative_degrees(degrees);
    let out = random_system(&spec, &planted).unwrap();
    (out.system, out.zeros)
}

/// One system of the random feedthrough suite. Every third system has a
/// zero row in `D`.
pub fn feedthrough_system(index: u64) -> StateSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd00d_0000 + index);
    let n = rng.random_range(1..=8usize);
    let m = rng.random_range(1..=3usize);
    let base = random_system(&RandomSystemSpec::new(n, m, m, rng.random()), &[]).unwrap().system;
    let mut d = invzero::model::random_matrix(m, m, rng.random());
    if index % 3 == 2 && m > 1 {
        d.row_mut(0).fill(0.0);
    }
    StateSpace::new(base.a().clone(), base.b().clone(), base.c().clone(), d).unwrap()
}

/// Nonsquare system whose invariant zeros are known: uncontrollable modes
/// (wide systems) or unobservable modes (tall systems) hidden by a random
/// similarity. Such a mode drops the rank of `[sI − A, B]` (or
/// `[sI − A; C]`) and therefore of the whole pencil.
pub fn nonsquare_system(index: u64) -> (StateSpace, Vec<Complex64>) {
    use invzero::model::{random_matrix, random_similarity, similarity_transform};
    let mut rng = ChaCha8Rng::seed_from_u64(0xabcd_0000 + index);
    let k = rng.random_range(1..=2usize);
    let (m, p) = if index % 2 == 0 {
        let p = rng.random_range(1..=2usize);
        (p + rng.random_range(1..=2usize), p)
    } else {
        let m = rng.random_range(1..=2usize);
        (m, m + rng.random_range(1..=2usize))
    };
    // the squared system needs at least max(m, p) states
    let n1 = rng.random_range(m.max(p) + 1..=7usize);
    let n = n1 + k;
    let zeros: Vec<Complex64> = (0..k).map(|j| c(-2.5 + 1.7 * j as f64 + rng.random_range(0.0..0.5), 0.0)).collect();
    let mut a = random_matrix(n, n, rng.random()) / (n as f64).sqrt();
    let mut b = random_matrix(n, m, rng.random());
    let mut cm = random_matrix(p, n, rng.random());
    for (j, z) in zeros.iter().enumerate() {
        let r = n1 + j;
        if m > p {
            // row r of [sI − A, B] vanishes at s = z
            a.row_mut(r).fill(0.0);
            a[(r, r)] = z.re;
            b.row_mut(r).fill(0.0);
        } else {
            a.column_mut(r).fill(0.0);
            a[(r, r)] = z.re;
            cm.column_mut(r).fill(0.0);
        }
    }
    let sys = StateSpace::strictly_proper(a, b, cm).unwrap();
    let moved = similarity_transform(&sys, &random_similarity(n, rng.random())).unwrap();
    (moved, zeros)
}
