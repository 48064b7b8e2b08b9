//! Deterministic random generators for kernels and similarities, used by
//! the `invariance` command and the acceptance sweeps. All values are
//! dyadic rationals so f64 arithmetic downstream stays exact.

use maxplus_core::bijection::Bijection;
use maxplus_core::func::{Func, Space, Tail};
use maxplus_core::kernel::{BandCore, Kernel, TailFamily};
use maxplus_core::num::{Bottom, ExtReal, Finite};
use maxplus_core::similarity::{SimVariant, Similarity};
use maxplus_core::space::{IndexSet, Window};
use rand::Rng;

/// Quarter-integer in [lo, hi].
fn quarter<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) * 4.0) as i64;
    lo + rng.gen_range(0..=steps) as f64 / 4.0
}

pub fn random_finite_kernel<R: Rng>(rng: &mut R, n: usize, ninf_num: u32, ninf_den: u32) -> Kernel {
    let rows: Vec<Vec<ExtReal>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if ninf_num > 0 && rng.gen_ratio(ninf_num, ninf_den) {
                        Bottom
                    } else {
                        Finite(quarter(rng, -6.0, 6.0))
                    }
                })
                .collect()
        })
        .collect();
    Kernel::finite(rows).unwrap()
}

/// A normal kernel whose identity is a strong local solution: zero
/// off-diagonal entries only along a random DAG (so every circuit picks up
/// a strictly negative edge), everything else ≤ -1/4.
pub fn random_normal_kernel<R: Rng>(rng: &mut R, n: usize) -> Kernel {
    // random topological order
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut rank = vec![0usize; n];
    for (pos, &v) in order.iter().enumerate() {
        rank[v] = pos;
    }
    let rows: Vec<Vec<ExtReal>> = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    if x == y {
                        Finite(0.0)
                    } else if rank[x] < rank[y] && rng.gen_ratio(1, 3) {
                        Finite(0.0)
                    } else if rng.gen_ratio(1, 12) {
                        Bottom
                    } else {
                        Finite(quarter(rng, -3.0, -0.25))
                    }
                })
                .collect()
        })
        .collect();
    Kernel::finite(rows).unwrap()
}

/// A banded normal kernel on ℤ with an acyclic residue pattern of zero
/// band entries: saturated chains are finite, so the identity is a strong
/// restricted solution and peeling must succeed.
pub fn random_normal_banded<R: Rng>(rng: &mut R, width: i64, period: usize) -> Kernel {
    assert!(width >= 1 && period >= 1);
    // random linear order on residues; a zero at (residue r, offset k) is
    // allowed only when it moves strictly up the order
    let mut order: Vec<usize> = (0..period).collect();
    for i in (1..period).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut rank = vec![0usize; period];
    for (pos, &r) in order.iter().enumerate() {
        rank[r] = pos;
    }
    let mut bands = Vec::new();
    for k in (-width..=width).filter(|k| *k != 0) {
        let table: Vec<ExtReal> = (0..period)
            .map(|r| {
                let target = ((r as i64 + k).rem_euclid(period as i64)) as usize;
                if rank[target] > rank[r] && rng.gen_ratio(1, 3) {
                    Finite(0.0)
                } else if rng.gen_ratio(1, 10) {
                    Bottom
                } else {
                    Finite(quarter(rng, -3.0, -0.25))
                }
            })
            .collect();
        bands.push((k, table));
    }
    let tail = match rng.gen_range(0..3) {
        0 => TailFamily::MinusInf,
        1 => TailFamily::Linear { a: quarter(rng, 0.25, 1.0), b: quarter(rng, 0.25, 1.0) },
        _ => TailFamily::Power { c: quarter(rng, 0.25, 1.0), q: 1.0 },
    };
    Kernel::banded(BandCore {
        set: IndexSet::integers(),
        period,
        diag: vec![Finite(0.0); period],
        width,
        bands,
        tail,
    })
    .unwrap()
}

fn random_permutation<R: Rng>(rng: &mut R, w: Window) -> Bijection {
    let mut img: Vec<i64> = w.points();
    let n = img.len();
    for i in (1..n).rev() {
        img.swap(i, rng.gen_range(0..=i));
    }
    Bijection::from_images(w, img).unwrap()
}

/// A random similarity for a finite kernel: permutations plus
/// quarter-integer shifts in the declared space.
pub fn random_similarity_finite<R: Rng>(rng: &mut R, n: usize, space: Space) -> Similarity {
    let full = Window::new(0, n as i64 - 1);
    let variant = match rng.gen_range(0..3) {
        0 => SimVariant::TwoSided,
        1 => SimVariant::Right,
        _ => SimVariant::Left,
    };
    let h = if variant == SimVariant::Right {
        Bijection::identity()
    } else {
        random_permutation(rng, full)
    };
    let k = if variant == SimVariant::Left {
        Bijection::identity()
    } else {
        random_permutation(rng, full)
    };
    let shift = |rng: &mut R| {
        Func::from_values(full, (0..n).map(|_| quarter(rng, -2.0, 2.0)).collect())
    };
    Similarity { h, k, phi: shift(rng), psi: shift(rng), variant, space }
}

/// A random similarity compatible with banded kernels: windowed maps and
/// zero- or constant-tail shifts matched to the declared space.
pub fn random_similarity_banded<R: Rng>(rng: &mut R, window: Window, space: Space) -> Similarity {
    let variant = if rng.gen_ratio(1, 2) { SimVariant::Right } else { SimVariant::TwoSided };
    let span = Window::new(window.lo / 2, window.hi / 2);
    let h = if variant == SimVariant::Right {
        Bijection::identity()
    } else {
        random_permutation(rng, span)
    };
    let k = random_permutation(rng, span);
    let tail = match space {
        // l1 shifts must vanish at infinity with a summable tail
        Space::L1 | Space::L01 => Tail::Zero,
        Space::L0 | Space::LInf => {
            if rng.gen_ratio(1, 2) {
                Tail::Constant(quarter(rng, -1.0, 1.0))
            } else {
                Tail::Zero
            }
        }
    };
    let shift = |rng: &mut R, tail: Tail| {
        let vals = span.iter().map(|_| quarter(rng, -1.0, 1.0)).collect();
        Func::new(span, vals, tail)
    };
    Similarity { h, k, phi: shift(rng, tail), psi: shift(rng, tail), variant, space }
}
