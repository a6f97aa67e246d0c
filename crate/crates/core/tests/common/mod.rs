#![allow(dead_code)]

use nalgebra::DMatrix;
use poset_h2_core::io::PlantFile;
use poset_h2_core::linalg::vstack;
use poset_h2_core::synthesis::validate_plant;
use poset_h2_core::{BlockPartition, PlantData, Poset, RawPlant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DIAMOND_JSON: &str = include_str!("../../../cli/examples/diamond.json");

pub fn diamond_example() -> PlantData {
    PlantFile::from_json_str(DIAMOND_JSON)
        .expect("bundled example parses")
        .to_plant(1e-9)
        .expect("bundled example is valid")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 1 ⪯ 2, 1 ⪯ 3
pub fn fork() -> Poset {
    Poset::build(&["1", "2", "3"], &[("1", "2"), ("1", "3")]).unwrap()
}

/// 1 ⪯ 2 ⪯ 3
pub fn chain3() -> Poset {
    Poset::chain(3)
}

/// 1 ⪯ 2, 1 ⪯ 3, 2 ⪯ 4, 3 ⪯ 4
pub fn diamond() -> Poset {
    Poset::build(&["1", "2", "3", "4"], &[("1", "2"), ("1", "3"), ("2", "4"), ("3", "4")]).unwrap()
}

pub fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
}

/// Random poset: edge `i → j` for `i < j` with probability one half.
pub fn random_poset(rng: &mut impl Rng, p: usize) -> Poset {
    let labels: Vec<String> = (1..=p).map(|i| i.to_string()).collect();
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if rng.random_bool(0.5) {
                edges.push((labels[i].clone(), labels[j].clone()));
            }
        }
    }
    Poset::build(&labels, &edges).unwrap()
}

fn zero_forbidden(poset: &Poset, rows: &[usize], cols: &[usize], m: &mut DMatrix<f64>) {
    let ro: Vec<usize> = offsets(rows);
    let co: Vec<usize> = offsets(cols);
    for i in 0..poset.len() {
        for j in 0..poset.len() {
            if !poset.leq(j, i) {
                m.view_mut((ro[i], co[j]), (rows[i], cols[j])).fill(0.0);
            }
        }
    }
}

fn offsets(dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect()
}

/// A valid plant on `poset` with block sizes drawn from `1..=max_dim`.
///
/// Weights are `C = [I; 0]`, `D = [0; Du]` with `Du` near identity, and `F`
/// is block diagonal with near-identity blocks. Draws are repeated until
/// the plant validates.
pub fn random_plant_on(rng: &mut impl Rng, poset: &Poset, max_dim: usize) -> PlantData {
    let p = poset.len();
    loop {
        let sd: Vec<usize> = (0..p).map(|_| rng.random_range(1..=max_dim)).collect();
        let id: Vec<usize> = (0..p).map(|_| rng.random_range(1..=max_dim)).collect();
        let n: usize = sd.iter().sum();
        let m: usize = id.iter().sum();
        let mut a = uniform(rng, n, n, 1.0);
        let mut b = uniform(rng, n, m, 1.0);
        zero_forbidden(poset, &sd, &sd, &mut a);
        zero_forbidden(poset, &sd, &id, &mut b);
        let f_blocks: Vec<DMatrix<f64>> = sd
            .iter()
            .map(|&k| DMatrix::identity(k, k) + uniform(rng, k, k, 0.3))
            .collect();
        let f = poset_h2_core::linalg::block_diag(&f_blocks);
        let c = vstack(&[&DMatrix::identity(n, n), &DMatrix::zeros(m, n)]);
        let du = DMatrix::identity(m, m) + uniform(rng, m, m, 0.2);
        let d = vstack(&[&DMatrix::zeros(n, m), &du]);
        let raw = RawPlant {
            poset: poset.clone(),
            partition: BlockPartition::new(sd, id, n + m).unwrap(),
            a,
            b,
            c,
            d,
            f,
        };
        if let Ok(plant) = validate_plant(raw, 1e-9) {
            return plant;
        }
    }
}

/// Same as [`random_plant_on`] with one state and one input per element.
pub fn random_scalar_plant_on(rng: &mut impl Rng, poset: &Poset) -> PlantData {
    let p = poset.len();
    loop {
        let mut a = uniform(rng, p, p, 1.0);
        let mut b = uniform(rng, p, p, 1.0);
        let ones = vec![1; p];
        zero_forbidden(poset, &ones, &ones, &mut a);
        zero_forbidden(poset, &ones, &ones, &mut b);
        let f = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(p, |_, _| 0.5 + rng.random::<f64>()));
        let c = vstack(&[&DMatrix::identity(p, p), &DMatrix::zeros(p, p)]);
        let d = vstack(&[&DMatrix::zeros(p, p), &DMatrix::identity(p, p)]);
        let raw = RawPlant {
            poset: poset.clone(),
            partition: BlockPartition::scalar(p, 2 * p),
            a,
            b,
            c,
            d,
            f,
        };
        if let Ok(plant) = validate_plant(raw, 1e-9) {
            return plant;
        }
    }
}

pub fn random_plant(rng: &mut impl Rng, max_p: usize, max_dim: usize) -> PlantData {
    let p = rng.random_range(1..=max_p);
    let poset = random_poset(rng, p);
    random_plant_on(rng, &poset, max_dim)
}

/// Unstructured centralized instance `(A, B, C, D, F)` with `(A, B)` stabilizable.
pub fn random_lqr_instance(
    rng: &mut impl Rng,
    max_n: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    loop {
        let n = rng.random_range(1..=max_n);
        let m = rng.random_range(1..=3.min(n));
        let a = uniform(rng, n, n, 1.0);
        let b = uniform(rng, n, m, 1.0);
        if !poset_h2_core::riccati::hautus_stabilizable(&a, &b) {
            continue;
        }
        let cx = DMatrix::identity(n, n) + uniform(rng, n, n, 0.3);
        let c = vstack(&[&cx, &DMatrix::zeros(m, n)]);
        let du = DMatrix::identity(m, m) + uniform(rng, m, m, 0.3);
        let d = vstack(&[&DMatrix::zeros(n, m), &du]);
        let f = uniform(rng, n, n, 1.0);
        return (a, b, c, d, f);
    }
}
