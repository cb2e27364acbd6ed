//! Quadratic unconstrained binary objectives.
//!
//! Energy of an assignment `z` is `zᵀ Q z + sᵀ z + offset` with `Q` dense
//! and symmetric. The disjoint set-cover problem `min 1ᵀz s.t. P z = 1`
//! becomes a QUBO by moving the constraint into the objective as the
//! penalty `λ ‖P z − 1‖²`, which expands to
//!
//! ```text
//! Q = λ PᵀP,    s = 1 − 2λ Pᵀ1,    (constant λ n dropped)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::PreferenceMatrix;

/// Penalty weight used when none is given.
pub const DEFAULT_LAMBDA: f64 = 1.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Qubo {
    d: usize,
    /// Row-major `d × d`, symmetric.
    q: Vec<f64>,
    s: Vec<f64>,
    offset: f64,
}

/// Binary assignment over the variables of a [`Qubo`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<u8>);

impl Assignment {
    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn ones(d: usize) -> Self {
        Self(vec![1; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn bit_string(&self) -> String {
        self.0
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Parse(format!("bad bit {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

impl From<Vec<u8>> for Assignment {
    fn from(bits: Vec<u8>) -> Self {
        Self(bits)
    }
}

impl Qubo {
    /// Builds a QUBO from a full (not necessarily symmetric) matrix; the
    /// symmetric part is stored, which leaves every energy unchanged.
    pub fn new(d: usize, q: Vec<f64>, s: Vec<f64>, offset: f64) -> Result<Self> {
        if q.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: q.len(),
            });
        }
        if s.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.len(),
            });
        }
        if q.iter().chain(&s).any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidSpec(
                "QUBO coefficients must be finite".into(),
            ));
        }
        let mut sym = q;
        for i in 0..d {
            for j in i + 1..d {
                let v = 0.5 * (sym[i * d + j] + sym[j * d + i]);
                sym[i * d + j] = v;
                sym[j * d + i] = v;
            }
        }
        Ok(Self {
            d,
            q: sym,
            s,
            offset,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.d + j]
    }

    pub fn q_row(&self, i: usize) -> &[f64] {
        &self.q[i * self.d..(i + 1) * self.d]
    }

    pub fn linear(&self) -> &[f64] {
        &self.s
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn energy(&self, z: &Assignment) -> Result<f64> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: z.len(),
            });
        }
        Ok(self.energy_unchecked(&z.0))
    }

    pub(crate) fn energy_unchecked(&self, z: &[u8]) -> f64 {
        let on: Vec<usize> = (0..self.d).filter(|&i| z[i] == 1).collect();
        let mut e = self.offset;
        for &i in &on {
            let row = self.q_row(i);
            e += self.s[i] + on.iter().map(|&j| row[j]).sum::<f64>();
        }
        e
    }

    /// Subproblem over `kept` with every variable in `fixed_ones` set to 1.
    pub fn fix_ones(&self, fixed_ones: &[usize], kept: &[usize]) -> Qubo {
        let mut offset = self.offset;
        for &f in fixed_ones {
            offset += self.s[f] + fixed_ones.iter().map(|&g| self.q(f, g)).sum::<f64>();
        }
        let s = kept
            .iter()
            .map(|&k| self.s[k] + 2.0 * fixed_ones.iter().map(|&f| self.q(k, f)).sum::<f64>())
            .collect();
        let dk = kept.len();
        let mut q = Vec::with_capacity(dk * dk);
        for &a in kept {
            q.extend(kept.iter().map(|&b| self.q(a, b)));
        }
        Qubo {
            d: dk,
            q,
            s,
            offset,
        }
    }

    pub fn to_json(&self) -> QuboJson {
        let mut q = Vec::new();
        for i in 0..self.d {
            for j in i..self.d {
                let v = self.q(i, j);
                if v != 0.0 {
                    q.push((i, j, v));
                }
            }
        }
        QuboJson {
            d: self.d,
            q,
            s: self.s.clone(),
            offset: self.offset,
        }
    }

    pub fn from_json(json: &QuboJson) -> Result<Self> {
        let d = json.d;
        let mut q = vec![0.0; d * d];
        for &(i, j, v) in &json.q {
            if i >= d || j >= d {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    m: d,
                });
            }
            q[i * d + j] = v;
            q[j * d + i] = v;
        }
        Self::new(d, q, json.s.clone(), json.offset)
    }
}

/// JSON form: upper-triangle entries `[i, j, Q_ij]` with `i ≤ j`, where
/// `Q_ij` is the symmetric matrix entry (an off-diagonal pair contributes
/// `2 Q_ij z_i z_j` to the energy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboJson {
    pub d: usize,
    pub q: Vec<(usize, usize, f64)>,
    pub s: Vec<f64>,
    pub offset: f64,
}

/// QUBO of the disjoint set-cover problem on `p` with penalty weight `lambda`.
pub fn build_mmf_qubo(p: &PreferenceMatrix, lambda: f64) -> Result<Qubo> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let m = p.m();
    let mut q = vec![0.0; m * m];
    let mut s = vec![0.0; m];
    for j in 0..m {
        let c = p.consensus_size(j) as f64;
        q[j * m + j] = lambda * c;
        s[j] = 1.0 - 2.0 * lambda * c;
        for k in j + 1..m {
            let v = lambda * p.overlap(j, k) as f64;
            q[j * m + k] = v;
            q[k * m + j] = v;
        }
    }
    Ok(Qubo {
        d: m,
        q,
        s,
        offset: 0.0,
    })
}

/// Result of removing variables that are 1 at every global optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub forced_ones: Vec<usize>,
    /// `kept[r]` is the parent index of reduced variable `r`.
    pub kept: Vec<usize>,
    pub reduced: Qubo,
}

impl Reduction {
    /// Parent-sized assignment from a reduced one.
    pub fn extend(&self, reduced: &Assignment) -> Assignment {
        let d = self.forced_ones.len() + self.kept.len();
        let mut bits = vec![0u8; d];
        for &f in &self.forced_ones {
            bits[f] = 1;
        }
        for (r, &k) in self.kept.iter().enumerate() {
            bits[k] = reduced.0[r];
        }
        Assignment(bits)
    }
}

/// Forces models that share no point with any other model.
///
/// Such a variable has no quadratic coupling, so its contribution
/// `Q_ii + s_i = 1 − λ c_i` is separable; it is forced whenever that is
/// negative, i.e. for any nonempty consensus once `λ > 1`.
pub fn reduce_forced(p: &PreferenceMatrix, q: &Qubo) -> Result<Reduction> {
    if p.m() != q.d() {
        return Err(Error::DimensionMismatch {
            expected: p.m(),
            actual: q.d(),
        });
    }
    let d = q.d();
    let isolated = |i: usize| (0..d).all(|j| j == i || q.q(i, j) == 0.0);
    let (forced_ones, kept): (Vec<usize>, Vec<usize>) = (0..d)
        .partition(|&i| p.consensus_size(i) > 0 && isolated(i) && q.q(i, i) + q.linear()[i] < 0.0);
    let reduced = q.fix_ones(&forced_ones, &kept);
    Ok(Reduction {
        forced_ones,
        kept,
        reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pm(rows: &[&[u8]]) -> PreferenceMatrix {
        PreferenceMatrix::from_rows(rows).unwrap()
    }

    /// Exhaustive minimum, independent of the annealer module.
    fn brute_min(q: &Qubo) -> f64 {
        (0u32..1 << q.d())
            .map(|mask| {
                let z: Vec<u8> = (0..q.d()).map(|i| (mask >> i & 1) as u8).collect();
                q.energy(&Assignment(z)).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Energy written directly from the penalty form.
    fn penalty_energy(p: &PreferenceMatrix, lambda: f64, z: &[u8]) -> f64 {
        let ones = z.iter().filter(|&&b| b == 1).count() as f64;
        let viol: f64 = (0..p.n())
            .map(|i| {
                let cover: i64 = (0..p.m()).map(|j| (p.get(i, j) as i64) * z[j] as i64).sum();
                ((cover - 1) * (cover - 1)) as f64
            })
            .sum();
        ones + lambda * viol - lambda * p.n() as f64
    }

    #[test]
    fn identity_preference_qubo() {
        let q = build_mmf_qubo(&pm(&[&[1, 0], &[0, 1]]), 1.1).unwrap();
        assert_eq!(q.q(0, 0), 1.1);
        assert_eq!(q.q(1, 1), 1.1);
        assert_eq!(q.q(0, 1), 0.0);
        assert!((q.linear()[0] + 1.2).abs() < 1e-15);
        assert!((q.energy(&Assignment(vec![1, 1])).unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_column_is_inert() {
        let q = build_mmf_qubo(&pm(&[&[1, 0], &[1, 0]]), 1.1).unwrap();
        assert_eq!(q.q_row(1), &[0.0, 0.0]);
        assert_eq!(q.linear()[1], 1.0);
    }

    #[test]
    fn feasible_cover_energy() {
        let q = build_mmf_qubo(&pm(&[&[1, 1], &[1, 0]]), 1.1).unwrap();
        assert!((q.energy(&Assignment(vec![1, 0])).unwrap() + 1.2).abs() < 1e-12);
        assert_eq!(q.energy(&Assignment::zeros(2)).unwrap(), 0.0);
        assert!(matches!(
            q.energy(&Assignment::zeros(3)),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 3
            })
        ));
        assert!(build_mmf_qubo(&pm(&[&[1]]), 0.0).is_err());
    }

    #[test]
    fn reduction_examples() {
        // Column 0 owns row 0 alone; columns 1 and 2 overlap on row 1.
        let p = pm(&[&[1, 0, 0], &[0, 1, 1], &[0, 0, 1]]);
        let q = build_mmf_qubo(&p, 1.1).unwrap();
        let r = reduce_forced(&p, &q).unwrap();
        assert_eq!(r.forced_ones, vec![0]);
        assert_eq!(r.kept, vec![1, 2]);

        let p = pm(&[&[1, 1], &[1, 1]]);
        let q = build_mmf_qubo(&p, 1.1).unwrap();
        let r = reduce_forced(&p, &q).unwrap();
        assert!(r.forced_ones.is_empty());
        assert_eq!(r.reduced, q);

        let p = pm(&[&[1, 0], &[0, 1]]);
        let q = build_mmf_qubo(&p, 1.1).unwrap();
        let r = reduce_forced(&p, &q).unwrap();
        assert_eq!(r.forced_ones, vec![0, 1]);
        assert_eq!(r.reduced.d(), 0);
        let full = q.energy(&Assignment::ones(2)).unwrap();
        assert!((r.reduced.offset() - full).abs() < 1e-12);
    }

    #[test]
    fn empty_column_never_forced() {
        let p = pm(&[&[1, 0]]);
        let r = reduce_forced(&p, &build_mmf_qubo(&p, 1.1).unwrap()).unwrap();
        assert_eq!(r.forced_ones, vec![0]);
        assert_eq!(r.kept, vec![1]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = pm(&[&[1, 1, 0], &[0, 1, 1]]);
        let q = build_mmf_qubo(&p, 1.1).unwrap();
        let text = serde_json::to_string(&q.to_json()).unwrap();
        assert!(text.starts_with("{\"d\":3,\"q\":[[0,0,1.1"));
        let back = Qubo::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, q);
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<u8>, f64)> {
        (1usize..12, 1usize..10).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(prop::collection::vec(0u8..2, m), n),
                prop::collection::vec(0u8..2, m),
                0.01..10.0f64,
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn energy_matches_penalty_form((rows, z, lambda) in instance()) {
            let p = PreferenceMatrix::from_rows(&rows).unwrap();
            let q = build_mmf_qubo(&p, lambda).unwrap();
            let e = q.energy(&Assignment(z.clone())).unwrap();
            prop_assert!((e - penalty_energy(&p, lambda, &z)).abs() <= 1e-9);
        }

        #[test]
        fn quadratic_part_is_psd((rows, _z, lambda) in instance(), v in prop::collection::vec(-5.0..5.0f64, 10)) {
            let p = PreferenceMatrix::from_rows(&rows).unwrap();
            let q = build_mmf_qubo(&p, lambda).unwrap();
            let d = q.d();
            let quad: f64 = (0..d).map(|i| (0..d).map(|j| v[i] * q.q(i, j) * v[j]).sum::<f64>()).sum();
            prop_assert!(quad >= -1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn reduction_preserves_optimum(
            rows in (1usize..10, 1usize..11).prop_flat_map(|(n, m)|
                prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.25), m), n))
        ) {
            let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect();
            let p = PreferenceMatrix::from_rows(&rows).unwrap();
            let q = build_mmf_qubo(&p, 1.1).unwrap();
            let r = reduce_forced(&p, &q).unwrap();
            prop_assert!((brute_min(&q) - brute_min(&r.reduced)).abs() <= 1e-9);
        }
    }
}
