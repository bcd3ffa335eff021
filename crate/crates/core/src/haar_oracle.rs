//! Monte Carlo estimates of trace moments over Haar-random matrices in SU(N),
//! USp(2N) and SO(N), used to cross-check the exact combinatorial counts.

use crate::error::{invalid, Result};
use crate::group::GroupKind;
use crate::rmt_moments::mult_one;
use crate::summation::{ComplexSum, NeumaierSum};
use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

pub const MAX_DIM: usize = 64;
/// Samples drawn from one RNG stream; stream c covers samples [c·CHUNK, (c+1)·CHUNK).
pub const SAMPLE_CHUNK: usize = 1024;
pub const UNITARITY_TOLERANCE: f64 = 1e-10;
pub const DETERMINANT_TOLERANCE: f64 = 1e-10;
pub const FORM_TOLERANCE: f64 = 1e-9;
/// Largest k + r accepted by [`mc_moment`].
pub const MC_MAX_ORDER: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SampleSpec {
    pub group: GroupKind,
    pub count: usize,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(group: GroupKind, count: usize, seed: u64) -> Result<Self> {
        let spec = Self { group, count, seed };
        let dim = spec.dim()?;
        if count == 0 {
            return Err(invalid("sample count must be at least 1"));
        }
        if dim == 0 || dim > MAX_DIM {
            return Err(invalid(format!("matrix size {dim} outside 1..={MAX_DIM}")));
        }
        if matches!(group, GroupKind::Symplectic(n) if n % 2 == 1) {
            return Err(invalid("symplectic matrix size must be even"));
        }
        Ok(spec)
    }

    /// Matrix size of the group's standard representation.
    pub fn dim(&self) -> Result<usize> {
        match self.group {
            GroupKind::SpecialLinear(n)
            | GroupKind::Symplectic(n)
            | GroupKind::SpecialOrthogonal(n) => Ok(n as usize),
            g => Err(invalid(format!("{g} is not a matrix group"))),
        }
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Q from the QR factorization of `z`, with columns rephased so that R has a
/// positive real diagonal.
fn haar_unitary_from(z: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = z.nrows();
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        q.column_mut(j).scale_mut_complex(phase);
    }
    q
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, c: Complex64);
}

impl<S> ScaleComplex for nalgebra::Matrix<Complex64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<Complex64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, c: Complex64) {
        for v in self.iter_mut() {
            *v *= c;
        }
    }
}

fn sample_su(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let mut u = haar_unitary_from(z);
    let det = u.determinant();
    u.column_mut(0).scale_mut_complex(det.conj() / det.norm());
    u
}

fn sample_so(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        Complex64::new(a, 0.0)
    });
    let mut o = haar_unitary_from(z);
    // QR of a real matrix stays real; drop rounding residue in the imaginary parts
    o.iter_mut().for_each(|v| v.im = 0.0);
    if o.determinant().re < 0.0 {
        o.column_mut(0).scale_mut_complex(Complex64::new(-1.0, 0.0));
    }
    o
}

/// −J·conj(v) with J = [[0, I], [−I, 0]].
fn quaternionic_partner(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len() / 2;
    let mut w = vec![Complex64::new(0.0, 0.0); 2 * n];
    for i in 0..n {
        w[i] = -v[n + i].conj();
        w[n + i] = v[i].conj();
    }
    w
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Quaternionic Gram–Schmidt: column i is a Gaussian vector orthonormalized against
/// all earlier columns and their partners; column N + i is its partner.
fn sample_usp(two_n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let n = two_n / 2;
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(two_n);
    let mut u = DMatrix::zeros(two_n, two_n);
    for i in 0..n {
        let mut v: Vec<Complex64> = (0..two_n).map(|_| complex_gaussian(rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).re.sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let w = quaternionic_partner(&v);
        for row in 0..two_n {
            u[(row, i)] = v[row];
            u[(row, n + i)] = w[row];
        }
        basis.push(v);
        basis.push(w);
    }
    u
}

fn sample_one(group: GroupKind, dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    match group {
        GroupKind::SpecialLinear(_) => sample_su(dim, rng),
        GroupKind::SpecialOrthogonal(_) => sample_so(dim, rng),
        GroupKind::Symplectic(_) => sample_usp(dim, rng),
        _ => unreachable!("validated by SampleSpec"),
    }
}

fn map_samples<T, F>(spec: &SampleSpec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(DMatrix<Complex64>) -> T + Sync,
{
    let spec = SampleSpec::new(spec.group, spec.count, spec.seed)?;
    let dim = spec.dim()?;
    let chunks: Vec<Vec<T>> = (0..spec.count.div_ceil(SAMPLE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(c as u64);
            let len = SAMPLE_CHUNK.min(spec.count - c * SAMPLE_CHUNK);
            (0..len)
                .map(|_| f(sample_one(spec.group, dim, &mut rng)))
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// `spec.count` Haar-distributed matrices. The output depends only on the spec, not
/// on the thread count.
pub fn sample(spec: &SampleSpec) -> Result<Vec<DMatrix<Complex64>>> {
    map_samples(spec, |m| m)
}

/// Traces of the matrices [`sample`] would return.
pub fn sample_traces(spec: &SampleSpec) -> Result<Vec<Complex64>> {
    map_samples(spec, |m| m.trace())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// max |U*U − I|
    pub unitarity: f64,
    pub determinant: f64,
    /// max |UᵀJU − J|, symplectic groups only
    pub form: Option<f64>,
}

impl Residuals {
    pub fn within_tolerance(&self) -> bool {
        self.unitarity <= UNITARITY_TOLERANCE
            && self.determinant <= DETERMINANT_TOLERANCE
            && self.form.is_none_or(|f| f <= FORM_TOLERANCE)
    }
}

pub fn residuals(group: GroupKind, m: &DMatrix<Complex64>) -> Residuals {
    let n = m.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let max_abs = |a: DMatrix<Complex64>| a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let unitarity = max_abs(m.adjoint() * m - &id);
    let determinant = (m.determinant() - Complex64::new(1.0, 0.0)).norm();
    let form = matches!(group, GroupKind::Symplectic(_)).then(|| {
        let h = n / 2;
        let j = DMatrix::from_fn(n, n, |r, c| {
            if c == r + h {
                Complex64::new(1.0, 0.0)
            } else if r == c + h {
                Complex64::new(-1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        max_abs(m.transpose() * &j * m - &j)
    });
    Residuals {
        unitarity,
        determinant,
        form,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: Complex64,
    /// Sample standard deviation of tr^k conj(tr)^r divided by √count.
    pub stderr: f64,
    pub count: usize,
}

pub fn estimate_moment(traces: &[Complex64], k: u32, r: u32) -> McEstimate {
    let f = |z: &Complex64| z.powu(k) * z.conj().powu(r);
    let n = traces.len();
    let mut acc = ComplexSum::new();
    traces.iter().for_each(|z| acc.add(f(z)));
    let mean = acc.value() / n as f64;
    let mut ss = NeumaierSum::new();
    traces.iter().for_each(|z| ss.add((f(z) - mean).norm_sqr()));
    let var = if n > 1 {
        ss.value() / (n - 1) as f64
    } else {
        0.0
    };
    McEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        count: n,
    }
}

pub fn mc_moment(spec: &SampleSpec, k: u32, r: u32) -> Result<McEstimate> {
    if k + r > MC_MAX_ORDER {
        return Err(invalid(format!("k + r = {} exceeds {MC_MAX_ORDER}", k + r)));
    }
    Ok(estimate_moment(&sample_traces(spec)?, k, r))
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// E tr(U)^k over SU(2) from the Weyl integration formula,
/// (2/π) ∫_0^π sin²θ (2cos θ)^k dθ, by adaptive Simpson quadrature.
pub fn weyl_su2_moment(k: u32) -> Result<f64> {
    if k > 40 {
        return Err(invalid("weyl_su2_moment supports k <= 40"));
    }
    let f =
        move |t: f64| 2.0 / std::f64::consts::PI * t.sin().powi(2) * (2.0 * t.cos()).powi(k as i32);
    // a fixed initial split keeps the symmetric integrand from fooling the first
    // error estimate
    let pieces = 16;
    let tol = 1e-12 * 2f64.powi(k as i32).max(1.0) / pieces as f64;
    let step = std::f64::consts::PI / pieces as f64;
    let mut total = NeumaierSum::new();
    for i in 0..pieces {
        let (a, b) = (i as f64 * step, (i + 1) as f64 * step);
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = simpson(a, b, fa, fm, fb);
        total.add(adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 50));
    }
    Ok(total.value())
}

/// CDF of tr(U)/2 = cos θ for Haar U ∈ SU(2): the semicircle law on [−1, 1].
pub fn su2_half_trace_cdf(x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / std::f64::consts::PI
}

fn serialize_big<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub group: GroupKind,
    pub k: u32,
    pub r: u32,
    #[serde(serialize_with = "serialize_big")]
    pub exact: BigUint,
    pub mean: Complex64,
    pub stderr: f64,
    /// |exact − mean| / stderr
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub seed: u64,
    pub kmax: u32,
    pub threads: usize,
    pub sigma: f64,
    pub rows: Vec<VerifyRow>,
    pub pass: bool,
}

/// Rows pass when |exact − mean| ≤ 4 standard errors.
pub const VERIFY_SIGMA: f64 = 4.0;

pub fn verify_combinatorial(
    groups: &[GroupKind],
    kmax: u32,
    samples: usize,
    seed: u64,
) -> Result<VerifyReport> {
    verify_combinatorial_with(groups, kmax, samples, seed, mult_one)
}

/// Same as [`verify_combinatorial`] with the exact moments supplied by `exact`.
pub fn verify_combinatorial_with(
    groups: &[GroupKind],
    kmax: u32,
    samples: usize,
    seed: u64,
    exact: impl Fn(GroupKind, u32, u32) -> BigUint,
) -> Result<VerifyReport> {
    if kmax > MC_MAX_ORDER {
        return Err(invalid(format!("kmax {kmax} exceeds {MC_MAX_ORDER}")));
    }
    let mut rows = Vec::new();
    for &group in groups {
        let traces = sample_traces(&SampleSpec::new(group, samples, seed)?)?;
        for order in 0..=kmax {
            for k in (0..=order).rev() {
                let r = order - k;
                let est = estimate_moment(&traces, k, r);
                let ex = exact(group, k, r);
                let diff = (est.mean - ex.to_f64().unwrap_or(f64::INFINITY)).norm();
                let z = if est.stderr > 0.0 {
                    diff / est.stderr
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                rows.push(VerifyRow {
                    group,
                    k,
                    r,
                    exact: ex,
                    mean: est.mean,
                    stderr: est.stderr,
                    z,
                    pass: diff <= VERIFY_SIGMA * est.stderr + 1e-9,
                });
            }
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(VerifyReport {
        samples,
        seed,
        kmax,
        threads: rayon::current_num_threads(),
        sigma: VERIFY_SIGMA,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_distance;
    use num_traits::One;

    fn spec(g: GroupKind, n: usize) -> SampleSpec {
        SampleSpec::new(g, n, 42).unwrap()
    }

    #[test]
    fn su1_is_trivial() {
        let m = sample(&spec(GroupKind::SpecialLinear(1), 5)).unwrap();
        for u in m {
            assert_eq!(u.nrows(), 1);
            assert!((u[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn membership_of_every_sample() {
        let groups = [
            GroupKind::SpecialLinear(2),
            GroupKind::SpecialLinear(5),
            GroupKind::Symplectic(2),
            GroupKind::Symplectic(6),
            GroupKind::SpecialOrthogonal(3),
            GroupKind::SpecialOrthogonal(6),
        ];
        for g in groups {
            for m in sample(&spec(g, 300)).unwrap() {
                let res = residuals(g, &m);
                assert!(res.within_tolerance(), "{g}: {res:?}");
                if let GroupKind::SpecialOrthogonal(_) = g {
                    assert!(m.iter().all(|z| z.im == 0.0));
                }
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(SampleSpec::new(GroupKind::UnitCircle, 10, 1).is_err());
        assert!(SampleSpec::new(GroupKind::SpecialLinear(65), 10, 1).is_err());
        assert!(SampleSpec::new(GroupKind::Symplectic(3), 10, 1).is_err());
        assert!(SampleSpec::new(GroupKind::SpecialLinear(2), 0, 1).is_err());
        assert!(mc_moment(&spec(GroupKind::SpecialLinear(2), 10), 7, 6).is_err());
    }

    #[test]
    fn su2_half_trace_follows_semicircle() {
        let tr = sample_traces(&spec(GroupKind::SpecialLinear(2), 100_000)).unwrap();
        let xs: Vec<f64> = tr.iter().map(|z| z.re / 2.0).collect();
        assert!(tr.iter().all(|z| z.im.abs() < 1e-12));
        let d = ks_distance(&xs, su2_half_trace_cdf);
        assert!(d < 0.02, "KS {d}");
        // the closed-form CDF integrates the Weyl density
        assert!((su2_half_trace_cdf(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(su2_half_trace_cdf(1.0), 1.0);
    }

    #[test]
    fn weyl_quadrature_gives_catalan_numbers() {
        assert!((weyl_su2_moment(2).unwrap() - 1.0).abs() < 1e-10);
        assert!(weyl_su2_moment(3).unwrap().abs() < 1e-10);
        assert!((weyl_su2_moment(6).unwrap() - 5.0).abs() < 1e-10);
        let mut catalan = 1.0f64;
        for m in 0..=20u32 {
            if m > 0 {
                catalan = catalan * 2.0 * (2 * m - 1) as f64 / (m + 1) as f64;
            }
            let v = weyl_su2_moment(2 * m).unwrap();
            assert!(
                (v - catalan).abs() <= 1e-10 * catalan,
                "k={} {v} vs {catalan}",
                2 * m
            );
            if m < 20 {
                assert!(weyl_su2_moment(2 * m + 1).unwrap().abs() <= 1e-10 * catalan);
            }
        }
        assert!(weyl_su2_moment(41).is_err());
    }

    #[test]
    fn small_moment_examples() {
        let su3 = spec(GroupKind::SpecialLinear(3), 100_000);
        let m = mc_moment(&su3, 1, 0).unwrap();
        assert!(m.mean.norm() <= 4.0 * m.stderr);
        let m = mc_moment(&su3, 2, 2).unwrap();
        assert!((m.mean - 2.0).norm() <= 4.0 * m.stderr, "{m:?}");
        let usp2 = spec(GroupKind::Symplectic(2), 100_000);
        let m = mc_moment(&usp2, 4, 0).unwrap();
        assert!((m.mean - 2.0).norm() <= 4.0 * m.stderr, "{m:?}");
    }

    #[test]
    fn combinatorial_verification() {
        let rep = verify_combinatorial(
            &[GroupKind::SpecialLinear(2), GroupKind::SpecialOrthogonal(3)],
            4,
            100_000,
            42,
        )
        .unwrap();
        assert!(
            rep.pass,
            "{:#?}",
            rep.rows.iter().filter(|r| !r.pass).collect::<Vec<_>>()
        );
        let so3_4 = rep
            .rows
            .iter()
            .find(|r| r.group == GroupKind::SpecialOrthogonal(3) && (r.k, r.r) == (4, 0))
            .unwrap();
        assert_eq!(so3_4.exact, BigUint::from(3u32));

        let corrupted =
            verify_combinatorial_with(&[GroupKind::SpecialLinear(2)], 4, 100_000, 42, |g, k, r| {
                let v = mult_one(g, k, r);
                if (k, r) == (2, 2) {
                    v + BigUint::one()
                } else {
                    v
                }
            })
            .unwrap();
        assert!(!corrupted.pass);
        let bad: Vec<_> = corrupted
            .rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| (r.k, r.r))
            .collect();
        assert_eq!(bad, vec![(2, 2)]);
    }

    #[test]
    fn sampling_selects_the_even_orthogonal_rule() {
        use crate::rmt_moments::{moment_so_with, SoEvenRule};
        let groups = [
            GroupKind::SpecialOrthogonal(4),
            GroupKind::SpecialOrthogonal(6),
        ];
        let literal = verify_combinatorial_with(&groups, 6, 100_000, 42, |g, k, r| {
            let GroupKind::SpecialOrthogonal(n) = g else {
                unreachable!()
            };
            moment_so_with(n, k + r, SoEvenRule::HalfColumns)
        })
        .unwrap();
        assert!(!literal.pass);
        let default = verify_combinatorial(&groups, 6, 100_000, 42).unwrap();
        assert!(default.pass);
    }

    #[test]
    fn traces_are_conjugation_invariant() {
        let g = GroupKind::Symplectic(4);
        let v = sample(&SampleSpec::new(g, 1, 7).unwrap())
            .unwrap()
            .remove(0);
        let vinv = v.adjoint();
        for u in sample(&spec(g, 200)).unwrap() {
            let c = &v * &u * &vinv;
            assert!((c.trace() - u.trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn mean_trace_vanishes_for_every_group() {
        for g in [
            GroupKind::SpecialLinear(3),
            GroupKind::Symplectic(4),
            GroupKind::SpecialOrthogonal(5),
        ] {
            let m = mc_moment(&spec(g, 100_000), 1, 0).unwrap();
            assert!(m.mean.norm() <= 4.0 * m.stderr, "{g}: {m:?}");
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = spec(GroupKind::SpecialOrthogonal(4), 5000);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| sample_traces(&s).unwrap());
        let b = four.install(|| sample_traces(&s).unwrap());
        assert_eq!(a, b);
        let c = sample_traces(&SampleSpec::new(s.group, s.count, 43).unwrap()).unwrap();
        assert_ne!(a, c);
    }
}
