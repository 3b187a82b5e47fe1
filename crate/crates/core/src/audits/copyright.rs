use std::path::Path;

use rayon::prelude::*;

use super::{chunked_structures, AuditError};
use crate::air::DEFAULT_COLS;
use crate::commit::{tag, Digest, HashKind};
use crate::fxp::FxpSpec;
use crate::nn::{CircuitBackend, FxpBackend, NnError, PlainBackend, VectorFile};
use crate::protocol::{
    AuditContext, AuditFunction, AuditOutput, AuditRun, AuditSpec, MockBackend, ProtocolError, Structure,
    TrainingTranscript,
};

const CHUNK: usize = 64;

/// `round(SF² / √n)`, the unique `w` with `(2w−1)²·n ≤ 4·SF⁴ < (2w+1)²·n`.
fn inv_sqrt_hint(n: i128, sf: i128) -> Option<i128> {
    let target = 4 * sf.checked_pow(4)?;
    let lo_ok = |w: i128| -> Option<bool> { Some((2 * w - 1).checked_pow(2)?.checked_mul(n)? <= target) };
    let hi_ok = |w: i128| -> Option<bool> { Some(target < (2 * w + 1).checked_pow(2)?.checked_mul(n)?) };
    let mut w = ((sf * sf) as f64 / (n as f64).sqrt()).round() as i128;
    w = w.max(0);
    while !lo_ok(w)? {
        w -= 1;
    }
    while !hi_ok(w)? {
        w += 1;
    }
    Some(w)
}

/// Scales `xs` to unit norm at the spec's scale, with the inverse norm
/// supplied as a hint and pinned by two range checks.
fn normalize<B: FxpBackend>(be: &mut B, xs: &[B::V], item: usize) -> Result<Vec<B::V>, AuditError> {
    let spec = *be.spec();
    let sf = spec.sf() as i128;
    let big = 4 * spec.range_bits + 8;
    let nx = be.dot(xs, xs, None)?;
    let n = be.value(nx);
    if n == 0 {
        return Err(AuditError::ZeroNorm { item });
    }
    let w = inv_sqrt_hint(n, sf).ok_or_else(|| AuditError::Domain(format!("item {item}: norm hint overflows")))?;
    let wv = be.input(w)?;
    be.range_check(wv, spec.range_bits)?;
    let w2 = be.mul(wv, wv)?;
    let w2n = be.mul(w2, nx)?;
    let wn = be.mul(wv, nx)?;
    let k = 4 * sf.pow(4);
    let lo = be.lincomb(&[(-4, w2n), (4, wn), (-1, nx)], k)?;
    let hi = be.lincomb(&[(4, w2n), (4, wn), (1, nx)], -k - 1)?;
    be.range_check(lo, big)?;
    be.range_check(hi, big)?;
    xs.iter()
        .map(|&x| {
            let p = be.mul(x, wv)?;
            Ok(be.div_const(p, sf)?)
        })
        .collect()
}

/// Similarities of each item to the claimant and the `sim ≥ τ` flags.
fn similarities<B: FxpBackend>(
    be: &mut B,
    items: &[&[i64]],
    first_item: usize,
    claimant: &[i64],
    tau_raw: i64,
) -> Result<Vec<(B::V, B::V)>, AuditError> {
    let sf = be.spec().sf() as i128;
    let c: Vec<B::V> = claimant.iter().map(|&v| be.input(v as i128)).collect::<Result<_, NnError>>()?;
    let cn = normalize(be, &c, usize::MAX)?;
    let tau = be.constant(tau_raw as i128)?;
    let mut out = Vec::with_capacity(items.len());
    for (k, x) in items.iter().enumerate() {
        if x.len() != claimant.len() {
            return Err(AuditError::Dimension(format!("item {} has {} features, claimant {}", first_item + k, x.len(), claimant.len())));
        }
        let xv: Vec<B::V> = x.iter().map(|&v| be.input(v as i128)).collect::<Result<_, NnError>>()?;
        let xn = normalize(be, &xv, first_item + k)?;
        let d = be.dot(&xn, &cn, None)?;
        let sim = be.div_const(d, sf)?;
        let flag = be.le(tau, sim)?;
        out.push((sim, flag));
    }
    Ok(out)
}

/// Fixed-point cosine similarity of two raw vectors at `spec`'s scale.
pub fn cosine_similarity(spec: &FxpSpec, x: &[i64], c: &[i64]) -> Result<i64, AuditError> {
    let mut be = PlainBackend::new(*spec);
    let r = similarities(&mut be, &[x], 0, c, 0)?;
    Ok(r[0].0 as i64)
}

pub fn claimant_digest(hash: HashKind, claimant: &[i64]) -> Digest {
    let bytes: Vec<u8> = claimant.iter().flat_map(|v| v.to_le_bytes()).collect();
    hash.hash(tag::PUBLIC, &[b"claimant", &bytes])
}

/// Flags every item whose features are at least `tau`-similar to the
/// claimant's.
#[derive(Clone, Debug, PartialEq)]
pub struct CopyrightAudit {
    pub features: VectorFile,
    pub claimant: Vec<i64>,
    pub tau: f64,
    pub hash: HashKind,
}

impl CopyrightAudit {
    fn validate(&self, spec: &FxpSpec) -> Result<(), AuditError> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(AuditError::Domain(format!("tau {} outside [0, 1]", self.tau)));
        }
        if self.features.scale_factor != spec.scale_factor {
            return Err(AuditError::Domain(format!(
                "features use scale {}, model uses {}",
                self.features.scale_factor, spec.scale_factor
            )));
        }
        if self.features.shape.len() != 2 || self.features.shape[1] != self.claimant.len() {
            return Err(AuditError::Dimension(format!(
                "features {:?} vs claimant of length {}",
                self.features.shape,
                self.claimant.len()
            )));
        }
        Ok(())
    }
}

impl AuditFunction for CopyrightAudit {
    fn spec(&self) -> AuditSpec {
        AuditSpec::Copyright {
            tau: self.tau,
            items: self.features.shape.first().copied().unwrap_or(0),
            dim: self.claimant.len(),
            claimant: claimant_digest(self.hash, &self.claimant),
        }
    }

    fn run(&self, ctx: &AuditContext<'_>) -> Result<AuditRun, ProtocolError> {
        let spec = ctx.transcript.header.spec;
        self.validate(&spec)?;
        let tau_raw = spec.quantize_raw(self.tau).map_err(NnError::from)?;
        let rows = self.features.rows();
        let mut plain = PlainBackend::new(spec);
        let res = similarities(&mut plain, &rows, 0, &self.claimant, tau_raw)?;
        let circuits = rows
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(i, chunk)| {
                let mut be = CircuitBackend::new(spec, DEFAULT_COLS)?;
                similarities(&mut be, chunk, i * CHUNK, &self.claimant, tau_raw)?;
                Ok(be.builder.finish().map_err(NnError::from)?)
            })
            .collect::<Result<Vec<_>, AuditError>>()?;
        let similarities_raw: Vec<i64> = res.iter().map(|(s, _)| *s as i64).collect();
        let flagged: Vec<bool> = res.iter().map(|(_, f)| *f == 1).collect();
        let pass = !flagged.iter().any(|&f| f);
        Ok(AuditRun { output: AuditOutput::Copyright { tau_raw, similarities_raw, flagged, pass }, circuits })
    }
}

pub(super) fn structures(spec: &AuditSpec, t: &TrainingTranscript) -> Result<Vec<Structure>, ProtocolError> {
    let AuditSpec::Copyright { tau, items, dim, .. } = spec else { unreachable!() };
    if *dim == 0 {
        return Err(AuditError::Dimension("zero-dimensional features".into()).into());
    }
    let fspec = t.header.spec;
    // τ sits in a constant cell, which is part of the structure
    let tau_raw = fspec.quantize_raw(*tau).map_err(NnError::from)?;
    let mut unit = vec![0i64; *dim];
    unit[0] = fspec.sf();
    let mock = MockBackend::new(t.header.hash);
    chunked_structures(*items, CHUNK, |len| {
        let rows: Vec<&[i64]> = vec![&unit[..]; len];
        let mut be = CircuitBackend::new(fspec, DEFAULT_COLS)?;
        similarities(&mut be, &rows, 0, &unit, tau_raw)?;
        Ok(mock.structure(&be.builder.finish().map_err(NnError::from)?))
    })
}

pub(super) fn check(spec: &AuditSpec, out: &AuditOutput, t: &TrainingTranscript) -> Result<(), String> {
    let (AuditSpec::Copyright { tau, items, .. }, AuditOutput::Copyright { tau_raw, similarities_raw, flagged, pass }) =
        (spec, out)
    else {
        unreachable!()
    };
    if t.header.spec.quantize_raw(*tau).ok() != Some(*tau_raw) {
        return Err("tau_raw does not match tau".into());
    }
    if similarities_raw.len() != *items || flagged.len() != *items {
        return Err("wrong number of items".into());
    }
    if similarities_raw.iter().zip(flagged).any(|(s, f)| (*s >= *tau_raw) != *f) {
        return Err("flags inconsistent with similarities".into());
    }
    if *pass == flagged.iter().any(|&f| f) {
        return Err("verdict inconsistent with flags".into());
    }
    Ok(())
}

/// Per-item verdicts as CSV: `item,similarity_raw,similarity,verdict`.
pub fn write_copyright_csv(path: &Path, out: &AuditOutput, spec: &FxpSpec) -> Result<(), AuditError> {
    let AuditOutput::Copyright { similarities_raw, flagged, .. } = out else {
        return Err(AuditError::Domain("not a copyright report".into()));
    };
    let io = |e: csv::Error| AuditError::Domain(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["item", "similarity_raw", "similarity", "verdict"]).map_err(io)?;
    for (i, (s, f)) in similarities_raw.iter().zip(flagged).enumerate() {
        let verdict = if *f { "flag" } else { "pass" };
        w.write_record([i.to_string(), s.to_string(), spec.dequantize(*s).to_string(), verdict.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| AuditError::Domain(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn spec() -> FxpSpec {
        FxpSpec::recommender()
    }

    #[test]
    fn hint_is_exact_rounding() {
        let sf = 8192i128;
        for n in [1i128, 2, 3, 67108864, 67112141, 12345678, 1 << 40] {
            let w = inv_sqrt_hint(n, sf).unwrap();
            let exact = (sf * sf) as f64 / (n as f64).sqrt();
            assert!((w as f64 - exact).abs() <= 0.5 + 1e-9, "n={n} w={w} exact={exact}");
        }
    }

    #[test]
    fn identical_vectors_are_flagged() {
        let s = spec();
        let x: Vec<i64> = [0.3, -0.5, 0.81].iter().map(|v| s.quantize_raw(*v).unwrap()).collect();
        let sim = cosine_similarity(&s, &x, &x).unwrap();
        assert!((sim - s.sf()).abs() <= 2, "{sim}");
        let mut be = PlainBackend::new(s);
        let r = similarities(&mut be, &[&x[..]], 0, &x, s.quantize_raw(0.999).unwrap()).unwrap();
        assert_eq!(r[0].1, 1);
    }

    #[test]
    fn orthogonal_vectors_pass() {
        let s = spec();
        let sim = cosine_similarity(&s, &[8192, 0], &[0, 8192]).unwrap();
        assert_eq!(sim, 0);
        let mut be = PlainBackend::new(s);
        let r = similarities(&mut be, &[&[8192, 0][..]], 0, &[0, 8192], s.quantize_raw(0.1).unwrap()).unwrap();
        assert_eq!(r[0].1, 0);
    }

    #[test]
    fn boundary_is_inclusive() {
        // cos((1, 0), (0.6, 0.8)) = 0.6 exactly
        let s = spec();
        let x = [s.sf(), 0];
        let c = [s.quantize_raw(0.6).unwrap(), s.quantize_raw(0.8).unwrap()];
        let sim = cosine_similarity(&s, &x, &c).unwrap();
        let tau_raw = s.quantize_raw(0.6).unwrap();
        assert_eq!(sim, tau_raw);
        let mut be = PlainBackend::new(s);
        assert_eq!(similarities(&mut be, &[&x[..]], 0, &c, tau_raw).unwrap()[0].1, 1);
        assert_eq!(similarities(&mut be, &[&x[..]], 0, &c, tau_raw + 1).unwrap()[0].1, 0);
    }

    #[test]
    fn zero_norm_is_an_error() {
        assert!(matches!(cosine_similarity(&spec(), &[0, 0], &[8192, 0]), Err(AuditError::ZeroNorm { item: 0 })));
    }

    #[test]
    fn circuit_checks_and_tampered_hint_fails() {
        let s = spec();
        let rows: Vec<Vec<i64>> = vec![vec![5000, -3000, 6000], vec![100, 8000, -200]];
        let refs: Vec<&[i64]> = rows.iter().map(|r| &r[..]).collect();
        let mut be = CircuitBackend::new(s, DEFAULT_COLS).unwrap();
        similarities(&mut be, &refs, 0, &[8192, 0, 0], 4000).unwrap();
        let mut c = be.builder.finish().unwrap();
        assert!(c.check().unwrap().is_empty());
        let n: i128 = rows[0].iter().map(|&v| (v as i128) * (v as i128)).sum();
        let w = inv_sqrt_hint(n, 8192).unwrap();
        assert!(super::super::tamper_value(&mut c, w, w + 1));
        assert!(!c.check().unwrap().is_empty());
    }

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    fn exact_cos(x: &[i64], c: &[i64]) -> f64 {
        let big = |v: i64| BigRational::from_integer(BigInt::from(v));
        let dot = x.iter().zip(c).fold(big(0), |a, (p, q)| a + big(*p) * big(*q));
        let nx = x.iter().fold(big(0), |a, p| a + big(*p) * big(*p));
        let nc = c.iter().fold(big(0), |a, p| a + big(*p) * big(*p));
        // cos² as an exact rational, then one square root in f64
        let cos2 = &dot * &dot / (nx * nc);
        let f = (cos2.numer().to_string().parse::<f64>().unwrap() / cos2.denom().to_string().parse::<f64>().unwrap()).sqrt();
        if dot < big(0) {
            -f
        } else {
            f
        }
    }

    proptest! {
        #[test]
        fn unit_inputs_track_the_exact_similarity(
            a in proptest::collection::vec(-1.0f64..1.0, 4),
            b in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            prop_assume!(a.iter().any(|v| v.abs() > 0.1) && b.iter().any(|v| v.abs() > 0.1));
            let s = spec();
            let x: Vec<i64> = unit(&a).iter().map(|v| s.quantize_raw(*v).unwrap()).collect();
            let c: Vec<i64> = unit(&b).iter().map(|v| s.quantize_raw(*v).unwrap()).collect();
            let sim = cosine_similarity(&s, &x, &c).unwrap();
            let oracle = exact_cos(&x, &c);
            prop_assert!((sim as f64 / s.sf() as f64 - oracle).abs() <= 4.0 / s.sf() as f64, "{} vs {}", sim, oracle);
        }
    }
}
