//! Gauge-fixed smooth SVD continuation along closed loops.
//!
//! The primary stepper is discrete: at every accepted step a fresh pointwise
//! SVD is matched to the previous frame and each singular-vector pair is
//! rephased so that the gauge's overlap functional is real and nonnegative.
//! Continued to the limit of small steps this realises the smooth SVD whose
//! diagonal connection satisfies the gauge rule:
//!
//! * `Joint`: `H_jj + K_jj = 0`, minimising `∫ sqrt(‖U'‖² + ‖V'‖²) dt`;
//! * `Umvd`:  `H_jj = 0`;
//! * `Vmvd`:  `K_jj = 0`.
//!
//! [`integrate_dae`] integrates the differential-algebraic system
//! `U' = UH, V' = VK, Σ' = Re diag(U^* A' V)` directly and serves as an
//! independent check of the discrete stepper.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{polar_unitary, svd_point, ComplexMatrix, SvdTriple, C64};
use crate::model::{MatrixFamily, PathLoop, Point};

/// Rule fixing the diagonal phase freedom of a smooth SVD.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeMode {
    Joint,
    Umvd,
    Vmvd,
}

impl fmt::Display for GaugeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaugeMode::Joint => "joint",
            GaugeMode::Umvd => "umvd",
            GaugeMode::Vmvd => "vmvd",
        })
    }
}

impl FromStr for GaugeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "joint" | "jointmvd" => Ok(GaugeMode::Joint),
            "umvd" => Ok(GaugeMode::Umvd),
            "vmvd" => Ok(GaugeMode::Vmvd),
            _ => Err(Error::parse(
                "gauge",
                format!("unknown gauge '{s}' (joint|umvd|vmvd)"),
            )),
        }
    }
}

/// Minimum singular gap and minimum smallest singular value tolerated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub gap_min: f64,
    pub sig_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            gap_min: 1e-8,
            sig_min: 1e-10,
        }
    }
}

/// Fails with [`Error::NearDegenerate`] if the ordered singular values are not
/// separated by `gap_min` or the smallest one is below `sig_min`.
pub fn check_nondegenerate(sigma: &[f64], thr: &Thresholds) -> Result<()> {
    for j in 0..sigma.len().saturating_sub(1) {
        let gap = sigma[j] - sigma[j + 1];
        if gap < thr.gap_min {
            return Err(Error::NearDegenerate {
                lower: j,
                upper: Some(j + 1),
                value: gap,
                threshold: thr.gap_min,
            });
        }
    }
    let last = sigma.len() - 1;
    if sigma[last] < thr.sig_min {
        return Err(Error::NearDegenerate {
            lower: last,
            upper: None,
            value: sigma[last],
            threshold: thr.sig_min,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Smallest acceptable per-column overlap between consecutive frames.
    pub corr_min: f64,
    /// Overlap above which the step is allowed to grow.
    pub grow_corr: f64,
    pub growth: f64,
    /// Largest step in `t`; `None` means `1 / loop.samples`.
    pub max_step: Option<f64>,
    pub min_step: f64,
    pub thresholds: Thresholds,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            corr_min: 0.99,
            grow_corr: 0.999,
            growth: 1.25,
            max_step: None,
            min_step: 1e-9,
            thresholds: Thresholds::default(),
        }
    }
}

/// One accepted sample of a trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub xi: Point,
    pub svd: SvdTriple,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: f64,
    pub min_gap: f64,
    pub sigma_min: f64,
    pub min_correlation: f64,
}

/// Ordered gauge-fixed SVD samples along a loop.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationTrace {
    pub gauge: GaugeMode,
    pub samples: Vec<TraceSample>,
    /// One entry per accepted step (`samples.len() - 1`).
    pub diagnostics: Vec<StepDiagnostics>,
    pub closed: bool,
    pub rejected_steps: usize,
}

impl ContinuationTrace {
    pub fn n(&self) -> usize {
        self.samples[0].svd.n()
    }

    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn first(&self) -> &TraceSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TraceSample {
        self.samples.last().expect("non-empty trace")
    }

    /// `(U(0)^* U(1), V(0)^* V(1))`.
    pub fn endpoint_overlaps(&self) -> (ComplexMatrix, ComplexMatrix) {
        let (a, b) = (&self.first().svd, &self.last().svd);
        (a.u.adjoint_mul(&b.u), a.v.adjoint_mul(&b.v))
    }

    pub fn min_gap(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.svd.min_gap())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_sigma(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.svd.sigma_min())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_correlation(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.min_correlation)
            .fold(1.0, f64::min)
    }

    /// CSV with columns `t,x,y,sigma_1..sigma_n`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let n = self.n();
        let mut s = String::from("t,x,y");
        for j in 1..=n {
            let _ = write!(s, ",sigma_{j}");
        }
        s.push('\n');
        for smp in &self.samples {
            let _ = write!(s, "{},{},{}", smp.t, smp.xi[0], smp.xi[1]);
            for v in &smp.svd.sigma {
                let _ = write!(s, ",{v:e}");
            }
            s.push('\n');
        }
        s
    }

    /// Binary sidecar: magic `RLTRACE1`, `u64` n, `u64` sample count, then per
    /// sample `t, x, y, sigma[n], U[n×n], V[n×n]` with complex entries as
    /// row-major `(re, im)` pairs. All numbers little-endian.
    pub fn write_sidecar<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.n();
        w.write_all(SIDECAR_MAGIC)?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        for s in &self.samples {
            for v in [s.t, s.xi[0], s.xi[1]].iter().chain(&s.svd.sigma) {
                w.write_all(&v.to_le_bytes())?;
            }
            for m in [&s.svd.u, &s.svd.v] {
                for z in m.as_slice() {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }
}

const SIDECAR_MAGIC: &[u8; 8] = b"RLTRACE1";

/// A sample read back from a binary sidecar.
#[derive(Clone, Debug, PartialEq)]
pub struct SidecarSample {
    pub t: f64,
    pub xi: Point,
    pub svd: SvdTriple,
}

pub fn read_sidecar<R: Read>(mut r: R) -> Result<Vec<SidecarSample>> {
    let io_err = |e: io::Error| Error::parse("trace sidecar", e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != SIDECAR_MAGIC {
        return Err(Error::parse("trace sidecar", "bad magic"));
    }
    let mut word = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut word).map_err(io_err)?;
        Ok(u64::from_le_bytes(word))
    };
    let n = next_u64(&mut r)? as usize;
    let count = next_u64(&mut r)? as usize;
    if n == 0 || n > crate::linalg::MAX_DIM {
        return Err(Error::parse("trace sidecar", format!("bad dimension {n}")));
    }
    let mut f = || -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(io_err)?;
        Ok(f64::from_le_bytes(b))
    };
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let t = f()?;
        let xi = [f()?, f()?];
        let sigma = (0..n).map(|_| f()).collect::<Result<Vec<_>>>()?;
        let mut mats = Vec::with_capacity(2);
        for _ in 0..2 {
            let data = (0..n * n)
                .map(|_| Ok(C64::new(f()?, f()?)))
                .collect::<Result<Vec<_>>>()?;
            mats.push(ComplexMatrix::from_vec(n, n, data)?);
        }
        let v = mats.pop().unwrap();
        let u = mats.pop().unwrap();
        out.push(SidecarSample {
            t,
            xi,
            svd: SvdTriple { u, sigma, v },
        });
    }
    Ok(out)
}

/// Skew-Hermitian generators of `U' = UH`, `V' = VK`.
#[derive(Clone, Debug, PartialEq)]
pub struct HkPair {
    pub h: ComplexMatrix,
    pub k: ComplexMatrix,
}

/// Computes `H` and `K` from the current factors and `A'`.
///
/// With `W = U^* A' V`, the off-diagonal entries are
/// `H_jl = (s_l W_jl + s_j conj(W_lj)) / (s_l² − s_j²)` and
/// `K_jl = (s_l conj(W_lj) + s_j W_jl) / (s_l² − s_j²)`. The diagonal entries
/// are purely imaginary with `H_jj − K_jj = i Im(W_jj) / s_j`; the gauge fixes
/// the remaining freedom.
pub fn hk_from_derivative(
    t: &SvdTriple,
    adot: &ComplexMatrix,
    gauge: GaugeMode,
    thr: &Thresholds,
) -> Result<HkPair> {
    let n = t.n();
    if adot.rows() != n || adot.cols() != n {
        return Err(Error::Dimension(
            "derivative size differs from factors".into(),
        ));
    }
    check_nondegenerate(&t.sigma, thr)?;
    let s = &t.sigma;
    let w = t.u.adjoint_mul(&(adot * &t.v));
    let mut h = ComplexMatrix::zeros(n, n);
    let mut k = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for l in (j + 1)..n {
            let den = s[l] * s[l] - s[j] * s[j];
            let hjl = (w[(j, l)] * s[l] + w[(l, j)].conj() * s[j]) / den;
            let kjl = (w[(l, j)].conj() * s[l] + w[(j, l)] * s[j]) / den;
            h[(j, l)] = hjl;
            h[(l, j)] = -hjl.conj();
            k[(j, l)] = kjl;
            k[(l, j)] = -kjl.conj();
        }
        let m = w[(j, j)].im / s[j];
        let (hd, kd) = match gauge {
            GaugeMode::Joint => (0.5 * m, -0.5 * m),
            GaugeMode::Umvd => (0.0, -m),
            GaugeMode::Vmvd => (m, 0.0),
        };
        h[(j, j)] = C64::new(0.0, hd);
        k[(j, j)] = C64::new(0.0, kd);
    }
    Ok(HkPair { h, k })
}

/// The gauge's overlap functional for column `j`: `u_a^* u_b + v_a^* v_b`
/// (joint), `u_a^* u_b` (U-MVD) or `v_a^* v_b` (V-MVD).
pub fn gauge_overlap(a: &SvdTriple, b: &SvdTriple, j: usize, gauge: GaugeMode) -> C64 {
    match gauge {
        GaugeMode::Joint => a.u.column_dot(j, &b.u, j) + a.v.column_dot(j, &b.v, j),
        GaugeMode::Umvd => a.u.column_dot(j, &b.u, j),
        GaugeMode::Vmvd => a.v.column_dot(j, &b.v, j),
    }
}

/// Largest `|arg|` of the gauge overlaps between `prev` and `aligned`.
pub fn gauge_residual(prev: &SvdTriple, aligned: &SvdTriple, gauge: GaugeMode) -> f64 {
    (0..prev.n())
        .map(|j| gauge_overlap(prev, aligned, j, gauge).arg().abs())
        .fold(0.0, f64::max)
}

/// Result of matching a fresh SVD to the previous frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub svd: SvdTriple,
    /// `phi_j`; column pair `j` of the fresh SVD was multiplied by `e^{-i phi_j}`.
    pub phases: Vec<f64>,
    pub min_correlation: f64,
}

/// Rephases `fresh` column by column so that the gauge overlap with `prev`
/// becomes real and nonnegative.
///
/// Columns are matched by position; both triples carry distinct singular
/// values in descending order. Fails with [`Error::StepTooLarge`] when any
/// `|u_prev^* u_fresh|`, `|v_prev^* v_fresh|` or (joint gauge) half the
/// combined overlap falls below `corr_min`.
pub fn align_step(
    prev: &SvdTriple,
    fresh: &SvdTriple,
    gauge: GaugeMode,
    corr_min: f64,
) -> Result<Alignment> {
    let n = prev.n();
    if fresh.n() != n {
        return Err(Error::Dimension("frames of different size".into()));
    }
    let mut out = fresh.clone();
    let mut phases = Vec::with_capacity(n);
    let mut min_corr: f64 = 1.0;
    for j in 0..n {
        let cu = prev.u.column_dot(j, &fresh.u, j);
        let cv = prev.v.column_dot(j, &fresh.v, j);
        let g = match gauge {
            GaugeMode::Joint => 0.5 * (cu + cv),
            GaugeMode::Umvd => cu,
            GaugeMode::Vmvd => cv,
        };
        for c in [cu.norm(), cv.norm(), g.norm()] {
            min_corr = min_corr.min(c);
            if c.is_nan() || c < corr_min {
                return Err(Error::StepTooLarge {
                    column: j,
                    overlap: c,
                    corr_min,
                });
            }
        }
        let phi = g.arg();
        out.rephase_column(j, -phi);
        phases.push(phi);
    }
    Ok(Alignment {
        svd: out,
        phases,
        min_correlation: min_corr,
    })
}

fn fresh_svd(f: &MatrixFamily, l: &PathLoop, t: f64) -> Result<(Point, SvdTriple)> {
    let p = l.point(t);
    Ok((p.xi, svd_point(&f.eval(p.xi))?))
}

/// Continues the SVD of `A(gamma(t))` around the loop, starting from the
/// pointwise SVD at `t = 0`.
pub fn continue_loop(
    f: &MatrixFamily,
    l: &PathLoop,
    gauge: GaugeMode,
    opts: &ContinuationOptions,
) -> Result<ContinuationTrace> {
    let (_, start) = fresh_svd(f, l, 0.0)?;
    continue_loop_from(f, l, gauge, opts, start)
}

/// As [`continue_loop`] but from a caller-supplied start frame, which must be
/// an SVD of `A(gamma(0))`.
pub fn continue_loop_from(
    f: &MatrixFamily,
    l: &PathLoop,
    gauge: GaugeMode,
    opts: &ContinuationOptions,
    start: SvdTriple,
) -> Result<ContinuationTrace> {
    if f.n() != start.n() {
        return Err(Error::Dimension(
            "start frame size differs from family".into(),
        ));
    }
    let thr = &opts.thresholds;
    let (xi0, fresh0) = fresh_svd(f, l, 0.0)?;
    check_nondegenerate(&fresh0.sigma, thr)?;
    if start
        .reconstruct()
        .sub(&fresh0.reconstruct())
        .frobenius_norm()
        > 1e-10 * (1.0 + fresh0.sigma[0])
    {
        return Err(Error::Contract(
            "start frame is not an SVD of A(gamma(0))".into(),
        ));
    }
    let max_step = opts.max_step.unwrap_or(1.0 / l.samples as f64).min(1.0);

    let mut samples = vec![TraceSample {
        t: 0.0,
        xi: xi0,
        svd: start,
    }];
    let mut diagnostics = Vec::new();
    let mut rejected = 0;
    let mut t = 0.0;
    let mut dt = max_step;

    while t < 1.0 {
        let step = dt.min(1.0 - t);
        let t_next = if 1.0 - (t + step) <= 1e-14 {
            1.0
        } else {
            t + step
        };
        let prev = &samples.last().unwrap().svd;
        let attempt = fresh_svd(f, l, t_next).and_then(|(xi, fresh)| {
            check_nondegenerate(&fresh.sigma, thr)?;
            let al = align_step(prev, &fresh, gauge, opts.corr_min)?;
            Ok((xi, al))
        });
        match attempt {
            Ok((xi, al)) => {
                diagnostics.push(StepDiagnostics {
                    step: t_next - t,
                    min_gap: al.svd.min_gap(),
                    sigma_min: al.svd.sigma_min(),
                    min_correlation: al.min_correlation,
                });
                samples.push(TraceSample {
                    t: t_next,
                    xi,
                    svd: al.svd,
                });
                t = t_next;
                if al.min_correlation >= opts.grow_corr {
                    dt = (step * opts.growth).min(max_step);
                } else {
                    dt = step;
                }
            }
            Err(e @ (Error::StepTooLarge { .. } | Error::NearDegenerate { .. })) => {
                rejected += 1;
                dt = 0.5 * step;
                if dt < opts.min_step {
                    return Err(Error::ContinuationFailed {
                        last_t: t,
                        reason: e.to_string(),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }

    Ok(ContinuationTrace {
        gauge,
        samples,
        diagnostics,
        closed: true,
        rejected_steps: rejected,
    })
}

struct DaeState {
    u: ComplexMatrix,
    v: ComplexMatrix,
    sigma: Vec<f64>,
}

impl DaeState {
    fn triple(&self) -> SvdTriple {
        SvdTriple {
            u: self.u.clone(),
            sigma: self.sigma.clone(),
            v: self.v.clone(),
        }
    }

    fn advanced(&self, h: f64, d: &DaeState) -> DaeState {
        let mut u = self.u.clone();
        u.axpy(C64::new(h, 0.0), &d.u);
        let mut v = self.v.clone();
        v.axpy(C64::new(h, 0.0), &d.v);
        let sigma = self
            .sigma
            .iter()
            .zip(&d.sigma)
            .map(|(a, b)| a + h * b)
            .collect();
        DaeState { u, v, sigma }
    }
}

/// Integrates `U' = UH, V' = VK, Σ' = Re diag(U^* A' V)` with classical RK4
/// on `steps` uniform steps, projecting `U` and `V` back onto the unitary
/// group after every step.
pub fn integrate_dae(
    f: &MatrixFamily,
    l: &PathLoop,
    gauge: GaugeMode,
    steps: usize,
    opts: &ContinuationOptions,
) -> Result<ContinuationTrace> {
    if steps == 0 {
        return Err(Error::Domain(
            "integrate_dae needs at least one step".into(),
        ));
    }
    let thr = &opts.thresholds;
    let (xi0, s0) = fresh_svd(f, l, 0.0)?;
    check_nondegenerate(&s0.sigma, thr)?;

    let rhs = |t: f64, st: &DaeState| -> Result<DaeState> {
        let p = l.point(t);
        let adot = f.eval_derivative(p.xi, p.tangent);
        let tr = st.triple();
        let hk = hk_from_derivative(&tr, &adot, gauge, thr)?;
        let w = st.u.adjoint_mul(&(&adot * &st.v));
        Ok(DaeState {
            u: &st.u * &hk.h,
            v: &st.v * &hk.k,
            sigma: (0..tr.n()).map(|j| w[(j, j)].re).collect(),
        })
    };

    let mut samples = vec![TraceSample {
        t: 0.0,
        xi: xi0,
        svd: s0.clone(),
    }];
    let mut diagnostics = Vec::with_capacity(steps);
    let mut state = DaeState {
        u: s0.u,
        v: s0.v,
        sigma: s0.sigma,
    };
    let h = 1.0 / steps as f64;
    for k in 0..steps {
        let t = k as f64 * h;
        let fail = |e: Error| Error::ContinuationFailed {
            last_t: t,
            reason: e.to_string(),
        };
        let k1 = rhs(t, &state).map_err(fail)?;
        let k2 = rhs(t + 0.5 * h, &state.advanced(0.5 * h, &k1)).map_err(fail)?;
        let k3 = rhs(t + 0.5 * h, &state.advanced(0.5 * h, &k2)).map_err(fail)?;
        let k4 = rhs(t + h, &state.advanced(h, &k3)).map_err(fail)?;
        let mut next = state.advanced(h / 6.0, &k1);
        next = next.advanced(h / 3.0, &k2);
        next = next.advanced(h / 3.0, &k3);
        next = next.advanced(h / 6.0, &k4);
        next.u = polar_unitary(&next.u)?;
        next.v = polar_unitary(&next.v)?;

        let t_next = if k + 1 == steps {
            1.0
        } else {
            (k + 1) as f64 * h
        };
        let (xi, fresh) = fresh_svd(f, l, t_next)?;
        check_nondegenerate(&fresh.sigma, thr).map_err(fail)?;
        let prev = samples.last().unwrap().svd.clone();
        let frame = next.triple();
        let min_corr = (0..frame.n())
            .flat_map(|j| {
                [
                    prev.u.column_dot(j, &frame.u, j).norm(),
                    prev.v.column_dot(j, &frame.v, j).norm(),
                ]
            })
            .fold(1.0, f64::min);
        diagnostics.push(StepDiagnostics {
            step: h,
            min_gap: frame.min_gap(),
            sigma_min: frame.sigma_min(),
            min_correlation: min_corr,
        });
        samples.push(TraceSample {
            t: t_next,
            xi,
            svd: frame,
        });
        state = next;
    }

    Ok(ContinuationTrace {
        gauge,
        samples,
        diagnostics,
        closed: true,
        rejected_steps: 0,
    })
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}
