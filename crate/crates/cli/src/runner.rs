//! Job execution. Each job yields a [`JobReport`]; a numeric error is
//! recorded on the job and does not stop the run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use tmcert_core::certificates::{
    cert_big_resonator, cert_cuboid, cert_sixlegs, cert_te_resonator, cert_tem, cert_tm, cert_tripode, cube_inclusion,
    kappa, tm_quotient,
};
use tmcert_core::geometry::{preset_domain, PresetParams};
use tmcert_core::modes::{rayleigh_quotient, testfield, write_csv, Profile2D, QuadratureGrid, Support, TestFieldKind, VectorField3};
use tmcert_core::spectra::laplacian_eigs;
use tmcert_core::{BoundaryCondition, EigenResult, FEFunction, Preset, Quantity, Rect};

use crate::config::{Job, JobKind, Numerics, RunConfig};
use crate::report::{JobReport, JobStatus, QuotientSummary, SpectrumSummary};

const PI2: f64 = PI * PI;

fn param(job: &Job, name: &str) -> Result<f64> {
    job.params
        .get(name)
        .copied()
        .ok_or_else(|| anyhow!("missing parameter params.{name}"))
}

fn param_or(job: &Job, name: &str, default: f64) -> f64 {
    job.params.get(name).copied().unwrap_or(default)
}

/// Solve the Laplacian on a preset with the job's numerics.
pub fn preset_spectrum(preset: Preset, params: &BTreeMap<String, f64>, bc: BoundaryCondition, n: &Numerics) -> Result<EigenResult> {
    let mut p: PresetParams = params.clone();
    p.entry("T".into()).or_insert(n.t);
    let dom = preset_domain(preset, &p)?;
    Ok(laplacian_eigs(&dom, bc, n.k, n.h, Some(n.t))?)
}

fn summarize(preset: Preset, r: &EigenResult) -> SpectrumSummary {
    SpectrumSummary {
        preset: preset.name().to_string(),
        bc: r.bc.unwrap_or(BoundaryCondition::Dirichlet),
        h: r.h.unwrap_or(f64::NAN),
        truncation: r.truncation,
        eigenvalues: r.eigenvalues.clone(),
        residuals: r.residuals.clone(),
        extrapolated: r.extrapolated.clone(),
        discretization_error: r.discretization_error.clone(),
        truncation_sensitivity: r.truncation_sensitivity.clone(),
    }
}

/// Nodal values of the computed eigenfunctions, one column per mode.
pub fn write_eigenfunctions<W: Write>(r: &EigenResult, mut w: W) -> Result<()> {
    let funcs: Vec<FEFunction> = (0..r.eigenvalues.len()).filter_map(|i| r.eigenfunction(i)).collect();
    let Some(first) = funcs.first() else {
        bail!("no eigenfunctions to export");
    };
    let mut header = String::from("x,y");
    for i in 0..funcs.len() {
        header.push_str(&format!(",u{i}"));
    }
    writeln!(w, "{header}")?;
    for (n, p) in first.mesh.nodes.iter().enumerate() {
        write!(w, "{:?},{:?}", p[0], p[1])?;
        for f in &funcs {
            write!(w, ",{:?}", f.values[n])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn create(out: &Path, rel: &str) -> Result<BufWriter<File>> {
    let path = out.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn guide(job: &Job) -> Quantity {
    Quantity::input(param_or(job, "lambda_N", PI2))
}

/// `λ` from `params[name]` when given, otherwise a Dirichlet FEM solve on
/// `preset` with the job's numerics.
fn lambda_or_fem(job: &Job, name: &str, preset: Preset, report: &mut JobReport) -> Result<(Quantity, Option<EigenResult>)> {
    if let Some(&v) = job.params.get(name) {
        return Ok((Quantity::input(v), None));
    }
    let n = Numerics { k: 1, ..job.numerics };
    let r = preset_spectrum(preset, &BTreeMap::new(), BoundaryCondition::Dirichlet, &n)?;
    report.spectrum = Some(summarize(preset, &r));
    Ok((Quantity::fem(r.eigenvalues[0], r.uncertainty(0)), Some(r)))
}

fn run_certificate(job: &Job, id: &str, report: &mut JobReport) -> Result<Option<EigenResult>> {
    let mut fem = None;
    let cert = match id {
        "cuboid" => cert_cuboid(param(job, "a")?, param(job, "L")?, guide(job))?,
        "te_resonator" => cert_te_resonator(Quantity::input(param(job, "lambda_N_res")?), param(job, "L")?, guide(job), &[])?,
        "tem" => cert_tem(param(job, "L")?, guide(job))?,
        "tm" => cert_tm(Quantity::input(param(job, "lambda_D_res")?), guide(job), param(job, "L")?)?.0,
        "big_resonator" => cert_big_resonator(Quantity::input(param(job, "lambda_D_domain")?), guide(job))?,
        "cube_inclusion" => cube_inclusion(param(job, "a_cube")?, guide(job))?,
        "sixlegs" => {
            let (lam, r) = lambda_or_fem(job, "lambda_X", Preset::XShape, report)?;
            fem = r;
            let kp = kappa(PI)?;
            let k5 = kappa((5.0 * PI2).sqrt())?;
            report.kappa = vec![kp, k5];
            cert_sixlegs(lam, &kp, &k5)?
        }
        "tripode" => {
            let (lam, r) = lambda_or_fem(job, "lambda_L", Preset::LShape, report)?;
            fem = r;
            let (k, c) = cert_tripode(lam, job.numerics.n_series)?;
            report.tripode = Some(k);
            c
        }
        other => bail!("unknown certificate id {other:?}"),
    };
    report.certificates.push(cert);
    Ok(fem)
}

fn rect_of(job: &Job) -> Result<(f64, f64, Rect)> {
    let a = param_or(job, "a", 1.0);
    let b = param_or(job, "b", 1.0);
    Ok((a, b, Rect::new(0.0, 0.0, a, b)?))
}

/// Test field with closed-form section data and its expected quotient.
fn field_for(job: &Job, id: &str) -> Result<(VectorField3, f64)> {
    let l = param_or(job, "L", 1.0);
    Ok(match id {
        "cuboid" => {
            let a = param_or(job, "a", 1.0);
            let b = param_or(job, "b", 1.0);
            (testfield(&TestFieldKind::CuboidTe { a, b, l })?, PI2 / (a * a) + PI2 / (l * l))
        }
        "te_resonator" => {
            let (a, b, rect) = rect_of(job)?;
            let (k, ln) = if a >= b { (PI / a, PI2 / (a * a)) } else { (PI / b, PI2 / (b * b)) };
            let along_x = a >= b;
            let phi = Profile2D::closed(
                move |p| (k * if along_x { p[0] } else { p[1] }).cos(),
                move |p| {
                    let s = -k * (k * if along_x { p[0] } else { p[1] }).sin();
                    if along_x {
                        [s, 0.0]
                    } else {
                        [0.0, s]
                    }
                },
            )
            .on_rect(rect);
            (testfield(&TestFieldKind::TeResonator { phi_n: phi, l })?, ln + PI2 / (l * l))
        }
        "tem" => {
            let phi = Profile2D::coaxial(param_or(job, "r_in", 0.5), param_or(job, "r_out", 1.5))?;
            (testfield(&TestFieldKind::TemResonator { phi, l })?, PI2 / (l * l))
        }
        "tm" => {
            let (a, b, rect) = rect_of(job)?;
            let (ka, kb) = (PI / a, PI / b);
            let phi = Profile2D::closed(
                move |p| (ka * p[0]).sin() * (kb * p[1]).sin(),
                move |p| [ka * (ka * p[0]).cos() * (kb * p[1]).sin(), kb * (ka * p[0]).sin() * (kb * p[1]).cos()],
            )
            .on_rect(rect);
            let ld = ka * ka + kb * kb;
            (testfield(&TestFieldKind::TmResonator { phi_d: phi, lambda_d: ld, l })?, tm_quotient(ld, l))
        }
        other => bail!("unknown test field {other:?}"),
    })
}

fn sample_points(support: &Support, n: usize) -> Result<Vec<[f64; 3]>> {
    let Support::Bounded { lo, hi } = *support else {
        bail!("field has unbounded support");
    };
    let n = n.max(2);
    let mut pts = Vec::with_capacity(n * n * n);
    let at = |d: usize, i: usize| lo[d] + (hi[d] - lo[d]) * i as f64 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                pts.push([at(0, i), at(1, j), at(2, k)]);
            }
        }
    }
    Ok(pts)
}

fn run_modes_export(job: &Job, id: &str, index: usize, out: &Path, report: &mut JobReport) -> Result<()> {
    let (e, expected) = field_for(job, id)?;
    let n = param_or(job, "quad_n", 24.0).max(2.0) as usize;
    let grid = QuadratureGrid::for_support(&e.support, [n; 3])?;
    let q = rayleigh_quotient(&e, &grid, tmcert_core::modes::DEFAULT_H_FD)?;
    report.quotient = Some(QuotientSummary {
        field: e.name.clone(),
        value: q.value,
        error: q.error,
        expected: Some(expected),
    });
    let rel = job.outputs.csv.clone().unwrap_or_else(|| format!("job{index}_{id}.csv"));
    let pts = sample_points(&e.support, param_or(job, "samples", 11.0) as usize)?;
    let mut w = create(out, &rel)?;
    write_csv(&e, &pts, &mut w)?;
    w.flush()?;
    report.artifacts.push(rel);
    Ok(())
}

fn export_eigen(job: &Job, index: usize, out: &Path, r: &EigenResult, report: &mut JobReport, default: bool) -> Result<()> {
    let rel = match (&job.outputs.csv, default) {
        (Some(p), _) => p.clone(),
        (None, true) => format!("job{index}_eigenfunctions.csv"),
        (None, false) => return Ok(()),
    };
    let mut w = create(out, &rel)?;
    write_eigenfunctions(r, &mut w)?;
    w.flush()?;
    report.artifacts.push(rel);
    Ok(())
}

fn execute(job: &Job, index: usize, out: &Path, report: &mut JobReport) -> Result<()> {
    match job.kind {
        JobKind::Spectrum => {
            let preset = job.preset().ok_or_else(|| anyhow!("spectrum job needs a preset"))?;
            let bc = job.bc.unwrap_or(BoundaryCondition::Dirichlet);
            let r = preset_spectrum(preset, &job.params, bc, &job.numerics)?;
            report.spectrum = Some(summarize(preset, &r));
            export_eigen(job, index, out, &r, report, false)
        }
        JobKind::Kappa => {
            report.kappa = vec![kappa(param(job, "a")?)?];
            Ok(())
        }
        JobKind::Certificate => {
            let id = job.id.as_deref().ok_or_else(|| anyhow!("certificate job needs an id"))?;
            let fem = run_certificate(job, id, report)?;
            if let Some(r) = fem {
                export_eigen(job, index, out, &r, report, false)?;
            }
            Ok(())
        }
        JobKind::ModesExport => {
            let id = job.id.as_deref().ok_or_else(|| anyhow!("modes_export job needs an id"))?;
            run_modes_export(job, id, index, out, report)
        }
        JobKind::FullPipeline => {
            let id = match job.preset() {
                Some(Preset::LShape) => "tripode",
                Some(Preset::XShape) => "sixlegs",
                _ => bail!("full_pipeline needs l_shape or x_shape"),
            };
            let n = Numerics { k: 1, ..job.numerics };
            let preset = job.preset().expect("checked above");
            let r = preset_spectrum(preset, &BTreeMap::new(), BoundaryCondition::Dirichlet, &n)?;
            report.spectrum = Some(summarize(preset, &r));
            let lam = Quantity::fem(r.eigenvalues[0], r.uncertainty(0));
            match id {
                "tripode" => {
                    let (k, c) = cert_tripode(lam, job.numerics.n_series)?;
                    report.tripode = Some(k);
                    report.certificates.push(c);
                }
                _ => {
                    let kp = kappa(PI)?;
                    let k5 = kappa((5.0 * PI2).sqrt())?;
                    report.kappa = vec![kp, k5];
                    report.certificates.push(cert_sixlegs(lam, &kp, &k5)?);
                }
            }
            export_eigen(job, index, out, &r, report, true)
        }
    }
}

/// Runs one job; errors are captured in the report.
pub fn run_job(job: &Job, index: usize, out: &Path) -> JobReport {
    let mut report = JobReport::new(index, job.label(index), job.kind);
    if let Err(e) = execute(job, index, out, &mut report) {
        report.status = JobStatus::Error;
        report.error = Some(format!("{e:#}"));
    }
    report
}

/// Runs every job with at most `workers` in flight. The result follows
/// config order whatever the completion order.
pub fn run_config(cfg: &RunConfig, out: &Path, workers: usize) -> Vec<JobReport> {
    let n = cfg.jobs.len();
    let slots: Vec<Mutex<Option<JobReport>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = run_job(&cfg.jobs[i], i, out);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every job ran"))
        .collect()
}
