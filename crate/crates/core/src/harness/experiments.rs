use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use crate::clifford::make_gammas;
use crate::error::Result;
use crate::lattice::LatticeBasis;
use crate::operators::{
    build_laplacian_power, build_multiplication, build_multiplier_with, build_tensor_sum, compose,
    quantized_derivative, Laplacian,
};
use crate::spectra::{
    decreasing_rearrangement, little_ideal_diagnostic_with, orthogonal_merge, singular_values,
    weyl_estimate, DiagnosticPolicy, SingularSpectrum, WeylEstimate, WindowPolicy,
};
use crate::symbols::{
    dbar_symbol_density, gradient, kappa, kappa_prime, kappa_prime_quadrature, kappa_quadrature,
    vector_lp_norm, SphereFunction, SphereQuadrature, SymbolTensor, TorusFunction,
};

use super::config::{Experiment, ExperimentConfig, OperatorSpec, PolarGrid, TensorTerm};
use super::report::{rel_error, Gate, Report};

pub const FLAG_EXTRAPOLATED: &str = "reference extrapolated by locality";

/// Runs one configured experiment; gates are evaluated, nothing is written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let policy = cfg.window_policy();
    let lap = cfg.laplacian;
    let name = cfg.name();
    let mut report = match &cfg.experiment {
        Experiment::Clifford { dims, tol } => run_clifford(name, dims, *tol)?,
        Experiment::E1 {
            dims,
            tol,
            ratio_tol,
        } => run_e1_constants(name, dims, *tol, *ratio_tol)?,
        Experiment::E2 {
            d,
            g,
            t_range,
            tol,
            grid,
        } => run_e2_rearrangement_law(name, *d, g, *t_range, *tol, grid)?,
        Experiment::E3 {
            d,
            g,
            radius,
            tol,
            slope_tol,
            stability,
            point_budget,
        } => run_e3_diagonal_weyl(
            name,
            &E3Params {
                d: *d,
                g,
                radius: *radius,
                tol: *tol,
                slope_tol: *slope_tol,
                stability: *stability,
                point_budget: *point_budget,
            },
            &policy,
            lap,
        )?,
        Experiment::E4 {
            intervals,
            g,
            radius,
            tol,
            ratio_tol,
            band_limit,
            stability,
        } => run_e4_indicator_localization(
            name,
            &E4Params {
                intervals,
                g,
                radius: *radius,
                tol: *tol,
                ratio_tol: *ratio_tol,
                band_limit: *band_limit,
                stability: *stability,
            },
            &policy,
            lap,
        )?,
        Experiment::E5 {
            terms,
            radius,
            tol,
            expect_little,
            little_threshold,
            stability,
        } => run_e5_tensor_sums(
            name,
            &E5Params {
                terms,
                radius: *radius,
                tol: *tol,
                expect_little: *expect_little,
                little_threshold: *little_threshold,
                stability: *stability,
            },
            &policy,
            lap,
        )?,
        Experiment::E6 {
            f,
            g,
            radii,
            ratio,
            product_range,
        } => run_e6_commutator_decay(name, f, g, *radii, *ratio, *product_range, &policy, lap)?,
        Experiment::E7 {
            f,
            radius,
            tol,
            hermitian_tol,
            cross_check_tol,
            stability,
        } => run_e7_quantized_derivative(
            name,
            &E7Params {
                f,
                radius: *radius,
                tol: *tol,
                hermitian_tol: *hermitian_tol,
                cross_check_tol: *cross_check_tol,
                stability: *stability,
            },
            &policy,
        )?,
        Experiment::E8 { len, tol } => run_e8_sequence_lemmas(name, *len, *tol)?,
    };
    if matches!(
        cfg.experiment,
        Experiment::E3 { .. }
            | Experiment::E4 { .. }
            | Experiment::E5 { .. }
            | Experiment::E6 { .. }
    ) {
        report.metric(
            "inhomogeneous_laplacian",
            f64::from(u8::from(lap == Laplacian::Inhomogeneous)),
        );
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    if let Some(max) = cfg.max_runtime_s {
        report.gate(Gate::at_most("runtime_s", report.runtime_s, max));
    }
    report.finish();
    Ok(report)
}

fn inv_root(d: usize) -> f64 {
    (d as f64).powf(-1.0 / d as f64)
}

pub fn run_clifford(name: &str, dims: &[usize], tol: f64) -> Result<Report> {
    let mut r = Report::new("clifford", name, None);
    let (mut anti, mut herm) = (0.0f64, 0.0f64);
    let mut sizes_ok = true;
    for &d in dims {
        let rep = make_gammas(d)?;
        let a = rep.anticommutator_residual();
        let h = rep.hermiticity_residual();
        r.metric(format!("anticommutator_residual_d{d}"), a);
        r.metric(format!("hermiticity_residual_d{d}"), h);
        anti = anti.max(a);
        herm = herm.max(h);
        sizes_ok &= rep.spin_dim() == 1 << (d / 2) && rep.gammas().len() == d;
    }
    r.gate(Gate::at_most("anticommutator_residual", anti, tol));
    r.gate(Gate::at_most("hermiticity_residual", herm, tol));
    r.gate(Gate::holds("spin_dimension", sizes_ok));
    Ok(r)
}

pub fn run_e1_constants(name: &str, dims: &[usize], tol: f64, ratio_tol: f64) -> Result<Report> {
    let mut r = Report::new("E1", name, None);
    r.reference_provenance = "gamma-function closed form vs sphere quadrature".into();
    let (mut worst, mut worst_ratio) = (0.0f64, 0.0f64);
    for &d in dims {
        let quad = SphereQuadrature::new(d);
        let (k, kq) = (kappa(d), kappa_quadrature(d, &quad));
        let (kp, kpq) = (kappa_prime(d), kappa_prime_quadrature(d, &quad));
        let n = (1u64 << (d / 2)) as f64;
        let ratio_err = rel_error(k / kp, n.powf(1.0 / d as f64));
        r.metric(format!("kappa_d{d}"), k);
        r.metric(format!("kappa_prime_d{d}"), kp);
        r.metric(format!("kappa_rel_error_d{d}"), rel_error(kq, k));
        r.metric(format!("kappa_prime_rel_error_d{d}"), rel_error(kpq, kp));
        r.metric(format!("ratio_rel_error_d{d}"), ratio_err);
        worst = worst.max(rel_error(kq, k)).max(rel_error(kpq, kp));
        worst_ratio = worst_ratio.max(ratio_err);
    }
    r.gate(Gate::at_most("quadrature_rel_error", worst, tol));
    r.gate(Gate::at_most("ratio_rel_error", worst_ratio, ratio_tol));
    Ok(r)
}

/// Weighted samples of `|g(x/|x|)| / |x|` on geometric shells times a sphere rule.
/// The core `|x| < r_min` comes back as one block of its exact measure, valued above
/// every shell.
fn polar_samples(d: usize, g: &SphereFunction, grid: &PolarGrid) -> Vec<(f64, f64)> {
    let quad = SphereQuadrature::new(d);
    let gs: Vec<(f64, f64)> = quad
        .nodes()
        .zip(quad.weights())
        .map(|(s, &w)| (g.eval(s).norm(), w))
        .collect();
    let q = (grid.r_max / grid.r_min).powf(1.0 / grid.radial as f64);
    let mut samples = Vec::with_capacity(grid.radial * gs.len() + 1);
    let df = d as f64;
    for i in 0..grid.radial {
        let (a, b) = (
            grid.r_min * q.powi(i as i32),
            grid.r_min * q.powi(i as i32 + 1),
        );
        let shell = (b.powf(df) - a.powf(df)) / df;
        let mid = (a * b).sqrt();
        samples.extend(gs.iter().map(|&(v, w)| (v / mid, w * shell)));
    }
    let core = quad.total_weight() * grid.r_min.powf(df) / df;
    samples.push((f64::MAX, core));
    samples
}

pub fn run_e2_rearrangement_law(
    name: &str,
    d: usize,
    g: &SphereFunction,
    t_range: [f64; 2],
    tol: f64,
    grid: &PolarGrid,
) -> Result<Report> {
    let mut r = Report::new("E2", name, Some(d));
    let quad = SphereQuadrature::new(d);
    let c = inv_root(d) * g.lp_norm(d as f64, &quad)?;
    let mu = decreasing_rearrangement(&polar_samples(d, g, grid))?;
    let n = 200;
    let mut worst = 0.0f64;
    let mut scaled = Vec::with_capacity(n);
    for j in 0..n {
        let t = t_range[0] * (t_range[1] / t_range[0]).powf(j as f64 / (n - 1) as f64);
        let exact = c * t.powf(-1.0 / d as f64);
        worst = worst.max(rel_error(mu.eval(t), exact));
        scaled.push(t.powf(1.0 / d as f64) * mu.eval(t));
    }
    scaled.sort_by(f64::total_cmp);
    r.coefficient = Some(scaled[n / 2]);
    r.set_reference(c, "d^{-1/d} ‖g‖_d with the norm by sphere quadrature");
    r.metric("max_rel_deviation", worst);
    r.metric("samples", (grid.radial * quad.len()) as f64);
    r.gate(Gate::at_most("max_rel_deviation", worst, tol));
    Ok(r)
}

/// Spectrum and estimate at one radius.
struct Measured {
    spectrum: SingularSpectrum,
    estimate: WeylEstimate,
}

/// Fills the estimate and keeps the spectrum. A rerun at `factor · radius` supplies the stability gate.
fn weyl_core(
    r: &mut Report,
    radius: f64,
    stability: Option<f64>,
    mut at: impl FnMut(f64) -> Result<Measured>,
) -> Result<()> {
    let m = at(radius)?;
    r.radius = Some(radius);
    r.set_estimate(&m.estimate);
    r.metric("matrix_dim", m.spectrum.dim() as f64);
    r.keep_spectrum("spectrum", m.estimate.p, m.spectrum);
    if let Some(factor) = stability {
        let big = at(factor * radius)?;
        let delta = (big.estimate.coefficient - m.estimate.coefficient).abs();
        r.metric("stability_radius", factor * radius);
        r.metric("stability_coefficient", big.estimate.coefficient);
        r.metric("stability_spread", big.estimate.spread);
        r.metric("stability_matrix_dim", big.spectrum.dim() as f64);
        r.gate(Gate::at_most("stability", delta, big.estimate.spread));
    }
    Ok(())
}

pub struct E3Params<'a> {
    pub d: usize,
    pub g: &'a SphereFunction,
    pub radius: f64,
    pub tol: f64,
    pub slope_tol: Option<f64>,
    pub stability: Option<f64>,
    pub point_budget: usize,
}

pub fn run_e3_diagonal_weyl(
    name: &str,
    p: &E3Params,
    policy: &WindowPolicy,
    lap: Laplacian,
) -> Result<Report> {
    let d = p.d;
    let mut r = Report::new("E3", name, Some(d));
    let quad = SphereQuadrature::new(d);
    let reference = inv_root(d) * p.g.lp_norm(d as f64, &quad)?;
    weyl_core(&mut r, p.radius, p.stability, |radius| {
        let basis = Arc::new(LatticeBasis::enumerate_with_budget(
            d,
            radius,
            p.point_budget,
        )?);
        let spectrum = singular_values(&build_multiplier_with(&basis, p.g, -1.0, lap)?)?;
        let estimate = weyl_estimate(&spectrum, d as f64, policy)?;
        Ok(Measured { spectrum, estimate })
    })?;
    r.check_reference(
        reference,
        "d^{-1/d} ‖g‖_d, norm by sphere quadrature",
        p.tol,
    );
    if let Some(tol) = p.slope_tol {
        let slope = r.slope.unwrap_or(f64::NAN);
        r.gate(Gate::at_most("slope", (slope + 1.0 / d as f64).abs(), tol));
    }
    Ok(r)
}

pub struct E4Params<'a> {
    pub intervals: &'a [[f64; 2]],
    pub g: &'a SphereFunction,
    pub radius: f64,
    pub tol: f64,
    pub ratio_tol: f64,
    pub band_limit: Option<usize>,
    pub stability: Option<f64>,
}

pub fn run_e4_indicator_localization(
    name: &str,
    p: &E4Params,
    policy: &WindowPolicy,
    lap: Laplacian,
) -> Result<Report> {
    let d = p.intervals.len();
    let df = d as f64;
    let mut r = Report::new("E4", name, Some(d));
    let quad = SphereQuadrature::new(d);
    let measure: f64 = p.intervals.iter().map(|[a, b]| b - a).product();
    let g_norm = p.g.lp_norm(df, &quad)?;
    let reference = inv_root(d) / (2.0 * PI) * measure.powf(1.0 / df) * g_norm;
    let intervals: Vec<(f64, f64)> = p.intervals.iter().map(|&[a, b]| (a, b)).collect();
    let mut chi_error = Vec::new();
    weyl_core(&mut r, p.radius, p.stability, |radius| {
        let basis = Arc::new(LatticeBasis::enumerate(d, radius)?);
        let band = p.band_limit.unwrap_or((2.0 * radius).ceil() as usize);
        let (chi, err) = crate::symbols::box_indicator(&intervals, band)?;
        chi_error.push(err);
        let op = compose(
            &build_multiplication(&basis, &chi)?,
            &build_multiplier_with(&basis, p.g, -1.0, lap)?,
        )?;
        let spectrum = singular_values(&op)?;
        let estimate = weyl_estimate(&spectrum, df, policy)?;
        Ok(Measured { spectrum, estimate })
    })?;
    r.metric("indicator_l2_error", chi_error[0]);
    r.check_reference(
        reference,
        "d^{-1/d} (2π)^{-1} m(I)^{1/d} ‖g‖_d, norm by sphere quadrature",
        p.tol,
    );

    // the same multiplier on the whole torus
    let basis = Arc::new(LatticeBasis::enumerate(d, p.radius)?);
    let full = weyl_estimate(
        &singular_values(&build_multiplier_with(&basis, p.g, -1.0, lap)?)?,
        df,
        policy,
    )?;
    let ratio = r.coefficient.unwrap_or(0.0) / full.coefficient;
    let ratio_ref = (measure / (2.0 * PI).powi(d as i32)).powf(1.0 / df);
    r.metric("full_torus_coefficient", full.coefficient);
    r.metric("ratio", ratio);
    r.metric("ratio_reference", ratio_ref);
    r.gate(Gate::at_most(
        "ratio_rel_error",
        rel_error(ratio, ratio_ref),
        p.ratio_tol,
    ));
    Ok(r)
}

pub struct E5Params<'a> {
    pub terms: &'a [TensorTerm],
    pub radius: f64,
    pub tol: f64,
    pub expect_little: bool,
    pub little_threshold: f64,
    pub stability: Option<f64>,
}

pub fn run_e5_tensor_sums(
    name: &str,
    p: &E5Params,
    policy: &WindowPolicy,
    lap: Laplacian,
) -> Result<Report> {
    let pairs: Vec<(TorusFunction, SphereFunction)> =
        p.terms.iter().map(|t| (t.f.clone(), t.g.clone())).collect();
    let symbol = SymbolTensor::new(pairs.clone())?;
    let d = symbol.dim();
    let mut r = Report::new("E5", name, Some(d));
    let quad = SphereQuadrature::new(d);
    let sym_norm = symbol.lp_norm(d as f64, symbol.default_grid(), &quad)?;
    let reference = inv_root(d) / (2.0 * PI) * sym_norm;
    r.metric("symbol_norm", sym_norm);
    let stability = if p.expect_little { None } else { p.stability };
    weyl_core(&mut r, p.radius, stability, |radius| {
        let basis = Arc::new(LatticeBasis::enumerate(d, radius)?);
        let spectrum = singular_values(&build_tensor_sum(&basis, &pairs, -1.0, lap)?)?;
        let estimate = weyl_estimate(&spectrum, d as f64, policy)?;
        Ok(Measured { spectrum, estimate })
    })?;
    let provenance = "d^{-1/d} (2π)^{-1} ‖Σ f_n ⊗ g_n‖_d by torus-grid × sphere quadrature";
    if p.expect_little {
        r.set_reference(reference, provenance);
        let spectrum = &r.spectra[0].spectrum;
        let diag = little_ideal_diagnostic_with(
            spectrum,
            d as f64,
            &DiagnosticPolicy {
                trusted: *policy,
                ..DiagnosticPolicy::default()
            },
        )?;
        r.metric("rho", diag.rho);
        r.metric("degenerate", f64::from(u8::from(diag.degenerate)));
        if diag.degenerate {
            r.flags.push("degenerate".into());
        }
        if diag.is_little(p.little_threshold) {
            r.flags.push("little-ideal".into());
        }
        r.gate(Gate::holds(
            "little_ideal",
            diag.is_little(p.little_threshold),
        ));
    } else {
        r.check_reference(reference, provenance, p.tol);
    }
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
pub fn run_e6_commutator_decay(
    name: &str,
    f: &TorusFunction,
    g: &SphereFunction,
    radii: [f64; 2],
    ratio: f64,
    product_range: [f64; 2],
    policy: &WindowPolicy,
    lap: Laplacian,
) -> Result<Report> {
    let d = f.dim();
    let p = d as f64;
    let mut r = Report::new("E6", name, Some(d));
    let diag_policy = DiagnosticPolicy {
        trusted: *policy,
        ..DiagnosticPolicy::default()
    };
    let comm_spec = OperatorSpec::Commutator {
        f: f.clone(),
        g: g.clone(),
        alpha: -1.0,
    };
    let mut rho_c = [0.0; 2];
    let mut rho_p = [0.0; 2];
    for (slot, &radius) in radii.iter().enumerate() {
        let basis = Arc::new(LatticeBasis::enumerate(d, radius)?);
        let comm = singular_values(&comm_spec.build(&basis, lap)?)?;
        let product = compose(
            &compose(
                &build_multiplication(&basis, f)?,
                &build_multiplier_with(&basis, g, 0.0, lap)?,
            )?,
            &build_laplacian_power(&basis, -1.0, lap),
        )?;
        let product = singular_values(&product)?;
        let dc = little_ideal_diagnostic_with(&comm, p, &diag_policy)?;
        let dp = little_ideal_diagnostic_with(&product, p, &diag_policy)?;
        rho_c[slot] = dc.rho;
        rho_p[slot] = dp.rho;
        let tag = format!("R{radius}");
        r.metric(format!("rho_commutator_{tag}"), dc.rho);
        r.metric(format!("rho_product_{tag}"), dp.rho);
        r.metric(format!("commutator_early_median_{tag}"), dc.early_median);
        r.keep_spectrum(format!("commutator-{tag}"), p, comm);
        r.keep_spectrum(format!("product-{tag}"), p, product);
        r.gate(Gate::within(
            format!("rho_product_{tag}"),
            dp.rho,
            product_range[0],
            product_range[1],
        ));
    }
    r.radius = Some(radii[1]);
    r.coefficient = Some(rho_c[1]);
    r.reference_provenance =
        "little-ideal diagnostic ρ of the commutator and of the product".into();
    r.gate(Gate::below(
        "rho_commutator_over_product",
        rho_c[1] / rho_p[1],
        ratio,
    ));
    r.gate(Gate::below(
        "rho_commutator_decrease",
        rho_c[1] - rho_c[0],
        0.0,
    ));
    Ok(r)
}

pub struct E7Params<'a> {
    pub f: &'a TorusFunction,
    pub radius: f64,
    pub tol: f64,
    pub hermitian_tol: f64,
    pub cross_check_tol: f64,
    pub stability: Option<f64>,
}

pub fn run_e7_quantized_derivative(
    name: &str,
    p: &E7Params,
    policy: &WindowPolicy,
) -> Result<Report> {
    let d = p.f.dim();
    let df = d as f64;
    let mut r = Report::new("E7", name, Some(d));
    let rep = make_gammas(d)?;
    let grad_norm = vector_lp_norm(&gradient(p.f), df)?;
    let reference = kappa(d) * grad_norm;
    // the matrix symbol has N equal singular values at every point
    let density = dbar_symbol_density(p.f)?;
    let quad = SphereQuadrature::new(d);
    let spin = rep.spin_dim() as f64;
    let cross = spin.powf(1.0 / df) * density.lp_norm(df, density.default_grid(), &quad)?
        / (df.powf(1.0 / df) * 2.0 * PI);
    r.metric("gradient_norm", grad_norm);
    r.metric("symbol_density_reference", cross);
    r.gate(Gate::at_most(
        "reference_cross_check",
        rel_error(cross, reference),
        p.cross_check_tol,
    ));

    let mut residual = f64::NAN;
    weyl_core(&mut r, p.radius, p.stability, |radius| {
        let basis = Arc::new(LatticeBasis::enumerate(d, radius)?);
        let op = quantized_derivative(&basis, &rep, p.f)?;
        if residual.is_nan() {
            residual = op.hermiticity_residual();
        }
        let spectrum = singular_values(&op)?;
        let estimate = weyl_estimate(&spectrum, df, policy)?;
        Ok(Measured { spectrum, estimate })
    })?;
    r.metric("hermiticity_residual", residual);
    r.gate(Gate::at_most(
        "hermiticity_residual",
        residual,
        p.hermitian_tol,
    ));

    let basis = Arc::new(LatticeBasis::enumerate(d, p.radius)?);
    let constant = singular_values(&quantized_derivative(
        &basis,
        &rep,
        &TorusFunction::constant(d, 1.0),
    )?)?;
    r.gate(Gate::holds("constant_spectrum_zero", constant.is_zero()));

    r.check_reference(
        reference,
        "κ_d closed form × ‖∇f‖_d by grid quadrature; torus analogue, extrapolated by locality",
        p.tol,
    );
    r.flags.push(FLAG_EXTRAPOLATED.into());
    Ok(r)
}

pub fn run_e8_sequence_lemmas(name: &str, len: usize, tol: f64) -> Result<Report> {
    let mut r = Report::new("E8", name, None);
    let policy = WindowPolicy::default();
    let power =
        |c: f64, p: f64| SingularSpectrum::from_fn(len, "power", move |k| c * k.powf(-1.0 / p));

    // ℓ_p combination of merged power laws
    let cases: [(&[f64], f64); 3] = [
        (&[1.0, 1.0, 1.0], 2.0),
        (&[1.0, 2.0, 0.5], 2.0),
        (&[1.0, 1.0], 3.0),
    ];
    let mut worst = 0.0f64;
    for (i, (coeffs, p)) in cases.iter().enumerate() {
        let parts: Vec<_> = coeffs.iter().map(|&c| power(c, *p)).collect();
        let e = weyl_estimate(&orthogonal_merge(&parts), *p, &policy)?;
        let expect = coeffs.iter().map(|c| c.powf(*p)).sum::<f64>().powf(1.0 / p);
        let err = rel_error(e.coefficient, expect);
        r.metric(format!("merge_{i}_coefficient"), e.coefficient);
        r.metric(format!("merge_{i}_reference"), expect);
        worst = worst.max(err);
    }
    r.gate(Gate::at_most("merge_rel_error", worst, tol));

    // perturbation by a log-damped sequence of the little ideal
    let base = power(1.0, 2.0);
    let tail = SingularSpectrum::from_fn(len, "tail", |k| k.powf(-1.5) / (k + 1.0).ln());
    let sum = SingularSpectrum::from_values(
        base.values().iter().zip(tail.values()).map(|(a, b)| a + b),
        "sum",
    );
    let e_base = weyl_estimate(&base, 2.0, &policy)?;
    let e_sum = weyl_estimate(&sum, 2.0, &policy)?;
    let rho_tail = little_ideal_diagnostic_with(&tail, 2.0, &DiagnosticPolicy::default())?.rho;
    let shift = (e_sum.coefficient - e_base.coefficient).abs();
    r.metric("perturbation_shift", shift);
    r.metric("perturbation_spread", e_sum.spread);
    r.metric("perturbation_rho", rho_tail);
    r.gate(Gate::below("perturbation_rho", rho_tail, 0.5));
    r.gate(Gate::below("perturbation_shift", shift, e_sum.spread));

    // a Cauchy family s_n → s in the weak quasi-norm, coefficients 2 − 1/n → 2
    let limit = power(2.0, 2.0);
    let e_limit = weyl_estimate(&limit, 2.0, &policy)?;
    let mut distances = Vec::new();
    let mut last_gap = f64::NAN;
    let mut lipschitz_ok = true;
    for n in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        let s_n = SingularSpectrum::from_fn(len, "family", move |k| {
            (2.0 - 1.0 / n) * k.powf(-0.5) + k.powf(-0.5) / (n * (k + 1.0).ln())
        });
        let dist = s_n
            .values()
            .iter()
            .zip(limit.values())
            .enumerate()
            .map(|(k, (a, b))| ((k + 1) as f64).sqrt() * (a - b).abs())
            .fold(0.0, f64::max);
        let e_n = weyl_estimate(&s_n, 2.0, &policy)?;
        last_gap = (e_n.coefficient - e_limit.coefficient).abs();
        // the windowed median moves by at most the weak distance
        lipschitz_ok &= last_gap <= dist + 1e-12;
        distances.push(dist);
    }
    r.metric("continuity_final_distance", *distances.last().unwrap());
    r.metric("continuity_final_gap", last_gap);
    r.metric("continuity_limit_coefficient", e_limit.coefficient);
    r.gate(Gate::holds(
        "continuity_cauchy",
        distances.windows(2).all(|w| w[1] < w[0]),
    ));
    r.gate(Gate::holds("continuity_lipschitz", lipschitz_ok));
    r.gate(Gate::at_most(
        "continuity_limit_rel_error",
        rel_error(e_limit.coefficient, 2.0),
        tol,
    ));
    r.gate(Gate::at_most("continuity_final_gap", last_gap, tol * 2.0));
    Ok(r)
}
