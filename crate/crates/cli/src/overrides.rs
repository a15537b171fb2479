use anyhow::{bail, Result};
use weylab_core::harness::{Experiment, ExperimentConfig};
use weylab_core::symbols::{Monomial, SphereFunction};
use weylab_core::WindowPolicy;

/// Command-line overrides layered on top of a suite config.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub d: Option<usize>,
    pub radius: Option<f64>,
    pub window: Option<(usize, usize)>,
}

/// Moves a polynomial to `S^{d-1}` by padding or dropping trailing variables.
fn redim(g: &SphereFunction, d: usize) -> Result<SphereFunction> {
    match g {
        SphereFunction::Polynomial { terms, .. } => {
            let mut out = Vec::with_capacity(terms.len());
            for m in terms {
                if m.exponents.iter().skip(d).any(|&e| e != 0) {
                    bail!("g uses a coordinate beyond s_{d}; cannot move it to d = {d}");
                }
                let mut exponents = m.exponents.clone();
                exponents.resize(d, 0);
                out.push(Monomial {
                    exponents,
                    coeff: m.coeff,
                });
            }
            Ok(SphereFunction::polynomial(d, out)?)
        }
        _ if d == 2 => Ok(g.clone()),
        _ => bail!("only polynomial sphere functions can change dimension"),
    }
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(d) = self.d {
            if d < 2 {
                bail!("--d must be at least 2");
            }
            match &mut cfg.experiment {
                Experiment::Clifford { dims, .. } | Experiment::E1 { dims, .. } => *dims = vec![d],
                Experiment::E2 { d: dd, g, .. } | Experiment::E3 { d: dd, g, .. } => {
                    *g = redim(g, d)?;
                    *dd = d;
                }
                _ => {}
            }
        }
        if let Some(r) = self.radius {
            if r.is_nan() || r < 1.0 {
                bail!("--radius must be at least 1");
            }
            match &mut cfg.experiment {
                Experiment::E3 { radius, .. }
                | Experiment::E4 { radius, .. }
                | Experiment::E5 { radius, .. }
                | Experiment::E7 { radius, .. } => *radius = r,
                _ => {}
            }
        }
        if let Some((lo, hi)) = self.window {
            cfg.window = Some(WindowPolicy {
                explicit: Some((lo, hi)),
                ..cfg.window_policy()
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e3(g: SphereFunction) -> ExperimentConfig {
        ExperimentConfig::new(Experiment::E3 {
            d: g.dim(),
            g,
            radius: 20.0,
            tol: 0.03,
            slope_tol: None,
            stability: None,
            point_budget: 10_000,
        })
    }

    #[test]
    fn dimension_override_pads_polynomials() {
        let mut cfg = e3(SphereFunction::coordinate_power(2, 0, 2));
        Overrides {
            d: Some(3),
            radius: Some(8.0),
            window: Some((5, 50)),
        }
        .apply(&mut cfg)
        .unwrap();
        cfg.validate().unwrap();
        let Experiment::E3 { d, g, radius, .. } = &cfg.experiment else {
            unreachable!()
        };
        assert_eq!((*d, *radius), (3, 8.0));
        assert_eq!(*g, SphereFunction::coordinate_power(3, 0, 2));
        assert_eq!(cfg.window_policy().explicit, Some((5, 50)));
    }

    #[test]
    fn dropping_a_used_coordinate_fails() {
        let mut cfg = e3(SphereFunction::coordinate_power(3, 2, 1));
        let ov = Overrides {
            d: Some(2),
            ..Default::default()
        };
        assert!(ov.apply(&mut cfg).is_err());
        let mut arc = e3(SphereFunction::arc(0.0, 1.0).unwrap());
        assert!(ov.apply(&mut arc).is_ok());
    }
}
