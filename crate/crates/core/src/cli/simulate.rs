//! Trajectory output as CSV.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::dynamics::{momentum_maps, Sample};
use crate::error::Result;
use crate::multibody::{body_invariants, run, total_momentum_maps};
use crate::mutual::affine_invariants_matrix;

use super::scenario::Prepared;

/// Column names, in output order.
pub fn header(n: usize, bodies: usize, pairs: &[(usize, usize)]) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for k in 1..=bodies {
        cols.push(format!("E_kin_{k}"));
        for a in 1..=n {
            cols.push(format!("K{a}_{k}"));
        }
        cols.push(format!("detphi_{k}"));
        for i in 1..=n {
            for j in i + 1..=n {
                cols.push(format!("S{i}{j}_{k}"));
            }
        }
    }
    for &(k, l) in pairs {
        for a in 1..=n {
            cols.push(format!("M{a}_{}_{}", k + 1, l + 1));
        }
    }
    cols.push("E_total".into());
    for i in 1..=n {
        cols.push(format!("p_{i}"));
    }
    for i in 1..=n {
        for j in 1..=n {
            cols.push(format!("Jtot_{i}{j}"));
        }
    }
    cols
}

/// One output row for a recorded sample.
pub fn row(prep: &Prepared, sample: &Sample) -> Result<Vec<f64>> {
    let h = &prep.hamiltonian;
    let (eta, g) = (&h.eta, &h.g);
    let n = eta.dim();
    let origin = DVector::zeros(n);
    let kinetic = h.kinetic_energies(&sample.states)?;
    let mut out = vec![sample.t];
    for (k, (s, t)) in sample.states.iter().zip(kinetic).enumerate() {
        out.push(t);
        out.extend(body_invariants(&s.phi, eta, g));
        out.push(s.phi.determinant());
        let maps = momentum_maps(s, eta, g, &origin).map_err(|e| e.in_body(k + 1))?;
        let spin = maps.s.matrix();
        for i in 0..n {
            for j in i + 1..n {
                out.push(spin[(i, j)]);
            }
        }
    }
    for &(k, l) in &prep.pairs {
        let m = affine_invariants_matrix(&sample.states[k].phi, &sample.states[l].phi, n)
            .map_err(|e| e.in_body(l + 1))?;
        out.extend(m);
    }
    out.push(sample.energy);
    let (p, maps) = total_momentum_maps(&sample.states, eta, g, &origin)?;
    out.extend(p.iter());
    let j = maps.j_total.matrix();
    for i in 0..n {
        for c in 0..n {
            out.push(j[(i, c)]);
        }
    }
    Ok(out)
}

/// Runs the scenario and renders the full CSV text.
pub fn simulate_csv(prep: &Prepared) -> Result<String> {
    let samples = run(
        &prep.hamiltonian,
        prep.integrator,
        &prep.states,
        prep.dt,
        prep.t_end,
        prep.stride,
    )?;
    let n = prep.hamiltonian.eta.dim();
    let mut text = header(n, prep.states.len(), &prep.pairs).join(",");
    text.push('\n');
    for sample in &samples {
        let values = row(prep, sample)?;
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!(
                "non-finite value in column {} at t = {}",
                bad + 1,
                sample.t
            )));
        }
        let line: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(text, "{}", line.join(","));
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let cols = header(2, 2, &[(0, 1)]);
        assert_eq!(
            cols,
            [
                "t", "E_kin_1", "K1_1", "K2_1", "detphi_1", "S12_1", "E_kin_2", "K1_2", "K2_2", "detphi_2", "S12_2",
                "M1_1_2", "M2_1_2", "E_total", "p_1", "p_2", "Jtot_11", "Jtot_12", "Jtot_21", "Jtot_22"
            ]
        );
    }
}
