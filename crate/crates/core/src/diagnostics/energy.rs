use super::norms::{grad_sq, h1, hminus1_with, integral, l2, l2_sq};
use crate::dynamics::{molecular_field, SimState};
use crate::error::{Error, Result};
use crate::grid::bulk_potential_F;
use crate::linsolve::interior_divergence;
use std::io::{BufRead, Write};

/// Scalar diagnostics of one state.
///
/// With `λ`, `η` general, the lifted energy is `½‖v‖² + λ(½‖∇d̂‖² + ∫F(d))`
/// and the dissipation `ν‖∇v‖² + λη‖Δd̂ − f(d)‖²`; `elastic_hat` and
/// `potential` carry the factor `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub kinetic: f64,
    pub elastic_hat: f64,
    pub potential: f64,
    pub e_hat: f64,
    pub d2: f64,
    /// `‖∇v‖² + ‖Δd̃ − f(d)‖²`.
    pub a_p: f64,
    /// `λ/(2η) ‖∂_t d_E‖² + λ‖∂_t d_E‖ + ‖g‖²_{H⁻¹}/ν`.
    pub r_t: f64,
    pub max_abs_d: f64,
    pub div_v_norm: f64,
    /// `‖−Δd + f(d)‖` over interior nodes.
    pub residual_stationary: f64,
    pub norm_v_l2: f64,
    pub norm_v_h1: f64,
    /// Distances to the state's reference equilibrium, NaN without one.
    pub dist_d_l2: f64,
    pub dist_d_h1: f64,
}

pub const CSV_HEADER: &str = "t,kinetic,elastic_hat,potential,E_hat,D2,A_P,r_t,max_abs_d,div_v_norm,residual_stationary,norm_v_L2,norm_v_H1,dist_d_L2,dist_d_H1";

impl EnergyRecord {
    fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.kinetic,
            self.elastic_hat,
            self.potential,
            self.e_hat,
            self.d2,
            self.a_p,
            self.r_t,
            self.max_abs_d,
            self.div_v_norm,
            self.residual_stationary,
            self.norm_v_l2,
            self.norm_v_h1,
            self.dist_d_l2,
            self.dist_d_h1,
        ]
    }

    fn from_values(v: [f64; 15]) -> Self {
        Self {
            t: v[0],
            kinetic: v[1],
            elastic_hat: v[2],
            potential: v[3],
            e_hat: v[4],
            d2: v[5],
            a_p: v[6],
            r_t: v[7],
            max_abs_d: v[8],
            div_v_norm: v[9],
            residual_stationary: v[10],
            norm_v_l2: v[11],
            norm_v_h1: v[12],
            dist_d_l2: v[13],
            dist_d_h1: v[14],
        }
    }

    /// One CSV row with 17 significant digits per value.
    pub fn csv_row(&self) -> String {
        self.values()
            .iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// `‖∇v‖`, recovered from the stored norms.
    pub fn grad_v(&self) -> f64 {
        (self.norm_v_h1.powi(2) - self.norm_v_l2.powi(2))
            .max(0.0)
            .sqrt()
    }
}

fn interior_l2_sq(f: &crate::grid::VectorField2D) -> f64 {
    let g = f.grid();
    g.hx()
        * g.hy()
        * f.comps
            .iter()
            .map(|c| c.data().iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
}

/// All diagnostics of `s`; a pure function of the state.
pub fn energy_record(s: &SimState) -> EnergyRecord {
    let p = s.params;
    let d_hat = s.d.sub(&s.lifting.d_e).expect("state fields share a grid");
    let d_tilde = s.d.sub(&s.lifting.d_p).expect("state fields share a grid");
    let kinetic = 0.5 * l2_sq(&s.v);
    let elastic_hat = 0.5 * p.lambda * grad_sq(&d_hat);
    let potential = p.lambda * integral(&bulk_potential_F(&s.d, p.eps).expect("validated eps"));
    let grad_v_sq = grad_sq(&s.v);
    let mu_hat = interior_l2_sq(&molecular_field(&d_hat, &s.d, p.eps));
    let mu_tilde = interior_l2_sq(&molecular_field(&d_tilde, &s.d, p.eps));
    let stationary = interior_l2_sq(&molecular_field(&s.d, &s.d, p.eps)).sqrt();
    let dte = l2(&s.lifting.dt_d_e);
    let g_dual = if s.forcing.has_body_force() {
        hminus1_with(s.solver(), &s.forcing.body_at(s.t)).unwrap_or(f64::NAN)
    } else {
        0.0
    };
    let r_t = p.lambda / (2.0 * p.eta) * dte * dte + p.lambda * dte + g_dual * g_dual / p.nu;
    let (dist_l2, dist_h1) = match &s.reference {
        Some(psi) => {
            let diff = s.d.sub(psi).expect("reference shares the grid");
            (l2(&diff), h1(&diff))
        }
        None => (f64::NAN, f64::NAN),
    };
    EnergyRecord {
        t: s.t,
        kinetic,
        elastic_hat,
        potential,
        e_hat: kinetic + elastic_hat + potential,
        d2: p.nu * grad_v_sq + p.lambda * p.eta * mu_hat,
        a_p: grad_v_sq + mu_tilde,
        r_t,
        max_abs_d: s.d.max_norm(),
        div_v_norm: l2(&interior_divergence(&s.v)),
        residual_stationary: stationary,
        norm_v_l2: l2(&s.v),
        norm_v_h1: h1(&s.v),
        dist_d_l2: dist_l2,
        dist_d_h1: dist_h1,
    }
}

/// `(Ê_{k+1} − Ê_k)/dt + ½ D²_{k+1} − r_{k+1}`; the discrete energy
/// inequality holds where this is at most a small slack.
pub fn energy_inequality_residual(prev: &EnergyRecord, next: &EnergyRecord, dt: f64) -> f64 {
    (next.e_hat - prev.e_hat) / dt + 0.5 * next.d2 - next.r_t
}

pub fn write_records_csv<W: Write>(out: &mut W, records: &[EnergyRecord]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Reads records written by [`write_records_csv`].
pub fn read_records_csv<R: BufRead>(input: R) -> Result<Vec<EnergyRecord>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty records file".into()))??;
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse(format!(
            "unexpected header `{}`",
            header.trim()
        )));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", k + 2)))?;
        let arr: [f64; 15] = vals.try_into().map_err(|v: Vec<f64>| {
            Error::Parse(format!("row {}: {} columns, expected 15", k + 2, v.len()))
        })?;
        out.push(EnergyRecord::from_values(arr));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Forcing, PhysParams};
    use crate::grid::{BoundaryTrace, Grid, VectorField2D};
    use crate::lifting::elliptic_lift;

    fn state(d0: VectorField2D, trace: BoundaryTrace) -> SimState {
        let g = *d0.grid();
        SimState::init(
            VectorField2D::zeros(g),
            d0,
            Forcing::autonomous(trace).unwrap(),
            PhysParams::default(),
            1e-3,
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_has_zero_energy() {
        let g = Grid::unit_square(10).unwrap();
        let s = state(
            VectorField2D::constant(g, [0.6, 0.8]),
            BoundaryTrace::constant(g, [0.6, 0.8]),
        );
        let r = energy_record(&s);
        assert!(r.e_hat.abs() < 1e-28 && r.d2 < 1e-25 && r.a_p < 1e-25);
        assert_eq!(r.r_t, 0.0);
    }

    #[test]
    fn harmonic_non_unit_director_has_only_potential_energy() {
        let g = Grid::unit_square(12).unwrap();
        let trace = BoundaryTrace::from_fn(g, |x, y| {
            let a = x - y;
            [0.8 * a.cos(), 0.8 * a.sin()]
        });
        let de = elliptic_lift(&trace).unwrap();
        let s = state(de, trace);
        let r = energy_record(&s);
        assert!(r.kinetic == 0.0 && r.elastic_hat < 1e-25);
        assert!(r.potential > 0.0);
        assert_eq!(r.e_hat, r.kinetic + r.elastic_hat + r.potential);
    }

    #[test]
    fn record_is_a_pure_function_of_state() {
        let g = Grid::unit_square(12).unwrap();
        let d0 = VectorField2D::from_fn(g, |x, y| {
            let a = 0.3 * (x * y * 9.0).sin();
            [a.cos(), a.sin()]
        });
        let tr = d0.trace();
        let s = state(d0, tr).step().unwrap();
        let copy = s.clone();
        assert_eq!(energy_record(&s).csv_row(), energy_record(&copy).csv_row());
    }

    #[test]
    fn residual_examples() {
        let g = Grid::unit_square(10).unwrap();
        let s = state(
            VectorField2D::constant(g, [1.0, 0.0]),
            BoundaryTrace::constant(g, [1.0, 0.0]),
        );
        let r = energy_record(&s);
        assert!(energy_inequality_residual(&r, &r, 0.1).abs() < 1e-20);
        let up = EnergyRecord {
            e_hat: r.e_hat + 1.0,
            ..r
        };
        assert!(energy_inequality_residual(&r, &up, 0.1) > 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::unit_square(10).unwrap();
        let d0 = VectorField2D::from_fn(g, |x, _| [(0.2 * x).cos(), (0.2 * x).sin()]);
        let tr = d0.trace();
        let s = state(d0, tr.clone())
            .with_reference(elliptic_lift(&tr).unwrap())
            .unwrap();
        let r = energy_record(&s.step().unwrap());
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[r, r]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let back = read_records_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![r, r]);
        assert!(read_records_csv("t,x\n1,2\n".as_bytes()).is_err());
    }
}
